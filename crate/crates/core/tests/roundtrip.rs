mod common;

use anp::syntax::{parse_spec, serialize};
use common::{corpus, random_document, CORPUS};
use proptest::prelude::*;

#[test]
fn corpus_files_round_trip() {
    for name in CORPUS {
        let doc = parse_spec(&corpus(name)).unwrap();
        let text = serialize(&doc);
        let back = parse_spec(&text).unwrap_or_else(|e| panic!("{name}: {e:?}\n{text}"));
        assert_eq!(back, doc, "{name}");
        assert_eq!(serialize(&back), text, "{name}: serializer is not stable");
    }
}

#[test]
fn empty_document_serializes_to_nothing() {
    let doc = parse_spec("").unwrap();
    assert_eq!(serialize(&doc), "");
}

proptest! {
    #[test]
    fn random_documents_round_trip(seed in any::<u64>()) {
        let text = random_document(seed);
        let doc = parse_spec(&text).unwrap_or_else(|e| panic!("generated document rejected: {e:?}\n{text}"));
        let printed = serialize(&doc);
        let back = parse_spec(&printed).unwrap_or_else(|e| panic!("{e:?}\n{printed}"));
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(serialize(&back), printed);
    }

    #[test]
    fn errors_point_inside_the_input(seed in any::<u64>(), cut in 0.0f64..1.0, junk in "[{};@a-z=>]{1,3}") {
        let mut text = random_document(seed);
        let mut at = (text.len() as f64 * cut) as usize;
        while !text.is_char_boundary(at) {
            at -= 1;
        }
        text.insert_str(at, &junk);
        if let Err(errs) = parse_spec(&text) {
            let lines = text.lines().count().max(1);
            for e in errs {
                let s = e.span();
                prop_assert!(s.line >= 1 && s.line <= lines + 1, "{e} outside {lines} lines");
                prop_assert!(s.start <= text.len());
            }
        }
    }
}
