use std::fmt;

/// Position of a construct in the source text; lines and columns count from 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub line: usize,
    pub col: usize,
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    /// Identifiers, numbers and dotted names such as `auch.p.1`.
    Word(String),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest first.
const PUNCTS: [&str; 23] = [
    ":=", "==", "=>", "->", "<=", "{", "}", "(", ")", "[", "]", ",", ";", ":", ".", "@", "*", "|", "&", "=", "-", "?",
    "/",
];

fn word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `src` into tokens; `#` starts a comment. Errors carry the offending position.
pub fn lex(src: &str) -> Result<Vec<Token>, (Span, String)> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if word_char(c) {
            let mut j = i;
            while j < chars.len() {
                let d = chars[j].1;
                // A dot joins axiom-style names such as `fresh.2`: lowercase first segment, no space.
                let dotted = d == '.' && c.is_ascii_lowercase() && chars.get(j + 1).is_some_and(|n| word_char(n.1));
                if word_char(d) || dotted {
                    j += 1;
                } else {
                    break;
                }
            }
            let end = chars.get(j).map_or(src.len(), |p| p.0);
            out.push(Token {
                tok: Tok::Word(src[off..end].to_string()),
                span: Span { line, col: start_col, start: off, end },
            });
            col += j - i;
            i = j;
            continue;
        }
        let rest = &src[off..];
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                out.push(Token { tok: Tok::Punct(p), span: Span { line, col, start: off, end: off + p.len() } });
                col += p.len();
                i += p.len();
            }
            None => {
                return Err((
                    Span { line, col, start: off, end: off + c.len_utf8() },
                    format!("unexpected character `{c}`"),
                ))
            }
        }
    }
    out.push(Token { tok: Tok::Eof, span: Span { line, col, start: src.len(), end: src.len() } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn dotted_names_and_arrows() {
        let toks = words("step 3: auch.p.1 [ch := v2] gives a -vis-> b; # note");
        assert!(toks.contains(&Tok::Word("auch.p.1".into())));
        assert!(toks.contains(&Tok::Punct(":=")));
        assert!(toks.contains(&Tok::Punct("->")));
        assert!(!toks.iter().any(|t| *t == Tok::Word("note".into())));
    }

    #[test]
    fn binder_dot_is_separate() {
        let toks = words("exists x. gen(x)@S");
        assert_eq!(toks[1], Tok::Word("x".into()));
        assert_eq!(toks[2], Tok::Punct("."));
    }

    #[test]
    fn spans_track_lines() {
        let toks = lex("a\n  b").unwrap();
        assert_eq!((toks[1].span.line, toks[1].span.col), (2, 3));
        assert!(lex("a $ b").is_err());
    }
}
