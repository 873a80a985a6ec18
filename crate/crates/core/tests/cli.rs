use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(format!("{name}.anp"))
}

fn anp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anp")).args(args).env("ANP_COLOR", "0").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn temp(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("anp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_corpus() {
    for name in ["cr_sig", "cap", "handshake", "handshake_two_round", "cyber3"] {
        let o = anp(&["validate", corpus(name).to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
        assert!(stdout(&o).ends_with("ok\n"));
    }
    let o = anp(&["validate", corpus("cap").to_str().unwrap()]);
    assert!(stdout(&o).contains("network cap: 5 nodes, 6 channels"));
}

#[test]
fn validate_reports_dangling_channel() {
    let path = corpus("broken");
    let o = anp(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.starts_with(&format!("{}:3:1: error: ", path.display())), "{err}");
    assert!(err.contains("`Z`"));
    assert!(!err.contains('\x1b'));
}

#[test]
fn validate_syntax_error_exits_two() {
    let p = temp("syntax.anp", "network n {\n  nodes A B;\n}\n");
    let o = anp(&["validate", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains(":2:"), "{}", stderr(&o));
}

#[test]
fn validate_unsound_run_exits_one() {
    let text =
        "network n {\n  principals A;\n  nodes P;\n  types cyb;\n  control A: P;\n  channel pp: P -cyb-> P;\n}\n\
                theory t {\n  const m;\n}\n\
                process p {\n  network n;\n  theory t;\n  strand P {\n    r: recv(m);\n    s: send(m);\n  }\n}\n\
                run bad of p {\n  flow s -pp-> r;\n}\n";
    let o = anp(&["validate", temp("unsound.anp", text).to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("not sound"), "{}", stderr(&o));
}

#[test]
fn check_proof_exit_codes() {
    for (file, proof) in [("cr_sig", "cr_sig"), ("cap", "cap_auth"), ("handshake", "handshake_b")] {
        let o = anp(&["check-proof", corpus(file).to_str().unwrap(), "--proof", proof]);
        assert_eq!(code(&o), 0, "{proof}: {}", stderr(&o));
        assert!(stdout(&o).contains("accepted"));
    }
    let o = anp(&["check-proof", corpus("cap").to_str().unwrap(), "--proof", "missing"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn rejected_proof_points_at_the_step() {
    let text = std::fs::read_to_string(corpus("cap")).unwrap().replace("step 5: d gives", "step 5: b gives");
    let p = temp("cap_broken.anp", &text);
    let o = anp(&["check-proof", p.to_str().unwrap(), "--proof", "cap_auth"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let line = text.lines().position(|l| l.contains("step 5:")).unwrap() + 1;
    assert!(stderr(&o).contains(&format!(":{line}:")), "{}", stderr(&o));
    assert!(stderr(&o).contains("step 5"));
}

#[test]
fn explore_reports_holds_and_counterexamples() {
    let f = corpus("cr_sig");
    let f = f.to_str().unwrap();
    let base =
        ["explore", f, "--procedure", "cr", "--max-sessions", "2", "--max-attacker-events", "2", "--max-depth", "4"];
    let o = anp(&base);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("holds"));

    let out = temp("cex.anp", "");
    let mut args = base.to_vec();
    args.extend(["--capability", "sig", "--export", out.to_str().unwrap()]);
    let o = anp(&args);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("counterexample"));
    let v = anp(&["validate", out.to_str().unwrap()]);
    assert_eq!(code(&v), 0, "{}", stderr(&v));

    let o = anp(&["explore", f, "--procedure", "nope"]);
    assert_eq!(code(&o), 2);
    let o = anp(&["explore", f, "--procedure", "cr", "--capability", "nope"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn render_targets() {
    let cap = corpus("cap");
    let o = anp(&["render", cap.to_str().unwrap(), "--target", "network", "--name", "cap"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("digraph \"cap\""));
    let again = anp(&["render", cap.to_str().unwrap(), "--target", "network", "--name", "cap"]);
    assert_eq!(o.stdout, again.stdout);

    let out = temp("run.dot", "");
    let o =
        anp(&["render", cap.to_str().unwrap(), "--target", "run", "--name", "cap_ref", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(std::fs::read_to_string(&out).unwrap().contains("cluster_Q"));

    let o = anp(&["render", cap.to_str().unwrap(), "--target", "derivation", "--name", "cap_auth"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("step10"));

    let o = anp(&["render", cap.to_str().unwrap(), "--target", "run", "--name", "nope"]);
    assert_eq!(code(&o), 2);
}
