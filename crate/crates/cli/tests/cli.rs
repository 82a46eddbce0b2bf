use std::fs;
use std::process::{Command, Output};

fn jqml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jqml")).args(args).output().unwrap()
}

fn query_file(dir: &tempfile::TempDir, text: &str) -> String {
    let path = dir.path().join("q.jq");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_prints_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let q = query_file(&dir, r#"for $i in 1 to 2 return {"i": $i, "s": "x"}"#);
    let out = jqml(&["run", "--query", &q]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "{\"i\": 1, \"s\": \"x\"}\n{\"i\": 2, \"s\": \"x\"}\n");
}

#[test]
fn text_format_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let q = query_file(&dir, r#"("a", 1)"#);
    let target = dir.path().join("out.txt");
    let out = jqml(&["run", "--query", &q, "--format", "text", "--output", target.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(target).unwrap(), "a\n1\n");
}

#[test]
fn var_binding_accepts_json_and_strings() {
    let dir = tempfile::tempdir().unwrap();
    let q = query_file(&dir, "($n + 1, $s)");
    let out = jqml(&["run", "--query", &q, "--var", "n=41", "--var", "s=hello"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "42\n\"hello\"\n");
}

#[test]
fn exit_codes_follow_error_categories() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("for $x in", 1),
        ("undefined-fn(1)", 2),
        (r#"1 + "a""#, 3),
        (r#"unparsed-text-lines("/no/such/file")"#, 4),
        ("let $x := 1 to 50 return count($x)", 5),
    ];
    for (text, code) in cases {
        let q = query_file(&dir, text);
        let out = jqml(&["run", "--query", &q, "--cap", "10"]);
        assert_eq!(out.status.code(), Some(code), "{text}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    }
    let out = jqml(&["run", "--query", "/no/such/query.jq"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn gen_data_is_deterministic_and_splits() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let args = |train: &str, test: &str| {
        jqml(&["gen-data", "--rows", "30", "--test-rows", "10", "--dim", "4", "--seed", "3", "--output", train, "--test-output", test])
    };
    assert!(args(&path("a"), &path("at")).status.success());
    assert!(args(&path("b"), &path("bt")).status.success());
    let a = fs::read_to_string(path("a")).unwrap();
    assert_eq!(a, fs::read_to_string(path("b")).unwrap());
    assert_eq!(a.lines().count(), 30);
    assert_eq!(fs::read_to_string(path("at")).unwrap().lines().count(), 10);
    for line in a.lines() {
        assert_eq!(line.split(' ').count(), 5, "{line}");
    }
}

#[test]
fn to_libsvm_from_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let text = dir.path().join("in.txt");
    fs::write(&text, "indoor:0.5 1.5 0 -2\noutdoor:0.1 0 0 3\n").unwrap();
    let out = jqml(&["to-libsvm", "--input", text.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0 1:1.5 3:-2\n1 3:3\n");

    let json = dir.path().join("in.jsonl");
    fs::write(&json, "{\"y\": 1, \"x\": [0.25, 0]}\n").unwrap();
    let out = jqml(&["to-libsvm", "--input", json.to_str().unwrap(), "--from", "json-lines", "--label-col", "y", "--features-col", "x"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "1 1:0.25\n");
}
