mod common;

use bunched_fuzz::cli;
use common::corpus_dir;

fn bfz(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("bfz").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn file(name: &str) -> String {
    corpus_dir().join(name).to_string_lossy().into_owned()
}

#[test]
fn check_reports_sqrt10_grades() {
    let (code, out, _) = bfz(&["check", &file("sqrt10.bfz"), "--json"]);
    assert_eq!(code, 0);
    let j: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(j["status"], "pass");
    let def = j["definitions"].as_array().unwrap().iter().find(|d| d["name"] == "sqrt10").unwrap();
    let text = def["env"].to_string();
    assert!(text.contains("3.16227766"), "{text}");
}

#[test]
fn check_text_and_failure() {
    let (code, out, _) = bfz(&["check", &file("sqrt10.bfz")]);
    assert_eq!(code, 0);
    assert!(out.contains("[x : real]_3.16227766 ,2 [y : real]_3.16227766"), "{out}");
    let (code, out, _) = bfz(&["check", &file("curry_bad.bfz")]);
    assert_eq!(code, 1);
    assert!(out.contains("p-mismatch"));
}

#[test]
fn dist_command() {
    let (code, out, _) = bfz(&["dist", "--type", "real (*@2) real", "(0,0)", "(3,4)"]);
    assert_eq!((code, out.trim()), (0, "5"));
    let (code, out, _) = bfz(&["dist", "--type", "real", "-1", "inf"]);
    assert_eq!((code, out.trim()), (0, "inf"));
    let (code, _, err) = bfz(&["dist", "--type", "real", "(", "1"]);
    assert_eq!(code, 64, "{err}");
}

#[test]
fn run_command() {
    let dir = tempdir();
    let path = dir.join("twice.bfz");
    std::fs::write(&path, "def twice (x : real) : real = prim.scale[2] (![2] x)\n").unwrap();
    let p = path.to_string_lossy();
    let (code, out, _) = bfz(&["run", &p, "--arg", "-1.5"]);
    assert_eq!((code, out.trim()), (0, "-3"));
    let (code, _, _) = bfz(&["run", &p, "--arg", "()"]);
    assert_eq!(code, 2);
    let (code, _, _) = bfz(&["run", &p, "--arg", "(1,"]);
    assert_eq!(code, 64);
    let (code, _, _) = bfz(&["run", &file("curry_bad.bfz")]);
    assert_eq!(code, 1);
}

#[test]
fn sens_reports_the_rotation_witness() {
    let (code, out, _) = bfz(&["sens", &file("rot_l1_bad.bfz"), "--samples", "200"]);
    assert_eq!(code, 1);
    assert!(out.contains("witness: [v = (0, 0)] vs [v = (1, 0)]"), "{out}");
    let (code, out, _) = bfz(&["sens", &file("rot_l2_good.bfz"), "--samples", "200", "--json"]);
    assert_eq!(code, 0);
    let j: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(j["samples"], 200);
    assert_eq!(j["results"][0]["status"], "pass");
}

#[test]
fn audit_command() {
    let (code, _, _) = bfz(&["audit", "rot[pi/4]", "--samples", "200"]);
    assert_eq!(code, 0);
    let (code, out, _) = bfz(&["audit", "rot[pi/4]", "--samples", "200", "--at", "real (*) real -o real (*) real"]);
    assert_eq!(code, 1, "{out}");
    let (code, _, _) = bfz(&["audit", "nope"]);
    assert_eq!(code, 64);
}

#[test]
fn usage_and_file_errors() {
    assert_eq!(bfz(&[]).0, 64);
    assert_eq!(bfz(&["frobnicate"]).0, 64);
    assert_eq!(bfz(&["--help"]).0, 0);
    assert_eq!(bfz(&["--version"]).0, 0);
    assert_eq!(bfz(&["sens", &file("identity.bfz"), "--samples", "0"]).0, 64);
    assert_eq!(bfz(&["check", "/nonexistent/x.bfz"]).0, 66);
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("bfz-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
