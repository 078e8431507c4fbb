use std::path::Path;
use std::process::{Command, Output};

const LAMBDA: &str = r#"
scenario = "lam"
[space]
kind = "interval"
[function]
descriptor = "affine:1,0"
[functional]
which = "Lambda"
p = 1
phi = "step"
anchor = "ahlfors"
ahlfors_q = 1
[sweep]
axis = "delta"
values = [0.01, 0.001, 0.0001, 0.00001]
route = "continuum"
oracle = 2.0
oracle_tolerance = 0.02
"#;

fn lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonlocal-lab")).current_dir(dir).args(args).output().unwrap()
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr)
}

#[test]
fn sweep_report_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("ok.toml"), LAMBDA).unwrap();
    let o = lab(d, &["sweep", "--config", "ok.toml", "--out", "rep"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("result PASS"));
    let csv = d.join("rep/lam.csv");
    assert!(csv.exists() && d.join("rep/lam.txt").exists() && d.join("rep/lam.gp").exists());
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("scenario,axis,param,functional,energy,ratio,pairs,seed_grid\n"));

    let o = lab(d, &["report", "rep/lam.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("lam"));

    // an oracle the sweep cannot meet is a bound-check failure
    std::fs::write(d.join("bound.toml"), LAMBDA.replace("oracle = 2.0", "oracle = 3.0")).unwrap();
    let o = lab(d, &["sweep", "--config", "bound.toml", "--out", "rep"]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    assert!(text(&o).contains("result FAIL"));

    std::fs::write(d.join("bad.toml"), LAMBDA.replace("p = 1", "p = 1\nwhat = 2")).unwrap();
    assert_eq!(lab(d, &["eval", "--config", "bad.toml"]).status.code(), Some(1));
    assert_eq!(lab(d, &["eval", "--config", "missing.toml"]).status.code(), Some(1));
    assert_eq!(lab(d, &["eval"]).status.code(), Some(1));
    assert_eq!(lab(d, &["eval", "--preset", "no-such-preset"]).status.code(), Some(1));

    let coarse = r#"
scenario = "coarse"
[space]
kind = "interval"
cells = 200
[function]
descriptor = "sin:1,1,0"
[mollifier]
family = "flat-window"
[functional]
which = "I"
[sweep]
axis = "r"
values = [0.1, 0.01, 0.001, 0.0001]
"#;
    std::fs::write(d.join("coarse.toml"), coarse).unwrap();
    let o = lab(d, &["sweep", "--config", "coarse.toml"]);
    assert_eq!(o.status.code(), Some(3), "{}", text(&o));
}

#[test]
fn presets_and_audits() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = lab(d, &["presets"]);
    assert_eq!(o.status.code(), Some(0));
    for name in ["normalization", "example-6.1", "cor-3.5", "thm-1.3"] {
        assert!(text(&o).contains(name), "{name} not listed");
    }
    let o = lab(d, &["audit-phi", "--preset", "lambda-1d"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o).contains("C_phi 1"), "{}", text(&o));
    let o = lab(d, &["audit-mollifier", "--preset", "cor-3.4"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("minorize-constant PASS"));
    let o = lab(d, &["audit-space", "--preset", "cor-3.4"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let o = lab(d, &["eval", "--preset", "cor-3.1", "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("functional"));
}
