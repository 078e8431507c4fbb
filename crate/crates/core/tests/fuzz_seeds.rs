//! Replays the checked-in fuzz seeds through the same parser entry points
//! the fuzz targets exercise.

use nonlocal_core::funcspace::Descriptor;
use nonlocal_core::harness::report::summarize_rows;
use nonlocal_core::harness::{parse_config, read_series_csv};
use std::path::PathBuf;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn config_seeds() {
    for (name, text) in seeds("config") {
        let res = parse_config(&text);
        match name.as_str() {
            "empty.toml" | "unknown_key.toml" => assert!(res.is_err(), "{name} accepted"),
            _ => {
                let cfg = res.unwrap_or_else(|e| panic!("{name}: {e}"));
                cfg.validate().unwrap();
            }
        }
    }
}

#[test]
fn csv_seeds() {
    for (name, text) in seeds("csv_series") {
        let res = read_series_csv(&text);
        match name.as_str() {
            "bad_axis.csv" | "short_header.csv" => assert!(res.is_err(), "{name} accepted"),
            _ => {
                let rows = res.unwrap_or_else(|e| panic!("{name}: {e}"));
                let _ = summarize_rows(&rows, 0.02);
            }
        }
    }
}

#[test]
fn descriptor_seeds() {
    for (name, text) in seeds("descriptor") {
        let res = text.parse::<Descriptor>();
        if name.starts_with("bad_") || name == "empty.txt" {
            assert!(res.is_err(), "{name} accepted");
            continue;
        }
        let d = res.unwrap_or_else(|e| panic!("{name}: {e}"));
        let again: Descriptor = d.to_string().parse().unwrap();
        assert_eq!(again.to_string(), d.to_string());
    }
}
