//! Replays the checked-in fuzz corpus through the parser entry points.

use std::path::PathBuf;

use mcflab_core::io::parse_immersion_csv;
use mcflab_core::lab::{parse_config, parse_config_with, parse_override};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read_to_string(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn config_seeds() {
    for (name, text) in seeds("parse_config") {
        let r = parse_config(&text);
        assert_eq!(r.is_ok(), name == "minimal.toml" || name == "full.toml", "{name}: {r:?}");
    }
}

#[test]
fn override_seeds() {
    for (name, text) in seeds("parse_override") {
        let ok = parse_override(&text).is_ok();
        assert_eq!(ok, !["unqualified", "nested"].contains(&name.as_str()), "{name}");
        if ok {
            let _ = parse_config_with("[run]\nscenario = \"cosh-neck\"\n", &[text]);
        }
    }
}

#[test]
fn immersion_seeds() {
    for (name, text) in seeds("read_immersion_csv") {
        let r = parse_immersion_csv(&text);
        assert_eq!(r.is_ok(), name == "curve2.csv" || name == "grid3.csv", "{name}: {r:?}");
    }
}
