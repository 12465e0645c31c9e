#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

pub const PROXY_SCENARIO: &str = r#""base_rate_protected": 0.5, "base_rate_control": 0.1, "proxy_correlation": 0.8"#;
pub const NO_IMPACT_SCENARIO: &str = r#""base_rate_protected": 0.2, "base_rate_control": 0.2, "proxy_correlation": 0.0"#;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub out: PathBuf,
}

impl Run {
    pub fn read(&self, name: &str) -> String {
        fs::read_to_string(self.out.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    pub fn json(&self, name: &str) -> Value {
        serde_json::from_str(&self.read(name)).unwrap()
    }
}

/// Runs the CLI with `args`, writing `config` (a JSON object body without
/// braces) to a file in `dir` when non-empty, and outputs to `dir/<tag>`.
pub fn run(dir: &Path, tag: &str, args: &[&str], config: &str) -> Run {
    let out = dir.join(tag);
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fairscope"));
    cmd.args(args).arg("--out").arg(&out);
    if !config.is_empty() {
        let path = dir.join(format!("{tag}.config.json"));
        fs::write(&path, format!("{{{config}}}")).unwrap();
        cmd.arg("--config").arg(path);
    }
    let o = cmd.output().expect("spawn fairscope");
    Run {
        code: o.status.code().expect("exit code"),
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        out,
    }
}

pub fn fixture_path(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

/// Panics with every violation when `instance` fails the named schema.
pub fn assert_schema(schema: &str, instance: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{schema}.schema.json"));
    let schema_doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema_doc).unwrap();
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema}: {errors:#?}");
}
