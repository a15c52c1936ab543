use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use gjms::CheckRecord;
use serde::Serialize;
use serde_json::{Map, Number, Value};

/// Checks, free-form data and CSV artifacts produced by one command.
#[derive(Default)]
pub struct Section {
    pub checks: Vec<CheckRecord>,
    pub data: Map<String, Value>,
    pub artifacts: Vec<(String, String)>,
}

impl Section {
    pub fn check(&mut self, record: CheckRecord) {
        self.checks.push(record);
    }

    pub fn put(&mut self, key: &str, value: impl Serialize) {
        self.data.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
    }

    pub fn artifact(&mut self, name: impl Into<String>, contents: String) {
        self.artifacts.push((name.into(), contents));
    }

    /// Folds `other` in, prefixing check and artifact names with `prefix/` and
    /// nesting its data under `prefix`.
    pub fn absorb(&mut self, prefix: &str, other: Section) {
        for mut c in other.checks {
            c.name = format!("{prefix}/{}", c.name);
            self.checks.push(c);
        }
        for (name, body) in other.artifacts {
            self.artifacts.push((format!("{prefix}.{name}"), body));
        }
        self.data.insert(prefix.to_string(), Value::Object(other.data));
    }

    pub fn pass(&self) -> bool {
        gjms::report::all_pass(&self.checks)
    }
}

#[derive(Serialize)]
pub struct ParamsEcho {
    pub n: usize,
    pub m: usize,
    pub alpha: Option<f64>,
    pub eps: f64,
    pub beta: f64,
    pub degree: usize,
    pub resolution: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: Option<f64>,
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    timestamp: String,
    command: &'a str,
    params: &'a ParamsEcho,
    seed: u64,
    pass: bool,
    checks: &'a [CheckRecord],
    artifacts: &'a [String],
    data: &'a Map<String, Value>,
}

/// Rewrites every non-integer number with 17 significant digits.
fn fix_precision(v: &mut Value) {
    match v {
        Value::Number(num) => {
            let s = num.to_string();
            if s.contains(['.', 'e', 'E']) {
                let x: f64 = s.parse().expect("json number");
                *num = Number::from_str(&format!("{x:.16e}")).expect("valid number");
            }
        }
        Value::Array(items) => items.iter_mut().for_each(fix_precision),
        Value::Object(map) => map.values_mut().for_each(fix_precision),
        _ => {}
    }
}

pub fn render_json(command: &str, params: &ParamsEcho, section: &Section, artifacts: &[String]) -> String {
    let report = Report {
        tool: "gjms",
        version: env!("CARGO_PKG_VERSION"),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        command,
        params,
        seed: params.seed,
        pass: section.pass(),
        checks: &section.checks,
        artifacts,
        data: &section.data,
    };
    let mut value = serde_json::to_value(&report).expect("serializable report");
    fix_precision(&mut value);
    let mut out = serde_json::to_string_pretty(&value).expect("serializable value");
    out.push('\n');
    out
}

pub fn render_csv(section: &Section) -> String {
    let mut out = String::from("name,computed,reference,tolerance,kind,pass\n");
    for c in &section.checks {
        let kind = serde_json::to_value(c.kind).expect("serializable kind");
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{},{}",
            c.name,
            c.computed,
            c.reference,
            c.tolerance,
            kind.as_str().unwrap_or_default(),
            c.pass
        )
        .expect("write to String");
    }
    out
}

/// Writes each artifact next to `out` as `<stem>.<name>` and returns the file names.
pub fn write_artifacts(out: &Path, artifacts: &[(String, String)]) -> anyhow::Result<Vec<String>> {
    let dir = out.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    let mut names = Vec::new();
    for (name, body) in artifacts {
        let file = format!("{stem}.{name}");
        let path = dir.join(&file);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        names.push(file);
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_get_seventeen_digits() {
        let mut v = serde_json::json!({"a": 0.1, "b": 3, "c": [1.5, null]});
        fix_precision(&mut v);
        assert_eq!(v.to_string(), r#"{"a":1.0000000000000001e-1,"b":3,"c":[1.5000000000000000e+0,null]}"#);
    }

    #[test]
    fn absorb_prefixes_names() {
        let mut inner = Section::default();
        inner.check(CheckRecord::flag("x", true));
        inner.put("k", 1);
        inner.artifact("t.csv", String::new());
        let mut outer = Section::default();
        outer.absorb("sub", inner);
        assert_eq!(outer.checks[0].name, "sub/x");
        assert_eq!(outer.artifacts[0].0, "sub.t.csv");
        assert_eq!(outer.data["sub"]["k"], 1);
    }
}
