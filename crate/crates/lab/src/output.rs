//! Artifact formatting. CSV files start with a `#` line carrying the config hash;
//! floats are written with 17 significant digits.

use std::fs;
use std::path::Path;

use crate::error::LabError;

pub fn fl(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn int(x: impl Into<i128>) -> String {
    x.into().to_string()
}

pub fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

#[derive(Debug, Clone)]
pub struct Csv {
    name: String,
    header: String,
    columns: Vec<&'static str>,
    rows: Vec<String>,
}

impl Csv {
    pub fn new(name: &str, hash: &str, experiment: &str, columns: &[&'static str]) -> Self {
        Self {
            name: name.to_string(),
            header: format!("# config_hash={hash} experiment={experiment}"),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len(), "row width in {}", self.name);
        self.rows.push(cells.join(","));
    }

    pub fn into_artifact(self) -> Artifact {
        let mut text = String::new();
        text.push_str(&self.header);
        text.push('\n');
        text.push_str(&self.columns.join(","));
        text.push('\n');
        for r in &self.rows {
            text.push_str(r);
            text.push('\n');
        }
        Artifact { name: self.name, contents: text }
    }
}

/// A named file body, written only after the whole experiment succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn json(name: &str, value: &serde_json::Value) -> Self {
        let mut contents = serde_json::to_string_pretty(value).expect("json serializes");
        contents.push('\n');
        Self { name: name.to_string(), contents }
    }
}

pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<(), LabError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| LabError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for a in artifacts {
        let p = dir.join(&a.name);
        fs::write(&p, &a.contents).map_err(io(&p))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fl(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fl(0.125), "1.2500000000000000e-1");
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new("t.csv", "abc", "bloch", &["a", "b"]);
        c.push(vec![int(1), fl(0.5)]);
        let a = c.into_artifact();
        assert_eq!(a.contents, "# config_hash=abc experiment=bloch\na,b\n1,5.0000000000000000e-1\n");
    }
}
