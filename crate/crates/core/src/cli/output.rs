use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;

/// Floats as `{:.16e}`: 17 significant digits, byte-stable across runs.
struct Fixed17;

impl Formatter for Fixed17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Fixed17);
    value.serialize(&mut ser).expect("report serializes");
    out.push(b'\n');
    out
}

/// One asserted comparison in a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub relation: &'static str,
    pub limit: f64,
}

impl Check {
    pub fn le(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), pass: value <= limit, value, relation: "<=", limit }
    }

    pub fn ge(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), pass: value >= limit, value, relation: ">=", limit }
    }

    pub fn eq(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Check { name: name.into(), pass: value == expected, value, relation: "==", limit: expected }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), pass: ok, value: if ok { 1.0 } else { 0.0 }, relation: "==", limit: 1.0 }
    }
}

/// Everything a command produces, before anything touches the disk.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub command: String,
    pub checks: Vec<Check>,
    pub result: Vec<u8>,
    /// Additional `(file name, bytes)` artifacts.
    pub files: Vec<(String, Vec<u8>)>,
}

#[derive(Serialize)]
struct ResultDoc<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    pass: bool,
    checks: &'a [Check],
    data: &'a T,
}

impl Outcome {
    pub fn new<T: Serialize>(command: &str, seed: u64, checks: Vec<Check>, data: &T) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        let result = to_json_bytes(&ResultDoc { command, seed, pass, checks: &checks, data });
        Outcome { command: command.to_string(), checks, result, files: Vec::new() }
    }

    pub fn with_file(mut self, name: impl Into<String>, bytes: Vec<u8>) -> Self {
        self.files.push((name.into(), bytes));
        self
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    /// Write `result.json` and the extra artifacts; returns the file names written.
    pub fn write_to(&self, dir: &Path) -> io::Result<Vec<String>> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("result.json"), &self.result)?;
        let mut names = vec!["result.json".to_string()];
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
            names.push(name.clone());
        }
        Ok(names)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_17_digits() {
        let s = String::from_utf8(to_json_bytes(&vec![1.0, 0.1, -2.5e-300])).unwrap();
        assert_eq!(s, "[1.0000000000000000e0,1.0000000000000001e-1,-2.5000000000000000e-300]\n");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![1.0, 0.1, -2.5e-300]);
    }

    #[test]
    fn non_finite_is_null() {
        let s = String::from_utf8(to_json_bytes(&[f64::NAN])).unwrap();
        assert_eq!(s, "[null]\n");
    }

    #[test]
    fn outcome_pass_flag() {
        let o = Outcome::new("x", 3, vec![Check::le("a", 1.0, 2.0), Check::ge("b", 1.0, 2.0)], &());
        assert!(!o.pass());
        assert_eq!(o.failures()[0].name, "b");
        let s = String::from_utf8(o.result).unwrap();
        assert!(s.starts_with(r#"{"command":"x","seed":3,"pass":false,"#));
    }
}
