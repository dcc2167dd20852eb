//! Plain-text reports: `key=value` lines and matrix blocks.
//!
//! A matrix is written as `key=matrix RxC` followed by R rows of
//! space-separated `(re,im)` pairs. Lines starting with `#` are comments.
//! Numbers use the shortest representation that round-trips exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::quantum::Measured;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Text(String),
    Matrix(CMatrix),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    entries: Vec<(String, Value)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn number(&mut self, key: impl Into<String>, v: f64) -> &mut Self {
        self.entries.push((key.into(), Value::Number(v)));
        self
    }

    pub fn text(&mut self, key: impl Into<String>, v: impl Into<String>) -> &mut Self {
        self.entries.push((key.into(), Value::Text(v.into())));
        self
    }

    pub fn matrix(&mut self, key: impl Into<String>, m: &CMatrix) -> &mut Self {
        self.entries.push((key.into(), Value::Matrix(m.clone())));
        self
    }

    /// Adds `key` and `key_std_error`.
    pub fn measured(&mut self, key: &str, m: Measured) -> &mut Self {
        self.number(key, m.value);
        self.number(format!("{key}_std_error"), m.std_error)
    }

    pub fn extend(&mut self, other: Report) -> &mut Self {
        self.entries.extend(other.entries);
        self
    }

    pub fn entries(&self) -> &[(String, Value)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn get_number(&self, key: &str) -> Option<f64> {
        match self.get(key)? {
            Value::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn get_text(&self, key: &str) -> Option<&str> {
        match self.get(key)? {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn get_matrix(&self, key: &str) -> Option<&CMatrix> {
        match self.get(key)? {
            Value::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub fn emit(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.entries {
            match value {
                Value::Number(v) => writeln!(out, "{key}={v:?}").unwrap(),
                Value::Text(s) => writeln!(out, "{key}={s}").unwrap(),
                Value::Matrix(m) => {
                    writeln!(out, "{key}=matrix {}x{}", m.nrows(), m.ncols()).unwrap();
                    for r in 0..m.nrows() {
                        let row: Vec<String> = (0..m.ncols())
                            .map(|j| format!("({:?},{:?})", m[(r, j)].re, m[(r, j)].im))
                            .collect();
                        writeln!(out, "{}", row.join(" ")).unwrap();
                    }
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut report = Report::new();
        let mut lines = text.lines().enumerate();
        while let Some((n, line)) = lines.next() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", n + 1)))?;
            let value = value.trim();
            if let Some(shape) = value.strip_prefix("matrix ") {
                let (rows, cols) = parse_shape(shape)
                    .ok_or_else(|| Error::Parse(format!("line {}: bad matrix shape {shape:?}", n + 1)))?;
                let mut m = CMatrix::zeros(rows, cols);
                for r in 0..rows {
                    let (n, row) = lines
                        .next()
                        .ok_or_else(|| Error::Parse(format!("matrix {key} truncated")))?;
                    let cells: Vec<&str> = row.split_whitespace().collect();
                    if cells.len() != cols {
                        return Err(Error::Parse(format!("line {}: expected {cols} entries", n + 1)));
                    }
                    for (j, cell) in cells.iter().enumerate() {
                        m[(r, j)] = parse_pair(cell)
                            .ok_or_else(|| Error::Parse(format!("line {}: bad entry {cell:?}", n + 1)))?;
                    }
                }
                report.matrix(key.trim(), &m);
            } else if let Ok(v) = value.parse::<f64>() {
                report.number(key.trim(), v);
            } else {
                report.text(key.trim(), value);
            }
        }
        Ok(report)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.emit()).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

fn parse_shape(s: &str) -> Option<(usize, usize)> {
    let (r, c) = s.trim().split_once('x')?;
    Some((r.parse().ok()?, c.parse().ok()?))
}

fn parse_pair(s: &str) -> Option<crate::linalg::C64> {
    let inner = s.strip_prefix('(')?.strip_suffix(')')?;
    let (re, im) = inner.split_once(',')?;
    Some(c(re.parse().ok()?, im.parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut m = CMatrix::zeros(2, 3);
        m[(0, 1)] = c(0.1, -1.0 / 3.0);
        m[(1, 2)] = c(-2.5e-17, 1e300);
        let mut r = Report::new();
        r.number("s_value", 2.615)
            .number("tiny", 1.0 / 3.0)
            .number("whole", 3.0)
            .text("reconstructor", "mle")
            .matrix("rho", &m)
            .measured("fidelity", Measured { value: 0.967, std_error: 0.002 });
        let text = r.emit();
        assert_eq!(Report::parse(&text).unwrap(), r);
        assert!(text.contains("whole=3.0\n"));
        assert!(text.contains("rho=matrix 2x3\n(0.0,0.0) (0.1,-0.3333333333333333) (0.0,0.0)\n"));
    }

    #[test]
    fn comments_and_lookup() {
        let r = Report::parse("# header\nconverged=true\nn=12.0\n").unwrap();
        assert_eq!(r.get_text("converged"), Some("true"));
        assert_eq!(r.get_number("n"), Some(12.0));
        assert!(r.get_matrix("n").is_none());
    }

    #[test]
    fn malformed_input() {
        assert!(Report::parse("no equals sign").is_err());
        assert!(Report::parse("m=matrix 2x2\n(1,0) (0,0)\n").is_err());
        assert!(Report::parse("m=matrix 1x1\n(1;0)\n").is_err());
    }
}
