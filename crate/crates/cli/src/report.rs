//! Deterministic `key=value` run reports.

use std::fmt::Write as _;

use nmx::format::{decimal, format_cost};
use nmx::Cost;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Ordered report lines. Values never contain newlines.
#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Report::default();
        r.put("command", command);
        r.put("tool_version", env!("CARGO_PKG_VERSION"));
        r
    }

    pub fn put(&mut self, key: impl Into<String>, value: impl ToString) {
        let value = value.to_string().replace('\n', " ");
        self.lines.push((key.into(), value));
    }

    /// A cost as `p/q` plus its decimal expansion.
    pub fn cost(&mut self, key: &str, c: &Cost) {
        self.put(key, format_cost(c));
        self.put(format!("{key}_decimal"), decimal(c, 6));
    }

    pub fn list<T: ToString>(&mut self, key: &str, items: &[T]) {
        let v: Vec<String> = items.iter().map(|x| x.to_string()).collect();
        self.put(key, v.join(","));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn costs_render_as_fraction_and_decimal() {
        let mut r = Report::new("x");
        r.cost("value", &Cost::new(7, 2));
        r.put("a", "b\nc");
        let text = r.render();
        assert!(text.contains("value=7/2\nvalue_decimal=3.500000\n"));
        assert!(text.ends_with("a=b c\n"));
    }
}
