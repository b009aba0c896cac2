//! Helpers shared by the plain-text archive formats.

use crate::error::{Error, Result};

/// 17 significant digits; parses back to the identical `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("{what}: cannot parse `{s}` as a number")))
}

pub fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::Format(format!("{what}: cannot parse `{s}` as a non-negative integer")))
}

pub fn join_f64(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(" ")
}

pub fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split_whitespace().map(|t| parse_f64(t, what)).collect()
}

/// Line cursor over a text archive that skips blank lines and `#` comments.
pub struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate().peekable(),
        }
    }

    pub fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Some((i + 1, t));
        }
        None
    }

    pub fn expect_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_line()
            .ok_or_else(|| Error::Format(format!("unexpected end of file, expected {what}")))
    }

    /// Reads `key value...` and returns the value part.
    pub fn expect_key(&mut self, key: &str) -> Result<&'a str> {
        let (n, line) = self.expect_line(key)?;
        match line.split_once(char::is_whitespace) {
            Some((k, v)) if k == key => Ok(v.trim()),
            None if line == key => Ok(""),
            _ => Err(Error::Format(format!("line {n}: expected `{key}`, found `{line}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn f64_text_round_trips_bitwise(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let back = parse_f64(&fmt_f64(x), "x").unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn lines_skip_comments() {
        let mut l = Lines::new("# hi\n\nalpha 1\n  beta 2 3\n");
        assert_eq!(l.expect_key("alpha").unwrap(), "1");
        assert_eq!(l.expect_key("beta").unwrap(), "2 3");
        assert!(l.next_line().is_none());
        let mut l = Lines::new("gamma 1");
        assert!(l.expect_key("alpha").is_err());
    }
}
