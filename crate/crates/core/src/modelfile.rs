//! Line-based text model files.
//!
//! Every model file starts with `minmaxage-model <kind>` and `version <n>`,
//! followed by `key value` header lines and tab-separated weight rows sorted
//! by feature id, so that retrained models diff cleanly.

use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "minmaxage-model";

pub fn write_header<W: Write>(out: &mut W, kind: &str) -> Result<()> {
    writeln!(out, "{MAGIC} {kind}")?;
    writeln!(out, "version {FORMAT_VERSION}")?;
    Ok(())
}

pub struct LineReader<R> {
    inner: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> LineReader<R> {
    pub fn new(inner: R) -> Self {
        LineReader { inner, line: 0, buf: String::new() }
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        Error::model(self.line, message)
    }

    pub fn next_line(&mut self) -> Result<String> {
        self.buf.clear();
        let n = self.inner.read_line(&mut self.buf)?;
        self.line += 1;
        if n == 0 {
            return Err(self.error("unexpected end of file"));
        }
        Ok(self.buf.trim_end_matches(['\n', '\r']).to_string())
    }

    /// Checks the magic line and version, returning nothing on success.
    pub fn expect_header(&mut self, kind: &str) -> Result<()> {
        let first = self.next_line()?;
        if first != format!("{MAGIC} {kind}") {
            return Err(self.error(format!("expected `{MAGIC} {kind}`, found `{first}`")));
        }
        let version: u32 = self.parse_key("version")?;
        if version != FORMAT_VERSION {
            return Err(self.error(format!("unsupported version {version}")));
        }
        Ok(())
    }

    /// Reads a `key value` line and returns the value text.
    pub fn expect_key(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            None if line == key => Ok(String::new()),
            _ => Err(self.error(format!("expected `{key}`, found `{line}`"))),
        }
    }

    pub fn parse_key<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.expect_key(key)?;
        self.parse_field(&v)
    }

    pub fn parse_field<T: FromStr>(&self, text: &str) -> Result<T> {
        text.parse().map_err(|_| self.error(format!("cannot parse `{text}`")))
    }

    pub fn fields(&mut self, n: usize) -> Result<Vec<String>> {
        let line = self.next_line()?;
        let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
        if fields.len() != n {
            return Err(self.error(format!("expected {n} tab-separated fields, found {}", fields.len())));
        }
        Ok(fields)
    }
}
