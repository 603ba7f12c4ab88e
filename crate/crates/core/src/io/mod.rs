//! Line-oriented text formats: tracker streams, calibration results,
//! skeletons and evaluation reports.
//!
//! Every file starts with a `format <name> <version>` line. Numbers are
//! written with a fixed number of decimals so outputs are byte-stable.

mod report;
mod result;
mod skeleton_file;
mod stream;

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub use report::{write_report, write_series};
pub use result::{CalibrationResult, CenterProvenance, RESULT_FORMAT, RESULT_VERSION};
pub use skeleton_file::{parse_skeleton, write_skeleton, SKELETON_FORMAT, SKELETON_VERSION};
pub use stream::{
    DeviceEntry, Frame, Sample, Segment, TrackerStream, FRAME_CONVENTION, STREAM_FORMAT, STREAM_VERSION,
};

/// Decimals for positions and lengths in stream files.
pub const POSITION_DECIMALS: usize = 6;
/// Decimals for quaternion components and for result/skeleton files.
pub const PRECISE_DECIMALS: usize = 9;

/// Fixed-point formatting without negative zero.
pub fn fixed(value: f64, decimals: usize) -> String {
    let s = format!("{value:.decimals$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

pub fn fixed_vec(v: &Vec3, decimals: usize) -> String {
    format!(
        "{} {} {}",
        fixed(v.x, decimals),
        fixed(v.y, decimals),
        fixed(v.z, decimals)
    )
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) struct Cursor<'a> {
    file: &'a str,
    lines: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(file: &'a str, text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(content_lines(text));
        Self {
            file,
            lines: it.peekable(),
            last: 0,
        }
    }

    pub fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.file, line, msg)
    }

    pub fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        let (n, l) = self.lines.next()?;
        self.last = n;
        Some((n, l.split_whitespace().collect()))
    }

    pub fn peek_key(&mut self) -> Option<&'a str> {
        self.lines.peek().and_then(|(_, l)| l.split_whitespace().next())
    }

    /// Next line, which must start with `key`; returns the remaining fields.
    pub fn expect(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        match self.next() {
            Some((n, mut fields)) if fields.first() == Some(&key) => {
                fields.remove(0);
                Ok((n, fields))
            }
            Some((n, fields)) => Err(self.err(n, format!("expected `{key}`, found `{}`", fields.join(" ")))),
            None => Err(self.err(self.last + 1, format!("expected `{key}`, found end of file"))),
        }
    }

    pub fn expect_header(&mut self, format: &str, version: u32) -> Result<()> {
        let (n, fields) = self.expect("format")?;
        match fields.as_slice() {
            [name, v] if *name == format => {
                let v: u32 = v
                    .parse()
                    .map_err(|_| self.err(n, format!("bad version `{v}`")))?;
                if v != version {
                    return Err(self.err(n, format!("unsupported {format} version {v}")));
                }
                Ok(())
            }
            _ => Err(self.err(n, format!("expected `format {format} {version}`"))),
        }
    }

    pub fn finish(mut self) -> Result<()> {
        match self.next() {
            None => Ok(()),
            Some((n, fields)) => Err(self.err(n, format!("unexpected `{}`", fields.join(" ")))),
        }
    }

    pub fn file(&self) -> &'a str {
        self.file
    }
}

pub(crate) fn parse_f64(file: &str, line: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::parse(file, line, format!("bad number `{s}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(file, line, format!("non-finite number `{s}`")));
    }
    Ok(v)
}

pub(crate) fn parse_usize(file: &str, line: usize, s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::parse(file, line, format!("bad integer `{s}`")))
}

pub(crate) fn parse_vec(file: &str, line: usize, fields: &[&str]) -> Result<Vec3> {
    if fields.len() != 3 {
        return Err(Error::parse(file, line, format!("expected 3 numbers, got {}", fields.len())));
    }
    Ok(Vec3::new(
        parse_f64(file, line, fields[0])?,
        parse_f64(file, line, fields[1])?,
        parse_f64(file, line, fields[2])?,
    ))
}
