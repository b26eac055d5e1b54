//! Sequence files and output sinks.
//!
//! A sequence file holds one decimal float per line. Blank lines and
//! anything after `#` are ignored.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

pub fn parse_sequence(text: &str, path: &Path) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| CliError::Parse { path: path.to_path_buf(), line: idx + 1, msg };
        let v: f64 = line.parse().map_err(|_| parse_err(format!("not a number: `{line}`")))?;
        if !v.is_finite() {
            return Err(parse_err(format!("non-finite value `{line}`")));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn read_sequence(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_sequence(&text, path)
}

/// Shortest round-trip formatting, one value per line.
pub fn write_sequence<W: Write>(mut w: W, values: &[f64]) -> io::Result<()> {
    for v in values {
        writeln!(w, "{v:?}")?;
    }
    w.flush()
}

/// Destination of a command's primary output.
pub struct Sink {
    path: Option<PathBuf>,
}

impl Sink {
    pub fn new(path: Option<&Path>) -> Self {
        Sink { path: path.map(Path::to_path_buf) }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn is_stdout(&self) -> bool {
        self.path.is_none()
    }

    /// Runs `f` against the sink, mapping write failures to I/O errors.
    pub fn write_with(&self, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
        let label = self.path.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
        let result = match &self.path {
            Some(p) => {
                let file = File::create(p).map_err(|e| CliError::io(p, e))?;
                let mut w = BufWriter::new(file);
                f(&mut w).and_then(|_| w.flush())
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                f(&mut w).and_then(|_| w.flush())
            }
        };
        result.map_err(|e| CliError::io(label, e))
    }
}

pub fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
    Sink::new(Some(path)).write_with(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks_are_skipped() {
        let v = parse_sequence("# prompt\n1\n\n2.5  # second\n-3e-2\n", Path::new("p")).unwrap();
        assert_eq!(v, vec![1.0, 2.5, -0.03]);
    }

    #[test]
    fn bad_line_reports_its_number() {
        match parse_sequence("1\n2\nx\n", Path::new("p")) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_sequence("nan\n", Path::new("p")).is_err());
    }

    #[test]
    fn write_then_parse_round_trips() {
        let vals = [0.1, -1.0 / 3.0, 1e-300, 12345.678];
        let mut buf = Vec::new();
        write_sequence(&mut buf, &vals).unwrap();
        let back = parse_sequence(std::str::from_utf8(&buf).unwrap(), Path::new("p")).unwrap();
        assert_eq!(back, vals);
    }
}
