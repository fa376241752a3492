use std::path::{Path, PathBuf};

use crate::error::CliResult;

/// Files produced by one command, held in memory until the run succeeds.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub seeds: Vec<u64>,
}

impl RunOutput {
    pub fn push(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    pub fn write_all(&self) -> CliResult<()> {
        for (path, bytes) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, bytes)?;
        }
        Ok(())
    }
}

/// Bumped whenever a column is added, removed or reinterpreted.
pub const SCHEMA_VERSION: u32 = 1;

/// CSV text with leading `#` comment lines, the first naming the schema.
pub struct Table {
    comments: Vec<String>,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(schema: &str, header: &[&str]) -> CliResult<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self {
            comments: vec![format!("schema=spinthermo.{schema}/{SCHEMA_VERSION}")],
            writer,
        })
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(self) -> CliResult<Vec<u8>> {
        let body = self
            .writer
            .into_inner()
            .map_err(|e| crate::error::CliError::resource(e.to_string()))?;
        let mut out = Vec::with_capacity(body.len() + 64);
        for c in &self.comments {
            out.extend_from_slice(b"# ");
            out.extend_from_slice(c.as_bytes());
            out.push(b'\n');
        }
        out.extend_from_slice(&body);
        Ok(out)
    }
}

/// Round-trippable float formatting; `None` becomes an empty field.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Evenly spaced grid including both ends.
pub fn linspace(lo: f64, hi: f64, points: usize) -> CliResult<Vec<f64>> {
    if points < 2 || !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(crate::error::CliError::usage(format!(
            "invalid grid: need lo < hi and at least two points (got {lo}..{hi}, {points})"
        )));
    }
    Ok((0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect())
}

/// Opens an input file, naming it in the error.
pub fn open_input(path: &Path) -> CliResult<std::fs::File> {
    std::fs::File::open(path).map_err(|e| {
        let mut err = crate::error::CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}
