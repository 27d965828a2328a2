//! Deterministic CSV and JSON writers.
//!
//! Floats are always printed with 17 significant digits so that output is a
//! pure function of the inputs and round-trips exactly.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::Result;

pub const SCHEMA: u32 = 1;

/// Seventeen significant digits in exponent form.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// A float that serializes with [`fmt17`], or `null` when not finite.
#[derive(Debug, Clone, Copy)]
pub struct F17(pub f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(fmt17(self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

pub fn opt(x: Option<f64>) -> Option<F17> {
    x.map(F17)
}

pub fn f17s(xs: &[f64]) -> Vec<F17> {
    xs.iter().copied().map(F17).collect()
}

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(seed: Option<u64>) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed,
        }
    }
}

/// Where a subcommand puts its results.
///
/// With a directory every artifact becomes a file of fixed name. Without one
/// the primary artifact goes to stdout and summaries to stderr.
#[derive(Debug, Clone)]
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Sink { dir })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn open(&self, name: &str, primary: bool) -> Result<Box<dyn Write>> {
        Ok(match (&self.dir, primary) {
            (Some(d), _) => Box::new(BufWriter::new(File::create(d.join(name))?)),
            (None, true) => Box::new(BufWriter::new(io::stdout().lock())),
            (None, false) => Box::new(io::stderr().lock()),
        })
    }

    /// Writes a CSV with a header row; every row must have the header's width.
    pub fn csv<I>(&self, name: &str, primary: bool, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::Writer::from_writer(self.open(name, primary)?);
        w.write_record(header)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, primary: bool, value: &T) -> Result<()> {
        let mut w = self.open(name, primary)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

/// Inclusive evenly spaced grid.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
