use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::sweep::SweepRecord;

pub const HEADER: [&str; 10] = [
    "variant",
    "k",
    "n_ps",
    "trials",
    "test_mean",
    "test_std",
    "train_mean",
    "train_std",
    "iters_mean",
    "iters_std",
];

fn writer(buf: &mut Vec<u8>) -> ::csv::Writer<&mut Vec<u8>> {
    ::csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(buf)
}

fn finish(w: ::csv::Writer<&mut Vec<u8>>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(())
}

/// Header line plus one LF-terminated line per record. Floats use the
/// shortest representation that parses back to the same value.
pub fn render_csv(records: &[SweepRecord]) -> Result<String> {
    let mut buf = Vec::new();
    let mut w = writer(&mut buf);
    w.write_record(HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    finish(w)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn write_csv(records: &[SweepRecord], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, render_csv(records)?)?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut r = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(Error::InvalidInput(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<SweepRecord>> {
    parse_csv(&fs::read_to_string(path)?)
}

/// Which aggregate a single-panel file carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Panel {
    Test,
    Train,
    Iterations,
}

impl Panel {
    pub fn suffix(&self) -> &'static str {
        match self {
            Panel::Test => "test",
            Panel::Train => "train",
            Panel::Iterations => "iters",
        }
    }
}

/// One quantity per line: `variant,k,n_ps,trials,mean,std`.
pub fn render_panel_csv(records: &[SweepRecord], panel: Panel) -> Result<String> {
    let mut buf = Vec::new();
    let mut w = writer(&mut buf);
    w.write_record(["variant", "k", "n_ps", "trials", "mean", "std"])?;
    for r in records {
        let (mean, std) = match panel {
            Panel::Test => (r.test_mean, r.test_std),
            Panel::Train => (r.train_mean, r.train_std),
            Panel::Iterations => (r.iters_mean, r.iters_std),
        };
        w.serialize((&r.variant, r.k, r.n_ps, r.trials, mean, std))?;
    }
    finish(w)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}
