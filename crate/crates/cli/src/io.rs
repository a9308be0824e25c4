//! File formats.
//!
//! Frame files are little-endian: the 8-byte magic `SFWFRM01`, `u64` M,
//! `u64` frame count, then `count * M` `f64` values frame by frame.
//! Localizations are CSV rows `frame,amplitude,x1,x2,x3` (unused coordinates
//! left empty).

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sfw_core::measures::{DiscreteMeasure, Point};

pub const FRAME_MAGIC: &[u8; 8] = b"SFWFRM01";
const HEADER_LEN: usize = 24;

#[derive(Debug, thiserror::Error)]
pub enum FrameError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corrupt frame file {path}: {reason}")]
    Corrupt { path: String, reason: String },
}

/// Frames of one file, all of length `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFile {
    pub m: usize,
    pub frames: Vec<Vec<f64>>,
}

pub fn write_frames(path: &Path, m: usize, frames: &[Vec<f64>]) -> anyhow::Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * m * frames.len());
    buf.extend_from_slice(FRAME_MAGIC);
    buf.extend_from_slice(&(m as u64).to_le_bytes());
    buf.extend_from_slice(&(frames.len() as u64).to_le_bytes());
    for f in frames {
        if f.len() != m {
            bail!("frame of length {} in a file of M = {m}", f.len());
        }
        for v in f {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

/// Reads the `(M, count)` header only.
pub fn read_frame_header(path: &Path) -> Result<(usize, usize), FrameError> {
    use std::io::Read;
    let name = path.display().to_string();
    let mut head = [0u8; HEADER_LEN];
    let mut file = File::open(path).map_err(|source| FrameError::Io { path: name.clone(), source })?;
    file.read_exact(&mut head).map_err(|_| FrameError::Corrupt { path: name.clone(), reason: "truncated header".into() })?;
    parse_header(&head, &name)
}

fn parse_header(head: &[u8], name: &str) -> Result<(usize, usize), FrameError> {
    if &head[..8] != FRAME_MAGIC {
        return Err(FrameError::Corrupt { path: name.into(), reason: "bad magic".into() });
    }
    let m = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
    Ok((m, count))
}

pub fn read_frames(path: &Path) -> Result<FrameFile, FrameError> {
    let name = path.display().to_string();
    if path.extension().is_some_and(|e| e == "csv") {
        return read_frames_csv(path);
    }
    let bytes = fs::read(path).map_err(|source| FrameError::Io { path: name.clone(), source })?;
    if bytes.len() < HEADER_LEN {
        return Err(FrameError::Corrupt { path: name, reason: "truncated header".into() });
    }
    let (m, count) = parse_header(&bytes, &name)?;
    let expected = m.checked_mul(count).and_then(|n| n.checked_mul(8)).and_then(|n| n.checked_add(HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(FrameError::Corrupt {
            path: name,
            reason: format!("{} bytes for {count} frames of {m} values", bytes.len()),
        });
    }
    let mut values = bytes[HEADER_LEN..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let frames: Vec<Vec<f64>> = (0..count).map(|_| values.by_ref().take(m).collect()).collect();
    if frames.iter().flatten().any(|v| !v.is_finite()) {
        return Err(FrameError::Corrupt { path: name, reason: "non-finite value".into() });
    }
    Ok(FrameFile { m, frames })
}

/// One frame per row, no header.
fn read_frames_csv(path: &Path) -> Result<FrameFile, FrameError> {
    let name = path.display().to_string();
    let corrupt = |reason: String| FrameError::Corrupt { path: name.clone(), reason };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| corrupt(e.to_string()))?;
    let mut frames = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| corrupt(e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| corrupt(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<f64>, _>>()?;
        frames.push(row);
    }
    let m = frames.first().map_or(0, |f| f.len());
    if frames.iter().any(|f| f.len() != m) {
        return Err(corrupt("rows of different lengths".into()));
    }
    Ok(FrameFile { m, frames })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRow {
    pub frame: usize,
    pub amplitude: f64,
    pub x1: f64,
    pub x2: Option<f64>,
    pub x3: Option<f64>,
}

impl LocalizationRow {
    pub fn new(frame: usize, amplitude: f64, p: &Point) -> Self {
        let c = p.as_slice();
        Self { frame, amplitude, x1: c[0], x2: c.get(1).copied(), x3: c.get(2).copied() }
    }

    pub fn point(&self) -> Point {
        match (self.x2, self.x3) {
            (Some(b), Some(c)) => Point::d3(self.x1, b, c),
            (Some(b), None) => Point::new(&[self.x1, b]),
            _ => Point::d1(self.x1),
        }
    }
}

pub struct LocalizationWriter {
    inner: csv::Writer<BufWriter<File>>,
}

impl LocalizationWriter {
    pub fn create(path: &Path) -> anyhow::Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self { inner: csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file)) })
    }

    /// Writes the header even when no rows follow.
    pub fn header(&mut self) -> anyhow::Result<()> {
        self.inner.write_record(["frame", "amplitude", "x1", "x2", "x3"])?;
        Ok(())
    }

    pub fn write_measure(&mut self, frame: usize, m: &DiscreteMeasure) -> anyhow::Result<()> {
        for s in m.spikes() {
            self.inner.serialize(LocalizationRow::new(frame, s.amplitude, &s.position))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_localizations(path: &Path, measures: &[(usize, DiscreteMeasure)]) -> anyhow::Result<()> {
    let mut w = LocalizationWriter::create(path)?;
    w.header()?;
    for (f, m) in measures {
        w.write_measure(*f, m)?;
    }
    w.finish()
}

/// Localizations grouped by frame.
pub fn read_localizations(path: &Path) -> anyhow::Result<BTreeMap<usize, DiscreteMeasure>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out: BTreeMap<usize, DiscreteMeasure> = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: LocalizationRow = row.with_context(|| format!("parsing {}", path.display()))?;
        out.entry(row.frame).or_default().push(row.amplitude, row.point());
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
