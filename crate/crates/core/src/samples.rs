//! Sample matrices with provenance, stored as CSV or raw little-endian binary.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, invalid, ForgeError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub seed: u64,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(source: impl Into<String>, seed: u64) -> Self {
        Provenance { source: source.into(), seed, notes: Vec::new() }
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }
}

/// `n` samples of dimension `d`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    n: usize,
    d: usize,
    data: Vec<f64>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    format: String,
    n: usize,
    d: usize,
    provenance: Provenance,
}

fn io_err(e: std::io::Error) -> ForgeError {
    ForgeError::Invalid(format!("i/o: {e}"))
}

impl SampleSet {
    pub fn new(n: usize, d: usize, data: Vec<f64>, provenance: Provenance) -> Result<Self> {
        ensure_dim(n * d, data.len(), "sample data")?;
        Ok(SampleSet { n, d, data, provenance })
    }

    pub fn from_rows(rows: &[Vec<f64>], provenance: Provenance) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            ensure_dim(d, r.len(), "sample row")?;
            data.extend_from_slice(r);
        }
        SampleSet::new(rows.len(), d, data, provenance)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.d.max(1)).take(self.n)
    }

    /// The first `k` samples.
    pub fn head(&self, k: usize) -> SampleSet {
        let k = k.min(self.n);
        SampleSet {
            n: k,
            d: self.d,
            data: self.data[..k * self.d].to_vec(),
            provenance: self.provenance.clone().note(format!("first {k} of {}", self.n)),
        }
    }

    /// Per-coordinate means.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.n.max(1) as f64);
        m
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# source={}", self.provenance.source).map_err(io_err)?;
        writeln!(w, "# seed={}", self.provenance.seed).map_err(io_err)?;
        for n in &self.provenance.notes {
            writeln!(w, "# note={n}").map_err(io_err)?;
        }
        let header: Vec<String> = (0..self.d).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", header.join(",")).map_err(io_err)?;
        for r in self.rows() {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{}", cells.join(",")).map_err(io_err)?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut prov = Provenance::new("unknown", 0);
        let mut d = None;
        let mut data = Vec::new();
        let mut n = 0;
        for (lineno, line) in BufReader::new(r).lines().enumerate() {
            let line = line.map_err(io_err)?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                let c = c.trim();
                if let Some(v) = c.strip_prefix("source=") {
                    prov.source = v.to_string();
                } else if let Some(v) = c.strip_prefix("seed=") {
                    prov.seed = v.parse().map_err(|_| ForgeError::Invalid(format!("line {}: bad seed", lineno + 1)))?;
                } else if let Some(v) = c.strip_prefix("note=") {
                    prov.notes.push(v.to_string());
                }
                continue;
            }
            match d {
                None => d = Some(line.split(',').count()),
                Some(dim) => {
                    let row: std::result::Result<Vec<f64>, _> =
                        line.split(',').map(|c| c.trim().parse::<f64>()).collect();
                    let row = row.map_err(|e| ForgeError::Invalid(format!("line {}: {e}", lineno + 1)))?;
                    if row.len() != dim {
                        return invalid(format!("line {}: expected {dim} values", lineno + 1));
                    }
                    data.extend(row);
                    n += 1;
                }
            }
        }
        SampleSet::new(n, d.unwrap_or(0), data, prov)
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    /// Writes raw `f64` little-endian data plus a JSON sidecar next to it.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, bytes).map_err(io_err)?;
        let side = Sidecar { format: "f64le".into(), n: self.n, d: self.d, provenance: self.provenance.clone() };
        fs::write(Self::sidecar_path(path), serde_json::to_string_pretty(&side)?).map_err(io_err)
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let side: Sidecar = serde_json::from_str(&fs::read_to_string(Self::sidecar_path(path)).map_err(io_err)?)?;
        if side.format != "f64le" {
            return invalid(format!("unknown sample format '{}'", side.format));
        }
        let bytes = fs::read(path).map_err(io_err)?;
        ensure_dim(side.n * side.d * 8, bytes.len(), "binary sample bytes")?;
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        SampleSet::new(side.n, side.d, data, side.provenance)
    }
}
