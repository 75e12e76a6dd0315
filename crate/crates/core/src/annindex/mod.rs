//! Near neighbor indexes over distance oracles.

mod oracle;
mod pipeline;
mod ring;

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use oracle::{
    DistanceOracle, EmbeddedOracle, NormOracle, ProductCombine, ProductFactor, ProductOracle,
};
pub use pipeline::{
    ScalingPipeline, ScalingPipelineConfig, SumProductIndex, SymNormIndex, SymNormMode,
    MaxProductIndex,
};
pub use ring::{BuildStats, RingNode, RingTree, RingTreeParams, RoutingAudit};

/// Dense row-major point set.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    d: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(crate::error::invalid("dimension must be at least 1"));
        }
        if !data.len().is_multiple_of(d) {
            return Err(Error::Format(format!(
                "{} values do not form rows of length {d}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        Self::new(d, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    /// Applies `f` to every row.
    pub fn map_rows<F>(&self, d_out: usize, f: F) -> Result<PointSet>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        let mut data = Vec::with_capacity(self.len() * d_out);
        for row in self.rows() {
            data.extend(f(row)?);
        }
        PointSet::new(d_out, data)
    }

    /// Writes the dataset format: magic `SYMNPTS1`, `u32` version, `u64` n,
    /// `u64` d, then `n * d` `f64` values, all little-endian.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DATASET_MAGIC)?;
        w.write_all(&DATASET_VERSION.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&(self.d as u64).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DATASET_MAGIC {
            return Err(Error::Format("not a dataset file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != DATASET_VERSION {
            return Err(Error::Format("unsupported dataset version".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let d = u64::from_le_bytes(b8) as usize;
        let total = n
            .checked_mul(d)
            .filter(|t| *t <= 1 << 32)
            .ok_or_else(|| Error::Format("dataset too large".into()))?;
        let mut data = vec![0f64; total];
        for v in data.iter_mut() {
            r.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
        PointSet::new(d, data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

const DATASET_MAGIC: &[u8; 8] = b"SYMNPTS1";
const DATASET_VERSION: u32 = 1;

/// Outcome of one query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    /// Returned point id, if any point was accepted.
    pub candidate: Option<usize>,
    /// Distance of the returned point under the source distance.
    pub distance: Option<f64>,
    pub distance_evals: u64,
    pub nodes_visited: u64,
    pub repetitions: u32,
}

/// Exact nearest neighbor by a full scan; ties go to the smaller id.
pub fn exact_scan<O: DistanceOracle + ?Sized>(
    points: &PointSet,
    oracle: &O,
    q: &[f64],
) -> Result<IndexReport> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if q.len() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            found: q.len(),
        });
    }
    let mut best = (f64::INFINITY, 0usize);
    for (i, p) in points.rows().enumerate() {
        let dist = oracle.distance(q, p);
        if dist < best.0 {
            best = (dist, i);
        }
    }
    Ok(IndexReport {
        candidate: Some(best.1),
        distance: Some(best.0),
        distance_evals: points.len() as u64,
        nodes_visited: 1,
        repetitions: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecnorm::NormSpec;

    #[test]
    fn exact_scan_examples() {
        let pts = PointSet::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let o = NormOracle::new(NormSpec::l2(2));
        assert_eq!(exact_scan(&pts, &o, &[5.0, 5.0]).unwrap().candidate, Some(0));
        let empty = PointSet::new(2, vec![]).unwrap();
        assert!(matches!(exact_scan(&empty, &o, &[0.0, 0.0]), Err(Error::EmptyPointSet)));
        let pts = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let rep = exact_scan(&pts, &o, &[0.9, 1.0]).unwrap();
        assert_eq!(rep.candidate, Some(1));
    }

    #[test]
    fn dataset_round_trip() {
        let pts = PointSet::from_rows(&[vec![1.0, -2.5, 3.0], vec![0.0, 1e-300, -0.0]]).unwrap();
        let mut bytes = Vec::new();
        pts.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 8 + 4 + 8 + 8 + 6 * 8);
        assert_eq!(PointSet::read_from(bytes.as_slice()).unwrap(), pts);
        bytes[0] = b'X';
        assert!(PointSet::read_from(bytes.as_slice()).is_err());
    }
}
