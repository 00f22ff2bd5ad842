//! Nodal scalar fields on a [`Grid`], bilinear sampling, and the `FBFIELD`
//! file format.

use std::sync::Arc;

use crate::domain::{build_grid, parse_grid_header, Grid, NodeLabel, Point};
use crate::error::{Error, Result};

/// One real value per valued (non-exterior) node. Exterior slots are kept at 0
/// so the storage can be indexed by node index directly.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.node_count();
        ScalarField {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Samples `f` at every valued node.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|k| {
                if grid.label(k) == NodeLabel::Exterior {
                    0.0
                } else {
                    f(grid.point(k))
                }
            })
            .collect();
        ScalarField { grid, values }
    }

    /// Wraps a dense node-indexed vector; exterior entries are zeroed.
    pub fn from_values(grid: Arc<Grid>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        for (k, v) in values.iter_mut().enumerate() {
            if grid.label(k) == NodeLabel::Exterior {
                *v = 0.0;
            } else if !v.is_finite() {
                return Err(Error::NonFinite(k));
            }
        }
        Ok(ScalarField { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    /// Pointwise map over valued nodes.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        let values = self
            .values
            .iter()
            .zip(self.grid.labels())
            .map(|(&v, &l)| if l == NodeLabel::Exterior { 0.0 } else { f(v) })
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Membership in the admissible class: exactly zero on the flat boundary.
    pub fn is_admissible(&self) -> bool {
        self.grid
            .labels()
            .iter()
            .zip(&self.values)
            .all(|(l, v)| *l != NodeLabel::Pi || *v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// Max absolute value over valued nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max nodal difference over valued nodes.
    pub fn max_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    fn cell_valued(&self, ci: usize, cj: usize) -> bool {
        let (ni, nj) = self.grid.cell_dims();
        ci < ni
            && cj < nj
            && self
                .grid
                .cell_corners(ci, cj)
                .iter()
                .all(|&k| self.grid.label(k) != NodeLabel::Exterior)
    }

    /// Cells with four valued corners containing `p`, with local coordinates.
    fn locate(&self, p: Point) -> Vec<(usize, usize, f64, f64)> {
        let h = self.grid.spacing();
        let fx = p.x1 / h;
        let fy = p.x2 / h + self.grid.ny() as f64;
        if !(fx >= 0.0 && fy >= 0.0) || !fx.is_finite() || !fy.is_finite() {
            return Vec::new();
        }
        let (ni, nj) = self.grid.cell_dims();
        let ci = fx.floor() as usize;
        let cj = fy.floor() as usize;
        let t = fx - ci as f64;
        let s = fy - cj as f64;
        let mut xs = vec![(ci, t)];
        if t == 0.0 && ci > 0 {
            xs.push((ci - 1, 1.0));
        }
        let mut ys = vec![(cj, s)];
        if s == 0.0 && cj > 0 {
            ys.push((cj - 1, 1.0));
        }
        let mut out = Vec::with_capacity(4);
        for &(a, t) in &xs {
            for &(b, s) in &ys {
                if a < ni && b < nj && self.cell_valued(a, b) {
                    out.push((a, b, t, s));
                }
            }
        }
        out
    }

    /// Bilinear interpolation; `None` outside the valued cells.
    pub fn interpolate(&self, p: Point) -> Option<f64> {
        let &(ci, cj, t, s) = self.locate(p).first()?;
        let [a, b, c, d] = self.grid.cell_corners(ci, cj);
        let v = &self.values;
        Some(
            (1.0 - t) * (1.0 - s) * v[a]
                + t * (1.0 - s) * v[b]
                + t * s * v[c]
                + (1.0 - t) * s * v[d],
        )
    }

    /// Gradient of the bilinear interpolant at `p`, averaged over every cell
    /// containing `p` (centered differences at nodes).
    pub fn gradient_at(&self, p: Point) -> Option<[f64; 2]> {
        let cells = self.locate(p);
        if cells.is_empty() {
            return None;
        }
        let h = self.grid.spacing();
        let v = &self.values;
        let mut g = [0.0; 2];
        for &(ci, cj, t, s) in &cells {
            let [a, b, c, d] = self.grid.cell_corners(ci, cj);
            g[0] += ((1.0 - s) * (v[b] - v[a]) + s * (v[c] - v[d])) / h;
            g[1] += ((1.0 - t) * (v[d] - v[a]) + t * (v[c] - v[b])) / h;
        }
        let n = cells.len() as f64;
        Some([g[0] / n, g[1] / n])
    }

    /// Serializes to `FBFIELD v1`: text header, then little-endian f64 values of
    /// the valued nodes in grid node order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let count = self.grid.valued_count();
        let mut out = format!("FBFIELD v1\n{}count={count}\n", self.grid.header()).into_bytes();
        out.reserve(count * 8);
        for k in self.grid.valued_nodes() {
            out.extend_from_slice(&self.values[k].to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ScalarField> {
        let bad = |message: String| Error::Format {
            kind: "FBFIELD",
            message,
        };
        // four header lines precede the binary payload
        let mut pos = 0;
        let mut lines = Vec::with_capacity(4);
        for _ in 0..4 {
            let end = bytes[pos..]
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| bad("truncated header".into()))?;
            let line = std::str::from_utf8(&bytes[pos..pos + end])
                .map_err(|_| bad("header is not UTF-8".into()))?;
            lines.push(line);
            pos += end + 1;
        }
        if lines[0] != "FBFIELD v1" {
            return Err(bad(format!("bad magic `{}`", lines[0])));
        }
        let (spec, _) = parse_grid_header(&mut lines[1..3].iter().copied())?;
        let count: usize = lines[3]
            .strip_prefix("count=")
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| bad(format!("bad count line `{}`", lines[3])))?;
        let grid = Arc::new(build_grid(spec)?);
        if count != grid.valued_count() {
            return Err(bad(format!(
                "count {count} does not match grid ({} valued nodes)",
                grid.valued_count()
            )));
        }
        let payload = &bytes[pos..];
        if payload.len() != count * 8 {
            return Err(bad(format!(
                "expected {} payload bytes, found {}",
                count * 8,
                payload.len()
            )));
        }
        let mut values = vec![0.0; grid.node_count()];
        for (chunk, k) in payload.chunks_exact(8).zip(grid.valued_nodes()) {
            let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            if !v.is_finite() {
                return Err(Error::NonFinite(k));
            }
            values[k] = v;
        }
        Ok(ScalarField { grid, values })
    }
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
