//! Growth rate fits, the non-degeneracy floor and the subharmonic witness
//! `w = |u|^(2/β) - c |x - y|²` with `c = p / (2β)`.

use serde::{Deserialize, Serialize};

use super::quad::circle_samples;
use crate::domain::{ball_mask, NodeLabel, Point};
use crate::energy::{laplacian_at, EnergyParams};
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Least-squares line `y = a + b x`, with the RMS residual.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::TooFewRadii(n));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::TooFewRadii(n));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rms = (lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - a - b * x).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    Ok((a, b, rms))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub center: Point,
    pub radii: Vec<f64>,
    pub suprema: Vec<f64>,
    pub exponent: f64,
    /// `C` in `S_r ≈ C r^exponent`.
    pub constant: f64,
    pub residual: f64,
}

impl GrowthFit {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x1,x2,r,sup_abs_u\n");
        for (r, v) in self.radii.iter().zip(&self.suprema) {
            s.push_str(&format!("{},{},{r},{v}\n", self.center.x1, self.center.x2));
        }
        s
    }
}

/// `S_r = max |u|` over nodes of `B_r(x0) ∩ {x1 ≥ 0}`, and the log-log slope.
/// Radii where `S_r < tau` are dropped; all of them dropping is degenerate.
pub fn growth_fit(u: &ScalarField, x0: Point, radii: &[f64], tau: f64) -> Result<GrowthFit> {
    if radii.is_empty() {
        return Err(Error::EmptyData("growth radii"));
    }
    let grid = u.grid();
    let suprema: Vec<f64> = radii
        .iter()
        .map(|&r| {
            ball_mask(grid, x0, r)
                .nodes()
                .iter()
                .fold(0.0f64, |m, &k| m.max(u.value(k).abs()))
        })
        .collect();
    let kept: Vec<(f64, f64)> = radii
        .iter()
        .zip(&suprema)
        .filter(|(_, &s)| s >= tau && s > 0.0)
        .map(|(&r, &s)| (r, s))
        .collect();
    if kept.is_empty() {
        return Err(Error::Degenerate(format!(
            "sup |u| below {tau:e} at every radius around ({}, {})",
            x0.x1, x0.x2
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = kept.into_iter().unzip();
    let (a, b, residual) = log_log_fit(&xs, &ys)?;
    Ok(GrowthFit {
        center: x0,
        radii: radii.to_vec(),
        suprema,
        exponent: b,
        constant: a.exp(),
        residual,
    })
}

/// `(p / (2β))^(β/2)`: the lower growth constant of the positive phase.
pub fn nondeg_floor(params: &EnergyParams) -> f64 {
    let beta = params.beta();
    (params.p() / (2.0 * beta)).powf(0.5 * beta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegReport {
    pub center: Point,
    pub radii: Vec<f64>,
    /// `sup u` over `∂B_r(x0) ∩ {u > 0}` (0 if the positive phase misses the circle).
    pub measured: Vec<f64>,
    pub floor_constant: f64,
    pub floors: Vec<f64>,
    pub slack: f64,
    pub pass: Vec<bool>,
}

impl NondegReport {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x1,x2,r,measured_sup,floor,pass\n");
        for i in 0..self.radii.len() {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.center.x1, self.center.x2, self.radii[i], self.measured[i], self.floors[i], self.pass[i]
            ));
        }
        s
    }
}

/// Whether `x0` is on the closure of the positive phase boundary: `u > tau`
/// somewhere and `u ≤ tau` somewhere among the nodes within `4h`.
pub(crate) fn on_positive_boundary(u: &ScalarField, x0: Point, tau: f64) -> bool {
    let mask = ball_mask(u.grid(), x0, 4.0 * u.spacing());
    let vals = mask.nodes().iter().map(|&k| u.value(k));
    let (mut above, mut below) = (false, false);
    for v in vals {
        above |= v > tau;
        below |= v <= tau;
    }
    above && below
}

/// Compares `sup_{∂B_r ∩ Ω⁺} u` against `slack · floor · r^β` at each radius.
/// Points off the positive free boundary are rejected, with `tau = h^β`.
pub fn nondeg_check(
    u: &ScalarField,
    x0: Point,
    radii: &[f64],
    params: &EnergyParams,
) -> Result<NondegReport> {
    nondeg_check_with(u, x0, radii, params, u.spacing().powf(params.beta()), 0.9)
}

pub fn nondeg_check_with(
    u: &ScalarField,
    x0: Point,
    radii: &[f64],
    params: &EnergyParams,
    tau: f64,
    slack: f64,
) -> Result<NondegReport> {
    if !on_positive_boundary(u, x0, tau) {
        return Err(Error::WrongPhase { x1: x0.x1, x2: x0.x2 });
    }
    let beta = params.beta();
    let floor_constant = nondeg_floor(params);
    let mut measured = Vec::with_capacity(radii.len());
    let mut floors = Vec::with_capacity(radii.len());
    let mut pass = Vec::with_capacity(radii.len());
    for &r in radii {
        let m = circle_samples(u, x0, r)?
            .iter()
            .fold(0.0f64, |m, &(_, v, _)| m.max(v));
        let f = floor_constant * r.powf(beta);
        pass.push(m >= slack * f);
        measured.push(m);
        floors.push(f);
    }
    Ok(NondegReport {
        center: x0,
        radii: radii.to_vec(),
        measured,
        floor_constant,
        floors,
        slack,
        pass,
    })
}

/// Minimum 5-point Laplacian of `w = |u|^(2/β) - (p/(2β)) |x - y|²` over
/// interior nodes where `u` and its four neighbours exceed `tau = h^β`.
pub fn subharmonic_witness(u: &ScalarField, y: Point, params: &EnergyParams) -> Result<f64> {
    subharmonic_witness_with(u, y, params, u.spacing().powf(params.beta()))
}

pub fn subharmonic_witness_with(
    u: &ScalarField,
    y: Point,
    params: &EnergyParams,
    tau: f64,
) -> Result<f64> {
    let grid = u.grid_arc().clone();
    let beta = params.beta();
    let c = params.p() / (2.0 * beta);
    let vals: Vec<f64> = (0..grid.node_count())
        .map(|k| {
            if grid.label(k) == NodeLabel::Exterior {
                0.0
            } else {
                let x = grid.point(k);
                u.value(k).abs().powf(2.0 / beta) - c * x.dist(y).powi(2)
            }
        })
        .collect();
    let w = ScalarField::from_values(grid.clone(), vals)?;
    let mut min = f64::INFINITY;
    for k in grid.interior_nodes() {
        if u.value(k) > tau && grid.neighbors(k).iter().all(|&n| u.value(n) > tau) {
            min = min.min(laplacian_at(&w, k));
        }
    }
    if min.is_finite() {
        Ok(min)
    } else {
        Err(Error::EmptyPositivitySet)
    }
}

/// Declared discretization tolerance `10 h^(2β - 2)` of the witness.
pub fn witness_tolerance(h: f64, params: &EnergyParams) -> f64 {
    10.0 * h.powf(2.0 * params.beta() - 2.0)
}
