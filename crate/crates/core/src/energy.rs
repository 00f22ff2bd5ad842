//! The two-phase singular energy, its smoothed surrogate, the Euler-Lagrange
//! residual and discrete harmonic replacement.
//!
//! The discrete energy is a sum over cells with at least one interior corner:
//! the Dirichlet part uses the midpoint rule with the squared gradient taken as
//! the mean of the squared edge differences of the cell, and the potential part
//! uses the nodal trapezoid rule. Regrouped by edges and nodes this is
//! `sum_e w_e (u_a - u_b)^2 + sum_k m_k G(u_k)`, which is how it is evaluated.
//! Every edge at an interior node has weight 1 and every interior node has mass
//! `h^2`, so the first variation at an interior node is
//! `-2 h^2 (Δ_h u - G'(u) / 2)`: the 5-point Euler-Lagrange equation.

use serde::{Deserialize, Serialize};

use crate::domain::{Grid, Mask, NodeLabel};
use crate::error::{Error, Result};
use crate::field::{pairwise_sum, ScalarField};
use crate::linalg::conjugate_gradient;

/// Homogeneity exponent `2 / (2 - p)`.
pub fn beta_of(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            expected: "0 < p < 1",
        });
    }
    Ok(2.0 / (2.0 - p))
}

/// Positive phase weights and the exponent. `beta` is always derived from `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    lambda_plus: f64,
    lambda_minus: f64,
    p: f64,
}

impl EnergyParams {
    pub fn new(lambda_plus: f64, lambda_minus: f64, p: f64) -> Result<Self> {
        for (name, v) in [("lambda_plus", lambda_plus), ("lambda_minus", lambda_minus)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    expected: "positive and finite",
                });
            }
        }
        beta_of(p)?;
        Ok(EnergyParams {
            lambda_plus,
            lambda_minus,
            p,
        })
    }

    pub fn lambda_plus(&self) -> f64 {
        self.lambda_plus
    }

    pub fn lambda_minus(&self) -> f64 {
        self.lambda_minus
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn beta(&self) -> f64 {
        2.0 / (2.0 - self.p)
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_plus.max(self.lambda_minus)
    }

    /// Same exponent with the phase weights exchanged.
    pub fn swapped(&self) -> Self {
        EnergyParams {
            lambda_plus: self.lambda_minus,
            lambda_minus: self.lambda_plus,
            p: self.p,
        }
    }

    /// Right-hand side of the Euler-Lagrange equation where `s != 0`.
    pub fn el_rhs(&self, s: f64) -> f64 {
        if s > 0.0 {
            self.p * self.lambda_plus * s.powf(self.p - 1.0)
        } else if s < 0.0 {
            -self.p * self.lambda_minus * (-s).powf(self.p - 1.0)
        } else {
            0.0
        }
    }
}

/// `G(s) = 2λ⁺(s⁺)^p + 2λ⁻(s⁻)^p`.
pub fn potential(s: f64, params: &EnergyParams) -> f64 {
    if s > 0.0 {
        2.0 * params.lambda_plus * s.powf(params.p)
    } else if s < 0.0 {
        2.0 * params.lambda_minus * (-s).powf(params.p)
    } else {
        0.0
    }
}

/// Smoothed potential `2λ±(((s±)² + ε²)^{p/2} - ε^p)` and its exact derivative.
/// Reduces to [`potential`] at `ε = 0` and vanishes at `s = 0` for every `ε`.
pub fn smoothed_potential(s: f64, params: &EnergyParams, eps: f64) -> (f64, f64) {
    let p = params.p;
    let (lambda, a, sign) = if s > 0.0 {
        (params.lambda_plus, s, 1.0)
    } else if s < 0.0 {
        (params.lambda_minus, -s, -1.0)
    } else {
        return (0.0, 0.0);
    };
    if eps == 0.0 {
        let v = 2.0 * lambda * a.powf(p);
        return (v, sign * 2.0 * lambda * p * a.powf(p - 1.0));
    }
    let q = a * a + eps * eps;
    let base = q.powf(0.5 * p);
    let value = 2.0 * lambda * (base - eps.powf(p));
    let deriv = 2.0 * lambda * p * a * base / q;
    (value, sign * deriv)
}

/// Edge weights and nodal masses of the discrete energy on a grid.
#[derive(Debug, Clone)]
pub struct DiscreteEnergy {
    edges: Vec<(usize, usize, f64)>,
    masses: Vec<(usize, f64)>,
}

impl DiscreteEnergy {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.node_count();
        let w = 2 * grid.ny() + 1;
        let mut east = vec![0.0; n];
        let mut north = vec![0.0; n];
        let mut mass = vec![0.0; n];
        let h = grid.spacing();
        let (ni, nj) = grid.cell_dims();
        for ci in 0..ni {
            for cj in 0..nj {
                if !grid.cell_included(ci, cj) {
                    continue;
                }
                let [a, b, c, d] = grid.cell_corners(ci, cj);
                east[a] += 0.5;
                east[d] += 0.5;
                north[a] += 0.5;
                north[b] += 0.5;
                for k in [a, b, c, d] {
                    mass[k] += 0.25 * h * h;
                }
            }
        }
        let mut edges = Vec::new();
        for k in 0..n {
            if east[k] > 0.0 {
                edges.push((k, k + w, east[k]));
            }
            if north[k] > 0.0 {
                edges.push((k, k + 1, north[k]));
            }
        }
        let masses = mass
            .into_iter()
            .enumerate()
            .filter(|(_, m)| *m > 0.0)
            .collect();
        DiscreteEnergy { edges, masses }
    }

    /// `∫|∇u|²` by the cell rule.
    pub fn dirichlet(&self, u: &[f64]) -> f64 {
        chunked_sum(self.edges.iter().map(|&(a, b, w)| {
            let d = u[a] - u[b];
            w * d * d
        }))
    }

    /// `∫G(u)` by the nodal trapezoid rule, for any potential `g`.
    pub fn potential_part(&self, u: &[f64], g: impl Fn(f64) -> f64) -> f64 {
        chunked_sum(self.masses.iter().map(|&(k, m)| m * g(u[k])))
    }

    pub fn total(&self, u: &[f64], params: &EnergyParams) -> f64 {
        self.dirichlet(u) + self.potential_part(u, |s| potential(s, params))
    }

    pub fn smoothed(&self, u: &[f64], params: &EnergyParams, eps: f64) -> f64 {
        self.dirichlet(u) + self.potential_part(u, |s| smoothed_potential(s, params, eps).0)
    }

    /// `E_ε(v) - E_ε(u)`, summed term by term so that small changes are not
    /// lost to cancellation between two large totals.
    pub fn smoothed_change(&self, u: &[f64], v: &[f64], params: &EnergyParams, eps: f64) -> f64 {
        let d = chunked_sum(self.edges.iter().map(|&(a, b, w)| {
            let (du, dv) = (u[a] - u[b], v[a] - v[b]);
            w * (dv - du) * (dv + du)
        }));
        let g = chunked_sum(self.masses.iter().map(|&(k, m)| {
            if u[k] == v[k] {
                0.0
            } else {
                m * (smoothed_potential(v[k], params, eps).0 - smoothed_potential(u[k], params, eps).0)
            }
        }));
        d + g
    }

    /// Gradient of the smoothed energy with respect to every nodal value.
    pub fn smoothed_gradient(&self, u: &[f64], params: &EnergyParams, eps: f64, grad: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for &(a, b, w) in &self.edges {
            let d = 2.0 * w * (u[a] - u[b]);
            grad[a] += d;
            grad[b] -= d;
        }
        for &(k, m) in &self.masses {
            grad[k] += m * smoothed_potential(u[k], params, eps).1;
        }
    }
}

fn chunked_sum(terms: impl Iterator<Item = f64>) -> f64 {
    const CHUNK: usize = 256;
    let mut partials = Vec::new();
    let mut acc = 0.0;
    let mut n = 0;
    for t in terms {
        acc += t;
        n += 1;
        if n == CHUNK {
            partials.push(acc);
            acc = 0.0;
            n = 0;
        }
    }
    partials.push(acc);
    pairwise_sum(&partials)
}

/// Discrete `∫(|∇u|² + G(u))` over the quadrature cells.
pub fn total_energy(u: &ScalarField, params: &EnergyParams) -> f64 {
    DiscreteEnergy::new(u.grid()).total(u.values(), params)
}

/// Discrete Dirichlet integral `∫|∇u|²`.
pub fn dirichlet_energy(u: &ScalarField) -> f64 {
    DiscreteEnergy::new(u.grid()).dirichlet(u.values())
}

/// 5-point Dirichlet energy of the edges touching `region`: the quantity
/// harmonic replacement minimizes.
pub fn region_dirichlet_energy(u: &ScalarField, region: &Mask) -> f64 {
    let grid = u.grid();
    let v = u.values();
    let mut terms = Vec::new();
    for &k in region.nodes() {
        for nb in grid.neighbors(k) {
            // count each edge once: from its region endpoint, or from the lower index
            if region.contains(nb) && nb < k {
                continue;
            }
            let d = v[k] - v[nb];
            terms.push(d * d);
        }
    }
    pairwise_sum(&terms)
}

/// 5-point Laplacian at an interior node.
pub fn laplacian_at(u: &ScalarField, node: usize) -> f64 {
    let h = u.spacing();
    let v = u.values();
    let s: f64 = u.grid().neighbors(node).iter().map(|&n| v[n]).sum();
    (s - 4.0 * v[node]) / (h * h)
}

/// Euler-Lagrange residual `Δ_h u - p(λ⁺(u⁺)^{p-1} - λ⁻(u⁻)^{p-1})` at interior
/// nodes with `|u| > dead_band`; zero elsewhere.
pub fn el_residual(u: &ScalarField, params: &EnergyParams, dead_band: f64) -> ScalarField {
    let grid = u.grid();
    let mut out = vec![0.0; grid.node_count()];
    for k in grid.interior_nodes() {
        let s = u.value(k);
        if s.abs() > dead_band {
            out[k] = laplacian_at(u, k) - params.el_rhs(s);
        }
    }
    ScalarField::from_values(u.grid_arc().clone(), out).expect("residual is finite")
}

/// Replaces `u` on `region` by the solution of the 5-point Laplace equation
/// with boundary values taken from `u`. An empty region returns `u`.
pub fn harmonic_replacement(u: &ScalarField, region: &Mask) -> Result<ScalarField> {
    let grid = u.grid();
    for &k in region.nodes() {
        if k >= grid.node_count() || grid.label(k) != NodeLabel::Interior {
            return Err(Error::InvalidRegion(k));
        }
    }
    let mut out = u.clone();
    if region.is_empty() {
        return Ok(out);
    }
    solve_laplace(&mut out, region.nodes());
    Ok(out)
}

/// Solves `Δ_h v = 0` on `unknowns` (interior nodes), keeping every other node
/// fixed; the incoming values on `unknowns` are the initial guess.
pub(crate) fn solve_laplace(field: &mut ScalarField, unknowns: &[usize]) {
    let grid = field.grid().clone();
    let n = grid.node_count();
    let mut local = vec![usize::MAX; n];
    for (i, &k) in unknowns.iter().enumerate() {
        local[k] = i;
    }
    let v = field.values();
    let mut b = vec![0.0; unknowns.len()];
    let mut nbrs = Vec::with_capacity(unknowns.len());
    for (i, &k) in unknowns.iter().enumerate() {
        let mut ids = [usize::MAX; 4];
        for (slot, nb) in grid.neighbors(k).into_iter().enumerate() {
            if local[nb] == usize::MAX {
                b[i] += v[nb];
            } else {
                ids[slot] = local[nb];
            }
        }
        nbrs.push(ids);
    }
    let apply = |x: &[f64], y: &mut [f64]| {
        for (i, ids) in nbrs.iter().enumerate() {
            let mut s = 4.0 * x[i];
            for &j in ids {
                if j != usize::MAX {
                    s -= x[j];
                }
            }
            y[i] = s;
        }
    };
    let mut x: Vec<f64> = unknowns.iter().map(|&k| v[k]).collect();
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
    } else {
        conjugate_gradient(apply, &b, &mut x, 1e-14, 20 * unknowns.len() + 100);
    }
    let vals = field.values_mut();
    for (&k, xi) in unknowns.iter().zip(x) {
        vals[k] = xi;
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};
    use std::sync::Arc;

    use super::*;
    use crate::domain::{ball_mask, build_grid, DomainSpec, Point};

    fn params(lp: f64, lm: f64, p: f64) -> EnergyParams {
        EnergyParams::new(lp, lm, p).unwrap()
    }

    fn half_disk(h: f64) -> Arc<Grid> {
        Arc::new(build_grid(DomainSpec::half_disk(1.0, h)).unwrap())
    }

    #[test]
    fn beta_values() {
        assert!((beta_of(0.5).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((beta_of(2.0 / 3.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((beta_of(1e-6).unwrap() - 1.0).abs() < 1e-5);
        assert!((beta_of(1.0 - 1e-6).unwrap() - 2.0).abs() < 1e-5);
        assert!(beta_of(0.0).is_err());
        assert!(beta_of(1.0).is_err());
        assert!(beta_of(f64::NAN).is_err());
        assert!(EnergyParams::new(0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn potential_values() {
        let pr = params(1.0, 0.5, 0.5);
        assert_eq!(potential(0.0, &pr), 0.0);
        assert!((potential(1.0, &pr) - 2.0).abs() < 1e-15);
        assert!((potential(-4.0, &pr) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn smoothed_potential_values() {
        let pr = params(1.0, 1.0, 0.5);
        for eps in [0.0, 1e-3, 1.0, 7.0] {
            assert_eq!(smoothed_potential(0.0, &pr, eps).0, 0.0);
        }
        assert!((smoothed_potential(1.0, &pr, 0.0).0 - 2.0).abs() < 1e-15);
        let v = smoothed_potential(1.0, &pr, 1.0).0;
        assert!((v - 2.0 * (2f64.powf(0.25) - 1.0)).abs() < 1e-14);
        assert!((v - 0.37841).abs() < 1e-5);
    }

    #[test]
    fn energy_of_constants_and_zero() {
        let g = half_disk(1.0 / 128.0);
        let pr = params(1.0, 1.0, 0.5);
        assert_eq!(total_energy(&ScalarField::zeros(g.clone()), &pr), 0.0);
        let one = ScalarField::from_fn(g, |_| 1.0);
        let e = total_energy(&one, &pr);
        assert!((e - PI).abs() / PI < 0.01, "{e}");
    }

    #[test]
    fn dirichlet_part_of_linear_field_is_area() {
        let g = half_disk(1.0 / 128.0);
        let u = ScalarField::from_fn(g, |p| p.x1);
        let d = dirichlet_energy(&u);
        assert!((d - FRAC_PI_2).abs() / FRAC_PI_2 < 0.005, "{d}");
    }

    #[test]
    fn residual_of_constant_and_zero() {
        let g = half_disk(1.0 / 16.0);
        let pr = params(1.0, 1.0, 0.5);
        let r = el_residual(&ScalarField::from_fn(g.clone(), |_| 1.0), &pr, 1e-3);
        for k in g.interior_nodes() {
            assert!((r.value(k) + 0.5).abs() < 1e-12);
        }
        let r0 = el_residual(&ScalarField::zeros(g), &pr, 1e-3);
        assert_eq!(r0.sup_norm(), 0.0);
    }

    #[test]
    fn gradient_matches_energy_differences() {
        let g = half_disk(1.0 / 8.0);
        let pr = params(1.3, 0.7, 0.4);
        let u = ScalarField::from_fn(g.clone(), |p| (3.0 * p.x2).sin() * p.x1 - 0.2 * p.x1);
        let de = DiscreteEnergy::new(&g);
        let eps = 0.05;
        let mut grad = vec![0.0; g.node_count()];
        de.smoothed_gradient(u.values(), &pr, eps, &mut grad);
        for k in g.interior_nodes().step_by(5) {
            let step = 1e-6;
            let mut up = u.values().to_vec();
            up[k] += step;
            let mut dn = u.values().to_vec();
            dn[k] -= step;
            let fd = (de.smoothed(&up, &pr, eps) - de.smoothed(&dn, &pr, eps)) / (2.0 * step);
            assert!((fd - grad[k]).abs() < 1e-7 * (1.0 + fd.abs()), "{fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn interior_gradient_is_five_point_stencil() {
        let h = 1.0 / 16.0;
        let g = half_disk(h);
        let pr = params(1.0, 1.0, 0.5);
        let u = ScalarField::from_fn(g.clone(), |p| p.x1 * p.x1 + 0.3 * p.x2 + 0.1);
        let mut grad = vec![0.0; g.node_count()];
        DiscreteEnergy::new(&g).smoothed_gradient(u.values(), &pr, 0.0, &mut grad);
        for k in g.interior_nodes() {
            let expect = -2.0 * h * h * (laplacian_at(&u, k) - pr.el_rhs(u.value(k)));
            assert!((grad[k] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_replacement_fixed_point_and_empty() {
        let g = half_disk(1.0 / 32.0);
        let u = ScalarField::from_fn(g.clone(), |p| p.x1 * p.x1 - p.x2 * p.x2 + 0.5 * p.x2);
        let region = Mask::from_nodes(
            ball_mask(&g, Point::new(0.5, 0.0), 0.3)
                .nodes()
                .iter()
                .copied()
                .filter(|&k| g.label(k) == NodeLabel::Interior)
                .collect(),
        );
        let v = harmonic_replacement(&u, &region).unwrap();
        assert!(v.max_diff(&u) < 1e-10);
        assert_eq!(harmonic_replacement(&u, &Mask::default()).unwrap(), u);
        let bad = Mask::from_nodes(vec![g.index(0, 0).unwrap()]);
        assert!(harmonic_replacement(&u, &bad).is_err());
    }
}
