//! Rescalings `u_{x0,r}(x) = u(x0 + r x) / r^β` resampled onto a reference grid.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::profile::{match_profile, ProfileMatch};
use crate::domain::{Grid, NodeLabel, Point};
use crate::energy::EnergyParams;
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Bilinear resampling of `u(x0 + r ·) / r^β` onto every valued node of
/// `reference`.
pub fn blowup(
    u: &ScalarField,
    x0: Point,
    r: f64,
    reference: &Arc<Grid>,
    params: &EnergyParams,
) -> Result<ScalarField> {
    if !(r > 0.0) {
        return Err(Error::OutOfRange {
            name: "r",
            value: r,
            expected: "r > 0",
        });
    }
    let scale = r.powf(-params.beta());
    let mut values = vec![0.0; reference.node_count()];
    for k in reference.valued_nodes() {
        let x = reference.point(k);
        let y = Point::new(x0.x1 + r * x.x1, x0.x2 + r * x.x2);
        let v = if reference.label(k) == NodeLabel::Pi {
            0.0
        } else {
            u.interpolate(y).ok_or(Error::BallExitsDomain {
                x1: x0.x1,
                x2: x0.x2,
                radius: r,
            })?
        };
        values[k] = scale * v;
    }
    ScalarField::from_values(reference.clone(), values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupSequence {
    pub center: Point,
    /// Decreasing scales.
    pub scales: Vec<f64>,
    pub matches: Vec<ProfileMatch>,
    /// Sup-norm of each rescaled field.
    pub sup_norms: Vec<f64>,
}

impl BlowupSequence {
    pub fn errors(&self) -> Vec<f64> {
        self.matches.iter().map(|m| m.linf_error).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x1,x2,r,sign,c_fit,linf_error,sup_norm\n");
        for i in 0..self.scales.len() {
            let m = &self.matches[i];
            let sign = match m.sign {
                super::profile::Sign::Plus => "+",
                super::profile::Sign::Minus => "-",
            };
            s.push_str(&format!(
                "{},{},{},{sign},{},{},{}\n",
                self.center.x1, self.center.x2, self.scales[i], m.c_fit, m.linf_error, self.sup_norms[i]
            ));
        }
        s
    }
}

/// Blow-ups at each scale (sorted decreasing) matched against the half-plane
/// profiles on the unit half-ball of `reference`.
pub fn blowup_sequence(
    u: &ScalarField,
    x0: Point,
    scales: &[f64],
    reference: &Arc<Grid>,
    params: &EnergyParams,
) -> Result<BlowupSequence> {
    if scales.is_empty() {
        return Err(Error::EmptyData("blow-up scales"));
    }
    let mut scales = scales.to_vec();
    scales.sort_by(|a, b| b.total_cmp(a));
    let mut matches = Vec::with_capacity(scales.len());
    let mut sup_norms = Vec::with_capacity(scales.len());
    for &r in &scales {
        let v = blowup(u, x0, r, reference, params)?;
        matches.push(match_profile(&v, params));
        sup_norms.push(v.sup_norm());
    }
    Ok(BlowupSequence {
        center: x0,
        scales,
        matches,
        sup_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, DomainSpec};

    #[test]
    fn unit_scale_at_origin_is_identity_and_homogeneous_fields_are_fixed() {
        let g = Arc::new(build_grid(DomainSpec::half_disk(1.0, 1.0 / 64.0)).unwrap());
        let pr = EnergyParams::new(1.0, 1.0, 0.5).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| x.x1.sin() + x.x2);
        let u = u.map(|v| v);
        let v = blowup(&u.clone(), Point::ORIGIN, 1.0, &g, &pr);
        // Pi nodes are pinned to 0, everything else is reproduced
        let v = v.unwrap();
        for k in g.valued_nodes() {
            if g.label(k) != NodeLabel::Pi {
                assert_eq!(v.value(k), u.value(k));
            }
        }
        let h = ScalarField::from_fn(g.clone(), |x| 1.08 * x.x1.max(0.0).powf(4.0 / 3.0));
        let small = Arc::new(build_grid(DomainSpec::half_disk(1.0, 1.0 / 16.0)).unwrap());
        let b = blowup(&h, Point::ORIGIN, 0.5, &small, &pr).unwrap();
        let exact = ScalarField::from_fn(small, |x| 1.08 * x.x1.max(0.0).powf(4.0 / 3.0));
        assert!(b.max_diff(&exact) < 1e-3);
        assert!(blowup(&h, Point::new(0.5, 0.0), 0.9, &g, &pr).is_err());
    }
}
