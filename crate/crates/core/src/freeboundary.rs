//! Free boundary extraction by marching squares on the levels `u = ±τ`,
//! point classification, normals, cone containment and tangency profiles.
//!
//! Segments are oriented so the phase region (`u > τ` for the positive chains,
//! `u < -τ` for the negative ones) lies on their left, and chains inherit that
//! orientation. Saddle cells are resolved by the sign of the bilinear center.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::domain::{ball_mask, NodeLabel, Point};
use crate::energy::EnergyParams;
use crate::error::{Error, Result};
use crate::field::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Plus,
    Minus,
}

impl Phase {
    fn sign(self) -> f64 {
        match self {
            Phase::Plus => 1.0,
            Phase::Minus => -1.0,
        }
    }
}

/// `Branching` is a two-phase point where the gradient is below tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    PosOnePhase,
    NegOnePhase,
    TwoPhase,
    Branching,
}

impl PointClass {
    pub fn is_two_phase(self) -> bool {
        matches!(self, PointClass::TwoPhase | PointClass::Branching)
    }

    pub fn is_one_phase(self) -> bool {
        !self.is_two_phase()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PointClass::PosOnePhase => "pos_one_phase",
            PointClass::NegOnePhase => "neg_one_phase",
            PointClass::TwoPhase => "two_phase",
            PointClass::Branching => "branching",
        }
    }

    fn mirrored(self) -> Self {
        match self {
            PointClass::PosOnePhase => PointClass::NegOnePhase,
            PointClass::NegOnePhase => PointClass::PosOnePhase,
            c => c,
        }
    }
}

/// Serialized as `[x1, x2, class, n1, n2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64, PointClass, f64, f64)", into = "(f64, f64, PointClass, f64, f64)")]
pub struct Vertex {
    pub x: Point,
    pub class: PointClass,
    pub normal: [f64; 2],
}

impl From<(f64, f64, PointClass, f64, f64)> for Vertex {
    fn from(t: (f64, f64, PointClass, f64, f64)) -> Self {
        Vertex {
            x: Point::new(t.0, t.1),
            class: t.2,
            normal: [t.3, t.4],
        }
    }
}

impl From<Vertex> for (f64, f64, PointClass, f64, f64) {
    fn from(v: Vertex) -> Self {
        (v.x.x1, v.x.x2, v.class, v.normal[0], v.normal[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub phase: Phase,
    pub closed: bool,
    pub vertices: Vec<Vertex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundary {
    pub tau: f64,
    pub r_nbhd: f64,
    pub grad_tol: f64,
    pub chains: Vec<Chain>,
}

impl FreeBoundary {
    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.chains.iter().flat_map(|c| c.vertices.iter())
    }

    pub fn vertex_count(&self) -> usize {
        self.chains.iter().map(|c| c.vertices.len()).sum()
    }

    pub fn chains_of(&self, phase: Phase) -> impl Iterator<Item = &Chain> {
        self.chains.iter().filter(move |c| c.phase == phase)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<FreeBoundary> {
        Ok(serde_json::from_str(text)?)
    }
}

type EdgeKey = (usize, usize);

/// Oriented segments of `{phase·u = τ}`, in cell order.
fn segments(u: &ScalarField, tau: f64, phase: Phase) -> Vec<(EdgeKey, EdgeKey)> {
    let grid = u.grid();
    let (ni, nj) = grid.cell_dims();
    let s = phase.sign();
    let g = |k: usize| s * u.value(k) - tau;
    let mut out = Vec::new();
    for ci in 0..ni {
        for cj in 0..nj {
            let corners = grid.cell_corners(ci, cj);
            if corners
                .iter()
                .any(|&k| grid.label(k) == NodeLabel::Exterior)
            {
                continue;
            }
            let vals = corners.map(g);
            let inside = vals.map(|v| v > 0.0);
            let mut exits = Vec::with_capacity(2);
            let mut entries = Vec::with_capacity(2);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if inside[a] && !inside[b] {
                    exits.push(e);
                } else if !inside[a] && inside[b] {
                    entries.push(e);
                }
            }
            let key = |e: usize| {
                let (a, b) = (corners[e], corners[(e + 1) % 4]);
                (a.min(b), a.max(b))
            };
            match exits.len() {
                0 => {}
                1 => out.push((key(exits[0]), key(entries[0]))),
                _ => {
                    let center = 0.25 * vals.iter().sum::<f64>() > 0.0;
                    for &e in &exits {
                        let partner = if center { (e + 1) % 4 } else { (e + 3) % 4 };
                        out.push((key(e), key(partner)));
                    }
                }
            }
        }
    }
    out
}

fn edge_point(u: &ScalarField, key: EdgeKey, tau: f64, phase: Phase) -> Point {
    let grid = u.grid();
    let s = phase.sign();
    let (a, b) = key;
    let ga = s * u.value(a) - tau;
    let gb = s * u.value(b) - tau;
    let t = ga / (ga - gb);
    let pa = grid.point(a);
    let pb = grid.point(b);
    Point::new(pa.x1 + t * (pb.x1 - pa.x1), pa.x2 + t * (pb.x2 - pa.x2))
}

/// Joins oriented segments into chains. Each edge starts at most one segment
/// and ends at most one, so the walk is unambiguous; starting points follow
/// cell order.
fn stitch(segs: &[(EdgeKey, EdgeKey)]) -> Vec<(bool, Vec<EdgeKey>)> {
    let by_start: HashMap<EdgeKey, usize> = segs.iter().enumerate().map(|(i, s)| (s.0, i)).collect();
    let by_end: HashMap<EdgeKey, usize> = segs.iter().enumerate().map(|(i, s)| (s.1, i)).collect();
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();
    for first in 0..segs.len() {
        if used[first] {
            continue;
        }
        let mut head = first;
        let mut closed = false;
        while let Some(&prev) = by_end.get(&segs[head].0) {
            if prev == first {
                closed = true;
                break;
            }
            if used[prev] {
                break;
            }
            head = prev;
        }
        let mut keys = vec![segs[head].0];
        let mut cur = head;
        loop {
            used[cur] = true;
            let end = segs[cur].1;
            match by_start.get(&end) {
                Some(&next) if !used[next] => {
                    keys.push(end);
                    cur = next;
                }
                Some(_) if closed => break,
                _ => {
                    keys.push(end);
                    break;
                }
            }
        }
        out.push((closed, keys));
    }
    out
}

/// Window of at most 5 vertices around `i` (3 at the ends of open chains).
fn window(pts: &[Point], closed: bool, i: usize) -> Vec<Point> {
    let n = pts.len();
    if closed && n >= 5 {
        return (0..5).map(|d| pts[(i + n + d - 2) % n]).collect();
    }
    let w = if n >= 5 && i >= 2 && i + 2 < n { 2 } else { 1 };
    let lo = i.saturating_sub(w).min(n.saturating_sub(2 * w + 1));
    let hi = (lo + 2 * w + 1).min(n);
    pts[lo..hi].to_vec()
}

/// Left unit normal of the least-squares line through `pts`, with the tangent
/// oriented from the first to the last point.
fn fit_normal(pts: &[Point], index: usize) -> Result<[f64; 2]> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.x1).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.x2).sum::<f64>() / n;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.x1 - mx, p.x2 - my);
        a += dx * dx;
        b += dx * dy;
        c += dy * dy;
    }
    if !(a + c > 0.0) {
        return Err(Error::DegenerateFit(index));
    }
    let mut t = if b == 0.0 {
        if a >= c {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    } else {
        let th = 0.5 * (2.0 * b).atan2(a - c);
        [th.cos(), th.sin()]
    };
    let first = pts[0];
    let last = pts[pts.len() - 1];
    if t[0] * (last.x1 - first.x1) + t[1] * (last.x2 - first.x2) < 0.0 {
        t = [-t[0], -t[1]];
    }
    Ok([-t[1], t[0]])
}

/// Unit normal at a vertex, pointing into the chain's phase.
pub fn normal_at(fb: &FreeBoundary, chain: usize, vertex: usize) -> Result<[f64; 2]> {
    let c = fb
        .chains
        .get(chain)
        .ok_or(Error::VertexOutOfBounds(chain))?;
    if vertex >= c.vertices.len() {
        return Err(Error::VertexOutOfBounds(vertex));
    }
    if c.vertices.len() < 2 {
        return Err(Error::DegenerateFit(vertex));
    }
    let pts: Vec<Point> = c.vertices.iter().map(|v| v.x).collect();
    fit_normal(&window(&pts, c.closed, vertex), vertex)
}

/// Classification with `tau = h^β`.
pub fn classify_point(
    u: &ScalarField,
    x: Point,
    r_nbhd: f64,
    grad_tol: f64,
    params: &EnergyParams,
) -> Result<PointClass> {
    classify_point_with(u, x, r_nbhd, grad_tol, u.spacing().powf(params.beta()))
}

/// Phases present among the nodes of `B_{r_nbhd}(x)` decide one- versus
/// two-phase; two-phase points whose bilinear gradient is below `grad_tol` are
/// branching.
pub fn classify_point_with(
    u: &ScalarField,
    x: Point,
    r_nbhd: f64,
    grad_tol: f64,
    tau: f64,
) -> Result<PointClass> {
    let mask = ball_mask(u.grid(), x, r_nbhd);
    let plus = mask.nodes().iter().any(|&k| u.value(k) > tau);
    let minus = mask.nodes().iter().any(|&k| u.value(k) < -tau);
    match (plus, minus) {
        (true, false) => Ok(PointClass::PosOnePhase),
        (false, true) => Ok(PointClass::NegOnePhase),
        (false, false) => Err(Error::NotAFreeBoundaryPoint { x1: x.x1, x2: x.x2 }),
        (true, true) => {
            let g = u
                .gradient_at(x)
                .ok_or(Error::NotAFreeBoundaryPoint { x1: x.x1, x2: x.x2 })?;
            if g[0].hypot(g[1]) < grad_tol {
                Ok(PointClass::Branching)
            } else {
                Ok(PointClass::TwoPhase)
            }
        }
    }
}

/// Contours of `u = τ` and `u = -τ`, tagged with `r_nbhd = 2h` and
/// `grad_tol = τ / h` (which is `h^(β-1)` at the default `τ = h^β`).
pub fn extract_free_boundary(u: &ScalarField, tau: f64) -> Result<FreeBoundary> {
    let h = u.spacing();
    extract_free_boundary_with(u, tau, 2.0 * h, tau / h)
}

pub fn extract_free_boundary_with(
    u: &ScalarField,
    tau: f64,
    r_nbhd: f64,
    grad_tol: f64,
) -> Result<FreeBoundary> {
    if !(tau > 0.0) {
        return Err(Error::OutOfRange {
            name: "tau",
            value: tau,
            expected: "tau > 0",
        });
    }
    let mut chains = Vec::new();
    for phase in [Phase::Plus, Phase::Minus] {
        let segs = segments(u, tau, phase);
        for (closed, keys) in stitch(&segs) {
            let pts: Vec<Point> = keys.iter().map(|&k| edge_point(u, k, tau, phase)).collect();
            let mut vertices = Vec::with_capacity(pts.len());
            for (i, &x) in pts.iter().enumerate() {
                let normal = match fit_normal(&window(&pts, closed, i), i) {
                    Ok(n) => n,
                    Err(_) => {
                        // coincident window: fall back to the gradient direction
                        let g = u.gradient_at(x).unwrap_or([1.0, 0.0]);
                        let s = phase.sign() / g[0].hypot(g[1]).max(f64::MIN_POSITIVE);
                        if g == [0.0, 0.0] {
                            [1.0, 0.0]
                        } else {
                            [s * g[0], s * g[1]]
                        }
                    }
                };
                let class = match classify_point_with(u, x, r_nbhd, grad_tol, tau) {
                    Ok(c) => c,
                    // the contour sits on the τ level, so its own phase is
                    // always within reach unless r_nbhd is below a cell
                    Err(_) => match phase {
                        Phase::Plus => PointClass::PosOnePhase,
                        Phase::Minus => PointClass::NegOnePhase,
                    },
                };
                vertices.push(Vertex { x, class, normal });
            }
            chains.push(Chain {
                phase,
                closed,
                vertices,
            });
        }
    }
    Ok(FreeBoundary {
        tau,
        r_nbhd,
        grad_tol,
        chains,
    })
}

impl FreeBoundary {
    /// The boundary of `-u`: phases and one-phase classes exchanged.
    pub fn mirrored(&self) -> FreeBoundary {
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for c in &self.chains {
            let m = Chain {
                phase: match c.phase {
                    Phase::Plus => Phase::Minus,
                    Phase::Minus => Phase::Plus,
                },
                closed: c.closed,
                vertices: c
                    .vertices
                    .iter()
                    .map(|v| Vertex {
                        class: v.class.mirrored(),
                        ..*v
                    })
                    .collect(),
            };
            if m.phase == Phase::Plus {
                plus.push(m);
            } else {
                minus.push(m);
            }
        }
        plus.extend(minus);
        FreeBoundary {
            chains: plus,
            ..self.clone()
        }
    }
}

/// The flat cone `|x1 - z1| < δ |x2 - z2|` with apex `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub apex: Point,
    pub delta: f64,
}

impl ConeSpec {
    pub fn new(apex: Point, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::OutOfRange {
                name: "delta",
                value: delta,
                expected: "delta > 0",
            });
        }
        Ok(ConeSpec { apex, delta })
    }

    pub fn contains(&self, x: Point) -> bool {
        (x.x1 - self.apex.x1).abs() < self.delta * (x.x2 - self.apex.x2).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub cone: ConeSpec,
    pub rho: f64,
    pub checked: usize,
    pub offending: Vec<Point>,
}

impl ConeReport {
    pub fn pass(&self) -> bool {
        self.offending.is_empty()
    }
}

/// Every vertex within `rho` of the apex (other than the apex itself) must lie
/// in the cone.
pub fn cone_check(fb: &FreeBoundary, cone: &ConeSpec, rho: f64) -> Result<ConeReport> {
    if !(rho > 0.0) {
        return Err(Error::OutOfRange {
            name: "rho",
            value: rho,
            expected: "rho > 0",
        });
    }
    let mut checked = 0;
    let mut offending = Vec::new();
    for v in fb.vertices() {
        let d = v.x.dist(cone.apex);
        if d == 0.0 || d > rho {
            continue;
        }
        checked += 1;
        if !cone.contains(v.x) {
            offending.push(v.x);
        }
    }
    Ok(ConeReport {
        cone: *cone,
        rho,
        checked,
        offending,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangencyBand {
    pub lo: f64,
    pub hi: f64,
    pub vertices: usize,
    /// Largest angle (radians) between a vertex normal and the `x1` axis.
    pub max_deviation: Option<f64>,
}

/// Normal deviation from `±e1` per band `lo < x1 ≤ hi`.
pub fn tangency_profile(fb: &FreeBoundary, band_edges: &[f64]) -> Result<Vec<TangencyBand>> {
    if band_edges.len() < 2 || band_edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "band edges must be at least two strictly increasing values".into(),
        ));
    }
    Ok(band_edges
        .windows(2)
        .map(|w| {
            let devs: Vec<f64> = fb
                .vertices()
                .filter(|v| v.x.x1 > w[0] && v.x.x1 <= w[1])
                .map(|v| v.normal[0].abs().min(1.0).acos())
                .collect();
            TangencyBand {
                lo: w[0],
                hi: w[1],
                vertices: devs.len(),
                max_deviation: devs.iter().cloned().reduce(f64::max),
            }
        })
        .collect())
}

pub fn tangency_csv(bands: &[TangencyBand]) -> String {
    let mut s = String::from("lo,hi,vertices,max_deviation\n");
    for b in bands {
        let d = b.max_deviation.map(|d| d.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{},{},{d}\n", b.lo, b.hi, b.vertices));
    }
    s
}

/// Points where a chain of `phase` enters the strip `x1 ≤ strip` from the
/// interior (the first vertex inside the strip). Past such a point the
/// contour only traces the thin layer where `u` leaves zero on `Π`; with
/// `strip = h` this is the discrete contact of the free boundary with `Π`.
pub fn pi_contacts(fb: &FreeBoundary, phase: Phase, strip: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for c in fb.chains_of(phase) {
        for w in c.vertices.windows(2) {
            let (a, b) = (w[0].x, w[1].x);
            if (a.x1 > strip) != (b.x1 > strip) {
                out.push(if a.x1 <= strip { a } else { b });
            }
        }
    }
    out
}

/// Smallest `|z⁺_2 - z⁻_2|` over pairs of contacts of the two phases, `None`
/// if either phase has none.
pub fn contact_separation(fb: &FreeBoundary, strip: f64) -> Option<f64> {
    let plus = pi_contacts(fb, Phase::Plus, strip);
    let minus = pi_contacts(fb, Phase::Minus, strip);
    plus.iter()
        .flat_map(|a| minus.iter().map(move |b| (a.x2 - b.x2).abs()))
        .reduce(f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, DomainSpec};
    use std::sync::Arc;

    fn rect(h: f64) -> Arc<crate::domain::Grid> {
        Arc::new(build_grid(DomainSpec::rectangle(1.0, 2.0, h)).unwrap())
    }

    #[test]
    fn linear_field_gives_one_straight_chain() {
        let g = rect(0.25);
        let u = ScalarField::from_fn(g, |x| x.x1 - 0.5);
        let fb = extract_free_boundary(&u, 1e-6).unwrap();
        // one chain per level: u = τ for the positive phase, u = -τ for the negative
        assert_eq!(fb.chains.len(), 2);
        for (ci, c) in fb.chains.iter().enumerate() {
            assert!(!c.closed);
            assert_eq!(c.vertices.len(), 9);
            let n = if c.phase == Phase::Plus { [1.0, 0.0] } else { [-1.0, 0.0] };
            for (i, v) in c.vertices.iter().enumerate() {
                assert!((v.x.x1 - 0.5).abs() < 1e-6 + 1e-12);
                assert_eq!(v.normal, n);
                assert_eq!(normal_at(&fb, ci, i).unwrap(), n);
            }
        }
        assert_eq!(fb.chains[0].phase, Phase::Plus);
    }

    #[test]
    fn constant_field_has_no_boundary() {
        let g = rect(0.25);
        let u = ScalarField::from_fn(g, |x| if x.x1 == 0.0 { 0.0 } else { 1.0 });
        let inner = extract_free_boundary(&u.map(|_| 1.0), 1e-6).unwrap();
        assert!(inner.is_empty());
    }

    #[test]
    fn tilted_line_normal() {
        let g = rect(1.0 / 16.0);
        let u = ScalarField::from_fn(g, |x| x.x1 - 0.2 * x.x2 - 0.3);
        let fb = extract_free_boundary(&u, 1e-9).unwrap();
        let s = 1.04f64.sqrt();
        for v in fb.chains_of(Phase::Plus).flat_map(|c| c.vertices.iter()) {
            assert!((v.normal[0] - 1.0 / s).abs() < 1e-9);
            assert!((v.normal[1] + 0.2 / s).abs() < 1e-9);
        }
    }

    #[test]
    fn classification_cases() {
        let g = Arc::new(build_grid(DomainSpec::half_disk(1.0, 1.0 / 128.0)).unwrap());
        let pr = EnergyParams::new(1.0, 1.0, 0.5).unwrap();
        let h: f64 = 1.0 / 128.0;
        let x = Point::new(0.3, 0.0);
        let one = ScalarField::from_fn(g.clone(), |p| (p.x1 - 0.3).max(0.0).powf(4.0 / 3.0));
        assert_eq!(classify_point(&one, x, 2.0 * h, 0.1, &pr).unwrap(), PointClass::PosOnePhase);
        let lin = ScalarField::from_fn(g.clone(), |p| p.x1 - 0.3);
        assert_eq!(classify_point(&lin, x, 2.0 * h, 0.1, &pr).unwrap(), PointClass::TwoPhase);
        let br = ScalarField::from_fn(g.clone(), |p| {
            (p.x1 - 0.3).max(0.0).powf(4.0 / 3.0) - (0.3 - p.x1).max(0.0).powf(4.0 / 3.0)
        });
        let tol = h.powf(1.0 / 3.0);
        assert_eq!(classify_point(&br, x, 2.0 * h, tol, &pr).unwrap(), PointClass::Branching);
        let z = ScalarField::zeros(g);
        assert!(matches!(
            classify_point(&z, x, 2.0 * h, tol, &pr),
            Err(Error::NotAFreeBoundaryPoint { .. })
        ));
    }

    #[test]
    fn cone_cases() {
        let z = Point::new(0.0, 0.0);
        let pts: Vec<Vertex> = (-10..=10)
            .map(|k| {
                let x2 = k as f64 * 0.01;
                Vertex {
                    x: Point::new(0.1 * x2.abs(), x2),
                    class: PointClass::PosOnePhase,
                    normal: [1.0, 0.0],
                }
            })
            .collect();
        let fb = FreeBoundary {
            tau: 1e-6,
            r_nbhd: 0.01,
            grad_tol: 0.1,
            chains: vec![Chain {
                phase: Phase::Plus,
                closed: false,
                vertices: pts,
            }],
        };
        assert!(cone_check(&fb, &ConeSpec::new(z, 0.2).unwrap(), 1.0).unwrap().pass());
        let r = cone_check(&fb, &ConeSpec::new(z, 0.05).unwrap(), 1.0).unwrap();
        assert_eq!(r.offending.len(), 20);
        let vertical = FreeBoundary {
            chains: vec![Chain {
                phase: Phase::Plus,
                closed: false,
                vertices: (0..5)
                    .map(|k| Vertex {
                        x: Point::new(k as f64 * 0.01, 0.0),
                        class: PointClass::PosOnePhase,
                        normal: [0.0, 1.0],
                    })
                    .collect(),
            }],
            ..fb.clone()
        };
        assert!(!cone_check(&vertical, &ConeSpec::new(z, 10.0).unwrap(), 1.0).unwrap().pass());
        assert!(ConeSpec::new(z, 0.0).is_err());
    }

    #[test]
    fn tangency_bands() {
        let g = rect(1.0 / 64.0);
        let u = ScalarField::from_fn(g, |x| x.x1 - 0.5 * x.x2 * x.x2);
        let fb = extract_free_boundary(&u, 1e-9).unwrap();
        let bands = tangency_profile(&fb, &[0.0, 0.05, 0.2, 0.3, 0.9, 0.95]).unwrap();
        let d0 = bands[0].max_deviation.unwrap();
        let d2 = bands[2].max_deviation.unwrap();
        assert!(d0 < d2);
        assert!(bands[4].max_deviation.is_none());
        let flat = extract_free_boundary(&ScalarField::from_fn(rect(0.25), |x| x.x1 - 0.2), 1e-9).unwrap();
        let b = tangency_profile(&flat, &[0.0, 0.5]).unwrap();
        assert_eq!(b[0].max_deviation, Some(0.0));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let g = rect(1.0 / 16.0);
        let u = ScalarField::from_fn(g, |x| (x.x1 - 0.3) * (1.0 + x.x2.sin()) - 0.1 * x.x2);
        let fb = extract_free_boundary(&u, 1e-3).unwrap();
        let back = FreeBoundary::from_json(&fb.to_json().unwrap()).unwrap();
        assert_eq!(back, fb);
    }

    #[test]
    fn contacts_are_first_column_entries() {
        // Γ⁺ leaves Π at x2 = 0.5 along x1 = (x2 - 0.5)², the layer above
        // it sits at x1 = 0.01; Γ⁻ mirrors it below x2 = -0.5.
        let chain = |phase: Phase, sign: f64| {
            let vertices = (0..=40)
                .map(|k| {
                    let t = k as f64 * 0.025;
                    let x1 = if t < 0.5 { (t - 0.5) * (t - 0.5) } else { 0.01 };
                    Vertex {
                        x: Point::new(x1.max(0.01), sign * t),
                        class: PointClass::PosOnePhase,
                        normal: [1.0, 0.0],
                    }
                })
                .collect();
            Chain { phase, closed: false, vertices }
        };
        let fb = FreeBoundary {
            tau: 1e-3,
            r_nbhd: 0.05,
            grad_tol: 0.1,
            chains: vec![chain(Phase::Plus, 1.0), chain(Phase::Minus, -1.0)],
        };
        let z = pi_contacts(&fb, Phase::Plus, 0.02);
        assert_eq!(z.len(), 1);
        assert!((z[0].x2 - 0.375).abs() < 1e-12, "{z:?}");
        assert!((contact_separation(&fb, 0.02).unwrap() - 0.75).abs() < 1e-12);
        assert!(contact_separation(&FreeBoundary { chains: vec![], ..fb }, 0.02).is_none());
    }
}
