//! Masked Cartesian discretization of the half-disk `B_R ∩ {x1 > 0}` (or a
//! rectangle whose left edge sits on `{x1 = 0}`).
//!
//! Nodes live on the lattice `(i h, j h)` with `i >= 0`. Each node carries a
//! [`NodeLabel`]: interior nodes are unknowns, `pi` nodes sit on the flat
//! boundary `{x1 = 0}` and always carry the value 0, `arc` nodes carry the
//! Dirichlet data of the outer boundary. Boundary nodes are the non-interior
//! nodes in the 8-neighbourhood of an interior node, so every cell touching an
//! interior node has four valued corners and the 5-point stencil is uniform.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the plane, `x1` normal to the flat boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x1: f64,
    pub x2: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Point { x1, x2 }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x1 - other.x1).hypot(self.x2 - other.x2)
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    HalfDisk,
    Rectangle { width: f64, height: f64 },
}

impl Shape {
    pub fn name(&self) -> String {
        match self {
            Shape::HalfDisk => "half_disk".to_string(),
            Shape::Rectangle { width, height } => format!("rectangle({width},{height})"),
        }
    }

    pub fn parse(name: &str) -> Result<Shape> {
        if name == "half_disk" {
            return Ok(Shape::HalfDisk);
        }
        let inner = name
            .strip_prefix("rectangle(")
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| Error::InvalidDomain(format!("unknown shape `{name}`")))?;
        let (w, h) = inner
            .split_once(',')
            .ok_or_else(|| Error::InvalidDomain(format!("bad rectangle `{name}`")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidDomain(format!("bad rectangle `{name}`")))
        };
        Ok(Shape::Rectangle {
            width: parse(w)?,
            height: parse(h)?,
        })
    }
}

/// Radius, lattice spacing and shape of the computational domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub radius: f64,
    pub spacing: f64,
    pub shape: Shape,
}

impl DomainSpec {
    pub fn half_disk(radius: f64, spacing: f64) -> Self {
        DomainSpec {
            radius,
            spacing,
            shape: Shape::HalfDisk,
        }
    }

    /// Rectangle `(0, width) x (-height/2, height/2)`.
    pub fn rectangle(width: f64, height: f64, spacing: f64) -> Self {
        DomainSpec {
            radius: 1.0,
            spacing,
            shape: Shape::Rectangle { width, height },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.spacing;
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "spacing must be positive, got {h}"
            )));
        }
        if let Shape::Rectangle { width, height } = self.shape {
            if !(width.is_finite() && width > 0.0 && height.is_finite() && height > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "rectangle needs positive width and height, got {width} x {height}"
                )));
            }
        }
        Ok(())
    }

    fn extents(&self) -> (f64, f64) {
        match self.shape {
            Shape::HalfDisk => (self.radius, self.radius),
            Shape::Rectangle { width, height } => (width, 0.5 * height),
        }
    }

    /// Strictly inside and at least `h/2` away from the outer boundary.
    fn is_interior(&self, x1: f64, x2: f64) -> bool {
        let h = self.spacing;
        if x1 <= 0.0 {
            return false;
        }
        match self.shape {
            Shape::HalfDisk => {
                let r2 = x1 * x1 + x2 * x2;
                let inner = self.radius - 0.5 * h;
                r2 < self.radius * self.radius && inner > 0.0 && r2 <= inner * inner
            }
            Shape::Rectangle { width, height } => {
                let half = 0.5 * height;
                x1 < width && x2.abs() < half && x1 <= width - 0.5 * h && x2.abs() <= half - 0.5 * h
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeLabel {
    Interior,
    Pi,
    Arc,
    Exterior,
}

impl NodeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeLabel::Interior => "interior",
            NodeLabel::Pi => "pi",
            NodeLabel::Arc => "arc",
            NodeLabel::Exterior => "exterior",
        }
    }

    pub fn is_boundary(self) -> bool {
        matches!(self, NodeLabel::Pi | NodeLabel::Arc)
    }
}

/// A set of node indices of one grid, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Mask {
    nodes: Vec<usize>,
}

impl Mask {
    pub fn from_nodes(mut nodes: Vec<usize>) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        Mask { nodes }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    pub fn is_disjoint(&self, other: &Mask) -> bool {
        self.nodes.iter().all(|&n| !other.contains(n))
    }
}

/// The discretized domain. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: DomainSpec,
    nx: usize,
    ny: usize,
    labels: Vec<NodeLabel>,
    cells: Vec<bool>,
    interior_count: usize,
}

/// Discretize `spec`. Pure and deterministic.
pub fn build_grid(spec: DomainSpec) -> Result<Grid> {
    spec.validate()?;
    let h = spec.spacing;
    let (ex, ey) = spec.extents();
    if h >= spec.radius.min(ex).min(2.0 * ey) {
        return Err(Error::SpacingTooCoarse { interior: 0 });
    }
    let nx = (ex / h).ceil() as usize + 1;
    let ny = (ey / h).ceil() as usize + 1;
    let width = 2 * ny + 1;
    let mut labels = vec![NodeLabel::Exterior; (nx + 1) * width];
    let mut interior_count = 0;
    for i in 1..=nx {
        for jj in 0..width {
            let j = jj as i64 - ny as i64;
            if spec.is_interior(i as f64 * h, j as f64 * h) {
                labels[i * width + jj] = NodeLabel::Interior;
                interior_count += 1;
            }
        }
    }
    if interior_count < 3 {
        return Err(Error::SpacingTooCoarse {
            interior: interior_count,
        });
    }
    for i in 1..=nx {
        for jj in 0..width {
            if labels[i * width + jj] != NodeLabel::Interior {
                continue;
            }
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let ni = i as i64 + di;
                    let nj = jj as i64 + dj;
                    // interior nodes keep a full ring inside the bounding box
                    let k = ni as usize * width + nj as usize;
                    if labels[k] == NodeLabel::Exterior {
                        labels[k] = if ni == 0 { NodeLabel::Pi } else { NodeLabel::Arc };
                    }
                }
            }
        }
    }
    let mut cells = vec![false; nx * (width - 1)];
    for i in 0..nx {
        for jj in 0..width - 1 {
            let corners = [
                i * width + jj,
                (i + 1) * width + jj,
                (i + 1) * width + jj + 1,
                i * width + jj + 1,
            ];
            cells[i * (width - 1) + jj] =
                corners.iter().any(|&k| labels[k] == NodeLabel::Interior);
        }
    }
    Ok(Grid {
        spec,
        nx,
        ny,
        labels,
        cells,
        interior_count,
    })
}

impl Grid {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn spacing(&self) -> f64 {
        self.spec.spacing
    }

    pub fn radius(&self) -> f64 {
        self.spec.radius
    }

    /// Largest `i` index.
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// `j` runs over `-ny..=ny`.
    pub fn ny(&self) -> usize {
        self.ny
    }

    fn row_len(&self) -> usize {
        2 * self.ny + 1
    }

    /// Total number of lattice nodes in the bounding box, exterior included.
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn interior_count(&self) -> usize {
        self.interior_count
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> NodeLabel {
        self.labels[node]
    }

    pub fn index(&self, i: usize, j: i64) -> Option<usize> {
        if i > self.nx || j.unsigned_abs() as usize > self.ny {
            return None;
        }
        Some(i * self.row_len() + (j + self.ny as i64) as usize)
    }

    pub fn coords(&self, node: usize) -> (usize, i64) {
        let w = self.row_len();
        (node / w, (node % w) as i64 - self.ny as i64)
    }

    pub fn point(&self, node: usize) -> Point {
        let (i, j) = self.coords(node);
        let h = self.spacing();
        Point::new(i as f64 * h, j as f64 * h)
    }

    /// Axis neighbours (east, west, north, south). Only valid for interior nodes,
    /// which never touch the bounding box.
    pub fn neighbors(&self, node: usize) -> [usize; 4] {
        let w = self.row_len();
        [node + w, node - w, node + 1, node - 1]
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == NodeLabel::Interior)
            .map(|(k, _)| k)
    }

    pub fn valued_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l != NodeLabel::Exterior)
            .map(|(k, _)| k)
    }

    pub fn valued_count(&self) -> usize {
        self.labels.iter().filter(|l| **l != NodeLabel::Exterior).count()
    }

    /// Number of cells along `i` and along `j`.
    pub fn cell_dims(&self) -> (usize, usize) {
        (self.nx, self.row_len() - 1)
    }

    /// A cell is part of the quadrature domain when it has an interior corner.
    pub fn cell_included(&self, ci: usize, cj: usize) -> bool {
        let (ni, nj) = self.cell_dims();
        ci < ni && cj < nj && self.cells[ci * nj + cj]
    }

    /// Corner node indices of cell `(ci, cj)` in counter-clockwise order starting
    /// at the lower-left corner; `cj` is the shifted row index (`j + ny`).
    pub fn cell_corners(&self, ci: usize, cj: usize) -> [usize; 4] {
        let w = self.row_len();
        [
            ci * w + cj,
            (ci + 1) * w + cj,
            (ci + 1) * w + cj + 1,
            ci * w + cj + 1,
        ]
    }

    /// Lower-left corner coordinates of cell `(ci, cj)`.
    pub fn cell_origin(&self, ci: usize, cj: usize) -> Point {
        let h = self.spacing();
        Point::new(ci as f64 * h, (cj as i64 - self.ny as i64) as f64 * h)
    }

    /// Split of the boundary nodes into the flat part and the outer arc.
    pub fn boundary_nodes(&self) -> (Mask, Mask) {
        boundary_nodes(self)
    }

    /// Grid serialization: header followed by `i j label` per node, row-major.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.labels.len() * 12);
        out.push_str("FBGRID v1\n");
        let _ = writeln!(
            out,
            "R={} h={} shape={}",
            self.spec.radius,
            self.spec.spacing,
            self.spec.shape.name()
        );
        for (k, l) in self.labels.iter().enumerate() {
            let (i, j) = self.coords(k);
            let _ = writeln!(out, "{i} {j} {}", l.as_str());
        }
        out
    }

    /// Inverse of [`Grid::to_text`]: rebuilds the grid from the header and checks
    /// every node line against it.
    pub fn from_text(text: &str) -> Result<Grid> {
        let mut lines = text.lines();
        let (spec, _) = parse_grid_header(&mut lines)?;
        let grid = build_grid(spec)?;
        let mut count = 0;
        for (k, line) in lines.enumerate() {
            let expected = grid.labels.get(k).ok_or_else(|| Error::Format {
                kind: "FBGRID",
                message: "more node lines than the header implies".into(),
            })?;
            let (i, j) = grid.coords(k);
            if line != format!("{i} {j} {}", expected.as_str()) {
                return Err(Error::Format {
                    kind: "FBGRID",
                    message: format!("node line {k} `{line}` disagrees with the header"),
                });
            }
            count += 1;
        }
        if count != grid.node_count() {
            return Err(Error::Format {
                kind: "FBGRID",
                message: format!("expected {} node lines, found {count}", grid.node_count()),
            });
        }
        Ok(grid)
    }

    /// Just the two header lines of [`Grid::to_text`].
    pub fn header(&self) -> String {
        format!(
            "FBGRID v1\nR={} h={} shape={}\n",
            self.spec.radius,
            self.spec.spacing,
            self.spec.shape.name()
        )
    }
}

/// Parses the two FBGRID header lines, returning the spec and the header text.
pub(crate) fn parse_grid_header<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
) -> Result<(DomainSpec, String)> {
    let bad = |message: String| Error::Format {
        kind: "FBGRID",
        message,
    };
    let magic = lines.next().ok_or_else(|| bad("missing magic line".into()))?;
    if magic != "FBGRID v1" {
        return Err(bad(format!("bad magic `{magic}`")));
    }
    let params = lines.next().ok_or_else(|| bad("missing parameter line".into()))?;
    let mut radius = None;
    let mut spacing = None;
    let mut shape = None;
    for tok in params.split(' ') {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| bad(format!("bad token `{tok}`")))?;
        match k {
            "R" => radius = v.parse::<f64>().ok(),
            "h" => spacing = v.parse::<f64>().ok(),
            "shape" => shape = Some(Shape::parse(v)?),
            _ => return Err(bad(format!("unknown header key `{k}`"))),
        }
    }
    let spec = DomainSpec {
        radius: radius.ok_or_else(|| bad("missing R".into()))?,
        spacing: spacing.ok_or_else(|| bad("missing h".into()))?,
        shape: shape.ok_or_else(|| bad("missing shape".into()))?,
    };
    Ok((spec, format!("{magic}\n{params}\n")))
}

/// `(pi, arc)`: the flat-boundary nodes and the outer-boundary nodes.
pub fn boundary_nodes(grid: &Grid) -> (Mask, Mask) {
    let mut pi = Vec::new();
    let mut arc = Vec::new();
    for (k, l) in grid.labels.iter().enumerate() {
        match l {
            NodeLabel::Pi => pi.push(k),
            NodeLabel::Arc => arc.push(k),
            _ => {}
        }
    }
    (Mask { nodes: pi }, Mask { nodes: arc })
}

/// Valued grid nodes within distance `r` of `center`. Empty for `r == 0`.
pub fn ball_mask(grid: &Grid, center: Point, r: f64) -> Mask {
    if !(r > 0.0) {
        return Mask::default();
    }
    let h = grid.spacing();
    let i_lo = ((center.x1 - r) / h).floor().max(0.0) as usize;
    let i_hi = (((center.x1 + r) / h).ceil().max(0.0) as usize).min(grid.nx);
    let j_lo = ((center.x2 - r) / h).floor().max(-(grid.ny as f64)) as i64;
    let j_hi = ((center.x2 + r) / h).ceil().min(grid.ny as f64) as i64;
    let mut nodes = Vec::new();
    for i in i_lo..=i_hi {
        for j in j_lo..=j_hi {
            if let Some(k) = grid.index(i, j) {
                if grid.labels[k] != NodeLabel::Exterior && grid.point(k).dist(center) <= r {
                    nodes.push(k);
                }
            }
        }
    }
    Mask { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(grid: &Grid, mask: &Mask) -> Vec<(f64, f64)> {
        mask.nodes()
            .iter()
            .map(|&k| {
                let p = grid.point(k);
                (p.x1, p.x2)
            })
            .collect()
    }

    #[test]
    fn coarse_half_disk_has_three_interior_nodes() {
        let g = build_grid(DomainSpec::half_disk(1.0, 0.5)).unwrap();
        let interior: Vec<_> = g.interior_nodes().map(|k| g.point(k)).collect();
        assert_eq!(
            interior,
            vec![
                Point::new(0.5, -0.5),
                Point::new(0.5, 0.0),
                Point::new(0.5, 0.5)
            ]
        );
        let (pi, arc) = g.boundary_nodes();
        let pi = pts(&g, &pi);
        for p in [(0.0, -0.5), (0.0, 0.0), (0.0, 0.5)] {
            assert!(pi.contains(&p), "{p:?} missing from {pi:?}");
        }
        assert!(pi.iter().all(|p| p.0 == 0.0));
        assert!(!arc.is_empty());
    }

    #[test]
    fn too_coarse_spacing_is_rejected() {
        assert!(matches!(
            build_grid(DomainSpec::half_disk(1.0, 2.0)),
            Err(Error::SpacingTooCoarse { .. })
        ));
        assert!(matches!(
            build_grid(DomainSpec::half_disk(1.0, 0.9)),
            Err(Error::SpacingTooCoarse { .. })
        ));
        assert!(build_grid(DomainSpec::half_disk(1.0, -0.1)).is_err());
        assert!(build_grid(DomainSpec::rectangle(0.0, 1.0, 0.1)).is_err());
    }

    #[test]
    fn fine_grid_count_matches_area() {
        let h = 1.0 / 128.0;
        let g = build_grid(DomainSpec::half_disk(1.0, h)).unwrap();
        let expected = std::f64::consts::FRAC_PI_2 / (h * h);
        let rel = (g.interior_count() as f64 - expected).abs() / expected;
        assert!(rel < 0.02, "count {} vs {expected}", g.interior_count());
    }

    #[test]
    fn rectangle_left_edge_is_pi_with_corners() {
        let g = build_grid(DomainSpec::rectangle(1.0, 2.0, 0.5)).unwrap();
        assert_eq!(g.interior_count(), 3);
        let (pi, arc) = g.boundary_nodes();
        let pi = pts(&g, &pi);
        assert_eq!(
            pi,
            vec![(0.0, -1.0), (0.0, -0.5), (0.0, 0.0), (0.0, 0.5), (0.0, 1.0)]
        );
        assert!(pi.iter().all(|p| !pts(&g, &arc).contains(p)));
    }

    #[test]
    fn interior_nodes_have_valued_neighbours() {
        for spec in [
            DomainSpec::half_disk(1.0, 0.1),
            DomainSpec::half_disk(1.3, 0.07),
            DomainSpec::rectangle(0.7, 1.1, 0.05),
        ] {
            let g = build_grid(spec).unwrap();
            for k in g.interior_nodes() {
                for n in g.neighbors(k) {
                    assert_ne!(g.label(n), NodeLabel::Exterior);
                }
            }
            let (pi, arc) = g.boundary_nodes();
            assert!(pi.is_disjoint(&arc));
            assert!(pi.nodes().iter().all(|&k| g.point(k).x1 == 0.0));
            let boundary = g.labels().iter().filter(|l| l.is_boundary()).count();
            assert_eq!(pi.len() + arc.len(), boundary);
        }
    }

    #[test]
    fn ball_mask_cases() {
        let h = 1.0 / 16.0;
        let g = build_grid(DomainSpec::half_disk(1.0, h)).unwrap();
        let c = Point::new(0.5, 0.0);
        assert!(ball_mask(&g, c, 0.0).is_empty());
        assert_eq!(ball_mask(&g, c, 10.0).len(), g.valued_count());
        let single = ball_mask(&g, c, 0.6 * h);
        assert_eq!(single.len(), 1);
        assert_eq!(g.point(single.nodes()[0]), c);
    }

    #[test]
    fn refinement_never_loses_interior_nodes() {
        let mut prev = 0;
        for k in 3..8 {
            let g = build_grid(DomainSpec::half_disk(1.0, 0.5f64.powi(k))).unwrap();
            assert!(g.interior_count() >= prev);
            prev = g.interior_count();
        }
    }

    #[test]
    fn text_round_trip_is_stable() {
        let spec = DomainSpec::rectangle(0.6, 0.8, 0.1);
        let a = build_grid(spec).unwrap();
        let b = build_grid(spec).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert!(a.to_text().starts_with("FBGRID v1\nR=1 h=0.1 shape=rectangle(0.6,0.8)\n"));
        assert_eq!(Grid::from_text(&a.to_text()).unwrap(), a);
    }
}
