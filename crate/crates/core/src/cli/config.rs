//! Flat INI-style run configuration.
//!
//! ```text
//! [domain]
//! R = 1
//! h = 1/64
//! preset = halfplane_trace
//! [energy]
//! p = 0.5
//! [analysis]
//! weiss_centers = 0 0
//! [output]
//! dir = out/halfplane
//! ```
//!
//! Every key belongs to exactly one section; unknown keys, unknown sections
//! and repeated keys are errors carrying the line number.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{dyadic_radii, WeissFactor};
use crate::domain::{DomainSpec, Grid, Point, Shape};
use crate::energy::EnergyParams;
use crate::error::{Error, Result};
use crate::minimize::{BoundaryData, Schedule};

const KEYS: &[(&str, &[&str])] = &[
    ("domain", &["R", "h", "shape", "preset", "M", "gap", "table"]),
    ("energy", &["lambda_plus", "lambda_minus", "p", "weiss_factor"]),
    (
        "schedule",
        &["eps_start", "eps_factor", "eps_min", "inner_tol", "max_inner_iters", "seeds"],
    ),
    (
        "analysis",
        &[
            "weiss_centers",
            "weiss_radii",
            "weiss_slack",
            "growth_centers",
            "growth_radii",
            "nondeg_centers",
            "nondeg_radii",
            "nondeg_slack",
            "witness_centers",
            "campanato_centers",
            "campanato_radii",
            "blowup_center",
            "blowup_scales",
            "profile",
            "tangency_bands",
            "cone_delta",
            "cone_rho",
            "audit_count",
            "audit_amplitude",
            "audit_seed",
        ],
    ),
    ("output", &["dir"]),
];

/// Boundary data on the arc, by preset name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "preset")]
pub enum BoundaryPreset {
    Zero,
    /// Trace of the half-plane profile for `lambda_plus` and `p`.
    HalfplaneTrace,
    TwoPhase { m: f64, gap: f64 },
    /// `i j value` lines, one per arc node.
    Table { path: PathBuf },
}

impl BoundaryPreset {
    pub fn resolve(&self, params: &EnergyParams) -> Result<BoundaryData> {
        Ok(match self {
            BoundaryPreset::Zero => BoundaryData::Zero,
            BoundaryPreset::HalfplaneTrace => BoundaryData::HalfplaneTrace {
                lambda: params.lambda_plus(),
                p: params.p(),
            },
            BoundaryPreset::TwoPhase { m, gap } => BoundaryData::TwoPhase { m: *m, gap: *gap },
            BoundaryPreset::Table { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                BoundaryData::table_from_text(&text)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySection {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub p: f64,
    /// Derived: `2 / (2 - p)`.
    pub beta: f64,
    pub weiss_factor: WeissFactor,
}

impl EnergySection {
    pub fn params(&self) -> EnergyParams {
        EnergyParams::new(self.lambda_plus, self.lambda_minus, self.p).expect("validated at parse time")
    }
}

/// Schedule entries left unset take the grid-dependent defaults of
/// [`Schedule::default_for`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSection {
    pub eps_start: Option<f64>,
    pub eps_factor: Option<f64>,
    pub eps_min: Option<f64>,
    pub inner_tol: Option<f64>,
    pub max_inner_iters: Option<usize>,
    pub seeds: Option<Vec<u32>>,
}

impl ScheduleSection {
    pub fn resolve(&self, grid: &Grid, params: &EnergyParams) -> Schedule {
        let d = Schedule::default_for(grid, params);
        Schedule {
            eps_start: self.eps_start.unwrap_or(d.eps_start),
            eps_factor: self.eps_factor.unwrap_or(d.eps_factor),
            eps_min: self.eps_min.unwrap_or(d.eps_min),
            inner_tol: self.inner_tol.unwrap_or(d.inner_tol),
            max_inner_iters: self.max_inner_iters.unwrap_or(d.max_inner_iters),
            seeds: self.seeds.clone().unwrap_or(d.seeds),
        }
    }
}

/// Requested analyses. Empty center lists switch an analysis off; radii left
/// unset are dyadic between a multiple of `h` and `R/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRequests {
    pub weiss_centers: Vec<Point>,
    pub weiss_radii: Option<Vec<f64>>,
    /// Allowed negative increment, as a fraction of the series range.
    pub weiss_slack: f64,
    pub growth_centers: Vec<Point>,
    pub growth_radii: Option<Vec<f64>>,
    pub nondeg_centers: Vec<Point>,
    pub nondeg_radii: Option<Vec<f64>>,
    pub nondeg_slack: f64,
    pub witness_centers: Vec<Point>,
    pub campanato_centers: Vec<Point>,
    pub campanato_radii: Option<Vec<f64>>,
    pub blowup_center: Option<Point>,
    pub blowup_scales: Vec<f64>,
    pub profile: bool,
    pub tangency_bands: Vec<f64>,
    pub cone_delta: Option<f64>,
    pub cone_rho: f64,
    pub audit_count: usize,
    pub audit_amplitude: f64,
    pub audit_seed: u64,
}

impl Default for AnalysisRequests {
    fn default() -> Self {
        AnalysisRequests {
            weiss_centers: vec![],
            weiss_radii: None,
            weiss_slack: 0.05,
            growth_centers: vec![],
            growth_radii: None,
            nondeg_centers: vec![],
            nondeg_radii: None,
            nondeg_slack: 0.9,
            witness_centers: vec![],
            campanato_centers: vec![],
            campanato_radii: None,
            blowup_center: None,
            blowup_scales: vec![],
            profile: false,
            tangency_bands: vec![],
            cone_delta: None,
            cone_rho: 0.1,
            audit_count: 0,
            audit_amplitude: 0.05,
            audit_seed: 0,
        }
    }
}

impl AnalysisRequests {
    fn radii_or(&self, given: &Option<Vec<f64>>, lo_cells: f64, grid: &Grid) -> Vec<f64> {
        given
            .clone()
            .unwrap_or_else(|| dyadic_radii(lo_cells * grid.spacing(), 0.5 * grid.radius()))
    }

    pub fn weiss_radii(&self, grid: &Grid) -> Vec<f64> {
        self.radii_or(&self.weiss_radii, 8.0, grid)
    }

    pub fn growth_radii(&self, grid: &Grid) -> Vec<f64> {
        self.radii_or(&self.growth_radii, 8.0, grid)
    }

    pub fn nondeg_radii(&self, grid: &Grid) -> Vec<f64> {
        self.radii_or(&self.nondeg_radii, 8.0, grid)
    }

    pub fn campanato_radii(&self, grid: &Grid) -> Vec<f64> {
        self.radii_or(&self.campanato_radii, 4.0, grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub boundary: BoundaryPreset,
    pub energy: EnergySection,
    pub schedule: ScheduleSection,
    pub analysis: AnalysisRequests,
    pub output_dir: PathBuf,
}

struct Entry {
    value: String,
    line: usize,
}

/// Raw `section.key -> value` map, before typing.
struct Raw {
    path: String,
    entries: BTreeMap<(String, String), Entry>,
}

impl Raw {
    fn parse(text: &str, path: &str) -> Result<Raw> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let mut entries = BTreeMap::new();
        let mut section: Option<&str> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let t = raw.split('#').next().unwrap_or("").trim();
            if t.is_empty() || t.starts_with(';') {
                continue;
            }
            if let Some(name) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                let known = KEYS.iter().find(|(s, _)| *s == name);
                section = Some(known.ok_or_else(|| err(line, format!("unknown section `[{name}]`")))?.0);
                continue;
            }
            let (key, value) = t
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{t}`")))?;
            let key = key.trim();
            let sec = section.ok_or_else(|| err(line, format!("`{key}` appears before any section")))?;
            let allowed = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !allowed.contains(&key) {
                return Err(Error::UnknownKey {
                    path: path.to_string(),
                    line,
                    key: key.to_string(),
                });
            }
            let value = value.trim().to_string();
            let slot = (sec.to_string(), key.to_string());
            if let Some(prev) = entries.get(&slot) {
                let prev: &Entry = prev;
                return Err(err(line, format!("`{key}` already set on line {}", prev.line)));
            }
            entries.insert(slot, Entry { value, line });
        }
        Ok(Raw {
            path: path.to_string(),
            entries,
        })
    }

    /// `name` is either `key` or `section.key`.
    fn set(&mut self, name: &str, value: &str) -> Result<()> {
        let (sec, key) = match name.split_once('.') {
            Some((s, k)) => (s.to_string(), k.to_string()),
            None => {
                let owner = KEYS
                    .iter()
                    .find(|(_, keys)| keys.contains(&name))
                    .ok_or_else(|| Error::Config(format!("unknown parameter `{name}`")))?;
                (owner.0.to_string(), name.to_string())
            }
        };
        let known = KEYS.iter().any(|(s, keys)| *s == sec && keys.contains(&key.as_str()));
        if !known {
            return Err(Error::Config(format!("unknown parameter `{name}`")));
        }
        self.entries.insert(
            (sec, key),
            Entry {
                value: value.to_string(),
                line: 0,
            },
        );
        Ok(())
    }

    fn get(&self, sec: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(sec.to_string(), key.to_string()))
    }

    fn err(&self, e: &Entry, message: String) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: e.line,
            message,
        }
    }

    fn typed<T>(&self, sec: &str, key: &str, f: impl Fn(&str) -> Option<T>, what: &str) -> Result<Option<T>> {
        match self.get(sec, key) {
            None => Ok(None),
            Some(e) => f(&e.value)
                .map(Some)
                .ok_or_else(|| self.err(e, format!("`{key}`: expected {what}, got `{}`", e.value))),
        }
    }

    fn num(&self, sec: &str, key: &str) -> Result<Option<f64>> {
        self.typed(sec, key, parse_number, "a number")
    }

    fn list(&self, sec: &str, key: &str) -> Result<Option<Vec<f64>>> {
        self.typed(sec, key, parse_list, "a comma-separated list of numbers")
    }

    fn points(&self, sec: &str, key: &str) -> Result<Vec<Point>> {
        Ok(self
            .typed(sec, key, parse_points, "points `x1 x2` separated by `;`")?
            .unwrap_or_default())
    }
}

/// A decimal number or a fraction `a/b`.
fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    if s.trim().is_empty() {
        return Some(vec![]);
    }
    s.split(',').map(parse_number).collect()
}

fn parse_points(s: &str) -> Option<Vec<Point>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let t: Vec<&str> = p.split_whitespace().collect();
            match t.as_slice() {
                [a, b] => Some(Point::new(parse_number(a)?, parse_number(b)?)),
                _ => None,
            }
        })
        .collect()
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

fn range(ok: bool, name: &'static str, value: f64, expected: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, expected })
    }
}

/// Parses a configuration; relative paths are kept as written.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, "<config>", None, &[])
}

/// Reads a configuration file. Relative `table` and `dir` paths are resolved
/// against the file's directory.
pub fn load_config(path: &Path, overrides: &[(String, String)]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config_with(&text, &path.display().to_string(), path.parent(), overrides)
}

/// Parses `text` with `overrides` (`key` or `section.key`, value) applied on
/// top of it.
pub fn parse_config_with(
    text: &str,
    path: &str,
    base: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<RunConfig> {
    let mut raw = Raw::parse(text, path)?;
    for (k, v) in overrides {
        raw.set(k, v)?;
    }
    let resolve = |p: &str| -> PathBuf {
        let p = PathBuf::from(p);
        match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p,
        }
    };

    let h = raw
        .num("domain", "h")?
        .ok_or_else(|| Error::Config("[domain] needs the lattice spacing `h`".into()))?;
    let radius = raw.num("domain", "R")?.unwrap_or(1.0);
    let shape = match raw.get("domain", "shape") {
        None => Shape::HalfDisk,
        Some(e) => Shape::parse(&e.value).map_err(|x| raw.err(e, x.to_string()))?,
    };
    let domain = DomainSpec {
        radius,
        spacing: h,
        shape,
    };
    domain.validate()?;
    range(h < radius / 4.0, "h", h, "h < R/4")?;

    let preset = raw.get("domain", "preset").map(|e| e.value.as_str()).unwrap_or("zero");
    let m = raw.num("domain", "M")?;
    let gap = raw.num("domain", "gap")?;
    let boundary = match preset {
        "zero" => BoundaryPreset::Zero,
        "halfplane_trace" => BoundaryPreset::HalfplaneTrace,
        "two_phase" => {
            let (m, gap) = (m.unwrap_or(1.0), gap.unwrap_or(0.2));
            range(m > 0.0, "M", m, "M > 0")?;
            range(gap >= 0.0 && gap < 2.0 * radius, "gap", gap, "0 <= gap < 2R")?;
            BoundaryPreset::TwoPhase { m, gap }
        }
        "table" => {
            let e = raw
                .get("domain", "table")
                .ok_or_else(|| Error::Config("preset `table` needs a `table` path".into()))?;
            BoundaryPreset::Table {
                path: resolve(&e.value),
            }
        }
        other => {
            let e = raw.get("domain", "preset").expect("preset was read");
            return Err(raw.err(e, format!("unknown preset `{other}`")));
        }
    };
    if !matches!(boundary, BoundaryPreset::TwoPhase { .. }) && (m.is_some() || gap.is_some()) {
        return Err(Error::Config("`M` and `gap` only apply to preset `two_phase`".into()));
    }

    let lambda_plus = raw.num("energy", "lambda_plus")?.unwrap_or(1.0);
    let lambda_minus = raw.num("energy", "lambda_minus")?.unwrap_or(1.0);
    let p = raw
        .num("energy", "p")?
        .ok_or_else(|| Error::Config("[energy] needs the exponent `p`".into()))?;
    let params = EnergyParams::new(lambda_plus, lambda_minus, p)?;
    let weiss_factor = raw
        .typed("energy", "weiss_factor", WeissFactor::parse, "1 or 2")?
        .unwrap_or_default();
    let energy = EnergySection {
        lambda_plus,
        lambda_minus,
        p,
        beta: params.beta(),
        weiss_factor,
    };

    let schedule = ScheduleSection {
        eps_start: raw.num("schedule", "eps_start")?,
        eps_factor: raw.num("schedule", "eps_factor")?,
        eps_min: raw.num("schedule", "eps_min")?,
        inner_tol: raw.num("schedule", "inner_tol")?,
        max_inner_iters: raw.typed("schedule", "max_inner_iters", |s| s.trim().parse().ok(), "a count")?,
        seeds: raw.typed(
            "schedule",
            "seeds",
            |s| s.split(',').map(|t| t.trim().parse().ok()).collect(),
            "a comma-separated list of seeds",
        )?,
    };

    let d = AnalysisRequests::default();
    let analysis = AnalysisRequests {
        weiss_centers: raw.points("analysis", "weiss_centers")?,
        weiss_radii: raw.list("analysis", "weiss_radii")?,
        weiss_slack: raw.num("analysis", "weiss_slack")?.unwrap_or(d.weiss_slack),
        growth_centers: raw.points("analysis", "growth_centers")?,
        growth_radii: raw.list("analysis", "growth_radii")?,
        nondeg_centers: raw.points("analysis", "nondeg_centers")?,
        nondeg_radii: raw.list("analysis", "nondeg_radii")?,
        nondeg_slack: raw.num("analysis", "nondeg_slack")?.unwrap_or(d.nondeg_slack),
        witness_centers: raw.points("analysis", "witness_centers")?,
        campanato_centers: raw.points("analysis", "campanato_centers")?,
        campanato_radii: raw.list("analysis", "campanato_radii")?,
        blowup_center: raw.points("analysis", "blowup_center")?.first().copied(),
        blowup_scales: raw.list("analysis", "blowup_scales")?.unwrap_or_default(),
        profile: raw
            .typed("analysis", "profile", parse_bool, "true or false")?
            .unwrap_or(false),
        tangency_bands: raw.list("analysis", "tangency_bands")?.unwrap_or_default(),
        cone_delta: raw.num("analysis", "cone_delta")?,
        cone_rho: raw.num("analysis", "cone_rho")?.unwrap_or(d.cone_rho),
        audit_count: raw
            .typed("analysis", "audit_count", |s| s.trim().parse().ok(), "a count")?
            .unwrap_or(0),
        audit_amplitude: raw.num("analysis", "audit_amplitude")?.unwrap_or(d.audit_amplitude),
        audit_seed: raw
            .typed("analysis", "audit_seed", |s| s.trim().parse().ok(), "a seed")?
            .unwrap_or(0),
    };
    if analysis.blowup_center.is_some() != !analysis.blowup_scales.is_empty() {
        return Err(Error::Config("`blowup_center` and `blowup_scales` go together".into()));
    }
    if let Some(delta) = analysis.cone_delta {
        range(delta > 0.0, "cone_delta", delta, "cone_delta > 0")?;
    }
    range(analysis.cone_rho > 0.0, "cone_rho", analysis.cone_rho, "cone_rho > 0")?;
    range(analysis.weiss_slack >= 0.0, "weiss_slack", analysis.weiss_slack, "weiss_slack >= 0")?;

    let output_dir = resolve(raw.get("output", "dir").map(|e| e.value.as_str()).unwrap_or("out"));

    Ok(RunConfig {
        domain,
        boundary,
        energy,
        schedule,
        analysis,
        output_dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[domain]\nR = 1\nh = 1/64\npreset = halfplane_trace\n[energy]\np = 0.5\nlambda_plus = 1\nlambda_minus = 1\n";

    #[test]
    fn minimal_config_derives_beta() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.domain.spacing, 1.0 / 64.0);
        assert!((c.energy.beta - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.boundary, BoundaryPreset::HalfplaneTrace);
        assert_eq!(c.energy.weiss_factor, WeissFactor::One);
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn comments_may_trail_any_line() {
        let text = MINIMAL
            .replace("[energy]", "[energy]   # exponents")
            .replace("p = 0.5", "p = 0.5 # half");
        assert_eq!(parse_config(&format!("# run\n{text}")).unwrap(), parse_config(MINIMAL).unwrap());
    }

    #[test]
    fn range_and_key_errors() {
        let bad_p = MINIMAL.replace("p = 0.5", "p = 1.5");
        assert!(matches!(parse_config(&bad_p), Err(Error::OutOfRange { name: "p", .. })));
        let foo = format!("{MINIMAL}foo=1\n");
        match parse_config(&foo) {
            Err(Error::UnknownKey { key, line, .. }) => {
                assert_eq!(key, "foo");
                assert_eq!(line, 9);
            }
            other => panic!("{other:?}"),
        }
        let e = parse_config(&MINIMAL.replace("h = 1/64", "h = abc")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        assert!(parse_config(&format!("{MINIMAL}[output]\ndir = a\ndir = b\n")).is_err());
        assert!(parse_config("h = 1\n").is_err());
        assert!(parse_config(&format!("{MINIMAL}[plots]\n")).is_err());
        assert!(e.is_config_error());
    }

    #[test]
    fn analysis_lists_and_overrides() {
        let text = format!(
            "{MINIMAL}[analysis]\nweiss_centers = 0 0; 0.25 -0.5\nweiss_radii = 1/8, 1/4\nprofile = true\n[schedule]\nseeds = 0, 5\n"
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(c.analysis.weiss_centers, vec![Point::ORIGIN, Point::new(0.25, -0.5)]);
        assert_eq!(c.analysis.weiss_radii, Some(vec![0.125, 0.25]));
        assert!(c.analysis.profile);
        assert_eq!(c.schedule.seeds, Some(vec![0, 5]));
        let o = parse_config_with(&text, "t", None, &[("p".into(), "0.3".into())]).unwrap();
        assert!((o.energy.beta - 2.0 / 1.7).abs() < 1e-15);
        let o = parse_config_with(&text, "t", None, &[("domain.h".into(), "1/32".into())]).unwrap();
        assert_eq!(o.domain.spacing, 1.0 / 32.0);
        assert!(parse_config_with(&text, "t", None, &[("q".into(), "1".into())]).is_err());
    }

    #[test]
    fn two_phase_defaults_and_misplaced_keys() {
        let c = parse_config(&MINIMAL.replace("halfplane_trace", "two_phase")).unwrap();
        assert_eq!(c.boundary, BoundaryPreset::TwoPhase { m: 1.0, gap: 0.2 });
        assert!(parse_config(&MINIMAL.replace("R = 1", "R = 1\nM = 2")).is_err());
        assert!(parse_config(&MINIMAL.replace("halfplane_trace", "mystery")).is_err());
    }
}
