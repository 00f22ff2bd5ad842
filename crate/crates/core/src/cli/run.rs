//! The solve → extract → analyze pipeline and its manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::svg::{emit_svg, Plot, Style};
use crate::analysis::{
    blowup_sequence, campanato_rate, growth_fit, halfplane_constant, match_profile, nondeg_check_with,
    subharmonic_witness, weiss_series, witness_tolerance, BlowupSequence, CampanatoFit, GrowthFit,
    NondegReport, ProfileMatch, Sign, WeissSeries,
};
use crate::domain::{build_grid, DomainSpec, Grid, Point};
use crate::energy::{el_residual, EnergyParams};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::freeboundary::{
    cone_check, contact_separation, extract_free_boundary, pi_contacts, tangency_csv, tangency_profile,
    ConeReport, ConeSpec, FreeBoundary, Phase, TangencyBand,
};
use crate::minimize::{competitor_audit, minimize, MinimizeReport};

pub const SOLUTION_FILE: &str = "solution.fbfield";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";
/// Wall-clock timings, kept out of the manifest so that manifests of
/// identical runs are byte-identical.
pub const TIMINGS_FILE: &str = "timings.json";

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn hash_hex(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a(bytes))
}

/// Hash of the all-zero field on the grid of `spec`.
pub fn zero_field_hash(spec: DomainSpec) -> Result<String> {
    let grid = Arc::new(build_grid(spec)?);
    Ok(hash_hex(&ScalarField::zeros(grid).to_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub fnv1a: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStatus {
    pub stage: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub fbx: String,
    pub field_format: String,
}

impl Default for Versions {
    fn default() -> Self {
        Versions {
            fbx: env!("CARGO_PKG_VERSION").to_string(),
            field_format: "FBFIELD v1".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub versions: Versions,
    /// Files in the order they were written, names relative to the output
    /// directory.
    pub files: Vec<FileEntry>,
    pub stages: Vec<StageStatus>,
    pub success: bool,
}

impl RunManifest {
    pub fn file(&self, name: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.name == name)
    }

    pub fn failed_stages(&self) -> impl Iterator<Item = &StageStatus> {
        self.stages.iter().filter(|s| !s.ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub matched: ProfileMatch,
    /// Closed-form constant of the phase `matched.sign` picked.
    pub c_exact: f64,
    /// `max |u - c (x1⁺)^β| / max c (x1⁺)^β` on the whole grid.
    pub relative_error: f64,
    /// Max `|Δ_h u - G'(u)/2|` over interior nodes with `x1 > 0.2`.
    pub el_residual_far: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub center: Point,
    pub min_laplacian: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSummary {
    /// Width of the strip along the flat boundary, one cell.
    pub strip: f64,
    pub plus: Vec<Point>,
    pub minus: Vec<Point>,
    pub separation: Option<f64>,
    /// Vertices within `2h` of the flat boundary, and how many of them are
    /// two-phase or branching.
    pub near_flat: usize,
    pub near_flat_two_phase: usize,
    pub cones: Vec<ConeReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub count: usize,
    pub energy: f64,
    pub min_gap: f64,
    /// `-1e-6 E(u)`; every gap is expected above it.
    pub threshold: f64,
    pub pass: bool,
}

/// Every analysis result of a run, in one JSON document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub chosen_seed: Option<u32>,
    pub converged: Option<bool>,
    pub true_energy: Option<f64>,
    pub free_boundary_vertices: usize,
    pub profile: Option<ProfileSummary>,
    pub weiss: Vec<WeissSeries>,
    pub growth: Vec<GrowthFit>,
    pub nondeg: Vec<NondegReport>,
    pub witness: Vec<WitnessSummary>,
    pub campanato: Vec<CampanatoFit>,
    pub blowup: Option<BlowupSequence>,
    pub contacts: Option<ContactSummary>,
    pub tangency: Vec<TangencyBand>,
    pub audit: Option<AuditSummary>,
}

struct Sink {
    dir: PathBuf,
    files: Vec<FileEntry>,
    stages: Vec<StageStatus>,
    timings: BTreeMap<String, f64>,
}

impl Sink {
    fn new(dir: &Path) -> Result<Sink> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Config(format!("output directory {} is not writable: {e}", dir.display())))?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            stages: Vec::new(),
            timings: BTreeMap::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileEntry {
            name: name.to_string(),
            bytes: bytes.len() as u64,
            fnv1a: hash_hex(bytes),
        });
        Ok(())
    }

    fn svg(&mut self, name: &str, plot: &Plot) -> Result<()> {
        let path = self.dir.join(name);
        emit_svg(plot, &Style::default(), &path)?;
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        self.write(name, &bytes)
    }

    /// Runs `f` as a named stage; a failure is recorded and `None` returned.
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Sink) -> Result<T>) -> Option<T> {
        let start = Instant::now();
        let out = f(self);
        self.timings.insert(name.to_string(), start.elapsed().as_secs_f64());
        match out {
            Ok(v) => {
                self.stages.push(StageStatus {
                    stage: name.to_string(),
                    ok: true,
                    message: None,
                });
                Some(v)
            }
            Err(e) => {
                self.stages.push(StageStatus {
                    stage: name.to_string(),
                    ok: false,
                    message: Some(e.to_string()),
                });
                None
            }
        }
    }

    fn finish(mut self, config: &RunConfig) -> Result<RunManifest> {
        let timings = serde_json::to_vec_pretty(&self.timings)?;
        let path = self.dir.join(TIMINGS_FILE);
        std::fs::write(&path, timings).map_err(|e| Error::io(&path, e))?;
        let manifest = RunManifest {
            config: config.clone(),
            versions: Versions::default(),
            success: self.stages.iter().all(|s| s.ok),
            files: std::mem::take(&mut self.files),
            stages: std::mem::take(&mut self.stages),
        };
        let path = self.dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_vec_pretty(&manifest)?;
        text.push(b'\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

/// Minimizes, then extracts and analyzes the solution. Compute failures are
/// recorded per stage in the returned (and written) manifest; only problems
/// with the configuration itself are returned as errors.
pub fn run(config: &RunConfig) -> Result<RunManifest> {
    let grid = Arc::new(build_grid(config.domain)?);
    let params = config.energy.params();
    let data = config.boundary.resolve(&params)?;
    let schedule = config.schedule.resolve(&grid, &params);
    schedule.validate()?;
    let mut sink = Sink::new(&config.output_dir)?;
    let mut summary = Summary::default();
    let solved = sink.stage("minimize", |s| {
        let (u, report) = minimize(grid.clone(), &data, &params, &schedule)?;
        s.write(SOLUTION_FILE, &u.to_bytes())?;
        let mut json = serde_json::to_vec_pretty(&report)?;
        json.push(b'\n');
        s.write("minimize.json", &json)?;
        Ok((u, report))
    });
    let Some((u, report)) = solved else {
        return sink.finish(config);
    };
    summary.chosen_seed = Some(report.chosen_seed);
    summary.converged = Some(report.converged);
    summary.true_energy = Some(report.true_energy);
    if !report.converged {
        sink.stages.push(StageStatus {
            stage: "convergence".into(),
            ok: false,
            message: Some(non_convergence(&report)),
        });
    }
    analyze_into(&mut sink, config, &u, &params, summary)?;
    sink.finish(config)
}

fn non_convergence(report: &MinimizeReport) -> String {
    let bad: Vec<String> = report
        .stages
        .iter()
        .filter(|s| !s.converged)
        .map(|s| format!("eps={:e} residual={:e}", s.eps, s.residual_norm))
        .collect();
    format!("stages exhausted their iteration budget: {}", bad.join(", "))
}

/// Analyzes an existing solution field; its grid must be the configured one.
pub fn analyze(config: &RunConfig, u: &ScalarField) -> Result<RunManifest> {
    if *u.grid().spec() != config.domain {
        return Err(Error::Config(format!(
            "field grid (R={}, h={}) does not match the configured domain (R={}, h={})",
            u.grid().radius(),
            u.spacing(),
            config.domain.radius,
            config.domain.spacing
        )));
    }
    let params = config.energy.params();
    let mut sink = Sink::new(&config.output_dir)?;
    sink.write(SOLUTION_FILE, &u.to_bytes())?;
    analyze_into(&mut sink, config, u, &params, Summary::default())?;
    sink.finish(config)
}

fn csv_stage<T>(
    sink: &mut Sink,
    name: String,
    out: &mut Vec<T>,
    f: impl FnOnce(&mut Sink) -> Result<(T, String)>,
) {
    let file = format!("{name}.csv");
    if let Some(v) = sink.stage(&name, |s| {
        let (v, csv) = f(s)?;
        s.write(&file, csv.as_bytes())?;
        Ok(v)
    }) {
        out.push(v);
    }
}

fn analyze_into(
    sink: &mut Sink,
    config: &RunConfig,
    u: &ScalarField,
    params: &EnergyParams,
    mut summary: Summary,
) -> Result<()> {
    let req = &config.analysis;
    let grid: &Grid = u.grid();
    let h = grid.spacing();
    let tau = h.powf(params.beta());

    let fb = sink.stage("free_boundary", |s| {
        let fb = extract_free_boundary(u, tau)?;
        s.write("free_boundary.json", fb.to_json()?.as_bytes())?;
        Ok(fb)
    });
    if let Some(fb) = &fb {
        summary.free_boundary_vertices = fb.vertex_count();
        summary.contacts = sink.stage("contacts", |_| contact_summary(fb, h, req.cone_delta, req.cone_rho));
        if !fb.is_empty() {
            let cones: Vec<ConeSpec> = summary
                .contacts
                .iter()
                .flat_map(|c| c.cones.iter().map(|r| r.cone))
                .collect();
            let (x1_max, x2_max) = extents(grid);
            sink.stage("free_boundary_svg", |s| {
                s.svg(
                    "free_boundary.svg",
                    &Plot::Boundary {
                        fb,
                        cones: &cones,
                        rho: req.cone_rho,
                        x1_max,
                        x2_max,
                    },
                )
            });
        }
        if !req.tangency_bands.is_empty() {
            if let Some(t) = sink.stage("tangency", |s| {
                let bands = tangency_profile(fb, &req.tangency_bands)?;
                s.write("tangency.csv", tangency_csv(&bands).as_bytes())?;
                Ok(bands)
            }) {
                summary.tangency = t;
            }
        }
    }

    if req.profile {
        summary.profile = sink.stage("profile", |_| profile_summary(u, params));
    }

    let radii = req.weiss_radii(grid);
    for (i, &c) in req.weiss_centers.iter().enumerate() {
        csv_stage(sink, format!("weiss_{i}"), &mut summary.weiss, |s| {
            let mut ws = weiss_series(u, c, &radii, params, 0.0, config.energy.weiss_factor)?;
            ws.slack_tol = req.weiss_slack * ws.range();
            ws.monotone_verdict = ws.slack <= ws.slack_tol;
            s.svg(&format!("weiss_{i}.svg"), &Plot::Weiss(&ws))?;
            let csv = ws.to_csv();
            Ok((ws, csv))
        });
    }
    let radii = req.growth_radii(grid);
    for (i, &c) in req.growth_centers.iter().enumerate() {
        csv_stage(sink, format!("growth_{i}"), &mut summary.growth, |s| {
            let g = growth_fit(u, c, &radii, tau)?;
            s.svg(&format!("growth_{i}.svg"), &Plot::Growth(&g))?;
            let csv = g.to_csv();
            Ok((g, csv))
        });
    }
    let radii = req.nondeg_radii(grid);
    for (i, &c) in req.nondeg_centers.iter().enumerate() {
        csv_stage(sink, format!("nondeg_{i}"), &mut summary.nondeg, |_| {
            let r = nondeg_check_with(u, c, &radii, params, tau, req.nondeg_slack)?;
            let csv = r.to_csv();
            Ok((r, csv))
        });
    }
    for (i, &c) in req.witness_centers.iter().enumerate() {
        if let Some(w) = sink.stage(&format!("witness_{i}"), |_| {
            Ok(WitnessSummary {
                center: c,
                min_laplacian: subharmonic_witness(u, c, params)?,
                tolerance: witness_tolerance(h, params),
            })
        }) {
            summary.witness.push(w);
        }
    }
    let radii = req.campanato_radii(grid);
    for (i, &c) in req.campanato_centers.iter().enumerate() {
        csv_stage(sink, format!("campanato_{i}"), &mut summary.campanato, |_| {
            let f = campanato_rate(u, c, &radii)?;
            let csv = f.to_csv();
            Ok((f, csv))
        });
    }
    if let Some(c) = req.blowup_center {
        summary.blowup = sink.stage("blowup", |s| {
            let seq = blowup_sequence(u, c, &req.blowup_scales, u.grid_arc(), params)?;
            s.write("blowup.csv", seq.to_csv().as_bytes())?;
            Ok(seq)
        });
    }
    if req.audit_count > 0 {
        summary.audit = sink.stage("audit", |s| {
            let gaps = competitor_audit(u, params, req.audit_count, req.audit_seed, req.audit_amplitude)?;
            let energy = crate::energy::total_energy(u, params);
            let mut csv = String::from("index,gap\n");
            for (k, g) in gaps.iter().enumerate() {
                csv.push_str(&format!("{k},{g}\n"));
            }
            s.write("audit.csv", csv.as_bytes())?;
            let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
            let threshold = -1e-6 * energy.abs();
            Ok(AuditSummary {
                count: gaps.len(),
                energy,
                min_gap,
                threshold,
                pass: min_gap >= threshold,
            })
        });
    }
    let mut json = serde_json::to_vec_pretty(&summary)?;
    json.push(b'\n');
    sink.write(SUMMARY_FILE, &json)
}

fn extents(grid: &Grid) -> (f64, f64) {
    match grid.spec().shape {
        crate::domain::Shape::HalfDisk => (grid.radius(), grid.radius()),
        crate::domain::Shape::Rectangle { width, height } => (width, 0.5 * height),
    }
}

fn contact_summary(fb: &FreeBoundary, h: f64, delta: Option<f64>, rho: f64) -> Result<ContactSummary> {
    let plus = pi_contacts(fb, Phase::Plus, h);
    let minus = pi_contacts(fb, Phase::Minus, h);
    let near: Vec<_> = fb.vertices().filter(|v| v.x.x1 < 2.0 * h).collect();
    let mut cones = Vec::new();
    if let Some(delta) = delta {
        for &z in plus.iter().chain(&minus) {
            cones.push(cone_check(fb, &ConeSpec::new(z, delta)?, rho)?);
        }
    }
    Ok(ContactSummary {
        strip: h,
        separation: contact_separation(fb, h),
        near_flat: near.len(),
        near_flat_two_phase: near.iter().filter(|v| v.class.is_two_phase()).count(),
        plus,
        minus,
        cones,
    })
}

fn profile_summary(u: &ScalarField, params: &EnergyParams) -> Result<ProfileSummary> {
    let matched = match_profile(u, params);
    let lambda = match matched.sign {
        Sign::Plus => params.lambda_plus(),
        Sign::Minus => params.lambda_minus(),
    };
    let sign = if matched.sign == Sign::Plus { 1.0 } else { -1.0 };
    let c = halfplane_constant(lambda, params.p())?;
    let beta = params.beta();
    let exact = ScalarField::from_fn(u.grid_arc().clone(), |x| sign * c * x.x1.max(0.0).powf(beta));
    let scale = exact.sup_norm();
    if !(scale > 0.0) {
        return Err(Error::Degenerate("profile vanishes on the grid".into()));
    }
    let res = el_residual(u, params, u.spacing().powf(beta));
    let grid = u.grid();
    let el_residual_far = grid
        .interior_nodes()
        .filter(|&k| grid.point(k).x1 > 0.2)
        .fold(0.0f64, |m, k| m.max(res.value(k).abs()));
    Ok(ProfileSummary {
        matched,
        c_exact: c,
        relative_error: u.max_diff(&exact) / scale,
        el_residual_far,
    })
}

/// Outcome of re-hashing the files of a manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct FileCheck {
    pub name: String,
    pub expected: String,
    /// `None` when the file is missing.
    pub actual: Option<String>,
}

impl FileCheck {
    pub fn ok(&self) -> bool {
        self.actual.as_deref() == Some(self.expected.as_str())
    }
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        kind: "manifest",
        message: e.to_string(),
    })
}

/// Re-hashes every file listed in the manifest at `path`.
pub fn verify_manifest(path: &Path) -> Result<(RunManifest, Vec<FileCheck>)> {
    let manifest = read_manifest(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let checks = manifest
        .files
        .iter()
        .map(|f| FileCheck {
            name: f.name.clone(),
            expected: f.fnv1a.clone(),
            actual: std::fs::read(dir.join(&f.name)).ok().map(|b| hash_hex(&b)),
        })
        .collect();
    Ok((manifest, checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::parse_config;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn zero_preset_gives_the_canonical_zero_field() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "[domain]\nh = 1/16\npreset = zero\n[energy]\np = 0.5\n[output]\ndir = {}\n",
            dir.path().display()
        );
        let config = parse_config(&text).unwrap();
        let m = run(&config).unwrap();
        assert!(m.success, "{:?}", m.stages);
        let want = zero_field_hash(config.domain).unwrap();
        assert_eq!(m.file(SOLUTION_FILE).unwrap().fnv1a, want);
        let (back, checks) = verify_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(back, m);
        assert!(checks.iter().all(FileCheck::ok));
        std::fs::write(dir.path().join(SUMMARY_FILE), "tampered").unwrap();
        let (_, checks) = verify_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(!checks.iter().all(FileCheck::ok));
    }

    #[test]
    fn failed_analysis_is_recorded_not_raised() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "[domain]\nh = 1/16\n[energy]\np = 0.5\n[analysis]\nnondeg_centers = 0 0\n[output]\ndir = {}\n",
            dir.path().display()
        );
        let m = run(&parse_config(&text).unwrap()).unwrap();
        assert!(!m.success);
        let bad: Vec<_> = m.failed_stages().map(|s| s.stage.as_str()).collect();
        assert_eq!(bad, ["nondeg_0"]);
    }
}
