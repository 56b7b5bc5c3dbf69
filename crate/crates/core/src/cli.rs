//! Batch front-end: run specs in, JSON/CSV reports out.
//!
//! A spec file is either a run spec
//!
//! ```json
//! { "command": "anosov", "input": "sl2.json", "output": "out",
//!   "overrides": { "grid": 8, "angles": 64, "horizon": 20, "tolerance": 1e-9, "seed": 7 } }
//! ```
//!
//! or the command's input document itself (a path, model or orbit spec).
//! `input` may be a file name, resolved against the run spec's directory, or an
//! inline object.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::czindex::{cz_index, verify_axioms_with, AxiomReport, IndexError, IndexResult};
use crate::dynamics::{
    self, contact_pair_check, domination_check, linearize, orbit_cz, refine_orbit, splitting_orientability,
    zero_direction_planes, DominationReport, DynamicsError, FrameTag, Linearization, ModelRef, OrbitSpec, OrbitSummary,
};
use crate::geometry::{self, CurvatureReport, EnergyReport, GeometryError, NegBoundReport};
use crate::models::{Model, ModelError, ModelKind, ModelSpec};
use crate::report::{to_csv, to_json};
use crate::sampling::PathFamily;
use crate::sp2core::{EndpointClass, Sp2Error, SymplecticPath};
use crate::tolerances::FLOW_RTOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Index,
    Orbit,
    Curvature,
    Anosov,
    Energy,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Index => "index",
            Command::Orbit => "orbit",
            Command::Curvature => "curvature",
            Command::Anosov => "anosov",
            Command::Energy => "energy",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Path(#[from] Sp2Error),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("{0}")]
    Consistency(String),
}

fn variant<T: std::fmt::Debug>(e: &T) -> String {
    let s = format!("{e:?}");
    s.split(|c: char| !c.is_alphanumeric() && c != '_').next().unwrap_or("").to_string()
}

impl CliError {
    pub fn is_consistency_failure(&self) -> bool {
        match self {
            CliError::Index(e) => e.is_consistency_failure(),
            CliError::Geometry(e) => e.is_consistency_failure(),
            CliError::Dynamics(e) => e.is_consistency_failure(),
            CliError::Consistency(_) => true,
            _ => false,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_consistency_failure() {
            3
        } else {
            2
        }
    }

    /// Module-qualified error code, e.g. `czindex.MethodDisagreement`.
    pub fn code(&self) -> String {
        match self {
            CliError::Spec(_) => "cli.InvalidSpec".into(),
            CliError::Io(_) => "cli.Io".into(),
            CliError::Consistency(_) => "cli.ParityMismatch".into(),
            CliError::Path(e) => format!("sp2core.{}", variant(e)),
            CliError::Index(IndexError::Path(e)) => format!("sp2core.{}", variant(e)),
            CliError::Index(e) => format!("czindex.{}", variant(e)),
            CliError::Model(e) => format!("models.{}", variant(e)),
            CliError::Geometry(GeometryError::Model(e)) => format!("models.{}", variant(e)),
            CliError::Geometry(e) => format!("geometry.{}", variant(e)),
            CliError::Dynamics(DynamicsError::Model(e)) => format!("models.{}", variant(e)),
            CliError::Dynamics(DynamicsError::Index(e)) => format!("czindex.{}", variant(e)),
            CliError::Dynamics(DynamicsError::Geometry(e)) => format!("geometry.{}", variant(e)),
            CliError::Dynamics(e) => format!("dynamics.{}", variant(e)),
        }
    }
}

// ---------------------------------------------------------------- config

pub const TOLERANCE_RANGE: (f64, f64) = (1e-12, 1e-3);
pub const GRID_RANGE: (usize, usize) = (8, 256);
pub const HORIZON_MAX: f64 = 100.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Relative integration tolerance.
    pub tolerance: Option<f64>,
    /// Sample points (curvature, anosov) or quadrature cells per axis (energy).
    pub grid: Option<usize>,
    /// Sampled directions in ξ per point.
    pub angles: Option<usize>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    /// Random trials for the index axiom driver.
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default)]
    pub command: Option<Command>,
    pub input: Value,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub overrides: Overrides,
}

/// Fully resolved settings, embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub command: Command,
    pub input: String,
    pub tolerance: f64,
    pub grid: usize,
    pub angles: usize,
    pub horizon: f64,
    pub seed: u64,
    pub trials: usize,
    pub version: &'static str,
}

impl Config {
    fn resolve(command: Command, input: String, o: &Overrides, seed: Option<u64>) -> Result<Self, CliError> {
        let tolerance = o.tolerance.unwrap_or(FLOW_RTOL);
        if !(TOLERANCE_RANGE.0..=TOLERANCE_RANGE.1).contains(&tolerance) {
            return Err(CliError::Spec(format!("tolerance {tolerance} outside [1e-12, 1e-3]")));
        }
        let grid = o.grid.unwrap_or(if command == Command::Energy { 32 } else { 8 });
        let angles = o.angles.unwrap_or(64);
        for (name, v) in [("grid", grid), ("angles", angles)] {
            if !(GRID_RANGE.0..=GRID_RANGE.1).contains(&v) {
                return Err(CliError::Spec(format!("{name} {v} outside [8, 256]")));
            }
        }
        let horizon = o.horizon.unwrap_or(20.0);
        if !(horizon > 0.0 && horizon <= HORIZON_MAX) {
            return Err(CliError::Spec(format!("horizon {horizon} outside (0, 100]")));
        }
        let trials = o.trials.unwrap_or(100);
        if trials == 0 || trials > 100_000 {
            return Err(CliError::Spec(format!("trials {trials} outside [1, 100000]")));
        }
        Ok(Config {
            command,
            input,
            tolerance,
            grid,
            angles,
            horizon,
            seed: seed.or(o.seed).unwrap_or(0),
            trials,
            version: env!("CARGO_PKG_VERSION"),
        })
    }
}

// ---------------------------------------------------------------- reports

#[derive(Debug, Clone, Serialize)]
struct Envelope<'a, T: Serialize> {
    config: &'a Config,
    result: T,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxiomRequest {
    #[serde(default)]
    family: Option<PathFamily>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
enum IndexOutput {
    Path(IndexResult),
    Axioms(AxiomReport),
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitReport {
    pub orbit: OrbitSummary,
    pub frame: FrameTag,
    pub iterate: usize,
    pub cover: u32,
    pub endpoint: [f64; 4],
    pub classification: EndpointClass,
    pub det_drift: f64,
    pub index: Option<i64>,
    pub index_detail: Option<IndexResult>,
    pub index_note: Option<String>,
    pub orientable_splitting: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureSummary {
    pub model: String,
    pub points: usize,
    pub ricci_min: f64,
    pub ricci_max: f64,
    pub lie_norm2_max: f64,
    pub max_margin: f64,
    pub max_oracle_gap: f64,
    pub reports: Vec<CurvatureReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContactPairSummary {
    pub verdict: bool,
    pub positive_min: f64,
    pub negative_min: f64,
    /// (plus, minus) angles at each point.
    pub planes: Vec<[f64; 2]>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnosovReport {
    pub model: String,
    pub domination: DominationReport,
    pub contact_pair: Option<ContactPairSummary>,
    pub neg_bound: Option<NegBoundReport>,
    pub verdicts: Verdicts,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdicts {
    pub domination: bool,
    pub contact_pair: Option<bool>,
    pub neg_bound: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyOutput {
    pub model: String,
    pub energy: Option<f64>,
    pub report: Option<EnergyReport>,
    pub density: Option<f64>,
    pub note: Option<String>,
}

/// Report text plus optional CSV side files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub json: String,
    pub files: Vec<(String, String)>,
    pub output_dir: Option<PathBuf>,
}

// ---------------------------------------------------------------- driver

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Splits a spec file into (input document, input label, overrides, output).
fn load(spec_path: &Path) -> Result<(Value, String, Option<Command>, Overrides, Option<String>), CliError> {
    let text = read(spec_path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Spec(e.to_string()))?;
    let is_run_spec = v.as_object().map(|o| o.contains_key("input")).unwrap_or(false);
    if !is_run_spec {
        let label = spec_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        return Ok((v, label, None, Overrides::default(), None));
    }
    let rs: RunSpec = serde_json::from_value(v).map_err(|e| CliError::Spec(e.to_string()))?;
    let (doc, label) = match &rs.input {
        Value::String(file) => {
            let base = spec_path.parent().unwrap_or(Path::new("."));
            let p = base.join(file);
            if !p.exists() {
                return Err(CliError::Spec(format!("referenced file {} does not exist", p.display())));
            }
            let t = read(&p)?;
            (serde_json::from_str(&t).map_err(|e| CliError::Spec(format!("{file}: {e}")))?, file.clone())
        }
        Value::Object(_) => (rs.input.clone(), "inline".to_string()),
        _ => return Err(CliError::Spec("input must be a file name or an object".into())),
    };
    Ok((doc, label, rs.command, rs.overrides, rs.output))
}

fn model_from(doc: &Value) -> Result<Model, CliError> {
    let r: ModelRef = serde_json::from_value(doc.clone()).map_err(|e| CliError::Spec(e.to_string()))?;
    if let ModelRef::Spec(ModelSpec { .. }) = &r {
    } else if !doc.is_string() {
        return Err(CliError::Spec("expected a model spec".into()));
    }
    Ok(r.build()?)
}

/// Runs one command; nothing is written to disk.
pub fn run(command: Command, spec_path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<RunOutput, CliError> {
    let (doc, label, declared, overrides, output) = load(spec_path)?;
    if let Some(d) = declared {
        if d != command {
            return Err(CliError::Spec(format!("spec is for '{}', not '{}'", d.name(), command.name())));
        }
    }
    let cfg = Config::resolve(command, label, &overrides, seed)?;
    let output_dir = out.map(Path::to_path_buf).or_else(|| {
        output.map(|o| spec_path.parent().unwrap_or(Path::new(".")).join(o))
    });
    let mut files = Vec::new();
    let json = match command {
        Command::Index => to_json(&Envelope { config: &cfg, result: run_index(&doc, &cfg)? }),
        Command::Orbit => {
            let (rep, lin, seed) = run_orbit(&doc, &cfg)?;
            files.push(("orbit_trajectory.csv".to_string(), trajectory_csv(&seed, &lin)));
            to_json(&Envelope { config: &cfg, result: rep })
        }
        Command::Curvature => {
            let rep = run_curvature(&doc, &cfg)?;
            files.push(("curvature.csv".to_string(), curvature_csv(&rep.reports)));
            to_json(&Envelope { config: &cfg, result: rep })
        }
        Command::Anosov => to_json(&Envelope { config: &cfg, result: run_anosov(&doc, &cfg)? }),
        Command::Energy => to_json(&Envelope { config: &cfg, result: run_energy(&doc, &cfg)? }),
    };
    Ok(RunOutput { json, files, output_dir })
}

/// Writes the report files of a run (or prints the JSON when no directory
/// is configured).
pub fn emit(command: Command, out: &RunOutput) -> Result<(), CliError> {
    match &out.output_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            let write = |name: &str, body: &str| {
                let p = dir.join(name);
                fs::write(&p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
            };
            write(&format!("{}.json", command.name()), &out.json)?;
            for (name, body) in &out.files {
                write(name, body)?;
            }
            Ok(())
        }
        None => {
            print!("{}", out.json);
            Ok(())
        }
    }
}

/// Full CLI step: run, emit, map errors to exit codes.
pub fn execute(command: Command, spec: &Path, out: Option<&Path>, seed: Option<u64>) -> i32 {
    match run(command, spec, out, seed).and_then(|o| emit(command, &o)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            e.exit_code()
        }
    }
}

fn run_index(doc: &Value, cfg: &Config) -> Result<IndexOutput, CliError> {
    if let Some(req) = doc.get("axioms") {
        let req: AxiomRequest = serde_json::from_value(req.clone()).map_err(|e| CliError::Spec(e.to_string()))?;
        let rep = verify_axioms_with(cfg.seed, cfg.trials, req.family.unwrap_or(PathFamily::Mixed));
        return Ok(IndexOutput::Axioms(rep));
    }
    let path = SymplecticPath::from_json(&doc.to_string())?;
    Ok(IndexOutput::Path(cz_index(&path)?))
}

fn run_orbit(doc: &Value, cfg: &Config) -> Result<(OrbitReport, Linearization, [f64; 3]), CliError> {
    let spec = OrbitSpec::from_json(&doc.to_string())?;
    let (model, seed, period, tag) = spec.resolve()?;
    let mut orbit = refine_orbit(&model, &seed, period, cfg.tolerance)?;
    orbit.tag = tag;
    let lin = linearize(&orbit, spec.frame, spec.iterate)?;
    let (index, detail, note) = match orbit_cz(&lin) {
        Ok(r) => (Some(r.index), Some(r), None),
        Err(DynamicsError::Index(e @ IndexError::DegenerateEndpoint { .. })) => (None, None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let orientable = splitting_orientability(&orbit).ok();
    // parity law on the simple orbit in the model frame
    if let (Some(o), Some(i), FrameTag::Model, 1) = (orientable, index, spec.frame, spec.iterate) {
        if (i.rem_euclid(2) == 0) != o {
            return Err(CliError::Consistency(format!("index {i} has the wrong parity for orientable = {o}")));
        }
    }
    let e = lin.endpoint();
    let m = e.mat();
    Ok((
        OrbitReport {
            orbit: orbit.summary(),
            frame: spec.frame,
            iterate: spec.iterate,
            cover: lin.cover,
            endpoint: [m.a11, m.a12, m.a21, m.a22],
            classification: lin.classify(),
            det_drift: lin.det_drift,
            index,
            index_detail: detail,
            index_note: note,
            orientable_splitting: orientable,
        },
        lin,
        orbit.seed,
    ))
}

fn trajectory_csv(seed: &[f64; 3], lin: &Linearization) -> String {
    // the refined path keeps the flow samples and adds interpolated ones
    let mut rows = vec![vec![0.0, seed[0], seed[1], seed[2], 1.0, 0.0, 0.0, 1.0]];
    let mut k = 0;
    for (t, m) in lin.path.samples() {
        if k < lin.times.len() && *t == lin.times[k] {
            let (p, a) = (lin.points[k], m.mat());
            rows.push(vec![*t, p[0], p[1], p[2], a.a11, a.a12, a.a21, a.a22]);
            k += 1;
        }
    }
    to_csv(&["t", "x", "y", "z", "a11", "a12", "a21", "a22"], &rows)
}

fn run_curvature(doc: &Value, cfg: &Config) -> Result<CurvatureSummary, CliError> {
    let model = model_from(doc)?;
    if matches!(model.kind, ModelKind::Catmap(_)) {
        return Err(ModelError::NotApplicable(format!("{} carries no contact metric", model.name)).into());
    }
    let points = model.sample_points(cfg.grid);
    let reports: Vec<Result<CurvatureReport, GeometryError>> =
        points.par_iter().map(|p| geometry::curvature_report(&model, p, cfg.angles, true)).collect();
    let reports: Vec<CurvatureReport> = reports.into_iter().collect::<Result<_, _>>()?;
    let fold = |f: &dyn Fn(&CurvatureReport) -> f64, init: f64, op: fn(f64, f64) -> f64| {
        reports.iter().map(f).fold(init, op)
    };
    let gap = reports
        .iter()
        .flat_map(|r| {
            let kj = r.k_jacobi.clone().unwrap_or_default();
            r.k.iter().zip(kj).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    Ok(CurvatureSummary {
        model: model.name.clone(),
        points: reports.len(),
        ricci_min: fold(&|r| r.ricci, f64::INFINITY, f64::min),
        ricci_max: fold(&|r| r.ricci, f64::NEG_INFINITY, f64::max),
        lie_norm2_max: fold(&|r| r.lie.norm2, 0.0, f64::max),
        max_margin: fold(&|r| r.margin, f64::NEG_INFINITY, f64::max),
        max_oracle_gap: gap,
        reports,
    })
}

pub const CURVATURE_CSV_HEADER: [&str; 8] = ["point_x", "point_y", "point_z", "angle", "k", "ricci", "lie_norm2", "margin"];

fn curvature_csv(reports: &[CurvatureReport]) -> String {
    let mut rows = Vec::new();
    for r in reports {
        for (a, k) in r.angles.iter().zip(&r.k) {
            rows.push(vec![r.point[0], r.point[1], r.point[2], *a, *k, r.ricci, r.lie.norm2, r.margin]);
        }
    }
    to_csv(&CURVATURE_CSV_HEADER, &rows)
}

fn run_anosov(doc: &Value, cfg: &Config) -> Result<AnosovReport, CliError> {
    let model = model_from(doc)?;
    let points = model.sample_points(cfg.grid);
    let domination = domination_check(&model, &points, cfg.horizon)?;
    let (contact_pair, neg_bound) = if model.is_contact() {
        let mut planes = Vec::new();
        let (mut pos, mut neg) = (f64::INFINITY, f64::INFINITY);
        let mut note = None;
        for p in &points {
            match zero_direction_planes(&model, p) {
                Ok((plus, minus)) => {
                    let r = contact_pair_check(&model, plus, minus, std::slice::from_ref(p))?;
                    planes.push([plus, minus]);
                    pos = pos.min(r.positive_min);
                    neg = neg.min(r.negative_min);
                }
                Err(DynamicsError::SplittingUnavailable(msg)) => {
                    note = Some(msg);
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        let verdict = note.is_none() && pos > crate::tolerances::CONTACT_PAIR_FLOOR && neg > crate::tolerances::CONTACT_PAIR_FLOOR;
        let cp = ContactPairSummary {
            verdict,
            positive_min: if note.is_none() { pos } else { f64::NAN },
            negative_min: if note.is_none() { neg } else { f64::NAN },
            planes,
            note,
        };
        (Some(cp), Some(geometry::neg_bound_check(&model, &points, cfg.angles)?))
    } else {
        (None, None)
    };
    Ok(AnosovReport {
        model: model.name.clone(),
        verdicts: Verdicts {
            domination: domination.verdict,
            contact_pair: contact_pair.as_ref().map(|c| c.verdict),
            neg_bound: neg_bound.as_ref().map(|n| n.holds),
        },
        domination,
        contact_pair,
        neg_bound,
    })
}

fn run_energy(doc: &Value, cfg: &Config) -> Result<EnergyOutput, CliError> {
    let model = model_from(doc)?;
    match geometry::chern_hamilton_energy(&model, cfg.grid) {
        Ok(r) => Ok(EnergyOutput { model: model.name.clone(), energy: r.energy, report: Some(r), density: None, note: None }),
        Err(GeometryError::UnboundedDomain { density }) => Ok(EnergyOutput {
            model: model.name.clone(),
            energy: None,
            report: None,
            density: Some(density),
            note: Some("no finite fundamental domain; pointwise density only".into()),
        }),
        Err(e) => Err(e.into()),
    }
}

/// Orbit spec parser entry point, shared with the fuzz targets.
pub fn parse_orbit_spec(text: &str) -> Result<OrbitSpec, DynamicsError> {
    dynamics::OrbitSpec::from_json(text)
}

/// Run spec parser entry point, shared with the fuzz targets.
pub fn parse_run_spec(text: &str) -> Result<(RunSpec, Config), CliError> {
    let rs: RunSpec = serde_json::from_str(text).map_err(|e| CliError::Spec(e.to_string()))?;
    let cfg = Config::resolve(rs.command.unwrap_or(Command::Index), "inline".into(), &rs.overrides, None)?;
    Ok((rs, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_ranges() {
        let bad = [r#"{"tolerance":1e-2}"#, r#"{"grid":4}"#, r#"{"angles":300}"#, r#"{"horizon":0}"#, r#"{"horizon":101}"#];
        for b in bad {
            let o: Overrides = serde_json::from_str(b).unwrap();
            assert!(Config::resolve(Command::Curvature, "x".into(), &o, None).is_err(), "{b}");
        }
        let o: Overrides = serde_json::from_str(r#"{"tolerance":1e-12,"grid":256,"horizon":100}"#).unwrap();
        assert!(Config::resolve(Command::Curvature, "x".into(), &o, None).is_ok());
    }

    #[test]
    fn error_codes() {
        let e = CliError::from(IndexError::MethodDisagreement { crossing: 1, rotation: 2 });
        assert_eq!(e.code(), "czindex.MethodDisagreement");
        assert_eq!(e.exit_code(), 3);
        let e = CliError::from(ModelError::UnknownModel("x".into()));
        assert_eq!(e.code(), "models.UnknownModel");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn run_spec_parser() {
        assert!(parse_run_spec(r#"{"input":{"name":"sl2"},"overrides":{"grid":8}}"#).is_ok());
        assert!(parse_run_spec(r#"{"input":{},"extra":1}"#).is_err());
    }
}
