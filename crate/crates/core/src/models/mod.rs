//! Catalog of model contact 3-manifolds plus a non-contact Anosov control.
//!
//! | name | kind | parameters (defaults) |
//! |------|------|-----------------------|
//! | `heisenberg` | frame | `theta_prime` (2) |
//! | `su2` | frame | `theta_prime` (2) |
//! | `sl2` | frame | `theta_prime` (0.5), `rate` (1), `orbit_length` (1) |
//! | `t3` | chart | `n` (1), `theta_prime` (2) |
//! | `ellipsoid` | chart | `a` (1), `b` (√2), `theta_prime` (2), `chart` (0 north, 1 south) |
//! | `catmap` | suspension | `sign` (+1 or -1) |

pub mod catmap;
pub mod chart;
pub mod frame;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catmap::CatmapModel;
pub use chart::{ChartKind, ChartModel};
pub use frame::{FrameKind, FrameModel, Structure};

use crate::la::{self, Vec3};
use crate::tolerances::{CHART_COMPAT_TOL, JACOBI_TOL, THETA_SPREAD_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown model '{0}'")]
    UnknownModel(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("not a contact form: min α∧dα = {min}")]
    NotContact { min: f64 },
    #[error("Reeb system is singular (condition number {condition:e})")]
    SingularSystem { condition: f64 },
    #[error("Reeb system residual {residual:e} too large")]
    ReebResidual { residual: f64 },
    #[error("degenerate frame: Gram-Schmidt pivot below 1e-10")]
    DegenerateFrame,
    #[error("model '{0}' is not a contact model")]
    NotApplicable(String),
    #[error("model spec: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Frame(FrameModel),
    Chart(ChartModel),
    Catmap(CatmapModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub name: String,
    /// Resolved parameters including defaults.
    pub params: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub kind: ModelKind,
}

/// A point: chart coordinates, or exponential coordinates around the base
/// point of a group model.
pub type ModelPoint = Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))
    }

    pub fn build(&self) -> Result<Model, ModelError> {
        build_model(&self.name, &self.params)
    }
}

pub const MODEL_NAMES: [&str; 6] = ["heisenberg", "su2", "sl2", "t3", "ellipsoid", "catmap"];

/// Splits `t3(2)` or `ellipsoid(1, 1.5)` into a name and positional arguments.
fn split_call(name: &str) -> Result<(String, Vec<f64>), ModelError> {
    let name = name.trim();
    match name.find('(') {
        None => Ok((name.to_string(), Vec::new())),
        Some(i) => {
            let inner = name[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| ModelError::UnknownModel(name.to_string()))?;
            let args = inner
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<f64>().map_err(|_| ModelError::InvalidParams(format!("bad argument '{s}'"))))
                .collect::<Result<_, _>>()?;
            Ok((name[..i].trim().to_string(), args))
        }
    }
}

pub fn build_model(name: &str, params: &BTreeMap<String, f64>) -> Result<Model, ModelError> {
    let (base, args) = split_call(name)?;
    let (allowed, positional): (&[(&str, f64)], &[&str]) = match base.as_str() {
        "heisenberg" | "su2" => (&[("theta_prime", 2.0)], &[]),
        "sl2" => (&[("theta_prime", 0.5), ("rate", 1.0), ("orbit_length", 1.0)], &[]),
        "t3" => (&[("n", 1.0), ("theta_prime", 2.0)], &["n"]),
        "ellipsoid" => (&[("a", 1.0), ("b", std::f64::consts::SQRT_2), ("theta_prime", 2.0), ("chart", 0.0)], &["a", "b"]),
        "catmap" => (&[("sign", 1.0)], &[]),
        _ => return Err(ModelError::UnknownModel(name.to_string())),
    };
    if args.len() > positional.len() {
        return Err(ModelError::InvalidParams(format!("{base} takes at most {} arguments", positional.len())));
    }
    let mut resolved: BTreeMap<String, f64> = allowed.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in positional.iter().zip(&args) {
        resolved.insert(k.to_string(), *v);
    }
    for (k, v) in params {
        if !resolved.contains_key(k) {
            return Err(ModelError::InvalidParams(format!("unknown parameter '{k}' for {base}")));
        }
        resolved.insert(k.clone(), *v);
    }
    if let Some((k, v)) = resolved.iter().find(|(_, v)| !v.is_finite()) {
        return Err(ModelError::InvalidParams(format!("{k} = {v} is not finite")));
    }
    let get = |k: &str| resolved[k];
    let positive = |k: &str| -> Result<f64, ModelError> {
        let v = get(k);
        if v <= 0.0 {
            Err(ModelError::InvalidParams(format!("{k} must be positive, got {v}")))
        } else {
            Ok(v)
        }
    };
    let mut warnings = Vec::new();
    let kind = match base.as_str() {
        "heisenberg" => ModelKind::Frame(FrameModel::heisenberg(positive("theta_prime")?)),
        "su2" => ModelKind::Frame(FrameModel::su2(positive("theta_prime")?)),
        "sl2" => {
            ModelKind::Frame(FrameModel::sl2(positive("theta_prime")?, positive("rate")?, positive("orbit_length")?))
        }
        "t3" => {
            let n = positive("n")?;
            if n.fract() != 0.0 {
                return Err(ModelError::InvalidParams(format!("n must be a positive integer, got {n}")));
            }
            ModelKind::Chart(ChartModel::torus(n, positive("theta_prime")?))
        }
        "ellipsoid" => {
            let (a, b) = (positive("a")?, positive("b")?);
            let chart = get("chart");
            if chart != 0.0 && chart != 1.0 {
                return Err(ModelError::InvalidParams(format!("chart must be 0 or 1, got {chart}")));
            }
            if let Some((p, q)) = near_rational(a / b) {
                warnings.push(format!("ResonantEllipsoid: a/b = {} is within 1e-6 of {p}/{q}", a / b));
            }
            let (a, b) = if chart == 0.0 { (a, b) } else { (b, a) };
            ModelKind::Chart(ChartModel::ellipsoid(a, b, positive("theta_prime")?))
        }
        "catmap" => {
            let s = get("sign");
            if s != 1.0 && s != -1.0 {
                return Err(ModelError::InvalidParams(format!("sign must be +1 or -1, got {s}")));
            }
            ModelKind::Catmap(CatmapModel::new(s))
        }
        _ => unreachable!("names filtered above"),
    };
    Ok(Model { name: base, params: resolved, warnings, kind })
}

/// Builds a catalog model with default parameters.
pub fn catalog(name: &str) -> Model {
    build_model(name, &BTreeMap::new()).expect("catalog defaults are valid")
}

/// Closest rational with denominator ≤ 10 within 1e-6, if any.
fn near_rational(x: f64) -> Option<(i64, i64)> {
    (1..=10).find_map(|q| {
        let p = (x * q as f64).round();
        ((x - p / q as f64).abs() < 1e-6).then_some((p as i64, q))
    })
}

impl Model {
    pub fn is_contact(&self) -> bool {
        !matches!(self.kind, ModelKind::Catmap(_))
    }

    pub fn theta_prime(&self) -> Option<f64> {
        match &self.kind {
            ModelKind::Frame(f) => Some(f.theta_prime),
            ModelKind::Chart(c) => Some(c.theta_prime),
            ModelKind::Catmap(_) => None,
        }
    }

    pub fn as_frame(&self) -> Option<&FrameModel> {
        match &self.kind {
            ModelKind::Frame(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_chart(&self) -> Option<&ChartModel> {
        match &self.kind {
            ModelKind::Chart(c) => Some(c),
            _ => None,
        }
    }

    /// Deterministic sample points inside the model's domain.
    pub fn sample_points(&self, count: usize) -> Vec<ModelPoint> {
        match &self.kind {
            ModelKind::Chart(c) => c.interior_points(count),
            _ => (0..count)
                .map(|k| std::array::from_fn(|i| ((k as f64 + 0.5) * [0.7548776662, 0.5698402910, 0.3532643][i]).fract() - 0.5))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactVerdict {
    Positive,
    Negative,
    Failed,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactReport {
    pub verdict: ContactVerdict,
    /// Minimum of α∧dα over the grid (θ′ for frame models).
    pub min_value: f64,
    pub max_value: f64,
    pub theta_prime: Option<f64>,
    /// Relative spread of dα(e, Je) over the grid.
    pub theta_spread: f64,
    /// Largest violation of `g(u, v) = dα(u, Jv)/θ′ + α(u)α(v)` on frame pairs.
    pub compatibility_defect: f64,
    pub jacobi_defect: f64,
    pub reeb_defect: f64,
    pub grid: usize,
}

/// Checks the contact condition; chart models on a `16³` grid.
pub fn validate_contact(model: &Model) -> Result<ContactReport, ModelError> {
    validate_contact_on(model, 16)
}

pub fn validate_contact_on(model: &Model, grid: usize) -> Result<ContactReport, ModelError> {
    match &model.kind {
        ModelKind::Catmap(_) => Ok(ContactReport {
            verdict: ContactVerdict::NotApplicable,
            min_value: f64::NAN,
            max_value: f64::NAN,
            theta_prime: None,
            theta_spread: 0.0,
            compatibility_defect: 0.0,
            jacobi_defect: 0.0,
            reeb_defect: 0.0,
            grid: 0,
        }),
        ModelKind::Frame(f) => {
            let theta = f.structural_theta();
            let jacobi = f.jacobi_defect().max(f.antisymmetry_defect());
            let reeb = f.reeb_defect();
            let verdict = if jacobi > JACOBI_TOL || reeb != 0.0 || theta != f.theta_prime {
                ContactVerdict::Failed
            } else if theta > 0.0 {
                ContactVerdict::Positive
            } else if theta < 0.0 {
                ContactVerdict::Negative
            } else {
                return Err(ModelError::NotContact { min: theta });
            };
            // Orthonormal frame, J e = f: g(u, v) = dα(u, Jv)/θ′ + α(u)α(v) holds
            // entrywise iff dα(E_i, E_j) = -c^X_ij matches θ′ on (e, f).
            let compat = compatibility_defect_frame(f);
            Ok(ContactReport {
                verdict,
                min_value: theta,
                max_value: theta,
                theta_prime: Some(f.theta_prime),
                theta_spread: 0.0,
                compatibility_defect: compat,
                jacobi_defect: jacobi,
                reeb_defect: reeb,
                grid: 1,
            })
        }
        ModelKind::Chart(c) => {
            let points = c.grid(grid);
            let rows: Vec<(f64, f64, f64, f64)> = points
                .par_iter()
                .map(|p| {
                    let density = c.contact_density(p);
                    let (theta, compat, reeb) = match c.frame(p) {
                        Ok(fr) => {
                            let d = c.d_alpha(p);
                            (la::form(&d, &fr[1], &fr[2]), compatibility_defect_chart(c, p, &fr), la::dot(&c.alpha(p), &fr[0]) - 1.0)
                        }
                        Err(_) => (f64::NAN, f64::INFINITY, f64::INFINITY),
                    };
                    (density, theta, compat, reeb.abs())
                })
                .collect();
            let min = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
            let max = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
            if min <= 0.0 || min.is_nan() {
                return Err(ModelError::NotContact { min });
            }
            let tmin = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
            let tmax = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
            let spread = (tmax - tmin) / c.theta_prime;
            let compat = rows.iter().map(|r| r.2).fold(0.0, f64::max);
            let reeb = rows.iter().map(|r| r.3).fold(0.0, f64::max);
            let verdict = if spread.is_nan() || spread > THETA_SPREAD_TOL || compat > CHART_COMPAT_TOL {
                ContactVerdict::Failed
            } else {
                ContactVerdict::Positive
            };
            Ok(ContactReport {
                verdict,
                min_value: min,
                max_value: max,
                theta_prime: Some(c.theta_prime),
                theta_spread: spread,
                compatibility_defect: compat,
                jacobi_defect: 0.0,
                reeb_defect: reeb,
                grid,
            })
        }
    }
}

/// In an orthonormal frame with `J e = f`, the nine pairs reduce to checking
/// `dα(E_i, J E_j)/θ′ + α(E_i)α(E_j) = δ_ij` with `dα(E_i, E_j) = -c^X_ij`.
pub fn compatibility_defect_frame(f: &FrameModel) -> f64 {
    let dalpha = |i: usize, j: usize| -f.c(0, i, j);
    // J as a map on frame indices with signs: J X = 0, J e = f, J f = -e
    let j_of = |j: usize| -> Option<(usize, f64)> {
        match j {
            1 => Some((2, 1.0)),
            2 => Some((1, -1.0)),
            _ => None,
        }
    };
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let mut rhs = if i == 0 && j == 0 { 1.0 } else { 0.0 };
            if let Some((jj, s)) = j_of(j) {
                rhs += s * dalpha(i, jj) / f.theta_prime;
            }
            let lhs = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

fn compatibility_defect_chart(c: &ChartModel, p: &Vec3, fr: &[Vec3; 3]) -> f64 {
    let g = c.metric(p);
    let d = c.d_alpha(p);
    let al = c.alpha(p);
    let j = |v: usize| -> Vec3 {
        match v {
            1 => fr[2],
            2 => la::scale(&fr[1], -1.0),
            _ => [0.0; 3],
        }
    };
    let mut worst: f64 = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            let lhs = la::form(&g, &fr[a], &fr[b]);
            let rhs = la::form(&d, &fr[a], &j(b)) / c.theta_prime + la::dot(&al, &fr[a]) * la::dot(&al, &fr[b]);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// Reeb field at p: frame components `(1, 0, 0)` for frame models, chart
/// components from the defining linear system for chart models.
pub fn reeb_vector(model: &Model, p: &ModelPoint) -> Result<Vec3, ModelError> {
    match &model.kind {
        ModelKind::Frame(_) => Ok([1.0, 0.0, 0.0]),
        ModelKind::Chart(c) => c.reeb(p),
        ModelKind::Catmap(_) => Err(ModelError::NotApplicable(model.name.clone())),
    }
}
