//! Reeb and suspension flows, periodic orbits, their linearizations and the
//! two Anosov detectors.
//!
//! Frame models are realized as matrix groups with left-invariant frames,
//! so the flow is `ġ = g·X̂` and the linearized flow on ξ in the frame
//! `(e, Je)` is the constant-coefficient system `Φ' = GΦ`. Chart models
//! integrate the coordinate variational equation and read it off in the
//! orthonormal frame along the trajectory. The suspension uses its explicit
//! ξ-frame.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::czindex::{cz_index, IndexError, IndexResult};
use crate::fd;
use crate::geometry::{self, FrameConnection, GeometryError};
use crate::la::{self, Vec3};
use crate::models::{
    CatmapModel, ChartModel, FrameKind, FrameModel, Model, ModelError, ModelKind, ModelPoint, ModelSpec,
};
use crate::ode::{self, OdeError, OdeOptions};
use crate::sp2core::{classify, EndpointClass, EndpointTag, Mat2, Sp2Error, Sp2Matrix, SymplecticPath};
use crate::tolerances::{
    ALPHA_DRIFT_TOL, CHART_FD_STEP, CONTACT_PAIR_FLOOR, FLOW_RTOL, FRAME_SYMPLECTIC_TOL, GROWTH_FIT_RESIDUAL, GROWTH_RATE_FLOOR,
    LINEARIZATION_DET_TOL, ORBIT_CLOSURE_TOL, ORBIT_MAX_NEWTON, SPLITTING_ANGLE_TOL, TRANSVERSALITY_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Path(#[from] Sp2Error),
    #[error("integration failed: {0}")]
    Ode(#[from] OdeError),
    #[error("Newton refinement did not converge after {iterations} iterations (defect {defect:e})")]
    NoConvergence { iterations: usize, defect: f64 },
    #[error("transversal Jacobian of the return map is singular (condition {condition:e})")]
    DegenerateSection { condition: f64 },
    #[error("frame is not symplectic: dα(u, v) - 1 = {deviation:e}")]
    FrameNotSymplectic { deviation: f64 },
    #[error("linearized path has determinant drift {drift:e}")]
    DeterminantDrift { drift: f64 },
    #[error("no invariant splitting available: {0}")]
    SplittingUnavailable(String),
    #[error("planes are not transverse (angle difference {angle})")]
    NotTransverse { angle: f64 },
    #[error("unknown catalog orbit '{0}'")]
    UnknownOrbit(String),
    #[error("α(X) drifted by {drift:e} along the trajectory")]
    AlphaDrift { drift: f64 },
    #[error("invalid orbit spec: {0}")]
    Parse(String),
}

impl DynamicsError {
    pub fn is_consistency_failure(&self) -> bool {
        match self {
            DynamicsError::Index(e) => e.is_consistency_failure(),
            DynamicsError::Geometry(e) => e.is_consistency_failure(),
            _ => false,
        }
    }
}

// ---------------------------------------------------------------- groups

/// Matrix realization of a frame model: `[B_i, B_j] = Σ c^k_ij B_k`.
#[derive(Debug, Clone)]
pub struct GroupRep {
    kind: FrameKind,
    n: usize,
    basis: [DMatrix<f64>; 3],
    deck: Option<DMatrix<f64>>,
    /// `c = √(θ′r)/2` for sl2.
    scale: f64,
    rate: f64,
}

fn unit_matrix(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

fn quaternion_left(rows: [[f64; 4]; 4]) -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |i, j| rows[i][j])
}

impl GroupRep {
    pub fn new(f: &FrameModel) -> Result<Self, DynamicsError> {
        let t = f.theta_prime;
        let (n, basis, scale) = match f.kind {
            FrameKind::Heisenberg => {
                let s = t.sqrt();
                (3, [unit_matrix(3, 0, 2), unit_matrix(3, 1, 2) * s, unit_matrix(3, 0, 1) * s], s)
            }
            FrameKind::Su2 => {
                let li = quaternion_left([[0., -1., 0., 0.], [1., 0., 0., 0.], [0., 0., 0., -1.], [0., 0., 1., 0.]]);
                let lj = quaternion_left([[0., 0., -1., 0.], [0., 0., 0., 1.], [1., 0., 0., 0.], [0., -1., 0., 0.]]);
                let lk = quaternion_left([[0., 0., 0., -1.], [0., 0., -1., 0.], [0., 1., 0., 0.], [1., 0., 0., 0.]]);
                let s = -0.5 * t;
                (4, [li * s, lj * s, lk * s], s)
            }
            FrameKind::Sl2 => {
                let r = f.rate;
                let c = (t * r).sqrt() / 2.0;
                let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
                let e = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
                let ff = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
                (2, [h * (0.5 * r), e * c, ff * c], c)
            }
            FrameKind::Custom => {
                return Err(ModelError::NotApplicable("custom frame model has no group realization".into()).into())
            }
        };
        let deck = match f.kind {
            FrameKind::Su2 => None,
            _ => {
                let l = if f.orbit_length > 0.0 { f.orbit_length } else { 1.0 };
                Some((&basis[0] * l).exp())
            }
        };
        Ok(GroupRep { kind: f.kind, n, basis, deck, scale, rate: f.rate })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &[DMatrix<f64>; 3] {
        &self.basis
    }

    /// Group element at model coordinates.
    pub fn element(&self, p: &Vec3) -> DMatrix<f64> {
        match self.kind {
            FrameKind::Heisenberg => {
                DMatrix::from_row_slice(3, 3, &[1.0, p[1], p[2], 0.0, 1.0, p[0], 0.0, 0.0, 1.0])
            }
            _ => (&self.basis[0] * p[0] + &self.basis[1] * p[1] + &self.basis[2] * p[2]).exp(),
        }
    }

    /// Model coordinates of a group element (NaN where no logarithm exists).
    pub fn coords(&self, g: &DMatrix<f64>) -> Vec3 {
        match self.kind {
            FrameKind::Heisenberg => [g[(1, 2)], g[(0, 1)], g[(0, 2)]],
            FrameKind::Su2 => {
                let (w, v) = (g[(0, 0)], [g[(1, 0)], g[(2, 0)], g[(3, 0)]]);
                let nv = la::norm(&v);
                if nv == 0.0 {
                    return [0.0; 3];
                }
                let ang = nv.atan2(w);
                la::scale(&v, ang / nv / self.scale)
            }
            _ => {
                let m = Mat2::new(g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
                match Sp2Matrix::with_tolerance(m, 1e-6).ok().and_then(|s| s.log()) {
                    Some(l) => {
                        let c = self.scale;
                        [2.0 * l.a11 / self.rate, (l.a12 + l.a21) / (2.0 * c), (l.a12 - l.a21) / (2.0 * c)]
                    }
                    None => [f64::NAN; 3],
                }
            }
        }
    }

    /// Least-squares coordinates of a Lie algebra element in the basis.
    pub fn project(&self, m: &DMatrix<f64>) -> Vec3 {
        let gram = Matrix3::from_fn(|i, j| self.basis[i].dot(&self.basis[j]));
        let rhs = nalgebra::Vector3::from_fn(|i, _| self.basis[i].dot(m));
        let c = gram.lu().solve(&rhs).unwrap_or_else(nalgebra::Vector3::zeros);
        [c[0], c[1], c[2]]
    }

    fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
        let n = m.nrows();
        (0..n * n).map(|k| m[(k / n, k % n)]).collect()
    }

    fn unflatten(&self, y: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| y[i * self.n + j])
    }

    fn right_mul_x(&self, y: &[f64]) -> Vec<f64> {
        Self::flatten(&(self.unflatten(y) * &self.basis[0]))
    }
}

// ---------------------------------------------------------------- flow

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub ts: Vec<f64>,
    pub points: Vec<ModelPoint>,
    /// Largest `|α(X) - 1|` (charts) or `|det g - 1|` (groups) seen.
    pub drift: f64,
}

impl FlowTrajectory {
    pub fn end(&self) -> ModelPoint {
        *self.points.last().expect("non-empty trajectory")
    }
}

fn opts(tol: f64, span: f64) -> OdeOptions {
    OdeOptions::new(tol, (span.abs() / 256.0).max(1e-6))
}

/// Reeb field of a chart model with errors carried out of the integrator.
fn chart_field<'c>(
    c: &'c ChartModel,
    failure: &'c std::cell::Cell<Option<ModelError>>,
) -> impl Fn(f64, &[f64]) -> Vec<f64> + 'c {
    move |_, y| match c.reeb(&[y[0], y[1], y[2]]) {
        Ok(x) => x.to_vec(),
        Err(e) => {
            failure.set(Some(e));
            vec![f64::NAN; 3]
        }
    }
}

/// Integrates the Reeb field (or the suspension flow) from p for time `t_end`.
pub fn flow(model: &Model, p: &ModelPoint, t_end: f64, tol: f64) -> Result<FlowTrajectory, DynamicsError> {
    let o = opts(tol, t_end);
    match &model.kind {
        ModelKind::Frame(f) => {
            let rep = GroupRep::new(f)?;
            let g0 = GroupRep::flatten(&rep.element(p));
            let tr = ode::integrate(|_, y| rep.right_mul_x(y), &g0, t_end, &o, |_| true)?;
            let mut drift: f64 = 0.0;
            let points = tr
                .ys
                .iter()
                .map(|y| {
                    let g = rep.unflatten(y);
                    drift = drift.max((g.determinant() - 1.0).abs());
                    rep.coords(&g)
                })
                .collect();
            Ok(FlowTrajectory { ts: tr.ts, points, drift })
        }
        ModelKind::Chart(c) => {
            let failure = std::cell::Cell::new(None);
            let field = chart_field(c, &failure);
            let tr = ode::integrate(&field, p, t_end, &o, |y| c.contains(&[y[0], y[1], y[2]]));
            if let Some(e) = failure.take() {
                return Err(e.into());
            }
            let tr = tr?;
            let mut drift: f64 = 0.0;
            let mut points = Vec::with_capacity(tr.ys.len());
            for y in &tr.ys {
                let q = [y[0], y[1], y[2]];
                let x = c.reeb(&q)?;
                drift = drift.max((la::dot(&c.alpha(&q), &x) - 1.0).abs());
                points.push(q);
            }
            if drift > ALPHA_DRIFT_TOL {
                return Err(DynamicsError::AlphaDrift { drift });
            }
            Ok(FlowTrajectory { ts: tr.ts, points, drift })
        }
        ModelKind::Catmap(_) => {
            let tr = ode::integrate(|_, _| vec![0.0, 0.0, 1.0], p, t_end, &o, |_| true)?;
            let points = tr.ys.iter().map(|y| [y[0], y[1], y[2]]).collect();
            Ok(FlowTrajectory { ts: tr.ts, points, drift: 0.0 })
        }
    }
}

// ---------------------------------------------------------------- orbits

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogOrbit {
    pub tag: String,
    pub seed: ModelPoint,
    pub period: f64,
}

/// Analytic seeds of periodic orbits.
pub fn catalog_orbits(model: &Model) -> Vec<CatalogOrbit> {
    let mk = |tag: &str, period: f64| CatalogOrbit { tag: tag.into(), seed: [0.0; 3], period };
    match &model.kind {
        ModelKind::Frame(f) => match f.kind {
            FrameKind::Su2 => vec![mk("hopf", 4.0 * PI / f.theta_prime)],
            FrameKind::Sl2 => vec![mk("axis", f.orbit_length)],
            FrameKind::Heisenberg => vec![mk("center", if f.orbit_length > 0.0 { f.orbit_length } else { 1.0 })],
            FrameKind::Custom => vec![],
        },
        ModelKind::Chart(c) => match c.reeb(&[0.0; 3]) {
            Ok(x) if x[0].abs() > 0.0 => vec![mk("core", (c.hi[0] - c.lo[0]) / x[0].abs())],
            _ => vec![],
        },
        ModelKind::Catmap(_) => vec![mk("fixed", 1.0)],
    }
}

pub fn catalog_orbit(model: &Model, tag: &str) -> Result<CatalogOrbit, DynamicsError> {
    catalog_orbits(model).into_iter().find(|o| o.tag == tag).ok_or_else(|| DynamicsError::UnknownOrbit(tag.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameTag {
    #[default]
    Model,
    Splitting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReebOrbit {
    pub model: Model,
    pub tag: Option<String>,
    pub seed: ModelPoint,
    pub period: f64,
    pub trajectory: FlowTrajectory,
    pub closure_defect: f64,
    pub iterations: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSummary {
    pub model: String,
    pub tag: Option<String>,
    pub seed: ModelPoint,
    pub period: f64,
    pub closure_defect: f64,
    pub newton_iterations: usize,
    pub samples: usize,
}

impl ReebOrbit {
    pub fn summary(&self) -> OrbitSummary {
        OrbitSummary {
            model: self.model.name.clone(),
            tag: self.tag.clone(),
            seed: self.seed,
            period: self.period,
            closure_defect: self.closure_defect,
            newton_iterations: self.iterations,
            samples: self.trajectory.ts.len(),
        }
    }
}

/// Seed moved by `s` within the section transverse to the flow.
fn section_point(model: &Model, seed: &ModelPoint, s: [f64; 2]) -> Result<ModelPoint, DynamicsError> {
    match &model.kind {
        ModelKind::Frame(f) => {
            let rep = GroupRep::new(f)?;
            let g = rep.element(seed) * (&rep.basis[1] * s[0] + &rep.basis[2] * s[1]).exp();
            Ok(rep.coords(&g))
        }
        ModelKind::Chart(c) => {
            let fr = c.frame(seed)?;
            Ok(la::axpy(&la::axpy(seed, s[0], &fr[1]), s[1], &fr[2]))
        }
        ModelKind::Catmap(_) => Ok([seed[0] + s[0], seed[1] + s[1], seed[2]]),
    }
}

/// Closure residual of the flow segment from p over time T.
fn closure_residual(model: &Model, p: &ModelPoint, t: f64, tol: f64) -> Result<Vec3, DynamicsError> {
    match &model.kind {
        ModelKind::Frame(f) => {
            let rep = GroupRep::new(f)?;
            let g0 = rep.element(p);
            let y = ode::advance(|_, y| rep.right_mul_x(y), &GroupRep::flatten(&g0), t, &opts(tol, t))?;
            let gt = rep.unflatten(&y);
            let mut m = g0.clone().try_inverse().expect("group element");
            if let Some(d) = &rep.deck {
                m *= d.clone().try_inverse().expect("deck element");
            }
            let m = m * gt - DMatrix::identity(rep.n, rep.n);
            Ok(rep.project(&m))
        }
        ModelKind::Chart(c) => {
            let end = flow(model, p, t, tol)?.end();
            Ok(c.displacement(p, &end))
        }
        ModelKind::Catmap(cm) => {
            let end = flow(model, p, t, tol)?.end();
            Ok(cm.displacement(p, &end))
        }
    }
}

/// Newton shooting on (section offset, period).
pub fn refine_orbit(model: &Model, seed: &ModelPoint, t_guess: f64, tol: f64) -> Result<ReebOrbit, DynamicsError> {
    let residual = |z: &[f64; 3]| -> Result<Vec3, DynamicsError> {
        let p = section_point(model, seed, [z[0], z[1]])?;
        closure_residual(model, &p, z[2], tol)
    };
    let mut z = [0.0, 0.0, t_guess];
    let mut r = residual(&z)?;
    let mut defect = la::norm(&r);
    let mut iterations = 0;
    while defect >= 1e-2 * ORBIT_CLOSURE_TOL {
        if iterations >= ORBIT_MAX_NEWTON {
            return Err(DynamicsError::NoConvergence { iterations, defect });
        }
        iterations += 1;
        let h = 1e-6;
        let mut jac = nalgebra::Matrix3::zeros();
        for k in 0..3 {
            let (mut zp, mut zm) = (z, z);
            zp[k] += h;
            zm[k] -= h;
            let (rp, rm) = (residual(&zp)?, residual(&zm)?);
            for i in 0..3 {
                jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= 1e-10 * smax.max(1.0) {
            return Err(DynamicsError::DegenerateSection { condition: smax / smin.max(f64::MIN_POSITIVE) });
        }
        let dz = svd.solve(&nalgebra::Vector3::new(r[0], r[1], r[2]), 0.0).expect("full rank");
        let next = [z[0] - dz[0], z[1] - dz[1], z[2] - dz[2]];
        let rn = residual(&next)?;
        let dn = la::norm(&rn);
        let step = dz.norm();
        z = next;
        r = rn;
        let stalled = dn >= defect && step < 1e-13 * t_guess.max(1.0);
        defect = dn;
        if stalled {
            break;
        }
    }
    if defect >= ORBIT_CLOSURE_TOL || z[2] <= 0.0 {
        return Err(DynamicsError::NoConvergence { iterations, defect });
    }
    let p = section_point(model, seed, [z[0], z[1]])?;
    let trajectory = flow(model, &p, z[2], tol)?;
    Ok(ReebOrbit {
        model: model.clone(),
        tag: None,
        seed: p,
        period: z[2],
        trajectory,
        closure_defect: defect,
        iterations,
        tol,
    })
}

/// Refines a catalog orbit by tag.
pub fn catalog_refined(model: &Model, tag: &str) -> Result<ReebOrbit, DynamicsError> {
    let c = catalog_orbit(model, tag)?;
    let mut orbit = refine_orbit(model, &c.seed, c.period, FLOW_RTOL)?;
    orbit.tag = Some(c.tag);
    Ok(orbit)
}

// ---------------------------------------------------------------- linearization

/// `dφ_t|ξ` in the model frame at the requested times, with the base points.
pub fn linear_flow(
    model: &Model,
    p: &ModelPoint,
    times: &[f64],
    tol: f64,
) -> Result<Vec<(ModelPoint, Mat2)>, DynamicsError> {
    let span = times.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let o = opts(tol, span);
    let mut out = Vec::with_capacity(times.len());
    let mut t_prev = 0.0;
    match &model.kind {
        ModelKind::Frame(f) => {
            let rep = GroupRep::new(f)?;
            let gm = f.xi_generator();
            let nn = rep.n * rep.n;
            let mut y = GroupRep::flatten(&rep.element(p));
            y.extend_from_slice(&[1.0, 0.0, 0.0, 1.0]);
            let rhs = |_: f64, y: &[f64]| {
                let mut d = rep.right_mul_x(&y[..nn]);
                let phi = Mat2::new(y[nn], y[nn + 1], y[nn + 2], y[nn + 3]);
                let dp = gm.mul(&phi);
                d.extend_from_slice(&[dp.a11, dp.a12, dp.a21, dp.a22]);
                d
            };
            for &t in times {
                y = ode::advance(rhs, &y, t - t_prev, &o)?;
                t_prev = t;
                out.push((rep.coords(&rep.unflatten(&y[..nn])), Mat2::new(y[nn], y[nn + 1], y[nn + 2], y[nn + 3])));
            }
        }
        ModelKind::Catmap(cm) => {
            let mut y = vec![p[0], p[1], p[2], 1.0, 0.0, 0.0, 1.0];
            let rhs = |_: f64, y: &[f64]| {
                let g = cm.xi_generator(y[2]);
                let dp = g.mul(&Mat2::new(y[3], y[4], y[5], y[6]));
                vec![0.0, 0.0, 1.0, dp.a11, dp.a12, dp.a21, dp.a22]
            };
            for &t in times {
                y = ode::advance(rhs, &y, t - t_prev, &o)?;
                t_prev = t;
                out.push(([y[0], y[1], y[2]], Mat2::new(y[3], y[4], y[5], y[6])));
            }
        }
        ModelKind::Chart(c) => {
            let (fr0, axis) = c.frame_with(p, None)?;
            let mut y = p.to_vec();
            y.extend_from_slice(&fr0[1]);
            y.extend_from_slice(&fr0[2]);
            let failure = std::cell::Cell::new(None);
            let rhs = |_: f64, y: &[f64]| -> Vec<f64> {
                let q = [y[0], y[1], y[2]];
                let x = match c.reeb(&q) {
                    Ok(x) => x,
                    Err(e) => {
                        failure.set(Some(e));
                        return vec![f64::NAN; 9];
                    }
                };
                // DX applied to both columns from one Jacobian
                let mut err = None;
                let dx: [f64; 9] = fd::derivative(
                    |s| {
                        let mut v = [0.0; 9];
                        for a in 0..3 {
                            let mut qa = q;
                            qa[a] += s;
                            match c.reeb(&qa) {
                                Ok(r) => v[3 * a..3 * a + 3].copy_from_slice(&r),
                                Err(e) => err = Some(e),
                            }
                        }
                        v
                    },
                    CHART_FD_STEP,
                );
                if let Some(e) = err {
                    failure.set(Some(e));
                    return vec![f64::NAN; 9];
                }
                let mut d = x.to_vec();
                for col in 0..2 {
                    let v = &y[3 + 3 * col..6 + 3 * col];
                    for k in 0..3 {
                        d.push((0..3).map(|a| dx[3 * a + k] * v[a]).sum());
                    }
                }
                d
            };
            for &t in times {
                let next = ode::integrate(rhs, &y, t - t_prev, &o, |y| c.contains(&[y[0], y[1], y[2]]));
                if let Some(e) = failure.take() {
                    return Err(e.into());
                }
                y = next?.last().to_vec();
                t_prev = t;
                let q = [y[0], y[1], y[2]];
                let (fr, _) = c.frame_with(&q, Some(axis))?;
                let m = la::from_cols(&fr);
                let mut phi = [[0.0; 2]; 2];
                for col in 0..2 {
                    let v = [y[3 + 3 * col], y[4 + 3 * col], y[5 + 3 * col]];
                    let comp = la::solve(&m, &v).ok_or(ModelError::DegenerateFrame)?;
                    phi[0][col] = comp[1];
                    phi[1][col] = comp[2];
                }
                out.push((q, Mat2::new(phi[0][0], phi[0][1], phi[1][0], phi[1][1])));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub path: SymplecticPath,
    pub frame: FrameTag,
    /// 2 when a non-orientable splitting frame forced the double period.
    pub cover: u32,
    pub iterate: usize,
    pub period: f64,
    pub det_drift: f64,
    pub frame_deviation: f64,
    /// Base points at `times`, the flow samples before refinement.
    pub points: Vec<ModelPoint>,
    pub times: Vec<f64>,
}

impl Linearization {
    pub fn endpoint(&self) -> Sp2Matrix {
        self.path.endpoint()
    }

    pub fn classify(&self) -> EndpointClass {
        classify(&self.endpoint())
    }

    pub fn non_orientable(&self) -> bool {
        self.cover == 2
    }
}

/// `dα(u, v) - 1` for the symplectic frame `(e, Je)/√θ′` along the points.
fn frame_deviation(model: &Model, points: &[ModelPoint]) -> Result<f64, DynamicsError> {
    match &model.kind {
        ModelKind::Frame(f) => Ok((f.structural_theta() / f.theta_prime - 1.0).abs()),
        ModelKind::Chart(c) => {
            let mut worst: f64 = 0.0;
            for q in points.iter().step_by(16) {
                let fr = c.frame(q)?;
                let w = la::form(&c.d_alpha(q), &fr[1], &fr[2]) / c.theta_prime;
                worst = worst.max((w - 1.0).abs());
            }
            Ok(worst)
        }
        ModelKind::Catmap(_) => Ok(0.0),
    }
}

/// Unstable/stable eigenvectors of a traceless hyperbolic generator,
/// normalized so the pair has determinant 1.
fn hyperbolic_basis(g: &Mat2) -> Option<Mat2> {
    let lam2 = -g.det();
    if lam2 <= 1e-14 {
        return None;
    }
    let lam = lam2.sqrt();
    let null = |mu: f64| {
        let a = [g.a12, mu - g.a11];
        let b = [mu - g.a22, g.a21];
        let v = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    };
    let (u, mut s) = (null(lam), null(-lam));
    let d = u[0] * s[1] - u[1] * s[0];
    if d.abs() < 1e-12 {
        return None;
    }
    s = [s[0] / d, s[1] / d];
    Some(Mat2::new(u[0], s[0], u[1], s[1]))
}

/// Linearized return path over `iterate` periods in the chosen frame.
pub fn linearize(orbit: &ReebOrbit, frame: FrameTag, iterate: usize) -> Result<Linearization, DynamicsError> {
    let iterate = iterate.max(1);
    let per = 256;
    let run = |cover: u32| -> Result<(Vec<(ModelPoint, Mat2)>, Vec<f64>), DynamicsError> {
        let n = per * iterate * cover as usize;
        let times: Vec<f64> = (1..=n).map(|k| orbit.period * k as f64 / per as f64).collect();
        Ok((linear_flow(&orbit.model, &orbit.seed, &times, orbit.tol)?, times))
    };
    let (mut samples, mut times) = run(1)?;
    let mut cover = 1;
    let mut mats: Vec<Mat2> = samples.iter().map(|s| s.1).collect();
    if frame == FrameTag::Splitting {
        match &orbit.model.kind {
            ModelKind::Frame(f) => {
                let b = hyperbolic_basis(&f.xi_generator()).ok_or_else(|| {
                    DynamicsError::SplittingUnavailable(format!("{} has no hyperbolic linearization", orbit.model.name))
                })?;
                let bi = b.adjugate();
                mats = mats.iter().map(|m| bi.mul(m).mul(&b)).collect();
            }
            ModelKind::Catmap(_) => {
                let (u, s) = CatmapModel::eigenvectors();
                let transported = |ms: &[Mat2]| -> Vec<Mat2> {
                    let basis = |m: &Mat2| {
                        let a = m.apply(u);
                        let na = a[0].hypot(a[1]);
                        let a = [a[0] / na, a[1] / na];
                        let w = m.apply(s);
                        let d = a[0] * w[1] - a[1] * w[0];
                        Mat2::new(a[0], w[0] / d, a[1], w[1] / d)
                    };
                    let b0 = basis(&Mat2::IDENTITY);
                    ms.iter().map(|m| basis(m).adjugate().mul(m).mul(&b0)).collect()
                };
                let end = mats.last().expect("samples").apply(u);
                if end[0] * u[0] + end[1] * u[1] < 0.0 {
                    // E^u comes back reversed: use the double period
                    cover = 2;
                    let (s2, t2) = run(2)?;
                    samples = s2;
                    times = t2;
                    mats = samples.iter().map(|s| s.1).collect();
                }
                mats = transported(&mats);
            }
            ModelKind::Chart(_) => {
                return Err(DynamicsError::SplittingUnavailable(format!(
                    "{} exposes no invariant splitting",
                    orbit.model.name
                )))
            }
        }
    }
    let points: Vec<ModelPoint> = samples.iter().map(|s| s.0).collect();
    let det_drift = mats.iter().fold(0.0f64, |a, m| a.max((m.det() - 1.0).abs()));
    if det_drift > LINEARIZATION_DET_TOL {
        return Err(DynamicsError::DeterminantDrift { drift: det_drift });
    }
    let frame_dev = frame_deviation(&orbit.model, &points)?;
    if frame_dev > FRAME_SYMPLECTIC_TOL {
        return Err(DynamicsError::FrameNotSymplectic { deviation: frame_dev });
    }
    let mut path_samples = vec![(0.0, Sp2Matrix::IDENTITY)];
    for (t, m) in times.iter().zip(&mats) {
        path_samples.push((*t, Sp2Matrix::with_tolerance(*m, LINEARIZATION_DET_TOL)?));
    }
    Ok(Linearization {
        path: SymplecticPath::refined(path_samples)?,
        frame,
        cover,
        iterate,
        period: orbit.period,
        det_drift,
        frame_deviation: frame_dev,
        points,
        times,
    })
}

/// Conley–Zehnder index of a linearized orbit.
pub fn orbit_cz(lin: &Linearization) -> Result<IndexResult, DynamicsError> {
    let mut r = cz_index(&lin.path)?;
    r.cover = lin.cover;
    Ok(r)
}

/// Whether the transported stable line returns with its orientation.
pub fn splitting_orientability(orbit: &ReebOrbit) -> Result<bool, DynamicsError> {
    let lin = linearize(orbit, FrameTag::Model, 1)?;
    match lin.classify().tag {
        EndpointTag::PositiveHyperbolic => Ok(true),
        EndpointTag::NegativeHyperbolic => Ok(false),
        t => Err(DynamicsError::SplittingUnavailable(format!("return map is {t:?}"))),
    }
}

// ---------------------------------------------------------------- splitting

const GENERIC_LINE: f64 = 1.0;

fn line_angle(v: [f64; 2]) -> f64 {
    v[1].atan2(v[0]).rem_euclid(PI)
}

fn line_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingEstimate {
    pub point: ModelPoint,
    pub horizon: f64,
    /// Line angles in `[0, π)` measured from e.
    pub unstable_angle: f64,
    pub stable_angle: f64,
    pub unstable_drift: f64,
    pub stable_drift: f64,
    pub converged: bool,
}

/// Limit direction of `dφ_s` applied to a generic line, `s ∈ [0.9H, H]`;
/// `sign` +1 pulls from the past (E^u), -1 from the future (E^s).
fn limit_line(model: &Model, p: &ModelPoint, horizon: f64, sign: f64) -> Result<(f64, f64), DynamicsError> {
    let times: Vec<f64> = (0..=10).map(|k| -sign * horizon * (0.9 + 0.01 * k as f64)).collect();
    let flows = linear_flow(model, p, &times, FLOW_RTOL)?;
    let l0 = [GENERIC_LINE.cos(), GENERIC_LINE.sin()];
    let angles: Vec<f64> = flows.iter().map(|(_, m)| line_angle(m.adjugate().apply(l0))).collect();
    let last = *angles.last().expect("samples");
    let drift = angles.iter().fold(0.0f64, |a, &b| a.max(line_gap(b, last)));
    Ok((last, drift))
}

pub fn estimate_splitting(model: &Model, p: &ModelPoint, horizon: f64) -> Result<SplittingEstimate, DynamicsError> {
    let (ua, ud) = limit_line(model, p, horizon, 1.0)?;
    let (sa, sd) = limit_line(model, p, horizon, -1.0)?;
    Ok(SplittingEstimate {
        point: *p,
        horizon,
        unstable_angle: ua,
        stable_angle: sa,
        unstable_drift: ud,
        stable_drift: sd,
        converged: ud < SPLITTING_ANGLE_TOL && sd < SPLITTING_ANGLE_TOL && line_gap(ua, sa) > TRANSVERSALITY_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFit {
    pub point: ModelPoint,
    pub a: f64,
    pub c: f64,
    pub rms: f64,
    pub splitting_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub a: f64,
    pub c: f64,
    pub horizon: f64,
    pub samples: usize,
    pub residual: f64,
    pub verdict: bool,
    pub points: Vec<PointFit>,
}

const GROWTH_SAMPLES: usize = 64;

/// Least-squares line through `(t, y)`; returns (intercept, slope, rms).
fn fit_line(ts: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let sxy: f64 = ts.iter().zip(ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mt;
    let rms = (ts.iter().zip(ys).map(|(t, y)| (y - icpt - slope * t).powi(2)).sum::<f64>() / n).sqrt();
    (icpt, slope, rms)
}

fn fit_point(model: &Model, p: &ModelPoint, horizon: f64) -> Result<PointFit, DynamicsError> {
    let est = estimate_splitting(model, p, horizon)?;
    let times: Vec<f64> = (1..GROWTH_SAMPLES).map(|k| horizon * k as f64 / (GROWTH_SAMPLES - 1) as f64).collect();
    let flows = linear_flow(model, p, &times, FLOW_RTOL)?;
    let v = [est.unstable_angle.cos(), est.unstable_angle.sin()];
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (t, (q, m)) in times.iter().zip(&flows) {
        if *t < 0.1 * horizon {
            continue;
        }
        let w = m.apply(v);
        let nw = w[0].hypot(w[1]);
        let ratio = if est.converged {
            // |dφ u| from area preservation and E^s at the image point
            let (sa, _) = limit_line(model, q, horizon, -1.0)?;
            let sin_t = (w[1] * sa.cos() - w[0] * sa.sin()).abs() / nw;
            let sin_0 = (est.unstable_angle - est.stable_angle).sin().abs();
            nw * nw * sin_t / sin_0
        } else {
            let u = m.apply([-v[1], v[0]]);
            nw / u[0].hypot(u[1])
        };
        ts.push(*t);
        ys.push(ratio.ln());
    }
    let (icpt, slope, rms) = fit_line(&ts, &ys);
    Ok(PointFit { point: *p, a: icpt.exp(), c: slope, rms, splitting_converged: est.converged })
}

/// Log-linear fit of the growth ratio `‖dφ_t v‖/‖dφ_t u‖`, v ∈ E^u, u ∈ E^s.
pub fn domination_check(model: &Model, points: &[ModelPoint], horizon: f64) -> Result<DominationReport, DynamicsError> {
    use rayon::prelude::*;
    let fits: Vec<Result<PointFit, DynamicsError>> = points.par_iter().map(|p| fit_point(model, p, horizon)).collect();
    let fits: Vec<PointFit> = fits.into_iter().collect::<Result<_, _>>()?;
    let c = fits.iter().map(|f| f.c).fold(f64::INFINITY, f64::min);
    let a = fits.iter().map(|f| f.a).fold(f64::INFINITY, f64::min);
    let residual = fits.iter().map(|f| f.rms).fold(0.0, f64::max);
    Ok(DominationReport {
        a,
        c,
        horizon,
        samples: GROWTH_SAMPLES,
        residual,
        verdict: c > GROWTH_RATE_FLOOR && residual < GROWTH_FIT_RESIDUAL && a > 0.0,
        points: fits,
    })
}

// ---------------------------------------------------------------- contact pairs

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactPairReport {
    pub plus_angle: f64,
    pub minus_angle: f64,
    /// `g([e₊, X], e₋)` at each sampled point.
    pub positive: Vec<f64>,
    /// `g([e₋, X], e₊)` at each sampled point.
    pub negative: Vec<f64>,
    pub positive_min: f64,
    pub negative_min: f64,
    pub verdict: bool,
}

/// Sign test for `ξ± = ⟨X, e±⟩`; e₋ is taken so that (e₊, e₋) is oriented.
/// Both brackets must clear a small positive floor everywhere.
pub fn contact_pair_check(
    model: &Model,
    plus_angle: f64,
    minus_angle: f64,
    points: &[ModelPoint],
) -> Result<ContactPairReport, DynamicsError> {
    let gap = (plus_angle - minus_angle).sin();
    if gap.abs() < TRANSVERSALITY_TOL {
        return Err(DynamicsError::NotTransverse { angle: plus_angle - minus_angle });
    }
    let ep = geometry::unit(plus_angle);
    let mut em = geometry::unit(minus_angle);
    if ep[0] * em[1] - ep[1] * em[0] < 0.0 {
        em = [-em[0], -em[1]];
    }
    let mut positive = Vec::with_capacity(points.len());
    let mut negative = Vec::with_capacity(points.len());
    for p in points {
        let conn: FrameConnection = geometry::connection(model, p)?;
        positive.push(conn.bracket_with_x(ep, em));
        negative.push(conn.bracket_with_x(em, ep));
    }
    let positive_min = positive.iter().cloned().fold(f64::INFINITY, f64::min);
    let negative_min = negative.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ContactPairReport {
        plus_angle,
        minus_angle,
        positive,
        negative,
        positive_min,
        negative_min,
        verdict: positive_min > CONTACT_PAIR_FLOOR && negative_min > CONTACT_PAIR_FLOOR,
    })
}

/// The two zero-directions of `e ↦ g(e, ∇_e X)` at p, as (plus, minus):
/// the plus plane is the one on the `θ′/2 + √(θ′²/4 - Ricci/2)` branch.
pub fn zero_direction_planes(model: &Model, p: &ModelPoint) -> Result<(f64, f64), DynamicsError> {
    let rep = geometry::curvature_report(model, p, 8, false)?;
    match rep.branches.as_slice() {
        [a, b] if a.branch != b.branch => {
            Ok(if a.branch > 0 { (a.angle, b.angle) } else { (b.angle, a.angle) })
        }
        _ => Err(DynamicsError::SplittingUnavailable(format!("no pair of zero-directions on {}", model.name))),
    }
}

/// Algebraic and Jacobi-field expansion rates at the unit e at `angle`.
pub fn expansion_rate(model: &Model, p: &ModelPoint, angle: f64) -> Result<(f64, f64), DynamicsError> {
    Ok(geometry::expansion_rate(model, p, angle)?)
}

// ---------------------------------------------------------------- orbit specs

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Name(String),
    Spec(ModelSpec),
}

impl ModelRef {
    pub fn build(&self) -> Result<Model, ModelError> {
        match self {
            ModelRef::Name(n) => crate::models::build_model(n, &Default::default()),
            ModelRef::Spec(s) => s.build(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedRef {
    Point([f64; 3]),
    Tag(String),
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSpec {
    pub model: ModelRef,
    pub seed: SeedRef,
    #[serde(default)]
    pub period_guess: Option<f64>,
    #[serde(default)]
    pub frame: FrameTag,
    #[serde(default = "one")]
    pub iterate: usize,
}

pub const MAX_ITERATE: usize = 64;

impl OrbitSpec {
    pub fn from_json(text: &str) -> Result<Self, DynamicsError> {
        let spec: OrbitSpec = serde_json::from_str(text).map_err(|e| DynamicsError::Parse(e.to_string()))?;
        if let Some(t) = spec.period_guess {
            if !(t.is_finite() && t > 0.0) {
                return Err(DynamicsError::Parse(format!("period_guess must be positive, got {t}")));
            }
        }
        if let SeedRef::Point(p) = &spec.seed {
            if p.iter().any(|x| !x.is_finite()) {
                return Err(DynamicsError::Parse("seed must be finite".into()));
            }
        }
        if spec.iterate == 0 || spec.iterate > MAX_ITERATE {
            return Err(DynamicsError::Parse(format!("iterate must lie in 1..={MAX_ITERATE}")));
        }
        Ok(spec)
    }

    /// Model, seed, period guess and catalog tag.
    pub fn resolve(&self) -> Result<(Model, ModelPoint, f64, Option<String>), DynamicsError> {
        let model = self.model.build()?;
        match &self.seed {
            SeedRef::Tag(tag) => {
                let c = catalog_orbit(&model, tag)?;
                Ok((model, c.seed, self.period_guess.unwrap_or(c.period), Some(c.tag)))
            }
            SeedRef::Point(p) => {
                let t = self
                    .period_guess
                    .ok_or_else(|| DynamicsError::Parse("period_guess is required with an explicit seed".into()))?;
                Ok((model, *p, t, None))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::catalog;

    #[test]
    fn group_brackets_match_structure() {
        for name in ["heisenberg", "su2", "sl2"] {
            let m = catalog(name);
            let f = m.as_frame().unwrap();
            let rep = GroupRep::new(f).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let b = &rep.basis[i] * &rep.basis[j] - &rep.basis[j] * &rep.basis[i];
                    let mut expect = DMatrix::zeros(rep.n, rep.n);
                    for k in 0..3 {
                        expect += &rep.basis[k] * f.c(k, i, j);
                    }
                    assert!((b - expect).amax() < 1e-14, "{name} [{i},{j}]");
                }
            }
        }
    }

    #[test]
    fn coordinates_roundtrip() {
        for name in ["heisenberg", "su2", "sl2"] {
            let rep = GroupRep::new(catalog(name).as_frame().unwrap()).unwrap();
            let p = [0.3, -0.2, 0.4];
            let q = rep.coords(&rep.element(&p));
            assert!(la::norm(&la::sub(&p, &q)) < 1e-12, "{name}: {q:?}");
        }
    }

    #[test]
    fn heisenberg_flow_is_vertical() {
        let tr = flow(&catalog("heisenberg"), &[0.0; 3], 1.0, FLOW_RTOL).unwrap();
        let e = tr.end();
        assert!(e[0].abs() < 1e-12 && e[1].abs() < 1e-12 && (e[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hyperbolic_basis_diagonalizes() {
        let g = Mat2::new(0.0, -1.0, -1.0, 0.0);
        let b = hyperbolic_basis(&g).unwrap();
        assert!((b.det() - 1.0).abs() < 1e-14);
        let d = b.adjugate().mul(&g).mul(&b);
        assert!((d.a11 - 1.0).abs() < 1e-14 && (d.a22 + 1.0).abs() < 1e-14 && d.a12.abs() < 1e-14);
        assert!(hyperbolic_basis(&Mat2::J0).is_none());
    }

    #[test]
    fn line_fit_recovers_slope() {
        let ts: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 0.5 + 2.0 * t).collect();
        let (a, c, r) = fit_line(&ts, &ys);
        assert!((a - 0.5).abs() < 1e-12 && (c - 2.0).abs() < 1e-12 && r < 1e-12);
    }

    #[test]
    fn orbit_spec_parsing() {
        let s = OrbitSpec::from_json(r#"{"model":"sl2","seed":"axis","frame":"splitting"}"#).unwrap();
        assert_eq!(s.frame, FrameTag::Splitting);
        let (_, _, t, tag) = s.resolve().unwrap();
        assert_eq!((t, tag.as_deref()), (1.0, Some("axis")));
        assert!(OrbitSpec::from_json(r#"{"model":"sl2","seed":[0,0,0]}"#).unwrap().resolve().is_err());
        assert!(OrbitSpec::from_json(r#"{"model":"sl2","seed":"axis","bogus":1}"#).is_err());
        assert!(OrbitSpec::from_json(r#"{"model":"sl2","seed":"axis","iterate":0}"#).is_err());
    }
}
