//! Levi-Civita geometry of compatible metrics in the orthonormal frame
//! `(E₀, E₁, E₂) = (X, e, Je)`.
//!
//! Every curvature quantity is computed along two routes and reconciled:
//! the Riemann tensor, and the decomposition
//! `k(e, X) = g(Je, ∇_e X)² - g(e, ∇_e X)² - d/dt g(e(t), ∇_{e(t)} X)`
//! where `e(t)` is the normalized α-Jacobi field (`[X, ẽ] = 0`) through e.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fd;
use crate::la::{self, Mat3, Vec3};
use crate::models::{ChartModel, FrameModel, Model, ModelError, ModelKind, ModelPoint};
use crate::ode::{self, OdeError, OdeOptions};
use crate::tolerances::{
    CHART_FD_STEP, CHART_IDENTITY_TOL, CHART_ORACLE_TOL, EXPANSION_RATE_TOL, FRAME_IDENTITY_TOL, FRAME_ORACLE_TOL,
    JACOBI_SEGMENT, LIE_NORM_ZERO, NEG_BOUND_STRICTNESS, RADICAND_CLAMP,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{quantity}: routes disagree ({a} vs {b}, tolerance {tol:e})")]
    OracleDisagreement { quantity: String, a: f64, b: f64, tol: f64 },
    #[error("Jacobi field integration failed: {0}")]
    Ode(#[from] OdeError),
    #[error("no finite fundamental domain; energy density {density}")]
    UnboundedDomain { density: f64 },
}

impl GeometryError {
    pub fn is_consistency_failure(&self) -> bool {
        matches!(self, GeometryError::OracleDisagreement { .. })
    }
}

/// `gamma[k][i][j] = Γ^k_ij = g(∇_{E_i} E_j, E_k)`.
pub type Gamma = [[[f64; 3]; 3]; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameConnection {
    pub gamma: Gamma,
    pub theta_prime: f64,
}

/// Unit vector in ξ at `angle` from e, as frame components over (e, Je).
pub fn unit(angle: f64) -> [f64; 2] {
    [angle.cos(), angle.sin()]
}

impl FrameConnection {
    /// Koszul formula: `2Γ^k_ij = c^k_ij - c^i_jk + c^j_ki`.
    pub fn from_frame_model(f: &FrameModel) -> Self {
        let c = f.structure();
        let gamma = std::array::from_fn(|k| {
            std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (c[k][i][j] - c[i][j][k] + c[j][k][i])))
        });
        FrameConnection { gamma, theta_prime: f.theta_prime }
    }

    /// Largest `|Γ^k_ij + Γ^j_ik|`.
    pub fn metric_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max((self.gamma[k][i][j] + self.gamma[j][i][k]).abs());
                }
            }
        }
        worst
    }

    /// Largest `|Γ^k_ij - Γ^k_ji - c^k_ij|`.
    pub fn torsion_defect(&self, c: &crate::models::Structure) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max((self.gamma[k][i][j] - self.gamma[k][j][i] - c[k][i][j]).abs());
                }
            }
        }
        worst
    }

    fn lift(u: [f64; 2]) -> Vec3 {
        [0.0, u[0], u[1]]
    }

    /// `∇_U V` for constant-coefficient U, V (frame components).
    pub fn nabla(&self, u: &Vec3, v: &Vec3) -> Vec3 {
        std::array::from_fn(|k| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += u[i] * v[j] * self.gamma[k][i][j];
                }
            }
            s
        })
    }

    /// `g(u, ∇_u X)` for u in ξ (not normalized).
    pub fn expansion(&self, u: [f64; 2]) -> f64 {
        let w = Self::lift(u);
        la::dot(&w, &self.nabla(&w, &[1.0, 0.0, 0.0]))
    }

    /// `g(e, ∇_e X)` for the unit e at `angle`.
    pub fn q(&self, angle: f64) -> f64 {
        self.expansion(unit(angle))
    }

    /// `g(Je, ∇_e X)` for the unit e at `angle`.
    pub fn p(&self, angle: f64) -> f64 {
        let e = Self::lift(unit(angle));
        let je = Self::lift(unit(angle + 0.5 * PI));
        la::dot(&je, &self.nabla(&e, &[1.0, 0.0, 0.0]))
    }

    /// `II(u, v) = g(∇_u v, X)` over the basis (e, Je).
    pub fn second_fundamental_form(&self) -> [[f64; 2]; 2] {
        [[self.gamma[0][1][1], self.gamma[0][1][2]], [self.gamma[0][2][1], self.gamma[0][2][2]]]
    }

    /// `‖ℒ_X g‖²` with `(ℒ_X g)(E_i, E_j) = Γ^j_{iX} + Γ^i_{jX}`.
    pub fn lie_norm2(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let l = self.gamma[j][i][0] + self.gamma[i][j][0];
                s += l * l;
            }
        }
        s
    }

    /// `g([U, X], V)` for constant-coefficient U, V in ξ.
    pub fn bracket_with_x(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        let (u, v) = (Self::lift(u), Self::lift(v));
        let mut s = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                s += u[i] * v[k] * (self.gamma[k][i][0] - self.gamma[k][0][i]);
            }
        }
        s
    }
}

/// Coordinate Riemann tensor `r[d][c][a][b]` with
/// `R(∂_a, ∂_b)∂_c = Σ_d r[d][c][a][b] ∂_d`.
type Riemann = [[[[f64; 3]; 3]; 3]; 3];

/// Geometric data at one point of a contact model.
#[derive(Debug, Clone)]
pub struct PointGeometry<'a> {
    model: &'a Model,
    pub point: ModelPoint,
    pub conn: FrameConnection,
    chart: Option<ChartData>,
}

#[derive(Debug, Clone)]
struct ChartData {
    frame: [Vec3; 3],
    metric: Mat3,
    riemann: Riemann,
}

fn flatten27(g: &Gamma) -> [f64; 27] {
    std::array::from_fn(|n| g[n / 9][(n / 3) % 3][n % 3])
}

fn chart_riemann(c: &ChartModel, p: &Vec3) -> Riemann {
    let gam = c.christoffel(p);
    let dgam: [[f64; 27]; 3] = std::array::from_fn(|a| {
        fd::derivative(
            |s| {
                let mut q = *p;
                q[a] += s;
                flatten27(&c.christoffel(&q))
            },
            c.h,
        )
    });
    let d = |a: usize, dd: usize, b: usize, cc: usize| dgam[a][dd * 9 + b * 3 + cc];
    std::array::from_fn(|dd| {
        std::array::from_fn(|cc| {
            std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    let mut s = d(a, dd, b, cc) - d(b, dd, a, cc);
                    for e in 0..3 {
                        s += gam[dd][a][e] * gam[e][b][cc] - gam[dd][b][e] * gam[e][a][cc];
                    }
                    s
                })
            })
        })
    })
}

/// Frame connection of a chart model at p, from coordinate Christoffels and
/// differenced frame fields.
fn chart_connection(c: &ChartModel, p: &Vec3) -> Result<(FrameConnection, [Vec3; 3]), GeometryError> {
    let (frame, axis) = c.frame_with(p, None)?;
    let g = c.metric(p);
    let chr = c.christoffel(p);
    let mut dframe = [[[0.0; 3]; 3]; 3]; // dframe[a][j] = ∂_a E_j
    for a in 0..3 {
        let mut err = None;
        let flat = fd::derivative(
            |s| {
                let mut q = *p;
                q[a] += s;
                match c.frame_with(&q, Some(axis)) {
                    Ok((f, _)) => std::array::from_fn::<f64, 9, _>(|n| f[n / 3][n % 3]),
                    Err(e) => {
                        err = Some(e);
                        [f64::NAN; 9]
                    }
                }
            },
            c.h,
        );
        if let Some(e) = err {
            return Err(e.into());
        }
        for j in 0..3 {
            for k in 0..3 {
                dframe[a][j][k] = flat[3 * j + k];
            }
        }
    }
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            // ∇_{E_i} E_j in coordinates
            let mut v = [0.0; 3];
            for cc in 0..3 {
                for a in 0..3 {
                    v[cc] += frame[i][a] * dframe[a][j][cc];
                    for b in 0..3 {
                        v[cc] += chr[cc][a][b] * frame[i][a] * frame[j][b];
                    }
                }
            }
            for k in 0..3 {
                gamma[k][i][j] = la::form(&g, &v, &frame[k]);
            }
        }
    }
    Ok((FrameConnection { gamma, theta_prime: c.theta_prime }, frame))
}

/// Frame connection at p (constant for frame models).
pub fn connection(model: &Model, p: &ModelPoint) -> Result<FrameConnection, GeometryError> {
    match &model.kind {
        ModelKind::Frame(f) => Ok(FrameConnection::from_frame_model(f)),
        ModelKind::Chart(c) => Ok(chart_connection(c, p)?.0),
        ModelKind::Catmap(_) => Err(ModelError::NotApplicable(model.name.clone()).into()),
    }
}

/// Values along the α-Jacobi field through e at `t ∈ {-h, -h/2, 0, h/2, h}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiProbe {
    /// `g(e, ∇_e X)` from the connection.
    pub algebraic: f64,
    /// `½ d/dt ln g(ẽ, ẽ)` at 0, differenced.
    pub dynamical: f64,
    /// `d/dt g(e(t), ∇_{e(t)} X)` at 0, differenced.
    pub rate_derivative: f64,
}

impl<'a> PointGeometry<'a> {
    pub fn new(model: &'a Model, p: &ModelPoint) -> Result<Self, GeometryError> {
        match &model.kind {
            ModelKind::Frame(f) => {
                Ok(PointGeometry { model, point: *p, conn: FrameConnection::from_frame_model(f), chart: None })
            }
            ModelKind::Chart(c) => {
                let (conn, frame) = chart_connection(c, p)?;
                let chart = ChartData { frame, metric: c.metric(p), riemann: chart_riemann(c, p) };
                Ok(PointGeometry { model, point: *p, conn, chart: Some(chart) })
            }
            ModelKind::Catmap(_) => Err(ModelError::NotApplicable(model.name.clone()).into()),
        }
    }

    pub fn theta_prime(&self) -> f64 {
        self.conn.theta_prime
    }

    fn is_chart(&self) -> bool {
        self.chart.is_some()
    }

    pub fn oracle_tol(&self) -> f64 {
        if self.is_chart() {
            CHART_ORACLE_TOL
        } else {
            FRAME_ORACLE_TOL
        }
    }

    pub fn identity_tol(&self) -> f64 {
        if self.is_chart() {
            CHART_IDENTITY_TOL
        } else {
            FRAME_IDENTITY_TOL
        }
    }

    /// Sectional curvature `g(R(U, V)V, U)` for frame-component vectors.
    pub fn sectional_frame(&self, u: &Vec3, v: &Vec3) -> f64 {
        match (&self.chart, &self.model.kind) {
            (Some(ch), _) => {
                let to_coord = |w: &Vec3| la::add(&la::add(&la::scale(&ch.frame[0], w[0]), &la::scale(&ch.frame[1], w[1])), &la::scale(&ch.frame[2], w[2]));
                let (uc, vc) = (to_coord(u), to_coord(v));
                let mut s = 0.0;
                for d in 0..3 {
                    for c in 0..3 {
                        for a in 0..3 {
                            for b in 0..3 {
                                let r = ch.riemann[d][c][a][b];
                                if r == 0.0 {
                                    continue;
                                }
                                let gu: f64 = (0..3).map(|f| ch.metric[d][f] * uc[f]).sum();
                                s += uc[a] * vc[b] * vc[c] * r * gu;
                            }
                        }
                    }
                }
                s
            }
            (None, ModelKind::Frame(f)) => {
                let g = &self.conn.gamma;
                let c = f.structure();
                // R(E_i, E_j)E_l = Σ_n [Γ^m_jl Γ^n_im - Γ^m_il Γ^n_jm - c^m_ij Γ^n_ml] E_n
                let mut s = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        for l in 0..3 {
                            let coef = u[i] * v[j] * v[l];
                            if coef == 0.0 {
                                continue;
                            }
                            for n in 0..3 {
                                let mut r = 0.0;
                                for m in 0..3 {
                                    r += g[m][j][l] * g[n][i][m] - g[m][i][l] * g[n][j][m] - c[m][i][j] * g[n][m][l];
                                }
                                s += coef * r * u[n];
                            }
                        }
                    }
                }
                s
            }
            _ => unreachable!("catmap has no point geometry"),
        }
    }

    /// α-sectional curvature from the Riemann tensor.
    pub fn k_tensor(&self, angle: f64) -> f64 {
        let e = unit(angle);
        self.sectional_frame(&[0.0, e[0], e[1]], &[1.0, 0.0, 0.0])
    }

    /// Integrates the α-Jacobi field through the unit e at `angle`.
    pub fn jacobi_probe(&self, angle: f64) -> Result<JacobiProbe, GeometryError> {
        let h = JACOBI_SEGMENT;
        let times = [-h, -0.5 * h, 0.5 * h, h];
        let mut q = [0.0; 4];
        let mut lg = [0.0; 4];
        match &self.model.kind {
            ModelKind::Frame(f) => {
                let gen = f.xi_generator();
                let rhs = |_: f64, a: &[f64]| {
                    let v = gen.apply([a[0], a[1]]);
                    vec![v[0], v[1]]
                };
                let opts = OdeOptions::new(1e-13, h / 8.0);
                let e = unit(angle);
                for (n, &t) in times.iter().enumerate() {
                    let a = ode::advance(rhs, &e, t, &opts)?;
                    let norm2 = a[0] * a[0] + a[1] * a[1];
                    q[n] = self.conn.expansion([a[0], a[1]]) / norm2;
                    lg[n] = norm2.ln();
                }
            }
            ModelKind::Chart(c) => {
                let ch = self.chart.as_ref().expect("chart data");
                let e0 = unit(angle);
                let v0 = la::add(&la::scale(&ch.frame[1], e0[0]), &la::scale(&ch.frame[2], e0[1]));
                let mut y0 = self.point.to_vec();
                y0.extend_from_slice(&v0);
                let failure = std::cell::Cell::new(None);
                let rhs = |_: f64, y: &[f64]| -> Vec<f64> {
                    let p = [y[0], y[1], y[2]];
                    let v = [y[3], y[4], y[5]];
                    match (c.reeb(&p), directional_reeb(c, &p, &v)) {
                        (Ok(x), Ok(dx)) => vec![x[0], x[1], x[2], dx[0], dx[1], dx[2]],
                        (Err(e), _) | (_, Err(e)) => {
                            failure.set(Some(e));
                            vec![f64::NAN; 6]
                        }
                    }
                };
                let opts = OdeOptions::new(1e-12, h / 4.0);
                for (n, &t) in times.iter().enumerate() {
                    let y = ode::advance(rhs, &y0, t, &opts);
                    if let Some(e) = failure.take() {
                        return Err(e.into());
                    }
                    let y = y?;
                    let p = [y[0], y[1], y[2]];
                    let v = [y[3], y[4], y[5]];
                    let (qq, gvv) = chart_expansion(c, &p, &v)?;
                    q[n] = qq;
                    lg[n] = gvv.ln();
                }
            }
            ModelKind::Catmap(_) => unreachable!("catmap has no point geometry"),
        }
        let rich = |f: &[f64; 4]| {
            let coarse = (f[3] - f[0]) / (2.0 * h);
            let fine = (f[2] - f[1]) / h;
            (4.0 * fine - coarse) / 3.0
        };
        Ok(JacobiProbe { algebraic: self.conn.q(angle), dynamical: 0.5 * rich(&lg), rate_derivative: rich(&q) })
    }

    /// α-sectional curvature from the decomposition (needs a Jacobi probe).
    pub fn k_decomposition(&self, angle: f64) -> Result<f64, GeometryError> {
        let probe = self.jacobi_probe(angle)?;
        let (p, q) = (self.conn.p(angle), self.conn.q(angle));
        Ok(p * p - q * q - probe.rate_derivative)
    }

    pub fn ricci_sum(&self) -> f64 {
        self.k_tensor(0.0) + self.k_tensor(0.5 * PI)
    }

    pub fn ricci_det(&self) -> f64 {
        let ii = self.conn.second_fundamental_form();
        2.0 * (ii[0][0] * ii[1][1] - ii[0][1] * ii[1][0])
    }

    /// `θ′²/2 - 2q² - 2(p - θ′/2)²` at the unit e at `angle`.
    pub fn ricci_theta(&self, angle: f64) -> f64 {
        let t = self.theta_prime();
        let (p, q) = (self.conn.p(angle), self.conn.q(angle));
        0.5 * t * t - 2.0 * q * q - 2.0 * (p - 0.5 * t).powi(2)
    }

    pub fn mean_curvature(&self) -> f64 {
        let ii = self.conn.second_fundamental_form();
        ii[0][0] + ii[1][1]
    }

    pub fn gauss_curvature(&self) -> f64 {
        let ii = self.conn.second_fundamental_form();
        ii[0][0] * ii[1][1] - ii[0][1] * ii[1][0]
    }
}

/// `(d/ds) X(p + s v)` at 0.
fn directional_reeb(c: &ChartModel, p: &Vec3, v: &Vec3) -> Result<Vec3, ModelError> {
    let nv = la::norm(v);
    if nv == 0.0 {
        return Ok([0.0; 3]);
    }
    let dir = la::scale(v, 1.0 / nv);
    let mut err = None;
    let d = fd::derivative(
        |s| match c.reeb(&la::axpy(p, s, &dir)) {
            Ok(x) => x,
            Err(e) => {
                err = Some(e);
                [f64::NAN; 3]
            }
        },
        CHART_FD_STEP,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(la::scale(&d, nv)),
    }
}

/// `(g(v, ∇_v X)/g(v, v), g(v, v))` in chart coordinates.
fn chart_expansion(c: &ChartModel, p: &Vec3, v: &Vec3) -> Result<(f64, f64), ModelError> {
    let x = c.reeb(p)?;
    let dx = directional_reeb(c, p, v)?;
    let chr = c.christoffel(p);
    let nabla: Vec3 = std::array::from_fn(|k| {
        let mut s = dx[k];
        for a in 0..3 {
            for b in 0..3 {
                s += chr[k][a][b] * v[a] * x[b];
            }
        }
        s
    });
    let g = c.metric(p);
    let gvv = la::form(&g, v, v);
    Ok((la::form(&g, v, &nabla) / gvv, gvv))
}

/// Pointwise `‖ℒ_X g‖²` from coordinates: `L = X·∂g + g ∂X + (∂X)ᵀ g`,
/// norm `tr((g⁻¹L)²)`.
pub fn chart_lie_norm2(c: &ChartModel, p: &Vec3) -> Result<f64, ModelError> {
    let x = c.reeb(p)?;
    let g = c.metric(p);
    let dg = c.metric_jacobian(p);
    let mut dx = [[0.0; 3]; 3]; // dx[a][c] = ∂_a X^c
    for a in 0..3 {
        let mut e = [0.0; 3];
        e[a] = 1.0;
        dx[a] = directional_reeb(c, p, &e)?;
    }
    let l = nalgebra::Matrix3::from_fn(|a, b| {
        let mut s = 0.0;
        for cc in 0..3 {
            s += x[cc] * dg[cc][a][b] + g[cc][b] * dx[a][cc] + g[a][cc] * dx[b][cc];
        }
        s
    });
    let ginv = la::to_na(&g).try_inverse().expect("positive definite metric");
    let m = ginv * l;
    Ok((m * m).trace())
}

/// Quantities asserted at one point.
pub fn alpha_sectional(model: &Model, p: &ModelPoint, angle: f64) -> Result<AlphaSectional, GeometryError> {
    let pg = PointGeometry::new(model, p)?;
    let tensor = pg.k_tensor(angle);
    let decomposition = pg.k_decomposition(angle)?;
    let tol = pg.oracle_tol();
    if (tensor - decomposition).abs() > tol {
        return Err(GeometryError::OracleDisagreement {
            quantity: format!("k(e, X) at angle {angle}"),
            a: tensor,
            b: decomposition,
            tol,
        });
    }
    Ok(AlphaSectional { angle, tensor, decomposition })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSectional {
    pub angle: f64,
    pub tensor: f64,
    pub decomposition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicciRoutes {
    /// `k(e, X) + k(Je, X)`.
    pub sectional_sum: f64,
    /// `2·det II`.
    pub twice_det: f64,
    /// Mean of the θ′-formula over sampled e.
    pub theta_formula: f64,
    /// Spread of the θ′-formula over sampled e.
    pub theta_spread: f64,
}

/// Ricci(X) along three routes; fails if they disagree.
pub fn ricci_reeb(model: &Model, p: &ModelPoint) -> Result<RicciRoutes, GeometryError> {
    let pg = PointGeometry::new(model, p)?;
    ricci_routes(&pg)
}

fn ricci_routes(pg: &PointGeometry<'_>) -> Result<RicciRoutes, GeometryError> {
    let vals: Vec<f64> = (0..16).map(|k| pg.ricci_theta(k as f64 * PI / 16.0)).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let r = RicciRoutes { sectional_sum: pg.ricci_sum(), twice_det: pg.ricci_det(), theta_formula: mean, theta_spread: spread };
    let tol = pg.identity_tol();
    for (name, a, b) in [
        ("Ricci(X): sectional sum vs 2 det II", r.sectional_sum, r.twice_det),
        ("Ricci(X): θ′-formula vs 2 det II", r.theta_formula, r.twice_det),
    ] {
        if (a - b).abs() > tol {
            return Err(GeometryError::OracleDisagreement { quantity: name.into(), a, b, tol });
        }
    }
    if spread > tol {
        return Err(GeometryError::OracleDisagreement {
            quantity: "Ricci(X): θ′-formula depends on e".into(),
            a: spread,
            b: 0.0,
            tol,
        });
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieReport {
    pub norm2: f64,
    /// Every direction is a zero-direction (ℒ_X g = 0 at the point).
    pub degenerate: bool,
    /// Angles in `[0, π)` of the two zero-directions of `g(e, ∇_e X)`.
    pub zero_directions: Option<[f64; 2]>,
    /// Number of zero-directions found in `[0, π)` by scanning.
    pub zero_count: usize,
    pub orthogonal: bool,
    /// Sign alternates across the four quadrants at every sampled angle.
    pub alternation: bool,
}

/// ‖ℒ_X g‖² and the zero-directions of `e ↦ g(e, ∇_e X)`.
pub fn lie_derivative_metric(model: &Model, p: &ModelPoint) -> Result<LieReport, GeometryError> {
    let conn = connection(model, p)?;
    Ok(lie_report(&conn, 64))
}

pub fn lie_report(conn: &FrameConnection, samples: usize) -> LieReport {
    let norm2 = conn.lie_norm2();
    if norm2 <= LIE_NORM_ZERO {
        return LieReport { norm2, degenerate: true, zero_directions: None, zero_count: 0, orthogonal: true, alternation: true };
    }
    // q has period π; scan [0, π) for sign changes and bisect.
    let n = samples;
    let angles: Vec<f64> = (0..n).map(|k| k as f64 * PI / n as f64).collect();
    let vals: Vec<f64> = angles.iter().map(|&a| conn.q(a)).collect();
    let mut zeros = Vec::new();
    for k in 0..n {
        let (a0, a1) = (angles[k], if k + 1 < n { angles[k + 1] } else { PI });
        let (f0, f1) = (vals[k], vals[(k + 1) % n]);
        if f0 == 0.0 {
            zeros.push(a0);
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi) = (a0, a1);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if (conn.q(mid) > 0.0) == (f0 > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
    }
    let zero_count = zeros.len();
    let zero_directions = (zero_count == 2).then(|| [zeros[0], zeros[1]]);
    let orthogonal = zero_directions.map(|z| ((z[1] - z[0]) - 0.5 * PI).abs() < 1e-6).unwrap_or(false);
    // Four-quadrant alternation over the whole circle.
    let alternation = match zero_directions {
        Some([z0, _]) => {
            let mid_sign = conn.q(z0 + 0.25 * PI).signum();
            (0..64).all(|k| {
                let a = k as f64 * 2.0 * PI / 64.0;
                let v = conn.q(a);
                let rel = (a - z0).rem_euclid(2.0 * PI);
                let quadrant = (rel / (0.5 * PI)).floor() as i64;
                let expect = if quadrant % 2 == 0 { mid_sign } else { -mid_sign };
                v.abs() < 1e-12 || v.signum() == expect
            })
        }
        None => false,
    };
    LieReport { norm2, degenerate: false, zero_directions, zero_count, orthogonal, alternation }
}

/// Branch of `g(Je_i, ∇_{e_i} X) = θ′/2 ± √(θ′²/4 - Ricci/2)` at a zero-direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchValue {
    pub angle: f64,
    pub value: f64,
    /// +1 or -1.
    pub branch: i8,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub point: ModelPoint,
    pub theta_prime: f64,
    pub angles: Vec<f64>,
    pub k: Vec<f64>,
    pub k_jacobi: Option<Vec<f64>>,
    pub ricci: f64,
    pub ricci_routes: RicciRoutes,
    pub gauss: f64,
    pub mean: f64,
    pub second_fundamental_form: [[f64; 2]; 2],
    /// `|II₁₂ - II₂₁|/2`, equal to θ′/2 for a contact plane field.
    pub antisymmetric_part: f64,
    pub lie: LieReport,
    pub branches: Vec<BranchValue>,
    pub neg_bound: f64,
    pub margin: f64,
}

/// Right-hand side `[θ′/2 - √(θ′²/4 - Ricci/2)]²`, radicand clamped near 0.
pub fn neg_bound_rhs(theta: f64, ricci: f64) -> f64 {
    let rad = 0.25 * theta * theta - 0.5 * ricci;
    let rad = if rad < 0.0 && rad > -RADICAND_CLAMP { 0.0 } else { rad.max(0.0) };
    (0.5 * theta - rad.sqrt()).powi(2)
}

/// Full report at one point. With `cross_check`, every sampled angle is
/// also evaluated along the Jacobi route and the two must agree.
pub fn curvature_report(
    model: &Model,
    p: &ModelPoint,
    angles: usize,
    cross_check: bool,
) -> Result<CurvatureReport, GeometryError> {
    let pg = PointGeometry::new(model, p)?;
    let theta = pg.theta_prime();
    let grid: Vec<f64> = (0..angles).map(|k| k as f64 * 2.0 * PI / angles as f64).collect();
    let k: Vec<f64> = grid.iter().map(|&a| pg.k_tensor(a)).collect();
    let k_jacobi = if cross_check {
        let tol = pg.oracle_tol();
        let mut out = Vec::with_capacity(grid.len());
        for (a, kt) in grid.iter().zip(&k) {
            let kd = pg.k_decomposition(*a)?;
            if (kd - kt).abs() > tol {
                return Err(GeometryError::OracleDisagreement {
                    quantity: format!("k(e, X) at angle {a}"),
                    a: *kt,
                    b: kd,
                    tol,
                });
            }
            out.push(kd);
        }
        Some(out)
    } else {
        None
    };
    let routes = ricci_routes(&pg)?;
    let ricci = routes.twice_det;
    let ii = pg.conn.second_fundamental_form();
    let lie = lie_report(&pg.conn, 64);
    let rad = (0.25 * theta * theta - 0.5 * ricci).max(0.0).sqrt();
    let branches = lie
        .zero_directions
        .map(|z| {
            z.iter()
                .map(|&a| {
                    let v = pg.conn.p(a);
                    let (rp, rm) = ((v - 0.5 * theta - rad).abs(), (v - 0.5 * theta + rad).abs());
                    BranchValue { angle: a, value: v, branch: if rp <= rm { 1 } else { -1 }, residual: rp.min(rm) }
                })
                .collect()
        })
        .unwrap_or_default();
    let bound = neg_bound_rhs(theta, ricci);
    let kmax = k.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(CurvatureReport {
        point: *p,
        theta_prime: theta,
        angles: grid,
        k,
        k_jacobi,
        ricci,
        ricci_routes: routes,
        gauss: pg.gauss_curvature(),
        mean: pg.mean_curvature(),
        second_fundamental_form: ii,
        antisymmetric_part: 0.5 * (ii[0][1] - ii[1][0]).abs(),
        lie,
        branches,
        neg_bound: bound,
        margin: kmax - bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegBoundReport {
    pub holds: bool,
    /// Max over points and angles of `k(e, X) - bound`.
    pub margin: f64,
    pub worst_point: ModelPoint,
    pub worst_angle: f64,
    pub points: usize,
    pub angles: usize,
}

/// Checks `k(e, X) < [θ′/2 - √(θ′²/4 - Ricci/2)]²` at every sample.
pub fn neg_bound_check(model: &Model, points: &[ModelPoint], angles: usize) -> Result<NegBoundReport, GeometryError> {
    let mut worst = (f64::NEG_INFINITY, [0.0; 3], 0.0);
    for p in points {
        let pg = PointGeometry::new(model, p)?;
        let bound = neg_bound_rhs(pg.theta_prime(), pg.ricci_det());
        for k in 0..angles {
            let a = k as f64 * 2.0 * PI / angles as f64;
            let m = pg.k_tensor(a) - bound;
            if m > worst.0 {
                worst = (m, *p, a);
            }
        }
    }
    Ok(NegBoundReport {
        holds: worst.0 < -NEG_BOUND_STRICTNESS,
        margin: worst.0,
        worst_point: worst.1,
        worst_angle: worst.2,
        points: points.len(),
        angles,
    })
}

/// Algebraic and dynamical expansion rates at the unit e at `angle`.
pub fn expansion_rate(model: &Model, p: &ModelPoint, angle: f64) -> Result<(f64, f64), GeometryError> {
    let pg = PointGeometry::new(model, p)?;
    let probe = pg.jacobi_probe(angle)?;
    if (probe.algebraic - probe.dynamical).abs() > EXPANSION_RATE_TOL {
        return Err(GeometryError::OracleDisagreement {
            quantity: format!("expansion rate at angle {angle}"),
            a: probe.algebraic,
            b: probe.dynamical,
            tol: EXPANSION_RATE_TOL,
        });
    }
    Ok((probe.algebraic, probe.dynamical))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `∫ ‖ℒ_X g‖² dVol`, absent for unbounded domains.
    pub energy: Option<f64>,
    pub density_min: f64,
    pub density_max: f64,
    pub volume: Option<f64>,
    pub resolution: usize,
}

/// Chern–Hamilton energy by midpoint quadrature.
pub fn chern_hamilton_energy(model: &Model, resolution: usize) -> Result<EnergyReport, GeometryError> {
    match &model.kind {
        ModelKind::Frame(f) => {
            let density = FrameConnection::from_frame_model(f).lie_norm2();
            match f.kind {
                crate::models::FrameKind::Su2 => {
                    let volume = 2.0 * PI * PI * (2.0 / f.theta_prime).powi(3);
                    Ok(EnergyReport {
                        energy: Some(density * volume),
                        density_min: density,
                        density_max: density,
                        volume: Some(volume),
                        resolution: 1,
                    })
                }
                _ => Err(GeometryError::UnboundedDomain { density }),
            }
        }
        ModelKind::Chart(c) => {
            let all_periodic = c.periodic.iter().all(|&b| b);
            if !all_periodic {
                let p = c.interior_points(1)[0];
                return Err(GeometryError::UnboundedDomain { density: chart_lie_norm2(c, &p)? });
            }
            use rayon::prelude::*;
            let cell: f64 = (0..3).map(|i| (c.hi[i] - c.lo[i]) / resolution as f64).product();
            let pts = c.grid(resolution);
            let rows: Vec<Result<(f64, f64), ModelError>> = pts
                .par_iter()
                .map(|p| {
                    let d = chart_lie_norm2(c, p)?;
                    let vol = la::to_na(&c.metric(p)).determinant().sqrt();
                    Ok((d, vol))
                })
                .collect();
            let mut energy = 0.0;
            let mut volume = 0.0;
            let (mut dmin, mut dmax) = (f64::INFINITY, f64::NEG_INFINITY);
            for r in rows {
                let (d, v) = r?;
                energy += d * v * cell;
                volume += v * cell;
                dmin = dmin.min(d);
                dmax = dmax.max(d);
            }
            Ok(EnergyReport { energy: Some(energy), density_min: dmin, density_max: dmax, volume: Some(volume), resolution })
        }
        ModelKind::Catmap(_) => Err(ModelError::NotApplicable(model.name.clone()).into()),
    }
}
