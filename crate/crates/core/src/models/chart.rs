//! Models given by explicit coordinate formulas on a box in ℝ³.

use std::f64::consts::PI;

use nalgebra::{Matrix4x3, Vector4};
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::fd;
use crate::la::{self, Mat3, Vec3};
use crate::tolerances::{CHART_FD_STEP, REEB_CONDITION_MAX, REEB_RESIDUAL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "snake_case")]
pub enum ChartKind {
    /// `α = cos(nz) dx - sin(nz) dy` on the 3-torus `[0, 2π)³`.
    Torus { n: f64 },
    /// Standard primitive on `|z₁|²/a² + |z₂|²/b² = 1`, chart `(θ₁, x, y)`
    /// around the core circle `z₂ = 0`.
    Ellipsoid { a: f64, b: f64 },
}

/// Christoffel symbols `gamma[c][a][b] = Γ^c_ab`.
pub type Christoffel = [[[f64; 3]; 3]; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct ChartModel {
    pub kind: ChartKind,
    pub theta_prime: f64,
    pub h: f64,
    pub lo: Vec3,
    pub hi: Vec3,
    pub periodic: [bool; 3],
}

impl ChartModel {
    pub fn torus(n: f64, theta_prime: f64) -> Self {
        ChartModel {
            kind: ChartKind::Torus { n },
            theta_prime,
            h: CHART_FD_STEP,
            lo: [0.0; 3],
            hi: [2.0 * PI; 3],
            periodic: [true; 3],
        }
    }

    pub fn ellipsoid(a: f64, b: f64, theta_prime: f64) -> Self {
        let r = 0.7 * b;
        ChartModel {
            kind: ChartKind::Ellipsoid { a, b },
            theta_prime,
            h: CHART_FD_STEP,
            lo: [0.0, -r, -r],
            hi: [2.0 * PI, r, r],
            periodic: [true, false, false],
        }
    }

    pub fn wrap(&self, p: &Vec3) -> Vec3 {
        let mut q = *p;
        for i in 0..3 {
            if self.periodic[i] {
                let w = self.hi[i] - self.lo[i];
                q[i] = self.lo[i] + (q[i] - self.lo[i]).rem_euclid(w);
            }
        }
        q
    }

    /// Shortest coordinate displacement from `p` to `q`, respecting periods.
    pub fn displacement(&self, p: &Vec3, q: &Vec3) -> Vec3 {
        let mut d = la::sub(q, p);
        for i in 0..3 {
            if self.periodic[i] {
                let w = self.hi[i] - self.lo[i];
                d[i] -= w * (d[i] / w).round();
            }
        }
        d
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| self.periodic[i] || (p[i] >= self.lo[i] && p[i] <= self.hi[i])) && p.iter().all(|x| x.is_finite())
    }

    pub fn alpha(&self, p: &Vec3) -> Vec3 {
        match self.kind {
            ChartKind::Torus { n } => [(n * p[2]).cos(), -(n * p[2]).sin(), 0.0],
            ChartKind::Ellipsoid { a, b } => {
                let r1sq = a * a * (1.0 - (p[1] * p[1] + p[2] * p[2]) / (b * b));
                [0.5 * r1sq, -0.5 * p[2], 0.5 * p[1]]
            }
        }
    }

    /// Closed-form curl of α (the vector proxy of dα).
    pub fn curl(&self, p: &Vec3) -> Vec3 {
        match self.kind {
            ChartKind::Torus { n } => la::scale(&self.alpha(p), n),
            ChartKind::Ellipsoid { a, b } => {
                let k = a * a / (b * b);
                [1.0, -k * p[2], k * p[1]]
            }
        }
    }

    /// Partial derivatives `∂_i α_j` by Richardson-extrapolated differences.
    pub fn alpha_jacobian(&self, p: &Vec3) -> Mat3 {
        std::array::from_fn(|i| {
            fd::derivative(
                |s| {
                    let mut q = *p;
                    q[i] += s;
                    self.alpha(&q)
                },
                self.h,
            )
        })
    }

    /// `D[i][j] = ∂_i α_j - ∂_j α_i`, so that `dα(u, v) = uᵀ D v`.
    pub fn d_alpha(&self, p: &Vec3) -> Mat3 {
        let j = self.alpha_jacobian(p);
        std::array::from_fn(|a| std::array::from_fn(|b| j[a][b] - j[b][a]))
    }

    /// `α ∧ dα` evaluated on the coordinate frame, from differenced dα.
    pub fn contact_density(&self, p: &Vec3) -> f64 {
        let d = self.d_alpha(p);
        la::dot(&self.alpha(p), &[d[1][2], d[2][0], d[0][1]])
    }

    /// Compatible metric: `α⊗α` on the Reeb line, a multiple of the
    /// Euclidean metric on ξ, with the multiple fixed by `dα(e, Je) = θ′`.
    pub fn metric(&self, p: &Vec3) -> Mat3 {
        let al = self.alpha(p);
        let curl = self.curl(p);
        let ac = la::dot(&al, &curl);
        let x = la::scale(&curl, 1.0 / ac);
        let c = ac / (self.theta_prime * la::norm(&al));
        let xx = la::dot(&x, &x);
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let delta = if i == j { 1.0 } else { 0.0 };
                al[i] * al[j] + c * (delta - al[i] * x[j] - al[j] * x[i] + al[i] * al[j] * xx)
            })
        })
    }

    pub fn metric_jacobian(&self, p: &Vec3) -> [Mat3; 3] {
        std::array::from_fn(|a| {
            let flat = fd::derivative(
                |s| {
                    let mut q = *p;
                    q[a] += s;
                    let g = self.metric(&q);
                    std::array::from_fn::<f64, 9, _>(|k| g[k / 3][k % 3])
                },
                self.h,
            );
            std::array::from_fn(|i| std::array::from_fn(|j| flat[3 * i + j]))
        })
    }

    pub fn christoffel(&self, p: &Vec3) -> Christoffel {
        let g = self.metric(p);
        let dg = self.metric_jacobian(p);
        let ginv = la::to_na(&g).try_inverse().expect("compatible metric is positive definite");
        std::array::from_fn(|c| {
            std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    0.5 * (0..3).map(|d| ginv[(c, d)] * (dg[a][d][b] + dg[b][d][a] - dg[d][a][b])).sum::<f64>()
                })
            })
        })
    }

    /// Solves `dα(X, ∂_j) = 0`, `α(X) = 1` in the least-squares sense.
    pub fn reeb(&self, p: &Vec3) -> Result<Vec3, ModelError> {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(ModelError::InvalidParams(format!("non-finite point {p:?}")));
        }
        let d = self.d_alpha(p);
        let al = self.alpha(p);
        let a = Matrix4x3::from_fn(|r, c| if r < 3 { d[c][r] } else { al[c] });
        let b = Vector4::new(0.0, 0.0, 0.0, 1.0);
        let sv = a.singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition > REEB_CONDITION_MAX {
            return Err(ModelError::SingularSystem { condition });
        }
        // Householder least squares; more accurate here than the SVD solve.
        let qr = a.qr();
        let x = qr
            .r()
            .solve_upper_triangular(&(qr.q().transpose() * b))
            .ok_or(ModelError::SingularSystem { condition })?;
        let residual = (a * x - b).norm();
        if residual > REEB_RESIDUAL_TOL {
            return Err(ModelError::ReebResidual { residual });
        }
        Ok([x[0], x[1], x[2]])
    }

    /// Orthonormal frame `(X, e, Je)` at p; `axis` picks the coordinate
    /// vector projected onto ξ to seed e (None: the best conditioned).
    pub fn frame_with(&self, p: &Vec3, axis: Option<usize>) -> Result<([Vec3; 3], usize), ModelError> {
        let x = self.reeb(p)?;
        let g = self.metric(p);
        let al = self.alpha(p);
        let project = |w: Vec3| la::axpy(&w, -la::dot(&al, &w), &x);
        let unit = |k: usize| -> Vec3 { std::array::from_fn(|i| if i == k { 1.0 } else { 0.0 }) };
        let gnorm = |v: &Vec3| la::form(&g, v, v).sqrt();
        let axis = axis.unwrap_or_else(|| {
            (0..3).max_by(|&a, &b| gnorm(&project(unit(a))).total_cmp(&gnorm(&project(unit(b))))).expect("three axes")
        });
        let w = project(unit(axis));
        let nw = gnorm(&w);
        if nw < 1e-10 {
            return Err(ModelError::DegenerateFrame);
        }
        let e = la::scale(&w, 1.0 / nw);
        // Next axis, orthogonalized against e inside ξ.
        let other = (axis + 1) % 3;
        let mut w2 = project(unit(other));
        w2 = la::axpy(&w2, -la::form(&g, &e, &w2), &e);
        let mut n2 = gnorm(&w2);
        if n2 < 1e-10 {
            w2 = project(unit((axis + 2) % 3));
            w2 = la::axpy(&w2, -la::form(&g, &e, &w2), &e);
            n2 = gnorm(&w2);
            if n2 < 1e-10 {
                return Err(ModelError::DegenerateFrame);
            }
        }
        let mut je = la::scale(&w2, 1.0 / n2);
        if la::form(&self.d_alpha(p), &e, &je) < 0.0 {
            je = la::scale(&je, -1.0);
        }
        Ok(([x, e, je], axis))
    }

    pub fn frame(&self, p: &Vec3) -> Result<[Vec3; 3], ModelError> {
        Ok(self.frame_with(p, None)?.0)
    }

    /// Interior points kept a finite-difference stencil away from the box walls.
    pub fn interior_points(&self, count: usize) -> Vec<Vec3> {
        (0..count)
            .map(|k| {
                std::array::from_fn(|i| {
                    // low-discrepancy additive recurrence
                    let frac = ((k as f64 + 0.5) * [0.7548776662, 0.5698402910, 0.3532643] [i]).fract();
                    if self.periodic[i] {
                        self.lo[i] + frac * (self.hi[i] - self.lo[i])
                    } else {
                        let m = 0.15 * (self.hi[i] - self.lo[i]);
                        self.lo[i] + m + frac * (self.hi[i] - self.lo[i] - 2.0 * m)
                    }
                })
            })
            .collect()
    }

    /// Uniform grid with `n` points per axis (cell midpoints).
    pub fn grid(&self, n: usize) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(n * n * n);
        let axis = |i: usize, k: usize| self.lo[i] + (k as f64 + 0.5) / n as f64 * (self.hi[i] - self.lo[i]);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    out.push([axis(0, a), axis(1, b), axis(2, c)]);
                }
            }
        }
        out
    }
}
