//! Suspension of the toral automorphism `±[[2,1],[1,1]]`, a non-contact
//! Anosov control.
//!
//! Coordinates `(x, y, t)` on the cover `ℝ²×ℝ`; the deck map is
//! `(v, t) ↦ (A v, t - 1)` together with integer translations of v, and
//! the flow is `∂t`. The ξ-frame at height t is `exp(-tP)` (composed with
//! `R(-πt)` for the negative variant), which matches itself across the deck
//! map.

use crate::la::Vec3;
use crate::sp2core::{Mat2, Sp2Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatmapModel {
    /// +1 for `[[2,1],[1,1]]`, -1 for its negative.
    pub sign: f64,
}

impl CatmapModel {
    pub fn new(sign: f64) -> Self {
        CatmapModel { sign }
    }

    pub fn base_matrix() -> Mat2 {
        Mat2::new(2.0, 1.0, 1.0, 1.0)
    }

    pub fn matrix(&self) -> Mat2 {
        Self::base_matrix().scale(self.sign)
    }

    /// Larger eigenvalue `(3 + √5)/2` of the base matrix.
    pub fn lambda() -> f64 {
        (3.0 + 5f64.sqrt()) / 2.0
    }

    pub fn mu() -> f64 {
        Self::lambda().ln()
    }

    /// Unit eigenvectors (unstable, stable) of the base matrix.
    pub fn eigenvectors() -> ([f64; 2], [f64; 2]) {
        let su = (5f64.sqrt() - 1.0) / 2.0;
        let ss = -(5f64.sqrt() + 1.0) / 2.0;
        let nu = (1.0 + su * su).sqrt();
        let ns = (1.0 + ss * ss).sqrt();
        ([1.0 / nu, su / nu], [1.0 / ns, ss / ns])
    }

    /// Symmetric logarithm of the base matrix.
    pub fn log_matrix() -> Mat2 {
        let (u, s) = Self::eigenvectors();
        let mu = Self::mu();
        Mat2::new(
            mu * (u[0] * u[0] - s[0] * s[0]),
            mu * (u[0] * u[1] - s[0] * s[1]),
            mu * (u[1] * u[0] - s[1] * s[0]),
            mu * (u[1] * u[1] - s[1] * s[1]),
        )
    }

    /// Columns of the ξ-frame at height t, in (x, y) coordinates.
    pub fn frame(&self, t: f64) -> Sp2Matrix {
        let e = Self::log_matrix().scale(-t).exp_traceless();
        if self.sign < 0.0 {
            e.mul(&Sp2Matrix::rotation(-std::f64::consts::PI * t))
        } else {
            e
        }
    }

    /// Generator of the linearized flow in the ξ-frame at height t.
    pub fn xi_generator(&self, t: f64) -> Mat2 {
        let p = Self::log_matrix();
        if self.sign < 0.0 {
            let r = Sp2Matrix::rotation(std::f64::consts::PI * t);
            Mat2::J0.scale(std::f64::consts::PI).add(&r.mat().mul(&p).mul(r.inverse().mat()))
        } else {
            p
        }
    }

    /// Applies deck maps until `t ∈ [0, 1)` and `x, y ∈ [0, 1)`.
    pub fn reduce(&self, p: &Vec3) -> Vec3 {
        let k = p[2].floor();
        let a = self.matrix();
        let mut v = [p[0], p[1]];
        if k > 0.0 {
            for _ in 0..k as usize {
                v = a.apply(v);
            }
        } else if k < 0.0 {
            let inv = a.adjugate();
            for _ in 0..(-k) as usize {
                v = inv.apply(v);
            }
        }
        [v[0].rem_euclid(1.0), v[1].rem_euclid(1.0), p[2] - k]
    }

    /// Displacement from p to q after identifying q by deck maps.
    pub fn displacement(&self, p: &Vec3, q: &Vec3) -> Vec3 {
        let k = (q[2] - p[2]).round();
        let a = self.matrix();
        let mut v = [q[0], q[1]];
        if k > 0.0 {
            for _ in 0..k as usize {
                v = a.apply(v);
            }
        } else if k < 0.0 {
            let inv = a.adjugate();
            for _ in 0..(-k) as usize {
                v = inv.apply(v);
            }
        }
        let wrap = |d: f64| d - d.round();
        [wrap(v[0] - p[0]), wrap(v[1] - p[1]), q[2] - k - p[2]]
    }
}
