//! Models given by a global orthonormal frame (X, e, f) with constant
//! structure coefficients `[E_i, E_j] = Σ c^k_ij E_k`.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::la::Vec3;
use crate::sp2core::Mat2;
use crate::tolerances::JACOBI_TOL;

/// `c[k][i][j]` is the E_k component of `[E_i, E_j]`.
pub type Structure = [[[f64; 3]; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Heisenberg,
    Su2,
    Sl2,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameModel {
    pub kind: FrameKind,
    /// Declared dα(e, f); equals `-c^X_ef`.
    pub theta_prime: f64,
    /// sl2 only: `[X, e] = rate·f`, `[X, f] = rate·e`.
    pub rate: f64,
    /// sl2 only: length of the closed geodesic generating the deck group.
    pub orbit_length: f64,
    c: Structure,
}

impl FrameModel {
    /// `[e, f] = -θ′X`, all other brackets zero.
    pub fn heisenberg(theta_prime: f64) -> Self {
        let mut c = [[[0.0; 3]; 3]; 3];
        set(&mut c, 1, 2, [-theta_prime, 0.0, 0.0]);
        FrameModel { kind: FrameKind::Heisenberg, theta_prime, rate: 0.0, orbit_length: 0.0, c }
    }

    /// Left-invariant frame on S³: `[E_i, E_{i+1}] = -θ′ E_{i+2}` cyclically.
    pub fn su2(theta_prime: f64) -> Self {
        let mut c = [[[0.0; 3]; 3]; 3];
        set(&mut c, 1, 2, [-theta_prime, 0.0, 0.0]);
        set(&mut c, 2, 0, [0.0, -theta_prime, 0.0]);
        set(&mut c, 0, 1, [0.0, 0.0, -theta_prime]);
        FrameModel { kind: FrameKind::Su2, theta_prime, rate: 0.0, orbit_length: 0.0, c }
    }

    /// `[X, e] = r f`, `[X, f] = r e`, `[e, f] = -θ′X`. With `h± = (e ± f)/√2`
    /// this is `[X, h₊] = r h₊`, `[X, h₋] = -r h₋`, `[h₊, h₋] = θ′X`.
    pub fn sl2(theta_prime: f64, rate: f64, orbit_length: f64) -> Self {
        let mut c = [[[0.0; 3]; 3]; 3];
        set(&mut c, 0, 1, [0.0, 0.0, rate]);
        set(&mut c, 0, 2, [0.0, rate, 0.0]);
        set(&mut c, 1, 2, [-theta_prime, 0.0, 0.0]);
        FrameModel { kind: FrameKind::Sl2, theta_prime, rate, orbit_length, c }
    }

    /// Arbitrary constants; antisymmetry and the Jacobi identity are checked.
    pub fn from_structure(c: Structure) -> Result<Self, ModelError> {
        let m = FrameModel { kind: FrameKind::Custom, theta_prime: -c[0][1][2], rate: 0.0, orbit_length: 0.0, c };
        let anti = m.antisymmetry_defect();
        if anti > JACOBI_TOL {
            return Err(ModelError::InvalidParams(format!("structure constants not antisymmetric ({anti:e})")));
        }
        let jac = m.jacobi_defect();
        if jac > JACOBI_TOL {
            return Err(ModelError::InvalidParams(format!("Jacobi identity fails by {jac:e}")));
        }
        Ok(m)
    }

    pub fn structure(&self) -> &Structure {
        &self.c
    }

    pub fn c(&self, k: usize, i: usize, j: usize) -> f64 {
        self.c[k][i][j]
    }

    pub fn bracket(&self, i: usize, j: usize) -> Vec3 {
        [self.c[0][i][j], self.c[1][i][j], self.c[2][i][j]]
    }

    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max((self.c[k][i][j] + self.c[k][j][i]).abs());
                }
            }
        }
        worst
    }

    /// Largest component of `[[E_i,E_j],E_l] + cyclic`.
    pub fn jacobi_defect(&self) -> f64 {
        let nested = |i: usize, j: usize, l: usize, n: usize| -> f64 {
            (0..3).map(|m| self.c[m][i][j] * self.c[n][m][l]).sum()
        };
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    for n in 0..3 {
                        let s = nested(i, j, l, n) + nested(j, l, i, n) + nested(l, i, j, n);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// dα(e, f) from the constants: `-α([e, f])`.
    pub fn structural_theta(&self) -> f64 {
        -self.c[0][1][2]
    }

    /// `max(|dα(X, e)|, |dα(X, f)|)`.
    pub fn reeb_defect(&self) -> f64 {
        self.c[0][0][1].abs().max(self.c[0][0][2].abs())
    }

    /// Generator `G` of the linearized flow on ξ in the frame `(e, f)`:
    /// α-Jacobi components obey `a' = G a`, `G = -c^k_{Xj}`.
    pub fn xi_generator(&self) -> Mat2 {
        Mat2::new(-self.c[1][0][1], -self.c[1][0][2], -self.c[2][0][1], -self.c[2][0][2])
    }
}

fn set(c: &mut Structure, i: usize, j: usize, v: Vec3) {
    for k in 0..3 {
        c[k][i][j] = v[k];
        c[k][j][i] = -v[k];
    }
}
