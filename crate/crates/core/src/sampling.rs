//! Seeded random paths and loops for property tests.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::sp2core::{Mat2, Sp2Matrix, SymplecticPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathFamily {
    /// `t ↦ R(ωt)` with random ω.
    Rotation,
    /// Piecewise one-parameter subgroups of conjugated hyperbolic generators.
    Stretch,
    /// Piecewise subgroups of arbitrary traceless generators.
    Mixed,
}

/// A piecewise-exponential path `Φ(t) = exp((t - t_k) X_k) Φ(t_k)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePath {
    /// Breakpoints `0 = t_0 < ... < t_m = 1`.
    pub breaks: Vec<f64>,
    pub generators: Vec<Mat2>,
}

impl PiecewisePath {
    pub fn eval(&self, t: f64) -> Sp2Matrix {
        let mut acc = Sp2Matrix::IDENTITY;
        for (k, x) in self.generators.iter().enumerate() {
            let (a, b) = (self.breaks[k], self.breaks[k + 1]);
            if t <= a {
                break;
            }
            let dt = t.min(b) - a;
            acc = x.scale(dt).exp_traceless().mul(&acc);
        }
        acc
    }

    /// Generator of the piece containing t.
    pub fn generator_at(&self, t: f64) -> Mat2 {
        let k = self.breaks.partition_point(|&b| b <= t).clamp(1, self.generators.len()) - 1;
        self.generators[k]
    }

    pub fn to_path(&self) -> SymplecticPath {
        let size: f64 = self.generators.iter().map(|x| x.op_norm()).fold(0.0, f64::max);
        let n = ((size / 0.01).ceil() as usize).max(64);
        let mut times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        times.extend(self.breaks.iter().copied());
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        times.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let samples = times.iter().map(|&t| (t, if t == 0.0 { Sp2Matrix::IDENTITY } else { self.eval(t) })).collect();
        SymplecticPath::refined(samples).expect("piecewise exponential paths are valid")
    }
}

fn hyperbolic_generator<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let sigma = rng.gen_range(-1.5..1.5);
    let beta: f64 = rng.gen_range(0.0..PI);
    let r = Sp2Matrix::rotation(beta);
    r.mat().mul(&Mat2::diag(sigma, -sigma)).mul(r.inverse().mat())
}

fn mixed_generator<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    match rng.gen_range(0..3) {
        0 => Mat2::J0.scale(rng.gen_range(-2.0 * PI..2.0 * PI)),
        1 => hyperbolic_generator(rng),
        _ => {
            let a = rng.gen_range(-2.0..2.0);
            Mat2::new(a, rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), -a)
        }
    }
}

/// Random piecewise path with a well nondegenerate endpoint.
pub fn random_piecewise<R: Rng + ?Sized>(rng: &mut R, family: PathFamily) -> PiecewisePath {
    loop {
        let pieces = match family {
            PathFamily::Rotation => 1,
            _ => rng.gen_range(1..=3),
        };
        let mut breaks = vec![0.0];
        let mut cuts: Vec<f64> = (1..pieces).map(|_| rng.gen_range(0.1..0.9)).collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        breaks.extend(cuts);
        breaks.push(1.0);
        if breaks.windows(2).any(|w| w[1] - w[0] < 0.05) {
            continue;
        }
        let generators = (0..pieces)
            .map(|_| match family {
                PathFamily::Rotation => Mat2::J0.scale(rng.gen_range(-4.0 * PI..4.0 * PI)),
                PathFamily::Stretch => hyperbolic_generator(rng),
                PathFamily::Mixed => mixed_generator(rng),
            })
            .collect();
        let p = PiecewisePath { breaks, generators };
        if p.eval(1.0).det_minus_identity().abs() > 1e-2 {
            return p;
        }
    }
}

pub fn random_path<R: Rng + ?Sized>(rng: &mut R, family: PathFamily) -> SymplecticPath {
    random_piecewise(rng, family).to_path()
}

/// Loop `t ↦ R(2πkt)·exp(sin²(πt)·Y)` of degree k on `[0, 1]`.
pub fn random_loop<R: Rng + ?Sized>(rng: &mut R, degree: i64) -> SymplecticPath {
    let a = rng.gen_range(-0.6..0.6);
    let y = Mat2::new(a, rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8), -a);
    let n = 64 * (degree.unsigned_abs() as usize + 1);
    let lp = SymplecticPath::from_fn(1.0, n, |t| {
        if t >= 1.0 {
            return Sp2Matrix::IDENTITY;
        }
        let bump = (PI * t).sin().powi(2);
        Sp2Matrix::rotation(2.0 * PI * degree as f64 * t).mul(&y.scale(bump).exp_traceless())
    });
    lp.expect("loops are valid")
}
