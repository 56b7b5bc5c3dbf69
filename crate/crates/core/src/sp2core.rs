//! Calculus of 2×2 real symplectic (= determinant-one) matrices and of
//! sampled paths in Sp(2, ℝ) starting at the identity.
//!
//! Paths are stored as dense samples. Anything that needs the path between
//! two samples uses geodesic interpolation in the Lie algebra: on the
//! interval `[t_i, t_{i+1}]` the path is `Φ_i · exp(s · log(Φ_i⁻¹ Φ_{i+1}))`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerances::{
    DEFAULT_DEGENERACY_THRESHOLD, LOOP_CLOSURE_TOL, PARABOLIC_TRACE_TOL, PATH_DET_TOL,
    PATH_STEP_GUARD, SYMPLECTIC_DET_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Sp2Error {
    #[error("matrix is not symplectic: det = {det}")]
    NonSymplectic { det: f64 },
    #[error("path sample {index} has determinant {det}")]
    SampleNotSymplectic { index: usize, det: f64 },
    #[error("path must start at (0, identity)")]
    BadStart,
    #[error("path needs at least two samples")]
    TooShort,
    #[error("sample times must be finite and strictly increasing (at sample {index})")]
    NonMonotoneTime { index: usize },
    #[error("consecutive samples {index} and {next} differ by {gap} in operator norm")]
    Unresolved { index: usize, next: usize, gap: f64 },
    #[error("loop endpoint deviates from identity by {deviation}")]
    NotALoop { deviation: f64 },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("malformed path file: {0}")]
    Parse(String),
}

/// A general real 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 { a11: 0.0, a12: 0.0, a21: 0.0, a22: 0.0 };
    pub const IDENTITY: Mat2 = Mat2 { a11: 1.0, a12: 0.0, a21: 0.0, a22: 1.0 };
    /// The standard complex structure, counterclockwise quarter turn.
    pub const J0: Mat2 = Mat2 { a11: 0.0, a12: -1.0, a21: 1.0, a22: 0.0 };

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub fn diag(d1: f64, d2: f64) -> Self {
        Mat2::new(d1, 0.0, 0.0, d2)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a11 - o.a11, self.a12 - o.a12, self.a21 - o.a21, self.a22 - o.a22)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(s * self.a11, s * self.a12, s * self.a21, s * self.a22)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a11 * v[0] + self.a12 * v[1], self.a21 * v[0] + self.a22 * v[1]]
    }

    /// Adjugate; equals the inverse when det = 1.
    pub fn adjugate(&self) -> Mat2 {
        Mat2::new(self.a22, -self.a12, -self.a21, self.a11)
    }

    pub fn max_abs(&self) -> f64 {
        self.a11.abs().max(self.a12.abs()).max(self.a21.abs()).max(self.a22.abs())
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        let s = self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22;
        let d = self.det();
        let disc = (s * s - 4.0 * d * d).max(0.0);
        ((s + disc.sqrt()) / 2.0).sqrt()
    }

    /// Smallest singular value.
    pub fn min_singular(&self) -> f64 {
        let big = self.op_norm();
        if big == 0.0 {
            0.0
        } else {
            self.det().abs() / big
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }

    /// Exponential of a traceless matrix (an element of sl(2, ℝ)).
    pub fn exp_traceless(&self) -> Sp2Matrix {
        // X² = -det(X)·Id for traceless X.
        let delta = -self.det();
        let (c, s) = if delta > 1e-300 {
            let r = delta.sqrt();
            (r.cosh(), r.sinh() / r)
        } else if delta < -1e-300 {
            let r = (-delta).sqrt();
            (r.cos(), r.sin() / r)
        } else {
            (1.0, 1.0)
        };
        // Second-order series fallback keeps tiny generators exact enough.
        let (c, s) = if delta.abs() < 1e-8 {
            (1.0 + delta / 2.0 + delta * delta / 24.0, 1.0 + delta / 6.0 + delta * delta / 120.0)
        } else {
            (c, s)
        };
        Sp2Matrix(Mat2::IDENTITY.scale(c).add(&self.scale(s)))
    }
}

/// A real 2×2 matrix of determinant one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Mat2", into = "Mat2")]
pub struct Sp2Matrix(Mat2);

impl TryFrom<Mat2> for Sp2Matrix {
    type Error = Sp2Error;
    fn try_from(m: Mat2) -> Result<Self, Self::Error> {
        Sp2Matrix::new(m)
    }
}

impl From<Sp2Matrix> for Mat2 {
    fn from(m: Sp2Matrix) -> Mat2 {
        m.0
    }
}

impl fmt::Display for Sp2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(f, "[[{}, {}], [{}, {}]]", m.a11, m.a12, m.a21, m.a22)
    }
}

impl Sp2Matrix {
    pub const IDENTITY: Sp2Matrix = Sp2Matrix(Mat2::IDENTITY);

    /// Checked constructor: determinant must be 1 within `1e-9`.
    pub fn new(m: Mat2) -> Result<Self, Sp2Error> {
        Self::with_tolerance(m, SYMPLECTIC_DET_TOL)
    }

    pub fn with_tolerance(m: Mat2, tol: f64) -> Result<Self, Sp2Error> {
        if !m.is_finite() {
            return Err(Sp2Error::NonFinite);
        }
        let det = m.det();
        if (det - 1.0).abs() > tol {
            return Err(Sp2Error::NonSymplectic { det });
        }
        Ok(Sp2Matrix(m))
    }

    /// Wraps without checking. Callers guarantee det = 1 up to rounding.
    pub(crate) fn from_raw(m: Mat2) -> Self {
        Sp2Matrix(m)
    }

    pub fn from_entries(a11: f64, a12: f64, a21: f64, a22: f64) -> Result<Self, Sp2Error> {
        Self::new(Mat2::new(a11, a12, a21, a22))
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Sp2Matrix(Mat2::new(c, -s, s, c))
    }

    /// `diag(λ, 1/λ)`.
    pub fn stretch(lambda: f64) -> Self {
        Sp2Matrix(Mat2::diag(lambda, 1.0 / lambda))
    }

    pub fn mat(&self) -> &Mat2 {
        &self.0
    }

    pub fn det(&self) -> f64 {
        self.0.det()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn mul(&self, o: &Sp2Matrix) -> Sp2Matrix {
        Sp2Matrix(self.0.mul(&o.0))
    }

    pub fn inverse(&self) -> Sp2Matrix {
        Sp2Matrix(self.0.adjugate())
    }

    pub fn pow(&self, k: usize) -> Sp2Matrix {
        (0..k).fold(Sp2Matrix::IDENTITY, |acc, _| acc.mul(self))
    }

    pub fn conjugate_by(&self, p: &Sp2Matrix) -> Sp2Matrix {
        p.mul(self).mul(&p.inverse())
    }

    /// `det(A - Id)`; equals `2 - tr A` for symplectic A.
    pub fn det_minus_identity(&self) -> f64 {
        self.0.sub(&Mat2::IDENTITY).det()
    }

    /// Distance to the identity in the max-entry norm.
    pub fn identity_deviation(&self) -> f64 {
        self.0.sub(&Mat2::IDENTITY).max_abs()
    }

    /// Polar angle of the rotation factor U in `A = M U`.
    pub fn polar_angle(&self) -> f64 {
        let m = &self.0;
        (m.a21 - m.a12).atan2(m.a11 + m.a22)
    }

    /// Logarithm in sl(2, ℝ); defined when `tr > -2`.
    pub fn log(&self) -> Option<Mat2> {
        let tr = self.trace();
        if !(tr > -2.0 + 1e-12) {
            return None;
        }
        let half = tr / 2.0;
        let traceless = self.0.sub(&Mat2::IDENTITY.scale(half));
        // A = cosh(r)·Id + sinh(r)/r · X  (or the circular analogue).
        let factor = if half > 1.0 + 1e-8 {
            let r = half.acosh();
            r / r.sinh()
        } else if half < 1.0 - 1e-8 {
            let r = half.clamp(-1.0, 1.0).acos();
            r / r.sin()
        } else {
            // r ≈ 0: r/sinh r ≈ 1 - r²/6 with r² ≈ 2(half - 1).
            1.0 - (half - 1.0) / 3.0
        };
        Some(traceless.scale(factor))
    }
}

/// Polar decomposition `A = M U` with M symmetric positive definite and U a
/// rotation.
pub fn polar_decompose(a: &Sp2Matrix) -> Result<(Mat2, Sp2Matrix), Sp2Error> {
    let det = a.det();
    if (det - 1.0).abs() > SYMPLECTIC_DET_TOL {
        return Err(Sp2Error::NonSymplectic { det });
    }
    let u = Sp2Matrix::rotation(a.polar_angle());
    let m = a.mat().mul(&u.mat().transpose());
    // Symmetrize away rounding.
    let off = 0.5 * (m.a12 + m.a21);
    Ok((Mat2::new(m.a11, off, off, m.a22), u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EndpointTag {
    PositiveHyperbolic,
    NegativeHyperbolic,
    Elliptic,
    Degenerate,
}

impl EndpointTag {
    /// Parity of the index forced by the endpoint, if defined.
    pub fn parity(&self) -> Option<u8> {
        match self {
            EndpointTag::PositiveHyperbolic => Some(0),
            EndpointTag::NegativeHyperbolic | EndpointTag::Elliptic => Some(1),
            EndpointTag::Degenerate => None,
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        matches!(self, EndpointTag::PositiveHyperbolic | EndpointTag::NegativeHyperbolic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EigenData {
    /// Real pair `λ, 1/λ`, reported with `|λ| ≥ 1`.
    Real { lambda: f64 },
    /// Unit pair `e^{±iφ}`, `φ ∈ (0, π)`.
    Unit { angle: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointClass {
    pub tag: EndpointTag,
    pub eigen: EigenData,
    pub det_minus_identity: f64,
}

pub fn classify_endpoint(a: &Sp2Matrix, degeneracy_threshold: f64) -> EndpointClass {
    let tr = a.trace();
    let d = a.det_minus_identity();
    let real_pair = |tr: f64| {
        let disc = (tr * tr - 4.0).max(0.0).sqrt();
        let lambda = if tr >= 0.0 { (tr + disc) / 2.0 } else { (tr - disc) / 2.0 };
        EigenData::Real { lambda }
    };
    let (tag, eigen) = if d.abs() < degeneracy_threshold {
        (EndpointTag::Degenerate, real_pair(tr))
    } else if tr > 2.0 {
        (EndpointTag::PositiveHyperbolic, real_pair(tr))
    } else if tr <= -2.0 + PARABOLIC_TRACE_TOL {
        // includes the double eigenvalue -1
        (EndpointTag::NegativeHyperbolic, real_pair(tr.min(-2.0)))
    } else {
        let angle = (tr / 2.0).clamp(-1.0, 1.0).acos();
        (EndpointTag::Elliptic, EigenData::Unit { angle })
    };
    EndpointClass { tag, eigen, det_minus_identity: d }
}

pub fn classify(a: &Sp2Matrix) -> EndpointClass {
    classify_endpoint(a, DEFAULT_DEGENERACY_THRESHOLD)
}

/// A sampled path in Sp(2, ℝ) with `Φ(0) = Id`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticPath {
    samples: Vec<(f64, Sp2Matrix)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PathFile {
    samples: Vec<[f64; 5]>,
}

impl SymplecticPath {
    /// Validating constructor: every invariant is checked, nothing is repaired.
    pub fn new(samples: Vec<(f64, Sp2Matrix)>) -> Result<Self, Sp2Error> {
        let path = Self::check_shape(samples)?;
        path.check_resolution()?;
        Ok(path)
    }

    /// Builds a path and subdivides any under-resolved interval.
    pub fn refined(samples: Vec<(f64, Sp2Matrix)>) -> Result<Self, Sp2Error> {
        Self::check_shape(samples)?.refine()
    }

    /// Samples `f` at `n + 1` uniform times on `[0, duration]`, then refines.
    pub fn from_fn<F>(duration: f64, n: usize, f: F) -> Result<Self, Sp2Error>
    where
        F: Fn(f64) -> Sp2Matrix,
    {
        let n = n.max(1);
        let samples = (0..=n)
            .map(|i| {
                let t = duration * i as f64 / n as f64;
                (t, if i == 0 { Sp2Matrix::IDENTITY } else { f(t) })
            })
            .collect();
        Self::refined(samples)
    }

    /// The one-parameter subgroup `t ↦ exp(t·X)` on `[0, duration]`.
    pub fn from_generator(generator: Mat2, duration: f64) -> Result<Self, Sp2Error> {
        let n = ((generator.op_norm() * duration / 0.02).ceil() as usize).max(8);
        Self::from_fn(duration, n, |t| generator.scale(t).exp_traceless())
    }

    fn check_shape(samples: Vec<(f64, Sp2Matrix)>) -> Result<Self, Sp2Error> {
        if samples.len() < 2 {
            return Err(Sp2Error::TooShort);
        }
        let (t0, m0) = samples[0];
        if t0 != 0.0 || m0.identity_deviation() > LOOP_CLOSURE_TOL {
            return Err(Sp2Error::BadStart);
        }
        for (i, (t, m)) in samples.iter().enumerate() {
            if !t.is_finite() || !m.mat().is_finite() {
                return Err(Sp2Error::NonFinite);
            }
            if i > 0 && !(*t > samples[i - 1].0) {
                return Err(Sp2Error::NonMonotoneTime { index: i });
            }
            let det = m.det();
            if (det - 1.0).abs() > PATH_DET_TOL {
                return Err(Sp2Error::SampleNotSymplectic { index: i, det });
            }
        }
        Ok(SymplecticPath { samples })
    }

    fn check_resolution(&self) -> Result<(), Sp2Error> {
        for (i, w) in self.samples.windows(2).enumerate() {
            let gap = w[1].1.mat().sub(w[0].1.mat()).op_norm();
            if gap >= PATH_STEP_GUARD {
                return Err(Sp2Error::Unresolved { index: i, next: i + 1, gap });
            }
        }
        Ok(())
    }

    fn refine(self) -> Result<Self, Sp2Error> {
        let target = 0.5 * PATH_STEP_GUARD;
        let mut out = Vec::with_capacity(self.samples.len());
        out.push(self.samples[0]);
        for (i, w) in self.samples.windows(2).enumerate() {
            let (t0, a) = w[0];
            let (t1, b) = w[1];
            let gap = b.mat().sub(a.mat()).op_norm();
            if gap < target {
                out.push((t1, b));
                continue;
            }
            let step = a.inverse().mul(&b).log().ok_or(Sp2Error::Unresolved { index: i, next: i + 1, gap })?;
            // Growth along the interval is bounded by the larger endpoint norm.
            let mut pieces = ((gap / target).ceil() as usize).max(2);
            loop {
                let mut ok = true;
                let mut prev = a;
                let mut chunk = Vec::with_capacity(pieces);
                for j in 1..=pieces {
                    let s = j as f64 / pieces as f64;
                    let m = if j == pieces { b } else { a.mul(&step.scale(s).exp_traceless()) };
                    if m.mat().sub(prev.mat()).op_norm() >= target {
                        ok = false;
                        break;
                    }
                    chunk.push((t0 + s * (t1 - t0), m));
                    prev = m;
                }
                if ok {
                    out.extend(chunk);
                    break;
                }
                pieces *= 2;
                if pieces > 1 << 24 {
                    return Err(Sp2Error::Unresolved { index: i, next: i + 1, gap });
                }
            }
        }
        let path = SymplecticPath { samples: out };
        path.check_resolution()?;
        Ok(path)
    }

    pub fn samples(&self) -> &[(f64, Sp2Matrix)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map(|s| s.0).unwrap_or(0.0)
    }

    pub fn endpoint(&self) -> Sp2Matrix {
        self.samples.last().map(|s| s.1).unwrap_or(Sp2Matrix::IDENTITY)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    /// Incremental generator of interval `i`: `log(Φ_i⁻¹ Φ_{i+1})`.
    pub(crate) fn increment_log(&self, i: usize) -> Option<Mat2> {
        let a = self.samples[i].1;
        let b = self.samples[i + 1].1;
        a.inverse().mul(&b).log()
    }

    /// Index of the interval containing `t` (clamped to the path).
    fn interval_of(&self, t: f64) -> usize {
        let n = self.samples.len();
        match self.samples.binary_search_by(|s| s.0.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Value at `t` by Lie-algebra interpolation between neighbouring samples.
    pub fn at(&self, t: f64) -> Sp2Matrix {
        let t = t.clamp(0.0, self.duration());
        let i = self.interval_of(t);
        let (t0, a) = self.samples[i];
        let (t1, b) = self.samples[i + 1];
        if t <= t0 {
            return a;
        }
        if t >= t1 {
            return b;
        }
        let s = (t - t0) / (t1 - t0);
        match a.inverse().mul(&b).log() {
            Some(x) => a.mul(&x.scale(s).exp_traceless()),
            // Refinement guarantees the log exists; keep a continuous fallback.
            None => Sp2Matrix::from_raw(a.mat().scale(1.0 - s).add(&b.mat().scale(s))),
        }
    }

    /// Resamples at the given strictly increasing times (0 must come first).
    pub fn resample(&self, times: &[f64]) -> Result<SymplecticPath, Sp2Error> {
        let samples = times.iter().map(|&t| (t, if t == 0.0 { Sp2Matrix::IDENTITY } else { self.at(t) })).collect();
        Self::refined(samples)
    }

    /// Same matrices, time axis pushed through a monotone map fixing 0.
    pub fn reparametrize<F: Fn(f64) -> f64>(&self, tau: F) -> Result<SymplecticPath, Sp2Error> {
        let samples = self.samples.iter().map(|&(t, m)| (tau(t), m)).collect();
        Self::new(samples)
    }

    pub fn map<F: Fn(f64, &Sp2Matrix) -> Sp2Matrix>(&self, f: F) -> Result<SymplecticPath, Sp2Error> {
        let samples = self.samples.iter().map(|(t, m)| (*t, f(*t, m))).collect();
        Self::refined(samples)
    }

    pub fn from_json(text: &str) -> Result<Self, Sp2Error> {
        let file: PathFile = serde_json::from_str(text).map_err(|e| Sp2Error::Parse(e.to_string()))?;
        let mut samples = Vec::with_capacity(file.samples.len());
        for row in &file.samples {
            let m = Mat2::new(row[1], row[2], row[3], row[4]);
            if !m.is_finite() || !row[0].is_finite() {
                return Err(Sp2Error::NonFinite);
            }
            samples.push((row[0], Sp2Matrix::with_tolerance(m, PATH_DET_TOL).map_err(|_| {
                Sp2Error::SampleNotSymplectic { index: samples.len(), det: m.det() }
            })?));
        }
        Self::new(samples)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let rows: Vec<[f64; 5]> = self
            .samples
            .iter()
            .map(|(t, m)| {
                let m = m.mat();
                [*t, m.a11, m.a12, m.a21, m.a22]
            })
            .collect();
        serde_json::to_value(PathFile { samples: rows }).expect("path rows serialize")
    }
}

/// Pointwise product `t ↦ L(t)·Φ(t)`; L is rescaled onto Φ's time interval.
pub fn path_concat(lp: &SymplecticPath, phi: &SymplecticPath) -> Result<SymplecticPath, Sp2Error> {
    let deviation = lp.endpoint().identity_deviation();
    if deviation > LOOP_CLOSURE_TOL {
        return Err(Sp2Error::NotALoop { deviation });
    }
    let t_phi = phi.duration();
    let scale = lp.duration() / t_phi;
    let mut times: Vec<f64> = phi.times().chain(lp.times().map(|t| t / scale)).collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * t_phi.max(1.0));
    if let Some(last) = times.last_mut() {
        *last = t_phi;
    }
    let samples = times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                (0.0, Sp2Matrix::IDENTITY)
            } else {
                (t, lp.at(t * scale).mul(&phi.at(t)))
            }
        })
        .collect();
    SymplecticPath::refined(samples)
}

/// Pointwise inverse `t ↦ Φ(t)⁻¹`.
pub fn path_invert(phi: &SymplecticPath) -> SymplecticPath {
    // Inversion is an isometry of the operator norm on SL(2), so the
    // resolution guard carries over.
    SymplecticPath { samples: phi.samples.iter().map(|(t, m)| (*t, m.inverse())).collect() }
}

/// Linearization of the m-fold iterate: on segment k, `t ↦ Φ(t - kT)·Φ(T)^k`.
///
/// Each segment is subdivided at the level of Φ, where interpolation is well
/// conditioned, before the right factor `Φ(T)^k` magnifies the gaps.
pub fn path_iterate(phi: &SymplecticPath, m: usize) -> Result<SymplecticPath, Sp2Error> {
    let m = m.max(1);
    if m == 1 {
        return Ok(phi.clone());
    }
    let period = phi.duration();
    let end = phi.endpoint();
    let target = 0.25 * PATH_STEP_GUARD;
    let mut samples = Vec::with_capacity(phi.len() * m);
    samples.push((0.0, Sp2Matrix::IDENTITY));
    let mut power = Sp2Matrix::IDENTITY;
    for k in 0..m {
        let offset = k as f64 * period;
        let scale = power.mat().op_norm();
        for w in phi.samples.windows(2) {
            let ((t0, a), (t1, b)) = (w[0], w[1]);
            let gap = b.mat().sub(a.mat()).op_norm() * scale;
            let pieces = ((gap / target).ceil() as usize).max(1);
            for j in 1..=pieces {
                let (t, x) = if j == pieces {
                    (t1, b)
                } else {
                    let t = t0 + (t1 - t0) * j as f64 / pieces as f64;
                    (t, phi.at(t))
                };
                samples.push((t + offset, x.mul(&power)));
            }
        }
        power = power.mul(&end);
    }
    SymplecticPath::refined(samples)
}

/// Convenience: the rotation path `t ↦ R(ω t)` on `[0, duration]`.
pub fn rotation_path(omega: f64, duration: f64) -> SymplecticPath {
    SymplecticPath::from_generator(Mat2::J0.scale(omega), duration).expect("rotation path is valid")
}

/// Convenience: the stretch path `t ↦ diag(e^{σt}, e^{-σt})`.
pub fn stretch_path(sigma: f64, duration: f64) -> SymplecticPath {
    SymplecticPath::from_generator(Mat2::diag(sigma, -sigma), duration).expect("stretch path is valid")
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    } else if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        a.sub(b).max_abs() < tol
    }

    #[test]
    fn polar_of_identity_rotation_and_stretch() {
        let (m, u) = polar_decompose(&Sp2Matrix::IDENTITY).unwrap();
        assert!(close(&m, &Mat2::IDENTITY, 1e-15));
        assert!(close(u.mat(), &Mat2::IDENTITY, 1e-15));

        let r = Sp2Matrix::rotation(PI / 3.0);
        let (m, u) = polar_decompose(&r).unwrap();
        assert!(close(&m, &Mat2::IDENTITY, 1e-12));
        assert!(close(u.mat(), r.mat(), 1e-12));

        let d = Sp2Matrix::stretch(2.0);
        let (m, u) = polar_decompose(&d).unwrap();
        assert!(close(&m, &Mat2::diag(2.0, 0.5), 1e-12));
        assert!(close(u.mat(), &Mat2::IDENTITY, 1e-12));
    }

    #[test]
    fn polar_rejects_non_symplectic() {
        let bad = Sp2Matrix::from_raw(Mat2::diag(2.0, 2.0));
        assert!(matches!(polar_decompose(&bad), Err(Sp2Error::NonSymplectic { .. })));
        assert!(Sp2Matrix::from_entries(1.0, 0.0, 0.0, 1.1).is_err());
    }

    #[test]
    fn endpoint_classes() {
        let c = classify(&Sp2Matrix::stretch(2.0));
        assert_eq!(c.tag, EndpointTag::PositiveHyperbolic);
        assert_eq!(c.eigen, EigenData::Real { lambda: 2.0 });

        let c = classify(&Sp2Matrix::rotation(PI / 3.0));
        assert_eq!(c.tag, EndpointTag::Elliptic);
        match c.eigen {
            EigenData::Unit { angle } => assert!((angle - PI / 3.0).abs() < 1e-12),
            other => panic!("unexpected eigen data {other:?}"),
        }

        assert_eq!(classify(&Sp2Matrix::IDENTITY).tag, EndpointTag::Degenerate);

        let minus = Sp2Matrix::from_entries(-1.0, 0.0, 0.0, -1.0).unwrap();
        let c = classify(&minus);
        assert_eq!(c.tag, EndpointTag::NegativeHyperbolic);
        assert_eq!(c.det_minus_identity, 4.0);
        assert_eq!(c.eigen, EigenData::Real { lambda: -1.0 });

        // A non-diagonalizable -1 block is still negative hyperbolic.
        let jordan = Sp2Matrix::from_entries(-1.0, 1.0, 0.0, -1.0).unwrap();
        assert_eq!(classify(&jordan).tag, EndpointTag::NegativeHyperbolic);
    }

    #[test]
    fn degeneracy_threshold_is_configurable() {
        let near = Sp2Matrix::rotation(1e-3);
        // det(A - Id) = 2 - 2cos(1e-3) ≈ 1e-6
        assert_eq!(classify_endpoint(&near, 1e-8).tag, EndpointTag::Elliptic);
        assert_eq!(classify_endpoint(&near, 1e-5).tag, EndpointTag::Degenerate);
    }

    #[test]
    fn exp_log_roundtrip() {
        for x in [Mat2::new(0.3, 1.2, -0.7, -0.3), Mat2::new(0.0, -2.0, 2.0, 0.0), Mat2::new(1e-9, 0.0, 0.0, -1e-9)] {
            let a = x.exp_traceless();
            assert!((a.det() - 1.0).abs() < 1e-12);
            let back = a.log().unwrap();
            assert!(close(&back, &x, 1e-10), "{back:?} vs {x:?}");
        }
        assert!(Sp2Matrix::from_entries(-2.0, 0.0, 0.0, -0.5).unwrap().log().is_none());
    }

    #[test]
    fn concat_with_rotation_loop() {
        let lp = rotation_path(2.0 * PI, 1.0);
        let id = SymplecticPath::from_fn(1.0, 4, |_| Sp2Matrix::IDENTITY).unwrap();
        let out = path_concat(&lp, &id).unwrap();
        for t in [0.1, 0.37, 0.5, 0.9] {
            assert!(close(out.at(t).mat(), Sp2Matrix::rotation(2.0 * PI * t).mat(), 1e-9));
        }
        let phi = rotation_path(PI, 1.0);
        let out = path_concat(&lp, &phi).unwrap();
        for t in [0.1, 0.37, 0.5, 0.9, 1.0] {
            assert!(close(out.at(t).mat(), Sp2Matrix::rotation(3.0 * PI * t).mat(), 1e-9));
        }
        let trivial = SymplecticPath::from_fn(2.0, 3, |_| Sp2Matrix::IDENTITY).unwrap();
        let out = path_concat(&trivial, &phi).unwrap();
        for t in [0.2, 0.5, 0.8] {
            assert!(close(out.at(t).mat(), phi.at(t).mat(), 1e-12));
        }
    }

    #[test]
    fn concat_rejects_open_loop() {
        let open = rotation_path(PI, 1.0);
        let phi = rotation_path(PI, 1.0);
        assert!(matches!(path_concat(&open, &phi), Err(Sp2Error::NotALoop { .. })));
    }

    #[test]
    fn invert_examples() {
        let inv = path_invert(&rotation_path(PI, 1.0));
        for t in [0.25, 0.5, 1.0] {
            assert!(close(inv.at(t).mat(), Sp2Matrix::rotation(-PI * t).mat(), 1e-9));
        }
        let inv = path_invert(&stretch_path(1.0, 1.0));
        assert!(close(inv.endpoint().mat(), &Mat2::diag((-1.0f64).exp(), 1f64.exp()), 1e-9));
        let id = SymplecticPath::from_fn(1.0, 2, |_| Sp2Matrix::IDENTITY).unwrap();
        assert_eq!(path_invert(&id), id);
    }

    #[test]
    fn iterate_examples() {
        let phi = stretch_path(1.0, 1.0);
        assert_eq!(path_iterate(&phi, 1).unwrap(), phi);
        let two = path_iterate(&phi, 2).unwrap();
        assert!((two.duration() - 2.0).abs() < 1e-15);
        for t in [0.5f64, 1.0, 1.5, 2.0] {
            let expect = Mat2::diag(t.exp(), (-t).exp());
            assert!(two.at(t).mat().sub(&expect).max_abs() < 1e-9 * t.exp());
        }
        let rot = path_iterate(&rotation_path(PI, 1.0), 2).unwrap();
        assert!(close(rot.at(1.0).mat(), &Mat2::IDENTITY.scale(-1.0), 1e-9));
        assert!(close(rot.endpoint().mat(), &Mat2::IDENTITY, 1e-9));
        assert!(close(rot.at(1.5).mat(), Sp2Matrix::rotation(1.5 * PI).mat(), 1e-9));
    }

    #[test]
    fn path_validation_errors() {
        let r = Sp2Matrix::rotation(0.01);
        assert_eq!(SymplecticPath::new(vec![(0.0, Sp2Matrix::IDENTITY)]), Err(Sp2Error::TooShort));
        assert_eq!(SymplecticPath::new(vec![(0.0, r), (1.0, r)]), Err(Sp2Error::BadStart));
        assert!(matches!(
            SymplecticPath::new(vec![(0.0, Sp2Matrix::IDENTITY), (0.0, r)]),
            Err(Sp2Error::NonMonotoneTime { index: 1 })
        ));
        assert!(matches!(
            SymplecticPath::new(vec![(0.0, Sp2Matrix::IDENTITY), (1.0, Sp2Matrix::rotation(1.0))]),
            Err(Sp2Error::Unresolved { .. })
        ));
        let refined = SymplecticPath::refined(vec![(0.0, Sp2Matrix::IDENTITY), (1.0, Sp2Matrix::rotation(1.0))]).unwrap();
        assert!(refined.len() > 10);
        assert!(close(refined.at(0.5).mat(), Sp2Matrix::rotation(0.5).mat(), 1e-12));
    }

    #[test]
    fn json_roundtrip_and_errors() {
        let p = rotation_path(PI, 1.0);
        let text = p.to_json_value().to_string();
        let back = SymplecticPath::from_json(&text).unwrap();
        assert_eq!(back.len(), p.len());
        assert!(SymplecticPath::from_json("{}").is_err());
        assert!(SymplecticPath::from_json(r#"{"samples": [[0,1,0,0,1],[1,2,0,0,2]]}"#).is_err());
        assert!(SymplecticPath::from_json(r#"{"samples": [[0.5,1,0,0,1],[1,1,0,0,1]]}"#).is_err());
    }
}
