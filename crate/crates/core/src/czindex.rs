//! Conley–Zehnder and Maslov indices of sampled paths in Sp(2, ℝ).
//!
//! Two independent algorithms are run on every input:
//!
//! * **crossing count**: signed intersections of the path with the
//!   degenerate set `{det(A - Id) = 0}`, each weighted by the signature of
//!   the crossing form `v ↦ ⟨v, S v⟩` on `ker(Φ(t) - Id)`, where
//!   `Φ' = J₀ S Φ`. The crossing at `t = 0` counts half.
//! * **rotation number**: the continuous lift θ(t) of the polar angle of
//!   Φ(t). A positive hyperbolic endpoint lies in the band around
//!   `2πk` and has index `2k`; any endpoint with `tr < 2` lies in
//!   `(2πk, 2π(k+1))` and has index `2k + 1`.
//!
//! `cz_index` fails hard if the two disagree.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling::{random_loop, random_path, PathFamily};
use crate::sp2core::{
    classify, path_concat, path_invert, rotation_path, wrap_angle, EndpointClass, EndpointTag, Mat2, Sp2Error,
    Sp2Matrix, SymplecticPath,
};
use crate::tolerances::{ANGLE_JUMP_GUARD, CROSSING_SLOPE_TOL, LOOP_CLOSURE_TOL, REGULARIZATION_EPS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("endpoint is degenerate: det(Φ(T) - Id) = {det}")]
    DegenerateEndpoint { det: f64 },
    #[error("crossing count {crossing} disagrees with rotation number {rotation}")]
    MethodDisagreement { crossing: i64, rotation: i64 },
    #[error("polar angle jumps by {jump} between samples {index} and {next}")]
    SamplingTooCoarse { index: usize, next: usize, jump: f64 },
    #[error("non-transverse crossing near t = {time} survives regularization")]
    IrregularCrossing { time: f64 },
    #[error("not a loop: endpoint deviates from identity by {deviation}")]
    NotALoop { deviation: f64 },
    #[error(transparent)]
    Path(#[from] Sp2Error),
}

impl IndexError {
    /// True for failures of an internal oracle pair.
    pub fn is_consistency_failure(&self) -> bool {
        matches!(self, IndexError::MethodDisagreement { .. } | IndexError::IrregularCrossing { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexMethod {
    Crossing,
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub time: f64,
    /// Contribution to the index (half signature at `t = 0`).
    pub sign: i64,
    pub kernel_dim: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexResult {
    pub index: i64,
    pub method: IndexMethod,
    pub crossings: Vec<CrossingRecord>,
    pub endpoint: EndpointClass,
    /// Perturbation applied to regularize the crossing count, if any.
    pub regularization: Option<f64>,
    /// Number of times the underlying orbit is traversed (2 for double covers).
    pub cover: u32,
}

/// Conley–Zehnder index, computed by crossings and checked against the
/// rotation number.
pub fn cz_index(path: &SymplecticPath) -> Result<IndexResult, IndexError> {
    let crossing = cz_index_crossing(path)?;
    let rotation = cz_index_rotation(path)?;
    if crossing.index != rotation.index {
        return Err(IndexError::MethodDisagreement { crossing: crossing.index, rotation: rotation.index });
    }
    Ok(crossing)
}

fn nondegenerate_endpoint(path: &SymplecticPath) -> Result<EndpointClass, IndexError> {
    let endpoint = classify(&path.endpoint());
    if endpoint.tag == EndpointTag::Degenerate {
        return Err(IndexError::DegenerateEndpoint { det: endpoint.det_minus_identity });
    }
    Ok(endpoint)
}

/// Continuous lift of the polar angle along the samples.
pub fn polar_angle_lift(path: &SymplecticPath) -> Result<Vec<f64>, IndexError> {
    let mut lifted = Vec::with_capacity(path.len());
    let mut prev_raw = 0.0;
    let mut acc = 0.0;
    for (i, (_, m)) in path.samples().iter().enumerate() {
        let raw = m.polar_angle();
        if i > 0 {
            let jump = wrap_angle(raw - prev_raw);
            if jump.abs() >= ANGLE_JUMP_GUARD {
                return Err(IndexError::SamplingTooCoarse { index: i - 1, next: i, jump });
            }
            acc += jump;
        } else {
            acc = raw;
        }
        prev_raw = raw;
        lifted.push(acc);
    }
    Ok(lifted)
}

pub fn cz_index_rotation(path: &SymplecticPath) -> Result<IndexResult, IndexError> {
    let endpoint = nondegenerate_endpoint(path)?;
    let theta = *polar_angle_lift(path)?.last().expect("paths have samples");
    let turns = theta / (2.0 * PI);
    let index = if endpoint.tag == EndpointTag::PositiveHyperbolic {
        2 * turns.round() as i64
    } else {
        2 * turns.floor() as i64 + 1
    };
    Ok(IndexResult {
        index,
        method: IndexMethod::Rotation,
        crossings: Vec::new(),
        endpoint,
        regularization: None,
        cover: 1,
    })
}

pub fn cz_index_crossing(path: &SymplecticPath) -> Result<IndexResult, IndexError> {
    let endpoint = nondegenerate_endpoint(path)?;
    let (crossings, regularization) = match scan_crossings(path) {
        Ok(c) => (c, None),
        Err(Irregular { time }) => {
            // Compose with the rotation by -εt and require stability under ε → ε/2.
            let a = regularized(path, REGULARIZATION_EPS)?;
            let b = regularized(path, REGULARIZATION_EPS / 2.0)?;
            let (ca, cb) = match (scan_crossings(&a), scan_crossings(&b)) {
                (Ok(ca), Ok(cb)) => (ca, cb),
                _ => return Err(IndexError::IrregularCrossing { time }),
            };
            if total(&ca) != total(&cb) || nondegenerate_endpoint(&a).is_err() {
                return Err(IndexError::IrregularCrossing { time });
            }
            (ca, Some(REGULARIZATION_EPS))
        }
    };
    Ok(IndexResult {
        index: total(&crossings),
        method: IndexMethod::Crossing,
        crossings,
        endpoint,
        regularization,
        cover: 1,
    })
}

fn total(c: &[CrossingRecord]) -> i64 {
    c.iter().map(|r| r.sign).sum()
}

fn regularized(path: &SymplecticPath, eps: f64) -> Result<SymplecticPath, IndexError> {
    Ok(path.map(|t, m| m.mul(&Sp2Matrix::rotation(-eps * t)))?)
}

/// Maslov index (degree) of a loop based at the identity.
pub fn maslov_index(lp: &SymplecticPath) -> Result<i64, IndexError> {
    let deviation = lp.endpoint().identity_deviation();
    if deviation > LOOP_CLOSURE_TOL {
        return Err(IndexError::NotALoop { deviation });
    }
    let theta = *polar_angle_lift(lp)?.last().expect("paths have samples");
    Ok((theta / (2.0 * PI)).round() as i64)
}

#[derive(Debug)]
struct Irregular {
    time: f64,
}

/// Intervals where |det(Φ - Id)| drops below this are sub-sampled.
const WINDOW_TRIGGER: f64 = 0.25;
/// A touch closer than this to the degenerate set is a crossing.
const TOUCH_ZERO: f64 = 1e-10;
/// Below this `‖Φ - Id‖` the kernel is the whole plane.
const FULL_KERNEL: f64 = 1e-4;
const WINDOW_POINTS: usize = 64;

/// Sampled path plus per-interval generators `Φ' Φ⁻¹`.
struct Scan<'a> {
    path: &'a SymplecticPath,
    logs: Vec<Mat2>,
}

impl<'a> Scan<'a> {
    fn new(path: &'a SymplecticPath) -> Result<Self, Irregular> {
        let logs = (0..path.len() - 1)
            .map(|i| path.increment_log(i).ok_or(Irregular { time: path.samples()[i].0 }))
            .collect::<Result<_, _>>()?;
        Ok(Scan { path, logs })
    }

    fn interval(&self, t: f64) -> usize {
        let s = self.path.samples();
        s.partition_point(|x| x.0 <= t).clamp(1, s.len() - 1) - 1
    }

    fn at(&self, t: f64) -> Sp2Matrix {
        let i = self.interval(t);
        let (t0, a) = self.path.samples()[i];
        let t1 = self.path.samples()[i + 1].0;
        let s = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        a.mul(&self.logs[i].scale(s).exp_traceless())
    }

    fn f(&self, t: f64) -> f64 {
        self.at(t).det_minus_identity()
    }

    /// Right-invariant generator `Φ'Φ⁻¹`, constant on each interval.
    fn generator(&self, i: usize) -> Mat2 {
        let (t0, a) = self.path.samples()[i];
        let t1 = self.path.samples()[i + 1].0;
        a.mat().mul(&self.logs[i]).mul(a.inverse().mat()).scale(1.0 / (t1 - t0))
    }

    /// Symmetric S with `Φ' = J₀ S Φ`.
    fn crossing_matrix(&self, i: usize) -> Mat2 {
        let s = Mat2::J0.mul(&self.generator(i)).scale(-1.0);
        let off = 0.5 * (s.a12 + s.a21);
        Mat2::new(s.a11, off, off, s.a22)
    }
}

/// Signature of a symmetric 2×2 matrix, or None if it is (nearly) singular.
fn signature(s: &Mat2) -> Option<i64> {
    let norm2 = s.a11 * s.a11 + 2.0 * s.a12 * s.a12 + s.a22 * s.a22;
    let det = s.det();
    if norm2 < 1e-24 || det.abs() <= 1e-8 * norm2 {
        return None;
    }
    Some(if det < 0.0 {
        0
    } else if s.trace() > 0.0 {
        2
    } else {
        -2
    })
}

fn scan_crossings(path: &SymplecticPath) -> Result<Vec<CrossingRecord>, Irregular> {
    let scan = Scan::new(path)?;
    let samples = path.samples();
    let n = samples.len();
    let mut out = Vec::new();

    let s0 = scan.crossing_matrix(0);
    let sig0 = signature(&s0).ok_or(Irregular { time: 0.0 })?;
    out.push(CrossingRecord { time: 0.0, sign: sig0 / 2, kernel_dim: 2 });

    let f: Vec<f64> = samples.iter().map(|(_, m)| m.det_minus_identity()).collect();
    for i in 1..n - 1 {
        if f[i] * f[i + 1] < 0.0 || f[i].abs().min(f[i + 1].abs()) < WINDOW_TRIGGER {
            scan_interval(&scan, samples[i].0, samples[i + 1].0, &mut out)?;
        }
    }
    out.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite crossing times"));
    Ok(out)
}

/// Dense sub-sampling of one interval `(lo, hi]`: sign changes, then touches.
fn scan_interval(
    scan: &Scan<'_>,
    lo: f64,
    hi: f64,
    out: &mut Vec<CrossingRecord>,
) -> Result<(), Irregular> {
    let ts: Vec<f64> = (0..=WINDOW_POINTS).map(|k| lo + (hi - lo) * k as f64 / WINDOW_POINTS as f64).collect();
    let fs: Vec<f64> = ts.iter().map(|&t| scan.f(t)).collect();
    let mut found = false;
    let mut last: Option<usize> = None;
    for k in 0..ts.len() {
        if fs[k] == 0.0 {
            continue;
        }
        if let Some(p) = last {
            if fs[p] * fs[k] < 0.0 {
                let t = bisect_root(scan, ts[p], ts[k], fs[p]);
                out.push(transverse_crossing(scan, t)?);
                found = true;
            }
        }
        last = Some(k);
    }
    if found {
        return Ok(());
    }
    let k = (0..ts.len()).min_by(|&a, &b| fs[a].abs().partial_cmp(&fs[b].abs()).expect("finite")).expect("window");
    let a = ts[k.saturating_sub(1)];
    let b = ts[(k + 1).min(ts.len() - 1)];
    let t = golden_min(|t| scan.f(t).abs(), a, b);
    let margin = 1e-9 * (hi - lo);
    let ft = scan.f(t).abs();
    // A minimum pinned to the right end belongs here only if |f| grows past
    // it; otherwise the next interval holds the true touch.
    let pinned_right = hi - t <= margin && scan.f(hi + 1e-6 * (hi - lo)).abs() < ft;
    if ft >= TOUCH_ZERO || t - lo <= margin || pinned_right {
        return Ok(());
    }
    let phi = scan.at(t);
    if phi.mat().sub(&Mat2::IDENTITY).op_norm() < FULL_KERNEL {
        let sig = signature(&scan.crossing_matrix(scan.interval(t))).ok_or(Irregular { time: t })?;
        out.push(CrossingRecord { time: t, sign: sig, kernel_dim: 2 });
        return Ok(());
    }
    // A zero landing exactly on a grid point can still be a sign change.
    let d = 1e-6 * (hi - lo);
    if scan.f(t - d) * scan.f(t + d) < 0.0 {
        out.push(transverse_crossing(scan, t)?);
        Ok(())
    } else {
        // tangency along a one-dimensional kernel
        Err(Irregular { time: t })
    }
}

fn transverse_crossing(scan: &Scan<'_>, t: f64) -> Result<CrossingRecord, Irregular> {
    let i = scan.interval(t);
    let phi = scan.at(t);
    let k = phi.mat().sub(&Mat2::IDENTITY);
    let s = scan.crossing_matrix(i);
    if k.op_norm() < FULL_KERNEL {
        let sig = signature(&s).ok_or(Irregular { time: t })?;
        return Ok(CrossingRecord { time: t, sign: sig, kernel_dim: 2 });
    }
    let slope = -scan.generator(i).mul(phi.mat()).trace();
    if slope.abs() < CROSSING_SLOPE_TOL {
        return Err(Irregular { time: t });
    }
    let r1 = [-k.a12, k.a11];
    let r2 = [-k.a22, k.a21];
    let v = if r1[0].hypot(r1[1]) >= r2[0].hypot(r2[1]) { r1 } else { r2 };
    let nv = v[0].hypot(v[1]);
    let v = [v[0] / nv, v[1] / nv];
    let sv = s.apply(v);
    let form = v[0] * sv[0] + v[1] * sv[1];
    if form.abs() < CROSSING_SLOPE_TOL {
        return Err(Irregular { time: t });
    }
    Ok(CrossingRecord { time: t, sign: if form > 0.0 { 1 } else { -1 }, kernel_dim: 1 })
}

fn bisect_root(scan: &Scan<'_>, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let lo_positive = f_lo > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (scan.f(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub passed: usize,
    pub failed: usize,
}

impl Tally {
    fn record(&mut self, ok: bool) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub seed: u64,
    pub trials: usize,
    pub family: PathFamily,
    pub normalization: bool,
    pub homotopy: Tally,
    pub maslov: Tally,
    pub invertibility: Tally,
    pub failures: Vec<String>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.normalization && self.homotopy.failed == 0 && self.maslov.failed == 0 && self.invertibility.failed == 0
    }
}

/// Property-test driver for the four index axioms on random mixed paths.
pub fn verify_axioms(seed: u64, trials: usize) -> AxiomReport {
    verify_axioms_with(seed, trials, PathFamily::Mixed)
}

pub fn verify_axioms_with(seed: u64, trials: usize, family: PathFamily) -> AxiomReport {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AxiomReport {
        seed,
        trials,
        family,
        normalization: matches!(cz_index(&rotation_path(PI, 1.0)), Ok(r) if r.index == 1),
        homotopy: Tally::default(),
        maslov: Tally::default(),
        invertibility: Tally::default(),
        failures: Vec::new(),
    };
    for trial in 0..trials {
        let phi = random_path(&mut rng, family);
        let base = match cz_index(&phi) {
            Ok(r) => r.index,
            Err(e) => {
                report.failures.push(format!("trial {trial}: {e}"));
                report.homotopy.record(false);
                report.maslov.record(false);
                report.invertibility.record(false);
                continue;
            }
        };

        // Reparametrization as a homotopy surrogate.
        let amp: f64 = rng.gen_range(-0.8..0.8);
        let waves = rng.gen_range(1..4) as f64;
        let period = phi.duration();
        let tau = move |s: f64| s + amp * period / (2.0 * PI * waves) * (2.0 * PI * waves * s / period).sin();
        let n = phi.len().max(64);
        let reparam = SymplecticPath::from_fn(period, n, |s| phi.at(tau(s)));
        let ok = matches!(reparam.map_err(IndexError::from).and_then(|p| cz_index(&p)), Ok(r) if r.index == base);
        if !ok {
            report.failures.push(format!("trial {trial}: reparametrization changed the index"));
        }
        report.homotopy.record(ok);

        let degree = rng.gen_range(-2..=2);
        let lp = random_loop(&mut rng, degree);
        let ok = match (maslov_index(&lp), path_concat(&lp, &phi).map_err(IndexError::from).and_then(|p| cz_index(&p))) {
            (Ok(mu), Ok(r)) => mu == degree && r.index - base == 2 * mu,
            _ => false,
        };
        if !ok {
            report.failures.push(format!("trial {trial}: Maslov compatibility failed for degree {degree}"));
        }
        report.maslov.record(ok);

        let ok = matches!(cz_index(&path_invert(&phi)), Ok(r) if r.index == -base);
        if !ok {
            report.failures.push(format!("trial {trial}: inverse index is not {}", -base));
        }
        report.invertibility.record(ok);
    }
    report
}
