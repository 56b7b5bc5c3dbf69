//! Numerical thresholds shared across the toolkit.
//!
//! Acceptance tests import these rather than repeating literals.

// Symplectic matrices and paths

/// Determinant check for a single `Sp2Matrix`.
pub const SYMPLECTIC_DET_TOL: f64 = 1e-9;
/// Determinant check for every sample of a path.
pub const PATH_DET_TOL: f64 = 1e-6;
/// Consecutive samples must differ by less than this in operator norm.
pub const PATH_STEP_GUARD: f64 = 0.1;
/// Loops must close up to this deviation from the identity.
pub const LOOP_CLOSURE_TOL: f64 = 1e-9;
/// `|det(A - Id)|` below this is degenerate.
pub const DEFAULT_DEGENERACY_THRESHOLD: f64 = 1e-8;
/// Traces within this of -2 count as the double eigenvalue -1.
pub const PARABOLIC_TRACE_TOL: f64 = 1e-9;

// Index computation

/// A zero of `det(Φ(t) - Id)` with slower slope is non-transverse.
pub const CROSSING_SLOPE_TOL: f64 = 1e-10;
/// Perturbation used to regularize non-transverse crossings.
pub const REGULARIZATION_EPS: f64 = 1e-6;
/// Consecutive polar angles may not jump by this much.
pub const ANGLE_JUMP_GUARD: f64 = std::f64::consts::FRAC_PI_2;

// Models

/// Jacobi identity of structure constants.
pub const JACOBI_TOL: f64 = 1e-12;
/// Residual of the pointwise Reeb linear system.
pub const REEB_RESIDUAL_TOL: f64 = 1e-10;
/// Condition number above which the Reeb system is singular.
pub const REEB_CONDITION_MAX: f64 = 1e12;
/// Finite-difference step for chart derivatives (Richardson-extrapolated).
pub const CHART_FD_STEP: f64 = 1e-3;
/// Relative spread allowed for θ′ over a chart validation grid.
pub const THETA_SPREAD_TOL: f64 = 1e-6;
/// Compatibility identity on chart grids.
pub const CHART_COMPAT_TOL: f64 = 1e-6;

// Geometry

/// Agreement of curvature routes on frame models.
pub const FRAME_ORACLE_TOL: f64 = 1e-6;
/// Agreement of curvature routes on chart models.
pub const CHART_ORACLE_TOL: f64 = 1e-4;
/// Mean curvature / Ricci identities on frame models.
pub const FRAME_IDENTITY_TOL: f64 = 1e-8;
/// Mean curvature / Ricci identities on chart models.
pub const CHART_IDENTITY_TOL: f64 = 1e-5;
/// ‖ℒ_X g‖² at or below this is treated as zero.
pub const LIE_NORM_ZERO: f64 = 1e-10;
/// Radicand of the negative-curvature bound is clamped inside this band.
pub const RADICAND_CLAMP: f64 = 1e-10;
/// The strict bound counts as met only with at least this margin.
pub const NEG_BOUND_STRICTNESS: f64 = 1e-8;
/// Flow segment for the Jacobi-rate derivative.
pub const JACOBI_SEGMENT: f64 = 1e-3;
/// Expansion-rate identity.
pub const EXPANSION_RATE_TOL: f64 = 1e-6;

// Dynamics

/// Default relative tolerance of the adaptive integrator.
pub const FLOW_RTOL: f64 = 1e-9;
/// Drift of α(X) along a chart trajectory.
pub const ALPHA_DRIFT_TOL: f64 = 1e-7;
/// Closure defect of a refined periodic orbit.
pub const ORBIT_CLOSURE_TOL: f64 = 1e-8;
/// Newton iteration cap for orbit refinement.
pub const ORBIT_MAX_NEWTON: usize = 50;
/// Symplectic frame normalization `dα(u, v) = 1`.
pub const FRAME_SYMPLECTIC_TOL: f64 = 1e-8;
/// Per-sample determinant drift of a linearized path.
pub const LINEARIZATION_DET_TOL: f64 = 1e-6;
/// Angle drift over the last tenth of the horizon for a converged splitting.
pub const SPLITTING_ANGLE_TOL: f64 = 1e-6;
/// RMS residual of the log-linear growth fit.
pub const GROWTH_FIT_RESIDUAL: f64 = 0.05;
/// Fitted rates at or below this count as no growth.
pub const GROWTH_RATE_FLOOR: f64 = 1e-6;
/// Minimum separation of contact-pair directions from parallel.
pub const TRANSVERSALITY_TOL: f64 = 1e-3;
/// Bracket values at or below this do not count as positive in the
/// contact-pair test.
pub const CONTACT_PAIR_FLOOR: f64 = 1e-10;
