//! Curvature checked against closed forms that do not go through the
//! library's connection code.
//!
//! Frame models are unimodular Lie groups whose frames (X, e, f) are in
//! Milnor's diagonal form `[e, f] = λ₀X, [f, X] = λ₁e, [X, e] = λ₂f`. With
//! `μ_i = (λ₀+λ₁+λ₂)/2 - λ_i` the principal Ricci curvatures are
//! `r₀ = 2μ₁μ₂` (cyclic) and the frame diagonalizes the curvature operator,
//! so `k(cosθ e + sinθ f, X) = cos²θ K(X,e) + sin²θ K(X,f)` with
//! `K(X,e) = (r₀ + r₁ - r₂)/2`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use reebkit::geometry::{
    chern_hamilton_energy, curvature_report, expansion_rate, lie_derivative_metric, neg_bound_rhs, ricci_reeb,
    GeometryError, PointGeometry,
};
use reebkit::models::{build_model, catalog, FrameModel, Model};

struct Milnor {
    ricci: [f64; 3],
}

impl Milnor {
    fn of(f: &FrameModel) -> Self {
        let c = f.structure();
        // the frame must be diagonal: [E_i, E_j] ∝ E_k for (i, j, k) cyclic
        for (i, j, k) in [(1, 2, 0), (2, 0, 1), (0, 1, 2)] {
            for other in 0..3 {
                if other != k {
                    assert_eq!(c[other][i][j], 0.0, "frame is not in diagonal form");
                }
            }
        }
        let l = [c[0][1][2], c[1][2][0], c[2][0][1]];
        let half = 0.5 * (l[0] + l[1] + l[2]);
        let mu = [half - l[0], half - l[1], half - l[2]];
        Milnor { ricci: [2.0 * mu[1] * mu[2], 2.0 * mu[2] * mu[0], 2.0 * mu[0] * mu[1]] }
    }

    fn k(&self, angle: f64) -> f64 {
        let r = self.ricci;
        let k_xe = 0.5 * (r[0] + r[1] - r[2]);
        let k_xf = 0.5 * (r[0] + r[2] - r[1]);
        angle.cos().powi(2) * k_xe + angle.sin().powi(2) * k_xf
    }
}

fn frame_models() -> Vec<Model> {
    let mut out = vec![catalog("su2"), catalog("sl2"), catalog("heisenberg")];
    let p = |pairs: &[(&str, f64)]| pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>();
    out.push(build_model("sl2", &p(&[("theta_prime", 1.3), ("rate", 0.4)])).unwrap());
    out.push(build_model("su2", &p(&[("theta_prime", 0.7)])).unwrap());
    out
}

fn angles(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 * 2.0 * PI / n as f64).collect()
}

#[test]
fn frame_curvature_matches_milnor() {
    for m in frame_models() {
        let oracle = Milnor::of(m.as_frame().unwrap());
        for p in m.sample_points(4) {
            let pg = PointGeometry::new(&m, &p).unwrap();
            for a in angles(32) {
                assert!((pg.k_tensor(a) - oracle.k(a)).abs() < 1e-10, "{} k at {a}", m.name);
                assert!((pg.k_decomposition(a).unwrap() - oracle.k(a)).abs() < 1e-6, "{} decomposition at {a}", m.name);
            }
            let r = ricci_reeb(&m, &p).unwrap();
            assert!((r.twice_det - oracle.ricci[0]).abs() < 1e-10, "{} Ricci", m.name);
        }
    }
}

#[test]
fn sl2_ricci_closed_form() {
    // r₀ = θ′²/2 - 2r² for the default θ′ = 1/2, r = 1
    let m = catalog("sl2");
    let r = ricci_reeb(&m, &[0.1, 0.2, 0.3]).unwrap();
    assert!((r.sectional_sum + 1.875).abs() < 1e-12);
}

#[test]
fn k_contact_models_have_constant_curvature_along_x() {
    // ℒ_X g = 0 forces k(e, X) = θ′²/4 and Ricci(X) = θ′²/2
    let mut p = BTreeMap::new();
    p.insert("a".to_string(), 1.0);
    p.insert("b".to_string(), 1.0);
    let models = vec![catalog("su2"), catalog("heisenberg"), catalog("ellipsoid"), build_model("ellipsoid", &p).unwrap(), build_model("ellipsoid(1,2)", &BTreeMap::new()).unwrap()];
    for m in models {
        let th = m.theta_prime().unwrap();
        for pt in m.sample_points(4) {
            let rep = curvature_report(&m, &pt, 16, true).unwrap();
            let tol = if m.as_chart().is_some() { 1e-4 } else { 1e-10 };
            assert!(rep.lie.norm2 < tol, "{} lie {}", m.name, rep.lie.norm2);
            assert!((rep.ricci - 0.5 * th * th).abs() < tol, "{} ricci {}", m.name, rep.ricci);
            for k in &rep.k {
                assert!((k - 0.25 * th * th).abs() < tol, "{} k {k}", m.name);
            }
        }
    }
}

#[test]
fn flat_torus_closed_forms() {
    // n = θ′ = 2: the compatible metric is Euclidean, X = (cos 2z, -sin 2z, 0)
    // and ∇X has the single entry ∇_∂z X = -2·(sin 2z, cos 2z, 0)
    let m = build_model("t3(2)", &BTreeMap::new()).unwrap();
    for p in m.sample_points(6) {
        let rep = curvature_report(&m, &p, 16, true).unwrap();
        assert!(rep.k.iter().all(|k| k.abs() < 1e-4), "{:?}", rep.k);
        assert!(rep.ricci.abs() < 1e-4);
        assert!((rep.lie.norm2 - 8.0).abs() < 1e-4);
        assert_eq!(rep.lie.zero_count, 2);
        assert!(rep.lie.orthogonal && rep.lie.alternation);
    }
    let e = chern_hamilton_energy(&m, 8).unwrap();
    let exact = 8.0 * (2.0 * PI).powi(3);
    assert!((e.energy.unwrap() - exact).abs() < 1e-3 * exact, "{:?}", e.energy);
}

#[test]
fn su2_energy_vanishes_and_volume_is_exact() {
    // unit S³ has volume 2π²; θ′ = 2 is the round metric
    let e = chern_hamilton_energy(&catalog("su2"), 8).unwrap();
    assert_eq!(e.energy, Some(0.0));
    assert!((e.volume.unwrap() - 2.0 * PI * PI).abs() < 1e-12);
}

#[test]
fn non_compact_quotients_report_density_only() {
    for name in ["heisenberg", "sl2"] {
        match chern_hamilton_energy(&catalog(name), 8) {
            Err(GeometryError::UnboundedDomain { density }) => assert!(density >= 0.0),
            other => panic!("{name}: {other:?}"),
        }
    }
}

#[test]
fn expansion_rate_is_q_on_every_contact_model() {
    for m in [catalog("su2"), catalog("sl2"), catalog("heisenberg"), catalog("t3"), catalog("ellipsoid")] {
        for p in m.sample_points(3) {
            for a in angles(8) {
                let (alg, dyn_) = expansion_rate(&m, &p, a).unwrap();
                assert!((alg - dyn_).abs() < 1e-6, "{} at {a}: {alg} vs {dyn_}", m.name);
            }
        }
    }
}

#[test]
fn zero_directions_are_orthogonal_where_the_flow_is_not_isometric() {
    for m in [catalog("sl2"), catalog("t3")] {
        for p in m.sample_points(4) {
            let l = lie_derivative_metric(&m, &p).unwrap();
            assert!(l.norm2 > 1e-10);
            assert_eq!(l.zero_count, 2, "{}", m.name);
            assert!(l.orthogonal && l.alternation, "{}", m.name);
        }
    }
}

#[test]
fn bound_is_sharp_on_sasakian_models() {
    // Ricci = θ′²/2 makes the radicand vanish and the bound equal to θ′²/4,
    // which is exactly k(e, X)
    assert!((neg_bound_rhs(2.0, 2.0) - 1.0).abs() < 1e-15);
    assert!((neg_bound_rhs(2.0, 2.0 + 1e-12) - 1.0).abs() < 1e-6);
}
