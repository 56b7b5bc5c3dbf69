//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any of them fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reebkit::czindex::{cz_index, cz_index_crossing, cz_index_rotation, verify_axioms};
use reebkit::dynamics::{
    catalog_orbits, catalog_refined, contact_pair_check, domination_check, estimate_splitting, linearize, orbit_cz,
    refine_orbit, zero_direction_planes, FrameTag,
};
use reebkit::geometry::{
    chern_hamilton_energy, curvature_report, expansion_rate, lie_derivative_metric, neg_bound_check, ricci_reeb,
};
use reebkit::models::{build_model, catalog, Model, MODEL_NAMES};
use reebkit::sampling::{random_path, PathFamily};
use reebkit::sp2core::{path_iterate, rotation_path, EndpointTag, Sp2Matrix};
use reebkit::tolerances::FLOW_RTOL;
use serde_json::json;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn contact_models() -> Vec<Model> {
    MODEL_NAMES.iter().map(|n| catalog(n)).filter(Model::is_contact).collect()
}

fn model(name: &str, params: &[(&str, f64)]) -> Model {
    let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    build_model(name, &p).unwrap()
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 * 2.0 * PI / n as f64).collect()
}

/// Roots of `λ² - tr·λ + 1` for a hyperbolic endpoint, larger first.
fn eigenvalues(a: &Sp2Matrix) -> (f64, f64) {
    let tr = a.trace();
    let d = (tr * tr - 4.0).max(0.0).sqrt();
    let (x, y) = (0.5 * (tr + d), 0.5 * (tr - d));
    if x.abs() >= y.abs() {
        (x, y)
    } else {
        (y, x)
    }
}

fn chart_or_frame_tol(m: &Model, frame: f64, chart: f64) -> f64 {
    if m.as_chart().is_some() {
        chart
    } else {
        frame
    }
}

fn axiom_suite() -> Outcome {
    let norm = cz_index(&rotation_path(PI, 1.0)).map_err(|e| e.to_string())?.index;
    ensure!(norm == 1, "normalization path has index {norm}");
    let report = verify_axioms(0, 100);
    ensure!(report.all_passed(), "axiom failures: {:?}", report.failures);

    let mut r = rng(1);
    let mut checked = 0;
    while checked < 100 {
        let phi = random_path(&mut r, PathFamily::Mixed);
        // at |tr| ≤ 4.5 the sixth power still has det = 1 to working precision
        let tr = phi.endpoint().trace().abs();
        if tr <= 2.05 || tr > 4.5 {
            continue;
        }
        let base = cz_index(&phi).map_err(|e| e.to_string())?.index;
        for m in 2..=6 {
            let it = path_iterate(&phi, m).map_err(|e| e.to_string())?;
            let got = cz_index(&it).map_err(|e| e.to_string())?.index;
            ensure!(got == m as i64 * base, "path {checked}: μ(Φ^{m}) = {got}, expected {}", m as i64 * base);
        }
        checked += 1;
    }
    Ok(format!("normalization 1; {} trials x 3 axioms; iteration m ≤ 6 on {checked} hyperbolic paths", report.trials))
}

fn crossing_vs_rotation() -> Outcome {
    let mut r = rng(2);
    let mut hist = BTreeMap::new();
    for trial in 0..500 {
        let phi = random_path(&mut r, PathFamily::Mixed);
        let a = cz_index_crossing(&phi).map_err(|e| format!("trial {trial}: {e}"))?;
        let b = cz_index_rotation(&phi).map_err(|e| format!("trial {trial}: {e}"))?;
        ensure!(a.index == b.index, "trial {trial}: crossing {} vs rotation {}", a.index, b.index);
        let parity = a.endpoint.tag.parity();
        ensure!(
            Some(a.index.rem_euclid(2) as u8) == parity,
            "trial {trial}: index {} against {:?}",
            a.index,
            a.endpoint.tag
        );
        *hist.entry(a.index).or_insert(0) += 1;
    }
    Ok(format!("500 paths agree, indices {:?}..{:?}", hist.keys().next().unwrap(), hist.keys().last().unwrap()))
}

fn sl2_model() -> Outcome {
    let m = catalog("sl2");
    let orbit = catalog_refined(&m, "axis").map_err(|e| e.to_string())?;
    let e = linearize(&orbit, FrameTag::Model, 1).map_err(|e| e.to_string())?.endpoint();
    let (hi, lo) = eigenvalues(&e);
    let g = 1f64.exp();
    ensure!((hi - g).abs() < 1e-6 && (lo - 1.0 / g).abs() < 1e-6, "eigenvalues {hi}, {lo}");
    for iterate in 1..=4 {
        let lin = linearize(&orbit, FrameTag::Splitting, iterate).map_err(|e| e.to_string())?;
        let ix = orbit_cz(&lin).map_err(|e| e.to_string())?.index;
        ensure!(ix == 0, "splitting-frame index {ix} at m = {iterate}");
    }
    let all = catalog_orbits(&m);
    for o in &all {
        let orbit = refine_orbit(&m, &o.seed, o.period, FLOW_RTOL).map_err(|e| e.to_string())?;
        for iterate in 1..=4 {
            let tag = linearize(&orbit, FrameTag::Model, iterate).map_err(|e| e.to_string())?.classify().tag;
            ensure!(
                matches!(tag, EndpointTag::PositiveHyperbolic | EndpointTag::NegativeHyperbolic),
                "{} m = {iterate}: {tag:?}",
                o.tag
            );
        }
    }
    Ok(format!("eigenvalues ({hi:.9}, {lo:.9}); index 0 for m = 1..4; {} catalog orbit(s) hyperbolic", all.len()))
}

fn su2_control() -> Outcome {
    let m = catalog("su2");
    let orbit = catalog_refined(&m, "hopf").map_err(|e| e.to_string())?;
    let lin = linearize(&orbit, FrameTag::Model, 1).map_err(|e| e.to_string())?;
    let dev = lin.endpoint().identity_deviation();
    ensure!(dev < 1e-6, "Hopf return map is {dev} from the identity");
    ensure!(lin.classify().tag == EndpointTag::Degenerate, "classified {:?}", lin.classify().tag);
    let mut lie_max = 0f64;
    let mut ricci_err = 0f64;
    for p in m.sample_points(64) {
        lie_max = lie_max.max(lie_derivative_metric(&m, &p).map_err(|e| e.to_string())?.norm2);
        ricci_err = ricci_err.max((ricci_reeb(&m, &p).map_err(|e| e.to_string())?.twice_det - 2.0).abs());
    }
    ensure!(lie_max < 1e-10, "‖ℒ_X g‖² reaches {lie_max}");
    ensure!(ricci_err < 1e-8, "Ricci(X) off by {ricci_err}");
    let energy = chern_hamilton_energy(&m, 16).map_err(|e| e.to_string())?.energy;
    ensure!(energy == Some(0.0), "E(g) = {energy:?}");
    Ok(format!("identity deviation {dev:.1e}; lie ≤ {lie_max:.1e}; Ricci error {ricci_err:.1e}; E = 0"))
}

fn curvature_cross_validation() -> Outcome {
    let mut lines = Vec::new();
    for m in contact_models() {
        let tol = chart_or_frame_tol(&m, 1e-6, 1e-4);
        let mut worst = 0f64;
        for p in m.sample_points(16) {
            let rep = curvature_report(&m, &p, 64, true).map_err(|e| format!("{}: {e}", m.name))?;
            let jac = rep.k_jacobi.as_ref().ok_or("no Jacobi route")?;
            for (a, b) in rep.k.iter().zip(jac) {
                worst = worst.max((a - b).abs());
            }
            let ricci = rep.ricci_routes.sectional_sum;
            worst = worst.max((ricci - 2.0 * rep.gauss).abs()).max(rep.mean.abs());
        }
        ensure!(worst < tol, "{}: discrepancy {worst} over tolerance {tol}", m.name);
        lines.push(format!("{} {worst:.1e}", m.name));
    }
    Ok(lines.join(", "))
}

fn neg_pipeline() -> Outcome {
    let sl2 = catalog("sl2");
    let pts = sl2.sample_points(16);
    let r = neg_bound_check(&sl2, &pts, 64).map_err(|e| e.to_string())?;
    ensure!(r.holds, "bound fails on sl2 with margin {}", r.margin);
    for name in ["su2", "heisenberg"] {
        let m = catalog(name);
        let r = neg_bound_check(&m, &m.sample_points(16), 64).map_err(|e| e.to_string())?;
        ensure!(!r.holds && r.margin.abs() < 1e-8, "{name}: holds = {}, margin {}", r.holds, r.margin);
    }
    let dom = domination_check(&sl2, &sl2.sample_points(8), 20.0).map_err(|e| e.to_string())?;
    ensure!(dom.verdict && (dom.c - 2.0).abs() < 0.02, "domination C = {} verdict {}", dom.c, dom.verdict);
    let (plus, minus) = zero_direction_planes(&sl2, &pts[0]).map_err(|e| e.to_string())?;
    let pair = contact_pair_check(&sl2, plus, minus, &pts).map_err(|e| e.to_string())?;
    ensure!(pair.verdict, "bisector planes rejected: {pair:?}");
    let split = estimate_splitting(&sl2, &pts[0], 20.0).map_err(|e| e.to_string())?;
    let integrable = contact_pair_check(&sl2, split.unstable_angle, split.stable_angle, &pts).map_err(|e| e.to_string())?;
    ensure!(!integrable.verdict, "integrable planes accepted");
    Ok(format!("sl2 margin {:.3}; su2/heisenberg margin 0; C = {:.6}; contact pair true/false", r.margin, dom.c))
}

fn catmap_control() -> Outcome {
    let golden = (3.0 + 5f64.sqrt()) / 2.0;
    let plus = model("catmap", &[("sign", 1.0)]);
    let dom = domination_check(&plus, &plus.sample_points(8), 20.0).map_err(|e| e.to_string())?;
    let c_exact = 2.0 * golden.ln();
    ensure!((dom.c - c_exact).abs() < 0.02 * c_exact, "C = {} vs {c_exact}", dom.c);
    let orbit = catalog_refined(&plus, "fixed").map_err(|e| e.to_string())?;
    let (hi, lo) = eigenvalues(&linearize(&orbit, FrameTag::Model, 1).map_err(|e| e.to_string())?.endpoint());
    ensure!((hi - golden).abs() < 1e-9 && (lo - 1.0 / golden).abs() < 1e-9, "eigenvalues {hi}, {lo}");
    let minus = catalog_refined(&model("catmap", &[("sign", -1.0)]), "fixed").map_err(|e| e.to_string())?;
    let ix = |m| -> Result<i64, String> {
        let lin = linearize(&minus, FrameTag::Model, m).map_err(|e| e.to_string())?;
        Ok(orbit_cz(&lin).map_err(|e| e.to_string())?.index)
    };
    let (one, two) = (ix(1)?, ix(2)?);
    ensure!(one.rem_euclid(2) == 1 && two == 2 * one, "negative variant indices {one}, {two}");
    Ok(format!("C = {:.6} vs {c_exact:.6}; eigenvalues ok; μ = {one}, μ(γ²) = {two}", dom.c))
}

fn expansion_identity() -> Outcome {
    let mut worst = 0f64;
    let mut count = 0;
    for m in contact_models() {
        for p in m.sample_points(16) {
            for a in grid(16) {
                let (alg, dyn_) = expansion_rate(&m, &p, a).map_err(|e| format!("{}: {e}", m.name))?;
                worst = worst.max((alg - dyn_).abs());
                count += 1;
            }
        }
    }
    ensure!(worst < 1e-6, "largest gap {worst}");
    Ok(format!("{count} samples, largest gap {worst:.1e}"))
}

fn zero_direction_structure() -> Outcome {
    let mut active = 0;
    let mut total = 0;
    for m in contact_models() {
        let th = m.theta_prime().unwrap();
        let slack = chart_or_frame_tol(&m, 1e-8, 1e-4);
        for p in m.sample_points(16) {
            total += 1;
            let l = lie_derivative_metric(&m, &p).map_err(|e| e.to_string())?;
            if l.norm2 > 1e-10 {
                active += 1;
                ensure!(l.zero_count == 2 && l.orthogonal, "{} at {p:?}: {l:?}", m.name);
                ensure!(l.alternation, "{} at {p:?}: no alternation", m.name);
            }
            let ricci = ricci_reeb(&m, &p).map_err(|e| e.to_string())?.twice_det;
            ensure!(ricci <= 0.5 * th * th + slack, "{}: Ricci {ricci} above {}", m.name, 0.5 * th * th);
        }
    }
    Ok(format!("{active} of {total} points non-isometric, all with two orthogonal alternating zeros"))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_reebkit")).args(args).output().map_err(|e| e.to_string())?;
    ensure!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    Ok(o.stdout)
}

fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let specs = [
        ("index", json!({ "input": { "axioms": {} }, "overrides": { "trials": 25 } })),
        ("orbit", json!({ "model": "sl2", "seed": "axis", "frame": "splitting", "iterate": 2 })),
        ("curvature", json!({ "input": { "name": "sl2" }, "overrides": { "angles": 16 } })),
        ("anosov", json!({ "name": "sl2" })),
        ("energy", json!({ "name": "t3" })),
    ];
    for (cmd, spec) in &specs {
        let path = dir.path().join(format!("{cmd}.spec.json"));
        fs::write(&path, spec.to_string()).map_err(|e| e.to_string())?;
        let path = path.to_string_lossy().into_owned();
        let a = run_cli(&[cmd, "--spec", &path, "--seed", "7"])?;
        let b = run_cli(&[cmd, "--spec", &path, "--seed", "7"])?;
        ensure!(a == b, "{cmd}: stdout differs between runs");
        let (oa, ob) = (dir.path().join(format!("{cmd}-a")), dir.path().join(format!("{cmd}-b")));
        run_cli(&[cmd, "--spec", &path, "--seed", "7", "--out", oa.to_str().unwrap()])?;
        run_cli(&[cmd, "--spec", &path, "--seed", "7", "--out", ob.to_str().unwrap()])?;
        let (sa, sb) = (snapshot(&oa)?, snapshot(&ob)?);
        ensure!(!sa.is_empty() && sa == sb, "{cmd}: output files differ between runs");
    }
    Ok(format!("{} commands byte-identical on stdout and output files", specs.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("CZ axiom suite", axiom_suite),
        ("crossing vs rotation oracle", crossing_vs_rotation),
        ("sl2 model", sl2_model),
        ("su2 control", su2_control),
        ("curvature cross-validation", curvature_cross_validation),
        ("negative-curvature pipeline", neg_pipeline),
        ("catmap control", catmap_control),
        ("expansion-rate identity", expansion_identity),
        ("zero-direction structure", zero_direction_structure),
        ("CLI determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {:>2}  {name:<30} {detail} ({secs:.1}s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:>2}  {name:<30} {detail} ({secs:.1}s)", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
