//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p mixphase-cli --test acceptance`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mixphase::extraction::{blind_estimate, mixed_from_extrema, pure_from_extrema, Status};
use mixphase::polarimeter::{
    analytic_extrema, analyzer_extrema, find_extrema, output_intensity, pipeline_intensity,
    sweep_eta, AnalyzerMode, IntensityTrace, SweepConfig, DEFAULT_REFINE_TOL,
};
use mixphase::spinops::{su2_from_params, BlochVector, DensityOperator, SU2Params};
use mixphase::theory::{mixed_phase_visibility, pure_phase_visibility, solid_angle, geodesic_unitary, GeodesicPath};
use mixphase::vec3::{self, Vec3};
use mixphase_cli::commands::{analyzer_unitary, fullrun, FullrunArgs, StateArgs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn random_params(rng: &mut ChaCha8Rng) -> SU2Params {
    SU2Params::wrapped(
        rng.random_range(0.0..=FRAC_PI_2),
        rng.random_range(-PI..PI),
        rng.random_range(-PI..PI),
    )
    .unwrap()
}

/// cos²ξcos²δ + sin²ξsin²(ζ−η).
fn intensity_oracle(p: SU2Params, eta: f64) -> f64 {
    (p.xi.cos() * p.delta.cos()).powi(2) + (p.xi.sin() * (p.zeta - eta).sin()).powi(2)
}

/// Closed-form mixed-state cos²Φ and visibility.
fn mixed_oracle(r: f64, p: SU2Params) -> (f64, f64) {
    let (c2, s2) = (p.delta.cos().powi(2), p.delta.sin().powi(2));
    let denom = c2 + r * r * s2;
    (c2 / denom, p.xi.cos() * denom.sqrt())
}

fn sample(seed: u64, n: usize) -> Vec<(SU2Params, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let p = random_params(&mut rng);
            (p, rng.random_range(0.0..2.0 * PI))
        })
        .collect()
}

fn intensity_law() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (p, eta) in sample(1, 1000) {
        let got = pipeline_intensity(1.0, p, eta).map_err(|e| e.to_string())?;
        worst = worst.max((got - intensity_oracle(p, eta)).abs());
    }
    within_time(start.elapsed(), Duration::from_secs(1))?;
    ensure(worst <= 1e-12, || format!("max error {worst:e}"))?;
    Ok(format!("max error {worst:.1e} over 1000 samples"))
}

fn affine_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let down = DensityOperator::from_bloch(BlochVector::new(0.0, 0.0, -1.0).unwrap());
    let (mut worst_affine, mut worst_down) = (0.0f64, 0.0f64);
    for (p, eta) in sample(1, 1000) {
        let r: f64 = rng.random_range(0.0..=1.0);
        let pure = intensity_oracle(p, eta);
        let got = pipeline_intensity(r, p, eta).map_err(|e| e.to_string())?;
        worst_affine = worst_affine.max((got - ((1.0 - r) / 2.0 + r * pure)).abs());
        worst_down = worst_down.max((output_intensity(&down, p, eta) - (1.0 - pure)).abs());
    }
    ensure(worst_affine <= 1e-12 && worst_down <= 1e-12, || {
        format!("affine {worst_affine:e}, spin-down {worst_down:e}")
    })?;
    Ok(format!("affine {worst_affine:.1e}, spin-down channel {worst_down:.1e}"))
}

/// ξ over [0, π/2] and δ, ζ over (−π, π], 20 values each, times 5 polarizations.
fn grid() -> Vec<(SU2Params, f64)> {
    let mut out = Vec::with_capacity(40_000);
    for i in 0..20 {
        let xi = i as f64 * FRAC_PI_2 / 19.0;
        for j in 0..20 {
            let delta = -PI + (j + 1) as f64 * 2.0 * PI / 20.0;
            for k in 0..20 {
                let zeta = -PI + (k + 1) as f64 * 2.0 * PI / 20.0;
                let p = SU2Params::new(xi.min(FRAC_PI_2), delta, zeta).unwrap();
                for r in [0.1, 0.25, 0.5, 0.8, 1.0] {
                    out.push((p, r));
                }
            }
        }
    }
    out
}

/// Compares an estimate with the closed form; a vanishing visibility must be
/// flagged rather than given a phase.
fn check_estimate(
    cos2: Option<f64>,
    vis: Option<f64>,
    status: Status,
    r: f64,
    p: SU2Params,
    tol: f64,
) -> Result<f64, String> {
    let (c_true, v_true) = mixed_oracle(r, p);
    let ctx = || format!("r={r} xi={} delta={} zeta={}", p.xi, p.delta, p.zeta);
    match status {
        Status::Ok => {
            let c = cos2.ok_or_else(|| format!("{}: missing cos2", ctx()))?;
            let v = vis.ok_or_else(|| format!("{}: missing visibility", ctx()))?;
            let err = (c - c_true).abs().max((v - v_true).abs());
            ensure(err <= tol, || format!("{}: error {err:e}", ctx()))?;
            Ok(err)
        }
        Status::PhaseUndefined => {
            ensure(v_true < 1e-4, || format!("{}: phase_undefined at V={v_true}", ctx()))?;
            let v = vis.unwrap_or(0.0);
            ensure((v - v_true).abs() <= tol, || format!("{}: visibility {v} vs {v_true}", ctx()))?;
            Ok((v - v_true).abs())
        }
        Status::VisibilityUndetermined => Err(format!("{}: visibility_undetermined", ctx())),
    }
}

fn known_r_roundtrip() -> Outcome {
    let start = Instant::now();
    let (mut worst, mut undefined) = (0.0f64, 0usize);
    let cases = grid();
    for &(p, r) in &cases {
        let ex = analytic_extrema(r, p).map_err(|e| e.to_string())?;
        let est = mixed_from_extrema(ex.i_min, ex.i_max, r).map_err(|e| e.to_string())?;
        undefined += (est.status == Status::PhaseUndefined) as usize;
        worst = worst.max(check_estimate(est.cos2_phi, est.visibility, est.status, r, p, 1e-10)?);
    }
    within_time(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "max error {worst:.1e} over {} cases ({undefined} flagged phase_undefined)",
        cases.len()
    ))
}

fn blind_roundtrip() -> Outcome {
    let (mut worst, mut worst_r, mut worst_identity) = (0.0f64, 0.0f64, 0.0f64);
    let cases = grid();
    for &(p, r) in &cases {
        let ex = analytic_extrema(r, p).map_err(|e| e.to_string())?;
        let (t_min, t_max) =
            analyzer_extrema(r, &analyzer_unitary(p), AnalyzerMode::Analytic).map_err(|e| e.to_string())?;
        let (est, r_hat) = blind_estimate(ex.i_min, ex.i_max, t_min, t_max).map_err(|e| e.to_string())?;
        worst_r = worst_r.max((r_hat - r).abs());
        worst = worst.max(check_estimate(est.cos2_phi, est.visibility, est.status, r, p, 1e-10)?);

        let known = mixed_from_extrema(ex.i_min, ex.i_max, r_hat).map_err(|e| e.to_string())?;
        ensure(known.status == est.status, || format!("status mismatch at {p:?} r={r}"))?;
        let diff = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        };
        worst_identity = worst_identity
            .max(diff(est.cos2_phi, known.cos2_phi))
            .max(diff(est.visibility, known.visibility));
    }
    ensure(worst_r <= 1e-10, || format!("r error {worst_r:e}"))?;
    ensure(worst_identity <= 1e-12, || format!("identity error {worst_identity:e}"))?;
    Ok(format!(
        "r error {worst_r:.1e}, estimate error {worst:.1e}, identity {worst_identity:.1e}"
    ))
}

fn pure_limit() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let ex = analytic_extrema(1.0, p).map_err(|e| e.to_string())?;
        let pure = pure_from_extrema(ex.i_min, ex.i_max).map_err(|e| e.to_string())?;
        let mixed = mixed_from_extrema(ex.i_min, ex.i_max, 1.0).map_err(|e| e.to_string())?;
        ensure(pure.status == mixed.status, || format!("status mismatch at {p:?}"))?;
        for (a, b) in [(pure.cos2_phi, mixed.cos2_phi), (pure.visibility, mixed.visibility)] {
            if let (Some(a), Some(b)) = (a, b) {
                worst = worst.max((a - b).abs());
            }
        }
        let u = su2_from_params(p);
        let (tp, tm) = (pure_phase_visibility(&u), mixed_phase_visibility(1.0, &u).map_err(|e| e.to_string())?);
        worst = worst.max((tp.nu - tm.visibility).abs());
        if let (Some(a), Some(b)) = (tp.cos2_phi(), tm.cos2_phi()) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max difference {worst:e}"))?;
    Ok(format!("max difference {worst:.1e} over 1000 instances"))
}

fn degenerate_limits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p = random_params(&mut rng);
        let cfg = SweepConfig::new(64, DEFAULT_REFINE_TOL).unwrap();
        for i in sweep_eta(0.0, p, &cfg).map_err(|e| e.to_string())?.intensities() {
            worst = worst.max((i - 0.5).abs());
        }
        let ex = analytic_extrema(0.0, p).map_err(|e| e.to_string())?;
        worst = worst.max((ex.i_min - 0.5).abs()).max((ex.i_max - 0.5).abs());
        let (t_min, t_max) =
            analyzer_extrema(0.0, &analyzer_unitary(p), AnalyzerMode::Analytic).map_err(|e| e.to_string())?;
        for est in [
            mixed_from_extrema(ex.i_min, ex.i_max, 0.0).map_err(|e| e.to_string())?,
            blind_estimate(ex.i_min, ex.i_max, t_min, t_max).map_err(|e| e.to_string())?.0,
        ] {
            ensure(est.status == Status::VisibilityUndetermined && est.cos2_phi == Some(1.0), || {
                format!("r = 0 gave {est:?}")
            })?;
        }
    }

    let p = SU2Params::new(FRAC_PI_2, 0.4, -1.1).unwrap();
    let ex = analytic_extrema(1.0, p).map_err(|e| e.to_string())?;
    worst = worst.max(ex.i_min.abs()).max((ex.i_max - 1.0).abs());
    for est in [
        pure_from_extrema(ex.i_min, ex.i_max).map_err(|e| e.to_string())?,
        mixed_from_extrema(ex.i_min, ex.i_max, 1.0).map_err(|e| e.to_string())?,
    ] {
        ensure(est.status == Status::PhaseUndefined, || format!("xi = pi/2 gave {est:?}"))?;
    }
    ensure(worst <= 1e-12, || format!("forward model error {worst:e}"))?;
    Ok(format!("forward model error {worst:.1e}; statuses as required"))
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let az: f64 = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).sqrt();
    [s * az.cos(), s * az.sin(), z]
}

/// Oriented area by fanning triangles from the first vertex (Van Oosterom and
/// Strackee). Determined modulo 4π.
fn fan_area(vertices: &[Vec3]) -> f64 {
    let a = vertices[0];
    vertices[1..]
        .windows(2)
        .map(|w| {
            let (b, c) = (w[0], w[1]);
            let num = vec3::dot(a, vec3::cross(b, c));
            let den = 1.0 + vec3::dot(a, b) + vec3::dot(b, c) + vec3::dot(c, a);
            2.0 * num.atan2(den)
        })
        .sum()
}

fn random_polygon(rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let z = [0.0, 0.0, 1.0];
    'retry: loop {
        let k = rng.random_range(2..=5);
        let mut v = vec![z];
        for _ in 0..k {
            v.push(random_unit(rng));
        }
        v.push(z);
        for w in v.windows(2) {
            let d = vec3::dot(w[0], w[1]);
            if !(-0.95..=0.95).contains(&d) {
                continue 'retry;
            }
        }
        return v;
    }
}

fn geometric_phase() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let vertices = random_polygon(&mut rng);
        let omega = fan_area(&vertices);
        let path = GeodesicPath::new(vertices).map_err(|e| e.to_string())?;
        let u = geodesic_unitary(&path);
        let (c, s) = ((omega / 2.0).cos().powi(2), (omega / 2.0).sin().powi(2));
        let pure = pure_phase_visibility(&u).cos2_phi().ok_or("pure phase undefined")?;
        worst = worst.max((pure - c).abs());
        for r in [0.3, 0.7, 1.0] {
            let mixed = mixed_phase_visibility(r, &u)
                .map_err(|e| e.to_string())?
                .cos2_phi()
                .ok_or("mixed phase undefined")?;
            // 1/(1 + r²tan²(Ω/2)), written to stay finite at Ω = π.
            worst = worst.max((mixed - c / (c + r * r * s)).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("random polygons: max error {worst:e}"))?;

    let octant = GeodesicPath::new(vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        .map_err(|e| e.to_string())?;
    let omega = solid_angle(&octant).map_err(|e| e.to_string())?.omega;
    let c = pure_phase_visibility(&geodesic_unitary(&octant)).cos2_phi().ok_or("octant phase undefined")?;
    let oct_err = (omega.abs() - FRAC_PI_2).abs().max((c - 0.5).abs());
    ensure(oct_err <= 1e-12, || format!("octant error {oct_err:e}"))?;
    Ok(format!("polygons {worst:.1e}, octant {oct_err:.1e}"))
}

fn finite_statistics() -> Outcome {
    let start = Instant::now();
    let seeds = 200u64;
    let mut hits = 0u64;
    let mut errors = Vec::with_capacity(seeds as usize);
    for seed in 0..seeds {
        let args = FullrunArgs {
            state: StateArgs {
                xi: PI / 3.0,
                delta: PI / 4.0,
                zeta: 0.7,
                r: 0.8,
                degrees: false,
            },
            samples: 1024,
            analyzer_samples: 512,
            shots: Some(100_000),
            seed,
            tol: 0.02,
            out: None,
            no_timestamp: true,
        };
        let report = fullrun(&args).map_err(|e| e.to_string())?;
        let truth = report.theory.cos2_phi.ok_or("theory phase undefined")?;
        let err = report.measured.cos2_phi.map_or(f64::INFINITY, |c| (c - truth).abs());
        hits += (err <= 0.02) as u64;
        errors.push(err);
    }
    within_time(start.elapsed(), Duration::from_secs(60))?;
    errors.sort_by(f64::total_cmp);
    let frac = hits as f64 / seeds as f64;
    ensure(frac >= 0.95, || format!("only {hits}/{seeds} within 0.02"))?;
    Ok(format!(
        "{hits}/{seeds} within 0.02 (median {:.1e}, worst {:.1e})",
        errors[errors.len() / 2],
        errors[errors.len() - 1]
    ))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mixphase"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })?;
    Ok(out.stdout)
}

fn json_f64(v: &serde_json::Value, key: &str) -> Result<f64, String> {
    v[key].as_f64().ok_or_else(|| format!("missing {key}"))
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let file = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let state = ["--xi", "0.9", "--delta", "-1.3", "--zeta", "2.2", "--r", "0.65"];

    for (tag, extra) in [("a", &["--shots", "20000", "--seed", "11"][..]), ("b", &["--shots", "20000", "--seed", "11"][..])] {
        let (out, aout) = (file(&format!("{tag}.csv")), file(&format!("{tag}_an.csv")));
        let mut args = vec!["simulate"];
        args.extend(state);
        args.extend(extra);
        args.extend(["--samples", "256", "--analyzer-samples", "128", "--out", &out, "--analyzer-out", &aout]);
        run_cli(&args)?;
    }
    let read = |name: &str| std::fs::read(dir.path().join(name)).map_err(|e| e.to_string());
    ensure(read("a.csv")? == read("b.csv")?, || "eta CSV differs between identical seeds".into())?;
    ensure(read("a_an.csv")? == read("b_an.csv")?, || "analyzer CSV differs between identical seeds".into())?;

    let mut full = vec!["fullrun"];
    full.extend(state);
    full.extend(["--shots", "5000", "--seed", "3", "--tol", "1", "--samples", "256", "--analyzer-samples", "128", "--no-timestamp"]);
    ensure(run_cli(&full)? == run_cli(&full)?, || "fullrun JSON differs between identical seeds".into())?;

    // Noiseless trace through the binary versus the same steps in-process.
    let (trace_path, an_path) = (file("clean.csv"), file("clean_an.csv"));
    let mut sim = vec!["simulate"];
    sim.extend(state);
    sim.extend(["--samples", "256", "--analyzer-samples", "128", "--out", &trace_path, "--analyzer-out", &an_path]);
    run_cli(&sim)?;
    compare_extract(&["extract", "--trace", &trace_path, "--r", "0.65"], Path::new(&trace_path), None, Some(0.65))?;
    compare_extract(&["extract", "--trace", &trace_path, "--analyzer-trace", &an_path], Path::new(&trace_path), Some(Path::new(&an_path)), None)?;
    // With counts the measurement is the count frequencies.
    compare_extract(&["extract", "--trace", &file("a.csv"), "--analyzer-trace", &file("a_an.csv")], &dir.path().join("a.csv"), Some(&dir.path().join("a_an.csv")), None)?;
    Ok("identical bytes for identical seeds; extract matches in-process bit-for-bit".into())
}

fn compare_extract(args: &[&str], trace: &Path, analyzer: Option<&Path>, r: Option<f64>) -> Result<(), String> {
    let v: serde_json::Value = serde_json::from_slice(&run_cli(args)?).map_err(|e| e.to_string())?;
    let measured = |p: &Path| -> Result<IntensityTrace, String> {
        let loaded = mixphase_cli::io::read_trace(p).map_err(|e| e.to_string())?;
        loaded.measured().map_err(|e| e.to_string())
    };
    let ex = find_extrema(&measured(trace)?, None).map_err(|e| e.to_string())?;
    let est = match (analyzer, r) {
        (Some(a), _) => {
            let ax = find_extrema(&measured(a)?, None).map_err(|e| e.to_string())?;
            blind_estimate(ex.i_min, ex.i_max, ax.i_min, ax.i_max).map_err(|e| e.to_string())?.0
        }
        (None, Some(r)) => mixed_from_extrema(ex.i_min, ex.i_max, r).map_err(|e| e.to_string())?,
        (None, None) => pure_from_extrema(ex.i_min, ex.i_max).map_err(|e| e.to_string())?,
    };
    let pairs = [
        ("i_min_rho", Some(ex.i_min)),
        ("i_max_rho", Some(ex.i_max)),
        ("cos2_phi", est.cos2_phi),
        ("visibility", est.visibility),
    ];
    for (key, want) in pairs {
        let want = want.ok_or_else(|| format!("{key} undefined in-process"))?;
        let got = json_f64(&v, key)?;
        ensure(got.to_bits() == want.to_bits(), || format!("{key}: cli {got:e} vs in-process {want:e}"))?;
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("intensity law", intensity_law),
        ("affine law", affine_law),
        ("known-r round trip", known_r_roundtrip),
        ("blind round trip", blind_roundtrip),
        ("pure limit", pure_limit),
        ("degenerate limits", degenerate_limits),
        ("geometric phase", geometric_phase),
        ("finite statistics", finite_statistics),
        ("cli determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {}. {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {}. {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
