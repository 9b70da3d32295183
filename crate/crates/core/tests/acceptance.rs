//! Acceptance run: one PASS/FAIL line per criterion, then a single assertion.
//!
//! `cargo test --release -p kobharm --test acceptance -- --nocapture`

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use kobharm::chart::metrics::PerturbedEuclidean;
use kobharm::chart::Chart;
use kobharm::disc::{laplacian_of_composition, poincare_radius, DiscGrid, DiscMap, Jet1};
use kobharm::field::{NormSquared, Quadratic, ScalarField};
use kobharm::kobayashi::{
    approach_path, boundary_scan, c_constant, holder_probe, hyperbolicity_diagnostics, kobayashi_ball_probe,
    kobayashi_distance, localize, metric_estimate, n_constant, negative_harmonic_schwarz, poisson_negative, royden_upper,
    BarrierConfig, DomainSpec, GraphConfig, HyperbolicityConfig, Localization, UpperConfig, XiMode,
};
use kobharm::mpsh::is_mpsh_at;
use kobharm::scenario::{landing_disc, run_scenario, Experiment, Scenario};
use kobharm::solver::{
    conformal_reparametrize, jet_mismatch, match_jet, solve_graph_disc, stationary_residual, ConformalConfig, SolverConfig,
};
use kobharm::Result;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String)>;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn perturbed_chart(n: usize) -> Chart {
    Chart::new(vec![(-1.5, 1.5); n], Arc::new(PerturbedEuclidean::new(n, 0.05, vec![0.0; n], 1.0))).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let chart = Chart::euclidean(3, 2.0);
    let jet = Jet1::from_plane(&chart, v(&[0.2, -0.1, 0.3]), &v(&[1.0, 0.5, 0.0]), &v(&[0.0, 0.3, 1.0]), 1.0)?;
    let gd = solve_graph_disc(&chart, &jet, &SolverConfig::default())?;
    let res = stationary_residual(&chart, &gd)?;
    let worst = res.iter().flat_map(|r| r.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst == 0.0 && gd.profile_sup() == 0.0 && secs < 1.0,
        format!("residual sup {worst:e}, profile sup {:e}, {secs:.3} s", gd.profile_sup()),
    ))
}

/// Coarse-node values of `fine − coarse` in sup norm; ring `i`, angle `j` of the
/// coarse grid is ring `2i`, angle `2j` of the fine one.
fn profile_change(coarse: &[Vec<f64>], gc: &DiscGrid, fine: &[Vec<f64>], gf: &DiscGrid) -> f64 {
    let mut m = 0.0f64;
    for (c, f) in coarse.iter().zip(fine) {
        m = m.max((c[0] - f[0]).abs());
        for i in 1..=gc.radial_nodes() {
            for j in 0..gc.angular_nodes() {
                m = m.max((c[gc.index(i, j)] - f[gf.index(2 * i, 2 * j)]).abs());
            }
        }
    }
    m
}

fn criterion_2() -> Outcome {
    let chart = perturbed_chart(3);
    let jet = Jet1::from_plane(&chart, v(&[0.1, 0.0, 0.2]), &v(&[1.0, 0.0, 0.0]), &v(&[0.0, 1.0, 0.0]), 1.0)?;
    let a = solve_graph_disc(&chart, &jet, &SolverConfig::default())?;
    // finer levels at the same t; their residual floor sits near 1e−9 at 256×512
    let refine = |nr: usize| {
        let mut cfg = SolverConfig::default().with_resolution(nr, 2 * nr);
        cfg.t_schedule = vec![a.report.t_used];
        cfg.newton_tol = 1e-9;
        solve_graph_disc(&chart, &jet, &cfg)
    };
    let (b, c) = (refine(128)?, refine(256)?);
    let d1 = profile_change(&a.profile, &a.grid, &b.profile, &b.grid);
    let d2 = profile_change(&b.profile, &b.grid, &c.profile, &c.grid);
    let ratio = d1 / d2;
    let residual = a.report.final_residual;
    Ok((
        residual < 1e-8 && a.report.t_used > 0.0 && (3.0..=5.0).contains(&ratio),
        format!(
            "64x128 residual {residual:e}, t = {}/{}/{}, sup {:e}/{:e}/{:e}, change {d1:e} then {d2:e}, ratio {ratio:.3}",
            a.report.t_used,
            b.report.t_used,
            c.report.t_used,
            a.profile_sup(),
            b.profile_sup(),
            c.profile_sup()
        ),
    ))
}

/// Minimum pair trace by sampling g-orthonormal frames, then projected gradient
/// descent on the Stiefel manifold in whitened coordinates.
fn sampled_pair_trace(h: &DMatrix<f64>, g: &DMatrix<f64>, rng: &mut ChaCha8Rng, frames: usize) -> f64 {
    let n = h.nrows();
    let l = g.clone().cholesky().unwrap().l();
    let linv = l.try_inverse().unwrap();
    let m = &linv * h * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let trace = |w: &DMatrix<f64>| (w.transpose() * &m * w).trace();
    let orth = |w: DMatrix<f64>| w.qr().q();
    let mut best = orth(DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0)));
    let mut best_val = trace(&best);
    for _ in 1..frames {
        let w = orth(DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0)));
        let t = trace(&w);
        if t < best_val {
            best = w;
            best_val = t;
        }
    }
    let step = 0.25 / m.norm().max(1e-12);
    for _ in 0..20_000 {
        let grad = &m * &best * 2.0;
        let tangent = &grad - &best * (best.transpose() * &grad);
        best = orth(&best - tangent * step);
    }
    best_val.min(trace(&best))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for n in [3usize, 4] {
        let chart = perturbed_chart(n);
        for _ in 0..20 {
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let lin = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let rho = Quadratic::new(a, lin, rng.random_range(-1.0..1.0));
            let p = DVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5));
            let eig = is_mpsh_at(&chart, &rho, &p)?.min_pair_trace;
            let h = chart.hessian_at(&rho, &p)?.matrix().clone();
            let g = chart.metric_at(&p)?;
            let sampled = sampled_pair_trace(&h, &g, &mut rng, 10_000);
            worst = worst.max((eig - sampled).abs());
        }
    }
    Ok((worst <= 1e-4, format!("largest |eigen − sampled| over 40 quadratics {worst:e}")))
}

/// `Δ(ρ∘u)(0)` for `u` rescaled to unit g-speed at the center.
fn unit_laplacian(chart: &Chart, rho: &dyn ScalarField, u: &DiscMap) -> Result<f64> {
    let s = chart.norm_at(&u.center(), &u.ux(0))?;
    Ok(laplacian_of_composition(chart, rho, u, 0, 1e-6)? / (s * s))
}

fn criterion_4() -> Outcome {
    let fields: Vec<(&str, Box<dyn ScalarField>)> = vec![
        ("|x|²", Box::new(NormSquared::centered(3))),
        ("x₁²", Box::new(Quadratic::diagonal(&[1.0, 0.0, 0.0]))),
        (
            "x₁x₂",
            Box::new(Quadratic::new(
                DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]),
                DVector::zeros(3),
                0.0,
            )),
        ),
    ];
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for (label, chart) in [("flat", Chart::euclidean(3, 1.5)), ("perturbed", perturbed_chart(3))] {
        let jet = Jet1::from_plane(&chart, v(&[0.1, 0.0, 0.2]), &v(&[1.0, 0.0, 0.3]), &v(&[0.0, 1.0, 0.2]), 1.0)?;
        let conf = ConformalConfig { harmonic_tol: 1e-9, ..Default::default() };
        let a = match_jet(&chart, &jet, &SolverConfig::default().with_resolution(32, 64))?;
        let a = conformal_reparametrize(&chart, &a, &conf)?.map;
        let mut cfg_b = SolverConfig::default().with_resolution(48, 96);
        cfg_b.radius = Some(0.4);
        let b = match_jet(&chart, &jet, &cfg_b)?;
        let b = conformal_reparametrize(&chart, &b, &conf)?.map;
        for u in [&a, &b] {
            let (dc, angle) = jet_mismatch(&chart, u, &jet)?;
            if dc > 1e-8 || angle > 1e-8 {
                return Ok((false, format!("{label}: disc misses the jet ({dc:e}, {angle:e})")));
            }
        }
        for (name, rho) in &fields {
            let (la, lb) = (unit_laplacian(&chart, rho.as_ref(), &a)?, unit_laplacian(&chart, rho.as_ref(), &b)?);
            worst = worst.max((la - lb).abs());
            detail.push(format!("{label} {name}: {la:.6}/{lb:.6}"));
        }
    }
    Ok((worst <= 5e-3, format!("max difference {worst:e}; {}", detail.join(", "))))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let rel = |x: f64, y: f64| if y == 0.0 { x.abs() } else { ((x - y) / y).abs() };
    for _ in 0..100 {
        let a = rng.random_range(0.1..5.0);
        let b = rng.random_range(0.1..5.0);
        let eps = rng.random_range(0.1..4.0);
        let c3 = rng.random_range(0.0..3.0);
        let n = n_constant(a, b, eps);
        let n_ref = (-a - a * b / (2.0 * eps)).exp();
        let r = poincare_radius(n)?;
        let c = c_constant(a, c3, eps, r);
        let c_ref = (-a / 2.0).exp() * (-c3 / (2.0 * eps)).exp() * n_ref.tanh();
        worst = worst.max(rel(n, n_ref)).max(rel(r, n_ref.tanh())).max(rel(c, c_ref));
    }
    let barrier_src = include_str!("../src/kobayashi/barrier.rs");
    let wired = barrier_src.contains("poincare_radius(");
    Ok((
        worst < 1e-14 && wired,
        format!("max relative error {worst:e}; barrier uses poincare_radius: {wired}"),
    ))
}

fn criterion_6(dom: &DomainSpec, loc: &Localization, bcfg: &BarrierConfig, loc_secs: f64) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ucfg = UpperConfig::default();
    let (mut bad, mut with_lower) = (0, 0);
    for _ in 0..50 {
        let w = loop {
            let x = DVector::from_fn(3, |_, _| rng.random_range(-0.9..0.9));
            if x.norm() < 0.9 {
                break x;
            }
        };
        let xi = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let est = metric_estimate(dom, &w, &xi, &ucfg, Some((loc, bcfg)))?;
        if est.lower > 0.0 {
            with_lower += 1;
        }
        if !est.bracket_holds() {
            bad += 1;
        }
    }
    let base = v(&[1.0, 0.0, 0.0]);
    let deltas: Vec<f64> = (0..7).map(|k| 10f64.powf(-1.0 - 0.5 * k as f64)).collect();
    let path = approach_path(dom, &base, &deltas)?;
    let scan = boundary_scan(dom, &base, &path, XiMode::Tangential, &ucfg, Some((loc, bcfg)))?;
    let secs = loc_secs + start.elapsed().as_secs_f64();
    Ok((
        bad == 0 && (-0.6..=-0.4).contains(&scan.slope_upper) && scan.lower_below_upper && secs < 300.0,
        format!(
            "{bad} bracket failures in 50 ({with_lower} with a positive lower bound), tangential slope {:.4} (lower {:?}), {secs:.1} s",
            scan.slope_upper, scan.slope_lower
        ),
    ))
}

fn criterion_7() -> Outcome {
    let dom = DomainSpec::euclidean_ball(2, vec![0.0; 2], 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let r = rng.random_range(0.0..0.9);
        let t = rng.random_range(0.0..2.0 * PI);
        let w = v(&[r * t.cos(), r * t.sin()]);
        let s = rng.random_range(0.0..2.0 * PI);
        let xi = v(&[s.cos(), s.sin()]) * rng.random_range(0.5..2.0);
        let exact = xi.norm() / (1.0 - w.norm_squared());
        let up = royden_upper(&dom, &w, &xi, &UpperConfig::default())?.value;
        worst = worst.max((up / exact - 1.0).abs());
    }
    let d = kobayashi_distance(&dom, &v(&[0.0, 0.0]), &v(&[0.5, 0.0]), &GraphConfig { spacing: 0.1, ..Default::default() })?;
    let derr = (d.upper / 0.5493 - 1.0).abs();
    Ok((
        worst <= 0.05 && derr <= 0.03,
        format!("metric max relative error {worst:e}; d(0, 0.5e₁) = {:.6} ({derr:.2e} from 0.5493)", d.upper),
    ))
}

fn criterion_8(dom: &DomainSpec, loc: &Localization) -> Outcome {
    let cfg = GraphConfig { spacing: 0.2, ..Default::default() };
    let q = v(&[0.1, 0.05, 0.0]);
    let mut parts = Vec::new();
    let mut ok = true;
    for frac in [0.25, 0.5] {
        let r = kobayashi_ball_probe(dom, &q, frac * loc.n, loc, &cfg)?;
        ok &= r.violations.is_empty() && r.lower_violations.is_empty();
        parts.push(format!(
            "δ = {frac}N: {} inside, {} violations, {} lower violations",
            r.inside,
            r.violations.len(),
            r.lower_violations.len()
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn criterion_9() -> Outcome {
    let deltas = [0.1, 0.01, 0.001];
    let disc = DomainSpec::euclidean_ball(2, vec![0.0; 2], 1.0)?;
    let flat = hyperbolicity_diagnostics(&disc, &v(&[0.0, 0.0]), &v(&[1.0, 0.0]), &deltas, &HyperbolicityConfig::default())?;
    let mut worst = 0.0f64;
    for row in &flat.rows {
        let depth = 1.0 - v(&row.point).norm();
        worst = worst.max((row.distance_upper / (1.0 - depth).atanh() - 1.0).abs());
    }
    let chart = perturbed_chart(3);
    let ball = DomainSpec::coordinate_ball("perturbed-ball", chart, 1.0)?;
    let rep = hyperbolicity_diagnostics(&ball, &v(&[0.0; 3]), &v(&[1.0, 0.0, 0.0]), &deltas, &HyperbolicityConfig::default())?;
    let missing: usize = rep.rows.iter().map(|r| r.failures.len()).sum();
    Ok((
        worst <= 0.05 && rep.consistent && rep.stable_within_2 && missing == 0,
        format!(
            "disc distance max relative error {worst:e}; perturbed ball consistent {}, stability ratios {:.3}/{:.3}/{:.3}/{:.3}, {missing} disc failures",
            rep.consistent, rep.stability.c_half, rep.stability.c_schwarz, rep.stability.a_lap, rep.stability.c_grad
        ),
    ))
}

fn criterion_10() -> Outcome {
    let grid = DiscGrid::new(32, 64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut violations, mut worst) = (0, 0.0f64);
    for _ in 0..100 {
        let k = rng.random_range(1..5);
        let poles: Vec<(f64, f64, f64)> = (0..k)
            .map(|_| (rng.random_range(0.05..2.0), rng.random_range(1.01..3.0), rng.random_range(0.0..2.0 * PI)))
            .collect();
        let h = poisson_negative(&grid, &poles)?;
        let c = negative_harmonic_schwarz(&grid, &h, 1e-9)?;
        if !c.holds || c.gradient > 2.0 * c.value.abs() {
            violations += 1;
        }
        worst = worst.max(c.ratio);
    }
    Ok((violations == 0, format!("{violations} violations, largest |∇h(0)|/|h(0)| = {worst:.4}")))
}

fn criterion_11() -> Outcome {
    let dom = DomainSpec::euclidean_ball(3, vec![0.0; 3], 1.0)?;
    let grid = DiscGrid::new(64, 256)?;
    let root = holder_probe(&dom, &landing_disc(&dom, grid.clone(), true)?, (-0.5, 0.5))?;
    let smooth = holder_probe(&dom, &landing_disc(&dom, grid, false)?, (-0.5, 0.5))?;
    Ok((
        (0.45..=0.6).contains(&root.alpha) && smooth.alpha >= 0.95,
        format!("√-landing α = {:.4}, smooth α = {:.4}", root.alpha, smooth.alpha),
    ))
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir()?;
    let mut sc = Scenario::new(Experiment::Kobayashi);
    sc.seed = 1234;
    sc.parameters = serde_json::json!({"random": 4, "lower": false});
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let o = run_scenario(&sc, &out);
        if o.status != 0 {
            return Ok((false, format!("run {k} exited {}: {}", o.status, o.summary)));
        }
        outputs.push((std::fs::read(out.join("results.csv"))?, std::fs::read(out.join("plot.csv")).ok()));
    }
    let same = outputs[0] == outputs[1];
    Ok((same, format!("results.csv {} bytes, identical: {same}", outputs[0].0.len())))
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let ball = DomainSpec::euclidean_ball(3, vec![0.0; 3], 1.0).unwrap();
    let bcfg = BarrierConfig::default();
    let loc = localize(&ball, &bcfg).unwrap();
    let loc_secs = start.elapsed().as_secs_f64();

    // KOBHARM_CRITERIA=2,4 runs a subset
    let only: Option<Vec<usize>> = std::env::var("KOBHARM_CRITERIA")
        .ok()
        .map(|v| v.split(',').filter_map(|k| k.trim().parse().ok()).collect());
    let wanted = |k: usize| only.as_ref().is_none_or(|o| o.contains(&k));
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut run = |k: usize, f: &dyn Fn() -> Outcome| {
        if wanted(k) {
            results.push((k, f()));
        }
    };
    run(1, &criterion_1);
    run(2, &criterion_2);
    run(3, &criterion_3);
    run(4, &criterion_4);
    run(5, &criterion_5);
    run(6, &|| criterion_6(&ball, &loc, &bcfg, loc_secs));
    run(7, &criterion_7);
    run(8, &|| criterion_8(&ball, &loc));
    run(9, &criterion_9);
    run(10, &criterion_10);
    run(11, &criterion_11);
    run(12, &criterion_12);
    println!();
    let mut failed = Vec::new();
    for (k, r) in results {
        match r {
            Ok((true, msg)) => println!("criterion {k:2}: PASS  {msg}"),
            Ok((false, msg)) => {
                println!("criterion {k:2}: FAIL  {msg}");
                failed.push(k);
            }
            Err(e) => {
                println!("criterion {k:2}: FAIL  error: {e}");
                failed.push(k);
            }
        }
    }
    println!("total {:.1} s", start.elapsed().as_secs_f64());
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
