//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Runs as a plain binary (`harness = false`) so the lines come out
//! in order and unbuffered.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cfqmc::report::bench_csv;
use cfqmc::study::{run_campaign_parallel, GpStudy};
use cfqmc_core::bench::{run_campaign, CampaignConfig, CellKey, ConvergenceTable, Sequence};
use cfqmc_core::estimators::{cf_estimate, optimal_split, split_budget, worst_case_error_detailed};
use cfqmc_core::genz::random_genz;
use cfqmc_core::gp::{
    choose_subset, gp_predictive_mean_full, gp_predictive_mean_sor, synthetic_problem, GpConfig,
};
use cfqmc_core::interpolate::fit;
use cfqmc_core::kernels::{kernel_integral_1d, phi};
use cfqmc_core::points::{halton, midpoint_grid, random_shift, Generator, PointSet, Provenance};
use cfqmc_core::rng::stream;
use cfqmc_core::{GenzFamily, Integrand, KernelSpec, Method, Point, Smoothness};
use common::{integrate, integrate_2d, mean_and_se};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(start: Instant, limit: Duration, detail: String) -> Outcome {
    let spent = start.elapsed();
    ensure(
        spent <= limit,
        format!(
            "{detail}; {:.1} s of {} s",
            spent.as_secs_f64(),
            limit.as_secs()
        ),
    )
}

fn values(nodes: &PointSet, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    nodes.iter().map(f).collect()
}

fn kernel_closed_forms() -> Outcome {
    let start = Instant::now();
    let mut worst_single = 0.0f64;
    let mut worst_double = 0.0f64;
    for k in Smoothness::ALL {
        for rho in [0.5, 1.0] {
            for i in 0..=100 {
                let y = i as f64 / 100.0;
                let oracle = integrate(
                    |x| phi(k, (x - y).abs() / rho),
                    0.0,
                    1.0,
                    &[y - rho, y, y + rho],
                );
                worst_single =
                    worst_single.max((kernel_integral_1d(k, rho, y).unwrap() - oracle).abs());
            }
            let axis = integrate(
                |y| {
                    integrate(
                        |x| phi(k, (x - y).abs() / rho),
                        0.0,
                        1.0,
                        &[y - rho, y, y + rho],
                    )
                },
                0.0,
                1.0,
                &[rho, 1.0 - rho],
            );
            for dim in 1..=3 {
                let spec = KernelSpec::new(k, dim, rho).unwrap();
                worst_double =
                    worst_double.max((spec.double_integral() - axis.powi(dim as i32)).abs());
            }
        }
    }
    // phi_{1,k} = I^k[(1 - t)^{k+1}] with I[p](r) = int_r^1 t p(t) dt.
    let op = |p: &dyn Fn(f64) -> f64, r: f64| integrate(|t| t * p(t), r, 1.0, &[]);
    let raw1 = |r: f64| op(&|t: f64| (1.0 - t).powi(2), r);
    let raw2 = |r: f64| op(&|s: f64| op(&|t: f64| (1.0 - t).powi(3), s), r);
    let (n1, n2) = (raw1(0.0), raw2(0.0));
    let worst_recursion = (0..100)
        .map(|i| i as f64 / 100.0)
        .map(|r| {
            (phi(Smoothness::K1, r) - raw1(r) / n1)
                .abs()
                .max((phi(Smoothness::K2, r) - raw2(r) / n2).abs())
        })
        .fold(0.0, f64::max);
    let ok = worst_single <= 1e-10 && worst_double <= 1e-10 && worst_recursion <= 1e-8;
    let detail = format!(
        "single {worst_single:.1e}, double {worst_double:.1e} (tol 1e-10); recursion {worst_recursion:.1e} (tol 1e-8)"
    );
    if ok {
        within(start, Duration::from_secs(10), detail)
    } else {
        Err(detail)
    }
}

fn interpolation_exactness() -> Outcome {
    let start = Instant::now();
    let mut worst_residual = 0.0f64;
    let sets = [
        midpoint_grid(256, 1).unwrap(),
        midpoint_grid(16, 2).unwrap(),
        halton(256, 3, true).unwrap(),
    ];
    for (i, nodes) in sets.iter().enumerate() {
        let dim = nodes.dim();
        let target = random_genz(GenzFamily::Oscillatory, dim, 40 + i as u64, 4.0).unwrap();
        let y = values(nodes, |x| target.eval(x));
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let spec = KernelSpec::new(Smoothness::K1, dim, 1.0).unwrap();
        let s = fit(&spec, nodes, &y, 1e-10).unwrap();
        for (u, v) in nodes.iter().zip(&y) {
            worst_residual = worst_residual.max((s.evaluate(u).unwrap() - v).abs() / scale);
        }
    }
    let mut worst_integral = 0.0f64;
    let kinks = |nodes: &PointSet, axis: usize, rho: f64| -> Vec<f64> {
        nodes
            .iter()
            .flat_map(|u| [u[axis] - rho, u[axis], u[axis] + rho])
            .collect()
    };
    for rho in [0.35, 1.0] {
        let nodes = halton(12, 1, true).unwrap();
        let target = random_genz(GenzFamily::Gaussian, 1, 3, 5.0).unwrap();
        let spec = KernelSpec::new(Smoothness::K1, 1, rho).unwrap();
        let s = fit(&spec, &nodes, &values(&nodes, |x| target.eval(x)), 1e-10).unwrap();
        let oracle = integrate(
            |x| s.evaluate(&[x]).unwrap(),
            0.0,
            1.0,
            &kinks(&nodes, 0, rho),
        );
        worst_integral = worst_integral.max((s.exact_integral() - oracle).abs());

        let nodes = halton(20, 2, true).unwrap();
        let target = random_genz(GenzFamily::ProductPeak, 2, 9, 6.0).unwrap();
        let spec = KernelSpec::new(Smoothness::K1, 2, rho).unwrap();
        let s = fit(&spec, &nodes, &values(&nodes, |x| target.eval(x)), 1e-10).unwrap();
        let oracle = integrate_2d(
            |x, y| s.evaluate(&[x, y]).unwrap(),
            &kinks(&nodes, 0, rho),
            &kinks(&nodes, 1, rho),
        );
        worst_integral = worst_integral.max((s.exact_integral() - oracle).abs());
    }
    let ok = worst_residual <= 1e-8 && worst_integral <= 1e-8;
    let detail = format!(
        "node residual {worst_residual:.1e} relative (k=1, rho=1); integral {worst_integral:.1e}"
    );
    if ok {
        within(start, Duration::from_secs(30), detail)
    } else {
        Err(detail)
    }
}

fn worst_case_error() -> Outcome {
    let start = Instant::now();
    let single = PointSet::from_points(
        &[vec![0.5]],
        Provenance::new(Generator::External("hand".into()), 0),
    )
    .unwrap();
    let spec = KernelSpec::new(Smoothness::K0, 1, 1.0).unwrap();
    let hand =
        (worst_case_error_detailed(&spec, &single).unwrap().value - (1.0f64 / 6.0).sqrt()).abs();
    let mut rng = stream(2024, &[3]);
    let cases = [
        (Smoothness::K0, 1, 1.0, 8),
        (Smoothness::K1, 1, 0.5, 5),
        (Smoothness::K1, 2, 1.0, 16),
        (Smoothness::K2, 2, 0.7, 10),
        (Smoothness::K1, 3, 1.0, 12),
    ];
    let mut worst_t = 0.0f64;
    for (k, dim, rho, n) in cases {
        let spec = KernelSpec::new(k, dim, rho).unwrap();
        let ps = PointSet::uniform(n, dim, &mut rng).unwrap();
        let nf = n as f64;
        let pairs: f64 = ps
            .iter()
            .flat_map(|a| ps.iter().map(move |b| (a, b)))
            .map(|(a, b)| spec.eval(a, b).unwrap())
            .sum();
        let (mut x, mut y) = (vec![0.0; dim], vec![0.0; dim]);
        let terms: Vec<f64> = (0..1_000_000)
            .map(|_| {
                x.iter_mut().for_each(|v| *v = rng.gen());
                y.iter_mut().for_each(|v| *v = rng.gen());
                let cross: f64 = ps.iter().map(|p| spec.eval(p, &x).unwrap()).sum();
                spec.eval(&x, &y).unwrap() - 2.0 * cross / nf + pairs / (nf * nf)
            })
            .collect();
        let (oracle, se) = mean_and_se(&terms);
        let closed = worst_case_error_detailed(&spec, &ps).unwrap().squared_raw;
        worst_t = worst_t.max((closed - oracle).abs() / se);
    }
    let detail = format!("single point off by {hand:.1e}; worst MMD gap {worst_t:.2} oracle SE");
    if hand <= 1e-12 && worst_t <= 3.0 {
        within(start, Duration::from_secs(60), detail)
    } else {
        Err(detail)
    }
}

fn zero_mean_control_functional() -> Outcome {
    let mut rng = stream(17, &[4]);
    let families = [
        GenzFamily::Oscillatory,
        GenzFamily::ProductPeak,
        GenzFamily::Gaussian,
        GenzFamily::Continuous,
        GenzFamily::CornerPeak,
    ];
    let mut worst_t = 0.0f64;
    for (i, family) in families.into_iter().enumerate() {
        let nodes = midpoint_grid(6, 2).unwrap();
        let target = random_genz(family, 2, i as u64, family.default_difficulty()).unwrap();
        let spec = KernelSpec::new(Smoothness::ALL[i % 3], 2, 0.5).unwrap();
        let s = fit(&spec, &nodes, &values(&nodes, |x| target.eval(x)), 1e-10).unwrap();
        let psi: Vec<f64> = (0..1_000_000)
            .map(|_| s.control_functional(&[rng.gen(), rng.gen()]).unwrap())
            .collect();
        let (mean, se) = mean_and_se(&psi);
        worst_t = worst_t.max(mean.abs() / se);
    }
    ensure(
        worst_t <= 3.0,
        format!("worst |mean psi| = {worst_t:.2} SE over 5 surrogates"),
    )
}

fn shift_unbiasedness() -> Outcome {
    let g = random_genz(
        GenzFamily::Gaussian,
        2,
        5,
        GenzFamily::Gaussian.default_difficulty(),
    )
    .unwrap();
    let split = split_budget(256, 0.5, true, 2).unwrap();
    let nodes = midpoint_grid(split.per_axis, 2).unwrap();
    let base = halton(split.eval, 2, true).unwrap();
    let spec = KernelSpec::new(Smoothness::K1, 2, 1.0).unwrap();
    let errors: Vec<f64> = (0..200)
        .map(|r| {
            let shift = Point::uniform(2, &mut stream(77, &[r]));
            let eval = random_shift(&base, &shift).unwrap();
            let f = Integrand::new(2, |x: &[f64]| g.eval(x));
            cf_estimate(&f, &nodes, &eval, &spec, 1e-10).unwrap().0 - g.exact()
        })
        .collect();
    let (mean, se) = mean_and_se(&errors);
    let t = mean / se;
    ensure(
        t.abs() <= 3.0,
        format!("t = {t:.2} over 200 shifts (N - M = {})", split.eval),
    )
}

fn rate_config(families: Vec<GenzFamily>) -> CampaignConfig {
    let mut cfg = CampaignConfig::new(families, vec![1, 2], vec![Method::Qmc, Method::QmcCf], 2024);
    cfg.sequence = Sequence::HaltonRrShift;
    cfg.k_values = vec![Smoothness::K1];
    cfg.n_grid = (4..=12).map(|e| 1usize << e).collect();
    cfg.replicates = 10;
    cfg
}

fn slope(table: &ConvergenceTable, family: GenzFamily, dim: usize, method: Method) -> Option<f64> {
    let k = method.uses_cf().then_some(Smoothness::K1);
    let key = CellKey {
        family,
        dim,
        method,
        k,
    };
    table
        .slopes
        .iter()
        .find(|s| s.key == key)
        .map(|s| s.fit.slope)
}

fn rate_reproduction(table: &ConvergenceTable) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = table.failures.is_empty();
    for family in [GenzFamily::Gaussian, GenzFamily::Oscillatory] {
        let (Some(q1), Some(c1), Some(q2), Some(c2)) = (
            slope(table, family, 1, Method::Qmc),
            slope(table, family, 1, Method::QmcCf),
            slope(table, family, 2, Method::Qmc),
            slope(table, family, 2, Method::QmcCf),
        ) else {
            return Err(format!("{family}: missing slope"));
        };
        ok &= (-1.4..=-0.7).contains(&q1) && c1 <= q1 - 0.5 && c2 <= q2 - 0.25;
        lines.push(format!("{family} d=1 {q1:.2}/{c1:.2}, d=2 {q2:.2}/{c2:.2}"));
    }
    ensure(ok, format!("QMC/QMC+CF slopes: {}", lines.join("; ")))
}

fn discontinuous_family(table: &ConvergenceTable) -> Outcome {
    let f = GenzFamily::Discontinuous;
    match (
        slope(table, f, 2, Method::Qmc),
        slope(table, f, 2, Method::QmcCf),
    ) {
        (Some(q), Some(c)) => ensure(
            (c - q).abs() <= 0.3,
            format!("d=2 QMC {q:.2}, QMC+CF {c:.2}, gap {:.2}", c - q),
        ),
        _ => Err("missing slope".into()),
    }
}

fn span_exactness() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = stream(8, &[8]);
    for (dim, m) in [(1, 9), (2, 5), (3, 3)] {
        let nodes = midpoint_grid(m, dim).unwrap();
        for k in Smoothness::ALL {
            for rho in [0.4, 1.0] {
                let spec = KernelSpec::new(k, dim, rho).unwrap();
                let c: Vec<f64> = (0..nodes.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let f = |x: &[f64]| {
                    nodes
                        .iter()
                        .zip(&c)
                        .map(|(u, ci)| ci * spec.eval(x, u).unwrap())
                        .sum::<f64>()
                };
                let exact: f64 = nodes
                    .iter()
                    .zip(&c)
                    .map(|(u, ci)| {
                        ci * u
                            .iter()
                            .map(|&y| {
                                integrate(
                                    |x| phi(k, (x - y).abs() / rho),
                                    0.0,
                                    1.0,
                                    &[y - rho, y, y + rho],
                                )
                            })
                            .product::<f64>()
                    })
                    .sum();
                let eval = random_shift(
                    &halton(64, dim, true).unwrap(),
                    &Point::uniform(dim, &mut rng),
                )
                .unwrap();
                let est = cf_estimate(&Integrand::new(dim, f), &nodes, &eval, &spec, 0.0)
                    .unwrap()
                    .0;
                worst = worst.max((est - exact).abs() / (1.0 + exact.abs()));
            }
        }
    }
    ensure(
        worst <= 1e-8,
        format!("worst error {worst:.1e} x (1 + |I|)"),
    )
}

fn optimal_split_rule() -> Outcome {
    let half = optimal_split(2.0, 1.0).unwrap();
    let mut monotone = true;
    for alpha_l in [0.5, 1.0, 1.5] {
        let fractions: Vec<f64> = (1..=40)
            .map(|i| optimal_split(alpha_l + 0.1 * i as f64, alpha_l).unwrap())
            .collect();
        monotone &= fractions.iter().all(|c| *c > 0.0 && *c < 1.0)
            && fractions.windows(2).all(|w| w[0] < w[1]);
    }
    ensure(
        half == 0.5 && monotone,
        format!("c*(2, 1) = {half}; monotone over grid: {monotone}"),
    )
}

fn gp_application() -> Outcome {
    let start = Instant::now();
    // SoR with the full training set against the exact predictive mean. The
    // identity needs C_n invertible next to the 1e-10 theta_1 jitter; at
    // theta_2 = 3 on 50 points in four dimensions it no longer is, and the
    // two means drift apart by about 1e-6.
    let mut worst_rel = 0.0f64;
    for seed in 0..5 {
        let prob = synthetic_problem(50, 4, 0.1, 3, 100 + seed).unwrap();
        let cfg = GpConfig {
            n_subset: 50,
            ..GpConfig::default()
        };
        let all: Vec<usize> = (0..50).collect();
        for theta in [(0.5, 0.7), (2.0, 1.0), (4.0, 1.5)] {
            for z in &prob.test_points {
                let full = gp_predictive_mean_full(&prob.data, &cfg, theta, z).unwrap();
                let sor = gp_predictive_mean_sor(&prob.data, &cfg, theta, z, &all).unwrap();
                worst_rel = worst_rel.max((sor - full).abs() / full.abs().max(1e-12));
            }
        }
    }

    let prob = synthetic_problem(200, 12, 0.1, 20, 7).unwrap();
    let config = GpConfig::default();
    let study = GpStudy {
        subset: choose_subset(200, config.n_subset, 7),
        data: prob.data,
        config,
        test_points: prob.test_points,
        methods: vec![Method::Qmc, Method::QmcCf, Method::McCf],
        budget: 256,
        seeds: (1..=10).collect(),
    };
    let results = study.run().map_err(|e| e.to_string())?;
    let sd = |t: usize, m: Method| {
        results
            .summaries
            .iter()
            .find(|s| s.test_index == t && s.method == m)
            .map(|s| s.sd_over_seeds)
            .unwrap()
    };
    let beats = |other: Method| {
        (0..20)
            .filter(|&t| sd(t, Method::QmcCf) <= sd(t, other))
            .count()
    };
    let (vs_qmc, vs_mc) = (beats(Method::Qmc), beats(Method::McCf));
    let detail = format!(
        "QMC+CF sd <= QMC sd at {vs_qmc}/20, <= MC+CF sd at {vs_mc}/20; SoR vs full {worst_rel:.1e} relative"
    );
    if vs_qmc >= 16 && vs_mc >= 16 && worst_rel <= 1e-6 {
        within(start, Duration::from_secs(600), detail)
    } else {
        Err(detail)
    }
}

fn determinism(first: &ConvergenceTable, cfg: &CampaignConfig) -> Outcome {
    let again = run_campaign(cfg).map_err(|e| e.to_string())?;
    let (a, b) = (bench_csv(first), bench_csv(&again));
    ensure(
        a == b,
        format!(
            "{} bytes, parallel and serial runs {}",
            a.len(),
            if a == b { "identical" } else { "differ" }
        ),
    )
}

fn report(number: u32, name: &str, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail, passed) = match outcome {
        Ok(d) => ("PASS", d, true),
        Err(d) => ("FAIL", d, false),
    };
    println!("{tag} criterion {number:>2} {name}: {detail} [{secs:.1} s]");
    passed
}

fn main() -> ExitCode {
    let mut all = true;
    all &= report(1, "kernel closed forms", kernel_closed_forms);
    all &= report(2, "interpolation exactness", interpolation_exactness);
    all &= report(3, "worst-case error", worst_case_error);
    all &= report(
        4,
        "zero-mean control functional",
        zero_mean_control_functional,
    );
    all &= report(5, "unbiasedness under random shift", shift_unbiasedness);

    let cfg = rate_config(vec![
        GenzFamily::Gaussian,
        GenzFamily::Oscillatory,
        GenzFamily::Discontinuous,
    ]);
    let started = Instant::now();
    let table = run_campaign_parallel(&cfg);
    println!(
        "     campaign for criteria 6, 7, 11 took {:.1} s",
        started.elapsed().as_secs_f64()
    );
    match table {
        Ok(table) => {
            all &= report(6, "rate reproduction", || rate_reproduction(&table));
            all &= report(7, "discontinuous family", || discontinuous_family(&table));
            all &= report(8, "exactness on span functions", span_exactness);
            all &= report(9, "optimal split", optimal_split_rule);
            all &= report(10, "GP application", gp_application);
            all &= report(11, "determinism", || determinism(&table, &cfg));
        }
        Err(e) => {
            for (n, name) in [
                (6, "rate reproduction"),
                (7, "discontinuous family"),
                (11, "determinism"),
            ] {
                println!("FAIL criterion {n:>2} {name}: campaign failed: {e}");
            }
            all = false;
            all &= report(8, "exactness on span functions", span_exactness);
            all &= report(9, "optimal split", optimal_split_rule);
            all &= report(10, "GP application", gp_application);
        }
    }
    if all {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("some acceptance criteria failed");
        ExitCode::FAILURE
    }
}
