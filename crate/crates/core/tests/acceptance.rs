//! Acceptance checks. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails.

mod common;

use hdcov::allocation::{mvp_weights, Strategy};
use hdcov::backtest::{
    clean_prices, compute_returns, read_prices, walk_forward, DropReason, WalkForwardPlan, WindowPlan,
};
use hdcov::estimators::{
    estimate, lp_eigenvalues, stein_eigenvalues, symstein_eigenvalues, EstimatorKind, EstimatorSpec,
};
use hdcov::metrics::{hhi, leverage, max_drawdown, rdi, realized_risk, true_risk};
use hdcov::models::{
    build_nested_sigma, nested_sigma_eigenvalues, sample_covariance, sample_panel, seeded_rng, ModelKind,
    ModelSpec, NoiseDistribution,
};
use hdcov::report::Metric;
use hdcov::simulation::{run_sweep, SweepConfig};
use hdcov::{CovarianceMatrix, Spectrum};

type Outcome = (bool, String);

fn population_baselines() -> Outcome {
    let diag = ModelSpec::new(ModelKind::Diagonal, 100).draw(&mut seeded_rng(0)).unwrap().sigma;
    let w = mvp_weights(&diag).unwrap();
    let (h, r, risk, tr) = (
        hhi(&w),
        rdi(&w, &diag).unwrap(),
        realized_risk(&w, &diag).unwrap(),
        true_risk(&diag).unwrap(),
    );
    let nested = ModelSpec::new(ModelKind::Nested, 100).draw(&mut seeded_rng(0)).unwrap().sigma;
    let mvp = Strategy::Mvp.weights(&nested).unwrap();
    let plus = Strategy::MvpLongOnly.weights(&nested).unwrap();
    let ok = (h - 0.0178).abs() <= 1e-4
        && (r - 0.1096).abs() <= 1e-4
        && (risk - 0.0268).abs() <= 1e-4
        && (risk - tr).abs() <= 1e-12
        && (hhi(&mvp) - 1.0).abs() < 1e-12
        && (hhi(&plus) - 1.0).abs() < 1e-12
        && (leverage(&mvp) - 1.0).abs() < 5e-3
        && (leverage(&plus) - 1.0).abs() < 5e-3;
    (
        ok,
        format!(
            "diagonal HHI {h:.5}, RDI {r:.5}, R2 {risk:.5} (true {tr:.5}); nested MVP HHI {:.12}, MVP+ HHI {:.12}, L {:.4}",
            hhi(&mvp),
            hhi(&plus),
            leverage(&mvp)
        ),
    )
}

fn factor_leverage() -> Outcome {
    let start = std::time::Instant::now();
    let spec = ModelSpec::new(ModelKind::OneFactor, 100);
    let m = 200;
    let total: f64 = (0..m)
        .map(|r| {
            let sigma = spec.draw(&mut seeded_rng(7000 + r)).unwrap().sigma;
            leverage(&mvp_weights(&sigma).unwrap())
        })
        .sum();
    let mean = total / m as f64;
    let secs = start.elapsed().as_secs_f64();
    (
        (2.5..=2.8).contains(&mean) && secs < 60.0,
        format!("mean population MVP leverage {mean:.3} over {m} loadings draws in {secs:.1}s"),
    )
}

fn best(res: &hdcov::simulation::SweepResult, strategy: Strategy, metric: Metric) -> Vec<(String, f64)> {
    let mut rows: Vec<(String, f64)> = EstimatorKind::ALL
        .iter()
        .filter_map(|k| res.mean(k.name(), strategy, 200, metric).map(|v| (k.name().to_string(), v)))
        .collect();
    rows.sort_by(|a, b| a.1.total_cmp(&b.1));
    rows
}

fn ranking() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for kind in [ModelKind::Nested, ModelKind::OneFactor, ModelKind::Diagonal] {
        let cfg = SweepConfig {
            model: ModelSpec::new(kind, 100),
            n_values: vec![200],
            realizations: 100,
            estimators: EstimatorSpec::all(),
            strategies: vec![Strategy::Mvp, Strategy::MvpLongOnly, Strategy::Hrp],
            base_seed: 20240611,
            include_population: false,
            include_uniform: false,
        };
        let res = run_sweep(&cfg).unwrap();
        let (target, checks): (&str, Vec<(Strategy, Metric)>) = match kind {
            ModelKind::Diagonal => (
                "linear",
                vec![(Strategy::Mvp, Metric::Hhi), (Strategy::MvpLongOnly, Metric::Hhi), (Strategy::Hrp, Metric::Hhi)],
            ),
            _ => ("2s-ycm", vec![(Strategy::Mvp, Metric::Hhi), (Strategy::Mvp, Metric::Leverage)]),
        };
        for (s, metric) in checks {
            let rows = best(&res, s, metric);
            let mine = rows.iter().find(|r| r.0 == target).map_or(f64::NAN, |r| r.1);
            let pass = rows.first().is_some_and(|r| r.0 == target);
            ok &= pass;
            notes.push(format!(
                "{} {s} {metric}: {target} {mine:.4}, best {} {:.4}{}",
                kind.label(),
                rows[0].0,
                rows[0].1,
                if pass { "" } else { " [miss]" }
            ));
        }
    }
    (ok, notes.join("; "))
}

fn nested_roots() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_sum = 0.0f64;
    for gamma in [0.05, 0.1, 0.5] {
        for p in 1..=50 {
            let roots = nested_sigma_eigenvalues(p, gamma).unwrap();
            let dense = build_nested_sigma(p, gamma).unwrap().spectrum().eigenvalues.clone();
            for (a, b) in roots.iter().zip(&dense) {
                worst = worst.max((a - b).abs() / b.abs());
            }
            let want = gamma * gamma * (p * (p + 1)) as f64 / 2.0;
            worst_sum = worst_sum.max((roots.iter().sum::<f64>() - want).abs() / want);
        }
    }
    (
        worst < 1e-8 && worst_sum < 1e-8,
        format!("max relative root error {worst:.2e}, trace error {worst_sum:.2e}"),
    )
}

fn properties() -> Outcome {
    let strategies = [Strategy::Mvp, Strategy::MvpLongOnly, Strategy::Hrp, Strategy::Uniform];
    let mut failures: Vec<String> = Vec::new();
    let mut fail = |what: String| {
        if failures.len() < 5 {
            failures.push(what);
        }
    };
    for seed in 0..200u64 {
        let (sigma, panel) = common::random_instance(seed);
        let p = sigma.dim();
        for spec in EstimatorSpec::all() {
            let xi = match estimate(&panel, &spec, false) {
                Ok(xi) => xi,
                Err(e) => {
                    fail(format!("seed {seed}: {} failed: {e}", spec.name()));
                    continue;
                }
            };
            let spec_min = xi.spectrum().min();
            if spec_min < -1e-10 * xi.spectrum().max() {
                fail(format!("seed {seed}: {} not PSD ({spec_min:e})", spec.name()));
            }
            for s in strategies {
                let w = match s.weights(&xi) {
                    Ok(w) => w,
                    Err(e) => {
                        fail(format!("seed {seed}: {} {s} failed: {e}", spec.name()));
                        continue;
                    }
                };
                let sum: f64 = w.as_slice().iter().sum();
                if (sum - 1.0).abs() > 1e-10 {
                    fail(format!("seed {seed}: {} {s} sums to {sum}", spec.name()));
                }
                if matches!(s, Strategy::MvpLongOnly | Strategy::Hrp) && w.as_slice().iter().any(|&x| x < 0.0) {
                    fail(format!("seed {seed}: {} {s} has a negative weight", spec.name()));
                }
                let (h, l) = (hhi(&w), leverage(&w));
                if h < 1.0 / p as f64 - 1e-12 || h > l * l + 1e-12 {
                    fail(format!("seed {seed}: {} {s} HHI {h} outside [1/p, L²]", spec.name()));
                }
                match s.weights(&xi.scaled(37.5)) {
                    Ok(scaled) => {
                        let d = w.as_slice().iter().zip(scaled.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                        if d > 1e-8 * l.max(1.0) {
                            fail(format!("seed {seed}: {} {s} not scale invariant ({d:e})", spec.name()));
                        }
                    }
                    Err(e) => fail(format!("seed {seed}: {} {s} fails after scaling: {e}", spec.name())),
                }
            }
        }

        // Diagonal inputs: MVP and HRP are inverse-variance.
        let d = sigma.diagonal();
        let diag = CovarianceMatrix::from_diagonal(&d).unwrap();
        let total: f64 = d.iter().map(|v| 1.0 / v).sum();
        for s in [Strategy::Mvp, Strategy::Hrp] {
            let w = s.weights(&diag).unwrap();
            let err = d.iter().enumerate().map(|(i, v)| (w[i] - 1.0 / v / total).abs()).fold(0.0, f64::max);
            if err > 1e-12 {
                fail(format!("seed {seed}: {s} on diagonal off inverse variance by {err:e}"));
            }
        }

        // Geometric-mean identity of the symmetrized Stein eigenvalues.
        let s = sample_covariance(&panel, false);
        let spectrum = Spectrum::of(s.matrix());
        let q = panel.aspect_ratio();
        let (lp, st, sym) = (
            lp_eigenvalues(&spectrum, q, 1.0),
            stein_eigenvalues(&spectrum, q, 1.0),
            symstein_eigenvalues(&spectrum, q, 1.0),
        );
        for k in 0..p {
            if (sym[k] - (lp[k] * st[k]).sqrt()).abs() > 1e-12 * sym[k].max(1e-300) {
                fail(format!("seed {seed}: symmetrized Stein eigenvalue {k} is not the geometric mean"));
            }
        }

        // Realized risk of any weights under Σ is at least the minimum.
        let w = mvp_weights(&s).unwrap();
        if realized_risk(&w, &sigma).unwrap() < true_risk(&sigma).unwrap() * (1.0 - 1e-12) {
            fail(format!("seed {seed}: realized risk below true risk"));
        }
    }
    (failures.is_empty(), if failures.is_empty() { "200 random instances".into() } else { failures.join("; ") })
}

fn classical_limit() -> Outcome {
    let sigma = CovarianceMatrix::from_diagonal(&[4.0, 2.5, 1.5, 1.0, 0.5]).unwrap();
    let panel = sample_panel(&sigma, 100_000, NoiseDistribution::Gaussian, &mut seeded_rng(11)).unwrap();
    let s = sample_covariance(&panel, false);
    let base = &s.spectrum().eigenvalues;
    let deviation = |kind| {
        let xi = estimate(&panel, &EstimatorSpec::new(kind), false).unwrap();
        xi.spectrum()
            .eigenvalues
            .iter()
            .zip(base)
            .map(|(a, b)| (a - b).abs() / b)
            .fold(0.0, f64::max)
    };
    let mut notes: Vec<String> = Vec::new();
    let mut ok = true;
    for kind in [EstimatorKind::Linear, EstimatorKind::Lp, EstimatorKind::Stein, EstimatorKind::SymStein] {
        let dev = deviation(kind);
        ok &= dev < 0.02;
        notes.push(format!("{kind} {:.3}%", 100.0 * dev));
    }
    // The fixed-point estimator keeps at least 1% of the identity target, so
    // it is reported but not held to the shrinkage tolerance.
    let ycm = deviation(EstimatorKind::Ycm);
    (
        ok,
        format!("max relative eigenvalue deviation: {} (ycm {:.3}%, ungated)", notes.join(", "), 100.0 * ycm),
    )
}

fn empirical_pipeline() -> Outcome {
    let raw = read_prices(common::fixture("synthetic_prices.csv")).unwrap();
    let cleaned = clean_prices(&raw, 0.05).unwrap();
    let mut too_sparse: Vec<&str> = cleaned
        .dropped
        .iter()
        .filter(|(_, r)| matches!(r, DropReason::TooManyMissing(_)))
        .map(|(t, _)| t.as_str())
        .collect();
    too_sparse.sort_unstable();
    let drop_ok = too_sparse == ["EDGE", "GAPPY"] && cleaned.dropped.len() == 2;

    let returns = compute_returns(&cleaned.panel).unwrap();
    let plan = WalkForwardPlan { t_in: 100, t_out: 50, rebalance_every: 50 };
    let res = walk_forward(&returns, &plan, &[], &[], true).unwrap();
    let u = &res.runs[0];

    // Uniform buy-and-hold value is the average price relative since the start.
    let prices = &cleaned.panel;
    let start = plan.t_in; // price index of the first holding day's opening close
    let p = prices.p() as f64;
    let stop = start + u.daily.len();
    let curve: Vec<f64> = (start..=stop)
        .map(|t| (0..prices.p()).map(|i| prices.series(i)[t].unwrap() / prices.series(i)[start].unwrap()).sum::<f64>() / p)
        .collect();
    let mut peak = 1.0f64;
    let mut hand = 0.0f64;
    for v in &curve {
        peak = peak.max(*v);
        hand = hand.min(v / peak - 1.0);
    }
    let curve_ok = curve.len() == u.cumulative.len()
        && curve.iter().zip(&u.cumulative).all(|(a, b)| (a - b).abs() < 1e-10);
    let dd = u.report.max_drawdown;
    let dd_ok = (dd - hand).abs() < 1e-10 && (max_drawdown(&u.daily) - hand).abs() < 1e-10;
    let count = WindowPlan::new(2515, 882, 10).map(|w| w.count).unwrap_or(0);
    (
        drop_ok && u.report.turnover == 0.0 && curve_ok && dd_ok && count == 75,
        format!(
            "dropped {:?}; uniform turnover {:.2}, drawdown {dd:.6} vs hand {hand:.6}; windows {count}",
            cleaned.dropped.iter().map(|d| d.0.as_str()).collect::<Vec<_>>(),
            u.report.turnover
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("population baselines", population_baselines),
        ("one-factor population leverage", factor_leverage),
        ("estimator ranking at desk scale", ranking),
        ("nested eigenvalue oracle", nested_roots),
        ("property suite", properties),
        ("classical limit", classical_limit),
        ("empirical pipeline structure", empirical_pipeline),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        println!("{} {} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
        if !ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
