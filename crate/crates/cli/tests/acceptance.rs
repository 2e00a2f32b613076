//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process fails if any criterion fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use debias::design::{
    cost_constrained_design, mse_inflation_factor, optimal_geometric_design, toy_variance,
};
use debias::heston::{heston_level_model, CirTransition, HestonParams};
use debias::sequences::{
    crude_mc_variance, integrand, quadrature_level, root_function, NewtonModel, QuadratureModel,
    QuadratureRule, ToyGeometricModel,
};
use debias::{
    pooled_average, replicate_stream, AdaptiveLaw, EstimateReport, Estimator, LevelSequenceModel,
    ShiftedGeometric, TruncationLaw,
};

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new() -> Self {
        Self {
            pass: true,
            detail: String::new(),
        }
    }

    /// Records one sub-check; the criterion passes only if all do.
    fn expect(&mut self, ok: bool, what: impl AsRef<str>) {
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        if !ok {
            self.detail.push_str("MISSED ");
        }
        self.detail.push_str(what.as_ref());
        self.pass &= ok;
    }

    fn note(&mut self, what: impl AsRef<str>) {
        self.detail.push_str(" [");
        self.detail.push_str(what.as_ref());
        self.detail.push(']');
    }

    fn within_budget(&mut self, elapsed: Duration, limit_secs: f64) {
        let secs = elapsed.as_secs_f64();
        self.expect(
            secs < limit_secs,
            format!("runtime {secs:.2}s < {limit_secs}s"),
        );
    }
}

fn z_score(report: &EstimateReport, target: f64) -> f64 {
    (report.mean - target) / report.stderr
}

fn toy() -> ToyGeometricModel {
    ToyGeometricModel::new(1.0, 1.0, 0.5).unwrap()
}

fn sin_pi_quadrature() -> QuadratureModel {
    QuadratureModel::new(
        integrand("sin_pi_x").unwrap().f,
        0.0,
        1.0,
        QuadratureRule::Simpson,
    )
    .unwrap()
}

fn cubic_newton() -> NewtonModel {
    let h = root_function("cubic_root").unwrap();
    NewtonModel::new(h.h, h.dh, 1.0, -2.0, 3.0).unwrap()
}

/// Variance of `y` by enumerating `N` until the remaining mass is below `1e-12`.
fn enumerated_variance<M: LevelSequenceModel>(est: &Estimator<M>, law: &ShiftedGeometric) -> f64 {
    let (mut mass, mut first, mut second) = (0.0, 0.0, 0.0);
    let mut n = law.shift();
    while mass < 1.0 - 1e-12 {
        let y = est.replicate_at(&mut replicate_stream(0, 0), n).unwrap().y;
        let p = law.pmf(n);
        mass += p;
        first += p * y;
        second += p * y * y;
        n += 1;
    }
    second - first * first
}

fn toy_run() -> (EstimateReport, Duration) {
    let est = Estimator::new(toy(), TruncationLaw::geometric(0.5, 0).unwrap()).unwrap();
    let start = Instant::now();
    let report = est.run(1_000_000, 20_240_601).unwrap();
    (report, start.elapsed())
}

fn criterion_1(report: &EstimateReport, elapsed: Duration) -> Check {
    let mut c = Check::new();
    let z = z_score(report, 1.0);
    c.expect(
        z.abs() < 4.0,
        format!("mean {:.5} (z = {z:.2})", report.mean),
    );
    let analytic = toy_variance(1.0, 0.5, 0.0, 0.5).unwrap();
    let law = ShiftedGeometric::new(0.5, 0).unwrap();
    let est = Estimator::new(toy(), law.into()).unwrap();
    let enumerated = enumerated_variance(&est, &law);
    c.expect(
        (analytic - enumerated).abs() < 1e-9 * analytic,
        format!("analytic {analytic} vs enumeration {enumerated:.12}"),
    );
    let rel = report.var_y / analytic - 1.0;
    c.expect(
        rel.abs() < 0.02,
        format!("Var(y) {:.4} ({:+.2}%)", report.var_y, 100.0 * rel),
    );
    c.within_budget(elapsed, 10.0);
    c
}

fn criterion_2(report: &EstimateReport) -> Check {
    let mut c = Check::new();
    match report.sigma2_hat_mean {
        Some(v) => c.expect(
            (v / 2.0 - 1.0).abs() < 0.05,
            format!("mean within-replicate variance {v:.4} vs 2.0"),
        ),
        None => c.expect(false, "no within-replicate variance reported"),
    }
    c
}

fn pooled_gap<M: LevelSequenceModel>(model: M, law: TruncationLaw) -> f64 {
    let est = Estimator::new(model, law.clone()).unwrap();
    let reps = est.replicates(10_000, 5).unwrap();
    let mean = reps.iter().map(|r| r.y).sum::<f64>() / reps.len() as f64;
    (pooled_average(&reps, &law).unwrap() - mean).abs() / mean.abs()
}

fn criterion_3() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let gaps = [
        (
            "toy",
            pooled_gap(toy(), TruncationLaw::geometric(0.5, 0).unwrap()),
        ),
        (
            "quad",
            pooled_gap(
                sin_pi_quadrature(),
                TruncationLaw::geometric(0.75, 2).unwrap(),
            ),
        ),
        (
            "root",
            pooled_gap(cubic_newton(), TruncationLaw::geometric(0.75, 4).unwrap()),
        ),
    ];
    let elapsed = start.elapsed();
    for (name, gap) in gaps {
        c.expect(gap <= 1e-12, format!("{name} relative gap {gap:.1e}"));
    }
    c.within_budget(elapsed, 1.0);
    c
}

fn criterion_4() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let est = Estimator::new(
        sin_pi_quadrature(),
        TruncationLaw::geometric(0.75, 2).unwrap(),
    )
    .unwrap();
    let report = est.run(1_000_000, 4).unwrap();
    c.expect(
        (report.mean_cost / 7.0 - 1.0).abs() < 0.01,
        format!("mean evaluations {:.4} vs 7", report.mean_cost),
    );
    let z = z_score(&report, 2.0 / PI);
    c.expect(
        z.abs() < 4.0,
        format!("mean {:.7} (z = {z:.2})", report.mean),
    );
    let crude = crude_mc_variance(|x| (PI * x).sin(), 0.0, 1.0, 7).unwrap();
    c.expect(
        (crude - 0.013531).abs() < 1e-4,
        format!("crude MC variance {crude:.6}"),
    );
    let model = sin_pi_quadrature();
    let levels: Vec<f64> = (1..=6)
        .map(|n| quadrature_level(&model, n).unwrap())
        .collect();
    let ratios: Vec<f64> = (4..=6)
        .map(|n| (levels[n - 1] - levels[n - 2]) / (levels[n - 2] - levels[n - 3]))
        .collect();
    let ok = ratios.iter().all(|r| (1.0 / 20.0..=1.0 / 12.0).contains(r));
    c.expect(ok, format!("increment ratios n=4..6 {:.5?}", ratios));
    c.note(format!("var(Y) {:.3e}", report.var_y));
    c.within_budget(start.elapsed(), 30.0);
    c
}

fn criterion_5() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let est = Estimator::new(cubic_newton(), TruncationLaw::geometric(0.75, 4).unwrap()).unwrap();
    let report = est.run(100_000, 5).unwrap();
    let elapsed = start.elapsed();
    let z = z_score(&report, 1.0);
    c.expect(
        z.abs() < 4.0,
        format!("mean {:.5} (z = {z:.2})", report.mean),
    );
    c.expect(
        (0.005..=0.03).contains(&report.var_y),
        format!("sample variance {:.4} in [0.005, 0.03]", report.var_y),
    );
    c.within_budget(elapsed, 10.0);
    let other = Estimator::new(cubic_newton(), TruncationLaw::geometric(0.25, 4).unwrap()).unwrap();
    let other = other.run(100_000, 5).unwrap();
    c.note(format!(
        "with 0.75 read as the survival ratio instead: variance {:.4}",
        other.var_y
    ));
    c
}

fn criterion_6() -> Check {
    let mut c = Check::new();
    let law = AdaptiveLaw::new(0.75, 1e-3, 1_000_000, 4).unwrap();
    let est = Estimator::new(cubic_newton(), law.into()).unwrap();
    let report = est.run(100_000, 6).unwrap();
    let z = z_score(&report, 1.0);
    c.expect(
        z.abs() < 4.0,
        format!("mean {:.6} (z = {z:.2})", report.mean),
    );
    c.expect(
        report.failures == 0,
        format!("{} guard exhaustions", report.failures),
    );
    c
}

fn heston_check(c: &mut Check, name: &str, params: HestonParams, target: f64, floor: f64) {
    let start = Instant::now();
    let est = Estimator::new(
        heston_level_model(params).unwrap(),
        TruncationLaw::geometric(0.75, 4).unwrap(),
    )
    .unwrap();
    let report = est.run(100_000, 7).unwrap();
    let band = (4.0 * report.stderr).max(floor);
    c.expect(
        (report.mean - target).abs() <= band,
        format!(
            "{name} {:.4} +/- {:.4} vs {target} (band {band:.3})",
            report.mean, report.stderr
        ),
    );
    c.within_budget(start.elapsed(), 300.0);
}

fn criterion_7() -> Check {
    let mut c = Check::new();
    heston_check(
        &mut c,
        "broadie_kaya_1",
        HestonParams::broadie_kaya_1(),
        34.9998,
        0.15,
    );
    heston_check(
        &mut c,
        "broadie_kaya_2",
        HestonParams::broadie_kaya_2(),
        6.801,
        0.05,
    );
    c
}

fn cir_check(c: &mut Check, name: &str, p: &HestonParams, seed: u64) {
    const DRAWS: usize = 1_000_000;
    let dt = p.maturity / 16.0;
    let t = CirTransition::new(p.kappa, p.theta, p.sigma_v, dt).unwrap();
    let mut stream = replicate_stream(seed, 0);
    let xs: Vec<f64> = (0..DRAWS).map(|_| t.sample(p.v0, &mut stream)).collect();
    let e = (-p.kappa * dt).exp();
    let mean = p.theta + (p.v0 - p.theta) * e;
    let s2 = p.sigma_v * p.sigma_v;
    let var =
        p.v0 * s2 * e * (1.0 - e) / p.kappa + p.theta * s2 * (1.0 - e).powi(2) / (2.0 * p.kappa);
    let n = DRAWS as f64;
    let m1 = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - m1).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m1).powi(4)).sum::<f64>() / n;
    let z_mean = (m1 - mean) / (m2 / n).sqrt();
    let z_var = (m2 * n / (n - 1.0) - var) / ((m4 - m2 * m2) / n).sqrt();
    let negative = xs.iter().filter(|&&x| x < 0.0).count();
    c.expect(
        z_mean.abs() < 4.0 && z_var.abs() < 4.0 && negative == 0,
        format!("{name} z(mean) {z_mean:.2}, z(var) {z_var:.2}"),
    );
}

fn criterion_8() -> Check {
    let mut c = Check::new();
    let start = Instant::now();
    let feller = HestonParams {
        sigma_v: 0.3,
        ..HestonParams::broadie_kaya_1()
    };
    cir_check(
        &mut c,
        "broadie_kaya_1",
        &HestonParams::broadie_kaya_1(),
        81,
    );
    cir_check(
        &mut c,
        "broadie_kaya_2",
        &HestonParams::broadie_kaya_2(),
        82,
    );
    cir_check(&mut c, "feller", &feller, 83);
    c.within_budget(start.elapsed(), 30.0);
    c
}

fn criterion_9() -> Check {
    let mut c = Check::new();
    let start = Instant::now();

    // Closed-form geometric design against a 200 x 20 grid of budget-feasible (q, s),
    // for every budget where the design exists.
    let mut worst: Option<(f64, f64, f64, f64, f64)> = None;
    for mu_n in [2.0, 3.0, 5.0, 8.0, 12.0] {
        for k in 1..10 {
            let r = f64::from(k) / 10.0;
            let Ok(design) = optimal_geometric_design(r, mu_n, 1.0) else {
                continue;
            };
            let r2 = r * r;
            for i in 1..=200 {
                let q = r2 + (1.0 - r2) * f64::from(i) / 201.0;
                for j in 0..20 {
                    let s = mu_n * f64::from(j) / 19.0;
                    if s + q / (1.0 - q) > mu_n {
                        continue;
                    }
                    let gain = 1.0 - toy_variance(1.0, r, s, q).unwrap() / design.min_variance;
                    if worst.is_none_or(|w| gain > w.0) {
                        worst = Some((gain, r, mu_n, q, s));
                    }
                }
            }
        }
    }
    let (gain, r, mu_n, q, s) = worst.unwrap();
    c.expect(
        gain <= 1e-9,
        format!(
            "largest grid improvement on the closed-form design {:.2}% (r {r}, E[N] {mu_n}, q {q:.4}, s {s:.3})",
            100.0 * gain
        ),
    );

    // Cost-constrained shift against floor(log2 c).
    let budgets = [10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1e3, 2e3, 5e3, 1e4];
    let mut mismatches = Vec::new();
    let mut feasible = 0;
    for k in 1..=5 {
        let r = f64::from(k) / 10.0;
        for &budget in &budgets {
            if let Ok(d) = cost_constrained_design(r, budget) {
                feasible += 1;
                let expected = budget.log2().floor() as usize;
                if d.shift != expected {
                    mismatches.push(format!("r {r} c {budget}: s {} vs {expected}", d.shift));
                }
            }
        }
    }
    c.expect(
        mismatches.is_empty(),
        format!(
            "{} of {feasible} feasible (r, c) give s = floor(log2 c){}",
            feasible - mismatches.len(),
            if mismatches.is_empty() {
                String::new()
            } else {
                format!(" (first miss {})", mismatches[0])
            }
        ),
    );

    let f = mse_inflation_factor(0.4).unwrap();
    c.expect((f - 3.39).abs() < 0.01, format!("inflation(0.4) {f:.4}"));
    c.within_budget(start.elapsed(), 5.0);
    c
}

fn criterion_10() -> Check {
    let mut c = Check::new();
    let runs: [&[&str]; 6] = [
        &["toy", "--reps", "50000"],
        &["quad", "--reps", "50000"],
        &["root", "--reps", "20000"],
        &["root", "--reps", "20000", "--adaptive"],
        &["heston", "--reps", "2000", "--preset", "broadie_kaya_2"],
        &["design"],
    ];
    for args in runs {
        for format in ["csv", "json"] {
            let outputs: Vec<Vec<u8>> = ["1", "4", "1", "7"]
                .iter()
                .map(|threads| {
                    let out = Command::new(env!("CARGO_BIN_EXE_debias"))
                        .args(args)
                        .args(["--seed", "42", "--threads", threads, "--format", format])
                        .output()
                        .expect("binary runs");
                    assert!(
                        out.status.success(),
                        "{args:?}: {}",
                        String::from_utf8_lossy(&out.stderr)
                    );
                    out.stdout
                })
                .collect();
            let identical = outputs.windows(2).all(|w| w[0] == w[1]);
            c.expect(identical, format!("{} {format}", args.join(" ")));
        }
    }
    c
}

fn main() {
    let titles = [
        "toy unbiasedness and exact variance",
        "within-replicate variance calibration",
        "pooled identity",
        "quadrature cost and accuracy",
        "root finding",
        "adaptive stopping rule",
        "heston reproduction",
        "CIR exactness",
        "design tools",
        "determinism",
    ];
    let (toy_report, toy_elapsed) = toy_run();
    let mut checks: Vec<Box<dyn FnOnce() -> Check>> = vec![
        Box::new(|| criterion_1(&toy_report, toy_elapsed)),
        Box::new(|| criterion_2(&toy_report)),
        Box::new(criterion_3),
        Box::new(criterion_4),
        Box::new(criterion_5),
        Box::new(criterion_6),
        Box::new(criterion_7),
        Box::new(criterion_8),
        Box::new(criterion_9),
        Box::new(criterion_10),
    ];
    let mut failed = Vec::new();
    println!();
    for (k, (check, title)) in checks.drain(..).zip(titles).enumerate() {
        let start = Instant::now();
        let result = check();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "acceptance {:>2} {verdict} {title} ({:.1}s): {}",
            k + 1,
            start.elapsed().as_secs_f64(),
            result.detail
        );
        if !result.pass {
            failed.push(k + 1);
        }
    }
    if failed.is_empty() {
        println!("\nall {} acceptance criteria passed", titles.len());
    } else {
        println!("\nacceptance criteria failed: {failed:?}");
        std::process::exit(1);
    }
}
