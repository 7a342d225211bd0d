//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use count_dp::gaussian_baseline::{compare_mechanisms, gaussian_delta, DiscreteGaussianPmf};
use count_dp::lp_oracle::{
    audit_delta, min_epsilon_for_singular_delta, restricted_lp, solve_general_lp, LpStatus,
};
use count_dp::noise_family::{validate_properties, MechanismMatrix};
use count_dp::optimal_solver::{crossover, crossover_gap, optimal_alphas, BoundSet};
use count_dp::sampler::empirical_audit;
use count_dp::verification::{check_config, optimal_matrix, random_configs};
use count_dp::MechanismConfig;

/// Sub-checks of one criterion.
#[derive(Default)]
struct Checks {
    lines: Vec<String>,
    failed: usize,
}

impl Checks {
    fn check(&mut self, label: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        self.lines
            .push(format!("    [{}] {label}: {detail}", if ok { "ok" } else { "FAIL" }));
    }

    fn within(&mut self, label: &str, value: f64, target: f64, tol: f64) {
        let ok = (value - target).abs() <= tol;
        self.check(label, ok, format!("{value:.6} vs {target} ± {tol}"));
    }

    fn info(&mut self, line: String) {
        self.lines.push(format!("    [info] {line}"));
    }
}

fn cfg(eta: f64, d: u64, eps: f64) -> MechanismConfig {
    MechanismConfig::new(eta, d, eps).expect("valid configuration")
}

fn worked_example() -> Checks {
    let mut c = Checks::default();
    let config = cfg(0.8, 6, 2.18);
    let bounds = BoundSet::new(&config);
    let sol = optimal_alphas(&config);
    c.within("E", bounds.e, 8.8463, 1e-3);
    // 2 * 0.8 / (1 - 0.8) in binary floating point; 0.8 itself is inexact.
    c.check(
        "C = 8",
        (bounds.c - 8.0).abs() <= 4.0 * f64::EPSILON * 8.0,
        format!("{:.17}", bounds.c),
    );
    c.within("C_2", bounds.crossover(2), 8.1229, 1e-3);
    c.within("C_3", bounds.crossover(3), 7.8867, 1e-3);
    c.check("regime", sol.regime == 3, format!("{}", sol.regime));
    c.within("delta", sol.delta_star, 0.0049, 5e-4);
    let h = config.eta_bar() / 2.0;
    c.within("mass(1)", h * sol.alphas[0], 0.08987, 5e-5);
    c.within("mass(2)", h * sol.alphas[1], 0.00960, 5e-5);
    c.within("alpha1/alpha2", sol.alphas[0] / sol.alphas[1], 9.3617, 1e-2);
    c
}

fn gaussian_comparison() -> Checks {
    let mut c = Checks::default();
    let config = cfg(0.8, 6, 2.18);
    let sol = optimal_alphas(&config);
    let g = DiscreteGaussianPmf::new(sol.variance).expect("positive variance");
    c.within("gaussian mass(1)", g.mass(1), 0.11685, 5e-5);
    c.within("gaussian mass(-1)", g.mass(-1), 0.11685, 5e-5);
    c.within("gaussian mass(2)", g.mass(2), 0.000416, 2e-5);
    c.within("gaussian mass(-2)", g.mass(-2), 0.000416, 2e-5);

    let t = g.truncation as i64;
    let gm = g.matrix(t, 2).expect("gaussian matrix");
    let ours = optimal_matrix(&config);
    // The printed 0.0049 is the optimal delta at eps = 2.18, rounded.
    let target = sol.delta_star;
    match min_epsilon_for_singular_delta(&gm, target) {
        Some(e) => c.within("gaussian eps at delta*(2.18)", e, 5.6, 0.05),
        None => c.check("gaussian eps at delta*(2.18)", false, "not reached by 20".into()),
    }
    match min_epsilon_for_singular_delta(&ours, target) {
        Some(e) => c.within("our eps at delta*(2.18)", e, 2.18, 0.01),
        None => c.check("our eps at delta*(2.18)", false, "not reached by 20".into()),
    }
    let rounded_g = min_epsilon_for_singular_delta(&gm, 0.0049).unwrap_or(f64::NAN);
    let rounded_o = min_epsilon_for_singular_delta(&ours, 0.0049).unwrap_or(f64::NAN);
    c.info(format!(
        "with the rounded target 0.0049: gaussian {rounded_g:.4}, ours {rounded_o:.4} (target delta* = {target:.7})"
    ));
    c
}

fn figure_points() -> Checks {
    let mut c = Checks::default();
    let grid: Vec<f64> = (0..=290).map(|i| 1.1 + 0.01 * i as f64).collect();
    let worst = grid
        .iter()
        .map(|&e| optimal_alphas(&cfg(0.5, 8, e)).dp_delta)
        .fold(0.0, f64::max);
    c.check("fig2 D=8 max over eps in [1.1, 4]", worst <= 1e-3, format!("{worst:.3e} <= 1e-3"));

    let a = optimal_alphas(&cfg(0.5, 8, 1.1)).dp_delta;
    c.check(
        "fig3 (1.1, 0.5, 8) ~ 1e-3 within x1.5",
        a >= 1e-3 / 1.5 && a <= 1e-3 * 1.5,
        format!("{a:.4e}"),
    );
    let b = optimal_alphas(&cfg(0.8, 8, 2.2)).dp_delta;
    c.check(
        "fig3 (2.2, 0.8, 8) ~ 5e-7 within x2",
        b >= 5e-7 / 2.0 && b <= 5e-7 * 2.0,
        format!("{b:.4e}"),
    );
    c
}

fn in_range() -> Checks {
    let mut c = Checks::default();
    let config = cfg(0.5, 8, 1.5);
    let sol = optimal_alphas(&config);
    let analytic = sol.in_range_probability(3);
    c.within("analytic", analytic, 0.9945, 5e-4);
    match empirical_audit(&config, 8, 1_000_000, 3, 0) {
        Ok(r) => {
            c.within("empirical (1e6 draws)", r.in_range_rate, analytic, 0.002);
            c.info(format!("tv distance {:.2e}, rng {}", r.tv_distance, r.rng));
        }
        Err(e) => c.check("empirical (1e6 draws)", false, e.to_string()),
    }
    c
}

fn oracle_equivalence() -> Checks {
    let mut c = Checks::default();
    let configs = random_configs(20240601, 500);
    let mut max_delta: f64 = 0.0;
    let mut max_alpha: f64 = 0.0;
    let mut boundary = 0;
    let mut not_optimal = 0;
    for config in &configs {
        let r = check_config(config);
        if r.lp_status != LpStatus::Optimal {
            not_optimal += 1;
        }
        max_delta = max_delta.max(r.delta_gap);
        match r.alpha_gap {
            Some(g) => max_alpha = max_alpha.max(g),
            None => boundary += 1,
        }
    }
    c.check("configs", configs.len() >= 500, format!("{}", configs.len()));
    c.check("all LP solves optimal", not_optimal == 0, format!("{not_optimal} not optimal"));
    c.check("max |delta gap|", max_delta < 1e-9, format!("{max_delta:.3e} < 1e-9"));
    c.check("max |alpha gap|", max_alpha < 1e-8, format!("{max_alpha:.3e} < 1e-8"));
    c.info(format!("{boundary} boundary configs excluded from the alpha check"));
    c
}

fn structural() -> Checks {
    let mut c = Checks::default();

    // Crossover monotonicity.
    let mut worst_rel = f64::INFINITY;
    let mut bad = 0;
    for step in 0..=200 {
        let e = (0.05 * step as f64).exp();
        for k in 1..64u64 {
            let gap = crossover_gap(k, e);
            let direct = crossover(k, e) - crossover(k + 1, e);
            if !(gap > 0.0) || (direct - gap).abs() > 1e-9 * crossover(k, e) {
                bad += 1;
            }
            worst_rel = worst_rel.min(gap / crossover(k, e));
        }
    }
    c.check(
        "C_k - C_(k+1) > 0, D <= 64, eps in [0, 10]",
        bad == 0,
        format!("{bad} violations, smallest relative gap {worst_rel:.3e}"),
    );

    // Bound-crossing equivalence.
    let grid = random_configs(7, 10_000);
    let (mut tested, mut mismatched) = (0u64, 0u64);
    for config in &grid {
        let b = BoundSet::new(config);
        for k in 1..=config.d() {
            let ck = b.crossover(k);
            if ((b.c - ck) / ck).abs() < 1e-9 {
                continue;
            }
            tested += 1;
            if (b.bound(k) >= b.bound(k + 1)) != (b.c >= ck) {
                mismatched += 1;
            }
        }
    }
    c.check(
        "delta_k >= delta_(k+1) iff C >= C_k",
        mismatched == 0,
        format!("{mismatched} of {tested} mismatched"),
    );

    // Feasibility, simplex validity, sandwich.
    let mut max_violation: f64 = 0.0;
    let mut invalid = 0;
    let mut sandwich_bad = 0;
    let mut audited = 0;
    for (i, config) in grid.iter().enumerate() {
        let sol = optimal_alphas(config);
        let mut point = vec![sol.delta_star];
        point.extend(&sol.alphas);
        max_violation = max_violation.max(restricted_lp(config).max_violation(&point));
        let sum: f64 = sol.alphas.iter().sum();
        if sol.alphas.iter().any(|&a| a < 0.0)
            || (sum - 1.0).abs() > 1e-12
            || !validate_properties(&sol.noise_pmf()).passed
        {
            invalid += 1;
        }
        if i % 10 == 0 {
            audited += 1;
            if !audit_delta(&optimal_matrix(config), config.epsilon()).sandwich_holds(1e-12) {
                sandwich_bad += 1;
            }
        }
    }
    for s2 in [0.1, 0.266, 1.0, 4.0] {
        let g = DiscreteGaussianPmf::new(s2).expect("positive");
        let m = g.matrix(g.truncation as i64, 3).expect("matrix");
        for eps in [0.5, 1.5, 3.0] {
            audited += 1;
            if !audit_delta(&m, eps).sandwich_holds(1e-12) {
                sandwich_bad += 1;
            }
        }
    }
    c.check("alpha* feasibility", max_violation < 1e-10, format!("max violation {max_violation:.3e}"));
    c.check("alpha* on the simplex, pmf passes P1-P3", invalid == 0, format!("{invalid} invalid"));
    c.check(
        "singular <= event <= min(1, (2D+1) singular)",
        sandwich_bad == 0,
        format!("{sandwich_bad} of {audited} matrices violate"),
    );

    // Dominance over the matched Gaussian.
    let eps: Vec<f64> = (0..=180).map(|i| 1.2 + 0.01 * i as f64).collect();
    match compare_mechanisms(0.5, 6, &eps) {
        Ok(rows) => {
            let losses: Vec<f64> = rows
                .iter()
                .filter(|r| r.our_dp_delta >= r.gaussian_delta)
                .map(|r| r.epsilon)
                .collect();
            c.check(
                "(2D+1) delta* < delta_G, eta=0.5, D=6, eps in [1.2, 3]",
                losses.is_empty(),
                format!("{} of {} grid points fail {losses:?}", losses.len(), rows.len()),
            );
        }
        Err(e) => c.check("gaussian dominance", false, e.to_string()),
    }
    // Sanity of the Gaussian delta itself at one point.
    let g = gaussian_delta(2.18, optimal_alphas(&cfg(0.8, 6, 2.18)).variance).unwrap_or(f64::NAN);
    c.info(format!("delta_G at eps = 2.18, matched variance: {g:.4e}"));
    c
}

fn example_one() -> Checks {
    let mut c = Checks::default();
    let config = cfg(0.5, 2, 1.0);
    let general = match solve_general_lp(3, &config) {
        Ok(g) => g,
        Err(e) => {
            c.check("build", false, e.to_string());
            return c;
        }
    };
    c.check(
        "status",
        general.solution.status == LpStatus::Optimal,
        format!("{:?}, delta = {:.6}", general.solution.status, general.optimum()),
    );
    let pmfs = match general.pmfs() {
        Ok(p) => p,
        Err(e) => {
            c.check("induced pmfs", false, e.to_string());
            return c;
        }
    };
    let valid = pmfs.iter().filter(|p| validate_properties(p).passed).count();
    c.check("columns pass P1-P3", valid == 3, format!("{valid} of 3"));
    match MechanismMatrix::from_pmfs(&pmfs) {
        Ok(m) => {
            c.check(
                "rows y in [0:5], columns n in [1:3]",
                m.y_min == 0 && m.row_count() == 6 && m.column_count() == 3,
                format!("y_min {}, {} rows, {} columns", m.y_min, m.row_count(), m.column_count()),
            );
            let mut stray = Vec::new();
            for n in 1..=3i64 {
                let lo = n - n.min(2);
                let hi = n + 2;
                for y in 0..=5i64 {
                    let p = m.prob(y, n);
                    if (y < lo || y > hi) && p != 0.0 {
                        stray.push((y, n));
                    }
                }
                if (m.prob(n, n) - 0.5).abs() > 1e-12 {
                    stray.push((n, n));
                }
            }
            c.check("zero pattern and p(n|n) = 1/2", stray.is_empty(), format!("{stray:?}"));
        }
        Err(e) => c.check("matrix", false, e.to_string()),
    }
    c
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Checks, Duration); 7] = [
        ("worked example", worked_example, Duration::from_secs(1)),
        ("gaussian comparison", gaussian_comparison, Duration::from_secs(1)),
        ("figure 2 and 3 points", figure_points, Duration::from_secs(1)),
        ("in-range probability", in_range, Duration::from_secs(60)),
        ("closed form vs LP", oracle_equivalence, Duration::from_secs(60)),
        ("structural properties", structural, Duration::from_secs(60)),
        ("example-1 general LP", example_one, Duration::from_secs(1)),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut checks = run();
        let elapsed = start.elapsed();
        checks.check(
            "runtime",
            elapsed <= *budget,
            format!("{:.3} s (budget {} s)", elapsed.as_secs_f64(), budget.as_secs()),
        );
        let verdict = if checks.failed == 0 { "PASS" } else { "FAIL" };
        if checks.failed > 0 {
            failures += 1;
        }
        println!("criterion {} ({name}): {verdict}", i + 1);
        for line in &checks.lines {
            println!("{line}");
        }
    }
    println!("acceptance: {} of 7 criteria passed", 7 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
