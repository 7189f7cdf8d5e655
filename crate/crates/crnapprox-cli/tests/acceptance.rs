//! The acceptance gate: eight release criteria, one test (and one
//! pass/fail line) each. Criteria 4 and 8 share a single basin study; the
//! run is cached so both report on the same measurement.

use std::sync::OnceLock;

use crnapprox::kmt::{
    assemble_paired_paths, build_dyadic_sums, conditional_cdf, kmt_transform, DyadicIncrements,
    TOY_NORMALS,
};
use crnapprox::models;
use crnapprox::rng::stream_rng;
use crnapprox::stats;
use crnapprox::trajectory::SimConfig;
use crnapprox_cli::experiments::{bistable_basin_study, fluid_limit_study, BasinStudy};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_deficiency() {
    let theta0 = models::metabolism(0).deficiency().deficiency;
    let theta3 = models::metabolism(3).deficiency().deficiency;
    report(
        "1 (deficiency)",
        theta0 == 0 && theta3 == 1,
        &format!("metabolism m=0 -> {theta0}, m=3 -> {theta3}"),
    );
}

#[test]
fn criterion_2_worked_example_tables() {
    let normals = DyadicIncrements::new(1.0, TOY_NORMALS.to_vec()).unwrap();
    // published block-difference table, 2-decimal inputs, tolerance 0.02
    let vtilde_expected: [&[f64]; 3] = [
        &[0.87, 0.69, -4.21, 1.22, -2.23, 0.95, -2.72],
        &[-2.33, 1.27, 3.78],
        &[1.65],
    ];
    let sums = build_dyadic_sums(&normals);
    let mut worst: f64 = 0.0;
    for (q, row) in vtilde_expected.iter().enumerate() {
        for (k, &expected) in row.iter().enumerate() {
            worst = worst.max((sums.vtilde(q as u32 + 1, k + 1) - expected).abs());
        }
    }
    // published count matrix, exact integers
    let u_expected: [&[f64]; 4] = [
        &[
            -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, 2.0, 2.0, 0.0, -1.0, 1.0, 2.0, 0.0, -1.0, -1.0,
        ],
        &[-2.0, -2.0, 1.0, 2.0, 0.0, 2.0, -2.0],
        &[-1.0, 2.0, 0.0],
        &[2.0],
    ];
    let counts = kmt_transform(&normals).unwrap();
    let count_sums = build_dyadic_sums(&counts);
    let mut exact = true;
    for (j, row) in u_expected.iter().enumerate() {
        for (k, &expected) in row.iter().enumerate() {
            if (count_sums.v(j as u32, k + 1) - expected).abs() > 1e-9 {
                exact = false;
            }
        }
    }
    report(
        "2 (worked-example tables)",
        worst <= 0.02 + 1e-12 && exact,
        &format!("max block-difference deviation {worst:.4}, count matrix exact: {exact}"),
    );
}

#[test]
fn criterion_3_steady_states() {
    let network = models::bistable();
    let ss = models::bistable_steady_states(8.0, 1.0, 1.5);
    let f2 = network.drift(&ss[1]).unwrap();
    let f3 = network.drift(&ss[2]).unwrap();
    let worst = f2
        .iter()
        .chain(&f3)
        .map(|v| v.abs())
        .fold(0.0f64, f64::max);
    report(
        "3 (steady states)",
        worst < 1e-12,
        &format!("max |F| at (2,0.5) and (6,4.5): {worst:.2e}"),
    );
}

fn basin_study() -> &'static BasinStudy {
    static STUDY: OnceLock<BasinStudy> = OnceLock::new();
    STUDY.get_or_init(|| {
        bistable_basin_study(100.0, 10_000, 20.0, 5e-3, 1).expect("basin study runs")
    })
}

#[test]
fn criterion_4_cross_method_agreement() {
    let study = basin_study();
    let mut worst_gap: f64 = 0.0;
    for row in &study.rows {
        worst_gap = worst_gap.max((row.ssa_fraction - row.em_fraction).abs());
    }
    // rows are ordered x0-major: index 3i + j for (x0_i, y0_j)
    let frac = |m: usize, i: usize, j: usize| {
        let r = &study.rows[3 * i + j];
        if m == 0 {
            r.ssa_fraction
        } else {
            r.em_fraction
        }
    };
    let mut monotone = true;
    for m in 0..2 {
        for i in 0..3 {
            for j in 0..2 {
                if !(frac(m, i, j) > frac(m, i, j + 1)) {
                    monotone = false;
                }
            }
        }
        for j in 0..3 {
            for i in 0..2 {
                if !(frac(m, i, j) > frac(m, i + 1, j)) {
                    monotone = false;
                }
            }
        }
    }
    report(
        "4 (cross-method agreement)",
        worst_gap <= 0.02 && monotone,
        &format!("max |SSA-EM| = {:.2}pp, monotone in x0 and y0: {monotone}", 100.0 * worst_gap),
    );
}

#[test]
fn criterion_5_fluid_limit_rate() {
    let rows = fluid_limit_study(&[100.0, 1000.0, 10000.0], 20, 5.0, 1).unwrap();
    let logs_v: Vec<f64> = rows.iter().map(|(v, _)| v.ln()).collect();
    let logs_d: Vec<f64> = rows.iter().map(|(_, d)| d.ln()).collect();
    let slope = stats::slope(&logs_v, &logs_d);
    report(
        "5 (fluid-limit rate)",
        (-0.65..=-0.35).contains(&slope),
        &format!("log-log slope {slope:.3}"),
    );
}

#[test]
fn criterion_6_coupling_quality() {
    let network = models::metabolism(0);
    let mut template = SimConfig::new(0.0, vec![1.0, 1.0], 1.0, 1);
    template.em_step = 1e-2;
    let rows =
        crnapprox::coupled::sup_distance_study(&network, &template, &[200.0, 400.0, 800.0], 20)
            .unwrap();
    let decreasing = rows.windows(2).all(|w| w[1].median_sup_distance < w[0].median_sup_distance);
    let medians: Vec<String> = rows
        .iter()
        .map(|r| format!("V={}: {:.4}", r.volume, r.median_sup_distance))
        .collect();
    report(
        "6 (coupling quality)",
        decreasing,
        &medians.join(", "),
    );
}

/// The ratio-of-Poisson-masses form of the conditional law, independent of
/// the binomial identity used by the implementation.
fn conditional_cdf_ratio(m: u64, lam_half: f64, diff_threshold: i64) -> f64 {
    let ln_pmf = |k: u64, lam: f64| k as f64 * lam.ln() - lam - statrs::function::gamma::ln_gamma(k as f64 + 1.0);
    let ln_total = ln_pmf(m, 2.0 * lam_half);
    let mut acc = f64::NEG_INFINITY;
    let mut i = -(m as i64);
    while i < diff_threshold && i <= m as i64 {
        if (m as i64 + i) % 2 == 0 {
            let a = ((m as i64 + i) / 2) as u64;
            let term = ln_pmf(a, lam_half) + ln_pmf(m - a, lam_half);
            acc = if acc == f64::NEG_INFINITY {
                term
            } else {
                let (hi, lo) = if acc >= term { (acc, term) } else { (term, acc) };
                hi + (lo - hi).exp().ln_1p()
            };
        }
        i += 1;
    }
    if acc == f64::NEG_INFINITY {
        0.0
    } else {
        (acc - ln_total).exp().min(1.0)
    }
}

#[test]
fn criterion_7_kmt_statistical_validity() {
    // marginal law: pooled transformed increments over 1e4 seeds, n=16,
    // grid step 1, against Poisson(1)
    let n_seeds = 10_000u64;
    let mut histogram = [0f64; 8]; // counts 0..=6 and >= 7
    for seed in 0..n_seeds {
        let mut rng = stream_rng(seed, 3);
        let values: Vec<f64> = (0..16)
            .map(|_| rand::Rng::sample(&mut rng, rand_distr::StandardNormal))
            .collect();
        let normals = DyadicIncrements::new(1.0, values).unwrap();
        let counts = kmt_transform(&normals).unwrap();
        for &v in counts.values() {
            let c = (v + 1.0).round() as usize; // count = sqrt(1)*v + 1
            histogram[c.min(7)] += 1.0;
        }
    }
    let total = 16.0 * n_seeds as f64;
    let mut pmf = 1.0f64.exp().recip(); // Poisson(1) at 0
    let mut expected = [0f64; 8];
    let mut cum = 0.0;
    for (k, e) in expected.iter_mut().enumerate().take(7) {
        *e = pmf * total;
        cum += pmf;
        pmf /= (k + 1) as f64; // lambda = 1
    }
    expected[7] = (1.0 - cum) * total;
    let p = stats::chi_square_gof(&histogram, &expected, 0);
    let marginal_ok = p > 0.01;

    // conditional law: binomial identity vs the Poisson-mass ratio
    let mut worst: f64 = 0.0;
    let level = 1u32;
    let delta = 1.0;
    for m in 0..=60u64 {
        let y = m as f64 - 2.0;
        for diff in -(m as i64 + 1)..=(m as i64 + 1) {
            let via_binom = conditional_cdf(level, delta, diff as f64, y).unwrap();
            let via_ratio = conditional_cdf_ratio(m, 1.0, diff);
            worst = worst.max((via_binom - via_ratio).abs());
        }
    }
    let conditional_ok = worst <= 1e-12;

    // dyadic consistency and lattice invariants on 1e3 random seeds
    let mut invariants_ok = true;
    for seed in 0..1000u64 {
        let mut rng = stream_rng(seed, 4);
        let values: Vec<f64> = (0..16)
            .map(|_| rand::Rng::sample(&mut rng, rand_distr::StandardNormal))
            .collect();
        let normals = DyadicIncrements::new(0.25, values).unwrap();
        let out = kmt_transform(&normals).unwrap();
        if !out.is_lattice_valid() {
            invariants_ok = false;
        }
        let counts: Vec<i64> = out
            .values()
            .iter()
            .map(|&v| (0.5 * v + 0.25).round() as i64)
            .collect();
        if counts.iter().any(|&c| c < 0) {
            invariants_ok = false;
        }
        let sums = build_dyadic_sums(&out);
        // each parent block equals the sum of its children, exactly on the
        // standardized lattice
        for j in 1..4u32 {
            for k in 1..(16 >> j) {
                let parent = 0.5 * sums.v(j, k) + 2f64.powi(j as i32) * 0.25;
                let left = 0.5 * sums.v(j - 1, 2 * k) + 2f64.powi(j as i32 - 1) * 0.25;
                let right = 0.5 * sums.v(j - 1, 2 * k + 1) + 2f64.powi(j as i32 - 1) * 0.25;
                if (parent - left - right).abs() > 1e-9 {
                    invariants_ok = false;
                }
            }
        }
        let paired = assemble_paired_paths(&normals, &out).unwrap();
        if paired.poisson_path.windows(2).any(|w| w[1] < w[0]) {
            invariants_ok = false;
        }
    }

    report(
        "7 (KMT statistical validity)",
        marginal_ok && conditional_ok && invariants_ok,
        &format!(
            "marginal chi-square p = {p:.4}, conditional max gap {worst:.2e}, invariants: {invariants_ok}"
        ),
    );
}

#[test]
fn criterion_8_performance_ordering() {
    let study = basin_study();
    report(
        "8 (performance ordering)",
        study.em_seconds < study.ssa_seconds,
        &format!(
            "EM {:.1}s vs SSA {:.1}s (ratio {:.3})",
            study.em_seconds,
            study.ssa_seconds,
            study.em_seconds / study.ssa_seconds
        ),
    );
}
