//! Acceptance suite: one PASS/FAIL line per criterion. Run with
//! `cargo test --test acceptance`.

use std::time::{Duration, Instant};

use fbl_jscc::jscc::{distortion_threshold, jscc_dispersion, lossless_rho, JsccOptions, JsccProblem};
use fbl_jscc::prob::{Channel, Distribution, EmpiricalType};
use fbl_jscc::separation::{
    preset_eps_grid, log_grid, separation_curve, separation_equivalent_eps, DEFAULT_GRID_TOL, PRESET_LAMBDAS,
};
use fbl_jscc::sim::{
    calibrate_gamma, dball_sweep, excess_event_probability, first_order_mi_samples, mi_continuity_sweep,
    uep_simulate, xi_n_violation_rate, SimConfig, UepConfig,
};
use fbl_jscc::source::{rdf, source_dispersion, RdfOptions, SourceSpec};

const LN2: f64 = std::f64::consts::LN_2;
const P: f64 = 0.11;

/// Criteria whose literal figure cannot be met; each maps to the reason printed.
const KNOWN_UNATTAINABLE: &[(usize, &str)] = &[(
    2,
    "the literal D_n = 0.1218 disagrees with its own oracle (h(D) = 1 - target gives 0.12308)",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn h2_bits(d: f64) -> f64 {
    if d <= 0.0 || d >= 1.0 {
        return 0.0;
    }
    -(d * d.log2() + (1.0 - d) * (1.0 - d).log2())
}

fn oracle_q(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn oracle_q_inverse(eps: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if oracle_q(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn bsc_problem(eps: f64) -> JsccProblem {
    JsccProblem::new(
        SourceSpec::hamming(Distribution::uniform(2)),
        Channel::bsc(P).unwrap(),
        1.0,
        eps,
    )
    .unwrap()
}

fn oracle_vc_bits() -> f64 {
    P * (1.0 - P) * ((1.0 - P) / P).log2().powi(2)
}

fn oracle_c_bits() -> f64 {
    1.0 - h2_bits(P)
}

fn criterion_1() -> Outcome {
    let opts = JsccOptions::default();
    let r = jscc_dispersion(&bsc_problem(0.1), &opts).unwrap();
    let d_star_oracle = bisect_increasing(h2_bits, 1.0 - oracle_c_bits(), 0.0, 0.5);
    let vj = r.v_j_low / (LN2 * LN2);
    let pass = (r.d_star - 0.110).abs() <= 1e-6
        && (r.d_star - d_star_oracle).abs() <= 1e-6
        && r.v_s_at_d_star.abs() <= 1e-9
        && (vj - oracle_vc_bits()).abs() <= 1e-6
        && (r.v_j_high - r.v_j_low).abs() <= 1e-12;
    outcome(
        pass,
        format!(
            "D* = {:.9} (oracle {:.9}), V_S = {:.2e}, V_J = {:.9} bits^2 (oracle {:.9})",
            r.d_star,
            d_star_oracle,
            r.v_s_at_d_star,
            vj,
            oracle_vc_bits()
        ),
    )
}

fn criterion_2() -> Outcome {
    let opts = JsccOptions::default();
    let problem = bsc_problem(0.1);
    let disp = jscc_dispersion(&problem, &opts).unwrap();
    let row = distortion_threshold(&problem, 1000, &opts).unwrap();
    let src = SourceSpec::hamming(Distribution::uniform(2));

    let target_bits = oracle_c_bits() - (oracle_vc_bits() / 1000.0).sqrt() * oracle_q_inverse(0.1);
    let d_oracle = bisect_increasing(h2_bits, 1.0 - target_bits, 0.0, 0.5);
    let r_at_dn = rdf(&src, row.d_n_low, &RdfOptions::default()).unwrap().rate / LN2;
    let target_ok = (oracle_q_inverse(0.1) - 1.281_551_565_544_600_4).abs() <= 1e-12
        && (r_at_dn - target_bits).abs() <= 1e-9 && (row.target_low / LN2 - target_bits).abs() <= 1e-9;
    let oracle_ok = (row.d_n_low - d_oracle).abs() <= 1e-4;
    let literal_ok = (row.d_n_low - 0.1218).abs() <= 1e-4;

    let z = oracle_q_inverse(0.1);
    let mut monotone = true;
    let mut converging = true;
    let mut prev = f64::INFINITY;
    for n in [100u64, 1_000, 10_000, 100_000] {
        let r = distortion_threshold(&problem, n, &opts).unwrap();
        monotone &= r.d_n_low <= prev && r.d_n_high <= r.d_n_low + 1e-15;
        prev = r.d_n_low;
        let rate = rdf(&src, r.d_n_low, &RdfOptions::default()).unwrap().rate;
        converging &= (rate - disp.capacity).abs() <= (disp.v_j_high / n as f64).sqrt() * z.abs() + 1e-9;
        converging &= r.d_n_low >= disp.d_star;
    }
    outcome(
        target_ok && oracle_ok && literal_ok && monotone && converging,
        format!(
            "R(D_n) = {r_at_dn:.12} bits vs target {target_bits:.12}; D_n = {:.6} (oracle {d_oracle:.6}, literal 0.1218 {}); monotone {monotone}; converging {converging}",
            row.d_n_low,
            if literal_ok { "met" } else { "not met" }
        ),
    )
}

fn criterion_3() -> Outcome {
    let eps = 0.1;
    let r = separation_equivalent_eps(eps, 1.0, DEFAULT_GRID_TOL).unwrap();
    let oracle = oracle_q(2f64.sqrt() * oracle_q_inverse(1.0 - 0.9f64.sqrt()));
    let split = 1.0 - (1.0 - eps).sqrt();
    let pass = (r.eps_tilde - oracle).abs() <= 1e-6
        && (r.split.eps_s - split).abs() <= 1e-6
        && (r.split.eps_c - split).abs() <= 1e-6;
    outcome(
        pass,
        format!(
            "eps_tilde = {:.9} (oracle {oracle:.9}), split = ({:.9}, {:.9}) (oracle {split:.9})",
            r.eps_tilde, r.split.eps_s, r.split.eps_c
        ),
    )
}

fn criterion_4() -> Outcome {
    let lambdas = log_grid(1e-3, 1e3, 61);
    let mut worst: f64 = 0.0;
    for eps in [0.01, 0.1, 0.3] {
        for &l in &lambdas {
            let a = separation_equivalent_eps(eps, l, DEFAULT_GRID_TOL).unwrap().eps_tilde;
            let b = separation_equivalent_eps(eps, 1.0 / l, DEFAULT_GRID_TOL).unwrap().eps_tilde;
            worst = worst.max((a - b).abs());
        }
    }
    let far = separation_equivalent_eps(0.1, 1e6, DEFAULT_GRID_TOL).unwrap().eps_tilde;
    let grid = preset_eps_grid();
    let curve = separation_curve(&grid, &PRESET_LAMBDAS, DEFAULT_GRID_TOL).unwrap();
    let mut lambdas_seen: Vec<f64> = curve.iter().map(|p| p.lambda).collect();
    lambdas_seen.dedup();
    let eight = lambdas_seen == PRESET_LAMBDAS && curve.len() == 8 * grid.len();
    let mut ordered = true;
    for k in 0..PRESET_LAMBDAS.len() - 1 {
        for i in 0..grid.len() {
            let lower = &curve[k * grid.len() + i];
            let upper = &curve[(k + 1) * grid.len() + i];
            ordered &= lower.eps == upper.eps && upper.eps_tilde >= lower.eps_tilde - 1e-12;
        }
    }
    outcome(
        worst <= 1e-6 && far >= 0.099 && eight && ordered,
        format!("max symmetry gap {worst:.2e}; eps_tilde(0.1, 1e6) = {far:.6}; eight curves {eight}; nondecreasing in lambda {ordered}"),
    )
}

fn criterion_5() -> Outcome {
    let w = Channel::bsc(P).unwrap();
    let opts = JsccOptions::default();
    let mut worst: f64 = 0.0;
    for probs in [
        vec![0.11, 0.89],
        vec![0.2, 0.3, 0.5],
        vec![0.05, 0.15, 0.3, 0.5],
        vec![0.7, 0.1, 0.1, 0.05, 0.05],
    ] {
        let p = Distribution::new(probs.clone()).unwrap();
        let row = lossless_rho(&p, &w, 1000, 0.1, &opts).unwrap();
        let mean: f64 = probs.iter().map(|q| -q * q.ln()).sum();
        let var: f64 = probs.iter().map(|q| q * (-q.ln() - mean).powi(2)).sum();
        worst = worst.max((row.source_dispersion - var).abs());
    }
    let bern = Distribution::bernoulli(P).unwrap();
    let lossless = lossless_rho(&bern, &w, 1000, 0.1, &opts).unwrap().source_dispersion;
    let hamming_oracle = P * (1.0 - P) * ((1.0 - P) / P).ln().powi(2);
    let hamming = source_dispersion(&SourceSpec::hamming(bern), 0.05, &RdfOptions::default()).unwrap();
    let pass = worst <= 1e-9 && (lossless - hamming_oracle).abs() <= 1e-6 && (hamming - hamming_oracle).abs() <= 1e-6;
    outcome(
        pass,
        format!("max |V_lossless - Var log P| = {worst:.2e}; Bernoulli(0.11): lossless {lossless:.9}, Hamming V_S {hamming:.9}, oracle {hamming_oracle:.9} nats^2"),
    )
}

fn criterion_6() -> Outcome {
    let phi = EmpiricalType::new(vec![5_000, 5_000]).unwrap();
    let s = first_order_mi_samples(&phi, &Channel::bsc(P).unwrap(), 10_000, 20_240_601).unwrap();
    outcome(
        (0.95..=1.05).contains(&s.variance) && s.ks_statistic <= 0.02,
        format!("variance {:.4}, KS {:.4}, mean {:.4}", s.variance, s.ks_statistic, s.mean),
    )
}

fn criterion_7() -> Outcome {
    let opts = JsccOptions::default();
    let problem = bsc_problem(0.1);
    let d = distortion_threshold(&problem, 1000, &opts).unwrap().d_n_low;
    let cfg = SimConfig::new(7, 100_000, 1000, 1.0).unwrap();
    let phi = EmpiricalType::new(vec![500, 500]).unwrap();
    let r = excess_event_probability(&problem.source, &problem.channel, &phi, d, &cfg, &opts.rdf).unwrap();
    outcome(
        (0.06..=0.14).contains(&r.estimate),
        format!(
            "estimate {:.4} +/- {:.4} at d = {d:.6} (slack 0.04 for the omitted O(log n / n) term)",
            r.estimate, r.std_error
        ),
    )
}

fn criterion_8() -> Outcome {
    let w = Channel::bsc(0.2).unwrap();
    let mut xi_ok = true;
    let mut xi_detail = Vec::new();
    for n in [50u64, 100, 200, 400] {
        let phi = EmpiricalType::new(vec![n / 2, n - n / 2]).unwrap();
        let r = xi_n_violation_rate(&phi, &w, 100_000, 3 + n).unwrap();
        let bound = 2.0 * 2.0 * 2.0 / (n * n) as f64;
        xi_ok &= r.estimate <= bound + 3.0 * r.std_error;
        xi_detail.push(format!("{n}:{:.1e}<={bound:.1e}", r.estimate));
    }
    let d_grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let hamming = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    let rows = dball_sweep(&hamming, 12, &d_grid, &RdfOptions::default()).unwrap();
    let checks: u64 = rows.iter().map(|r| r.checks).sum();
    let dball_violations: u64 = rows.iter().map(|r| r.violations).sum();
    let mi = mi_continuity_sweep(&Channel::bsc(P).unwrap(), 1_000, 5).unwrap();
    outcome(
        xi_ok && dball_violations == 0 && checks > 0 && mi.violations == 0 && mi.triples == 1_000,
        format!(
            "xi [{}]; D-ball {dball_violations} violations in {checks} checks; MI continuity {} violations in {} triples (max ratio {:.3})",
            xi_detail.join(" "),
            mi.violations,
            mi.triples,
            mi.max_ratio
        ),
    )
}

fn criterion_9() -> Outcome {
    let w = Channel::bsc(P).unwrap();
    let types = vec![EmpiricalType::new(vec![64, 64]).unwrap(); 2];
    let eps = [0.2, 0.2];
    let gamma = calibrate_gamma(&w, &types, &eps, 0.01).unwrap();
    let cfg = UepConfig::from_targets(&w, &types, &eps, gamma).unwrap();
    let r = uep_simulate(&cfg, &w, &SimConfig::new(9, 10_000, 128, 1.0).unwrap()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for c in &r.classes {
        pass &= (c.e1.estimate - 0.2).abs() <= 0.08 && c.e2.estimate <= 0.05;
        pass &= c.e1.estimate + c.e2.estimate >= c.overall.estimate - 3.0 * c.overall.std_error;
        parts.push(format!(
            "class {}: rate {:.4}, E1 {:.4}, E2 {:.4}",
            c.class, c.rate, c.e1.estimate, c.e2.estimate
        ));
    }
    outcome(
        pass,
        format!("gamma {:.4} ({:?} mode, random-coding average); {}", r.gamma, r.mode, parts.join("; ")),
    )
}

fn criterion_10() -> Outcome {
    let dir = std::env::temp_dir().join(format!("jscc-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let problem = dir.join("problem.json");
    std::fs::write(
        &problem,
        r#"{"source": {"probs": [0.5, 0.5], "distortion": [[0, 1], [1, 0]]},
            "channel": {"matrix": [[0.89, 0.11], [0.11, 0.89]]}, "rho": 1, "eps": 0.1,
            "sim": {"seed": 2024, "trials": 2000, "n_list": [100, 500],
                    "uep": {"types": [[64, 64], [64, 64]], "eps": [0.2, 0.2]},
                    "dball": {"n_max": 8}}}"#,
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_jscc");
    let mut pass = true;
    let mut checked = 0;
    for what in ["excess", "clt-mi", "clt-jscc", "xi", "uep", "dball", "mi-cont"] {
        for fmt in ["json", "csv"] {
            let mut outputs = Vec::new();
            for (run, workers) in ["1", "1", "4", "4"].iter().enumerate() {
                let out = dir.join(format!("{what}.{run}.{fmt}"));
                let status = std::process::Command::new(bin)
                    .args(["--out", fmt, "-o"])
                    .arg(&out)
                    .arg("simulate")
                    .arg(&problem)
                    .args(["--what", what, "--workers", workers])
                    .status()
                    .unwrap();
                pass &= status.success();
                outputs.push(std::fs::read(&out).unwrap_or_default());
            }
            pass &= !outputs[0].is_empty() && outputs.iter().all(|o| *o == outputs[0]);
            checked += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    outcome(pass, format!("{checked} simulate outputs byte-identical over two runs each at 1 and 4 workers"))
}

fn main() {
    let criteria: [(usize, fn() -> Outcome, Option<Duration>); 10] = [
        (1, criterion_1, Some(Duration::from_secs(1))),
        (2, criterion_2, None),
        (3, criterion_3, None),
        (4, criterion_4, Some(Duration::from_secs(30))),
        (5, criterion_5, None),
        (6, criterion_6, Some(Duration::from_secs(60))),
        (7, criterion_7, Some(Duration::from_secs(300))),
        (8, criterion_8, Some(Duration::from_secs(120))),
        (9, criterion_9, Some(Duration::from_secs(120))),
        (10, criterion_10, None),
    ];
    let mut unexpected = Vec::new();
    for (id, run, limit) in criteria {
        let start = Instant::now();
        let mut o = run();
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            if elapsed > limit {
                o.pass = false;
                o.detail.push_str(&format!("; over the {}s budget", limit.as_secs()));
            }
        }
        let known = KNOWN_UNATTAINABLE.iter().find(|(k, _)| *k == id);
        println!(
            "criterion {id:>2}: {} [{:.2}s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            o.detail
        );
        match (o.pass, known) {
            (false, Some((_, why))) => println!("              known: {why}"),
            (false, None) => unexpected.push(id),
            _ => {}
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
