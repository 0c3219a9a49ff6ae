use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_trials, ChannelSampler, SimConfig, SimResult};
use crate::channel::mutual_information;
use crate::error::{Error, Result};
use crate::prob::{
    entropy, enumerate_n_types, Channel, ConditionalType, Distribution, EmpiricalType,
    DEFAULT_ENUMERATION_CAP,
};
use crate::source::{rdf, RdfOptions, SourceSpec};

/// Squared-distance radius of the typical conditional-type set:
/// `|X||Y| (log n / n) / Φ_min`.
pub fn xi_n_threshold(phi: &EmpiricalType, w: &Channel) -> Result<f64> {
    if phi.min_count() == 0 {
        return Err(Error::DomainError("input type must have full support".into()));
    }
    let n = phi.n() as f64;
    let phi_min = phi.min_count() as f64 / n;
    Ok((w.input_size() * w.output_size()) as f64 * n.ln() / n / phi_min)
}

/// Estimates `P[P_{Y|x} ∉ Ξ_n]` for a fixed input word of type `phi_n`.
/// Diagnostics: `bound` = `2|X||Y| / n²` and `bound_respected`
/// (estimate within `bound + 3 std_error`).
pub fn xi_n_violation_rate(phi_n: &EmpiricalType, w: &Channel, trials: u64, seed: u64) -> Result<SimResult> {
    if phi_n.alphabet_size() != w.input_size() {
        return Err(Error::DimensionMismatch {
            expected: w.input_size(),
            got: phi_n.alphabet_size(),
        });
    }
    let threshold = xi_n_threshold(phi_n, w)?;
    let cfg = SimConfig::new(seed, trials, phi_n.n(), 1.0)?;
    let x = phi_n.canonical_sequence();
    let ch = ChannelSampler::new(w)?;
    let hits = run_trials(&cfg, |_, rng| {
        let joint = ch.joint_counts(&x, w.output_size(), rng);
        Ok(ConditionalType::from_joint_counts(joint)?.squared_distance_to(w)? > threshold)
    })?;
    let count = hits.iter().filter(|&&h| h).count() as u64;
    let n = phi_n.n() as f64;
    let bound = 2.0 * (w.input_size() * w.output_size()) as f64 / (n * n);
    let r = SimResult::from_count(count, trials);
    let respected = r.estimate <= bound + 3.0 * r.std_error;
    Ok(r.with("bound", bound)
        .with("bound_respected", if respected { 1.0 } else { 0.0 })
        .with("threshold", threshold))
}

fn check_distortion(distortion: &[Vec<f64>], source_size: usize) -> Result<usize> {
    if distortion.len() != source_size || distortion.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: source_size,
            got: distortion.len(),
        });
    }
    let width = distortion[0].len();
    if distortion.iter().any(|r| r.len() != width) {
        return Err(Error::InvalidSource("ragged distortion matrix".into()));
    }
    Ok(width)
}

/// Rearranges `seq` into the next lexicographic permutation; false after the last.
fn next_permutation(seq: &mut [usize]) -> bool {
    let Some(i) = seq.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = seq.iter().rposition(|&v| v > seq[i]).expect("pivot has a successor");
    seq.swap(i, j);
    seq[i + 1..].reverse();
    true
}

/// `|{s ∈ T_Q : d(s, ŝ) ≤ D}|` by walking the type class.
pub fn dball_count_exact(
    q_type: &EmpiricalType,
    s_hat: &[usize],
    distortion: &[Vec<f64>],
    d: f64,
    cap: u128,
) -> Result<u128> {
    let width = check_distortion(distortion, q_type.alphabet_size())?;
    if s_hat.len() as u64 != q_type.n() {
        return Err(Error::LengthMismatch {
            left: s_hat.len(),
            right: q_type.n() as usize,
        });
    }
    if let Some(&bad) = s_hat.iter().find(|&&t| t >= width) {
        return Err(Error::SymbolOutOfRange {
            symbol: bad,
            alphabet_size: width,
        });
    }
    match q_type.type_class_size() {
        Some(size) if size <= cap => {}
        size => {
            return Err(Error::EnumerationTooLarge {
                count: size.unwrap_or(u128::MAX),
                cap,
            })
        }
    }
    let n = q_type.n() as f64;
    let mut s = q_type.canonical_sequence();
    let mut count = 0u128;
    loop {
        let total: f64 = s.iter().zip(s_hat).map(|(&a, &b)| distortion[a][b]).sum();
        if total / n <= d + 1e-12 {
            count += 1;
        }
        if !next_permutation(&mut s) {
            break;
        }
    }
    Ok(count)
}

/// `ln[(n+1)^{|S||Ŝ|} exp(n (H(Q) - R(Q, D)))]`.
pub fn dball_bound_ln(q_type: &EmpiricalType, reproduction_size: usize, rate: f64) -> f64 {
    let n = q_type.n() as f64;
    let dims = (q_type.alphabet_size() * reproduction_size) as f64;
    dims * (n + 1.0).ln() + n * (entropy(&q_type.distribution::<f64>()) - rate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DballCheck {
    pub count: u128,
    pub ln_bound: f64,
    pub holds: bool,
}

pub fn dball_check(
    q_type: &EmpiricalType,
    s_hat: &[usize],
    distortion: &[Vec<f64>],
    d: f64,
    opts: &RdfOptions,
) -> Result<DballCheck> {
    let count = dball_count_exact(q_type, s_hat, distortion, d, DEFAULT_ENUMERATION_CAP)?;
    let src = SourceSpec::new(q_type.distribution(), distortion.to_vec())?;
    let rate = rdf(&src, d, opts)?.rate;
    let ln_bound = dball_bound_ln(q_type, src.reproduction_size(), rate);
    let holds = count == 0 || (count as f64).ln() <= ln_bound + 1e-9;
    Ok(DballCheck {
        count,
        ln_bound,
        holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiContinuity {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `|I(p, W) - I(q, W)|` against `δ|X| log|Y| - |Y||X| δ log(|X| δ)`.
pub fn mi_continuity_check(p: &Distribution, q: &Distribution, w: &Channel, delta: f64) -> Result<MiContinuity> {
    let (nx, ny) = (w.input_size() as f64, w.output_size() as f64);
    let max = 1.0 / (2.0 * nx * ny);
    if delta > max {
        return Err(Error::DeltaTooLarge { delta, max });
    }
    if !(delta >= 0.0) {
        return Err(Error::DomainError(format!("delta must be nonnegative, got {delta}")));
    }
    let gap = p.max_abs_diff(q);
    if gap > delta + 1e-15 {
        return Err(Error::DomainError(format!(
            "max |p - q| = {gap} exceeds delta = {delta}"
        )));
    }
    let lhs = (mutual_information(p, w)? - mutual_information(q, w)?).abs();
    let xd = nx * delta;
    let tail = if xd > 0.0 { ny * xd * xd.ln() } else { 0.0 };
    let rhs = delta * nx * ny.ln() - tail;
    Ok(MiContinuity {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    })
}

/// Exhaustive restricted-ball check over all source types `Q` and
/// reproduction types of one block length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DballSweepRow {
    pub n: u64,
    pub checks: u64,
    pub violations: u64,
    /// Largest `ln |B| - ln bound` among nonempty balls.
    pub max_log_slack: f64,
}

/// Runs [`dball_check`] for every `n <= n_max`, every source type, one
/// reproduction word per reproduction type, and every `d` in `d_grid`.
pub fn dball_sweep(distortion: &[Vec<f64>], n_max: u64, d_grid: &[f64], opts: &RdfOptions) -> Result<Vec<DballSweepRow>> {
    let source_size = distortion.len();
    let width = check_distortion(distortion, source_size)?;
    (1..=n_max)
        .map(|n| {
            let sources = enumerate_n_types(source_size, n, DEFAULT_ENUMERATION_CAP)?;
            let reproductions = enumerate_n_types(width, n, DEFAULT_ENUMERATION_CAP)?;
            let cells: Vec<(&EmpiricalType, &EmpiricalType, f64)> = sources
                .iter()
                .flat_map(|q| reproductions.iter().flat_map(move |r| d_grid.iter().map(move |&d| (q, r, d))))
                .collect();
            let checks = cells
                .par_iter()
                .map(|&(q, r, d)| dball_check(q, &r.canonical_sequence(), distortion, d, opts))
                .collect::<Result<Vec<_>>>()?;
            let violations = checks.iter().filter(|c| !c.holds).count() as u64;
            let max_log_slack = checks
                .iter()
                .filter(|c| c.count > 0)
                .map(|c| (c.count as f64).ln() - c.ln_bound)
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(DballSweepRow {
                n,
                checks: checks.len() as u64,
                violations,
                max_log_slack,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiContinuitySweep {
    pub triples: u64,
    pub violations: u64,
    /// Largest `lhs / rhs` over triples with `rhs > 0`.
    pub max_ratio: f64,
}

/// Random `(p, q, δ)` with `δ` uniform on `(0, 1/(2|X||Y|)]` and
/// `max |p - q| <= δ`; triple `i` uses stream `i`.
pub fn random_continuity_triple<R: Rng + ?Sized>(w: &Channel, rng: &mut R) -> Result<(Distribution, Distribution, f64)> {
    let k = w.input_size();
    let max = 1.0 / (2.0 * (k * w.output_size()) as f64);
    let dirichlet = |rng: &mut R| -> Result<Vec<f64>> {
        let v: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        Ok(Distribution::from_weights(v)?.into_vec())
    };
    let p = dirichlet(rng)?;
    let r = dirichlet(rng)?;
    let delta = max * (1.0 - rng.gen::<f64>());
    let spread = p.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let t = if spread > 0.0 { (delta / spread).min(1.0) } else { 0.0 } * (1.0 - rng.gen::<f64>());
    let q: Vec<f64> = p.iter().zip(&r).map(|(a, b)| (1.0 - t) * a + t * b).collect();
    Ok((Distribution::new(p)?, Distribution::new(q)?, delta))
}

pub fn mi_continuity_sweep(w: &Channel, triples: u64, seed: u64) -> Result<MiContinuitySweep> {
    let cfg = SimConfig::new(seed, triples, 1, 1.0)?;
    let checks = run_trials(&cfg, |_, rng| {
        let (p, q, delta) = random_continuity_triple(w, rng)?;
        mi_continuity_check(&p, &q, w, delta)
    })?;
    Ok(MiContinuitySweep {
        triples,
        violations: checks.iter().filter(|c| !c.holds).count() as u64,
        max_ratio: checks
            .iter()
            .filter(|c| c.rhs > 0.0)
            .map(|c| c.lhs / c.rhs)
            .fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binomial;

    fn hamming(k: usize) -> Vec<Vec<f64>> {
        (0..k)
            .map(|a| (0..k).map(|b| if a == b { 0.0 } else { 1.0 }).collect())
            .collect()
    }

    #[test]
    fn xi_examples() {
        let phi = EmpiricalType::new(vec![50, 50]).unwrap();
        let r = xi_n_violation_rate(&phi, &Channel::identity(2), 1000, 1).unwrap();
        assert_eq!(r.estimate, 0.0);
        let phi = EmpiricalType::new(vec![50, 50]).unwrap();
        let r = xi_n_violation_rate(&phi, &Channel::bsc(0.2).unwrap(), 20_000, 2).unwrap();
        assert_eq!(r.diagnostics["bound_respected"], 1.0);
        assert!(xi_n_violation_rate(&EmpiricalType::new(vec![0, 10]).unwrap(), &Channel::bsc(0.2).unwrap(), 10, 0).is_err());
    }

    #[test]
    fn permutation_walk_covers_class() {
        let t = EmpiricalType::new(vec![3, 2, 2]).unwrap();
        let mut s = t.canonical_sequence();
        let mut k = 1;
        while next_permutation(&mut s) {
            k += 1;
        }
        assert_eq!(k as u128, t.type_class_size().unwrap());
    }

    #[test]
    fn dball_examples() {
        let h = hamming(2);
        let q = EmpiricalType::new(vec![5, 5]).unwrap();
        let zeros = vec![0usize; 10];
        assert_eq!(dball_count_exact(&q, &zeros, &h, 1.0, 1 << 20).unwrap(), 252);
        // every s of type (5,5) differs from all-zeros in exactly 5 places
        assert_eq!(dball_count_exact(&q, &zeros, &h, 0.2, 1 << 20).unwrap(), 0);
        assert_eq!(dball_count_exact(&q, &zeros, &h, 0.5, 1 << 20).unwrap(), 252);
        // ŝ of type (5,5): flips come in pairs, k ones of s land on ŝ's zeros
        let s_hat: Vec<usize> = (0..10).map(|i| usize::from(i >= 5)).collect();
        let oracle: u128 = (0..=1u64).map(|k| binomial(5, k).unwrap().pow(2)).sum();
        assert_eq!(dball_count_exact(&q, &s_hat, &h, 0.2, 1 << 20).unwrap(), oracle);
        assert!(matches!(
            dball_count_exact(&q, &zeros, &h, 0.2, 100),
            Err(Error::EnumerationTooLarge { .. })
        ));
        let c = dball_check(&q, &s_hat, &h, 0.2, &RdfOptions::default()).unwrap();
        assert!(c.holds);
    }

    #[test]
    fn mi_continuity_examples() {
        let w = Channel::bsc(0.11).unwrap();
        let p = Distribution::new(vec![0.3, 0.7]).unwrap();
        let r = mi_continuity_check(&p, &p, &w, 1e-3).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds);
        let q = Distribution::new(vec![0.3005, 0.6995]).unwrap();
        assert!(mi_continuity_check(&p, &q, &w, 1e-3).unwrap().holds);
        assert!(matches!(
            mi_continuity_check(&p, &q, &w, 0.2),
            Err(Error::DeltaTooLarge { .. })
        ));
        assert!(mi_continuity_check(&p, &q, &w, 1e-4).is_err());
    }

    #[test]
    fn sweeps_small() {
        let rows = dball_sweep(&hamming(2), 6, &[0.0, 0.3, 1.0], &RdfOptions::default()).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.violations == 0));
        assert_eq!(rows[5].checks, 7 * 7 * 3);
        let w = Channel::new(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.1, 0.8]]).unwrap();
        let s = mi_continuity_sweep(&w, 200, 4).unwrap();
        assert_eq!(s.violations, 0);
        assert!(s.max_ratio > 0.0 && s.max_ratio <= 1.0);
    }

    #[test]
    fn mi_continuity_rhs_scaling() {
        // at delta = 1/n the right side behaves like c log n / n
        let w = Channel::bsc(0.11).unwrap();
        let p = Distribution::uniform(2);
        let ratios: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&n| {
                let r = mi_continuity_check(&p, &p, &w, 1.0 / n).unwrap().rhs;
                r / (n.ln() / n)
            })
            .collect();
        assert!(ratios.windows(2).all(|v| (v[1] / v[0] - 1.0).abs() < 0.2), "{ratios:?}");
    }
}
