use serde::{Deserialize, Serialize};

use super::{run_trials, source_counts, ChannelSampler, SimConfig, SymbolSampler};
use crate::channel::{conditional_information_variance, information_density};
use crate::error::{Error, Result};
use crate::prob::{q_function, Channel, EmpiricalType};
use crate::source::{rdf, rdf_gradient, RdfOptions, SourceSpec, DEFAULT_GRADIENT_STEP};

const VARIANCE_TOL: f64 = 1e-12;

/// Standardized first-order statistics with summary moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderSamples {
    pub samples: Vec<f64>,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Kolmogorov-Smirnov distance to the standard normal.
    pub ks_statistic: f64,
    /// Variance used for standardization (unstandardized units, nats²).
    pub standardizing_variance: f64,
}

impl FirstOrderSamples {
    fn new(samples: Vec<f64>, standardizing_variance: f64) -> Self {
        let k = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / k;
        let variance = if samples.len() > 1 {
            samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        Self {
            ks_statistic: ks_statistic_normal(&samples),
            samples,
            mean,
            variance,
            standardizing_variance,
        }
    }
}

/// `sup_z |F_n(z) - Φ(z)|` against the standard normal CDF.
pub fn ks_statistic_normal(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let cdf = q_function(-z);
            (cdf - i as f64 / k).max((i + 1) as f64 / k - cdf)
        })
        .fold(0.0, f64::max)
}

/// Information density table with zero in cells the channel never produces.
fn density_table(phi: &EmpiricalType, w: &Channel) -> Result<Vec<Vec<f64>>> {
    Ok(information_density(&phi.distribution(), w)?
        .into_iter()
        .map(|row| row.into_iter().map(|c| c.unwrap_or(0.0)).collect())
        .collect())
}

/// `Σ_{a,b} (N(a,b)/m - Φ(a) W(b|a)) i(a;b)`, the linear term of
/// `I(Φ, P_{Y|x}) - I(Φ, W)`.
fn linear_mi_term(joint: &[Vec<u64>], phi: &[f64], w: &Channel, density: &[Vec<f64>], m: f64) -> f64 {
    let mut t = 0.0;
    for (a, row) in joint.iter().enumerate() {
        for (b, &k) in row.iter().enumerate() {
            t += (k as f64 / m - phi[a] * w.get(a, b)) * density[a][b];
        }
    }
    t
}

fn check_input(phi: &EmpiricalType, w: &Channel) -> Result<()> {
    if phi.alphabet_size() != w.input_size() {
        return Err(Error::DimensionMismatch {
            expected: w.input_size(),
            got: phi.alphabet_size(),
        });
    }
    Ok(())
}

/// Linear term of the empirical mutual information for a fixed input word of
/// type `phi_n`, standardized by `sqrt(V(Φ_n, W) / n)`.
pub fn first_order_mi_samples(phi_n: &EmpiricalType, w: &Channel, trials: u64, seed: u64) -> Result<FirstOrderSamples> {
    check_input(phi_n, w)?;
    let cfg = SimConfig::new(seed, trials, phi_n.n(), 1.0)?;
    let phi = phi_n.distribution::<f64>();
    let v = conditional_information_variance(&phi, w)?;
    if v <= VARIANCE_TOL {
        return Err(Error::ZeroVariance { variance: v });
    }
    let density = density_table(phi_n, w)?;
    let x = phi_n.canonical_sequence();
    let ch = ChannelSampler::new(w)?;
    let m = phi_n.n() as f64;
    let sd = (v / m).sqrt();
    let samples = run_trials(&cfg, |_, rng| {
        let joint = ch.joint_counts(&x, w.output_size(), rng);
        Ok(linear_mi_term(&joint, phi.probs(), w, &density, m) / sd)
    })?;
    Ok(FirstOrderSamples::new(samples, v / m))
}

/// Linear term of the finite-block distortion around the operating point
/// `(d, R(P, d))`:
/// `A = Σ_s (P_S(s) - P(s)) (-g(s) D'_R) + rho D'_R T`, with `D'_R = 1 / R'(d)`.
///
/// Standardized by its exact variance `D'_R² (V_S / n + rho² V(Φ_m, W) / m)`.
/// The diagnostic `predicted_variance` is the `m = rho n` form
/// `D'_R² (V_S + rho V) / n`. Each trial draws the channel output before the
/// source block, so the channel part matches [`first_order_mi_samples`] for
/// the same seed.
pub fn first_order_jscc_samples(
    src: &SourceSpec,
    d: f64,
    w: &Channel,
    phi_m: &EmpiricalType,
    cfg: &SimConfig,
    opts: &RdfOptions,
) -> Result<(FirstOrderSamples, f64)> {
    cfg.validate()?;
    check_input(phi_m, w)?;
    if phi_m.n() != cfg.m() {
        return Err(Error::InvalidConfig(format!(
            "input type has denominator {}, expected m = {}",
            phi_m.n(),
            cfg.m()
        )));
    }
    let g = rdf_gradient(src, d, DEFAULT_GRADIENT_STEP, opts)?;
    let slope = rdf(src, d, opts)?.lagrange_slope;
    let dr = 1.0 / slope;
    let p = src.distribution().probs();
    let v_s = crate::source::variance_under(src.distribution(), &g);
    let phi = phi_m.distribution::<f64>();
    let v_c = conditional_information_variance(&phi, w)?;
    let (n, m) = (cfg.n as f64, phi_m.n() as f64);
    let var = dr * dr * (v_s / n + cfg.rho * cfg.rho * v_c / m);
    if var <= VARIANCE_TOL * dr * dr / n {
        return Err(Error::ZeroVariance { variance: var });
    }
    let predicted_variance = dr * dr * (v_s + cfg.rho * v_c) / n;
    let density = density_table(phi_m, w)?;
    let x = phi_m.canonical_sequence();
    let ch = ChannelSampler::new(w)?;
    let src_sampler = SymbolSampler::new(p)?;
    let sd = var.sqrt();
    let samples = run_trials(cfg, |_, rng| {
        let joint = ch.joint_counts(&x, w.output_size(), rng);
        let t = linear_mi_term(&joint, phi.probs(), w, &density, m);
        let counts = source_counts(&src_sampler, p.len(), cfg.n, rng);
        let source_part: f64 = counts
            .iter()
            .zip(p)
            .zip(&g)
            .map(|((&c, &ps), &gs)| (c as f64 / n - ps) * (-gs * dr))
            .sum();
        Ok((source_part + cfg.rho * dr * t) / sd)
    })?;
    Ok((FirstOrderSamples::new(samples, var), predicted_variance))
}
