//! Monte-Carlo and exact-enumeration checks of the finite-blocklength
//! approximations.
//!
//! Every trial owns a ChaCha8 stream selected by its index, so estimates do
//! not depend on how trials are spread over worker threads.

mod bounds;
mod clt;
mod excess;
mod uep;

pub use bounds::{
    dball_bound_ln, dball_check, dball_count_exact, dball_sweep, mi_continuity_check,
    mi_continuity_sweep, random_continuity_triple, xi_n_threshold, xi_n_violation_rate, DballCheck,
    DballSweepRow, MiContinuity, MiContinuitySweep,
};
pub use clt::{
    first_order_jscc_samples, first_order_mi_samples, ks_statistic_normal, FirstOrderSamples,
};
pub use excess::{excess_event_probability, excess_event_sweep};
pub use uep::{
    calibrate_gamma, eta_n_schedule, gamma_n_schedule, uep_simulate, UepClass, UepClassResult,
    UepConfig, UepMode, UepResult,
};

use std::collections::BTreeMap;

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{Channel, Distribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub trials: u64,
    /// Source block length.
    pub n: u64,
    /// Channel uses per source sample.
    #[serde(default = "one")]
    pub rho: f64,
    /// Worker threads; `None` uses the global pool. Does not affect results.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn one() -> f64 {
    1.0
}

impl SimConfig {
    pub fn new(seed: u64, trials: u64, n: u64, rho: f64) -> Result<Self> {
        let cfg = Self {
            seed,
            trials,
            n,
            rho,
            workers: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    /// Channel block length `floor(rho n)`.
    pub fn m(&self) -> u64 {
        (self.rho * self.n as f64).floor() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.n == 0 {
            return Err(Error::InvalidConfig("trials and n must be positive".into()));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() || self.m() == 0 {
            return Err(Error::InvalidConfig(format!(
                "rho = {} gives an empty channel block",
                self.rho
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, f64>,
}

impl SimResult {
    pub fn from_estimate(estimate: f64, trials: u64) -> Self {
        let estimate = estimate.clamp(0.0, 1.0);
        Self {
            estimate,
            std_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
            trials,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn from_count(count: u64, trials: u64) -> Self {
        Self::from_estimate(count as f64 / trials as f64, trials)
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}

/// Generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f` on trials `0..trials` and returns results in trial order.
pub(crate) fn run_trials<T, F>(cfg: &SimConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    let job = || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| f(i, &mut trial_rng(cfg.seed, i)))
            .collect::<Result<Vec<T>>>()
    };
    match cfg.workers {
        None => job(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(job),
    }
}

/// Alias sampler for one distribution.
#[derive(Debug, Clone)]
pub(crate) struct SymbolSampler(WeightedIndex<f64>);

impl SymbolSampler {
    pub(crate) fn new(p: &[f64]) -> Result<Self> {
        WeightedIndex::new(p)
            .map(Self)
            .map_err(|e| Error::InvalidDistribution(e.to_string()))
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.0.sample(rng)
    }
}

/// Per-row samplers of a channel.
#[derive(Debug, Clone)]
pub(crate) struct ChannelSampler(Vec<SymbolSampler>);

impl ChannelSampler {
    pub(crate) fn new(w: &Channel) -> Result<Self> {
        w.rows().map(SymbolSampler::new).collect::<Result<_>>().map(Self)
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        self.0[x].sample(rng)
    }

    /// Joint counts `N(a, b)` of `x` and a fresh channel output.
    pub(crate) fn joint_counts<R: Rng + ?Sized>(
        &self,
        x: &[usize],
        output_size: usize,
        rng: &mut R,
    ) -> Vec<Vec<u64>> {
        let mut counts = vec![vec![0u64; output_size]; self.0.len()];
        for &a in x {
            counts[a][self.sample(a, rng)] += 1;
        }
        counts
    }
}

/// `n` i.i.d. draws from `p`.
pub fn sample_source_block<R: Rng + ?Sized>(p: &Distribution, n: usize, rng: &mut R) -> Vec<usize> {
    let sampler = SymbolSampler::new(p.probs()).expect("validated distribution");
    (0..n).map(|_| sampler.sample(rng)).collect()
}

/// Independent draws `y_i ~ W(. | x_i)`.
pub fn sample_channel_output<R: Rng + ?Sized>(x: &[usize], w: &Channel, rng: &mut R) -> Result<Vec<usize>> {
    if let Some(&bad) = x.iter().find(|&&a| a >= w.input_size()) {
        return Err(Error::SymbolOutOfRange {
            symbol: bad,
            alphabet_size: w.input_size(),
        });
    }
    let sampler = ChannelSampler::new(w)?;
    Ok(x.iter().map(|&a| sampler.sample(a, rng)).collect())
}

pub(crate) fn source_counts<R: Rng + ?Sized>(sampler: &SymbolSampler, k: usize, n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; k];
    for _ in 0..n {
        counts[sampler.sample(rng)] += 1;
    }
    counts
}
