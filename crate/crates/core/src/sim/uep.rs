//! Unequal-error-protection coding with random constant-composition
//! codebooks and the thresholded empirical-mutual-information decoder.
//!
//! Codebooks of `exp(m R)` words are far too large to draw at useful rates,
//! so the default mode averages over the codebook exactly: given the output
//! `y`, a competitor `x'` uniform on its type class passes the threshold with
//! a probability `p(y)` that depends on `y` only through its type and is
//! computed by enumerating joint types. Small codebooks can also be drawn
//! explicitly, which is used to cross-check the averaged mode.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_trials, ChannelSampler, SimConfig, SimResult};
use crate::channel::{conditional_information_variance, mutual_information};
use crate::error::{Error, Result};
use crate::prob::types::ln_factorial;
use crate::prob::{entropy, enumerate_n_types, q_inverse, Channel, ConditionalType, EmpiricalType};

/// `(2/n)(|X|² + log(n+1) + log k + 1)`.
pub fn eta_n_schedule(n: u64, input_size: usize, classes: usize) -> f64 {
    let n_f = n as f64;
    2.0 / n_f * ((input_size * input_size) as f64 + (n_f + 1.0).ln() + (classes as f64).ln() + 1.0)
}

/// `2 η_n + log(k) / (2n) + a log(n) / n` with `a = (degree + 1) / 2`, where
/// `degree` is the polynomial degree of the class count in `n`.
pub fn gamma_n_schedule(n: u64, input_size: usize, classes: usize, degree: u32) -> f64 {
    let n_f = n as f64;
    let a = (degree as f64 + 1.0) / 2.0;
    2.0 * eta_n_schedule(n, input_size, classes) + (classes as f64).ln() / (2.0 * n_f) + a * n_f.ln() / n_f
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UepClass {
    /// Nats per channel use.
    pub rate: f64,
    pub input_type: EmpiricalType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UepMode {
    /// Explicit when the whole codebook has at most `explicit_limit` words.
    #[default]
    Auto,
    Explicit,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UepConfig {
    pub classes: Vec<UepClass>,
    /// Decoder threshold on `I(Φ, P_{y|x}) - R`, nats.
    pub gamma: f64,
    #[serde(default)]
    pub mode: UepMode,
    #[serde(default = "default_explicit_limit")]
    pub explicit_limit: u64,
}

fn default_explicit_limit() -> u64 {
    4096
}

impl UepConfig {
    /// Rates `I(Φ_i, W) - sqrt(V_i / m) Q^-1(eps_i) - gamma`.
    pub fn from_targets(w: &Channel, types: &[EmpiricalType], eps: &[f64], gamma: f64) -> Result<Self> {
        let t = thresholds(w, types, eps)?;
        Ok(Self {
            classes: types
                .iter()
                .zip(t)
                .map(|(ty, t)| UepClass {
                    rate: t - gamma,
                    input_type: ty.clone(),
                })
                .collect(),
            gamma,
            mode: UepMode::Auto,
            explicit_limit: default_explicit_limit(),
        })
    }

    /// `floor(exp(m R_i))` (as a float; may exceed `u64`).
    pub fn codewords(&self) -> Vec<f64> {
        self.classes
            .iter()
            .map(|c| (c.input_type.n() as f64 * c.rate).exp().floor())
            .collect()
    }

    pub fn eta_n(&self) -> f64 {
        let c = &self.classes[0].input_type;
        eta_n_schedule(c.n(), c.alphabet_size(), self.classes.len())
    }

    fn validate(&self, w: &Channel, m: u64) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::InvalidConfig("no message classes".into()));
        }
        if !self.gamma.is_finite() {
            return Err(Error::InvalidConfig("gamma must be finite".into()));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if c.input_type.n() != m {
                return Err(Error::InvalidConfig(format!(
                    "class {i} type has denominator {}, expected {m}",
                    c.input_type.n()
                )));
            }
            if c.input_type.alphabet_size() != w.input_size() {
                return Err(Error::DimensionMismatch {
                    expected: w.input_size(),
                    got: c.input_type.alphabet_size(),
                });
            }
            if !(c.rate >= 0.0) || !c.rate.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "class {i} rate {} gives no codewords",
                    c.rate
                )));
            }
            let cap = entropy(&c.input_type.distribution::<f64>()) - self.eta_n();
            if c.rate > cap {
                return Err(Error::RateCapViolated {
                    class: i,
                    rate: c.rate,
                    cap,
                });
            }
        }
        Ok(())
    }
}

fn thresholds(w: &Channel, types: &[EmpiricalType], eps: &[f64]) -> Result<Vec<f64>> {
    if types.len() != eps.len() {
        return Err(Error::LengthMismatch {
            left: types.len(),
            right: eps.len(),
        });
    }
    types
        .iter()
        .zip(eps)
        .map(|(ty, &e)| {
            let phi = ty.distribution::<f64>();
            let i = mutual_information(&phi, w)?;
            let v = conditional_information_variance(&phi, w)?;
            Ok(i - (v / ty.n() as f64).sqrt() * q_inverse(e)?)
        })
        .collect()
}

/// Calls `f` on every nonnegative integer matrix with the given margins.
fn for_each_table(rows: &[u64], cols: &[u64], f: &mut impl FnMut(&[Vec<u64>])) {
    fn fill(
        a: usize,
        b: usize,
        left_in_row: u64,
        rows: &[u64],
        cols_left: &mut Vec<u64>,
        table: &mut Vec<Vec<u64>>,
        f: &mut impl FnMut(&[Vec<u64>]),
    ) {
        let ny = cols_left.len();
        if a == rows.len() {
            if cols_left.iter().all(|&c| c == 0) {
                f(table);
            }
            return;
        }
        if b + 1 == ny {
            if left_in_row > cols_left[b] {
                return;
            }
            table[a][b] = left_in_row;
            cols_left[b] -= left_in_row;
            let next = rows.get(a + 1).copied().unwrap_or(0);
            fill(a + 1, 0, next, rows, cols_left, table, f);
            cols_left[b] += left_in_row;
            return;
        }
        for k in 0..=left_in_row.min(cols_left[b]) {
            table[a][b] = k;
            cols_left[b] -= k;
            fill(a, b + 1, left_in_row - k, rows, cols_left, table, f);
            cols_left[b] += k;
        }
    }
    let mut cols_left = cols.to_vec();
    let mut table = vec![vec![0u64; cols.len()]; rows.len()];
    fill(0, 0, rows[0], rows, &mut cols_left, &mut table, f);
}

/// `P[pass(I(Φ, P_{y|X'}))]` for `X'` uniform on the type class of `ty` and an
/// output with counts `y_counts`.
fn competitor_pass_probability(ty: &EmpiricalType, y_counts: &[u64], pass: impl Fn(f64) -> bool) -> f64 {
    let rows = ty.counts();
    let base = rows.iter().map(|&c| ln_factorial(c)).sum::<f64>() - ln_factorial(ty.n())
        + y_counts.iter().map(|&c| ln_factorial(c)).sum::<f64>();
    let mut total = 0.0f64;
    for_each_table(rows, y_counts, &mut |table| {
        let mi = ConditionalType::from_joint_counts(table.to_vec())
            .expect("margins are consistent")
            .empirical_mutual_information();
        if pass(mi) {
            let ln_count: f64 = table.iter().flatten().map(|&k| ln_factorial(k)).sum();
            total += (base - ln_count).exp();
        }
    });
    total.min(1.0)
}

/// Smallest threshold `gamma` for which the union bound on the
/// wrong-codeword event is at most `target_e2` for every output.
///
/// With `R_i = t_i - gamma` and `t_i = I(Φ_i, W) - sqrt(V_i / m) Q^-1(eps_i)`,
/// the decoder test `I - R_i >= gamma` is `I >= t_i` whatever `gamma` is, and
/// the bound reads `Σ_i exp(m (t_i - gamma)) max_y P[I(Φ_i, P_{y|X'}) >= t_i]`.
pub fn calibrate_gamma(w: &Channel, types: &[EmpiricalType], eps: &[f64], target_e2: f64) -> Result<f64> {
    if !(target_e2 > 0.0 && target_e2 < 1.0) {
        return Err(Error::DomainError(format!("target must lie in (0, 1), got {target_e2}")));
    }
    let t = thresholds(w, types, eps)?;
    let m = types[0].n();
    if types.iter().any(|ty| ty.n() != m) {
        return Err(Error::InvalidConfig("all classes need the same block length".into()));
    }
    let outputs = enumerate_n_types(w.output_size(), m, crate::prob::DEFAULT_ENUMERATION_CAP)?;
    let logs: Vec<f64> = types
        .iter()
        .zip(&t)
        .map(|(ty, &ti)| {
            let worst = outputs
                .par_iter()
                .map(|y| competitor_pass_probability(ty, y.counts(), |mi| mi >= ti))
                .reduce(|| 0.0, f64::max);
            m as f64 * ti + worst.ln()
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let lse = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
    Ok((lse - target_e2.ln()) / m as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UepClassResult {
    pub class: usize,
    pub rate: f64,
    pub codewords: f64,
    /// True codeword below threshold.
    pub e1: SimResult,
    /// Some other codeword at or above threshold.
    pub e2: SimResult,
    pub overall: SimResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UepResult {
    pub mode: UepMode,
    pub gamma: f64,
    pub eta_n: f64,
    pub classes: Vec<UepClassResult>,
}

struct Outcome {
    class: usize,
    miss: bool,
    /// Probability (or indicator) of a competing codeword passing.
    e2: f64,
}

/// Per-class error rates. Trial `t` of class `i` uses stream `i * trials + t`.
pub fn uep_simulate(cfg: &UepConfig, w: &Channel, sim: &SimConfig) -> Result<UepResult> {
    sim.validate()?;
    let m = sim.m();
    cfg.validate(w, m)?;
    let counts = cfg.codewords();
    let total: f64 = counts.iter().sum();
    let mode = match cfg.mode {
        UepMode::Auto if total <= cfg.explicit_limit as f64 => UepMode::Explicit,
        UepMode::Auto => UepMode::Analytic,
        UepMode::Explicit if total > cfg.explicit_limit as f64 => {
            return Err(Error::InvalidConfig(format!(
                "codebook of {total} words exceeds the explicit limit {}",
                cfg.explicit_limit
            )))
        }
        other => other,
    };
    let k = cfg.classes.len() as u64;
    let run = SimConfig {
        trials: sim.trials * k,
        ..*sim
    };
    let ch = ChannelSampler::new(w)?;
    let canon: Vec<Vec<usize>> = cfg.classes.iter().map(|c| c.input_type.canonical_sequence()).collect();
    let ny = w.output_size();
    let score = |x: &[usize], y: &[usize], class: usize| -> Result<f64> {
        let mut joint = vec![vec![0u64; ny]; w.input_size()];
        for (&a, &b) in x.iter().zip(y) {
            joint[a][b] += 1;
        }
        Ok(ConditionalType::from_joint_counts(joint)?.empirical_mutual_information() - cfg.classes[class].rate)
    };

    let outcomes: Vec<Outcome> = match mode {
        UepMode::Explicit => {
            let sizes: Vec<usize> = counts.iter().map(|&c| c as usize).collect();
            run_trials(&run, |idx, rng| {
                let class = (idx / sim.trials) as usize;
                let book: Vec<Vec<Vec<usize>>> = canon
                    .iter()
                    .zip(&sizes)
                    .map(|(c, &size)| {
                        (0..size)
                            .map(|_| {
                                let mut word = c.clone();
                                word.shuffle(rng);
                                word
                            })
                            .collect()
                    })
                    .collect();
                let sent = rng.gen_range(0..sizes[class]);
                let y: Vec<usize> = book[class][sent].iter().map(|&a| ch.sample(a, rng)).collect();
                let miss = score(&book[class][sent], &y, class)? < cfg.gamma;
                let mut other = false;
                'outer: for (i, words) in book.iter().enumerate() {
                    for (j, word) in words.iter().enumerate() {
                        if (i, j) != (class, sent) && score(word, &y, i)? >= cfg.gamma {
                            other = true;
                            break 'outer;
                        }
                    }
                }
                Ok(Outcome {
                    class,
                    miss,
                    e2: if other { 1.0 } else { 0.0 },
                })
            })?
        }
        _ => {
            let draws = run_trials(&run, |idx, rng| {
                let class = (idx / sim.trials) as usize;
                let x = &canon[class];
                let y: Vec<usize> = x.iter().map(|&a| ch.sample(a, rng)).collect();
                let miss = score(x, &y, class)? < cfg.gamma;
                let mut y_counts = vec![0u64; ny];
                for &b in &y {
                    y_counts[b] += 1;
                }
                Ok((class, miss, y_counts))
            })?;
            let mut keys: Vec<&Vec<u64>> = draws.iter().map(|d| &d.2).collect();
            keys.sort();
            keys.dedup();
            let table: HashMap<Vec<u64>, Vec<f64>> = keys
                .par_iter()
                .map(|&y| {
                    let p = cfg
                        .classes
                        .iter()
                        .map(|c| {
                            competitor_pass_probability(&c.input_type, y, |mi| mi - c.rate >= cfg.gamma)
                        })
                        .collect();
                    (y.clone(), p)
                })
                .collect();
            draws
                .into_iter()
                .map(|(class, miss, y)| {
                    let p = &table[&y];
                    let ln_clear: f64 = p
                        .iter()
                        .zip(&counts)
                        .enumerate()
                        .map(|(i, (&pi, &ni))| {
                            let others = if i == class { ni - 1.0 } else { ni };
                            if others == 0.0 || pi == 0.0 {
                                0.0
                            } else {
                                others * (-pi).ln_1p()
                            }
                        })
                        .sum();
                    Outcome {
                        class,
                        miss,
                        e2: -ln_clear.exp_m1(),
                    }
                })
                .collect()
        }
    };

    let classes = (0..cfg.classes.len())
        .map(|class| {
            let own: Vec<&Outcome> = outcomes.iter().filter(|o| o.class == class).collect();
            let t = own.len() as u64;
            let e1 = own.iter().filter(|o| o.miss).count() as f64 / t as f64;
            let e2 = own.iter().map(|o| o.e2).sum::<f64>() / t as f64;
            let overall = own
                .iter()
                .map(|o| if o.miss { 1.0 } else { o.e2 })
                .sum::<f64>()
                / t as f64;
            UepClassResult {
                class,
                rate: cfg.classes[class].rate,
                codewords: counts[class],
                e1: SimResult::from_estimate(e1, t),
                e2: SimResult::from_estimate(e2, t),
                overall: SimResult::from_estimate(overall, t),
            }
        })
        .collect();
    Ok(UepResult {
        mode,
        gamma: cfg.gamma,
        eta_n: cfg.eta_n(),
        classes,
    })
}
