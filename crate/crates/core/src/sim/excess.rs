use std::collections::HashMap;

use rayon::prelude::*;

use super::{run_trials, source_counts, ChannelSampler, SimConfig, SimResult, SymbolSampler};
use crate::error::{Error, Result};
use crate::prob::{Channel, ConditionalType, EmpiricalType};
use crate::source::{rdf, RdfOptions, SourceSpec};

struct TrialDraw {
    source_counts: Vec<u64>,
    mutual_information: f64,
}

fn draw_trials(src: &SourceSpec, w: &Channel, phi_m: &EmpiricalType, cfg: &SimConfig) -> Result<Vec<TrialDraw>> {
    cfg.validate()?;
    if phi_m.n() != cfg.m() {
        return Err(Error::InvalidConfig(format!(
            "input type has denominator {}, expected m = {}",
            phi_m.n(),
            cfg.m()
        )));
    }
    if phi_m.alphabet_size() != w.input_size() {
        return Err(Error::DimensionMismatch {
            expected: w.input_size(),
            got: phi_m.alphabet_size(),
        });
    }
    let x = phi_m.canonical_sequence();
    let src_sampler = SymbolSampler::new(src.distribution().probs())?;
    let ch = ChannelSampler::new(w)?;
    let k = src.source_size();
    run_trials(cfg, |_, rng| {
        let source_counts = source_counts(&src_sampler, k, cfg.n, rng);
        let joint = ch.joint_counts(&x, w.output_size(), rng);
        let mutual_information = ConditionalType::from_joint_counts(joint)?.empirical_mutual_information();
        Ok(TrialDraw {
            source_counts,
            mutual_information,
        })
    })
}

/// `R(P_S, d)` for every distinct source type; `None` where the solver fails.
fn rdf_table(src: &SourceSpec, draws: &[TrialDraw], d: f64, opts: &RdfOptions) -> HashMap<Vec<u64>, Option<f64>> {
    let mut keys: Vec<&Vec<u64>> = draws.iter().map(|t| &t.source_counts).collect();
    keys.sort();
    keys.dedup();
    keys.par_iter()
        .map(|&counts| {
            let value = EmpiricalType::new(counts.clone())
                .and_then(|t| src.with_distribution(t.distribution()))
                .and_then(|s| rdf(&s, d, opts))
                .ok()
                .map(|r| r.rate);
            (counts.clone(), value)
        })
        .collect()
}

fn count_excess(draws: &[TrialDraw], table: &HashMap<Vec<u64>, Option<f64>>, rho: f64, trials: u64) -> SimResult {
    let mut excess = 0u64;
    let mut boundary = 0u64;
    for t in draws {
        match table[&t.source_counts] {
            Some(r) => {
                if r > rho * t.mutual_information {
                    excess += 1;
                }
            }
            None => {
                excess += 1;
                boundary += 1;
            }
        }
    }
    SimResult::from_count(excess, trials)
        .with("boundary_trials", boundary as f64)
        .with("distinct_source_types", table.len() as f64)
}

/// Estimates `P[R(P_S, d) > rho I(Φ_m, P_{Y|x})]` with a fixed input word of
/// type `phi_m`. Trials where the rate-distortion solver fails count as
/// excess and are reported under `boundary_trials`.
pub fn excess_event_probability(
    src: &SourceSpec,
    w: &Channel,
    phi_m: &EmpiricalType,
    d: f64,
    cfg: &SimConfig,
    opts: &RdfOptions,
) -> Result<SimResult> {
    Ok(excess_event_sweep(src, w, phi_m, &[d], cfg, opts)?.remove(0))
}

/// Same draws reused for every threshold in `ds` (common random numbers).
pub fn excess_event_sweep(
    src: &SourceSpec,
    w: &Channel,
    phi_m: &EmpiricalType,
    ds: &[f64],
    cfg: &SimConfig,
    opts: &RdfOptions,
) -> Result<Vec<SimResult>> {
    let draws = draw_trials(src, w, phi_m, cfg)?;
    Ok(ds
        .iter()
        .map(|&d| {
            let table = rdf_table(src, &draws, d, opts);
            count_excess(&draws, &table, cfg.rho, cfg.trials).with("d", d)
        })
        .collect())
}
