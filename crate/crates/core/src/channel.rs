//! Channel quantities: mutual information, information density, capacity,
//! information variances and the capacity-achieving set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::prob::{project_onto_simplex, q_inverse, Channel, Distribution};

/// Note attached to every normal-approximation output.
pub const CORRECTION_NOTE: &str = "O(log n / n) correction term omitted";

/// Per-row terms `(Φ(x), [(W(y|x), log W(y|x)/ΦW(y))])` over the support.
fn density_terms<T: Real>(phi: &Distribution<T>, w: &Channel<T>) -> Result<Vec<(T, Vec<(T, T)>)>> {
    let out = w.output_distribution(phi)?;
    let mut rows = Vec::with_capacity(w.input_size());
    for (x, row) in w.rows().enumerate() {
        let px = phi.get(x);
        if px == T::zero() {
            continue;
        }
        let terms = row
            .iter()
            .zip(&out)
            .filter(|(&wy, _)| wy > T::zero())
            .map(|(&wy, &qy)| (wy, (wy / qy).ln()))
            .collect();
        rows.push((px, terms));
    }
    Ok(rows)
}

/// `I(Φ, W)` in nats.
pub fn mutual_information<T: Real>(phi: &Distribution<T>, w: &Channel<T>) -> Result<T> {
    let rows = density_terms(phi, w)?;
    let mi = rows.iter().fold(T::zero(), |acc, (px, terms)| {
        acc + *px * terms.iter().fold(T::zero(), |a, &(wy, l)| a + wy * l)
    });
    Ok(mi.max(T::zero()))
}

/// Table of `i(x, y) = log W(y|x)/ΦW(y)`; `None` where `W(y|x) = 0`.
pub fn information_density<T: Real>(
    phi: &Distribution<T>,
    w: &Channel<T>,
) -> Result<Vec<Vec<Option<T>>>> {
    let out = w.output_distribution(phi)?;
    let mut table = Vec::with_capacity(w.input_size());
    for row in w.rows() {
        let mut cells = Vec::with_capacity(w.output_size());
        for (y, (&wy, &qy)) in row.iter().zip(&out).enumerate() {
            if wy == T::zero() {
                cells.push(None);
            } else if qy == T::zero() {
                return Err(Error::UnreachableOutput { output: y });
            } else {
                cells.push(Some((wy / qy).ln()));
            }
        }
        table.push(cells);
    }
    Ok(table)
}

/// `Var[i(X, Y)]` under `Φ × W`.
pub fn unconditional_information_variance<T: Real>(
    phi: &Distribution<T>,
    w: &Channel<T>,
) -> Result<T> {
    let rows = density_terms(phi, w)?;
    let mean = mutual_information(phi, w)?;
    let var = rows.iter().fold(T::zero(), |acc, (px, terms)| {
        acc + *px
            * terms
                .iter()
                .fold(T::zero(), |a, &(wy, l)| a + wy * (l - mean) * (l - mean))
    });
    Ok(var.max(T::zero()))
}

/// `E[Var[i(X, Y) | X]]` under `Φ × W`.
pub fn conditional_information_variance<T: Real>(
    phi: &Distribution<T>,
    w: &Channel<T>,
) -> Result<T> {
    let rows = density_terms(phi, w)?;
    let var = rows.iter().fold(T::zero(), |acc, (px, terms)| {
        let mean = terms.iter().fold(T::zero(), |a, &(wy, l)| a + wy * l);
        let v = terms
            .iter()
            .fold(T::zero(), |a, &(wy, l)| a + wy * (l - mean) * (l - mean));
        acc + *px * v
    });
    Ok(var.max(T::zero()))
}

/// `D(W_x || ΦW)` for every input symbol.
fn row_divergences(phi: &Distribution, w: &Channel) -> Result<Vec<f64>> {
    let out = w.output_distribution(phi)?;
    Ok(w.rows()
        .map(|row| {
            row.iter()
                .zip(&out)
                .filter(|(&wy, _)| wy > 0.0)
                .map(|(&wy, &qy)| wy * (wy / qy).ln())
                .sum::<f64>()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iterations: 500_000,
        }
    }
}

impl CapacityOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Capacity with a certified bracket. `capacity` equals `lower_bound`, the
/// mutual information achieved by `input_distribution`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub capacity: f64,
    pub input_distribution: Distribution,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub iterations: usize,
}

/// Alternating maximization started from `start`, stopped once
/// `max_x D(W_x||ΦW) - I(Φ,W) <= tol`.
fn blahut_arimoto_from(
    w: &Channel,
    start: Distribution,
    opts: CapacityOptions,
) -> Result<CapacityResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::DomainError(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let mut phi = start;
    let mut gap = f64::INFINITY;
    for iteration in 0..=opts.max_iterations {
        let divs = row_divergences(&phi, w)?;
        let lower = phi
            .probs()
            .iter()
            .zip(&divs)
            .map(|(p, d)| p * d)
            .sum::<f64>()
            .max(0.0);
        let upper = divs.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(lower);
        gap = upper - lower;
        if gap <= opts.tol {
            return Ok(CapacityResult {
                capacity: lower,
                input_distribution: phi,
                lower_bound: lower,
                upper_bound: upper,
                iterations: iteration,
            });
        }
        let dmax = upper;
        let weights = phi
            .probs()
            .iter()
            .zip(&divs)
            .map(|(p, d)| p * (d - dmax).exp())
            .collect();
        phi = Distribution::from_weights(weights)?;
    }
    Err(Error::NonConvergence {
        what: "capacity",
        iterations: opts.max_iterations,
        gap,
    })
}

/// Channel capacity `C(W) = max_Φ I(Φ, W)` in nats per use.
pub fn capacity(w: &Channel, opts: CapacityOptions) -> Result<CapacityResult> {
    blahut_arimoto_from(w, Distribution::uniform(w.input_size()), opts)
}

/// Extreme conditional information variances over the capacity-achieving set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDispersion {
    pub v_min: f64,
    pub v_max: f64,
    /// Every search start converged to the same input law (within `1e-8`).
    pub capacity_set_is_singleton: bool,
    /// `false` when `V_min` is numerically zero; downstream formulas still apply.
    pub v_min_positive: bool,
    /// Capacity-achieving input laws found by the search.
    pub optimizers: Vec<Distribution>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSearch {
    pub starts: usize,
    pub seed: u64,
    pub max_steps: usize,
}

impl Default for DispersionSearch {
    fn default() -> Self {
        Self {
            starts: 32,
            seed: 0x00C0_FFEE,
            max_steps: 5_000,
        }
    }
}

fn random_simplex_point(rng: &mut ChaCha8Rng, k: usize) -> Distribution {
    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    Distribution::from_weights(w).expect("exponential weights are positive")
}

/// Projected gradient ascent on `I(Φ, W)` with Armijo backtracking.
fn projected_ascent(w: &Channel, start: Distribution, max_steps: usize) -> Result<Distribution> {
    let mut phi = start;
    let mut value = mutual_information(&phi, w)?;
    let mut step = 1.0;
    for _ in 0..max_steps {
        let grad = row_divergences(&phi, w)?;
        let mut accepted = None;
        let mut t = step;
        for _ in 0..60 {
            let trial: Vec<f64> = phi
                .probs()
                .iter()
                .zip(&grad)
                .map(|(p, g)| p + t * g)
                .collect();
            let cand = Distribution::from_weights(project_onto_simplex(&trial))?;
            let moved: f64 = cand
                .probs()
                .iter()
                .zip(phi.probs())
                .zip(&grad)
                .map(|((c, p), g)| g * (c - p))
                .sum();
            let cand_value = mutual_information(&cand, w)?;
            let dist2: f64 = cand.probs().iter().zip(phi.probs()).map(|(c, p)| (c - p) * (c - p)).sum();
            if cand_value >= value + 0.5 * moved - 1e-16 || dist2 == 0.0 {
                accepted = Some((cand, cand_value, dist2));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, cand_value, dist2)) = accepted else {
            break;
        };
        phi = cand;
        value = cand_value;
        step = (t * 2.0).min(1e6);
        if dist2.sqrt() / t <= 1e-9 {
            break;
        }
    }
    Ok(phi)
}

/// Explores the capacity-achieving set and extremizes `V(Φ, W)` over it.
///
/// Best effort: when the set is not a singleton the reported extremes are
/// over the optimizers found, not certified over the whole set.
pub fn vmin_vmax(
    w: &Channel,
    cap: &CapacityResult,
    opts: CapacityOptions,
    search: DispersionSearch,
) -> Result<ChannelDispersion> {
    let k = w.input_size();
    let starts: Vec<Distribution> = (0..search.starts)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
            rng.set_stream(i as u64);
            random_simplex_point(&mut rng, k)
        })
        .collect();
    let climbed: Vec<Result<Distribution>> = starts
        .into_par_iter()
        .map(|start| {
            let phi = projected_ascent(w, start, search.max_steps)?;
            // Every point of the capacity-achieving set is a fixed point of the
            // alternating maximization, so polishing does not merge distinct optimizers.
            let polish = CapacityOptions {
                tol: opts.tol.min(1e-13),
                max_iterations: opts.max_iterations,
            };
            match blahut_arimoto_from(w, phi.clone(), polish) {
                Ok(r) => Ok(r.input_distribution),
                Err(Error::NonConvergence { .. }) => Ok(phi),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut optimizers = vec![cap.input_distribution.clone()];
    for phi in climbed {
        let phi = phi?;
        if mutual_information(&phi, w)? >= cap.capacity - opts.tol {
            optimizers.push(phi);
        }
    }
    let singleton = optimizers
        .iter()
        .all(|phi| phi.max_abs_diff(&optimizers[0]) <= 1e-8);
    let variances = optimizers
        .iter()
        .map(|phi| conditional_information_variance(phi, w))
        .collect::<Result<Vec<f64>>>()?;
    let (mut v_min, mut v_max) = variances
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if singleton {
        // report the alternating-maximization point on both sides
        v_min = variances[0];
        v_max = variances[0];
    }
    Ok(ChannelDispersion {
        v_min,
        v_max,
        capacity_set_is_singleton: singleton,
        v_min_positive: v_min > 1e-12,
        optimizers,
    })
}

/// Capacity plus dispersion, computed once and reused for rate queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelAnalysis {
    pub capacity: CapacityResult,
    pub dispersion: ChannelDispersion,
}

/// Normal-approximation channel coding rate at one `(n, eps)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRate {
    pub n: u64,
    pub eps: f64,
    /// Rate with `V_min` when `eps <= 1/2`, else `V_max`.
    pub rate: f64,
    pub rate_v_min: f64,
    pub rate_v_max: f64,
    pub correction_note: String,
}

impl ChannelAnalysis {
    pub fn new(w: &Channel, opts: CapacityOptions) -> Result<Self> {
        let capacity = capacity(w, opts)?;
        let dispersion = vmin_vmax(w, &capacity, opts, DispersionSearch::default())?;
        Ok(Self {
            capacity,
            dispersion,
        })
    }

    pub fn rate_at(&self, n: u64, eps: f64) -> Result<ChannelRate> {
        if n == 0 {
            return Err(Error::DomainError("block length must be positive".into()));
        }
        let z = q_inverse(eps)?;
        let c = self.capacity.capacity;
        let at = |v: f64| c - (v / n as f64).sqrt() * z;
        let rate_v_min = at(self.dispersion.v_min);
        let rate_v_max = at(self.dispersion.v_max);
        Ok(ChannelRate {
            n,
            eps,
            rate: if eps <= 0.5 { rate_v_min } else { rate_v_max },
            rate_v_min,
            rate_v_max,
            correction_note: CORRECTION_NOTE.to_string(),
        })
    }
}

/// `C - sqrt(V/n) Q^-1(eps)` with the `V_min`/`V_max` case split.
pub fn channel_rate_at(w: &Channel, n: u64, eps: f64, opts: CapacityOptions) -> Result<ChannelRate> {
    ChannelAnalysis::new(w, opts)?.rate_at(n, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn h2(p: f64) -> f64 {
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
    }

    fn bsc(p: f64) -> Channel {
        Channel::bsc(p).unwrap()
    }

    #[test]
    fn mutual_information_examples() {
        let id = Channel::<f64>::identity(3);
        let mi = mutual_information(&Distribution::uniform(3), &id).unwrap();
        assert!((mi - 3f64.ln()).abs() < 1e-15);
        let useless = Channel::<f64>::constant(3, &Distribution::<f64>::new(vec![0.2, 0.8]).unwrap());
        let mi = mutual_information(&Distribution::<f64>::new(vec![0.1, 0.3, 0.6]).unwrap(), &useless).unwrap();
        assert!(mi.abs() < 1e-15);
        let mi = mutual_information(&Distribution::uniform(2), &bsc(0.11)).unwrap();
        assert!((mi - (LN2 - h2(0.11))).abs() < 1e-15);
        assert!((mi / LN2 - 0.5).abs() < 1e-3);
    }

    #[test]
    fn mutual_information_dimension_mismatch() {
        let err = mutual_information(&Distribution::uniform(3), &bsc(0.1)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn information_density_examples() {
        let id = Channel::<f64>::identity(4);
        let table = information_density(&Distribution::uniform(4), &id).unwrap();
        for (x, row) in table.iter().enumerate() {
            for (y, cell) in row.iter().enumerate() {
                if x == y {
                    assert!((cell.unwrap() - 4f64.ln()).abs() < 1e-15);
                } else {
                    assert!(cell.is_none());
                }
            }
        }
        let p = 0.2;
        let table = information_density(&Distribution::uniform(2), &bsc(p)).unwrap();
        assert!((table[0][0].unwrap() - (2.0 * (1.0 - p)).ln()).abs() < 1e-15);
        assert!((table[0][1].unwrap() - (2.0 * p).ln()).abs() < 1e-15);

        let phi = Distribution::<f64>::new(vec![0.3, 0.7]).unwrap();
        let w = Channel::<f64>::new(vec![vec![0.6, 0.3, 0.1], vec![0.05, 0.15, 0.8]]).unwrap();
        let table = information_density(&phi, &w).unwrap();
        let mut mean = 0.0;
        for x in 0..2 {
            for y in 0..3 {
                mean += phi.get(x) * w.get(x, y) * table[x][y].unwrap();
            }
        }
        assert!((mean - mutual_information(&phi, &w).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn information_density_unreachable_output() {
        let phi = Distribution::<f64>::new(vec![1.0, 0.0]).unwrap();
        let err = information_density(&phi, &Channel::identity(2)).unwrap_err();
        assert_eq!(err, Error::UnreachableOutput { output: 1 });
    }

    #[test]
    fn capacity_examples() {
        let opts = CapacityOptions::with_tol(1e-10);
        let c = capacity(&bsc(0.0), opts).unwrap();
        assert!((c.capacity - LN2).abs() < 1e-15);
        let c = capacity(&bsc(0.5), opts).unwrap();
        assert!(c.capacity.abs() < 1e-15);
        let c = capacity(&bsc(0.11), opts).unwrap();
        assert!((c.capacity - (LN2 - h2(0.11))).abs() < 1e-10);
        assert!(c.lower_bound <= c.capacity && c.capacity <= c.upper_bound);
    }

    #[test]
    fn capacity_of_asymmetric_channel() {
        // Z-channel with crossover q: closed form C = ln(1 + (1-q) q^(q/(1-q)))
        let q: f64 = 0.3;
        let w = Channel::<f64>::new(vec![vec![1.0, 0.0], vec![q, 1.0 - q]]).unwrap();
        let c = capacity(&w, CapacityOptions::with_tol(1e-12)).unwrap();
        let oracle = (1.0 + (1.0 - q) * q.powf(q / (1.0 - q))).ln();
        assert!((c.capacity - oracle).abs() < 1e-11, "{} vs {}", c.capacity, oracle);
        assert!(c.upper_bound - c.lower_bound <= 1e-12);
        assert!(c.capacity <= 2f64.ln());
    }

    #[test]
    fn capacity_rejects_bad_tolerance() {
        assert!(capacity(&bsc(0.1), CapacityOptions::with_tol(0.0)).is_err());
    }

    #[test]
    fn capacity_nonconvergence_is_reported() {
        let w = Channel::<f64>::new(vec![vec![1.0, 0.0], vec![0.3, 0.7]]).unwrap();
        let opts = CapacityOptions {
            tol: 1e-14,
            max_iterations: 2,
        };
        assert!(matches!(capacity(&w, opts), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn variances_examples() {
        let id = Channel::<f64>::identity(3);
        let u3 = Distribution::uniform(3);
        assert!(unconditional_information_variance(&u3, &id).unwrap().abs() < 1e-15);
        assert!(conditional_information_variance(&u3, &id).unwrap().abs() < 1e-15);
        let useless = Channel::<f64>::constant(2, &Distribution::<f64>::new(vec![0.4, 0.6]).unwrap());
        let phi = Distribution::<f64>::new(vec![0.3, 0.7]).unwrap();
        assert!(unconditional_information_variance(&phi, &useless).unwrap().abs() < 1e-15);
        assert!(conditional_information_variance(&phi, &useless).unwrap().abs() < 1e-15);

        let p: f64 = 0.11;
        let oracle = p * (1.0 - p) * ((1.0 - p) / p).ln().powi(2);
        let u2 = Distribution::uniform(2);
        let cond = conditional_information_variance(&u2, &bsc(p)).unwrap();
        let uncond = unconditional_information_variance(&u2, &bsc(p)).unwrap();
        assert!((cond - oracle).abs() < 1e-14);
        assert!((uncond - oracle).abs() < 1e-14);
        assert!((cond / (LN2 * LN2) - 0.8907).abs() < 1e-4);
    }

    #[test]
    fn unconditional_variance_is_divergence_variance_of_joint() {
        let phi = Distribution::<f64>::new(vec![0.3, 0.7]).unwrap();
        let w = Channel::<f64>::new(vec![vec![0.6, 0.3, 0.1], vec![0.05, 0.15, 0.8]]).unwrap();
        let out = w.output_distribution(&phi).unwrap();
        let mut joint = vec![];
        let mut prod = vec![];
        for x in 0..2 {
            for y in 0..3 {
                joint.push(phi.get(x) * w.get(x, y));
                prod.push(phi.get(x) * out[y]);
            }
        }
        let dv = crate::prob::divergence_variance(
            &Distribution::<f64>::new(joint).unwrap(),
            &Distribution::<f64>::new(prod).unwrap(),
        )
        .unwrap();
        let v = unconditional_information_variance(&phi, &w).unwrap();
        assert!((dv - v).abs() < 1e-14);
    }

    #[test]
    fn vmin_vmax_bsc_singleton() {
        let p: f64 = 0.11;
        let w = bsc(p);
        let analysis = ChannelAnalysis::new(&w, CapacityOptions::default()).unwrap();
        let d = &analysis.dispersion;
        assert!(d.capacity_set_is_singleton);
        let oracle = p * (1.0 - p) * ((1.0 - p) / p).ln().powi(2);
        assert!((d.v_min - oracle).abs() < 1e-12);
        assert_eq!(d.v_min, d.v_max);
        assert!(d.v_min_positive);
        // grid oracle over binary inputs: the uniform law is the unique maximizer
        let best = (1..1000)
            .map(|i| i as f64 / 1000.0)
            .max_by(|a, b| {
                let ia = mutual_information(&Distribution::bernoulli(*a).unwrap(), &w).unwrap();
                let ib = mutual_information(&Distribution::bernoulli(*b).unwrap(), &w).unwrap();
                ia.partial_cmp(&ib).unwrap()
            })
            .unwrap();
        assert!((best - 0.5).abs() < 1e-9);
    }

    #[test]
    fn vmin_vmax_identity() {
        let analysis = ChannelAnalysis::new(&Channel::identity(3), CapacityOptions::default()).unwrap();
        assert_eq!(analysis.dispersion.v_min, 0.0);
        assert_eq!(analysis.dispersion.v_max, 0.0);
        assert!(!analysis.dispersion.v_min_positive);
    }

    #[test]
    fn vmin_vmax_with_duplicate_rows() {
        let w = Channel::<f64>::new(vec![vec![0.9, 0.1], vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let a = ChannelAnalysis::new(&w, CapacityOptions::default()).unwrap();
        let d = &a.dispersion;
        assert!(0.0 <= d.v_min && d.v_min <= d.v_max);
        assert!(!d.capacity_set_is_singleton);
        for phi in &d.optimizers {
            let mi = mutual_information(phi, &w).unwrap();
            assert!((mi - a.capacity.capacity).abs() <= 1e-10);
        }
    }

    #[test]
    fn channel_rate_examples() {
        let w = bsc(0.11);
        let a = ChannelAnalysis::new(&w, CapacityOptions::default()).unwrap();
        assert_eq!(a.rate_at(1000, 0.5).unwrap().rate, a.capacity.capacity);
        let mut prev = f64::NEG_INFINITY;
        for n in [10, 100, 1000, 10_000, 100_000] {
            let r = a.rate_at(n, 0.1).unwrap().rate;
            assert!(r > prev && r < a.capacity.capacity);
            prev = r;
        }
        let r = a.rate_at(1000, 0.1).unwrap();
        let oracle_bits = 0.5 - (0.8907f64 / 1000.0).sqrt() * 1.2816;
        assert!((r.rate / LN2 - oracle_bits).abs() < 1e-3);
        assert_eq!(r.correction_note, CORRECTION_NOTE);
    }
}
