//! Method-of-types machinery: empirical and conditional types.

use serde::{Deserialize, Serialize};

use super::{Channel, Distribution};
use crate::error::{Error, Result};
use crate::num::Real;

/// Default cap on the number of items any exhaustive enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Integer count vector of an `n`-sequence, i.e. an element of the set of `n`-types.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmpiricalType {
    counts: Vec<u64>,
    n: u64,
}

impl EmpiricalType {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidDistribution("type of an empty sequence".into()));
        }
        Ok(Self { counts, n })
    }

    /// The `n`-type closest to `dist`, with `max |count/n - dist| <= 1/n`.
    ///
    /// Floors every `n * dist(a)` and hands the remaining units to the largest
    /// fractional parts (ties to the lower symbol).
    pub fn nearest(dist: &Distribution, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("block length must be positive".into()));
        }
        let scaled: Vec<f64> = dist.probs().iter().map(|&p| p * n as f64).collect();
        let mut counts: Vec<u64> = scaled.iter().map(|s| s.floor() as u64).collect();
        let assigned: u64 = counts.iter().sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = scaled[a] - scaled[a].floor();
            let fb = scaled[b] - scaled[b].floor();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        let missing = n.saturating_sub(assigned) as usize;
        for &a in order.iter().take(missing) {
            counts[a] += 1;
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    pub fn min_count(&self) -> u64 {
        self.counts.iter().copied().min().unwrap_or(0)
    }

    pub fn distribution<T: Real>(&self) -> Distribution<T> {
        let n = T::lit(self.n as f64);
        let probs = self.counts.iter().map(|&c| T::lit(c as f64) / n).collect();
        Distribution::new(probs).expect("counts/n is a distribution")
    }

    /// The sorted sequence `0..0 1..1 ..` having this type.
    pub fn canonical_sequence(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(a, &c)| std::iter::repeat(a).take(c as usize))
            .collect()
    }

    /// `ln |T_Q|`, the log of the multinomial coefficient.
    pub fn ln_type_class_size(&self) -> f64 {
        ln_factorial(self.n) - self.counts.iter().map(|&c| ln_factorial(c)).sum::<f64>()
    }

    /// `|T_Q|` exactly, or `None` on overflow.
    pub fn type_class_size(&self) -> Option<u128> {
        let mut remaining = self.n;
        let mut acc: u128 = 1;
        for &c in &self.counts {
            acc = acc.checked_mul(binomial(remaining, c)?)?;
            remaining -= c;
        }
        Some(acc)
    }
}

/// Joint counts `N(a, b | x, y)` of a sequence pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalType {
    joint_counts: Vec<Vec<u64>>,
    n: u64,
}

impl ConditionalType {
    pub fn from_joint_counts(joint_counts: Vec<Vec<u64>>) -> Result<Self> {
        let width = joint_counts.first().map(Vec::len).unwrap_or(0);
        if width == 0 || joint_counts.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidConfig("joint counts must be a nonempty matrix".into()));
        }
        let n = joint_counts.iter().flatten().sum();
        if n == 0 {
            return Err(Error::InvalidConfig("joint counts sum to zero".into()));
        }
        Ok(Self { joint_counts, n })
    }

    pub fn joint_counts(&self) -> &[Vec<u64>] {
        &self.joint_counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Row marginal: the type of the conditioning sequence.
    pub fn input_type(&self) -> EmpiricalType {
        EmpiricalType::new(self.joint_counts.iter().map(|r| r.iter().sum()).collect())
            .expect("n > 0")
    }

    pub fn output_counts(&self) -> Vec<u64> {
        let width = self.joint_counts[0].len();
        (0..width)
            .map(|b| self.joint_counts.iter().map(|r| r[b]).sum())
            .collect()
    }

    /// `P_{y|x}(b|a)`; `None` when symbol `a` does not occur in `x`.
    pub fn conditional(&self, a: usize, b: usize) -> Option<f64> {
        let row = &self.joint_counts[a];
        let total: u64 = row.iter().sum();
        (total > 0).then(|| row[b] as f64 / total as f64)
    }

    /// Empirical mutual information `I(P_x, P_{y|x})` in nats.
    pub fn empirical_mutual_information(&self) -> f64 {
        let n = self.n as f64;
        let rows: Vec<u64> = self.joint_counts.iter().map(|r| r.iter().sum()).collect();
        let cols = self.output_counts();
        let mut acc = 0.0;
        for (a, row) in self.joint_counts.iter().enumerate() {
            for (b, &k) in row.iter().enumerate() {
                if k > 0 {
                    let k = k as f64;
                    acc += k / n * (k * n / (rows[a] as f64 * cols[b] as f64)).ln();
                }
            }
        }
        acc.max(0.0)
    }

    /// `Σ_{a,b} (P_{y|x}(b|a) - W(b|a))^2`; rows of unused inputs contribute nothing.
    pub fn squared_distance_to(&self, w: &Channel) -> Result<f64> {
        if w.input_size() != self.joint_counts.len() || w.output_size() != self.joint_counts[0].len()
        {
            return Err(Error::DimensionMismatch {
                expected: w.input_size() * w.output_size(),
                got: self.joint_counts.len() * self.joint_counts[0].len(),
            });
        }
        let mut acc = 0.0;
        for (a, row) in self.joint_counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            if total == 0 {
                continue;
            }
            for (b, &k) in row.iter().enumerate() {
                let diff = k as f64 / total as f64 - w.get(a, b);
                acc += diff * diff;
            }
        }
        Ok(acc)
    }
}

fn check_symbols(seq: &[usize], alphabet_size: usize) -> Result<()> {
    match seq.iter().find(|&&s| s >= alphabet_size) {
        Some(&symbol) => Err(Error::SymbolOutOfRange {
            symbol,
            alphabet_size,
        }),
        None => Ok(()),
    }
}

/// Counts occurrences of each symbol of `sequence`.
pub fn empirical_type(sequence: &[usize], alphabet_size: usize) -> Result<EmpiricalType> {
    check_symbols(sequence, alphabet_size)?;
    let mut counts = vec![0u64; alphabet_size];
    for &s in sequence {
        counts[s] += 1;
    }
    EmpiricalType::new(counts)
}

/// Joint type of `(x, y)` over `X x Y`.
pub fn conditional_type(
    x: &[usize],
    y: &[usize],
    input_size: usize,
    output_size: usize,
) -> Result<ConditionalType> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    check_symbols(x, input_size)?;
    check_symbols(y, output_size)?;
    let mut joint = vec![vec![0u64; output_size]; input_size];
    for (&a, &b) in x.iter().zip(y) {
        joint[a][b] += 1;
    }
    ConditionalType::from_joint_counts(joint)
}

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Number of `n`-types over an alphabet of `alphabet_size` symbols.
pub fn type_count(alphabet_size: usize, n: u64) -> Option<u128> {
    binomial(n + alphabet_size as u64 - 1, alphabet_size as u64 - 1)
}

/// All `n`-types over `alphabet_size` symbols, in colexicographic order.
pub fn enumerate_n_types(alphabet_size: usize, n: u64, cap: u128) -> Result<Vec<EmpiricalType>> {
    if alphabet_size == 0 || n == 0 {
        return Err(Error::InvalidConfig("alphabet size and n must be positive".into()));
    }
    let count = type_count(alphabet_size, n).unwrap_or(u128::MAX);
    if count > cap {
        return Err(Error::EnumerationTooLarge { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut counts = vec![0u64; alphabet_size];
    fill_colex(&mut counts, alphabet_size - 1, n, &mut out);
    Ok(out)
}

fn fill_colex(counts: &mut [u64], pos: usize, remaining: u64, out: &mut Vec<EmpiricalType>) {
    if pos == 0 {
        counts[0] = remaining;
        out.push(EmpiricalType {
            counts: counts.to_vec(),
            n: counts.iter().sum(),
        });
        return;
    }
    for c in 0..=remaining {
        counts[pos] = c;
        fill_colex(counts, pos - 1, remaining - c, out);
    }
    counts[pos] = 0;
}

pub(crate) fn ln_factorial(n: u64) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}
