//! Finite-alphabet probability primitives.
//!
//! Everything here works in nats. [`Distribution`] and [`Channel`] are generic
//! over the scalar type and default to `f64`, which the solvers use.

mod gaussian;
mod info;
mod simplex;
pub(crate) mod types;

pub use gaussian::{q_function, q_inverse};
pub use simplex::project_onto_simplex;
pub use info::{divergence_variance, entropy, kl_divergence};
pub use types::{
    binomial, conditional_type, empirical_type, enumerate_n_types, type_count, ConditionalType,
    EmpiricalType, DEFAULT_ENUMERATION_CAP,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// A probability vector over a finite alphabet `{0, .., len-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Distribution<T: Real = f64> {
    probs: Vec<T>,
}

impl<T: Real> Distribution<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty probability vector".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < T::zero())
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} = {p:?} is negative or not finite"
            )));
        }
        let total = probs.iter().fold(T::zero(), |acc, &p| acc + p);
        if (total - T::one()).abs() > T::simplex_tol(probs.len()) {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total:?}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        let total = weights.iter().fold(T::zero(), |acc, &p| acc + p);
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::InvalidDistribution("weights must have positive finite sum".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(size: usize) -> Self {
        assert!(size > 0, "alphabet must be nonempty");
        let p = T::one() / T::lit(size as f64);
        Self { probs: vec![p; size] }
    }

    pub fn point_mass(size: usize, symbol: usize) -> Self {
        assert!(symbol < size, "symbol out of range");
        let mut probs = vec![T::zero(); size];
        probs[symbol] = T::one();
        Self { probs }
    }

    pub fn bernoulli(p: T) -> Result<Self> {
        Self::new(vec![T::one() - p, p])
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn get(&self, i: usize) -> T {
        self.probs[i]
    }

    /// `alpha * self + (1 - alpha) * other`.
    pub fn mix(&self, other: &Self, alpha: T) -> Result<Self> {
        if self.len_mismatch(other) {
            return Err(Error::DimensionMismatch {
                expected: self.alphabet_size(),
                got: other.alphabet_size(),
            });
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(&a, &b)| alpha * a + (T::one() - alpha) * b)
            .collect();
        Self::new(probs)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.probs
            .iter()
            .zip(&other.probs)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    fn len_mismatch(&self, other: &Self) -> bool {
        self.alphabet_size() != other.alphabet_size()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.probs
    }
}

impl<T: Real> TryFrom<Vec<T>> for Distribution<T> {
    type Error = Error;

    fn try_from(probs: Vec<T>) -> Result<Self> {
        Self::new(probs)
    }
}

impl<T: Real> From<Distribution<T>> for Vec<T> {
    fn from(d: Distribution<T>) -> Self {
        d.probs
    }
}

/// A discrete memoryless channel: a row-stochastic `|X| x |Y|` matrix `W(y|x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<T>>", into = "Vec<Vec<T>>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Channel<T: Real = f64> {
    matrix: Vec<T>,
    input_size: usize,
    output_size: usize,
}

impl<T: Real> Channel<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let input_size = rows.len();
        if input_size == 0 {
            return Err(Error::InvalidChannel("no input symbols".into()));
        }
        let output_size = rows[0].len();
        let mut matrix = Vec::with_capacity(input_size * output_size);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != output_size {
                return Err(Error::InvalidChannel(format!(
                    "row {x} has {} entries, expected {output_size}",
                    row.len()
                )));
            }
            let row = Distribution::new(row)
                .map_err(|e| Error::InvalidChannel(format!("row {x}: {e}")))?;
            matrix.extend(row.into_vec());
        }
        Ok(Self {
            matrix,
            input_size,
            output_size,
        })
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: T) -> Result<Self> {
        let q = T::one() - p;
        Self::new(vec![vec![q, p], vec![p, q]])
    }

    pub fn identity(size: usize) -> Self {
        let rows = (0..size)
            .map(|x| Distribution::<T>::point_mass(size, x).into_vec())
            .collect();
        Self::new(rows).expect("identity rows are stochastic")
    }

    /// Every input maps to the same output law.
    pub fn constant(input_size: usize, output: &Distribution<T>) -> Self {
        Self::new(vec![output.probs().to_vec(); input_size]).expect("rows are stochastic")
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.matrix[x * self.output_size..(x + 1) * self.output_size]
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.matrix[x * self.output_size + y]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.matrix.chunks(self.output_size)
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.rows().map(<[T]>::to_vec).collect()
    }

    /// Output law `ΦW(y) = Σ_x Φ(x) W(y|x)`.
    pub fn output_distribution(&self, phi: &Distribution<T>) -> Result<Vec<T>> {
        self.check_input(phi)?;
        let mut out = vec![T::zero(); self.output_size];
        for (x, row) in self.rows().enumerate() {
            let px = phi.get(x);
            if px == T::zero() {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(row) {
                *o = *o + px * w;
            }
        }
        Ok(out)
    }

    /// Reorders output columns: new column `j` is old column `perm[j]`.
    pub fn permute_outputs(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.output_size {
            return Err(Error::DimensionMismatch {
                expected: self.output_size,
                got: perm.len(),
            });
        }
        let rows = self
            .rows()
            .map(|row| perm.iter().map(|&j| row[j]).collect())
            .collect();
        Self::new(rows)
    }

    pub(crate) fn check_input(&self, phi: &Distribution<T>) -> Result<()> {
        if phi.alphabet_size() != self.input_size {
            return Err(Error::DimensionMismatch {
                expected: self.input_size,
                got: phi.alphabet_size(),
            });
        }
        Ok(())
    }
}

impl<T: Real> TryFrom<Vec<Vec<T>>> for Channel<T> {
    type Error = Error;

    fn try_from(rows: Vec<Vec<T>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl<T: Real> From<Channel<T>> for Vec<Vec<T>> {
    fn from(c: Channel<T>) -> Self {
        c.to_rows()
    }
}
