use super::Distribution;
use crate::error::{Error, Result};
use crate::num::{xlogx, Real};

/// Shannon entropy `H(p) = -Σ p log p` in nats.
pub fn entropy<T: Real>(p: &Distribution<T>) -> T {
    -p.probs().iter().fold(T::zero(), |acc, &x| acc + xlogx(x))
}

fn log_ratios<T: Real>(p: &Distribution<T>, q: &Distribution<T>) -> Result<Vec<(T, T)>> {
    if p.alphabet_size() != q.alphabet_size() {
        return Err(Error::DimensionMismatch {
            expected: p.alphabet_size(),
            got: q.alphabet_size(),
        });
    }
    let mut out = Vec::with_capacity(p.alphabet_size());
    for (i, (&pi, &qi)) in p.probs().iter().zip(q.probs()).enumerate() {
        if pi == T::zero() {
            continue;
        }
        if qi == T::zero() {
            return Err(Error::AbsoluteContinuityViolated { index: i });
        }
        out.push((pi, (pi / qi).ln()));
    }
    Ok(out)
}

/// Relative entropy `D(p||q)` in nats.
pub fn kl_divergence<T: Real>(p: &Distribution<T>, q: &Distribution<T>) -> Result<T> {
    let terms = log_ratios(p, q)?;
    let d = terms.iter().fold(T::zero(), |acc, &(pi, l)| acc + pi * l);
    Ok(d.max(T::zero()))
}

/// Divergence variance `Σ p [log(p/q)]^2 - D(p||q)^2` in nats².
pub fn divergence_variance<T: Real>(p: &Distribution<T>, q: &Distribution<T>) -> Result<T> {
    let terms = log_ratios(p, q)?;
    let mean = terms.iter().fold(T::zero(), |acc, &(pi, l)| acc + pi * l);
    // centered form is less prone to cancellation than E[l^2] - E[l]^2
    let var = terms
        .iter()
        .fold(T::zero(), |acc, &(pi, l)| acc + pi * (l - mean) * (l - mean));
    Ok(var.max(T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&Distribution::<f64>::uniform(2)) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(entropy(&Distribution::<f64>::point_mass(3, 1)), 0.0);
        // direct summation oracle
        let oracle = -(0.11f64 * 0.11f64.ln() + 0.89f64 * 0.89f64.ln());
        let h = entropy(&d(&[0.11, 0.89]));
        assert!((h - oracle).abs() < 1e-15);
        assert!((h - 0.3465).abs() < 1e-4);
        assert!((h / 2f64.ln() - 0.4999).abs() < 1e-4);
    }

    #[test]
    fn entropy_f32() {
        let h = entropy(&Distribution::<f32>::uniform(4));
        assert!((h - 4f32.ln()).abs() < 1e-6);
    }

    #[test]
    fn kl_examples() {
        let p = d(&[0.2, 0.3, 0.5]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let v = kl_divergence(&d(&[1.0, 0.0]), &d(&[0.5, 0.5])).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        let v = kl_divergence(&d(&[0.5, 0.5]), &d(&[0.9, 0.1])).unwrap();
        let oracle = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln();
        assert!((v - oracle).abs() < 1e-15);
    }

    #[test]
    fn kl_requires_absolute_continuity() {
        let err = kl_divergence(&d(&[0.5, 0.5]), &d(&[1.0, 0.0])).unwrap_err();
        assert_eq!(err, Error::AbsoluteContinuityViolated { index: 1 });
        assert!(divergence_variance(&d(&[0.5, 0.5]), &d(&[1.0, 0.0])).is_err());
        assert!(kl_divergence(&d(&[1.0, 0.0]), &d(&[1.0, 0.0])).is_ok());
    }

    #[test]
    fn divergence_variance_examples() {
        let p = d(&[0.5, 0.5]);
        assert_eq!(divergence_variance(&p, &p).unwrap(), 0.0);
        let q = d(&[0.25, 0.75]);
        let l0 = (0.5f64 / 0.25).ln();
        let l1 = (0.5f64 / 0.75).ln();
        let m = 0.5 * l0 + 0.5 * l1;
        let oracle = 0.5 * l0 * l0 + 0.5 * l1 * l1 - m * m;
        assert!((divergence_variance(&p, &q).unwrap() - oracle).abs() < 1e-15);
        let q_swapped = d(&[0.75, 0.25]);
        let a = divergence_variance(&p, &q).unwrap();
        let b = divergence_variance(&p, &q_swapped).unwrap();
        assert!((a - b).abs() < 1e-15);
    }
}
