//! Discrete memoryless source quantities: rate-distortion function, its
//! gradient in the source law, and the source dispersion.

use serde::{Deserialize, Serialize};

use crate::channel::CORRECTION_NOTE;
use crate::error::{Error, Result};
use crate::prob::{entropy, q_inverse, Distribution};

/// Source law `P` over `S` and distortion matrix `d(s, ŝ)` over `S x Ŝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSource", into = "RawSource")]
pub struct SourceSpec {
    distribution: Distribution,
    distortion: Vec<f64>,
    reproduction_size: usize,
}

#[derive(Serialize, Deserialize)]
struct RawSource {
    probs: Distribution,
    distortion: Vec<Vec<f64>>,
}

impl TryFrom<RawSource> for SourceSpec {
    type Error = Error;

    fn try_from(raw: RawSource) -> Result<Self> {
        SourceSpec::new(raw.probs, raw.distortion)
    }
}

impl From<SourceSpec> for RawSource {
    fn from(src: SourceSpec) -> Self {
        RawSource {
            distortion: src.distortion_rows(),
            probs: src.distribution,
        }
    }
}

impl SourceSpec {
    pub fn new(distribution: Distribution, distortion: Vec<Vec<f64>>) -> Result<Self> {
        if distortion.len() != distribution.alphabet_size() {
            return Err(Error::InvalidSource(format!(
                "distortion has {} rows, source alphabet has {} symbols",
                distortion.len(),
                distribution.alphabet_size()
            )));
        }
        let reproduction_size = distortion[0].len();
        if reproduction_size == 0 {
            return Err(Error::InvalidSource("empty reproduction alphabet".into()));
        }
        let mut flat = Vec::with_capacity(distortion.len() * reproduction_size);
        for (s, row) in distortion.into_iter().enumerate() {
            if row.len() != reproduction_size {
                return Err(Error::InvalidSource(format!("distortion row {s} has wrong length")));
            }
            if row.iter().any(|d| !d.is_finite() || *d < 0.0) {
                return Err(Error::InvalidSource(format!(
                    "distortion row {s} has a negative or non-finite entry"
                )));
            }
            if !row.iter().any(|&d| d == 0.0) {
                return Err(Error::InvalidSource(format!(
                    "distortion row {s} has no zero entry"
                )));
            }
            flat.extend(row);
        }
        Ok(Self {
            distribution,
            distortion: flat,
            reproduction_size,
        })
    }

    /// Hamming distortion over `Ŝ = S`.
    pub fn hamming(distribution: Distribution) -> Self {
        let k = distribution.alphabet_size();
        let rows = (0..k)
            .map(|s| (0..k).map(|t| if s == t { 0.0 } else { 1.0 }).collect())
            .collect();
        Self::new(distribution, rows).expect("hamming distortion is normalized")
    }

    pub fn distribution(&self) -> &Distribution {
        &self.distribution
    }

    pub fn source_size(&self) -> usize {
        self.distribution.alphabet_size()
    }

    pub fn reproduction_size(&self) -> usize {
        self.reproduction_size
    }

    pub fn distortion(&self, s: usize, t: usize) -> f64 {
        self.distortion[s * self.reproduction_size + t]
    }

    fn distortion_row(&self, s: usize) -> &[f64] {
        &self.distortion[s * self.reproduction_size..(s + 1) * self.reproduction_size]
    }

    pub fn distortion_rows(&self) -> Vec<Vec<f64>> {
        self.distortion
            .chunks(self.reproduction_size)
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Same distortion measure, different source law.
    pub fn with_distribution(&self, distribution: Distribution) -> Result<Self> {
        if distribution.alphabet_size() != self.source_size() {
            return Err(Error::DimensionMismatch {
                expected: self.source_size(),
                got: distribution.alphabet_size(),
            });
        }
        Ok(Self {
            distribution,
            ..self.clone()
        })
    }
}

/// Smallest distortion with zero rate: the best constant reproduction.
pub fn d_max(src: &SourceSpec) -> f64 {
    (0..src.reproduction_size())
        .map(|t| {
            (0..src.source_size())
                .map(|s| src.distribution.get(s) * src.distortion(s, t))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn best_constant_reproduction(src: &SourceSpec) -> usize {
    (0..src.reproduction_size())
        .map(|t| {
            let d: f64 = (0..src.source_size())
                .map(|s| src.distribution.get(s) * src.distortion(s, t))
                .sum();
            (t, d)
        })
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
        .0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdfOptions {
    /// Certified gap of each fixed-slope solve, in nats.
    pub tol: f64,
    /// Width in distortion of the final slope bracket.
    pub distortion_tol: f64,
    pub max_iterations: usize,
}

impl Default for RdfOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            distortion_tol: 1e-10,
            max_iterations: 1_000_000,
        }
    }
}

/// Endpoint handling: distortions this close to `0` or `d_max` use closed forms.
pub const BOUNDARY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdfResult {
    /// `R(P, D)` in nats per sample.
    pub rate: f64,
    /// Test channel `Λ(ŝ|s)` achieving `achieved_distortion <= D`.
    pub test_channel: Vec<Vec<f64>>,
    pub lagrange_slope: f64,
    pub achieved_distortion: f64,
}

/// One converged fixed-slope solve.
#[derive(Debug, Clone)]
struct SlopePoint {
    slope: f64,
    distortion: f64,
    rate: f64,
    output: Vec<f64>,
}

/// Alternating minimization at a fixed slope (`None` = infinitely steep,
/// i.e. only zero-distortion pairs allowed).
fn solve_slope(
    src: &SourceSpec,
    slope: Option<f64>,
    start: &[f64],
    opts: &RdfOptions,
) -> Result<SlopePoint> {
    let ns = src.source_size();
    let nt = src.reproduction_size();
    let p = src.distribution.probs();
    let kernel: Vec<f64> = src
        .distortion
        .iter()
        .map(|&d| match slope {
            Some(s) => (s * d).exp(),
            None => {
                if d == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        })
        .collect();
    let mut q = start.to_vec();
    let mut gap = f64::INFINITY;
    let mut z = vec![0.0; ns];
    let mut c = vec![0.0; nt];
    for _ in 0..opts.max_iterations {
        for s in 0..ns {
            z[s] = (0..nt).map(|t| q[t] * kernel[s * nt + t]).sum();
        }
        c.iter_mut().for_each(|v| *v = 0.0);
        let mut distortion = 0.0;
        let mut rate = 0.0;
        for s in 0..ns {
            if p[s] == 0.0 {
                continue;
            }
            for t in 0..nt {
                let k = kernel[s * nt + t];
                if k == 0.0 || q[t] == 0.0 {
                    continue;
                }
                c[t] += p[s] * k / z[s];
                let lam = q[t] * k / z[s];
                distortion += p[s] * lam * src.distortion(s, t);
            }
        }
        // output law of the current test channel is q * c
        for s in 0..ns {
            if p[s] == 0.0 {
                continue;
            }
            for t in 0..nt {
                let k = kernel[s * nt + t];
                if k == 0.0 || q[t] == 0.0 {
                    continue;
                }
                let lam = q[t] * k / z[s];
                rate += p[s] * lam * (k / z[s] / c[t]).ln();
            }
        }
        let log_zbar: f64 = (0..ns).filter(|&s| p[s] > 0.0).map(|s| p[s] * z[s].ln()).sum();
        let cmax = c.iter().copied().fold(0.0, f64::max);
        let linear = match slope {
            Some(s) => s * distortion,
            None => 0.0,
        };
        let lower = linear - log_zbar - cmax.ln();
        let rate = rate.max(0.0);
        gap = rate - lower;
        let next: Vec<f64> = q.iter().zip(&c).map(|(a, b)| a * b).collect();
        if gap <= opts.tol {
            return Ok(SlopePoint {
                slope: slope.unwrap_or(f64::NEG_INFINITY),
                distortion,
                rate,
                output: next,
            });
        }
        let total: f64 = next.iter().sum();
        q = next.into_iter().map(|v| v / total).collect();
    }
    Err(Error::NonConvergence {
        what: "rate-distortion",
        iterations: opts.max_iterations,
        gap,
    })
}

fn test_channel_at(src: &SourceSpec, point: &SlopePoint) -> Vec<Vec<f64>> {
    let nt = src.reproduction_size();
    (0..src.source_size())
        .map(|s| {
            let row = src.distortion_row(s);
            let w: Vec<f64> = (0..nt)
                .map(|t| {
                    let k = if point.slope.is_finite() {
                        (point.slope * row[t]).exp()
                    } else if row[t] == 0.0 {
                        1.0
                    } else {
                        0.0
                    };
                    point.output[t] * k
                })
                .collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|v| v / total).collect()
        })
        .collect()
}

/// Rate-distortion function `R(P, D)` in nats per sample.
pub fn rdf(src: &SourceSpec, d: f64, opts: &RdfOptions) -> Result<RdfResult> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::DomainError(format!("distortion must be >= 0, got {d}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::DomainError("tolerance must be positive".into()));
    }
    let dmax = d_max(src);
    let nt = src.reproduction_size();
    if d >= dmax - BOUNDARY_EPS {
        let t = best_constant_reproduction(src);
        let row: Vec<f64> = (0..nt).map(|u| if u == t { 1.0 } else { 0.0 }).collect();
        return Ok(RdfResult {
            rate: 0.0,
            test_channel: vec![row; src.source_size()],
            lagrange_slope: 0.0,
            achieved_distortion: dmax,
        });
    }
    let uniform = vec![1.0 / nt as f64; nt];
    if d <= BOUNDARY_EPS {
        let point = solve_slope(src, None, &uniform, opts)?;
        return Ok(RdfResult {
            rate: point.rate,
            test_channel: test_channel_at(src, &point),
            lagrange_slope: f64::NEG_INFINITY,
            achieved_distortion: point.distortion,
        });
    }

    // bracket: steep slope gives distortion below d, slope 0 gives d_max above d
    let mut lo = solve_slope(src, Some(-1.0), &uniform, opts)?;
    while lo.distortion > d {
        let steeper = lo.slope * 2.0;
        if steeper < -1e8 {
            return Err(Error::NonConvergence {
                what: "rate-distortion slope bracket",
                iterations: 0,
                gap: lo.distortion - d,
            });
        }
        lo = solve_slope(src, Some(steeper), &lo.output, opts)?;
    }
    let mut hi = SlopePoint {
        slope: 0.0,
        distortion: dmax,
        rate: 0.0,
        output: vec![],
    };
    if lo.slope < -1.0 {
        hi = solve_slope(src, Some(lo.slope / 2.0), &lo.output, opts)?;
    } else {
        // lo is at -1 and already below d
        let mut s = -0.5;
        loop {
            let p = solve_slope(src, Some(s), &lo.output, opts)?;
            if p.distortion >= d {
                hi = p;
                break;
            }
            lo = p;
            s *= 0.5;
            if s > -1e-12 {
                break;
            }
        }
    }
    for _ in 0..200 {
        if hi.distortion - lo.distortion <= opts.distortion_tol || hi.slope - lo.slope <= 1e-15 * lo.slope.abs() {
            break;
        }
        let mid = 0.5 * (lo.slope + hi.slope);
        let start = if lo.output.is_empty() { &uniform } else { &lo.output };
        let p = solve_slope(src, Some(mid), start, opts)?;
        if p.distortion <= d {
            lo = p;
        } else {
            hi = p;
        }
    }
    // chord between bracket endpoints; exact on linear pieces, second order otherwise
    let rate = if hi.distortion > lo.distortion {
        lo.rate + (hi.rate - lo.rate) * (d - lo.distortion) / (hi.distortion - lo.distortion)
    } else {
        lo.rate
    };
    Ok(RdfResult {
        rate: rate.max(0.0),
        test_channel: test_channel_at(src, &lo),
        lagrange_slope: lo.slope,
        achieved_distortion: lo.distortion,
    })
}

/// Default finite-difference step for [`rdf_gradient`].
pub const DEFAULT_GRADIENT_STEP: f64 = 1e-5;

fn check_interior(src: &SourceSpec, d: f64) -> Result<()> {
    let dmax = d_max(src);
    if d <= BOUNDARY_EPS || d >= dmax - BOUNDARY_EPS {
        return Err(Error::BoundaryDistortion { d, d_max: dmax });
    }
    Ok(())
}

/// Directional derivatives `g(s) = d/dε R((1-ε)P + ε δ_s, D)` at `ε = 0`.
///
/// `g` equals the partials `∂R/∂Q(s)` shifted by the constant `Σ P ∂R/∂Q`,
/// which leaves the variance unchanged. Central differences; symbols with
/// `P(s) = 0` use a forward difference.
pub fn rdf_gradient(src: &SourceSpec, d: f64, step: f64, opts: &RdfOptions) -> Result<Vec<f64>> {
    check_interior(src, d)?;
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::StepTooLarge { step });
    }
    let p = src.distribution.probs();
    let k = p.len();
    let rate_at = |eps: f64, s: usize| -> Result<f64> {
        let probs: Vec<f64> = (0..k)
            .map(|j| {
                let delta = if j == s { 1.0 } else { 0.0 };
                ((1.0 - eps) * p[j] + eps * delta).max(0.0)
            })
            .collect();
        let q = Distribution::from_weights(probs)?;
        Ok(rdf(&src.with_distribution(q)?, d, opts)?.rate)
    };
    let base = rdf(src, d, opts)?.rate;
    (0..k)
        .map(|s| {
            if p[s] == 0.0 {
                return Ok((rate_at(step, s)? - base) / step);
            }
            // (1 + h) P(s) - h must stay positive
            if (1.0 + step) * p[s] - step <= 0.0 {
                return Err(Error::StepTooLarge { step });
            }
            Ok((rate_at(step, s)? - rate_at(-step, s)?) / (2.0 * step))
        })
        .collect()
}

/// `Var_{S~P}[g(S)]` for any gradient convention `g`.
pub fn variance_under(p: &Distribution, g: &[f64]) -> f64 {
    let mean: f64 = p.probs().iter().zip(g).map(|(a, b)| a * b).sum();
    p.probs()
        .iter()
        .zip(g)
        .map(|(a, b)| a * (b - mean) * (b - mean))
        .sum::<f64>()
        .max(0.0)
}

/// Source dispersion `V_S(P, D)` in nats².
pub fn source_dispersion(src: &SourceSpec, d: f64, opts: &RdfOptions) -> Result<f64> {
    let g = rdf_gradient(src, d, DEFAULT_GRADIENT_STEP, opts)?;
    Ok(variance_under(&src.distribution, &g))
}

/// Lossless source dispersion `Var[log P(S)]` in nats².
pub fn lossless_source_dispersion(p: &Distribution) -> f64 {
    let logs: Vec<f64> = p
        .probs()
        .iter()
        .map(|&x| if x > 0.0 { x.ln() } else { 0.0 })
        .collect();
    variance_under(p, &logs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRate {
    pub n: u64,
    pub eps: f64,
    pub rate: f64,
    pub rdf: f64,
    pub dispersion: f64,
    pub correction_note: String,
}

/// `R(P, D) + sqrt(V_S / n) Q^-1(eps)` in nats per sample.
pub fn source_rate_at(src: &SourceSpec, d: f64, n: u64, eps: f64, opts: &RdfOptions) -> Result<SourceRate> {
    if n == 0 {
        return Err(Error::DomainError("block length must be positive".into()));
    }
    let z = q_inverse(eps)?;
    let r = rdf(src, d, opts)?.rate;
    let v = source_dispersion(src, d, opts)?;
    Ok(SourceRate {
        n,
        eps,
        rate: r + (v / n as f64).sqrt() * z,
        rdf: r,
        dispersion: v,
        correction_note: CORRECTION_NOTE.to_string(),
    })
}

/// `H(P)`, the zero-distortion rate when every source symbol has its own
/// zero-distortion reproduction.
pub fn lossless_rate(p: &Distribution) -> f64 {
    entropy(p)
}
