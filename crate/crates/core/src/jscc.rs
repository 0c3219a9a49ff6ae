//! Joint source-channel coding: OPTA, dispersion, finite-n distortion
//! thresholds and the lossless bandwidth-expansion sequence.

use serde::{Deserialize, Serialize};

use crate::channel::{CapacityOptions, ChannelAnalysis, CORRECTION_NOTE};
use crate::error::{Error, Result};
use crate::prob::{entropy, q_inverse, Channel, Distribution};
use crate::source::{
    d_max, lossless_source_dispersion, rdf, rdf_gradient, variance_under, RdfOptions, SourceSpec,
    BOUNDARY_EPS, DEFAULT_GRADIENT_STEP,
};

/// Reporting units. Computation is always in nats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Nats,
    #[default]
    Bits,
}

impl Units {
    pub fn rate(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / std::f64::consts::LN_2,
        }
    }

    pub fn variance(self, nats2: f64) -> f64 {
        match self {
            Units::Nats => nats2,
            Units::Bits => nats2 / (std::f64::consts::LN_2 * std::f64::consts::LN_2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsccProblem {
    pub source: SourceSpec,
    pub channel: Channel,
    /// Channel uses per source sample.
    pub rho: f64,
    pub eps: f64,
}

impl JsccProblem {
    pub fn new(source: SourceSpec, channel: Channel, rho: f64, eps: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::DomainError(format!("rho must be positive, got {rho}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::DomainError(format!("eps must lie in (0, 1), got {eps}")));
        }
        Ok(Self {
            source,
            channel,
            rho,
            eps,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsccOptions {
    pub capacity: CapacityOptions,
    pub rdf: RdfOptions,
    /// Width of the final distortion bracket when inverting `R(P, .)`.
    pub bisection_tol: f64,
    pub gradient_step: f64,
}

impl Default for JsccOptions {
    fn default() -> Self {
        Self {
            capacity: CapacityOptions::default(),
            rdf: RdfOptions::default(),
            bisection_tol: 1e-14,
            gradient_step: DEFAULT_GRADIENT_STEP,
        }
    }
}

impl JsccOptions {
    pub fn with_tol(tol: f64) -> Self {
        let mut opts = Self::default();
        opts.capacity.tol = tol;
        opts
    }
}

/// Solves `R(P, D) = rate` for `D` by bisection on `(0, d_max)`.
pub fn distortion_for_rate(src: &SourceSpec, rate: f64, opts: &JsccOptions) -> Result<f64> {
    let r0 = rdf(src, 0.0, &opts.rdf)?.rate;
    if !(rate > 0.0 && rate < r0) {
        return Err(Error::RateOutOfRange { rate, max: r0 });
    }
    let (mut lo, mut hi) = (0.0, d_max(src));
    let width = opts.bisection_tol * hi.max(1.0);
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if rdf(src, mid, &opts.rdf)?.rate > rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn opta_given_capacity(src: &SourceSpec, rho: f64, c: f64, opts: &JsccOptions) -> Result<f64> {
    let target = rho * c;
    if target <= opts.capacity.tol {
        return Ok(d_max(src));
    }
    let r0 = rdf(src, 0.0, &opts.rdf)?.rate;
    if target >= r0 {
        return Ok(0.0);
    }
    distortion_for_rate(src, target, opts)
}

/// Optimal asymptotic distortion `D*` solving `R(P, D*) = rho C(W)`.
pub fn opta(problem: &JsccProblem, opts: &JsccOptions) -> Result<f64> {
    let c = crate::channel::capacity(&problem.channel, opts.capacity)?.capacity;
    opta_given_capacity(&problem.source, problem.rho, c, opts)
}

/// `V_S(P, D*) + rho {V_min, V_max}` together with the quantities it is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub units: Units,
    pub rho: f64,
    pub eps: f64,
    pub capacity: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub capacity_set_is_singleton: bool,
    pub d_star: f64,
    pub r_at_d_star: f64,
    pub v_s_at_d_star: f64,
    pub v_j_low: f64,
    pub v_j_high: f64,
    pub correction_note: String,
}

impl DispersionReport {
    /// Re-expresses a nats report in `units`.
    pub fn in_units(&self, units: Units) -> Self {
        assert_eq!(self.units, Units::Nats, "conversion starts from nats");
        Self {
            units,
            capacity: units.rate(self.capacity),
            v_min: units.variance(self.v_min),
            v_max: units.variance(self.v_max),
            r_at_d_star: units.rate(self.r_at_d_star),
            v_s_at_d_star: units.variance(self.v_s_at_d_star),
            v_j_low: units.variance(self.v_j_low),
            v_j_high: units.variance(self.v_j_high),
            ..self.clone()
        }
    }
}

/// Finite-`n` distortion thresholds, one per end of the dispersion interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub n: u64,
    /// Target `rho C - sqrt(V_J / n) Q^-1(eps)` using `v_j_low`, in nats.
    pub target_low: f64,
    pub target_high: f64,
    pub d_n_low: f64,
    pub d_n_high: f64,
    pub correction_note: String,
}

/// Channel analysis plus OPTA for one problem, reused across block lengths.
#[derive(Debug, Clone)]
pub struct JsccAnalysis {
    pub problem: JsccProblem,
    pub channel: ChannelAnalysis,
    pub d_star: f64,
    opts: JsccOptions,
}

impl JsccAnalysis {
    pub fn new(problem: &JsccProblem, opts: &JsccOptions) -> Result<Self> {
        let channel = ChannelAnalysis::new(&problem.channel, opts.capacity)?;
        let d_star = opta_given_capacity(
            &problem.source,
            problem.rho,
            channel.capacity.capacity,
            opts,
        )?;
        Ok(Self {
            problem: problem.clone(),
            channel,
            d_star,
            opts: *opts,
        })
    }

    pub fn capacity(&self) -> f64 {
        self.channel.capacity.capacity
    }

    fn check_interior(&self) -> Result<()> {
        let dmax = d_max(&self.problem.source);
        if self.d_star <= BOUNDARY_EPS || self.d_star >= dmax - BOUNDARY_EPS {
            return Err(Error::BoundaryDistortion {
                d: self.d_star,
                d_max: dmax,
            });
        }
        Ok(())
    }

    /// Dispersion report in nats.
    pub fn report(&self) -> Result<DispersionReport> {
        self.check_interior()?;
        let src = &self.problem.source;
        let g = rdf_gradient(src, self.d_star, self.opts.gradient_step, &self.opts.rdf)?;
        let v_s = variance_under(src.distribution(), &g);
        let r = rdf(src, self.d_star, &self.opts.rdf)?.rate;
        let disp = &self.channel.dispersion;
        let rho = self.problem.rho;
        Ok(DispersionReport {
            units: Units::Nats,
            rho,
            eps: self.problem.eps,
            capacity: self.capacity(),
            v_min: disp.v_min,
            v_max: disp.v_max,
            capacity_set_is_singleton: disp.capacity_set_is_singleton,
            d_star: self.d_star,
            r_at_d_star: r,
            v_s_at_d_star: v_s,
            v_j_low: v_s + rho * disp.v_min,
            v_j_high: v_s + rho * disp.v_max,
            correction_note: CORRECTION_NOTE.to_string(),
        })
    }

    /// Distortion thresholds `D_n` at block length `n`, given a report from [`Self::report`].
    pub fn threshold(&self, report: &DispersionReport, n: u64) -> Result<ThresholdRow> {
        if n == 0 {
            return Err(Error::DomainError("block length must be positive".into()));
        }
        let z = q_inverse(self.problem.eps)?;
        let base = self.problem.rho * self.capacity();
        let target = |v: f64| base - (v / n as f64).sqrt() * z;
        let (target_low, target_high) = (target(report.v_j_low), target(report.v_j_high));
        let solve = |t: f64| {
            if z == 0.0 {
                Ok(self.d_star)
            } else {
                distortion_for_rate(&self.problem.source, t, &self.opts)
            }
        };
        Ok(ThresholdRow {
            n,
            target_low,
            target_high,
            d_n_low: solve(target_low)?,
            d_n_high: solve(target_high)?,
            correction_note: CORRECTION_NOTE.to_string(),
        })
    }
}

/// Dispersion report in nats; fails with `BoundaryDistortion` when `D*` is `0` or `d_max`.
pub fn jscc_dispersion(problem: &JsccProblem, opts: &JsccOptions) -> Result<DispersionReport> {
    JsccAnalysis::new(problem, opts)?.report()
}

pub fn distortion_threshold(problem: &JsccProblem, n: u64, opts: &JsccOptions) -> Result<ThresholdRow> {
    let analysis = JsccAnalysis::new(problem, opts)?;
    let report = analysis.report()?;
    analysis.threshold(&report, n)
}

/// Minimal bandwidth expansion for lossless transmission at block length `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosslessRho {
    pub n: u64,
    pub eps: f64,
    /// `V_min` when `eps <= 1/2`, else `V_max`.
    pub rho_n: f64,
    pub rho_n_v_min: f64,
    pub rho_n_v_max: f64,
    pub rho_limit: f64,
    pub entropy: f64,
    pub capacity: f64,
    /// Source part of `V_J`: `Var[log P(S)]`, nats².
    pub source_dispersion: f64,
    pub correction_note: String,
}

pub fn lossless_rho_with(
    p: &Distribution,
    channel: &ChannelAnalysis,
    n: u64,
    eps: f64,
    tol: f64,
) -> Result<LosslessRho> {
    if n == 0 {
        return Err(Error::DomainError("block length must be positive".into()));
    }
    let c = channel.capacity.capacity;
    if c <= tol {
        return Err(Error::UselessChannel { capacity: c });
    }
    let z = q_inverse(eps)?;
    let h = entropy(p);
    let v_src = lossless_source_dispersion(p);
    let rho = h / c;
    let at = |v_c: f64| rho + ((v_src + rho * v_c) / n as f64).sqrt() * z / c;
    let rho_n_v_min = at(channel.dispersion.v_min);
    let rho_n_v_max = at(channel.dispersion.v_max);
    Ok(LosslessRho {
        n,
        eps,
        rho_n: if eps <= 0.5 { rho_n_v_min } else { rho_n_v_max },
        rho_n_v_min,
        rho_n_v_max,
        rho_limit: rho,
        entropy: h,
        capacity: c,
        source_dispersion: v_src,
        correction_note: CORRECTION_NOTE.to_string(),
    })
}

pub fn lossless_rho(p: &Distribution, w: &Channel, n: u64, eps: f64, opts: &JsccOptions) -> Result<LosslessRho> {
    let analysis = ChannelAnalysis::new(w, opts.capacity)?;
    lossless_rho_with(p, &analysis, n, eps, opts.capacity.tol)
}

/// `a * b = a + b - ab`, the error probability of two independent stages.
pub fn combine_error_probs(a: f64, b: f64) -> Result<f64> {
    for v in [a, b] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::DomainError(format!("probability {v} outside [0, 1]")));
        }
    }
    Ok(a + b - a * b)
}
