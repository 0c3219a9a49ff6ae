//! Dispersion-level cost of separate source and channel coding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{q_function, q_inverse};

/// Ratio `ρV_C / V_S` values for the standard set of separation curves.
pub const PRESET_LAMBDAS: [f64; 8] = [1.0, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0, 1000.0];

/// Default golden-section width in the split parameter.
pub const DEFAULT_GRID_TOL: f64 = 1e-10;

const DELTA: f64 = 1e-12;
const COARSE_POINTS: usize = 257;

/// 200 log-spaced points in `[1e-4, 0.5]`.
pub fn preset_eps_grid() -> Vec<f64> {
    log_grid(1e-4, 0.5, 200)
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// A split `eps_s * eps_c = eps` of the error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub eps_s: f64,
    pub eps_c: f64,
    /// Minimized objective `a Q^-1(eps_s) + b Q^-1(eps_c)`.
    pub objective: f64,
}

fn split_at(eps: f64, t: f64) -> (f64, f64) {
    // eps - eps_s = eps * sigmoid(-t) keeps full relative precision at both ends
    let eps_s = eps * sigmoid(t);
    let eps_c = eps * sigmoid(-t) / (1.0 - eps_s);
    (eps_s, eps_c)
}

/// Minimizes `a Q^-1(eps_s) + b Q^-1(eps_c)` over `eps_s * eps_c = eps`,
/// `eps_s` in `[eps δ, eps (1 - δ)]`: coarse scan, then golden section.
pub fn minimize_split(eps: f64, a: f64, b: f64, grid_tol: f64) -> Result<Split> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::DomainError(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(a >= 0.0 && b >= 0.0) || !(a.is_finite() && b.is_finite()) {
        return Err(Error::DomainError("weights must be finite and nonnegative".into()));
    }
    if !(grid_tol > 0.0) {
        return Err(Error::DomainError("grid_tol must be positive".into()));
    }
    let f = |t: f64| -> f64 {
        let (es, ec) = split_at(eps, t);
        a * q_inverse(es).unwrap_or(f64::INFINITY) + b * q_inverse(ec).unwrap_or(f64::INFINITY)
    };
    let span = (1.0 / DELTA).ln();
    let step = 2.0 * span / (COARSE_POINTS - 1) as f64;
    let (best, _) = (0..COARSE_POINTS)
        .map(|i| (i, f(-span + step * i as f64)))
        .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
    let mut lo = -span + step * best.saturating_sub(1) as f64;
    let mut hi = (-span + step * (best + 1) as f64).min(span);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > grid_tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let t = 0.5 * (lo + hi);
    let (eps_s, eps_c) = split_at(eps, t);
    Ok(Split {
        eps_s,
        eps_c,
        objective: f(t),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalentEps {
    pub eps: f64,
    pub lambda: f64,
    pub eps_tilde: f64,
    pub split: Split,
}

/// Error probability a joint scheme could reach with the rate a separated
/// scheme needs for `eps`, at `λ = ρV_C / V_S`.
pub fn separation_equivalent_eps(eps: f64, lambda: f64, grid_tol: f64) -> Result<EquivalentEps> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::DomainError(format!("lambda must be positive, got {lambda}")));
    }
    let split = minimize_split(eps, 1.0, lambda.sqrt(), grid_tol)?;
    Ok(EquivalentEps {
        eps,
        lambda,
        eps_tilde: q_function(split.objective / (1.0 + lambda).sqrt()),
        split,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationDispersion {
    pub v_sep: f64,
    pub split: Split,
}

/// `V_sep` for source dispersion `v_s` and scaled channel dispersion `rho_v_c`.
pub fn separation_vsep(eps: f64, v_s: f64, rho_v_c: f64) -> Result<SeparationDispersion> {
    if eps == 0.5 {
        return Err(Error::UndefinedAtHalf);
    }
    if !(v_s >= 0.0 && rho_v_c >= 0.0) || v_s + rho_v_c <= 0.0 {
        return Err(Error::DomainError(
            "dispersions must be nonnegative and not both zero".into(),
        ));
    }
    let split = minimize_split(eps, v_s.sqrt(), rho_v_c.sqrt(), DEFAULT_GRID_TOL)?;
    let z = q_inverse(eps)?;
    Ok(SeparationDispersion {
        v_sep: (split.objective / z).powi(2),
        split,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub eps: f64,
    pub lambda: f64,
    pub eps_tilde: f64,
}

/// `ε̃(ε, λ)` on the grid, ordered by lambda then eps.
pub fn separation_curve(eps_grid: &[f64], lambda_list: &[f64], grid_tol: f64) -> Result<Vec<CurvePoint>> {
    if eps_grid.is_empty() || lambda_list.is_empty() {
        return Err(Error::DomainError("empty grid".into()));
    }
    let cells: Vec<(f64, f64)> = lambda_list
        .iter()
        .flat_map(|&l| eps_grid.iter().map(move |&e| (e, l)))
        .collect();
    cells
        .par_iter()
        .map(|&(eps, lambda)| {
            separation_equivalent_eps(eps, lambda, grid_tol).map(|r| CurvePoint {
                eps,
                lambda,
                eps_tilde: r.eps_tilde,
            })
        })
        .collect()
}
