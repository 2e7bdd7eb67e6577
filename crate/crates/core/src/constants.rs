//! Problem parameters and every closed-form constant used downstream.

use crate::error::{LabError, Result};
use crate::special::gamma_unchecked;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The quadruple (N, α, μ, ν) defining one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: usize,
    pub alpha: f64,
    pub mu: f64,
    pub nu: f64,
}

impl ProblemParams {
    pub fn new(n: usize, alpha: f64, mu: f64, nu: f64) -> Result<Self> {
        let p = ProblemParams { n, alpha, mu, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(LabError::InvalidParams(format!("N must be >= 3, got {}", self.n)));
        }
        check_alpha(self.n, self.alpha)?;
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(LabError::InvalidParams(format!("nu must be > 0, got {}", self.nu)));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(LabError::InvalidParams(format!("mu must be >= 0, got {}", self.mu)));
        }
        Ok(())
    }

    /// The lower-critical exponent p = (N+α)/N.
    pub fn p(&self) -> f64 {
        exponent(self.n, self.alpha)
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        ProblemParams { mu, ..*self }
    }

    pub fn with_nu(&self, nu: f64) -> Self {
        ProblemParams { nu, ..*self }
    }
}

pub(crate) fn exponent(n: usize, alpha: f64) -> f64 {
    (n as f64 + alpha) / n as f64
}

fn check_alpha(n: usize, alpha: f64) -> Result<()> {
    if n < 1 {
        return Err(LabError::Domain("dimension must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < n as f64) {
        return Err(LabError::Domain(format!("alpha must lie in (0, {n}), got {alpha}")));
    }
    Ok(())
}

/// A_α = Γ((N−α)/2) / (Γ(α/2) π^{N/2} 2^α), the normalisation of I_α.
pub fn riesz_constant(n: usize, alpha: f64) -> Result<f64> {
    check_alpha(n, alpha)?;
    let nf = n as f64;
    Ok(gamma_unchecked((nf - alpha) / 2.0) / (gamma_unchecked(alpha / 2.0) * PI.powf(nf / 2.0) * 2f64.powf(alpha)))
}

/// Sharp Hardy–Littlewood–Sobolev constant at the symmetric exponent 2N/(N+α).
pub fn hls_sharp_constant(n: usize, alpha: f64) -> Result<f64> {
    check_alpha(n, alpha)?;
    let nf = n as f64;
    let ratio = gamma_unchecked(nf / 2.0) / gamma_unchecked(nf);
    Ok(PI.powf((nf - alpha) / 2.0) * gamma_unchecked(alpha / 2.0) / gamma_unchecked((nf + alpha) / 2.0) * ratio.powf(-alpha / nf))
}

/// c_∞ = (A_α 𝒞_α)^{−N/(N+α)}.
pub fn c_inf_closed(n: usize, alpha: f64) -> Result<f64> {
    let a = riesz_constant(n, alpha)?;
    let c = hls_sharp_constant(n, alpha)?;
    Ok((a * c).powf(-(n as f64) / (n as f64 + alpha)))
}

/// Potential-depth landmarks for given (N, ν).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalMu {
    /// (N−2)²/4
    pub hardy: f64,
    /// N²(N−2)/(4(N+1))
    pub mv_threshold: f64,
    /// ν² + (N−2)²/4
    pub hardy_plus_nu2: f64,
}

pub fn critical_mu_values(n: usize, nu: f64) -> Result<CriticalMu> {
    if n < 3 || !(nu > 0.0) {
        return Err(LabError::InvalidParams(format!("need N >= 3 and nu > 0, got ({n}, {nu})")));
    }
    let nf = n as f64;
    let hardy = (nf - 2.0).powi(2) / 4.0;
    Ok(CriticalMu { hardy, mv_threshold: nf * nf * (nf - 2.0) / (4.0 * (nf + 1.0)), hardy_plus_nu2: nu * nu + hardy })
}

/// All constants of a run, evaluated once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsBundle {
    pub n: usize,
    pub alpha: f64,
    pub nu: f64,
    pub p: f64,
    pub riesz_a: f64,
    pub hls_sharp: f64,
    pub c_inf_closed: f64,
    pub hardy: f64,
    pub mv_threshold: f64,
    pub hardy_plus_nu2: f64,
}

impl ConstantsBundle {
    pub fn new(params: &ProblemParams) -> Result<Self> {
        params.validate()?;
        let crit = critical_mu_values(params.n, params.nu)?;
        let bundle = ConstantsBundle {
            n: params.n,
            alpha: params.alpha,
            nu: params.nu,
            p: params.p(),
            riesz_a: riesz_constant(params.n, params.alpha)?,
            hls_sharp: hls_sharp_constant(params.n, params.alpha)?,
            c_inf_closed: c_inf_closed(params.n, params.alpha)?,
            hardy: crit.hardy,
            mv_threshold: crit.mv_threshold,
            hardy_plus_nu2: crit.hardy_plus_nu2,
        };
        debug_assert!(bundle.hardy < bundle.mv_threshold);
        Ok(bundle)
    }

    /// β = (α/(2(N+α))) c_∞^{(N+α)/α}, the energy of the extremal level.
    pub fn beta_level(&self) -> f64 {
        least_energy_formula(self.n, self.alpha, self.c_inf_closed)
    }
}

pub(crate) fn least_energy_formula(n: usize, alpha: f64, c: f64) -> f64 {
    let nf = n as f64;
    alpha / (2.0 * (nf + alpha)) * c.powf((nf + alpha) / alpha)
}

/// | |a|^p + |b|^p − |a+b|^p | ≤ 2^{2−p} p |a| |b|^{p−1} for p ∈ (1,2).
pub fn pointwise_inequality_check(a: f64, b: f64, p: f64) -> bool {
    let lhs = (a.abs().powf(p) + b.abs().powf(p) - (a + b).abs().powf(p)).abs();
    let rhs = 2f64.powf(2.0 - p) * p * a.abs() * b.abs().powf(p - 1.0);
    // rounding slack relative to the magnitudes involved
    let scale = a.abs().powf(p) + b.abs().powf(p) + (a + b).abs().powf(p);
    lhs <= rhs + 8.0 * f64::EPSILON * scale
}
