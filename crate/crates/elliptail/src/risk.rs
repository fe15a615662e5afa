//! Lp-quantile and Haezendonck-Goovaerts estimates derived from an extreme
//! quantile estimate through the asymptotic proportionality factors f_L and
//! f_H, evaluated at the conditional tail index (γ⁻¹ + N)⁻¹.
//!
//! The factor multiplies only the radial part of the estimate; the
//! conditional location is added back unchanged, and the confidence interval
//! is transported with the same relative width (the limit laws coincide).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremal::ExtremalEstimate;
use crate::quantile::{MeasureKind, RiskEstimate, Z_95};
use crate::special::ln_beta;

/// Which proportionality factor a [`ConversionFactor`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Lp { p: f64 },
    Hg { p: f64 },
}

/// A conversion factor together with the conditional tail index it was
/// evaluated at. Existence requires gamma_cond * p < 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConversionFactor {
    pub kind: FactorKind,
    pub gamma_cond: f64,
    pub value: f64,
}

/// Tail index of the conditional law: (γ⁻¹ + N)⁻¹.
pub fn conditional_tail_index(gamma: f64, n_dim: usize) -> f64 {
    1.0 / (1.0 / gamma + n_dim as f64)
}

/// f_L(γ, p) = [γ / B(p, γ⁻¹ - p + 1)]^(-γ), the Lp-quantile to quantile
/// asymptotic ratio for a Pareto-type tail with index γ.
pub fn f_l(gamma: f64, p: f64) -> Result<f64> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let second = 1.0 / gamma - p + 1.0;
    if second <= 0.0 {
        return Err(Error::Existence(format!(
            "L_p factor needs gamma < 1/(p-1): gamma = {gamma}, p = {p}"
        )));
    }
    if p == 1.0 {
        // B(1, γ⁻¹) = γ makes the bracket one; short-circuit keeps the
        // quantile case exact.
        return Ok(1.0);
    }
    // [γ / B(p, γ⁻¹-p+1)]^(-γ) computed in log space.
    let log_bracket = gamma.ln() - ln_beta(p, second);
    Ok((-gamma * log_bracket).exp())
}

/// f_H(γ, p) = γ⁻¹ (γ⁻¹-p)^(pγ-1) p^(-γ(p-1)) B(γ⁻¹-p, p)^γ, the
/// Haezendonck-Goovaerts to quantile asymptotic ratio for the power Young
/// function t^p.
pub fn f_h(gamma: f64, p: f64) -> Result<f64> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    let inv_gamma = 1.0 / gamma;
    if inv_gamma - p <= 0.0 {
        return Err(Error::Existence(format!(
            "H-G factor needs gamma < 1/p: gamma = {gamma}, p = {p}"
        )));
    }
    if p == 1.0 {
        // Algebraic identity: B(γ⁻¹-1, 1) = (γ⁻¹-1)⁻¹ collapses the whole
        // expression to the TVaR ratio 1/(1-γ).
        return Ok(1.0 / (1.0 - gamma));
    }
    let log_value = -gamma.ln() + (p * gamma - 1.0) * (inv_gamma - p).ln()
        - gamma * (p - 1.0) * p.ln()
        + gamma * ln_beta(inv_gamma - p, p);
    Ok(log_value.exp())
}

/// Existence guard of Definitions 6-7: p <= N or γ̂ < 1/(p - N), which is
/// gamma_cond * p < 1 at the conditional index.
fn existence_guard(gamma_hat: f64, p: f64, n_dim: usize) -> Result<f64> {
    let gamma_cond = conditional_tail_index(gamma_hat, n_dim);
    if gamma_cond * p >= 1.0 {
        return Err(Error::Existence(format!(
            "measure does not exist: conditional tail index {gamma_cond:.6} * p = {:.6} >= 1 \
             (need p <= N or gamma < 1/(p-N))",
            gamma_cond * p
        )));
    }
    Ok(gamma_cond)
}

fn convert(base: &RiskEstimate, factor: ConversionFactor, kind: MeasureKind) -> RiskEstimate {
    let radial = base.radial * factor.value;
    let value = base.mu_cond + base.sigma_cond * radial;
    let down = value / (1.0 + Z_95 * base.se_ratio);
    let up = if Z_95 * base.se_ratio < 1.0 {
        value / (1.0 - Z_95 * base.se_ratio)
    } else {
        value.signum() * f64::INFINITY
    };
    RiskEstimate {
        kind,
        level: base.level,
        value,
        se_ratio: base.se_ratio,
        ci_low: down.min(up),
        ci_high: down.max(up),
        regime: base.regime,
        radial,
        mu_cond: base.mu_cond,
        sigma_cond: base.sigma_cond,
        warnings: base.warnings.clone(),
    }
}

/// Lp-quantile conversion factor at the conditional index.
pub fn lp_factor(est: &ExtremalEstimate, p: f64, n_dim: usize) -> Result<ConversionFactor> {
    let gamma_cond = existence_guard(est.gamma_hat, p, n_dim)?;
    Ok(ConversionFactor { kind: FactorKind::Lp { p }, gamma_cond, value: f_l(gamma_cond, p)? })
}

/// H-G conversion factor at the conditional index.
pub fn hg_factor(est: &ExtremalEstimate, p: f64, n_dim: usize) -> Result<ConversionFactor> {
    let gamma_cond = existence_guard(est.gamma_hat, p, n_dim)?;
    Ok(ConversionFactor { kind: FactorKind::Hg { p }, gamma_cond, value: f_h(gamma_cond, p)? })
}

/// Converts a plain quantile estimate into an Lp-quantile estimate by
/// scaling the radial part by f_L.
pub fn lp_quantile_estimate(
    base: &RiskEstimate,
    est: &ExtremalEstimate,
    p: f64,
    n_dim: usize,
) -> Result<RiskEstimate> {
    if !matches!(base.kind, MeasureKind::Quantile) {
        return Err(Error::InvalidParameter(format!(
            "base estimate must be a plain quantile, got {}",
            base.kind.tag()
        )));
    }
    let factor = lp_factor(est, p, n_dim)?;
    Ok(convert(base, factor, MeasureKind::LpQuantile(p)))
}

/// Converts a plain quantile estimate into a Haezendonck-Goovaerts estimate
/// by scaling the radial part by f_H.
pub fn hg_estimate(
    base: &RiskEstimate,
    est: &ExtremalEstimate,
    p: f64,
    n_dim: usize,
) -> Result<RiskEstimate> {
    if !matches!(base.kind, MeasureKind::Quantile) {
        return Err(Error::InvalidParameter(format!(
            "base estimate must be a plain quantile, got {}",
            base.kind.tag()
        )));
    }
    let factor = hg_factor(est, p, n_dim)?;
    Ok(convert(base, factor, MeasureKind::HaezendonckGoovaerts(p)))
}
