//! Intermediate and high extreme conditional quantile estimators, the
//! polynomial sequence schedule α_n = 1 - n^(-a), k_n = n^b, h_n = n^(-c),
//! and the reduced validity conditions for such schedules.
//!
//! Intermediate regime (n(1-α_n) → ∞): an order statistic at the corrected
//! level ṽ_n, raised to 1/η̂. High regime (n(1-α_n) → 0): the order statistic
//! at the intermediate rank k_n+1 with a Weissman-style extrapolation factor
//! (k_n/(n ṽ_n))^γ̂ before the 1/η̂ power.

use serde::{Deserialize, Serialize};

use crate::elliptical::ConditionalMoments;
use crate::error::{Error, Result};
use crate::extremal::{ExtremalEstimate, OrderStatistics};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959963984540054;

/// Polynomial schedule for (α_n, k_n, h_n) plus the user-supplied tail
/// metadata (ρ, reference γ) that enters only the condition checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceSchedule {
    /// α_n = 1 - n^(-a), a > 0.
    pub a: f64,
    /// k_n = n^b, 0 < b < 1.
    pub b: f64,
    /// h_n = n^(-c), c > 0.
    pub c: f64,
    /// Second-order index ρ < 0 (not estimated; metadata for conditions).
    pub rho: f64,
    /// Reference tail index for condition checks.
    pub gamma_ref: f64,
    /// Covariate dimension N.
    pub n_dim: usize,
}

impl SequenceSchedule {
    pub fn new(a: f64, b: f64, c: f64, rho: f64, gamma_ref: f64, n_dim: usize) -> Result<Self> {
        if a.is_nan() || a <= 0.0 {
            return Err(Error::InvalidParameter(format!("a must be > 0, got {a}")));
        }
        if b.is_nan() || b <= 0.0 || b >= 1.0 {
            return Err(Error::InvalidParameter(format!("b must lie in (0,1), got {b}")));
        }
        if c.is_nan() || c <= 0.0 {
            return Err(Error::InvalidParameter(format!("c must be > 0, got {c}")));
        }
        if rho.is_nan() || rho >= 0.0 {
            return Err(Error::InvalidParameter(format!("rho must be < 0, got {rho}")));
        }
        if gamma_ref.is_nan() || gamma_ref <= 0.0 {
            return Err(Error::InvalidParameter(format!("gamma_ref must be > 0, got {gamma_ref}")));
        }
        Ok(SequenceSchedule { a, b, c, rho, gamma_ref, n_dim })
    }

    pub fn alpha(&self, n: usize) -> f64 {
        1.0 - (n as f64).powf(-self.a)
    }

    /// k_n = ⌊n^b⌋ clamped to 1..=n-1. The epsilon absorbs powf round-off on
    /// exact powers (1e5^0.6 must give 1000, not 999).
    pub fn k(&self, n: usize) -> usize {
        let raw = ((n as f64).powf(self.b) + 1e-9).floor() as usize;
        raw.clamp(1, n.saturating_sub(1).max(1))
    }

    pub fn h(&self, n: usize) -> f64 {
        (n as f64).powf(-self.c)
    }

    /// θ = a/(a+b-1); None at the degenerate boundary a+b = 1.
    pub fn theta(&self) -> Option<f64> {
        let d = self.a + self.b - 1.0;
        if d == 0.0 {
            None
        } else {
            Some(self.a / d)
        }
    }
}

/// One reduced inequality with its verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub name: String,
    pub satisfied: bool,
    /// The reduced inequality, with numbers substituted.
    pub detail: String,
}

/// Report of all schedule conditions, reduced to inequalities on
/// (a, b, c, γ, ρ, N).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
    pub degenerate_theta: bool,
}

impl ConditionReport {
    pub fn get(&self, name: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn is_satisfied(&self, name: &str) -> bool {
        self.get(name).map(|e| e.satisfied).unwrap_or(false)
    }
}

/// Reduces every condition to inequalities on the schedule exponents, using
/// A(t) ∝ t^ρ. Refined conditions use the exponent min(-ρ, 2γ)/(γN+1) (HG)
/// or min(-ρ, γ)/(γN+1) (Lp).
pub fn check_conditions(schedule: &SequenceSchedule) -> ConditionReport {
    let SequenceSchedule { a, b, c, rho, gamma_ref: g, n_dim } = *schedule;
    let n_f = n_dim as f64;
    let eta = g * n_f + 1.0;
    let mut entries = Vec::new();

    // (C): kernel/bandwidth/bias interplay.
    let c1 = b < 1.0 - c;
    let c2 = b < 4.0 * c;
    let bias_bound = -2.0 * rho / (1.0 - 2.0 * rho);
    let c3 = b < bias_bound;
    entries.push(ConditionEntry {
        name: "C".into(),
        satisfied: c1 && c2 && c3,
        detail: format!(
            "b < 1-c: {b} < {:.6}; b < 4c: {b} < {:.6}; b < -2rho/(1-2rho): {b} < {bias_bound:.6}",
            1.0 - c,
            4.0 * c
        ),
    });

    // (C_int): interpolation regime, n(1-α_n) → ∞.
    entries.push(ConditionEntry {
        name: "C_int".into(),
        satisfied: a < 1.0,
        detail: format!("a < 1: {a} < 1"),
    });

    // (C_high): extrapolation regime, n(1-α_n) → 0.
    let theta = schedule.theta();
    entries.push(ConditionEntry {
        name: "C_high".into(),
        satisfied: a > 1.0,
        detail: match theta {
            Some(t) => format!("a > 1: {a} > 1 (theta = {t:.6})"),
            None => format!("a > 1: {a} > 1 (theta undefined: a+b = 1)"),
        },
    });

    // Refined conditions: b <= 2a plus the exponent bound.
    let hg_exp = (-rho).min(2.0 * g) / eta;
    let lp_exp = (-rho).min(g) / eta;
    for (name, base_ok, expo) in [
        ("C_int_HG", a < 1.0, hg_exp),
        ("C_high_HG", a > 1.0, hg_exp),
        ("C_int_Lp", a < 1.0, lp_exp),
        ("C_high_Lp", a > 1.0, lp_exp),
    ] {
        let b1 = b <= 2.0 * a;
        let bound = 2.0 * a * expo;
        let b2 = b <= bound;
        entries.push(ConditionEntry {
            name: name.into(),
            satisfied: base_ok && b1 && b2,
            detail: format!(
                "base regime: {base_ok}; b <= 2a: {b} <= {:.6}; b <= 2a*min-exponent/(gamma*N+1): {b} <= {bound:.6}",
                2.0 * a
            ),
        });
    }

    ConditionReport { entries, degenerate_theta: theta.is_none() }
}

/// Regime of a risk estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileRegime {
    Intermediate,
    High,
}

/// Measure kind, serialized as "quantile", "lp:p" or "hg:p".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureKind {
    Quantile,
    LpQuantile(f64),
    HaezendonckGoovaerts(f64),
}

impl MeasureKind {
    pub fn tag(&self) -> String {
        match self {
            MeasureKind::Quantile => "quantile".into(),
            MeasureKind::LpQuantile(p) => format!("lp:{p}"),
            MeasureKind::HaezendonckGoovaerts(p) => format!("hg:{p}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "quantile" {
            return Ok(MeasureKind::Quantile);
        }
        if let Some(p) = s.strip_prefix("lp:") {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad measure tag '{s}'")))?;
            return Ok(MeasureKind::LpQuantile(p));
        }
        if let Some(p) = s.strip_prefix("hg:") {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad measure tag '{s}'")))?;
            return Ok(MeasureKind::HaezendonckGoovaerts(p));
        }
        Err(Error::InvalidParameter(format!(
            "unknown measure '{s}' (expected quantile, lp:<p> or hg:<p>)"
        )))
    }
}

impl Serialize for MeasureKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.tag())
    }
}

impl<'de> Deserialize<'de> for MeasureKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        MeasureKind::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A point risk estimate with its 95% confidence interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub kind: MeasureKind,
    pub level: f64,
    pub value: f64,
    /// Standard error of (estimate/truth - 1) under the plug-in variance.
    pub se_ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub regime: QuantileRegime,
    /// Radial part of the estimate (value = mu_cond + sigma_cond * radial).
    pub radial: f64,
    pub mu_cond: f64,
    pub sigma_cond: f64,
    pub warnings: Vec<String>,
}

/// ṽ_n = (2 + ℓ̂ ((1-α)⁻¹ - 2))⁻¹, clamped into (0, 1).
///
/// Evaluated in the algebraically identical form
/// (1-α) / (ℓ̂ + (1-α)(2 - 2ℓ̂)), which stays conditioned as α → 1 and makes
/// ṽ_n = 1-α exact at ℓ̂ = 1.
pub fn corrected_level(ell_hat: f64, alpha: f64) -> (f64, bool) {
    let u = 1.0 - alpha;
    let denom = ell_hat + u * (2.0 - 2.0 * ell_hat);
    let v = u / denom;
    if v >= 1.0 {
        (1.0 - f64::EPSILON, true)
    } else if v <= 0.0 {
        (f64::MIN_POSITIVE, true)
    } else {
        (v, false)
    }
}

fn corrected_level_warned(ell_hat: f64, alpha: f64, warnings: &mut Vec<String>) -> f64 {
    let (v, clamped) = corrected_level(ell_hat, alpha);
    if clamped {
        warnings.push(format!(
            "corrected level outside (0,1) at alpha = {alpha}, ell = {ell_hat}; v_n clamped"
        ));
    }
    v
}

fn ratio_ci(value: f64, se_ratio: f64) -> (f64, f64) {
    let down = value / (1.0 + Z_95 * se_ratio);
    let up = if Z_95 * se_ratio < 1.0 {
        value / (1.0 - Z_95 * se_ratio)
    } else {
        value.signum() * f64::INFINITY
    };
    (down.min(up), down.max(up))
}

fn push_condition_warnings(
    report: &ConditionReport,
    required: &str,
    warnings: &mut Vec<String>,
) {
    if let Some(entry) = report.get(required) {
        if !entry.satisfied {
            warnings.push(format!("condition ({}) not satisfied: {}", entry.name, entry.detail));
        }
    }
}

/// Intermediate conditional quantile: order statistic at rank ⌊n ṽ_n⌋ + 1,
/// raised to 1/η̂ and mapped by the conditional location/scale.
pub fn intermediate_quantile(
    w: &[f64],
    cond: &ConditionalMoments,
    est: &ExtremalEstimate,
    schedule: &SequenceSchedule,
) -> Result<RiskEstimate> {
    let order = OrderStatistics::new(w);
    intermediate_quantile_from_order(&order, cond, est, schedule)
}

pub fn intermediate_quantile_from_order(
    order: &OrderStatistics,
    cond: &ConditionalMoments,
    est: &ExtremalEstimate,
    schedule: &SequenceSchedule,
) -> Result<RiskEstimate> {
    let n = order.len();
    let alpha = schedule.alpha(n);
    let mut warnings = Vec::new();
    push_condition_warnings(&check_conditions(schedule), "C_int", &mut warnings);

    let v_n = corrected_level_warned(est.ell_hat, alpha, &mut warnings);
    let rank_f = (n as f64 * v_n).floor() + 1.0;
    if rank_f < 1.0 || rank_f > n as f64 {
        return Err(Error::OrderStatisticOutOfRange {
            index: rank_f as i64,
            n,
            v_n,
        });
    }
    let rank = rank_f as usize;
    let w_stat = order.descending(rank);
    if w_stat <= 0.0 {
        return Err(Error::NonPositiveOrderStatistic { index: rank, value: w_stat });
    }
    let radial = w_stat.powf(1.0 / est.eta_hat);
    let value = cond.mu_cond + cond.sigma_cond * radial;

    let n_f = schedule.n_dim as f64;
    let g = est.gamma_hat;
    let var = n_f * n_f * g.powi(4) / (n_f * g + 1.0).powi(4);
    // Theorem rate sqrt(k)/ln(1-α); the log is negative, |.| is the scaling.
    let rate = (est.k as f64).sqrt() / (1.0 - alpha).ln().abs();
    let se_ratio = var.sqrt() / rate;
    let (ci_low, ci_high) = ratio_ci(value, se_ratio);
    Ok(RiskEstimate {
        kind: MeasureKind::Quantile,
        level: alpha,
        value,
        se_ratio,
        ci_low,
        ci_high,
        regime: QuantileRegime::Intermediate,
        radial,
        mu_cond: cond.mu_cond,
        sigma_cond: cond.sigma_cond,
        warnings,
    })
}

/// High conditional quantile: the k_n+1 order statistic with the
/// extrapolation factor (k_n/(n ṽ_n))^γ̂, then 1/η̂ and location/scale.
pub fn high_quantile(
    w: &[f64],
    cond: &ConditionalMoments,
    est: &ExtremalEstimate,
    schedule: &SequenceSchedule,
) -> Result<RiskEstimate> {
    let order = OrderStatistics::new(w);
    high_quantile_from_order(&order, cond, est, schedule)
}

pub fn high_quantile_from_order(
    order: &OrderStatistics,
    cond: &ConditionalMoments,
    est: &ExtremalEstimate,
    schedule: &SequenceSchedule,
) -> Result<RiskEstimate> {
    let n = order.len();
    let k = est.k;
    if k + 1 > n {
        return Err(Error::OrderStatisticOutOfRange { index: (k + 1) as i64, n, v_n: f64::NAN });
    }
    let alpha = schedule.alpha(n);
    let mut warnings = Vec::new();
    push_condition_warnings(&check_conditions(schedule), "C_high", &mut warnings);

    let w_stat = order.descending(k + 1);
    if w_stat <= 0.0 {
        return Err(Error::NonPositiveOrderStatistic { index: k + 1, value: w_stat });
    }
    // (k/n) · (2 + ℓ̂((1-α)⁻¹ - 2)) = k/(n ṽ_n), in the stable form.
    let u = 1.0 - alpha;
    let denom = (est.ell_hat + u * (2.0 - 2.0 * est.ell_hat)) / u;
    let extrapolation = (k as f64 / n as f64) * denom;
    if extrapolation <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "extrapolation factor {extrapolation} is not positive"
        )));
    }
    let radial = (w_stat * extrapolation.powf(est.gamma_hat)).powf(1.0 / est.eta_hat);
    let value = cond.mu_cond + cond.sigma_cond * radial;

    let n_f = schedule.n_dim as f64;
    let g = est.gamma_hat;
    let eta = n_f * g + 1.0;
    let theta = schedule.theta().unwrap_or_else(|| {
        warnings.push("theta undefined (a+b = 1); using 0".into());
        0.0
    });
    let var = (g / eta - theta * n_f * g * g / (eta * eta)).powi(2);
    let rate = (k as f64).sqrt() / (k as f64 / (n as f64 * (1.0 - alpha))).ln().abs();
    let se_ratio = var.sqrt() / rate;
    let (ci_low, ci_high) = ratio_ci(value, se_ratio);
    Ok(RiskEstimate {
        kind: MeasureKind::Quantile,
        level: alpha,
        value,
        se_ratio,
        ci_low,
        ci_high,
        regime: QuantileRegime::High,
        radial,
        mu_cond: cond.mu_cond,
        sigma_cond: cond.sigma_cond,
        warnings,
    })
}
