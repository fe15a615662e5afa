//! Monte-Carlo experiment runner: repeated estimation across sample sizes,
//! empirical variance of standardized errors, confidence-interval coverage
//! counts and relative-error summaries, against the closed-form Student
//! conditional oracles.
//!
//! Replicate seeds partition the seed space deterministically (replicate j of
//! size index i uses base_seed + i*replicates + j), aggregation folds over
//! replicate index order, and identical plans produce byte-identical
//! reports.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptical::{ConditionalMoments, EllipticalModel, Family};
use crate::error::{Error, Result};
use crate::extremal::{
    estimate_extremal_with_gamma, hill_from_order_statistics, HillConfig, HillMode, Kernel,
    KernelConfig, OrderStatistics,
};
use crate::oracle::{
    numeric_hg, numeric_lp_quantile, student_conditional_quantile, student_conditional_tvar,
    ConditionalStudentDensity,
};
use crate::quantile::{
    high_quantile_from_order, intermediate_quantile_from_order, MeasureKind, QuantileRegime,
    SequenceSchedule, Z_95,
};
use crate::risk::{hg_estimate, lp_quantile_estimate};

fn default_kernel() -> Kernel {
    Kernel::Gaussian
}

/// Full description of a simulation experiment. The plan is the run's
/// configuration; reports embed it for provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub model: EllipticalModel,
    pub x: Vec<f64>,
    pub schedule: SequenceSchedule,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub measures: Vec<MeasureKind>,
    pub base_seed: u64,
    #[serde(default)]
    pub component_index: usize,
    #[serde(default = "default_kernel")]
    pub kernel: Kernel,
    /// Sizes above 1e6 take several minutes per cell; they must be opted
    /// into explicitly.
    #[serde(default)]
    pub allow_extended: bool,
}

/// One tidy result row: a single (size, measure, replicate) outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub n: usize,
    pub measure: MeasureKind,
    pub replicate: usize,
    pub seed: u64,
    pub eta_hat: Option<f64>,
    pub estimate: Option<f64>,
    pub oracle: f64,
    pub ratio: Option<f64>,
    pub standardized_error: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub hit: bool,
    pub error: Option<String>,
}

/// Aggregates for one (size, measure) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    pub n: usize,
    pub measure: MeasureKind,
    pub alpha: f64,
    pub oracle: f64,
    /// Empirical variance of the standardized errors; absent with fewer than
    /// two successful replicates.
    pub empirical_variance: Option<f64>,
    /// Number of replicates whose 95% CI covers the oracle (failures miss).
    pub coverage_count: usize,
    /// min, q1, median, q3, max of (estimate/oracle - 1) over successes.
    pub relative_error_summary: Option<[f64; 5]>,
    pub mean_estimate: Option<f64>,
    pub eta_hat_mean: Option<f64>,
    pub failed_replicates: Vec<usize>,
}

/// Full experiment output: plan (resolved config), per-cell aggregates and
/// the tidy per-replicate rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub plan: ExperimentPlan,
    pub cells: Vec<CellReport>,
    pub records: Vec<ReplicateRecord>,
}

/// Closed-form asymptotic variances of the two regimes:
/// intermediate N²γ⁴/(γN+1)⁴ and high (γ/(γN+1) - θNγ²/(γN+1)²)².
pub fn asymptotic_variance_table(
    schedule: &SequenceSchedule,
    gamma: f64,
    n_dim: usize,
) -> (f64, f64) {
    let n_f = n_dim as f64;
    let eta = gamma * n_f + 1.0;
    let intermediate = n_f * n_f * gamma.powi(4) / eta.powi(4);
    let theta = schedule.theta().unwrap_or(0.0);
    let high = (gamma / eta - theta * n_f * gamma * gamma / (eta * eta)).powi(2);
    (intermediate, high)
}

struct ReplicateOutcome {
    estimates: Vec<std::result::Result<(f64, f64, f64), String>>, // (value, ci_low, ci_high) per measure
    eta_hat: Option<f64>,
}

fn oracle_value(
    nu: f64,
    n_dim: usize,
    cond: &ConditionalMoments,
    alpha: f64,
    measure: MeasureKind,
) -> Result<f64> {
    let density = ConditionalStudentDensity { nu, n_dim, m_x: cond.m_x };
    let radial = match measure {
        MeasureKind::Quantile => student_conditional_quantile(nu, n_dim, cond.m_x, alpha)?,
        MeasureKind::LpQuantile(p) => {
            if p == 1.0 {
                student_conditional_quantile(nu, n_dim, cond.m_x, alpha)?
            } else {
                numeric_lp_quantile(&density, alpha, p)?
            }
        }
        MeasureKind::HaezendonckGoovaerts(p) => {
            if p == 1.0 {
                student_conditional_tvar(nu, n_dim, cond.m_x, alpha)?
            } else {
                numeric_hg(&density, alpha, p)?
            }
        }
    };
    Ok(cond.mu_cond + cond.sigma_cond * radial)
}

/// Runs the plan. Replicate-level estimator failures are recorded as misses,
/// never dropped; the report lists them.
pub fn run(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    if plan.replicates < 1 {
        return Err(Error::InvalidParameter("replicates must be >= 1".into()));
    }
    if plan.sizes.is_empty() || plan.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("sizes must be strictly increasing".into()));
    }
    if !plan.allow_extended {
        if let Some(&n) = plan.sizes.iter().find(|&&n| n > 1_000_000) {
            return Err(Error::InvalidParameter(format!(
                "size {n} exceeds the desk-scale cap of 1e6; set allow_extended \
                 (runtime grows to several minutes per cell)"
            )));
        }
    }
    if plan.measures.is_empty() {
        return Err(Error::InvalidParameter("at least one measure is required".into()));
    }
    let nu = match plan.model.family() {
        Family::Student { nu } => *nu,
        other => return Err(Error::NoOracle(other.name().into())),
    };
    let n_dim = plan.model.dim() - 1;
    if plan.x.len() != n_dim {
        return Err(Error::DimensionMismatch(format!(
            "x has length {}, expected N = {n_dim}",
            plan.x.len()
        )));
    }
    if plan.schedule.n_dim != n_dim {
        return Err(Error::DimensionMismatch(format!(
            "schedule N = {} does not match model N = {n_dim}",
            plan.schedule.n_dim
        )));
    }
    let cond = plan.model.conditional_moments(&plan.x)?;
    let x_model = plan.model.x_block(n_dim)?;

    let mut cells = Vec::new();
    let mut records = Vec::new();

    for (size_idx, &n) in plan.sizes.iter().enumerate() {
        let alpha = plan.schedule.alpha(n);
        let k = plan.schedule.k(n);
        let h = plan.schedule.h(n);
        let regime = if plan.schedule.a > 1.0 {
            QuantileRegime::High
        } else {
            QuantileRegime::Intermediate
        };
        let oracles: Vec<f64> = plan
            .measures
            .iter()
            .map(|&m| oracle_value(nu, n_dim, &cond, alpha, m))
            .collect::<Result<_>>()?;

        let rate = match regime {
            QuantileRegime::High => {
                (k as f64).sqrt() / (k as f64 / (n as f64 * (1.0 - alpha))).ln().abs()
            }
            QuantileRegime::Intermediate => (k as f64).sqrt() / (1.0 - alpha).ln().abs(),
        };

        // Parallel over replicates; collect preserves index order and the
        // fold below is sequential, so aggregation is deterministic.
        let outcomes: Vec<ReplicateOutcome> = (0..plan.replicates)
            .into_par_iter()
            .map(|rep| {
                let seed =
                    plan.base_seed + (size_idx * plan.replicates + rep) as u64;
                run_replicate(plan, &x_model, &cond, n, k, h, seed, regime)
            })
            .collect();

        for (m_idx, &measure) in plan.measures.iter().enumerate() {
            let oracle = oracles[m_idx];
            let mut std_errors = Vec::new();
            let mut rel_errors = Vec::new();
            let mut estimates = Vec::new();
            let mut coverage = 0usize;
            let mut failed = Vec::new();
            let mut eta_hats = Vec::new();
            for (rep, outcome) in outcomes.iter().enumerate() {
                let seed = plan.base_seed + (size_idx * plan.replicates + rep) as u64;
                if let Some(e) = outcome.eta_hat {
                    if m_idx == 0 {
                        eta_hats.push(e);
                    }
                }
                match &outcome.estimates[m_idx] {
                    Ok((value, ci_low, ci_high)) => {
                        let ratio = value / oracle;
                        let std_err = rate * (ratio - 1.0);
                        let hit = *ci_low <= oracle && oracle <= *ci_high;
                        if hit {
                            coverage += 1;
                        }
                        std_errors.push(std_err);
                        rel_errors.push(ratio - 1.0);
                        estimates.push(*value);
                        records.push(ReplicateRecord {
                            n,
                            measure,
                            replicate: rep,
                            seed,
                            eta_hat: outcome.eta_hat,
                            estimate: Some(*value),
                            oracle,
                            ratio: Some(ratio),
                            standardized_error: Some(std_err),
                            ci_low: Some(*ci_low),
                            ci_high: Some(*ci_high),
                            hit,
                            error: None,
                        });
                    }
                    Err(msg) => {
                        failed.push(rep);
                        records.push(ReplicateRecord {
                            n,
                            measure,
                            replicate: rep,
                            seed,
                            eta_hat: outcome.eta_hat,
                            estimate: None,
                            oracle,
                            ratio: None,
                            standardized_error: None,
                            ci_low: None,
                            ci_high: None,
                            hit: false,
                            error: Some(msg.clone()),
                        });
                    }
                }
            }
            let empirical_variance = if std_errors.len() >= 2 {
                let mean = std_errors.iter().sum::<f64>() / std_errors.len() as f64;
                Some(
                    std_errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
                        / (std_errors.len() - 1) as f64,
                )
            } else {
                None
            };
            let relative_error_summary = five_number_summary(&mut rel_errors);
            let mean_estimate = if estimates.is_empty() {
                None
            } else {
                Some(estimates.iter().sum::<f64>() / estimates.len() as f64)
            };
            let eta_hat_mean = if eta_hats.is_empty() {
                None
            } else {
                Some(eta_hats.iter().sum::<f64>() / eta_hats.len() as f64)
            };
            cells.push(CellReport {
                n,
                measure,
                alpha,
                oracle,
                empirical_variance,
                coverage_count: coverage,
                relative_error_summary,
                mean_estimate,
                eta_hat_mean,
                failed_replicates: failed,
            });
        }
    }

    Ok(ExperimentReport { plan: plan.clone(), cells, records })
}

#[allow(clippy::too_many_arguments)]
fn run_replicate(
    plan: &ExperimentPlan,
    x_model: &EllipticalModel,
    cond: &ConditionalMoments,
    n: usize,
    k: usize,
    h: f64,
    seed: u64,
    regime: QuantileRegime,
) -> ReplicateOutcome {
    let attempt = || -> Result<(OrderStatistics, crate::extremal::ExtremalEstimate)> {
        let samples = plan.model.sample(n, seed)?;
        let (x_samples, _y) = samples.split_last_column()?;
        let w = x_model.whitened_component(&x_samples, plan.component_index)?;
        let m_values = x_model.mahalanobis_distances(&x_samples)?;
        let order = OrderStatistics::new(&w);
        let hill_cfg =
            HillConfig { k, component_index: plan.component_index, mode: HillMode::Component };
        let gamma_hat = hill_from_order_statistics(&order, k)?;
        let est = estimate_extremal_with_gamma(
            gamma_hat,
            &m_values,
            cond.m_x,
            &hill_cfg,
            &KernelConfig { bandwidth: h, kernel: plan.kernel },
            plan.schedule.n_dim,
            n,
        )?;
        Ok((order, est))
    };
    match attempt() {
        Ok((order, est)) => {
            let base = match regime {
                QuantileRegime::High => {
                    high_quantile_from_order(&order, cond, &est, &plan.schedule)
                }
                QuantileRegime::Intermediate => {
                    intermediate_quantile_from_order(&order, cond, &est, &plan.schedule)
                }
            };
            let estimates = plan
                .measures
                .iter()
                .map(|&measure| {
                    let converted = match (&base, measure) {
                        (Ok(b), MeasureKind::Quantile) => Ok(b.clone()),
                        (Ok(b), MeasureKind::LpQuantile(p)) => {
                            lp_quantile_estimate(b, &est, p, plan.schedule.n_dim)
                        }
                        (Ok(b), MeasureKind::HaezendonckGoovaerts(p)) => {
                            hg_estimate(b, &est, p, plan.schedule.n_dim)
                        }
                        (Err(e), _) => Err(Error::InvalidParameter(e.to_string())),
                    };
                    converted
                        .map(|r| (r.value, r.ci_low, r.ci_high))
                        .map_err(|e| e.to_string())
                })
                .collect();
            ReplicateOutcome { estimates, eta_hat: Some(est.eta_hat) }
        }
        Err(e) => {
            let msg = e.to_string();
            ReplicateOutcome {
                estimates: plan.measures.iter().map(|_| Err(msg.clone())).collect(),
                eta_hat: None,
            }
        }
    }
}

fn five_number_summary(values: &mut [f64]) -> Option<[f64; 5]> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let q = |p: f64| -> f64 {
        let pos = p * (values.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        values[lo] * (1.0 - frac) + values[hi] * frac
    };
    Some([values[0], q(0.25), q(0.5), q(0.75), values[values.len() - 1]])
}

impl ExperimentReport {
    /// Tidy CSV rows, one per (n, measure, replicate).
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "n",
            "measure",
            "replicate",
            "estimate",
            "oracle",
            "ratio",
            "standardized_error",
            "ci_low",
            "ci_high",
            "hit",
        ])?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.n.to_string(),
                r.measure.tag(),
                r.replicate.to_string(),
                fmt(r.estimate),
                format!("{:.17e}", r.oracle),
                fmt(r.ratio),
                fmt(r.standardized_error),
                fmt(r.ci_low),
                fmt(r.ci_high),
                (r.hit as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn cell(&self, n: usize, measure: &MeasureKind) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.n == n && c.measure.tag() == measure.tag())
    }
}

/// 95% coverage hit test used by the cells: |standardized error| against the
/// plug-in critical value. Exposed for the acceptance suite's asymptotic
/// checks.
pub fn plug_in_critical_ratio(se_ratio: f64) -> f64 {
    Z_95 * se_ratio
}
