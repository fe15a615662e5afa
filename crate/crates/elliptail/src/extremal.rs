//! Tail-index and extremal-parameter estimation.
//!
//! The tail index γ comes from the Hill estimator on a whitened covariate
//! component (or the Mahalanobis norm); η = Nγ + 1 is an affine transform of
//! it. The generator value c_N g_N(M(x)) is a kernel density estimate of the
//! Mahalanobis-distance density with the radial prefactor removed, and ℓ(x)
//! combines both. Asymptotic variances V1/V2 follow the delta method; which
//! one applies depends on whether k_n or n·h_n grows faster.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{digamma, gamma as gamma_fn, ln_gamma};

/// Which statistic feeds the Hill estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HillMode {
    /// One whitened covariate component (the default; unused data but clean
    /// asymptotics).
    Component,
    /// The Mahalanobis norm sqrt(M(X)); uses all coordinates and is positive
    /// by construction.
    MahalanobisNorm,
}

/// Hill estimator configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillConfig {
    /// Number of upper order statistics k_n, 1 <= k <= n-1.
    pub k: usize,
    /// Whitened coordinate used in `Component` mode.
    pub component_index: usize,
    pub mode: HillMode,
}

impl HillConfig {
    pub fn new(k: usize) -> Self {
        HillConfig { k, component_index: 0, mode: HillMode::Component }
    }
}

/// Smoothing kernel for the generator estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// Gaussian p.d.f. Not compactly supported, but the experimental default.
    Gaussian,
    Epanechnikov,
    Uniform,
}

impl Kernel {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Kernel::Gaussian => {
                (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
            Kernel::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            Kernel::Uniform => {
                if u.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }

    /// ∫ K(u)² du, the roughness constant entering V2.
    pub fn l2_norm_sq(&self) -> f64 {
        match self {
            Kernel::Gaussian => 0.5 / std::f64::consts::PI.sqrt(),
            Kernel::Epanechnikov => 0.6,
            Kernel::Uniform => 0.5,
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self, Kernel::Gaussian)
    }
}

/// Kernel density configuration: bandwidth h_n and kernel choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub bandwidth: f64,
    pub kernel: Kernel,
}

impl KernelConfig {
    pub fn gaussian(bandwidth: f64) -> Self {
        KernelConfig { bandwidth, kernel: Kernel::Gaussian }
    }

    fn validate(&self) -> Result<()> {
        if self.bandwidth > 0.0 && self.bandwidth.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "bandwidth must be > 0, got {}",
                self.bandwidth
            )))
        }
    }
}

/// Which joint asymptotic regime applies to (ℓ̂, η̂).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceRegime {
    /// n·h_n grows faster than k_n: rate sqrt(k_n), variance V1.
    NhnDominates,
    /// k_n grows faster than n·h_n: rate sqrt(n·h_n), variance V2.
    KnDominates,
    /// n·h_n = k_n exactly; both variances are reported, neither is chosen.
    Ambiguous,
}

/// Point estimates of the extremal parameters together with their asymptotic
/// variances and the sequences that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalEstimate {
    pub gamma_hat: f64,
    pub eta_hat: f64,
    pub g_hat: f64,
    pub ell_hat: f64,
    /// N²γ̂², the asymptotic variance of sqrt(k)(η̂ - η).
    pub var_eta: f64,
    /// V1 of the joint law (rate sqrt(k_n)).
    pub var_ell_regime1: f64,
    /// V2 of the joint law (rate sqrt(n h_n)).
    pub var_ell_regime2: f64,
    pub regime: VarianceRegime,
    pub se_eta: f64,
    pub se_ell: f64,
    pub k: usize,
    pub h: f64,
    pub n: usize,
}

/// Order statistics of a sample, sorted descending. One-based access mirrors
/// the W_[i] notation.
#[derive(Debug, Clone)]
pub struct OrderStatistics {
    sorted: Vec<f64>,
}

impl OrderStatistics {
    pub fn new(w: &[f64]) -> Self {
        let mut sorted = w.to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        OrderStatistics { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// W_[rank] with rank in 1..=n (descending).
    pub fn descending(&self, rank: usize) -> f64 {
        self.sorted[rank - 1]
    }
}

/// Hill estimate from pre-sorted order statistics.
pub fn hill_from_order_statistics(order: &OrderStatistics, k: usize) -> Result<f64> {
    let n = order.len();
    if k < 1 || k > n.saturating_sub(1) {
        return Err(Error::InvalidParameter(format!(
            "Hill k = {k} out of range 1..={} for n = {n}",
            n.saturating_sub(1)
        )));
    }
    let threshold = order.descending(k + 1);
    if threshold <= 0.0 {
        return Err(Error::NonPositiveOrderStatistic { index: k + 1, value: threshold });
    }
    let sum: f64 = (1..=k).map(|i| (order.descending(i) / threshold).ln()).sum();
    Ok(sum / k as f64)
}

/// Hill estimator: mean of log-ratios of the top k order statistics to the
/// (k+1)-th. Negative entries are legal as long as the top k+1 are positive.
pub fn hill(w: &[f64], config: &HillConfig) -> Result<f64> {
    hill_from_order_statistics(&OrderStatistics::new(w), config.k)
}

/// η̂ = N·γ̂ + 1 with its standard error sqrt(N²γ̂²/k).
pub fn estimate_eta(w: &[f64], config: &HillConfig, n_dim: usize) -> Result<(f64, f64)> {
    let gamma_hat = hill(w, config)?;
    let eta = n_dim as f64 * gamma_hat + 1.0;
    let se = (n_dim as f64 * gamma_hat).abs() / (config.k as f64).sqrt();
    Ok((eta, se))
}

/// Raw kernel density estimate (1/(n h)) Σ K((t - m_i)/h).
pub fn kernel_density(m_values: &[f64], t: f64, config: &KernelConfig) -> Result<f64> {
    config.validate()?;
    if m_values.is_empty() {
        return Err(Error::InvalidParameter("empty sample for kernel density".into()));
    }
    let h = config.bandwidth;
    let sum: f64 = m_values.iter().map(|m| config.kernel.eval((t - m) / h)).sum();
    Ok(sum / (m_values.len() as f64 * h))
}

/// Estimate of c_N g_N(M(x)): the Mahalanobis-distance density estimate at
/// m_x with the radial volume prefactor divided out.
pub fn kernel_generator_estimate(
    m_values: &[f64],
    m_x: f64,
    config: &KernelConfig,
    n_dim: usize,
) -> Result<f64> {
    if m_x <= 0.0 && n_dim >= 3 {
        return Err(Error::InvalidParameter(format!(
            "M(x) = {m_x} makes the prefactor M(x)^(1-N/2) singular for N = {n_dim} >= 3"
        )));
    }
    if m_x < 0.0 {
        return Err(Error::InvalidParameter(format!("M(x) must be >= 0, got {m_x}")));
    }
    let density = kernel_density(m_values, m_x, config)?;
    let n_f = n_dim as f64;
    let prefactor =
        m_x.powf(1.0 - n_f / 2.0) * gamma_fn(n_f / 2.0) / std::f64::consts::PI.powf(n_f / 2.0);
    Ok(prefactor * density)
}

/// ℓ̂(x) from the tail index and the generator estimate:
/// Γ((N+γ⁻¹+1)/2)/Γ((γ⁻¹+1)/2) · γ⁻¹ π^(-N/2) / ((N+γ⁻¹) ĝ).
pub fn estimate_ell(gamma_hat: f64, g_hat: f64, n_dim: usize) -> Result<f64> {
    if gamma_hat <= 0.0 {
        return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma_hat}")));
    }
    if g_hat <= 0.0 {
        return Err(Error::InvalidParameter(format!("g must be > 0, got {g_hat}")));
    }
    let n_f = n_dim as f64;
    let inv_gamma = 1.0 / gamma_hat;
    let log_ratio = ln_gamma((n_f + inv_gamma + 1.0) / 2.0) - ln_gamma((inv_gamma + 1.0) / 2.0);
    let value = log_ratio.exp() * inv_gamma * std::f64::consts::PI.powf(-n_f / 2.0)
        / ((n_f + inv_gamma) * g_hat);
    Ok(value)
}

/// V1: asymptotic variance of sqrt(k_n)(ℓ̂ - ℓ) when k_n = o(n h_n).
/// Delta-method form u'(γ)²γ² with u the ℓ formula at fixed g.
pub fn variance_v1(gamma: f64, g: f64, n_dim: usize) -> f64 {
    let n_f = n_dim as f64;
    let inv_gamma = 1.0 / gamma;
    let ratio =
        (ln_gamma((n_f + inv_gamma + 1.0) / 2.0) - ln_gamma((inv_gamma + 1.0) / 2.0)).exp();
    let eta = n_f * gamma + 1.0;
    let bracket = (digamma((inv_gamma + 1.0) / 2.0) - digamma((n_f + inv_gamma + 1.0) / 2.0))
        / (2.0 * gamma * gamma * eta)
        - n_f / (eta * eta);
    std::f64::consts::PI.powf(-n_f) * gamma * gamma / (g * g) * ratio * ratio * bracket * bracket
}

/// V2: asymptotic variance of sqrt(n h_n)(ℓ̂ - ℓ) when n h_n = o(k_n).
pub fn variance_v2(gamma: f64, g: f64, n_dim: usize, m_x: f64, kernel: Kernel) -> f64 {
    let n_f = n_dim as f64;
    let inv_gamma = 1.0 / gamma;
    let pi = std::f64::consts::PI;
    let ratio =
        (ln_gamma((n_f + inv_gamma + 1.0) / 2.0) - ln_gamma((inv_gamma + 1.0) / 2.0)).exp();
    let front = gamma_fn(n_f / 2.0); // Γ(N/2)
    let prefactor = front / (m_x.powf(n_f / 2.0 - 1.0) * pi.powf(n_f / 2.0));
    let inner = ratio * inv_gamma * pi.powf(-n_f / 2.0) / ((n_f + inv_gamma) * g * g);
    prefactor * g * kernel.l2_norm_sq() * inner * inner
}

/// Full extremal-parameter estimation from a Hill statistic vector and the
/// sample Mahalanobis distances.
pub fn estimate_extremal(
    w: &[f64],
    m_values: &[f64],
    m_x: f64,
    hill_config: &HillConfig,
    kernel_config: &KernelConfig,
    n_dim: usize,
) -> Result<ExtremalEstimate> {
    let n = w.len();
    let order = OrderStatistics::new(w);
    let gamma_hat = hill_from_order_statistics(&order, hill_config.k)?;
    estimate_extremal_with_gamma(gamma_hat, m_values, m_x, hill_config, kernel_config, n_dim, n)
}

/// Same as [`estimate_extremal`] but with a precomputed Hill estimate
/// (avoids re-sorting when the caller already holds order statistics).
pub fn estimate_extremal_with_gamma(
    gamma_hat: f64,
    m_values: &[f64],
    m_x: f64,
    hill_config: &HillConfig,
    kernel_config: &KernelConfig,
    n_dim: usize,
    n: usize,
) -> Result<ExtremalEstimate> {
    if gamma_hat <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Hill estimate {gamma_hat} is not positive; the tail index is not identified"
        )));
    }
    let n_f = n_dim as f64;
    let k = hill_config.k;
    let h = kernel_config.bandwidth;
    let g_hat = kernel_generator_estimate(m_values, m_x, kernel_config, n_dim)?;
    if g_hat <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "generator estimate {g_hat} is not positive at M(x) = {m_x}; \
             widen the bandwidth or check the evaluation point"
        )));
    }
    let ell_hat = estimate_ell(gamma_hat, g_hat, n_dim)?;
    let eta_hat = n_f * gamma_hat + 1.0;
    let var_eta = (n_f * gamma_hat).powi(2);
    let v1 = variance_v1(gamma_hat, g_hat, n_dim);
    let v2 = variance_v2(gamma_hat, g_hat, n_dim, m_x, kernel_config.kernel);
    let nh = n as f64 * h;
    let kf = k as f64;
    let (regime, se_ell) = if nh > kf {
        (VarianceRegime::NhnDominates, (v1 / kf).sqrt())
    } else if nh < kf {
        (VarianceRegime::KnDominates, (v2 / nh).sqrt())
    } else {
        (VarianceRegime::Ambiguous, (v1 / kf).sqrt().max((v2 / nh).sqrt()))
    };
    Ok(ExtremalEstimate {
        gamma_hat,
        eta_hat,
        g_hat,
        ell_hat,
        var_eta,
        var_ell_regime1: v1,
        var_ell_regime2: v2,
        regime,
        se_eta: (var_eta / kf).sqrt(),
        se_ell,
        k,
        h,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Exact Pareto(γ) quantile grid w_i = (i/(n+1))^(-γ), i = 1..n.
    fn pareto_grid(gamma: f64, n: usize) -> Vec<f64> {
        (1..=n).map(|i| (i as f64 / (n + 1) as f64).powf(-gamma)).collect()
    }

    #[test]
    fn hill_on_pareto_quantile_grid() {
        let n = 10_000;
        let k = (n as f64).powf(0.6).floor() as usize;
        let est = hill(&pareto_grid(0.5, n), &HillConfig::new(k)).unwrap();
        assert!((est - 0.5).abs() < 0.05, "hill = {est}");
    }

    #[test]
    fn hill_constant_vector_is_zero() {
        let w = vec![3.0; 100];
        assert_eq!(hill(&w, &HillConfig::new(10)).unwrap(), 0.0);
    }

    #[test]
    fn hill_rejects_nonpositive_threshold() {
        let mut w = vec![-1.0; 50];
        w[0] = 5.0;
        w[1] = 4.0;
        let err = hill(&w, &HillConfig::new(10)).unwrap_err();
        assert!(matches!(err, crate::error::Error::NonPositiveOrderStatistic { .. }));
        assert!(err.to_string().contains("smaller k"));
    }

    #[test]
    fn hill_rejects_out_of_range_k() {
        let w = vec![1.0, 2.0, 3.0];
        assert!(hill(&w, &HillConfig::new(0)).is_err());
        assert!(hill(&w, &HillConfig::new(3)).is_err());
    }

    #[test]
    fn hill_monotone_consistency_on_grids() {
        let mut errors = Vec::new();
        for &n in &[1_000usize, 10_000, 100_000] {
            let k = (n as f64).powf(0.6).floor() as usize;
            let est = hill(&pareto_grid(0.5, n), &HillConfig::new(k)).unwrap();
            errors.push((est - 0.5).abs());
        }
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "errors = {errors:?}");
    }

    #[test]
    fn eta_is_affine_in_hill() {
        // Hill result 0.5 with N = 3 gives eta = 2.5; grid approximates it.
        let n = 100_000;
        let w = pareto_grid(0.5, n);
        let k = (n as f64).powf(0.6).floor() as usize;
        let cfg = HillConfig::new(k);
        let gamma_hat = hill(&w, &cfg).unwrap();
        let (eta, se) = estimate_eta(&w, &cfg, 3).unwrap();
        assert_relative_eq!(eta, 3.0 * gamma_hat + 1.0, epsilon = 1e-15);
        assert_relative_eq!(se, 3.0 * gamma_hat / (k as f64).sqrt(), epsilon = 1e-15);
        // Degenerate N = 0: eta = 1 regardless of the Hill value.
        let (eta0, _) = estimate_eta(&w, &cfg, 0).unwrap();
        assert_eq!(eta0, 1.0);
    }

    #[test]
    fn kernel_empty_window_is_zero_for_compact_kernels() {
        let m_values = vec![10.0, 11.0, 12.0];
        for kernel in [Kernel::Epanechnikov, Kernel::Uniform] {
            let cfg = KernelConfig { bandwidth: 0.5, kernel };
            let v = kernel_generator_estimate(&m_values, 1.0, &cfg, 3).unwrap();
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn kernel_duplicated_sample_is_invariant() {
        let m_values: Vec<f64> = (0..200).map(|i| 0.5 + (i as f64) * 0.01).collect();
        let doubled: Vec<f64> = m_values.iter().chain(m_values.iter()).copied().collect();
        let cfg = KernelConfig::gaussian(0.3);
        let a = kernel_generator_estimate(&m_values, 1.0, &cfg, 3).unwrap();
        let b = kernel_generator_estimate(&doubled, 1.0, &cfg, 3).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn kernel_rejects_singular_prefactor() {
        let m_values = vec![1.0, 2.0];
        let cfg = KernelConfig::gaussian(0.5);
        assert!(kernel_generator_estimate(&m_values, 0.0, &cfg, 3).is_err());
        // N = 2 keeps the prefactor finite at zero.
        assert!(kernel_generator_estimate(&m_values, 0.0, &cfg, 2).is_ok());
    }

    #[test]
    fn ell_homogeneity_in_g() {
        // Exact for power-of-two scalings, 1e-12 otherwise.
        let base = estimate_ell(0.37, 0.05, 3).unwrap();
        let scaled = estimate_ell(0.37, 0.05 * 4.0, 3).unwrap();
        assert_eq!(scaled, base / 4.0);
        let scaled = estimate_ell(0.37, 0.05 * 1.7, 3).unwrap();
        assert_relative_eq!(scaled, base / 1.7, max_relative = 1e-12);
    }

    #[test]
    fn ell_diverges_at_the_gaussian_edge() {
        // The Pareto-type formula is only defined for γ > 0; plugging the
        // γ-independent Gaussian generator makes it blow up like
        // γ^(-N/2) e^(M/2) rather than reach the Gaussian (η, ℓ) = (1, 1)
        // row, which comes from a separate derivation. Pin the rate.
        let n_dim = 3;
        let m_x = 1.0;
        let g_gauss = (2.0 * std::f64::consts::PI).powf(-(n_dim as f64) / 2.0)
            * (-m_x / 2.0_f64).exp();
        for &gamma in &[1e-2, 1e-3, 1e-4] {
            let ell = estimate_ell(gamma, g_gauss, n_dim).unwrap();
            let predicted = gamma.powf(-1.5) * (m_x / 2.0_f64).exp();
            assert!(
                (ell / predicted - 1.0).abs() < 0.05,
                "gamma = {gamma}: ell = {ell}, predicted = {predicted}"
            );
        }
    }

    #[test]
    fn variance_v1_vanishes_without_covariates() {
        assert_relative_eq!(variance_v1(0.5, 0.2127, 0), 0.0, epsilon = 1e-30);
    }

    #[test]
    fn variance_v1_matches_finite_difference_delta_method() {
        // V1 = u'(γ)² γ² with u(γ) the ℓ formula at fixed g; central
        // differences at step 1e-6 give an independent route to u'.
        let (gamma_v, g, n_dim) = (0.5, 0.2127, 3);
        let step = 1e-6;
        let up = estimate_ell(gamma_v + step, g, n_dim).unwrap();
        let dn = estimate_ell(gamma_v - step, g, n_dim).unwrap();
        let deriv = (up - dn) / (2.0 * step);
        let fd = deriv * deriv * gamma_v * gamma_v;
        assert_relative_eq!(variance_v1(gamma_v, g, n_dim), fd, max_relative = 1e-6);
    }

    #[test]
    fn digamma_spot_value() {
        assert_relative_eq!(digamma(1.0), -0.5772156649, epsilon = 1e-9);
    }

    #[test]
    fn regime_selection() {
        let m_values: Vec<f64> = (0..1000).map(|i| 0.1 + i as f64 * 0.005).collect();
        let w = pareto_grid(0.5, 1000);
        // n h = 1000*0.5 = 500 > k = 63.
        let est = estimate_extremal(
            &w,
            &m_values,
            1.0,
            &HillConfig::new(63),
            &KernelConfig::gaussian(0.5),
            3,
        )
        .unwrap();
        assert_eq!(est.regime, VarianceRegime::NhnDominates);
        assert_relative_eq!(est.se_ell, (est.var_ell_regime1 / 63.0).sqrt(), epsilon = 1e-15);
        // n h = 1000*0.01 = 10 < k = 63.
        let est = estimate_extremal(
            &w,
            &m_values,
            1.0,
            &HillConfig::new(63),
            &KernelConfig::gaussian(0.01),
            3,
        )
        .unwrap();
        assert_eq!(est.regime, VarianceRegime::KnDominates);
        assert_relative_eq!(est.se_ell, (est.var_ell_regime2 / 10.0).sqrt(), epsilon = 1e-12);
    }
}
