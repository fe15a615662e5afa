//! Extreme conditional quantiles, Lp-quantiles and Haezendonck-Goovaerts
//! risk measures for heavy-tailed consistent elliptical random vectors.
//!
//! The estimation route: a Hill estimate of the tail index γ on a whitened
//! covariate component gives η̂ = Nγ̂ + 1; a kernel estimate of the elliptical
//! generator at the covariate's Mahalanobis distance gives ℓ̂(x); together
//! they turn an unconditional order statistic (with a Weissman-style
//! extrapolation factor in the high regime) into a conditional quantile
//! estimate with an asymptotic confidence interval. Lp-quantile and
//! Haezendonck-Goovaerts estimates follow by scaling the radial part with
//! the proportionality factors f_L and f_H evaluated at the conditional tail
//! index.
//!
//! Modules:
//! - [`elliptical`]: models, conditional moments, Mahalanobis distances,
//!   sampling.
//! - [`extremal`]: Hill/η̂/ĝ/ℓ̂ estimators and their asymptotic variances.
//! - [`quantile`]: sequence schedules, validity conditions, intermediate and
//!   high quantile estimators.
//! - [`risk`]: f_L/f_H conversion factors and the derived risk estimates.
//! - [`oracle`]: closed-form and brute-force ground truth for validation.
//! - [`experiment`]: Monte-Carlo replication harness.
//! - [`data`]: CSV ingestion, moment estimation, the real-data pipeline.

pub mod data;
pub mod elliptical;
pub mod error;
pub mod experiment;
pub mod extremal;
pub mod numeric;
pub mod oracle;
pub mod quantile;
pub mod risk;
pub mod special;

pub use elliptical::{ConditionalMoments, EllipticalModel, Family, SampleMatrix};
pub use error::{Error, Result};
pub use extremal::{ExtremalEstimate, HillConfig, Kernel, KernelConfig};
pub use quantile::{MeasureKind, RiskEstimate, SequenceSchedule};
