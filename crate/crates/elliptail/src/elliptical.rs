//! Consistent elliptical random vectors: model specification, conditional
//! moments, Mahalanobis distances and sampling.
//!
//! A `(ξ, d)`-elliptical vector has the stochastic representation
//! `Z = μ + χ_d ξ Λ U^(d)` with a mixing variable ξ shared across dimensions,
//! so marginals and conditionals stay in the family. Gaussian and Student
//! vectors are sampled through the classical normal/chi mixing form, which is
//! distributionally identical to the representation above.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator family of a consistent elliptical distribution.
///
/// `Ugm` is the uniform Gaussian mixture (mixture of centered Gaussians with
/// mixing weights over inverse scales); `Slash` is the slash family with
/// positive exponent `a`. Both appear only in the theoretical-coefficient
/// oracle; sampling supports Gaussian and Student.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Student { nu: f64 },
    Ugm { weights: Vec<f64>, rates: Vec<f64> },
    Slash { a: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Student { .. } => "student",
            Family::Ugm { .. } => "ugm",
            Family::Slash { .. } => "slash",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Family::Gaussian => Ok(()),
            Family::Student { nu } => {
                if *nu > 0.0 && nu.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("Student nu must be > 0, got {nu}")))
                }
            }
            Family::Slash { a } => {
                if *a > 0.0 && a.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("Slash a must be > 0, got {a}")))
                }
            }
            Family::Ugm { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    return Err(Error::InvalidParameter(
                        "UGM weights and rates must be non-empty and of equal length".into(),
                    ));
                }
                if weights.iter().any(|w| *w < 0.0) {
                    return Err(Error::InvalidParameter("UGM weights must be >= 0".into()));
                }
                if rates.iter().any(|t| *t <= 0.0) {
                    return Err(Error::InvalidParameter("UGM rates must be > 0".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "UGM weights must sum to 1 within 1e-12, got {total}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Serde-facing model description (plain vectors, as in the JSON interface).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub family: Family,
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
}

/// A `(ξ, d)`-elliptical model with location `mu` and SPD scale `sigma`.
///
/// The lower Cholesky factor of `sigma` is computed at construction; a failed
/// factorization rejects the model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct EllipticalModel {
    family: Family,
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    chol_lower: DMatrix<f64>,
}

impl TryFrom<ModelSpec> for EllipticalModel {
    type Error = Error;
    fn try_from(spec: ModelSpec) -> Result<Self> {
        let d = spec.mu.len();
        if spec.sigma.len() != d || spec.sigma.iter().any(|row| row.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "sigma must be {d}x{d} to match mu of length {d}"
            )));
        }
        let sigma = DMatrix::from_fn(d, d, |i, j| spec.sigma[i][j]);
        EllipticalModel::new(spec.family, DVector::from_vec(spec.mu), sigma)
    }
}

impl From<EllipticalModel> for ModelSpec {
    fn from(m: EllipticalModel) -> ModelSpec {
        let d = m.dim();
        ModelSpec {
            family: m.family,
            mu: m.mu.iter().copied().collect(),
            sigma: (0..d).map(|i| (0..d).map(|j| m.sigma[(i, j)]).collect()).collect(),
        }
    }
}

impl EllipticalModel {
    pub fn new(family: Family, mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        family.validate()?;
        let d = mu.len();
        if sigma.nrows() != d || sigma.ncols() != d || d == 0 {
            return Err(Error::DimensionMismatch(format!(
                "sigma is {}x{}, mu has length {d}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if (&sigma - sigma.transpose()).amax() > 1e-10 * sigma.amax().max(1.0) {
            return Err(Error::InvalidParameter("sigma must be symmetric".into()));
        }
        let chol = nalgebra::Cholesky::new(sigma.clone()).ok_or(Error::NotPositiveDefinite)?;
        Ok(EllipticalModel { family, mu, sigma, chol_lower: chol.unpack() })
    }

    /// Convenience constructor from plain slices.
    pub fn from_parts(family: Family, mu: &[f64], sigma_rows: &[Vec<f64>]) -> Result<Self> {
        let spec =
            ModelSpec { family, mu: mu.to_vec(), sigma: sigma_rows.to_vec() };
        Self::try_from(spec)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Restriction to the first `n_dim` coordinates (the covariate block).
    pub fn x_block(&self, n_dim: usize) -> Result<EllipticalModel> {
        if n_dim == 0 || n_dim > self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot restrict a {}-dimensional model to {n_dim} coordinates",
                self.dim()
            )));
        }
        EllipticalModel::new(
            self.family.clone(),
            self.mu.rows(0, n_dim).into_owned(),
            self.sigma.view((0, 0), (n_dim, n_dim)).into_owned(),
        )
    }

    /// Mahalanobis distance M(x) = (x-μ)ᵀ Σ⁻¹ (x-μ), evaluated through the
    /// Cholesky factor. The model dimension must match `x`.
    pub fn mahalanobis(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "x has length {}, model dimension is {}",
                x.len(),
                self.dim()
            )));
        }
        let diff = DVector::from_iterator(x.len(), x.iter().zip(self.mu.iter()).map(|(a, b)| a - b));
        let w = self
            .chol_lower
            .solve_lower_triangular(&diff)
            .ok_or(Error::NotPositiveDefinite)?;
        Ok(w.norm_squared())
    }

    /// Conditional moments of the last coordinate given the first N = d-1.
    pub fn conditional_moments(&self, x: &[f64]) -> Result<ConditionalMoments> {
        let d = self.dim();
        if d < 2 {
            return Err(Error::DimensionMismatch(
                "conditional moments need dimension d = N+1 >= 2".into(),
            ));
        }
        let n_dim = d - 1;
        if x.len() != n_dim {
            return Err(Error::DimensionMismatch(format!(
                "x has length {}, expected N = {n_dim}",
                x.len()
            )));
        }
        let x_model = self.x_block(n_dim)?;
        let m_x = x_model.mahalanobis(x)?;

        let sigma_xy = self.sigma.view((0, n_dim), (n_dim, 1)).into_owned();
        let sigma_y = self.sigma[(n_dim, n_dim)];
        // Σ_X⁻¹ Σ_XY and Σ_X⁻¹ (x - μ_X) via the leading block of the
        // Cholesky factor (it factorizes Σ_X).
        let lx = self.chol_lower.view((0, 0), (n_dim, n_dim)).into_owned();
        let solve_spd = |rhs: DVector<f64>| -> Result<DVector<f64>> {
            let y = lx.solve_lower_triangular(&rhs).ok_or(Error::NotPositiveDefinite)?;
            lx.transpose()
                .solve_upper_triangular(&y)
                .ok_or(Error::NotPositiveDefinite)
        };
        let diff =
            DVector::from_iterator(n_dim, x.iter().zip(self.mu.iter()).map(|(a, b)| a - b));
        let beta = solve_spd(sigma_xy.column(0).into_owned())?;
        let mu_cond = self.mu[n_dim] + sigma_xy.column(0).dot(&solve_spd(diff)?);
        let sigma_cond_sq = sigma_y - sigma_xy.column(0).dot(&beta);
        if sigma_cond_sq <= 1e-12 * sigma_y {
            return Err(Error::DegenerateConditional(sigma_cond_sq));
        }
        Ok(ConditionalMoments { mu_cond, sigma_cond: sigma_cond_sq.sqrt(), m_x })
    }

    /// Draws `n` i.i.d. rows. Deterministic for a fixed seed; Gaussian and
    /// Student only. Student rows use Z = μ + Λ G / sqrt(χ²_ν / ν).
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleMatrix> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be >= 1".into()));
        }
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0.0; n * d];
        match &self.family {
            Family::Gaussian => {
                for row in 0..n {
                    let g: Vec<f64> =
                        (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                    self.write_row(&mut data[row * d..(row + 1) * d], &g, 1.0);
                }
            }
            Family::Student { nu } => {
                let chi = ChiSquared::new(*nu)
                    .map_err(|e| Error::InvalidParameter(format!("chi-squared({nu}): {e}")))?;
                for row in 0..n {
                    let g: Vec<f64> =
                        (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let mix = (chi.sample(&mut rng) / nu).sqrt();
                    self.write_row(&mut data[row * d..(row + 1) * d], &g, 1.0 / mix);
                }
            }
            other => return Err(Error::UnsupportedFamily(other.name().into())),
        }
        SampleMatrix::from_flat(data, n, d)
    }

    fn write_row(&self, out: &mut [f64], g: &[f64], radial_scale: f64) {
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            // Lower-triangular multiply.
            for (j, gj) in g.iter().enumerate().take(i + 1) {
                acc += self.chol_lower[(i, j)] * gj;
            }
            *slot = self.mu[i] + radial_scale * acc;
        }
    }

    /// Whitened rows Λ⁻¹(z_i - μ), one row per sample.
    pub fn whiten(&self, samples: &SampleMatrix) -> Result<SampleMatrix> {
        if samples.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "samples have {} columns, model dimension is {}",
                samples.ncols(),
                self.dim()
            )));
        }
        let d = self.dim();
        let mut data = vec![0.0; samples.nrows() * d];
        let mut diff = DVector::zeros(d);
        for (row_idx, row) in samples.rows().enumerate() {
            for i in 0..d {
                diff[i] = row[i] - self.mu[i];
            }
            let w = self
                .chol_lower
                .solve_lower_triangular(&diff)
                .ok_or(Error::NotPositiveDefinite)?;
            data[row_idx * d..(row_idx + 1) * d].copy_from_slice(w.as_slice());
        }
        SampleMatrix::from_flat(data, samples.nrows(), d)
    }

    /// One whitened coordinate of every sample (the Hill statistic W in
    /// component mode).
    pub fn whitened_component(&self, samples: &SampleMatrix, component: usize) -> Result<Vec<f64>> {
        if component >= self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "component {component} out of range for dimension {}",
                self.dim()
            )));
        }
        let w = self.whiten(samples)?;
        Ok(w.column(component))
    }

    /// Mahalanobis distance of every sample row.
    pub fn mahalanobis_distances(&self, samples: &SampleMatrix) -> Result<Vec<f64>> {
        let w = self.whiten(samples)?;
        Ok(w.rows().map(|row| row.iter().map(|v| v * v).sum()).collect())
    }
}

/// Conditional location, scale and covariate Mahalanobis distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMoments {
    pub mu_cond: f64,
    pub sigma_cond: f64,
    pub m_x: f64,
}

/// Immutable n×d observation matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    nrows: usize,
    ncols: usize,
}

impl SampleMatrix {
    pub fn from_flat(data: Vec<f64>, nrows: usize, ncols: usize) -> Result<Self> {
        if nrows == 0 || ncols == 0 || data.len() != nrows * ncols {
            return Err(Error::DimensionMismatch(format!(
                "flat buffer of {} entries cannot be {nrows}x{ncols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("sample matrix has non-finite entries".into()));
        }
        Ok(SampleMatrix { data, nrows, ncols })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyTable);
        }
        let ncols = rows[0].len();
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::from_flat(data, rows.len(), ncols)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.ncols)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Drops the last column, returning (front matrix, last column).
    pub fn split_last_column(&self) -> Result<(SampleMatrix, Vec<f64>)> {
        if self.ncols < 2 {
            return Err(Error::DimensionMismatch("need at least two columns to split".into()));
        }
        let mut front = Vec::with_capacity(self.nrows * (self.ncols - 1));
        let mut last = Vec::with_capacity(self.nrows);
        for row in self.rows() {
            front.extend_from_slice(&row[..self.ncols - 1]);
            last.push(row[self.ncols - 1]);
        }
        Ok((SampleMatrix::from_flat(front, self.nrows, self.ncols - 1)?, last))
    }
}
