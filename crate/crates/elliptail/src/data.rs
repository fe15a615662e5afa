//! Returns-table ingestion, method-of-moments parameter estimation and the
//! full real-data pipeline: moments → whitening → Hill/η̂/ℓ̂ → high quantile
//! at α_n = 1 - n^(-a), with `a` optionally chosen to minimize the high-
//! regime asymptotic variance (a = (1-b)·η̂).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::elliptical::SampleMatrix;
use crate::error::{Error, Result};
use crate::extremal::{
    estimate_extremal_with_gamma, hill_from_order_statistics, ExtremalEstimate, HillConfig,
    HillMode, Kernel, KernelConfig, OrderStatistics,
};
use crate::quantile::{high_quantile_from_order, RiskEstimate, SequenceSchedule};

/// A parsed returns table: an opaque ordered label column plus named real
/// columns of equal length.
#[derive(Debug, Clone)]
pub struct ReturnsTable {
    pub labels: Vec<String>,
    pub names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl ReturnsTable {
    pub fn nrows(&self) -> usize {
        self.columns.first().map(|c| c.len()).unwrap_or(0)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        let idx = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))?;
        Ok(&self.columns[idx])
    }

    /// Row-major matrix of the named columns, in the given order.
    pub fn matrix(&self, names: &[String]) -> Result<SampleMatrix> {
        let cols: Vec<&[f64]> =
            names.iter().map(|n| self.column(n)).collect::<Result<_>>()?;
        let n = self.nrows();
        let mut data = Vec::with_capacity(n * cols.len());
        for i in 0..n {
            for col in &cols {
                data.push(col[i]);
            }
        }
        SampleMatrix::from_flat(data, n, cols.len())
    }

    /// Table restricted to the first `n` rows.
    pub fn head(&self, n: usize) -> ReturnsTable {
        ReturnsTable {
            labels: self.labels.iter().take(n).cloned().collect(),
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c[..n.min(c.len())].to_vec()).collect(),
        }
    }
}

/// Loads a returns CSV (RFC-4180, header row required). Columns named in
/// `covariate_columns` and `target_column` are parsed as floats; the first
/// remaining column, if any, is carried as the label column. Rows with
/// unparseable cells are rejected with their row numbers.
pub fn load_returns(
    path: &Path,
    covariate_columns: &[String],
    target_column: &str,
) -> Result<ReturnsTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();

    let mut wanted: Vec<String> = covariate_columns.to_vec();
    wanted.push(target_column.to_string());
    if covariate_columns.iter().any(|c| c == target_column) {
        return Err(Error::InvalidParameter(format!(
            "target column '{target_column}' also appears among the covariates"
        )));
    }
    let missing: Vec<&String> =
        wanted.iter().filter(|c| !headers.iter().any(|h| h == *c)).collect();
    if !missing.is_empty() {
        return Err(Error::MissingColumn(
            missing.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
        ));
    }
    let col_idx: Vec<usize> = wanted
        .iter()
        .map(|c| headers.iter().position(|h| h == c).unwrap())
        .collect();
    let label_idx = (0..headers.len()).find(|i| !col_idx.contains(i));

    let mut labels = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); wanted.len()];
    let mut bad_rows: Vec<(String, usize)> = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let mut row_vals = Vec::with_capacity(wanted.len());
        let mut bad = false;
        for (slot, &ci) in col_idx.iter().enumerate() {
            match record.get(ci).unwrap_or("").trim().parse::<f64>() {
                Ok(v) if v.is_finite() => row_vals.push(v),
                _ => {
                    bad_rows.push((wanted[slot].clone(), row_no + 2)); // 1-based + header
                    bad = true;
                }
            }
        }
        if bad {
            continue;
        }
        for (slot, v) in row_vals.into_iter().enumerate() {
            columns[slot].push(v);
        }
        labels.push(
            label_idx
                .and_then(|i| record.get(i).map(|s| s.to_string()))
                .unwrap_or_else(|| (row_no + 1).to_string()),
        );
    }
    if !bad_rows.is_empty() {
        let column = bad_rows[0].0.clone();
        return Err(Error::NonNumericCell {
            column,
            rows: bad_rows.into_iter().map(|(_, r)| r).collect(),
        });
    }
    if columns[0].is_empty() {
        return Err(Error::EmptyTable);
    }
    Ok(ReturnsTable { labels, names: wanted, columns })
}

/// Sample mean and unbiased sample covariance (1/(n-1)), symmetrized.
/// A failed Cholesky on the covariance reports singularity.
pub fn estimate_moments(samples: &SampleMatrix) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = samples.nrows();
    let d = samples.ncols();
    if n < d + 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least d+2 = {} rows to estimate moments, got {n}",
            d + 2
        )));
    }
    let mut mean = DVector::zeros(d);
    for row in samples.rows() {
        for j in 0..d {
            mean[j] += row[j];
        }
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for row in samples.rows() {
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                cov[(i, j)] += di * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / (n as f64 - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    // Symmetrize explicitly (guards against accumulated asymmetry when the
    // computation above changes).
    let cov = (&cov + cov.transpose()) * 0.5;
    if nalgebra::Cholesky::new(cov.clone()).is_none() {
        return Err(Error::SingularCovariance);
    }
    Ok((mean, cov))
}

/// Options of the real-data pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub b: f64,
    pub c: f64,
    /// α_n exponent; when absent it is set to (1-b)·η̂, which zeroes the
    /// high-regime asymptotic variance.
    pub a: Option<f64>,
    #[serde(default)]
    pub kernel: Option<Kernel>,
    #[serde(default)]
    pub component_index: usize,
    #[serde(default)]
    pub rho: Option<f64>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            b: 0.6,
            c: 0.2,
            a: None,
            kernel: None,
            component_index: 0,
            rho: None,
        }
    }
}

/// Everything the pipeline produced, including the resolved schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub n: usize,
    pub m_x: f64,
    pub a_resolved: f64,
    pub alpha: f64,
    pub extremal: ExtremalEstimate,
    pub risk: RiskEstimate,
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
}

/// Full §-style workflow on a learning matrix of (covariates..., target)
/// columns and a covariate evaluation point.
pub fn real_data_pipeline(
    learning: &SampleMatrix,
    x: &[f64],
    opts: &PipelineOptions,
) -> Result<PipelineOutcome> {
    let d = learning.ncols();
    if d < 2 {
        return Err(Error::DimensionMismatch("pipeline needs N+1 >= 2 columns".into()));
    }
    let n_dim = d - 1;
    if x.len() != n_dim {
        return Err(Error::DimensionMismatch(format!(
            "x has length {}, expected N = {n_dim}",
            x.len()
        )));
    }
    let n = learning.nrows();
    let (mu, sigma) = estimate_moments(learning)?;
    let model = crate::elliptical::EllipticalModel::new(
        crate::elliptical::Family::Gaussian, // placeholder family; only mu/Sigma are used
        mu.clone(),
        sigma.clone(),
    )?;
    let cond = model.conditional_moments(x)?;
    let x_model = model.x_block(n_dim)?;
    let (x_samples, _y) = learning.split_last_column()?;
    let w = x_model.whitened_component(&x_samples, opts.component_index)?;
    let m_values = x_model.mahalanobis_distances(&x_samples)?;

    let k = ((n as f64).powf(opts.b) + 1e-9).floor() as usize;
    let k = k.clamp(1, n - 1);
    let h = (n as f64).powf(-opts.c);
    let order = OrderStatistics::new(&w);
    let gamma_hat = hill_from_order_statistics(&order, k)?;
    let hill_cfg =
        HillConfig { k, component_index: opts.component_index, mode: HillMode::Component };
    let kernel_cfg =
        KernelConfig { bandwidth: h, kernel: opts.kernel.unwrap_or(Kernel::Gaussian) };
    let est = estimate_extremal_with_gamma(
        gamma_hat,
        &m_values,
        cond.m_x,
        &hill_cfg,
        &kernel_cfg,
        n_dim,
        n,
    )?;

    let a = opts.a.unwrap_or((1.0 - opts.b) * est.eta_hat);
    let rho = opts.rho.unwrap_or(-1.0);
    let schedule = SequenceSchedule::new(a, opts.b, opts.c, rho, est.gamma_hat, n_dim)?;
    let risk = high_quantile_from_order(&order, &cond, &est, &schedule)?;

    Ok(PipelineOutcome {
        n,
        m_x: cond.m_x,
        a_resolved: a,
        alpha: schedule.alpha(n),
        extremal: est,
        risk,
        mu: mu.iter().copied().collect(),
        sigma: (0..d).map(|i| (0..d).map(|j| sigma[(i, j)]).collect()).collect(),
    })
}

/// Writes a sample matrix as headerless CSV with 17-significant-digit floats
/// (lossless f64 round trip).
pub fn write_sample_matrix<W: Write>(out: &mut W, samples: &SampleMatrix) -> Result<()> {
    for row in samples.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads a headerless CSV of floats.
pub fn read_sample_matrix(path: &Path) -> Result<SampleMatrix> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match row {
            Ok(r) => rows.push(r),
            Err(_) => {
                return Err(Error::NonNumericCell {
                    column: "<headerless>".into(),
                    rows: vec![line_no + 1],
                })
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    SampleMatrix::from_rows(&rows)
}
