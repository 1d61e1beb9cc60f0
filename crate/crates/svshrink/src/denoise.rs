//! End-to-end matrix denoising: SVD, shrinker application in natural units,
//! reconstruction, and a machine-readable report.
//!
//! Conventions: the data is modeled as Y = X + (σ/√n)·Z with Z i.i.d.
//! unit-variance, so σ is the *natural* noise level — the number that makes
//! Y/σ a unit-noise spiked matrix with bulk edge 1+√β. The denoiser rescales
//! to that convention, applies the shrinker there, and scales back:
//! X̂ = σ · Σᵢ η(dᵢ/σ) uᵢvᵢ'. When σ is unknown it is estimated from the
//! median singular value as σ̂_nat = y_med/√μ_β, which is √n times the
//! per-entry estimator [`crate::noise::sigma_hat`].

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise;
use crate::shrinkers::Shrinker;
use crate::util;

// ─── dense matrices ──────────────────────────────────────────────────────────

/// Dense real matrix, row-major. A plain container: any shape with at least
/// one row and column is allowed; orientation normalization (rows ≤ cols)
/// happens inside [`denoise`], invisibly to callers.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Wrap row-major `data` of length `rows·cols`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// The `rows × cols` zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at (`i`, `j`), zero-based.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Set entry at (`i`, `j`), zero-based.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    /// Row-major entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// The transposed matrix.
    pub fn transposed(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// Frobenius norm.
    pub fn frob_norm(&self) -> f64 {
        util::pairwise_sum(&self.data.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt()
    }

    /// Whether all entries are finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Parse a headerless CSV matrix: comma-separated decimal entries, one
    /// row per line, uniform row length. Whitespace around entries and
    /// trailing blank lines are tolerated; blank lines inside the matrix and
    /// ragged rows are errors.
    pub fn from_csv_reader(reader: impl BufRead) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut saw_blank = false;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                saw_blank = true;
                continue;
            }
            if saw_blank {
                return Err(Error::Parse(format!(
                    "blank line inside matrix before line {}",
                    lineno + 1
                )));
            }
            let row = line
                .split(',')
                .enumerate()
                .map(|(col, field)| {
                    field.trim().parse::<f64>().map_err(|_| {
                        Error::Parse(format!(
                            "line {}, field {}: cannot parse {:?} as a number",
                            lineno + 1,
                            col + 1,
                            field.trim()
                        ))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::Parse(format!(
                        "line {}: row has {} entries, expected {}",
                        lineno + 1,
                        row.len(),
                        first.len()
                    )));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse("matrix CSV contains no rows".to_string()));
        }
        let cols = rows[0].len();
        Matrix::new(rows.len(), cols, rows.into_iter().flatten().collect())
    }

    /// Parse a matrix from in-memory CSV text.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        Matrix::from_csv_reader(text.as_bytes())
    }

    /// Write the matrix as headerless CSV with 12-significant-digit entries
    /// and a trailing newline; output bytes are deterministic.
    pub fn to_csv_writer(&self, mut writer: impl Write) -> Result<()> {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| util::fmt12(self.get(i, j)))
                .collect();
            writeln!(writer, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// The CSV text produced by [`Matrix::to_csv_writer`].
    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.to_csv_writer(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    pub(crate) fn to_na(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_na(m: &DMatrix<f64>) -> Matrix {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Matrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

// ─── singular value decomposition ────────────────────────────────────────────

/// Thin SVD `A = U·diag(d)·V'` with `r = min(rows, cols)`: `u` is rows×r,
/// `v` is cols×r (orthonormal columns), `d` descending. In the denoiser's
/// rows ≤ cols orientation, `u` is square (the "fat" convention).
#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors, one per column.
    pub u: Matrix,
    /// Singular values, descending; ties keep the decomposition's order.
    pub d: Vec<f64>,
    /// Right singular vectors, one per column.
    pub v: Matrix,
}

/// Compute the thin SVD of `a` with singular values sorted descending (a
/// stable sort, so equal values keep their order). Fails on non-finite
/// entries or if the iteration does not converge within a bounded count.
pub fn svd(a: &Matrix) -> Result<Svd> {
    if !a.is_finite() {
        return Err(Error::InvalidInput(
            "SVD input must have finite entries".to_string(),
        ));
    }
    // The implicit-QR sweep count grows with the bidiagonal dimension, so the
    // iteration budget must scale with min(m, n) or large matrices would be
    // reported as non-convergent.
    let max_iter = 64 * a.rows.min(a.cols).max(16);
    let decomposition = nalgebra::linalg::SVD::try_new(a.to_na(), true, true, f64::EPSILON, max_iter)
        .ok_or(Error::SvdFailure {
            rows: a.rows,
            cols: a.cols,
        })?;
    let u_na = decomposition.u.expect("u requested");
    let vt_na = decomposition.v_t.expect("v requested");
    let raw: Vec<f64> = decomposition.singular_values.iter().copied().collect();

    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]));

    let r = raw.len();
    let mut u = Matrix::zeros(a.rows, r);
    let mut v = Matrix::zeros(a.cols, r);
    let mut d = Vec::with_capacity(r);
    for (k, &idx) in order.iter().enumerate() {
        d.push(raw[idx]);
        for i in 0..a.rows {
            u.set(i, k, u_na[(i, idx)]);
        }
        for j in 0..a.cols {
            v.set(j, k, vt_na[(idx, j)]);
        }
    }
    Ok(Svd { u, d, v })
}

// ─── denoising ───────────────────────────────────────────────────────────────

/// Where the noise level used by [`denoise`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaSource {
    /// Caller supplied σ.
    Known,
    /// σ̂ estimated from the median singular value.
    Estimated,
}

/// Per-call record of what the denoiser did, in rescaled (unit-noise) units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenoiseReport {
    /// Natural-units noise level actually used (known or estimated).
    pub sigma_used: f64,
    /// Provenance of `sigma_used`.
    pub sigma_source: SigmaSource,
    /// Aspect ratio m/n after orientation normalization.
    pub beta: f64,
    /// Rescaled data singular values dᵢ/σ, descending.
    pub singular_values_in: Vec<f64>,
    /// Shrunken values η(dᵢ/σ), same order.
    pub singular_values_out: Vec<f64>,
    /// Number of nonzero outputs (= rank of the reconstruction).
    pub effective_rank: usize,
    /// Loss family the shrinker was built for.
    pub loss_id: String,
    /// MP median μ_β used by the estimator (audit; only when estimated).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mp_median: Option<f64>,
    /// Median singular value used by the estimator (audit; only when estimated).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_median: Option<f64>,
    /// Present when the input is outside the asymptotic regime (m = 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Denoise `y` with shrinker `sh`: rescale to unit noise using the
/// natural-units `sigma` (estimated from the data when `None`), shrink each
/// singular value, and reconstruct. Returns the estimate and a
/// [`DenoiseReport`].
///
/// `sh` must be in the natural calibration (`calibration_sigma == 1`): this
/// function applies the noise-level scaling itself, exactly once.
pub fn denoise(
    y: &Matrix,
    sh: &Shrinker,
    sigma: Option<f64>,
    loss_id: &str,
) -> Result<(Matrix, DenoiseReport)> {
    if (sh.calibration_sigma() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "denoise applies its own noise-level calibration; the shrinker must have \
             calibration_sigma = 1, got {}",
            sh.calibration_sigma()
        )));
    }
    if let Some(s) = sigma {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidInput(format!(
                "noise level sigma must be positive and finite, got {s}"
            )));
        }
    }

    // Normalize to rows ≤ cols; transpose back at the end.
    let transposed = y.rows() > y.cols();
    let oriented = if transposed { y.transposed() } else { y.clone() };
    let (m, n) = (oriented.rows(), oriented.cols());
    let beta = m as f64 / n as f64;

    let Svd { u, d, v } = svd(&oriented)?;

    let (s, mp_median, y_median) = match sigma {
        Some(s) => (s, None, None),
        None => {
            // Natural-units estimate: √n · sigma_hat = y_med / √μ_β.
            let mu = noise::mp_median(beta, 1e-10)?;
            let y_med = util::median(&d).expect("svd of nonempty matrix");
            let s = y_med / mu.sqrt();
            if !(s > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "estimated noise level is not positive (median singular value \
                     {y_med}); supply sigma explicitly"
                )));
            }
            (s, Some(mu), Some(y_med))
        }
    };

    let scale = s;
    let rescaled: Vec<f64> = d.iter().map(|di| di / scale).collect();
    let shrunk: Vec<f64> = rescaled.iter().map(|&w| sh.eval(w)).collect();
    let kept: Vec<usize> = (0..shrunk.len()).filter(|&i| shrunk[i] > 0.0).collect();

    let mut xhat = Matrix::zeros(m, n);
    if !kept.is_empty() {
        let mut u_kept = DMatrix::zeros(m, kept.len());
        let mut v_kept = DMatrix::zeros(n, kept.len());
        for (k, &i) in kept.iter().enumerate() {
            for row in 0..m {
                u_kept[(row, k)] = u.get(row, i) * shrunk[i] * scale;
            }
            for row in 0..n {
                v_kept[(row, k)] = v.get(row, i);
            }
        }
        xhat = Matrix::from_na(&(u_kept * v_kept.transpose()));
    }
    if transposed {
        xhat = xhat.transposed();
    }

    let warning = (m == 1).then(|| {
        "input has a single row; the asymptotic theory behind the shrinker assumes \
         large matrices, so treat the output with caution"
            .to_string()
    });
    let report = DenoiseReport {
        sigma_used: s,
        sigma_source: if sigma.is_some() {
            SigmaSource::Known
        } else {
            SigmaSource::Estimated
        },
        beta,
        effective_rank: kept.len(),
        singular_values_in: rescaled,
        singular_values_out: shrunk,
        loss_id: loss_id.to_string(),
        mp_median,
        y_median,
        warning,
    };
    Ok((xhat, report))
}
