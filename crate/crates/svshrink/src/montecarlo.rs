//! Monte Carlo harness: generate finite-n spiked matrices, denoise them,
//! and compare empirical singular values, cosines, losses, and residuals
//! against their asymptotic predictions.
//!
//! Replicates are bit-reproducible: replicate `i` draws from a ChaCha8
//! stream seeded with `seed ⊕ i`, and within a replicate the sampling order
//! is fixed (signal left factor column-major, then right factor, then noise
//! row-major). Replicates run in parallel; aggregation is order-independent
//! (indexed collection plus pairwise summation), so thread scheduling never
//! changes the output bits.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoise::{svd, Matrix};
use crate::error::{Error, Result};
use crate::losses::BuiltinLoss;
use crate::shrinkers::{
    hard_threshold_shrinker, identity_shrinker, optimal_shrinker, zero_shrinker, Shrinker,
};
use crate::solver;
use crate::spike_model::SpikeModel;
use crate::util;

// ─── configuration ───────────────────────────────────────────────────────────

/// Distribution of the noise entries (all zero-mean, unit-variance).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Standard normal.
    Gaussian,
    /// ±1 with equal probability.
    Rademacher,
    /// Uniform on [−√3, √3].
    UniformSym,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Rademacher => "rademacher",
            NoiseKind::UniformSym => "uniform",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseKind::Gaussian),
            "rademacher" => Ok(NoiseKind::Rademacher),
            "uniform" | "uniformsym" => Ok(NoiseKind::UniformSym),
            other => Err(Error::Parse(format!(
                "unknown noise kind '{other}'; expected gaussian, rademacher, or uniform"
            ))),
        }
    }
}

/// One simulation setup: matrix shape, spike strengths, noise law, which
/// loss/shrinker pair to measure, and how many seeded replicates to run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of columns; rows are `round(beta · n)`.
    pub n: usize,
    /// Aspect ratio in (0, 1].
    pub beta: f64,
    /// Spike strengths, strictly decreasing, all positive; may be empty.
    pub spikes: Vec<f64>,
    /// Noise entry distribution.
    pub noise_kind: NoiseKind,
    /// Loss family used for the empirical loss ("frobenius", "operator",
    /// "nuclear").
    pub loss_id: String,
    /// Shrinker to apply; see [`resolve_shrinker`] for accepted names.
    pub shrinker_id: String,
    /// Number of replicates, at least 1.
    pub reps: usize,
    /// Base seed; replicate `i` uses `seed ⊕ i`.
    pub seed: u64,
}

impl SimConfig {
    /// Number of rows, `round(beta · n)`.
    pub fn m(&self) -> usize {
        (self.beta * self.n as f64).round() as usize
    }

    /// Check every invariant; all other entry points call this first.
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "aspect ratio beta = {} must lie in (0, 1]",
                self.beta
            )));
        }
        if self.n == 0 || self.m() == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix shape {}x{} must be nonempty",
                self.m(),
                self.n
            )));
        }
        if self.reps == 0 {
            return Err(Error::InvalidInput("reps must be at least 1".to_string()));
        }
        if self.spikes.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "spikes must be positive and finite, got {:?}",
                self.spikes
            )));
        }
        if self.spikes.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidInput(format!(
                "spikes must be strictly decreasing, got {:?}",
                self.spikes
            )));
        }
        if self.spikes.len() >= self.m() {
            return Err(Error::InvalidInput(format!(
                "{} spikes do not fit in {} rows (one extra singular value is \
                 needed to watch the bulk edge)",
                self.spikes.len(),
                self.m()
            )));
        }
        BuiltinLoss::from_str(&self.loss_id)?;
        let model = SpikeModel::new(self.beta)?;
        resolve_shrinker(&self.shrinker_id, &model, BuiltinLoss::from_str(&self.loss_id)?)?;
        Ok(())
    }
}

/// Map a shrinker name to a concrete shrinker: `optimal` (for the given
/// loss), `optimal-frobenius` / `optimal-operator` / `optimal-nuclear`,
/// `hard` / `hard-threshold`, `zero`, or `identity`.
pub fn resolve_shrinker(id: &str, model: &SpikeModel, loss: BuiltinLoss) -> Result<Shrinker> {
    match id.to_ascii_lowercase().as_str() {
        "optimal" => Ok(optimal_shrinker(model, loss)),
        "optimal-frobenius" => Ok(optimal_shrinker(model, BuiltinLoss::Frobenius)),
        "optimal-operator" => Ok(optimal_shrinker(model, BuiltinLoss::Operator)),
        "optimal-nuclear" => Ok(optimal_shrinker(model, BuiltinLoss::Nuclear)),
        "hard" | "hard-threshold" => Ok(hard_threshold_shrinker(model)),
        "zero" => Ok(zero_shrinker()),
        "identity" => Ok(identity_shrinker()),
        other => Err(Error::InvalidInput(format!(
            "unknown shrinker '{other}'; expected optimal, optimal-<loss>, \
             hard-threshold, zero, or identity"
        ))),
    }
}

// ─── generation ──────────────────────────────────────────────────────────────

/// Haar-distributed `dim × dim` orthogonal matrix: QR of an i.i.d. standard
/// Gaussian matrix with the signs of R's diagonal folded into Q (without the
/// sign fix the law is not Haar).
pub fn haar_orthogonal(dim: usize, rng: &mut impl Rng) -> Matrix {
    assert!(dim >= 1, "haar_orthogonal needs dim >= 1");
    let q = haar_columns(dim, dim, rng);
    Matrix::from_na(&q)
}

/// First `r` columns of a Haar `dim × dim` matrix, materialized economically
/// as the sign-fixed thin QR of a `dim × r` Gaussian matrix. Entries are
/// drawn column-major — part of the reproducibility contract.
fn haar_columns(dim: usize, r: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    debug_assert!(r >= 1 && r <= dim);
    let gauss: Vec<f64> = (0..dim * r).map(|_| rng.sample(StandardNormal)).collect();
    let qr = nalgebra::linalg::QR::new(DMatrix::from_column_slice(dim, r, &gauss));
    let rmat = qr.r();
    let mut q = qr.q();
    for j in 0..r {
        if rmat[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

fn sample_noise(kind: NoiseKind, rng: &mut impl Rng) -> f64 {
    const SQRT3: f64 = 1.732_050_807_568_877_2;
    match kind {
        NoiseKind::Gaussian => rng.sample(StandardNormal),
        NoiseKind::Rademacher => {
            if rng.gen::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
        NoiseKind::UniformSym => rng.gen_range(-SQRT3..=SQRT3),
    }
}

/// Everything one replicate draws: the signal factors (kept for cosine
/// measurements) and the data matrices.
struct GeneratedRep {
    /// m×r left signal singular vectors (columns), when r > 0.
    u_signal: Option<DMatrix<f64>>,
    /// n×r right signal singular vectors (columns), when r > 0.
    v_signal: Option<DMatrix<f64>>,
    x: Matrix,
    y: Matrix,
}

fn generate_rep(cfg: &SimConfig, rep_index: u64) -> GeneratedRep {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ rep_index);
    let (m, n, r) = (cfg.m(), cfg.n, cfg.spikes.len());

    let (u_signal, v_signal, x_na) = if r > 0 {
        let u = haar_columns(m, r, &mut rng);
        let v = haar_columns(n, r, &mut rng);
        let mut u_scaled = u.clone();
        for (k, &x) in cfg.spikes.iter().enumerate() {
            for i in 0..m {
                u_scaled[(i, k)] *= x;
            }
        }
        let x_na = &u_scaled * v.transpose();
        (Some(u), Some(v), x_na)
    } else {
        (None, None, DMatrix::zeros(m, n))
    };

    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let mut y_data = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            y_data.push(x_na[(i, j)] + sample_noise(cfg.noise_kind, &mut rng) * inv_sqrt_n);
        }
    }
    GeneratedRep {
        u_signal,
        v_signal,
        x: Matrix::from_na(&x_na),
        y: Matrix::new(m, n, y_data).expect("shape validated"),
    }
}

/// Generate one replicate's (X, Y) pair: X = U·diag(spikes)·V' with Haar
/// factors (only r columns materialized), Y = X + Z/√n with i.i.d.
/// unit-variance noise per `cfg.noise_kind`.
pub fn generate(cfg: &SimConfig, rep_index: u64) -> Result<(Matrix, Matrix)> {
    cfg.validate()?;
    let rep = generate_rep(cfg, rep_index);
    Ok((rep.x, rep.y))
}

// ─── measurement ─────────────────────────────────────────────────────────────

/// Per-spike empirical means, standard errors, and theoretical limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpikeSummary {
    /// Configured spike strength.
    pub x: f64,
    /// Mean data singular value at this spike's index.
    pub mean_y: f64,
    /// Standard error of `mean_y`.
    pub se_y: f64,
    /// Mean |⟨signal uᵢ, data uᵢ⟩|.
    pub mean_left_cosine: f64,
    /// Standard error of `mean_left_cosine`.
    pub se_left_cosine: f64,
    /// Mean |⟨signal vᵢ, data vᵢ⟩|.
    pub mean_right_cosine: f64,
    /// Standard error of `mean_right_cosine`.
    pub se_right_cosine: f64,
    /// Asymptotic singular-value location: y(x) supercritical, bulk edge
    /// otherwise.
    pub theory_y: f64,
    /// Asymptotic left cosine c(x) (0 when subcritical).
    pub theory_left_cosine: f64,
    /// Asymptotic right cosine c̃(x) (0 when subcritical).
    pub theory_right_cosine: f64,
}

/// Aggregated simulation output: per-spike statistics, the empirical loss,
/// the bulk-edge tracker y_{r+1}, and the shrinker's bulk residual, each
/// with standard errors and (where defined) asymptotic reference values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimSummary {
    /// Rows of the simulated matrices.
    pub m: usize,
    /// Columns of the simulated matrices.
    pub n: usize,
    /// Configured aspect ratio.
    pub beta: f64,
    /// Configured spikes.
    pub spikes: Vec<f64>,
    /// Configured noise law.
    pub noise_kind: NoiseKind,
    /// Loss family measured.
    pub loss_id: String,
    /// Shrinker applied.
    pub shrinker_id: String,
    /// Replicates requested.
    pub reps: usize,
    /// Base seed.
    pub seed: u64,
    /// Per-spike statistics, in configured spike order.
    pub spike_stats: Vec<SpikeSummary>,
    /// Mean realized loss L(X, X̂) under `loss_id`.
    pub mean_loss: f64,
    /// Standard error of `mean_loss`.
    pub se_loss: f64,
    /// Asymptotic loss of the shrinker on these spikes; absent for improper
    /// shrinkers (identity), whose asymptotic loss diverges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory_loss: Option<f64>,
    /// Mean (r+1)-th data singular value, which tracks the bulk edge.
    pub mean_edge_singular_value: f64,
    /// Standard error of `mean_edge_singular_value`.
    pub se_edge_singular_value: f64,
    /// Asymptotic bulk edge 1 + √β.
    pub theory_edge: f64,
    /// Mean of Σ_{i>r} η(yᵢ)², the shrinker's leakage on bulk values.
    pub mean_residual: f64,
    /// Standard error of `mean_residual`.
    pub se_residual: f64,
    /// Replicates dropped because the SVD did not converge.
    pub skipped: usize,
}

struct RepStats {
    ys: Vec<f64>,
    cos_left: Vec<f64>,
    cos_right: Vec<f64>,
    edge: f64,
    loss: f64,
    residual: f64,
}

fn column_dot(a: &DMatrix<f64>, acol: usize, b: &Matrix, bcol: usize) -> f64 {
    (0..a.nrows()).map(|i| a[(i, acol)] * b.get(i, bcol)).sum()
}

fn realized_loss(builtin: BuiltinLoss, diff: &DMatrix<f64>) -> Result<f64> {
    match builtin {
        BuiltinLoss::Frobenius => {
            let sq: Vec<f64> = diff.iter().map(|v| v * v).collect();
            Ok(util::pairwise_sum(&sq))
        }
        BuiltinLoss::Operator | BuiltinLoss::Nuclear => {
            let max_iter = 64 * diff.nrows().min(diff.ncols()).max(16);
            let svals = nalgebra::linalg::SVD::try_new(
                diff.clone(),
                false,
                false,
                f64::EPSILON,
                max_iter,
            )
            .ok_or(Error::SvdFailure {
                rows: diff.nrows(),
                cols: diff.ncols(),
            })?
            .singular_values;
            let vals: Vec<f64> = svals.iter().copied().collect();
            Ok(match builtin {
                BuiltinLoss::Operator => vals.iter().copied().fold(0.0, f64::max),
                _ => util::pairwise_sum(&vals),
            })
        }
    }
}

fn simulate_rep(
    cfg: &SimConfig,
    rep_index: u64,
    sh: &Shrinker,
    builtin: BuiltinLoss,
) -> Result<RepStats> {
    let r = cfg.spikes.len();
    let rep = generate_rep(cfg, rep_index);
    let decomp = svd(&rep.y)?;
    let etas: Vec<f64> = decomp.d.iter().map(|&d| sh.eval(d)).collect();

    // X̂ = Σ η(dᵢ)·uᵢvᵢ' over the kept components.
    let kept: Vec<usize> = (0..etas.len()).filter(|&i| etas[i] > 0.0).collect();
    let (m, n) = (rep.y.rows(), rep.y.cols());
    let mut diff = rep.x.to_na() * -1.0;
    if !kept.is_empty() {
        let mut u_kept = DMatrix::zeros(m, kept.len());
        let mut v_kept = DMatrix::zeros(n, kept.len());
        for (k, &i) in kept.iter().enumerate() {
            for row in 0..m {
                u_kept[(row, k)] = decomp.u.get(row, i) * etas[i];
            }
            for row in 0..n {
                v_kept[(row, k)] = decomp.v.get(row, i);
            }
        }
        diff += u_kept * v_kept.transpose();
    }
    let loss = realized_loss(builtin, &diff)?;

    let tail_sq: Vec<f64> = etas[r..].iter().map(|e| e * e).collect();
    let residual = util::pairwise_sum(&tail_sq);

    let mut cos_left = Vec::with_capacity(r);
    let mut cos_right = Vec::with_capacity(r);
    if r > 0 {
        let u_sig = rep.u_signal.as_ref().expect("r > 0");
        let v_sig = rep.v_signal.as_ref().expect("r > 0");
        for i in 0..r {
            cos_left.push(column_dot(u_sig, i, &decomp.u, i).abs());
            cos_right.push(column_dot(v_sig, i, &decomp.v, i).abs());
        }
    }
    Ok(RepStats {
        ys: decomp.d[..r].to_vec(),
        cos_left,
        cos_right,
        edge: decomp.d[r],
        loss,
        residual,
    })
}

/// Run all replicates of `cfg` in parallel and aggregate. Replicates whose
/// SVD fails are skipped and counted; everything else is averaged with
/// standard errors.
pub fn run(cfg: &SimConfig) -> Result<SimSummary> {
    cfg.validate()?;
    let model = SpikeModel::new(cfg.beta)?;
    let builtin = BuiltinLoss::from_str(&cfg.loss_id)?;
    let family = builtin.family();
    let sh = resolve_shrinker(&cfg.shrinker_id, &model, builtin)?;
    let r = cfg.spikes.len();

    let outcomes: Vec<Result<RepStats>> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|rep| simulate_rep(cfg, rep, &sh, builtin))
        .collect();
    let mut stats = Vec::with_capacity(cfg.reps);
    let mut skipped = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok(s) => stats.push(s),
            Err(Error::SvdFailure { .. }) => skipped += 1,
            Err(other) => return Err(other),
        }
    }
    if stats.is_empty() {
        return Err(Error::Domain(
            "every replicate failed to decompose; cannot summarize".to_string(),
        ));
    }

    let collect = |f: &dyn Fn(&RepStats) -> f64| -> Vec<f64> { stats.iter().map(f).collect() };
    let mut spike_stats = Vec::with_capacity(r);
    for i in 0..r {
        let x = cfg.spikes[i];
        let ys = collect(&|s| s.ys[i]);
        let cl = collect(&|s| s.cos_left[i]);
        let cr = collect(&|s| s.cos_right[i]);
        let (theory_y, theory_c, theory_ct) = if x >= model.critical_x() {
            let cos = model.cosines(x)?;
            (model.y_of_x(x)?, cos.c, cos.c_tilde)
        } else {
            (model.bulk_edge(), 0.0, 0.0)
        };
        spike_stats.push(SpikeSummary {
            x,
            mean_y: util::mean(&ys),
            se_y: util::std_error(&ys),
            mean_left_cosine: util::mean(&cl),
            se_left_cosine: util::std_error(&cl),
            mean_right_cosine: util::mean(&cr),
            se_right_cosine: util::std_error(&cr),
            theory_y,
            theory_left_cosine: theory_c,
            theory_right_cosine: theory_ct,
        });
    }

    let losses = collect(&|s| s.loss);
    let edges = collect(&|s| s.edge);
    let residuals = collect(&|s| s.residual);
    Ok(SimSummary {
        m: cfg.m(),
        n: cfg.n,
        beta: cfg.beta,
        spikes: cfg.spikes.clone(),
        noise_kind: cfg.noise_kind,
        loss_id: cfg.loss_id.clone(),
        shrinker_id: cfg.shrinker_id.clone(),
        reps: cfg.reps,
        seed: cfg.seed,
        spike_stats,
        mean_loss: util::mean(&losses),
        se_loss: util::std_error(&losses),
        theory_loss: solver::asymptotic_loss(&family, &model, &sh, &cfg.spikes).ok(),
        mean_edge_singular_value: util::mean(&edges),
        se_edge_singular_value: util::std_error(&edges),
        theory_edge: model.bulk_edge(),
        mean_residual: util::mean(&residuals),
        se_residual: util::std_error(&residuals),
        skipped,
    })
}
