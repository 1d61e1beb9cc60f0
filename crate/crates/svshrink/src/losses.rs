//! Loss families and the 2×2 block algebra behind shrinker optimality.
//!
//! Every loss considered here is orthogonally invariant and decomposable:
//! the matrix loss between signal and estimate reduces, spike by spike, to a
//! loss between two 2×2 blocks — `A(x)` for the signal contribution and
//! `B(η, x)` for the shrunken estimate expressed in the signal frame — and
//! the per-spike values combine by Sum or Max. The closed-form singular
//! values of Δ = B − A drive both the built-in losses and the numerical
//! optimizer for custom ones.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spike_model::SpikeCosines;

// ─── 2×2 blocks ──────────────────────────────────────────────────────────────

/// Dense 2×2 real matrix used by the reduced loss computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoByTwoBlock {
    /// Row-major entries `[[a11, a12], [a21, a22]]`, all finite.
    pub entries: [[f64; 2]; 2],
}

impl TwoByTwoBlock {
    /// Wrap row-major entries.
    pub fn new(entries: [[f64; 2]; 2]) -> Self {
        debug_assert!(
            entries.iter().flatten().all(|v| v.is_finite()),
            "block entries must be finite"
        );
        TwoByTwoBlock { entries }
    }

    /// The zero block.
    pub fn zero() -> Self {
        TwoByTwoBlock {
            entries: [[0.0; 2]; 2],
        }
    }

    /// `diag(a, b)`.
    pub fn diag(a: f64, b: f64) -> Self {
        TwoByTwoBlock::new([[a, 0.0], [0.0, b]])
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &TwoByTwoBlock) -> TwoByTwoBlock {
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.entries[i][j] - other.entries[i][j];
            }
        }
        TwoByTwoBlock { entries: out }
    }

    /// Squared Frobenius norm (sum of squared entries).
    pub fn frob_sq(&self) -> f64 {
        self.entries.iter().flatten().map(|v| v * v).sum()
    }

    /// Determinant.
    pub fn det(&self) -> f64 {
        let e = &self.entries;
        e[0][0] * e[1][1] - e[0][1] * e[1][0]
    }
}

/// Signal block `A(x) = [[x, 0], [0, 0]]` for a spike of strength `x >= 0`.
pub fn block_a(x: f64) -> TwoByTwoBlock {
    TwoByTwoBlock::new([[x, 0.0], [0.0, 0.0]])
}

/// Estimate block `B(η, x) = η·[[c·c̃, c·s̃], [c̃·s, s·s̃]]`, the rank-one
/// estimate `η·u·ṽ'` written in the signal's coordinate frame via the
/// alignment cosines of the spike.
pub fn block_b(eta: f64, cos: &SpikeCosines) -> TwoByTwoBlock {
    TwoByTwoBlock::new([
        [eta * cos.c * cos.c_tilde, eta * cos.c * cos.s_tilde],
        [eta * cos.c_tilde * cos.s, eta * cos.s * cos.s_tilde],
    ])
}

// ─── singular values of Δ ────────────────────────────────────────────────────

/// Scalar summaries of Δ = B − A: its squared Frobenius norm, determinant,
/// and both singular values in closed form.
#[derive(Debug, Clone, Copy)]
pub struct DeltaStats {
    /// Squared Frobenius norm of Δ (so `sigma_plus² + sigma_minus²`).
    pub frob_sq: f64,
    /// Determinant of Δ (so `±sigma_plus·sigma_minus`).
    pub det: f64,
    /// Larger singular value of Δ.
    pub sigma_plus: f64,
    /// Smaller singular value of Δ.
    pub sigma_minus: f64,
}

/// Compute [`DeltaStats`] for Δ = `b` − `a` using the closed-form 2×2
/// singular values `σ± = sqrt((t ± sqrt(t² − 4d²)) / 2)` with
/// `t = ‖Δ‖_F²`, `d = det Δ`.
pub fn delta_stats(a: &TwoByTwoBlock, b: &TwoByTwoBlock) -> DeltaStats {
    let delta = b.sub(a);
    let t = delta.frob_sq();
    let d = delta.det();
    // t² − 4d² ≥ 0 always (AM–GM on σ±²); tiny negatives are rounding noise.
    let mut disc = t * t - 4.0 * d * d;
    if disc < 0.0 {
        debug_assert!(disc >= -1e-12 * (t * t).max(1.0), "disc = {disc}, t = {t}");
        disc = 0.0;
    }
    let root = disc.sqrt();
    let sigma_plus = ((t + root) / 2.0).sqrt();
    // σ₊σ₋ = |det Δ| exactly, and dividing avoids the cancellation in
    // sqrt((t − root)/2) that loses half the digits when σ₋ ≪ σ₊.
    let sigma_minus = if sigma_plus > 0.0 {
        (d / sigma_plus).abs()
    } else {
        0.0
    };
    DeltaStats {
        frob_sq: t,
        det: d,
        sigma_plus,
        sigma_minus,
    }
}

// ─── loss families ───────────────────────────────────────────────────────────

/// How per-spike losses combine into the matrix loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decomposability {
    /// Matrix loss is the sum of per-spike block losses.
    Sum,
    /// Matrix loss is the maximum of per-spike block losses.
    Max,
}

/// An orthogonally invariant, decomposable loss, identified by its 2×2 block
/// evaluator plus the 1×1 specialization used for subcritical spikes.
///
/// Custom losses can be supplied through [`LossFamily::new`]; regularity of
/// the evaluators (needed for the asymptotic theory) is assumed, not checked.
#[derive(Clone)]
pub struct LossFamily {
    name: String,
    decomposability: Decomposability,
    l22: Arc<dyn Fn(&TwoByTwoBlock, &TwoByTwoBlock) -> f64 + Send + Sync>,
    l11: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for LossFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LossFamily")
            .field("name", &self.name)
            .field("decomposability", &self.decomposability)
            .finish_non_exhaustive()
    }
}

impl LossFamily {
    /// Assemble a custom loss family. `l22` and `l11` must be pure,
    /// side-effect-free, and return 0 on equal arguments.
    pub fn new(
        name: impl Into<String>,
        decomposability: Decomposability,
        l22: impl Fn(&TwoByTwoBlock, &TwoByTwoBlock) -> f64 + Send + Sync + 'static,
        l11: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        LossFamily {
            name: name.into(),
            decomposability,
            l22: Arc::new(l22),
            l11: Arc::new(l11),
        }
    }

    /// Identifier ("frobenius", "operator", "nuclear", or custom).
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Sum or Max combination rule.
    pub fn decomposability(&self) -> Decomposability {
        self.decomposability
    }

    /// Evaluate the 2×2 block loss.
    pub fn l22(&self, a: &TwoByTwoBlock, b: &TwoByTwoBlock) -> f64 {
        (self.l22)(a, b)
    }

    /// Evaluate the scalar (1×1) specialization.
    pub fn l11(&self, a: f64, b: f64) -> f64 {
        (self.l11)(a, b)
    }

    /// Squared Frobenius loss `‖A−B‖_F²` (Sum-decomposable). Note the square:
    /// all optimization runs on the squared norm.
    pub fn frobenius() -> Self {
        LossFamily::new(
            "frobenius",
            Decomposability::Sum,
            |a, b| delta_stats(a, b).frob_sq,
            |a, b| (a - b) * (a - b),
        )
    }

    /// Operator-norm loss `σ_max(A−B)` (Max-decomposable).
    pub fn operator() -> Self {
        LossFamily::new(
            "operator",
            Decomposability::Max,
            |a, b| delta_stats(a, b).sigma_plus,
            |a, b| (a - b).abs(),
        )
    }

    /// Nuclear-norm loss `σ₊(A−B) + σ₋(A−B)` (Sum-decomposable).
    pub fn nuclear() -> Self {
        LossFamily::new(
            "nuclear",
            Decomposability::Sum,
            |a, b| {
                let st = delta_stats(a, b);
                st.sigma_plus + st.sigma_minus
            },
            |a, b| (a - b).abs(),
        )
    }
}

/// The three built-in loss families: frobenius, operator, nuclear.
pub fn builtin_losses() -> Vec<LossFamily> {
    vec![
        LossFamily::frobenius(),
        LossFamily::operator(),
        LossFamily::nuclear(),
    ]
}

/// Identifier for a built-in loss, usable where closed forms exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinLoss {
    Frobenius,
    Operator,
    Nuclear,
}

impl BuiltinLoss {
    /// All three built-ins, in the conventional order.
    pub const ALL: [BuiltinLoss; 3] = [
        BuiltinLoss::Frobenius,
        BuiltinLoss::Operator,
        BuiltinLoss::Nuclear,
    ];

    /// Stable string identifier.
    pub fn id(&self) -> &'static str {
        match self {
            BuiltinLoss::Frobenius => "frobenius",
            BuiltinLoss::Operator => "operator",
            BuiltinLoss::Nuclear => "nuclear",
        }
    }

    /// The corresponding [`LossFamily`].
    pub fn family(&self) -> LossFamily {
        match self {
            BuiltinLoss::Frobenius => LossFamily::frobenius(),
            BuiltinLoss::Operator => LossFamily::operator(),
            BuiltinLoss::Nuclear => LossFamily::nuclear(),
        }
    }
}

impl fmt::Display for BuiltinLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for BuiltinLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "frobenius" | "fro" => Ok(BuiltinLoss::Frobenius),
            "operator" | "op" => Ok(BuiltinLoss::Operator),
            "nuclear" | "nuc" => Ok(BuiltinLoss::Nuclear),
            other => Err(Error::InvalidInput(format!(
                "unknown loss '{other}' (expected frobenius, operator, or nuclear)"
            ))),
        }
    }
}
