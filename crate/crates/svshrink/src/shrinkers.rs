//! Scalar shrinkage nonlinearities y ↦ η(y): the closed-form loss-optimal
//! shrinkers for the three built-in losses, baseline rules for comparison,
//! and noise-level recalibration.
//!
//! All shrinkers here are calibrated to the natural convention where the
//! noise multiplier is 1/√n, i.e. data singular values are measured in units
//! of the bulk scale; [`recalibrate`] adapts a shrinker to a different noise
//! level c via η_c(y) = c·η(y/c).

use crate::error::{Error, Result};
use crate::losses::BuiltinLoss;
use crate::solver::TabulatedShrinker;
use crate::spike_model::SpikeModel;

/// Which baseline rule a baseline shrinker implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Pass through singular values above the bulk edge, zero the rest.
    HardThreshold,
    /// Keep every singular value unchanged. Not a proper shrinker: it does
    /// not collapse the noise bulk, so asymptotic dominance claims exclude it.
    Identity,
    /// Map everything to zero.
    Zero,
}

/// Where a shrinker's rule came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Closed-form optimal shrinker for a built-in loss.
    ClosedForm(BuiltinLoss),
    /// Numerically derived lookup table from the optimality framework.
    Tabulated,
    /// Comparison baseline.
    Baseline(BaselineKind),
}

/// The shrinkage rule in natural (σ = 1) calibration.
#[derive(Debug, Clone)]
enum Kernel {
    FrobeniusOpt { beta: f64, edge: f64 },
    OperatorOpt { beta: f64, edge: f64 },
    NuclearOpt { beta: f64, threshold_y: f64 },
    HardThreshold { edge: f64 },
    Identity,
    Zero,
    Tabulated(TabulatedShrinker),
}

impl Kernel {
    fn eval(&self, y: f64) -> f64 {
        match self {
            Kernel::FrobeniusOpt { beta, edge } => {
                if y <= *edge {
                    return 0.0;
                }
                let u = y * y - beta - 1.0;
                // ≥ 0 above the edge; clamp rounding noise at the boundary
                ((u * u - 4.0 * beta).max(0.0)).sqrt() / y
            }
            Kernel::OperatorOpt { beta, edge } => {
                if y <= *edge {
                    return 0.0;
                }
                let u = y * y - beta - 1.0;
                (((u + (u * u - 4.0 * beta).max(0.0).sqrt()) / 2.0).max(0.0)).sqrt()
            }
            Kernel::NuclearOpt { beta, threshold_y } => {
                if y <= *threshold_y {
                    return 0.0;
                }
                let u = y * y - beta - 1.0;
                let x2 = (u + (u * u - 4.0 * beta).max(0.0).sqrt()) / 2.0;
                let x = x2.sqrt();
                // x(c·c̃ − s·s̃) = (x⁴ − β)/(x²·y) − √β/x; tiny negatives at
                // the threshold are rounding noise
                ((x2 * x2 - beta) / (x2 * y) - beta.sqrt() / x).max(0.0)
            }
            Kernel::HardThreshold { edge } => {
                if y > *edge {
                    y
                } else {
                    0.0
                }
            }
            Kernel::Identity => y.max(0.0),
            Kernel::Zero => 0.0,
            Kernel::Tabulated(tab) => tab.eval(y),
        }
    }

    fn threshold_y(&self) -> f64 {
        match self {
            Kernel::FrobeniusOpt { edge, .. }
            | Kernel::OperatorOpt { edge, .. }
            | Kernel::HardThreshold { edge } => *edge,
            Kernel::NuclearOpt { threshold_y, .. } => *threshold_y,
            Kernel::Identity => 0.0,
            Kernel::Zero => f64::INFINITY,
            Kernel::Tabulated(tab) => tab.threshold_y(),
        }
    }
}

/// A shrinkage nonlinearity with its bulk threshold, provenance, and the
/// noise level it is calibrated for.
#[derive(Debug, Clone)]
pub struct Shrinker {
    kernel: Kernel,
    provenance: Provenance,
    /// Noise level this shrinker expects; 1 marks the natural 1/√n
    /// convention. [`recalibrate`] scales it.
    calibration_sigma: f64,
}

impl Shrinker {
    /// Apply the shrinker. Inputs at or below [`threshold_y`](Self::threshold_y)
    /// map to 0; negative inputs (not singular values) also map to 0.
    pub fn eval(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let c = self.calibration_sigma;
        c * self.kernel.eval(y / c)
    }

    /// Largest input collapsed to zero (∞ for the zero shrinker).
    pub fn threshold_y(&self) -> f64 {
        self.calibration_sigma * self.kernel.threshold_y()
    }

    /// Where the rule came from.
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Noise level the shrinker is calibrated for (1 = natural convention).
    pub fn calibration_sigma(&self) -> f64 {
        self.calibration_sigma
    }

    /// Whether this is a proper shrinker relative to `model`: collapses the
    /// whole noise bulk to zero. Only the identity baseline is improper.
    pub fn is_proper(&self, model: &SpikeModel) -> bool {
        self.threshold_y() >= self.calibration_sigma * model.bulk_edge() * (1.0 - 1e-12)
    }

    /// Stable identifier for reports and CLI output.
    pub fn id(&self) -> String {
        match self.provenance {
            Provenance::ClosedForm(loss) => format!("optimal-{}", loss.id()),
            Provenance::Tabulated => "tabulated".to_string(),
            Provenance::Baseline(BaselineKind::HardThreshold) => "hard-threshold".to_string(),
            Provenance::Baseline(BaselineKind::Identity) => "identity".to_string(),
            Provenance::Baseline(BaselineKind::Zero) => "zero".to_string(),
        }
    }

    /// Wrap a numerically derived table as a shrinker (natural calibration).
    pub fn from_tabulated(tab: TabulatedShrinker) -> Shrinker {
        Shrinker {
            kernel: Kernel::Tabulated(tab),
            provenance: Provenance::Tabulated,
            calibration_sigma: 1.0,
        }
    }
}

/// Optimal shrinker for squared Frobenius loss:
/// `η(y) = (1/y)·sqrt((y²−β−1)² − 4β)` above the bulk edge, 0 at or below it.
pub fn frobenius_shrinker(model: &SpikeModel) -> Shrinker {
    Shrinker {
        kernel: Kernel::FrobeniusOpt {
            beta: model.beta(),
            edge: model.bulk_edge(),
        },
        provenance: Provenance::ClosedForm(BuiltinLoss::Frobenius),
        calibration_sigma: 1.0,
    }
}

/// Classical operator-norm shrinker: `η(y) = x(y)` above the bulk edge
/// (shrink each data singular value back to the spike strength that produced
/// it), 0 at or below it. Note the jump at the threshold — the one-sided
/// limit from above is β^(1/4) > 0.
///
/// Caveat: for β < 1 this rule is *not* the exact minimizer of the reduced
/// operator loss. The one-sided derivative of the loss at η = x is strictly
/// positive off the square case, and the true minimizer is (x²+β)/y(x),
/// found by [`crate::solver::optimal_eta`]; the two rules coincide at β = 1
/// and differ by at most β^(1/4) − √β (attained at the critical spike). This
/// function ships the classical form; use the solver to build the exact one.
pub fn operator_shrinker(model: &SpikeModel) -> Shrinker {
    Shrinker {
        kernel: Kernel::OperatorOpt {
            beta: model.beta(),
            edge: model.bulk_edge(),
        },
        provenance: Provenance::ClosedForm(BuiltinLoss::Operator),
        calibration_sigma: 1.0,
    }
}

/// Optimal shrinker for nuclear-norm loss:
/// `η(y) = x·(c·c̃ − s·s̃) = (x⁴−β)/(x²y) − √β/x` where that is positive,
/// 0 otherwise. Its threshold sits strictly above the bulk edge, at the spike
/// strength x₀ where c·c̃ = s·s̃.
pub fn nuclear_shrinker(model: &SpikeModel) -> Shrinker {
    let x0 = nuclear_threshold_x(model);
    Shrinker {
        kernel: Kernel::NuclearOpt {
            beta: model.beta(),
            threshold_y: model.y_of_x(x0).expect("threshold is supercritical"),
        },
        provenance: Provenance::ClosedForm(BuiltinLoss::Nuclear),
        calibration_sigma: 1.0,
    }
}

/// Spike strength x₀ at which the nuclear shrinker starts to act: the root of
/// the increasing function g(x) = x⁴ − β − √β·x·y(x) on [β^(1/4), 2], found
/// by bisection to 1e-12.
pub fn nuclear_threshold_x(model: &SpikeModel) -> f64 {
    let beta = model.beta();
    let g = |x: f64| {
        let y = ((x + 1.0 / x) * (x + beta / x)).sqrt();
        x * x * x * x - beta - beta.sqrt() * x * y
    };
    let mut lo = model.critical_x();
    let mut hi = 2.0;
    debug_assert!(g(lo) <= 0.0 && g(hi) > 0.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form optimal shrinker for a built-in loss.
pub fn optimal_shrinker(model: &SpikeModel, loss: BuiltinLoss) -> Shrinker {
    match loss {
        BuiltinLoss::Frobenius => frobenius_shrinker(model),
        BuiltinLoss::Operator => operator_shrinker(model),
        BuiltinLoss::Nuclear => nuclear_shrinker(model),
    }
}

/// Hard thresholding at the bulk edge: `η(y) = y·1[y > 1+√β]`.
pub fn hard_threshold_shrinker(model: &SpikeModel) -> Shrinker {
    Shrinker {
        kernel: Kernel::HardThreshold {
            edge: model.bulk_edge(),
        },
        provenance: Provenance::Baseline(BaselineKind::HardThreshold),
        calibration_sigma: 1.0,
    }
}

/// The identity rule `η(y) = y`. Not proper — kept only as a baseline.
pub fn identity_shrinker() -> Shrinker {
    Shrinker {
        kernel: Kernel::Identity,
        provenance: Provenance::Baseline(BaselineKind::Identity),
        calibration_sigma: 1.0,
    }
}

/// The all-zero rule `η ≡ 0`.
pub fn zero_shrinker() -> Shrinker {
    Shrinker {
        kernel: Kernel::Zero,
        provenance: Provenance::Baseline(BaselineKind::Zero),
        calibration_sigma: 1.0,
    }
}

/// The three comparison baselines: hard threshold, identity, zero.
pub fn baseline_shrinkers(model: &SpikeModel) -> Vec<Shrinker> {
    vec![
        hard_threshold_shrinker(model),
        identity_shrinker(),
        zero_shrinker(),
    ]
}

/// Adapt a shrinker to noise level `c`: η_c(y) = c·η(y/c). Threshold and
/// calibration scale with c; the rule is otherwise unchanged.
pub fn recalibrate(sh: &Shrinker, c: f64) -> Result<Shrinker> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!(
            "recalibration scale must be positive and finite, got {c}"
        )));
    }
    let mut out = sh.clone();
    out.calibration_sigma *= c;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn model(beta: f64) -> SpikeModel {
        SpikeModel::new(beta).unwrap()
    }

    #[test]
    fn frobenius_known_values() {
        let sh = frobenius_shrinker(&model(1.0));
        assert_abs_diff_eq!(sh.eval(3.0), 5f64.sqrt(), epsilon = 1e-12);
        assert_eq!(sh.eval(2.0), 0.0);
        assert_eq!(sh.eval(0.5), 0.0);
        assert_eq!(sh.threshold_y(), 2.0);

        let sh = frobenius_shrinker(&model(0.25));
        assert_abs_diff_eq!(
            sh.eval(2.3048861143232218),
            1.7083273553219174,
            epsilon = 1e-12
        );
        assert_eq!(sh.threshold_y(), 1.5);
    }

    #[test]
    fn operator_known_values() {
        let sh = operator_shrinker(&model(1.0));
        assert_abs_diff_eq!(sh.eval(3.0), (3.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-12);
        assert_eq!(sh.eval(2.0), 0.0, "boundary belongs to the zero branch");

        let sh = operator_shrinker(&model(0.25));
        assert_abs_diff_eq!(sh.eval(2.3048861143232218), 2.0, epsilon = 1e-12);

        // jump discontinuity: limit from above is β^(1/4)
        let m = model(0.25);
        let sh = operator_shrinker(&m);
        let just_above = m.bulk_edge() + 1e-9;
        assert_abs_diff_eq!(sh.eval(just_above), m.critical_x(), epsilon = 1e-4);
    }

    #[test]
    fn nuclear_known_values() {
        let m = model(1.0);
        let sh = nuclear_shrinker(&m);
        assert_abs_diff_eq!(sh.eval(3.0), 1.8541019662496847, epsilon = 1e-10);
        // boundary: threshold at y₀ = 3/√2 where x₀ = √2 solves x⁴ = β + √β·x·y
        assert_abs_diff_eq!(sh.threshold_y(), 3.0 / 2f64.sqrt(), epsilon = 1e-10);
        assert_eq!(sh.eval(3.0 / 2f64.sqrt()), 0.0);
        assert_eq!(sh.eval(2.05), 0.0, "above bulk edge but below threshold");
        assert_abs_diff_eq!(nuclear_threshold_x(&m), 2f64.sqrt(), epsilon = 1e-11);

        let sh = nuclear_shrinker(&model(0.25));
        assert_abs_diff_eq!(
            sh.eval(2.3048861143232218),
            1.4583273553219174,
            epsilon = 1e-12
        );
        // equals the frobenius value minus √β/x = 0.25 at this point
        assert_abs_diff_eq!(
            sh.eval(2.3048861143232218),
            1.7083273553219174 - 0.25,
            epsilon = 1e-12
        );
    }

    #[test]
    fn nuclear_threshold_geometry() {
        // At x₀ the alignment satisfies c·c̃ = s·s̃, and x₀ ≥ β^(1/4).
        for beta in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0] {
            let m = model(beta);
            let x0 = nuclear_threshold_x(&m);
            assert!(x0 >= m.critical_x());
            let cos = m.cosines(x0).unwrap();
            assert_abs_diff_eq!(
                cos.c * cos.c_tilde,
                cos.s * cos.s_tilde,
                epsilon = 1e-10
            );
        }
        // frozen spot value
        let x0 = nuclear_threshold_x(&model(0.5));
        assert_abs_diff_eq!(x0, 1.1931726827796287, epsilon = 1e-10);
        let y0 = model(0.5).y_of_x(x0).unwrap();
        assert_abs_diff_eq!(y0, 1.809659703615902, epsilon = 1e-10);
    }

    #[test]
    fn baselines() {
        let m = model(1.0);
        let all = baseline_shrinkers(&m);
        assert_eq!(all.len(), 3);
        let hard = &all[0];
        let ident = &all[1];
        let zero = &all[2];

        assert_eq!(hard.eval(3.0), 3.0);
        assert_eq!(hard.eval(1.9), 0.0);
        assert_eq!(hard.eval(2.0), 0.0);
        assert!(hard.is_proper(&m));

        assert_eq!(ident.eval(1.234), 1.234);
        assert!(!ident.is_proper(&m), "identity keeps the bulk");

        for y in [0.0, 1.0, 5.0, 100.0] {
            assert_eq!(zero.eval(y), 0.0);
        }
        assert!(zero.is_proper(&m));
        assert_eq!(zero.threshold_y(), f64::INFINITY);
    }

    #[test]
    fn recalibration() {
        let m = model(1.0);
        let sh = frobenius_shrinker(&m);

        let same = recalibrate(&sh, 1.0).unwrap();
        for y in [0.5, 2.0, 3.0, 7.5] {
            assert_eq!(same.eval(y), sh.eval(y));
        }
        assert_eq!(same.calibration_sigma(), 1.0);

        let doubled = recalibrate(&sh, 2.0).unwrap();
        assert_abs_diff_eq!(doubled.eval(6.0), 2.0 * 5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(doubled.eval(6.0), 4.47213595499958, epsilon = 1e-10);
        assert_eq!(doubled.threshold_y(), 4.0);
        assert_eq!(doubled.calibration_sigma(), 2.0);
        // composition: recalibrating twice multiplies the scales
        let tripled = recalibrate(&doubled, 1.5).unwrap();
        assert_eq!(tripled.calibration_sigma(), 3.0);

        let zero = zero_shrinker();
        let scaled = recalibrate(&zero, 5.0).unwrap();
        for y in [0.1, 2.0, 50.0] {
            assert_eq!(scaled.eval(y), 0.0);
        }

        assert!(recalibrate(&sh, 0.0).is_err());
        assert!(recalibrate(&sh, -2.0).is_err());
    }

    #[test]
    fn ordering_nuclear_frobenius_operator() {
        for beta in [0.1, 0.35, 0.6, 0.85, 1.0] {
            let m = model(beta);
            let fro = frobenius_shrinker(&m);
            let op = operator_shrinker(&m);
            let nuc = nuclear_shrinker(&m);
            let edge = m.bulk_edge();
            for i in 1..=300 {
                let y = edge + i as f64 * (10.0 - edge) / 300.0;
                let (f, o, n) = (fro.eval(y), op.eval(y), nuc.eval(y));
                assert!(n <= f + 1e-12, "nuc {n} > fro {f} at beta={beta} y={y}");
                assert!(f <= o + 1e-12, "fro {f} > op {o} at beta={beta} y={y}");
            }
        }
    }

    #[test]
    fn properness_and_asymptote() {
        for beta in [0.1, 0.5, 1.0] {
            let m = model(beta);
            for sh in [
                frobenius_shrinker(&m),
                operator_shrinker(&m),
                nuclear_shrinker(&m),
            ] {
                assert!(sh.is_proper(&m));
                // collapse the bulk, stay below the identity line
                for i in 0..=400 {
                    let y = 12.0 * i as f64 / 400.0;
                    let eta = sh.eval(y);
                    assert!(eta >= 0.0);
                    assert!(eta <= y + 1e-12, "{}: eta {eta} > y {y}", sh.id());
                    if y <= m.bulk_edge() {
                        assert_eq!(eta, 0.0, "{}: bulk not collapsed at y={y}", sh.id());
                    }
                }
                // asymptote to the identity
                let big = 1e4;
                assert!((sh.eval(big) / big - 1.0).abs() < 1e-6, "{}", sh.id());
            }
        }
    }

    #[test]
    fn ids_and_provenance() {
        let m = model(0.5);
        assert_eq!(frobenius_shrinker(&m).id(), "optimal-frobenius");
        assert_eq!(operator_shrinker(&m).id(), "optimal-operator");
        assert_eq!(nuclear_shrinker(&m).id(), "optimal-nuclear");
        assert_eq!(hard_threshold_shrinker(&m).id(), "hard-threshold");
        assert_eq!(identity_shrinker().id(), "identity");
        assert_eq!(zero_shrinker().id(), "zero");
        assert_eq!(
            operator_shrinker(&m).provenance(),
            Provenance::ClosedForm(BuiltinLoss::Operator)
        );
    }
}
