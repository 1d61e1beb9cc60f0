//! Noise-level estimation for denoising with unknown σ.
//!
//! The singular-value bulk of pure white noise follows the Marchenko–Pastur
//! law; in particular the median of the squared singular values of Z/√n
//! converges to the MP median μ_β. Inverting that relation on the observed
//! median singular value gives a noise-level estimator that is robust to a
//! handful of signal spikes: `sigma_hat = y_med / sqrt(n · μ_β)`.
//!
//! μ_β has no closed form for β < 1; it is computed here by bisecting the
//! quadrature CDF of the MP density and memoized per (β, tolerance).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::util;

/// Absolute quadrature tolerance used for every CDF evaluation.
const QUAD_TOL: f64 = 1e-10;

/// Marchenko–Pastur distribution of squared singular values at aspect
/// ratio β, supported on [(1−√β)², (1+√β)²].
#[derive(Debug, Clone, Copy)]
pub struct MpDistribution {
    beta: f64,
    lower: f64,
    upper: f64,
}

impl MpDistribution {
    /// Build the distribution for `beta` in (0, 1].
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::Domain(format!(
                "aspect ratio beta = {beta} must lie in (0, 1]"
            )));
        }
        let sq = beta.sqrt();
        Ok(MpDistribution {
            beta,
            lower: (1.0 - sq) * (1.0 - sq),
            upper: (1.0 + sq) * (1.0 + sq),
        })
    }

    /// Aspect ratio β.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Support endpoints `((1−√β)², (1+√β)²)`.
    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    /// Density `p(t) = sqrt((b−t)(t−a)) / (2πβt)` inside the open support,
    /// 0 outside and at the endpoints. (For β = 1 the true density diverges
    /// at the lower endpoint; single points do not affect the quadrature,
    /// which removes the singularity by substitution.)
    pub fn density(&self, t: f64) -> f64 {
        if t <= self.lower || t >= self.upper {
            return 0.0;
        }
        (self.upper - t).sqrt() * (t - self.lower).sqrt() / (2.0 * PI * self.beta * t)
    }

    /// CDF at `t` by adaptive Simpson quadrature after the substitution
    /// `t = a + (b−a)·sin²θ`, which removes both square-root endpoint
    /// singularities (and, at β = 1, the 1/t pole at the lower endpoint).
    pub fn cdf(&self, t: f64, tol: f64) -> f64 {
        let (a, b) = (self.lower, self.upper);
        if t <= a {
            return 0.0;
        }
        let frac = ((t - a) / (b - a)).min(1.0);
        let theta_hi = frac.sqrt().asin();
        let width = b - a;
        let beta = self.beta;
        // After substitution the integrand is
        //   (b−a)·cos²θ/(πβ) · [(b−a)sin²θ / t(θ)],
        // where the bracket equals (t−a)/t and tends to 1 as θ→0 when a=0.
        let integrand = |theta: f64| {
            let s2 = theta.sin().powi(2);
            let t = a + width * s2;
            let ratio = if t > 0.0 { width * s2 / t } else { 1.0 };
            width * theta.cos().powi(2) * ratio / (PI * beta)
        };
        adaptive_simpson(&integrand, 0.0, theta_hi, tol)
    }

    /// Median by bisection of the CDF to interval width `tol`. The
    /// quadrature runs an order of magnitude tighter than `tol` (capped at
    /// the module default) so the bisection, not the integration, limits
    /// the accuracy actually delivered.
    pub fn median(&self, tol: f64) -> f64 {
        let quad_tol = (0.1 * tol).min(QUAD_TOL);
        let (mut lo, mut hi) = (self.lower, self.upper);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid, quad_tol) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

// ─── adaptive Simpson quadrature ─────────────────────────────────────────────

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        // Richardson extrapolation: Simpson's error shrinks 16-fold per halving.
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

// ─── median cache ────────────────────────────────────────────────────────────

fn median_cache() -> &'static RwLock<HashMap<(u64, u64), f64>> {
    static CACHE: OnceLock<RwLock<HashMap<(u64, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// The Marchenko–Pastur median μ_β, bisected to width `tol` and memoized
/// per (β, tol). Concurrent callers may race to compute a fresh value; the
/// computation is deterministic, so whichever insertion wins is identical.
pub fn mp_median(beta: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "median tolerance must be positive, got {tol}"
        )));
    }
    let dist = MpDistribution::new(beta)?;
    let key = (beta.to_bits(), tol.to_bits());
    if let Some(&hit) = median_cache().read().expect("cache poisoned").get(&key) {
        return Ok(hit);
    }
    let value = dist.median(tol);
    median_cache()
        .write()
        .expect("cache poisoned")
        .insert(key, value);
    Ok(value)
}

/// Robust noise-level estimator: `y_med / sqrt(n · μ_β)`, where `y_med` is
/// the median of the supplied singular values (mean of the two middle order
/// statistics for even length).
///
/// The input need not be sorted; values must be finite and nonnegative, the
/// vector nonempty, and `n` at least its length. A few signal spikes among
/// the singular values barely move the median, which is what makes the
/// estimator usable on spiked data.
pub fn sigma_hat(singular_values: &[f64], n: usize, beta: f64) -> Result<f64> {
    if singular_values.is_empty() {
        return Err(Error::InvalidInput(
            "sigma_hat needs at least one singular value".to_string(),
        ));
    }
    if n < singular_values.len() {
        return Err(Error::InvalidInput(format!(
            "n = {n} is smaller than the number of singular values {}",
            singular_values.len()
        )));
    }
    if let Some(bad) = singular_values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "singular values must be finite and nonnegative, got {bad}"
        )));
    }
    let y_med = util::median(singular_values).expect("nonempty by check above");
    let mu = mp_median(beta, 1e-10)?;
    Ok(y_med / (n as f64 * mu).sqrt())
}
