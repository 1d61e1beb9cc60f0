//! Asymptotic spectrum maps for the spiked low-rank model.
//!
//! A rank-r signal observed in white noise at aspect ratio β = m/n produces,
//! in the large-n limit, data singular values and singular-vector rotations
//! that depend on each signal singular value ("spike") x through closed-form
//! maps: the spike location y(x), its inverse x(y), and the alignment cosines
//! between signal and data singular vectors. Spikes at or below the critical
//! strength β^(1/4) are absorbed by the noise bulk, whose upper edge sits at
//! 1 + √β.
//!
//! All quantities here are asymptotic; no finite-n corrections are applied.
//! The cosine formulas assume nondegenerate spikes (each value occurring
//! once); for repeated spikes the per-x values are still returned, but the
//! limiting joint geometry of the corresponding singular vectors is not
//! covered by this model.

use crate::error::{Error, Result};

/// Relative slack for domain checks at the critical point / bulk edge, so
/// values that are mathematically *on* the boundary but one or two ulp below
/// it after a round trip are not rejected.
const EDGE_SLACK: f64 = 1e-12;

/// Fixed aspect ratio β and every spectral map derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeModel {
    beta: f64,
}

/// Alignment cosines (and complementary sines) between the signal and data
/// singular vectors of a supercritical spike: `c` for the left vectors,
/// `c_tilde` for the right vectors.
#[derive(Debug, Clone, Copy)]
pub struct SpikeCosines {
    /// Left singular-vector cosine, in [0, 1].
    pub c: f64,
    /// Left sine, `sqrt(1 - c^2)`.
    pub s: f64,
    /// Right singular-vector cosine, in [0, 1]; `c_tilde <= c` for β ≤ 1.
    pub c_tilde: f64,
    /// Right sine, `sqrt(1 - c_tilde^2)`.
    pub s_tilde: f64,
}

impl SpikeModel {
    /// Build a model for aspect ratio `beta`; requires `0 < beta <= 1`
    /// (rows-to-columns ratio of the tall-or-square normalized matrix).
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) || !beta.is_finite() {
            return Err(Error::Domain(format!(
                "aspect ratio beta must satisfy 0 < beta <= 1, got {beta}"
            )));
        }
        Ok(SpikeModel { beta })
    }

    /// The aspect ratio β.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Upper edge 1 + √β of the noise bulk in the data singular spectrum.
    pub fn bulk_edge(&self) -> f64 {
        1.0 + self.beta.sqrt()
    }

    /// Critical spike strength β^(1/4): spikes at or below it do not separate
    /// from the bulk. Computed as exp(ln β / 4).
    pub fn critical_x(&self) -> f64 {
        (self.beta.ln() / 4.0).exp()
    }

    /// Asymptotic data singular value produced by a spike of strength `x`:
    /// `sqrt((x + 1/x)(x + β/x))`. Strictly increasing on `x >= β^(1/4)`,
    /// mapping the critical point to the bulk edge.
    pub fn y_of_x(&self, x: f64) -> Result<f64> {
        self.check_supercritical(x, "spike strength x")?;
        Ok(((x + 1.0 / x) * (x + self.beta / x)).sqrt())
    }

    /// Inverse of [`y_of_x`](Self::y_of_x): the spike strength whose
    /// asymptotic data singular value is `y`. Requires `y >= 1 + √β`.
    pub fn x_of_y(&self, y: f64) -> Result<f64> {
        let edge = self.bulk_edge();
        if !(y >= edge * (1.0 - EDGE_SLACK)) {
            return Err(Error::Domain(format!(
                "data singular value y = {y} is below the bulk edge {edge}"
            )));
        }
        // The inverse map has an infinite derivative at the bulk edge, so a
        // y within rounding noise of the edge carries no usable information
        // beyond "critical": snapping there keeps x_of_y(bulk_edge())
        // exactly β^(1/4) instead of off by ~sqrt(ulp).
        if y <= edge * (1.0 + 4e-15) {
            return Ok(self.critical_x());
        }
        let u = y * y - self.beta - 1.0; // >= 2*sqrt(beta) > 0 on the domain
        let mut disc = u * u - 4.0 * self.beta;
        if disc < 0.0 {
            // Tiny negatives just above the snap band are rounding noise;
            // anything larger means the caller is far outside the domain.
            if disc >= -1e-9 {
                disc = 0.0;
            } else {
                return Err(Error::Domain(format!(
                    "y = {y} leaves (y^2-beta-1)^2 - 4*beta negative ({disc:e})"
                )));
            }
        }
        Ok(((u + disc.sqrt()) / 2.0).sqrt())
    }

    /// Asymptotic singular-vector alignment cosines for a supercritical spike:
    /// `c = sqrt((x^4-β)/(x^4+βx^2))`, `c̃ = sqrt((x^4-β)/(x^4+x^2))`, with
    /// `s, s̃` the complementary sines. At the critical point the cosines
    /// vanish (the singular vectors decorrelate completely).
    pub fn cosines(&self, x: f64) -> Result<SpikeCosines> {
        self.check_supercritical(x, "spike strength x")?;
        let x2 = x * x;
        let x4 = x2 * x2;
        // At x = β^(1/4) the numerator is 0 up to rounding; clamp the noise.
        let num = (x4 - self.beta).max(0.0);
        let c = (num / (x4 + self.beta * x2)).sqrt().min(1.0);
        let c_tilde = (num / (x4 + x2)).sqrt().min(1.0);
        Ok(SpikeCosines {
            c,
            s: (1.0 - c * c).max(0.0).sqrt(),
            c_tilde,
            s_tilde: (1.0 - c_tilde * c_tilde).max(0.0).sqrt(),
        })
    }

    fn check_supercritical(&self, x: f64, what: &str) -> Result<()> {
        let crit = self.critical_x();
        if !(x > 0.0) || x < crit * (1.0 - EDGE_SLACK) {
            return Err(Error::Domain(format!(
                "{what} = {x} is below the critical point beta^(1/4) = {crit}"
            )));
        }
        Ok(())
    }
}
