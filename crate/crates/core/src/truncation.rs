//! Truncation functions ψ and the empirical risks built on them.
//!
//! For a moment order θ ∈ (1, 2] the truncation is
//!
//! ```text
//! ψ(x) = −ln(1 − x + x^θ/θ)   for 0 ≤ x ≤ 1
//! ψ(x) = ln θ                 for x ≥ 1
//! ψ(−x) = −ψ(x)
//! ```
//!
//! θ = 2 is the second-moment variant (saturation ln 2). The truncated
//! empirical risk `(1/(nι)) Σ ψ(ι·|yᵢ − ⟨xᵢ, w⟩|)` changes by at most
//! `2·saturation/(nι)` when one record is replaced, whatever the data.

use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{param, Result};
use crate::stats::compensated_sum;

/// Absolute tolerance of [`sandwich_check`].
pub const SANDWICH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Variant {
    SecondMoment,
    ThetaMoment,
}

/// Choice of ψ together with the scale ι.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TruncationSpec {
    variant: Variant,
    theta: f64,
    iota: f64,
}

impl TruncationSpec {
    pub fn second_moment(iota: f64) -> Result<Self> {
        check_iota(iota)?;
        Ok(Self {
            variant: Variant::SecondMoment,
            theta: 2.0,
            iota,
        })
    }

    /// θ-moment variant; θ must lie in the open interval (1, 2).
    pub fn theta_moment(theta: f64, iota: f64) -> Result<Self> {
        if !(theta > 1.0 && theta < 2.0) {
            return Err(param(alloc::format!("theta must lie in (1, 2), got {theta}")));
        }
        check_iota(iota)?;
        Ok(Self {
            variant: Variant::ThetaMoment,
            theta,
            iota,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Moment order; 2 for the second-moment variant.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn iota(&self) -> f64 {
        self.iota
    }

    /// `sup |ψ| = ψ(1) = ln θ`.
    pub fn saturation(&self) -> f64 {
        match self.variant {
            Variant::SecondMoment => core::f64::consts::LN_2,
            Variant::ThetaMoment => libm::log(self.theta),
        }
    }

    pub fn with_iota(&self, iota: f64) -> Result<Self> {
        check_iota(iota)?;
        Ok(Self { iota, ..*self })
    }

    /// `|x|^θ/θ`.
    #[inline]
    fn power_term(&self, ax: f64) -> f64 {
        match self.variant {
            Variant::SecondMoment => 0.5 * ax * ax,
            Variant::ThetaMoment if ax == 0.0 => 0.0,
            Variant::ThetaMoment if self.theta == 1.5 => ax * libm::sqrt(ax) / 1.5,
            Variant::ThetaMoment => libm::exp(self.theta * libm::log(ax)) / self.theta,
        }
    }
}

fn check_iota(iota: f64) -> Result<()> {
    if !(iota > 0.0 && iota.is_finite()) {
        return Err(param(alloc::format!("iota must be positive and finite, got {iota}")));
    }
    Ok(())
}

/// ψ(x) for the variant in `spec` (ι is not applied).
#[inline]
pub fn psi(spec: &TruncationSpec, x: f64) -> f64 {
    let ax = libm::fabs(x);
    let v = if ax >= 1.0 {
        spec.saturation()
    } else {
        -libm::log1p(spec.power_term(ax) - ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `(1/(nι)) Σ ψ(ι·|yᵢ − ⟨xᵢ, w⟩|)`.
pub fn truncated_empirical_risk(w: &[f64], data: &Dataset, spec: &TruncationSpec) -> Result<f64> {
    data.check_dim(w.len())?;
    let iota = spec.iota;
    let total = compensated_sum(
        (0..data.len()).map(|i| psi(spec, iota * libm::fabs(data.residual(i, w)))),
    );
    Ok(total / (data.len() as f64 * iota))
}

/// `(1/n) Σ |yᵢ − ⟨xᵢ, w⟩|`.
pub fn l1_empirical_risk(w: &[f64], data: &Dataset) -> Result<f64> {
    data.check_dim(w.len())?;
    let total = compensated_sum((0..data.len()).map(|i| libm::fabs(data.residual(i, w))));
    Ok(total / data.len() as f64)
}

/// Outcome of [`sandwich_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sandwich {
    Pass,
    Fail {
        x: f64,
        lower: f64,
        value: f64,
        upper: f64,
    },
}

impl Sandwich {
    pub fn passed(&self) -> bool {
        matches!(self, Sandwich::Pass)
    }
}

/// Checks `−ln(1 − x + |x|^θ/θ) ≤ ψ(x) ≤ ln(1 + x + |x|^θ/θ)` on every grid
/// point, within [`SANDWICH_TOL`].
pub fn sandwich_check(spec: &TruncationSpec, grid: &[f64]) -> Result<Sandwich> {
    if grid.is_empty() {
        return Err(param("sandwich grid must be nonempty"));
    }
    for &x in grid {
        if !x.is_finite() {
            return Err(param("sandwich grid must be finite"));
        }
        let p = spec.power_term(libm::fabs(x));
        let below = 1.0 - x + p;
        let above = 1.0 + x + p;
        // min over x of 1 − x + |x|^θ/θ is 1/θ ≥ 1/2.
        assert!(below > 0.0 && above > 0.0, "log argument must stay positive");
        let lower = -libm::log(below);
        let upper = libm::log(above);
        let value = psi(spec, x);
        if value < lower - SANDWICH_TOL || value > upper + SANDWICH_TOL {
            return Ok(Sandwich::Fail {
                x,
                lower,
                value,
                upper,
            });
        }
    }
    Ok(Sandwich::Pass)
}

/// Evenly spaced grid of `count ≥ 2` points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let last = (count.max(2) - 1) as f64;
    (0..count.max(2))
        .map(|k| lo + (hi - lo) * (k as f64 / last))
        .collect()
}
