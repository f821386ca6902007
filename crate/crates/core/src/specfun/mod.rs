//! Special-function kernel behind every closed-form expression.
//!
//! Everything here is a pure function of its arguments. The regularized
//! incomplete gamma pair is evaluated in the log domain so block lengths in
//! the thousands do not overflow `Γ(N)`.

mod bessel;
mod erf;
mod gamma;
mod hyp2f1;

pub use bessel::{bessel_i0, bessel_i0_scaled, ln_bessel_i0};
pub use erf::{erfc, gaussian_pdf, q_func, q_inv};
pub use gamma::{ln_factorial, ln_gamma, ln_upper_gamma_reg, lower_gamma_reg, upper_gamma_reg};
pub use hyp2f1::{gauss_2f1, gauss_2f1_scaled};

#[allow(unused_imports)]
pub(crate) use gamma::{gamma_reg_continued_fraction, gamma_reg_series};

use crate::{Error, Real, Result};

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Probability<T>(T);

impl<T: Real> Probability<T> {
    pub fn new(value: T) -> Result<Self> {
        if value >= T::zero() && value <= T::one() {
            Ok(Self(value))
        } else {
            Err(Error::domain("probability", value))
        }
    }

    /// Clamps into `[0, 1]`, returning how far outside the input was.
    pub fn clamped(value: T) -> (Self, T) {
        if value.is_nan() {
            return (Self(T::zero()), T::infinity());
        }
        let v = value.max(T::zero()).min(T::one());
        (Self(v), (value - v).abs())
    }

    pub fn zero() -> Self {
        Self(T::zero())
    }

    pub fn one() -> Self {
        Self(T::one())
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// Truncation policy for the infinite series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl<T> {
    pub max_terms: usize,
    pub rel_tol: T,
}

impl<T: Real> SeriesControl<T> {
    pub fn new(max_terms: usize, rel_tol: T) -> Result<Self> {
        if max_terms == 0 {
            return Err(Error::domain("max_terms", 0));
        }
        if !(rel_tol > T::zero()) {
            return Err(Error::domain("rel_tol", rel_tol));
        }
        Ok(Self { max_terms, rel_tol })
    }
}

impl<T: Real> Default for SeriesControl<T> {
    /// 10⁴ terms, relative tolerance 1e-12 (or a few ulps for `f32`).
    fn default() -> Self {
        Self {
            max_terms: 10_000,
            rel_tol: T::c(1e-12).max(T::epsilon() * T::c(4.0)),
        }
    }
}
