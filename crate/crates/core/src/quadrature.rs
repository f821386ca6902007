//! Adaptive Gauss–Kronrod (7/15) integration on finite intervals.

use crate::sum::CompensatedSum;
use crate::{Error, Real, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureControl<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for QuadratureControl<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::c(1e-14),
            rel_tol: T::c(1e-10).max(T::epsilon() * T::c(50.0)),
            max_intervals: 2000,
        }
    }
}

/// Integral value with its absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
}

#[derive(Clone, Copy)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn kronrod<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> Segment<T> {
    let center = T::c(0.5) * (a + b);
    let half = T::c(0.5) * (b - a);
    let fc = f(center);
    let mut kron = fc * T::c(WGK[7]);
    let mut gauss = fc * T::c(WG[3]);
    for j in 0..7 {
        let dx = half * T::c(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kron = kron + pair * T::c(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * T::c(WG[j / 2]);
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs();
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]`, bisecting the worst subinterval until the
/// summed error estimate meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    control: &QuadratureControl<T>,
) -> Result<Estimate<T>> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NumericDomain("integration limits must be finite"));
    }
    if a == b {
        return Ok(Estimate {
            value: T::zero(),
            error: T::zero(),
        });
    }
    let mut segments = vec![kronrod(&mut f, a, b)];
    loop {
        let mut value = CompensatedSum::new();
        let mut error = T::zero();
        for s in &segments {
            value.add(s.value);
            error = error + s.error;
        }
        let value = value.value();
        if !value.is_finite() {
            return Err(Error::NumericDomain("integrand is not finite"));
        }
        if error <= control.abs_tol.max(control.rel_tol * value.abs()) {
            return Ok(Estimate { value, error });
        }
        if segments.len() >= control.max_intervals {
            return Err(Error::Quadrature {
                intervals: segments.len(),
                error: error.f64(),
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty");
        let s = segments.swap_remove(worst);
        let mid = T::c(0.5) * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // Interval exhausted at machine precision; accept what we have.
            segments.push(s);
            return Ok(Estimate { value, error });
        }
        segments.push(kronrod(&mut f, s.a, mid));
        segments.push(kronrod(&mut f, mid, s.b));
    }
}

/// Sum of [`integrate`] over consecutive breakpoints.
pub fn integrate_pieces<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    breakpoints: &[T],
    control: &QuadratureControl<T>,
) -> Result<Estimate<T>> {
    let mut value = CompensatedSum::new();
    let mut error = T::zero();
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            let e = integrate(&mut f, w[0], w[1], control)?;
            value.add(e.value);
            error = error + e.error;
        }
    }
    Ok(Estimate {
        value: value.value(),
        error,
    })
}
