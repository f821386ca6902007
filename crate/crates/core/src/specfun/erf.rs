use crate::{Error, Real, Result};

const MAX_ITER: usize = 500;

/// Complementary error function.
///
/// Below `x = 2` the positive-term series for `erf` is used and complemented;
/// above, Laplace's continued fraction for `erfc` is evaluated with Lentz's
/// method so the tail keeps full relative precision.
pub fn erfc<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x < T::zero() {
        return T::c(2.0) - erfc(-x);
    }
    if x < T::c(2.0) {
        T::one() - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

// erf(x) = 2/√π · e^{-x²} · Σ 2ⁿ x^{2n+1} / (2n+1)!!
fn erf_series<T: Real>(x: T) -> T {
    let two_x2 = T::c(2.0) * x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..MAX_ITER {
        term = term * two_x2 / T::from_usize_lossy(2 * n + 1);
        sum = sum + term;
        if term <= sum * T::epsilon() {
            break;
        }
    }
    T::FRAC_2_SQRT_PI() * (-x * x).exp() * sum
}

fn erfc_continued_fraction<T: Real>(x: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    // F = x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))
    let mut f = x;
    let mut c = x;
    let mut d = T::zero();
    for n in 1..MAX_ITER {
        let a = T::from_usize_lossy(n) * T::c(0.5);
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = d.recip();
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    (-x * x).exp() / (T::PI().sqrt() * f)
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_func<T: Real>(x: T) -> T {
    T::c(0.5) * erfc(x / T::SQRT_2())
}

/// Standard normal density.
pub fn gaussian_pdf<T: Real>(x: T) -> T {
    (-T::c(0.5) * x * x).exp() / (T::c(2.0) * T::PI()).sqrt()
}

/// Inverse of [`q_func`] on `(0, 1)`.
///
/// Safeguarded Newton iteration on `ln Q(x) − ln p`, seeded by a rational
/// approximation and kept inside a shrinking bisection bracket.
pub fn q_inv<T: Real>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::domain("q_inv argument", p));
    }
    let half = T::c(0.5);
    if p == half {
        return Ok(T::zero());
    }
    if p > half {
        return q_inv(T::one() - p).map(|x| -x);
    }

    let target = p.ln();
    let t = (-T::c(2.0) * target).sqrt();
    let num = T::c(2.515517) + t * (T::c(0.802853) + t * T::c(0.010328));
    let den = T::one() + t * (T::c(1.432788) + t * (T::c(0.189269) + t * T::c(0.001308)));
    let mut x = (t - num / den).max(T::zero());

    let mut lo = T::zero();
    let mut hi = T::c(40.0);
    let tol = T::c(1e-15).max(T::epsilon());
    for _ in 0..200 {
        let q = q_func(x);
        if q > p {
            lo = x;
        } else {
            hi = x;
        }
        let g = q.ln() - target;
        let slope = -gaussian_pdf(x) / q;
        let mut next = x - g / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = half * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= tol * x.abs().max(T::one()) || hi - lo <= tol * hi {
            break;
        }
    }
    Ok(x)
}
