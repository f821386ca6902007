use crate::specfun::SeriesControl;
use crate::sum::CompensatedSum;
use crate::{Error, Real, Result};

/// Gauss hypergeometric function `₂F₁(a, b; c; z)` for real `z < 1`.
///
/// See [`gauss_2f1_scaled`] for the evaluation strategy.
pub fn gauss_2f1<T: Real>(a: T, b: T, c: T, z: T, control: &SeriesControl<T>) -> Result<T> {
    let (ln_scale, value) = gauss_2f1_scaled(a, b, c, z, control)?;
    Ok(ln_scale.exp() * value)
}

/// `₂F₁(a, b; c; z)` returned as `(ln_scale, value)` with the result equal to
/// `exp(ln_scale) · value`.
///
/// Negative `z` is mapped into `(0, 1)` by one of the two Pfaff
/// transformations; the one giving a terminating or positive-term series is
/// preferred. Terminating series with argument above ½ are reflected to
/// `1 − w` to avoid cancellation. The split form lets callers multiply by
/// tiny prefactors without intermediate underflow.
pub fn gauss_2f1_scaled<T: Real>(a: T, b: T, c: T, z: T, control: &SeriesControl<T>) -> Result<(T, T)> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(
            "2F1 numerator parameter",
            if a.is_finite() { b } else { a },
        ));
    }
    if !c.is_finite() || nonpositive_integer(c).is_some() {
        return Err(Error::domain("2F1 denominator parameter", c));
    }
    if !(z < T::one()) || !z.is_finite() {
        return Err(Error::domain("2F1 argument", z));
    }
    if z == T::zero() || a == T::zero() || b == T::zero() {
        return Ok((T::zero(), T::one()));
    }

    if z > T::zero() {
        return series(a, b, c, z, control);
    }

    // Pfaff: F(a,b;c;z) = (1−z)^{−a} F(a, c−b; c; w) = (1−z)^{−b} F(c−a, b; c; w)
    let w = z / (z - T::one());
    let ln_1mz = (-z).ln_1p();
    let candidates = [(a, c - b, -a * ln_1mz), (c - a, b, -b * ln_1mz)];
    let (pa, pb, ln_pre) = candidates
        .into_iter()
        .min_by_key(|&(pa, pb, _)| rank(pa, pb, c, w))
        .expect("two candidates");
    let (ln_scale, value) = series(pa, pb, c, w, control)?;
    Ok((ln_scale + ln_pre, value))
}

fn nonpositive_integer<T: Real>(x: T) -> Option<usize> {
    if x <= T::zero() && x == x.round() {
        (-x).to_usize()
    } else {
        None
    }
}

fn terminating_order<T: Real>(a: T, b: T) -> Option<(usize, T)> {
    match (nonpositive_integer(a), nonpositive_integer(b)) {
        (Some(n), Some(m)) if m < n => Some((m, a)),
        (Some(n), _) => Some((n, b)),
        (None, Some(m)) => Some((m, a)),
        (None, None) => None,
    }
}

// Parameter of the reflected series, if the reflection is well defined.
fn reflected_denominator<T: Real>(b: T, c: T, n: usize) -> Option<T> {
    let d = b - c - T::from_usize_lossy(n) + T::one();
    match nonpositive_integer(d) {
        Some(k) if k < n => None,
        _ => Some(d),
    }
}

// Lower is better.
fn rank<T: Real>(a: T, b: T, c: T, w: T) -> u8 {
    if let Some((n, other)) = terminating_order(a, b) {
        if reflected_denominator(other, c, n).is_some() || w <= T::c(0.5) || n <= 1 {
            return 0;
        }
        return 2;
    }
    if a > T::zero() && b > T::zero() && c > T::zero() {
        1
    } else {
        3
    }
}

fn series<T: Real>(a: T, b: T, c: T, w: T, control: &SeriesControl<T>) -> Result<(T, T)> {
    if let Some((n, other)) = terminating_order(a, b) {
        if n > control.max_terms {
            return Err(Error::SeriesTruncation {
                terms: control.max_terms,
                last_term: f64::NAN,
            });
        }
        let (direct, direct_mag) = finite_sum(a, b, c, w, n);
        if let Some(d) = reflected_denominator(other, c, n) {
            // F(−n,b;c;w) = (c−b)_n/(c)_n · F(−n, b; b−c−n+1; 1−w); keep whichever
            // form loses fewer digits to cancellation.
            let mut ln_mag = T::zero();
            let mut sign = T::one();
            for j in 0..n {
                let j = T::from_usize_lossy(j);
                let num = c - other + j;
                let den = c + j;
                if num == T::zero() {
                    return Ok((T::zero(), T::zero()));
                }
                ln_mag = ln_mag + num.abs().ln() - den.abs().ln();
                sign = sign * num.signum() * den.signum();
            }
            let neg_n = -T::from_usize_lossy(n);
            let (refl, refl_mag) = finite_sum(neg_n, other, d, T::one() - w, n);
            if refl_mag / refl.abs() < direct_mag / direct.abs() {
                return Ok((ln_mag, sign * refl));
            }
        }
        return Ok((T::zero(), direct));
    }

    let mut sum = CompensatedSum::new();
    let mut term = T::one();
    sum.add(term);
    for k in 0..control.max_terms {
        let kf = T::from_usize_lossy(k);
        let ratio = (a + kf) * (b + kf) / ((c + kf) * (kf + T::one())) * w;
        term = term * ratio;
        sum.add(term);
        // Past the transient the term ratio moves monotonically toward w, so
        // max(r, |w|) bounds every later ratio and the tail is geometric.
        let r = ratio.abs().max(w.abs());
        let settled = kf + T::one() > (a.abs() + b.abs() + c.abs()) * T::c(2.0);
        if settled && r < T::one() {
            let tail = term.abs() * r / (T::one() - r);
            if tail <= control.rel_tol * sum.value().abs() {
                return Ok((T::zero(), sum.value()));
            }
        }
    }
    Err(Error::SeriesTruncation {
        terms: control.max_terms,
        last_term: term.f64(),
    })
}

// Returns the sum and the sum of term magnitudes.
fn finite_sum<T: Real>(a: T, b: T, c: T, w: T, n: usize) -> (T, T) {
    let mut sum = CompensatedSum::new();
    let mut term = T::one();
    let mut magnitude = T::one();
    sum.add(term);
    for k in 0..n {
        let kf = T::from_usize_lossy(k);
        term = term * (a + kf) * (b + kf) / ((c + kf) * (kf + T::one())) * w;
        sum.add(term);
        magnitude = magnitude + term.abs();
    }
    (sum.value(), magnitude)
}
