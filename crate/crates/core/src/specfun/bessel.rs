use crate::Real;

const SERIES_LIMIT: f64 = 30.0;

/// `e^{-|z|} I₀(z)`, finite for all real `z`.
pub fn bessel_i0_scaled<T: Real>(z: T) -> T {
    let z = z.abs();
    if z <= T::c(SERIES_LIMIT) {
        i0_series(z) * (-z).exp()
    } else {
        i0_asymptotic_scaled(z)
    }
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0<T: Real>(z: T) -> T {
    let z = z.abs();
    if z <= T::c(SERIES_LIMIT) {
        i0_series(z)
    } else {
        i0_asymptotic_scaled(z) * z.exp()
    }
}

/// `ln I₀(z)`, usable far past the overflow point of [`bessel_i0`].
pub fn ln_bessel_i0<T: Real>(z: T) -> T {
    let z = z.abs();
    if z <= T::c(SERIES_LIMIT) {
        i0_series(z).ln()
    } else {
        i0_asymptotic_scaled(z).ln() + z
    }
}

// Σ (z²/4)^k / (k!)²
fn i0_series<T: Real>(z: T) -> T {
    let q = z * z * T::c(0.25);
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..500usize {
        let k = T::from_usize_lossy(k);
        term = term * q / (k * k);
        sum = sum + term;
        if term <= sum * T::epsilon() {
            break;
        }
    }
    sum
}

// I₀(z) e^{-z} ≈ (2πz)^{-1/2} Σ a_k,  a_k = a_{k-1}·(2k−1)²/(8kz)
fn i0_asymptotic_scaled<T: Real>(z: T) -> T {
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..60usize {
        let odd = T::from_usize_lossy(2 * k - 1);
        let next = term * odd * odd / (T::c(8.0) * T::from_usize_lossy(k) * z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum = sum + term;
        if term <= sum * T::epsilon() {
            break;
        }
    }
    sum / (T::c(2.0) * T::PI() * z).sqrt()
}
