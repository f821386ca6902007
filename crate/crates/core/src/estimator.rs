//! Semi-blind estimation of `(σ0², σ1²)` from one frame.
//!
//! The data energies are sorted and split in half; the two half-means are
//! the candidate variances. A few training blocks with a known bit decide
//! which candidate belongs to which hypothesis. Training blocks do not enter
//! the blind averages.

use crate::sigmodel::Frame;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEstimate<T> {
    pub sigma0_sq_hat: T,
    pub sigma1_sq_hat: T,
    /// Mean of the lower half of the sorted normalized energies.
    pub a_min: T,
    /// Mean of the upper half.
    pub a_max: T,
    /// Mean normalized energy of the training blocks.
    pub a_t: T,
}

/// `A_k = ‖y_k‖² / N` for every data block.
pub fn normalized_energies<T: Real>(frame: &Frame<T>) -> Result<Vec<T>> {
    if frame.data_blocks.is_empty() {
        return Err(Error::Config("frame has no data blocks".into()));
    }
    Ok(frame
        .data_blocks
        .iter()
        .map(|b| b.energy / T::from_usize_lossy(b.samples.len().max(1)))
        .collect())
}

/// Lower/upper half means of the normalized energies.
pub fn blind_levels<T: Real>(normalized: &[T]) -> Result<(T, T)> {
    let m = normalized.len();
    if m == 0 || !m.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "number of data blocks must be even and positive, got {m}"
        )));
    }
    let mut sorted = normalized.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let half = T::from_usize_lossy(m / 2);
    let low = sorted[..m / 2].iter().copied().sum::<T>() / half;
    let high = sorted[m / 2..].iter().copied().sum::<T>() / half;
    Ok((low, high))
}

/// Estimation from normalized energies directly (data and training).
///
/// The variance of the training bit takes whichever blind level is closer to
/// the training mean; an exact tie goes to `a_max`.
pub fn estimate_from_normalized<T: Real>(data: &[T], training: &[T], training_bit: u8) -> Result<SigmaEstimate<T>> {
    let (a_min, a_max) = blind_levels(data)?;
    if training.is_empty() {
        return Err(Error::Ambiguous {
            a_min: a_min.f64(),
            a_max: a_max.f64(),
        });
    }
    if training_bit > 1 {
        return Err(Error::Config(format!(
            "training bit must be 0 or 1, got {training_bit}"
        )));
    }
    let a_t = training.iter().copied().sum::<T>() / T::from_usize_lossy(training.len());
    let (trained, other) = if (a_min - a_t).abs() < (a_max - a_t).abs() {
        (a_min, a_max)
    } else {
        (a_max, a_min)
    };
    let (sigma0_sq_hat, sigma1_sq_hat) = if training_bit == 1 {
        (other, trained)
    } else {
        (trained, other)
    };
    Ok(SigmaEstimate {
        sigma0_sq_hat,
        sigma1_sq_hat,
        a_min,
        a_max,
        a_t,
    })
}

pub fn estimate_sigmas<T: Real>(frame: &Frame<T>, training_bit: u8) -> Result<SigmaEstimate<T>> {
    let data = normalized_energies(frame)?;
    let training: Vec<T> = frame
        .training_blocks
        .iter()
        .map(|b| b.energy / T::from_usize_lossy(b.samples.len().max(1)))
        .collect();
    estimate_from_normalized(&data, &training, training_bit)
}
