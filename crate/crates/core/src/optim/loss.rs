use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Vector;

/// Probabilities are clamped to this floor before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Categorical cross-entropy `−ln p[target]`.
pub fn cross_entropy<T: Scalar>(probs: &Vector<T>, target: usize) -> Result<T> {
    if target >= probs.len() {
        return Err(Error::InvalidArgument(format!(
            "target class {target} out of range for {} probabilities",
            probs.len()
        )));
    }
    Ok(nll(probs.as_slice(), target))
}

#[inline]
pub(crate) fn nll<T: Scalar>(probs: &[T], target: usize) -> T {
    let p = probs[target];
    // written out rather than `max` so a NaN probability stays NaN
    let p = if p < T::of(PROB_FLOOR) {
        T::of(PROB_FLOOR)
    } else {
        p
    };
    -p.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let one_hot = Vector::from_vec(vec![0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(cross_entropy(&one_hot, 1).unwrap(), 0.0);
        let uniform = Vector::from_vec(vec![0.2; 5]);
        for t in 0..5 {
            assert!((cross_entropy(&uniform, t).unwrap() - 5f64.ln()).abs() < 1e-15);
        }
        let p = Vector::<f64>::from_vec(vec![0.7, 0.1, 0.1, 0.05, 0.05]);
        assert!((cross_entropy(&p, 0).unwrap() - 0.35667).abs() < 1e-5);
        assert_eq!(cross_entropy(&p, 0).unwrap(), -(0.7f64.ln()));
    }

    #[test]
    fn zero_probability_is_clamped() {
        let p = Vector::from_vec(vec![1.0, 0.0]);
        assert!((cross_entropy(&p, 1).unwrap() - (-(1e-12f64).ln())).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_target() {
        assert!(cross_entropy(&Vector::from_vec(vec![0.5, 0.5]), 2).is_err());
    }

    #[test]
    fn nan_probability_is_not_floored_away() {
        assert!(nll(&[f64::NAN, 0.5], 0).is_nan());
        assert_eq!(nll(&[0.0, 1.0], 0), -(PROB_FLOOR.ln()));
    }
}
