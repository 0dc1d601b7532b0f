//! Small dense helpers on top of nalgebra.

use nalgebra::DMatrix;

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse together with the reciprocal 1-norm condition number
/// `1 / (|A|_1 |A^-1|_1)`. Returns `(None, 0.0)` when LU breaks down and a NaN
/// rcond when the input is not finite.
pub(crate) fn inverse_with_rcond(a: &DMatrix<f64>) -> (Option<DMatrix<f64>>, f64) {
    if a.iter().any(|x| !x.is_finite()) {
        return (None, f64::NAN);
    }
    let anorm = norm1(a);
    if anorm == 0.0 {
        return (None, 0.0);
    }
    match a.clone().try_inverse() {
        Some(inv) => {
            let inorm = norm1(&inv);
            if !inorm.is_finite() || inorm == 0.0 {
                (None, 0.0)
            } else {
                (Some(inv), 1.0 / (anorm * inorm))
            }
        }
        None => (None, 0.0),
    }
}

/// Reciprocal 1-norm condition number; 0 for singular input.
pub fn rcond(a: &DMatrix<f64>) -> f64 {
    inverse_with_rcond(a).1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rcond_of_identity_and_singular() {
        assert!((rcond(&DMatrix::identity(4, 4)) - 1.0).abs() < 1e-15);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(rcond(&s) < 1e-15);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-3]));
        assert!((rcond(&d) - 1e-3).abs() < 1e-15);
        let mut n = DMatrix::identity(2, 2);
        n[(0, 1)] = f64::NAN;
        assert!(rcond(&n).is_nan());
    }
}
