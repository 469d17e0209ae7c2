//! Hermitian eigen utilities.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    let scale = m.norm().max(1e-300);
    (m - m.adjoint()).norm() / scale
}

/// Largest eigenvalue and a unit eigenvector of a Hermitian matrix.
pub fn top_eigpair(m: &DMatrix<C64>) -> Result<(f64, DVector<C64>)> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!("{}x{} matrix", m.nrows(), m.ncols())));
    }
    let defect = hermitian_defect(m);
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    let sym = (m + m.adjoint()) * C64::from(0.5);
    let eig = sym.symmetric_eigen();
    let (i, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::EmptyInput)?;
    Ok((lambda, eig.eigenvectors.column(i).into_owned()))
}

/// `lambda_max / trace`, 1 exactly for rank one.
pub fn rank_one_ratio(m: &DMatrix<C64>) -> Result<f64> {
    let (lambda, _) = top_eigpair(m)?;
    let tr = m.trace().re;
    if tr <= 0.0 {
        return Ok(0.0);
    }
    Ok((lambda / tr).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random_psd(rng: &mut impl Rng, n: usize) -> DMatrix<C64> {
        let a = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        &a * a.adjoint()
    }

    #[test]
    fn rank_one_and_identity() {
        let u = DVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let m = &u * u.adjoint();
        assert!((rank_one_ratio(&m).unwrap() - 1.0).abs() < 1e-12);
        let (l, v) = top_eigpair(&m).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        assert!((v.dotc(&u).norm() - 1.0).abs() < 1e-12);
        let id = DMatrix::<C64>::identity(4, 4);
        assert!((rank_one_ratio(&id).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DMatrix::<C64>::identity(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(top_eigpair(&m), Err(Error::NotHermitian(_))));
    }

    /// Real embedding `[[A, -B], [B, A]]` has the same spectrum, doubled.
    #[test]
    fn matches_real_embedding() {
        let mut rng = rng_from_seed(13);
        for n in 1..8 {
            let m = random_psd(&mut rng, n);
            let (l, v) = top_eigpair(&m).unwrap();
            let resid = (&m * &v - &v * C64::from(l)).norm();
            assert!(resid <= 1e-9 * m.norm());
            let real = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
                let z = m[(i % n, j % n)];
                match (i < n, j < n) {
                    (true, true) | (false, false) => z.re,
                    (true, false) => -z.im,
                    (false, true) => z.im,
                }
            });
            let top = real.symmetric_eigen().eigenvalues.max();
            assert!((top - l).abs() < 1e-9 * l.abs().max(1.0));
        }
    }
}
