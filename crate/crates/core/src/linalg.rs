//! Small dense Hermitian helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{GaborError, Result};

pub type CMat = DMatrix<Complex64>;

/// `max |H − H*|` relative to the largest entry.
pub fn hermitian_asymmetry(h: &CMat) -> f64 {
    let scale = h.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

pub fn symmetrize(h: &CMat) -> CMat {
    (h + h.adjoint()) * Complex64::new(0.5, 0.0)
}

fn check_hermitian(h: &CMat) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(GaborError::Shape(format!("{}x{} matrix is not square", h.nrows(), h.ncols())));
    }
    let a = hermitian_asymmetry(h);
    if a > 1e-8 {
        return Err(GaborError::NotHermitian { asymmetry: a });
    }
    Ok(())
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(symmetrize(h));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(h.nrows(), h.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

pub fn hermitian_eigenvalues(h: &CMat) -> Vec<f64> {
    if h.nrows() == 1 {
        return vec![h[(0, 0)].re];
    }
    let mut v: Vec<f64> = SymmetricEigen::new(symmetrize(h)).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `V f(Λ) V*`.
pub fn hermitian_apply(vals: &[f64], vecs: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let n = vals.len();
    let mut scaled = vecs.clone();
    for c in 0..n {
        let s = f(vals[c]);
        for r in 0..n {
            scaled[(r, c)] *= s;
        }
    }
    scaled * vecs.adjoint()
}

/// Hermitian PSD square root; eigenvalues below zero are clipped.
pub fn psd_sqrt(h: &CMat) -> Result<CMat> {
    check_hermitian(h)?;
    let (vals, vecs) = hermitian_eigen(h);
    Ok(symmetrize(&hermitian_apply(&vals, &vecs, |l| l.max(0.0).sqrt())))
}

/// `λ_max(A^{1/2} B A^{1/2})`, the squared spectral norm of `A^{1/2} B^{1/2}`.
pub fn product_lambda_max(a: &CMat, b: &CMat) -> Result<f64> {
    let s = psd_sqrt(a)?;
    check_hermitian(b)?;
    let m = &s * b * &s;
    Ok(hermitian_eigenvalues(&m).last().copied().unwrap_or(0.0))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn spectral_norm(m: &CMat) -> f64 {
    let g = m.adjoint() * m;
    hermitian_eigenvalues(&g).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        let a = CMat::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        &a * a.adjoint()
    }

    #[test]
    fn sqrt_identity_and_diagonal() {
        let i = CMat::identity(3, 3);
        assert!(frobenius(&(psd_sqrt(&i).unwrap() - &i)) < 1e-14);
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(4.0, 0.0),
            Complex64::new(9.0, 0.0),
        ]));
        let s = psd_sqrt(&d).unwrap();
        assert!((s[(0, 0)].re - 2.0).abs() < 1e-14);
        assert!((s[(1, 1)].re - 3.0).abs() < 1e-14);
        assert!(s[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn sqrt_reconstructs_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..6 {
            for _ in 0..10 {
                let h = random_psd(&mut rng, n);
                let s = psd_sqrt(&h).unwrap();
                assert!(frobenius(&(&s * &s - &h)) <= 1e-10 * frobenius(&h));
                assert!(hermitian_asymmetry(&s) < 1e-12);
                assert!(hermitian_eigenvalues(&s)[0] > -1e-10);
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMat::identity(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(psd_sqrt(&m), Err(GaborError::NotHermitian { .. })));
    }

    #[test]
    fn product_norm_matches_direct_singular_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let a = random_psd(&mut rng, 3);
            let b = random_psd(&mut rng, 3);
            let direct = spectral_norm(&(psd_sqrt(&a).unwrap() * psd_sqrt(&b).unwrap()));
            let via = product_lambda_max(&a, &b).unwrap().sqrt();
            assert!((direct - via).abs() < 1e-9 * direct);
        }
    }
}
