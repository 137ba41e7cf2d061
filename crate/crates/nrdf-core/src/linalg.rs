//! Symmetric eigendecomposition with a deterministic ordering and sign
//! convention, plus the semidefinite square root used for Gaussian sampling.
//!
//! Eigendecompositions drive everything downstream (the waterfilling solver
//! re-diagonalizes the prediction covariance at every stage of every sweep),
//! so the convention must be stable: eigenvalues are returned in descending
//! order, and each eigenvector row is signed so that its largest-magnitude
//! entry is positive, ties broken by the lowest index. The eigenvector matrix
//! `E` stores eigenvectors as rows, i.e. `E Π Eᵀ = Λ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative symmetry tolerance for inputs to [`diagonalize`].
const SYMMETRY_TOL: f64 = 1e-10;

/// Relative tolerance under which slightly negative eigenvalues are clamped
/// to zero; anything below it is an error.
const NEGATIVE_EIG_TOL: f64 = 1e-10;

/// Returns the symmetric part `(m + mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry of `m − mᵀ`.
fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in (r + 1)..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)]).abs());
        }
    }
    worst
}

/// Eigendecomposition of a symmetric positive-semidefinite matrix.
///
/// Returns `(eigvecs, eigvals)` where `eigvals` is sorted descending and
/// `eigvecs` holds the matching eigenvectors as rows, so that
/// `eigvecs * cov * eigvecsᵀ = diag(eigvals)`.
///
/// Sign convention: each row is negated if needed so that its
/// largest-magnitude entry (lowest index on ties) is positive.
/// Eigenvalues in `[-tol, 0)` are clamped to 0, where `tol` scales with the
/// largest eigenvalue magnitude; anything lower is `NegativeEigenvalue`.
pub fn diagonalize(cov: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let p = cov.nrows();
    if cov.ncols() != p {
        return Err(Error::InvalidInput(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            p,
            cov.ncols()
        )));
    }
    let scale = 1.0 + cov.amax();
    let asym = max_asymmetry(cov);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }

    let eig = symmetrize(cov).symmetric_eigen();

    // Descending order; stable sort keeps nalgebra's order on exact ties.
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let max_mag = (0..p).fold(0.0f64, |m, i| m.max(eig.eigenvalues[i].abs()));
    let neg_tol = NEGATIVE_EIG_TOL * (1.0 + max_mag);

    let mut eigvals = DVector::zeros(p);
    let mut eigvecs = DMatrix::zeros(p, p);
    for (row, &src) in order.iter().enumerate() {
        let lam = eig.eigenvalues[src];
        if lam < -neg_tol {
            return Err(Error::NegativeEigenvalue {
                value: lam,
                tolerance: neg_tol,
            });
        }
        eigvals[row] = lam.max(0.0);

        // Column `src` of the eigenvector matrix becomes row `row` of E.
        let col = eig.eigenvectors.column(src);
        let mut lead = 0;
        for i in 1..p {
            if col[i].abs() > col[lead].abs() {
                lead = i;
            }
        }
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..p {
            eigvecs[(row, i)] = sign * col[i];
        }
    }
    Ok((eigvecs, eigvals))
}

/// Symmetric square root of a positive-semidefinite matrix: `Eᵀ √Λ E`.
///
/// Robust where a Cholesky factorization would fail on semidefinite inputs;
/// eigenvalues within the clamping tolerance are treated as 0.
pub fn psd_sqrt(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (e, lam) = diagonalize(cov)?;
    let sqrt_lam = DMatrix::from_diagonal(&lam.map(f64::sqrt));
    Ok(e.transpose() * sqrt_lam * e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reconstruction_error(cov: &DMatrix<f64>, e: &DMatrix<f64>, lam: &DVector<f64>) -> f64 {
        let rebuilt = e.transpose() * DMatrix::from_diagonal(lam) * e;
        (cov - rebuilt).amax()
    }

    #[test]
    fn two_by_two_covariance_has_known_eigenstructure() {
        let cov = DMatrix::from_row_slice(2, 2, &[0.6, 0.2, 0.2, 0.4]);
        let (e, lam) = diagonalize(&cov).expect("valid covariance");

        // Eigenvalues are 0.5 ± sqrt(0.05), descending.
        assert_abs_diff_eq!(lam[0], 0.5 + 0.05f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(lam[1], 0.5 - 0.05f64.sqrt(), epsilon = 1e-12);

        // Sign convention: largest-magnitude entry of each row is positive.
        assert_abs_diff_eq!(e[(0, 0)], 0.85065080835204, epsilon = 1e-10);
        assert_abs_diff_eq!(e[(0, 1)], 0.525731112119133, epsilon = 1e-10);
        assert_abs_diff_eq!(e[(1, 0)], -0.525731112119133, epsilon = 1e-10);
        assert_abs_diff_eq!(e[(1, 1)], 0.85065080835204, epsilon = 1e-10);

        assert!(reconstruction_error(&cov, &e, &lam) < 1e-12);
    }

    #[test]
    fn identity_decomposes_to_identity() {
        let cov = DMatrix::<f64>::identity(3, 3);
        let (e, lam) = diagonalize(&cov).expect("identity is PSD");
        for i in 0..3 {
            assert_abs_diff_eq!(lam[i], 1.0, epsilon = 1e-14);
        }
        assert!((e - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12, "convention must pick +e_i");
    }

    #[test]
    fn random_psd_round_trips() {
        let mut seed = 1234u64;
        let mut next = move || {
            // Small deterministic LCG; quality is irrelevant here.
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for _ in 0..20 {
            let m = DMatrix::from_fn(5, 5, |_, _| next());
            let cov = &m * m.transpose();
            let (e, lam) = diagonalize(&cov).expect("MMᵀ is PSD");
            let scale = 1.0 + cov.amax();
            assert!(
                reconstruction_error(&cov, &e, &lam) <= 1e-10 * scale,
                "round-trip residual too large"
            );
            assert!((&e * e.transpose() - DMatrix::<f64>::identity(5, 5)).amax() < 1e-10);
            for i in 1..5 {
                assert!(lam[i - 1] >= lam[i], "eigenvalues must be descending");
            }
        }
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(diagonalize(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn tiny_negative_eigenvalues_clamp_and_large_ones_error() {
        let nearly = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 - 1e-12]);
        let (_, lam) = diagonalize(&nearly).expect("within clamping tolerance");
        assert!(lam[1] >= 0.0, "clamped eigenvalue must be nonnegative");

        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(
            diagonalize(&indefinite),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let cov = DMatrix::from_row_slice(2, 2, &[0.6, 0.2, 0.2, 0.4]);
        let s = psd_sqrt(&cov).expect("PSD input");
        assert!((&s * &s - &cov).amax() < 1e-12);

        // Semidefinite input: rank-1 covariance.
        let rank1 = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let s1 = psd_sqrt(&rank1).expect("semidefinite input");
        assert!((&s1 * &s1 - &rank1).amax() < 1e-12);
    }
}
