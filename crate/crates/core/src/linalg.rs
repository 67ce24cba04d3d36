use nalgebra::{DMatrix, SymmetricEigen};

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn sym_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(symmetrize(m))
}

/// `(λ_min, λ_max)` of a symmetric matrix.
pub fn eig_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = sym_eigen(m);
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

/// Smallest eigenvalue with its unit eigenvector.
pub(crate) fn min_eigenpair(m: &DMatrix<f64>) -> (f64, nalgebra::DVector<f64>) {
    let eig = sym_eigen(m);
    let idx = eig.eigenvalues.imin();
    (eig.eigenvalues[idx], eig.eigenvectors.column(idx).into_owned())
}

/// Spectral norm of a symmetric positive semidefinite matrix.
pub(crate) fn psd_norm(m: &DMatrix<f64>) -> f64 {
    eig_extremes(m).1.max(0.0)
}

/// `V diag(√λ) Vᵀ` for a symmetric matrix with positive spectrum.
pub(crate) fn sqrt_from_eigen(eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> DMatrix<f64> {
    let v = &eig.eigenvectors;
    let scaled = v * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    symmetrize(&(scaled * v.transpose()))
}
