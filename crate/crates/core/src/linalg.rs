use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::spin::C64;

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending. Real symmetric
/// input is diagonalized in real arithmetic.
pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let (values, vectors) = if m.iter().all(|z| z.im == 0.0) {
        let eig = SymmetricEigen::new(m.map(|z| z.re));
        (
            eig.eigenvalues.iter().copied().collect::<Vec<_>>(),
            eig.eigenvectors.map(C64::from),
        )
    } else {
        let eig = SymmetricEigen::new(m.clone());
        (
            eig.eigenvalues.iter().copied().collect::<Vec<_>>(),
            eig.eigenvectors,
        )
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let sorted_vectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    (sorted_values, sorted_vectors)
}

/// `exp(-i H dt) psi` for real symmetric `H`.
pub(crate) fn apply_real_propagator(h: DMatrix<f64>, psi: &DVector<C64>, dt: f64) -> DVector<C64> {
    let eig = SymmetricEigen::new(h);
    let v = eig.eigenvectors.map(C64::from);
    let mut coeffs = v.tr_mul(psi);
    for (c, &e) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
        *c *= C64::from_polar(1.0, -e * dt);
    }
    v * coeffs
}
