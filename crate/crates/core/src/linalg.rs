//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::bundle::CMat;
use crate::scalar::{Real, C};

/// Orthonormal basis of the nullspace of `m`; singular values at most `rel_tol` times the
/// largest count as zero.
pub fn complex_nullspace<T: Real>(m: &CMat<T>, rel_tol: T) -> Vec<DVector<C<T>>> {
    let cols = m.ncols();
    let padded = if m.nrows() < cols {
        let mut p = CMat::<T>::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("requested V^H");
    let smax = svd.singular_values.iter().fold(T::zero(), |a, &b| a.max(b));
    let thr = rel_tol * smax.max(T::lit(f64::MIN_POSITIVE));
    (0..cols)
        .filter(|&i| svd.singular_values[i] <= thr)
        .map(|i| vt.row(i).adjoint())
        .collect()
}

/// Real counterpart of [`complex_nullspace`]; the threshold is relative to the larger of
/// the top singular value and `scale`.
pub fn real_nullspace<T: Real>(m: &DMatrix<T>, rel_tol: T, scale: T) -> Vec<DVector<T>> {
    let cols = m.ncols();
    let padded = if m.nrows() < cols {
        let mut p = DMatrix::<T>::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().fold(scale, |a, &b| a.max(b));
    let thr = rel_tol * smax.max(T::lit(f64::MIN_POSITIVE));
    (0..cols)
        .filter(|&i| svd.singular_values[i] <= thr)
        .map(|i| vt.row(i).transpose())
        .collect()
}

/// Numerical rank with a relative singular-value threshold.
pub fn rank<T: Real>(m: &CMat<T>, rel_tol: T) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = m.singular_values();
    let smax = s.iter().fold(T::zero(), |a, &b| a.max(b));
    if smax == T::zero() {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen<T: Real>(m: &CMat<T>) -> (Vec<T>, CMat<T>) {
    let h = (m + m.adjoint()) * C::new(T::lit(0.5), T::zero());
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (vals, vecs)
}

/// Orthonormal basis (columns) of the range of `m`.
pub fn range_basis<T: Real>(m: &CMat<T>, rel_tol: T) -> CMat<T> {
    let n = m.nrows();
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().fold(T::zero(), |a, &b| a.max(b));
    let cols: Vec<DVector<C<T>>> = (0..svd.singular_values.len())
        .filter(|&i| smax > T::zero() && svd.singular_values[i] > rel_tol * smax)
        .map(|i| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Column-major vectorization.
pub fn vectorize<T: Real>(m: &CMat<T>) -> DVector<C<T>> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize<T: Real>(v: &DVector<C<T>>, n: usize) -> CMat<T> {
    CMat::from_column_slice(n, n, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c64;

    #[test]
    fn nullspace_of_rank_deficient() {
        let m = CMat::<f64>::from_row_slice(
            2,
            3,
            &[
                c64(1.0, 0.0),
                c64(0.0, 1.0),
                c64(0.0, 0.0),
                c64(0.0, 0.0),
                c64(0.0, 0.0),
                c64(1.0, 0.0),
            ],
        );
        let ns = complex_nullspace(&m, 1e-12);
        assert_eq!(ns.len(), 1);
        assert!((&m * &ns[0]).norm() < 1e-14);
        let r = DMatrix::<f64>::from_row_slice(1, 2, &[1.0, 1.0]);
        let ns = real_nullspace(&r, 1e-12, 0.0);
        assert_eq!(ns.len(), 1);
        assert!((ns[0][0] + ns[0][1]).abs() < 1e-14);
    }

    #[test]
    fn eigen_sorted() {
        let m = CMat::<f64>::from_row_slice(
            2,
            2,
            &[c64(2.0, 0.0), c64(0.0, 1.0), c64(0.0, -1.0), c64(2.0, 0.0)],
        );
        let (vals, vecs) = hermitian_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        let v = vecs.column(1);
        assert!((&m * v - v * c64(3.0, 0.0)).norm() < 1e-13);
    }
}
