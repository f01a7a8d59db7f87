//! Dense Hermitian helpers on top of nalgebra.

use nalgebra::DMatrix;

use super::C64;

/// Eigenvalues (ascending) and matching orthonormal eigenvectors.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let real = m.iter().all(|z| z.im == 0.0);
    let (vals, vecs): (Vec<f64>, DMatrix<C64>) = if real {
        let r = m.map(|z| z.re);
        let e = r.symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors.map(|x| C64::new(x, 0.0)))
    } else {
        let e = m.clone().symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = DMatrix::from_fn(n, n, |r, c| vecs[(r, order[c])]);
    (sorted_vals, sorted_vecs)
}

/// Relative Frobenius distance of `m` from its adjoint.
pub fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    let nrm = m.norm();
    if nrm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / nrm
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Smallest eigenvalue of a (small) Hermitian matrix; +∞ when empty.
pub fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    hermitian_eigen(m).0[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_complex_eigenpairs() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(2.0, 0.0)],
        );
        let (v, u) = hermitian_eigen(&m);
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 3.0).abs() < 1e-12);
        let r = &m * &u - &u * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(2, v.iter().map(|&x| C64::new(x, 0.0))));
        assert!(r.norm() < 1e-12);
    }
}
