//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

/// Symmetric part `(m + mᵀ)/2`. Riccati and Lyapunov iterations drift out of
/// symmetry in the last bits; every covariance update goes through this.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Frobenius norm of the difference.
pub fn frob_dist(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm()
}

/// Eigenvalues of the symmetric part, ascending. Input must be symmetric up
/// to roundoff; the symmetric part is taken first.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn sym_eig_min(m: &DMatrix<f64>) -> f64 {
    *sym_eigenvalues(m).first().expect("empty matrix")
}

/// Largest eigenvalue of a symmetric matrix.
pub fn sym_eig_max(m: &DMatrix<f64>) -> f64 {
    *sym_eigenvalues(m).last().expect("empty matrix")
}

/// Largest real part over the (complex) eigenvalues.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Largest singular value, computed through the eigenvalues of `mᵀm`.
pub fn largest_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = m.transpose() * m;
    sym_eig_max(&gram).max(0.0).sqrt()
}

/// Block-diagonal assembly of square or rectangular blocks.
pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Solve the continuous Lyapunov equation `aᵀx + xa = q` for symmetric `q`
/// by dense LU on the n²-dimensional vectorization. Sizes in scope are ≤ 16,
/// so the n⁶ cost is irrelevant. Fails when `a` and `-aᵀ` share an
/// eigenvalue (singular operator).
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(q.shape(), (n, n));
    // vec(aᵀx) = (I ⊗ aᵀ) vec(x); vec(xa) = (aᵀ ⊗ I) vec(x)
    let mut op = DMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let row = j * n + i; // vec index of entry (i, j), column-major
            for k in 0..n {
                // aᵀx contributes a[k,i] * x[k,j]
                op[(row, j * n + k)] += a[(k, i)];
                // xa contributes x[i,k] * a[k,j]
                op[(row, k * n + i)] += a[(k, j)];
            }
        }
    }
    let rhs = DVector::from_column_slice(q.as_slice());
    let lu = op.lu();
    let sol = lu.solve(&rhs)?;
    let x = DMatrix::from_column_slice(n, n, sol.as_slice());
    Some(symmetrize(&x))
}

/// A factor `l` with `l lᵀ = m` for symmetric positive semidefinite `m`.
/// Cholesky when `m` is definite, otherwise an eigenvalue factor with small
/// negative eigenvalues clamped to zero.
pub fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = symmetrize(m);
    if let Some(chol) = sym.clone().cholesky() {
        return chol.l();
    }
    let eig = sym.symmetric_eigen();
    let n = m.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let lam = eig.eigenvalues[j].max(0.0).sqrt();
        for i in 0..n {
            l[(i, j)] = eig.eigenvectors[(i, j)] * lam;
        }
    }
    l
}
