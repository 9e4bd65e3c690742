//! Dense complex matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Real diagonal matrix as a complex matrix.
pub fn diag(values: &[f64]) -> CMat {
    let mut m = CMat::zeros(values.len(), values.len());
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = c(v);
    }
    m
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Decoupled diagonal blocks (connected components of the sparsity pattern) are
/// solved separately, which keeps large truncations of shifts cheap.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    // symmetrize away round-off before handing to the Hermitian solver
    let h = (m + m.adjoint()) * c(0.5);
    let mut values = Vec::with_capacity(n);
    let mut vectors = CMat::zeros(n, n);
    let mut col = 0;
    for block in components(&h) {
        let sub = select(&h, &block, &block);
        let eig = SymmetricEigen::new(sub);
        for k in 0..block.len() {
            values.push(eig.eigenvalues[k]);
            for (i, &r) in block.iter().enumerate() {
                vectors[(r, col)] = eig.eigenvectors[(i, k)];
            }
            col += 1;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted = order.iter().map(|&i| values[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, k| vectors[(r, order[k])]);
    (sorted, vectors)
}

/// Index sets of the connected components of the graph with an edge wherever `h` is nonzero.
fn components(h: &CMat) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut block = vec![start];
        let mut next = 0;
        while next < block.len() {
            let r = block[next];
            next += 1;
            for k in 0..n {
                if !seen[k] && h[(r, k)] != c(0.0) {
                    seen[k] = true;
                    block.push(k);
                }
            }
        }
        block.sort_unstable();
        out.push(block);
    }
    out
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// f(H) for Hermitian H via its eigendecomposition.
pub fn hermitian_apply(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (values, vectors) = hermitian_eigen(m);
    let mapped: Vec<f64> = values.into_iter().map(f).collect();
    &vectors * diag(&mapped) * vectors.adjoint()
}

/// |A| = (A*A)^{1/2}.
pub fn modulus(a: &CMat) -> CMat {
    hermitian_apply(&(a.adjoint() * a), |v| v.max(0.0).sqrt())
}

/// Singular values, descending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = SVD::new(m.clone(), false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral (operator) norm.
pub fn op_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Orthonormal basis (as columns) of {f : m f = 0}, by SVD with an absolute threshold.
pub fn null_space(m: &CMat, threshold: f64) -> CMat {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return CMat::zeros(0, 0);
    }
    // pad to square so that the full right singular basis is available
    let size = rows.max(cols);
    let mut padded = CMat::zeros(size, cols);
    padded.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("requested");
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] < threshold)
        .collect();
    let mut basis = CMat::zeros(cols, kept.len());
    for (k, &i) in kept.iter().enumerate() {
        for r in 0..cols {
            basis[(r, k)] = v_t[(i, r)].conj();
        }
    }
    basis
}

/// Submatrix with the given rows and columns.
pub fn select(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |r, k| m[(rows[r], cols[k])])
}

/// Columns of `m` with the given indices.
pub fn select_columns(m: &CMat, cols: &[usize]) -> CMat {
    CMat::from_fn(m.nrows(), cols.len(), |r, k| m[(r, cols[k])])
}

/// ‖U*U − I‖ as a max-entry measure of unitarity.
pub fn unitarity_defect(u: &CMat) -> f64 {
    max_abs(&(u.adjoint() * u - identity(u.ncols())))
}

/// Orthonormal basis of the orthogonal complement of `v` in ℂᵈ (columns).
pub fn complement_basis(v: &[Complex64]) -> CMat {
    let d = v.len();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    if norm > 0.0 {
        basis.push(v.iter().map(|z| z / norm).collect());
    }
    let start = basis.len();
    for k in 0..d {
        let mut w = vec![Complex64::new(0.0, 0.0); d];
        w[k] = c(1.0);
        // two passes of Gram–Schmidt
        for _ in 0..2 {
            for q in &basis {
                let proj: Complex64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= proj * qi;
                }
            }
        }
        let n = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            basis.push(w.iter().map(|z| z / n).collect());
        }
        if basis.len() == d {
            break;
        }
    }
    let kept = &basis[start..];
    CMat::from_fn(d, kept.len(), |r, k| kept[k][r])
}
