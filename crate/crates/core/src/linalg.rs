//! Dense complex linear algebra helpers on top of LAPACK.
//!
//! Unitary matrices are diagonalized by the general eigensolver followed by
//! per-cluster re-orthonormalization (eigenvectors of a normal matrix are
//! orthogonal across distinct eigenvalues, but LAPACK does not orthonormalize
//! inside degenerate clusters).

use ndarray::{s, Array1, Array2, Axis};
use ndarray_linalg::{c64, Eig, Eigh, Norm, SVD, UPLO};

use crate::error::{Error, Result};

pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn cr(x: f64) -> c64 {
    c64::new(x, 0.0)
}

pub fn identity(n: usize) -> Array2<c64> {
    Array2::eye(n)
}

pub fn dagger(a: &Array2<c64>) -> Array2<c64> {
    a.t().mapv(|v| v.conj())
}

pub fn frobenius(a: &Array2<c64>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn spectral_norm(a: &Array2<c64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let (_, sv, _) = a.svd(false, false).expect("svd failed");
    sv.iter().fold(0.0f64, |m, &v| m.max(v))
}

pub fn singular_values(a: &Array2<c64>) -> Array1<f64> {
    let (_, sv, _) = a.svd(false, false).expect("svd failed");
    sv
}

pub fn unitary_defect(g: &Array2<c64>) -> f64 {
    let n = g.nrows();
    frobenius(&(dagger(g).dot(g) - identity(n)))
}

pub fn kron(a: &Array2<c64>, b: &Array2<c64>) -> Array2<c64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == c64::new(0.0, 0.0) {
                continue;
            }
            let mut block = out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            block.assign(&b.mapv(|v| v * aij));
        }
    }
    out
}

/// Hermitian eigendecomposition (ascending eigenvalues), columns satisfying
/// `a·v = λ·v`.
///
/// LAPACK receives the row-major buffer as its transpose, so the raw
/// eigenvectors belong to `aᵀ = ā`; conjugating restores the stated
/// convention.
pub fn eigh(a: &Array2<c64>) -> (Array1<f64>, Array2<c64>) {
    let (vals, vecs) = a.eigh(UPLO::Lower).expect("eigh failed");
    (vals, vecs.mapv(|v| v.conj()))
}

/// Apply a scalar function to a Hermitian matrix through its spectrum.
pub fn hermitian_calculus<F: Fn(f64) -> c64>(a: &Array2<c64>, f: F) -> Array2<c64> {
    let (vals, vecs) = eigh(a);
    let d = Array2::from_diag(&vals.mapv(f));
    vecs.dot(&d).dot(&dagger(&vecs))
}

/// `exp(-i·H)` for Hermitian `H`; exactly unitary by construction.
pub fn expi_hermitian(h: &Array2<c64>) -> Array2<c64> {
    hermitian_calculus(h, |e| (-I * cr(e)).exp())
}

/// `(H)^(-1/2)` on the range of a positive semidefinite Hermitian matrix;
/// eigenvalues below `floor` are treated as kernel and mapped to zero.
pub fn inv_sqrt_psd(a: &Array2<c64>, floor: f64) -> Array2<c64> {
    hermitian_calculus(a, |e| {
        if e > floor {
            cr(1.0 / e.sqrt())
        } else {
            cr(0.0)
        }
    })
}

/// Orthonormalize the columns of `v` in place (modified Gram–Schmidt).
pub fn orthonormalize_columns(v: &mut Array2<c64>) {
    let cols = v.ncols();
    for j in 0..cols {
        for k in 0..j {
            let proj: c64 = v
                .column(k)
                .iter()
                .zip(v.column(j).iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            let vk = v.column(k).to_owned();
            let mut vj = v.column_mut(j);
            vj.zip_mut_with(&vk, |x, &y| *x -= proj * y);
        }
        let norm = v.column(j).norm_l2();
        if norm > 1e-14 {
            v.column_mut(j).mapv_inplace(|x| x / cr(norm));
        }
    }
}

/// Eigendecomposition of a unitary matrix: returns `(eigenvalues, V)` with
/// `V` unitary and `g = V diag(λ) V†`.
pub fn eig_unitary(g: &Array2<c64>, tol: f64) -> Result<(Vec<c64>, Array2<c64>)> {
    let defect = unitary_defect(g);
    if defect > tol {
        return Err(Error::NotUnitary { defect });
    }
    let (vals, vecs) = g.eig().expect("eig failed");
    let n = vals.len();
    // Sort by eigenvalue angle so clusters are contiguous.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        vals[a]
            .arg()
            .partial_cmp(&vals[b].arg())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut sorted_vals: Vec<c64> = order.iter().map(|&i| vals[i]).collect();
    let mut v = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        v.column_mut(dst).assign(&vecs.column(src));
    }
    // Re-orthonormalize inside each eigenvalue cluster.
    let cluster_tol = 1e-8;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (sorted_vals[end] - sorted_vals[start]).norm() < cluster_tol {
            end += 1;
        }
        let mut block = v.slice(s![.., start..end]).to_owned();
        orthonormalize_columns(&mut block);
        v.slice_mut(s![.., start..end]).assign(&block);
        // Snap the cluster to its mean eigenvalue (re-normalized to |λ| = 1).
        let mean: c64 = sorted_vals[start..end].iter().sum::<c64>() / cr((end - start) as f64);
        let mean = mean / cr(mean.norm());
        for val in sorted_vals[start..end].iter_mut() {
            *val = mean;
        }
        start = end;
    }
    // Reconstruction check guards against accidental non-normal input.
    let d = Array2::from_diag(&Array1::from_vec(sorted_vals.clone()));
    let recon = v.dot(&d).dot(&dagger(&v));
    let err = frobenius(&(&recon - g));
    if err > 1e-8 {
        return Err(Error::Invalid(format!(
            "unitary eigendecomposition failed to reconstruct (error {err:.3e})"
        )));
    }
    Ok((sorted_vals, v))
}

/// Select the columns/rows of `a` listed in `rows` and `cols`.
pub fn submatrix(a: &Array2<c64>, rows: &[usize], cols: &[usize]) -> Array2<c64> {
    let mut out = Array2::zeros((rows.len(), cols.len()));
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            out[(i, j)] = a[(r, c)];
        }
    }
    out
}

/// Orthonormal basis of the range of a Hermitian projection: eigenvectors
/// with eigenvalue within `tol` of 1. Errors if some eigenvalue is far from
/// both 0 and 1.
pub fn projection_range(p: &Array2<c64>, tol: f64) -> Result<Array2<c64>> {
    let (vals, vecs) = eigh(p);
    let mut cols = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, &e) in vals.iter().enumerate() {
        let d0 = e.abs();
        let d1 = (e - 1.0).abs();
        worst = worst.max(d0.min(d1));
        if d1 < d0 {
            cols.push(i);
        }
    }
    if worst > tol {
        return Err(Error::NotProjection { defect: worst });
    }
    let mut out = Array2::zeros((p.nrows(), cols.len()));
    for (j, &i) in cols.iter().enumerate() {
        out.column_mut(j).assign(&vecs.column(i));
    }
    Ok(out)
}

/// Stack matrices into the block diagonal.
pub fn block_diag(blocks: &[Array2<c64>]) -> Array2<c64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Array2::zeros((rows, cols));
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.slice_mut(s![r..r + b.nrows(), c..c + b.ncols()]).assign(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// 2×2 block matrix `[[a, b], [c, d]]`; all blocks must be square of equal size.
pub fn block2(a: &Array2<c64>, b: &Array2<c64>, c: &Array2<c64>, d: &Array2<c64>) -> Array2<c64> {
    let m = a.nrows();
    let mut out = Array2::zeros((2 * m, 2 * m));
    out.slice_mut(s![..m, ..m]).assign(a);
    out.slice_mut(s![..m, m..]).assign(b);
    out.slice_mut(s![m.., ..m]).assign(c);
    out.slice_mut(s![m.., m..]).assign(d);
    out
}

pub fn max_abs(a: &Array2<c64>) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Mean of the columns removed; kept for diagnostics in reports.
pub fn trace(a: &Array2<c64>) -> c64 {
    a.axis_iter(Axis(0))
        .enumerate()
        .map(|(i, row)| row[i])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigh_convention_is_right_eigenvectors() {
        let mut h: Array2<c64> = Array2::zeros((2, 2));
        h[(0, 1)] = cr(0.9) * I;
        h[(1, 0)] = -cr(0.9) * I;
        let (e, v) = eigh(&h);
        for k in 0..2 {
            let vk = v.column(k).to_owned();
            let hv = h.dot(&vk);
            let res: f64 = hv
                .iter()
                .zip(vk.iter())
                .map(|(a, b)| (a - b * cr(e[k])).norm())
                .sum();
            assert!(res < 1e-12, "residual {res}");
        }
        let recon = v.dot(&Array2::from_diag(&e.mapv(cr))).dot(&dagger(&v));
        assert!(frobenius(&(&recon - &h)) < 1e-12);
    }

    #[test]
    fn expi_of_zero_is_identity() {
        let h = Array2::zeros((4, 4));
        let u = expi_hermitian(&h);
        assert_relative_eq!(frobenius(&(&u - &identity(4))), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_unitary_recovers_phases() {
        // diag(i, 1) has eigenangles π/2 and 0.
        let mut g = Array2::zeros((2, 2));
        g[(0, 0)] = I;
        g[(1, 1)] = cr(1.0);
        let (vals, v) = eig_unitary(&g, 1e-10).unwrap();
        let mut angles: Vec<f64> = vals.iter().map(|v| v.arg()).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(angles[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(angles[1], std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        assert!(unitary_defect(&v) < 1e-12);
    }

    #[test]
    fn eig_unitary_handles_degenerate_clusters() {
        // A unitary with a doubly degenerate eigenvalue -1.
        let mut g = Array2::zeros((3, 3));
        g[(0, 0)] = cr(-1.0);
        g[(1, 1)] = cr(-1.0);
        g[(2, 2)] = cr(1.0);
        // Conjugate by a random-ish unitary built from a rotation.
        let th = 0.7_f64;
        let mut q: Array2<c64> = identity(3);
        q[(0, 0)] = cr(th.cos());
        q[(0, 2)] = cr(-th.sin());
        q[(2, 0)] = cr(th.sin());
        q[(2, 2)] = cr(th.cos());
        let gc = q.dot(&g).dot(&dagger(&q));
        let (vals, v) = eig_unitary(&gc, 1e-10).unwrap();
        assert!(unitary_defect(&v) < 1e-9);
        let d = Array2::from_diag(&Array1::from_vec(vals));
        let recon = v.dot(&d).dot(&dagger(&v));
        assert!(frobenius(&(&recon - &gc)) < 1e-9);
    }

    #[test]
    fn inv_sqrt_psd_inverts_on_range() {
        let mut a = Array2::zeros((2, 2));
        a[(0, 0)] = cr(4.0);
        a[(1, 1)] = cr(0.0);
        let s = inv_sqrt_psd(&a, 1e-10);
        assert_relative_eq!(s[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(s[(1, 1)].re, 0.0, epsilon = 1e-12);
    }
}
