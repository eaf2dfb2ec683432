//! Truncated `n`-mode Fock space and the metaplectic representation.
//!
//! States `|k₁…k_n⟩` with `0 ≤ k_j ≤ K−1` span the space; the *reliable
//! block* consists of states with total occupation `Σk_j ≤ K−M`. Quantized
//! `u(n)` Hamiltonians conserve total occupation, so every representation
//! operator built here is exact (to roundoff) on complete occupation levels;
//! truncation artifacts live strictly above level `K−1`.

use ndarray::Array2;
use ndarray_linalg::c64;

use crate::error::{Error, Result};
use crate::exterior;
use crate::group::UnitaryElement;
use crate::linalg::{self, cr, dagger, identity, kron, I};

/// Occupation-basis parameters: `n` modes, per-mode cutoff `K`, reliable
/// margin `M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockBasis {
    pub modes: usize,
    pub cutoff: usize,
    pub margin: usize,
}

impl FockBasis {
    pub fn new(modes: usize, cutoff: usize, margin: usize) -> Result<Self> {
        if modes == 0 || cutoff == 0 {
            return Err(Error::Invalid("need at least one mode and one level".into()));
        }
        if margin >= cutoff {
            return Err(Error::Invalid(format!(
                "margin {margin} must be smaller than cutoff {cutoff}"
            )));
        }
        Ok(FockBasis {
            modes,
            cutoff,
            margin,
        })
    }

    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.modes as u32)
    }

    /// Multi-index of basis state `idx` (mode-major, first mode slowest).
    pub fn occupation(&self, idx: usize) -> Vec<usize> {
        let mut rem = idx;
        let mut out = vec![0; self.modes];
        for j in (0..self.modes).rev() {
            out[j] = rem % self.cutoff;
            rem /= self.cutoff;
        }
        out
    }

    pub fn index(&self, occ: &[usize]) -> usize {
        occ.iter().fold(0, |acc, &k| acc * self.cutoff + k)
    }

    pub fn total_occupation(&self, idx: usize) -> usize {
        self.occupation(idx).iter().sum()
    }

    /// Highest total occupation that counts as reliable.
    pub fn reliable_level(&self) -> usize {
        self.cutoff - self.margin
    }
}

/// Dense operator on the truncated Fock space, optionally tensored with the
/// `2ⁿ`-dimensional exterior algebra and a `ℂ^N` coefficient factor.
///
/// Index layout: `(fock · form_factor + form_mask) · components + c`.
#[derive(Clone, Debug)]
pub struct FockOperator {
    pub basis: FockBasis,
    pub matrix: Array2<c64>,
    pub form_factor: usize,
    pub components: usize,
}

impl FockOperator {
    pub fn new(basis: FockBasis, matrix: Array2<c64>) -> Self {
        assert_eq!(matrix.nrows(), basis.dim());
        FockOperator {
            basis,
            matrix,
            form_factor: 1,
            components: 1,
        }
    }

    pub fn with_form_factor(basis: FockBasis, matrix: Array2<c64>, form_factor: usize) -> Self {
        assert_eq!(matrix.nrows(), basis.dim() * form_factor);
        FockOperator {
            basis,
            matrix,
            form_factor,
            components: 1,
        }
    }

    pub fn space_dim(&self) -> usize {
        self.basis.dim() * self.form_factor * self.components
    }

    /// Indices of the reliable block. With a form factor present, the form
    /// degree joins the occupation count, so that the Euler operator (which
    /// conserves occupation + degree) maps the block to itself.
    pub fn reliable_indices(&self) -> Vec<usize> {
        let level = self.basis.reliable_level();
        let mut out = Vec::new();
        for f in 0..self.basis.dim() {
            let occ = self.basis.total_occupation(f);
            for m in 0..self.form_factor {
                let deg = if self.form_factor > 1 {
                    exterior::degree(m)
                } else {
                    0
                };
                if occ + deg <= level {
                    for c in 0..self.components {
                        out.push((f * self.form_factor + m) * self.components + c);
                    }
                }
            }
        }
        out
    }

    pub fn reliable_block(&self) -> Array2<c64> {
        let idx = self.reliable_indices();
        linalg::submatrix(&self.matrix, &idx, &idx)
    }

    /// Spectral norm of the reliable block of `self − other`.
    pub fn reliable_distance(&self, other: &FockOperator) -> f64 {
        let idx = self.reliable_indices();
        let diff = &self.matrix - &other.matrix;
        linalg::spectral_norm(&linalg::submatrix(&diff, &idx, &idx))
    }

    /// `‖(U†U − I)‖` on the reliable block.
    pub fn unitary_defect_reliable(&self) -> f64 {
        let idx = self.reliable_indices();
        let gram = dagger(&self.matrix).dot(&self.matrix);
        let block = linalg::submatrix(&gram, &idx, &idx);
        linalg::spectral_norm(&(&block - &identity(idx.len())))
    }

    pub fn dot(&self, other: &FockOperator) -> FockOperator {
        FockOperator {
            basis: self.basis,
            matrix: self.matrix.dot(&other.matrix),
            form_factor: self.form_factor,
            components: self.components,
        }
    }

    pub fn dagger(&self) -> FockOperator {
        FockOperator {
            basis: self.basis,
            matrix: dagger(&self.matrix),
            form_factor: self.form_factor,
            components: self.components,
        }
    }
}

/// Annihilation operator of mode `j`: `a_j|…k_j…⟩ = √k_j |…k_j−1…⟩`.
pub fn ladder(j: usize, basis: &FockBasis) -> Array2<c64> {
    let dim = basis.dim();
    let mut a = Array2::zeros((dim, dim));
    for idx in 0..dim {
        let occ = basis.occupation(idx);
        if occ[j] > 0 {
            let mut lower = occ.clone();
            lower[j] -= 1;
            a[(basis.index(&lower), idx)] = cr((occ[j] as f64).sqrt());
        }
    }
    a
}

/// `x̂_j = (a_j + a_j†)/√2`.
pub fn position(j: usize, basis: &FockBasis) -> Array2<c64> {
    let a = ladder(j, basis);
    (&a + &dagger(&a)).mapv(|v| v / cr(2.0_f64.sqrt()))
}

/// `p̂_j = (a_j − a_j†)/(i√2)`.
pub fn momentum(j: usize, basis: &FockBasis) -> Array2<c64> {
    let a = ladder(j, basis);
    (&a - &dagger(&a)).mapv(|v| v / (I * cr(2.0_f64.sqrt())))
}

/// Total number operator `Σ_j a_j†a_j`.
pub fn total_number(basis: &FockBasis) -> Array2<c64> {
    let dim = basis.dim();
    let mut n = Array2::zeros((dim, dim));
    for idx in 0..dim {
        n[(idx, idx)] = cr(basis.total_occupation(idx) as f64);
    }
    n
}

/// `H(x,p) = ½ (x,p)·[[A,−B],[B,A]]·(x,p)ᵀ` with `A` symmetric, `B`
/// skew-symmetric; the Lie-algebra element is `B + iA ∈ u(n)`.
#[derive(Clone, Debug)]
pub struct QuadraticHamiltonian {
    a: Array2<f64>,
    b: Array2<f64>,
}

impl QuadraticHamiltonian {
    pub fn new(a: Array2<f64>, b: Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || b.ncols() != n {
            return Err(Error::Dimension("A and B must be square of equal size".into()));
        }
        let sym = (&a - &a.t()).iter().map(|v| v.abs()).fold(0.0, f64::max);
        let skew = (&b + &b.t()).iter().map(|v| v.abs()).fold(0.0, f64::max);
        if sym > 1e-12 || skew > 1e-12 {
            return Err(Error::Invalid(format!(
                "A must be symmetric (defect {sym:.2e}) and B skew-symmetric (defect {skew:.2e})"
            )));
        }
        Ok(QuadraticHamiltonian { a, b })
    }

    pub fn zero(n: usize) -> Self {
        QuadraticHamiltonian {
            a: Array2::zeros((n, n)),
            b: Array2::zeros((n, n)),
        }
    }

    pub fn modes(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn trace_a(&self) -> f64 {
        (0..self.a.nrows()).map(|i| self.a[(i, i)]).sum()
    }

    /// Entry `(j, k)` of the `2n×2n` symbol matrix `[[A, −B], [B, A]]`.
    pub fn symbol_matrix(&self, j: usize, k: usize) -> f64 {
        let n = self.modes();
        match (j < n, k < n) {
            (true, true) => self.a[(j, k)],
            (true, false) => -self.b[(j, k - n)],
            (false, true) => self.b[(j - n, k)],
            (false, false) => self.a[(j - n, k - n)],
        }
    }

    /// Lie-algebra element `B + iA`.
    pub fn generator(&self) -> Array2<c64> {
        let n = self.modes();
        let mut x = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                x[(i, j)] = c64::new(self.b[(i, j)], self.a[(i, j)]);
            }
        }
        x
    }
}

/// Weyl quantization of a quadratic Hamiltonian:
/// `Ĥ = ½ Σ_{jk} M_{jk} · ½(ξ̂_j ξ̂_k + ξ̂_k ξ̂_j)` with `ξ̂ = (x̂, p̂)`.
pub fn weyl_quantize_quadratic(h: &QuadraticHamiltonian, basis: &FockBasis) -> FockOperator {
    let n = basis.modes;
    assert_eq!(h.modes(), n, "Hamiltonian modes must match the basis");
    let dim = basis.dim();
    let mut xi: Vec<Array2<c64>> = Vec::with_capacity(2 * n);
    for j in 0..n {
        xi.push(position(j, basis));
    }
    for j in 0..n {
        xi.push(momentum(j, basis));
    }
    let mut out: Array2<c64> = Array2::zeros((dim, dim));
    for j in 0..2 * n {
        for k in 0..2 * n {
            let m = h.symbol_matrix(j, k);
            if m == 0.0 {
                continue;
            }
            let sym = (&xi[j].dot(&xi[k]) + &xi[k].dot(&xi[j])).mapv(|v| v * cr(0.5));
            out += &sym.mapv(|v| v * cr(0.5 * m));
        }
    }
    FockOperator::new(*basis, out)
}

/// Principal-branch logarithm data of a unitary matrix.
#[derive(Clone, Debug)]
pub struct LogOutcome {
    pub hamiltonian: QuadraticHamiltonian,
    /// Set when some eigenangle lies within `1e-6` of `±π`; the branch is
    /// then ambiguous and downstream users should cross-check.
    pub branch_warning: bool,
}

/// Principal skew-Hermitian logarithm: eigenangles in `(−π, π]`, returned as
/// the `(A, B)` pair with `exp(B + iA) = g`.
pub fn unitary_log(g: &UnitaryElement) -> Result<LogOutcome> {
    let (vals, vecs) = linalg::eig_unitary(g.matrix(), 1e-10)?;
    let n = g.dim();
    let mut branch_warning = false;
    let mut log_diag = Array2::zeros((n, n));
    for (i, &v) in vals.iter().enumerate() {
        let theta = v.arg(); // (−π, π]
        if (theta.abs() - std::f64::consts::PI).abs() < 1e-6 {
            branch_warning = true;
        }
        log_diag[(i, i)] = I * cr(theta);
    }
    let x = vecs.dot(&log_diag).dot(&dagger(&vecs));
    // Symmetrize to exact skew-Hermitian before splitting.
    let x = (&x - &dagger(&x)).mapv(|v| v * cr(0.5));
    let a = x.mapv(|v| v.im);
    let a = (&a + &a.t()).mapv(|v| 0.5 * v);
    let b = x.mapv(|v| v.re);
    let b = (&b - &b.t()).mapv(|v| 0.5 * v);
    let hamiltonian = QuadraticHamiltonian::new(a, b)?;
    // exp(B + iA) must reproduce g.
    let gen = hamiltonian.generator();
    let herm = gen.mapv(|v| -I * v);
    let recon = linalg::hermitian_calculus(&herm, |e| (I * cr(e)).exp());
    let err = linalg::frobenius(&(&recon - g.matrix()));
    if err > 1e-10 {
        return Err(Error::Invalid(format!(
            "principal logarithm failed to reproduce the element (error {err:.3e})"
        )));
    }
    Ok(LogOutcome {
        hamiltonian,
        branch_warning,
    })
}

/// Metaplectic operator with its branch diagnostic.
#[derive(Clone, Debug)]
pub struct MetaplecticOp {
    pub op: FockOperator,
    pub branch_warning: bool,
}

/// `R_g = exp(−iĤ)·e^{i·tr A/2}` with `(A, B)` the principal logarithm of `g`.
pub fn metaplectic(g: &UnitaryElement, basis: &FockBasis) -> Result<MetaplecticOp> {
    let log = unitary_log(g)?;
    let h_op = weyl_quantize_quadratic(&log.hamiltonian, basis);
    let phase = (I * cr(log.hamiltonian.trace_a() / 2.0)).exp();
    let matrix = linalg::expi_hermitian(&h_op.matrix).mapv(|v| v * phase);
    Ok(MetaplecticOp {
        op: FockOperator::new(*basis, matrix),
        branch_warning: log.branch_warning,
    })
}

/// Diagonal form representation `ρ_g = R_g ⊗ Λ(ḡ)` on `Fock ⊗ Λ(ℂⁿ)`.
///
/// The exterior factor acts through the conjugate standard representation:
/// for `g = e^{it} ∈ U(1)` the factor on `Λ¹` is `e^{−it}`.
pub fn form_representation(g: &UnitaryElement, basis: &FockBasis) -> Result<MetaplecticOp> {
    let r = metaplectic(g, basis)?;
    let conj = g.matrix().mapv(|v| v.conj());
    let lambda = exterior::lambda_matrix(&conj);
    let matrix = kron(&r.op.matrix, &lambda);
    Ok(MetaplecticOp {
        op: FockOperator::with_form_factor(*basis, matrix, 1 << basis.modes),
        branch_warning: r.branch_warning,
    })
}

/// Egorov residual `‖R_g (v·ξ̂) R_g⁻¹ − (v∘g)·ξ̂‖` on the reliable block,
/// where the transformed coefficients are `w = (T_g⁻¹)ᵀ v` for the canonical
/// transformation `T_g` of `g` (acting through `z = p + ix`).
pub fn egorov_check(g: &UnitaryElement, v: &[c64], basis: &FockBasis) -> Result<f64> {
    let n = basis.modes;
    if v.len() != 2 * n {
        return Err(Error::Dimension(format!(
            "coefficient vector has {} entries, expected {}",
            v.len(),
            2 * n
        )));
    }
    let mut xi: Vec<Array2<c64>> = Vec::with_capacity(2 * n);
    for j in 0..n {
        xi.push(position(j, basis));
    }
    for j in 0..n {
        xi.push(momentum(j, basis));
    }
    let linear = |coeff: &[c64]| -> Array2<c64> {
        let mut out: Array2<c64> = Array2::zeros((basis.dim(), basis.dim()));
        for (c, m) in coeff.iter().zip(xi.iter()) {
            if c.norm() > 0.0 {
                out += &m.mapv(|v| v * c);
            }
        }
        out
    };
    let r = metaplectic(g, basis)?;
    let conj = r.op.matrix.dot(&linear(v)).dot(&dagger(&r.op.matrix));
    // w = (T_g⁻¹)ᵀ v; T_g is orthogonal for unitary g, so this equals T_g·v.
    let t = g.real_transform();
    let mut w = vec![c64::new(0.0, 0.0); 2 * n];
    for i in 0..2 * n {
        for j in 0..2 * n {
            w[i] += cr(t[(i, j)]) * v[j];
        }
    }
    let expected = linear(&w);
    let op = FockOperator::new(*basis, &conj - &expected);
    let idx = op.reliable_indices();
    Ok(linalg::spectral_norm(&linalg::submatrix(
        &op.matrix, &idx, &idx,
    )))
}
