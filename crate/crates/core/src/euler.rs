//! The Euler operator `𝓔 = √2 Σ_j (a_j ⊗ e_j∧ + a_j† ⊗ ι_j)` on
//! `Fock ⊗ Λ(ℂⁿ)`, its zero-order normalization, projection twists over a
//! finite group, and the analytic index by singular-value truncation.
//!
//! `𝓔` conserves total occupation plus form degree, so the reliable block
//! (which is defined by that same quantity) is invariant and exact.

use ndarray::Array2;
use ndarray_linalg::c64;

use crate::error::{Error, Result};
use crate::exterior;
use crate::fock::{self, FockBasis, FockOperator};
use crate::group::{FiniteUnitaryGroup, GroupAlgebraMatrix};
use crate::linalg::{self, cr, dagger, identity, kron};

/// Wedge and contraction operators `e_j∧`, `ι_j` on the `2ⁿ`-dimensional
/// exterior algebra.
pub fn exterior_ops(n: usize) -> (Vec<Array2<c64>>, Vec<Array2<c64>>) {
    let creators = (0..n).map(|j| exterior::creation(j, n)).collect();
    let annihilators = (0..n).map(|j| exterior::annihilation(j, n)).collect();
    (creators, annihilators)
}

/// Assemble `𝓔` as a square matrix on `Fock ⊗ Λ(ℂⁿ)`; it is self-adjoint
/// and exchanges the even and odd form sectors.
pub fn build_euler(basis: &FockBasis) -> FockOperator {
    let n = basis.modes;
    let form_dim = 1 << n;
    let (wedges, contractions) = exterior_ops(n);
    let mut matrix = Array2::zeros((basis.dim() * form_dim, basis.dim() * form_dim));
    let sqrt2 = cr(2.0_f64.sqrt());
    for j in 0..n {
        let a = fock::ladder(j, basis);
        matrix += &kron(&a, &wedges[j]).mapv(|v| v * sqrt2);
        matrix += &kron(&dagger(&a), &contractions[j]).mapv(|v| v * sqrt2);
    }
    FockOperator::with_form_factor(*basis, matrix, form_dim)
}

/// Zero-order reduction `𝓔₀ = (𝓔𝓔* + 1)^{−1/2} 𝓔`; singular values move
/// from `√(2m)` to `√(2m/(2m+1)) < 1`.
pub fn normalize(e: &FockOperator) -> FockOperator {
    let ee = e.matrix.dot(&dagger(&e.matrix));
    let dim = ee.nrows();
    let shifted = &ee + &identity(dim);
    let factor = linalg::hermitian_calculus(&shifted, |v| cr(1.0 / v.max(1e-300).sqrt()));
    FockOperator {
        basis: e.basis,
        matrix: factor.dot(&e.matrix),
        form_factor: e.form_factor,
        components: e.components,
    }
}

/// `‖ρ_g 𝓔 ρ_g⁻¹ − 𝓔‖` on the reliable block.
pub fn equivariance_residual(g: &crate::group::UnitaryElement, basis: &FockBasis) -> Result<f64> {
    let e = build_euler(basis);
    let rho = fock::form_representation(g, basis)?;
    let conj = rho.op.matrix.dot(&e.matrix).dot(&dagger(&rho.op.matrix));
    let diff = FockOperator::with_form_factor(*basis, &conj - &e.matrix, e.form_factor);
    let idx = diff.reliable_indices();
    Ok(linalg::spectral_norm(&linalg::submatrix(
        &diff.matrix,
        &idx,
        &idx,
    )))
}

/// Even/odd form-degree split of the given space indices on
/// `Fock ⊗ Λ ⊗ ℂ^N`.
pub fn graded_split(
    basis: &FockBasis,
    components: usize,
    indices: &[usize],
) -> (Vec<usize>, Vec<usize>) {
    let form_dim = 1 << basis.modes;
    let mut even = Vec::new();
    let mut odd = Vec::new();
    for &i in indices {
        let mask = (i / components) % form_dim;
        if exterior::degree(mask) % 2 == 0 {
            even.push(i);
        } else {
            odd.push(i);
        }
    }
    (even, odd)
}

/// The twisted Euler package: the projection `1⊗P` and `𝓔₀ ⊗ 1_N` on
/// `Fock ⊗ Λ(ℂⁿ) ⊗ ℂ^N`.
#[derive(Clone, Debug)]
pub struct TwistedEuler {
    pub basis: FockBasis,
    pub components: usize,
    /// `1⊗P = Σ_g (1⊗P_g)(ρ_g⊗1_N)`.
    pub projector: FockOperator,
    /// `𝓔₀ ⊗ 1_N` (not yet compressed).
    pub euler0: FockOperator,
    /// `‖[𝓔₀⊗1_N, 1⊗P]‖` on the reliable block.
    pub commutation_defect: f64,
}

const PROJECTION_TOL: f64 = 1e-6;

/// Build `1⊗P` and the compression data of `𝓔₀ ⊗ 1_N` to its range.
pub fn twist_by_projection(
    e0: &FockOperator,
    p: &GroupAlgebraMatrix,
    group: &FiniteUnitaryGroup,
) -> Result<TwistedEuler> {
    if p.components.len() != group.order() {
        return Err(Error::Dimension(
            "projection components do not match the group order".into(),
        ));
    }
    let basis = e0.basis;
    let n_comp = p.size;
    let dim = basis.dim() * e0.form_factor * n_comp;
    let mut proj: Array2<c64> = Array2::zeros((dim, dim));
    for (gi, pg) in p.components.iter().enumerate() {
        if linalg::frobenius(pg) < 1e-15 {
            continue;
        }
        let rho = fock::form_representation(group.element(gi), &basis)?;
        proj += &kron(&rho.op.matrix, pg);
    }
    let projector = FockOperator {
        basis,
        matrix: proj,
        form_factor: e0.form_factor,
        components: n_comp,
    };

    let rel = projector.reliable_indices();
    let proj_rel = linalg::submatrix(&projector.matrix, &rel, &rel);
    let defect = linalg::spectral_norm(&(&proj_rel.dot(&proj_rel) - &proj_rel));
    if defect > PROJECTION_TOL {
        return Err(Error::NotProjection { defect });
    }

    let euler0 = FockOperator {
        basis,
        matrix: kron(&e0.matrix, &identity(n_comp)),
        form_factor: e0.form_factor,
        components: n_comp,
    };
    let e_rel = linalg::submatrix(&euler0.matrix, &rel, &rel);
    let commutation_defect =
        linalg::spectral_norm(&(&e_rel.dot(&proj_rel) - &proj_rel.dot(&e_rel)));

    Ok(TwistedEuler {
        basis,
        components: n_comp,
        projector,
        euler0,
        commutation_defect,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct IndexTols {
    /// Singular values below this count as kernel.
    pub kernel: f64,
    /// The first retained singular value must be at least this.
    pub gap: f64,
}

impl Default for IndexTols {
    fn default() -> Self {
        IndexTols {
            kernel: 1e-6,
            gap: 1e-2,
        }
    }
}

/// Outcome of a single truncated Fredholm-index computation.
#[derive(Clone, Debug)]
pub struct IndexReport {
    pub index: i64,
    pub dim_kernel: usize,
    pub dim_cokernel: usize,
    /// Largest singular value counted as kernel (0 when none).
    pub kernel_ceiling: f64,
    /// Smallest singular value above the kernel threshold (∞ when none).
    pub spectral_floor: f64,
    pub domain_rank: usize,
    pub codomain_rank: usize,
}

/// Kernel minus cokernel of `op` compressed to the range of `proj`,
/// restricted to the listed rows/columns (even = domain, odd = codomain).
pub fn fredholm_index_blocks(
    op: &Array2<c64>,
    proj: &Array2<c64>,
    even: &[usize],
    odd: &[usize],
    tols: IndexTols,
) -> Result<IndexReport> {
    let p_even = linalg::submatrix(proj, even, even);
    let p_odd = linalg::submatrix(proj, odd, odd);
    let b_even = linalg::projection_range(&p_even, PROJECTION_TOL)?;
    let b_odd = linalg::projection_range(&p_odd, PROJECTION_TOL)?;
    let d = linalg::submatrix(op, odd, even);
    let compressed = dagger(&b_odd).dot(&d).dot(&b_even);
    let (domain_rank, codomain_rank) = (b_even.ncols(), b_odd.ncols());
    let sv = linalg::singular_values(&compressed);
    let mut kernel_ceiling = 0.0_f64;
    let mut spectral_floor = f64::INFINITY;
    let mut rank = 0usize;
    for &s in sv.iter() {
        if s < tols.kernel {
            kernel_ceiling = kernel_ceiling.max(s);
        } else {
            spectral_floor = spectral_floor.min(s);
            rank += 1;
        }
    }
    if spectral_floor < tols.gap {
        return Err(Error::GapFailure {
            below: kernel_ceiling,
            above: spectral_floor,
        });
    }
    let dim_kernel = domain_rank - rank;
    let dim_cokernel = codomain_rank - rank;
    Ok(IndexReport {
        index: dim_kernel as i64 - dim_cokernel as i64,
        dim_kernel,
        dim_cokernel,
        kernel_ceiling,
        spectral_floor,
        domain_rank,
        codomain_rank,
    })
}

/// Analytic index of a twisted Euler operator on the reliable block.
pub fn analytic_index(twist: &TwistedEuler, tols: IndexTols) -> Result<IndexReport> {
    let rel = twist.projector.reliable_indices();
    let (even, odd) = graded_split(&twist.basis, twist.components, &rel);
    fredholm_index_blocks(
        &twist.euler0.matrix,
        &twist.projector.matrix,
        &even,
        &odd,
        tols,
    )
}

/// The twisted Euler index computed at two truncation levels (`K` and
/// `K + bump`); fails with `UnstableIndex` when the integers disagree.
pub fn analytic_index_stable(
    group: &FiniteUnitaryGroup,
    p: &GroupAlgebraMatrix,
    basis: &FockBasis,
    bump: usize,
    tols: IndexTols,
) -> Result<IndexReport> {
    let build = |b: &FockBasis| -> Result<IndexReport> {
        let euler = build_euler(b);
        let e0 = normalize(&euler);
        let twist = twist_by_projection(&e0, p, group)?;
        analytic_index(&twist, tols)
    };
    let first = build(basis)?;
    let margin2 = ((basis.margin as f64) * (basis.cutoff + bump) as f64 / basis.cutoff as f64)
        .round() as usize;
    let basis2 = FockBasis::new(basis.modes, basis.cutoff + bump, margin2)?;
    let second = build(&basis2)?;
    if first.index != second.index {
        return Err(Error::UnstableIndex {
            first: first.index,
            second: second.index,
            k_first: basis.cutoff,
            k_second: basis2.cutoff,
        });
    }
    Ok(first)
}
