//! Bitmask exterior algebra.
//!
//! Two consumers share this module: operators on the form factor `Λ(ℂⁿ)`
//! of the Fock space (dimension `2ⁿ`, basis indexed by subsets of modes),
//! and differential-form *values* over the `2n` real covectors
//! `dx₁..dxₙ, dp₁..dpₙ` of phase space (dimension `2^(2n)`). Basis element
//! of mask `m` is the wedge of the covectors whose bits are set, in
//! increasing index order.

use ndarray::Array2;
use ndarray_linalg::c64;

use crate::linalg::{cr, dagger};

/// Koszul sign of `e^{m1} ∧ e^{m2}` relative to the canonical order;
/// zero when the masks overlap.
pub fn wedge_sign(m1: usize, m2: usize) -> i32 {
    if m1 & m2 != 0 {
        return 0;
    }
    // Count transpositions: for each generator in m2, the generators of m1
    // above it must jump over it.
    let mut sign = 0u32;
    let mut b = m2;
    while b != 0 {
        let j = b.trailing_zeros() as usize;
        sign += (m1 >> (j + 1)).count_ones();
        b &= b - 1;
    }
    if sign % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn degree(mask: usize) -> usize {
    mask.count_ones() as usize
}

/// Matrix of the wedge-by-`e_j` operator on the `2ⁿ`-dimensional algebra.
pub fn creation(j: usize, n: usize) -> Array2<c64> {
    let dim = 1 << n;
    let mut out = Array2::zeros((dim, dim));
    for m in 0..dim {
        let s = wedge_sign(1 << j, m);
        if s != 0 {
            out[(m | (1 << j), m)] = cr(s as f64);
        }
    }
    out
}

/// Contraction `ι_j = (e_j∧)†`.
pub fn annihilation(j: usize, n: usize) -> Array2<c64> {
    dagger(&creation(j, n))
}

/// Indices of basis elements of even/odd degree.
pub fn graded_indices(n: usize) -> (Vec<usize>, Vec<usize>) {
    let dim = 1 << n;
    let mut even = Vec::new();
    let mut odd = Vec::new();
    for m in 0..dim {
        if degree(m) % 2 == 0 {
            even.push(m);
        } else {
            odd.push(m);
        }
    }
    (even, odd)
}

fn minor_det(u: &Array2<c64>, rows: &[usize], cols: &[usize]) -> c64 {
    let k = rows.len();
    match k {
        0 => cr(1.0),
        1 => u[(rows[0], cols[0])],
        2 => {
            u[(rows[0], cols[0])] * u[(rows[1], cols[1])]
                - u[(rows[0], cols[1])] * u[(rows[1], cols[0])]
        }
        _ => {
            // Laplace expansion along the first row; k stays tiny here.
            let mut acc = c64::new(0.0, 0.0);
            let mut sign = 1.0;
            for (idx, &c) in cols.iter().enumerate() {
                let sub_cols: Vec<usize> = cols
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != idx)
                    .map(|(_, &v)| v)
                    .collect();
                acc += cr(sign) * u[(rows[0], c)] * minor_det(u, &rows[1..], &sub_cols);
                sign = -sign;
            }
            acc
        }
    }
}

fn mask_bits(mask: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut b = mask;
    while b != 0 {
        out.push(b.trailing_zeros() as usize);
        b &= b - 1;
    }
    out
}

/// Functorial extension `Λ(U)` of a linear map to the exterior algebra:
/// `Λ(U)(e_{i₁}∧…∧e_{i_k}) = (U e_{i₁})∧…∧(U e_{i_k})`.
pub fn lambda_matrix(u: &Array2<c64>) -> Array2<c64> {
    let n = u.nrows();
    let dim = 1 << n;
    let mut out = Array2::zeros((dim, dim));
    for m_in in 0..dim {
        let cols = mask_bits(m_in);
        for m_out in 0..dim {
            if degree(m_out) != cols.len() {
                continue;
            }
            let rows = mask_bits(m_out);
            out[(m_out, m_in)] = minor_det(u, &rows, &cols);
        }
    }
    out
}

/// Linear covector substitution table. `rows[i]` expands the `i`-th input
/// covector in the output basis; entry `table[mask]` lists the `(mask, coeff)`
/// pairs of the wedge of the substituted covectors of `mask`.
pub fn covector_table(rows: &[Vec<f64>], out_gens: usize) -> Vec<Vec<(usize, f64)>> {
    let in_gens = rows.len();
    let dim_in = 1usize << in_gens;
    let dim_out = 1usize << out_gens;
    let mut table = Vec::with_capacity(dim_in);
    for mask in 0..dim_in {
        let mut acc = vec![0.0f64; dim_out];
        acc[0] = 1.0;
        for b in mask_bits(mask) {
            let mut next = vec![0.0f64; dim_out];
            for (m, &coeff) in acc.iter().enumerate() {
                if coeff == 0.0 {
                    continue;
                }
                for (j, &rj) in rows[b].iter().enumerate() {
                    if rj == 0.0 {
                        continue;
                    }
                    let s = wedge_sign(m, 1 << j);
                    if s != 0 {
                        next[m | (1 << j)] += coeff * rj * s as f64;
                    }
                }
            }
            acc = next;
        }
        table.push(
            acc.iter()
                .enumerate()
                .filter(|&(_, &v)| v != 0.0)
                .map(|(m, &v)| (m, v))
                .collect(),
        );
    }
    table
}

/// `out += sign · a·b` with raw index loops; the coefficient matrices are
/// small (size ≤ a few dozen), where generic matmul dispatch costs more than
/// the arithmetic.
fn mul_acc_small(a: &Array2<c64>, b: &Array2<c64>, sign: f64, out: &mut Array2<c64>) {
    let n = a.nrows();
    let (a_s, b_s) = (
        a.as_slice().expect("standard layout"),
        b.as_slice().expect("standard layout"),
    );
    let o = out.as_slice_mut().expect("standard layout");
    for i in 0..n {
        for k in 0..n {
            let aik = a_s[i * n + k];
            if aik.re == 0.0 && aik.im == 0.0 {
                continue;
            }
            let aik = aik * cr(sign);
            for j in 0..n {
                o[i * n + j] += aik * b_s[k * n + j];
            }
        }
    }
}

/// Matrix-valued exterior element: `coeff[mask]` is the `size × size`
/// coefficient of the basis wedge monomial `mask`.
#[derive(Clone, Debug)]
pub struct FormValue {
    pub gens: usize,
    pub size: usize,
    pub coeff: Vec<Array2<c64>>,
}

impl FormValue {
    pub fn zero(gens: usize, size: usize) -> Self {
        FormValue {
            gens,
            size,
            coeff: vec![Array2::zeros((size, size)); 1 << gens],
        }
    }

    pub fn from_degree0(gens: usize, m: Array2<c64>) -> Self {
        let size = m.nrows();
        let mut v = FormValue::zero(gens, size);
        v.coeff[0] = m;
        v
    }

    pub fn is_mask_zero(&self, mask: usize) -> bool {
        self.coeff[mask].iter().all(|v| v.norm_sqr() == 0.0)
    }

    pub fn add_assign(&mut self, other: &FormValue) {
        for (a, b) in self.coeff.iter_mut().zip(other.coeff.iter()) {
            *a += b;
        }
    }

    pub fn sub_assign(&mut self, other: &FormValue) {
        for (a, b) in self.coeff.iter_mut().zip(other.coeff.iter()) {
            *a -= b;
        }
    }

    pub fn scale(&mut self, factor: c64) {
        for a in self.coeff.iter_mut() {
            a.mapv_inplace(|v| v * factor);
        }
    }

    /// Graded matrix product: wedge on monomials, matrix product on
    /// coefficients.
    pub fn wedge_mul(&self, other: &FormValue) -> FormValue {
        let mut out = FormValue::zero(self.gens, self.size);
        let act1: Vec<usize> = (0..self.coeff.len())
            .filter(|&m| !self.is_mask_zero(m))
            .collect();
        let act2: Vec<usize> = (0..other.coeff.len())
            .filter(|&m| !other.is_mask_zero(m))
            .collect();
        for &m1 in &act1 {
            for &m2 in &act2 {
                if m1 & m2 != 0 {
                    continue;
                }
                let s = wedge_sign(m1, m2);
                if s == 0 {
                    continue;
                }
                mul_acc_small(
                    &self.coeff[m1],
                    &other.coeff[m2],
                    s as f64,
                    &mut out.coeff[m1 | m2],
                );
            }
        }
        out
    }

    /// Substitute covectors according to `table` (built by [`covector_table`]),
    /// leaving coefficients evaluated where they are.
    pub fn substitute(&self, table: &[Vec<(usize, f64)>], out_gens: usize) -> FormValue {
        let mut out = FormValue::zero(out_gens, self.size);
        for (mask, entries) in table.iter().enumerate() {
            if self.is_mask_zero(mask) {
                continue;
            }
            for &(m_out, t) in entries {
                out.coeff[m_out].scaled_add(cr(t), &self.coeff[mask]);
            }
        }
        out
    }

    /// Matrix trace, leaving a scalar exterior element.
    pub fn matrix_trace(&self) -> Vec<c64> {
        self.coeff
            .iter()
            .map(|m| (0..self.size).map(|i| m[(i, i)]).sum())
            .collect()
    }

    /// Coefficient of the top wedge monomial.
    pub fn top_coefficient(&self) -> Array2<c64> {
        self.coeff[(1 << self.gens) - 1].clone()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeff
            .iter()
            .flat_map(|m| m.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn degree_part(&self, deg: usize) -> FormValue {
        let mut out = FormValue::zero(self.gens, self.size);
        for m in 0..self.coeff.len() {
            if degree(m) == deg {
                out.coeff[m] = self.coeff[m].clone();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use approx::assert_relative_eq;

    #[test]
    fn wedge_sign_basics() {
        assert_eq!(wedge_sign(0b01, 0b10), 1); // e1 ∧ e2 canonical
        assert_eq!(wedge_sign(0b10, 0b01), -1); // e2 ∧ e1 = -e1 ∧ e2
        assert_eq!(wedge_sign(0b01, 0b01), 0);
    }

    #[test]
    fn wedge_sign_three_generators() {
        // e1∧e3 ∧ e2: moving e2 past e3 gives one transposition → sign -1.
        // wedge_sign counts bits of m1 above each bit of m2: m1=0b101, m2=0b010,
        // bit 1 of m2 has one bit of m1 above it (bit 2) → -1.
        assert_eq!(wedge_sign(0b101, 0b010), -1);
    }

    #[test]
    fn creation_n1_matches_block_form() {
        let e = creation(0, 1);
        assert_relative_eq!(e[(1, 0)].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(e[(0, 0)].re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(e[(0, 1)].re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(e[(1, 1)].re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn anticommutators_exact() {
        let n = 3;
        let dim = 1 << n;
        for j in 0..n {
            for k in 0..n {
                let ej = creation(j, n);
                let ik = annihilation(k, n);
                let anti = ej.dot(&ik) + ik.dot(&ej);
                let expect = if j == k {
                    identity(dim)
                } else {
                    Array2::zeros((dim, dim))
                };
                assert!(crate::linalg::frobenius(&(&anti - &expect)) < 1e-14);
            }
        }
    }

    #[test]
    fn grading_counts_degree() {
        let n = 2;
        let mut grading: Array2<c64> = Array2::zeros((4, 4));
        for j in 0..n {
            grading += &creation(j, n).dot(&annihilation(j, n));
        }
        let mut eigs: Vec<f64> = (0..4).map(|m| grading[(m, m)].re).collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(eigs, vec![0.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn lambda_matrix_multiplicative() {
        let mut u = Array2::zeros((2, 2));
        u[(0, 0)] = cr(0.6);
        u[(0, 1)] = cr(-0.8);
        u[(1, 0)] = cr(0.8);
        u[(1, 1)] = cr(0.6);
        let l = lambda_matrix(&u);
        let l2 = lambda_matrix(&u.dot(&u));
        assert!(crate::linalg::frobenius(&(&l.dot(&l) - &l2)) < 1e-13);
        // Top block is det(u) = 1.
        assert_relative_eq!(l[(3, 3)].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn covector_substitution_identity() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let table = covector_table(&rows, 2);
        assert_eq!(table[0b11], vec![(0b11, 1.0)]);
    }

    #[test]
    fn covector_substitution_swap_flips_sign() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let table = covector_table(&rows, 2);
        assert_eq!(table[0b11], vec![(0b11, -1.0)]);
    }

    #[test]
    fn wedge_mul_associative_on_samples() {
        // Random-ish small forms over 4 covectors with 2×2 matrix entries.
        let mk = |seed: u64| {
            let mut v = FormValue::zero(4, 2);
            let mut s = seed;
            for mask in 0..16usize {
                for i in 0..2 {
                    for j in 0..2 {
                        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        let x = ((s >> 33) as f64) / (u32::MAX as f64) - 0.5;
                        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        let y = ((s >> 33) as f64) / (u32::MAX as f64) - 0.5;
                        v.coeff[mask][(i, j)] = c64::new(x, y);
                    }
                }
            }
            v
        };
        let (a, b, c) = (mk(1), mk(2), mk(3));
        let left = a.wedge_mul(&b).wedge_mul(&c);
        let right = a.wedge_mul(&b.wedge_mul(&c));
        let mut diff = left.clone();
        diff.sub_assign(&right);
        assert!(diff.max_abs() < 1e-12);
    }
}
