//! Crossed-product-valued symbols on phase space, ellipticity certificates,
//! the difference construction, exterior products and the rotation homotopy.
//!
//! A symbol is a collection `{a_g(z)}` of matrix-valued functions indexed by
//! the group, multiplying by the twisted convolution
//! `(a·b)_g(z) = Σ_{g₁g₂=g} a_{g₁}(z)·b_{g₂}(g₁⁻¹z)`. For finite `G` the
//! pointwise regular representation `π_z` is a faithful *-homomorphism into
//! `|G|·N` matrices; every invertibility question is answered there.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use ndarray_linalg::c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exterior;
use crate::group::{FiniteUnitaryGroup, GroupAlgebraMatrix, UnitaryElement};
use crate::linalg::{self, cr, dagger, identity, kron, I};

/// Phase-space point in real coordinates; the complex coordinate is
/// `z = p + ix`.
#[derive(Clone, Debug)]
pub struct Point {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl Point {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Self {
        assert_eq!(x.len(), p.len());
        Point { x, p }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn z(&self) -> Vec<c64> {
        self.x
            .iter()
            .zip(self.p.iter())
            .map(|(&x, &p)| c64::new(p, x))
            .collect()
    }

    pub fn from_z(z: &[c64]) -> Self {
        Point {
            x: z.iter().map(|v| v.im).collect(),
            p: z.iter().map(|v| v.re).collect(),
        }
    }

    pub fn radius(&self) -> f64 {
        self.x
            .iter()
            .chain(self.p.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Real coordinate `ξ_d` with the ordering `(x₁..x_n, p₁..p_n)`.
    pub fn coord(&self, d: usize) -> f64 {
        let n = self.dim();
        if d < n {
            self.x[d]
        } else {
            self.p[d - n]
        }
    }

    /// Image under the linear action `z ↦ g·z`.
    pub fn apply(&self, g: &UnitaryElement) -> Point {
        let z = self.z();
        let m = g.matrix();
        let n = self.dim();
        let mut out = vec![c64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                out[i] += m[(i, j)] * z[j];
            }
        }
        Point::from_z(&out)
    }
}

pub type SymbolValues = Vec<Array2<c64>>;
/// Gradients indexed `[g][direction]` with directions `(x₁..x_n, p₁..p_n)`.
pub type SymbolGrads = Vec<Vec<Array2<c64>>>;

type ValueFn = dyn Fn(&Point) -> SymbolValues + Send + Sync;
type GradFn = dyn Fn(&Point) -> SymbolGrads + Send + Sync;

/// Smooth map `ℂⁿ → Mat_N(ℂ[G])` with exact first-derivative callbacks.
#[derive(Clone)]
pub struct MatrixSymbolField {
    pub group: Arc<FiniteUnitaryGroup>,
    pub n: usize,
    pub size: usize,
    /// Degree of homogeneity outside the unit ball, when applicable.
    pub homogeneity: Option<f64>,
    value_fn: Arc<ValueFn>,
    grad_fn: Option<Arc<GradFn>>,
}

impl MatrixSymbolField {
    pub fn new(
        group: Arc<FiniteUnitaryGroup>,
        n: usize,
        size: usize,
        value_fn: Arc<ValueFn>,
        grad_fn: Option<Arc<GradFn>>,
    ) -> Self {
        MatrixSymbolField {
            group,
            n,
            size,
            homogeneity: None,
            value_fn,
            grad_fn,
        }
    }

    pub fn eval(&self, pt: &Point) -> SymbolValues {
        (self.value_fn)(pt)
    }

    pub fn grad(&self, pt: &Point) -> Result<SymbolGrads> {
        match &self.grad_fn {
            Some(g) => Ok(g(pt)),
            None => Err(Error::Invalid(
                "symbol has no derivative callbacks".into(),
            )),
        }
    }

    pub fn has_grad(&self) -> bool {
        self.grad_fn.is_some()
    }

    /// Constant symbol from a group-algebra matrix.
    pub fn constant(group: Arc<FiniteUnitaryGroup>, n: usize, p: &GroupAlgebraMatrix) -> Self {
        let comps = p.components.clone();
        let size = p.size;
        let order = group.order();
        let value_fn = Arc::new(move |_: &Point| comps.clone());
        let grad_fn: Arc<GradFn> = Arc::new(move |_: &Point| {
            vec![vec![Array2::zeros((size, size)); 2 * n]; order]
        });
        MatrixSymbolField {
            group,
            n,
            size,
            homogeneity: Some(0.0),
            value_fn,
            grad_fn: Some(grad_fn),
        }
    }

    /// Twisted convolution product; gradients combine by the Leibniz rule
    /// with the chain factor of the base translation.
    pub fn multiply(&self, other: &MatrixSymbolField) -> MatrixSymbolField {
        assert_eq!(self.group.order(), other.group.order());
        assert_eq!(self.size, other.size);
        let group = self.group.clone();
        let order = group.order();
        let size = self.size;
        let n = self.n;

        let a = self.clone();
        let b = other.clone();
        let group_v = group.clone();
        let value_fn = Arc::new(move |pt: &Point| -> SymbolValues {
            let av = a.eval(pt);
            let mut out = vec![Array2::zeros((size, size)); order];
            for g1 in 0..order {
                let moved = pt.apply(group_v.element(group_v.inv(g1)));
                let bv = b.eval(&moved);
                for g2 in 0..order {
                    let g = group_v.mul(g1, g2);
                    out[g] = &out[g] + &av[g1].dot(&bv[g2]);
                }
            }
            out
        });

        let grad_fn: Option<Arc<GradFn>> = if self.has_grad() && other.has_grad() {
            let a = self.clone();
            let b = other.clone();
            let group_g = group.clone();
            Some(Arc::new(move |pt: &Point| -> SymbolGrads {
                let av = a.eval(pt);
                let ag = a.grad(pt).expect("grad checked");
                let mut out = vec![vec![Array2::zeros((size, size)); 2 * n]; order];
                for g1 in 0..order {
                    let inv = group_g.element(group_g.inv(g1));
                    let moved = pt.apply(inv);
                    let bv = b.eval(&moved);
                    let bg = b.grad(&moved).expect("grad checked");
                    let t = inv.real_transform();
                    for g2 in 0..order {
                        let g = group_g.mul(g1, g2);
                        for d in 0..2 * n {
                            // ∂(a·b) = (∂a)·b + a·(∂b ∘ chain)
                            out[g][d] = &out[g][d] + &ag[g1][d].dot(&bv[g2]);
                            let mut chain: Array2<c64> = Array2::zeros((size, size));
                            for e in 0..2 * n {
                                let w = t[(e, d)];
                                if w != 0.0 {
                                    chain = &chain + &bg[g2][e].mapv(|v| v * cr(w));
                                }
                            }
                            out[g][d] = &out[g][d] + &av[g1].dot(&chain);
                        }
                    }
                }
                out
            }))
        } else {
            None
        };

        MatrixSymbolField {
            group,
            n,
            size,
            homogeneity: None,
            value_fn,
            grad_fn,
        }
    }

    /// Crossed-product adjoint: `(a*)_g(z) = (a_{g⁻¹})†(g⁻¹·z)`.
    pub fn adjoint(&self) -> MatrixSymbolField {
        let group = self.group.clone();
        let order = group.order();
        let size = self.size;
        let n = self.n;
        let a = self.clone();
        let group_v = group.clone();
        let value_fn = Arc::new(move |pt: &Point| -> SymbolValues {
            let mut out = vec![Array2::zeros((size, size)); order];
            for g in 0..order {
                let ginv = group_v.inv(g);
                let moved = pt.apply(group_v.element(ginv));
                let av = a.eval(&moved);
                out[g] = dagger(&av[ginv]);
            }
            out
        });
        let grad_fn: Option<Arc<GradFn>> = if self.has_grad() {
            let a = self.clone();
            let group_g = group.clone();
            Some(Arc::new(move |pt: &Point| -> SymbolGrads {
                let mut out = vec![vec![Array2::zeros((size, size)); 2 * n]; order];
                for g in 0..order {
                    let ginv = group_g.inv(g);
                    let el = group_g.element(ginv);
                    let moved = pt.apply(el);
                    let ag = a.grad(&moved).expect("grad checked");
                    let t = el.real_transform();
                    for d in 0..2 * n {
                        let mut acc: Array2<c64> = Array2::zeros((size, size));
                        for e in 0..2 * n {
                            let w = t[(e, d)];
                            if w != 0.0 {
                                acc = &acc + &dagger(&ag[ginv][e]).mapv(|v| v * cr(w));
                            }
                        }
                        out[g][d] = acc;
                    }
                }
                out
            }))
        } else {
            None
        };
        MatrixSymbolField {
            group,
            n,
            size,
            homogeneity: self.homogeneity,
            value_fn,
            grad_fn,
        }
    }

    /// Compare the derivative callbacks against central finite differences
    /// at the given points.
    pub fn derivative_check(&self, points: &[Point], step: f64, rel_tol: f64) -> Result<()> {
        for pt in points {
            let grads = self.grad(pt)?;
            for d in 0..2 * self.n {
                let mut plus = pt.clone();
                let mut minus = pt.clone();
                if d < self.n {
                    plus.x[d] += step;
                    minus.x[d] -= step;
                } else {
                    plus.p[d - self.n] += step;
                    minus.p[d - self.n] -= step;
                }
                let vp = self.eval(&plus);
                let vm = self.eval(&minus);
                for g in 0..self.group.order() {
                    let fd = (&vp[g] - &vm[g]).mapv(|v| v / cr(2.0 * step));
                    let diff = linalg::frobenius(&(&fd - &grads[g][d]));
                    let scale = linalg::frobenius(&grads[g][d]).max(1.0);
                    if diff / scale > rel_tol {
                        return Err(Error::DerivativeMismatch {
                            rel_err: diff / scale,
                            direction: d,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Regular representation of a constant group-algebra matrix:
/// block `(h, h') = P_{h h'⁻¹}`.
pub fn regular_rep_constant(p: &GroupAlgebraMatrix, group: &FiniteUnitaryGroup) -> Array2<c64> {
    let order = group.order();
    let m = p.size;
    let mut out = Array2::zeros((order * m, order * m));
    for h in 0..order {
        for hp in 0..order {
            let g = group.mul(h, group.inv(hp));
            let block = &p.components[g];
            for i in 0..m {
                for j in 0..m {
                    out[(h * m + i, hp * m + j)] = block[(i, j)];
                }
            }
        }
    }
    out
}

/// Pointwise regular representation `π_z(a)_{h,h'} = a_{hh'⁻¹}(h·z)`;
/// multiplicative and *-preserving in `z` for the twisted product.
pub fn regular_representation(sym: &MatrixSymbolField, pt: &Point) -> Array2<c64> {
    let group = &sym.group;
    let order = group.order();
    let m = sym.size;
    let evals: Vec<SymbolValues> = (0..order)
        .map(|h| sym.eval(&pt.apply(group.element(h))))
        .collect();
    let mut out = Array2::zeros((order * m, order * m));
    for h in 0..order {
        for hp in 0..order {
            let g = group.mul(h, group.inv(hp));
            let block = &evals[h][g];
            for i in 0..m {
                for j in 0..m {
                    out[(h * m + i, hp * m + j)] = block[(i, j)];
                }
            }
        }
    }
    out
}

/// Derivatives of the regular representation in each real direction;
/// the `h`-row picks up the chain factor of the translation by `h`.
fn regular_representation_grad(sym: &MatrixSymbolField, pt: &Point) -> Result<Vec<Array2<c64>>> {
    let group = &sym.group;
    let order = group.order();
    let n = sym.n;
    let m = sym.size;
    let mut out = vec![Array2::zeros((order * m, order * m)); 2 * n];
    for h in 0..order {
        let el = group.element(h);
        let moved = pt.apply(el);
        let grads = sym.grad(&moved)?;
        let t = el.real_transform();
        for hp in 0..order {
            let g = group.mul(h, group.inv(hp));
            for d in 0..2 * n {
                let mut acc: Array2<c64> = Array2::zeros((m, m));
                for e in 0..2 * n {
                    let w = t[(e, d)];
                    if w != 0.0 {
                        acc = &acc + &grads[g][e].mapv(|v| v * cr(w));
                    }
                }
                for i in 0..m {
                    for j in 0..m {
                        out[d][(h * m + i, hp * m + j)] = acc[(i, j)];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Intertwiners for an equivariant plain symbol: one unitary per group
/// element, commuting with the symbol's projections, with
/// `b(g·w)·ρ(g) = ρ(g)·b(w)`.
#[derive(Clone)]
pub struct Equivariance {
    pub intertwiners: Vec<Array2<c64>>,
}

/// A symbol together with its projections and the sphere radius at which
/// ellipticity is certified.
#[derive(Clone)]
pub struct EllipticTriple {
    pub symbol: MatrixSymbolField,
    pub p1: GroupAlgebraMatrix,
    pub p2: GroupAlgebraMatrix,
    pub radius: f64,
    pub equivariance: Option<Equivariance>,
    pub product_parts: Option<Box<(EllipticTriple, EllipticTriple)>>,
}

impl EllipticTriple {
    pub fn new(
        symbol: MatrixSymbolField,
        p1: GroupAlgebraMatrix,
        p2: GroupAlgebraMatrix,
        radius: f64,
    ) -> Self {
        EllipticTriple {
            symbol,
            p1,
            p2,
            radius,
            equivariance: None,
            product_parts: None,
        }
    }

    /// Enforce the compatibility `a = P₂·a·P₁` by replacement.
    pub fn compressed(&self) -> EllipticTriple {
        let group = self.symbol.group.clone();
        let n = self.symbol.n;
        let left = MatrixSymbolField::constant(group.clone(), n, &self.p2);
        let right = MatrixSymbolField::constant(group, n, &self.p1);
        let symbol = left.multiply(&self.symbol).multiply(&right);
        EllipticTriple {
            symbol: MatrixSymbolField {
                homogeneity: self.symbol.homogeneity,
                ..symbol
            },
            p1: self.p1.clone(),
            p2: self.p2.clone(),
            radius: self.radius,
            equivariance: self.equivariance.clone(),
            product_parts: self.product_parts.clone(),
        }
    }
}

/// Deterministic sample of the sphere of the given radius in `ℝ^{2n}`.
pub fn sphere_points(n: usize, radius: f64, count: usize, seed: u64) -> Vec<Point> {
    let mut out = Vec::with_capacity(count + 4 * n);
    if n == 1 {
        for k in 0..count.max(8) {
            let th = 2.0 * PI * (k as f64 + 0.37) / count.max(8) as f64;
            out.push(Point::new(
                vec![radius * th.sin()],
                vec![radius * th.cos()],
            ));
        }
        return out;
    }
    // Axis points first, then seeded Gaussian directions.
    for d in 0..2 * n {
        for sign in [1.0, -1.0] {
            let mut x = vec![0.0; n];
            let mut p = vec![0.0; n];
            if d < n {
                x[d] = sign * radius;
            } else {
                p[d - n] = sign * radius;
            }
            out.push(Point::new(x, p));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count + 4 * n {
        let v: Vec<f64> = (0..2 * n)
            .map(|_| {
                // Box-Muller from two uniforms.
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
            })
            .collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        let scaled: Vec<f64> = v.iter().map(|a| a * radius / norm).collect();
        out.push(Point::new(
            scaled[..n].to_vec(),
            scaled[n..].to_vec(),
        ));
    }
    out
}

const ELLIPTIC_TOL: f64 = 1e-6;

/// Ellipticity certificate: the minimum over a sphere sample of the smallest
/// eigenvalue of `π(a*a)` on `Im π(P₁)` and of `π(aa*)` on `Im π(P₂)`.
pub fn check_elliptic(triple: &EllipticTriple, radius: f64, grid: usize) -> Result<f64> {
    let sym = &triple.symbol;
    let group = sym.group.as_ref();
    let pi_p1 = regular_rep_constant(&triple.p1, group);
    let pi_p2 = regular_rep_constant(&triple.p2, group);
    let b1 = linalg::projection_range(&pi_p1, 1e-8)?;
    let b2 = linalg::projection_range(&pi_p2, 1e-8)?;
    let radii: Vec<f64> = match sym.homogeneity {
        Some(_) => vec![radius],
        None => vec![radius, 1.5 * radius, 2.0 * radius],
    };
    let mut certificate = f64::INFINITY;
    for r in radii {
        for pt in sphere_points(sym.n, r, grid, 240817) {
            let f = regular_representation(sym, &pt);
            let m1 = dagger(&b1).dot(&dagger(&f)).dot(&f).dot(&b1);
            let m2 = dagger(&b2).dot(&f).dot(&dagger(&f)).dot(&b2);
            for m in [m1, m2] {
                if m.nrows() == 0 {
                    continue;
                }
                let (vals, _) = linalg::eigh(&m);
                let low = vals[0];
                if low < certificate {
                    certificate = low;
                    if certificate <= ELLIPTIC_TOL {
                        let mut coords = pt.x.clone();
                        coords.extend_from_slice(&pt.p);
                        return Err(Error::NotElliptic {
                            certificate,
                            point: coords,
                        });
                    }
                }
            }
        }
    }
    Ok(certificate)
}

/// `σ(𝓔)(z) = Σ_j (i·z̄_j)e_j∧ − (i·z_j)ι_j` with values in `End(Λ(ℂⁿ))`,
/// supported on the trivial group component. Satisfies `σ(𝓔)² = |z|²·Id`.
pub fn euler_symbol(n: usize, group: Arc<FiniteUnitaryGroup>) -> MatrixSymbolField {
    let dim = 1 << n;
    let order = group.order();
    let identity_index = group.identity_index();
    let wedges: Vec<Array2<c64>> = (0..n).map(|j| exterior::creation(j, n)).collect();
    let contractions: Vec<Array2<c64>> = (0..n).map(|j| exterior::annihilation(j, n)).collect();
    let w2 = wedges.clone();
    let c2 = contractions.clone();
    let value_fn = Arc::new(move |pt: &Point| -> SymbolValues {
        let z = pt.z();
        let mut v: Array2<c64> = Array2::zeros((dim, dim));
        for j in 0..n {
            v = &v + &w2[j].mapv(|e| e * I * z[j].conj());
            v = &v - &c2[j].mapv(|e| e * I * z[j]);
        }
        let mut out = vec![Array2::zeros((dim, dim)); order];
        out[identity_index] = v;
        out
    });
    let grad_fn: Arc<GradFn> = Arc::new(move |_pt: &Point| -> SymbolGrads {
        let mut out = vec![vec![Array2::zeros((dim, dim)); 2 * n]; order];
        for j in 0..n {
            // ∂/∂x_j: z_j = p_j + i x_j, so ∂z̄/∂x = −i, ∂z/∂x = i.
            out[identity_index][j] = &wedges[j] + &contractions[j];
            // ∂/∂p_j.
            out[identity_index][n + j] =
                (&wedges[j] - &contractions[j]).mapv(|e| e * I);
        }
        out
    });
    let mut sym = MatrixSymbolField::new(group, n, dim, value_fn, Some(grad_fn));
    sym.homogeneity = Some(1.0);
    sym
}

/// Degree-0 normalization `σ(𝓔₀) = σ(𝓔)/|z|`, defined as 0 at the origin.
pub fn euler_symbol_normalized(n: usize, group: Arc<FiniteUnitaryGroup>) -> MatrixSymbolField {
    let raw = euler_symbol(n, group.clone());
    let order = group.order();
    let dim = 1 << n;
    let raw_v = raw.clone();
    let value_fn = Arc::new(move |pt: &Point| -> SymbolValues {
        let r = pt.radius();
        if r < 1e-14 {
            return vec![Array2::zeros((dim, dim)); order];
        }
        raw_v
            .eval(pt)
            .into_iter()
            .map(|m| m.mapv(|v| v / cr(r)))
            .collect()
    });
    let raw_g = raw.clone();
    let grad_fn: Arc<GradFn> = Arc::new(move |pt: &Point| -> SymbolGrads {
        let r = pt.radius();
        let vals = raw_g.eval(pt);
        let grads = raw_g.grad(pt).expect("euler symbol has grads");
        let n = raw_g.n;
        let mut out = vec![vec![Array2::zeros((dim, dim)); 2 * n]; order];
        for g in 0..order {
            for d in 0..2 * n {
                // ∂(σ/r) = ∂σ/r − σ·ξ_d/r³.
                let xi = pt.coord(d);
                out[g][d] = &grads[g][d].mapv(|v| v / cr(r))
                    - &vals[g].mapv(|v| v * cr(xi / (r * r * r)));
            }
        }
        out
    });
    let mut sym = MatrixSymbolField::new(group, n, dim, value_fn, Some(grad_fn));
    sym.homogeneity = Some(0.0);
    sym
}

/// Even/odd projectors on `Λ(ℂⁿ) ⊗ ℂ^N` as diagonal 0/1 matrices.
pub fn graded_projectors(n: usize, ncomp: usize) -> (Array2<c64>, Array2<c64>) {
    let dim = (1 << n) * ncomp;
    let mut even = Array2::zeros((dim, dim));
    let mut odd = Array2::zeros((dim, dim));
    for m in 0..(1 << n) {
        for c in 0..ncomp {
            let i = m * ncomp + c;
            if exterior::degree(m) % 2 == 0 {
                even[(i, i)] = cr(1.0);
            } else {
                odd[(i, i)] = cr(1.0);
            }
        }
    }
    (even, odd)
}

/// The Bott element `β(P)`: the triple
/// `(σ(𝓔₀)⊗1_N · (1⊗P), Π_ev(1⊗P), Π_odd(1⊗P))` with
/// `(1⊗P)_g = Λ(ḡ) ⊗ P_g`.
pub fn bott_map(
    p: &GroupAlgebraMatrix,
    n: usize,
    group: Arc<FiniteUnitaryGroup>,
) -> Result<EllipticTriple> {
    if p.components.len() != group.order() {
        return Err(Error::Dimension(
            "projection does not match the group order".into(),
        ));
    }
    let ncomp = p.size;
    let order = group.order();
    let size = (1 << n) * ncomp;
    // (1⊗P)_g = Λ(conj(g)) ⊗ P_g.
    let mut one_p = GroupAlgebraMatrix::zeros(order, size);
    for g in 0..order {
        let conj = group.element(g).matrix().mapv(|v| v.conj());
        one_p.components[g] = kron(&exterior::lambda_matrix(&conj), &p.components[g]);
    }
    let (even, odd) = graded_projectors(n, ncomp);
    let mut p1 = GroupAlgebraMatrix::zeros(order, size);
    let mut p2 = GroupAlgebraMatrix::zeros(order, size);
    for g in 0..order {
        p1.components[g] = even.dot(&one_p.components[g]);
        p2.components[g] = odd.dot(&one_p.components[g]);
    }

    let sigma = euler_symbol_normalized(n, group.clone());
    let one_p_v = one_p.clone();
    let ncomp_v = ncomp;
    let odd_v = odd.clone();
    let even_v = even.clone();
    let sig_v = sigma.clone();
    let value_fn = Arc::new(move |pt: &Point| -> SymbolValues {
        let s0 = &sig_v.eval(pt)[sig_v.group.identity_index()];
        let s0n = kron(s0, &identity(ncomp_v));
        (0..one_p_v.components.len())
            .map(|g| odd_v.dot(&s0n).dot(&one_p_v.components[g]).dot(&even_v))
            .collect()
    });
    let one_p_g = one_p.clone();
    let odd_g = odd.clone();
    let even_g = even.clone();
    let sig_g = sigma.clone();
    let grad_fn: Arc<GradFn> = Arc::new(move |pt: &Point| -> SymbolGrads {
        let e_idx = sig_g.group.identity_index();
        let grads = sig_g.grad(pt).expect("euler symbol has grads");
        (0..one_p_g.components.len())
            .map(|g| {
                (0..2 * n)
                    .map(|d| {
                        let ds = kron(&grads[e_idx][d], &identity(ncomp_v));
                        odd_g.dot(&ds).dot(&one_p_g.components[g]).dot(&even_g)
                    })
                    .collect()
            })
            .collect()
    });
    let mut symbol = MatrixSymbolField::new(group.clone(), n, size, value_fn, Some(grad_fn));
    symbol.homogeneity = Some(0.0);

    // Intertwiners Λ(ḡ)⊗1_N, used when the triple enters exterior products.
    let intertwiners: Vec<Array2<c64>> = (0..order)
        .map(|g| {
            let conj = group.element(g).matrix().mapv(|v| v.conj());
            kron(&exterior::lambda_matrix(&conj), &identity(ncomp))
        })
        .collect();

    let mut triple = EllipticTriple::new(symbol, p1, p2, 1.0);
    triple.equivariance = Some(Equivariance { intertwiners });
    Ok(triple)
}

/// The Euler symbol packaged as an equivariant triple (graded projections,
/// `Λ(ḡ)` intertwiners), ready to be the second factor of an exterior
/// product.
pub fn euler_factor_triple(n: usize, group: Arc<FiniteUnitaryGroup>) -> EllipticTriple {
    let order = group.order();
    let (even, odd) = graded_projectors(n, 1);
    let mut q1 = GroupAlgebraMatrix::zeros(order, 1 << n);
    let mut q2 = GroupAlgebraMatrix::zeros(order, 1 << n);
    q1.components[group.identity_index()] = even;
    q2.components[group.identity_index()] = odd;
    let intertwiners = (0..order)
        .map(|i| {
            let conj = group.element(i).matrix().mapv(|v| v.conj());
            exterior::lambda_matrix(&conj)
        })
        .collect();
    let mut triple = EllipticTriple::new(euler_symbol(n, group), q1, q2, 1.0);
    triple.equivariance = Some(Equivariance { intertwiners });
    triple
}

/// Radial cutoff angle: `−π/2` below `r0`, `+π/2` above `r1`, smooth and
/// nondecreasing in between.
#[derive(Clone, Copy, Debug)]
pub struct PsiProfile {
    pub r0: f64,
    pub r1: f64,
    pub kind: PsiKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsiKind {
    /// `6u⁵ − 15u⁴ + 10u³` (C²).
    Quintic,
    /// `−20u⁷ + 70u⁶ − 84u⁵ + 35u⁴` (C³).
    Septic,
}

impl PsiProfile {
    pub fn quintic(r0: f64, r1: f64) -> Self {
        PsiProfile {
            r0,
            r1,
            kind: PsiKind::Quintic,
        }
    }

    pub fn septic(r0: f64, r1: f64) -> Self {
        PsiProfile {
            r0,
            r1,
            kind: PsiKind::Septic,
        }
    }

    fn smoothstep(&self, u: f64) -> (f64, f64) {
        match self.kind {
            PsiKind::Quintic => (
                u * u * u * (10.0 + u * (-15.0 + 6.0 * u)),
                30.0 * u * u * (1.0 - u) * (1.0 - u),
            ),
            PsiKind::Septic => (
                u * u * u * u * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u))),
                140.0 * u * u * u * (1.0 - u) * (1.0 - u) * (1.0 - u),
            ),
        }
    }

    /// `(ψ(r), ψ′(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        if r <= self.r0 {
            return (-PI / 2.0, 0.0);
        }
        if r >= self.r1 {
            return (PI / 2.0, 0.0);
        }
        let u = (r - self.r0) / (self.r1 - self.r0);
        let (s, ds) = self.smoothstep(u);
        (-PI / 2.0 + PI * s, PI * ds / (self.r1 - self.r0))
    }
}

/// The difference-construction output: `p₁` varies, `p₀ = diag(0, P₂)`.
#[derive(Clone)]
pub struct DifferencePair {
    pub p1: MatrixSymbolField,
    pub p0: MatrixSymbolField,
    pub p0_constant: GroupAlgebraMatrix,
    pub psi: PsiProfile,
}

/// Polar retraction of `π(a)` at one point: the corner-unitary
/// `U = F(F†F)^{−1/2}` and its directional derivatives by the
/// Daleckii–Krein divided-difference formula.
fn retract(
    f: &Array2<c64>,
    df: &[Array2<c64>],
    pi_p1: &Array2<c64>,
) -> Result<(Array2<c64>, Vec<Array2<c64>>)> {
    let g = dagger(f).dot(f);
    let (vals, vecs) = linalg::eigh(&g);
    let dim = vals.len();
    let floor = 1e-10 * vals[dim - 1].max(1e-30);
    let inv_sqrt = |v: f64| if v > floor { v.powf(-0.5) } else { 0.0 };
    let s_mat = {
        let d = Array2::from_diag(&vals.mapv(|v| cr(inv_sqrt(v))));
        vecs.dot(&d).dot(&dagger(&vecs))
    };
    let u = f.dot(&s_mat);
    // Corner-unitarity is the retraction's success criterion.
    let defect = linalg::spectral_norm(&(&dagger(&u).dot(&u) - pi_p1));
    if defect > 1e-8 {
        return Err(Error::NotUnitary { defect });
    }
    let mut du = Vec::with_capacity(df.len());
    for dfd in df {
        let dg = dagger(dfd).dot(f) + dagger(f).dot(dfd);
        let dg_eig = dagger(&vecs).dot(&dg).dot(&vecs);
        let mut ds_eig = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                let (li, lj) = (vals[i], vals[j]);
                let phi = if (li - lj).abs() > 1e-12 * (li + lj).max(1e-30) {
                    (inv_sqrt(li) - inv_sqrt(lj)) / (li - lj)
                } else if li > floor {
                    -0.5 * li.powf(-1.5)
                } else {
                    0.0
                };
                ds_eig[(i, j)] = dg_eig[(i, j)] * cr(phi);
            }
        }
        let ds = vecs.dot(&ds_eig).dot(&dagger(&vecs));
        du.push(dfd.dot(&s_mat) + f.dot(&ds));
    }
    Ok((u, du))
}

/// Extract crossed components at the base point from the identity row of a
/// regular-representation matrix.
fn components_from_identity_row(
    m: &Array2<c64>,
    group: &FiniteUnitaryGroup,
    size: usize,
) -> Vec<Array2<c64>> {
    let e = group.identity_index();
    (0..group.order())
        .map(|g| {
            let col = group.inv(g);
            let mut block = Array2::zeros((size, size));
            for i in 0..size {
                for j in 0..size {
                    block[(i, j)] = m[(e * size + i, col * size + j)];
                }
            }
            block
        })
        .collect()
}

/// Adjoint components at the base point: `(u*)_g(z) = (U_{g⁻¹,e})†`.
fn adjoint_components_from_column(
    m: &Array2<c64>,
    group: &FiniteUnitaryGroup,
    size: usize,
) -> Vec<Array2<c64>> {
    let e = group.identity_index();
    (0..group.order())
        .map(|g| {
            let row = group.inv(g);
            let mut block = Array2::zeros((size, size));
            for i in 0..size {
                for j in 0..size {
                    block[(i, j)] = m[(row * size + i, e * size + j)];
                }
            }
            dagger(&block)
        })
        .collect()
}

/// The difference construction: projections `p₁(z)`, `p₀` over the crossed
/// product representing `[σ] ∈ K₀`, built from the polar retraction of the
/// symbol and the cutoff profile `ψ(|z|)`.
pub fn difference_construction(
    triple: &EllipticTriple,
    psi: PsiProfile,
) -> Result<DifferencePair> {
    let sym = &triple.symbol;
    if !sym.has_grad() {
        return Err(Error::Invalid(
            "difference construction needs derivative callbacks".into(),
        ));
    }
    let group = sym.group.clone();
    let order = group.order();
    let m = sym.size;
    let size2 = 2 * m;
    let n = sym.n;
    let pi_p1 = regular_rep_constant(&triple.p1, &group);
    let p1c = triple.p1.clone();
    let p2c = triple.p2.clone();

    // A symbol that is already corner-unitary (a*a = P₁ pointwise, as the
    // Bott elements are) makes the polar retraction the identity; detect
    // this once and let the per-point path read the components directly.
    let corner_unitary = {
        let mut ok = true;
        for r in [0.5 * (psi.r0 + psi.r1), 0.8 * psi.r1] {
            for pt in sphere_points(n, r, 4, 17) {
                let f = regular_representation(sym, &pt);
                let defect = linalg::spectral_norm(&(&dagger(&f).dot(&f) - &pi_p1));
                if defect > 1e-10 {
                    ok = false;
                }
            }
        }
        ok
    };
    let sym_adjoint = sym.adjoint();

    // Retraction + assembly of (p₁)_g and its gradient at one point.
    let assemble = {
        let sym = sym.clone();
        let group = group.clone();
        let p1c = p1c.clone();
        let p2c = p2c.clone();
        move |pt: &Point, with_grad: bool| -> Result<(SymbolValues, Option<SymbolGrads>)> {
            let r = pt.radius();
            let (s, dpsi) = psi.eval(r);
            let c = (s.asin().cos()).abs(); // placeholder, replaced below
            let _ = c;
            let (sin_psi, cos_psi) = {
                let (psi_val, _) = psi.eval(r);
                (psi_val.sin(), psi_val.cos())
            };
            let plateau = dpsi == 0.0 && cos_psi.abs() < 1e-15;
            let mut values = vec![Array2::zeros((size2, size2)); order];
            let mut grads = if with_grad {
                Some(vec![vec![Array2::zeros((size2, size2)); 2 * n]; order])
            } else {
                None
            };
            if plateau {
                for g in 0..order {
                    let blk = if sin_psi < 0.0 {
                        // r ≤ r0: diag(P₁, 0)
                        (p1c.components[g].clone(), Array2::zeros((m, m)), true)
                    } else {
                        // r ≥ r1: diag(0, P₂)
                        (Array2::zeros((m, m)), p2c.components[g].clone(), false)
                    };
                    let mut v = Array2::zeros((size2, size2));
                    for i in 0..m {
                        for j in 0..m {
                            v[(i, j)] = blk.0[(i, j)];
                            v[(m + i, m + j)] = blk.1[(i, j)];
                        }
                    }
                    values[g] = v;
                }
                return Ok((values, grads));
            }

            let (u, ustar, du, dustar) = if corner_unitary {
                let u = sym.eval(pt);
                let ustar = sym_adjoint.eval(pt);
                let (du, dustar) = if with_grad {
                    let gu = sym.grad(pt)?;
                    let gs = sym_adjoint.grad(pt)?;
                    // Reindex [g][dir] → [dir][g].
                    let flip = |g: SymbolGrads| -> Vec<Vec<Array2<c64>>> {
                        (0..2 * n)
                            .map(|d| (0..order).map(|gi| g[gi][d].clone()).collect())
                            .collect()
                    };
                    (flip(gu), flip(gs))
                } else {
                    (Vec::new(), Vec::new())
                };
                (u, ustar, du, dustar)
            } else {
                let f = regular_representation(&sym, pt);
                let df = if with_grad {
                    regular_representation_grad(&sym, pt)?
                } else {
                    Vec::new()
                };
                let (u_pi, du_pi) = retract(&f, &df, &pi_p1)?;
                let u = components_from_identity_row(&u_pi, &group, m);
                let ustar = adjoint_components_from_column(&u_pi, &group, m);
                let du: Vec<Vec<Array2<c64>>> = du_pi
                    .iter()
                    .map(|d| components_from_identity_row(d, &group, m))
                    .collect();
                let dustar: Vec<Vec<Array2<c64>>> = du_pi
                    .iter()
                    .map(|d| adjoint_components_from_column(d, &group, m))
                    .collect();
                (u, ustar, du, dustar)
            };

            for g in 0..order {
                let mut v = Array2::zeros((size2, size2));
                for i in 0..m {
                    for j in 0..m {
                        v[(i, j)] = p1c.components[g][(i, j)] * cr(0.5 * (1.0 - sin_psi));
                        v[(i, m + j)] = ustar[g][(i, j)] * cr(0.5 * cos_psi);
                        v[(m + i, j)] = u[g][(i, j)] * cr(0.5 * cos_psi);
                        v[(m + i, m + j)] = p2c.components[g][(i, j)] * cr(0.5 * (1.0 + sin_psi));
                    }
                }
                values[g] = v;
            }
            if let Some(gr) = grads.as_mut() {
                for g in 0..order {
                    for dir in 0..2 * n {
                        // Radial chain: ∂r/∂ξ = ξ/r.
                        let rad = pt.coord(dir) / r;
                        let ds = cos_psi * dpsi * rad;
                        let dc = -sin_psi * dpsi * rad;
                        let mut v = Array2::zeros((size2, size2));
                        for i in 0..m {
                            for j in 0..m {
                                v[(i, j)] = p1c.components[g][(i, j)] * cr(-0.5 * ds);
                                v[(i, m + j)] = ustar[g][(i, j)] * cr(0.5 * dc)
                                    + dustar[dir][g][(i, j)] * cr(0.5 * cos_psi);
                                v[(m + i, j)] = u[g][(i, j)] * cr(0.5 * dc)
                                    + du[dir][g][(i, j)] * cr(0.5 * cos_psi);
                                v[(m + i, m + j)] = p2c.components[g][(i, j)] * cr(0.5 * ds);
                            }
                        }
                        gr[g][dir] = v;
                    }
                }
            }
            Ok((values, grads))
        }
    };

    let asm_v = assemble.clone();
    let value_fn = Arc::new(move |pt: &Point| -> SymbolValues {
        asm_v(pt, false).expect("retraction failed inside p1 evaluation").0
    });
    let asm_g = assemble.clone();
    let grad_fn: Arc<GradFn> = Arc::new(move |pt: &Point| -> SymbolGrads {
        asm_g(pt, true)
            .expect("retraction failed inside p1 gradient")
            .1
            .expect("gradient requested")
    });
    let p1_field = MatrixSymbolField::new(group.clone(), n, size2, value_fn, Some(grad_fn));

    // p₀ = diag(0, P₂), constant.
    let mut p0_constant = GroupAlgebraMatrix::zeros(order, size2);
    for g in 0..order {
        for i in 0..m {
            for j in 0..m {
                p0_constant.components[g][(m + i, m + j)] = p2c.components[g][(i, j)];
            }
        }
    }
    let p0_field = MatrixSymbolField::constant(group.clone(), n, &p0_constant);

    // Probe the retraction now (plateau and transition radii) so failures
    // surface here, not inside a quadrature loop; also confirm that p₁ is
    // a pointwise projection.
    for r in [
        0.5 * psi.r0,
        0.5 * (psi.r0 + psi.r1),
        0.71 * psi.r0 + 0.29 * psi.r1,
        1.5 * psi.r1,
    ] {
        for pt in sphere_points(n, r, 3, 91) {
            let pi1 = regular_representation(&p1_field, &pt);
            let idem = linalg::spectral_norm(&(&pi1.dot(&pi1) - &pi1));
            let sa = linalg::spectral_norm(&(&dagger(&pi1) - &pi1));
            if idem > 1e-9 || sa > 1e-9 {
                return Err(Error::NotProjection {
                    defect: idem.max(sa),
                });
            }
        }
    }

    Ok(DifferencePair {
        p1: p1_field,
        p0: p0_field,
        p0_constant,
        psi,
    })
}

/// Exterior product `a # b` of a crossed triple with an equivariant plain
/// triple on the doubled space; components follow the 2×2 block recipe with
/// intertwiner decorations on the first factor.
pub fn exterior_product(a: &EllipticTriple, b: &EllipticTriple) -> Result<EllipticTriple> {
    let Some(eq) = b.equivariance.clone() else {
        return Err(Error::NotEquivariant { residual: f64::NAN });
    };
    let group = a.symbol.group.clone();
    if b.symbol.group.order() != group.order() {
        return Err(Error::Dimension(
            "factors must share the abstract group".into(),
        ));
    }
    // Verify the intertwining b(g·w)ρ(g) = ρ(g)b(w) on sample points.
    let mut residual = 0.0_f64;
    for pt in sphere_points(b.symbol.n, b.radius.max(1.0), 6, 7) {
        for g in 0..group.order() {
            let el = b.symbol.group.element(g);
            let moved = pt.apply(el);
            let bw = &b.symbol.eval(&pt)[b.symbol.group.identity_index()];
            let bgw = &b.symbol.eval(&moved)[b.symbol.group.identity_index()];
            let rho = &eq.intertwiners[g];
            let lhs = bgw.dot(rho);
            let rhs = rho.dot(bw);
            residual = residual.max(linalg::frobenius(&(&lhs - &rhs)));
        }
    }
    if residual > 1e-8 {
        return Err(Error::NotEquivariant { residual });
    }

    let na = a.symbol.n;
    let nb = b.symbol.n;
    let sa = a.symbol.size;
    let sb = b.symbol.size;
    let size = 2 * sa * sb;
    let order = group.order();
    let doubled = Arc::new(group.doubled()?);

    let a_sym = a.symbol.clone();
    let a_adj = a.symbol.adjoint();
    let b_sym = b.symbol.clone();
    let e_idx = group.identity_index();
    let inter = eq.intertwiners.clone();
    let split = move |pt: &Point| -> (Point, Point) {
        (
            Point::new(pt.x[..na].to_vec(), pt.p[..na].to_vec()),
            Point::new(pt.x[na..].to_vec(), pt.p[na..].to_vec()),
        )
    };
    let split_v = split.clone();
    let inter_v = inter.clone();
    let value_fn = Arc::new(move |pt: &Point| -> SymbolValues {
        let (zpt, wpt) = split_v(pt);
        let av = a_sym.eval(&zpt);
        let astar = a_adj.eval(&zpt);
        let bv = &b_sym.eval(&wpt)[e_idx];
        let bstar = dagger(bv);
        let half = sa * sb;
        let mut out = vec![Array2::zeros((size, size)); order];
        for g in 0..order {
            let tl = kron(&av[g], &inter_v[g]);
            let br = kron(&astar[g], &inter_v[g]);
            let mut v: Array2<c64> = Array2::zeros((size, size));
            for i in 0..half {
                for j in 0..half {
                    v[(i, j)] = tl[(i, j)];
                    v[(half + i, half + j)] = br[(i, j)];
                }
            }
            if g == e_idx {
                let tr = kron(&identity(sa), &bstar);
                let bl = kron(&identity(sa), bv);
                for i in 0..half {
                    for j in 0..half {
                        v[(i, half + j)] = -tr[(i, j)];
                        v[(half + i, j)] = bl[(i, j)];
                    }
                }
            }
            out[g] = v;
        }
        out
    });

    let mut symbol = MatrixSymbolField::new(doubled.clone(), na + nb, size, value_fn, None);
    symbol.homogeneity = match (a.symbol.homogeneity, b.symbol.homogeneity) {
        (Some(da), Some(db)) if (da - db).abs() < 1e-12 => Some(da),
        _ => None,
    };

    // Projections: 𝐏₁ = diag(P₁⊗ρQ₁, P₂⊗ρQ₂), 𝐏₂ = diag(P₂⊗ρQ₁, P₁⊗ρQ₂).
    let build_proj = |first: &GroupAlgebraMatrix, second: &GroupAlgebraMatrix| {
        let mut out = GroupAlgebraMatrix::zeros(order, size);
        let half = sa * sb;
        for g in 0..order {
            let q1 = inter[g].dot(&b.p1.components[e_idx]);
            let q2 = inter[g].dot(&b.p2.components[e_idx]);
            let tl = kron(&first.components[g], &q1);
            let br = kron(&second.components[g], &q2);
            for i in 0..half {
                for j in 0..half {
                    out.components[g][(i, j)] = tl[(i, j)];
                    out.components[g][(half + i, half + j)] = br[(i, j)];
                }
            }
        }
        out
    };
    let pp1 = build_proj(&a.p1, &a.p2);
    let pp2 = build_proj(&a.p2, &a.p1);

    let radius = 2.0 * a.radius.max(b.radius);
    let compressed = EllipticTriple {
        symbol,
        p1: pp1,
        p2: pp2,
        radius,
        equivariance: None,
        product_parts: Some(Box::new((a.clone(), b.clone()))),
    }
    .compressed();
    Ok(EllipticTriple {
        product_parts: Some(Box::new((a.clone(), b.clone()))),
        ..compressed
    })
}

/// Atiyah rotation: `σ_t(z, w) = a(z cos t + w sin t) # b(w cos t − z sin t)`.
/// At `t = 0` this is `a # b`; at `t = π/2` the arguments swap (with a sign).
pub fn rotation_homotopy(product: &EllipticTriple, t: f64) -> Result<EllipticTriple> {
    let Some(parts) = product.product_parts.clone() else {
        return Err(Error::Invalid(
            "rotation homotopy needs an exterior-product triple".into(),
        ));
    };
    let (a, b) = *parts;
    let na = a.symbol.n;
    let rotated = exterior_product(&a, &b)?;
    let base = rotated.symbol.clone();
    let (ct, st) = (t.cos(), t.sin());
    let value_fn = Arc::new(move |pt: &Point| -> SymbolValues {
        // (z, w) ↦ (z cos t + w sin t, w cos t − z sin t), applied in real
        // coordinates (the rotation commutes with the complex structure).
        let mut x = vec![0.0; 2 * na];
        let mut p = vec![0.0; 2 * na];
        for j in 0..na {
            x[j] = ct * pt.x[j] + st * pt.x[na + j];
            p[j] = ct * pt.p[j] + st * pt.p[na + j];
            x[na + j] = ct * pt.x[na + j] - st * pt.x[j];
            p[na + j] = ct * pt.p[na + j] - st * pt.p[j];
        }
        base.eval(&Point::new(x, p))
    });
    let mut symbol = MatrixSymbolField::new(
        rotated.symbol.group.clone(),
        rotated.symbol.n,
        rotated.symbol.size,
        value_fn,
        None,
    );
    symbol.homogeneity = rotated.symbol.homogeneity;
    Ok(EllipticTriple {
        symbol,
        p1: rotated.p1.clone(),
        p2: rotated.p2.clone(),
        radius: rotated.radius,
        equivariance: None,
        product_parts: Some(Box::new((a, b))),
    })
}

/// Ellipticity certificates along a 33-point rotation grid; fails with
/// `EllipticityLost` when some certificate drops below `floor_ratio` times
/// the `t = 0` value.
pub fn rotation_certificate_curve(
    product: &EllipticTriple,
    grid: usize,
    floor_ratio: f64,
) -> Result<Vec<(f64, f64)>> {
    let steps = 33;
    let mut out = Vec::with_capacity(steps);
    let mut base_cert = None;
    for k in 0..steps {
        let t = (PI / 2.0) * k as f64 / (steps - 1) as f64;
        let rotated = rotation_homotopy(product, t)?;
        let cert = check_elliptic(&rotated, rotated.radius, grid)?;
        let base = *base_cert.get_or_insert(cert);
        if cert < floor_ratio * base {
            return Err(Error::EllipticityLost {
                t,
                certificate: cert,
            });
        }
        out.push((t, cert));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{self, presets};
    use approx::assert_relative_eq;

    fn trivial(n: usize) -> Arc<FiniteUnitaryGroup> {
        Arc::new(FiniteUnitaryGroup::trivial(n))
    }

    /// Random polynomial crossed symbol with exact gradients, for property
    /// tests of the regular representation.
    fn random_symbol(group: Arc<FiniteUnitaryGroup>, size: usize, seed: u64) -> MatrixSymbolField {
        let n = group.n;
        let order = group.order();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Coefficients of 1, z_j, z̄_j per group component.
        let mut c0 = Vec::new();
        let mut cz = Vec::new();
        let mut czbar = Vec::new();
        for _ in 0..order {
            let mut rnd_mat = || {
                Array2::from_shape_fn((size, size), |_| {
                    c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                })
            };
            c0.push(rnd_mat());
            cz.push((0..n).map(|_| rnd_mat()).collect::<Vec<_>>());
            czbar.push((0..n).map(|_| rnd_mat()).collect::<Vec<_>>());
        }
        let (c0v, czv, czbv) = (c0.clone(), cz.clone(), czbar.clone());
        let value_fn = Arc::new(move |pt: &Point| -> SymbolValues {
            let z = pt.z();
            (0..order)
                .map(|g| {
                    let mut m = c0v[g].clone();
                    for j in 0..n {
                        m = &m + &czv[g][j].mapv(|v| v * z[j]);
                        m = &m + &czbv[g][j].mapv(|v| v * z[j].conj());
                    }
                    m
                })
                .collect()
        });
        let grad_fn: Arc<GradFn> = Arc::new(move |_pt: &Point| -> SymbolGrads {
            (0..order)
                .map(|g| {
                    (0..2 * n)
                        .map(|d| {
                            // z = p + ix: ∂z/∂x = i, ∂z̄/∂x = −i, ∂z/∂p = 1.
                            let mut m: Array2<c64> = Array2::zeros((size, size));
                            if d < n {
                                m = &m + &cz[g][d].mapv(|v| v * I);
                                m = &m - &czbar[g][d].mapv(|v| v * I);
                            } else {
                                m = &m + &cz[g][d - n].mapv(|v| v);
                                m = &m + &czbar[g][d - n].mapv(|v| v);
                            }
                            m
                        })
                        .collect()
                })
                .collect()
        });
        MatrixSymbolField::new(group, n, size, value_fn, Some(grad_fn))
    }

    #[test]
    fn regular_representation_multiplicative() {
        let g = Arc::new(presets::cyclic_diag(1, 3).unwrap());
        let a = random_symbol(g.clone(), 2, 5);
        let b = random_symbol(g.clone(), 2, 17);
        let ab = a.multiply(&b);
        for pt in sphere_points(1, 1.3, 5, 3) {
            let pa = regular_representation(&a, &pt);
            let pb = regular_representation(&b, &pt);
            let pab = regular_representation(&ab, &pt);
            assert!(linalg::frobenius(&(&pa.dot(&pb) - &pab)) < 1e-10);
        }
        // Trivial group: π(a) = a.
        let t = trivial(1);
        let a = random_symbol(t, 2, 5);
        let pt = Point::new(vec![0.3], vec![-0.2]);
        let pa = regular_representation(&a, &pt);
        assert!(linalg::frobenius(&(&pa - &a.eval(&pt)[0])) < 1e-14);
    }

    #[test]
    fn regular_representation_star_preserving() {
        let g = Arc::new(presets::cyclic_diag(1, 4).unwrap());
        let a = random_symbol(g.clone(), 2, 23);
        let astar = a.adjoint();
        for pt in sphere_points(1, 0.8, 4, 11) {
            let pa = regular_representation(&a, &pt);
            let pas = regular_representation(&astar, &pt);
            assert!(linalg::frobenius(&(&dagger(&pa) - &pas)) < 1e-10);
        }
    }

    #[test]
    fn product_gradients_match_finite_differences() {
        let g = Arc::new(presets::cyclic_diag(1, 3).unwrap());
        let a = random_symbol(g.clone(), 2, 31);
        let b = random_symbol(g.clone(), 2, 37);
        let ab = a.multiply(&b);
        let pts = vec![Point::new(vec![0.4], vec![0.7]), Point::new(vec![-1.1], vec![0.2])];
        ab.derivative_check(&pts, 1e-4, 1e-6).unwrap();
        a.adjoint().derivative_check(&pts, 1e-4, 1e-6).unwrap();
    }

    #[test]
    fn euler_symbol_squares_to_radius() {
        for n in [1usize, 2] {
            let g = trivial(n);
            let sym = euler_symbol(n, g);
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            for _ in 0..50 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let pt = Point::new(x, p);
                let v = &sym.eval(&pt)[0];
                let sq = v.dot(v);
                let r2 = pt.radius().powi(2);
                let expect = identity(1 << n).mapv(|e| e * cr(r2));
                assert!(linalg::frobenius(&(&sq - &expect)) < 1e-12);
                // Self-adjoint.
                assert!(linalg::frobenius(&(&dagger(v) - v)) < 1e-13);
            }
            // σ(0) = 0.
            let origin = Point::new(vec![0.0; n], vec![0.0; n]);
            assert!(linalg::frobenius(&sym.eval(&origin)[0]) < 1e-15);
        }
    }

    #[test]
    fn euler_symbol_at_unit_x_is_involution() {
        // At x = e₁, p = 0: σ = e₁∧ + ι₁.
        let g = trivial(2);
        let sym = euler_symbol(2, g);
        let pt = Point::new(vec![1.0, 0.0], vec![0.0, 0.0]);
        let v = &sym.eval(&pt)[0];
        let expect = &exterior::creation(0, 2) + &exterior::annihilation(0, 2);
        // i·z̄₁ = i·(−i) = 1 and −i·z₁ = −i·i = 1 at z₁ = i.
        assert!(linalg::frobenius(&(v - &expect)) < 1e-14);
    }

    #[test]
    fn euler_symbol_gradients_exact() {
        let g = trivial(2);
        let sym = euler_symbol(2, g.clone());
        let pts = vec![
            Point::new(vec![0.5, -0.4], vec![1.2, 0.3]),
            Point::new(vec![-1.0, 0.8], vec![0.1, -0.9]),
        ];
        sym.derivative_check(&pts, 1e-4, 1e-7).unwrap();
        let sym0 = euler_symbol_normalized(2, g);
        sym0.derivative_check(&pts, 1e-5, 1e-6).unwrap();
    }

    #[test]
    fn euler_triple_certificate_is_one() {
        for n in [1usize, 2] {
            let g = trivial(n);
            let p = GroupAlgebraMatrix::unit(&g, 1);
            let triple = bott_map(&p, n, g).unwrap();
            let cert = check_elliptic(&triple, 1.0, 24).unwrap();
            assert_relative_eq!(cert, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_symbol_not_elliptic() {
        let g = trivial(1);
        let zero = MatrixSymbolField::new(
            g.clone(),
            1,
            1,
            Arc::new(|_: &Point| vec![Array2::zeros((1, 1))]),
            None,
        );
        let unit = GroupAlgebraMatrix::unit(&g, 1);
        let triple = EllipticTriple::new(zero, unit.clone(), unit, 1.0);
        assert!(matches!(
            check_elliptic(&triple, 1.0, 8),
            Err(Error::NotElliptic { .. })
        ));
    }

    #[test]
    fn bott_triple_compatibility() {
        let g = Arc::new(presets::cyclic_diag(1, 2).unwrap());
        let chi = group::cyclic_character(&g, 1, 0).unwrap();
        let p = group::isotypic_projection(&g, &chi, 1, 1).unwrap();
        let triple = bott_map(&p, 1, g.clone()).unwrap();
        let cert = check_elliptic(&triple, 1.0, 16).unwrap();
        assert!(cert > 1.0 - 1e-10);
        // (P₂)·σ·(P₁) = σ pointwise.
        let left = MatrixSymbolField::constant(g.clone(), 1, &triple.p2);
        let right = MatrixSymbolField::constant(g.clone(), 1, &triple.p1);
        let sandwich = left.multiply(&triple.symbol).multiply(&right);
        for pt in sphere_points(1, 1.0, 5, 5) {
            let a = triple.symbol.eval(&pt);
            let b = sandwich.eval(&pt);
            for gidx in 0..g.order() {
                assert!(linalg::frobenius(&(&a[gidx] - &b[gidx])) < 1e-10);
            }
        }
    }

    #[test]
    fn psi_profile_plateaus_and_derivative() {
        for psi in [PsiProfile::quintic(1.0, 2.0), PsiProfile::septic(1.0, 2.0)] {
            assert_relative_eq!(psi.eval(0.5).0, -PI / 2.0, epsilon = 1e-15);
            assert_relative_eq!(psi.eval(2.5).0, PI / 2.0, epsilon = 1e-15);
            assert_relative_eq!(psi.eval(1.0).1, 0.0, epsilon = 1e-15);
            assert_relative_eq!(psi.eval(2.0).1, 0.0, epsilon = 1e-15);
            // ψ′ matches finite differences in the transition region.
            for r in [1.2, 1.5, 1.8] {
                let h = 1e-6;
                let fd = (psi.eval(r + h).0 - psi.eval(r - h).0) / (2.0 * h);
                assert_relative_eq!(psi.eval(r).1, fd, epsilon = 1e-7);
            }
            // Nondecreasing.
            let mut prev = -PI / 2.0;
            for k in 0..100 {
                let v = psi.eval(0.8 + 1.6 * k as f64 / 99.0).0;
                assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }

    #[test]
    fn difference_construction_scalar_case() {
        // Trivial G, a ≡ 1, P₁ = P₂ = 1: p₁ = ½[[1−sinψ, cosψ],[cosψ, 1+sinψ]].
        let g = trivial(1);
        let one = MatrixSymbolField::new(
            g.clone(),
            1,
            1,
            Arc::new(|_: &Point| vec![Array2::from_elem((1, 1), cr(1.0))]),
            Some(Arc::new(|_: &Point| vec![vec![Array2::zeros((1, 1)); 2]])),
        );
        let unit = GroupAlgebraMatrix::unit(&g, 1);
        let triple = EllipticTriple::new(one, unit.clone(), unit, 1.0);
        let psi = PsiProfile::quintic(1.0, 2.0);
        let pair = difference_construction(&triple, psi).unwrap();
        for r in [0.4, 1.3, 1.7, 2.4] {
            let pt = Point::new(vec![0.0], vec![r]);
            let v = &pair.p1.eval(&pt)[0];
            let (s, _) = psi.eval(r);
            assert_relative_eq!(v[(0, 0)].re, 0.5 * (1.0 - s.sin()), epsilon = 1e-12);
            assert_relative_eq!(v[(0, 1)].re, 0.5 * s.cos(), epsilon = 1e-12);
            assert_relative_eq!(v[(1, 0)].re, 0.5 * s.cos(), epsilon = 1e-12);
            assert_relative_eq!(v[(1, 1)].re, 0.5 * (1.0 + s.sin()), epsilon = 1e-12);
        }
        // Plateau identities.
        let inner = &pair.p1.eval(&Point::new(vec![0.0], vec![0.3]))[0];
        assert_relative_eq!(inner[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(inner[(1, 1)].re, 0.0, epsilon = 1e-14);
        let outer = &pair.p1.eval(&Point::new(vec![0.0], vec![5.0]))[0];
        let p0 = &pair.p0.eval(&Point::new(vec![0.0], vec![5.0]))[0];
        assert!(linalg::frobenius(&(outer - p0)) < 1e-14);
    }

    #[test]
    fn difference_construction_projection_and_derivatives() {
        // Winding symbol a = z/|z| with a non-unitary radial factor that the
        // polar retraction must strip.
        let g = trivial(1);
        let value_fn = Arc::new(|pt: &Point| -> SymbolValues {
            let z = pt.z()[0];
            let r = pt.radius().max(1e-14);
            let scale = 1.0 + 0.3 * (r * r / (1.0 + r * r));
            vec![Array2::from_elem((1, 1), z / cr(r) * cr(scale))]
        });
        let grad_fn: Arc<GradFn> = Arc::new(|pt: &Point| -> SymbolGrads {
            // d(scale·z/r): numeric-free closed form.
            let z = pt.z()[0];
            let r = pt.radius().max(1e-14);
            let s = 1.0 + 0.3 * (r * r / (1.0 + r * r));
            let ds_dr = 0.3 * 2.0 * r / ((1.0 + r * r) * (1.0 + r * r));
            let mut out = vec![vec![Array2::zeros((1, 1)); 2]];
            for d in 0..2 {
                let xi = pt.coord(d);
                let dz = if d == 0 { I } else { cr(1.0) };
                let dr = xi / r;
                let val = dz * cr(s / r) + z * cr((ds_dr * r - s) * dr / (r * r));
                out[0][d] = Array2::from_elem((1, 1), val);
            }
            out
        });
        let sym = MatrixSymbolField::new(g.clone(), 1, 1, value_fn, Some(grad_fn));
        let pts = vec![Point::new(vec![0.7], vec![0.9]), Point::new(vec![-1.4], vec![0.4])];
        sym.derivative_check(&pts, 1e-5, 1e-5).unwrap();
        let unit = GroupAlgebraMatrix::unit(&g, 1);
        let triple = EllipticTriple::new(sym, unit.clone(), unit, 1.0);
        let pair = difference_construction(&triple, PsiProfile::quintic(1.0, 2.0)).unwrap();
        // p₁ is retracted to the unit-modulus symbol: off-diagonal magnitude
        // is cos(ψ)/2 exactly.
        let pt = Point::new(vec![0.9], vec![0.9]);
        let v = &pair.p1.eval(&pt)[0];
        let (s, _) = PsiProfile::quintic(1.0, 2.0).eval(pt.radius());
        assert_relative_eq!(v[(1, 0)].norm(), 0.5 * s.cos(), epsilon = 1e-10);
        // Exact derivative callbacks of the projector field.
        pair.p1.derivative_check(&pts, 1e-5, 1e-4).unwrap();
    }

    #[test]
    fn exterior_product_euler_euler() {
        let g = trivial(1);
        let p = GroupAlgebraMatrix::unit(&g, 1);
        let a = bott_map(&p, 1, g.clone()).unwrap();
        // Unnormalized factors keep the degree-1 homogeneity that makes the
        // block identity exact on the sphere.
        let mut b = EllipticTriple::new(
            euler_symbol(1, g.clone()),
            {
                let mut q = GroupAlgebraMatrix::zeros(1, 2);
                q.components[0][(0, 0)] = cr(1.0);
                q
            },
            {
                let mut q = GroupAlgebraMatrix::zeros(1, 2);
                q.components[0][(1, 1)] = cr(1.0);
                q
            },
            1.0,
        );
        b.equivariance = Some(Equivariance {
            intertwiners: vec![identity(2)],
        });
        let mut a_raw = EllipticTriple::new(
            euler_symbol(1, g.clone()),
            b.p1.clone(),
            b.p2.clone(),
            1.0,
        );
        a_raw.equivariance = a.equivariance.clone();
        let prod = exterior_product(&a_raw, &b).unwrap();
        // (a#b)*(a#b) diagonal: on unit sphere of ℝ⁴ the blocks sum to
        // (|z|² + |w|²)·Id, so the certificate is 1 ≥ 1/√2.
        let cert = check_elliptic(&prod, 1.0, 24).unwrap();
        assert!(cert >= 1.0 / 2.0_f64.sqrt() - 1e-9, "cert {cert}");
        // Block-diagonality of π((a#b)*(a#b)) at sample points.
        let adj = prod.symbol.adjoint();
        let sq = adj.multiply(&prod.symbol);
        for pt in sphere_points(2, 1.0, 6, 13) {
            let m = &sq.eval(&pt)[0];
            let half = prod.symbol.size / 2;
            for i in 0..half {
                for j in half..prod.symbol.size {
                    assert!(m[(i, j)].norm() < 1e-10);
                    assert!(m[(j, i)].norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rotation_homotopy_preserves_certificate() {
        let g = trivial(1);
        let mk_q = |which: usize| {
            let mut q = GroupAlgebraMatrix::zeros(1, 2);
            q.components[0][(which, which)] = cr(1.0);
            q
        };
        let mut a = EllipticTriple::new(euler_symbol(1, g.clone()), mk_q(0), mk_q(1), 1.0);
        a.equivariance = Some(Equivariance {
            intertwiners: vec![identity(2)],
        });
        let b = a.clone();
        let prod = exterior_product(&a, &b).unwrap();
        // t = 0 is the identity transformation.
        let r0 = rotation_homotopy(&prod, 0.0).unwrap();
        let pt = Point::new(vec![0.3, -0.5], vec![0.7, 0.2]);
        let v0 = prod.symbol.eval(&pt);
        let v0r = r0.symbol.eval(&pt);
        for g in 0..v0.len() {
            assert!(linalg::frobenius(&(&v0[g] - &v0r[g])) < 1e-12);
        }
        // t = π/2 swaps the arguments (with the sign flip on the second).
        let rhalf = rotation_homotopy(&prod, PI / 2.0).unwrap();
        let swapped = Point::new(vec![-0.5, -0.3], vec![0.2, -0.7]);
        let vs = prod.symbol.eval(&swapped);
        let vr = rhalf.symbol.eval(&pt);
        for g in 0..vs.len() {
            assert!(linalg::frobenius(&(&vs[g] - &vr[g])) < 1e-12);
        }
        let curve = rotation_certificate_curve(&prod, 12, 0.5).unwrap();
        assert_eq!(curve.len(), 33);
        let base = curve[0].1;
        assert!(curve.iter().all(|&(_, c)| c >= 0.5 * base));
    }

    #[test]
    fn rotation_homotopy_with_group_action() {
        // ℤ/2 diagonal action commutes with the rotation: σ_t stays
        // compatible and elliptic.
        let g = Arc::new(presets::cyclic_diag(1, 2).unwrap());
        let chi = group::cyclic_character(&g, 1, 0).unwrap();
        let p = group::isotypic_projection(&g, &chi, 1, 1).unwrap();
        let a = bott_map(&p, 1, g.clone()).unwrap();
        let mut b_triple = {
            let (even, odd) = graded_projectors(1, 1);
            let mut q1 = GroupAlgebraMatrix::zeros(g.order(), 2);
            let mut q2 = GroupAlgebraMatrix::zeros(g.order(), 2);
            q1.components[g.identity_index()] = even;
            q2.components[g.identity_index()] = odd;
            EllipticTriple::new(euler_symbol(1, g.clone()), q1, q2, 1.0)
        };
        b_triple.equivariance = Some(Equivariance {
            intertwiners: (0..g.order())
                .map(|i| {
                    let conj = g.element(i).matrix().mapv(|v| v.conj());
                    exterior::lambda_matrix(&conj)
                })
                .collect(),
        });
        let prod = exterior_product(&a, &b_triple).unwrap();
        let curve = rotation_certificate_curve(&prod, 8, 0.4).unwrap();
        assert!(curve.iter().all(|&(_, c)| c > 1e-3));
    }
}
