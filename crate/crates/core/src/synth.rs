//! Seeded synthetic symbols and form fields with exact derivatives, for the
//! randomized trace-property checks (graded trace, compatibility,
//! closedness) and for stress-testing the crossed-product machinery.
//!
//! Coefficients are low-degree polynomials in `z, z̄` times a smooth radial
//! bump with closed-form derivative, so every quadrature sees a compactly
//! supported trigonometric-polynomial integrand.

use std::sync::Arc;

use ndarray::Array2;
use ndarray_linalg::c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exterior::{self, FormValue};
use crate::forms::{FormField, TwistContext};
use crate::group::FiniteUnitaryGroup;
use crate::linalg::cr;
use crate::symbol::{MatrixSymbolField, Point, PsiProfile, SymbolGrads, SymbolValues};

/// `cos²ψ(r)` for a quintic profile: identically zero outside `(r0, r1)`,
/// `C²`-smooth, with derivative `−2 cosψ sinψ ψ′`.
#[derive(Clone, Copy)]
pub struct Bump {
    psi: PsiProfile,
}

impl Bump {
    pub fn new(r0: f64, r1: f64) -> Self {
        Bump {
            psi: PsiProfile::quintic(r0, r1),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.psi.r0, self.psi.r1)
    }

    pub fn eval(&self, r: f64) -> (f64, f64) {
        let (s, ds) = self.psi.eval(r);
        (s.cos() * s.cos(), -2.0 * s.cos() * s.sin() * ds)
    }
}

/// Random matrix polynomial `c₀ + Σ_j (c_j z_j + c̄_j z̄_j)` per group
/// component, multiplied by the bump; exact gradients.
pub fn random_bump_symbol(
    group: Arc<FiniteUnitaryGroup>,
    size: usize,
    bump: Bump,
    seed: u64,
) -> MatrixSymbolField {
    let n = group.n;
    let order = group.order();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rnd = |scale: f64| {
        Array2::from_shape_fn((size, size), |_| {
            c64::new(
                scale * rng.gen_range(-1.0..1.0),
                scale * rng.gen_range(-1.0..1.0),
            )
        })
    };
    let c0: Vec<Array2<c64>> = (0..order).map(|_| rnd(1.0)).collect();
    let cz: Vec<Vec<Array2<c64>>> = (0..order)
        .map(|_| (0..n).map(|_| rnd(0.7)).collect())
        .collect();
    let czb: Vec<Vec<Array2<c64>>> = (0..order)
        .map(|_| (0..n).map(|_| rnd(0.7)).collect())
        .collect();

    let poly = move |pt: &Point, g: usize| -> Array2<c64> {
        let z = pt.z();
        let mut m = c0[g].clone();
        for j in 0..n {
            m = &m + &cz[g][j].mapv(|v| v * z[j]);
            m = &m + &czb[g][j].mapv(|v| v * z[j].conj());
        }
        m
    };
    let poly_grad = {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rnd = |scale: f64| {
            Array2::from_shape_fn((size, size), |_| {
                c64::new(
                    scale * rng.gen_range(-1.0..1.0),
                    scale * rng.gen_range(-1.0..1.0),
                )
            })
        };
        let _c0: Vec<Array2<c64>> = (0..order).map(|_| rnd(1.0)).collect();
        let cz: Vec<Vec<Array2<c64>>> = (0..order)
            .map(|_| (0..n).map(|_| rnd(0.7)).collect())
            .collect();
        let czb: Vec<Vec<Array2<c64>>> = (0..order)
            .map(|_| (0..n).map(|_| rnd(0.7)).collect())
            .collect();
        move |g: usize, d: usize| -> Array2<c64> {
            // z = p + ix: ∂z/∂x = i, ∂z̄/∂x = −i, ∂z/∂p = ∂z̄/∂p = 1.
            if d < n {
                (&cz[g][d] - &czb[g][d]).mapv(|v| v * crate::linalg::I)
            } else {
                &cz[g][d - n] + &czb[g][d - n]
            }
        }
    };

    let poly_v = poly.clone();
    let value_fn = Arc::new(move |pt: &Point| -> SymbolValues {
        let (b, _) = bump.eval(pt.radius());
        (0..order).map(|g| poly_v(pt, g).mapv(|v| v * cr(b))).collect()
    });
    let grad_fn = Arc::new(move |pt: &Point| -> SymbolGrads {
        let r = pt.radius().max(1e-14);
        let (b, db) = bump.eval(r);
        (0..order)
            .map(|g| {
                (0..2 * n)
                    .map(|d| {
                        let radial = pt.coord(d) / r;
                        &poly_grad(g, d).mapv(|v| v * cr(b))
                            + &poly(pt, g).mapv(|v| v * cr(db * radial))
                    })
                    .collect()
            })
            .collect()
    });
    MatrixSymbolField::new(group, n, size, value_fn, Some(grad_fn))
}

/// A compactly supported random form field stored as one coefficient symbol
/// per exterior monomial, so that its exterior differential is exact.
#[derive(Clone)]
pub struct RandomForm {
    pub group: Arc<FiniteUnitaryGroup>,
    pub n: usize,
    pub size: usize,
    coeffs: Vec<MatrixSymbolField>,
}

impl RandomForm {
    /// Coefficients supported on the listed masks only.
    pub fn new(
        group: Arc<FiniteUnitaryGroup>,
        size: usize,
        masks: &[usize],
        bump: Bump,
        seed: u64,
    ) -> Self {
        let n = group.n;
        let dim = 1usize << (2 * n);
        let zero = {
            let order = group.order();
            let g2 = group.clone();
            MatrixSymbolField::new(
                g2,
                n,
                size,
                Arc::new(move |_: &Point| vec![Array2::zeros((size, size)); order]),
                Some(Arc::new(move |_: &Point| {
                    vec![vec![Array2::zeros((size, size)); 2 * n]; order]
                })),
            )
        };
        let coeffs = (0..dim)
            .map(|mask| {
                if masks.contains(&mask) {
                    random_bump_symbol(
                        group.clone(),
                        size,
                        bump,
                        seed.wrapping_mul(0x9e3779b9).wrapping_add(mask as u64),
                    )
                } else {
                    zero.clone()
                }
            })
            .collect();
        RandomForm {
            group,
            n,
            size,
            coeffs,
        }
    }

    /// Uniform-degree form on all monomials of the given degree.
    pub fn homogeneous(
        group: Arc<FiniteUnitaryGroup>,
        size: usize,
        degree: usize,
        bump: Bump,
        seed: u64,
    ) -> Self {
        let n = group.n;
        let masks: Vec<usize> = (0..1usize << (2 * n))
            .filter(|&m| exterior::degree(m) == degree)
            .collect();
        RandomForm::new(group, size, &masks, bump, seed)
    }

    pub fn field(&self) -> FormField {
        let coeffs = self.coeffs.clone();
        let (n, size) = (self.n, self.size);
        let order = self.group.order();
        FormField::new(
            self.group.clone(),
            n,
            size,
            Arc::new(move |pt| {
                let evals: Vec<SymbolValues> = coeffs.iter().map(|c| c.eval(pt)).collect();
                (0..order)
                    .map(|g| {
                        let mut v = FormValue::zero(2 * n, size);
                        for (mask, ev) in evals.iter().enumerate() {
                            v.coeff[mask] = ev[g].clone();
                        }
                        v
                    })
                    .collect()
            }),
        )
    }

    /// Exterior differential: `d(c_I dξ^I) = Σ_d (∂c_I/∂ξ_d) dξ_d ∧ dξ^I`.
    pub fn d_field(&self) -> FormField {
        let coeffs = self.coeffs.clone();
        let (n, size) = (self.n, self.size);
        let order = self.group.order();
        FormField::new(
            self.group.clone(),
            n,
            size,
            Arc::new(move |pt| {
                let grads: Vec<SymbolGrads> =
                    coeffs.iter().map(|c| c.grad(pt).expect("synthetic grads")).collect();
                (0..order)
                    .map(|g| {
                        let mut v = FormValue::zero(2 * n, size);
                        for (mask, gr) in grads.iter().enumerate() {
                            for d in 0..2 * n {
                                let bit = 1usize << d;
                                if mask & bit != 0 {
                                    continue;
                                }
                                let sign = exterior::wedge_sign(bit, mask);
                                if sign == 0 {
                                    continue;
                                }
                                let target = mask | bit;
                                v.coeff[target] =
                                    &v.coeff[target] + &gr[g][d].mapv(|x| x * cr(sign as f64));
                            }
                        }
                        v
                    })
                    .collect()
            }),
        )
    }
}

/// The pullback action of a group element on a form field:
/// `(g·η)(z) = (g⁻¹)*η`, i.e. coefficients at `g⁻¹z` with covectors carried
/// along.
pub fn group_act(field: &FormField, g: usize, ctx: &Arc<TwistContext>) -> FormField {
    let f = field.clone();
    let ctx = ctx.clone();
    let group = field.group.clone();
    FormField::new(
        field.group.clone(),
        field.n,
        field.size,
        Arc::new(move |pt| {
            let moved = pt.apply(group.element(group.inv(g)));
            f.eval(&moved)
                .into_iter()
                .map(|v| ctx.pullback(g, &v))
                .collect()
        }),
    )
}
