//! Differential-form fields over phase space with group-algebra twisting:
//! maps `z ↦ {ω_g(z)}` where each component is a matrix of exterior-algebra
//! elements over the `2n` real covectors `dx₁..dx_n, dp₁..dp_n`.
//!
//! The product twists both the base point and the covectors:
//! `(ω·η)_g(z) = Σ_{g₁g₂=g} ω_{g₁}(z) ∧ (g₁·η_{g₂})(z)` with `g₁` acting by
//! pullback under `g₁⁻¹`.

use std::sync::Arc;


use crate::error::{Error, Result};
use crate::exterior::{self, FormValue};
use crate::group::FiniteUnitaryGroup;
use crate::linalg::{self, cr};
use crate::symbol::{sphere_points, MatrixSymbolField, Point};

/// Precomputed pullback data of a group acting on forms: for each element
/// `g`, the covector substitution of the map `z ↦ g⁻¹·z`.
pub struct TwistContext {
    pub group: Arc<FiniteUnitaryGroup>,
    cov_tables: Vec<Vec<Vec<(usize, f64)>>>,
}

impl TwistContext {
    pub fn new(group: Arc<FiniteUnitaryGroup>) -> Self {
        let n2 = 2 * group.n;
        let cov_tables = (0..group.order())
            .map(|g| {
                let t = group.element(group.inv(g)).real_transform();
                let rows: Vec<Vec<f64>> = (0..n2)
                    .map(|i| (0..n2).map(|j| t[(i, j)]).collect())
                    .collect();
                exterior::covector_table(&rows, n2)
            })
            .collect();
        TwistContext { group, cov_tables }
    }

    /// Pull `value` (a form at the point `g⁻¹·z`) back to `z` along `g⁻¹`.
    pub fn pullback(&self, g: usize, value: &FormValue) -> FormValue {
        value.substitute(&self.cov_tables[g], value.gens)
    }
}

type FormEvalFn = dyn Fn(&Point) -> Vec<FormValue> + Send + Sync;

/// Map `ℂⁿ → Mat_N(Λ(ℝ^{2n}))` with group-indexed components.
#[derive(Clone)]
pub struct FormField {
    pub group: Arc<FiniteUnitaryGroup>,
    pub n: usize,
    pub size: usize,
    eval_fn: Arc<FormEvalFn>,
}

impl FormField {
    pub fn new(
        group: Arc<FiniteUnitaryGroup>,
        n: usize,
        size: usize,
        eval_fn: Arc<FormEvalFn>,
    ) -> Self {
        FormField {
            group,
            n,
            size,
            eval_fn,
        }
    }

    pub fn eval(&self, pt: &Point) -> Vec<FormValue> {
        (self.eval_fn)(pt)
    }

    pub fn sub(&self, other: &FormField) -> FormField {
        let (a, b) = (self.clone(), other.clone());
        FormField::new(
            self.group.clone(),
            self.n,
            self.size,
            Arc::new(move |pt| {
                let mut av = a.eval(pt);
                let bv = b.eval(pt);
                for (x, y) in av.iter_mut().zip(bv.iter()) {
                    x.sub_assign(y);
                }
                av
            }),
        )
    }

    /// Twisted graded product (re-evaluates the factors along the orbit of
    /// the base point).
    pub fn multiply(&self, other: &FormField, ctx: &Arc<TwistContext>) -> FormField {
        let (a, b) = (self.clone(), other.clone());
        let ctx = ctx.clone();
        let group = self.group.clone();
        let size = self.size;
        FormField::new(
            group.clone(),
            self.n,
            size,
            Arc::new(move |pt| {
                let order = group.order();
                let av = a.eval(pt);
                let mut out = vec![FormValue::zero(2 * group.n, size); order];
                for g1 in 0..order {
                    let moved = pt.apply(group.element(group.inv(g1)));
                    let bv = b.eval(&moved);
                    for g2 in 0..order {
                        let g = group.mul(g1, g2);
                        let pulled = ctx.pullback(g1, &bv[g2]);
                        out[g].add_assign(&av[g1].wedge_mul(&pulled));
                    }
                }
                out
            }),
        )
    }
}

/// Exterior differential of a symbol field:
/// `dP = Σ_d (∂P/∂ξ_d) dξ_d` per group component.
pub fn differential(p: &MatrixSymbolField) -> Result<FormField> {
    if !p.has_grad() {
        return Err(Error::Invalid(
            "differential needs derivative callbacks".into(),
        ));
    }
    let sym = p.clone();
    let n = p.n;
    let size = p.size;
    Ok(FormField::new(
        p.group.clone(),
        n,
        size,
        Arc::new(move |pt| {
            let grads = sym.grad(pt).expect("grad checked");
            grads
                .into_iter()
                .map(|per_dir| {
                    let mut v = FormValue::zero(2 * n, size);
                    for (d, m) in per_dir.into_iter().enumerate() {
                        v.coeff[1 << d] = m;
                    }
                    v
                })
                .collect()
        }),
    ))
}

/// Cross-validate the exact differential against central differences on
/// seeded probe points.
pub fn validate_differential(p: &MatrixSymbolField, probes: usize, seed: u64) -> Result<()> {
    let mut points = sphere_points(p.n, 1.3, probes / 2 + 1, seed);
    points.extend(sphere_points(p.n, 0.6, probes / 2 + 1, seed + 1));
    points.truncate(probes.max(1));
    p.derivative_check(&points, 1e-4, 1e-6)
}

/// Degree-0 embedding of the symbol values.
pub fn as_form(p: &MatrixSymbolField) -> FormField {
    let sym = p.clone();
    let n = p.n;
    let size = p.size;
    FormField::new(
        p.group.clone(),
        n,
        size,
        Arc::new(move |pt| {
            sym.eval(pt)
                .into_iter()
                .map(|m| FormValue::from_degree0(2 * n, m))
                .collect()
        }),
    )
}

/// Orbit-table evaluation: values of all group components at every orbit
/// point `h·z`, closed under the twisted product.
struct OrbitTable {
    /// `values[h][g] = field_g(h·z)`.
    values: Vec<Vec<FormValue>>,
}

fn orbit_eval(field: &FormField, pt: &Point) -> OrbitTable {
    let group = &field.group;
    let values = (0..group.order())
        .map(|h| field.eval(&pt.apply(group.element(h))))
        .collect();
    OrbitTable { values }
}

fn orbit_mul(a: &OrbitTable, b: &OrbitTable, ctx: &TwistContext) -> OrbitTable {
    let group = &ctx.group;
    let order = group.order();
    let gens = a.values[0][0].gens;
    let size = a.values[0][0].size;
    let values = (0..order)
        .map(|h| {
            let mut out = vec![FormValue::zero(gens, size); order];
            for g1 in 0..order {
                let src = group.mul(group.inv(g1), h);
                for g2 in 0..order {
                    let g = group.mul(g1, g2);
                    if a.values[h][g1].max_abs() == 0.0 || b.values[src][g2].max_abs() == 0.0 {
                        continue;
                    }
                    let pulled = ctx.pullback(g1, &b.values[src][g2]);
                    out[g].add_assign(&a.values[h][g1].wedge_mul(&pulled));
                }
            }
            out
        })
        .collect();
    OrbitTable { values }
}

/// Chern form of a single projection field:
/// `P·exp(−dP·dP/2πi)`, the exponential truncated by nilpotency at wedge
/// degree `2n`.
pub fn chern_single(p: &MatrixSymbolField, ctx: &Arc<TwistContext>) -> Result<FormField> {
    let dp = differential(p)?;
    let p_form = as_form(p);
    let n = p.n;
    let size = p.size;
    let ctx = ctx.clone();
    let group = p.group.clone();
    Ok(FormField::new(
        group.clone(),
        n,
        size,
        Arc::new(move |pt| {
            let order = group.order();
            let p_tab = orbit_eval(&p_form, pt);
            let dp_tab = orbit_eval(&dp, pt);
            let x = orbit_mul(&dp_tab, &dp_tab, &ctx);
            // exp(−X/2πi) = Σ_m (−1/2πi)^m X^m / m!, degree ≤ 2n.
            let factor = cr(1.0) / (cr(-2.0 * std::f64::consts::PI) * crate::linalg::I);
            let mut series: Vec<Vec<FormValue>> = (0..order)
                .map(|_| {
                    (0..order)
                        .map(|_| FormValue::zero(2 * n, size))
                        .collect::<Vec<_>>()
                })
                .collect();
            for h in 0..order {
                series[h][group.identity_index()] =
                    FormValue::from_degree0(2 * n, linalg::identity(size));
            }
            let mut power = OrbitTable {
                values: series.clone(),
            };
            let mut coeff = cr(1.0);
            for m in 1..=n {
                power = orbit_mul(&power, &x, &ctx);
                coeff *= factor / cr(m as f64);
                for h in 0..order {
                    for g in 0..order {
                        let mut term = power.values[h][g].clone();
                        term.scale(coeff);
                        series[h][g].add_assign(&term);
                    }
                }
            }
            let series_tab = OrbitTable { values: series };
            let result = orbit_mul(&p_tab, &series_tab, &ctx);
            result.values[group.identity_index()].clone()
        }),
    ))
}

/// `ω = P₁exp(−dP₁dP₁/2πi) − P₀exp(−dP₀dP₀/2πi)`, with a support check:
/// all components must vanish beyond `r1`.
pub fn chern_form(
    p1: &MatrixSymbolField,
    p0: &MatrixSymbolField,
    r1: f64,
    ctx: &Arc<TwistContext>,
) -> Result<FormField> {
    let omega = chern_single(p1, ctx)?.sub(&chern_single(p0, ctx)?);
    for radius in [1.05 * r1, 1.5 * r1, 2.3 * r1] {
        for pt in sphere_points(omega.n, radius, 4, 2024) {
            let vals = omega.eval(&pt);
            let leak = vals.iter().map(|v| v.max_abs()).fold(0.0, f64::max);
            if leak > 1e-12 {
                return Err(Error::SupportLeak { leak, radius });
            }
        }
    }
    Ok(omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{presets, GroupAlgebraMatrix};
    use crate::symbol::PsiProfile;
    use ndarray::Array2;
    use ndarray_linalg::c64;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trivial(n: usize) -> Arc<FiniteUnitaryGroup> {
        Arc::new(FiniteUnitaryGroup::trivial(n))
    }

    #[test]
    fn differential_of_constant_vanishes() {
        let g = trivial(1);
        let p = GroupAlgebraMatrix::unit(&g, 2);
        let field = MatrixSymbolField::constant(g, 1, &p);
        let d = differential(&field).unwrap();
        let v = d.eval(&Point::new(vec![0.3], vec![0.4]));
        assert!(v[0].max_abs() < 1e-15);
    }

    #[test]
    fn differential_of_radial_profile() {
        // dψ = ψ′(r)·(Σ x_j dx_j + p_j dp_j)/r.
        let g = trivial(2);
        let psi = PsiProfile::quintic(1.0, 2.0);
        let value_fn: Arc<dyn Fn(&Point) -> Vec<Array2<c64>> + Send + Sync> =
            Arc::new(move |pt: &Point| {
                vec![Array2::from_elem((1, 1), cr(psi.eval(pt.radius()).0))]
            });
        let grad_fn: Arc<dyn Fn(&Point) -> Vec<Vec<Array2<c64>>> + Send + Sync> =
            Arc::new(move |pt: &Point| {
                let r = pt.radius();
                let (_, dpsi) = psi.eval(r);
                vec![(0..4)
                    .map(|d| Array2::from_elem((1, 1), cr(dpsi * pt.coord(d) / r)))
                    .collect()]
            });
        let field = MatrixSymbolField::new(g, 2, 1, value_fn, Some(grad_fn));
        let d = differential(&field).unwrap();
        let pt = Point::new(vec![0.8, 0.5], vec![-0.9, 0.3]);
        let v = d.eval(&pt);
        let r = pt.radius();
        let (_, dpsi) = PsiProfile::quintic(1.0, 2.0).eval(r);
        for dir in 0..4 {
            let got = v[0].coeff[1 << dir][(0, 0)];
            assert_relative_eq!(got.re, dpsi * pt.coord(dir) / r, epsilon = 1e-12);
        }
        field
            .derivative_check(&[pt], 1e-5, 1e-6)
            .expect("profile derivatives");
    }

    #[test]
    fn leibniz_rule_on_random_crossed_fields() {
        let g = Arc::new(presets::cyclic_diag(1, 3).unwrap());
        let ctx = Arc::new(TwistContext::new(g.clone()));
        let mk = |seed: u64| {
            let gg = g.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coef: Vec<(Array2<c64>, Vec<Array2<c64>>, Vec<Array2<c64>>)> = (0..gg.order())
                .map(|_| {
                    let mut m = || {
                        Array2::from_shape_fn((2, 2), |_| {
                            c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                        })
                    };
                    (m(), vec![m()], vec![m()])
                })
                .collect();
            let c2 = coef.clone();
            let order = gg.order();
            let value_fn: Arc<dyn Fn(&Point) -> Vec<Array2<c64>> + Send + Sync> =
                Arc::new(move |pt: &Point| {
                    let z = pt.z()[0];
                    (0..order)
                        .map(|gi| {
                            let (c0, cz, czb) = &c2[gi];
                            let mut m = c0.clone();
                            m = &m + &cz[0].mapv(|v| v * z);
                            m = &m + &czb[0].mapv(|v| v * z.conj());
                            m
                        })
                        .collect()
                });
            let c3 = coef;
            let grad_fn: Arc<dyn Fn(&Point) -> Vec<Vec<Array2<c64>>> + Send + Sync> =
                Arc::new(move |_pt: &Point| {
                    (0..order)
                        .map(|gi| {
                            let (_, cz, czb) = &c3[gi];
                            vec![
                                (&cz[0].mapv(|v| v * crate::linalg::I)
                                    - &czb[0].mapv(|v| v * crate::linalg::I)),
                                (&cz[0] + &czb[0]),
                            ]
                        })
                        .collect()
                });
            MatrixSymbolField::new(g.clone(), 1, 2, value_fn, Some(grad_fn))
        };
        let p = mk(5);
        let q = mk(11);
        let pq = p.multiply(&q);
        let d_pq = differential(&pq).unwrap();
        let lhs = d_pq;
        let rhs = {
            let dp_q = differential(&p).unwrap().multiply(&as_form(&q), &ctx);
            let p_dq = as_form(&p).multiply(&differential(&q).unwrap(), &ctx);
            let a = dp_q;
            let b = p_dq;
            FormField::new(
                g.clone(),
                1,
                2,
                Arc::new(move |pt| {
                    let mut av = a.eval(pt);
                    let bv = b.eval(pt);
                    for (x, y) in av.iter_mut().zip(bv.iter()) {
                        x.add_assign(y);
                    }
                    av
                }),
            )
        };
        for pt in crate::symbol::sphere_points(1, 1.2, 4, 3) {
            let l = lhs.eval(&pt);
            let r = rhs.eval(&pt);
            for gi in 0..g.order() {
                let mut diff = l[gi].clone();
                diff.sub_assign(&r[gi]);
                assert!(diff.max_abs() < 1e-9, "Leibniz defect {}", diff.max_abs());
            }
        }
    }

    #[test]
    fn form_product_associative_with_twist() {
        let g = Arc::new(presets::cyclic_diag(1, 2).unwrap());
        let ctx = Arc::new(TwistContext::new(g.clone()));
        let mk = |seed: u64| {
            let gg = g.clone();
            FormField::new(
                g.clone(),
                1,
                2,
                Arc::new(move |pt: &Point| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let z = pt.z()[0];
                    (0..gg.order())
                        .map(|_| {
                            let mut v = FormValue::zero(2, 2);
                            for mask in 0..4usize {
                                v.coeff[mask] = Array2::from_shape_fn((2, 2), |_| {
                                    c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                                })
                                .mapv(|c| c * (z + cr(0.3)));
                            }
                            v
                        })
                        .collect()
                }),
            )
        };
        let (a, b, c) = (mk(1), mk(2), mk(3));
        let left = a.multiply(&b, &ctx).multiply(&c, &ctx);
        let right = a.multiply(&b.multiply(&c, &ctx), &ctx);
        let pt = Point::new(vec![0.4], vec![-0.6]);
        let l = left.eval(&pt);
        let r = right.eval(&pt);
        for gi in 0..g.order() {
            let mut diff = l[gi].clone();
            diff.sub_assign(&r[gi]);
            assert!(diff.max_abs() < 1e-12);
        }
    }

    #[test]
    fn chern_form_of_equal_projections_vanishes() {
        let g = trivial(1);
        let ctx = Arc::new(TwistContext::new(g.clone()));
        let p = GroupAlgebraMatrix::unit(&g, 2);
        let field = MatrixSymbolField::constant(g, 1, &p);
        let omega = chern_form(&field, &field, 2.0, &ctx).unwrap();
        let v = omega.eval(&Point::new(vec![0.7], vec![0.1]));
        assert!(v[0].max_abs() < 1e-14);
    }
}
