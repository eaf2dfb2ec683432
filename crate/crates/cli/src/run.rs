//! Subcommand implementations: each consumes a built [`Experiment`] and
//! produces report rows plus an exit status.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mpxlab::euler::{analytic_index_stable, equivariance_residual, IndexReport};
use mpxlab::fock::{self, FockBasis};
use mpxlab::group::GroupAlgebraMatrix;
use mpxlab::linalg;
use mpxlab::symbol::{
    bott_map, check_elliptic, euler_factor_triple, exterior_product, rotation_certificate_curve,
};
use mpxlab::trace::{topological_index, TraceOptions};

use crate::config::Experiment;
use crate::report::*;

fn class_label(exp: &Experiment, rep_index: usize) -> String {
    let m = exp.group.element(rep_index).matrix();
    let entries: Vec<String> = m
        .iter()
        .map(|v| format!("{:+.3}{:+.3}i", v.re, v.im))
        .collect();
    format!("[{}]", entries.join(" "))
}

/// Residual tables of the representation suite across truncation levels.
pub fn verify_representation(exp: &Experiment, seed: u64) -> anyhow::Result<Vec<RepresentationRow>> {
    let k_list = exp.config.k_list.clone().unwrap_or_else(|| {
        if exp.config.n == 1 {
            vec![16, 24, 32, 40]
        } else {
            vec![8, 12, 16]
        }
    });
    let mut rows = Vec::new();
    for k in k_list {
        let margin = ((exp.basis.margin as f64) * k as f64 / exp.basis.cutoff as f64)
            .round()
            .max(1.0) as usize;
        let basis = FockBasis::new(exp.config.n, k, margin.min(k - 1))
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let order = exp.group.order();
        let rhos: Vec<_> = (0..order)
            .map(|i| fock::form_representation(exp.group.element(i), &basis))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| anyhow::anyhow!("{e}"))?;

        let mut hom: f64 = 0.0;
        for i in 0..order {
            for j in 0..order {
                let prod = rhos[i].op.dot(&rhos[j].op);
                hom = hom.max(prod.reliable_distance(&rhos[exp.group.mul(i, j)].op));
            }
        }
        let unit = rhos
            .iter()
            .map(|r| r.op.unitary_defect_reliable())
            .fold(0.0, f64::max);
        let equi = (0..order)
            .map(|i| equivariance_residual(exp.group.element(i), &basis))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| anyhow::anyhow!("{e}"))?
            .into_iter()
            .fold(0.0, f64::max);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut egorov: f64 = 0.0;
        for i in 0..order {
            for _ in 0..3 {
                let v: Vec<Complex64> = (0..2 * exp.config.n)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let res = fock::egorov_check(exp.group.element(i), &v, &basis)
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                egorov = egorov.max(res);
            }
        }

        let loop_defect = if exp.config.n == 1 {
            let mut m = Array2::zeros((1, 1));
            let th = std::f64::consts::PI / 8.0;
            m[(0, 0)] = Complex64::new(th.cos(), th.sin());
            let step = fock::metaplectic(
                &mpxlab::group::UnitaryElement::new(m).map_err(|e| anyhow::anyhow!("{e}"))?,
                &basis,
            )
            .map_err(|e| anyhow::anyhow!("{e}"))?;
            let mut prod = linalg::identity(basis.dim());
            for _ in 0..16 {
                prod = step.op.matrix.dot(&prod);
            }
            let op = fock::FockOperator::new(basis, prod);
            let idx = op.reliable_indices();
            let block = linalg::submatrix(&op.matrix, &idx, &idx);
            Some(linalg::spectral_norm(
                &(&block - &linalg::identity(idx.len())),
            ))
        } else {
            None
        };

        rows.push(RepresentationRow {
            cutoff: k,
            margin: margin.min(k - 1),
            homomorphism_defect: hom,
            unitarity_defect: unit,
            equivariance_residual: equi,
            egorov_residual: egorov,
            loop_defect,
        });
    }
    Ok(rows)
}

fn stable_index(exp: &Experiment, p: &GroupAlgebraMatrix) -> mpxlab::Result<IndexReport> {
    let bump = exp
        .config
        .stability_bump
        .unwrap_or(if exp.config.n == 1 { 8 } else { 2 });
    analytic_index_stable(&exp.group, p, &exp.basis, bump, exp.index_tols)
}

pub fn analytic_rows(exp: &Experiment) -> mpxlab::Result<Vec<AnalyticRow>> {
    let bump = exp
        .config
        .stability_bump
        .unwrap_or(if exp.config.n == 1 { 8 } else { 2 });
    let mut rows = Vec::new();
    for (label, p) in &exp.projections {
        let report = stable_index(exp, p)?;
        rows.push(AnalyticRow {
            projection: label.clone(),
            index: report.index,
            dim_kernel: report.dim_kernel,
            dim_cokernel: report.dim_cokernel,
            kernel_ceiling: report.kernel_ceiling,
            spectral_floor: report.spectral_floor,
            cutoff: exp.basis.cutoff,
            cutoff_check: exp.basis.cutoff + bump,
        });
    }
    Ok(rows)
}

pub fn topological_rows(exp: &Experiment) -> mpxlab::Result<Vec<TopologicalRow>> {
    let opts = TraceOptions {
        quad: exp.quad,
        convergence_tol: Some(exp.config.tolerances.convergence),
    };
    let mut rows = Vec::new();
    for (label, p) in &exp.projections {
        let triple = bott_map(p, exp.config.n, exp.group.clone())?;
        let result = topological_index(&triple, exp.psi, &opts)?;
        rows.push(TopologicalRow {
            projection: label.clone(),
            total: result.total.into(),
            imaginary_defect: result.imaginary_defect,
            integrality_defect: result.integrality_defect,
            classes: result
                .per_class
                .iter()
                .map(|c| ClassRow {
                    class_representative: class_label(exp, c.representative_index),
                    member_count: c.member_indices.len(),
                    fixed_dim: c.fixed_dim,
                    perp_det: c.perp_det.into(),
                    value: c.value.into(),
                    coarse_value: c.coarse_value.map(|v| v.into()),
                    convergence_shift: c.convergence_shift,
                })
                .collect(),
        });
    }
    Ok(rows)
}

/// Side-by-side analytic/topological comparison. Per-class references are
/// the character sums `ch_<s>[P] = Σ_{s'∈<s>} tr P_{s'}`.
pub fn compare_rows(exp: &Experiment) -> mpxlab::Result<(Vec<CompareRow>, bool)> {
    let opts = TraceOptions {
        quad: exp.quad,
        convergence_tol: Some(exp.config.tolerances.convergence),
    };
    let tol = exp.config.tolerances.compare;
    let mut rows = Vec::new();
    let mut all_pass = true;
    for (label, p) in &exp.projections {
        let analytic = stable_index(exp, p)?;
        let triple = bott_map(p, exp.config.n, exp.group.clone())?;
        let topo = topological_index(&triple, exp.psi, &opts)?;
        let total_difference = (topo.total - Complex64::new(analytic.index as f64, 0.0)).norm();
        let total_pass = total_difference <= tol;
        all_pass &= total_pass;
        let classes = topo
            .per_class
            .iter()
            .map(|c| {
                let character: Complex64 = c
                    .member_indices
                    .iter()
                    .map(|&s| linalg::trace(&p.components[s]))
                    .sum();
                let difference = (c.value - character).norm();
                let pass = difference <= tol;
                all_pass &= pass;
                CompareClassRow {
                    projection: label.clone(),
                    class_representative: class_label(exp, c.representative_index),
                    fixed_dim: c.fixed_dim,
                    perp_det: c.perp_det.into(),
                    character_value: character.into(),
                    topological_value: c.value.into(),
                    difference,
                    pass,
                }
            })
            .collect();
        rows.push(CompareRow {
            projection: label.clone(),
            analytic_index: analytic.index,
            topological_total: topo.total.into(),
            total_difference,
            total_pass,
            classes,
        });
    }
    Ok((rows, all_pass))
}

pub fn bott_rows(exp: &Experiment) -> mpxlab::Result<Vec<BottRow>> {
    let grid = 16;
    let mut rows = Vec::new();
    for (label, p) in &exp.projections {
        let triple = bott_map(p, exp.config.n, exp.group.clone())?;
        let cert = check_elliptic(&triple, 1.0, grid)?;
        let factor = euler_factor_triple(exp.config.n, exp.group.clone());
        let product = exterior_product(&triple, &factor)?;
        let product_cert = check_elliptic(&product, product.radius, grid)?;
        let curve = rotation_certificate_curve(&product, 8, 0.5)?;
        rows.push(BottRow {
            projection: label.clone(),
            bott_certificate: cert,
            product_certificate: product_cert,
            rotation_curve: curve,
            rotation_floor_ratio: 0.5,
        });
    }
    Ok(rows)
}

/// Map a core error onto the documented exit codes: 3 for convergence-type
/// failures, 2 for everything that indicates bad inputs.
pub fn exit_code_for(err: &mpxlab::Error) -> i32 {
    use mpxlab::Error::*;
    match err {
        GapFailure { .. } | UnstableIndex { .. } | QuadratureUnconverged { .. } => 3,
        _ => 2,
    }
}
