//! Machine-readable reports: one JSON document per run plus CSV tables for
//! the comparison-style outputs. Field order is fixed by the struct
//! definitions, so identical configs produce byte-identical reports.

use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::config::{Config, Tolerances};

pub const TOOL: &str = "mpxlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The conventions every number in a report depends on.
#[derive(Clone, Debug, Serialize)]
pub struct Conventions {
    pub complex_coordinate: &'static str,
    pub group_action: &'static str,
    pub orientation: &'static str,
    pub exterior_factor: &'static str,
    pub localization_weight: &'static str,
    pub reliable_block: &'static str,
    pub tolerances: Tolerances,
}

impl Conventions {
    pub fn new(tolerances: Tolerances) -> Self {
        Conventions {
            complex_coordinate: "z = p + ix",
            group_action: "matrices act on z; crossed products twist by g^-1 on the base",
            orientation: "prod_j dp_j ^ dx_j positive on each fixed subspace",
            exterior_factor: "forms carry the conjugate standard representation Lambda(conj g)",
            localization_weight: "class <s> divides by conj(det(1 - s on the complement of Fix(s)))",
            reliable_block: "total occupation plus form degree at most K - M",
            tolerances,
        }
    }
}

#[derive(Serialize)]
pub struct Report<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub conventions: Conventions,
    pub config: Config,
    pub results: T,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<num_complex::Complex64> for ComplexValue {
    fn from(v: num_complex::Complex64) -> Self {
        ComplexValue { re: v.re, im: v.im }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RepresentationRow {
    pub cutoff: usize,
    pub margin: usize,
    pub homomorphism_defect: f64,
    pub unitarity_defect: f64,
    pub equivariance_residual: f64,
    pub egorov_residual: f64,
    /// 16-step U(1)-loop deviation from the identity (n = 1 only).
    pub loop_defect: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyticRow {
    pub projection: String,
    pub index: i64,
    pub dim_kernel: usize,
    pub dim_cokernel: usize,
    pub kernel_ceiling: f64,
    pub spectral_floor: f64,
    pub cutoff: usize,
    pub cutoff_check: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassRow {
    pub class_representative: String,
    pub member_count: usize,
    pub fixed_dim: usize,
    pub perp_det: ComplexValue,
    pub value: ComplexValue,
    /// Value at the base radial resolution (convergence evidence).
    pub coarse_value: Option<ComplexValue>,
    pub convergence_shift: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TopologicalRow {
    pub projection: String,
    pub total: ComplexValue,
    pub imaginary_defect: f64,
    pub integrality_defect: f64,
    pub classes: Vec<ClassRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareClassRow {
    pub projection: String,
    pub class_representative: String,
    pub fixed_dim: usize,
    pub perp_det: ComplexValue,
    pub character_value: ComplexValue,
    pub topological_value: ComplexValue,
    pub difference: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub projection: String,
    pub analytic_index: i64,
    pub topological_total: ComplexValue,
    pub total_difference: f64,
    pub total_pass: bool,
    pub classes: Vec<CompareClassRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BottRow {
    pub projection: String,
    pub bott_certificate: f64,
    pub product_certificate: f64,
    pub rotation_curve: Vec<(f64, f64)>,
    pub rotation_floor_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorRecord {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub error_kind: String,
    pub message: String,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn write_compare_csv(path: &Path, rows: &[CompareRow]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = String::new();
    out.push_str(
        "projection,class_representative,fixed_dim,perp_det_re,perp_det_im,\
         character_re,character_im,topological_re,topological_im,difference,pass\n",
    );
    for row in rows {
        for class in &row.classes {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                row.projection,
                class.class_representative,
                class.fixed_dim,
                fmt(class.perp_det.re),
                fmt(class.perp_det.im),
                fmt(class.character_value.re),
                fmt(class.character_value.im),
                fmt(class.topological_value.re),
                fmt(class.topological_value.im),
                fmt(class.difference),
                class.pass,
            ));
        }
        out.push_str(&format!(
            "{},TOTAL,,,,{},0,{},{},{},{}\n",
            row.projection,
            row.analytic_index,
            fmt(row.topological_total.re),
            fmt(row.topological_total.im),
            fmt(row.total_difference),
            row.total_pass,
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_representation_csv(path: &Path, rows: &[RepresentationRow]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = String::new();
    out.push_str("cutoff,margin,homomorphism,unitarity,equivariance,egorov,loop\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.cutoff,
            r.margin,
            fmt(r.homomorphism_defect),
            fmt(r.unitarity_defect),
            fmt(r.equivariance_residual),
            fmt(r.egorov_residual),
            r.loop_defect.map(fmt).unwrap_or_default(),
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}
