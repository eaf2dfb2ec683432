//! JSON experiment configuration and its translation into core objects.

use std::sync::Arc;

use anyhow::{bail, Context};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use mpxlab::euler::IndexTols;
use mpxlab::fock::FockBasis;
use mpxlab::group::{
    self, close_group, FiniteUnitaryGroup, GroupAlgebraMatrix, UnitaryElement,
};
use mpxlab::quad::QuadratureScheme;
use mpxlab::symbol::PsiProfile;

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct Config {
    pub n: usize,
    pub basis: BasisConfig,
    pub group: GroupConfig,
    #[serde(default)]
    pub projections: Vec<ProjectionConfig>,
    #[serde(default)]
    pub quadrature: QuadConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Truncation levels for the representation suite (defaults by n).
    #[serde(default)]
    pub k_list: Option<Vec<usize>>,
    /// Cutoff bump for the analytic-index stability cross-check.
    #[serde(default)]
    pub stability_bump: Option<usize>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
pub struct BasisConfig {
    pub k: usize,
    pub m: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum GroupConfig {
    Preset {
        preset: String,
        #[serde(default)]
        k: Option<usize>,
    },
    Explicit {
        /// Generator matrices as rows of `[re, im]` pairs.
        generators: Vec<Vec<Vec<[f64; 2]>>>,
        max_order: usize,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum CharacterSpec {
    Named(String),
    Cyclic { cyclic: i64 },
    Values { values: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "type")]
pub enum ProjectionConfig {
    #[serde(rename = "isotypic")]
    Isotypic {
        character: CharacterSpec,
        #[serde(default = "default_one")]
        dim: usize,
        #[serde(default = "default_one")]
        size: usize,
        #[serde(default)]
        label: Option<String>,
    },
    #[serde(rename = "explicit")]
    Explicit {
        /// One `N×N` matrix (rows of `[re, im]`) per group element, in
        /// closure order.
        components: Vec<Vec<Vec<[f64; 2]>>>,
        #[serde(default)]
        label: Option<String>,
    },
}

fn default_one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
pub struct QuadConfig {
    pub radial: usize,
    pub angular: usize,
    pub r0: f64,
    pub r1: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            radial: 32,
            angular: 64,
            r0: 1.0,
            r1: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
pub struct Tolerances {
    pub compare: f64,
    pub convergence: f64,
    pub kernel: f64,
    pub gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            compare: 1e-3,
            convergence: 1e-4,
            kernel: 1e-6,
            gap: 1e-2,
        }
    }
}

fn parse_matrix(rows: &[Vec<[f64; 2]>]) -> anyhow::Result<Array2<Complex64>> {
    let n = rows.len();
    let mut m = Array2::zeros((n, n));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            bail!("matrix row {i} has {} entries, expected {n}", row.len());
        }
        for (j, &[re, im]) in row.iter().enumerate() {
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

/// Fully materialized experiment inputs.
pub struct Experiment {
    pub config: Config,
    pub group: Arc<FiniteUnitaryGroup>,
    pub basis: FockBasis,
    pub projections: Vec<(String, GroupAlgebraMatrix)>,
    pub psi: PsiProfile,
    pub quad: QuadratureScheme,
    pub index_tols: IndexTols,
}

impl Config {
    pub fn from_path(path: &std::path::Path) -> anyhow::Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: Config = serde_json::from_str(&text).context("config does not parse")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n == 0 {
            bail!("n must be at least 1");
        }
        if self.n > 3 {
            bail!("dense-matrix sizes cap n at 3; got {}", self.n);
        }
        if self.basis.m == 0 || self.basis.m >= self.basis.k {
            bail!(
                "basis margin must satisfy 0 < m < k (got k={}, m={})",
                self.basis.k,
                self.basis.m
            );
        }
        if self.quadrature.r0 <= 0.0 || self.quadrature.r1 <= self.quadrature.r0 {
            bail!("quadrature radii must satisfy 0 < r0 < r1");
        }
        Ok(())
    }

    pub fn build(self) -> anyhow::Result<Experiment> {
        let group = Arc::new(self.build_group()?);
        let basis = FockBasis::new(self.n, self.basis.k, self.basis.m)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let mut projections = Vec::new();
        for (idx, spec) in self.projections.iter().enumerate() {
            projections.push(build_projection(spec, &group, idx)?);
        }
        let psi = PsiProfile::quintic(self.quadrature.r0, self.quadrature.r1);
        let quad = QuadratureScheme::new(
            self.quadrature.radial,
            self.quadrature.angular,
            self.quadrature.r0,
            self.quadrature.r1,
        );
        let index_tols = IndexTols {
            kernel: self.tolerances.kernel,
            gap: self.tolerances.gap,
        };
        Ok(Experiment {
            group,
            basis,
            projections,
            psi,
            quad,
            index_tols,
            config: self,
        })
    }

    fn build_group(&self) -> anyhow::Result<FiniteUnitaryGroup> {
        match &self.group {
            GroupConfig::Preset { preset, k } => match preset.as_str() {
                "trivial" => Ok(FiniteUnitaryGroup::trivial(self.n)),
                "cyclic" => {
                    let k = k.context("cyclic preset needs k")?;
                    group::presets::cyclic_diag(self.n, k).map_err(|e| anyhow::anyhow!("{e}"))
                }
                "dihedral" => {
                    if self.n != 2 {
                        bail!("dihedral preset lives in U(2)");
                    }
                    group::presets::dihedral8().map_err(|e| anyhow::anyhow!("{e}"))
                }
                other => bail!("unknown group preset {other:?}"),
            },
            GroupConfig::Explicit {
                generators,
                max_order,
            } => {
                let gens = generators
                    .iter()
                    .map(|g| {
                        let m = parse_matrix(g)?;
                        if m.nrows() != self.n {
                            bail!("generator is {}×{} but n = {}", m.nrows(), m.ncols(), self.n);
                        }
                        UnitaryElement::new(m).map_err(|e| anyhow::anyhow!("{e}"))
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?;
                close_group(&gens, *max_order).map_err(|e| anyhow::anyhow!("{e}"))
            }
        }
    }
}

fn build_projection(
    spec: &ProjectionConfig,
    group: &Arc<FiniteUnitaryGroup>,
    idx: usize,
) -> anyhow::Result<(String, GroupAlgebraMatrix)> {
    match spec {
        ProjectionConfig::Isotypic {
            character,
            dim,
            size,
            label,
        } => {
            let (chi, default_label) = match character {
                CharacterSpec::Named(name) if name == "trivial" => (
                    vec![Complex64::new(1.0, 0.0); group.order()],
                    "isotypic(trivial)".to_string(),
                ),
                CharacterSpec::Named(other) => bail!("unknown character {other:?}"),
                CharacterSpec::Cyclic { cyclic } => {
                    // Generator = first non-identity element of the closure.
                    let gen_index = (0..group.order())
                        .find(|&i| i != group.identity_index())
                        .unwrap_or(group.identity_index());
                    (
                        group::cyclic_character(group, gen_index, *cyclic)
                            .map_err(|e| anyhow::anyhow!("{e}"))?,
                        format!("isotypic(cyclic m={cyclic})"),
                    )
                }
                CharacterSpec::Values { values } => {
                    if values.len() != group.order() {
                        bail!(
                            "character has {} values for group of order {}",
                            values.len(),
                            group.order()
                        );
                    }
                    (
                        values
                            .iter()
                            .map(|&[re, im]| Complex64::new(re, im))
                            .collect(),
                        format!("isotypic(values #{idx})"),
                    )
                }
            };
            let p = group::isotypic_projection(group, &chi, *dim, *size)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            Ok((label.clone().unwrap_or(default_label), p))
        }
        ProjectionConfig::Explicit { components, label } => {
            if components.len() != group.order() {
                bail!(
                    "projection has {} components for group of order {}",
                    components.len(),
                    group.order()
                );
            }
            let mats = components
                .iter()
                .map(|m| parse_matrix(m))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let size = mats[0].nrows();
            let p = GroupAlgebraMatrix {
                size,
                components: mats,
            };
            if !p.is_projection(group, 1e-8) {
                bail!("explicit components do not define a projection");
            }
            Ok((label.clone().unwrap_or(format!("explicit #{idx}")), p))
        }
    }
}
