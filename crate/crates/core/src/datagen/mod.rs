//! Problem generators: random sparse SPD systems and 2-D Poisson problems on
//! sampled meshes, plus dataset directories with a JSON manifest.

mod delaunay;
pub mod fem;
pub mod mesh;
mod random;

pub use delaunay::{incircle, orient2d, Point, Triangulation};
pub use fem::{assemble_poisson, assemble_stiffness, element_stiffness, PoissonSystem};
pub use mesh::{mesh_domain, sample_mesh, unit_square_grid, Mesh2D, MeshFamily};
pub use random::{gen_random_spd, RandomSpdSpec};

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::io::{read_matrix_market, read_vector, write_matrix_market, write_vector};
use crate::sparse::SparseSpd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Random,
    Convex,
    ConvexWithHole,
    Polytope,
}

impl From<MeshFamily> for Family {
    fn from(f: MeshFamily) -> Self {
        match f {
            MeshFamily::Convex => Family::Convex,
            MeshFamily::ConvexWithHole => Family::ConvexWithHole,
            MeshFamily::Polytope => Family::Polytope,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub family: Family,
    pub seed: u64,
    pub index: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub a: SparseSpd,
    pub b: Vec<f64>,
    pub provenance: Provenance,
}

/// Independent generator for instance `index` of a run seeded with `seed`.
pub(crate) fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Outline points sampled per Poisson domain unless configured otherwise.
pub const DEFAULT_OUTLINE_POINTS: usize = 16;

/// A Poisson problem with source `f ≡ 1` and `u = 0` on the boundary.
pub fn gen_poisson(
    family: MeshFamily,
    n_points: usize,
    target_vertices: usize,
    seed: u64,
    index: u64,
) -> Result<ProblemInstance> {
    let mut rng = instance_rng(seed, index);
    let mesh = mesh::sample_mesh_with(family, n_points, target_vertices, &mut rng)?;
    let sys = assemble_poisson(&mesh, |_| 1.0, |_| 0.0)?;
    Ok(ProblemInstance {
        a: sys.a,
        b: sys.b,
        provenance: Provenance {
            family: family.into(),
            seed,
            index,
            alpha: None,
            p: None,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Random,
    Poisson,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Random => "random",
            DatasetKind::Poisson => "poisson",
        }
    }
}

/// Everything needed to regenerate a dataset.
///
/// `size_min..=size_max` is the matrix dimension for random systems and the
/// target mesh vertex count for Poisson problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub count: usize,
    pub size_min: usize,
    pub size_max: usize,
    pub seed: u64,
    pub alpha: f64,
    pub sparsity_lo: f64,
    pub sparsity_hi: f64,
    pub outline_points: usize,
    /// Mesh family for every instance; `None` cycles through all three.
    pub family: Option<MeshFamily>,
}

impl DatasetSpec {
    pub fn random(count: usize, n: usize, seed: u64) -> Self {
        Self {
            kind: DatasetKind::Random,
            count,
            size_min: n,
            size_max: n,
            seed,
            alpha: 1e-2,
            sparsity_lo: 0.80,
            sparsity_hi: 0.90,
            outline_points: DEFAULT_OUTLINE_POINTS,
            family: None,
        }
    }

    pub fn poisson(count: usize, size_min: usize, size_max: usize, seed: u64) -> Self {
        Self {
            kind: DatasetKind::Poisson,
            size_min,
            size_max,
            ..Self::random(count, 0, seed)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.size_min == 0 || self.size_min > self.size_max {
            return Err(Error::InvalidArgument(format!(
                "invalid size range {}..={}",
                self.size_min, self.size_max
            )));
        }
        Ok(())
    }

    fn size_of(&self, index: u64) -> usize {
        if self.size_min == self.size_max {
            return self.size_min;
        }
        // separate stream so that sizes do not shift the instance draws
        let mut rng = instance_rng(self.seed ^ 0x5173_e5a1_d00d_f00d, index);
        rng.random_range(self.size_min..=self.size_max)
    }

    /// Generates instance `index` in memory.
    pub fn instance(&self, index: u64) -> Result<ProblemInstance> {
        self.validate()?;
        let size = self.size_of(index);
        match self.kind {
            DatasetKind::Random => random::gen_random_spd_indexed(
                &RandomSpdSpec {
                    n: size,
                    alpha: self.alpha,
                    sparsity_lo: self.sparsity_lo,
                    sparsity_hi: self.sparsity_hi,
                    seed: self.seed,
                    p_override: None,
                },
                index,
            ),
            DatasetKind::Poisson => {
                let family = self
                    .family
                    .unwrap_or(MeshFamily::ALL[(index % MeshFamily::ALL.len() as u64) as usize]);
                gen_poisson(family, self.outline_points, size, self.seed, index)
            }
        }
    }

    /// All instances, generated in parallel and returned in index order.
    pub fn instances(&self) -> Result<Vec<ProblemInstance>> {
        (0..self.count as u64).into_par_iter().map(|i| self.instance(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Matrix file relative to the manifest.
    pub file: String,
    pub rhs: String,
    pub n: usize,
    pub nnz: usize,
    pub sparsity: f64,
    pub family: Family,
    pub index: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: DatasetKind,
    pub seed: u64,
    pub spec: DatasetSpec,
    pub instances: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `<out>/<kind>/<index>.mtx`, `<index>.rhs` and `manifest.json`,
/// returning the manifest and the directory holding it.
pub fn gen_dataset(spec: &DatasetSpec, out_dir: impl AsRef<Path>) -> Result<(Manifest, PathBuf)> {
    spec.validate()?;
    let dir = out_dir.as_ref().join(spec.kind.name());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let entries: Vec<ManifestEntry> = (0..spec.count as u64)
        .into_par_iter()
        .map(|index| {
            let inst = spec.instance(index)?;
            let file = format!("{index}.mtx");
            let rhs = format!("{index}.rhs");
            write_matrix_market(&inst.a, dir.join(&file))?;
            write_vector(&inst.b, dir.join(&rhs))?;
            Ok(ManifestEntry {
                file,
                rhs,
                n: inst.a.n(),
                nnz: inst.a.nnz(),
                sparsity: inst.a.sparsity(),
                family: inst.provenance.family,
                index,
                alpha: inst.provenance.alpha,
                p: inst.provenance.p,
            })
        })
        .collect::<Result<_>>()?;
    let manifest = Manifest {
        kind: spec.kind,
        seed: spec.seed,
        spec: spec.clone(),
        instances: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok((manifest, dir))
}

#[derive(Debug, Clone)]
pub struct LoadedInstance {
    /// Instance identifier: the matrix file stem.
    pub id: String,
    pub a: SparseSpd,
    pub b: Vec<f64>,
}

/// Finds the manifest in `dir` or, failing that, in its only subdirectory
/// that has one.
pub fn manifest_dir(dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    if dir.join(MANIFEST_FILE).is_file() {
        return Ok(dir.to_path_buf());
    }
    let read = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut found: Vec<PathBuf> = read
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST_FILE).is_file())
        .collect();
    found.sort();
    match found.len() {
        1 => Ok(found.remove(0)),
        _ => Err(Error::io(
            dir.join(MANIFEST_FILE),
            std::io::Error::new(std::io::ErrorKind::NotFound, "no unique dataset manifest"),
        )),
    }
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<(Manifest, PathBuf)> {
    let dir = manifest_dir(dir)?;
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok((serde_json::from_str(&text)?, dir))
}

/// Loads every instance listed in the manifest, in manifest order.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<(Manifest, Vec<LoadedInstance>)> {
    let (manifest, dir) = read_manifest(dir)?;
    let instances = manifest
        .instances
        .par_iter()
        .map(|e| {
            let a = read_matrix_market(dir.join(&e.file))?;
            let b = read_vector(dir.join(&e.rhs))?;
            crate::error::check_dim(a.n(), b.len())?;
            let id = Path::new(&e.file)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| e.file.clone());
            Ok(LoadedInstance { id, a, b })
        })
        .collect::<Result<_>>()?;
    Ok((manifest, instances))
}
