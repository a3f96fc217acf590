//! Surface ingestion, interior filling and neighborhood structure.
//!
//! The particle cloud produced here is the single geometric substrate every
//! other module consumes: rest positions, per-particle volumes, boundary
//! flags, a kernel radius and symmetric neighbor lists.

mod fill;
mod neighbors;
pub mod ply;
pub mod snapshot;

pub use fill::fill_interior;
pub use neighbors::build_neighbors;

use crate::math::{Pt3, Vec3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("inconsistent normals at line {line}: header declares normals but row has {fields} fields")]
    InconsistentNormals { line: usize, fields: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("no enclosed volume at voxel size {voxel_size}")]
    NoEnclosedVolume { voxel_size: f64 },
    #[error("non-watertight input: flood fill reached the region enclosed by the surface")]
    NonWatertight,
    #[error("invalid fill config: {0}")]
    InvalidConfig(String),
    #[error("snapshot error: {0}")]
    Snapshot(String),
}

/// Raw surface point cloud as read from file.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCloud {
    pub points: Vec<Pt3>,
    /// Unit normals, present for all points or for none.
    pub normals: Option<Vec<Vec3>>,
}

impl SurfaceCloud {
    /// Validates the type invariants: at least 4 non-coplanar points and,
    /// when present, unit normals within 1e-6.
    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.points.len() < 4 {
            return Err(GeometryError::DegenerateInput(format!(
                "need at least 4 points, got {}",
                self.points.len()
            )));
        }
        if !coplanarity_rank_is_full(&self.points) {
            return Err(GeometryError::DegenerateInput(
                "points are coplanar".to_string(),
            ));
        }
        if let Some(normals) = &self.normals {
            if normals.len() != self.points.len() {
                return Err(GeometryError::DegenerateInput(
                    "normal count differs from point count".to_string(),
                ));
            }
            for (i, n) in normals.iter().enumerate() {
                if (n.norm() - 1.0).abs() > 1e-6 {
                    return Err(GeometryError::DegenerateInput(format!(
                        "normal {} has length {}",
                        i,
                        n.norm()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> (Pt3, Pt3) {
        bounding_box(&self.points)
    }

    /// Drops points whose mean distance to their `k` nearest neighbors
    /// exceeds `mean + std_ratio * std` of that statistic over the cloud.
    ///
    /// This is the only surface clean-up exposed; the upstream refinement of
    /// reconstructed point clouds is otherwise out of scope.
    pub fn remove_statistical_outliers(&self, k: usize, std_ratio: f64) -> SurfaceCloud {
        let n = self.points.len();
        if n <= k + 1 {
            return self.clone();
        }
        let mut mean_dists = Vec::with_capacity(n);
        for i in 0..n {
            let mut dists: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (self.points[j] - self.points[i]).norm())
                .collect();
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let m = dists.iter().take(k).sum::<f64>() / k as f64;
            mean_dists.push(m);
        }
        let mean = mean_dists.iter().sum::<f64>() / n as f64;
        let var = mean_dists.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;
        let cutoff = mean + std_ratio * var.sqrt();
        let keep: Vec<usize> = (0..n).filter(|&i| mean_dists[i] <= cutoff).collect();
        SurfaceCloud {
            points: keep.iter().map(|&i| self.points[i]).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| keep.iter().map(|&i| ns[i]).collect()),
        }
    }
}

/// Volumetric particle cloud: the rest-state discretization of the solid.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    /// Rest positions `X_i` in meters.
    pub rest_positions: Vec<Pt3>,
    /// Per-particle volumes in m³, all positive.
    pub volumes: Vec<f64>,
    /// True for particles whose voxel touches an exterior voxel.
    pub boundary_flags: Vec<bool>,
    /// Kernel radius `h` in meters; neighbor lists cover `|X_j - X_i| < 2h`.
    pub kernel_radius: f64,
    /// Sorted index lists, symmetric and excluding self.
    pub neighbor_lists: Vec<Vec<usize>>,
}

impl ParticleCloud {
    /// Builds a cloud from raw positions and uniform volume, computing
    /// neighbor lists; boundary flags default to false.
    pub fn from_points(positions: Vec<Pt3>, volume: f64, kernel_radius: f64) -> ParticleCloud {
        let n = positions.len();
        let mut cloud = ParticleCloud {
            rest_positions: positions,
            volumes: vec![volume; n],
            boundary_flags: vec![false; n],
            kernel_radius,
            neighbor_lists: vec![Vec::new(); n],
        };
        build_neighbors(&mut cloud);
        cloud
    }

    pub fn len(&self) -> usize {
        self.rest_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rest_positions.is_empty()
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Number of particles with an empty neighborhood. Isolated particles
    /// are permitted but worth surfacing to the caller.
    pub fn isolated_count(&self) -> usize {
        self.neighbor_lists.iter().filter(|l| l.is_empty()).count()
    }

    pub fn bounding_box(&self) -> (Pt3, Pt3) {
        bounding_box(&self.rest_positions)
    }

    pub fn centroid(&self) -> Pt3 {
        let mut acc = Vec3::zeros();
        for p in &self.rest_positions {
            acc += p.coords;
        }
        Pt3::from(acc / self.rest_positions.len().max(1) as f64)
    }
}

/// Parameters for [`fill_interior`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FillConfig {
    /// Voxel edge length in meters.
    pub voxel_size: f64,
    /// Per-axis jitter amplitude as a fraction of voxel size, in [0, 0.5).
    pub jitter: f64,
    /// Seed for the jitter stream.
    pub seed: u64,
    /// Kernel radius as a multiple of voxel size.
    pub h_factor: f64,
}

impl Default for FillConfig {
    fn default() -> Self {
        FillConfig {
            voxel_size: 0.05,
            jitter: 0.0,
            seed: 0,
            h_factor: 1.5,
        }
    }
}

impl FillConfig {
    pub fn validate(&self, surface: &SurfaceCloud) -> Result<(), GeometryError> {
        if !(self.voxel_size > 0.0) {
            return Err(GeometryError::InvalidConfig("voxel_size must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return Err(GeometryError::InvalidConfig("jitter must lie in [0, 0.5)".into()));
        }
        if self.h_factor <= 0.0 {
            return Err(GeometryError::InvalidConfig("h_factor must be positive".into()));
        }
        let (lo, hi) = surface.bounding_box();
        let diag = (hi - lo).norm();
        if self.voxel_size >= 0.5 * diag {
            return Err(GeometryError::InvalidConfig(format!(
                "voxel_size {} is not smaller than half the bounding-box diagonal {}",
                self.voxel_size,
                0.5 * diag
            )));
        }
        Ok(())
    }
}

/// Reads a surface cloud from an ASCII PLY file and validates it.
pub fn load_surface(path: &std::path::Path) -> Result<SurfaceCloud, GeometryError> {
    let text = std::fs::read_to_string(path).map_err(|source| GeometryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let cloud = ply::parse(&text)?;
    cloud.validate()?;
    Ok(cloud)
}

/// Writes a surface cloud in the canonical ASCII PLY form.
///
/// The writer is canonical: loading its output and saving again reproduces
/// the file byte for byte.
pub fn save_surface(path: &std::path::Path, cloud: &SurfaceCloud) -> Result<(), GeometryError> {
    std::fs::write(path, ply::format(cloud)).map_err(|source| GeometryError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn bounding_box(points: &[Pt3]) -> (Pt3, Pt3) {
    let mut lo = Pt3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Pt3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (lo, hi)
}

fn coplanarity_rank_is_full(points: &[Pt3]) -> bool {
    let n = points.len() as f64;
    let mut mean = Vec3::zeros();
    for p in points {
        mean += p.coords;
    }
    mean /= n;
    let mut cov = crate::math::Mat3::zeros();
    for p in points {
        let d = p.coords - mean;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return false;
    }
    eig.iter().all(|&v| v > 1e-12 * max)
}
