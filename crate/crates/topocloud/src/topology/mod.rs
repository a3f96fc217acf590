//! Topology representations: map parameters to a per-particle material
//! indicator `r ∈ (0,1)` and expose the Jacobian of `r` with respect to the
//! parameters as vector-Jacobian products.
//!
//! Sign convention: a negative signed distance means solid material, so
//! `r = sigmoid(-beta * s)` tends to 1 inside the represented surface.

mod neural;
mod point;
mod quadric;
mod train;

pub use neural::NeuralSdf;
pub use point::PointField;
pub use quadric::QuadricSdf;
pub use train::{train_neural_sdf, TrainOptimizer, TrainReport, TrainSchedule};

use crate::geometry::{snapshot, GeometryError, ParticleCloud};
use thiserror::Error;

/// Indicator value assigned to pinned boundary particles.
pub const PIN_VALUE: f64 = 1.0 - 1e-9;

/// Indicator values live in the open interval (0,1); a saturated sigmoid is
/// nudged off the endpoints by this margin.
pub const INDICATOR_MARGIN: f64 = 1e-15;

pub(crate) fn clamp_indicator(r: f64) -> f64 {
    r.clamp(INDICATOR_MARGIN, 1.0 - INDICATOR_MARGIN)
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("size mismatch: field has {field} values, cloud has {cloud} particles")]
    SizeMismatch { field: usize, cloud: usize },
    #[error("non-finite field value at particle {particle}")]
    NonFinite { particle: usize },
    #[error("training diverged at epoch {epoch}; parameters restored to last finite checkpoint")]
    Divergence { epoch: usize },
    #[error(transparent)]
    Snapshot(#[from] GeometryError),
}

/// Per-particle indicator values with the pinning mask that produced them.
#[derive(Debug, Clone)]
pub struct IndicatorField {
    /// `r_i` in the open interval (0,1).
    pub values: Vec<f64>,
    /// Signed distances `s_i`, present for surface-based representations.
    pub sdf_values: Option<Vec<f64>>,
    /// True where the particle was pinned solid (boundary pinning enabled).
    pub pinned: Vec<bool>,
}

/// One of the three topology parameterizations plus the boundary-pinning
/// switch shared by all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyField {
    pub repr: Representation,
    /// When set, particles flagged as boundary are forced solid and their
    /// indicator stops depending on the parameters.
    pub pin_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Point(PointField),
    Quadric(QuadricSdf),
    Neural(NeuralSdf),
}

impl TopologyField {
    pub fn point(field: PointField) -> TopologyField {
        TopologyField { repr: Representation::Point(field), pin_boundary: false }
    }

    pub fn quadric(q: QuadricSdf) -> TopologyField {
        TopologyField { repr: Representation::Quadric(q), pin_boundary: false }
    }

    pub fn neural(n: NeuralSdf) -> TopologyField {
        TopologyField { repr: Representation::Neural(n), pin_boundary: false }
    }

    pub fn param_count(&self) -> usize {
        match &self.repr {
            Representation::Point(f) => f.theta.len(),
            Representation::Quadric(_) => 10,
            Representation::Neural(n) => n.param_count(),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match &self.repr {
            Representation::Point(f) => f.theta.clone(),
            Representation::Quadric(q) => q.params().to_vec(),
            Representation::Neural(n) => n.params.clone(),
        }
    }

    pub fn set_params(&mut self, p: &[f64]) {
        match &mut self.repr {
            Representation::Point(f) => f.theta.copy_from_slice(p),
            Representation::Quadric(q) => q.set_params(p.try_into().expect("10 quadric params")),
            Representation::Neural(n) => n.params.copy_from_slice(p),
        }
    }

    pub fn beta(&self) -> f64 {
        match &self.repr {
            Representation::Point(f) => f.beta,
            Representation::Quadric(q) => q.beta,
            Representation::Neural(n) => n.beta,
        }
    }

    pub fn set_beta(&mut self, beta: f64) {
        match &mut self.repr {
            Representation::Point(f) => f.beta = beta,
            Representation::Quadric(q) => q.beta = beta,
            Representation::Neural(n) => n.beta = beta,
        }
    }

    /// Evaluates the indicator on every particle of the cloud.
    pub fn eval(&self, cloud: &ParticleCloud) -> Result<IndicatorField, TopologyError> {
        let mut field = match &self.repr {
            Representation::Point(f) => f.eval(cloud)?,
            Representation::Quadric(q) => q.eval(cloud)?,
            Representation::Neural(n) => n.eval(cloud)?,
        };
        if self.pin_boundary {
            for (i, &b) in cloud.boundary_flags.iter().enumerate() {
                if b {
                    field.values[i] = PIN_VALUE;
                    field.pinned[i] = true;
                }
            }
        }
        Ok(field)
    }

    /// Chains a per-particle cotangent on `r` back to the parameters.
    /// Pinned particles contribute nothing.
    pub fn vjp(&self, cloud: &ParticleCloud, upstream: &[f64]) -> Result<Vec<f64>, TopologyError> {
        if upstream.len() != cloud.len() {
            return Err(TopologyError::SizeMismatch { field: upstream.len(), cloud: cloud.len() });
        }
        let masked: Vec<f64> = if self.pin_boundary {
            upstream
                .iter()
                .zip(&cloud.boundary_flags)
                .map(|(&u, &b)| if b { 0.0 } else { u })
                .collect()
        } else {
            upstream.to_vec()
        };
        match &self.repr {
            Representation::Point(f) => f.vjp(cloud, &masked),
            Representation::Quadric(q) => q.vjp(cloud, &masked),
            Representation::Neural(n) => n.vjp(cloud, &masked),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match &self.repr {
            Representation::Point(f) => {
                let mut w = snapshot::Writer::with_kind(snapshot::KIND_TOPOLOGY_POINT);
                w.put_u8(self.pin_boundary as u8);
                w.put_f64(f.beta);
                w.put_u64(f.theta.len() as u64);
                w.put_f64_slice(&f.theta);
                w.into_bytes()
            }
            Representation::Quadric(q) => {
                let mut w = snapshot::Writer::with_kind(snapshot::KIND_TOPOLOGY_QUADRIC);
                w.put_u8(self.pin_boundary as u8);
                w.put_f64(q.beta);
                w.put_f64_slice(&q.params());
                w.into_bytes()
            }
            Representation::Neural(n) => {
                let mut w = snapshot::Writer::with_kind(snapshot::KIND_TOPOLOGY_NEURAL);
                w.put_u8(self.pin_boundary as u8);
                w.put_f64(n.beta);
                w.put_f64(n.dropout_rate);
                w.put_u8(n.weight_norm() as u8);
                w.put_u32(n.layer_sizes().len() as u32);
                for &s in n.layer_sizes() {
                    w.put_u32(s as u32);
                }
                w.put_f64_slice(&n.params);
                w.into_bytes()
            }
        }
    }

    pub fn from_bytes(data: &[u8]) -> Result<TopologyField, TopologyError> {
        let (mut r, kind) = snapshot::Reader::new(data)?;
        let pin = |r: &mut snapshot::Reader| -> Result<bool, GeometryError> { Ok(r.get_u8()? != 0) };
        match kind {
            snapshot::KIND_TOPOLOGY_POINT => {
                let pin_boundary = pin(&mut r)?;
                let beta = r.get_f64()?;
                let n = r.get_u64()? as usize;
                let theta = r.get_f64_vec(n)?;
                r.finish()?;
                Ok(TopologyField { repr: Representation::Point(PointField { theta, beta }), pin_boundary })
            }
            snapshot::KIND_TOPOLOGY_QUADRIC => {
                let pin_boundary = pin(&mut r)?;
                let beta = r.get_f64()?;
                let params = r.get_f64_vec(10)?;
                r.finish()?;
                let mut q = QuadricSdf::zero(beta);
                q.set_params(params.as_slice().try_into().unwrap());
                Ok(TopologyField { repr: Representation::Quadric(q), pin_boundary })
            }
            snapshot::KIND_TOPOLOGY_NEURAL => {
                let pin_boundary = pin(&mut r)?;
                let beta = r.get_f64()?;
                let dropout = r.get_f64()?;
                let weight_norm = r.get_u8()? != 0;
                let n_sizes = r.get_u32()? as usize;
                let mut sizes = Vec::with_capacity(n_sizes);
                for _ in 0..n_sizes {
                    sizes.push(r.get_u32()? as usize);
                }
                let mut net = NeuralSdf::from_layer_sizes(sizes, beta)
                    .map_err(TopologyError::Snapshot)?;
                net.dropout_rate = dropout;
                net.set_weight_norm(weight_norm);
                let params = r.get_f64_vec(net.param_count())?;
                r.finish()?;
                net.params = params;
                Ok(TopologyField { repr: Representation::Neural(net), pin_boundary })
            }
            other => Err(TopologyError::Snapshot(GeometryError::Snapshot(format!(
                "expected a topology snapshot, found kind {other}"
            )))),
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), TopologyError> {
        std::fs::write(path, self.to_bytes()).map_err(|source| {
            TopologyError::Snapshot(GeometryError::Io { path: path.display().to_string(), source })
        })
    }

    pub fn load(path: &std::path::Path) -> Result<TopologyField, TopologyError> {
        let data = std::fs::read(path).map_err(|source| {
            TopologyError::Snapshot(GeometryError::Io { path: path.display().to_string(), source })
        })?;
        TopologyField::from_bytes(&data)
    }

    /// Short tag used in filenames and logs.
    pub fn kind_name(&self) -> &'static str {
        match &self.repr {
            Representation::Point(_) => "point",
            Representation::Quadric(_) => "quadric",
            Representation::Neural(_) => "neural",
        }
    }
}

/// Splits a particle range into fixed chunks, accumulating per-chunk partial
/// parameter gradients in parallel and reducing them in chunk order. The
/// result is independent of the thread count.
pub(crate) fn deterministic_param_accumulate<F>(
    n_particles: usize,
    param_count: usize,
    per_particle: F,
) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    use rayon::prelude::*;
    const CHUNK: usize = 256;
    let chunks: Vec<(usize, usize)> = (0..n_particles)
        .step_by(CHUNK)
        .map(|start| (start, (start + CHUNK).min(n_particles)))
        .collect();
    let partials: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut acc = vec![0.0; param_count];
            for i in start..end {
                per_particle(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut grad = vec![0.0; param_count];
    for part in partials {
        for (g, p) in grad.iter_mut().zip(part) {
            *g += p;
        }
    }
    grad
}
