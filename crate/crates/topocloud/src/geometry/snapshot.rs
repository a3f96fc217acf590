//! Internal binary snapshot format.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! bytes 0..8   magic  b"TCSNAP01"
//! bytes 8..12  format version, u32 (currently 1)
//! bytes 12..16 payload kind, u32
//! bytes 16..   kind-specific payload
//! ```
//!
//! Payload kinds:
//!
//! | kind | content |
//! |------|---------|
//! | 1    | particle cloud: n u64, h f64, positions 3n f64, volumes n f64, boundary n u8, neighbor offsets (n+1) u64, neighbor indices u64 |
//! | 2    | point topology: pin u8, beta f64, n u64, theta n f64 |
//! | 3    | quadric topology: pin u8, beta f64, params 10 f64 |
//! | 4    | neural topology: pin u8, beta f64, dropout f64, weight-norm u8, layer count u32, layer sizes u32, params f64 |
//! | 5    | soft state: n u64, time f64, positions 3n f64, velocities 3n f64 |

use super::{GeometryError, ParticleCloud};
use crate::math::Pt3;
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"TCSNAP01";
pub const VERSION: u32 = 1;

pub const KIND_PARTICLE_CLOUD: u32 = 1;
pub const KIND_TOPOLOGY_POINT: u32 = 2;
pub const KIND_TOPOLOGY_QUADRIC: u32 = 3;
pub const KIND_TOPOLOGY_NEURAL: u32 = 4;
pub const KIND_SOFT_STATE: u32 = 5;

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn with_kind(kind: u32) -> Writer {
        let mut w = Writer { buf: Vec::new() };
        w.buf.extend_from_slice(MAGIC);
        w.put_u32(VERSION);
        w.put_u32(kind);
        w
    }

    pub fn put_u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn put_u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_f64_slice(&mut self, vs: &[f64]) {
        for v in vs {
            self.put_f64(*v);
        }
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Validates magic and version, returning a reader positioned at the
    /// kind tag.
    pub fn new(data: &'a [u8]) -> Result<(Reader<'a>, u32), GeometryError> {
        if data.len() < 16 {
            return Err(GeometryError::Snapshot("file too short for header".into()));
        }
        if &data[0..8] != MAGIC {
            return Err(GeometryError::Snapshot("bad magic bytes".into()));
        }
        let mut r = Reader { data, pos: 8 };
        let version = r.get_u32()?;
        if version != VERSION {
            return Err(GeometryError::Snapshot(format!(
                "unsupported version {version}"
            )));
        }
        let kind = r.get_u32()?;
        Ok((r, kind))
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8], GeometryError> {
        if self.pos + len > self.data.len() {
            return Err(GeometryError::Snapshot("truncated payload".into()));
        }
        let s = &self.data[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    pub fn get_u8(&mut self) -> Result<u8, GeometryError> {
        Ok(self.take(1)?[0])
    }

    pub fn get_u32(&mut self) -> Result<u32, GeometryError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn get_u64(&mut self) -> Result<u64, GeometryError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn get_f64(&mut self) -> Result<f64, GeometryError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn get_f64_vec(&mut self, count: usize) -> Result<Vec<f64>, GeometryError> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(self.get_f64()?);
        }
        Ok(out)
    }

    pub fn finish(&self) -> Result<(), GeometryError> {
        if self.pos != self.data.len() {
            return Err(GeometryError::Snapshot(format!(
                "{} trailing bytes",
                self.data.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn cloud_to_bytes(cloud: &ParticleCloud) -> Vec<u8> {
    let mut w = Writer::with_kind(KIND_PARTICLE_CLOUD);
    let n = cloud.len();
    w.put_u64(n as u64);
    w.put_f64(cloud.kernel_radius);
    for p in &cloud.rest_positions {
        w.put_f64(p.x);
        w.put_f64(p.y);
        w.put_f64(p.z);
    }
    w.put_f64_slice(&cloud.volumes);
    for &b in &cloud.boundary_flags {
        w.put_u8(b as u8);
    }
    let mut offset = 0u64;
    w.put_u64(0);
    for list in &cloud.neighbor_lists {
        offset += list.len() as u64;
        w.put_u64(offset);
    }
    for list in &cloud.neighbor_lists {
        for &j in list {
            w.put_u64(j as u64);
        }
    }
    w.into_bytes()
}

pub fn cloud_from_bytes(data: &[u8]) -> Result<ParticleCloud, GeometryError> {
    let (mut r, kind) = Reader::new(data)?;
    if kind != KIND_PARTICLE_CLOUD {
        return Err(GeometryError::Snapshot(format!(
            "expected particle cloud (kind 1), found kind {kind}"
        )));
    }
    let n = r.get_u64()? as usize;
    let h = r.get_f64()?;
    let mut positions = Vec::with_capacity(n);
    for _ in 0..n {
        let x = r.get_f64()?;
        let y = r.get_f64()?;
        let z = r.get_f64()?;
        positions.push(Pt3::new(x, y, z));
    }
    let volumes = r.get_f64_vec(n)?;
    let mut boundary = Vec::with_capacity(n);
    for _ in 0..n {
        boundary.push(r.get_u8()? != 0);
    }
    let mut offsets = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        offsets.push(r.get_u64()? as usize);
    }
    let total = *offsets.last().unwrap_or(&0);
    let mut flat = Vec::with_capacity(total);
    for _ in 0..total {
        let j = r.get_u64()? as usize;
        if j >= n {
            return Err(GeometryError::Snapshot(format!("neighbor index {j} out of range")));
        }
        flat.push(j);
    }
    r.finish()?;
    let mut lists = Vec::with_capacity(n);
    for i in 0..n {
        if offsets[i] > offsets[i + 1] || offsets[i + 1] > total {
            return Err(GeometryError::Snapshot("bad neighbor offsets".into()));
        }
        lists.push(flat[offsets[i]..offsets[i + 1]].to_vec());
    }
    Ok(ParticleCloud {
        rest_positions: positions,
        volumes,
        boundary_flags: boundary,
        kernel_radius: h,
        neighbor_lists: lists,
    })
}

pub fn save_cloud(path: &Path, cloud: &ParticleCloud) -> Result<(), GeometryError> {
    std::fs::write(path, cloud_to_bytes(cloud)).map_err(|source| GeometryError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_cloud(path: &Path) -> Result<ParticleCloud, GeometryError> {
    let data = std::fs::read(path).map_err(|source| GeometryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    cloud_from_bytes(&data)
}
