//! ASCII PLY subset: `element vertex` with float32 properties `x y z` and
//! optionally `nx ny nz`. Nothing else is accepted.

use super::{GeometryError, SurfaceCloud};
use crate::math::{Pt3, Vec3};

/// Parses the ASCII PLY subset. Errors carry 1-based line numbers.
pub fn parse(text: &str) -> Result<SurfaceCloud, GeometryError> {
    let mut lines = text.lines().enumerate();

    let mut expect = |want: &str| -> Result<(), GeometryError> {
        match lines.next() {
            Some((i, line)) if line.trim() == want => {
                let _ = i;
                Ok(())
            }
            Some((i, line)) => Err(GeometryError::Format {
                line: i + 1,
                message: format!("expected `{want}`, found `{line}`"),
            }),
            None => Err(GeometryError::Format {
                line: 0,
                message: format!("unexpected end of file, expected `{want}`"),
            }),
        }
    };
    expect("ply")?;
    expect("format ascii 1.0")?;

    let mut vertex_count: Option<usize> = None;
    let mut properties: Vec<String> = Vec::new();
    let mut header_end_line = 0;
    for (i, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.starts_with("comment") {
            continue;
        }
        if line == "end_header" {
            header_end_line = i + 1;
            break;
        }
        if let Some(rest) = line.strip_prefix("element ") {
            let mut it = rest.split_whitespace();
            match (it.next(), it.next()) {
                (Some("vertex"), Some(count)) => {
                    vertex_count = Some(count.parse().map_err(|_| GeometryError::Format {
                        line: i + 1,
                        message: format!("bad vertex count `{count}`"),
                    })?);
                }
                _ => {
                    return Err(GeometryError::Format {
                        line: i + 1,
                        message: format!("unsupported element `{rest}`"),
                    })
                }
            }
        } else if let Some(rest) = line.strip_prefix("property ") {
            let mut it = rest.split_whitespace();
            match (it.next(), it.next()) {
                (Some("float"), Some(name)) | (Some("float32"), Some(name)) => {
                    properties.push(name.to_string());
                }
                _ => {
                    return Err(GeometryError::Format {
                        line: i + 1,
                        message: format!("unsupported property `{rest}`"),
                    })
                }
            }
        } else {
            return Err(GeometryError::Format {
                line: i + 1,
                message: format!("unexpected header line `{line}`"),
            });
        }
    }
    let count = vertex_count.ok_or(GeometryError::Format {
        line: header_end_line,
        message: "missing `element vertex` declaration".to_string(),
    })?;
    let has_normals = match properties.as_slice() {
        [x, y, z] if x == "x" && y == "y" && z == "z" => false,
        [x, y, z, nx, ny, nz]
            if x == "x" && y == "y" && z == "z" && nx == "nx" && ny == "ny" && nz == "nz" =>
        {
            true
        }
        other => {
            return Err(GeometryError::Format {
                line: header_end_line,
                message: format!("unsupported property layout {other:?}"),
            })
        }
    };

    let mut points = Vec::with_capacity(count);
    let mut normals = if has_normals { Some(Vec::with_capacity(count)) } else { None };
    for (i, raw) in lines.by_ref() {
        if points.len() == count {
            if !raw.trim().is_empty() {
                return Err(GeometryError::Format {
                    line: i + 1,
                    message: "trailing data after declared vertices".to_string(),
                });
            }
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let expected = if has_normals { 6 } else { 3 };
        if fields.len() != expected {
            if has_normals && fields.len() == 3 {
                return Err(GeometryError::InconsistentNormals {
                    line: i + 1,
                    fields: fields.len(),
                });
            }
            return Err(GeometryError::Format {
                line: i + 1,
                message: format!("expected {expected} fields, found {}", fields.len()),
            });
        }
        let mut vals = [0f32; 6];
        for (slot, field) in vals.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| GeometryError::Format {
                line: i + 1,
                message: format!("bad float `{field}`"),
            })?;
        }
        points.push(Pt3::new(vals[0] as f64, vals[1] as f64, vals[2] as f64));
        if let Some(ns) = normals.as_mut() {
            ns.push(Vec3::new(vals[3] as f64, vals[4] as f64, vals[5] as f64));
        }
    }
    if points.len() != count {
        return Err(GeometryError::Format {
            line: 0,
            message: format!("declared {count} vertices, found {}", points.len()),
        });
    }
    Ok(SurfaceCloud { points, normals })
}

/// Canonical serialization: shortest round-tripping float32 decimals.
pub fn format(cloud: &SurfaceCloud) -> String {
    let n = cloud.points.len();
    let has_normals = cloud.normals.is_some();
    // Rough capacity: ~8 chars per float.
    let mut out = String::with_capacity(128 + n * if has_normals { 54 } else { 27 });
    out.push_str("ply\nformat ascii 1.0\n");
    out.push_str(&std::format!("element vertex {n}\n"));
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    if has_normals {
        out.push_str("property float nx\nproperty float ny\nproperty float nz\n");
    }
    out.push_str("end_header\n");
    for (i, p) in cloud.points.iter().enumerate() {
        push_f32(&mut out, p.x);
        out.push(' ');
        push_f32(&mut out, p.y);
        out.push(' ');
        push_f32(&mut out, p.z);
        if let Some(ns) = &cloud.normals {
            let nv = ns[i];
            out.push(' ');
            push_f32(&mut out, nv.x);
            out.push(' ');
            push_f32(&mut out, nv.y);
            out.push(' ');
            push_f32(&mut out, nv.z);
        }
        out.push('\n');
    }
    out
}

fn push_f32(out: &mut String, v: f64) {
    use std::fmt::Write;
    write!(out, "{}", v as f32).expect("string write");
}
