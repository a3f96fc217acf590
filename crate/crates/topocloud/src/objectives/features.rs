//! Reference-feature files: CSV with a kind header row, one schema per kind.
//!
//! ```text
//! kind,com_target          kind,oscillation       kind,bend_angle
//! x,y,z                    period,max_tilt        alpha
//! 0.1,0.2,0.3              0.25,0.4               0.52
//!
//! kind,pivot_tracks        kind,pose_sequence
//! particle,t,x,y,z         level,tilt,height
//! 3,0.0,0.1,0.0,0.2        0.0,0.31,0.05
//! 3,0.1,0.11,0.0,0.19      0.5,0.0,0.048
//! ```

use super::ObjectiveError;
use crate::math::{Pt3, Vec3};
use std::path::Path;

/// One tracked particle's reference positions over time.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub particle: usize,
    /// Strictly increasing timestamps.
    pub times: Vec<f64>,
    pub points: Vec<Pt3>,
}

impl Track {
    /// Linear interpolation at `t`, clamped to the track's time range.
    pub fn sample_at(&self, t: f64) -> Pt3 {
        if self.times.is_empty() {
            return Pt3::origin();
        }
        if t <= self.times[0] {
            return self.points[0];
        }
        if t >= *self.times.last().unwrap() {
            return *self.points.last().unwrap();
        }
        let k = self.times.partition_point(|&x| x <= t) - 1;
        let frac = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        Pt3::from(self.points[k].coords + frac * (self.points[k + 1] - self.points[k]))
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if self.times.len() != self.points.len() {
            return Err(ObjectiveError::Invalid("track times and points differ in length".into()));
        }
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ObjectiveError::Invalid(
                "track timestamps must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Reference motion features for each task family.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionFeatures {
    ComTarget { target: Pt3 },
    Oscillation { period: f64, max_tilt: f64 },
    BendAngle { alpha: f64 },
    PivotTracks { tracks: Vec<Track> },
    PoseSequence { levels: Vec<f64>, tilts: Vec<f64>, heights: Vec<f64> },
}

pub fn load_features(path: &Path) -> Result<MotionFeatures, ObjectiveError> {
    let text = std::fs::read_to_string(path).map_err(|source| ObjectiveError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_features(&text)
}

pub fn parse_features(text: &str) -> Result<MotionFeatures, ObjectiveError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (first_no, first) = lines.next().ok_or(ObjectiveError::Format {
        line: 0,
        message: "empty feature file".into(),
    })?;
    let mut head = first.split(',');
    let (Some("kind"), Some(kind)) = (head.next().map(str::trim), head.next().map(str::trim))
    else {
        return Err(ObjectiveError::Format {
            line: first_no + 1,
            message: "expected `kind,<name>` header".into(),
        });
    };
    let rows: Vec<(usize, Vec<&str>)> = lines
        .map(|(no, l)| (no + 1, l.split(',').map(str::trim).collect()))
        .collect();

    let parse_f64 = |line: usize, s: &str| -> Result<f64, ObjectiveError> {
        s.parse().map_err(|_| ObjectiveError::Format {
            line,
            message: format!("bad number `{s}`"),
        })
    };

    let expect_header = |expected: &str| -> Result<(), ObjectiveError> {
        match rows.first() {
            Some((no, cols)) if cols.join(",") == expected => {
                let _ = no;
                Ok(())
            }
            Some((no, cols)) => Err(ObjectiveError::Format {
                line: *no,
                message: format!("expected header `{expected}`, found `{}`", cols.join(",")),
            }),
            None => Err(ObjectiveError::Format {
                line: first_no + 2,
                message: format!("missing header `{expected}`"),
            }),
        }
    };

    match kind {
        "com_target" => {
            expect_header("x,y,z")?;
            let (no, cols) = rows.get(1).ok_or(ObjectiveError::Format {
                line: first_no + 3,
                message: "missing target row".into(),
            })?;
            if cols.len() != 3 {
                return Err(ObjectiveError::Format { line: *no, message: "need 3 columns".into() });
            }
            Ok(MotionFeatures::ComTarget {
                target: Pt3::new(
                    parse_f64(*no, cols[0])?,
                    parse_f64(*no, cols[1])?,
                    parse_f64(*no, cols[2])?,
                ),
            })
        }
        "oscillation" => {
            expect_header("period,max_tilt")?;
            let (no, cols) = rows.get(1).ok_or(ObjectiveError::Format {
                line: first_no + 3,
                message: "missing data row".into(),
            })?;
            if cols.len() != 2 {
                return Err(ObjectiveError::Format { line: *no, message: "need 2 columns".into() });
            }
            Ok(MotionFeatures::Oscillation {
                period: parse_f64(*no, cols[0])?,
                max_tilt: parse_f64(*no, cols[1])?,
            })
        }
        "bend_angle" => {
            expect_header("alpha")?;
            let (no, cols) = rows.get(1).ok_or(ObjectiveError::Format {
                line: first_no + 3,
                message: "missing data row".into(),
            })?;
            Ok(MotionFeatures::BendAngle { alpha: parse_f64(*no, cols[0])? })
        }
        "pivot_tracks" => {
            expect_header("particle,t,x,y,z")?;
            let mut tracks: Vec<Track> = Vec::new();
            for (no, cols) in rows.iter().skip(1) {
                if cols.len() != 5 {
                    return Err(ObjectiveError::Format {
                        line: *no,
                        message: "need 5 columns".into(),
                    });
                }
                let particle: usize = cols[0].parse().map_err(|_| ObjectiveError::Format {
                    line: *no,
                    message: format!("bad particle id `{}`", cols[0]),
                })?;
                let t = parse_f64(*no, cols[1])?;
                let p = Pt3::new(
                    parse_f64(*no, cols[2])?,
                    parse_f64(*no, cols[3])?,
                    parse_f64(*no, cols[4])?,
                );
                match tracks.iter_mut().find(|tr| tr.particle == particle) {
                    Some(track) => {
                        track.times.push(t);
                        track.points.push(p);
                    }
                    None => tracks.push(Track { particle, times: vec![t], points: vec![p] }),
                }
            }
            for track in &tracks {
                track.validate()?;
            }
            Ok(MotionFeatures::PivotTracks { tracks })
        }
        "pose_sequence" => {
            expect_header("level,tilt,height")?;
            let mut levels = Vec::new();
            let mut tilts = Vec::new();
            let mut heights = Vec::new();
            for (no, cols) in rows.iter().skip(1) {
                if cols.len() != 3 {
                    return Err(ObjectiveError::Format {
                        line: *no,
                        message: "need 3 columns".into(),
                    });
                }
                levels.push(parse_f64(*no, cols[0])?);
                tilts.push(parse_f64(*no, cols[1])?);
                heights.push(parse_f64(*no, cols[2])?);
            }
            Ok(MotionFeatures::PoseSequence { levels, tilts, heights })
        }
        other => Err(ObjectiveError::Format {
            line: first_no + 1,
            message: format!("unknown feature kind `{other}`"),
        }),
    }
}

pub fn format_features(features: &MotionFeatures) -> String {
    match features {
        MotionFeatures::ComTarget { target } => {
            format!("kind,com_target\nx,y,z\n{},{},{}\n", target.x, target.y, target.z)
        }
        MotionFeatures::Oscillation { period, max_tilt } => {
            format!("kind,oscillation\nperiod,max_tilt\n{period},{max_tilt}\n")
        }
        MotionFeatures::BendAngle { alpha } => {
            format!("kind,bend_angle\nalpha\n{alpha}\n")
        }
        MotionFeatures::PivotTracks { tracks } => {
            let mut out = String::from("kind,pivot_tracks\nparticle,t,x,y,z\n");
            for track in tracks {
                for (t, p) in track.times.iter().zip(&track.points) {
                    out.push_str(&format!("{},{t},{},{},{}\n", track.particle, p.x, p.y, p.z));
                }
            }
            out
        }
        MotionFeatures::PoseSequence { levels, tilts, heights } => {
            let mut out = String::from("kind,pose_sequence\nlevel,tilt,height\n");
            for ((l, t), h) in levels.iter().zip(tilts).zip(heights) {
                out.push_str(&format!("{l},{t},{h}\n"));
            }
            out
        }
    }
}

pub fn save_features(path: &Path, features: &MotionFeatures) -> Result<(), ObjectiveError> {
    std::fs::write(path, format_features(features)).map_err(|source| ObjectiveError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Unused outside tests, but keeps `Vec3` available for track arithmetic
/// in downstream modules that import `features::*`.
pub(crate) type _FeatureVec = Vec3;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_every_kind() {
        let cases = vec![
            MotionFeatures::ComTarget { target: Pt3::new(0.1, -0.2, 0.3) },
            MotionFeatures::Oscillation { period: 0.25, max_tilt: 0.4 },
            MotionFeatures::BendAngle { alpha: 0.52 },
            MotionFeatures::PivotTracks {
                tracks: vec![Track {
                    particle: 3,
                    times: vec![0.0, 0.1, 0.2],
                    points: vec![
                        Pt3::new(0.1, 0.0, 0.2),
                        Pt3::new(0.11, 0.0, 0.19),
                        Pt3::new(0.12, 0.01, 0.18),
                    ],
                }],
            },
            MotionFeatures::PoseSequence {
                levels: vec![0.0, 0.5, 1.0],
                tilts: vec![0.31, 0.0, 3.1],
                heights: vec![0.05, 0.048, 0.06],
            },
        ];
        for features in cases {
            let text = format_features(&features);
            let back = parse_features(&text).unwrap();
            assert_eq!(back, features);
        }
    }

    #[test]
    fn bad_kind_and_bad_number_carry_lines() {
        match parse_features("kind,unknown\n") {
            Err(ObjectiveError::Format { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        match parse_features("kind,bend_angle\nalpha\nnope\n") {
            Err(ObjectiveError::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn track_interpolation_clamps_at_ends() {
        let track = Track {
            particle: 0,
            times: vec![1.0, 2.0],
            points: vec![Pt3::origin(), Pt3::new(1.0, 0.0, 0.0)],
        };
        assert_eq!(track.sample_at(0.0), Pt3::origin());
        assert_eq!(track.sample_at(3.0), Pt3::new(1.0, 0.0, 0.0));
        assert_eq!(track.sample_at(1.5), Pt3::new(0.5, 0.0, 0.0));
    }
}
