//! Scalar losses on motion features, each returning its value together with
//! the cotangent needed by the reverse sweep.
//!
//! Reference features arrive as numeric CSV files (see [`features`]), never
//! as video.

pub mod features;

pub use features::{load_features, save_features, MotionFeatures, Track};

use crate::geometry::ParticleCloud;
use crate::math::{Pt3, Vec3};
use crate::rigidsim::{signed_tilt, RigidProps};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("insufficient oscillation: found {crossings} upward zero crossings, need at least 2")]
    InsufficientOscillation { crossings: usize },
    #[error("degenerate segment between markers {a} and {b}")]
    DegenerateSegment { a: usize, b: usize },
    #[error("track for particle {id} not found in the trajectory")]
    TrackNotFound { id: usize },
    #[error("feature file error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

/// A loss value bundled with its cotangent with respect to whichever
/// simulated quantity the loss touches.
#[derive(Debug, Clone)]
pub struct Loss<C> {
    pub value: f64,
    pub cotangent: C,
}

/// `|c - target|²` with cotangent `2 (c - target)` on the center of mass.
pub fn loss_com(props: &RigidProps, target: &Pt3) -> Loss<Vec3> {
    let d = props.com - target;
    Loss { value: d.norm_squared(), cotangent: 2.0 * d }
}

/// Period and hard maximum tilt from a tilt-angle signal: the period is the
/// mean spacing of upward zero crossings with linear sub-sample
/// interpolation.
pub fn extract_oscillation(times: &[f64], tilt: &[f64]) -> Result<(f64, f64), ObjectiveError> {
    let crossings = upward_crossings(times, tilt);
    if crossings.len() < 2 {
        return Err(ObjectiveError::InsufficientOscillation { crossings: crossings.len() });
    }
    let period = (crossings.last().unwrap().time - crossings.first().unwrap().time)
        / (crossings.len() - 1) as f64;
    let max_tilt = tilt.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((period, max_tilt))
}

struct Crossing {
    /// Sample index `k` with `tilt[k] < 0 <= tilt[k+1]`.
    index: usize,
    time: f64,
}

fn upward_crossings(times: &[f64], tilt: &[f64]) -> Vec<Crossing> {
    let mut out = Vec::new();
    for k in 0..tilt.len().saturating_sub(1) {
        if tilt[k] < 0.0 && tilt[k + 1] >= 0.0 {
            let frac = -tilt[k] / (tilt[k + 1] - tilt[k]);
            out.push(Crossing { index: k, time: times[k] + frac * (times[k + 1] - times[k]) });
        }
    }
    out
}

/// Temperature of the soft maximum used for the differentiable tilt peak.
pub const TILT_SOFTMAX_TEMPERATURE: f64 = 1e-3;

/// Differentiable oscillation features: interpolated-crossing period and a
/// log-sum-exp soft maximum of `|tilt|` (the hard maximum is reported too).
#[derive(Debug, Clone, Copy)]
pub struct OscillationFeatures {
    pub period: f64,
    pub soft_max_tilt: f64,
    pub hard_max_tilt: f64,
}

/// `w1 (T - T*)² + w2 (soft_max - theta*)²` with cotangents on the tilt
/// samples, differentiable through the interpolated zero crossings and the
/// soft maximum.
pub fn loss_oscillation(
    times: &[f64],
    tilt: &[f64],
    target_period: f64,
    target_max_tilt: f64,
    weights: (f64, f64),
) -> Result<(Loss<Vec<f64>>, OscillationFeatures), ObjectiveError> {
    let crossings = upward_crossings(times, tilt);
    if crossings.len() < 2 {
        return Err(ObjectiveError::InsufficientOscillation { crossings: crossings.len() });
    }
    let m = crossings.len();
    let period = (crossings[m - 1].time - crossings[0].time) / (m - 1) as f64;

    // Soft maximum of |tilt| (shifted log-sum-exp).
    let tau = TILT_SOFTMAX_TEMPERATURE;
    let hard = tilt.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut z = 0.0;
    for &s in tilt {
        z += ((s.abs() - hard) / tau).exp();
    }
    let soft = hard + tau * z.ln();

    let (w1, w2) = weights;
    let dp = period - target_period;
    let dm = soft - target_max_tilt;
    let value = w1 * dp * dp + w2 * dm * dm;

    let mut cot = vec![0.0; tilt.len()];
    // Period depends only on the first and last crossing; the mean spacing
    // telescopes. d tau_c / d s_k = dt * (-s_{k+1}) / (s_{k+1}-s_k)^2 and
    // d tau_c / d s_{k+1} = dt * s_k / (s_{k+1}-s_k)^2.
    let dl_dperiod = 2.0 * w1 * dp;
    for (crossing, sign) in [(&crossings[m - 1], 1.0), (&crossings[0], -1.0)] {
        let k = crossing.index;
        let dt = times[k + 1] - times[k];
        let ds = tilt[k + 1] - tilt[k];
        let scale = sign * dl_dperiod / (m - 1) as f64;
        cot[k] += scale * dt * (-tilt[k + 1]) / (ds * ds);
        cot[k + 1] += scale * dt * tilt[k] / (ds * ds);
    }
    let dl_dsoft = 2.0 * w2 * dm;
    for (k, &s) in tilt.iter().enumerate() {
        let weight = ((s.abs() - hard) / tau).exp() / z;
        cot[k] += dl_dsoft * s.signum() * weight;
    }
    Ok((
        Loss { value, cotangent: cot },
        OscillationFeatures { period, soft_max_tilt: soft, hard_max_tilt: hard },
    ))
}

/// Marker pairs defining the base and tip segments of a bending body, and
/// the axis the signed angle is measured about.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BendMarkers {
    pub base: (usize, usize),
    pub tip: (usize, usize),
    pub axis: Vec3,
}

/// Signed bend angle between the tip and base segment directions.
pub fn bend_angle(positions: &[Pt3], markers: &BendMarkers) -> Result<f64, ObjectiveError> {
    let u = positions[markers.base.1] - positions[markers.base.0];
    let v = positions[markers.tip.1] - positions[markers.tip.0];
    if u.norm() < 1e-12 {
        return Err(ObjectiveError::DegenerateSegment { a: markers.base.0, b: markers.base.1 });
    }
    if v.norm() < 1e-12 {
        return Err(ObjectiveError::DegenerateSegment { a: markers.tip.0, b: markers.tip.1 });
    }
    let n = markers.axis.normalize();
    Ok(u.cross(&v).dot(&n).atan2(u.dot(&v)))
}

/// `(alpha - alpha*)²` with cotangents on the four marker positions.
pub fn loss_bend_angle(
    positions: &[Pt3],
    markers: &BendMarkers,
    target: f64,
) -> Result<Loss<Vec<(usize, Vec3)>>, ObjectiveError> {
    let u = positions[markers.base.1] - positions[markers.base.0];
    let v = positions[markers.tip.1] - positions[markers.tip.0];
    let alpha = bend_angle(positions, markers)?;
    let n = markers.axis.normalize();
    let a = u.dot(&v);
    let b = u.cross(&v).dot(&n);
    let denom = a * a + b * b;
    // alpha = atan2(b, a): d alpha = (a db - b da) / (a² + b²).
    let dalpha_du = (a * v.cross(&n) - b * v) / denom;
    let dalpha_dv = (a * n.cross(&u) - b * u) / denom;
    let scale = 2.0 * (alpha - target);
    let cotangent = vec![
        (markers.base.0, -scale * dalpha_du),
        (markers.base.1, scale * dalpha_du),
        (markers.tip.0, -scale * dalpha_dv),
        (markers.tip.1, scale * dalpha_dv),
    ];
    Ok(Loss { value: (alpha - target) * (alpha - target), cotangent })
}

/// Mean squared deviation of tracked particle positions from reference
/// tracks, resampled onto the simulated timestamps by linear interpolation
/// (clamped at the ends). Cotangents are per recorded time and tracked slot.
pub fn loss_pivot_tracks(
    times: &[f64],
    tracked: &[usize],
    positions: &[Vec<Pt3>],
    references: &[Track],
) -> Result<Loss<Vec<Vec<Vec3>>>, ObjectiveError> {
    let mut total = 0.0;
    let mut count = 0usize;
    let mut cot = vec![vec![Vec3::zeros(); tracked.len()]; times.len()];
    for reference in references {
        let slot = tracked
            .iter()
            .position(|&p| p == reference.particle)
            .ok_or(ObjectiveError::TrackNotFound { id: reference.particle })?;
        for (row, &t) in times.iter().enumerate() {
            let target = reference.sample_at(t);
            let d = positions[row][slot] - target;
            total += d.norm_squared();
            cot[row][slot] += 2.0 * d;
            count += 1;
        }
    }
    if count == 0 {
        return Err(ObjectiveError::Invalid("no reference samples".into()));
    }
    let inv = 1.0 / count as f64;
    for row in &mut cot {
        for c in row.iter_mut() {
            *c *= inv;
        }
    }
    Ok(Loss { value: total * inv, cotangent: cot })
}

/// Static pose targets at increasing fill levels: each level re-weights the
/// hollow fraction below a height threshold with water and scores the
/// resulting center of mass by tilt about `axis` and height.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequenceSpec {
    /// Capacity fractions in [0,1], sorted ascending.
    pub levels: Vec<f64>,
    pub target_tilts: Vec<f64>,
    pub target_heights: Vec<f64>,
    pub anchor: Pt3,
    pub axis: Vec3,
    pub gravity: Vec3,
    pub solid_density: f64,
    pub water_density: f64,
    pub tilt_weight: f64,
    pub height_weight: f64,
}

impl PoseSequenceSpec {
    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if self.levels.len() != self.target_tilts.len()
            || self.levels.len() != self.target_heights.len()
        {
            return Err(ObjectiveError::Invalid("pose sequence lengths differ".into()));
        }
        if self.levels.windows(2).any(|w| w[0] > w[1]) {
            return Err(ObjectiveError::Invalid("levels must be sorted".into()));
        }
        if self.levels.iter().any(|&l| !(0.0..=1.0).contains(&l)) {
            return Err(ObjectiveError::Invalid("levels must lie in [0,1]".into()));
        }
        Ok(())
    }

    /// Per-particle mass at fill level `level`: solid mass plus water in the
    /// hollow fraction below the threshold height.
    pub fn level_masses(&self, cloud: &ParticleCloud, indicator: &[f64], level: f64) -> Vec<f64> {
        let (lo, hi) = cloud.bounding_box();
        let z_th = lo.z + level * (hi.z - lo.z);
        (0..cloud.len())
            .map(|i| {
                let v = cloud.volumes[i];
                let r = indicator[i];
                let water = if cloud.rest_positions[i].z <= z_th { self.water_density } else { 0.0 };
                self.solid_density * v * r + water * v * (1.0 - r)
            })
            .collect()
    }
}

/// Sum over levels of squared tilt and height errors of the per-level
/// center of mass; the cotangent is with respect to the indicator.
pub fn loss_pose_sequence(
    cloud: &ParticleCloud,
    indicator: &[f64],
    spec: &PoseSequenceSpec,
) -> Result<Loss<Vec<f64>>, ObjectiveError> {
    spec.validate()?;
    let (lo, hi) = cloud.bounding_box();
    let mut value = 0.0;
    let mut cot = vec![0.0; cloud.len()];
    for (k, &level) in spec.levels.iter().enumerate() {
        let masses = spec.level_masses(cloud, indicator, level);
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return Err(ObjectiveError::Invalid("vanishing mass at a fill level".into()));
        }
        let mut first = Vec3::zeros();
        for (m, p) in masses.iter().zip(&cloud.rest_positions) {
            first += *m * p.coords;
        }
        let com = Pt3::from(first / total);
        let tilt = signed_tilt(&com, &spec.anchor, &spec.gravity, &spec.axis);
        let height = com.z;
        let dt_err = tilt - spec.target_tilts[k];
        let dh_err = height - spec.target_heights[k];
        value += spec.tilt_weight * dt_err * dt_err + spec.height_weight * dh_err * dh_err;

        // d tilt / d com via atan2 of the projected arm.
        let axis = spec.axis.normalize();
        let g = if spec.gravity.norm() > 0.0 { spec.gravity.normalize() } else { -Vec3::z() };
        let d = com - spec.anchor;
        let proj = |v: Vec3| v - axis * v.dot(&axis);
        let d_p = proj(d);
        let g_p = proj(g);
        let a = g_p.dot(&d_p);
        let b = d_p.dot(&axis.cross(&g_p));
        let denom = a * a + b * b;
        let dtilt_dcom = (a * proj(axis.cross(&g_p)) - b * proj(g_p)) / denom;
        let dl_dcom = 2.0 * spec.tilt_weight * dt_err * dtilt_dcom
            + 2.0 * spec.height_weight * dh_err * Vec3::z();

        // Chain into the indicator: dm_i/dr_i depends on whether the
        // particle is below the water line.
        let z_th = lo.z + level * (hi.z - lo.z);
        for i in 0..cloud.len() {
            let dcom_dm = (cloud.rest_positions[i] - com) / total;
            let water = if cloud.rest_positions[i].z <= z_th { spec.water_density } else { 0.0 };
            let dm_dr = cloud.volumes[i] * (spec.solid_density - water);
            cot[i] += dl_dcom.dot(&dcom_dm) * dm_dr;
        }
    }
    let _ = hi;
    Ok(Loss { value, cotangent: cot })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::testutil::grid_cloud;
    use crate::math::Mat3;
    use approx::assert_relative_eq;

    #[test]
    fn com_loss_examples() {
        let props = RigidProps { mass: 1.0, com: Pt3::new(0.1, 0.0, 0.0), inertia: Mat3::zeros() };
        let at_target = loss_com(&props, &Pt3::new(0.1, 0.0, 0.0));
        assert_eq!(at_target.value, 0.0);
        let off = loss_com(&props, &Pt3::origin());
        assert_relative_eq!(off.value, 0.01, epsilon = 1e-15);
        // FD check on the com.
        let step = 1e-7;
        for a in 0..3 {
            let mut plus = props;
            plus.com[a] += step;
            let mut minus = props;
            minus.com[a] -= step;
            let fd = (loss_com(&plus, &Pt3::origin()).value - loss_com(&minus, &Pt3::origin()).value)
                / (2.0 * step);
            assert!(crate::math::rel_err(off.cotangent[a], fd, 1e-12) <= 1e-7);
        }
    }

    /// 4 Hz sine sampled at `rate`, phased so a sample lands on the peak.
    fn synthetic_tilt(rate: f64, seconds: f64) -> (Vec<f64>, Vec<f64>) {
        let n = (seconds * rate) as usize;
        let times: Vec<f64> = (0..n).map(|k| k as f64 / rate).collect();
        let tilt: Vec<f64> = times
            .iter()
            .map(|t| (2.0 * std::f64::consts::PI * 4.0 * (t + 0.0025)).sin())
            .collect();
        (times, tilt)
    }

    #[test]
    fn oscillation_extraction_matches_synthetic_signal() {
        let (times, tilt) = synthetic_tilt(200.0, 1.0);
        let (period, max_tilt) = extract_oscillation(&times, &tilt).unwrap();
        assert!((period - 0.25).abs() < 1e-3, "period {period}");
        assert!((max_tilt - 1.0).abs() < 1e-3, "max tilt {max_tilt}");
    }

    #[test]
    fn constant_signal_is_insufficient() {
        let times: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        let tilt = vec![0.3; 100];
        assert!(matches!(
            extract_oscillation(&times, &tilt),
            Err(ObjectiveError::InsufficientOscillation { .. })
        ));
    }

    #[test]
    fn extraction_is_stable_under_resampling() {
        let (t1, s1) = synthetic_tilt(200.0, 1.0);
        let (t2, s2) = synthetic_tilt(400.0, 1.0);
        let (p1, _) = extract_oscillation(&t1, &s1).unwrap();
        let (p2, _) = extract_oscillation(&t2, &s2).unwrap();
        assert!((p1 - p2).abs() / p2 < 1e-3, "{p1} vs {p2}");
    }

    #[test]
    fn oscillation_loss_zero_on_own_target() {
        let (times, tilt) = synthetic_tilt(200.0, 1.0);
        let (_, feats) = loss_oscillation(&times, &tilt, 0.25, 1.0, (1.0, 1.0)).unwrap();
        let (loss, _) =
            loss_oscillation(&times, &tilt, feats.period, feats.soft_max_tilt, (1.0, 1.0)).unwrap();
        assert!(loss.value < 1e-20, "value {}", loss.value);
    }

    #[test]
    fn oscillation_loss_magnitude() {
        // Period 0.26 against target 0.25 with only the period term active.
        let n = 400;
        let times: Vec<f64> = (0..n).map(|k| k as f64 / 400.0).collect();
        let tilt: Vec<f64> = times
            .iter()
            .map(|t| (2.0 * std::f64::consts::PI * t / 0.26).sin())
            .collect();
        let (loss, feats) = loss_oscillation(&times, &tilt, 0.25, 0.0, (1.0, 0.0)).unwrap();
        assert_relative_eq!(feats.period, 0.26, epsilon = 1e-5);
        assert_relative_eq!(loss.value, 1e-4, max_relative = 1e-2);
    }

    #[test]
    fn oscillation_cotangent_matches_finite_differences() {
        let (times, mut tilt) = synthetic_tilt(200.0, 1.0);
        let (loss, _) = loss_oscillation(&times, &tilt, 0.24, 0.9, (1.0, 0.7)).unwrap();
        // Probe samples adjacent to crossings and near the peak.
        for k in [12usize, 13, 50, 62, 63, 100, 137, 188] {
            let step = 1e-6;
            let saved = tilt[k];
            tilt[k] = saved + step;
            let (lp, _) = loss_oscillation(&times, &tilt, 0.24, 0.9, (1.0, 0.7)).unwrap();
            tilt[k] = saved - step;
            let (lm, _) = loss_oscillation(&times, &tilt, 0.24, 0.9, (1.0, 0.7)).unwrap();
            tilt[k] = saved;
            let fd = (lp.value - lm.value) / (2.0 * step);
            let analytic = loss.cotangent[k];
            assert!(
                crate::math::rel_err(analytic, fd, 1e-9) <= 1e-3,
                "sample {k}: analytic {analytic} vs fd {fd}"
            );
        }
    }

    #[test]
    fn bend_angle_examples() {
        let markers = BendMarkers { base: (0, 1), tip: (2, 3), axis: Vec3::y() };
        let straight = vec![
            Pt3::origin(),
            Pt3::new(0.01, 0.0, 0.0),
            Pt3::new(0.07, 0.0, 0.0),
            Pt3::new(0.08, 0.0, 0.0),
        ];
        let loss = loss_bend_angle(&straight, &markers, 0.0).unwrap();
        assert_eq!(loss.value, 0.0);

        // Tip segment rotated 30 degrees about y.
        let ang = std::f64::consts::PI / 6.0;
        let dir = Vec3::new(ang.cos(), 0.0, -ang.sin());
        let bent = vec![
            Pt3::origin(),
            Pt3::new(0.01, 0.0, 0.0),
            Pt3::new(0.07, 0.0, 0.0),
            Pt3::from(Vec3::new(0.07, 0.0, 0.0) + 0.01 * dir),
        ];
        let loss = loss_bend_angle(&bent, &markers, 0.0).unwrap();
        assert_relative_eq!(loss.value, ang * ang, epsilon = 1e-12);
    }

    #[test]
    fn bend_angle_cotangent_matches_finite_differences() {
        let markers = BendMarkers { base: (0, 1), tip: (2, 3), axis: Vec3::y() };
        let mut positions = vec![
            Pt3::new(0.0, 0.0, 0.001),
            Pt3::new(0.011, 0.0, 0.0),
            Pt3::new(0.07, 0.001, 0.002),
            Pt3::new(0.079, 0.0, -0.003),
        ];
        let loss = loss_bend_angle(&positions, &markers, 0.1).unwrap();
        for (idx, cot) in &loss.cotangent {
            for a in 0..3 {
                let step = 1e-8;
                let saved = positions[*idx][a];
                positions[*idx][a] = saved + step;
                let lp = loss_bend_angle(&positions, &markers, 0.1).unwrap().value;
                positions[*idx][a] = saved - step;
                let lm = loss_bend_angle(&positions, &markers, 0.1).unwrap().value;
                positions[*idx][a] = saved;
                let fd = (lp - lm) / (2.0 * step);
                assert!(
                    crate::math::rel_err(cot[a], fd, 1e-10) <= 1e-6,
                    "marker {idx} axis {a}: {} vs {fd}",
                    cot[a]
                );
            }
        }
    }

    #[test]
    fn degenerate_segment_is_an_error() {
        let markers = BendMarkers { base: (0, 0), tip: (1, 2), axis: Vec3::y() };
        let positions = vec![Pt3::origin(), Pt3::new(0.01, 0.0, 0.0), Pt3::new(0.02, 0.0, 0.0)];
        assert!(matches!(
            loss_bend_angle(&positions, &markers, 0.0),
            Err(ObjectiveError::DegenerateSegment { .. })
        ));
    }

    #[test]
    fn pivot_tracks_examples() {
        let times: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        let positions: Vec<Vec<Pt3>> = times
            .iter()
            .map(|t| vec![Pt3::new(*t, 0.0, 0.0), Pt3::new(0.0, *t, 0.0)])
            .collect();
        let identical = vec![
            Track { particle: 7, times: times.clone(), points: positions.iter().map(|r| r[0]).collect() },
            Track { particle: 9, times: times.clone(), points: positions.iter().map(|r| r[1]).collect() },
        ];
        let loss = loss_pivot_tracks(&times, &[7, 9], &positions, &identical).unwrap();
        assert_eq!(loss.value, 0.0);

        // Uniform offset of 0.01 on a single 100-sample track.
        let offset = vec![Track {
            particle: 7,
            times: times.clone(),
            points: positions.iter().map(|r| r[0] + Vec3::new(0.01, 0.0, 0.0)).collect(),
        }];
        let loss = loss_pivot_tracks(&times, &[7, 9], &positions, &offset).unwrap();
        assert_relative_eq!(loss.value, 1e-4, epsilon = 1e-15);

        // Unknown particle id.
        let missing = vec![Track { particle: 99, times: times.clone(), points: Vec::new() }];
        assert!(matches!(
            loss_pivot_tracks(&times, &[7, 9], &positions, &missing),
            Err(ObjectiveError::TrackNotFound { id: 99 })
        ));
    }

    #[test]
    fn pivot_tracks_cotangent_matches_finite_differences() {
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 0.05).collect();
        let mut positions: Vec<Vec<Pt3>> = times
            .iter()
            .map(|t| vec![Pt3::new(t.sin(), 0.1 * t, 0.0)])
            .collect();
        let reference = vec![Track {
            particle: 3,
            times: times.clone(),
            points: times.iter().map(|t| Pt3::new(t.cos(), 0.0, 0.05)).collect(),
        }];
        let loss = loss_pivot_tracks(&times, &[3], &positions, &reference).unwrap();
        for row in [0usize, 7, 19] {
            for a in 0..3 {
                // The loss is exactly quadratic in the positions, so the
                // central difference is exact; a larger step beats roundoff.
                let step = 1e-5;
                let saved = positions[row][0][a];
                positions[row][0][a] = saved + step;
                let lp = loss_pivot_tracks(&times, &[3], &positions, &reference).unwrap().value;
                positions[row][0][a] = saved - step;
                let lm = loss_pivot_tracks(&times, &[3], &positions, &reference).unwrap().value;
                positions[row][0][a] = saved;
                let fd = (lp - lm) / (2.0 * step);
                assert!(
                    crate::math::rel_err(loss.cotangent[row][0][a], fd, 1e-12) <= 1e-8,
                    "row {row} axis {a}"
                );
            }
        }
    }

    fn pose_spec(levels: Vec<f64>, tilts: Vec<f64>, heights: Vec<f64>) -> PoseSequenceSpec {
        PoseSequenceSpec {
            levels,
            target_tilts: tilts,
            target_heights: heights,
            // Above the cloud so the hang angle stays far from the
            // atan2 branch cut at pi.
            anchor: Pt3::new(0.1, 0.1, 0.35),
            axis: Vec3::y(),
            gravity: Vec3::new(0.0, 0.0, -9.81),
            solid_density: 1000.0,
            water_density: 997.0,
            tilt_weight: 1.0,
            height_weight: 1.0,
        }
    }

    fn level_com(
        cloud: &ParticleCloud,
        indicator: &[f64],
        spec: &PoseSequenceSpec,
        level: f64,
    ) -> Pt3 {
        let masses = spec.level_masses(cloud, indicator, level);
        let total: f64 = masses.iter().sum();
        let mut first = Vec3::zeros();
        for (m, p) in masses.iter().zip(&cloud.rest_positions) {
            first += *m * p.coords;
        }
        Pt3::from(first / total)
    }

    #[test]
    fn pose_sequence_zero_on_own_targets() {
        let cloud = grid_cloud(3, 0.1, 0.15);
        let indicator: Vec<f64> =
            (0..cloud.len()).map(|i| 0.2 + 0.7 * (i % 3) as f64 / 2.0).collect();
        let probe = pose_spec(vec![0.0, 0.5, 1.0], vec![0.0; 3], vec![0.0; 3]);
        let mut tilts = Vec::new();
        let mut heights = Vec::new();
        for &level in &probe.levels {
            let com = level_com(&cloud, &indicator, &probe, level);
            tilts.push(signed_tilt(&com, &probe.anchor, &probe.gravity, &probe.axis));
            heights.push(com.z);
        }
        let spec = pose_spec(vec![0.0, 0.5, 1.0], tilts, heights);
        let loss = loss_pose_sequence(&cloud, &indicator, &spec).unwrap();
        assert!(loss.value < 1e-24);
    }

    #[test]
    fn pose_sequence_single_level_offset() {
        // One level off by 0.1 rad under unit weights contributes 0.01.
        let cloud = grid_cloud(3, 0.1, 0.15);
        let indicator = vec![0.8; cloud.len()];
        let probe = pose_spec(vec![0.5], vec![0.0], vec![0.0]);
        let com = level_com(&cloud, &indicator, &probe, 0.5);
        let tilt = signed_tilt(&com, &probe.anchor, &probe.gravity, &probe.axis);
        let spec = pose_spec(vec![0.5], vec![tilt + 0.1], vec![com.z]);
        let loss = loss_pose_sequence(&cloud, &indicator, &spec).unwrap();
        assert_relative_eq!(loss.value, 0.01, epsilon = 1e-12);
    }

    #[test]
    fn pose_sequence_cotangent_matches_finite_differences() {
        let cloud = grid_cloud(3, 0.1, 0.15);
        let mut indicator: Vec<f64> =
            (0..cloud.len()).map(|i| 0.3 + 0.5 * ((i * 5 % 7) as f64 / 6.0)).collect();
        let spec = pose_spec(vec![0.2, 0.7], vec![0.1, -0.05], vec![0.12, 0.1]);
        let loss = loss_pose_sequence(&cloud, &indicator, &spec).unwrap();
        for i in (0..cloud.len()).step_by(5) {
            let step = 1e-6;
            let saved = indicator[i];
            indicator[i] = saved + step;
            let lp = loss_pose_sequence(&cloud, &indicator, &spec).unwrap().value;
            indicator[i] = saved - step;
            let lm = loss_pose_sequence(&cloud, &indicator, &spec).unwrap().value;
            indicator[i] = saved;
            let fd = (lp - lm) / (2.0 * step);
            assert!(
                crate::math::rel_err(loss.cotangent[i], fd, 1e-12) <= 1e-5,
                "particle {i}: {} vs {fd}",
                loss.cotangent[i]
            );
        }
    }
}
