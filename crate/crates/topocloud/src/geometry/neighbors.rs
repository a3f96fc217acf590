//! Neighbor search over a uniform hash grid.
//!
//! Each particle gathers its own sorted list independently, so the result is
//! identical for any thread count.

use super::ParticleCloud;
use rayon::prelude::*;
use std::collections::HashMap;

/// Rebuilds `neighbor_lists` so each list contains exactly the indices `j`
/// with `|X_j - X_i| < 2h`, excluding `i` itself, in ascending order.
pub fn build_neighbors(cloud: &mut ParticleCloud) {
    let radius = 2.0 * cloud.kernel_radius;
    let positions = &cloud.rest_positions;
    let n = positions.len();
    if n == 0 {
        cloud.neighbor_lists.clear();
        return;
    }
    debug_assert!(positions.iter().all(|p| p.coords.iter().all(|c| c.is_finite())));

    let cell_of = |p: &crate::math::Pt3| -> (i64, i64, i64) {
        (
            (p.x / radius).floor() as i64,
            (p.y / radius).floor() as i64,
            (p.z / radius).floor() as i64,
        )
    };
    let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in positions.iter().enumerate() {
        cells.entry(cell_of(p)).or_default().push(i);
    }

    cloud.neighbor_lists = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = positions[i];
            let (cx, cy, cz) = cell_of(&p);
            let mut list = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(bucket) = cells.get(&(cx + dx, cy + dy, cz + dz)) {
                            for &j in bucket {
                                if j != i && (positions[j] - p).norm() < radius {
                                    list.push(j);
                                }
                            }
                        }
                    }
                }
            }
            list.sort_unstable();
            list
        })
        .collect();
}

#[cfg(test)]
mod tests {
    use super::super::testutil::grid_cloud;
    use super::*;
    use crate::math::Pt3;
    use proptest::prelude::*;

    /// Brute-force distance enumeration, the oracle for the hash grid.
    fn brute_force(positions: &[Pt3], radius: f64) -> Vec<Vec<usize>> {
        (0..positions.len())
            .map(|i| {
                (0..positions.len())
                    .filter(|&j| j != i && (positions[j] - positions[i]).norm() < radius)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn out_of_support_pair_has_empty_lists() {
        let h = 0.1;
        let cloud = ParticleCloud::from_points(
            vec![Pt3::origin(), Pt3::new(3.0 * h, 0.0, 0.0)],
            1e-3,
            h,
        );
        assert!(cloud.neighbor_lists[0].is_empty());
        assert!(cloud.neighbor_lists[1].is_empty());
        assert_eq!(cloud.isolated_count(), 2);
    }

    #[test]
    fn interior_grid_particle_count_matches_brute_force() {
        // Spacing d, h = 1.5 d, so the neighbor radius 2h = 3d. Brute-force
        // enumeration of lattice offsets with |delta| strictly below 3d gives
        // 92 (squared norms 1,2,3,4,5,6,8 with multiplicities
        // 6+12+8+6+24+24+12); unit spacing keeps the boundary exact.
        let d = 1.0;
        let cloud = grid_cloud(7, d, 1.5 * d);
        let oracle = brute_force(&cloud.rest_positions, 3.0 * d);
        let center = cloud
            .rest_positions
            .iter()
            .position(|p| (p - Pt3::new(3.0 * d, 3.0 * d, 3.0 * d)).norm() < 1e-12)
            .unwrap();
        assert_eq!(oracle[center].len(), 92);
        assert_eq!(cloud.neighbor_lists[center].len(), 92);
        assert_eq!(cloud.neighbor_lists, oracle);
    }

    #[test]
    fn self_never_in_own_list() {
        let cloud = grid_cloud(4, 0.05, 0.075);
        for (i, list) in cloud.neighbor_lists.iter().enumerate() {
            assert!(!list.contains(&i));
        }
    }

    proptest! {
        #[test]
        fn neighbor_lists_symmetric_and_match_oracle(
            seed in 0u64..1000,
            n in 2usize..40,
            h in 0.05f64..0.3,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let positions: Vec<Pt3> = (0..n)
                .map(|_| Pt3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
                .collect();
            let cloud = ParticleCloud::from_points(positions.clone(), 1e-3, h);
            let oracle = brute_force(&positions, 2.0 * h);
            prop_assert_eq!(&cloud.neighbor_lists, &oracle);
            for (i, list) in cloud.neighbor_lists.iter().enumerate() {
                for &j in list {
                    prop_assert!(cloud.neighbor_lists[j].contains(&i));
                    prop_assert!(j != i);
                }
            }
        }
    }
}
