//! Sorting-based block assignment, kept only as a benchmark and test
//! reference for the integer-based build. Instead of rounding coordinates to
//! strip indices, points are recursively sorted axis by axis and split at the
//! strip boundaries, which costs O(N log N) comparisons.

#![doc(hidden)]

use std::time::Instant;

use crate::error::Result;
use crate::partition::{checked_block_count, q_for, BoundingBox};

/// Bucket layout produced by the sorting-based procedure; matches the
/// bucket contents of [`crate::partition::BlockGrid::build`] for points away
/// from exact strip boundaries.
pub fn sorted_block_assignment(
    dim: usize,
    coords: &[f64],
    box_: &BoundingBox,
    delta: f64,
) -> Result<Vec<Vec<u32>>> {
    let q = q_for(box_.l_box, delta);
    let total = checked_block_count(q, dim)?;
    let mut buckets = vec![Vec::new(); total];
    let n = coords.len() / dim;
    let mut idx: Vec<u32> = (0..n as u32).collect();
    split_axis(dim, coords, box_, delta, q, 0, 0, &mut idx, &mut buckets);
    Ok(buckets)
}

fn split_axis(
    dim: usize,
    coords: &[f64],
    box_: &BoundingBox,
    delta: f64,
    q: usize,
    axis: usize,
    block_base: usize,
    idx: &mut [u32],
    buckets: &mut [Vec<u32>],
) {
    if idx.is_empty() {
        return;
    }
    if axis == dim {
        buckets[block_base].extend_from_slice(idx);
        return;
    }
    idx.sort_unstable_by(|&a, &b| {
        let ca = coords[a as usize * dim + axis];
        let cb = coords[b as usize * dim + axis];
        ca.total_cmp(&cb)
    });
    let min = box_.mins[axis];
    let mut start = 0usize;
    for strip in 1..=q {
        let end = if strip == q {
            idx.len()
        } else {
            let boundary = min + strip as f64 * delta;
            let mut e = start;
            while e < idx.len() && coords[idx[e] as usize * dim + axis] <= boundary {
                e += 1;
            }
            e
        };
        if end > start {
            split_axis(
                dim,
                coords,
                box_,
                delta,
                q,
                axis + 1,
                block_base * q + (strip - 1),
                &mut idx[start..end],
                buckets,
            );
        }
        start = end;
        if start == idx.len() {
            break;
        }
    }
}

/// Wall time of the integer-based and sorting-based build phases on the same
/// input, in seconds, taking the best of `repeats` runs of each.
pub fn time_builds(
    dim: usize,
    coords: &[f64],
    box_: &BoundingBox,
    delta: f64,
    repeats: usize,
) -> Result<(f64, f64)> {
    let repeats = repeats.max(1);
    let mut t_ips = f64::INFINITY;
    let mut t_sps = f64::INFINITY;
    for _ in 0..repeats {
        let start = Instant::now();
        let grid = crate::partition::BlockGrid::build(dim, coords, box_.clone(), delta)?;
        t_ips = t_ips.min(start.elapsed().as_secs_f64());
        std::hint::black_box(grid.block_count());

        let start = Instant::now();
        let buckets = sorted_block_assignment(dim, coords, box_, delta)?;
        t_sps = t_sps.min(start.elapsed().as_secs_f64());
        std::hint::black_box(buckets.len());
    }
    Ok((t_ips, t_sps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::BlockGrid;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn matches_integer_based_assignment() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for dim in [1usize, 2, 3] {
            let coords: Vec<f64> = (0..240 * dim).map(|_| rng.gen_range(0.0..1.0)).collect();
            let box_ = BoundingBox::from_points(dim, &coords).unwrap();
            let delta = box_.l_box / 6.0;
            let grid = BlockGrid::build(dim, &coords, box_.clone(), delta).unwrap();
            let sorted = sorted_block_assignment(dim, &coords, &box_, delta).unwrap();
            assert_eq!(sorted.len(), grid.block_count());
            for k in 1..=grid.block_count() {
                let mut a = grid.bucket(k).to_vec();
                let mut b = sorted[k - 1].clone();
                a.sort_unstable();
                b.sort_unstable();
                assert_eq!(a, b, "dim {dim} block {k}");
            }
        }
    }
}
