//! Integer-based partitioning structure (I-PS).
//!
//! Points are stored into `q^M` uniform blocks of edge `delta` by rounding
//! scaled coordinates to integer strip indices, one computation per point.
//! Variable-radius ball queries then visit only the block of the query centre
//! plus a shell of neighboring blocks wide enough to enclose the ball, and
//! filter candidates by the exact Euclidean distance.

pub mod sps;

use crate::error::{Error, Result};

/// Axis-aligned bounding box of a point cloud.
///
/// `l_box` is the global span: the largest coordinate over all points and
/// axes minus the smallest. It is the reference edge for both the block
/// decomposition and the covering radius.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub l_box: f64,
}

impl BoundingBox {
    /// Computes the bounding box of `n = coords.len() / dim` points.
    pub fn from_points(dim: usize, coords: &[f64]) -> Result<BoundingBox> {
        if dim == 0 || coords.len() < dim || coords.len() % dim != 0 {
            return Err(Error::InvalidInput(
                "bounding box needs at least one complete point".into(),
            ));
        }
        let mut mins = vec![f64::INFINITY; dim];
        let mut maxs = vec![f64::NEG_INFINITY; dim];
        for p in coords.chunks_exact(dim) {
            for (m, &c) in p.iter().enumerate() {
                if !c.is_finite() {
                    return Err(Error::InvalidInput("non-finite coordinate".into()));
                }
                mins[m] = mins[m].min(c);
                maxs[m] = maxs[m].max(c);
            }
        }
        let hi = maxs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = mins.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(BoundingBox { mins, maxs, l_box: hi - lo })
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    /// True when all points coincide (`l_box = 0`); the grid then collapses
    /// to a single block.
    pub fn is_degenerate(&self) -> bool {
        self.l_box == 0.0
    }

    /// Per-axis extent of the data hyperrectangle.
    pub fn extent(&self, axis: usize) -> f64 {
        self.maxs[axis] - self.mins[axis]
    }

    /// Hypervolume of the data hyperrectangle (product of extents).
    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|m| self.extent(m)).product()
    }

    /// Length of the box diagonal bound, `l_box * sqrt(M)`.
    pub fn diagonal(&self) -> f64 {
        self.l_box * (self.dim() as f64).sqrt()
    }

    fn contains(&self, point: &[f64]) -> bool {
        // The upper bound must tolerate `mins + l_box` rounding below the true
        // axis maximum, so take the laxer of the two descriptions.
        point.iter().enumerate().all(|(m, &c)| {
            c >= self.mins[m] && c <= self.maxs[m].max(self.mins[m] + self.l_box)
        })
    }
}

/// 1-based strip index of a coordinate: `ceil((c - min) / delta)` clamped to
/// `[1, q]`. The clamps absorb coordinates sitting exactly on the box minimum
/// (where the ceiling is 0) and floating-point spill past the maximum.
#[inline]
pub fn strip_index(coordinate: f64, min: f64, delta: f64, q: usize) -> usize {
    debug_assert!(delta > 0.0);
    let k = ((coordinate - min) / delta).ceil();
    if k < 1.0 {
        1
    } else if k >= q as f64 {
        q
    } else {
        k as usize
    }
}

/// Flattens 1-based per-axis strip indices into the 1-based block index
/// `k = sum_m (k_m - 1) q^(M-m) + k_M`, the first axis most significant.
pub fn block_index(strips: &[usize], q: usize) -> Result<usize> {
    let mut k = 0usize;
    for &s in strips {
        if s < 1 || s > q {
            return Err(Error::InvalidInput(format!(
                "strip index {s} outside 1..={q}"
            )));
        }
        k = k * q + (s - 1);
    }
    Ok(k + 1)
}

/// Uniform block decomposition of a bounding box with per-block point lists.
#[derive(Debug, Clone)]
pub struct BlockGrid {
    pub box_: BoundingBox,
    /// Reference block edge (the minimal covering radius in the fit pipeline).
    pub delta: f64,
    /// Blocks per axis, `ceil(l_box / delta)`, at least 1.
    pub q: usize,
    dim: usize,
    buckets: Vec<Vec<u32>>,
    coords: Vec<f64>,
    assignments: usize,
}

impl BlockGrid {
    /// Stores every point into the bucket of its block. One strip/block
    /// computation per point.
    pub fn build(dim: usize, coords: &[f64], box_: BoundingBox, delta: f64) -> Result<BlockGrid> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidInput(format!("block edge must be positive, got {delta}")));
        }
        if box_.dim() != dim {
            return Err(Error::InvalidInput("box dimension does not match points".into()));
        }
        let q = q_for(box_.l_box, delta);
        let total = checked_block_count(q, dim)?;
        let mut grid = BlockGrid {
            box_,
            delta,
            q,
            dim,
            buckets: vec![Vec::new(); total],
            coords: coords.to_vec(),
            assignments: 0,
        };
        let mut strips = vec![0usize; dim];
        for (i, p) in coords.chunks_exact(dim).enumerate() {
            if !grid.box_.contains(p) {
                return Err(Error::PointOutsideBox { index: i });
            }
            for m in 0..dim {
                strips[m] = strip_index(p[m], grid.box_.mins[m], delta, q);
            }
            let k = block_index(&strips, q).expect("strips in range by construction");
            grid.buckets[k - 1].push(i as u32);
            grid.assignments += 1;
        }
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// The stored coordinates, row-major.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn block_count(&self) -> usize {
        self.buckets.len()
    }

    /// Point indices stored in (1-based) block `k`.
    pub fn bucket(&self, k: usize) -> &[u32] {
        &self.buckets[k - 1]
    }

    /// Number of strip/block assignments performed by `build`; equals the
    /// number of points stored.
    pub fn assignment_count(&self) -> usize {
        self.assignments
    }

    /// 1-based block index of a location (clamped into the grid).
    pub fn block_of(&self, point: &[f64]) -> usize {
        let strips: Vec<usize> = (0..self.dim)
            .map(|m| strip_index(point[m], self.box_.mins[m], self.delta, self.q))
            .collect();
        block_index(&strips, self.q).expect("clamped strips are in range")
    }

    /// Visits every block whose strip indices differ from the centre's by at
    /// most `half_width` per axis.
    fn for_each_shell_block(&self, centre: &[f64], half_width: usize, mut f: impl FnMut(&[u32])) {
        let dim = self.dim;
        let mut lo = vec![0usize; dim];
        let mut hi = vec![0usize; dim];
        for m in 0..dim {
            let k = strip_index(centre[m], self.box_.mins[m], self.delta, self.q);
            lo[m] = k.saturating_sub(half_width).max(1);
            hi[m] = (k + half_width).min(self.q);
        }
        let mut cur = lo.clone();
        loop {
            let k = block_index(&cur, self.q).expect("in range");
            f(&self.buckets[k - 1]);
            // odometer increment over the strip window
            let mut axis = dim;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                if cur[axis] < hi[axis] {
                    cur[axis] += 1;
                    for (c, &l) in cur.iter_mut().zip(lo.iter()).skip(axis + 1) {
                        *c = l;
                    }
                    break;
                }
            }
        }
    }

    /// Indices of all stored points within Euclidean distance `radius` of
    /// `centre`. Candidates come from the centre's block and its enclosing
    /// neighbor shell (half-width `ceil(radius / delta)` strips per axis),
    /// then pass the exact distance test.
    pub fn points_within(&self, centre: &[f64], radius: f64) -> Vec<u32> {
        debug_assert!(radius > 0.0);
        debug_assert_eq!(centre.len(), self.dim);
        let half_width = (radius / self.delta).ceil() as usize;
        let r2 = radius * radius;
        let mut out = Vec::new();
        self.for_each_shell_block(centre, half_width, |bucket| {
            for &i in bucket {
                let p = self.point(i as usize);
                let mut d2 = 0.0;
                for (a, b) in p.iter().zip(centre) {
                    let d = a - b;
                    d2 += d * d;
                }
                if d2 <= r2 {
                    out.push(i);
                }
            }
        });
        out.sort_unstable();
        out
    }

    /// Count-only variant of [`points_within`].
    pub fn count_within(&self, centre: &[f64], radius: f64) -> usize {
        let half_width = (radius / self.delta).ceil() as usize;
        let r2 = radius * radius;
        let mut count = 0usize;
        self.for_each_shell_block(centre, half_width, |bucket| {
            for &i in bucket {
                let p = self.point(i as usize);
                let mut d2 = 0.0;
                for (a, b) in p.iter().zip(centre) {
                    let d = a - b;
                    d2 += d * d;
                }
                if d2 <= r2 {
                    count += 1;
                }
            }
        });
        count
    }
}

pub(crate) fn q_for(l_box: f64, delta: f64) -> usize {
    let q = (l_box / delta).ceil();
    if q < 1.0 {
        1
    } else {
        q as usize
    }
}

pub(crate) fn checked_block_count(q: usize, dim: usize) -> Result<usize> {
    const MAX_BLOCKS: usize = 1 << 28;
    let mut total = 1usize;
    for _ in 0..dim {
        total = total
            .checked_mul(q)
            .filter(|t| *t <= MAX_BLOCKS)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "block grid {q}^{dim} is too large; increase the block edge"
                ))
            })?;
    }
    Ok(total)
}
