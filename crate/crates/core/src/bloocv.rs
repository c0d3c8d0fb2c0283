//! Per-patch bivariate leave-one-out cross validation.
//!
//! Every patch gets its own radius and shape parameter: the radius search
//! interval starts at the smallest radius holding the expected number of
//! points for a uniform distribution, the error of each (radius, shape)
//! candidate is estimated from one factorization via the coefficient /
//! inverse-diagonal quotient, and the couple with the smallest maximum error
//! wins.

use rayon::prelude::*;

use crate::data::PointSet;
use crate::error::{fmt_point, Error, Result};
use crate::kernels::{Kernel, KernelFamily};
use crate::partition::{BlockGrid, BoundingBox};
use crate::pu::{gather, make_covering, solve_local, Domain, FitSummary, PuModel, Subdomain};

/// Discrete search settings for the per-patch couple selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    /// Number of radius candidates P.
    pub radius_count: usize,
    /// Upper endpoint factor h of the radius interval.
    pub radius_growth: f64,
    /// Relative step t of the radius growth loop, in (0,1).
    pub growth_step: f64,
    /// Shape parameter candidates, strictly increasing.
    pub epsilons: Vec<f64>,
}

impl SearchGrid {
    /// Grid-search settings used throughout the experiments: six radii per
    /// interval with doubling endpoint, growth step one half, and thirty
    /// log-spaced shape parameters in `[0.1, 10]`.
    pub fn standard() -> SearchGrid {
        SearchGrid {
            radius_count: 6,
            radius_growth: 2.0,
            growth_step: 0.5,
            epsilons: log_spaced(0.1, 10.0, 30),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius_count == 0 {
            return Err(Error::Config("radius count must be at least 1".into()));
        }
        let h = self.radius_growth;
        // h = 1 collapses the interval to a single radius, which only makes
        // sense with one candidate (the fixed-radius mode).
        let h_ok = h.is_finite() && (h > 1.0 || (h == 1.0 && self.radius_count == 1));
        if !h_ok {
            return Err(Error::Config(format!(
                "radius growth must exceed 1 (or equal 1 with a single radius), got {h}"
            )));
        }
        if !(self.growth_step > 0.0 && self.growth_step < 1.0) {
            return Err(Error::Config(format!(
                "growth step must lie in (0,1), got {}",
                self.growth_step
            )));
        }
        if self.epsilons.is_empty() {
            return Err(Error::Config("need at least one shape parameter".into()));
        }
        for w in self.epsilons.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Config("shape parameters must be strictly increasing".into()));
            }
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::Config("shape parameters must be positive and finite".into()));
        }
        Ok(())
    }

    /// True when the search degenerates to the fixed covering radius
    /// (single radius candidate, collapsed interval). The growth loop is
    /// skipped in that mode so the radius equals the base covering radius.
    pub fn pins_base_radius(&self) -> bool {
        self.radius_count == 1 && self.radius_growth == 1.0
    }

    /// The P radius candidates, equispaced over `[delta_1, h * delta_1]`
    /// including both endpoints.
    pub fn radii(&self, delta_1: f64) -> Vec<f64> {
        let p = self.radius_count;
        if p == 1 {
            return vec![delta_1];
        }
        (0..p)
            .map(|i| delta_1 * (1.0 + (self.radius_growth - 1.0) * i as f64 / (p - 1) as f64))
            .collect()
    }
}

/// `count` log-spaced values over `[lo, hi]`, endpoints exact.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let ratio = hi / lo;
    (0..count)
        .map(|i| match i {
            0 => lo,
            i if i == count - 1 => hi,
            i => lo * ratio.powf(i as f64 / (count - 1) as f64),
        })
        .collect()
}

/// `count` linearly spaced values over `[lo, hi]`, endpoints exact.
pub fn linear_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(hi > lo && count >= 2);
    (0..count)
        .map(|i| match i {
            0 => lo,
            i if i == count - 1 => hi,
            i => lo + (hi - lo) * i as f64 / (count - 1) as f64,
        })
        .collect()
}

/// Leave-one-out error vector from one solved system: `e_i = c_i / (A⁻¹)ᵢᵢ`.
pub fn loocv_errors(coefficients: &[f64], inv_diagonal: &[f64]) -> Result<Vec<f64>> {
    if coefficients.len() != inv_diagonal.len() || coefficients.is_empty() {
        return Err(Error::InvalidInput(format!(
            "coefficient and inverse-diagonal lengths differ: {} vs {}",
            coefficients.len(),
            inv_diagonal.len()
        )));
    }
    coefficients
        .iter()
        .zip(inv_diagonal)
        .map(|(c, d)| {
            if *d == 0.0 {
                Err(Error::InvalidInput("zero inverse-diagonal entry".into()))
            } else {
                Ok(c / d)
            }
        })
        .collect()
}

/// Expected number of points in a ball of radius `delta` under a uniform
/// distribution of `n` points over hypervolume `volume`.
pub fn expected_local_count(n: usize, volume: f64, delta: f64, dim: usize) -> f64 {
    n as f64 * ball_volume(dim, delta) / volume
}

/// Hypervolume of the `dim`-ball of radius `delta`.
pub fn ball_volume(dim: usize, delta: f64) -> f64 {
    unit_ball_volume(dim) * delta.powi(dim as i32)
}

fn unit_ball_volume(dim: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_m = V_{m-2} * 2π / m
    match dim {
        0 => 1.0,
        1 => 2.0,
        m => unit_ball_volume(m - 2) * std::f64::consts::TAU / m as f64,
    }
}

/// Enlarges the patch radius in steps of `t * base_delta` until the patch
/// holds at least the expected uniform count for the base covering radius.
/// Growth past the box diagonal without reaching the target means the data
/// distribution is degenerate.
pub fn grow_radius(
    grid: &BlockGrid,
    centre: &[f64],
    base_delta: f64,
    t: f64,
    n: usize,
    volume: f64,
) -> Result<f64> {
    let target = expected_local_count(n, volume, base_delta, grid.dim());
    let cap = grid.box_.diagonal().max(base_delta);
    let mut step = 0u32;
    loop {
        let radius = base_delta * (1.0 + f64::from(step) * t);
        if grid.count_within(centre, radius) as f64 >= target {
            return Ok(radius);
        }
        if radius > cap {
            return Err(Error::DegenerateData { centre: fmt_point(centre) });
        }
        step += 1;
    }
}

/// Leave-one-out error estimates over the (radius, shape) candidate grid.
/// Infeasible cells (local system singular to working precision) carry
/// `+inf`.
#[derive(Debug, Clone)]
pub struct ErrorMatrix {
    pub radii: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Row-major P x Q maximum-norm error estimates.
    pub entries: Vec<f64>,
    /// Cells whose solved system reproduces its own nodes to near machine
    /// precision. Selection prefers these; the others are only eligible when
    /// no clean cell exists (degenerate local geometry).
    pub clean: Vec<bool>,
}

/// The winning couple of a selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selected {
    pub radius: f64,
    pub epsilon: f64,
    pub radius_index: usize,
    pub epsilon_index: usize,
    pub error: f64,
}

impl ErrorMatrix {
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.entries[p * self.epsilons.len() + q]
    }

    /// The couple minimizing the error estimate; ties break toward the
    /// smallest radius index, then the smallest shape index. Cells that pass
    /// the node-residual check are preferred; cells that merely factorized
    /// are considered only when no clean cell exists. Fails when every cell
    /// is infeasible.
    pub fn select_couple(&self) -> Option<Selected> {
        self.argmin(true).or_else(|| self.argmin(false))
    }

    fn argmin(&self, require_clean: bool) -> Option<Selected> {
        let mut best: Option<Selected> = None;
        for p in 0..self.radii.len() {
            for q in 0..self.epsilons.len() {
                if require_clean && !self.clean[p * self.epsilons.len() + q] {
                    continue;
                }
                let e = self.get(p, q);
                if e.is_finite() && best.map_or(true, |b| e < b.error) {
                    best = Some(Selected {
                        radius: self.radii[p],
                        epsilon: self.epsilons[q],
                        radius_index: p,
                        epsilon_index: q,
                        error: e,
                    });
                }
            }
        }
        best
    }
}

/// Fills the error matrix for one patch: for each radius the nodes are
/// gathered once through the block grid, then every shape parameter is
/// scored by the maximum-norm leave-one-out estimate.
pub fn error_matrix(
    centre: &[f64],
    grid: &BlockGrid,
    data_values: &[f64],
    family: KernelFamily,
    search: &SearchGrid,
    delta_1: f64,
    max_local_points: usize,
) -> Result<ErrorMatrix> {
    let radii = search.radii(delta_1);
    let q_count = search.epsilons.len();
    let mut entries = vec![f64::INFINITY; radii.len() * q_count];
    for (p, radius) in radii.iter().enumerate() {
        let nodes = grid.points_within(centre, *radius);
        if nodes.is_empty() {
            continue;
        }
        if nodes.len() > max_local_points {
            return Err(Error::LocalSizeCap {
                centre: fmt_point(centre),
                count: nodes.len(),
                cap: max_local_points,
            });
        }
        let (local_coords, local_values) =
            gather(grid.dim(), raw_coords(grid), data_values, &nodes);
        for (q, eps) in search.epsilons.iter().enumerate() {
            let kernel = Kernel { family, epsilon: *eps };
            let Some(solve) = solve_local(&kernel, grid.dim(), &local_coords, &local_values)?
            else {
                continue;
            };
            let errors = loocv_errors(&solve.coefficients, &solve.inv_diagonal)?;
            let max = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
            entries[p * q_count + q] = if max.is_finite() { max } else { f64::INFINITY };
        }
    }
    let matrix = ErrorMatrix { radii, epsilons: search.epsilons.clone(), entries };
    if matrix.select_couple().is_none() {
        return Err(Error::PatchFit { centre: fmt_point(centre) });
    }
    Ok(matrix)
}

fn raw_coords(grid: &BlockGrid) -> &[f64] {
    // BlockGrid owns a copy of the coordinates; reuse it instead of keeping a
    // second reference around.
    grid.coords()
}

/// Settings for a full adaptive fit.
#[derive(Debug, Clone)]
pub struct BloocvConfig {
    pub family: KernelFamily,
    pub search: SearchGrid,
    /// Hard cap on the nodes gathered per candidate radius, guarding against
    /// cubic-cost blowup on degenerate configurations.
    pub max_local_points: usize,
}

impl BloocvConfig {
    pub fn new(family: KernelFamily, search: SearchGrid) -> BloocvConfig {
        BloocvConfig { family, search, max_local_points: 2000 }
    }
}

/// Per-patch selection record for reports.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchRecord {
    pub centre: Vec<f64>,
    /// Lower endpoint of the radius search interval.
    pub delta_1: f64,
    /// Chosen radius.
    pub radius: f64,
    /// Chosen shape parameter.
    pub epsilon: f64,
    /// Nodes in the patch at the chosen radius.
    pub local_count: usize,
    /// Minimal leave-one-out estimate over the candidate grid.
    pub loocv_error: f64,
}

/// Fits the adaptive partition-of-unity interpolant: for every covering
/// centre, grow the radius interval, score the candidate grid, select the
/// optimal couple, and solve the local system at the selection.
pub fn fit_bloocv(
    data: &PointSet,
    config: &BloocvConfig,
    domain: Option<&Domain>,
) -> Result<(PuModel, Vec<PatchRecord>, FitSummary)> {
    config.search.validate()?;
    let values = data
        .values
        .as_ref()
        .ok_or_else(|| Error::Config("fit data carries no sampled values".into()))?;
    let box_ = BoundingBox::from_points(data.dim, &data.coords)?;
    let default_domain = Domain::rectangle(&box_);
    let domain = domain.unwrap_or(&default_domain);
    let covering = make_covering(&box_, data.len(), domain)?;
    let base_delta = covering.min_radius;
    let grid = BlockGrid::build(data.dim, &data.coords, box_.clone(), base_delta)?;
    let pin_base = config.search.pins_base_radius();

    let fitted: Vec<(Subdomain, PatchRecord)> = (0..covering.len())
        .into_par_iter()
        .map(|j| {
            let centre = covering.centre(j);
            let delta_1 = if pin_base {
                base_delta
            } else {
                grow_radius(
                    &grid,
                    centre,
                    base_delta,
                    config.search.growth_step,
                    data.len(),
                    domain.volume,
                )?
            };
            let matrix = error_matrix(
                centre,
                &grid,
                values,
                config.family,
                &config.search,
                delta_1,
                config.max_local_points,
            )?;
            let selected = matrix
                .select_couple()
                .ok_or_else(|| Error::PatchFit { centre: fmt_point(centre) })?;
            let nodes = grid.points_within(centre, selected.radius);
            let (local_coords, local_values) = gather(data.dim, &data.coords, values, &nodes);
            let kernel = Kernel { family: config.family, epsilon: selected.epsilon };
            let solve = solve_local(&kernel, data.dim, &local_coords, &local_values)?
                .ok_or_else(|| Error::PatchFit { centre: fmt_point(centre) })?;
            let record = PatchRecord {
                centre: centre.to_vec(),
                delta_1,
                radius: selected.radius,
                epsilon: selected.epsilon,
                local_count: nodes.len(),
                loocv_error: selected.error,
            };
            let subdomain = Subdomain {
                centre: centre.to_vec(),
                radius: selected.radius,
                epsilon: selected.epsilon,
                node_indices: nodes,
                coefficients: solve.coefficients,
                solvable: true,
            };
            Ok((subdomain, record))
        })
        .collect::<Result<_>>()?;

    let (subdomains, records): (Vec<_>, Vec<_>) = fitted.into_iter().unzip();
    let summary = FitSummary {
        data_points: data.len(),
        subdomains: subdomains.len(),
        empty_patches: 0,
        failed_patches: 0,
    };
    let model = PuModel {
        dim: data.dim,
        kernel_family: config.family,
        base_delta,
        points: data.coords.clone(),
        subdomains,
        box_,
    };
    Ok((model, records, summary))
}

/// Formats per-patch selection records as delimited text.
pub fn format_report(records: &[PatchRecord], dim: usize) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let coords: Vec<String> = (1..=dim).map(|m| format!("centre_{m}")).collect();
    let _ = writeln!(out, "# {} delta_1 radius epsilon local_count loocv_error", coords.join(" "));
    for r in records {
        for c in &r.centre {
            let _ = write!(out, "{c} ");
        }
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            r.delta_1, r.radius, r.epsilon, r.local_count, r.loocv_error
        );
    }
    out
}
