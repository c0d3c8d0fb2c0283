//! Point-set generators, test functions, error metrics, and point-file I/O.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernels::euclidean;
use crate::partition::BoundingBox;

/// N points in M dimensions with optional sampled values.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub dim: usize,
    /// Row-major coordinates, `dim` entries per point.
    pub coords: Vec<f64>,
    pub values: Option<Vec<f64>>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>, values: Option<Vec<f64>>) -> Result<PointSet> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::InvalidInput(format!(
                "coordinate buffer of length {} is not a whole number of {dim}-dimensional points",
                coords.len()
            )));
        }
        if let Some(v) = &values {
            if v.len() != coords.len() / dim {
                return Err(Error::InvalidInput(format!(
                    "{} values for {} points",
                    v.len(),
                    coords.len() / dim
                )));
            }
        }
        Ok(PointSet { dim, coords, values })
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

    /// Samples `f` at every point and stores the results as values.
    pub fn with_sampled(mut self, f: impl Fn(&[f64]) -> f64) -> PointSet {
        let values = self.coords.chunks_exact(self.dim).map(|p| f(p)).collect();
        self.values = Some(values);
        self
    }

    /// Deterministic every-`k`-th holdout split: points at 1-based positions
    /// `k, 2k, ...` form the validation set, the rest the training set.
    pub fn split_holdout(&self, k: usize) -> Result<(PointSet, PointSet)> {
        if k < 2 {
            return Err(Error::Config("holdout step must be at least 2".into()));
        }
        let mut train = PointSet { dim: self.dim, coords: Vec::new(), values: self.values.as_ref().map(|_| Vec::new()) };
        let mut held = train.clone();
        for i in 0..self.len() {
            let target = if (i + 1) % k == 0 { &mut held } else { &mut train };
            target.coords.extend_from_slice(self.point(i));
            if let (Some(tv), Some(v)) = (target.values.as_mut(), self.values.as_ref()) {
                tv.push(v[i]);
            }
        }
        if held.is_empty() || train.is_empty() {
            return Err(Error::Config(format!(
                "holdout step {k} leaves an empty split for {} points",
                self.len()
            )));
        }
        Ok((train, held))
    }
}

const PRIMES: [u32; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

/// First `n` Halton points in `[0,1]^dim`, bases the first `dim` primes,
/// starting from sequence index 1 so the origin is excluded.
pub fn halton(n: usize, dim: usize) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one point".into()));
    }
    if dim == 0 || dim > PRIMES.len() {
        return Err(Error::InvalidInput(format!(
            "dimension must be in 1..={}, got {dim}",
            PRIMES.len()
        )));
    }
    let mut coords = Vec::with_capacity(n * dim);
    for i in 1..=n {
        for &base in PRIMES.iter().take(dim) {
            coords.push(radical_inverse(i as u64, base as u64));
        }
    }
    PointSet::new(dim, coords, None)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut f = inv_base;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv_base;
    }
    r
}

/// Deterministic 2D point set with strongly non-uniform density: concentric
/// rings around `focus` whose radii shrink geometrically by `ratio`. Outer
/// rings carry enough points to keep the fill distance moderate, while a
/// reserved share of the budget grinds down onto ever-smaller rings, driving
/// the separation distance far below the fill distance.
pub fn clustered(n: usize, focus: [f64; 2], ratio: f64) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one point".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidInput(format!("ratio must lie in (0,1), got {ratio}")));
    }
    if focus.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::InvalidInput("focus must lie in the unit square".into()));
    }
    let mut coords = Vec::with_capacity(n * 2);
    coords.extend_from_slice(&focus);
    if n == 1 {
        return PointSet::new(2, coords, None);
    }
    // Largest ring that stays inside the unit square.
    let side_gap = focus
        .iter()
        .map(|c| c.min(1.0 - c))
        .fold(f64::INFINITY, f64::min);
    let r_max = (0.96 * side_gap).max(1e-3);
    // Roughly a fifth of the budget is reserved for the collapsing tail.
    let tail = ((n - 1) / 5).max(usize::from(n > 8));
    let body = n - 1 - tail;
    let per_unit_len = (n as f64).sqrt();
    let golden = 0.618_033_988_749_894_9_f64;
    let mut placed = 1usize;
    let mut k = 0u32;
    while placed < 1 + body {
        let r = r_max * ratio.powi(k as i32);
        let m = ((std::f64::consts::TAU * r * per_unit_len).round() as usize).max(5);
        let offset = (k as f64 * golden).fract();
        for i in 0..m {
            if placed == 1 + body {
                break;
            }
            let theta = std::f64::consts::TAU * (i as f64 + offset) / m as f64;
            coords.push(focus[0] + r * theta.cos());
            coords.push(focus[1] + r * theta.sin());
            placed += 1;
        }
        k += 1;
    }
    // Collapsing tail: few points per ring, radii continuing the same
    // geometric sequence toward the focus. Tail angles stay aligned across
    // rings, so the smallest pairwise gap is the radial one and the
    // separation distance collapses with the radii. The ring count is capped
    // to keep radii well clear of underflow for large n.
    let tail_rings = ((tail + 4) / 5).clamp(1, 150);
    let per_ring = (tail + tail_rings - 1) / tail_rings;
    while placed < n {
        let r = r_max * ratio.powi(k as i32);
        for i in 0..per_ring {
            if placed == n {
                break;
            }
            let theta = std::f64::consts::TAU * i as f64 / per_ring as f64;
            coords.push(focus[0] + r * theta.cos());
            coords.push(focus[1] + r * theta.sin());
            placed += 1;
        }
        k += 1;
    }
    PointSet::new(2, coords, None)
}

/// Built-in bivariate test functions on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    /// Product function `16 x1 x2 (1-x1) (1-x2)`.
    F1,
    /// Valley function `x2 cos^4(4 x1^2 + x2^2 - 1) / 2`.
    F2,
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let (x1, x2) = (x[0], x[1]);
        match self {
            TestFunction::F1 => 16.0 * x1 * x2 * (1.0 - x1) * (1.0 - x2),
            TestFunction::F2 => {
                let c = (4.0 * x1 * x1 + x2 * x2 - 1.0).cos();
                0.5 * x2 * c * c * c * c
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::F1 => "f1",
            TestFunction::F2 => "f2",
        }
    }

    pub fn parse_name(s: &str) -> Option<TestFunction> {
        match s {
            "f1" => Some(TestFunction::F1),
            "f2" => Some(TestFunction::F2),
            _ => None,
        }
    }
}

/// Root-mean-square and maximum absolute error between two aligned vectors.
pub fn rmse_mae(predicted: &[f64], truth: &[f64]) -> Result<(f64, f64)> {
    if predicted.len() != truth.len() || predicted.is_empty() {
        return Err(Error::InvalidInput(format!(
            "metric vectors of lengths {} and {}",
            predicted.len(),
            truth.len()
        )));
    }
    let mut sq = 0.0;
    let mut mae: f64 = 0.0;
    for (p, t) in predicted.iter().zip(truth) {
        let e = (p - t).abs();
        sq += e * e;
        mae = mae.max(e);
    }
    Ok(((sq / predicted.len() as f64).sqrt(), mae))
}

/// Fill distance (approximated on a probe grid over the bounding box) and
/// separation distance (exact, half the minimal pairwise distance).
///
/// The true fill distance is a supremum over the domain; the probe grid of
/// `probe_side^M` points discretizes it, so the returned `h` is a slight
/// underestimate that refines with `probe_side`.
pub fn fill_separation(points: &PointSet, probe_side: usize) -> Result<(f64, f64)> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidInput("fill/separation needs at least two points".into()));
    }
    if probe_side < 2 {
        return Err(Error::InvalidInput("probe grid needs at least two points per axis".into()));
    }
    let dim = points.dim;
    let mut min_pair = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            min_pair = min_pair.min(euclidean(points.point(i), points.point(j)));
        }
    }
    let box_ = BoundingBox::from_points(dim, &points.coords)?;
    let mut probe = vec![0usize; dim];
    let mut x = vec![0.0f64; dim];
    let mut h: f64 = 0.0;
    loop {
        for m in 0..dim {
            let t = probe[m] as f64 / (probe_side - 1) as f64;
            x[m] = box_.mins[m] + t * box_.extent(m);
        }
        let nearest = (0..n)
            .map(|i| euclidean(points.point(i), &x))
            .fold(f64::INFINITY, f64::min);
        h = h.max(nearest);
        // odometer over the probe grid
        let mut axis = dim;
        loop {
            if axis == 0 {
                return Ok((h, 0.5 * min_pair));
            }
            axis -= 1;
            probe[axis] += 1;
            if probe[axis] < probe_side {
                break;
            }
            probe[axis] = 0;
        }
    }
}

/// Parses the delimited point format:
///
/// ```text
/// # dim=2 n=3 values=yes
/// 0.5 0.5 1.25
/// ...
/// ```
///
/// One point per line, `dim` coordinates followed by one value when the
/// header declares `values=yes`. Later `#` lines are comments, blank lines
/// are skipped, and coordinates must be finite.
pub fn parse_points(text: &str) -> Result<PointSet> {
    let mut lines = text.lines().enumerate();
    let (header_no, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| Error::parse(1, "empty input"))?;
    let (dim, declared_n, has_values) = parse_header(header_no + 1, header)?;
    let mut coords = Vec::new();
    let mut values = if has_values { Some(Vec::new()) } else { None };
    for (no, line) in lines {
        let line_no = no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let expected = dim + usize::from(has_values);
        if fields.len() != expected {
            return Err(Error::parse(
                line_no,
                format!("expected {expected} fields, found {}", fields.len()),
            ));
        }
        for (f, field) in fields.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::parse(line_no, format!("field {} is not a number: {field:?}", f + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(line_no, format!("field {} is not finite", f + 1)));
            }
            if f < dim {
                coords.push(v);
            } else {
                values.as_mut().expect("has_values").push(v);
            }
        }
    }
    let n = coords.len() / dim.max(1);
    if n != declared_n {
        return Err(Error::parse(
            header_no + 1,
            format!("header declares n={declared_n} but file holds {n} points"),
        ));
    }
    PointSet::new(dim, coords, values)
}

fn parse_header(line_no: usize, line: &str) -> Result<(usize, usize, bool)> {
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(line_no, "header must start with '#'"))?;
    let mut dim = None;
    let mut n = None;
    let mut values = None;
    for field in body.split_whitespace() {
        let (key, val) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(line_no, format!("malformed header field {field:?}")))?;
        match key {
            "dim" => {
                dim = Some(val.parse::<usize>().map_err(|_| {
                    Error::parse(line_no, format!("dim is not an integer: {val:?}"))
                })?)
            }
            "n" => {
                n = Some(val.parse::<usize>().map_err(|_| {
                    Error::parse(line_no, format!("n is not an integer: {val:?}"))
                })?)
            }
            "values" => {
                values = Some(match val {
                    "yes" => true,
                    "no" => false,
                    _ => {
                        return Err(Error::parse(
                            line_no,
                            format!("values must be yes or no, got {val:?}"),
                        ))
                    }
                })
            }
            _ => return Err(Error::parse(line_no, format!("unknown header key {key:?}"))),
        }
    }
    match (dim, n, values) {
        (Some(d), Some(n), Some(v)) if d >= 1 => Ok((d, n, v)),
        (Some(0), ..) => Err(Error::parse(line_no, "dim must be at least 1")),
        _ => Err(Error::parse(line_no, "header needs dim=, n= and values=")),
    }
}

/// Serializes a point set in the format accepted by [`parse_points`], values
/// in shortest round-trip decimal so a read-back is bit exact.
pub fn format_points(points: &PointSet) -> String {
    let mut out = String::new();
    let has_values = points.values.is_some();
    let _ = writeln!(
        out,
        "# dim={} n={} values={}",
        points.dim,
        points.len(),
        if has_values { "yes" } else { "no" }
    );
    for i in 0..points.len() {
        let mut first = true;
        for c in points.point(i) {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{c}");
            first = false;
        }
        if let Some(v) = &points.values {
            let _ = write!(out, " {}", v[i]);
        }
        out.push('\n');
    }
    out
}

pub fn read_points(path: &Path) -> Result<PointSet> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_points(&text)
}

pub fn write_points(path: &Path, points: &PointSet) -> Result<()> {
    std::fs::write(path, format_points(points))
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Formats gridded 2D predictions as whitespace-separated `x y value`
/// triples with a blank line between grid rows, the layout common plotting
/// tools ingest directly.
pub fn format_grid(grid_coords: &[f64], values: &[f64], side: usize) -> Result<String> {
    if grid_coords.len() != values.len() * 2 || values.len() != side * side {
        return Err(Error::InvalidInput("grid buffers do not match side*side 2D points".into()));
    }
    let mut out = String::new();
    for row in 0..side {
        for col in 0..side {
            let i = row * side + col;
            let _ = writeln!(out, "{} {} {}", grid_coords[2 * i], grid_coords[2 * i + 1], values[i]);
        }
        if row + 1 < side {
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn write_grid(path: &Path, grid_coords: &[f64], values: &[f64], side: usize) -> Result<()> {
    std::fs::write(path, format_grid(grid_coords, values, side)?)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
