//! Bounded convex parameter domains and ζ-nets over them.
//!
//! A ζ-net of `W` is a finite subset such that every point of `W` lies within
//! Euclidean distance ζ of some net point. [`build_net`] lays an axis-aligned
//! grid of spacing ζ/√d over the set, which puts every point of the grid's
//! bounding region within ζ/2 of a grid node. For balls, nodes that fall
//! outside are radially projected back onto the sphere whenever they could be
//! the nearest node of some interior point, so coverage survives the clipping.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{param, Error, Result};
use crate::rng::StreamRng;

/// Default upper limit on the number of net points.
pub const DEFAULT_NET_CAP: u64 = 10_000_000;

/// Absolute slack accepted by [`covering_check`].
pub const COVER_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SetKind {
    Ball,
    Box,
}

/// A Euclidean ball or an axis-aligned box in ℝᵈ.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConstraintSet {
    kind: SetKind,
    center: Vec<f64>,
    /// `[radius]` for balls, per-coordinate half-widths for boxes.
    extent: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(skip))]
    lower: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(skip))]
    upper: Vec<f64>,
}

impl ConstraintSet {
    /// Builds a set. Balls take a single radius; boxes take one half-width per
    /// coordinate, or a single half-width broadcast to every coordinate.
    pub fn new(kind: SetKind, center: Vec<f64>, extent: &[f64]) -> Result<Self> {
        let dim = center.len();
        if dim == 0 {
            return Err(Error::InvalidSet("dimension must be at least 1".into()));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSet("center must be finite".into()));
        }
        let extent: Vec<f64> = match (kind, extent.len()) {
            (SetKind::Ball, 1) => extent.to_vec(),
            (SetKind::Ball, k) => {
                return Err(Error::InvalidSet(alloc::format!(
                    "a ball takes exactly one radius, got {k} values"
                )))
            }
            (SetKind::Box, 1) => vec![extent[0]; dim],
            (SetKind::Box, k) if k == dim => extent.to_vec(),
            (SetKind::Box, k) => {
                return Err(Error::InvalidSet(alloc::format!(
                    "a box in {dim} dimensions takes 1 or {dim} half-widths, got {k}"
                )))
            }
        };
        if extent.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidSet(
                "radius and half-widths must be positive and finite".into(),
            ));
        }
        let (lower, upper) = match kind {
            SetKind::Ball => (Vec::new(), Vec::new()),
            SetKind::Box => (
                center.iter().zip(&extent).map(|(c, a)| c - a).collect(),
                center.iter().zip(&extent).map(|(c, a)| c + a).collect(),
            ),
        };
        Ok(Self {
            kind,
            center,
            extent,
            lower,
            upper,
        })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::new(SetKind::Ball, center, &[radius])
    }

    pub fn cuboid(center: Vec<f64>, half_widths: &[f64]) -> Result<Self> {
        Self::new(SetKind::Box, center, half_widths)
    }

    /// The interval `[lo, hi]` as a one-dimensional box.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidSet("interval needs lo < hi".into()));
        }
        let mut set = Self::cuboid(vec![0.5 * (lo + hi)], &[0.5 * (hi - lo)])?;
        set.lower = vec![lo];
        set.upper = vec![hi];
        Ok(set)
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> Option<f64> {
        (self.kind == SetKind::Ball).then(|| self.extent[0])
    }

    pub fn half_widths(&self) -> Option<&[f64]> {
        (self.kind == SetKind::Box).then_some(self.extent.as_slice())
    }

    /// Largest distance between two points of the set.
    pub fn diameter(&self) -> f64 {
        2.0 * self.circumradius()
    }

    /// Largest distance from the center to a point of the set.
    pub fn circumradius(&self) -> f64 {
        match self.kind {
            SetKind::Ball => self.extent[0],
            SetKind::Box => norm(&self.extent),
        }
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        if w.len() != self.dim() {
            return false;
        }
        match self.kind {
            SetKind::Ball => distance(w, &self.center) <= self.extent[0],
            SetKind::Box => w
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| lo <= x && x <= hi),
        }
    }

    /// `max_{w ∈ W} ‖w − p‖₂`.
    pub fn max_distance_from(&self, p: &[f64]) -> f64 {
        match self.kind {
            SetKind::Ball => distance(p, &self.center) + self.extent[0],
            SetKind::Box => {
                let sq: f64 = p
                    .iter()
                    .zip(self.lower.iter().zip(&self.upper))
                    .map(|(x, (lo, hi))| {
                        let far = libm::fmax(libm::fabs(x - lo), libm::fabs(hi - x));
                        far * far
                    })
                    .sum();
                libm::sqrt(sq)
            }
        }
    }

    /// Draws a point uniformly from the set.
    pub fn sample_uniform(&self, rng: &mut StreamRng) -> Vec<f64> {
        match self.kind {
            SetKind::Box => self
                .lower
                .iter()
                .zip(&self.upper)
                .map(|(lo, hi)| lo + (hi - lo) * rng.uniform())
                .collect(),
            SetKind::Ball => {
                let d = self.dim();
                let mut dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                let mut len = norm(&dir);
                while len == 0.0 {
                    dir = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                    len = norm(&dir);
                }
                let r = self.extent[0] * libm::pow(rng.uniform(), 1.0 / d as f64);
                dir.iter()
                    .zip(&self.center)
                    .map(|(u, c)| c + r * u / len)
                    .collect()
            }
        }
    }
}

/// A finite ζ-net of a [`ConstraintSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    points: Vec<f64>,
    dim: usize,
    zeta: f64,
    set: ConstraintSet,
}

#[allow(clippy::len_without_is_empty)]
impl Net {
    /// Wraps explicit points, checking that each lies in `set`.
    ///
    /// The covering property itself is not checked here; use
    /// [`covering_check`] for that.
    pub fn from_points(set: ConstraintSet, zeta: f64, points: &[Vec<f64>]) -> Result<Self> {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(param("zeta must be positive and finite"));
        }
        if points.is_empty() {
            return Err(param("a net needs at least one point"));
        }
        let dim = set.dim();
        let mut flat = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    found: p.len(),
                });
            }
            if !set.contains(p) {
                return Err(param(alloc::format!("net point {i} lies outside the set")));
            }
            flat.extend_from_slice(p);
        }
        Ok(Self {
            points: flat,
            dim,
            zeta,
            set,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn set(&self) -> &ConstraintSet {
        &self.set
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    /// Index of the point bitwise equal to `w`, if any.
    pub fn position(&self, w: &[f64]) -> Option<usize> {
        self.points().position(|p| {
            p.len() == w.len() && p.iter().zip(w).all(|(a, b)| a.to_bits() == b.to_bits())
        })
    }
}

enum GridPlan {
    CenterOnly,
    Box { counts: Vec<u64> },
    Ball { spacing: f64, reach: i64 },
}

fn plan(set: &ConstraintSet, zeta: f64) -> Result<GridPlan> {
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(param(alloc::format!("zeta must be positive and finite, got {zeta}")));
    }
    if zeta >= set.circumradius() {
        return Ok(GridPlan::CenterOnly);
    }
    let d = set.dim() as f64;
    let spacing = zeta / libm::sqrt(d);
    Ok(match set.kind {
        SetKind::Box => GridPlan::Box {
            counts: set
                .extent
                .iter()
                .map(|a| libm::ceil(2.0 * a / spacing) as u64 + 1)
                .collect(),
        },
        SetKind::Ball => GridPlan::Ball {
            spacing,
            reach: libm::floor((set.extent[0] + 0.5 * zeta) / spacing) as i64,
        },
    })
}

/// Number of grid nodes [`build_net`] would enumerate for `(set, zeta)`,
/// saturating at `u64::MAX`. This is an upper bound on the net size.
pub fn projected_net_size(set: &ConstraintSet, zeta: f64) -> Result<u64> {
    let size = match plan(set, zeta)? {
        GridPlan::CenterOnly => 1.0,
        // +1 for the center when it is not a grid node.
        GridPlan::Box { counts } => counts.iter().map(|&c| c as f64).product::<f64>() + 1.0,
        GridPlan::Ball { reach, .. } => libm::pow((2 * reach + 1) as f64, set.dim() as f64),
    };
    Ok(if size >= u64::MAX as f64 {
        u64::MAX
    } else {
        size as u64
    })
}

/// Smallest ζ (up to bisection precision) whose projected net fits in `cap`.
pub fn zeta_for_cap(set: &ConstraintSet, cap: u64) -> f64 {
    let mut hi = set.circumradius();
    let mut lo = hi * 1e-12;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match projected_net_size(set, mid) {
            Ok(size) if size <= cap => hi = mid,
            _ => lo = mid,
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    hi
}

/// Builds a ζ-net with the default cap of [`DEFAULT_NET_CAP`] points.
pub fn build_net(set: &ConstraintSet, zeta: f64) -> Result<Net> {
    build_net_capped(set, zeta, DEFAULT_NET_CAP)
}

/// Builds a ζ-net, refusing when the grid would exceed `cap` points.
///
/// The point order is deterministic: grid nodes in lexicographic order, then
/// the center (boxes only, when it is not a node), then projected boundary
/// points.
pub fn build_net_capped(set: &ConstraintSet, zeta: f64, cap: u64) -> Result<Net> {
    let projected = projected_net_size(set, zeta)?;
    if projected > cap {
        return Err(Error::Capacity {
            required: projected,
            cap,
            suggested_zeta: zeta_for_cap(set, cap),
        });
    }
    let dim = set.dim();
    let mut points: Vec<f64> = Vec::new();
    match plan(set, zeta)? {
        GridPlan::CenterOnly => points.extend_from_slice(&set.center),
        GridPlan::Box { counts } => {
            let axes: Vec<Vec<f64>> = counts
                .iter()
                .enumerate()
                .map(|(j, &m)| {
                    let (lo, hi) = (set.lower[j], set.upper[j]);
                    let last = m - 1;
                    (0..m)
                        .map(|k| match k {
                            0 => lo,
                            k if k == last => hi,
                            k => (lo + (hi - lo) * (k as f64 / last as f64)).clamp(lo, hi),
                        })
                        .collect()
                })
                .collect();
            let mut idx = vec![0usize; dim];
            let mut has_center = false;
            loop {
                let start = points.len();
                points.extend(idx.iter().enumerate().map(|(j, &k)| axes[j][k]));
                has_center |= points[start..] == set.center[..];
                if !odometer(&mut idx, |j| axes[j].len()) {
                    break;
                }
            }
            if !has_center {
                points.extend_from_slice(&set.center);
            }
        }
        GridPlan::Ball { spacing, reach } => {
            let radius = set.extent[0];
            // Nodes within this distance may be the nearest node of an
            // interior point.
            let outer = radius + 0.5 * zeta;
            let side = (2 * reach + 1) as usize;
            let mut idx = vec![0usize; dim];
            let mut node = vec![0.0; dim];
            let mut projected: Vec<f64> = Vec::new();
            let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
            loop {
                for j in 0..dim {
                    node[j] = set.center[j] + spacing * (idx[j] as i64 - reach) as f64;
                }
                if set.contains(&node) {
                    points.extend_from_slice(&node);
                } else if distance(&node, &set.center) <= outer {
                    let p = project_into_ball(set, &node);
                    if seen.insert(p.iter().map(|v| v.to_bits()).collect()) {
                        projected.extend_from_slice(&p);
                    }
                }
                if !odometer(&mut idx, |_| side) {
                    break;
                }
            }
            points.extend_from_slice(&projected);
        }
    }
    Ok(Net {
        points,
        dim,
        zeta,
        set: set.clone(),
    })
}

/// Advances a mixed-radix counter; returns false after the last state.
fn odometer(idx: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for j in (0..idx.len()).rev() {
        idx[j] += 1;
        if idx[j] < radix(j) {
            return true;
        }
        idx[j] = 0;
    }
    false
}

fn project_into_ball(set: &ConstraintSet, p: &[f64]) -> Vec<f64> {
    let radius = set.extent[0];
    let len = distance(p, &set.center);
    let mut scale = radius / len;
    loop {
        let q: Vec<f64> = p
            .iter()
            .zip(&set.center)
            .map(|(x, c)| c + (x - c) * scale)
            .collect();
        if set.contains(&q) {
            return q;
        }
        scale *= 1.0 - 4.0 * f64::EPSILON;
    }
}

/// Value of the covering-number bound `ceil((3Δ/ζ)^d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CardinalityBound {
    pub value: u64,
    /// The bound overflowed and `value` is `u64::MAX`.
    pub saturated: bool,
}

pub fn cardinality_bound(set: &ConstraintSet, zeta: f64) -> Result<CardinalityBound> {
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(param(alloc::format!("zeta must be positive and finite, got {zeta}")));
    }
    let ratio = 3.0 * set.diameter() / zeta;
    let raw = libm::pow(ratio, set.dim() as f64);
    // Snap values within rounding of an integer so exact cases stay exact.
    let nearest = libm::round(raw);
    let value = if libm::fabs(raw - nearest) <= 1e-9 * libm::fmax(nearest, 1.0) {
        nearest
    } else {
        libm::ceil(raw)
    };
    Ok(if value >= u64::MAX as f64 {
        CardinalityBound {
            value: u64::MAX,
            saturated: true,
        }
    } else {
        CardinalityBound {
            value: value as u64,
            saturated: false,
        }
    })
}

/// Outcome of [`covering_check`].
#[derive(Debug, Clone, PartialEq)]
pub enum Coverage {
    Pass,
    /// `witness` is a point of the set farther than ζ from every net point.
    Fail { witness: Vec<f64>, distance: f64 },
}

impl Coverage {
    pub fn passed(&self) -> bool {
        matches!(self, Coverage::Pass)
    }
}

/// Spatial hash of net points with cells of side ζ.
struct CellIndex<'a> {
    net: &'a Net,
    cells: BTreeMap<Vec<i64>, Vec<usize>>,
}

impl<'a> CellIndex<'a> {
    fn new(net: &'a Net) -> Self {
        let mut cells: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for (i, p) in net.points().enumerate() {
            cells.entry(Self::key(net, p)).or_default().push(i);
        }
        Self { net, cells }
    }

    fn key(net: &Net, p: &[f64]) -> Vec<i64> {
        p.iter()
            .zip(net.set.center())
            .map(|(x, c)| libm::floor((x - c) / net.zeta) as i64)
            .collect()
    }

    /// Distance to the nearest net point if it is within ζ + slack, else the
    /// brute-force nearest distance.
    fn nearest_within(&self, p: &[f64], reach: f64) -> (bool, f64) {
        let base = Self::key(self.net, p);
        let d = base.len();
        let mut offset = vec![0usize; d];
        let mut key = base.clone();
        let mut best = f64::INFINITY;
        loop {
            for j in 0..d {
                key[j] = base[j] + offset[j] as i64 - 1;
            }
            if let Some(ids) = self.cells.get(&key) {
                for &i in ids {
                    best = libm::fmin(best, distance(p, self.net.point(i)));
                }
            }
            if !odometer(&mut offset, |_| 3) {
                break;
            }
        }
        if best <= reach {
            return (true, best);
        }
        let best = self
            .net
            .points()
            .map(|q| distance(p, q))
            .fold(f64::INFINITY, libm::fmin);
        (best <= reach, best)
    }
}

/// Samples `probes` uniform points of the set and checks each has a net point
/// within ζ + [`COVER_SLACK`].
pub fn covering_check(net: &Net, probes: usize, seed: u64) -> Result<Coverage> {
    if probes == 0 {
        return Err(param("covering_check needs at least one probe"));
    }
    let index = CellIndex::new(net);
    let reach = net.zeta + COVER_SLACK;
    let mut rng = StreamRng::new(seed);
    for _ in 0..probes {
        let p = net.set.sample_uniform(&mut rng);
        let (ok, dist) = index.nearest_within(&p, reach);
        if !ok {
            return Ok(Coverage::Fail {
                witness: p,
                distance: dist,
            });
        }
    }
    Ok(Coverage::Pass)
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}
