//! Geometry of `Z^d`: points, the two adjacency models, regions and their
//! boundaries.
//!
//! All norms are computed in `i64`/`i128`; coordinates are capped at `±2^40`
//! so squared Euclidean distances never overflow.

use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};

/// Largest admissible absolute coordinate.
pub const COORD_LIMIT: i64 = 1 << 40;

/// Spread-out neighbourhoods larger than this are refused.
pub const MAX_NEIGHBORHOOD: u128 = 10_000_000;

/// Enumerations of boxes and patches larger than this are refused.
pub const MAX_ENUMERATION: u128 = 50_000_000;

pub type Coords = SmallVec<[i64; 12]>;

/// A lattice site.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct Point(Coords);

impl Point {
    pub fn new(coords: &[i64]) -> Result<Self> {
        for &c in coords {
            if !(-COORD_LIMIT..=COORD_LIMIT).contains(&c) {
                return Err(Error::CoordinateOutOfRange(c));
            }
        }
        Ok(Point(Coords::from_slice(coords)))
    }

    pub fn origin(d: usize) -> Self {
        Point(smallvec::smallvec![0; d])
    }

    /// `sign * e_axis` in dimension `d`.
    pub fn unit(d: usize, axis: usize, sign: i64) -> Self {
        let mut p = Self::origin(d);
        p.0[axis] = sign;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn linf(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn l1(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn l2_sq(&self) -> i128 {
        self.0.iter().map(|&c| (c as i128) * (c as i128)).sum()
    }

    pub fn l2(&self) -> f64 {
        (self.l2_sq() as f64).sqrt()
    }

    pub fn linf_dist(&self, other: &Point) -> i64 {
        linf_dist(&self.0, &other.0)
    }

    pub fn add(&self, other: &Point) -> Result<Point> {
        let v: Vec<i64> = self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect();
        Point::new(&v)
    }

    pub fn sub(&self, other: &Point) -> Result<Point> {
        let v: Vec<i64> = self.0.iter().zip(other.0.iter()).map(|(a, b)| a - b).collect();
        Point::new(&v)
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

/// Panics if a coordinate is out of range; intended for literals.
impl<const N: usize> From<[i64; N]> for Point {
    fn from(c: [i64; N]) -> Self {
        Point::new(&c).expect("coordinate out of range")
    }
}

impl TryFrom<Vec<i64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        Point::new(&v)
    }
}

impl From<Point> for Vec<i64> {
    fn from(p: Point) -> Self {
        p.0.to_vec()
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub(crate) fn linf_dist(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or(0)
}

pub(crate) fn l2_sq_dist(a: &[i64], b: &[i64]) -> i128 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = (x - y) as i128;
            t * t
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    NearestNeighbor,
    /// All pairs at L∞ distance `1..=range` are adjacent (diagonals included).
    SpreadOut(u32),
}

/// The lattice model: dimension, adjacency rule and bond-open probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub dimension: usize,
    pub connectivity: Connectivity,
    pub p: f64,
}

impl GraphSpec {
    pub fn new(dimension: usize, connectivity: Connectivity, p: f64) -> Result<Self> {
        let spec = GraphSpec {
            dimension,
            connectivity,
            p,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn nearest_neighbor(dimension: usize, p: f64) -> Result<Self> {
        Self::new(dimension, Connectivity::NearestNeighbor, p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidSpec("dimension must be >= 1".into()));
        }
        if let Connectivity::SpreadOut(rho) = self.connectivity {
            if rho == 0 {
                return Err(Error::InvalidSpec("spread-out range must be >= 1".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.p) || self.p.is_nan() {
            return Err(Error::InvalidSpec(format!("p = {} not in [0,1]", self.p)));
        }
        Ok(())
    }

    pub fn with_p(&self, p: f64) -> Self {
        GraphSpec { p, ..self.clone() }
    }

    /// Number of neighbours of any site.
    pub fn degree(&self) -> u128 {
        match self.connectivity {
            Connectivity::NearestNeighbor => 2 * self.dimension as u128,
            Connectivity::SpreadOut(rho) => {
                (2 * rho as u128 + 1).saturating_pow(self.dimension as u32) - 1
            }
        }
    }

    /// Largest L∞ length of a single edge.
    pub fn reach(&self) -> i64 {
        match self.connectivity {
            Connectivity::NearestNeighbor => 1,
            Connectivity::SpreadOut(rho) => rho as i64,
        }
    }
}

/// An undirected edge with endpoints in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    a: Point,
    b: Point,
}

impl Edge {
    pub fn new(x: &Point, y: &Point, spec: &GraphSpec) -> Result<Self> {
        x.check_dim(spec.dimension)?;
        y.check_dim(spec.dimension)?;
        if x == y || !adjacent(x.coords(), y.coords(), spec) {
            return Err(invalid(format!("{x} and {y} are not adjacent")));
        }
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        Ok(Edge {
            a: a.clone(),
            b: b.clone(),
        })
    }

    pub fn a(&self) -> &Point {
        &self.a
    }

    pub fn b(&self) -> &Point {
        &self.b
    }
}

pub(crate) fn adjacent(x: &[i64], y: &[i64], spec: &GraphSpec) -> bool {
    match spec.connectivity {
        Connectivity::NearestNeighbor => {
            x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<i64>() == 1
        }
        Connectivity::SpreadOut(rho) => {
            let dist = linf_dist(x, y);
            dist >= 1 && dist <= rho as i64
        }
    }
}

/// Where a cluster is allowed to live. Radii are L∞.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    FullLattice,
    /// `{z : ‖z − center‖∞ ≤ radius}`
    Box { center: Point, radius: i64 },
    /// `{z : ‖z − center‖∞ > radius}`
    BoxComplement { center: Point, radius: i64 },
    /// `{z : z[axis] ≥ threshold}`
    HalfSpace { axis: usize, threshold: i64 },
    /// `{z : inner < ‖z − center‖∞ ≤ outer}`
    Annulus {
        center: Point,
        inner: i64,
        outer: i64,
    },
}

impl Region {
    pub fn ball(center: Point, radius: i64) -> Self {
        Region::Box { center, radius }
    }

    pub fn origin_box(d: usize, radius: i64) -> Self {
        Region::Box {
            center: Point::origin(d),
            radius,
        }
    }

    pub fn contains(&self, z: &[i64]) -> bool {
        match self {
            Region::FullLattice => true,
            Region::Box { center, radius } => linf_dist(z, center.coords()) <= *radius,
            Region::BoxComplement { center, radius } => linf_dist(z, center.coords()) > *radius,
            Region::HalfSpace { axis, threshold } => z[*axis] >= *threshold,
            Region::Annulus {
                center,
                inner,
                outer,
            } => {
                let r = linf_dist(z, center.coords());
                r > *inner && r <= *outer
            }
        }
    }

    pub fn contains_point(&self, z: &Point) -> bool {
        self.contains(z.coords())
    }

    /// Membership of `y`, given that `y` differs from a member of the region
    /// only on the listed axes.
    #[inline]
    pub(crate) fn contains_moved(&self, y: &[i64], changed: &[(usize, i64)]) -> bool {
        match self {
            Region::FullLattice => true,
            Region::Box { center, radius } => changed
                .iter()
                .all(|&(k, _)| (y[k] - center.coords()[k]).abs() <= *radius),
            Region::HalfSpace { axis, threshold } => y[*axis] >= *threshold,
            _ => self.contains(y),
        }
    }

    pub fn as_box(&self) -> Option<(&Point, i64)> {
        match self {
            Region::Box { center, radius } => Some((center, *radius)),
            _ => None,
        }
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        match self {
            Region::FullLattice => Ok(()),
            Region::Box { center, .. }
            | Region::BoxComplement { center, .. }
            | Region::Annulus { center, .. } => center.check_dim(d),
            Region::HalfSpace { axis, .. } => {
                if *axis >= d {
                    Err(invalid(format!("half-space axis {axis} >= d = {d}")))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// One neighbour offset together with what the explorer needs to know about it.
#[derive(Clone, Debug)]
pub(crate) struct Offset {
    pub delta: Coords,
    /// Nonzero entries of `delta`.
    pub changes: SmallVec<[(usize, i64); 4]>,
    /// `delta >lex 0`, i.e. the current site is the canonical lower endpoint.
    pub forward: bool,
    /// Identifier of `±delta` shared by both orientations of the edge.
    pub code: u64,
}

/// Precomputed neighbour offsets of a spec, in lexicographic order.
#[derive(Clone, Debug)]
pub struct Neighborhood {
    pub(crate) offsets: Vec<Offset>,
}

impl Neighborhood {
    pub fn new(spec: &GraphSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.dimension;
        let mut offsets = Vec::new();
        match spec.connectivity {
            Connectivity::NearestNeighbor => {
                // lexicographic: -e_0 < -e_1 < ... < -e_{d-1} < e_{d-1} < ... < e_0
                for k in 0..d {
                    offsets.push(nn_offset(d, k, -1));
                }
                for k in (0..d).rev() {
                    offsets.push(nn_offset(d, k, 1));
                }
            }
            Connectivity::SpreadOut(rho) => {
                let size = spec.degree();
                if size > MAX_NEIGHBORHOOD {
                    return Err(Error::SizeGuard {
                        what: "spread-out neighbourhood",
                        size,
                        limit: MAX_NEIGHBORHOOD,
                    });
                }
                let rho = rho as i64;
                let mut delta: Coords = smallvec::smallvec![-rho; d];
                loop {
                    if delta.iter().any(|&c| c != 0) {
                        offsets.push(spread_offset(&delta, rho));
                    }
                    if !odometer_step(&mut delta, -rho, rho) {
                        break;
                    }
                }
            }
        }
        Ok(Neighborhood { offsets })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Identifier of the undirected direction between adjacent `lower < upper`.
    pub(crate) fn code_between(spec: &GraphSpec, lower: &[i64], upper: &[i64]) -> u64 {
        match spec.connectivity {
            Connectivity::NearestNeighbor => lower
                .iter()
                .zip(upper)
                .position(|(a, b)| a != b)
                .expect("distinct points") as u64,
            Connectivity::SpreadOut(rho) => {
                let delta: Coords = upper.iter().zip(lower).map(|(u, l)| u - l).collect();
                spread_code(&delta, rho as i64)
            }
        }
    }
}

fn nn_offset(d: usize, k: usize, sign: i64) -> Offset {
    let mut delta: Coords = smallvec::smallvec![0; d];
    delta[k] = sign;
    Offset {
        delta,
        changes: smallvec::smallvec![(k, sign)],
        forward: sign > 0,
        code: k as u64,
    }
}

fn spread_offset(delta: &[i64], rho: i64) -> Offset {
    let forward = lex_positive(delta);
    let canonical: Coords = if forward {
        Coords::from_slice(delta)
    } else {
        delta.iter().map(|c| -c).collect()
    };
    Offset {
        delta: Coords::from_slice(delta),
        changes: delta
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(k, &c)| (k, c))
            .collect(),
        forward,
        code: spread_code(&canonical, rho),
    }
}

fn spread_code(delta: &[i64], rho: i64) -> u64 {
    let base = (2 * rho + 1) as u64;
    delta
        .iter()
        .rev()
        .fold(0u64, |acc, &c| acc.wrapping_mul(base).wrapping_add((c + rho) as u64))
}

fn lex_positive(delta: &[i64]) -> bool {
    delta.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

/// Advances `v` (last coordinate fastest) through `[lo, hi]^d`; false after the last.
pub(crate) fn odometer_step(v: &mut [i64], lo: i64, hi: i64) -> bool {
    for k in (0..v.len()).rev() {
        if v[k] < hi {
            v[k] += 1;
            return true;
        }
        v[k] = lo;
    }
    false
}

/// All neighbours of `x`, in lexicographic order of offsets.
pub fn neighbors(x: &Point, spec: &GraphSpec) -> Result<Vec<Point>> {
    x.check_dim(spec.dimension)?;
    let nb = Neighborhood::new(spec)?;
    nb.offsets
        .iter()
        .map(|o| {
            let v: Vec<i64> = x.coords().iter().zip(&o.delta).map(|(a, b)| a + b).collect();
            Point::new(&v)
        })
        .collect()
}

/// True iff some neighbour of `x` lies outside `region`. `x` must be inside.
pub fn is_inner_boundary(x: &Point, region: &Region, spec: &GraphSpec) -> Result<bool> {
    x.check_dim(spec.dimension)?;
    region.check_dim(spec.dimension)?;
    if !region.contains_point(x) {
        return Err(Error::NotInRegion(x.coords().to_vec()));
    }
    Ok(inner_boundary_unchecked(x.coords(), region, spec))
}

pub(crate) fn inner_boundary_unchecked(x: &[i64], region: &Region, spec: &GraphSpec) -> bool {
    let reach = spec.reach();
    match region {
        Region::FullLattice => false,
        // a neighbour leaves the box iff some coordinate can be pushed past the face
        Region::Box { center, radius } => linf_dist(x, center.coords()) > radius - reach,
        Region::HalfSpace { axis, threshold } => x[*axis] - threshold < reach,
        _ => {
            let nb = Neighborhood::new(spec).expect("validated spec");
            let mut y: Coords = Coords::from_slice(x);
            nb.offsets.iter().any(|o| {
                for (k, c) in o.changes.iter() {
                    y[*k] = x[*k] + c;
                }
                let out = !region.contains(&y);
                for (k, _) in o.changes.iter() {
                    y[*k] = x[*k];
                }
                out
            })
        }
    }
}

/// Which sites count as "the boundary" of a region for patches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Sites with a neighbour outside the region (ρ-thick for spread-out).
    Inner,
    /// The single layer `‖z − c‖∞ = r` of a box, or `z[axis] = threshold` of a half-space.
    Thin,
}

/// `B(x, s) ∩ ∂region` as a membership predicate.
#[derive(Clone, Debug)]
pub struct SurfacePatch {
    center: Point,
    s: i64,
    region: Region,
    spec: GraphSpec,
    kind: BoundaryKind,
}

impl SurfacePatch {
    pub fn new(
        x: &Point,
        s: i64,
        region: &Region,
        spec: &GraphSpec,
        kind: BoundaryKind,
    ) -> Result<Self> {
        if s < 0 {
            return Err(invalid("patch radius must be >= 0"));
        }
        if !matches!(region, Region::Box { .. } | Region::HalfSpace { .. }) {
            return Err(invalid("surface patches need a box or half-space"));
        }
        if !on_boundary(x.coords(), region, spec, kind)? {
            return Err(Error::NotOnBoundary(x.coords().to_vec()));
        }
        Ok(SurfacePatch {
            center: x.clone(),
            s,
            region: region.clone(),
            spec: spec.clone(),
            kind,
        })
    }

    pub fn contains(&self, y: &[i64]) -> bool {
        linf_dist(y, self.center.coords()) <= self.s
            && self.region.contains(y)
            && boundary_unchecked(y, &self.region, &self.spec, self.kind)
    }

    pub fn points(&self) -> Result<Vec<Point>> {
        let d = self.center.dim();
        let side = 2 * self.s as u128 + 1;
        let size = side.saturating_pow(d as u32);
        if size > MAX_ENUMERATION {
            return Err(Error::SizeGuard {
                what: "surface patch enumeration",
                size,
                limit: MAX_ENUMERATION,
            });
        }
        let mut out = Vec::new();
        let mut off: Coords = smallvec::smallvec![-self.s; d];
        let mut y: Coords = Coords::from_slice(self.center.coords());
        loop {
            for k in 0..d {
                y[k] = self.center.coords()[k] + off[k];
            }
            if self.contains(&y) {
                out.push(Point::new(&y)?);
            }
            if !odometer_step(&mut off, -self.s, self.s) {
                break;
            }
        }
        Ok(out)
    }
}

fn on_boundary(x: &[i64], region: &Region, spec: &GraphSpec, kind: BoundaryKind) -> Result<bool> {
    if !region.contains(x) {
        return Ok(false);
    }
    Ok(boundary_unchecked(x, region, spec, kind))
}

fn boundary_unchecked(x: &[i64], region: &Region, spec: &GraphSpec, kind: BoundaryKind) -> bool {
    match (kind, region) {
        (BoundaryKind::Thin, Region::Box { center, radius }) => {
            linf_dist(x, center.coords()) == *radius
        }
        (BoundaryKind::Thin, Region::HalfSpace { axis, threshold }) => x[*axis] == *threshold,
        _ => inner_boundary_unchecked(x, region, spec),
    }
}

/// `{y ∈ B(x, s) : y on the boundary}`. Boxes use the inner boundary, half-spaces
/// the thin hyperplane; see [`surface_patch_with`] to choose.
pub fn surface_patch(x: &Point, s: i64, region: &Region, spec: &GraphSpec) -> Result<Vec<Point>> {
    let kind = match region {
        Region::HalfSpace { .. } => BoundaryKind::Thin,
        _ => BoundaryKind::Inner,
    };
    surface_patch_with(x, s, region, spec, kind)
}

pub fn surface_patch_with(
    x: &Point,
    s: i64,
    region: &Region,
    spec: &GraphSpec,
    kind: BoundaryKind,
) -> Result<Vec<Point>> {
    x.check_dim(spec.dimension)?;
    region.check_dim(spec.dimension)?;
    SurfacePatch::new(x, s, region, spec, kind)?.points()
}

/// Every site of `B(center, r)` in lexicographic order.
pub fn box_points(center: &Point, r: i64) -> Result<Vec<Point>> {
    if r < 0 {
        return Err(invalid("radius must be >= 0"));
    }
    let d = center.dim();
    let size = (2 * r as u128 + 1).saturating_pow(d as u32);
    if size > MAX_ENUMERATION {
        return Err(Error::SizeGuard {
            what: "box enumeration",
            size,
            limit: MAX_ENUMERATION,
        });
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut off: Coords = smallvec::smallvec![-r; d];
    loop {
        let v: Coords = center.coords().iter().zip(&off).map(|(c, o)| c + o).collect();
        out.push(Point::new(&v)?);
        if !odometer_step(&mut off, -r, r) {
            break;
        }
    }
    Ok(out)
}
