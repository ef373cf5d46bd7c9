//! Density conditions on pioneer points, K-regular and line-good points.
//!
//! Logarithms are natural and scales start at `s = 3`: below that `(ln s)^7`
//! pushes every threshold under 2.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flow::{disjoint_paths, Disjointness};
use crate::lattice::{inner_boundary_unchecked, linf_dist, Connectivity, GraphSpec, Point, Region};
use crate::montecarlo::Sampler;
use crate::percolation::{explore_from, pioneers, Cluster, Configuration};
use crate::stats::Estimate;

pub const DEFAULT_K: i64 = 4;
/// Largest region explored by [`local_density_check`].
pub const LOCAL_VOLUME_LIMIT: u128 = 1 << 21;

/// Exponent of `s` in the surface threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceExponent {
    #[default]
    Two,
    Three,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Volume,
    Surface,
    Paths,
}

fn thresholds(s: i64, log_power: i32, surface: SurfaceExponent) -> (f64, f64) {
    let sf = s as f64;
    let l = sf.ln().powi(log_power);
    let e = match surface {
        SurfaceExponent::Two => 2,
        SurfaceExponent::Three => 3,
    };
    (sf.powi(4) * l, sf.powi(e) * l)
}

fn check_scale(s: i64) -> Result<()> {
    if s < 3 {
        return Err(invalid(format!("density checks need s >= 3, got {s}")));
    }
    Ok(())
}

/// Outcome of the global density condition at one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCheck {
    pub s: i64,
    pub volume: u64,
    pub surface: u64,
    pub volume_threshold: f64,
    pub surface_threshold: f64,
    pub pass: bool,
    pub failed: Option<Condition>,
}

fn verdict(s: i64, volume: u64, surface: u64, exp: SurfaceExponent) -> DensityCheck {
    let (vt, st) = thresholds(s, 7, exp);
    let failed = if volume as f64 > vt {
        Some(Condition::Volume)
    } else if surface as f64 > st {
        Some(Condition::Surface)
    } else {
        None
    };
    DensityCheck {
        s,
        volume,
        surface,
        volume_threshold: vt,
        surface_threshold: st,
        pass: failed.is_none(),
        failed,
    }
}

fn box_of(cluster: &Cluster) -> Result<(Point, i64)> {
    cluster
        .region()
        .as_box()
        .map(|(c, r)| (c.clone(), r))
        .ok_or(Error::RegionNotBox)
}

fn check_pioneer(cluster: &Cluster, spec: &GraphSpec, x: &Point) -> Result<()> {
    x.check_dim(cluster.dim())?;
    if !cluster.contains(x.coords()) {
        return Err(Error::NotInRegion(x.coords().to_vec()));
    }
    if !inner_boundary_unchecked(x.coords(), cluster.region(), spec) {
        return Err(Error::NotOnBoundary(x.coords().to_vec()));
    }
    Ok(())
}

/// `|C ∩ B(x, s)| ≤ s⁴(ln s)⁷` and `|C ∩ B(x, s) ∩ ∂B| ≤ s²(ln s)⁷` (or `s³`).
pub fn density_check(
    cluster: &Cluster,
    spec: &GraphSpec,
    x: &Point,
    s: i64,
    exp: SurfaceExponent,
) -> Result<DensityCheck> {
    check_scale(s)?;
    box_of(cluster)?;
    check_pioneer(cluster, spec, x)?;
    let (mut vol, mut surf) = (0u64, 0u64);
    for v in cluster.vertices() {
        if linf_dist(v, x.coords()) <= s {
            vol += 1;
            if inner_boundary_unchecked(v, cluster.region(), spec) {
                surf += 1;
            }
        }
    }
    Ok(verdict(s, vol, surf, exp))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub point: Point,
    pub s: i64,
    pub condition: Condition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub center: Point,
    pub r: i64,
    pub k: i64,
    pub pioneers: Vec<Point>,
    pub regular: Vec<Point>,
    /// Greedy lexicographic packing of `regular` at L∞ distance ≥ 2K.
    pub separated_regular: Vec<Point>,
    pub line_good: Vec<Point>,
    /// Outer endpoints `x′` of the segments of `line_good`, in the same order.
    pub projected_line_good: Vec<Point>,
    /// First failing scale of each irregular pioneer.
    pub failures: Vec<Failure>,
}

/// Pioneers that pass [`density_check`] at every integer `s ∈ [K, 2r]`.
pub fn classify_regular(
    cluster: &Cluster,
    spec: &GraphSpec,
    k: i64,
    exp: SurfaceExponent,
) -> Result<RegularityReport> {
    if k < 3 {
        return Err(invalid(format!("K must be >= 3, got {k}")));
    }
    let (center, r) = box_of(cluster)?;
    let pio = pioneers(cluster, spec)?;
    let top = (2 * r).max(0) as usize;
    let on_surface: Vec<bool> = cluster
        .vertices()
        .map(|v| inner_boundary_unchecked(v, cluster.region(), spec))
        .collect();
    let mut regular = Vec::new();
    let mut failures = Vec::new();
    let mut vol = vec![0u64; top + 1];
    let mut surf = vec![0u64; top + 1];
    for x in &pio {
        vol.iter_mut().for_each(|c| *c = 0);
        surf.iter_mut().for_each(|c| *c = 0);
        for (v, &b) in cluster.vertices().zip(&on_surface) {
            let t = linf_dist(v, x.coords()) as usize;
            if t <= top {
                vol[t] += 1;
                if b {
                    surf[t] += 1;
                }
            }
        }
        for t in 1..=top {
            vol[t] += vol[t - 1];
            surf[t] += surf[t - 1];
        }
        let failure = (k..=2 * r).find_map(|s| {
            let c = verdict(s, vol[s as usize], surf[s as usize], exp);
            c.failed.map(|condition| Failure {
                point: x.clone(),
                s,
                condition,
            })
        });
        match failure {
            Some(f) => failures.push(f),
            None => regular.push(x.clone()),
        }
    }
    let mut separated: Vec<Point> = Vec::new();
    for x in &regular {
        if separated.iter().all(|y| linf_dist(x.coords(), y.coords()) >= 2 * k) {
            separated.push(x.clone());
        }
    }
    Ok(RegularityReport {
        center,
        r,
        k,
        pioneers: pio,
        regular,
        separated_regular: separated,
        line_good: Vec::new(),
        projected_line_good: Vec::new(),
        failures,
    })
}

/// Outward face of a boundary point: lowest axis with `|x_k − c_k| = r`, and
/// the sign of `x_k − c_k`.
pub fn outward_face(x: &Point, center: &Point, r: i64) -> Option<(usize, i64)> {
    x.coords()
        .iter()
        .zip(center.coords())
        .position(|(a, c)| (a - c).abs() == r)
        .map(|k| (k, (x.coords()[k] - center.coords()[k]).signum()))
}

/// Marks the separated regular points whose outward segment of `k_line` unit
/// edges is fully open.
pub fn line_good(cfg: &Configuration<'_>, report: &RegularityReport, k_line: i64) -> Result<RegularityReport> {
    if cfg.spec().connectivity != Connectivity::NearestNeighbor {
        return Err(invalid("line-good points are defined for nearest-neighbour lattices"));
    }
    if k_line < 1 {
        return Err(invalid("segment length must be >= 1"));
    }
    let mut out = report.clone();
    out.line_good.clear();
    out.projected_line_good.clear();
    for x in &report.separated_regular {
        let (axis, sign) = outward_face(x, &report.center, report.r)
            .ok_or_else(|| Error::NotOnBoundary(x.coords().to_vec()))?;
        let mut a: Vec<i64> = x.coords().to_vec();
        let mut open = true;
        for _ in 0..k_line {
            let mut b = a.clone();
            b[axis] += sign;
            if !cfg.open_adjacent(&a, &b) {
                open = false;
                break;
            }
            a = b;
        }
        if open {
            out.line_good.push(x.clone());
            out.projected_line_good.push(Point::new(&a)?);
        }
    }
    Ok(out)
}

/// Options of [`local_density_check`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalOptions {
    pub surface: SurfaceExponent,
    pub paths: Disjointness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalDensity {
    pub s: i64,
    /// Largest `|C(y; R) ∩ B(x, s)|` over `y ∈ B(x, s)`, `R = B(x, s^d) ∩ B(0, r)`.
    pub max_volume: u64,
    /// Largest `|C(y; R) ∩ B(x, s) ∩ ∂B(0, r)|` over surface points `y`.
    pub max_surface: u64,
    /// Disjoint open paths in `R` from `B(x, s)` to `∂B(x, s^d)`.
    pub paths: u64,
    pub volume_threshold: f64,
    pub surface_threshold: f64,
    pub paths_threshold: f64,
    pub region_volume: u64,
    pub failed: Vec<Condition>,
    pub pass: bool,
}

/// The local density condition at `x ∈ ∂B(0, r)` and scale `s`.
///
/// Explores every bond of `B(x, s^d) ∩ B(0, r)`; returns
/// [`Error::Infeasible`] when that region has more than
/// [`LOCAL_VOLUME_LIMIT`] sites.
pub fn local_density_check(
    cfg: &Configuration<'_>,
    x: &Point,
    s: i64,
    r: i64,
    opts: LocalOptions,
) -> Result<LocalDensity> {
    check_scale(s)?;
    let spec = cfg.spec();
    let d = spec.dimension;
    x.check_dim(d)?;
    let ball = Region::origin_box(d, r);
    if !ball.contains_point(x) || !inner_boundary_unchecked(x.coords(), &ball, spec) {
        return Err(Error::NotOnBoundary(x.coords().to_vec()));
    }
    // s^d, saturated once it covers the whole box
    let mut sd: i64 = 1;
    for _ in 0..d {
        sd = sd.saturating_mul(s).min(4 * r + 2);
    }
    let lo: Vec<i64> = x.coords().iter().map(|&c| (c - sd).max(-r)).collect();
    let hi: Vec<i64> = x.coords().iter().map(|&c| (c + sd).min(r)).collect();
    let mut volume: u128 = 1;
    for k in 0..d {
        volume = volume.saturating_mul((hi[k] - lo[k] + 1) as u128);
    }
    if volume > LOCAL_VOLUME_LIMIT {
        return Err(Error::Infeasible {
            what: "local density region",
            size: volume,
            limit: LOCAL_VOLUME_LIMIT,
        });
    }
    let n = volume as usize;
    let mut stride = vec![1usize; d];
    for k in (0..d.saturating_sub(1)).rev() {
        stride[k] = stride[k + 1] * (hi[k + 1] - lo[k + 1] + 1) as usize;
    }
    let index = |v: &[i64]| -> Option<usize> {
        let mut i = 0;
        for k in 0..d {
            if v[k] < lo[k] || v[k] > hi[k] {
                return None;
            }
            i += (v[k] - lo[k]) as usize * stride[k];
        }
        Some(i)
    };
    let mut pts: Vec<i64> = Vec::with_capacity(n * d);
    let mut v = lo.clone();
    'fill: loop {
        pts.extend_from_slice(&v);
        for k in (0..d).rev() {
            if v[k] < hi[k] {
                v[k] += 1;
                continue 'fill;
            }
            v[k] = lo[k];
        }
        break;
    }
    let point = |i: usize| &pts[i * d..(i + 1) * d];

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut edges = Vec::new();
    let offsets = &cfg.lattice().neighborhood().offsets;
    let mut w = vec![0i64; d];
    for i in 0..n {
        let a = point(i);
        for off in offsets.iter().filter(|o| o.forward) {
            w.copy_from_slice(a);
            for &(k, c) in &off.changes {
                w[k] += c;
            }
            if let Some(j) = index(&w) {
                if cfg.open_adjacent(a, &w) {
                    edges.push((i, j));
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
        }
    }
    let inner: Vec<bool> = (0..n).map(|i| linf_dist(point(i), x.coords()) <= s).collect();
    let surf: Vec<bool> = (0..n)
        .map(|i| inner[i] && inner_boundary_unchecked(point(i), &ball, spec))
        .collect();
    let mut vol_count = vec![0u64; n];
    let mut surf_count = vec![0u64; n];
    for i in 0..n {
        if inner[i] {
            let root = find(&mut parent, i);
            vol_count[root] += 1;
            if surf[i] {
                surf_count[root] += 1;
            }
        }
    }
    let max_volume = vol_count.iter().copied().max().unwrap_or(0);
    let max_surface = surf_count.iter().copied().max().unwrap_or(0);
    let from: Vec<usize> = (0..n).filter(|&i| inner[i]).collect();
    let to: Vec<usize> = (0..n)
        .filter(|&i| linf_dist(point(i), x.coords()) == sd)
        .collect();
    let paths = disjoint_paths(n, &edges, &from, &to, opts.paths);

    let (vt, st) = thresholds(s, 4, opts.surface);
    let pt = (s as f64).ln().powi(3);
    let mut failed = Vec::new();
    if max_volume as f64 > vt {
        failed.push(Condition::Volume);
    }
    if max_surface as f64 > st {
        failed.push(Condition::Surface);
    }
    if paths as f64 > pt {
        failed.push(Condition::Paths);
    }
    Ok(LocalDensity {
        s,
        max_volume,
        max_surface,
        paths,
        volume_threshold: vt,
        surface_threshold: st,
        paths_threshold: pt,
        region_volume: n as u64,
        pass: failed.is_empty(),
        failed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularFraction {
    pub r: i64,
    pub k: i64,
    pub n: u64,
    pub n_truncated: u64,
    pub m_values: Vec<u64>,
    /// `P(X_r ≥ M, X_r^{K-reg} ≤ X_r / 2)` for each `M`.
    pub events: Vec<Estimate>,
    pub mean_pioneers: f64,
    pub mean_regular: f64,
    pub mean_line_good: f64,
    pub max_pioneers: u64,
}

#[derive(Clone, Debug, Default)]
struct FractionAcc {
    events: Vec<u64>,
    trunc: u64,
    x: u64,
    reg: u64,
    lg: u64,
    max_x: u64,
}

/// Frequency of many pioneers but few regular ones, over `n` replicas of
/// `C(0; B(0, r))`. Line-good segments have length `K`.
pub fn regular_fraction_experiment(
    smp: &Sampler,
    r: i64,
    k: i64,
    m_values: &[u64],
    n: u64,
) -> Result<RegularFraction> {
    if n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    if r < 1 || k < 3 {
        return Err(invalid("need r >= 1 and K >= 3"));
    }
    if m_values.is_empty() || m_values.contains(&0) {
        return Err(invalid("M values must be >= 1"));
    }
    let d = smp.dim();
    let region = Region::origin_box(d, r);
    let origin = [Point::origin(d)];
    let spec = smp.spec().clone();
    let step = |acc: &mut FractionAcc, i: u64| -> Result<()> {
        let cfg = smp.lattice.configuration(smp.master_seed, i);
        let cluster = explore_from(&cfg, &origin, &region, smp.budget, false)?;
        if cluster.truncated() {
            acc.trunc += 1;
        }
        let pio = pioneers(&cluster, &spec)?;
        if pio.is_empty() {
            return Ok(());
        }
        let report = classify_regular(&cluster, &spec, k, SurfaceExponent::Two)?;
        let report = line_good(&cfg, &report, k)?;
        let (x, reg) = (report.pioneers.len() as u64, report.regular.len() as u64);
        acc.x += x;
        acc.reg += reg;
        acc.lg += report.line_good.len() as u64;
        acc.max_x = acc.max_x.max(x);
        for (e, &m) in acc.events.iter_mut().zip(m_values) {
            if x >= m && 2 * reg <= x {
                *e += 1;
            }
        }
        Ok(())
    };
    let (acc, err) = smp.exec.fold(
        n,
        || (),
        || {
            (
                FractionAcc {
                    events: vec![0; m_values.len()],
                    ..Default::default()
                },
                None,
            )
        },
        |_, (acc, err): &mut (FractionAcc, Option<String>), i| {
            if err.is_none() {
                if let Err(e) = step(acc, i) {
                    *err = Some(e.to_string());
                }
            }
        },
        |(mut a, ea), (b, eb)| {
            for (x, y) in a.events.iter_mut().zip(&b.events) {
                *x += y;
            }
            a.trunc += b.trunc;
            a.x += b.x;
            a.reg += b.reg;
            a.lg += b.lg;
            a.max_x = a.max_x.max(b.max_x);
            (a, ea.or(eb))
        },
    );
    if let Some(e) = err {
        return Err(invalid(e));
    }
    let nf = n as f64;
    Ok(RegularFraction {
        r,
        k,
        n,
        n_truncated: acc.trunc,
        m_values: m_values.to_vec(),
        events: acc
            .events
            .iter()
            .map(|&h| Estimate::from_counts(h, 0, n))
            .collect(),
        mean_pioneers: acc.x as f64 / nf,
        mean_regular: acc.reg as f64 / nf,
        mean_line_good: acc.lg as f64 / nf,
        max_pioneers: acc.max_x,
    })
}
