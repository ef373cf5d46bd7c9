//! Bessel–Riesz capacity `Cap_{d−4}` by minimising the kernel energy
//! `Σ (1 + ‖x − y‖)^{4−d} μ(x) μ(y)` over probability measures.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{l2_sq_dist, odometer_step, Point, MAX_ENUMERATION};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const MAX_ITERATIONS: u64 = 2_000_000;
/// Largest point set handled by [`cap_d4`].
pub const MAX_POINTS: usize = 100_000;
/// Above this many points kernel columns are recomputed instead of stored.
pub const DENSE_LIMIT: usize = 10_000;

/// A probability measure on a finite point set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    pub support: Vec<Point>,
    pub weights: Vec<f64>,
}

impl Measure {
    pub fn new(support: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptySet);
        }
        if support.len() != weights.len() {
            return Err(invalid("support and weights differ in length"));
        }
        let d = support[0].dim();
        for p in &support {
            p.check_dim(d)?;
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        check_distinct(&support)?;
        Ok(Measure { support, weights })
    }

    pub fn point_mass(x: Point) -> Self {
        Measure {
            support: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn uniform(support: Vec<Point>) -> Result<Self> {
        let n = support.len();
        Measure::new(support, vec![1.0 / n as f64; n])
    }

    pub fn dim(&self) -> usize {
        self.support[0].dim()
    }
}

fn check_distinct(a: &[Point]) -> Result<()> {
    let mut seen = HashSet::with_capacity(a.len());
    for p in a {
        if !seen.insert(p) {
            return Err(invalid(format!("repeated point {p}")));
        }
    }
    Ok(())
}

fn check_kernel_dim(d: usize) -> Result<()> {
    if d <= 4 {
        return Err(Error::KernelDimension(d));
    }
    Ok(())
}

#[inline]
fn kernel_sq(d2: f64, d: usize) -> f64 {
    (1.0 + d2.sqrt()).powi(4 - d as i32)
}

/// `(1 + ‖x − y‖₂)^{4−d}`.
pub fn riesz_kernel(x: &Point, y: &Point, d: usize) -> Result<f64> {
    check_kernel_dim(d)?;
    x.check_dim(d)?;
    y.check_dim(d)?;
    Ok(kernel_sq(l2_sq_dist(x.coords(), y.coords()) as f64, d))
}

pub fn energy(mu: &Measure, d: usize) -> Result<f64> {
    check_kernel_dim(d)?;
    mu.support.iter().try_for_each(|p| p.check_dim(d))?;
    let s = &mu.support;
    let w = &mu.weights;
    let mut e = 0.0;
    for i in 0..s.len() {
        let mut row = 0.0;
        for j in 0..s.len() {
            row += w[j] * kernel_sq(l2_sq_dist(s[i].coords(), s[j].coords()) as f64, d);
        }
        e += w[i] * row;
    }
    Ok(e)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub capacity: f64,
    pub energy: f64,
    pub converged: bool,
    pub iterations: u64,
    /// Final Frank–Wolfe duality gap, relative to the energy.
    pub gap: f64,
    #[serde(flatten)]
    pub minimizer: Measure,
}

/// Symmetric positive definite matrix accessed by columns.
trait Gram {
    fn len(&self) -> usize;
    fn diag(&self, i: usize) -> f64;
    fn column(&self, j: usize, out: &mut [f64]);
}

struct DenseGram {
    n: usize,
    m: Vec<f64>,
}

impl Gram for DenseGram {
    fn len(&self) -> usize {
        self.n
    }
    fn diag(&self, i: usize) -> f64 {
        self.m[i * self.n + i]
    }
    fn column(&self, j: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.m[j * self.n..(j + 1) * self.n]);
    }
}

struct KernelGram<'a> {
    points: &'a [Point],
    d: usize,
}

impl Gram for KernelGram<'_> {
    fn len(&self) -> usize {
        self.points.len()
    }
    fn diag(&self, _: usize) -> f64 {
        1.0
    }
    fn column(&self, j: usize, out: &mut [f64]) {
        let y = self.points[j].coords();
        for (o, x) in out.iter_mut().zip(self.points) {
            *o = kernel_sq(l2_sq_dist(x.coords(), y) as f64, self.d);
        }
    }
}

struct Solution {
    weights: Vec<f64>,
    energy: f64,
    iterations: u64,
    converged: bool,
    gap: f64,
}

/// Pairwise Frank–Wolfe with exact line search for `min μᵀKμ` on the simplex.
///
/// Stops once both the Frank–Wolfe gap `2(E − min_i (Kμ)_i)` and the spread
/// of `Kμ` over the support are at most `tol·E`.
fn solve<G: Gram>(k: &G, mut mu: Vec<f64>, tol: f64, max_iter: u64) -> Solution {
    let n = k.len();
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|w| *w /= total);
    let mut col = vec![0.0; n];
    let mut col2 = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let full_gradient = |mu: &[f64], grad: &mut [f64], col: &mut [f64]| {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (j, &w) in mu.iter().enumerate() {
            if w > 0.0 {
                k.column(j, col);
                for (g, c) in grad.iter_mut().zip(col.iter()) {
                    *g += w * c;
                }
            }
        }
    };
    full_gradient(&mu, &mut grad, &mut col);
    let mut energy: f64 = mu.iter().zip(&grad).map(|(w, g)| w * g).sum();
    let refresh = (n as u64).max(1000);
    let mut it = 0u64;
    let mut converged = false;
    let mut gap;
    loop {
        let mut s = 0;
        let mut v = usize::MAX;
        for i in 0..n {
            if grad[i] < grad[s] {
                s = i;
            }
            if mu[i] > 0.0 && (v == usize::MAX || grad[i] > grad[v]) {
                v = i;
            }
        }
        gap = 2.0 * (energy - grad[s]);
        let spread = grad[v] - grad[s];
        if gap <= tol * energy && spread <= tol * energy {
            converged = true;
            break;
        }
        if it >= max_iter {
            break;
        }
        it += 1;
        if s == v {
            // only reachable through rounding drift in the running gradient
            full_gradient(&mu, &mut grad, &mut col);
            energy = mu.iter().zip(&grad).map(|(w, g)| w * g).sum();
            continue;
        }
        k.column(s, &mut col);
        k.column(v, &mut col2);
        let curv = k.diag(s) + k.diag(v) - 2.0 * col[v];
        let drop = curv <= 0.0 || spread >= curv * mu[v];
        let step = if drop { mu[v] } else { spread / curv };
        energy += 2.0 * step * (grad[s] - grad[v]) + step * step * curv;
        mu[s] += step;
        mu[v] = if drop { 0.0 } else { mu[v] - step };
        for i in 0..n {
            grad[i] += step * (col[i] - col2[i]);
        }
        if it % refresh == 0 {
            full_gradient(&mu, &mut grad, &mut col);
            energy = mu.iter().zip(&grad).map(|(w, g)| w * g).sum();
        }
    }
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|w| *w /= total);
    full_gradient(&mu, &mut grad, &mut col);
    let energy: f64 = mu.iter().zip(&grad).map(|(w, g)| w * g).sum();
    let min_g = grad.iter().copied().fold(f64::INFINITY, f64::min);
    Solution {
        weights: mu,
        energy,
        iterations: it,
        converged,
        gap: 2.0 * (energy - min_g) / energy,
    }
}

fn gram_for(points: &[Point], d: usize) -> Box<dyn Gram + '_> {
    let n = points.len();
    if n <= DENSE_LIMIT {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = kernel_sq(l2_sq_dist(points[i].coords(), points[j].coords()) as f64, d);
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        Box::new(DenseGram { n, m })
    } else {
        Box::new(KernelGram { points, d })
    }
}

impl Gram for Box<dyn Gram + '_> {
    fn len(&self) -> usize {
        (**self).len()
    }
    fn diag(&self, i: usize) -> f64 {
        (**self).diag(i)
    }
    fn column(&self, j: usize, out: &mut [f64]) {
        (**self).column(j, out)
    }
}

/// `Cap_{d−4}(A)` started from the uniform measure.
pub fn cap_d4(a: &[Point], d: usize, tol: f64) -> Result<CapacityResult> {
    let n = a.len();
    cap_d4_from(a, d, tol, &vec![1.0; n.max(1)])
}

/// As [`cap_d4`], started from `init` (nonnegative, not all zero).
pub fn cap_d4_from(a: &[Point], d: usize, tol: f64, init: &[f64]) -> Result<CapacityResult> {
    check_kernel_dim(d)?;
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(tol > 0.0) {
        return Err(invalid("tol must be > 0"));
    }
    if a.len() > MAX_POINTS {
        return Err(Error::SizeGuard {
            what: "capacity points",
            size: a.len() as u128,
            limit: MAX_POINTS as u128,
        });
    }
    a.iter().try_for_each(|p| p.check_dim(d))?;
    check_distinct(a)?;
    if init.len() != a.len() || init.iter().any(|w| !(*w >= 0.0)) || init.iter().sum::<f64>() <= 0.0 {
        return Err(invalid("initial weights must be nonnegative with positive sum"));
    }
    let gram = gram_for(a, d);
    let sol = solve(&gram, init.to_vec(), tol, MAX_ITERATIONS);
    Ok(CapacityResult {
        capacity: 1.0 / sol.energy,
        energy: sol.energy,
        converged: sol.converged,
        iterations: sol.iterations,
        gap: sol.gap,
        minimizer: Measure {
            support: a.to_vec(),
            weights: sol.weights,
        },
    })
}

/// One orbit of the box `B(0, r)` under coordinate permutations and sign flips.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    /// Nonincreasing absolute coordinates.
    pub representative: Point,
    pub size: u64,
    /// Total minimiser mass on the orbit.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallCapacity {
    pub dimension: usize,
    pub radius: i64,
    pub points: u64,
    pub capacity: f64,
    pub energy: f64,
    pub converged: bool,
    pub iterations: u64,
    pub gap: f64,
    pub orbits: Vec<Orbit>,
}

impl BallCapacity {
    /// The minimiser as a measure on every point of the box.
    pub fn minimizer(&self) -> Result<Measure> {
        if self.points > MAX_POINTS as u64 {
            return Err(Error::SizeGuard {
                what: "expanded ball measure",
                size: self.points as u128,
                limit: MAX_POINTS as u128,
            });
        }
        let d = self.dimension;
        let index = orbit_index(&self.orbits, d);
        let mut support = Vec::with_capacity(self.points as usize);
        let mut weights = Vec::with_capacity(self.points as usize);
        let r = self.radius;
        let mut v = vec![-r; d];
        loop {
            let j = index[&pack(&v)];
            let o = &self.orbits[j];
            support.push(Point::new(&v)?);
            weights.push(o.weight / o.size as f64);
            if !odometer_step(&mut v, -r, r) {
                break;
            }
        }
        Ok(Measure { support, weights })
    }
}

fn pack(v: &[i64]) -> u64 {
    let mut a: smallvec::SmallVec<[u64; 12]> = v.iter().map(|x| x.unsigned_abs()).collect();
    a.sort_unstable_by(|x, y| y.cmp(x));
    a.iter().fold(0u64, |acc, &x| acc << 5 | x)
}

fn orbit_index(orbits: &[Orbit], _d: usize) -> HashMap<u64, usize> {
    orbits
        .iter()
        .enumerate()
        .map(|(j, o)| (pack(o.representative.coords()), j))
        .collect()
}

fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

/// Nonincreasing tuples in `[0, r]^d`, lexicographically decreasing.
fn orbit_representatives(d: usize, r: i64) -> Vec<Vec<i64>> {
    fn rec(d: usize, max: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for v in (0..=max).rev() {
            cur.push(v);
            rec(d, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, r, &mut Vec::with_capacity(d), &mut out);
    out
}

fn orbit_size(rep: &[i64]) -> u64 {
    let d = rep.len() as u64;
    let mut size = factorial(d);
    let mut i = 0;
    while i < rep.len() {
        let mut j = i;
        while j < rep.len() && rep[j] == rep[i] {
            j += 1;
        }
        size /= factorial((j - i) as u64);
        i = j;
    }
    size << rep.iter().filter(|&&x| x != 0).count()
}

/// `Cap_{d−4}(B(0, r))`.
///
/// The energy is invariant under the symmetries of the box and the minimiser
/// is unique, so it is constant on orbits; the problem is solved over orbit
/// masses with the orbit-averaged kernel, which has `C(r + d, d)` unknowns
/// instead of `(2r + 1)^d`.
pub fn ball_capacity(r: i64, d: usize, tol: f64) -> Result<BallCapacity> {
    check_kernel_dim(d)?;
    if r < 0 {
        return Err(invalid("radius must be >= 0"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol must be > 0"));
    }
    if r >= 32 || d > 12 {
        return Err(Error::SizeGuard {
            what: "ball radius",
            size: r as u128,
            limit: 31,
        });
    }
    let side = (2 * r + 1) as u128;
    let points = side.checked_pow(d as u32).unwrap_or(u128::MAX);
    if points > MAX_ENUMERATION {
        return Err(Error::SizeGuard {
            what: "ball points",
            size: points,
            limit: MAX_ENUMERATION,
        });
    }
    let reps = orbit_representatives(d, r);
    let m = reps.len();
    if m > MAX_POINTS {
        return Err(Error::SizeGuard {
            what: "ball orbits",
            size: m as u128,
            limit: MAX_POINTS as u128,
        });
    }
    let sizes: Vec<u64> = reps.iter().map(|x| orbit_size(x)).collect();
    let index: HashMap<u64, usize> = reps.iter().enumerate().map(|(j, x)| (pack(x), j)).collect();
    let max_d2 = d * (2 * r as usize).pow(2);
    let table: Vec<f64> = (0..=max_d2).map(|q| kernel_sq(q as f64, d)).collect();
    // acc[i][j] = Σ_{y ∈ O_j} G(x_i − y)
    let mut acc = vec![0.0; m * m];
    let mut v = vec![-r; d];
    loop {
        let j = index[&pack(&v)];
        for (i, x) in reps.iter().enumerate() {
            let q: i64 = x.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
            acc[i * m + j] += table[q as usize];
        }
        if !odometer_step(&mut v, -r, r) {
            break;
        }
    }
    let mut g = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let a = acc[i * m + j] / sizes[j] as f64;
            let b = acc[j * m + i] / sizes[i] as f64;
            g[i * m + j] = 0.5 * (a + b);
        }
    }
    let init: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let sol = solve(&DenseGram { n: m, m: g }, init, tol, MAX_ITERATIONS);
    let orbits = reps
        .iter()
        .zip(&sizes)
        .zip(&sol.weights)
        .map(|((x, &size), &weight)| {
            Ok(Orbit {
                representative: Point::new(x)?,
                size,
                weight,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BallCapacity {
        dimension: d,
        radius: r,
        points: points as u64,
        capacity: 1.0 / sol.energy,
        energy: sol.energy,
        converged: sol.converged,
        iterations: sol.iterations,
        gap: sol.gap,
        orbits,
    })
}

/// Reads `"d n"` followed by `n` lines of `d` integers.
pub fn read_point_file<R: BufRead>(r: R) -> Result<(usize, Vec<Point>)> {
    let mut lines = r.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let header = lines.next().ok_or_else(|| invalid("empty point file"))??;
    let hv: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| invalid(format!("bad header {header:?}"))))
        .collect::<Result<_>>()?;
    let [d, n] = hv[..] else {
        return Err(invalid(format!("header must be \"d n\", got {header:?}")));
    };
    let mut pts = Vec::with_capacity(n);
    for line in lines.by_ref().take(n) {
        let line = line?;
        let c: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| invalid(format!("bad coordinate in {line:?}"))))
            .collect::<Result<_>>()?;
        if c.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: c.len(),
            });
        }
        pts.push(Point::new(&c)?);
    }
    if pts.len() != n {
        return Err(invalid(format!("expected {n} points, found {}", pts.len())));
    }
    if lines.next().is_some() {
        return Err(invalid("trailing lines after the declared points"));
    }
    Ok((d, pts))
}

pub fn write_point_file<W: Write>(mut w: W, d: usize, pts: &[Point]) -> Result<()> {
    writeln!(w, "{d} {}", pts.len())?;
    for p in pts {
        let s: Vec<String> = p.coords().iter().map(|c| c.to_string()).collect();
        writeln!(w, "{}", s.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::box_points;

    fn pt(c: &[i64]) -> Point {
        Point::new(c).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let o = Point::origin(7);
        assert_eq!(riesz_kernel(&o, &o, 7).unwrap(), 1.0);
        assert_eq!(riesz_kernel(&o, &Point::unit(7, 2, -1), 7).unwrap(), 0.125);
        let mut y = vec![0; 8];
        y[0] = 3;
        y[1] = 4;
        let v = riesz_kernel(&Point::origin(8), &pt(&y), 8).unwrap();
        assert!((v - 1.0 / 1296.0).abs() < 1e-18);
        assert!(matches!(riesz_kernel(&o, &o, 4), Err(Error::KernelDimension(4))));
    }

    #[test]
    fn two_point_energy_by_hand() {
        let a = vec![Point::origin(7), pt(&[2, 0, 0, 0, 0, 0, 0])];
        let e = energy(&Measure::uniform(a).unwrap(), 7).unwrap();
        assert!((e - 0.5 * (1.0 + 3f64.powi(-3))).abs() < 1e-15);
    }

    #[test]
    fn single_and_two_point_capacity() {
        let r = cap_d4(&[Point::origin(9)], 9, DEFAULT_TOL).unwrap();
        assert_eq!(r.capacity, 1.0);
        assert!(r.converged);
        let a = vec![Point::origin(7), Point::unit(7, 0, 1)];
        let r = cap_d4(&a, 7, DEFAULT_TOL).unwrap();
        assert!((r.capacity - 16.0 / 9.0).abs() < 1e-9);
    }

    #[test]
    fn recomputed_energy_matches() {
        let a: Vec<Point> = (0..6).map(|i| pt(&[i, i * i % 5, 0, 1, 0, 0])).collect();
        let r = cap_d4(&a, 6, DEFAULT_TOL).unwrap();
        let e = energy(&r.minimizer, 6).unwrap();
        assert!(((e - r.energy) / e).abs() < 1e-9);
        assert!((r.capacity * r.energy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicates_and_bad_input_rejected() {
        let a = vec![Point::origin(5), Point::origin(5)];
        assert!(cap_d4(&a, 5, 1e-9).is_err());
        assert!(cap_d4(&[], 5, 1e-9).is_err());
        assert!(cap_d4(&[Point::origin(5)], 5, 0.0).is_err());
        assert!(Measure::new(vec![Point::origin(5)], vec![0.5]).is_err());
    }

    #[test]
    fn orbit_sizes_cover_the_box() {
        for (d, r) in [(5usize, 1i64), (7, 2), (7, 4), (3, 3)] {
            let reps = orbit_representatives(d, r);
            let total: u64 = reps.iter().map(|x| orbit_size(x)).sum();
            assert_eq!(total, (2 * r as u64 + 1).pow(d as u32));
        }
        assert_eq!(orbit_representatives(7, 4).len(), 330);
    }

    #[test]
    fn ball_matches_direct_solve() {
        for (d, r) in [(5usize, 1i64), (7, 1), (5, 2)] {
            let b = ball_capacity(r, d, 1e-10).unwrap();
            let pts = box_points(&Point::origin(d), r).unwrap();
            let c = cap_d4(&pts, d, 1e-10).unwrap();
            assert!(
                ((b.capacity - c.capacity) / c.capacity).abs() < 1e-8,
                "d={d} r={r}: {} vs {}",
                b.capacity,
                c.capacity
            );
            let mu = b.minimizer().unwrap();
            let e = energy(&mu, d).unwrap();
            assert!(((e - b.energy) / e).abs() < 1e-9);
        }
        assert_eq!(ball_capacity(0, 7, 1e-9).unwrap().capacity, 1.0);
    }

    #[test]
    fn point_file_round_trip() {
        let pts = vec![pt(&[1, -2, 3]), pt(&[0, 0, 0])];
        let mut buf = Vec::new();
        write_point_file(&mut buf, 3, &pts).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "3 2\n1 -2 3\n0 0 0\n");
        let (d, back) = read_point_file(&buf[..]).unwrap();
        assert_eq!((d, back), (3, pts));
        assert!(read_point_file(&b"3 2\n1 2 3\n"[..]).is_err());
        assert!(read_point_file(&b"2 1\n1 2 3\n"[..]).is_err());
    }

    #[test]
    fn json_shape() {
        let r = cap_d4(&[Point::origin(5)], 5, 1e-9).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for k in ["capacity", "energy", "converged", "iterations", "support", "weights"] {
            assert!(v.get(k).is_some(), "{k}");
        }
    }
}
