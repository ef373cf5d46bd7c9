//! Replica-parallel estimators of connection probabilities and capacity ratios.
//!
//! Replica `i` of a numerator stream is configuration `(master_seed, i)`;
//! denominator streams use `(master_seed, i + 2^31)`. Two estimators run with
//! the same seed on the same stream therefore see the same configurations.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::keys::{child_seed, DENOMINATOR_OFFSET};
use crate::lattice::{inner_boundary_unchecked, BoundaryKind, GraphSpec, Point, Region, SurfacePatch};
use crate::percolation::{bfs, Arena, Flow, Lattice, Probe, ProbeVerdict, DEFAULT_BUDGET};
use crate::stats::{Estimate, RatioEstimate};

/// Shared context of an experiment: lattice, seed, budget and executor.
#[derive(Clone, Debug)]
pub struct Sampler {
    pub lattice: Lattice,
    pub master_seed: u64,
    pub budget: usize,
    pub exec: Exec,
}

impl Sampler {
    pub fn new(spec: GraphSpec, master_seed: u64) -> Result<Self> {
        Ok(Sampler {
            lattice: Lattice::new(spec)?,
            master_seed,
            budget: DEFAULT_BUDGET,
            exec: Exec::default(),
        })
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_seed(&self, master_seed: u64) -> Self {
        Sampler {
            master_seed,
            ..self.clone()
        }
    }

    pub fn spec(&self) -> &GraphSpec {
        self.lattice.spec()
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    fn check_points(&self, pts: &[Point]) -> Result<()> {
        pts.iter().try_for_each(|p| p.check_dim(self.dim()))
    }

    fn check_n(&self, n: u64) -> Result<()> {
        if n == 0 || n > DENOMINATOR_OFFSET {
            return Err(invalid(format!("n must be in 1..=2^31, got {n}")));
        }
        if self.budget == 0 {
            return Err(invalid("budget must be >= 1"));
        }
        Ok(())
    }

    /// Bernoulli estimate of `sources ↔ targets` inside `region` over replicas
    /// `offset..offset+n`.
    pub(crate) fn connection(
        &self,
        sources: &[Point],
        targets: &[Point],
        region: &Region,
        n: u64,
        offset: u64,
    ) -> Result<Estimate> {
        self.check_n(n)?;
        if sources.is_empty() {
            return Err(Error::EmptySet);
        }
        self.check_points(sources)?;
        self.check_points(targets)?;
        for s in sources {
            if !region.contains_point(s) {
                return Err(Error::NotInRegion(s.coords().to_vec()));
            }
        }
        if sources.iter().any(|s| targets.contains(s)) {
            return Ok(Estimate::exact(1.0, n));
        }
        let srcs: Vec<&[i64]> = sources.iter().map(|p| p.coords()).collect();
        let (hits, trunc) = self.exec.fold(
            n,
            || Probe::new(self.dim(), targets),
            || (0u64, 0u64),
            |probe, acc, i| {
                let cfg = self.lattice.configuration(self.master_seed, offset + i);
                match probe.run(&cfg, &srcs, region, self.budget) {
                    ProbeVerdict::Connected(_) => acc.0 += 1,
                    ProbeVerdict::Truncated => acc.1 += 1,
                    ProbeVerdict::Disconnected => {}
                }
            },
            |a, b| (a.0 + b.0, a.1 + b.1),
        );
        Ok(Estimate::from_counts(hits, trunc, n))
    }
}

/// `τ(z) = P(0 ↔ z)` on the full lattice.
pub fn estimate_tau(s: &Sampler, z: &Point, n: u64) -> Result<Estimate> {
    s.connection(&[Point::origin(s.dim())], std::slice::from_ref(z), &Region::FullLattice, n, 0)
}

/// `P(z ↔ A)` on the full lattice, exploring from `z`.
pub fn estimate_hit(s: &Sampler, a: &[Point], z: &Point, n: u64) -> Result<Estimate> {
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    s.connection(std::slice::from_ref(z), a, &Region::FullLattice, n, 0)
}

/// How the denominator of a ratio is sampled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Denominator on replicas offset by `2^31`: independent of the numerator.
    #[default]
    Independent,
    /// Denominator on the numerator's own replicas.
    Paired,
}

impl Pairing {
    fn offset(self) -> u64 {
        match self {
            Pairing::Independent => DENOMINATOR_OFFSET,
            Pairing::Paired => 0,
        }
    }
}

/// The reference point `a₀` of a set: its lexicographically smallest element.
/// Ratios are taken against `τ(z − a₀)`, so translating `A` and `z` together,
/// or listing `A` in another order, leaves them unchanged.
pub(crate) fn anchor(a: &[Point]) -> Result<&Point> {
    a.iter().min().ok_or(Error::EmptySet)
}

/// Checks `‖z − a₀‖ ≥ 2·max_a ‖a − a₀‖` (Euclidean).
pub fn check_far(a: &[Point], z: &Point) -> Result<()> {
    let a0 = anchor(a)?;
    let spread = a
        .iter()
        .map(|p| p.sub(a0).map(|v| v.l2()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let dist = z.sub(a0)?.l2();
    if dist < 2.0 * spread {
        return Err(invalid(format!(
            "need ‖z − a₀‖ ≥ 2·max‖a − a₀‖, got {dist:.3} < {:.3}",
            2.0 * spread
        )));
    }
    Ok(())
}

/// `P(a₀ ↔ z)` on the given stream.
fn anchored_tau(s: &Sampler, a0: &Point, z: &Point, n: u64, offset: u64) -> Result<Estimate> {
    s.connection(std::slice::from_ref(a0), std::slice::from_ref(z), &Region::FullLattice, n, offset)
}

/// `P(z ↔ A) / τ(z − a₀)`, the finite-`z` p-capacity ratio.
pub fn estimate_pcap(s: &Sampler, a: &[Point], z: &Point, n: u64) -> Result<RatioEstimate> {
    estimate_pcap_with(s, a, z, n, Pairing::Independent)
}

pub fn estimate_pcap_with(
    s: &Sampler,
    a: &[Point],
    z: &Point,
    n: u64,
    pairing: Pairing,
) -> Result<RatioEstimate> {
    check_far(a, z)?;
    let num = estimate_hit(s, a, z, n)?;
    let den = anchored_tau(s, anchor(a)?, z, n, pairing.offset())?;
    RatioEstimate::new(num, den)
}

/// `P(A ↔ z + B) / τ(z − a₀)`.
pub fn estimate_two_sets(
    s: &Sampler,
    a: &[Point],
    b: &[Point],
    z: &Point,
    n: u64,
) -> Result<RatioEstimate> {
    if b.is_empty() {
        return Err(Error::EmptySet);
    }
    let shifted: Vec<Point> = b.iter().map(|p| p.add(z)).collect::<Result<_>>()?;
    let mut union = a.to_vec();
    union.extend(b.iter().cloned());
    check_far(&union, z)?;
    let num = s.connection(&shifted, a, &Region::FullLattice, n, 0)?;
    let den = anchored_tau(s, anchor(a)?, z, n, DENOMINATOR_OFFSET)?;
    RatioEstimate::new(num, den)
}

/// `P(0 ↔ ∂B(0, r))`, explored inside `B(0, r)`.
pub fn estimate_one_arm(s: &Sampler, r: i64, n: u64) -> Result<Estimate> {
    estimate_one_arm_set(s, &[Point::origin(s.dim())], r, n)
}

/// `P(A ↔ ∂B(0, r))` for `A ⊂ B(0, r/2)`.
pub fn estimate_one_arm_set(s: &Sampler, a: &[Point], r: i64, n: u64) -> Result<Estimate> {
    s.check_n(n)?;
    if r < 1 {
        return Err(invalid("one-arm radius must be >= 1"));
    }
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    s.check_points(a)?;
    if a.iter().any(|p| 2 * p.linf() > r) {
        return Err(invalid("one-arm set must lie in B(0, r/2)"));
    }
    one_arm_on_stream(s, a, r, n, 0)
}

fn one_arm_on_stream(s: &Sampler, a: &[Point], r: i64, n: u64, offset: u64) -> Result<Estimate> {
    let region = Region::origin_box(s.dim(), r);
    let spec = s.spec().clone();
    let srcs: Vec<&[i64]> = a.iter().map(|p| p.coords()).collect();
    let (hits, trunc) = s.exec.fold(
        n,
        || Arena::new(s.dim()),
        || (0u64, 0u64),
        |arena, acc, i| {
            let cfg = s.lattice.configuration(s.master_seed, offset + i);
            let mut reached = false;
            let end = bfs(&cfg, &region, &srcs, s.budget, false, arena, |_, v, _| {
                if inner_boundary_unchecked(v, &region, &spec) {
                    reached = true;
                    Flow::Stop
                } else {
                    Flow::Continue
                }
            });
            if reached {
                acc.0 += 1;
            } else if end.truncated {
                acc.1 += 1;
            }
        },
        |x, y| (x.0 + y.0, x.1 + y.1),
    );
    Ok(Estimate::from_counts(hits, trunc, n))
}

/// Empirical tail of `|C_r(0) ∩ Q_s(x)|`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PioneerTail {
    pub r: i64,
    pub s: i64,
    pub x: Point,
    pub n: u64,
    pub n_truncated: u64,
    /// `counts[k]` = replicas with exactly `k` patch points; the last entry
    /// collects everything at or above its index.
    pub counts: Vec<u64>,
    pub t_grid: Vec<u64>,
    /// `P(count ≥ t)` for each `t` in the grid.
    pub ccdf: Vec<Estimate>,
    /// `P(count ≥ 1)`.
    pub contact: Estimate,
    /// `P(count ≥ t | count ≥ 1)`.
    pub conditional: Vec<f64>,
    /// Fitted `c` in `P(count ≥ t | count ≥ 1) ≈ exp(−c (t − 1) / s²)`.
    pub fitted_c: f64,
    pub reference_s2: Vec<f64>,
    pub reference_s3: Vec<f64>,
}

impl PioneerTail {
    /// Replicas with count at least `t`.
    pub fn at_least(&self, t: u64) -> u64 {
        let t = t as usize;
        if t >= self.counts.len() {
            // the overflow bin only bounds counts above its index
            return 0;
        }
        self.counts[t..].iter().sum()
    }
}

/// Explores `C_r(0)` fully in each replica and tallies its points in the
/// patch `B(x, s) ∩ ∂B(0, r)`.
pub fn pioneer_tail(
    smp: &Sampler,
    r: i64,
    s: i64,
    x: &Point,
    t_grid: &[u64],
    n: u64,
) -> Result<PioneerTail> {
    smp.check_n(n)?;
    if !(1 <= s && s <= r) {
        return Err(invalid(format!("need 1 <= s <= r, got s = {s}, r = {r}")));
    }
    x.check_dim(smp.dim())?;
    let region = Region::origin_box(smp.dim(), r);
    let patch = SurfacePatch::new(x, s, &region, smp.spec(), BoundaryKind::Inner)?;
    let top = t_grid.iter().copied().max().unwrap_or(0) as usize + 2;
    let origin = Point::origin(smp.dim());
    let (counts, trunc) = smp.exec.fold(
        n,
        || Arena::new(smp.dim()),
        || (vec![0u64; top], 0u64),
        |arena, acc, i| {
            let cfg = smp.lattice.configuration(smp.master_seed, i);
            let mut k = 0usize;
            let end = bfs(&cfg, &region, &[origin.coords()], smp.budget, false, arena, |_, v, _| {
                if patch.contains(v) {
                    k += 1;
                }
                Flow::Continue
            });
            acc.0[k.min(top - 1)] += 1;
            if end.truncated {
                acc.1 += 1;
            }
        },
        |mut a, b| {
            for (x, y) in a.0.iter_mut().zip(b.0) {
                *x += y;
            }
            (a.0, a.1 + b.1)
        },
    );
    let ge = |t: u64| -> u64 { counts[(t as usize).min(top - 1)..].iter().sum() };
    let ccdf: Vec<Estimate> = t_grid
        .iter()
        .map(|&t| Estimate::from_counts(ge(t), 0, n))
        .collect();
    let contact = Estimate::from_counts(ge(1), 0, n);
    let conditional: Vec<f64> = t_grid
        .iter()
        .map(|&t| {
            if contact.hits == 0 {
                f64::NAN
            } else if t == 0 {
                1.0 / contact.value
            } else {
                ge(t) as f64 / contact.hits as f64
            }
        })
        .collect();
    // least squares through (1, 0) on the observed log tail
    let (mut num, mut den) = (0.0, 0.0);
    for (&t, &c) in t_grid.iter().zip(&conditional) {
        if t >= 1 && c > 0.0 && c.is_finite() {
            let u = (t - 1) as f64 / (s * s) as f64;
            num += -c.ln() * u;
            den += u * u;
        }
    }
    let fitted_c = if den > 0.0 { num / den } else { f64::NAN };
    let curve = |pow: i32| -> Vec<f64> {
        t_grid
            .iter()
            .map(|&t| (-fitted_c * (t.max(1) - 1) as f64 / (s as f64).powi(pow)).exp())
            .collect()
    };
    Ok(PioneerTail {
        r,
        s,
        x: x.clone(),
        n,
        n_truncated: trunc,
        counts,
        t_grid: t_grid.to_vec(),
        ccdf,
        contact,
        reference_s2: curve(2),
        reference_s3: curve(3),
        conditional,
        fitted_c,
    })
}

/// Shape test of a conditional log-tail.
#[derive(Clone, Debug, Serialize)]
pub struct TailShape {
    /// Thresholds `t ≥ 1` with at least `min_count` samples at or above them.
    pub observed_t: Vec<u64>,
    pub log_ccdf: Vec<f64>,
    pub increments: Vec<f64>,
    pub increment_se: Vec<f64>,
    pub decreasing: bool,
    /// Consecutive increments nonincreasing up to `k_se` standard errors.
    pub concave: bool,
}

/// Checks that `log P(count ≥ t | count ≥ 1)` decreases with nonincreasing
/// increments over consecutive integers `t ≥ 1` that have at least `min_count`
/// samples, allowing `k_se` standard errors of noise per comparison.
pub fn tail_shape(tail: &PioneerTail, min_count: u64, k_se: f64) -> TailShape {
    let mut observed_t = Vec::new();
    let mut counts = Vec::new();
    let mut t = 1u64;
    loop {
        let c = tail.at_least(t);
        if c < min_count || (t as usize) + 1 >= tail.counts.len() {
            break;
        }
        observed_t.push(t);
        counts.push(c);
        t += 1;
    }
    let base = tail.at_least(1) as f64;
    let log_ccdf: Vec<f64> = counts.iter().map(|&c| (c as f64 / base).ln()).collect();
    let increments: Vec<f64> = log_ccdf.windows(2).map(|w| w[1] - w[0]).collect();
    // log(c_{t+1}/c_t) is a log-binomial proportion; var ≈ (1 − q)/(q·c_t)
    let increment_se: Vec<f64> = counts
        .windows(2)
        .map(|w| {
            let q = w[1] as f64 / w[0] as f64;
            ((1.0 - q) / (q * w[0] as f64)).sqrt()
        })
        .collect();
    let decreasing = increments.iter().all(|&d| d < 0.0);
    let concave = increments.windows(2).zip(increment_se.windows(2)).all(|(d, se)| {
        let slack = k_se * (se[0] * se[0] + se[1] * se[1]).sqrt();
        d[1] <= d[0] + slack
    });
    TailShape {
        observed_t,
        log_ccdf,
        increments,
        increment_se,
        decreasing,
        concave,
    }
}

/// Parameters of [`calibrate_pc`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationParams {
    pub r_pair: (i64, i64),
    pub bracket: (f64, f64),
    pub n: u64,
    pub iterations: u32,
    /// One-arm exponent `η` in `f(p) = r₂^η P(r₂) − r₁^η P(r₁)`; 2 in mean field.
    pub exponent: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationStep {
    pub p: f64,
    pub f: f64,
    pub se: f64,
    pub p_r1: Estimate,
    pub p_r2: Estimate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Calibration {
    pub p: f64,
    pub bracket: (f64, f64),
    pub steps: Vec<CalibrationStep>,
}

/// Bisection on `f(p) = r₂^η P̂_p(0 ↔ ∂B(0,r₂)) − r₁^η P̂_p(0 ↔ ∂B(0,r₁))`.
/// Every evaluation draws fresh replicas.
pub fn calibrate_pc(base: &Sampler, params: &CalibrationParams) -> Result<Calibration> {
    let (r1, r2) = params.r_pair;
    let (mut lo, mut hi) = params.bracket;
    if !(1 <= r1 && r1 < r2) {
        return Err(invalid("need 1 <= r1 < r2"));
    }
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(invalid("need 0 <= p_lo < p_hi <= 1"));
    }
    let eta = params.exponent;
    let origin = [Point::origin(base.dim())];
    let mut steps: Vec<CalibrationStep> = Vec::new();
    let eval = |p: f64, steps: &mut Vec<CalibrationStep>| -> Result<(f64, f64)> {
        let k = steps.len() as u64;
        let smp = Sampler {
            lattice: Lattice::new(base.spec().with_p(p))?,
            master_seed: child_seed(base.master_seed, k),
            budget: base.budget,
            exec: base.exec,
        };
        let a = one_arm_on_stream(&smp, &origin, r1, params.n, 0)?;
        let b = one_arm_on_stream(&smp, &origin, r2, params.n, 0)?;
        let (w1, w2) = ((r1 as f64).powf(eta), (r2 as f64).powf(eta));
        let f = w2 * b.value - w1 * a.value;
        let se = ((w2 * b.std_error).powi(2) + (w1 * a.std_error).powi(2)).sqrt();
        steps.push(CalibrationStep {
            p,
            f,
            se,
            p_r1: a,
            p_r2: b,
        });
        Ok((f, se))
    };
    let (f_lo, se_lo) = eval(lo, &mut steps)?;
    let (f_hi, se_hi) = eval(hi, &mut steps)?;
    let both_pos = f_lo > 3.0 * se_lo && f_hi > 3.0 * se_hi;
    let both_neg = f_lo < -3.0 * se_lo && f_hi < -3.0 * se_hi;
    if both_pos || both_neg {
        return Err(Error::Bracket {
            p_lo: lo,
            p_hi: hi,
            f_lo,
            f_hi,
        });
    }
    for _ in 0..params.iterations {
        let mid = 0.5 * (lo + hi);
        let (f, _) = eval(mid, &mut steps)?;
        if f > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Calibration {
        p: 0.5 * (lo + hi),
        bracket: params.bracket,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler(d: usize, p: f64, seed: u64) -> Sampler {
        Sampler::new(GraphSpec::nearest_neighbor(d, p).unwrap(), seed)
            .unwrap()
            .with_budget(100_000)
    }

    #[test]
    fn tau_trivial_cases() {
        let s = sampler(3, 0.3, 1);
        let e = estimate_tau(&s, &Point::origin(3), 100).unwrap();
        assert_eq!((e.value, e.std_error), (1.0, 0.0));
        let s1 = sampler(2, 1.0, 1).with_budget(10_000);
        let e = estimate_tau(&s1, &Point::from([3, 4]), 50).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn hit_trivial_cases() {
        let s = sampler(2, 0.4, 3);
        let z = Point::from([2, 0]);
        let e = estimate_hit(&s, &[z.clone(), Point::origin(2)], &z, 10).unwrap();
        assert_eq!(e.value, 1.0);
        assert!(matches!(estimate_hit(&s, &[], &z, 10), Err(Error::EmptySet)));
    }

    #[test]
    fn hit_of_origin_is_tau_in_distribution() {
        let s = sampler(2, 0.4, 5);
        let z = Point::from([2, 0]);
        let n = 40_000;
        let a = estimate_hit(&s, &[Point::origin(2)], &z, n).unwrap();
        let b = estimate_tau(&s.with_seed(6), &z, n).unwrap();
        let se = crate::stats::pooled_se(&[a.std_error, b.std_error]);
        assert!((a.value - b.value).abs() <= 3.0 * se, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn union_bound_on_shared_replicas() {
        let s = sampler(2, 0.45, 8);
        let z = Point::from([3, 1]);
        let (a1, a2) = (Point::origin(2), Point::from([0, 2]));
        let n = 20_000;
        let both = estimate_hit(&s, &[a1.clone(), a2.clone()], &z, n).unwrap();
        let e1 = estimate_hit(&s, &[a1], &z, n).unwrap();
        let e2 = estimate_hit(&s, &[a2], &z, n).unwrap();
        let se = crate::stats::pooled_se(&[both.std_error, e1.std_error, e2.std_error]);
        assert!(both.value <= e1.value + e2.value + 3.0 * se);
        // on shared replicas the union bound holds sample by sample
        assert!(both.hits <= e1.hits + e2.hits);
        assert!(both.hits >= e1.hits.max(e2.hits));
    }

    #[test]
    fn pcap_needs_far_z() {
        let s = sampler(2, 0.4, 1);
        let a = [Point::origin(2), Point::from([3, 0])];
        assert!(estimate_pcap(&s, &a, &Point::from([4, 0]), 10).is_err());
    }

    #[test]
    fn pcap_denominator_miss_is_an_error() {
        let s = sampler(3, 0.0, 1);
        let r = estimate_pcap(&s, &[Point::origin(3)], &Point::from([3, 0, 0]), 100);
        assert!(matches!(r, Err(Error::AllDenominatorMisses)));
    }

    #[test]
    fn two_sets_with_point_b_reduces_to_pcap() {
        let s = sampler(2, 0.45, 21);
        let a = [Point::origin(2), Point::from([1, 0])];
        let z = Point::from([3, 2]);
        let x = estimate_two_sets(&s, &a, &[Point::origin(2)], &z, 5000).unwrap();
        let y = estimate_pcap(&s, &a, &z, 5000).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn one_arm_trivial_cases() {
        let s1 = sampler(3, 1.0, 1);
        assert_eq!(estimate_one_arm(&s1, 4, 20).unwrap().value, 1.0);
        let s0 = sampler(3, 0.0, 1);
        assert_eq!(estimate_one_arm(&s0, 1, 20).unwrap().value, 0.0);
        assert!(estimate_one_arm_set(&s1, &[Point::from([3, 0, 0])], 4, 10).is_err());
    }

    #[test]
    fn one_arm_monotone_in_p() {
        let n = 20_000;
        let vals: Vec<Estimate> = [0.45, 0.5, 0.55]
            .iter()
            .map(|&p| estimate_one_arm(&sampler(2, p, 77), 6, n).unwrap())
            .collect();
        for w in vals.windows(2) {
            let se = crate::stats::pooled_se(&[w[0].std_error, w[1].std_error]);
            assert!(w[0].value <= w[1].value + 3.0 * se);
        }
    }

    #[test]
    fn pioneer_tail_basic_shape() {
        let s = sampler(3, 0.3, 4);
        let x = Point::from([4, 0, 0]);
        let grid: Vec<u64> = (0..8).collect();
        let t = pioneer_tail(&s, 4, 2, &x, &grid, 5000).unwrap();
        assert_eq!(t.ccdf[0].value, 1.0);
        for w in t.ccdf.windows(2) {
            assert!(w[1].value <= w[0].value);
        }
        assert_eq!(t.counts.iter().sum::<u64>(), 5000);
        assert!(pioneer_tail(&s, 4, 2, &Point::from([3, 0, 0]), &grid, 10).is_err());
    }

    #[test]
    fn calibration_output_in_bracket() {
        let s = sampler(2, 0.5, 3).with_budget(10_000);
        let params = CalibrationParams {
            r_pair: (4, 8),
            bracket: (0.3, 0.8),
            n: 2000,
            iterations: 4,
            exponent: 5.0 / 48.0,
        };
        let c = calibrate_pc(&s, &params).unwrap();
        assert!(c.p >= 0.3 && c.p <= 0.8);
        assert_eq!(c.steps.len(), 6);
        let bad = CalibrationParams {
            bracket: (0.8, 1.0),
            ..params
        };
        assert!(matches!(calibrate_pc(&s, &bad), Err(Error::Bracket { .. })));
    }
}
