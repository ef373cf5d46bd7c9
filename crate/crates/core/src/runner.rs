//! Experiment configuration, dispatch and result files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::capacity::{ball_capacity, cap_d4, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::keys::child_seed;
use crate::lattice::{Connectivity, GraphSpec, Point};
use crate::montecarlo::{
    calibrate_pc, estimate_one_arm, estimate_one_arm_set, estimate_pcap_with, estimate_tau,
    estimate_two_sets, pioneer_tail, CalibrationParams, Pairing, Sampler,
};
use crate::percolation::DEFAULT_BUDGET;
use crate::regularity::regular_fraction_experiment;
use crate::stats::{Estimate, RatioEstimate};
use crate::walker::{estimate_equilibrium, estimate_iic_hit, ordering_equilibrium, DEFAULT_MAX_STEPS};

pub const VERSION: &str = concat!("percap ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Tau,
    Pcap,
    TwoSets,
    OneArm,
    OneArmSet,
    PioneerTail,
    Regularity,
    Equilibrium,
    OrderingEquilibrium,
    IicHit,
    BallCapacity,
    CapD4,
    CalibratePc,
}

impl Kind {
    pub fn name(self) -> String {
        match serde_json::to_value(self) {
            Ok(Value::String(s)) => s,
            _ => unreachable!(),
        }
    }

    fn samples(self) -> bool {
        !matches!(self, Kind::BallCapacity | Kind::CapD4)
    }
}

fn nearest_neighbor() -> Connectivity {
    Connectivity::NearestNeighbor
}

/// One experiment. Fields not used by `kind` must be absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub dimension: usize,
    #[serde(default = "nearest_neighbor")]
    pub connectivity: Connectivity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_norm: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<Pairing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_pair: Option<(i64, i64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// File stem of the outputs; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn need<T: Clone>(v: &Option<T>, field: &str, kind: Kind) -> Result<T> {
    v.clone()
        .ok_or_else(|| config_err(format!("`{field}` is required for kind `{}`", kind.name())))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    fn used_fields(&self) -> &'static [&'static str] {
        match self.kind {
            Kind::Tau => &["p", "z", "n", "budget"],
            Kind::Pcap => &["p", "a", "z", "n", "budget", "pairing"],
            Kind::TwoSets => &["p", "a", "b", "z", "n", "budget"],
            Kind::OneArm => &["p", "r", "n", "budget"],
            Kind::OneArmSet => &["p", "a", "r", "n", "budget"],
            Kind::PioneerTail => &["p", "r", "s", "x", "t_grid", "n", "budget"],
            Kind::Regularity => &["p", "r", "k", "m", "n", "budget"],
            Kind::Equilibrium => &["p", "a", "z", "n", "budget", "max_steps"],
            Kind::OrderingEquilibrium => &["p", "a", "z", "n", "budget"],
            Kind::IicHit => &["p", "a", "z", "w_norm", "axis", "n", "budget"],
            Kind::BallCapacity => &["r", "tol"],
            Kind::CapD4 => &["a", "tol"],
            Kind::CalibratePc => &["r_pair", "bracket", "n", "iterations", "exponent", "budget"],
        }
    }

    fn present_fields(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut mark = |on: bool, name: &'static str| {
            if on {
                out.push(name);
            }
        };
        mark(self.p.is_some(), "p");
        mark(self.a.is_some(), "a");
        mark(self.b.is_some(), "b");
        mark(self.z.is_some(), "z");
        mark(self.x.is_some(), "x");
        mark(self.w_norm.is_some(), "w_norm");
        mark(self.axis.is_some(), "axis");
        mark(self.r.is_some(), "r");
        mark(self.s.is_some(), "s");
        mark(self.k.is_some(), "k");
        mark(self.m.is_some(), "m");
        mark(self.t_grid.is_some(), "t_grid");
        mark(self.n.is_some(), "n");
        mark(self.budget.is_some(), "budget");
        mark(self.max_steps.is_some(), "max_steps");
        mark(self.pairing.is_some(), "pairing");
        mark(self.tol.is_some(), "tol");
        mark(self.r_pair.is_some(), "r_pair");
        mark(self.bracket.is_some(), "bracket");
        mark(self.iterations.is_some(), "iterations");
        mark(self.exponent.is_some(), "exponent");
        out
    }

    /// Field-level checks that need no sampling.
    pub fn validate(&self) -> Result<()> {
        let used = self.used_fields();
        for f in self.present_fields() {
            if !used.contains(&f) {
                return Err(config_err(format!(
                    "field `{f}` is not used by kind `{}`",
                    self.kind.name()
                )));
            }
        }
        let k = self.kind;
        if self.dimension == 0 {
            return Err(config_err("`dimension` must be >= 1"));
        }
        if k.samples() && k != Kind::CalibratePc {
            let p = need(&self.p, "p", k)?;
            GraphSpec::new(self.dimension, self.connectivity, p).map_err(|e| config_err(e.to_string()))?;
        }
        if k.samples() {
            let n = need(&self.n, "n", k)?;
            if n == 0 || n > 1 << 31 {
                return Err(config_err("`n` must be in 1..=2^31"));
            }
        }
        if self.budget == Some(0) {
            return Err(config_err("`budget` must be >= 1"));
        }
        if self.workers == Some(0) {
            return Err(config_err("`workers` must be >= 1"));
        }
        let d = self.dimension;
        let check_pts = |pts: &[Point], field: &str| -> Result<()> {
            if pts.is_empty() {
                return Err(config_err(format!("`{field}` must be non-empty")));
            }
            for p in pts {
                if p.dim() != d {
                    return Err(config_err(format!("`{field}` has a point of dimension {}, expected {d}", p.dim())));
                }
            }
            Ok(())
        };
        let req_a = matches!(
            k,
            Kind::Pcap
                | Kind::TwoSets
                | Kind::OneArmSet
                | Kind::Equilibrium
                | Kind::OrderingEquilibrium
                | Kind::IicHit
                | Kind::CapD4
        );
        if req_a {
            check_pts(&need(&self.a, "a", k)?, "a")?;
        }
        if k == Kind::TwoSets {
            check_pts(&need(&self.b, "b", k)?, "b")?;
        }
        if matches!(
            k,
            Kind::Tau | Kind::Pcap | Kind::TwoSets | Kind::Equilibrium | Kind::OrderingEquilibrium | Kind::IicHit
        ) {
            check_pts(&[need(&self.z, "z", k)?], "z")?;
        }
        if matches!(
            k,
            Kind::OneArm | Kind::OneArmSet | Kind::PioneerTail | Kind::Regularity | Kind::BallCapacity
        ) && need(&self.r, "r", k)? < 1
        {
            return Err(config_err("`r` must be >= 1"));
        }
        match k {
            Kind::PioneerTail => {
                need(&self.s, "s", k)?;
                check_pts(&[need(&self.x, "x", k)?], "x")?;
                if need(&self.t_grid, "t_grid", k)?.is_empty() {
                    return Err(config_err("`t_grid` must be non-empty"));
                }
            }
            Kind::Regularity => {
                need(&self.k, "k", k)?;
                need(&self.m, "m", k)?;
            }
            Kind::IicHit => {
                need(&self.w_norm, "w_norm", k)?;
                if self.axis.is_some_and(|a| a >= d) {
                    return Err(config_err("`axis` out of range"));
                }
            }
            Kind::CalibratePc => {
                let (lo, hi) = need(&self.bracket, "bracket", k)?;
                if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                    return Err(config_err("`bracket` must satisfy 0 <= lo < hi <= 1"));
                }
                let (r1, r2) = need(&self.r_pair, "r_pair", k)?;
                if !(1 <= r1 && r1 < r2) {
                    return Err(config_err("`r_pair` must satisfy 1 <= r1 < r2"));
                }
                if need(&self.iterations, "iterations", k)? == 0 {
                    return Err(config_err("`iterations` must be >= 1"));
                }
            }
            _ => {}
        }
        if self.tol.is_some_and(|t| !(t > 0.0)) {
            return Err(config_err("`tol` must be positive"));
        }
        Ok(())
    }

    fn spec(&self) -> Result<GraphSpec> {
        GraphSpec::new(self.dimension, self.connectivity, self.p.unwrap_or(0.0))
    }

    fn sampler(&self) -> Result<Sampler> {
        Ok(Sampler::new(self.spec()?, self.master_seed)?
            .with_budget(self.budget.unwrap_or(DEFAULT_BUDGET))
            .with_exec(Exec::with_workers(self.workers.unwrap_or(0))))
    }

    fn stem(&self) -> String {
        self.output.clone().unwrap_or_else(|| self.kind.name())
    }

    /// The config as echoed in results: execution-only fields removed.
    pub fn echo(&self) -> Self {
        ExperimentConfig {
            workers: None,
            output: None,
            ..self.clone()
        }
    }
}

/// One CSV line. Numbers that do not apply are left blank.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub kind: String,
    pub params: String,
    pub label: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub wilson_lo: Option<f64>,
    pub wilson_hi: Option<f64>,
    pub n: Option<u64>,
    pub hits: Option<u64>,
    pub n_truncated: Option<u64>,
}

impl Row {
    fn value(label: impl Into<String>, value: f64) -> Self {
        Row {
            label: label.into(),
            value,
            ..Default::default()
        }
    }

    fn estimate(label: impl Into<String>, e: &Estimate) -> Self {
        Row {
            label: label.into(),
            value: e.value,
            std_error: Some(e.std_error),
            lower: Some(e.lower),
            upper: Some(e.upper),
            wilson_lo: Some(e.wilson_lo),
            wilson_hi: Some(e.wilson_hi),
            n: Some(e.n),
            hits: Some(e.hits),
            n_truncated: Some(e.n_truncated),
            ..Default::default()
        }
    }

    fn ratio(label: impl Into<String>, r: &RatioEstimate) -> Self {
        let (lo, hi) = r.wilson_band();
        Row {
            label: label.into(),
            value: r.ratio,
            std_error: Some(r.std_error),
            lower: Some(r.numerator.lower / r.denominator.value),
            upper: Some(r.numerator.upper / r.denominator.value),
            wilson_lo: Some(lo),
            wilson_hi: Some(hi),
            n: Some(r.numerator.n),
            hits: Some(r.numerator.hits),
            n_truncated: Some(r.numerator.n_truncated),
            ..Default::default()
        }
    }

    fn ratio_rows(prefix: &str, r: &RatioEstimate) -> Vec<Row> {
        vec![
            Row::ratio(prefix, r),
            Row::estimate(format!("{prefix}.numerator"), &r.numerator),
            Row::estimate(format!("{prefix}.denominator"), &r.denominator),
        ]
    }
}

/// Outcome of one run: echoed config, full result and its CSV rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub version: String,
    pub config: ExperimentConfig,
    pub result: Value,
    pub rows: Vec<Row>,
}

fn to_value<T: Serialize>(t: &T) -> Result<Value> {
    Ok(serde_json::to_value(t)?)
}

/// Runs one experiment in memory.
pub fn run(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    cfg.validate()?;
    let k = cfg.kind;
    let n = cfg.n.unwrap_or(1);
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let (result, mut rows) = match k {
        Kind::Tau => {
            let e = estimate_tau(&cfg.sampler()?, cfg.z.as_ref().unwrap(), n)?;
            (to_value(&e)?, vec![Row::estimate("tau", &e)])
        }
        Kind::Pcap => {
            let r = estimate_pcap_with(
                &cfg.sampler()?,
                cfg.a.as_ref().unwrap(),
                cfg.z.as_ref().unwrap(),
                n,
                cfg.pairing.unwrap_or_default(),
            )?;
            (to_value(&r)?, Row::ratio_rows("pcap", &r))
        }
        Kind::TwoSets => {
            let r = estimate_two_sets(
                &cfg.sampler()?,
                cfg.a.as_ref().unwrap(),
                cfg.b.as_ref().unwrap(),
                cfg.z.as_ref().unwrap(),
                n,
            )?;
            (to_value(&r)?, Row::ratio_rows("two_sets", &r))
        }
        Kind::OneArm => {
            let e = estimate_one_arm(&cfg.sampler()?, cfg.r.unwrap(), n)?;
            (to_value(&e)?, vec![Row::estimate("one_arm", &e)])
        }
        Kind::OneArmSet => {
            let e = estimate_one_arm_set(&cfg.sampler()?, cfg.a.as_ref().unwrap(), cfg.r.unwrap(), n)?;
            (to_value(&e)?, vec![Row::estimate("one_arm_set", &e)])
        }
        Kind::PioneerTail => {
            let t = pioneer_tail(
                &cfg.sampler()?,
                cfg.r.unwrap(),
                cfg.s.unwrap(),
                cfg.x.as_ref().unwrap(),
                cfg.t_grid.as_ref().unwrap(),
                n,
            )?;
            let mut rows = vec![Row::estimate("contact", &t.contact), Row::value("fitted_c", t.fitted_c)];
            for (i, &tt) in t.t_grid.iter().enumerate() {
                rows.push(Row::estimate(format!("ccdf[t={tt}]"), &t.ccdf[i]));
                rows.push(Row::value(format!("conditional[t={tt}]"), t.conditional[i]));
            }
            (to_value(&t)?, rows)
        }
        Kind::Regularity => {
            let f = regular_fraction_experiment(
                &cfg.sampler()?,
                cfg.r.unwrap(),
                cfg.k.unwrap(),
                cfg.m.as_ref().unwrap(),
                n,
            )?;
            let mut rows: Vec<Row> = f
                .m_values
                .iter()
                .zip(&f.events)
                .map(|(m, e)| Row::estimate(format!("event[M={m}]"), e))
                .collect();
            rows.push(Row::value("mean_pioneers", f.mean_pioneers));
            rows.push(Row::value("mean_regular", f.mean_regular));
            rows.push(Row::value("mean_line_good", f.mean_line_good));
            (to_value(&f)?, rows)
        }
        Kind::Equilibrium | Kind::OrderingEquilibrium => {
            let smp = cfg.sampler()?;
            let (a, z) = (cfg.a.as_ref().unwrap(), cfg.z.as_ref().unwrap());
            let e = if k == Kind::Equilibrium {
                estimate_equilibrium(&smp, a, z, n, cfg.max_steps.unwrap_or(DEFAULT_MAX_STEPS))?
            } else {
                ordering_equilibrium(&smp, a, z, n)?
            };
            let mut rows: Vec<Row> = e
                .points
                .iter()
                .zip(&e.estimates)
                .map(|(p, r)| Row::ratio(format!("e{p}"), r))
                .collect();
            rows.push(Row::ratio("total", &e.total));
            rows.push(Row::estimate("denominator", &e.denominator));
            rows.push(Row::value("timeouts", e.n_timeouts as f64));
            let points: Vec<Value> = e
                .points
                .iter()
                .zip(&e.estimates)
                .map(|(p, r)| serde_json::json!({"point": p, "e_hat": r.ratio, "se": r.std_error}))
                .collect();
            let mut v = to_value(&e)?;
            v["measure"] = Value::Array(points);
            (v, rows)
        }
        Kind::IicHit => {
            let h = estimate_iic_hit(
                &cfg.sampler()?,
                cfg.a.as_ref().unwrap(),
                cfg.z.as_ref().unwrap(),
                cfg.w_norm.unwrap(),
                cfg.axis.unwrap_or(0),
                n,
            )?;
            let rows = vec![
                Row::estimate("acceptance", &h.acceptance),
                Row::estimate("frequency", &h.frequency),
                Row {
                    std_error: Some(h.scaled_se),
                    ..Row::value("scaled", h.scaled)
                },
            ];
            (to_value(&h)?, rows)
        }
        Kind::BallCapacity => {
            let b = ball_capacity(cfg.r.unwrap(), cfg.dimension, tol)?;
            let rows = vec![Row::value("capacity", b.capacity), Row::value("gap", b.gap)];
            (to_value(&b)?, rows)
        }
        Kind::CapD4 => {
            let c = cap_d4(cfg.a.as_ref().unwrap(), cfg.dimension, tol)?;
            let rows = vec![Row::value("capacity", c.capacity), Row::value("gap", c.gap)];
            (to_value(&c)?, rows)
        }
        Kind::CalibratePc => {
            let spec = GraphSpec::new(cfg.dimension, cfg.connectivity, 0.0)?;
            let base = Sampler::new(spec, cfg.master_seed)?
                .with_budget(cfg.budget.unwrap_or(DEFAULT_BUDGET))
                .with_exec(Exec::with_workers(cfg.workers.unwrap_or(0)));
            let params = CalibrationParams {
                r_pair: cfg.r_pair.unwrap(),
                bracket: cfg.bracket.unwrap(),
                n,
                iterations: cfg.iterations.unwrap(),
                exponent: cfg.exponent.unwrap_or(2.0),
            };
            let c = calibrate_pc(&base, &params)?;
            let mut rows = vec![Row::value("p_hat", c.p)];
            for s in &c.steps {
                rows.push(Row {
                    std_error: Some(s.se),
                    ..Row::value(format!("f[p={}]", s.p), s.f)
                });
            }
            (to_value(&c)?, rows)
        }
    };
    for r in &mut rows {
        r.kind = k.name();
    }
    Ok(ResultRecord {
        version: VERSION.into(),
        config: cfg.echo(),
        result,
        rows,
    })
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_bytes(rows: &[Row]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| config_err(e.to_string()))?;
    }
    w.into_inner().map_err(|e| config_err(e.to_string()))
}

/// Paths written by [`run_to_dir`] and [`sweep_to_dir`].
#[derive(Clone, Debug)]
pub struct Written {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub timing: PathBuf,
}

fn write_outputs(out: &Path, stem: &str, json: &Value, rows: &[Row], seconds: f64) -> Result<Written> {
    let w = Written {
        csv: out.join(format!("{stem}.csv")),
        json: out.join(format!("{stem}.json")),
        timing: out.join(format!("{stem}.timing.json")),
    };
    write_atomic(&w.csv, &csv_bytes(rows)?)?;
    let mut text = serde_json::to_string_pretty(json)?;
    text.push('\n');
    write_atomic(&w.json, text.as_bytes())?;
    let timing = serde_json::json!({ "wall_clock_seconds": seconds, "version": VERSION });
    write_atomic(&w.timing, serde_json::to_string_pretty(&timing)?.as_bytes())?;
    Ok(w)
}

/// Runs and writes `<stem>.csv`, `<stem>.json` and the wall-clock sidecar
/// `<stem>.timing.json` into `out`.
pub fn run_to_dir(cfg: &ExperimentConfig, out: &Path) -> Result<(ResultRecord, Written)> {
    let t0 = Instant::now();
    let rec = run(cfg)?;
    let w = write_outputs(out, &cfg.stem(), &to_value(&rec)?, &rec.rows, t0.elapsed().as_secs_f64())?;
    Ok((rec, w))
}

/// A parameter and its values, parsed from `name=v1,v2,...`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<Value>,
}

impl std::str::FromStr for GridAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, vals) = s
            .split_once('=')
            .ok_or_else(|| config_err(format!("grid `{s}` is not of the form name=v1,v2,...")))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(config_err("grid parameter name is empty"));
        }
        let values: Vec<Value> = split_values(vals)
            .into_iter()
            .map(|v| serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string())))
            .collect();
        if values.is_empty() {
            return Err(config_err(format!("grid `{name}` has no values")));
        }
        Ok(GridAxis {
            name: name.to_string(),
            values,
        })
    }
}

/// Splits on commas that are not inside brackets, so points like `[1,0]` work.
fn split_values(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, c) in s.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out.retain(|v| !v.is_empty());
    out
}

/// Configs of the Cartesian product of `grid` over `template`. Point `k` gets
/// master seed `child_seed(template seed, k)`; a grid of one point keeps the
/// template seed.
pub fn sweep_configs(template: &ExperimentConfig, grid: &[GridAxis]) -> Result<Vec<(String, ExperimentConfig)>> {
    if grid.is_empty() || grid.len() > 2 {
        return Err(config_err("a sweep takes one or two grid parameters"));
    }
    let mut points: Vec<Vec<(String, Value)>> = vec![Vec::new()];
    for axis in grid {
        if matches!(axis.name.as_str(), "kind" | "master_seed" | "workers" | "output") {
            return Err(config_err(format!("`{}` cannot be swept", axis.name)));
        }
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((axis.name.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    let single = points.len() == 1;
    let base = to_value(template)?;
    points
        .into_iter()
        .enumerate()
        .map(|(i, assignment)| {
            let mut v = base.clone();
            for (name, val) in &assignment {
                v[name.as_str()] = val.clone();
            }
            let mut cfg: ExperimentConfig =
                serde_json::from_value(v).map_err(|e| config_err(e.to_string()))?;
            if !single {
                cfg.master_seed = child_seed(template.master_seed, i as u64);
            }
            cfg.validate()?;
            let label = assignment
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";");
            Ok((label, cfg))
        })
        .collect()
}

/// Runs every grid point and writes one combined CSV and JSON.
pub fn sweep_to_dir(
    template: &ExperimentConfig,
    grid: &[GridAxis],
    out: &Path,
) -> Result<(Vec<ResultRecord>, Written)> {
    let t0 = Instant::now();
    let configs = sweep_configs(template, grid)?;
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for (label, cfg) in &configs {
        let rec = run(cfg)?;
        rows.extend(rec.rows.iter().cloned().map(|mut r| {
            r.params = label.clone();
            r
        }));
        records.push(rec);
    }
    let stem = format!("{}_sweep", template.stem());
    let w = write_outputs(out, &stem, &to_value(&records)?, &rows, t0.elapsed().as_secs_f64())?;
    Ok((records, w))
}

/// Process exit code for an error: 2 for configuration problems, 3 for
/// statistically insufficient runs, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Json(_)
        | Error::InvalidSpec(_)
        | Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::NotInRegion(_)
        | Error::NotOnBoundary(_)
        | Error::EmptySet
        | Error::KernelDimension(_)
        | Error::CoordinateOutOfRange(_)
        | Error::RegionNotBox => 2,
        Error::Underpowered { .. } | Error::Bracket { .. } => 3,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_field_rejected() {
        let e = ExperimentConfig::from_json(r#"{"kind":"tau","dimension":2,"p":0.5,"z":[0,0],"n":10,"zz":1}"#);
        assert!(matches!(e, Err(Error::Config(_))));
    }

    #[test]
    fn field_of_other_kind_rejected() {
        let e = ExperimentConfig::from_json(r#"{"kind":"tau","dimension":2,"p":0.5,"z":[0,0],"n":10,"r":3}"#);
        assert!(e.unwrap_err().to_string().contains("`r`"));
    }

    #[test]
    fn missing_field_named() {
        let e = ExperimentConfig::from_json(r#"{"kind":"pcap","dimension":2,"p":0.5,"z":[4,0],"n":10}"#);
        assert!(e.unwrap_err().to_string().contains("`a`"));
    }

    #[test]
    fn grid_values_keep_brackets() {
        let g: GridAxis = "z=[8,0],[16,0]".parse().unwrap();
        assert_eq!(g.values.len(), 2);
        let g: GridAxis = "r=1,2,4".parse().unwrap();
        assert_eq!(g.values, vec![Value::from(1), Value::from(2), Value::from(4)]);
        assert!("r".parse::<GridAxis>().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&config_err("x")), 2);
        assert_eq!(exit_code(&Error::Underpowered { accepted: 1, required: 100 }), 3);
        assert_eq!(exit_code(&Error::AllDenominatorMisses), 1);
    }
}
