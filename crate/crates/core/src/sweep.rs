//! Parameter sweeps over one or two coupling axes.
//!
//! Points are evaluated in parallel and merged back in row-major order (first
//! axis outer), so the dataset does not depend on the number of workers.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Metadata, Value};
use crate::error::{Error, Result};
use crate::flags::Flags;
use crate::geometry::{fidelity, fidelity_susceptibility, pair_excitation_overlap, quantum_geometric_tensor};
use crate::model::{momentum_grid, Axis, CouplingPoint, MomentumGrid, ParitySector};
use crate::quench::{default_time_grid, loschmidt_echo, time_grid, QuenchProtocol};
use crate::spectrum::{classify_with, gap, max_group_velocity, ClassifyOptions};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "CLUSTERXY_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Gap,
    Classify,
    FidelityStep,
    Qgt,
    ChiF,
    OverlapF,
    OverlapF1,
    Echo,
    Revivals,
    MaxVelocity,
}

impl Quantity {
    pub const ALL: [Quantity; 10] = [
        Quantity::Gap,
        Quantity::Classify,
        Quantity::FidelityStep,
        Quantity::Qgt,
        Quantity::ChiF,
        Quantity::OverlapF,
        Quantity::OverlapF1,
        Quantity::Echo,
        Quantity::Revivals,
        Quantity::MaxVelocity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Gap => "gap",
            Quantity::Classify => "classify",
            Quantity::FidelityStep => "fidelity_step",
            Quantity::Qgt => "qgt",
            Quantity::ChiF => "chi_f",
            Quantity::OverlapF => "overlap_f",
            Quantity::OverlapF1 => "overlap_f1",
            Quantity::Echo => "echo",
            Quantity::Revivals => "revivals",
            Quantity::MaxVelocity => "max_velocity",
        }
    }

    fn needs_reference(self) -> bool {
        matches!(self, Quantity::OverlapF | Quantity::OverlapF1 | Quantity::Echo | Quantity::Revivals)
    }

    /// Value columns, after the axis columns and before `flags`.
    fn columns(self) -> &'static [&'static str] {
        match self {
            Quantity::Gap => &["gap"],
            Quantity::Classify => &["gap", "is_gapless", "surfaces"],
            Quantity::FidelityStep | Quantity::OverlapF => &["fidelity"],
            Quantity::Qgt => &["g_xx", "g_xy", "g_xh", "g_yy", "g_yh", "g_hh"],
            Quantity::ChiF => &["chi_f", "chi_f_per_site"],
            Quantity::OverlapF1 => &["fidelity", "pair_overlap"],
            Quantity::Echo => &["t", "L", "is_revival"],
            Quantity::Revivals => &["first_revival_t", "first_revival_L", "revival_count"],
            Quantity::MaxVelocity => &["k", "velocity"],
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL.into_iter().find(|q| q.name() == s).ok_or_else(|| Error::Plan(format!("unknown quantity '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisRange {
    pub fn new(axis: Axis, min: f64, max: f64, steps: usize) -> Self {
        Self { axis, min, max, steps }
    }

    /// `steps` equally spaced values from `min` to `max` inclusive.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| if i == last { self.max } else { self.min + (self.max - self.min) * i as f64 / last as f64 })
            .collect()
    }
}

impl FromStr for AxisRange {
    type Err = Error;

    /// `axis:min:max:steps`, e.g. `lx:-2:2:101`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let bad = || Error::Plan(format!("axis range '{s}' is not axis:min:max:steps"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let axis = parts[0].parse().map_err(|_| bad())?;
        let min = parts[1].parse().map_err(|_| bad())?;
        let max = parts[2].parse().map_err(|_| bad())?;
        let steps = parts[3].parse().map_err(|_| bad())?;
        Ok(AxisRange { axis, min, max, steps })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPlan {
    pub quantity: Quantity,
    pub axes: Vec<AxisRange>,
    /// Couplings not swept; the coordinates of swept axes are ignored.
    pub fixed: CouplingPoint,
    pub n: usize,
    pub sector: ParitySector,
    /// Step of `fidelity_step`.
    pub delta: f64,
    /// Direction of `fidelity_step` and `chi_f`.
    pub direction: Axis,
    /// Center of the overlap quantities; final point of quenches, whose
    /// initial point is the scanned one.
    pub reference: Option<CouplingPoint>,
    pub t_max: f64,
    /// Time step; the default grid of the protocol when absent.
    pub dt: Option<f64>,
    pub resolution: usize,
    pub tol: f64,
}

impl ScanPlan {
    pub fn new(quantity: Quantity, axes: Vec<AxisRange>, fixed: CouplingPoint) -> Self {
        Self {
            quantity,
            axes,
            fixed,
            n: 100,
            sector: ParitySector::Even,
            delta: 0.05,
            direction: Axis::LambdaY,
            reference: None,
            t_max: 100.0,
            dt: None,
            resolution: 4096,
            tol: 1e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::Plan(format!("need 1 or 2 axes, got {}", self.axes.len())));
        }
        if self.axes.len() == 2 && self.axes[0].axis == self.axes[1].axis {
            return Err(Error::Plan("scan axes must differ".into()));
        }
        for r in &self.axes {
            if r.steps < 1 {
                return Err(Error::Plan(format!("axis {} has no steps", r.axis)));
            }
            if !(r.min.is_finite() && r.max.is_finite()) || r.min > r.max {
                return Err(Error::Plan(format!("axis {} has invalid range [{}, {}]", r.axis, r.min, r.max)));
            }
        }
        momentum_grid(self.n, self.sector).map_err(|e| Error::Plan(e.to_string()))?;
        if self.quantity.needs_reference() && self.reference.is_none() {
            return Err(Error::Plan(format!("{} needs a reference point", self.quantity)));
        }
        if !(self.delta.is_finite() && self.delta != 0.0) {
            return Err(Error::Plan(format!("invalid step delta = {}", self.delta)));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::Plan(format!("invalid t_max = {}", self.t_max)));
        }
        if self.resolution < 3 {
            return Err(Error::Plan("resolution must be at least 3".into()));
        }
        Ok(())
    }

    /// Grid points in row-major order.
    pub fn points(&self) -> Vec<CouplingPoint> {
        let first = self.axes[0];
        let mut out = Vec::new();
        for a in first.values() {
            let p = self.fixed.with(first.axis, a);
            match self.axes.get(1) {
                Some(second) => out.extend(second.values().into_iter().map(|b| p.with(second.axis, b))),
                None => out.push(p),
            }
        }
        out
    }

    pub fn schema(&self) -> Vec<String> {
        self.axes
            .iter()
            .map(|r| r.axis.name())
            .chain(self.quantity.columns().iter().copied())
            .chain(["flags"])
            .map(str::to_string)
            .collect()
    }

    /// Parses `key = value` lines (`#` starts a comment). Keys mirror the CLI
    /// flags: `quantity`, `axis` (repeatable, `axis:min:max:steps`), `lx`,
    /// `ly`, `h`, `N`, `sector`, `delta`, `direction`, `lx2`, `ly2`, `h2`,
    /// `t_max`, `dt`, `resolution`, `tol`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut quantity = None;
        let mut axes = Vec::new();
        let mut fixed = [0.0; 3];
        let mut reference: [Option<f64>; 3] = [None; 3];
        let mut plan = ScanPlan::new(Quantity::Gap, Vec::new(), CouplingPoint { lambda_x: 0.0, lambda_y: 0.0, h: 0.0 });
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Plan(format!("line {}: expected key = value", lineno + 1)))?;
            let num = |v: &str| -> Result<f64> {
                v.parse().map_err(|_| Error::Plan(format!("line {}: '{v}' is not a number", lineno + 1)))
            };
            let int = |v: &str| -> Result<usize> {
                v.parse().map_err(|_| Error::Plan(format!("line {}: '{v}' is not an integer", lineno + 1)))
            };
            match key {
                "quantity" => quantity = Some(value.parse()?),
                "axis" => axes.push(value.parse()?),
                "lx" => fixed[0] = num(value)?,
                "ly" => fixed[1] = num(value)?,
                "h" => fixed[2] = num(value)?,
                "lx2" => reference[0] = Some(num(value)?),
                "ly2" => reference[1] = Some(num(value)?),
                "h2" => reference[2] = Some(num(value)?),
                "N" | "n" => plan.n = int(value)?,
                "sector" => {
                    plan.sector = ParitySector::from_q(int(value)? as i64).map_err(|e| Error::Plan(e.to_string()))?
                }
                "delta" => plan.delta = num(value)?,
                "direction" => plan.direction = value.parse().map_err(|e: Error| Error::Plan(e.to_string()))?,
                "t_max" => plan.t_max = num(value)?,
                "dt" => plan.dt = Some(num(value)?),
                "resolution" => plan.resolution = int(value)?,
                "tol" => plan.tol = num(value)?,
                other => return Err(Error::Plan(format!("line {}: unknown key '{other}'", lineno + 1))),
            }
        }
        plan.quantity = quantity.ok_or_else(|| Error::Plan("missing quantity".into()))?;
        plan.axes = axes;
        plan.fixed = CouplingPoint::from_coords(fixed).map_err(|e| Error::Plan(e.to_string()))?;
        if reference.iter().any(Option::is_some) {
            let c = [0, 1, 2].map(|i| reference[i].unwrap_or(0.0));
            plan.reference = Some(CouplingPoint::from_coords(c).map_err(|e| Error::Plan(e.to_string()))?);
        }
        plan.validate()?;
        Ok(plan)
    }
}

fn flags_cell(flags: Flags) -> Value {
    Value::Text(flags.to_string())
}

/// Rows contributed by one grid point (several for echo series).
fn evaluate(plan: &ScanPlan, grid: &MomentumGrid, p: &CouplingPoint) -> Result<Vec<(Vec<Value>, Flags)>> {
    let one = |values: Vec<Value>, flags: Flags| Ok(vec![(values, flags)]);
    let reference = || plan.reference.expect("validated");
    match plan.quantity {
        Quantity::Gap => one(vec![gap(p, plan.resolution).into()], Flags::empty()),
        Quantity::Classify => {
            let opts = ClassifyOptions { tol: plan.tol, resolution: plan.resolution, ..ClassifyOptions::default() };
            let r = classify_with(p, &opts);
            let surfaces = r.surfaces.iter().map(|s| s.name()).collect::<Vec<_>>().join("|");
            let flags = if r.is_gapless { Flags::GAPLESS } else { Flags::empty() };
            one(vec![r.gap_estimate.into(), r.is_gapless.into(), surfaces.into()], flags)
        }
        Quantity::FidelityStep => {
            let q = p.with(plan.direction, p.get(plan.direction) + plan.delta);
            let f = fidelity(p, &q, grid);
            one(vec![f.value.into()], f.flags)
        }
        Quantity::Qgt => {
            let t = quantum_geometric_tensor(p, grid);
            let e = t.entries;
            one(vec![e[0][0].into(), e[0][1].into(), e[0][2].into(), e[1][1].into(), e[1][2].into(), e[2][2].into()], t.flags)
        }
        Quantity::ChiF => {
            let s = fidelity_susceptibility(p, plan.direction.unit(), grid)?;
            one(vec![s.value.total.into(), s.value.per_site.into()], s.flags)
        }
        Quantity::OverlapF => {
            let f = fidelity(&reference(), p, grid);
            one(vec![f.value.into()], f.flags)
        }
        Quantity::OverlapF1 => {
            let f = fidelity(&reference(), p, grid);
            let f1 = pair_excitation_overlap(&reference(), p, grid);
            one(vec![f.value.into(), f1.value.into()], f.flags | f1.flags)
        }
        Quantity::Echo | Quantity::Revivals => {
            let protocol = QuenchProtocol::new(*p, reference(), grid.clone());
            let times = match plan.dt {
                Some(dt) => time_grid(plan.t_max, dt)?,
                None => default_time_grid(&protocol, plan.t_max)?,
            };
            let series = loschmidt_echo(&protocol, &times)?;
            if plan.quantity == Quantity::Echo {
                return Ok((0..series.times.len())
                    .map(|i| {
                        (vec![series.times[i].into(), series.values[i].into(), series.is_revival(i).into()], series.flags)
                    })
                    .collect());
            }
            let (t, l) = series.first_revival().map_or((f64::NAN, f64::NAN), |r| (r.time, r.value));
            one(vec![t.into(), l.into(), series.revivals.len().into()], series.flags)
        }
        Quantity::MaxVelocity => {
            let v = max_group_velocity(p, plan.resolution);
            one(vec![v.k.into(), v.velocity.into()], Flags::empty())
        }
    }
}

fn scan_rows(plan: &ScanPlan) -> Result<Vec<Vec<Value>>> {
    plan.validate()?;
    let grid = momentum_grid(plan.n, plan.sector)?;
    let points = plan.points();
    let width = plan.quantity.columns().len();
    let per_point: Vec<Vec<Vec<Value>>> = points
        .par_iter()
        .map(|p| {
            let axes: Vec<Value> = plan.axes.iter().map(|r| p.get(r.axis).into()).collect();
            let rows = match evaluate(plan, &grid, p) {
                Ok(rows) => rows.into_iter().map(|(v, f)| (v, flags_cell(f))).collect(),
                // A failing point becomes a row of NaN carrying the message.
                Err(e) => vec![(vec![Value::Float(f64::NAN); width], Value::Text(format!("error: {e}")))],
            };
            rows.into_iter()
                .map(|(values, flags)| axes.iter().cloned().chain(values).chain([flags]).collect())
                .collect()
        })
        .collect();
    Ok(per_point.into_iter().flatten().collect())
}

/// Worker count from the environment, if set to a positive integer.
pub fn env_workers() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&w| w > 0)
}

/// Evaluates the plan with `workers` threads (rayon's default when `None`).
pub fn run_scan_with_workers(plan: &ScanPlan, workers: Option<usize>) -> Result<Dataset> {
    let rows = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(|| scan_rows(plan))?,
        None => scan_rows(plan)?,
    };
    let plan_json = serde_json::to_value(plan).expect("plan serializes");
    Ok(Dataset { schema: plan.schema(), rows, metadata: Metadata::now(plan_json) })
}

pub fn run_scan(plan: &ScanPlan) -> Result<Dataset> {
    run_scan_with_workers(plan, env_workers())
}
