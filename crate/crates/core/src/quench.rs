//! Sudden quenches: Loschmidt echo, its statistics and revival detection.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flags::{Flagged, Flags};
use crate::geometry::angle_differences;
use crate::model::{CouplingPoint, MomentumGrid};
use crate::spectrum::{max_group_velocity, quasiparticle_energy, unpaired_occupations};

/// Minimum number of samples an averaging window must hold.
pub const MIN_WINDOW_SAMPLES: usize = 100;

const VELOCITY_RESOLUTION: usize = 4096;

/// Ground state of `initial`, evolved with the Hamiltonian at `final_point`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchProtocol {
    pub initial: CouplingPoint,
    pub final_point: CouplingPoint,
    pub grid: MomentumGrid,
}

impl QuenchProtocol {
    pub fn new(initial: CouplingPoint, final_point: CouplingPoint, grid: MomentumGrid) -> Self {
        Self { initial, final_point, grid }
    }

    pub fn is_trivial(&self) -> bool {
        self.initial == self.final_point
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Revival {
    pub time: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoStats {
    pub mean: f64,
    pub std: f64,
    /// Closed time interval the statistics were taken over.
    pub window: (f64, f64),
}

impl EchoStats {
    pub fn threshold(&self) -> f64 {
        self.mean + 2.0 * self.std
    }
}

/// Sampled echo `L(t)` together with its statistics and revivals.
///
/// `stats` is `None` when the default window holds too few samples; in that
/// case `revivals` is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub stats: Option<EchoStats>,
    pub revivals: Vec<Revival>,
    /// Maxima closer than this are reported as one revival.
    pub coalesce_window: f64,
    pub flags: Flags,
}

impl EchoSeries {
    /// Recomputes statistics over `window` and re-detects revivals.
    pub fn with_window(mut self, window: (f64, f64)) -> Result<Self> {
        let (mean, std) = echo_statistics(&self, window)?;
        self.stats = Some(EchoStats { mean, std, window });
        self.revivals = detect_revivals(&self);
        Ok(self)
    }

    pub fn with_coalesce_window(mut self, width: f64) -> Self {
        self.coalesce_window = width;
        self.revivals = detect_revivals(&self);
        self
    }

    pub fn is_revival(&self, i: usize) -> bool {
        self.revivals.iter().any(|r| r.time == self.times[i])
    }

    pub fn first_revival(&self) -> Option<Revival> {
        self.revivals.first().copied()
    }

    /// Largest sample with time in `[a, b]`.
    pub fn peak_in(&self, a: f64, b: f64) -> Option<Revival> {
        self.times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| (a..=b).contains(*t))
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(&time, &value)| Revival { time, value })
    }
}

/// `chi_k = theta_k(initial) - theta_k(final)` over paired momenta.
pub fn chi_angles(protocol: &QuenchProtocol) -> Flagged<Vec<f64>> {
    angle_differences(&protocol.initial, &protocol.final_point, &protocol.grid)
}

/// `max_k Delta_k` of the final Hamiltonian over the protocol's paired momenta.
fn max_final_energy(protocol: &QuenchProtocol) -> f64 {
    protocol.grid.paired_k().map(|k| quasiparticle_energy(k, &protocol.final_point)).fold(0.0, f64::max)
}

/// Uniform grid `0, dt, 2dt, ...` up to and including `t_max`.
pub fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::invalid(format!("t_max must be non-negative, got {t_max}")));
    }
    let steps = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=steps).map(|i| i as f64 * dt).collect())
}

/// Step `pi / (40 max_k Delta_k)`, resolving the fastest mode with 20 samples
/// per period.
pub fn default_time_step(protocol: &QuenchProtocol) -> Result<f64> {
    let emax = max_final_energy(protocol);
    if emax <= 0.0 {
        return Err(Error::invalid("final Hamiltonian has a flat zero spectrum"));
    }
    Ok(PI / (40.0 * emax))
}

pub fn default_time_grid(protocol: &QuenchProtocol, t_max: f64) -> Result<Vec<f64>> {
    time_grid(t_max, default_time_step(protocol)?)
}

/// `N / (20 v_max)` with `v_max` the maximal group velocity at the final point.
pub fn default_coalesce_window(protocol: &QuenchProtocol) -> f64 {
    let v = max_group_velocity(&protocol.final_point, VELOCITY_RESOLUTION).velocity;
    if v > 0.0 {
        protocol.grid.n() as f64 / (20.0 * v)
    } else {
        0.0
    }
}

/// `N / (2 v)`: time for quasiparticles emitted back to back to meet again.
pub fn revival_time_bound(n: usize, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::invalid(format!("velocity must be positive, got {v}")));
    }
    Ok(n as f64 / (2.0 * v))
}

/// Loschmidt echo `L(t) = prod_k (1 - sin^2 chi_k sin^2(2 t Delta_k))`.
///
/// The self-conjugate modes only contribute a phase, whatever their
/// occupations. Statistics use the default window (first local minimum to
/// the end) when it holds enough samples.
pub fn loschmidt_echo(protocol: &QuenchProtocol, times: &[f64]) -> Result<EchoSeries> {
    if times.is_empty() {
        return Err(Error::EmptyTimes);
    }
    if times[0] < 0.0 || !times.iter().all(|t| t.is_finite()) {
        return Err(Error::invalid("times must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("times must be sorted"));
    }

    let chi = chi_angles(protocol);
    let mut flags = chi.flags | unpaired_occupations(&protocol.grid, &protocol.initial).flags;
    if protocol.is_trivial() {
        flags |= Flags::TRIVIAL;
    }
    let modes: Vec<(f64, f64)> = protocol
        .grid
        .paired_k()
        .zip(&chi.value)
        .map(|(k, c)| (c.sin().powi(2), quasiparticle_energy(k, &protocol.final_point)))
        .collect();

    let values: Vec<f64> = times
        .par_iter()
        .map(|&t| modes.iter().fold(1.0, |acc, &(s2, e)| acc * (1.0 - s2 * (2.0 * t * e).sin().powi(2))))
        .collect();

    let mut series = EchoSeries {
        times: times.to_vec(),
        values,
        stats: None,
        revivals: Vec::new(),
        coalesce_window: default_coalesce_window(protocol),
        flags,
    };
    let window = default_window(&series);
    match series.clone().with_window(window) {
        Ok(s) => series = s,
        Err(Error::TooFewSamples { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(series)
}

fn is_local_min(v: &[f64], i: usize) -> bool {
    v[i] <= v[i - 1] && v[i] <= v[i + 1]
}

fn is_local_max(v: &[f64], i: usize) -> bool {
    v[i] >= v[i - 1] && v[i] >= v[i + 1]
}

/// From the first interior local minimum of `L` to the last sample.
pub fn default_window(series: &EchoSeries) -> (f64, f64) {
    let v = &series.values;
    let t = &series.times;
    let start = (1..v.len().saturating_sub(1)).find(|&i| is_local_min(v, i)).map_or(t[0], |i| t[i]);
    (start, t[t.len() - 1])
}

/// Mean and population standard deviation of the samples in `window`.
pub fn echo_statistics(series: &EchoSeries, window: (f64, f64)) -> Result<(f64, f64)> {
    let (a, b) = window;
    let samples: Vec<f64> =
        series.times.iter().zip(&series.values).filter(|(t, _)| (a..=b).contains(*t)).map(|(_, &v)| v).collect();
    if samples.len() < MIN_WINDOW_SAMPLES {
        return Err(Error::TooFewSamples { found: samples.len(), needed: MIN_WINDOW_SAMPLES });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Merges maxima (by index) that lie within `width` of the previous one and
/// keeps the highest of each group.
fn coalesce(series: &EchoSeries, maxima: &[usize], width: f64) -> Vec<Revival> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in maxima {
        match groups.last_mut() {
            Some(g) if series.times[i] - series.times[g[g.len() - 1]] <= width => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
        .iter()
        .map(|g| {
            let best = g.iter().copied().fold(g[0], |b, i| if series.values[i] > series.values[b] { i } else { b });
            Revival { time: series.times[best], value: series.values[best] }
        })
        .collect()
}

fn local_maxima_in(series: &EchoSeries, a: f64, b: f64, keep: impl Fn(f64) -> bool) -> Vec<usize> {
    let v = &series.values;
    (1..v.len().saturating_sub(1))
        .filter(|&i| (a..=b).contains(&series.times[i]) && is_local_max(v, i) && keep(v[i]))
        .collect()
}

/// Local maxima inside the statistics window exceeding `mean + 2 std`.
pub fn detect_revivals(series: &EchoSeries) -> Vec<Revival> {
    let Some(stats) = series.stats else {
        return Vec::new();
    };
    let threshold = stats.threshold();
    let maxima = local_maxima_in(series, stats.window.0, stats.window.1, |x| x > threshold);
    coalesce(series, &maxima, series.coalesce_window)
}

/// Sub-threshold maxima before the first revival.
///
/// Statistics are retaken over the pre-revival stretch (burn-in to one
/// coalescing window before the first revival); maxima above that
/// `mean + std` but below the full-series revival threshold are returned.
pub fn quasiparticle_peak_scan(protocol: &QuenchProtocol, horizon: f64) -> Result<Vec<Revival>> {
    if protocol.is_trivial() {
        return Ok(Vec::new());
    }
    let times = default_time_grid(protocol, horizon)?;
    let series = loschmidt_echo(protocol, &times)?;
    let (Some(stats), Some(first)) = (series.stats, series.first_revival()) else {
        return Err(Error::NoRevival { horizon });
    };
    let pre = (stats.window.0, first.time - series.coalesce_window);
    let (mean, std) = echo_statistics(&series, pre)?;
    let threshold = stats.threshold();
    let maxima = local_maxima_in(&series, pre.0, pre.1, |x| x > mean + std && x < threshold);
    Ok(coalesce(&series, &maxima, series.coalesce_window))
}
