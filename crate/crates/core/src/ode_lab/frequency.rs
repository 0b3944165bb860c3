//! Oscillation detection and frequency measurement on a sampled trajectory.
//!
//! The detector discards the transient, then walks the observed component with
//! a hysteresis peak finder: a maximum only counts once the signal has risen by
//! at least `delta` into it and fallen by at least `delta` after it, where
//!
//! ```text
//! delta = rel_amplitude_floor * max(window range, abs_amplitude_floor,
//!                                   level_amplitude_floor * mean |signal|)
//! ```
//!
//! Every detected cycle therefore has a peak-to-trough amplitude of at least
//! `delta`. The level term keeps the step-size-controller ripple an explicit
//! integrator leaves around a stable focus (relative size ~ `rel_tol`) from
//! registering as an oscillation; small shoulders never split a cycle.
//!
//! A trajectory is oscillatory when
//! - at least `min_peaks` peaks are found,
//! - the inter-peak intervals have a coefficient of variation at most
//!   `period_cv_max`,
//! - the oscillation is sustained (when `max_tail_periods` is set): the last
//!   peak lies within that many mean periods of the window end. Damped
//!   oscillations lose their peaks to the amplitude floor well before that.
//!
//! The frequency is `1 / mean(inter-peak interval)`; otherwise it is `0`.

use serde::{Deserialize, Serialize};

use super::integrate::Trajectory;
use super::system::SystemId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencyConfig {
    pub transient_fraction: f64,
    pub min_peaks: usize,
    pub rel_amplitude_floor: f64,
    pub abs_amplitude_floor: f64,
    pub level_amplitude_floor: f64,
    pub period_cv_max: f64,
    /// `None` disables the sustain check.
    pub max_tail_periods: Option<f64>,
}

impl Default for FrequencyConfig {
    fn default() -> Self {
        FrequencyConfig {
            transient_fraction: 0.0,
            min_peaks: 2,
            rel_amplitude_floor: 0.01,
            abs_amplitude_floor: 1e-6,
            level_amplitude_floor: 1e-2,
            period_cv_max: 0.2,
            max_tail_periods: Some(2.0),
        }
    }
}

impl FrequencyConfig {
    /// Detector defaults for one system.
    ///
    /// The cell-cycle volume grows without bound, so its oscillations are
    /// episodes of a slowly drifting system that may end before `T`; the
    /// sustain check is off there.
    pub fn for_system(id: SystemId) -> Self {
        match id {
            SystemId::CellCycle => FrequencyConfig {
                max_tail_periods: None,
                ..Default::default()
            },
            _ => FrequencyConfig::default(),
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = (0.0..1.0).contains(&self.transient_fraction)
            && self.rel_amplitude_floor >= 0.0
            && self.abs_amplitude_floor >= 0.0
            && self.level_amplitude_floor >= 0.0
            && self.period_cv_max >= 0.0
            && self.max_tail_periods.is_none_or(|m| m > 0.0);
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Config(format!(
                "invalid frequency config {self:?}"
            )))
        }
    }
}

/// Diagnostic breakdown of a detector decision.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakAnalysis {
    pub peak_times: Vec<f64>,
    pub min_cycle_amplitude: f64,
    pub window_range: f64,
    pub interval_cv: f64,
    pub frequency: f64,
}

/// Refines a sampled maximum at `i` by fitting a parabola through its neighbours.
fn refine_peak(times: &[f64], s: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= s.len() {
        return times[i];
    }
    let (a, b, c) = (s[i - 1], s[i], s[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return times[i];
    }
    let offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    let dt = 0.5 * (times[i + 1] - times[i - 1]);
    times[i] + offset * dt
}

/// Hysteresis extrema walk. Returns `(peak index, amplitude)` pairs where the
/// amplitude is the smaller of the rise into and the fall out of the peak.
fn hysteresis_peaks(s: &[f64], delta: f64) -> Vec<(usize, f64)> {
    let mut peaks = Vec::new();
    let mut looking_for_max = false;
    let (mut mx, mut mx_pos) = (f64::NEG_INFINITY, 0usize);
    let mut mn = f64::INFINITY;
    let mut last_trough = f64::NAN;
    for (i, &v) in s.iter().enumerate() {
        if v > mx {
            mx = v;
            mx_pos = i;
        }
        if v < mn {
            mn = v;
        }
        if looking_for_max {
            if v < mx - delta {
                let rise = mx - last_trough;
                peaks.push((mx_pos, rise));
                mn = v;
                looking_for_max = false;
            }
        } else if v > mn + delta {
            last_trough = mn;
            mx = v;
            mx_pos = i;
            looking_for_max = true;
        }
    }
    // Attach the fall that follows each confirmed peak.
    let mut out = Vec::with_capacity(peaks.len());
    for (k, &(p, rise)) in peaks.iter().enumerate() {
        let end = peaks.get(k + 1).map_or(s.len(), |&(q, _)| q);
        let trough = s[p..end].iter().cloned().fold(f64::INFINITY, f64::min);
        out.push((p, rise.min(s[p] - trough)));
    }
    out
}

/// Full detector with diagnostics.
pub fn analyze(traj: &Trajectory, component: usize, cfg: &FrequencyConfig) -> PeakAnalysis {
    let signal = traj.component(component);
    analyze_signal(&traj.times, &signal, cfg)
}

pub fn analyze_signal(times: &[f64], signal: &[f64], cfg: &FrequencyConfig) -> PeakAnalysis {
    let mut out = PeakAnalysis {
        peak_times: Vec::new(),
        min_cycle_amplitude: 0.0,
        window_range: 0.0,
        interval_cv: f64::INFINITY,
        frequency: 0.0,
    };
    if times.len() < 3 || times.len() != signal.len() {
        return out;
    }
    let t0 = times[0];
    let t_end = *times.last().unwrap();
    let cut = t0 + cfg.transient_fraction * (t_end - t0);
    let start = times.partition_point(|&t| t < cut);
    let (tw, sw) = (&times[start..], &signal[start..]);
    if sw.len() < 3 || !sw.iter().all(|v| v.is_finite()) {
        return out;
    }
    let hi = sw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = sw.iter().cloned().fold(f64::INFINITY, f64::min);
    out.window_range = hi - lo;
    let level = sw.iter().map(|v| v.abs()).sum::<f64>() / sw.len() as f64;
    let delta = cfg.rel_amplitude_floor
        * out
            .window_range
            .max(cfg.abs_amplitude_floor)
            .max(cfg.level_amplitude_floor * level);

    let peaks = hysteresis_peaks(sw, delta);
    out.peak_times = peaks.iter().map(|&(i, _)| refine_peak(tw, sw, i)).collect();
    out.min_cycle_amplitude = peaks.iter().map(|&(_, a)| a).fold(f64::INFINITY, f64::min);
    if peaks.len() < cfg.min_peaks.max(2) || out.min_cycle_amplitude < delta {
        return out;
    }

    let intervals: Vec<f64> = out.peak_times.windows(2).map(|w| w[1] - w[0]).collect();
    let n = intervals.len() as f64;
    let mean = intervals.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return out;
    }
    let var = intervals.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    out.interval_cv = var.sqrt() / mean;
    if out.interval_cv > cfg.period_cv_max {
        return out;
    }
    if let Some(max_tail) = cfg.max_tail_periods {
        if t_end - out.peak_times.last().unwrap() > max_tail * mean {
            return out;
        }
    }
    out.frequency = 1.0 / mean;
    out
}

/// The oscillatory-frequency label of a trajectory (0 when non-oscillatory).
pub fn oscillatory_frequency(traj: &Trajectory, component: usize, cfg: &FrequencyConfig) -> f64 {
    analyze(traj, component, cfg).frequency
}
