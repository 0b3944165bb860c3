//! Adaptive explicit integration (Dormand–Prince 5(4)) with a stiff fallback,
//! sampled through dense output onto a uniform grid.

use serde::{Deserialize, Serialize};

use super::system::SystemSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub output_grid_size: usize,
    /// Hand a trajectory flagged as stiff over to the Rosenbrock method.
    #[serde(default = "default_true")]
    pub stiff_switch: bool,
}

fn default_true() -> bool {
    true
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            max_steps: 1_000_000,
            output_grid_size: 4096,
            stiff_switch: true,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Config("integration tolerances must be > 0".into()));
        }
        if self.output_grid_size < 2 {
            return Err(Error::Config("output_grid_size must be >= 2".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Solution sampled on a uniform grid over `[0, T]`. States are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    states: Vec<f64>,
    dim: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Time at which the integrator switched to the stiff method, if it did.
    pub stiff_from: Option<f64>,
}

impl Trajectory {
    /// Builds a trajectory from a uniform-or-not time vector and row-major states.
    pub fn from_parts(times: Vec<f64>, states: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || states.len() != times.len() * dim {
            return Err(Error::InvalidInput("trajectory shape mismatch".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "trajectory times not strictly increasing".into(),
            ));
        }
        if !states.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericDomain("trajectory state"));
        }
        Ok(Trajectory {
            times,
            states,
            dim,
            accepted_steps: 0,
            rejected_steps: 0,
            stiff_from: None,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states
            .iter()
            .skip(i)
            .step_by(self.dim)
            .copied()
            .collect()
    }
}

// Dormand & Prince tableau (autonomous systems, so no c_i) with Hairer's
// dense-output coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;

fn scaled_norm(v: &[f64], y0: &[f64], y1: &[f64], cfg: &IntegrationConfig) -> f64 {
    let n = v.len() as f64;
    let sum: f64 = v
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(&e, (&a, &b))| {
            let sk = cfg.abs_tol + cfg.rel_tol * a.abs().max(b.abs());
            (e / sk).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step(
    spec: &SystemSpec,
    coeffs: &[f64],
    y0: &[f64],
    f0: &[f64],
    cfg: &IntegrationConfig,
    h_max: f64,
) -> Result<f64> {
    let d0 = scaled_norm(y0, y0, y0, cfg);
    let d1 = scaled_norm(f0, y0, y0, cfg);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(h_max);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    spec.rhs_into(&y1, coeffs, &mut f1)?;
    let df: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled_norm(&df, y0, y0, cfg) / h0;
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / m).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(h_max))
}

/// Collects dense-output samples onto the uniform output grid.
struct GridSink {
    grid: usize,
    dt: f64,
    t_end: f64,
    next: usize,
    times: Vec<f64>,
    states: Vec<f64>,
}

impl GridSink {
    fn new(grid: usize, t_end: f64, y0: &[f64]) -> Self {
        let mut states = Vec::with_capacity(grid * y0.len());
        states.extend_from_slice(y0);
        let mut times = Vec::with_capacity(grid);
        times.push(0.0);
        GridSink {
            grid,
            dt: t_end / (grid - 1) as f64,
            t_end,
            next: 1,
            times,
            states,
        }
    }

    fn time(&self, k: usize) -> f64 {
        if k == self.grid - 1 {
            self.t_end
        } else {
            k as f64 * self.dt
        }
    }

    /// Emits every grid point in `(t, t_new]`; `interp(theta)` appends the
    /// state at `t + theta * (t_new - t)`. On the final step the endpoint is
    /// taken from `y_new` exactly.
    fn fill(
        &mut self,
        t: f64,
        t_new: f64,
        last: bool,
        y_new: &[f64],
        mut interp: impl FnMut(f64, &mut Vec<f64>),
    ) {
        let h = t_new - t;
        while self.next < self.grid && (last || self.time(self.next) <= t_new) {
            let tg = self.time(self.next);
            self.times.push(tg);
            if self.next == self.grid - 1 && last {
                self.states.extend_from_slice(y_new);
            } else {
                interp((tg - t) / h, &mut self.states);
            }
            self.next += 1;
        }
    }
}

enum Dopri5Exit {
    Done,
    Stiff { t: f64, y: Vec<f64>, h: f64 },
}

struct StepCounts {
    accepted: usize,
    rejected: usize,
}

impl StepCounts {
    fn total(&self) -> usize {
        self.accepted + self.rejected
    }
}

// Hairer's stiffness test: h * |lambda| estimated from the last two stages
// exceeds the stability bound on this many accepted steps in a row.
const STIFF_HLAMB: f64 = 3.25;
const STIFF_COUNT: usize = 15;
const NONSTIFF_RESET: usize = 6;

/// Integrates `spec` at `coeffs` over `[0, T]` and samples the dense output on
/// `output_grid_size` uniformly spaced times (first 0, last T).
///
/// Runs Dormand–Prince 5(4). With `stiff_switch` set, a trajectory that the
/// stiffness test flags continues from the flagged point with a linearly
/// implicit Rosenbrock 2(3) method.
pub fn integrate(spec: &SystemSpec, coeffs: &[f64], cfg: &IntegrationConfig) -> Result<Trajectory> {
    spec.check_coeffs(coeffs)?;
    cfg.validate()?;
    let mut sink = GridSink::new(cfg.output_grid_size, spec.t_end, &spec.initial_state);
    let mut counts = StepCounts {
        accepted: 0,
        rejected: 0,
    };
    let mut stiff_from = None;
    match dopri5(spec, coeffs, cfg, &mut sink, &mut counts)? {
        Dopri5Exit::Done => {}
        Dopri5Exit::Stiff { t, y, h } => {
            stiff_from = Some(t);
            rosenbrock23(spec, coeffs, cfg, &mut sink, &mut counts, t, y, h)?;
        }
    }
    debug_assert_eq!(sink.times.len(), cfg.output_grid_size);
    Ok(Trajectory {
        times: sink.times,
        states: sink.states,
        dim: spec.state_dim(),
        accepted_steps: counts.accepted,
        rejected_steps: counts.rejected,
        stiff_from,
    })
}

fn dopri5(
    spec: &SystemSpec,
    coeffs: &[f64],
    cfg: &IntegrationConfig,
    sink: &mut GridSink,
    counts: &mut StepCounts,
) -> Result<Dopri5Exit> {
    let n = spec.state_dim();
    let t_end = spec.t_end;

    let mut y = spec.initial_state.clone();
    let mut k1 = vec![0.0; n];
    spec.rhs_into(&y, coeffs, &mut k1)?;

    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut cont = vec![[0.0f64; 5]; n];

    let h_max = t_end;
    let mut h = initial_step(spec, coeffs, &y, &k1, cfg, h_max)?;
    let mut t = 0.0;
    let mut fac_old: f64 = 1e-4;
    let mut last = false;
    let (mut stiff_run, mut nonstiff_run) = (0usize, 0usize);

    loop {
        if counts.total() >= cfg.max_steps {
            return Err(Error::IntegrationFailure {
                reached_time: t,
                steps: counts.total(),
            });
        }
        if t + 1.01 * h >= t_end {
            h = t_end - t;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::IntegrationFailure {
                reached_time: t,
                steps: counts.total(),
            });
        }

        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        spec.rhs_into(&tmp, coeffs, &mut k2)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        spec.rhs_into(&tmp, coeffs, &mut k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        spec.rhs_into(&tmp, coeffs, &mut k4)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        spec.rhs_into(&tmp, coeffs, &mut k5)?;
        for i in 0..n {
            tmp[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        spec.rhs_into(&tmp, coeffs, &mut k6)?;
        for i in 0..n {
            y_new[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        if !y_new.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericDomain("integrator state"));
        }
        spec.rhs_into(&y_new, coeffs, &mut k7)?;
        for i in 0..n {
            err[i] =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err_norm = scaled_norm(&err, &y, &y_new, cfg);
        if !err_norm.is_finite() {
            return Err(Error::NumericDomain("integrator error estimate"));
        }

        let fac11 = err_norm.powf(0.2 - PI_BETA * 0.75);
        if err_norm <= 1.0 {
            let t_new = t + h;
            if cfg.stiff_switch && !last {
                // `tmp` still holds the stage-6 point, `k6` its slope.
                let mut num = 0.0;
                let mut den = 0.0;
                for i in 0..n {
                    num += (k7[i] - k6[i]).powi(2);
                    den += (y_new[i] - tmp[i]).powi(2);
                }
                if den > 0.0 && h * (num / den).sqrt() > STIFF_HLAMB {
                    nonstiff_run = 0;
                    stiff_run += 1;
                } else {
                    nonstiff_run += 1;
                    if nonstiff_run == NONSTIFF_RESET {
                        stiff_run = 0;
                    }
                }
            }
            for i in 0..n {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                cont[i] = [
                    y[i],
                    ydiff,
                    bspl,
                    ydiff - h * k7[i] - bspl,
                    h * (D1 * k1[i]
                        + D3 * k3[i]
                        + D4 * k4[i]
                        + D5 * k5[i]
                        + D6 * k6[i]
                        + D7 * k7[i]),
                ];
            }
            sink.fill(t, t_new, last, &y_new, |theta, out| {
                let theta1 = 1.0 - theta;
                for c in &cont {
                    out.push(
                        c[0] + theta * (c[1] + theta1 * (c[2] + theta * (c[3] + theta1 * c[4]))),
                    );
                }
            });
            counts.accepted += 1;
            let fac = (fac11 / fac_old.powf(PI_BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            fac_old = err_norm.max(1e-4);
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            t = t_new;
            if last {
                return Ok(Dopri5Exit::Done);
            }
            h = (h / fac).min(h_max);
            if stiff_run >= STIFF_COUNT {
                return Ok(Dopri5Exit::Stiff { t, y, h });
            }
        } else {
            counts.rejected += 1;
            last = false;
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }
}

// Shampine & Reichelt's L-stable Rosenbrock 2(3) pair.
const ROS_D: f64 = 0.292_893_218_813_452_5; // 1 / (2 + sqrt 2)
const ROS_E32: f64 = 7.414_213_562_373_095; // 6 + sqrt 2

/// Forward-difference Jacobian, column-major into `jac[j * n + i] = df_i/dy_j`.
fn jacobian(
    spec: &SystemSpec,
    coeffs: &[f64],
    y: &[f64],
    f0: &[f64],
    jac: &mut [f64],
    work: &mut [f64],
    fy: &mut [f64],
) -> Result<()> {
    let n = y.len();
    work.copy_from_slice(y);
    for j in 0..n {
        let delta = f64::EPSILON.sqrt() * y[j].abs().max(1e-5);
        work[j] = y[j] + delta;
        spec.rhs_into(work, coeffs, fy)?;
        let inv = 1.0 / (work[j] - y[j]);
        for i in 0..n {
            jac[j * n + i] = (fy[i] - f0[i]) * inv;
        }
        work[j] = y[j];
    }
    Ok(())
}

/// In-place LU with partial pivoting of a column-major `n x n` matrix.
fn lu_factor(a: &mut [f64], n: usize, piv: &mut [usize]) -> Result<()> {
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[k * n + i].abs() > a[k * n + p].abs() {
                p = i;
            }
        }
        piv[k] = p;
        if a[k * n + p] == 0.0 || !a[k * n + p].is_finite() {
            return Err(Error::NumericDomain("singular Rosenbrock iteration matrix"));
        }
        if p != k {
            for j in 0..n {
                a.swap(j * n + k, j * n + p);
            }
        }
        let inv = 1.0 / a[k * n + k];
        for i in k + 1..n {
            a[k * n + i] *= inv;
        }
        for j in k + 1..n {
            let akj = a[j * n + k];
            if akj != 0.0 {
                for i in k + 1..n {
                    a[j * n + i] -= a[k * n + i] * akj;
                }
            }
        }
    }
    Ok(())
}

fn lu_solve(a: &[f64], n: usize, piv: &[usize], b: &mut [f64]) {
    for (k, &p) in piv.iter().enumerate() {
        b.swap(k, p);
    }
    for k in 0..n {
        for i in k + 1..n {
            b[i] -= a[k * n + i] * b[k];
        }
    }
    for k in (0..n).rev() {
        b[k] /= a[k * n + k];
        for i in 0..k {
            b[i] -= a[k * n + i] * b[k];
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn rosenbrock23(
    spec: &SystemSpec,
    coeffs: &[f64],
    cfg: &IntegrationConfig,
    sink: &mut GridSink,
    counts: &mut StepCounts,
    mut t: f64,
    mut y: Vec<f64>,
    mut h: f64,
) -> Result<()> {
    let n = y.len();
    let t_end = spec.t_end;
    let mut f0 = vec![0.0; n];
    spec.rhs_into(&y, coeffs, &mut f0)?;
    let mut jac = vec![0.0; n * n];
    let mut w = vec![0.0; n * n];
    let mut piv = vec![0usize; n];
    let mut work = vec![0.0; n];
    let mut fy = vec![0.0; n];
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut f1 = vec![0.0; n];
    let mut f2 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut jac_fresh = false;
    let mut last = false;

    loop {
        if counts.total() >= cfg.max_steps {
            return Err(Error::IntegrationFailure {
                reached_time: t,
                steps: counts.total(),
            });
        }
        if t + 1.01 * h >= t_end {
            h = t_end - t;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::IntegrationFailure {
                reached_time: t,
                steps: counts.total(),
            });
        }
        if !jac_fresh {
            jacobian(spec, coeffs, &y, &f0, &mut jac, &mut work, &mut fy)?;
            jac_fresh = true;
        }
        let hd = h * ROS_D;
        for (wij, jij) in w.iter_mut().zip(&jac) {
            *wij = -hd * jij;
        }
        for i in 0..n {
            w[i * n + i] += 1.0;
        }
        lu_factor(&mut w, n, &mut piv)?;

        k1.copy_from_slice(&f0);
        lu_solve(&w, n, &piv, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        spec.rhs_into(&tmp, coeffs, &mut f1)?;
        for i in 0..n {
            k2[i] = f1[i] - k1[i];
        }
        lu_solve(&w, n, &piv, &mut k2);
        for i in 0..n {
            k2[i] += k1[i];
            y_new[i] = y[i] + h * k2[i];
        }
        if !y_new.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericDomain("integrator state"));
        }
        spec.rhs_into(&y_new, coeffs, &mut f2)?;
        for i in 0..n {
            k3[i] = f2[i] - ROS_E32 * (k2[i] - f1[i]) - 2.0 * (k1[i] - f0[i]);
        }
        lu_solve(&w, n, &piv, &mut k3);
        for i in 0..n {
            err[i] = h / 6.0 * (k1[i] - 2.0 * k2[i] + k3[i]);
        }
        let err_norm = scaled_norm(&err, &y, &y_new, cfg);
        if !err_norm.is_finite() {
            return Err(Error::NumericDomain("integrator error estimate"));
        }
        let fac = (SAFETY * err_norm.max(1e-10).powf(-1.0 / 3.0)).clamp(FAC_MIN, 5.0);
        if err_norm <= 1.0 {
            let t_new = t + h;
            let c1 = 1.0 / (1.0 - 2.0 * ROS_D);
            sink.fill(t, t_new, last, &y_new, |s, out| {
                let a = s * (1.0 - s) * c1;
                let b = s * (s - 2.0 * ROS_D) * c1;
                for i in 0..n {
                    out.push(y[i] + h * (a * k1[i] + b * k2[i]));
                }
            });
            counts.accepted += 1;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut f0, &mut f2);
            t = t_new;
            jac_fresh = false;
            if last {
                return Ok(());
            }
            h = (h * fac).min(t_end);
        } else {
            counts.rejected += 1;
            last = false;
            h *= fac.min(1.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode_lab::system::SystemId;

    fn brusselator_tail_amplitude(coeffs: &[f64]) -> f64 {
        let spec = SystemId::Brusselator.spec();
        let traj = integrate(&spec, coeffs, &IntegrationConfig::default()).unwrap();
        let x = traj.component(0);
        let tail = &x[x.len() * 3 / 4..];
        let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
        let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
        hi - lo
    }

    #[test]
    fn grid_shape_and_endpoints() {
        let spec = SystemId::Brusselator.spec();
        let cfg = IntegrationConfig {
            output_grid_size: 101,
            ..Default::default()
        };
        let traj = integrate(&spec, &[1.0, 3.0], &cfg).unwrap();
        assert_eq!(traj.len(), 101);
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(*traj.times.last().unwrap(), 500.0);
        assert_eq!(traj.state(0), &[10.0, 10.0]);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn stable_focus_converges_to_equilibrium() {
        let spec = SystemId::Brusselator.spec();
        let traj = integrate(&spec, &[1.0, 1.5], &IntegrationConfig::default()).unwrap();
        let last = traj.last_state();
        assert!((last[0] - 1.0).abs() < 1e-5, "{last:?}");
        assert!((last[1] - 1.5).abs() < 1e-5, "{last:?}");
        assert!(brusselator_tail_amplitude(&[1.0, 1.5]) < 1e-4);
    }

    #[test]
    fn limit_cycle_keeps_amplitude() {
        assert!(brusselator_tail_amplitude(&[1.0, 3.0]) > 1.0);
    }

    #[test]
    fn cell_volume_matches_closed_form() {
        // dV/dt = 0.006 V decouples from the rest of the cell-cycle state.
        let spec = SystemId::CellCycle.spec();
        let traj = integrate(&spec, &spec.midpoint(), &IntegrationConfig::default()).unwrap();
        let v_end = traj.last_state()[0];
        let exact = 30.0 * (0.006f64 * 1000.0).exp();
        assert!(((v_end - exact) / exact).abs() < 1e-5, "{v_end} vs {exact}");
    }

    #[test]
    fn deterministic_bitwise() {
        let spec = SystemId::ActivatorInhibitor.spec();
        let c = spec.midpoint();
        let a = integrate(&spec, &c, &IntegrationConfig::default()).unwrap();
        let b = integrate(&spec, &c, &IntegrationConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn step_exhaustion_reports_time() {
        let spec = SystemId::Brusselator.spec();
        let cfg = IntegrationConfig {
            max_steps: 10,
            ..Default::default()
        };
        match integrate(&spec, &[1.0, 3.0], &cfg) {
            Err(Error::IntegrationFailure {
                reached_time,
                steps,
            }) => {
                assert_eq!(steps, 10);
                assert!(reached_time > 0.0 && reached_time < 500.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mpf_zero_l6_fails_fast() {
        let spec = SystemId::Mpf.spec();
        let err = integrate(
            &spec,
            &[0.05, 0.05, 0.2, 7.0, 0.5, 0.0],
            &IntegrationConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DivisionByZero(_)));
    }

    #[test]
    fn self_convergence_at_midpoints() {
        let tight = IntegrationConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            ..Default::default()
        };
        for id in SystemId::ALL {
            let spec = id.spec();
            let c = spec.midpoint();
            let a = integrate(&spec, &c, &IntegrationConfig::default()).unwrap();
            let b = integrate(&spec, &c, &tight).unwrap();
            for (x, y) in a.last_state().iter().zip(b.last_state()) {
                let rel = (x - y).abs() / y.abs().max(1e-12);
                assert!(rel < 1e-3, "{id}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn lu_solves_a_pivoting_system() {
        // Column-major; the first column forces a row swap at every step.
        let a0 = [1e-3, 4.0, 2.0, 2.0, 1.0, 7.0, 3.0, 5.0, 1.0];
        let x = [1.0, -2.0, 0.5];
        let b0: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a0[j * 3 + i] * x[j]).sum())
            .collect();
        let mut a = a0.to_vec();
        let mut piv = [0usize; 3];
        lu_factor(&mut a, 3, &mut piv).unwrap();
        let mut b = b0.clone();
        lu_solve(&a, 3, &piv, &mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12, "{b:?}");
        }
    }

    #[test]
    fn rosenbrock_tracks_reference_and_converges() {
        let spec = SystemId::Brusselator.spec();
        let c = [1.0, 1.5];
        let reference = integrate(
            &spec,
            &c,
            &IntegrationConfig {
                rel_tol: 1e-11,
                abs_tol: 1e-13,
                ..Default::default()
            },
        )
        .unwrap();
        let mut errors = Vec::new();
        for tol in [1e-4, 1e-6, 1e-8] {
            let cfg = IntegrationConfig {
                rel_tol: tol,
                abs_tol: tol * 1e-3,
                ..Default::default()
            };
            let mut sink = GridSink::new(cfg.output_grid_size, spec.t_end, &spec.initial_state);
            let mut counts = StepCounts {
                accepted: 0,
                rejected: 0,
            };
            rosenbrock23(
                &spec,
                &c,
                &cfg,
                &mut sink,
                &mut counts,
                0.0,
                spec.initial_state.clone(),
                1e-3,
            )
            .unwrap();
            assert_eq!(sink.times.len(), cfg.output_grid_size);
            let k = 100;
            let e = (0..2)
                .map(|i| (sink.states[2 * k + i] - reference.state(k)[i]).abs())
                .fold(0.0, f64::max);
            errors.push(e);
        }
        assert!(errors[0] < 1e-2 && errors[2] < 1e-5, "{errors:?}");
        assert!(errors[1] < errors[0] && errors[2] < errors[1], "{errors:?}");
    }

    #[test]
    fn stiff_cell_cycle_switches_and_finishes() {
        let spec = SystemId::CellCycle.spec();
        let c = [7.333, 0.02757, 9.583, 0.1052, 11.26, 0.6827];
        let traj = integrate(&spec, &c, &IntegrationConfig::default()).unwrap();
        assert!(traj.stiff_from.is_some());
        assert!(traj.accepted_steps < 100_000);
        let explicit_only = IntegrationConfig {
            stiff_switch: false,
            max_steps: 100_000,
            ..Default::default()
        };
        assert!(matches!(
            integrate(&spec, &c, &explicit_only),
            Err(Error::IntegrationFailure { .. })
        ));
    }
}
