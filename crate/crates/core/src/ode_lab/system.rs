//! The four oscillatory systems and their right-hand sides.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemId {
    Brusselator,
    CellCycle,
    Mpf,
    ActivatorInhibitor,
}

impl SystemId {
    pub const ALL: [SystemId; 4] = [
        SystemId::Brusselator,
        SystemId::CellCycle,
        SystemId::Mpf,
        SystemId::ActivatorInhibitor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemId::Brusselator => "brusselator",
            SystemId::CellCycle => "cell-cycle",
            SystemId::Mpf => "mpf",
            SystemId::ActivatorInhibitor => "activator-inhibitor",
        }
    }

    pub fn spec(self) -> SystemSpec {
        SystemSpec::new(self)
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "brusselator" => Ok(SystemId::Brusselator),
            "cellcycle" => Ok(SystemId::CellCycle),
            "mpf" => Ok(SystemId::Mpf),
            "activatorinhibitor" => Ok(SystemId::ActivatorInhibitor),
            _ => Err(Error::UnknownSystem(s.to_string())),
        }
    }
}

/// Closed coefficient interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// One oscillatory ODE system: coefficient box, initial state and time span.
///
/// For the cell-cycle model the volume `V` is carried as state component 0,
/// so the state is `[V, X, Y_T, Y, Z]`. `observed` is the index of `<X>`,
/// the component the frequency detector reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub id: SystemId,
    pub coeff_box: Vec<Interval>,
    pub initial_state: Vec<f64>,
    pub t_end: f64,
    pub observed: usize,
}

impl SystemSpec {
    pub fn new(id: SystemId) -> Self {
        let iv = Interval::new;
        match id {
            SystemId::Brusselator => SystemSpec {
                id,
                coeff_box: vec![iv(0.0, 5.0), iv(0.0, 15.0)],
                initial_state: vec![10.0, 10.0],
                t_end: 500.0,
                observed: 0,
            },
            SystemId::CellCycle => SystemSpec {
                id,
                coeff_box: vec![
                    iv(0.0, 15.3),
                    iv(0.0, 0.4),
                    iv(0.0, 13.5),
                    iv(0.0, 0.2),
                    iv(0.0, 13.5),
                    iv(0.0, 1.0),
                ],
                initial_state: vec![30.0, 320.0, 100.0, 100.0, 200.0],
                t_end: 1000.0,
                observed: 1,
            },
            SystemId::Mpf => SystemSpec {
                id,
                coeff_box: vec![
                    iv(0.0, 0.1),
                    iv(0.0, 0.1),
                    iv(0.0, 0.4),
                    iv(0.0, 15.0),
                    iv(0.0, 1.0),
                    iv(0.0, 10.0),
                ],
                initial_state: vec![0.03657, 0.36615],
                t_end: 1000.0,
                observed: 0,
            },
            SystemId::ActivatorInhibitor => SystemSpec {
                id,
                coeff_box: vec![
                    iv(0.0, 28.0),
                    iv(0.0, 1.0),
                    iv(0.0, 1.0),
                    iv(0.0, 10.0),
                    iv(0.0, 50.0),
                    iv(0.0, 10.0),
                ],
                initial_state: vec![1.0, 4.0],
                t_end: 5000.0,
                observed: 0,
            },
        }
    }

    /// Coefficient dimension `D`.
    pub fn coeff_dim(&self) -> usize {
        self.coeff_box.len()
    }

    /// State dimension `D'` (including the cell-cycle volume).
    pub fn state_dim(&self) -> usize {
        self.initial_state.len()
    }

    pub fn contains(&self, coeffs: &[f64]) -> bool {
        coeffs.len() == self.coeff_dim()
            && coeffs
                .iter()
                .zip(&self.coeff_box)
                .all(|(&c, iv)| iv.contains(c))
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.coeff_box
            .iter()
            .map(|iv| 0.5 * (iv.lo + iv.hi))
            .collect()
    }

    /// Maps coefficients to the unit box.
    pub fn normalize(&self, coeffs: &[f64]) -> Vec<f64> {
        coeffs
            .iter()
            .zip(&self.coeff_box)
            .map(|(&c, iv)| (c - iv.lo) / iv.width())
            .collect()
    }

    pub fn denormalize(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(&self.coeff_box)
            .map(|(&u, iv)| iv.lo + u * iv.width())
            .collect()
    }

    pub(crate) fn check_coeffs(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.coeff_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.coeff_dim(),
                got: coeffs.len(),
            });
        }
        Ok(())
    }

    /// Evaluates `du/dt` into `out` without allocating.
    pub fn rhs_into(&self, state: &[f64], coeffs: &[f64], out: &mut [f64]) -> Result<()> {
        let l = coeffs;
        match self.id {
            SystemId::Brusselator => {
                let (x, y) = (state[0], state[1]);
                let x2y = x * x * y;
                out[0] = l[0] - (l[1] + 1.0) * x + x2y;
                out[1] = l[1] * x - x2y;
            }
            SystemId::CellCycle => {
                let (v, x, yt, y, z) = (state[0], state[1], state[2], state[3], state[4]);
                if v == 0.0 {
                    return Err(Error::DivisionByZero("cell-cycle volume V = 0"));
                }
                let free = yt - y;
                out[0] = 0.006 * v;
                out[1] = l[0] * (1.04 * v / 3.5) * v - l[1] * x - 0.00741 * x * y / v;
                out[2] = l[2] * (7.0 / 3.5) * v - l[3] * yt;
                out[3] = l[2] * (7.0 / 3.5) * v - l[3] * y
                    + (29.7 * v + 7.5 * z) * free / (5.4 * v + free)
                    - 1.88 * x * y / (5.4 * v + y);
                let kv = 756.0 * v;
                let hill = x * x / (kv * kv + x * x);
                out[4] = l[4] * ((0.001 + 10.0 * hill) / 0.15) * v - l[5] * z;
            }
            SystemId::Mpf => {
                if l[5] == 0.0 {
                    return Err(Error::DivisionByZero("MPF G = 1 + l5/l6 with l6 = 0"));
                }
                let g = 1.0 + l[4] / l[5];
                let (x, y) = (state[0], state[1]);
                let x2 = x * x;
                out[0] =
                    l[0] / g - (l[1] + 10.0 * x2 + l[3]) * x + (l[2] + 100.0 * x2) * (y / g - x);
                out[1] = l[0] - (l[1] + 10.0 * x2) * y;
            }
            SystemId::ActivatorInhibitor => {
                let (x, y) = (state[0], state[1]);
                let x2 = x * x;
                out[0] = (l[3] + l[4] * x2) / (1.0 + x2 + l[5] * y) - x;
                out[1] = l[2] * (l[0] * x + l[1] - y);
            }
        }
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NumericDomain("right-hand side"))
        }
    }

    /// Allocating form of [`SystemSpec::rhs_into`].
    pub fn rhs_eval(&self, state: &[f64], coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_coeffs(coeffs)?;
        if state.len() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim(),
                got: state.len(),
            });
        }
        if !state.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericDomain("state"));
        }
        let mut out = vec![0.0; self.state_dim()];
        self.rhs_into(state, coeffs, &mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_dimensions() {
        assert_eq!(SystemId::Brusselator.spec().coeff_dim(), 2);
        for id in [
            SystemId::CellCycle,
            SystemId::Mpf,
            SystemId::ActivatorInhibitor,
        ] {
            assert_eq!(id.spec().coeff_dim(), 6);
        }
        assert_eq!(SystemId::CellCycle.spec().state_dim(), 5);
        for id in SystemId::ALL {
            let s = id.spec();
            assert!(s.coeff_box.iter().all(|iv| iv.lo < iv.hi));
            assert!(s.t_end > 0.0);
            assert!(s.initial_state.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn brusselator_equilibrium() {
        let s = SystemId::Brusselator.spec();
        let d = s.rhs_eval(&[1.0, 3.0], &[1.0, 3.0]).unwrap();
        assert_eq!(d, vec![0.0, 0.0]);
    }

    #[test]
    fn brusselator_direct_evaluation() {
        let s = SystemId::Brusselator.spec();
        let d = s.rhs_eval(&[10.0, 10.0], &[1.0, 3.0]).unwrap();
        assert_eq!(d, vec![961.0, -970.0]);
    }

    #[test]
    fn mpf_zero_l6_is_division_by_zero() {
        let s = SystemId::Mpf.spec();
        let err = s
            .rhs_eval(&[0.03657, 0.36615], &[0.05, 0.05, 0.2, 7.0, 0.5, 0.0])
            .unwrap_err();
        assert!(matches!(err, Error::DivisionByZero(_)));
    }

    #[test]
    fn cell_cycle_volume_grows() {
        let s = SystemId::CellCycle.spec();
        let d = s.rhs_eval(&s.initial_state, &s.midpoint()).unwrap();
        assert!((d[0] - 0.006 * 30.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_state_rejected() {
        let s = SystemId::Brusselator.spec();
        let err = s.rhs_eval(&[f64::NAN, 1.0], &[1.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::NumericDomain(_)));
    }

    #[test]
    fn parse_names() {
        assert_eq!(
            "brusselator".parse::<SystemId>().unwrap(),
            SystemId::Brusselator
        );
        assert_eq!(
            "Cell_Cycle".parse::<SystemId>().unwrap(),
            SystemId::CellCycle
        );
        assert_eq!(
            "activator-inhibitor".parse::<SystemId>().unwrap(),
            SystemId::ActivatorInhibitor
        );
        assert!("unknown".parse::<SystemId>().is_err());
    }
}
