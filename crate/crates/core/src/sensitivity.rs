//! First-order sensitivity of the periodic flow to the elasticity parameter.
//!
//! Differentiating the Riccati equation in `alpha` gives the linear equation
//! `P' = (2 A Q + B) P + C1`, whose periodic solution is `dQ/dalpha`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::Termination;
use crate::riccati::{IntegratorSettings, PeriodicSolution, RiccatiCoefficients};

/// Below this `|1 - P_h(T)|` the periodic sensitivity is not unique.
pub const RESONANCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCurve {
    pub period: f64,
    /// `P(t_k)` in seconds on the grid of the flow it was computed from.
    pub p: Vec<f64>,
    /// Floquet multiplier `exp(int (2 A Q + B) dt)` of the homogeneous part.
    pub multiplier: f64,
    /// `P_h(T)` and `P_p(T)` from the one-period integration.
    pub homogeneous_end: f64,
    pub particular_end: f64,
}

impl SensitivityCurve {
    pub fn times(&self) -> Vec<f64> {
        let n = self.p.len() - 1;
        (0..=n).map(|k| self.period * k as f64 / n as f64).collect()
    }

    pub fn periodicity_gap(&self) -> f64 {
        (self.p[self.p.len() - 1] - self.p[0]).abs()
    }
}

/// Periodic solution of `P' = (2 A Q + B) P + C1` along the periodic flow `q`.
///
/// `Q`, the homogeneous solution (`P_h(0) = 1`) and the particular solution
/// (`P_p(0) = 0`) are integrated together from `q(0)`; then
/// `P(0) = P_p(T) / (1 - P_h(T))`.
pub fn sensitivity_p(
    coeffs: &RiccatiCoefficients,
    alpha: f64,
    q: &PeriodicSolution,
    settings: &IntegratorSettings,
) -> Result<SensitivityCurve> {
    settings.validate()?;
    let period = coeffs.period;
    let n = q.intervals();
    let times: Vec<f64> = (0..=n).map(|k| period * k as f64 / n as f64).collect();
    let cap = settings.blowup_cap;
    let sol = settings.solver(period).solve(
        |t, y: &[f64; 3]| {
            let c = coeffs.sample(t);
            let slope = c.slope(y[0]);
            [c.rhs(y[0], alpha), slope * y[1], slope * y[2] + c.c1]
        },
        0.0,
        [q.q[0], 1.0, 0.0],
        period,
        &times,
        |y| y[0].abs() > cap,
    )?;
    if let Termination::Escaped { t, .. } = sol.termination {
        return Err(Error::ParticularSolutionBlowup { t });
    }
    let [_, ph_end, pp_end] = sol.end_state;
    let gap = 1.0 - ph_end;
    if gap.abs() < RESONANCE_TOLERANCE {
        return Err(Error::ResonantMultiplier { multiplier: ph_end });
    }
    let p0 = pp_end / gap;
    Ok(SensitivityCurve {
        period,
        p: sol.stops.iter().map(|y| y[2] + p0 * y[1]).collect(),
        multiplier: q.multiplier,
        homogeneous_end: ph_end,
        particular_end: pp_end,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riccati::periodic_solutions;
    use approx::assert_abs_diff_eq;

    fn settings() -> IntegratorSettings {
        IntegratorSettings::default()
    }

    #[test]
    fn no_forcing_means_zero_sensitivity() {
        // A = -1, C0 = 1, C1 = 0: Q = 1 is stable with mu = e^-2
        let c = RiccatiCoefficients::constant(1.0, -1.0, 0.0, 1.0, 0.0);
        let set = periodic_solutions(&c, 1.0, &settings()).unwrap();
        let q = set.solutions.iter().find(|s| s.mean > 0.0).unwrap();
        let p = sensitivity_p(&c, 1.0, q, &settings()).unwrap();
        assert!(p.p.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn constant_case_is_half_the_forcing() {
        // A = -1, C0 = 0.5, C1 = 0.25, alpha = 2: Q = 1, a = -2, P = 0.125
        let c = RiccatiCoefficients::constant(1.0, -1.0, 0.0, 0.5, 0.25);
        let set = periodic_solutions(&c, 2.0, &settings()).unwrap();
        let q = set.solutions.iter().find(|s| s.mean > 0.0).unwrap();
        let p = sensitivity_p(&c, 2.0, q, &settings()).unwrap();
        for v in &p.p {
            assert_abs_diff_eq!(*v, 0.125, epsilon = 1e-8);
        }
        assert_abs_diff_eq!(p.multiplier, (-2.0f64).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(p.homogeneous_end, (-2.0f64).exp(), epsilon = 1e-8);
    }

    #[test]
    fn neutral_multiplier_is_resonant() {
        // A = 0, B = 0: every constant is periodic and P_h = 1
        let c = RiccatiCoefficients::constant(1.0, 0.0, 0.0, 0.0, 1.0);
        let q =
            crate::riccati::integrate_riccati(&c, 0.0, 3.0, 0.0, 1.0, 256, &settings()).unwrap();
        let fake = PeriodicSolution {
            period: 1.0,
            q: q.values,
            method: crate::riccati::Method::Shooting,
            k_root: None,
            discriminant: None,
            admissible: true,
            mean: 3.0,
            log_multiplier: 0.0,
            multiplier: 1.0,
        };
        assert!(matches!(
            sensitivity_p(&c, 0.0, &fake, &settings()),
            Err(Error::ResonantMultiplier { .. })
        ));
    }
}
