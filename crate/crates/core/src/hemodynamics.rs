//! Reynolds and Womersley numbers along the segment.

use serde::{Deserialize, Serialize};

use crate::area::AreaField;
use crate::error::{Error, Result};
use crate::optimizer::FlowCurves;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FluidProperties {
    /// g/cm³.
    pub density: f64,
    /// Dynamic viscosity, g/(cm·s).
    pub viscosity: f64,
    /// Angular frequency of the heart cycle, rad/s.
    pub omega: f64,
}

impl Default for FluidProperties {
    fn default() -> Self {
        Self {
            density: 1.06,
            viscosity: 0.035,
            omega: std::f64::consts::TAU,
        }
    }
}

impl FluidProperties {
    /// Blood at the given period.
    pub fn for_period(period: f64) -> Self {
        Self {
            omega: std::f64::consts::TAU / period,
            ..Self::default()
        }
    }

    /// Dynamic viscosity given in Pa·s; 1 Pa·s = 10 g/(cm·s).
    pub fn with_viscosity_pa_s(mut self, pa_s: f64) -> Self {
        self.viscosity = 10.0 * pa_s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.density > 0.0 && self.viscosity > 0.0 && self.omega > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "density, viscosity and frequency must be positive".into(),
            ))
        }
    }
}

fn radius(area: f64) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::InvalidInput(format!(
            "cross-section area must be positive, got {area}"
        )));
    }
    Ok((area / std::f64::consts::PI).sqrt())
}

/// `Re = 2 v r rho / eta` with `v = q / S` and `r = sqrt(S / pi)`.
pub fn reynolds(q: f64, area: f64, props: &FluidProperties) -> Result<f64> {
    let r = radius(area)?;
    Ok(2.0 * (q / area) * r * props.density / props.viscosity)
}

/// `Wo = 2 r sqrt(omega rho / eta)`.
pub fn womersley(area: f64, props: &FluidProperties) -> Result<f64> {
    let r = radius(area)?;
    Ok(2.0 * r * (props.omega * props.density / props.viscosity).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowRegime {
    Laminar,
    Transition,
    Turbulent,
}

impl FlowRegime {
    pub fn classify(re: f64) -> Self {
        if re < 2100.0 {
            FlowRegime::Laminar
        } else if re > 4000.0 {
            FlowRegime::Turbulent
        } else {
            FlowRegime::Transition
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            FlowRegime::Laminar => "laminar",
            FlowRegime::Transition => "transition",
            FlowRegime::Turbulent => "turbulent",
        }
    }
}

/// Shape of the oscillatory velocity profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileShape {
    Parabolic,
    Intermediate,
    Flat,
}

impl ProfileShape {
    pub fn classify(wo: f64) -> Self {
        if wo < 1.0 {
            ProfileShape::Parabolic
        } else if wo > 10.0 {
            ProfileShape::Flat
        } else {
            ProfileShape::Intermediate
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationNumbers {
    pub x: f64,
    pub womersley: f64,
    /// From the time-mean of `|q|` over the time-mean area.
    pub re_mean: f64,
    /// Largest instantaneous Reynolds number over the period.
    pub re_peak: f64,
    /// Classified on the peak value.
    pub regime: FlowRegime,
    pub shape: ProfileShape,
}

/// Reynolds and Womersley numbers at the positions of the flow curves.
pub fn profile(
    field: &AreaField,
    curves: &FlowCurves,
    props: &FluidProperties,
) -> Result<Vec<StationNumbers>> {
    props.validate()?;
    let n = curves.times.len() - 1;
    let weight = |k: usize| if k == 0 || k == n { 0.5 } else { 1.0 } / n as f64;
    curves
        .positions
        .iter()
        .zip(&curves.q)
        .map(|(&x, q)| {
            let series = field.series_at(x)?;
            let mean_area = series.a0;
            let mean_abs_q: f64 = q.iter().enumerate().map(|(k, v)| weight(k) * v.abs()).sum();
            let re_peak = curves
                .times
                .iter()
                .zip(q)
                .map(|(t, v)| reynolds(v.abs(), series.eval(*t), props))
                .try_fold(0.0_f64, |m, r| r.map(|r| m.max(r)))?;
            let womersley = womersley(mean_area, props)?;
            Ok(StationNumbers {
                x,
                womersley,
                re_mean: reynolds(mean_abs_q, mean_area, props)?,
                re_peak,
                regime: FlowRegime::classify(re_peak),
                shape: ProfileShape::classify(womersley),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn reynolds_spot_value() {
        let props = FluidProperties::default();
        // v = 30 cm/s through r = 1 cm
        let re = reynolds(30.0 * PI, PI, &props).unwrap();
        assert_abs_diff_eq!(re, 2.0 * 30.0 * 1.06 / 0.035, epsilon = 1e-9);
        assert_abs_diff_eq!(re, 1817.14, epsilon = 0.01);
        assert_eq!(reynolds(0.0, PI, &props).unwrap(), 0.0);
        assert_abs_diff_eq!(
            reynolds(60.0 * PI, PI, &props).unwrap(),
            2.0 * re,
            epsilon = 1e-9
        );
    }

    #[test]
    fn womersley_spot_value_and_scaling() {
        let props = FluidProperties::default();
        let wo = womersley(PI, &props).unwrap();
        assert_abs_diff_eq!(wo, 27.59, epsilon = 0.01);
        let fast = FluidProperties {
            omega: 4.0 * props.omega,
            ..props
        };
        assert_abs_diff_eq!(womersley(PI, &fast).unwrap(), 2.0 * wo, epsilon = 1e-9);
        assert_abs_diff_eq!(
            womersley(PI / 4.0, &props).unwrap(),
            0.5 * wo,
            epsilon = 1e-9
        );
    }

    #[test]
    fn only_density_over_viscosity_matters() {
        let a = FluidProperties::default();
        let b = FluidProperties {
            density: 3.0 * a.density,
            viscosity: 3.0 * a.viscosity,
            ..a
        };
        assert_abs_diff_eq!(
            reynolds(50.0, 4.0, &a).unwrap(),
            reynolds(50.0, 4.0, &b).unwrap(),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            womersley(4.0, &a).unwrap(),
            womersley(4.0, &b).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn viscosity_conversion() {
        let p = FluidProperties::default().with_viscosity_pa_s(3.5e-3);
        assert_abs_diff_eq!(p.viscosity, 0.035, epsilon = 1e-15);
    }

    #[test]
    fn regime_labels() {
        assert_eq!(FlowRegime::classify(1500.0), FlowRegime::Laminar);
        assert_eq!(FlowRegime::classify(3000.0), FlowRegime::Transition);
        assert_eq!(FlowRegime::classify(5000.0), FlowRegime::Turbulent);
        assert_eq!(ProfileShape::classify(0.5), ProfileShape::Parabolic);
        assert_eq!(ProfileShape::classify(27.6), ProfileShape::Flat);
    }

    #[test]
    fn non_positive_area() {
        assert!(reynolds(1.0, 0.0, &FluidProperties::default()).is_err());
        assert!(womersley(-1.0, &FluidProperties::default()).is_err());
    }
}
