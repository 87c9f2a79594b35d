//! End-to-end reconstruction: area fit, block coefficients, alpha bounds,
//! minimisation and local flow curves.

use serde::{Deserialize, Serialize};

use crate::area::{AreaField, AreaSamples};
use crate::error::{Error, Result};
use crate::hemodynamics::FluidProperties;
use crate::optimizer::{
    evaluate_pair, minimize_consistency, reconstruct_flow, BlockPair, FlowCurves, InverseConfig,
    OptimizationResult, PairEvaluation, PairOutcome,
};
use crate::riccati::{
    default_scan_range, periodic_solutions, quadrature_periodic, shooting_periodic, KotinReport,
};

/// The periodicity condition solved for the inlet flow of each block.
pub const QUADRATIC_FORM: &str =
    "Q0(T) Wh(T) K^2 + (Q0(T) Wih(T) + Wh(T) - 1) K + Wih(T) = 0, divided by Wh(T)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Cardiac period in seconds; alternatively give `heart_rate`.
    pub period: Option<f64>,
    /// Beats per minute, `T = 60 / HR`.
    pub heart_rate: Option<f64>,
    /// Axial extent of the analysed segment, cm; the whole field when absent.
    pub segment: Option<[f64; 2]>,
    pub block_length: f64,
    pub harmonics: usize,
    pub inverse: InverseConfig,
    pub fluid: FluidProperties,
    /// Overrides `fluid.viscosity`, given in Pa·s.
    pub viscosity_pa_s: Option<f64>,
    /// Positions of the flow curves as fractions of the segment.
    pub station_fractions: Vec<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            period: None,
            heart_rate: None,
            segment: None,
            block_length: 1.0,
            harmonics: crate::area::DEFAULT_HARMONICS,
            inverse: InverseConfig::default(),
            fluid: FluidProperties::default(),
            viscosity_pa_s: None,
            station_fractions: vec![0.1, 0.5, 0.9],
        }
    }
}

impl PipelineConfig {
    /// Period from `period`, else from `heart_rate`, else `fallback`.
    pub fn resolved_period(&self, fallback: Option<f64>) -> Result<f64> {
        let t = match (self.period, self.heart_rate) {
            (Some(t), _) => t,
            (None, Some(hr)) => 60.0 / hr,
            (None, None) => fallback.ok_or_else(|| {
                Error::InvalidInput("either period or heart_rate is required".into())
            })?,
        };
        if t > 0.0 && t.is_finite() {
            Ok(t)
        } else {
            Err(Error::InvalidInput(format!(
                "period must be positive, got {t}"
            )))
        }
    }

    /// Fluid properties with the viscosity override and the cardiac frequency applied.
    pub fn fluid_for(&self, period: f64) -> FluidProperties {
        let mut f = FluidProperties {
            omega: std::f64::consts::TAU / period,
            ..self.fluid
        };
        if let Some(pa_s) = self.viscosity_pa_s {
            f = f.with_viscosity_pa_s(pa_s);
        }
        f
    }

    pub fn validate(&self) -> Result<()> {
        self.inverse.validate()?;
        if !(self.block_length > 0.0) {
            return Err(Error::InvalidInput("block_length must be positive".into()));
        }
        if self.harmonics == 0 {
            return Err(Error::InvalidInput("harmonics must be at least 1".into()));
        }
        if let Some([a, b]) = self.segment {
            if !(b > a) {
                return Err(Error::InvalidInput(format!("segment [{a}, {b}] is empty")));
            }
        }
        if self
            .station_fractions
            .iter()
            .any(|f| !(0.0..=1.0).contains(f))
        {
            return Err(Error::InvalidInput(
                "station fractions must lie in [0, 1]".into(),
            ));
        }
        if let Some(hr) = self.heart_rate {
            if !(hr > 0.0) {
                return Err(Error::InvalidInput("heart_rate must be positive".into()));
            }
        }
        self.fluid.validate()
    }

    pub fn segment_in(&self, field: &AreaField) -> Result<(f64, f64)> {
        let (lo, hi) = match self.segment {
            Some([a, b]) => (a, b),
            None => (field.x_min(), field.x_max()),
        };
        if lo < field.x_min() || hi > field.x_max() {
            return Err(Error::XOutOfRange {
                x: if lo < field.x_min() { lo } else { hi },
                lo: field.x_min(),
                hi: field.x_max(),
            });
        }
        if hi - lo < 2.0 * self.block_length {
            return Err(Error::InvalidInput(format!(
                "segment of {} cm cannot hold two blocks of {} cm",
                hi - lo,
                self.block_length
            )));
        }
        Ok((lo, hi))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub field: AreaField,
    pub pair: BlockPair,
    pub segment: (f64, f64),
    pub result: OptimizationResult,
    pub flow: FlowCurves,
}

/// The JSON report of a reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_opt: f64,
    pub mse: f64,
    pub qbar: f64,
    pub consistency: f64,
    pub kotin_block1: KotinReport,
    pub kotin_block2: KotinReport,
    pub delta_block1: Option<f64>,
    pub delta_block2: Option<f64>,
    pub multiplier_block1: f64,
    pub multiplier_block2: f64,
    pub quadratic_form: String,
    pub block1: [f64; 2],
    pub block2: [f64; 2],
    pub period: f64,
    pub probes: usize,
    pub warnings: Vec<String>,
}

impl Reconstruction {
    pub fn report(&self) -> Report {
        let r = &self.result;
        let b = self.pair.upstream_block();
        Report {
            alpha_min: r.alpha_min,
            alpha_max: r.alpha_max,
            alpha_opt: r.alpha_opt,
            mse: r.mse,
            qbar: r.qbar,
            consistency: r.consistency,
            kotin_block1: r.kotin_block1,
            kotin_block2: r.kotin_block2,
            delta_block1: r.delta_block1,
            delta_block2: r.delta_block2,
            multiplier_block1: r.q_block1().multiplier,
            multiplier_block2: r.q_block2().multiplier,
            quadratic_form: QUADRATIC_FORM.to_string(),
            block1: [b.x_start, b.x_end()],
            block2: [b.x_end(), b.x_end() + b.length],
            period: self.field.period,
            probes: r.probes.len(),
            warnings: r.warnings.clone(),
        }
    }
}

/// Fit, invert and reconstruct.
pub fn reconstruct(samples: &AreaSamples, config: &PipelineConfig) -> Result<Reconstruction> {
    config.validate()?;
    let field = AreaField::fit(samples, config.harmonics)?;
    reconstruct_field(field, config)
}

pub fn reconstruct_field(field: AreaField, config: &PipelineConfig) -> Result<Reconstruction> {
    config.validate()?;
    let segment = config.segment_in(&field)?;
    let pair = BlockPair::new(
        &field,
        segment.1 - 2.0 * config.block_length,
        config.block_length,
    )?;
    let result = minimize_consistency(&pair, &config.inverse)?;
    let positions = station_positions(config, segment);
    let flow = reconstruct_flow(&field, pair.upstream_block(), result.q_block1(), &positions)?;
    Ok(Reconstruction {
        field,
        pair,
        segment,
        result,
        flow,
    })
}

/// Both blocks and the local flow curves at a given alpha, e.g. one read
/// back from an earlier report.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub field: AreaField,
    pub pair: BlockPair,
    pub segment: (f64, f64),
    pub evaluation: PairEvaluation,
    pub flow: FlowCurves,
}

pub fn operating_point(
    field: AreaField,
    config: &PipelineConfig,
    alpha: f64,
) -> Result<OperatingPoint> {
    config.validate()?;
    let segment = config.segment_in(&field)?;
    let pair = BlockPair::new(
        &field,
        segment.1 - 2.0 * config.block_length,
        config.block_length,
    )?;
    let evaluation = match evaluate_pair(&pair, alpha, &config.inverse)? {
        PairOutcome::Feasible(e) => *e,
        PairOutcome::Infeasible { alpha, reason } => {
            return Err(Error::Infeasible { alpha, reason })
        }
    };
    let positions = station_positions(config, segment);
    let flow = reconstruct_flow(
        &field,
        pair.upstream_block(),
        &evaluation.upstream.selection.solution,
        &positions,
    )?;
    Ok(OperatingPoint {
        field,
        pair,
        segment,
        evaluation,
        flow,
    })
}

fn station_positions(config: &PipelineConfig, segment: (f64, f64)) -> Vec<f64> {
    config
        .station_fractions
        .iter()
        .map(|f| segment.0 + f * (segment.1 - segment.0))
        .collect()
}

/// Largest sup-norm relative difference between the quadrature and shooting
/// solution sets of both blocks at `alpha`; `None` when the sets differ in size.
pub fn cross_method_residual(
    pair: &BlockPair,
    alpha: f64,
    config: &InverseConfig,
) -> Result<Option<f64>> {
    let settings = config.settings();
    let mut worst = 0.0_f64;
    for coeffs in [pair.upstream(), pair.downstream()] {
        let quad = match quadrature_periodic(coeffs, alpha, &settings) {
            Ok(q) => q.solutions,
            Err(Error::ParticularSolutionBlowup { .. }) => {
                periodic_solutions(coeffs, alpha, &settings)?.solutions
            }
            Err(e) => return Err(e),
        };
        let Some(range) = default_scan_range(coeffs, alpha) else {
            if quad.is_empty() {
                continue;
            }
            return Ok(None);
        };
        let shoot = shooting_periodic(coeffs, alpha, &settings, range, 64)?.solutions;
        if quad.len() != shoot.len() {
            return Ok(None);
        }
        let mut quad = quad;
        let mut shoot = shoot;
        quad.sort_by(|a, b| a.mean.total_cmp(&b.mean));
        shoot.sort_by(|a, b| a.mean.total_cmp(&b.mean));
        for (a, b) in quad.iter().zip(&shoot) {
            worst = worst.max(a.relative_distance(b));
        }
    }
    Ok(Some(worst))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heart_rate_sets_period() {
        let c = PipelineConfig {
            heart_rate: Some(75.0),
            ..PipelineConfig::default()
        };
        assert_eq!(c.resolved_period(None).unwrap(), 0.8);
        assert!(PipelineConfig::default().resolved_period(None).is_err());
        assert_eq!(
            PipelineConfig::default()
                .resolved_period(Some(1.0))
                .unwrap(),
            1.0
        );
    }

    #[test]
    fn inverted_window_is_rejected() {
        let mut c = PipelineConfig::default();
        c.inverse.qbar_min = 150.0;
        assert!(matches!(c.validate(), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn viscosity_override() {
        let c = PipelineConfig {
            viscosity_pa_s: Some(4e-3),
            ..PipelineConfig::default()
        };
        let f = c.fluid_for(0.5);
        assert!((f.viscosity - 0.04).abs() < 1e-15);
        assert!((f.omega - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
