//! Synthetic periodic area fields with a known elasticity parameter.
//!
//! Two generators are available. `TravelingPulse` modulates a tapered base
//! profile by a pulse travelling at a fixed speed; it is cheap and smooth but
//! does not satisfy the momentum balance, so its `alpha_star` is nominal only.
//! `Marched` integrates continuity and momentum along the axis from a
//! forward-travelling inlet wave, so the field and the inlet flow are a
//! (harmonically truncated) solution of the same one-dimensional model the
//! inverse problem uses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::area::AreaSamples;
use crate::error::{Error, Result};
use crate::fourier::TrigSeries;
use crate::optimizer::FlowCurves;
use crate::pipeline::{cross_method_residual, reconstruct, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    TravelingPulse,
    Marched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub kind: SynthKind,
    /// Cardiac period, s.
    pub period: f64,
    /// Segment length, cm.
    pub length: f64,
    pub stations: usize,
    /// Time samples per period.
    pub phases: usize,
    /// Tapered base area of the travelling-pulse field, cm².
    pub area_inlet: f64,
    pub area_outlet: f64,
    /// Mean inlet area of the marched field, cm².
    pub marched_area: f64,
    /// Relative pulse amplitude.
    pub epsilon: f64,
    /// Pulse speed for the travelling-pulse field, cm/s.
    pub wave_speed: f64,
    /// Harmonics in the pulse.
    pub harmonics: usize,
    /// Elasticity parameter of the marched field, cm³/s².
    pub alpha_star: f64,
    /// Mean inlet flow of the marched field, cm³/s.
    pub qbar_star: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            kind: SynthKind::Marched,
            period: 1.0,
            length: 10.0,
            stations: 41,
            phases: 32,
            area_inlet: 7.0,
            area_outlet: 5.0,
            marched_area: 3.0,
            epsilon: 0.02,
            wave_speed: 500.0,
            harmonics: 3,
            alpha_star: 2.5e3,
            qbar_star: 75.0,
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(self.period > 0.0 && self.length > 0.0) {
            return bad("period and length must be positive");
        }
        if self.stations < 2 {
            return bad("at least two stations are needed");
        }
        if !(0.0..0.2).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 0.2)");
        }
        if self.harmonics == 0 {
            return bad("the pulse needs at least one harmonic");
        }
        if self.phases < 2 * self.harmonics + 1 {
            return Err(Error::TooFewPhases {
                phases: self.phases,
                harmonics: self.harmonics,
            });
        }
        if !(self.area_inlet > 0.0 && self.area_outlet > 0.0 && self.marched_area > 0.0) {
            return bad("base areas must be positive");
        }
        match self.kind {
            SynthKind::TravelingPulse if !(self.wave_speed > 0.0) => {
                bad("wave speed must be positive")
            }
            SynthKind::Marched if !(self.alpha_star > 0.0 && self.qbar_star > 0.0) => {
                bad("alpha_star and qbar_star must be positive")
            }
            _ => Ok(()),
        }
    }

    pub fn station_positions(&self) -> Vec<f64> {
        let n = self.stations - 1;
        (0..=n).map(|j| self.length * j as f64 / n as f64).collect()
    }

    pub fn phase_times(&self) -> Vec<f64> {
        (0..self.phases)
            .map(|k| self.period * k as f64 / self.phases as f64)
            .collect()
    }

    /// Linear taper of the base area.
    pub fn base_area(&self, x: f64) -> f64 {
        self.area_inlet + (self.area_outlet - self.area_inlet) * x / self.length
    }

    /// Wave speed `sqrt(alpha / sqrt(S))` of the marched model.
    pub fn model_wave_speed(&self, area: f64) -> f64 {
        (self.alpha_star / area.sqrt()).sqrt()
    }
}

/// Unit-amplitude periodic pulse `g(θ)`, `θ` in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Pulse {
    /// Random harmonic content with decaying amplitudes, scaled so `max |g| = 1`.
    pub fn seeded(harmonics: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut cos, mut sin) = (Vec::with_capacity(harmonics), Vec::with_capacity(harmonics));
        for k in 1..=harmonics {
            let amp = if k == 1 {
                1.0
            } else {
                rng.gen_range(0.2..0.6) / k as f64
            };
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            cos.push(amp * phase.cos());
            sin.push(amp * phase.sin());
        }
        let mut pulse = Self { cos, sin };
        let peak = (0..4096)
            .map(|i| pulse.eval(std::f64::consts::TAU * i as f64 / 4096.0).abs())
            .fold(0.0, f64::max);
        for v in pulse.cos.iter_mut().chain(pulse.sin.iter_mut()) {
            *v /= peak;
        }
        pulse
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(i, (c, s))| {
                let a = (i + 1) as f64 * theta;
                c * a.cos() + s * a.sin()
            })
            .sum()
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(i, (c, s))| {
                let k = (i + 1) as f64;
                k * (s * (k * theta).cos() - c * (k * theta).sin())
            })
            .sum()
    }

    /// As a series in time with the given period.
    pub fn series(&self, period: f64, scale: f64, offset: f64) -> TrigSeries {
        TrigSeries {
            period,
            a0: offset,
            a: self.cos.iter().map(|c| scale * c).collect(),
            b: self.sin.iter().map(|s| scale * s).collect(),
        }
    }
}

/// A generated field plus the ground truth that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthField {
    pub samples: AreaSamples,
    pub pulse: Pulse,
    /// Exact flow `q(t_k, x_j)` for the marched field, same layout as the areas.
    pub flow: Option<Vec<Vec<f64>>>,
}

pub fn generate(spec: &SynthSpec) -> Result<AreaSamples> {
    generate_with_truth(spec).map(|f| f.samples)
}

pub fn generate_with_truth(spec: &SynthSpec) -> Result<SynthField> {
    spec.validate()?;
    let pulse = Pulse::seeded(spec.harmonics, spec.seed);
    let stations = spec.station_positions();
    let times = spec.phase_times();
    let (values, flow) = match spec.kind {
        SynthKind::TravelingPulse => (traveling(spec, &pulse, &stations, &times), None),
        SynthKind::Marched => {
            let (s, q) = marched(spec, &pulse, &stations, &times)?;
            (s, Some(q))
        }
    };
    for (k, row) in values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !(*v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveArea {
                    phase: k,
                    station: j,
                    value: *v,
                });
            }
        }
    }
    Ok(SynthField {
        samples: AreaSamples {
            period: spec.period,
            stations,
            values,
        },
        pulse,
        flow,
    })
}

fn traveling(spec: &SynthSpec, pulse: &Pulse, stations: &[f64], times: &[f64]) -> Vec<Vec<f64>> {
    let tau = std::f64::consts::TAU;
    times
        .iter()
        .map(|t| {
            stations
                .iter()
                .map(|x| {
                    let theta = tau * (t / spec.period - x / (spec.wave_speed * spec.period));
                    spec.base_area(*x) * (1.0 + spec.epsilon * pulse.eval(theta))
                })
                .collect()
        })
        .collect()
}

/// Collocation points used by the axial march.
const MARCH_POINTS: usize = 64;
/// Largest axial step of the march, cm.
const MARCH_STEP: f64 = 0.01;

/// State of the axial march: area and flow as truncated series in time.
#[derive(Clone)]
struct Wave {
    s: TrigSeries,
    q: TrigSeries,
}

/// `S_x = (2 u S_t - q_t) / (c² - u²)`, `q_x = -S_t`, projected back onto the harmonics.
fn march_rhs(wave: &Wave, alpha: f64, harmonics: usize) -> Result<Wave> {
    let period = wave.s.period;
    let mut sx = Vec::with_capacity(MARCH_POINTS);
    let mut qx = Vec::with_capacity(MARCH_POINTS);
    for i in 0..MARCH_POINTS {
        let t = period * i as f64 / MARCH_POINTS as f64;
        let s = wave.s.eval(t);
        let st = wave.s.d1(t);
        let q = wave.q.eval(t);
        let qt = wave.q.d1(t);
        if !(s > 0.0) {
            return Err(Error::InvalidInput(format!(
                "march produced non-positive area {s} at t = {t}"
            )));
        }
        let u = q / s;
        let gap = alpha / s.sqrt() - u * u;
        if gap <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "march reached critical flow (u = {u:.4} cm/s) at t = {t}"
            )));
        }
        sx.push((2.0 * u * st - qt) / gap);
        qx.push(-st);
    }
    Ok(Wave {
        s: TrigSeries::fit_uniform(period, &sx, harmonics)?,
        q: TrigSeries::fit_uniform(period, &qx, harmonics)?,
    })
}

fn axpy(base: &Wave, h: f64, d: &Wave) -> Wave {
    let add = |a: &TrigSeries, b: &TrigSeries| TrigSeries {
        period: a.period,
        a0: a.a0 + h * b.a0,
        a: a.a.iter().zip(&b.a).map(|(x, y)| x + h * y).collect(),
        b: a.b.iter().zip(&b.b).map(|(x, y)| x + h * y).collect(),
    };
    Wave {
        s: add(&base.s, &d.s),
        q: add(&base.q, &d.q),
    }
}

fn rk4(wave: &Wave, h: f64, alpha: f64, harmonics: usize) -> Result<Wave> {
    let k1 = march_rhs(wave, alpha, harmonics)?;
    let k2 = march_rhs(&axpy(wave, 0.5 * h, &k1), alpha, harmonics)?;
    let k3 = march_rhs(&axpy(wave, 0.5 * h, &k2), alpha, harmonics)?;
    let k4 = march_rhs(&axpy(wave, h, &k3), alpha, harmonics)?;
    let mut out = axpy(wave, h / 6.0, &k1);
    out = axpy(&out, h / 3.0, &k2);
    out = axpy(&out, h / 3.0, &k3);
    Ok(axpy(&out, h / 6.0, &k4))
}

/// Marches a forward-travelling inlet wave along the axis. Returns areas and flows
/// indexed `[phase][station]`.
/// Values indexed `[phase][station]`.
type Grid = Vec<Vec<f64>>;

fn marched(
    spec: &SynthSpec,
    pulse: &Pulse,
    stations: &[f64],
    times: &[f64],
) -> Result<(Grid, Grid)> {
    let s0 = spec.marched_area;
    let u0 = spec.qbar_star / s0;
    let c0 = spec.model_wave_speed(s0);
    if u0 >= c0 {
        return Err(Error::InvalidInput(format!(
            "mean inlet velocity {u0:.3} cm/s is not below the wave speed {c0:.3} cm/s"
        )));
    }
    let h = spec.harmonics;
    let mut wave = Wave {
        s: pulse.series(spec.period, s0 * spec.epsilon, s0),
        // Forward simple wave: dq = (u + c) dS.
        q: pulse.series(spec.period, (u0 + c0) * s0 * spec.epsilon, spec.qbar_star),
    };
    let mut snapshots = Vec::with_capacity(stations.len());
    let mut x = stations[0];
    snapshots.push(wave.clone());
    for &next in &stations[1..] {
        let steps = ((next - x) / MARCH_STEP).ceil().max(1.0) as usize;
        let dx = (next - x) / steps as f64;
        for _ in 0..steps {
            wave = rk4(&wave, dx, spec.alpha_star, h)?;
        }
        x = next;
        snapshots.push(wave.clone());
    }
    let table = |f: &dyn Fn(&Wave, f64) -> f64| -> Vec<Vec<f64>> {
        times
            .iter()
            .map(|t| snapshots.iter().map(|w| f(w, *t)).collect())
            .collect()
    };
    Ok((table(&|w, t| w.s.eval(t)), table(&|w, t| w.q.eval(t))))
}

/// Outcome of running the full inverse pipeline on a generated field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub alpha_star: f64,
    pub alpha_opt: Option<f64>,
    pub alpha_relative_error: Option<f64>,
    pub mse: Option<f64>,
    pub qbar: Option<f64>,
    /// `mse / qbar`.
    pub mse_fraction: Option<f64>,
    /// Largest error of the reconstructed flow against the generating flow,
    /// relative to the mean flow, over the output stations.
    pub flow_error: Option<f64>,
    /// Quadrature against shooting at `alpha_opt`.
    pub cross_method_residual: Option<f64>,
    pub alpha_within_tolerance: bool,
    pub mse_within_tolerance: bool,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

/// Relative tolerance on the recovered alpha.
pub const ALPHA_TOLERANCE: f64 = 0.10;
/// MSE tolerance as a fraction of the mean flow.
pub const MSE_TOLERANCE: f64 = 0.05;

/// Generate, reconstruct and compare against the ground truth. Failures are
/// recorded in the report rather than returned.
pub fn oracle_run(spec: &SynthSpec, config: &PipelineConfig) -> OracleReport {
    let mut report = OracleReport {
        alpha_star: spec.alpha_star,
        alpha_opt: None,
        alpha_relative_error: None,
        mse: None,
        qbar: None,
        mse_fraction: None,
        flow_error: None,
        cross_method_residual: None,
        alpha_within_tolerance: false,
        mse_within_tolerance: false,
        warnings: Vec::new(),
        error: None,
    };
    let truth = match generate_with_truth(spec) {
        Ok(t) => t,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    let config = PipelineConfig {
        period: Some(spec.period),
        ..config.clone()
    };
    let rec = match reconstruct(&truth.samples, &config) {
        Ok(r) => r,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    let r = &rec.result;
    let rel = (r.alpha_opt - spec.alpha_star).abs() / spec.alpha_star;
    report.alpha_opt = Some(r.alpha_opt);
    report.alpha_relative_error = Some(rel);
    report.mse = Some(r.mse);
    report.qbar = Some(r.qbar);
    report.mse_fraction = Some(r.mse / r.qbar);
    report.alpha_within_tolerance = rel <= ALPHA_TOLERANCE;
    report.mse_within_tolerance = r.mse <= MSE_TOLERANCE * r.qbar;
    report.warnings = r.warnings.clone();
    match cross_method_residual(&rec.pair, r.alpha_opt, &config.inverse) {
        Ok(v) => report.cross_method_residual = v,
        Err(e) => report
            .warnings
            .push(format!("cross-method check failed: {e}")),
    }
    if let Some(flow) = &truth.flow {
        report.flow_error = flow_error(&truth.samples, flow, &rec.flow, spec.qbar_star);
    }
    report
}

/// Compares reconstructed curves with the true flow where both share nodes.
fn flow_error(
    samples: &AreaSamples,
    truth: &[Vec<f64>],
    curves: &FlowCurves,
    scale: f64,
) -> Option<f64> {
    let m = samples.phases();
    let n = curves.times.len() - 1;
    if !n.is_multiple_of(m) {
        return None;
    }
    let stride = n / m;
    let mut worst = 0.0_f64;
    for (x, q) in curves.positions.iter().zip(&curves.q) {
        let j = samples.stations.iter().position(|s| (s - x).abs() < 1e-9)?;
        for k in 0..m {
            worst = worst.max((q[k * stride] - truth[k][j]).abs());
        }
    }
    Some(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::area::AreaField;
    use approx::assert_relative_eq;

    #[test]
    fn pulse_is_unit_amplitude() {
        let p = Pulse::seeded(3, 11);
        let peak = (0..20000)
            .map(|i| p.eval(std::f64::consts::TAU * i as f64 / 20000.0).abs())
            .fold(0.0, f64::max);
        assert_relative_eq!(peak, 1.0, max_relative = 1e-5);
    }

    #[test]
    fn zero_amplitude_is_rigid() {
        let spec = SynthSpec {
            kind: SynthKind::TravelingPulse,
            epsilon: 0.0,
            ..SynthSpec::default()
        };
        let s = generate(&spec).unwrap();
        for row in &s.values {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, spec.base_area(s.stations[j]));
            }
        }
    }

    #[test]
    fn traveling_pulse_round_trips_through_fit() {
        let spec = SynthSpec {
            kind: SynthKind::TravelingPulse,
            ..SynthSpec::default()
        };
        let s = generate(&spec).unwrap();
        let field = AreaField::fit(&s, spec.harmonics).unwrap();
        let pulse = Pulse::seeded(spec.harmonics, spec.seed);
        for (j, x) in s.stations.iter().enumerate() {
            let shift = std::f64::consts::TAU * x / (spec.wave_speed * spec.period);
            let base = spec.base_area(*x);
            let fit = &field.series[j];
            assert_relative_eq!(fit.a0, base, max_relative = 1e-13);
            for k in 0..spec.harmonics {
                let kk = (k + 1) as f64;
                let (c, s) = (pulse.cos[k], pulse.sin[k]);
                let (cs, sn) = ((kk * shift).cos(), (kk * shift).sin());
                let want_a = base * spec.epsilon * (c * cs - s * sn);
                let want_b = base * spec.epsilon * (s * cs + c * sn);
                assert!((fit.a[k] - want_a).abs() < 1e-13 * base);
                assert!((fit.b[k] - want_b).abs() < 1e-13 * base);
            }
        }
    }

    #[test]
    fn determinism() {
        let spec = SynthSpec::default();
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn marched_field_conserves_mass() {
        let spec = SynthSpec::default();
        let f = generate_with_truth(&spec).unwrap();
        let q = f.flow.unwrap();
        let mean = |j: usize| q.iter().map(|r| r[j]).sum::<f64>() / q.len() as f64;
        // Periodic area means the mean flow is constant along the axis.
        assert_relative_eq!(mean(0), mean(spec.stations - 1), max_relative = 1e-10);
    }

    #[test]
    fn invalid_specs() {
        let too_big = SynthSpec {
            epsilon: 0.3,
            ..SynthSpec::default()
        };
        assert!(matches!(generate(&too_big), Err(Error::InvalidInput(_))));
        let supercritical = SynthSpec {
            qbar_star: 500.0,
            ..SynthSpec::default()
        };
        assert!(generate(&supercritical).is_err());
    }
}
