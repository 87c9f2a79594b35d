//! WebAssembly front-end. Each export takes a JSON synthesis spec (missing
//! keys fall back to defaults) and returns JSON ready for plotting.
//!
//! The computations live in plain functions so they can be tested natively;
//! the `#[wasm_bindgen]` wrappers only translate errors.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use pulseflow::area::AreaField;
use pulseflow::optimizer::{consistency, BlockPair, Consistency};
use pulseflow::pipeline::{reconstruct, PipelineConfig};
use pulseflow::riccati::{default_scan_range, integrate_riccati, nullcline, periodic_solutions};
use pulseflow::synth::{generate, generate_with_truth, SynthSpec};

type Result<T> = std::result::Result<T, String>;

fn spec(json: &str) -> Result<SynthSpec> {
    let text = if json.trim().is_empty() { "{}" } else { json };
    serde_json::from_str(text).map_err(|e| format!("bad spec: {e}"))
}

fn pipeline_config(spec: &SynthSpec) -> PipelineConfig {
    PipelineConfig {
        period: Some(spec.period),
        harmonics: spec.harmonics,
        ..PipelineConfig::default()
    }
}

fn field(spec: &SynthSpec) -> Result<AreaField> {
    let samples = generate(spec).map_err(|e| e.to_string())?;
    AreaField::fit(&samples, spec.harmonics).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub label: String,
    pub t: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct FlowView {
    pub alpha_star: f64,
    pub alpha_opt: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub mse: f64,
    pub qbar: f64,
    pub warnings: Vec<String>,
    pub curves: Vec<Curve>,
}

/// Synthesise, reconstruct, and return the flow at 10/50/90 % of the segment
/// alongside the generator's own flow at the nearest stations.
pub fn flow_view(spec_json: &str) -> Result<FlowView> {
    let spec = spec(spec_json)?;
    let truth = generate_with_truth(&spec).map_err(|e| e.to_string())?;
    let config = pipeline_config(&spec);
    let rec = reconstruct(&truth.samples, &config).map_err(|e| e.to_string())?;
    let mut curves: Vec<Curve> = rec
        .flow
        .positions
        .iter()
        .zip(&rec.flow.q)
        .map(|(x, q)| Curve {
            label: format!("x = {x:.1} cm"),
            t: rec.flow.times.clone(),
            q: q.clone(),
        })
        .collect();
    if let Some(flow) = &truth.flow {
        let stations = &truth.samples.stations;
        let m = truth.samples.phases();
        for x in &rec.flow.positions {
            let j = (0..stations.len())
                .min_by(|a, b| {
                    (stations[*a] - x)
                        .abs()
                        .total_cmp(&(stations[*b] - x).abs())
                })
                .unwrap_or(0);
            // close the period for plotting
            let mut q: Vec<f64> = flow.iter().map(|row| row[j]).collect();
            q.push(q[0]);
            curves.push(Curve {
                label: format!("truth x = {:.1} cm", stations[j]),
                t: (0..=m).map(|k| spec.period * k as f64 / m as f64).collect(),
                q,
            });
        }
    }
    let r = &rec.result;
    Ok(FlowView {
        alpha_star: spec.alpha_star,
        alpha_opt: r.alpha_opt,
        alpha_min: r.alpha_min,
        alpha_max: r.alpha_max,
        mse: r.mse,
        qbar: r.qbar,
        warnings: r.warnings.clone(),
        curves,
    })
}

#[derive(Debug, Serialize)]
pub struct PhaseView {
    pub alpha: f64,
    /// Lower and upper nullcline branches, `null` where no real root exists.
    pub t: Vec<f64>,
    pub nullcline_low: Vec<Option<f64>>,
    pub nullcline_high: Vec<Option<f64>>,
    pub periodic: Vec<Curve>,
    pub trajectories: Vec<Curve>,
}

/// Phase picture of the upstream block at `alpha`.
pub fn phase_view(spec_json: &str, alpha: f64) -> Result<PhaseView> {
    let spec = spec(spec_json)?;
    let field = field(&spec)?;
    let pair = BlockPair::trailing(&field, 1.0).map_err(|e| e.to_string())?;
    let coeffs = pair.upstream();
    let settings = pipeline_config(&spec).inverse.settings();
    let n = 200;
    let t: Vec<f64> = (0..=n).map(|k| spec.period * k as f64 / n as f64).collect();
    let (mut low, mut high) = (Vec::new(), Vec::new());
    for tk in &t {
        let roots = nullcline(coeffs, alpha, *tk);
        low.push(roots.first().copied());
        high.push(roots.get(1).or(roots.first()).copied());
    }
    let periodic = periodic_solutions(coeffs, alpha, &settings)
        .map_err(|e| e.to_string())?
        .solutions
        .into_iter()
        .map(|s| Curve {
            label: format!(
                "periodic, mean {:.2}, multiplier {:.6}",
                s.mean, s.multiplier
            ),
            t: s.times(),
            q: s.q,
        })
        .collect();
    let mut trajectories = Vec::new();
    if let Some((lo, hi)) = default_scan_range(coeffs, alpha) {
        let fan = 9;
        for i in 0..fan {
            let q0 = lo + (hi - lo) * i as f64 / (fan - 1) as f64;
            let tr = integrate_riccati(coeffs, alpha, q0, 0.0, spec.period, 128, &settings)
                .map_err(|e| e.to_string())?;
            trajectories.push(Curve {
                label: format!("Q(0) = {q0:.1}"),
                t: tr.times,
                q: tr.values,
            });
        }
    }
    Ok(PhaseView {
        alpha,
        t,
        nullcline_low: low,
        nullcline_high: high,
        periodic,
        trajectories,
    })
}

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    pub alpha: f64,
    /// `None` where either block has no admissible periodic flow.
    pub consistency: Option<f64>,
}

/// `I(alpha)` on `points` log-spaced values between `alpha_lo` and `alpha_hi`.
pub fn sweep(
    spec_json: &str,
    alpha_lo: f64,
    alpha_hi: f64,
    points: usize,
) -> Result<Vec<SweepPoint>> {
    if !(alpha_lo > 0.0 && alpha_hi > alpha_lo) || points < 2 {
        return Err("need 0 < alpha_lo < alpha_hi and at least two points".into());
    }
    let spec = spec(spec_json)?;
    let field = field(&spec)?;
    let pair = BlockPair::trailing(&field, 1.0).map_err(|e| e.to_string())?;
    let inverse = pipeline_config(&spec).inverse;
    let ratio = (alpha_hi / alpha_lo).ln();
    (0..points)
        .map(|i| {
            let alpha = alpha_lo * (ratio * i as f64 / (points - 1) as f64).exp();
            let value = match consistency(&pair, alpha, &inverse) {
                Ok(Consistency::Value(v)) => Some(v),
                Ok(Consistency::Infeasible(_)) => None,
                Err(e) => return Err(e.to_string()),
            };
            Ok(SweepPoint {
                alpha,
                consistency: value,
            })
        })
        .collect()
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = reconstructSynthetic)]
pub fn reconstruct_synthetic(spec_json: &str) -> std::result::Result<String, JsError> {
    to_js(flow_view(spec_json))
}

#[wasm_bindgen(js_name = phasePicture)]
pub fn phase_picture(spec_json: &str, alpha: f64) -> std::result::Result<String, JsError> {
    to_js(phase_view(spec_json, alpha))
}

#[wasm_bindgen(js_name = consistencySweep)]
pub fn consistency_sweep(
    spec_json: &str,
    alpha_lo: f64,
    alpha_hi: f64,
    points: usize,
) -> std::result::Result<String, JsError> {
    to_js(sweep(spec_json, alpha_lo, alpha_hi, points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec_means_defaults() {
        assert_eq!(spec("").unwrap(), SynthSpec::default());
        assert_eq!(spec("{\"epsilon\": 0.03}").unwrap().epsilon, 0.03);
        assert!(spec("{\"epsilon\": }").is_err());
    }

    #[test]
    fn sweep_rejects_bad_ranges() {
        assert!(sweep("{}", 10.0, 5.0, 8).is_err());
        assert!(sweep("{}", 1.0, 5.0, 1).is_err());
    }
}
