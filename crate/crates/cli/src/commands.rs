use std::fs;

use anyhow::{anyhow, Context as _};
use serde::Serialize;

use pulseflow::area::{AreaField, AreaSamples};
use pulseflow::hemodynamics::profile;
use pulseflow::io::{
    flow_csv, hemodynamics_csv, nullcline_csv, phase_csv, sensitivity_csv, write_area_csv,
};
use pulseflow::optimizer::reconstruct_flow;
use pulseflow::pipeline::{operating_point, reconstruct_field, Report};
use pulseflow::riccati::{
    default_scan_range, periodic_solutions, IntegratorSettings, RiccatiCoefficients,
};
use pulseflow::sensitivity::sensitivity_p;
use pulseflow::synth::{generate_with_truth, SynthSpec};

use crate::config::{load, sha256_hex, Loaded, RunConfig};
use crate::manifest::{Manifest, Outputs};
use crate::{Common, Failure};

pub struct Context {
    pub command: &'static str,
    pub threads: Option<usize>,
    pub common: Common,
}

impl Context {
    fn manifest(&self, config_json: &str, input: Option<&[u8]>) -> Manifest {
        Manifest {
            command: self.command.to_string(),
            cli_version: env!("CARGO_PKG_VERSION").to_string(),
            core_version: pulseflow::VERSION.to_string(),
            config_sha256: sha256_hex(config_json.as_bytes()),
            input_sha256: input.map(sha256_hex),
            seed: self.common.seed,
            threads: self.threads,
            outputs: Vec::new(),
        }
    }
}

fn pretty<T: Serialize>(value: &T) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Points per period in the nullcline table.
const NULLCLINE_POINTS: usize = 256;
/// Trajectories in each phase picture.
const PHASE_FAN: usize = 9;

pub fn synth(ctx: &Context) -> Result<(), Failure> {
    let Loaded { mut config, .. } = load::<SynthSpec>(ctx.common.config.as_deref())?;
    if let Some(seed) = ctx.common.seed {
        config.seed = seed;
    }
    let field = generate_with_truth(&config)?;
    let spec_json = pretty(&config)?;
    let mut out = Outputs::new(&ctx.common.out)?;
    out.write("area.csv", &write_area_csv(&field.samples))?;
    out.write("spec.json", &spec_json)?;
    if let Some(flow) = field.flow {
        let truth = AreaSamples {
            period: config.period,
            stations: field.samples.stations.clone(),
            values: flow,
        };
        out.write("truth_flow.csv", &write_area_csv(&truth))?;
    }
    // a ready-to-run configuration for `reconstruct`
    let run = RunConfig {
        input: Some("area.csv".into()),
        pipeline: pulseflow::pipeline::PipelineConfig {
            period: Some(config.period),
            harmonics: config.harmonics,
            ..Default::default()
        },
        ..RunConfig::default()
    };
    out.write("run.json", &pretty(&run)?)?;
    log::info!(
        "synthesised {} stations x {} phases, alpha* = {}, qbar* = {}",
        config.stations,
        config.phases,
        config.alpha_star,
        config.qbar_star
    );
    out.finish(ctx.manifest(&spec_json, None))
}

/// Body of `report.json` when the reconstruction fails for lack of a solution.
#[derive(Serialize)]
struct FailureReport {
    error: String,
    message: String,
    warnings: Vec<String>,
}

fn error_kind(e: &pulseflow::Error) -> String {
    let debug = format!("{e:?}");
    debug
        .split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap_or_default()
        .to_string()
}

pub fn reconstruct(ctx: &Context) -> Result<(), Failure> {
    let loaded = load::<RunConfig>(ctx.common.config.as_deref())?;
    let cfg = &loaded.config.pipeline;
    cfg.validate()?;
    let (samples, input) = loaded.samples()?;
    let config_json = pretty(&loaded.config)?;
    let mut out = Outputs::new(&ctx.common.out)?;
    out.write("config.json", &config_json)?;
    let manifest = ctx.manifest(&config_json, Some(&input));

    let field = AreaField::fit(&samples, cfg.harmonics)?;
    let rec = match reconstruct_field(field, cfg) {
        Ok(rec) => rec,
        Err(e) => {
            if crate::exit_code(&anyhow!(e.clone())) == 2 {
                let report = FailureReport {
                    error: error_kind(&e),
                    message: e.to_string(),
                    warnings: Vec::new(),
                };
                out.write("report.json", &pretty(&report)?)?;
                out.finish(manifest)?;
            }
            return Err(e.into());
        }
    };
    let report = rec.report();
    for w in &report.warnings {
        log::warn!("{w}");
    }
    log::info!(
        "alpha_opt = {}, mse = {}, qbar = {}",
        report.alpha_opt,
        report.mse,
        report.qbar
    );
    out.write("report.json", &pretty(&report)?)?;
    out.write("flow.csv", &flow_csv(&rec.flow, &cfg.station_fractions))?;

    let alpha = report.alpha_opt;
    let blocks = [
        ("block1", rec.pair.upstream()),
        ("block2", rec.pair.downstream()),
    ];
    out.write(
        "nullcline.csv",
        &nullcline_csv(&blocks, alpha, NULLCLINE_POINTS),
    )?;
    let settings = cfg.inverse.settings();
    let mut phase = String::new();
    for (i, (name, coeffs)) in blocks.iter().enumerate() {
        let table = phase_table(name, coeffs, alpha, &settings)?;
        // one header for the combined table
        phase.push_str(if i == 0 {
            &table
        } else {
            table.split_once('\n').map_or("", |t| t.1)
        });
    }
    out.write("phase.csv", &phase)?;
    out.finish(manifest)
}

fn phase_table(
    name: &str,
    coeffs: &RiccatiCoefficients,
    alpha: f64,
    settings: &IntegratorSettings,
) -> Result<String, Failure> {
    let periodic = periodic_solutions(coeffs, alpha, settings)?.solutions;
    let starts: Vec<f64> = match default_scan_range(coeffs, alpha) {
        Some((lo, hi)) => (0..PHASE_FAN)
            .map(|i| lo + (hi - lo) * i as f64 / (PHASE_FAN - 1) as f64)
            .collect(),
        None => Vec::new(),
    };
    Ok(phase_csv(
        name, coeffs, alpha, &periodic, &starts, settings,
    )?)
}

/// The configuration plus the alpha of an earlier reconstruction.
fn prior(loaded: &Loaded<RunConfig>, ctx: &Context) -> Result<(Report, Vec<u8>), Failure> {
    let path = match &loaded.config.report {
        Some(p) => loaded.resolve(p),
        None => ctx.common.out.join("report.json"),
    };
    let bytes = fs::read(&path)
        .with_context(|| format!("reading {}; run `reconstruct` first", path.display()))?;
    let report: Report = serde_json::from_slice(&bytes).with_context(|| {
        format!(
            "{} is not a successful reconstruction report",
            path.display()
        )
    })?;
    Ok((report, bytes))
}

pub fn sensitivity(ctx: &Context) -> Result<(), Failure> {
    let loaded = load::<RunConfig>(ctx.common.config.as_deref())?;
    let cfg = &loaded.config.pipeline;
    cfg.validate()?;
    let (report, _) = prior(&loaded, ctx)?;
    let (samples, input) = loaded.samples()?;
    let point = operating_point(
        AreaField::fit(&samples, cfg.harmonics)?,
        cfg,
        report.alpha_opt,
    )?;
    let settings = cfg.inverse.settings();
    let curve = sensitivity_p(
        point.pair.upstream(),
        report.alpha_opt,
        &point.evaluation.upstream.selection.solution,
        &settings,
    )?;
    log::info!("homogeneous multiplier {}", curve.homogeneous_end);
    let config_json = pretty(&loaded.config)?;
    let mut out = Outputs::new(&ctx.common.out)?;
    out.write("sensitivity.csv", &sensitivity_csv(&curve))?;
    out.finish(ctx.manifest(&config_json, Some(&input)))
}

pub fn hemo(ctx: &Context) -> Result<(), Failure> {
    let loaded = load::<RunConfig>(ctx.common.config.as_deref())?;
    let cfg = &loaded.config.pipeline;
    cfg.validate()?;
    let n = loaded.config.hemo_stations;
    if n < 2 {
        anyhow::bail!("hemo_stations must be at least 2");
    }
    let (report, _) = prior(&loaded, ctx)?;
    let (samples, input) = loaded.samples()?;
    let point = operating_point(
        AreaField::fit(&samples, cfg.harmonics)?,
        cfg,
        report.alpha_opt,
    )?;
    let (lo, hi) = point.segment;
    let positions: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let curves = reconstruct_flow(
        &point.field,
        point.pair.upstream_block(),
        &point.evaluation.upstream.selection.solution,
        &positions,
    )?;
    let rows = profile(&point.field, &curves, &cfg.fluid_for(point.field.period))?;
    let config_json = pretty(&loaded.config)?;
    let mut out = Outputs::new(&ctx.common.out)?;
    out.write("hemodynamics.csv", &hemodynamics_csv(&rows))?;
    out.finish(ctx.manifest(&config_json, Some(&input)))
}
