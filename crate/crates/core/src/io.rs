//! Text formats: area grids, contour sets, coefficient injections and the
//! CSV tables emitted by each pipeline stage.
//!
//! Numbers are written with the shortest representation that parses back to
//! the same `f64`, so every table round-trips exactly.

use std::fmt::Write as _;

use crate::area::{samples_from_contours, AreaSamples, ContourSlice};
use crate::error::{Error, Result};
use crate::hemodynamics::StationNumbers;
use crate::optimizer::FlowCurves;
use crate::riccati::{
    integrate_riccati, nullcline, IntegratorSettings, PeriodicSolution, RiccatiCoefficients,
};
use crate::sensitivity::SensitivityCurve;

fn parse_number(field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("{what}: cannot read {field:?} as a number")))
}

/// `t_frac,x_0,...` header, then one row per phase `k/M, S_k0, ...`.
pub fn write_area_csv(samples: &AreaSamples) -> String {
    let m = samples.phases();
    let mut out = String::from("t_frac");
    for x in &samples.stations {
        write!(out, ",{x}").unwrap();
    }
    out.push('\n');
    for (k, row) in samples.values.iter().enumerate() {
        write!(out, "{}", k as f64 / m as f64).unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Reads an area grid; the period is not part of the file.
pub fn read_area_csv(text: &str, period: f64) -> Result<AreaSamples> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    if header.get(0).map(str::trim) != Some("t_frac") {
        return Err(Error::Parse(
            "area grid must start with a t_frac column".into(),
        ));
    }
    let stations = header
        .iter()
        .skip(1)
        .map(|h| parse_number(h, "station position"))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.len() != stations.len() + 1 {
            return Err(Error::Parse(format!(
                "row {k} has {} fields, expected {}",
                record.len(),
                stations.len() + 1
            )));
        }
        values.push(
            record
                .iter()
                .skip(1)
                .map(|v| parse_number(v, "area"))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let m = values.len();
    if m == 0 {
        return Err(Error::Parse("area grid has no rows".into()));
    }
    for (k, record) in csv::ReaderBuilder::new()
        .from_reader(text.as_bytes())
        .records()
        .enumerate()
    {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let t = parse_number(&record[0], "t_frac")?;
        if (t - k as f64 / m as f64).abs() > 1e-9 {
            return Err(Error::Parse(format!(
                "row {k}: phases must be k/M, found t_frac = {t}"
            )));
        }
    }
    let samples = AreaSamples {
        period,
        stations,
        values,
    };
    samples.validate()?;
    Ok(samples)
}

/// Contour JSON: an array of `{phase_index, z_cm, points}`.
pub fn read_contours_json(text: &str, period: f64) -> Result<AreaSamples> {
    let slices: Vec<ContourSlice> = serde_json::from_str(text)?;
    samples_from_contours(period, &slices)
}

fn t_frac(k: usize, n: usize) -> f64 {
    k as f64 / n as f64
}

/// Column name for a station fraction, `0.1 -> q_10`.
pub fn fraction_label(fraction: f64) -> String {
    let pct = fraction * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("q_{}", pct.round() as i64)
    } else {
        format!("q_{pct}")
    }
}

/// `t_frac,q_10,q_50,q_90` for the given station fractions.
pub fn flow_csv(curves: &FlowCurves, fractions: &[f64]) -> String {
    let mut out = String::from("t_frac");
    for f in fractions {
        write!(out, ",{}", fraction_label(*f)).unwrap();
    }
    out.push('\n');
    let n = curves.times.len() - 1;
    for k in 0..=n {
        write!(out, "{}", t_frac(k, n)).unwrap();
        for q in &curves.q {
            write!(out, ",{}", q[k]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn sensitivity_csv(curve: &SensitivityCurve) -> String {
    let n = curve.p.len() - 1;
    let mut out = String::from("t_frac,P_seconds\n");
    for (k, p) in curve.p.iter().enumerate() {
        writeln!(out, "{},{p}", t_frac(k, n)).unwrap();
    }
    out
}

pub fn hemodynamics_csv(rows: &[StationNumbers]) -> String {
    let mut out = String::from("x_cm,Wo,Re_mean,Re_peak,regime\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.x,
            r.womersley,
            r.re_mean,
            r.re_peak,
            r.regime.label()
        )
        .unwrap();
    }
    out
}

/// Nullclines `A Q² + B Q + C = 0` of each block; empty cells where no real root exists.
pub fn nullcline_csv(blocks: &[(&str, &RiccatiCoefficients)], alpha: f64, n: usize) -> String {
    let mut out = String::from("block,t_frac,q_low,q_high\n");
    for (name, coeffs) in blocks {
        for k in 0..=n {
            let roots = nullcline(coeffs, alpha, coeffs.period * t_frac(k, n));
            let (lo, hi) = match roots.as_slice() {
                [] => (String::new(), String::new()),
                [r] => (r.to_string(), r.to_string()),
                [a, b, ..] => (a.to_string(), b.to_string()),
            };
            writeln!(out, "{name},{},{lo},{hi}", t_frac(k, n)).unwrap();
        }
    }
    out
}

/// Phase picture of one block: the periodic solutions plus a fan of
/// trajectories started at evenly spaced initial flows. Trajectories stop
/// where they blow up.
pub fn phase_csv(
    block: &str,
    coeffs: &RiccatiCoefficients,
    alpha: f64,
    periodic: &[PeriodicSolution],
    starts: &[f64],
    settings: &IntegratorSettings,
) -> Result<String> {
    let mut out = String::from("block,curve,t_frac,q\n");
    for (i, s) in periodic.iter().enumerate() {
        let n = s.intervals();
        for (k, q) in s.q.iter().enumerate() {
            writeln!(out, "{block},periodic_{i},{},{q}", t_frac(k, n)).unwrap();
        }
    }
    let n = 128;
    for (i, q0) in starts.iter().enumerate() {
        let tr = integrate_riccati(coeffs, alpha, *q0, 0.0, coeffs.period, n, settings)?;
        for (k, q) in tr.values.iter().enumerate() {
            writeln!(out, "{block},trajectory_{i},{},{q}", t_frac(k, n)).unwrap();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> AreaSamples {
        AreaSamples {
            period: 0.8,
            stations: vec![0.0, 0.25, 1.0 / 3.0],
            values: vec![
                vec![5.0, 4.9, 0.1 + 0.2],
                vec![5.1, std::f64::consts::PI, 4.8],
            ],
        }
    }

    #[test]
    fn area_csv_round_trip_is_exact() {
        let s = grid();
        let text = write_area_csv(&s);
        assert!(text.starts_with("t_frac,0,0.25,0.3333333333333333\n0,"));
        assert_eq!(read_area_csv(&text, 0.8).unwrap(), s);
    }

    #[test]
    fn area_csv_errors() {
        assert!(matches!(
            read_area_csv("t,0,1\n0,1,2\n", 1.0),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            read_area_csv("t_frac,0,1\n0,1,x\n", 1.0),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            read_area_csv("t_frac,0,1\n0,1\n", 1.0),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            read_area_csv("t_frac,0,1\n0.3,1,2\n", 1.0),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            read_area_csv("t_frac,0,1\n0,1,-2\n", 1.0),
            Err(Error::NonPositiveArea { .. })
        ));
    }

    #[test]
    fn contours_from_json() {
        let square = |s: f64| format!("[[0,0],[{s},0],[{s},{s}],[0,{s}]]");
        let text = format!(
            "[{{\"phase_index\":0,\"z_cm\":0,\"points\":{a}}},{{\"phase_index\":0,\"z_cm\":1,\"points\":{b}}},\
             {{\"phase_index\":1,\"z_cm\":0,\"points\":{b}}},{{\"phase_index\":1,\"z_cm\":1,\"points\":{a}}}]",
            a = square(2.0),
            b = square(3.0)
        );
        let s = read_contours_json(&text, 1.0).unwrap();
        assert_eq!(s.values, vec![vec![4.0, 9.0], vec![9.0, 4.0]]);
    }

    #[test]
    fn labels() {
        assert_eq!(fraction_label(0.1), "q_10");
        assert_eq!(fraction_label(0.5), "q_50");
        assert_eq!(fraction_label(0.9), "q_90");
        assert_eq!(fraction_label(0.125), "q_12.5");
    }
}
