//! Periodic cross-sectional area field `S(t, x)`.
//!
//! Each axial station carries a truncated Fourier series in time; between
//! stations the field is linear in `x`. Time derivatives are exact, and the
//! wall-motion flux `Phi(t, x) = -int_{x0}^{x} dS/dt dy` is integrated exactly
//! because its integrand is piecewise linear in `x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{Jet, TrigSeries};

/// Default number of retained harmonics of the heart rate.
pub const DEFAULT_HARMONICS: usize = 3;

/// Points per period used to verify positivity of a fitted field.
pub const POSITIVITY_GRID: usize = 64;

/// Lumen wall contour in one slice at one cardiac phase, in cm.
/// Closed implicitly: the last point connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourRing {
    pub points: Vec<[f64; 2]>,
}

impl ContourRing {
    pub fn new(points: Vec<[f64; 2]>) -> Self {
        Self { points }
    }

    /// Absolute shoelace area in cm².
    pub fn area(&self) -> Result<f64> {
        polygon_area(&self.points)
    }
}

/// Shoelace area of a closed polygon, orientation independent.
pub fn polygon_area(points: &[[f64; 2]]) -> Result<f64> {
    let n = points.len();
    if n < 3 {
        return Err(Error::FewerThanThreePoints(n));
    }
    // shift to the first vertex to limit cancellation for rings far from the origin
    let [ox, oy] = points[0];
    let mut twice = 0.0;
    let mut scale = 0.0_f64;
    for i in 0..n {
        let [x0, y0] = points[i];
        let [x1, y1] = points[(i + 1) % n];
        let (x0, y0, x1, y1) = (x0 - ox, y0 - oy, x1 - ox, y1 - oy);
        twice += x0 * y1 - x1 * y0;
        scale = scale.max(x0.abs()).max(y0.abs());
    }
    let area = 0.5 * twice.abs();
    if area <= 1e-14 * scale * scale || area == 0.0 {
        return Err(Error::ZeroArea);
    }
    Ok(area)
}

/// Raw periodic area samples on a phase x station grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaSamples {
    pub period: f64,
    /// Strictly increasing axial positions in cm.
    pub stations: Vec<f64>,
    /// `values[k][j]` is the area at phase `t_k = k T / M` and station `j`, cm².
    pub values: Vec<Vec<f64>>,
}

impl AreaSamples {
    pub fn phases(&self) -> usize {
        self.values.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "period must be positive, got {}",
                self.period
            )));
        }
        if self.stations.len() < 2 {
            return Err(Error::InvalidInput(
                "at least two stations are required".into(),
            ));
        }
        if self.stations.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "stations must be strictly increasing".into(),
            ));
        }
        for (k, row) in self.values.iter().enumerate() {
            if row.len() != self.stations.len() {
                return Err(Error::InvalidInput(format!(
                    "phase row {k} has {} values, expected {}",
                    row.len(),
                    self.stations.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::NonPositiveArea {
                        phase: k,
                        station: j,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    /// Time series of one station across all phases.
    pub fn station_series(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[j]).collect()
    }
}

/// Contour rings for one station at every phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSlice {
    pub phase_index: usize,
    pub z_cm: f64,
    pub points: Vec<[f64; 2]>,
}

/// Build area samples from contour rings. Each distinct `z_cm` becomes a station,
/// and phase indices must cover `0..M` for every station.
pub fn samples_from_contours(period: f64, slices: &[ContourSlice]) -> Result<AreaSamples> {
    let mut stations: Vec<f64> = slices.iter().map(|s| s.z_cm).collect();
    stations.sort_by(|a, b| a.total_cmp(b));
    stations.dedup();
    let phases = slices.iter().map(|s| s.phase_index + 1).max().unwrap_or(0);
    let mut values = vec![vec![f64::NAN; stations.len()]; phases];
    for s in slices {
        let j = stations
            .iter()
            .position(|z| *z == s.z_cm)
            .expect("station present");
        values[s.phase_index][j] = polygon_area(&s.points)?;
    }
    for (k, row) in values.iter().enumerate() {
        if let Some(j) = row.iter().position(|v| v.is_nan()) {
            return Err(Error::InvalidInput(format!(
                "missing contour for phase {k} at z = {}",
                stations[j]
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

/// Smooth area field: one Fourier series per station, linear in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaField {
    pub period: f64,
    pub stations: Vec<f64>,
    pub series: Vec<TrigSeries>,
    /// RMS fit residual per station, cm².
    pub residuals: Vec<f64>,
}

impl AreaField {
    /// Fit `H` harmonics per station and check positivity on a dense grid.
    pub fn fit(samples: &AreaSamples, harmonics: usize) -> Result<Self> {
        samples.validate()?;
        if samples.phases() < 2 * harmonics + 1 {
            return Err(Error::TooFewPhases {
                phases: samples.phases(),
                harmonics,
            });
        }
        let mut series = Vec::with_capacity(samples.stations.len());
        let mut residuals = Vec::with_capacity(samples.stations.len());
        let m = samples.phases();
        for j in 0..samples.stations.len() {
            let data = samples.station_series(j);
            let s = TrigSeries::fit_uniform(samples.period, &data, harmonics)?;
            let ss: f64 = data
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let t = samples.period * k as f64 / m as f64;
                    (s.eval(t) - v).powi(2)
                })
                .sum();
            residuals.push((ss / m as f64).sqrt());
            series.push(s);
        }
        Self::from_series(samples.period, samples.stations.clone(), series, residuals)
    }

    /// Assemble a field from per-station series, enforcing the positivity check.
    pub fn from_series(
        period: f64,
        stations: Vec<f64>,
        series: Vec<TrigSeries>,
        residuals: Vec<f64>,
    ) -> Result<Self> {
        if stations.len() != series.len() || stations.len() < 2 {
            return Err(Error::InvalidInput(
                "need one series per station and at least two stations".into(),
            ));
        }
        if stations.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "stations must be strictly increasing".into(),
            ));
        }
        // linear in x, so positivity at the stations implies positivity everywhere
        for (j, s) in series.iter().enumerate() {
            let (t, v) = s.grid_min(POSITIVITY_GRID);
            if !(v > 0.0) {
                return Err(Error::NonPositiveReconstruction {
                    t,
                    station: j,
                    value: v,
                });
            }
        }
        let residuals = if residuals.len() == stations.len() {
            residuals
        } else {
            vec![0.0; stations.len()]
        };
        Ok(Self {
            period,
            stations,
            series,
            residuals,
        })
    }

    pub fn harmonics(&self) -> usize {
        self.series.first().map_or(0, TrigSeries::harmonics)
    }

    pub fn x_min(&self) -> f64 {
        self.stations[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.stations.last().expect("at least two stations")
    }

    pub fn length(&self) -> f64 {
        self.x_max() - self.x_min()
    }

    fn tolerance(&self) -> f64 {
        1e-12 * self.length().max(1.0)
    }

    /// Clamp `x` into the station range, allowing for round-off at the ends.
    fn check_x(&self, x: f64) -> Result<f64> {
        let (lo, hi) = (self.x_min(), self.x_max());
        let tol = self.tolerance();
        if !(x >= lo - tol && x <= hi + tol) {
            return Err(Error::XOutOfRange { x, lo, hi });
        }
        Ok(x.clamp(lo, hi))
    }

    /// Interval index `j` and weight `w` such that `x = (1-w) x_j + w x_{j+1}`.
    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.stations.len();
        let j = match self.stations.binary_search_by(|s| s.total_cmp(&x)) {
            Ok(j) => j.min(n - 2),
            Err(j) => j.saturating_sub(1).min(n - 2),
        };
        let (x0, x1) = (self.stations[j], self.stations[j + 1]);
        (j, (x - x0) / (x1 - x0))
    }

    /// Series of `S(., x)` at an arbitrary position, obtained by interpolating coefficients.
    pub fn series_at(&self, x: f64) -> Result<TrigSeries> {
        let x = self.check_x(x)?;
        let (j, w) = self.locate(x);
        Ok(self.series[j].lerp(&self.series[j + 1], w))
    }

    /// `S`, `dS/dt` and `d2S/dt2` at `(t, x)`.
    pub fn jet(&self, t: f64, x: f64) -> Result<Jet> {
        let x = self.check_x(x)?;
        let (j, w) = self.locate(x);
        let a = self.series[j].jet(t);
        let b = self.series[j + 1].jet(t);
        Ok(Jet {
            value: (1.0 - w) * a.value + w * b.value,
            d1: (1.0 - w) * a.d1 + w * b.d1,
            d2: (1.0 - w) * a.d2 + w * b.d2,
        })
    }

    pub fn eval_s(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.jet(t, x)?.value)
    }

    pub fn eval_dsdt(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.jet(t, x)?.d1)
    }

    pub fn eval_d2sdt2(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.jet(t, x)?.d2)
    }

    /// Breakpoints of `[x0, x1]`: the ends plus every station strictly inside.
    fn breakpoints(&self, x0: f64, x1: f64) -> Vec<f64> {
        let tol = self.tolerance();
        let mut pts = vec![x0];
        pts.extend(
            self.stations
                .iter()
                .copied()
                .filter(|s| *s > x0 + tol && *s < x1 - tol),
        );
        pts.push(x1);
        pts
    }

    fn check_interval(&self, x0: f64, x: f64) -> Result<(f64, f64)> {
        let x0 = self.check_x(x0)?;
        let x = self.check_x(x)?;
        if x < x0 {
            return Err(Error::ReversedInterval { x0, x });
        }
        Ok((x0, x))
    }

    /// Wall-motion flux `Phi(t, x) = -int_{x0}^{x} dS/dt dy`, cm³/s.
    pub fn phi(&self, t: f64, x0: f64, x: f64) -> Result<f64> {
        Ok(self.flux(t, x0, x)?.phi)
    }

    /// `dPhi/dt(t, x) = -int_{x0}^{x} d2S/dt2 dy`, cm³/s².
    pub fn dphi_dt(&self, t: f64, x0: f64, x: f64) -> Result<f64> {
        Ok(self.flux(t, x0, x)?.dphi_dt)
    }

    /// `Phi` and `dPhi/dt` at `x`, plus `int_{x0}^{x} dPhi/dt(t, y) dy`.
    pub fn flux(&self, t: f64, x0: f64, x: f64) -> Result<Flux> {
        let (x0, x) = self.check_interval(x0, x)?;
        let pts = self.breakpoints(x0, x);
        let jets: Vec<Jet> = pts.iter().map(|p| self.jet(t, *p)).collect::<Result<_>>()?;
        Ok(flux_from_jets(&pts, &jets))
    }

    /// Signed version of [`AreaField::phi`]: for `x < x0` it integrates backwards.
    pub fn phi_signed(&self, t: f64, x0: f64, x: f64) -> Result<f64> {
        if x >= x0 {
            self.phi(t, x0, x)
        } else {
            Ok(-self.phi(t, x, x0)?)
        }
    }
}

/// Integrated wall-motion quantities over `[x0, x]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Flux {
    pub phi: f64,
    pub dphi_dt: f64,
    /// `int_{x0}^{x} dPhi/dt(t, y) dy`, cm⁴/s².
    pub dphi_dt_integral: f64,
}

/// Exact integrals for a field that is linear in `x` between consecutive `pts`.
pub(crate) fn flux_from_jets(pts: &[f64], jets: &[Jet]) -> Flux {
    let end = *pts.last().expect("non-empty");
    let mut out = Flux::default();
    for i in 0..pts.len() - 1 {
        let h = pts[i + 1] - pts[i];
        let (a, b) = (jets[i], jets[i + 1]);
        out.phi -= 0.5 * h * (a.d1 + b.d1);
        out.dphi_dt -= 0.5 * h * (a.d2 + b.d2);
        // int (end - y) g(y) dy over a piece where g is linear: Simpson is exact
        let mid_g = 0.5 * (a.d2 + b.d2);
        let mid_y = 0.5 * (pts[i] + pts[i + 1]);
        let f0 = (end - pts[i]) * a.d2;
        let fm = (end - mid_y) * mid_g;
        let f1 = (end - pts[i + 1]) * b.d2;
        out.dphi_dt_integral -= h / 6.0 * (f0 + 4.0 * fm + f1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{PI, TAU};

    #[test]
    fn unit_square() {
        let ring = ContourRing::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert_abs_diff_eq!(ring.area().unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn regular_polygon_approaches_circle() {
        let pts: Vec<[f64; 2]> = (0..360)
            .map(|k| {
                let th = TAU * k as f64 / 360.0;
                [th.cos(), th.sin()]
            })
            .collect();
        let area = polygon_area(&pts).unwrap();
        let closed_form = 180.0 * (TAU / 360.0).sin();
        assert_abs_diff_eq!(area, closed_form, epsilon = 1e-12);
        assert!((area - PI).abs() < 1.7e-4);
    }

    #[test]
    fn degenerate_rings() {
        assert_eq!(
            polygon_area(&[[0.0, 0.0], [1.0, 1.0]]),
            Err(Error::FewerThanThreePoints(2))
        );
        assert_eq!(
            polygon_area(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]),
            Err(Error::ZeroArea)
        );
    }

    fn two_station_field(s0: TrigSeries, s1: TrigSeries) -> AreaField {
        AreaField::from_series(s0.period, vec![0.0, 2.0], vec![s0, s1], vec![]).unwrap()
    }

    #[test]
    fn midpoint_is_mean_of_neighbours() {
        let f = two_station_field(
            TrigSeries {
                period: 1.0,
                a0: 4.0,
                a: vec![0.2],
                b: vec![0.0],
            },
            TrigSeries {
                period: 1.0,
                a0: 6.0,
                a: vec![0.0],
                b: vec![0.1],
            },
        );
        for &t in &[0.0, 0.3, 0.71] {
            let mid = f.eval_s(t, 1.0).unwrap();
            let mean = 0.5 * (f.eval_s(t, 0.0).unwrap() + f.eval_s(t, 2.0).unwrap());
            assert_abs_diff_eq!(mid, mean, epsilon = 1e-14);
        }
    }

    #[test]
    fn cosine_station_derivative_by_hand() {
        let c = 0.4;
        let period = 0.9;
        let s = TrigSeries {
            period,
            a0: 5.0,
            a: vec![c],
            b: vec![0.0],
        };
        let f = two_station_field(s.clone(), s);
        assert_abs_diff_eq!(f.eval_dsdt(0.0, 1.0).unwrap(), 0.0, epsilon = 1e-15);
        let w = TAU / period;
        let t = period / 4.0;
        assert_relative_eq!(
            f.eval_dsdt(t, 0.5).unwrap(),
            -c * w * (w * t).sin(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn rigid_field_has_no_flux() {
        let f = two_station_field(
            TrigSeries::constant(1.0, 7.0, 3),
            TrigSeries::constant(1.0, 5.0, 3),
        );
        for &t in &[0.0, 0.4] {
            assert_eq!(f.eval_dsdt(t, 1.3).unwrap(), 0.0);
            let fl = f.flux(t, 0.0, 2.0).unwrap();
            assert_eq!(fl.phi, 0.0);
            assert_eq!(fl.dphi_dt_integral, 0.0);
        }
    }

    #[test]
    fn uniform_pulsation_flux_is_linear_in_x() {
        let s = TrigSeries {
            period: 1.0,
            a0: 5.0,
            a: vec![0.3, 0.1],
            b: vec![-0.2, 0.05],
        };
        let f = two_station_field(s.clone(), s.clone());
        let t = 0.37;
        let x = 1.4;
        let fl = f.flux(t, 0.0, x).unwrap();
        assert_relative_eq!(fl.phi, -s.d1(t) * x, max_relative = 1e-13);
        assert_relative_eq!(fl.dphi_dt, -s.d2(t) * x, max_relative = 1e-13);
        assert_relative_eq!(
            fl.dphi_dt_integral,
            -s.d2(t) * x * x / 2.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn interval_errors() {
        let f = two_station_field(
            TrigSeries::constant(1.0, 7.0, 1),
            TrigSeries::constant(1.0, 5.0, 1),
        );
        assert!(matches!(f.eval_s(0.0, 2.5), Err(Error::XOutOfRange { .. })));
        assert!(matches!(
            f.phi(0.0, 1.5, 0.5),
            Err(Error::ReversedInterval { .. })
        ));
        assert_eq!(f.phi(0.0, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn fit_rejects_non_positive_reconstruction() {
        // positive samples whose 1-harmonic fit overshoots below zero
        let values: Vec<Vec<f64>> = [0.01, 0.01, 3.0, 0.01, 0.01]
            .iter()
            .map(|v| vec![*v, *v])
            .collect();
        let samples = AreaSamples {
            period: 1.0,
            stations: vec![0.0, 1.0],
            values,
        };
        assert!(matches!(
            AreaField::fit(&samples, 2),
            Err(Error::NonPositiveReconstruction { .. })
        ));
    }
}
