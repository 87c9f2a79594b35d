use serde::{Deserialize, Serialize};

use crate::area::{flux_from_jets, AreaField, Flux};
use crate::error::{Error, Result};
use crate::fourier::{Jet, TrigSeries};

/// A non-branching block `[x_start, x_start + length]` of an area field.
///
/// Holds its own copy of the per-breakpoint series (block ends plus interior
/// stations), so coefficient evaluation never touches the parent field.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub x_start: f64,
    pub length: f64,
    period: f64,
    /// Breakpoints in block-local coordinates, `0 ..= length`.
    local: Vec<f64>,
    series: Vec<TrigSeries>,
}

impl Block {
    pub fn new(field: &AreaField, x_start: f64, length: f64) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::InvalidInput(format!(
                "block length must be positive, got {length}"
            )));
        }
        let x_end = x_start + length;
        let tol = 1e-12 * field.length().max(1.0);
        if x_start < field.x_min() - tol || x_end > field.x_max() + tol {
            return Err(Error::XOutOfRange {
                x: if x_start < field.x_min() {
                    x_start
                } else {
                    x_end
                },
                lo: field.x_min(),
                hi: field.x_max(),
            });
        }
        let mut xs = vec![x_start];
        xs.extend(
            field
                .stations
                .iter()
                .copied()
                .filter(|s| *s > x_start + tol && *s < x_end - tol),
        );
        xs.push(x_end);
        let series = xs
            .iter()
            .map(|x| field.series_at(*x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            x_start,
            length,
            period: field.period,
            local: xs.iter().map(|x| x - x_start).collect(),
            series,
        })
    }

    pub fn x_end(&self) -> f64 {
        self.x_start + self.length
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    fn jets(&self, t: f64) -> Vec<Jet> {
        self.series.iter().map(|s| s.jet(t)).collect()
    }

    /// Area at the inlet and outlet plus the flux integrals over the whole block.
    pub fn state(&self, t: f64) -> BlockState {
        let jets = self.jets(t);
        BlockState {
            s_in: jets[0].value,
            s_out: jets[jets.len() - 1].value,
            flux: flux_from_jets(&self.local, &jets),
        }
    }

    pub fn coefficients(&self) -> RiccatiCoefficients {
        RiccatiCoefficients {
            period: self.period,
            model: CoefficientModel::Block(self.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockState {
    pub s_in: f64,
    pub s_out: f64,
    pub flux: Flux,
}

/// `A, B, C0, C1` at one instant; `C = C0 + alpha * C1`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoefficientSample {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
}

impl CoefficientSample {
    pub fn c(&self, alpha: f64) -> f64 {
        self.c0 + alpha * self.c1
    }

    /// Right-hand side `A q² + B q + C`.
    pub fn rhs(&self, q: f64, alpha: f64) -> f64 {
        (self.a * q + self.b) * q + self.c(alpha)
    }

    /// Linearisation `2 A q + B`.
    pub fn slope(&self, q: f64) -> f64 {
        2.0 * self.a * q + self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
enum CoefficientModel {
    Block(Block),
    Series {
        a: TrigSeries,
        b: TrigSeries,
        c0: TrigSeries,
        c1: TrigSeries,
    },
    Constant(CoefficientSample),
}

/// T-periodic Riccati coefficients, evaluable at any time.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiCoefficients {
    pub period: f64,
    model: CoefficientModel,
}

/// Coefficient-injection file: `{T, samples: [{t, A, B, C0, C1}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientInjection {
    #[serde(rename = "T")]
    pub period: f64,
    pub samples: Vec<InjectedSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectedSample {
    pub t: f64,
    #[serde(flatten)]
    pub coefficients: CoefficientSample,
}

impl RiccatiCoefficients {
    pub fn constant(period: f64, a: f64, b: f64, c0: f64, c1: f64) -> Self {
        Self {
            period,
            model: CoefficientModel::Constant(CoefficientSample { a, b, c0, c1 }),
        }
    }

    pub fn from_series(a: TrigSeries, b: TrigSeries, c0: TrigSeries, c1: TrigSeries) -> Self {
        Self {
            period: a.period,
            model: CoefficientModel::Series { a, b, c0, c1 },
        }
    }

    /// Fit injected uniform samples with at most `harmonics` harmonics
    /// (fewer if the sample count cannot support them).
    pub fn from_injection(inj: &CoefficientInjection, harmonics: usize) -> Result<Self> {
        let m = inj.samples.len();
        if m == 0 || !(inj.period > 0.0) {
            return Err(Error::InvalidInput(
                "injection needs a positive period and samples".into(),
            ));
        }
        let mut samples = inj.samples.clone();
        samples.sort_by(|a, b| a.t.total_cmp(&b.t));
        let dt = inj.period / m as f64;
        for (k, s) in samples.iter().enumerate() {
            if (s.t - k as f64 * dt).abs() > 1e-9 * inj.period {
                return Err(Error::InvalidInput(format!(
                    "injected samples must be uniform t_k = k T / {m}; sample {k} has t = {}",
                    s.t
                )));
            }
        }
        let h = harmonics.min((m - 1) / 2);
        let fit = |f: fn(&CoefficientSample) -> f64| {
            let v: Vec<f64> = samples.iter().map(|s| f(&s.coefficients)).collect();
            TrigSeries::fit_uniform(inj.period, &v, h)
        };
        Ok(Self::from_series(
            fit(|c| c.a)?,
            fit(|c| c.b)?,
            fit(|c| c.c0)?,
            fit(|c| c.c1)?,
        ))
    }

    pub fn block(&self) -> Option<&Block> {
        match &self.model {
            CoefficientModel::Block(b) => Some(b),
            _ => None,
        }
    }

    pub fn sample(&self, t: f64) -> CoefficientSample {
        match &self.model {
            CoefficientModel::Constant(c) => *c,
            CoefficientModel::Series { a, b, c0, c1 } => CoefficientSample {
                a: a.eval(t),
                b: b.eval(t),
                c0: c0.eval(t),
                c1: c1.eval(t),
            },
            CoefficientModel::Block(block) => block_coefficients(block.length, &block.state(t)),
        }
    }

    /// Uniform samples over one period, `n` points (t = T excluded).
    pub fn tabulate(&self, n: usize) -> Vec<(f64, CoefficientSample)> {
        (0..n)
            .map(|k| {
                let t = self.period * k as f64 / n as f64;
                (t, self.sample(t))
            })
            .collect()
    }

    /// Largest magnitude of each coefficient on a uniform grid.
    pub fn magnitudes(&self, n: usize) -> CoefficientSample {
        self.tabulate(n)
            .iter()
            .fold(CoefficientSample::default(), |m, (_, c)| {
                CoefficientSample {
                    a: m.a.max(c.a.abs()),
                    b: m.b.max(c.b.abs()),
                    c0: m.c0.max(c.c0.abs()),
                    c1: m.c1.max(c.c1.abs()),
                }
            })
    }
}

/// Riccati coefficients from the block-integrated momentum balance.
///
/// `C1 = -(2/L) [sqrt S]` carries the sign that follows from integrating
/// `-(alpha / S^{3/2}) dS/dx` times `S` over the block.
pub fn block_coefficients(length: f64, st: &BlockState) -> CoefficientSample {
    let inv_l = 1.0 / length;
    let phi = st.flux.phi;
    CoefficientSample {
        a: -inv_l * (1.0 / st.s_out - 1.0 / st.s_in),
        b: -2.0 * inv_l * phi / st.s_out,
        c0: -inv_l * (phi * phi / st.s_out + st.flux.dphi_dt_integral),
        c1: -2.0 * inv_l * (st.s_out.sqrt() - st.s_in.sqrt()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::area::AreaField;
    use approx::assert_abs_diff_eq;

    fn field(stations: Vec<f64>, series: Vec<TrigSeries>) -> AreaField {
        AreaField::from_series(series[0].period, stations, series, vec![]).unwrap()
    }

    #[test]
    fn uniform_rigid_cylinder_has_zero_coefficients() {
        let s = TrigSeries::constant(1.0, 4.0, 3);
        let f = field(vec![0.0, 5.0, 10.0], vec![s.clone(), s.clone(), s]);
        let c = Block::new(&f, 2.0, 3.0).unwrap().coefficients();
        for k in 0..8 {
            let v = c.sample(k as f64 / 8.0);
            assert_eq!((v.a, v.b, v.c0, v.c1), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn rigid_taper_by_hand() {
        let f = field(
            vec![0.0, 10.0],
            vec![
                TrigSeries::constant(1.0, 7.0, 3),
                TrigSeries::constant(1.0, 5.0, 3),
            ],
        );
        let c = Block::new(&f, 0.0, 10.0)
            .unwrap()
            .coefficients()
            .sample(0.3);
        assert_abs_diff_eq!(
            c.a,
            -(1.0 / 10.0) * (1.0 / 5.0 - 1.0 / 7.0),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(c.a, -5.7143e-3, epsilon = 1e-7);
        assert_eq!(c.b, 0.0);
        assert_eq!(c.c0, 0.0);
        // narrowing downstream: positive C1, so A C < 0 for alpha > 0
        assert_abs_diff_eq!(
            c.c1,
            -(2.0 / 10.0) * (5f64.sqrt() - 7f64.sqrt()),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(c.c1, 8.194e-2, epsilon = 1e-5);
    }

    #[test]
    fn uniform_pulsation_by_hand() {
        let s = TrigSeries {
            period: 1.0,
            a0: 5.0,
            a: vec![0.3, 0.05],
            b: vec![-0.1, 0.02],
        };
        let f = field(vec![0.0, 0.5, 2.0], vec![s.clone(), s.clone(), s.clone()]);
        let len = 1.5;
        let c = Block::new(&f, 0.2, len).unwrap().coefficients();
        for &t in &[0.0, 0.21, 0.66] {
            let j = s.jet(t);
            let v = c.sample(t);
            assert_abs_diff_eq!(v.a, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(v.b, 2.0 * j.d1 / j.value, epsilon = 1e-12);
            let c0 = -j.d1 * j.d1 * len / j.value + j.d2 * len / 2.0;
            assert_abs_diff_eq!(v.c0, c0, epsilon = 1e-11);
            assert_abs_diff_eq!(v.c1, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn block_outside_field() {
        let s = TrigSeries::constant(1.0, 4.0, 1);
        let f = field(vec![0.0, 1.0], vec![s.clone(), s]);
        assert!(matches!(
            Block::new(&f, 0.5, 1.0),
            Err(Error::XOutOfRange { .. })
        ));
        assert!(matches!(
            Block::new(&f, 0.0, 0.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn injection_round_trip() {
        let period = 2.0;
        let samples = (0..9)
            .map(|k| {
                let t = period * k as f64 / 9.0;
                InjectedSample {
                    t,
                    coefficients: CoefficientSample {
                        a: -1.0,
                        b: 0.5 * (std::f64::consts::TAU * t / period).sin(),
                        c0: 1.0,
                        c1: 0.25,
                    },
                }
            })
            .collect();
        let inj = CoefficientInjection { period, samples };
        let json = serde_json::to_string(&inj).unwrap();
        assert!(json.contains("\"C0\""));
        let parsed: CoefficientInjection = serde_json::from_str(&json).unwrap();
        let c = RiccatiCoefficients::from_injection(&parsed, 3).unwrap();
        let v = c.sample(0.5);
        assert_abs_diff_eq!(v.a, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v.b, 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(v.c(2.0), 1.5, epsilon = 1e-14);
    }
}
