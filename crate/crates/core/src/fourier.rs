//! Truncated trigonometric series on a fixed period.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `a0 + sum_m a[m-1] cos(m w t) + b[m-1] sin(m w t)` with `w = 2 pi / period`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigSeries {
    pub period: f64,
    pub a0: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Value and first two time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl TrigSeries {
    pub fn constant(period: f64, value: f64, harmonics: usize) -> Self {
        Self {
            period,
            a0: value,
            a: vec![0.0; harmonics],
            b: vec![0.0; harmonics],
        }
    }

    pub fn harmonics(&self) -> usize {
        self.a.len()
    }

    /// Least-squares fit to `M` uniform samples `t_k = k T / M`.
    ///
    /// For uniform sampling with `M >= 2H + 1` the normal equations are
    /// diagonal, so the fit is the discrete Fourier projection.
    pub fn fit_uniform(period: f64, samples: &[f64], harmonics: usize) -> Result<Self> {
        let m_len = samples.len();
        if m_len < 2 * harmonics + 1 {
            return Err(Error::TooFewPhases {
                phases: m_len,
                harmonics,
            });
        }
        let n = m_len as f64;
        let a0 = samples.iter().sum::<f64>() / n;
        let mut a = Vec::with_capacity(harmonics);
        let mut b = Vec::with_capacity(harmonics);
        for m in 1..=harmonics {
            let (mut ca, mut cb) = (0.0, 0.0);
            for (k, s) in samples.iter().enumerate() {
                // reduce the index first so the angle stays small
                let phase = TAU * ((m * k) % m_len) as f64 / n;
                ca += s * phase.cos();
                cb += s * phase.sin();
            }
            a.push(2.0 * ca / n);
            b.push(2.0 * cb / n);
        }
        Ok(Self { period, a0, a, b })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.jet(t).value
    }

    pub fn d1(&self, t: f64) -> f64 {
        self.jet(t).d1
    }

    pub fn d2(&self, t: f64) -> f64 {
        self.jet(t).d2
    }

    /// Value, first and second derivative, sharing one set of trig evaluations.
    pub fn jet(&self, t: f64) -> Jet {
        let w = TAU / self.period;
        let theta = w * t.rem_euclid(self.period);
        let (s1, c1) = theta.sin_cos();
        let (mut sm, mut cm) = (0.0_f64, 1.0_f64);
        let mut jet = Jet {
            value: self.a0,
            d1: 0.0,
            d2: 0.0,
        };
        for (i, (am, bm)) in self.a.iter().zip(&self.b).enumerate() {
            let next_c = cm * c1 - sm * s1;
            let next_s = sm * c1 + cm * s1;
            cm = next_c;
            sm = next_s;
            let mw = (i + 1) as f64 * w;
            jet.value += am * cm + bm * sm;
            jet.d1 += mw * (bm * cm - am * sm);
            jet.d2 -= mw * mw * (am * cm + bm * sm);
        }
        jet
    }

    /// `(1 - w) * self + w * other`, coefficient-wise.
    pub fn lerp(&self, other: &Self, w: f64) -> Self {
        let mix = |x: f64, y: f64| (1.0 - w) * x + w * y;
        Self {
            period: self.period,
            a0: mix(self.a0, other.a0),
            a: self
                .a
                .iter()
                .zip(&other.a)
                .map(|(x, y)| mix(*x, *y))
                .collect(),
            b: self
                .b
                .iter()
                .zip(&other.b)
                .map(|(x, y)| mix(*x, *y))
                .collect(),
        }
    }

    /// Minimum of the series on a uniform grid of `n` points per period.
    pub fn grid_min(&self, n: usize) -> (f64, f64) {
        (0..n)
            .map(|k| {
                let t = self.period * k as f64 / n as f64;
                (t, self.eval(t))
            })
            .fold(
                (0.0, f64::INFINITY),
                |acc, p| if p.1 < acc.1 { p } else { acc },
            )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_samples_fit_to_mean_only() {
        let s = TrigSeries::fit_uniform(1.0, &[5.0; 9], 3).unwrap();
        assert_abs_diff_eq!(s.a0, 5.0, epsilon = 1e-14);
        for m in 0..3 {
            assert_abs_diff_eq!(s.a[m], 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(s.b[m], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn pure_tone_is_recovered() {
        let period = 0.8;
        let samples: Vec<f64> = (0..20)
            .map(|k| 6.0 + (TAU * k as f64 / 20.0).cos())
            .collect();
        let s = TrigSeries::fit_uniform(period, &samples, 3).unwrap();
        assert_abs_diff_eq!(s.a0, 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.a[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.b[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.a[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn too_few_phases() {
        assert_eq!(
            TrigSeries::fit_uniform(1.0, &[1.0; 6], 3),
            Err(Error::TooFewPhases {
                phases: 6,
                harmonics: 3
            })
        );
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let s = TrigSeries {
            period: 1.3,
            a0: 2.0,
            a: vec![0.3, -0.1, 0.05],
            b: vec![0.2, 0.07, -0.02],
        };
        let h = 1e-5;
        for &t in &[0.0, 0.17, 0.9, 1.25] {
            let j = s.jet(t);
            let fd1 = (s.eval(t + h) - s.eval(t - h)) / (2.0 * h);
            let fd2 = (s.d1(t + h) - s.d1(t - h)) / (2.0 * h);
            assert_abs_diff_eq!(j.d1, fd1, epsilon = 1e-8);
            assert_abs_diff_eq!(j.d2, fd2, epsilon = 1e-7);
        }
    }
}
