//! Dormand–Prince 5(4) integrator with dense output.
//!
//! Systems are small fixed-size vectors. The solver lands exactly on every
//! requested stop time and can abandon the run when an escape predicate fires
//! (finite-time blow-up of a Riccati solution).

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size control parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step; `f64::INFINITY` for none.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            max_steps: 200_000,
        }
    }
}

/// Continuous extension of one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut y = [0.0; N];
        for i in 0..N {
            let r = &self.r;
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination<const N: usize> {
    Completed,
    /// The escape predicate fired; `t` is located to the dense-output precision.
    Escaped {
        t: f64,
        state: [f64; N],
    },
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    /// States at the requested stops (only those reached before an escape).
    pub stops: Vec<[f64; N]>,
    pub end_state: [f64; N],
    pub end_time: f64,
    pub termination: Termination<N>,
    pub steps: usize,
    pub rejected: usize,
    /// Every accepted step, when dense output was requested.
    pub dense: Vec<DenseStep<N>>,
}

impl<const N: usize> Solution<N> {
    pub fn escaped(&self) -> bool {
        matches!(self.termination, Termination::Escaped { .. })
    }

    /// Dense-output evaluation; `None` outside the recorded range.
    pub fn sample(&self, t: f64) -> Option<[f64; N]> {
        let idx = self.dense.partition_point(|s| s.t0 + s.h < t);
        self.dense
            .get(idx)
            .filter(|s| t >= s.t0 - 1e-14 * s.h.abs().max(1.0))
            .map(|s| s.eval(t))
    }
}

/// Dormand–Prince 5(4) driver.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub tol: Tolerances,
    pub record_dense: bool,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(&[f64; N], f64)]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (k, c) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

impl Dopri5 {
    pub fn new(tol: Tolerances) -> Self {
        Self {
            tol,
            record_dense: false,
        }
    }

    pub fn with_dense(mut self) -> Self {
        self.record_dense = true;
        self
    }

    fn error_norm<const N: usize>(&self, y0: &[f64; N], y1: &[f64; N], err: &[f64; N]) -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let sc = self.tol.abs_tol + self.tol.rel_tol * y0[i].abs().max(y1[i].abs());
            acc += (err[i] / sc).powi(2);
        }
        (acc / N as f64).sqrt()
    }

    fn initial_step<const N: usize, F>(
        &self,
        f: &F,
        t0: f64,
        y0: &[f64; N],
        f0: &[f64; N],
        span: f64,
    ) -> f64
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let sc = |i: usize, y: &[f64; N]| self.tol.abs_tol + self.tol.rel_tol * y[i].abs();
        let d0 = (0..N)
            .map(|i| (y0[i] / sc(i, y0)).powi(2))
            .sum::<f64>()
            .sqrt()
            / (N as f64).sqrt();
        let d1 = (0..N)
            .map(|i| (f0[i] / sc(i, y0)).powi(2))
            .sum::<f64>()
            .sqrt()
            / (N as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(span).min(self.tol.max_step);
        let y1 = axpy(y0, h0, &[(f0, 1.0)]);
        let f1 = f(t0 + h0, &y1);
        let d2 = (0..N)
            .map(|i| ((f1[i] - f0[i]) / sc(i, y0)).powi(2))
            .sum::<f64>()
            .sqrt()
            / (N as f64).sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span).min(self.tol.max_step)
    }

    /// Integrate `y' = f(t, y)` from `t0` to the last entry of `stops`
    /// (or `t_end` when `stops` is empty), stopping early if `escape` fires.
    pub fn solve<const N: usize, F, E>(
        &self,
        f: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        stops: &[f64],
        escape: E,
    ) -> Result<Solution<N>>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
        E: Fn(&[f64; N]) -> bool,
    {
        let span = t_end - t0;
        if !(span >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "backward span {t0} -> {t_end}"
            )));
        }
        let mut sol = Solution {
            stops: Vec::with_capacity(stops.len()),
            end_state: y0,
            end_time: t0,
            termination: Termination::Completed,
            steps: 0,
            rejected: 0,
            dense: Vec::new(),
        };
        let mut next_stop = 0;
        while next_stop < stops.len() && stops[next_stop] <= t0 {
            sol.stops.push(y0);
            next_stop += 1;
        }
        if span == 0.0 {
            return Ok(sol);
        }

        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let mut h = self.initial_step(&f, t0, &y0, &k1, span);
        let mut last_reject = false;
        let mut fac_old = 1e-4_f64;
        let min_step = |t: f64| 16.0 * f64::EPSILON * t.abs().max(span);

        loop {
            if sol.steps + sol.rejected >= self.tol.max_steps {
                return Err(Error::TooManySteps(self.tol.max_steps));
            }
            let target = if next_stop < stops.len() {
                stops[next_stop].min(t_end)
            } else {
                t_end
            };
            let mut hit = false;
            if t + h >= target - min_step(t) {
                h = target - t;
                hit = true;
            }
            if h < min_step(t) && !hit {
                return Err(Error::StepSizeUnderflow { t });
            }

            let y2 = axpy(&y, h, &[(&k1, A21)]);
            let k2 = f(t + C2 * h, &y2);
            let y3 = axpy(&y, h, &[(&k1, A31), (&k2, A32)]);
            let k3 = f(t + C3 * h, &y3);
            let y4 = axpy(&y, h, &[(&k1, A41), (&k2, A42), (&k3, A43)]);
            let k4 = f(t + C4 * h, &y4);
            let y5 = axpy(&y, h, &[(&k1, A51), (&k2, A52), (&k3, A53), (&k4, A54)]);
            let k5 = f(t + C5 * h, &y5);
            let y6 = axpy(
                &y,
                h,
                &[(&k1, A61), (&k2, A62), (&k3, A63), (&k4, A64), (&k5, A65)],
            );
            let t_new = if hit { target } else { t + h };
            let k6 = f(t_new, &y6);
            let y_new = axpy(
                &y,
                h,
                &[(&k1, A71), (&k3, A73), (&k4, A74), (&k5, A75), (&k6, A76)],
            );
            let k7 = f(t_new, &y_new);
            let mut err = [0.0; N];
            for i in 0..N {
                err[i] = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let finite = y_new.iter().all(|v| v.is_finite());
            let en = if finite {
                self.error_norm(&y, &y_new, &err)
            } else {
                f64::INFINITY
            };

            if en <= 1.0 {
                sol.steps += 1;
                let mut r = [[0.0; N]; 5];
                for i in 0..N {
                    let dy = y_new[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    r[0][i] = y[i];
                    r[1][i] = dy;
                    r[2][i] = bspl;
                    r[3][i] = dy - h * k7[i] - bspl;
                    r[4][i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                let step = DenseStep { t0: t, h, r };
                if escape(&y_new) {
                    let t_esc = locate_escape(&step, &escape);
                    let state = step.eval(t_esc);
                    if self.record_dense {
                        sol.dense.push(step);
                    }
                    sol.end_state = state;
                    sol.end_time = t_esc;
                    sol.termination = Termination::Escaped { t: t_esc, state };
                    return Ok(sol);
                }
                if self.record_dense {
                    sol.dense.push(step);
                }
                t = t_new;
                y = y_new;
                k1 = k7;
                if hit {
                    if next_stop < stops.len() && target == stops[next_stop].min(t_end) {
                        // several stops can coincide
                        while next_stop < stops.len() && stops[next_stop] <= t {
                            sol.stops.push(y);
                            next_stop += 1;
                        }
                    }
                    if t >= t_end {
                        break;
                    }
                }
                // PI step-size controller (Hairer's beta = 0.04)
                let fac = (en.max(1e-10)).powf(0.2 - 0.04 * 0.75) / fac_old.powf(0.04);
                fac_old = en.max(1e-4);
                let mut h_new = h / (fac / 0.9).clamp(0.1, 5.0);
                if last_reject {
                    h_new = h_new.min(h);
                }
                last_reject = false;
                h = h_new.min(self.tol.max_step);
            } else {
                sol.rejected += 1;
                last_reject = true;
                let shrink = if en.is_finite() {
                    (0.9 * en.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.1
                };
                h *= shrink;
            }
        }
        sol.end_state = y;
        sol.end_time = t;
        Ok(sol)
    }
}

/// Bisect the dense output of the step for the first time the predicate holds.
fn locate_escape<const N: usize, E>(step: &DenseStep<N>, escape: &E) -> f64
where
    E: Fn(&[f64; N]) -> bool,
{
    let (mut lo, mut hi) = (step.t0, step.t0 + step.h);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if escape(&step.eval(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn tanh_with_stops() {
        let stops: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
        let sol = Dopri5::new(Tolerances::default())
            .solve(
                |_, y: &[f64; 1]| [1.0 - y[0] * y[0]],
                0.0,
                [0.0],
                2.0,
                &stops,
                |_| false,
            )
            .unwrap();
        assert_eq!(sol.stops.len(), stops.len());
        for (t, y) in stops.iter().zip(&sol.stops) {
            assert_abs_diff_eq!(y[0], t.tanh(), epsilon = 1e-8);
        }
    }

    #[test]
    fn dense_output_tracks_solution() {
        let sol = Dopri5::new(Tolerances::default())
            .with_dense()
            .solve(
                |_, y: &[f64; 2]| [y[1], -y[0]],
                0.0,
                [0.0, 1.0],
                6.0,
                &[],
                |_| false,
            )
            .unwrap();
        for k in 0..60 {
            let t = 0.1 * k as f64 + 0.037;
            let y = sol.sample(t).unwrap();
            assert_abs_diff_eq!(y[0], t.sin(), epsilon = 1e-7);
        }
    }

    #[test]
    fn tangent_escapes_near_half_pi() {
        let cap = 1e6;
        let sol = Dopri5::new(Tolerances::default())
            .solve(
                |_, y: &[f64; 1]| [1.0 + y[0] * y[0]],
                0.0,
                [0.0],
                3.0,
                &[],
                |y| y[0].abs() > cap,
            )
            .unwrap();
        match sol.termination {
            Termination::Escaped { t, .. } => assert_abs_diff_eq!(t, FRAC_PI_2, epsilon = 1e-5),
            other => panic!("expected escape, got {other:?}"),
        }
    }

    #[test]
    fn zero_field_keeps_constant() {
        let sol = Dopri5::new(Tolerances::default())
            .solve(
                |_, _: &[f64; 1]| [0.0],
                0.0,
                [3.25],
                1.0,
                &[0.5, 1.0],
                |_| false,
            )
            .unwrap();
        assert_eq!(sol.stops, vec![[3.25], [3.25]]);
    }
}
