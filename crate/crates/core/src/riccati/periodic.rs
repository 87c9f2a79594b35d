use serde::{Deserialize, Serialize};

use super::coefficients::RiccatiCoefficients;
use crate::error::{Error, Result};
use crate::ode::{Dopri5, Termination, Tolerances};
use crate::scalar::minimize_bounded;

/// Samples per period of every emitted periodic solution (plus the closing point).
pub const OUTPUT_GRID: usize = 256;
/// Points per period for sign checks on the coefficients.
pub const DENSE_GRID: usize = 512;

const SCAN_POINTS: usize = 64;
/// Scale of `A` over a period below which the equation is treated as linear.
const LINEAR_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step in seconds; `None` means a thirty-second of the period.
    pub max_step: Option<f64>,
    /// |Q| beyond this (cm³/s) counts as finite-time blow-up.
    pub blowup_cap: f64,
    /// Output intervals per period for periodic solutions (at least 256).
    pub grid: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: None,
            blowup_cap: 1e6,
            grid: OUTPUT_GRID,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.blowup_cap > 0.0
            && self.max_step.is_none_or(|h| h > 0.0)
            && self.grid >= OUTPUT_GRID;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "integrator tolerances, step and cap must be positive and the grid at least {OUTPUT_GRID}"
            )))
        }
    }

    pub fn tolerances(&self, period: f64) -> Tolerances {
        Tolerances {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step.unwrap_or(period / 32.0),
            ..Tolerances::default()
        }
    }

    pub(crate) fn solver(&self, period: f64) -> Dopri5 {
        Dopri5::new(self.tolerances(period))
    }

    /// Allowed `|Q(T) - Q(0)|` for a solution whose magnitude peaks at `max_abs`.
    pub fn periodicity_tolerance(&self, max_abs: f64) -> f64 {
        (10.0 * self.abs_tol).max(10.0 * self.rel_tol * max_abs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    Shooting,
}

/// A T-periodic solution sampled at `t_k = k T / n`, `k = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSolution {
    pub period: f64,
    pub q: Vec<f64>,
    pub method: Method,
    pub k_root: Option<f64>,
    pub discriminant: Option<f64>,
    /// Positive mean flow.
    pub admissible: bool,
    /// `(1/T) int Q dt`.
    pub mean: f64,
    /// `int_0^T (2 A Q + B) dt`; the stability multiplier is its exponential.
    pub log_multiplier: f64,
    pub multiplier: f64,
}

impl PeriodicSolution {
    fn new(
        coeffs: &RiccatiCoefficients,
        q: Vec<f64>,
        method: Method,
        k_root: Option<f64>,
        discriminant: Option<f64>,
    ) -> Self {
        let period = coeffs.period;
        let mean = mean_value(&q).unwrap_or(0.0);
        let log_multiplier = log_multiplier(coeffs, &q);
        Self {
            period,
            method,
            k_root,
            discriminant,
            admissible: mean > 0.0,
            mean,
            log_multiplier,
            multiplier: log_multiplier.exp(),
            q,
        }
    }

    pub fn intervals(&self) -> usize {
        self.q.len() - 1
    }

    pub fn times(&self) -> Vec<f64> {
        grid(self.period, self.intervals())
    }

    pub fn max_abs(&self) -> f64 {
        self.q.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn periodicity_gap(&self) -> f64 {
        (self.q[self.q.len() - 1] - self.q[0]).abs()
    }

    /// `mu < 1`.
    pub fn is_stable(&self) -> bool {
        self.log_multiplier < 0.0
    }

    /// Largest pointwise difference relative to the larger sup-norm.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        let scale = self.max_abs().max(other.max_abs()).max(f64::MIN_POSITIVE);
        self.q
            .iter()
            .zip(&other.q)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
            / scale
    }
}

pub(crate) fn grid(period: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| period * k as f64 / n as f64).collect()
}

/// Trapezoid sum `sum w_k f_k` with unit spacing over a closed grid.
fn trapezoid(f: &[f64]) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    f[1..n - 1].iter().sum::<f64>() + 0.5 * (f[0] + f[n - 1])
}

/// Time mean over a closed uniform grid `k = 0..=n`.
pub(crate) fn mean_value(f: &[f64]) -> Option<f64> {
    (f.len() >= 2).then(|| trapezoid(f) / (f.len() - 1) as f64)
}

/// `int_0^T (2 A Q + B) dt` by the trapezoid rule on the solution grid.
/// The integrand is smooth and periodic, so the rule converges spectrally.
pub fn log_multiplier(coeffs: &RiccatiCoefficients, q: &[f64]) -> f64 {
    let n = q.len() - 1;
    let times = grid(coeffs.period, n);
    let slope: Vec<f64> = times
        .iter()
        .zip(q)
        .map(|(t, v)| coeffs.sample(*t).slope(*v))
        .collect();
    trapezoid(&slope) * coeffs.period / n as f64
}

/// Uniformly sampled trajectory, possibly cut short by blow-up.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Time at which |Q| crossed the blow-up cap.
    pub escape_time: Option<f64>,
}

/// Integrate the Riccati equation from `q_init` over `[t0, t1]`, sampling
/// `samples + 1` uniform points.
pub fn integrate_riccati(
    coeffs: &RiccatiCoefficients,
    alpha: f64,
    q_init: f64,
    t0: f64,
    t1: f64,
    samples: usize,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    if !q_init.is_finite() {
        return Err(Error::InvalidInput("initial flow must be finite".into()));
    }
    let times: Vec<f64> = (0..=samples)
        .map(|k| t0 + (t1 - t0) * k as f64 / samples.max(1) as f64)
        .collect();
    let cap = settings.blowup_cap;
    let sol = settings.solver(coeffs.period).solve(
        |t, y: &[f64; 1]| [coeffs.sample(t).rhs(y[0], alpha)],
        t0,
        [q_init],
        t1,
        &times,
        |y| y[0].abs() > cap,
    )?;
    let values: Vec<f64> = sol.stops.iter().map(|y| y[0]).collect();
    let escape_time = match sol.termination {
        Termination::Escaped { t, .. } => Some(t),
        Termination::Completed => None,
    };
    Ok(Trajectory {
        times: times[..values.len()].to_vec(),
        values,
        escape_time,
    })
}

/// End state of a one-period run, or the direction of escape.
#[derive(Debug, Clone, Copy, PartialEq)]
enum PeriodMap {
    Finite(f64),
    Escaped(f64),
}

impl PeriodMap {
    /// Sign of `F(q) = Q(T) - q`; escapes count as +-infinity.
    fn residual_sign(&self, q: f64) -> f64 {
        match *self {
            PeriodMap::Finite(v) => {
                let r = v - q;
                if r == 0.0 {
                    0.0
                } else {
                    r.signum()
                }
            }
            PeriodMap::Escaped(s) => s,
        }
    }
}

fn period_map(
    coeffs: &RiccatiCoefficients,
    alpha: f64,
    q: f64,
    settings: &IntegratorSettings,
) -> Result<PeriodMap> {
    let cap = settings.blowup_cap;
    let sol = settings.solver(coeffs.period).solve(
        |t, y: &[f64; 1]| [coeffs.sample(t).rhs(y[0], alpha)],
        0.0,
        [q],
        coeffs.period,
        &[],
        |y| y[0].abs() > cap,
    )?;
    Ok(match sol.termination {
        Termination::Completed => PeriodMap::Finite(sol.end_state[0]),
        Termination::Escaped { state, .. } => PeriodMap::Escaped(state[0].signum()),
    })
}

/// One period from `q0`. Repelling orbits are integrated backwards from
/// `Q(T) = q0`, where they attract and errors shrink.
fn orbit(
    coeffs: &RiccatiCoefficients,
    alpha: f64,
    q0: f64,
    repelling: bool,
    settings: &IntegratorSettings,
) -> Result<Option<Vec<f64>>> {
    if !repelling {
        let tr = integrate_riccati(
            coeffs,
            alpha,
            q0,
            0.0,
            coeffs.period,
            settings.grid,
            settings,
        )?;
        return Ok(tr.escape_time.is_none().then_some(tr.values));
    }
    let period = coeffs.period;
    let times = grid(period, settings.grid);
    let cap = settings.blowup_cap;
    let sol = settings.solver(period).solve(
        |s, y: &[f64; 1]| [-coeffs.sample(period - s).rhs(y[0], alpha)],
        0.0,
        [q0],
        period,
        &times,
        |y| y[0].abs() > cap,
    )?;
    if sol.escaped() {
        return Ok(None);
    }
    Ok(Some(sol.stops.iter().rev().map(|y| y[0]).collect()))
}

/// Result of the quadrature construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOutcome {
    pub solutions: Vec<PeriodicSolution>,
    /// Discriminant of the periodicity quadratic normalised by `W_h(T)`.
    pub discriminant: f64,
    /// `[a, b, c]` of `a K² + b K + c = 0`, normalised by `W_h(T)`.
    pub quadratic: [f64; 3],
    /// Real roots K, in the order found, including rejected ones.
    pub roots: Vec<f64>,
    pub q0_end: f64,
    pub wh_end: f64,
    pub wih_end: f64,
    pub log: Vec<String>,
}

/// Periodic solutions via `Q = Q0 - 1/W` with `Q0(0) = 0` and
/// `W = K W_h + W_ih`. Periodicity `Q(0) = Q(T)` gives
/// `Q0(T) W_h(T) K² + (Q0(T) W_ih(T) + W_h(T) - 1) K + W_ih(T) = 0`.
pub fn quadrature_periodic(
    coeffs: &RiccatiCoefficients,
    alpha: f64,
    settings: &IntegratorSettings,
) -> Result<QuadratureOutcome> {
    settings.validate()?;
    let period = coeffs.period;
    let times = grid(period, settings.grid);
    let cap = settings.blowup_cap;
    let sol = settings.solver(period).solve(
        |t, y: &[f64; 3]| {
            let c = coeffs.sample(t);
            let damp = -c.slope(y[0]);
            [c.rhs(y[0], alpha), damp * y[1], damp * y[2] + c.a]
        },
        0.0,
        [0.0, 1.0, 0.0],
        period,
        &times,
        |y| y[0].abs() > cap,
    )?;
    if let Termination::Escaped { t, .. } = sol.termination {
        return Err(Error::ParticularSolutionBlowup { t });
    }
    let [q0_end, wh_end, wih_end] = sol.end_state;
    let a = q0_end;
    let b = (q0_end * wih_end + wh_end - 1.0) / wh_end;
    let c = wih_end / wh_end;
    let discriminant = b * b - 4.0 * a * c;

    // With K = -1/q the quadratic becomes p(q) = c q² - b q + a, which tracks
    // the period-map residual. It is identically zero when p stays below the
    // integration noise over every q a periodic solution can reach.
    let q_scale = sol.stops.iter().fold(0.0_f64, |m, y| m.max(y[0].abs()));
    let reach = default_scan_range(coeffs, alpha)
        .map_or(0.0, |(lo, hi)| lo.abs().max(hi.abs()))
        .max(q_scale)
        .max(1.0);
    let noise = 100.0 * (settings.abs_tol + settings.rel_tol * reach);
    let (ta, tb, tc) = (a.abs(), b.abs() * reach, c.abs() * reach * reach);
    if ta.max(tb).max(tc) <= noise {
        return Err(Error::DegenerateQuadratic);
    }
    // A ≈ 0 leaves a linear equation whose multiplier is 1 for area fields
    // without axial variation: either no periodic solution or a continuum.
    let a_max = times
        .iter()
        .fold(0.0_f64, |m, t| m.max(coeffs.sample(*t).a.abs()));
    if a_max * q_scale.max(1.0) * period <= LINEAR_LIMIT && wh_end.ln().abs() <= LINEAR_LIMIT {
        return Err(Error::DegenerateQuadratic);
    }
    // Initial values q0 of periodic solutions solve p(q0) = 0; K = -1/q0.
    let mut starts = Vec::new();
    if tc <= noise {
        if tb > noise {
            starts.push(a / b);
        }
    } else if discriminant >= 0.0 {
        let qq = 0.5 * (b + b.signum() * discriminant.sqrt());
        if qq != 0.0 {
            starts.push(qq / c);
            let other = a / qq;
            if (other - qq / c).abs() > 1e-14 * other.abs().max((qq / c).abs()) {
                starts.push(other);
            }
        } else {
            starts.push(0.0);
        }
    }
    starts.sort_by(|x, y| x.total_cmp(y));

    let mut log = Vec::new();
    let mut roots = Vec::new();
    let mut solutions = Vec::new();
    for &q_start in &starts {
        let (q, k) = if q_start == 0.0 {
            // K = infinity: the particular solution itself
            (sol.stops.iter().map(|y| y[0]).collect::<Vec<_>>(), None)
        } else {
            let k = -1.0 / q_start;
            roots.push(k);
            let w: Vec<f64> = sol.stops.iter().map(|y| k * y[1] + y[2]).collect();
            if w.iter().any(|wk| *wk == 0.0 || wk.signum() != k.signum()) {
                log.push(format!(
                    "rejected K = {k:.6e}: W changes sign, Q has a pole"
                ));
                continue;
            }
            (
                sol.stops
                    .iter()
                    .zip(&w)
                    .map(|(y, wk)| y[0] - 1.0 / wk)
                    .collect(),
                Some(k),
            )
        };
        let s = PeriodicSolution::new(coeffs, q, Method::Quadrature, k, Some(discriminant));
        if s.periodicity_gap() > settings.periodicity_tolerance(s.max_abs()) {
            log.push(format!(
                "rejected Q(0) = {q_start:.6e}: periodicity gap {:.3e}",
                s.periodicity_gap()
            ));
            continue;
        }
        solutions.push(s);
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    Ok(QuadratureOutcome {
        solutions,
        discriminant,
        quadratic: [a, b, c],
        roots,
        q0_end,
        wh_end,
        wih_end,
        log,
    })
}

/// Result of the shooting construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingOutcome {
    pub solutions: Vec<PeriodicSolution>,
    /// Every scan point is a fixed point of the period map.
    pub non_unique: bool,
    /// Scan points with `Q(T) - q`, `None` where the trajectory escaped.
    pub scan: Vec<(f64, Option<f64>)>,
    pub log: Vec<String>,
}

/// Fixed points of the period map `F(q) = Q(T; q) - q`, bracketed on a scan
/// grid and refined by bisection.
pub fn shooting_periodic(
    coeffs: &RiccatiCoefficients,
    alpha: f64,
    settings: &IntegratorSettings,
    scan_range: (f64, f64),
    scan_points: usize,
) -> Result<ShootingOutcome> {
    settings.validate()?;
    let (lo, hi) = scan_range;
    if !(hi > lo) || scan_points < 2 {
        return Err(Error::InvalidInput(
            "scan range must be non-empty with at least two points".into(),
        ));
    }
    let n = scan_points.max(SCAN_POINTS);
    let qs: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let maps = qs
        .iter()
        .map(|q| period_map(coeffs, alpha, *q, settings))
        .collect::<Result<Vec<_>>>()?;
    let scan: Vec<(f64, Option<f64>)> = qs
        .iter()
        .zip(&maps)
        .map(|(q, m)| match m {
            PeriodMap::Finite(v) => (*q, Some(v - q)),
            PeriodMap::Escaped(_) => (*q, None),
        })
        .collect();

    let noise = |q: f64| 100.0 * (settings.abs_tol + settings.rel_tol * q.abs());
    let non_unique = scan
        .iter()
        .all(|(q, r)| r.is_some_and(|r| r.abs() <= noise(*q)));
    let mut log = Vec::new();
    if non_unique {
        log.push("period map is the identity on the whole scan range".into());
        return Ok(ShootingOutcome {
            solutions: Vec::new(),
            non_unique,
            scan,
            log,
        });
    }

    // (fixed point, F increasing through it: repelling)
    let exact = |r: Option<f64>| r.is_some_and(|r| r.abs() <= 10.0 * settings.abs_tol);
    let sign_at = |i: usize| maps[i].residual_sign(qs[i]);
    let mut fixed: Vec<(f64, bool)> = Vec::new();
    for i in 0..n {
        if exact(scan[i].1) {
            let before = if i > 0 { sign_at(i - 1) } else { 0.0 };
            let after = if i + 1 < n { sign_at(i + 1) } else { 0.0 };
            fixed.push((qs[i], after > 0.0 || before < 0.0));
            continue;
        }
        if i + 1 == n || exact(scan[i + 1].1) {
            continue;
        }
        let (sa, sb) = (sign_at(i), sign_at(i + 1));
        if sa * sb < 0.0 {
            fixed.push((
                bisect_fixed_point(coeffs, alpha, settings, qs[i], qs[i + 1], sa)?,
                sa < 0.0,
            ));
        }
    }
    // A pair of fixed points inside one scan cell leaves no sign change; look
    // for it where |F| has a local minimum without crossing zero.
    for i in 1..n.saturating_sub(1) {
        let (Some(fl), Some(fm), Some(fr)) = (scan[i - 1].1, scan[i].1, scan[i + 1].1) else {
            continue;
        };
        let s = fm.signum();
        if fl.signum() != s
            || fr.signum() != s
            || exact(Some(fm))
            || !(fm.abs() < fl.abs() && fm.abs() < fr.abs())
        {
            continue;
        }
        let mut failure = None;
        let dip = minimize_bounded(
            |q| match period_map(coeffs, alpha, q, settings) {
                Ok(PeriodMap::Finite(v)) => Some(s * (v - q)),
                Ok(PeriodMap::Escaped(_)) => None,
                Err(e) => {
                    failure = Some(e);
                    None
                }
            },
            qs[i - 1],
            qs[i + 1],
            1e-10,
            settings.abs_tol,
            100,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        if dip.value < 0.0 {
            log.push(format!(
                "two fixed points inside the scan cell around {:.6e}",
                qs[i]
            ));
            fixed.push((
                bisect_fixed_point(coeffs, alpha, settings, qs[i - 1], dip.x, s)?,
                s < 0.0,
            ));
            fixed.push((
                bisect_fixed_point(coeffs, alpha, settings, dip.x, qs[i + 1], -s)?,
                s > 0.0,
            ));
        }
    }
    fixed.sort_by(|a, b| a.0.total_cmp(&b.0));
    fixed.dedup_by(|a, b| (a.0 - b.0).abs() <= 1e-9 * a.0.abs().max(b.0.abs()).max(1.0));
    if fixed.is_empty() {
        log.push("no sign change of the period map on the scan range".into());
    }

    let mut solutions = Vec::new();
    for (q0, repelling) in fixed {
        let Some(q) = orbit(coeffs, alpha, q0, repelling, settings)? else {
            log.push(format!("fixed point {q0:.6e} escapes on re-integration"));
            continue;
        };
        let s = PeriodicSolution::new(coeffs, q, Method::Shooting, None, None);
        if s.periodicity_gap() > settings.periodicity_tolerance(s.max_abs()) {
            log.push(format!(
                "fixed point {q0:.6e}: periodicity gap {:.3e}",
                s.periodicity_gap()
            ));
            continue;
        }
        solutions.push(s);
    }
    Ok(ShootingOutcome {
        solutions,
        non_unique,
        scan,
        log,
    })
}

fn bisect_fixed_point(
    coeffs: &RiccatiCoefficients,
    alpha: f64,
    settings: &IntegratorSettings,
    mut lo: f64,
    mut hi: f64,
    sign_lo: f64,
) -> Result<f64> {
    let target = 10.0 * settings.abs_tol;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = period_map(coeffs, alpha, mid, settings)?;
        if let PeriodMap::Finite(v) = m {
            if (v - mid).abs() <= target {
                return Ok(mid);
            }
        }
        let s = m.residual_sign(mid);
        if s == 0.0 {
            return Ok(mid);
        }
        if s == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Real roots of `A(t) Q² + B(t) Q + C(t; alpha) = 0`, ascending.
pub fn nullcline(coeffs: &RiccatiCoefficients, alpha: f64, t: f64) -> Vec<f64> {
    let s = coeffs.sample(t);
    quadratic_roots(s.a, s.b, s.c(alpha))
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = b.abs().max(c.abs());
    if a.abs() <= 1e-14 * scale || a == 0.0 {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + if b >= 0.0 { 1.0 } else { -1.0 } * disc.sqrt());
    let mut r = if q == 0.0 {
        vec![0.0, 0.0]
    } else {
        vec![q / a, c / q]
    };
    r.sort_by(|x, y| x.total_cmp(y));
    if disc == 0.0 {
        r.truncate(1);
    }
    r
}

/// Smallest and largest nullcline root over one period.
pub fn nullcline_envelope(
    coeffs: &RiccatiCoefficients,
    alpha: f64,
    n: usize,
) -> Option<(f64, f64)> {
    (0..n)
        .flat_map(|k| nullcline(coeffs, alpha, coeffs.period * k as f64 / n as f64))
        .fold(None, |acc, r| match acc {
            None => Some((r, r)),
            Some((lo, hi)) => Some((lo.min(r), hi.max(r))),
        })
}

/// Scan interval that contains the initial value of every periodic solution.
///
/// A periodic solution attains its extrema where `dQ/dt = 0`, so its range
/// lies inside the nullcline envelope; a margin keeps the ends off the roots.
pub fn default_scan_range(coeffs: &RiccatiCoefficients, alpha: f64) -> Option<(f64, f64)> {
    let (lo, hi) = nullcline_envelope(coeffs, alpha, DENSE_GRID)?;
    let margin = 0.1 * (hi - lo) + 1e-3 * lo.abs().max(hi.abs()).max(1.0);
    Some((lo - margin, hi + margin))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KotinReport {
    pub holds: bool,
    /// Time of the smallest `-A C`.
    pub witness_t: f64,
    pub witness_value: f64,
}

/// Sign condition `-A(t) C(t; alpha) > 0` on a dense grid.
pub fn kotin_check(coeffs: &RiccatiCoefficients, alpha: f64) -> KotinReport {
    let (witness_t, witness_value) = coeffs
        .tabulate(DENSE_GRID)
        .into_iter()
        .map(|(t, s)| (t, -s.a * s.c(alpha)))
        .fold(
            (0.0, f64::INFINITY),
            |acc, p| if p.1 < acc.1 { p } else { acc },
        );
    KotinReport {
        holds: witness_value > 0.0,
        witness_t,
        witness_value,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub solution: PeriodicSolution,
    /// More than one solution has positive mean; the larger mean was taken.
    pub ambiguous: bool,
}

/// The physically admissible (positive-mean) solution. Stability is reported
/// on the solution but plays no part in the choice.
pub fn select_admissible(solutions: &[PeriodicSolution]) -> Result<Selection> {
    let mut admissible: Vec<&PeriodicSolution> =
        solutions.iter().filter(|s| s.mean > 0.0).collect();
    admissible.sort_by(|a, b| b.mean.total_cmp(&a.mean));
    match admissible.first() {
        None => Err(Error::NoneAdmissible),
        Some(best) => Ok(Selection {
            solution: (*best).clone(),
            ambiguous: admissible.len() > 1,
        }),
    }
}

/// Periodic solutions of one block at one alpha, from whichever method applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSet {
    pub solutions: Vec<PeriodicSolution>,
    /// Present when the quadrature route ran to completion.
    pub discriminant: Option<f64>,
    pub method: Method,
    pub log: Vec<String>,
}

/// Quadrature first; shooting when the particular solution blows up or when
/// the quadrature finds nothing (to confirm emptiness).
pub fn periodic_solutions(
    coeffs: &RiccatiCoefficients,
    alpha: f64,
    settings: &IntegratorSettings,
) -> Result<PeriodicSet> {
    let shoot = |log: &mut Vec<String>| -> Result<Vec<PeriodicSolution>> {
        let Some(range) = default_scan_range(coeffs, alpha) else {
            log.push("nullclines are empty: no periodic solution".into());
            return Ok(Vec::new());
        };
        let out = shooting_periodic(coeffs, alpha, settings, range, SCAN_POINTS)?;
        if out.non_unique {
            return Err(Error::NonUnique);
        }
        log.extend(out.log);
        Ok(out.solutions)
    };
    match quadrature_periodic(coeffs, alpha, settings) {
        Ok(out) => {
            let mut log = out.log;
            if out.solutions.is_empty() {
                let found = shoot(&mut log)?;
                if !found.is_empty() {
                    log.push(format!(
                        "quadrature found none but shooting found {}",
                        found.len()
                    ));
                    return Ok(PeriodicSet {
                        solutions: found,
                        discriminant: Some(out.discriminant),
                        method: Method::Shooting,
                        log,
                    });
                }
            }
            Ok(PeriodicSet {
                solutions: out.solutions,
                discriminant: Some(out.discriminant),
                method: Method::Quadrature,
                log,
            })
        }
        Err(Error::ParticularSolutionBlowup { t }) => {
            let mut log = vec![format!(
                "particular solution escapes at t = {t:.4}; falling back to shooting"
            )];
            let solutions = shoot(&mut log)?;
            Ok(PeriodicSet {
                solutions,
                discriminant: None,
                method: Method::Shooting,
                log,
            })
        }
        Err(Error::DegenerateQuadratic) => Err(Error::NonUnique),
        Err(e) => Err(e),
    }
}
