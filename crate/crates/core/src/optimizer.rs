//! Block-based inverse problem for the elasticity parameter `alpha`.
//!
//! Two adjacent blocks of equal length each yield an admissible periodic inlet
//! flow for a trial `alpha`. The mismatch between the outflow of the upstream
//! block and the inflow of the downstream one,
//! `I(alpha) = int_0^T (Q2(t) - Q1(t) - Phi1(t, L))² dt`,
//! is minimised over the range of `alpha` whose mean flow lies inside the
//! physiological window.

use serde::{Deserialize, Serialize};

use crate::area::AreaField;
use crate::error::{Error, Result};
use crate::parallel;
use crate::riccati::{
    kotin_check, periodic_solutions, select_admissible, Block, IntegratorSettings, KotinReport,
    Method, PeriodicSolution, RiccatiCoefficients, Selection,
};
use crate::scalar::{bisect, minimize_bounded, Probe};

/// Two adjacent blocks `[x_b, x_b + L]` and `[x_b + L, x_b + 2L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPair {
    upstream: RiccatiCoefficients,
    downstream: RiccatiCoefficients,
}

impl BlockPair {
    pub fn new(field: &AreaField, x_start: f64, length: f64) -> Result<Self> {
        Ok(Self {
            upstream: Block::new(field, x_start, length)?.coefficients(),
            downstream: Block::new(field, x_start + length, length)?.coefficients(),
        })
    }

    /// The last two blocks of the field.
    pub fn trailing(field: &AreaField, length: f64) -> Result<Self> {
        Self::new(field, field.x_max() - 2.0 * length, length)
    }

    pub fn upstream(&self) -> &RiccatiCoefficients {
        &self.upstream
    }

    pub fn downstream(&self) -> &RiccatiCoefficients {
        &self.downstream
    }

    pub fn upstream_block(&self) -> &Block {
        self.upstream.block().expect("pair built from blocks")
    }

    pub fn period(&self) -> f64 {
        self.upstream.period
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InverseConfig {
    /// Physiological mean-flow window, cm³/s.
    pub qbar_min: f64,
    pub qbar_max: f64,
    /// Starting point of the bracket search, cm³/s².
    pub alpha_initial: f64,
    pub expansion_factor: f64,
    pub max_expansions: usize,
    /// Relative tolerance on alpha for root finding and minimisation.
    pub alpha_rel_tol: f64,
    /// Relative tolerance on the mean flow at the bounds.
    pub qbar_rel_tol: f64,
    /// Time grid per period for `I(alpha)` and the mean flow.
    pub grid: usize,
    pub max_probes: usize,
    pub integrator: IntegratorSettings,
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self {
            qbar_min: 66.7,
            qbar_max: 100.0,
            alpha_initial: 2.5e3,
            expansion_factor: 2.0,
            max_expansions: 40,
            alpha_rel_tol: 1e-6,
            qbar_rel_tol: 1e-6,
            grid: 512,
            max_probes: 200,
            integrator: IntegratorSettings::default(),
        }
    }
}

impl InverseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.qbar_min > 0.0 && self.qbar_min < self.qbar_max) {
            return Err(Error::InvalidInput(format!(
                "mean-flow window needs 0 < qbar_min < qbar_max, got [{}, {}]",
                self.qbar_min, self.qbar_max
            )));
        }
        if !(self.alpha_initial > 0.0 && self.expansion_factor > 1.0) {
            return Err(Error::InvalidInput(
                "alpha_initial must be positive and expansion_factor > 1".into(),
            ));
        }
        if !(self.alpha_rel_tol > 0.0 && self.qbar_rel_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        self.settings().validate()
    }

    /// Integrator settings with the output grid set to the consistency grid.
    pub fn settings(&self) -> IntegratorSettings {
        IntegratorSettings {
            grid: self.grid,
            ..self.integrator
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEvaluation {
    pub selection: Selection,
    pub discriminant: Option<f64>,
    pub method: Method,
    pub solution_count: usize,
    pub log: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEvaluation {
    pub alpha: f64,
    pub upstream: BlockEvaluation,
    pub downstream: BlockEvaluation,
    /// Flow leaving the upstream block, `Q1 + Phi1(., L)`.
    pub q_exit: Vec<f64>,
    /// Flow entering the downstream block, `Q2`.
    pub q_entry: Vec<f64>,
    pub consistency: f64,
    pub qbar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PairOutcome {
    Feasible(Box<PairEvaluation>),
    Infeasible { alpha: f64, reason: String },
}

/// Value of `I(alpha)`, or the marker for alpha outside its domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Consistency {
    Value(f64),
    Infeasible(String),
}

impl Consistency {
    pub fn value(&self) -> Option<f64> {
        match self {
            Consistency::Value(v) => Some(*v),
            Consistency::Infeasible(_) => None,
        }
    }
}

fn evaluate_block(
    coeffs: &RiccatiCoefficients,
    alpha: f64,
    settings: &IntegratorSettings,
) -> Result<std::result::Result<BlockEvaluation, String>> {
    let set = periodic_solutions(coeffs, alpha, settings)?;
    match select_admissible(&set.solutions) {
        Ok(selection) => Ok(Ok(BlockEvaluation {
            selection,
            discriminant: set.discriminant,
            method: set.method,
            solution_count: set.solutions.len(),
            log: set.log,
        })),
        Err(Error::NoneAdmissible) => {
            let why = match (set.solutions.is_empty(), set.discriminant) {
                (true, Some(d)) if d < 0.0 => {
                    format!("discriminant {d:.3e} < 0 and shooting found nothing")
                }
                (true, _) => "no periodic solution".to_string(),
                (false, _) => "no periodic solution with positive mean".to_string(),
            };
            Ok(Err(why))
        }
        Err(e) => Err(e),
    }
}

/// Trapezoid integral over one period of samples on a closed uniform grid.
fn integrate_period(period: f64, f: &[f64]) -> f64 {
    let n = f.len() - 1;
    let inner: f64 = f[1..n].iter().sum();
    (inner + 0.5 * (f[0] + f[n])) * period / n as f64
}

/// Both blocks at one alpha.
pub fn evaluate_pair(pair: &BlockPair, alpha: f64, config: &InverseConfig) -> Result<PairOutcome> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let settings = config.settings();
    let up = match evaluate_block(&pair.upstream, alpha, &settings)? {
        Ok(b) => b,
        Err(reason) => {
            return Ok(PairOutcome::Infeasible {
                alpha,
                reason: format!("upstream block: {reason}"),
            })
        }
    };
    let down = match evaluate_block(&pair.downstream, alpha, &settings)? {
        Ok(b) => b,
        Err(reason) => {
            return Ok(PairOutcome::Infeasible {
                alpha,
                reason: format!("downstream block: {reason}"),
            })
        }
    };
    let q1 = &up.selection.solution;
    let block = pair.upstream_block();
    let q_exit: Vec<f64> = q1
        .times()
        .iter()
        .zip(&q1.q)
        .map(|(t, q)| q + block.state(*t).flux.phi)
        .collect();
    let q_entry = down.selection.solution.q.clone();
    let period = pair.period();
    let sq: Vec<f64> = q_entry
        .iter()
        .zip(&q_exit)
        .map(|(a, b)| (a - b).powi(2))
        .collect();
    let sum: Vec<f64> = q_entry.iter().zip(&q_exit).map(|(a, b)| a + b).collect();
    let consistency = integrate_period(period, &sq);
    let qbar = integrate_period(period, &sum) / (2.0 * period);
    Ok(PairOutcome::Feasible(Box::new(PairEvaluation {
        alpha,
        upstream: up,
        downstream: down,
        q_exit,
        q_entry,
        consistency,
        qbar,
    })))
}

/// `I(alpha)`; infeasible when either block lacks an admissible periodic solution.
pub fn consistency(pair: &BlockPair, alpha: f64, config: &InverseConfig) -> Result<Consistency> {
    Ok(match evaluate_pair(pair, alpha, config)? {
        PairOutcome::Feasible(e) => Consistency::Value(e.consistency),
        PairOutcome::Infeasible { reason, .. } => Consistency::Infeasible(reason),
    })
}

/// Mean of the two interface flows, `(1/2T) int (q2(t, 0) + q1(t, L)) dt`.
pub fn qbar(pair: &BlockPair, alpha: f64, config: &InverseConfig) -> Result<f64> {
    match evaluate_pair(pair, alpha, config)? {
        PairOutcome::Feasible(e) => Ok(e.qbar),
        PairOutcome::Infeasible { alpha, reason } => Err(Error::Infeasible { alpha, reason }),
    }
}

fn qbar_or_none(pair: &BlockPair, alpha: f64, config: &InverseConfig) -> Result<Option<f64>> {
    match qbar(pair, alpha, config) {
        Ok(v) => Ok(Some(v)),
        Err(Error::Infeasible { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaBounds {
    /// Alpha at which the mean flow equals `qbar_min`.
    pub alpha_min: f64,
    /// Alpha at which the mean flow equals `qbar_max`.
    pub alpha_max: f64,
    pub qbar_at_min: f64,
    pub qbar_at_max: f64,
    /// Bracket samples `(alpha, qbar)`, ascending in alpha.
    pub samples: Vec<(f64, Option<f64>)>,
    pub warnings: Vec<String>,
}

impl AlphaBounds {
    pub fn interval(&self) -> (f64, f64) {
        (
            self.alpha_min.min(self.alpha_max),
            self.alpha_min.max(self.alpha_max),
        )
    }
}

/// Consecutive feasible samples whose mean flows straddle `target`.
fn brackets(samples: &[(f64, Option<f64>)], target: f64) -> Vec<(f64, f64, f64)> {
    samples
        .windows(2)
        .filter_map(|w| match (w[0].1, w[1].1) {
            (Some(a), Some(b)) if (a - target) * (b - target) <= 0.0 => {
                Some((w[0].0, w[1].0, a - target))
            }
            _ => None,
        })
        .collect()
}

/// Alphas whose mean flows hit the ends of the physiological window:
/// geometric bracket expansion from `alpha_initial`, then bisection in `ln alpha`.
pub fn solve_alpha_bounds(pair: &BlockPair, config: &InverseConfig) -> Result<AlphaBounds> {
    config.validate()?;
    let f = config.expansion_factor;
    let first: Vec<f64> = (-3..=3).map(|k| config.alpha_initial * f.powi(k)).collect();
    let mut samples = parallel::map(&first, |a| qbar_or_none(pair, *a, config).map(|q| (*a, q)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let (mut low_misses, mut high_misses) = (0, 0);
    for _ in 0..config.max_expansions {
        if !brackets(&samples, config.qbar_min).is_empty()
            && !brackets(&samples, config.qbar_max).is_empty()
        {
            break;
        }
        if low_misses >= 3 && high_misses >= 3 {
            break;
        }
        let mut ends = Vec::new();
        if low_misses < 3 {
            ends.push(samples[0].0 / f);
        }
        if high_misses < 3 {
            ends.push(samples[samples.len() - 1].0 * f);
        }
        let fresh = parallel::map(&ends, |a| qbar_or_none(pair, *a, config).map(|q| (*a, q)))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        for (a, q) in fresh {
            if a < samples[0].0 {
                low_misses = if q.is_none() { low_misses + 1 } else { 0 };
                samples.insert(0, (a, q));
            } else {
                high_misses = if q.is_none() { high_misses + 1 } else { 0 };
                samples.push((a, q));
            }
        }
    }

    let mut warnings = Vec::new();
    let feasible: Vec<(f64, f64)> = samples
        .iter()
        .filter_map(|(a, q)| q.map(|q| (*a, q)))
        .collect();
    let increasing = feasible.windows(2).all(|w| w[1].1 >= w[0].1);
    let decreasing = feasible.windows(2).all(|w| w[1].1 <= w[0].1);
    let trend_up = feasible.last().map(|l| l.1) >= feasible.first().map(|f| f.1);
    let b_min = brackets(&samples, config.qbar_min);
    let b_max = brackets(&samples, config.qbar_max);
    if !(increasing || decreasing) || b_min.len() > 1 || b_max.len() > 1 {
        warnings.push("NonMonotone: mean flow is not monotone in alpha on the bracket grid; outermost brackets used".into());
    }
    let pick = |b: &[(f64, f64, f64)], lowest: bool| {
        if lowest {
            b.first().copied()
        } else {
            b.last().copied()
        }
    };
    let describe = |target: f64| {
        let range = feasible
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |r, (_, q)| {
                (r.0.min(*q), r.1.max(*q))
            });
        Error::NoBracket {
            target,
            detail: if feasible.is_empty() {
                "no feasible alpha found on the bracket grid".into()
            } else {
                format!(
                    "mean flow spans [{:.4}, {:.4}] cm³/s on the bracket grid",
                    range.0, range.1
                )
            },
        }
    };
    let bm = pick(&b_min, trend_up).ok_or_else(|| describe(config.qbar_min))?;
    let bx = pick(&b_max, !trend_up).ok_or_else(|| describe(config.qbar_max))?;

    let refine = |(lo, hi, f_lo): (f64, f64, f64), target: f64| -> Result<(f64, f64)> {
        let tol_x = (1.0 + config.alpha_rel_tol).ln() * 1e-2;
        let tol_q = config.qbar_rel_tol * target;
        let mut failure = None;
        let x = bisect(
            |x| match qbar_or_none(pair, x.exp(), config) {
                Ok(Some(q)) => Some(q - target),
                Ok(None) => None,
                Err(e) => {
                    failure = Some(e);
                    None
                }
            },
            lo.ln(),
            hi.ln(),
            f_lo,
            |a, b, fm| (b - a).abs() <= tol_x && fm.abs() <= tol_q,
            200,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let x = x.ok_or_else(|| Error::NoBracket {
            target,
            detail: "infeasible alpha inside the bracket".into(),
        })?;
        let alpha = x.exp();
        let q = qbar(pair, alpha, config)?;
        Ok((alpha, q))
    };
    let (alpha_min, qbar_at_min) = refine(bm, config.qbar_min)?;
    let (alpha_max, qbar_at_max) = refine(bx, config.qbar_max)?;
    for (q, target) in [
        (qbar_at_min, config.qbar_min),
        (qbar_at_max, config.qbar_max),
    ] {
        if (q - target).abs() > config.qbar_rel_tol * target {
            warnings.push(format!(
                "mean flow {q:.9} misses target {target} beyond tolerance"
            ));
        }
    }
    Ok(AlphaBounds {
        alpha_min,
        alpha_max,
        qbar_at_min,
        qbar_at_max,
        samples,
        warnings,
    })
}

/// Summary of the inverse problem at the optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_opt: f64,
    /// `sqrt(I(alpha_opt) / T)`, cm³/s.
    pub mse: f64,
    pub consistency: f64,
    pub qbar: f64,
    pub kotin_block1: KotinReport,
    pub kotin_block2: KotinReport,
    pub delta_block1: Option<f64>,
    pub delta_block2: Option<f64>,
    pub evaluation: PairEvaluation,
    /// Every alpha probed by the minimiser, in order.
    pub probes: Vec<(f64, Option<f64>)>,
    pub warnings: Vec<String>,
}

impl OptimizationResult {
    pub fn q_block1(&self) -> &PeriodicSolution {
        &self.evaluation.upstream.selection.solution
    }

    pub fn q_block2(&self) -> &PeriodicSolution {
        &self.evaluation.downstream.selection.solution
    }
}

/// Mean-squared mismatch per unit time, `sqrt(I / T)`.
pub fn mse(consistency: f64, period: f64) -> f64 {
    (consistency / period).sqrt()
}

/// Bounds, then bounded minimisation of `I` between them.
pub fn minimize_consistency(
    pair: &BlockPair,
    config: &InverseConfig,
) -> Result<OptimizationResult> {
    let bounds = solve_alpha_bounds(pair, config)?;
    minimize_within(pair, config, &bounds)
}

/// Bounded minimisation of `I` on the interval of precomputed bounds.
///
/// When a probe is infeasible the search restarts on the largest feasible
/// sub-interval around the best probe, and the shrink is recorded.
pub fn minimize_within(
    pair: &BlockPair,
    config: &InverseConfig,
    bounds: &AlphaBounds,
) -> Result<OptimizationResult> {
    let (mut lo, mut hi) = bounds.interval();
    let mut warnings = bounds.warnings.clone();
    let mut probes: Vec<Probe> = Vec::new();
    let mut failure: Option<Error> = None;
    for _round in 0..5 {
        let start = probes.len();
        let budget = config.max_probes.saturating_sub(probes.len()).max(1);
        let found = minimize_bounded(
            |a| {
                if failure.is_some() {
                    return None;
                }
                match consistency(pair, a, config) {
                    Ok(c) => c.value(),
                    Err(e) => {
                        failure = Some(e);
                        None
                    }
                }
            },
            lo,
            hi,
            config.alpha_rel_tol,
            1e-12 * hi,
            budget,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        probes.extend(found.probes);
        let round = &probes[start..];
        if round.iter().all(|p| p.value.is_some()) {
            break;
        }
        let Some(best) = best_probe(&probes) else {
            return Err(Error::EmptyFeasibleInterval);
        };
        let left = round
            .iter()
            .filter(|p| p.value.is_none() && p.x < best.x)
            .map(|p| p.x)
            .fold(lo, f64::max);
        let right = round
            .iter()
            .filter(|p| p.value.is_none() && p.x > best.x)
            .map(|p| p.x)
            .fold(hi, f64::min);
        warnings.push(format!(
            "infeasible alpha inside ({lo:.6e}, {hi:.6e}); search shrunk to ({left:.6e}, {right:.6e})"
        ));
        if (left, right) == (lo, hi) {
            break;
        }
        lo = left;
        hi = right;
    }
    let best = best_probe(&probes).ok_or(Error::EmptyFeasibleInterval)?;
    let evaluation = match evaluate_pair(pair, best.x, config)? {
        PairOutcome::Feasible(e) => *e,
        PairOutcome::Infeasible { alpha, reason } => {
            return Err(Error::Infeasible { alpha, reason })
        }
    };
    for (name, b) in [
        ("block 1", &evaluation.upstream),
        ("block 2", &evaluation.downstream),
    ] {
        if b.selection.ambiguous {
            warnings.push(format!(
                "Ambiguous: {name} has two positive-mean periodic solutions; larger mean used"
            ));
        }
        if b.method == Method::Shooting {
            warnings.push(format!("{name} solved by shooting"));
        }
    }
    let period = pair.period();
    Ok(OptimizationResult {
        alpha_min: bounds.alpha_min,
        alpha_max: bounds.alpha_max,
        alpha_opt: best.x,
        mse: mse(evaluation.consistency, period),
        consistency: evaluation.consistency,
        qbar: evaluation.qbar,
        kotin_block1: kotin_check(pair.upstream(), best.x),
        kotin_block2: kotin_check(pair.downstream(), best.x),
        delta_block1: evaluation.upstream.discriminant,
        delta_block2: evaluation.downstream.discriminant,
        evaluation,
        probes: probes.iter().map(|p| (p.x, p.value)).collect(),
        warnings,
    })
}

fn best_probe(probes: &[Probe]) -> Option<Probe> {
    probes
        .iter()
        .filter(|p| p.value.is_some())
        .min_by(|a, b| a.value.unwrap().total_cmp(&b.value.unwrap()))
        .copied()
}

/// Local flow rates `q(t, x) = Q(t) + Phi(t, x_b, x)` at absolute positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowCurves {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// `q[i][k]`: position `i`, time `k`, cm³/s.
    pub q: Vec<Vec<f64>>,
}

/// Flow along the segment from the periodic inlet flow of a block.
/// Positions upstream of the block integrate the continuity equation backwards.
pub fn reconstruct_flow(
    field: &AreaField,
    block: &Block,
    inlet: &PeriodicSolution,
    positions: &[f64],
) -> Result<FlowCurves> {
    let times = inlet.times();
    let q = positions
        .iter()
        .map(|x| {
            times
                .iter()
                .zip(&inlet.q)
                .map(|(t, q)| Ok(q + field.phi_signed(*t, block.x_start, *x)?))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowCurves {
        times,
        positions: positions.to_vec(),
        q,
    })
}

/// Absolute positions at fractions of the field's axial extent.
pub fn segment_positions(field: &AreaField, fractions: &[f64]) -> Vec<f64> {
    fractions
        .iter()
        .map(|f| field.x_min() + f * field.length())
        .collect()
}
