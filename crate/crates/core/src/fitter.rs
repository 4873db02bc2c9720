//! Bounded global fitting of `(gamma, alpha, beta, sigma)` against reported
//! block ratings, minimizing the mean absolute error in level units.
//!
//! The search runs in a unit box mapped onto the parameter bounds (log
//! scale by default, since the bounds span three decades). Differential
//! evolution explores the box; a Nelder-Mead simplex polishes the best
//! member with the remaining budget. Every random draw comes from a ChaCha
//! stream keyed by `(seed, evaluation index)`, so evaluating a generation in
//! parallel cannot change the outcome.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{ModelParams, DEFAULT_COLLAPSE_STD, GAMMA_BOUNDS, SLOPE_BOUNDS};
use crate::session::{median_time_delta, replay, ModelSpectra, RunOptions, Session};

const DIM: usize = 4;
const PARAM_NAMES: [&str; DIM] = ["gamma", "alpha", "beta", "sigma"];
const STALL_GAIN: f64 = 0.01;

/// Closed search interval per fitted parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub gamma: (f64, f64),
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub sigma: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            gamma: GAMMA_BOUNDS,
            alpha: SLOPE_BOUNDS,
            beta: SLOPE_BOUNDS,
            sigma: SLOPE_BOUNDS,
        }
    }
}

impl Bounds {
    pub fn as_array(&self) -> [(f64, f64); DIM] {
        [self.gamma, self.alpha, self.beta, self.sigma]
    }

    pub fn from_array(b: [(f64, f64); DIM]) -> Self {
        Bounds {
            gamma: b[0],
            alpha: b[1],
            beta: b[2],
            sigma: b[3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in PARAM_NAMES.iter().zip(self.as_array()) {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::NonFinite {
                    what: format!("bounds for {name}"),
                });
            }
            if lo >= hi {
                return Err(Error::invalid(format!("bounds for {name}: lower {lo} must be below upper {hi}")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &ModelParams) -> bool {
        self.as_array()
            .iter()
            .zip(p.fitted())
            .all(|(&(lo, hi), v)| v >= lo && v <= hi)
    }
}

/// Mutation rule for the differential evolution stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// `x_r0 + F (x_r1 - x_r2)`
    Rand1,
    /// `x_i + F (x_best - x_i) + F (x_r1 - x_r2)`
    #[default]
    CurrentToBest1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub bounds: Bounds,
    pub seed: u64,
    /// Total cost evaluations, differential evolution plus polish.
    pub budget: usize,
    pub population: usize,
    /// Independent differential evolution runs sharing the budget.
    pub restarts: usize,
    /// Evaluations reserved for the simplex polish.
    pub polish_budget: usize,
    /// Held fixed during the fit.
    pub collapse_std: f64,
    pub strategy: Strategy,
    /// Crossover probability.
    pub crossover: f64,
    /// Search each coordinate on a log scale when its lower bound is positive.
    pub log_scale: bool,
    /// Generations without a relative gain of `STALL_GAIN` before the
    /// population (minus its best member) is re-scattered; 0 disables.
    pub stall_generations: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            bounds: Bounds::default(),
            seed: 0,
            budget: 5000,
            population: 30,
            restarts: 1,
            polish_budget: 500,
            collapse_std: DEFAULT_COLLAPSE_STD,
            strategy: Strategy::default(),
            crossover: 0.9,
            log_scale: true,
            stall_generations: 30,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if self.budget == 0 {
            return Err(Error::invalid("budget must be at least 1"));
        }
        if self.population == 0 {
            return Err(Error::invalid("population must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(Error::invalid(format!("crossover must lie in [0, 1], got {}", self.crossover)));
        }
        if !self.collapse_std.is_finite() || self.collapse_std <= 0.0 {
            return Err(Error::invalid(format!(
                "collapse_std must be positive, got {}",
                self.collapse_std
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockFit {
    pub block: usize,
    /// Level units.
    pub predicted: f64,
    /// Level units.
    pub reported: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub best_params: ModelParams,
    pub mae: f64,
    pub evaluations: usize,
    /// `(evaluation index, best MAE so far)`, one entry per improvement.
    pub cost_trace: Vec<(usize, f64)>,
    pub per_block: Vec<BlockFit>,
}

/// Mean over blocks of `|predicted - reported / 10|`.
pub fn mae_cost(session: &Session, params: &ModelParams) -> Result<f64> {
    let objective = Objective::new(session)?;
    params.validate()?;
    Ok(objective.cost(params))
}

pub(crate) fn mean_abs_error(predicted: &[f64], reported: &[f64]) -> f64 {
    let n = predicted.len().max(1) as f64;
    predicted.iter().zip(reported).map(|(p, r)| (p - r).abs()).sum::<f64>() / n
}

struct Objective<'a> {
    session: &'a Session,
    median_dt: f64,
    reported: Vec<f64>,
}

impl<'a> Objective<'a> {
    fn new(session: &'a Session) -> Result<Self> {
        session.validate()?;
        Ok(Objective {
            session,
            median_dt: median_time_delta(session)?,
            reported: session.reported_levels(),
        })
    }

    fn predict(&self, params: &ModelParams) -> Result<Vec<f64>> {
        let spectra = ModelSpectra::new(params)?;
        let opts = RunOptions {
            record: false,
            ..RunOptions::default()
        };
        Ok(replay(self.session, &spectra, params.collapse_std, self.median_dt, opts).predictions)
    }

    fn cost(&self, params: &ModelParams) -> f64 {
        match self.predict(params) {
            Ok(pred) => mean_abs_error(&pred, &self.reported),
            Err(e) => {
                log::warn!("discarding candidate {params:?}: {e}");
                f64::INFINITY
            }
        }
    }
}

/// Maps the unit box onto the parameter bounds.
struct SearchSpace {
    bounds: [(f64, f64); DIM],
    log: [bool; DIM],
    collapse_std: f64,
}

impl SearchSpace {
    fn new(config: &FitConfig) -> Self {
        let bounds = config.bounds.as_array();
        SearchSpace {
            bounds,
            log: bounds.map(|(lo, _)| config.log_scale && lo > 0.0),
            collapse_std: config.collapse_std,
        }
    }

    fn to_params(&self, u: &[f64; DIM]) -> ModelParams {
        let x: [f64; DIM] = std::array::from_fn(|j| {
            let (lo, hi) = self.bounds[j];
            let v = if self.log[j] {
                lo * (hi / lo).powf(u[j])
            } else {
                lo + u[j] * (hi - lo)
            };
            v.clamp(lo, hi)
        });
        ModelParams::from_fitted(x, self.collapse_std)
    }
}

fn keyed_rng(seed: u64, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}

struct Tracker {
    evaluations: usize,
    best_u: [f64; DIM],
    best_cost: f64,
    trace: Vec<(usize, f64)>,
}

impl Tracker {
    fn record(&mut self, u: &[f64; DIM], cost: f64) {
        self.evaluations += 1;
        if cost < self.best_cost {
            self.best_cost = cost;
            self.best_u = *u;
            self.trace.push((self.evaluations, cost));
        }
    }
}

/// Fits the model to one session.
pub fn fit(session: &Session, config: &FitConfig) -> Result<FitResult> {
    fit_with_progress(session, config, &|_, _| {})
}

/// [`fit`] with a callback receiving `(evaluations, best MAE)` after each
/// generation and periodically during the polish.
pub fn fit_with_progress(
    session: &Session,
    config: &FitConfig,
    progress: &(dyn Fn(usize, f64) + Sync),
) -> Result<FitResult> {
    config.validate()?;
    let objective = Objective::new(session)?;
    let space = SearchSpace::new(config);
    let eval = |u: &[f64; DIM]| objective.cost(&space.to_params(u));

    let budget = config.budget;
    let population = config.population.min(budget);
    let polish = if budget > population {
        config.polish_budget.min(budget - population)
    } else {
        0
    };
    let de_budget = budget - polish;

    let mut tracker = Tracker {
        evaluations: 0,
        best_u: [0.5; DIM],
        best_cost: f64::INFINITY,
        trace: Vec::new(),
    };

    let restarts = config.restarts.max(1);
    for run in 0..restarts {
        let limit = de_budget * (run + 1) / restarts;
        let size = population.min(limit.saturating_sub(tracker.evaluations));
        if size == 0 {
            continue;
        }
        evolve(size, limit, config, &eval, &mut tracker, progress);
    }

    let remaining = budget - tracker.evaluations;
    if remaining > DIM {
        let start = tracker.best_u;
        nelder_mead(start, remaining, &eval, &mut tracker, progress);
    }
    progress(tracker.evaluations, tracker.best_cost);

    let best_params = space.to_params(&tracker.best_u);
    let predicted = objective.predict(&best_params)?;
    let per_block = predicted
        .iter()
        .zip(&objective.reported)
        .enumerate()
        .map(|(block, (&predicted, &reported))| BlockFit {
            block,
            predicted,
            reported,
        })
        .collect();
    Ok(FitResult {
        best_params,
        mae: tracker.best_cost,
        evaluations: tracker.evaluations,
        cost_trace: tracker.trace,
        per_block,
    })
}

/// One differential evolution run from a fresh population, stopping before
/// the evaluation count would pass `limit`.
fn evolve(
    population: usize,
    limit: usize,
    config: &FitConfig,
    eval: &(dyn Fn(&[f64; DIM]) -> f64 + Sync),
    tracker: &mut Tracker,
    progress: &(dyn Fn(usize, f64) + Sync),
) {
    let base_key = tracker.evaluations as u64;
    let mut pop: Vec<[f64; DIM]> = (0..population)
        .map(|i| {
            let mut rng = keyed_rng(config.seed, base_key + i as u64);
            std::array::from_fn(|_| rng.random::<f64>())
        })
        .collect();
    let mut costs: Vec<f64> = pop.par_iter().map(eval).collect();
    for (u, &c) in pop.iter().zip(&costs) {
        tracker.record(u, c);
    }
    progress(tracker.evaluations, tracker.best_cost);

    let mut stall_ref = costs[argmin(&costs)];
    let mut stalled = 0;
    // differential evolution needs three distinct partners besides the target
    while population >= 4 && tracker.evaluations + population <= limit {
        let best_idx = argmin(&costs);
        let base_key = tracker.evaluations as u64;
        let trials: Vec<[f64; DIM]> = (0..population)
            .map(|i| {
                let mut rng = keyed_rng(config.seed, base_key + i as u64);
                mutate(&pop, i, best_idx, config, &mut rng)
            })
            .collect();
        let trial_costs: Vec<f64> = trials.par_iter().map(eval).collect();
        for i in 0..population {
            tracker.record(&trials[i], trial_costs[i]);
            if trial_costs[i] <= costs[i] {
                pop[i] = trials[i];
                costs[i] = trial_costs[i];
            }
        }
        progress(tracker.evaluations, tracker.best_cost);
        if converged(&pop, &costs) {
            break;
        }
        let gen_best = costs[argmin(&costs)];
        if gen_best < stall_ref * (1.0 - STALL_GAIN) {
            stall_ref = gen_best;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if config.stall_generations > 0 && stalled >= config.stall_generations {
            // scatter everyone but the incumbent over the box again
            let keep = argmin(&costs);
            let base_key = tracker.evaluations as u64;
            let fresh: Vec<(usize, [f64; DIM])> = (0..population)
                .filter(|&i| i != keep)
                .map(|i| {
                    let mut rng = keyed_rng(config.seed, base_key + i as u64);
                    (i, std::array::from_fn(|_| rng.random::<f64>()))
                })
                .collect();
            if tracker.evaluations + fresh.len() > limit {
                break;
            }
            let fresh_costs: Vec<f64> = fresh.par_iter().map(|(_, u)| eval(u)).collect();
            for ((i, u), c) in fresh.into_iter().zip(fresh_costs) {
                tracker.record(&u, c);
                pop[i] = u;
                costs[i] = c;
            }
            progress(tracker.evaluations, tracker.best_cost);
            stalled = 0;
            stall_ref = costs[argmin(&costs)];
        }
    }
}

fn argmin(costs: &[f64]) -> usize {
    let mut best = 0;
    for (i, c) in costs.iter().enumerate() {
        if *c < costs[best] {
            best = i;
        }
    }
    best
}

fn converged(pop: &[[f64; DIM]], costs: &[f64]) -> bool {
    let (lo, hi) = costs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    if hi - lo > 1e-15 {
        return false;
    }
    (0..DIM).all(|j| {
        let (a, b) = pop
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), u| (a.min(u[j]), b.max(u[j])));
        b - a < 1e-12
    })
}

fn distinct_partners(rng: &mut ChaCha8Rng, n: usize, exclude: usize) -> [usize; 3] {
    let mut picks = [usize::MAX; 3];
    let mut k = 0;
    while k < 3 {
        let c = rng.random_range(0..n);
        if c != exclude && !picks[..k].contains(&c) {
            picks[k] = c;
            k += 1;
        }
    }
    picks
}

fn mutate(pop: &[[f64; DIM]], i: usize, best: usize, config: &FitConfig, rng: &mut ChaCha8Rng) -> [f64; DIM] {
    let [r0, r1, r2] = distinct_partners(rng, pop.len(), i);
    // dithered differential weight in [0.5, 1)
    let f = 0.5 + 0.5 * rng.random::<f64>();
    let target = &pop[i];
    let donor: [f64; DIM] = std::array::from_fn(|j| match config.strategy {
        Strategy::Rand1 => pop[r0][j] + f * (pop[r1][j] - pop[r2][j]),
        Strategy::CurrentToBest1 => {
            target[j] + f * (pop[best][j] - target[j]) + f * (pop[r1][j] - pop[r2][j])
        }
    });
    let forced = rng.random_range(0..DIM);
    let mut trial = *target;
    for j in 0..DIM {
        let cross: f64 = rng.random();
        if j == forced || cross < config.crossover {
            let mut v = donor[j];
            // bounce back between the parent and the violated bound
            if v < 0.0 {
                v = target[j] * rng.random::<f64>();
            } else if v > 1.0 {
                v = target[j] + (1.0 - target[j]) * rng.random::<f64>();
            }
            trial[j] = v;
        }
    }
    trial
}

fn clamp_unit(x: [f64; DIM]) -> [f64; DIM] {
    x.map(|v| v.clamp(0.0, 1.0))
}

/// Box-clamped Nelder-Mead on the unit cube, spending at most `budget`
/// evaluations.
fn nelder_mead(
    start: [f64; DIM],
    budget: usize,
    eval: &(dyn Fn(&[f64; DIM]) -> f64 + Sync),
    tracker: &mut Tracker,
    progress: &(dyn Fn(usize, f64) + Sync),
) {
    const STEP: f64 = 0.05;
    let limit = tracker.evaluations + budget;
    let spent = |u: &[f64; DIM], tracker: &mut Tracker| -> Option<f64> {
        if tracker.evaluations >= limit {
            return None;
        }
        let c = eval(u);
        tracker.record(u, c);
        if tracker.evaluations.is_multiple_of(100) {
            progress(tracker.evaluations, tracker.best_cost);
        }
        Some(c)
    };

    let mut simplex: Vec<([f64; DIM], f64)> = Vec::with_capacity(DIM + 1);
    let Some(f0) = spent(&start, tracker) else { return };
    simplex.push((start, f0));
    for j in 0..DIM {
        let mut v = start;
        v[j] = if v[j] + STEP <= 1.0 { v[j] + STEP } else { v[j] - STEP };
        let Some(f) = spent(&v, tracker) else { return };
        simplex.push((v, f));
    }

    let combine = |a: &[f64; DIM], b: &[f64; DIM], t: f64| -> [f64; DIM] {
        clamp_unit(std::array::from_fn(|j| a[j] + t * (b[j] - a[j])))
    };

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[DIM].1 - simplex[0].1;
        let size = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= 1e-14 && size <= 1e-10 {
            return;
        }

        let centroid: [f64; DIM] =
            std::array::from_fn(|j| simplex[..DIM].iter().map(|(v, _)| v[j]).sum::<f64>() / DIM as f64);
        let (worst, f_worst) = simplex[DIM];

        let reflected = combine(&centroid, &worst, -1.0);
        let Some(f_r) = spent(&reflected, tracker) else { return };

        if f_r < simplex[0].1 {
            let expanded = combine(&centroid, &worst, -2.0);
            let Some(f_e) = spent(&expanded, tracker) else { return };
            simplex[DIM] = if f_e < f_r { (expanded, f_e) } else { (reflected, f_r) };
            continue;
        }
        if f_r < simplex[DIM - 1].1 {
            simplex[DIM] = (reflected, f_r);
            continue;
        }

        let (contracted, bar) = if f_r < f_worst {
            (combine(&centroid, &reflected, 0.5), f_r)
        } else {
            (combine(&centroid, &worst, 0.5), f_worst)
        };
        let Some(f_c) = spent(&contracted, tracker) else { return };
        if f_c < bar {
            simplex[DIM] = (contracted, f_c);
            continue;
        }

        let best = simplex[0].0;
        for k in 1..=DIM {
            let v = combine(&best, &simplex[k].0, 0.5);
            let Some(f) = spent(&v, tracker) else { return };
            simplex[k] = (v, f);
        }
    }
}

/// Values `start, start + step, ...` up to `stop` inclusive, rounded to
/// twelve decimals.
pub fn std_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if ![start, stop, step].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            what: "grid specification".into(),
        });
    }
    if step <= 0.0 {
        return Err(Error::invalid(format!("grid step must be positive, got {step}")));
    }
    if stop < start {
        return Err(Error::invalid(format!("grid stop {stop} is below start {start}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Parses `start:stop:step`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::invalid(format!("grid must be start:stop:step, got {spec:?}")));
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::invalid(format!("bad grid number {s:?}")))
    };
    std_grid(num(parts[0])?, num(parts[1])?, num(parts[2])?)
}

/// The collapse-std grid 0.05, 0.15, ..., 1.95.
pub fn default_std_grid() -> Vec<f64> {
    std_grid(0.05, 2.0, 0.1).expect("static grid")
}

/// Re-fits with `collapse_std` fixed at each grid value; returns
/// `(std, fitted MAE)` in grid order.
pub fn sweep_collapse_std(session: &Session, config: &FitConfig, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if let Some(bad) = grid.iter().find(|s| !s.is_finite() || **s <= 0.0) {
        return Err(Error::invalid(format!("grid values must be positive, got {bad}")));
    }
    grid.par_iter()
        .map(|&std| {
            let cfg = FitConfig {
                collapse_std: std,
                ..config.clone()
            };
            fit(session, &cfg).map(|r| (std, r.mae))
        })
        .collect()
}
