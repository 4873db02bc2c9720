//! Classical contrast model: a continuous-time birth-death chain over the
//! same ten levels, with the state a definite level at every instant and
//! only its probability distribution evolving.
//!
//! Match trials boost the upward rate, mismatch trials the downward rate,
//! and no-response trials use the symmetric base rate. At each probe the
//! distribution is re-prepared as the same Gaussian profile the quantum model
//! uses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::TrialOutcome;
use crate::session::{median_time_delta, Session};
use crate::state::{level_midpoints, StateVector, LEVELS};

const COLUMN_SUM_TOLERANCE: f64 = 1e-12;
const NEGATIVE_FLOOR: f64 = -1e-12;
const PROBABILITY_TOLERANCE: f64 = 1e-10;

/// Generator `K` of a continuous-time Markov chain, `dp/dt = K p`.
/// Entry `(j, i)` is the rate from level `i` to level `j`; columns sum to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl IntensityMatrix {
    /// Validates a row-major `n x n` generator.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: "intensity matrix".into(),
            });
        }
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                let k = data[j * n + i];
                if j != i && k < 0.0 {
                    return Err(Error::invalid(format!("negative rate {k} from {i} to {j}")));
                }
                sum += k;
            }
            if sum.abs() > COLUMN_SUM_TOLERANCE {
                return Err(Error::invalid(format!("column {i} sums to {sum}, not 0")));
            }
        }
        Ok(IntensityMatrix { n, data })
    }

    /// Nearest-neighbour chain: `up[i]` is the rate `i -> i+1`, `down[i]` the
    /// rate `i+1 -> i`.
    pub fn birth_death(up: &[f64], down: &[f64]) -> Result<Self> {
        if up.len() != down.len() {
            return Err(Error::DimensionMismatch {
                expected: up.len(),
                found: down.len(),
            });
        }
        let n = up.len() + 1;
        let mut data = vec![0.0; n * n];
        for i in 0..n - 1 {
            data[(i + 1) * n + i] = up[i];
            data[i * n + i + 1] = down[i];
            data[i * n + i] -= up[i];
            data[(i + 1) * n + i + 1] -= down[i];
        }
        Self::new(n, data)
    }

    pub fn zero(n: usize) -> Self {
        IntensityMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.data[j * self.n + i]
    }

    /// `K p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(j, i) * p[i]).sum())
            .collect()
    }

    /// `exp(scale K)` by uniformization with scaling and squaring. All series
    /// terms are non-negative, so no cancellation occurs.
    pub fn exp(&self, scale: f64) -> Vec<f64> {
        let n = self.n;
        let mut identity = vec![0.0; n * n];
        for i in 0..n {
            identity[i * n + i] = 1.0;
        }
        let max_exit = (0..n).map(|i| -self.get(i, i)).fold(0.0, f64::max) * scale;
        if max_exit == 0.0 {
            return identity;
        }
        let squarings = max_exit.log2().ceil().max(0.0) as i32;
        let step = scale / 2f64.powi(squarings);
        let lambda = max_exit / 2f64.powi(squarings);

        // B = step K + lambda I >= 0 elementwise
        let b: Vec<f64> = self
            .data
            .iter()
            .zip(&identity)
            .map(|(k, id)| step * k + lambda * id)
            .collect();
        let mut sum = identity.clone();
        let mut term = identity;
        for k in 1..64 {
            term = matmul(n, &term, &b);
            let inv = 1.0 / k as f64;
            term.iter_mut().for_each(|x| *x *= inv);
            let mut largest = 0.0f64;
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
                largest = largest.max(*t);
            }
            if largest < 1e-18 {
                break;
            }
        }
        let damp = (-lambda).exp();
        let mut m: Vec<f64> = sum.iter().map(|x| x * damp).collect();
        for _ in 0..squarings {
            m = matmul(n, &m, &m);
        }
        m
    }
}

fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::invalid("probabilities must be finite and non-negative"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

/// `p(t) = exp(t gamma K) p(0)`, with round-off negatives clamped to 0.
pub fn markov_evolve(p: &[f64], k: &IntensityMatrix, t: f64, gamma: f64) -> Result<Vec<f64>> {
    if p.len() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            found: p.len(),
        });
    }
    check_distribution(p)?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    Ok(evolve_unchecked(p, k, t * gamma))
}

fn evolve_unchecked(p: &[f64], k: &IntensityMatrix, scale: f64) -> Vec<f64> {
    if scale == 0.0 {
        return p.to_vec();
    }
    let n = k.dim();
    let m = k.exp(scale);
    (0..n)
        .map(|j| {
            let v: f64 = (0..n).map(|i| m[j * n + i] * p[i]).sum();
            if (NEGATIVE_FLOOR..0.0).contains(&v) {
                0.0
            } else {
                v
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovParams {
    pub gamma: f64,
    /// Symmetric nearest-level rate.
    pub rate: f64,
    /// Extra upward rate on match trials.
    pub up_bias: f64,
    /// Extra downward rate on mismatch trials.
    pub down_bias: f64,
    pub collapse_std: f64,
}

impl Default for MarkovParams {
    fn default() -> Self {
        MarkovParams {
            gamma: 0.1,
            rate: 1.0,
            up_bias: 1.0,
            down_bias: 1.0,
            collapse_std: crate::hamiltonians::DEFAULT_COLLAPSE_STD,
        }
    }
}

impl MarkovParams {
    fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma <= 0.0 {
            return Err(Error::invalid("gamma must be positive"));
        }
        for (name, v) in [("rate", self.rate), ("up_bias", self.up_bias), ("down_bias", self.down_bias)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !self.collapse_std.is_finite() || self.collapse_std <= 0.0 {
            return Err(Error::invalid("collapse_std must be positive"));
        }
        Ok(())
    }

    pub fn generator(&self, outcome: TrialOutcome) -> Result<IntensityMatrix> {
        let (up, down) = match outcome {
            TrialOutcome::Match => (self.rate + self.up_bias, self.rate),
            TrialOutcome::Mismatch => (self.rate, self.rate + self.down_bias),
            TrialOutcome::NoResponse => (self.rate, self.rate),
        };
        IntensityMatrix::birth_death(&[up; LEVELS - 1], &[down; LEVELS - 1])
    }
}

/// Same propensities as the quantum model's Gaussian state.
pub fn gaussian_distribution(mean_level: f64, std: f64) -> Result<[f64; LEVELS]> {
    Ok(StateVector::gaussian(mean_level, std)?.propensities())
}

pub fn mean_level(p: &[f64]) -> f64 {
    p.iter().zip(level_midpoints()).map(|(p, x)| p * x).sum()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MarkovTrajectory {
    /// Distribution after each trial.
    pub distributions: Vec<[f64; LEVELS]>,
    /// Mean level at each block end.
    pub predictions: Vec<f64>,
}

/// Replays a session with the same timing rules as the quantum engine.
pub fn run_session_markov_traced(
    session: &Session,
    params: &MarkovParams,
    collapse_enabled: bool,
) -> Result<MarkovTrajectory> {
    session.validate()?;
    params.validate()?;
    let median = median_time_delta(session)?;
    let generators = [
        params.generator(TrialOutcome::Match)?,
        params.generator(TrialOutcome::Mismatch)?,
        params.generator(TrialOutcome::NoResponse)?,
    ];
    let mut p = gaussian_distribution(session.initial_rating / 10.0, params.collapse_std)?;
    let mut traj = MarkovTrajectory::default();
    for block in &session.blocks {
        for (t, trial) in block.trials.iter().enumerate() {
            let dt = if t == 0 { median } else { trial.time_delta };
            let k = &generators[trial.outcome.index()];
            let next = evolve_unchecked(&p, k, dt * params.gamma);
            p.copy_from_slice(&next);
            traj.distributions.push(p);
        }
        traj.predictions.push(mean_level(&p));
        if collapse_enabled {
            p = gaussian_distribution(block.reported_rating / 10.0, params.collapse_std)?;
        }
    }
    Ok(traj)
}

/// Per-block predicted ratings (level units) with re-preparation at probes.
pub fn run_session_markov(session: &Session, params: &MarkovParams) -> Result<Vec<f64>> {
    Ok(run_session_markov_traced(session, params, true)?.predictions)
}
