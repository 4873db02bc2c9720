//! Session replay: per-trial Hamiltonian selection, unitary evolution over
//! the recorded time gaps, and readout plus collapse at each block-end probe.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{build_hamiltonian, ModelParams, TrialOutcome};
use crate::linalg::{eig_sym_tridiagonal, Spectrum};
use crate::state::{Readout, StateVector, LEVELS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub outcome: TrialOutcome,
    /// Seconds since the previous trial.
    #[serde(rename = "time_delta_s")]
    pub time_delta: f64,
}

impl TrialRecord {
    pub fn new(outcome: TrialOutcome, time_delta: f64) -> Self {
        TrialRecord { outcome, time_delta }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub trials: Vec<TrialRecord>,
    /// Rating reported at the end of the block, percent.
    pub reported_rating: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub participant_id: String,
    /// Rating after the practice block, percent. Seeds the initial state.
    pub initial_rating: f64,
    pub blocks: Vec<Block>,
}

fn rating_ok(r: f64) -> bool {
    r.is_finite() && (0.0..=100.0).contains(&r)
}

impl Session {
    pub fn validate(&self) -> Result<()> {
        if !rating_ok(self.initial_rating) {
            return Err(Error::invalid(format!(
                "initial_rating must lie in [0, 100], got {}",
                self.initial_rating
            )));
        }
        if self.blocks.is_empty() {
            return Err(Error::invalid("session has no blocks"));
        }
        for (b, block) in self.blocks.iter().enumerate() {
            if block.trials.is_empty() {
                return Err(Error::invalid(format!("block {b} has no trials")));
            }
            if !rating_ok(block.reported_rating) {
                return Err(Error::invalid(format!(
                    "block {b}: reported_rating must lie in [0, 100], got {}",
                    block.reported_rating
                )));
            }
            for (t, trial) in block.trials.iter().enumerate() {
                if !trial.time_delta.is_finite() {
                    return Err(Error::InvalidTrial {
                        block: b,
                        trial: t,
                        reason: "non-finite time delta".into(),
                    });
                }
                if trial.time_delta < 0.0 {
                    return Err(Error::InvalidTrial {
                        block: b,
                        trial: t,
                        reason: format!("negative time delta {}", trial.time_delta),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn trial_count(&self) -> usize {
        self.blocks.iter().map(|b| b.trials.len()).sum()
    }

    pub fn trials(&self) -> impl Iterator<Item = &TrialRecord> {
        self.blocks.iter().flat_map(|b| b.trials.iter())
    }

    /// Reported ratings in level units.
    pub fn reported_levels(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.reported_rating / 10.0).collect()
    }
}

/// Median of every trial's recorded time delta across the whole session.
/// Even counts average the two central values.
pub fn median_time_delta(session: &Session) -> Result<f64> {
    let mut deltas: Vec<f64> = session.trials().map(|t| t.time_delta).collect();
    if deltas.is_empty() {
        return Err(Error::EmptySession);
    }
    if deltas.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite {
            what: "time delta".into(),
        });
    }
    deltas.sort_by(f64::total_cmp);
    let n = deltas.len();
    Ok(if n % 2 == 1 {
        deltas[n / 2]
    } else {
        0.5 * (deltas[n / 2 - 1] + deltas[n / 2])
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSnapshot {
    pub block: usize,
    pub trial: usize,
    pub propensities: [f64; LEVELS],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseEvent {
    pub block: usize,
    /// Reported rating in level units.
    pub rating_level: f64,
    pub propensities: [f64; LEVELS],
}

/// Everything recorded while replaying a session.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: Option<[f64; LEVELS]>,
    /// Propensities after each trial.
    pub snapshots: Vec<TrialSnapshot>,
    /// Modeled rating at each block end, level units.
    pub predictions: Vec<f64>,
    /// Reported rating at each block end, level units.
    pub reported: Vec<f64>,
    pub collapses: Vec<CollapseEvent>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub collapse: bool,
    pub readout: Readout,
    /// Keep per-trial snapshots. Off for fitting.
    pub record: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            collapse: true,
            readout: Readout::Expectation,
            record: true,
        }
    }
}

/// Eigendecompositions of `H+`, `H-` and `H0` for one parameter set.
pub struct ModelSpectra {
    spectra: [Spectrum; 3],
    gamma: f64,
}

impl ModelSpectra {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let build = |o: TrialOutcome| eig_sym_tridiagonal(&build_hamiltonian(o, params)?);
        Ok(ModelSpectra {
            spectra: [
                build(TrialOutcome::Match)?,
                build(TrialOutcome::Mismatch)?,
                build(TrialOutcome::NoResponse)?,
            ],
            gamma: params.gamma,
        })
    }

    pub fn spectrum(&self, outcome: TrialOutcome) -> &Spectrum {
        &self.spectra[outcome.index()]
    }

    pub fn step(&self, psi: &StateVector, outcome: TrialOutcome, dt: f64) -> StateVector {
        StateVector::from_evolved(
            self.spectrum(outcome)
                .evolve_unchecked(psi.amplitudes().entries(), dt, self.gamma),
        )
    }
}

/// Replays `session` and returns the full trajectory.
pub fn run_session(session: &Session, params: &ModelParams, collapse_enabled: bool) -> Result<Trajectory> {
    run_session_with(
        session,
        params,
        RunOptions {
            collapse: collapse_enabled,
            ..RunOptions::default()
        },
    )
}

pub fn run_session_with(session: &Session, params: &ModelParams, opts: RunOptions) -> Result<Trajectory> {
    session.validate()?;
    params.validate()?;
    let median = median_time_delta(session)?;
    let spectra = ModelSpectra::new(params)?;
    Ok(replay(session, &spectra, params.collapse_std, median, opts))
}

/// Per-block modeled ratings (level units) with collapse enabled.
pub fn predict_ratings(session: &Session, params: &ModelParams) -> Result<Vec<f64>> {
    let traj = run_session_with(
        session,
        params,
        RunOptions {
            record: false,
            ..RunOptions::default()
        },
    )?;
    Ok(traj.predictions)
}

/// Core loop; inputs already validated.
pub(crate) fn replay(
    session: &Session,
    spectra: &ModelSpectra,
    collapse_std: f64,
    median_dt: f64,
    opts: RunOptions,
) -> Trajectory {
    let initial_level = session.initial_rating / 10.0;
    let mut psi = StateVector::gaussian(initial_level, collapse_std).expect("validated initial state");
    let mut traj = Trajectory {
        predictions: Vec::with_capacity(session.blocks.len()),
        reported: session.reported_levels(),
        ..Trajectory::default()
    };
    if opts.record {
        traj.initial = Some(psi.propensities());
        traj.snapshots.reserve(session.trial_count());
    }

    for (b, block) in session.blocks.iter().enumerate() {
        for (t, trial) in block.trials.iter().enumerate() {
            // the gap before a block's first trial spans the rating probe
            let dt = if t == 0 { median_dt } else { trial.time_delta };
            psi = spectra.step(&psi, trial.outcome, dt);
            if opts.record {
                traj.snapshots.push(TrialSnapshot {
                    block: b,
                    trial: t,
                    propensities: psi.propensities(),
                });
            }
        }
        traj.predictions.push(psi.read(opts.readout));
        if opts.collapse {
            let level = block.reported_rating / 10.0;
            psi = psi.collapse_unchecked(level, collapse_std);
            if opts.record {
                traj.collapses.push(CollapseEvent {
                    block: b,
                    rating_level: level,
                    propensities: psi.propensities(),
                });
            }
        }
    }
    traj
}

/// Evolution of a single Gaussian state under one fixed Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InsilicoRun {
    /// Elapsed seconds; entry 0 is the initial state.
    pub times: Vec<f64>,
    pub propensities: Vec<[f64; LEVELS]>,
    pub expected: Vec<f64>,
}

/// Evolves `Gaussian(init_mean, collapse_std)` for `steps` steps of `dt`
/// seconds under the Hamiltonian for `outcome`, with no collapse.
pub fn insilico(
    outcome: TrialOutcome,
    params: &ModelParams,
    init_mean: f64,
    steps: usize,
    dt: f64,
) -> Result<InsilicoRun> {
    params.validate()?;
    if !dt.is_finite() || dt < 0.0 {
        return Err(Error::invalid(format!("dt must be non-negative, got {dt}")));
    }
    let spectrum = eig_sym_tridiagonal(&build_hamiltonian(outcome, params)?)?;
    let mut psi = StateVector::gaussian(init_mean, params.collapse_std)?;
    let mut run = InsilicoRun {
        times: vec![0.0],
        propensities: vec![psi.propensities()],
        expected: vec![psi.expected_rating()],
    };
    for k in 1..=steps {
        psi = StateVector::from_evolved(spectrum.evolve_unchecked(psi.amplitudes().entries(), dt, params.gamma));
        run.times.push(k as f64 * dt);
        run.propensities.push(psi.propensities());
        run.expected.push(psi.expected_rating());
    }
    Ok(run)
}
