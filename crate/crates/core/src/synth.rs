//! Seeded generator for Wizard-of-Oz style sessions: trial outcomes,
//! inter-trial gaps, and rating traces produced by running the model forward.
//!
//! The no-response rate and the timing distribution are placeholders; only
//! the 75/25 match split and the 20 x 28 layout come from the protocol.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{ModelParams, TrialOutcome};
use crate::session::{median_time_delta, Block, ModelSpectra, Session, TrialRecord};
use crate::state::StateVector;

const OUTCOME_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub blocks: usize,
    pub trials_per_block: usize,
    /// Probability of a match among responded trials.
    pub match_prob: f64,
    pub no_response_prob: f64,
    /// Median inter-trial gap, seconds.
    pub median_time_s: f64,
    /// Log-space standard deviation of the gap distribution.
    pub time_log_sigma: f64,
    /// Rating after the practice block, percent.
    pub initial_rating: f64,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            blocks: 20,
            trials_per_block: 28,
            match_prob: 0.75,
            no_response_prob: 0.05,
            median_time_s: 2.5,
            time_log_sigma: 0.35,
            initial_rating: 50.0,
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 || self.trials_per_block == 0 {
            return Err(Error::invalid("blocks and trials_per_block must be at least 1"));
        }
        for (name, p) in [("match_prob", self.match_prob), ("no_response_prob", self.no_response_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if !self.median_time_s.is_finite() || self.median_time_s <= 0.0 {
            return Err(Error::invalid("median_time_s must be positive"));
        }
        if !self.time_log_sigma.is_finite() || self.time_log_sigma < 0.0 {
            return Err(Error::invalid("time_log_sigma must be non-negative"));
        }
        if !self.initial_rating.is_finite() || !(0.0..=100.0).contains(&self.initial_rating) {
            return Err(Error::invalid("initial_rating must lie in [0, 100]"));
        }
        Ok(())
    }
}

/// A session before any ratings are attached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub participant_id: String,
    pub initial_rating: f64,
    pub blocks: Vec<Vec<TrialRecord>>,
    pub seed: u64,
}

impl Protocol {
    pub fn trial_count(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Attaches fixed reported ratings (percent), e.g. for hand-built tests.
    pub fn with_ratings(&self, ratings: &[f64]) -> Result<Session> {
        if ratings.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: self.blocks.len(),
                found: ratings.len(),
            });
        }
        let session = Session {
            participant_id: self.participant_id.clone(),
            initial_rating: self.initial_rating,
            blocks: self
                .blocks
                .iter()
                .zip(ratings)
                .map(|(trials, &r)| Block {
                    trials: trials.clone(),
                    reported_rating: r,
                })
                .collect(),
        };
        session.validate()?;
        Ok(session)
    }
}

fn stream(seed: u64, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}

pub fn draw_outcome<R: Rng>(rng: &mut R, match_prob: f64, no_response_prob: f64) -> TrialOutcome {
    if rng.random::<f64>() < no_response_prob {
        TrialOutcome::NoResponse
    } else if rng.random::<f64>() < match_prob {
        TrialOutcome::Match
    } else {
        TrialOutcome::Mismatch
    }
}

pub fn generate_protocol(config: &ProtocolConfig) -> Result<Protocol> {
    config.validate()?;
    let mut rng = stream(config.seed, OUTCOME_STREAM);
    let gaps = LogNormal::new(config.median_time_s.ln(), config.time_log_sigma)
        .map_err(|e| Error::invalid(format!("time distribution: {e}")))?;
    let blocks = (0..config.blocks)
        .map(|_| {
            (0..config.trials_per_block)
                .map(|_| {
                    let outcome = draw_outcome(&mut rng, config.match_prob, config.no_response_prob);
                    TrialRecord::new(outcome, gaps.sample(&mut rng))
                })
                .collect()
        })
        .collect();
    Ok(Protocol {
        participant_id: format!("synth-{}", config.seed),
        initial_rating: config.initial_rating,
        blocks,
        seed: config.seed,
    })
}

/// Runs the model forward over `protocol`. Each block's reported rating is
/// `clamp(10 * expected_rating + noise, 0, 100)` and is then used for the
/// collapse, as a participant's report would be.
pub fn generate_ratings(protocol: &Protocol, params: &ModelParams, rating_noise_std: f64) -> Result<Session> {
    params.validate()?;
    if !rating_noise_std.is_finite() || rating_noise_std < 0.0 {
        return Err(Error::invalid(format!("noise std must be non-negative, got {rating_noise_std}")));
    }
    let mut session = protocol.with_ratings(&vec![0.0; protocol.blocks.len()])?;
    let median = median_time_delta(&session)?;
    let spectra = ModelSpectra::new(params)?;
    let noise = Normal::new(0.0, rating_noise_std).map_err(|e| Error::invalid(format!("noise: {e}")))?;
    let mut rng = stream(protocol.seed, NOISE_STREAM);

    let mut psi = StateVector::gaussian(session.initial_rating / 10.0, params.collapse_std)?;
    for block in &mut session.blocks {
        for (t, trial) in block.trials.iter().enumerate() {
            let dt = if t == 0 { median } else { trial.time_delta };
            psi = spectra.step(&psi, trial.outcome, dt);
        }
        let mut rating = 10.0 * psi.expected_rating();
        if rating_noise_std > 0.0 {
            rating += noise.sample(&mut rng);
        }
        block.reported_rating = rating.clamp(0.0, 100.0);
        psi = psi.collapse(block.reported_rating, params.collapse_std)?;
    }
    Ok(session)
}
