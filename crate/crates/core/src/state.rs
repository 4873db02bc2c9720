//! Cognitive state over ten reliability levels.
//!
//! Level `i` covers ratings `10 i` to `10 (i + 1)` percent and sits at the
//! midpoint `i + 0.5`. Ratings enter in percent and are divided by ten here.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexVector;

pub const LEVELS: usize = 10;

/// Tolerance on `sum |psi_i|^2 = 1` accepted when wrapping raw amplitudes.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Moduli at or below this are treated as carrying no phase.
const PHASE_FLOOR: f64 = 1e-14;

pub fn level_midpoints() -> [f64; LEVELS] {
    std::array::from_fn(|i| i as f64 + 0.5)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: ComplexVector,
}

/// Unnormalized Gaussian amplitude profile sampled at the level midpoints,
/// rescaled to unit Euclidean norm.
fn gaussian_moduli(mean: f64, std: f64) -> [f64; LEVELS] {
    let mut a = level_midpoints().map(|x| (-(x - mean).powi(2) / (2.0 * std * std)).exp());
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut a {
        *v /= norm;
    }
    a
}

fn check_std(std: f64) -> Result<()> {
    if !std.is_finite() || std <= 0.0 {
        return Err(Error::invalid(format!("std must be positive and finite, got {std}")));
    }
    Ok(())
}

fn check_rating_percent(rating: f64) -> Result<()> {
    if !rating.is_finite() || !(0.0..=100.0).contains(&rating) {
        return Err(Error::invalid(format!("rating must lie in [0, 100], got {rating}")));
    }
    Ok(())
}

impl StateVector {
    /// Wraps amplitudes after checking the length and normalization.
    pub fn from_amplitudes(amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.len() != LEVELS {
            return Err(Error::DimensionMismatch {
                expected: LEVELS,
                found: amplitudes.len(),
            });
        }
        let drift = (amplitudes.norm_sqr() - 1.0).abs();
        if drift > NORM_TOLERANCE {
            return Err(Error::invalid(format!("state is not normalized (|norm^2 - 1| = {drift:e})")));
        }
        Ok(StateVector { amplitudes })
    }

    /// Wraps amplitudes produced by unitary evolution of a valid state.
    pub(crate) fn from_evolved(amplitudes: ComplexVector) -> Self {
        debug_assert_eq!(amplitudes.len(), LEVELS);
        StateVector { amplitudes }
    }

    /// Real, phase-free Gaussian state centred on `mean` (level units).
    pub fn gaussian(mean: f64, std: f64) -> Result<Self> {
        check_std(std)?;
        if !mean.is_finite() || !(0.0..=10.0).contains(&mean) {
            return Err(Error::invalid(format!("mean must lie in [0, 10], got {mean}")));
        }
        let moduli = gaussian_moduli(mean, std);
        Ok(StateVector {
            amplitudes: ComplexVector::from_real(&moduli)?,
        })
    }

    /// All weight on a single level.
    pub fn basis(level: usize) -> Result<Self> {
        if level >= LEVELS {
            return Err(Error::invalid(format!("level index {level} out of range")));
        }
        let mut a = [0.0; LEVELS];
        a[level] = 1.0;
        Ok(StateVector {
            amplitudes: ComplexVector::from_real(&a)?,
        })
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    /// Re-prepares the moduli as a Gaussian centred on `rating_percent / 10`
    /// while keeping each amplitude's phase. Zero-modulus entries get phase 0.
    pub fn collapse(&self, rating_percent: f64, std: f64) -> Result<Self> {
        check_std(std)?;
        check_rating_percent(rating_percent)?;
        Ok(self.collapse_unchecked(rating_percent / 10.0, std))
    }

    pub(crate) fn collapse_unchecked(&self, mean_level: f64, std: f64) -> Self {
        let moduli = gaussian_moduli(mean_level, std);
        let amplitudes = self
            .amplitudes
            .entries()
            .iter()
            .zip(moduli)
            .map(|(z, m)| {
                let r = z.norm();
                if r > PHASE_FLOOR {
                    z * (m / r)
                } else {
                    Complex64::new(m, 0.0)
                }
            })
            .collect();
        StateVector {
            amplitudes: ComplexVector::new(amplitudes).expect("finite Gaussian moduli"),
        }
    }

    /// Squared moduli per level.
    pub fn propensities(&self) -> [f64; LEVELS] {
        let e = self.amplitudes.entries();
        std::array::from_fn(|i| e[i].norm_sqr())
    }

    /// Propensity-weighted mean of the level midpoints.
    pub fn expected_rating(&self) -> f64 {
        self.propensities()
            .iter()
            .zip(level_midpoints())
            .map(|(p, x)| p * x)
            .sum()
    }

    /// Midpoint of the most probable level (lowest index on ties).
    pub fn mode_rating(&self) -> f64 {
        let p = self.propensities();
        let mut best = 0;
        for i in 1..LEVELS {
            if p[i] > p[best] {
                best = i;
            }
        }
        best as f64 + 0.5
    }

    pub fn read(&self, readout: Readout) -> f64 {
        match readout {
            Readout::Expectation => self.expected_rating(),
            Readout::Mode => self.mode_rating(),
        }
    }
}

/// How a modeled rating (level units) is read out of the state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    #[default]
    Expectation,
    Mode,
}

pub fn gaussian_state(mean: f64, std: f64) -> Result<StateVector> {
    StateVector::gaussian(mean, std)
}

pub fn collapse(psi: &StateVector, reported_rating: f64, std: f64) -> Result<StateVector> {
    psi.collapse(reported_rating, std)
}

pub fn expected_rating(psi: &StateVector) -> f64 {
    psi.expected_rating()
}

pub fn propensities(psi: &StateVector) -> [f64; LEVELS] {
    psi.propensities()
}
