//! Interaction-dependent Hamiltonians.
//!
//! Match trials use `H+` (diagonal rising in steps of `alpha`), mismatch
//! trials `H-` (falling in steps of `beta`), and no-response trials `H0`
//! (constant diagonal 1). All three share the uniform coupling `sigma`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymTridiagonal;
use crate::state::{level_midpoints, LEVELS};

/// Center of the ten level midpoints; the gradients are antisymmetric about it.
const LEVEL_CENTER: f64 = 5.0;

pub const GAMMA_BOUNDS: (f64, f64) = (0.01, 1.0);
pub const SLOPE_BOUNDS: (f64, f64) = (0.01, 10.0);
pub const DEFAULT_COLLAPSE_STD: f64 = 0.75;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Match,
    Mismatch,
    NoResponse,
}

impl TrialOutcome {
    pub const ALL: [TrialOutcome; 3] = [
        TrialOutcome::Match,
        TrialOutcome::Mismatch,
        TrialOutcome::NoResponse,
    ];

    /// Lowercase wire name used in session files.
    pub fn as_str(self) -> &'static str {
        match self {
            TrialOutcome::Match => "match",
            TrialOutcome::Mismatch => "mismatch",
            TrialOutcome::NoResponse => "no_response",
        }
    }

    pub fn from_wire(s: &str) -> Option<Self> {
        match s {
            "match" => Some(TrialOutcome::Match),
            "mismatch" => Some(TrialOutcome::Mismatch),
            "no_response" => Some(TrialOutcome::NoResponse),
            _ => None,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            TrialOutcome::Match => 0,
            TrialOutcome::Mismatch => 1,
            TrialOutcome::NoResponse => 2,
        }
    }
}

/// Model parameters.
///
/// `gamma` scales elapsed time in the propagator exponent, `alpha` and
/// `beta` are the match and mismatch slopes, `sigma` the nearest-level
/// coupling, and `collapse_std` the Gaussian spread (in level units) used
/// to prepare and re-prepare the state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub collapse_std: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            gamma: 0.1,
            alpha: 1.0,
            beta: 1.0,
            sigma: 1.0,
            collapse_std: DEFAULT_COLLAPSE_STD,
        }
    }
}

impl ModelParams {
    pub fn new(gamma: f64, alpha: f64, beta: f64, sigma: f64, collapse_std: f64) -> Self {
        ModelParams {
            gamma,
            alpha,
            beta,
            sigma,
            collapse_std,
        }
    }

    /// Checks the hard requirements: finite values, `gamma > 0`,
    /// `collapse_std > 0`. Values outside the fit box are allowed; see
    /// [`ModelParams::out_of_fit_bounds`].
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("sigma", self.sigma),
            ("collapse_std", self.collapse_std),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    what: format!("parameter {name}"),
                });
            }
        }
        if self.gamma <= 0.0 {
            return Err(Error::invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.collapse_std <= 0.0 {
            return Err(Error::invalid(format!(
                "collapse_std must be positive, got {}",
                self.collapse_std
            )));
        }
        Ok(())
    }

    /// Names of the parameters lying outside the default fit box.
    pub fn out_of_fit_bounds(&self) -> Vec<&'static str> {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        let mut out = Vec::new();
        if !inside(self.gamma, GAMMA_BOUNDS) {
            out.push("gamma");
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("sigma", self.sigma)] {
            if !inside(v, SLOPE_BOUNDS) {
                out.push(name);
            }
        }
        out
    }

    pub(crate) fn fitted(&self) -> [f64; 4] {
        [self.gamma, self.alpha, self.beta, self.sigma]
    }

    pub(crate) fn from_fitted(x: [f64; 4], collapse_std: f64) -> Self {
        ModelParams::new(x[0], x[1], x[2], x[3], collapse_std)
    }
}

/// The 10x10 Hamiltonian for a trial outcome.
pub fn build_hamiltonian(outcome: TrialOutcome, params: &ModelParams) -> Result<SymTridiagonal> {
    params.validate()?;
    let levels = level_midpoints();
    let diagonal: Vec<f64> = match outcome {
        TrialOutcome::Match => levels.iter().map(|x| (x - LEVEL_CENTER) * params.alpha).collect(),
        TrialOutcome::Mismatch => levels.iter().map(|x| (LEVEL_CENTER - x) * params.beta).collect(),
        TrialOutcome::NoResponse => vec![1.0; LEVELS],
    };
    SymTridiagonal::with_uniform_coupling(diagonal, params.sigma)
}

/// Generic potential Hamiltonian: diagonal `mu`, uniform off-diagonal `sigma2`.
pub fn build_generic(mu: &[f64], sigma2: f64) -> Result<SymTridiagonal> {
    SymTridiagonal::with_uniform_coupling(mu.to_vec(), sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn match_hamiltonian_display() {
        let p = ModelParams::new(0.1, 1.0, 3.0, 0.5, 0.75);
        let h = build_hamiltonian(TrialOutcome::Match, &p).unwrap();
        assert_eq!(
            h.diagonal(),
            &[-4.5, -3.5, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 3.5, 4.5]
        );
        assert_eq!(h.offdiagonal(), &[0.5; 9]);
    }

    #[test]
    fn no_response_hamiltonian_is_constant() {
        let p = ModelParams::new(0.1, 7.0, 3.0, 0.3, 0.75);
        let h = build_hamiltonian(TrialOutcome::NoResponse, &p).unwrap();
        assert_eq!(h.diagonal(), &[1.0; 10]);
        assert_eq!(h.offdiagonal(), &[0.3; 9]);
    }

    #[test]
    fn mismatch_hamiltonian_substitution() {
        let p = ModelParams::new(0.1, 1.0, 2.0, 1.0, 0.75);
        let h = build_hamiltonian(TrialOutcome::Mismatch, &p).unwrap();
        assert_eq!(h.diagonal(), &[9.0, 7.0, 5.0, 3.0, 1.0, -1.0, -3.0, -5.0, -7.0, -9.0]);
        assert_eq!(h.offdiagonal(), &[1.0; 9]);
    }

    #[test]
    fn generic_builder() {
        let zero = build_generic(&[0.0; 5], 0.0).unwrap();
        assert!(zero.to_dense().max_abs_diff(&crate::linalg::RealMatrix::from_fn(5, |_, _| 0.0)) == 0.0);

        let linear: Vec<f64> = (0..5).map(|x| 1.0 * x as f64).collect();
        let h = build_generic(&linear, 0.0).unwrap();
        assert_eq!(h.diagonal(), &[0.0, 1.0, 2.0, 3.0, 4.0]);

        let h = build_generic(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.25).unwrap();
        let dense = h.to_dense();
        assert_eq!(dense, dense.transpose());
        assert_eq!(dense.get(1, 2), 0.25);
        assert_eq!(dense.get(0, 2), 0.0);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = ModelParams { gamma: 0.0, ..Default::default() };
        assert!(build_hamiltonian(TrialOutcome::Match, &p).is_err());
        let p = ModelParams { collapse_std: -1.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ModelParams { sigma: f64::NAN, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn out_of_bounds_flagged_not_rejected() {
        let p = ModelParams::new(2.0, 0.001, 1.0, 11.0, 0.75);
        assert!(p.validate().is_ok());
        assert_eq!(p.out_of_fit_bounds(), vec!["gamma", "alpha", "sigma"]);
        assert!(ModelParams::default().out_of_fit_bounds().is_empty());
    }

    #[test]
    fn wire_names() {
        for o in TrialOutcome::ALL {
            assert_eq!(TrialOutcome::from_wire(o.as_str()), Some(o));
        }
        assert_eq!(TrialOutcome::from_wire("Match"), None);
    }
}
