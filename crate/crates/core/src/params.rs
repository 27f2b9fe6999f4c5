use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::LambdaMeasure;

/// Outcome of comparing σ with σ*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AssumptionCheck {
    Ok,
    Violated { sigma_star: f64 },
}

/// Model parameters `(Λ, σ, θ, ν0, ν1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: LambdaMeasure,
    pub sigma: f64,
    pub theta: f64,
    pub nu0: f64,
    pub nu1: f64,
    /// Set when the caller opted out of the recurrence check.
    pub unchecked: bool,
}

impl ModelParams {
    /// Validated parameters; fails unless `σ < σ*`.
    pub fn new(lambda: LambdaMeasure, sigma: f64, theta: f64, nu0: f64) -> Result<Self> {
        let params = Self { unchecked: false, ..Self::unchecked(lambda, sigma, theta, nu0)? };
        params.require_recurrent()?;
        Ok(params)
    }

    /// Range-checked parameters that skip the recurrence check.
    pub fn unchecked(lambda: LambdaMeasure, sigma: f64, theta: f64, nu0: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta must be finite and >= 0, got {theta}")));
        }
        if !(0.0..=1.0).contains(&nu0) {
            return Err(Error::InvalidParameter(format!("nu0 must lie in [0, 1], got {nu0}")));
        }
        Ok(Self { lambda, sigma, theta, nu0, nu1: 1.0 - nu0, unchecked: true })
    }

    pub fn check_assumption(&self) -> AssumptionCheck {
        let sigma_star = self.lambda.sigma_star();
        if self.sigma < sigma_star {
            AssumptionCheck::Ok
        } else {
            AssumptionCheck::Violated { sigma_star }
        }
    }

    /// Error unless the check passes or the parameters were built unchecked.
    pub fn require_recurrent(&self) -> Result<()> {
        match self.check_assumption() {
            AssumptionCheck::Ok => Ok(()),
            AssumptionCheck::Violated { .. } if self.unchecked => {
                log::warn!("sigma = {} is not below sigma*; continuing unchecked", self.sigma);
                Ok(())
            }
            AssumptionCheck::Violated { sigma_star } => Err(Error::AssumptionViolated { sigma: self.sigma, sigma_star }),
        }
    }

    /// Deleterious mutation rate `θν1`.
    pub fn theta_nu1(&self) -> f64 {
        self.theta * self.nu1
    }

    /// Beneficial mutation rate `θν0`.
    pub fn theta_nu0(&self) -> f64 {
        self.theta * self.nu0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assumption_examples() {
        let p = ModelParams::unchecked(LambdaMeasure::point(0.5).unwrap(), 1.0, 0.0, 0.5).unwrap();
        assert_eq!(p.check_assumption(), AssumptionCheck::Ok);
        let p = ModelParams::unchecked(LambdaMeasure::point(0.5).unwrap(), 5.0, 0.0, 0.5).unwrap();
        match p.check_assumption() {
            AssumptionCheck::Violated { sigma_star } => assert!((sigma_star - 2.7726).abs() < 1e-4),
            AssumptionCheck::Ok => panic!("expected violation"),
        }
        let p = ModelParams::new(LambdaMeasure::kingman(), 1e6, 0.0, 0.5).unwrap();
        assert_eq!(p.check_assumption(), AssumptionCheck::Ok);
    }

    #[test]
    fn construction_gates() {
        assert!(matches!(
            ModelParams::new(LambdaMeasure::point(0.5).unwrap(), 5.0, 0.0, 0.5),
            Err(Error::AssumptionViolated { .. })
        ));
        let p = ModelParams::unchecked(LambdaMeasure::point(0.5).unwrap(), 5.0, 0.0, 0.5).unwrap();
        assert!(p.require_recurrent().is_ok());
        assert!(ModelParams::new(LambdaMeasure::kingman(), -1.0, 0.0, 0.5).is_err());
        assert!(ModelParams::new(LambdaMeasure::kingman(), 1.0, 0.0, 1.5).is_err());
        let p = ModelParams::new(LambdaMeasure::kingman(), 1.0, 2.0, 0.25).unwrap();
        assert_eq!(p.theta_nu0(), 0.5);
        assert_eq!(p.theta_nu1(), 1.5);
    }
}
