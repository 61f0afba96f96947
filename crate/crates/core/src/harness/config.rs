use serde::{Deserialize, Serialize};

use crate::bdmath::{RateParams, SamplingFrame};
use crate::{Error, Result};

/// How the sampling time is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TRule {
    Explicit(f64),
    /// `T = c ln n / r`
    LogScaled(f64),
    /// `T = (2 ln n + ln ln n + 5) / r`
    CltDefault,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Forward,
    Contour,
    Coalescent,
    Approx,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Forward => "forward",
            Mode::Contour => "contour",
            Mode::Coalescent => "coalescent",
            Mode::Approx => "approx",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Mode::Forward),
            "contour" => Ok(Mode::Contour),
            "coalescent" => Ok(Mode::Coalescent),
            "approx" => Ok(Mode::Approx),
            other => Err(Error::UnsupportedMode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: RateParams,
    pub n: usize,
    pub t_rule: TRule,
    pub reps: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Frequency class for per-class experiments.
    pub k: usize,
}

impl ExperimentConfig {
    pub fn horizon(&self) -> f64 {
        let ln_n = (self.n as f64).ln();
        match self.t_rule {
            TRule::Explicit(t) => t,
            TRule::LogScaled(c) => c * ln_n / self.params.r(),
            TRule::CltDefault => (2.0 * ln_n + ln_n.ln() + 5.0) / self.params.r(),
        }
    }

    pub fn frame(&self) -> Result<SamplingFrame> {
        SamplingFrame::new(self.n, self.horizon())
    }

    pub(crate) fn require_reps(&self, needed: usize) -> Result<()> {
        if self.reps < needed {
            return Err(Error::EmptyExperiment {
                needed,
                got: self.reps,
            });
        }
        Ok(())
    }

    /// `n e^{-rT}`, which must be small for the law of large numbers.
    pub fn lln_proxy(&self) -> f64 {
        self.n as f64 * (-self.params.r() * self.horizon()).exp()
    }

    /// `n^{3/2} ln n e^{-rT}`, which must be small for the central limit
    /// theorem.
    pub fn clt_proxy(&self) -> f64 {
        let n = self.n as f64;
        n.powf(1.5) * n.ln() * (-self.params.r() * self.horizon()).exp()
    }

    pub(crate) fn check_lln_regime(&self) -> Result<()> {
        let v = self.lln_proxy();
        if !(v < 0.1) {
            return Err(Error::ConditionViolated(format!(
                "n e^(-rT) = {v:.3e} must be below 0.1 (n={}, T={})",
                self.n,
                self.horizon()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_clt_regime(&self) -> Result<()> {
        let v = self.clt_proxy();
        if !(v < 0.1) {
            return Err(Error::ConditionViolated(format!(
                "n^1.5 ln(n) e^(-rT) = {v:.3e} must be below 0.1 (n={}, T={})",
                self.n,
                self.horizon()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(t_rule: TRule) -> ExperimentConfig {
        ExperimentConfig {
            params: RateParams::new(2.0, 1.0, 0.0).unwrap(),
            n: 2000,
            t_rule,
            reps: 10,
            seed: 1,
            mode: Mode::Coalescent,
            k: 2,
        }
    }

    #[test]
    fn horizon_rules() {
        let ln = 2000f64.ln();
        assert_eq!(cfg(TRule::Explicit(3.0)).horizon(), 3.0);
        assert!((cfg(TRule::LogScaled(2.0)).horizon() - 2.0 * ln).abs() < 1e-12);
        assert!((cfg(TRule::CltDefault).horizon() - (2.0 * ln + ln.ln() + 5.0)).abs() < 1e-12);
    }

    #[test]
    fn regime_guards() {
        assert!(cfg(TRule::LogScaled(2.0)).check_lln_regime().is_ok());
        assert!(cfg(TRule::LogScaled(1.0)).check_lln_regime().is_err());
        assert!(cfg(TRule::CltDefault).check_clt_regime().is_ok());
        // e^{-5} / sqrt(n) by construction
        let c = cfg(TRule::CltDefault);
        assert!((c.clt_proxy() - (-5f64).exp() / 2000f64.sqrt()).abs() < 1e-12);
        assert!(cfg(TRule::LogScaled(2.0)).check_clt_regime().is_err());
    }

    #[test]
    fn mode_names_roundtrip() {
        for m in [Mode::Forward, Mode::Contour, Mode::Coalescent, Mode::Approx] {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert!("bogus".parse::<Mode>().is_err());
    }
}
