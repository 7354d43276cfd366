use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Penalty family for the per-degree-of-freedom price `C`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PenaltyKind {
    Bic,
    Aic,
    #[default]
    Ebic,
    Custom(f64),
}

impl PenaltyKind {
    /// `C` for a fit on `n` samples and `p` features.
    pub fn constant(self, n: usize, p: usize) -> f64 {
        let ln_n = (n as f64).ln();
        match self {
            PenaltyKind::Bic => ln_n,
            PenaltyKind::Aic => 2.0,
            PenaltyKind::Ebic => ln_n + 2.0 * (p as f64).ln(),
            PenaltyKind::Custom(c) => c,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::Bic => "bic",
            PenaltyKind::Aic => "aic",
            PenaltyKind::Ebic => "ebic",
            PenaltyKind::Custom(_) => "custom",
        }
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltyKind::Custom(c) => write!(f, "custom:{c}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "bic" => Ok(PenaltyKind::Bic),
            "aic" => Ok(PenaltyKind::Aic),
            "ebic" => Ok(PenaltyKind::Ebic),
            _ => match lower.strip_prefix("custom:") {
                Some(v) => {
                    let c: f64 = v.parse().map_err(|_| {
                        Error::InvalidArgument(format!("custom penalty `{v}` is not a number"))
                    })?;
                    if !c.is_finite() || c < 0.0 {
                        return Err(Error::InvalidArgument(format!(
                            "custom penalty must be finite and non-negative, got {c}"
                        )));
                    }
                    Ok(PenaltyKind::Custom(c))
                }
                None => Err(Error::InvalidArgument(format!(
                    "unknown penalty `{s}` (expected ebic, bic, aic or custom:<C>)"
                ))),
            },
        }
    }
}

/// A resolved penalty: the family and its constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub kind: String,
    #[serde(rename = "C")]
    pub c: f64,
}

impl PenaltyConfig {
    pub fn resolve(kind: PenaltyKind, n: usize, p: usize) -> Result<Self> {
        let c = kind.constant(n, p);
        Self::new(kind.name(), c)
    }

    pub fn new(kind: &str, c: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "penalty constant must be finite and non-negative, got {c}"
            )));
        }
        let kind = match kind {
            "bic" | "aic" | "ebic" | "custom" => kind,
            other => {
                return Err(Error::InvalidArgument(format!("unknown penalty kind `{other}`")))
            }
        };
        Ok(PenaltyConfig {
            kind: kind.to_string(),
            c,
        })
    }
}

/// How class priors enter the discriminant score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PriorTermMode {
    /// `log pi_k`, the multinomial log-likelihood term.
    #[default]
    Log,
    /// `pi_k log pi_k`.
    Plogp,
}

impl PriorTermMode {
    pub fn term(self, pi: f64) -> f64 {
        match self {
            PriorTermMode::Log => pi.ln(),
            PriorTermMode::Plogp => pi * pi.ln(),
        }
    }
}

impl fmt::Display for PriorTermMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriorTermMode::Log => "log",
            PriorTermMode::Plogp => "plogp",
        })
    }
}

impl FromStr for PriorTermMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "log" => Ok(PriorTermMode::Log),
            "plogp" => Ok(PriorTermMode::Plogp),
            other => Err(Error::InvalidArgument(format!(
                "unknown prior term `{other}` (expected log or plogp)"
            ))),
        }
    }
}
