//! Huber, Tukey bisquare and exponential squared loss (ESL) families.
//!
//! `psi` follows the conventional estimating-equation kernels rather than the
//! literal derivative of `rho`: for Tukey `ρ' = (6/c²)ψ`, for ESL `ρ' = (2/c)ψ`.
//! IRLS fixed points and the efficiency factor are unchanged by a positive
//! rescaling of ψ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossFamily {
    Huber,
    Tukey,
    Esl,
}

/// A loss family together with its tuning constant `c > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    family: LossFamily,
    c: f64,
}

impl LossSpec {
    pub fn new(family: LossFamily, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidLoss(format!(
                "tuning constant must be positive and finite, got {c}"
            )));
        }
        Ok(Self { family, c })
    }

    pub fn huber(c: f64) -> Result<Self> {
        Self::new(LossFamily::Huber, c)
    }

    pub fn tukey(c: f64) -> Result<Self> {
        Self::new(LossFamily::Tukey, c)
    }

    pub fn esl(c: f64) -> Result<Self> {
        Self::new(LossFamily::Esl, c)
    }

    pub fn family(&self) -> LossFamily {
        self.family
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn rho(&self, u: f64) -> f64 {
        let c = self.c;
        match self.family {
            LossFamily::Huber => {
                let a = u.abs();
                if a <= c {
                    0.5 * u * u
                } else {
                    c * a - 0.5 * c * c
                }
            }
            LossFamily::Tukey => {
                if u.abs() <= c {
                    let v = 1.0 - (u / c).powi(2);
                    1.0 - v * v * v
                } else {
                    1.0
                }
            }
            LossFamily::Esl => 1.0 - (-u * u / c).exp(),
        }
    }

    pub fn psi(&self, u: f64) -> f64 {
        let c = self.c;
        match self.family {
            LossFamily::Huber => u.clamp(-c, c),
            LossFamily::Tukey => {
                if u.abs() <= c {
                    let v = 1.0 - (u / c).powi(2);
                    u * v * v
                } else {
                    0.0
                }
            }
            LossFamily::Esl => u * (-u * u / c).exp(),
        }
    }

    /// Derivative of [`psi`](Self::psi); Huber's kink takes the inner value 1.
    pub fn psi_prime(&self, u: f64) -> f64 {
        let c = self.c;
        match self.family {
            LossFamily::Huber => {
                if u.abs() <= c {
                    1.0
                } else {
                    0.0
                }
            }
            LossFamily::Tukey => {
                if u.abs() <= c {
                    let v = (u / c).powi(2);
                    (1.0 - v) * (1.0 - 5.0 * v)
                } else {
                    0.0
                }
            }
            LossFamily::Esl => {
                let v = u * u / c;
                (-v).exp() * (1.0 - 2.0 * v)
            }
        }
    }

    /// IRLS weight `ψ(u)/u`, with the limit `ψ'(0)` at zero.
    pub fn weight(&self, u: f64) -> f64 {
        let c = self.c;
        match self.family {
            LossFamily::Huber => {
                let a = u.abs();
                if a <= c {
                    1.0
                } else {
                    c / a
                }
            }
            LossFamily::Tukey => {
                if u.abs() <= c {
                    let v = 1.0 - (u / c).powi(2);
                    v * v
                } else {
                    0.0
                }
            }
            LossFamily::Esl => (-u * u / c).exp(),
        }
    }

    /// `sup_u |ψ(u)|`.
    pub fn psi_bound(&self) -> f64 {
        let c = self.c;
        match self.family {
            LossFamily::Huber => c,
            // attained at u = c/√5
            LossFamily::Tukey => 16.0 * c / (25.0 * 5f64.sqrt()),
            // attained at u = √(c/2)
            LossFamily::Esl => (c / 2.0).sqrt() * (-0.5f64).exp(),
        }
    }

    /// Positive constant `k` with `ρ'(u) = k ψ(u)` on the whole line.
    pub fn rho_psi_ratio(&self) -> f64 {
        match self.family {
            LossFamily::Huber => 1.0,
            LossFamily::Tukey => 6.0 / (self.c * self.c),
            LossFamily::Esl => 2.0 / self.c,
        }
    }
}
