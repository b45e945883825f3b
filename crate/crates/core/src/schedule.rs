//! Fixed step-size schedules. All schedules are 1-indexed.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// γ(n) = γ₀.
    Constant { gamma0: f64 },
    /// γ(n) = a / (b + nᵅ).
    GeneralDecay { a: f64, b: f64, alpha: f64 },
    /// γ(n) = 1 / (μ·(n + offset)).
    InverseMuN { mu: f64, offset: f64 },
    /// γ(n) = c / √n.
    InverseSqrt { c: f64 },
    /// γ(n) = N^{−1/(τ+1)}, constant over a fixed horizon N.
    UcOptimal { tau: f64, horizon: u64 },
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Schedule::Constant { gamma0 } => *gamma0 > 0.0,
            Schedule::GeneralDecay { a, b, alpha } => *a > 0.0 && *b >= 0.0 && *alpha >= 0.0,
            Schedule::InverseMuN { mu, offset } => *mu > 0.0 && *offset >= 0.0,
            Schedule::InverseSqrt { c } => *c > 0.0,
            Schedule::UcOptimal { tau, horizon } => *tau > 0.0 && *horizon >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "schedule parameters do not yield positive step sizes: {self:?}"
            )))
        }
    }
}

/// Step size at iteration n ≥ 1.
pub fn schedule_eval(schedule: &Schedule, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "schedules are 1-indexed; n must be at least 1".into(),
        ));
    }
    let nf = n as f64;
    Ok(match schedule {
        Schedule::Constant { gamma0 } => *gamma0,
        Schedule::GeneralDecay { a, b, alpha } => a / (b + nf.powf(*alpha)),
        Schedule::InverseMuN { mu, offset } => 1.0 / (mu * (nf + offset)),
        Schedule::InverseSqrt { c } => c / nf.sqrt(),
        Schedule::UcOptimal { tau, horizon } => (*horizon as f64).powf(-1.0 / (tau + 1.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_examples() {
        let s = Schedule::Constant { gamma0: 0.05 };
        assert_eq!(schedule_eval(&s, 999).unwrap(), 0.05);

        let s = Schedule::InverseMuN {
            mu: 2.0,
            offset: 0.0,
        };
        assert!((schedule_eval(&s, 10).unwrap() - 0.05).abs() < 1e-15);

        let s = Schedule::InverseSqrt { c: 1.0 };
        assert!((schedule_eval(&s, 100).unwrap() - 0.1).abs() < 1e-15);

        let s = Schedule::GeneralDecay {
            a: 2.0,
            b: 1.0,
            alpha: 0.5,
        };
        assert!((schedule_eval(&s, 4).unwrap() - 2.0 / 3.0).abs() < 1e-15);

        let s = Schedule::UcOptimal {
            tau: 0.2,
            horizon: 100_000,
        };
        let expect = (100_000f64).powf(-1.0 / 1.2);
        assert_eq!(schedule_eval(&s, 1).unwrap(), expect);
        assert_eq!(schedule_eval(&s, 99_999).unwrap(), expect);
    }

    #[test]
    fn zero_iteration_is_an_error() {
        assert!(schedule_eval(&Schedule::Constant { gamma0: 0.1 }, 0).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn valid_schedules_stay_positive(
                gamma0 in 1e-9f64..1e3,
                a in 1e-9f64..1e3,
                b in 0.0f64..1e3,
                alpha in 0.0f64..2.0,
                n in 1u64..1_000_000,
            ) {
                for s in [
                    Schedule::Constant { gamma0 },
                    Schedule::GeneralDecay { a, b, alpha },
                    Schedule::InverseMuN { mu: a, offset: b },
                    Schedule::InverseSqrt { c: a },
                ] {
                    s.validate().unwrap();
                    prop_assert!(schedule_eval(&s, n).unwrap() > 0.0);
                }
            }
        }
    }

    #[test]
    fn validation_rejects_nonpositive() {
        assert!(Schedule::Constant { gamma0: 0.0 }.validate().is_err());
        assert!(Schedule::InverseMuN {
            mu: -1.0,
            offset: 0.0
        }
        .validate()
        .is_err());
    }
}
