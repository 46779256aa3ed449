//! Smooth utility functions with derivatives of every order the expansion
//! needs.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ValueFn = dyn Fn(f64) -> f64 + Send + Sync;
type DerivFn = dyn Fn(usize, f64) -> f64 + Send + Sync;

/// A user-supplied utility: `value(w)` and `derivative(k, w) = U^(k)(w)` for
/// `1 ≤ k ≤ max_order`.
#[derive(Clone)]
pub struct CustomUtility {
    pub name: String,
    value: Arc<ValueFn>,
    derivative: Arc<DerivFn>,
    max_order: usize,
}

impl fmt::Debug for CustomUtility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomUtility").field("name", &self.name).field("max_order", &self.max_order).finish()
    }
}

#[derive(Debug, Clone)]
pub enum UtilitySpec {
    /// `−e^{−aw}`.
    Exponential { a: f64 },
    /// `w^{1−η}/(1−η)` for `w > 0`, `η > 0`, `η ≠ 1`.
    Power { eta: f64 },
    /// `ln w`.
    Log,
    /// `w − b w²`.
    Quadratic { b: f64 },
    Custom(CustomUtility),
}

/// Derivative orders are unbounded for the built-in families; this is the
/// cap reported by [`UtilitySpec::max_order`].
pub const UNBOUNDED_ORDER: usize = usize::MAX;

impl UtilitySpec {
    pub fn exponential(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("risk aversion must be positive, got {a}")));
        }
        Ok(Self::Exponential { a })
    }

    pub fn power(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) || eta == 1.0 {
            return Err(Error::InvalidParameter(format!(
                "power utility needs eta > 0, eta != 1 (use log for eta = 1), got {eta}"
            )));
        }
        Ok(Self::Power { eta })
    }

    pub fn quadratic(b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("quadratic coefficient must be positive, got {b}")));
        }
        Ok(Self::Quadratic { b })
    }

    /// Registers a custom utility after checking each derivative against a
    /// finite difference of the one below it at the `probes`.
    pub fn custom<V, D>(name: &str, value: V, derivative: D, max_order: usize, probes: &[f64]) -> Result<Self>
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(usize, f64) -> f64 + Send + Sync + 'static,
    {
        if max_order < 1 {
            return Err(Error::UtilityValidation("max_order must be at least 1".into()));
        }
        let u = Self::Custom(CustomUtility {
            name: name.to_string(),
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            max_order,
        });
        u.validate(probes, max_order)?;
        Ok(u)
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Exponential { .. } => "exponential",
            Self::Power { .. } => "power",
            Self::Log => "log",
            Self::Quadratic { .. } => "quadratic",
            Self::Custom(c) => &c.name,
        }
    }

    pub fn max_order(&self) -> usize {
        match self {
            Self::Custom(c) => c.max_order,
            _ => UNBOUNDED_ORDER,
        }
    }

    pub fn value(&self, w: f64) -> f64 {
        match self {
            Self::Exponential { a } => -(-a * w).exp(),
            Self::Power { eta } => {
                if w > 0.0 {
                    w.powf(1.0 - eta) / (1.0 - eta)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::Log => {
                if w > 0.0 {
                    w.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::Quadratic { b } => w - b * w * w,
            Self::Custom(c) => (c.value)(w),
        }
    }

    /// `U^(k)(w)`; `k = 0` is the value itself. Orders above
    /// [`max_order`](Self::max_order) return `NaN`.
    pub fn derivative(&self, k: usize, w: f64) -> f64 {
        if k == 0 {
            return self.value(w);
        }
        match self {
            Self::Exponential { a } => {
                let sign = if k.is_multiple_of(2) { -1.0 } else { 1.0 };
                sign * a.powi(k as i32) * (-a * w).exp()
            }
            Self::Power { eta } => {
                // d^k/dw^k w^{1−η}/(1−η) = (−η)(−η−1)…(−η−k+2) w^{1−η−k}.
                let coef: f64 = (0..k - 1).map(|j| -eta - j as f64).product();
                coef * w.powf(1.0 - eta - k as f64)
            }
            Self::Log => {
                let fact: f64 = (1..k).map(|j| j as f64).product();
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * fact * w.powi(-(k as i32))
            }
            Self::Quadratic { b } => match k {
                1 => 1.0 - 2.0 * b * w,
                2 => -2.0 * b,
                _ => 0.0,
            },
            Self::Custom(c) => {
                if k > c.max_order {
                    f64::NAN
                } else {
                    (c.derivative)(k, w)
                }
            }
        }
    }

    /// `−U'(w)/U''(w)`, the local risk tolerance.
    pub fn risk_tolerance(&self, w: f64) -> f64 {
        -self.derivative(1, w) / self.derivative(2, w)
    }

    /// Checks `U^(k)` against a Richardson-extrapolated central difference of
    /// `U^(k−1)` for `1 ≤ k ≤ min(orders, max_order)` at each probe.
    pub fn validate(&self, probes: &[f64], orders: usize) -> Result<()> {
        const REL_TOL: f64 = 1e-5;
        let top = orders.min(self.max_order());
        for &w in probes {
            let h = 1e-3 * w.abs().max(1.0);
            for k in 1..=top {
                let f = |x: f64| self.derivative(k - 1, x);
                let d = |h: f64| (f(w + h) - f(w - h)) / (2.0 * h);
                let fd = (4.0 * d(0.5 * h) - d(h)) / 3.0;
                let exact = self.derivative(k, w);
                if !exact.is_finite() || !fd.is_finite() {
                    return Err(Error::UtilityValidation(format!(
                        "order {k} derivative of {} is not finite at w = {w}",
                        self.name()
                    )));
                }
                let scale = exact.abs().max(fd.abs()).max(1e-8 * f(w).abs()).max(f64::MIN_POSITIVE);
                if (exact - fd).abs() > REL_TOL * scale {
                    return Err(Error::UtilityValidation(format!(
                        "order {k} derivative of {} at w = {w} is {exact}, finite difference gives {fd}",
                        self.name()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PROBES: [f64; 5] = [0.5, 0.8, 1.0, 1.3, 2.0];

    #[test]
    fn builtins_pass_their_own_validation() {
        for u in [
            UtilitySpec::exponential(2.0).unwrap(),
            UtilitySpec::power(3.0).unwrap(),
            UtilitySpec::power(0.5).unwrap(),
            UtilitySpec::Log,
            UtilitySpec::quadratic(0.1).unwrap(),
        ] {
            u.validate(&PROBES, 8).unwrap_or_else(|e| panic!("{}: {e}", u.name()));
        }
    }

    #[test]
    fn quadratic_higher_derivatives_vanish() {
        let q = UtilitySpec::quadratic(0.3).unwrap();
        for k in 3..10 {
            assert_eq!(q.derivative(k, 1.7), 0.0);
        }
        assert_eq!(q.derivative(2, 5.0), -0.6);
    }

    #[test]
    fn custom_rejects_wrong_derivative() {
        let bad = UtilitySpec::custom("bad", |w: f64| w.sin(), |_k, w: f64| w.cos() * 1.01, 2, &PROBES);
        assert!(matches!(bad, Err(Error::UtilityValidation(_))));
        let good = UtilitySpec::custom(
            "sin",
            |w: f64| w.sin(),
            |k, w: f64| match k % 4 {
                0 => w.sin(),
                1 => w.cos(),
                2 => -w.sin(),
                _ => -w.cos(),
            },
            6,
            &PROBES,
        )
        .unwrap();
        assert_eq!(good.max_order(), 6);
        assert!(good.derivative(7, 1.0).is_nan());
    }

    #[test]
    fn invalid_parameters() {
        assert!(UtilitySpec::power(1.0).is_err());
        assert!(UtilitySpec::exponential(0.0).is_err());
        assert!(UtilitySpec::quadratic(-1.0).is_err());
    }

    #[test]
    fn risk_tolerance_of_exponential() {
        let u = UtilitySpec::exponential(4.0).unwrap();
        assert!((u.risk_tolerance(0.3) - 0.25).abs() < 1e-15);
    }
}
