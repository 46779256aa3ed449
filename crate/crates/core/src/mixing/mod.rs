//! Positive mixing laws `Z` of a normal mean-variance mixture.
//!
//! Every family exposes its Laplace transform `𝓛(s) = E[e^{-sZ}]` (in log
//! space), the log-derivative `𝓛'(s)/𝓛(s) = −E_s[Z]` (the mean of the
//! exponentially tilted law), real moments and seeded sampling.

mod bessel;
mod sampling;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bessel::{bessel_k, ln_bessel_k};

/// Parameters of a mixing family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixingKind {
    /// `Z ≡ value` (Gaussian returns).
    Constant { value: f64 },
    /// `Z ~ Exp(rate)`.
    Exponential { rate: f64 },
    /// Generalized inverse Gaussian with density
    /// `∝ z^{λ−1} exp(−(χ/z + ψ z)/2)`.
    Gig { lambda: f64, chi: f64, psi: f64 },
    /// `Z ~ Uniform[lower, upper]`, `0 < lower < upper`.
    BoundedUniform { lower: f64, upper: f64 },
}

/// A validated mixing law. Construct through [`MixingDistribution::new`] or
/// the per-family helpers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingDistribution {
    kind: MixingKind,
    /// `ln K_λ(√(χψ))` for the GIG family, zero otherwise.
    ln_norm: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl MixingDistribution {
    pub fn new(kind: MixingKind) -> Result<Self> {
        let mut ln_norm = 0.0;
        match kind {
            MixingKind::Constant { value } => positive("constant value", value)?,
            MixingKind::Exponential { rate } => positive("exponential rate", rate)?,
            MixingKind::Gig { lambda, chi, psi } => {
                if !lambda.is_finite() {
                    return Err(Error::InvalidParameter(format!("GIG lambda must be finite, got {lambda}")));
                }
                positive("GIG chi", chi)?;
                positive("GIG psi", psi)?;
                ln_norm = ln_bessel_k(lambda, (chi * psi).sqrt())?;
            }
            MixingKind::BoundedUniform { lower, upper } => {
                positive("uniform lower bound", lower)?;
                positive("uniform upper bound", upper)?;
                if upper <= lower {
                    return Err(Error::InvalidParameter(format!(
                        "uniform bounds must satisfy lower < upper, got [{lower}, {upper}]"
                    )));
                }
            }
        }
        Ok(Self { kind, ln_norm })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(MixingKind::Constant { value })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(MixingKind::Exponential { rate })
    }

    pub fn gig(lambda: f64, chi: f64, psi: f64) -> Result<Self> {
        Self::new(MixingKind::Gig { lambda, chi, psi })
    }

    pub fn bounded_uniform(lower: f64, upper: f64) -> Result<Self> {
        Self::new(MixingKind::BoundedUniform { lower, upper })
    }

    pub fn kind(&self) -> MixingKind {
        self.kind
    }

    /// Closed support `[lower, upper]` (upper may be `+∞`; lower is `0` for the
    /// unbounded families).
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            MixingKind::Constant { value } => (value, value),
            MixingKind::Exponential { .. } | MixingKind::Gig { .. } => (0.0, f64::INFINITY),
            MixingKind::BoundedUniform { lower, upper } => (lower, upper),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.kind, MixingKind::Constant { .. } | MixingKind::BoundedUniform { .. })
    }

    /// `s₀`: the Laplace transform is finite exactly for `s > s₀`.
    pub fn s_lower_bound(&self) -> f64 {
        match self.kind {
            MixingKind::Constant { .. } | MixingKind::BoundedUniform { .. } => f64::NEG_INFINITY,
            MixingKind::Exponential { rate } => -rate,
            MixingKind::Gig { psi, .. } => -0.5 * psi,
        }
    }

    fn check_domain(&self, s: f64) -> Result<()> {
        let lower = self.s_lower_bound();
        if s > lower && !s.is_nan() {
            Ok(())
        } else {
            Err(Error::LaplaceDomain { s, lower })
        }
    }

    /// `ln E[e^{-sZ}]`.
    pub fn ln_laplace(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(match self.kind {
            MixingKind::Constant { value } => -s * value,
            MixingKind::Exponential { rate } => rate.ln() - (rate + s).ln(),
            MixingKind::Gig { lambda, chi, psi } => {
                let u = psi + 2.0 * s;
                0.5 * lambda * (psi.ln() - u.ln()) + ln_bessel_k(lambda, (chi * u).sqrt())?
                    - self.ln_norm
            }
            MixingKind::BoundedUniform { lower, upper } => {
                -s * lower + ln_expm1_ratio(-s * (upper - lower))
            }
        })
    }

    /// `E[e^{-sZ}]`.
    pub fn laplace(&self, s: f64) -> Result<f64> {
        Ok(self.ln_laplace(s)?.exp())
    }

    /// `𝓛'(s) / 𝓛(s) = −E[Z e^{-sZ}] / E[e^{-sZ}]`.
    pub fn laplace_log_deriv(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(match self.kind {
            MixingKind::Constant { value } => -value,
            MixingKind::Exponential { rate } => -1.0 / (rate + s),
            MixingKind::Gig { lambda, chi, psi } => {
                let u = psi + 2.0 * s;
                let w = (chi * u).sqrt();
                let ratio = (ln_bessel_k(lambda + 1.0, w)? - ln_bessel_k(lambda, w)?).exp();
                -(chi / u).sqrt() * ratio
            }
            MixingKind::BoundedUniform { lower, upper } => {
                let width = upper - lower;
                -(lower + width * tilted_unit_mean(s * width))
            }
        })
    }

    /// `d/ds E[e^{-sZ}]`.
    pub fn laplace_deriv(&self, s: f64) -> Result<f64> {
        Ok(self.laplace(s)? * self.laplace_log_deriv(s)?)
    }

    /// `E[Z^r]`.
    pub fn moment(&self, r: f64) -> Result<f64> {
        if !r.is_finite() {
            return Err(Error::InvalidOrder { order: r });
        }
        if r == 0.0 {
            return Ok(1.0);
        }
        match self.kind {
            MixingKind::Constant { value } => Ok(value.powf(r)),
            MixingKind::Exponential { rate } => {
                if r <= -1.0 {
                    return Err(Error::InvalidOrder { order: r });
                }
                Ok(statrs::function::gamma::gamma(1.0 + r) / rate.powf(r))
            }
            MixingKind::Gig { lambda, chi, psi } => {
                let omega = (chi * psi).sqrt();
                Ok((ln_bessel_k(lambda + r, omega)? - self.ln_norm + 0.5 * r * (chi / psi).ln()).exp())
            }
            MixingKind::BoundedUniform { lower, upper } => {
                let width = upper - lower;
                if r == -1.0 {
                    Ok((upper / lower).ln() / width)
                } else {
                    let r1 = r + 1.0;
                    Ok((upper.powf(r1) - lower.powf(r1)) / (r1 * width))
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(1.0).expect("first moment exists for every family")
    }

    pub fn variance(&self) -> f64 {
        match self.kind {
            MixingKind::Constant { .. } => 0.0,
            _ => {
                let m = self.mean();
                let m2 = self.moment(2.0).expect("second moment exists for every family");
                (m2 - m * m).max(0.0)
            }
        }
    }

    /// `E[(Z − EZ)^i Z^p]` via the binomial expansion
    /// `Σ_j C(i,j) E[Z^{p+j}] (−EZ)^{i−j}`.
    pub fn mixed_central_moment(&self, i: u32, p: f64) -> Result<f64> {
        if i == 0 {
            return self.moment(p);
        }
        if let MixingKind::Constant { .. } = self.kind {
            return Ok(0.0);
        }
        let m = self.mean();
        let mut total = 0.0;
        let mut binom = 1.0;
        for j in 0..=i {
            if j > 0 {
                binom = binom * f64::from(i - j + 1) / f64::from(j);
            }
            total += binom * self.moment(p + f64::from(j))? * (-m).powi((i - j) as i32);
        }
        Ok(total)
    }
}

/// `ln((e^x − 1)/x)`, continuous at `x = 0`.
fn ln_expm1_ratio(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        x / 2.0 + x2 * (1.0 / 24.0 - x2 * (1.0 / 2880.0 - x2 / 181_440.0))
    } else if x > 0.0 {
        let tail = if x < std::f64::consts::LN_2 { (-(-x).exp_m1()).ln() } else { (-(-x).exp()).ln_1p() };
        x + tail - x.ln()
    } else {
        (-x.exp_m1()).ln() - (-x).ln()
    }
}

/// Mean of the density `∝ e^{-x t}` on `[0, 1]`: `1/x − 1/(e^x − 1)`.
fn tilted_unit_mean(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        0.5 - x / 12.0 + x.powi(3) / 720.0
    } else {
        1.0 / x - 1.0 / x.exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(MixingDistribution::constant(0.0).is_err());
        assert!(MixingDistribution::exponential(-1.0).is_err());
        assert!(MixingDistribution::gig(0.5, 0.0, 1.0).is_err());
        assert!(MixingDistribution::gig(f64::NAN, 1.0, 1.0).is_err());
        assert!(MixingDistribution::bounded_uniform(1.0, 1.0).is_err());
        assert!(MixingDistribution::bounded_uniform(0.0, 1.0).is_err());
    }

    #[test]
    fn laplace_examples() {
        let c = MixingDistribution::constant(1.0).unwrap();
        assert_eq!(c.laplace(0.0).unwrap(), 1.0);
        assert_eq!(c.laplace_deriv(0.0).unwrap(), -1.0);
        let e = MixingDistribution::exponential(1.0).unwrap();
        assert!((e.laplace(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((e.laplace_deriv(1.0).unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn lower_bounds() {
        assert_eq!(MixingDistribution::exponential(1.0).unwrap().s_lower_bound(), -1.0);
        assert_eq!(MixingDistribution::gig(0.3, 1.0, 2.0).unwrap().s_lower_bound(), -1.0);
        assert_eq!(MixingDistribution::constant(1.0).unwrap().s_lower_bound(), f64::NEG_INFINITY);
        assert_eq!(
            MixingDistribution::bounded_uniform(0.5, 1.5).unwrap().s_lower_bound(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn domain_error_at_and_below_s0() {
        let e = MixingDistribution::exponential(1.0).unwrap();
        assert_eq!(e.laplace(-1.0), Err(Error::LaplaceDomain { s: -1.0, lower: -1.0 }));
        assert!(e.laplace_deriv(-2.0).is_err());
        let g = MixingDistribution::gig(1.0, 1.0, 1.0).unwrap();
        assert!(g.laplace(-0.5).is_err());
    }

    #[test]
    fn moments_examples() {
        let e = MixingDistribution::exponential(1.0).unwrap();
        assert!((e.moment(2.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(e.moment(-1.0).is_err());
        let c = MixingDistribution::constant(3.0).unwrap();
        assert!((c.moment(2.0).unwrap() - 9.0).abs() < 1e-14);
        let u = MixingDistribution::bounded_uniform(1.0, 3.0).unwrap();
        assert!((u.mean() - 2.0).abs() < 1e-15);
        assert!((u.variance() - 4.0 / 12.0).abs() < 1e-14);
        assert!((u.moment(-1.0).unwrap() - 3f64.ln() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn gig_with_lambda_half_reduces_to_inverse_gaussian_mean() {
        // GIG(-1/2, χ, ψ) is inverse Gaussian with mean √(χ/ψ).
        let g = MixingDistribution::gig(-0.5, 2.0, 0.5).unwrap();
        assert!((g.mean() - 2.0).abs() < 1e-13);
        // Its Laplace transform is exp(√(χψ) − √(χ(ψ+2s))).
        for &s in &[-0.2f64, 0.0, 0.3, 5.0] {
            let exact = ((2.0f64 * 0.5).sqrt() - (2.0 * (0.5 + 2.0 * s)).sqrt()).exp();
            assert!((g.laplace(s).unwrap() - exact).abs() < 1e-13 * exact, "s={s}");
        }
    }

    #[test]
    fn mixed_central_moment_examples() {
        let e = MixingDistribution::exponential(1.0).unwrap();
        assert!((e.mixed_central_moment(2, 0.0).unwrap() - 1.0).abs() < 1e-13);
        // Exp(1): third and fourth central moments are 2 and 9.
        assert!((e.mixed_central_moment(3, 0.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((e.mixed_central_moment(4, 0.0).unwrap() - 9.0).abs() < 1e-12);
        let c = MixingDistribution::constant(2.0).unwrap();
        assert_eq!(c.mixed_central_moment(3, 1.5).unwrap(), 0.0);
        for mix in [
            c,
            e,
            MixingDistribution::gig(-0.5, 1.0, 1.0).unwrap(),
            MixingDistribution::bounded_uniform(0.5, 1.5).unwrap(),
        ] {
            assert!((mix.mixed_central_moment(0, 0.0).unwrap() - 1.0).abs() < 1e-15);
            assert!(mix.mixed_central_moment(1, 0.0).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn bounded_uniform_limits() {
        let u = MixingDistribution::bounded_uniform(0.5, 1.5).unwrap();
        assert_eq!(u.laplace(0.0).unwrap(), 1.0);
        assert!((u.laplace_log_deriv(0.0).unwrap() + 1.0).abs() < 1e-15);
                // Symmetric about its mean 1 with variance 1/12: ln 𝓛(s) = −s + s²/24 + O(s⁴).
        for &s in &[0.999e-5, 1.001e-5, -0.999e-5, -1.001e-5] {
            let l = u.ln_laplace(s).unwrap();
            assert!((l - (-s + s * s / 24.0)).abs() < 1e-18, "s={s}");
        }
        // Large negative arguments stay finite in log space.
        assert!(u.ln_laplace(-2000.0).unwrap().is_finite());
        assert!((u.ln_laplace(-2000.0).unwrap() - (3000.0 - (2000f64).ln())).abs() < 1e-9);
    }

    #[test]
    fn helper_limits() {
        for &x in &[-50.0f64, -1.0, -1.1e-2, -0.9e-2, -1e-3, 1e-6, 1e-3, 0.9e-2, 1.1e-2, 0.5, 1.0, 30.0, 800.0] {
            let direct = if x.abs() < 700.0 { (x.exp_m1() / x).ln() } else { x - x.ln() };
            assert!((ln_expm1_ratio(x) - direct).abs() < 1e-12, "x={x}");
            let m = tilted_unit_mean(x);
            assert!(m > 0.0 && m < 1.0);
        }
        assert!((tilted_unit_mean(1e-5) - tilted_unit_mean(1.0001e-4)).abs() < 1e-5);
    }
}
