//! Modified Bessel function of the second kind `K_ν(x)` for real order.
//!
//! The fractional part `μ = ν − round(ν)` is evaluated with Temme's series
//! for `x ≤ 1` and Steed's continued fraction (which yields `e^x K_μ`) for
//! `x > 1`; integer steps follow by forward recurrence, which is stable for
//! `K`. The recurrence carries a separate log scale, so `ln K_ν(x)` is
//! available far beyond the range where `K_ν(x)` itself is representable.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;
const SMALL_X: f64 = 1.0;
const RESCALE: f64 = 1e250;

/// `K_ν(x)`. Returns `+∞` if the value overflows (see [`ln_bessel_k`]).
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    let (m, log_scale) = bessel_k_parts(nu, x)?;
    Ok(m * log_scale.exp())
}

/// `ln K_ν(x)`.
pub fn ln_bessel_k(nu: f64, x: f64) -> Result<f64> {
    let (m, log_scale) = bessel_k_parts(nu, x)?;
    Ok(m.ln() + log_scale)
}

/// `K_ν(x) = mantissa · exp(log_scale)`.
fn bessel_k_parts(nu: f64, x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::BesselDomain(x));
    }
    if !nu.is_finite() {
        return Err(Error::InvalidParameter(format!("Bessel order must be finite, got {nu}")));
    }
    let nu = nu.abs();
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;

    let (mut k_mu, mut k_mu1, mut log_scale) = if x <= SMALL_X {
        let (a, b) = temme_series(mu, x);
        (a, b, 0.0)
    } else {
        let (a, b) = steed_scaled(mu, x);
        (a, b, -x)
    };

    let two_over_x = 2.0 / x;
    let steps = nl as u64;
    for i in 1..=steps {
        let next = (mu + i as f64) * two_over_x * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
        if k_mu1 > RESCALE {
            k_mu /= RESCALE;
            k_mu1 /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    Ok((k_mu, log_scale))
}

/// `(1/Γ(1+μ), 1/Γ(1−μ), gam1, gam2)` for `|μ| ≤ 1/2` where
/// `gam1 = (1/Γ(1−μ) − 1/Γ(1+μ)) / (2μ)` and
/// `gam2 = (1/Γ(1−μ) + 1/Γ(1+μ)) / 2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let gampl = 1.0 / gamma(1.0 + mu);
    let gammi = 1.0 / gamma(1.0 - mu);
    let gam2 = 0.5 * (gammi + gampl);
    let gam1 = if mu.abs() > 0.05 {
        (gammi - gampl) / (2.0 * mu)
    } else {
        // Even part of the power series of 1/Γ(1+z) (Abramowitz–Stegun 6.1.34).
        let m2 = mu * mu;
        -(0.577_215_664_901_532_9
            + m2 * (-0.042_002_635_034_095_2
                + m2 * (-0.042_197_734_555_544_3
                    + m2 * (0.007_218_943_246_663_0 + m2 * -0.000_215_241_674_114_9))))
    };
    (gampl, gammi, gam1, gam2)
}

/// Temme's series: returns `(K_μ(x), K_{μ+1}(x))` for `|μ| ≤ 1/2`, `x ≤ 1`.
fn temme_series(mu: f64, x: f64) -> (f64, f64) {
    let x2 = 0.5 * x;
    let pimu = PI * mu;
    let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (gampl, gammi, gam1, gam2) = temme_gammas(mu);
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    let mu2 = mu * mu;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        let del1 = c * (p - fi * ff);
        sum1 += del1;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum, sum1 * 2.0 / x)
}

/// Steed's continued fraction: returns `(e^x K_μ(x), e^x K_{μ+1}(x))` for
/// `|μ| ≤ 1/2`, `x > 1`.
fn steed_scaled(mu: f64, x: f64) -> (f64, f64) {
    let mu2 = mu * mu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
    (k_mu, k_mu1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn half_order_closed_form() {
        for &x in &[0.01, 0.3, 1.0, 2.0, 2.5, 7.0, 40.0] {
            let exact = (PI / (2.0 * x)).sqrt() * (-x).exp();
            assert!(rel(bessel_k(0.5, x).unwrap(), exact) < 2e-14, "x={x}");
            assert_eq!(bessel_k(-0.5, x).unwrap(), bessel_k(0.5, x).unwrap());
            let exact15 = exact * (1.0 + 1.0 / x);
            assert!(rel(bessel_k(1.5, x).unwrap(), exact15) < 1e-13, "x={x}");
        }
    }

    #[test]
    fn half_order_value_at_two() {
        let v = bessel_k(0.5, 2.0).unwrap();
        assert!(rel(v, (PI / 4.0).sqrt() * (-2.0f64).exp()) < 1e-14);
        assert!((v - 0.119_94).abs() < 1e-5);
        assert_eq!(bessel_k(-0.5, 2.0).unwrap(), v);
    }

    #[test]
    fn reference_values() {
        // Integer orders, tabulated (Abramowitz–Stegun Table 9.8 / standard libraries).
        assert!(rel(bessel_k(0.0, 1.0).unwrap(), 0.421_024_438_240_708_3) < 1e-14);
        assert!(rel(bessel_k(1.0, 1.0).unwrap(), 0.601_907_230_197_234_6) < 1e-14);
        assert!(rel(bessel_k(0.0, 0.1).unwrap(), 2.427_069_024_702_017) < 1e-14);
        assert!(rel(bessel_k(2.0, 5.0).unwrap(), 0.005_308_943_712_223_461) < 1e-13);
    }

    #[test]
    fn temme_gamma_branches_agree() {
        for &mu in &[0.049_999_999, 0.05, 0.050_000_001] {
            let (gp, gm, g1, _) = temme_gammas(mu);
            let direct = (gm - gp) / (2.0 * mu);
            assert!((g1 - direct).abs() < 1e-12, "mu={mu} {g1} {direct}");
        }
        let (_, _, g1, g2) = temme_gammas(0.0);
        assert!((g1 + 0.577_215_664_901_532_9).abs() < 1e-16);
        assert!((g2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log_space_handles_overflow() {
        // K_ν(x) ~ Γ(ν)/2 · (2/x)^ν for small x.
        let l = ln_bessel_k(200.0, 0.5).unwrap();
        let approx = statrs::function::gamma::ln_gamma(200.0) - 2f64.ln() + 200.0 * 4f64.ln();
        assert!(l.is_finite() && (l - approx).abs() / approx < 1e-2);
        // Large argument underflows K but not ln K.
        let l = ln_bessel_k(0.5, 2000.0).unwrap();
        assert!((l - ((PI / 4000.0).sqrt().ln() - 2000.0)).abs() < 1e-10);
    }

    #[test]
    fn domain_errors() {
        assert_eq!(bessel_k(1.0, 0.0), Err(Error::BesselDomain(0.0)));
        assert!(bessel_k(1.0, -2.0).is_err());
    }
}
