//! Finite segments of a countable-asset market.
//!
//! Asset returns are `R₁ = γ₁Z + μ₁ + β̄₁√Z ε₁` and, for `i ≥ 2`,
//! `Rᵢ = γᵢZ + μᵢ + βᵢ√Z ε₁ + β̄ᵢ√Z εᵢ` with `r_f = 0`. The change of
//! variables `V(h) = Σ hᵢ √Z (εᵢ − bᵢ(Z))`, where `bᵢ` makes every `Rᵢ` a
//! martingale, turns the first `n` assets into an NMVM model with identity
//! structure matrix. The optimal utility `Uₙ` of that segment then follows
//! from the exponential-utility solver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exp_opt::{self, QDomain};
use crate::mixing::{MixingDistribution, MixingKind};
use crate::model::TransformedModel;

use nalgebra::DVector;

/// A real sequence indexed from `i = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sequence {
    /// `scale / i^exponent`.
    Power { scale: f64, exponent: f64 },
    /// `values[i − 1]`.
    Explicit { values: Vec<f64> },
}

impl Sequence {
    pub fn power(scale: f64, exponent: f64) -> Self {
        Self::Power { scale, exponent }
    }

    pub fn explicit(values: Vec<f64>) -> Self {
        Self::Explicit { values }
    }

    pub fn zero() -> Self {
        Self::Power { scale: 0.0, exponent: 0.0 }
    }

    /// The `i`-th term (`i ≥ 1`).
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Self::Power { scale, exponent } => scale / (i as f64).powf(*exponent),
            Self::Explicit { values } => values[i - 1],
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            Self::Power { .. } => None,
            Self::Explicit { values } => Some(values.len()),
        }
    }

    fn check(&self, name: &str, max_n: usize) -> Result<()> {
        if let Some(len) = self.len() {
            if len < max_n {
                return Err(Error::Dimension(format!("{name} has {len} terms, segments up to n = {max_n} need {max_n}")));
            }
        }
        if let Self::Power { scale, exponent } = self {
            if !scale.is_finite() || !exponent.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} generator must be finite")));
            }
        }
        if let Some(i) = (1..=max_n).find(|&i| !self.at(i).is_finite()) {
            return Err(Error::InvalidParameter(format!("{name}[{i}] is not finite")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargeMarketSpec {
    pub gamma: Sequence,
    pub mu: Sequence,
    /// Loadings on `ε₁`; the first term is not used.
    pub beta: Sequence,
    pub beta_bar: Sequence,
    mix: MixingDistribution,
    lower: f64,
    upper: f64,
    pub max_n: usize,
}

impl LargeMarketSpec {
    /// Requires a mixing law on `[c, C]` with `0 < c < C` and `β̄ᵢ ≠ 0` for
    /// every `i ≤ max_n`.
    pub fn new(
        gamma: Sequence,
        mu: Sequence,
        beta: Sequence,
        beta_bar: Sequence,
        mix: MixingDistribution,
        max_n: usize,
    ) -> Result<Self> {
        if max_n == 0 {
            return Err(Error::InvalidParameter("max_n must be at least 1".into()));
        }
        let (lower, upper) = match mix.kind() {
            MixingKind::BoundedUniform { lower, upper } => (lower, upper),
            _ => {
                return Err(Error::InvalidParameter(
                    "the large-market model needs a mixing law with support [c, C], 0 < c < C".into(),
                ))
            }
        };
        gamma.check("gamma", max_n)?;
        mu.check("mu", max_n)?;
        beta.check("beta", max_n)?;
        beta_bar.check("beta_bar", max_n)?;
        if let Some(i) = (1..=max_n).find(|&i| beta_bar.at(i) == 0.0) {
            return Err(Error::InvalidParameter(format!("beta_bar[{i}] is zero")));
        }
        Ok(Self { gamma, mu, beta, beta_bar, mix, lower, upper, max_n })
    }

    pub fn mixing(&self) -> &MixingDistribution {
        &self.mix
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n >= 1 && n <= self.max_n {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("segment size {n} outside 1..={}", self.max_n)))
        }
    }

    /// `(μ′ᵢ, γ′ᵢ)` with `√z·(εᵢ − bᵢ(z)) = μ′ᵢ + γ′ᵢz + √z εᵢ`.
    pub fn effective_coefficients(&self, i: usize) -> (f64, f64) {
        let bb1 = self.beta_bar.at(1);
        let (mu1, g1) = (self.mu.at(1) / bb1, self.gamma.at(1) / bb1);
        if i == 1 {
            return (mu1, g1);
        }
        let (beta, bb) = (self.beta.at(i), self.beta_bar.at(i));
        ((self.mu.at(i) - beta * mu1) / bb, (self.gamma.at(i) - beta * g1) / bb)
    }

    /// `bᵢ(z) = −(γ′ᵢ√z + μ′ᵢ/√z)`, the conditional mean of `εᵢ` under the
    /// martingale measure.
    pub fn b_function(&self, i: usize, z: f64) -> Result<f64> {
        let tol = 1e-12 * self.upper;
        if !(z >= self.lower - tol && z <= self.upper + tol) {
            return Err(Error::SupportDomain { z, lower: self.lower, upper: self.upper });
        }
        let (m, g) = self.effective_coefficients(i);
        let r = z.sqrt();
        Ok(-(g * r + m / r))
    }

    /// `dᵢ = sup_{z∈[c,C]} |bᵢ(z)|`: the maximum of `|a√z + b/√z|` sits at an
    /// endpoint or at the stationary point `z = b/a`.
    pub fn d_coefficient(&self, i: usize) -> f64 {
        let (b, a) = self.effective_coefficients(i);
        let f = |z: f64| (a * z.sqrt() + b / z.sqrt()).abs();
        let mut d = f(self.lower).max(f(self.upper));
        if a != 0.0 {
            let z = b / a;
            if z > self.lower && z < self.upper {
                d = d.max(f(z));
            }
        }
        d
    }

    /// `Σ_{i≤n} dᵢ²`.
    pub fn d2_partial(&self, n: usize) -> f64 {
        (1..=n).map(|i| self.d_coefficient(i).powi(2)).sum()
    }

    /// `Σ_{n<i≤2n} dᵢ²`, the Cauchy increment of the partial sums.
    pub fn d2_tail(&self, n: usize) -> f64 {
        (n + 1..=2 * n).map(|i| self.d_coefficient(i).powi(2)).sum()
    }

    /// Whether the `dᵢ²` partial sums look summable at the configured
    /// horizon: `Σ_{max_n/2 < i ≤ max_n} dᵢ² < tolerance`.
    pub fn assumption_check(&self, tolerance: f64) -> bool {
        self.d2_tail(self.max_n / 2) < tolerance
    }

    /// The `n`-asset segment in h-coordinates: `(μ′, γ′)`.
    pub fn effective_nmvm_segment(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_n(n)?;
        Ok((1..=n).map(|i| self.effective_coefficients(i)).unzip())
    }

    pub fn segment_model(&self, n: usize) -> Result<TransformedModel> {
        let (mu, gamma) = self.effective_nmvm_segment(n)?;
        TransformedModel::from_coordinates(DVector::from_vec(mu), DVector::from_vec(gamma), self.mix.s_lower_bound())
    }

    /// `Uₙ = min_h E[e^{−V(h)}]` over the first `n` assets.
    pub fn u_n(&self, n: usize) -> Result<f64> {
        Ok(self.ln_u_n(n)?.exp())
    }

    /// `ln Uₙ = −B + ln H(q_min)`; with no excess return (`μ′ = 0`) the
    /// optimum is `h = γ′` and `Uₙ = 𝓛(|γ′|²/2)`.
    pub fn ln_u_n(&self, n: usize) -> Result<f64> {
        let tm = self.segment_model(n)?;
        if tm.c_s == 0.0 {
            return self.mix.ln_laplace(0.5 * tm.a_s);
        }
        let m = exp_opt::minimize_h(&tm, &self.mix, QDomain::Full)?;
        Ok((-tm.b_s + m.ln_h).min(0.0))
    }

    /// The optimal `h*ₙ = γ′ − q μ′`.
    pub fn optimal_h(&self, n: usize) -> Result<Vec<f64>> {
        let tm = self.segment_model(n)?;
        let q = if tm.c_s == 0.0 { 0.0 } else { exp_opt::minimize_h(&tm, &self.mix, QDomain::Full)?.q };
        Ok((&tm.gamma0 - &tm.mu0 * q).as_slice().to_vec())
    }

    /// `fₙ(z, ε) = exp(Σᵢ [bᵢ(z)εᵢ − bᵢ(z)²/2])`, the density of a measure
    /// under which the first `n` assets have zero mean.
    pub fn martingale_density(&self, n: usize, z: f64, eps: &[f64]) -> Result<f64> {
        self.check_n(n)?;
        if eps.len() != n {
            return Err(Error::Dimension(format!("eps has length {}, expected {n}", eps.len())));
        }
        let mut s = 0.0;
        for (i, &e) in eps.iter().enumerate() {
            let b = self.b_function(i + 1, z)?;
            s += b * e - 0.5 * b * b;
        }
        Ok(s.exp())
    }

    /// `exp(Σ_{i≤n} dᵢ²)`, a uniform bound on `E[fₙ(Z)²]`.
    pub fn density_second_moment_bound(&self, n: usize) -> f64 {
        self.d2_partial(n).exp()
    }

    /// `Uₙ` for each `n` in `n_list` together with `|Uₙ − U₂ₙ|` (when
    /// `2n ≤ max_n`) and `Σ_{n<i≤2n} dᵢ²`.
    pub fn convergence_study(&self, n_list: &[usize], tolerance: f64) -> Result<ConvergenceTable> {
        if n_list.is_empty() {
            return Err(Error::InvalidParameter("n_list is empty".into()));
        }
        if let Some(w) = n_list.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!(
                "n_list must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        for &n in n_list {
            self.check_n(n)?;
        }
        let rows: Vec<ConvergenceRow> = n_list
            .par_iter()
            .map(|&n| {
                let u = self.u_n(n)?;
                let gap = if 2 * n <= self.max_n { Some((u - self.u_n(2 * n)?).abs()) } else { None };
                Ok(ConvergenceRow { n, u_n: u, gap_to_double: gap, d2_tail: self.d2_tail(n) })
            })
            .collect::<Result<_>>()?;
        let monotone = rows.windows(2).all(|w| w[1].u_n <= w[0].u_n);
        let converged = rows.iter().rev().find_map(|r| r.gap_to_double).is_some_and(|g| g < tolerance);
        Ok(ConvergenceTable { rows, monotone, converged, tolerance })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub u_n: f64,
    pub gap_to_double: Option<f64>,
    pub d2_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// `Uₙ` nonincreasing along the rows.
    pub monotone: bool,
    /// The last available doubling gap is below `tolerance`.
    pub converged: bool,
    pub tolerance: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> MixingDistribution {
        MixingDistribution::bounded_uniform(0.5, 1.5).unwrap()
    }

    fn spec(gamma: Sequence, mu: Sequence, beta: Sequence, beta_bar: Sequence, max_n: usize) -> LargeMarketSpec {
        LargeMarketSpec::new(gamma, mu, beta, beta_bar, uniform(), max_n).unwrap()
    }

    #[test]
    fn validation() {
        let ones = Sequence::power(1.0, 0.0);
        assert!(LargeMarketSpec::new(
            ones.clone(),
            ones.clone(),
            ones.clone(),
            ones.clone(),
            MixingDistribution::exponential(1.0).unwrap(),
            4
        )
        .is_err());
        assert!(LargeMarketSpec::new(
            ones.clone(),
            ones.clone(),
            ones.clone(),
            Sequence::explicit(vec![1.0, 0.0, 1.0]),
            uniform(),
            3
        )
        .is_err());
        assert!(matches!(
            LargeMarketSpec::new(ones.clone(), Sequence::explicit(vec![1.0]), ones.clone(), ones, uniform(), 3),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn b_function_examples() {
        let inv_sq = Sequence::power(1.0, 2.0);
        let ones = Sequence::power(1.0, 0.0);
        let s = spec(inv_sq.clone(), inv_sq, ones.clone(), ones, 4);
        assert!((s.b_function(1, 1.0).unwrap() + 2.0).abs() < 1e-15);
        assert!((s.b_function(2, 1.0).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(s.b_function(1, 2.0), Err(Error::SupportDomain { .. })));

        let s = spec(
            Sequence::explicit(vec![0.0, 0.3]),
            Sequence::explicit(vec![0.0, 0.2]),
            Sequence::power(0.7, 0.0),
            Sequence::explicit(vec![1.0, 2.0]),
            2,
        );
        assert_eq!(s.b_function(1, 0.8).unwrap(), 0.0);
        let zz: f64 = 0.8;
        let expect = -0.3 * zz.sqrt() / 2.0 - 0.2 / (zz.sqrt() * 2.0);
        assert!((s.b_function(2, 0.8).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn d_coefficient_examples() {
        let ones = Sequence::power(1.0, 0.0);
        let s = spec(ones.clone(), ones.clone(), Sequence::zero(), ones.clone(), 3);
        // b₁(z) = −√z − 1/√z on [0.5, 1.5]: largest at z = 0.5.
        assert!((s.d_coefficient(1) - 3.0 / 2f64.sqrt()).abs() < 1e-15);
        let mut grid_max: f64 = 0.0;
        for k in 0..=100_000 {
            let z = 0.5 + k as f64 / 100_000.0;
            grid_max = grid_max.max(s.b_function(1, z).unwrap().abs());
        }
        assert!((s.d_coefficient(1) - grid_max).abs() < 1e-12);
        let s10 = spec(ones.clone(), ones.clone(), Sequence::zero(), Sequence::power(10.0, 0.0), 3);
        assert!((s10.d_coefficient(2) - s.d_coefficient(2) / 10.0).abs() < 1e-15);
        let zero = spec(Sequence::zero(), Sequence::zero(), ones.clone(), ones, 3);
        assert_eq!(zero.d_coefficient(2), 0.0);
    }

    #[test]
    fn effective_segment_identity() {
        let s = spec(
            Sequence::power(0.5, 1.1),
            Sequence::power(0.3, 0.7),
            Sequence::power(0.3, 1.0),
            Sequence::explicit(vec![1.3, -0.8, 2.0, 0.5]),
            4,
        );
        // −√z bᵢ(z) must equal μ′ᵢ + γ′ᵢ z.
        for i in 1..=4 {
            let (m, g) = s.effective_coefficients(i);
            for &z in &[0.5f64, 0.9, 1.5] {
                let lhs = -z.sqrt() * s.b_function(i, z).unwrap();
                assert!((lhs - (m + g * z)).abs() < 1e-14);
            }
        }
        let s1 = spec(Sequence::power(0.4, 0.0), Sequence::power(0.2, 0.0), Sequence::zero(), Sequence::power(1.0, 0.0), 1);
        assert_eq!(s1.effective_nmvm_segment(1).unwrap(), (vec![0.2], vec![0.4]));
    }

    #[test]
    fn zero_coefficients_give_unit_utility() {
        let s = spec(Sequence::zero(), Sequence::zero(), Sequence::power(0.3, 1.0), Sequence::power(1.0, 0.0), 16);
        for n in [1, 4, 16] {
            assert_eq!(s.u_n(n).unwrap(), 1.0);
        }
        let t = s.convergence_study(&[2, 4, 8], 1e-12).unwrap();
        assert!(t.rows.iter().all(|r| r.u_n == 1.0 && r.gap_to_double == Some(0.0)));
        assert!(t.converged && t.monotone);
    }

    #[test]
    fn narrow_mixing_matches_gaussian() {
        let delta = 1e-4;
        let s = LargeMarketSpec::new(
            Sequence::power(0.2, 0.0),
            Sequence::power(0.1, 0.0),
            Sequence::zero(),
            Sequence::power(1.0, 0.0),
            MixingDistribution::bounded_uniform(1.0 - delta, 1.0 + delta).unwrap(),
            1,
        )
        .unwrap();
        let exact = (-(0.1f64 + 0.2).powi(2) / 2.0).exp();
        assert!((s.u_n(1).unwrap() - exact).abs() < 1e-3);
    }

    #[test]
    fn truncated_premia_freeze_utility() {
        let k = 5;
        let mut g = vec![0.0; 40];
        let mut m = vec![0.0; 40];
        for i in 0..k {
            g[i] = 0.2 / (i + 1) as f64;
            m[i] = 0.1 / (i + 1) as f64;
        }
        let s = spec(Sequence::explicit(g), Sequence::explicit(m), Sequence::zero(), Sequence::power(1.0, 0.0), 40);
        let uk = s.u_n(k).unwrap();
        for n in [k, k + 1, 20, 40] {
            assert!((s.u_n(n).unwrap() - uk).abs() < 1e-14);
        }
    }

    #[test]
    fn beta_bar_sign_is_irrelevant_but_scale_is_not() {
        let base = |bb: Sequence| {
            spec(Sequence::power(0.5, 1.1), Sequence::power(0.5, 1.1), Sequence::power(0.3, 1.0), bb, 6)
        };
        let u = base(Sequence::power(1.0, 0.0)).u_n(6).unwrap();
        let flipped = base(Sequence::explicit(vec![1.0, -1.0, 1.0, -1.0, -1.0, 1.0])).u_n(6).unwrap();
        let scaled = base(Sequence::power(2.0, 0.0)).u_n(6).unwrap();
        assert!((u - flipped).abs() < 1e-13);
        assert!((u - scaled).abs() > 1e-3);
    }

    #[test]
    fn density_without_premia_is_one() {
        let s = spec(Sequence::zero(), Sequence::zero(), Sequence::zero(), Sequence::power(1.0, 0.0), 3);
        assert_eq!(s.martingale_density(3, 1.0, &[0.3, -2.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn convergence_study_rejects_unsorted_list() {
        let s = spec(Sequence::zero(), Sequence::zero(), Sequence::zero(), Sequence::power(1.0, 0.0), 16);
        assert!(s.convergence_study(&[4, 2], 1e-4).is_err());
        assert!(s.convergence_study(&[4, 4], 1e-4).is_err());
        assert!(s.convergence_study(&[4, 32], 1e-4).is_err());
    }
}
