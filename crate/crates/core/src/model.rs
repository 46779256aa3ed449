//! Market description, the y-coordinate transform and exact expected
//! exponential utility.
//!
//! With `yᵀ = xᵀA` the excess return of a portfolio is
//! `yᵀμ₀ + yᵀγ₀ Z + |y| √Z N(0,1)` where `μ₀ = A⁻¹(μ − 𝟏r_f)` and
//! `γ₀ = A⁻¹γ`, so all problem data collapses onto these two vectors.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};
use crate::mixing::MixingDistribution;

/// Reject `A` when `σ_min / σ_max` falls below this.
pub const SINGULAR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct MarketModel {
    r_f: f64,
    mu: DVector<f64>,
    gamma: DVector<f64>,
    a: DMatrix<f64>,
    sigma: DMatrix<f64>,
    a_lu: LU<f64, Dyn, Dyn>,
    at_lu: LU<f64, Dyn, Dyn>,
    sigma_chol: Cholesky<f64, Dyn>,
}

fn all_finite(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::InvalidParameter(format!("{name}[{i}] is not finite"))),
        None => Ok(()),
    }
}

impl MarketModel {
    /// `a_row_major` holds the `n²` entries of `A` row by row.
    pub fn new(r_f: f64, mu: &[f64], gamma: &[f64], a_row_major: &[f64]) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(Error::Dimension("mu must have at least one entry".into()));
        }
        if gamma.len() != n {
            return Err(Error::Dimension(format!("gamma has length {}, expected n = {n}", gamma.len())));
        }
        if a_row_major.len() != n * n {
            return Err(Error::Dimension(format!(
                "a has {} entries, expected n² = {}",
                a_row_major.len(),
                n * n
            )));
        }
        Self::from_parts(
            r_f,
            DVector::from_column_slice(mu),
            DVector::from_column_slice(gamma),
            DMatrix::from_row_slice(n, n, a_row_major),
        )
    }

    pub fn from_parts(r_f: f64, mu: DVector<f64>, gamma: DVector<f64>, a: DMatrix<f64>) -> Result<Self> {
        let n = mu.len();
        if gamma.len() != n || a.nrows() != n || a.ncols() != n {
            return Err(Error::Dimension(format!(
                "mu has length {n}, gamma {}, a is {}x{}",
                gamma.len(),
                a.nrows(),
                a.ncols()
            )));
        }
        if !r_f.is_finite() {
            return Err(Error::InvalidParameter(format!("r_f is not finite: {r_f}")));
        }
        all_finite("mu", mu.as_slice())?;
        all_finite("gamma", gamma.as_slice())?;
        all_finite("a", a.as_slice())?;
        let sv = a.singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
        if !(ratio >= SINGULAR_RATIO) {
            return Err(Error::SingularMatrix { ratio });
        }
        let sigma = &a * a.transpose();
        let sigma_chol = Cholesky::new(sigma.clone()).ok_or(Error::SingularMatrix { ratio })?;
        Ok(Self {
            r_f,
            a_lu: a.clone().lu(),
            at_lu: a.transpose().lu(),
            mu,
            gamma,
            sigma,
            a,
            sigma_chol,
        })
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn r_f(&self) -> f64 {
        self.r_f
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn gamma(&self) -> &DVector<f64> {
        &self.gamma
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// `Σ = AAᵀ`.
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// `μ − 𝟏r_f`.
    pub fn excess_mean(&self) -> DVector<f64> {
        self.mu.add_scalar(-self.r_f)
    }

    /// `A⁻¹ b`.
    pub fn solve_a(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.a_lu.solve(b).ok_or(Error::SingularMatrix { ratio: 0.0 })
    }

    /// `A⁻ᵀ b`; maps y-coordinates back to portfolio weights.
    pub fn solve_a_transpose(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.at_lu.solve(b).ok_or(Error::SingularMatrix { ratio: 0.0 })
    }

    /// `Σ⁻¹ b` through the Cholesky factor of `Σ`.
    pub fn solve_sigma(&self, b: &DVector<f64>) -> DVector<f64> {
        self.sigma_chol.solve(b)
    }

    /// `y = Aᵀx`.
    pub fn to_y(&self, x: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul(x)
    }

    /// `x = A⁻ᵀy`.
    pub fn from_y(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.solve_a_transpose(y)
    }

    /// `(γᵀΣ⁻¹γ, γᵀΣ⁻¹(μ−𝟏r_f), (μ−𝟏r_f)ᵀΣ⁻¹(μ−𝟏r_f))` along the `Σ` path.
    pub fn sigma_scalars(&self) -> (f64, f64, f64) {
        let m = self.excess_mean();
        let si_g = self.solve_sigma(&self.gamma);
        let si_m = self.solve_sigma(&m);
        (self.gamma.dot(&si_g), self.gamma.dot(&si_m), m.dot(&si_m))
    }
}

/// The problem data in y-coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedModel {
    pub mu0: DVector<f64>,
    pub gamma0: DVector<f64>,
    /// `|γ₀|²`.
    pub a_s: f64,
    /// `γ₀·μ₀`.
    pub b_s: f64,
    /// `|μ₀|²`.
    pub c_s: f64,
    /// `√((A_s − 2s₀)/C_s)`; `+∞` when `s₀ = −∞` or `C_s = 0`.
    pub theta0: f64,
    pub s0: f64,
}

impl TransformedModel {
    /// Builds the transformed data directly from `μ₀` and `γ₀`.
    pub fn from_coordinates(mu0: DVector<f64>, gamma0: DVector<f64>, s0: f64) -> Result<Self> {
        if mu0.len() != gamma0.len() {
            return Err(Error::Dimension(format!(
                "mu0 has length {}, gamma0 {}",
                mu0.len(),
                gamma0.len()
            )));
        }
        let a_s = gamma0.norm_squared();
        let c_s = mu0.norm_squared();
        let b_s = gamma0.dot(&mu0);
        let theta0 = if s0 == f64::NEG_INFINITY || c_s == 0.0 {
            f64::INFINITY
        } else {
            ((a_s - 2.0 * s0) / c_s).sqrt()
        };
        Ok(Self { mu0, gamma0, a_s, b_s, c_s, theta0, s0 })
    }

    pub fn n(&self) -> usize {
        self.mu0.len()
    }
}

pub fn transform(model: &MarketModel, mix: &MixingDistribution) -> Result<TransformedModel> {
    let mu0 = model.solve_a(&model.excess_mean())?;
    let gamma0 = model.solve_a(model.gamma())?;
    TransformedModel::from_coordinates(mu0, gamma0, mix.s_lower_bound())
}

/// Portfolio weights together with the investor's wealth and risk aversion.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    pub x: DVector<f64>,
    pub w0: f64,
    pub a: f64,
}

impl Portfolio {
    pub fn new(x: &[f64], w0: f64, a: f64) -> Result<Self> {
        if !(w0 > 0.0 && w0.is_finite()) {
            return Err(Error::InvalidParameter(format!("initial wealth must be positive, got {w0}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("risk aversion must be positive, got {a}")));
        }
        all_finite("x", x)?;
        Ok(Self { x: DVector::from_column_slice(x), w0, a })
    }
}

fn check_len(model: &MarketModel, p: &Portfolio) -> Result<()> {
    if p.x.len() == model.n() {
        Ok(())
    } else {
        Err(Error::Dimension(format!("portfolio has {} weights, model has n = {}", p.x.len(), model.n())))
    }
}

/// `g(x) = aW₀xᵀγ − (a²W₀²/2) xᵀΣx`, the Laplace argument in the utility.
pub fn g_value(model: &MarketModel, p: &Portfolio) -> Result<f64> {
    check_len(model, p)?;
    let aw = p.a * p.w0;
    let y = model.to_y(&p.x);
    Ok(aw * p.x.dot(model.gamma()) - 0.5 * aw * aw * y.norm_squared())
}

/// Whether `E[e^{−aW}]` is finite, i.e. `g(x) > s₀`.
pub fn feasibility_check(model: &MarketModel, mix: &MixingDistribution, p: &Portfolio) -> bool {
    matches!(g_value(model, p), Ok(g) if g > mix.s_lower_bound())
}

/// `ln(−E[U(W)])` for `U(w) = −e^{−aw}`.
pub fn ln_neg_expected_exp_utility(model: &MarketModel, mix: &MixingDistribution, p: &Portfolio) -> Result<f64> {
    let g = g_value(model, p)?;
    let s0 = mix.s_lower_bound();
    if !(g > s0) {
        return Err(Error::Infeasible { g, s0 });
    }
    let aw = p.a * p.w0;
    Ok(-aw * (1.0 + model.r_f()) - aw * p.x.dot(&model.excess_mean()) + mix.ln_laplace(g)?)
}

/// `E[−e^{−aW}]` with `W = W₀(1 + r_f) + W₀xᵀ(X − 𝟏r_f)`.
pub fn expected_exp_utility(model: &MarketModel, mix: &MixingDistribution, p: &Portfolio) -> Result<f64> {
    Ok(-ln_neg_expected_exp_utility(model, mix, p)?.exp())
}
