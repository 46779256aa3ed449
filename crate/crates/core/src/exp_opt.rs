//! Exponential utility in closed form.
//!
//! For `U(w) = −e^{−aw}` the optimal portfolio is
//! `x* = (1/aW₀) A⁻ᵀ(γ₀ − q μ₀)` where `q` minimizes
//! `H(θ) = e^{Cθ} 𝓛(A/2 − θ²C/2)` over the admissible set of `θ`.
//! `H` is increasing on `[0, θ₀)`, so the search only ever runs over
//! nonpositive `θ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixing::MixingDistribution;
use crate::model::{self, MarketModel, Portfolio, TransformedModel};
use crate::optim::{bisect, brent_minimize};

const GRID_POINTS: usize = 33;
const FOC_GRID_POINTS: usize = 257;
const MAX_DOUBLINGS: usize = 60;

fn check_theta(tm: &TransformedModel, theta: f64) -> Result<()> {
    if theta.abs() < tm.theta0 {
        Ok(())
    } else {
        Err(Error::ThetaDomain { theta, theta0: tm.theta0 })
    }
}

fn tau_of(tm: &TransformedModel, theta: f64) -> f64 {
    0.5 * tm.a_s - 0.5 * theta * theta * tm.c_s
}

/// `ln H(θ) = Cθ + ln 𝓛(A/2 − θ²C/2)`.
pub fn ln_h(tm: &TransformedModel, mix: &MixingDistribution, theta: f64) -> Result<f64> {
    check_theta(tm, theta)?;
    Ok(tm.c_s * theta + mix.ln_laplace(tau_of(tm, theta))?)
}

pub fn h_function(tm: &TransformedModel, mix: &MixingDistribution, theta: f64) -> Result<f64> {
    Ok(ln_h(tm, mix, theta)?.exp())
}

/// `d ln H / dθ = C(1 − θ ℓ'(τ))` with `ℓ' = 𝓛'/𝓛`.
pub fn h_log_derivative(tm: &TransformedModel, mix: &MixingDistribution, theta: f64) -> Result<f64> {
    check_theta(tm, theta)?;
    Ok(tm.c_s * (1.0 - theta * mix.laplace_log_deriv(tau_of(tm, theta))?))
}

/// Admissible values of `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum QDomain {
    /// Unconstrained portfolios: `θ ∈ (−θ₀, θ₀)`.
    Full,
    /// `θ ∈ [lo, hi]` (either end may be infinite).
    Interval { lo: f64, hi: f64 },
}

/// Bounds on the excess return `c = xᵀ(μ − 𝟏r_f)` of the portfolio.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExcessReturnBounds {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl ExcessReturnBounds {
    /// `c ↦ q_c = (B − aW₀c)/C` is decreasing, so `[c_min, c_max]` maps to
    /// `[q(c_max), q(c_min)]`.
    pub fn to_q_domain(&self, tm: &TransformedModel, a: f64, w0: f64) -> Result<QDomain> {
        if tm.c_s == 0.0 {
            return Err(Error::DegenerateExcessReturn);
        }
        if self.min.is_none() && self.max.is_none() {
            return Ok(QDomain::Full);
        }
        if let (Some(lo), Some(hi)) = (self.min, self.max) {
            if lo > hi {
                return Err(Error::EmptyDomain);
            }
        }
        let q = |c: f64| (tm.b_s - a * w0 * c) / tm.c_s;
        Ok(QDomain::Interval {
            lo: self.max.map_or(f64::NEG_INFINITY, q),
            hi: self.min.map_or(f64::INFINITY, q),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HMinimum {
    pub q: f64,
    pub ln_h: f64,
    pub iterations: usize,
    /// Final bracket around `q`.
    pub bracket: (f64, f64),
    /// Width of the final bracket.
    pub tolerance: f64,
}

fn boundary_offset(theta0: f64) -> f64 {
    1e-9 * theta0.max(1.0)
}

/// Left end of the search interval on the full domain.
fn full_domain_left(tm: &TransformedModel, mix: &MixingDistribution) -> Result<f64> {
    if tm.theta0.is_finite() {
        return Ok(-tm.theta0 + boundary_offset(tm.theta0));
    }
    let mut lo = -1.0;
    for _ in 0..MAX_DOUBLINGS {
        if h_log_derivative(tm, mix, lo)? < 0.0 {
            return Ok(lo);
        }
        lo *= 2.0;
    }
    Err(Error::NoInteriorMinimum)
}

/// Global minimizer of `H` over `domain`.
///
/// A 33-point grid on `[lo, min(hi, 0)]` picks the basin, Brent refines it
/// and bisection on `d ln H/dθ` polishes to near machine precision.
pub fn minimize_h(tm: &TransformedModel, mix: &MixingDistribution, domain: QDomain) -> Result<HMinimum> {
    if tm.c_s == 0.0 {
        return Err(Error::DegenerateExcessReturn);
    }
    let eps = boundary_offset(tm.theta0);
    let (lo, hi, full) = match domain {
        QDomain::Full => (full_domain_left(tm, mix)?, 0.0, true),
        QDomain::Interval { lo, hi } => {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo >= tm.theta0 || hi <= -tm.theta0 {
                return Err(Error::EmptyDomain);
            }
            if lo >= 0.0 {
                let v = ln_h(tm, mix, lo)?;
                return Ok(HMinimum { q: lo, ln_h: v, iterations: 0, bracket: (lo, lo), tolerance: 0.0 });
            }
            let lo = if lo <= -tm.theta0 {
                if tm.theta0.is_finite() {
                    -tm.theta0 + eps
                } else {
                    full_domain_left(tm, mix)?
                }
            } else {
                lo
            };
            (lo, hi.min(0.0), false)
        }
    };
    if lo == hi {
        let v = ln_h(tm, mix, lo)?;
        return Ok(HMinimum { q: lo, ln_h: v, iterations: 0, bracket: (lo, hi), tolerance: 0.0 });
    }

    let f = |t: f64| ln_h(tm, mix, t).unwrap_or(f64::INFINITY);
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| if i + 1 == GRID_POINTS { hi } else { lo + step * i as f64 })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let best = (0..GRID_POINTS).fold(0, |b, i| if values[i] < values[b] { i } else { b });
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(GRID_POINTS - 1)];

    let brent = brent_minimize(f, a, b, 1e-12, 500);
    let mut iterations = brent.iterations;
    let mut q = brent.x;
    let mut bracket = (a, b);

    let d = |t: f64| h_log_derivative(tm, mix, t).unwrap_or(f64::NAN);
    let (da, db) = (d(a), d(b));
    if da < 0.0 && db > 0.0 {
        if let Some((root, it)) = bisect(d, a, b, 0.0, 200) {
            iterations += it;
            q = root;
            let ulp = f64::EPSILON * root.abs().max(f64::MIN_POSITIVE);
            bracket = (root - ulp, root + ulp);
        }
    }

    let mut candidates = [(lo, values[0]), (q, f(q)), (hi, values[GRID_POINTS - 1])];
    candidates.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.total_cmp(&y.0)));
    let (q, v) = candidates[0];
    if !v.is_finite() {
        return Err(Error::NoInteriorMinimum);
    }
    if full && q == lo {
        return Err(Error::NoInteriorMinimum);
    }
    Ok(HMinimum { q, ln_h: v, iterations, bracket, tolerance: bracket.1 - bracket.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FocSolution {
    pub tau: f64,
    pub theta: f64,
    pub ln_h: f64,
    /// Number of distinct roots found.
    pub roots: usize,
}

/// Solves the first-order condition `𝓛'(τ)/𝓛(τ) = −√(C/(A − 2τ))` on
/// `(s₀, A/2)` and maps the root to `θ = −√((A − 2τ)/C)`.
///
/// Every sign change from negative to positive (a local minimum of `H`) is
/// refined; the root with the smallest `H` wins.
pub fn solve_foc(tm: &TransformedModel, mix: &MixingDistribution) -> Result<FocSolution> {
    if tm.c_s == 0.0 {
        return Err(Error::DegenerateExcessReturn);
    }
    let (a_s, c_s) = (tm.a_s, tm.c_s);
    let residual = |tau: f64| {
        let gap = a_s - 2.0 * tau;
        if gap <= 0.0 {
            return f64::INFINITY;
        }
        match mix.laplace_log_deriv(tau) {
            Ok(l) => l + (c_s / gap).sqrt(),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let theta_lo = full_domain_left(tm, mix).or_else(|_| {
        if tm.theta0.is_finite() {
            Ok(-tm.theta0 + boundary_offset(tm.theta0))
        } else {
            Err(Error::NoRoot)
        }
    })?;
    // Uniform in θ, then mapped to increasing τ.
    let taus: Vec<f64> = (0..FOC_GRID_POINTS)
        .map(|i| {
            let t = theta_lo * (1.0 - i as f64 / (FOC_GRID_POINTS - 1) as f64);
            if i + 1 == FOC_GRID_POINTS {
                0.5 * a_s
            } else {
                tau_of(tm, t)
            }
        })
        .collect();
    let res: Vec<f64> = taus.iter().map(|&t| residual(t)).collect();

    let mut best: Option<FocSolution> = None;
    let mut roots = 0;
    for i in 0..FOC_GRID_POINTS - 1 {
        let (r0, r1) = (res[i], res[i + 1]);
        if !(r0 < 0.0 && r1 >= 0.0) {
            continue;
        }
        let tau = if r1 == 0.0 {
            taus[i + 1]
        } else {
            match bisect(residual, taus[i], taus[i + 1], 0.0, 200) {
                Some((t, _)) => t,
                None => continue,
            }
        };
        roots += 1;
        let theta = -((a_s - 2.0 * tau).max(0.0) / c_s).sqrt();
        let value = ln_h(tm, mix, theta).unwrap_or(f64::INFINITY);
        let better = match best {
            None => true,
            Some(b) => value < b.ln_h || (value == b.ln_h && theta < b.theta),
        };
        if better {
            best = Some(FocSolution { tau, theta, ln_h: value, roots: 0 });
        }
    }
    best.map(|b| FocSolution { roots, ..b }).ok_or(Error::NoRoot)
}

/// `x* = (1/aW₀) A⁻ᵀ(γ₀ − q μ₀) = (1/aW₀)(Σ⁻¹γ − q Σ⁻¹(μ − 𝟏r_f))`.
pub fn optimal_portfolio(tm: &TransformedModel, model: &MarketModel, a: f64, w0: f64, q: f64) -> Result<Vec<f64>> {
    let y = (&tm.gamma0 - &tm.mu0 * q) / (a * w0);
    Ok(model.from_y(&y)?.as_slice().to_vec())
}

/// Maximizer of `g` on the hyperplane `xᵀ(μ − 𝟏r_f) = c`, with
/// `g(x_c) = A/2 − q_c²C/2`.
pub fn level_set_maximizer(
    tm: &TransformedModel,
    model: &MarketModel,
    a: f64,
    w0: f64,
    c: f64,
) -> Result<(Vec<f64>, f64)> {
    if tm.c_s == 0.0 {
        return Err(Error::DegenerateExcessReturn);
    }
    let q = (tm.b_s - a * w0 * c) / tm.c_s;
    Ok((optimal_portfolio(tm, model, a, w0, q)?, tau_of(tm, q)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    MinimizeH,
    Foc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scalars {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverInfo {
    pub method: Solver,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpOptResult {
    pub q_min: f64,
    pub x_star: Vec<f64>,
    /// `E[U(W)]` at `x*`; underflows to `-0.0` only when
    /// `ln_neg_utility < −745`, see `ln_neg_utility`.
    pub optimal_utility: f64,
    /// `ln(−E[U(W)])` at `x*`.
    pub ln_neg_utility: f64,
    pub g_value: f64,
    pub theta0: f64,
    pub scalars: Scalars,
    pub solver_info: SolverInfo,
}

/// End-to-end solve: transform, locate `q_min`, build `x*` and evaluate its
/// exact expected utility.
pub fn optimize(
    model: &MarketModel,
    mix: &MixingDistribution,
    a: f64,
    w0: f64,
    bounds: ExcessReturnBounds,
    solver: Solver,
) -> Result<ExpOptResult> {
    Portfolio::new(&[], w0, a)?;
    let tm = model::transform(model, mix)?;
    let domain = bounds.to_q_domain(&tm, a, w0)?;
    let (q, info) = match (solver, domain) {
        (Solver::Foc, QDomain::Full) => {
            let s = solve_foc(&tm, mix)?;
            (s.theta, SolverInfo { method: Solver::Foc, iterations: 200, bracket: (s.theta, s.theta), tolerance: 0.0 })
        }
        _ => {
            let m = minimize_h(&tm, mix, domain)?;
            (
                m.q,
                SolverInfo {
                    method: Solver::MinimizeH,
                    iterations: m.iterations,
                    bracket: m.bracket,
                    tolerance: m.tolerance,
                },
            )
        }
    };
    let x_star = optimal_portfolio(&tm, model, a, w0, q)?;
    let p = Portfolio::new(&x_star, w0, a)?;
    let g = model::g_value(model, &p)?;
    let ln_neg = model::ln_neg_expected_exp_utility(model, mix, &p)?;
    Ok(ExpOptResult {
        q_min: q,
        x_star,
        optimal_utility: -ln_neg.exp(),
        ln_neg_utility: ln_neg,
        g_value: g,
        theta0: tm.theta0,
        scalars: Scalars { a: tm.a_s, b: tm.b_s, c: tm.c_s },
        solver_info: info,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn tm(a_s: f64, c_s: f64, b_s: f64, mix: &MixingDistribution) -> TransformedModel {
        // γ₀ = (√A cos, √A sin), μ₀ = (√C, 0) with cos = B/√(AC).
        let cos = if a_s > 0.0 { b_s / (a_s * c_s).sqrt() } else { 0.0 };
        let sin = (1.0 - cos * cos).max(0.0).sqrt();
        TransformedModel::from_coordinates(
            DVector::from_vec(vec![c_s.sqrt(), 0.0]),
            DVector::from_vec(vec![a_s.sqrt() * cos, a_s.sqrt() * sin]),
            mix.s_lower_bound(),
        )
        .unwrap()
    }

    #[test]
    fn gaussian_h_closed_form_and_minimum() {
        let c = MixingDistribution::constant(1.0).unwrap();
        let t = tm(0.7, 1.3, 0.2, &c);
        for &th in &[-2.0, -1.0, -0.3, 0.0, 0.5] {
            let exact = 0.5 * t.c_s * (th * th + 2.0 * th) - 0.5 * t.a_s;
            assert!((ln_h(&t, &c, th).unwrap() - exact).abs() < 1e-14);
        }
        let m = minimize_h(&t, &c, QDomain::Full).unwrap();
        assert!((m.q + 1.0).abs() < 1e-12, "{m:?}");
        let f = solve_foc(&t, &c).unwrap();
        assert!((f.theta + 1.0).abs() < 1e-12);
        assert!((f.tau - 0.5 * (t.a_s - t.c_s)).abs() < 1e-12);
    }

    #[test]
    fn exponential_h_closed_form() {
        let e = MixingDistribution::exponential(1.0).unwrap();
        let t = tm(1.0, 1.0, 0.3, &e);
        for &th in &[-1.5, -0.5, 0.0, 1.2] {
            let exact = (t.c_s * th).exp() * 2.0 / (2.0 + t.a_s - th * th * t.c_s);
            assert!((h_function(&t, &e, th).unwrap() / exact - 1.0).abs() < 1e-14);
        }
        assert!((h_function(&t, &e, 0.0).unwrap() - e.laplace(0.5).unwrap()).abs() < 1e-15);
        assert!(matches!(ln_h(&t, &e, t.theta0), Err(Error::ThetaDomain { .. })));
    }

    #[test]
    fn exponential_minimum_matches_dense_grid() {
        let e = MixingDistribution::exponential(1.0).unwrap();
        let t = tm(1.0, 1.0, 0.0, &e);
        let m = minimize_h(&t, &e, QDomain::Full).unwrap();
        let n = 1_000_000;
        let lo = -t.theta0;
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for i in 1..n {
            let th = lo + (0.0 - lo) * i as f64 / n as f64;
            let v = ln_h(&t, &e, th).unwrap();
            if v < best {
                best = v;
                arg = th;
            }
        }
        assert!((m.q - arg).abs() < 1e-6, "{} vs {arg}", m.q);
        let f = solve_foc(&t, &e).unwrap();
        assert!((f.theta - m.q).abs() < 1e-10);
    }

    #[test]
    fn nonnegative_domain_returns_left_end() {
        let e = MixingDistribution::exponential(1.0).unwrap();
        let t = tm(1.0, 1.0, 0.0, &e);
        let m = minimize_h(&t, &e, QDomain::Interval { lo: 0.3, hi: 0.7 }).unwrap();
        assert_eq!(m.q, 0.3);
        assert!(matches!(minimize_h(&t, &e, QDomain::Interval { lo: 0.7, hi: 0.3 }), Err(Error::EmptyDomain)));
        assert!(matches!(minimize_h(&t, &e, QDomain::Interval { lo: 5.0, hi: 6.0 }), Err(Error::EmptyDomain)));
    }

    #[test]
    fn interval_clips_to_constraint() {
        let c = MixingDistribution::constant(1.0).unwrap();
        let t = tm(0.5, 2.0, 0.1, &c);
        let m = minimize_h(&t, &c, QDomain::Interval { lo: -0.5, hi: 3.0 }).unwrap();
        assert!((m.q + 0.5).abs() < 1e-15);
        let m = minimize_h(&t, &c, QDomain::Interval { lo: -3.0, hi: -1.5 }).unwrap();
        assert!((m.q + 1.5).abs() < 1e-15);
        let m = minimize_h(&t, &c, QDomain::Interval { lo: f64::NEG_INFINITY, hi: 1.0 }).unwrap();
        assert!((m.q + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_excess_return() {
        let e = MixingDistribution::exponential(1.0).unwrap();
        let t = TransformedModel::from_coordinates(
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![0.3, 0.1]),
            -1.0,
        )
        .unwrap();
        assert_eq!(minimize_h(&t, &e, QDomain::Full), Err(Error::DegenerateExcessReturn));
        assert_eq!(solve_foc(&t, &e), Err(Error::DegenerateExcessReturn));
    }

    #[test]
    fn gig_foc_agrees_with_minimizer() {
        for &(l, chi, psi) in &[(-0.5, 1.0, 1.0), (0.7, 2.0, 0.5), (2.0, 0.5, 2.0), (-1.0, 0.5, 0.5)] {
            let g = MixingDistribution::gig(l, chi, psi).unwrap();
            let t = tm(0.8, 1.1, -0.2, &g);
            let m = minimize_h(&t, &g, QDomain::Full).unwrap();
            let f = solve_foc(&t, &g).unwrap();
            assert!((m.q - f.theta).abs() < 1e-8, "λ={l}: {} vs {}", m.q, f.theta);
            assert!(h_log_derivative(&t, &g, m.q).unwrap().abs() < 1e-8 * t.c_s);
        }
    }

    #[test]
    fn worked_example_portfolios() {
        let model = MarketModel::new(0.0, &[0.1, 0.2], &[0.05, 0.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let c = MixingDistribution::constant(1.0).unwrap();
        let r = optimize(&model, &c, 1.0, 1.0, ExcessReturnBounds::default(), Solver::MinimizeH).unwrap();
        assert!((r.q_min + 1.0).abs() < 1e-12);
        assert!((r.x_star[0] - 0.15).abs() < 1e-12 && (r.x_star[1] - 0.2).abs() < 1e-12);
        let r2 = optimize(&model, &c, 2.0, 1.0, ExcessReturnBounds::default(), Solver::Foc).unwrap();
        for i in 0..2 {
            assert!((r2.x_star[i] - 0.5 * r.x_star[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn level_set_identity() {
        let model = MarketModel::new(0.01, &[0.1, 0.2, 0.05], &[0.05, -0.1, 0.02], &[1.0, 0.1, 0.0, 0.2, 0.8, 0.1, 0.0, 0.3, 1.1])
            .unwrap();
        let e = MixingDistribution::exponential(1.0).unwrap();
        let t = model::transform(&model, &e).unwrap();
        for &c in &[-0.2, 0.0, 0.1, 0.4] {
            let (x, g) = level_set_maximizer(&t, &model, 1.5, 2.0, c).unwrap();
            let p = Portfolio::new(&x, 2.0, 1.5).unwrap();
            assert!((model::g_value(&model, &p).unwrap() - g).abs() < 1e-10);
            let excess = p.x.dot(&model.excess_mean());
            assert!((excess - c).abs() < 1e-12);
        }
    }
}
