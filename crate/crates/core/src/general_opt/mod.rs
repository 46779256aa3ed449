//! General smooth utilities through a moment expansion.
//!
//! The terminal wealth of a portfolio with `y = Aᵀx` is
//!
//! ```text
//! W(y) = W₀(1 + r_f) + W₀ρ(|μ₀|ψ + |γ₀|φ Z) + W₀ρ √Z N
//! ```
//!
//! so its law depends on `x` only through `(φ, ψ, ρ)`. Expanding `U` around
//! the mean wealth `w(y)` gives
//! `M = U(w) + Σ_{k≥2} U^(k)(w) W₀^k ρ^k J_k(φ) / k!`, which is truncated at a
//! chosen order and maximized over the three reduced variables.

pub mod reduced;
pub mod utility;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixing::MixingDistribution;
use crate::model::{self, MarketModel, Portfolio, TransformedModel};
use crate::optim::{nelder_mead, NelderMeadOptions};

pub use reduced::{
    cos_gamma_mu, gram_matrix, is_gram_feasible, project_portfolio, reconstruct_portfolio, ReducedFrame,
    ReducedPoint,
};
pub use utility::{CustomUtility, UtilitySpec};

/// Highest truncation order accepted by the optimizer.
pub const MAX_ORDER: usize = 12;
pub const DEFAULT_ORDER: usize = 4;

/// `E[N^m]` for a standard normal `N`: `0` for odd `m`, `m!/(2^{m/2}(m/2)!)`
/// otherwise.
pub fn normal_moment(m: u32) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    (1..m).step_by(2).map(f64::from).product()
}

fn binomial(k: usize, i: usize) -> f64 {
    (0..i).fold(1.0, |acc, j| acc * (k - j) as f64 / (j + 1) as f64)
}

/// `E[(Z − EZ)^i Z^{(k−i)/2}]` for all `i ≤ k ≤ max_k` (only where the
/// matching normal moment is nonzero).
#[derive(Debug, Clone)]
pub struct MomentTable {
    rows: Vec<Vec<f64>>,
    pub mean: f64,
    pub variance: f64,
}

impl MomentTable {
    pub fn new(mix: &MixingDistribution, max_k: usize) -> Result<Self> {
        let mut rows = Vec::with_capacity(max_k + 1);
        for k in 0..=max_k {
            let mut row = vec![0.0; k + 1];
            for (i, slot) in row.iter_mut().enumerate() {
                if (k - i) % 2 == 0 {
                    *slot = mix.mixed_central_moment(i as u32, (k - i) as f64 / 2.0)?;
                }
            }
            rows.push(row);
        }
        Ok(Self { rows, mean: mix.mean(), variance: mix.variance() })
    }

    pub fn max_k(&self) -> usize {
        self.rows.len() - 1
    }

    /// `J_k = Σᵢ C(k,i) E[(Z−EZ)^i Z^{(k−i)/2}] E[N^{k−i}] (|γ₀|φ)^i`.
    pub fn j(&self, k: usize, g_phi: f64) -> f64 {
        if k == 1 {
            return 0.0;
        }
        let row = &self.rows[k];
        (0..=k)
            .filter(|i| (k - i).is_multiple_of(2))
            .map(|i| binomial(k, i) * row[i] * normal_moment((k - i) as u32) * g_phi.powi(i as i32))
            .sum()
    }
}

/// `J_k(y)` for cosine `φ` and `|γ₀| = g_norm`.
pub fn j_k(k: usize, phi: f64, g_norm: f64, mix: &MixingDistribution) -> Result<f64> {
    Ok(MomentTable::new(mix, k)?.j(k, g_norm * phi))
}

/// `w(y) = W₀(1 + r_f) + W₀ρ(|μ₀|ψ + |γ₀|φ EZ)`.
pub fn mean_wealth(tm: &TransformedModel, w0: f64, r_f: f64, p: &ReducedPoint, mix: &MixingDistribution) -> f64 {
    w0 * (1.0 + r_f) + w0 * p.rho * (tm.c_s.sqrt() * p.psi + tm.a_s.sqrt() * p.phi * mix.mean())
}

/// `E[(W − w)^k] = W₀^k ρ^k J_k`.
pub fn wealth_central_moment(
    k: usize,
    p: &ReducedPoint,
    mix: &MixingDistribution,
    w0: f64,
    g_norm: f64,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidOrder { order: 0.0 });
    }
    Ok((w0 * p.rho).powi(k as i32) * j_k(k, p.phi, g_norm, mix)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistStats {
    pub std: f64,
    pub skew: f64,
    pub kurt: f64,
}

/// Standard deviation, skewness and kurtosis of `W(y)` in closed form.
pub fn dist_stats(p: &ReducedPoint, mix: &MixingDistribution, w0: f64, g_norm: f64) -> Result<DistStats> {
    let ez = mix.mean();
    let var = mix.variance();
    let ez2 = mix.moment(2.0)?;
    let ez3 = mix.moment(3.0)?;
    let m3 = mix.mixed_central_moment(3, 0.0)?;
    let m4 = mix.mixed_central_moment(4, 0.0)?;
    let gp = g_norm * p.phi;
    let j2 = gp * gp * var + ez;
    Ok(DistStats {
        std: w0 * p.rho * j2.sqrt(),
        skew: (gp.powi(3) * m3 + 3.0 * gp * var) / j2.powf(1.5),
        kurt: (gp.powi(4) * m4 + 6.0 * gp * gp * (ez3 - 2.0 * ez2 * ez + ez.powi(3)) + 3.0 * ez2) / (j2 * j2),
    })
}

/// The truncated expansion `M_K` with its moment table precomputed.
#[derive(Debug, Clone)]
pub struct Expansion<'a> {
    utility: &'a UtilitySpec,
    order: usize,
    table: MomentTable,
    g_norm: f64,
    m_norm: f64,
    w0: f64,
    r_f: f64,
}

impl<'a> Expansion<'a> {
    pub fn new(
        tm: &TransformedModel,
        mix: &MixingDistribution,
        utility: &'a UtilitySpec,
        order: usize,
        w0: f64,
        r_f: f64,
    ) -> Result<Self> {
        if order > utility.max_order() {
            return Err(Error::OrderUnavailable { order, max: utility.max_order() });
        }
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(Error::InvalidParameter(format!("truncation order must lie in 2..={MAX_ORDER}, got {order}")));
        }
        if !(w0 > 0.0 && w0.is_finite()) {
            return Err(Error::InvalidParameter(format!("initial wealth must be positive, got {w0}")));
        }
        Ok(Self {
            utility,
            order,
            table: MomentTable::new(mix, order)?,
            g_norm: tm.a_s.sqrt(),
            m_norm: tm.c_s.sqrt(),
            w0,
            r_f,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mean_wealth(&self, p: &ReducedPoint) -> f64 {
        self.w0 * (1.0 + self.r_f) + self.w0 * p.rho * (self.m_norm * p.psi + self.g_norm * p.phi * self.table.mean)
    }

    pub fn value(&self, p: &ReducedPoint) -> f64 {
        let w = self.mean_wealth(p);
        let mut total = self.utility.value(w);
        let scale = self.w0 * p.rho;
        if scale == 0.0 {
            return total;
        }
        let g_phi = self.g_norm * p.phi;
        let mut factorial = 1.0;
        for k in 2..=self.order {
            factorial *= k as f64;
            let d = self.utility.derivative(k, w);
            if d != 0.0 {
                total += d * scale.powi(k as i32) * self.table.j(k, g_phi) / factorial;
            }
        }
        total
    }
}

/// `M_K(φ, ψ, ρ)` for truncation order `K = order`.
pub fn m_objective(
    p: &ReducedPoint,
    utility: &UtilitySpec,
    order: usize,
    tm: &TransformedModel,
    mix: &MixingDistribution,
    w0: f64,
    r_f: f64,
) -> Result<f64> {
    Ok(Expansion::new(tm, mix, utility, order, w0, r_f)?.value(p))
}

/// Box constraints on the reduced variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedBox {
    pub phi: (f64, f64),
    pub psi: (f64, f64),
    /// `None` selects `[0, 3ρ_mv]`, see [`default_rho_max`].
    pub rho: Option<(f64, f64)>,
}

impl Default for ReducedBox {
    fn default() -> Self {
        Self { phi: (-1.0, 1.0), psi: (-1.0, 1.0), rho: None }
    }
}

impl ReducedBox {
    fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64), min: f64, max: f64| lo <= hi && lo >= min && hi <= max;
        if !ok(self.phi, -1.0, 1.0) || !ok(self.psi, -1.0, 1.0) {
            return Err(Error::InvalidParameter(format!(
                "phi/psi bounds must be ordered subsets of [-1, 1], got {:?} and {:?}",
                self.phi, self.psi
            )));
        }
        if let Some(r) = self.rho {
            if !ok(r, 0.0, f64::MAX) {
                return Err(Error::InvalidParameter(format!("rho bounds must satisfy 0 <= lo <= hi < inf, got {r:?}")));
            }
        }
        Ok(())
    }
}

/// `3|y_mv|` where `y_mv = (T/W₀) S⁻¹(μ₀ + γ₀EZ)`, `S = EZ·I + Var Z·γ₀γ₀ᵀ`
/// and `T = −U'/U''` at the riskless wealth: three times the mean-variance
/// optimum of an investor with the same local risk tolerance. Falls back to
/// `1` when that optimum is zero or undefined.
pub fn default_rho_max(tm: &TransformedModel, mix: &MixingDistribution, utility: &UtilitySpec, w0: f64, r_f: f64) -> f64 {
    let tol = utility.risk_tolerance(w0 * (1.0 + r_f));
    let ez = mix.mean();
    let var = mix.variance();
    let m = &tm.mu0 + &tm.gamma0 * ez;
    let s_inv_m = (&m - &tm.gamma0 * (var * tm.gamma0.dot(&m) / (ez + var * tm.a_s))) / ez;
    let r = 3.0 * (tol / w0).abs() * s_inv_m.norm();
    if r.is_finite() && r > 0.0 {
        r
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Optimum3d {
    pub point: ReducedPoint,
    pub m_value: f64,
    pub evaluations: usize,
    pub rho_max: f64,
    pub at_rho_upper_bound: bool,
}

const LATTICE: (usize, usize, usize) = (5, 5, 7);
const LOCAL_STARTS: usize = 8;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if lo == hi || n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Unit directions spread over the frame's sphere.
fn angle_lattice(dim: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..16).map(|i| {
            let a = 2.0 * PI * i as f64 / 16.0;
            vec![a.cos(), a.sin()]
        })
        .collect(),
        _ => {
            let mut out = vec![vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]];
            for i in 1..LATTICE.0 {
                let a = PI * i as f64 / LATTICE.0 as f64;
                for j in 0..LATTICE.1 + 3 {
                    let b = 2.0 * PI * j as f64 / (LATTICE.1 + 3) as f64;
                    out.push(vec![a.cos(), a.sin() * b.cos(), a.sin() * b.sin()]);
                }
            }
            out
        }
    }
}

/// Maximizes `M_K` over the Gram-feasible points of `bx`.
///
/// Search variables are the coordinates `v` of `y` in a [`ReducedFrame`], so
/// every probe is a valid direction. Starts come from a `(φ, ψ, ρ)` lattice
/// and an angular lattice of the frame; the best few are refined by
/// Nelder–Mead in parallel and merged deterministically.
pub fn optimize_3d(
    tm: &TransformedModel,
    mix: &MixingDistribution,
    utility: &UtilitySpec,
    order: usize,
    w0: f64,
    r_f: f64,
    bx: &ReducedBox,
) -> Result<Optimum3d> {
    bx.validate()?;
    let expansion = Expansion::new(tm, mix, utility, order, w0, r_f)?;
    let frame = ReducedFrame::new(tm);
    let (rho_lo, rho_hi) = bx.rho.unwrap_or((0.0, default_rho_max(tm, mix, utility, w0, r_f)));
    let has_g = tm.a_s > 0.0;
    let has_m = tm.c_s > 0.0;
    let slack = 1e-12;
    let inside = |p: &ReducedPoint| {
        let inb = |x: f64, (lo, hi): (f64, f64)| x >= lo - slack && x <= hi + slack;
        inb(p.rho, (rho_lo, rho_hi))
            && (p.rho == 0.0 || ((!has_g || inb(p.phi, bx.phi)) && (!has_m || inb(p.psi, bx.psi))))
    };
    let objective = |v: &[f64]| {
        let p = frame.point_of(v);
        if !inside(&p) {
            return f64::INFINITY;
        }
        let m = expansion.value(&p);
        if m.is_nan() {
            f64::INFINITY
        } else {
            -m
        }
    };

    let rhos = linspace(rho_lo, rho_hi, LATTICE.2);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for &phi in &linspace(bx.phi.0, bx.phi.1, LATTICE.0) {
        for &psi in &linspace(bx.psi.0, bx.psi.1, LATTICE.1) {
            if let Ok(u) = frame.direction(phi, psi) {
                for &rho in &rhos {
                    starts.push(u.iter().map(|x| x * rho).collect());
                }
            }
        }
    }
    for u in angle_lattice(frame.dim()) {
        for &rho in &rhos {
            starts.push(u.iter().map(|x| x * rho).collect());
        }
    }
    let mut scored: Vec<(f64, Vec<f64>)> = starts
        .into_iter()
        .map(|v| (objective(&v), v))
        .filter(|(f, _)| f.is_finite())
        .collect();
    if scored.is_empty() {
        return Err(Error::EmptyFeasibleRegion);
    }
    let lattice_evals = scored.len();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lex(&a.1, &b.1)));
    scored.dedup_by(|a, b| a.1 == b.1);
    scored.truncate(LOCAL_STARTS);

    let step_len = 0.1 * (rho_hi - rho_lo).max(1e-3 * rho_hi);
    let refined: Vec<(f64, Vec<f64>, usize)> = if rho_hi > 0.0 {
        scored
            .par_iter()
            .map(|(f0, v0)| {
                let step = vec![step_len; v0.len()];
                let r = nelder_mead(objective, v0, &step, NelderMeadOptions::default());
                if r.fx <= *f0 {
                    (r.fx, r.x, r.evaluations)
                } else {
                    (*f0, v0.clone(), r.evaluations)
                }
            })
            .collect()
    } else {
        scored.iter().map(|(f, v)| (*f, v.clone(), 0)).collect()
    };
    let evaluations = lattice_evals + refined.iter().map(|r| r.2).sum::<usize>();
    let best = refined
        .into_iter()
        .min_by(|a, b| {
            a.0.total_cmp(&b.0).then_with(|| {
                let (pa, pb) = (frame.point_of(&a.1), frame.point_of(&b.1));
                lex(&[pa.phi, pa.psi, pa.rho], &[pb.phi, pb.psi, pb.rho])
            })
        })
        .expect("at least one start");
    let mut point = frame.point_of(&best.1);
    point.rho = point.rho.clamp(rho_lo, rho_hi);
    if has_g && point.rho > 0.0 {
        point.phi = point.phi.clamp(bx.phi.0, bx.phi.1);
    }
    if has_m && point.rho > 0.0 {
        point.psi = point.psi.clamp(bx.psi.0, bx.psi.1);
    }
    Ok(Optimum3d {
        point,
        m_value: -best.0,
        evaluations,
        rho_max: rho_hi,
        at_rho_upper_bound: rho_hi > 0.0 && point.rho >= rho_hi * (1.0 - 1e-6),
    })
}

fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralOptResult {
    pub point: ReducedPoint,
    pub x: Vec<f64>,
    pub m_value: f64,
    /// `|M_K − E U(W)|` for exponential utility (exact value available),
    /// `|M_K − M_{K+1}|` otherwise. `None` if neither can be evaluated.
    pub truncation_gap: Option<f64>,
    /// Exact expected utility of `x` (exponential utility only; `None` when
    /// the portfolio falls outside the finite-utility set).
    pub exact_utility: Option<f64>,
    pub order: usize,
    pub rho_max: f64,
    pub at_rho_upper_bound: bool,
    pub evaluations: usize,
}

/// Optimizes, reconstructs the weights and reports the truncation gap.
pub fn general_optimize(
    model: &MarketModel,
    mix: &MixingDistribution,
    utility: &UtilitySpec,
    order: usize,
    w0: f64,
    bx: &ReducedBox,
) -> Result<GeneralOptResult> {
    let tm = model::transform(model, mix)?;
    let r_f = model.r_f();
    let opt = optimize_3d(&tm, mix, utility, order, w0, r_f, bx)?;
    let x = reconstruct_portfolio(&opt.point, &tm, model)?;
    let (exact_utility, truncation_gap) = match utility {
        UtilitySpec::Exponential { a } => {
            let p = Portfolio::new(&x, w0, *a)?;
            match model::expected_exp_utility(model, mix, &p) {
                Ok(u) => (Some(u), Some((opt.m_value - u).abs())),
                Err(Error::Infeasible { .. }) => (None, None),
                Err(e) => return Err(e),
            }
        }
        _ => {
            let gap = (order < utility.max_order() && order < MAX_ORDER)
                .then(|| m_objective(&opt.point, utility, order + 1, &tm, mix, w0, r_f))
                .transpose()?
                .map(|m| (m - opt.m_value).abs());
            (None, gap)
        }
    };
    Ok(GeneralOptResult {
        point: opt.point,
        x,
        m_value: opt.m_value,
        truncation_gap,
        exact_utility,
        order,
        rho_max: opt.rho_max,
        at_rho_upper_bound: opt.at_rho_upper_bound,
        evaluations: opt.evaluations,
    })
}
