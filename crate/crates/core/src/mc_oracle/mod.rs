//! Monte Carlo ground truth for the closed-form solvers.
//!
//! Scenarios are drawn in fixed blocks keyed by `(seed, block)` and every
//! reduction merges block summaries in block order, so estimates are
//! bit-identical for any thread count. Reusing one [`ScenarioSet`] across
//! portfolio probes (common random numbers) turns a Monte Carlo objective
//! into a deterministic, smooth function of the portfolio.

pub mod quadrature;

mod large;
mod moments;

pub use large::{large_market_minimum, large_market_scenarios, martingale_check, MartingaleBin, MartingaleReport};
pub use moments::{mc_wealth_moments, WealthMoments};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::general_opt::UtilitySpec;
use crate::mixing::MixingDistribution;
use crate::model::MarketModel;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::random::{blocks, StreamRng, BLOCK_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub seed: u64,
    pub paths: usize,
    /// Pairs every Gaussian draw `N` with `−N` under the same `Z`.
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(seed: u64, paths: usize) -> Result<Self> {
        if paths == 0 {
            return Err(Error::InvalidParameter("paths must be at least 1".into()));
        }
        Ok(Self { seed, paths, antithetic: false })
    }

    pub fn antithetic(mut self) -> Result<Self> {
        if self.paths % 2 == 1 {
            return Err(Error::InvalidParameter(format!(
                "antithetic sampling needs an even number of paths, got {}",
                self.paths
            )));
        }
        self.antithetic = true;
        Ok(self)
    }
}

/// A sample mean with its standard error. Non-finite draws are excluded from
/// the mean and counted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub non_finite: usize,
}

impl Estimate {
    /// `|mean − target| ≤ k · stderr`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Running count, mean and centered sum of squares; merged with Chan's
/// pairwise update.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Acc {
    n: usize,
    mean: f64,
    m2: f64,
    non_finite: usize,
}

impl Acc {
    #[inline]
    pub(crate) fn push(&mut self, v: f64) {
        if !v.is_finite() {
            self.non_finite += 1;
            return;
        }
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    pub(crate) fn merge(self, o: Acc) -> Acc {
        if self.n == 0 {
            return Acc { non_finite: self.non_finite + o.non_finite, ..o };
        }
        if o.n == 0 {
            return Acc { non_finite: self.non_finite + o.non_finite, ..self };
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        let (na, nb) = (self.n as f64, o.n as f64);
        Acc {
            n,
            mean: self.mean + d * nb / n as f64,
            m2: self.m2 + o.m2 + d * d * na * nb / n as f64,
            non_finite: self.non_finite + o.non_finite,
        }
    }

    pub(crate) fn estimate(&self) -> Estimate {
        let stderr = if self.n > 1 { (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt() } else { f64::NAN };
        Estimate { mean: if self.n > 0 { self.mean } else { f64::NAN }, stderr, samples: self.n, non_finite: self.non_finite }
    }
}

pub(crate) fn merge_in_order(parts: Vec<Acc>) -> Acc {
    parts.into_iter().fold(Acc::default(), Acc::merge)
}

/// A frozen set of scenarios: one mixing draw `z` and one row of `n` values
/// per path, stored row-major.
#[derive(Debug, Clone)]
pub struct ScenarioSet {
    n: usize,
    z: Vec<f64>,
    rows: Vec<f64>,
    antithetic: bool,
}

impl ScenarioSet {
    /// Builds `cfg.paths` rows; `fill(z, g, row)` maps a mixing draw and an
    /// `n`-vector of standard normals (`dim` of them) to the stored row.
    pub(crate) fn generate<F>(cfg: &McConfig, mix: &MixingDistribution, dim: usize, n: usize, fill: F) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) + Sync,
    {
        let drawer = mix.drawer();
        let parts: Vec<(Vec<f64>, Vec<f64>)> = blocks(cfg.paths)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(block, _, len)| {
                let mut rng = StreamRng::new(cfg.seed, block);
                let mut z = Vec::with_capacity(len);
                let mut rows = vec![0.0; len * n];
                let mut g = vec![0.0; dim];
                let mut k = 0;
                while k < len {
                    let zz = drawer.draw(&mut rng);
                    g.iter_mut().for_each(|v| *v = rng.normal());
                    z.push(zz);
                    fill(zz, &g, &mut rows[k * n..(k + 1) * n]);
                    k += 1;
                    if cfg.antithetic {
                        g.iter_mut().for_each(|v| *v = -*v);
                        z.push(zz);
                        fill(zz, &g, &mut rows[k * n..(k + 1) * n]);
                        k += 1;
                    }
                }
                (z, rows)
            })
            .collect();
        let (z, rows): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
        Self { n, z: z.concat(), rows: rows.concat(), antithetic: cfg.antithetic }
    }

    /// Excess returns `X − 𝟏r_f` of the model.
    pub fn nmvm(model: &MarketModel, mix: &MixingDistribution, cfg: &McConfig) -> Self {
        let n = model.n();
        let excess = model.excess_mean();
        let gamma = model.gamma().clone();
        let a = model.a().clone();
        Self::generate(cfg, mix, n, n, |z, g, row| {
            let s = z.sqrt();
            for i in 0..n {
                let mut ag = 0.0;
                for j in 0..n {
                    ag += a[(i, j)] * g[j];
                }
                row[i] = excess[i] + gamma[i] * z + s * ag;
            }
        })
    }

    pub fn paths(&self) -> usize {
        self.z.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    /// Mean and standard error of `f(row, z)` over the paths; antithetic
    /// pairs count as one sample.
    pub fn estimate<F>(&self, f: F) -> Estimate
    where
        F: Fn(&[f64], f64) -> f64 + Sync,
    {
        let n = self.n;
        let parts: Vec<Acc> = self
            .rows
            .par_chunks(BLOCK_SIZE * n.max(1))
            .zip(self.z.par_chunks(BLOCK_SIZE))
            .map(|(rows, zs)| {
                let mut acc = Acc::default();
                if self.antithetic {
                    for (pair, zp) in rows.chunks(2 * n).zip(zs.chunks(2)) {
                        let v = 0.5 * (f(&pair[..n], zp[0]) + f(&pair[n..], zp[1]));
                        if v.is_finite() {
                            acc.push(v);
                        } else {
                            acc.non_finite += 2;
                        }
                    }
                } else {
                    for (row, &z) in rows.chunks(n.max(1)).zip(zs) {
                        acc.push(f(row, z));
                    }
                }
                acc
            })
            .collect();
        merge_in_order(parts).estimate()
    }

    /// Mean and standard error of `f(rowᵀx)`.
    pub fn estimate_linear<F>(&self, x: &[f64], f: F) -> Estimate
    where
        F: Fn(f64) -> f64 + Sync,
    {
        self.estimate(|row, _| f(row.iter().zip(x).map(|(r, x)| r * x).sum()))
    }
}

/// `paths × n` draws of `X = μ + γZ + √Z·A·N`.
pub fn sample_returns(model: &MarketModel, mix: &MixingDistribution, cfg: &McConfig) -> DMatrix<f64> {
    let s = ScenarioSet::nmvm(model, mix, cfg);
    let r_f = model.r_f();
    DMatrix::from_row_iterator(s.paths(), s.dim(), s.rows.iter().map(|v| v + r_f))
}

/// `E U(W₀(1+r_f) + W₀xᵀ(X − 𝟏r_f))` on a frozen scenario set.
pub fn expected_utility_on(
    scenarios: &ScenarioSet,
    r_f: f64,
    utility: &UtilitySpec,
    x: &[f64],
    w0: f64,
) -> Estimate {
    let base = w0 * (1.0 + r_f);
    scenarios.estimate_linear(x, |v| utility.value(base + w0 * v))
}

pub fn mc_expected_utility(
    model: &MarketModel,
    mix: &MixingDistribution,
    utility: &UtilitySpec,
    x: &[f64],
    w0: f64,
    cfg: &McConfig,
) -> Result<Estimate> {
    check_len(x, model.n())?;
    let s = ScenarioSet::nmvm(model, mix, cfg);
    Ok(expected_utility_on(&s, model.r_f(), utility, x, w0))
}

/// `E U(W)` computed from the first two moments of wealth, exact for the
/// quadratic utility `w − b w²`: `E W = W₀(1+r_f) + W₀(xᵀ(μ−𝟏r_f) + xᵀγ E Z)`,
/// `Var W = W₀²(E Z · xᵀΣx + Var Z · (xᵀγ)²)`.
pub fn exact_quadratic_utility(model: &MarketModel, mix: &MixingDistribution, b: f64, x: &[f64], w0: f64) -> Result<f64> {
    check_len(x, model.n())?;
    let xv = nalgebra::DVector::from_column_slice(x);
    let mean = w0 * (1.0 + model.r_f()) + w0 * (xv.dot(&model.excess_mean()) + xv.dot(model.gamma()) * mix.mean());
    let var = w0 * w0 * (mix.mean() * (model.sigma() * &xv).dot(&xv) + mix.variance() * xv.dot(model.gamma()).powi(2));
    Ok(mean - b * (var + mean * mean))
}

fn check_len(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::Dimension(format!("portfolio has length {}, model has {n} assets", x.len())));
    }
    Ok(())
}

/// Axis-aligned search region.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Dimension("box bounds must be nonempty and of equal length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
            return Err(Error::InvalidParameter("box bounds must be finite with lower <= upper".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn symmetric(n: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![-half_width; n], vec![half_width; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.lower.iter().zip(&self.upper)).map(|(v, (l, u))| v.clamp(*l, *u)).collect()
    }

    fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BruteForceMethod {
    /// Exhaustive search over `points_per_axis^n` grid nodes (`n ≤ 6`).
    Grid { points_per_axis: usize },
    /// Nelder–Mead on the box-clamped objective from the box center and
    /// `starts − 1` further seeded points.
    SimplexDescent { starts: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxMax {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Maximizes `f` over `bx`.
pub fn maximize_in_box<F>(f: F, bx: &SearchBox, method: BruteForceMethod) -> Result<BoxMax>
where
    F: Fn(&[f64]) -> f64,
{
    let n = bx.dim();
    match method {
        BruteForceMethod::Grid { points_per_axis: m } => {
            if n > 6 {
                return Err(Error::Dimension(format!("grid search supports n <= 6, got {n}")));
            }
            if m < 2 {
                return Err(Error::InvalidParameter("grid needs at least 2 points per axis".into()));
            }
            let total = m.checked_pow(n as u32).filter(|&t| t <= 50_000_000).ok_or_else(|| {
                Error::InvalidParameter(format!("grid of {m}^{n} nodes is too large"))
            })?;
            let mut best = BoxMax { x: bx.center(), value: f64::NEG_INFINITY, evaluations: 0 };
            let mut x = vec![0.0; n];
            for idx in 0..total {
                let mut r = idx;
                for (k, xk) in x.iter_mut().enumerate() {
                    let t = (r % m) as f64 / (m - 1) as f64;
                    r /= m;
                    *xk = bx.lower[k] + t * (bx.upper[k] - bx.lower[k]);
                }
                let v = f(&x);
                best.evaluations += 1;
                if v > best.value {
                    best.value = v;
                    best.x.copy_from_slice(&x);
                }
            }
            Ok(best)
        }
        BruteForceMethod::SimplexDescent { starts } => {
            if starts == 0 {
                return Err(Error::InvalidParameter("simplex descent needs at least one start".into()));
            }
            let step: Vec<f64> = bx.lower.iter().zip(&bx.upper).map(|(l, u)| 0.1 * (u - l)).collect();
            let mut rng = StreamRng::new(0x5eed_b0c5, u64::MAX);
            let mut best = BoxMax { x: bx.center(), value: f64::NEG_INFINITY, evaluations: 0 };
            let opts = NelderMeadOptions { max_evals: 4000 * n.max(1), f_tol: 1e-15, x_tol: 1e-9, restarts: 2 };
            for s in 0..starts {
                let x0 = if s == 0 {
                    bx.center()
                } else {
                    bx.lower.iter().zip(&bx.upper).map(|(l, u)| l + (u - l) * rng.uniform()).collect()
                };
                let r = nelder_mead(|x| -f(&bx.clamp(x)), &x0, &step, opts);
                best.evaluations += r.evaluations;
                if -r.fx > best.value {
                    best.value = -r.fx;
                    best.x = bx.clamp(&r.x);
                }
            }
            Ok(best)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub x: Vec<f64>,
    /// Expected utility at `x` on the optimization's own scenarios.
    pub estimate: Estimate,
    pub evaluations: usize,
}

/// Maximizes the common-random-numbers estimate of `E U(W(x))` over `bx`.
pub fn brute_force_optimize(
    model: &MarketModel,
    mix: &MixingDistribution,
    utility: &UtilitySpec,
    w0: f64,
    cfg: &McConfig,
    method: BruteForceMethod,
    bx: &SearchBox,
) -> Result<BruteForceResult> {
    if bx.dim() != model.n() {
        return Err(Error::Dimension(format!("box has dimension {}, model has {} assets", bx.dim(), model.n())));
    }
    let s = ScenarioSet::nmvm(model, mix, cfg);
    let r_f = model.r_f();
    let m = maximize_in_box(|x| expected_utility_on(&s, r_f, utility, x, w0).mean, bx, method)?;
    Ok(BruteForceResult { estimate: expected_utility_on(&s, r_f, utility, &m.x, w0), x: m.x, evaluations: m.evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exp_opt::{self, ExcessReturnBounds, Solver};

    fn model2() -> MarketModel {
        MarketModel::new(0.01, &[0.05, 0.03], &[0.02, -0.01], &[0.2, 0.0, 0.05, 0.15]).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::new(1, 0).is_err());
        assert!(McConfig::new(1, 3).unwrap().antithetic().is_err());
        assert!(McConfig::new(1, 4).unwrap().antithetic().unwrap().antithetic);
    }

    #[test]
    fn accumulator_merge_matches_direct() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1 - 3.0).collect();
        let mut whole = Acc::default();
        xs.iter().for_each(|&v| whole.push(v));
        let parts: Vec<Acc> = xs
            .chunks(77)
            .map(|c| {
                let mut a = Acc::default();
                c.iter().for_each(|&v| a.push(v));
                a
            })
            .collect();
        let merged = merge_in_order(parts);
        assert!((merged.mean - whole.mean).abs() < 1e-13);
        assert!((merged.m2 - whole.m2).abs() < 1e-9 * whole.m2);
        assert_eq!(merged.n, 1000);
    }

    #[test]
    fn constant_mixing_rows_are_gaussian_affine() {
        let m = model2();
        let mix = MixingDistribution::constant(1.0).unwrap();
        let cfg = McConfig::new(3, 10).unwrap();
        let x = sample_returns(&m, &mix, &cfg);
        // Same stream, same normals: rows must be μ + γ + A·g.
        let mut rng = StreamRng::new(3, 0);
        for i in 0..10 {
            let g = nalgebra::DVector::from_fn(2, |_, _| rng.normal());
            let expect = m.mu() + m.gamma() + m.a() * g;
            for j in 0..2 {
                assert!((x[(i, j)] - expect[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sample_mean_and_covariance() {
        let m = model2();
        let mix = MixingDistribution::exponential(1.0).unwrap();
        let cfg = McConfig::new(11, 400_000).unwrap();
        let s = ScenarioSet::nmvm(&m, &mix, &cfg);
        let mean = m.mu() + m.gamma() * mix.mean();
        let cov = m.sigma() * mix.mean() + m.gamma() * m.gamma().transpose() * mix.variance();
        for i in 0..2 {
            let e = s.estimate(|row, _| row[i] + m.r_f());
            assert!(e.agrees_with(mean[i], 4.0), "mean {i}: {e:?} vs {}", mean[i]);
            for j in 0..2 {
                let e = s.estimate(|row, _| (row[i] + m.r_f() - mean[i]) * (row[j] + m.r_f() - mean[j]));
                assert!(e.agrees_with(cov[(i, j)], 4.0), "cov {i}{j}: {e:?} vs {}", cov[(i, j)]);
            }
        }
    }

    #[test]
    fn zero_portfolio_is_exact() {
        let m = model2();
        let mix = MixingDistribution::exponential(1.0).unwrap();
        let u = UtilitySpec::exponential(2.0).unwrap();
        let e = mc_expected_utility(&m, &mix, &u, &[0.0, 0.0], 1.5, &McConfig::new(1, 5000).unwrap()).unwrap();
        assert_eq!(e.mean, u.value(1.5 * 1.01));
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn exponential_utility_matches_closed_form() {
        let m = model2();
        let mix = MixingDistribution::exponential(1.0).unwrap();
        let (a, w0) = (2.0, 1.0);
        let x = [0.4, -0.3];
        let exact = crate::model::expected_exp_utility(&m, &mix, &crate::model::Portfolio::new(&x, w0, a).unwrap()).unwrap();
        let e = mc_expected_utility(&m, &mix, &UtilitySpec::exponential(a).unwrap(), &x, w0, &McConfig::new(5, 200_000).unwrap())
            .unwrap();
        assert!(e.agrees_with(exact, 3.0), "{e:?} vs {exact}");
    }

    #[test]
    fn quadratic_utility_matches_moment_formula() {
        let m = model2();
        let mix = MixingDistribution::gig(-0.5, 1.0, 1.0).unwrap();
        let x = [1.5, 0.7];
        let exact = exact_quadratic_utility(&m, &mix, 0.2, &x, 2.0).unwrap();
        let e = mc_expected_utility(&m, &mix, &UtilitySpec::quadratic(0.2).unwrap(), &x, 2.0, &McConfig::new(9, 200_000).unwrap())
            .unwrap();
        assert!(e.agrees_with(exact, 3.0), "{e:?} vs {exact}");
    }

    #[test]
    fn log_utility_counts_non_finite_draws() {
        let m = model2();
        let mix = MixingDistribution::exponential(1.0).unwrap();
        let e = mc_expected_utility(&m, &mix, &UtilitySpec::Log, &[40.0, 0.0], 1.0, &McConfig::new(2, 20_000).unwrap()).unwrap();
        assert!(e.non_finite > 0);
        assert_eq!(e.samples + e.non_finite, 20_000);
        assert!(e.mean.is_finite());
    }

    #[test]
    fn crn_is_reproducible() {
        let m = model2();
        let mix = MixingDistribution::gig(0.7, 2.0, 0.5).unwrap();
        let u = UtilitySpec::power(3.0).unwrap();
        let cfg = McConfig::new(77, 30_000).unwrap();
        let a = mc_expected_utility(&m, &mix, &u, &[0.3, 0.2], 1.0, &cfg).unwrap();
        let b = mc_expected_utility(&m, &mix, &u, &[0.3, 0.2], 1.0, &cfg).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn antithetic_reduces_error_of_linear_part() {
        let m = model2();
        let mix = MixingDistribution::exponential(1.0).unwrap();
        let u = UtilitySpec::quadratic(0.05).unwrap();
        let plain = McConfig::new(4, 100_000).unwrap();
        let anti = plain.antithetic().unwrap();
        let x = [2.0, 1.0];
        let ep = mc_expected_utility(&m, &mix, &u, &x, 1.0, &plain).unwrap();
        let ea = mc_expected_utility(&m, &mix, &u, &x, 1.0, &anti).unwrap();
        assert!(ea.stderr < ep.stderr, "{ea:?} vs {ep:?}");
        assert_eq!(ea.samples, 50_000);
    }

    #[test]
    fn gaussian_brute_force_recovers_closed_form() {
        let m = model2();
        let mix = MixingDistribution::constant(1.0).unwrap();
        let (a, w0) = (3.0, 1.0);
        let target = m.solve_sigma(&(m.gamma() + m.excess_mean())) / (a * w0);
        let r = brute_force_optimize(
            &m,
            &mix,
            &UtilitySpec::exponential(a).unwrap(),
            w0,
            &McConfig::new(21, 1_000_000).unwrap(),
            BruteForceMethod::SimplexDescent { starts: 1 },
            &SearchBox::symmetric(2, 5.0).unwrap(),
        )
        .unwrap();
        // CRN argmax error scales like |x*|/√paths.
        for i in 0..2 {
            assert!((r.x[i] - target[i]).abs() < 1e-2, "{:?} vs {target}", r.x);
        }
    }

    #[test]
    fn exchangeable_assets_get_equal_weights() {
        let m = MarketModel::new(0.0, &[0.04, 0.04], &[0.01, 0.01], &[0.2, 0.05, 0.05, 0.2]).unwrap();
        let mix = MixingDistribution::exponential(1.0).unwrap();
        let r = brute_force_optimize(
            &m,
            &mix,
            &UtilitySpec::quadratic(0.5).unwrap(),
            1.0,
            &McConfig::new(8, 20_000).unwrap().antithetic().unwrap(),
            BruteForceMethod::Grid { points_per_axis: 41 },
            &SearchBox::symmetric(2, 2.0).unwrap(),
        )
        .unwrap();
        assert!((r.x[0] - r.x[1]).abs() <= 0.1 + 1e-12, "{:?}", r.x);
    }

    #[test]
    fn closed_form_dominates_brute_force() {
        let m = model2();
        let mix = MixingDistribution::exponential(1.0).unwrap();
        let (a, w0) = (2.0, 1.0);
        let opt = exp_opt::optimize(&m, &mix, a, w0, ExcessReturnBounds::default(), Solver::MinimizeH).unwrap();
        let r = brute_force_optimize(
            &m,
            &mix,
            &UtilitySpec::exponential(a).unwrap(),
            w0,
            &McConfig::new(13, 200_000).unwrap(),
            BruteForceMethod::SimplexDescent { starts: 2 },
            &SearchBox::symmetric(2, 10.0).unwrap(),
        )
        .unwrap();
        assert!(opt.optimal_utility >= r.estimate.mean - 3.0 * r.estimate.stderr);
    }

    #[test]
    fn grid_rejects_large_dimension() {
        let bx = SearchBox::symmetric(7, 1.0).unwrap();
        assert!(maximize_in_box(|_| 0.0, &bx, BruteForceMethod::Grid { points_per_axis: 2 }).is_err());
    }
}
