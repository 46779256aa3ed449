//! Simulation of the large-market return model.

use rayon::prelude::*;
use serde::Serialize;

use super::{merge_in_order, Acc, BruteForceResult, Estimate, McConfig, ScenarioSet};
use crate::error::{Error, Result};
use crate::large_market::LargeMarketSpec;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::random::{blocks, StreamRng};

/// Raw returns `R₁ … Rₙ` built directly from the factor form.
pub fn large_market_scenarios(spec: &LargeMarketSpec, n: usize, cfg: &McConfig) -> Result<ScenarioSet> {
    if n == 0 || n > spec.max_n {
        return Err(Error::InvalidParameter(format!("segment size {n} outside 1..={}", spec.max_n)));
    }
    let coef: Vec<(f64, f64, f64, f64)> =
        (1..=n).map(|i| (spec.gamma.at(i), spec.mu.at(i), spec.beta.at(i), spec.beta_bar.at(i))).collect();
    Ok(ScenarioSet::generate(cfg, spec.mixing(), n, n, |z, eps, row| {
        let s = z.sqrt();
        for (i, (g, m, b, bb)) in coef.iter().enumerate() {
            let common = if i == 0 { 0.0 } else { b * s * eps[0] };
            row[i] = g * z + m + common + bb * s * eps[i];
        }
    }))
}

/// `min_φ E[e^{−φᵀR}]` over the first `n` raw returns, by Nelder–Mead on a
/// common-random-numbers estimate started from `φ = 0`.
pub fn large_market_minimum(spec: &LargeMarketSpec, n: usize, cfg: &McConfig) -> Result<BruteForceResult> {
    let s = large_market_scenarios(spec, n, cfg)?;
    let f = |phi: &[f64]| s.estimate_linear(phi, |v| (-v).exp()).mean;
    let opts = NelderMeadOptions { max_evals: 4000 * n, f_tol: 1e-15, x_tol: 1e-9, restarts: 2 };
    let r = nelder_mead(f, &vec![0.0; n], &vec![0.5; n], opts);
    Ok(BruteForceResult { estimate: s.estimate_linear(&r.x, |v| (-v).exp()), x: r.x, evaluations: r.evaluations })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleBin {
    pub lower: f64,
    pub upper: f64,
    /// `E[fₙεᵢ − bᵢ(Z) | Z ∈ bin]` for `i = 1..n`; zero in theory.
    pub residual: Vec<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    /// `E[fₙ]`; one in theory.
    pub density_mean: Estimate,
    /// `E[fₙRᵢ]`; zero in theory.
    pub return_means: Vec<Estimate>,
    pub bins: Vec<MartingaleBin>,
}

/// Simulates `(Z, ε)` and checks the density `fₙ` against its defining
/// properties, conditioning on `bins` equal-width slices of `[c, C]`.
pub fn martingale_check(spec: &LargeMarketSpec, n: usize, bins: usize, cfg: &McConfig) -> Result<MartingaleReport> {
    if n == 0 || n > spec.max_n {
        return Err(Error::InvalidParameter(format!("segment size {n} outside 1..={}", spec.max_n)));
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    if cfg.antithetic {
        return Err(Error::InvalidParameter("the density check uses independent paths".into()));
    }
    let (lo, hi) = spec.support();
    let width = (hi - lo) / bins as f64;
    let drawer = spec.mixing().drawer();
    let coef: Vec<(f64, f64, f64, f64)> =
        (1..=n).map(|i| (spec.gamma.at(i), spec.mu.at(i), spec.beta.at(i), spec.beta_bar.at(i))).collect();

    type Part = (Acc, Vec<Acc>, Vec<Vec<Acc>>);
    let parts: Vec<Result<Part>> = blocks(cfg.paths)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(block, _, len)| {
            let mut rng = StreamRng::new(cfg.seed, block);
            let mut dens = Acc::default();
            let mut rets = vec![Acc::default(); n];
            let mut by_bin = vec![vec![Acc::default(); n]; bins];
            let mut eps = vec![0.0; n];
            for _ in 0..len {
                let z = drawer.draw(&mut rng);
                eps.iter_mut().for_each(|e| *e = rng.normal());
                let f = spec.martingale_density(n, z, &eps)?;
                dens.push(f);
                let s = z.sqrt();
                let bin = (((z - lo) / width) as usize).min(bins - 1);
                for (i, (g, m, b, bb)) in coef.iter().enumerate() {
                    let common = if i == 0 { 0.0 } else { b * s * eps[0] };
                    rets[i].push(f * (g * z + m + common + bb * s * eps[i]));
                    by_bin[bin][i].push(f * eps[i] - spec.b_function(i + 1, z)?);
                }
            }
            Ok((dens, rets, by_bin))
        })
        .collect();

    let mut dens = Vec::new();
    let mut rets = vec![Vec::new(); n];
    let mut by_bin = vec![vec![Vec::new(); n]; bins];
    for part in parts {
        let (d, r, bb) = part?;
        dens.push(d);
        r.into_iter().enumerate().for_each(|(i, a)| rets[i].push(a));
        for (k, row) in bb.into_iter().enumerate() {
            row.into_iter().enumerate().for_each(|(i, a)| by_bin[k][i].push(a));
        }
    }
    Ok(MartingaleReport {
        density_mean: merge_in_order(dens).estimate(),
        return_means: rets.into_iter().map(|v| merge_in_order(v).estimate()).collect(),
        bins: by_bin
            .into_iter()
            .enumerate()
            .map(|(k, row)| MartingaleBin {
                lower: lo + k as f64 * width,
                upper: lo + (k + 1) as f64 * width,
                residual: row.into_iter().map(|v| merge_in_order(v).estimate()).collect(),
            })
            .collect(),
    })
}
