//! Streaming sample central moments of terminal wealth.

use rayon::prelude::*;
use serde::Serialize;

use super::{check_len, Estimate, McConfig};
use crate::error::{Error, Result};
use crate::mixing::MixingDistribution;
use crate::model::MarketModel;
use crate::random::{blocks, StreamRng};

/// Sample mean of `W` and sample central moments `E[(W − EW)^k]` for
/// `k = 2..=max_k`, with delta-method standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WealthMoments {
    pub mean: Estimate,
    /// Entry `k − 2` holds the order-`k` central moment.
    pub central: Vec<Estimate>,
}

impl WealthMoments {
    pub fn central(&self, k: usize) -> &Estimate {
        &self.central[k - 2]
    }
}

/// Draws `cfg.paths` wealths `W₀(1+r_f) + W₀xᵀ(X − 𝟏r_f)` without storing
/// them. Power sums about a fixed shift are merged in block order.
pub fn mc_wealth_moments(
    model: &MarketModel,
    mix: &MixingDistribution,
    x: &[f64],
    w0: f64,
    cfg: &McConfig,
    max_k: usize,
) -> Result<WealthMoments> {
    check_len(x, model.n())?;
    if cfg.antithetic {
        return Err(Error::InvalidParameter("moment estimates need independent paths".into()));
    }
    if !(2..=12).contains(&max_k) {
        return Err(Error::InvalidOrder { order: max_k as f64 });
    }
    let n = model.n();
    let top = 2 * max_k;
    // Linear functionals of the row: W = base + W₀(c + d·Z + √Z·eᵀg).
    let xv = nalgebra::DVector::from_column_slice(x);
    let c = xv.dot(&model.excess_mean());
    let d = xv.dot(model.gamma());
    let e: Vec<f64> = (model.a().transpose() * &xv).iter().copied().collect();
    let base = w0 * (1.0 + model.r_f());
    let shift = base + w0 * (c + d * mix.mean());
    let drawer = mix.drawer();

    let parts: Vec<Vec<f64>> = blocks(cfg.paths)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(block, _, len)| {
            let mut rng = StreamRng::new(cfg.seed, block);
            let mut sums = vec![0.0; top + 1];
            for _ in 0..len {
                let z = drawer.draw(&mut rng);
                let mut eg = 0.0;
                for ej in e.iter().take(n) {
                    eg += ej * rng.normal();
                }
                let dw = base + w0 * (c + d * z + z.sqrt() * eg) - shift;
                let mut p = 1.0;
                for s in sums.iter_mut() {
                    *s += p;
                    p *= dw;
                }
            }
            sums
        })
        .collect();
    let mut sums = vec![0.0; top + 1];
    for part in parts {
        sums.iter_mut().zip(part).for_each(|(s, v)| *s += v);
    }
    let count = sums[0];
    let raw: Vec<f64> = sums.iter().map(|s| s / count).collect();
    let delta = raw[1];
    // Central moments from moments about the shift.
    let central: Vec<f64> = (0..=top)
        .map(|k| {
            let mut binom = 1.0;
            let mut acc = 0.0;
            for j in 0..=k {
                acc += binom * raw[j] * (-delta).powi((k - j) as i32);
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
            acc
        })
        .collect();
    let samples = cfg.paths;
    let mean = Estimate {
        mean: shift + delta,
        stderr: (central[2] / count).sqrt(),
        samples,
        non_finite: 0,
    };
    let est = (2..=max_k)
        .map(|k| {
            let kf = k as f64;
            let var = central[2 * k] - central[k].powi(2) - 2.0 * kf * central[k - 1] * central[k + 1]
                + kf * kf * central[k - 1].powi(2) * central[2];
            Estimate { mean: central[k], stderr: (var.max(0.0) / count).sqrt(), samples, non_finite: 0 }
        })
        .collect();
    Ok(WealthMoments { mean, central: est })
}
