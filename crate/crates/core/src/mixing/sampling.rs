//! Seeded draws from the mixing laws.
//!
//! GIG variates use Devroye's rejection method on the log scale, which has a
//! uniformly bounded expected number of trials over all parameters.

use rayon::prelude::*;

use super::{MixingDistribution, MixingKind};
use crate::random::{blocks, StreamRng};

/// Envelope for the log-concave density `exp(ψ(u))` of `ln(X / mode)` where
/// `X ~ GIG(λ, ω)` in the symmetric parametrization, `λ ≥ 0`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GigSampler {
    lambda: f64,
    alpha: f64,
    mode: f64,
    t: f64,
    s: f64,
    eta: f64,
    zeta: f64,
    theta: f64,
    xi: f64,
    p: f64,
    r: f64,
    t_prime: f64,
    s_prime: f64,
    q: f64,
}

impl GigSampler {
    pub(crate) fn new(lambda: f64, omega: f64) -> Self {
        debug_assert!(lambda >= 0.0 && omega > 0.0);
        let alpha = (lambda * lambda + omega * omega).sqrt() - lambda;
        let psi = |u: f64| -alpha * (u.cosh() - 1.0) - lambda * (u.exp_m1() - u);
        let dpsi = |u: f64| -alpha * u.sinh() - lambda * u.exp_m1();

        let right = -psi(1.0);
        let t = if (0.5..=2.0).contains(&right) {
            1.0
        } else if right > 2.0 {
            (2.0 / (alpha + lambda)).sqrt()
        } else {
            (4.0 / (alpha + 2.0 * lambda)).ln()
        };
        let left = -psi(-1.0);
        let s = if (0.5..=2.0).contains(&left) {
            1.0
        } else if left > 2.0 {
            (4.0 / (alpha * 1f64.cosh() + lambda)).sqrt()
        } else {
            let inv = 1.0 / alpha;
            let cap = if lambda > 0.0 { 1.0 / lambda } else { f64::INFINITY };
            cap.min((1.0 + inv + (inv * inv + 2.0 * inv).sqrt()).ln())
        };

        let eta = -psi(t);
        let zeta = -dpsi(t);
        let theta = -psi(-s);
        let xi = dpsi(-s);
        let p = 1.0 / xi;
        let r = 1.0 / zeta;
        let t_prime = t - r * eta;
        let s_prime = s - p * theta;
        let ratio = lambda / omega;
        Self {
            lambda,
            alpha,
            mode: ratio + (1.0 + ratio * ratio).sqrt(),
            t,
            s,
            eta,
            zeta,
            theta,
            xi,
            p,
            r,
            t_prime,
            s_prime,
            q: t_prime + s_prime,
        }
    }

    fn psi(&self, u: f64) -> f64 {
        -self.alpha * (u.cosh() - 1.0) - self.lambda * (u.exp_m1() - u)
    }

    pub(crate) fn draw(&self, rng: &mut StreamRng) -> f64 {
        let total = self.p + self.q + self.r;
        loop {
            let u = rng.uniform();
            let v = rng.uniform_open();
            let w = rng.uniform();
            let (x, envelope) = if u < self.q / total {
                (-self.s_prime + self.q * v, 1.0)
            } else if u < (self.q + self.r) / total {
                let x = self.t_prime - self.r * v.ln();
                (x, (-self.eta - self.zeta * (x - self.t)).exp())
            } else {
                let x = -self.s_prime + self.p * v.ln();
                (x, (-self.theta + self.xi * (x + self.s)).exp())
            };
            if w * envelope <= self.psi(x).exp() {
                return self.mode * x.exp();
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Drawer {
    Constant(f64),
    Exponential(f64),
    Gig { sampler: GigSampler, scale: f64, invert: bool },
    Uniform { lower: f64, width: f64 },
}

impl Drawer {
    #[inline]
    pub(crate) fn draw(&self, rng: &mut StreamRng) -> f64 {
        match *self {
            Drawer::Constant(v) => v,
            Drawer::Exponential(rate) => rng.exponential() / rate,
            Drawer::Gig { sampler, scale, invert } => {
                let x = sampler.draw(rng);
                scale * if invert { 1.0 / x } else { x }
            }
            Drawer::Uniform { lower, width } => lower + width * rng.uniform(),
        }
    }
}

impl MixingDistribution {
    /// A reusable per-draw sampler (precomputes the GIG envelope once).
    pub(crate) fn drawer(&self) -> Drawer {
        match self.kind {
            MixingKind::Constant { value } => Drawer::Constant(value),
            MixingKind::Exponential { rate } => Drawer::Exponential(rate),
            MixingKind::Gig { lambda, chi, psi } => Drawer::Gig {
                sampler: GigSampler::new(lambda.abs(), (chi * psi).sqrt()),
                scale: (chi / psi).sqrt(),
                invert: lambda < 0.0,
            },
            MixingKind::BoundedUniform { lower, upper } => {
                Drawer::Uniform { lower, width: upper - lower }
            }
        }
    }

    /// Draws one variate from `rng`.
    pub fn draw(&self, rng: &mut StreamRng) -> f64 {
        self.drawer().draw(rng)
    }

    /// `count` independent draws, fully determined by `seed`.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<f64> {
        let drawer = self.drawer();
        let parts: Vec<Vec<f64>> = blocks(count)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(block, _, len)| {
                let mut rng = StreamRng::new(seed, block);
                (0..len).map(|_| drawer.draw(&mut rng)).collect()
            })
            .collect();
        parts.concat()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn constant_draws() {
        let c = MixingDistribution::constant(1.0).unwrap();
        assert_eq!(c.sample(99, 5), vec![1.0; 5]);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let g = MixingDistribution::gig(0.7, 2.0, 0.5).unwrap();
        assert_eq!(g.sample(5, 10_000), g.sample(5, 10_000));
        assert_ne!(g.sample(5, 100), g.sample(6, 100));
    }

    #[test]
    fn exponential_mean() {
        let e = MixingDistribution::exponential(1.0).unwrap();
        let (m, se) = mean_and_se(&e.sample(11, 1_000_000));
        assert!((m - 1.0).abs() < 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn gig_means_over_parameter_grid() {
        for &lambda in &[-1.0, -0.5, 0.0, 0.7, 2.0, 15.0] {
            for &(chi, psi) in &[(1.0, 1.0), (0.5, 2.0), (2.0, 0.5), (0.01, 0.02), (50.0, 30.0)] {
                let g = MixingDistribution::gig(lambda, chi, psi).unwrap();
                let xs = g.sample(3, 200_000);
                assert!(xs.iter().all(|&x| x > 0.0 && x.is_finite()));
                let (m, se) = mean_and_se(&xs);
                let exact = g.mean();
                assert!((m - exact).abs() < 4.0 * se, "λ={lambda} χ={chi} ψ={psi}: {m} vs {exact} (se {se})");
                let squares: Vec<f64> = xs.iter().map(|x| x * x).collect();
                let (m2, se2) = mean_and_se(&squares);
                let exact2 = g.moment(2.0).unwrap();
                assert!((m2 - exact2).abs() < 5.0 * se2, "second moment λ={lambda} χ={chi} ψ={psi}");
            }
        }
    }

    #[test]
    fn gig_inverse_gaussian_mean_at_one_million() {
        let g = MixingDistribution::gig(-0.5, 1.0, 1.0).unwrap();
        let (m, se) = mean_and_se(&g.sample(2024, 1_000_000));
        assert!((m - g.mean()).abs() < 3.0 * se);
    }

    #[test]
    fn uniform_stays_in_support() {
        let u = MixingDistribution::bounded_uniform(0.5, 1.5).unwrap();
        let xs = u.sample(1, 50_000);
        assert!(xs.iter().all(|&x| (0.5..1.5).contains(&x)));
        let (m, se) = mean_and_se(&xs);
        assert!((m - 1.0).abs() < 4.0 * se);
    }
}
