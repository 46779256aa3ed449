#![allow(dead_code)]

use nmvm_core::random::StreamRng;
use nmvm_core::MarketModel;

pub struct Gen(StreamRng);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Self(StreamRng::new(seed, 0xacce))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.0.normal()
    }

    pub fn index(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.0.uniform() * (hi - lo + 1) as f64) as usize
    }

    /// A market with lower-triangular `A` (well-conditioned diagonal) and
    /// premia of a realistic size.
    pub fn model(&mut self, n: usize) -> MarketModel {
        let r_f = self.uniform(0.0, 0.03);
        let mu: Vec<f64> = (0..n).map(|_| r_f + self.uniform(-0.02, 0.08)).collect();
        let gamma: Vec<f64> = (0..n).map(|_| self.uniform(-0.04, 0.04)).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                a[i * n + j] = if i == j { self.uniform(0.1, 0.3) } else { 0.05 * self.normal() };
            }
        }
        MarketModel::new(r_f, &mu, &gamma, &a).unwrap()
    }
}
