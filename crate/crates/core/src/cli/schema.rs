//! The TOML market-spec file.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exp_opt::ExcessReturnBounds;
use crate::general_opt::{ReducedBox, UtilitySpec};
use crate::large_market::{LargeMarketSpec, Sequence};
use crate::mixing::MixingDistribution;
use crate::model::MarketModel;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub model: Option<ModelBlock>,
    pub mixing: MixingBlock,
    pub investor: Option<InvestorBlock>,
    pub utility: Option<UtilityBlock>,
    pub domain: Option<DomainBlock>,
    pub large_market: Option<LargeMarketBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub n: usize,
    pub r_f: f64,
    pub mu: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Row-major, `n²` entries.
    pub a: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MixingBlock {
    Constant { value: f64 },
    Exponential { rate: f64 },
    Gig { lambda: f64, chi: f64, psi: f64 },
    BoundedUniform { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvestorBlock {
    /// Absolute risk aversion of the exponential investor.
    pub a: f64,
    pub w0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilityBlock {
    Exponential { a: f64 },
    Power { eta: f64 },
    Log,
    Quadratic { b: f64 },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    pub c_min: Option<f64>,
    pub c_max: Option<f64>,
    pub phi: Option<[f64; 2]>,
    pub psi: Option<[f64; 2]>,
    pub rho: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LargeMarketBlock {
    pub gamma: SequenceBlock,
    pub mu: SequenceBlock,
    pub beta: SequenceBlock,
    pub beta_bar: SequenceBlock,
    pub n_list: Vec<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceBlock {
    Power { scale: f64, exponent: f64 },
    Explicit { values: Vec<f64> },
}

impl From<&SequenceBlock> for Sequence {
    fn from(b: &SequenceBlock) -> Self {
        match b {
            SequenceBlock::Power { scale, exponent } => Sequence::power(*scale, *exponent),
            SequenceBlock::Explicit { values } => Sequence::explicit(values.clone()),
        }
    }
}

pub fn parse(text: &str) -> Result<SpecFile> {
    toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("spec file: {}", e.message())))
}

impl SpecFile {
    pub fn mixing(&self) -> Result<MixingDistribution> {
        match self.mixing {
            MixingBlock::Constant { value } => MixingDistribution::constant(value),
            MixingBlock::Exponential { rate } => MixingDistribution::exponential(rate),
            MixingBlock::Gig { lambda, chi, psi } => MixingDistribution::gig(lambda, chi, psi),
            MixingBlock::BoundedUniform { lower, upper } => MixingDistribution::bounded_uniform(lower, upper),
        }
    }

    pub fn model(&self) -> Result<MarketModel> {
        let m = self.model.as_ref().ok_or_else(|| missing("model"))?;
        let n = m.n;
        if n == 0 {
            return Err(Error::InvalidParameter("model.n must be at least 1".into()));
        }
        for (name, len, want) in [("mu", m.mu.len(), n), ("gamma", m.gamma.len(), n), ("a", m.a.len(), n * n)] {
            if len != want {
                return Err(Error::Dimension(format!("model.{name} has {len} entries, expected {want}")));
            }
        }
        MarketModel::new(m.r_f, &m.mu, &m.gamma, &m.a)
    }

    pub fn investor(&self) -> Result<&InvestorBlock> {
        self.investor.as_ref().ok_or_else(|| missing("investor"))
    }

    pub fn utility(&self) -> Result<UtilitySpec> {
        match &self.utility {
            Some(UtilityBlock::Exponential { a }) => UtilitySpec::exponential(*a),
            Some(UtilityBlock::Power { eta }) => UtilitySpec::power(*eta),
            Some(UtilityBlock::Log) => Ok(UtilitySpec::Log),
            Some(UtilityBlock::Quadratic { b }) => UtilitySpec::quadratic(*b),
            None => UtilitySpec::exponential(self.investor()?.a),
        }
    }

    pub fn excess_bounds(&self) -> ExcessReturnBounds {
        let d = self.domain.clone().unwrap_or_default();
        ExcessReturnBounds { min: d.c_min, max: d.c_max }
    }

    pub fn reduced_box(&self) -> ReducedBox {
        let d = self.domain.clone().unwrap_or_default();
        let def = ReducedBox::default();
        ReducedBox {
            phi: d.phi.map_or(def.phi, |[l, h]| (l, h)),
            psi: d.psi.map_or(def.psi, |[l, h]| (l, h)),
            rho: d.rho.map(|[l, h]| (l, h)),
        }
    }

    pub fn large_market(&self) -> Result<(LargeMarketSpec, Vec<usize>, Option<f64>)> {
        let b = self.large_market.as_ref().ok_or_else(|| missing("large_market"))?;
        let max_n = 2 * b.n_list.iter().copied().max().ok_or_else(|| Error::InvalidParameter("large_market.n_list is empty".into()))?;
        let spec = LargeMarketSpec::new(
            (&b.gamma).into(),
            (&b.mu).into(),
            (&b.beta).into(),
            (&b.beta_bar).into(),
            self.mixing()?,
            max_n,
        )?;
        Ok((spec, b.n_list.clone(), b.tolerance))
    }
}

fn missing(block: &str) -> Error {
    Error::InvalidParameter(format!("spec file has no [{block}] block"))
}
