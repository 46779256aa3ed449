//! Monte Carlo re-checks of the closed-form results for one spec file.

use serde::Serialize;

use super::schema::SpecFile;
use crate::error::Result;
use crate::exp_opt::{self, Solver};
use crate::general_opt::{project_portfolio, wealth_central_moment, UtilitySpec};
use crate::mc_oracle::{self, BruteForceMethod, Estimate, McConfig, ScenarioSet, SearchBox};
use crate::model;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub reference: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, reference: f64, e: &Estimate, k: f64) -> Self {
        Self { name: name.into(), reference, estimate: e.mean, stderr: e.stderr, passed: e.agrees_with(reference, k) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub seed: u64,
    pub paths: usize,
    pub tolerance_stderr: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub fn run(spec: &SpecFile, cfg: &McConfig, k: f64) -> Result<Report> {
    let mut checks = Vec::new();
    let mix = spec.mixing()?;
    if spec.model.is_some() {
        let m = spec.model()?;
        let scen = ScenarioSet::nmvm(&m, &mix, cfg);
        for i in 0..m.n() {
            let e = scen.estimate(|row, _| row[i] + m.r_f());
            checks.push(Check::new(format!("mean_return[{i}]"), m.mu()[i] + m.gamma()[i] * mix.mean(), &e, k));
        }
        if spec.investor.is_some() {
            let inv = spec.investor()?;
            let opt = exp_opt::optimize(&m, &mix, inv.a, inv.w0, spec.excess_bounds(), Solver::MinimizeH)?;
            let u = UtilitySpec::exponential(inv.a)?;
            let e = mc_oracle::expected_utility_on(&scen, m.r_f(), &u, &opt.x_star, inv.w0);
            checks.push(Check::new("expected_utility_at_x_star", opt.optimal_utility, &e, k));

            let half = 1.0 + 3.0 * opt.x_star.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let bf = mc_oracle::brute_force_optimize(
                &m,
                &mix,
                &u,
                inv.w0,
                cfg,
                BruteForceMethod::SimplexDescent { starts: 1 },
                &SearchBox::symmetric(m.n(), half)?,
            )?;
            checks.push(Check {
                name: "closed_form_dominates_brute_force".into(),
                reference: opt.optimal_utility,
                estimate: bf.estimate.mean,
                stderr: bf.estimate.stderr,
                passed: opt.optimal_utility >= bf.estimate.mean - k * bf.estimate.stderr,
            });

            let tm = model::transform(&m, &mix)?;
            let p = project_portfolio(&opt.x_star, &tm, &m)?;
            let wm = mc_oracle::mc_wealth_moments(&m, &mix, &opt.x_star, inv.w0, cfg, 4)?;
            for order in 2..=4 {
                let exact = wealth_central_moment(order, &p, &mix, inv.w0, tm.a_s.sqrt())?;
                checks.push(Check::new(format!("wealth_central_moment[{order}]"), exact, wm.central(order), k));
            }
        }
    }
    if spec.large_market.is_some() {
        let (lm, _, _) = spec.large_market()?;
        let n = lm.max_n.min(3);
        let r = mc_oracle::large_market_minimum(&lm, n, cfg)?;
        checks.push(Check::new(format!("large_market_u[{n}]"), lm.u_n(n)?, &r.estimate, k));
        let n = lm.max_n.min(4);
        let mart = mc_oracle::martingale_check(&lm, n, 3, cfg)?;
        checks.push(Check::new("martingale_density_mean", 1.0, &mart.density_mean, k));
        for (i, e) in mart.return_means.iter().enumerate() {
            checks.push(Check::new(format!("martingale_return_mean[{}]", i + 1), 0.0, e, k));
        }
        for (b, bin) in mart.bins.iter().enumerate() {
            for (i, e) in bin.residual.iter().enumerate() {
                checks.push(Check::new(format!("conditional_shift[bin {b}, asset {}]", i + 1), 0.0, e, k));
            }
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(Report { seed: cfg.seed, paths: cfg.paths, tolerance_stderr: k, passed, checks })
}
