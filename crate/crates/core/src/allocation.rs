//! Optimal treatment allocations: covariate-independent probabilities and
//! covariate-dependent propensity functions, for any target population and
//! link function, plus the density ratios and design-time moments they need.
//!
//! All design-time expectations are Gauss-Legendre quadrature on W1 crossed
//! with the two-point W2 sum; mixtures integrate each component. Density
//! ratios are computed in log space and exponentiated.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    AllocationDesign, CovariateDistribution, Covariates, LinkFunction, OutcomeModel, Stratum,
    TargetSpec,
};

/// Minimum trial-law mass a stratum or restriction region may carry.
const MIN_STRATUM_MASS: f64 = 1e-12;

/// Design-time moments entering the optimal-allocation formulas: the
/// ratio-weighted arm variances, the target-population arm means, and the
/// target-population variance of the conditional effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignMoments {
    /// E_F{ r(W)^2 v_1(W) }
    pub m1: f64,
    /// E_F{ r(W)^2 v_0(W) }
    pub m0: f64,
    /// mean of m(1, W) under the target law
    pub mu1_star: f64,
    /// mean of m(0, W) under the target law
    pub mu0_star: f64,
    /// variance of delta(W) under the target law
    pub var_star_delta: f64,
}

/// The pointwise density ratio r(w) = dF*/dF of a target law with respect to
/// the trial law.
#[derive(Debug, Clone)]
pub enum DensityRatio {
    /// F* = F
    One,
    /// Ratio of two covariate densities sharing a support.
    Laws {
        target: CovariateDistribution,
        trial: CovariateDistribution,
    },
    /// Piecewise-constant ratio tau*_k / tau_k over a partition.
    Strata {
        partition: crate::model::StratumPartition,
        log_weights: Vec<f64>,
        /// trial-law stratum probabilities tau_k
        tau: Vec<f64>,
        /// target stratum weights tau*_k
        tau_star: Vec<f64>,
    },
}

impl DensityRatio {
    pub fn log_ratio(&self, w: Covariates) -> f64 {
        match self {
            Self::One => 0.0,
            Self::Laws { target, trial } => target.ln_pdf(w) - trial.ln_pdf(w),
            Self::Strata {
                partition,
                log_weights,
                ..
            } => match partition.index_of(w) {
                Some(k) => log_weights[k],
                None => f64::NEG_INFINITY,
            },
        }
    }

    /// r(w) > 0 on the support.
    pub fn ratio(&self, w: Covariates) -> f64 {
        self.log_ratio(w).exp()
    }

    /// W1 breakpoints where the ratio is discontinuous (stratum edges).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Strata { partition, .. } => {
                let mut cuts: Vec<f64> = partition
                    .strata
                    .iter()
                    .flat_map(|s| [s.w1_lo, s.w1_hi])
                    .filter(|x| x.is_finite())
                    .collect();
                cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                cuts.dedup();
                cuts
            }
            _ => Vec::new(),
        }
    }
}

/// Pointwise density ratio of the target specification with respect to the
/// trial law. The trial target returns the constant one; E_F{r(W)} = 1 up to
/// quadrature tolerance for every variant.
pub fn density_ratio(
    trial: &CovariateDistribution,
    target: &TargetSpec,
    order: usize,
) -> Result<DensityRatio> {
    match target {
        TargetSpec::Trial => Ok(DensityRatio::One),
        TargetSpec::Transport { .. } | TargetSpec::Generalize { .. } => {
            let law = target
                .target_law(trial)?
                .expect("transport/generalize carry a target law");
            Ok(DensityRatio::Laws {
                target: law,
                trial: trial.clone(),
            })
        }
        TargetSpec::PostStratify { partition, weights } => {
            let mut tau = Vec::with_capacity(partition.len());
            for k in 0..partition.len() {
                let t = partition.stratum_expectation(k, trial, order, |_| 1.0)?;
                if t < MIN_STRATUM_MASS {
                    return Err(Error::Domain(format!(
                        "stratum {k} carries trial-law mass {t:.3e}, below {MIN_STRATUM_MASS:.0e}"
                    )));
                }
                tau.push(t);
            }
            let log_weights = weights
                .iter()
                .zip(&tau)
                .map(|(ts, t)| ts.ln() - t.ln())
                .collect();
            Ok(DensityRatio::Strata {
                partition: partition.clone(),
                log_weights,
                tau,
                tau_star: weights.clone(),
            })
        }
    }
}

/// All five design-time moments by quadrature. With the trial target the
/// ratio is one, so `m1`/`m0` reduce to the plain arm-variance expectations.
pub fn design_moments(
    trial: &CovariateDistribution,
    target: &TargetSpec,
    outcome: &OutcomeModel,
    order: usize,
) -> Result<DesignMoments> {
    let ratio = density_ratio(trial, target, order)?;
    let breaks = ratio.breakpoints();

    let m1 = trial.expectation_with_breaks(order, &breaks, |w| {
        (2.0 * ratio.log_ratio(w)).exp() * outcome.variance(1, w)
    })?;
    let m0 = trial.expectation_with_breaks(order, &breaks, |w| {
        (2.0 * ratio.log_ratio(w)).exp() * outcome.variance(0, w)
    })?;
    // target-law expectations via E_F{ r h }
    let mu1_star = trial.expectation_with_breaks(order, &breaks, |w| {
        ratio.ratio(w) * outcome.mean(1, w)
    })?;
    let mu0_star = trial.expectation_with_breaks(order, &breaks, |w| {
        ratio.ratio(w) * outcome.mean(0, w)
    })?;
    let d2 = trial.expectation_with_breaks(order, &breaks, |w| {
        let d = outcome.delta(w);
        ratio.ratio(w) * d * d
    })?;
    let dmean = mu1_star - mu0_star;
    Ok(DesignMoments {
        m1,
        m0,
        mu1_star,
        mu0_star,
        var_star_delta: d2 - dmean * dmean,
    })
}

fn link_slopes(moments: &DesignMoments, link: LinkFunction) -> Result<(f64, f64)> {
    Ok((
        link.derivative(moments.mu1_star)?,
        link.derivative(moments.mu0_star)?,
    ))
}

/// The optimal covariate-independent probability
/// g'(mu1*) sqrt(m1) / (g'(mu1*) sqrt(m1) + g'(mu0*) sqrt(m0)).
///
/// With the identity link this is the Neyman-type ratio of the
/// ratio-weighted arm standard deviations.
pub fn optimal_cir(moments: &DesignMoments, link: LinkFunction) -> Result<f64> {
    if !(moments.m1 > 0.0 && moments.m0 > 0.0) {
        return Err(Error::Domain(format!(
            "optimal CIR needs positive ratio-weighted variances, got m1 = {}, m0 = {}",
            moments.m1, moments.m0
        )));
    }
    let (g1, g0) = link_slopes(moments, link)?;
    let s1 = g1 * moments.m1.sqrt();
    let s0 = g0 * moments.m0.sqrt();
    Ok(s1 / (s1 + s0))
}

/// The optimal covariate-dependent propensity
/// w -> g'(mu1*) v1(w)^(1/2) / (g'(mu1*) v1(w)^(1/2) + g'(mu0*) v0(w)^(1/2)).
///
/// With the identity link the slopes cancel and the function does not depend
/// on the target population at all.
#[derive(Debug, Clone)]
pub struct CdrPropensity {
    outcome: OutcomeModel,
    slope1: f64,
    slope0: f64,
}

impl CdrPropensity {
    /// Assignment probability at `w`; a diagnostic error when a zero
    /// conditional variance pushes the propensity onto the boundary.
    pub fn propensity(&self, w: Covariates) -> Result<f64> {
        let s1 = self.slope1 * self.outcome.variance(1, w).sqrt();
        let s0 = self.slope0 * self.outcome.variance(0, w).sqrt();
        if !(s1 > 0.0) || !(s0 > 0.0) {
            return Err(Error::Domain(format!(
                "zero conditional variance at (w1, w2) = ({}, {}) pushes the optimal propensity to the boundary",
                w.w1, w.w2
            )));
        }
        Ok(s1 / (s1 + s0))
    }

    /// The raw formula value, which may sit on the boundary when a
    /// conditional variance vanishes.
    pub fn propensity_unchecked(&self, w: Covariates) -> f64 {
        let s1 = self.slope1 * self.outcome.variance(1, w).sqrt();
        let s0 = self.slope0 * self.outcome.variance(0, w).sqrt();
        s1 / (s1 + s0)
    }

    pub fn slopes(&self) -> (f64, f64) {
        (self.slope1, self.slope0)
    }

    /// Wrap into an allocation design.
    pub fn into_design(self) -> AllocationDesign {
        AllocationDesign::cdr(move |w| self.propensity_unchecked(w))
    }
}

pub fn optimal_cdr(
    outcome: &OutcomeModel,
    link: LinkFunction,
    moments: &DesignMoments,
) -> Result<CdrPropensity> {
    let (g1, g0) = link_slopes(moments, link)?;
    Ok(CdrPropensity {
        outcome: outcome.clone(),
        slope1: g1,
        slope0: g0,
    })
}

/// Optimal CIR probability for the trial effect restricted to a sub-region:
/// the Neyman ratio of conditional expectations E{v_a(W) | W in region}.
pub fn optimal_cir_restricted(
    trial: &CovariateDistribution,
    outcome: &OutcomeModel,
    region: &[Stratum],
    order: usize,
) -> Result<f64> {
    if region.is_empty() {
        return Err(Error::Domain("restriction region is empty".into()));
    }
    let partition = crate::model::StratumPartition::new(region.to_vec())?;
    let mut mass = 0.0;
    let mut v1 = 0.0;
    let mut v0 = 0.0;
    for k in 0..partition.len() {
        mass += partition.stratum_expectation(k, trial, order, |_| 1.0)?;
        v1 += partition.stratum_expectation(k, trial, order, |w| outcome.variance(1, w))?;
        v0 += partition.stratum_expectation(k, trial, order, |w| outcome.variance(0, w))?;
    }
    if mass < MIN_STRATUM_MASS {
        return Err(Error::Domain(format!(
            "restriction region carries trial-law mass {mass:.3e}"
        )));
    }
    let s1 = (v1 / mass).sqrt();
    let s0 = (v0 / mass).sqrt();
    if !(s1 > 0.0 && s0 > 0.0) {
        return Err(Error::Domain(
            "restricted allocation needs positive conditional variances".into(),
        ));
    }
    Ok(s1 / (s1 + s0))
}
