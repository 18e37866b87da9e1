//! Efficient influence functions for the four estimands, efficiency bounds
//! by closed-form variance decomposition (quadrature) and by Monte Carlo,
//! and relative efficiencies between designs.
//!
//! The closed forms used here are
//!
//! - transportation:    Var{psi} = Var*(delta)/(1-gamma) + (1/gamma) E_F[r^2 {v1/p + v0/(1-p)}]
//! - generalization:    Var{psi} = Var*(delta)          + (1/gamma) E_F[r^2 {v1/p + v0/(1-p)}]
//! - post-stratification: Var{psi} = E_F[r^2 {(delta - Delta_k)^2 + v1/p + v0/(1-p)}]
//! - trial effect: the single-stratum special case of post-stratification.
//!
//! They are cross-validated against the Monte Carlo route in the test suites.

use std::cell::RefCell;
use std::sync::Arc;

use rayon::prelude::*;

use crate::allocation::{density_ratio, design_moments};
use crate::error::{Error, Result};
use crate::model::{
    AllocationDesign, CovariateDistribution, Covariates, OutcomeModel, StratumPartition,
    TargetSpec,
};
use crate::numerics::RngStream;

/// One observed unit. `z` is the source/participation indicator (true means
/// the unit is in the trial); `(a, y)` are present exactly when the case's
/// influence function needs them.
#[derive(Debug, Clone, Copy)]
pub struct Observation {
    pub z: bool,
    pub w: Covariates,
    pub a: Option<u8>,
    pub y: Option<f64>,
}

impl Observation {
    pub fn trial(w: Covariates, a: u8, y: f64) -> Self {
        Self {
            z: true,
            w,
            a: Some(a),
            y: Some(y),
        }
    }

    pub fn target(w: Covariates) -> Self {
        Self {
            z: false,
            w,
            a: None,
            y: None,
        }
    }

    fn arm_outcome(&self) -> Result<(u8, f64)> {
        match (self.a, self.y) {
            (Some(a), Some(y)) => Ok((a, y)),
            _ => Err(Error::Data(
                "trial observation is missing treatment or outcome".into(),
            )),
        }
    }
}

/// Stratum-level nuisances for the post-stratification influence function.
#[derive(Debug, Clone)]
pub struct StratumNuisance {
    pub partition: StratumPartition,
    /// trial-law stratum probabilities tau_k
    pub tau: Vec<f64>,
    /// target stratum weights tau*_k
    pub tau_star: Vec<f64>,
    /// stratum-conditional effects Delta_k
    pub delta_k: Vec<f64>,
}

type MeanFn = Arc<dyn Fn(u8, Covariates) -> f64 + Send + Sync>;
type PointFn = Arc<dyn Fn(Covariates) -> f64 + Send + Sync>;

/// Everything the influence functions consume: outcome means, density ratio,
/// participation and assignment propensities, cohort fraction, stratum data,
/// and the estimand value.
#[derive(Clone)]
pub struct NuisanceSet {
    pub mean: MeanFn,
    pub ratio: PointFn,
    pub participation: Option<PointFn>,
    pub assignment: PointFn,
    pub gamma: f64,
    pub strata: Option<StratumNuisance>,
    pub estimand: f64,
}

impl NuisanceSet {
    pub fn delta(&self, w: Covariates) -> f64 {
        (self.mean)(1, w) - (self.mean)(0, w)
    }

    /// True nuisances for a (trial, target, outcome, design) configuration.
    /// For generalization, the participation propensity is gamma / r(w).
    pub fn oracle(
        trial: &CovariateDistribution,
        target: &TargetSpec,
        outcome: &OutcomeModel,
        design: &AllocationDesign,
        gamma: f64,
        order: usize,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Domain(format!("gamma must lie in (0,1), got {gamma}")));
        }
        let estimand = crate::model::estimand_value(outcome, trial, target, order)?;
        let ratio_obj = density_ratio(trial, target, order)?;
        let ratio_for_e = ratio_obj.clone();
        let participation: Option<PointFn> = match target {
            TargetSpec::Generalize { gamma: g, .. } => {
                let g = *g;
                Some(Arc::new(move |w| g / ratio_for_e.ratio(w)))
            }
            _ => None,
        };
        let strata = match target {
            TargetSpec::PostStratify { partition, weights } => Some(stratum_nuisance(
                trial, outcome, partition, weights, order,
            )?),
            TargetSpec::Trial => {
                let partition = StratumPartition::from_cutpoints(&[], false)?;
                Some(StratumNuisance {
                    partition,
                    tau: vec![1.0],
                    tau_star: vec![1.0],
                    delta_k: vec![estimand],
                })
            }
            _ => None,
        };
        let outcome_arc = outcome.clone();
        let design_arc = design.clone();
        Ok(Self {
            mean: Arc::new(move |a, w| outcome_arc.mean(a, w)),
            ratio: Arc::new(move |w| ratio_obj.ratio(w)),
            participation,
            assignment: Arc::new(move |w| design_arc.propensity(w)),
            gamma,
            strata,
            estimand,
        })
    }
}

fn stratum_nuisance(
    trial: &CovariateDistribution,
    outcome: &OutcomeModel,
    partition: &StratumPartition,
    weights: &[f64],
    order: usize,
) -> Result<StratumNuisance> {
    let mut tau = Vec::with_capacity(partition.len());
    let mut delta_k = Vec::with_capacity(partition.len());
    for k in 0..partition.len() {
        let t = partition.stratum_expectation(k, trial, order, |_| 1.0)?;
        if t <= 1e-12 {
            return Err(Error::Domain(format!("stratum {k} carries no trial mass")));
        }
        let d = partition.stratum_expectation(k, trial, order, |w| outcome.delta(w))?;
        tau.push(t);
        delta_k.push(d / t);
    }
    Ok(StratumNuisance {
        partition: partition.clone(),
        tau,
        tau_star: weights.to_vec(),
        delta_k,
    })
}

/// Transportation influence function:
/// (1-Z)(delta(W) - Delta*)/(1-gamma)
///   + Z A r(W)(Y - m(1,W))/(gamma p(W)) - Z(1-A) r(W)(Y - m(0,W))/(gamma (1-p(W))).
pub fn psi_transport(o: &Observation, nu: &NuisanceSet) -> Result<f64> {
    if !o.z {
        return Ok((nu.delta(o.w) - nu.estimand) / (1.0 - nu.gamma));
    }
    let (a, y) = o.arm_outcome()?;
    let r = (nu.ratio)(o.w);
    let p = (nu.assignment)(o.w);
    Ok(if a == 1 {
        r * (y - (nu.mean)(1, o.w)) / (nu.gamma * p)
    } else {
        -r * (y - (nu.mean)(0, o.w)) / (nu.gamma * (1.0 - p))
    })
}

/// Generalization influence function:
/// delta(W) - Delta* + Z A (Y - m(1,W))/(e(W) p(W)) - Z(1-A)(Y - m(0,W))/(e(W)(1-p(W))).
pub fn psi_generalize(o: &Observation, nu: &NuisanceSet) -> Result<f64> {
    let e_fn = nu
        .participation
        .as_ref()
        .ok_or_else(|| Error::Data("generalization requires a participation propensity".into()))?;
    let base = nu.delta(o.w) - nu.estimand;
    if !o.z {
        return Ok(base);
    }
    let (a, y) = o.arm_outcome()?;
    let e = e_fn(o.w);
    let p = (nu.assignment)(o.w);
    Ok(base
        + if a == 1 {
            (y - (nu.mean)(1, o.w)) / (e * p)
        } else {
            -(y - (nu.mean)(0, o.w)) / (e * (1.0 - p))
        })
}

/// Post-stratification influence function:
/// (tau*_k/tau_k) [ delta(W) - Delta_k + A(Y-m(1,W))/p(W) - (1-A)(Y-m(0,W))/(1-p(W)) ],
/// k = k(W). The single-stratum case is the trial-effect influence function.
pub fn psi_poststrat(o: &Observation, nu: &NuisanceSet) -> Result<f64> {
    let strata = nu
        .strata
        .as_ref()
        .ok_or_else(|| Error::Data("post-stratification requires stratum nuisances".into()))?;
    let (a, y) = o.arm_outcome()?;
    let k = strata
        .partition
        .index_of(o.w)
        .ok_or_else(|| Error::Data(format!("covariates ({}, {}) fall outside every stratum", o.w.w1, o.w.w2)))?;
    let p = (nu.assignment)(o.w);
    let aug = if a == 1 {
        (y - (nu.mean)(1, o.w)) / p
    } else {
        -(y - (nu.mean)(0, o.w)) / (1.0 - p)
    };
    Ok(strata.tau_star[k] / strata.tau[k] * (nu.delta(o.w) - strata.delta_k[k] + aug))
}

/// How a variance bound is evaluated.
pub enum BoundMethod {
    /// Deterministic closed-form decomposition by quadrature.
    Quadrature,
    /// Empirical variance of the influence function over simulated
    /// observations with true nuisances.
    MonteCarlo { n: usize, stream: RngStream },
}

/// The efficiency bound Var{psi} for an estimand under a design.
///
/// `gamma` is the trial fraction Pr(Z=1); it only enters the transportation
/// and generalization cases (for generalization it must equal the target's
/// mixture weight on the trial law).
pub fn variance_bound(
    design: &AllocationDesign,
    target: &TargetSpec,
    trial: &CovariateDistribution,
    outcome: &OutcomeModel,
    gamma: f64,
    order: usize,
    method: BoundMethod,
) -> Result<f64> {
    match method {
        BoundMethod::Quadrature => bound_quadrature(design, target, trial, outcome, gamma, order),
        BoundMethod::MonteCarlo { n, stream } => {
            let nu = NuisanceSet::oracle(trial, target, outcome, design, gamma, order)?;
            let (_, var) = psi_monte_carlo(design, target, trial, outcome, &nu, n, stream)?;
            Ok(var)
        }
    }
}

fn bound_quadrature(
    design: &AllocationDesign,
    target: &TargetSpec,
    trial: &CovariateDistribution,
    outcome: &OutcomeModel,
    gamma: f64,
    order: usize,
) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("gamma must lie in (0,1), got {gamma}")));
    }
    let ratio = density_ratio(trial, target, order)?;
    let breaks = ratio.breakpoints();
    // v1/p + v0/(1-p) with a propensity-range diagnostic
    let violation: RefCell<Option<String>> = RefCell::new(None);
    let core = |w: Covariates| -> f64 {
        let p = design.propensity(w);
        if !(p > 0.0 && p < 1.0) {
            violation
                .borrow_mut()
                .get_or_insert_with(|| format!("propensity {p} outside (0,1) at w1 = {}", w.w1));
            return 0.0;
        }
        outcome.variance(1, w) / p + outcome.variance(0, w) / (1.0 - p)
    };

    let value = match target {
        TargetSpec::Trial => {
            let moments = design_moments(trial, target, outcome, order)?;
            let ip = trial.expectation_with_breaks(order, &breaks, core)?;
            moments.var_star_delta + ip
        }
        TargetSpec::Transport { .. } => {
            let moments = design_moments(trial, target, outcome, order)?;
            let ip = trial.expectation_with_breaks(order, &breaks, |w| {
                (2.0 * ratio.log_ratio(w)).exp() * core(w)
            })?;
            moments.var_star_delta / (1.0 - gamma) + ip / gamma
        }
        TargetSpec::Generalize { gamma: g, .. } => {
            if (g - gamma).abs() > 1e-12 {
                return Err(Error::Domain(format!(
                    "generalization bound needs gamma = target mixture weight ({g}), got {gamma}"
                )));
            }
            let moments = design_moments(trial, target, outcome, order)?;
            let ip = trial.expectation_with_breaks(order, &breaks, |w| {
                (2.0 * ratio.log_ratio(w)).exp() * core(w)
            })?;
            moments.var_star_delta + ip / gamma
        }
        TargetSpec::PostStratify { partition, weights } => {
            let strata = stratum_nuisance(trial, outcome, partition, weights, order)?;
            let ip = trial.expectation_with_breaks(order, &breaks, |w| {
                let k = match strata.partition.index_of(w) {
                    Some(k) => k,
                    None => return 0.0,
                };
                let d = outcome.delta(w) - strata.delta_k[k];
                let rr = (2.0 * ratio.log_ratio(w)).exp();
                rr * (d * d + core(w))
            })?;
            ip
        }
    };
    if let Some(msg) = violation.into_inner() {
        return Err(Error::Domain(msg));
    }
    Ok(value)
}

/// Monte Carlo mean and variance of the case's influence function over `n`
/// simulated observations with the given nuisances. Chunks run in parallel
/// on deterministic substreams and merge in fixed order.
pub fn psi_monte_carlo(
    design: &AllocationDesign,
    target: &TargetSpec,
    trial: &CovariateDistribution,
    outcome: &OutcomeModel,
    nu: &NuisanceSet,
    n: usize,
    stream: RngStream,
) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::Domain("Monte Carlo needs n >= 2".into()));
    }
    const CHUNK: usize = 1 << 16;
    let chunks: Vec<(u64, usize)> = (0..n.div_ceil(CHUNK))
        .map(|i| (i as u64, CHUNK.min(n - i * CHUNK)))
        .collect();

    let target_law = target.target_law(trial)?;
    let results: Vec<Result<(f64, f64, usize)>> = chunks
        .par_iter()
        .map(|&(idx, len)| {
            let mut rng = stream.substream(idx);
            let mut mean = 0.0;
            let mut m2 = 0.0;
            for i in 0..len {
                let o = draw_observation(design, target, trial, target_law.as_ref(), outcome, nu, &mut rng)?;
                let psi = match target {
                    TargetSpec::Trial | TargetSpec::PostStratify { .. } => psi_poststrat(&o, nu)?,
                    TargetSpec::Transport { .. } => psi_transport(&o, nu)?,
                    TargetSpec::Generalize { .. } => psi_generalize(&o, nu)?,
                };
                let delta = psi - mean;
                mean += delta / (i + 1) as f64;
                m2 += delta * (psi - mean);
            }
            Ok((mean, m2, len))
        })
        .collect();

    // deterministic merge in chunk order
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut count = 0usize;
    for r in results {
        let (cm, cm2, cn) = r?;
        if cn == 0 {
            continue;
        }
        let total = count + cn;
        let d = cm - mean;
        m2 += cm2 + d * d * (count as f64 * cn as f64 / total as f64);
        mean += d * cn as f64 / total as f64;
        count = total;
    }
    Ok((mean, m2 / (count as f64 - 1.0)))
}

fn draw_observation(
    design: &AllocationDesign,
    target: &TargetSpec,
    trial: &CovariateDistribution,
    target_law: Option<&CovariateDistribution>,
    outcome: &OutcomeModel,
    nu: &NuisanceSet,
    rng: &mut RngStream,
) -> Result<Observation> {
    let trial_row = |rng: &mut RngStream| {
        let w = trial.sample(rng);
        let p = design.propensity(w);
        let a = u8::from(rng.bernoulli(p));
        let y = outcome.sample_outcome(a, w, rng);
        Observation::trial(w, a, y)
    };
    Ok(match target {
        TargetSpec::Trial | TargetSpec::PostStratify { .. } => trial_row(rng),
        TargetSpec::Transport { .. } => {
            if rng.bernoulli(nu.gamma) {
                trial_row(rng)
            } else {
                let law = target_law.expect("transport target law");
                Observation::target(law.sample(rng))
            }
        }
        TargetSpec::Generalize { .. } => {
            let law = target_law.expect("generalization target law");
            let w = law.sample(rng);
            let e_fn = nu
                .participation
                .as_ref()
                .ok_or_else(|| Error::Data("missing participation propensity".into()))?;
            if rng.bernoulli(e_fn(w)) {
                let p = design.propensity(w);
                let a = u8::from(rng.bernoulli(p));
                let y = outcome.sample_outcome(a, w, rng);
                Observation::trial(w, a, y)
            } else {
                Observation::target(w)
            }
        }
    })
}

/// variance_bound(reference) / variance_bound(candidate).
#[allow(clippy::too_many_arguments)]
pub fn relative_efficiency(
    reference: &AllocationDesign,
    candidate: &AllocationDesign,
    target: &TargetSpec,
    trial: &CovariateDistribution,
    outcome: &OutcomeModel,
    gamma: f64,
    order: usize,
) -> Result<f64> {
    let vr = variance_bound(reference, target, trial, outcome, gamma, order, BoundMethod::Quadrature)?;
    let vc = variance_bound(candidate, target, trial, outcome, gamma, order, BoundMethod::Quadrature)?;
    if vc <= 0.0 {
        return Err(Error::Domain(format!(
            "candidate design has non-positive variance bound {vc}"
        )));
    }
    Ok(vr / vc)
}
