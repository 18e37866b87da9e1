//! Domain vocabulary: covariate laws, outcome models, allocation designs,
//! target specifications, and link functions.
//!
//! All types are immutable after construction and safe to share across
//! workers. Covariates are fixed at dimension two (one continuous `w1`, one
//! binary `w2`); stratum geometry generalizes to axis-aligned rectangles.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, RngStream, TruncatedNormal};

/// A covariate point; `w2` takes values 0.0 or 1.0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariates {
    pub w1: f64,
    pub w2: f64,
}

impl Covariates {
    pub fn new(w1: f64, w2: f64) -> Self {
        Self { w1, w2 }
    }
}

/// Product law for W = (W1, W2): truncated-normal W1, Bernoulli(q) W2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductLaw {
    pub w1: TruncatedNormal,
    pub w2_prob: f64,
}

impl ProductLaw {
    pub fn new(w1: TruncatedNormal, w2_prob: f64) -> Result<Self> {
        if !(w2_prob > 0.0 && w2_prob < 1.0) {
            return Err(Error::Domain(format!(
                "Bernoulli probability must lie in (0,1), got {w2_prob}"
            )));
        }
        Ok(Self { w1, w2_prob })
    }

    pub fn pdf(&self, w: Covariates) -> f64 {
        let pw2 = if w.w2 == 1.0 {
            self.w2_prob
        } else {
            1.0 - self.w2_prob
        };
        self.w1.pdf(w.w1) * pw2
    }

    pub fn ln_pdf(&self, w: Covariates) -> f64 {
        let pw2 = if w.w2 == 1.0 {
            self.w2_prob
        } else {
            1.0 - self.w2_prob
        };
        self.w1.ln_pdf(w.w1) + pw2.ln()
    }

    pub fn sample(&self, rng: &mut RngStream) -> Covariates {
        let w1 = self.w1.sample(rng);
        let w2 = if rng.bernoulli(self.w2_prob) { 1.0 } else { 0.0 };
        Covariates { w1, w2 }
    }
}

/// A trial or target covariate law: one product law, or a two-component
/// mixture of product laws sharing the same support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CovariateDistribution {
    Product(ProductLaw),
    Mixture {
        first: ProductLaw,
        second: ProductLaw,
        first_weight: f64,
    },
}

impl CovariateDistribution {
    pub fn product(w1: TruncatedNormal, w2_prob: f64) -> Result<Self> {
        Ok(Self::Product(ProductLaw::new(w1, w2_prob)?))
    }

    pub fn mixture(first: ProductLaw, second: ProductLaw, first_weight: f64) -> Result<Self> {
        if !(first_weight > 0.0 && first_weight < 1.0) {
            return Err(Error::Domain(format!(
                "mixture weight must lie in (0,1), got {first_weight}"
            )));
        }
        if first.w1.lower != second.w1.lower || first.w1.upper != second.w1.upper {
            return Err(Error::Domain(
                "mixture components must share an identical support".into(),
            ));
        }
        Ok(Self::Mixture {
            first,
            second,
            first_weight,
        })
    }

    /// The common support of the continuous coordinate.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Product(p) => (p.w1.lower, p.w1.upper),
            Self::Mixture { first, .. } => (first.w1.lower, first.w1.upper),
        }
    }

    /// Mixture components with weights; a product law is a one-component mix.
    pub fn components(&self) -> Vec<(&ProductLaw, f64)> {
        match self {
            Self::Product(p) => vec![(p, 1.0)],
            Self::Mixture {
                first,
                second,
                first_weight,
            } => vec![(first, *first_weight), (second, 1.0 - *first_weight)],
        }
    }

    pub fn pdf(&self, w: Covariates) -> f64 {
        self.components()
            .iter()
            .map(|(law, wt)| wt * law.pdf(w))
            .sum()
    }

    pub fn ln_pdf(&self, w: Covariates) -> f64 {
        // mixtures need the weighted sum; stay in log space per component
        match self {
            Self::Product(p) => p.ln_pdf(w),
            _ => self.pdf(w).ln(),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Covariates {
        match self {
            Self::Product(p) => p.sample(rng),
            Self::Mixture {
                first,
                second,
                first_weight,
            } => {
                if rng.bernoulli(*first_weight) {
                    first.sample(rng)
                } else {
                    second.sample(rng)
                }
            }
        }
    }

    /// E[h(W)] by Gauss-Legendre quadrature crossed with the two-point W2 sum;
    /// mixtures integrate each component.
    pub fn expectation(&self, order: usize, h: impl Fn(Covariates) -> f64) -> Result<f64> {
        self.expectation_with_breaks(order, &[], h)
    }

    /// Like [`expectation`](Self::expectation), splitting the W1 range at the
    /// given interior breakpoints so piecewise integrands stay smooth on each
    /// panel.
    pub fn expectation_with_breaks(
        &self,
        order: usize,
        breaks: &[f64],
        h: impl Fn(Covariates) -> f64,
    ) -> Result<f64> {
        let (lo, hi) = self.support();
        let mut cuts: Vec<f64> = vec![lo];
        for &b in breaks {
            if b > lo && b < hi {
                cuts.push(b);
            }
        }
        cuts.push(hi);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();

        let mut total = 0.0;
        for (law, wt) in self.components() {
            for (w2, pw2) in [(0.0, 1.0 - law.w2_prob), (1.0, law.w2_prob)] {
                for pair in cuts.windows(2) {
                    let rule = gauss_legendre(order, pair[0], pair[1])?;
                    total +=
                        wt * pw2 * rule.integrate(|x| h(Covariates::new(x, w2)) * law.w1.pdf(x));
                }
            }
        }
        Ok(total)
    }
}

/// Conditional means and variances of the two potential outcomes, with the
/// noise family used for simulation. Coefficients act on (1, w1, w2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OutcomeModel {
    /// Continuous outcome: linear means, log-linear variances, normal noise.
    LinearNormal {
        mean: [[f64; 3]; 2],
        log_var: [[f64; 3]; 2],
    },
    /// Binary outcome: logistic means, Bernoulli noise, variance m(1-m).
    LogisticBernoulli { logit_mean: [[f64; 3]; 2] },
}

fn lin(c: &[f64; 3], w: Covariates) -> f64 {
    c[0] + c[1] * w.w1 + c[2] * w.w2
}

fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl OutcomeModel {
    /// Conditional mean m(a, w).
    pub fn mean(&self, arm: u8, w: Covariates) -> f64 {
        match self {
            Self::LinearNormal { mean, .. } => lin(&mean[arm as usize], w),
            Self::LogisticBernoulli { logit_mean } => expit(lin(&logit_mean[arm as usize], w)),
        }
    }

    /// Conditional variance v_a(w) = Var{Y(a) | W = w}.
    pub fn variance(&self, arm: u8, w: Covariates) -> f64 {
        match self {
            Self::LinearNormal { log_var, .. } => lin(&log_var[arm as usize], w).exp(),
            Self::LogisticBernoulli { .. } => {
                let m = self.mean(arm, w);
                m * (1.0 - m)
            }
        }
    }

    /// Conditional effect delta(w) = m(1, w) - m(0, w).
    pub fn delta(&self, w: Covariates) -> f64 {
        self.mean(1, w) - self.mean(0, w)
    }

    /// Draw Y(a) given W = w.
    pub fn sample_outcome(&self, arm: u8, w: Covariates, rng: &mut RngStream) -> f64 {
        match self {
            Self::LinearNormal { .. } => {
                rng.normal(self.mean(arm, w), self.variance(arm, w).sqrt())
            }
            Self::LogisticBernoulli { .. } => {
                if rng.bernoulli(self.mean(arm, w)) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, Self::LogisticBernoulli { .. })
    }
}

/// Treatment-assignment propensity as a function of covariates.
pub type PropensityFn = Arc<dyn Fn(Covariates) -> f64 + Send + Sync>;

/// The object being optimized: covariate-independent randomization with one
/// probability, or covariate-dependent randomization with a propensity
/// function.
#[derive(Clone)]
pub enum AllocationDesign {
    Cir(f64),
    Cdr(PropensityFn),
}

impl AllocationDesign {
    pub fn cir(pi: f64) -> Result<Self> {
        if !(pi > 0.0 && pi < 1.0) {
            return Err(Error::Domain(format!(
                "CIR probability must lie in (0,1), got {pi}"
            )));
        }
        Ok(Self::Cir(pi))
    }

    pub fn cdr(p: impl Fn(Covariates) -> f64 + Send + Sync + 'static) -> Self {
        Self::Cdr(Arc::new(p))
    }

    /// Assignment probability at a covariate point.
    pub fn propensity(&self, w: Covariates) -> f64 {
        match self {
            Self::Cir(pi) => *pi,
            Self::Cdr(p) => p(w),
        }
    }
}

impl fmt::Debug for AllocationDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Cir(pi) => write!(f, "Cir({pi})"),
            Self::Cdr(_) => write!(f, "Cdr(<fn>)"),
        }
    }
}

/// One axis-aligned stratum: w1 in [lo, hi) crossed with a W2 value
/// (`None` keeps both W2 values).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub w1_lo: f64,
    pub w1_hi: f64,
    pub w2: Option<u8>,
}

impl Stratum {
    pub fn contains(&self, w: Covariates) -> bool {
        let w2_ok = match self.w2 {
            None => true,
            Some(v) => (w.w2 == 1.0) == (v == 1),
        };
        w2_ok && w.w1 >= self.w1_lo && w.w1 < self.w1_hi
    }
}

/// A disjoint partition of the covariate space into rectangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumPartition {
    pub strata: Vec<Stratum>,
}

impl StratumPartition {
    pub fn new(strata: Vec<Stratum>) -> Result<Self> {
        if strata.is_empty() {
            return Err(Error::Domain("partition needs at least one stratum".into()));
        }
        Ok(Self { strata })
    }

    /// Partition from W1 cutpoints: for each W2 value, one stratum per W1
    /// segment, ordered W2 = 0 first then W2 = 1 (single full stratum when
    /// no cutpoints and `split_w2` is false).
    pub fn from_cutpoints(cutpoints: &[f64], split_w2: bool) -> Result<Self> {
        let mut edges = vec![f64::NEG_INFINITY];
        let mut sorted = cutpoints.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.extend(sorted);
        edges.push(f64::INFINITY);
        let mut strata = Vec::new();
        let w2_values: &[Option<u8>] = if split_w2 {
            &[Some(0), Some(1)]
        } else {
            &[None]
        };
        for &w2 in w2_values {
            for pair in edges.windows(2) {
                strata.push(Stratum {
                    w1_lo: pair[0],
                    w1_hi: pair[1],
                    w2,
                });
            }
        }
        Self::new(strata)
    }

    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    /// Index of the stratum containing `w`.
    pub fn index_of(&self, w: Covariates) -> Option<usize> {
        self.strata.iter().position(|s| s.contains(w))
    }

    /// E_F[h(W) 1{W in stratum k}] by quadrature against the trial law.
    pub fn stratum_expectation(
        &self,
        k: usize,
        trial: &CovariateDistribution,
        order: usize,
        h: impl Fn(Covariates) -> f64,
    ) -> Result<f64> {
        let s = self.strata[k];
        let (lo, hi) = trial.support();
        let a = s.w1_lo.max(lo);
        let b = s.w1_hi.min(hi);
        if !(a < b) {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for (law, wt) in trial.components() {
            let rule = gauss_legendre(order, a, b)?;
            for (w2, pw2) in [(0.0, 1.0 - law.w2_prob), (1.0, law.w2_prob)] {
                let keep = match s.w2 {
                    None => true,
                    Some(v) => (v == 1) == (w2 == 1.0),
                };
                if keep {
                    total +=
                        wt * pw2 * rule.integrate(|x| h(Covariates::new(x, w2)) * law.w1.pdf(x));
                }
            }
        }
        Ok(total)
    }
}

/// What the trial data are for: the trial population itself, an external
/// target cohort, a super-population containing the trial, or known stratum
/// weights.
#[derive(Debug, Clone)]
pub enum TargetSpec {
    Trial,
    Transport {
        target: CovariateDistribution,
    },
    /// Target population gamma*F + (1-gamma)*complement; gamma = Pr(Z=1) is
    /// the trial's share of the target.
    Generalize {
        complement: ProductLaw,
        gamma: f64,
    },
    PostStratify {
        partition: StratumPartition,
        weights: Vec<f64>,
    },
}

impl TargetSpec {
    pub fn generalize(complement: ProductLaw, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Domain(format!(
                "generalization gamma must lie in (0,1), got {gamma}"
            )));
        }
        Ok(Self::Generalize { complement, gamma })
    }

    pub fn post_stratify(partition: StratumPartition, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != partition.len() {
            return Err(Error::Domain(format!(
                "{} stratum weights for {} strata",
                weights.len(),
                partition.len()
            )));
        }
        if weights.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::Domain("stratum weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "stratum weights must sum to 1, got {total}"
            )));
        }
        Ok(Self::PostStratify { partition, weights })
    }

    /// The covariate law of the target population (the trial law itself for
    /// `Trial`; for `Generalize`, the gamma-mixture of trial and complement).
    pub fn target_law(&self, trial: &CovariateDistribution) -> Result<Option<CovariateDistribution>> {
        match self {
            Self::Trial | Self::PostStratify { .. } => Ok(None),
            Self::Transport { target } => Ok(Some(target.clone())),
            Self::Generalize { complement, gamma } => {
                let first = match trial {
                    CovariateDistribution::Product(p) => *p,
                    CovariateDistribution::Mixture { .. } => {
                        return Err(Error::Domain(
                            "generalization requires a product-law trial population".into(),
                        ))
                    }
                };
                Ok(Some(CovariateDistribution::mixture(
                    first,
                    *complement,
                    *gamma,
                )?))
            }
        }
    }
}

/// Strictly increasing link for effect measures g(mu1*) - g(mu0*).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkFunction {
    Identity,
    Log,
    Logit,
}

impl LinkFunction {
    pub fn value(&self, x: f64) -> Result<f64> {
        match self {
            Self::Identity => Ok(x),
            Self::Log => {
                if x > 0.0 {
                    Ok(x.ln())
                } else {
                    Err(Error::Domain(format!("log link needs x > 0, got {x}")))
                }
            }
            Self::Logit => {
                if x > 0.0 && x < 1.0 {
                    Ok((x / (1.0 - x)).ln())
                } else {
                    Err(Error::Domain(format!("logit link needs x in (0,1), got {x}")))
                }
            }
        }
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        match self {
            Self::Identity => Ok(1.0),
            Self::Log => {
                if x > 0.0 {
                    Ok(1.0 / x)
                } else {
                    Err(Error::Domain(format!("log link needs x > 0, got {x}")))
                }
            }
            Self::Logit => {
                if x > 0.0 && x < 1.0 {
                    Ok(1.0 / (x * (1.0 - x)))
                } else {
                    Err(Error::Domain(format!("logit link needs x in (0,1), got {x}")))
                }
            }
        }
    }
}

/// delta(w) = m(1, w) - m(0, w).
pub fn delta(outcome: &OutcomeModel, w: Covariates) -> f64 {
    outcome.delta(w)
}

/// The estimand: the mean of delta(W) under the target covariate law.
///
/// `Trial` yields E_F{delta(W)}; `PostStratify` yields the weighted average
/// of stratum-conditional effects. Never consults an allocation design.
pub fn estimand_value(
    outcome: &OutcomeModel,
    trial: &CovariateDistribution,
    target: &TargetSpec,
    order: usize,
) -> Result<f64> {
    match target {
        TargetSpec::Trial => trial.expectation(order, |w| outcome.delta(w)),
        TargetSpec::Transport { .. } | TargetSpec::Generalize { .. } => {
            let law = target
                .target_law(trial)?
                .expect("transport/generalize always carry a target law");
            law.expectation(order, |w| outcome.delta(w))
        }
        TargetSpec::PostStratify { partition, weights } => {
            let mut total = 0.0;
            for (k, &tau_star) in weights.iter().enumerate() {
                let tau_k = partition.stratum_expectation(k, trial, order, |_| 1.0)?;
                if tau_k <= 1e-12 {
                    return Err(Error::Domain(format!(
                        "stratum {k} has no trial-population mass"
                    )));
                }
                let num = partition.stratum_expectation(k, trial, order, |w| outcome.delta(w))?;
                total += tau_star * num / tau_k;
            }
            Ok(total)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DEFAULT_ORDER;

    pub fn example_trial() -> CovariateDistribution {
        CovariateDistribution::product(TruncatedNormal::new(0.0, 0.75, -2.0, 2.0).unwrap(), 0.2)
            .unwrap()
    }

    pub fn example_target() -> CovariateDistribution {
        CovariateDistribution::product(TruncatedNormal::new(0.5, 1.0, -2.0, 2.0).unwrap(), 0.5)
            .unwrap()
    }

    pub fn example_outcome() -> OutcomeModel {
        OutcomeModel::LinearNormal {
            mean: [[0.0, 1.0, 1.0], [1.0, 0.0, 1.0]],
            log_var: [[-2.0, 1.0, 2.0], [1.0, -1.0, -2.0]],
        }
    }

    fn example_poststrat() -> TargetSpec {
        TargetSpec::post_stratify(
            StratumPartition::from_cutpoints(&[0.5], true).unwrap(),
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap()
    }

    fn target_complement() -> ProductLaw {
        ProductLaw::new(TruncatedNormal::new(0.5, 1.0, -2.0, 2.0).unwrap(), 0.5).unwrap()
    }

    #[test]
    fn delta_of_example_model() {
        let m = example_outcome();
        assert_eq!(delta(&m, Covariates::new(0.0, 0.0)), 1.0);
        assert_eq!(delta(&m, Covariates::new(1.0, 1.0)), 0.0);
        let null = OutcomeModel::LinearNormal {
            mean: [[0.3, 0.7, -0.2], [0.3, 0.7, -0.2]],
            log_var: [[0.0; 3], [0.0; 3]],
        };
        assert_eq!(delta(&null, Covariates::new(0.3, 1.0)), 0.0);
    }

    #[test]
    fn estimand_values_for_all_targets() {
        let (trial, outcome) = (example_trial(), example_outcome());
        let ate = estimand_value(&outcome, &trial, &TargetSpec::Trial, DEFAULT_ORDER).unwrap();
        assert!((ate - 1.0).abs() < 1e-6, "ate {ate}");

        let tr = estimand_value(
            &outcome,
            &trial,
            &TargetSpec::Transport {
                target: example_target(),
            },
            DEFAULT_ORDER,
        )
        .unwrap();
        assert!((tr - 0.620810499282).abs() < 1e-8, "transport {tr}");
        assert!((tr - 0.621).abs() < 1e-3);

        let gen = estimand_value(
            &outcome,
            &trial,
            &TargetSpec::generalize(target_complement(), 0.5).unwrap(),
            DEFAULT_ORDER,
        )
        .unwrap();
        assert!((gen - 0.810405249641).abs() < 1e-8, "generalize {gen}");
        assert!((gen - 0.810).abs() < 1e-3);

        let ps = estimand_value(&outcome, &trial, &example_poststrat(), DEFAULT_ORDER).unwrap();
        assert!((ps - 0.566791558772).abs() < 1e-8, "post-strat {ps}");
        assert!((ps - 0.567).abs() < 1e-3);
    }

    #[test]
    fn generalize_estimand_interpolates_trial_and_transport() {
        let (trial, outcome) = (example_trial(), example_outcome());
        let ate = estimand_value(&outcome, &trial, &TargetSpec::Trial, DEFAULT_ORDER).unwrap();
        let tr = estimand_value(
            &outcome,
            &trial,
            &TargetSpec::Transport {
                target: example_target(),
            },
            DEFAULT_ORDER,
        )
        .unwrap();
        for lambda in [0.25, 0.5, 0.75] {
            let gen = estimand_value(
                &outcome,
                &trial,
                &TargetSpec::generalize(target_complement(), lambda).unwrap(),
                DEFAULT_ORDER,
            )
            .unwrap();
            let want = lambda * ate + (1.0 - lambda) * tr;
            assert!((gen - want).abs() < 1e-10, "lambda {lambda}");
        }
        // the lambda -> 0 and lambda -> 1 limits coincide with the transport
        // and trial estimands by definition of the mixture
        assert!(TargetSpec::generalize(target_complement(), 0.0).is_err());
        assert!(TargetSpec::generalize(target_complement(), 1.0).is_err());
    }

    #[test]
    fn single_stratum_poststrat_equals_trial_estimand() {
        let (trial, outcome) = (example_trial(), example_outcome());
        let one = TargetSpec::post_stratify(
            StratumPartition::from_cutpoints(&[], false).unwrap(),
            vec![1.0],
        )
        .unwrap();
        let ps = estimand_value(&outcome, &trial, &one, DEFAULT_ORDER).unwrap();
        let ate = estimand_value(&outcome, &trial, &TargetSpec::Trial, DEFAULT_ORDER).unwrap();
        assert!((ps - ate).abs() < 1e-12);
    }

    #[test]
    fn poststrat_weight_validation() {
        let part = StratumPartition::from_cutpoints(&[0.5], true).unwrap();
        assert!(TargetSpec::post_stratify(part.clone(), vec![0.1, 0.2, 0.3, 0.3]).is_err());
        assert!(TargetSpec::post_stratify(part.clone(), vec![0.5, 0.5]).is_err());
        assert!(TargetSpec::post_stratify(part, vec![0.1, 0.2, 0.3, 0.4]).is_ok());
    }

    #[test]
    fn empty_stratum_is_rejected() {
        let (trial, outcome) = (example_trial(), example_outcome());
        // stratum entirely outside the support carries no mass
        let part = StratumPartition::new(vec![
            Stratum {
                w1_lo: f64::NEG_INFINITY,
                w1_hi: 2.0,
                w2: None,
            },
            Stratum {
                w1_lo: 5.0,
                w1_hi: 9.0,
                w2: None,
            },
        ])
        .unwrap();
        let spec = TargetSpec::post_stratify(part, vec![0.6, 0.4]).unwrap();
        assert!(matches!(
            estimand_value(&outcome, &trial, &spec, DEFAULT_ORDER),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mixture_requires_matching_support_and_interior_weight() {
        let a = ProductLaw::new(TruncatedNormal::new(0.0, 1.0, -2.0, 2.0).unwrap(), 0.3).unwrap();
        let b = ProductLaw::new(TruncatedNormal::new(0.0, 1.0, -1.0, 2.0).unwrap(), 0.3).unwrap();
        assert!(CovariateDistribution::mixture(a, b, 0.5).is_err());
        assert!(CovariateDistribution::mixture(a, a, 1.0).is_err());
        assert!(CovariateDistribution::mixture(a, a, 0.5).is_ok());
    }

    #[test]
    fn stratum_membership_uses_half_open_ranges() {
        let part = StratumPartition::from_cutpoints(&[0.5], true).unwrap();
        assert_eq!(part.index_of(Covariates::new(0.49, 0.0)), Some(0));
        assert_eq!(part.index_of(Covariates::new(0.5, 0.0)), Some(1));
        assert_eq!(part.index_of(Covariates::new(2.0, 1.0)), Some(3));
        assert_eq!(part.index_of(Covariates::new(-1.0, 1.0)), Some(2));
    }

    #[test]
    fn link_functions_and_domains() {
        assert_eq!(LinkFunction::Identity.derivative(-5.0).unwrap(), 1.0);
        assert!((LinkFunction::Log.value(2.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(LinkFunction::Log.value(0.0).is_err());
        assert!(LinkFunction::Log.derivative(-1.0).is_err());
        assert!((LinkFunction::Logit.value(0.5).unwrap()).abs() < 1e-15);
        assert!((LinkFunction::Logit.derivative(0.5).unwrap() - 4.0).abs() < 1e-12);
        assert!(LinkFunction::Logit.value(1.0).is_err());
    }

    #[test]
    fn expectation_matches_closed_form_mean() {
        let trial = example_trial();
        let mean_w1 = trial.expectation(DEFAULT_ORDER, |w| w.w1).unwrap();
        assert!(mean_w1.abs() < 1e-12);
        let mean_w2 = trial.expectation(DEFAULT_ORDER, |w| w.w2).unwrap();
        assert!((mean_w2 - 0.2).abs() < 1e-12);
        let target = example_target();
        let m = target.expectation(DEFAULT_ORDER, |w| w.w1).unwrap();
        assert!((m - 0.379189500718).abs() < 1e-9);
    }
}
