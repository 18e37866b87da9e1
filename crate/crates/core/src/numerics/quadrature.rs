//! Gauss-Legendre quadrature on a finite interval.

use crate::error::{Error, Result};

/// Nodes and weights of a quadrature rule on `interval`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
}

/// Default order for all design-time expectations; the integrands here are
/// smooth (exp-quadratics against a normal density), so 64 nodes give ten or
/// more significant digits.
pub const DEFAULT_ORDER: usize = 64;

/// Build the Gauss-Legendre rule of the given order on [lower, upper].
///
/// Exact for polynomials of degree <= 2*order - 1.
pub fn gauss_legendre(order: usize, lower: f64, upper: f64) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::Domain("quadrature order must be >= 1".into()));
    }
    if !(lower < upper) {
        return Err(Error::Domain(format!(
            "quadrature interval must satisfy lower < upper, got [{lower}, {upper}]"
        )));
    }
    let n = order;
    let nf = n as f64;
    let mid = 0.5 * (upper + lower);
    let half = 0.5 * (upper - lower);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];

    for i in 0..n.div_ceil(2) {
        // Chebyshev-angle starting guess for the i-th root of P_n
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(z) and its derivative
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = mid - half * z;
        nodes[n - 1 - i] = mid + half * z;
        weights[i] = 2.0 * half / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }

    let rule = QuadratureRule {
        nodes,
        weights,
        interval: (lower, upper),
    };
    rule.validate()?;
    Ok(rule)
}

impl QuadratureRule {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.interval;
        for pair in self.nodes.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Numerical("quadrature nodes not increasing".into()));
            }
        }
        if self
            .nodes
            .iter()
            .any(|&x| x < lo - 1e-12 || x > hi + 1e-12)
        {
            return Err(Error::Numerical("quadrature node outside interval".into()));
        }
        if self.weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::Numerical("non-positive quadrature weight".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - (hi - lo)).abs() > 1e-12 * (1.0 + (hi - lo).abs()) {
            return Err(Error::Numerical("quadrature weights do not sum to interval length".into()));
        }
        Ok(())
    }

    /// Integrate `f` over the rule's interval.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        // compensated summation keeps results independent of node count quirks
        let mut sum = 0.0;
        let mut c = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let term = w * f(x) - c;
            let t = sum + term;
            c = (t - sum) - term;
            sum = t;
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::normal::{normal_cdf, normal_pdf};
    use proptest::prelude::*;

    #[test]
    fn order_two_integrates_cubics() {
        let rule = gauss_legendre(2, -1.0, 1.0).unwrap();
        let got = rule.integrate(|x| x * x);
        assert!((got - 2.0 / 3.0).abs() < 1e-14);
        assert!(rule.integrate(|x| x * x * x).abs() < 1e-14);
    }

    #[test]
    fn order_one_integrates_constants() {
        let rule = gauss_legendre(1, 0.0, 2.0).unwrap();
        assert!((rule.integrate(|_| 1.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn normal_mass_on_interval() {
        let rule = gauss_legendre(40, -2.0, 2.0).unwrap();
        let got = rule.integrate(normal_pdf);
        let want = normal_cdf(2.0) - normal_cdf(-2.0); // ~0.954500
        assert!((got - want).abs() < 1e-12);
        assert!((got - 0.954500).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(gauss_legendre(0, -1.0, 1.0).is_err());
        assert!(gauss_legendre(4, 1.0, 1.0).is_err());
        assert!(gauss_legendre(4, 2.0, -1.0).is_err());
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for order in [1, 2, 3, 8, 17, 64, 128] {
            let rule = gauss_legendre(order, -3.0, 5.0).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 8.0).abs() < 1e-12, "order {order}");
        }
    }

    proptest! {
        // exactness up to degree 2*order - 1 against symbolic integration
        #[test]
        fn polynomial_exactness(order in 1usize..24, coefs in proptest::collection::vec(-3.0f64..3.0, 1..8)) {
            let deg_max = 2 * order - 1;
            let coefs: Vec<f64> = coefs.into_iter().take(deg_max + 1).collect();
            let rule = gauss_legendre(order, -1.5, 2.0).unwrap();
            let got = rule.integrate(|x| {
                coefs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            });
            // symbolic antiderivative evaluated at the endpoints
            let anti = |x: f64| -> f64 {
                coefs
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| c * x.powi(k as i32 + 1) / (k as f64 + 1.0))
                    .sum()
            };
            let want = anti(2.0) - anti(-1.5);
            prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }
}
