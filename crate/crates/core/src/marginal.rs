//! One-dimensional marginal distributions on the nonnegative half-line.

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{invalid, Result};

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile.
pub fn norm_ppf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // one Halley step against the accurate CDF
    let pdf = norm_pdf(x);
    if pdf <= 0.0 || !x.is_finite() {
        return x;
    }
    let e = if x < 0.0 { norm_cdf(x) - p } else { (1.0 - p) - norm_cdf(-x) };
    let t = e / pdf;
    x - t / (1.0 + 0.5 * x * t)
}

/// Distribution of a nonnegative asset price.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginalDistribution {
    /// `exp(N(mu, sigma^2))`.
    LogNormal { mu: f64, sigma: f64 },
    /// Piecewise-linear CDF through `(xs[k], ps[k])`; repeated abscissae
    /// encode atoms, `ps[0] > 0` an atom at `xs[0]`.
    PiecewiseLinear { xs: Vec<f64>, ps: Vec<f64> },
}

impl MarginalDistribution {
    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid("lognormal needs finite mu and sigma > 0"));
        }
        Ok(MarginalDistribution::LogNormal { mu, sigma })
    }

    /// Zero-rate Black–Scholes terminal law `spot * exp(-vol^2/2 + vol * Z)`.
    pub fn black_scholes(spot: f64, vol: f64) -> Result<Self> {
        if !(spot > 0.0) {
            return Err(invalid("spot must be positive"));
        }
        MarginalDistribution::lognormal(spot.ln() - 0.5 * vol * vol, vol)
    }

    pub fn piecewise_linear(xs: Vec<f64>, ps: Vec<f64>) -> Result<Self> {
        if xs.len() != ps.len() || xs.len() < 2 {
            return Err(invalid("piecewise-linear CDF needs matching knots, at least two"));
        }
        if xs[0] < 0.0 || xs.iter().any(|x| !x.is_finite()) {
            return Err(invalid("knots must be finite and nonnegative"));
        }
        if xs.windows(2).any(|w| w[1] < w[0]) || ps.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("knots and probabilities must be nondecreasing"));
        }
        if !(ps[0] >= 0.0) || (ps[ps.len() - 1] - 1.0).abs() > 1e-15 {
            return Err(invalid("probabilities must run from >= 0 up to 1"));
        }
        Ok(MarginalDistribution::PiecewiseLinear { xs, ps })
    }

    /// Uniform law on `[a, b]`.
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(invalid("uniform needs a < b"));
        }
        MarginalDistribution::piecewise_linear(vec![a, b], vec![0.0, 1.0])
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            MarginalDistribution::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    norm_cdf((x.ln() - mu) / sigma)
                }
            }
            MarginalDistribution::PiecewiseLinear { xs, ps } => {
                if x < xs[0] {
                    return 0.0;
                }
                let n = xs.len();
                if x >= xs[n - 1] {
                    return 1.0;
                }
                // last knot with xs[k] <= x
                let k = xs.partition_point(|&t| t <= x) - 1;
                let (x0, x1) = (xs[k], xs[k + 1]);
                if x1 == x0 {
                    return ps[k + 1];
                }
                ps[k] + (ps[k + 1] - ps[k]) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Generalized inverse `inf{x : F(x) >= p}`.
    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            MarginalDistribution::LogNormal { mu, sigma } => {
                if p <= 0.0 {
                    0.0
                } else {
                    (mu + sigma * norm_ppf(p)).exp()
                }
            }
            MarginalDistribution::PiecewiseLinear { xs, ps } => {
                if p <= ps[0] {
                    return xs[0];
                }
                let n = xs.len();
                let k = ps.partition_point(|&q| q < p).min(n - 1);
                let (p0, p1) = (ps[k - 1], ps[k]);
                if p1 == p0 {
                    return xs[k];
                }
                xs[k - 1] + (p - p0) / (p1 - p0) * (xs[k] - xs[k - 1])
            }
        }
    }

    /// Upper support point `x_max` with `F(x_max) >= 1 - q`.
    pub fn upper_truncation(&self, q: f64) -> f64 {
        match self {
            MarginalDistribution::PiecewiseLinear { xs, .. } => xs[xs.len() - 1],
            _ => self.quantile(1.0 - q),
        }
    }

    /// Points where the CDF is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            MarginalDistribution::LogNormal { .. } => Vec::new(),
            MarginalDistribution::PiecewiseLinear { xs, .. } => xs.clone(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            MarginalDistribution::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            MarginalDistribution::PiecewiseLinear { xs, ps } => {
                let mut m = xs[0] * ps[0];
                for k in 1..xs.len() {
                    m += 0.5 * (xs[k] + xs[k - 1]) * (ps[k] - ps[k - 1]);
                }
                m
            }
        }
    }

    /// `E[(S - k)^+]`.
    pub fn call(&self, k: f64) -> f64 {
        if k <= 0.0 {
            return self.mean() - k;
        }
        match self {
            MarginalDistribution::LogNormal { mu, sigma } => {
                let d1 = (mu - k.ln() + sigma * sigma) / sigma;
                let d2 = d1 - sigma;
                self.mean() * norm_cdf(d1) - k * norm_cdf(d2)
            }
            MarginalDistribution::PiecewiseLinear { xs, ps } => {
                // integral of 1 - F over [k, x_last], exact on each linear piece
                let mut acc = (xs[0] - k).max(0.0);
                for j in 1..xs.len() {
                    let (x0, x1) = (xs[j - 1], xs[j]);
                    if x1 <= k || x1 == x0 {
                        continue;
                    }
                    let a = x0.max(k);
                    let fa = ps[j - 1] + (ps[j] - ps[j - 1]) * (a - x0) / (x1 - x0);
                    acc += (x1 - a) * (1.0 - 0.5 * (fa + ps[j]));
                }
                acc
            }
        }
    }

    /// `E[(k - S)^+]`.
    pub fn put(&self, k: f64) -> f64 {
        if k <= 0.0 {
            return 0.0;
        }
        self.call(k) - self.mean() + k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadSettings};

    #[test]
    fn normal_functions() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_cdf(1.959963984540054) - 0.975).abs() < 1e-15);
        assert!((norm_cdf(-1.0) - 0.15865525393145707).abs() < 1e-17);
        assert!((norm_cdf(-6.0) / 9.865876450376946e-10 - 1.0).abs() < 1e-14);
        for p in [1e-12, 0.01, 0.3, 0.5, 0.9, 1.0 - 1e-10] {
            assert!((norm_cdf(norm_ppf(p)) - p).abs() < 1e-14 * (1.0 + 1.0 / p.min(1.0 - p)).min(1e3));
        }
    }

    #[test]
    fn piecewise_cdf_and_quantile() {
        let f = MarginalDistribution::piecewise_linear(vec![0.0, 1.0, 1.0, 3.0], vec![0.0, 0.25, 0.75, 1.0]).unwrap();
        assert_eq!(f.cdf(-1.0), 0.0);
        assert_eq!(f.cdf(0.5), 0.125);
        assert_eq!(f.cdf(1.0), 0.75);
        assert_eq!(f.cdf(2.0), 0.875);
        assert_eq!(f.quantile(0.5), 1.0);
        assert_eq!(f.quantile(0.25), 1.0);
        assert_eq!(f.quantile(0.125), 0.5);
        assert_eq!(f.quantile(0.875), 2.0);
        for x in [0.0, 0.3, 1.0, 2.5, 3.0] {
            assert!(f.quantile(f.cdf(x)) <= x + 1e-15);
        }
    }

    #[test]
    fn option_values_match_quadrature() {
        let s = QuadSettings { abs_tol: 1e-12, rel_tol: 1e-12, max_subdivisions: 5000 };
        let pl = MarginalDistribution::piecewise_linear(vec![0.0, 1.0, 1.0, 3.0], vec![0.1, 0.25, 0.75, 1.0]).unwrap();
        let ln = MarginalDistribution::black_scholes(10.0, 1.0).unwrap();
        for f in [pl, ln] {
            let top = f.upper_truncation(1e-14);
            for k in [0.5, 1.0, 2.0, 9.0] {
                let call = integrate(|x| 1.0 - f.cdf(x), k, top.max(k), &f.breakpoints(), &s).estimate.value;
                let tail = if top > 100.0 { f.call(top) } else { 0.0 };
                assert!((f.call(k) - call - tail).abs() < 1e-8, "{f:?} {k}");
                let put = integrate(|x| f.cdf(x), 0.0, k, &f.breakpoints(), &s).estimate.value;
                assert!((f.put(k) - put).abs() < 1e-8, "{f:?} {k}");
            }
        }
    }

    #[test]
    fn lognormal_mean_is_spot() {
        let f = MarginalDistribution::black_scholes(10.0, 1.0).unwrap();
        assert!((f.mean() - 10.0).abs() < 1e-12);
        assert!((f.cdf(f.quantile(0.3)) - 0.3).abs() < 1e-14);
    }
}
