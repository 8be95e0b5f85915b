//! From digital quotes to prescriptions, improved bounds and price envelopes.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bounds::{bound_for, BoundSide, Prescription, Scale};
use crate::error::{invalid, Error, Result};
use crate::grid::fmt_num;
use crate::marginal::MarginalDistribution;
use crate::market::{McEstimate, MarketQuote, QuoteKind};
use crate::payoff::{quasi_expectation_estimate, IntegrationConfig, Order, PayoffDescriptor, PayoffKind};
use crate::qcopula::{DependenceFunction, CMP_TOL};

/// Tolerance for a prescription point to count as lying on the track.
pub const TRACK_TOL: f64 = 1e-9;

/// What to do with quotes outside the Fréchet–Hoeffding envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuotePolicy {
    #[default]
    Reject,
    /// Clip the implied value onto the envelope.
    Clip,
}

/// Standard and improved price bounds at one strike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBounds {
    pub strike: f64,
    pub standard_lower: f64,
    pub improved_lower: f64,
    pub improved_upper: f64,
    pub standard_upper: f64,
    pub benchmark: Option<McEstimate>,
    pub sharp: bool,
    /// Sum of the quadrature error estimates of the four prices.
    pub quad_error: f64,
}

impl PriceBounds {
    pub const CSV_HEADER: &'static str = "strike,std_lower,imp_lower,imp_upper,std_upper,benchmark,stderr,sharp";

    pub fn to_csv_row(&self) -> String {
        let (b, e) = match self.benchmark {
            Some(m) => (fmt_num(m.price), fmt_num(m.stderr)),
            None => (String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            fmt_num(self.strike),
            fmt_num(self.standard_lower),
            fmt_num(self.improved_lower),
            fmt_num(self.improved_upper),
            fmt_num(self.standard_upper),
            b,
            e,
            self.sharp
        )
    }

    /// Improved bounds inside the standard ones, up to `tol`.
    pub fn nested(&self, tol: f64) -> bool {
        self.standard_lower <= self.improved_lower + tol
            && self.improved_lower <= self.improved_upper + tol
            && self.improved_upper <= self.standard_upper + tol
    }
}

pub fn price_bounds_csv(rows: &[PriceBounds]) -> String {
    let mut s = format!("{}\n", PriceBounds::CSV_HEADER);
    for r in rows {
        let _ = writeln!(s, "{}", r.to_csv_row());
    }
    s
}

/// The diagonal map `x -> (F_1(x), ..., F_d(x))`.
#[derive(Debug, Clone)]
pub struct TrackDescriptor {
    marginals: Vec<MarginalDistribution>,
}

impl TrackDescriptor {
    /// Rejects marginals whose CDF jumps by more than [`TRACK_TOL`] on
    /// `[lo, hi]`, probed on a uniform grid of `samples` points and at the
    /// knots of piecewise-linear CDFs.
    pub fn new(marginals: Vec<MarginalDistribution>, lo: f64, hi: f64, samples: usize) -> Result<Self> {
        if marginals.len() < 2 {
            return Err(invalid("a track needs at least two marginals"));
        }
        for (i, m) in marginals.iter().enumerate() {
            let mut probes: Vec<f64> = (0..=samples).map(|k| lo + (hi - lo) * k as f64 / samples.max(1) as f64).collect();
            probes.extend(m.breakpoints().into_iter().filter(|x| (lo..=hi).contains(x)));
            for x in probes {
                let h = 1e-12 * x.abs().max(1.0);
                let jump = m.cdf(x) - m.cdf(x - h);
                if jump > TRACK_TOL {
                    return Err(invalid(format!("marginal {i} jumps by {jump:e} at {x}")));
                }
            }
        }
        Ok(TrackDescriptor { marginals })
    }

    pub fn point(&self, x: f64) -> Vec<f64> {
        self.marginals.iter().map(|m| m.cdf(x)).collect()
    }

    /// True if `u` lies on the track within `tol`, testing the point obtained
    /// by inverting the first coordinate.
    pub fn contains(&self, u: &[f64], tol: f64) -> bool {
        if u.len() != self.marginals.len() {
            return false;
        }
        let x = self.marginals[0].quantile(u[0]);
        let p = self.point(x);
        p.iter().zip(u).all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Copula-scale prescription from pairwise quotes: the quote on `(i, j)` at
/// strike `K` fixes the copula at `F_i(K), F_j(K)` with 1 elsewhere.
pub fn pairwise_prescription(
    quotes: &[MarketQuote],
    marginals: &[MarginalDistribution],
    policy: QuotePolicy,
) -> Result<Prescription> {
    let d = marginals.len();
    let mut points = Vec::with_capacity(quotes.len());
    for q in quotes {
        if q.kind != QuoteKind::PairwiseDigitalMax {
            return Err(invalid(format!("expected pairwise-digital-max quotes, got {}", q.kind.name())));
        }
        if q.indices.iter().any(|&i| i >= d) {
            return Err(invalid(format!("quote indices {:?} out of range", q.indices)));
        }
        let mut x = vec![1.0; d];
        for &i in &q.indices {
            x[i] = marginals[i].cdf(q.strike);
        }
        points.push((x, q.price));
    }
    build(d, Scale::Copula, points, policy)
}

/// Survival-scale prescription from basket digital-call-on-min quotes:
/// each quote fixes the survival function at `(F_1(K), ..., F_d(K))`.
pub fn min_digital_prescription(
    quotes: &[MarketQuote],
    marginals: &[MarginalDistribution],
    policy: QuotePolicy,
) -> Result<Prescription> {
    let d = marginals.len();
    let mut points = Vec::with_capacity(quotes.len());
    for q in quotes {
        if q.kind != QuoteKind::BasketDigitalMin {
            return Err(invalid(format!("expected basket-digital-min quotes, got {}", q.kind.name())));
        }
        let mut idx = q.indices.clone();
        idx.sort_unstable();
        if idx != (0..d).collect::<Vec<_>>() {
            return Err(invalid(format!("basket quote must cover all {d} assets")));
        }
        let x: Vec<f64> = marginals.iter().map(|m| m.cdf(q.strike)).collect();
        points.push((x, q.price));
    }
    build(d, Scale::Survival, points, policy)
}

fn build(d: usize, scale: Scale, points: Vec<(Vec<f64>, f64)>, policy: QuotePolicy) -> Result<Prescription> {
    let r = match policy {
        QuotePolicy::Reject => Prescription::new(d, scale, points),
        QuotePolicy::Clip => Prescription::new_clipped(d, scale, points),
    };
    r.map_err(|e| match e {
        Error::InvalidPrescription(m) => Error::InconsistentQuotes(m),
        other => other,
    })
}

/// Improved and standard bound functions of one prescription.
#[derive(Debug, Clone)]
pub struct ImprovedBounds {
    prescription: Prescription,
    lower: DependenceFunction,
    upper: DependenceFunction,
    envelope_lower: DependenceFunction,
    envelope_upper: DependenceFunction,
}

impl ImprovedBounds {
    pub fn new(p: Prescription) -> Result<Self> {
        let d = p.dim();
        let (envelope_lower, envelope_upper) = match p.scale() {
            Scale::Copula => (DependenceFunction::lower_frechet(d)?, DependenceFunction::upper_frechet(d)?),
            Scale::Survival => (
                DependenceFunction::survival_lower_frechet(d)?,
                DependenceFunction::survival_upper_frechet(d)?,
            ),
        };
        Ok(ImprovedBounds {
            lower: bound_for(&p, BoundSide::Lower)?,
            upper: bound_for(&p, BoundSide::Upper)?,
            prescription: p,
            envelope_lower,
            envelope_upper,
        })
    }

    pub fn prescription(&self) -> &Prescription {
        &self.prescription
    }

    pub fn lower(&self) -> &DependenceFunction {
        &self.lower
    }

    pub fn upper(&self) -> &DependenceFunction {
        &self.upper
    }

    /// Largest deviation of either bound from the prescribed values.
    pub fn interpolation_error(&self) -> f64 {
        self.prescription
            .iter()
            .map(|(x, v)| (self.lower.eval(x) - v).abs().max((self.upper.eval(x) - v).abs()))
            .fold(0.0, f64::max)
    }

    /// Prices `f` at the four bound functions, ordered by the payoff's
    /// tonicity. The payoff's order must match the prescription's scale:
    /// lower orthant for copula scale, upper orthant for survival scale.
    pub fn price(&self, f: &PayoffDescriptor, marginals: &[MarginalDistribution], cfg: &IntegrationConfig) -> Result<PriceBounds> {
        check_order(f, self.prescription.scale())?;
        let price = |q: &DependenceFunction| quasi_expectation_estimate(f, q, marginals, cfg);
        let (wl, lo, hi, mu) = (
            price(&self.envelope_lower)?,
            price(&self.lower)?,
            price(&self.upper)?,
            price(&self.envelope_upper)?,
        );
        let quad_error = wl.error + lo.error + hi.error + mu.error;
        let (sl, il, iu, su) = if f.tonicity().reversed() {
            (mu.value, hi.value, lo.value, wl.value)
        } else {
            (wl.value, lo.value, hi.value, mu.value)
        };
        let sharp = self.prescription.scale() == Scale::Survival && sharpness_flag(&self.prescription, f, marginals);
        Ok(PriceBounds {
            strike: f.strike(),
            standard_lower: sl,
            improved_lower: il,
            improved_upper: iu,
            standard_upper: su,
            benchmark: None,
            sharp,
            quad_error,
        })
    }

    /// Prices every payoff in parallel; output order follows the input.
    pub fn price_sweep(
        &self,
        payoffs: &[PayoffDescriptor],
        marginals: &[MarginalDistribution],
        cfg: &IntegrationConfig,
    ) -> Result<Vec<PriceBounds>> {
        payoffs.par_iter().map(|f| self.price(f, marginals, cfg)).collect()
    }
}

fn check_order(f: &PayoffDescriptor, scale: Scale) -> Result<()> {
    let want = match scale {
        Scale::Copula => Order::LowerOrthant,
        Scale::Survival => Order::UpperOrthant,
    };
    if f.tonicity().order() != want {
        let pipeline = match scale {
            Scale::Copula => "copula-scale bounds order prices only for Δ-antitonic payoffs or their negations",
            Scale::Survival => "survival-scale bounds order prices only for Δ-monotonic payoffs or their negations",
        };
        return Err(Error::UnsupportedPayoffOrder(format!("{}: {pipeline}", f.kind().name())));
    }
    Ok(())
}

/// Price bounds for a lower-orthant payoff from pairwise digital quotes.
pub fn bounds_from_pairwise_quotes(
    quotes: &[MarketQuote],
    marginals: &[MarginalDistribution],
    f: &PayoffDescriptor,
    cfg: &IntegrationConfig,
    policy: QuotePolicy,
) -> Result<PriceBounds> {
    check_order(f, Scale::Copula)?;
    ImprovedBounds::new(pairwise_prescription(quotes, marginals, policy)?)?.price(f, marginals, cfg)
}

/// Price bounds for an upper-orthant payoff from basket min-digital quotes.
pub fn bounds_from_min_digital_quotes(
    quotes: &[MarketQuote],
    marginals: &[MarginalDistribution],
    f: &PayoffDescriptor,
    cfg: &IntegrationConfig,
    policy: QuotePolicy,
) -> Result<PriceBounds> {
    check_order(f, Scale::Survival)?;
    ImprovedBounds::new(min_digital_prescription(quotes, marginals, policy)?)?.price(f, marginals, cfg)
}

/// Price range from the Fréchet–Hoeffding envelope alone: copula scale for
/// lower-orthant payoffs, survival scale for upper-orthant ones. The
/// `W`-side value is the infimum over copulas only for `d = 2`.
pub fn standard_price_envelope(
    f: &PayoffDescriptor,
    marginals: &[MarginalDistribution],
    cfg: &IntegrationConfig,
) -> Result<(f64, f64)> {
    let d = marginals.len();
    let scale = match f.tonicity().order() {
        Order::LowerOrthant => Scale::Copula,
        Order::UpperOrthant => Scale::Survival,
    };
    let b = ImprovedBounds::new(Prescription::empty(d, scale)?)?.price(f, marginals, cfg)?;
    Ok((b.standard_lower, b.standard_upper))
}

/// Advisory flag: the payoff's measure lives on the diagonal and every
/// survival-scale prescription point lies on the marginal track, in which
/// case the survival bounds give sharp prices.
pub fn sharpness_flag(p: &Prescription, f: &PayoffDescriptor, marginals: &[MarginalDistribution]) -> bool {
    if p.scale() != Scale::Survival || marginals.len() != p.dim() {
        return false;
    }
    if !matches!(f.kind(), PayoffKind::CallOnMin | PayoffKind::DigitalCallOnMin) {
        return false;
    }
    let track = TrackDescriptor { marginals: marginals.to_vec() };
    p.iter().all(|(x, _)| track.contains(x, TRACK_TOL))
}

/// Strikes at the average of the assets' quantiles, equally spaced in
/// probability from `q_lo` to `q_hi`.
pub fn quantile_strike_grid(marginals: &[MarginalDistribution], q_lo: f64, q_hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(0.0 < q_lo && q_lo <= q_hi && q_hi < 1.0) || count == 0 {
        return Err(invalid("strike grid needs 0 < q_lo <= q_hi < 1 and count >= 1"));
    }
    Ok((0..count)
        .map(|k| {
            let q = if count == 1 { q_lo } else { q_lo + (q_hi - q_lo) * k as f64 / (count - 1) as f64 };
            marginals.iter().map(|m| m.quantile(q)).sum::<f64>() / marginals.len() as f64
        })
        .collect())
}

/// Absolute tolerance used when comparing nested price bounds.
pub fn nesting_tolerance(b: &PriceBounds, cfg: &IntegrationConfig) -> f64 {
    b.quad_error + cfg.abs_tol + CMP_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{generate_min_digital_quotes, generate_pairwise_digital_quotes, BSModel, CorrelationMatrix};

    fn model(rho: f64) -> BSModel {
        BSModel::new(vec![10.0; 3], CorrelationMatrix::equicorrelated(3, rho).unwrap()).unwrap()
    }

    #[test]
    fn zero_quotes_give_standard_envelope() {
        let m = model(0.3).marginals();
        let cfg = IntegrationConfig::default();
        let f = PayoffDescriptor::new(PayoffKind::DigitalPutOnMax, 9.0).unwrap();
        let b = bounds_from_pairwise_quotes(&[], &m, &f, &cfg, QuotePolicy::Reject).unwrap();
        assert_eq!(b.improved_lower, b.standard_lower);
        assert_eq!(b.improved_upper, b.standard_upper);
        let u = m[0].cdf(9.0);
        assert!((b.standard_upper - u).abs() < 1e-15);
        assert!((b.standard_lower - (3.0 * u - 2.0).max(0.0)).abs() < 1e-15);
    }

    #[test]
    fn two_dim_uniform_envelope() {
        let m = vec![MarginalDistribution::uniform(0.0, 1.0).unwrap(); 2];
        let f = PayoffDescriptor::new(PayoffKind::DigitalPutOnMax, 0.5).unwrap();
        let (lo, hi) = standard_price_envelope(&f, &m, &IntegrationConfig::default()).unwrap();
        assert_eq!((lo, hi), (0.0, 0.5));
    }

    #[test]
    fn call_on_min_envelope_upper_is_univariate_call() {
        let m = model(0.0).marginals();
        let f = PayoffDescriptor::new(PayoffKind::CallOnMin, 9.0).unwrap();
        let (lo, hi) = standard_price_envelope(&f, &m, &IntegrationConfig::default()).unwrap();
        assert!((hi - m[0].call(9.0)).abs() < 1e-6);
        assert!(lo >= -1e-9 && lo < hi);
    }

    #[test]
    fn pairwise_pipeline_nests_and_interpolates() {
        let mdl = model(0.3);
        let m = mdl.marginals();
        let quotes = generate_pairwise_digital_quotes(&mdl, &[8.0, 10.0, 12.0]).unwrap();
        let ib = ImprovedBounds::new(pairwise_prescription(&quotes, &m, QuotePolicy::Reject).unwrap()).unwrap();
        assert!(ib.interpolation_error() < 1e-14);
        let cfg = IntegrationConfig::default();
        let f = PayoffDescriptor::new(PayoffKind::DigitalPutOnMax, 10.0).unwrap();
        let b = ib.price(&f, &m, &cfg).unwrap();
        assert!(b.nested(1e-12));
        assert!(b.improved_lower > b.standard_lower || b.improved_upper < b.standard_upper);
        let wrong = PayoffDescriptor::new(PayoffKind::CallOnMin, 10.0).unwrap();
        assert!(matches!(ib.price(&wrong, &m, &cfg), Err(Error::UnsupportedPayoffOrder(_))));
    }

    #[test]
    fn inconsistent_quotes() {
        let m = model(0.3).marginals();
        let q = MarketQuote::new(QuoteKind::PairwiseDigitalMax, vec![0, 1], 10.0, 0.99).unwrap();
        let r = pairwise_prescription(std::slice::from_ref(&q), &m, QuotePolicy::Reject);
        assert!(matches!(r, Err(Error::InconsistentQuotes(_))));
        let p = pairwise_prescription(&[q], &m, QuotePolicy::Clip).unwrap();
        assert!((p.value(0) - m[0].cdf(10.0)).abs() < 1e-15);
    }

    #[test]
    fn survival_pipeline_and_sharpness() {
        let mdl = model(0.5);
        let m = mdl.marginals();
        let quotes = generate_min_digital_quotes(&mdl, &[8.0, 11.0]).unwrap();
        let p = min_digital_prescription(&quotes, &m, QuotePolicy::Reject).unwrap();
        let f = PayoffDescriptor::new(PayoffKind::CallOnMin, 9.0).unwrap();
        assert!(sharpness_flag(&p, &f, &m));
        let cfg = IntegrationConfig::default();
        let b = bounds_from_min_digital_quotes(&quotes, &m, &f, &cfg, QuotePolicy::Reject).unwrap();
        assert!(b.sharp && b.nested(1e-8), "{b:?}");
        // the quoted digital reprices to its quote
        let dig = PayoffDescriptor::new(PayoffKind::DigitalCallOnMin, 8.0).unwrap();
        let b = bounds_from_min_digital_quotes(&quotes, &m, &dig, &cfg, QuotePolicy::Reject).unwrap();
        assert!((b.improved_lower - quotes[0].price).abs() < 1e-12);
        assert!((b.improved_upper - quotes[0].price).abs() < 1e-12);
        // off the track
        let off = Prescription::new(3, Scale::Survival, vec![(vec![0.2, 0.3, 0.2], 0.5)]).unwrap();
        assert!(!sharpness_flag(&off, &f, &m));
    }

    #[test]
    fn put_on_min_swaps_roles() {
        let mdl = model(0.5);
        let m = mdl.marginals();
        let quotes = generate_min_digital_quotes(&mdl, &[8.0, 11.0]).unwrap();
        let f = PayoffDescriptor::new(PayoffKind::PutOnMin, 9.0).unwrap();
        let b = bounds_from_min_digital_quotes(&quotes, &m, &f, &IntegrationConfig::default(), QuotePolicy::Reject).unwrap();
        assert!(b.nested(1e-8), "{b:?}");
    }

    #[test]
    fn track_rejects_jumps() {
        let jumpy = MarginalDistribution::piecewise_linear(vec![0.0, 1.0, 1.0, 2.0], vec![0.0, 0.3, 0.6, 1.0]).unwrap();
        let u = MarginalDistribution::uniform(0.0, 2.0).unwrap();
        assert!(TrackDescriptor::new(vec![u.clone(), jumpy], 0.0, 2.0, 50).is_err());
        let t = TrackDescriptor::new(vec![u.clone(), u], 0.0, 2.0, 50).unwrap();
        assert!(t.contains(&[0.3, 0.3], 1e-12));
        assert!(!t.contains(&[0.3, 0.4], 1e-12));
    }

    #[test]
    fn csv_row() {
        let b = PriceBounds {
            strike: 10.0,
            standard_lower: 0.0,
            improved_lower: 0.1,
            improved_upper: 0.2,
            standard_upper: 0.5,
            benchmark: Some(McEstimate { price: 0.15, stderr: 0.001 }),
            sharp: false,
            quad_error: 0.0,
        };
        assert_eq!(b.to_csv_row(), "10,0,0.1,0.2,0.5,0.15,0.001,false");
    }
}
