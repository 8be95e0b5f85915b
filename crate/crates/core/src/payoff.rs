//! Measure-inducing payoffs and the quasi-expectation operator, which extends
//! `E[f(S)]` from copulas to quasi-copulas through an integration-by-parts
//! recursion over index subsets.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{invalid, parse_err, Error, Result};
use crate::marginal::MarginalDistribution;
use crate::qcopula::{orthant_compare, DependenceFunction, DEFAULT_DIM_CAP};
use crate::quad::{integrate, Estimate, GaussLegendre, QuadSettings};

/// The payoff families with closed-form induced measures, plus caller-defined
/// payoffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PayoffKind {
    DigitalPutOnMax,
    DigitalCallOnMin,
    CallOnMin,
    PutOnMin,
    CallOnMax,
    PutOnMax,
    Generic,
}

impl PayoffKind {
    pub const TABLE: [PayoffKind; 6] = [
        PayoffKind::DigitalPutOnMax,
        PayoffKind::DigitalCallOnMin,
        PayoffKind::CallOnMin,
        PayoffKind::PutOnMin,
        PayoffKind::CallOnMax,
        PayoffKind::PutOnMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PayoffKind::DigitalPutOnMax => "digital-put-on-max",
            PayoffKind::DigitalCallOnMin => "digital-call-on-min",
            PayoffKind::CallOnMin => "call-on-min",
            PayoffKind::PutOnMin => "put-on-min",
            PayoffKind::CallOnMax => "call-on-max",
            PayoffKind::PutOnMax => "put-on-max",
            PayoffKind::Generic => "generic",
        }
    }

    /// Sign pattern of mixed differences.
    pub fn tonicity(self) -> Option<Tonicity> {
        match self {
            PayoffKind::DigitalPutOnMax | PayoffKind::PutOnMax => Some(Tonicity::Antitonic),
            PayoffKind::DigitalCallOnMin | PayoffKind::CallOnMin => Some(Tonicity::Monotonic),
            PayoffKind::PutOnMin => Some(Tonicity::NegMonotonic),
            PayoffKind::CallOnMax => Some(Tonicity::NegAntitonic),
            PayoffKind::Generic => None,
        }
    }
}

impl FromStr for PayoffKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        PayoffKind::TABLE
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| parse_err(format!("unknown payoff kind {s:?}")))
    }
}

/// Sign pattern of a payoff's mixed differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tonicity {
    /// All mixed differences nonnegative; prices increase in the upper orthant order.
    Monotonic,
    /// Mixed differences alternate with the subset size; prices increase in the
    /// lower orthant order.
    Antitonic,
    /// `-f` is monotonic.
    NegMonotonic,
    /// `-f` is antitonic.
    NegAntitonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    LowerOrthant,
    UpperOrthant,
}

impl Tonicity {
    /// Stochastic order under which prices are monotone.
    pub fn order(self) -> Order {
        match self {
            Tonicity::Antitonic | Tonicity::NegAntitonic => Order::LowerOrthant,
            Tonicity::Monotonic | Tonicity::NegMonotonic => Order::UpperOrthant,
        }
    }

    /// True when prices decrease along the order.
    pub fn reversed(self) -> bool {
        matches!(self, Tonicity::NegMonotonic | Tonicity::NegAntitonic)
    }
}

pub type PathFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Signed measure induced by `f` on the coordinates of one index subset.
/// Coordinates are listed in increasing index order of the subset.
#[derive(Clone)]
pub enum SubsetMeasure {
    Zero,
    /// Point masses `(x, weight)`.
    Atoms(Vec<(Vec<f64>, f64)>),
    /// Mass `density(t) dt` along `t -> path(t)` for `t` in `[lo, hi]`; an
    /// infinite `hi` is truncated at the marginals' upper support point.
    Curve { lo: f64, hi: f64, path: PathFn, density: ScalarFn },
    /// Lebesgue density on a bounded box, integrated by a tensor
    /// Gauss–Legendre rule with `nodes` points per axis.
    Density { lo: Vec<f64>, hi: Vec<f64>, density: DensityFn, nodes: usize },
}

impl fmt::Debug for SubsetMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubsetMeasure::Zero => write!(f, "Zero"),
            SubsetMeasure::Atoms(a) => f.debug_tuple("Atoms").field(a).finish(),
            SubsetMeasure::Curve { lo, hi, .. } => write!(f, "Curve {{ lo: {lo}, hi: {hi} }}"),
            SubsetMeasure::Density { lo, hi, nodes, .. } => {
                write!(f, "Density {{ lo: {lo:?}, hi: {hi:?}, nodes: {nodes} }}")
            }
        }
    }
}

pub type PayoffFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A caller-defined payoff with its induced measures supplied per subset of
/// size at least two.
#[derive(Clone)]
pub struct GenericPayoff {
    dim: usize,
    tonicity: Tonicity,
    f: PayoffFn,
    measures: BTreeMap<u32, SubsetMeasure>,
}

impl fmt::Debug for GenericPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericPayoff")
            .field("dim", &self.dim)
            .field("tonicity", &self.tonicity)
            .field("measures", &self.measures)
            .finish_non_exhaustive()
    }
}

impl GenericPayoff {
    pub fn new<F>(dim: usize, tonicity: Tonicity, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if !(2..=DEFAULT_DIM_CAP).contains(&dim) {
            return Err(invalid(format!("generic payoff dimension {dim} outside [2, {DEFAULT_DIM_CAP}]")));
        }
        Ok(GenericPayoff { dim, tonicity, f: Arc::new(f), measures: BTreeMap::new() })
    }

    /// Attaches the induced measure of the subset `indices` (0-based).
    pub fn with_measure(mut self, indices: &[usize], measure: SubsetMeasure) -> Result<Self> {
        let mut mask = 0u32;
        for &i in indices {
            if i >= self.dim || mask >> i & 1 == 1 {
                return Err(invalid(format!("invalid subset {indices:?}")));
            }
            mask |= 1 << i;
        }
        if indices.len() < 2 {
            return Err(invalid("measures are supplied for subsets of size >= 2"));
        }
        let k = indices.len();
        let bad = match &measure {
            SubsetMeasure::Zero => false,
            SubsetMeasure::Atoms(a) => a.iter().any(|(x, _)| x.len() != k),
            SubsetMeasure::Curve { lo, hi, .. } => !(lo.is_finite() && hi > lo),
            SubsetMeasure::Density { lo, hi, nodes, .. } => {
                lo.len() != k || hi.len() != k || *nodes == 0 || lo.iter().zip(hi).any(|(a, b)| !(b > a) || !b.is_finite())
            }
        };
        if bad {
            return Err(invalid(format!("malformed measure for subset {indices:?}")));
        }
        self.measures.insert(mask, measure);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tonicity(&self) -> Tonicity {
        self.tonicity
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// A payoff: one of the closed-form families at a strike, or a generic payoff.
#[derive(Debug, Clone)]
pub struct PayoffDescriptor {
    kind: PayoffKind,
    strike: f64,
    generic: Option<Arc<GenericPayoff>>,
}

impl PayoffDescriptor {
    pub fn new(kind: PayoffKind, strike: f64) -> Result<Self> {
        if kind == PayoffKind::Generic {
            return Err(invalid("use PayoffDescriptor::generic for generic payoffs"));
        }
        if !(strike >= 0.0) || !strike.is_finite() {
            return Err(Error::InvalidStrike(strike));
        }
        Ok(PayoffDescriptor { kind, strike, generic: None })
    }

    pub fn generic(g: GenericPayoff) -> Self {
        PayoffDescriptor { kind: PayoffKind::Generic, strike: 0.0, generic: Some(Arc::new(g)) }
    }

    /// `(sum_i w_i x_i - K)^+`. Only two assets are admitted: with three or
    /// more, basket payoffs are neither Δ-monotonic nor Δ-antitonic in general.
    /// Positive weights give a Δ-monotonic payoff, weights of opposite sign a
    /// spread whose negation is Δ-monotonic.
    pub fn basket(weights: &[f64], strike: f64) -> Result<Self> {
        if weights.len() >= 3 {
            return Err(Error::UnsupportedPayoffOrder(format!(
                "basket payoffs on {} assets are neither Δ-monotonic nor Δ-antitonic in general",
                weights.len()
            )));
        }
        if weights.len() != 2 {
            return Err(invalid("basket needs two weights"));
        }
        let (a1, a2) = (weights[0], weights[1]);
        if a1 == 0.0 || a2 == 0.0 || !a1.is_finite() || !a2.is_finite() {
            return Err(invalid("basket weights must be finite and nonzero"));
        }
        if !(strike >= 0.0) {
            return Err(Error::InvalidStrike(strike));
        }
        if a1 < 0.0 && a2 < 0.0 {
            return Err(invalid("at least one basket weight must be positive"));
        }
        let tonicity = if a1 * a2 > 0.0 { Tonicity::Monotonic } else { Tonicity::NegMonotonic };
        // Mixed derivative a1*a2*delta(a1 x1 + a2 x2 - K): a line measure,
        // parameterized by x1 = t with density a1*sign(a2).
        let (lo, hi) = if a2 > 0.0 {
            (0.0, if a1 > 0.0 { strike / a1 } else { f64::INFINITY })
        } else {
            (strike / a1, f64::INFINITY)
        };
        let density = a1 * a2.signum();
        let path: PathFn = Arc::new(move |t| vec![t, ((strike - a1 * t) / a2).max(0.0)]);
        let g = GenericPayoff::new(2, tonicity, move |x| (a1 * x[0] + a2 * x[1] - strike).max(0.0))?;
        let measure = if hi > lo {
            SubsetMeasure::Curve { lo, hi, path, density: Arc::new(move |_| density) }
        } else {
            SubsetMeasure::Zero
        };
        let mut p = PayoffDescriptor::generic(g.with_measure(&[0, 1], measure)?);
        p.strike = strike;
        Ok(p)
    }

    pub fn kind(&self) -> PayoffKind {
        self.kind
    }

    pub fn strike(&self) -> f64 {
        self.strike
    }

    pub fn generic_payoff(&self) -> Option<&GenericPayoff> {
        self.generic.as_deref()
    }

    pub fn with_strike(&self, strike: f64) -> Result<Self> {
        match self.kind {
            PayoffKind::Generic => Err(invalid("generic payoffs carry no strike parameter")),
            k => PayoffDescriptor::new(k, strike),
        }
    }

    pub fn tonicity(&self) -> Tonicity {
        match &self.generic {
            Some(g) => g.tonicity,
            None => self.kind.tonicity().expect("table kinds have a tonicity"),
        }
    }

    /// Payoff value at price vector `x`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let k = self.strike;
        let max = || x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = || x.iter().copied().fold(f64::INFINITY, f64::min);
        match self.kind {
            PayoffKind::DigitalPutOnMax => (max() <= k) as u8 as f64,
            PayoffKind::DigitalCallOnMin => (min() >= k) as u8 as f64,
            PayoffKind::CallOnMin => (min() - k).max(0.0),
            PayoffKind::PutOnMin => (k - min()).max(0.0),
            PayoffKind::CallOnMax => (max() - k).max(0.0),
            PayoffKind::PutOnMax => (k - max()).max(0.0),
            PayoffKind::Generic => self.generic.as_ref().expect("generic payoff").eval(x),
        }
    }
}

impl fmt::Display for PayoffDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.name(), self.strike)
    }
}

impl FromStr for PayoffDescriptor {
    type Err = Error;
    /// Parses `kind:K`, e.g. `call-on-min:10.0`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, strike) = s
            .split_once(':')
            .ok_or_else(|| parse_err(format!("payoff {s:?} is not of the form kind:K")))?;
        let strike: f64 = strike
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("bad strike in {s:?}: {e}")))?;
        PayoffDescriptor::new(kind.parse()?, strike)
    }
}

/// Numerical settings for quasi-expectations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    /// Semi-infinite integrals stop at the marginal quantile `1 - q_trunc`.
    pub q_trunc: f64,
    /// Quantile level used once if the tail estimate exceeds tolerance.
    pub q_trunc_escalated: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            q_trunc: 1e-9,
            q_trunc_escalated: 1e-12,
            abs_tol: 1e-8,
            rel_tol: 1e-6,
            max_subdivisions: 2000,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.q_trunc > 0.0
            && self.q_trunc < 1.0
            && self.q_trunc_escalated > 0.0
            && self.q_trunc_escalated <= self.q_trunc
            && self.max_subdivisions > 0;
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid integration config {self:?}")))
        }
    }

    fn settings(&self) -> QuadSettings {
        QuadSettings { abs_tol: self.abs_tol, rel_tol: self.rel_tol, max_subdivisions: self.max_subdivisions }
    }
}

struct Ctx<'a> {
    f: &'a PayoffDescriptor,
    q: &'a DependenceFunction,
    marginals: &'a [MarginalDistribution],
    cfg: &'a IntegrationConfig,
    d: usize,
    full: u32,
}

impl<'a> Ctx<'a> {
    fn new(
        f: &'a PayoffDescriptor,
        q: &'a DependenceFunction,
        marginals: &'a [MarginalDistribution],
        cfg: &'a IntegrationConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let d = q.dim();
        if marginals.len() != d {
            return Err(invalid(format!("{} marginals for a {d}-dimensional function", marginals.len())));
        }
        if d > DEFAULT_DIM_CAP {
            return Err(Error::DimensionTooLarge { dim: d, cap: DEFAULT_DIM_CAP });
        }
        if let Some(g) = &f.generic {
            if g.dim != d {
                return Err(invalid(format!("payoff dimension {} differs from {d}", g.dim)));
            }
        }
        Ok(Ctx { f, q, marginals, cfg, d, full: (1u32 << d) - 1 })
    }

    fn cdfs(&self, x: f64) -> Vec<f64> {
        self.marginals.iter().map(|m| m.cdf(x)).collect()
    }

    /// Survival of the `mask`-margin at `(F_i(x))_i`.
    fn diag(&self, mask: u32, x: f64) -> f64 {
        self.q.margin_survival(mask, &self.cdfs(x))
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.marginals.iter().flat_map(|m| m.breakpoints()).collect();
        b.push(self.f.strike);
        b
    }

    fn top(&self, q: f64) -> f64 {
        self.marginals.iter().map(|m| m.upper_truncation(q)).fold(0.0, f64::max)
    }

    fn tail_bound(&self, top: f64) -> f64 {
        let calls: f64 = self.marginals.iter().map(|m| m.call(top)).sum();
        calls * (1u64 << (self.d - 1)) as f64
    }

    fn integrate<G: Fn(f64) -> f64>(&self, g: G, a: f64, b: f64) -> Result<Estimate> {
        let mut bad = None;
        let out = integrate(
            |x| {
                let v = g(x);
                if !v.is_finite() {
                    bad = Some(x);
                }
                v
            },
            a,
            b,
            &self.breakpoints(),
            &self.cfg.settings(),
        );
        if let Some(x) = bad {
            return Err(Error::IntegrabilityFailure(format!("integrand is not finite at x = {x}")));
        }
        if !out.estimate.value.is_finite() {
            return Err(Error::IntegrabilityFailure("integral is not finite".into()));
        }
        Ok(out.estimate)
    }

    /// `∫_a^∞ g`, truncated at the marginal upper support point with one
    /// escalation of the truncation level.
    fn integrate_to_infinity<G: Fn(f64) -> f64>(&self, g: G, a: f64) -> Result<Estimate> {
        let levels = [self.cfg.q_trunc, self.cfg.q_trunc_escalated];
        let mut last = Estimate::default();
        for (n, &q) in levels.iter().enumerate() {
            let top = self.top(q);
            let body = if top > a { self.integrate(&g, a, top)? } else { Estimate::default() };
            let tail = self.tail_bound(top.max(a));
            last = body + Estimate { value: 0.0, error: tail };
            if tail <= self.cfg.abs_tol || n + 1 == levels.len() {
                break;
            }
        }
        Ok(last)
    }

    fn f0(&self) -> f64 {
        self.f.evaluate(&vec![0.0; self.d])
    }

    /// `φ^{i} = ∫ f_i dF_i`.
    fn single(&self, i: usize) -> Result<Estimate> {
        let k = self.f.strike;
        let m = &self.marginals[i];
        let d = self.d;
        Ok(match self.f.kind {
            PayoffKind::DigitalPutOnMax => Estimate::exact(m.cdf(k)),
            // f_i(x) = f(x e_i) is constant for d >= 2 when the other prices are 0.
            PayoffKind::DigitalCallOnMin => Estimate::exact(if d >= 2 { (k <= 0.0) as u8 as f64 } else { 1.0 - m.cdf(k) }),
            PayoffKind::CallOnMin => Estimate::exact(0.0),
            PayoffKind::PutOnMin => Estimate::exact(k),
            PayoffKind::CallOnMax => Estimate::exact(m.call(k)),
            PayoffKind::PutOnMax => Estimate::exact(m.put(k)),
            PayoffKind::Generic => self.generic_single(i)?,
        })
    }

    fn generic_single(&self, i: usize) -> Result<Estimate> {
        let m = &self.marginals[i];
        let d = self.d;
        let f = |p: f64| {
            let mut x = vec![0.0; d];
            x[i] = m.quantile(p);
            self.f.evaluate(&x)
        };
        let knots: Vec<f64> = m.breakpoints().iter().map(|&x| m.cdf(x)).collect();
        let levels = [self.cfg.q_trunc, self.cfg.q_trunc_escalated];
        let mut last = Estimate::default();
        for (n, &q) in levels.iter().enumerate() {
            let out = integrate(f, 0.0, 1.0 - q, &knots, &self.cfg.settings());
            let tail = q * f(1.0 - q).abs();
            if !out.estimate.value.is_finite() || !tail.is_finite() {
                return Err(Error::IntegrabilityFailure(format!("marginal integral of asset {i} diverges")));
            }
            last = out.estimate + Estimate { value: 0.0, error: tail };
            if tail <= self.cfg.abs_tol || n + 1 == levels.len() {
                break;
            }
        }
        Ok(last)
    }

    /// `∫ Q̂_J(F_J) dμ_{f_J}` for `|J| >= 2`.
    fn measure_term(&self, mask: u32) -> Result<Estimate> {
        let k = self.f.strike;
        let n = mask.count_ones();
        let odd = n % 2 == 1;
        let full = mask == self.full;
        match self.f.kind {
            PayoffKind::DigitalPutOnMax => {
                let v = self.diag(mask, k);
                Ok(Estimate::exact(if odd { -v } else { v }))
            }
            PayoffKind::DigitalCallOnMin => {
                Ok(Estimate::exact(if full && k > 0.0 { self.diag(mask, k) } else { 0.0 }))
            }
            PayoffKind::CallOnMin if full => self.integrate_to_infinity(|x| self.diag(mask, x), k),
            PayoffKind::PutOnMin if full => Ok(self.integrate(|x| self.diag(mask, x), 0.0, k)?.scaled(-1.0)),
            PayoffKind::CallOnMin | PayoffKind::PutOnMin => Ok(Estimate::exact(0.0)),
            PayoffKind::CallOnMax => {
                let e = self.integrate_to_infinity(|x| self.diag(mask, x), k)?;
                Ok(if odd { e } else { e.scaled(-1.0) })
            }
            PayoffKind::PutOnMax => {
                let e = self.integrate(|x| self.diag(mask, x), 0.0, k)?;
                Ok(if odd { e.scaled(-1.0) } else { e })
            }
            PayoffKind::Generic => self.generic_measure_term(mask),
        }
    }

    fn generic_measure_term(&self, mask: u32) -> Result<Estimate> {
        let g = self.f.generic.as_ref().expect("generic payoff");
        let idx: Vec<usize> = (0..self.d).filter(|&i| mask >> i & 1 == 1).collect();
        let measure = g.measures.get(&mask).ok_or_else(|| {
            invalid(format!("no induced measure supplied for subset {idx:?}"))
        })?;
        let eval_at = |y: &[f64]| {
            let mut u = vec![1.0; self.d];
            for (c, &i) in idx.iter().enumerate() {
                u[i] = self.marginals[i].cdf(y[c]);
            }
            self.q.margin_survival(mask, &u)
        };
        match measure {
            SubsetMeasure::Zero => Ok(Estimate::exact(0.0)),
            SubsetMeasure::Atoms(atoms) => {
                Ok(Estimate::exact(atoms.iter().map(|(x, wgt)| wgt * eval_at(x)).sum()))
            }
            SubsetMeasure::Curve { lo, hi, path, density } => {
                let h = |t: f64| {
                    let dens = density(t);
                    if dens == 0.0 {
                        0.0
                    } else {
                        dens * eval_at(&path(t))
                    }
                };
                if hi.is_finite() {
                    self.integrate(h, *lo, *hi)
                } else {
                    self.integrate_to_infinity(h, *lo)
                }
            }
            SubsetMeasure::Density { lo, hi, density, nodes } => {
                let rule = GaussLegendre::new(*nodes);
                let mut y = vec![0.0; idx.len()];
                let v = tensor(&rule, lo, hi, 0, &mut y, &|y: &[f64]| density(y) * eval_at(y));
                if !v.is_finite() {
                    return Err(Error::IntegrabilityFailure("density integral is not finite".into()));
                }
                Ok(Estimate::exact(v))
            }
        }
    }
}

fn tensor(rule: &GaussLegendre, lo: &[f64], hi: &[f64], axis: usize, y: &mut [f64], f: &dyn Fn(&[f64]) -> f64) -> f64 {
    if axis == lo.len() {
        return f(y);
    }
    rule.integrate(lo[axis], hi[axis], |t| {
        y[axis] = t;
        tensor(rule, lo, hi, axis + 1, y, f)
    })
}

/// Quasi-expectation with an estimate of its numerical error.
///
/// Uses the expansion `π = Σ_{|J|>=2} ∫ Q̂_J(F_J) dμ_{f_J} + Σ_i φ^{i} - (d-1) f(0)`,
/// which is the closed form of the subset recursion. For the closed-form
/// families all diagonal integrals share one quadrature.
pub fn quasi_expectation_estimate(
    f: &PayoffDescriptor,
    q: &DependenceFunction,
    marginals: &[MarginalDistribution],
    cfg: &IntegrationConfig,
) -> Result<Estimate> {
    let ctx = Ctx::new(f, q, marginals, cfg)?;
    let d = ctx.d;
    let mut singles = Estimate::default();
    for i in 0..d {
        singles += ctx.single(i)?;
    }
    let base = singles + Estimate::exact(-((d - 1) as f64) * ctx.f0());
    let k = f.strike;
    let multi: Vec<u32> = (1..=ctx.full).filter(|m| m.count_ones() >= 2).collect();
    let parity = |mask: u32| if mask.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
    let rest = match f.kind {
        PayoffKind::CallOnMax => ctx.integrate_to_infinity(
            |x| {
                let u = ctx.cdfs(x);
                multi.iter().map(|&m| -parity(m) * q.margin_survival(m, &u)).sum()
            },
            k,
        )?,
        PayoffKind::PutOnMax => ctx.integrate(
            |x| {
                let u = ctx.cdfs(x);
                multi.iter().map(|&m| parity(m) * q.margin_survival(m, &u)).sum()
            },
            0.0,
            k,
        )?,
        _ => {
            let mut acc = Estimate::default();
            for &m in &multi {
                acc += ctx.measure_term(m)?;
            }
            acc
        }
    };
    Ok(base + rest)
}

/// Quasi-expectation `π_f(Q)` of payoff `f` for the dependence function `q`
/// and the given marginals.
pub fn quasi_expectation(
    f: &PayoffDescriptor,
    q: &DependenceFunction,
    marginals: &[MarginalDistribution],
    cfg: &IntegrationConfig,
) -> Result<f64> {
    quasi_expectation_estimate(f, q, marginals, cfg).map(|e| e.value)
}

/// `φ^I` by the literal recursion: singletons are marginal integrals, and for
/// `|I| >= 2`
/// `φ^I = ∫ Q̂_I(F_I) dμ_{f_I} + Σ_{∅≠J⊊I} (-1)^{|I|+1-|J|} φ^J + (-1)^{|I|+1} f(0)`.
pub fn phi_recursion(
    f: &PayoffDescriptor,
    q: &DependenceFunction,
    marginals: &[MarginalDistribution],
    indices: &[usize],
    cfg: &IntegrationConfig,
) -> Result<f64> {
    let ctx = Ctx::new(f, q, marginals, cfg)?;
    let mut mask = 0u32;
    for &i in indices {
        if i >= ctx.d {
            return Err(invalid(format!("index {i} out of range")));
        }
        mask |= 1 << i;
    }
    if mask == 0 {
        return Err(invalid("index set must be nonempty"));
    }
    let f0 = ctx.f0();
    let mut memo: BTreeMap<u32, f64> = BTreeMap::new();
    // Subsets of `mask` in increasing popcount order so that every proper
    // subset is available when needed.
    let mut subs: Vec<u32> = Vec::new();
    let mut s = mask;
    loop {
        if s != 0 {
            subs.push(s);
        }
        if s == 0 {
            break;
        }
        s = (s - 1) & mask;
    }
    subs.sort_by_key(|m| (m.count_ones(), *m));
    for &sub in &subs {
        let n = sub.count_ones() as i32;
        let v = if n == 1 {
            ctx.single(sub.trailing_zeros() as usize)?.value
        } else {
            let mut acc = ctx.measure_term(sub)?.value;
            let mut j = (sub - 1) & sub;
            while j != 0 {
                let sign = if (n + 1 - j.count_ones() as i32) % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * memo[&j];
                j = (j - 1) & sub;
            }
            let sign = if (n + 1) % 2 == 0 { 1.0 } else { -1.0 };
            acc + sign * f0
        };
        memo.insert(sub, v);
    }
    Ok(memo[&mask])
}

/// Outcome of testing the order-monotonicity of prices on a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceReport {
    pub tonicity: Tonicity,
    /// `Q1 <= Q2` pointwise on the lattice.
    pub lower_orthant: bool,
    /// survival of `Q1` <= survival of `Q2` on the lattice.
    pub upper_orthant: bool,
    /// The hypothesis relevant for the payoff's tonicity held.
    pub hypothesis: bool,
    pub price_1: Estimate,
    pub price_2: Estimate,
    /// Prices are ordered as predicted, within the quadrature error.
    pub conclusion: bool,
}

impl DominanceReport {
    /// False only if the hypothesis held but the predicted ordering failed.
    pub fn consistent(&self) -> bool {
        !self.hypothesis || self.conclusion
    }
}

/// Lattice resolution for the order hypothesis in [`dominance_check`].
fn dominance_lattice(d: usize) -> usize {
    let mut n = 12;
    while n > 1 && (n + 1usize).checked_pow(d as u32).is_none_or(|c| c > 200_000) {
        n -= 1;
    }
    n
}

/// Checks that `Q1 ≼ Q2` in the order matching `f`'s tonicity implies
/// `π_f(Q1) <= π_f(Q2)`, or `>=` for negated tonicity.
pub fn dominance_check(
    f: &PayoffDescriptor,
    q1: &DependenceFunction,
    q2: &DependenceFunction,
    marginals: &[MarginalDistribution],
    cfg: &IntegrationConfig,
) -> Result<DominanceReport> {
    let cmp = orthant_compare(q1, q2, dominance_lattice(q1.dim()))?;
    let tonicity = f.tonicity();
    let hypothesis = match tonicity.order() {
        Order::LowerOrthant => cmp.lower_orthant,
        Order::UpperOrthant => cmp.upper_orthant,
    };
    let p1 = quasi_expectation_estimate(f, q1, marginals, cfg)?;
    let p2 = quasi_expectation_estimate(f, q2, marginals, cfg)?;
    let slack = p1.error + p2.error + cfg.abs_tol;
    let conclusion = if tonicity.reversed() { p1.value >= p2.value - slack } else { p1.value <= p2.value + slack };
    Ok(DominanceReport {
        tonicity,
        lower_orthant: cmp.lower_orthant,
        upper_orthant: cmp.upper_orthant,
        hypothesis,
        price_1: p1,
        price_2: p2,
        conclusion,
    })
}

/// Result of the finiteness test on the diagonal terms.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilityReport {
    pub finite: bool,
    /// First failing `(subset mask, asset index)`.
    pub offending: Option<(u32, usize)>,
    pub diagnostic: String,
}

/// Tests that every `∫ |f_J(x, ..., x)| dF_i(x)` is finite, where `f_J` keeps
/// the coordinates in `J` and sets the others to zero. Each integral is
/// computed at both truncation levels; a non-finite value or a large jump
/// between them counts as divergence.
pub fn check_integrability(
    f: &PayoffDescriptor,
    marginals: &[MarginalDistribution],
    cfg: &IntegrationConfig,
) -> IntegrabilityReport {
    let d = marginals.len();
    let fail = |mask: u32, i: usize, msg: String| IntegrabilityReport {
        finite: false,
        offending: Some((mask, i)),
        diagnostic: msg,
    };
    if !(2..=DEFAULT_DIM_CAP).contains(&d) || cfg.validate().is_err() {
        return IntegrabilityReport { finite: false, offending: None, diagnostic: "invalid configuration".into() };
    }
    if let Some(g) = f.generic_payoff() {
        if g.dim != d {
            return IntegrabilityReport { finite: false, offending: None, diagnostic: "dimension mismatch".into() };
        }
    }
    let settings = cfg.settings();
    for mask in 1u32..(1 << d) {
        for (i, m) in marginals.iter().enumerate() {
            let g = |p: f64| {
                let x = m.quantile(p);
                let y: Vec<f64> = (0..d).map(|l| if mask >> l & 1 == 1 { x } else { 0.0 }).collect();
                f.evaluate(&y).abs()
            };
            let knots: Vec<f64> = m.breakpoints().iter().map(|&x| m.cdf(x)).collect();
            let a = integrate(g, 0.0, 1.0 - cfg.q_trunc, &knots, &settings).estimate.value;
            let b = integrate(g, 0.0, 1.0 - cfg.q_trunc_escalated, &knots, &settings).estimate.value;
            let edge = g(1.0 - cfg.q_trunc_escalated);
            if !a.is_finite() || !b.is_finite() || !edge.is_finite() {
                return fail(mask, i, format!("∫|f_J| dF_{i} is not finite for subset mask {mask:#b}"));
            }
            let jump = (b - a).abs();
            if jump > 1e-3_f64.max(1e-3 * a.abs()) {
                return fail(mask, i, format!("∫|f_J| dF_{i} grows by {jump:e} past truncation for subset mask {mask:#b}"));
            }
        }
    }
    IntegrabilityReport { finite: true, offending: None, diagnostic: "all diagonal integrals finite".into() }
}
