//! Randomized invariant suites behind `check-properties`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{lower_bound_subset, upper_bound_subset, BoundSide, Prescription, Scale};
use crate::certify::{certify_gap, conditions_hold, gap_bound, GapBoxSet, VOLUME_TOL};
use crate::checkerboard::Checkerboard;
use crate::error::{invalid, Result};
use crate::grid::{check_d_increasing, check_quasi_copula, Check, GridFunction};
use crate::marginal::{norm_cdf, MarginalDistribution};
use crate::market::{bivariate_normal_cdf, trivariate_normal_cdf, CorrelationMatrix};
use crate::payoff::{dominance_check, phi_recursion, quasi_expectation, IntegrationConfig, PayoffDescriptor, PayoffKind};
use crate::qcopula::{box_volume, DependenceFunction, Kind, CMP_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Subset,
    Qc4,
    Payoff,
    Market,
    Certify,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Subset, Suite::Qc4, Suite::Payoff, Suite::Market, Suite::Certify];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Subset => "subset",
            Suite::Qc4 => "qc4",
            Suite::Payoff => "payoff",
            Suite::Market => "market",
            Suite::Certify => "certify",
        }
    }

    pub fn parse(s: &str) -> Result<Vec<Suite>> {
        if s == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .map(|x| vec![x])
            .ok_or_else(|| invalid(format!("unknown suite {s:?}")))
    }
}

/// Deliberate defects used to confirm that the suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Adds a spike to the subset bounds that breaks the Lipschitz condition.
    Lipschitz,
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Dimension for the `qc4` suite.
    pub dim: usize,
    /// Lattice resolution for the `qc4` suite.
    pub resolution: usize,
    pub cases: usize,
    pub fault: Option<Fault>,
    pub integration: IntegrationConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 42,
            dim: 3,
            resolution: 8,
            cases: 100,
            fault: None,
            integration: IntegrationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub cases: usize,
    pub failures: Vec<String>,
    /// Extra report lines.
    pub notes: Vec<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        let status = if self.passed() { "pass" } else { "FAIL" };
        format!("{}: {status} ({} cases, {} failures)", self.suite.name(), self.cases, self.failures.len())
    }
}

/// Random copula from a mixture of permutation arrays.
pub fn random_copula<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<DependenceFunction> {
    let m = rng.random_range(2..=4);
    let k = rng.random_range(1..=3);
    Ok(Checkerboard::random(d, m, k, rng)?.to_function())
}

/// Up to `k` points with values taken from a random copula, so the
/// prescription is consistent. Some coordinates are set to 1 to hit margins.
pub fn random_prescription<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Result<(Prescription, DependenceFunction)> {
    let c = random_copula(d, rng)?;
    let mut points = Vec::with_capacity(k);
    for _ in 0..k {
        let x: Vec<f64> = (0..d)
            .map(|_| if rng.random_bool(0.15) { 1.0 } else { (rng.random::<f64>() * 1e6).round() / 1e6 })
            .collect();
        let v = c.eval(&x);
        points.push((x, v));
    }
    Ok((Prescription::new(d, Scale::Copula, points)?, c))
}

fn with_fault(q: DependenceFunction, fault: Option<Fault>) -> DependenceFunction {
    match fault {
        None => q,
        Some(Fault::Lipschitz) => {
            let inner = q.evaluator();
            DependenceFunction::new(q.dim(), Kind::Unverified, move |u| {
                let spike = u.iter().all(|&x| (x - 0.5).abs() < 0.05);
                inner(u) + if spike { 0.3 } else { 0.0 }
            })
            .expect("same dimension")
        }
    }
}

pub fn run(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (suite as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut out = SuiteOutcome { suite, cases: 0, failures: Vec::new(), notes: Vec::new() };
    match suite {
        Suite::Subset => subset_suite(cfg, &mut rng, &mut out)?,
        Suite::Qc4 => qc4_suite(cfg, &mut out)?,
        Suite::Payoff => payoff_suite(cfg, &mut rng, &mut out)?,
        Suite::Market => market_suite(cfg, &mut rng, &mut out)?,
        Suite::Certify => certify_suite(cfg, &mut rng, &mut out)?,
    }
    Ok(out)
}

fn subset_suite(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, out: &mut SuiteOutcome) -> Result<()> {
    for case in 0..cfg.cases {
        let d = rng.random_range(2..=4);
        let k = rng.random_range(1..=8);
        let (p, _) = random_prescription(d, k, rng)?;
        let lo = with_fault(lower_bound_subset(&p)?, cfg.fault);
        let hi = with_fault(upper_bound_subset(&p)?, cfg.fault);
        out.cases += 1;
        for (x, v) in p.iter() {
            let (a, b) = (lo.eval(x), hi.eval(x));
            if (a - v).abs() > CMP_TOL || (b - v).abs() > CMP_TOL {
                out.failures.push(format!("case {case}: bounds {a}, {b} differ from prescribed {v} at {x:?}"));
            }
            if a > b + CMP_TOL {
                out.failures.push(format!("case {case}: lower exceeds upper at {x:?}"));
            }
        }
        for (name, q) in [("lower", &lo), ("upper", &hi)] {
            let report = check_quasi_copula(&GridFunction::sample(q, 8)?);
            if !report.passed() {
                let first = &report.violations[0];
                out.failures.push(format!(
                    "case {case}: {name} bound fails {} at {} ({} violations)",
                    first.check.name(),
                    first.location,
                    report.violations.len()
                ));
                if report.count(Check::Lipschitz) > 0 {
                    out.notes.push(format!("case {case}: {} lipschitz violations", report.count(Check::Lipschitz)));
                }
            }
        }
    }
    Ok(())
}

fn qc4_suite(cfg: &SuiteConfig, out: &mut SuiteOutcome) -> Result<()> {
    let d = cfg.dim;
    let w = DependenceFunction::lower_frechet(d)?;
    let report = check_d_increasing(&GridFunction::sample(&w, cfg.resolution)?)?;
    let count = report.count(Check::DIncreasing);
    out.cases += 1;
    out.notes.push(format!("W_{d} on n = {}: {count} cells with negative volume", cfg.resolution));
    if let Some(v) = report.violations.first() {
        out.notes.push(format!("first: {} volume {:e}", v.location, v.magnitude));
    }
    if (count > 0) != (d >= 3) {
        out.failures.push(format!("W_{d}: expected {} violations, found {count}", if d >= 3 { "some" } else { "no" }));
    }
    let pi = DependenceFunction::independence(d)?;
    let report = check_d_increasing(&GridFunction::sample(&pi, cfg.resolution)?)?;
    out.cases += 1;
    if !report.passed() {
        out.failures.push(format!("independence copula shows {} negative cells", report.violations.len()));
    }
    Ok(())
}

fn payoff_suite(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, out: &mut SuiteOutcome) -> Result<()> {
    let marg = vec![MarginalDistribution::uniform(0.0, 1.0)?; 3];
    let icfg = IntegrationConfig { abs_tol: 1e-11, rel_tol: 1e-11, ..cfg.integration };
    let cases = (cfg.cases / 5).max(4);
    for case in 0..cases {
        let q = random_copula(3, rng)?;
        let k = rng.random_range(0.05..0.95);
        for kind in PayoffKind::TABLE {
            let f = PayoffDescriptor::new(kind, k)?;
            let a = quasi_expectation(&f, &q, &marg, &icfg)?;
            let b = phi_recursion(&f, &q, &marg, &[0, 1, 2], &icfg)?;
            out.cases += 1;
            if (a - b).abs() > 1e-9 {
                out.failures.push(format!("case {case}: {} expansion {a} vs recursion {b}", kind.name()));
            }
        }
        // nested prescriptions: more points tighten both bounds
        let (p, c) = random_prescription(3, 4, rng)?;
        let mut bigger = p.clone();
        for _ in 0..3 {
            let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let v = c.eval(&x);
            bigger.push(x, v)?;
        }
        for kind in PayoffKind::TABLE {
            let f = PayoffDescriptor::new(kind, k)?;
            let (q1, q2) = (lower_bound_subset(&p)?, lower_bound_subset(&bigger)?);
            let r = dominance_check(&f, &q1, &q2, &marg, &icfg)?;
            out.cases += 1;
            if !r.consistent() {
                out.failures.push(format!("case {case}: {} prices violate the orthant order: {r:?}", kind.name()));
            }
        }
    }
    Ok(())
}

fn market_suite(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, out: &mut SuiteOutcome) -> Result<()> {
    for case in 0..cfg.cases {
        let r: f64 = rng.random_range(-0.99..0.99);
        let (h, k): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        out.cases += 1;
        let a = bivariate_normal_cdf(h, k, r);
        if (a - bivariate_normal_cdf(k, h, r)).abs() > 1e-14 {
            out.failures.push(format!("case {case}: bivariate CDF not symmetric at {h},{k},{r}"));
        }
        if (a + bivariate_normal_cdf(h, -k, -r) - norm_cdf(h)).abs() > 1e-13 {
            out.failures.push(format!("case {case}: bivariate CDF fails the marginal identity at {h},{k},{r}"));
        }
        let orth = 0.25 + r.asin() / (2.0 * std::f64::consts::PI);
        if (bivariate_normal_cdf(0.0, 0.0, r) - orth).abs() > 1e-12 {
            out.failures.push(format!("case {case}: bivariate orthant mismatch at {r}"));
        }
    }
    for case in 0..(cfg.cases / 10).max(3) {
        let rho: f64 = rng.random_range(-0.45..0.95);
        let rm = CorrelationMatrix::equicorrelated(3, rho)?;
        let v = trivariate_normal_cdf(0.0, 0.0, 0.0, &rm)?;
        let want = 0.125 + 3.0 * rho.asin() / (4.0 * std::f64::consts::PI);
        out.cases += 1;
        if (v - want).abs() > 1e-8 {
            out.failures.push(format!("case {case}: trivariate orthant {v} vs {want} at {rho}"));
        }
    }
    Ok(())
}

/// A random reference copula, gap-box set and side.
pub fn random_gap_config<R: Rng + ?Sized>(rng: &mut R) -> Result<(DependenceFunction, GapBoxSet, BoundSide)> {
    let c = match rng.random_range(0..3) {
        0 => random_copula(3, rng)?,
        1 => DependenceFunction::independence(3)?,
        _ => {
            let a: f64 = rng.random();
            DependenceFunction::new(3, Kind::Copula, move |u| {
                a * u.iter().product::<f64>() + (1.0 - a) * u.iter().copied().fold(1.0, f64::min)
            })?
        }
    };
    let round = |x: f64| (x * 1000.0).round() / 1000.0;
    let mut s = [0.0; 3];
    let mut eps = [0.0; 3];
    let diagonal = rng.random_bool(0.5);
    let s0 = round(rng.random_range(0.05..0.85));
    let e0 = round(rng.random_range(0.02f64..0.2).min(0.99 - s0));
    for l in 0..3 {
        if diagonal {
            s[l] = s0;
            eps[l] = e0;
        } else {
            s[l] = round(rng.random_range(0.05..0.85));
            eps[l] = round(rng.random_range(0.02f64..0.2).min(0.99 - s[l]));
        }
    }
    let side = if rng.random_bool(0.5) { BoundSide::Lower } else { BoundSide::Upper };
    Ok((c, GapBoxSet::cube(s, eps)?, side))
}

fn certify_suite(cfg: &SuiteConfig, rng: &mut ChaCha8Rng, out: &mut SuiteOutcome) -> Result<()> {
    let (mut held, mut certified) = (0, 0);
    for case in 0..cfg.cases {
        let (c, gap, side) = random_gap_config(rng)?;
        out.cases += 1;
        let cert = certify_gap(&c, &gap, side)?;
        if !conditions_hold(&c, &gap, side) {
            if cert.is_some() {
                out.failures.push(format!("case {case}: certificate returned although the conditions fail"));
            }
            continue;
        }
        held += 1;
        match cert {
            None => out.failures.push(format!("case {case}: conditions hold but no witness found for {gap:?} {side:?}")),
            Some(cert) => {
                certified += 1;
                let bound = gap_bound(&c, &gap, side)?;
                let v = box_volume(&bound, &cert.witness)?;
                if !(v < 0.0) || (v - cert.closed_form).abs() > VOLUME_TOL {
                    out.failures.push(format!("case {case}: witness volume {v} vs closed form {}", cert.closed_form));
                }
            }
        }
    }
    out.notes.push(format!("{held} configurations met the conditions, {certified} certified"));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_and_fault_is_caught() {
        let cfg = SuiteConfig { cases: 10, ..Default::default() };
        for s in [Suite::Subset, Suite::Qc4, Suite::Market] {
            let o = run(s, &cfg).unwrap();
            assert!(o.passed(), "{:?}", o.failures);
        }
        let faulty = SuiteConfig { fault: Some(Fault::Lipschitz), ..cfg };
        assert!(!run(Suite::Subset, &faulty).unwrap().passed());
    }
}
