//! Improved Fréchet–Hoeffding bounds under partial dependence information:
//! values prescribed on a finite point set, a prescribed value of a monotone
//! functional, or bounds on lower-dimensional margins.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{invalid, parse_err, Error, Result};
use crate::grid::fmt_num;
use crate::qcopula::{
    lattice_node, lattice_size, m, m_reflected, w, w_reflected, DependenceFunction, Kind, Point,
    CMP_TOL,
};

/// Whether prescribed values are copula values or survival values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scale {
    Copula,
    Survival,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Copula => "copula",
            Scale::Survival => "survival",
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "copula" | "copula-scale" => Ok(Scale::Copula),
            "survival" | "survival-scale" => Ok(Scale::Survival),
            other => Err(parse_err(format!("unknown side {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// Known values of a (quasi-)copula or of a survival function on a finite
/// point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Prescription {
    dim: usize,
    scale: Scale,
    coords: Vec<f64>,
    values: Vec<f64>,
}

impl Prescription {
    pub fn empty(dim: usize, scale: Scale) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(format!("dimension {dim} < 2")));
        }
        Ok(Prescription { dim, scale, coords: Vec::new(), values: Vec::new() })
    }

    /// Validates every pair against the Fréchet–Hoeffding envelope of its
    /// scale, with absolute tolerance 1e-12.
    pub fn new(dim: usize, scale: Scale, points: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let mut p = Prescription::empty(dim, scale)?;
        for (x, v) in points {
            p.push(x, v)?;
        }
        Ok(p)
    }

    /// Like [`Prescription::new`] but clips out-of-envelope values onto the
    /// envelope instead of rejecting them.
    pub fn new_clipped(dim: usize, scale: Scale, points: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let mut p = Prescription::empty(dim, scale)?;
        for (x, v) in points {
            p.check_coords(&x)?;
            let (lo, hi) = p.envelope(&x);
            p.push(x, v.clamp(lo, hi))?;
        }
        Ok(p)
    }

    fn check_coords(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::InvalidPrescription(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.dim
            )));
        }
        if x.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidPrescription(format!("point {x:?} outside the unit cube")));
        }
        Ok(())
    }

    /// Envelope `[W, M]` for a value at `x` on this prescription's scale.
    pub fn envelope(&self, x: &[f64]) -> (f64, f64) {
        match self.scale {
            Scale::Copula => (w(x), m(x)),
            Scale::Survival => (w_reflected(x), m_reflected(x)),
        }
    }

    pub fn push(&mut self, x: Vec<f64>, value: f64) -> Result<()> {
        self.check_coords(&x)?;
        if !value.is_finite() {
            return Err(Error::InvalidPrescription(format!("non-finite value at {x:?}")));
        }
        let (lo, hi) = self.envelope(&x);
        if value < lo - CMP_TOL || value > hi + CMP_TOL {
            return Err(Error::InvalidPrescription(format!(
                "value {value} at {x:?} outside the envelope [{lo}, {hi}]"
            )));
        }
        for k in 0..self.len() {
            if self.point(k) == x.as_slice() {
                if (self.values[k] - value).abs() > CMP_TOL {
                    return Err(Error::InvalidPrescription(format!(
                        "conflicting values {} and {value} at {x:?}",
                        self.values[k]
                    )));
                }
                return Ok(());
            }
        }
        self.coords.extend_from_slice(&x);
        self.values.push(value);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        (0..self.len()).map(move |k| (self.point(k), self.values[k]))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("d,side\n");
        let _ = writeln!(s, "{},{}", self.dim, self.scale.name());
        for (x, v) in self.iter() {
            let row: Vec<String> = x.iter().chain(std::iter::once(&v)).map(|c| fmt_num(*c)).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    /// Parses the `d,side` CSV format; out-of-envelope values are an
    /// [`Error::InvalidPrescription`], malformed text an [`Error::Parse`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut head = lines.next().ok_or_else(|| parse_err("empty prescription file"))?;
        if head.replace(' ', "").eq_ignore_ascii_case("d,side") {
            head = lines.next().ok_or_else(|| parse_err("missing prescription header values"))?;
        }
        let mut parts = head.split(',');
        let dim: usize = parts
            .next()
            .map(str::trim)
            .ok_or_else(|| parse_err("missing dimension"))?
            .parse()
            .map_err(|e| parse_err(format!("bad dimension: {e}")))?;
        let scale: Scale = parts.next().ok_or_else(|| parse_err("missing side"))?.parse()?;
        if parts.next().is_some() {
            return Err(parse_err("header must be `d,side`"));
        }
        if dim < 2 {
            return Err(parse_err(format!("dimension {dim} < 2")));
        }
        let mut points = Vec::new();
        for line in lines {
            let nums = parse_row(line)?;
            if nums.len() != dim + 1 {
                return Err(parse_err(format!("row {line:?} has {} fields, expected {}", nums.len(), dim + 1)));
            }
            points.push((nums[..dim].to_vec(), nums[dim]));
        }
        Prescription::new(dim, scale, points)
    }
}

pub(crate) fn parse_row(line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|e| parse_err(format!("bad number {t:?}: {e}")))
        })
        .collect()
}

#[derive(Debug, Clone)]
struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    values: Vec<f64>,
}

impl PointSet {
    fn lower(&self, u: &[f64]) -> f64 {
        let mut best = w(u);
        for (x, v) in self.coords.chunks_exact(self.dim).zip(&self.values) {
            let pen: f64 = x.iter().zip(u).map(|(a, b)| (a - b).max(0.0)).sum();
            best = best.max(v - pen);
        }
        best
    }

    fn upper(&self, u: &[f64]) -> f64 {
        let mut best = m(u);
        for (x, v) in self.coords.chunks_exact(self.dim).zip(&self.values) {
            let pen: f64 = x.iter().zip(u).map(|(a, b)| (b - a).max(0.0)).sum();
            best = best.min(v + pen);
        }
        best
    }
}

fn point_set(p: &Prescription, reflect: bool) -> PointSet {
    let coords = if reflect { p.coords.iter().map(|x| 1.0 - x).collect() } else { p.coords.clone() };
    PointSet { dim: p.dim, coords, values: p.values.clone() }
}

fn require_scale(p: &Prescription, scale: Scale) -> Result<()> {
    if p.scale != scale {
        return Err(invalid(format!(
            "expected a {}-scale prescription, got {}-scale",
            scale.name(),
            p.scale.name()
        )));
    }
    Ok(())
}

/// Pointwise greatest lower bound over quasi-copulas matching `p`;
/// plain `W_d` for an empty prescription.
pub fn lower_bound_subset(p: &Prescription) -> Result<DependenceFunction> {
    require_scale(p, Scale::Copula)?;
    let ps = point_set(p, false);
    DependenceFunction::new(p.dim, Kind::QuasiCopula, move |u| ps.lower(u))
}

/// Pointwise least upper bound over quasi-copulas matching `p`;
/// plain `M_d` for an empty prescription.
pub fn upper_bound_subset(p: &Prescription) -> Result<DependenceFunction> {
    require_scale(p, Scale::Copula)?;
    let ps = point_set(p, false);
    DependenceFunction::new(p.dim, Kind::QuasiCopula, move |u| ps.upper(u))
}

/// Bound on survival functions matching a survival-scale prescription:
/// the copula-scale bound for the reflected points, evaluated at `1 - u`.
pub fn survival_bound_subset(p: &Prescription, side: BoundSide) -> Result<DependenceFunction> {
    require_scale(p, Scale::Survival)?;
    let ps = point_set(p, true);
    let f = move |u: &[f64]| {
        let r: Vec<f64> = u.iter().map(|x| 1.0 - x).collect();
        match side {
            BoundSide::Lower => ps.lower(&r),
            BoundSide::Upper => ps.upper(&r),
        }
    };
    DependenceFunction::new(p.dim, Kind::QuasiSurvival, f)
}

/// Bound for a prescription of its own scale: copula-scale prescriptions
/// give quasi-copulas, survival-scale ones give quasi-survival functions.
pub fn bound_for(p: &Prescription, side: BoundSide) -> Result<DependenceFunction> {
    match (p.scale, side) {
        (Scale::Copula, BoundSide::Lower) => lower_bound_subset(p),
        (Scale::Copula, BoundSide::Upper) => upper_bound_subset(p),
        (Scale::Survival, s) => survival_bound_subset(p, s),
    }
}

pub type Functional = Arc<dyn Fn(&DependenceFunction) -> f64 + Send + Sync>;

/// Bisection tolerance in the prescribed-value variable.
pub const FUNCTIONAL_TOL: f64 = 1e-10;
/// Bisection iteration cap.
pub const FUNCTIONAL_MAX_ITER: usize = 200;

/// A prescribed value `theta` of a functional `rho` that is increasing in the
/// lower orthant order (upper orthant order for the survival scale) and
/// continuous under pointwise convergence.
#[derive(Clone)]
pub struct FunctionalPrescription {
    dim: usize,
    scale: Scale,
    rho: Functional,
    theta: f64,
    range: (f64, f64),
}

impl std::fmt::Debug for FunctionalPrescription {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionalPrescription")
            .field("dim", &self.dim)
            .field("scale", &self.scale)
            .field("theta", &self.theta)
            .field("range", &self.range)
            .finish_non_exhaustive()
    }
}

impl FunctionalPrescription {
    /// Checks `rho(W) <= theta <= rho(M)` against the envelope of `scale`.
    pub fn new<F>(dim: usize, scale: Scale, rho: F, theta: f64) -> Result<Self>
    where
        F: Fn(&DependenceFunction) -> f64 + Send + Sync + 'static,
    {
        let (lo_fn, hi_fn) = match scale {
            Scale::Copula => (DependenceFunction::lower_frechet(dim)?, DependenceFunction::upper_frechet(dim)?),
            Scale::Survival => (
                DependenceFunction::survival_lower_frechet(dim)?,
                DependenceFunction::survival_upper_frechet(dim)?,
            ),
        };
        let lo = rho(&lo_fn);
        let hi = rho(&hi_fn);
        if !theta.is_finite() || !(theta >= lo - CMP_TOL && theta <= hi + CMP_TOL) {
            return Err(Error::InfeasibleTarget { theta, lo, hi });
        }
        Ok(FunctionalPrescription { dim, scale, rho: Arc::new(rho), theta, range: (lo, hi) })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    /// `(rho(W), rho(M))` on this prescription's scale.
    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn rho(&self, q: &DependenceFunction) -> f64 {
        (self.rho)(q)
    }
}

fn single_point(dim: usize, scale: Scale, u: &[f64], r: f64) -> Prescription {
    Prescription { dim, scale, coords: u.to_vec(), values: vec![r] }
}

/// Smallest `r` in `[lo, hi]` with `g(r) = theta` for increasing continuous `g`.
fn smallest_root(g: &dyn Fn(f64) -> f64, theta: f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut ga, mut gb) = (g(a), g(b));
    let slack = 1e-9 * (1.0 + theta.abs());
    if ga > gb + slack {
        return Err(Error::ContractViolation("functional is not increasing along the bound family".into()));
    }
    if ga >= theta {
        return Ok(a);
    }
    let mut iter = 0;
    while b - a > FUNCTIONAL_TOL {
        iter += 1;
        if iter > FUNCTIONAL_MAX_ITER {
            return Err(Error::ContractViolation("bisection did not converge".into()));
        }
        let mid = 0.5 * (a + b);
        let gm = g(mid);
        if gm < ga - slack || gm > gb + slack {
            return Err(Error::ContractViolation("functional is not monotone along the bound family".into()));
        }
        if gm >= theta {
            b = mid;
            gb = gm;
        } else {
            a = mid;
            ga = gm;
        }
    }
    if (gb - theta).abs() > 1e-6 * (1.0 + theta.abs()) {
        return Err(Error::ContractViolation("functional is not continuous along the bound family".into()));
    }
    Ok(b)
}

/// Largest `r` in `[lo, hi]` with `h(r) = theta` for increasing continuous `h`.
fn largest_root(h: &dyn Fn(f64) -> f64, theta: f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut ha, mut hb) = (h(a), h(b));
    let slack = 1e-9 * (1.0 + theta.abs());
    if ha > hb + slack {
        return Err(Error::ContractViolation("functional is not increasing along the bound family".into()));
    }
    if hb <= theta {
        return Ok(b);
    }
    let mut iter = 0;
    while b - a > FUNCTIONAL_TOL {
        iter += 1;
        if iter > FUNCTIONAL_MAX_ITER {
            return Err(Error::ContractViolation("bisection did not converge".into()));
        }
        let mid = 0.5 * (a + b);
        let hm = h(mid);
        if hm < ha - slack || hm > hb + slack {
            return Err(Error::ContractViolation("functional is not monotone along the bound family".into()));
        }
        if hm <= theta {
            a = mid;
            ha = hm;
        } else {
            b = mid;
            hb = hm;
        }
    }
    if (ha - theta).abs() > 1e-6 * (1.0 + theta.abs()) {
        return Err(Error::ContractViolation("functional is not continuous along the bound family".into()));
    }
    Ok(a)
}

fn functional_core(fp: &FunctionalPrescription, u: &Point) -> Result<(f64, f64)> {
    let d = fp.dim;
    if u.dim() != d {
        return Err(invalid("point dimension differs from the functional prescription"));
    }
    let x = u.coords();
    let (env_lo, env_hi) = match fp.scale {
        Scale::Copula => (w(x), m(x)),
        Scale::Survival => (w_reflected(x), m_reflected(x)),
    };
    let theta = fp.theta;
    let family = |r: f64, side: BoundSide| {
        let p = single_point(d, fp.scale, x, r);
        let q = bound_for(&p, side).expect("scale matches");
        fp.rho(&q)
    };
    // Lower bound: family of upper point bounds.
    let g = |r: f64| family(r, BoundSide::Upper);
    let lower = if theta < g(env_lo) { env_lo } else { smallest_root(&g, theta, env_lo, env_hi)? };
    // Upper bound: family of lower point bounds.
    let h = |r: f64| family(r, BoundSide::Lower);
    let upper = if theta > h(env_hi) { env_hi } else { largest_root(&h, theta, env_lo, env_hi)? };
    Ok((lower, upper))
}

/// Bounds at `u` on all quasi-copulas `Q` with `rho(Q) = theta`.
pub fn functional_bounds(fp: &FunctionalPrescription, u: &Point) -> Result<(f64, f64)> {
    require_functional_scale(fp, Scale::Copula)?;
    functional_core(fp, u)
}

/// Bounds at `u` on all quasi-survival functions `S` with `rho(S) = theta`.
pub fn survival_functional_bounds(fp: &FunctionalPrescription, u: &Point) -> Result<(f64, f64)> {
    require_functional_scale(fp, Scale::Survival)?;
    functional_core(fp, u)
}

fn require_functional_scale(fp: &FunctionalPrescription, scale: Scale) -> Result<()> {
    if fp.scale != scale {
        return Err(invalid(format!("expected a {}-scale functional prescription", scale.name())));
    }
    Ok(())
}

/// Bounds on one lower-dimensional margin, indexed by `indices` (0-based).
#[derive(Debug, Clone)]
pub struct MarginBlock {
    pub indices: Vec<usize>,
    pub lower: DependenceFunction,
    pub upper: DependenceFunction,
}

/// Bounds on several margins whose index sets share at most one coordinate.
#[derive(Debug, Clone)]
pub struct MarginalPrescription {
    dim: usize,
    blocks: Vec<MarginBlock>,
}

impl MarginalPrescription {
    pub fn new(dim: usize, blocks: Vec<MarginBlock>) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(format!("dimension {dim} < 2")));
        }
        for (j, b) in blocks.iter().enumerate() {
            let k = b.indices.len();
            if k < 2 {
                return Err(Error::InvalidPrescription(format!("block {j} has fewer than two indices")));
            }
            let mut sorted = b.indices.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != k || sorted.iter().any(|&i| i >= dim) {
                return Err(Error::InvalidPrescription(format!("block {j} has invalid indices {:?}", b.indices)));
            }
            if b.lower.dim() != k || b.upper.dim() != k {
                return Err(Error::InvalidPrescription(format!("block {j} bound dimensions differ from |I| = {k}")));
            }
            for (i, other) in blocks.iter().enumerate().take(j) {
                let shared = b.indices.iter().filter(|x| other.indices.contains(x)).count();
                if shared >= 2 {
                    return Err(Error::InvalidPrescription(format!(
                        "blocks {i} and {j} share {shared} indices; at most one is allowed"
                    )));
                }
            }
            check_ordered(&b.lower, &b.upper)
                .map_err(|msg| Error::InvalidPrescription(format!("block {j}: {msg}")))?;
        }
        Ok(MarginalPrescription { dim, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[MarginBlock] {
        &self.blocks
    }
}

fn check_ordered(lo: &DependenceFunction, hi: &DependenceFunction) -> std::result::Result<(), String> {
    let k = lo.dim();
    let mut n = 1;
    while lattice_size(k, n + 1).is_some_and(|c| c <= 4096) {
        n += 1;
    }
    let count = lattice_size(k, n).unwrap_or(0);
    let mut u = vec![0.0; k];
    for idx in 0..count {
        lattice_node(k, n, idx, &mut u);
        if lo.eval(&u) > hi.eval(&u) + CMP_TOL {
            return Err(format!("lower bound exceeds upper bound at {u:?}"));
        }
    }
    Ok(())
}

fn project(u: &[f64], idx: &[usize], buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend(idx.iter().map(|&i| u[i]));
}

fn marginal_lower(blocks: &[MarginBlock], u: &[f64]) -> f64 {
    let mut best = w(u);
    let total_deficit: f64 = u.iter().map(|x| x - 1.0).sum();
    let mut buf = Vec::new();
    for b in blocks {
        project(u, &b.indices, &mut buf);
        let inside: f64 = buf.iter().map(|x| x - 1.0).sum();
        best = best.max(b.lower.eval(&buf) + total_deficit - inside);
    }
    best
}

fn marginal_upper(blocks: &[MarginBlock], u: &[f64]) -> f64 {
    let mut best = m(u);
    let mut buf = Vec::new();
    for b in blocks {
        project(u, &b.indices, &mut buf);
        best = best.min(b.upper.eval(&buf));
    }
    best
}

/// Bounds on quasi-copulas whose margins respect the prescribed block bounds.
pub fn marginal_bounds(mp: &MarginalPrescription) -> Result<(DependenceFunction, DependenceFunction)> {
    let lo_blocks = Arc::new(mp.blocks.clone());
    let hi_blocks = lo_blocks.clone();
    let lower = DependenceFunction::new(mp.dim, Kind::QuasiCopula, move |u| marginal_lower(&lo_blocks, u))?;
    let upper = DependenceFunction::new(mp.dim, Kind::QuasiCopula, move |u| marginal_upper(&hi_blocks, u))?;
    Ok((lower, upper))
}

/// Survival-scale analogue: the block bounds constrain the margins of the
/// survival copula, and the bounds are the copula-scale bounds at `1 - u`.
pub fn survival_marginal_bounds(mp: &MarginalPrescription) -> Result<(DependenceFunction, DependenceFunction)> {
    let lo_blocks = Arc::new(mp.blocks.clone());
    let hi_blocks = lo_blocks.clone();
    let reflect = |u: &[f64]| u.iter().map(|x| 1.0 - x).collect::<Vec<f64>>();
    let lower = DependenceFunction::new(mp.dim, Kind::QuasiSurvival, move |u| marginal_lower(&lo_blocks, &reflect(u)))?;
    let upper = DependenceFunction::new(mp.dim, Kind::QuasiSurvival, move |u| marginal_upper(&hi_blocks, &reflect(u)))?;
    Ok((lower, upper))
}
