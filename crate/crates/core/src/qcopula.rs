//! Quasi-copula primitives: points, boxes, dependence functions, the
//! Fréchet–Hoeffding bounds, survival transforms, volumes and orthant orders.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Default cap on `d` for operations expanding over all 2^d subsets.
pub const DEFAULT_DIM_CAP: usize = 12;

/// Absolute tolerance used in all pointwise comparisons.
pub const CMP_TOL: f64 = 1e-12;

/// A point of the unit hypercube, `d >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(invalid(format!("point dimension {} < 2", coords.len())));
        }
        if let Some(c) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(invalid(format!("coordinate {c} outside [0,1]")));
        }
        Ok(Point(coords))
    }

    pub fn splat(d: usize, v: f64) -> Result<Self> {
        Point::new(vec![v; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Closed axis-aligned box `[lower, upper]` inside the unit hypercube.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitBox {
    lower: Point,
    upper: Point,
}

impl UnitBox {
    pub fn new(lower: Point, upper: Point) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(invalid("box corners differ in dimension"));
        }
        if lower.0.iter().zip(&upper.0).any(|(a, b)| a > b) {
            return Err(invalid("box lower corner exceeds upper corner"));
        }
        Ok(UnitBox { lower, upper })
    }

    pub fn from_slices(lower: &[f64], upper: &[f64]) -> Result<Self> {
        UnitBox::new(Point::new(lower.to_vec())?, Point::new(upper.to_vec())?)
    }

    pub fn cube(d: usize, a: f64, b: f64) -> Result<Self> {
        UnitBox::new(Point::splat(d, a)?, Point::splat(d, b)?)
    }

    pub fn lower(&self) -> &Point {
        &self.lower
    }

    pub fn upper(&self) -> &Point {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }
}

/// What a dependence function is known to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Copula,
    QuasiCopula,
    /// Evaluates a survival-scale object `u -> V((u, 1])`.
    QuasiSurvival,
    Unverified,
}

impl Kind {
    pub fn is_survival(self) -> bool {
        self == Kind::QuasiSurvival
    }
}

pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// An evaluable map from the unit hypercube to the reals.
#[derive(Clone)]
pub struct DependenceFunction {
    dim: usize,
    kind: Kind,
    eval: Evaluator,
}

impl fmt::Debug for DependenceFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DependenceFunction")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

impl DependenceFunction {
    pub fn new<F>(dim: usize, kind: Kind, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if dim < 2 {
            return Err(invalid(format!("dimension {dim} < 2")));
        }
        Ok(DependenceFunction { dim, kind, eval: Arc::new(f) })
    }

    pub(crate) fn from_arc(dim: usize, kind: Kind, eval: Evaluator) -> Self {
        DependenceFunction { dim, kind, eval }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn with_kind(mut self, kind: Kind) -> Self {
        self.kind = kind;
        self
    }

    /// Evaluates at `u`. The slice length must equal the dimension.
    pub fn eval(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.dim);
        (self.eval)(u)
    }

    pub fn evaluator(&self) -> Evaluator {
        self.eval.clone()
    }

    /// `W_d`, a quasi-copula (a copula only for `d = 2`).
    pub fn lower_frechet(d: usize) -> Result<Self> {
        let kind = if d == 2 { Kind::Copula } else { Kind::QuasiCopula };
        DependenceFunction::new(d, kind, w)
    }

    /// `M_d`, the comonotone copula.
    pub fn upper_frechet(d: usize) -> Result<Self> {
        DependenceFunction::new(d, Kind::Copula, m)
    }

    /// The independence copula.
    pub fn independence(d: usize) -> Result<Self> {
        DependenceFunction::new(d, Kind::Copula, |u| u.iter().product())
    }

    /// `u -> W_d(1 - u)`, the survival-scale lower envelope.
    pub fn survival_lower_frechet(d: usize) -> Result<Self> {
        DependenceFunction::new(d, Kind::QuasiSurvival, w_reflected)
    }

    /// `u -> M_d(1 - u)`, the survival-scale upper envelope.
    pub fn survival_upper_frechet(d: usize) -> Result<Self> {
        DependenceFunction::new(d, Kind::QuasiSurvival, |u| {
            u.iter().fold(1.0, |acc, &x| acc.min(1.0 - x))
        })
    }

    /// Value on the copula scale regardless of kind: survival-kind functions
    /// are converted by inclusion–exclusion.
    pub fn copula_value(&self, u: &[f64]) -> f64 {
        if !self.kind.is_survival() {
            return self.eval(u);
        }
        let d = u.len();
        let mut buf = vec![0.0; d];
        let mut acc = 0.0;
        for mask in 0u32..(1 << d) {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = if mask >> i & 1 == 1 { u[i] } else { 0.0 };
            }
            acc += sign(mask) * self.eval(&buf);
        }
        acc
    }

    /// Value on the survival scale regardless of kind.
    pub fn survival_scale_value(&self, u: &[f64]) -> f64 {
        if self.kind.is_survival() {
            self.eval(u)
        } else {
            survival_raw(self, u)
        }
    }

    /// Survival function of the margin on the index set `mask`, evaluated at
    /// the coordinates of `u` in `mask` (other coordinates are ignored).
    pub fn margin_survival(&self, mask: u32, u: &[f64]) -> f64 {
        let d = u.len();
        let mut buf = vec![0.0; d];
        if self.kind.is_survival() {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = if mask >> i & 1 == 1 { u[i] } else { 0.0 };
            }
            return self.eval(&buf);
        }
        let mut acc = 0.0;
        let mut sub = mask;
        loop {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = if sub >> i & 1 == 1 { u[i] } else { 1.0 };
            }
            acc += sign(sub) * self.eval(&buf);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & mask;
        }
        acc
    }
}

pub(crate) fn sign(mask: u32) -> f64 {
    if mask.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn w(u: &[f64]) -> f64 {
    let d = u.len() as f64;
    (u.iter().sum::<f64>() - d + 1.0).max(0.0)
}

pub(crate) fn m(u: &[f64]) -> f64 {
    u.iter().copied().fold(1.0, f64::min)
}

pub(crate) fn w_reflected(u: &[f64]) -> f64 {
    (1.0 - u.iter().sum::<f64>()).max(0.0)
}

pub(crate) fn m_reflected(u: &[f64]) -> f64 {
    u.iter().fold(1.0, |acc, &x| acc.min(1.0 - x))
}

/// Lower Fréchet–Hoeffding bound `max(0, sum(u) - d + 1)`.
pub fn frechet_lower(u: &Point) -> f64 {
    w(u.coords())
}

/// Upper Fréchet–Hoeffding bound `min(u)`.
pub fn frechet_upper(u: &Point) -> f64 {
    m(u.coords())
}

fn check_cap(d: usize, cap: usize) -> Result<()> {
    if d > cap || d > 30 {
        return Err(Error::DimensionTooLarge { dim: d, cap });
    }
    Ok(())
}

fn survival_raw(q: &DependenceFunction, u: &[f64]) -> f64 {
    q.margin_survival((1u32 << u.len()) - 1, u)
}

/// `V_Q((u, 1])` by inclusion–exclusion over the 2^d lifted points.
pub fn survival_value(q: &DependenceFunction, u: &Point) -> Result<f64> {
    survival_value_capped(q, u, DEFAULT_DIM_CAP)
}

pub fn survival_value_capped(q: &DependenceFunction, u: &Point, cap: usize) -> Result<f64> {
    check_dim(q, u.dim())?;
    check_cap(u.dim(), cap)?;
    if q.kind().is_survival() {
        return Err(invalid("survival_value expects a copula-scale function"));
    }
    Ok(survival_raw(q, u.coords()))
}

fn check_dim(q: &DependenceFunction, d: usize) -> Result<()> {
    if q.dim() != d {
        return Err(invalid(format!("dimension mismatch: function {} vs point {d}", q.dim())));
    }
    Ok(())
}

/// `Q`-volume of a box: alternating sum over its 2^d corners.
pub fn box_volume(q: &DependenceFunction, h: &UnitBox) -> Result<f64> {
    box_volume_capped(q, h, DEFAULT_DIM_CAP)
}

pub fn box_volume_capped(q: &DependenceFunction, h: &UnitBox, cap: usize) -> Result<f64> {
    let d = h.dim();
    check_dim(q, d)?;
    check_cap(d, cap)?;
    Ok(volume_raw(q, h.lower().coords(), h.upper().coords()))
}

pub(crate) fn volume_raw(q: &DependenceFunction, lo: &[f64], hi: &[f64]) -> f64 {
    let d = lo.len();
    let mut corner = vec![0.0; d];
    let mut acc = 0.0;
    for mask in 0u32..(1 << d) {
        // bit set = lower coordinate
        for i in 0..d {
            corner[i] = if mask >> i & 1 == 1 { lo[i] } else { hi[i] };
        }
        acc += sign(mask) * q.eval(&corner);
    }
    acc
}

/// `u -> Q(1 - u)`; the result is tagged unverified.
pub fn reflect(q: &DependenceFunction) -> DependenceFunction {
    let inner = q.evaluator();
    let f = move |u: &[f64]| {
        let r: Vec<f64> = u.iter().map(|x| 1.0 - x).collect();
        inner(&r)
    };
    DependenceFunction::from_arc(q.dim(), Kind::Unverified, Arc::new(f))
}

/// Outcome of comparing two functions in the orthant orders on a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrthantComparison {
    /// `Q1 <= Q2` at every node.
    pub lower_orthant: bool,
    /// survival of `Q1` <= survival of `Q2` at every node.
    pub upper_orthant: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrthantRelation {
    Both,
    LowerOrthant,
    UpperOrthant,
    Incomparable,
}

impl OrthantComparison {
    pub fn relation(&self) -> OrthantRelation {
        match (self.lower_orthant, self.upper_orthant) {
            (true, true) => OrthantRelation::Both,
            (true, false) => OrthantRelation::LowerOrthant,
            (false, true) => OrthantRelation::UpperOrthant,
            (false, false) => OrthantRelation::Incomparable,
        }
    }
}

/// Lattice `{0, 1/n, ..., 1}^d` node count, if it fits.
pub(crate) fn lattice_size(d: usize, n: usize) -> Option<usize> {
    (n + 1).checked_pow(d as u32)
}

/// Coordinates of lattice node `idx` (row-major, last axis fastest).
pub(crate) fn lattice_node(d: usize, n: usize, mut idx: usize, out: &mut [f64]) {
    for i in (0..d).rev() {
        out[i] = (idx % (n + 1)) as f64 / n as f64;
        idx /= n + 1;
    }
}

/// Compares `q1` and `q2` in the lower and upper orthant orders on the lattice
/// of resolution `n`.
pub fn orthant_compare(
    q1: &DependenceFunction,
    q2: &DependenceFunction,
    n: usize,
) -> Result<OrthantComparison> {
    if q1.dim() != q2.dim() {
        return Err(invalid("orthant_compare: dimension mismatch"));
    }
    if n == 0 {
        return Err(invalid("lattice resolution must be positive"));
    }
    let d = q1.dim();
    check_cap(d, DEFAULT_DIM_CAP)?;
    let count = lattice_size(d, n)
        .filter(|&c| c <= 50_000_000)
        .ok_or_else(|| invalid("lattice too large"))?;
    let mut u = vec![0.0; d];
    let mut out = OrthantComparison { lower_orthant: true, upper_orthant: true };
    for idx in 0..count {
        lattice_node(d, n, idx, &mut u);
        if out.lower_orthant && q1.copula_value(&u) > q2.copula_value(&u) + CMP_TOL {
            out.lower_orthant = false;
        }
        if out.upper_orthant
            && q1.survival_scale_value(&u) > q2.survival_scale_value(&u) + CMP_TOL
        {
            out.upper_orthant = false;
        }
        if !out.lower_orthant && !out.upper_orthant {
            break;
        }
    }
    Ok(out)
}
