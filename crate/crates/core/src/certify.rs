//! Certificates that an improved bound is a proper quasi-copula: a box with
//! negative volume, found inside one gap of a gap-box prescription set.

use std::fmt::Write as _;

use crate::bounds::{bound_for, BoundSide, Prescription, Scale};
use crate::error::{invalid, Result};
use crate::grid::fmt_num;
use crate::qcopula::{m, volume_raw, w, DependenceFunction, Kind, UnitBox, CMP_TOL};

/// Strict margin required on the witness inequalities.
pub const WITNESS_MARGIN: f64 = 1e-9;
/// Agreement required between realized and closed-form volumes.
pub const VOLUME_TOL: f64 = 1e-12;
/// Points per axis of the final lattice scan.
const DENSE_STEPS: usize = 96;

/// The set of points whose three distinguished coordinates avoid the open
/// gaps `(s_l, s_l + eps_l)`; all other coordinates are unrestricted.
#[derive(Debug, Clone, PartialEq)]
pub struct GapBoxSet {
    dim: usize,
    indices: [usize; 3],
    s: [f64; 3],
    eps: [f64; 3],
}

impl GapBoxSet {
    pub fn new(dim: usize, indices: [usize; 3], s: [f64; 3], eps: [f64; 3]) -> Result<Self> {
        if dim < 3 {
            return Err(invalid("gap-box sets need d >= 3"));
        }
        let [i, j, k] = indices;
        if i == j || j == k || i == k || indices.iter().any(|&x| x >= dim) {
            return Err(invalid(format!("invalid gap coordinates {indices:?}")));
        }
        for l in 0..3 {
            if !(s[l] >= 0.0) || !(eps[l] > 0.0) || s[l] + eps[l] > 1.0 + 1e-15 {
                return Err(invalid(format!("gap {l}: need s >= 0, eps > 0, s + eps <= 1")));
            }
        }
        Ok(GapBoxSet { dim, indices, s, eps })
    }

    /// Three-dimensional gap-box set.
    pub fn cube(s: [f64; 3], eps: [f64; 3]) -> Result<Self> {
        GapBoxSet::new(3, [0, 1, 2], s, eps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> [usize; 3] {
        self.indices
    }

    pub fn s(&self) -> [f64; 3] {
        self.s
    }

    pub fn eps(&self) -> [f64; 3] {
        self.eps
    }

    pub fn s_bar(&self) -> [f64; 3] {
        [0, 1, 2].map(|l| self.s[l] + self.eps[l])
    }

    /// Point with the distinguished coordinates set to `v` and all others to `fill`.
    pub fn lift(&self, v: [f64; 3], fill: f64) -> Vec<f64> {
        let mut x = vec![fill; self.dim];
        for l in 0..3 {
            x[self.indices[l]] = v[l];
        }
        x
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..3).all(|l| {
            let c = x[self.indices[l]];
            !(c > self.s[l] && c < self.s[l] + self.eps[l])
        })
    }
}

// Max (lower) or min (upper) of the penalized reference function over the
// gap-box set. The extremum over each product of intervals is attained at the
// coordinatewise clamp of `v`, so eight candidates suffice.
fn gap_bound_value(c: &DependenceFunction, gap: &GapBoxSet, side: BoundSide, v: &[f64]) -> f64 {
    let mut x = v.to_vec();
    let mut best = match side {
        BoundSide::Lower => w(v),
        BoundSide::Upper => m(v),
    };
    for combo in 0u32..8 {
        let mut pen = 0.0;
        for l in 0..3 {
            let i = gap.indices[l];
            let (a, b) = if combo >> l & 1 == 0 { (0.0, gap.s[l]) } else { (gap.s[l] + gap.eps[l], 1.0) };
            let xi = v[i].clamp(a, b);
            x[i] = xi;
            pen += match side {
                BoundSide::Lower => (xi - v[i]).max(0.0),
                BoundSide::Upper => (v[i] - xi).max(0.0),
            };
        }
        let val = c.eval(&x);
        best = match side {
            BoundSide::Lower => best.max(val - pen),
            BoundSide::Upper => best.min(val + pen),
        };
    }
    best
}

/// Improved bound when `c` is prescribed on the whole gap-box set.
pub fn gap_bound(c: &DependenceFunction, gap: &GapBoxSet, side: BoundSide) -> Result<DependenceFunction> {
    if c.dim() != gap.dim {
        return Err(invalid("reference function and gap set differ in dimension"));
    }
    let c = c.clone();
    let gap = gap.clone();
    DependenceFunction::new(gap.dim, Kind::QuasiCopula, move |v| gap_bound_value(&c, &gap, side, v))
}

/// A box on which the certified bound has negative volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub side: BoundSide,
    pub gap: GapBoxSet,
    /// Witness coordinates inside the three gaps.
    pub u: [f64; 3],
    pub witness: UnitBox,
    /// Volume of the bound over the witness box.
    pub volume: f64,
    /// Volume predicted from the reference function alone.
    pub closed_form: f64,
}

impl Certificate {
    /// CSV row `s...,eps...,u...,volume`.
    pub fn to_csv_row(&self) -> String {
        let mut fields: Vec<String> = Vec::with_capacity(10);
        fields.extend(self.gap.s.iter().map(|x| fmt_num(*x)));
        fields.extend(self.gap.eps.iter().map(|x| fmt_num(*x)));
        fields.extend(self.u.iter().map(|x| fmt_num(*x)));
        fields.push(fmt_num(self.volume));
        fields.join(",")
    }

    pub fn csv_header() -> &'static str {
        "s1,s2,s3,eps1,eps2,eps3,u1,u2,u3,volume"
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", Certificate::csv_header());
        let _ = writeln!(s, "{}", self.to_csv_row());
        s
    }
}

/// Mass of the reference function between the lifted gap corners.
fn gap_mass(c: &DependenceFunction, gap: &GapBoxSet) -> (f64, f64, f64) {
    let lo = c.eval(&gap.lift(gap.s, 1.0));
    let hi = c.eval(&gap.lift(gap.s_bar(), 1.0));
    (lo, hi, hi - lo)
}

/// Whether the sufficient conditions for a negative-volume box hold.
pub fn conditions_hold(c: &DependenceFunction, gap: &GapBoxSet, side: BoundSide) -> bool {
    let (c_lo, c_hi, mass) = gap_mass(c, gap);
    let total: f64 = gap.eps.iter().sum();
    if !(total > mass && mass > 0.0) {
        return false;
    }
    match side {
        BoundSide::Lower => c_lo >= w(&gap.lift(gap.s_bar(), 1.0)) - CMP_TOL,
        BoundSide::Upper => c_hi <= m(&gap.lift(gap.s, 1.0)) + CMP_TOL,
    }
}

/// Offsets into the gaps: `s_bar - u` for the lower side, `u - s` for the
/// upper side.
fn offsets_ok(a: [f64; 3], eps: [f64; 3], mass: f64) -> bool {
    let interior = (0..3).all(|l| a[l] > 0.0 && a[l] < eps[l]);
    let total = a[0] + a[1] + a[2];
    let pairs = [a[0] + a[1], a[0] + a[2], a[1] + a[2]];
    interior && total - mass > WITNESS_MARGIN && pairs.iter().all(|p| mass - p > WITNESS_MARGIN)
}

struct Search<'a> {
    gap: &'a GapBoxSet,
    side: BoundSide,
    mass: f64,
    target: &'a dyn Fn(&[f64], &[f64]) -> f64,
    /// Reference values at the eight gap corners; bit `l` of the index
    /// selects `s_bar_l` over `s_l`.
    corners: [f64; 8],
}

fn corner_values(c: &DependenceFunction, gap: &GapBoxSet) -> [f64; 8] {
    let (s, s_bar) = (gap.s, gap.s_bar());
    std::array::from_fn(|mask| {
        let v = [0, 1, 2].map(|l| if mask >> l & 1 == 1 { s_bar[l] } else { s[l] });
        c.eval(&gap.lift(v, 1.0))
    })
}

impl<'a> Search<'a> {
    fn new(
        reference: &DependenceFunction,
        gap: &'a GapBoxSet,
        side: BoundSide,
        target: &'a dyn Fn(&[f64], &[f64]) -> f64,
    ) -> Self {
        let corners = corner_values(reference, gap);
        Search { gap, side, mass: corners[7] - corners[0], target, corners }
    }

    // Gap bound at a lifted point whose gap coordinates lie in the closed
    // gaps, computed from the cached corner values.
    fn predicted_value(&self, v: [f64; 3]) -> f64 {
        let (s, s_bar) = (self.gap.s, self.gap.s_bar());
        let mut best = match self.side {
            BoundSide::Lower => (v[0] + v[1] + v[2] - 2.0).max(0.0),
            BoundSide::Upper => v[0].min(v[1]).min(v[2]),
        };
        for (combo, &c) in self.corners.iter().enumerate() {
            let mut pen = 0.0;
            for l in 0..3 {
                let x = if combo >> l & 1 == 1 { s_bar[l] } else { s[l] };
                pen += match self.side {
                    BoundSide::Lower => (x - v[l]).max(0.0),
                    BoundSide::Upper => (v[l] - x).max(0.0),
                };
            }
            best = match self.side {
                BoundSide::Lower => best.max(c - pen),
                BoundSide::Upper => best.min(c + pen),
            };
        }
        best
    }

    fn predicted_volume(&self, lo: [f64; 3], hi: [f64; 3]) -> f64 {
        (0..8)
            .map(|mask: usize| {
                let v = [0, 1, 2].map(|l| if mask >> l & 1 == 1 { hi[l] } else { lo[l] });
                let sign = if (3 - mask.count_ones()).is_multiple_of(2) { 1.0 } else { -1.0 };
                sign * self.predicted_value(v)
            })
            .sum()
    }

    fn witness(&self, a: [f64; 3]) -> Option<Certificate> {
        let gap = self.gap;
        if !offsets_ok(a, gap.eps, self.mass) {
            return None;
        }
        let s_bar = gap.s_bar();
        let (u, lo3, hi3) = match self.side {
            BoundSide::Lower => {
                let u = [0, 1, 2].map(|l| s_bar[l] - a[l]);
                (u, u, s_bar)
            }
            BoundSide::Upper => {
                let u = [0, 1, 2].map(|l| gap.s[l] + a[l]);
                (u, gap.s, u)
            }
        };
        let closed_form = self.mass - (a[0] + a[1] + a[2]);
        let predicted = self.predicted_volume(lo3, hi3);
        if !(predicted < 0.0) || (predicted - closed_form).abs() > VOLUME_TOL {
            return None;
        }
        let lo = gap.lift(lo3, 0.0);
        let hi = gap.lift(hi3, 1.0);
        let volume = (self.target)(&lo, &hi);
        if !(volume < 0.0) || (volume - closed_form).abs() > VOLUME_TOL {
            return None;
        }
        let witness = UnitBox::from_slices(&lo, &hi).ok()?;
        Some(Certificate { side: self.side, gap: gap.clone(), u, witness, volume, closed_form })
    }

    fn at_fraction(&self, tau: f64) -> Option<Certificate> {
        self.witness(self.gap.eps.map(|e| tau * e))
    }

    /// Diagonal candidates `u = s + t * eps` on decimal grids of increasing
    /// resolution, nearest to the center of the admissible interval first;
    /// then a coarse and a dense lattice scan of the gap box.
    fn run(&self) -> Option<Certificate> {
        let eps = self.gap.eps;
        let total: f64 = eps.iter().sum();
        let max_pair = (eps[0] + eps[1]).max(eps[0] + eps[2]).max(eps[1] + eps[2]);
        // Fraction tau of each gap taken by the witness box.
        let lo = self.mass / total;
        let hi = (self.mass / max_pair).min(1.0);
        if lo < hi {
            let center = 0.5 * (lo + hi);
            for digits in 1..=6 {
                let scale = 10f64.powi(digits);
                let first = (lo * scale).floor() as i64;
                let last = (hi * scale).ceil() as i64;
                let mut cands: Vec<i64> = (first..=last).collect();
                cands.sort_by(|x, y| {
                    let dx = (*x as f64 / scale - center).abs();
                    let dy = (*y as f64 / scale - center).abs();
                    dx.total_cmp(&dy).then(x.cmp(y))
                });
                for k in cands.into_iter().take(400) {
                    let tau = k as f64 / scale;
                    // t = 1 - tau on the lower side, t = tau on the upper side.
                    if let Some(c) = self.at_fraction(tau) {
                        return Some(c);
                    }
                }
            }
        }
        [17, DENSE_STEPS].into_iter().find_map(|steps| self.lattice(steps))
    }

    fn lattice(&self, steps: usize) -> Option<Certificate> {
        let eps = self.gap.eps;
        let f = |n: usize, l: usize| eps[l] * n as f64 / (steps + 1) as f64;
        for i in 1..=steps {
            for j in 1..=steps {
                for k in 1..=steps {
                    if let Some(c) = self.witness([f(i, 0), f(j, 1), f(k, 2)]) {
                        return Some(c);
                    }
                }
            }
        }
        None
    }
}

/// Certifies that the bound obtained by prescribing `c` on the gap-box set is
/// a proper quasi-copula. Returns `None` when the sufficient conditions fail
/// or no witness box reproducing the closed-form volume is found.
pub fn certify_gap(c: &DependenceFunction, gap: &GapBoxSet, side: BoundSide) -> Result<Option<Certificate>> {
    let bound = gap_bound(c, gap, side)?;
    if !conditions_hold(c, gap, side) {
        return Ok(None);
    }
    let target = |lo: &[f64], hi: &[f64]| volume_raw(&bound, lo, hi);
    Ok(Search::new(c, gap, side, &target).run())
}

/// Certifies a finite copula-scale prescription through an enclosing gap-box
/// set: every prescription point must avoid the gaps. The prescription's own
/// bound serves as the reference function, and witness volumes are measured
/// on that bound.
pub fn certify_prescription(p: &Prescription, gap: &GapBoxSet, side: BoundSide) -> Result<Option<Certificate>> {
    if p.scale() != Scale::Copula {
        return Err(invalid("certification expects a copula-scale prescription"));
    }
    if p.dim() != gap.dim {
        return Err(invalid("prescription and gap set differ in dimension"));
    }
    if let Some((x, _)) = p.iter().find(|(x, _)| !gap.contains(x)) {
        return Err(invalid(format!("prescription point {x:?} lies inside a gap")));
    }
    let bound = bound_for(p, side)?;
    if !conditions_hold(&bound, gap, side) {
        return Ok(None);
    }
    let target = |lo: &[f64], hi: &[f64]| volume_raw(&bound, lo, hi);
    Ok(Search::new(&bound, gap, side, &target).run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcopula::box_volume;

    fn half_cube() -> Prescription {
        Prescription::new(3, Scale::Copula, vec![(vec![0.5; 3], 0.125)]).unwrap()
    }

    #[test]
    fn single_point_witness() {
        let gap = GapBoxSet::cube([0.4; 3], [0.1; 3]).unwrap();
        let c = certify_prescription(&half_cube(), &gap, BoundSide::Lower).unwrap().unwrap();
        for l in 0..3 {
            assert!((c.u[l] - 0.45).abs() < 1e-15);
        }
        assert!((c.volume + 0.025).abs() < 1e-12);
        let lo = crate::bounds::lower_bound_subset(&half_cube()).unwrap();
        assert!((box_volume(&lo, &c.witness).unwrap() + 0.025).abs() < 1e-12);
    }

    #[test]
    fn diagonal_track_witness() {
        let pts: Vec<(Vec<f64>, f64)> = (0..=20)
            .map(|k| k as f64 / 20.0)
            .filter(|&x| !(x > 0.5 + 1e-12 && x < 0.6 - 1e-12))
            .map(|x| (vec![x; 3], x * x * x))
            .collect();
        let p = Prescription::new(3, Scale::Copula, pts).unwrap();
        let gap = GapBoxSet::cube([0.5; 3], [0.1; 3]).unwrap();
        let c = certify_prescription(&p, &gap, BoundSide::Lower).unwrap().unwrap();
        assert!((c.u[0] - 0.56).abs() < 1e-12);
        assert!((c.volume + 0.029).abs() < 1e-12);
    }

    #[test]
    fn independence_gap_certificates() {
        let pi = DependenceFunction::independence(3).unwrap();
        let gap = GapBoxSet::cube([0.5; 3], [0.1; 3]).unwrap();
        let c = certify_gap(&pi, &gap, BoundSide::Lower).unwrap().unwrap();
        assert!(c.volume < 0.0);
        assert!((c.volume - c.closed_form).abs() < 1e-12);
    }

    #[test]
    fn full_mass_gap_gives_none() {
        // Comonotone reference over a full-width gap: mass equals the gap sum
        // only when all eps coincide with the mass, so use W-like linear mass.
        let lin = DependenceFunction::new(3, Kind::Unverified, |u| u.iter().sum::<f64>() - 2.0).unwrap();
        let gap = GapBoxSet::cube([0.8; 3], [0.2; 3]).unwrap();
        assert!(!conditions_hold(&lin, &gap, BoundSide::Lower));
        assert!(certify_gap(&lin, &gap, BoundSide::Lower).unwrap().is_none());
    }

    #[test]
    fn rejects_points_in_gap() {
        let gap = GapBoxSet::cube([0.45; 3], [0.1; 3]).unwrap();
        assert!(certify_prescription(&half_cube(), &gap, BoundSide::Lower).is_err());
    }

    #[test]
    fn lifted_gap_in_four_dimensions() {
        let pi = DependenceFunction::independence(4).unwrap();
        let gap = GapBoxSet::new(4, [0, 2, 3], [0.5; 3], [0.1; 3]).unwrap();
        if let Some(c) = certify_gap(&pi, &gap, BoundSide::Lower).unwrap() {
            assert!(c.volume < 0.0);
            assert_eq!(c.witness.lower().coords()[1], 0.0);
            assert_eq!(c.witness.upper().coords()[1], 1.0);
        }
    }

    #[test]
    fn csv_row_layout() {
        let gap = GapBoxSet::cube([0.4; 3], [0.1; 3]).unwrap();
        let c = certify_prescription(&half_cube(), &gap, BoundSide::Lower).unwrap().unwrap();
        assert_eq!(c.to_csv_row(), "0.4,0.4,0.4,0.1,0.1,0.1,0.45,0.45,0.45,-0.025");
    }
}
