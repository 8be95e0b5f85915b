//! Lattice samples of dependence functions and grid-based property checks.
//!
//! A passing report is evidence on the lattice only, not a proof for the
//! underlying function.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{invalid, parse_err, Error, Result};
use crate::qcopula::{lattice_node, lattice_size, sign, DependenceFunction, CMP_TOL};

/// Largest dimension accepted by [`check_d_increasing`].
pub const MAX_QC4_DIM: usize = 6;
/// Largest cell count accepted by [`check_d_increasing`].
pub const MAX_QC4_CELLS: usize = 20_000_000;

/// Values on `{0, 1/n, ..., 1}^d`, stored in row-major lexicographic order of
/// the lattice indices (last axis varies fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    dim: usize,
    n: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(dim: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if dim < 2 || n == 0 {
            return Err(invalid("grid needs d >= 2 and n >= 1"));
        }
        let count = lattice_size(dim, n).ok_or_else(|| invalid("grid too large"))?;
        if values.len() != count {
            return Err(invalid(format!("expected {count} values, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid values must be finite"));
        }
        Ok(GridFunction { dim, n, values })
    }

    /// Samples `q` on the lattice of resolution `n`.
    pub fn sample(q: &DependenceFunction, n: usize) -> Result<Self> {
        let d = q.dim();
        let count = lattice_size(d, n)
            .filter(|&c| c <= 200_000_000)
            .ok_or_else(|| invalid("grid too large"))?;
        let values = (0..count)
            .into_par_iter()
            .map_init(|| vec![0.0; d], |u, idx| {
                lattice_node(d, n, idx, u);
                q.eval(u)
            })
            .collect();
        GridFunction::new(d, n, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * (self.n + 1) + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.index(idx)]
    }

    fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for i in (0..self.dim).rev() {
            out[i] = flat % (self.n + 1);
            flat /= self.n + 1;
        }
        out
    }

    fn location(&self, idx: &[usize]) -> String {
        let n = self.n as f64;
        idx.iter().map(|&i| fmt_num(i as f64 / n)).collect::<Vec<_>>().join(";")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("dim,n\n");
        let _ = writeln!(s, "{},{}", self.dim, self.n);
        for v in &self.values {
            let _ = writeln!(s, "{v:e}");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut head = lines.next().ok_or_else(|| parse_err("empty grid file"))?;
        if head.eq_ignore_ascii_case("dim,n") {
            head = lines.next().ok_or_else(|| parse_err("missing grid header values"))?;
        }
        let mut parts = head.split(',');
        let dim = parse_usize(parts.next())?;
        let n = parse_usize(parts.next())?;
        let values = lines
            .map(|l| l.parse::<f64>().map_err(|e| parse_err(format!("bad value {l:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(dim, n, values)
    }
}

fn parse_usize(s: Option<&str>) -> Result<usize> {
    let s = s.ok_or_else(|| parse_err("missing integer"))?.trim();
    s.parse().map_err(|e| parse_err(format!("bad integer {s:?}: {e}")))
}

pub(crate) fn fmt_num(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Which grid condition a violation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Check {
    Grounded,
    Margin,
    Monotone,
    Lipschitz,
    DIncreasing,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Grounded => "qc1-grounded",
            Check::Margin => "qc1-margin",
            Check::Monotone => "qc2-monotone",
            Check::Lipschitz => "qc3-lipschitz",
            Check::DIncreasing => "qc4-d-increasing",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub check: Check,
    /// Lattice node `a;b;c`, or a cell/segment as `lower|upper`.
    pub location: String,
    pub magnitude: f64,
}

/// List of violated lattice instances; empty means the checks passed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropertyReport {
    pub violations: Vec<Violation>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, check: Check) -> usize {
        self.violations.iter().filter(|v| v.check == check).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,location,magnitude\n");
        for v in &self.violations {
            let _ = writeln!(s, "{},{},{:e}", v.check.name(), v.location, v.magnitude);
        }
        s
    }
}

/// Checks boundary conditions, monotonicity and the discrete Lipschitz
/// condition over adjacent lattice nodes.
pub fn check_quasi_copula(g: &GridFunction) -> PropertyReport {
    let d = g.dim;
    let n = g.n;
    let step = 1.0 / n as f64;
    let violations: Vec<Violation> = (0..g.values.len())
        .into_par_iter()
        .flat_map_iter(|flat| {
            let idx = g.multi_index(flat);
            let v = g.values[flat];
            let mut out = Vec::new();
            if idx.contains(&0) {
                if v.abs() > CMP_TOL {
                    out.push(Violation { check: Check::Grounded, location: g.location(&idx), magnitude: v.abs() });
                }
            } else {
                let off: Vec<usize> = (0..d).filter(|&i| idx[i] != n).collect();
                let want = match off.len() {
                    0 => Some(1.0),
                    1 => Some(idx[off[0]] as f64 / n as f64),
                    _ => None,
                };
                if let Some(want) = want {
                    let e = (v - want).abs();
                    if e > CMP_TOL {
                        out.push(Violation { check: Check::Margin, location: g.location(&idx), magnitude: e });
                    }
                }
            }
            for axis in 0..d {
                if idx[axis] == n {
                    continue;
                }
                let mut next = idx.clone();
                next[axis] += 1;
                let w = g.get(&next);
                let loc = || format!("{}|{}", g.location(&idx), g.location(&next));
                if w < v - CMP_TOL {
                    out.push(Violation { check: Check::Monotone, location: loc(), magnitude: v - w });
                }
                let excess = (w - v).abs() - step;
                if excess > CMP_TOL {
                    out.push(Violation { check: Check::Lipschitz, location: loc(), magnitude: excess });
                }
            }
            out
        })
        .collect();
    PropertyReport { violations }
}

/// Lists every unit lattice cell with negative volume.
pub fn check_d_increasing(g: &GridFunction) -> Result<PropertyReport> {
    let d = g.dim;
    let n = g.n;
    if d > MAX_QC4_DIM {
        return Err(Error::DimensionTooLarge { dim: d, cap: MAX_QC4_DIM });
    }
    let cells = n
        .checked_pow(d as u32)
        .filter(|&c| c <= MAX_QC4_CELLS)
        .ok_or_else(|| invalid(format!("{n}^{d} cells exceed the cap of {MAX_QC4_CELLS}")))?;
    let violations = (0..cells)
        .into_par_iter()
        .filter_map(|flat| {
            let mut lo = vec![0usize; d];
            let mut rest = flat;
            for i in (0..d).rev() {
                lo[i] = rest % n;
                rest /= n;
            }
            let mut corner = lo.clone();
            let mut vol = 0.0;
            for mask in 0u32..(1 << d) {
                for i in 0..d {
                    corner[i] = if mask >> i & 1 == 1 { lo[i] } else { lo[i] + 1 };
                }
                vol += sign(mask) * g.get(&corner);
            }
            (vol < -CMP_TOL).then(|| {
                let hi: Vec<usize> = lo.iter().map(|i| i + 1).collect();
                Violation {
                    check: Check::DIncreasing,
                    location: format!("{}|{}", g.location(&lo), g.location(&hi)),
                    magnitude: vol,
                }
            })
        })
        .collect();
    Ok(PropertyReport { violations })
}
