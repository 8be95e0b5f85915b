//! Checkerboard copulas: uniform density on each cell of a regular grid.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::qcopula::{DependenceFunction, Kind};

/// Cell masses on an `m^d` grid (row-major, last axis fastest) with uniform
/// one-dimensional margins.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkerboard {
    dim: usize,
    m: usize,
    masses: Vec<f64>,
}

impl Checkerboard {
    pub fn new(dim: usize, m: usize, masses: Vec<f64>) -> Result<Self> {
        if dim < 2 || m == 0 {
            return Err(invalid("checkerboard needs d >= 2 and m >= 1"));
        }
        let cells = m.checked_pow(dim as u32).ok_or_else(|| invalid("grid too large"))?;
        if masses.len() != cells {
            return Err(invalid(format!("expected {cells} cell masses, got {}", masses.len())));
        }
        if masses.iter().any(|&p| !(p >= -1e-15)) {
            return Err(invalid("negative cell mass"));
        }
        let cb = Checkerboard { dim, m, masses };
        for axis in 0..dim {
            for (j, s) in cb.axis_sums(axis).iter().enumerate() {
                if (s - 1.0 / m as f64).abs() > 1e-12 {
                    return Err(invalid(format!("margin {axis} slice {j} has mass {s}")));
                }
            }
        }
        Ok(cb)
    }

    /// Mixture `sum_k w_k * P_k` of permutation arrays: array `k` places mass
    /// `1/m` on the cells `(j, perms[k][0][j], ..., perms[k][d-2][j])`.
    pub fn from_permutations(dim: usize, m: usize, arrays: &[(f64, Vec<Vec<usize>>)]) -> Result<Self> {
        let total: f64 = arrays.iter().map(|a| a.0).sum();
        let mut masses = vec![0.0; m.pow(dim as u32)];
        for (wgt, perms) in arrays {
            if perms.len() != dim - 1 || perms.iter().any(|p| p.len() != m) {
                return Err(invalid("permutation array shape mismatch"));
            }
            for j in 0..m {
                let mut idx = j;
                for p in perms {
                    idx = idx * m + p[j];
                }
                masses[idx] += wgt / total / m as f64;
            }
        }
        Checkerboard::new(dim, m, masses)
    }

    /// A random mixture of `k` permutation arrays.
    pub fn random<R: Rng + ?Sized>(dim: usize, m: usize, k: usize, rng: &mut R) -> Result<Self> {
        let arrays: Vec<(f64, Vec<Vec<usize>>)> = (0..k.max(1))
            .map(|_| {
                let w: f64 = rng.random_range(0.05..1.0);
                let perms = (1..dim)
                    .map(|_| {
                        let mut p: Vec<usize> = (0..m).collect();
                        p.shuffle(rng);
                        p
                    })
                    .collect();
                (w, perms)
            })
            .collect();
        Checkerboard::from_permutations(dim, m, &arrays)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Grid indices of cell number `idx`.
    pub fn cell(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for i in (0..self.dim).rev() {
            out[i] = idx % self.m;
            idx /= self.m;
        }
        out
    }

    fn axis_sums(&self, axis: usize) -> Vec<f64> {
        let mut sums = vec![0.0; self.m];
        for (idx, p) in self.masses.iter().enumerate() {
            sums[self.cell(idx)[axis]] += p;
        }
        sums
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        let m = self.m as f64;
        let factors: Vec<Vec<f64>> = u
            .iter()
            .map(|&x| (0..self.m).map(|j| (m * x - j as f64).clamp(0.0, 1.0)).collect())
            .collect();
        let mut acc = 0.0;
        for (idx, p) in self.masses.iter().enumerate() {
            if *p == 0.0 {
                continue;
            }
            let mut rest = idx;
            let mut prod = *p;
            for i in (0..self.dim).rev() {
                prod *= factors[i][rest % self.m];
                rest /= self.m;
            }
            acc += prod;
        }
        acc
    }

    pub fn to_function(&self) -> DependenceFunction {
        let cb = self.clone();
        DependenceFunction::new(self.dim, Kind::Copula, move |u| cb.eval(u))
            .expect("dimension validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcopula::{box_volume, UnitBox};
    use rand::SeedableRng;

    #[test]
    fn independence_grid_matches_product() {
        let cb = Checkerboard::new(3, 2, vec![0.125; 8]).unwrap();
        let u = [0.3, 0.7, 0.55];
        assert!((cb.eval(&u) - 0.3 * 0.7 * 0.55).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_uniform_margins() {
        assert!(Checkerboard::new(2, 2, vec![0.5, 0.0, 0.0, 0.4]).is_err());
    }

    #[test]
    fn random_is_copula_on_cells() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let cb = Checkerboard::random(3, 3, 4, &mut rng).unwrap();
        let c = cb.to_function();
        for idx in 0..27 {
            let j = cb.cell(idx);
            let lo: Vec<f64> = j.iter().map(|&k| k as f64 / 3.0).collect();
            let hi: Vec<f64> = j.iter().map(|&k| (k + 1) as f64 / 3.0).collect();
            let v = box_volume(&c, &UnitBox::from_slices(&lo, &hi).unwrap()).unwrap();
            assert!((v - cb.masses()[idx]).abs() < 1e-14);
        }
        assert!((c.eval(&[1.0, 0.4, 1.0]) - 0.4).abs() < 1e-14);
    }
}
