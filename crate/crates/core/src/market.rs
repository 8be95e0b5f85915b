//! Multivariate Black–Scholes market: Gaussian orthant probabilities for
//! digital quotes and a Monte Carlo benchmark pricer.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{invalid, parse_err, Error, Result};
use crate::grid::fmt_num;
use crate::marginal::{norm_cdf, norm_ppf, MarginalDistribution};
use crate::payoff::PayoffDescriptor;
use crate::quad::{gauss_legendre, integrate, QuadSettings};

/// Smallest admissible eigenvalue for the trivariate CDF.
pub const EIGEN_FLOOR: f64 = 1e-10;

/// `P(X <= h, Y <= k)` for a standard bivariate normal with correlation `rho`.
///
/// Genz's refinement of the Drezner–Wesolowsky single-integral form with
/// 6, 12 or 20 point Gauss–Legendre rules depending on `|rho|`, accurate to
/// about 1e-15.
pub fn bivariate_normal_cdf(h: f64, k: f64, rho: f64) -> f64 {
    if h.is_nan() || k.is_nan() || rho.is_nan() {
        return f64::NAN;
    }
    let rho = rho.clamp(-1.0, 1.0);
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return 0.0;
    }
    if h == f64::INFINITY {
        return norm_cdf(k);
    }
    if k == f64::INFINITY {
        return norm_cdf(h);
    }
    upper_orthant(-h, -k, rho).clamp(0.0, 1.0)
}

/// `P(X > h, Y > k)`.
fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    let n = if r.abs() < 0.3 {
        6
    } else if r.abs() < 0.75 {
        12
    } else {
        20
    };
    let (x, w) = gauss_legendre(n);
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = r.asin();
        for (xi, wi) in x.iter().zip(&w) {
            let sn = (0.5 * asr * (1.0 + xi)).sin();
            bvn += wi * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
        }
        return bvn * asr / (4.0 * PI) + norm_cdf(-h) * norm_cdf(-k);
    }
    let mut k = k;
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if r.abs() < 1.0 {
        let as_ = (1.0 - r) * (1.0 + r);
        let mut a = as_.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a
            * (-(bs / as_ + hk) / 2.0).exp()
            * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
        if hk > -160.0 {
            let b = bs.sqrt();
            bvn -= (-hk / 2.0).exp() * (2.0 * PI).sqrt() * norm_cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (xi, wi) in x.iter().zip(&w) {
            let xs = (a * (xi + 1.0)).powi(2);
            let rs = (1.0 - xs).sqrt();
            bvn += a
                * wi
                * ((-bs / (2.0 * xs) - hk / (1.0 + rs)).exp() / rs
                    - (-(bs / xs + hk) / 2.0).exp() * (1.0 + c * xs * (1.0 + d * xs)));
        }
        bvn = -bvn / (2.0 * PI);
    }
    if r > 0.0 {
        bvn + norm_cdf(-h.max(k))
    } else {
        let mut v = -bvn;
        if k > h {
            v += if h < 0.0 { norm_cdf(k) - norm_cdf(h) } else { norm_cdf(-h) - norm_cdf(-k) };
        }
        v
    }
}

/// Symmetric, unit-diagonal, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    m: DMatrix<f64>,
}

impl CorrelationMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(invalid("correlation matrix must be square"));
        }
        let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        for i in 0..d {
            if m[(i, i)] != 1.0 {
                return Err(invalid("correlation matrix needs a unit diagonal"));
            }
            for j in 0..d {
                let v = m[(i, j)];
                if !(-1.0..=1.0).contains(&v) || v != m[(j, i)] {
                    return Err(invalid(format!("bad correlation entry ({i},{j}) = {v}")));
                }
            }
        }
        let c = CorrelationMatrix { m };
        if c.min_eigenvalue() < -1e-12 {
            return Err(invalid("correlation matrix is not positive semidefinite"));
        }
        Ok(c)
    }

    pub fn identity(d: usize) -> Self {
        CorrelationMatrix { m: DMatrix::identity(d, d) }
    }

    pub fn equicorrelated(d: usize, rho: f64) -> Result<Self> {
        CorrelationMatrix::new((0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { rho }).collect()).collect())
    }

    /// From the strict upper triangle in row-major order, e.g. `(ρ12, ρ13, ρ23)`.
    pub fn from_upper_triangle(d: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != d * (d.saturating_sub(1)) / 2 {
            return Err(invalid(format!("{d} assets need {} correlations", d * (d - 1) / 2)));
        }
        let mut rows = vec![vec![0.0; d]; d];
        let mut it = upper.iter();
        for i in 0..d {
            rows[i][i] = 1.0;
            for j in i + 1..d {
                let v = *it.next().expect("length checked");
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        CorrelationMatrix::new(rows)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Lower-triangular factor `L` with `L Lᵀ = R`; zero pivots of a singular
    /// but semidefinite matrix give zero columns.
    pub fn cholesky(&self) -> Result<Vec<Vec<f64>>> {
        let d = self.dim();
        let mut l = vec![vec![0.0; d]; d];
        for j in 0..d {
            let s: f64 = (0..j).map(|k| l[j][k] * l[j][k]).sum();
            let piv = self.m[(j, j)] - s;
            if piv < -1e-10 {
                return Err(Error::IllConditioned(format!("Cholesky pivot {piv:e} at column {j}")));
            }
            let ljj = piv.max(0.0).sqrt();
            l[j][j] = ljj;
            for i in j + 1..d {
                let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
                let v = self.m[(i, j)] - s;
                l[i][j] = if ljj > 1e-12 {
                    v / ljj
                } else if v.abs() > 1e-8 {
                    return Err(Error::IllConditioned(format!("inconsistent singular column {j}")));
                } else {
                    0.0
                };
            }
        }
        Ok(l)
    }
}

/// `P(X <= h, Y <= k, Z <= l)` for a standard trivariate normal with
/// correlation `r`, by integrating the conditional bivariate CDF against the
/// density of the least correlated coordinate.
pub fn trivariate_normal_cdf(h: f64, k: f64, l: f64, r: &CorrelationMatrix) -> Result<f64> {
    if r.dim() != 3 {
        return Err(invalid("trivariate CDF needs a 3x3 correlation matrix"));
    }
    let ev = r.min_eigenvalue();
    if ev < EIGEN_FLOOR {
        return Err(Error::IllConditioned(format!("minimum eigenvalue {ev:e}")));
    }
    let lim = [h, k, l];
    if lim.iter().any(|v| v.is_nan()) {
        return Ok(f64::NAN);
    }
    if lim.contains(&f64::NEG_INFINITY) {
        return Ok(0.0);
    }
    let c = (0..3)
        .min_by(|&a, &b| {
            let ma = (0..3).filter(|&j| j != a).map(|j| r.get(a, j).abs()).fold(0.0, f64::max);
            let mb = (0..3).filter(|&j| j != b).map(|j| r.get(b, j).abs()).fold(0.0, f64::max);
            ma.total_cmp(&mb)
        })
        .expect("three coordinates");
    let others: Vec<usize> = (0..3).filter(|&j| j != c).collect();
    let (a, b) = (others[0], others[1]);
    let (rac, rbc, rab) = (r.get(a, c), r.get(b, c), r.get(a, b));
    let (sa, sb) = ((1.0 - rac * rac).sqrt(), (1.0 - rbc * rbc).sqrt());
    let rho = ((rab - rac * rbc) / (sa * sb)).clamp(-1.0, 1.0);
    let (ha, hb, hc) = (lim[a], lim[b], lim[c]);
    let g = |x: f64| {
        let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        pdf * bivariate_normal_cdf((ha - rac * x) / sa, (hb - rbc * x) / sb, rho)
    };
    let top = hc.min(10.0);
    if top <= -10.0 {
        return Ok(0.0);
    }
    let settings = QuadSettings { abs_tol: 1e-14, rel_tol: 1e-13, max_subdivisions: 4000 };
    let v = integrate(g, -10.0, top, &[0.0], &settings).estimate.value;
    Ok(v.clamp(0.0, 1.0))
}

/// Zero-rate Black–Scholes model `S_i = s_i exp(-σ_i²/2 + σ_i X_i)` with
/// correlated standard normal `X`. Unit volatilities by default.
#[derive(Debug, Clone, PartialEq)]
pub struct BSModel {
    spots: Vec<f64>,
    vols: Vec<f64>,
    corr: CorrelationMatrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    spots: Vec<f64>,
    correlations: Vec<f64>,
    vols: Option<Vec<f64>>,
}

impl BSModel {
    pub fn new(spots: Vec<f64>, corr: CorrelationMatrix) -> Result<Self> {
        let vols = vec![1.0; spots.len()];
        BSModel::with_vols(spots, vols, corr)
    }

    pub fn with_vols(spots: Vec<f64>, vols: Vec<f64>, corr: CorrelationMatrix) -> Result<Self> {
        if spots.len() < 2 || spots.len() != corr.dim() || vols.len() != spots.len() {
            return Err(invalid("spots, vols and correlations must have matching dimension >= 2"));
        }
        if spots.iter().any(|s| !(*s > 0.0) || !s.is_finite()) || vols.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(invalid("spots and vols must be positive"));
        }
        Ok(BSModel { spots, vols, corr })
    }

    /// Parses `spots = [..]`, `correlations = [..]` (upper triangle) and the
    /// optional `vols = [..]`.
    pub fn from_toml(text: &str) -> Result<Self> {
        let f: ModelFile = toml::from_str(text).map_err(|e| parse_err(format!("model config: {e}")))?;
        let d = f.spots.len();
        let corr = CorrelationMatrix::from_upper_triangle(d, &f.correlations)?;
        let vols = f.vols.unwrap_or_else(|| vec![1.0; d]);
        BSModel::with_vols(f.spots, vols, corr)
    }

    pub fn dim(&self) -> usize {
        self.spots.len()
    }

    pub fn spots(&self) -> &[f64] {
        &self.spots
    }

    pub fn vols(&self) -> &[f64] {
        &self.vols
    }

    pub fn correlation(&self) -> &CorrelationMatrix {
        &self.corr
    }

    pub fn marginals(&self) -> Vec<MarginalDistribution> {
        self.spots
            .iter()
            .zip(&self.vols)
            .map(|(&s, &v)| MarginalDistribution::black_scholes(s, v).expect("validated model"))
            .collect()
    }

    /// Standardized log-strike `z_i` with `P(S_i <= K) = Φ(z_i)`.
    pub fn z(&self, i: usize, strike: f64) -> f64 {
        let v = self.vols[i];
        ((strike / self.spots[i]).ln() + 0.5 * v * v) / v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuoteKind {
    /// `P(S_i <= K, S_j <= K)`.
    PairwiseDigitalMax,
    /// `P(S_1 >= K, ..., S_d >= K)`.
    BasketDigitalMin,
}

impl QuoteKind {
    pub fn name(self) -> &'static str {
        match self {
            QuoteKind::PairwiseDigitalMax => "pairwise-digital-max",
            QuoteKind::BasketDigitalMin => "basket-digital-min",
        }
    }
}

impl FromStr for QuoteKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pairwise-digital-max" => Ok(QuoteKind::PairwiseDigitalMax),
            "basket-digital-min" => Ok(QuoteKind::BasketDigitalMin),
            other => Err(parse_err(format!("unknown quote kind {other:?}"))),
        }
    }
}

/// A digital option price; `indices` are 0-based asset indices.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketQuote {
    pub kind: QuoteKind,
    pub indices: Vec<usize>,
    pub strike: f64,
    pub price: f64,
}

impl MarketQuote {
    pub fn new(kind: QuoteKind, indices: Vec<usize>, strike: f64, price: f64) -> Result<Self> {
        if !(strike > 0.0) || !strike.is_finite() {
            return Err(Error::InvalidStrike(strike));
        }
        if !(0.0..=1.0).contains(&price) {
            return Err(invalid(format!("digital price {price} outside [0, 1]")));
        }
        if kind == QuoteKind::PairwiseDigitalMax && (indices.len() != 2 || indices[0] == indices[1]) {
            return Err(invalid("pairwise quotes need two distinct indices"));
        }
        Ok(MarketQuote { kind, indices, strike, price })
    }
}

pub fn quotes_to_csv(quotes: &[MarketQuote]) -> String {
    let mut s = String::from("kind,indices,strike,price\n");
    for q in quotes {
        let idx: Vec<String> = q.indices.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{},{},{},{}", q.kind.name(), idx.join(";"), fmt_num(q.strike), q.price);
    }
    s
}

/// Reads `kind,indices,strike,price` rows; indices are `;`-separated.
pub fn quotes_from_csv(text: &str) -> Result<Vec<MarketQuote>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().map(str::trim).enumerate() {
        if line.is_empty() || (n == 0 && line.starts_with("kind")) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(parse_err(format!("line {}: expected 4 columns", n + 1)));
        }
        let indices = cols[1]
            .split(';')
            .map(|t| t.trim().parse::<usize>().map_err(|e| parse_err(format!("line {}: {e}", n + 1))))
            .collect::<Result<Vec<_>>>()?;
        let num = |t: &str| t.parse::<f64>().map_err(|e| parse_err(format!("line {}: {e}", n + 1)));
        out.push(MarketQuote::new(cols[0].parse()?, indices, num(cols[2])?, num(cols[3])?)?);
    }
    Ok(out)
}

/// `P(S_i <= K, S_j <= K)` for every strike and every pair `i < j`.
pub fn generate_pairwise_digital_quotes(model: &BSModel, strikes: &[f64]) -> Result<Vec<MarketQuote>> {
    let d = model.dim();
    let mut out = Vec::new();
    for &k in strikes {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidStrike(k));
        }
        for i in 0..d {
            for j in i + 1..d {
                let p = bivariate_normal_cdf(model.z(i, k), model.z(j, k), model.corr.get(i, j));
                out.push(MarketQuote::new(QuoteKind::PairwiseDigitalMax, vec![i, j], k, p)?);
            }
        }
    }
    Ok(out)
}

/// `P(S_1 >= K, S_2 >= K, S_3 >= K)` for each strike; by symmetry of the
/// centered normal law this is the CDF at `-z`.
pub fn generate_min_digital_quotes(model: &BSModel, strikes: &[f64]) -> Result<Vec<MarketQuote>> {
    if model.dim() != 3 {
        return Err(invalid("min-digital quotes are generated for three assets"));
    }
    let mut out = Vec::new();
    for &k in strikes {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidStrike(k));
        }
        let p = trivariate_normal_cdf(-model.z(0, k), -model.z(1, k), -model.z(2, k), &model.corr)?;
        out.push(MarketQuote::new(QuoteKind::BasketDigitalMin, vec![0, 1, 2], k, p)?);
    }
    Ok(out)
}

/// Monte Carlo price with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub price: f64,
    pub stderr: f64,
}

/// Paths per independent random stream.
pub const SHARD_PATHS: usize = 1 << 16;
pub const MIN_PATHS: usize = 10_000;

/// Prices several payoffs on one set of paths. Path `p` of shard `s` is drawn
/// from ChaCha8 seeded with `seed` on stream `s`; uniforms are
/// `((u64 >> 11) + 0.5) / 2^53` mapped through the normal quantile.
/// Shard sums are merged in shard order, so results do not depend on the
/// number of worker threads.
pub fn mc_benchmark_prices(
    payoffs: &[PayoffDescriptor],
    model: &BSModel,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    if n_paths < MIN_PATHS {
        return Err(invalid(format!("n_paths must be at least {MIN_PATHS}")));
    }
    let d = model.dim();
    let l = model.corr.cholesky()?;
    let shards = n_paths.div_ceil(SHARD_PATHS);
    let drift: Vec<f64> = model.vols.iter().map(|v| -0.5 * v * v).collect();
    let sums: Vec<Vec<(f64, f64)>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let count = SHARD_PATHS.min(n_paths - s * SHARD_PATHS);
            let mut acc = vec![(0.0, 0.0); payoffs.len()];
            let (mut z, mut x) = (vec![0.0; d], vec![0.0; d]);
            for _ in 0..count {
                for zi in z.iter_mut() {
                    let u = ((rng.random::<u64>() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
                    *zi = norm_ppf(u);
                }
                for i in 0..d {
                    let g: f64 = (0..=i).map(|k| l[i][k] * z[k]).sum();
                    x[i] = model.spots[i] * (drift[i] + model.vols[i] * g).exp();
                }
                for (a, f) in acc.iter_mut().zip(payoffs) {
                    let v = f.evaluate(&x);
                    a.0 += v;
                    a.1 += v * v;
                }
            }
            acc
        })
        .collect();
    let n = n_paths as f64;
    Ok((0..payoffs.len())
        .map(|j| {
            let (mut s1, mut s2) = (0.0, 0.0);
            for shard in &sums {
                s1 += shard[j].0;
                s2 += shard[j].1;
            }
            let mean = s1 / n;
            let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
            McEstimate { price: mean, stderr: (var / n).sqrt() }
        })
        .collect())
}

pub fn mc_benchmark_price(f: &PayoffDescriptor, model: &BSModel, n_paths: usize, seed: u64) -> Result<McEstimate> {
    Ok(mc_benchmark_prices(std::slice::from_ref(f), model, n_paths, seed)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoff::PayoffKind;

    #[test]
    fn bivariate_known_values() {
        assert!((bivariate_normal_cdf(0.0, 0.0, 0.0) - 0.25).abs() < 1e-15);
        assert!((bivariate_normal_cdf(0.0, 0.0, 0.5) - 1.0 / 3.0).abs() < 1e-15);
        assert!((bivariate_normal_cdf(f64::INFINITY, 0.7, 0.4) - norm_cdf(0.7)).abs() < 1e-16);
        for r in [-0.99, -0.95, -0.5, 0.0, 0.2, 0.8, 0.93, 0.999] {
            for (h, k) in [(0.3, -1.2), (1.5, 0.4), (-2.0, -0.5)] {
                let a = bivariate_normal_cdf(h, k, r);
                let b = bivariate_normal_cdf(k, h, r);
                assert!((a - b).abs() < 1e-15);
                // P(X <= h, Y <= k) + P(X <= h, Y > k) = Φ(h)
                let c = bivariate_normal_cdf(h, -k, -r);
                assert!((a + c - norm_cdf(h)).abs() < 1e-14, "{h} {k} {r}");
            }
        }
        // degenerate correlations
        assert!((bivariate_normal_cdf(0.3, 0.5, 1.0) - norm_cdf(0.3)).abs() < 1e-15);
        assert!((bivariate_normal_cdf(0.3, 0.5, -1.0) - (norm_cdf(0.3) + norm_cdf(0.5) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn bivariate_matches_quadrature() {
        // Φ2(h, k, ρ) = ∫_{-∞}^h φ(x) Φ((k - ρx)/√(1-ρ²)) dx
        let s = QuadSettings { abs_tol: 1e-15, rel_tol: 1e-14, max_subdivisions: 4000 };
        for r in [-0.9, -0.4, 0.1, 0.6, 0.95] {
            for (h, k) in [(0.5, 0.5), (-1.0, 2.0), (1.7, -0.3)] {
                let sr = (1.0f64 - r * r).sqrt();
                let v = integrate(|x| crate::marginal::norm_pdf(x) * norm_cdf((k - r * x) / sr), -12.0, h, &[], &s)
                    .estimate
                    .value;
                assert!((bivariate_normal_cdf(h, k, r) - v).abs() < 1e-13, "{h} {k} {r}");
            }
        }
    }

    #[test]
    fn trivariate_orthants() {
        let id = CorrelationMatrix::identity(3);
        assert!((trivariate_normal_cdf(0.0, 0.0, 0.0, &id).unwrap() - 0.125).abs() < 1e-12);
        let r = CorrelationMatrix::equicorrelated(3, 0.5).unwrap();
        assert!((trivariate_normal_cdf(0.0, 0.0, 0.0, &r).unwrap() - 0.25).abs() < 1e-10);
        let inf = f64::INFINITY;
        assert!((trivariate_normal_cdf(inf, inf, 0.4, &r).unwrap() - norm_cdf(0.4)).abs() < 1e-12);
        let near = CorrelationMatrix::equicorrelated(3, 1.0).unwrap();
        assert!(matches!(trivariate_normal_cdf(0.0, 0.0, 0.0, &near), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn trivariate_permutation_invariance() {
        let r = CorrelationMatrix::from_upper_triangle(3, &[0.5, -0.5, 0.0]).unwrap();
        let a = trivariate_normal_cdf(0.2, -0.4, 1.1, &r).unwrap();
        // swap coordinates 0 and 2
        let p = CorrelationMatrix::from_upper_triangle(3, &[0.0, -0.5, 0.5]).unwrap();
        let b = trivariate_normal_cdf(1.1, -0.4, 0.2, &p).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn pairwise_quotes() {
        let m = BSModel::new(vec![10.0; 3], CorrelationMatrix::equicorrelated(3, 0.3).unwrap()).unwrap();
        let q = generate_pairwise_digital_quotes(&m, &[10.0]).unwrap();
        assert_eq!(q.len(), 3);
        let want = bivariate_normal_cdf(0.5, 0.5, 0.3);
        assert!(q.iter().all(|x| (x.price - want).abs() < 1e-15));
        assert!(matches!(generate_pairwise_digital_quotes(&m, &[0.0]), Err(Error::InvalidStrike(_))));
        let m0 = BSModel::new(vec![10.0; 3], CorrelationMatrix::identity(3)).unwrap();
        let median = 10.0 * (-0.5f64).exp();
        let q = generate_pairwise_digital_quotes(&m0, &[median]).unwrap();
        assert!((q[0].price - 0.25).abs() < 1e-15);
    }

    #[test]
    fn quote_csv() {
        let m = BSModel::new(vec![10.0; 3], CorrelationMatrix::equicorrelated(3, 0.5).unwrap()).unwrap();
        let q = generate_min_digital_quotes(&m, &[8.0, 12.0]).unwrap();
        assert!(q[0].price > q[1].price);
        let back = quotes_from_csv(&quotes_to_csv(&q)).unwrap();
        assert_eq!(back, q);
        assert!(quotes_from_csv("kind,indices,strike,price\nfoo,0;1,1,0.5\n").is_err());
    }

    #[test]
    fn model_from_toml() {
        let m = BSModel::from_toml("spots = [10.0, 10.0, 10.0]\ncorrelations = [0.5, -0.5, 0.0]\n").unwrap();
        assert_eq!(m.correlation().get(0, 2), -0.5);
        assert_eq!(m.vols(), &[1.0, 1.0, 1.0]);
        assert!(BSModel::from_toml("spots = [10.0, 10.0]\ncorrelations = [0.5, 0.1]\n").is_err());
    }

    #[test]
    fn mc_is_deterministic_and_unbiased() {
        let m = BSModel::new(vec![10.0; 3], CorrelationMatrix::identity(3)).unwrap();
        let median = 10.0 * (-0.5f64).exp();
        let f = PayoffDescriptor::new(PayoffKind::DigitalPutOnMax, median).unwrap();
        let a = mc_benchmark_price(&f, &m, 200_000, 7).unwrap();
        let b = mc_benchmark_price(&f, &m, 200_000, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.price - 0.125).abs() < 3.0 * a.stderr, "{a:?}");
        let f = PayoffDescriptor::new(PayoffKind::DigitalPutOnMax, 1e12).unwrap();
        let c = mc_benchmark_price(&f, &m, 10_000, 1).unwrap();
        assert_eq!((c.price, c.stderr), (1.0, 0.0));
        assert!(mc_benchmark_price(&f, &m, 100, 1).is_err());
    }
}
