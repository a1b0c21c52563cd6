//! Bivariate Gaussian copula base distribution and rank correlation.
//!
//! The base noise of the model is a pair `(z_a, z_y)` of standard normals
//! with Pearson correlation `rho`. Rank correlations (Spearman, Kendall) of
//! the observed variables are invariant under the strictly increasing
//! transforms that map data to this base, which gives closed-form links
//! between `rho` and the observable rank statistics.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Correlation of the Gaussian copula, `rho ∈ [-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CopulaParam(f64);

impl CopulaParam {
    pub fn new(rho: f64) -> Result<Self> {
        if !rho.is_finite() || rho.abs() > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "copula rho must lie in [-1, 1], got {rho}"
            )));
        }
        Ok(Self(rho))
    }

    pub fn independent() -> Self {
        Self(0.0)
    }

    pub fn rho(self) -> f64 {
        self.0
    }

    /// Returns `self` if the density is non-degenerate (`|rho| < 1`).
    pub fn non_degenerate(self) -> Result<Self> {
        if self.0.abs() < 1.0 {
            Ok(self)
        } else {
            Err(Error::DegenerateCopula(self.0.abs()))
        }
    }
}

impl TryFrom<f64> for CopulaParam {
    type Error = Error;

    fn try_from(rho: f64) -> Result<Self> {
        Self::new(rho)
    }
}

impl From<CopulaParam> for f64 {
    fn from(p: CopulaParam) -> f64 {
        p.0
    }
}

/// One draw from the copula base distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePair {
    pub z_a: f64,
    pub z_y: f64,
}

/// Pearson, Spearman and Kendall association of a paired sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankStats {
    pub spearman: f64,
    pub kendall: f64,
    pub pearson: f64,
}

/// Draws `(z_a, z_y)` with `z_y = rho·z_a + sqrt(1 − rho²)·e`.
pub fn sample_pair<R: Rng + ?Sized>(param: CopulaParam, rng: &mut R) -> NoisePair {
    let z_a: f64 = rng.sample(StandardNormal);
    let e: f64 = rng.sample(StandardNormal);
    let rho = param.rho();
    NoisePair {
        z_a,
        z_y: rho * z_a + (1.0 - rho * rho).sqrt() * e,
    }
}

/// Log-density of the standard bivariate normal with correlation `rho`.
pub fn log_density(param: CopulaParam, pair: NoisePair) -> Result<f64> {
    let rho = param.non_degenerate()?.rho();
    Ok(log_density_unchecked(rho, pair.z_a, pair.z_y))
}

#[inline]
pub(crate) fn log_density_unchecked(rho: f64, z_a: f64, z_y: f64) -> f64 {
    let one_m = 1.0 - rho * rho;
    let quad = z_a * z_a - 2.0 * rho * z_a * z_y + z_y * z_y;
    -(2.0 * PI).ln() - 0.5 * one_m.ln() - quad / (2.0 * one_m)
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return invalid(format!("length mismatch: {} vs {}", xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return invalid("need at least two observations");
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return invalid("non-finite observation");
    }
    Ok(())
}

/// Ranks starting at 1, ties share the average of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end (0-based) share rank mean(start+1 ..= end)
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return invalid("constant input has no correlation");
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation (Pearson correlation of average ranks).
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Kendall's tau-a: `(concordant − discordant) / (n choose 2)`, tied pairs
/// counted in neither. Dequantized data has no ties almost surely, in which
/// case this equals tau-b.
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if constant(xs) || constant(ys) {
        return invalid("constant input has no correlation");
    }
    let n = xs.len();
    let mut score: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (xs[i] - xs[j]).signum() * (ys[i] - ys[j]).signum();
            // signum(0.0) is 1.0 in Rust; handle ties explicitly
            if xs[i] != xs[j] && ys[i] != ys[j] {
                score += s as i64;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(score as f64 / pairs)
}

pub fn rank_stats(xs: &[f64], ys: &[f64]) -> Result<RankStats> {
    Ok(RankStats {
        spearman: spearman_rho(xs, ys)?,
        kendall: kendall_tau(xs, ys)?,
        pearson: pearson(xs, ys)?,
    })
}

fn unit_interval(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v.abs() <= 1.0 {
        Ok(v)
    } else {
        invalid(format!("{name} must lie in [-1, 1], got {v}"))
    }
}

/// `rho_S = (6/π)·asin(rho/2)`
pub fn spearman_from_rho(rho: f64) -> Result<f64> {
    let rho = unit_interval("rho", rho)?;
    Ok(6.0 / PI * (rho / 2.0).asin())
}

/// `rho = 2·sin(π·rho_S/6)`
pub fn rho_from_spearman(rho_s: f64) -> Result<f64> {
    let rho_s = unit_interval("spearman rho", rho_s)?;
    Ok(2.0 * (PI * rho_s / 6.0).sin())
}

/// `tau = (2/π)·asin(rho)`
pub fn kendall_from_rho(rho: f64) -> Result<f64> {
    let rho = unit_interval("rho", rho)?;
    Ok(2.0 / PI * rho.asin())
}

/// `rho = sin(π·tau/2)`
pub fn rho_from_kendall(tau: f64) -> Result<f64> {
    let tau = unit_interval("kendall tau", tau)?;
    Ok((PI * tau / 2.0).sin())
}
