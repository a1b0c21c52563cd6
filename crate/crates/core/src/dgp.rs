//! Data-generating processes with known causal effects.
//!
//! * A linear-Gaussian SCM `A := ε_A`, `Y := α·A + ε_Y` with correlated
//!   noise, whose `rho`-curve has a closed form.
//! * Binary confounded DGPs `U → A`, `U → Y`, `A → Y` with the effect
//!   identified by backdoor adjustment over the hidden `U`, plus the
//!   assumption-free bounds computable from observational margins.
//! * A seven-dimension categorical outcome built from binary dimensions that
//!   share the same `U` and `A`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the linear SCM: causal slope `alpha`, noise covariance
/// `beta` and outcome-noise variance `delta` (treatment noise has unit variance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearScmParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

/// The six observationally paired rows: three with observed correlation
/// −0.55 and three with +0.55, each with causal slope 0.2, 0 or −0.2.
pub const TABLE1: [LinearScmParams; 6] = [
    LinearScmParams { alpha: 0.2, beta: -0.6, delta: 0.72 },
    LinearScmParams { alpha: 0.0, beta: -0.4, delta: 0.52 },
    LinearScmParams { alpha: -0.2, beta: -0.2, delta: 0.40 },
    LinearScmParams { alpha: 0.2, beta: 0.2, delta: 0.40 },
    LinearScmParams { alpha: 0.0, beta: 0.4, delta: 0.52 },
    LinearScmParams { alpha: -0.2, beta: 0.6, delta: 0.72 },
];

impl LinearScmParams {
    pub fn new(alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        let p = Self { alpha, beta, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.alpha, self.beta, self.delta].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite SCM parameter".into()));
        }
        if self.delta <= 0.0 || self.beta * self.beta >= self.delta {
            return Err(Error::InvalidParameter(format!(
                "noise covariance [[1, {b}], [{b}, {d}]] is not positive definite",
                b = self.beta,
                d = self.delta
            )));
        }
        Ok(())
    }

    /// Correlation of the two noise terms, `beta / sqrt(delta)`.
    pub fn noise_rho(&self) -> f64 {
        self.beta / self.delta.sqrt()
    }

    pub fn outcome_sd(&self) -> f64 {
        (self.alpha * self.alpha + self.delta + 2.0 * self.alpha * self.beta).sqrt()
    }

    /// Observational Pearson correlation of `(A, Y)`.
    pub fn observed_rho(&self) -> f64 {
        (self.alpha + self.beta) / self.outcome_sd()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<(f64, f64)>> {
        self.validate()?;
        let resid_sd = (self.delta - self.beta * self.beta).sqrt();
        Ok((0..n)
            .map(|_| {
                let eps_a: f64 = rng.sample(StandardNormal);
                let e: f64 = rng.sample(StandardNormal);
                let eps_y = self.beta * eps_a + resid_sd * e;
                (eps_a, self.alpha * eps_a + eps_y)
            })
            .collect())
    }
}

/// Effect of moving `A` from 0 to 1 that a Gaussian copula model with
/// correlation `rho_assumed` recovers from this SCM's observational law.
///
/// With `σ_A = 1`: `σ_Y·(ρ_obs − rho_assumed·sqrt(1 − ρ_obs²)/sqrt(1 − rho_assumed²))`.
pub fn linear_ace_oracle(params: &LinearScmParams, rho_assumed: f64) -> Result<f64> {
    params.validate()?;
    if rho_assumed.is_nan() || rho_assumed.abs() >= 1.0 {
        return Err(Error::DegenerateCopula(rho_assumed.abs()));
    }
    let rho_obs = params.observed_rho();
    let ratio = (1.0 - rho_obs * rho_obs).sqrt() / (1.0 - rho_assumed * rho_assumed).sqrt();
    Ok(params.outcome_sd() * (rho_obs - rho_assumed * ratio))
}

/// Bernoulli tables of the binary confounded DGP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryDgpParams {
    /// `P(U = 1)`
    pub p_u: f64,
    /// `P(A = 1 | U = u)` indexed by `u`.
    pub p_a_given_u: [f64; 2],
    /// `P(Y = 1 | A = a, U = u)` indexed `[a][u]`.
    pub p_y_given_au: [[f64; 2]; 2],
}

/// Observational margins: `p_a = P(A = a)`, `q_a = P(Y = 1 | A = a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryObsStats {
    pub p1: f64,
    pub p0: f64,
    pub q1: f64,
    pub q0: f64,
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} is not a probability")))
    }
}

impl BinaryDgpParams {
    /// Every Bernoulli parameter drawn uniformly on `[0, 1]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut u = || rng.random::<f64>();
        Self {
            p_u: u(),
            p_a_given_u: [u(), u()],
            p_y_given_au: [[u(), u()], [u(), u()]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p_u", self.p_u)?;
        for v in self.p_a_given_u {
            check_probability("p_a_given_u", v)?;
        }
        for v in self.p_y_given_au.iter().flatten() {
            check_probability("p_y_given_au", *v)?;
        }
        Ok(())
    }

    fn p_u_is(&self, u: usize) -> f64 {
        if u == 1 {
            self.p_u
        } else {
            1.0 - self.p_u
        }
    }

    fn p_a_is(&self, a: usize, u: usize) -> f64 {
        if a == 1 {
            self.p_a_given_u[u]
        } else {
            1.0 - self.p_a_given_u[u]
        }
    }

    /// One draw of `(u, a, y)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize, usize) {
        let u = usize::from(rng.random::<f64>() < self.p_u);
        let a = usize::from(rng.random::<f64>() < self.p_a_given_u[u]);
        let y = usize::from(rng.random::<f64>() < self.p_y_given_au[a][u]);
        (u, a, y)
    }

    /// `n` observational pairs; the confounder is discarded.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(f64, f64)> {
        (0..n)
            .map(|_| {
                let (_, a, y) = self.draw(rng);
                (a as f64, y as f64)
            })
            .collect()
    }

    /// Backdoor adjustment over `U`.
    pub fn true_ace(&self) -> f64 {
        (0..2)
            .map(|u| (self.p_y_given_au[1][u] - self.p_y_given_au[0][u]) * self.p_u_is(u))
            .sum()
    }

    /// Exact observational margins by marginalising over `U`.
    pub fn exact_stats(&self) -> BinaryObsStats {
        let p1: f64 = (0..2).map(|u| self.p_a_is(1, u) * self.p_u_is(u)).sum();
        let p0 = 1.0 - p1;
        let joint_y1 = |a: usize| -> f64 {
            (0..2)
                .map(|u| self.p_y_given_au[a][u] * self.p_a_is(a, u) * self.p_u_is(u))
                .sum()
        };
        let cond = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
        BinaryObsStats {
            p1,
            p0,
            q1: cond(joint_y1(1), p1),
            q0: cond(joint_y1(0), p0),
        }
    }
}

pub fn binary_true_ace(params: &BinaryDgpParams) -> f64 {
    params.true_ace()
}

impl BinaryObsStats {
    /// Empirical margins of binary `(a, y)` pairs (values 0 or 1).
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidInput("no observations".into()));
        }
        let mut count = [0usize; 2];
        let mut ones = [0usize; 2];
        for &(a, y) in pairs {
            let a = binary_value(a)?;
            let y = binary_value(y)?;
            count[a] += 1;
            ones[a] += y;
        }
        let n = pairs.len() as f64;
        let cond = |k: usize| if count[k] > 0 { ones[k] as f64 / count[k] as f64 } else { 0.0 };
        Ok(Self {
            p1: count[1] as f64 / n,
            p0: count[0] as f64 / n,
            q1: cond(1),
            q0: cond(0),
        })
    }
}

fn binary_value(v: f64) -> Result<usize> {
    if v == 0.0 {
        Ok(0)
    } else if v == 1.0 {
        Ok(1)
    } else {
        Err(Error::Schema(format!("expected a binary value, got {v}")))
    }
}

/// Assumption-free bounds `[q1·p1 − q0·p0 − p1, q1·p1 − q0·p0 + p0]`.
pub fn af_bounds(stats: &BinaryObsStats) -> (f64, f64) {
    let centre = stats.q1 * stats.p1 - stats.q0 * stats.p0;
    (centre - stats.p1, centre + stats.p0)
}

/// Sum of per-dimension assumption-free bounds for an outcome that is the
/// sum of binary dimensions.
pub fn categorical_af_bounds(per_dimension: &[BinaryObsStats]) -> Result<(f64, f64)> {
    if per_dimension.is_empty() {
        return Err(Error::InvalidInput("no outcome dimensions".into()));
    }
    Ok(sum_bounds(per_dimension.iter().map(af_bounds)))
}

/// Component-wise sum of bound intervals.
pub fn sum_bounds(bounds: impl IntoIterator<Item = (f64, f64)>) -> (f64, f64) {
    bounds.into_iter().fold((0.0, 0.0), |(l, u), (bl, bu)| (l + bl, u + bu))
}

pub const CATEGORICAL_DIMENSIONS: usize = 7;

/// Seven binary outcome dimensions sharing one hidden `U` and one treatment `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalDgpParams {
    pub p_u: f64,
    pub p_a_given_u: [f64; 2],
    /// Per dimension, `P(Y_d = 1 | A = a, U = u)` indexed `[a][u]`.
    pub dims: Vec<[[f64; 2]; 2]>,
}

impl CategoricalDgpParams {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut u = || rng.random::<f64>();
        let p_u = u();
        let p_a_given_u = [u(), u()];
        let dims = (0..CATEGORICAL_DIMENSIONS).map(|_| [[u(), u()], [u(), u()]]).collect();
        Self { p_u, p_a_given_u, dims }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.len() != CATEGORICAL_DIMENSIONS {
            return Err(Error::InvalidParameter(format!(
                "expected {CATEGORICAL_DIMENSIONS} outcome dimensions, got {}",
                self.dims.len()
            )));
        }
        for d in 0..self.dims.len() {
            self.dimension(d).validate()?;
        }
        Ok(())
    }

    /// The binary DGP of outcome dimension `d`.
    pub fn dimension(&self, d: usize) -> BinaryDgpParams {
        BinaryDgpParams {
            p_u: self.p_u,
            p_a_given_u: self.p_a_given_u,
            p_y_given_au: self.dims[d],
        }
    }

    /// `n` draws of `(a, per-dimension outcomes)`.
    pub fn sample_dimensions<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(usize, Vec<usize>)> {
        (0..n)
            .map(|_| {
                let u = usize::from(rng.random::<f64>() < self.p_u);
                let a = usize::from(rng.random::<f64>() < self.p_a_given_u[u]);
                let ys = self
                    .dims
                    .iter()
                    .map(|t| usize::from(rng.random::<f64>() < t[a][u]))
                    .collect();
                (a, ys)
            })
            .collect()
    }

    /// `n` pairs `(a, y)` with `y` the number of active dimensions.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(f64, f64)> {
        self.sample_dimensions(n, rng)
            .into_iter()
            .map(|(a, ys)| (a as f64, ys.iter().sum::<usize>() as f64))
            .collect()
    }

    pub fn true_ace(&self) -> f64 {
        (0..self.dims.len()).map(|d| self.dimension(d).true_ace()).sum()
    }

    pub fn exact_stats(&self) -> Vec<BinaryObsStats> {
        (0..self.dims.len()).map(|d| self.dimension(d).exact_stats()).collect()
    }
}

/// Per-dimension empirical margins from [`CategoricalDgpParams::sample_dimensions`] output.
pub fn dimension_stats(rows: &[(usize, Vec<usize>)]) -> Result<Vec<BinaryObsStats>> {
    let Some((_, first)) = rows.first() else {
        return Err(Error::InvalidInput("no observations".into()));
    };
    (0..first.len())
        .map(|d| {
            let pairs: Vec<(f64, f64)> = rows.iter().map(|(a, ys)| (*a as f64, ys[d] as f64)).collect();
            BinaryObsStats::from_pairs(&pairs)
        })
        .collect()
}

/// A benchmark DGP, readable from and writable to a `key = value` config block.
///
/// ```text
/// kind = linear            # or: binary, categorical
/// alpha = 0.2              # linear: alpha, beta, delta
/// beta = -0.6
/// delta = 0.72
///
/// kind = binary
/// p_u = 0.3
/// p_a_given_u = 0.2 0.7    # u = 0, u = 1
/// p_y_given_au = 0.1 0.5 0.3 0.9   # (a0,u0) (a0,u1) (a1,u0) (a1,u1)
///
/// kind = categorical       # p_u, p_a_given_u, then dim.0 .. dim.6
/// dim.0 = 0.1 0.5 0.3 0.9  # same order as p_y_given_au
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DgpSpec {
    Linear(LinearScmParams),
    Binary(BinaryDgpParams),
    Categorical(CategoricalDgpParams),
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DgpSpec::Linear(p) => p.validate(),
            DgpSpec::Binary(p) => p.validate(),
            DgpSpec::Categorical(p) => p.validate(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<(f64, f64)>> {
        self.validate()?;
        Ok(match self {
            DgpSpec::Linear(p) => p.sample(n, rng)?,
            DgpSpec::Binary(p) => p.sample(n, rng),
            DgpSpec::Categorical(p) => p.sample(n, rng),
        })
    }

    /// Effect of setting `A` to 1 versus 0.
    pub fn true_ace(&self) -> f64 {
        match self {
            DgpSpec::Linear(p) => p.alpha,
            DgpSpec::Binary(p) => p.true_ace(),
            DgpSpec::Categorical(p) => p.true_ace(),
        }
    }

    pub fn to_config(&self) -> String {
        let mut out = String::new();
        let nums = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let flat = |t: &[[f64; 2]; 2]| nums(&[t[0][0], t[0][1], t[1][0], t[1][1]]);
        match self {
            DgpSpec::Linear(p) => {
                let _ = write!(out, "kind = linear\nalpha = {}\nbeta = {}\ndelta = {}\n", p.alpha, p.beta, p.delta);
            }
            DgpSpec::Binary(p) => {
                let _ = write!(
                    out,
                    "kind = binary\np_u = {}\np_a_given_u = {}\np_y_given_au = {}\n",
                    p.p_u,
                    nums(&p.p_a_given_u),
                    flat(&p.p_y_given_au)
                );
            }
            DgpSpec::Categorical(p) => {
                let _ = write!(
                    out,
                    "kind = categorical\np_u = {}\np_a_given_u = {}\n",
                    p.p_u,
                    nums(&p.p_a_given_u)
                );
                for (d, t) in p.dims.iter().enumerate() {
                    let _ = writeln!(out, "dim.{d} = {}", flat(t));
                }
            }
        }
        out
    }

    pub fn from_config(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, (usize, Vec<f64>)> = BTreeMap::new();
        let mut kind = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse { line: line_no, message: format!("expected `key = value`, got {line:?}") });
            };
            let (key, value) = (key.trim(), value.trim());
            if key == "kind" {
                kind = Some(value.to_string());
                continue;
            }
            let nums = value
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: line_no, message: format!("{key}: {e}") })?;
            if kv.insert(key.to_string(), (line_no, nums)).is_some() {
                return Err(Error::Parse { line: line_no, message: format!("duplicate key {key}") });
            }
        }
        let mut take = |key: &str, len: usize| -> Result<Vec<f64>> {
            let (line, v) = kv
                .remove(key)
                .ok_or_else(|| Error::InvalidParameter(format!("missing key {key}")))?;
            if v.len() != len {
                return Err(Error::Parse { line, message: format!("{key} needs {len} values, got {}", v.len()) });
            }
            Ok(v)
        };
        let table = |v: Vec<f64>| [[v[0], v[1]], [v[2], v[3]]];
        let spec = match kind.as_deref() {
            Some("linear") => DgpSpec::Linear(LinearScmParams {
                alpha: take("alpha", 1)?[0],
                beta: take("beta", 1)?[0],
                delta: take("delta", 1)?[0],
            }),
            Some("binary") => {
                let p_u = take("p_u", 1)?[0];
                let pa = take("p_a_given_u", 2)?;
                DgpSpec::Binary(BinaryDgpParams {
                    p_u,
                    p_a_given_u: [pa[0], pa[1]],
                    p_y_given_au: table(take("p_y_given_au", 4)?),
                })
            }
            Some("categorical") => {
                let p_u = take("p_u", 1)?[0];
                let pa = take("p_a_given_u", 2)?;
                let dims = (0..CATEGORICAL_DIMENSIONS)
                    .map(|d| take(&format!("dim.{d}"), 4).map(table))
                    .collect::<Result<Vec<_>>>()?;
                DgpSpec::Categorical(CategoricalDgpParams { p_u, p_a_given_u: [pa[0], pa[1]], dims })
            }
            Some(other) => return Err(Error::InvalidParameter(format!("unknown DGP kind {other:?}"))),
            None => return Err(Error::InvalidParameter("missing key kind".into())),
        };
        if let Some(extra) = kv.keys().next() {
            return Err(Error::InvalidParameter(format!("unknown key {extra}")));
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::pearson;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn table_rows_have_expected_correlations() {
        for (i, row) in TABLE1.iter().enumerate() {
            let sign = if i < 3 { -1.0 } else { 1.0 };
            assert!((row.observed_rho() - sign * 0.5547).abs() < 1e-3, "row {i}");
        }
        let printed = [-0.71, -0.55, -0.32, 0.32, 0.55, 0.71];
        for (row, rho) in TABLE1.iter().zip(printed) {
            assert!((row.noise_rho() - rho).abs() < 0.005);
        }
    }

    #[test]
    fn linear_samples_match_table_correlations() {
        for (row, want) in [(0, -0.55), (4, 0.55)] {
            let (a, y): (Vec<f64>, Vec<f64>) = TABLE1[row].sample(100_000, &mut rng(row as u64)).unwrap().into_iter().unzip();
            assert!((pearson(&a, &y).unwrap() - want).abs() < 0.01);
        }
    }

    #[test]
    fn null_linear_scm_gives_independent_normals() {
        let p = LinearScmParams::new(0.0, 0.0, 1.0).unwrap();
        let (a, y): (Vec<f64>, Vec<f64>) = p.sample(50_000, &mut rng(1)).unwrap().into_iter().unzip();
        assert!(pearson(&a, &y).unwrap().abs() < 0.02);
        let var = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
        assert!((var - 1.0).abs() < 0.03);
    }

    #[test]
    fn non_positive_definite_noise_rejected() {
        assert!(LinearScmParams::new(0.0, 1.0, 1.0).is_err());
        assert!(LinearScmParams::new(0.0, 0.0, 0.0).is_err());
        assert!(linear_ace_oracle(&TABLE1[0], 1.0).is_err());
    }

    #[test]
    fn oracle_examples() {
        for row in &TABLE1 {
            assert!(linear_ace_oracle(row, row.observed_rho()).unwrap().abs() < 1e-12);
        }
        assert!((linear_ace_oracle(&TABLE1[0], -std::f64::consts::FRAC_1_SQRT_2).unwrap() - 0.2).abs() < 1e-3);
        assert!((linear_ace_oracle(&TABLE1[5], std::f64::consts::FRAC_1_SQRT_2).unwrap() + 0.2).abs() < 1e-3);
    }

    #[test]
    fn oracle_recovers_alpha_at_noise_rho() {
        for row in &TABLE1 {
            let ace = linear_ace_oracle(row, row.noise_rho()).unwrap();
            assert!((ace - row.alpha).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_is_strictly_decreasing() {
        for row in &TABLE1 {
            let grid: Vec<f64> = (-999..=999).map(|i| i as f64 / 1000.0).collect();
            let vals: Vec<f64> = grid.iter().map(|&r| linear_ace_oracle(row, r).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn binary_deterministic_subcase() {
        let p = BinaryDgpParams { p_u: 0.0, p_a_given_u: [0.5, 0.5], p_y_given_au: [[0.0, 0.0], [1.0, 1.0]] };
        let data = p.sample(1000, &mut rng(2));
        assert!(data.iter().all(|(a, y)| a == y));
        assert_eq!(BinaryObsStats::from_pairs(&data).unwrap().q1, 1.0);
    }

    #[test]
    fn fair_coins_are_independent() {
        let p = BinaryDgpParams { p_u: 0.5, p_a_given_u: [0.5, 0.5], p_y_given_au: [[0.5, 0.5], [0.5, 0.5]] };
        let (a, y): (Vec<f64>, Vec<f64>) = p.sample(10_000, &mut rng(3)).into_iter().unzip();
        assert!(pearson(&a, &y).unwrap().abs() < 0.02);
    }

    #[test]
    fn empirical_margins_match_exact_marginalisation() {
        let p = BinaryDgpParams::random(&mut rng(4));
        let emp = BinaryObsStats::from_pairs(&p.sample(100_000, &mut rng(5))).unwrap();
        let exact = p.exact_stats();
        assert!((emp.p1 - exact.p1).abs() < 0.01);
        assert!((emp.q1 - exact.q1).abs() < 0.01);
        assert!((emp.q0 - exact.q0).abs() < 0.01);
    }

    #[test]
    fn true_ace_examples() {
        let inert = BinaryDgpParams { p_u: 0.37, p_a_given_u: [0.2, 0.9], p_y_given_au: [[0.3, 0.3], [0.8, 0.8]] };
        assert!((inert.true_ace() - 0.5).abs() < 1e-15);
        let null = BinaryDgpParams { p_u: 0.6, p_a_given_u: [0.1, 0.4], p_y_given_au: [[0.2, 0.7], [0.2, 0.7]] };
        assert_eq!(null.true_ace(), 0.0);
    }

    #[test]
    fn true_ace_matches_joint_table_enumeration() {
        let mut r = rng(6);
        for _ in 0..100 {
            let p = BinaryDgpParams::random(&mut r);
            // E[Y | do(A=a)] = Σ_u Σ_y y·P(y | a, u)·P(u), enumerated over the 8 cells
            let mut ey = [0.0; 2];
            for (a, ey_a) in ey.iter_mut().enumerate() {
                for u in 0..2 {
                    for y in 0..2 {
                        let pu = if u == 1 { p.p_u } else { 1.0 - p.p_u };
                        let py = if y == 1 { p.p_y_given_au[a][u] } else { 1.0 - p.p_y_given_au[a][u] };
                        *ey_a += y as f64 * py * pu;
                    }
                }
            }
            assert!((p.true_ace() - (ey[1] - ey[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn af_bound_examples() {
        let b = af_bounds(&BinaryObsStats { p1: 0.5, p0: 0.5, q1: 1.0, q0: 0.0 });
        assert_eq!(b, (0.0, 1.0));
        let b = af_bounds(&BinaryObsStats { p1: 1.0, p0: 0.0, q1: 0.7, q0: 0.0 });
        assert!((b.0 + 0.3).abs() < 1e-15 && (b.1 - 0.7).abs() < 1e-15);
    }

    #[test]
    fn af_bounds_contain_truth_with_unit_width() {
        let mut r = rng(7);
        for _ in 0..1000 {
            let p = BinaryDgpParams::random(&mut r);
            let (lo, hi) = af_bounds(&p.exact_stats());
            assert!((hi - lo - 1.0).abs() < 1e-12);
            let ace = p.true_ace();
            assert!(lo - 1e-12 <= ace && ace <= hi + 1e-12);
        }
    }

    #[test]
    fn categorical_examples() {
        let mut r = rng(8);
        let one = BinaryDgpParams::random(&mut r).exact_stats();
        assert_eq!(categorical_af_bounds(&[one]).unwrap(), af_bounds(&one));
        assert!(categorical_af_bounds(&[]).is_err());

        let null = CategoricalDgpParams { p_u: 0.4, p_a_given_u: [0.3, 0.6], dims: vec![[[0.2, 0.6], [0.2, 0.6]]; 7] };
        assert_eq!(null.true_ace(), 0.0);
        // each dimension: P(Y|1,u) − P(Y|0,u) = −0.1 for both u
        let harm = CategoricalDgpParams { p_u: 0.4, p_a_given_u: [0.3, 0.6], dims: vec![[[0.5, 0.7], [0.4, 0.6]]; 7] };
        assert!((harm.true_ace() + 0.7).abs() < 1e-12);

        let rows = harm.sample_dimensions(5000, &mut r);
        let (lo, hi) = categorical_af_bounds(&dimension_stats(&rows).unwrap()).unwrap();
        assert!((hi - lo - 7.0).abs() < 1e-12);
    }

    #[test]
    fn categorical_outcome_is_dimension_sum() {
        let p = CategoricalDgpParams::random(&mut rng(9));
        let data = p.sample(2000, &mut rng(10));
        assert!(data.iter().all(|&(a, y)| (a == 0.0 || a == 1.0) && (0.0..=7.0).contains(&y) && y.fract() == 0.0));
    }

    #[test]
    fn config_roundtrip_and_errors() {
        let mut r = rng(11);
        for spec in [
            DgpSpec::Linear(TABLE1[2]),
            DgpSpec::Binary(BinaryDgpParams::random(&mut r)),
            DgpSpec::Categorical(CategoricalDgpParams::random(&mut r)),
        ] {
            assert_eq!(DgpSpec::from_config(&spec.to_config()).unwrap(), spec);
        }
        assert!(DgpSpec::from_config("kind = linear\nalpha = 1\nbeta = 0\n").is_err());
        assert!(DgpSpec::from_config("kind = binary\np_u = 2\np_a_given_u = 0 0\np_y_given_au = 0 0 0 0").is_err());
        let err = DgpSpec::from_config("kind = linear\nalpha = x").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
