//! Sparse symmetric two-component Gaussian mixtures `X = ε(a + N)`.

pub(crate) mod io;

pub use io::{load_dataset, save_dataset};

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::risk::{dot, norm2};
use crate::rng::{stream, streams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Support `{0, …, s−1}`.
    #[default]
    FirstS,
    /// Support drawn uniformly without replacement.
    Random,
}

impl std::str::FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first_s" | "first-s" => Ok(Placement::FirstS),
            "random" => Ok(Placement::Random),
            other => Err(Error::domain(format!(
                "unknown placement {other:?} (expected first_s | random)"
            ))),
        }
    }
}

/// Ground truth of a mixture: the separation vector and its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub d: usize,
    pub s: usize,
    pub a: Vec<f64>,
    pub a_norm2: f64,
    pub a_norm_inf: f64,
    /// Sorted indices of the non-zero coordinates of `a`.
    pub support: Vec<usize>,
}

impl MixtureSpec {
    /// Spec from an explicit separation vector.
    pub fn from_vector(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::domain("separation vector is empty"));
        }
        for (i, &v) in a.iter().enumerate() {
            ensure_finite(&format!("a[{i}]"), v)?;
        }
        let support: Vec<usize> = (0..a.len()).filter(|&i| a[i] != 0.0).collect();
        Ok(MixtureSpec {
            d: a.len(),
            s: support.len(),
            a_norm2: norm2(&a),
            a_norm_inf: a.iter().fold(0.0, |m, v| m.max(v.abs())),
            support,
            a,
        })
    }

    pub fn in_support(&self, i: usize) -> bool {
        self.support.binary_search(&i).is_ok()
    }
}

/// `s`-sparse `a` with equal-magnitude positive coordinates `‖a‖₂/√s` on the support.
pub fn make_spec(d: usize, s: usize, a_norm2: f64, placement: Placement, seed: u64) -> Result<MixtureSpec> {
    if d == 0 {
        return Err(Error::domain("dimension d must be at least 1"));
    }
    if s == 0 || s > d {
        return Err(Error::domain(format!(
            "sparsity s must satisfy 1 <= s <= d = {d}, got {s}"
        )));
    }
    if !(a_norm2 > 0.0 && a_norm2.is_finite()) {
        return Err(Error::domain(format!("a_norm must be positive, got {a_norm2}")));
    }
    let mut support: Vec<usize> = match placement {
        Placement::FirstS => (0..s).collect(),
        Placement::Random => {
            let mut rng = stream(seed, streams::SPEC_PLACEMENT);
            index::sample(&mut rng, d, s).into_vec()
        }
    };
    support.sort_unstable();
    let magnitude = a_norm2 / (s as f64).sqrt();
    let mut a = vec![0.0; d];
    for &i in &support {
        a[i] = magnitude;
    }
    Ok(MixtureSpec {
        d,
        s,
        a,
        a_norm2,
        a_norm_inf: magnitude,
        support,
    })
}

/// The `n × d` table of observations, row-major. This is all an estimator gets to see.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl Observations {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::domain(format!("empty table: n = {n}, d = {d}")));
        }
        if values.len() != n * d {
            return Err(Error::domain(format!(
                "table has {} values, expected n·d = {}",
                values.len(),
                n * d
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite value at row {}, column {}",
                k / d,
                k % d
            )));
        }
        Ok(Observations { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::domain("rows have different lengths"));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.d)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub seed: u64,
    observations: Observations,
    labels: Option<Vec<i8>>,
}

impl Dataset {
    pub fn new(observations: Observations, seed: u64, labels: Option<Vec<i8>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != observations.n() {
                return Err(Error::domain(format!(
                    "{} labels for {} rows",
                    l.len(),
                    observations.n()
                )));
            }
            if l.iter().any(|&v| v != 1 && v != -1) {
                return Err(Error::domain("labels must be +1 or -1"));
            }
        }
        Ok(Dataset {
            seed,
            observations,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.observations.n()
    }

    pub fn d(&self) -> usize {
        self.observations.d()
    }

    pub fn observations(&self) -> &Observations {
        &self.observations
    }

    /// The drawn signs `ε`, for evaluation only.
    pub fn labels(&self) -> Option<&[i8]> {
        self.labels.as_deref()
    }
}

/// Draws `n` rows `εᵢ(a + Nᵢ)`, `εᵢ ∼ Rad(½)`, `Nᵢ ∼ N(0, I_d)`.
pub fn sample(spec: &MixtureSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let d = spec.d;
    let mut rng = stream(seed, streams::SAMPLE);
    let mut values = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let eps: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let e = f64::from(eps);
        for &aj in &spec.a {
            let z: f64 = rng.sample(StandardNormal);
            values.push(e * (aj + z));
        }
        labels.push(eps);
    }
    Dataset::new(Observations::new(n, d, values)?, seed, Some(labels))
}

/// `sign(Xᵗa)` with zeros sent to `+1`.
pub fn bayes_labels(obs: &Observations, spec: &MixtureSpec) -> Result<Vec<i8>> {
    if obs.d() != spec.d {
        return Err(Error::domain(format!(
            "dimension mismatch: data has d = {}, spec has d = {}",
            obs.d(),
            spec.d
        )));
    }
    Ok(obs
        .rows()
        .map(|x| if dot(x, &spec.a) >= 0.0 { 1 } else { -1 })
        .collect())
}

/// Fraction of disagreements, minimised over a global label flip.
pub fn misclassification(pred: &[i8], truth: &[i8]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::domain(format!(
            "label vectors must be non-empty and of equal length ({} vs {})",
            pred.len(),
            truth.len()
        )));
    }
    let wrong = pred.iter().zip(truth).filter(|(p, t)| p != t).count() as f64;
    let rate = wrong / pred.len() as f64;
    Ok(rate.min(1.0 - rate))
}
