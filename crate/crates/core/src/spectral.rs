//! Spectral data `{λ_n, α_n}` and its JSON form.

use crate::error::{Result, SlError};
use crate::scalar::principal_rho;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Measured,
    ModelTail,
}

/// One eigenvalue with its weight number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDatum {
    pub lambda: f64,
    pub alpha: f64,
    /// `√λ` with `arg ρ ∈ [−π/2, π/2)`.
    pub rho: Complex64,
    pub source: Source,
}

impl SpectralDatum {
    pub fn new(lambda: f64, alpha: f64, source: Source) -> Result<Self> {
        if !lambda.is_finite() || !alpha.is_finite() {
            return Err(SlError::Invalid(format!(
                "non-finite datum lambda={lambda}, alpha={alpha}"
            )));
        }
        if alpha == 0.0 {
            return Err(SlError::Invalid(format!("alpha = 0 at lambda = {lambda}")));
        }
        Ok(Self::raw(lambda, alpha, source))
    }

    /// No checks; used when loading data that is still to be validated.
    pub fn raw(lambda: f64, alpha: f64, source: Source) -> Self {
        Self {
            lambda,
            alpha,
            rho: principal_rho(lambda),
            source,
        }
    }
}

/// Spectral data indexed `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSequence {
    data: Vec<SpectralDatum>,
    all_simple: bool,
}

impl SpectralSequence {
    pub fn new(data: Vec<SpectralDatum>) -> Self {
        let all_simple = data
            .iter()
            .enumerate()
            .all(|(n, a)| data[n + 1..].iter().all(|b| b.lambda != a.lambda));
        Self { data, all_simple }
    }

    pub fn data(&self) -> &[SpectralDatum] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, n: usize) -> Option<&SpectralDatum> {
        self.data.get(n)
    }

    pub fn all_simple(&self) -> bool {
        self.all_simple
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.data.iter().map(|d| d.lambda).collect()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.data.iter().map(|d| d.alpha).collect()
    }

    /// First `count` entries.
    pub fn truncated(&self, count: usize) -> SpectralSequence {
        SpectralSequence::new(self.data[..count.min(self.data.len())].to_vec())
    }

    /// Real eigenvalues in increasing order.
    pub fn is_ordered(&self) -> bool {
        self.data.windows(2).all(|w| w[0].lambda <= w[1].lambda)
    }

    pub fn to_json(&self) -> Result<String> {
        let records: Vec<Record> = self
            .data
            .iter()
            .enumerate()
            .map(|(n, d)| Record {
                n,
                lambda: d.lambda,
                alpha: d.alpha,
                source: d.source,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&records)?)
    }

    /// Parses the JSON array form. Entries are sorted by `n`, which must run
    /// `0..=N` without gaps. Values are not validated here; see
    /// [`crate::inverse::validate_data`].
    pub fn from_json(text: &str) -> Result<Self> {
        let mut records: Vec<Record> = serde_json::from_str(text)?;
        records.sort_by_key(|r| r.n);
        for (k, r) in records.iter().enumerate() {
            if r.n != k {
                return Err(SlError::Parse(format!("expected n = {k}, found n = {}", r.n)));
            }
        }
        Ok(Self::new(
            records
                .into_iter()
                .map(|r| SpectralDatum::raw(r.lambda, r.alpha, r.source))
                .collect(),
        ))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    n: usize,
    lambda: f64,
    alpha: f64,
    source: Source,
}

/// Spectral data of the model problem `σ ≡ 0, H = 0`: `λ_n = n²`,
/// `α_0 = 1/π`, `α_n = 2/π`.
pub fn model_spectral_data(n_max: usize) -> SpectralSequence {
    SpectralSequence::new(
        (0..=n_max)
            .map(|n| SpectralDatum::raw((n * n) as f64, model_alpha(n), Source::ModelTail))
            .collect(),
    )
}

pub fn model_alpha(n: usize) -> f64 {
    if n == 0 {
        1.0 / PI
    } else {
        2.0 / PI
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn model_data_small() {
        let d = model_spectral_data(2);
        assert_eq!(d.lambdas(), vec![0.0, 1.0, 4.0]);
        assert_eq!(d.alphas(), vec![1.0 / PI, 2.0 / PI, 2.0 / PI]);
        assert!(d.all_simple() && d.is_ordered());
    }

    #[test]
    fn json_shape() {
        let d = model_spectral_data(1);
        let text = d.to_json().unwrap();
        assert!(text.contains("\"source\": \"model-tail\""));
        let back = SpectralSequence::from_json(&text).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn json_rejects_gaps() {
        let text = r#"[{"n":0,"lambda":0,"alpha":0.3,"source":"measured"},
                       {"n":2,"lambda":4,"alpha":0.6,"source":"measured"}]"#;
        assert!(matches!(
            SpectralSequence::from_json(text),
            Err(SlError::Parse(_))
        ));
    }

    #[test]
    fn zero_alpha_rejected_by_checked_constructor() {
        assert!(SpectralDatum::new(1.0, 0.0, Source::Measured).is_err());
    }

    #[test]
    fn duplicate_lambda_clears_simple_flag() {
        let s = SpectralSequence::new(vec![
            SpectralDatum::raw(1.0, 0.5, Source::Measured),
            SpectralDatum::raw(1.0, 0.5, Source::Measured),
        ]);
        assert!(!s.all_simple());
    }

    proptest! {
        #[test]
        fn rho_squares_to_lambda(lambda in -1e6f64..1e6) {
            let d = SpectralDatum::raw(lambda, 1.0, Source::Measured);
            let err = (d.rho * d.rho - lambda).norm();
            prop_assert!(err <= 1e-12 * lambda.abs().max(1.0));
            prop_assert!(d.rho.arg() >= -std::f64::consts::FRAC_PI_2);
            prop_assert!(d.rho.arg() < std::f64::consts::FRAC_PI_2);
        }

        #[test]
        fn json_round_trip(vals in proptest::collection::vec((-50.0f64..500.0, 0.01f64..2.0), 1..12)) {
            let seq = SpectralSequence::new(vals.iter()
                .map(|&(l, a)| SpectralDatum::raw(l, a, Source::Measured)).collect());
            let back = SpectralSequence::from_json(&seq.to_json().unwrap()).unwrap();
            prop_assert_eq!(back, seq);
        }
    }
}
