//! Hyperparameter settings shared by the tuners.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::Simplex;
use crate::linkage::merge::check_scalar_alpha;
use crate::linkage::MergeFamily;

/// Serde for reals that may be `±inf`: finite values as numbers, infinities as `"inf"` / `"-inf"`.
pub mod ext_real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => parse(&t).map_err(de::Error::custom),
        }
    }

    pub fn parse(t: &str) -> Result<f64, String> {
        match t.trim() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
            "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            other => other.parse::<f64>().map_err(|e| format!("bad real {other:?}: {e}")),
        }
    }

    pub fn format(v: f64) -> String {
        if v.is_infinite() {
            if v > 0.0 { "inf".into() } else { "-inf".into() }
        } else {
            format!("{v}")
        }
    }
}

pub mod ext_real_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    struct Wrapped(#[serde(with = "super::ext_real")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            if x.is_infinite() {
                seq.serialize_element(if *x > 0.0 { "inf" } else { "-inf" })?;
            } else {
                seq.serialize_element(x)?;
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw: Vec<Wrapped> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|w| w.0).collect())
    }
}

/// One point in a task's hyperparameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ParamPoint {
    /// M1 / M2 linkage: exponent and metric weights.
    LinkageScalar {
        #[serde(with = "ext_real")]
        alpha: f64,
        beta: Simplex,
    },
    /// M3 linkage: one exponent per metric.
    LinkageVector {
        #[serde(with = "ext_real_vec")]
        alpha: Vec<f64>,
    },
    /// RBF bandwidth and metric weights.
    Ssl { sigma: f64, beta: Simplex },
    LogReg { lambda: f64 },
}

impl ParamPoint {
    pub fn validate(&self) -> Result<()> {
        match self {
            ParamPoint::LinkageScalar { alpha, .. } => check_scalar_alpha(*alpha),
            ParamPoint::LinkageVector { alpha } => MergeFamily::Geometric { alpha: alpha.clone() }.validate(),
            ParamPoint::Ssl { sigma, .. } => {
                if *sigma > 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("sigma", format!("must be positive, got {sigma}")))
                }
            }
            ParamPoint::LogReg { lambda } => {
                if lambda.is_finite() && *lambda > 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid("lambda", format!("must be positive, got {lambda}")))
                }
            }
        }
    }

    /// Flat coordinates used for lexicographic tie-breaking and CSV output.
    pub fn coords(&self) -> Vec<f64> {
        match self {
            ParamPoint::LinkageScalar { alpha, beta } => {
                std::iter::once(*alpha).chain(beta.weights().iter().copied()).collect()
            }
            ParamPoint::LinkageVector { alpha } => alpha.clone(),
            ParamPoint::Ssl { sigma, beta } => {
                std::iter::once(*sigma).chain(beta.weights().iter().copied()).collect()
            }
            ParamPoint::LogReg { lambda } => vec![*lambda],
        }
    }

    /// Column names matching [`ParamPoint::coords`].
    pub fn coord_names(&self) -> Vec<String> {
        let betas = |first: &str, n: usize| {
            std::iter::once(first.to_string())
                .chain((0..n).map(|i| format!("beta{i}")))
                .collect()
        };
        match self {
            ParamPoint::LinkageScalar { beta, .. } => betas("alpha", beta.len()),
            ParamPoint::LinkageVector { alpha } => (0..alpha.len()).map(|i| format!("alpha{i}")).collect(),
            ParamPoint::Ssl { beta, .. } => betas("sigma", beta.len()),
            ParamPoint::LogReg { .. } => vec!["lambda".into()],
        }
    }

    /// Total order: lexicographic on [`ParamPoint::coords`] using IEEE total order.
    pub fn lex_cmp(&self, other: &ParamPoint) -> Ordering {
        let (a, b) = (self.coords(), other.coords());
        for (x, y) in a.iter().zip(&b) {
            match x.total_cmp(y) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        a.len().cmp(&b.len())
    }

    /// Bit-exact hash key.
    pub fn key(&self) -> Vec<u64> {
        self.coords().iter().map(|v| v.to_bits()).collect()
    }
}

impl fmt::Display for ParamPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coord_names()
            .iter()
            .zip(self.coords())
            .map(|(n, v)| format!("{n}={}", ext_real::format(v)))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_alpha_round_trips_through_json() {
        let p = ParamPoint::LinkageScalar {
            alpha: f64::NEG_INFINITY,
            beta: Simplex::uniform(2),
        };
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"-inf\""));
        let back: ParamPoint = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn bad_beta_length_sum_is_rejected_on_parse() {
        let text = r#"{"kind":"ssl","sigma":1.0,"beta":[0.5,0.6]}"#;
        assert!(serde_json::from_str::<ParamPoint>(text).is_err());
    }

    #[test]
    fn validation_guards() {
        let b = Simplex::uniform(1);
        assert!(ParamPoint::LinkageScalar { alpha: 1e-7, beta: b.clone() }.validate().is_err());
        assert!(ParamPoint::Ssl { sigma: 0.0, beta: b }.validate().is_err());
        assert!(ParamPoint::LinkageVector { alpha: vec![1.0, -1.0] }.validate().is_err());
    }

    #[test]
    fn lexicographic_order() {
        let a = ParamPoint::LogReg { lambda: 0.1 };
        let b = ParamPoint::LogReg { lambda: 0.2 };
        assert_eq!(a.lex_cmp(&b), Ordering::Less);
        let c = ParamPoint::LinkageScalar { alpha: f64::NEG_INFINITY, beta: Simplex::uniform(1) };
        let d = ParamPoint::LinkageScalar { alpha: -3.0, beta: Simplex::uniform(1) };
        assert_eq!(c.lex_cmp(&d), Ordering::Less);
    }
}
