//! Parameterized cluster-to-cluster merge distances.
//!
//! Powers are evaluated as `exp(alpha * ln d)` and sums of powers in
//! log-sum-exp form, so large `|alpha|` neither overflows nor underflows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{DistanceMatrix, ALPHA_GUARD};
use crate::numerics::{log_add_exp, log_sum_exp};

/// Exponents with `|alpha|` above this are evaluated as exact min / max.
pub const ALPHA_SNAP: f64 = 64.0;

/// The three linkage families, labelled M1, M2 and M3 in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum MergeFamily {
    /// M1: `(min^a + max^a)^(1/a)` over cross-cluster distances.
    #[serde(rename = "M1")]
    MinMax {
        #[serde(with = "crate::param::ext_real")]
        alpha: f64,
    },
    /// M2: power mean of cross-cluster distances.
    #[serde(rename = "M2")]
    PowerMean {
        #[serde(with = "crate::param::ext_real")]
        alpha: f64,
    },
    /// M3: mean over pairs of `prod_i d_i^(a_i)`, raised to `1 / sum_i a_i`.
    #[serde(rename = "M3")]
    Geometric {
        #[serde(with = "crate::param::ext_real_vec")]
        alpha: Vec<f64>,
    },
}

impl MergeFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            MergeFamily::MinMax { alpha } | MergeFamily::PowerMean { alpha } => {
                check_scalar_alpha(*alpha)
            }
            MergeFamily::Geometric { alpha } => {
                if alpha.is_empty() {
                    return Err(Error::invalid("alpha", "need one exponent per metric"));
                }
                if alpha.iter().any(|a| a.is_nan()) {
                    return Err(Error::invalid("alpha", "NaN exponent"));
                }
                let infinite = alpha.iter().filter(|a| a.is_infinite()).count();
                if infinite > 0 {
                    if infinite > 1 || alpha.iter().any(|&a| a.is_finite() && a != 0.0) {
                        return Err(Error::invalid(
                            "alpha",
                            "an infinite exponent is only allowed with all other exponents zero",
                        ));
                    }
                    return Ok(());
                }
                let sum: f64 = alpha.iter().sum();
                if sum.abs() < ALPHA_GUARD {
                    return Err(Error::invalid(
                        "alpha",
                        format!("exponent sum {sum} is within {ALPHA_GUARD} of zero"),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Number of distance matrices the family consumes (1 for the scalar families).
    pub fn is_multi_metric(&self) -> bool {
        matches!(self, MergeFamily::Geometric { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            MergeFamily::MinMax { .. } => "M1",
            MergeFamily::PowerMean { .. } => "M2",
            MergeFamily::Geometric { .. } => "M3",
        }
    }
}

pub(crate) fn check_scalar_alpha(alpha: f64) -> Result<()> {
    if alpha.is_nan() {
        return Err(Error::invalid("alpha", "NaN"));
    }
    if alpha.is_finite() && alpha.abs() < ALPHA_GUARD {
        return Err(Error::invalid(
            "alpha",
            format!("|alpha| = {} is below the guard {ALPHA_GUARD}", alpha.abs()),
        ));
    }
    Ok(())
}

fn snap(alpha: f64) -> f64 {
    if alpha > ALPHA_SNAP {
        f64::INFINITY
    } else if alpha < -ALPHA_SNAP {
        f64::NEG_INFINITY
    } else {
        alpha
    }
}

/// Per-pair evaluation rule, resolved once from a family and its matrices.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Kernel<'a> {
    /// Exact min (`take_max == false`) or max of one matrix.
    Extreme { d: &'a DistanceMatrix, take_max: bool },
    MinMax { d: &'a DistanceMatrix, alpha: f64 },
    PowerMean { d: &'a DistanceMatrix, alpha: f64 },
    Geometric {
        ds: &'a [DistanceMatrix],
        alpha: &'a [f64],
        exponent_sum: f64,
    },
}

/// Aggregate over the cross pairs of two clusters; closed under union.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PairStats {
    pub min: f64,
    pub max: f64,
    /// `ln sum exp(term)` where `term` is the log of the per-pair power.
    pub log_sum: f64,
    pub count: f64,
}

impl PairStats {
    pub fn union(&self, other: &PairStats) -> PairStats {
        PairStats {
            min: self.min.min(other.min),
            max: self.max.max(other.max),
            log_sum: log_add_exp(self.log_sum, other.log_sum),
            count: self.count + other.count,
        }
    }
}

fn scaled_log(alpha: f64, d: f64, a: usize, b: usize) -> Result<f64> {
    if d == 0.0 {
        if alpha < 0.0 {
            return Err(Error::Domain(format!(
                "zero distance between points {a} and {b} raised to negative power {alpha}"
            )));
        }
        return Ok(f64::NEG_INFINITY);
    }
    Ok(alpha * d.ln())
}

impl<'a> Kernel<'a> {
    pub fn new(family: &'a MergeFamily, distances: &'a [DistanceMatrix]) -> Result<Self> {
        family.validate()?;
        match family {
            MergeFamily::MinMax { alpha } | MergeFamily::PowerMean { alpha } => {
                if distances.len() != 1 {
                    return Err(Error::invalid(
                        "distances",
                        format!(
                            "{} expects one (combined) matrix, got {}",
                            family.label(),
                            distances.len()
                        ),
                    ));
                }
                let d = &distances[0];
                let a = snap(*alpha);
                Ok(if a.is_infinite() {
                    Kernel::Extreme { d, take_max: a > 0.0 }
                } else if matches!(family, MergeFamily::MinMax { .. }) {
                    Kernel::MinMax { d, alpha: a }
                } else {
                    Kernel::PowerMean { d, alpha: a }
                })
            }
            MergeFamily::Geometric { alpha } => {
                if alpha.len() != distances.len() {
                    return Err(Error::invalid(
                        "alpha",
                        format!("{} exponents for {} metrics", alpha.len(), distances.len()),
                    ));
                }
                if let Some(i) = alpha.iter().position(|a| a.is_infinite()) {
                    return Ok(Kernel::Extreme {
                        d: &distances[i],
                        take_max: alpha[i] > 0.0,
                    });
                }
                Ok(Kernel::Geometric {
                    ds: distances,
                    alpha,
                    exponent_sum: alpha.iter().sum(),
                })
            }
        }
    }

    /// Log of the per-pair power `d^alpha` (or `prod d_i^alpha_i`).
    fn pair_term(&self, a: usize, b: usize) -> Result<f64> {
        match *self {
            Kernel::Extreme { .. } => Ok(0.0),
            Kernel::MinMax { .. } => Ok(0.0),
            Kernel::PowerMean { d, alpha } => scaled_log(alpha, d.get(a, b), a, b),
            Kernel::Geometric { ds, alpha, .. } => {
                let mut s = 0.0;
                for (d, &al) in ds.iter().zip(alpha) {
                    if al != 0.0 {
                        s += scaled_log(al, d.get(a, b), a, b)?;
                    }
                }
                Ok(s)
            }
        }
    }

    fn pair_value(&self, a: usize, b: usize) -> f64 {
        match *self {
            Kernel::Extreme { d, .. } | Kernel::MinMax { d, .. } | Kernel::PowerMean { d, .. } => {
                d.get(a, b)
            }
            // min/max are unused for finite M3
            Kernel::Geometric { ds, .. } => ds[0].get(a, b),
        }
    }

    pub fn pair_stats(&self, a: usize, b: usize) -> Result<PairStats> {
        let v = self.pair_value(a, b);
        if let Kernel::MinMax { alpha, .. } = *self {
            scaled_log(alpha, v, a, b)?;
        }
        Ok(PairStats {
            min: v,
            max: v,
            log_sum: self.pair_term(a, b)?,
            count: 1.0,
        })
    }

    pub fn value(&self, s: &PairStats) -> f64 {
        match *self {
            Kernel::Extreme { take_max, .. } => {
                if take_max {
                    s.max
                } else {
                    s.min
                }
            }
            Kernel::MinMax { alpha, .. } => {
                let lmin = if s.min == 0.0 { f64::NEG_INFINITY } else { alpha * s.min.ln() };
                let lmax = if s.max == 0.0 { f64::NEG_INFINITY } else { alpha * s.max.ln() };
                (log_add_exp(lmin, lmax) / alpha).exp()
            }
            Kernel::PowerMean { alpha, .. } => ((s.log_sum - s.count.ln()) / alpha).exp(),
            Kernel::Geometric { exponent_sum, .. } => {
                ((s.log_sum - s.count.ln()) / exponent_sum).exp()
            }
        }
    }
}

/// Merge distance between disjoint nonempty point sets `a` and `b`.
///
/// `distances` is the single combined matrix for M1/M2 and the full list of
/// `L` matrices for M3.
pub fn merge_distance(
    family: &MergeFamily,
    a: &[usize],
    b: &[usize],
    distances: &[DistanceMatrix],
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("clusters", "both clusters must be nonempty"));
    }
    if a.iter().any(|x| b.contains(x)) {
        return Err(Error::invalid("clusters", "clusters must be disjoint"));
    }
    let kernel = Kernel::new(family, distances)?;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut terms = Vec::with_capacity(a.len() * b.len());
    for &i in a {
        for &j in b {
            let s = kernel.pair_stats(i, j)?;
            min = min.min(s.min);
            max = max.max(s.max);
            terms.push(s.log_sum);
        }
    }
    let stats = PairStats {
        min,
        max,
        log_sum: log_sum_exp(&terms),
        count: terms.len() as f64,
    };
    Ok(kernel.value(&stats))
}
