//! Predictive-performance and ensemble uncertainty measures for scalar
//! regression with a K-member Gaussian ensemble.
//!
//! The knowledge-uncertainty measure `epkl` is the expected pairwise
//! KL-divergence between ensemble members, reconstructed with the
//! closed-form univariate Gaussian KL and averaged over the K(K-1) ordered
//! pairs (0 for a single member).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RegressionRecord, Valid};
use crate::rng::unit_uniform_for;

/// Lower bound applied to variances inside the KL divergence.
pub const KL_VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyMeasureKind {
    /// Mean of member variances (data uncertainty).
    Mvar,
    /// Population variance of member means (knowledge uncertainty).
    Varm,
    /// mvar + varm (total uncertainty).
    Tvar,
    /// Expected pairwise KL-divergence between members.
    Epkl,
    /// Predicted variance of member 0 alone.
    SingleVariance,
    /// Seeded uniform noise, the non-informative baseline.
    Random,
}

impl UncertaintyMeasureKind {
    pub const ALL: [UncertaintyMeasureKind; 6] = [
        UncertaintyMeasureKind::Mvar,
        UncertaintyMeasureKind::Varm,
        UncertaintyMeasureKind::Tvar,
        UncertaintyMeasureKind::Epkl,
        UncertaintyMeasureKind::SingleVariance,
        UncertaintyMeasureKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UncertaintyMeasureKind::Mvar => "mvar",
            UncertaintyMeasureKind::Varm => "varm",
            UncertaintyMeasureKind::Tvar => "tvar",
            UncertaintyMeasureKind::Epkl => "epkl",
            UncertaintyMeasureKind::SingleVariance => "single_variance",
            UncertaintyMeasureKind::Random => "random",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Point prediction of the ensemble: the mean of member means.
pub fn ensemble_mean(record: &Valid<RegressionRecord>) -> f64 {
    let mut total = 0.0;
    for m in &record.members {
        total += m.mean;
    }
    total / record.members.len() as f64
}

pub fn per_sample_mse(record: &Valid<RegressionRecord>) -> f64 {
    let err = ensemble_mean(record) - record.target;
    err * err
}

pub fn rmse(records: &[Valid<RegressionRecord>]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for r in records {
        total += per_sample_mse(r);
    }
    Ok((total / records.len() as f64).sqrt())
}

pub fn mae(records: &[Valid<RegressionRecord>]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for r in records {
        total += (ensemble_mean(r) - r.target).abs();
    }
    Ok(total / records.len() as f64)
}

/// Data/knowledge/total variance decomposition of one record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceDecomposition {
    pub mvar: f64,
    pub varm: f64,
    pub tvar: f64,
}

pub fn variance_decomposition(record: &Valid<RegressionRecord>) -> VarianceDecomposition {
    let k = record.members.len() as f64;
    let mean = ensemble_mean(record);
    let mut var_sum = 0.0;
    let mut spread = 0.0;
    for m in &record.members {
        var_sum += m.variance;
        spread += (m.mean - mean) * (m.mean - mean);
    }
    let mvar = var_sum / k;
    let varm = spread / k;
    VarianceDecomposition { mvar, varm, tvar: mvar + varm }
}

/// KL(N(mu_p, var_p) || N(mu_q, var_q)).
pub fn gaussian_kl(mu_p: f64, var_p: f64, mu_q: f64, var_q: f64) -> f64 {
    let vp = var_p.max(KL_VARIANCE_FLOOR);
    let vq = var_q.max(KL_VARIANCE_FLOOR);
    let d = mu_p - mu_q;
    0.5 * ((vq / vp).ln() + (vp + d * d) / vq - 1.0)
}

pub fn epkl(record: &Valid<RegressionRecord>) -> f64 {
    let k = record.members.len();
    if k < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for (i, p) in record.members.iter().enumerate() {
        for (j, q) in record.members.iter().enumerate() {
            if i != j {
                total += gaussian_kl(p.mean, p.variance, q.mean, q.variance);
            }
        }
    }
    // Rounding can leave a tiny negative residue for identical members.
    (total / (k * (k - 1)) as f64).max(0.0)
}

/// Scalar uncertainty of a record under the chosen measure. `Random`
/// requires a seed and is keyed on the record id, so it does not depend on
/// the order records are visited in.
pub fn uncertainty(
    record: &Valid<RegressionRecord>,
    kind: UncertaintyMeasureKind,
    rng_seed: Option<u64>,
) -> Result<f64> {
    Ok(match kind {
        UncertaintyMeasureKind::Mvar => variance_decomposition(record).mvar,
        UncertaintyMeasureKind::Varm => variance_decomposition(record).varm,
        UncertaintyMeasureKind::Tvar => variance_decomposition(record).tvar,
        UncertaintyMeasureKind::Epkl => epkl(record),
        UncertaintyMeasureKind::SingleVariance => record.members[0].variance,
        UncertaintyMeasureKind::Random => {
            let seed = rng_seed.ok_or_else(|| Error::Config("the random uncertainty measure needs a seed".into()))?;
            unit_uniform_for(seed, &record.id)
        }
    })
}
