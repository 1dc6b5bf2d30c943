//! Sentence-level GLEU and the expected / max GLEU metrics over weighted
//! hypothesis sets.
//!
//! Internally GLEU lives on [0, 1]; dataset-level aggregates are reported on
//! the 0-100 scale.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{TranslationRecord, Valid};

/// Highest n-gram order used by the default scorer.
pub const GLEU_MAX_ORDER: usize = 4;

/// A sentence-level similarity in [0, 1] between hypothesis and reference tokens.
pub trait SentenceScore: Sync {
    fn score(&self, hypothesis: &[String], reference: &[String]) -> Result<f64>;
}

/// Sentence GLEU over pooled n-gram orders `1..=max_order`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gleu {
    pub max_order: usize,
}

impl Default for Gleu {
    fn default() -> Self {
        Gleu { max_order: GLEU_MAX_ORDER }
    }
}

impl SentenceScore for Gleu {
    fn score(&self, hypothesis: &[String], reference: &[String]) -> Result<f64> {
        sentence_gleu_with_order(hypothesis, reference, self.max_order)
    }
}

fn ngram_counts(tokens: &[String], max_order: usize) -> (HashMap<&[String], usize>, usize) {
    let mut counts = HashMap::new();
    let mut total = 0;
    for n in 1..=max_order.min(tokens.len()) {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
            total += 1;
        }
    }
    (counts, total)
}

pub fn sentence_gleu_with_order(hypothesis: &[String], reference: &[String], max_order: usize) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    if hypothesis.is_empty() {
        return Ok(0.0);
    }
    let (hyp, hyp_total) = ngram_counts(hypothesis, max_order);
    let (reference, ref_total) = ngram_counts(reference, max_order);
    let matches: usize = hyp.iter().map(|(gram, &c)| c.min(reference.get(gram).copied().unwrap_or(0))).sum();
    let precision = matches as f64 / hyp_total as f64;
    let recall = matches as f64 / ref_total as f64;
    Ok(precision.min(recall))
}

/// GLEU with n-gram orders 1..=4.
pub fn sentence_gleu(hypothesis: &[String], reference: &[String]) -> Result<f64> {
    sentence_gleu_with_order(hypothesis, reference, GLEU_MAX_ORDER)
}

fn hypothesis_scores(record: &TranslationRecord, scorer: &dyn SentenceScore) -> Vec<f64> {
    record
        .hypotheses
        .iter()
        .map(|h| scorer.score(h, &record.reference).expect("validated record has a reference"))
        .collect()
}

/// Confidence-weighted GLEU of one record, on [0, 1].
pub fn record_expected_gleu(record: &Valid<TranslationRecord>, scorer: &dyn SentenceScore) -> f64 {
    let mut total = 0.0;
    for (s, w) in hypothesis_scores(record, scorer).iter().zip(&record.weights) {
        total += s * w;
    }
    // Weights sum to one only within tolerance.
    total.clamp(0.0, 1.0)
}

pub fn record_max_gleu(record: &Valid<TranslationRecord>, scorer: &dyn SentenceScore) -> f64 {
    hypothesis_scores(record, scorer).into_iter().fold(0.0, f64::max)
}

/// Per-record error used for retention: 100 minus expected GLEU x 100.
pub fn record_egleu_error(record: &Valid<TranslationRecord>, scorer: &dyn SentenceScore) -> f64 {
    100.0 - 100.0 * record_expected_gleu(record, scorer)
}

fn dataset_mean<F>(records: &[Valid<TranslationRecord>], per_record: F) -> Result<f64>
where
    F: Fn(&Valid<TranslationRecord>) -> f64,
{
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for r in records {
        total += per_record(r);
    }
    Ok(100.0 * total / records.len() as f64)
}

pub fn egleu_with(records: &[Valid<TranslationRecord>], scorer: &dyn SentenceScore) -> Result<f64> {
    dataset_mean(records, |r| record_expected_gleu(r, scorer))
}

pub fn max_gleu_with(records: &[Valid<TranslationRecord>], scorer: &dyn SentenceScore) -> Result<f64> {
    dataset_mean(records, |r| record_max_gleu(r, scorer))
}

pub fn egleu(records: &[Valid<TranslationRecord>]) -> Result<f64> {
    egleu_with(records, &Gleu::default())
}

pub fn max_gleu(records: &[Valid<TranslationRecord>]) -> Result<f64> {
    max_gleu_with(records, &Gleu::default())
}

pub fn egleu_error(records: &[Valid<TranslationRecord>]) -> Result<f64> {
    Ok(100.0 - egleu(records)?)
}

/// Shannon entropy (nats) of the hypothesis weights; the fallback
/// uncertainty for records that do not carry one.
pub fn weight_entropy(weights: &[f64]) -> f64 {
    weights.iter().filter(|&&w| w > 0.0).map(|&w| -w * w.ln()).sum()
}

pub fn record_uncertainty(record: &TranslationRecord) -> f64 {
    record.uncertainty.unwrap_or_else(|| weight_entropy(&record.weights))
}
