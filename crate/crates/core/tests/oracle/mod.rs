//! Brute-force reference implementations written against plain slices.
//! They share no code with the library and favour the most literal reading
//! of each definition over speed.

#![allow(dead_code)]

use std::collections::HashMap;

pub type Xy = (f64, f64);

pub fn ade(pred: &[Xy], truth: &[Xy]) -> f64 {
    let mut total = 0.0;
    for t in 0..pred.len() {
        total += ((pred[t].0 - truth[t].0).powi(2) + (pred[t].1 - truth[t].1).powi(2)).sqrt();
    }
    total / pred.len() as f64
}

pub fn fde(pred: &[Xy], truth: &[Xy]) -> f64 {
    let t = pred.len() - 1;
    ((pred[t].0 - truth[t].0).powi(2) + (pred[t].1 - truth[t].1).powi(2)).sqrt()
}

pub fn min_of(values: &[f64]) -> f64 {
    let mut best = values[0];
    for &v in values {
        if v < best {
            best = v;
        }
    }
    best
}

pub fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// First index holding the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

pub fn weighted(values: &[f64], weights: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..values.len() {
        total += values[i] * weights[i];
    }
    total
}

// ------------------------------------------------------------------ GLEU

fn ngrams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n).map(|i| tokens[i..i + n].to_vec()).collect()
}

fn count(haystack: &[Vec<String>], needle: &[String]) -> usize {
    haystack.iter().filter(|g| g.as_slice() == needle).count()
}

/// min(precision, recall) over pooled n-gram counts of orders 1..=4.
pub fn gleu(hyp: &[String], reference: &[String]) -> f64 {
    let mut matches = 0usize;
    let mut hyp_total = 0usize;
    let mut ref_total = 0usize;
    for n in 1..=4 {
        let h = ngrams(hyp, n);
        let r = ngrams(reference, n);
        hyp_total += h.len();
        ref_total += r.len();
        let mut seen: Vec<Vec<String>> = Vec::new();
        for g in &h {
            if seen.contains(g) {
                continue;
            }
            seen.push(g.clone());
            matches += count(&h, g).min(count(&r, g));
        }
    }
    if hyp_total == 0 || ref_total == 0 {
        return 0.0;
    }
    let precision = matches as f64 / hyp_total as f64;
    let recall = matches as f64 / ref_total as f64;
    precision.min(recall)
}

// ------------------------------------------------------------ regression

/// `(mvar, varm, tvar, epkl)` for members given as `(mean, variance)`.
pub fn regression_measures(members: &[Xy]) -> (f64, f64, f64, f64) {
    let k = members.len() as f64;
    let mean = members.iter().map(|m| m.0).sum::<f64>() / k;
    let mvar = members.iter().map(|m| m.1).sum::<f64>() / k;
    let varm = members.iter().map(|m| (m.0 - mean).powi(2)).sum::<f64>() / k;
    let mut kl_sum = 0.0;
    let mut pairs = 0usize;
    for (i, p) in members.iter().enumerate() {
        for (j, q) in members.iter().enumerate() {
            if i == j {
                continue;
            }
            let (sp, sq) = (p.1.sqrt(), q.1.sqrt());
            kl_sum += (sq / sp).ln() + (p.1 + (p.0 - q.0).powi(2)) / (2.0 * q.1) - 0.5;
            pairs += 1;
        }
    }
    let epkl = if pairs == 0 { 0.0 } else { kl_sum / pairs as f64 };
    (mvar, varm, mvar + varm, epkl)
}

// ------------------------------------------------------------- retention

/// Sample with `(id, error, uncertainty, shifted)`.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub error: f64,
    pub uncertainty: f64,
    pub shifted: bool,
}

/// Sample `i` is replaced by ground truth before `j`.
fn rejected_before(a: &Sample, i: usize, b: &Sample, j: usize) -> bool {
    if a.uncertainty != b.uncertainty {
        return a.uncertainty > b.uncertainty;
    }
    if a.id != b.id {
        return a.id < b.id;
    }
    i < j
}

/// For each sample, how many samples are rejected before it.
fn ranks(samples: &[Sample]) -> Vec<usize> {
    (0..samples.len())
        .map(|i| (0..samples.len()).filter(|&j| j != i && rejected_before(&samples[j], j, &samples[i], i)).count())
        .collect()
}

/// Retention curve value at each k = 0..=N; `value(retained)` sees the
/// membership mask of the k most certain samples.
fn sweep<F: Fn(&[bool], usize) -> f64>(samples: &[Sample], value: F) -> Vec<f64> {
    let n = samples.len();
    let rank = ranks(samples);
    (0..=n)
        .map(|k| {
            let retained: Vec<bool> = rank.iter().map(|&r| r >= n - k).collect();
            value(&retained, k)
        })
        .collect()
}

pub fn error_curve(samples: &[Sample]) -> Vec<f64> {
    let n = samples.len() as f64;
    sweep(samples, |retained, _| {
        let mut total = 0.0;
        for (s, &keep) in samples.iter().zip(retained) {
            if keep {
                total += s.error;
            }
        }
        total / n
    })
}

pub fn f1_curve(samples: &[Sample], threshold: f64) -> Vec<f64> {
    sweep(samples, |retained, _| {
        let (mut tp, mut fp, mut fne) = (0.0, 0.0, 0.0);
        for (s, &keep) in samples.iter().zip(retained) {
            let positive = s.error < threshold;
            match (keep, positive) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fne += 1.0,
                (false, false) => {}
            }
        }
        if tp == 0.0 {
            return 0.0;
        }
        let precision = tp / (tp + fp);
        let recall = tp / (tp + fne);
        2.0 * precision * recall / (precision + recall)
    })
}

/// Trapezoidal area of values on the uniform grid k/N.
pub fn area(values: &[f64]) -> f64 {
    let n = (values.len() - 1) as f64;
    let mut total = 0.0;
    for k in 0..values.len() - 1 {
        total += (values[k] + values[k + 1]) / (2.0 * n);
    }
    total
}

pub fn value_at(values: &[f64], r: f64) -> f64 {
    let n = (values.len() - 1) as f64;
    for (k, v) in values.iter().enumerate() {
        if k as f64 / n >= r {
            return *v;
        }
    }
    *values.last().unwrap()
}

/// Pairwise probability that a shifted sample is more uncertain than an
/// in-domain one, ties counted as one half.
pub fn roc_auc(samples: &[Sample]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for s in samples.iter().filter(|s| s.shifted) {
        for t in samples.iter().filter(|t| !t.shifted) {
            pairs += 1.0;
            if s.uncertainty > t.uncertainty {
                wins += 1.0;
            } else if s.uncertainty == t.uncertainty {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

// ------------------------------------------------------------------- RIP

pub fn lower_quartile(values: &[f64]) -> f64 {
    let m = mean_of(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    m - var.sqrt()
}

pub fn apply(op: &str, values: &[f64]) -> f64 {
    match op {
        "min" => min_of(values),
        "mean" => mean_of(values),
        "lower_quartile" => lower_quartile(values),
        other => panic!("unknown operator {other}"),
    }
}

/// Independent bivariate normal log-density with covariance `[[a, b], [b, d]]`.
pub fn bivariate_log_density(mean: Xy, cov: [[f64; 2]; 2], at: Xy) -> f64 {
    let (a, b, d) = (cov[0][0], cov[0][1], cov[1][1]);
    let det = a * d - b * b;
    let inv = [[d / det, -b / det], [-b / det, a / det]];
    let v = [at.0 - mean.0, at.1 - mean.1];
    let mut quad = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            quad += v[i] * inv[i][j] * v[j];
        }
    }
    -0.5 * quad - 0.5 * det.ln() - (2.0 * std::f64::consts::PI).ln()
}

/// Result of steps 2 to 6 on a G x K score matrix: selected indices, their
/// confidences and the request uncertainty.
pub fn rip_select(matrix: &[Vec<f64>], traj_agg: &str, req_agg: &str, d: usize) -> (Vec<usize>, Vec<f64>, f64) {
    let scores: Vec<f64> = matrix.iter().map(|row| apply(traj_agg, row)).collect();
    let c = apply(req_agg, &scores);
    let mut remaining: Vec<usize> = (0..scores.len()).collect();
    let mut selected = Vec::new();
    while selected.len() < d && !remaining.is_empty() {
        let mut best = 0;
        for p in 1..remaining.len() {
            if scores[remaining[p]] > scores[remaining[best]] {
                best = p;
            }
        }
        selected.push(remaining.remove(best));
    }
    let chosen: Vec<f64> = selected.iter().map(|&g| scores[g]).collect();
    let top = chosen.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = chosen.iter().map(|s| (s - top).exp()).sum();
    let confidences = chosen.iter().map(|s| (s - top).exp() / z).collect();
    (selected, confidences, -c)
}

/// Token counts; used by tests that compare unigram multisets.
pub fn bag(tokens: &[String]) -> HashMap<&str, usize> {
    let mut m = HashMap::new();
    for t in tokens {
        *m.entry(t.as_str()).or_insert(0) += 1;
    }
    m
}
