//! OGB-style ranking metrics. Ties are resolved pessimistically for
//! Hits@K and MRR, and count one half for AUC.

use crate::error::{Error, Result};

/// Fraction of positives scoring strictly above the `k`-th largest negative.
/// When `k >= |neg|` every positive counts as a hit.
pub fn hits_at_k(pos_scores: &[f64], neg_scores: &[f64], k: usize) -> Result<f64> {
    if pos_scores.is_empty() {
        return Err(Error::Data("hits@k needs at least one positive".into()));
    }
    if neg_scores.is_empty() {
        return Err(Error::Data("hits@k needs at least one negative".into()));
    }
    if k == 0 {
        return Err(Error::Config("hits@k needs k >= 1".into()));
    }
    if k >= neg_scores.len() {
        return Ok(1.0);
    }
    let mut negs = neg_scores.to_vec();
    let (_, &mut threshold, _) = negs.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    let hits = pos_scores.iter().filter(|&&p| p > threshold).count();
    Ok(hits as f64 / pos_scores.len() as f64)
}

/// Mean reciprocal rank; each positive is ranked against its own negatives
/// with rank `1 + #{neg >= pos}`.
pub fn mrr<S: AsRef<[f64]>>(pos_scores: &[f64], neg_scores_per_pos: &[S]) -> Result<f64> {
    if pos_scores.is_empty() {
        return Err(Error::Data("mrr needs at least one positive".into()));
    }
    if pos_scores.len() != neg_scores_per_pos.len() {
        return Err(Error::Shape(format!(
            "{} positives but {} negative lists",
            pos_scores.len(),
            neg_scores_per_pos.len()
        )));
    }
    let total: f64 = pos_scores
        .iter()
        .zip(neg_scores_per_pos)
        .map(|(&p, negs)| {
            let rank = 1 + negs.as_ref().iter().filter(|&&n| n >= p).count();
            1.0 / rank as f64
        })
        .sum();
    Ok(total / pos_scores.len() as f64)
}

/// Probability that a random positive outscores a random negative, ties
/// counted as one half. Computed from the rank sum with midranks.
pub fn auc(pos_scores: &[f64], neg_scores: &[f64]) -> Result<f64> {
    if pos_scores.is_empty() || neg_scores.is_empty() {
        return Err(Error::Data("auc needs positives and negatives".into()));
    }
    let mut all: Vec<(f64, bool)> = pos_scores
        .iter()
        .map(|&s| (s, true))
        .chain(neg_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Ranks are 1-based; a tie group spanning [i, j) gets (i + 1 + j) / 2.
    let mut pos_rank_sum2 = 0u128; // twice the rank sum, kept exact
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j].0.total_cmp(&all[i].0).is_eq() {
            j += 1;
        }
        let pos_in_group = all[i..j].iter().filter(|x| x.1).count() as u128;
        pos_rank_sum2 += pos_in_group * (i as u128 + 1 + j as u128);
        i = j;
    }
    let np = pos_scores.len() as u128;
    let nn = neg_scores.len() as u128;
    // U = R - np(np+1)/2, doubled to stay integral
    let u2 = pos_rank_sum2 - np * (np + 1);
    Ok(u2 as f64 / (2 * np * nn) as f64)
}

/// Sample mean and standard deviation (`n - 1` denominator, 0 for `n = 1`).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hits_examples() {
        assert_eq!(hits_at_k(&[5.0, 6.0], &[1.0, 2.0, 3.0], 2).unwrap(), 1.0);
        assert_eq!(hits_at_k(&[0.0], &[1.0, 2.0], 2).unwrap(), 1.0);
        let negs: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        assert_eq!(hits_at_k(&[0.90], &negs, 50).unwrap(), 1.0);
        assert_eq!(hits_at_k(&[0.90], &negs, 5).unwrap(), 0.0);
        assert!(hits_at_k(&[], &negs, 5).is_err());
        assert!(hits_at_k(&[1.0], &[], 5).is_err());
    }

    #[test]
    fn hits_ties_are_misses() {
        assert_eq!(hits_at_k(&[1.0, 2.0], &[1.0, 0.0, 0.0], 1).unwrap(), 0.5);
    }

    #[test]
    fn mrr_examples() {
        assert_eq!(mrr(&[1.0], &[vec![0.0, 0.5]]).unwrap(), 1.0);
        assert_eq!(mrr(&[1.0], &[vec![1.0, 0.5]]).unwrap(), 0.5);
        assert!(mrr::<Vec<f64>>(&[], &[]).is_err());
        assert!(mrr(&[1.0], &[vec![0.0], vec![0.0]]).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.3; 4], &[0.3; 7]).unwrap(), 0.5);
        assert_eq!(auc(&[2.0, 3.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.0], &[1.0]).unwrap(), 0.0);
        // one win, one tie out of two comparisons
        assert_eq!(auc(&[1.0], &[0.0, 1.0]).unwrap(), 0.75);
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[0.5, 0.7]);
        assert!((m - 0.6).abs() < 1e-15);
        assert!((s - 0.02f64.sqrt()).abs() < 1e-15);
        assert!((s - 0.1414).abs() < 1e-4);
        assert_eq!(mean_std(&[0.3]), (0.3, 0.0));
    }
}
