//! Pairwise disagreement between rankings.
//!
//! Both distances only look at students present in both rankings, and a pair
//! is discordant only when both rankings order it strictly and oppositely.
//! Tied pairs never count.

use crate::model::Ranking;

use super::ScreeningError;

/// Number of discordant pairs between two rankings.
pub fn kendall_tau_distance(r1: &Ranking, r2: &Ranking) -> u64 {
    let other = r2.score_map();
    let mut count = 0;
    for (a, &(u, gu1)) in r1.ordered.iter().enumerate() {
        let Some(&gu2) = other.get(&u) else { continue };
        for &(v, gv1) in &r1.ordered[a + 1..] {
            if gu1 <= gv1 {
                continue;
            }
            if let Some(&gv2) = other.get(&v) {
                if gv2 > gu2 {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Kendall distance where each discordant pair `u` above `v` in `r1`, `v`
/// above `u` in `r2` weighs `((g1u - g1v) + (g2v - g2u)) / 2`.
pub fn score_weighted_kendall(r1: &Ranking, r2: &Ranking) -> f64 {
    let other = r2.score_map();
    let mut total = 0.0;
    for (a, &(u, gu1)) in r1.ordered.iter().enumerate() {
        let Some(&gu2) = other.get(&u) else { continue };
        for &(v, gv1) in &r1.ordered[a + 1..] {
            if gu1 <= gv1 {
                continue;
            }
            if let Some(&gv2) = other.get(&v) {
                if gv2 > gu2 {
                    total += ((gu1 - gv1) + (gv2 - gu2)) / 2.0;
                }
            }
        }
    }
    total
}

/// Sum of [`score_weighted_kendall`] over all unordered reviewer pairs.
pub fn objective(rankings: &[Ranking]) -> Result<f64, ScreeningError> {
    if rankings.len() < 2 {
        return Err(ScreeningError::TooFewRankings(rankings.len()));
    }
    let mut total = 0.0;
    for k in 0..rankings.len() {
        for l in k + 1..rankings.len() {
            total += score_weighted_kendall(&rankings[k], &rankings[l]);
        }
    }
    Ok(total)
}
