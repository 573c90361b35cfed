use alloc::vec::Vec;

use crate::grid::ScoreGrid;

use super::{Representation, ScreeningInput};

/// Replaces each reviewer's retained scores by `S + 1 - rank`, where `S` is the
/// number of retained scores and tied scores share the average of the rank
/// positions they cover. Higher stays better. Screened cells get 0.
pub fn rank_surrogate(grid: &ScoreGrid) -> ScreeningInput {
    let values = (0..grid.reviewer_count())
        .map(|r| surrogate_row(grid.row(r), grid.retained_mask(r)))
        .collect();
    ScreeningInput {
        grid: grid.with_values(values),
        representation: Representation::RankSurrogate,
    }
}

fn surrogate_row(scores: &[f64], retained: &[bool]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).filter(|&i| retained[i]).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let count = order.len() as f64;
    let mut out = alloc::vec![0.0; scores.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // 1-based positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = count + 1.0 - rank;
        }
        start = end;
    }
    out
}
