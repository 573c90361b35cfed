//! Two-stage anomaly screening.
//!
//! [`rough_screen`] flags every score that sits more than `alpha` sample
//! standard deviations away from its student's cross-reviewer mean.
//! [`greedy_select`] then ranks the flagged cells by how much removing each one
//! alone lowers the score-weighted Kendall objective, and confirms the top
//! `floor(fraction * flagged)` of them.

mod kendall;
mod surrogate;

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::grid::ScoreGrid;
use crate::model::{Stage, StudentRef};
use crate::stats;

pub use kendall::{kendall_tau_distance, objective, score_weighted_kendall};
pub use surrogate::rank_surrogate;

/// Values screening operates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    RawScores,
    RankSurrogate,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScreeningError {
    #[error("student {student:?} has {retained} retained scores, at least 2 are needed")]
    TooFewScores { student: StudentRef, retained: usize },
    #[error("rough-screen multiplier must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error("greedy fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("objective needs at least 2 rankings, got {0}")]
    TooFewRankings(usize),
    #[error("cell (reviewer {reviewer}, student {student:?}) is not in the screening input")]
    UnknownCell { reviewer: usize, student: StudentRef },
    #[error("cell (reviewer {reviewer}, student {student:?}) is already screened")]
    NotRetained { reviewer: usize, student: StudentRef },
}

/// Per-reviewer values over a common student set, plus which cells survive.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningInput {
    pub grid: ScoreGrid,
    pub representation: Representation,
}

impl ScreeningInput {
    pub fn raw(grid: ScoreGrid) -> Self {
        Self {
            grid,
            representation: Representation::RawScores,
        }
    }

    pub fn objective(&self) -> Result<f64, ScreeningError> {
        objective(&self.grid.rankings())
    }

    /// Screens every confirmed cell of `report`.
    pub fn apply(&mut self, report: &AnomalyReport) -> Result<(), ScreeningError> {
        for e in report.confirmed() {
            let column = self.column(e.reviewer, e.student)?;
            self.grid.screen(e.reviewer, column);
        }
        Ok(())
    }

    fn column(&self, reviewer: usize, student: StudentRef) -> Result<usize, ScreeningError> {
        if reviewer >= self.grid.reviewer_count() {
            return Err(ScreeningError::UnknownCell { reviewer, student });
        }
        self.grid
            .column_of(student)
            .ok_or(ScreeningError::UnknownCell { reviewer, student })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyEntry {
    pub reviewer: usize,
    pub student: StudentRef,
    /// Value in the screening representation.
    pub score: f64,
    pub stage: Stage,
    pub decrease: Option<f64>,
}

/// Flagged cells. Entries are unique per cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub entries: Vec<AnomalyEntry>,
}

impl AnomalyReport {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries confirmed by the greedy stage.
    pub fn confirmed(&self) -> impl Iterator<Item = &AnomalyEntry> {
        self.entries.iter().filter(|e| e.stage == Stage::Greedy)
    }
}

/// First-stage screen: flag `(i, j)` iff `|g_ij - mean_j| > alpha * s_j`,
/// with `s_j` the (n - 1) sample standard deviation of student `j`'s retained
/// scores. Entries come out in (reviewer, student) order.
pub fn rough_screen(input: &ScreeningInput, alpha: f64) -> Result<AnomalyReport, ScreeningError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ScreeningError::InvalidAlpha(alpha));
    }
    let grid = &input.grid;
    let mut flags = Vec::new();
    for column in 0..grid.student_count() {
        let scores = grid.retained_column(column);
        if scores.len() < 2 {
            return Err(ScreeningError::TooFewScores {
                student: grid.students()[column],
                retained: scores.len(),
            });
        }
        let mean = stats::mean(&scores);
        let threshold = alpha * stats::sample_std(&scores);
        for reviewer in 0..grid.reviewer_count() {
            if !grid.is_retained(reviewer, column) {
                continue;
            }
            let g = grid.value(reviewer, column);
            if libm::fabs(g - mean) > threshold {
                flags.push(AnomalyEntry {
                    reviewer,
                    student: grid.students()[column],
                    score: g,
                    stage: Stage::Rough,
                    decrease: None,
                });
            }
        }
    }
    flags.sort_by_key(|e| (e.reviewer, e.student));
    Ok(AnomalyReport { entries: flags })
}

/// Drop in the objective from screening cell `(reviewer, column)` alone.
///
/// Sums, over other reviewers `k` and students `v` retained in both rows,
/// `(|g_ij - g_iv| + |g_kv - g_kj|) / 2` for pairs ordered strictly and
/// oppositely by the two reviewers. The summation order is fixed.
pub fn greedy_decrease(
    input: &ScreeningInput,
    reviewer: usize,
    column: usize,
) -> Result<f64, ScreeningError> {
    let grid = &input.grid;
    let student = *grid
        .students()
        .get(column)
        .ok_or(ScreeningError::UnknownCell {
            reviewer,
            student: StudentRef {
                class: usize::MAX,
                student: column,
            },
        })?;
    if reviewer >= grid.reviewer_count() {
        return Err(ScreeningError::UnknownCell { reviewer, student });
    }
    if !grid.is_retained(reviewer, column) {
        return Err(ScreeningError::NotRetained { reviewer, student });
    }
    let own = grid.row(reviewer);
    let own_mask = grid.retained_mask(reviewer);
    let gij = own[column];
    let mut total = 0.0;
    for other in 0..grid.reviewer_count() {
        if other == reviewer || !grid.is_retained(other, column) {
            continue;
        }
        let row = grid.row(other);
        let mask = grid.retained_mask(other);
        let gkj = row[column];
        for v in 0..grid.student_count() {
            if v == column || !own_mask[v] || !mask[v] {
                continue;
            }
            let own_gap = gij - own[v];
            let other_gap = row[v] - gkj;
            if (own_gap > 0.0 && other_gap > 0.0) || (own_gap < 0.0 && other_gap < 0.0) {
                total += (libm::fabs(own_gap) + libm::fabs(other_gap)) / 2.0;
            }
        }
    }
    Ok(total)
}

/// Strategy for evaluating many [`greedy_decrease`] values at once.
///
/// Implementations must return one result per requested cell, in request
/// order, each bitwise equal to a direct [`greedy_decrease`] call.
pub trait DecreaseEvaluator {
    fn evaluate(
        &self,
        input: &ScreeningInput,
        cells: &[(usize, usize)],
    ) -> Vec<Result<f64, ScreeningError>>;
}

/// Evaluates decreases one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl DecreaseEvaluator for Sequential {
    fn evaluate(
        &self,
        input: &ScreeningInput,
        cells: &[(usize, usize)],
    ) -> Vec<Result<f64, ScreeningError>> {
        cells
            .iter()
            .map(|&(r, c)| greedy_decrease(input, r, c))
            .collect()
    }
}

/// Number of cells confirmed out of `flagged` at `fraction`.
pub fn confirm_count(flagged: usize, fraction: f64) -> usize {
    // 1e-9 absorbs products such as 0.29 * 100 = 28.999999999999996
    libm::floor(fraction * flagged as f64 + 1e-9) as usize
}

fn check_fraction(fraction: f64) -> Result<(), ScreeningError> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(ScreeningError::InvalidFraction(fraction))
    }
}

fn by_decrease(a: &AnomalyEntry, b: &AnomalyEntry) -> Ordering {
    let da = a.decrease.unwrap_or(0.0);
    let db = b.decrease.unwrap_or(0.0);
    db.total_cmp(&da)
        .then(a.reviewer.cmp(&b.reviewer))
        .then(a.student.cmp(&b.student))
}

/// Single-pass greedy confirmation.
///
/// Every flagged cell gets its decrease computed once against the current
/// retained set; entries come back sorted by decrease (descending, ties by
/// reviewer then student) and the first `confirm_count` are marked
/// [`Stage::Greedy`]. The input is not modified.
pub fn greedy_select(
    input: &ScreeningInput,
    rough: &AnomalyReport,
    fraction: f64,
) -> Result<AnomalyReport, ScreeningError> {
    greedy_select_with(input, rough, fraction, &Sequential)
}

pub fn greedy_select_with<E: DecreaseEvaluator + ?Sized>(
    input: &ScreeningInput,
    rough: &AnomalyReport,
    fraction: f64,
    evaluator: &E,
) -> Result<AnomalyReport, ScreeningError> {
    check_fraction(fraction)?;
    let cells = rough
        .entries
        .iter()
        .map(|e| Ok((e.reviewer, input.column(e.reviewer, e.student)?)))
        .collect::<Result<Vec<_>, ScreeningError>>()?;
    let decreases = evaluator.evaluate(input, &cells);
    assert_eq!(decreases.len(), cells.len(), "evaluator dropped cells");
    let mut entries = Vec::with_capacity(cells.len());
    for (e, d) in rough.entries.iter().zip(decreases) {
        entries.push(AnomalyEntry {
            stage: Stage::Rough,
            decrease: Some(d?),
            ..e.clone()
        });
    }
    entries.sort_by(by_decrease);
    let d = confirm_count(entries.len(), fraction);
    for e in entries.iter_mut().take(d) {
        e.stage = Stage::Greedy;
    }
    Ok(AnomalyReport { entries })
}

/// Greedy confirmation that recomputes every remaining decrease after each
/// removal. Confirmed entries carry the decrease at the moment they were
/// removed (so they are exact objective drops), in removal order; unconfirmed
/// entries follow with their last computed decrease.
pub fn greedy_select_strict(
    input: &ScreeningInput,
    rough: &AnomalyReport,
    fraction: f64,
) -> Result<AnomalyReport, ScreeningError> {
    check_fraction(fraction)?;
    let d = confirm_count(rough.len(), fraction);
    let mut work = input.clone();
    let mut pending: Vec<AnomalyEntry> = rough
        .entries
        .iter()
        .map(|e| AnomalyEntry {
            stage: Stage::Rough,
            ..e.clone()
        })
        .collect();
    let mut confirmed = Vec::with_capacity(d);
    for step in 0..=d {
        for e in &mut pending {
            let column = work.column(e.reviewer, e.student)?;
            e.decrease = Some(greedy_decrease(&work, e.reviewer, column)?);
        }
        pending.sort_by(by_decrease);
        if step == d || pending.is_empty() {
            break;
        }
        let mut top = pending.remove(0);
        let column = work.column(top.reviewer, top.student)?;
        work.grid.screen(top.reviewer, column);
        top.stage = Stage::Greedy;
        confirmed.push(top);
    }
    confirmed.extend(pending);
    Ok(AnomalyReport { entries: confirmed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn input(rows: Vec<Vec<f64>>) -> ScreeningInput {
        ScreeningInput::raw(ScoreGrid::from_matrix(rows))
    }

    #[test]
    fn rough_screen_flags_the_far_score() {
        let inp = input(vec![vec![80.0], vec![82.0], vec![50.0]]);
        let report = rough_screen(&inp, 1.0).unwrap();
        assert_eq!(report.len(), 1);
        assert_eq!(report.entries[0].reviewer, 2);
        assert_eq!(report.entries[0].score, 50.0);
        assert_eq!(report.entries[0].stage, Stage::Rough);
    }

    #[test]
    fn rough_screen_ignores_constant_students() {
        let inp = input(vec![vec![70.0], vec![70.0], vec![70.0]]);
        assert!(rough_screen(&inp, 1.0).unwrap().is_empty());
    }

    #[test]
    fn two_symmetric_scores_never_exceed_one_sigma() {
        let inp = input(vec![vec![60.0], vec![90.0]]);
        assert!(rough_screen(&inp, 1.0).unwrap().is_empty());
    }

    #[test]
    fn rough_screen_needs_two_scores() {
        let inp = input(vec![vec![60.0]]);
        assert!(matches!(
            rough_screen(&inp, 1.0),
            Err(ScreeningError::TooFewScores { retained: 1, .. })
        ));
        let inp = input(vec![vec![60.0], vec![61.0]]);
        assert!(matches!(rough_screen(&inp, 0.0), Err(ScreeningError::InvalidAlpha(_))));
    }

    #[test]
    fn decrease_is_zero_without_discordance() {
        let inp = input(vec![vec![90.0, 80.0, 70.0], vec![91.0, 81.0, 71.0]]);
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(greedy_decrease(&inp, r, c).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn decrease_equals_objective_when_cell_holds_all_discordance() {
        // reviewer 1 ranks student 2 on top, everyone else agrees
        let inp = input(vec![
            vec![90.0, 80.0, 70.0],
            vec![90.0, 80.0, 95.0],
            vec![88.0, 79.0, 60.0],
        ]);
        let before = inp.objective().unwrap();
        assert!(before > 0.0);
        assert_eq!(greedy_decrease(&inp, 1, 2).unwrap(), before);
    }

    #[test]
    fn decrease_rejects_screened_cells() {
        let mut inp = input(vec![vec![90.0, 80.0], vec![80.0, 90.0]]);
        inp.grid.screen(0, 1);
        assert!(matches!(
            greedy_decrease(&inp, 0, 1),
            Err(ScreeningError::NotRetained { .. })
        ));
    }

    #[test]
    fn confirm_counts() {
        assert_eq!(confirm_count(33, 0.8), 26);
        assert_eq!(confirm_count(100, 0.29), 29);
        assert_eq!(confirm_count(5, 0.1), 0);
        assert_eq!(confirm_count(7, 1.0), 7);
    }

    fn flagged_everything(inp: &ScreeningInput) -> AnomalyReport {
        let mut entries = Vec::new();
        for r in 0..inp.grid.reviewer_count() {
            for c in 0..inp.grid.student_count() {
                entries.push(AnomalyEntry {
                    reviewer: r,
                    student: inp.grid.students()[c],
                    score: inp.grid.value(r, c),
                    stage: Stage::Rough,
                    decrease: None,
                });
            }
        }
        AnomalyReport { entries }
    }

    #[test]
    fn greedy_fraction_one_confirms_everything() {
        let inp = input(vec![vec![90.0, 80.0, 70.0], vec![70.0, 95.0, 60.0]]);
        let flagged = flagged_everything(&inp);
        let out = greedy_select(&inp, &flagged, 1.0).unwrap();
        assert_eq!(out.confirmed().count(), 6);
    }

    #[test]
    fn greedy_small_fraction_confirms_nothing() {
        let inp = input(vec![vec![90.0, 80.0, 70.0], vec![70.0, 95.0, 60.0]]);
        let flagged = flagged_everything(&inp);
        let out = greedy_select(&inp, &flagged, 0.1).unwrap();
        assert_eq!(out.confirmed().count(), 0);
        assert_eq!(out.len(), 6);
        let mut applied = inp.clone();
        applied.apply(&out).unwrap();
        assert_eq!(applied, inp);
    }

    #[test]
    fn greedy_output_is_sorted_descending() {
        let inp = input(vec![
            vec![90.0, 80.0, 70.0, 60.0],
            vec![70.0, 95.0, 60.0, 85.0],
            vec![65.0, 75.0, 99.0, 50.0],
        ]);
        let out = greedy_select(&inp, &flagged_everything(&inp), 0.5).unwrap();
        let ds: Vec<f64> = out.entries.iter().map(|e| e.decrease.unwrap()).collect();
        assert!(ds.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(out.confirmed().count(), 6);
        assert!(out.entries[..6].iter().all(|e| e.stage == Stage::Greedy));
    }

    #[test]
    fn invalid_fraction_is_rejected() {
        let inp = input(vec![vec![1.0], vec![2.0]]);
        let empty = AnomalyReport::default();
        assert!(greedy_select(&inp, &empty, 0.0).is_err());
        assert!(greedy_select(&inp, &empty, 1.5).is_err());
        assert!(greedy_select_strict(&inp, &empty, 1.5).is_err());
    }

    #[test]
    fn strict_mode_confirms_exact_drops() {
        let inp = input(vec![
            vec![90.0, 80.0, 70.0, 60.0, 75.0],
            vec![70.0, 95.0, 60.0, 85.0, 80.0],
            vec![65.0, 75.0, 99.0, 50.0, 70.0],
        ]);
        let out = greedy_select_strict(&inp, &flagged_everything(&inp), 0.4).unwrap();
        let mut work = inp.clone();
        for e in out.confirmed() {
            let before = work.objective().unwrap();
            let c = work.grid.column_of(e.student).unwrap();
            work.grid.screen(e.reviewer, c);
            let after = work.objective().unwrap();
            assert!((before - after - e.decrease.unwrap()).abs() < 1e-9);
        }
    }
}
