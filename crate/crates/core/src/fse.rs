//! Fuzzy synthetic evaluation with reviewers as evaluation indices.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::grid::ScoreGrid;
use crate::model::StudentRef;
use crate::stats;
use crate::warning::Warning;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FseError {
    #[error("reviewer #{0} has no retained scores")]
    EmptyReviewer(usize),
    #[error("reviewer #{reviewer} has {retained} retained scores, at least 2 are needed")]
    TooFewScores { reviewer: usize, retained: usize },
    #[error("reviewer #{0} has a non-positive mean; coefficient of variation undefined")]
    NonPositiveMean(usize),
    #[error("reviewer #{0} has no screened scores; inverse-screened reliability undefined")]
    NothingScreened(usize),
    #[error("no retained scores at all")]
    NothingRetained,
    #[error("student column {0} has no retained scores")]
    UnscoredStudent(usize),
    #[error("weight vector has {got} entries for {expected} reviewers")]
    WeightLength { expected: usize, got: usize },
    #[error("reference reviewer #{0} does not exist")]
    UnknownReference(usize),
    #[error("reference reviewer #{0} has no retained score range; pick another reference reviewer")]
    DegenerateReference(usize),
}

/// How missing benefit entries enter the fused score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Missing entries contribute nothing.
    #[default]
    PaperLiteral,
    /// The weighted sum is divided by the weight that is actually present.
    Renormalized,
}

/// How the reliability component is derived from screening counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReliabilityForm {
    /// Proportional to each reviewer's retained-score count.
    #[default]
    RetainedCount,
    /// `sum(n) / n_i` over screened counts `n_i`, then normalized.
    InverseScreened,
}

/// Min-max normalized retained scores; `None` where the cell is screened.
#[derive(Debug, Clone, PartialEq)]
pub struct BenefitMatrix {
    values: Vec<Vec<Option<f64>>>,
    pub warnings: Vec<Warning>,
}

impl BenefitMatrix {
    pub fn get(&self, reviewer: usize, column: usize) -> Option<f64> {
        self.values[reviewer][column]
    }

    pub fn row(&self, reviewer: usize) -> &[Option<f64>] {
        &self.values[reviewer]
    }

    pub fn reviewer_count(&self) -> usize {
        self.values.len()
    }

    pub fn student_count(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// `b_ij = (g_ij - min_j g_ij) / (max_j g_ij - min_j g_ij)` over each
/// reviewer's retained scores. A constant row maps to 0.5 with a warning.
pub fn benefit_matrix(grid: &ScoreGrid) -> Result<BenefitMatrix, FseError> {
    let mut values = Vec::with_capacity(grid.reviewer_count());
    let mut warnings = Vec::new();
    for reviewer in 0..grid.reviewer_count() {
        let kept = grid.retained_row(reviewer);
        if kept.is_empty() {
            return Err(FseError::EmptyReviewer(reviewer));
        }
        let lo = kept.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = kept.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        if span <= 0.0 {
            warnings.push(Warning::ConstantBenefitRow { reviewer });
        }
        let row = grid
            .row(reviewer)
            .iter()
            .zip(grid.retained_mask(reviewer))
            .map(|(g, keep)| {
                keep.then(|| if span > 0.0 { (g - lo) / span } else { 0.5 })
            })
            .collect();
        values.push(row);
    }
    Ok(BenefitMatrix { values, warnings })
}

/// Retained-score summary of one reviewer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReviewerSpread {
    pub mean: f64,
    pub std: f64,
    pub retained: usize,
    pub screened: usize,
    pub variation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationWeights {
    pub weights: Vec<f64>,
    pub spreads: Vec<ReviewerSpread>,
    pub warning: Option<Warning>,
}

/// Discrimination weights: coefficient of variation `std / mean` of each
/// reviewer's retained scores, normalized to sum to 1.
pub fn variation_weights(grid: &ScoreGrid) -> Result<VariationWeights, FseError> {
    let mut spreads = Vec::with_capacity(grid.reviewer_count());
    for reviewer in 0..grid.reviewer_count() {
        let kept = grid.retained_row(reviewer);
        if kept.len() < 2 {
            return Err(FseError::TooFewScores {
                reviewer,
                retained: kept.len(),
            });
        }
        let mean = stats::mean(&kept);
        if mean <= 0.0 {
            return Err(FseError::NonPositiveMean(reviewer));
        }
        let std = stats::sample_std(&kept);
        spreads.push(ReviewerSpread {
            mean,
            std,
            retained: kept.len(),
            screened: grid.screened_count(reviewer),
            variation: std / mean,
        });
    }
    let total: f64 = spreads.iter().map(|s| s.variation).sum();
    let (weights, warning) = if total > 0.0 {
        (spreads.iter().map(|s| s.variation / total).collect(), None)
    } else {
        let n = spreads.len() as f64;
        (
            alloc::vec![1.0 / n; spreads.len()],
            Some(Warning::UniformVariationWeights),
        )
    };
    Ok(VariationWeights {
        weights,
        spreads,
        warning,
    })
}

/// Reliability weights from per-reviewer `(retained, screened)` counts.
pub fn reliability_from_counts(
    counts: &[(usize, usize)],
    form: ReliabilityForm,
) -> Result<Vec<f64>, FseError> {
    match form {
        ReliabilityForm::RetainedCount => {
            let total: usize = counts.iter().map(|c| c.0).sum();
            if total == 0 {
                return Err(FseError::NothingRetained);
            }
            Ok(counts.iter().map(|c| c.0 as f64 / total as f64).collect())
        }
        ReliabilityForm::InverseScreened => {
            if let Some(i) = counts.iter().position(|c| c.1 == 0) {
                return Err(FseError::NothingScreened(i));
            }
            let total: usize = counts.iter().map(|c| c.1).sum();
            let raw: Vec<f64> = counts.iter().map(|c| total as f64 / c.1 as f64).collect();
            let norm: f64 = raw.iter().sum();
            Ok(raw.into_iter().map(|r| r / norm).collect())
        }
    }
}

pub fn reliability_weights(grid: &ScoreGrid, form: ReliabilityForm) -> Result<Vec<f64>, FseError> {
    let counts: Vec<(usize, usize)> = (0..grid.reviewer_count())
        .map(|r| (grid.retained_count(r), grid.screened_count(r)))
        .collect();
    reliability_from_counts(&counts, form)
}

/// Elementwise average of the two weight components.
pub fn combine_weights(w1: &[f64], w2: &[f64]) -> Vec<f64> {
    w1.iter().zip(w2).map(|(a, b)| (a + b) / 2.0).collect()
}

/// Discrimination, reliability and combined reviewer weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub w: Vec<f64>,
}

impl WeightVector {
    pub fn new(w1: Vec<f64>, w2: Vec<f64>) -> Self {
        let w = combine_weights(&w1, &w2);
        Self { w1, w2, w }
    }
}

/// `F_j = sum_i w_i b_ij` over present benefits, divided by the present
/// weight in [`WeightMode::Renormalized`].
pub fn fuse(benefit: &BenefitMatrix, w: &[f64], mode: WeightMode) -> Result<Vec<f64>, FseError> {
    if w.len() != benefit.reviewer_count() {
        return Err(FseError::WeightLength {
            expected: benefit.reviewer_count(),
            got: w.len(),
        });
    }
    (0..benefit.student_count())
        .map(|column| {
            let mut sum = 0.0;
            let mut present = 0.0;
            let mut any = false;
            for (reviewer, wi) in w.iter().enumerate() {
                if let Some(b) = benefit.get(reviewer, column) {
                    sum += wi * b;
                    present += wi;
                    any = true;
                }
            }
            if !any {
                return Err(column);
            }
            Ok(match mode {
                WeightMode::PaperLiteral => sum,
                WeightMode::Renormalized if present > 0.0 => sum / present,
                WeightMode::Renormalized => sum,
            })
        })
        .collect::<Result<Vec<f64>, usize>>()
        .map_err(FseError::UnscoredStudent)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentScore {
    pub student: StudentRef,
    /// Fused benefit `F_j`.
    pub fused: f64,
    /// Display score on the reference reviewer's scale, 2 decimals.
    pub display: f64,
    /// Competition rank by display score (1, 2, 2, 4).
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub reference_min: f64,
    pub reference_max: f64,
    pub students: Vec<StudentScore>,
}

impl EvaluationResult {
    pub fn ranks(&self) -> Vec<usize> {
        self.students.iter().map(|s| s.rank).collect()
    }
}

pub fn round2(x: f64) -> f64 {
    libm::round(x * 100.0) / 100.0
}

/// Competition ranking, larger is better.
pub fn competition_ranks(scores: &[f64]) -> Vec<usize> {
    scores
        .iter()
        .map(|s| 1 + scores.iter().filter(|o| *o > s).count())
        .collect()
}

/// Maps fused scores onto the reference reviewer's retained range,
/// `f_j = F_j (max - min) + min`, rounds to 2 decimals and ranks.
pub fn final_scores(
    fused: &[f64],
    grid: &ScoreGrid,
    reference: usize,
) -> Result<EvaluationResult, FseError> {
    if reference >= grid.reviewer_count() {
        return Err(FseError::UnknownReference(reference));
    }
    let kept = grid.retained_row(reference);
    let lo = kept.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = kept.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if kept.len() < 2 || hi <= lo {
        return Err(FseError::DegenerateReference(reference));
    }
    let display: Vec<f64> = fused.iter().map(|f| round2(f * (hi - lo) + lo)).collect();
    let ranks = competition_ranks(&display);
    let students = grid
        .students()
        .iter()
        .zip(fused)
        .zip(display.iter().zip(ranks))
        .map(|((student, fused), (display, rank))| StudentScore {
            student: *student,
            fused: *fused,
            display: *display,
            rank,
        })
        .collect();
    Ok(EvaluationResult {
        reference_min: lo,
        reference_max: hi,
        students,
    })
}
