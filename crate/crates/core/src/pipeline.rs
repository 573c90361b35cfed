//! End-to-end orchestration and the run report.
//!
//! Single class: rough screen, greedy confirmation, benefit matrix, weights,
//! fusion, display scores. Several classes: every reviewer's later classes are
//! first tested and rescaled against class 1, the classes are merged, and the
//! single-class sequence runs on the merged grid (screening on rank
//! surrogates by default, fusion on the rescaled scores).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::fse::{self, FseError, ReliabilityForm, ReviewerSpread, WeightMode, WeightVector};
use crate::grid::{ClassScope, ScoreGrid};
use crate::hypotest::{self, ClassComparison, HypotestError, TransformCase};
use crate::model::{
    CellRef, ClassId, GradeTable, ModelError, ReviewerId, Stage, StudentId, StudentRef, Violation,
};
use crate::screening::{
    self, AnomalyEntry, AnomalyReport, DecreaseEvaluator, ScreeningError, ScreeningInput,
};
use crate::warning::Warning;

pub use crate::screening::Representation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct Config {
    /// Standard-deviation multiplier of the rough screen.
    pub rough_alpha: f64,
    /// Share of rough flags confirmed by the greedy stage.
    pub greedy_fraction: f64,
    /// Significance level of the class comparison tests.
    pub test_alpha: f64,
    /// Blend weight of the rescaling transforms; `test_alpha` when unset.
    pub blend_alpha: Option<f64>,
    /// Screening values; raw scores for one class, rank surrogates otherwise.
    pub representation: Option<Representation>,
    pub weight_mode: WeightMode,
    pub reliability: ReliabilityForm,
    /// Reviewer whose retained range frames the display scores; first
    /// reviewer when unset.
    pub reference_reviewer: Option<ReviewerId>,
    /// Recompute decreases after every confirmed removal.
    pub strict_greedy: bool,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            rough_alpha: 1.0,
            greedy_fraction: 0.8,
            test_alpha: 0.05,
            blend_alpha: None,
            representation: None,
            weight_mode: WeightMode::PaperLiteral,
            reliability: ReliabilityForm::RetainedCount,
            reference_reviewer: None,
            strict_greedy: false,
            seed: 0,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if !(self.rough_alpha > 0.0 && self.rough_alpha.is_finite()) {
            return bad(format!("rough-alpha must be positive, got {}", self.rough_alpha));
        }
        if !(self.greedy_fraction > 0.0 && self.greedy_fraction <= 1.0) {
            return bad(format!(
                "greedy-fraction must lie in (0, 1], got {}",
                self.greedy_fraction
            ));
        }
        if !(self.test_alpha > 0.0 && self.test_alpha < 1.0) {
            return bad(format!("test-alpha must lie in (0, 1), got {}", self.test_alpha));
        }
        if let Some(b) = self.blend_alpha {
            if !(0.0..=1.0).contains(&b) {
                return bad(format!("blend-alpha must lie in [0, 1], got {b}"));
            }
        }
        Ok(())
    }

    pub fn blend(&self) -> f64 {
        self.blend_alpha.unwrap_or(self.test_alpha)
    }

    pub fn representation_for(&self, classes: usize) -> Representation {
        self.representation.unwrap_or(if classes > 1 {
            Representation::RankSurrogate
        } else {
            Representation::RawScores
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("table failed validation with {} violation(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error("expected {expected}, table has {classes} class(es)")]
    WrongSituation { expected: &'static str, classes: usize },
    #[error("unknown reference reviewer {0}")]
    UnknownReference(ReviewerId),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("screening: {0}")]
    Screening(#[from] ScreeningError),
    #[error("class comparison: {0}")]
    Hypotest(#[from] HypotestError),
    #[error("evaluation: {0}")]
    Fse(#[from] FseError),
}

impl PipelineError {
    /// Failures caused by degenerate statistics in the data rather than by
    /// malformed input or configuration.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            PipelineError::Screening(_) | PipelineError::Hypotest(_) | PipelineError::Fse(_)
        )
    }
}

/// One flagged cell, labelled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyRecord {
    pub class: ClassId,
    pub student: StudentId,
    pub reviewer: ReviewerId,
    /// Grade used for fusion (rescaled in multi-class runs).
    pub score: f64,
    /// Value the screening stages saw.
    pub screening_value: f64,
    pub stage: Stage,
    pub decrease: Option<f64>,
}

/// Class comparison of one reviewer against the reference class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewerTest {
    pub reviewer: ReviewerId,
    pub reference_class: ClassId,
    pub class: ClassId,
    #[serde(flatten)]
    pub comparison: ClassComparison,
    /// Case actually applied after degenerate-variance fallbacks.
    pub applied_case: TransformCase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewerWeights {
    pub reviewer: ReviewerId,
    #[serde(flatten)]
    pub spread: ReviewerSpread,
    pub w1: f64,
    pub w2: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentResult {
    pub class: ClassId,
    pub student: StudentId,
    pub fused: f64,
    pub display: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: f64,
}

/// Everything a run produced, in a stable field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: Config,
    pub classes: usize,
    pub reviewers: usize,
    pub students: usize,
    pub representation: Representation,
    pub validation: Vec<Violation>,
    pub hypothesis_tests: Vec<ReviewerTest>,
    pub rough_flags: Vec<AnomalyRecord>,
    /// Every rough flag with its decrease, sorted by decrease descending.
    pub decreases: Vec<AnomalyRecord>,
    pub confirmed: Vec<AnomalyRecord>,
    pub objective_before: Option<f64>,
    pub objective_after: Option<f64>,
    pub weights: Vec<ReviewerWeights>,
    pub reference_reviewer: Option<ReviewerId>,
    pub reference_range: Option<(f64, f64)>,
    pub results: Vec<StudentResult>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Vec<StageTiming>>,
}

impl RunReport {
    fn empty(table: &GradeTable, config: &Config) -> Self {
        Self {
            config: config.clone(),
            classes: table.classes().len(),
            reviewers: table.reviewers().len(),
            students: table.student_count(),
            representation: config.representation_for(table.classes().len()),
            validation: Vec::new(),
            hypothesis_tests: Vec::new(),
            rough_flags: Vec::new(),
            decreases: Vec::new(),
            confirmed: Vec::new(),
            objective_before: None,
            objective_after: None,
            weights: Vec::new(),
            reference_reviewer: None,
            reference_range: None,
            results: Vec::new(),
            warnings: Vec::new(),
            timing: None,
        }
    }

    pub fn weight_vector(&self) -> WeightVector {
        WeightVector {
            w1: self.weights.iter().map(|w| w.w1).collect(),
            w2: self.weights.iter().map(|w| w.w2).collect(),
            w: self.weights.iter().map(|w| w.w).collect(),
        }
    }
}

/// Merged grid after class reconciliation.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconciled {
    pub grid: ScoreGrid,
    pub tests: Vec<ReviewerTest>,
    pub warnings: Vec<String>,
}

fn check_table(table: &GradeTable, config: &Config) -> Result<(), PipelineError> {
    config.validate()?;
    let violations = table.validate();
    if !violations.is_empty() {
        return Err(PipelineError::Invalid(violations));
    }
    Ok(())
}

fn cell_scores(table: &GradeTable, class: usize, reviewer: usize) -> Vec<f64> {
    (0..table.students(class).len())
        .map(|student| {
            table
                .cell(CellRef {
                    class,
                    reviewer,
                    student,
                })
                .map_or(f64::NAN, |c| c.score)
        })
        .collect()
}

/// Tests every reviewer's classes 2.. against class 1 and rescales them.
/// With one class the grid is returned unchanged.
pub fn reconcile(table: &GradeTable, config: &Config) -> Result<Reconciled, PipelineError> {
    let mut grid = ScoreGrid::from_table(table, ClassScope::All)?;
    let mut tests = Vec::new();
    let mut warnings = Vec::new();
    if table.classes().len() < 2 {
        return Ok(Reconciled {
            grid,
            tests,
            warnings,
        });
    }
    let blend = config.blend();
    let mut values: Vec<Vec<f64>> = (0..grid.reviewer_count())
        .map(|r| grid.row(r).to_vec())
        .collect();
    for (reviewer, row) in values.iter_mut().enumerate() {
        let reference = cell_scores(table, 0, reviewer);
        for class in 1..table.classes().len() {
            let compared = cell_scores(table, class, reviewer);
            let comparison = hypotest::compare_classes(&reference, &compared, config.test_alpha)?;
            let rescaled = hypotest::rescale(&compared, &comparison, blend)?;
            let context = format!(
                "reviewer {}, class {}",
                table.reviewer_id(reviewer),
                table.class_id(class)
            );
            for w in comparison.warnings.iter().chain(rescaled.warning.iter()) {
                warnings.push(format!("{context}: {w}"));
            }
            for (student, g) in rescaled.scores.iter().enumerate() {
                let column = grid
                    .column_of(StudentRef { class, student })
                    .expect("grid covers every class");
                row[column] = *g;
            }
            tests.push(ReviewerTest {
                reviewer: table.reviewer_id(reviewer).clone(),
                reference_class: table.class_id(0).clone(),
                class: table.class_id(class).clone(),
                applied_case: rescaled.applied,
                comparison,
            });
        }
    }
    grid = grid.with_values(values);
    Ok(Reconciled {
        grid,
        tests,
        warnings,
    })
}

/// Result of the two screening stages on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Screened {
    pub input: ScreeningInput,
    pub rough: AnomalyReport,
    pub greedy: AnomalyReport,
    pub objective_before: f64,
    pub objective_after: f64,
}

/// Rough screen then greedy confirmation; the returned input has the
/// confirmed cells screened.
pub fn screen<E: DecreaseEvaluator + ?Sized>(
    grid: &ScoreGrid,
    representation: Representation,
    config: &Config,
    evaluator: &E,
) -> Result<Screened, PipelineError> {
    let mut input = match representation {
        Representation::RawScores => ScreeningInput::raw(grid.clone()),
        Representation::RankSurrogate => screening::rank_surrogate(grid),
    };
    let rough = screening::rough_screen(&input, config.rough_alpha)?;
    let greedy = if config.strict_greedy {
        screening::greedy_select_strict(&input, &rough, config.greedy_fraction)?
    } else {
        screening::greedy_select_with(&input, &rough, config.greedy_fraction, evaluator)?
    };
    let objective_before = if input.grid.reviewer_count() >= 2 {
        input.objective()?
    } else {
        0.0
    };
    input.apply(&greedy)?;
    let objective_after = if input.grid.reviewer_count() >= 2 {
        input.objective()?
    } else {
        0.0
    };
    Ok(Screened {
        input,
        rough,
        greedy,
        objective_before,
        objective_after,
    })
}

/// Benefit matrix, weights, fusion and display scores on a screened grid.
pub fn evaluate(
    grid: &ScoreGrid,
    reference: usize,
    config: &Config,
) -> Result<(WeightVector, Vec<ReviewerSpread>, fse::EvaluationResult, Vec<Warning>), PipelineError>
{
    let benefit = fse::benefit_matrix(grid)?;
    let variation = fse::variation_weights(grid)?;
    let reliability = fse::reliability_weights(grid, config.reliability)?;
    let weights = WeightVector::new(variation.weights, reliability);
    let fused = fse::fuse(&benefit, &weights.w, config.weight_mode)?;
    let result = fse::final_scores(&fused, grid, reference)?;
    let mut warnings = benefit.warnings;
    warnings.extend(variation.warning);
    Ok((weights, variation.spreads, result, warnings))
}

fn record(
    table: &GradeTable,
    fusion_grid: &ScoreGrid,
    entry: &AnomalyEntry,
) -> AnomalyRecord {
    let column = fusion_grid
        .column_of(entry.student)
        .expect("entry comes from this grid");
    AnomalyRecord {
        class: table.class_id(entry.student.class).clone(),
        student: table.student_id(entry.student).clone(),
        reviewer: table.reviewer_id(entry.reviewer).clone(),
        score: fusion_grid.value(entry.reviewer, column),
        screening_value: entry.score,
        stage: entry.stage,
        decrease: entry.decrease,
    }
}

fn reference_index(table: &GradeTable, config: &Config) -> Result<usize, PipelineError> {
    match &config.reference_reviewer {
        None => Ok(0),
        Some(id) => table
            .reviewer_index(id)
            .ok_or_else(|| PipelineError::UnknownReference(id.clone())),
    }
}

fn warning_text(table: &GradeTable, w: &Warning) -> String {
    match w {
        Warning::ConstantBenefitRow { reviewer } => {
            format!("reviewer {}: {w}", table.reviewer_id(*reviewer))
        }
        _ => format!("{w}"),
    }
}

/// Runs screening (after reconciliation when there are several classes) and
/// stops before fusion. `results` and `weights` stay empty.
pub fn run_screening<E: DecreaseEvaluator + ?Sized>(
    table: &GradeTable,
    config: &Config,
    evaluator: &E,
) -> Result<(RunReport, ScoreGrid), PipelineError> {
    check_table(table, config)?;
    let mut report = RunReport::empty(table, config);
    let reconciled = reconcile(table, config)?;
    report.hypothesis_tests = reconciled.tests;
    report.warnings = reconciled.warnings;
    let screened = screen(&reconciled.grid, report.representation, config, evaluator)?;
    let mut fusion_grid = reconciled.grid;
    fusion_grid.copy_mask_from(&screened.input.grid);

    report.rough_flags = screened
        .rough
        .entries
        .iter()
        .map(|e| record(table, &fusion_grid, e))
        .collect();
    report.decreases = screened
        .greedy
        .entries
        .iter()
        .map(|e| record(table, &fusion_grid, e))
        .collect();
    if !config.strict_greedy {
        // strict mode lists removal order first, which is not a pure sort
        debug_assert!(report
            .decreases
            .windows(2)
            .all(|w| w[0].decrease >= w[1].decrease));
    }
    report.confirmed = screened
        .greedy
        .confirmed()
        .map(|e| record(table, &fusion_grid, e))
        .collect();
    report.objective_before = Some(screened.objective_before);
    report.objective_after = Some(screened.objective_after);
    Ok((report, fusion_grid))
}

/// Full pipeline on a table with any number of classes.
pub fn run<E: DecreaseEvaluator + ?Sized>(
    table: &GradeTable,
    config: &Config,
    evaluator: &E,
) -> Result<RunReport, PipelineError> {
    let reference = reference_index(table, config)?;
    let (mut report, fusion_grid) = run_screening(table, config, evaluator)?;
    let (weights, spreads, result, warnings) = evaluate(&fusion_grid, reference, config)?;
    report
        .warnings
        .extend(warnings.iter().map(|w| warning_text(table, w)));
    report.weights = (0..table.reviewers().len())
        .map(|r| ReviewerWeights {
            reviewer: table.reviewer_id(r).clone(),
            spread: spreads[r],
            w1: weights.w1[r],
            w2: weights.w2[r],
            w: weights.w[r],
        })
        .collect();
    report.reference_reviewer = Some(table.reviewer_id(reference).clone());
    report.reference_range = Some((result.reference_min, result.reference_max));
    report.results = result
        .students
        .iter()
        .map(|s| StudentResult {
            class: table.class_id(s.student.class).clone(),
            student: table.student_id(s.student).clone(),
            fused: s.fused,
            display: s.display,
            rank: s.rank,
        })
        .collect();
    Ok(report)
}

/// Full pipeline for a single class.
pub fn run_situation_1<E: DecreaseEvaluator + ?Sized>(
    table: &GradeTable,
    config: &Config,
    evaluator: &E,
) -> Result<RunReport, PipelineError> {
    if table.classes().len() != 1 {
        return Err(PipelineError::WrongSituation {
            expected: "exactly one class",
            classes: table.classes().len(),
        });
    }
    run(table, config, evaluator)
}

/// Full pipeline for two or more classes graded by the same reviewers.
pub fn run_situation_2<E: DecreaseEvaluator + ?Sized>(
    table: &GradeTable,
    config: &Config,
    evaluator: &E,
) -> Result<RunReport, PipelineError> {
    if table.classes().len() < 2 {
        return Err(PipelineError::WrongSituation {
            expected: "at least two classes",
            classes: table.classes().len(),
        });
    }
    run(table, config, evaluator)
}

/// Class comparison tests only.
pub fn run_tests(table: &GradeTable, config: &Config) -> Result<RunReport, PipelineError> {
    check_table(table, config)?;
    if table.classes().len() < 2 {
        return Err(PipelineError::WrongSituation {
            expected: "at least two classes",
            classes: table.classes().len(),
        });
    }
    let mut report = RunReport::empty(table, config);
    let reconciled = reconcile(table, config)?;
    report.hypothesis_tests = reconciled.tests;
    report.warnings = reconciled.warnings;
    Ok(report)
}

/// Marks the report's confirmed cells as screened in `table`.
pub fn apply_confirmed(table: &mut GradeTable, report: &RunReport) -> Result<(), ModelError> {
    for r in &report.confirmed {
        let at = table.locate(&r.class, &r.reviewer, &r.student)?;
        table.screen(at, Stage::Greedy)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::screening::Sequential;

    fn table() -> GradeTable {
        GradeTable::from_scores(
            "1",
            &["r1", "r2", "r3"],
            &["a", "b", "c", "d", "e", "f"],
            &[
                &[90.0, 85.0, 80.0, 75.0, 70.0, 65.0],
                &[88.0, 86.0, 79.0, 95.0, 69.0, 60.0],
                &[91.0, 84.0, 50.0, 74.0, 72.0, 66.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn config_ranges() {
        assert!(Config::default().validate().is_ok());
        for bad in [
            Config {
                rough_alpha: 0.0,
                ..Config::default()
            },
            Config {
                greedy_fraction: 1.2,
                ..Config::default()
            },
            Config {
                test_alpha: 1.0,
                ..Config::default()
            },
            Config {
                blend_alpha: Some(-0.1),
                ..Config::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(PipelineError::Config(_))));
        }
    }

    #[test]
    fn single_class_run() {
        let report = run_situation_1(&table(), &Config::default(), &Sequential).unwrap();
        assert_eq!(report.results.len(), 6);
        assert!(report.objective_after.unwrap() <= report.objective_before.unwrap());
        assert_eq!(
            report.confirmed.len(),
            screening::confirm_count(report.rough_flags.len(), 0.8)
        );
        let w = report.weight_vector();
        for v in [&w.w1, &w.w2, &w.w] {
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(report.hypothesis_tests.is_empty());
    }

    #[test]
    fn identical_reviewers_have_no_anomalies() {
        let row: &[f64] = &[90.0, 85.0, 80.0, 75.0];
        let t = GradeTable::from_scores("1", &["x", "y"], &["a", "b", "c", "d"], &[row, row])
            .unwrap();
        let report = run(&t, &Config::default(), &Sequential).unwrap();
        assert!(report.rough_flags.is_empty());
        let ranks: Vec<usize> = report.results.iter().map(|r| r.rank).collect();
        assert_eq!(ranks, [1, 2, 3, 4]);
    }

    #[test]
    fn situation_guards() {
        assert!(matches!(
            run_situation_2(&table(), &Config::default(), &Sequential),
            Err(PipelineError::WrongSituation { .. })
        ));
        assert!(run_tests(&table(), &Config::default()).is_err());
    }

    #[test]
    fn unknown_reference_reviewer() {
        let config = Config {
            reference_reviewer: Some("zz".into()),
            ..Config::default()
        };
        assert_eq!(
            run(&table(), &config, &Sequential).unwrap_err(),
            PipelineError::UnknownReference("zz".into())
        );
    }

    #[test]
    fn invalid_table_is_rejected() {
        let t = GradeTable::from_scores("1", &["x", "y"], &["a", "b"], &[&[101.0, 3.0], &[1.0, 2.0]])
            .unwrap();
        assert!(matches!(
            run(&t, &Config::default(), &Sequential),
            Err(PipelineError::Invalid(v)) if v.len() == 1
        ));
    }

    #[test]
    fn confirmed_cells_can_be_applied() {
        let mut t = table();
        let report = run(&t, &Config::default(), &Sequential).unwrap();
        apply_confirmed(&mut t, &report).unwrap();
        let screened = t.cells().filter(|(_, c)| !c.is_retained()).count();
        assert_eq!(screened, report.confirmed.len());
    }
}
