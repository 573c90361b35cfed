//! Synthetic reviewer populations with known ground truth.
//!
//! Each reviewer maps ability `θ_j` to `scale_i * θ_j + bias_i (+ class
//! offset) + noise`; a Bernoulli(`anomaly_rate`) subset of cells is pushed
//! up or down by `anomaly_magnitude`. Scores are clipped to [0, 100] and
//! rounded to 2 decimals so the table passes validation.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::fse::EvaluationResult;
use crate::model::{CellRef, ClassId, GradeTable, ReviewerId, StudentId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("{0} must be at least 1")]
    EmptyDimension(&'static str),
    #[error("invalid range for {0}")]
    Range(&'static str),
    #[error("anomaly rate must lie in [0, 1], got {0}")]
    Rate(f64),
    #[error("{0} must be finite and non-negative")]
    Negative(&'static str),
    #[error("recovered ranking covers {recovered} students, truth has {truth}")]
    Mismatch { recovered: usize, truth: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SimSpec {
    /// Students per class.
    pub students: usize,
    pub reviewers: usize,
    pub classes: usize,
    pub ability_min: f64,
    pub ability_max: f64,
    pub bias_min: f64,
    pub bias_max: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    /// Extra additive offset per (class, reviewer).
    pub class_bias_min: f64,
    pub class_bias_max: f64,
    pub noise_std: f64,
    pub anomaly_rate: f64,
    pub anomaly_magnitude: f64,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            students: 50,
            reviewers: 3,
            classes: 1,
            ability_min: 55.0,
            ability_max: 95.0,
            bias_min: -5.0,
            bias_max: 5.0,
            scale_min: 0.9,
            scale_max: 1.05,
            class_bias_min: 0.0,
            class_bias_max: 0.0,
            noise_std: 3.0,
            anomaly_rate: 0.1,
            anomaly_magnitude: 20.0,
            seed: 0,
        }
    }
}

impl SimSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, n) in [
            ("students", self.students),
            ("reviewers", self.reviewers),
            ("classes", self.classes),
        ] {
            if n == 0 {
                return Err(SimError::EmptyDimension(name));
            }
        }
        for (name, lo, hi) in [
            ("ability", self.ability_min, self.ability_max),
            ("bias", self.bias_min, self.bias_max),
            ("scale", self.scale_min, self.scale_max),
            ("class bias", self.class_bias_min, self.class_bias_max),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(SimError::Range(name));
            }
        }
        if !(0.0..=1.0).contains(&self.anomaly_rate) {
            return Err(SimError::Rate(self.anomaly_rate));
        }
        for (name, v) in [
            ("noise std", self.noise_std),
            ("anomaly magnitude", self.anomaly_magnitude),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::Negative(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub table: GradeTable,
    /// Ability per student, in [`GradeTable::student_refs`] order.
    pub truth: Vec<f64>,
    /// Perturbed cells in (class, reviewer, student) order.
    pub anomalies: Vec<CellRef>,
}

fn width(n: usize) -> usize {
    let mut w = 1;
    let mut n = n;
    while n >= 10 {
        n /= 10;
        w += 1;
    }
    w
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Draws a table from `spec`. Identical specs give identical tables.
pub fn generate(spec: &SimSpec) -> Result<Simulation, SimError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|_| SimError::Negative("noise std"))?;

    let classes: Vec<ClassId> = (1..=spec.classes).map(|k| ClassId(format!("{k}"))).collect();
    let reviewers: Vec<ReviewerId> =
        (1..=spec.reviewers).map(|i| ReviewerId(format!("r{i}"))).collect();
    let w = width(spec.students);
    let students: Vec<StudentId> = (1..=spec.students)
        .map(|j| StudentId(format!("s{j:0w$}")))
        .collect();

    let truth: Vec<f64> = (0..spec.classes * spec.students)
        .map(|_| uniform(&mut rng, spec.ability_min, spec.ability_max))
        .collect();
    let reviewer_params: Vec<(f64, f64)> = (0..spec.reviewers)
        .map(|_| {
            let bias = uniform(&mut rng, spec.bias_min, spec.bias_max);
            let scale = uniform(&mut rng, spec.scale_min, spec.scale_max);
            (bias, scale)
        })
        .collect();
    let class_bias: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| {
            (0..spec.reviewers)
                .map(|_| uniform(&mut rng, spec.class_bias_min, spec.class_bias_max))
                .collect()
        })
        .collect();

    let mut table = GradeTable::new(
        classes,
        reviewers,
        alloc::vec![students; spec.classes],
    )
    .expect("generated ids are unique");
    let mut anomalies = Vec::new();
    for class in 0..spec.classes {
        for (reviewer, &(bias, scale)) in reviewer_params.iter().enumerate() {
            for student in 0..spec.students {
                let theta = truth[class * spec.students + student];
                let mut g = scale * theta + bias + class_bias[class][reviewer] + noise.sample(&mut rng);
                let at = CellRef {
                    class,
                    reviewer,
                    student,
                };
                if rng.random_bool(spec.anomaly_rate) {
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    g += sign * spec.anomaly_magnitude;
                    anomalies.push(at);
                }
                let g = libm::round(g.clamp(0.0, 100.0) * 100.0) / 100.0;
                table.insert(at, g).expect("each cell is written once");
            }
        }
    }
    Ok(Simulation {
        table,
        truth,
        anomalies,
    })
}

/// Kendall rank correlation `1 - 2 * discordant / C(n, 2)` between two score
/// vectors (larger is better in both). Pairs tied in either vector count as
/// neither concordant nor discordant.
pub fn kendall_correlation(recovered: &[f64], truth: &[f64]) -> Result<f64, SimError> {
    if recovered.len() != truth.len() {
        return Err(SimError::Mismatch {
            recovered: recovered.len(),
            truth: truth.len(),
        });
    }
    let n = truth.len();
    if n < 2 {
        return Ok(1.0);
    }
    let mut discordant = 0usize;
    for a in 0..n {
        for b in a + 1..n {
            let x = recovered[a] - recovered[b];
            let y = truth[a] - truth[b];
            if (x > 0.0 && y < 0.0) || (x < 0.0 && y > 0.0) {
                discordant += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(1.0 - 2.0 * discordant as f64 / pairs)
}

/// Correlation between the evaluated ranking and the true abilities.
pub fn recovery_quality(result: &EvaluationResult, truth: &[f64]) -> Result<f64, SimError> {
    let recovered: Vec<f64> = result.students.iter().map(|s| s.display).collect();
    kendall_correlation(&recovered, truth)
}

/// Plain per-student average over every cell, the no-screening baseline.
pub fn mean_baseline(table: &GradeTable) -> Vec<f64> {
    let reviewers = table.reviewers().len();
    table
        .student_refs()
        .map(|s| {
            let total: f64 = (0..reviewers)
                .filter_map(|reviewer| {
                    table.cell(CellRef {
                        class: s.class,
                        reviewer,
                        student: s.student,
                    })
                })
                .map(|c| c.score)
                .sum();
            total / reviewers as f64
        })
        .collect()
}
