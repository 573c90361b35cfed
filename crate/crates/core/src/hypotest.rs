//! Cross-class scale reconciliation for one reviewer.
//!
//! A reviewer's scores for a later class are compared against the same
//! reviewer's scores for the reference class with a pooled two-sample t test
//! (means) and an F test (variances). The pair of decisions selects one of
//! four affine transforms, blended with the original scores by `alpha`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dist::{self, DistError};
use crate::stats;
use crate::warning::Warning;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HypotestError {
    #[error("each class needs at least 2 scores (got {0} and {1})")]
    TooFewScores(usize, usize),
    #[error("significance level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("blend weight must lie in [0, 1], got {0}")]
    InvalidBlend(f64),
    #[error("all scores identical across both classes; pooled variance is zero")]
    DegeneratePooledVariance,
    #[error("reference class has zero variance; variance ratio undefined")]
    ZeroReferenceVariance,
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Mean, (n - 1) standard deviation and size of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl SampleStats {
    /// Requires at least 2 values.
    pub fn of(xs: &[f64]) -> Self {
        Self {
            mean: stats::mean(xs),
            std: stats::sample_std(xs),
            n: xs.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanTest {
    pub statistic: f64,
    pub critical: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceTest {
    pub statistic: f64,
    pub lower: f64,
    pub upper: f64,
    pub reject: bool,
}

fn check_inputs(reference: &[f64], compared: &[f64], alpha: f64) -> Result<(), HypotestError> {
    if reference.len() < 2 || compared.len() < 2 {
        return Err(HypotestError::TooFewScores(reference.len(), compared.len()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(HypotestError::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Pooled-variance two-sample t test of equal means.
///
/// The statistic is `(G2 - G1) / Sw * sqrt(n1 n2 / (n1 + n2))`; the test
/// rejects when its magnitude exceeds `t_{n1+n2-2}(alpha / 2)`.
pub fn mean_test(reference: &[f64], compared: &[f64], alpha: f64) -> Result<MeanTest, HypotestError> {
    check_inputs(reference, compared, alpha)?;
    let (a, b) = (SampleStats::of(reference), SampleStats::of(compared));
    let (n1, n2) = (a.n as f64, b.n as f64);
    let pooled_var =
        ((n1 - 1.0) * a.std * a.std + (n2 - 1.0) * b.std * b.std) / (n1 + n2 - 2.0);
    if pooled_var <= 0.0 {
        return Err(HypotestError::DegeneratePooledVariance);
    }
    let statistic = (b.mean - a.mean) / libm::sqrt(pooled_var) * libm::sqrt(n1 * n2 / (n1 + n2));
    let critical = dist::t_quantile((a.n + b.n - 2) as u32, alpha / 2.0)?;
    Ok(MeanTest {
        statistic,
        critical,
        reject: libm::fabs(statistic) > critical,
    })
}

/// F test of equal variances on the ratio `S2^2 / S1^2`, two-sided with
/// critical values from `F_{n2-1, n1-1}`.
pub fn variance_test(
    reference: &[f64],
    compared: &[f64],
    alpha: f64,
) -> Result<VarianceTest, HypotestError> {
    check_inputs(reference, compared, alpha)?;
    let (a, b) = (SampleStats::of(reference), SampleStats::of(compared));
    if a.std <= 0.0 {
        return Err(HypotestError::ZeroReferenceVariance);
    }
    let statistic = (b.std * b.std) / (a.std * a.std);
    let (df1, df2) = ((b.n - 1) as u32, (a.n - 1) as u32);
    let lower = dist::f_quantile(df1, df2, 1.0 - alpha / 2.0)?;
    let upper = dist::f_quantile(df1, df2, alpha / 2.0)?;
    Ok(VarianceTest {
        statistic,
        lower,
        upper,
        reject: statistic < lower || statistic > upper,
    })
}

/// Which transform applies, from (mean rejected, variance rejected).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum TransformCase {
    /// Both rejected: match mean and spread to the reference.
    MeanAndScale,
    /// Only the mean test rejected: shift onto the reference mean.
    Shift,
    /// Only the variance test rejected: match spread, keep own mean.
    Scale,
    /// Neither rejected: unchanged.
    Identity,
}

impl TransformCase {
    pub fn from_decisions(mean_reject: bool, variance_reject: bool) -> Self {
        match (mean_reject, variance_reject) {
            (true, true) => Self::MeanAndScale,
            (true, false) => Self::Shift,
            (false, true) => Self::Scale,
            (false, false) => Self::Identity,
        }
    }

    /// Case number 1-4 in the order listed above.
    pub fn number(self) -> u8 {
        match self {
            Self::MeanAndScale => 1,
            Self::Shift => 2,
            Self::Scale => 3,
            Self::Identity => 4,
        }
    }
}

impl From<TransformCase> for u8 {
    fn from(c: TransformCase) -> u8 {
        c.number()
    }
}

impl TryFrom<u8> for TransformCase {
    type Error = &'static str;

    fn try_from(n: u8) -> Result<Self, Self::Error> {
        match n {
            1 => Ok(Self::MeanAndScale),
            2 => Ok(Self::Shift),
            3 => Ok(Self::Scale),
            4 => Ok(Self::Identity),
            _ => Err("transform case must be 1, 2, 3 or 4"),
        }
    }
}

/// Outcome of testing one reviewer's compared class against the reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassComparison {
    pub reference: SampleStats,
    pub compared: SampleStats,
    pub mean_test: Option<MeanTest>,
    pub variance_test: Option<VarianceTest>,
    pub case: TransformCase,
    pub warnings: Vec<Warning>,
}

impl ClassComparison {
    pub fn mean_rejected(&self) -> bool {
        self.mean_test.is_some_and(|t| t.reject)
    }

    pub fn variance_rejected(&self) -> bool {
        self.variance_test.is_some_and(|t| t.reject)
    }
}

/// Runs both tests. A test that cannot run on degenerate data counts as not
/// rejected and leaves a warning.
pub fn compare_classes(
    reference: &[f64],
    compared: &[f64],
    alpha: f64,
) -> Result<ClassComparison, HypotestError> {
    check_inputs(reference, compared, alpha)?;
    let mut warnings = Vec::new();
    let mean = match mean_test(reference, compared, alpha) {
        Ok(t) => Some(t),
        Err(HypotestError::DegeneratePooledVariance) => {
            warnings.push(Warning::DegeneratePooledVariance);
            None
        }
        Err(e) => return Err(e),
    };
    let variance = match variance_test(reference, compared, alpha) {
        Ok(t) => Some(t),
        Err(HypotestError::ZeroReferenceVariance) => {
            warnings.push(Warning::ZeroReferenceVariance);
            None
        }
        Err(e) => return Err(e),
    };
    let case = TransformCase::from_decisions(
        mean.is_some_and(|t| t.reject),
        variance.is_some_and(|t| t.reject),
    );
    Ok(ClassComparison {
        reference: SampleStats::of(reference),
        compared: SampleStats::of(compared),
        mean_test: mean,
        variance_test: variance,
        case,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub scores: Vec<f64>,
    pub applied: TransformCase,
    pub warning: Option<Warning>,
}

/// Applies the comparison's transform to the compared class, blended as
/// `(1 - blend) * target + blend * g`. The reference class is never touched.
///
/// With a constant compared class the scale cases fall back: case 1 to
/// case 2, case 3 to case 4.
pub fn rescale(compared: &[f64], cmp: &ClassComparison, blend: f64) -> Result<Rescaled, HypotestError> {
    if !(0.0..=1.0).contains(&blend) {
        return Err(HypotestError::InvalidBlend(blend));
    }
    let (g1, s1) = (cmp.reference.mean, cmp.reference.std);
    let (g2, s2) = (cmp.compared.mean, cmp.compared.std);
    let mut applied = cmp.case;
    let mut warning = None;
    if s2 <= 0.0 {
        let fallback = match cmp.case {
            TransformCase::MeanAndScale => Some(TransformCase::Shift),
            TransformCase::Scale => Some(TransformCase::Identity),
            _ => None,
        };
        if let Some(to) = fallback {
            warning = Some(Warning::ZeroComparedVariance {
                requested: cmp.case,
                applied: to,
            });
            applied = to;
        }
    }
    let keep = 1.0 - blend;
    let scores = compared
        .iter()
        .map(|&g| match applied {
            TransformCase::MeanAndScale => keep * (s1 / s2 * (g - g2) + g1) + blend * g,
            TransformCase::Shift => keep * (g - g2 + g1) + blend * g,
            TransformCase::Scale => keep * (s1 / s2 * (g - g2) + g2) + blend * g,
            TransformCase::Identity => g,
        })
        .collect();
    Ok(Rescaled {
        scores,
        applied,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const C1: [f64; 5] = [70.0, 72.0, 74.0, 76.0, 78.0];

    #[test]
    fn identical_classes_accept() {
        let t = mean_test(&C1, &C1, 0.05).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert!(!t.reject);
        let f = variance_test(&C1, &C1, 0.05).unwrap();
        assert_eq!(f.statistic, 1.0);
        assert!(!f.reject);
    }

    #[test]
    fn swapping_classes_negates_t() {
        let c2 = [71.0, 79.0, 73.0, 90.0, 66.0];
        let ab = mean_test(&C1, &c2, 0.05).unwrap();
        let ba = mean_test(&c2, &C1, 0.05).unwrap();
        assert_eq!(ab.statistic, -ba.statistic);
        assert_eq!(ab.reject, ba.reject);
    }

    #[test]
    fn clear_mean_shift_rejects() {
        let c2 = [85.0, 87.0, 89.0, 91.0, 93.0];
        let t = mean_test(&C1, &c2, 0.05).unwrap();
        // 15 / (sqrt(10) * sqrt(2/5))
        assert!((t.statistic - 15.0 / (libm::sqrt(10.0) * libm::sqrt(0.4))).abs() < 1e-12);
        assert!((t.critical - 2.306).abs() < 1e-3);
        assert!(t.reject);
    }

    #[test]
    fn tenfold_spread_rejects_variance() {
        let mean = stats::mean(&C1);
        let c2: Vec<f64> = C1.iter().map(|g| 10.0 * (g - mean) + mean).collect();
        let f = variance_test(&C1, &c2, 0.05).unwrap();
        assert!((f.statistic - 100.0).abs() < 1e-9);
        assert!(f.reject);
    }

    #[test]
    fn shift_keeps_variance() {
        let c2: Vec<f64> = C1.iter().map(|g| g + 20.0).collect();
        let f = variance_test(&C1, &c2, 0.05).unwrap();
        assert!((f.statistic - 1.0).abs() < 1e-12);
        assert!(!f.reject);
    }

    #[test]
    fn degenerate_inputs() {
        let flat = [70.0; 4];
        assert_eq!(
            mean_test(&flat, &flat, 0.05),
            Err(HypotestError::DegeneratePooledVariance)
        );
        assert_eq!(
            variance_test(&flat, &C1, 0.05),
            Err(HypotestError::ZeroReferenceVariance)
        );
        let cmp = compare_classes(&flat, &flat, 0.05).unwrap();
        assert_eq!(cmp.case, TransformCase::Identity);
        assert_eq!(
            cmp.warnings,
            vec![Warning::DegeneratePooledVariance, Warning::ZeroReferenceVariance]
        );
        assert!(mean_test(&[1.0], &C1, 0.05).is_err());
    }

    #[test]
    fn case_table() {
        use TransformCase::*;
        assert_eq!(TransformCase::from_decisions(true, true), MeanAndScale);
        assert_eq!(TransformCase::from_decisions(true, false), Shift);
        assert_eq!(TransformCase::from_decisions(false, true), Scale);
        assert_eq!(TransformCase::from_decisions(false, false), Identity);
        for n in 1..=4u8 {
            assert_eq!(TransformCase::try_from(n).unwrap().number(), n);
        }
        assert!(TransformCase::try_from(5).is_err());
    }

    fn comparison(case: TransformCase, compared: &[f64]) -> ClassComparison {
        ClassComparison {
            reference: SampleStats::of(&C1),
            compared: SampleStats::of(compared),
            mean_test: None,
            variance_test: None,
            case,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn identity_case_returns_input() {
        let c2 = [50.0, 61.5, 99.0];
        let out = rescale(&c2, &comparison(TransformCase::Identity, &c2), 0.3).unwrap();
        assert_eq!(out.scores, c2.to_vec());
    }

    #[test]
    fn unblended_shift_lands_on_reference_mean() {
        let c2 = [50.0, 61.5, 99.0, 80.0];
        let out = rescale(&c2, &comparison(TransformCase::Shift, &c2), 0.0).unwrap();
        let delta = stats::mean(&C1) - stats::mean(&c2);
        for (a, b) in out.scores.iter().zip(&c2) {
            assert!((a - (b + delta)).abs() < 1e-12);
        }
        assert!((stats::mean(&out.scores) - stats::mean(&C1)).abs() < 1e-12);
    }

    #[test]
    fn constant_compared_class_falls_back() {
        let c2 = [80.0; 3];
        let out = rescale(&c2, &comparison(TransformCase::MeanAndScale, &c2), 0.0).unwrap();
        assert_eq!(out.applied, TransformCase::Shift);
        assert!(out.warning.is_some());
        assert!(out.scores.iter().all(|g| (g - 74.0).abs() < 1e-12));
        let out = rescale(&c2, &comparison(TransformCase::Scale, &c2), 0.0).unwrap();
        assert_eq!(out.applied, TransformCase::Identity);
        assert_eq!(out.scores, c2.to_vec());
    }

    #[test]
    fn blend_must_be_a_weight() {
        let c2 = [1.0, 2.0];
        assert!(rescale(&c2, &comparison(TransformCase::Shift, &c2), 1.5).is_err());
    }
}
