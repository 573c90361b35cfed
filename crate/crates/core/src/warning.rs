use core::fmt;

use serde::{Deserialize, Serialize};

use crate::hypotest::TransformCase;

/// Non-fatal degenerate-statistics events. Each one names the fallback that
/// was taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Both classes constant: mean test skipped, treated as not rejected.
    DegeneratePooledVariance,
    /// Reference class constant: variance test skipped, treated as not rejected.
    ZeroReferenceVariance,
    /// Compared class constant, so its scale cannot be matched.
    ZeroComparedVariance { requested: TransformCase, applied: TransformCase },
    /// Reviewer's retained scores are all equal; benefits set to 0.5.
    ConstantBenefitRow { reviewer: usize },
    /// No reviewer shows any spread; discrimination weights made uniform.
    UniformVariationWeights,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DegeneratePooledVariance => {
                f.write_str("pooled variance is zero; mean test skipped (case 4 for the mean)")
            }
            Warning::ZeroReferenceVariance => {
                f.write_str("reference class variance is zero; variance test skipped")
            }
            Warning::ZeroComparedVariance { requested, applied } => write!(
                f,
                "compared class variance is zero; transform case {} replaced by case {}",
                requested.number(),
                applied.number()
            ),
            Warning::ConstantBenefitRow { .. } => {
                f.write_str("constant retained scores; benefits set to 0.5")
            }
            Warning::UniformVariationWeights => {
                f.write_str("no reviewer has score spread; variation weights set uniform")
            }
        }
    }
}
