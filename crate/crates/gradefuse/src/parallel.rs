use gradefuse_core::screening::{self, DecreaseEvaluator, ScreeningError};
use gradefuse_core::ScreeningInput;
use rayon::prelude::*;

/// Evaluates decreases on the rayon pool. Each value is computed exactly as
/// in the sequential evaluator and results keep input order, so reports are
/// identical.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl DecreaseEvaluator for Parallel {
    fn evaluate(
        &self,
        input: &ScreeningInput,
        cells: &[(usize, usize)],
    ) -> Vec<Result<f64, ScreeningError>> {
        cells
            .par_iter()
            .map(|&(reviewer, column)| screening::greedy_decrease(input, reviewer, column))
            .collect()
    }
}
