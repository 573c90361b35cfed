//! Summation helpers with a fixed left-to-right order, so results do not
//! depend on how callers split work.

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased (n - 1) sample variance. Requires `xs.len() >= 2`.
pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub(crate) fn sample_std(xs: &[f64]) -> f64 {
    libm::sqrt(sample_variance(xs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sample() {
        let xs = [80.0, 82.0, 50.0];
        assert!((mean(&xs) - 70.666_666_666_666_67).abs() < 1e-12);
        assert!((sample_std(&xs) - 17.925_772_879_665_01).abs() < 1e-9);
    }
}
