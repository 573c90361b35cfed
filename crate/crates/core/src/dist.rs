//! Upper-tail critical values of Student's t and Fisher's F distributions.
//!
//! Both tails reduce to the regularized incomplete beta function, evaluated
//! with the Lentz continued fraction, and are inverted by bisection on a
//! bracket found by doubling. Everything is deterministic.

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum DistError {
    #[error("probability must lie strictly between 0 and 1, got {0}")]
    Probability(f64),
    #[error("degrees of freedom must be at least 1")]
    DegreesOfFreedom,
}

const CF_MAX_ITER: usize = 10_000;
const CF_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if libm::fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if libm::fabs(del - 1.0) < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    incomplete_beta(a, b, x, 1.0 - x)
}

/// `I_x(a, b)` with the complement `y = 1 - x` supplied separately, so
/// callers that can form `y` without cancellation keep full precision.
fn incomplete_beta(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * libm::log(x)
        + b * libm::log(y);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, y) / b
    }
}

/// `P(T > t)` for Student's t with `df` degrees of freedom.
pub fn t_upper_tail(df: u32, t: f64) -> f64 {
    let v = df as f64;
    let half = 0.5 * regularized_incomplete_beta(v / 2.0, 0.5, v / (v + t * t));
    if t >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

/// `P(F > f)` for Fisher's F with `(df1, df2)` degrees of freedom.
pub fn f_upper_tail(df1: u32, df2: u32, f: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    let (d1, d2) = (df1 as f64, df2 as f64);
    let denom = d2 + d1 * f;
    incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / denom, d1 * f / denom)
}

/// `P(F <= f)`, computed directly rather than as `1 - P(F > f)`.
fn f_lower_tail(df1: u32, df2: u32, f: f64) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    let (d1, d2) = (df1 as f64, df2 as f64);
    let denom = d2 + d1 * f;
    incomplete_beta(d1 / 2.0, d2 / 2.0, d1 * f / denom, d2 / denom)
}

fn check(df: u32, p: f64) -> Result<(), DistError> {
    if df == 0 {
        return Err(DistError::DegreesOfFreedom);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(DistError::Probability(p));
    }
    Ok(())
}

/// Root of a decreasing `tail` on `(0, inf)` where `tail(x) = p`.
fn invert_decreasing(tail: impl Fn(f64) -> f64, p: f64) -> f64 {
    let mut lo = 1.0;
    let mut hi = 1.0;
    if tail(1.0) > p {
        while tail(hi) > p {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        while tail(lo) <= p && lo > f64::MIN_POSITIVE {
            hi = lo;
            lo /= 2.0;
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tail(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Upper-tail critical value `t_df(p)`: `P(T > t) = p`.
pub fn t_quantile(df: u32, p: f64) -> Result<f64, DistError> {
    check(df, p)?;
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return Ok(-invert_decreasing(|t| t_upper_tail(df, t), 1.0 - p));
    }
    Ok(invert_decreasing(|t| t_upper_tail(df, t), p))
}

/// Upper-tail critical value `F_{df1,df2}(p)`: `P(F > f) = p`.
pub fn f_quantile(df1: u32, df2: u32, p: f64) -> Result<f64, DistError> {
    check(df1, p)?;
    check(df2, p)?;
    if p > 0.5 {
        // small quantiles are resolved on the lower tail
        return Ok(invert_decreasing(|f| -f_lower_tail(df1, df2, f), -(1.0 - p)));
    }
    Ok(invert_decreasing(|f| f_upper_tail(df1, df2, f), p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_table_point() {
        assert!((t_quantile(10, 0.025).unwrap() - 2.228).abs() < 1e-3);
    }

    #[test]
    fn t_median_is_zero() {
        for df in [1, 2, 7, 100] {
            assert_eq!(t_quantile(df, 0.5).unwrap(), 0.0);
        }
    }

    #[test]
    fn cauchy_quartile() {
        // t with 1 df is Cauchy: upper quartile at tan(pi/4)
        assert!((t_quantile(1, 0.25).unwrap() - 1.0).abs() < 1e-9);
        assert!((t_quantile(1, 0.75).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn f_table_point() {
        assert!((f_quantile(10, 10, 0.025).unwrap() - 3.717).abs() / 3.717 < 1e-2);
    }

    #[test]
    fn f_median_with_equal_df_is_one() {
        for df in [1, 4, 30] {
            assert!((f_quantile(df, df, 0.5).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn probability_outside_unit_interval() {
        assert_eq!(t_quantile(3, 0.0), Err(DistError::Probability(0.0)));
        assert_eq!(t_quantile(3, 1.0), Err(DistError::Probability(1.0)));
        assert!(f_quantile(3, 4, -0.1).is_err());
        assert_eq!(t_quantile(0, 0.1), Err(DistError::DegreesOfFreedom));
    }

    #[test]
    fn beta_symmetry() {
        for (a, b, x) in [(2.0, 3.0, 0.3), (0.5, 5.0, 0.9), (10.0, 0.5, 0.99)] {
            let lhs = regularized_incomplete_beta(a, b, x);
            let rhs = 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);
            assert!((lhs - rhs).abs() < 1e-13);
        }
    }
}
