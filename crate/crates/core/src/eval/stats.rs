//! Two-sided t-tests on fold scores.

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Two-sided p-value of Student's t with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Paired: one-sample t on `a - b`. Unpaired: Welch's t.
///
/// With zero variance the statistic is undefined: p is 1 when the means
/// agree and 0 otherwise.
pub fn t_test(a: &[f64], b: &[f64], paired: bool) -> Result<TTest, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(EvalError::Plan("t-test needs at least two scores per side".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFiniteScore);
    }
    let n = a.len() as f64;
    let (diff, se2, df) = if paired {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let (m, v) = mean_var(&d);
        (m, v / n, n - 1.0)
    } else {
        let (ma, va) = mean_var(a);
        let (mb, vb) = mean_var(b);
        let (sa, sb) = (va / n, vb / n);
        let se2 = sa + sb;
        let df = if se2 > 0.0 {
            se2 * se2 / (sa * sa / (n - 1.0) + sb * sb / (n - 1.0))
        } else {
            2.0 * (n - 1.0)
        };
        (ma - mb, se2, df)
    };
    if se2 <= 0.0 {
        let p_value = if diff == 0.0 { 1.0 } else { 0.0 };
        let statistic = if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        return Ok(TTest {
            statistic,
            df,
            p_value,
        });
    }
    let t = diff / se2.sqrt();
    Ok(TTest {
        statistic: t,
        df,
        p_value: two_sided_p(t, df),
    })
}
