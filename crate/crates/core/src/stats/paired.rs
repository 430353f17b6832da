use serde::Serialize;
use statrs::function::beta::beta_reg;

use super::StatsError;

/// Comparison of two matched samples, `b` against `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedSummary {
    pub mean_a: f64,
    pub mean_b: f64,
    pub delta: f64,
    /// Sample SD (n - 1) of `b - a`.
    pub sd_diff: f64,
    /// `100 * delta / mean_a`; absent when `mean_a == 0`.
    pub pct_change: Option<f64>,
    /// `delta / sd_diff`; 0 when the differences have no spread.
    pub cohens_d: f64,
    pub degenerate: bool,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

fn check(a: &[f64], b: &[f64]) -> Result<(), StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(StatsError::TooFewPairs(a.len()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn paired_summary(a: &[f64], b: &[f64]) -> Result<PairedSummary, StatsError> {
    check(a, b)?;
    let n = a.len();
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let mean_a = mean(a);
    let mean_b = mean(b);
    let delta = mean(&diffs);
    let ss: f64 = diffs.iter().map(|d| (d - delta).powi(2)).sum();
    let sd_diff = (ss / (n - 1) as f64).sqrt();
    let degenerate = sd_diff == 0.0;
    Ok(PairedSummary {
        mean_a,
        mean_b,
        delta,
        sd_diff,
        pct_change: (mean_a != 0.0).then(|| 100.0 * delta / mean_a),
        cohens_d: if degenerate { 0.0 } else { delta / sd_diff },
        degenerate,
        n,
    })
}

/// Two-sided p-value of Student's t: `I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest, StatsError> {
    let s = paired_summary(a, b)?;
    if s.degenerate {
        return Err(StatsError::DegenerateVariance);
    }
    let t = s.delta / (s.sd_diff / (s.n as f64).sqrt());
    let df = (s.n - 1) as f64;
    Ok(TTest {
        t,
        df,
        p: student_t_two_sided_p(t, df),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hand_arithmetic() {
        let s = paired_summary(&[1.0, 2.0, 3.0, 4.0], &[2.0, 2.0, 4.0, 6.0]).unwrap();
        assert_eq!(s.delta, 1.0);
        assert_relative_eq!(s.sd_diff, (2.0f64 / 3.0).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(s.cohens_d, 1.224744871391589, max_relative = 1e-12);
        assert_eq!(s.pct_change, Some(40.0));
    }

    #[test]
    fn identical_vectors_are_degenerate() {
        let a = [0.1, 0.2, 0.3];
        let s = paired_summary(&a, &a).unwrap();
        assert_eq!((s.delta, s.cohens_d, s.degenerate), (0.0, 0.0, true));
        assert_eq!(paired_t_test(&a, &a), Err(StatsError::DegenerateVariance));
    }

    #[test]
    fn zero_delta_gives_unit_p() {
        let t = paired_t_test(&[1.0, 2.0, 3.0], &[2.0, 1.0, 3.0]).unwrap();
        assert_eq!((t.t, t.p), (0.0, 1.0));
    }

    #[test]
    fn errors() {
        assert_eq!(
            paired_summary(&[1.0], &[1.0, 2.0]),
            Err(StatsError::LengthMismatch(1, 2))
        );
        assert_eq!(
            paired_summary(&[1.0], &[1.0]),
            Err(StatsError::TooFewPairs(1))
        );
    }
}
