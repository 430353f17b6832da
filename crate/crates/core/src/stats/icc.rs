use serde::Serialize;

use super::StatsError;

/// One-way random-effects ICC(1) with its ANOVA components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IccResult {
    /// Estimate clipped to `[0, 1]`.
    pub icc: f64,
    /// Unclipped estimate; `None` when all values are identical.
    pub raw: Option<f64>,
    /// The raw estimate was negative and has been set to 0.
    pub clipped: bool,
    pub msb: f64,
    pub msw: f64,
    /// Effective group size `(N - sum(n_g^2)/N) / (G - 1)`.
    pub m_bar: f64,
    pub groups: usize,
    pub n: usize,
}

/// ICC(1) = (MSB - MSW) / (MSB + (m - 1) MSW) over groups of observations.
pub fn icc_oneway(groups: &[Vec<f64>]) -> Result<IccResult, StatsError> {
    let groups: Vec<&Vec<f64>> = groups.iter().filter(|g| !g.is_empty()).collect();
    let g = groups.len();
    let n: usize = groups.iter().map(|v| v.len()).sum();
    if g < 2 || n < g + 2 {
        return Err(StatsError::TooFewGroups);
    }
    if groups.iter().flat_map(|v| v.iter()).any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let grand = groups.iter().flat_map(|v| v.iter()).sum::<f64>() / n as f64;
    let (mut ssb, mut ssw, mut sq) = (0.0, 0.0, 0.0);
    for v in &groups {
        let k = v.len() as f64;
        let m = v.iter().sum::<f64>() / k;
        ssb += k * (m - grand).powi(2);
        ssw += v.iter().map(|x| (x - m).powi(2)).sum::<f64>();
        sq += k * k;
    }
    let msb = ssb / (g - 1) as f64;
    let msw = ssw / (n - g) as f64;
    let m_bar = (n as f64 - sq / n as f64) / (g - 1) as f64;
    let denom = msb + (m_bar - 1.0) * msw;
    let raw = (denom > 0.0).then(|| (msb - msw) / denom);
    let (icc, clipped) = match raw {
        Some(r) if r < 0.0 => (0.0, true),
        Some(r) => (r.min(1.0), false),
        None => (0.0, false),
    };
    Ok(IccResult {
        icc,
        raw,
        clipped,
        msb,
        msw,
        m_bar,
        groups: g,
        n,
    })
}

/// Variance inflation of clustered sampling: `1 + (m - 1) * icc`.
pub fn design_effect(icc: f64, mean_cluster_size: f64) -> f64 {
    1.0 + (mean_cluster_size - 1.0) * icc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn perfect_clustering() {
        let r = icc_oneway(&[vec![1.0, 1.0], vec![3.0, 3.0]]).unwrap();
        assert_eq!(r.icc, 1.0);
    }

    #[test]
    fn equal_means_clip_to_zero() {
        let r = icc_oneway(&[vec![1.0, 3.0], vec![3.0, 1.0]]).unwrap();
        assert_eq!(r.icc, 0.0);
        assert!(r.clipped);
        assert!(r.raw.unwrap() < 0.0);
    }

    #[test]
    fn three_pairs() {
        // MSB = 2*(16+0+16)/2 = 32, MSW = 1.5/3 = 0.5, m = 2.
        let r = icc_oneway(&[vec![1.0, 2.0], vec![5.0, 6.0], vec![9.0, 10.0]]).unwrap();
        assert_relative_eq!(r.msb, 32.0);
        assert_relative_eq!(r.msw, 0.5);
        assert_relative_eq!(r.icc, 31.5 / 32.5, max_relative = 1e-14);
    }

    #[test]
    fn too_few_groups() {
        assert_eq!(
            icc_oneway(&[vec![1.0, 2.0, 3.0]]),
            Err(StatsError::TooFewGroups)
        );
    }

    #[test]
    fn design_effects() {
        assert_relative_eq!(design_effect(0.86, 7.0), 6.16, max_relative = 1e-14);
        assert_eq!(design_effect(0.0, 7.0), 1.0);
        assert_eq!(design_effect(0.86, 1.0), 1.0);
    }
}
