use std::collections::BTreeMap;

use super::AnalysisError;
use crate::entropy::DistributionTable;

pub const DEFAULT_KL_EPSILON: f64 = 1e-9;

/// Both distributions extended to the union of their supports. An outcome
/// missing from one side gets mass `epsilon` there, and that side is then
/// renormalized.
pub fn smooth_pair<T: Ord + Clone>(
    p: &DistributionTable<T>,
    q: &DistributionTable<T>,
    epsilon: f64,
) -> Result<(BTreeMap<T, f64>, BTreeMap<T, f64>), AnalysisError> {
    if !(epsilon > 0.0) {
        return Err(AnalysisError::NonPositiveEpsilon(epsilon));
    }
    let union: Vec<&T> = p.probabilities().keys().chain(q.probabilities().keys()).collect();
    let fill = |d: &DistributionTable<T>| {
        let mut m: BTreeMap<T, f64> = union
            .iter()
            .map(|&k| (k.clone(), d.probabilities().get(k).copied().unwrap_or(epsilon)))
            .collect();
        let z: f64 = m.values().sum();
        m.values_mut().for_each(|v| *v /= z);
        m
    };
    Ok((fill(p), fill(q)))
}

/// `Σ p(x) log₂(p(x)/q(x))` over the smoothed union support.
pub fn kl_divergence<T: Ord + Clone>(
    p: &DistributionTable<T>,
    q: &DistributionTable<T>,
    epsilon: f64,
) -> Result<f64, AnalysisError> {
    let (ps, qs) = smooth_pair(p, q, epsilon)?;
    Ok(ps.iter().map(|(k, &pv)| pv * (pv / qs[k]).log2()).sum())
}
