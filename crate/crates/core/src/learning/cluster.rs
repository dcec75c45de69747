// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::LearningError;

/// One-dimensional k-means over object stiffness. Cluster ids are 0-based in
/// ascending order of their centers.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StiffnessClusterer {
    centers: Vec<f64>,
}

impl StiffnessClusterer {
    pub fn from_centers(mut centers: Vec<f64>) -> Self {
        centers.sort_by(f64::total_cmp);
        Self { centers }
    }

    /// Globally optimal 1-D k-means by dynamic programming over the sorted
    /// values: in one dimension every optimal cluster is a contiguous run.
    /// Among equal-cost partitions the one with the earliest split wins.
    pub fn fit(values: &[f64], k: usize) -> Result<Self, LearningError> {
        let mut v: Vec<f64> = values.to_vec();
        if k == 0 || v.len() < k || v.iter().any(|x| !x.is_finite()) {
            return Err(LearningError::Config(format!("cannot fit {k} clusters to {} values", v.len())));
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mut s1 = vec![0.0; n + 1];
        let mut s2 = vec![0.0; n + 1];
        for i in 0..n {
            s1[i + 1] = s1[i] + v[i];
            s2[i + 1] = s2[i] + v[i] * v[i];
        }
        // Sum of squared deviations of v[i..j].
        let sse = |i: usize, j: usize| {
            let m = (j - i) as f64;
            let s = s1[j] - s1[i];
            (s2[j] - s2[i] - s * s / m).max(0.0)
        };
        // cost[c][j]: best cost of splitting v[..j] into c + 1 runs; cut[c][j]: start of the last run.
        let mut cost = vec![vec![f64::INFINITY; n + 1]; k];
        let mut cut = vec![vec![0usize; n + 1]; k];
        for (j, c) in cost[0].iter_mut().enumerate().skip(1) {
            *c = sse(0, j);
        }
        for c in 1..k {
            for j in (c + 1)..=n {
                for i in c..j {
                    let total = cost[c - 1][i] + sse(i, j);
                    if total < cost[c][j] - 1e-9 * total.abs().max(1.0) {
                        cost[c][j] = total;
                        cut[c][j] = i;
                    }
                }
            }
        }
        let mut centers = vec![0.0; k];
        let mut j = n;
        for c in (0..k).rev() {
            let i = if c == 0 { 0 } else { cut[c][j] };
            centers[c] = (s1[j] - s1[i]) / (j - i) as f64;
            j = i;
        }
        Ok(Self { centers })
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Nearest center; an exact tie goes to the lower-stiffness cluster.
    pub fn cluster_for(&self, stiffness: f64) -> Result<usize, LearningError> {
        if self.centers.is_empty() {
            return Err(LearningError::Unfitted);
        }
        let mut best = 0;
        for (i, c) in self.centers.iter().enumerate() {
            if (stiffness - c).abs() < (stiffness - self.centers[best]).abs() {
                best = i;
            }
        }
        Ok(best)
    }
}

/// Cluster id of a simulated object.
pub fn cluster_for(object: &crate::environment::SimObject, clusterer: &StiffnessClusterer) -> Result<usize, LearningError> {
    clusterer.cluster_for(object.stiffness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn builtin_stiffnesses() {
        let c = StiffnessClusterer::fit(&[450.0, 500.0, 1900.0, 2100.0], 2).unwrap();
        assert_eq!(c.centers(), &[475.0, 2000.0]);
        assert_eq!(c.cluster_for(400.0).unwrap(), 0);
        assert_eq!(c.cluster_for(2500.0).unwrap(), 1);
    }

    #[test]
    fn midway_goes_low() {
        let c = StiffnessClusterer::from_centers(vec![2000.0, 500.0]);
        assert_eq!(c.cluster_for(1250.0).unwrap(), 0);
    }

    #[test]
    fn unfitted_errors() {
        assert!(matches!(StiffnessClusterer::default().cluster_for(1.0), Err(LearningError::Unfitted)));
    }

    proptest! {
        #[test]
        fn two_means_matches_split_scan(mut v in proptest::collection::vec(0.0..3000.0f64, 2..12)) {
            let c = StiffnessClusterer::fit(&v, 2).unwrap();
            v.sort_by(f64::total_cmp);
            let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
            let cost = |s: &[f64]| { let m = mean(s); s.iter().map(|x| (x - m).powi(2)).sum::<f64>() };
            let best = (1..v.len()).map(|i| cost(&v[..i]) + cost(&v[i..])).fold(f64::INFINITY, f64::min);
            let got: f64 = v.iter().map(|x| c.centers().iter().map(|m| (x - m).powi(2)).fold(f64::INFINITY, f64::min)).sum();
            prop_assert!((got - best).abs() <= 1e-6 * best.max(1.0));
        }
    }
}
