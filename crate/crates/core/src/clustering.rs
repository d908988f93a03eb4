//! Country clustering by affinity propagation over popularity-curve feature
//! vectors.
//!
//! Affinity propagation exchanges responsibility and availability messages
//! between data points until a stable set of exemplars emerges; every point
//! is then assigned to the exemplar it is most similar to. The similarity is
//! negative squared Euclidean distance, and the shared preference (diagonal
//! of the similarity matrix) defaults to the median off-diagonal similarity.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::UserArtistMatrix;
use crate::popularity::{global_rank_order, profile, Basis, Scope};
use crate::types::CountryCode;

/// Dense square similarity matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.n + k]
    }

    pub fn set(&mut self, i: usize, k: usize, value: f64) {
        self.data[i * self.n + k] = value;
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InsufficientData { needed: 2, got: n });
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::MismatchedSupports);
        }
        Ok(SimilarityMatrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Median of the off-diagonal entries (average of the two central values
    /// for an even count).
    pub fn median_off_diagonal(&self) -> f64 {
        let mut values = Vec::with_capacity(self.n * (self.n - 1));
        for i in 0..self.n {
            for k in 0..self.n {
                if i != k {
                    values.push(self.get(i, k));
                }
            }
        }
        values.sort_unstable_by(|a, b| a.total_cmp(b));
        let m = values.len();
        if m % 2 == 1 {
            values[m / 2]
        } else {
            0.5 * (values[m / 2 - 1] + values[m / 2])
        }
    }
}

/// Pairwise negative squared Euclidean distances between feature rows.
pub fn similarity_matrix(features: &[Vec<f64>]) -> Result<SimilarityMatrix> {
    let n = features.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let dim = features[0].len();
    if features.iter().any(|f| f.len() != dim) {
        return Err(Error::MismatchedSupports);
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for k in (i + 1)..n {
            let dist2: f64 = features[i]
                .iter()
                .zip(&features[k])
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            data[i * n + k] = -dist2;
            data[k * n + i] = -dist2;
        }
    }
    Ok(SimilarityMatrix { n, data })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApParams {
    /// Damping factor: new = damping * old + (1 - damping) * computed.
    pub damping: f64,
    pub max_iter: usize,
    /// Iterations the exemplar set must stay unchanged to declare
    /// convergence.
    pub convergence_window: usize,
    /// Self-similarity; `None` means the median off-diagonal similarity.
    pub preference: Option<f64>,
}

impl Default for ApParams {
    fn default() -> Self {
        ApParams {
            damping: 0.5,
            max_iter: 200,
            convergence_window: 15,
            preference: None,
        }
    }
}

/// Cluster labels per point, exemplars per cluster id, and convergence
/// metadata. Every exemplar labels itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub exemplars: Vec<usize>,
    pub n_iterations: usize,
    pub converged: bool,
}

impl ClusterAssignment {
    pub fn n_clusters(&self) -> usize {
        self.exemplars.len()
    }
}

/// Affinity propagation over a similarity matrix.
///
/// Deterministic: argmax ties break toward the lowest index and there is no
/// randomness, so identical inputs give identical assignments. If message
/// passing ends with every self-evidence `r(k,k) + a(k,k)` strictly
/// negative, no exemplar emerged and an error suggests lowering the
/// preference magnitude. The all-indifferent fixed point (every
/// self-evidence exactly zero, as for identical points) elects the lowest
/// index instead of failing.
pub fn affinity_propagation(
    similarities: &SimilarityMatrix,
    params: &ApParams,
) -> Result<ClusterAssignment> {
    let n = similarities.n();
    let preference = params
        .preference
        .unwrap_or_else(|| similarities.median_off_diagonal());

    let mut s = similarities.clone();
    for i in 0..n {
        s.set(i, i, preference);
    }

    let damping = params.damping;
    let mut r = vec![0.0f64; n * n];
    let mut a = vec![0.0f64; n * n];
    let mut exemplar_mask = vec![false; n];
    let mut unchanged = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;

    for iter in 1..=params.max_iter {
        iterations = iter;

        // Responsibilities: r(i,k) = s(i,k) - max_{k' != k} (a(i,k') + s(i,k')).
        for i in 0..n {
            let row = i * n;
            let mut max1 = f64::NEG_INFINITY;
            let mut max2 = f64::NEG_INFINITY;
            let mut arg1 = 0usize;
            for k in 0..n {
                let v = a[row + k] + s.data[row + k];
                if v > max1 {
                    max2 = max1;
                    max1 = v;
                    arg1 = k;
                } else if v > max2 {
                    max2 = v;
                }
            }
            for k in 0..n {
                let cap = if k == arg1 { max2 } else { max1 };
                let computed = s.data[row + k] - cap;
                r[row + k] = damping * r[row + k] + (1.0 - damping) * computed;
            }
        }

        // Availabilities: a(i,k) = min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k)));
        // a(k,k) = sum_{i' != k} max(0, r(i',k)).
        for k in 0..n {
            let mut sum_pos = 0.0;
            for i in 0..n {
                if i != k {
                    sum_pos += r[i * n + k].max(0.0);
                }
            }
            let rkk = r[k * n + k];
            for i in 0..n {
                let computed = if i == k {
                    sum_pos
                } else {
                    (rkk + sum_pos - r[i * n + k].max(0.0)).min(0.0)
                };
                a[i * n + k] = damping * a[i * n + k] + (1.0 - damping) * computed;
            }
        }

        let mut current = vec![false; n];
        for k in 0..n {
            current[k] = r[k * n + k] + a[k * n + k] > 0.0;
        }
        if current == exemplar_mask {
            unchanged += 1;
        } else {
            unchanged = 0;
            exemplar_mask = current;
        }
        if unchanged >= params.convergence_window && exemplar_mask.iter().any(|&e| e) {
            converged = true;
            break;
        }
    }

    let mut exemplars: Vec<usize> = (0..n).filter(|&k| exemplar_mask[k]).collect();
    if exemplars.is_empty() {
        // Degenerate all-indifferent fixed point: every self-evidence is
        // exactly zero (identical points). Elect the lowest index. Anything
        // strictly negative means no exemplar truly emerged.
        let best = (0..n)
            .max_by(|&x, &y| {
                let ex = r[x * n + x] + a[x * n + x];
                let ey = r[y * n + y] + a[y * n + y];
                ex.total_cmp(&ey).then(y.cmp(&x))
            })
            .unwrap_or(0);
        if r[best * n + best] + a[best * n + best] < 0.0 {
            return Err(Error::NoExemplars);
        }
        exemplars = vec![best];
    }

    let mut labels = vec![0usize; n];
    for (i, label) in labels.iter_mut().enumerate() {
        if let Some(cluster) = exemplars.iter().position(|&e| e == i) {
            *label = cluster;
            continue;
        }
        let mut best_cluster = 0usize;
        let mut best_sim = f64::NEG_INFINITY;
        for (cluster, &e) in exemplars.iter().enumerate() {
            let sim = s.get(i, e);
            if sim > best_sim {
                best_sim = sim;
                best_cluster = cluster;
            }
        }
        *label = best_cluster;
    }

    Ok(ClusterAssignment {
        labels,
        exemplars,
        n_iterations: iterations,
        converged,
    })
}

/// Country rows × artist columns feature matrix, optionally restricted to
/// the global top-k artists of the chosen basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryFeatureMatrix {
    pub countries: Vec<CountryCode>,
    pub features: Vec<Vec<f64>>,
}

pub fn country_features(
    matrix: &UserArtistMatrix,
    basis: Basis,
    top_k: Option<usize>,
) -> Result<CountryFeatureMatrix> {
    let cohorts = matrix.country_cohorts();
    if cohorts.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: cohorts.len(),
        });
    }
    let columns: Vec<u32> = match top_k {
        Some(k) => {
            let global = profile(matrix, basis, Scope::Global)?;
            global_rank_order(&global, k)
        }
        None => (0..matrix.n_artists() as u32).collect(),
    };

    let mut countries = Vec::with_capacity(cohorts.len());
    let mut features = Vec::with_capacity(cohorts.len());
    for &country in cohorts.keys() {
        let p = profile(matrix, basis, Scope::Country(country))?;
        countries.push(country);
        features.push(columns.iter().map(|&c| p.value(c)).collect());
    }
    Ok(CountryFeatureMatrix {
        countries,
        features,
    })
}

/// One cluster: the exemplar country first, members sorted by code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterGroup {
    pub exemplar: CountryCode,
    pub members: Vec<CountryCode>,
}

pub fn cluster_report(
    assignment: &ClusterAssignment,
    countries: &[CountryCode],
) -> Vec<ClusterGroup> {
    let mut groups: Vec<ClusterGroup> = assignment
        .exemplars
        .iter()
        .map(|&e| ClusterGroup {
            exemplar: countries[e],
            members: Vec::new(),
        })
        .collect();
    for (i, &label) in assignment.labels.iter().enumerate() {
        groups[label].members.push(countries[i]);
    }
    for g in &mut groups {
        g.members.sort_unstable();
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn similarity_is_negative_squared_euclidean() {
        let s = similarity_matrix(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_abs_diff_eq!(s.get(0, 1), -25.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(1, 0), -25.0, epsilon = 1e-12);
        assert_eq!(s.get(0, 0), 0.0);
    }

    #[test]
    fn identical_rows_have_zero_similarity() {
        let s = similarity_matrix(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(s.get(0, 1), 0.0);
    }

    #[test]
    fn similarity_is_symmetric() {
        let mut rng = crate::rng::Rng::new(4);
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..4).map(|_| rng.next_f64()).collect())
            .collect();
        let s = similarity_matrix(&rows).unwrap();
        for i in 0..6 {
            for k in 0..6 {
                assert_eq!(s.get(i, k), s.get(k, i));
            }
        }
    }

    #[test]
    fn two_identical_points_form_one_cluster() {
        let s = similarity_matrix(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let assignment = affinity_propagation(&s, &ApParams::default()).unwrap();
        assert_eq!(assignment.n_clusters(), 1);
        assert_eq!(assignment.labels, vec![0, 0]);
    }

    // Jitter wide enough to break the near-perfect symmetry that makes
    // message passing oscillate at the minimum damping of 0.5.
    fn three_blobs(points_per_blob: usize, seed: u64) -> Vec<Vec<f64>> {
        let centers = [[0.0, 0.0], [10.0, 10.0], [-10.0, 12.0]];
        let mut rng = crate::rng::Rng::new(seed);
        let mut rows = Vec::new();
        for center in centers {
            for _ in 0..points_per_blob {
                rows.push(vec![
                    center[0] + rng.uniform(-1.5, 1.5),
                    center[1] + rng.uniform(-1.5, 1.5),
                ]);
            }
        }
        rows
    }

    #[test]
    fn three_blobs_give_three_pure_clusters() {
        let rows = three_blobs(25, 2024);
        let s = similarity_matrix(&rows).unwrap();
        let assignment = affinity_propagation(&s, &ApParams::default()).unwrap();
        assert!(assignment.converged);
        assert_eq!(assignment.n_clusters(), 3);
        for blob in 0..3 {
            let label = assignment.labels[blob * 25];
            for i in 0..25 {
                assert_eq!(assignment.labels[blob * 25 + i], label);
            }
        }
    }

    #[test]
    fn rerun_is_bit_identical() {
        let rows = three_blobs(10, 7);
        let s = similarity_matrix(&rows).unwrap();
        let a = affinity_propagation(&s, &ApParams::default()).unwrap();
        let b = affinity_propagation(&s, &ApParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn translation_invariance() {
        let rows = three_blobs(8, 5);
        let s = similarity_matrix(&rows).unwrap();
        let base = affinity_propagation(&s, &ApParams::default()).unwrap();

        let shift = 17.0;
        let mut shifted = s.clone();
        for i in 0..shifted.n() {
            for k in 0..shifted.n() {
                shifted.set(i, k, shifted.get(i, k) + shift);
            }
        }
        let moved = affinity_propagation(
            &shifted,
            &ApParams {
                preference: Some(s.median_off_diagonal() + shift),
                ..ApParams::default()
            },
        )
        .unwrap();
        assert_eq!(base.labels, moved.labels);
        assert_eq!(base.exemplars, moved.exemplars);
    }

    #[test]
    fn assigned_exemplar_maximizes_similarity() {
        let rows = three_blobs(12, 99);
        let s = similarity_matrix(&rows).unwrap();
        let assignment = affinity_propagation(&s, &ApParams::default()).unwrap();
        for (i, &label) in assignment.labels.iter().enumerate() {
            if assignment.exemplars.contains(&i) {
                assert_eq!(assignment.exemplars[label], i);
                continue;
            }
            let chosen = assignment.exemplars[label];
            for &e in &assignment.exemplars {
                assert!(s.get(i, chosen) >= s.get(i, e));
            }
        }
    }

    #[test]
    fn cluster_report_groups_members() {
        let countries: Vec<CountryCode> = ["FI", "SE", "NO"]
            .iter()
            .map(|c| CountryCode::parse(c).unwrap())
            .collect();
        let assignment = ClusterAssignment {
            labels: vec![0, 0, 1],
            exemplars: vec![0, 2],
            n_iterations: 1,
            converged: true,
        };
        let report = cluster_report(&assignment, &countries);
        assert_eq!(report.len(), 2);
        assert_eq!(report[0].exemplar.as_str(), "FI");
        assert_eq!(report[0].members.len(), 2);
        assert_eq!(report[1].exemplar.as_str(), "NO");
    }
}
