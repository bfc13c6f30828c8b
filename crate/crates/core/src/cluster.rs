//! Three-stage trajectory clustering: sequential leader initialization,
//! medoid representatives, and iterative re-clustering to a fixed point.
//!
//! All operations work on indices into a [`DissimilarityMatrix`]; ties are
//! always broken toward the lowest index, which makes every stage
//! deterministic for a given input order.

use thiserror::Error;

use crate::traj::{build_dissimilarity_matrix, DissimilarityMatrix, TrajError, Trajectory};

/// Re-clustering is a best-response iteration with a non-increasing
/// objective; with deterministic tie-breaking it reaches a fixed point long
/// before this cap. Exceeding it is reported as a diagnostic error.
pub const RECLUSTER_SWEEP_CAP: usize = 100;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("cannot compute a representative of an empty cluster")]
    EmptyCluster,
    #[error("re-clustering did not reach a fixed point within {cap} sweeps")]
    NoConvergence {
        cap: usize,
        last_assignment: ClusterAssignment,
        last_reps: RepresentativeSet,
    },
    #[error(transparent)]
    Traj(#[from] TrajError),
}

/// A partition of trajectory indices into `k` non-empty clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl ClusterAssignment {
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Indices of the members of cluster `c`, in ascending order.
    pub fn members_of(&self, c: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == c).then_some(i))
            .collect()
    }
}

/// One representative trajectory index per cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepresentativeSet {
    reps: Vec<usize>,
}

impl RepresentativeSet {
    pub fn new(reps: Vec<usize>) -> Self {
        Self { reps }
    }

    pub fn reps(&self) -> &[usize] {
        &self.reps
    }

    pub fn k(&self) -> usize {
        self.reps.len()
    }
}

/// Sequential leader clustering. The first unclassified trajectory (in index
/// order) seeds a new cluster, and every still-unclassified trajectory within
/// `threshold` of that seed joins it; repeat until all are classified.
pub fn initial_clusters(matrix: &DissimilarityMatrix, threshold: f64) -> ClusterAssignment {
    let n = matrix.n();
    let mut labels = vec![usize::MAX; n];
    let mut k = 0;
    for seed in 0..n {
        if labels[seed] != usize::MAX {
            continue;
        }
        labels[seed] = k;
        for j in (seed + 1)..n {
            if labels[j] == usize::MAX && matrix.get(seed, j) <= threshold {
                labels[j] = k;
            }
        }
        k += 1;
    }
    ClusterAssignment { labels, k }
}

/// The cluster medoid: the member with minimum cumulative dissimilarity to
/// all other members. Ties go to the lowest index.
pub fn representative_of(
    members: &[usize],
    matrix: &DissimilarityMatrix,
) -> Result<usize, ClusterError> {
    let mut best: Option<(usize, f64)> = None;
    for &i in members {
        let total: f64 = members
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| matrix.get(i, j))
            .sum();
        match best {
            Some((_, best_total)) if total >= best_total => {}
            _ => best = Some((i, total)),
        }
    }
    best.map(|(i, _)| i).ok_or(ClusterError::EmptyCluster)
}

/// Alternates nearest-representative assignment with medoid recomputation
/// until the representatives stop changing.
///
/// A representative can only be pulled out of its own cluster by an earlier
/// representative at distance exactly zero; when that empties a cluster, its
/// representative is restored as the sole member.
pub fn recluster(
    matrix: &DissimilarityMatrix,
    reps: &RepresentativeSet,
) -> Result<(ClusterAssignment, RepresentativeSet), ClusterError> {
    let n = matrix.n();
    let mut reps = reps.reps.clone();
    let k = reps.len();

    let mut labels = vec![0usize; n];
    for _ in 0..RECLUSTER_SWEEP_CAP {
        assign_to_nearest_rep(matrix, &reps, &mut labels);

        let mut new_reps = Vec::with_capacity(k);
        for c in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
            new_reps.push(representative_of(&members, matrix)?);
        }

        if new_reps == reps {
            return Ok((
                ClusterAssignment { labels, k },
                RepresentativeSet { reps: new_reps },
            ));
        }
        reps = new_reps;
    }

    assign_to_nearest_rep(matrix, &reps, &mut labels);
    Err(ClusterError::NoConvergence {
        cap: RECLUSTER_SWEEP_CAP,
        last_assignment: ClusterAssignment { labels, k },
        last_reps: RepresentativeSet { reps },
    })
}

fn assign_to_nearest_rep(matrix: &DissimilarityMatrix, reps: &[usize], labels: &mut [usize]) {
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best_c = 0;
        let mut best_d = matrix.get(i, reps[0]);
        for (c, &r) in reps.iter().enumerate().skip(1) {
            let d = matrix.get(i, r);
            if d < best_d {
                best_c = c;
                best_d = d;
            }
        }
        *label = best_c;
    }
    // Restore any representative stolen by a zero-distance tie.
    let mut counts = vec![0usize; reps.len()];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for (c, &r) in reps.iter().enumerate() {
        if counts[c] == 0 {
            counts[labels[r]] -= 1;
            labels[r] = c;
            counts[c] = 1;
        }
    }
    debug_assert!(counts.iter().all(|&c| c > 0));
}

/// Total assignment cost: the sum over trajectories of the distance to their
/// cluster's representative.
pub fn assignment_cost(
    matrix: &DissimilarityMatrix,
    assignment: &ClusterAssignment,
    reps: &RepresentativeSet,
) -> f64 {
    assignment
        .labels
        .iter()
        .enumerate()
        .map(|(i, &c)| matrix.get(i, reps.reps[c]))
        .sum()
}

/// Full pipeline: dissimilarity matrix, leader initialization, per-cluster
/// medoids, then re-clustering to the fixed point.
pub fn cluster_trajectories(
    ts: &[Trajectory],
    threshold: f64,
) -> Result<(ClusterAssignment, RepresentativeSet), ClusterError> {
    let matrix = build_dissimilarity_matrix(ts)?;
    cluster_matrix(&matrix, threshold)
}

/// Same pipeline, starting from an already-built matrix.
pub fn cluster_matrix(
    matrix: &DissimilarityMatrix,
    threshold: f64,
) -> Result<(ClusterAssignment, RepresentativeSet), ClusterError> {
    let initial = initial_clusters(matrix, threshold);
    let mut reps = Vec::with_capacity(initial.k());
    for c in 0..initial.k() {
        reps.push(representative_of(&initial.members_of(c), matrix)?);
    }
    recluster(matrix, &RepresentativeSet { reps })
}

/// How the clustering threshold is chosen at election time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdPolicy {
    /// Use this distance as-is.
    Fixed(f64),
    /// Use this fraction of the largest matrix entry.
    FractionOfMax(f64),
    /// Largest threshold whose leader clustering yields at least this many
    /// clusters (falls back to 0 when even singletons cannot reach it).
    SweepToTarget(usize),
}

pub fn resolve_threshold(matrix: &DissimilarityMatrix, policy: ThresholdPolicy) -> f64 {
    match policy {
        ThresholdPolicy::Fixed(t) => t,
        ThresholdPolicy::FractionOfMax(f) => f * matrix.max_entry(),
        ThresholdPolicy::SweepToTarget(target) => {
            let candidates = matrix.distinct_entries();
            for &t in candidates.iter().rev() {
                if initial_clusters(matrix, t).k() >= target {
                    return t;
                }
            }
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Builds a matrix directly from explicit pairwise distances.
    fn matrix_from(n: usize, pairs: &[(usize, usize, f64)]) -> DissimilarityMatrix {
        let mut values = vec![0.0; n * n];
        for &(i, j, d) in pairs {
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
        DissimilarityMatrix::from_values(n, values).unwrap()
    }

    #[test]
    fn leader_single_cluster_at_max_threshold() {
        let m = matrix_from(3, &[(0, 1, 1.0), (0, 2, 10.0), (1, 2, 10.0)]);
        let a = initial_clusters(&m, 10.0);
        assert_eq!(a.k(), 1);
        assert_eq!(a.labels(), &[0, 0, 0]);
    }

    #[test]
    fn leader_zero_threshold_gives_singletons() {
        let m = matrix_from(3, &[(0, 1, 1.0), (0, 2, 10.0), (1, 2, 10.0)]);
        let a = initial_clusters(&m, 0.0);
        assert_eq!(a.k(), 3);
        assert_eq!(a.labels(), &[0, 1, 2]);
    }

    #[test]
    fn leader_pass_traced_by_hand() {
        // d(A,B)=1, d(A,C)=10, d(B,C)=10, threshold 2 -> {A,B},{C}
        let m = matrix_from(3, &[(0, 1, 1.0), (0, 2, 10.0), (1, 2, 10.0)]);
        let a = initial_clusters(&m, 2.0);
        assert_eq!(a.k(), 2);
        assert_eq!(a.labels(), &[0, 0, 1]);
    }

    #[test]
    fn medoid_singleton() {
        let m = matrix_from(1, &[]);
        assert_eq!(representative_of(&[0], &m).unwrap(), 0);
    }

    #[test]
    fn medoid_minimizes_cumulative_sum() {
        // sums: A=1+2=3, B=1+4=5, C=2+4=6
        let m = matrix_from(3, &[(0, 1, 1.0), (0, 2, 2.0), (1, 2, 4.0)]);
        assert_eq!(representative_of(&[0, 1, 2], &m).unwrap(), 0);
    }

    #[test]
    fn medoid_tie_breaks_low() {
        let m = matrix_from(2, &[(0, 1, 5.0)]);
        assert_eq!(representative_of(&[0, 1], &m).unwrap(), 0);
    }

    #[test]
    fn medoid_empty_cluster_rejected() {
        let m = matrix_from(1, &[]);
        assert!(matches!(
            representative_of(&[], &m),
            Err(ClusterError::EmptyCluster)
        ));
    }

    #[test]
    fn recluster_identity_when_every_trajectory_is_a_rep() {
        let m = matrix_from(3, &[(0, 1, 1.0), (0, 2, 2.0), (1, 2, 4.0)]);
        let (a, reps) = recluster(&m, &RepresentativeSet::new(vec![0, 1, 2])).unwrap();
        assert_eq!(a.labels(), &[0, 1, 2]);
        assert_eq!(reps.reps(), &[0, 1, 2]);
    }

    #[test]
    fn recluster_single_cluster_collapses_to_global_medoid() {
        let m = matrix_from(3, &[(0, 1, 1.0), (0, 2, 2.0), (1, 2, 4.0)]);
        let (a, reps) = recluster(&m, &RepresentativeSet::new(vec![2])).unwrap();
        assert_eq!(a.k(), 1);
        assert_eq!(reps.reps(), &[0]); // global medoid
    }

    /// Independent step-by-step replay of the assign/update iteration with
    /// the same tie rules, used as the oracle for `recluster`.
    fn brute_force_fixed_point(
        m: &DissimilarityMatrix,
        initial_reps: &[usize],
    ) -> (Vec<usize>, Vec<usize>) {
        let n = m.n();
        let mut reps = initial_reps.to_vec();
        loop {
            let mut labels = vec![0usize; n];
            for (i, label) in labels.iter_mut().enumerate() {
                let mut best = 0usize;
                for c in 1..reps.len() {
                    if m.get(i, reps[c]) < m.get(i, reps[best]) {
                        best = c;
                    }
                }
                *label = best;
            }
            for c in 0..reps.len() {
                if !labels.contains(&c) {
                    labels[reps[c]] = c;
                }
            }
            let mut new_reps = Vec::with_capacity(reps.len());
            for c in 0..reps.len() {
                let members: Vec<usize> =
                    (0..n).filter(|&i| labels[i] == c).collect();
                let mut best = members[0];
                let sum = |i: usize| -> f64 {
                    members.iter().filter(|&&j| j != i).map(|&j| m.get(i, j)).sum()
                };
                for &i in &members[1..] {
                    if sum(i) < sum(best) {
                        best = i;
                    }
                }
                new_reps.push(best);
            }
            if new_reps == reps {
                return (labels, reps);
            }
            reps = new_reps;
        }
    }

    #[test]
    fn recluster_matches_brute_force_replay() {
        // Deterministic LCG so the instances are reproducible.
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        for _ in 0..50 {
            let n = 6;
            let mut values = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = (next() * 20.0 * 4.0).round() / 4.0; // quantized to force ties
                    values[i * n + j] = d;
                    values[j * n + i] = d;
                }
            }
            let m = DissimilarityMatrix::from_values(n, values).unwrap();
            let initial = vec![0, 3, 5];
            let (a, reps) = recluster(&m, &RepresentativeSet::new(initial.clone())).unwrap();
            let (oracle_labels, oracle_reps) = brute_force_fixed_point(&m, &initial);
            assert_eq!(reps.reps(), oracle_reps.as_slice());
            assert_eq!(a.labels(), oracle_labels.as_slice());
        }
    }

    #[test]
    fn recluster_objective_non_increasing() {
        let mut state = 7u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        for _ in 0..20 {
            let n = 8;
            let mut values = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = next() * 30.0;
                    values[i * n + j] = d;
                    values[j * n + i] = d;
                }
            }
            let m = DissimilarityMatrix::from_values(n, values).unwrap();
            // Replay sweep by sweep, checking the cost after each full sweep.
            let mut reps = vec![1, 4, 6];
            let mut prev_cost = f64::INFINITY;
            loop {
                let mut labels = vec![0usize; n];
                super::assign_to_nearest_rep(&m, &reps, &mut labels);
                let mut new_reps = Vec::new();
                for c in 0..reps.len() {
                    let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
                    new_reps.push(representative_of(&members, &m).unwrap());
                }
                let cost: f64 = labels
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| m.get(i, new_reps[c]))
                    .sum();
                assert!(cost <= prev_cost + 1e-12, "objective increased: {prev_cost} -> {cost}");
                prev_cost = cost;
                if new_reps == reps {
                    break;
                }
                reps = new_reps;
            }
        }
    }

    #[test]
    fn zero_distance_rep_tie_keeps_clusters_non_empty() {
        // reps 0 and 1 at distance zero: rep 1 would be pulled into cluster 0
        let m = matrix_from(3, &[(0, 1, 0.0), (0, 2, 3.0), (1, 2, 3.0)]);
        let (a, reps) = recluster(&m, &RepresentativeSet::new(vec![0, 1])).unwrap();
        assert_eq!(a.k(), 2);
        for c in 0..2 {
            assert!(!a.members_of(c).is_empty());
        }
        assert_eq!(reps.k(), 2);
    }

    #[test]
    fn pipeline_single_trajectory() {
        use crate::traj::{Point2D, Trajectory};
        let ts = vec![Trajectory::new(0, vec![Point2D::new(1.0, 1.0)]).unwrap()];
        let (a, reps) = cluster_trajectories(&ts, 5.0).unwrap();
        assert_eq!(a.k(), 1);
        assert_eq!(reps.reps(), &[0]);
    }

    #[test]
    fn pipeline_all_identical() {
        use crate::traj::{Point2D, Trajectory};
        let ts: Vec<Trajectory> = (0..4)
            .map(|tid| {
                Trajectory::new(tid, vec![Point2D::new(2.0, 3.0), Point2D::new(4.0, 5.0)]).unwrap()
            })
            .collect();
        let (a, reps) = cluster_trajectories(&ts, 0.0).unwrap();
        assert_eq!(a.k(), 1);
        assert_eq!(reps.reps(), &[0]);
    }

    #[test]
    fn pipeline_two_bundles() {
        use crate::traj::{Point2D, Trajectory};
        // Two bundles of three near-identical single-point trajectories;
        // within-bundle spread 0.2, bundle gap 100. Threshold 1.0 separates.
        let mut ts = Vec::new();
        for (tid, x) in [(0usize, 0.0), (1, 0.1), (2, 0.2)] {
            ts.push(Trajectory::new(tid, vec![Point2D::new(x, 0.0)]).unwrap());
        }
        for (tid, x) in [(3usize, 100.0), (4, 100.1), (5, 100.2)] {
            ts.push(Trajectory::new(tid, vec![Point2D::new(x, 0.0)]).unwrap());
        }
        let (a, reps) = cluster_trajectories(&ts, 1.0).unwrap();
        assert_eq!(a.k(), 2);
        assert_eq!(a.labels(), &[0, 0, 0, 1, 1, 1]);
        // medoid of {0,0.1,0.2} is the middle one; same within the far bundle
        assert_eq!(reps.reps(), &[1, 4]);
    }

    #[test]
    fn sweep_picks_largest_threshold_reaching_target() {
        let m = matrix_from(3, &[(0, 1, 1.0), (0, 2, 10.0), (1, 2, 10.0)]);
        // target 2: threshold 10 gives k=1, threshold 1 gives k=2
        assert_eq!(resolve_threshold(&m, ThresholdPolicy::SweepToTarget(2)), 1.0);
        // target 1: the largest candidate already yields one cluster
        assert_eq!(resolve_threshold(&m, ThresholdPolicy::SweepToTarget(1)), 10.0);
        // target 3: only a zero threshold yields singletons
        assert_eq!(resolve_threshold(&m, ThresholdPolicy::SweepToTarget(3)), 0.0);
    }
}
