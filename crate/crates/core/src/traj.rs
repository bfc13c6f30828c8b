//! Trajectory representation and the point-set dissimilarity measure used
//! for cluster-head election.
//!
//! A trajectory is the ordered sequence of node positions a packet visits on
//! its way to the base station. Dissimilarity between two trajectories is the
//! maximum of the two one-way distances, where a one-way distance averages,
//! over one trajectory's vertices, the distance to the nearest vertex of the
//! other. The measure is symmetric and non-negative but does not satisfy the
//! triangle inequality.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrajError {
    #[error("trajectory {tid} has no points")]
    EmptyTrajectory { tid: usize },
    #[error("trajectory {tid} contains a non-finite coordinate")]
    NonFinitePoint { tid: usize },
    #[error("cannot build a dissimilarity matrix from an empty trajectory set")]
    EmptySet,
    #[error("duplicate vertex (tid={tid}, seq={seq}) in trajectory file")]
    DuplicateVertex { tid: usize, seq: u64 },
    #[error("invalid dissimilarity matrix: {0}")]
    InvalidMatrix(&'static str),
    #[error("failed to read trajectory file: {0}")]
    Csv(#[from] csv::Error),
}

/// A position on the sensing field, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// An ordered, non-empty sequence of positions with a unique id.
///
/// Non-emptiness and coordinate finiteness are enforced at construction, so
/// the distance operations below cannot fail.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    tid: usize,
    points: Vec<Point2D>,
}

impl Trajectory {
    pub fn new(tid: usize, points: Vec<Point2D>) -> Result<Self, TrajError> {
        if points.is_empty() {
            return Err(TrajError::EmptyTrajectory { tid });
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(TrajError::NonFinitePoint { tid });
        }
        Ok(Self { tid, points })
    }

    pub fn tid(&self) -> usize {
        self.tid
    }

    pub fn points(&self) -> &[Point2D] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }
}

/// Distance from a point to the nearest vertex of a trajectory.
///
/// The trajectory is treated as its vertex set; segments between consecutive
/// vertices do not contribute.
pub fn point_to_trajectory_distance(p: Point2D, t: &Trajectory) -> f64 {
    t.points
        .iter()
        .map(|q| p.distance_to(*q))
        .fold(f64::INFINITY, f64::min)
}

/// Mean nearest-vertex distance from every vertex of `t1` to `t2`.
///
/// Not symmetric in general.
pub fn one_way_distance(t1: &Trajectory, t2: &Trajectory) -> f64 {
    let total: f64 = t1
        .points
        .iter()
        .map(|p| point_to_trajectory_distance(*p, t2))
        .sum();
    total / t1.points.len() as f64
}

/// Symmetric dissimilarity: the larger of the two one-way distances.
pub fn trajectory_distance(t1: &Trajectory, t2: &Trajectory) -> f64 {
    one_way_distance(t1, t2).max(one_way_distance(t2, t1))
}

/// Symmetric pairwise trajectory dissimilarities with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DissimilarityMatrix {
    /// Builds a matrix from row-major values, enforcing the invariants:
    /// square, zero diagonal, symmetric, and every entry finite and
    /// non-negative.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self, TrajError> {
        if n == 0 {
            return Err(TrajError::EmptySet);
        }
        if values.len() != n * n {
            return Err(TrajError::InvalidMatrix("values length must be n*n"));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(TrajError::InvalidMatrix("diagonal must be zero"));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(TrajError::InvalidMatrix(
                        "entries must be finite and non-negative",
                    ));
                }
                if values[j * n + i] != v {
                    return Err(TrajError::InvalidMatrix("matrix must be symmetric"));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn max_entry(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Sorted, deduplicated list of every off-diagonal entry (plus 0.0).
    /// These are the only thresholds at which a leader clustering can change.
    pub fn distinct_entries(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(self.n * (self.n - 1) / 2 + 1);
        out.push(0.0);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                out.push(self.get(i, j));
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).expect("matrix entries are finite"));
        out.dedup();
        out
    }
}

/// Pairwise `trajectory_distance` over the whole set. Each pair is computed
/// once and mirrored, so symmetry is exact.
pub fn build_dissimilarity_matrix(ts: &[Trajectory]) -> Result<DissimilarityMatrix, TrajError> {
    let n = ts.len();
    if n == 0 {
        return Err(TrajError::EmptySet);
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = trajectory_distance(&ts[i], &ts[j]);
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    Ok(DissimilarityMatrix { n, values })
}

#[derive(Debug, Deserialize)]
struct VertexRow {
    tid: usize,
    seq: u64,
    x: f64,
    y: f64,
}

/// Reads trajectories from a CSV file with columns `tid,seq,x,y`, one vertex
/// per row. Rows are grouped by `tid` and ordered by `seq`; trajectories are
/// returned in ascending `tid` order.
pub fn read_trajectories_csv<P: AsRef<Path>>(path: P) -> Result<Vec<Trajectory>, TrajError> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let mut grouped: BTreeMap<usize, BTreeMap<u64, Point2D>> = BTreeMap::new();
    for row in reader.deserialize() {
        let row: VertexRow = row?;
        let vertices = grouped.entry(row.tid).or_default();
        if vertices
            .insert(row.seq, Point2D::new(row.x, row.y))
            .is_some()
        {
            return Err(TrajError::DuplicateVertex {
                tid: row.tid,
                seq: row.seq,
            });
        }
    }
    grouped
        .into_iter()
        .map(|(tid, vertices)| Trajectory::new(tid, vertices.into_values().collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn traj(tid: usize, pts: &[(f64, f64)]) -> Trajectory {
        Trajectory::new(tid, pts.iter().map(|&(x, y)| Point2D::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn empty_trajectory_rejected() {
        assert!(matches!(
            Trajectory::new(3, vec![]),
            Err(TrajError::EmptyTrajectory { tid: 3 })
        ));
    }

    #[test]
    fn non_finite_point_rejected() {
        assert!(matches!(
            Trajectory::new(0, vec![Point2D::new(f64::NAN, 0.0)]),
            Err(TrajError::NonFinitePoint { tid: 0 })
        ));
    }

    #[test]
    fn point_distance_vertex_hit_is_zero() {
        let t = traj(0, &[(0.0, 0.0), (5.0, 5.0)]);
        assert_eq!(point_to_trajectory_distance(Point2D::new(0.0, 0.0), &t), 0.0);
    }

    #[test]
    fn point_distance_single_vertex() {
        let t = traj(0, &[(3.0, 4.0)]);
        assert_eq!(point_to_trajectory_distance(Point2D::new(0.0, 0.0), &t), 5.0);
    }

    #[test]
    fn point_distance_takes_nearest_vertex() {
        // vertex distances: sqrt(1+4) = sqrt(5) and 3; nearest wins
        let t = traj(0, &[(0.0, 2.0), (4.0, 0.0)]);
        assert_relative_eq!(
            point_to_trajectory_distance(Point2D::new(1.0, 0.0), &t),
            5.0_f64.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn one_way_identical_is_zero() {
        let t1 = traj(0, &[(0.0, 0.0), (1.0, 0.0)]);
        let t2 = traj(1, &[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(one_way_distance(&t1, &t2), 0.0);
    }

    #[test]
    fn one_way_averages_vertex_distances() {
        // vertex distances 2 and sqrt(5), averaged
        let t1 = traj(0, &[(0.0, 0.0), (1.0, 0.0)]);
        let t2 = traj(1, &[(0.0, 2.0)]);
        assert_relative_eq!(
            one_way_distance(&t1, &t2),
            (2.0 + 5.0_f64.sqrt()) / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn one_way_is_asymmetric() {
        let t1 = traj(0, &[(0.0, 0.0)]);
        let t2 = traj(1, &[(0.0, 0.0), (3.0, 4.0)]);
        assert_eq!(one_way_distance(&t1, &t2), 0.0);
        assert_relative_eq!(one_way_distance(&t2, &t1), 2.5, max_relative = 1e-12);
    }

    #[test]
    fn distance_identity() {
        let t = traj(0, &[(2.0, 7.0), (9.0, 1.0), (4.0, 4.0)]);
        assert_eq!(trajectory_distance(&t, &t), 0.0);
    }

    #[test]
    fn distance_takes_max_of_one_ways() {
        let t1 = traj(0, &[(0.0, 0.0)]);
        let t2 = traj(1, &[(0.0, 0.0), (3.0, 4.0)]);
        assert_relative_eq!(trajectory_distance(&t1, &t2), 2.5, max_relative = 1e-12);
        assert_relative_eq!(trajectory_distance(&t2, &t1), 2.5, max_relative = 1e-12);
    }

    #[test]
    fn distance_parallel_segments() {
        // every vertex has its nearest counterpart at distance exactly 1
        let t1 = traj(0, &[(0.0, 0.0), (1.0, 0.0)]);
        let t2 = traj(1, &[(0.0, 1.0), (1.0, 1.0)]);
        assert_relative_eq!(trajectory_distance(&t1, &t2), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn matrix_single_trajectory() {
        let ts = vec![traj(0, &[(1.0, 1.0)])];
        let m = build_dissimilarity_matrix(&ts).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn matrix_identical_pair_is_zero() {
        let ts = vec![traj(0, &[(1.0, 1.0), (2.0, 2.0)]), traj(1, &[(1.0, 1.0), (2.0, 2.0)])];
        let m = build_dissimilarity_matrix(&ts).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(m.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn matrix_matches_pairwise_calls() {
        let ts = vec![
            traj(0, &[(0.0, 0.0), (1.0, 0.0)]),
            traj(1, &[(0.0, 2.0)]),
            traj(2, &[(0.0, 1.0), (1.0, 1.0)]),
        ];
        let m = build_dissimilarity_matrix(&ts).unwrap();
        for i in 0..3 {
            assert_eq!(m.get(i, i), 0.0);
            for j in 0..3 {
                assert_eq!(m.get(i, j), m.get(j, i));
                assert_eq!(m.get(i, j), m.get(i, j).max(0.0));
                if i != j {
                    assert_relative_eq!(
                        m.get(i, j),
                        trajectory_distance(&ts[i], &ts[j]),
                        max_relative = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn matrix_empty_set_rejected() {
        assert!(matches!(build_dissimilarity_matrix(&[]), Err(TrajError::EmptySet)));
    }

    #[test]
    fn one_way_containment_subset_is_zero() {
        // every vertex of t1 is a vertex of t2
        let t1 = traj(0, &[(1.0, 2.0), (3.0, 4.0)]);
        let t2 = traj(1, &[(0.0, 0.0), (1.0, 2.0), (3.0, 4.0), (5.0, 5.0)]);
        assert_eq!(one_way_distance(&t1, &t2), 0.0);
    }

    #[test]
    fn csv_roundtrip() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("paths.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "tid,seq,x,y").unwrap();
        writeln!(f, "0,0,1.5,2.5").unwrap();
        writeln!(f, "0,1,3.0,4.0").unwrap();
        writeln!(f, "2,0,9.0,9.0").unwrap();
        drop(f);

        let ts = read_trajectories_csv(&path).unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts[0].tid(), 0);
        assert_eq!(ts[0].points(), &[Point2D::new(1.5, 2.5), Point2D::new(3.0, 4.0)]);
        assert_eq!(ts[1].tid(), 2);
        assert_eq!(ts[1].len(), 1);
    }

    #[test]
    fn csv_duplicate_vertex_rejected() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "tid,seq,x,y").unwrap();
        writeln!(f, "0,0,1.0,1.0").unwrap();
        writeln!(f, "0,0,2.0,2.0").unwrap();
        drop(f);
        assert!(matches!(
            read_trajectories_csv(&path),
            Err(TrajError::DuplicateVertex { tid: 0, seq: 0 })
        ));
    }
}
