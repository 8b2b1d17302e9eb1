//! Orientation codes: the ±1 sign pattern of a point or cluster relative to
//! an ordered list of planes.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, cluster_margin, ClusterSummary, Hyperplane, PointN, Side};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrientationCode(Vec<Side>);

impl OrientationCode {
    pub fn new(signs: Vec<Side>) -> Self {
        Self(signs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[Side] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = Side> + '_ {
        self.0.iter().copied()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|s| s.as_f64()).collect()
    }
}

impl FromIterator<Side> for OrientationCode {
    fn from_iter<I: IntoIterator<Item = Side>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// A cluster whose bounding ball is crossed by a plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutRecord {
    pub cluster_id: usize,
    pub plane_index: usize,
    pub clearance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// SHA-256 of the plane list the codes refer to.
    pub plane_hash: String,
    pub plane_count: usize,
    pub codes: BTreeMap<usize, OrientationCode>,
    pub duplicate_groups: Vec<Vec<usize>>,
    pub cut_clusters: Vec<CutRecord>,
}

impl SeparationReport {
    pub fn is_separated(&self) -> bool {
        self.duplicate_groups.is_empty() && self.cut_clusters.is_empty()
    }

    pub fn distinct_codes(&self) -> usize {
        let mut seen: Vec<&OrientationCode> = self.codes.values().collect();
        seen.sort();
        seen.dedup();
        seen.len()
    }
}

fn check_planes(planes: &[Hyperplane], dim: usize) -> Result<()> {
    if planes.is_empty() {
        return Err(Error::InvalidInput("plane list is empty".into()));
    }
    planes.iter().try_for_each(|p| check_dim(p.dim(), dim))
}

pub fn orientation_of_point(planes: &[Hyperplane], p: &PointN) -> Result<OrientationCode> {
    check_planes(planes, p.dim())?;
    Ok(planes
        .iter()
        .map(|plane| Side::of(plane.evaluate_unchecked(p.coords())))
        .collect())
}

/// Code of the cluster centroid. Fails if any plane cuts the bounding ball.
pub fn orientation_of_cluster(
    planes: &[Hyperplane],
    c: &ClusterSummary,
) -> Result<OrientationCode> {
    check_planes(planes, c.dim())?;
    planes
        .iter()
        .enumerate()
        .map(|(i, plane)| {
            let (side, clearance) = cluster_margin(plane, c)?;
            if clearance < 0.0 {
                return Err(Error::CutCluster {
                    cluster_id: c.id,
                    plane_index: i,
                    clearance,
                });
            }
            Ok(side)
        })
        .collect()
}

/// Σ aᵢbᵢ over two codes of equal length.
pub fn code_dot(a: &OrientationCode, b: &OrientationCode) -> Result<i64> {
    check_dim(a.len(), b.len())?;
    Ok(a.iter()
        .zip(b.iter())
        .map(|(x, y)| i64::from(x.value() * y.value()))
        .sum())
}

/// SHA-256 over the shortest round-trip decimal form of every coefficient.
pub fn plane_list_hash(planes: &[Hyperplane]) -> String {
    let mut hasher = Sha256::new();
    for p in planes {
        hasher.update(format!("{:?};", p.bias).as_bytes());
        for w in &p.normal {
            hasher.update(format!("{w:?},").as_bytes());
        }
        hasher.update(b"|");
    }
    hex::encode(hasher.finalize())
}

/// Codes, duplicate groups and cuts for a cluster set. Problems are reported,
/// not raised; only malformed input is an error.
pub fn verify_separation(
    planes: &[Hyperplane],
    clusters: &[ClusterSummary],
) -> Result<SeparationReport> {
    let Some(first) = clusters.first() else {
        return Err(Error::InvalidInput("no clusters given".into()));
    };
    let dim = first.dim();
    planes.iter().try_for_each(|p| check_dim(dim, p.dim()))?;

    let mut codes = BTreeMap::new();
    let mut cut_clusters = Vec::new();
    let mut by_code: HashMap<OrientationCode, Vec<usize>> = HashMap::new();
    for c in clusters {
        check_dim(dim, c.dim())?;
        let mut signs = Vec::with_capacity(planes.len());
        for (i, plane) in planes.iter().enumerate() {
            let (side, clearance) = cluster_margin(plane, c)?;
            if clearance < 0.0 {
                cut_clusters.push(CutRecord {
                    cluster_id: c.id,
                    plane_index: i,
                    clearance,
                });
            }
            signs.push(side);
        }
        let code = OrientationCode(signs);
        by_code.entry(code.clone()).or_default().push(c.id);
        if codes.insert(c.id, code).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate cluster id {}",
                c.id
            )));
        }
    }

    let mut duplicate_groups: Vec<Vec<usize>> = by_code
        .into_values()
        .filter(|ids| ids.len() > 1)
        .map(|mut ids| {
            ids.sort_unstable();
            ids
        })
        .collect();
    duplicate_groups.sort();

    Ok(SeparationReport {
        plane_hash: plane_list_hash(planes),
        plane_count: planes.len(),
        codes,
        duplicate_groups,
        cut_clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(c: &[f64]) -> PointN {
        PointN::new(c.to_vec()).unwrap()
    }

    fn code(v: &[i8]) -> OrientationCode {
        v.iter().map(|&s| Side::try_from(s).unwrap()).collect()
    }

    fn coordinate_planes(n: usize) -> Vec<Hyperplane> {
        (0..n)
            .map(|a| Hyperplane::axis_aligned(n, a, 0.0).unwrap())
            .collect()
    }

    #[test]
    fn point_code_against_coordinate_planes() {
        let c = orientation_of_point(&coordinate_planes(3), &pt(&[0.9, -1.1, 1.2])).unwrap();
        assert_eq!(c, code(&[1, -1, 1]));
    }

    #[test]
    fn five_plane_configuration() {
        // Five planes with a cluster on the + side of S1, S2, S4, S5 and the - side of S3.
        let planes = vec![
            Hyperplane::new(0.0, vec![1.0, 0.0]).unwrap(),
            Hyperplane::new(0.0, vec![0.0, 1.0]).unwrap(),
            Hyperplane::new(-3.0, vec![1.0, 1.0]).unwrap(),
            Hyperplane::new(2.0, vec![1.0, -1.0]).unwrap(),
            Hyperplane::new(5.0, vec![-1.0, -1.0]).unwrap(),
        ];
        let c = orientation_of_point(&planes, &pt(&[1.0, 1.0])).unwrap();
        assert_eq!(c, code(&[1, 1, -1, 1, 1]));
    }

    #[test]
    fn all_negative_quadrant() {
        let c = orientation_of_point(&coordinate_planes(6), &pt(&[-1.0; 6])).unwrap();
        assert!(c.iter().all(|s| s == Side::Negative));
    }

    #[test]
    fn point_code_errors() {
        assert!(orientation_of_point(&[], &pt(&[1.0])).is_err());
        assert!(matches!(
            orientation_of_point(&coordinate_planes(3), &pt(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn nested_cluster_code() {
        let planes: Vec<_> = (0..4)
            .flat_map(|a| [-2.0, 0.0, 2.0].map(move |c| (a, c)))
            .map(|(a, c)| Hyperplane::axis_aligned(4, a, c).unwrap())
            .collect();
        let c = ClusterSummary::new(0, pt(&[3.0; 4]), 0.7, 0).unwrap();
        assert_eq!(orientation_of_cluster(&planes, &c).unwrap(), code(&[1; 12]));

        let c = ClusterSummary::new(0, pt(&[1.0, -3.0, -1.0, 3.0]), 0.7, 0).unwrap();
        assert_eq!(
            orientation_of_cluster(&planes, &c).unwrap(),
            code(&[1, 1, -1, -1, -1, -1, 1, -1, -1, 1, 1, 1])
        );
    }

    #[test]
    fn cut_cluster_is_an_error() {
        let planes = coordinate_planes(4);
        let c = ClusterSummary::new(3, pt(&[0.1, 0.0, 0.0, 0.0]), 0.3, 0).unwrap();
        match orientation_of_cluster(&planes[..1], &c) {
            Err(Error::CutCluster {
                cluster_id,
                plane_index,
                ..
            }) => assert_eq!((cluster_id, plane_index), (3, 0)),
            other => panic!("expected cut, got {other:?}"),
        }
    }

    #[test]
    fn uncut_cluster_matches_point_code() {
        let planes = coordinate_planes(3);
        let c = ClusterSummary::new(0, pt(&[2.0, -1.0, 0.5]), 0.25, 0).unwrap();
        assert_eq!(
            orientation_of_cluster(&planes, &c).unwrap(),
            orientation_of_point(&planes, &c.centroid).unwrap()
        );
    }

    #[test]
    fn dot_examples() {
        assert_eq!(code_dot(&code(&[1, 1, -1]), &code(&[1, 1, -1])).unwrap(), 3);
        assert_eq!(
            code_dot(&code(&[1, 1, -1]), &code(&[1, -1, -1])).unwrap(),
            1
        );
        assert!(code_dot(&code(&[1]), &code(&[1, 1])).is_err());
    }

    #[test]
    fn cube_clusters_separated() {
        let planes = coordinate_planes(3);
        let clusters: Vec<_> = (0..8)
            .map(|i| {
                let c: Vec<f64> = (0..3)
                    .map(|a| if i >> a & 1 == 1 { 1.0 } else { -1.0 })
                    .collect();
                ClusterSummary::new(i, pt(&c), 0.3, 0).unwrap()
            })
            .collect();
        let report = verify_separation(&planes, &clusters).unwrap();
        assert!(report.is_separated());
        assert_eq!(report.distinct_codes(), 8);
    }

    #[test]
    fn duplicates_reported() {
        let planes = coordinate_planes(2)[..1].to_vec();
        let clusters = vec![
            ClusterSummary::new(4, pt(&[1.0, 0.0]), 0.1, 0).unwrap(),
            ClusterSummary::new(9, pt(&[2.0, 5.0]), 0.1, 1).unwrap(),
        ];
        let report = verify_separation(&planes, &clusters).unwrap();
        assert_eq!(report.duplicate_groups, vec![vec![4, 9]]);
        assert!(report.cut_clusters.is_empty());
        assert!(!report.is_separated());
    }

    #[test]
    fn cuts_reported() {
        let planes = coordinate_planes(2);
        let clusters = vec![
            ClusterSummary::new(0, pt(&[0.1, 1.0]), 0.3, 0).unwrap(),
            ClusterSummary::new(1, pt(&[-1.0, -1.0]), 0.3, 0).unwrap(),
        ];
        let report = verify_separation(&planes, &clusters).unwrap();
        assert_eq!(report.cut_clusters.len(), 1);
        assert_eq!(report.cut_clusters[0].cluster_id, 0);
        assert_eq!(report.cut_clusters[0].plane_index, 0);
        assert!(!report.is_separated());
    }

    #[test]
    fn verify_rejects_empty_and_duplicate_ids() {
        let planes = coordinate_planes(2);
        assert!(verify_separation(&planes, &[]).is_err());
        let c = ClusterSummary::new(0, pt(&[1.0, 1.0]), 0.3, 0).unwrap();
        assert!(verify_separation(&planes, &[c.clone(), c]).is_err());
    }

    #[test]
    fn plane_hash_depends_on_order() {
        let planes = coordinate_planes(3);
        let mut rev = planes.clone();
        rev.reverse();
        assert_ne!(plane_list_hash(&planes), plane_list_hash(&rev));
        assert_eq!(plane_list_hash(&planes), plane_list_hash(&planes.clone()));
    }

    #[test]
    fn code_json_is_plus_minus_one() {
        let json = serde_json::to_string(&code(&[1, -1, 1])).unwrap();
        assert_eq!(json, "[1,-1,1]");
        let back: OrientationCode = serde_json::from_str(&json).unwrap();
        assert_eq!(back, code(&[1, -1, 1]));
        assert!(serde_json::from_str::<OrientationCode>("[1,0]").is_err());
    }

    fn arb_code(q: usize) -> impl Strategy<Value = OrientationCode> {
        prop::collection::vec(prop::bool::ANY, q).prop_map(|bits| {
            bits.into_iter()
                .map(|b| if b { Side::Positive } else { Side::Negative })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn self_dot_is_length(a in (1usize..64).prop_flat_map(arb_code)) {
            prop_assert_eq!(code_dot(&a, &a).unwrap(), a.len() as i64);
        }

        #[test]
        fn dot_parity_matches_length(
            (a, b) in (1usize..64).prop_flat_map(|q| (arb_code(q), arb_code(q)))
        ) {
            let d = code_dot(&a, &b).unwrap();
            prop_assert_eq!((a.len() as i64 - d).rem_euclid(2), 0);
            if a != b {
                prop_assert!(d <= a.len() as i64 - 2);
            }
        }

        #[test]
        fn codes_invariant_under_positive_rescaling(
            scales in prop::collection::vec(1e-3f64..1e3, 3),
            p in prop::collection::vec(-5.0f64..5.0, 3),
        ) {
            prop_assume!(p.iter().all(|x| x.abs() > 1e-9));
            let planes = coordinate_planes(3);
            let scaled: Vec<_> = planes.iter().zip(&scales)
                .map(|(pl, s)| Hyperplane::new(pl.bias * s, pl.normal.iter().map(|w| w * s).collect()).unwrap())
                .collect();
            let p = PointN::new(p).unwrap();
            prop_assert_eq!(orientation_of_point(&planes, &p).unwrap(), orientation_of_point(&scaled, &p).unwrap());
        }
    }
}
