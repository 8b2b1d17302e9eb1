//! Points, hyperplanes and cluster summaries.
//!
//! A hyperplane is stored as `bias + normal · x = 0`. Its positive side is
//! where that expression is strictly positive; points exactly on the plane
//! are reported as [`Side::Negative`] so that side queries are total.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tikhonov damping added to the midpoint Gram matrix.
pub const MIDPOINT_DAMPING: f64 = 1e-12;
/// Gram matrices with a larger eigenvalue ratio are rejected as singular.
pub const MAX_CONDITION: f64 = 1e12;
/// Largest accepted `|1 + alpha · m|` at any midpoint.
pub const MIDPOINT_RESIDUAL_TOL: f64 = 1e-9;

/// A point in n-dimensional feature space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointN(Vec<f64>);

impl PointN {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("point has no coordinates".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(
                "point has non-finite coordinates".into(),
            ));
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn distance_squared(&self, other: &PointN) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn distance(&self, other: &PointN) -> Result<f64> {
        self.distance_squared(other).map(f64::sqrt)
    }

    pub fn midpoint(&self, other: &PointN) -> Result<PointN> {
        check_dim(self.dim(), other.dim())?;
        Ok(PointN(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
        ))
    }
}

impl AsRef<[f64]> for PointN {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Which side of a plane a point lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Side {
    Negative,
    Positive,
}

impl Side {
    pub fn of(value: f64) -> Side {
        if value > 0.0 {
            Side::Positive
        } else {
            Side::Negative
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Side::Positive => 1,
            Side::Negative => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Positive => Side::Negative,
            Side::Negative => Side::Positive,
        }
    }
}

impl From<Side> for i8 {
    fn from(side: Side) -> i8 {
        side.value()
    }
}

impl TryFrom<i8> for Side {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(Side::Positive),
            -1 => Ok(Side::Negative),
            other => Err(format!("orientation sign must be +1 or -1, got {other}")),
        }
    }
}

/// The plane `bias + normal · x = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub bias: f64,
    pub normal: Vec<f64>,
}

impl Hyperplane {
    pub fn new(bias: f64, normal: Vec<f64>) -> Result<Self> {
        let plane = Self { bias, normal };
        plane.validate()?;
        Ok(plane)
    }

    /// The axis-aligned plane `x_axis = offset`, positive side above.
    pub fn axis_aligned(dim: usize, axis: usize, offset: f64) -> Result<Self> {
        if axis >= dim {
            return Err(Error::InvalidInput(format!(
                "axis {axis} out of range for dimension {dim}"
            )));
        }
        let mut normal = vec![0.0; dim];
        normal[axis] = 1.0;
        Self::new(-offset, normal)
    }

    pub fn validate(&self) -> Result<()> {
        if self.normal.is_empty() {
            return Err(Error::InvalidInput("plane normal is empty".into()));
        }
        if !self.bias.is_finite() || self.normal.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput(
                "plane has non-finite coefficients".into(),
            ));
        }
        if self.normal.iter().all(|&w| w == 0.0) {
            return Err(Error::ZeroNormal);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn norm(&self) -> f64 {
        self.normal.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// `bias + normal · p`.
    pub fn evaluate(&self, p: &[f64]) -> Result<f64> {
        check_dim(self.dim(), p.len())?;
        Ok(self.evaluate_unchecked(p))
    }

    pub(crate) fn evaluate_unchecked(&self, p: &[f64]) -> f64 {
        self.bias + self.normal.iter().zip(p).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn signed_distance(&self, p: &[f64]) -> Result<f64> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::ZeroNormal);
        }
        Ok(self.evaluate(p)? / norm)
    }
}

/// Summary of one labeled cluster: a bounding ball plus its class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub id: usize,
    pub centroid: PointN,
    pub radius: f64,
    pub class_label: usize,
}

impl ClusterSummary {
    pub fn new(id: usize, centroid: PointN, radius: f64, class_label: usize) -> Result<Self> {
        let c = Self {
            id,
            centroid,
            radius,
            class_label,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "cluster {} has non-positive radius {}",
                self.id, self.radius
            )));
        }
        if self.centroid.dim() == 0 || self.centroid.coords().iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "cluster {} has an invalid centroid",
                self.id
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.centroid.dim()
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Side of `p` relative to `plane`; zero maps to [`Side::Negative`].
pub fn plane_side(plane: &Hyperplane, p: &PointN) -> Result<Side> {
    plane.evaluate(p.coords()).map(Side::of)
}

/// Side of the cluster centroid and the gap between the plane and the
/// cluster's bounding ball. A negative clearance means the plane cuts the ball.
pub fn cluster_margin(plane: &Hyperplane, c: &ClusterSummary) -> Result<(Side, f64)> {
    let value = plane.evaluate(c.centroid.coords())?;
    let norm = plane.norm();
    if norm == 0.0 {
        return Err(Error::ZeroNormal);
    }
    Ok((Side::of(value), value.abs() / norm - c.radius))
}

/// Fits `1 + alpha · x = 0` through the midpoints of the given segments.
///
/// With fewer pairs than dimensions the minimum-norm `alpha` is returned.
/// The result is rejected unless every pair ends up on opposite sides.
pub fn fit_plane_through_midpoints(pairs: &[(PointN, PointN)]) -> Result<Hyperplane> {
    let Some((first, _)) = pairs.first() else {
        return Err(Error::InvalidInput("no point pairs given".into()));
    };
    let n = first.dim();
    let k = pairs.len();
    if k > n {
        return Err(Error::InvalidInput(format!(
            "{k} pairs exceed the dimension {n}"
        )));
    }
    let mut rows = Vec::with_capacity(k * n);
    for (a, b) in pairs {
        check_dim(n, a.dim())?;
        check_dim(n, b.dim())?;
        rows.extend(a.midpoint(b)?.into_inner());
    }
    let m = DMatrix::from_row_slice(k, n, &rows);
    let gram = &m * m.transpose();

    let eigen = SymmetricEigen::new(gram.clone());
    let max = eigen.eigenvalues.max();
    let min = eigen.eigenvalues.min();
    let condition = if min <= 0.0 { f64::INFINITY } else { max / min };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularSystem { condition });
    }

    let damped = gram + DMatrix::identity(k, k) * MIDPOINT_DAMPING;
    let rhs = DVector::from_element(k, -1.0);
    let y = damped
        .cholesky()
        .ok_or(Error::SingularSystem { condition })?
        .solve(&rhs);
    let alpha = m.transpose() * y;

    let residual = (0..k)
        .map(|i| (1.0 + m.row(i).dot(&alpha.transpose())).abs())
        .fold(0.0, f64::max);
    if !(residual <= MIDPOINT_RESIDUAL_TOL) {
        return Err(Error::ResidualTooLarge { residual });
    }

    let plane = Hyperplane::new(1.0, alpha.iter().copied().collect())?;
    for (i, (a, b)) in pairs.iter().enumerate() {
        if plane_side(&plane, a)? == plane_side(&plane, b)? {
            return Err(Error::SeparationFailed { pair_index: i });
        }
    }
    Ok(plane)
}

/// The plane through `(a + b) / 2` with normal `b - a`; `b` is on the positive side.
pub fn perpendicular_bisector(a: &PointN, b: &PointN) -> Result<Hyperplane> {
    check_dim(a.dim(), b.dim())?;
    if a == b {
        return Err(Error::InvalidInput("bisector of identical points".into()));
    }
    let normal: Vec<f64> = b
        .coords()
        .iter()
        .zip(a.coords())
        .map(|(b, a)| b - a)
        .collect();
    let mid = a.midpoint(b)?;
    let bias = -normal
        .iter()
        .zip(mid.coords())
        .map(|(w, x)| w * x)
        .sum::<f64>();
    Hyperplane::new(bias, normal)
}

pub fn write_planes_json<W: Write>(planes: &[Hyperplane], writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, planes)?;
    Ok(())
}

pub fn read_planes_json<R: Read>(reader: R) -> Result<Vec<Hyperplane>> {
    let planes: Vec<Hyperplane> = serde_json::from_reader(reader)?;
    for p in &planes {
        p.validate()?;
    }
    if let Some(first) = planes.first() {
        for p in &planes {
            check_dim(first.dim(), p.dim())?;
        }
    }
    Ok(planes)
}

pub fn write_clusters_json<W: Write>(clusters: &[ClusterSummary], writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, clusters)?;
    Ok(())
}

pub fn read_clusters_json<R: Read>(reader: R) -> Result<Vec<ClusterSummary>> {
    let clusters: Vec<ClusterSummary> = serde_json::from_reader(reader)?;
    for c in &clusters {
        c.validate()?;
    }
    Ok(clusters)
}
