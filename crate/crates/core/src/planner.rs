//! Plane-count estimates and incremental construction of a separating plane
//! set for sparse clusters.
//!
//! Clusters are admitted one at a time. A cluster whose orientation code is
//! not yet taken needs nothing. When it collides with a resident cluster the
//! most recent ("open") plane is refitted through the segment midpoints of
//! every pair it serves; if that refit is rejected a fresh plane between the
//! colliding pair is inserted and becomes the new open plane.
//!
//! A plane is only ever accepted if it cuts none of the input clusters, not
//! just the admitted ones, so later arrivals can never be split by a plane
//! that is already closed.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    check_dim, cluster_margin, fit_plane_through_midpoints, perpendicular_bisector, ClusterSummary,
    Hyperplane, PointN, Side,
};
use crate::orientation::{plane_list_hash, verify_separation};

/// `ceil(log2(max(N, 2)) * (1 + margin_fraction))`.
pub fn estimate_plane_count(clusters: usize, margin_fraction: f64) -> Result<usize> {
    if clusters == 0 {
        return Err(Error::InvalidInput(
            "cluster count must be at least 1".into(),
        ));
    }
    if !(margin_fraction >= 0.0 && margin_fraction.is_finite()) {
        return Err(Error::InvalidInput(
            "margin_fraction must be non-negative".into(),
        ));
    }
    let base = (clusters.max(2) as f64).log2();
    Ok((base * (1.0 + margin_fraction)).ceil() as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub margin_fraction: f64,
    pub max_planes: usize,
    pub seed: u64,
    /// Pairs one plane may serve before a fresh plane is forced. Defaults to
    /// the dimension; larger values are clamped to it.
    pub pending_capacity: Option<usize>,
    /// Randomized candidates scored alongside the shifted bisectors when a
    /// plane is inserted.
    pub candidate_pool: usize,
    /// Further randomized candidates tried before a conflict is declared unresolvable.
    pub fallback_attempts: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            margin_fraction: 0.4,
            max_planes: 4096,
            seed: 0,
            pending_capacity: None,
            candidate_pool: 64,
            fallback_attempts: 512,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneMethod {
    Bisector,
    ShiftedBisector,
    Perturbed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepAction {
    /// The cluster's code was unused; nothing changed.
    None,
    /// The open plane was refitted through the midpoints of `served` pairs.
    Refit {
        plane_index: usize,
        served: Vec<(usize, usize)>,
    },
    /// A new plane was inserted for the colliding pair.
    Insert {
        plane_index: usize,
        method: PlaneMethod,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub cluster_id: usize,
    pub conflict_with: Option<usize>,
    pub action: StepAction,
    pub plane_count: usize,
    pub distinct_codes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerTrace {
    pub steps: Vec<StepRecord>,
    pub estimated_planes: usize,
    pub initial_planes: usize,
    pub insertions: usize,
    pub refits: usize,
    pub plane_hash: String,
    pub planes: Vec<Hyperplane>,
}

type Scored = ((usize, i64), Hyperplane, PlaneMethod, Vec<Side>);

struct OpenPlane {
    index: usize,
    /// Cluster index pairs (resident, newcomer) this plane separates.
    served: Vec<(usize, usize)>,
}

struct Planner<'a> {
    clusters: &'a [ClusterSummary],
    planes: Vec<Hyperplane>,
    /// Side of every input cluster for every plane, `codes[cluster][plane]`.
    codes: Vec<Vec<Side>>,
    admitted: Vec<usize>,
    table: HashMap<Vec<Side>, usize>,
    open: Option<OpenPlane>,
    capacity: usize,
    cfg: &'a PlannerConfig,
    rng: ChaCha8Rng,
}

impl<'a> Planner<'a> {
    /// Sides of every cluster, or `None` if the plane cuts any of them.
    fn sides_without_cuts(&self, plane: &Hyperplane) -> Option<Vec<Side>> {
        self.clusters
            .iter()
            .map(|c| match cluster_margin(plane, c) {
                Ok((side, clearance)) if clearance >= 0.0 => Some(side),
                _ => None,
            })
            .collect()
    }

    fn rebuild_table(&mut self) {
        self.table.clear();
        for &i in &self.admitted {
            self.table.insert(self.codes[i].clone(), i);
        }
    }

    fn admit(&mut self, idx: usize) -> Result<StepRecord> {
        let id = self.clusters[idx].id;
        let Some(&partner) = self.table.get(&self.codes[idx]) else {
            self.admitted.push(idx);
            self.table.insert(self.codes[idx].clone(), idx);
            return Ok(self.record(id, None, StepAction::None));
        };
        let partner_id = self.clusters[partner].id;

        let action = match self.try_refit(partner, idx) {
            Some(action) => action,
            None => self.insert_plane(partner, idx)?,
        };
        self.admitted.push(idx);
        self.rebuild_table();
        debug_assert_eq!(self.table.len(), self.admitted.len());
        Ok(self.record(id, Some(partner_id), action))
    }

    fn try_refit(&mut self, partner: usize, idx: usize) -> Option<StepAction> {
        let open = self.open.as_ref()?;
        if open.served.len() >= self.capacity {
            return None;
        }
        let mut served = open.served.clone();
        served.push((partner, idx));
        let plane_index = open.index;

        let pairs: Vec<(PointN, PointN)> = served
            .iter()
            .map(|&(a, b)| {
                (
                    self.clusters[a].centroid.clone(),
                    self.clusters[b].centroid.clone(),
                )
            })
            .collect();
        let plane = fit_plane_through_midpoints(&pairs).ok()?;
        let sides = self.sides_without_cuts(&plane)?;
        if served.iter().any(|&(a, b)| sides[a] == sides[b]) {
            return None;
        }
        // Every admitted cluster plus the newcomer must keep a distinct code.
        let mut seen = std::collections::HashSet::with_capacity(self.admitted.len() + 1);
        for &i in self.admitted.iter().chain(std::iter::once(&idx)) {
            let mut code = self.codes[i].clone();
            code[plane_index] = sides[i];
            if !seen.insert(code) {
                return None;
            }
        }

        for (code, side) in self.codes.iter_mut().zip(&sides) {
            code[plane_index] = *side;
        }
        self.planes[plane_index] = plane;
        let served_ids = served
            .iter()
            .map(|&(a, b)| (self.clusters[a].id, self.clusters[b].id))
            .collect();
        self.open = Some(OpenPlane {
            index: plane_index,
            served,
        });
        Some(StepAction::Refit {
            plane_index,
            served: served_ids,
        })
    }

    fn insert_plane(&mut self, partner: usize, idx: usize) -> Result<StepAction> {
        if self.planes.len() >= self.cfg.max_planes {
            return Err(Error::MaxPlanesExceeded {
                max_planes: self.cfg.max_planes,
            });
        }
        let (plane, method, sides) = self.separating_plane(partner, idx)?;
        for (code, side) in self.codes.iter_mut().zip(sides) {
            code.push(side);
        }
        self.planes.push(plane);
        let index = self.planes.len() - 1;
        self.open = Some(OpenPlane {
            index,
            served: vec![(partner, idx)],
        });
        Ok(StepAction::Insert {
            plane_index: index,
            method,
        })
    }

    /// Distinct codes among admitted clusters and the newcomer once `sides`
    /// is appended, then the negated imbalance of the split.
    fn score(&self, newcomer: usize, sides: &[Side]) -> (usize, i64) {
        let members = self.admitted.iter().chain(std::iter::once(&newcomer));
        let mut seen = std::collections::HashSet::with_capacity(self.admitted.len() + 1);
        let mut balance = 0i64;
        for &i in members {
            seen.insert((&self.codes[i], sides[i]));
            balance += i64::from(sides[i].value());
        }
        (seen.len(), -balance.abs())
    }

    /// A plane putting `resident` on the positive side and `newcomer` on the
    /// negative side without cutting any cluster. Among the acceptable
    /// candidates the one with the best [`Self::score`] wins, earlier
    /// candidates winning ties.
    fn separating_plane(
        &mut self,
        resident: usize,
        newcomer: usize,
    ) -> Result<(Hyperplane, PlaneMethod, Vec<Side>)> {
        let a = &self.clusters[newcomer];
        let b = &self.clusters[resident];
        let fail = Error::Unresolvable { a: b.id, b: a.id };
        let accept = |planner: &Self, plane: &Hyperplane| -> Option<Vec<Side>> {
            let sides = planner.sides_without_cuts(plane)?;
            (sides[resident] == Side::Positive && sides[newcomer] == Side::Negative)
                .then_some(sides)
        };

        let bisector = perpendicular_bisector(&a.centroid, &b.centroid)?;
        let dir: Vec<f64> = bisector.normal.clone();
        let dist = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        let lo = a.radius / dist;
        let hi = 1.0 - b.radius / dist;
        if lo >= hi {
            return Err(fail);
        }
        let through = |t: f64, normal: &[f64]| -> Result<Hyperplane> {
            let point: Vec<f64> = a
                .centroid
                .coords()
                .iter()
                .zip(&dir)
                .map(|(x, d)| x + t * d)
                .collect();
            let bias = -normal.iter().zip(&point).map(|(w, x)| w * x).sum::<f64>();
            Hyperplane::new(bias, normal.to_vec())
        };

        let mut candidates = vec![(bisector.clone(), PlaneMethod::Bisector)];
        const SHIFTS: usize = 32;
        for s in 1..SHIFTS {
            // Walk outward from the midpoint within the gap between the balls.
            let offset = (s as f64 / SHIFTS as f64) * 0.5 * (hi - lo);
            for t in [0.5 * (lo + hi) - offset, 0.5 * (lo + hi) + offset] {
                candidates.push((through(t, &dir)?, PlaneMethod::ShiftedBisector));
            }
        }

        let unit: Vec<f64> = dir.iter().map(|d| d / dist).collect();
        let perturbed = |rng: &mut ChaCha8Rng, spread: f64| {
            let normal: Vec<f64> = unit
                .iter()
                .map(|u| {
                    u + spread * rng.sample::<f64, _>(StandardNormal) / (unit.len() as f64).sqrt()
                })
                .collect();
            through(rng.random_range(lo..hi), &normal).ok()
        };
        for _ in 0..self.cfg.candidate_pool {
            if let Some(plane) = perturbed(&mut self.rng, 0.75) {
                candidates.push((plane, PlaneMethod::Perturbed));
            }
        }

        let mut best: Option<Scored> = None;
        for (plane, method) in candidates {
            if let Some(sides) = accept(self, &plane) {
                let score = self.score(newcomer, &sides);
                if best.as_ref().is_none_or(|(s, ..)| score > *s) {
                    best = Some((score, plane, method, sides));
                }
            }
        }
        if let Some((_, plane, method, sides)) = best {
            return Ok((plane, method, sides));
        }

        for attempt in 0..self.cfg.fallback_attempts {
            let spread = 0.5 * (1.0 + attempt as f64 / self.cfg.fallback_attempts.max(1) as f64);
            let Some(plane) = perturbed(&mut self.rng, spread) else {
                continue;
            };
            if let Some(sides) = accept(self, &plane) {
                return Ok((plane, PlaneMethod::Perturbed, sides));
            }
        }
        Err(fail)
    }

    fn record(
        &self,
        cluster_id: usize,
        conflict_with: Option<usize>,
        action: StepAction,
    ) -> StepRecord {
        StepRecord {
            cluster_id,
            conflict_with,
            action,
            plane_count: self.planes.len(),
            distinct_codes: self.table.len(),
        }
    }
}

/// Builds a plane set under which every cluster has a distinct orientation
/// code and no plane cuts any cluster's bounding ball. Clusters are admitted
/// in the given order; `initial_planes` are kept and never moved.
pub fn incremental_separate(
    clusters: &[ClusterSummary],
    initial_planes: &[Hyperplane],
    cfg: &PlannerConfig,
) -> Result<(Vec<Hyperplane>, PlannerTrace)> {
    let Some(first) = clusters.first() else {
        return Err(Error::InvalidInput("no clusters given".into()));
    };
    let n = first.dim();
    for c in clusters {
        check_dim(n, c.dim())?;
        c.validate()?;
    }
    for (i, a) in clusters.iter().enumerate() {
        for b in &clusters[i + 1..] {
            if a.id == b.id {
                return Err(Error::InvalidInput(format!(
                    "duplicate cluster id {}",
                    a.id
                )));
            }
            if a.centroid.distance(&b.centroid)? <= a.radius + b.radius {
                return Err(Error::InvalidInput(format!(
                    "clusters {} and {} overlap",
                    a.id, b.id
                )));
            }
        }
    }
    if cfg.max_planes == 0 {
        return Err(Error::InvalidInput("max_planes must be at least 1".into()));
    }
    if initial_planes.len() > cfg.max_planes {
        return Err(Error::MaxPlanesExceeded {
            max_planes: cfg.max_planes,
        });
    }
    let capacity = cfg.pending_capacity.unwrap_or(n).clamp(1, n);

    let mut codes = vec![Vec::with_capacity(initial_planes.len()); clusters.len()];
    for (pi, plane) in initial_planes.iter().enumerate() {
        check_dim(n, plane.dim())?;
        for (code, c) in codes.iter_mut().zip(clusters) {
            let (side, clearance) = cluster_margin(plane, c)?;
            if clearance < 0.0 {
                return Err(Error::CutCluster {
                    cluster_id: c.id,
                    plane_index: pi,
                    clearance,
                });
            }
            code.push(side);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2);
    let mut planner = Planner {
        clusters,
        planes: initial_planes.to_vec(),
        codes,
        admitted: Vec::with_capacity(clusters.len()),
        table: HashMap::with_capacity(clusters.len()),
        open: None,
        capacity,
        cfg,
        rng,
    };

    let mut steps = Vec::with_capacity(clusters.len());
    for idx in 0..clusters.len() {
        steps.push(planner.admit(idx)?);
    }

    let planes = planner.planes;
    let report = verify_separation(&planes, clusters)?;
    if !report.is_separated() {
        // Unreachable unless the bookkeeping above is wrong.
        return Err(Error::DuplicateCodes {
            groups: report.duplicate_groups,
        });
    }

    let insertions = steps
        .iter()
        .filter(|s| matches!(s.action, StepAction::Insert { .. }))
        .count();
    let refits = steps
        .iter()
        .filter(|s| matches!(s.action, StepAction::Refit { .. }))
        .count();
    let trace = PlannerTrace {
        steps,
        estimated_planes: estimate_plane_count(clusters.len(), cfg.margin_fraction)?,
        initial_planes: initial_planes.len(),
        insertions,
        refits,
        plane_hash: plane_list_hash(&planes),
        planes: planes.clone(),
    };
    Ok((planes, trace))
}
