//! Nested-hypercube benchmark families.
//!
//! A level-`r` family in `n` dimensions places a cluster at every
//! `Σ_{l=1..r} 2^{r-l} v_l` with `v_l ∈ {±1}^n`, so each coordinate of a
//! center is an odd integer in `[-(2^r - 1), 2^r - 1]` and neighbouring
//! centers are exactly 2 apart along every axis. The class of a cluster
//! depends only on its innermost sign vector `v_r`, with `v_r` and `-v_r`
//! sharing a class, which gives `2^{n-1}` classes.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ClusterSummary, Hyperplane, PointN};

/// Upper bound on `r * n`, i.e. at most 2^24 clusters.
pub const MAX_CLUSTER_BITS: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub point: PointN,
    pub cluster_id: usize,
    pub class_label: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub dim: usize,
    pub samples: Vec<Sample>,
    pub clusters: Vec<ClusterSummary>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// One more than the largest class label present.
    pub fn class_count(&self) -> usize {
        self.samples
            .iter()
            .map(|s| s.class_label)
            .chain(self.clusters.iter().map(|c| c.class_label))
            .max()
            .map_or(0, |m| m + 1)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        header.push("cluster_id".into());
        header.push("class_id".into());
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.dim + 2);
        for s in &self.samples {
            record.clear();
            // `{:?}` on f64 is the shortest string that parses back to the same bits.
            record.extend(s.point.coords().iter().map(|x| format!("{x:?}")));
            record.push(s.cluster_id.to_string());
            record.push(s.class_label.to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a dataset CSV. Cluster summaries are rebuilt from the samples:
    /// centroid is the sample mean, radius the largest distance to it.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.len() < 3
            || &header[header.len() - 2] != "cluster_id"
            || &header[header.len() - 1] != "class_id"
        {
            return Err(Error::InvalidInput(
                "dataset header must be x1,...,xn,cluster_id,class_id".into(),
            ));
        }
        let dim = header.len() - 2;
        let mut samples = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse_err =
                |what: &str| Error::InvalidInput(format!("row {}: bad {what}", row + 1));
            let coords = (0..dim)
                .map(|i| rec[i].parse::<f64>().map_err(|_| parse_err("coordinate")))
                .collect::<Result<Vec<_>>>()?;
            let cluster_id = rec[dim].parse().map_err(|_| parse_err("cluster_id"))?;
            let class_label = rec[dim + 1].parse().map_err(|_| parse_err("class_id"))?;
            samples.push(Sample {
                point: PointN::new(coords)?,
                cluster_id,
                class_label,
            });
        }
        let clusters = summarize_clusters(dim, &samples)?;
        Ok(Self {
            dim,
            samples,
            clusters,
        })
    }
}

fn summarize_clusters(dim: usize, samples: &[Sample]) -> Result<Vec<ClusterSummary>> {
    let Some(max_id) = samples.iter().map(|s| s.cluster_id).max() else {
        return Ok(Vec::new());
    };
    let mut sums = vec![vec![0.0; dim]; max_id + 1];
    let mut counts = vec![0usize; max_id + 1];
    let mut labels = vec![None; max_id + 1];
    for s in samples {
        for (acc, x) in sums[s.cluster_id].iter_mut().zip(s.point.coords()) {
            *acc += x;
        }
        counts[s.cluster_id] += 1;
        match labels[s.cluster_id] {
            None => labels[s.cluster_id] = Some(s.class_label),
            Some(l) if l != s.class_label => {
                return Err(Error::InvalidInput(format!(
                    "cluster {} mixes classes {l} and {}",
                    s.cluster_id, s.class_label
                )))
            }
            Some(_) => {}
        }
    }
    let centroids: Vec<Option<PointN>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| (c > 0).then(|| PointN::new(s.into_iter().map(|x| x / c as f64).collect())))
        .map(Option::transpose)
        .collect::<Result<_>>()?;
    let mut radii = vec![0.0f64; max_id + 1];
    for s in samples {
        if let Some(c) = &centroids[s.cluster_id] {
            radii[s.cluster_id] = radii[s.cluster_id].max(s.point.distance(c)?);
        }
    }
    centroids
        .into_iter()
        .enumerate()
        .filter_map(|(id, c)| c.map(|c| (id, c)))
        .map(|(id, c)| {
            ClusterSummary::new(id, c, radii[id].max(f64::EPSILON), labels[id].unwrap_or(0))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedCubeSpec {
    pub n: usize,
    pub r: usize,
    pub radius: f64,
    pub train_per_cluster: usize,
    pub test_per_cluster: usize,
    pub seed: u64,
}

impl NestedCubeSpec {
    /// Radius 0.3 for a single level and 0.7 for nested ones, 100 train and
    /// 50 test samples per cluster.
    pub fn new(n: usize, r: usize, seed: u64) -> Self {
        Self {
            n,
            r,
            radius: default_radius(r),
            train_per_cluster: 100,
            test_per_cluster: 50,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.r == 0 {
            return Err(Error::InvalidInput("n and r must be at least 1".into()));
        }
        if self.n * self.r > MAX_CLUSTER_BITS {
            return Err(Error::InvalidInput(format!(
                "2^(r*n) = 2^{} clusters is too many",
                self.n * self.r
            )));
        }
        if !(self.radius > 0.0 && self.radius < 1.0) {
            return Err(Error::InvalidInput(format!(
                "radius must lie in (0, 1), got {}",
                self.radius
            )));
        }
        Ok(())
    }

    pub fn cluster_count(&self) -> usize {
        1 << (self.n * self.r)
    }

    pub fn class_count(&self) -> usize {
        1 << (self.n - 1)
    }
}

pub fn default_radius(r: usize) -> f64 {
    if r <= 1 {
        0.3
    } else {
        0.7
    }
}

/// Sign vector of level `level` (0 = outermost) for a cluster id; bit set = +1.
fn level_signs(id: usize, n: usize, r: usize, level: usize) -> impl Iterator<Item = f64> {
    let shift = n * (r - 1 - level);
    (0..n).map(move |a| {
        if (id >> (shift + a)) & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    })
}

/// Class of an innermost sign vector, identifying `v` with `-v`.
pub fn class_of_signs(v: &[f64]) -> usize {
    let flip = v[0] < 0.0;
    v[1..]
        .iter()
        .enumerate()
        .filter(|(_, &s)| (s < 0.0) != flip)
        .map(|(j, _)| 1 << j)
        .sum()
}

/// All cluster summaries of a level-`r` family, in id order.
pub fn nested_clusters(spec: &NestedCubeSpec) -> Result<Vec<ClusterSummary>> {
    spec.validate()?;
    let (n, r) = (spec.n, spec.r);
    (0..spec.cluster_count())
        .map(|id| {
            let mut center = vec![0.0; n];
            for level in 0..r {
                let scale = (1usize << (r - 1 - level)) as f64;
                for (c, s) in center.iter_mut().zip(level_signs(id, n, r, level)) {
                    *c += scale * s;
                }
            }
            let inner: Vec<f64> = level_signs(id, n, r, r - 1).collect();
            ClusterSummary::new(
                id,
                PointN::new(center)?,
                spec.radius,
                class_of_signs(&inner),
            )
        })
        .collect()
}

/// Uniform point in the ball: Gaussian direction scaled by `radius * U^(1/n)`.
fn sample_in_ball<R: Rng>(rng: &mut R, center: &[f64], radius: f64) -> Vec<f64> {
    let n = center.len();
    loop {
        let dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm < 1e-300 {
            continue;
        }
        let u: f64 = rng.random();
        let scale = radius * u.powf(1.0 / n as f64) / norm;
        return center
            .iter()
            .zip(&dir)
            .map(|(c, d)| c + scale * d)
            .collect();
    }
}

/// Train and test sets for a level-`r` family. Each cluster draws from its own
/// ChaCha8 stream (`seed`, stream = cluster id): train samples first, then test.
pub fn generate_level_r(spec: &NestedCubeSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let clusters = nested_clusters(spec)?;
    let mut train = Vec::with_capacity(clusters.len() * spec.train_per_cluster);
    let mut test = Vec::with_capacity(clusters.len() * spec.test_per_cluster);
    for c in &clusters {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(c.id as u64);
        for (out, count) in [
            (&mut train, spec.train_per_cluster),
            (&mut test, spec.test_per_cluster),
        ] {
            for _ in 0..count {
                out.push(Sample {
                    point: PointN::new(sample_in_ball(&mut rng, c.centroid.coords(), c.radius))?,
                    cluster_id: c.id,
                    class_label: c.class_label,
                });
            }
        }
    }
    let make = |samples| LabeledDataset {
        dim: spec.n,
        samples,
        clusters: clusters.clone(),
    };
    Ok((make(train), make(test)))
}

/// Axis-aligned planes `x_a = c` for each axis `a` and each even
/// `c ∈ [-(2^r - 2), 2^r - 2]`, ordered axis by axis, ascending.
pub fn canonical_planes(n: usize, r: usize) -> Result<Vec<Hyperplane>> {
    if n == 0 || r == 0 || r >= 32 {
        return Err(Error::InvalidInput(format!("invalid family n={n}, r={r}")));
    }
    let top = (1i64 << r) - 2;
    let mut planes = Vec::with_capacity(((1usize << r) - 1) * n);
    for axis in 0..n {
        for c in (-top..=top).step_by(2) {
            planes.push(Hyperplane::axis_aligned(n, axis, c as f64)?);
        }
    }
    Ok(planes)
}
