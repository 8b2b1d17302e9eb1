//! Analytic construction of the three-layer `q-m-k` classifier.
//!
//! Layer 1 evaluates the `q` separating planes through `tanh(beta * y)`.
//! Layer 2 has one collection unit per cluster whose weights are the
//! cluster's orientation code and whose bias is `1/2 - q`, so its
//! pre-activation is `1/2` for inputs in its own sign region and at most
//! `-3/2` elsewhere. Layer 3 sums the collection units of each class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ClusterSummary, Hyperplane};
use crate::orientation::verify_separation;
use crate::runtime::{Activation, FeedForwardNet, Layer};

pub const DEFAULT_BETA: f64 = 5.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectionKind {
    #[default]
    Tanh,
    UnitStep,
}

#[derive(Clone, Debug)]
pub struct SynthesisInput {
    pub planes: Vec<Hyperplane>,
    pub clusters: Vec<ClusterSummary>,
    pub class_count: usize,
    pub beta: f64,
}

impl SynthesisInput {
    pub fn new(planes: Vec<Hyperplane>, clusters: Vec<ClusterSummary>, class_count: usize) -> Self {
        Self {
            planes,
            clusters,
            class_count,
            beta: DEFAULT_BETA,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }
}

pub fn synthesize_three_layer(
    input: &SynthesisInput,
    kind: CollectionKind,
) -> Result<FeedForwardNet> {
    let q = input.planes.len();
    let m = input.clusters.len();
    let k = input.class_count;
    if q == 0 || m == 0 || k == 0 {
        return Err(Error::InvalidInput(format!(
            "need at least one plane, cluster and class (got q={q}, m={m}, k={k})"
        )));
    }
    if !(input.beta > 0.0 && input.beta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "beta must be positive, got {}",
            input.beta
        )));
    }
    for c in &input.clusters {
        if c.class_label >= k {
            return Err(Error::ClassOutOfRange {
                cluster_id: c.id,
                label: c.class_label,
                class_count: k,
            });
        }
    }

    let report = verify_separation(&input.planes, &input.clusters)?;
    if let Some(cut) = report.cut_clusters.first() {
        return Err(Error::CutCluster {
            cluster_id: cut.cluster_id,
            plane_index: cut.plane_index,
            clearance: cut.clearance,
        });
    }
    if !report.duplicate_groups.is_empty() {
        return Err(Error::DuplicateCodes {
            groups: report.duplicate_groups,
        });
    }

    let n = input.planes[0].dim();
    let plane_layer = Layer::new(
        n,
        q,
        input
            .planes
            .iter()
            .flat_map(|p| p.normal.iter().copied())
            .collect(),
        input.planes.iter().map(|p| p.bias).collect(),
        Activation::tanh(input.beta),
    )?;

    let collection_weights: Vec<f64> = input
        .clusters
        .iter()
        .flat_map(|c| report.codes[&c.id].to_f64())
        .collect();
    let collection_act = match kind {
        CollectionKind::Tanh => Activation::tanh(input.beta),
        CollectionKind::UnitStep => Activation {
            beta: input.beta,
            ..Activation::unit_step()
        },
    };
    let collection_layer = Layer::new(
        q,
        m,
        collection_weights,
        vec![0.5 - q as f64; m],
        collection_act,
    )?;

    // Tanh units sit near -1 when idle: read each one as (1 + u) / 2.
    let (member_weight, per_member_bias) = match kind {
        CollectionKind::UnitStep => (1.0, 0.0),
        CollectionKind::Tanh => (0.5, 0.5),
    };
    let mut output_weights = vec![0.0; k * m];
    let mut output_bias = vec![0.0; k];
    for (i, c) in input.clusters.iter().enumerate() {
        output_weights[c.class_label * m + i] = member_weight;
        output_bias[c.class_label] += per_member_bias;
    }
    let output_layer = Layer::new(m, k, output_weights, output_bias, Activation::identity())?;

    FeedForwardNet::new(n, vec![plane_layer, collection_layer, output_layer])
}
