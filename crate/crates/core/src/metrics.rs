//! Accuracy, KCR/PEW architecture scores, and operation counts against a
//! nearest-centroid (distance based) baseline.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::geometry::{check_dim, ClusterSummary, PointN};
use crate::runtime::FeedForwardNet;

/// Fraction of samples whose argmax label equals the class label.
pub fn evaluate_accuracy(net: &FeedForwardNet, dataset: &LabeledDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim(net.input_dim(), dataset.dim)?;
    if let Some(max) = dataset.samples.iter().map(|s| s.class_label).max() {
        if max >= net.output_dim() {
            return Err(Error::InvalidInput(format!(
                "dataset has class {max} but the network has {} outputs",
                net.output_dim()
            )));
        }
    }
    let mut correct = 0usize;
    for s in &dataset.samples {
        if net.predict_label(s.point.coords())?.label == s.class_label {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// Knowledge content ratio per weight and prediction efficiency per weight.
///
/// `kcr` divides the training-equation count by twice the weight count, the
/// convention under which published KCR tables reconcile; `raw_kcr` is the
/// undivided ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KcrPew {
    pub equation_count: usize,
    pub weight_count: usize,
    pub kcr: f64,
    pub raw_kcr: f64,
    pub pew: f64,
}

pub fn kcr_from_counts(
    train_samples: usize,
    output_units: usize,
    weight_count: usize,
    test_fraction_correct: f64,
) -> Result<KcrPew> {
    if train_samples == 0 || output_units == 0 {
        return Err(Error::InvalidInput(
            "sample and output counts must be positive".into(),
        ));
    }
    if weight_count == 0 {
        return Err(Error::InvalidInput("network has no weights".into()));
    }
    if !(0.0..=1.0).contains(&test_fraction_correct) {
        return Err(Error::InvalidInput(format!(
            "fraction correct {test_fraction_correct} outside [0, 1]"
        )));
    }
    let equation_count = train_samples * output_units;
    let raw_kcr = equation_count as f64 / weight_count as f64;
    let kcr = raw_kcr / 2.0;
    Ok(KcrPew {
        equation_count,
        weight_count,
        kcr,
        raw_kcr,
        pew: kcr * test_fraction_correct,
    })
}

pub fn kcr_pew(
    net: &FeedForwardNet,
    train_samples: usize,
    output_units: usize,
    test_fraction_correct: f64,
) -> Result<KcrPew> {
    kcr_from_counts(
        train_samples,
        output_units,
        net.count_weights(),
        test_fraction_correct,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureScore {
    pub architecture: Vec<usize>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub kcr: f64,
    pub raw_kcr: f64,
    pub pew: f64,
    pub weight_count: usize,
    pub equation_count: usize,
}

impl ArchitectureScore {
    pub fn architecture_label(&self) -> String {
        self.architecture
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("-")
    }
}

pub fn score_architecture(
    net: &FeedForwardNet,
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<ArchitectureScore> {
    let train_accuracy = evaluate_accuracy(net, train)?;
    let test_accuracy = evaluate_accuracy(net, test)?;
    let k = kcr_pew(net, train.len(), net.output_dim(), test_accuracy)?;
    Ok(ArchitectureScore {
        architecture: net.architecture(),
        train_accuracy,
        test_accuracy,
        kcr: k.kcr,
        raw_kcr: k.raw_kcr,
        pew: k.pew,
        weight_count: k.weight_count,
        equation_count: k.equation_count,
    })
}

/// Columns: architecture, train %, test %, KCR, PEW, then the undivided KCR.
pub fn write_scores_csv<W: Write>(scores: &[ArchitectureScore], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "architecture",
        "train_pct",
        "test_pct",
        "kcr",
        "pew",
        "raw_kcr",
    ])?;
    for s in scores {
        w.write_record([
            s.architecture_label(),
            format!("{:.3}", 100.0 * s.train_accuracy),
            format!("{:.3}", 100.0 * s.test_accuracy),
            format!("{:.2}", s.kcr),
            format!("{:.2}", s.pew),
            format!("{:.2}", s.raw_kcr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-sample multiply-add counts: `q` plane evaluations versus `N`
/// squared-distance evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpCountReport {
    pub linear_ops: u64,
    pub distance_ops: u64,
    pub ratio: f64,
}

pub fn op_count_report(planes: usize, dim: usize, clusters: usize) -> Result<OpCountReport> {
    if planes == 0 || dim == 0 || clusters == 0 {
        return Err(Error::InvalidInput(
            "plane, dimension and cluster counts must be positive".into(),
        ));
    }
    let linear_ops = planes as u64 * (dim as u64 + 1);
    let distance_ops = clusters as u64 * dim as u64;
    Ok(OpCountReport {
        linear_ops,
        distance_ops,
        ratio: distance_ops as f64 / linear_ops as f64,
    })
}

/// Class of the nearest centroid; ties go to the lowest cluster id.
pub fn centroid_predict(clusters: &[ClusterSummary], p: &PointN) -> Result<usize> {
    let mut best: Option<(f64, usize, usize)> = None;
    for c in clusters {
        let d = c.centroid.distance_squared(p)?;
        let better = match best {
            None => true,
            Some((bd, bid, _)) => d < bd || (d == bd && c.id < bid),
        };
        if better {
            best = Some((d, c.id, c.class_label));
        }
    }
    best.map(|(_, _, label)| label)
        .ok_or_else(|| Error::InvalidInput("no clusters given".into()))
}

pub fn centroid_accuracy(clusters: &[ClusterSummary], dataset: &LabeledDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut correct = 0usize;
    for s in &dataset.samples {
        if centroid_predict(clusters, &s.point)? == s.class_label {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate_level_r, NestedCubeSpec, Sample};
    use crate::runtime::{Activation, Layer};

    fn pt(c: &[f64]) -> PointN {
        PointN::new(c.to_vec()).unwrap()
    }

    fn constant_net(dim: usize, k: usize) -> FeedForwardNet {
        let layer = Layer::new(
            dim,
            k,
            vec![0.0; dim * k],
            vec![1.0; k],
            Activation::identity(),
        )
        .unwrap();
        FeedForwardNet::new(dim, vec![layer]).unwrap()
    }

    fn params(arch: &[usize]) -> usize {
        arch.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    #[test]
    fn constant_net_on_balanced_data() {
        let samples = (0..8)
            .map(|i| Sample {
                point: pt(&[i as f64]),
                cluster_id: i,
                class_label: i % 4,
            })
            .collect();
        let ds = LabeledDataset {
            dim: 1,
            samples,
            clusters: vec![],
        };
        assert_eq!(evaluate_accuracy(&constant_net(1, 4), &ds).unwrap(), 0.25);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let ds = LabeledDataset {
            dim: 1,
            samples: vec![],
            clusters: vec![],
        };
        assert!(matches!(
            evaluate_accuracy(&constant_net(1, 2), &ds),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn kcr_table_rows() {
        let rows = [([4, 12, 256, 8], 18.81), ([4, 256, 256, 8], 1.48)];
        for (arch, printed) in rows {
            let k = kcr_from_counts(25_600, 8, params(&arch), 1.0).unwrap();
            assert_eq!(k.equation_count, 204_800);
            assert!(
                ((k.kcr - printed) / printed).abs() < 0.01,
                "{arch:?}: {}",
                k.kcr
            );
            assert_eq!(k.pew, k.kcr);
            assert_eq!(k.raw_kcr, 2.0 * k.kcr);
        }
        assert_eq!(params(&[4, 12, 256, 8]), 5444);
    }

    #[test]
    fn pew_scales_with_fraction_correct() {
        let k = kcr_from_counts(100, 4, 140, 0.75).unwrap();
        assert!((k.pew / k.kcr - 0.75).abs() < 1e-12);
        assert!(k.pew <= k.kcr);
        assert!(kcr_from_counts(0, 4, 140, 1.0).is_err());
        assert!(kcr_from_counts(10, 4, 0, 1.0).is_err());
        assert!(kcr_from_counts(10, 4, 5, 1.5).is_err());
    }

    #[test]
    fn op_count_examples() {
        let r = op_count_report(12, 4, 256).unwrap();
        assert_eq!((r.linear_ops, r.distance_ops), (60, 1024));
        let r = op_count_report(21, 3, 512).unwrap();
        assert_eq!((r.linear_ops, r.distance_ops), (84, 1536));
        let r = op_count_report(50, 7, 50).unwrap();
        assert!((r.ratio - 7.0 / 8.0).abs() < 1e-15);
        assert!(op_count_report(0, 3, 1).is_err());
    }

    #[test]
    fn op_ratio_closed_form_for_level_r() {
        for n in 1..=4usize {
            for r in 1..=3usize {
                let q = ((1 << r) - 1) * n;
                let clusters = 1usize << (r * n);
                let rep = op_count_report(q, n, clusters).unwrap();
                let expected = clusters as f64 * n as f64 / (q as f64 * (n as f64 + 1.0));
                assert!((rep.ratio - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn centroid_examples() {
        let clusters = vec![
            ClusterSummary::new(0, pt(&[0.0, 0.0]), 0.1, 3).unwrap(),
            ClusterSummary::new(1, pt(&[2.0, 0.0]), 0.1, 5).unwrap(),
        ];
        assert_eq!(centroid_predict(&clusters, &pt(&[2.0, 0.0])).unwrap(), 5);
        assert_eq!(centroid_predict(&clusters, &pt(&[1.0, 0.0])).unwrap(), 3);
        let mut swapped = clusters.clone();
        swapped.reverse();
        assert_eq!(centroid_predict(&swapped, &pt(&[1.0, 0.0])).unwrap(), 3);
        assert!(centroid_predict(&clusters, &pt(&[1.0])).is_err());
        assert!(centroid_predict(&[], &pt(&[1.0])).is_err());
    }

    #[test]
    fn centroid_baseline_is_exact_on_benchmarks() {
        for n in 1..=4 {
            for r in 1..=3 {
                let mut spec = NestedCubeSpec::new(n, r, 17);
                spec.train_per_cluster = 0;
                spec.test_per_cluster = 3;
                let (_, test) = generate_level_r(&spec).unwrap();
                assert_eq!(
                    centroid_accuracy(&test.clusters, &test).unwrap(),
                    1.0,
                    "n={n} r={r}"
                );
            }
        }
    }

    #[test]
    fn scores_csv_layout() {
        let s = ArchitectureScore {
            architecture: vec![4, 12, 256, 8],
            train_accuracy: 0.99852,
            test_accuracy: 0.99672,
            kcr: 18.81,
            raw_kcr: 37.62,
            pew: 18.75,
            weight_count: 5444,
            equation_count: 204_800,
        };
        let mut buf = Vec::new();
        write_scores_csv(&[s], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "architecture,train_pct,test_pct,kcr,pew,raw_kcr\n4-12-256-8,99.852,99.672,18.81,18.75,37.62\n"
        );
    }
}
