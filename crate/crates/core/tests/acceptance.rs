//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ovnet_core::metrics::kcr_from_counts;
use ovnet_core::{
    canonical_planes, code_dot, evaluate_accuracy, generate_level_r, incremental_separate,
    init_weights, nested_clusters, numeric_gradient_check, op_count_report, synthesize_three_layer,
    train_backprop, verify_separation, ClusterSummary, CollectionKind, FeedForwardNet, Hyperplane,
    NestedCubeSpec, OrientationCode, PlannerConfig, PointN, Side, SynthesisInput, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Artifacts = (Vec<u8>, Vec<u8>, Vec<u8>);
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(
        elapsed < limit,
        format!("took {:.2?}, limit {:.0?}", elapsed, limit),
    )
}

fn synthesized_accuracy(
    spec: &NestedCubeSpec,
    planes: Vec<Hyperplane>,
) -> Result<(f64, f64), String> {
    let (train, test) = generate_level_r(spec).map_err(|e| e.to_string())?;
    let clusters = nested_clusters(spec).map_err(|e| e.to_string())?;
    let input = SynthesisInput::new(planes, clusters, spec.class_count());
    let net = synthesize_three_layer(&input, CollectionKind::Tanh).map_err(|e| e.to_string())?;
    let tr = evaluate_accuracy(&net, &train).map_err(|e| e.to_string())?;
    let te = evaluate_accuracy(&net, &test).map_err(|e| e.to_string())?;
    Ok((tr, te))
}

fn cube_3d() -> Outcome {
    let start = Instant::now();
    let spec = NestedCubeSpec::new(3, 1, 11);
    let planes = (0..3)
        .map(|a| Hyperplane::axis_aligned(3, a, 0.0).unwrap())
        .collect();
    let (tr, te) = synthesized_accuracy(&spec, planes)?;
    let elapsed = start.elapsed();
    check(
        tr == 1.0 && te == 1.0,
        format!("accuracy train {tr} test {te}"),
    )?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("3-3-8-4 train 100% test 100% in {elapsed:.2?}"))
}

fn nested_4d() -> Outcome {
    let start = Instant::now();
    let spec = NestedCubeSpec::new(4, 2, 12);
    let planes = canonical_planes(4, 2).map_err(|e| e.to_string())?;
    check(
        planes.len() == 12,
        format!("{} canonical planes", planes.len()),
    )?;
    check(spec.cluster_count() == 256, "cluster count")?;
    check(
        spec.cluster_count() * spec.train_per_cluster == 25_600
            && spec.cluster_count() * spec.test_per_cluster == 12_800,
        "sample counts",
    )?;
    let (tr, te) = synthesized_accuracy(&spec, planes)?;
    let elapsed = start.elapsed();
    check(
        tr == 1.0 && te == 1.0,
        format!("accuracy train {tr} test {te}"),
    )?;
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "4-12-256-8 on 25600/12800 samples, 100% in {elapsed:.2?}"
    ))
}

fn level_r_scaling() -> Outcome {
    let start = Instant::now();
    let spec = NestedCubeSpec {
        train_per_cluster: 20,
        test_per_cluster: 20,
        ..NestedCubeSpec::new(3, 3, 13)
    };
    let planes = canonical_planes(3, 3).map_err(|e| e.to_string())?;
    check(planes.len() == 21, format!("{} planes", planes.len()))?;
    check(
        spec.cluster_count() == 512 && spec.class_count() == 4,
        "cluster/class count",
    )?;
    let q = planes.len();
    let (tr, te) = synthesized_accuracy(&spec, planes)?;
    let ops = op_count_report(q, 3, 512).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        tr == 1.0 && te == 1.0,
        format!("accuracy train {tr} test {te}"),
    )?;
    check(
        ops.linear_ops == 84 && ops.distance_ops == 1536,
        format!("ops {} vs {}", ops.linear_ops, ops.distance_ops),
    )?;
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!(
        "3-21-512-4 100%, ops {} vs {} in {elapsed:.2?}",
        ops.linear_ops, ops.distance_ops
    ))
}

fn kcr_table() -> Outcome {
    let rows: [(&[usize], f64); 5] = [
        (&[4, 12, 256, 8], 18.81),
        (&[4, 13, 256, 8], 17.95),
        (&[4, 14, 256, 8], 17.16),
        (&[4, 18, 256, 8], 14.52),
        (&[4, 256, 256, 8], 1.48),
    ];
    let mut worst = 0.0f64;
    for (arch, printed) in rows {
        let weights = init_weights(arch, 0, 1.0, 1.0)
            .map_err(|e| e.to_string())?
            .count_weights();
        let k = kcr_from_counts(25_600, 8, weights, 1.0).map_err(|e| e.to_string())?;
        let rel = (k.kcr - printed).abs() / printed;
        check(
            rel < 0.01,
            format!("{arch:?}: {:.3} vs {printed} ({:.2}%)", k.kcr, rel * 100.0),
        )?;
        worst = worst.max(rel);
    }
    Ok(format!("5 rows within 1%, worst {:.2}%", worst * 100.0))
}

fn trained_4d_cube() -> Outcome {
    let start = Instant::now();
    let mut tried = Vec::new();
    for seed in 0..5u64 {
        let spec = NestedCubeSpec::new(4, 1, 100 + seed);
        let (train, test) = generate_level_r(&spec).map_err(|e| e.to_string())?;
        let cfg = TrainConfig {
            learning_rate: 0.05,
            epochs: 2000,
            batch_size: 8,
            seed,
            stop_at_train_accuracy: Some(1.0),
            ..TrainConfig::default()
        };
        let net = init_weights(&[4, 16, 16, 8], seed, 1.0, cfg.beta).map_err(|e| e.to_string())?;
        let (_, report) = train_backprop(net, &train, &test, &cfg).map_err(|e| e.to_string())?;
        tried.push(format!(
            "seed {seed}: {:.2}%",
            report.final_test_accuracy * 100.0
        ));
        if report.final_test_accuracy >= 0.99 {
            let elapsed = start.elapsed();
            within(elapsed, Duration::from_secs(120))?;
            return Ok(format!(
                "4-16-16-8 seed {seed} test {:.2}% after {} epochs, {elapsed:.2?}",
                report.final_test_accuracy * 100.0,
                report.epochs_run
            ));
        }
    }
    Err(format!("no seed reached 99%: {}", tried.join(", ")))
}

fn sparse_instance(seed: u64) -> Vec<ClusterSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..100)
        .map(|id| {
            let c: Vec<f64> = (0..16).map(|_| rng.random_range(-10.0..10.0)).collect();
            let r = rng.random_range(0.05..0.25);
            ClusterSummary::new(id, PointN::new(c).unwrap(), r, id % 4).unwrap()
        })
        .collect()
}

fn planner_suite() -> Outcome {
    let results: Vec<Result<usize, String>> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let clusters = sparse_instance(seed);
            let cfg = PlannerConfig {
                seed,
                ..PlannerConfig::default()
            };
            let (planes, _) = incremental_separate(&clusters, &[], &cfg)
                .map_err(|e| format!("seed {seed}: {e}"))?;
            let report = verify_separation(&planes, &clusters).map_err(|e| e.to_string())?;
            check(
                report.duplicate_groups.is_empty() && report.cut_clusters.is_empty(),
                format!("seed {seed}: not separated"),
            )?;
            Ok(planes.len())
        })
        .collect();
    let counts = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let bound = 3 * (100f64).log2().ceil() as usize;
    let ok = counts.iter().filter(|&&q| q <= bound).count();
    let max = counts.iter().max().copied().unwrap_or(0);
    check(ok >= 95, format!("only {ok}/100 within q <= {bound}"))?;
    Ok(format!(
        "100/100 separated, {ok}/100 with q <= {bound} (max q {max})"
    ))
}

fn code_from_bits(bits: u64, q: usize) -> OrientationCode {
    (0..q)
        .map(|i| {
            if bits >> i & 1 == 1 {
                Side::Positive
            } else {
                Side::Negative
            }
        })
        .collect()
}

fn orientation_algebra() -> Outcome {
    let mut pairs = 0u64;
    for q in 1..=10usize {
        let codes: Vec<_> = (0..1u64 << q).map(|b| code_from_bits(b, q)).collect();
        for (i, a) in codes.iter().enumerate() {
            for (j, b) in codes.iter().enumerate() {
                let d = code_dot(a, b).map_err(|e| e.to_string())?;
                let ok = if i == j {
                    d == q as i64
                } else {
                    d <= q as i64 - 2
                };
                check(ok, format!("q={q} codes {i},{j}: dot {d}"))?;
                pairs += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sampled = 0u64;
    for q in 11..=64usize {
        for _ in 0..2000 {
            let a = code_from_bits(rng.random(), q);
            let b = if rng.random_bool(0.1) {
                a.clone()
            } else {
                code_from_bits(rng.random(), q)
            };
            let d = code_dot(&a, &b).map_err(|e| e.to_string())?;
            let ok = if a == b {
                d == q as i64
            } else {
                d <= q as i64 - 2
            };
            check(ok, format!("q={q}: dot {d}"))?;
            check(a == b || (q as i64 - d) % 2 == 0, "parity")?;
            sampled += 1;
        }
    }
    Ok(format!(
        "{pairs} exhaustive pairs (q <= 10), {sampled} sampled pairs (q <= 64)"
    ))
}

fn random_architecture(rng: &mut ChaCha8Rng) -> Vec<usize> {
    let hidden = rng.random_range(0..=2);
    let mut arch = vec![rng.random_range(1..=8)];
    for _ in 0..hidden {
        arch.push(rng.random_range(1..=16));
    }
    arch.push(rng.random_range(1..=8));
    arch
}

fn gradient_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let arch = if trial == 0 {
            vec![8, 16, 16, 8]
        } else {
            random_architecture(&mut rng)
        };
        let beta = rng.random_range(0.1..=2.0);
        let net: FeedForwardNet =
            init_weights(&arch, trial, 1.0, beta).map_err(|e| e.to_string())?;
        let x: Vec<f64> = (0..arch[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
        let k = *arch.last().unwrap();
        let mut target = vec![0.0; k];
        target[rng.random_range(0..k)] = 1.0;
        let err = numeric_gradient_check(&net, &x, &target, 1e-5).map_err(|e| e.to_string())?;
        check(
            err <= 1e-4,
            format!("{arch:?} beta {beta:.2}: error {err:e}"),
        )?;
        worst = worst.max(err);
    }
    Ok(format!(
        "100 architectures, worst relative error {worst:.2e}"
    ))
}

fn artifacts(seed: u64) -> Result<Artifacts, String> {
    let spec = NestedCubeSpec::new(3, 1, seed);
    let (train, test) = generate_level_r(&spec).map_err(|e| e.to_string())?;
    let mut train_csv = Vec::new();
    let mut test_csv = Vec::new();
    train.write_csv(&mut train_csv).map_err(|e| e.to_string())?;
    test.write_csv(&mut test_csv).map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        epochs: 30,
        seed,
        ..TrainConfig::default()
    };
    let net = init_weights(&[3, 8, 8, 4], seed, 1.0, cfg.beta).map_err(|e| e.to_string())?;
    let (net, _) = train_backprop(net, &train, &test, &cfg).map_err(|e| e.to_string())?;
    let mut model = Vec::new();
    net.save_json(&mut model).map_err(|e| e.to_string())?;
    Ok((train_csv, test_csv, model))
}

fn determinism() -> Outcome {
    let a = artifacts(21)?;
    let b = artifacts(21)?;
    check(a.0 == b.0 && a.1 == b.1, "dataset CSVs differ")?;
    check(a.2 == b.2, "trained models differ")?;
    let c = artifacts(22)?;
    check(
        a.0 != c.0 && a.2 != c.2,
        "different seeds gave identical artifacts",
    )?;
    Ok(format!(
        "CSVs ({} + {} bytes) and model ({} bytes) byte-identical",
        a.0.len(),
        a.1.len(),
        a.2.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("constructive exactness, 3D cube", cube_3d),
        ("constructive exactness, nested 4D", nested_4d),
        ("level-r scaling", level_r_scaling),
        ("KCR table reconciliation", kcr_table),
        ("trained reproduction", trained_4d_cube),
        ("planner property suite", planner_suite),
        ("orientation algebra", orientation_algebra),
        ("gradient oracle", gradient_oracle),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
