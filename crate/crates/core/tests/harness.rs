use hercs::envs::EnvId;
use hercs::harness::{
    run_all, run_seed, seed_csv, success_rate, write_outputs, EpochMetrics, ExperimentConfig,
    AGGREGATE_CSV_HEADER, SEED_CSV_HEADER,
};
use hercs::learner::{Agent, TrainConfig};
use hercs::rng::{stream_rng, Stream};
use hercs::sampling::Algo;

fn small(env: EnvId, algos: &[Algo], seeds: &[u64]) -> ExperimentConfig {
    ExperimentConfig {
        env,
        algos: algos.to_vec(),
        seeds: seeds.to_vec(),
        epochs: 3,
        cycles_per_epoch: 3,
        episodes_per_cycle: 2,
        optimizer_steps_per_cycle: 5,
        eval_episodes: 5,
        batch_size: 32,
        buffer_capacity: 60,
        fgb_capacity: 8,
        k: 3,
        threads: 1,
        train: TrainConfig {
            hidden: vec![16, 16],
            ..TrainConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

/// Metrics with the measured wall time zeroed, for comparing runs.
fn untimed(metrics: &[EpochMetrics]) -> Vec<EpochMetrics> {
    metrics
        .iter()
        .cloned()
        .map(|m| EpochMetrics {
            wall_time_ms: 0,
            ..m
        })
        .collect()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let at = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(at).unwrap().to_string())
        .collect()
}

#[test]
fn same_seed_gives_identical_runs() {
    for env in [EnvId::BitFlip(5), EnvId::Push2D] {
        let cfg = small(env, &[Algo::HerEbpCs], &[3]);
        let a = run_seed(&cfg, Algo::HerEbpCs, 3).unwrap();
        let b = run_seed(&cfg, Algo::HerEbpCs, 3).unwrap();
        assert_eq!(untimed(&a.metrics), untimed(&b.metrics));
        assert_eq!(seed_csv(&a.metrics, false), seed_csv(&b.metrics, false));
        assert!(
            a.metrics.last().unwrap().cluster_version > 0,
            "{env}: clustering never refit"
        );
    }
}

#[test]
fn seeds_do_not_influence_each_other() {
    let cfg = small(EnvId::BitFlip(5), &[Algo::Her, Algo::HerCs], &[1, 2, 3]);
    let suite = run_all(&cfg).unwrap();
    for algo in [Algo::Her, Algo::HerCs] {
        let alone = run_seed(&cfg, algo, 2).unwrap();
        let inside = suite.runs_for(algo).find(|r| r.seed == 2).unwrap();
        assert_eq!(untimed(&alone.metrics), untimed(&inside.metrics));
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let mut cfg = small(EnvId::Reach2D, &[Algo::Her, Algo::HerEbp], &[1, 2]);
    let one = run_all(&cfg).unwrap();
    cfg.threads = 3;
    let many = run_all(&cfg).unwrap();
    for (a, b) in one.runs.iter().zip(&many.runs) {
        assert_eq!((a.algo, a.seed), (b.algo, b.seed));
        assert_eq!(untimed(&a.metrics), untimed(&b.metrics));
    }
}

#[test]
fn aggregates_recompute_from_seed_files() {
    let cfg = small(EnvId::BitFlip(4), &[Algo::Her, Algo::HerCs], &[4, 5, 6]);
    let suite = run_all(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = write_outputs(&cfg, &suite, dir.path()).unwrap();
    assert!(files.iter().any(|f| f.ends_with("chart.svg")));
    assert!(files.iter().any(|f| f.ends_with("refits_seed_4.jsonl")));
    for algo in [Algo::Her, Algo::HerCs] {
        let per_seed: Vec<Vec<f64>> = cfg
            .seeds
            .iter()
            .map(|s| {
                let text = std::fs::read_to_string(
                    dir.path().join(algo.as_str()).join(format!("seed_{s}.csv")),
                )
                .unwrap();
                assert_eq!(text.lines().next().unwrap(), SEED_CSV_HEADER);
                assert!(column(&text, "wall_time_ms").iter().all(String::is_empty));
                column(&text, "success_rate")
                    .iter()
                    .map(|v| v.parse().unwrap())
                    .collect()
            })
            .collect();
        let text =
            std::fs::read_to_string(dir.path().join(algo.as_str()).join("aggregate.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), AGGREGATE_CSV_HEADER);
        let mean: Vec<f64> = column(&text, "mean")
            .iter()
            .map(|v| v.parse().unwrap())
            .collect();
        let min: Vec<f64> = column(&text, "min")
            .iter()
            .map(|v| v.parse().unwrap())
            .collect();
        let max: Vec<f64> = column(&text, "max")
            .iter()
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(mean.len(), cfg.epochs);
        for e in 0..cfg.epochs {
            let rates: Vec<f64> = per_seed.iter().map(|r| r[e]).collect();
            let m = rates.iter().sum::<f64>() / rates.len() as f64;
            assert!((mean[e] - m).abs() < 1e-12);
            assert_eq!(min[e], rates.iter().copied().fold(f64::INFINITY, f64::min));
            assert_eq!(
                max[e],
                rates.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            );
        }
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["summary"].as_array().unwrap().len(), 2);
}

#[test]
fn untrained_agent_rarely_solves_long_bitflip() {
    let env = EnvId::BitFlip(15);
    let spec = env.spec();
    let mut total = 0.0;
    for seed in 0..5 {
        let agent = Agent::for_env(
            &spec,
            TrainConfig::default(),
            &mut stream_rng(seed, Stream::Init),
        )
        .unwrap();
        total += success_rate(
            &agent,
            env.make().as_mut(),
            20,
            &mut stream_rng(seed, Stream::Evaluation),
        )
        .unwrap();
    }
    assert!(total / 5.0 <= 0.1);
}

#[test]
fn bad_configs_are_rejected_before_running() {
    let mut cfg = small(EnvId::BitFlip(4), &[Algo::Her], &[1]);
    cfg.batch_size = 0;
    assert!(run_all(&cfg).is_err());
    let mut cfg = small(EnvId::BitFlip(4), &[Algo::Her], &[1]);
    assert!(cfg.set("future-p", "1.5").is_err() || cfg.validate().is_err());
    assert!(cfg.set("env", "maze").is_err());
    assert!(cfg.set("no-such-key", "1").is_err());
}
