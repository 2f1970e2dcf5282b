use std::process::Command;

use hrcf::encoder::init_embeddings;
use hrcf::eval::evaluate;
use hrcf::graph::{generate_synthetic, split_and_index, SyntheticGraphSpec};
use hrcf::objective::{loss_and_grad, sample_triplets, total_loss, ObjectiveParams, Reduction};
use hrcf::optim::OptimizerState;
use hrcf::oracle::{gradient_check, gradient_fixture};
use hrcf::train::{ablate_lambda, train};
use hrcf::{InteractionGraph, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_graph(seed: u64) -> InteractionGraph {
    let spec = SyntheticGraphSpec::parse(&format!("users=120,items=90,exponent=2.5,mean_degree=8,seed={seed}")).unwrap();
    split_and_index(&generate_synthetic(&spec).unwrap(), 0.8, seed).unwrap()
}

fn quick_config() -> TrainConfig {
    TrainConfig {
        dim: 8,
        layers: 2,
        epochs: 6,
        eval_every: 3,
        batch_size: 256,
        lr: 0.01,
        loss_reduction: Reduction::Sum,
        ..TrainConfig::default()
    }
}

#[test]
fn gradient_matches_finite_differences_for_every_setting() {
    for seed in 0..3 {
        let (g, table, batch) = gradient_fixture(seed);
        for include_layer0 in [false, true] {
            for reduction in [Reduction::Mean, Reduction::Sum] {
                for (layers, lambda) in [(1, 0.0), (3, 4.0)] {
                    let params = ObjectiveParams { margin: 2.0, lambda, layers, include_layer0, reduction };
                    let worst = gradient_check(&g, &table, &batch, &params, 1e-5).unwrap();
                    assert!(worst < 1e-4, "seed {seed} {params:?}: {worst:e}");
                }
            }
        }
    }
}

#[test]
fn small_steps_descend() {
    let params = ObjectiveParams { margin: 0.5, lambda: 1.0, layers: 2, include_layer0: false, reduction: Reduction::Mean };
    for full_rsgd in [false, true] {
        let (mut ok, mut total) = (0, 0);
        for seed in 0..20 {
            let g = small_graph(seed);
            let mut table = init_embeddings(g.num_users(), g.num_items(), 6, 0.3, seed).unwrap();
            let batch = sample_triplets(&g, &mut ChaCha8Rng::seed_from_u64(seed));
            let mut opt = OptimizerState::new(1e-3, 0.0, full_rsgd).unwrap();
            for _ in 0..50 {
                let (before, grad) = loss_and_grad(&g, &table, &batch, &params).unwrap();
                opt.step(&mut table, &grad).unwrap();
                let after = total_loss(&g, &table, &batch, &params).unwrap();
                ok += usize::from(after.total <= before.total);
                total += 1;
            }
        }
        assert!(ok as f64 >= 0.95 * total as f64, "full_rsgd={full_rsgd}: {ok}/{total}");
    }
}

#[test]
fn random_embeddings_give_chance_recall() {
    let g = small_graph(3);
    let mut sum = 0.0;
    let mut expected = 0.0;
    let reps = 40;
    for seed in 0..reps {
        let t = init_embeddings(g.num_users(), g.num_items(), 16, 1.0, 100 + seed).unwrap();
        // layer-0 rows only: one aggregation would inject graph structure
        let out = hrcf::EncoderOutput::from_tangent_sums(t.users.clone(), t.items.clone());
        sum += evaluate(&g, &out, &[10], None).unwrap().recall_at[&10];
    }
    let mut users = 0.0;
    for u in 0..g.num_users() {
        if g.test_items(u).is_empty() {
            continue;
        }
        let candidates = (g.num_items() - g.user_adj().degree(u)) as f64;
        expected += (10.0 / candidates).min(1.0);
        users += 1.0;
    }
    let mean = sum / reps as f64;
    expected /= users;
    assert!((mean - expected).abs() < 0.02, "mean {mean} expected {expected}");
}

#[test]
fn same_seed_same_run() {
    let g = small_graph(5);
    let mut c = quick_config();
    c.reproducible = true;
    let (a, ta) = train(&c, &g, None, None).unwrap();
    let (b, tb) = train(&c, &g, None, None).unwrap();
    assert_eq!(a.evals, b.evals);
    assert_eq!(a.losses, b.losses);
    assert_eq!(ta, tb);
}

#[test]
fn run_directory_contents() {
    let g = small_graph(6);
    let dir = tempfile::tempdir().unwrap();
    let (record, table) = train(&quick_config(), &g, Some(dir.path()), None).unwrap();
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(dir.path().join("metrics.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), record.evals.len());
    assert_eq!(lines.iter().map(|l| l["epoch"].as_u64().unwrap()).collect::<Vec<_>>(), vec![0, 3, 6]);
    for key in ["recall@10", "ndcg@20", "head_recall@10", "tail_ndcg@20", "total_loss", "wall_clock_s"] {
        assert!(lines[1].get(key).is_some(), "missing {key}");
    }
    let ckpt = hrcf::train::read_checkpoint(&dir.path().join("checkpoint.txt")).unwrap();
    assert_eq!(ckpt, table);
    assert!(dir.path().join("run.json").exists());
}

#[test]
fn lambda_sweep_runs_each_value() {
    let g = small_graph(7);
    let rows = ablate_lambda(&quick_config(), &g, &[0.0, 5.0], None).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(ablate_lambda(&quick_config(), &g, &[-1.0], None).is_err());
}

fn hrcf_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hrcf"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let status = |cmd: &mut Command| cmd.output().unwrap().status.code().unwrap();

    let synth = "users=60,items=40,exponent=2.5,mean_degree=6,seed=1";
    assert_eq!(status(hrcf_bin().args(["train", "--synth", synth, "--dim", "1"])), 1);
    assert_eq!(status(hrcf_bin().args(["train", "--data", "/nonexistent/file.tsv"])), 2);

    let bad = dir.path().join("bad.tsv");
    std::fs::write(&bad, "u1\ti1\t5\nu2\ti2\n").unwrap();
    assert_eq!(status(hrcf_bin().args(["train", "--data", bad.to_str().unwrap()])), 2);

    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "dim = 4\nlayers = 2\neval_every = 2\nepochs = 2\n").unwrap();
    let out = dir.path().join("run");
    let o = hrcf_bin()
        .args(["train", "--synth", synth, "--config", cfg.to_str().unwrap(), "--epochs", "4"])
        .args(["--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().last().unwrap().starts_with("epoch=4 R@10="), "{stdout}");

    let ckpt = out.join("checkpoint.txt");
    let o = hrcf_bin()
        .args(["eval", "--synth", synth, "--config", cfg.to_str().unwrap()])
        .args(["--checkpoint", ckpt.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let data = dir.path().join("synth.tsv");
    let export = dir.path().join("graph.txt");
    assert_eq!(
        status(hrcf_bin().args(["synth", "--spec", synth, "--out", data.to_str().unwrap(), "--export", export.to_str().unwrap()])),
        0
    );
    let header = std::fs::read_to_string(&export).unwrap();
    assert_eq!(header.lines().next().unwrap().split_whitespace().count(), 4);
}
