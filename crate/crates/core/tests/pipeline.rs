use std::collections::BTreeSet;

use dredge::graph::snapshot::read_snapshot;
use dredge::pipeline::{artifact_manifest, run_batch, run_pipeline, RunConfig, GRAPH_DIR, REPORT_FILE};
use dredge::synth::{write_planted, PlantedConfig};

fn config(dir: &std::path::Path, extra: &str) -> RunConfig {
    let planted = PlantedConfig {
        domains: 60,
        users: 20,
        unlabeled: 6,
        p_in: 0.25,
        p_out: 0.02,
        seed: 2,
        ..PlantedConfig::default()
    };
    let f = write_planted(dir, &planted).unwrap();
    let text = format!(
        "variant = \"E_domains+users\"\noutput_dir = \"out\"\nseed = 1\n{extra}\n[inputs]\n\
         backlinks = {:?}\nattributes = {:?}\nlabels = {:?}\nmentions = {:?}\n\
         [train]\nhidden = 8\nmax_epochs = 30\npatience = 5\n[embed.walk]\nwalks_per_node = 2\nwalk_length = 6\n[embed.skipgram]\nepochs = 1\n",
        f.backlinks.display().to_string(),
        f.attributes.display().to_string(),
        f.labels.display().to_string(),
        f.mentions.display().to_string(),
    );
    RunConfig::from_toml(&text, dir, &[]).unwrap()
}

#[test]
fn report_manifest_covers_every_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let report = run_pipeline(&cfg).unwrap();
    let on_disk: BTreeSet<String> = artifact_manifest(&cfg.output_dir).unwrap().into_keys().collect();
    let listed: BTreeSet<String> = report.artifacts.keys().cloned().collect();
    assert_eq!(on_disk, listed);
    assert!(!listed.contains(REPORT_FILE));
    assert!(report.metrics.is_some());

    let (graph, _) = read_snapshot(&cfg.output_dir.join(GRAPH_DIR)).unwrap();
    assert!(graph.labels().len() >= 50);
}

#[test]
fn batch_seeds_are_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "seeds = [4, 5]");
    let batch = run_batch(&cfg).unwrap();
    assert_eq!(batch.runs.len(), 2);

    std::fs::remove_dir_all(cfg.output_dir.join("seed-4")).unwrap();
    let alone = cfg.for_seed(5, dir.path().join("alone"));
    let report = run_pipeline(&alone).unwrap();
    assert_eq!(report.metrics_digest, batch.runs[1].metrics_digest);
}
