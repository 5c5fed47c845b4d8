//! End-to-end harness integration: the experiment protocol against
//! independently composed module operations, artifact recomputability, and
//! the phase-attribution audit.

use std::collections::HashMap;
use std::fs::{self, File};
use std::path::Path;

use sqp_core::evalkit::{average_precision, make_folds, read_topic_metrics, summarize, Measure};
use sqp_core::gridpoints::{build_grid, run_threads};
use sqp_core::harness::{load_corpus, run_experiment, ExperimentConfig, Method, ReportTable};
use sqp_core::retrieval::{bm25_default, WeightedQuery};
use sqp_core::selector::select_c1;
use sqp_core::synth::{write_to_dir, SynthSpec};
use tempfile::TempDir;

fn micro_config(dir: &Path, docs: usize, topics: usize) -> ExperimentConfig {
    let spec = SynthSpec {
        docs,
        topics,
        ..Default::default()
    };
    let (d, t, q) = write_to_dir(&spec, &dir.join("data")).unwrap();
    let mut cfg = ExperimentConfig::for_corpus(vec![d], t, q);
    cfg.output.dir = dir.join("out");
    cfg.threads.weighting = vec!["BM25".into(), "PL2".into()];
    cfg.threads.expansion = vec!["Bo1".into()];
    cfg.threads.feedback_docs = vec![2];
    cfg.threads.expansion_terms = vec![5];
    cfg.experiment.depth = 100;
    cfg.experiment.trials = 1;
    cfg
}

#[test]
fn micro_experiment_report_cells_match_composed_modules() {
    let tmp = TempDir::new().unwrap();
    let cfg = micro_config(tmp.path(), 60, 4);
    let table = run_experiment(&cfg).unwrap();

    let (index, topics, qrels) = load_corpus(&cfg).unwrap();

    // BM25 row: mean AP over all topics, recomputed from the module ops
    let mut ap_sum = 0.0;
    for topic in &topics {
        let run = bm25_default(&index, &WeightedQuery::from_topic(topic), 100);
        ap_sum += average_precision(&run, &qrels);
    }
    let bm25_cell = table.row(Method::Bm25).unwrap().eff[0].unwrap();
    assert_eq!(bm25_cell.mean, ap_sum / topics.len() as f64);
    assert!(bm25_cell.std.is_none());

    // Best trained row: recompose grid -> folds -> per-fold select_c1 ->
    // evaluate the chosen thread on the test fold
    let threads = cfg.enumerate().unwrap();
    let runs = run_threads(&index, &topics, &threads, 100, 1).unwrap();
    let grid = build_grid(&runs, &qrels, Measure::Ap).unwrap();
    let ids: Vec<String> = topics.iter().map(|t| t.topic_id.clone()).collect();
    let folds = make_folds(&ids, 1, cfg.experiment.seed).unwrap();

    let mut fold_means = Vec::new();
    for test_side in 0..2 {
        let test = folds.folds(0)[test_side];
        let train = folds.folds(0)[1 - test_side];
        let c_best = select_c1(&grid.subgrid(train).unwrap()).unwrap();
        let ti = grid.thread_index(&c_best).unwrap();
        let mean = test
            .iter()
            .map(|q| grid.value(ti, grid.topic_index(q).unwrap()))
            .sum::<f64>()
            / test.len() as f64;
        fold_means.push(mean);
    }
    let expected = summarize(&fold_means, 2).unwrap();
    let best_cell = table.row(Method::BestTrained).unwrap().eff[0].unwrap();
    assert_eq!(best_cell.mean, expected.mean);
    assert_eq!(best_cell.std, Some(expected.std));
}

#[test]
fn empty_mode_list_yields_baselines_only_report() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = micro_config(tmp.path(), 50, 4);
    cfg.experiment.modes = vec![];
    let table = run_experiment(&cfg).unwrap();
    let methods: Vec<String> = table.rows.iter().map(|r| r.method.id().to_string()).collect();
    assert_eq!(methods, ["BM25", "L2R-D", "Best trained", "CombSum"]);
}

#[test]
fn report_cells_recomputable_from_per_topic_files() {
    let tmp = TempDir::new().unwrap();
    let cfg = micro_config(tmp.path(), 60, 4);
    let table = run_experiment(&cfg).unwrap();
    let out = &cfg.output.dir;

    for row in &table.rows {
        if row.method == Method::Bm25 {
            let rows = read_topic_metrics(
                File::open(out.join("pertopic/BM25_all.tsv")).unwrap(),
                "BM25_all",
            )
            .unwrap();
            for (mi, m) in Measure::ALL.iter().enumerate() {
                let vals: Vec<f64> = rows
                    .iter()
                    .filter(|(_, rm, _)| rm == m)
                    .map(|(_, _, v)| *v)
                    .collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                assert_eq!(row.eff[mi].unwrap().mean, mean, "BM25 {m}");
            }
            continue;
        }
        // other methods: 2 measurements (1 trial x 2 folds)
        let mut fold_means: HashMap<Measure, Vec<f64>> = HashMap::new();
        for fold in ["A", "B"] {
            let path = out
                .join("pertopic")
                .join(format!("{}_t0_{fold}.tsv", row.method.file_stem()));
            let rows = read_topic_metrics(File::open(&path).unwrap(), "pertopic").unwrap();
            for m in Measure::ALL {
                let vals: Vec<f64> = rows
                    .iter()
                    .filter(|(_, rm, _)| *rm == m)
                    .map(|(_, _, v)| *v)
                    .collect();
                fold_means
                    .entry(m)
                    .or_default()
                    .push(vals.iter().sum::<f64>() / vals.len() as f64);
            }
        }
        for (mi, m) in Measure::ALL.iter().enumerate() {
            let stat = summarize(&fold_means[m], 2).unwrap();
            let cell = row.eff[mi].unwrap();
            assert_eq!(cell.mean, stat.mean, "{} {m}", row.method);
            assert_eq!(cell.std, Some(stat.std), "{} {m}", row.method);
        }
    }
}

#[test]
fn rt_audit_contains_only_the_selective_steps() {
    let tmp = TempDir::new().unwrap();
    let cfg = micro_config(tmp.path(), 50, 4);
    run_experiment(&cfg).unwrap();
    let audit = fs::read_to_string(cfg.output.dir.join("audit.tsv")).unwrap();
    let mut selective_rt = 0usize;
    for line in audit.lines().filter(|l| !l.starts_with('#')) {
        let f: Vec<&str> = line.split('\t').collect();
        let (method, phase, label) = (f[0], f[1], f[2]);
        if phase == "RT" && (method.ends_with("SQE") || method.ends_with("SQP")) {
            assert!(
                matches!(label, "features" | "route" | "retrieval"),
                "unexpected RT label {label:?} for {method}"
            );
            selective_rt += 1;
        }
    }
    // 3 modes x 1 trial x 2 folds x 2 test topics x 3 steps
    assert_eq!(selective_rt, 3 * 2 * 2 * 3);
}

#[test]
fn same_seed_reproduces_effectiveness_cells_bit_exactly() {
    let tmp = TempDir::new().unwrap();
    let cfg1 = micro_config(&tmp.path().join("first"), 60, 4);
    let cfg2 = {
        let mut c = micro_config(&tmp.path().join("second"), 60, 4);
        c.experiment.parallelism = 4; // parallel grid must not change results
        c
    };
    let t1 = run_experiment(&cfg1).unwrap();
    let t2 = run_experiment(&cfg2).unwrap();
    assert_eq!(t1.rows.len(), t2.rows.len());
    for (a, b) in t1.rows.iter().zip(&t2.rows) {
        assert_eq!(a.method, b.method);
        assert_eq!(a.eff, b.eff, "{}", a.method);
        assert_eq!(a.sig_vs_l2r, b.sig_vs_l2r);
        assert_eq!(a.sig_vs_best, b.sig_vs_best);
    }
}

#[test]
fn routed_effectiveness_is_a_pick_of_the_candidate_rows() {
    use sqp_core::gridpoints::GridOfPoints;
    use sqp_core::selector::read_manifest;

    let tmp = TempDir::new().unwrap();
    let cfg = micro_config(tmp.path(), 60, 4);
    run_experiment(&cfg).unwrap();
    let out = &cfg.output.dir;
    let grid = GridOfPoints::read_tsv(File::open(out.join("grid.tsv")).unwrap(), "grid").unwrap();

    for mode in ["ERisk-SQE", "ERisk-SQP", "Best-SQE"] {
        for fold in ["A", "B"] {
            let stem = format!("{mode}_t0_{fold}");
            let (pair, _) = read_manifest(
                File::open(out.join("candidates").join(format!("{stem}.txt"))).unwrap(),
                "manifest",
            )
            .unwrap();
            let i1 = grid.thread_index(&pair.c1).unwrap();
            let i2 = grid.thread_index(&pair.c2).unwrap();
            let rows = read_topic_metrics(
                File::open(out.join("pertopic").join(format!("{stem}.tsv"))).unwrap(),
                "pertopic",
            )
            .unwrap();
            for (topic, measure, value) in rows {
                if measure != grid.measure() {
                    continue;
                }
                let qi = grid.topic_index(&topic).unwrap();
                let (e1, e2) = (grid.value(i1, qi), grid.value(i2, qi));
                assert!(
                    value == e1 || value == e2,
                    "{mode} {fold} {topic}: {value} is neither {e1} nor {e2}"
                );
            }
        }
    }
}

#[test]
fn report_tsv_artifact_round_trips() {
    let tmp = TempDir::new().unwrap();
    let cfg = micro_config(tmp.path(), 50, 4);
    let table = run_experiment(&cfg).unwrap();
    let text = fs::read_to_string(cfg.output.dir.join("report.tsv")).unwrap();
    let parsed = ReportTable::parse_tsv(&text, "report.tsv").unwrap();
    assert_eq!(table, parsed);
}

#[test]
fn config_file_round_trip_drives_experiment() {
    let tmp = TempDir::new().unwrap();
    let spec = SynthSpec {
        docs: 40,
        topics: 4,
        ..Default::default()
    };
    let (d, t, q) = write_to_dir(&spec, &tmp.path().join("data")).unwrap();
    let toml = format!(
        r#"
[corpus]
documents = ["{}"]
topics = "{}"
qrels = "{}"

[threads]
weighting = ["BM25"]
expansion = ["Bo1"]
feedback_docs = [2]
expansion_terms = [3]

[experiment]
trials = 1
depth = 50
modes = ["ERisk-SQP"]

[output]
dir = "{}"
"#,
        d.display(),
        t.display(),
        q.display(),
        tmp.path().join("out").display()
    );
    let path = tmp.path().join("sqp.toml");
    fs::write(&path, toml).unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    let table = run_experiment(&cfg).unwrap();
    assert_eq!(table.rows.len(), 5);
}
