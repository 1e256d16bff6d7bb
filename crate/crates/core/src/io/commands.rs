use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{default_output, EdgeSpec, RunConfig, ViewSpec};
use super::load::load_multiview;
use super::table::{read_labels, write_labels, write_table, Table};
use super::traces::{
    create, read_json, read_trace_dir, write_diagnostics, write_json, write_label_trace, ChainFiles, RunManifest,
    Timings, TraceBundle, ViewSummary, MANIFEST_FILE, PAIR_FITS_FILE, TIMINGS_FILE,
};
use crate::error::{Error, Result};
use crate::eval::{
    best_permutation_accuracy, cluster_count_summary, confusion_table, consensus_labels, display_order,
    rand_index, relabel, similarity_matrix, similarity_pgm, ClusterCountSummary, ConfusionTable, SimilarityMatrix,
};
use crate::gibbs::{run_chains, Problem};
use crate::prior::PairFitSummary;
use crate::synth::{generate, scenario_battery, ScenarioConfig};

pub const REPORT_FILE: &str = "report.json";
pub const CONSENSUS_FILE: &str = "consensus_labels.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const SCENARIO_FILE: &str = "scenario.json";

fn write_with(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    body(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Generates a synthetic scenario into `out` (or the default output for
/// `config_path`): one CSV per view, `truth.csv`, the scenario config and
/// one fit config per declared-direction case. Returns the output directory.
pub fn cmd_simulate(config_path: &Path, out: Option<&Path>) -> Result<PathBuf> {
    let text = fs::read_to_string(config_path).map_err(|e| Error::io(config_path, e))?;
    let config: ScenarioConfig = serde_json::from_str(&text)?;
    let scenario = generate(&config)?;
    let cases = scenario_battery(&config)?;
    let out = out.map_or_else(|| default_output(config_path), Path::to_path_buf);
    create_dir(&out)?;

    let ids = &scenario.dataset.object_ids;
    for view in &scenario.dataset.views {
        let table = Table {
            object_ids: ids.clone(),
            feature_names: view.feature_names.clone(),
            data: view.data.clone(),
        };
        write_with(&out.join(format!("{}.csv", view.name)), |w| write_table(w, "id", &table))?;
    }
    let truth: Vec<u32> = scenario.truth.iter().map(|l| l + 1).collect();
    write_with(&out.join(TRUTH_FILE), |w| write_labels(w, ids, &truth))?;
    write_json(&out.join(SCENARIO_FILE), &config)?;

    for case in &cases {
        let final_view = case.config.final_view()?;
        let names: Vec<&str> = case.config.views.iter().map(|v| v.name.as_str()).collect();
        let run = RunConfig {
            views: names
                .iter()
                .enumerate()
                .map(|(m, name)| ViewSpec {
                    name: (*name).to_owned(),
                    path: PathBuf::from(format!("{name}.csv")),
                    is_final: m == final_view,
                    alpha: None,
                })
                .collect(),
            edges: case
                .config
                .declared_edges()?
                .into_iter()
                .map(|(s, t)| EdgeSpec {
                    source: names[s].to_owned(),
                    target: names[t].to_owned(),
                })
                .collect(),
            sampler: Default::default(),
            model: Default::default(),
            output: Some(PathBuf::from(format!("fit_case_{}", case.name))),
        };
        run.validate()?;
        write_json(&out.join(format!("case_{}.json", case.name)), &run)?;
    }
    Ok(out)
}

fn partial_dir(out: &Path) -> PathBuf {
    let name = out.file_name().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!(".{name}.partial"))
}

/// Runs the sampler for the config at `config_path` and writes traces,
/// pair-fit summaries and the manifest. Output is assembled in a sibling
/// directory and moved into place only after it reads back cleanly.
pub fn cmd_fit(config_path: &Path) -> Result<PathBuf> {
    let config = RunConfig::load(config_path)?;
    let out = config.output_dir(config_path);
    if out.exists() && !out.join(MANIFEST_FILE).exists() {
        let empty = fs::read_dir(&out).map_err(|e| Error::io(&out, e))?.next().is_none();
        if !empty {
            return Err(Error::InvalidConfig(format!(
                "{} exists and is not a previous fit output",
                out.display()
            )));
        }
    }
    let dataset = load_multiview(&config)?;
    config.sampler.validate(dataset.objects())?;

    let start = Instant::now();
    let alpha: Vec<Option<f64>> = config.views.iter().map(|v| v.alpha).collect();
    let problem = Problem::new(
        dataset.matrices(),
        dataset.names(),
        config.graph()?,
        config.final_view(),
        &config.model,
        &alpha,
    )?;
    let pair_fits_seconds = start.elapsed().as_secs_f64();
    let chains = run_chains(&config.sampler, &problem)?;
    let chain_seconds = start.elapsed().as_secs_f64() - pair_fits_seconds;

    let tmp = partial_dir(&out);
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    }
    let written = (|| {
        create_dir(&tmp)?;
        let mut files = Vec::with_capacity(chains.len());
        for (c, trace) in chains.iter().enumerate() {
            let f = ChainFiles {
                seed: trace.seed,
                labels: format!("labels_chain{c}.csv.gz"),
                diagnostics: format!("diagnostics_chain{c}.csv.gz"),
                retained: trace.retained(),
            };
            write_label_trace(&tmp.join(&f.labels), trace, &dataset.object_ids)?;
            write_diagnostics(&tmp.join(&f.diagnostics), trace)?;
            files.push(f);
        }
        let summaries: Vec<PairFitSummary> = problem
            .fits
            .iter()
            .map(|f| f.clone().with_mode(config.sampler.prior_mode).summary())
            .collect();
        write_json(&tmp.join(PAIR_FITS_FILE), &summaries)?;
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config: config.clone(),
            object_ids: dataset.object_ids.clone(),
            views: dataset
                .views
                .iter()
                .map(|v| ViewSummary {
                    name: v.name.clone(),
                    features: v.data.cols(),
                })
                .collect(),
            edges: config.edges.clone(),
            final_view: config.views[config.final_view()].name.clone(),
            k: chains[0].k,
            chains: files,
        };
        write_json(&tmp.join(MANIFEST_FILE), &manifest)?;
        let bundle = read_trace_dir(&tmp)?;
        if bundle.chains.iter().zip(&chains).any(|(a, b)| a.draws != b.draws) {
            return Err(Error::InvalidConfig("trace files do not read back to the sampled draws".into()));
        }
        write_json(
            &tmp.join(TIMINGS_FILE),
            &Timings {
                pair_fits_seconds,
                chain_seconds,
                total_seconds: start.elapsed().as_secs_f64(),
            },
        )?;
        if out.exists() {
            fs::remove_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        }
        fs::rename(&tmp, &out).map_err(|e| Error::io(&out, e))
    })();
    if written.is_err() {
        let _ = fs::remove_dir_all(&tmp);
    }
    written.map(|_| out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewEvaluation {
    pub name: String,
    pub cluster_counts: ClusterCountSummary,
    pub consensus_clusters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEvaluation {
    pub source: String,
    pub target: String,
    /// Posterior mean of the edge strength over post-burn-in sweeps.
    pub rho_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthComparison {
    pub accuracy: f64,
    pub rand_index: f64,
    pub confusion: ConfusionTable,
}

/// Summary of a fit directory, written as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objects: usize,
    pub chains: usize,
    pub draws: usize,
    pub final_view: String,
    pub views: Vec<ViewEvaluation>,
    pub edges: Vec<EdgeEvaluation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthComparison>,
}

struct Evaluated {
    report: Evaluation,
    similarity: Vec<SimilarityMatrix>,
    consensus: Vec<Vec<u32>>,
}

fn evaluate_bundle(bundle: &TraceBundle, truth: Option<&[u32]>) -> Result<Evaluated> {
    let m = bundle.manifest.views.len();
    let pooled = |v: usize| bundle.chains.iter().flat_map(move |c| c.view_draws(v));
    let mut views = Vec::with_capacity(m);
    let mut similarity = Vec::with_capacity(m);
    let mut consensus = Vec::with_capacity(m);
    for (v, summary) in bundle.manifest.views.iter().enumerate() {
        let sim = similarity_matrix(pooled(v))?;
        let labels = relabel(&consensus_labels(pooled(v), &sim)?);
        views.push(ViewEvaluation {
            name: summary.name.clone(),
            cluster_counts: cluster_count_summary(pooled(v))?,
            consensus_clusters: labels.iter().max().map_or(0, |l| *l as usize + 1),
        });
        similarity.push(sim);
        consensus.push(labels);
    }
    let burn_in = bundle.manifest.config.sampler.burn_in;
    let edges = bundle
        .manifest
        .edges
        .iter()
        .enumerate()
        .map(|(e, spec)| {
            let values: Vec<f64> = bundle
                .chains
                .iter()
                .flat_map(|c| c.rho.iter().skip(burn_in).map(move |r| r[e]))
                .collect();
            EdgeEvaluation {
                source: spec.source.clone(),
                target: spec.target.clone(),
                rho_mean: values.iter().sum::<f64>() / values.len().max(1) as f64,
            }
        })
        .collect();
    let final_index = bundle.chains[0].final_view;
    let truth = truth
        .map(|t| -> Result<TruthComparison> {
            let est = &consensus[final_index];
            Ok(TruthComparison {
                accuracy: best_permutation_accuracy(est, t)?,
                rand_index: rand_index(est, t)?,
                confusion: confusion_table(est, t)?,
            })
        })
        .transpose()?;
    Ok(Evaluated {
        report: Evaluation {
            objects: bundle.manifest.object_ids.len(),
            chains: bundle.chains.len(),
            draws: bundle.chains.iter().map(|c| c.retained()).sum(),
            final_view: bundle.manifest.final_view.clone(),
            views,
            edges,
            truth,
        },
        similarity,
        consensus,
    })
}

/// Reads `id,label` truth and orders it like `object_ids`.
fn aligned_truth(path: &Path, object_ids: &[String]) -> Result<Vec<u32>> {
    let (ids, labels) = read_labels(path)?;
    let mut by_id: std::collections::HashMap<&str, u32> =
        ids.iter().map(String::as_str).zip(labels.iter().copied()).collect();
    let mut out = Vec::with_capacity(object_ids.len());
    let mut missing = Vec::new();
    for id in object_ids {
        match by_id.remove(id.as_str()) {
            Some(l) => out.push(l),
            None => missing.push(id.clone()),
        }
    }
    missing.extend(by_id.into_keys().map(str::to_owned));
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::IdentifierMismatch(missing));
    }
    Ok(out)
}

fn write_similarity_csv(path: &Path, sim: &SimilarityMatrix, ids: &[String]) -> Result<()> {
    write_with(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_owned()];
        header.extend(ids.iter().cloned());
        csv.write_record(&header)?;
        for (i, id) in ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend(sim.row(i).iter().map(|s| format!("{s:.6}")));
            csv.write_record(&row)?;
        }
        csv.flush().map_err(|e| Error::io(path, e))
    })
}

/// Pools the retained draws of every chain in `trace_dir` and writes
/// similarity matrices (CSV and PGM, rows ordered by consensus), consensus
/// labels and `report.json` into `out` (default `<trace_dir>/evaluation`).
pub fn cmd_evaluate(trace_dir: &Path, truth: Option<&Path>, out: Option<&Path>) -> Result<Evaluation> {
    let bundle = read_trace_dir(trace_dir)?;
    let ids = &bundle.manifest.object_ids;
    let truth = truth.map(|p| aligned_truth(p, ids)).transpose()?;
    let evaluated = evaluate_bundle(&bundle, truth.as_deref())?;
    let out = out.map_or_else(|| trace_dir.join("evaluation"), Path::to_path_buf);
    create_dir(&out)?;
    for (v, view) in bundle.manifest.views.iter().enumerate() {
        let sim = &evaluated.similarity[v];
        write_similarity_csv(&out.join(format!("similarity_{}.csv", view.name)), sim, ids)?;
        let pgm = similarity_pgm(sim, &display_order(&evaluated.consensus[v]));
        let path = out.join(format!("similarity_{}.pgm", view.name));
        fs::write(&path, pgm).map_err(|e| Error::io(&path, e))?;
    }
    let final_index = bundle.chains[0].final_view;
    let labels: Vec<u32> = evaluated.consensus[final_index].iter().map(|l| l + 1).collect();
    write_with(&out.join(CONSENSUS_FILE), |w| write_labels(w, ids, &labels))?;
    write_json(&out.join(REPORT_FILE), &evaluated.report)?;
    Ok(evaluated.report)
}

/// Plain-text summary of a fit directory.
pub fn cmd_report(trace_dir: &Path) -> Result<String> {
    let bundle = read_trace_dir(trace_dir)?;
    let fits: Vec<PairFitSummary> = read_json(&trace_dir.join(PAIR_FITS_FILE))?;
    let report = evaluate_bundle(&bundle, None)?.report;
    let manifest = &bundle.manifest;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} objects, {} views, K = {}, {} chain(s), {} retained draws",
        report.objects,
        manifest.views.len(),
        manifest.k,
        report.chains,
        report.draws
    );
    let _ = writeln!(s, "final view: {}", report.final_view);
    for v in &report.views {
        let _ = writeln!(
            s,
            "view {}: consensus {} clusters, posterior mode {} (mean {:.2})",
            v.name, v.consensus_clusters, v.cluster_counts.mode, v.cluster_counts.mean
        );
    }
    for (e, f) in report.edges.iter().zip(&fits) {
        let _ = writeln!(
            s,
            "edge {} -> {}: {:?} prior, rate {:.4}, posterior mean {:.4} ({} objects, {} excluded)",
            e.source, e.target, f.prior_mode, f.prior_rate, e.rho_mean, f.objects, f.excluded
        );
    }
    for c in &bundle.chains {
        if let Some(last) = c.log_joint.last() {
            let _ = writeln!(s, "chain seed {}: final log joint {last:.3}", c.seed);
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scenario(dir: &Path) -> PathBuf {
        let config = ScenarioConfig {
            n: 40,
            seed: 5,
            ..Default::default()
        };
        let path = dir.join("scen.json");
        fs::write(&path, serde_json::to_string(&config).unwrap()).unwrap();
        path
    }

    fn shorten(path: &Path, sweeps: usize, chains: usize) {
        let mut c: RunConfig = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        c.sampler.sweeps = sweeps;
        c.sampler.burn_in = sweeps / 2;
        c.sampler.chains = chains;
        fs::write(path, c.to_json().unwrap()).unwrap();
    }

    #[test]
    fn simulate_fit_evaluate_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_simulate(&small_scenario(dir.path()), Some(&dir.path().join("sim"))).unwrap();
        for f in ["U.csv", "V.csv", TRUTH_FILE, SCENARIO_FILE, "case_i.json", "case_ii.json", "case_iii.json"] {
            assert!(out.join(f).exists(), "{f}");
        }
        let case = out.join("case_i.json");
        shorten(&case, 20, 2);
        let fit = cmd_fit(&case).unwrap();
        assert_eq!(fit, out.join("fit_case_i"));
        assert!(!partial_dir(&fit).exists());
        let bundle = read_trace_dir(&fit).unwrap();
        assert_eq!(bundle.chains.len(), 2);
        assert_ne!(bundle.chains[0].seed, bundle.chains[1].seed);
        assert_eq!(bundle.chains[0].retained(), 10);
        assert_eq!(bundle.chains[0].log_joint.len(), 20);

        let report = cmd_evaluate(&fit, Some(&out.join(TRUTH_FILE)), None).unwrap();
        assert_eq!(report.draws, 20);
        let truth = report.truth.unwrap();
        assert!((0.5..=1.0).contains(&truth.accuracy));
        let eval_dir = fit.join("evaluation");
        for f in ["similarity_U.csv", "similarity_V.pgm", CONSENSUS_FILE, REPORT_FILE] {
            assert!(eval_dir.join(f).exists(), "{f}");
        }
        let text = cmd_report(&fit).unwrap();
        assert!(text.contains("edge V -> U"));
    }

    #[test]
    fn fit_refuses_foreign_directory() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_simulate(&small_scenario(dir.path()), Some(&dir.path().join("sim"))).unwrap();
        let case = out.join("case_ii.json");
        shorten(&case, 4, 1);
        let target = out.join("fit_case_ii");
        fs::create_dir_all(&target).unwrap();
        fs::write(target.join("keep.txt"), "x").unwrap();
        assert!(matches!(cmd_fit(&case), Err(Error::InvalidConfig(_))));
        assert!(target.join("keep.txt").exists());
    }

    #[test]
    fn truth_with_other_ids_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        fs::write(&path, "id,label\na,1\nc,2\n").unwrap();
        match aligned_truth(&path, &["a".into(), "b".into()]) {
            Err(Error::IdentifierMismatch(ids)) => assert_eq!(ids, vec!["b".to_owned(), "c".to_owned()]),
            other => panic!("{other:?}"),
        }
    }
}
