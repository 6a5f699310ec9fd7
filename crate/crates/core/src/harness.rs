//! Seeded batch execution and report emission.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deployment::{deploy_with, splitmix64, Network, RangingModel};
use crate::error::{Error, Result};
use crate::geometry::Scenario;
use crate::localization::{localize_network, LocalizationResult};
use crate::metrics::{acd_term, mle, spo_count, TrialMetrics};
use crate::partitioning::{partition, partition_in_order, PartitionMap, SplitOutcome};
use crate::pathgraph::{hop_matrix, occurrence_counts, OccurrenceTable};
use crate::segmentation::{candidate_pairs, form_pairs, kmeans_two, select_segmentation_nodes, SegPair};

/// Report format tag written into every JSON report.
pub const REPORT_FORMAT_VERSION: &str = "topoloc-report-v1";

/// One batch configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n_unknown: usize,
    pub n_anchor: usize,
    /// Radio range in meters.
    pub l: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub ranging: RangingModel,
    /// Skip partitioning and localize the whole network as one area.
    pub no_partition: bool,
    /// Destination directory echoed into reports; writing is separate.
    pub out_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, n_unknown: usize, n_anchor: usize) -> Self {
        ExperimentConfig {
            scenario,
            n_unknown,
            n_anchor,
            l: 15.0,
            trials: 50,
            base_seed: 42,
            ranging: RangingModel::Exact,
            no_partition: false,
            out_dir: None,
        }
    }
}

/// Per-trial seed: element `trial_index` of the splitmix64 stream seeded
/// by `base_seed`, so any single trial can be re-run in isolation.
pub fn split_seed(base_seed: u64, trial_index: usize) -> u64 {
    splitmix64(base_seed.wrapping_add((trial_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Everything produced by one trial, for rendering and inspection.
#[derive(Debug, Clone)]
pub struct TrialArtifacts {
    pub network: Network,
    pub ts: Option<OccurrenceTable>,
    pub pairs: Vec<SegPair>,
    pub partition: PartitionMap,
    pub localization: LocalizationResult,
    pub metrics: TrialMetrics,
}

/// Run one fully deterministic trial of the pipeline.
pub fn run_trial(config: &ExperimentConfig, trial_index: usize) -> Result<TrialMetrics> {
    run_trial_artifacts(config, trial_index).map(|a| a.metrics)
}

/// [`run_trial`] keeping the intermediate artifacts.
pub fn run_trial_artifacts(
    config: &ExperimentConfig,
    trial_index: usize,
) -> Result<TrialArtifacts> {
    let started = Instant::now();
    let seed = split_seed(config.base_seed, trial_index);
    let network = deploy_with(
        &config.scenario,
        config.n_unknown,
        config.n_anchor,
        config.l,
        seed,
        config.ranging,
    )?;
    let mut flags: Vec<String> = Vec::new();

    let hops = hop_matrix(&network)?;
    let spo_before = spo_count(&network, None);

    let (ts, pairs, pm) = if config.no_partition {
        (None, Vec::new(), partition_in_order(&network, &[]))
    } else {
        let ts = occurrence_counts(&hops);
        match kmeans_two(&ts) {
            Ok(clustering) => {
                let seg = select_segmentation_nodes(&clustering);
                let candidates = candidate_pairs(&seg, &network);
                let pairs = form_pairs(&seg, &network);
                let cancelled = candidates.len() - pairs.len();
                if cancelled > 0 {
                    flags.push(format!("pairs_cancelled={cancelled}"));
                }
                let pm = partition(&network, &pairs, &ts);
                (Some(ts), pairs, pm)
            }
            Err(Error::DegenerateOccurrences) => {
                flags.push("degenerate_ts".into());
                (Some(ts), Vec::new(), partition_in_order(&network, &[]))
            }
            Err(e) => return Err(e),
        }
    };

    let guarded = pm
        .history
        .iter()
        .filter(|h| matches!(h.outcome, SplitOutcome::SkippedBoundaryGuard { .. }))
        .count();
    if guarded > 0 {
        flags.push(format!("guarded_splits={guarded}"));
    }
    let aborted = pm
        .history
        .iter()
        .filter(|h| matches!(h.outcome, SplitOutcome::AbortedEmptySide))
        .count();
    if aborted > 0 {
        flags.push(format!("degenerate_splits={aborted}"));
    }
    for lbl in &pm.disconnected_labels {
        flags.push(format!("disconnected_area={lbl}"));
    }
    let spo_after = spo_count(&network, Some(&pm));

    let localization = localize_network(&network, &pm);
    for s in &localization.subnets {
        if let Some(f) = &s.failure {
            flags.push(format!("area{}:{}", s.label, compact(f)));
        } else if s.recovered {
            flags.push(format!("area{}:recovered", s.label));
        } else if s.anchor_deficient {
            flags.push(format!("area{}:anchor_deficient", s.label));
        }
    }
    let (mle_m, inaccurate) = mle(&localization, &network);

    let metrics = TrialMetrics {
        trial: trial_index,
        seed,
        n_nodes: network.len(),
        n_pairs: pairs.len(),
        z: pm.z,
        spo_before,
        spo_after,
        acd_term: acd_term(spo_before, spo_after),
        mle_m,
        inaccurate,
        flags,
        runtime_ms: started.elapsed().as_millis() as u64,
    };
    Ok(TrialArtifacts {
        network,
        ts,
        pairs,
        partition: pm,
        localization,
        metrics,
    })
}

fn compact(msg: &str) -> String {
    if msg.contains("no reference triple") {
        "no_reference_triple".into()
    } else if msg.contains("uncalibratable") {
        "uncalibratable".into()
    } else {
        msg.split(':').next().unwrap_or(msg).replace(' ', "_")
    }
}

/// Aggregate means over a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub mean_n_pairs: f64,
    pub mean_z: f64,
    pub mean_spo_before: f64,
    pub mean_spo_after: f64,
    pub acd: f64,
    pub mean_mle_m: f64,
    pub mean_inaccurate: f64,
}

/// Aggregates recomputed from trial rows in trial order.
pub fn aggregates_from_rows(rows: &[TrialMetrics]) -> Aggregates {
    let t = rows.len() as f64;
    Aggregates {
        mean_n_pairs: rows.iter().map(|r| r.n_pairs as f64).sum::<f64>() / t,
        mean_z: rows.iter().map(|r| r.z as f64).sum::<f64>() / t,
        mean_spo_before: rows.iter().map(|r| r.spo_before as f64).sum::<f64>() / t,
        mean_spo_after: rows.iter().map(|r| r.spo_after as f64).sum::<f64>() / t,
        acd: crate::metrics::acd(rows),
        mean_mle_m: rows.iter().map(|r| r.mle_m).sum::<f64>() / t,
        mean_inaccurate: rows.iter().map(|r| r.inaccurate as f64).sum::<f64>() / t,
    }
}

/// A finished batch: per-trial rows plus aggregates and the config echo.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchReport {
    pub format_version: String,
    pub config: ExperimentConfig,
    pub rows: Vec<TrialMetrics>,
    pub aggregates: Aggregates,
}

/// Run all trials of a batch. Trials execute in parallel; rows are
/// assembled in trial order, so the report is independent of scheduling.
pub fn run_batch(config: &ExperimentConfig) -> Result<BatchReport> {
    assert!(config.trials >= 1, "need at least one trial");
    let rows: Vec<TrialMetrics> = (0..config.trials)
        .into_par_iter()
        .map(|i| run_trial(config, i))
        .collect::<Result<Vec<_>>>()?;
    let aggregates = aggregates_from_rows(&rows);
    Ok(BatchReport {
        format_version: REPORT_FORMAT_VERSION.into(),
        config: config.clone(),
        rows,
        aggregates,
    })
}

impl BatchReport {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(
            "trial,seed,n_nodes,n_pairs,z,spo_before,spo_after,acd_term,mle_m,inaccurate,flags,runtime_ms\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.trial,
                r.seed,
                r.n_nodes,
                r.n_pairs,
                r.z,
                r.spo_before,
                r.spo_after,
                r.acd_term,
                r.mle_m,
                r.inaccurate,
                r.flags.join(";"),
                r.runtime_ms,
            ));
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// Write `report.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        for (name, text) in [
            ("report.csv", self.to_csv_string()),
            ("report.json", self.to_json_string()),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        Ok(())
    }
}

/// Parse rows back out of a `report.csv` body.
pub fn parse_report_csv(text: &str) -> Result<Vec<TrialMetrics>> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(Error::Parse(format!("report line {}: want 12 fields", ln + 1)));
        }
        let bad = |what: &str| Error::Parse(format!("report line {}: bad {what}", ln + 1));
        rows.push(TrialMetrics {
            trial: f[0].parse().map_err(|_| bad("trial"))?,
            seed: f[1].parse().map_err(|_| bad("seed"))?,
            n_nodes: f[2].parse().map_err(|_| bad("n_nodes"))?,
            n_pairs: f[3].parse().map_err(|_| bad("n_pairs"))?,
            z: f[4].parse().map_err(|_| bad("z"))?,
            spo_before: f[5].parse().map_err(|_| bad("spo_before"))?,
            spo_after: f[6].parse().map_err(|_| bad("spo_after"))?,
            acd_term: f[7].parse().map_err(|_| bad("acd_term"))?,
            mle_m: f[8].parse().map_err(|_| bad("mle_m"))?,
            inaccurate: f[9].parse().map_err(|_| bad("inaccurate"))?,
            flags: if f[10].is_empty() {
                Vec::new()
            } else {
                f[10].split(';').map(String::from).collect()
            },
            runtime_ms: f[11].parse().map_err(|_| bad("runtime_ms"))?,
        });
    }
    Ok(rows)
}
