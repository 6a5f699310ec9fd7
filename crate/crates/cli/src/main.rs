use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use topoloc_core::geometry::CANONICAL_SCENARIOS;
use topoloc_core::{
    build_scenario, ideal_partition_stats, run_batch, run_trial_artifacts, CornerCount,
    ExperimentConfig, RangingModel, RenderLayer, Scenario,
};

#[derive(Parser)]
#[command(
    name = "topoloc",
    about = "Topology-partitioning localization simulator for indoor WSNs with obstacles",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded batch of deploy/partition/localize trials.
    Simulate {
        /// Canonical scenario name or path to a scenario JSON file.
        #[arg(long)]
        scenario: String,
        /// Number of unknown nodes.
        #[arg(long)]
        unknown: usize,
        /// Number of anchor nodes.
        #[arg(long)]
        anchors: usize,
        /// Radio transmission range in meters.
        #[arg(long, default_value_t = 15.0)]
        range: f64,
        /// Independent trials to run.
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Base seed; per-trial seeds are split from it.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Skip partitioning (single-area localization).
        #[arg(long)]
        no_partition: bool,
        /// Ranging model: "exact" or "gauss:SIGMA".
        #[arg(long, default_value = "exact")]
        ranging: String,
        /// Comma-separated SVG layers from trial 0: partition,occurrence,errors.
        #[arg(long)]
        svg: Option<String>,
        /// Output directory for report.csv / report.json / SVGs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print analytic partition expectations for a scenario.
    Ideal {
        /// Canonical scenario name or path to a scenario JSON file.
        #[arg(long)]
        scenario: String,
        /// Radio transmission range in meters.
        #[arg(long, default_value_t = 15.0)]
        range: f64,
    },
    /// Sweep circular-obstacle diameters against node counts.
    CircleSweep {
        /// Run the full 500 trials per cell instead of 50.
        #[arg(long)]
        deep: bool,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory for sweep.csv.
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve_scenario(spec: &str) -> Result<Scenario> {
    let path = Path::new(spec);
    if path.exists() {
        return Scenario::from_file(path).with_context(|| format!("loading {spec}"));
    }
    build_scenario(spec).with_context(|| {
        format!(
            "unknown scenario '{spec}'; canonical names: {}",
            CANONICAL_SCENARIOS.join(", ")
        )
    })
}

/// One cell of the circular-obstacle sweep: mean count of blocked one-hop
/// pairs and their mean share of all one-hop pairs.
fn circle_cell(
    diameter: f64,
    unknown: usize,
    anchors: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    use rayon::prelude::*;
    let scenario = Scenario::circle_with_diameter(diameter)?;
    let mut config = ExperimentConfig::new(scenario, unknown, anchors);
    config.trials = trials;
    config.base_seed = seed;
    let per_trial: Vec<(usize, usize)> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<(usize, usize)> {
            let art = run_trial_artifacts(&config, i)?;
            let pairs = topoloc_core::metrics::one_hop_pair_count(&art.network);
            Ok((art.metrics.spo_before, pairs))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mean_cross =
        per_trial.iter().map(|t| t.0 as f64).sum::<f64>() / trials as f64;
    let ratio_pct = 100.0
        * per_trial
            .iter()
            .map(|t| t.0 as f64 / t.1 as f64)
            .sum::<f64>()
        / trials as f64;
    Ok((mean_cross, ratio_pct))
}

fn parse_ranging(spec: &str) -> Result<RangingModel> {
    if spec == "exact" {
        return Ok(RangingModel::Exact);
    }
    if let Some(sigma) = spec.strip_prefix("gauss:") {
        let sigma: f64 = sigma.parse().context("sigma must be a number")?;
        if sigma < 0.0 {
            bail!("sigma must be >= 0");
        }
        return Ok(RangingModel::Gaussian { sigma });
    }
    bail!("ranging must be 'exact' or 'gauss:SIGMA', got '{spec}'")
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate {
            scenario,
            unknown,
            anchors,
            range,
            trials,
            seed,
            no_partition,
            ranging,
            svg,
            out,
        } => {
            let scenario = resolve_scenario(&scenario)?;
            let mut config = ExperimentConfig::new(scenario, unknown, anchors);
            config.l = range;
            config.trials = trials;
            config.base_seed = seed;
            config.no_partition = no_partition;
            config.ranging = parse_ranging(&ranging)?;
            config.out_dir = Some(out.display().to_string());

            let report = run_batch(&config)?;
            report.write(&out)?;
            let a = &report.aggregates;
            println!("scenario      : {}", config.scenario.name);
            println!("trials        : {}", report.rows.len());
            println!("mean pairs    : {:.3}", a.mean_n_pairs);
            println!("mean z        : {:.3}", a.mean_z);
            println!("mean SPO      : {:.3} -> {:.3}", a.mean_spo_before, a.mean_spo_after);
            println!("ACD           : {:.4}", a.acd);
            println!("mean MLE (m)  : {:.6}", a.mean_mle_m);
            println!("mean inaccur. : {:.3}", a.mean_inaccurate);
            println!("reports       : {}", out.display());

            if let Some(layers) = svg {
                let art = run_trial_artifacts(&config, 0)?;
                for layer in layers.split(',') {
                    let (name, layer) = match layer.trim() {
                        "partition" => (
                            "trial0_partition.svg",
                            RenderLayer::Partition(&art.partition),
                        ),
                        "occurrence" => match art.ts.as_ref() {
                            Some(ts) => ("trial0_occurrence.svg", RenderLayer::Occurrence(ts)),
                            None => {
                                eprintln!("occurrence layer unavailable with --no-partition");
                                continue;
                            }
                        },
                        "errors" => ("trial0_errors.svg", RenderLayer::Errors(&art.localization)),
                        other => bail!("unknown svg layer '{other}'"),
                    };
                    let path = out.join(name);
                    topoloc_core::write_svg(&art.network, &layer, &path)?;
                    println!("svg           : {}", path.display());
                }
            }
        }
        Command::Ideal { scenario, range } => {
            let scenario = resolve_scenario(&scenario)?;
            let stats = ideal_partition_stats(&scenario, range);
            let corners = match stats.convex_corners {
                CornerCount::Finite(c) => c.to_string(),
                CornerCount::Infinite => "infinite".into(),
            };
            let fmt = |v: &[usize]| {
                v.iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            println!("scenario          : {}", scenario.name);
            println!("convex corners    : {corners}");
            println!("ideal seg nodes   : {:.3}", stats.ideal_seg_nodes);
            println!("ideal pairs       : {}", fmt(&stats.ideal_pairs));
            println!("ideal sub-networks: {}", fmt(&stats.ideal_subnets));
        }
        Command::CircleSweep { deep, seed, out } => {
            let trials = if deep { 500 } else { 50 };
            let diameters = [15.0, 30.0, 45.0, 60.0, 75.0, 90.0];
            let totals = [160usize, 215, 270, 325];
            std::fs::create_dir_all(&out)?;
            let mut csv =
                String::from("diameter_m,total_nodes,trials,mean_traversing_pairs,traversal_ratio_pct\n");
            for d in diameters {
                for total in totals {
                    let anchors = total / 13; // same anchor share as the standard grid
                    let (mean_cross, ratio_pct) =
                        circle_cell(d, total - anchors, anchors, trials, seed)?;
                    println!(
                        "d={d:>4} n={total:>3}: mean traversing pairs {mean_cross:.3}, ratio {ratio_pct:.4}%"
                    );
                    csv.push_str(&format!("{d},{total},{trials},{mean_cross},{ratio_pct}\n"));
                }
            }
            let path = out.join("sweep.csv");
            std::fs::write(&path, csv)?;
            println!("sweep written to {}", path.display());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranging_specs_parse() {
        assert_eq!(parse_ranging("exact").unwrap(), RangingModel::Exact);
        assert_eq!(
            parse_ranging("gauss:0.5").unwrap(),
            RangingModel::Gaussian { sigma: 0.5 }
        );
        assert!(parse_ranging("fuzzy").is_err());
        assert!(parse_ranging("gauss:-1").is_err());
    }

    #[test]
    fn canonical_names_resolve() {
        for id in CANONICAL_SCENARIOS {
            assert!(resolve_scenario(id).is_ok());
        }
        assert!(resolve_scenario("no-such-shape").is_err());
    }
}
