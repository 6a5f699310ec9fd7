//! Static SVG rendering of networks, partitions, occurrence heatmaps, and
//! error maps.

use std::path::Path;

use crate::deployment::Network;
use crate::error::{Error, Result};
use crate::geometry::Obstacle;
use crate::localization::LocalizationResult;
use crate::partitioning::PartitionMap;
use crate::pathgraph::OccurrenceTable;

/// What the node layer encodes.
pub enum RenderLayer<'a> {
    /// One fill color per area label.
    Partition(&'a PartitionMap),
    /// Node color scaled by TS from min to max.
    Occurrence(&'a OccurrenceTable),
    /// A segment from each estimate to its true position.
    Errors(&'a LocalizationResult),
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn ramp(t: f64) -> String {
    // Blue to red.
    let lo = (0x21, 0x66, 0xac);
    let hi = (0xb2, 0x18, 0x2b);
    let mix = |a: i32, b: i32| -> i32 { (a as f64 + t.clamp(0.0, 1.0) * (b - a) as f64) as i32 };
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(lo.0, hi.0),
        mix(lo.1, hi.1),
        mix(lo.2, hi.2)
    )
}

/// Produce a standalone SVG document for the requested layer.
pub fn render_svg(network: &Network, layer: &RenderLayer<'_>) -> String {
    let scenario = &network.scenario;
    let scale = 800.0 / scenario.width.max(scenario.height);
    let w = scenario.width * scale;
    let h = scenario.height * scale;
    let sx = |x: f64| x * scale;
    let sy = |y: f64| h - y * scale;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"#ffffff\" stroke=\"#333\"/>\n"
    ));
    for ob in &scenario.obstacles {
        match ob {
            Obstacle::Polygon { vertices } => {
                let pts: Vec<String> = vertices
                    .iter()
                    .map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.y)))
                    .collect();
                svg.push_str(&format!(
                    "<polygon points=\"{}\" fill=\"#9a9a9a\" stroke=\"#555\"/>\n",
                    pts.join(" ")
                ));
            }
            Obstacle::Circle { center, radius } => {
                svg.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"#9a9a9a\" stroke=\"#555\"/>\n",
                    sx(center.x),
                    sy(center.y),
                    radius * scale
                ));
            }
        }
    }

    if let RenderLayer::Errors(result) = layer {
        for node in &network.nodes {
            if let Some(est) = result.global_estimate[node.id] {
                svg.push_str(&format!(
                    "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#d62728\" stroke-width=\"1\"/>\n",
                    sx(est.x),
                    sy(est.y),
                    sx(node.position.x),
                    sy(node.position.y)
                ));
            }
        }
    }

    let (ts_min, ts_max) = match layer {
        RenderLayer::Occurrence(ts) => {
            let lo = ts.ts.iter().copied().min().unwrap_or(0) as f64;
            let hi = ts.ts.iter().copied().max().unwrap_or(1) as f64;
            (lo, if hi > lo { hi } else { lo + 1.0 })
        }
        _ => (0.0, 1.0),
    };

    for node in &network.nodes {
        let color = match layer {
            RenderLayer::Partition(pm) => {
                PALETTE[(pm.label[node.id] - 1) % PALETTE.len()].to_string()
            }
            RenderLayer::Occurrence(ts) => {
                ramp((ts.ts[node.id] as f64 - ts_min) / (ts_max - ts_min))
            }
            RenderLayer::Errors(result) => match result.global_estimate[node.id] {
                Some(_) => "#2ca02c".to_string(),
                None => "#d62728".to_string(),
            },
        };
        let r = if node.is_anchor { 5.0 } else { 3.0 };
        let stroke = if node.is_anchor { "#000" } else { "none" };
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.1}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            sx(node.position.x),
            sy(node.position.y),
            r,
            color,
            stroke
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Render a layer and write it to `path`.
pub fn write_svg(network: &Network, layer: &RenderLayer<'_>, path: &Path) -> Result<()> {
    let svg = render_svg(network, layer);
    std::fs::write(path, svg).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_trial_artifacts, ExperimentConfig};

    #[test]
    fn all_layers_produce_wellformed_svg() {
        let mut config =
            ExperimentConfig::new(crate::geometry::build_scenario("rectangular").unwrap(), 130, 10);
        config.trials = 1;
        let art = run_trial_artifacts(&config, 0).unwrap();
        let ts = art.ts.as_ref().unwrap();
        for layer in [
            RenderLayer::Partition(&art.partition),
            RenderLayer::Occurrence(ts),
            RenderLayer::Errors(&art.localization),
        ] {
            let svg = render_svg(&art.network, &layer);
            assert!(svg.starts_with("<svg"));
            assert!(svg.ends_with("</svg>\n"));
            assert!(svg.matches("<circle").count() >= art.network.len());
        }
    }
}
