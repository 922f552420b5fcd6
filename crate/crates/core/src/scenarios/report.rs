use std::io;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::pipeline::{chain_demand_hops, DimResult, Prepared, RaResult, StageStats, TeResult, Timing};
use crate::formulations::ra_link_loads;

pub const HIST_WIDTH: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub id: usize,
    pub src: String,
    pub dst: String,
    pub capacity_gbps: f64,
    pub util_te: f64,
    pub util_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub r_max: usize,
    pub w_max: Option<usize>,
    pub max_dc: Option<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub num_nodes: usize,
    pub num_links: usize,
    pub num_background_demands: usize,
    pub num_chains: usize,
    pub links: Vec<LinkReport>,
    pub avg_util_te: f64,
    pub max_util_te: f64,
    pub avg_util: f64,
    pub max_util: f64,
    /// Bins of TE+RA link utilization, width 0.1 over `[0, max]`.
    pub histogram: Vec<HistBin>,
    pub used_dcs: usize,
    pub dc_nodes: Vec<String>,
    pub total_vnfs: usize,
    pub max_vnfs_per_dc: usize,
    /// Placed instances over used DCs.
    pub avg_vnfs_per_dc: f64,
    /// Active chain-path hops averaged over chain demands.
    pub avg_path_hops: f64,
    pub ra_objective: f64,
    pub provisioned_gbps: f64,
    pub stages: Vec<StageStats>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Bins of width [`HIST_WIDTH`] covering `[0, max(values)]`; the top value
/// falls in the last bin.
pub fn histogram(values: &[f64]) -> Vec<HistBin> {
    let top = max(values);
    let bins = ((top / HIST_WIDTH - 1e-9).ceil() as usize).max(1);
    let mut counts = vec![0usize; bins];
    for &u in values {
        let i = ((u / HIST_WIDTH + 1e-9).floor().max(0.0) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistBin { lower: i as f64 * HIST_WIDTH, upper: (i + 1) as f64 * HIST_WIDTH, count })
        .collect()
}

pub fn build_report(
    cfg: &ScenarioConfig,
    prep: &Prepared,
    dim: &DimResult,
    te: &TeResult,
    ra: &RaResult,
) -> ScenarioReport {
    let topo = &prep.topology;
    let caps = &dim.capacities;
    let ra_load = ra_link_loads(&ra.input, &ra.placement);
    let total: Vec<f64> = (0..caps.len()).map(|l| te.util[l] + ra_load[l] / caps[l]).collect();
    let links = topo
        .links()
        .iter()
        .map(|l| LinkReport {
            id: l.id,
            src: topo.node(l.src).name.clone(),
            dst: topo.node(l.dst).name.clone(),
            capacity_gbps: caps[l.id],
            util_te: te.util[l.id],
            util_total: total[l.id],
        })
        .collect();
    let per_node = ra.placement.vnfs_per_node(topo.num_nodes());
    let used = ra.placement.used_nodes.len();
    let total_vnfs: usize = per_node.iter().sum();
    let hops = chain_demand_hops(ra);
    let mut stages = vec![dim.stats.clone(), te.stats.clone()];
    stages.extend(ra.stats.iter().cloned());
    ScenarioReport {
        scenario: cfg.ra.scenario.to_string(),
        r_max: prep.r_max,
        w_max: ra.input.w_max,
        max_dc: ra.input.max_dc,
        alpha: ra.input.alpha,
        beta: ra.input.beta,
        num_nodes: topo.num_nodes(),
        num_links: topo.num_links(),
        num_background_demands: prep.traffic.background.len(),
        num_chains: prep.traffic.chains.len(),
        links,
        avg_util_te: mean(&te.util),
        max_util_te: max(&te.util),
        avg_util: mean(&total),
        max_util: max(&total),
        histogram: histogram(&total),
        used_dcs: used,
        dc_nodes: ra.placement.used_nodes.iter().map(|&n| topo.node(n).name.clone()).collect(),
        total_vnfs,
        max_vnfs_per_dc: per_node.iter().copied().max().unwrap_or(0),
        avg_vnfs_per_dc: if used == 0 { 0.0 } else { total_vnfs as f64 / used as f64 },
        avg_path_hops: mean(&hops.iter().map(|&h| h as f64).collect::<Vec<_>>()),
        ra_objective: ra.objective,
        provisioned_gbps: caps.iter().sum(),
        stages,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainPlacementDoc {
    pub chain: usize,
    pub s_ne: String,
    pub p_ne: String,
    pub active_paths: Vec<Vec<String>>,
    /// Index into `active_paths` for each chain demand.
    pub demand_paths: Vec<usize>,
    /// Host node names per VNF, in chain order.
    pub vnfs: Vec<VnfHostsDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnfHostsDoc {
    pub label: String,
    pub replicable: bool,
    pub hosts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementDoc {
    pub chains: Vec<ChainPlacementDoc>,
    pub dc_nodes: Vec<String>,
}

pub fn placement_doc(prep: &Prepared, ra: &RaResult) -> PlacementDoc {
    let topo = &prep.topology;
    let name = |n: usize| topo.node(n).name.clone();
    let chains = prep
        .traffic
        .chains
        .iter()
        .zip(&ra.input.chains)
        .zip(&ra.placement.chains)
        .map(|((sc, ch), cp)| ChainPlacementDoc {
            chain: sc.id,
            s_ne: name(sc.s_ne),
            p_ne: name(sc.p_ne),
            active_paths: cp
                .active_paths
                .iter()
                .map(|&p| ch.paths[p].node_seq.iter().map(|&n| name(n)).collect())
                .collect(),
            demand_paths: cp
                .demand_paths
                .iter()
                .map(|p| cp.active_paths.iter().position(|a| a == p).unwrap_or(usize::MAX))
                .collect(),
            vnfs: ch
                .vnfs
                .iter()
                .zip(&cp.hosts)
                .map(|(v, h)| VnfHostsDoc {
                    label: v.label.clone(),
                    replicable: v.replicable,
                    hosts: h.iter().map(|&n| name(n)).collect(),
                })
                .collect(),
        })
        .collect();
    PlacementDoc { chains, dc_nodes: ra.placement.used_nodes.iter().map(|&n| name(n)).collect() }
}

pub fn report_json(report: &ScenarioReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn histogram_csv(report: &ScenarioReport) -> io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bin_lower", "bin_upper", "count"])?;
    for b in &report.histogram {
        w.write_record([format!("{:.1}", b.lower), format!("{:.1}", b.upper), b.count.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Writes `report.json`, `utilization_hist.csv`, `placement.json` and
/// `timings.json` into `dir`.
pub fn emit_report(
    dir: &FsPath,
    report: &ScenarioReport,
    placement: &PlacementDoc,
    timings: &[Timing],
) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report_json(report))?;
    std::fs::write(dir.join("utilization_hist.csv"), histogram_csv(report)?)?;
    let mut pl = serde_json::to_string_pretty(placement).map_err(io::Error::other)?;
    pl.push('\n');
    std::fs::write(dir.join("placement.json"), pl)?;
    let mut t = serde_json::to_string_pretty(timings).map_err(io::Error::other)?;
    t.push('\n');
    std::fs::write(dir.join("timings.json"), t)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_edges() {
        let h = histogram(&[0.0, 0.05, 0.1, 0.35, 0.4]);
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 1, 0, 2]);
        assert_eq!(histogram(&[]).len(), 1);
        assert_eq!(histogram(&[0.0, 0.0])[0].count, 2);
        let h = histogram(&[1.0, 0.95]);
        assert_eq!(h.len(), 10);
        assert_eq!(h[9].count, 2);
    }
}
