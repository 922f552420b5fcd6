//! Candidate paths: k shortest loopless paths for background demands and
//! greedy link-disjoint sets for service chains.
//!
//! Paths are ordered by hop count, ties broken by the lexicographic order of
//! their node id sequences.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::Topology;
use crate::traffic::TrafficSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("no path from `{0}` to `{1}`")]
    Unreachable(String, String),
    #[error("source and destination are both `{0}`")]
    SameEndpoints(String),
    #[error("k must be >= 1")]
    ZeroK,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    pub node_seq: Vec<usize>,
    pub link_seq: Vec<usize>,
}

impl Path {
    fn from_nodes(topo: &Topology, node_seq: Vec<usize>) -> Self {
        let link_seq = node_seq
            .windows(2)
            .map(|w| topo.link_between(w[0], w[1]).expect("consecutive nodes are linked"))
            .collect();
        Self { node_seq, link_seq }
    }

    pub fn hops(&self) -> usize {
        self.link_seq.len()
    }

    pub fn src(&self) -> usize {
        self.node_seq[0]
    }

    pub fn dst(&self) -> usize {
        *self.node_seq.last().unwrap()
    }

    pub fn contains_node(&self, n: usize) -> bool {
        self.node_seq.contains(&n)
    }

    pub fn uses_link(&self, l: usize) -> bool {
        self.link_seq.contains(&l)
    }

    /// Position of `n` along the path.
    pub fn position(&self, n: usize) -> Option<usize> {
        self.node_seq.iter().position(|&m| m == n)
    }

    fn key(&self) -> (usize, Vec<usize>) {
        (self.hops(), self.node_seq.clone())
    }
}

/// Shortest path avoiding the banned links and nodes; among all shortest
/// paths, the one with the lexicographically smallest node sequence.
fn shortest_path(
    topo: &Topology,
    src: usize,
    dst: usize,
    banned_links: &[bool],
    banned_nodes: &[bool],
) -> Option<Vec<usize>> {
    if banned_nodes[src] || banned_nodes[dst] {
        return None;
    }
    // hop distance to dst over the allowed subgraph (reverse BFS)
    let n = topo.num_nodes();
    let mut into: Vec<Vec<usize>> = vec![Vec::new(); n];
    for l in topo.links() {
        if !banned_links[l.id] && !banned_nodes[l.src] && !banned_nodes[l.dst] {
            into[l.dst].push(l.src);
        }
    }
    let mut dist = vec![usize::MAX; n];
    dist[dst] = 0;
    let mut queue = VecDeque::from([dst]);
    while let Some(u) = queue.pop_front() {
        for &v in &into[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    if dist[src] == usize::MAX {
        return None;
    }
    let mut seq = vec![src];
    let mut u = src;
    while u != dst {
        u = topo
            .out_links(u)
            .iter()
            .map(|&l| topo.link(l))
            .filter(|l| !banned_links[l.id] && !banned_nodes[l.dst] && dist[l.dst] == dist[u] - 1)
            .map(|l| l.dst)
            .min()
            .expect("distance labels are consistent");
        seq.push(u);
    }
    Some(seq)
}

fn check_endpoints(topo: &Topology, src: usize, dst: usize, k: usize) -> Result<(), PathError> {
    if k == 0 {
        return Err(PathError::ZeroK);
    }
    if src == dst {
        return Err(PathError::SameEndpoints(topo.node(src).name.clone()));
    }
    Ok(())
}

/// Up to `k` loopless paths from `src` to `dst` (Yen's algorithm).
pub fn k_shortest(topo: &Topology, src: usize, dst: usize, k: usize) -> Result<Vec<Path>, PathError> {
    check_endpoints(topo, src, dst, k)?;
    let n = topo.num_nodes();
    let no_links = vec![false; topo.num_links()];
    let no_nodes = vec![false; n];
    let first = shortest_path(topo, src, dst, &no_links, &no_nodes).ok_or_else(|| {
        PathError::Unreachable(topo.node(src).name.clone(), topo.node(dst).name.clone())
    })?;
    let mut accepted: Vec<Path> = vec![Path::from_nodes(topo, first)];
    let mut candidates: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    while accepted.len() < k {
        let last = accepted.last().unwrap().node_seq.clone();
        for i in 0..last.len() - 1 {
            let root = &last[..=i];
            let mut banned_links = no_links.clone();
            for p in &accepted {
                if p.node_seq.len() > i + 1 && p.node_seq[..=i] == *root {
                    banned_links[p.link_seq[i]] = true;
                }
            }
            let mut banned_nodes = no_nodes.clone();
            for &r in &root[..i] {
                banned_nodes[r] = true;
            }
            if let Some(spur) = shortest_path(topo, root[i], dst, &banned_links, &banned_nodes) {
                let mut seq = root[..i].to_vec();
                seq.extend(spur);
                candidates.insert((seq.len() - 1, seq));
            }
        }
        let known: BTreeSet<_> = accepted.iter().map(Path::key).collect();
        candidates.retain(|c| !known.contains(c));
        match candidates.pop_first() {
            Some((_, seq)) => accepted.push(Path::from_nodes(topo, seq)),
            None => break,
        }
    }
    Ok(accepted)
}

/// Greedy pairwise link-disjoint paths: the shortest path, then the
/// shortest path avoiding every link already selected, and so on, up to
/// `max_paths`. Returns an empty list when `dst` is unreachable.
pub fn link_disjoint_set(topo: &Topology, src: usize, dst: usize, max_paths: usize) -> Result<Vec<Path>, PathError> {
    check_endpoints(topo, src, dst, max_paths)?;
    let mut banned = vec![false; topo.num_links()];
    let no_nodes = vec![false; topo.num_nodes()];
    let mut out = Vec::new();
    while out.len() < max_paths {
        let Some(seq) = shortest_path(topo, src, dst, &banned, &no_nodes) else { break };
        let p = Path::from_nodes(topo, seq);
        for &l in &p.link_seq {
            banned[l] = true;
        }
        out.push(p);
    }
    Ok(out)
}

/// Candidate paths for every demand (background and chain) and for every
/// service chain. Chain demands carry `k_background` point-to-point paths
/// too; those are only used when dimensioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub per_demand: BTreeMap<usize, Vec<Path>>,
    pub per_chain: BTreeMap<usize, Vec<Path>>,
}

impl PathSet {
    /// One line per path: `demand|chain <owner> <index>: <node names>`.
    pub fn dump(&self, topo: &Topology) -> String {
        let mut out = String::new();
        let names = |p: &Path| {
            p.node_seq.iter().map(|&n| topo.node(n).name.as_str()).collect::<Vec<_>>().join(" ")
        };
        for (owner, paths) in &self.per_demand {
            for (i, p) in paths.iter().enumerate() {
                let _ = writeln!(out, "demand {owner} {i}: {}", names(p));
            }
        }
        for (owner, paths) in &self.per_chain {
            for (i, p) in paths.iter().enumerate() {
                let _ = writeln!(out, "chain {owner} {i}: {}", names(p));
            }
        }
        out
    }
}

pub fn build_pathsets(
    topo: &Topology,
    traffic: &TrafficSpec,
    k_background: usize,
    r_max: usize,
) -> Result<PathSet, PathError> {
    if k_background == 0 {
        return Err(PathError::ZeroK);
    }
    let mut cache: HashMap<(usize, usize), Vec<Path>> = HashMap::new();
    let mut per_demand = BTreeMap::new();
    for d in traffic.all_demands() {
        let paths = match cache.get(&(d.src, d.dst)) {
            Some(p) => p.clone(),
            None => {
                let p = k_shortest(topo, d.src, d.dst, k_background)?;
                cache.insert((d.src, d.dst), p.clone());
                p
            }
        };
        per_demand.insert(d.id, paths);
    }
    let mut per_chain = BTreeMap::new();
    for c in &traffic.chains {
        let paths = link_disjoint_set(topo, c.s_ne, c.p_ne, r_max + 1)?;
        if paths.is_empty() {
            return Err(PathError::Unreachable(
                topo.node(c.s_ne).name.clone(),
                topo.node(c.p_ne).name.clone(),
            ));
        }
        per_chain.insert(c.id, paths);
    }
    Ok(PathSet { per_demand, per_chain })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::parse_topology;

    fn names(topo: &Topology, p: &Path) -> String {
        p.node_seq.iter().map(|&n| topo.node(n).name.as_str()).collect()
    }

    #[test]
    fn triangle() {
        let t = parse_topology("node A\nnode B\nnode C\nlink A B\nlink B C\nlink A C\n").unwrap();
        let ks = k_shortest(&t, 0, 1, 2).unwrap();
        assert_eq!(ks.iter().map(|p| names(&t, p)).collect::<Vec<_>>(), vec!["AB", "ACB"]);
        let ds = link_disjoint_set(&t, 0, 1, 2).unwrap();
        assert_eq!(ds.len(), 2);
    }

    #[test]
    fn line_graph_has_one_path() {
        let t = parse_topology("node A\nnode B\nnode C\nlink A B\nlink B C\n").unwrap();
        assert_eq!(k_shortest(&t, 0, 2, 3).unwrap().len(), 1);
        assert_eq!(link_disjoint_set(&t, 0, 2, 3).unwrap().len(), 1);
    }

    #[test]
    fn diamond_disjoint() {
        let t = parse_topology("node A\nnode B\nnode C\nnode D\nlink A B\nlink B D\nlink A C\nlink C D\n").unwrap();
        let ds = link_disjoint_set(&t, 0, 3, 2).unwrap();
        assert_eq!(ds.iter().map(|p| names(&t, p)).collect::<Vec<_>>(), vec!["ABD", "ACD"]);
    }

    #[test]
    fn errors() {
        let t = parse_topology("node A\nnode B\narc A B\n").unwrap();
        assert!(matches!(k_shortest(&t, 1, 0, 1), Err(PathError::Unreachable(..))));
        assert_eq!(k_shortest(&t, 0, 0, 1), Err(PathError::SameEndpoints("A".into())));
        assert_eq!(k_shortest(&t, 0, 1, 0), Err(PathError::ZeroK));
        assert!(link_disjoint_set(&t, 1, 0, 2).unwrap().is_empty());
    }
}
