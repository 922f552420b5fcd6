//! Nodes, directed capacitated links and gateway roles.
//!
//! Native text format, one statement per line:
//!
//! ```text
//! # comment
//! node <name> [dc=false]
//! link <a> <b> [capacity_gbps]   # undirected: expands to a->b and b->a
//! arc  <a> <b> [capacity_gbps]   # a single directed link
//! ```
//!
//! Node ids follow declaration order. The undirected link declared `k`-th
//! among `link`/`arc` statements produces two consecutive directed link ids.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown node id {0}")]
    UnknownNodeId(usize),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("duplicate link {0} -> {1}")]
    DuplicateLink(String, String),
    #[error("link {0} -> {1} has non-positive capacity {2}")]
    BadCapacity(String, String, f64),
    #[error("graph is disconnected: `{0}` is unreachable from `{1}`")]
    Disconnected(String, String),
    #[error("topology has no nodes")]
    Empty,
    #[error("node `{0}` cannot be both s-ne and p-ne")]
    RoleConflict(String),
    #[error("p-ne assigned to `{0}`, which is not an s-ne")]
    NotSNe(String),
    #[error("s-ne `{0}` has no p-ne assignment")]
    MissingAnchor(String),
    #[error("expected {expected} capacities, got {got}")]
    CapacityCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Role {
    Plain,
    /// Source of a service chain anchored at `p_ne`.
    SNe { p_ne: usize },
    PNe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub name: String,
    pub role: Role,
    pub dc_allowed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: usize,
    pub src: usize,
    pub dst: usize,
    pub capacity_gbps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
    out_links: Vec<Vec<usize>>,
    by_name: HashMap<String, usize>,
    by_pair: HashMap<(usize, usize), usize>,
    /// Whether link `2k` and `2k+1` came from one undirected statement.
    paired: Vec<bool>,
}

/// Strictly increasing set of provisionable link bandwidths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityTypeSet(Vec<f64>);

impl CapacityTypeSet {
    pub fn new(bandwidths_gbps: Vec<f64>) -> Result<Self, String> {
        if bandwidths_gbps.is_empty() {
            return Err("capacity type set is empty".into());
        }
        for w in bandwidths_gbps.windows(2) {
            if !(w[0] < w[1]) {
                return Err(format!("capacity types must be strictly increasing ({} then {})", w[0], w[1]));
            }
        }
        if !(bandwidths_gbps[0] > 0.0) || bandwidths_gbps.iter().any(|b| !b.is_finite()) {
            return Err("capacity types must be positive and finite".into());
        }
        Ok(Self(bandwidths_gbps))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn smallest(&self) -> f64 {
        self.0[0]
    }

    pub fn largest(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

impl Default for CapacityTypeSet {
    fn default() -> Self {
        Self(vec![2.5, 10.0, 40.0, 100.0, 200.0])
    }
}

struct Builder {
    nodes: Vec<Node>,
    by_name: HashMap<String, usize>,
    arcs: Vec<(usize, usize, Option<f64>, bool)>,
}

impl Builder {
    fn new() -> Self {
        Self { nodes: Vec::new(), by_name: HashMap::new(), arcs: Vec::new() }
    }

    fn node(&mut self, name: &str, dc_allowed: bool) -> Result<(), TopologyError> {
        if self.by_name.contains_key(name) {
            return Err(TopologyError::DuplicateNode(name.to_string()));
        }
        let id = self.nodes.len();
        self.by_name.insert(name.to_string(), id);
        self.nodes.push(Node { id, name: name.to_string(), role: Role::Plain, dc_allowed });
        Ok(())
    }

    fn lookup(&self, name: &str) -> Result<usize, TopologyError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| TopologyError::UnknownNode(name.to_string()))
    }

    fn link(&mut self, a: &str, b: &str, cap: Option<f64>, undirected: bool) -> Result<(), TopologyError> {
        let (a, b) = (self.lookup(a)?, self.lookup(b)?);
        self.arcs.push((a, b, cap, undirected));
        Ok(())
    }

    fn finish(self) -> Result<Topology, TopologyError> {
        let mut links = Vec::new();
        let mut paired = Vec::new();
        for (a, b, cap, undirected) in self.arcs {
            links.push(Link { id: links.len(), src: a, dst: b, capacity_gbps: cap });
            paired.push(undirected);
            if undirected {
                links.push(Link { id: links.len(), src: b, dst: a, capacity_gbps: cap });
                paired.push(true);
            }
        }
        Topology::from_parts(self.nodes, links, paired)
    }
}

impl Topology {
    fn from_parts(nodes: Vec<Node>, links: Vec<Link>, paired: Vec<bool>) -> Result<Self, TopologyError> {
        if nodes.is_empty() {
            return Err(TopologyError::Empty);
        }
        let name = |i: usize| nodes[i].name.clone();
        let mut out_links = vec![Vec::new(); nodes.len()];
        let mut by_pair = HashMap::new();
        for l in &links {
            if l.src >= nodes.len() {
                return Err(TopologyError::UnknownNodeId(l.src));
            }
            if l.dst >= nodes.len() {
                return Err(TopologyError::UnknownNodeId(l.dst));
            }
            if l.src == l.dst {
                return Err(TopologyError::SelfLoop(name(l.src)));
            }
            if let Some(c) = l.capacity_gbps {
                if !(c > 0.0) || !c.is_finite() {
                    return Err(TopologyError::BadCapacity(name(l.src), name(l.dst), c));
                }
            }
            if by_pair.insert((l.src, l.dst), l.id).is_some() {
                return Err(TopologyError::DuplicateLink(name(l.src), name(l.dst)));
            }
            out_links[l.src].push(l.id);
        }
        let by_name = nodes.iter().map(|n| (n.name.clone(), n.id)).collect();
        let topo = Self { nodes, links, out_links, by_name, by_pair, paired };
        topo.check_connected()?;
        Ok(topo)
    }

    fn check_connected(&self) -> Result<(), TopologyError> {
        // weak connectivity: follow links in both directions
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for l in &self.links {
            adj[l.src].push(l.dst);
            adj[l.dst].push(l.src);
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(TopologyError::Disconnected(
                self.nodes[i].name.clone(),
                self.nodes[0].name.clone(),
            )),
            None => Ok(()),
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn link(&self, id: usize) -> &Link {
        &self.links[id]
    }

    pub fn out_links(&self, node: usize) -> &[usize] {
        &self.out_links[node]
    }

    pub fn node_id(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn link_between(&self, src: usize, dst: usize) -> Option<usize> {
        self.by_pair.get(&(src, dst)).copied()
    }

    /// S-NE node ids in id order.
    pub fn s_nes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| matches!(n.role, Role::SNe { .. }))
            .map(|n| n.id)
            .collect()
    }

    pub fn anchor(&self, s_ne: usize) -> Option<usize> {
        match self.nodes.get(s_ne)?.role {
            Role::SNe { p_ne } => Some(p_ne),
            _ => None,
        }
    }

    /// Capacities of all links, if every link has one.
    pub fn capacities(&self) -> Option<Vec<f64>> {
        self.links.iter().map(|l| l.capacity_gbps).collect()
    }

    pub fn with_capacities(&self, caps: &[f64]) -> Result<Topology, TopologyError> {
        if caps.len() != self.links.len() {
            return Err(TopologyError::CapacityCount { expected: self.links.len(), got: caps.len() });
        }
        let mut t = self.clone();
        for (l, &c) in t.links.iter_mut().zip(caps) {
            if !(c > 0.0) || !c.is_finite() {
                return Err(TopologyError::BadCapacity(
                    self.nodes[l.src].name.clone(),
                    self.nodes[l.dst].name.clone(),
                    c,
                ));
            }
            l.capacity_gbps = Some(c);
        }
        Ok(t)
    }

    /// Marks which nodes may host a data center.
    pub fn with_dc_allowed(&self, allowed: impl Fn(&Node) -> bool) -> Topology {
        let mut t = self.clone();
        for n in &mut t.nodes {
            n.dc_allowed = allowed(n);
        }
        t
    }

    /// Number of links leaving or entering `node`.
    pub fn incident_links(&self, node: usize) -> usize {
        self.links.iter().filter(|l| l.src == node || l.dst == node).count()
    }

    /// Renders the native text format; parsing the result yields an equal
    /// topology (gateway roles are not part of the format).
    pub fn to_native_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            if n.dc_allowed {
                let _ = writeln!(out, "node {}", n.name);
            } else {
                let _ = writeln!(out, "node {} dc=false", n.name);
            }
        }
        let cap = |c: Option<f64>| c.map(|c| format!(" {c}")).unwrap_or_default();
        let mut i = 0;
        while i < self.links.len() {
            let l = &self.links[i];
            let (a, b) = (&self.nodes[l.src].name, &self.nodes[l.dst].name);
            if self.paired[i] {
                let back = self.links[i + 1].capacity_gbps;
                if back == l.capacity_gbps {
                    let _ = writeln!(out, "link {a} {b}{}", cap(l.capacity_gbps));
                } else {
                    let _ = writeln!(out, "arc {a} {b}{}", cap(l.capacity_gbps));
                    let _ = writeln!(out, "arc {b} {a}{}", cap(back));
                }
                i += 2;
            } else {
                let _ = writeln!(out, "arc {a} {b}{}", cap(l.capacity_gbps));
                i += 1;
            }
        }
        out
    }
}

fn parse_capacity(tok: Option<&str>, line: usize) -> Result<Option<f64>, TopologyError> {
    match tok {
        None => Ok(None),
        Some(t) => t.parse::<f64>().map(Some).map_err(|_| TopologyError::Parse {
            line,
            msg: format!("bad capacity `{t}`"),
        }),
    }
}

/// Parses the native text format.
pub fn parse_topology(text: &str) -> Result<Topology, TopologyError> {
    let mut b = Builder::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        let err = |msg: &str| TopologyError::Parse { line, msg: msg.to_string() };
        match toks[0] {
            "node" => {
                let dc = match toks.len() {
                    2 => true,
                    3 => match toks[2] {
                        "dc=true" => true,
                        "dc=false" => false,
                        other => return Err(err(&format!("unknown node attribute `{other}`"))),
                    },
                    _ => return Err(err("expected `node <name> [dc=true|false]`")),
                };
                b.node(toks[1], dc)?;
            }
            kw @ ("link" | "arc") => {
                if !(3..=4).contains(&toks.len()) {
                    return Err(err(&format!("expected `{kw} <a> <b> [capacity_gbps]`")));
                }
                let cap = parse_capacity(toks.get(3).copied(), line)?;
                b.link(toks[1], toks[2], cap, kw == "link")?;
            }
            other => return Err(err(&format!("unknown statement `{other}`"))),
        }
    }
    b.finish()
}

/// Reads the node and link sections of an SNDlib native-format network.
/// Coordinates, demands and capacity modules are ignored.
pub fn parse_sndlib(text: &str) -> Result<Topology, TopologyError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Nodes,
        Links,
        Other,
    }
    let mut section = Section::None;
    let mut b = Builder::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if section != Section::Other && section != Section::None && content == ")" {
            section = Section::None;
            continue;
        }
        if section == Section::None {
            let head = content.split_whitespace().next().unwrap_or("");
            section = match head {
                "NODES" => Section::Nodes,
                "LINKS" => Section::Links,
                _ if content.ends_with('(') => Section::Other,
                _ => Section::None,
            };
            continue;
        }
        if section == Section::Other {
            if content == ")" {
                section = Section::None;
            }
            continue;
        }
        let toks: Vec<&str> = content
            .split(|c: char| c.is_whitespace() || c == '(' || c == ')')
            .filter(|t| !t.is_empty())
            .collect();
        let err = |msg: &str| TopologyError::Parse { line, msg: msg.to_string() };
        match section {
            Section::Nodes => {
                let name = toks.first().ok_or_else(|| err("empty node entry"))?;
                b.node(name, true)?;
            }
            Section::Links => {
                if toks.len() < 3 {
                    return Err(err("expected `<id> ( <src> <dst> ) ...`"));
                }
                b.link(toks[1], toks[2], None, true)?;
            }
            _ => unreachable!(),
        }
    }
    b.finish()
}

/// Assigns gateway roles. `p_ne_assignment` maps every S-NE to its anchor.
pub fn annotate_gateways(
    topo: &Topology,
    s_ne_ids: &[usize],
    p_ne_assignment: &BTreeMap<usize, usize>,
) -> Result<Topology, TopologyError> {
    let n = topo.num_nodes();
    let mut t = topo.clone();
    let s_set: HashSet<usize> = s_ne_ids.iter().copied().collect();
    for &s in s_ne_ids {
        if s >= n {
            return Err(TopologyError::UnknownNodeId(s));
        }
    }
    for (&s, &p) in p_ne_assignment {
        if s >= n {
            return Err(TopologyError::UnknownNodeId(s));
        }
        if p >= n {
            return Err(TopologyError::UnknownNodeId(p));
        }
        if !s_set.contains(&s) {
            return Err(TopologyError::NotSNe(topo.nodes[s].name.clone()));
        }
    }
    for &s in s_ne_ids {
        let p = *p_ne_assignment
            .get(&s)
            .ok_or_else(|| TopologyError::MissingAnchor(topo.nodes[s].name.clone()))?;
        if s_set.contains(&p) {
            return Err(TopologyError::RoleConflict(topo.nodes[p].name.clone()));
        }
        t.nodes[p].role = Role::PNe;
    }
    for &s in s_ne_ids {
        t.nodes[s].role = Role::SNe { p_ne: p_ne_assignment[&s] };
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_nodes_one_edge() {
        let t = parse_topology("node A\nnode B\nlink A B 10\n").unwrap();
        assert_eq!(t.num_nodes(), 2);
        assert_eq!(t.num_links(), 2);
        assert_eq!(t.link(1).src, 1);
        assert_eq!(t.link(1).capacity_gbps, Some(10.0));
    }

    #[test]
    fn undeclared_node_is_named() {
        let err = parse_topology("node A\nnode B\nlink A X\n").unwrap_err();
        assert_eq!(err, TopologyError::UnknownNode("X".into()));
        assert!(err.to_string().contains('X'));
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(parse_topology("node A\nnode A\n"), Err(TopologyError::DuplicateNode(_))));
        assert!(matches!(parse_topology("node A\nlink A A\n"), Err(TopologyError::SelfLoop(_))));
        assert!(matches!(
            parse_topology("node A\nnode B\nlink A B\narc A B\n"),
            Err(TopologyError::DuplicateLink(..))
        ));
        assert!(matches!(
            parse_topology("node A\nnode B\nnode C\nlink A B\n"),
            Err(TopologyError::Disconnected(ref n, _)) if n == "C"
        ));
        assert!(matches!(
            parse_topology("node A\nnode B\nlink A B 0\n"),
            Err(TopologyError::BadCapacity(..))
        ));
        assert!(matches!(
            parse_topology("node A\nnode B\nlink A B ten\n"),
            Err(TopologyError::Parse { line: 3, .. })
        ));
        assert_eq!(parse_topology("# nothing\n"), Err(TopologyError::Empty));
    }

    #[test]
    fn gateway_errors() {
        let t = parse_topology("node A\nnode B\nnode C\nlink A B\nlink B C\n").unwrap();
        let assign = BTreeMap::from([(0, 2)]);
        let g = annotate_gateways(&t, &[0], &assign).unwrap();
        assert_eq!(g.anchor(0), Some(2));
        assert_eq!(g.node(2).role, Role::PNe);
        assert_eq!(
            annotate_gateways(&t, &[99], &BTreeMap::new()),
            Err(TopologyError::UnknownNodeId(99))
        );
        assert!(matches!(
            annotate_gateways(&t, &[0, 2], &BTreeMap::from([(0, 2), (2, 1)])),
            Err(TopologyError::RoleConflict(_))
        ));
        assert!(matches!(
            annotate_gateways(&t, &[0], &BTreeMap::new()),
            Err(TopologyError::MissingAnchor(_))
        ));
        assert_eq!(annotate_gateways(&t, &[], &BTreeMap::new()).unwrap(), t);
    }
}
