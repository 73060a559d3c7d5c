//! Acyclic fork-join network structure: nodes with service distributions,
//! arcs, compilation to a support matrix, and the longest-path length.
//!
//! Nodes are 0-indexed internally. The JSON interchange format uses
//! 1-indexed contiguous ids; the conversion happens only at the
//! (de)serialization boundary.

use maxplus::Support64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds;
use crate::service::{DistributionError, ServiceDistribution};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("node id {id} out of range 1..={n}")]
    NodeOutOfRange { id: usize, n: usize },
    #[error("node ids must be exactly 1..={n} with no gaps or repeats")]
    BadNodeIds { n: usize },
    #[error("self-loop on node {id}")]
    SelfLoop { id: usize },
    #[error("duplicate arc ({from}, {to})")]
    DuplicateArc { from: usize, to: usize },
    #[error("graph is cyclic; one cycle (1-indexed): {}", format_cycle(.cycle))]
    Cyclic { cycle: Vec<usize> },
    #[error("network must have at least one node")]
    Empty,
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

fn format_cycle(cycle: &[usize]) -> String {
    let mut ids: Vec<String> = cycle.iter().map(|i| (i + 1).to_string()).collect();
    if let Some(first) = ids.first().cloned() {
        ids.push(first);
    }
    ids.join(" -> ")
}

/// Validated network description: per-node service distributions plus an
/// arc list over a directed acyclic graph.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    services: Vec<ServiceDistribution>,
    arcs: Vec<(usize, usize)>,
}

impl NetworkSpec {
    /// Validates structure (index range, self-loops, duplicates,
    /// acyclicity) and distribution parameters. Arcs are 0-indexed.
    pub fn new(
        services: Vec<ServiceDistribution>,
        arcs: Vec<(usize, usize)>,
    ) -> Result<Self, NetworkError> {
        let n = services.len();
        if n == 0 {
            return Err(NetworkError::Empty);
        }
        for s in &services {
            s.validate()?;
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(i, j) in &arcs {
            if i >= n || j >= n {
                return Err(NetworkError::NodeOutOfRange {
                    id: i.max(j) + 1,
                    n,
                });
            }
            if i == j {
                return Err(NetworkError::SelfLoop { id: i + 1 });
            }
            if !seen.insert((i, j)) {
                return Err(NetworkError::DuplicateArc {
                    from: i + 1,
                    to: j + 1,
                });
            }
        }
        let spec = NetworkSpec { services, arcs };
        spec.topological_order()?;
        Ok(spec)
    }

    pub fn node_count(&self) -> usize {
        self.services.len()
    }

    pub fn services(&self) -> &[ServiceDistribution] {
        &self.services
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    /// Kahn's algorithm; on failure returns one cycle found by walking
    /// unresolved predecessors.
    fn topological_order(&self) -> Result<Vec<usize>, NetworkError> {
        let n = self.node_count();
        let mut in_degree = vec![0usize; n];
        let mut succ = vec![Vec::new(); n];
        for &(i, j) in &self.arcs {
            succ[i].push(j);
            in_degree[j] += 1;
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| in_degree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            order.push(u);
            for &v in &succ[u] {
                in_degree[v] -= 1;
                if in_degree[v] == 0 {
                    queue.push(v);
                }
            }
        }
        if order.len() == n {
            return Ok(order);
        }
        Err(NetworkError::Cyclic {
            cycle: self.find_cycle(&in_degree),
        })
    }

    /// Walks arcs among nodes with unresolved in-degree until a node
    /// repeats.
    fn find_cycle(&self, in_degree: &[usize]) -> Vec<usize> {
        let n = self.node_count();
        let mut succ = vec![Vec::new(); n];
        for &(i, j) in &self.arcs {
            if in_degree[i] > 0 && in_degree[j] > 0 {
                succ[i].push(j);
            }
        }
        let start = (0..n)
            .find(|&i| in_degree[i] > 0)
            .expect("a cycle exists");
        let mut path = vec![start];
        let mut position = std::collections::BTreeMap::new();
        position.insert(start, 0usize);
        let mut current = start;
        loop {
            let next = succ[current][0];
            if let Some(&at) = position.get(&next) {
                return path[at..].to_vec();
            }
            position.insert(next, path.len());
            path.push(next);
            current = next;
        }
    }

    /// Stable fingerprint of topology and service parameters, used to tie
    /// estimates and reports to the network they were computed for.
    pub fn fingerprint(&self) -> u64 {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&(self.node_count() as u64).to_le_bytes());
        for s in &self.services {
            match *s {
                ServiceDistribution::Deterministic { c } => {
                    bytes.push(0);
                    bytes.extend_from_slice(&c.to_bits().to_le_bytes());
                }
                ServiceDistribution::Exponential { mean } => {
                    bytes.push(1);
                    bytes.extend_from_slice(&mean.to_bits().to_le_bytes());
                }
                ServiceDistribution::Uniform { lo, hi } => {
                    bytes.push(2);
                    bytes.extend_from_slice(&lo.to_bits().to_le_bytes());
                    bytes.extend_from_slice(&hi.to_bits().to_le_bytes());
                }
                ServiceDistribution::Erlang { shape, mean } => {
                    bytes.push(3);
                    bytes.extend_from_slice(&(shape as u64).to_le_bytes());
                    bytes.extend_from_slice(&mean.to_bits().to_le_bytes());
                }
            }
        }
        let mut arcs = self.arcs.clone();
        arcs.sort_unstable();
        for (i, j) in arcs {
            bytes.extend_from_slice(&(i as u32).to_le_bytes());
            bytes.extend_from_slice(&(j as u32).to_le_bytes());
        }
        seeds::fnv1a64(bytes)
    }

    pub fn to_json_string(&self) -> String {
        let file = SpecFile {
            nodes: self
                .services
                .iter()
                .enumerate()
                .map(|(i, s)| NodeEntry {
                    id: i + 1,
                    service: *s,
                })
                .collect(),
            arcs: self.arcs.iter().map(|&(i, j)| [i + 1, j + 1]).collect(),
        };
        serde_json::to_string_pretty(&file).expect("spec file serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self, SpecParseError> {
        let file: SpecFile = serde_json::from_str(text)?;
        let n = file.nodes.len();
        let mut services = vec![None; n];
        for node in &file.nodes {
            if node.id == 0 || node.id > n {
                return Err(NetworkError::BadNodeIds { n }.into());
            }
            if services[node.id - 1].replace(node.service).is_some() {
                return Err(NetworkError::BadNodeIds { n }.into());
            }
        }
        let services: Vec<ServiceDistribution> =
            services.into_iter().map(|s| s.expect("ids cover 1..=n")).collect();
        let mut arcs = Vec::with_capacity(file.arcs.len());
        for [i, j] in file.arcs {
            if i == 0 || j == 0 || i > n || j > n {
                return Err(NetworkError::NodeOutOfRange { id: i.max(j), n }.into());
            }
            arcs.push((i - 1, j - 1));
        }
        Ok(NetworkSpec::new(services, arcs)?)
    }
}

/// Errors from reading the JSON interchange format.
#[derive(Debug, Error)]
pub enum SpecParseError {
    // serde_json's Display already names the line and column.
    #[error("invalid spec JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// JSON interchange form: 1-indexed node ids.
#[derive(Serialize, Deserialize)]
struct SpecFile {
    nodes: Vec<NodeEntry>,
    arcs: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
struct NodeEntry {
    id: usize,
    service: ServiceDistribution,
}

/// A compiled network: support matrix, longest-path length, topological
/// order, and degree tables for reporting. Immutable once built.
#[derive(Debug, Clone)]
pub struct CompiledNetwork {
    support: Support64,
    transposed_support: Support64,
    /// `support^0 ..= support^p`, precomputed; every higher power is null.
    support_powers: Vec<maxplus::Matrix64>,
    longest_path: usize,
    topo_order: Vec<usize>,
    in_degree: Vec<usize>,
    out_degree: Vec<usize>,
    fingerprint: u64,
}

impl CompiledNetwork {
    pub fn node_count(&self) -> usize {
        self.support.order()
    }

    /// The support matrix `G`: entry `(i, j)` is 0 exactly when arc
    /// `i -> j` exists, `ε` otherwise.
    pub fn support(&self) -> &Support64 {
        &self.support
    }

    pub fn transposed_support(&self) -> &Support64 {
        &self.transposed_support
    }

    /// `G^r` for `0 <= r <= p`, precomputed at compile time.
    pub fn support_power(&self, r: usize) -> maxplus::Matrix64 {
        match self.support_powers.get(r) {
            Some(m) => m.clone(),
            None => maxplus::Matrix64::null(self.node_count(), self.node_count()),
        }
    }

    /// Arc count of the longest directed path; 0 for an arc-free graph.
    pub fn longest_path(&self) -> usize {
        self.longest_path
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    pub fn in_degree(&self) -> &[usize] {
        &self.in_degree
    }

    pub fn out_degree(&self) -> &[usize] {
        &self.out_degree
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

/// Compiles a validated spec: builds `G`, computes the longest-path length
/// over the topological order, and caches the powers of `G`.
pub fn compile(spec: &NetworkSpec) -> Result<CompiledNetwork, NetworkError> {
    let n = spec.node_count();
    let topo_order = spec.topological_order()?;
    let support =
        Support64::from_arcs(n, spec.arcs()).expect("validated arcs are in range");

    // Longest path by dynamic programming over the topological order:
    // dist[v] = max over predecessors u of dist[u] + 1.
    let mut preds = vec![Vec::new(); n];
    let mut in_degree = vec![0usize; n];
    let mut out_degree = vec![0usize; n];
    for &(i, j) in spec.arcs() {
        preds[j].push(i);
        in_degree[j] += 1;
        out_degree[i] += 1;
    }
    let mut dist = vec![0usize; n];
    for &v in &topo_order {
        for &u in &preds[v] {
            dist[v] = dist[v].max(dist[u] + 1);
        }
    }
    let longest_path = dist.iter().copied().max().unwrap_or(0);

    let mut support_powers = Vec::with_capacity(longest_path + 1);
    let mut power = maxplus::Matrix64::identity(n);
    support_powers.push(power.clone());
    for _ in 1..=longest_path {
        power = power.otimes(support.matrix()).expect("square product");
        support_powers.push(power.clone());
    }

    Ok(CompiledNetwork {
        transposed_support: support.transpose(),
        support,
        support_powers,
        longest_path,
        topo_order,
        in_degree,
        out_degree,
        fingerprint: spec.fingerprint(),
    })
}

/// Post-compilation self-check: `G^(p+1)` is null, and `G^p` is not unless
/// the graph is arc-free.
pub fn validate_nilpotency(net: &CompiledNetwork) -> bool {
    let p = net.longest_path();
    let vanishes = net.support().power(p + 1).is_null();
    if p == 0 {
        return vanishes;
    }
    vanishes && !net.support().power(p).is_null()
}

/// Generates a random DAG: draws a uniform permutation as the topological
/// order and keeps each forward pair independently with the given
/// probability. Acyclic by construction. Every node gets an
/// exponential(1) service distribution; callers that want other
/// distributions replace them via [`NetworkSpec::new`].
pub fn random_dag(n: usize, arc_density: f64, seed: u64) -> NetworkSpec {
    assert!(n >= 1, "need at least one node");
    assert!(
        (0.0..=1.0).contains(&arc_density),
        "density must lie in [0, 1]"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut arcs = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random::<f64>() < arc_density {
                arcs.push((order[a], order[b]));
            }
        }
    }
    let services = vec![ServiceDistribution::Exponential { mean: 1.0 }; n];
    NetworkSpec::new(services, arcs).expect("construction is acyclic")
}
