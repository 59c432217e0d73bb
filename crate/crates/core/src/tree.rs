//! Finite event trees of `ε`-log-jump price paths.
//!
//! Every node sits at a candidate trading time. A non-terminal node whose
//! path has a next admissible jump time `t'` branches into an up-jump, a
//! down-jump and (unless jumps are forced) a "no jump at `t'`" wait node, all
//! at time `t'`. When no admissible time remains the node gets a single
//! terminal child at the horizon. Terminal nodes are the leaves; the
//! root-to-leaf chains are exactly the admissible paths, and the wait nodes
//! carry the information that a jump did not happen.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::paths::{GridFamily, JumpPath, PathError};

pub const DEFAULT_NODE_BUDGET: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("invalid tree configuration: {0}")]
    ConfigInvalid(String),
    #[error("tree exceeds the node budget of {budget}")]
    BudgetExceeded { budget: usize },
    #[error(transparent)]
    Path(#[from] PathError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TreeMode {
    /// Jumps only at the partition times `T_1 < … < T_n` (the horizon is
    /// implicit). With `forced_jumps` the price moves at every partition
    /// time, giving a recombination-free binomial tree.
    Partition {
        times: Vec<f64>,
        #[serde(default)]
        forced_jumps: bool,
    },
    /// Inter-jump gaps of the `k`-th jump drawn from the truncated grid
    /// `U_k`, at most `max_jumps` jumps.
    DyadicGrid {
        #[serde(default)]
        grid: GridFamily,
        max_jumps: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub epsilon: f64,
    pub horizon: f64,
    #[serde(flatten)]
    pub mode: TreeMode,
    /// Payoff Lipschitz constant; when set, `ε < ln(1 + 1/L)` is enforced.
    #[serde(default)]
    pub lipschitz: Option<f64>,
    #[serde(default = "default_budget")]
    pub node_budget: usize,
}

fn default_budget() -> usize {
    DEFAULT_NODE_BUDGET
}

impl TreeConfig {
    pub fn partition(epsilon: f64, times: Vec<f64>, horizon: f64) -> Self {
        Self {
            epsilon,
            horizon,
            mode: TreeMode::Partition { times, forced_jumps: false },
            lipschitz: None,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn binomial(epsilon: f64, times: Vec<f64>, horizon: f64) -> Self {
        Self {
            mode: TreeMode::Partition { times, forced_jumps: true },
            ..Self::partition(epsilon, Vec::new(), horizon)
        }
    }

    pub fn dyadic(epsilon: f64, grid: GridFamily, max_jumps: usize, horizon: f64) -> Self {
        Self {
            epsilon,
            horizon,
            mode: TreeMode::DyadicGrid { grid, max_jumps },
            lipschitz: None,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.lipschitz = Some(lipschitz);
        self
    }

    pub fn with_node_budget(mut self, budget: usize) -> Self {
        self.node_budget = budget;
        self
    }

    pub fn is_dyadic(&self) -> bool {
        matches!(self.mode, TreeMode::DyadicGrid { .. })
    }

    pub fn validate(&self) -> Result<(), TreeError> {
        let invalid = |m: String| Err(TreeError::ConfigInvalid(m));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return invalid(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return invalid(format!("horizon must be positive, got {}", self.horizon));
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0) {
                return invalid(format!("Lipschitz constant must be positive, got {l}"));
            }
            let cap = (1.0 + 1.0 / l).ln();
            if self.epsilon >= cap {
                return invalid(format!("epsilon {} must be below ln(1 + 1/L) = {cap}", self.epsilon));
            }
        }
        match &self.mode {
            TreeMode::Partition { times, .. } => {
                if times.is_empty() {
                    return invalid("partition needs at least one time before the horizon".into());
                }
                let mut prev = 0.0;
                for &t in times {
                    if !(t > prev && t < self.horizon) {
                        return invalid(format!("partition times must satisfy 0 < T_1 < … < T_n < T, got {times:?}"));
                    }
                    if self.epsilon >= t - prev {
                        return invalid(format!(
                            "epsilon {} must be below every partition gap (gap {} before {t})",
                            self.epsilon,
                            t - prev
                        ));
                    }
                    prev = t;
                }
            }
            TreeMode::DyadicGrid { grid, max_jumps } => {
                if *max_jumps == 0 {
                    return invalid("max_jumps must be positive".into());
                }
                if grid.default_i_max == 0 || grid.per_depth.contains(&0) {
                    return invalid("grid truncation i_max must be positive".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Root,
    Jump { up: bool },
    Wait,
    Terminal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub id: usize,
    pub parent: Option<usize>,
    /// Number of jumps on the path up to and including this node.
    pub jumps: usize,
    /// Log-lattice offset `m`; the level is `exp(m ε)`.
    pub offset: i32,
    pub time: f64,
    pub kind: NodeKind,
    pub children: Vec<usize>,
}

impl Node {
    pub fn is_terminal(&self) -> bool {
        self.kind == NodeKind::Terminal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventTree {
    config: TreeConfig,
    nodes: Vec<Node>,
    leaves: Vec<usize>,
}

impl EventTree {
    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon
    }

    pub fn horizon(&self) -> f64 {
        self.config.horizon
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        0
    }

    /// Terminal nodes in depth-first order.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn level(&self, id: usize) -> f64 {
        (self.nodes[id].offset as f64 * self.config.epsilon).exp()
    }

    /// Node ids from the root down to `id`.
    pub fn path_to(&self, id: usize) -> Vec<usize> {
        let mut chain = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            chain.push(p);
            cur = p;
        }
        chain.reverse();
        chain
    }

    /// The price path ending at leaf `leaf`.
    pub fn jump_path(&self, leaf: usize) -> JumpPath {
        let chain = self.path_to(leaf);
        let mut times = Vec::new();
        let mut levels = vec![1.0];
        for &id in &chain {
            if let NodeKind::Jump { .. } = self.nodes[id].kind {
                times.push(self.nodes[id].time);
                levels.push(self.level(id));
            }
        }
        JumpPath::new(times, levels, self.config.horizon).expect("tree paths are valid jump paths")
    }
}

/// One `(leaf, path)` pair per leaf, in leaf order.
pub fn enumerate_paths(tree: &EventTree) -> Vec<(usize, JumpPath)> {
    tree.leaves.iter().map(|&l| (l, tree.jump_path(l))).collect()
}

/// Where the next admissible jump time of a node comes from.
#[derive(Clone, Copy)]
struct Cursor {
    /// Time of the last jump (0 at the root).
    anchor: f64,
    /// Index of the next candidate in the relevant candidate list.
    next: usize,
}

struct Builder<'a> {
    config: &'a TreeConfig,
    nodes: Vec<Node>,
    leaves: Vec<usize>,
    /// Dyadic mode: sorted gap grid per jump index (index 0 unused).
    grids: Vec<Vec<f64>>,
}

impl Builder<'_> {
    fn push(&mut self, parent: usize, kind: NodeKind, offset: i32, jumps: usize, time: f64) -> Result<usize, TreeError> {
        if self.nodes.len() >= self.config.node_budget {
            return Err(TreeError::BudgetExceeded { budget: self.config.node_budget });
        }
        let id = self.nodes.len();
        self.nodes.push(Node { id, parent: Some(parent), jumps, offset, time, kind, children: Vec::new() });
        self.nodes[parent].children.push(id);
        Ok(id)
    }

    fn next_time(&self, jumps: usize, cursor: Cursor) -> Option<f64> {
        match &self.config.mode {
            TreeMode::Partition { times, .. } => times.get(cursor.next).copied(),
            TreeMode::DyadicGrid { max_jumps, .. } => {
                if jumps >= *max_jumps {
                    return None;
                }
                let t = cursor.anchor + *self.grids[jumps + 1].get(cursor.next)?;
                (t < self.config.horizon).then_some(t)
            }
        }
    }

    fn expand(&mut self, id: usize, cursor: Cursor) -> Result<(), TreeError> {
        let (offset, jumps) = (self.nodes[id].offset, self.nodes[id].jumps);
        let Some(t) = self.next_time(jumps, cursor) else {
            let leaf = self.push(id, NodeKind::Terminal, offset, jumps, self.config.horizon)?;
            self.leaves.push(leaf);
            return Ok(());
        };
        let (partition, forced) = match &self.config.mode {
            TreeMode::Partition { forced_jumps, .. } => (true, *forced_jumps),
            TreeMode::DyadicGrid { .. } => (false, false),
        };
        for up in [true, false] {
            let child = self.push(id, NodeKind::Jump { up }, offset + if up { 1 } else { -1 }, jumps + 1, t)?;
            let next = if partition { Cursor { anchor: t, next: cursor.next + 1 } } else { Cursor { anchor: t, next: 0 } };
            self.expand(child, next)?;
        }
        if !forced {
            let child = self.push(id, NodeKind::Wait, offset, jumps, t)?;
            self.expand(child, Cursor { next: cursor.next + 1, ..cursor })?;
        }
        Ok(())
    }
}

pub fn build_tree(config: &TreeConfig) -> Result<EventTree, TreeError> {
    config.validate()?;
    let grids = match &config.mode {
        TreeMode::Partition { .. } => Vec::new(),
        TreeMode::DyadicGrid { grid, max_jumps } => std::iter::once(Ok(Vec::new()))
            .chain((1..=*max_jumps).map(|k| grid.spec(config.epsilon, k as u32).map(|s| s.elements())))
            .collect::<Result<_, _>>()?,
    };
    let mut b = Builder { config, nodes: Vec::new(), leaves: Vec::new(), grids };
    b.nodes.push(Node { id: 0, parent: None, jumps: 0, offset: 0, time: 0.0, kind: NodeKind::Root, children: Vec::new() });
    b.expand(0, Cursor { anchor: 0.0, next: 0 })?;
    Ok(EventTree { config: config.clone(), nodes: b.nodes, leaves: b.leaves })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeViolation {
    pub node: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TreeReport {
    pub violations: Vec<TreeViolation>,
}

impl TreeReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-checks every structural invariant of a tree.
pub fn validate_tree(tree: &EventTree) -> TreeReport {
    let mut report = TreeReport::default();
    let mut flag = |node: usize, message: &str| {
        report.violations.push(TreeViolation { node, message: message.to_string() })
    };
    let eps = tree.epsilon();
    let horizon = tree.horizon();
    let Some(root) = tree.nodes.first() else {
        flag(0, "empty tree");
        return report;
    };
    if root.offset != 0 || root.time != 0.0 || root.parent.is_some() {
        flag(0, "root must have level 1 at time 0");
    }
    for node in &tree.nodes {
        for &c in &node.children {
            if tree.nodes.get(c).and_then(|n| n.parent) != Some(node.id) {
                flag(node.id, "broken parent link");
            }
        }
        if node.children.is_empty() && !node.is_terminal() {
            flag(node.id, "non-terminal node without children");
        }
        if node.is_terminal() {
            if !node.children.is_empty() {
                flag(node.id, "terminal node with children");
            }
            if node.time != horizon {
                flag(node.id, "leaf not at horizon");
            }
        }
        let Some(p) = node.parent.and_then(|p| tree.nodes.get(p)) else {
            continue;
        };
        let step = node.offset - p.offset;
        match node.kind {
            NodeKind::Jump { up } => {
                if step != if up { 1 } else { -1 } || node.jumps != p.jumps + 1 {
                    flag(node.id, "log-step ≠ ε");
                }
            }
            NodeKind::Wait | NodeKind::Terminal => {
                if step != 0 || node.jumps != p.jumps {
                    flag(node.id, "level changed without jump");
                }
            }
            NodeKind::Root => flag(node.id, "root kind below the root"),
        }
        if !(node.time > p.time) {
            flag(node.id, "non-increasing time");
        }
        if node.kind != NodeKind::Terminal && !time_admissible(tree, node, eps) {
            flag(node.id, "time not admissible");
        }
    }
    let leaves: Vec<usize> = tree.nodes.iter().filter(|n| n.is_terminal()).map(|n| n.id).collect();
    let mut recorded = tree.leaves.clone();
    recorded.sort_unstable();
    if recorded != leaves {
        flag(0, "leaf index does not match terminal nodes");
    }
    report
}

fn time_admissible(tree: &EventTree, node: &Node, eps: f64) -> bool {
    match &tree.config.mode {
        TreeMode::Partition { times, .. } => times.contains(&node.time),
        TreeMode::DyadicGrid { grid, .. } => {
            // Gap since the last strict ancestor jump must lie in U_{k}.
            let k = if matches!(node.kind, NodeKind::Jump { .. }) { node.jumps } else { node.jumps + 1 };
            let mut anchor = 0.0;
            let mut cur = node.parent;
            while let Some(id) = cur {
                let n = &tree.nodes[id];
                if matches!(n.kind, NodeKind::Jump { .. }) {
                    anchor = n.time;
                    break;
                }
                cur = n.parent;
            }
            let gap = node.time - anchor;
            grid.spec(eps, k as u32)
                .map(|s| s.contains(gap, 1e-12 * node.time.max(1.0)))
                .unwrap_or(false)
        }
    }
}
