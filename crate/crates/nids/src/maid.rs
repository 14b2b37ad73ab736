//! Multi-agent influence diagrams: chance, decision, and utility nodes with
//! owners, strategy profiles, and the reduction to a plain Bayesian network.

use std::collections::{BTreeMap, BTreeSet};

use crate::bayes::BayesNet;
use crate::{canon_float, Error, Result, ValidationReport};

pub type NodeId = usize;
pub type AgentId = usize;

#[derive(Debug, Clone)]
pub enum NodeKind {
    Chance {
        states: Vec<String>,
        parents: Vec<NodeId>,
        table: Vec<f64>,
    },
    Decision {
        owner: AgentId,
        actions: Vec<String>,
        info_parents: Vec<NodeId>,
    },
    Utility {
        owner: AgentId,
        parents: Vec<NodeId>,
        /// One value per parent assignment, row-major in declared parent order.
        table: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct MaidNode {
    pub name: String,
    pub kind: NodeKind,
}

impl MaidNode {
    pub fn parents(&self) -> &[NodeId] {
        match &self.kind {
            NodeKind::Chance { parents, .. } => parents,
            NodeKind::Decision { info_parents, .. } => info_parents,
            NodeKind::Utility { parents, .. } => parents,
        }
    }

    pub fn is_decision(&self) -> bool {
        matches!(self.kind, NodeKind::Decision { .. })
    }

    pub fn is_utility(&self) -> bool {
        matches!(self.kind, NodeKind::Utility { .. })
    }

    pub fn is_chance(&self) -> bool {
        matches!(self.kind, NodeKind::Chance { .. })
    }

    /// Domain size; utility nodes have none.
    pub fn card(&self) -> Option<usize> {
        match &self.kind {
            NodeKind::Chance { states, .. } => Some(states.len()),
            NodeKind::Decision { actions, .. } => Some(actions.len()),
            NodeKind::Utility { .. } => None,
        }
    }

    pub fn domain(&self) -> Option<&[String]> {
        match &self.kind {
            NodeKind::Chance { states, .. } => Some(states),
            NodeKind::Decision { actions, .. } => Some(actions),
            NodeKind::Utility { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Maid {
    agents: Vec<String>,
    nodes: Vec<MaidNode>,
    index: BTreeMap<String, NodeId>,
}

// ============================================================================
// Builder
// ============================================================================

/// Assembles a MAID from name-based references. Forward references are fine;
/// resolution happens in `finish`. Structural nonsense (unknown names, wrong
/// table sizes) fails there, while reportable modeling errors (cycles,
/// imperfect recall, incomplete tables read from documents) are left for
/// `Maid::validate`.
#[derive(Debug, Default)]
pub struct MaidBuilder {
    agents: Vec<String>,
    pending: Vec<(String, PendingKind)>,
}

#[derive(Debug)]
enum PendingKind {
    Chance {
        states: Vec<String>,
        parents: Vec<String>,
        table: Vec<f64>,
    },
    Decision {
        owner: String,
        actions: Vec<String>,
        info_parents: Vec<String>,
    },
    Utility {
        owner: String,
        parents: Vec<String>,
        table: Vec<f64>,
    },
}

impl MaidBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn agent(mut self, name: &str) -> Self {
        self.agents.push(name.to_string());
        self
    }

    pub fn chance(mut self, name: &str, states: &[&str], parents: &[&str], table: Vec<f64>) -> Self {
        self.pending.push((
            name.to_string(),
            PendingKind::Chance {
                states: states.iter().map(|s| s.to_string()).collect(),
                parents: parents.iter().map(|s| s.to_string()).collect(),
                table,
            },
        ));
        self
    }

    pub fn decision(mut self, name: &str, owner: &str, actions: &[&str], info_parents: &[&str]) -> Self {
        self.pending.push((
            name.to_string(),
            PendingKind::Decision {
                owner: owner.to_string(),
                actions: actions.iter().map(|s| s.to_string()).collect(),
                info_parents: info_parents.iter().map(|s| s.to_string()).collect(),
            },
        ));
        self
    }

    pub fn utility(mut self, name: &str, owner: &str, parents: &[&str], table: Vec<f64>) -> Self {
        self.pending.push((
            name.to_string(),
            PendingKind::Utility {
                owner: owner.to_string(),
                parents: parents.iter().map(|s| s.to_string()).collect(),
                table,
            },
        ));
        self
    }

    /// Owned-string variants used by the document layer and the compiler.
    pub fn chance_owned(
        mut self,
        name: String,
        states: Vec<String>,
        parents: Vec<String>,
        table: Vec<f64>,
    ) -> Self {
        self.pending
            .push((name, PendingKind::Chance { states, parents, table }));
        self
    }

    pub fn decision_owned(
        mut self,
        name: String,
        owner: String,
        actions: Vec<String>,
        info_parents: Vec<String>,
    ) -> Self {
        self.pending.push((
            name,
            PendingKind::Decision {
                owner,
                actions,
                info_parents,
            },
        ));
        self
    }

    pub fn utility_owned(
        mut self,
        name: String,
        owner: String,
        parents: Vec<String>,
        table: Vec<f64>,
    ) -> Self {
        self.pending
            .push((name, PendingKind::Utility { owner, parents, table }));
        self
    }

    pub fn agent_owned(mut self, name: String) -> Self {
        self.agents.push(name);
        self
    }

    pub fn finish(self) -> Result<Maid> {
        let mut agent_index: BTreeMap<String, AgentId> = BTreeMap::new();
        for (i, a) in self.agents.iter().enumerate() {
            if agent_index.insert(a.clone(), i).is_some() {
                return Err(Error::Model(format!("duplicate agent {a:?}")));
            }
        }
        let mut index: BTreeMap<String, NodeId> = BTreeMap::new();
        for (i, (name, _)) in self.pending.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Model(format!("duplicate node name {name:?}")));
            }
        }
        let lookup = |name: &str, of: &str| -> Result<NodeId> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Model(format!("{of} references unknown node {name:?}")))
        };
        let owner_of = |name: &str, of: &str| -> Result<AgentId> {
            agent_index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Model(format!("{of} is owned by unknown agent {name:?}")))
        };

        // utility nodes may not be parents of anything
        let utility_names: BTreeSet<&str> = self
            .pending
            .iter()
            .filter(|(_, k)| matches!(k, PendingKind::Utility { .. }))
            .map(|(n, _)| n.as_str())
            .collect();

        let mut nodes = Vec::with_capacity(self.pending.len());
        for (name, kind) in &self.pending {
            let resolve_parents = |list: &[String]| -> Result<Vec<NodeId>> {
                let mut out = Vec::with_capacity(list.len());
                let mut seen = BTreeSet::new();
                for p in list {
                    if p == name {
                        return Err(Error::Model(format!("{name:?} cannot be its own parent")));
                    }
                    if utility_names.contains(p.as_str()) {
                        return Err(Error::Model(format!(
                            "utility node {p:?} cannot be a parent of {name:?}"
                        )));
                    }
                    if !seen.insert(p.clone()) {
                        return Err(Error::Model(format!("duplicate parent {p:?} of {name:?}")));
                    }
                    out.push(lookup(p, name)?);
                }
                Ok(out)
            };
            let kind = match kind {
                PendingKind::Chance { states, parents, table } => {
                    if states.is_empty() {
                        return Err(Error::Model(format!("chance node {name:?} has empty domain")));
                    }
                    check_distinct(name, states)?;
                    NodeKind::Chance {
                        states: states.clone(),
                        parents: resolve_parents(parents)?,
                        table: table.clone(),
                    }
                }
                PendingKind::Decision {
                    owner,
                    actions,
                    info_parents,
                } => {
                    if actions.is_empty() {
                        return Err(Error::Model(format!("decision {name:?} has no actions")));
                    }
                    check_distinct(name, actions)?;
                    NodeKind::Decision {
                        owner: owner_of(owner, name)?,
                        actions: actions.clone(),
                        info_parents: resolve_parents(info_parents)?,
                    }
                }
                PendingKind::Utility { owner, parents, table } => NodeKind::Utility {
                    owner: owner_of(owner, name)?,
                    parents: resolve_parents(parents)?,
                    table: table.clone(),
                },
            };
            nodes.push(MaidNode {
                name: name.clone(),
                kind,
            });
        }

        let maid = Maid {
            agents: self.agents,
            nodes,
            index,
        };
        // table sizes must be decidable now that domains are resolved
        for id in 0..maid.nodes.len() {
            let node = &maid.nodes[id];
            match &node.kind {
                NodeKind::Chance { states, parents, table } => {
                    let expected = maid.row_count(parents)? * states.len();
                    if table.len() != expected {
                        return Err(Error::Model(format!(
                            "CPD for {:?} has {} entries, expected {expected}",
                            node.name,
                            table.len()
                        )));
                    }
                }
                NodeKind::Utility { parents, table, .. } => {
                    let expected = maid.row_count(parents)?;
                    if table.len() != expected {
                        return Err(Error::Model(format!(
                            "utility table for {:?} has {} entries, expected {expected}",
                            node.name,
                            table.len()
                        )));
                    }
                }
                NodeKind::Decision { .. } => {}
            }
        }
        Ok(maid)
    }
}

fn check_distinct(name: &str, labels: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(Error::Model(format!("{name:?} repeats domain label {l:?}")));
        }
    }
    Ok(())
}

// ============================================================================
// Strategies
// ============================================================================

/// Behavioral rule for one decision: row-major over the info-parent
/// assignments (declared order, first parent slowest), action fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub table: Vec<f64>,
}

impl Strategy {
    pub fn uniform(maid: &Maid, decision: NodeId) -> Self {
        let rows = maid.info_row_count(decision);
        let n = maid.nodes[decision].card().expect("decision node");
        Strategy {
            table: vec![1.0 / n as f64; rows * n],
        }
    }

    /// Same pure action in every row.
    pub fn pure(maid: &Maid, decision: NodeId, action: usize) -> Self {
        let rows = maid.info_row_count(decision);
        let n = maid.nodes[decision].card().expect("decision node");
        Self::from_rows(&vec![action; rows], n)
    }

    /// One chosen action per row.
    pub fn from_rows(choices: &[usize], n_actions: usize) -> Self {
        let mut table = vec![0.0; choices.len() * n_actions];
        for (r, &a) in choices.iter().enumerate() {
            table[r * n_actions + a] = 1.0;
        }
        Strategy { table }
    }

    pub fn row(&self, r: usize, n_actions: usize) -> &[f64] {
        &self.table[r * n_actions..(r + 1) * n_actions]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StrategyProfile {
    pub strategies: BTreeMap<String, Strategy>,
}

impl StrategyProfile {
    pub fn uniform(maid: &Maid) -> Self {
        let mut strategies = BTreeMap::new();
        for d in maid.decisions() {
            strategies.insert(maid.node(d).name.clone(), Strategy::uniform(maid, d));
        }
        StrategyProfile { strategies }
    }

    pub fn set(&mut self, decision: &str, s: Strategy) {
        self.strategies.insert(decision.to_string(), s);
    }

    pub fn get(&self, decision: &str) -> Option<&Strategy> {
        self.strategies.get(decision)
    }
}

// ============================================================================
// Maid
// ============================================================================

impl Maid {
    pub fn builder() -> MaidBuilder {
        MaidBuilder::new()
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn agent_id(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|a| a == name)
    }

    pub fn nodes(&self) -> &[MaidNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &MaidNode {
        &self.nodes[id]
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn decisions(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].is_decision())
            .collect()
    }

    pub fn decisions_of(&self, agent: AgentId) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i].kind, NodeKind::Decision { owner, .. } if owner == agent))
            .collect()
    }

    pub fn utilities_of(&self, agent: AgentId) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i].kind, NodeKind::Utility { owner, .. } if owner == agent))
            .collect()
    }

    fn row_count(&self, parents: &[NodeId]) -> Result<usize> {
        let mut rows = 1usize;
        for &p in parents {
            rows *= self.nodes[p]
                .card()
                .ok_or_else(|| Error::Model(format!("{:?} cannot be a parent", self.nodes[p].name)))?;
        }
        Ok(rows)
    }

    /// `seed` plus every ancestor, following all parent kinds.
    pub fn ancestors(&self, seed: &[NodeId]) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<NodeId> = seed.to_vec();
        while let Some(v) = stack.pop() {
            if out.insert(v) {
                stack.extend_from_slice(self.nodes[v].parents());
            }
        }
        out
    }

    /// Number of info-parent assignments of a decision.
    pub fn info_row_count(&self, decision: NodeId) -> usize {
        self.row_count(self.nodes[decision].parents()).expect("domains resolved")
    }

    /// Decode a row index into (info parent, state) pairs, row-major.
    pub fn row_assignment(&self, decision: NodeId, row: usize) -> Vec<(NodeId, usize)> {
        let parents = self.nodes[decision].parents();
        let cards: Vec<usize> = parents
            .iter()
            .map(|&p| self.nodes[p].card().expect("domains resolved"))
            .collect();
        let mut rem = row;
        let mut out = vec![(0usize, 0usize); parents.len()];
        for i in (0..parents.len()).rev() {
            out[i] = (parents[i], rem % cards[i]);
            rem /= cards[i];
        }
        out
    }

    // ------------------------------------------------------------------
    // Validation
    // ------------------------------------------------------------------

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        self.check_cycles(&mut report);
        self.check_tables(&mut report);
        self.check_recall(&mut report);
        report
    }

    /// The subset of problems that make solving meaningless. Imperfect recall
    /// is reported by `validate` but does not gate anything: mechanically
    /// derived game networks routinely observe beliefs about a decision
    /// rather than the decision itself.
    pub fn hard_violations(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        self.check_cycles(&mut report);
        self.check_tables(&mut report);
        report
    }

    fn check_cycles(&self, report: &mut ValidationReport) {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for v in 0..n {
            for &p in self.nodes[v].parents() {
                indegree[v] += 1;
                children[p].push(v);
            }
        }
        let mut ready: Vec<NodeId> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut seen = 0usize;
        while let Some(v) = ready.pop() {
            seen += 1;
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(c);
                }
            }
        }
        if seen < n {
            let stuck: Vec<&str> = (0..n)
                .filter(|&v| indegree[v] > 0)
                .map(|v| self.nodes[v].name.as_str())
                .collect();
            report.push("cycle", format!("cycle through {{{}}}", stuck.join(", ")));
        }
    }

    fn check_tables(&self, report: &mut ValidationReport) {
        for node in &self.nodes {
            match &node.kind {
                NodeKind::Chance { states, table, .. } => {
                    let card = states.len();
                    for (r, row) in table.chunks(card).enumerate() {
                        let sum: f64 = row.iter().sum();
                        if (sum - 1.0).abs() > crate::bayes::ROW_SUM_TOL {
                            report.push(
                                "row-sum",
                                format!("CPD for {:?}, row {r}: entries sum to {sum}", node.name),
                            );
                        }
                        for (s, &p) in row.iter().enumerate() {
                            if !(-1e-12..=1.0 + 1e-12).contains(&p) || p.is_nan() {
                                report.push(
                                    "entry-range",
                                    format!(
                                        "CPD for {:?}, row {r}, state {:?}: probability {p} out of range",
                                        node.name, states[s]
                                    ),
                                );
                            }
                        }
                    }
                }
                NodeKind::Utility { table, .. } => {
                    for (r, &v) in table.iter().enumerate() {
                        if !v.is_finite() {
                            report.push(
                                "utility-not-total",
                                format!("utility {:?} has no finite value for row {r}", node.name),
                            );
                        }
                    }
                }
                NodeKind::Decision { .. } => {}
            }
        }
    }

    /// Per agent each pair of decisions must be ordered so the later one
    /// observes the earlier one and everything the earlier one observed.
    fn check_recall(&self, report: &mut ValidationReport) {
        for agent in 0..self.agents.len() {
            let mut ds = self.decisions_of(agent);
            if ds.len() < 2 {
                continue;
            }
            ds.sort_by_key(|&d| (self.nodes[d].parents().len(), d));
            for w in ds.windows(2) {
                let (a, b) = (w[0], w[1]);
                let ip_b: BTreeSet<NodeId> = self.nodes[b].parents().iter().copied().collect();
                let remembers_decision = ip_b.contains(&a);
                let remembers_info = self.nodes[a].parents().iter().all(|p| ip_b.contains(p));
                if !(remembers_decision && remembers_info) {
                    report.push(
                        "perfect-recall",
                        format!(
                            "agent {:?} forgets at {:?}: it should observe {:?} and all of its informational parents",
                            self.agents[agent], self.nodes[b].name, self.nodes[a].name
                        ),
                    );
                }
            }
        }
    }

    // ------------------------------------------------------------------
    // Implementation as a Bayesian network
    // ------------------------------------------------------------------

    /// Replace decisions by chance nodes carrying their strategy rule and
    /// utility nodes by chance nodes over their distinct values. Node ids are
    /// preserved: MAID node i becomes network variable i.
    pub fn implement_profile(&self, profile: &StrategyProfile) -> Result<BayesNet> {
        self.hard_violations().into_result()?;
        let mut net = BayesNet::new();
        for node in &self.nodes {
            match &node.kind {
                NodeKind::Chance { states, .. } => {
                    net.add_var_owned(node.name.clone(), states.clone())?;
                }
                NodeKind::Decision { actions, .. } => {
                    net.add_var_owned(node.name.clone(), actions.clone())?;
                }
                NodeKind::Utility { table, .. } => {
                    let (levels, _) = utility_levels(table);
                    net.add_var_owned(node.name.clone(), levels.iter().map(|&v| canon_float(v)).collect())?;
                }
            }
        }
        for (id, node) in self.nodes.iter().enumerate() {
            match &node.kind {
                NodeKind::Chance { parents, table, .. } => {
                    net.set_cpd(id, parents.clone(), table.clone())?;
                }
                NodeKind::Decision { actions, info_parents, .. } => {
                    let strategy = profile.get(&node.name).ok_or_else(|| {
                        Error::Model(format!("profile has no strategy for decision {:?}", node.name))
                    })?;
                    let expected = self.info_row_count(id) * actions.len();
                    if strategy.table.len() != expected {
                        return Err(Error::Model(format!(
                            "strategy for {:?} has {} entries, expected {expected}",
                            node.name,
                            strategy.table.len()
                        )));
                    }
                    net.set_cpd(id, info_parents.clone(), strategy.table.clone())?;
                }
                NodeKind::Utility { parents, table, .. } => {
                    let (levels, row_level) = utility_levels(table);
                    let mut cpd = vec![0.0; table.len() * levels.len()];
                    for (r, &l) in row_level.iter().enumerate() {
                        cpd[r * levels.len() + l] = 1.0;
                    }
                    net.set_cpd(id, parents.clone(), cpd)?;
                }
            }
        }
        Ok(net)
    }

    // ------------------------------------------------------------------
    // Expected utility and best response
    // ------------------------------------------------------------------

    /// Sum over the agent's utility nodes of the expected node value under
    /// the implemented network, conditioned on `evidence`.
    pub fn expected_utility(
        &self,
        profile: &StrategyProfile,
        agent: AgentId,
        evidence: &[(NodeId, usize)],
    ) -> Result<f64> {
        let net = self.implement_profile(profile)?;
        self.expected_utility_in(&net, agent, evidence)
    }

    /// Same, against a pre-implemented network (ids preserved by
    /// `implement_profile`). Lets callers reuse one network for many queries.
    pub fn expected_utility_in(
        &self,
        net: &BayesNet,
        agent: AgentId,
        evidence: &[(NodeId, usize)],
    ) -> Result<f64> {
        let mut eu = 0.0;
        for u in self.utilities_of(agent) {
            let NodeKind::Utility { table, .. } = &self.nodes[u].kind else {
                unreachable!()
            };
            let (levels, _) = utility_levels(table);
            let marg = net.query_marginal(u, evidence)?;
            eu += marg.iter().zip(&levels).map(|(p, v)| p * v).sum::<f64>();
        }
        Ok(eu)
    }

    /// Exhaustive-enumeration reference for `expected_utility`.
    pub fn expected_utility_brute(
        &self,
        profile: &StrategyProfile,
        agent: AgentId,
        evidence: &[(NodeId, usize)],
    ) -> Result<f64> {
        let net = self.implement_profile(profile)?;
        let mut eu = 0.0;
        for u in self.utilities_of(agent) {
            let NodeKind::Utility { table, .. } = &self.nodes[u].kind else {
                unreachable!()
            };
            let (levels, _) = utility_levels(table);
            let marg = crate::brute::marginal(&net, u, evidence)?;
            eu += marg.iter().zip(&levels).map(|(p, v)| p * v).sum::<f64>();
        }
        Ok(eu)
    }

    /// Pointwise best reply for one decision holding everyone else (and the
    /// owner's other decisions) at `profile`. For each reachable info-parent
    /// assignment: a point mass on the expected-utility-maximizing action,
    /// lowest index on ties. Unreachable assignments get the lowest index.
    pub fn local_best_response(&self, profile: &StrategyProfile, decision: NodeId) -> Result<Strategy> {
        let node = &self.nodes[decision];
        let NodeKind::Decision { owner, actions, .. } = &node.kind else {
            return Err(Error::Model(format!("{:?} is not a decision", node.name)));
        };
        let owner = *owner;
        let n_actions = actions.len();

        // Conditioning on the action must not feed back through the rule, so
        // the probe network carries a uniform rule at this decision. Reach
        // probabilities of info assignments are unaffected: the rule only
        // matters downstream of the decision.
        let mut probe = profile.clone();
        probe.set(&node.name, Strategy::uniform(self, decision));
        let net = self.implement_profile(&probe)?;

        let utilities: Vec<(NodeId, Vec<f64>)> = self
            .utilities_of(owner)
            .into_iter()
            .map(|u| {
                let NodeKind::Utility { table, .. } = &self.nodes[u].kind else {
                    unreachable!()
                };
                (u, utility_levels(table).0)
            })
            .collect();

        let rows = self.info_row_count(decision);
        let mut choices = Vec::with_capacity(rows);
        for row in 0..rows {
            let pa = self.row_assignment(decision, row);
            let mut best = 0usize;
            let mut best_eu = f64::NEG_INFINITY;
            'actions: for a in 0..n_actions {
                let mut ev = pa.clone();
                ev.push((decision, a));
                let mut eu = 0.0;
                for (u, levels) in &utilities {
                    match net.query_marginal(*u, &ev) {
                        Ok(marg) => {
                            eu += marg.iter().zip(levels).map(|(p, v)| p * v).sum::<f64>()
                        }
                        // The rule at `decision` is uniform, so zero mass
                        // means the info assignment itself is unreachable.
                        Err(Error::Query(_)) => break 'actions,
                        Err(e) => return Err(e),
                    }
                }
                if eu > best_eu {
                    best_eu = eu;
                    best = a;
                }
            }
            choices.push(best);
        }
        Ok(Strategy::from_rows(&choices, n_actions))
    }
}

/// Distinct utility values in ascending order plus, per table row, the index
/// of that row's value. Values whose canonical rendering collides are merged.
pub fn utility_levels(table: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut levels: Vec<f64> = table.to_vec();
    levels.retain(|v| v.is_finite());
    if levels.is_empty() {
        levels.push(0.0);
    }
    levels.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    levels.dedup_by(|a, b| canon_float(*a) == canon_float(*b));
    let row_level = table
        .iter()
        .map(|v| {
            let label = canon_float(*v);
            levels
                .iter()
                .position(|l| canon_float(*l) == label)
                .unwrap_or(0)
        })
        .collect();
    (levels, row_level)
}

// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, LeaderConvention};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn both_conventions() -> Vec<Maid> {
        vec![
            fixtures::baseball_maid(LeaderConvention::ThreeValueUniformFill),
            fixtures::baseball_maid(LeaderConvention::TwoValueRenormalized),
        ]
    }

    #[test]
    fn baseball_validates_clean() {
        for maid in both_conventions() {
            let report = maid.validate();
            assert!(report.is_clean(), "{report}");
        }
    }

    #[test]
    fn forgetting_an_earlier_decision_is_reported() {
        let maid = Maid::builder()
            .agent("A")
            .decision("D1", "A", &["x", "y"], &[])
            .decision("D2", "A", &["x", "y"], &[])
            .utility("U", "A", &["D1", "D2"], vec![1.0, 0.0, 0.0, 1.0])
            .finish()
            .unwrap();
        let report = maid.validate();
        assert!(report.has("perfect-recall"), "{report}");
        let msg = &report.findings.iter().find(|f| f.code == "perfect-recall").unwrap().message;
        assert!(msg.contains("D1") && msg.contains("D2"), "{msg}");
    }

    #[test]
    fn remembering_chain_is_clean() {
        let maid = Maid::builder()
            .agent("A")
            .decision("D1", "A", &["x", "y"], &[])
            .decision("D2", "A", &["x", "y"], &["D1"])
            .utility("U", "A", &["D2"], vec![1.0, 0.0])
            .finish()
            .unwrap();
        assert!(maid.validate().is_clean());
    }

    #[test]
    fn lone_decision_without_chance_nodes_is_clean() {
        let maid = Maid::builder()
            .agent("A")
            .decision("D", "A", &["x", "y"], &[])
            .utility("U", "A", &["D"], vec![3.0, 1.0])
            .finish()
            .unwrap();
        assert!(maid.validate().is_clean());
    }

    #[test]
    fn implementing_the_fixed_rules_reproduces_the_chance_network() {
        let maid = fixtures::baseball_maid(LeaderConvention::ThreeValueUniformFill);
        let profile = fixtures::baseball_automaton_profile(&maid);
        let net = maid.implement_profile(&profile).unwrap();
        assert!(net.validate().is_clean(), "{}", net.validate());

        // decision CPDs are exactly the strategy tables
        let steal = net.var_id("Steal").unwrap();
        assert_eq!(
            net.cpd(steal).unwrap().table,
            vec![0.75, 0.25, 0.65, 0.35, 0.5, 0.5]
        );

        let full = net
            .full_assignment_from_labels(&[
                ("Leader", "alice"),
                ("Steal", "true"),
                ("PitchOut", "true"),
                ("ThrownOut", "true"),
                ("UAlice", "-60"),
                ("UBob", "60"),
            ])
            .unwrap();
        assert_abs_diff_eq!(net.joint_probability(&full).unwrap(), 0.216, epsilon = 1e-12);
    }

    #[test]
    fn utility_nodes_become_chance_over_sorted_distinct_values() {
        let maid = fixtures::baseball_maid(LeaderConvention::TwoValueRenormalized);
        let profile = fixtures::baseball_automaton_profile(&maid);
        let net = maid.implement_profile(&profile).unwrap();
        let ua = net.var_id("UAlice").unwrap();
        let states = &net.var(ua).states;
        assert_eq!(
            states,
            &["-100", "-90", "-80", "-60", "0", "10", "20", "110"]
        );
        // point-mass rows
        let cpd = net.cpd(ua).unwrap();
        for row in cpd.table.chunks(states.len()) {
            assert_eq!(row.iter().filter(|&&p| p == 1.0).count(), 1);
            assert!(row.iter().all(|&p| p == 0.0 || p == 1.0));
        }
    }

    #[test]
    fn profile_missing_a_decision_is_rejected() {
        let maid = fixtures::baseball_maid(LeaderConvention::ThreeValueUniformFill);
        let mut profile = fixtures::baseball_automaton_profile(&maid);
        profile.strategies.remove("PitchOut");
        let err = maid.implement_profile(&profile).unwrap_err();
        assert!(err.to_string().contains("PitchOut"), "{err}");
    }

    #[test]
    fn decision_free_model_implements_as_is() {
        let maid = Maid::builder()
            .agent("A")
            .chance("C", &["a", "b"], &[], vec![0.25, 0.75])
            .utility("U", "A", &["C"], vec![5.0, -5.0])
            .finish()
            .unwrap();
        let net = maid.implement_profile(&StrategyProfile::default()).unwrap();
        assert!(net.validate().is_clean());
        let c = net.var_id("C").unwrap();
        assert_eq!(net.cpd(c).unwrap().table, vec![0.25, 0.75]);
        let eu = maid.expected_utility(&StrategyProfile::default(), 0, &[]).unwrap();
        assert_abs_diff_eq!(eu, 0.25 * 5.0 + 0.75 * (-5.0), epsilon = 1e-12);
    }

    #[test]
    fn pure_profiles_implement_as_zero_one_rows() {
        let maid = fixtures::baseball_maid(LeaderConvention::TwoValueRenormalized);
        let steal = maid.node_id("Steal").unwrap();
        let pitch = maid.node_id("PitchOut").unwrap();
        let mut profile = StrategyProfile::default();
        profile.set("Steal", Strategy::pure(&maid, steal, 1));
        profile.set("PitchOut", Strategy::pure(&maid, pitch, 0));
        let net = maid.implement_profile(&profile).unwrap();
        let cpd = net.cpd(steal).unwrap();
        assert!(cpd.table.iter().all(|&p| p == 0.0 || p == 1.0));
    }

    #[test]
    fn expected_utility_for_the_fixed_rules() {
        for maid in both_conventions() {
            let profile = fixtures::baseball_automaton_profile(&maid);
            let leader = maid.node_id("Leader").unwrap();
            let alice = maid.agent_id("Alice").unwrap();
            let eu = maid.expected_utility(&profile, alice, &[(leader, 0)]).unwrap();
            assert_abs_diff_eq!(eu, -15.6, epsilon = 1e-9);
        }
    }

    #[test]
    fn expected_utility_matches_enumeration() {
        for maid in both_conventions() {
            let profile = fixtures::baseball_automaton_profile(&maid);
            let leader = maid.node_id("Leader").unwrap();
            for agent in 0..2 {
                for ev in [vec![], vec![(leader, 1)]] {
                    let fast = maid.expected_utility(&profile, agent, &ev).unwrap();
                    let slow = maid.expected_utility_brute(&profile, agent, &ev).unwrap();
                    assert_abs_diff_eq!(fast, slow, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn zero_sum_pair_always_cancels() {
        let maid = fixtures::baseball_maid(LeaderConvention::ThreeValueUniformFill);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let mut profile = StrategyProfile::default();
            for d in maid.decisions() {
                let rows = maid.info_row_count(d);
                let n = maid.node(d).card().unwrap();
                let mut table = Vec::new();
                for _ in 0..rows {
                    table.extend(crate::samples::simplex_point(&mut rng, n));
                }
                profile.set(&maid.node(d).name.clone(), Strategy { table });
            }
            let a = maid.expected_utility(&profile, 0, &[]).unwrap();
            let b = maid.expected_utility(&profile, 1, &[]).unwrap();
            assert_abs_diff_eq!(a + b, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn constant_utility_is_returned_verbatim() {
        let maid = Maid::builder()
            .agent("A")
            .decision("D", "A", &["x", "y"], &[])
            .utility("U", "A", &["D"], vec![7.25, 7.25])
            .finish()
            .unwrap();
        let eu = maid.expected_utility(&StrategyProfile::uniform(&maid), 0, &[]).unwrap();
        assert_abs_diff_eq!(eu, 7.25, epsilon = 1e-12);
    }

    #[test]
    fn best_response_against_the_fixed_pitcher() {
        let maid = fixtures::baseball_maid(LeaderConvention::ThreeValueUniformFill);
        let profile = fixtures::baseball_automaton_profile(&maid);
        let steal = maid.node_id("Steal").unwrap();
        let br = maid.local_best_response(&profile, steal).unwrap();
        // stealing loses in expectation whenever someone leads; the no-stakes
        // row ties and falls back to the first action
        assert_eq!(br.table, vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn best_response_in_one_shot_hand_game() {
        let maid = fixtures::rps_maid();
        let a = maid.node_id("Alice").unwrap();
        let b = maid.node_id("Bob").unwrap();
        let mut profile = StrategyProfile::uniform(&maid);
        profile.set("Bob", Strategy::pure(&maid, b, 0)); // rock
        let br = maid.local_best_response(&profile, a).unwrap();
        assert_eq!(br.table, vec![0.0, 1.0, 0.0]); // paper

        profile.set("Bob", Strategy::uniform(&maid, b));
        let br = maid.local_best_response(&profile, a).unwrap();
        assert_eq!(br.table, vec![1.0, 0.0, 0.0]); // indifferent, lowest index
    }

    #[test]
    fn unreachable_rows_fall_back_to_the_first_action() {
        let maid = Maid::builder()
            .agent("A")
            .chance("C", &["a", "b"], &[], vec![1.0, 0.0])
            .decision("D", "A", &["x", "y"], &["C"])
            .utility("U", "A", &["C", "D"], vec![0.0, 4.0, 9.0, 1.0])
            .finish()
            .unwrap();
        let d = maid.node_id("D").unwrap();
        let br = maid.local_best_response(&StrategyProfile::uniform(&maid), d).unwrap();
        // row C=a reachable: prefers y (4 > 0); row C=b unreachable: x
        assert_eq!(br.table, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn indifferent_decision_takes_the_first_action_everywhere() {
        let maid = Maid::builder()
            .agent("A")
            .chance("C", &["a", "b"], &[], vec![0.5, 0.5])
            .decision("D", "A", &["x", "y", "z"], &["C"])
            .utility("U", "A", &["C"], vec![1.0, 2.0])
            .finish()
            .unwrap();
        let d = maid.node_id("D").unwrap();
        let br = maid.local_best_response(&StrategyProfile::uniform(&maid), d).unwrap();
        assert_eq!(br.table, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn impossible_outcome_rows_never_move_expected_utility() {
        // rows pairing no-steal with a throw-out have probability zero; their
        // utility entries are arbitrary bookkeeping and must not leak
        let base = fixtures::baseball_maid(LeaderConvention::ThreeValueUniformFill);
        let profile = fixtures::baseball_automaton_profile(&base);
        let leader = base.node_id("Leader").unwrap();
        let reference = base.expected_utility(&profile, 0, &[(leader, 0)]).unwrap();

        let perturbed = fixtures::baseball_maid_with_dead_rows(LeaderConvention::ThreeValueUniformFill, 999.0);
        let eu = perturbed.expected_utility(&profile, 0, &[(leader, 0)]).unwrap();
        assert_abs_diff_eq!(eu, reference, epsilon = 1e-9);
    }

    #[test]
    fn cycles_are_reported_not_panicked() {
        let maid = Maid::builder()
            .agent("A")
            .chance("X", &["a", "b"], &["Y"], vec![0.5, 0.5, 0.5, 0.5])
            .chance("Y", &["a", "b"], &["X"], vec![0.5, 0.5, 0.5, 0.5])
            .decision("D", "A", &["x"], &[])
            .utility("U", "A", &["D"], vec![0.0])
            .finish()
            .unwrap();
        assert!(maid.validate().has("cycle"));
        assert!(maid.implement_profile(&StrategyProfile::uniform(&maid)).is_err());
    }

    #[test]
    fn utility_parent_is_a_construction_error() {
        let err = Maid::builder()
            .agent("A")
            .decision("D", "A", &["x"], &[])
            .utility("U", "A", &["D"], vec![1.0])
            .utility("V", "A", &["U"], vec![1.0])
            .finish()
            .unwrap_err();
        assert!(err.to_string().contains("cannot be a parent"), "{err}");
    }

    #[test]
    fn best_response_never_hurts_its_owner() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let models = [
            fixtures::baseball_maid(LeaderConvention::ThreeValueUniformFill),
            fixtures::rps_maid(),
        ];
        for maid in &models {
            for _ in 0..8 {
                let mut profile = StrategyProfile::default();
                for d in maid.decisions() {
                    let rows = maid.info_row_count(d);
                    let n = maid.node(d).card().unwrap();
                    let mut table = Vec::new();
                    for _ in 0..rows {
                        table.extend(crate::samples::simplex_point(&mut rng, n));
                    }
                    profile.set(&maid.node(d).name.clone(), Strategy { table });
                }
                for d in maid.decisions() {
                    let crate::maid::NodeKind::Decision { owner, .. } = maid.node(d).kind else {
                        unreachable!()
                    };
                    let before = maid.expected_utility(&profile, owner, &[]).unwrap();
                    let br = maid.local_best_response(&profile, d).unwrap();
                    let mut improved = profile.clone();
                    improved.set(&maid.node(d).name.clone(), br);
                    let after = maid.expected_utility(&improved, owner, &[]).unwrap();
                    assert!(after >= before - 1e-9, "{} {after} < {before}", maid.node(d).name);
                }
            }
        }
    }

    #[test]
    fn level_merge_keeps_indices_aligned() {
        let (levels, rows) = utility_levels(&[3.0, -1.0, 3.0, 0.0]);
        assert_eq!(levels, vec![-1.0, 0.0, 3.0]);
        assert_eq!(rows, vec![2, 0, 2, 1]);
    }
}
