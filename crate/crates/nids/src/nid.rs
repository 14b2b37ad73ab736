//! Webs of linked game models. A web is a set of *blocks*, each an ordinary
//! game model, plus per-block *block-choice* distributions Mod[α,D] saying
//! which block agent α believes produces the behavior at decision D: the
//! block itself (α expects optimization right here) or some other block (a
//! fixed habit, a simplified self-image, a different physical model...).
//!
//! Flattening turns the whole web into a single game: chance and utility
//! nodes downstream of decisions are replicated per agent so every agent can
//! hold its own view of the consequences, each decision D gets one
//! best-response decision node per block, and per-agent belief nodes
//! multiplex between the candidate sources of D's behavior according to the
//! block-choice node. One equilibrium of the flat game then fixes every
//! agent's subjective view simultaneously, and two strategies fall out per
//! (block, decision): what optimization at that spot would do, and what the
//! owner's belief node actually does.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::maid::{Maid, NodeId, NodeKind, Strategy};
use crate::solver::{solve_maid, EquilibriumReport, SolverConfig};
use crate::{Error, Finding, Result, ValidationReport};

// ============================================================================
// Model
// ============================================================================

/// Distribution over block labels for one (observer, decision) pair.
/// Parents name chance or decision nodes of the same block; the table is
/// row-major over parent assignments with the label index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ModCpd {
    pub parents: Vec<String>,
    pub labels: Vec<String>,
    pub table: Vec<f64>,
}

impl ModCpd {
    pub fn unconditional(labels: &[&str], table: Vec<f64>) -> Self {
        ModCpd {
            parents: Vec::new(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            table,
        }
    }

    /// Certainty about a single block.
    pub fn point(label: &str) -> Self {
        ModCpd::unconditional(&[label], vec![1.0])
    }

    /// The view every decider is assumed to hold unless stated otherwise:
    /// the decision is optimized within its own block. Such entries are
    /// omitted when a web is serialized and refilled when it is loaded.
    pub fn is_default_for(&self, own_label: &str) -> bool {
        self.parents.is_empty() && self.labels.len() == 1 && self.labels[0] == own_label && self.table == [1.0]
    }

    /// Labels carrying positive weight in at least one row.
    fn positive_labels(&self) -> Vec<bool> {
        let m = self.labels.len();
        let mut pos = vec![false; m];
        for (i, &p) in self.table.iter().enumerate() {
            if p > 0.0 {
                pos[i % m] = true;
            }
        }
        pos
    }
}

/// One block: a game model plus the block-choice entries declared for it.
#[derive(Debug, Clone)]
pub struct Block {
    pub label: String,
    pub maid: Maid,
    /// Keyed by (observer agent, decision name).
    pub mods: BTreeMap<(String, String), ModCpd>,
}

impl Block {
    pub fn new(label: &str, maid: Maid) -> Self {
        Block {
            label: label.to_string(),
            maid,
            mods: BTreeMap::new(),
        }
    }

    pub fn with_mod(mut self, observer: &str, decision: &str, cpd: ModCpd) -> Self {
        self.mods.insert((observer.to_string(), decision.to_string()), cpd);
        self
    }
}

#[derive(Debug, Clone)]
pub struct NidModel {
    blocks: Vec<Block>,
    root: String,
}

impl NidModel {
    /// Assemble a web. Every decider of a block gets an explicit
    /// block-choice entry for every decision there; pairs the caller did not
    /// specify default to optimizing within the block itself.
    pub fn new(mut blocks: Vec<Block>, root: &str) -> Result<NidModel> {
        let mut seen = BTreeSet::new();
        for b in &blocks {
            if !seen.insert(b.label.clone()) {
                return Err(Error::Model(format!("duplicate block label {:?}", b.label)));
            }
        }
        for block in &mut blocks {
            let deciders: BTreeSet<String> = block
                .maid
                .decisions()
                .iter()
                .map(|&d| owner_name(&block.maid, d).to_string())
                .collect();
            let decision_names: Vec<String> = block
                .maid
                .decisions()
                .iter()
                .map(|&d| block.maid.node(d).name.clone())
                .collect();
            for d in &decision_names {
                for a in &deciders {
                    block
                        .mods
                        .entry((a.clone(), d.clone()))
                        .or_insert_with(|| ModCpd::point(&block.label));
                }
            }
        }
        Ok(NidModel {
            blocks,
            root: root.to_string(),
        })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn block(&self, label: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.label == label)
    }

    /// Union of block agents, in order of first appearance.
    pub fn agents(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for b in &self.blocks {
            for a in b.maid.agents() {
                if !out.iter().any(|x| x == a) {
                    out.push(a.clone());
                }
            }
        }
        out
    }

    // ------------------------------------------------------------------
    // Validation
    // ------------------------------------------------------------------

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let labels: BTreeSet<&str> = self.blocks.iter().map(|b| b.label.as_str()).collect();
        if !labels.contains(self.root.as_str()) {
            report.push("root", format!("root block {:?} is not among the blocks", self.root));
        }

        for block in &self.blocks {
            for f in block.maid.validate().findings {
                report.findings.push(Finding {
                    code: f.code,
                    message: format!("block {:?}: {}", block.label, f.message),
                });
            }
            for ((observer, decision), cpd) in &block.mods {
                self.check_mod(&mut report, &labels, block, observer, decision, cpd);
            }
        }

        self.check_self_loops(&mut report, &labels);
        report
    }

    fn check_mod(
        &self,
        report: &mut ValidationReport,
        labels: &BTreeSet<&str>,
        block: &Block,
        observer: &str,
        decision: &str,
        cpd: &ModCpd,
    ) {
        let at = format!("Mod[{observer},{decision}] in block {:?}", block.label);
        if block.maid.agent_id(observer).is_none() {
            report.push("mod-observer", format!("{at}: no agent named {observer:?} here"));
        }
        let decision_node = block.maid.node_id(decision).map(|id| block.maid.node(id));
        match decision_node {
            None => report.push("mod-decision", format!("{at}: no node named {decision:?} here")),
            Some(n) if !n.is_decision() => {
                report.push("mod-decision", format!("{at}: {decision:?} is not a decision here"))
            }
            _ => {}
        }

        let mut parent_cards = Vec::with_capacity(cpd.parents.len());
        for p in &cpd.parents {
            match block.maid.node_id(p).map(|id| block.maid.node(id)) {
                None => report.push("mod-parent", format!("{at}: unknown parent {p:?}")),
                Some(n) => match n.card() {
                    Some(c) => parent_cards.push(c),
                    None => report.push("mod-parent", format!("{at}: parent {p:?} carries no value")),
                },
            }
        }

        let m = cpd.labels.len();
        if m == 0 {
            report.push("mod-table", format!("{at}: no block labels"));
            return;
        }
        let mut seen = BTreeSet::new();
        for l in &cpd.labels {
            if !seen.insert(l.as_str()) {
                report.push("mod-table", format!("{at}: block {l:?} listed twice"));
            }
        }
        let table_sized = if parent_cards.len() == cpd.parents.len() {
            let rows: usize = parent_cards.iter().product();
            if cpd.table.len() != rows * m {
                report.push(
                    "mod-table",
                    format!("{at}: table has {} entries, expected {}", cpd.table.len(), rows * m),
                );
                false
            } else {
                for (r, row) in cpd.table.chunks(m).enumerate() {
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > crate::bayes::ROW_SUM_TOL {
                        report.push("mod-table", format!("{at}: row {r} sums to {sum}"));
                    }
                    for &p in row {
                        if !(-1e-12..=1.0 + 1e-12).contains(&p) || p.is_nan() {
                            report.push("mod-table", format!("{at}: row {r} holds probability {p}"));
                        }
                    }
                }
                true
            }
        } else {
            false
        };

        // Cross-block targets: every positively weighted block must hold a
        // value-bearing node of the same name, domain, and (for decisions)
        // the same owner, or the multiplexer would be gibberish.
        let own_domain = decision_node.filter(|n| n.is_decision()).and_then(|n| n.domain());
        let own_owner = decision_node
            .filter(|n| n.is_decision())
            .map(|_| owner_name(&block.maid, block.maid.node_id(decision).expect("just resolved")));
        let positive = if table_sized {
            cpd.positive_labels()
        } else {
            vec![true; m]
        };
        for (j, l) in cpd.labels.iter().enumerate() {
            if !labels.contains(l.as_str()) {
                report.push("dangling-block", format!("{at}: no block labeled {l:?}"));
                continue;
            }
            if l == &block.label || !positive[j] {
                continue;
            }
            let target = self.block(l).expect("label checked");
            match target.maid.node_id(decision).map(|id| (id, target.maid.node(id))) {
                None => report.push(
                    "mod-target",
                    format!("{at}: block {l:?} has no node named {decision:?}"),
                ),
                Some((_, n)) if n.is_utility() => report.push(
                    "mod-target",
                    format!("{at}: {decision:?} in block {l:?} is a utility node, not a behavior"),
                ),
                Some((tid, n)) => {
                    if let (Some(want), Some(got)) = (own_domain, n.domain()) {
                        if want != got {
                            report.push(
                                "mod-target-domain",
                                format!(
                                    "{at}: {decision:?} has domain {:?} here but {:?} in block {l:?}",
                                    want, got
                                ),
                            );
                        }
                    }
                    if n.is_decision() {
                        if let Some(want) = own_owner {
                            let got = owner_name(&target.maid, tid);
                            if want != got {
                                report.push(
                                    "mod-target-owner",
                                    format!(
                                        "{at}: {decision:?} belongs to {want:?} here but to {got:?} in block {l:?}"
                                    ),
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    /// Only an owner's view of its own decision can chain blocks into a
    /// loop: everyone else's view bottoms out at the owner's belief node
    /// inside the target block. So a web is circular exactly when the edges
    /// "block K defers decision D of its owner α to block L", taken for one
    /// (α, D) pair at a time, contain a directed cycle.
    fn check_self_loops(&self, report: &mut ValidationReport, labels: &BTreeSet<&str>) {
        let mut edges: BTreeMap<(&str, &str), BTreeMap<&str, BTreeSet<&str>>> = BTreeMap::new();
        for block in &self.blocks {
            for ((observer, decision), cpd) in &block.mods {
                let owns = block
                    .maid
                    .node_id(decision)
                    .map(|id| {
                        block.maid.node(id).is_decision() && owner_name(&block.maid, id) == observer
                    })
                    .unwrap_or(false);
                if !owns {
                    continue;
                }
                let positive = cpd.positive_labels();
                for (j, l) in cpd.labels.iter().enumerate() {
                    if positive[j] && l != &block.label && labels.contains(l.as_str()) {
                        edges
                            .entry((observer.as_str(), decision.as_str()))
                            .or_default()
                            .entry(block.label.as_str())
                            .or_default()
                            .insert(l.as_str());
                    }
                }
            }
        }
        for ((agent, decision), graph) in &edges {
            if let Some(cycle) = find_cycle(graph) {
                report.push(
                    "self-loop",
                    format!(
                        "agent {agent:?} defers its own decision {decision:?} around a loop of blocks: {}",
                        cycle.join(" -> ")
                    ),
                );
            }
        }
    }

    // ------------------------------------------------------------------
    // Flattening
    // ------------------------------------------------------------------

    /// Flatten the web into one game. Refuses models with any validation
    /// finding other than imperfect recall (flat games routinely observe
    /// beliefs about decisions rather than the decisions themselves, so
    /// recall findings are expected and harmless).
    pub fn compile(&self) -> Result<CompiledNid> {
        let defects: Vec<String> = self
            .validate()
            .findings
            .into_iter()
            .filter(|f| f.code != "perfect-recall")
            .map(|f| format!("{}: {}", f.code, f.message))
            .collect();
        if !defects.is_empty() {
            return Err(Error::Model(format!("cannot flatten this web: {}", defects.join("; "))));
        }

        let compiler = Compiler {
            nid: self,
            by_label: self
                .blocks
                .iter()
                .enumerate()
                .map(|(i, b)| (b.label.clone(), i))
                .collect(),
            descendant: self.blocks.iter().map(|b| decision_descendants(&b.maid)).collect(),
        };
        compiler.run()
    }

    /// Flatten, solve, and read back both strategies per (block, decision).
    pub fn solve(&self, cfg: &SolverConfig) -> Result<NidEquilibrium> {
        let compiled = self.compile()?;
        let report = solve_maid(&compiled.maid, cfg)?;
        let (best_response, actually_played) = compiled.strategies(&report)?;
        Ok(NidEquilibrium {
            best_response,
            actually_played,
            report,
        })
    }
}

fn owner_name(maid: &Maid, node: NodeId) -> &str {
    match &maid.node(node).kind {
        NodeKind::Decision { owner, .. } | NodeKind::Utility { owner, .. } => &maid.agents()[*owner],
        NodeKind::Chance { .. } => unreachable!("chance nodes have no owner"),
    }
}

/// Chance and utility nodes lying strictly downstream of any decision.
fn decision_descendants(maid: &Maid) -> Vec<bool> {
    let n = maid.nodes().len();
    let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for v in 0..n {
        for &p in maid.node(v).parents() {
            children[p].push(v);
        }
    }
    let mut mark = vec![false; n];
    let mut queue: VecDeque<NodeId> = maid.decisions().into_iter().collect();
    while let Some(v) = queue.pop_front() {
        for &c in &children[v] {
            if !mark[c] {
                mark[c] = true;
                queue.push_back(c);
            }
        }
    }
    mark
}

/// First directed cycle found, as a label path ending where it started.
fn find_cycle<'a>(graph: &BTreeMap<&'a str, BTreeSet<&'a str>>) -> Option<Vec<&'a str>> {
    fn dfs<'a>(
        v: &'a str,
        graph: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        state: &mut BTreeMap<&'a str, u8>,
        path: &mut Vec<&'a str>,
    ) -> Option<Vec<&'a str>> {
        state.insert(v, 1);
        path.push(v);
        if let Some(next) = graph.get(v) {
            for &w in next {
                match state.get(w).copied().unwrap_or(0) {
                    0 => {
                        if let Some(c) = dfs(w, graph, state, path) {
                            return Some(c);
                        }
                    }
                    1 => {
                        let start = path.iter().position(|&p| p == w).expect("on path");
                        let mut cycle = path[start..].to_vec();
                        cycle.push(w);
                        return Some(cycle);
                    }
                    _ => {}
                }
            }
        }
        path.pop();
        state.insert(v, 2);
        None
    }
    let mut verts: BTreeSet<&str> = graph.keys().copied().collect();
    for targets in graph.values() {
        verts.extend(targets.iter().copied());
    }
    let mut state = BTreeMap::new();
    for v in verts {
        if state.get(v).copied().unwrap_or(0) == 0 {
            if let Some(c) = dfs(v, graph, &mut state, &mut Vec::new()) {
                return Some(c);
            }
        }
    }
    None
}

// ============================================================================
// Compiled form
// ============================================================================

/// What a flattened node stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameRole {
    /// Single copy of a chance node no decision can influence.
    Shared,
    /// One agent's private copy of a chance or utility node.
    Replica,
    /// The decision node optimizing one block decision.
    BestResponse,
    /// One agent's belief about the behavior at one block decision.
    Belief,
    /// A block-choice node steering one belief node.
    BlockChoice,
}

#[derive(Debug, Clone)]
pub struct NameRecord {
    pub generated: String,
    pub block: String,
    /// Name of the originating node within the block (for best-response,
    /// belief, and block-choice records: the decision's name).
    pub source: String,
    /// Replica owner, belief holder, or block-choice observer.
    pub agent: Option<String>,
    pub role: NameRole,
}

/// A flattened web: the game itself plus the name ledger mapping every
/// generated node back to (block, source node, agent, role).
#[derive(Debug, Clone)]
pub struct CompiledNid {
    pub maid: Maid,
    pub names: Vec<NameRecord>,
    /// (block, decision) pairs whose owner's view of that decision is the
    /// default point at the block itself. There the owner's belief is the
    /// optimizing node, so the two strategies coincide by construction.
    pub self_directed: BTreeSet<(String, String)>,
}

fn shared_name(block: &str, node: &str) -> String {
    format!("{node}@{block}")
}

fn replica_name(block: &str, node: &str, agent: &str) -> String {
    format!("{node}@{block}#{agent}")
}

fn br_name(block: &str, decision: &str) -> String {
    format!("BR[{decision}]@{block}")
}

fn choice_name(block: &str, observer: &str, decision: &str) -> String {
    format!("Mod[{observer},{decision}]@{block}")
}

impl CompiledNid {
    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.maid.node_id(name)
    }

    pub fn best_response_node(&self, block: &str, decision: &str) -> Option<NodeId> {
        self.maid.node_id(&br_name(block, decision))
    }

    pub fn belief_node(&self, block: &str, decision: &str, agent: &str) -> Option<NodeId> {
        self.maid.node_id(&replica_name(block, decision, agent))
    }

    /// Read both strategies per (block, decision) out of a solved profile:
    /// what the optimizing node does, and what the owner's belief node does
    /// conditioned on the same informational parents. Rows the flat network
    /// cannot reach fall back to the optimizing rule.
    pub fn strategies(
        &self,
        report: &EquilibriumReport,
    ) -> Result<(BTreeMap<(String, String), Strategy>, BTreeMap<(String, String), Strategy>)> {
        let net = self.maid.implement_profile(&report.profile)?;
        let mut best_response = BTreeMap::new();
        let mut actually_played = BTreeMap::new();
        for rec in &self.names {
            if rec.role != NameRole::BestResponse {
                continue;
            }
            let br = self.maid.node_id(&rec.generated).expect("ledger matches maid");
            let owner = owner_name(&self.maid, br).to_string();
            let chosen = report
                .profile
                .get(&rec.generated)
                .cloned()
                .ok_or_else(|| Error::Model(format!("profile misses {:?}", rec.generated)))?;
            let key = (rec.block.clone(), rec.source.clone());
            let table = if self.self_directed.contains(&key) {
                chosen.table.clone()
            } else {
                let belief = self
                    .maid
                    .node_id(&replica_name(&rec.block, &rec.source, &owner))
                    .expect("ledger matches maid");
                let n_actions = self.maid.node(br).card().expect("decision");
                let rows = self.maid.info_row_count(br);
                let mut table = Vec::with_capacity(rows * n_actions);
                for r in 0..rows {
                    let pa = self.maid.row_assignment(br, r);
                    match net.query_marginal(belief, &pa) {
                        Ok(dist) => table.extend(dist),
                        Err(Error::Query(_)) => table.extend_from_slice(chosen.row(r, n_actions)),
                        Err(e) => return Err(e),
                    }
                }
                table
            };
            best_response.insert(key.clone(), chosen);
            actually_played.insert(key, Strategy { table });
        }
        Ok((best_response, actually_played))
    }
}

/// A solved web. Both maps share the same (block label, decision name) keys
/// and row shapes.
#[derive(Debug, Clone)]
pub struct NidEquilibrium {
    /// What optimization at each (block, decision) would do.
    pub best_response: BTreeMap<(String, String), Strategy>,
    /// What the owner's belief node actually does there, which differs from
    /// the best response whenever the owner's self-view leaves the block.
    pub actually_played: BTreeMap<(String, String), Strategy>,
    pub report: EquilibriumReport,
}

// ============================================================================
// The flattening pass
// ============================================================================

struct Compiler<'a> {
    nid: &'a NidModel,
    by_label: BTreeMap<String, usize>,
    descendant: Vec<Vec<bool>>,
}

impl Compiler<'_> {
    /// Flat-game name for agent `agent`'s view of a block node: decisions
    /// resolve to belief nodes, downstream chance nodes to the agent's
    /// replica, anything upstream of all decisions to the single shared
    /// copy, and utilities to their owner's replica.
    fn copy_name(&self, block_idx: usize, node: NodeId, agent: &str) -> String {
        let block = &self.nid.blocks[block_idx];
        let n = block.maid.node(node);
        match &n.kind {
            NodeKind::Decision { .. } => replica_name(&block.label, &n.name, agent),
            NodeKind::Utility { .. } => {
                replica_name(&block.label, &n.name, owner_name(&block.maid, node))
            }
            NodeKind::Chance { .. } if self.descendant[block_idx][node] => {
                replica_name(&block.label, &n.name, agent)
            }
            NodeKind::Chance { .. } => shared_name(&block.label, &n.name),
        }
    }

    fn run(&self) -> Result<CompiledNid> {
        let agents = self.nid.agents();
        let any_agent = agents.first().map(|s| s.as_str()).unwrap_or("").to_string();
        let mut b = Maid::builder();
        for a in &agents {
            b = b.agent_owned(a.clone());
        }
        let mut names: Vec<NameRecord> = Vec::new();
        let mut self_directed: BTreeSet<(String, String)> = BTreeSet::new();

        for (bi, block) in self.nid.blocks.iter().enumerate() {
            let maid = &block.maid;
            for (id, node) in maid.nodes().iter().enumerate() {
                match &node.kind {
                    NodeKind::Chance { states, parents, table } => {
                        if self.descendant[bi][id] {
                            for a in &agents {
                                b = b.chance_owned(
                                    replica_name(&block.label, &node.name, a),
                                    states.clone(),
                                    parents.iter().map(|&p| self.copy_name(bi, p, a)).collect(),
                                    table.clone(),
                                );
                                names.push(NameRecord {
                                    generated: replica_name(&block.label, &node.name, a),
                                    block: block.label.clone(),
                                    source: node.name.clone(),
                                    agent: Some(a.clone()),
                                    role: NameRole::Replica,
                                });
                            }
                        } else {
                            // parents of an upstream node are upstream too,
                            // so the viewing agent is irrelevant here
                            b = b.chance_owned(
                                shared_name(&block.label, &node.name),
                                states.clone(),
                                parents
                                    .iter()
                                    .map(|&p| self.copy_name(bi, p, &any_agent))
                                    .collect(),
                                table.clone(),
                            );
                            names.push(NameRecord {
                                generated: shared_name(&block.label, &node.name),
                                block: block.label.clone(),
                                source: node.name.clone(),
                                agent: None,
                                role: NameRole::Shared,
                            });
                        }
                    }
                    NodeKind::Utility { owner, parents, table } => {
                        // one copy, through the owner's eyes: the owner is
                        // the only agent whose optimization consults it
                        let w = maid.agents()[*owner].clone();
                        b = b.utility_owned(
                            replica_name(&block.label, &node.name, &w),
                            w.clone(),
                            parents.iter().map(|&p| self.copy_name(bi, p, &w)).collect(),
                            table.clone(),
                        );
                        names.push(NameRecord {
                            generated: replica_name(&block.label, &node.name, &w),
                            block: block.label.clone(),
                            source: node.name.clone(),
                            agent: Some(w),
                            role: NameRole::Replica,
                        });
                    }
                    NodeKind::Decision { owner, actions, info_parents } => {
                        let w = maid.agents()[*owner].clone();
                        b = b.decision_owned(
                            br_name(&block.label, &node.name),
                            w.clone(),
                            actions.clone(),
                            info_parents.iter().map(|&p| self.copy_name(bi, p, &w)).collect(),
                        );
                        names.push(NameRecord {
                            generated: br_name(&block.label, &node.name),
                            block: block.label.clone(),
                            source: node.name.clone(),
                            agent: Some(w.clone()),
                            role: NameRole::BestResponse,
                        });
                        let own_view = block.mods.get(&(w.clone(), node.name.clone()));
                        if own_view.is_some_and(|m| m.is_default_for(&block.label)) {
                            self_directed.insert((block.label.clone(), node.name.clone()));
                        }
                        for a in &agents {
                            b = self.belief_nodes(b, &mut names, bi, id, a, &w, actions)?;
                        }
                    }
                }
            }
        }

        let maid = b.finish()?;
        let post = maid.validate();
        if let Some(f) = post.findings.iter().find(|f| f.code != "perfect-recall") {
            return Err(Error::Model(format!(
                "flattening produced a defective game: {}: {}",
                f.code, f.message
            )));
        }
        debug_assert_eq!(names.len(), maid.nodes().len());
        Ok(CompiledNid {
            maid,
            names,
            self_directed,
        })
    }

    /// Emit agent `a`'s block-choice and belief nodes for one decision.
    fn belief_nodes(
        &self,
        mut b: crate::maid::MaidBuilder,
        names: &mut Vec<NameRecord>,
        block_idx: usize,
        decision: NodeId,
        a: &str,
        owner: &str,
        actions: &[String],
    ) -> Result<crate::maid::MaidBuilder> {
        let block = &self.nid.blocks[block_idx];
        let d_name = &block.maid.node(decision).name;
        let cpd = block
            .mods
            .get(&(a.to_string(), d_name.clone()))
            .cloned()
            .unwrap_or_else(|| ModCpd::point(&block.label));

        let choice = choice_name(&block.label, a, d_name);
        b = b.chance_owned(
            choice.clone(),
            cpd.labels.clone(),
            cpd.parents
                .iter()
                .map(|p| {
                    let pid = block.maid.node_id(p).expect("validated parent");
                    self.copy_name(block_idx, pid, a)
                })
                .collect(),
            cpd.table.clone(),
        );
        names.push(NameRecord {
            generated: choice.clone(),
            block: block.label.clone(),
            source: d_name.clone(),
            agent: Some(a.to_string()),
            role: NameRole::BlockChoice,
        });

        // One candidate source of the decision's behavior per positively
        // weighted label: the best-response node (own view of an owned
        // decision), the owner's belief node here, or the owner's copy in
        // the named block. Zero-weight labels get no edge; their multiplexer
        // rows are unreachable and pin the first action.
        let positive = cpd.positive_labels();
        let d_card = actions.len();
        let mut src_names: Vec<String> = Vec::new();
        let mut src_pos: Vec<Option<usize>> = Vec::with_capacity(cpd.labels.len());
        for (j, l) in cpd.labels.iter().enumerate() {
            let src = if l == &block.label {
                Some(if a == owner {
                    br_name(&block.label, d_name)
                } else {
                    replica_name(&block.label, d_name, owner)
                })
            } else if positive[j] {
                let ti = self.by_label[l.as_str()];
                let tid = self.nid.blocks[ti].maid.node_id(d_name).expect("validated target");
                Some(self.copy_name(ti, tid, owner))
            } else {
                None
            };
            src_pos.push(src.map(|s| {
                src_names.push(s);
                src_names.len() - 1
            }));
        }

        let t = src_names.len();
        let rows = cpd.labels.len() * d_card.pow(t as u32);
        let mut table = vec![0.0; rows * d_card];
        for row in 0..rows {
            let mut rem = row;
            let mut vals = vec![0usize; t];
            for i in (0..t).rev() {
                vals[i] = rem % d_card;
                rem /= d_card;
            }
            let pick = src_pos[rem].map(|p| vals[p]).unwrap_or(0);
            table[row * d_card + pick] = 1.0;
        }
        let mut parents = vec![choice];
        parents.extend(src_names);
        b = b.chance_owned(
            replica_name(&block.label, d_name, a),
            actions.to_vec(),
            parents,
            table,
        );
        names.push(NameRecord {
            generated: replica_name(&block.label, d_name, a),
            block: block.label.clone(),
            source: d_name.clone(),
            agent: Some(a.to_string()),
            role: NameRole::Belief,
        });
        Ok(b)
    }
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{
        baseball_maid, circular_speed_nid, committee_nid, reputation_baseball_nid, rps_maid,
        runner_speed_nid, sales_bias_nid, two_attempt_baseball_nid, LEADER_CONVENTIONS,
    };
    use crate::maid::StrategyProfile;
    use crate::solver::{solve_maid, verify_epsilon_nash, SolverConfig};

    fn key(block: &str, decision: &str) -> (String, String) {
        (block.to_string(), decision.to_string())
    }

    fn assert_row(s: &Strategy, r: usize, expect: &[f64], tol: f64) {
        let got = s.row(r, expect.len());
        for (g, e) in got.iter().zip(expect) {
            assert!(
                (g - e).abs() <= tol,
                "row {r}: expected {expect:?}, got {got:?}"
            );
        }
    }

    fn assert_tables_eq(a: &Strategy, b: &Strategy, tol: f64) {
        assert_eq!(a.table.len(), b.table.len());
        for (x, y) in a.table.iter().zip(&b.table) {
            assert!((x - y).abs() <= tol, "{:?} vs {:?}", a.table, b.table);
        }
    }

    // ------------------------------------------------------------------
    // Model assembly and validation
    // ------------------------------------------------------------------

    #[test]
    fn default_views_fill_in_for_every_decider() {
        let web = NidModel::new(
            vec![Block::new("Game", baseball_maid(LEADER_CONVENTIONS[0]))],
            "Game",
        )
        .unwrap();
        let mods = &web.blocks()[0].mods;
        assert_eq!(mods.len(), 4);
        for observer in ["Alice", "Bob"] {
            for decision in ["Steal", "PitchOut"] {
                let cpd = &mods[&key(observer, decision)];
                assert!(cpd.is_default_for("Game"));
            }
        }
    }

    #[test]
    fn defective_views_are_reported() {
        let decision_block = |label: &str, owner: &str| {
            let maid = Maid::builder()
                .agent(owner)
                .decision("D", owner, &["x", "y"], &[])
                .finish()
                .unwrap();
            Block::new(label, maid)
        };

        let narrow = Maid::builder().chance("D", &["x"], &[], vec![1.0]).finish().unwrap();
        let web = NidModel::new(
            vec![
                decision_block("K", "A")
                    .with_mod("A", "D", ModCpd::unconditional(&["K", "L", "Nowhere"], vec![0.5, 0.25, 0.25]))
                    .with_mod("Z", "D", ModCpd::point("K"))
                    .with_mod("A", "E", ModCpd::point("K")),
                Block::new("L", narrow),
            ],
            "Missing",
        )
        .unwrap();
        let report = web.validate();
        for code in ["root", "dangling-block", "mod-target-domain", "mod-observer", "mod-decision"] {
            assert!(report.has(code), "missing {code} in:\n{report}");
        }

        let web = NidModel::new(
            vec![decision_block("K", "A").with_mod(
                "A",
                "D",
                ModCpd {
                    parents: vec!["Ghost".to_string()],
                    labels: vec!["K".to_string()],
                    table: vec![1.0],
                },
            )],
            "K",
        )
        .unwrap();
        assert!(web.validate().has("mod-parent"));

        let web = NidModel::new(
            vec![decision_block("K", "A").with_mod("A", "D", ModCpd::unconditional(&["K"], vec![0.7]))],
            "K",
        )
        .unwrap();
        assert!(web.validate().has("mod-table"));

        let web = NidModel::new(
            vec![
                decision_block("K", "A").with_mod("A", "D", ModCpd::point("L")),
                decision_block("L", "B"),
            ],
            "K",
        )
        .unwrap();
        assert!(web.validate().has("mod-target-owner"));

        let chance_only = Maid::builder().chance("C", &["x", "y"], &[], vec![0.5, 0.5]).finish().unwrap();
        let web = NidModel::new(
            vec![
                decision_block("K", "A").with_mod("A", "D", ModCpd::point("L")),
                Block::new("L", chance_only),
            ],
            "K",
        )
        .unwrap();
        assert!(web.validate().has("mod-target"));
    }

    #[test]
    fn self_loops_are_flagged_and_refused() {
        let block = |label: &str, to: &str| {
            let maid = Maid::builder()
                .agent("A")
                .decision("D", "A", &["x", "y"], &[])
                .finish()
                .unwrap();
            Block::new(label, maid).with_mod("A", "D", ModCpd::point(to))
        };
        let web = NidModel::new(vec![block("K", "L"), block("L", "K")], "K").unwrap();
        let report = web.validate();
        assert!(report.has("self-loop"), "{report}");
        let msg = &report.findings.iter().find(|f| f.code == "self-loop").unwrap().message;
        assert!(msg.contains("K") && msg.contains("L"), "{msg}");
        assert!(web.compile().is_err());
    }

    #[test]
    fn alternating_label_loops_are_legal() {
        for conv in LEADER_CONVENTIONS {
            let web = circular_speed_nid(conv);
            let report = web.validate();
            assert!(report.is_clean(), "{report}");
            web.compile().unwrap();
        }
    }

    // ------------------------------------------------------------------
    // Flattening structure
    // ------------------------------------------------------------------

    #[test]
    fn flattening_reproduces_the_reputation_wiring() {
        let web = reputation_baseball_nid(LEADER_CONVENTIONS[0]);
        let compiled = web.compile().unwrap();
        let m = &compiled.maid;

        assert_eq!(m.nodes().len(), 19);
        assert_eq!(compiled.names.len(), 19);
        let generated: BTreeSet<&str> = compiled.names.iter().map(|r| r.generated.as_str()).collect();
        let actual: BTreeSet<&str> = m.nodes().iter().map(|n| n.name.as_str()).collect();
        assert_eq!(generated, actual);

        for name in [
            "Leader@Top-level",
            "Leader@AlwaysSteal",
            "Steal@AlwaysSteal",
            "PitchOut@AlwaysPitch",
            "BR[Steal]@Top-level",
            "BR[PitchOut]@Top-level",
            "ThrownOut@Top-level#Alice",
            "ThrownOut@Top-level#Bob",
            "UAlice@Top-level#Alice",
            "UBob@Top-level#Bob",
        ] {
            assert!(m.node_id(name).is_some(), "missing {name}");
        }
        assert!(m.node_id("UAlice@Top-level#Bob").is_none());
        assert!(m.node_id("Steal@Top-level").is_none());

        // Bob's view of the steal multiplexes between Alice's own view and
        // the habit block; Alice's view of her steal follows her plan.
        let bob_view = m.node_id("Steal@Top-level#Bob").unwrap();
        let parents: Vec<&str> = m.node(bob_view).parents().iter().map(|&p| m.node(p).name.as_str()).collect();
        assert_eq!(
            parents,
            vec!["Mod[Bob,Steal]@Top-level", "Steal@Top-level#Alice", "Steal@AlwaysSteal"]
        );
        let alice_view = m.node_id("Steal@Top-level#Alice").unwrap();
        let parents: Vec<&str> = m.node(alice_view).parents().iter().map(|&p| m.node(p).name.as_str()).collect();
        assert_eq!(parents, vec!["Mod[Alice,Steal]@Top-level", "BR[Steal]@Top-level"]);
        let alice_pitch_view = m.node_id("PitchOut@Top-level#Alice").unwrap();
        let parents: Vec<&str> = m
            .node(alice_pitch_view)
            .parents()
            .iter()
            .map(|&p| m.node(p).name.as_str())
            .collect();
        assert_eq!(
            parents,
            vec!["Mod[Alice,PitchOut]@Top-level", "PitchOut@Top-level#Bob", "PitchOut@AlwaysPitch"]
        );

        // recall findings are expected in the flat game, nothing else is
        let post = m.validate();
        assert!(post.findings.iter().all(|f| f.code == "perfect-recall"));
    }

    // ------------------------------------------------------------------
    // Solving: degenerate and scenario webs
    // ------------------------------------------------------------------

    #[test]
    fn single_block_webs_solve_like_the_plain_game() {
        let cfg = SolverConfig::default();
        for conv in LEADER_CONVENTIONS {
            let web = NidModel::new(vec![Block::new("Game", baseball_maid(conv))], "Game").unwrap();
            let eq = web.solve(&cfg).unwrap();
            let direct = solve_maid(&baseball_maid(conv), &cfg).unwrap();
            assert!(eq.report.converged && direct.converged);
            for d in ["Steal", "PitchOut"] {
                let flat = &eq.best_response[&key("Game", d)];
                assert_tables_eq(flat, direct.profile.get(d).unwrap(), 1e-9);
                assert_tables_eq(&eq.actually_played[&key("Game", d)], flat, 1e-9);
            }
        }

        let web = NidModel::new(vec![Block::new("Game", rps_maid())], "Game").unwrap();
        let eq = web.solve(&cfg).unwrap();
        let direct = solve_maid(&rps_maid(), &cfg).unwrap();
        assert!(eq.report.converged);
        for d in ["Alice", "Bob"] {
            assert_tables_eq(&eq.best_response[&key("Game", d)], direct.profile.get(d).unwrap(), 1e-9);
        }
    }

    #[test]
    fn rational_self_views_make_played_equal_best_response() {
        let cfg = SolverConfig::default();
        for conv in LEADER_CONVENTIONS {
            for web in [reputation_baseball_nid(conv), runner_speed_nid(conv), circular_speed_nid(conv)] {
                let eq = web.solve(&cfg).unwrap();
                assert!(eq.report.converged);
                let theta_keys: Vec<_> = eq.best_response.keys().collect();
                let phi_keys: Vec<_> = eq.actually_played.keys().collect();
                assert_eq!(theta_keys, phi_keys);
                // Default self-views leave no room for drift at the
                // owner's own decisions: bitwise equal, not just close.
                for (k, theta) in &eq.best_response {
                    assert_eq!(theta.table, eq.actually_played[k].table, "{k:?}");
                }
            }
        }

        // A self-view written as an explicit point (a second label with
        // weight zero) goes through the belief machinery instead, and must
        // land on the same strategy.
        let main = Block::new("Main", rps_maid()).with_mod(
            "Alice",
            "Alice",
            ModCpd {
                parents: vec![],
                labels: vec!["Main".into(), "Echo".into()],
                table: vec![1.0, 0.0],
            },
        );
        let echo = Block::new("Echo", rps_maid());
        let web = NidModel::new(vec![main, echo], "Main").unwrap();
        let eq = web.solve(&cfg).unwrap();
        let k = key("Main", "Alice");
        assert_tables_eq(&eq.best_response[&k], &eq.actually_played[&k], 1e-9);
    }

    #[test]
    fn reputations_change_beliefs_but_not_the_play() {
        let cfg = SolverConfig::default();
        for conv in LEADER_CONVENTIONS {
            let web = reputation_baseball_nid(conv);
            let compiled = web.compile().unwrap();
            let report = solve_maid(&compiled.maid, &cfg).unwrap();
            assert!(report.converged);
            let (theta, _) = compiled.strategies(&report).unwrap();

            // stealing stays dominated and the pitch out pays against a
            // 0.7-credible stealing habit, whoever leads
            for r in 0..2 {
                assert_row(&theta[&key("Top-level", "Steal")], r, &[0.0, 1.0], 1e-9);
                assert_row(&theta[&key("Top-level", "PitchOut")], r, &[1.0, 0.0], 1e-9);
            }

            // Bob's belief node sees the habit: 0.3 * never + 0.7 * always
            let net = compiled.maid.implement_profile(&report.profile).unwrap();
            let leader = compiled.node("Leader@Top-level").unwrap();
            let bob_view = compiled.belief_node("Top-level", "Steal", "Bob").unwrap();
            for l in 0..2 {
                let dist = net.query_marginal(bob_view, &[(leader, l)]).unwrap();
                assert!((dist[0] - 0.7).abs() <= 1e-9, "{dist:?}");
            }
            // Alice's pitch view mixes her plan with the pitching habit,
            // and both always pitch here
            let alice_view = compiled.belief_node("Top-level", "PitchOut", "Alice").unwrap();
            for l in 0..2 {
                let dist = net.query_marginal(alice_view, &[(leader, l)]).unwrap();
                assert!((dist[0] - 1.0).abs() <= 1e-9, "{dist:?}");
            }
        }
    }

    #[test]
    fn self_bias_is_played_despite_a_rational_plan() {
        let eq = sales_bias_nid().solve(&SolverConfig::default()).unwrap();
        assert!(eq.report.converged);
        // advertising pays once the biased follow-up is priced in
        assert_row(&eq.best_response[&key("Top-level", "Advertise")], 0, &[1.0, 0.0], 1e-9);
        // the optimistic self increases supply after advertising
        assert_row(&eq.best_response[&key("Optimism", "Increase")], 0, &[1.0, 0.0], 1e-9);
        // and that, not the top-level plan, is what actually happens
        assert_row(&eq.actually_played[&key("Top-level", "Increase")], 0, &[1.0, 0.0], 1e-9);
        assert_row(&eq.actually_played[&key("Top-level", "Advertise")], 0, &[1.0, 0.0], 1e-9);
    }

    #[test]
    fn pressure_on_late_pitches_shows_in_the_played_strategy() {
        let cfg = SolverConfig::default();
        for conv in LEADER_CONVENTIONS {
            let web = two_attempt_baseball_nid(conv);
            let eq = web.solve(&cfg).unwrap();
            assert!(eq.report.converged);
            // nobody steals or pitches out on merit, in either inning
            for l in 0..2 {
                assert_row(&eq.best_response[&key("Top-level", "Steal1")], l, &[0.0, 1.0], 1e-9);
                assert_row(&eq.best_response[&key("Top-level", "PitchOut1")], l, &[0.0, 1.0], 1e-9);
                // the reachable second-stage row: nothing happened so far
                let quiet = l * 8 + 7;
                assert_row(&eq.best_response[&key("Top-level", "Steal2")], quiet, &[0.0, 1.0], 1e-9);
                assert_row(&eq.best_response[&key("Top-level", "PitchOut2")], quiet, &[0.0, 1.0], 1e-9);
                // but Bob believes he caves to the crowd 0.3 of the time
                assert_row(&eq.actually_played[&key("Top-level", "PitchOut2")], quiet, &[0.3, 0.7], 1e-9);
                assert_row(&eq.actually_played[&key("Top-level", "PitchOut1")], l, &[0.0, 1.0], 1e-9);
            }
        }
    }

    #[test]
    fn speed_disagreement_splits_the_blocks() {
        let cfg = SolverConfig::default();
        for conv in LEADER_CONVENTIONS {
            let web = runner_speed_nid(conv);
            let compiled = web.compile().unwrap();
            let report = solve_maid(&compiled.maid, &cfg).unwrap();
            assert!(report.converged);
            let (theta, _) = compiled.strategies(&report).unwrap();
            for l in 0..2 {
                // slow world: stay put; Bob still pitches out because he
                // mostly believes the fast-runner picture where Alice goes
                assert_row(&theta[&key("Top-level", "Steal")], l, &[0.0, 1.0], 1e-9);
                assert_row(&theta[&key("Top-level", "PitchOut")], l, &[1.0, 0.0], 1e-9);
                // fast world: running pays even into a pitch out
                assert_row(&theta[&key("FastRunner", "Steal")], l, &[1.0, 0.0], 1e-9);
                assert_row(&theta[&key("FastRunner", "PitchOut")], l, &[1.0, 0.0], 1e-9);
            }
            let net = compiled.maid.implement_profile(&report.profile).unwrap();
            let leader = compiled.node("Leader@Top-level").unwrap();
            let bob_view = compiled.belief_node("Top-level", "Steal", "Bob").unwrap();
            for l in 0..2 {
                let dist = net.query_marginal(bob_view, &[(leader, l)]).unwrap();
                assert!((dist[0] - 0.8).abs() <= 1e-9, "{dist:?}");
            }
        }
    }

    #[test]
    fn circular_views_still_solve() {
        let cfg = SolverConfig::default();
        for conv in LEADER_CONVENTIONS {
            let eq = circular_speed_nid(conv).solve(&cfg).unwrap();
            assert!(eq.report.converged);
            for l in 0..2 {
                assert_row(&eq.best_response[&key("Top-level", "Steal")], l, &[0.0, 1.0], 1e-9);
                assert_row(&eq.best_response[&key("Top-level", "PitchOut")], l, &[1.0, 0.0], 1e-9);
                assert_row(&eq.best_response[&key("FastRunner", "Steal")], l, &[1.0, 0.0], 1e-9);
                assert_row(&eq.best_response[&key("FastRunner", "PitchOut")], l, &[1.0, 0.0], 1e-9);
            }
        }
    }

    #[test]
    fn committee_settles_where_every_view_agrees() {
        let cfg = SolverConfig::default();
        let web = committee_nid();
        let compiled = web.compile().unwrap();
        let eq = web.solve(&cfg).unwrap();
        assert!(eq.report.converged);
        for d in ["VoteA", "VoteB", "VoteC"] {
            assert_row(&eq.best_response[&key("Top-level", d)], 0, &[0.0, 1.0, 0.0], 1e-9);
            assert_tables_eq(
                &eq.actually_played[&key("Top-level", d)],
                &eq.best_response[&key("Top-level", d)],
                1e-9,
            );
        }

        // another stable profile: Alice backs Carol, Carol takes it
        let mut p = StrategyProfile::default();
        p.set("BR[VoteA]@Top-level", Strategy { table: vec![0.0, 0.0, 1.0] });
        p.set("BR[VoteB]@Top-level", Strategy { table: vec![0.0, 1.0, 0.0] });
        p.set("BR[VoteC]@Top-level", Strategy { table: vec![0.0, 0.0, 1.0] });
        let report = verify_epsilon_nash(&compiled.maid, &p, 1e-9).unwrap();
        assert!(report.converged, "max regret {}", report.max_regret);

        // but Carol mixing evenly between herself and Bob is not stable
        p.set("BR[VoteC]@Top-level", Strategy { table: vec![0.0, 0.5, 0.5] });
        let report = verify_epsilon_nash(&compiled.maid, &p, 1e-6).unwrap();
        assert!(report.max_regret > 0.4, "max regret {}", report.max_regret);
    }

    // ------------------------------------------------------------------
    // Strategy extraction
    // ------------------------------------------------------------------

    fn habit_web(own_weight: f64, habit_row: Vec<f64>) -> NidModel {
        let game = Maid::builder()
            .agent("A")
            .decision("D", "A", &["a", "b"], &[])
            .finish()
            .unwrap();
        let habit = Maid::builder().chance("D", &["a", "b"], &[], habit_row).finish().unwrap();
        NidModel::new(
            vec![
                Block::new("Game", game).with_mod(
                    "A",
                    "D",
                    ModCpd::unconditional(&["Game", "Habit"], vec![own_weight, 1.0 - own_weight]),
                ),
                Block::new("Habit", habit),
            ],
            "Game",
        )
        .unwrap()
    }

    #[test]
    fn played_strategy_mixes_the_plan_with_the_believed_habit() {
        let web = habit_web(0.3, vec![1.0, 0.0]);
        let compiled = web.compile().unwrap();
        let mut profile = StrategyProfile::default();
        profile.set("BR[D]@Game", Strategy { table: vec![0.35, 0.65] });
        let report = EquilibriumReport {
            profile,
            per_decision_regret: BTreeMap::new(),
            max_regret: 0.0,
            method_used: "verification",
            converged: true,
        };
        let (theta, phi) = compiled.strategies(&report).unwrap();
        assert_row(&theta[&key("Game", "D")], 0, &[0.35, 0.65], 0.0);
        // 0.3 * 0.35 + 0.7 * 1.0 exactly
        assert_row(&phi[&key("Game", "D")], 0, &[0.805, 0.195], 1e-12);
    }

    #[test]
    fn point_mass_views_delegate_the_whole_rule() {
        let web = habit_web(0.0, vec![0.2, 0.8]);
        let compiled = web.compile().unwrap();
        let mut profile = StrategyProfile::default();
        profile.set("BR[D]@Game", Strategy { table: vec![0.9, 0.1] });
        let net = compiled.maid.implement_profile(&profile).unwrap();
        let view = compiled.belief_node("Game", "D", "A").unwrap();
        let dist = net.query_marginal(view, &[]).unwrap();
        assert!((dist[0] - 0.2).abs() <= 1e-12 && (dist[1] - 0.8).abs() <= 1e-12, "{dist:?}");
    }

    // ------------------------------------------------------------------
    // Random webs: flattening never creates a cycle, and stays small
    // ------------------------------------------------------------------

    use crate::samples::random_web;

    #[test]
    fn flattening_stays_acyclic_and_small_for_random_webs() {
        let mut skipped = 0;
        let mut compiled_count = 0;
        for seed in 0..200u64 {
            let web = random_web(seed);
            let report = web.validate();
            if report.has("self-loop") {
                skipped += 1;
                continue;
            }
            assert!(
                report.findings.iter().all(|f| f.code == "perfect-recall"),
                "seed {seed}: {report}"
            );
            let compiled = web.compile().unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            compiled_count += 1;

            let maxblock = web.blocks().iter().map(|b| b.maid.nodes().len()).max().unwrap();
            let nagents = web.agents().len().max(1);
            let total_dec: usize = web.blocks().iter().map(|b| b.maid.decisions().len()).sum();
            let bound = maxblock * web.blocks().len() * nagents + total_dec * (1 + 2 * nagents);
            assert!(
                compiled.maid.nodes().len() <= bound,
                "seed {seed}: {} nodes over bound {bound}",
                compiled.maid.nodes().len()
            );
        }
        assert!(compiled_count >= 100, "only {compiled_count} webs compiled, {skipped} skipped");
    }
}
