//! Equilibrium computation and verification for multi-agent influence
//! diagrams. The stack is deliberately desk-scale: an in-place best-response
//! sweep for games with an exploitable order, support enumeration (pure scan
//! for any number of owners, indifference linear systems for two), and damped
//! best-response dynamics as the fallback. Everything returned is verified.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bayes::BayesNet;
use crate::maid::{utility_levels, Maid, NodeId, NodeKind, Strategy, StrategyProfile};
use crate::{Error, Result};

pub const DEFAULT_AGENT_FORM_CAP: u128 = 1_000_000;
/// Joint pure-profile spaces up to this size get scanned outright.
const PURE_SCAN_CAP: u128 = 4096;
/// Per-owner cap on support configurations before mixed enumeration is skipped.
const SUPPORT_CONFIG_CAP: usize = 20_000;
const DAMPING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Auto,
    BackwardInduction,
    SupportEnumeration,
    BestResponseDynamics,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::BackwardInduction => "backward-induction",
            Method::SupportEnumeration => "support-enumeration",
            Method::BestResponseDynamics => "best-response-dynamics",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "auto" => Some(Method::Auto),
            "backward-induction" => Some(Method::BackwardInduction),
            "support-enumeration" => Some(Method::SupportEnumeration),
            "best-response-dynamics" => Some(Method::BestResponseDynamics),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub method: Method,
    pub agent_form_cap: u128,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 1e-6,
            max_iterations: 2000,
            restarts: 20,
            seed: 0,
            method: Method::Auto,
            agent_form_cap: DEFAULT_AGENT_FORM_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub profile: StrategyProfile,
    /// Regret of a unilateral single-decision deviation, per decision.
    pub per_decision_regret: BTreeMap<String, f64>,
    /// Worst agent-level regret over joint deviations of an agent's whole
    /// policy; this is what `converged` tests.
    pub max_regret: f64,
    pub method_used: &'static str,
    pub converged: bool,
}

// ============================================================================
// Row-value tables
// ============================================================================

/// Per info-parent assignment of one decision: the reach probability and, per
/// action, the conditional expected utility of the owner (summed over the
/// utility nodes the decision can influence).
struct RowTable {
    reach: Vec<f64>,
    value: Vec<Vec<f64>>,
}

fn decision_meta(m: &Maid, d: NodeId) -> (usize, usize) {
    let n_actions = m.node(d).card().expect("decision");
    (m.info_row_count(d), n_actions)
}

/// Utility nodes of the decision's owner that the decision can actually
/// influence (the decision is an ancestor).
fn relevant_utilities(m: &Maid, d: NodeId) -> Vec<NodeId> {
    let NodeKind::Decision { owner, .. } = m.node(d).kind else {
        panic!("not a decision")
    };
    m.utilities_of(owner)
        .into_iter()
        .filter(|&u| m.ancestors(&[u]).contains(&d))
        .collect()
}

/// `net` must be `m` implemented with a full-support rule at `d` (uniform);
/// conditional values are then rule-independent and reach probabilities are
/// exact for the rest of the profile.
fn row_table(m: &Maid, net: &BayesNet, d: NodeId, utilities: &[NodeId]) -> Result<RowTable> {
    let (rows, n_actions) = decision_meta(m, d);
    let mut reach = vec![0.0; rows];
    let mut value = vec![vec![0.0; n_actions]; rows];
    for (k, &u) in utilities.iter().enumerate() {
        let NodeKind::Utility { table, .. } = &m.node(u).kind else {
            unreachable!()
        };
        let (levels, _) = utility_levels(table);
        let mut targets: Vec<usize> = m.node(d).parents().to_vec();
        targets.push(d);
        targets.push(u);
        let q = net.query_joint(&targets, &[])?;
        let n_levels = levels.len();
        for r in 0..rows {
            for a in 0..n_actions {
                let base = (r * n_actions + a) * n_levels;
                let mass: f64 = q[base..base + n_levels].iter().sum();
                if k == 0 {
                    reach[r] += mass;
                }
                if mass > 0.0 {
                    let mean: f64 = q[base..base + n_levels]
                        .iter()
                        .zip(&levels)
                        .map(|(p, v)| p * v)
                        .sum::<f64>()
                        / mass;
                    value[r][a] += mean;
                }
            }
        }
    }
    Ok(RowTable { reach, value })
}

fn probe_net(m: &Maid, p: &StrategyProfile, d: NodeId) -> Result<BayesNet> {
    let mut probe = p.clone();
    probe.set(&m.node(d).name.clone(), Strategy::uniform(m, d));
    m.implement_profile(&probe)
}

/// Row-wise argmax rule; ties go to the lowest index. Rows the probe cannot
/// reach carry no preference information, so they keep the current rule:
/// inventing a fixed action there plants off-path commitments that can make
/// other decisions' best responses cycle instead of settling.
fn best_rows(table: &RowTable, current: &Strategy, n_actions: usize) -> Strategy {
    let mut out = Vec::with_capacity(table.reach.len() * n_actions);
    for (r, (vals, &reach)) in table.value.iter().zip(&table.reach).enumerate() {
        if reach <= 0.0 {
            out.extend_from_slice(current.row(r, n_actions));
            continue;
        }
        let mut best = 0;
        for (a, &v) in vals.iter().enumerate() {
            if v > vals[best] {
                best = a;
            }
        }
        for a in 0..n_actions {
            out.push(if a == best { 1.0 } else { 0.0 });
        }
    }
    Strategy { table: out }
}

/// Gain available from unilaterally re-optimizing this one decision.
fn single_decision_gain(table: &RowTable, sigma: &Strategy, n_actions: usize) -> f64 {
    let mut gain = 0.0;
    for (r, vals) in table.value.iter().enumerate() {
        if table.reach[r] <= 0.0 {
            continue;
        }
        let best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let current: f64 = sigma
            .row(r, n_actions)
            .iter()
            .zip(vals)
            .map(|(p, v)| p * v)
            .sum();
        gain += table.reach[r] * (best - current);
    }
    gain.max(0.0)
}

fn fast_best_response(m: &Maid, p: &StrategyProfile, d: NodeId) -> Result<Strategy> {
    let utilities = relevant_utilities(m, d);
    let (_, n_actions) = decision_meta(m, d);
    let current = p
        .get(&m.node(d).name)
        .ok_or_else(|| Error::Model(format!("profile misses {:?}", m.node(d).name)))?;
    if utilities.is_empty() {
        return Ok(current.clone());
    }
    let net = probe_net(m, p, d)?;
    let table = row_table(m, &net, d, &utilities)?;
    Ok(best_rows(&table, current, n_actions))
}

fn decision_gain(m: &Maid, p: &StrategyProfile, d: NodeId) -> Result<f64> {
    let utilities = relevant_utilities(m, d);
    if utilities.is_empty() {
        return Ok(0.0);
    }
    let (_, n_actions) = decision_meta(m, d);
    let net = probe_net(m, p, d)?;
    let table = row_table(m, &net, d, &utilities)?;
    let sigma = p
        .get(&m.node(d).name)
        .ok_or_else(|| Error::Model(format!("profile misses {:?}", m.node(d).name)))?;
    Ok(single_decision_gain(&table, sigma, n_actions))
}

// ============================================================================
// Verification
// ============================================================================

/// Pure policies available at one decision: |actions|^rows, saturating.
pub fn policy_count(m: &Maid, d: NodeId) -> u128 {
    let (rows, n_actions) = decision_meta(m, d);
    let mut total: u128 = 1;
    for _ in 0..rows {
        total = total.saturating_mul(n_actions as u128);
    }
    total
}

/// Decisions of one agent partitioned so that decisions sharing a reachable
/// utility node land in the same group. Expected utility is additive across
/// groups, so joint deviations decompose group-by-group.
fn deviation_groups(m: &Maid, agent: usize) -> Vec<Vec<NodeId>> {
    let decisions = m.decisions_of(agent);
    let mut component: BTreeMap<NodeId, usize> = decisions.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    for u in m.utilities_of(agent) {
        let anc = m.ancestors(&[u]);
        let members: Vec<NodeId> = decisions.iter().copied().filter(|d| anc.contains(d)).collect();
        if let Some((&first, rest)) = members.split_first() {
            let target = component[&first];
            for &d in rest {
                let from = component[&d];
                if from != target {
                    for c in component.values_mut() {
                        if *c == from {
                            *c = target;
                        }
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for &d in &decisions {
        groups.entry(component[&d]).or_default().push(d);
    }
    groups.into_values().collect()
}

/// Iterate pure joint policies for a set of decisions, lexicographically
/// (decision id major, then row) with the action index as the digit.
struct PolicyIter {
    cards: Vec<usize>,
    digits: Vec<usize>,
    done: bool,
}

impl PolicyIter {
    fn new(m: &Maid, decisions: &[NodeId]) -> Self {
        let mut cards = Vec::new();
        for &d in decisions {
            let (rows, n_actions) = decision_meta(m, d);
            cards.extend(std::iter::repeat(n_actions).take(rows));
        }
        PolicyIter {
            digits: vec![0; cards.len()],
            cards,
            done: false,
        }
    }
}

impl Iterator for PolicyIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.digits.clone();
        let mut advanced = false;
        for i in (0..self.digits.len()).rev() {
            self.digits[i] += 1;
            if self.digits[i] < self.cards[i] {
                advanced = true;
                break;
            }
            self.digits[i] = 0;
        }
        if !advanced {
            self.done = true;
        }
        Some(out)
    }
}

/// Write the pure policy encoded by `digits` into `profile`.
fn apply_pure_policy(m: &Maid, profile: &mut StrategyProfile, decisions: &[NodeId], digits: &[usize]) {
    let mut offset = 0;
    for &d in decisions {
        let (rows, n_actions) = decision_meta(m, d);
        let choices = &digits[offset..offset + rows];
        profile.set(&m.node(d).name.clone(), Strategy::from_rows(choices, n_actions));
        offset += rows;
    }
}

pub fn verify_epsilon_nash(m: &Maid, p: &StrategyProfile, epsilon: f64) -> Result<EquilibriumReport> {
    verify_with_cap(m, p, epsilon, DEFAULT_AGENT_FORM_CAP)
}

pub fn verify_with_cap(
    m: &Maid,
    p: &StrategyProfile,
    epsilon: f64,
    cap: u128,
) -> Result<EquilibriumReport> {
    m.hard_violations().into_result()?;
    let mut per_decision_regret = BTreeMap::new();
    for d in m.decisions() {
        let gain = decision_gain(m, p, d)?;
        per_decision_regret.insert(m.node(d).name.clone(), gain);
    }

    let mut max_regret: f64 = 0.0;
    for agent in 0..m.agents().len() {
        let mut agent_regret = 0.0;
        for group in deviation_groups(m, agent) {
            if group.len() == 1 {
                agent_regret += per_decision_regret[&m.node(group[0]).name];
                continue;
            }
            agent_regret += group_gain(m, p, agent, &group, cap)?;
        }
        max_regret = max_regret.max(agent_regret);
    }

    Ok(EquilibriumReport {
        profile: p.clone(),
        per_decision_regret,
        max_regret,
        method_used: "verification",
        converged: max_regret <= epsilon,
    })
}

/// Best joint pure deviation of `group` against the rest of `p`, as an
/// expected-utility gain for the agent. Exact: expected utility is affine in
/// each rule row, so the maximum over the product of simplices sits at a pure
/// joint policy.
fn group_gain(m: &Maid, p: &StrategyProfile, agent: usize, group: &[NodeId], cap: u128) -> Result<f64> {
    let base = m.expected_utility(p, agent, &[])?;

    let mut sized: Vec<(u128, NodeId)> = group.iter().map(|&d| (policy_count(m, d), d)).collect();
    sized.sort(); // ascending; keep id order among equals
    let total: u128 = sized.iter().fold(1u128, |acc, &(c, _)| acc.saturating_mul(c));

    // Peel off the largest decision and best-respond it exactly per pure
    // combination of the rest; the response given everything else fixed is a
    // row-wise argmax, so this reaches the true joint optimum without ever
    // enumerating the largest policy space. Refuse only if the rest is still
    // too big.
    let (_, biggest) = *sized.last().expect("nonempty group");
    let rest: Vec<NodeId> = group.iter().copied().filter(|&d| d != biggest).collect();
    let rest_total = rest
        .iter()
        .fold(1u128, |acc, &d| acc.saturating_mul(policy_count(m, d)));
    if rest_total > cap {
        return Err(Error::PolicySpaceTooLarge { size: total, cap });
    }

    let mut best = f64::NEG_INFINITY;
    for digits in PolicyIter::new(m, &rest) {
        let mut candidate = p.clone();
        apply_pure_policy(m, &mut candidate, &rest, &digits);
        let br = fast_best_response(m, &candidate, biggest)?;
        candidate.set(&m.node(biggest).name.clone(), br);
        let eu = m.expected_utility(&candidate, agent, &[])?;
        best = best.max(eu);
    }
    Ok((best - base).max(0.0))
}

// ============================================================================
// Solver stages
// ============================================================================

fn report_with(method: &'static str, rep: EquilibriumReport) -> EquilibriumReport {
    EquilibriumReport {
        method_used: method,
        ..rep
    }
}

/// Tracks the least-bad regret seen across failed attempts, for error reports.
#[derive(Default)]
struct BestSeen(Option<f64>);

impl BestSeen {
    fn note(&mut self, regret: f64) {
        self.0 = Some(self.0.map_or(regret, |b: f64| b.min(regret)));
    }
}

/// In-place best-response sweep, most-informed decision first. For decision
/// sets with a perfect-information order this is backward induction; for
/// anything else it is a cheap fixpoint attempt that either verifies or gets
/// discarded.
fn stage_sweep(
    m: &Maid,
    cfg: &SolverConfig,
    best_seen: &mut BestSeen,
) -> Result<Option<EquilibriumReport>> {
    let mut order = m.decisions();
    order.sort_by_key(|&d| (std::cmp::Reverse(m.node(d).parents().len()), d));

    let mut profile = StrategyProfile::uniform(m);
    for _pass in 0..(order.len() + 2) {
        let mut changed = false;
        for &d in &order {
            let br = fast_best_response(m, &profile, d)?;
            let name = &m.node(d).name;
            if profile.get(name) != Some(&br) {
                profile.set(&name.clone(), br);
                changed = true;
            }
        }
        if !changed {
            let rep = verify_with_cap(m, &profile, cfg.epsilon, cfg.agent_form_cap)?;
            best_seen.note(rep.max_regret);
            if rep.converged {
                return Ok(Some(report_with(Method::BackwardInduction.label(), rep)));
            }
            return Ok(None);
        }
    }
    Ok(None)
}

/// Pure-profile scan (any number of owners) followed by two-owner mixed
/// support enumeration over behavioral rules.
fn stage_support(
    m: &Maid,
    cfg: &SolverConfig,
    best_seen: &mut BestSeen,
) -> Result<Option<EquilibriumReport>> {
    let decisions = m.decisions();
    let total: u128 = decisions
        .iter()
        .fold(1u128, |acc, &d| acc.saturating_mul(policy_count(m, d)));

    if total <= PURE_SCAN_CAP {
        'candidates: for digits in PolicyIter::new(m, &decisions) {
            let mut candidate = StrategyProfile::uniform(m);
            apply_pure_policy(m, &mut candidate, &decisions, &digits);
            for &d in &decisions {
                if decision_gain(m, &candidate, d)? > cfg.epsilon * 0.5 {
                    continue 'candidates;
                }
            }
            let rep = verify_with_cap(m, &candidate, cfg.epsilon, cfg.agent_form_cap)?;
            best_seen.note(rep.max_regret);
            if rep.converged {
                return Ok(Some(report_with(Method::SupportEnumeration.label(), rep)));
            }
        }
    }

    let owners: BTreeSet<usize> = decisions
        .iter()
        .map(|&d| match m.node(d).kind {
            NodeKind::Decision { owner, .. } => owner,
            _ => unreachable!(),
        })
        .collect();
    if owners.len() == 2 {
        let owners: Vec<usize> = owners.into_iter().collect();
        if let Some(rep) = mixed_support_two_owners(m, cfg, owners[0], owners[1], best_seen)? {
            return Ok(Some(rep));
        }
    }
    Ok(None)
}

// ----------------------------------------------------------------------------
// Two-owner mixed support enumeration
// ----------------------------------------------------------------------------

/// One behavioral coordinate: a probability entry of some decision's rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Coord {
    decision: NodeId,
    row: usize,
    action: usize,
}

struct OwnerSpace {
    decisions: Vec<NodeId>,
    /// (decision, row) in lexicographic order.
    rows: Vec<(NodeId, usize)>,
    coords: Vec<Coord>,
}

fn owner_space(m: &Maid, owner: usize) -> OwnerSpace {
    let decisions = m.decisions_of(owner);
    let mut rows = Vec::new();
    let mut coords = Vec::new();
    for &d in &decisions {
        let (n_rows, n_actions) = decision_meta(m, d);
        for r in 0..n_rows {
            rows.push((d, r));
            for a in 0..n_actions {
                coords.push(Coord {
                    decision: d,
                    row: r,
                    action: a,
                });
            }
        }
    }
    OwnerSpace {
        decisions,
        rows,
        coords,
    }
}

fn profile_from_coords(
    m: &Maid,
    a: &OwnerSpace,
    xa: &[f64],
    b: &OwnerSpace,
    xb: &[f64],
) -> StrategyProfile {
    let mut profile = StrategyProfile::default();
    for (space, x) in [(a, xa), (b, xb)] {
        for &d in &space.decisions {
            let (rows, n_actions) = decision_meta(m, d);
            let mut table = vec![0.0; rows * n_actions];
            for (i, c) in space.coords.iter().enumerate() {
                if c.decision == d {
                    table[c.row * n_actions + c.action] = x[i];
                }
            }
            profile.set(&m.node(d).name.clone(), Strategy { table });
        }
    }
    profile
}

fn uniform_coords(m: &Maid, space: &OwnerSpace) -> Vec<f64> {
    space
        .coords
        .iter()
        .map(|c| 1.0 / m.node(c.decision).card().unwrap() as f64)
        .collect()
}

/// Uniform everywhere except one row forced to a point mass.
fn probe_coords(m: &Maid, space: &OwnerSpace, pin: usize) -> Vec<f64> {
    let pinned = space.coords[pin];
    space
        .coords
        .iter()
        .map(|c| {
            if c.decision == pinned.decision && c.row == pinned.row {
                if c.action == pinned.action {
                    1.0
                } else {
                    0.0
                }
            } else {
                1.0 / m.node(c.decision).card().unwrap() as f64
            }
        })
        .collect()
}

/// Payoffs of both owners in a biaffine reconstruction:
/// EU(x, y) = base + Σ_i x_i dx_i + Σ_j y_j dy_j + Σ_ij x_i y_j cross_ij.
struct Biaffine {
    base: f64,
    dx: Vec<f64>,
    dy: Vec<f64>,
    cross: Vec<Vec<f64>>, // [i][j]
}

impl Biaffine {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut v = self.base;
        for (i, &xi) in x.iter().enumerate() {
            v += xi * self.dx[i];
            for (j, &yj) in y.iter().enumerate() {
                v += xi * yj * self.cross[i][j];
            }
        }
        for (j, &yj) in y.iter().enumerate() {
            v += yj * self.dy[j];
        }
        v
    }

    /// Row-replacement value of coordinate i for the x owner at opponent y:
    /// the part of EU that moving row mass onto i controls.
    fn x_coefficient(&self, i: usize, y: &[f64]) -> f64 {
        self.dx[i]
            + y.iter()
                .enumerate()
                .map(|(j, &yj)| yj * self.cross[i][j])
                .sum::<f64>()
    }

    fn y_coefficient(&self, j: usize, x: &[f64]) -> f64 {
        self.dy[j]
            + x.iter()
                .enumerate()
                .map(|(i, &xi)| xi * self.cross[i][j])
                .sum::<f64>()
    }
}

fn reconstruct_biaffine(
    m: &Maid,
    a: &OwnerSpace,
    b: &OwnerSpace,
    agent: usize,
) -> Result<Biaffine> {
    let ua = uniform_coords(m, a);
    let ub = uniform_coords(m, b);
    let eu = |x: &[f64], y: &[f64]| -> Result<f64> {
        let p = profile_from_coords(m, a, x, b, y);
        m.expected_utility(&p, agent, &[])
    };
    let base = eu(&ua, &ub)?;
    let mut dx = vec![0.0; a.coords.len()];
    let mut dy = vec![0.0; b.coords.len()];
    let mut cross = vec![vec![0.0; b.coords.len()]; a.coords.len()];
    let mut x_probes = Vec::with_capacity(a.coords.len());
    for i in 0..a.coords.len() {
        let x = probe_coords(m, a, i);
        dx[i] = eu(&x, &ub)? - base;
        x_probes.push(x);
    }
    let mut y_probes = Vec::with_capacity(b.coords.len());
    for j in 0..b.coords.len() {
        let y = probe_coords(m, b, j);
        dy[j] = eu(&ua, &y)? - base;
        y_probes.push(y);
    }
    for i in 0..a.coords.len() {
        for j in 0..b.coords.len() {
            cross[i][j] = eu(&x_probes[i], &y_probes[j])? - base - dx[i] - dy[j];
        }
    }
    Ok(Biaffine { base, dx, dy, cross })
}

/// Check the reconstruction against the true expected utility at random
/// product points; games with intra-owner rule products fail here.
fn certify_biaffine(
    m: &Maid,
    a: &OwnerSpace,
    b: &OwnerSpace,
    agent: usize,
    f: &Biaffine,
    seed: u64,
) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_b1af);
    for _ in 0..12 {
        let x = random_coords(m, a, &mut rng);
        let y = random_coords(m, b, &mut rng);
        let p = profile_from_coords(m, a, &x, b, &y);
        let truth = m.expected_utility(&p, agent, &[])?;
        let approx = f.eval(&x, &y);
        if (truth - approx).abs() > 1e-8 * (1.0 + truth.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn random_coords<R: rand::Rng>(m: &Maid, space: &OwnerSpace, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; space.coords.len()];
    let mut i = 0;
    for &(d, _r) in &space.rows {
        let k = m.node(d).card().unwrap();
        let point = crate::samples::simplex_point(rng, k);
        out[i..i + k].copy_from_slice(&point);
        i += k;
    }
    out
}

/// Rows whose payoff coefficients never interact with the opponent and whose
/// best own action is strict. Any equilibrium plays that action outright
/// (the row's optimality does not depend on anyone else), so enumeration can
/// fix the row's support instead of branching over it. `own_linear` and
/// `own_cross` read the owner's side of its own biaffine payoff.
fn decoupled_row_pins(
    space: &OwnerSpace,
    own_linear: impl Fn(usize) -> f64,
    own_cross: impl Fn(usize) -> f64,
    scale: f64,
) -> Vec<Option<u32>> {
    let tol = 1e-9 * scale;
    space
        .rows
        .iter()
        .map(|&(d, r)| {
            let idx: Vec<usize> = space
                .coords
                .iter()
                .enumerate()
                .filter(|(_, c)| c.decision == d && c.row == r)
                .map(|(i, _)| i)
                .collect();
            if idx.iter().any(|&i| own_cross(i).abs() > tol) {
                return None;
            }
            let best = *idx
                .iter()
                .max_by(|&&i, &&j| own_linear(i).partial_cmp(&own_linear(j)).expect("finite"))
                .unwrap();
            let strict = idx
                .iter()
                .all(|&i| i == best || own_linear(i) < own_linear(best) - tol);
            if !strict {
                return None;
            }
            Some(1u32 << space.coords[best].action)
        })
        .collect()
}

/// All support configurations (one nonempty action subset per row, pinned
/// rows fixed), grouped by total excess Σ(|support| - 1), each group in
/// lexicographic mask order. Only free rows count against the cap.
fn support_configs(
    m: &Maid,
    space: &OwnerSpace,
    pins: &[Option<u32>],
) -> Option<BTreeMap<usize, Vec<Vec<u32>>>> {
    let mut total: usize = 1;
    for (i, &(d, _)) in space.rows.iter().enumerate() {
        if pins[i].is_none() {
            let k = m.node(d).card().unwrap();
            total = total.saturating_mul((1usize << k) - 1);
            if total > SUPPORT_CONFIG_CAP {
                return None;
            }
        }
    }
    let mut grouped: BTreeMap<usize, Vec<Vec<u32>>> = BTreeMap::new();
    let cards: Vec<usize> = space.rows.iter().map(|&(d, _)| m.node(d).card().unwrap()).collect();
    let mut masks: Vec<u32> = (0..cards.len()).map(|i| pins[i].unwrap_or(1)).collect();
    loop {
        let excess: usize = masks.iter().map(|m| m.count_ones() as usize - 1).sum();
        grouped.entry(excess).or_default().push(masks.clone());
        let mut i = masks.len();
        loop {
            if i == 0 {
                return Some(grouped);
            }
            i -= 1;
            if pins[i].is_some() {
                continue;
            }
            masks[i] += 1;
            if masks[i] < (1u32 << cards[i]) {
                break;
            }
            masks[i] = 1;
        }
    }
}

/// Solve `mat * z = rhs` by Gauss-Jordan elimination with partial pivoting.
fn solve_linear(mut mat: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            mat[i][col]
                .abs()
                .partial_cmp(&mat[j][col].abs())
                .expect("finite")
        })?;
        if mat[pivot][col].abs() < 1e-10 {
            return None;
        }
        mat.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = mat[row][col] / mat[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                mat[row][k] -= f * mat[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    Some((0..n).map(|i| rhs[i] / mat[i][i]).collect())
}

/// Solve for one owner's behavioral vector given both support configurations.
/// `coeff_rows(i)` must return, for the prober's coordinate `i`, the constant
/// term followed by the coefficient of each solved-owner coordinate in the
/// prober's payoff for moving row mass onto `i`. Equations: the prober is
/// indifferent across its supported actions per row, and the solved owner's
/// rows are normalized. Returns None when the system is singular.
fn solve_side(
    m: &Maid,
    prober: &OwnerSpace,
    prober_masks: &[u32],
    solved: &OwnerSpace,
    solved_masks: &[u32],
    coeff_rows: impl Fn(usize) -> Vec<f64>,
) -> Option<Vec<f64>> {
    // unknowns: coordinates of `solved` inside its support
    let mut unknown_index: Vec<Option<usize>> = vec![None; solved.coords.len()];
    let mut n_unknowns = 0;
    for (i, c) in solved.coords.iter().enumerate() {
        let row_pos = solved
            .rows
            .iter()
            .position(|&(d, r)| d == c.decision && r == c.row)
            .unwrap();
        if solved_masks[row_pos] >> c.action & 1 == 1 {
            unknown_index[i] = Some(n_unknowns);
            n_unknowns += 1;
        }
    }
    let mut mat: Vec<Vec<f64>> = Vec::with_capacity(n_unknowns);
    let mut rhs: Vec<f64> = Vec::with_capacity(n_unknowns);

    for (row_pos, &(d, r)) in prober.rows.iter().enumerate() {
        let mask = prober_masks[row_pos];
        let in_support: Vec<usize> = (0..m.node(d).card().unwrap())
            .filter(|a| mask >> a & 1 == 1)
            .collect();
        let coord_of = |a: usize| {
            prober
                .coords
                .iter()
                .position(|c| c.decision == d && c.row == r && c.action == a)
                .unwrap()
        };
        for pair in in_support.windows(2) {
            let row_i = coeff_rows(coord_of(pair[0]));
            let row_j = coeff_rows(coord_of(pair[1]));
            let mut eq = vec![0.0; n_unknowns];
            for (k, slot) in unknown_index.iter().enumerate() {
                if let Some(u) = slot {
                    eq[*u] = row_i[k + 1] - row_j[k + 1];
                }
            }
            mat.push(eq);
            rhs.push(row_j[0] - row_i[0]);
        }
    }

    // one normalization row per solved row
    for &(d, r) in &solved.rows {
        let mut eq = vec![0.0; n_unknowns];
        for (i, c) in solved.coords.iter().enumerate() {
            if c.decision == d && c.row == r {
                if let Some(u) = unknown_index[i] {
                    eq[u] = 1.0;
                }
            }
        }
        mat.push(eq);
        rhs.push(1.0);
    }

    if mat.len() != n_unknowns {
        return None;
    }
    let z = solve_linear(mat, rhs)?;
    let mut full = vec![0.0; solved.coords.len()];
    for (i, slot) in unknown_index.iter().enumerate() {
        if let Some(u) = slot {
            full[i] = z[*u];
        }
    }
    Some(full)
}

fn mixed_support_two_owners(
    m: &Maid,
    cfg: &SolverConfig,
    owner_a: usize,
    owner_b: usize,
    best_seen: &mut BestSeen,
) -> Result<Option<EquilibriumReport>> {
    let a = owner_space(m, owner_a);
    let b = owner_space(m, owner_b);

    let fa = reconstruct_biaffine(m, &a, &b, owner_a)?;
    let fb = reconstruct_biaffine(m, &a, &b, owner_b)?;
    if !certify_biaffine(m, &a, &b, owner_a, &fa, cfg.seed)?
        || !certify_biaffine(m, &a, &b, owner_b, &fb, cfg.seed.wrapping_add(1))?
    {
        return Ok(None);
    }

    let scale = |f: &Biaffine| {
        let mut s = 1.0f64;
        for &v in f.dx.iter().chain(&f.dy) {
            s = s.max(v.abs());
        }
        for row in &f.cross {
            for &v in row {
                s = s.max(v.abs());
            }
        }
        s
    };
    let pins_a = decoupled_row_pins(
        &a,
        |i| fa.dx[i],
        |i| fa.cross[i].iter().fold(0.0f64, |m, &v| m.max(v.abs())),
        scale(&fa),
    );
    let pins_b = decoupled_row_pins(
        &b,
        |j| fb.dy[j],
        |j| fb.cross.iter().fold(0.0f64, |m, row| m.max(row[j].abs())),
        scale(&fb),
    );

    let Some(configs_a) = support_configs(m, &a, &pins_a) else {
        return Ok(None);
    };
    let Some(configs_b) = support_configs(m, &b, &pins_b) else {
        return Ok(None);
    };

    // y comes from A's indifference conditions, x from B's
    let coeff_rows_a = |i: usize| {
        let mut v = Vec::with_capacity(b.coords.len() + 1);
        v.push(fa.dx[i]);
        v.extend(fa.cross[i].iter().copied());
        v
    };
    let coeff_rows_b = |j: usize| {
        let mut v = Vec::with_capacity(a.coords.len() + 1);
        v.push(fb.dy[j]);
        v.extend((0..a.coords.len()).map(|i| fb.cross[i][j]));
        v
    };

    let max_excess = *configs_a.keys().max().unwrap_or(&0);
    for excess in 0..=max_excess {
        let (Some(list_a), Some(list_b)) = (configs_a.get(&excess), configs_b.get(&excess)) else {
            continue;
        };
        for masks_a in list_a {
            for masks_b in list_b {
                let Some(y) = solve_side(m, &a, masks_a, &b, masks_b, coeff_rows_a) else {
                    continue;
                };
                let Some(x) = solve_side(m, &b, masks_b, &a, masks_a, coeff_rows_b) else {
                    continue;
                };
                if !coords_feasible(&x) || !coords_feasible(&y) {
                    continue;
                }
                if !supports_optimal(m, &a, masks_a, &y, |i, yy| fa.x_coefficient(i, yy))
                    || !supports_optimal(m, &b, masks_b, &x, |j, xx| fb.y_coefficient(j, xx))
                {
                    continue;
                }
                let x = normalized_coords(&a, &x);
                let y = normalized_coords(&b, &y);
                let candidate = profile_from_coords(m, &a, &x, &b, &y);
                let rep = verify_with_cap(m, &candidate, cfg.epsilon, cfg.agent_form_cap)?;
                best_seen.note(rep.max_regret);
                if rep.converged {
                    return Ok(Some(report_with(Method::SupportEnumeration.label(), rep)));
                }
            }
        }
    }
    Ok(None)
}

fn coords_feasible(v: &[f64]) -> bool {
    v.iter().all(|&p| (-1e-9..=1.0 + 1e-9).contains(&p))
}

/// Clamp into [0, 1] and renormalize each row exactly.
fn normalized_coords(space: &OwnerSpace, v: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = v.iter().map(|&p| p.clamp(0.0, 1.0)).collect();
    let mut i = 0;
    for &(d, r) in &space.rows {
        let width = space
            .coords
            .iter()
            .filter(|c| c.decision == d && c.row == r)
            .count();
        let sum: f64 = out[i..i + width].iter().sum();
        if sum > 0.0 {
            for p in &mut out[i..i + width] {
                *p /= sum;
            }
        }
        i += width;
    }
    out
}

/// Supported actions must score at least as well as unsupported ones in each
/// row, against the opponent vector just solved for.
fn supports_optimal(
    m: &Maid,
    space: &OwnerSpace,
    masks: &[u32],
    opponent: &[f64],
    coefficient: impl Fn(usize, &[f64]) -> f64,
) -> bool {
    for (row_pos, &(d, r)) in space.rows.iter().enumerate() {
        let k = m.node(d).card().unwrap();
        let coord_of = |a: usize| {
            space
                .coords
                .iter()
                .position(|c| c.decision == d && c.row == r && c.action == a)
                .unwrap()
        };
        let supported: Vec<f64> = (0..k)
            .filter(|a| masks[row_pos] >> a & 1 == 1)
            .map(|a| coefficient(coord_of(a), opponent))
            .collect();
        let level = supported[0];
        if supported.iter().any(|&v| (v - level).abs() > 1e-7) {
            return false;
        }
        for a in 0..k {
            if masks[row_pos] >> a & 1 == 0 && coefficient(coord_of(a), opponent) > level + 1e-7 {
                return false;
            }
        }
    }
    true
}

// ----------------------------------------------------------------------------
// Damped best-response dynamics
// ----------------------------------------------------------------------------

fn random_profile(m: &Maid, rng: &mut ChaCha8Rng) -> StrategyProfile {
    let mut profile = StrategyProfile::default();
    for d in m.decisions() {
        let (rows, n_actions) = decision_meta(m, d);
        let mut table = Vec::with_capacity(rows * n_actions);
        for _ in 0..rows {
            table.extend(crate::samples::simplex_point(rng, n_actions));
        }
        profile.set(&m.node(d).name.clone(), Strategy { table });
    }
    profile
}

/// Round near-pure rows to exact point masses.
fn purified(m: &Maid, p: &StrategyProfile) -> StrategyProfile {
    let mut out = p.clone();
    for d in m.decisions() {
        let (rows, n_actions) = decision_meta(m, d);
        let name = &m.node(d).name;
        let mut table = p.get(name).expect("total profile").table.clone();
        for r in 0..rows {
            let row = &mut table[r * n_actions..(r + 1) * n_actions];
            let (mut arg, mut max) = (0, row[0]);
            for (a, &v) in row.iter().enumerate() {
                if v > max {
                    arg = a;
                    max = v;
                }
            }
            if max >= 1.0 - 1e-6 {
                row.fill(0.0);
                row[arg] = 1.0;
            } else {
                let sum: f64 = row.iter().sum();
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
        }
        out.set(&name.clone(), Strategy { table });
    }
    out
}

fn stage_dynamics(
    m: &Maid,
    cfg: &SolverConfig,
    best_seen: &mut BestSeen,
) -> Result<Option<EquilibriumReport>> {
    let decisions = m.decisions();
    for attempt in 0..=cfg.restarts {
        let mut profile = if attempt == 0 {
            StrategyProfile::uniform(m)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(attempt as u64));
            random_profile(m, &mut rng)
        };
        for iter in 1..=cfg.max_iterations {
            let responses: Vec<(NodeId, Strategy)> = decisions
                .iter()
                .map(|&d| Ok((d, fast_best_response(m, &profile, d)?)))
                .collect::<Result<_>>()?;
            for (d, br) in responses {
                let name = &m.node(d).name;
                let mut table = profile.get(name).expect("total").table.clone();
                for (t, b) in table.iter_mut().zip(&br.table) {
                    *t = (1.0 - DAMPING) * *t + DAMPING * b;
                }
                profile.set(&name.clone(), Strategy { table });
            }

            if iter % 20 == 0 || iter == cfg.max_iterations {
                let mut worst = 0.0f64;
                for &d in &decisions {
                    worst = worst.max(decision_gain(m, &profile, d)?);
                }
                if worst <= cfg.epsilon * 0.5 {
                    for candidate in [purified(m, &profile), profile.clone()] {
                        let rep = verify_with_cap(m, &candidate, cfg.epsilon, cfg.agent_form_cap)?;
                        best_seen.note(rep.max_regret);
                        if rep.converged {
                            return Ok(Some(report_with(
                                Method::BestResponseDynamics.label(),
                                rep,
                            )));
                        }
                    }
                }
            }
        }
        let rep = verify_with_cap(m, &profile, cfg.epsilon, cfg.agent_form_cap)?;
        best_seen.note(rep.max_regret);
        if rep.converged {
            return Ok(Some(report_with(Method::BestResponseDynamics.label(), rep)));
        }
    }
    Ok(None)
}

// ============================================================================
// Entry point
// ============================================================================

pub fn solve_maid(m: &Maid, cfg: &SolverConfig) -> Result<EquilibriumReport> {
    if !(cfg.epsilon > 0.0) {
        return Err(Error::Model("solver epsilon must be positive".into()));
    }
    if cfg.max_iterations == 0 {
        return Err(Error::Model("solver needs at least one iteration".into()));
    }
    m.hard_violations().into_result()?;

    if m.decisions().is_empty() {
        let rep = verify_with_cap(m, &StrategyProfile::default(), cfg.epsilon, cfg.agent_form_cap)?;
        return Ok(report_with(Method::BackwardInduction.label(), rep));
    }

    let mut best = BestSeen::default();
    let stages: Vec<fn(&Maid, &SolverConfig, &mut BestSeen) -> Result<Option<EquilibriumReport>>> =
        match cfg.method {
            Method::Auto => vec![stage_sweep, stage_support, stage_dynamics],
            Method::BackwardInduction => vec![stage_sweep],
            Method::SupportEnumeration => vec![stage_support],
            Method::BestResponseDynamics => vec![stage_dynamics],
        };
    for stage in stages {
        if let Some(rep) = stage(m, cfg, &mut best)? {
            return Ok(rep);
        }
    }
    Err(Error::NoEquilibrium {
        best_regret: best.0.unwrap_or(f64::INFINITY),
    })
}

// ============================================================================
