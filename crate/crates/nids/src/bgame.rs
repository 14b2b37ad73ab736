//! Explicit games of incomplete information: per-type beliefs over the other
//! agents' types and a total payoff tensor. Solvable directly on an agent
//! form with one decision per (agent, type), or via a linear-size conversion
//! into a web of blocks, with a checker that the two routes agree.

use std::collections::{BTreeMap, BTreeSet};

use crate::maid::{Maid, Strategy};
use crate::nid::{Block, ModCpd, NidModel};
use crate::solver::{solve_maid, verify_with_cap, EquilibriumReport, SolverConfig};
use crate::{valid_ident, Error, Result, ValidationReport};

/// Per-type behavior: `strategies[agent][type]` is the action distribution
/// the agent commits to when holding that type.
pub type TypeStrategies = Vec<Vec<Vec<f64>>>;

/// A finite game of incomplete information. Beliefs are held per (agent,
/// type) and need not be consistent with any common prior over types.
#[derive(Debug, Clone)]
pub struct BayesianGame {
    pub agents: Vec<String>,
    /// Type labels per agent, in `agents` order.
    pub types: Vec<Vec<String>>,
    /// Action labels per agent.
    pub actions: Vec<Vec<String>>,
    /// `beliefs[i][t]`: agent i's distribution over the other agents' joint
    /// types given own type t; row-major over the others in `agents` order,
    /// the last one fastest.
    pub beliefs: Vec<Vec<Vec<f64>>>,
    /// `utilities[i]`: agent i's payoff for every (type profile, action
    /// profile); row-major over all types in `agents` order, then all
    /// actions, the last index fastest.
    pub utilities: Vec<Vec<f64>>,
}

/// Mixed-radix decode, first digit slowest (the table convention everywhere).
fn radix_decode(mut idx: usize, dims: &[usize], out: &mut Vec<usize>) {
    out.clear();
    out.resize(dims.len(), 0);
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
}

impl BayesianGame {
    fn others(&self, agent: usize) -> Vec<usize> {
        (0..self.agents.len()).filter(|&j| j != agent).collect()
    }

    fn other_type_dims(&self, agent: usize) -> Vec<usize> {
        self.others(agent).iter().map(|&j| self.types[j].len()).collect()
    }

    /// Number of joint type profiles the other agents can hold.
    pub fn other_type_count(&self, agent: usize) -> usize {
        self.other_type_dims(agent).iter().product()
    }

    /// Labels for those joint profiles, in decode order.
    fn other_profile_labels(&self, agent: usize) -> Vec<String> {
        let dims = self.other_type_dims(agent);
        let others = self.others(agent);
        let mut digits = Vec::new();
        (0..dims.iter().product())
            .map(|q| {
                radix_decode(q, &dims, &mut digits);
                others
                    .iter()
                    .zip(&digits)
                    .map(|(&j, &t)| self.types[j][t].as_str())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect()
    }

    /// Payoff for one full type and action profile.
    pub fn utility_at(&self, agent: usize, t: &[usize], c: &[usize]) -> f64 {
        let mut idx = 0;
        for (k, labels) in self.types.iter().enumerate() {
            idx = idx * labels.len() + t[k];
        }
        for (k, labels) in self.actions.iter().enumerate() {
            idx = idx * labels.len() + c[k];
        }
        self.utilities[agent][idx]
    }

    /// "agent.type", the naming unit for generated nodes and blocks.
    pub fn tag(&self, agent: usize, ty: usize) -> String {
        format!("{}.{}", self.agents[agent], self.types[agent][ty])
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let n = self.agents.len();
        if n < 2 {
            report.push("shape", "a game needs at least two agents");
        }
        for (what, len) in [
            ("types", self.types.len()),
            ("actions", self.actions.len()),
            ("beliefs", self.beliefs.len()),
            ("utilities", self.utilities.len()),
        ] {
            if len != n {
                report.push("shape", format!("{what} lists {len} agents, expected {n}"));
            }
        }
        let mut seen = BTreeSet::new();
        for a in &self.agents {
            if !valid_ident(a) {
                report.push("shape", format!("bad agent name {a:?}"));
            }
            if !seen.insert(a.clone()) {
                report.push("shape", format!("duplicate agent {a:?}"));
            }
        }
        if !report.is_clean() {
            return report;
        }

        for i in 0..n {
            let who = &self.agents[i];
            for (what, labels) in [("type", &self.types[i]), ("action", &self.actions[i])] {
                if labels.is_empty() {
                    report.push("shape", format!("agent {who:?} has no {what}s"));
                }
                let mut seen = BTreeSet::new();
                for l in labels {
                    if !valid_ident(l) {
                        report.push("shape", format!("bad {what} name {l:?} for agent {who:?}"));
                    }
                    if !seen.insert(l.clone()) {
                        report.push("shape", format!("duplicate {what} {l:?} for agent {who:?}"));
                    }
                }
            }
        }
        if !report.is_clean() {
            return report;
        }

        for i in 0..n {
            let who = &self.agents[i];
            if self.beliefs[i].len() != self.types[i].len() {
                report.push(
                    "belief-row",
                    format!(
                        "agent {who:?} has {} belief rows, one per type expected ({})",
                        self.beliefs[i].len(),
                        self.types[i].len()
                    ),
                );
                continue;
            }
            let want = self.other_type_count(i);
            for (t, row) in self.beliefs[i].iter().enumerate() {
                let at = format!("belief of agent {who:?} with type {:?}", self.types[i][t]);
                if row.len() != want {
                    report.push("belief-row", format!("{at}: {} entries, expected {want}", row.len()));
                    continue;
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > crate::bayes::ROW_SUM_TOL {
                    report.push("belief-row", format!("{at}: entries sum to {sum}"));
                }
                for &p in row {
                    if !(-1e-12..=1.0 + 1e-12).contains(&p) || p.is_nan() {
                        report.push("belief-range", format!("{at}: probability {p} out of range"));
                    }
                }
            }
        }

        let cells: usize = self.types.iter().map(|t| t.len()).product::<usize>()
            * self.actions.iter().map(|a| a.len()).product::<usize>();
        for i in 0..n {
            let who = &self.agents[i];
            if self.utilities[i].len() != cells {
                report.push(
                    "tensor",
                    format!(
                        "payoff tensor for agent {who:?} has {} cells, expected {cells}",
                        self.utilities[i].len()
                    ),
                );
                continue;
            }
            for (k, &v) in self.utilities[i].iter().enumerate() {
                if !v.is_finite() {
                    report.push("tensor", format!("payoff tensor for agent {who:?}: cell {k} is {v}"));
                }
            }
        }
        report
    }
}

// ============================================================================
// Direct solving on the agent form
// ============================================================================

/// One-shot game with a decision per (agent, type). Each type's payoff node
/// reads that type's private belief node, its own action, and every other
/// agent's type-decisions, and uses the decision matching the believed type
/// profile. Owners stay the original agents; since a type-decision reaches
/// only its own payoff node, each type still optimizes independently.
pub fn agent_form_maid(g: &BayesianGame) -> Result<Maid> {
    g.validate().into_result()?;
    let n = g.agents.len();
    let mut b = Maid::builder();
    for a in &g.agents {
        b = b.agent_owned(a.clone());
    }
    for i in 0..n {
        for t in 0..g.types[i].len() {
            let tag = g.tag(i, t);
            b = b.chance_owned(
                format!("Q[{tag}]"),
                g.other_profile_labels(i),
                Vec::new(),
                g.beliefs[i][t].clone(),
            );
            b = b.decision_owned(
                format!("D[{tag}]"),
                g.agents[i].clone(),
                g.actions[i].clone(),
                Vec::new(),
            );

            let mut parents = vec![format!("Q[{tag}]"), format!("D[{tag}]")];
            let mut dims = vec![g.other_type_count(i), g.actions[i].len()];
            let mut columns = Vec::new(); // (agent, type) behind each extra parent
            for j in 0..n {
                if j == i {
                    continue;
                }
                for t2 in 0..g.types[j].len() {
                    parents.push(format!("D[{}]", g.tag(j, t2)));
                    dims.push(g.actions[j].len());
                    columns.push((j, t2));
                }
            }

            let others = g.others(i);
            let other_dims = g.other_type_dims(i);
            let rows: usize = dims.iter().product();
            let mut table = Vec::with_capacity(rows);
            let mut digits = Vec::new();
            let mut others_t = Vec::new();
            let mut t_full = vec![0usize; n];
            let mut c_full = vec![0usize; n];
            for r in 0..rows {
                radix_decode(r, &dims, &mut digits);
                radix_decode(digits[0], &other_dims, &mut others_t);
                t_full[i] = t;
                for (k, &j) in others.iter().enumerate() {
                    t_full[j] = others_t[k];
                }
                c_full[i] = digits[1];
                for (k, &(j, t2)) in columns.iter().enumerate() {
                    if t_full[j] == t2 {
                        c_full[j] = digits[2 + k];
                    }
                }
                table.push(g.utility_at(i, &t_full, &c_full));
            }
            b = b.utility_owned(format!("U[{tag}]"), g.agents[i].clone(), parents, table);
        }
    }
    b.finish()
}

/// Direct solution: per-type strategies and regrets, in payoff units.
#[derive(Debug, Clone)]
pub struct BgSolution {
    pub strategies: TypeStrategies,
    pub per_type_regret: Vec<Vec<f64>>,
    pub max_regret: f64,
    pub report: EquilibriumReport,
}

pub fn solve_direct(g: &BayesianGame, cfg: &SolverConfig) -> Result<BgSolution> {
    let m = agent_form_maid(g)?;
    let report = solve_maid(&m, cfg)?;
    let mut strategies = Vec::with_capacity(g.agents.len());
    let mut per_type_regret = Vec::with_capacity(g.agents.len());
    for i in 0..g.agents.len() {
        let mut rows = Vec::with_capacity(g.types[i].len());
        let mut regrets = Vec::with_capacity(g.types[i].len());
        for t in 0..g.types[i].len() {
            let name = format!("D[{}]", g.tag(i, t));
            let s = report
                .profile
                .get(&name)
                .ok_or_else(|| Error::Model(format!("solution misses {name:?}")))?;
            rows.push(s.row(0, g.actions[i].len()).to_vec());
            let r = report
                .per_decision_regret
                .get(&name)
                .copied()
                .ok_or_else(|| Error::Model(format!("report misses regret for {name:?}")))?;
            regrets.push(r);
        }
        strategies.push(rows);
        per_type_regret.push(regrets);
    }
    Ok(BgSolution {
        strategies,
        per_type_regret,
        max_regret: report.max_regret,
        report,
    })
}

// ============================================================================
// Regret straight off the tensor
// ============================================================================

/// Belief-weighted payoff of each own action for one (agent, type), holding
/// everyone else's per-type behavior fixed. Computed directly on the payoff
/// tensor, independent of any game-network machinery.
pub fn action_values(g: &BayesianGame, all: &TypeStrategies, agent: usize, ty: usize) -> Vec<f64> {
    let n = g.agents.len();
    let others = g.others(agent);
    let other_dims = g.other_type_dims(agent);
    let action_dims: Vec<usize> = g.actions.iter().map(|a| a.len()).collect();
    let total_c: usize = action_dims.iter().product();
    let mut vals = vec![0.0; g.actions[agent].len()];
    let mut others_t = Vec::new();
    let mut cs = Vec::new();
    let mut t_full = vec![0usize; n];
    for q in 0..g.other_type_count(agent) {
        let w0 = g.beliefs[agent][ty][q];
        if w0 == 0.0 {
            continue;
        }
        radix_decode(q, &other_dims, &mut others_t);
        t_full[agent] = ty;
        for (k, &j) in others.iter().enumerate() {
            t_full[j] = others_t[k];
        }
        for c in 0..total_c {
            radix_decode(c, &action_dims, &mut cs);
            let mut w = w0;
            for &j in &others {
                w *= all[j][t_full[j]][cs[j]];
            }
            vals[cs[agent]] += w * g.utility_at(agent, &t_full, &cs);
        }
    }
    vals
}

/// Best-response regret of every (agent, type) under its own beliefs.
pub fn bg_regret(g: &BayesianGame, all: &TypeStrategies) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(g.agents.len());
    for i in 0..g.agents.len() {
        let mut per_type = Vec::with_capacity(g.types[i].len());
        for t in 0..g.types[i].len() {
            let vals = action_values(g, all, i, t);
            let best = vals.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let have: f64 = all[i][t].iter().zip(&vals).map(|(p, v)| p * v).sum();
            per_type.push((best - have).max(0.0));
        }
        out.push(per_type);
    }
    out
}

// ============================================================================
// Conversion into a web of blocks
// ============================================================================

/// Where each (agent, type) of a game lives in a web: the block label and
/// the agent whose decision there carries the type's strategy.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EquivalenceMapping {
    /// (agent, type) -> (block label, deciding agent).
    pub entries: BTreeMap<(String, String), (String, String)>,
}

/// One block per type. The block for (agent i, type t) holds a decision and
/// a utility node for every agent, plus a chance node "Q" carrying i's
/// beliefs about the others' types. i's own payoff reads Q and all the
/// decisions; everyone else's is a dummy paying 1 for their first action, so
/// their choices here are anchored and payoff-independent of i's. The view
/// entries route i's picture of agent j's decision to whichever of j's
/// blocks Q names; every other view stays at this block.
pub fn to_nid(g: &BayesianGame) -> Result<(NidModel, EquivalenceMapping)> {
    g.validate().into_result()?;
    let n = g.agents.len();
    let mut blocks = Vec::new();
    let mut mapping = EquivalenceMapping::default();
    for i in 0..n {
        for t in 0..g.types[i].len() {
            let label = g.tag(i, t);
            let mut b = Maid::builder();
            for a in &g.agents {
                b = b.agent_owned(a.clone());
            }
            b = b.chance_owned(
                "Q".to_string(),
                g.other_profile_labels(i),
                Vec::new(),
                g.beliefs[i][t].clone(),
            );
            for j in 0..n {
                b = b.decision_owned(
                    format!("D[{}]", g.agents[j]),
                    g.agents[j].clone(),
                    g.actions[j].clone(),
                    Vec::new(),
                );
            }

            let mut parents = vec!["Q".to_string()];
            let mut dims = vec![g.other_type_count(i)];
            for j in 0..n {
                parents.push(format!("D[{}]", g.agents[j]));
                dims.push(g.actions[j].len());
            }
            let others = g.others(i);
            let other_dims = g.other_type_dims(i);
            let rows: usize = dims.iter().product();
            let mut table = Vec::with_capacity(rows);
            let mut digits = Vec::new();
            let mut others_t = Vec::new();
            let mut t_full = vec![0usize; n];
            for r in 0..rows {
                radix_decode(r, &dims, &mut digits);
                radix_decode(digits[0], &other_dims, &mut others_t);
                t_full[i] = t;
                for (k, &j) in others.iter().enumerate() {
                    t_full[j] = others_t[k];
                }
                table.push(g.utility_at(i, &t_full, &digits[1..]));
            }
            b = b.utility_owned(format!("U[{}]", g.agents[i]), g.agents[i].clone(), parents, table);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let mut anchor = vec![0.0; g.actions[j].len()];
                anchor[0] = 1.0;
                b = b.utility_owned(
                    format!("U[{}]", g.agents[j]),
                    g.agents[j].clone(),
                    vec![format!("D[{}]", g.agents[j])],
                    anchor,
                );
            }

            let mut block = Block::new(&label, b.finish()?);
            for (k, &j) in others.iter().enumerate() {
                let labels: Vec<String> = (0..g.types[j].len()).map(|t2| g.tag(j, t2)).collect();
                let q_rows = g.other_type_count(i);
                let mut view = vec![0.0; q_rows * labels.len()];
                for q in 0..q_rows {
                    radix_decode(q, &other_dims, &mut others_t);
                    view[q * labels.len() + others_t[k]] = 1.0;
                }
                block = block.with_mod(
                    &g.agents[i],
                    &format!("D[{}]", g.agents[j]),
                    ModCpd {
                        parents: vec!["Q".to_string()],
                        labels,
                        table: view,
                    },
                );
            }
            blocks.push(block);
            mapping.entries.insert(
                (g.agents[i].clone(), g.types[i][t].clone()),
                (label, g.agents[i].clone()),
            );
        }
    }
    let root = blocks[0].label.clone();
    let nid = NidModel::new(blocks, &root)?;
    Ok((nid, mapping))
}

// ============================================================================
// Equivalence checking
// ============================================================================

#[derive(Debug, Clone)]
pub struct TypeCheck {
    pub agent: String,
    pub ty: String,
    pub block: String,
    /// Worst gap between the game's strategy for this type and both the
    /// best-response and actually-played strategies at the mapped decision.
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub per_type: Vec<TypeCheck>,
    pub max_deviation: f64,
    /// Regret, in the game, of the web's best-response strategies.
    pub bg_regret_of_nid: f64,
    /// Regret, in the flattened web, of the game's direct solution.
    pub nid_regret_of_bg: f64,
    /// Both cross-checks pass at the solver tolerance. Strategy gaps do not
    /// decide this: distinct equilibria of the same game are still a match.
    pub equivalent: bool,
}

/// Solve the game directly and the web by flattening, then check each
/// solution against the other side's regret measure. `f` says which (block,
/// agent) pair carries each type's strategy; it must cover every type and
/// never reuse a pair.
pub fn check_equivalence(
    g: &BayesianGame,
    web: &NidModel,
    f: &EquivalenceMapping,
    cfg: &SolverConfig,
) -> Result<EquivalenceReport> {
    g.validate().into_result()?;
    let mut used = BTreeSet::new();
    for i in 0..g.agents.len() {
        for ty in &g.types[i] {
            let key = (g.agents[i].clone(), ty.clone());
            let target = f
                .entries
                .get(&key)
                .ok_or_else(|| Error::Model(format!("mapping misses type {ty:?} of agent {:?}", g.agents[i])))?;
            if !used.insert(target.clone()) {
                return Err(Error::Model(format!(
                    "mapping is not injective: {:?} carries two types",
                    target
                )));
            }
        }
    }

    let direct = solve_direct(g, cfg)?;
    let solved = web.solve(cfg)?;
    let compiled = web.compile()?;

    let mut spliced = solved.report.profile.clone();
    let mut theta_profile: TypeStrategies =
        g.types.iter().map(|ts| vec![Vec::new(); ts.len()]).collect();
    let mut per_type = Vec::new();
    let mut max_deviation = 0.0f64;
    for i in 0..g.agents.len() {
        for t in 0..g.types[i].len() {
            let key = (g.agents[i].clone(), g.types[i][t].clone());
            let (block_label, decider) = &f.entries[&key];
            let block = web
                .block(block_label)
                .ok_or_else(|| Error::Model(format!("mapping names unknown block {block_label:?}")))?;
            let aid = block
                .maid
                .agent_id(decider)
                .ok_or_else(|| Error::Model(format!("block {block_label:?} has no agent {decider:?}")))?;
            let ds = block.maid.decisions_of(aid);
            if ds.len() != 1 {
                return Err(Error::Model(format!(
                    "block {block_label:?} holds {} decisions of {decider:?}, need exactly one",
                    ds.len()
                )));
            }
            let d = block.maid.node(ds[0]);
            if d.domain() != Some(g.actions[i].as_slice()) {
                return Err(Error::Model(format!(
                    "decision {:?} in block {block_label:?} does not share agent {:?}'s action domain",
                    d.name, g.agents[i]
                )));
            }
            if block.maid.info_row_count(ds[0]) != 1 {
                return Err(Error::Model(format!(
                    "decision {:?} in block {block_label:?} observes information; type strategies are unconditional",
                    d.name
                )));
            }
            let eq_key = (block_label.clone(), d.name.clone());
            let theta = &solved.best_response[&eq_key];
            let phi = &solved.actually_played[&eq_key];
            let sigma = &direct.strategies[i][t];
            let mut dev = 0.0f64;
            for a in 0..sigma.len() {
                dev = dev.max((theta.table[a] - sigma[a]).abs());
                dev = dev.max((phi.table[a] - sigma[a]).abs());
            }
            max_deviation = max_deviation.max(dev);
            theta_profile[i][t] = theta.table.clone();
            let br = compiled
                .best_response_node(block_label, &d.name)
                .ok_or_else(|| Error::Model(format!("no optimizing node for {:?} in {block_label:?}", d.name)))?;
            spliced.set(&compiled.maid.node(br).name, Strategy { table: sigma.clone() });
            per_type.push(TypeCheck {
                agent: g.agents[i].clone(),
                ty: g.types[i][t].clone(),
                block: block_label.clone(),
                deviation: dev,
            });
        }
    }

    let bg_regret_of_nid = bg_regret(g, &theta_profile)
        .iter()
        .flatten()
        .fold(0.0f64, |m, &r| m.max(r));
    let nid_regret_of_bg =
        verify_with_cap(&compiled.maid, &spliced, cfg.epsilon, cfg.agent_form_cap)?.max_regret;
    let equivalent = bg_regret_of_nid <= cfg.epsilon && nid_regret_of_bg <= cfg.epsilon;
    Ok(EquivalenceReport {
        per_type,
        max_deviation,
        bg_regret_of_nid,
        nid_regret_of_bg,
        equivalent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{dominant_bg, pennies_bg, random_bg, random_bg_sized, split_beliefs_bg};
    use crate::maid::NodeKind;

    fn assert_row(have: &[f64], want: &[f64], tol: f64) {
        assert_eq!(have.len(), want.len());
        for (h, w) in have.iter().zip(want) {
            assert!((h - w).abs() <= tol, "{have:?} vs {want:?}");
        }
    }

    fn worst(per_type: &[Vec<f64>]) -> f64 {
        per_type.iter().flatten().fold(0.0f64, |m, &r| m.max(r))
    }

    #[test]
    fn well_formed_games_validate_clean() {
        assert!(pennies_bg().validate().is_clean());
        assert!(dominant_bg().validate().is_clean());
        assert!(split_beliefs_bg().validate().is_clean());
        for seed in 0..5 {
            assert!(random_bg(seed).validate().is_clean(), "seed {seed}");
        }
    }

    #[test]
    fn belief_rows_must_be_distributions() {
        let mut g = dominant_bg();
        g.beliefs[1][0] = vec![0.5, 0.4];
        let report = g.validate();
        let finding = report.findings.iter().find(|f| f.code == "belief-row").expect("flagged");
        assert!(finding.message.contains("\"B\"") && finding.message.contains("even"));

        let mut g = split_beliefs_bg();
        g.beliefs[0][0] = vec![1.5, -0.5]; // sums to one, entries out of range
        let report = g.validate();
        assert!(!report.has("belief-row"));
        assert!(report.has("belief-range"));

        let mut g = pennies_bg();
        g.beliefs[0][0] = vec![0.5, 0.5]; // opponent has a single type
        assert!(g.validate().has("belief-row"));
    }

    #[test]
    fn payoff_tensors_must_be_total() {
        let mut g = pennies_bg();
        g.utilities[0].pop();
        assert!(g.validate().has("tensor"));

        let mut g = pennies_bg();
        g.utilities[1][2] = f64::NAN;
        assert!(g.validate().has("tensor"));

        let mut g = pennies_bg();
        g.agents.pop();
        g.types.pop();
        g.actions.pop();
        g.beliefs.pop();
        g.utilities.pop();
        assert!(g.validate().has("shape"));
    }

    #[test]
    fn agent_form_wires_one_decision_per_type() {
        let g = random_bg_sized(5, [3, 2], [2, 3]);
        let m = agent_form_maid(&g).unwrap();
        assert_eq!(m.decisions().len(), 5);
        assert!(m.hard_violations().is_clean());

        let u = m.node(m.node_id("U[A.t0]").unwrap());
        assert_eq!(u.parents().len(), 4); // Q, own action, B's two type-decisions
        let NodeKind::Utility { table, .. } = &u.kind else { panic!() };
        // rows run over (Q=2, own=2, D[B.t0]=3, D[B.t1]=3); when Q names B.t1
        // the payoff follows D[B.t1] and ignores D[B.t0]
        let want = g.utility_at(0, &[0, 1], &[0, 2]);
        assert_eq!(table[((1 * 2) * 3 + 1) * 3 + 2], want);
        assert_eq!(table[(1 * 2) * 3 * 3 + 2], want);
    }

    #[test]
    fn matching_pennies_mixes_evenly() {
        let g = pennies_bg();
        let sol = solve_direct(&g, &SolverConfig::default()).unwrap();
        assert_row(&sol.strategies[0][0], &[0.5, 0.5], 1e-9);
        assert_row(&sol.strategies[1][0], &[0.5, 0.5], 1e-9);
        assert!(sol.max_regret <= 1e-6);
        assert!(sol.report.converged);
        assert!(worst(&bg_regret(&g, &sol.strategies)) <= 1e-9);
    }

    #[test]
    fn dominant_types_play_pure() {
        let sol = solve_direct(&dominant_bg(), &SolverConfig::default()).unwrap();
        assert_eq!(sol.strategies[0][0], vec![1.0, 0.0]); // cautious holds
        assert_eq!(sol.strategies[0][1], vec![0.0, 1.0]); // bold pushes
        assert_eq!(sol.strategies[1][0], vec![0.0, 1.0]); // right regardless
        assert!(sol.max_regret <= 1e-6);
        assert!(sol.report.converged);
    }

    #[test]
    fn split_beliefs_solve_matches_hand_derivation() {
        let g = split_beliefs_bg();
        let sol = solve_direct(&g, &SolverConfig::default()).unwrap();
        assert_row(&sol.strategies[0][0], &[0.5, 0.5], 1e-9);
        assert_row(&sol.strategies[0][1], &[1.0, 0.0], 1e-9);
        assert_row(&sol.strategies[1][0], &[0.5, 0.5], 1e-9);
        assert_row(&sol.strategies[1][1], &[0.0, 1.0], 1e-9);
        assert!(worst(&bg_regret(&g, &sol.strategies)) <= 1e-6);
        assert!(worst(&sol.per_type_regret) <= 1e-6);
    }

    /// Scan every strategy profile on a uniform grid and keep the lowest
    /// best-response regret. Specialized to 2 agents x 2 types x 2 actions;
    /// entries hold one side's action values against the other side's two
    /// mixing weights, plus the row maxes and the weights themselves.
    fn grid_search_2x2x2(g: &BayesianGame, steps: usize) -> f64 {
        let pts: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
        let u = |agent: usize, ta: usize, tb: usize, ca: usize, cb: usize| {
            g.utility_at(agent, &[ta, tb], &[ca, cb])
        };
        let table_for = |agent: usize| -> Vec<[f64; 8]> {
            let mut tab = Vec::with_capacity(pts.len() * pts.len());
            for &w0 in &pts {
                for &w1 in &pts {
                    let mut e = [0.0f64; 8];
                    for t in 0..2 {
                        for c in 0..2 {
                            let mut v = 0.0;
                            for s in 0..2 {
                                let w = if s == 0 { w0 } else { w1 };
                                let (hit, miss) = if agent == 0 {
                                    (u(0, t, s, c, 0), u(0, t, s, c, 1))
                                } else {
                                    (u(1, s, t, 0, c), u(1, s, t, 1, c))
                                };
                                v += g.beliefs[agent][t][s] * (w * hit + (1.0 - w) * miss);
                            }
                            e[t * 2 + c] = v;
                        }
                        e[4 + t] = e[t * 2].max(e[t * 2 + 1]);
                    }
                    e[6] = w0;
                    e[7] = w1;
                    tab.push(e);
                }
            }
            tab
        };
        let a_tab = table_for(0); // indexed by B's weights
        let b_tab = table_for(1); // indexed by A's weights
        let mut best = f64::INFINITY;
        for eb in &b_tab {
            let (x0, x1) = (eb[6], eb[7]);
            for ea in &a_tab {
                let (y0, y1) = (ea[6], ea[7]);
                let ra0 = ea[4] - (x0 * ea[0] + (1.0 - x0) * ea[1]);
                let ra1 = ea[5] - (x1 * ea[2] + (1.0 - x1) * ea[3]);
                let rb0 = eb[4] - (y0 * eb[0] + (1.0 - y0) * eb[1]);
                let rb1 = eb[5] - (y1 * eb[2] + (1.0 - y1) * eb[3]);
                let r = ra0.max(ra1).max(rb0).max(rb1);
                if r < best {
                    best = r;
                }
            }
        }
        best
    }

    #[test]
    fn direct_solutions_beat_a_fine_grid() {
        let g = random_bg_sized(42, [2, 2], [2, 2]);
        let sol = solve_direct(&g, &SolverConfig::default()).unwrap();
        let mine = worst(&bg_regret(&g, &sol.strategies));
        let grid = grid_search_2x2x2(&g, 100);
        assert!(mine <= 1e-6, "solver regret {mine}");
        assert!(mine <= grid + 1e-9, "a grid point does better: {grid} vs {mine}");
        assert!(grid <= 0.5, "grid oracle suspiciously poor: {grid}");
    }

    #[test]
    fn conversion_shapes_follow_the_game() {
        let (nid, f) = to_nid(&pennies_bg()).unwrap();
        assert_eq!(nid.blocks().len(), 2);
        for b in nid.blocks() {
            assert_eq!(b.maid.nodes().len(), 5);
            assert_eq!(b.maid.decisions().len(), 2);
            let q = b.maid.node(b.maid.node_id("Q").unwrap());
            assert_eq!(q.card(), Some(1)); // single-type counterpart
        }
        assert_eq!(f.entries.len(), 2);
        assert_eq!(
            f.entries.get(&("A".into(), "t".into())),
            Some(&("A.t".into(), "A".into()))
        );

        let g = random_bg_sized(3, [2, 2], [3, 2]);
        let (nid, f) = to_nid(&g).unwrap();
        assert_eq!(nid.blocks().len(), 4);
        for b in nid.blocks() {
            assert_eq!(b.maid.nodes().len(), 5); // Q, two decisions, two payoffs
            assert_eq!(b.maid.decisions().len(), 2);
            let utilities = b.maid.nodes().iter().filter(|n| n.is_utility()).count();
            assert_eq!(utilities, 2);
        }
        let targets: BTreeSet<_> = f.entries.values().collect();
        assert_eq!(targets.len(), 4);
    }

    #[test]
    fn converted_webs_validate_clean() {
        for g in [pennies_bg(), dominant_bg(), split_beliefs_bg()] {
            let (nid, _) = to_nid(&g).unwrap();
            assert!(nid.validate().is_clean());
        }
        for seed in 0..10 {
            let (nid, _) = to_nid(&random_bg(seed)).unwrap();
            let report = nid.validate();
            assert!(report.is_clean(), "seed {seed}: {report}");
        }
    }

    #[test]
    fn conversion_size_is_linear() {
        for seed in 0..8 {
            let g = random_bg(seed);
            let (nid, _) = to_nid(&g).unwrap();
            let n = g.agents.len();
            let total_types: usize = g.types.iter().map(|t| t.len()).sum();
            assert_eq!(nid.blocks().len(), total_types);
            let nodes: usize = nid.blocks().iter().map(|b| b.maid.nodes().len()).sum();
            assert_eq!(nodes, total_types * (1 + 2 * n));
            assert!(nodes <= 3 * n * total_types);
        }
    }

    #[test]
    fn distinguished_actions_anchor_foreign_decisions() {
        let g = random_bg_sized(11, [2, 1], [2, 3]);
        let (nid, f) = to_nid(&g).unwrap();
        let eq = nid.solve(&SolverConfig::default()).unwrap();
        for ((agent, _ty), (block, _)) in &f.entries {
            for (j, other) in g.agents.iter().enumerate() {
                if other == agent {
                    continue;
                }
                let theta = &eq.best_response[&(block.clone(), format!("D[{other}]"))];
                let mut want = vec![0.0; g.actions[j].len()];
                want[0] = 1.0;
                assert_row(&theta.table, &want, 1e-9);
            }
        }
    }

    #[test]
    fn equivalence_holds_for_unique_equilibria() {
        let cfg = SolverConfig::default();

        let g = pennies_bg();
        let (nid, f) = to_nid(&g).unwrap();
        let rep = check_equivalence(&g, &nid, &f, &cfg).unwrap();
        assert!(rep.equivalent, "{} / {}", rep.bg_regret_of_nid, rep.nid_regret_of_bg);
        assert!(rep.max_deviation <= 1e-6, "{}", rep.max_deviation);

        let g = dominant_bg();
        let (nid, f) = to_nid(&g).unwrap();
        let rep = check_equivalence(&g, &nid, &f, &cfg).unwrap();
        assert!(rep.equivalent);
        assert!(rep.max_deviation <= 1e-12, "{}", rep.max_deviation);
        assert_eq!(rep.per_type.len(), 3);
    }

    #[test]
    fn corrupted_conversions_are_flagged() {
        let g = pennies_bg();
        let mut bad = g.clone();
        for v in &mut bad.utilities[0] {
            *v = -*v;
        }
        let (nid, f) = to_nid(&bad).unwrap();
        let rep = check_equivalence(&g, &nid, &f, &SolverConfig::default()).unwrap();
        assert!(!rep.equivalent);
        assert!(rep.bg_regret_of_nid > 0.1, "{}", rep.bg_regret_of_nid);
        assert!(rep.max_deviation > 0.1, "{}", rep.max_deviation);
    }

    #[test]
    fn defective_mappings_are_refused() {
        let cfg = SolverConfig::default();
        let g = pennies_bg();
        let (nid, f) = to_nid(&g).unwrap();

        let mut missing = f.clone();
        missing.entries.remove(&("A".into(), "t".into()));
        assert!(check_equivalence(&g, &nid, &missing, &cfg).is_err());

        let mut doubled = f.clone();
        let target = doubled.entries[&("B".into(), "s".into())].clone();
        doubled.entries.insert(("A".into(), "t".into()), target);
        assert!(check_equivalence(&g, &nid, &doubled, &cfg).is_err());
    }

    #[test]
    fn random_games_cross_validate() {
        let cfg = SolverConfig::default();
        for seed in 0..20 {
            let g = random_bg(seed);
            let (nid, f) = to_nid(&g).unwrap();
            let total_types: usize = g.types.iter().map(|t| t.len()).sum();
            assert_eq!(nid.blocks().len(), total_types);
            let rep = check_equivalence(&g, &nid, &f, &cfg).unwrap();
            assert!(
                rep.equivalent,
                "seed {seed}: game regret of web answer {}, web regret of game answer {}",
                rep.bg_regret_of_nid, rep.nid_regret_of_bg
            );
        }
    }
}
