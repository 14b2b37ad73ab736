//! Categorical Bayesian networks with exact inference by variable elimination.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result, ValidationReport};

pub type VarId = usize;

/// Row sums may deviate from 1 by at most this much.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn card(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// Conditional probability table. `table` is row-major over the parent
/// assignments (declared parent order, first parent slowest) with the child
/// state varying fastest: `table[row * card + state]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpd {
    pub parents: Vec<VarId>,
    pub table: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct BayesNet {
    vars: Vec<Variable>,
    cpds: Vec<Option<Cpd>>,
    index: BTreeMap<String, VarId>,
}

impl BayesNet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: &str, states: &[&str]) -> Result<VarId> {
        self.add_var_owned(name.to_string(), states.iter().map(|s| s.to_string()).collect())
    }

    pub fn add_var_owned(&mut self, name: String, states: Vec<String>) -> Result<VarId> {
        if name.is_empty() {
            return Err(Error::Model("variable name must be nonempty".into()));
        }
        if self.index.contains_key(&name) {
            return Err(Error::Model(format!("duplicate variable name {name:?}")));
        }
        if states.is_empty() {
            return Err(Error::Model(format!("variable {name:?} needs at least one state")));
        }
        let mut seen = BTreeSet::new();
        for s in &states {
            if !seen.insert(s.clone()) {
                return Err(Error::Model(format!(
                    "variable {name:?} repeats state label {s:?}"
                )));
            }
        }
        let id = self.vars.len();
        self.index.insert(name.clone(), id);
        self.vars.push(Variable { name, states });
        self.cpds.push(None);
        Ok(id)
    }

    pub fn set_cpd(&mut self, var: VarId, parents: Vec<VarId>, table: Vec<f64>) -> Result<()> {
        if var >= self.vars.len() {
            return Err(Error::Model(format!("no variable with id {var}")));
        }
        let mut seen = BTreeSet::new();
        for &p in &parents {
            if p >= self.vars.len() {
                return Err(Error::Model(format!("no variable with id {p}")));
            }
            if p == var {
                return Err(Error::Model(format!(
                    "{:?} cannot be its own parent",
                    self.vars[var].name
                )));
            }
            if !seen.insert(p) {
                return Err(Error::Model(format!(
                    "duplicate parent {:?} for {:?}",
                    self.vars[p].name, self.vars[var].name
                )));
            }
        }
        let expected = self.row_count(&parents) * self.vars[var].card();
        if table.len() != expected {
            return Err(Error::Model(format!(
                "CPD for {:?} has {} entries, expected {}",
                self.vars[var].name,
                table.len(),
                expected
            )));
        }
        self.cpds[var] = Some(Cpd { parents, table });
        Ok(())
    }

    fn row_count(&self, parents: &[VarId]) -> usize {
        parents.iter().map(|&p| self.vars[p].card()).product()
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn cpd(&self, var: VarId) -> Option<&Cpd> {
        self.cpds.get(var).and_then(|c| c.as_ref())
    }

    fn cpd_required(&self, var: VarId) -> Result<&Cpd> {
        self.cpd(var)
            .ok_or_else(|| Error::Model(format!("variable {:?} has no CPD", self.vars[var].name)))
    }

    pub fn parents(&self, var: VarId) -> &[VarId] {
        self.cpd(var).map(|c| c.parents.as_slice()).unwrap_or(&[])
    }

    /// Index of the CPD row selected by a full assignment (only the parents
    /// of `var` are consulted).
    pub fn row_of(&self, var: VarId, assignment: &[usize]) -> Result<usize> {
        let cpd = self.cpd_required(var)?;
        let mut row = 0usize;
        for &p in &cpd.parents {
            row = row * self.vars[p].card() + assignment[p];
        }
        Ok(row)
    }

    // ========================================================================
    // Structure
    // ========================================================================

    /// Deterministic topological order (lowest id first among ready nodes).
    pub fn topo_order(&self) -> Result<Vec<VarId>> {
        let n = self.vars.len();
        let mut indegree = vec![0usize; n];
        let mut children: Vec<Vec<VarId>> = vec![Vec::new(); n];
        for v in 0..n {
            for &p in self.parents(v) {
                indegree[v] += 1;
                children[p].push(v);
            }
        }
        let mut ready: BTreeSet<VarId> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < n {
            let stuck: Vec<&str> = (0..n)
                .filter(|&v| indegree[v] > 0)
                .map(|v| self.vars[v].name.as_str())
                .collect();
            return Err(Error::Model(format!(
                "cycle through {{{}}}",
                stuck.join(", ")
            )));
        }
        Ok(order)
    }

    /// `seed` plus every ancestor of it, following CPD parent edges.
    pub fn ancestors_closure(&self, seed: &[VarId]) -> BTreeSet<VarId> {
        let mut out: BTreeSet<VarId> = BTreeSet::new();
        let mut stack: Vec<VarId> = seed.to_vec();
        while let Some(v) = stack.pop() {
            if out.insert(v) {
                stack.extend_from_slice(self.parents(v));
            }
        }
        out
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (v, var) in self.vars.iter().enumerate() {
            let Some(cpd) = self.cpd(v) else {
                report.push("missing-cpd", format!("variable {:?} has no CPD", var.name));
                continue;
            };
            let card = var.card();
            let rows = self.row_count(&cpd.parents);
            if cpd.table.len() != rows * card {
                report.push(
                    "row-count",
                    format!(
                        "CPD for {:?} has {} entries, expected {}",
                        var.name,
                        cpd.table.len(),
                        rows * card
                    ),
                );
                continue;
            }
            for r in 0..rows {
                let row = &cpd.table[r * card..(r + 1) * card];
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    report.push(
                        "row-sum",
                        format!("CPD for {:?}, row {r}: entries sum to {sum}", var.name),
                    );
                }
                for (s, &p) in row.iter().enumerate() {
                    if !(-1e-12..=1.0 + 1e-12).contains(&p) || p.is_nan() {
                        report.push(
                            "entry-range",
                            format!(
                                "CPD for {:?}, row {r}, state {:?}: probability {p} out of range",
                                var.name, var.states[s]
                            ),
                        );
                    }
                }
            }
        }
        if let Err(Error::Model(msg)) = self.topo_order() {
            report.push("cycle", msg);
        }
        report
    }

    // ========================================================================
    // Queries
    // ========================================================================

    /// P(full assignment) as the direct product of CPD rows.
    pub fn joint_probability(&self, full: &[usize]) -> Result<f64> {
        if full.len() != self.vars.len() {
            return Err(Error::Query(format!(
                "assignment binds {} variables, network has {}",
                full.len(),
                self.vars.len()
            )));
        }
        for (v, &s) in full.iter().enumerate() {
            if s >= self.vars[v].card() {
                return Err(Error::Query(format!(
                    "state index {s} out of range for {:?}",
                    self.vars[v].name
                )));
            }
        }
        let mut p = 1.0;
        for v in 0..self.vars.len() {
            let cpd = self.cpd_required(v)?;
            let row = self.row_of(v, full)?;
            p *= cpd.table[row * self.vars[v].card() + full[v]];
        }
        Ok(p)
    }

    /// Normalized posterior over `target` given evidence (pairs of variable
    /// id and state index). Errors if the evidence has zero probability.
    pub fn query_marginal(&self, target: VarId, evidence: &[(VarId, usize)]) -> Result<Vec<f64>> {
        self.query_joint(&[target], evidence)
    }

    /// Normalized posterior over several targets, row-major in the given
    /// target order (last target varies fastest).
    pub fn query_joint(&self, targets: &[VarId], evidence: &[(VarId, usize)]) -> Result<Vec<f64>> {
        if targets.is_empty() {
            return Err(Error::Query("query needs at least one target".into()));
        }
        let mut tset = BTreeSet::new();
        for &t in targets {
            if t >= self.vars.len() {
                return Err(Error::Query(format!("no variable with id {t}")));
            }
            if !tset.insert(t) {
                return Err(Error::Query(format!(
                    "target {:?} listed twice",
                    self.vars[t].name
                )));
            }
        }
        let ev = self.check_evidence(evidence)?;

        let mut seed: Vec<VarId> = targets.to_vec();
        seed.extend(ev.keys().copied());
        let relevant = self.ancestors_closure(&seed);

        let mut factors: Vec<Factor> = Vec::new();
        for &v in &relevant {
            let cpd = self.cpd_required(v)?;
            let mut f = Factor::from_cpd(self, v, cpd);
            for (&e, &s) in &ev {
                if f.vars.contains(&e) {
                    f = f.reduce(e, s);
                }
            }
            factors.push(f);
        }

        let mut elim: BTreeSet<VarId> = relevant
            .iter()
            .copied()
            .filter(|v| !tset.contains(v) && !ev.contains_key(v))
            .collect();
        while !elim.is_empty() {
            let v = pick_min_fill(&factors, &elim);
            elim.remove(&v);
            let (touching, rest): (Vec<Factor>, Vec<Factor>) =
                factors.into_iter().partition(|f| f.vars.contains(&v));
            factors = rest;
            if touching.is_empty() {
                continue;
            }
            let mut prod = touching[0].clone();
            for f in &touching[1..] {
                prod = prod.multiply(f);
            }
            factors.push(prod.sum_out(v));
        }

        let mut joint = Factor::scalar(1.0);
        for f in &factors {
            joint = joint.multiply(f);
        }
        let total: f64 = joint.data.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Query("evidence has zero probability".into()));
        }

        // Arrange free targets in the requested order, then pin the targets
        // fixed by evidence back in as point masses.
        let free: Vec<VarId> = targets.iter().copied().filter(|t| !ev.contains_key(t)).collect();
        let arranged = joint.arranged(&free);
        let cards: Vec<usize> = targets.iter().map(|&t| self.vars[t].card()).collect();
        let out_len: usize = cards.iter().product();
        let mut out = vec![0.0; out_len];
        let mut idx = vec![0usize; targets.len()];
        for slot in out.iter_mut() {
            let mut pinned_match = true;
            let mut free_flat = 0usize;
            for (d, &t) in targets.iter().enumerate() {
                match ev.get(&t) {
                    Some(&s) => {
                        if idx[d] != s {
                            pinned_match = false;
                            break;
                        }
                    }
                    None => free_flat = free_flat * cards[d] + idx[d],
                }
            }
            if pinned_match {
                *slot = arranged[free_flat] / total;
            }
            for d in (0..targets.len()).rev() {
                idx[d] += 1;
                if idx[d] < cards[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(out)
    }

    fn check_evidence(&self, evidence: &[(VarId, usize)]) -> Result<BTreeMap<VarId, usize>> {
        let mut ev = BTreeMap::new();
        for &(v, s) in evidence {
            if v >= self.vars.len() {
                return Err(Error::Query(format!("no variable with id {v}")));
            }
            if s >= self.vars[v].card() {
                return Err(Error::Query(format!(
                    "state index {s} out of range for {:?}",
                    self.vars[v].name
                )));
            }
            if let Some(&prev) = ev.get(&v) {
                if prev != s {
                    return Err(Error::Query(format!(
                        "conflicting evidence for {:?}",
                        self.vars[v].name
                    )));
                }
            }
            ev.insert(v, s);
        }
        Ok(ev)
    }

    // ========================================================================
    // Sampling
    // ========================================================================

    /// Ancestral sample, deterministic in the seed.
    pub fn sample_assignment(&self, seed: u64) -> Result<Vec<usize>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }

    pub fn sample_with<R: Rng>(&self, rng: &mut R) -> Result<Vec<usize>> {
        let order = self.topo_order()?;
        let mut asn = vec![usize::MAX; self.vars.len()];
        for v in order {
            let cpd = self.cpd_required(v)?;
            let card = self.vars[v].card();
            let mut row = 0usize;
            for &p in &cpd.parents {
                row = row * self.vars[p].card() + asn[p];
            }
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = card - 1;
            for s in 0..card {
                acc += cpd.table[row * card + s];
                if u < acc {
                    pick = s;
                    break;
                }
            }
            asn[v] = pick;
        }
        Ok(asn)
    }

    // ========================================================================
    // Label-based helpers
    // ========================================================================

    pub fn evidence_from_labels(&self, pairs: &[(&str, &str)]) -> Result<Vec<(VarId, usize)>> {
        pairs
            .iter()
            .map(|&(name, label)| {
                let v = self
                    .var_id(name)
                    .ok_or_else(|| Error::Query(format!("unknown variable {name:?}")))?;
                let s = self.vars[v].state_index(label).ok_or_else(|| {
                    Error::Query(format!("variable {name:?} has no state {label:?}"))
                })?;
                Ok((v, s))
            })
            .collect()
    }

    pub fn full_assignment_from_labels(&self, pairs: &[(&str, &str)]) -> Result<Vec<usize>> {
        let ev = self.evidence_from_labels(pairs)?;
        let mut full = vec![usize::MAX; self.vars.len()];
        for (v, s) in ev {
            full[v] = s;
        }
        if let Some(v) = full.iter().position(|&s| s == usize::MAX) {
            return Err(Error::Query(format!(
                "assignment does not bind {:?}",
                self.vars[v].name
            )));
        }
        Ok(full)
    }
}

// ============================================================================
// Factors
// ============================================================================

/// Dense nonnegative table over an ordered variable scope; row-major with the
/// last scope variable varying fastest.
#[derive(Debug, Clone)]
pub struct Factor {
    pub vars: Vec<VarId>,
    pub card: Vec<usize>,
    pub data: Vec<f64>,
}

impl Factor {
    pub fn scalar(v: f64) -> Self {
        Factor {
            vars: Vec::new(),
            card: Vec::new(),
            data: vec![v],
        }
    }

    fn from_cpd(net: &BayesNet, var: VarId, cpd: &Cpd) -> Self {
        let mut vars = cpd.parents.clone();
        vars.push(var);
        let card: Vec<usize> = vars.iter().map(|&v| net.var(v).card()).collect();
        Factor {
            vars,
            card,
            data: cpd.table.clone(),
        }
    }

    fn strides(card: &[usize]) -> Vec<usize> {
        let mut s = vec![1usize; card.len()];
        for i in (0..card.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * card[i + 1];
        }
        s
    }

    pub fn multiply(&self, other: &Factor) -> Factor {
        let mut vars = self.vars.clone();
        let mut card = self.card.clone();
        for (i, &v) in other.vars.iter().enumerate() {
            if !vars.contains(&v) {
                vars.push(v);
                card.push(other.card[i]);
            }
        }
        let sa = Self::strides(&self.card);
        let sb = Self::strides(&other.card);
        let mut a_stride = vec![0usize; vars.len()];
        let mut b_stride = vec![0usize; vars.len()];
        for (ri, v) in vars.iter().enumerate() {
            if let Some(ai) = self.vars.iter().position(|x| x == v) {
                a_stride[ri] = sa[ai];
            }
            if let Some(bi) = other.vars.iter().position(|x| x == v) {
                b_stride[ri] = sb[bi];
            }
        }
        let total: usize = card.iter().product();
        let mut data = vec![0.0; total];
        let mut idx = vec![0usize; vars.len()];
        let (mut ai, mut bi) = (0usize, 0usize);
        for slot in data.iter_mut() {
            *slot = self.data[ai] * other.data[bi];
            for d in (0..vars.len()).rev() {
                idx[d] += 1;
                ai += a_stride[d];
                bi += b_stride[d];
                if idx[d] < card[d] {
                    break;
                }
                idx[d] = 0;
                ai -= a_stride[d] * card[d];
                bi -= b_stride[d] * card[d];
            }
        }
        Factor { vars, card, data }
    }

    pub fn sum_out(&self, var: VarId) -> Factor {
        let pos = self
            .vars
            .iter()
            .position(|&v| v == var)
            .expect("sum_out: var not in scope");
        let mut vars = self.vars.clone();
        let mut card = self.card.clone();
        vars.remove(pos);
        card.remove(pos);
        let s_old = Self::strides(&self.card);
        let s_new = Self::strides(&card);
        let mut data = vec![0.0; card.iter().product::<usize>().max(1)];
        for (flat, &val) in self.data.iter().enumerate() {
            let mut out = 0usize;
            let mut j = 0usize;
            for i in 0..self.vars.len() {
                if i == pos {
                    continue;
                }
                let digit = (flat / s_old[i]) % self.card[i];
                out += digit * s_new[j];
                j += 1;
            }
            data[out] += val;
        }
        Factor { vars, card, data }
    }

    pub fn reduce(&self, var: VarId, state: usize) -> Factor {
        let pos = self
            .vars
            .iter()
            .position(|&v| v == var)
            .expect("reduce: var not in scope");
        let mut vars = self.vars.clone();
        let mut card = self.card.clone();
        vars.remove(pos);
        card.remove(pos);
        let s_old = Self::strides(&self.card);
        let s_new = Self::strides(&card);
        let mut data = vec![0.0; card.iter().product::<usize>().max(1)];
        for (flat, &val) in self.data.iter().enumerate() {
            if (flat / s_old[pos]) % self.card[pos] != state {
                continue;
            }
            let mut out = 0usize;
            let mut j = 0usize;
            for i in 0..self.vars.len() {
                if i == pos {
                    continue;
                }
                let digit = (flat / s_old[i]) % self.card[i];
                out += digit * s_new[j];
                j += 1;
            }
            data[out] = val;
        }
        Factor { vars, card, data }
    }

    /// Data reordered so the scope reads exactly `order` (a permutation of
    /// the current scope).
    pub fn arranged(&self, order: &[VarId]) -> Vec<f64> {
        assert_eq!(order.len(), self.vars.len(), "arranged: scope mismatch");
        let s_old = Self::strides(&self.card);
        let positions: Vec<usize> = order
            .iter()
            .map(|v| {
                self.vars
                    .iter()
                    .position(|x| x == v)
                    .expect("arranged: var not in scope")
            })
            .collect();
        let card: Vec<usize> = positions.iter().map(|&p| self.card[p]).collect();
        let total: usize = card.iter().product::<usize>().max(1);
        let mut out = vec![0.0; total];
        let mut idx = vec![0usize; order.len()];
        for slot in out.iter_mut() {
            let mut flat = 0usize;
            for (d, &p) in positions.iter().enumerate() {
                flat += idx[d] * s_old[p];
            }
            *slot = self.data[flat];
            for d in (0..order.len()).rev() {
                idx[d] += 1;
                if idx[d] < card[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        out
    }
}

/// Min-fill elimination choice over the interaction graph induced by the
/// current factor scopes; ties go to the lowest variable id.
fn pick_min_fill(factors: &[Factor], elim: &BTreeSet<VarId>) -> VarId {
    let mut adj: BTreeMap<VarId, BTreeSet<VarId>> = BTreeMap::new();
    for f in factors {
        for &a in &f.vars {
            for &b in &f.vars {
                if a != b {
                    adj.entry(a).or_default().insert(b);
                }
            }
        }
    }
    let empty = BTreeSet::new();
    let mut best: Option<(usize, VarId)> = None;
    for &v in elim {
        let neigh = adj.get(&v).unwrap_or(&empty);
        let mut fill = 0usize;
        for &a in neigh {
            for &b in neigh {
                if a < b && !adj.get(&a).map(|s| s.contains(&b)).unwrap_or(false) {
                    fill += 1;
                }
            }
        }
        if best.map(|(bf, _)| fill < bf).unwrap_or(true) {
            best = Some((fill, v));
        }
    }
    best.expect("pick_min_fill: empty elimination set").1
}

// ============================================================================
