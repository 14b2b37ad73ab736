//! Exhaustive-enumeration reference queries. Deliberately independent of the
//! variable-elimination machinery: probabilities are accumulated by walking
//! every full assignment and multiplying CPD entries directly. Exponential in
//! the number of variables; intended for tests and cross-checks only.

use crate::bayes::{BayesNet, VarId};
use crate::{Error, Result};

/// P(full assignment) computed with local stride arithmetic.
fn mass(net: &BayesNet, full: &[usize]) -> Result<f64> {
    let mut p = 1.0;
    for v in 0..net.n_vars() {
        let cpd = net
            .cpd(v)
            .ok_or_else(|| Error::Model(format!("variable {:?} has no CPD", net.var(v).name)))?;
        let mut row = 0usize;
        for &parent in &cpd.parents {
            row = row * net.var(parent).card() + full[parent];
        }
        p *= cpd.table[row * net.var(v).card() + full[v]];
    }
    Ok(p)
}

/// Posterior over `targets` (row-major, last target fastest) by summing the
/// full joint.
pub fn joint(net: &BayesNet, targets: &[VarId], evidence: &[(VarId, usize)]) -> Result<Vec<f64>> {
    let n = net.n_vars();
    let cards: Vec<usize> = (0..n).map(|v| net.var(v).card()).collect();
    let t_cards: Vec<usize> = targets.iter().map(|&t| cards[t]).collect();
    let out_len: usize = t_cards.iter().product();
    let mut out = vec![0.0; out_len];
    let mut total = 0.0;

    let mut full = vec![0usize; n];
    let space: usize = cards.iter().product();
    for _ in 0..space {
        if evidence.iter().all(|&(v, s)| full[v] == s) {
            let p = mass(net, &full)?;
            total += p;
            let mut slot = 0usize;
            for (i, &t) in targets.iter().enumerate() {
                slot = slot * t_cards[i] + full[t];
            }
            out[slot] += p;
        }
        for d in (0..n).rev() {
            full[d] += 1;
            if full[d] < cards[d] {
                break;
            }
            full[d] = 0;
        }
    }

    if !(total > 0.0) {
        return Err(Error::Query("evidence has zero probability".into()));
    }
    for x in out.iter_mut() {
        *x /= total;
    }
    Ok(out)
}

pub fn marginal(net: &BayesNet, target: VarId, evidence: &[(VarId, usize)]) -> Result<Vec<f64>> {
    joint(net, &[target], evidence)
}
