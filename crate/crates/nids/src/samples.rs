//! Seeded random model generators for tests, property checks, and benchmarks.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bayes::BayesNet;
use crate::maid::Maid;
use crate::nid::{Block, ModCpd, NidModel};

/// Uniform point on the probability simplex of dimension `k` (normalized
/// exponentials), guarded away from exact zeros.
pub fn simplex_point<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k)
        .map(|_| {
            let u: f64 = rng.random::<f64>().max(1e-12);
            -u.ln()
        })
        .collect();
    let sum: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= sum;
    }
    v
}

/// Random DAG over `n_vars` variables with up to 3 parents each, random
/// cardinalities in 2..=max_card, random CPD rows. Edges always point from
/// lower to higher variable index, so the result is acyclic by construction.
pub fn random_network<R: Rng>(rng: &mut R, n_vars: usize, max_card: usize) -> BayesNet {
    let n = rng.random_range(1..=n_vars.max(1));
    let mut net = BayesNet::new();
    for i in 0..n {
        let card = rng.random_range(2..=max_card.max(2));
        let states: Vec<String> = (0..card).map(|s| format!("s{s}")).collect();
        net.add_var_owned(format!("V{i}"), states).unwrap();
    }
    for v in 0..n {
        let max_parents = v.min(3);
        let n_parents = rng.random_range(0..=max_parents);
        let mut parents: Vec<usize> = Vec::new();
        while parents.len() < n_parents {
            let p = rng.random_range(0..v);
            if !parents.contains(&p) {
                parents.push(p);
            }
        }
        let rows: usize = parents.iter().map(|&p| net.var(p).card()).product();
        let card = net.var(v).card();
        let mut table = Vec::with_capacity(rows * card);
        for _ in 0..rows {
            table.extend(simplex_point(rng, card));
        }
        net.set_cpd(v, parents, table).unwrap();
    }
    net
}

/// Random web over 1..=3 agents and 1..=4 blocks. Blocks share a skeleton
/// (chance root, up to two value nodes that are decisions in some blocks and
/// chance in others, one utility per deciding agent); mod tables are random
/// over random block subsets that always include the block itself. May
/// contain self-loops or perfect-recall findings; callers filter on
/// `validate()`.
pub fn random_web(seed: u64) -> NidModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = ["A", "B", "C"];
    let n_agents = rng.random_range(1..=3usize);
    let n_blocks = rng.random_range(1..=4usize);
    let n_dec = rng.random_range(1..=2usize);
    let owners: Vec<usize> = (0..n_dec).map(|_| rng.random_range(0..n_agents)).collect();
    let labels: Vec<String> = (0..n_blocks).map(|i| format!("K{i}")).collect();
    let as_decision: Vec<Vec<bool>> = (0..n_blocks)
        .map(|_| (0..n_dec).map(|_| rng.random_bool(0.6)).collect())
        .collect();

    let mut blocks = Vec::new();
    for bi in 0..n_blocks {
        let mut b = Maid::builder();
        for a in &names[..n_agents] {
            b = b.agent(a);
        }
        b = b.chance_owned(
            "C0".into(),
            vec!["u".into(), "v".into()],
            Vec::new(),
            simplex_point(&mut rng, 2),
        );
        let mut value_nodes: Vec<String> = vec!["C0".into()];
        for (di, &owner) in owners.iter().enumerate() {
            let name = format!("D{di}");
            let ips: Vec<String> = value_nodes
                .iter()
                .filter(|_| rng.random_bool(0.4))
                .cloned()
                .collect();
            if as_decision[bi][di] {
                b = b.decision_owned(
                    name.clone(),
                    names[owner].into(),
                    vec!["x".into(), "y".into()],
                    ips,
                );
            } else {
                let rows = 1usize << ips.len();
                let mut table = Vec::with_capacity(rows * 2);
                for _ in 0..rows {
                    table.extend(simplex_point(&mut rng, 2));
                }
                b = b.chance_owned(name.clone(), vec!["x".into(), "y".into()], ips, table);
            }
            value_nodes.push(name);
        }
        let deciders: BTreeSet<usize> = (0..n_dec)
            .filter(|&d| as_decision[bi][d])
            .map(|d| owners[d])
            .collect();
        for &a in &deciders {
            let rows = 1usize << value_nodes.len();
            let table: Vec<f64> = (0..rows).map(|_| rng.random_range(-5.0..5.0)).collect();
            b = b.utility_owned(
                format!("U{}", names[a]),
                names[a].into(),
                value_nodes.clone(),
                table,
            );
        }
        blocks.push(Block::new(&labels[bi], b.finish().expect("generated block is well formed")));
    }

    for bi in 0..n_blocks {
        for di in 0..n_dec {
            if !as_decision[bi][di] {
                continue;
            }
            let deciders: Vec<usize> = (0..n_dec)
                .filter(|&d| as_decision[bi][d])
                .map(|d| owners[d])
                .collect();
            for &a in &deciders {
                if rng.random_bool(0.5) {
                    continue;
                }
                let mut mod_labels = vec![labels[bi].clone()];
                for (oi, l) in labels.iter().enumerate() {
                    if oi != bi && rng.random_bool(0.5) {
                        mod_labels.push(l.clone());
                    }
                }
                let with_parent = rng.random_bool(0.3);
                let rows = if with_parent { 2 } else { 1 };
                let mut table = Vec::new();
                for _ in 0..rows {
                    table.extend(simplex_point(&mut rng, mod_labels.len()));
                }
                let cpd = ModCpd {
                    parents: if with_parent { vec!["C0".into()] } else { Vec::new() },
                    labels: mod_labels,
                    table,
                };
                blocks[bi].mods.insert((names[a].into(), format!("D{di}")), cpd);
            }
        }
    }
    NidModel::new(blocks, "K0").expect("generated web is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_networks_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..40 {
            let net = random_network(&mut rng, 7, 4);
            assert!(net.validate().is_clean(), "{}", net.validate());
        }
    }

    #[test]
    fn simplex_points_normalize() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for k in 1..6 {
            let p = simplex_point(&mut rng, k);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x > 0.0));
        }
    }
}
