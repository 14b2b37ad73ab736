//! The scenario models used across tests, the reproduction report, and the
//! command-line `reproduce` command.

use crate::bgame::BayesianGame;
use crate::format::{ModelBody, ModelDocument};
use crate::maid::{Maid, Strategy, StrategyProfile};
use crate::nid::{Block, ModCpd, NidModel};

/// The leading-team variable is described with three values but its dependent
/// tables only cover two. Both readings ship; reports state which one is in
/// play.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeaderConvention {
    /// Keep {alice, bob, none} with prior (0.4, 0.3, 0.3); rows the source
    /// tables do not cover become uniform, and no-leader play is worthless to
    /// both sides (all-zero utility rows).
    ThreeValueUniformFill,
    /// Drop the third value and renormalize the prior to (4/7, 3/7).
    TwoValueRenormalized,
}

pub const LEADER_CONVENTIONS: [LeaderConvention; 2] = [
    LeaderConvention::ThreeValueUniformFill,
    LeaderConvention::TwoValueRenormalized,
];

impl LeaderConvention {
    pub fn label(self) -> &'static str {
        match self {
            LeaderConvention::ThreeValueUniformFill => "three-value-leader",
            LeaderConvention::TwoValueRenormalized => "two-value-leader",
        }
    }
}

// ============================================================================
// Baseball
// ============================================================================

fn leader_states(conv: LeaderConvention) -> Vec<&'static str> {
    match conv {
        LeaderConvention::ThreeValueUniformFill => vec!["alice", "bob", "none"],
        LeaderConvention::TwoValueRenormalized => vec!["alice", "bob"],
    }
}

fn leader_prior(conv: LeaderConvention) -> Vec<f64> {
    match conv {
        LeaderConvention::ThreeValueUniformFill => vec![0.4, 0.3, 0.3],
        LeaderConvention::TwoValueRenormalized => vec![4.0 / 7.0, 3.0 / 7.0],
    }
}

/// Alice's payoff per (Leader, Steal, PitchOut, ThrownOut), row-major. The
/// impossible no-steal-yet-thrown-out combinations carry `dead`.
fn alice_utility(conv: LeaderConvention, dead: f64) -> Vec<f64> {
    let mut t = vec![
        -60.0, 110.0, -80.0, 110.0, dead, 10.0, dead, 0.0, // leading herself
        -90.0, 110.0, -100.0, 110.0, dead, 20.0, dead, 0.0, // trailing
    ];
    if conv == LeaderConvention::ThreeValueUniformFill {
        t.extend([0.0, 0.0, 0.0, 0.0, dead, 0.0, dead, 0.0]); // nobody leads
    }
    t
}

fn baseball_maid_inner(conv: LeaderConvention, dead: f64) -> Maid {
    let ua = alice_utility(conv, dead);
    let ub: Vec<f64> = ua.iter().map(|v| -v).collect();
    let n_leader = leader_states(conv).len();
    Maid::builder()
        .agent("Alice")
        .agent("Bob")
        .chance("Leader", &leader_states(conv), &[], leader_prior(conv))
        .decision("Steal", "Alice", &["true", "false"], &["Leader"])
        .decision("PitchOut", "Bob", &["true", "false"], &["Leader"])
        .chance(
            "ThrownOut",
            &["true", "false"],
            &["Steal", "PitchOut"],
            vec![0.8, 0.2, 0.6, 0.4, 0.0, 1.0, 0.0, 1.0],
        )
        .utility("UAlice", "Alice", &["Leader", "Steal", "PitchOut", "ThrownOut"], ua)
        .utility("UBob", "Bob", &["Leader", "Steal", "PitchOut", "ThrownOut"], ub)
        .finish()
        .unwrap_or_else(|e| panic!("baseball fixture ({} leader values): {e}", n_leader))
}

/// Figure-style two-decision steal/pitch-out model.
pub fn baseball_maid(conv: LeaderConvention) -> Maid {
    baseball_maid_inner(conv, 0.0)
}

/// Same model with the impossible utility rows filled with a sentinel, for
/// checking that those rows never influence expected utility.
pub fn baseball_maid_with_dead_rows(conv: LeaderConvention, dead: f64) -> Maid {
    baseball_maid_inner(conv, dead)
}

/// The fixed stealing/pitching rules both sides were said to follow before
/// anyone optimizes: steal 0.75/0.65, pitch out 0.90/0.50 by leader, uniform
/// when nobody leads.
pub fn baseball_automaton_profile(maid: &Maid) -> StrategyProfile {
    let steal = maid.node_id("Steal").expect("baseball maid");
    let rows = maid.info_row_count(steal);
    let mut steal_table = vec![0.75, 0.25, 0.65, 0.35];
    let mut pitch_table = vec![0.90, 0.10, 0.50, 0.50];
    if rows == 3 {
        steal_table.extend([0.5, 0.5]);
        pitch_table.extend([0.5, 0.5]);
    }
    let mut profile = StrategyProfile::default();
    profile.set("Steal", Strategy { table: steal_table });
    profile.set("PitchOut", Strategy { table: pitch_table });
    profile
}

// ============================================================================
// Rock-paper-scissors
// ============================================================================

/// One-shot simultaneous hand game; zero-sum, unique fully mixed equilibrium.
pub fn rps_maid() -> Maid {
    let moves = ["rock", "paper", "scissors"];
    let ua = vec![0.0, -1.0, 1.0, 1.0, 0.0, -1.0, -1.0, 1.0, 0.0];
    let ub: Vec<f64> = ua.iter().map(|v| -v).collect();
    Maid::builder()
        .agent("Alice")
        .agent("Bob")
        .decision("Alice", "Alice", &moves, &[])
        .decision("Bob", "Bob", &moves, &[])
        .utility("UAlice", "Alice", &["Alice", "Bob"], ua)
        .utility("UBob", "Bob", &["Alice", "Bob"], ub)
        .finish()
        .expect("hand game fixture")
}

// ============================================================================
// Belief webs
// ============================================================================

/// Block in which stealing is a fixed habit: always go, whoever leads.
fn always_steal_block(conv: LeaderConvention) -> Block {
    let n = leader_states(conv).len();
    let maid = Maid::builder()
        .chance("Leader", &leader_states(conv), &[], leader_prior(conv))
        .chance("Steal", &["true", "false"], &["Leader"], [1.0, 0.0].repeat(n))
        .finish()
        .expect("always-steal block");
    Block::new("AlwaysSteal", maid)
}

/// Block in which the pitch out is automatic.
fn always_pitch_block(conv: LeaderConvention) -> Block {
    let n = leader_states(conv).len();
    let maid = Maid::builder()
        .chance("Leader", &leader_states(conv), &[], leader_prior(conv))
        .chance("PitchOut", &["true", "false"], &["Leader"], [1.0, 0.0].repeat(n))
        .finish()
        .expect("always-pitch block");
    Block::new("AlwaysPitch", maid)
}

/// Baseball where each side mostly credits the other with a fixed habit:
/// Bob gives 0.7 to Alice stealing on habit, Alice gives 0.7 to Bob pitching
/// out on habit. Both self-views stay rational.
pub fn reputation_baseball_nid(conv: LeaderConvention) -> NidModel {
    let top = Block::new("Top-level", baseball_maid(conv))
        .with_mod(
            "Bob",
            "Steal",
            ModCpd::unconditional(&["Top-level", "AlwaysSteal"], vec![0.3, 0.7]),
        )
        .with_mod(
            "Alice",
            "PitchOut",
            ModCpd::unconditional(&["Top-level", "AlwaysPitch"], vec![0.3, 0.7]),
        );
    NidModel::new(
        vec![top, always_steal_block(conv), always_pitch_block(conv)],
        "Top-level",
    )
    .expect("reputation web")
}

/// A company decides whether to advertise and whether to increase supply,
/// but knows that once it advertises it will overrate the campaign: its
/// self-view for the supply decision then switches to an optimistic block
/// where sales run hot.
pub fn sales_bias_nid() -> NidModel {
    let profit = vec![70.0, -70.0, 50.0, -40.0, 80.0, -60.0, 60.0, -30.0];
    let top = Maid::builder()
        .agent("Company")
        .decision("Advertise", "Company", &["true", "false"], &[])
        .decision("Increase", "Company", &["true", "false"], &["Advertise"])
        .chance("Sales", &["high", "low"], &["Advertise"], vec![0.7, 0.3, 0.5, 0.5])
        .utility("Profit", "Company", &["Advertise", "Increase", "Sales"], profit.clone())
        .finish()
        .expect("sales top block");
    let optimism = Maid::builder()
        .agent("Company")
        .chance("Advertise", &["true", "false"], &[], vec![1.0, 0.0])
        .decision("Increase", "Company", &["true", "false"], &["Advertise"])
        .chance("Sales", &["high", "low"], &["Advertise"], vec![0.9, 0.1, 0.5, 0.5])
        .utility("Profit", "Company", &["Advertise", "Increase", "Sales"], profit)
        .finish()
        .expect("sales optimism block");
    NidModel::new(
        vec![
            Block::new("Top-level", top).with_mod(
                "Company",
                "Increase",
                ModCpd {
                    parents: vec!["Advertise".to_string()],
                    labels: vec!["Top-level".to_string(), "Optimism".to_string()],
                    table: vec![0.0, 1.0, 1.0, 0.0],
                },
            ),
            Block::new("Optimism", optimism),
        ],
        "Top-level",
    )
    .expect("sales bias web")
}

/// Two steal opportunities in a row. A second pitch out on top of a first
/// one costs Bob another 20 (the crowd reads it as panic), and Bob gives 0.3
/// to caving to that pressure and pitching out late no matter what.
pub fn two_attempt_baseball_nid(conv: LeaderConvention) -> NidModel {
    let tf = ["true", "false"];
    let throw = vec![0.8, 0.2, 0.6, 0.4, 0.0, 1.0, 0.0, 1.0];
    let ua = alice_utility(conv, 0.0);
    let ub: Vec<f64> = ua.iter().map(|v| -v).collect();
    // second-stage payoff for Bob, with PitchOut1 appended as the fastest
    // digit: -20 whenever both pitch outs happened
    let mut ub2 = Vec::with_capacity(ua.len() * 2);
    for (r, &v) in ua.iter().enumerate() {
        let pitched2 = (r / 2) % 2 == 0;
        for pitched1 in [true, false] {
            ub2.push(-v - if pitched2 && pitched1 { 20.0 } else { 0.0 });
        }
    }
    let stage2_ip = ["Leader", "Steal1", "PitchOut1", "ThrownOut1"];
    let top = Maid::builder()
        .agent("Alice")
        .agent("Bob")
        .chance("Leader", &leader_states(conv), &[], leader_prior(conv))
        .decision("Steal1", "Alice", &tf, &["Leader"])
        .decision("PitchOut1", "Bob", &tf, &["Leader"])
        .chance("ThrownOut1", &tf, &["Steal1", "PitchOut1"], throw.clone())
        .decision("Steal2", "Alice", &tf, &stage2_ip)
        .decision("PitchOut2", "Bob", &tf, &stage2_ip)
        .chance("ThrownOut2", &tf, &["Steal2", "PitchOut2"], throw)
        .utility("UAlice1", "Alice", &["Leader", "Steal1", "PitchOut1", "ThrownOut1"], ua.clone())
        .utility("UBob1", "Bob", &["Leader", "Steal1", "PitchOut1", "ThrownOut1"], ub)
        .utility("UAlice2", "Alice", &["Leader", "Steal2", "PitchOut2", "ThrownOut2"], ua)
        .utility(
            "UBob2",
            "Bob",
            &["Leader", "Steal2", "PitchOut2", "ThrownOut2", "PitchOut1"],
            ub2,
        )
        .finish()
        .expect("two-attempt top block");
    let n = leader_states(conv).len();
    let pressure = Maid::builder()
        .chance("Leader", &leader_states(conv), &[], leader_prior(conv))
        .chance("PitchOut2", &tf, &["Leader"], [1.0, 0.0].repeat(n))
        .finish()
        .expect("pressure block");
    NidModel::new(
        vec![
            Block::new("Top-level", top).with_mod(
                "Bob",
                "PitchOut2",
                ModCpd::unconditional(&["Top-level", "Pressure"], vec![0.7, 0.3]),
            ),
            Block::new("Pressure", pressure),
        ],
        "Top-level",
    )
    .expect("two-attempt web")
}

/// Baseball with the runner's speed spelled out: a pitch out catches a fast
/// runner 0.4/0.2 (pitch/no pitch) and a slow one 0.8/0.6.
pub fn speed_baseball_maid(conv: LeaderConvention, fast_runner: bool) -> Maid {
    let ua = alice_utility(conv, 0.0);
    let ub: Vec<f64> = ua.iter().map(|v| -v).collect();
    let speed = if fast_runner { vec![1.0, 0.0] } else { vec![0.0, 1.0] };
    Maid::builder()
        .agent("Alice")
        .agent("Bob")
        .chance("Leader", &leader_states(conv), &[], leader_prior(conv))
        .chance("Speed", &["fast", "slow"], &[], speed)
        .decision("Steal", "Alice", &["true", "false"], &["Leader"])
        .decision("PitchOut", "Bob", &["true", "false"], &["Leader"])
        .chance(
            "ThrownOut",
            &["true", "false"],
            &["Steal", "PitchOut", "Speed"],
            vec![
                0.4, 0.6, 0.8, 0.2, // stealing into a pitch out: fast, slow
                0.2, 0.8, 0.6, 0.4, // stealing without one
                0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, // staying put is safe
            ],
        )
        .utility("UAlice", "Alice", &["Leader", "Steal", "PitchOut", "ThrownOut"], ua)
        .utility("UBob", "Bob", &["Leader", "Steal", "PitchOut", "ThrownOut"], ub)
        .finish()
        .expect("speed baseball fixture")
}

/// The teams disagree about the runner: the world (and Alice) has a slow
/// runner, but Bob gives 0.8 to the fast-runner picture of the same game.
pub fn runner_speed_nid(conv: LeaderConvention) -> NidModel {
    let top = Block::new("Top-level", speed_baseball_maid(conv, false)).with_mod(
        "Bob",
        "Steal",
        ModCpd::unconditional(&["Top-level", "FastRunner"], vec![0.2, 0.8]),
    );
    let fast = Block::new("FastRunner", speed_baseball_maid(conv, true));
    NidModel::new(vec![top, fast], "Top-level").expect("runner speed web")
}

/// Mutually referring blocks that are still legal: Bob is sure Alice steals
/// per the fast-runner picture, and in that picture Alice is sure Bob
/// pitches out per the top-level picture. The loop alternates between the
/// two (agent, decision) pairs, so every belief still bottoms out.
pub fn circular_speed_nid(conv: LeaderConvention) -> NidModel {
    let top = Block::new("Top-level", speed_baseball_maid(conv, false)).with_mod(
        "Bob",
        "Steal",
        ModCpd::unconditional(&["Top-level", "FastRunner"], vec![0.0, 1.0]),
    );
    let fast = Block::new("FastRunner", speed_baseball_maid(conv, true)).with_mod(
        "Alice",
        "PitchOut",
        ModCpd::unconditional(&["Top-level", "FastRunner"], vec![1.0, 0.0]),
    );
    NidModel::new(vec![top, fast], "Top-level").expect("circular speed web")
}

/// Three-way chairperson vote. Alice chairs ties, wants the job, and takes a
/// consolation point for backing a winning rival; Bob and Carol want the
/// job and hate Alice keeping it. Alice may have struck a deal (Collude),
/// and her views of the others' votes shift with that deal toward the
/// matching voting-bloc block; the partner reneges with 0.1.
pub fn committee_nid() -> NidModel {
    let cands = ["alice", "bob", "carol"];
    let winner = |a: usize, b: usize, c: usize| -> usize {
        let mut count = [0usize; 3];
        count[a] += 1;
        count[b] += 1;
        count[c] += 1;
        (0..3).find(|&w| count[w] >= 2).unwrap_or(0)
    };
    let mut ua = Vec::with_capacity(27);
    let mut ub = Vec::with_capacity(27);
    let mut uc = Vec::with_capacity(27);
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let w = winner(a, b, c);
                ua.push(if w == 0 {
                    2.0
                } else if a == w {
                    1.0
                } else {
                    0.0
                });
                ub.push(if w == 1 { 2.0 } else if w == 0 { -1.0 } else { 0.0 });
                uc.push(if w == 2 { 2.0 } else if w == 0 { -1.0 } else { 0.0 });
            }
        }
    }
    let top = Maid::builder()
        .agent("Alice")
        .agent("Bob")
        .agent("Carol")
        .chance("Collude", &["none", "bob", "carol"], &[], vec![0.2, 0.3, 0.5])
        .decision("VoteA", "Alice", &cands, &[])
        .decision("VoteB", "Bob", &cands, &[])
        .decision("VoteC", "Carol", &cands, &[])
        .utility("UAlice", "Alice", &["VoteA", "VoteB", "VoteC"], ua)
        .utility("UBob", "Bob", &["VoteA", "VoteB", "VoteC"], ub)
        .utility("UCarol", "Carol", &["VoteA", "VoteB", "VoteC"], uc)
        .finish()
        .expect("committee top block");
    let bloc = |name: &str, vote: usize| -> Block {
        let mut row = vec![0.0; 3];
        row[vote] = 1.0;
        let maid = Maid::builder()
            .chance("VoteB", &cands, &[], row.clone())
            .chance("VoteC", &cands, &[], row)
            .finish()
            .expect("voting bloc block");
        Block::new(name, maid)
    };
    let top = Block::new("Top-level", top)
        .with_mod(
            "Alice",
            "VoteB",
            ModCpd {
                parents: vec!["Collude".to_string()],
                labels: vec!["Top-level".to_string(), "BobBloc".to_string(), "CarolBloc".to_string()],
                table: vec![
                    1.0, 0.0, 0.0, // no deal: Bob optimizes
                    0.0, 1.0, 0.0, // deal with Bob: he votes his bloc
                    0.0, 0.1, 0.9, // deal with Carol: mostly her bloc
                ],
            },
        )
        .with_mod(
            "Alice",
            "VoteC",
            ModCpd {
                parents: vec!["Collude".to_string()],
                labels: vec!["Top-level".to_string(), "BobBloc".to_string(), "CarolBloc".to_string()],
                table: vec![
                    1.0, 0.0, 0.0, //
                    0.0, 0.9, 0.1, //
                    0.0, 0.0, 1.0, //
                ],
            },
        );
    NidModel::new(
        vec![top, bloc("BobBloc", 1), bloc("CarolBloc", 2)],
        "Top-level",
    )
    .expect("committee web")
}

// ============================================================================
// Bayesian games
// ============================================================================

/// Matching pennies as a one-type-per-agent game of incomplete information.
/// Unique equilibrium: both mix evenly.
pub fn pennies_bg() -> BayesianGame {
    BayesianGame {
        agents: vec!["A".into(), "B".into()],
        types: vec![vec!["t".into()], vec!["s".into()]],
        actions: vec![
            vec!["heads".into(), "tails".into()],
            vec!["heads".into(), "tails".into()],
        ],
        beliefs: vec![vec![vec![1.0]], vec![vec![1.0]]],
        // A wins on a match, B on a mismatch.
        utilities: vec![vec![1.0, -1.0, -1.0, 1.0], vec![-1.0, 1.0, 1.0, -1.0]],
    }
}

/// Each type of the row player has its own strictly dominant action; the
/// column player's action is dominant outright. Unique pure equilibrium:
/// cautious holds, bold pushes, B goes right.
pub fn dominant_bg() -> BayesianGame {
    BayesianGame {
        agents: vec!["A".into(), "B".into()],
        types: vec![vec!["cautious".into(), "bold".into()], vec!["even".into()]],
        actions: vec![
            vec!["hold".into(), "push".into()],
            vec!["left".into(), "right".into()],
        ],
        beliefs: vec![vec![vec![1.0], vec![1.0]], vec![vec![0.6, 0.4]]],
        utilities: vec![
            vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0],
            vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
        ],
    }
}

/// Every type is certain of exactly one counterpart type: the (t1, s1) pair
/// plays matching pennies between themselves, the (t2, s2) pair has dominant
/// actions (x for A, y for B). The four best-response conditions decouple
/// into those two pairs, so the equilibrium is unique and hand-checkable:
/// t1 and s1 mix evenly, t2 plays x, s2 plays y.
pub fn split_beliefs_bg() -> BayesianGame {
    BayesianGame {
        agents: vec!["A".into(), "B".into()],
        types: vec![vec!["t1".into(), "t2".into()], vec!["s1".into(), "s2".into()]],
        actions: vec![vec!["x".into(), "y".into()], vec!["x".into(), "y".into()]],
        beliefs: vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        ],
        utilities: vec![
            vec![
                1.0, -1.0, -1.0, 1.0, // (t1, s1): match to win
                0.0, 0.0, 0.0, 0.0, // (t1, s2): never believed by either side
                0.0, 0.0, 0.0, 0.0, // (t2, s1)
                1.0, 1.0, 0.0, 0.0, // (t2, s2): x pays regardless
            ],
            vec![
                -1.0, 1.0, 1.0, -1.0, // (t1, s1): mismatch to win
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 1.0, // (t2, s2): y pays regardless
            ],
        ],
    }
}

/// Seeded random two-agent game: 1-3 types and 2-3 actions per agent,
/// beliefs bounded away from zero, payoffs in [-5, 5].
pub fn random_bg(seed: u64) -> BayesianGame {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let shape_t = [rng.random_range(1..=3usize), rng.random_range(1..=3usize)];
    let shape_a = [rng.random_range(2..=3usize), rng.random_range(2..=3usize)];
    random_bg_from(&mut rng, shape_t, shape_a)
}

/// Same draw with the shape pinned down.
pub fn random_bg_sized(seed: u64, shape_t: [usize; 2], shape_a: [usize; 2]) -> BayesianGame {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    random_bg_from(&mut rng, shape_t, shape_a)
}

fn random_bg_from(
    rng: &mut rand_chacha::ChaCha8Rng,
    shape_t: [usize; 2],
    shape_a: [usize; 2],
) -> BayesianGame {
    use rand::Rng;
    let types: Vec<Vec<String>> = shape_t
        .iter()
        .map(|&k| (0..k).map(|x| format!("t{x}")).collect())
        .collect();
    let actions: Vec<Vec<String>> = shape_a
        .iter()
        .map(|&k| (0..k).map(|x| format!("a{x}")).collect())
        .collect();
    let mut beliefs = Vec::new();
    for i in 0..2 {
        let other = types[1 - i].len();
        beliefs.push(
            (0..types[i].len())
                .map(|_| {
                    let mut row: Vec<f64> =
                        (0..other).map(|_| rng.random_range(0.05..1.0)).collect();
                    let sum: f64 = row.iter().sum();
                    for v in &mut row {
                        *v /= sum;
                    }
                    row
                })
                .collect(),
        );
    }
    let cells = types[0].len() * types[1].len() * actions[0].len() * actions[1].len();
    let utilities = (0..2)
        .map(|_| (0..cells).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    BayesianGame {
        agents: vec!["A".into(), "B".into()],
        types,
        actions,
        beliefs,
        utilities,
    }
}

// ==== shipped documents ====

/// The documents committed under `fixtures/` at the repository root, keyed
/// by file stem. Tests assert the files match these models byte for byte.
pub fn fixture_documents() -> Vec<(&'static str, ModelDocument)> {
    let conv = LeaderConvention::ThreeValueUniformFill;
    let maid = baseball_maid(conv);
    let net = maid
        .implement_profile(&baseball_automaton_profile(&maid))
        .expect("profile fits the game");
    let mut reputation = ModelDocument::new(ModelBody::Nid(reputation_baseball_nid(conv)));
    reputation.metadata.insert(
        "title".into(),
        "repeated steal attempt with a reputation block".into(),
    );
    vec![
        ("baseball", ModelDocument::new(ModelBody::Maid(maid))),
        ("baseball_network", ModelDocument::new(ModelBody::Network(net))),
        ("pennies", ModelDocument::new(ModelBody::BayesianGame(pennies_bg()))),
        ("reputation", reputation),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build_and_validate() {
        for conv in LEADER_CONVENTIONS {
            assert!(baseball_maid(conv).validate().is_clean());
        }
        assert!(rps_maid().validate().is_clean());
    }

    #[test]
    fn webs_build_and_validate() {
        for conv in LEADER_CONVENTIONS {
            assert!(reputation_baseball_nid(conv).validate().is_clean());
            assert!(two_attempt_baseball_nid(conv).validate().is_clean());
            assert!(runner_speed_nid(conv).validate().is_clean());
            assert!(circular_speed_nid(conv).validate().is_clean());
        }
        assert!(sales_bias_nid().validate().is_clean());
        assert!(committee_nid().validate().is_clean());
    }

    #[test]
    fn payoffs_are_zero_sum() {
        let maid = rps_maid();
        let ua = maid.node_id("UAlice").unwrap();
        let ub = maid.node_id("UBob").unwrap();
        let (a, b) = (maid.node(ua), maid.node(ub));
        let (crate::maid::NodeKind::Utility { table: ta, .. }, crate::maid::NodeKind::Utility { table: tb, .. }) =
            (&a.kind, &b.kind)
        else {
            panic!()
        };
        for (x, y) in ta.iter().zip(tb) {
            assert_eq!(x + y, 0.0);
        }
    }
}
