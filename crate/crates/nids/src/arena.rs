//! Repeated rock-paper-scissors arena. A model-based agent plays the
//! one-shot game while holding a web of hypotheses about its opponent:
//! unpredictable play, a pattern automaton that keeps doing what it has
//! been doing, and two depths of deliberate out-guessing. Each round it
//! solves the web, samples its top-level best response, and reweights the
//! hypotheses by how well they predicted the opponent's actual move.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::canon_float;
use crate::maid::{Maid, MaidBuilder};
use crate::nid::{Block, ModCpd, NidModel};
use crate::solver::SolverConfig;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Move {
    Rock,
    Paper,
    Scissors,
}

pub const MOVES: [Move; 3] = [Move::Rock, Move::Paper, Move::Scissors];

impl Move {
    pub fn index(self) -> usize {
        match self {
            Move::Rock => 0,
            Move::Paper => 1,
            Move::Scissors => 2,
        }
    }

    pub fn from_index(i: usize) -> Move {
        MOVES[i % 3]
    }

    pub fn label(self) -> &'static str {
        match self {
            Move::Rock => "rock",
            Move::Paper => "paper",
            Move::Scissors => "scissors",
        }
    }

    /// The move that beats this one.
    pub fn counter(self) -> Move {
        Move::from_index(self.index() + 1)
    }
}

/// Score of `a` against `b` from `a`'s side: win 1, tie 0, loss -1.
pub fn score(a: Move, b: Move) -> i32 {
    match (3 + a.index() - b.index()) % 3 {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

/// Completed rounds as (own move, opponent move) pairs, oldest first.
pub type History = Vec<(Move, Move)>;

// ==== predictors ====

/// Frequency model of the opponent's next move given the last `window`
/// joint moves, with additive smoothing. An unseen context (including a
/// history shorter than the window) predicts uniformly.
#[derive(Debug, Clone)]
pub struct Predictor {
    pub window: usize,
    pub alpha: f64,
    counts: BTreeMap<Vec<(Move, Move)>, [f64; 3]>,
}

impl Predictor {
    pub fn with_window(window: usize) -> Predictor {
        Predictor {
            window,
            alpha: 1.0,
            counts: BTreeMap::new(),
        }
    }

    fn context(&self, history: &History) -> Option<Vec<(Move, Move)>> {
        if history.len() < self.window {
            return None;
        }
        Some(history[history.len() - self.window..].to_vec())
    }

    pub fn predict(&self, history: &History) -> [f64; 3] {
        let uniform = [1.0 / 3.0; 3];
        let Some(ctx) = self.context(history) else {
            return uniform;
        };
        let Some(counts) = self.counts.get(&ctx) else {
            return uniform;
        };
        let total: f64 = counts.iter().sum();
        let denom = total + 3.0 * self.alpha;
        [
            (counts[0] + self.alpha) / denom,
            (counts[1] + self.alpha) / denom,
            (counts[2] + self.alpha) / denom,
        ]
    }

    /// Record that after `history` the opponent played `observed`.
    pub fn observe(&mut self, history: &History, observed: Move) {
        if let Some(ctx) = self.context(history) {
            self.counts.entry(ctx).or_insert([0.0; 3])[observed.index()] += 1.0;
        }
    }
}

/// Window lengths blended by the agent's opponent model.
pub const BLEND_WINDOWS: usize = 4;

/// Mixture of window-0 through window-3 predictors, weighted by how well
/// each has predicted the moves seen so far.
#[derive(Debug, Clone)]
pub struct BlendedPredictor {
    parts: Vec<Predictor>,
    log_weight: Vec<f64>,
}

impl Default for BlendedPredictor {
    fn default() -> Self {
        BlendedPredictor {
            parts: (0..BLEND_WINDOWS).map(Predictor::with_window).collect(),
            log_weight: vec![0.0; BLEND_WINDOWS],
        }
    }
}

impl BlendedPredictor {
    pub fn predict(&self, history: &History) -> [f64; 3] {
        let top = self.log_weight.iter().cloned().fold(f64::MIN, f64::max);
        let mut out = [0.0; 3];
        let mut total = 0.0;
        for (part, lw) in self.parts.iter().zip(&self.log_weight) {
            let w = (lw - top).exp();
            let p = part.predict(history);
            for m in 0..3 {
                out[m] += w * p[m];
            }
            total += w;
        }
        for m in &mut out {
            *m /= total;
        }
        out
    }

    pub fn observe(&mut self, history: &History, observed: Move) {
        for (part, lw) in self.parts.iter_mut().zip(&mut self.log_weight) {
            *lw += part.predict(history)[observed.index()].ln();
            part.observe(history, observed);
        }
    }
}

// ==== the opponent model ====

/// Mixture components of the opponent model, in weight order.
pub const MIXTURE_BLOCKS: [&str; 4] = ["Nash", "Automaton", "A1", "A2"];

/// Weight below which no hypothesis is allowed to fall, so that none is
/// ever ruled out for good.
pub const WEIGHT_FLOOR: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct OpponentModelState {
    pub weights: [f64; 4],
    pub floor: f64,
    pub predictor: BlendedPredictor,
}

impl Default for OpponentModelState {
    fn default() -> Self {
        OpponentModelState {
            weights: [0.25; 4],
            floor: WEIGHT_FLOOR,
            predictor: BlendedPredictor::default(),
        }
    }
}

/// Posterior over components given each one's probability of the observed
/// move, with every weight then held at or above `floor`.
pub fn bayes_floor(weights: &[f64; 4], likelihood: &[f64; 4], floor: f64) -> [f64; 4] {
    let mut post = [0.0; 4];
    let mut total = 0.0;
    for i in 0..4 {
        post[i] = weights[i] * likelihood[i];
        total += post[i];
    }
    if total <= 0.0 {
        post = *weights;
        total = post.iter().sum();
    }
    for p in &mut post {
        *p /= total;
    }
    // Clamp-and-redistribute: raise the low entries to the floor and scale
    // the rest down to keep the sum at one. Each pass can only add entries
    // to the clamped set, so this settles in at most four passes.
    loop {
        let mut low_sum = 0.0;
        let mut high_sum = 0.0;
        let mut low = [false; 4];
        for i in 0..4 {
            if post[i] < floor - 1e-15 {
                low[i] = true;
                low_sum += floor;
            } else {
                high_sum += post[i];
            }
        }
        if low_sum == 0.0 {
            return post;
        }
        let scale = (1.0 - low_sum) / high_sum;
        let mut changed = false;
        for i in 0..4 {
            if low[i] {
                post[i] = floor;
            } else {
                post[i] *= scale;
                changed = true;
            }
        }
        if !changed || post.iter().all(|&p| p >= floor - 1e-15) {
            return post;
        }
    }
}

/// Build the agent's current model of the game as a web: the top level
/// mixes four hypotheses about Alice (the opponent), two of which reason
/// about Bob (the agent) in turn through the B blocks.
///
/// `prediction` is the pattern predictor's distribution over Alice's next
/// move. Ladder, all best responses: B1 answers the prediction, A1 answers
/// B1, B2 answers A1, A2 answers B2.
pub fn build_opponent_model_nid(weights: &[f64; 4], prediction: &[f64; 3]) -> Result<NidModel> {
    let labels = ["rock", "paper", "scissors"];
    let alice_payoff: Vec<f64> = (0..9)
        .map(|i| score(MOVES[i / 3], MOVES[i % 3]) as f64)
        .collect();
    let bob_payoff: Vec<f64> = (0..9)
        .map(|i| score(MOVES[i % 3], MOVES[i / 3]) as f64)
        .collect();

    let alice_chance = |table: &[f64]| -> Maid {
        MaidBuilder::new()
            .agent("Alice")
            .agent("Bob")
            .chance("Alice", &labels, &[], table.to_vec())
            .finish()
            .expect("fixed shape")
    };
    let duel = |with_alice_payoff: bool, with_bob_payoff: bool, predicted: Option<&[f64]>| -> Maid {
        let mut b = MaidBuilder::new().agent("Alice").agent("Bob");
        b = match predicted {
            Some(p) => b.chance("Alice", &labels, &[], p.to_vec()),
            None => b.decision("Alice", "Alice", &labels, &[]),
        };
        b = b.decision("Bob", "Bob", &labels, &[]);
        if with_alice_payoff {
            b = b.utility("UAlice", "Alice", &["Alice", "Bob"], alice_payoff.clone());
        }
        if with_bob_payoff {
            b = b.utility("UBob", "Bob", &["Alice", "Bob"], bob_payoff.clone());
        }
        b.finish().expect("fixed shape")
    };

    let top = Block::new("Top-level", duel(false, true, None)).with_mod(
        "Bob",
        "Alice",
        ModCpd::unconditional(&MIXTURE_BLOCKS, weights.to_vec()),
    );
    let nash = Block::new("Nash", alice_chance(&[1.0 / 3.0; 3]));
    let automaton = Block::new("Automaton", alice_chance(prediction));
    let b1 = Block::new("B1", duel(false, true, Some(prediction)));
    let a1 = Block::new("A1", duel(true, false, None)).with_mod("Alice", "Bob", ModCpd::point("B1"));
    let b2 = Block::new("B2", duel(false, true, None)).with_mod("Bob", "Alice", ModCpd::point("A1"));
    let a2 = Block::new("A2", duel(true, false, None)).with_mod("Alice", "Bob", ModCpd::point("B2"));

    NidModel::new(vec![top, nash, automaton, b1, a1, b2, a2], "Top-level")
}

/// One round's solved model: what Bob should play and what each hypothesis
/// says Alice will play.
#[derive(Debug, Clone)]
pub struct RoundAnalysis {
    pub bob: Vec<f64>,
    pub alice_components: [Vec<f64>; 4],
    pub max_regret: f64,
}

pub fn analyze_opponent(
    state: &OpponentModelState,
    history: &History,
    cfg: &SolverConfig,
) -> Result<RoundAnalysis> {
    let prediction = state.predictor.predict(history);
    let web = build_opponent_model_nid(&state.weights, &prediction)?;
    let eq = web.solve(cfg)?;
    let strat = |block: &str, decision: &str| -> Vec<f64> {
        eq.best_response[&(block.to_string(), decision.to_string())]
            .table
            .clone()
    };
    Ok(RoundAnalysis {
        bob: strat("Top-level", "Bob"),
        alice_components: [
            vec![1.0 / 3.0; 3],
            prediction.to_vec(),
            strat("A1", "Alice"),
            strat("A2", "Alice"),
        ],
        max_regret: eq.report.max_regret,
    })
}

/// Solve the current model and sample Bob's top-level best response.
pub fn choose_move(
    state: &OpponentModelState,
    history: &History,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<Move> {
    let analysis = analyze_opponent(state, history, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_move(&analysis.bob, &mut rng))
}

fn sample_move<R: Rng>(dist: &[f64], rng: &mut R) -> Move {
    let total: f64 = dist.iter().sum();
    let mut draw = rng.random_range(0.0..total);
    for (i, &p) in dist.iter().enumerate() {
        if draw < p {
            return Move::from_index(i);
        }
        draw -= p;
    }
    Move::Scissors
}

impl OpponentModelState {
    /// Fold one observed opponent move into the model: reweight the
    /// hypotheses by their likelihood and grow the pattern counts.
    /// `components` are the per-hypothesis predictions computed for this
    /// round and `history` is the play before it.
    pub fn update_weights(
        &mut self,
        components: &[Vec<f64>; 4],
        history: &History,
        observed: Move,
    ) {
        let likelihood = [
            components[0][observed.index()],
            components[1][observed.index()],
            components[2][observed.index()],
            components[3][observed.index()],
        ];
        self.weights = bayes_floor(&self.weights, &likelihood, self.floor);
        self.predictor.observe(history, observed);
    }
}

// ==== bots ====

pub trait Bot {
    fn name(&self) -> &'static str;
    /// Pick a move given the completed rounds from this bot's perspective.
    fn choose(&mut self, history: &History) -> Move;
    /// See the outcome of the round just played.
    fn observe(&mut self, _history_before: &History, _own: Move, _theirs: Move) {}
    /// Posterior over the opponent-model mixture, for bots that keep one.
    fn mixture_weights(&self) -> Option<[f64; 4]> {
        None
    }
}

/// The model-based agent.
pub struct NidAgent {
    pub state: OpponentModelState,
    cfg: SolverConfig,
    rng: ChaCha8Rng,
    last: Option<RoundAnalysis>,
}

impl NidAgent {
    pub fn new(seed: u64) -> NidAgent {
        NidAgent {
            state: OpponentModelState::default(),
            cfg: SolverConfig::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            last: None,
        }
    }
}

impl Bot for NidAgent {
    fn name(&self) -> &'static str {
        "nid"
    }

    fn choose(&mut self, history: &History) -> Move {
        let analysis =
            analyze_opponent(&self.state, history, &self.cfg).expect("model stays solvable");
        let mv = sample_move(&analysis.bob, &mut self.rng);
        self.last = Some(analysis);
        mv
    }

    fn observe(&mut self, history_before: &History, _own: Move, theirs: Move) {
        let analysis = self.last.take().expect("observe follows choose");
        self.state
            .update_weights(&analysis.alice_components, history_before, theirs);
    }

    fn mixture_weights(&self) -> Option<[f64; 4]> {
        Some(self.state.weights)
    }
}

struct NashBot {
    rng: ChaCha8Rng,
}

impl Bot for NashBot {
    fn name(&self) -> &'static str {
        "nash"
    }

    fn choose(&mut self, _history: &History) -> Move {
        MOVES[self.rng.random_range(0..3)]
    }
}

/// Cycles rock, paper, scissors.
struct RotationBot;

impl Bot for RotationBot {
    fn name(&self) -> &'static str {
        "rotation"
    }

    fn choose(&mut self, history: &History) -> Move {
        Move::from_index(history.len())
    }
}

/// Replays the opponent's previous move.
struct CopyBot;

impl Bot for CopyBot {
    fn name(&self) -> &'static str {
        "copy"
    }

    fn choose(&mut self, history: &History) -> Move {
        history.last().map(|&(_, theirs)| theirs).unwrap_or(Move::Rock)
    }
}

fn frequency_argmax(moves: impl Iterator<Item = Move>) -> Move {
    let mut counts = [0usize; 3];
    for m in moves {
        counts[m.index()] += 1;
    }
    let best = (0..3).max_by_key(|&i| (counts[i], 3 - i)).unwrap();
    Move::from_index(best)
}

/// Counters the opponent's most frequent move.
struct FrequencyBot;

impl Bot for FrequencyBot {
    fn name(&self) -> &'static str {
        "frequency"
    }

    fn choose(&mut self, history: &History) -> Move {
        frequency_argmax(history.iter().map(|&(_, theirs)| theirs)).counter()
    }
}

/// Assumes the opponent counters our own most frequent move, and counters
/// that.
struct AntiFrequencyBot;

impl Bot for AntiFrequencyBot {
    fn name(&self) -> &'static str {
        "antifrequency"
    }

    fn choose(&mut self, history: &History) -> Move {
        frequency_argmax(history.iter().map(|&(own, _)| own))
            .counter()
            .counter()
    }
}

/// Fixed de Bruijn cycle over move pairs: every two-move pattern appears
/// exactly once per period.
struct DeBruijnBot;

const DE_BRUIJN: [usize; 9] = [0, 0, 1, 0, 2, 1, 1, 2, 2];

impl Bot for DeBruijnBot {
    fn name(&self) -> &'static str {
        "debruijn"
    }

    fn choose(&mut self, history: &History) -> Move {
        Move::from_index(DE_BRUIJN[history.len() % DE_BRUIJN.len()])
    }
}

/// Plays the pattern its own past play makes most likely, which is exactly
/// the behavior the Automaton hypothesis describes.
struct AutomatonBot {
    predictor: BlendedPredictor,
}

impl AutomatonBot {
    fn swapped(history: &History) -> History {
        history.iter().map(|&(own, theirs)| (theirs, own)).collect()
    }
}

impl Bot for AutomatonBot {
    fn name(&self) -> &'static str {
        "automaton"
    }

    fn choose(&mut self, history: &History) -> Move {
        let p = self.predictor.predict(&Self::swapped(history));
        let best = (0..3)
            .max_by(|&i, &j| p[i].partial_cmp(&p[j]).unwrap().then(j.cmp(&i)))
            .unwrap();
        Move::from_index(best)
    }

    fn observe(&mut self, history_before: &History, own: Move, _theirs: Move) {
        self.predictor.observe(&Self::swapped(history_before), own);
    }
}

/// Opponents selectable by name.
pub const BOT_NAMES: [&str; 7] = [
    "nash",
    "rotation",
    "copy",
    "frequency",
    "antifrequency",
    "debruijn",
    "automaton",
];

pub fn make_bot(name: &str, seed: u64) -> Option<Box<dyn Bot>> {
    Some(match name {
        "nid" => Box::new(NidAgent::new(seed)),
        "nash" => Box::new(NashBot {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }),
        "rotation" => Box::new(RotationBot),
        "copy" => Box::new(CopyBot),
        "frequency" => Box::new(FrequencyBot),
        "antifrequency" => Box::new(AntiFrequencyBot),
        "debruijn" => Box::new(DeBruijnBot),
        "automaton" => Box::new(AutomatonBot {
            predictor: BlendedPredictor::default(),
        }),
        _ => return None,
    })
}

// ==== matches ====

#[derive(Debug, Clone)]
pub struct RoundLog {
    pub round: usize,
    pub move_a: Move,
    pub move_b: Move,
    pub score_a: i32,
    pub cum_a: i64,
    pub weights: [f64; 4],
}

#[derive(Debug, Clone)]
pub struct MatchResult {
    pub rounds: usize,
    pub total_score: i64,
    pub log: Vec<RoundLog>,
}

impl MatchResult {
    /// Mean score per round for side A over rounds after `burn_in`.
    pub fn mean_after(&self, burn_in: usize) -> f64 {
        let tail = &self.log[burn_in.min(self.log.len())..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().map(|r| r.score_a as f64).sum::<f64>() / tail.len() as f64
    }
}

/// Play `rounds` simultaneous rounds. Scores are from A's side; B's total
/// is its negation.
pub fn run_match(a: &mut dyn Bot, b: &mut dyn Bot, rounds: usize) -> MatchResult {
    let mut hist_a: History = Vec::with_capacity(rounds);
    let mut hist_b: History = Vec::with_capacity(rounds);
    let mut log = Vec::with_capacity(rounds);
    let mut cum = 0i64;
    for round in 1..=rounds {
        let ma = a.choose(&hist_a);
        let mb = b.choose(&hist_b);
        a.observe(&hist_a, ma, mb);
        b.observe(&hist_b, mb, ma);
        hist_a.push((ma, mb));
        hist_b.push((mb, ma));
        let s = score(ma, mb);
        cum += s as i64;
        let weights = a
            .mixture_weights()
            .or_else(|| b.mixture_weights())
            .unwrap_or([0.25; 4]);
        log.push(RoundLog {
            round,
            move_a: ma,
            move_b: mb,
            score_a: s,
            cum_a: cum,
            weights,
        });
    }
    MatchResult {
        rounds,
        total_score: cum,
        log,
    }
}

/// Per-round log in a fixed comma-separated layout.
pub fn render_csv(result: &MatchResult) -> String {
    let mut out = String::new();
    out.push_str("round, move_a, move_b, score_a, cum_a, w_nash, w_automaton, w_a1, w_a2\n");
    for r in &result.log {
        writeln!(
            out,
            "{}, {}, {}, {}, {}, {}, {}, {}, {}",
            r.round,
            r.move_a.label(),
            r.move_b.label(),
            r.score_a,
            r.cum_a,
            canon_float(r.weights[0]),
            canon_float(r.weights[1]),
            canon_float(r.weights[2]),
            canon_float(r.weights[3]),
        )
        .expect("string write");
    }
    out
}
