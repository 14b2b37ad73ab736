//! Command-line front end. Exit codes: 0 success, 1 the input is invalid
//! (schema or validation findings, bad queries), 2 the solver gave up,
//! 3 usage, I/O, or syntax problems.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nids::arena;
use nids::bgame::{self, BayesianGame};
use nids::doc::Out;
use nids::format::{parse_document, serialize_document, ModelBody, ModelDocument};
use nids::maid::Maid;
use nids::nid::{NidEquilibrium, NidModel};
use nids::solver::{solve_maid, EquilibriumReport, Method, SolverConfig};
use nids::{canon_float, Error};

#[derive(Parser)]
#[command(name = "nids", version, about = "Networks of influence diagrams: validate, solve, query, convert, and play")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum ReportStyle {
    #[default]
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a model document.
    Validate { file: PathBuf },
    /// Flatten a web document into a single game document.
    Compile {
        file: PathBuf,
        /// Where to write the flattened game.
        #[arg(long)]
        out: PathBuf,
    },
    /// Find an equilibrium of a game, web, or incomplete-information game.
    Solve {
        file: PathBuf,
        /// Regret below which a profile counts as an equilibrium.
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// auto, backward-induction, support-enumeration, or
        /// best-response-dynamics.
        #[arg(long, default_value = "auto")]
        method: String,
        #[arg(long, value_enum, default_value_t)]
        report: ReportStyle,
    },
    /// Conditional distributions in a network document.
    Query {
        file: PathBuf,
        /// Comma-separated variable names.
        #[arg(long)]
        target: String,
        /// Comma-separated Variable=state pairs.
        #[arg(long)]
        evidence: Option<String>,
    },
    /// Rewrite an incomplete-information game as a web of blocks.
    ConvertBg {
        file: PathBuf,
        /// Where to write the web.
        #[arg(long)]
        out: PathBuf,
    },
    /// Play repeated rock-paper-scissors against a chosen opponent.
    Roshambo {
        #[arg(long, default_value_t = 100)]
        rounds: usize,
        /// nash, rotation, copy, frequency, antifrequency, debruijn, or
        /// automaton.
        #[arg(long)]
        opponent: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the per-round log here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Recompute the reference-versus-computed report (REPRODUCTION.md).
    Reproduce {
        /// Write to a file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match &e {
            Error::Syntax { .. } | Error::Io(_) => 3,
            Error::NoEquilibrium { .. } | Error::PolicySpaceTooLarge { .. } => 2,
            Error::Model(_) | Error::Schema { .. } | Error::Query(_) => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Error::from(e).into()
    }
}

fn usage(message: String) -> Failure {
    Failure { code: 3, message }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_document(path: &Path) -> Result<ModelDocument, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(parse_document(&text)?)
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Validate { file } => validate(&file),
        Cmd::Compile { file, out } => compile(&file, &out),
        Cmd::Solve { file, epsilon, seed, method, report } => {
            solve(&file, epsilon, seed, &method, report)
        }
        Cmd::Query { file, target, evidence } => query(&file, &target, evidence.as_deref()),
        Cmd::ConvertBg { file, out } => convert_bg(&file, &out),
        Cmd::Roshambo { rounds, opponent, seed, csv } => {
            roshambo(rounds, &opponent, seed, csv.as_deref())
        }
        Cmd::Reproduce { out } => reproduce(out.as_deref()),
    }
}

// ==== validate ====

fn validate(file: &Path) -> Result<(), Failure> {
    let doc = read_document(file)?;
    let findings = doc.validate();
    let mut hard = 0;
    for f in &findings.findings {
        if f.code == "perfect-recall" {
            eprintln!("warning: {}: {}", f.code, f.message);
        } else {
            hard += 1;
            eprintln!("{}: {}", f.code, f.message);
        }
    }
    if hard > 0 {
        return Err(Failure {
            code: 1,
            message: format!("{} finding(s) in {} document", hard, doc.kind()),
        });
    }
    println!("valid {} document", doc.kind());
    Ok(())
}

// ==== compile ====

fn compile(file: &Path, out: &Path) -> Result<(), Failure> {
    let doc = read_document(file)?;
    let ModelBody::Nid(web) = &doc.body else {
        return Err(Failure {
            code: 1,
            message: format!("compile expects a nid document, got {}", doc.kind()),
        });
    };
    let compiled = web.compile()?;
    let n_blocks = web.blocks().len();
    let n_nodes = compiled.maid.nodes().len();
    let mut flat = ModelDocument::new(ModelBody::Maid(compiled.maid));
    flat.metadata = doc.metadata.clone();
    for rec in &compiled.names {
        let role = match rec.role {
            nids::nid::NameRole::Shared => "shared",
            nids::nid::NameRole::Replica => "replica",
            nids::nid::NameRole::BestResponse => "best-response",
            nids::nid::NameRole::Belief => "belief",
            nids::nid::NameRole::BlockChoice => "block-choice",
        };
        let mut value = format!("{} {} :: {}", role, rec.block, rec.source);
        if let Some(agent) = &rec.agent {
            write!(value, " for {agent}").expect("string write");
        }
        flat.metadata.insert(format!("map.{}", rec.generated), value);
    }
    std::fs::write(out, serialize_document(&flat))?;
    println!(
        "compiled {n_blocks} block(s) into a {n_nodes}-node game: {}",
        out.display()
    );
    Ok(())
}

// ==== solve ====

fn solver_config(epsilon: f64, seed: u64, method: &str) -> Result<SolverConfig, Failure> {
    let method = Method::parse(method).ok_or_else(|| {
        usage(format!(
            "unknown method {method:?} (expected auto, backward-induction, \
             support-enumeration, or best-response-dynamics)"
        ))
    })?;
    Ok(SolverConfig { epsilon, seed, method, ..SolverConfig::default() })
}

fn solve(
    file: &Path,
    epsilon: f64,
    seed: u64,
    method: &str,
    style: ReportStyle,
) -> Result<(), Failure> {
    let doc = read_document(file)?;
    let cfg = solver_config(epsilon, seed, method)?;
    let out = match &doc.body {
        ModelBody::Maid(m) => {
            let report = solve_maid(m, &cfg)?;
            render_maid_solution(m, &report, style)
        }
        ModelBody::Nid(web) => {
            let eq = web.solve(&cfg)?;
            render_nid_solution(web, &eq, style)
        }
        ModelBody::BayesianGame(g) => {
            let solution = bgame::solve_direct(g, &cfg)?;
            render_bg_solution(g, &solution, style)
        }
        ModelBody::Network(_) => {
            return Err(Failure {
                code: 1,
                message: "solve expects a game document (maid, nid, or bayesian_game); \
                          a network has nothing left to decide"
                    .to_string(),
            });
        }
    };
    print!("{out}");
    Ok(())
}

fn dist_text(dist: &[f64], labels: &[String]) -> String {
    let parts: Vec<String> = labels
        .iter()
        .zip(dist)
        .map(|(l, p)| format!("{l} {}", canon_float(*p)))
        .collect();
    parts.join(", ")
}

fn row_condition(m: &Maid, decision: usize, row: usize) -> String {
    let pa = m.row_assignment(decision, row);
    if pa.is_empty() {
        return "always".to_string();
    }
    let parts: Vec<String> = pa
        .iter()
        .map(|&(p, v)| {
            let node = m.node(p);
            format!("{} = {}", node.name, node.domain().expect("value-bearing parent")[v])
        })
        .collect();
    parts.join(", ")
}

fn rows_out(m: &Maid, decision: usize, strategies: &[(&str, &[f64])]) -> Out {
    let n = m.node(decision).card().expect("decision");
    let mut rows = Vec::new();
    for r in 0..m.info_row_count(decision) {
        let pa = m.row_assignment(decision, r);
        let when: Vec<(String, Out)> = pa
            .iter()
            .map(|&(p, v)| {
                let node = m.node(p);
                (node.name.clone(), Out::str(&node.domain().expect("parent")[v]))
            })
            .collect();
        let mut row = vec![("when".to_string(), Out::Obj(when))];
        for (key, table) in strategies {
            let dist = &table[r * n..(r + 1) * n];
            row.push((key.to_string(), Out::Arr(dist.iter().map(|&p| Out::Num(p)).collect())));
        }
        rows.push(Out::Obj(row));
    }
    Out::Arr(rows)
}

fn report_header_out(report: &EquilibriumReport) -> Vec<(String, Out)> {
    vec![
        ("method".to_string(), Out::str(report.method_used)),
        ("converged".to_string(), Out::Bool(report.converged)),
        ("max_regret".to_string(), Out::Num(report.max_regret)),
    ]
}

fn render_maid_solution(m: &Maid, report: &EquilibriumReport, style: ReportStyle) -> String {
    if style == ReportStyle::Structured {
        let mut decisions = Vec::new();
        for d in m.decisions() {
            let node = m.node(d);
            let table = &report.profile.get(&node.name).expect("solved").table;
            decisions.push(Out::Obj(vec![
                ("decision".to_string(), Out::str(&node.name)),
                ("actions".to_string(), Out::strings(node.domain().expect("decision"))),
                ("rows".to_string(), rows_out(m, d, &[("p", table)])),
            ]));
        }
        let mut top = vec![("kind".to_string(), Out::str("maid-solution"))];
        top.extend(report_header_out(report));
        top.push(("decisions".to_string(), Out::Arr(decisions)));
        return nids::doc::emit(&Out::Obj(top));
    }
    let mut out = String::new();
    let _ = writeln!(out, "method: {}", report.method_used);
    let _ = writeln!(out, "converged: {}", report.converged);
    let _ = writeln!(out, "max regret: {}", canon_float(report.max_regret));
    for d in m.decisions() {
        let node = m.node(d);
        let owner = m.agents()[match &node.kind {
            nids::maid::NodeKind::Decision { owner, .. } => *owner,
            _ => unreachable!("decisions() returns decisions"),
        }]
        .clone();
        let n = node.card().expect("decision");
        let table = &report.profile.get(&node.name).expect("solved").table;
        let _ = writeln!(out, "decision {} (agent {owner}):", node.name);
        for r in 0..m.info_row_count(d) {
            let _ = writeln!(
                out,
                "  {}: {}",
                row_condition(m, d, r),
                dist_text(&table[r * n..(r + 1) * n], node.domain().expect("decision")),
            );
        }
    }
    out
}

fn render_nid_solution(web: &NidModel, eq: &NidEquilibrium, style: ReportStyle) -> String {
    if style == ReportStyle::Structured {
        let mut decisions = Vec::new();
        for block in web.blocks() {
            for d in block.maid.decisions() {
                let node = block.maid.node(d);
                let key = (block.label.clone(), node.name.clone());
                decisions.push(Out::Obj(vec![
                    ("block".to_string(), Out::str(&block.label)),
                    ("decision".to_string(), Out::str(&node.name)),
                    ("actions".to_string(), Out::strings(node.domain().expect("decision"))),
                    (
                        "rows".to_string(),
                        rows_out(
                            &block.maid,
                            d,
                            &[
                                ("best_response", &eq.best_response[&key].table),
                                ("played", &eq.actually_played[&key].table),
                            ],
                        ),
                    ),
                ]));
            }
        }
        let mut top = vec![("kind".to_string(), Out::str("nid-solution"))];
        top.extend(report_header_out(&eq.report));
        top.push(("decisions".to_string(), Out::Arr(decisions)));
        return nids::doc::emit(&Out::Obj(top));
    }
    let mut out = String::new();
    let _ = writeln!(out, "method: {}", eq.report.method_used);
    let _ = writeln!(out, "converged: {}", eq.report.converged);
    let _ = writeln!(out, "max regret: {}", canon_float(eq.report.max_regret));
    for block in web.blocks() {
        for d in block.maid.decisions() {
            let node = block.maid.node(d);
            let key = (block.label.clone(), node.name.clone());
            let n = node.card().expect("decision");
            let theta = &eq.best_response[&key].table;
            let phi = &eq.actually_played[&key].table;
            let _ = writeln!(out, "block {} decision {}:", block.label, node.name);
            for r in 0..block.maid.info_row_count(d) {
                let labels = node.domain().expect("decision");
                let _ = writeln!(
                    out,
                    "  {}: best response {} | played {}",
                    row_condition(&block.maid, d, r),
                    dist_text(&theta[r * n..(r + 1) * n], labels),
                    dist_text(&phi[r * n..(r + 1) * n], labels),
                );
            }
        }
    }
    out
}

fn render_bg_solution(g: &BayesianGame, solution: &bgame::BgSolution, style: ReportStyle) -> String {
    if style == ReportStyle::Structured {
        let mut types = Vec::new();
        for (i, agent) in g.agents.iter().enumerate() {
            for (t, ty) in g.types[i].iter().enumerate() {
                types.push(Out::Obj(vec![
                    ("agent".to_string(), Out::str(agent)),
                    ("type".to_string(), Out::str(ty)),
                    (
                        "p".to_string(),
                        Out::Arr(
                            solution.strategies[i][t].iter().map(|&p| Out::Num(p)).collect(),
                        ),
                    ),
                    ("regret".to_string(), Out::Num(solution.per_type_regret[i][t])),
                ]));
            }
        }
        let mut top = vec![("kind".to_string(), Out::str("bayesian-game-solution"))];
        top.extend(report_header_out(&solution.report));
        top.push(("types".to_string(), Out::Arr(types)));
        return nids::doc::emit(&Out::Obj(top));
    }
    let mut out = String::new();
    let _ = writeln!(out, "method: {}", solution.report.method_used);
    let _ = writeln!(out, "converged: {}", solution.report.converged);
    let _ = writeln!(out, "max regret: {}", canon_float(solution.max_regret));
    for (i, agent) in g.agents.iter().enumerate() {
        for (t, ty) in g.types[i].iter().enumerate() {
            let _ = writeln!(
                out,
                "agent {agent} type {ty}: {}",
                dist_text(&solution.strategies[i][t], &g.actions[i]),
            );
        }
    }
    out
}

// ==== query ====

fn query(file: &Path, target: &str, evidence: Option<&str>) -> Result<(), Failure> {
    let doc = read_document(file)?;
    let ModelBody::Network(net) = &doc.body else {
        return Err(Failure {
            code: 1,
            message: format!("query expects a network document, got {}", doc.kind()),
        });
    };
    let targets: Vec<&str> = target.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if targets.is_empty() {
        return Err(usage("no target variables given".to_string()));
    }
    let mut target_ids = Vec::with_capacity(targets.len());
    for name in &targets {
        target_ids.push(
            net.var_id(name)
                .ok_or_else(|| Error::Query(format!("unknown variable {name:?}")))?,
        );
    }
    let mut pairs = Vec::new();
    if let Some(text) = evidence {
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (var, state) = part
                .split_once('=')
                .ok_or_else(|| usage(format!("evidence {part:?} is not Variable=state")))?;
            pairs.push((var.trim(), state.trim()));
        }
    }
    let ev = net.evidence_from_labels(&pairs)?;
    let dist = net.query_joint(&target_ids, &ev)?;

    // Rows come out with the last target fastest.
    let cards: Vec<usize> = target_ids.iter().map(|&t| net.var(t).card()).collect();
    for (row, p) in dist.iter().enumerate() {
        let mut rest = row;
        let mut states = vec![0usize; cards.len()];
        for k in (0..cards.len()).rev() {
            states[k] = rest % cards[k];
            rest /= cards[k];
        }
        let assignment: Vec<String> = target_ids
            .iter()
            .zip(&states)
            .map(|(&t, &s)| format!("{} = {}", net.var(t).name, net.var(t).states[s]))
            .collect();
        println!("P({}) = {}", assignment.join(", "), canon_float(*p));
    }
    Ok(())
}

// ==== convert-bg ====

fn convert_bg(file: &Path, out: &Path) -> Result<(), Failure> {
    let doc = read_document(file)?;
    let ModelBody::BayesianGame(g) = &doc.body else {
        return Err(Failure {
            code: 1,
            message: format!("convert-bg expects a bayesian_game document, got {}", doc.kind()),
        });
    };
    let (web, mapping) = bgame::to_nid(g)?;
    let n_blocks = web.blocks().len();
    let mut converted = ModelDocument::new(ModelBody::Nid(web));
    converted.metadata = doc.metadata.clone();
    for ((agent, ty), (block, decider)) in &mapping.entries {
        converted
            .metadata
            .insert(format!("map.{agent}.{ty}"), format!("{block} :: D[{decider}]"));
    }
    std::fs::write(out, serialize_document(&converted))?;
    println!("converted into a {n_blocks}-block web: {}", out.display());
    Ok(())
}

// ==== roshambo ====

fn roshambo(rounds: usize, opponent: &str, seed: u64, csv: Option<&Path>) -> Result<(), Failure> {
    let mut rival = arena::make_bot(opponent, seed.wrapping_add(1)).ok_or_else(|| {
        usage(format!(
            "unknown opponent {opponent:?} (expected one of {})",
            arena::BOT_NAMES.join(", ")
        ))
    })?;
    let mut agent = arena::NidAgent::new(seed);
    let result = arena::run_match(&mut agent, rival.as_mut(), rounds);
    println!(
        "{} round(s) against {}: total {:+}, mean per round {:.4}",
        result.rounds,
        opponent,
        result.total_score,
        result.mean_after(0),
    );
    let w = agent.state.weights;
    println!(
        "final weights: nash {}, automaton {}, out-guess {}, double-out-guess {}",
        canon_float(w[0]),
        canon_float(w[1]),
        canon_float(w[2]),
        canon_float(w[3]),
    );
    if let Some(path) = csv {
        std::fs::write(path, arena::render_csv(&result))?;
        println!("log: {}", path.display());
    }
    Ok(())
}

// ==== reproduce ====

fn reproduce(out: Option<&Path>) -> Result<(), Failure> {
    let text = nids::reproduce::markdown()?;
    match out {
        Some(path) => {
            std::fs::write(path, &text)?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
