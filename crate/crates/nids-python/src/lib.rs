//! Python bindings: parse, validate, solve, query, convert, and play from
//! Python. Solutions come back as plain dicts and lists.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use nids::arena;
use nids::bgame;
use nids::format::{parse_document, serialize_document, ModelBody, ModelDocument};
use nids::maid::Maid;
use nids::solver::{solve_maid, Method, SolverConfig};

fn err(e: nids::Error) -> PyErr {
    match &e {
        nids::Error::Io(_) => PyIOError::new_err(e.to_string()),
        nids::Error::NoEquilibrium { .. } | nids::Error::PolicySpaceTooLarge { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn config(epsilon: f64, seed: u64, method: &str) -> PyResult<SolverConfig> {
    let method = Method::parse(method)
        .ok_or_else(|| PyValueError::new_err(format!("unknown method {method:?}")))?;
    Ok(SolverConfig { epsilon, seed, method, ..SolverConfig::default() })
}

/// One strategy table as a list of row dicts: {"when": {...}, key: [...], ...}.
fn rows_list<'py>(
    py: Python<'py>,
    m: &Maid,
    decision: usize,
    tables: &[(&str, &[f64])],
) -> PyResult<Bound<'py, PyList>> {
    let node = m.node(decision);
    let n = node.card().expect("decision has actions");
    let rows = PyList::empty(py);
    for r in 0..m.info_row_count(decision) {
        let row = PyDict::new(py);
        let when = PyDict::new(py);
        for (p, v) in m.row_assignment(decision, r) {
            let parent = m.node(p);
            when.set_item(&parent.name, &parent.domain().expect("value-bearing parent")[v])?;
        }
        row.set_item("when", when)?;
        for (key, table) in tables {
            row.set_item(*key, table[r * n..(r + 1) * n].to_vec())?;
        }
        rows.append(row)?;
    }
    Ok(rows)
}

/// A parsed model file. `kind` is one of "network", "maid", "nid", or
/// "bayesian_game"; the applicable methods depend on it.
#[pyclass]
struct Document {
    doc: ModelDocument,
}

#[pymethods]
impl Document {
    #[getter]
    fn kind(&self) -> &'static str {
        self.doc.kind()
    }

    #[getter]
    fn metadata(&self) -> std::collections::BTreeMap<String, String> {
        self.doc.metadata.clone()
    }

    fn serialize(&self) -> String {
        serialize_document(&self.doc)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        std::fs::write(path, serialize_document(&self.doc))
            .map_err(|e| PyIOError::new_err(format!("{path}: {e}")))
    }

    /// Validation findings as (code, message) pairs; empty means clean.
    fn validate(&self) -> Vec<(String, String)> {
        self.doc
            .validate()
            .findings
            .into_iter()
            .map(|f| (f.code.to_string(), f.message))
            .collect()
    }

    /// Solve the document's game. Networks have nothing to decide.
    #[pyo3(signature = (epsilon=1e-6, seed=0, method="auto"))]
    fn solve<'py>(
        &self,
        py: Python<'py>,
        epsilon: f64,
        seed: u64,
        method: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let cfg = config(epsilon, seed, method)?;
        let out = PyDict::new(py);
        match &self.doc.body {
            ModelBody::Maid(m) => {
                let report = solve_maid(m, &cfg).map_err(err)?;
                out.set_item("kind", "maid-solution")?;
                out.set_item("method", report.method_used)?;
                out.set_item("converged", report.converged)?;
                out.set_item("max_regret", report.max_regret)?;
                let decisions = PyDict::new(py);
                for d in m.decisions() {
                    let name = &m.node(d).name;
                    let table = &report.profile.get(name).expect("solved").table;
                    decisions.set_item(name, rows_list(py, m, d, &[("p", table)])?)?;
                }
                out.set_item("decisions", decisions)?;
            }
            ModelBody::Nid(web) => {
                let eq = web.solve(&cfg).map_err(err)?;
                out.set_item("kind", "nid-solution")?;
                out.set_item("method", eq.report.method_used)?;
                out.set_item("converged", eq.report.converged)?;
                out.set_item("max_regret", eq.report.max_regret)?;
                let blocks = PyDict::new(py);
                for block in web.blocks() {
                    let decisions = PyDict::new(py);
                    for d in block.maid.decisions() {
                        let name = &block.maid.node(d).name;
                        let key = (block.label.clone(), name.clone());
                        decisions.set_item(
                            name,
                            rows_list(
                                py,
                                &block.maid,
                                d,
                                &[
                                    ("best_response", &eq.best_response[&key].table),
                                    ("played", &eq.actually_played[&key].table),
                                ],
                            )?,
                        )?;
                    }
                    blocks.set_item(&block.label, decisions)?;
                }
                out.set_item("blocks", blocks)?;
            }
            ModelBody::BayesianGame(g) => {
                let solution = bgame::solve_direct(g, &cfg).map_err(err)?;
                out.set_item("kind", "bayesian-game-solution")?;
                out.set_item("method", solution.report.method_used)?;
                out.set_item("converged", solution.report.converged)?;
                out.set_item("max_regret", solution.max_regret)?;
                let types = PyDict::new(py);
                for (i, agent) in g.agents.iter().enumerate() {
                    let per_type = PyDict::new(py);
                    for (t, ty) in g.types[i].iter().enumerate() {
                        per_type.set_item(ty, solution.strategies[i][t].clone())?;
                    }
                    types.set_item(agent, per_type)?;
                }
                out.set_item("strategies", types)?;
            }
            ModelBody::Network(_) => {
                return Err(PyValueError::new_err(
                    "solve expects a game document (maid, nid, or bayesian_game)",
                ));
            }
        }
        Ok(out)
    }

    /// Posterior over the target variables given evidence, as a dict from
    /// state-label tuples to probabilities.
    #[pyo3(signature = (targets, evidence=None))]
    fn query<'py>(
        &self,
        py: Python<'py>,
        targets: Vec<String>,
        evidence: Option<std::collections::BTreeMap<String, String>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let ModelBody::Network(net) = &self.doc.body else {
            return Err(PyValueError::new_err(format!(
                "query expects a network document, got {}",
                self.doc.kind()
            )));
        };
        let mut target_ids = Vec::new();
        for name in &targets {
            target_ids.push(
                net.var_id(name)
                    .ok_or_else(|| PyValueError::new_err(format!("unknown variable {name:?}")))?,
            );
        }
        let pairs: Vec<(&str, &str)> = evidence
            .iter()
            .flatten()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        let ev = net.evidence_from_labels(&pairs).map_err(err)?;
        let dist = net.query_joint(&target_ids, &ev).map_err(err)?;

        let cards: Vec<usize> = target_ids.iter().map(|&t| net.var(t).card()).collect();
        let out = PyDict::new(py);
        for (row, p) in dist.iter().enumerate() {
            let mut rest = row;
            let mut states = vec![0usize; cards.len()];
            for k in (0..cards.len()).rev() {
                states[k] = rest % cards[k];
                rest /= cards[k];
            }
            let labels: Vec<&str> = target_ids
                .iter()
                .zip(&states)
                .map(|(&t, &s)| net.var(t).states[s].as_str())
                .collect();
            if labels.len() == 1 {
                out.set_item(labels[0], *p)?;
            } else {
                out.set_item(pyo3::types::PyTuple::new(py, &labels)?, *p)?;
            }
        }
        Ok(out)
    }

    /// Flatten a web document into a single game document. Generated node
    /// names are recorded in the result's metadata under "map." keys.
    fn compile(&self) -> PyResult<Document> {
        let ModelBody::Nid(web) = &self.doc.body else {
            return Err(PyValueError::new_err(format!(
                "compile expects a nid document, got {}",
                self.doc.kind()
            )));
        };
        let compiled = web.compile().map_err(err)?;
        let mut flat = ModelDocument::new(ModelBody::Maid(compiled.maid));
        flat.metadata = self.doc.metadata.clone();
        for rec in &compiled.names {
            flat.metadata
                .insert(format!("map.{}", rec.generated), format!("{} :: {}", rec.block, rec.source));
        }
        Ok(Document { doc: flat })
    }

    /// Rewrite an incomplete-information game as a web, one block per type.
    fn to_web(&self) -> PyResult<Document> {
        let ModelBody::BayesianGame(g) = &self.doc.body else {
            return Err(PyValueError::new_err(format!(
                "to_web expects a bayesian_game document, got {}",
                self.doc.kind()
            )));
        };
        let (web, mapping) = bgame::to_nid(g).map_err(err)?;
        let mut converted = ModelDocument::new(ModelBody::Nid(web));
        converted.metadata = self.doc.metadata.clone();
        for ((agent, ty), (block, decider)) in &mapping.entries {
            converted
                .metadata
                .insert(format!("map.{agent}.{ty}"), format!("{block} :: D[{decider}]"));
        }
        Ok(Document { doc: converted })
    }
}

/// Parse a model document from text.
#[pyfunction]
fn parse(text: &str) -> PyResult<Document> {
    Ok(Document { doc: parse_document(text).map_err(err)? })
}

/// Parse a model document from a file.
#[pyfunction]
fn parse_file(path: &str) -> PyResult<Document> {
    let text =
        std::fs::read_to_string(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
    parse(&text)
}

/// Play repeated rock-paper-scissors against a named opponent. Returns a
/// dict with the score, post-match mixture weights, and the per-round log
/// in CSV form.
#[pyfunction]
#[pyo3(signature = (opponent, rounds=100, seed=0))]
fn roshambo<'py>(
    py: Python<'py>,
    opponent: &str,
    rounds: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut rival = arena::make_bot(opponent, seed.wrapping_add(1)).ok_or_else(|| {
        PyValueError::new_err(format!(
            "unknown opponent {opponent:?} (expected one of {})",
            arena::BOT_NAMES.join(", ")
        ))
    })?;
    let mut agent = arena::NidAgent::new(seed);
    let result = arena::run_match(&mut agent, rival.as_mut(), rounds);
    let out = PyDict::new(py);
    out.set_item("rounds", result.rounds)?;
    out.set_item("total", result.total_score)?;
    out.set_item("mean", result.mean_after(0))?;
    out.set_item("weights", agent.state.weights.to_vec())?;
    out.set_item("csv", arena::render_csv(&result))?;
    Ok(out)
}

/// The reference-versus-computed reproduction report as markdown.
#[pyfunction]
fn reproduce_markdown() -> PyResult<String> {
    nids::reproduce::markdown().map_err(err)
}

#[pymodule]
fn nids_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Document>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(parse_file, m)?)?;
    m.add_function(wrap_pyfunction!(roshambo, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_markdown, m)?)?;
    m.add("BOT_NAMES", arena::BOT_NAMES.to_vec())?;
    Ok(())
}
