//! Model documents: reading and writing networks, game graphs, webs, and
//! incomplete-information games as text files. One file holds one document:
//! an envelope with `format_version`, `kind`, optional `metadata`, and a
//! `body` laid out by kind.
//!
//! Every table row is keyed by an explicit assignment (`"when": {parent:
//! label}`), never by position, so a document survives reordering of its
//! rows and stays readable next to the model it describes. The writer emits
//! one canonical form; reading it back reproduces the model exactly.

use std::collections::{BTreeMap, BTreeSet};

use crate::bayes::BayesNet;
use crate::bgame::BayesianGame;
use crate::doc::{emit, parse_text, Out, Pos, Val, ValKind};
use crate::maid::{Maid, MaidBuilder, NodeKind};
use crate::nid::{Block, ModCpd, NidModel};
use crate::{Error, Result, ValidationReport};

/// Version this build reads and writes. Anything else is rejected.
pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone)]
pub enum ModelBody {
    Network(BayesNet),
    Maid(Maid),
    Nid(NidModel),
    BayesianGame(BayesianGame),
}

impl ModelBody {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelBody::Network(_) => "network",
            ModelBody::Maid(_) => "maid",
            ModelBody::Nid(_) => "nid",
            ModelBody::BayesianGame(_) => "bayesian_game",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelDocument {
    pub format_version: u64,
    pub metadata: BTreeMap<String, String>,
    pub body: ModelBody,
}

impl ModelDocument {
    pub fn new(body: ModelBody) -> Self {
        ModelDocument {
            format_version: FORMAT_VERSION,
            metadata: BTreeMap::new(),
            body,
        }
    }

    pub fn kind(&self) -> &'static str {
        self.body.kind()
    }

    pub fn validate(&self) -> ValidationReport {
        match &self.body {
            ModelBody::Network(net) => net.validate(),
            ModelBody::Maid(m) => m.validate(),
            ModelBody::Nid(web) => web.validate(),
            ModelBody::BayesianGame(g) => g.validate(),
        }
    }
}

// ==== schema helpers ====

fn schema(path: &str, pos: Pos, msg: String) -> Error {
    Error::Schema {
        path: path.to_string(),
        line: pos.line,
        col: pos.col,
        msg,
    }
}

/// Rewrap a model-construction failure as a schema error at `pos`.
fn lift(e: Error, path: &str, pos: Pos) -> Error {
    match e {
        Error::Syntax { .. } | Error::Schema { .. } => e,
        other => schema(path, pos, other.to_string()),
    }
}

type ObjEntries = [(String, Pos, Val)];

fn as_obj<'a>(v: &'a Val, path: &str) -> Result<&'a ObjEntries> {
    match &v.kind {
        ValKind::Obj(entries) => Ok(entries),
        _ => Err(schema(
            path,
            v.pos,
            format!("expected an object, found {}", v.type_name()),
        )),
    }
}

fn as_arr<'a>(v: &'a Val, path: &str) -> Result<&'a [Val]> {
    match &v.kind {
        ValKind::Arr(items) => Ok(items),
        _ => Err(schema(
            path,
            v.pos,
            format!("expected an array, found {}", v.type_name()),
        )),
    }
}

fn as_str<'a>(v: &'a Val, path: &str) -> Result<&'a str> {
    match &v.kind {
        ValKind::Str(s) => Ok(s),
        _ => Err(schema(
            path,
            v.pos,
            format!("expected a string, found {}", v.type_name()),
        )),
    }
}

fn as_num(v: &Val, path: &str) -> Result<f64> {
    match &v.kind {
        ValKind::Num(n) => Ok(*n),
        _ => Err(schema(
            path,
            v.pos,
            format!("expected a number, found {}", v.type_name()),
        )),
    }
}

fn get<'a>(entries: &'a ObjEntries, at: Pos, key: &str, path: &str) -> Result<&'a Val> {
    entries
        .iter()
        .find(|(k, _, _)| k == key)
        .map(|(_, _, v)| v)
        .ok_or_else(|| schema(path, at, format!("missing required key {key:?}")))
}

fn get_opt<'a>(entries: &'a ObjEntries, key: &str) -> Option<&'a Val> {
    entries.iter().find(|(k, _, _)| k == key).map(|(_, _, v)| v)
}

fn no_extras(entries: &ObjEntries, allowed: &[&str], path: &str) -> Result<()> {
    for (k, pos, _) in entries {
        if !allowed.contains(&k.as_str()) {
            return Err(schema(
                path,
                *pos,
                format!("unknown key {:?} (expected one of {})", k, allowed.join(", ")),
            ));
        }
    }
    Ok(())
}

fn str_list(v: &Val, path: &str) -> Result<Vec<String>> {
    let items = as_arr(v, path)?;
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        out.push(as_str(item, &format!("{path}[{i}]"))?.to_string());
    }
    Ok(out)
}

// ==== keyed tables ====

/// One axis of a table: the name rows key on and the labels it can take.
struct Dim {
    name: String,
    labels: Vec<String>,
}

/// How a table row carries its numbers.
enum Payload {
    /// `"p": [...]` with this many entries.
    Dist(usize),
    /// A single number under this key.
    Scalar(&'static str),
}

impl Payload {
    fn width(&self) -> usize {
        match self {
            Payload::Dist(w) => *w,
            Payload::Scalar(_) => 1,
        }
    }

    fn key(&self) -> &'static str {
        match self {
            Payload::Dist(_) => "p",
            Payload::Scalar(k) => k,
        }
    }
}

/// Rows keyed by explicit assignments. Each element of the array assigns
/// every dim of every group exactly once; together the elements must cover
/// the full space exactly once. Groups are indexed first-group slowest,
/// first dim slowest within a group. Returns the dense row-major table.
fn read_cells(v: &Val, path: &str, groups: &[(&str, Vec<Dim>)], payload: Payload) -> Result<Vec<f64>> {
    let items = as_arr(v, path)?;
    let dims_total: usize = groups.iter().map(|(_, d)| d.len()).sum();
    let rows: usize = groups
        .iter()
        .flat_map(|(_, dims)| dims.iter())
        .map(|d| d.labels.len())
        .product();
    let width = payload.width();
    let mut table = vec![0.0; rows * width];
    let mut seen = vec![false; rows];
    for (i, item) in items.iter().enumerate() {
        let row_path = format!("{path}[{i}]");
        let entries = as_obj(item, &row_path)?;
        let mut allowed: Vec<&str> = groups.iter().map(|(g, _)| *g).collect();
        allowed.push(payload.key());
        no_extras(entries, &allowed, &row_path)?;
        let mut idx = 0usize;
        let mut assigned = 0usize;
        for (gname, dims) in groups {
            let gpath = format!("{row_path}.{gname}");
            let gval = get(entries, item.pos, gname, &row_path)?;
            let gentries = as_obj(gval, &gpath)?;
            for (k, kpos, _) in gentries {
                if !dims.iter().any(|d| &d.name == k) {
                    return Err(schema(&gpath, *kpos, format!("{k:?} is not assignable here")));
                }
            }
            for dim in dims {
                let dval = get(gentries, gval.pos, &dim.name, &gpath)?;
                let dpath = format!("{gpath}.{}", dim.name);
                let label = as_str(dval, &dpath)?;
                let j = dim
                    .labels
                    .iter()
                    .position(|l| l == label)
                    .ok_or_else(|| {
                        schema(
                            &dpath,
                            dval.pos,
                            format!("{:?} has no value {label:?}", dim.name),
                        )
                    })?;
                idx = idx * dim.labels.len() + j;
                assigned += 1;
            }
        }
        debug_assert_eq!(assigned, dims_total);
        if seen[idx] {
            return Err(schema(
                &row_path,
                item.pos,
                format!("duplicate entry for {}", tuple_text(groups, idx)),
            ));
        }
        seen[idx] = true;
        let pval = get(entries, item.pos, payload.key(), &row_path)?;
        let ppath = format!("{row_path}.{}", payload.key());
        match payload {
            Payload::Dist(w) => {
                let nums = as_arr(pval, &ppath)?;
                if nums.len() != w {
                    return Err(schema(
                        &ppath,
                        pval.pos,
                        format!("expected {w} entries, found {}", nums.len()),
                    ));
                }
                for (k, n) in nums.iter().enumerate() {
                    table[idx * w + k] = as_num(n, &format!("{ppath}[{k}]"))?;
                }
            }
            Payload::Scalar(_) => {
                table[idx] = as_num(pval, &ppath)?;
            }
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(schema(
            path,
            v.pos,
            format!("missing entry for {}", tuple_text(groups, missing)),
        ));
    }
    Ok(table)
}

/// Human form of the row index `idx`, e.g. `Leader=alice, Steal=true`.
fn tuple_text(groups: &[(&str, Vec<Dim>)], idx: usize) -> String {
    let dims: Vec<&Dim> = groups.iter().flat_map(|(_, d)| d.iter()).collect();
    if dims.is_empty() {
        return "the empty assignment".to_string();
    }
    let mut rests: Vec<usize> = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        rests[k] = rests[k + 1] * dims[k + 1].labels.len();
    }
    let mut parts = Vec::with_capacity(dims.len());
    for (k, dim) in dims.iter().enumerate() {
        let j = idx / rests[k] % dim.labels.len();
        parts.push(format!("{}={}", dim.name, dim.labels[j]));
    }
    parts.join(", ")
}

/// Emit rows in row-major order with explicit assignments.
fn cells_out(groups: &[(&str, Vec<Dim>)], payload: Payload, table: &[f64]) -> Out {
    let dims: Vec<&Dim> = groups.iter().flat_map(|(_, d)| d.iter()).collect();
    let rows: usize = dims.iter().map(|d| d.labels.len()).product();
    let width = payload.width();
    debug_assert_eq!(table.len(), rows * width);
    let mut out_rows = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut entry: Vec<(String, Out)> = Vec::with_capacity(groups.len() + 1);
        let mut rest = r;
        let mut digits = vec![0usize; dims.len()];
        for k in (0..dims.len()).rev() {
            digits[k] = rest % dims[k].labels.len();
            rest /= dims[k].labels.len();
        }
        let mut at = 0usize;
        for (gname, gdims) in groups {
            let mut fields = Vec::with_capacity(gdims.len());
            for dim in gdims {
                fields.push((dim.name.clone(), Out::str(&dim.labels[digits[at]])));
                at += 1;
            }
            entry.push((gname.to_string(), Out::Obj(fields)));
        }
        match payload {
            Payload::Dist(w) => entry.push((
                "p".to_string(),
                Out::Arr(table[r * w..(r + 1) * w].iter().map(|&x| Out::Num(x)).collect()),
            )),
            Payload::Scalar(key) => entry.push((key.to_string(), Out::Num(table[r]))),
        }
        out_rows.push(Out::Obj(entry));
    }
    Out::Arr(out_rows)
}

// ==== network bodies ====

fn network_from(v: &Val, path: &str) -> Result<BayesNet> {
    let entries = as_obj(v, path)?;
    no_extras(entries, &["variables"], path)?;
    let vars_path = format!("{path}.variables");
    let items = as_arr(get(entries, v.pos, "variables", path)?, &vars_path)?;
    let mut net = BayesNet::new();
    for (i, item) in items.iter().enumerate() {
        let vp = format!("{vars_path}[{i}]");
        let fields = as_obj(item, &vp)?;
        no_extras(fields, &["given", "name", "states", "table"], &vp)?;
        let name = as_str(get(fields, item.pos, "name", &vp)?, &format!("{vp}.name"))?;
        let states = str_list(get(fields, item.pos, "states", &vp)?, &format!("{vp}.states"))?;
        net.add_var_owned(name.to_string(), states)
            .map_err(|e| lift(e, &vp, item.pos))?;
    }
    for (i, item) in items.iter().enumerate() {
        let vp = format!("{vars_path}[{i}]");
        let fields = as_obj(item, &vp)?;
        let name = as_str(get(fields, item.pos, "name", &vp)?, &format!("{vp}.name"))?;
        let var = net.var_id(name).expect("registered above");
        let table_v = match get_opt(fields, "table") {
            Some(t) => t,
            None => {
                if let Some(g) = get_opt(fields, "given") {
                    return Err(schema(
                        &format!("{vp}.given"),
                        g.pos,
                        "\"given\" requires a \"table\"".to_string(),
                    ));
                }
                continue;
            }
        };
        let mut parents = Vec::new();
        let mut dims = Vec::new();
        if let Some(gv) = get_opt(fields, "given") {
            let gpath = format!("{vp}.given");
            for (j, gitem) in as_arr(gv, &gpath)?.iter().enumerate() {
                let gp = format!("{gpath}[{j}]");
                let pname = as_str(gitem, &gp)?;
                let pid = net
                    .var_id(pname)
                    .ok_or_else(|| schema(&gp, gitem.pos, format!("unknown variable {pname:?}")))?;
                parents.push(pid);
                dims.push(Dim {
                    name: pname.to_string(),
                    labels: net.var(pid).states.clone(),
                });
            }
        }
        let card = net.var(var).card();
        let table = read_cells(
            table_v,
            &format!("{vp}.table"),
            &[("when", dims)],
            Payload::Dist(card),
        )?;
        net.set_cpd(var, parents, table)
            .map_err(|e| lift(e, &vp, item.pos))?;
    }
    Ok(net)
}

fn network_out(net: &BayesNet) -> Out {
    let mut vars = Vec::with_capacity(net.n_vars());
    for id in 0..net.n_vars() {
        let var = net.var(id);
        let mut fields = vec![
            ("name".to_string(), Out::str(&var.name)),
            ("states".to_string(), Out::strings(&var.states)),
        ];
        if let Some(cpd) = net.cpd(id) {
            let dims: Vec<Dim> = cpd
                .parents
                .iter()
                .map(|&p| Dim {
                    name: net.var(p).name.clone(),
                    labels: net.var(p).states.clone(),
                })
                .collect();
            if !dims.is_empty() {
                fields.push((
                    "given".to_string(),
                    Out::strings(&cpd.parents.iter().map(|&p| net.var(p).name.clone()).collect::<Vec<_>>()),
                ));
            }
            fields.push((
                "table".to_string(),
                cells_out(&[("when", dims)], Payload::Dist(var.card()), &cpd.table),
            ));
        }
        vars.push(Out::Obj(fields));
    }
    Out::Obj(vec![("variables".to_string(), Out::Arr(vars))])
}

// ==== game graph bodies ====

fn maid_from(v: &Val, path: &str) -> Result<Maid> {
    let entries = as_obj(v, path)?;
    no_extras(entries, &["agents", "nodes"], path)?;
    let agents = str_list(get(entries, v.pos, "agents", path)?, &format!("{path}.agents"))?;
    let nodes_path = format!("{path}.nodes");
    let items = as_arr(get(entries, v.pos, "nodes", path)?, &nodes_path)?;

    // First pass: names and value domains, for keying rows.
    let mut domains: BTreeMap<String, Option<Vec<String>>> = BTreeMap::new();
    let mut shapes = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let np = format!("{nodes_path}[{i}]");
        let fields = as_obj(item, &np)?;
        let kind = as_str(get(fields, item.pos, "kind", &np)?, &format!("{np}.kind"))?;
        let allowed: &[&str] = match kind {
            "chance" => &["given", "kind", "name", "states", "table"],
            "decision" => &["actions", "kind", "name", "observes", "owner"],
            "utility" => &["given", "kind", "name", "owner", "table"],
            other => {
                return Err(schema(
                    &format!("{np}.kind"),
                    item.pos,
                    format!("unknown node kind {other:?} (expected chance, decision, or utility)"),
                ))
            }
        };
        no_extras(fields, allowed, &np)?;
        let name = as_str(get(fields, item.pos, "name", &np)?, &format!("{np}.name"))?.to_string();
        let domain = match kind {
            "chance" => Some(str_list(
                get(fields, item.pos, "states", &np)?,
                &format!("{np}.states"),
            )?),
            "decision" => Some(str_list(
                get(fields, item.pos, "actions", &np)?,
                &format!("{np}.actions"),
            )?),
            _ => None,
        };
        if domains.insert(name.clone(), domain.clone()).is_some() {
            return Err(schema(&np, item.pos, format!("duplicate node {name:?}")));
        }
        shapes.push((name, kind.to_string(), domain));
    }

    let parent_dims = |fields: &ObjEntries, key: &str, np: &str| -> Result<(Vec<String>, Vec<Dim>)> {
        let mut names = Vec::new();
        let mut dims = Vec::new();
        if let Some(gv) = get_opt(fields, key) {
            let gpath = format!("{np}.{key}");
            for (j, gitem) in as_arr(gv, &gpath)?.iter().enumerate() {
                let gp = format!("{gpath}[{j}]");
                let pname = as_str(gitem, &gp)?;
                match domains.get(pname) {
                    Some(Some(labels)) => {
                        names.push(pname.to_string());
                        dims.push(Dim {
                            name: pname.to_string(),
                            labels: labels.clone(),
                        });
                    }
                    Some(None) => {
                        return Err(schema(
                            &gp,
                            gitem.pos,
                            format!("{pname:?} is a utility node and carries no value"),
                        ))
                    }
                    None => return Err(schema(&gp, gitem.pos, format!("unknown node {pname:?}"))),
                }
            }
        }
        Ok((names, dims))
    };

    // Second pass: build.
    let mut b = MaidBuilder::new();
    for a in &agents {
        b = b.agent_owned(a.clone());
    }
    for (i, item) in items.iter().enumerate() {
        let np = format!("{nodes_path}[{i}]");
        let fields = as_obj(item, &np)?;
        let (name, kind, domain) = &shapes[i];
        match kind.as_str() {
            "chance" => {
                let (parents, dims) = parent_dims(fields, "given", &np)?;
                let states = domain.clone().expect("chance domain");
                let table = read_cells(
                    get(fields, item.pos, "table", &np)?,
                    &format!("{np}.table"),
                    &[("when", dims)],
                    Payload::Dist(states.len()),
                )?;
                b = b.chance_owned(name.clone(), states, parents, table);
            }
            "decision" => {
                let owner =
                    as_str(get(fields, item.pos, "owner", &np)?, &format!("{np}.owner"))?;
                let (observes, _) = parent_dims(fields, "observes", &np)?;
                b = b.decision_owned(
                    name.clone(),
                    owner.to_string(),
                    domain.clone().expect("decision domain"),
                    observes,
                );
            }
            "utility" => {
                let owner =
                    as_str(get(fields, item.pos, "owner", &np)?, &format!("{np}.owner"))?;
                let (parents, dims) = parent_dims(fields, "given", &np)?;
                let table = read_cells(
                    get(fields, item.pos, "table", &np)?,
                    &format!("{np}.table"),
                    &[("when", dims)],
                    Payload::Scalar("value"),
                )?;
                b = b.utility_owned(name.clone(), owner.to_string(), parents, table);
            }
            _ => unreachable!("kinds checked in the first pass"),
        }
    }
    b.finish().map_err(|e| lift(e, path, v.pos))
}

fn maid_out(m: &Maid) -> Out {
    let dims_of = |parents: &[usize]| -> Vec<Dim> {
        parents
            .iter()
            .map(|&p| {
                let node = m.node(p);
                Dim {
                    name: node.name.clone(),
                    labels: node.domain().expect("value-bearing parent").to_vec(),
                }
            })
            .collect()
    };
    let names_of = |parents: &[usize]| -> Vec<String> {
        parents.iter().map(|&p| m.node(p).name.clone()).collect()
    };
    let mut nodes = Vec::with_capacity(m.nodes().len());
    for node in m.nodes() {
        let mut fields = vec![("name".to_string(), Out::str(&node.name))];
        match &node.kind {
            NodeKind::Chance { states, parents, table } => {
                fields.push(("kind".to_string(), Out::str("chance")));
                fields.push(("states".to_string(), Out::strings(states)));
                if !parents.is_empty() {
                    fields.push(("given".to_string(), Out::strings(&names_of(parents))));
                }
                fields.push((
                    "table".to_string(),
                    cells_out(&[("when", dims_of(parents))], Payload::Dist(states.len()), table),
                ));
            }
            NodeKind::Decision {
                owner,
                actions,
                info_parents,
            } => {
                fields.push(("kind".to_string(), Out::str("decision")));
                fields.push(("owner".to_string(), Out::str(&m.agents()[*owner])));
                fields.push(("actions".to_string(), Out::strings(actions)));
                if !info_parents.is_empty() {
                    fields.push(("observes".to_string(), Out::strings(&names_of(info_parents))));
                }
            }
            NodeKind::Utility { owner, parents, table } => {
                fields.push(("kind".to_string(), Out::str("utility")));
                fields.push(("owner".to_string(), Out::str(&m.agents()[*owner])));
                if !parents.is_empty() {
                    fields.push(("given".to_string(), Out::strings(&names_of(parents))));
                }
                fields.push((
                    "table".to_string(),
                    cells_out(&[("when", dims_of(parents))], Payload::Scalar("value"), table),
                ));
            }
        }
        nodes.push(Out::Obj(fields));
    }
    Out::Obj(vec![
        ("agents".to_string(), Out::strings(m.agents())),
        ("nodes".to_string(), Out::Arr(nodes)),
    ])
}

// ==== web bodies ====

fn nid_from(v: &Val, path: &str) -> Result<NidModel> {
    let entries = as_obj(v, path)?;
    no_extras(entries, &["blocks", "root"], path)?;
    let root_v = get(entries, v.pos, "root", path)?;
    let root = as_str(root_v, &format!("{path}.root"))?;
    let blocks_path = format!("{path}.blocks");
    let items = as_arr(get(entries, v.pos, "blocks", path)?, &blocks_path)?;
    let mut blocks = Vec::with_capacity(items.len());
    let mut labels = BTreeSet::new();
    for (i, item) in items.iter().enumerate() {
        let bp = format!("{blocks_path}[{i}]");
        let fields = as_obj(item, &bp)?;
        no_extras(fields, &["label", "maid", "mods"], &bp)?;
        let label = as_str(get(fields, item.pos, "label", &bp)?, &format!("{bp}.label"))?;
        if !labels.insert(label.to_string()) {
            return Err(schema(&bp, item.pos, format!("duplicate block {label:?}")));
        }
        let maid = maid_from(get(fields, item.pos, "maid", &bp)?, &format!("{bp}.maid"))?;
        let mut block = Block::new(label, maid);
        if let Some(mods_v) = get_opt(fields, "mods") {
            let mods_path = format!("{bp}.mods");
            for (j, mitem) in as_arr(mods_v, &mods_path)?.iter().enumerate() {
                let mp = format!("{mods_path}[{j}]");
                let mfields = as_obj(mitem, &mp)?;
                no_extras(
                    mfields,
                    &["blocks", "decision", "given", "observer", "table"],
                    &mp,
                )?;
                let observer = as_str(
                    get(mfields, mitem.pos, "observer", &mp)?,
                    &format!("{mp}.observer"),
                )?;
                let decision = as_str(
                    get(mfields, mitem.pos, "decision", &mp)?,
                    &format!("{mp}.decision"),
                )?;
                let key = (observer.to_string(), decision.to_string());
                if block.mods.contains_key(&key) {
                    return Err(schema(
                        &mp,
                        mitem.pos,
                        format!("duplicate entry for observer {observer:?} and decision {decision:?}"),
                    ));
                }
                let mod_labels = str_list(
                    get(mfields, mitem.pos, "blocks", &mp)?,
                    &format!("{mp}.blocks"),
                )?;
                if mod_labels.is_empty() {
                    return Err(schema(&mp, mitem.pos, "\"blocks\" must not be empty".into()));
                }
                let mut seen_labels = BTreeSet::new();
                for l in &mod_labels {
                    if !seen_labels.insert(l.clone()) {
                        return Err(schema(
                            &format!("{mp}.blocks"),
                            mitem.pos,
                            format!("duplicate label {l:?}"),
                        ));
                    }
                }
                let mut parents = Vec::new();
                let mut dims = Vec::new();
                if let Some(gv) = get_opt(mfields, "given") {
                    let gpath = format!("{mp}.given");
                    for (k, gitem) in as_arr(gv, &gpath)?.iter().enumerate() {
                        let gp = format!("{gpath}[{k}]");
                        let pname = as_str(gitem, &gp)?;
                        let labels = block
                            .maid
                            .node_id(pname)
                            .and_then(|id| block.maid.node(id).domain())
                            .ok_or_else(|| {
                                schema(
                                    &gp,
                                    gitem.pos,
                                    format!("{pname:?} does not name a value-bearing node of this block"),
                                )
                            })?;
                        parents.push(pname.to_string());
                        dims.push(Dim {
                            name: pname.to_string(),
                            labels: labels.to_vec(),
                        });
                    }
                }
                let table = read_cells(
                    get(mfields, mitem.pos, "table", &mp)?,
                    &format!("{mp}.table"),
                    &[("when", dims)],
                    Payload::Dist(mod_labels.len()),
                )?;
                block.mods.insert(
                    key,
                    ModCpd {
                        parents,
                        labels: mod_labels,
                        table,
                    },
                );
            }
        }
        blocks.push(block);
    }
    if !labels.contains(root) {
        return Err(schema(
            &format!("{path}.root"),
            root_v.pos,
            format!("unknown block {root:?}"),
        ));
    }
    NidModel::new(blocks, root).map_err(|e| lift(e, path, v.pos))
}

fn nid_out(web: &NidModel) -> Out {
    let mut blocks = Vec::with_capacity(web.blocks().len());
    for block in web.blocks() {
        let mut fields = vec![
            ("label".to_string(), Out::str(&block.label)),
            ("maid".to_string(), maid_out(&block.maid)),
        ];
        let mut mods = Vec::new();
        for ((observer, decision), cpd) in &block.mods {
            if cpd.is_default_for(&block.label) {
                continue;
            }
            let dims: Vec<Dim> = cpd
                .parents
                .iter()
                .map(|p| {
                    let id = block.maid.node_id(p).expect("mod parent resolves");
                    Dim {
                        name: p.clone(),
                        labels: block.maid.node(id).domain().expect("value-bearing").to_vec(),
                    }
                })
                .collect();
            let mut mfields = vec![
                ("observer".to_string(), Out::str(observer)),
                ("decision".to_string(), Out::str(decision)),
                ("blocks".to_string(), Out::strings(&cpd.labels)),
            ];
            if !cpd.parents.is_empty() {
                mfields.push(("given".to_string(), Out::strings(&cpd.parents)));
            }
            mfields.push((
                "table".to_string(),
                cells_out(&[("when", dims)], Payload::Dist(cpd.labels.len()), &cpd.table),
            ));
            mods.push(Out::Obj(mfields));
        }
        if !mods.is_empty() {
            fields.push(("mods".to_string(), Out::Arr(mods)));
        }
        blocks.push(Out::Obj(fields));
    }
    Out::Obj(vec![
        ("blocks".to_string(), Out::Arr(blocks)),
        ("root".to_string(), Out::str(web.root())),
    ])
}

// ==== incomplete-information game bodies ====

fn bgame_from(v: &Val, path: &str) -> Result<BayesianGame> {
    let entries = as_obj(v, path)?;
    no_extras(entries, &["actions", "agents", "beliefs", "payoffs", "types"], path)?;
    let agents = str_list(get(entries, v.pos, "agents", path)?, &format!("{path}.agents"))?;
    let n = agents.len();
    let lists = |key: &str| -> Result<Vec<Vec<String>>> {
        let lpath = format!("{path}.{key}");
        let lv = get(entries, v.pos, key, path)?;
        let items = as_arr(lv, &lpath)?;
        if items.len() != n {
            return Err(schema(
                &lpath,
                lv.pos,
                format!("expected one list per agent ({n}), found {}", items.len()),
            ));
        }
        items
            .iter()
            .enumerate()
            .map(|(i, item)| str_list(item, &format!("{lpath}[{i}]")))
            .collect()
    };
    let types = lists("types")?;
    let actions = lists("actions")?;

    let agent_index = |val: &Val, p: &str| -> Result<usize> {
        let name = as_str(val, p)?;
        agents
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| schema(p, val.pos, format!("unknown agent {name:?}")))
    };

    // Beliefs: one entry per (agent, type), each a distribution over the
    // other agents' joint types.
    let beliefs_path = format!("{path}.beliefs");
    let bv = get(entries, v.pos, "beliefs", path)?;
    let bitems = as_arr(bv, &beliefs_path)?;
    let mut beliefs: Vec<Vec<Option<Vec<f64>>>> =
        types.iter().map(|t| vec![None; t.len()]).collect();
    for (i, item) in bitems.iter().enumerate() {
        let ep = format!("{beliefs_path}[{i}]");
        let fields = as_obj(item, &ep)?;
        no_extras(fields, &["agent", "over", "type"], &ep)?;
        let a = agent_index(get(fields, item.pos, "agent", &ep)?, &format!("{ep}.agent"))?;
        let tv = get(fields, item.pos, "type", &ep)?;
        let tname = as_str(tv, &format!("{ep}.type"))?;
        let t = types[a]
            .iter()
            .position(|x| x == tname)
            .ok_or_else(|| {
                schema(
                    &format!("{ep}.type"),
                    tv.pos,
                    format!("agent {:?} has no type {tname:?}", agents[a]),
                )
            })?;
        if beliefs[a][t].is_some() {
            return Err(schema(
                &ep,
                item.pos,
                format!("duplicate beliefs for agent {:?}, type {tname:?}", agents[a]),
            ));
        }
        let dims: Vec<Dim> = (0..n)
            .filter(|&j| j != a)
            .map(|j| Dim {
                name: agents[j].clone(),
                labels: types[j].clone(),
            })
            .collect();
        let row = read_cells(
            get(fields, item.pos, "over", &ep)?,
            &format!("{ep}.over"),
            &[("when", dims)],
            Payload::Scalar("p"),
        )?;
        beliefs[a][t] = Some(row);
    }
    for (a, rows) in beliefs.iter().enumerate() {
        if let Some(t) = rows.iter().position(|r| r.is_none()) {
            return Err(schema(
                &beliefs_path,
                bv.pos,
                format!("missing beliefs for agent {:?}, type {:?}", agents[a], types[a][t]),
            ));
        }
    }

    // Payoffs: one total tensor per agent, cells keyed by the full type and
    // action profiles.
    let payoffs_path = format!("{path}.payoffs");
    let pv = get(entries, v.pos, "payoffs", path)?;
    let pitems = as_arr(pv, &payoffs_path)?;
    let mut utilities: Vec<Option<Vec<f64>>> = vec![None; n];
    for (i, item) in pitems.iter().enumerate() {
        let ep = format!("{payoffs_path}[{i}]");
        let fields = as_obj(item, &ep)?;
        no_extras(fields, &["agent", "cells"], &ep)?;
        let a = agent_index(get(fields, item.pos, "agent", &ep)?, &format!("{ep}.agent"))?;
        if utilities[a].is_some() {
            return Err(schema(
                &ep,
                item.pos,
                format!("duplicate payoffs for agent {:?}", agents[a]),
            ));
        }
        let tdims: Vec<Dim> = (0..n)
            .map(|j| Dim {
                name: agents[j].clone(),
                labels: types[j].clone(),
            })
            .collect();
        let adims: Vec<Dim> = (0..n)
            .map(|j| Dim {
                name: agents[j].clone(),
                labels: actions[j].clone(),
            })
            .collect();
        let cells = read_cells(
            get(fields, item.pos, "cells", &ep)?,
            &format!("{ep}.cells"),
            &[("types", tdims), ("actions", adims)],
            Payload::Scalar("value"),
        )?;
        utilities[a] = Some(cells);
    }
    if let Some(a) = utilities.iter().position(|u| u.is_none()) {
        return Err(schema(
            &payoffs_path,
            pv.pos,
            format!("missing payoffs for agent {:?}", agents[a]),
        ));
    }

    Ok(BayesianGame {
        agents,
        types,
        actions,
        beliefs: beliefs
            .into_iter()
            .map(|rows| rows.into_iter().map(|r| r.expect("checked")).collect())
            .collect(),
        utilities: utilities.into_iter().map(|u| u.expect("checked")).collect(),
    })
}

fn bgame_out(g: &BayesianGame) -> Out {
    let n = g.agents.len();
    let mut beliefs = Vec::new();
    for (a, rows) in g.beliefs.iter().enumerate() {
        for (t, row) in rows.iter().enumerate() {
            let dims: Vec<Dim> = (0..n)
                .filter(|&j| j != a)
                .map(|j| Dim {
                    name: g.agents[j].clone(),
                    labels: g.types[j].clone(),
                })
                .collect();
            beliefs.push(Out::Obj(vec![
                ("agent".to_string(), Out::str(&g.agents[a])),
                ("type".to_string(), Out::str(&g.types[a][t])),
                (
                    "over".to_string(),
                    cells_out(&[("when", dims)], Payload::Scalar("p"), row),
                ),
            ]));
        }
    }
    let mut payoffs = Vec::new();
    for (a, cells) in g.utilities.iter().enumerate() {
        let tdims: Vec<Dim> = (0..n)
            .map(|j| Dim {
                name: g.agents[j].clone(),
                labels: g.types[j].clone(),
            })
            .collect();
        let adims: Vec<Dim> = (0..n)
            .map(|j| Dim {
                name: g.agents[j].clone(),
                labels: g.actions[j].clone(),
            })
            .collect();
        payoffs.push(Out::Obj(vec![
            ("agent".to_string(), Out::str(&g.agents[a])),
            (
                "cells".to_string(),
                cells_out(&[("types", tdims), ("actions", adims)], Payload::Scalar("value"), cells),
            ),
        ]));
    }
    Out::Obj(vec![
        ("agents".to_string(), Out::strings(&g.agents)),
        (
            "types".to_string(),
            Out::Arr(g.types.iter().map(|t| Out::strings(t)).collect()),
        ),
        (
            "actions".to_string(),
            Out::Arr(g.actions.iter().map(|a| Out::strings(a)).collect()),
        ),
        ("beliefs".to_string(), Out::Arr(beliefs)),
        ("payoffs".to_string(), Out::Arr(payoffs)),
    ])
}

// ==== envelope ====

pub fn serialize_document(doc: &ModelDocument) -> String {
    let body = match &doc.body {
        ModelBody::Network(net) => network_out(net),
        ModelBody::Maid(m) => maid_out(m),
        ModelBody::Nid(web) => nid_out(web),
        ModelBody::BayesianGame(g) => bgame_out(g),
    };
    let mut fields = vec![
        ("body".to_string(), body),
        ("format_version".to_string(), Out::Num(doc.format_version as f64)),
        ("kind".to_string(), Out::str(doc.kind())),
    ];
    if !doc.metadata.is_empty() {
        fields.push((
            "metadata".to_string(),
            Out::Obj(
                doc.metadata
                    .iter()
                    .map(|(k, v)| (k.clone(), Out::str(v)))
                    .collect(),
            ),
        ));
    }
    emit(&Out::Obj(fields))
}

pub fn parse_document(text: &str) -> Result<ModelDocument> {
    let root = parse_text(text)?;
    let entries = as_obj(&root, "document")?;
    no_extras(entries, &["body", "format_version", "kind", "metadata"], "document")?;

    let fv = get(entries, root.pos, "format_version", "document")?;
    let version = as_num(fv, "format_version")?;
    if version.fract() != 0.0 || version < 0.0 {
        return Err(schema(
            "format_version",
            fv.pos,
            format!("expected a non-negative integer, found {version}"),
        ));
    }
    let version = version as u64;
    if version != FORMAT_VERSION {
        return Err(schema(
            "format_version",
            fv.pos,
            format!("unsupported format version {version} (this build reads version {FORMAT_VERSION})"),
        ));
    }

    let mut metadata = BTreeMap::new();
    if let Some(mv) = get_opt(entries, "metadata") {
        let mentries = as_obj(mv, "metadata")?;
        for (k, _, val) in mentries {
            metadata.insert(
                k.clone(),
                as_str(val, &format!("metadata.{k}"))?.to_string(),
            );
        }
    }

    let kind_v = get(entries, root.pos, "kind", "document")?;
    let kind = as_str(kind_v, "kind")?;
    let body_v = get(entries, root.pos, "body", "document")?;
    let body = match kind {
        "network" => ModelBody::Network(network_from(body_v, "body")?),
        "maid" => ModelBody::Maid(maid_from(body_v, "body")?),
        "nid" => ModelBody::Nid(nid_from(body_v, "body")?),
        "bayesian_game" => ModelBody::BayesianGame(bgame_from(body_v, "body")?),
        other => {
            return Err(schema(
                "kind",
                kind_v.pos,
                format!(
                    "unknown kind {other:?} (expected \"network\", \"maid\", \"nid\", or \"bayesian_game\")"
                ),
            ))
        }
    };

    Ok(ModelDocument {
        format_version: version,
        metadata,
        body,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bgame::{agent_form_maid, to_nid, BayesianGame};
    use crate::doc::{parse_text, ValKind};
    use crate::fixtures::*;
    use crate::maid::{Maid, StrategyProfile};
    use crate::nid::NidModel;
    use crate::solver::SolverConfig;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Serialize, reparse, assert the canonical form is byte-stable, and
    /// hand back the reparsed document for structural checks.
    fn round_trip(doc: &ModelDocument) -> ModelDocument {
        let s1 = serialize_document(doc);
        let d2 = parse_document(&s1).unwrap_or_else(|e| panic!("reparse failed: {e}\n{s1}"));
        let s2 = serialize_document(&d2);
        assert_eq!(s1, s2, "canonical form must be byte-stable");
        assert_eq!(doc.kind(), d2.kind());
        assert_eq!(doc.metadata, d2.metadata);
        d2
    }

    fn assert_close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-9, "{a:?} vs {b:?}");
        }
    }

    fn assert_nets_match(a: &BayesNet, b: &BayesNet) {
        assert_eq!(a.n_vars(), b.n_vars());
        for id in 0..a.n_vars() {
            assert_eq!(a.var(id).name, b.var(id).name);
            assert_eq!(a.var(id).states, b.var(id).states);
            match (a.cpd(id), b.cpd(id)) {
                (Some(x), Some(y)) => {
                    assert_eq!(x.parents, y.parents);
                    assert_close(&x.table, &y.table);
                }
                (None, None) => {}
                _ => panic!("table presence differs for {}", a.var(id).name),
            }
        }
    }

    fn assert_maids_match(a: &Maid, b: &Maid) {
        assert_eq!(a.agents(), b.agents());
        assert_eq!(a.nodes().len(), b.nodes().len());
        for (x, y) in a.nodes().iter().zip(b.nodes()) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.domain(), y.domain());
            let xp: Vec<&str> = x.parents().iter().map(|&p| a.node(p).name.as_str()).collect();
            let yp: Vec<&str> = y.parents().iter().map(|&p| b.node(p).name.as_str()).collect();
            assert_eq!(xp, yp, "parents of {}", x.name);
            match (&x.kind, &y.kind) {
                (
                    crate::maid::NodeKind::Chance { table: tx, .. },
                    crate::maid::NodeKind::Chance { table: ty, .. },
                ) => assert_close(tx, ty),
                (
                    crate::maid::NodeKind::Decision { owner: ox, .. },
                    crate::maid::NodeKind::Decision { owner: oy, .. },
                ) => assert_eq!(a.agents()[*ox], b.agents()[*oy]),
                (
                    crate::maid::NodeKind::Utility {
                        owner: ox,
                        table: tx,
                        ..
                    },
                    crate::maid::NodeKind::Utility {
                        owner: oy,
                        table: ty,
                        ..
                    },
                ) => {
                    assert_eq!(a.agents()[*ox], b.agents()[*oy]);
                    assert_close(tx, ty);
                }
                _ => panic!("node kind differs for {}", x.name),
            }
        }
    }

    fn assert_webs_match(a: &NidModel, b: &NidModel) {
        assert_eq!(a.root(), b.root());
        assert_eq!(a.blocks().len(), b.blocks().len());
        for (x, y) in a.blocks().iter().zip(b.blocks()) {
            assert_eq!(x.label, y.label);
            assert_maids_match(&x.maid, &y.maid);
            let xk: Vec<_> = x.mods.keys().collect();
            let yk: Vec<_> = y.mods.keys().collect();
            assert_eq!(xk, yk, "mod keys of {}", x.label);
            for (k, cx) in &x.mods {
                let cy = &y.mods[k];
                assert_eq!(cx.parents, cy.parents);
                assert_eq!(cx.labels, cy.labels);
                assert_close(&cx.table, &cy.table);
            }
        }
    }

    fn assert_games_match(a: &BayesianGame, b: &BayesianGame) {
        assert_eq!(a.agents, b.agents);
        assert_eq!(a.types, b.types);
        assert_eq!(a.actions, b.actions);
        for (x, y) in a.beliefs.iter().zip(&b.beliefs) {
            assert_eq!(x.len(), y.len());
            for (rx, ry) in x.iter().zip(y) {
                assert_close(rx, ry);
            }
        }
        for (x, y) in a.utilities.iter().zip(&b.utilities) {
            assert_close(x, y);
        }
    }

    fn assert_bodies_match(a: &ModelBody, b: &ModelBody) {
        match (a, b) {
            (ModelBody::Network(x), ModelBody::Network(y)) => assert_nets_match(x, y),
            (ModelBody::Maid(x), ModelBody::Maid(y)) => assert_maids_match(x, y),
            (ModelBody::Nid(x), ModelBody::Nid(y)) => assert_webs_match(x, y),
            (ModelBody::BayesianGame(x), ModelBody::BayesianGame(y)) => assert_games_match(x, y),
            _ => panic!("kind changed across the round trip"),
        }
    }

    fn all_fixture_bodies() -> Vec<ModelBody> {
        let mut bodies = Vec::new();
        for conv in LEADER_CONVENTIONS {
            let m = baseball_maid(conv);
            let net = m
                .implement_profile(&baseball_automaton_profile(&m))
                .unwrap();
            bodies.push(ModelBody::Network(net));
            bodies.push(ModelBody::Maid(m));
            bodies.push(ModelBody::Maid(baseball_maid_with_dead_rows(conv, 0.1)));
            bodies.push(ModelBody::Maid(speed_baseball_maid(conv, true)));
            bodies.push(ModelBody::Nid(reputation_baseball_nid(conv)));
            bodies.push(ModelBody::Nid(two_attempt_baseball_nid(conv)));
            bodies.push(ModelBody::Nid(runner_speed_nid(conv)));
            bodies.push(ModelBody::Nid(circular_speed_nid(conv)));
        }
        let rps = rps_maid();
        bodies.push(ModelBody::Network(
            rps.implement_profile(&StrategyProfile::uniform(&rps)).unwrap(),
        ));
        bodies.push(ModelBody::Maid(rps));
        bodies.push(ModelBody::Maid(agent_form_maid(&dominant_bg()).unwrap()));
        bodies.push(ModelBody::Nid(sales_bias_nid()));
        bodies.push(ModelBody::Nid(committee_nid()));
        bodies.push(ModelBody::Nid(to_nid(&split_beliefs_bg()).unwrap().0));
        bodies.push(ModelBody::BayesianGame(pennies_bg()));
        bodies.push(ModelBody::BayesianGame(dominant_bg()));
        bodies.push(ModelBody::BayesianGame(split_beliefs_bg()));
        bodies.push(ModelBody::BayesianGame(random_bg(7)));
        bodies
    }

    #[test]
    fn fixture_models_round_trip() {
        for body in all_fixture_bodies() {
            let doc = ModelDocument::new(body);
            let back = round_trip(&doc);
            assert_bodies_match(&doc.body, &back.body);
        }
    }

    #[test]
    fn metadata_round_trips() {
        let mut doc = ModelDocument::new(ModelBody::BayesianGame(pennies_bg()));
        doc.metadata.insert("title".into(), "zero-sum guessing".into());
        doc.metadata.insert("note".into(), "line one\nline two".into());
        let back = round_trip(&doc);
        assert_eq!(back.metadata["note"], "line one\nline two");
    }

    #[test]
    fn reparsed_webs_solve_identically() {
        let web = reputation_baseball_nid(LeaderConvention::ThreeValueUniformFill);
        let doc = ModelDocument::new(ModelBody::Nid(web.clone()));
        let back = round_trip(&doc);
        let ModelBody::Nid(web2) = &back.body else { panic!() };
        let cfg = SolverConfig::default();
        let a = web.solve(&cfg).unwrap();
        let b = web2.solve(&cfg).unwrap();
        for (key, strat) in &a.best_response {
            assert_close(&strat.table, &b.best_response[key].table);
        }
    }

    #[test]
    fn default_views_are_omitted_and_refilled() {
        let lone = NidModel::new(vec![crate::nid::Block::new("only", rps_maid())], "only").unwrap();
        let text = serialize_document(&ModelDocument::new(ModelBody::Nid(lone)));
        assert!(!text.contains("\"mods\""), "default entries must not be written:\n{text}");
        let back = parse_document(&text).unwrap();
        let ModelBody::Nid(web) = &back.body else { panic!() };
        let mods = &web.blocks()[0].mods;
        assert_eq!(mods.len(), 4, "every decider gets a view of every decision");
        assert!(mods.values().all(|c| c.is_default_for("only")));

        let web = reputation_baseball_nid(LeaderConvention::ThreeValueUniformFill);
        let nondefault: usize = web
            .blocks()
            .iter()
            .map(|b| b.mods.values().filter(|c| !c.is_default_for(&b.label)).count())
            .sum();
        let text = serialize_document(&ModelDocument::new(ModelBody::Nid(web)));
        assert_eq!(text.matches("\"observer\"").count(), nondefault);
    }

    fn assert_sorted_keys(v: &crate::doc::Val) {
        match &v.kind {
            ValKind::Obj(entries) => {
                for pair in entries.windows(2) {
                    assert!(pair[0].0 < pair[1].0, "{} before {}", pair[0].0, pair[1].0);
                }
                for (_, _, val) in entries {
                    assert_sorted_keys(val);
                }
            }
            ValKind::Arr(items) => items.iter().for_each(assert_sorted_keys),
            _ => {}
        }
    }

    #[test]
    fn written_documents_sort_every_key() {
        for body in all_fixture_bodies() {
            let text = serialize_document(&ModelDocument::new(body));
            assert_sorted_keys(&parse_text(&text).unwrap());
        }
    }

    fn schema_err(text: &str) -> (String, String) {
        match parse_document(text) {
            Err(Error::Schema { path, msg, .. }) => (path, msg),
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    fn net_doc(body: &str) -> String {
        format!("{{\"body\": {body}, \"format_version\": 1, \"kind\": \"network\"}}")
    }

    #[test]
    fn envelope_is_checked_before_the_body() {
        assert!(matches!(
            parse_document(""),
            Err(Error::Syntax { line: 1, col: 1, .. })
        ));
        let (path, msg) = schema_err("[]");
        assert_eq!(path, "document");
        assert!(msg.contains("expected an object"));

        let (path, msg) = schema_err("{\"body\": {\"variables\": []}, \"kind\": \"network\"}");
        assert_eq!(path, "document");
        assert!(msg.contains("format_version"));

        let (path, msg) =
            schema_err("{\"body\": {}, \"format_version\": 2, \"kind\": \"network\"}");
        assert_eq!(path, "format_version");
        assert!(msg.contains("unsupported format version 2"));

        let (path, msg) = schema_err("{\"body\": {}, \"format_version\": 1, \"kind\": \"widget\"}");
        assert_eq!(path, "kind");
        assert!(msg.contains("unknown kind \"widget\""));
        assert!(msg.contains("bayesian_game"));

        let (path, _) = schema_err(
            "{\"body\": {}, \"format_version\": 1, \"kind\": \"network\", \"metadata\": {\"a\": 1}}",
        );
        assert_eq!(path, "metadata.a");
    }

    #[test]
    fn schema_errors_name_the_offending_path() {
        let two = "{\"name\": \"A\", \"states\": [\"x\", \"y\"]";
        let cases: Vec<(String, &str, &str)> = vec![
            (
                net_doc("{\"variables\": [], \"extra\": 1}"),
                "body",
                "unknown key \"extra\"",
            ),
            (
                net_doc("{\"variables\": [{\"name\": \"A\"}]}"),
                "body.variables[0]",
                "missing required key \"states\"",
            ),
            (
                net_doc(&format!(
                    "{{\"variables\": [{two}, \"given\": [\"B\"], \"table\": []}}]}}"
                )),
                "body.variables[0].given[0]",
                "unknown variable \"B\"",
            ),
            (
                net_doc(&format!("{{\"variables\": [{two}, \"given\": []}}]}}")),
                "body.variables[0].given",
                "requires a \"table\"",
            ),
            (
                net_doc(&format!(
                    "{{\"variables\": [{two}, \"table\": [{{\"when\": {{}}, \"p\": [1]}}]}}]}}"
                )),
                "body.variables[0].table[0].p",
                "expected 2 entries",
            ),
            (
                net_doc(&format!(
                    "{{\"variables\": [{two}, \"table\": [{{\"when\": {{\"Z\": \"x\"}}, \"p\": [1, 0]}}]}}]}}"
                )),
                "body.variables[0].table[0].when",
                "not assignable",
            ),
            (
                net_doc(&format!(
                    "{{\"variables\": [{two}, \"table\": [{{\"when\": {{}}, \"p\": [1, 0]}}, {{\"when\": {{}}, \"p\": [0, 1]}}]}}]}}"
                )),
                "body.variables[0].table[1]",
                "duplicate entry for the empty assignment",
            ),
            (
                net_doc(&format!(
                    "{{\"variables\": [{two}, \"table\": [{{\"when\": {{}}, \"p\": [1, 0]}}]}}, {{\"name\": \"C\", \"states\": [\"u\", \"v\"], \"given\": [\"A\"], \"table\": [{{\"when\": {{\"A\": \"x\"}}, \"p\": [1, 0]}}]}}]}}"
                )),
                "body.variables[1].table",
                "missing entry for A=y",
            ),
        ];
        for (text, want_path, want_msg) in cases {
            let (path, msg) = schema_err(&text);
            assert_eq!(path, want_path, "for {msg:?}");
            assert!(msg.contains(want_msg), "{msg:?} lacks {want_msg:?}");
        }
    }

    #[test]
    fn maid_documents_reject_malformed_structure() {
        let body = "{\"agents\": [\"P\"], \"nodes\": [\
            {\"kind\": \"chance\", \"name\": \"A\", \"states\": [\"x\", \"y\"], \"table\": [{\"when\": {}, \"p\": [0.5, 0.5]}]}, \
            {\"kind\": \"utility\", \"name\": \"U\", \"owner\": \"P\", \"given\": [\"A\"], \"table\": [{\"when\": {\"A\": \"x\"}, \"value\": 1}, {\"when\": {\"A\": \"y\"}, \"value\": 0}]}, \
            {\"kind\": \"chance\", \"name\": \"C\", \"states\": [\"u\"], \"given\": [\"U\"], \"table\": []}]}";
        let text = format!("{{\"body\": {body}, \"format_version\": 1, \"kind\": \"maid\"}}");
        let (path, msg) = schema_err(&text);
        assert_eq!(path, "body.nodes[2].given[0]");
        assert!(msg.contains("utility node"));

        let body = "{\"agents\": [\"P\"], \"nodes\": [\
            {\"kind\": \"decision\", \"name\": \"D\", \"owner\": \"Zed\", \"actions\": [\"l\", \"r\"]}]}";
        let text = format!("{{\"body\": {body}, \"format_version\": 1, \"kind\": \"maid\"}}");
        let (path, msg) = schema_err(&text);
        assert_eq!(path, "body");
        assert!(msg.contains("Zed"));

        let body = "{\"agents\": [\"P\"], \"nodes\": [\
            {\"kind\": \"widget\", \"name\": \"D\"}]}";
        let text = format!("{{\"body\": {body}, \"format_version\": 1, \"kind\": \"maid\"}}");
        let (path, msg) = schema_err(&text);
        assert_eq!(path, "body.nodes[0].kind");
        assert!(msg.contains("unknown node kind"));
    }

    fn nid_doc(mods: &str, root: &str) -> String {
        format!(
            "{{\"body\": {{\"blocks\": [{{\"label\": \"b\", \"maid\": {{\"agents\": [\"P\"], \
             \"nodes\": [{{\"kind\": \"decision\", \"name\": \"D\", \"owner\": \"P\", \
             \"actions\": [\"l\", \"r\"]}}]}}{mods}}}], \"root\": \"{root}\"}}, \
             \"format_version\": 1, \"kind\": \"nid\"}}"
        )
    }

    #[test]
    fn web_documents_reject_malformed_structure() {
        let (path, msg) = schema_err(&nid_doc("", "nowhere"));
        assert_eq!(path, "body.root");
        assert!(msg.contains("unknown block \"nowhere\""));

        let one = "{\"observer\": \"P\", \"decision\": \"D\", \"blocks\": [\"b\"], \"table\": [{\"when\": {}, \"p\": [1]}]}";
        let (path, msg) = schema_err(&nid_doc(&format!(", \"mods\": [{one}, {one}]"), "b"));
        assert_eq!(path, "body.blocks[0].mods[1]");
        assert!(msg.contains("duplicate entry"));

        let bad = "{\"observer\": \"P\", \"decision\": \"D\", \"blocks\": [\"b\"], \"given\": [\"Q\"], \"table\": []}";
        let (path, msg) = schema_err(&nid_doc(&format!(", \"mods\": [{bad}]"), "b"));
        assert_eq!(path, "body.blocks[0].mods[0].given[0]");
        assert!(msg.contains("value-bearing"));
    }

    #[test]
    fn game_documents_must_cover_the_whole_tensor() {
        let text = serialize_document(&ModelDocument::new(ModelBody::BayesianGame(pennies_bg())));

        let lines: Vec<&str> = text.lines().collect();
        let cell = lines
            .iter()
            .position(|l| l.trim_start().starts_with("{\"actions\"") && l.ends_with(","))
            .expect("an inline payoff cell");
        let pruned: Vec<&str> = lines
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != cell)
            .map(|(_, l)| *l)
            .collect();
        let (path, msg) = schema_err(&pruned.join("\n"));
        assert!(path.contains("payoffs") && path.contains("cells"), "{path}");
        assert!(msg.contains("missing entry"), "{msg}");

        let belief = lines
            .iter()
            .position(|l| l.contains("\"agent\": \"A\", \"over\""))
            .expect("an inline belief entry");
        let mut doubled = lines.clone();
        doubled.insert(belief + 1, lines[belief]);
        doubled[belief] = Box::leak(format!("{},", lines[belief].trim_end_matches(',')).into_boxed_str());
        let (path, msg) = schema_err(&doubled.join("\n"));
        assert!(path.contains("beliefs"), "{path}");
        assert!(msg.contains("duplicate beliefs"), "{msg}");
    }

    #[test]
    fn validation_is_dispatched_by_kind() {
        let text = net_doc(
            "{\"variables\": [{\"name\": \"A\", \"states\": [\"x\", \"y\"], \"table\": [{\"when\": {}, \"p\": [0.6, 0.6]}]}]}",
        );
        let doc = parse_document(&text).unwrap();
        assert!(!doc.validate().is_clean(), "row sums are a validation concern");
        let good = ModelDocument::new(ModelBody::BayesianGame(pennies_bg()));
        assert!(good.validate().is_clean());
    }

    fn random_net(seed: u64) -> BayesNet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = BayesNet::new();
        let n = rng.random_range(2..=5);
        for i in 0..n {
            let card = rng.random_range(2..=3usize);
            let states: Vec<String> = (0..card).map(|s| format!("s{s}")).collect();
            net.add_var_owned(format!("v{i}"), states).unwrap();
        }
        for i in 0..n {
            let parents: Vec<usize> = (0..i).filter(|_| rng.random_bool(0.4)).take(2).collect();
            let rows: usize = parents.iter().map(|&p| net.var(p).card()).product();
            let card = net.var(i).card();
            let mut table = Vec::with_capacity(rows * card);
            for _ in 0..rows {
                let row: Vec<f64> = (0..card).map(|_| rng.random_range(0.05..1.0)).collect();
                let s: f64 = row.iter().sum();
                table.extend(row.iter().map(|x| x / s));
            }
            net.set_cpd(i, parents, table).unwrap();
        }
        net
    }

    #[test]
    fn random_documents_round_trip() {
        for seed in 0..100u64 {
            let body = match seed % 4 {
                0 => ModelBody::Network(random_net(seed)),
                1 => ModelBody::Maid(agent_form_maid(&random_bg(seed)).unwrap()),
                2 => ModelBody::Nid(to_nid(&random_bg(seed)).unwrap().0),
                _ => ModelBody::BayesianGame(random_bg(seed)),
            };
            let doc = ModelDocument::new(body);
            let back = round_trip(&doc);
            assert_bodies_match(&doc.body, &back.body);
        }
    }

    fn fixture_path(name: &str) -> std::path::PathBuf {
        std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../fixtures")
            .join(format!("{name}.nids"))
    }

    #[test]
    fn shipped_documents_match_the_code() {
        for (name, doc) in fixture_documents() {
            let path = fixture_path(name);
            let text = std::fs::read_to_string(&path).unwrap_or_else(|e| {
                panic!(
                    "{}: {e}; run regenerate_shipped_documents with --ignored",
                    path.display()
                )
            });
            assert_eq!(text, serialize_document(&doc), "{name} drifted; regenerate it");
            let back = parse_document(&text).unwrap();
            assert_eq!(serialize_document(&back), text);
        }
    }

    #[test]
    #[ignore = "rewrites the documents under fixtures/"]
    fn regenerate_shipped_documents() {
        let dir = fixture_path("x");
        std::fs::create_dir_all(dir.parent().unwrap()).unwrap();
        for (name, doc) in fixture_documents() {
            std::fs::write(fixture_path(name), serialize_document(&doc)).unwrap();
        }
    }
}
