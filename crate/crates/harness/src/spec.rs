//! Experiment configuration: a single JSON document, validated as a whole
//! with every problem reported against the line it occurs on.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::PathBuf;

use crng_core::codec::{
    CodePolicy, CodeShape, CosetPolicy, DecodeMode, EnsembleChoice, MessageDims, RatePair,
};
use crng_core::field::Field;
use crng_core::hash::{EnsembleKind, HashParams, SparseSampler};
use crng_core::prob::{ChannelSpec, ConditionalKernel, GroupKernel, JointSourceSpec, LetterModel, ROW_TOLERANCE};
use crng_core::{AccessStructure, IdSet};
use serde_json::{Map, Value};

use crate::canon::config_hash;
use crate::lines::{child, item, LineIndex};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecError {
    pub line: usize,
    pub path: String,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            write!(f, "line {}: {}: {}", self.line, self.path, self.message)
        }
    }
}

/// Command-line values that replace the matching config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub trial_log: bool,
}

#[derive(Clone, Debug)]
pub struct RunSettings {
    pub trials: u64,
    pub seed: u64,
    pub threads: usize,
    pub mode: DecodeMode,
    pub epsilon: f64,
    pub markov_tolerance: f64,
    pub tail_samples: u64,
    /// message rates in message order
    pub rate_points: Vec<Vec<f64>>,
    /// `(f, g)` parameters per message, when given
    pub hash_params: Option<Vec<(HashParams, HashParams)>>,
}

#[derive(Clone, Debug)]
pub struct CodeSettings {
    pub shape: CodeShape,
    pub ensemble: EnsembleChoice,
    pub code_policy: CodePolicy,
    pub cosets: CosetPolicy,
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    /// the document after overrides
    pub raw: Value,
    pub config_hash: String,
    pub model: LetterModel,
    pub field: Field,
    pub code: Option<CodeSettings>,
    pub run: RunSettings,
    pub out_dir: Option<PathBuf>,
    pub trial_log: bool,
}

/// Parses and validates a config without overrides.
pub fn validate_spec(text: &str) -> Result<ExperimentSpec, Vec<SpecError>> {
    validate_spec_with(text, &Overrides::default())
}

pub fn validate_spec_with(text: &str, ov: &Overrides) -> Result<ExperimentSpec, Vec<SpecError>> {
    let mut raw: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            return Err(vec![SpecError { line: e.line(), path: String::new(), message: format!("invalid JSON: {e}") }])
        }
    };
    let index = LineIndex::build(text);
    apply_overrides(&mut raw, ov);
    let mut cx = Ctx::default();
    let spec = parse(&raw, &mut cx);
    if !cx.errors.is_empty() || spec.is_none() {
        let mut out: Vec<SpecError> = cx
            .errors
            .into_iter()
            .map(|(path, message)| SpecError { line: index.line_of(&path), path, message })
            .collect();
        if out.is_empty() {
            out.push(SpecError { line: 1, path: String::new(), message: "invalid configuration".into() });
        }
        return Err(out);
    }
    let mut spec = spec.expect("checked above");
    spec.config_hash = config_hash(&hashed_view(&raw));
    spec.raw = raw;
    if ov.trial_log {
        spec.trial_log = true;
    }
    if let Some(o) = &ov.out {
        spec.out_dir = Some(o.clone());
    }
    Ok(spec)
}

fn apply_overrides(raw: &mut Value, ov: &Overrides) {
    let Some(root) = raw.as_object_mut() else { return };
    if ov.trials.is_none() && ov.seed.is_none() && ov.threads.is_none() {
        return;
    }
    let run = root.entry("run").or_insert_with(|| Value::Object(Map::new()));
    if let Some(run) = run.as_object_mut() {
        if let Some(t) = ov.trials {
            run.insert("trials".into(), t.into());
        }
        if let Some(s) = ov.seed {
            run.insert("seed".into(), s.into());
        }
        if let Some(t) = ov.threads {
            run.insert("threads".into(), t.into());
        }
    }
}

/// Thread count and output location do not change results, so they are
/// left out of the digest.
fn hashed_view(raw: &Value) -> Value {
    let mut v = raw.clone();
    if let Some(root) = v.as_object_mut() {
        root.remove("output");
        if let Some(run) = root.get_mut("run").and_then(Value::as_object_mut) {
            run.remove("threads");
        }
    }
    v
}

#[derive(Default)]
struct Ctx {
    errors: Vec<(String, String)>,
}

impl Ctx {
    fn err(&mut self, path: &str, msg: impl Into<String>) {
        self.errors.push((path.to_string(), msg.into()));
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Map<String, Value>> {
        let o = v.as_object();
        if o.is_none() {
            self.err(path, "expected an object");
        }
        o
    }

    fn keys(&mut self, o: &Map<String, Value>, path: &str, allowed: &[&str]) {
        for k in o.keys() {
            if !allowed.contains(&k.as_str()) {
                self.err(&child(path, k), format!("unknown field (expected one of: {})", allowed.join(", ")));
            }
        }
    }

    fn string<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a str> {
        let s = v.as_str();
        if s.is_none() {
            self.err(path, "expected a string");
        }
        s
    }

    fn labels(&mut self, o: &Map<String, Value>, path: &str, key: &str) -> Vec<String> {
        let p = child(path, key);
        let Some(v) = o.get(key) else {
            self.err(&p, "missing field");
            return Vec::new();
        };
        let Some(arr) = v.as_array() else {
            self.err(&p, "expected an array of labels");
            return Vec::new();
        };
        if arr.is_empty() {
            self.err(&p, "must not be empty");
        }
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for (i, x) in arr.iter().enumerate() {
            if let Some(s) = self.string(x, &item(&p, i)) {
                if !seen.insert(s.to_string()) {
                    self.err(&item(&p, i), format!("duplicate label '{s}'"));
                }
                out.push(s.to_string());
            }
        }
        out
    }

    fn uint(&mut self, v: &Value, path: &str, min: u64) -> Option<u64> {
        match v.as_u64().or_else(|| v.as_f64().filter(|x| x.fract() == 0.0 && *x >= 0.0).map(|x| x as u64)) {
            Some(x) if x >= min => Some(x),
            _ => {
                self.err(path, format!("expected an integer of at least {min}"));
                None
            }
        }
    }

    fn number(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.err(path, "expected a number");
                None
            }
        }
    }

    fn opt_uint(&mut self, o: &Map<String, Value>, path: &str, key: &str, min: u64, default: u64) -> u64 {
        match o.get(key) {
            None => default,
            Some(v) => self.uint(v, &child(path, key), min).unwrap_or(default),
        }
    }

    fn positive(&mut self, o: &Map<String, Value>, path: &str, key: &str, default: f64) -> f64 {
        match o.get(key) {
            None => default,
            Some(v) => match self.number(v, &child(path, key)) {
                Some(x) if x > 0.0 => x,
                Some(_) => {
                    self.err(&child(path, key), "must be positive");
                    default
                }
                None => default,
            },
        }
    }

    /// Rows of a kernel with the expected shape; each row must be a
    /// probability vector.
    fn rows(&mut self, v: &Value, path: &str, name: &str, n_rows: usize, width: usize) -> Option<Vec<Vec<f64>>> {
        let Some(arr) = v.as_array() else {
            self.err(path, "expected an array of rows");
            return None;
        };
        if arr.len() != n_rows {
            self.err(path, format!("kernel '{name}' needs {n_rows} rows, found {}", arr.len()));
            return None;
        }
        let mut out = Vec::new();
        let mut ok = true;
        for (r, row) in arr.iter().enumerate() {
            let rp = item(path, r);
            let Some(vals) = row.as_array() else {
                self.err(&rp, "expected an array of probabilities");
                ok = false;
                continue;
            };
            if vals.len() != width {
                self.err(&rp, format!("kernel '{name}' row {r} has {} entries, expected {width}", vals.len()));
                ok = false;
                continue;
            }
            let mut nums = Vec::new();
            for (c, x) in vals.iter().enumerate() {
                match self.number(x, &item(&rp, c)) {
                    Some(p) if p >= 0.0 => nums.push(p),
                    Some(p) => {
                        self.err(&item(&rp, c), format!("kernel '{name}' row {r} has negative entry {p}"));
                        ok = false;
                    }
                    None => ok = false,
                }
            }
            if nums.len() == width {
                let s: f64 = nums.iter().sum();
                if (s - 1.0).abs() > ROW_TOLERANCE {
                    let shown = (s * 1e12).round() / 1e12;
                    self.err(&rp, format!("kernel '{name}' row {r} sums to {shown}"));
                    ok = false;
                }
            }
            out.push(nums);
        }
        ok.then_some(out)
    }
}

struct AccessBlock {
    access: AccessStructure,
}

fn parse_access(root: &Map<String, Value>, cx: &mut Ctx) -> Option<AccessBlock> {
    let path = "access";
    let Some(v) = root.get(path) else {
        cx.err(path, "missing block");
        return None;
    };
    let o = cx.object(v, path)?;
    cx.keys(o, path, &["messages", "encoders", "decoders", "arcs", "demands"]);
    let before = cx.errors.len();
    let messages = cx.labels(o, path, "messages");
    let encoders = cx.labels(o, path, "encoders");
    let decoders = cx.labels(o, path, "decoders");
    let mut arcs: Vec<(String, String)> = Vec::new();
    let arcs_path = child(path, "arcs");
    match o.get("arcs").map(|a| (a, a.as_array())) {
        None => cx.err(&arcs_path, "missing field"),
        Some((_, None)) => cx.err(&arcs_path, "expected an array of [message, encoder] pairs"),
        Some((_, Some(list))) => {
            for (k, a) in list.iter().enumerate() {
                let p = item(&arcs_path, k);
                let pair = a.as_array().filter(|x| x.len() == 2).and_then(|x| Some((x[0].as_str()?, x[1].as_str()?)));
                let Some((s, i)) = pair else {
                    cx.err(&p, "expected a [message, encoder] pair of labels");
                    continue;
                };
                let bad_s = !messages.iter().any(|m| m == s);
                let bad_i = !encoders.iter().any(|e| e == i);
                match (bad_s, bad_i) {
                    (true, true) => cx.err(&p, format!("arc ({s},{i}) references unknown message '{s}' and unknown encoder '{i}'")),
                    (true, false) => cx.err(&p, format!("arc ({s},{i}) references unknown message '{s}'")),
                    (false, true) => cx.err(&p, format!("arc ({s},{i}) references unknown encoder '{i}'")),
                    (false, false) => {
                        if !arcs.iter().any(|(a, b)| a == s && b == i) {
                            arcs.push((s.to_string(), i.to_string()));
                        }
                    }
                }
            }
            for m in &messages {
                // only meaningful when every arc parsed
                if cx.errors.len() == before && !arcs.iter().any(|(s, _)| s == m) {
                    cx.err(&arcs_path, format!("message '{m}' has no encoder"));
                }
            }
        }
    }
    let dem_path = child(path, "demands");
    let mut demands: Vec<(String, Vec<String>)> = Vec::new();
    match o.get("demands").map(|d| (d, d.as_object())) {
        None => cx.err(&dem_path, "missing field"),
        Some((_, None)) => cx.err(&dem_path, "expected an object mapping decoders to message lists"),
        Some((_, Some(map))) => {
            for (j, list) in map {
                let p = child(&dem_path, j);
                if !decoders.contains(j) {
                    cx.err(&p, format!("demand for unknown decoder '{j}'"));
                    continue;
                }
                let Some(arr) = list.as_array() else {
                    cx.err(&p, "expected an array of message labels");
                    continue;
                };
                if arr.is_empty() {
                    cx.err(&p, format!("decoder '{j}' demands no message"));
                    continue;
                }
                let mut want = Vec::new();
                for (k, s) in arr.iter().enumerate() {
                    if let Some(s) = cx.string(s, &item(&p, k)) {
                        if messages.iter().any(|m| m == s) {
                            want.push(s.to_string());
                        } else {
                            cx.err(&item(&p, k), format!("decoder '{j}' demands unknown message '{s}'"));
                        }
                    }
                }
                demands.push((j.clone(), want));
            }
            for j in &decoders {
                if !map.contains_key(j) {
                    cx.err(&dem_path, format!("decoder '{j}' has no demand"));
                }
            }
        }
    }
    if cx.errors.len() != before {
        return None;
    }
    match AccessStructure::new(&messages, &encoders, &decoders, &arcs, &demands) {
        Ok(access) => Some(AccessBlock { access }),
        Err(e) => {
            cx.err(path, e.to_string());
            None
        }
    }
}

fn field_of(root: &Map<String, Value>, cx: &mut Ctx) -> Field {
    let q = root
        .get("code")
        .and_then(Value::as_object)
        .and_then(|c| c.get("q"))
        .map(|v| cx.uint(v, "code.q", 2).unwrap_or(2))
        .unwrap_or(2);
    match u16::try_from(q).ok().map(Field::new) {
        Some(Ok(f)) => f,
        _ => {
            cx.err("code.q", format!("field order {q} must be a prime of at most 257"));
            Field::binary()
        }
    }
}

fn message_map<'a>(
    cx: &mut Ctx,
    v: &'a Value,
    path: &str,
    a: &AccessStructure,
    require_all: bool,
) -> Vec<Option<&'a Value>> {
    let mut out = vec![None; a.num_messages()];
    let Some(o) = cx.object(v, path) else { return out };
    for (k, x) in o {
        match a.message_index(k) {
            Ok(s) => out[s] = Some(x),
            Err(_) => cx.err(&child(path, k), format!("unknown message '{k}'")),
        }
    }
    if require_all {
        for (s, slot) in out.iter().enumerate() {
            if slot.is_none() {
                cx.err(path, format!("no entry for message '{}'", a.message_labels()[s]));
            }
        }
    }
    out
}

fn parse_source(root: &Map<String, Value>, a: &AccessStructure, q: usize, cx: &mut Ctx) -> Option<JointSourceSpec> {
    let sorted = a.sorted_family();
    let path = "source";
    let empty = Map::new();
    let o = match root.get(path) {
        None => &empty,
        Some(v) => cx.object(v, path)?,
    };
    cx.keys(o, path, &["alphabets", "groups"]);
    let mut alphabets = vec![q; a.num_messages()];
    if let Some(v) = o.get("alphabets") {
        let p = child(path, "alphabets");
        for (s, x) in message_map(cx, v, &p, a, false).into_iter().enumerate() {
            if let Some(x) = x {
                let label = &a.message_labels()[s];
                if let Some(c) = cx.uint(x, &child(&p, label), 1) {
                    alphabets[s] = c as usize;
                }
            }
        }
    }
    let mut spec = match JointSourceSpec::uniform(alphabets.clone(), &sorted) {
        Ok(s) => s,
        Err(e) => {
            cx.err(path, e.to_string());
            return None;
        }
    };
    if let Some(v) = o.get("groups") {
        let gp = child(path, "groups");
        let Some(list) = v.as_array() else {
            cx.err(&gp, "expected an array of group kernels");
            return None;
        };
        let mut seen = HashSet::new();
        for (gi, g) in list.iter().enumerate() {
            let p = item(&gp, gi);
            let Some(go) = cx.object(g, &p) else { continue };
            cx.keys(go, &p, &["encoders", "rows", "distribution"]);
            let Some(encs) = go.get("encoders").and_then(Value::as_array) else {
                cx.err(&child(&p, "encoders"), "expected an array of encoder labels");
                continue;
            };
            let mut set = IdSet::EMPTY;
            let mut ok = true;
            for (k, e) in encs.iter().enumerate() {
                match e.as_str().map(|l| a.encoder_index(l)) {
                    Some(Ok(i)) => set.insert(i),
                    _ => {
                        cx.err(&item(&child(&p, "encoders"), k), "unknown encoder");
                        ok = false;
                    }
                }
            }
            if !ok {
                continue;
            }
            let Some(k) = sorted.position(set) else {
                cx.err(&p, format!("no message group is held by exactly encoders {}", a.format_encoders(set)));
                continue;
            };
            if !seen.insert(k) {
                cx.err(&p, format!("second kernel for encoders {}", a.format_encoders(set)));
                continue;
            }
            let name = format!("source group {}", a.format_encoders(set));
            let card = |s: IdSet| s.iter().map(|m| alphabets[m]).collect::<Vec<_>>();
            let ins = card(sorted.upper_closure[k]);
            let outs = card(sorted.group_messages[k]);
            let n_rows: usize = ins.iter().product();
            let width: usize = outs.iter().product();
            let rows = match (go.get("rows"), go.get("distribution")) {
                (Some(r), None) => cx.rows(r, &child(&p, "rows"), &name, n_rows, width),
                (None, Some(d)) => {
                    if n_rows != 1 {
                        cx.err(&child(&p, "distribution"), format!("group conditions on messages {}; give rows", a.format_messages(sorted.upper_closure[k])));
                        None
                    } else {
                        cx.rows(&Value::Array(vec![d.clone()]), &child(&p, "distribution"), &name, 1, width)
                    }
                }
                _ => {
                    cx.err(&p, "give exactly one of rows or distribution");
                    None
                }
            };
            if let Some(rows) = rows {
                match ConditionalKernel::new(ins, outs, rows) {
                    Ok(kernel) => {
                        spec.groups[k] = GroupKernel { kernel, ..spec.groups[k].clone() };
                    }
                    Err(e) => cx.err(&p, e.to_string()),
                }
            }
        }
    }
    Some(spec)
}

fn parse_channel(root: &Map<String, Value>, a: &AccessStructure, cx: &mut Ctx) -> Option<ChannelSpec> {
    let path = "channel";
    let Some(v) = root.get(path) else {
        cx.err(path, "missing block");
        return None;
    };
    let o = cx.object(v, path)?;
    cx.keys(o, path, &["preset", "inputs", "outputs", "rows"]);
    if let Some(p) = o.get("preset") {
        let t = cx.string(p, &child(path, "preset"))?;
        return match ChannelSpec::preset(t, a.num_encoders(), a.num_decoders()) {
            Ok(c) => Some(c),
            Err(e) => {
                cx.err(&child(path, "preset"), e.to_string());
                None
            }
        };
    }
    let cards = |cx: &mut Ctx, key: &str, want: usize| -> Option<Vec<usize>> {
        let p = child(path, key);
        let Some(arr) = o.get(key).and_then(Value::as_array) else {
            cx.err(&p, "expected an array of alphabet sizes");
            return None;
        };
        if arr.len() != want {
            cx.err(&p, format!("expected {want} alphabet sizes, found {}", arr.len()));
            return None;
        }
        arr.iter().enumerate().map(|(k, x)| cx.uint(x, &item(&p, k), 1).map(|c| c as usize)).collect()
    };
    let ins = cards(cx, "inputs", a.num_encoders());
    let outs = cards(cx, "outputs", a.num_decoders());
    let (ins, outs) = (ins?, outs?);
    let Some(r) = o.get("rows") else {
        cx.err(path, "give a preset or inputs, outputs and rows");
        return None;
    };
    let rows = cx.rows(r, &child(path, "rows"), "channel", ins.iter().product(), outs.iter().product())?;
    match ConditionalKernel::new(ins, outs, rows).and_then(|k| ChannelSpec::new(k, true)) {
        Ok(c) => Some(c),
        Err(e) => {
            cx.err(path, e.to_string());
            None
        }
    }
}

fn parse_inputs(
    root: &Map<String, Value>,
    a: &AccessStructure,
    alphabets: &[usize],
    channel: &ChannelSpec,
    cx: &mut Ctx,
) -> Option<Vec<ConditionalKernel>> {
    let path = "inputs";
    let empty = Map::new();
    let o = match root.get(path) {
        None => &empty,
        Some(v) => cx.object(v, path)?,
    };
    for k in o.keys() {
        if a.encoder_index(k).is_err() {
            cx.err(&child(path, k), format!("unknown encoder '{k}'"));
        }
    }
    let mut out = Vec::new();
    let mut ok = true;
    for i in 0..a.num_encoders() {
        let label = &a.encoder_labels()[i];
        let p = child(path, label);
        let held: Vec<usize> = a.messages_of_encoder(i).ok()?.iter().map(|s| alphabets[s]).collect();
        let x = channel.input_alphabets[i];
        let spec = o.get(label.as_str());
        let kernel = match spec {
            None | Some(Value::String(_)) => {
                let name = spec.and_then(Value::as_str).unwrap_or("tuple");
                match name {
                    "tuple" => {
                        let size: usize = held.iter().product();
                        if size != x {
                            cx.err(&p, format!(
                                "encoder '{label}' holds {size} letter combinations but the channel input has {x} letters; choose 'sum-mod' or give rows"
                            ));
                            None
                        } else {
                            let cards = held.clone();
                            ConditionalKernel::deterministic(held.clone(), vec![x], move |z| {
                                vec![z.iter().zip(&cards).fold(0, |acc, (&v, &c)| acc * c + v)]
                            })
                            .ok()
                        }
                    }
                    "sum-mod" => {
                        if held.iter().any(|&c| c != x) {
                            cx.err(&p, format!("'sum-mod' needs every message alphabet of encoder '{label}' to equal the channel input alphabet {x}"));
                            None
                        } else {
                            ConditionalKernel::sum_mod(x, held.len()).ok()
                        }
                    }
                    other => {
                        cx.err(&p, format!("unknown input kernel '{other}' (expected tuple, sum-mod or an object with rows)"));
                        None
                    }
                }
            }
            Some(v) => {
                let Some(ko) = cx.object(v, &p) else {
                    ok = false;
                    continue;
                };
                cx.keys(ko, &p, &["rows"]);
                match ko.get("rows") {
                    None => {
                        cx.err(&p, "missing rows");
                        None
                    }
                    Some(r) => cx
                        .rows(r, &child(&p, "rows"), &format!("input of encoder '{label}'"), held.iter().product(), x)
                        .and_then(|rows| ConditionalKernel::new(held.clone(), vec![x], rows).ok()),
                }
            }
        };
        match kernel {
            Some(k) => out.push(k),
            None => ok = false,
        }
    }
    ok.then_some(out)
}

fn parse_code(root: &Map<String, Value>, a: &AccessStructure, field: Field, cx: &mut Ctx) -> Option<CodeSettings> {
    let path = "code";
    let v = root.get(path)?;
    let o = cx.object(v, path)?;
    cx.keys(o, path, &["n", "q", "rates", "dims", "ensemble", "column_degree", "sampler", "coset_policy", "code_policy"]);
    let n = match o.get("n") {
        Some(v) => cx.uint(v, "code.n", 1)? as usize,
        None => {
            cx.err("code.n", "missing field");
            return None;
        }
    };
    let shape = match (o.get("rates"), o.get("dims")) {
        (Some(r), None) => {
            let p = child(path, "rates");
            let entries = message_map(cx, r, &p, a, true);
            let mut rates = Vec::new();
            for (s, e) in entries.into_iter().enumerate() {
                let mp = child(&p, &a.message_labels()[s]);
                let e = e?;
                let eo = cx.object(e, &mp)?;
                cx.keys(eo, &mp, &["message", "codeword"]);
                let get = |cx: &mut Ctx, key: &str| -> Option<f64> {
                    match eo.get(key) {
                        None => {
                            cx.err(&child(&mp, key), "missing field");
                            None
                        }
                        Some(x) => match cx.number(x, &child(&mp, key)) {
                            Some(r) if r >= 0.0 => Some(r),
                            Some(_) => {
                                cx.err(&child(&mp, key), "rate must be nonnegative");
                                None
                            }
                            None => None,
                        },
                    }
                };
                let (m, c) = (get(cx, "message"), get(cx, "codeword"));
                rates.push(RatePair { message: m?, codeword: c? });
            }
            match CodeShape::from_rates(n, field, &rates) {
                Ok(s) => s,
                Err(e) => {
                    cx.err(&p, e.to_string());
                    return None;
                }
            }
        }
        (None, Some(d)) => {
            let p = child(path, "dims");
            let entries = message_map(cx, d, &p, a, true);
            let mut dims = Vec::new();
            for (s, e) in entries.into_iter().enumerate() {
                let mp = child(&p, &a.message_labels()[s]);
                let eo = cx.object(e?, &mp)?;
                cx.keys(eo, &mp, &["message_rows", "codeword_rows"]);
                let get = |cx: &mut Ctx, key: &str| -> Option<usize> {
                    match eo.get(key) {
                        None => {
                            cx.err(&child(&mp, key), "missing field");
                            None
                        }
                        Some(x) => cx.uint(x, &child(&mp, key), 0).map(|v| v as usize),
                    }
                };
                let (m, c) = (get(cx, "message_rows"), get(cx, "codeword_rows"));
                dims.push(MessageDims { message_rows: m?, codeword_rows: c? });
            }
            match CodeShape::new(n, field, dims) {
                Ok(s) => s,
                Err(e) => {
                    cx.err(&p, e.to_string());
                    return None;
                }
            }
        }
        _ => {
            cx.err(path, "give exactly one of rates or dims");
            return None;
        }
    };
    let mut ensemble = EnsembleChoice::default();
    if let Some(e) = o.get("ensemble") {
        match e.as_str() {
            Some("uniform") => ensemble.kind = EnsembleKind::Uniform,
            Some("sparse") => ensemble.kind = EnsembleKind::Sparse,
            _ => cx.err("code.ensemble", "expected 'uniform' or 'sparse'"),
        }
    }
    if let Some(d) = o.get("column_degree") {
        ensemble.column_degree = cx.uint(d, "code.column_degree", 1).map(|d| d as usize);
    }
    if let Some(s) = o.get("sampler") {
        match s.as_str() {
            Some("exact-distinct") => ensemble.sampler = SparseSampler::ExactDistinct,
            Some("with-replacement") => ensemble.sampler = SparseSampler::WithReplacement,
            _ => cx.err("code.sampler", "expected 'exact-distinct' or 'with-replacement'"),
        }
    }
    if ensemble.kind == EnsembleKind::Sparse {
        for d in &shape.dims {
            for rows in [d.codeword_rows, d.message_rows] {
                if let Err(e) = ensemble.spec(field, rows, n).validate() {
                    cx.err(path, e.to_string());
                }
            }
        }
    }
    let code_policy = match o.get("code_policy").map(Value::as_str) {
        None | Some(Some("per-experiment")) => CodePolicy::PerExperiment,
        Some(Some("per-trial")) => CodePolicy::PerTrial,
        _ => {
            cx.err("code.code_policy", "expected 'per-experiment' or 'per-trial'");
            CodePolicy::PerExperiment
        }
    };
    let cosets = match o.get("coset_policy") {
        None => CosetPolicy::Sampled,
        Some(Value::String(s)) if s == "sampled" => CosetPolicy::Sampled,
        Some(Value::Object(m)) if m.len() == 1 && m.contains_key("fixed") => {
            let p = "code.coset_policy.fixed";
            let entries = message_map(cx, &m["fixed"], p, a, true);
            let mut vals = Vec::new();
            for (s, e) in entries.into_iter().enumerate() {
                let mp = child(p, &a.message_labels()[s]);
                let want = shape.dims[s].codeword_rows;
                let Some(arr) = e.and_then(Value::as_array) else {
                    cx.err(&mp, "expected an array of field elements");
                    return None;
                };
                if arr.len() != want {
                    cx.err(&mp, format!("coset value needs {want} entries, found {}", arr.len()));
                    return None;
                }
                let mut vec = Vec::new();
                for (k, x) in arr.iter().enumerate() {
                    match cx.uint(x, &item(&mp, k), 0) {
                        Some(v) if v < field.order() as u64 => vec.push(v as u16),
                        Some(v) => {
                            cx.err(&item(&mp, k), format!("{v} is not an element of GF({})", field.order()));
                            return None;
                        }
                        None => return None,
                    }
                }
                vals.push(vec);
            }
            CosetPolicy::Fixed(vals)
        }
        Some(_) => {
            cx.err("code.coset_policy", "expected 'sampled' or {\"fixed\": {...}}");
            CosetPolicy::Sampled
        }
    };
    Some(CodeSettings { shape, ensemble, code_policy, cosets })
}

fn parse_params(v: &Value, path: &str, cx: &mut Ctx) -> Option<HashParams> {
    let o = cx.object(v, path)?;
    cx.keys(o, path, &["alpha", "beta"]);
    let alpha = o.get("alpha").and_then(|x| cx.number(x, &child(path, "alpha")));
    let beta = o.get("beta").and_then(|x| cx.number(x, &child(path, "beta")));
    let (Some(alpha), Some(beta)) = (alpha, beta) else {
        cx.err(path, "needs numeric alpha and beta");
        return None;
    };
    match HashParams::new(alpha, beta) {
        Ok(p) => Some(p),
        Err(e) => {
            cx.err(path, e.to_string());
            None
        }
    }
}

/// Without an access structure the label-keyed fields are skipped.
fn parse_run(root: &Map<String, Value>, a: Option<&AccessStructure>, cx: &mut Ctx) -> RunSettings {
    let path = "run";
    let empty = Map::new();
    let o = match root.get(path) {
        None => &empty,
        Some(v) => cx.object(v, path).unwrap_or(&empty),
    };
    cx.keys(
        o,
        path,
        &["trials", "seed", "threads", "mode", "epsilon", "markov_tolerance", "tail_samples", "rate_points", "hash_params"],
    );
    let trials = cx.opt_uint(o, path, "trials", 1, 100);
    let seed = cx.opt_uint(o, path, "seed", 0, 0);
    let threads = cx.opt_uint(o, path, "threads", 1, 1) as usize;
    let mode = match o.get("mode").map(Value::as_str) {
        None | Some(Some("stochastic")) => DecodeMode::Stochastic,
        Some(Some("map")) => DecodeMode::Map,
        _ => {
            cx.err("run.mode", "expected 'stochastic' or 'map'");
            DecodeMode::Stochastic
        }
    };
    let epsilon = cx.positive(o, path, "epsilon", 0.05);
    let markov_tolerance = cx.positive(o, path, "markov_tolerance", 1e-9);
    let tail_samples = cx.opt_uint(o, path, "tail_samples", 1, 20_000);
    let mut rate_points = Vec::new();
    let mut hash_params = None;
    let Some(a) = a else {
        return RunSettings { trials, seed, threads, mode, epsilon, markov_tolerance, tail_samples, rate_points, hash_params };
    };
    if let Some(v) = o.get("rate_points") {
        let p = child(path, "rate_points");
        match v.as_array() {
            None => cx.err(&p, "expected an array of rate points"),
            Some(list) => {
                for (k, pt) in list.iter().enumerate() {
                    let pp = item(&p, k);
                    let entries = message_map(cx, pt, &pp, a, true);
                    let mut rates = Vec::new();
                    for (s, e) in entries.into_iter().enumerate() {
                        let Some(e) = e else { continue };
                        match cx.number(e, &child(&pp, &a.message_labels()[s])) {
                            Some(r) if r >= 0.0 => rates.push(r),
                            Some(_) => cx.err(&child(&pp, &a.message_labels()[s]), "rate must be nonnegative"),
                            None => {}
                        }
                    }
                    if rates.len() == a.num_messages() {
                        rate_points.push(rates);
                    }
                }
            }
        }
    }
    if let Some(v) = o.get("hash_params") {
        let p = child(path, "hash_params");
        let entries = message_map(cx, v, &p, a, true);
        let mut out = Vec::new();
        for (s, e) in entries.into_iter().enumerate() {
            let mp = child(&p, &a.message_labels()[s]);
            let Some(eo) = e.and_then(|e| cx.object(e, &mp)) else { continue };
            cx.keys(eo, &mp, &["f", "g"]);
            let f = eo.get("f").and_then(|x| parse_params(x, &child(&mp, "f"), cx));
            let g = eo.get("g").and_then(|x| parse_params(x, &child(&mp, "g"), cx));
            match (f, g) {
                (Some(f), Some(g)) => out.push((f, g)),
                _ => cx.err(&mp, "needs parameters for both f and g"),
            }
        }
        if out.len() == a.num_messages() {
            hash_params = Some(out);
        }
    }
    RunSettings { trials, seed, threads, mode, epsilon, markov_tolerance, tail_samples, rate_points, hash_params }
}

fn parse_output(root: &Map<String, Value>, cx: &mut Ctx) -> (Option<PathBuf>, bool) {
    let path = "output";
    let Some(v) = root.get(path) else { return (None, false) };
    let Some(o) = cx.object(v, path) else { return (None, false) };
    cx.keys(o, path, &["dir", "trial_log"]);
    let dir = o.get("dir").and_then(|d| cx.string(d, "output.dir")).map(PathBuf::from);
    let log = match o.get("trial_log") {
        None => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => {
            cx.err("output.trial_log", "expected true or false");
            false
        }
    };
    (dir, log)
}

fn parse(raw: &Value, cx: &mut Ctx) -> Option<ExperimentSpec> {
    let root = cx.object(raw, "")?;
    cx.keys(root, "", &["access", "source", "inputs", "channel", "code", "run", "output"]);
    let field = field_of(root, cx);
    let access = parse_access(root, cx);
    let (out_dir, trial_log) = parse_output(root, cx);
    let Some(AccessBlock { access }) = access else {
        parse_run(root, None, cx);
        return None;
    };
    let source = parse_source(root, &access, field.order() as usize, cx);
    let channel = parse_channel(root, &access, cx);
    let code = parse_code(root, &access, field, cx);
    let run = parse_run(root, Some(&access), cx);
    let (source, channel) = (source?, channel?);
    let inputs = parse_inputs(root, &access, &source.alphabets, &channel, cx)?;
    if !cx.errors.is_empty() {
        return None;
    }
    let model = match LetterModel::new(access, source, inputs, channel) {
        Ok(m) => m,
        Err(e) => {
            cx.err("", e.to_string());
            return None;
        }
    };
    Some(ExperimentSpec {
        raw: Value::Null,
        config_hash: String::new(),
        model,
        field,
        code,
        run,
        out_dir,
        trial_log,
    })
}

/// Labels of a set of message ids.
pub fn message_names(a: &AccessStructure, set: IdSet) -> Vec<String> {
    set.iter().map(|s| a.message_labels()[s].clone()).collect()
}

/// Labels of a set of encoder ids.
pub fn encoder_names(a: &AccessStructure, set: IdSet) -> Vec<String> {
    set.iter().map(|i| a.encoder_labels()[i].clone()).collect()
}

/// Rate point keyed by message label.
pub fn labelled(a: &AccessStructure, values: &[f64]) -> BTreeMap<String, f64> {
    a.message_labels().iter().cloned().zip(values.iter().copied()).collect()
}
