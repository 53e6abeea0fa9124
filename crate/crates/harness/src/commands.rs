//! The four commands and the record each produces.

use std::fmt;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use crng_core::access::validate;
use crng_core::bounds::{evaluate_error_bound, Exponent, TailMass, TailOptions};
use crng_core::codec::{simulate_error, CodePolicy, ExperimentPlan, Simulator};
use crng_core::hash::{hash_alpha_beta, hash_params_for, HashParams};
use crng_core::prob::{build_joint_z, check_markov};
use crng_core::region::{
    aux_indices, build_constraints, fourier_motzkin_project, lp_feasible, Inequality, LinearSystem, LpOutcome,
    RatePoint,
};
use crng_core::Error;
use serde_json::{json, Map, Value};

use crate::spec::{encoder_names, labelled, message_names, CodeSettings, ExperimentSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Region,
    Simulate,
    Verify,
    Bounds,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Region => "region",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Bounds => "bounds",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "region" => Ok(Command::Region),
            "simulate" => Ok(Command::Simulate),
            "verify" => Ok(Command::Verify),
            "bounds" => Ok(Command::Bounds),
            _ => Err(format!("unknown command '{s}'")),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Header and rows of `result.csv`. Columns are fixed per command.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub config_hash: String,
    pub command: Command,
    pub timestamp_unix: u64,
    pub payload: Value,
    pub table: Table,
    /// one line per trial when a trial log was requested
    pub trial_lines: Option<Vec<String>>,
    /// set when a verification check failed
    pub failure: Option<String>,
    /// extra files for the output directory, as (name, contents)
    pub artifacts: Vec<(String, String)>,
}

impl ResultRecord {
    pub fn to_json(&self) -> Value {
        json!({
            "config_hash": self.config_hash,
            "command": self.command.name(),
            "timestamp_unix": self.timestamp_unix,
            "payload": self.payload,
        })
    }
}

/// 12 significant digits, shortest form; exponent notation outside [1e-5, 1e16).
pub fn fmt12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse::<f64>().unwrap_or(x) + 0.0;
    if rounded != 0.0 && !(1e-5..1e16).contains(&rounded.abs()) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

pub const REGION_COLUMNS: [&str; 7] = ["section", "label", "coefficients", "relation", "bound", "feasible", "certificate"];
pub const SIMULATE_COLUMNS: [&str; 8] =
    ["trials", "errors", "encoder_errors", "degenerate_decodes", "p_hat", "std_error", "ci_low", "ci_high"];
pub const VERIFY_COLUMNS: [&str; 4] = ["kind", "name", "value", "passed"];
pub const BOUNDS_COLUMNS: [&str; 7] = ["section", "owner", "subset", "entropy", "rate_sum", "value", "std_error"];

pub fn run(command: Command, spec: &ExperimentSpec) -> Result<ResultRecord, Error> {
    let mut artifacts = Vec::new();
    let (payload, table, trial_lines, failure) = match command {
        Command::Region => {
            let (p, t) = region(spec)?;
            (p, t, None, None)
        }
        Command::Simulate => {
            let (p, t, lines) = simulate(spec, &mut artifacts)?;
            (p, t, lines, None)
        }
        Command::Verify => {
            let (p, t, f) = verify(spec)?;
            (p, t, None, f)
        }
        Command::Bounds => {
            let (p, t) = bounds(spec)?;
            (p, t, None, None)
        }
    };
    let timestamp_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    Ok(ResultRecord { config_hash: spec.config_hash.clone(), command, timestamp_unix, payload, table, trial_lines, failure, artifacts })
}

fn code_of(spec: &ExperimentSpec, command: &str) -> Result<CodeSettings, Error> {
    spec.code.clone().ok_or_else(|| Error::Input(format!("'{command}' needs a code block")))
}

fn nonzero_terms(sys: &LinearSystem, row: &Inequality) -> String {
    sys.variables
        .iter()
        .zip(&row.coeffs)
        .filter(|(_, c)| **c != 0.0)
        .map(|(v, c)| format!("{}:{}", v.name, fmt12(*c)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn rows_json(sys: &LinearSystem) -> Value {
    Value::Array(
        sys.rows
            .iter()
            .map(|r| {
                let coeffs: Map<String, Value> = sys
                    .variables
                    .iter()
                    .zip(&r.coeffs)
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(v, c)| (v.name.clone(), json!(c)))
                    .collect();
                json!({"label": r.label, "coefficients": coeffs, "relation": r.relation.symbol(), "bound": r.bound})
            })
            .collect(),
    )
}

fn region(spec: &ExperimentSpec) -> Result<(Value, Table), Error> {
    let m = &spec.model;
    let entropies = m.entropy_table()?;
    let strict = build_constraints(&m.access, &m.sorted, &entropies, true)?.with_nonnegative_aux();
    let closed = build_constraints(&m.access, &m.sorted, &entropies, false)?.with_nonnegative_aux();
    let aux = aux_indices(&strict);
    let interior = fourier_motzkin_project(&strict, &aux)?;
    let closure = fourier_motzkin_project(&closed, &aux)?;

    let mut table = Table { header: REGION_COLUMNS.to_vec(), rows: Vec::new() };
    for (section, sys) in [("system", &strict), ("interior", &interior), ("closure", &closure)] {
        for r in &sys.rows {
            table.rows.push(vec![
                section.into(),
                r.label.clone(),
                nonzero_terms(sys, r),
                r.relation.symbol().into(),
                fmt12(r.bound),
                String::new(),
                String::new(),
            ]);
        }
    }

    let mut points = Vec::new();
    for rates in &spec.run.rate_points {
        let point = RatePoint::new(rates.clone())?;
        let label = m
            .access
            .message_labels()
            .iter()
            .zip(rates)
            .map(|(l, r)| format!("R_{l}={}", fmt12(*r)))
            .collect::<Vec<_>>()
            .join(" ");
        let mut entry = Map::new();
        entry.insert("rates".into(), json!(labelled(&m.access, rates)));
        for (name, sys) in [("interior", &strict), ("closure", &closed)] {
            let outcome = lp_feasible(sys, &point)?;
            let (feasible, cert, value) = match &outcome {
                LpOutcome::Feasible { aux, margin } => {
                    let cert = m
                        .access
                        .message_labels()
                        .iter()
                        .zip(aux)
                        .map(|(l, a)| format!("r_{l}:{}", fmt12(*a)))
                        .chain(sys.rows.iter().any(|r| r.relation.is_strict()).then(|| format!("margin:{}", fmt12(*margin))))
                        .collect::<Vec<_>>()
                        .join(" ");
                    let v = json!({"feasible": true, "aux": labelled(&m.access, aux), "margin": margin});
                    (true, cert, v)
                }
                LpOutcome::Infeasible => (false, String::new(), json!({"feasible": false})),
            };
            entry.insert(name.into(), value);
            table.rows.push(vec![
                format!("point-{name}"),
                label.clone(),
                String::new(),
                String::new(),
                String::new(),
                feasible.to_string(),
                cert,
            ]);
        }
        points.push(Value::Object(entry));
    }
    let payload = json!({
        "variables": strict.variables.iter().map(|v| v.name.clone()).collect::<Vec<_>>(),
        "system": rows_json(&strict),
        "interior": rows_json(&interior),
        "closure": rows_json(&closure),
        "points": points,
    });
    Ok((payload, table))
}

fn simulate(spec: &ExperimentSpec, artifacts: &mut Vec<(String, String)>) -> Result<(Value, Table, Option<Vec<String>>), Error> {
    let code = code_of(spec, "simulate")?;
    let sim = Simulator::new(spec.model.clone(), spec.field)?;
    let plan = ExperimentPlan {
        shape: code.shape.clone(),
        ensemble: code.ensemble,
        code_policy: code.code_policy,
        cosets: code.cosets.clone(),
        mode: spec.run.mode,
        seed: spec.run.seed,
        trials: spec.run.trials,
        threads: spec.run.threads,
        keep_trials: spec.trial_log,
    };
    let s = simulate_error(&sim, &plan)?;
    let a = &spec.model.access;
    if code.code_policy == CodePolicy::PerExperiment {
        let c = plan.experiment_code()?;
        let mut text = String::new();
        for (s, l) in a.message_labels().iter().enumerate() {
            let coset: Vec<String> = c.cosets[s].iter().map(|x| x.to_string()).collect();
            text.push_str(&format!("message {l}\nf {}g {}coset [{}]\n\n", c.pairs[s].f, c.pairs[s].g, coset.join(" ")));
        }
        artifacts.push(("code.txt".into(), text));
    }
    let rates: Map<String, Value> = a
        .message_labels()
        .iter()
        .zip(code.shape.dims.iter().zip(code.shape.rates()))
        .map(|(l, (d, r))| {
            (
                l.clone(),
                json!({"message_rows": d.message_rows, "codeword_rows": d.codeword_rows, "message": r.message, "codeword": r.codeword}),
            )
        })
        .collect();
    let payload = json!({
        "n": code.shape.n,
        "q": spec.field.order(),
        "seed": spec.run.seed,
        "codes": rates,
        "trials": s.trials,
        "errors": s.errors,
        "encoder_errors": s.encoder_errors,
        "degenerate_decodes": s.degenerate_decodes,
        "p_hat": s.p_hat,
        "std_error": s.std_error,
        "ci_low": s.ci_low,
        "ci_high": s.ci_high,
    });
    let table = Table {
        header: SIMULATE_COLUMNS.to_vec(),
        rows: vec![vec![
            s.trials.to_string(),
            s.errors.to_string(),
            s.encoder_errors.to_string(),
            s.degenerate_decodes.to_string(),
            fmt12(s.p_hat),
            fmt12(s.std_error),
            fmt12(s.ci_low),
            fmt12(s.ci_high),
        ]],
    };
    let lines = spec.trial_log.then(|| {
        s.records
            .iter()
            .map(|t| {
                let decoders: Vec<String> = t
                    .decoder_success
                    .iter()
                    .zip(&t.decoder_degenerate)
                    .enumerate()
                    .map(|(j, (ok, deg))| {
                        let state = if *deg { "degenerate" } else if *ok { "ok" } else { "wrong" };
                        format!("{}={state}", a.decoder_labels()[j])
                    })
                    .collect();
                let enc = match t.encoder_error {
                    Some(k) => format!("group {}", a.format_encoders(spec.model.sorted.groups[k])),
                    None => "none".into(),
                };
                format!("trial {} error={} encoder_error={enc} decoders {}", t.trial, t.error, decoders.join(" "))
            })
            .collect()
    });
    Ok((payload, table, lines))
}

fn names_json(names: Vec<String>) -> Value {
    Value::Array(names.into_iter().map(Value::String).collect())
}

fn braces(names: &[String]) -> String {
    format!("{{{}}}", names.join(","))
}

fn verify(spec: &ExperimentSpec) -> Result<(Value, Table, Option<String>), Error> {
    let m = &spec.model;
    let a = &m.access;
    let sorted = &m.sorted;
    let mut table = Table { header: VERIFY_COLUMNS.to_vec(), rows: Vec::new() };
    let mut set_row = |name: String, names: &[String]| {
        table.rows.push(vec!["set".into(), name, braces(names), String::new()]);
    };

    let mut held = Map::new();
    for (i, l) in a.encoder_labels().iter().enumerate() {
        let names = message_names(a, a.messages_of_encoder(i)?);
        set_row(format!("S({l})"), &names);
        held.insert(l.clone(), names_json(names));
    }
    let mut access_sets = Map::new();
    for (s, l) in a.message_labels().iter().enumerate() {
        let names = encoder_names(a, a.encoders_of_message(s)?);
        set_row(format!("I({l})"), &names);
        access_sets.insert(l.clone(), names_json(names));
    }
    let mut family = Vec::new();
    for k in 0..sorted.len() {
        let enc = encoder_names(a, sorted.groups[k]);
        let msgs = message_names(a, sorted.group_messages[k]);
        let upper = message_names(a, sorted.upper_closure[k]);
        let lower = message_names(a, sorted.lower_closure[k]);
        set_row(format!("family[{k}]"), &enc);
        set_row(format!("S({})", braces(&enc)), &msgs);
        set_row(format!("upper({})", braces(&enc)), &upper);
        set_row(format!("lower({})", braces(&enc)), &lower);
        family.push(json!({
            "encoders": enc,
            "messages": msgs,
            "upper_closure": upper,
            "lower_closure": lower,
        }));
    }

    let report = validate(sorted, a);
    let mut lemmas = Vec::new();
    for c in &report.checks {
        table.rows.push(vec!["check".into(), c.name.into(), c.witness.clone().unwrap_or_default(), c.passed.to_string()]);
        lemmas.push(json!({"name": c.name, "passed": c.passed, "witness": c.witness}));
    }

    let joint = build_joint_z(&m.source, sorted)?;
    let markov = check_markov(&joint, a, sorted, spec.run.markov_tolerance)?;
    let mut markov_rows = Vec::new();
    for e in &markov.entries {
        let name = format!("group {}", a.format_encoders(e.group));
        table.rows.push(vec!["markov".into(), name.clone(), fmt12(e.max_deviation), e.passed.to_string()]);
        markov_rows.push(json!({
            "group": encoder_names(a, e.group),
            "private": message_names(a, e.private),
            "public": message_names(a, e.public),
            "irrelevant": message_names(a, e.irrelevant),
            "max_deviation": e.max_deviation,
            "passed": e.passed,
        }));
    }

    let mut hashes = Vec::new();
    if let Some(code) = &spec.code {
        for (s, l) in a.message_labels().iter().enumerate() {
            let d = code.shape.dims[s];
            for (map, rows) in [("f", d.codeword_rows), ("g", d.message_rows)] {
                let es = code.ensemble.spec(spec.field, rows, code.shape.n);
                let name = format!("{map}[{l}]");
                match hash_alpha_beta(&es) {
                    Ok(h) => {
                        let p = h.params();
                        table.rows.push(vec![
                            "hash".into(),
                            name.clone(),
                            format!("alpha:{} beta:{}", h.alpha, h.beta),
                            String::new(),
                        ]);
                        hashes.push(json!({
                            "map": name,
                            "rows": rows,
                            "measured": true,
                            "alpha": h.alpha.to_string(),
                            "beta": h.beta.to_string(),
                            "alpha_value": p.alpha,
                            "beta_value": p.beta,
                            "image_size": h.image_size,
                            "ensemble_size": h.ensemble_size,
                        }));
                    }
                    Err(Error::Resource(why)) => {
                        table.rows.push(vec!["hash".into(), name.clone(), format!("skipped: {why}"), String::new()]);
                        hashes.push(json!({"map": name, "rows": rows, "measured": false, "reason": why}));
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }

    let failure = if !report.all_passed() {
        Some(report.render())
    } else if !markov.all_passed() {
        let groups: Vec<String> = markov.failures().map(|e| a.format_encoders(e.group)).collect();
        Some(format!("source fails the Markov condition at groups {}", groups.join(", ")))
    } else {
        None
    };
    let payload = json!({
        "messages_of_encoder": held,
        "encoders_of_message": access_sets,
        "family": family,
        "checks": lemmas,
        "markov": markov_rows,
        "hash": hashes,
        "passed": failure.is_none(),
    });
    Ok((payload, table, failure))
}

fn exponent_rows(
    table: &mut Table,
    section: &str,
    owners: &dyn Fn(usize) -> String,
    spec: &ExperimentSpec,
    exps: &[Exponent],
) -> Value {
    let a = &spec.model.access;
    Value::Array(
        exps.iter()
            .map(|e| {
                let subset = message_names(a, e.subset);
                table.rows.push(vec![
                    section.into(),
                    owners(e.owner),
                    braces(&subset),
                    fmt12(e.entropy),
                    fmt12(e.rate_sum),
                    fmt12(e.value),
                    String::new(),
                ]);
                json!({"owner": owners(e.owner), "subset": subset, "entropy": e.entropy, "rate_sum": e.rate_sum, "value": e.value})
            })
            .collect(),
    )
}

fn tail_rows(table: &mut Table, section: &str, owners: &dyn Fn(usize) -> String, tails: &[TailMass]) -> Value {
    Value::Array(
        tails
            .iter()
            .enumerate()
            .map(|(k, t)| {
                table.rows.push(vec![
                    section.into(),
                    owners(k),
                    String::new(),
                    String::new(),
                    String::new(),
                    fmt12(t.value),
                    t.std_error.map(fmt12).unwrap_or_default(),
                ]);
                json!({"owner": owners(k), "value": t.value, "std_error": t.std_error, "exact": t.std_error.is_none()})
            })
            .collect(),
    )
}

fn bounds(spec: &ExperimentSpec) -> Result<(Value, Table), Error> {
    let code = code_of(spec, "bounds")?;
    let a = &spec.model.access;
    let params: Vec<(HashParams, HashParams)> = match &spec.run.hash_params {
        Some(p) => p.clone(),
        None => code
            .shape
            .dims
            .iter()
            .map(|d| {
                let f = hash_params_for(&code.ensemble.spec(spec.field, d.codeword_rows, code.shape.n))?;
                let g = hash_params_for(&code.ensemble.spec(spec.field, d.message_rows, code.shape.n))?;
                Ok((f, g))
            })
            .collect::<Result<_, Error>>()?,
    };
    let opts = TailOptions { samples: spec.run.tail_samples, seed: spec.run.seed };
    let r = evaluate_error_bound(&spec.model, &code.shape, spec.run.epsilon, &params, &opts)?;

    let mut table = Table { header: BOUNDS_COLUMNS.to_vec(), rows: Vec::new() };
    let sorted = &spec.model.sorted;
    let group = |k: usize| braces(&encoder_names(a, sorted.groups[k]));
    let decoder = |j: usize| a.decoder_labels()[j].clone();
    let enc = exponent_rows(&mut table, "encoder-exponent", &group, spec, &r.encoder_exponents);
    let dec = exponent_rows(&mut table, "decoder-exponent", &decoder, spec, &r.decoder_exponents);
    let enc_tails = tail_rows(&mut table, "encoder-tail", &group, &r.encoder_tails);
    let dec_tails = tail_rows(&mut table, "decoder-tail", &decoder, &r.decoder_tails);
    let t = &r.terms;
    for (name, v) in [
        ("encoder_balance", t.encoder_balance),
        ("encoder_tail", t.encoder_tail),
        ("decoder_collision", t.decoder_collision),
        ("decoder_beta", t.decoder_beta),
        ("decoder_tail", t.decoder_tail),
        ("rhs", r.rhs),
    ] {
        let section = if name == "rhs" { "rhs" } else { "term" };
        table.rows.push(vec![section.into(), name.into(), String::new(), String::new(), String::new(), fmt12(v), String::new()]);
    }
    let params_json: Map<String, Value> = a
        .message_labels()
        .iter()
        .zip(&params)
        .map(|(l, (f, g))| {
            (l.clone(), json!({"f": {"alpha": f.alpha, "beta": f.beta}, "g": {"alpha": g.alpha, "beta": g.beta}}))
        })
        .collect();
    let payload = json!({
        "n": r.n,
        "epsilon": r.epsilon,
        "hash_params": params_json,
        "encoder_exponents": enc,
        "decoder_exponents": dec,
        "encoder_tails": enc_tails,
        "decoder_tails": dec_tails,
        "terms": {
            "encoder_balance": t.encoder_balance,
            "encoder_tail": t.encoder_tail,
            "decoder_collision": t.decoder_collision,
            "decoder_beta": t.decoder_beta,
            "decoder_tail": t.decoder_tail,
        },
        "rhs": r.rhs,
        "all_exponents_positive": r.all_positive,
    });
    Ok((payload, table))
}
