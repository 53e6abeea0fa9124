//! Linear inequality systems over message rates and auxiliary bin rates:
//! construction from entropies, LP feasibility and Fourier–Motzkin projection.

use std::fmt;

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::access::{AccessStructure, SortedFamily};
use crate::error::{input, Error, Result};
use crate::prob::EntropyTable;

/// Margin used to turn strict inequalities into closed ones.
pub const STRICT_MARGIN: f64 = 1e-9;
/// Slack allowed on non-strict rows when checking a certificate.
pub const CHECK_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Gt,
}

impl Relation {
    pub fn is_strict(self) -> bool {
        matches!(self, Relation::Lt | Relation::Gt)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    /// message rate of message `s`
    Rate(usize),
    /// auxiliary codeword-side rate of message `s`
    Aux(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Inequality {
    pub label: String,
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub bound: f64,
}

impl Inequality {
    pub fn lhs(&self, point: &[f64]) -> f64 {
        self.coeffs.iter().zip(point).map(|(a, x)| a * x).sum()
    }

    /// Signed distance to violation: positive when satisfied.
    pub fn slack(&self, point: &[f64]) -> f64 {
        let l = self.lhs(point);
        match self.relation {
            Relation::Le | Relation::Lt => self.bound - l,
            Relation::Ge | Relation::Gt => l - self.bound,
        }
    }

    /// Exact floating-point evaluation of the row.
    pub fn holds(&self, point: &[f64]) -> bool {
        let s = self.slack(point);
        if self.relation.is_strict() {
            s > 0.0
        } else {
            s >= 0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct LinearSystem {
    pub variables: Vec<Variable>,
    pub rows: Vec<Inequality>,
}

impl LinearSystem {
    pub fn new(variables: Vec<Variable>) -> Self {
        LinearSystem { variables, rows: Vec::new() }
    }

    pub fn push(&mut self, label: impl Into<String>, coeffs: Vec<f64>, relation: Relation, bound: f64) -> Result<()> {
        if coeffs.len() != self.variables.len() {
            return input(format!("row has {} coefficients for {} variables", coeffs.len(), self.variables.len()));
        }
        if !bound.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return input("row entries must be finite");
        }
        self.rows.push(Inequality { label: label.into(), coeffs, relation, bound });
        Ok(())
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn is_satisfied(&self, point: &[f64]) -> bool {
        self.rows.iter().all(|r| r.holds(point))
    }

    /// Adds `v >= 0` for every auxiliary variable.
    pub fn with_nonnegative_aux(mut self) -> Self {
        for (i, v) in self.variables.clone().iter().enumerate() {
            if matches!(v.kind, VarKind::Aux(_)) {
                let mut c = vec![0.0; self.variables.len()];
                c[i] = 1.0;
                self.rows.push(Inequality { label: format!("{}-nonnegative", v.name), coeffs: c, relation: Relation::Ge, bound: 0.0 });
            }
        }
        self
    }
}

impl fmt::Display for LinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let terms: Vec<String> = r
                .coeffs
                .iter()
                .zip(&self.variables)
                .filter(|(c, _)| **c != 0.0)
                .map(|(c, v)| if *c == 1.0 { v.name.clone() } else { format!("{c}*{}", v.name) })
                .collect();
            let lhs = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
            writeln!(f, "{}: {lhs} {} {}", r.label, r.relation.symbol(), r.bound)?;
        }
        Ok(())
    }
}

/// Message rates, and optionally auxiliary rates, one per message.
#[derive(Clone, Debug, PartialEq)]
pub struct RatePoint {
    pub rates: Vec<f64>,
    pub aux: Option<Vec<f64>>,
}

impl RatePoint {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return input("rates must be nonnegative numbers");
        }
        Ok(RatePoint { rates, aux: None })
    }
}

/// Rows, in order: `R_s >= 0` per message, one rate-sum row per group and
/// nonempty subset of its messages, one auxiliary-sum row per decoder and
/// nonempty subset of its demand. `strict` selects `<`/`>` over `<=`/`>=`.
/// Variables are `R_<label>` for every message followed by `r_<label>`.
pub fn build_constraints(
    a: &AccessStructure,
    sorted: &SortedFamily,
    entropies: &EntropyTable,
    strict: bool,
) -> Result<LinearSystem> {
    let ns = a.num_messages();
    let mut vars: Vec<Variable> = a
        .message_labels()
        .iter()
        .enumerate()
        .map(|(s, l)| Variable { name: format!("R_{l}"), kind: VarKind::Rate(s) })
        .collect();
    vars.extend(
        a.message_labels().iter().enumerate().map(|(s, l)| Variable { name: format!("r_{l}"), kind: VarKind::Aux(s) }),
    );
    let mut sys = LinearSystem::new(vars);
    let (le, ge) = if strict { (Relation::Lt, Relation::Gt) } else { (Relation::Le, Relation::Ge) };
    for s in 0..ns {
        let mut c = vec![0.0; 2 * ns];
        c[s] = 1.0;
        sys.push(format!("rate-nonnegative[{}]", a.message_labels()[s]), c, Relation::Ge, 0.0)?;
    }
    for k in 0..sorted.len() {
        for sub in sorted.group_messages[k].nonempty_subsets() {
            let h = entropies.encoder_term(k, sub).ok_or_else(|| {
                Error::Input(format!(
                    "missing entropy of {} given the upper closure of group {}",
                    a.format_messages(sub),
                    a.format_encoders(sorted.groups[k])
                ))
            })?;
            let mut c = vec![0.0; 2 * ns];
            for s in sub.iter() {
                c[s] = 1.0;
                c[ns + s] = 1.0;
            }
            sys.push(
                format!("encoder[group={},subset={}]", a.format_encoders(sorted.groups[k]), a.format_messages(sub)),
                c,
                le,
                h,
            )?;
        }
    }
    for j in 0..a.num_decoders() {
        for sub in a.demand(j)?.nonempty_subsets() {
            let h = entropies.decoder_term(j, sub).ok_or_else(|| {
                Error::Input(format!(
                    "missing entropy of {} at decoder {}",
                    a.format_messages(sub),
                    a.decoder_labels()[j]
                ))
            })?;
            let mut c = vec![0.0; 2 * ns];
            for s in sub.iter() {
                c[ns + s] = 1.0;
            }
            sys.push(format!("decoder[{},subset={}]", a.decoder_labels()[j], a.format_messages(sub)), c, ge, h)?;
        }
    }
    Ok(sys)
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    /// auxiliary rates in message order, and the smallest slack on a strict row
    Feasible { aux: Vec<f64>, margin: f64 },
    Infeasible,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Feasible { .. })
    }
}

/// Fixes every rate variable from `fixed` and searches nonnegative auxiliary
/// rates satisfying all rows. Strict rows must hold with slack at least
/// [`STRICT_MARGIN`]. A feasible answer is verified by substitution.
pub fn lp_feasible(sys: &LinearSystem, fixed: &RatePoint) -> Result<LpOutcome> {
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let mut lp_vars = vec![None; sys.variables.len()];
    let mut values = vec![0.0; sys.variables.len()];
    let mut aux_order = Vec::new();
    for (i, v) in sys.variables.iter().enumerate() {
        match v.kind {
            VarKind::Rate(s) => {
                values[i] = *fixed
                    .rates
                    .get(s)
                    .ok_or_else(|| Error::Input(format!("rate point lacks a value for {}", v.name)))?;
            }
            VarKind::Aux(s) => {
                lp_vars[i] = Some(problem.add_var(0.0, (0.0, f64::INFINITY)));
                aux_order.push((s, i));
            }
        }
    }
    let has_strict = sys.rows.iter().any(|r| r.relation.is_strict());
    // common slack on strict rows, maximized
    let t = problem.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    for r in &sys.rows {
        let mut expr: Vec<(minilp::Variable, f64)> = Vec::new();
        let mut constant = 0.0;
        for (i, &c) in r.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            match lp_vars[i] {
                Some(v) => expr.push((v, c)),
                None => constant += c * values[i],
            }
        }
        let rhs = r.bound - constant;
        let (op, t_coef) = match r.relation {
            Relation::Le | Relation::Lt => (ComparisonOp::Le, 1.0),
            Relation::Ge | Relation::Gt => (ComparisonOp::Ge, -1.0),
        };
        if r.relation.is_strict() {
            expr.push((t, t_coef));
        } else if expr.is_empty() {
            let ok = match op {
                ComparisonOp::Le => 0.0 <= rhs + CHECK_TOLERANCE,
                _ => 0.0 >= rhs - CHECK_TOLERANCE,
            };
            if !ok {
                return Ok(LpOutcome::Infeasible);
            }
            continue;
        }
        problem.add_constraint(expr.as_slice(), op, rhs);
    }
    let sol = match problem.solve() {
        Ok(s) => s,
        Err(minilp::Error::Infeasible) => return Ok(LpOutcome::Infeasible),
        Err(minilp::Error::Unbounded) => return Err(Error::Invariant("bounded slack LP reported unbounded".into())),
    };
    let margin = sol[t];
    if has_strict && margin < STRICT_MARGIN {
        return Ok(LpOutcome::Infeasible);
    }
    for (i, v) in lp_vars.iter().enumerate() {
        if let Some(v) = v {
            values[i] = sol[*v];
        }
    }
    for r in &sys.rows {
        let s = r.slack(&values);
        let need = if r.relation.is_strict() { STRICT_MARGIN / 2.0 } else { -CHECK_TOLERANCE };
        if s < need {
            return Err(Error::Invariant(format!("LP certificate violates '{}' with slack {s}", r.label)));
        }
    }
    let mut aux = vec![0.0; fixed.rates.len()];
    for (s, i) in aux_order {
        if s < aux.len() {
            aux[s] = values[i];
        }
    }
    Ok(LpOutcome::Feasible { aux, margin: if has_strict { margin } else { f64::INFINITY } })
}

/// Row in the form `a . x (< | <=) b`.
#[derive(Clone, Debug)]
struct Upper {
    label: String,
    coeffs: Vec<f64>,
    bound: f64,
    strict: bool,
}

fn to_upper(r: &Inequality) -> Upper {
    match r.relation {
        Relation::Le | Relation::Lt => {
            Upper { label: r.label.clone(), coeffs: r.coeffs.clone(), bound: r.bound, strict: r.relation.is_strict() }
        }
        Relation::Ge | Relation::Gt => Upper {
            label: r.label.clone(),
            coeffs: r.coeffs.iter().map(|c| -c).collect(),
            bound: -r.bound,
            strict: r.relation.is_strict(),
        },
    }
}

const ZERO: f64 = 1e-12;
const MAX_LABEL: usize = 160;

fn combine_labels(a: &str, b: &str) -> String {
    let l = format!("({a})+({b})");
    if l.len() > MAX_LABEL {
        "combined".to_string()
    } else {
        l
    }
}

/// Drops rows that always hold and rows dominated by a parallel, tighter row.
fn prune(rows: Vec<Upper>) -> Vec<Upper> {
    let mut kept: Vec<(Upper, Vec<f64>, f64)> = Vec::new();
    for mut r in rows {
        for c in r.coeffs.iter_mut() {
            if c.abs() < ZERO {
                *c = 0.0;
            }
        }
        let scale = r.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            let always = if r.strict { r.bound > 0.0 } else { r.bound >= -ZERO };
            if always {
                continue;
            }
            // contradiction: keep one copy
            if kept.iter().any(|(k, _, _)| k.coeffs.iter().all(|c| *c == 0.0)) {
                continue;
            }
            kept.push((r, Vec::new(), f64::NEG_INFINITY));
            continue;
        }
        let dir: Vec<f64> = r.coeffs.iter().map(|c| c / scale).collect();
        let b = r.bound / scale;
        let mut dominated = false;
        let mut i = 0;
        while i < kept.len() {
            let (k, kdir, kb) = &kept[i];
            let parallel = kdir.len() == dir.len() && kdir.iter().zip(&dir).all(|(x, y)| (x - y).abs() <= ZERO);
            if parallel {
                let k_tighter = *kb < b - ZERO || ((*kb - b).abs() <= ZERO && (k.strict || !r.strict));
                if k_tighter {
                    dominated = true;
                    break;
                }
                kept.remove(i);
                continue;
            }
            i += 1;
        }
        if !dominated {
            kept.push((r, dir, b));
        }
    }
    kept.into_iter().map(|(r, _, _)| r).collect()
}

/// Eliminates the listed variables one at a time by pairing every row with a
/// positive coefficient against every row with a negative one. A pair with a
/// strict member yields a strict row. Returned rows use `<=`/`<` over the
/// remaining variables, in their original order.
pub fn fourier_motzkin_project(sys: &LinearSystem, eliminate: &[usize]) -> Result<LinearSystem> {
    if let Some(&v) = eliminate.iter().find(|&&v| v >= sys.variables.len()) {
        return input(format!("variable index {v} out of range"));
    }
    let mut rows: Vec<Upper> = prune(sys.rows.iter().map(to_upper).collect());
    for &v in eliminate {
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            if r.coeffs[v] > ZERO {
                pos.push(r);
            } else if r.coeffs[v] < -ZERO {
                neg.push(r);
            } else {
                let mut r = r;
                r.coeffs[v] = 0.0;
                rest.push(r);
            }
        }
        for p in &pos {
            for n in &neg {
                let (ap, an) = (p.coeffs[v], -n.coeffs[v]);
                let mut coeffs: Vec<f64> = p.coeffs.iter().zip(&n.coeffs).map(|(x, y)| x / ap + y / an).collect();
                coeffs[v] = 0.0;
                rest.push(Upper {
                    label: combine_labels(&p.label, &n.label),
                    coeffs,
                    bound: p.bound / ap + n.bound / an,
                    strict: p.strict || n.strict,
                });
            }
        }
        rows = prune(rest);
    }
    let keep: Vec<usize> = (0..sys.variables.len()).filter(|i| !eliminate.contains(i)).collect();
    let mut out = LinearSystem::new(keep.iter().map(|&i| sys.variables[i].clone()).collect());
    for r in rows {
        let coeffs = keep.iter().map(|&i| r.coeffs[i]).collect();
        let rel = if r.strict { Relation::Lt } else { Relation::Le };
        out.push(r.label, coeffs, rel, r.bound)?;
    }
    Ok(out)
}

/// Indices of every auxiliary variable.
pub fn aux_indices(sys: &LinearSystem) -> Vec<usize> {
    sys.variables.iter().enumerate().filter(|(_, v)| matches!(v.kind, VarKind::Aux(_))).map(|(i, _)| i).collect()
}
