//! Analytic error bounds: exponents, typical-set tails and the assembled
//! averaged error bound, plus exact checks of the balanced-coloring and
//! collision-resistance inequalities on small ensembles.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use crate::codec::CodeShape;
use crate::error::{input, resource, Error, Result};
use crate::hash::{joint_ensemble_alpha_beta, measure, set_params, Ensemble, HashParams};
use crate::idset::IdSet;
use crate::prob::{mixed_index, FiniteDist, LetterModel};
use crate::streams::{stream_rng, Stream};

/// Most compositions enumerated for an exact tail.
pub const MAX_COMPOSITIONS: f64 = (1u64 << 22) as f64;
/// Most map combinations enumerated by the exact lemma checks.
pub const MAX_COMBINATIONS: f64 = (1u64 << 22) as f64;
/// Rounding slack granted to a block before it is declared atypical.
const TYPICAL_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailOptions {
    /// samples for the Monte Carlo fallback
    pub samples: u64,
    pub seed: u64,
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions { samples: 20_000, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Exponent {
    /// group position for encoder exponents, decoder index for decoder ones
    pub owner: usize,
    pub subset: IdSet,
    pub entropy: f64,
    pub rate_sum: f64,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailMass {
    pub value: f64,
    /// `None` when computed exactly
    pub std_error: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct BoundTerms {
    /// sum over groups of the square-root balance terms
    pub encoder_balance: f64,
    /// twice the encoder typical-set tails
    pub encoder_tail: f64,
    /// twice the decoder collision sums
    pub decoder_collision: f64,
    /// twice the sum of decoder beta terms
    pub decoder_beta: f64,
    /// twice the decoder typical-set tails
    pub decoder_tail: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.encoder_balance + self.encoder_tail + self.decoder_collision + self.decoder_beta + self.decoder_tail
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub epsilon: f64,
    pub encoder_exponents: Vec<Exponent>,
    pub decoder_exponents: Vec<Exponent>,
    /// one per group
    pub encoder_tails: Vec<TailMass>,
    /// one per decoder
    pub decoder_tails: Vec<TailMass>,
    pub terms: BoundTerms,
    pub rhs: f64,
    pub all_positive: bool,
}

/// One conditional the typicality test looks at, over a block's letters.
struct Condition {
    /// `-log2 p(target | given)` for every letter of the block alphabet
    cost: Vec<f64>,
    /// per-letter conditional entropy
    entropy: f64,
}

/// Letters with positive mass of a block, with the conditions to test.
struct TypicalityProblem {
    probs: Vec<f64>,
    conditions: Vec<Condition>,
    /// true: a block is atypical when some cost is below `H - eps`;
    /// false: when some cost exceeds `H + eps`
    lower: bool,
}

fn sub_outcome(outcome: &[usize], pos: &[usize]) -> Vec<usize> {
    pos.iter().map(|&p| outcome[p]).collect()
}

/// `block` is a list of factors of `joint`; `conds` pairs target and given
/// positions within that list.
fn typicality_problem(
    joint: &FiniteDist,
    block: &[usize],
    conds: &[(Vec<usize>, Vec<usize>)],
    lower: bool,
) -> Result<TypicalityProblem> {
    let m = joint.marginal(block)?;
    let mut letters = Vec::new();
    for (i, &p) in m.probs().iter().enumerate() {
        if p > 0.0 {
            letters.push(i);
        }
    }
    let mut conditions = Vec::new();
    for (target, given) in conds {
        let mut both: Vec<usize> = given.clone();
        both.extend(target.iter());
        let mb = m.marginal(&both)?;
        let mg = m.marginal(given)?;
        let mut cost = Vec::with_capacity(letters.len());
        let mut entropy = 0.0;
        for &i in &letters {
            let o = m.outcome(i);
            let pb = mb.probs()[mixed_index(mb.cards(), &sub_outcome(&o, &both))];
            let pg = mg.probs()[mixed_index(mg.cards(), &sub_outcome(&o, given))];
            let c = -(pb / pg).log2();
            entropy += m.probs()[i] * c;
            cost.push(c);
        }
        conditions.push(Condition { cost, entropy: entropy.max(0.0) });
    }
    let probs = letters.iter().map(|&i| m.probs()[i]).collect();
    Ok(TypicalityProblem { probs, conditions, lower })
}

impl TypicalityProblem {
    fn atypical(&self, costs: &[f64], n: usize, eps: f64) -> bool {
        self.conditions.iter().zip(costs).any(|(c, &total)| {
            let avg = total / n as f64;
            if self.lower {
                avg < c.entropy - eps - TYPICAL_SLACK
            } else {
                avg > c.entropy + eps + TYPICAL_SLACK
            }
        })
    }

    fn compositions(&self, n: usize) -> f64 {
        // C(n + A - 1, A - 1)
        let a = self.probs.len();
        let mut c = 1.0f64;
        for i in 1..a {
            c = c * (n + i) as f64 / i as f64;
        }
        c
    }

    fn exact_tail(&self, n: usize, eps: f64) -> f64 {
        let mut log_fact = vec![0.0f64; n + 1];
        for i in 1..=n {
            log_fact[i] = log_fact[i - 1] + (i as f64).ln();
        }
        let ln_p: Vec<f64> = self.probs.iter().map(|p| p.ln()).collect();
        // costs[d] holds the running totals before letter d is assigned
        let mut costs = vec![vec![0.0; self.conditions.len()]; self.probs.len() + 1];
        let mut tail = 0.0;
        self.walk(0, n, n, eps, log_fact[n], &log_fact, &ln_p, &mut costs, &mut tail);
        tail.clamp(0.0, 1.0)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        letter: usize,
        remaining: usize,
        n: usize,
        eps: f64,
        log_weight: f64,
        log_fact: &[f64],
        ln_p: &[f64],
        costs: &mut [Vec<f64>],
        tail: &mut f64,
    ) {
        let last = letter + 1 == self.probs.len();
        let range = if last { remaining..=remaining } else { 0..=remaining };
        for c in range {
            let lw = log_weight - log_fact[c] + c as f64 * ln_p[letter];
            let (done, next) = costs.split_at_mut(letter + 1);
            for (k, cond) in self.conditions.iter().enumerate() {
                next[0][k] = done[letter][k] + c as f64 * cond.cost[letter];
            }
            if last {
                if self.atypical(&next[0], n, eps) {
                    *tail += lw.exp();
                }
            } else {
                self.walk(letter + 1, remaining - c, n, eps, lw, log_fact, ln_p, costs, tail);
            }
        }
    }

    fn sampled_tail(&self, n: usize, eps: f64, opts: &TailOptions, index: usize) -> TailMass {
        let mut rng = stream_rng(opts.seed, None, Stream::Tail(index));
        let mut cumulative = Vec::with_capacity(self.probs.len());
        let mut acc = 0.0;
        for p in &self.probs {
            acc += p;
            cumulative.push(acc);
        }
        let mut hits = 0u64;
        let mut costs = vec![0.0; self.conditions.len()];
        for _ in 0..opts.samples {
            costs.iter_mut().for_each(|c| *c = 0.0);
            for _ in 0..n {
                let u: f64 = rng.gen::<f64>() * acc;
                let a = cumulative.partition_point(|&c| c <= u).min(self.probs.len() - 1);
                for (k, cond) in self.conditions.iter().enumerate() {
                    costs[k] += cond.cost[a];
                }
            }
            if self.atypical(&costs, n, eps) {
                hits += 1;
            }
        }
        let m = opts.samples.max(1) as f64;
        let p = hits as f64 / m;
        TailMass { value: p, std_error: Some((p * (1.0 - p) / m).sqrt()) }
    }

    fn tail(&self, n: usize, eps: f64, opts: &TailOptions, index: usize) -> TailMass {
        if self.conditions.is_empty() || self.probs.is_empty() {
            return TailMass { value: 0.0, std_error: None };
        }
        if self.compositions(n) <= MAX_COMPOSITIONS {
            TailMass { value: self.exact_tail(n, eps), std_error: None }
        } else {
            self.sampled_tail(n, eps, opts, index)
        }
    }
}

fn positions(block: &[usize], factors: impl IntoIterator<Item = usize>) -> Vec<usize> {
    factors.into_iter().map(|f| block.iter().position(|&b| b == f).expect("factor in block")).collect()
}

/// Exponents, tails and the assembled averaged error bound for a code of the
/// given shape. `params[s]` holds the hash parameters of `(f_s, g_s)`.
pub fn evaluate_error_bound(
    model: &LetterModel,
    shape: &CodeShape,
    epsilon: f64,
    params: &[(HashParams, HashParams)],
    opts: &TailOptions,
) -> Result<BoundReport> {
    let ns = model.num_messages();
    if params.len() != ns {
        return input(format!("hash parameters given for {} of {ns} messages", params.len()));
    }
    if shape.dims.len() != ns {
        return input("code shape does not match the message count");
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return input("epsilon must be positive");
    }
    let n = shape.n;
    let rates = shape.rates();
    let table = model.entropy_table()?;
    let joint = model.letter_joint()?;
    let sorted = &model.sorted;
    let f_params = |set: IdSet| set_params(&set.iter().map(|s| params[s].0).collect::<Vec<_>>());
    let fg_params = |set: IdSet| {
        set_params(&set.iter().map(|s| joint_ensemble_alpha_beta(params[s].0, params[s].1)).collect::<Vec<_>>())
    };

    let mut encoder_exponents = Vec::new();
    for t in &table.encoder {
        let rate_sum: f64 = t.subset.iter().map(|s| rates[s].codeword + rates[s].message).sum();
        encoder_exponents.push(Exponent {
            owner: t.owner,
            subset: t.subset,
            entropy: t.bits,
            rate_sum,
            value: t.bits - rate_sum - epsilon,
        });
    }
    let mut decoder_exponents = Vec::new();
    for t in &table.decoder {
        let rate_sum: f64 = t.subset.iter().map(|s| rates[s].codeword).sum();
        decoder_exponents.push(Exponent {
            owner: t.owner,
            subset: t.subset,
            entropy: t.bits,
            rate_sum,
            value: rate_sum - t.bits - epsilon,
        });
    }

    let mut problems = Vec::new();
    for k in 0..sorted.len() {
        let group = sorted.group_messages[k];
        let upper = sorted.upper_closure[k];
        let block: Vec<usize> = upper.union(group).iter().map(|s| model.z_factor(s)).collect();
        let given = positions(&block, upper.iter().map(|s| model.z_factor(s)));
        let conds: Vec<_> = group
            .nonempty_subsets()
            .map(|sub| (positions(&block, sub.iter().map(|s| model.z_factor(s))), given.clone()))
            .collect();
        problems.push(typicality_problem(&joint, &block, &conds, true)?);
    }
    for j in 0..model.access.num_decoders() {
        let d = model.access.demand(j)?;
        let mut block: Vec<usize> = d.iter().map(|s| model.z_factor(s)).collect();
        block.push(model.y_factor(j));
        let conds: Vec<_> = d
            .nonempty_subsets()
            .map(|sub| {
                let target = positions(&block, sub.iter().map(|s| model.z_factor(s)));
                let mut given = positions(&block, d.difference(sub).iter().map(|s| model.z_factor(s)));
                given.push(block.len() - 1);
                (target, given)
            })
            .collect();
        problems.push(typicality_problem(&joint, &block, &conds, false)?);
    }
    let tails: Vec<TailMass> =
        problems.par_iter().enumerate().map(|(i, p)| p.tail(n, epsilon, opts, i)).collect();
    let (encoder_tails, decoder_tails) = {
        let mut t = tails;
        let d = t.split_off(sorted.len());
        (t, d)
    };

    let mut terms = BoundTerms::default();
    for k in 0..sorted.len() {
        let group = sorted.group_messages[k];
        let mut inner = fg_params(group).alpha - 1.0;
        for e in encoder_exponents.iter().filter(|e| e.owner == k) {
            inner += fg_params(group.difference(e.subset)).alpha
                * (fg_params(e.subset).beta + 1.0)
                * (-(n as f64) * e.value).exp2();
        }
        terms.encoder_balance += inner.max(0.0).sqrt();
        terms.encoder_tail += 2.0 * encoder_tails[k].value;
    }
    for j in 0..model.access.num_decoders() {
        let d = model.access.demand(j)?;
        for e in decoder_exponents.iter().filter(|e| e.owner == j) {
            terms.decoder_collision += 2.0
                * f_params(e.subset).alpha
                * (f_params(d.difference(e.subset)).beta + 1.0)
                * (-(n as f64) * e.value).exp2();
        }
        terms.decoder_beta += 2.0 * f_params(d).beta;
        terms.decoder_tail += 2.0 * decoder_tails[j].value;
    }
    let all_positive =
        encoder_exponents.iter().chain(&decoder_exponents).all(|e| e.value > 0.0);
    if encoder_exponents.iter().chain(&decoder_exponents).any(|e| !e.value.is_finite()) {
        return Err(Error::Invariant("non-finite exponent".into()));
    }
    Ok(BoundReport {
        n,
        epsilon,
        encoder_exponents,
        decoder_exponents,
        encoder_tails,
        decoder_tails,
        rhs: terms.total(),
        terms,
        all_positive,
    })
}

/// Left and right sides of an inequality checked by enumeration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaBound {
    pub lhs: f64,
    pub rhs: f64,
}

/// A point of the product space: one block per message.
pub type ProductPoint = Vec<Vec<u16>>;

struct EnsembleFamily<'a> {
    ensembles: &'a [Ensemble],
    params: Vec<HashParams>,
    images: Vec<f64>,
    total: usize,
}

impl<'a> EnsembleFamily<'a> {
    fn new(ensembles: &'a [Ensemble]) -> Result<Self> {
        if ensembles.is_empty() {
            return input("at least one ensemble is required");
        }
        let total = ensembles.iter().map(|e| e.len() as f64).product::<f64>();
        if total > MAX_COMBINATIONS {
            return resource(format!("{total} map combinations exceed the enumeration budget"));
        }
        let mut params = Vec::new();
        let mut images = Vec::new();
        for e in ensembles {
            let m = measure(e)?;
            params.push(m.params());
            images.push(m.image_size as f64);
        }
        Ok(EnsembleFamily { ensembles, params, images, total: total as usize })
    }

    fn set(&self, set: IdSet) -> HashParams {
        set_params(&set.iter().map(|s| self.params[s]).collect::<Vec<_>>())
    }

    fn image_product(&self, set: IdSet) -> f64 {
        set.iter().map(|s| self.images[s]).product()
    }

    fn check_point(&self, z: &ProductPoint) -> Result<()> {
        if z.len() != self.ensembles.len() {
            return input("point must have one block per ensemble");
        }
        for (b, e) in z.iter().zip(self.ensembles) {
            if b.len() != e.cols || b.iter().any(|&x| x >= e.field.order()) {
                return input("point block does not match its ensemble");
            }
        }
        Ok(())
    }

    /// Map index of every message for combination `idx`.
    fn combination(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.ensembles.len()];
        for (s, e) in self.ensembles.iter().enumerate().rev() {
            out[s] = idx % e.len();
            idx /= e.len();
        }
        out
    }

    fn hash(&self, combo: &[usize], z: &ProductPoint) -> Vec<u16> {
        let mut out = Vec::new();
        for (s, b) in z.iter().enumerate() {
            out.extend(self.ensembles[s].maps[combo[s]].apply(b).expect("checked shape"));
        }
        out
    }

    fn full(&self) -> IdSet {
        IdSet::full(self.ensembles.len())
    }
}

fn project(z: &ProductPoint, set: IdSet) -> Vec<&[u16]> {
    set.iter().map(|s| z[s].as_slice()).collect()
}

fn check_distinct(points: &[&ProductPoint]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for p in points {
        if !seen.insert(*p) {
            return input("set contains a repeated point");
        }
    }
    Ok(())
}

/// Exact expectation of `sum_c |Q(T ∩ C(c))/Q(T) - 1/prod |Im|||` over
/// independent enumerated ensembles, together with its balanced-coloring
/// bound. `weighted` lists the points of `T` with their weights.
pub fn mbcp_lhs_exact(ensembles: &[Ensemble], weighted: &[(ProductPoint, f64)]) -> Result<LemmaBound> {
    let fam = EnsembleFamily::new(ensembles)?;
    for (z, w) in weighted {
        fam.check_point(z)?;
        if !(*w >= 0.0 && w.is_finite()) {
            return input("weights must be nonnegative");
        }
    }
    check_distinct(&weighted.iter().map(|(z, _)| z).collect::<Vec<_>>())?;
    let qt: f64 = weighted.iter().map(|(_, w)| w).sum();
    if qt <= 0.0 {
        return input("the weighted set must have positive total weight");
    }
    let full = fam.full();
    let cells = fam.image_product(full);
    let uniform = 1.0 / cells;

    let lhs = (0..fam.total)
        .into_par_iter()
        .map(|idx| {
            let combo = fam.combination(idx);
            let mut buckets: HashMap<Vec<u16>, f64> = HashMap::new();
            for (z, w) in weighted {
                *buckets.entry(fam.hash(&combo, z)).or_insert(0.0) += w;
            }
            let hit: f64 = buckets.values().map(|w| (w / qt - uniform).abs()).sum();
            hit + (cells - buckets.len() as f64) * uniform
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum::<f64>()
        / fam.total as f64;

    let beta_all = fam.set(full).beta;
    let mut inner = fam.set(full).alpha - 1.0;
    for sub in full.nonempty_subsets() {
        let q_bar = if sub == full {
            weighted.iter().map(|(_, w)| *w).fold(0.0, f64::max)
        } else {
            let mut sums: HashMap<Vec<&[u16]>, f64> = HashMap::new();
            for (z, w) in weighted {
                *sums.entry(project(z, sub)).or_insert(0.0) += w;
            }
            sums.values().copied().fold(0.0, f64::max)
        };
        inner += fam.set(full.difference(sub)).alpha * (beta_all + 1.0) * fam.image_product(sub) * q_bar / qt;
    }
    let rhs = inner.max(0.0).sqrt();
    finish(lhs, rhs, "balanced-coloring")
}

/// Exact probability that some point of `T` other than `z` shares the hash
/// of `z`, together with its collision-resistance bound.
pub fn mcrp_lhs_exact(ensembles: &[Ensemble], t: &[ProductPoint], z: &ProductPoint) -> Result<LemmaBound> {
    let fam = EnsembleFamily::new(ensembles)?;
    fam.check_point(z)?;
    for p in t {
        fam.check_point(p)?;
    }
    check_distinct(&t.iter().collect::<Vec<_>>())?;
    let others: Vec<&ProductPoint> = t.iter().filter(|p| *p != z).collect();
    let hits = (0..fam.total)
        .into_par_iter()
        .filter(|&idx| {
            let combo = fam.combination(idx);
            let hz = fam.hash(&combo, z);
            others.iter().any(|p| fam.hash(&combo, p) == hz)
        })
        .count();
    let lhs = hits as f64 / fam.total as f64;

    let full = fam.full();
    let mut rhs = fam.set(full).beta;
    for sub in full.nonempty_subsets() {
        let o_bar = if sub == full {
            t.len() as f64
        } else {
            let mut counts: HashMap<Vec<&[u16]>, usize> = HashMap::new();
            for p in t {
                *counts.entry(project(p, full.difference(sub))).or_insert(0) += 1;
            }
            counts.values().copied().max().unwrap_or(0) as f64
        };
        rhs += fam.set(sub).alpha * (fam.set(full.difference(sub)).beta + 1.0) * o_bar / fam.image_product(sub);
    }
    finish(lhs, rhs, "collision-resistance")
}

fn finish(lhs: f64, rhs: f64, name: &str) -> Result<LemmaBound> {
    if lhs > rhs + 1e-12 {
        return Err(Error::Invariant(format!("{name} inequality violated: {lhs} > {rhs}")));
    }
    Ok(LemmaBound { lhs, rhs })
}

/// `|prod theta - 1|` and `sum_k |theta_k - 1| prod_{k' > k} theta_k'`.
pub fn diff_prod_bound(thetas: &[f64]) -> Result<LemmaBound> {
    if thetas.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return input("values must be positive");
    }
    let lhs = (thetas.iter().product::<f64>() - 1.0).abs();
    let mut rhs = 0.0;
    let mut tail = 1.0;
    for t in thetas.iter().rev() {
        rhs += (t - 1.0).abs() * tail;
        tail *= t;
    }
    Ok(LemmaBound { lhs, rhs })
}
