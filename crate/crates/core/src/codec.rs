//! Encoders and decoders built from constrained random number generators,
//! and Monte Carlo estimation of the resulting error probability.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{input, resource, Error, Result};
use crate::field::{AffineCoset, Field, FunctionPair};
use crate::hash::{EnsembleKind, HashEnsembleSpec, SparseSampler};
use crate::idset::IdSet;
use crate::prob::{mixed_outcome, ConditionalKernel, FiniteDist, LetterModel};
use crate::streams::{stream_rng, Stream};

/// Largest number of candidates a generator may enumerate.
pub const MAX_CANDIDATES: u64 = 1 << 22;

/// Row counts of the two maps of one message.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MessageDims {
    /// rows of the codeword-side map `f`
    pub codeword_rows: usize,
    /// rows of the message-side map `g`
    pub message_rows: usize,
}

/// Codeword-side and message-side rates of one message, in bits per letter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatePair {
    pub codeword: f64,
    pub message: f64,
}

/// Block length, field and per-message dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeShape {
    pub n: usize,
    pub field: Field,
    pub dims: Vec<MessageDims>,
}

impl CodeShape {
    pub fn new(n: usize, field: Field, dims: Vec<MessageDims>) -> Result<Self> {
        if n == 0 {
            return input("block length must be at least 1");
        }
        for (s, d) in dims.iter().enumerate() {
            if d.codeword_rows > n || d.message_rows > n {
                return input(format!(
                    "message {s}: map dimensions ({}, {}) exceed block length {n}",
                    d.codeword_rows, d.message_rows
                ));
            }
        }
        Ok(CodeShape { n, field, dims })
    }

    /// Rows are `round(rate * n / log2 q)`.
    pub fn from_rates(n: usize, field: Field, rates: &[RatePair]) -> Result<Self> {
        let rows = |rate: f64| -> Result<usize> {
            if !(rate >= 0.0 && rate.is_finite()) {
                return input(format!("rate {rate} must be a nonnegative number"));
            }
            Ok((rate * n as f64 / field.bits()).round() as usize)
        };
        let dims = rates
            .iter()
            .map(|r| Ok(MessageDims { codeword_rows: rows(r.codeword)?, message_rows: rows(r.message)? }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, field, dims)
    }

    /// Realized rates of each message.
    pub fn rates(&self) -> Vec<RatePair> {
        let unit = self.field.bits() / self.n as f64;
        self.dims
            .iter()
            .map(|d| RatePair { codeword: d.codeword_rows as f64 * unit, message: d.message_rows as f64 * unit })
            .collect()
    }
}

/// Which ensemble the maps are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnsembleChoice {
    pub kind: EnsembleKind,
    pub column_degree: Option<usize>,
    pub sampler: SparseSampler,
}

impl Default for EnsembleChoice {
    fn default() -> Self {
        EnsembleChoice { kind: EnsembleKind::Uniform, column_degree: None, sampler: SparseSampler::ExactDistinct }
    }
}

impl EnsembleChoice {
    pub fn spec(&self, field: Field, rows: usize, cols: usize) -> HashEnsembleSpec {
        HashEnsembleSpec {
            kind: self.kind,
            field,
            rows,
            cols,
            column_degree: self.column_degree,
            sampler: self.sampler,
            seed: 0,
        }
    }
}

/// Maps and coset values of every message.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeConfig {
    pub shape: CodeShape,
    pub pairs: Vec<FunctionPair>,
    pub cosets: Vec<Vec<u16>>,
}

impl CodeConfig {
    pub fn new(shape: CodeShape, pairs: Vec<FunctionPair>, cosets: Vec<Vec<u16>>) -> Result<Self> {
        if pairs.len() != shape.dims.len() || cosets.len() != shape.dims.len() {
            return input("one map pair and one coset value per message are required");
        }
        for (s, (p, d)) in pairs.iter().zip(&shape.dims).enumerate() {
            if p.block_length() != shape.n
                || p.f.rows() != d.codeword_rows
                || p.g.rows() != d.message_rows
                || p.f.field() != shape.field
            {
                return input(format!("message {s}: maps do not match the code shape"));
            }
            if cosets[s].len() != d.codeword_rows || cosets[s].iter().any(|&x| x >= shape.field.order()) {
                return input(format!("message {s}: coset value must be a vector of length {} over the field", d.codeword_rows));
            }
        }
        Ok(CodeConfig { shape, pairs, cosets })
    }

    pub fn sample_maps<R: Rng + ?Sized>(shape: &CodeShape, ensemble: &EnsembleChoice, rng: &mut R) -> Result<Vec<FunctionPair>> {
        shape
            .dims
            .iter()
            .map(|d| {
                let f = ensemble.spec(shape.field, d.codeword_rows, shape.n).sample(rng)?;
                let g = ensemble.spec(shape.field, d.message_rows, shape.n).sample(rng)?;
                FunctionPair::new(f, g)
            })
            .collect()
    }

    pub fn sample_cosets<R: Rng + ?Sized>(shape: &CodeShape, rng: &mut R) -> Vec<Vec<u16>> {
        let q = shape.field.order();
        shape.dims.iter().map(|d| (0..d.codeword_rows).map(|_| rng.gen_range(0..q)).collect()).collect()
    }

    pub fn rates(&self) -> Vec<RatePair> {
        self.shape.rates()
    }
}

/// Law of a group's block restricted to its joint coset.
#[derive(Clone, Debug)]
pub struct GroupDist {
    /// message ids of the group, increasing
    pub messages: Vec<usize>,
    /// coset members of each message
    pub candidates: Vec<Vec<Vec<u16>>>,
    /// probability of each tuple, mixed radix over `candidates`, first message most significant
    pub probs: Vec<f64>,
}

impl GroupDist {
    pub fn tuple(&self, idx: usize) -> Vec<Vec<u16>> {
        let sizes: Vec<usize> = self.candidates.iter().map(|c| c.len()).collect();
        mixed_outcome(&sizes, idx)
            .into_iter()
            .zip(&self.candidates)
            .map(|(i, c)| c[i].clone())
            .collect()
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.probs, rng)
    }
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Outcome of a constrained generator.
#[derive(Clone, Debug)]
pub enum CrngDraw {
    Ready(GroupDist),
    /// the restricted law has no mass
    ZeroMass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeMode {
    /// sample from the restricted posterior
    Stochastic,
    /// most likely member, ties to the lexicographically smallest
    Map,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DecoderOutcome {
    Decoded {
        /// reproduced blocks of the demanded messages, increasing ids
        blocks: Vec<Vec<u16>>,
        /// `g_s` applied to each reproduced block
        messages: Vec<Vec<u16>>,
    },
    /// the restricted posterior has no mass
    Degenerate,
}

/// Per-trial encoder output.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderRealization {
    /// block of every message; empty when not generated
    pub z: Vec<Vec<u16>>,
    /// the blocks each encoder holds, by message id (`None` for messages it cannot read)
    pub views: Vec<Vec<Option<Vec<u16>>>>,
    /// channel input of every encoder, as letter indices
    pub x: Vec<Vec<usize>>,
    /// first group (sorted position) whose restricted law had no mass
    pub error: Option<usize>,
}

/// Record of one simulated trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub messages: Vec<Vec<u16>>,
    pub encoder_error: Option<usize>,
    /// `(decoder, message, reproduction)` for every demanded pair that was decoded
    pub reproductions: Vec<(usize, usize, Vec<u16>)>,
    pub decoder_success: Vec<bool>,
    pub decoder_degenerate: Vec<bool>,
    pub error: bool,
}

/// Precomputed letter tables for one model.
#[derive(Clone, Debug)]
pub struct Simulator {
    pub model: LetterModel,
    field: Field,
    /// per group position: log2 of the kernel, `[cond * out + out]`
    group_logs: Vec<Vec<f64>>,
    group_out: Vec<usize>,
    /// per decoder: log2 P(z_D, y_j), `[z_D * |Y_j| + y]`
    decoder_logs: Vec<Vec<f64>>,
}

fn letter_index(blocks: &[&[u16]], t: usize, q: usize) -> usize {
    blocks.iter().fold(0, |acc, b| acc * q + b[t] as usize)
}

impl Simulator {
    pub fn new(model: LetterModel, field: Field) -> Result<Self> {
        let q = field.order() as usize;
        if model.source.alphabets.iter().any(|&a| a != q) {
            return input(format!("every message letter must take values in GF({q})"));
        }
        let aligned = model.source.aligned(&model.sorted)?;
        let group_logs = aligned
            .iter()
            .map(|g| (0..g.kernel.in_size()).flat_map(|i| g.kernel.row(i).iter().map(|p| p.log2()).collect::<Vec<_>>()).collect())
            .collect();
        let group_out = aligned.iter().map(|g| g.kernel.out_size()).collect();
        let joint = model.letter_joint()?;
        let mut decoder_logs = Vec::new();
        for j in 0..model.access.num_decoders() {
            let mut factors: Vec<usize> = model.access.demand(j)?.iter().map(|s| model.z_factor(s)).collect();
            factors.push(model.y_factor(j));
            let m = joint.marginal(&factors)?;
            decoder_logs.push(m.probs().iter().map(|p| p.log2()).collect());
        }
        Ok(Simulator { model, field, group_logs, group_out, decoder_logs })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    fn candidates(coset: Option<AffineCoset>) -> Result<Option<Vec<Vec<u16>>>> {
        match coset {
            None => Ok(None),
            Some(c) => {
                c.checked_size((MAX_CANDIDATES as f64).log2())?;
                Ok(Some(c.into_iter().collect()))
            }
        }
    }

    /// Log weights of every tuple of candidates; `score(t, letter)` is the log
    /// weight of letter `t` whose joint index over the tuple is `letter`.
    fn tuple_logs(&self, lists: &[Vec<Vec<u16>>], n: usize, score: impl Fn(usize, usize) -> f64) -> Result<Vec<f64>> {
        let sizes: Vec<usize> = lists.iter().map(|l| l.len()).collect();
        let total = sizes.iter().try_fold(1u64, |acc, &s| acc.checked_mul(s as u64)).unwrap_or(u64::MAX);
        if total > MAX_CANDIDATES {
            return resource(format!("{total} candidate blocks exceed the budget of {MAX_CANDIDATES}"));
        }
        let q = self.field.order() as usize;
        let mut out = Vec::with_capacity(total as usize);
        for idx in 0..total as usize {
            let pick = mixed_outcome(&sizes, idx);
            let blocks: Vec<&[u16]> = pick.iter().zip(lists).map(|(&i, l)| l[i].as_slice()).collect();
            let mut w = 0.0;
            for t in 0..n {
                w += score(t, letter_index(&blocks, t, q));
                if w == f64::NEG_INFINITY {
                    break;
                }
            }
            out.push(w);
        }
        Ok(out)
    }

    /// Restricted law of group `k` (sorted position) given the blocks already
    /// known, the coset values and the messages.
    pub fn encoder_crng_dist(
        &self,
        k: usize,
        known: &[Option<Vec<u16>>],
        code: &CodeConfig,
        messages: &[Vec<u16>],
    ) -> Result<CrngDraw> {
        let sorted = &self.model.sorted;
        if k >= sorted.len() {
            return input(format!("group position {k} out of range"));
        }
        let q = self.field.order() as usize;
        let n = code.shape.n;
        let cond: Vec<&[u16]> = sorted.upper_closure[k]
            .iter()
            .map(|s| {
                known[s]
                    .as_deref()
                    .ok_or_else(|| Error::Input(format!("block of message {s} is needed before group {k}")))
            })
            .collect::<Result<_>>()?;
        let ids = sorted.group_messages[k].to_vec();
        let mut lists = Vec::with_capacity(ids.len());
        for &s in &ids {
            match Self::candidates(code.pairs[s].joint_coset(&code.cosets[s], &messages[s])?)? {
                Some(l) => lists.push(l),
                None => return Ok(CrngDraw::ZeroMass),
            }
        }
        let cond_idx: Vec<usize> = (0..n).map(|t| letter_index(&cond, t, q)).collect();
        let table = &self.group_logs[k];
        let width = self.group_out[k];
        let logs = self.tuple_logs(&lists, n, |t, o| table[cond_idx[t] * width + o])?;
        Ok(match normalize(&logs) {
            None => CrngDraw::ZeroMass,
            Some(probs) => CrngDraw::Ready(GroupDist { messages: ids, candidates: lists, probs }),
        })
    }

    /// Runs every encoder on its own with the shared group streams, then
    /// draws the channel inputs.
    pub fn generate_encoder_inputs(
        &self,
        code: &CodeConfig,
        messages: &[Vec<u16>],
        seed: u64,
        trial: u64,
    ) -> Result<EncoderRealization> {
        let a = &self.model.access;
        let sorted = &self.model.sorted;
        let ns = a.num_messages();
        let mut views: Vec<Vec<Option<Vec<u16>>>> = vec![vec![None; ns]; a.num_encoders()];
        let mut error = None;
        'enc: for (i, view) in views.iter_mut().enumerate() {
            for k in 0..sorted.len() {
                if !sorted.groups[k].contains(i) {
                    continue;
                }
                match self.encoder_crng_dist(k, view, code, messages)? {
                    CrngDraw::ZeroMass => {
                        error = Some(error.map_or(k, |e: usize| e.min(k)));
                        continue 'enc;
                    }
                    CrngDraw::Ready(dist) => {
                        let mut rng = stream_rng(seed, Some(trial), Stream::Group(k));
                        let pick = dist.tuple(dist.sample_index(&mut rng));
                        for (s, block) in dist.messages.iter().zip(pick) {
                            view[*s] = Some(block);
                        }
                    }
                }
            }
        }
        let mut z = vec![Vec::new(); ns];
        if error.is_none() {
            for s in 0..ns {
                for view in &views {
                    if let Some(b) = &view[s] {
                        if z[s].is_empty() {
                            z[s] = b.clone();
                        } else if z[s] != *b {
                            return Err(Error::Invariant(format!(
                                "encoders disagree on the block of message '{}'",
                                a.message_labels()[s]
                            )));
                        }
                    }
                }
            }
        }
        let mut x = vec![Vec::new(); a.num_encoders()];
        if error.is_none() {
            let q = self.field.order() as usize;
            for (i, xi) in x.iter_mut().enumerate() {
                let held: Vec<&[u16]> = a.messages_of_encoder(i)?.iter().map(|s| z[s].as_slice()).collect();
                let kernel = &self.model.inputs[i];
                let mut rng = stream_rng(seed, Some(trial), Stream::Input(i));
                *xi = (0..code.shape.n).map(|t| sample_index(kernel.row(letter_index(&held, t, q)), &mut rng)).collect();
            }
        }
        Ok(EncoderRealization { z, views, x, error })
    }

    /// Channel outputs of every decoder, as letter indices.
    pub fn transmit(&self, x: &[Vec<usize>], n: usize, seed: u64, trial: u64) -> Vec<Vec<usize>> {
        let ch = &self.model.channel;
        let mut rng = stream_rng(seed, Some(trial), Stream::Channel);
        let mut y = vec![Vec::with_capacity(n); ch.output_alphabets.len()];
        for t in 0..n {
            let xi = ch.input_alphabets.iter().zip(x).fold(0, |acc, (&c, xs)| acc * c + xs[t]);
            let yo = mixed_outcome(&ch.output_alphabets, sample_index(ch.kernel.row(xi), &mut rng));
            for (yj, v) in y.iter_mut().zip(yo) {
                yj.push(v);
            }
        }
        y
    }

    /// Decoder `j`: restrict the posterior of its demanded blocks to the
    /// codeword cosets and pick a member.
    pub fn decoder_crng<R: Rng + ?Sized>(
        &self,
        j: usize,
        y: &[usize],
        code: &CodeConfig,
        mode: DecodeMode,
        rng: &mut R,
    ) -> Result<DecoderOutcome> {
        let demand = self.model.access.demand(j)?;
        let ycard = self.model.channel.output_alphabets[j];
        let mut lists = Vec::new();
        for s in demand.iter() {
            match Self::candidates(code.pairs[s].f.coset(&code.cosets[s])?)? {
                Some(l) => lists.push(l),
                None => return Ok(DecoderOutcome::Degenerate),
            }
        }
        let table = &self.decoder_logs[j];
        let logs = self.tuple_logs(&lists, code.shape.n, |t, z| table[z * ycard + y[t]])?;
        let sizes: Vec<usize> = lists.iter().map(|l| l.len()).collect();
        let tuple = |idx: usize| -> Vec<Vec<u16>> {
            mixed_outcome(&sizes, idx).into_iter().zip(&lists).map(|(i, l)| l[i].clone()).collect()
        };
        let chosen = match mode {
            DecodeMode::Stochastic => match normalize(&logs) {
                None => return Ok(DecoderOutcome::Degenerate),
                Some(p) => tuple(sample_index(&p, rng)),
            },
            DecodeMode::Map => {
                let best = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if best == f64::NEG_INFINITY {
                    return Ok(DecoderOutcome::Degenerate);
                }
                let tol = 1e-9 * best.abs().max(1.0);
                (0..logs.len())
                    .filter(|&i| logs[i] >= best - tol)
                    .map(tuple)
                    .min()
                    .expect("at least one maximizer")
            }
        };
        let messages = demand
            .iter()
            .zip(&chosen)
            .map(|(s, b)| code.pairs[s].g.apply(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(DecoderOutcome::Decoded { blocks: chosen, messages })
    }

    /// One full trial with the given code.
    pub fn run_trial(&self, code: &CodeConfig, mode: DecodeMode, seed: u64, trial: u64) -> Result<TrialOutcome> {
        let a = &self.model.access;
        let q = self.field.order();
        let mut rng = stream_rng(seed, Some(trial), Stream::Messages);
        let messages: Vec<Vec<u16>> =
            code.shape.dims.iter().map(|d| (0..d.message_rows).map(|_| rng.gen_range(0..q)).collect()).collect();
        let enc = self.generate_encoder_inputs(code, &messages, seed, trial)?;
        let nd = a.num_decoders();
        let mut out = TrialOutcome {
            trial,
            messages,
            encoder_error: enc.error,
            reproductions: Vec::new(),
            decoder_success: vec![false; nd],
            decoder_degenerate: vec![false; nd],
            error: true,
        };
        if enc.error.is_some() {
            return Ok(out);
        }
        let y = self.transmit(&enc.x, code.shape.n, seed, trial);
        for j in 0..nd {
            let mut rng = stream_rng(seed, Some(trial), Stream::Decoder(j));
            match self.decoder_crng(j, &y[j], code, mode, &mut rng)? {
                DecoderOutcome::Degenerate => out.decoder_degenerate[j] = true,
                DecoderOutcome::Decoded { messages, .. } => {
                    let mut ok = true;
                    for (s, m) in a.demand(j)?.iter().zip(messages) {
                        ok &= m == out.messages[s];
                        out.reproductions.push((j, s, m));
                    }
                    out.decoder_success[j] = ok;
                }
            }
        }
        out.error = !out.decoder_success.iter().all(|&b| b);
        Ok(out)
    }
}

/// Probabilities from log2 weights, or `None` when every weight is zero.
fn normalize(logs: &[f64]) -> Option<Vec<f64>> {
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return None;
    }
    let w: Vec<f64> = logs.iter().map(|&l| (l - m).exp2()).collect();
    let s: f64 = w.iter().sum();
    Some(w.into_iter().map(|x| x / s).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodePolicy {
    /// one code and one set of coset values for the whole experiment
    PerExperiment,
    /// a fresh code and coset values in every trial
    PerTrial,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CosetPolicy {
    /// uniform, drawn with the code
    Sampled,
    /// supplied values, one vector per message
    Fixed(Vec<Vec<u16>>),
}

/// Everything `simulate_error` needs besides the model.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub shape: CodeShape,
    pub ensemble: EnsembleChoice,
    pub code_policy: CodePolicy,
    pub cosets: CosetPolicy,
    pub mode: DecodeMode,
    pub seed: u64,
    pub trials: u64,
    pub threads: usize,
    pub keep_trials: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationSummary {
    pub trials: u64,
    pub errors: u64,
    pub encoder_errors: u64,
    pub degenerate_decodes: u64,
    pub p_hat: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub records: Vec<TrialOutcome>,
}

/// Wilson score interval at 95%.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = errors as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    // the endpoints are exact at the extremes; the formula leaves rounding dust
    let low = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if errors == trials { 1.0 } else { (centre + half).min(1.0) };
    (low, high)
}

impl ExperimentPlan {
    fn code_for(&self, trial: Option<u64>) -> Result<CodeConfig> {
        let mut rng = stream_rng(self.seed, trial, Stream::Code);
        let pairs = CodeConfig::sample_maps(&self.shape, &self.ensemble, &mut rng)?;
        let cosets = match &self.cosets {
            CosetPolicy::Fixed(c) => c.clone(),
            CosetPolicy::Sampled => {
                let mut rng = stream_rng(self.seed, trial, Stream::Coset);
                CodeConfig::sample_cosets(&self.shape, &mut rng)
            }
        };
        CodeConfig::new(self.shape.clone(), pairs, cosets)
    }

    /// The code shared by all trials under [`CodePolicy::PerExperiment`].
    pub fn experiment_code(&self) -> Result<CodeConfig> {
        self.code_for(None)
    }
}

/// Estimates the error probability: the fraction of trials where an encoder
/// found no mass or some decoder got a demanded message wrong.
pub fn simulate_error(sim: &Simulator, plan: &ExperimentPlan) -> Result<SimulationSummary> {
    if plan.trials == 0 {
        return input("at least one trial is required");
    }
    if plan.shape.dims.len() != sim.model.num_messages() {
        return input("code shape and access structure disagree on the message count");
    }
    let shared = match plan.code_policy {
        CodePolicy::PerExperiment => Some(plan.experiment_code()?),
        CodePolicy::PerTrial => None,
    };
    let run = |t: u64| -> Result<TrialOutcome> {
        match &shared {
            Some(code) => sim.run_trial(code, plan.mode, plan.seed, t),
            None => sim.run_trial(&plan.code_for(Some(t))?, plan.mode, plan.seed, t),
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.threads.max(1))
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker threads: {e}")))?;
    let outcomes: Vec<TrialOutcome> = pool.install(|| (0..plan.trials).into_par_iter().map(run).collect::<Result<Vec<_>>>())?;
    let errors = outcomes.iter().filter(|o| o.error).count() as u64;
    let encoder_errors = outcomes.iter().filter(|o| o.encoder_error.is_some()).count() as u64;
    let degenerate_decodes = outcomes.iter().filter(|o| o.decoder_degenerate.iter().any(|&d| d)).count() as u64;
    let p_hat = errors as f64 / plan.trials as f64;
    let (ci_low, ci_high) = wilson_interval(errors, plan.trials);
    Ok(SimulationSummary {
        trials: plan.trials,
        errors,
        encoder_errors,
        degenerate_decodes,
        p_hat,
        std_error: (p_hat * (1.0 - p_hat) / plan.trials as f64).sqrt(),
        ci_low,
        ci_high,
        records: if plan.keep_trials { outcomes } else { Vec::new() },
    })
}

/// Error of sampling the decision from the posterior versus taking its mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecisionComparison {
    pub stochastic: f64,
    pub map: f64,
    /// `stochastic / map`, or 1 when both vanish
    pub ratio: f64,
}

/// Stochastic error `sum_v mu(v)(1 - sum_u mu(u|v)^2)` against MAP error
/// `sum_v mu(v)(1 - max_u mu(u|v))`.
pub fn stochastic_vs_map_ratio(posterior: &ConditionalKernel, prior: &FiniteDist) -> Result<DecisionComparison> {
    if prior.len() != posterior.in_size() {
        return input("prior and posterior disagree on the conditioning alphabet");
    }
    let (mut stochastic, mut map) = (0.0, 0.0);
    for (v, &pv) in prior.probs().iter().enumerate() {
        let row = posterior.row(v);
        stochastic += pv * (1.0 - row.iter().map(|p| p * p).sum::<f64>());
        map += pv * (1.0 - row.iter().cloned().fold(0.0, f64::max));
    }
    let ratio = if map > 0.0 { stochastic / map } else { 1.0 };
    if ratio > 2.0 + 1e-12 {
        return Err(Error::Invariant(format!("stochastic decision error is {ratio} times the MAP error")));
    }
    Ok(DecisionComparison { stochastic, map, ratio })
}

/// Messages demanded by decoder `j`.
pub fn demanded(sim: &Simulator, j: usize) -> Result<IdSet> {
    sim.model.access.demand(j)
}
