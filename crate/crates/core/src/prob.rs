//! Finite distributions, conditional kernels, the group-factorized source,
//! Markov checks and entropies.

use crate::access::{AccessStructure, SortedFamily};
use crate::error::{input, Error, Result};
use crate::idset::IdSet;

/// Probabilities must sum to one within this.
pub const SUM_TOLERANCE: f64 = 1e-12;
/// Rows of user-supplied kernels may be off by this much before renormalizing.
pub const ROW_TOLERANCE: f64 = 1e-9;
/// Largest joint table built by enumeration.
pub const MAX_OUTCOMES: usize = 1 << 22;

fn checked_product(cards: &[usize]) -> Result<usize> {
    let mut total: usize = 1;
    for &c in cards {
        if c == 0 {
            return input("alphabets must be nonempty");
        }
        total = total
            .checked_mul(c)
            .filter(|&t| t <= MAX_OUTCOMES)
            .ok_or_else(|| Error::Resource(format!("product alphabet exceeds {MAX_OUTCOMES} outcomes")))?;
    }
    Ok(total)
}

/// Mixed-radix index, first factor most significant.
pub fn mixed_index(cards: &[usize], outcome: &[usize]) -> usize {
    cards.iter().zip(outcome).fold(0, |acc, (&c, &x)| acc * c + x)
}

pub fn mixed_outcome(cards: &[usize], mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for (slot, &c) in out.iter_mut().zip(cards).rev() {
        *slot = idx % c;
        idx /= c;
    }
    out
}

/// A distribution over a product of finite factors.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDist {
    cards: Vec<usize>,
    probs: Vec<f64>,
}

impl FiniteDist {
    pub fn new(cards: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let total = checked_product(&cards)?;
        if probs.len() != total {
            return input(format!("{} probabilities for {total} outcomes", probs.len()));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(**p >= 0.0 && p.is_finite())) {
            return input(format!("probability {p} at outcome {i} is not a nonnegative number"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return input(format!("probabilities sum to {sum}"));
        }
        Ok(FiniteDist { cards, probs })
    }

    pub fn uniform(cards: Vec<usize>) -> Result<Self> {
        let total = checked_product(&cards)?;
        Ok(FiniteDist { cards, probs: vec![1.0 / total as f64; total] })
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, outcome: &[usize]) -> f64 {
        self.probs[mixed_index(&self.cards, outcome)]
    }

    pub fn outcome(&self, idx: usize) -> Vec<usize> {
        mixed_outcome(&self.cards, idx)
    }

    fn check_factors(&self, factors: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.cards.len()];
        for &f in factors {
            if f >= self.cards.len() {
                return input(format!("factor {f} out of range 0..{}", self.cards.len()));
            }
            if std::mem::replace(&mut seen[f], true) {
                return input(format!("factor {f} listed twice"));
            }
        }
        Ok(())
    }

    /// Marginal over `factors`, in the given order.
    pub fn marginal(&self, factors: &[usize]) -> Result<FiniteDist> {
        self.check_factors(factors)?;
        let cards: Vec<usize> = factors.iter().map(|&f| self.cards[f]).collect();
        let total: usize = cards.iter().product();
        let mut probs = vec![0.0; total];
        let mut outcome = vec![0usize; self.cards.len()];
        for &p in &self.probs {
            if p != 0.0 {
                let idx = factors.iter().fold(0, |acc, &f| acc * self.cards[f] + outcome[f]);
                probs[idx] += p;
            }
            advance(&mut outcome, &self.cards);
        }
        Ok(FiniteDist { cards, probs })
    }

    pub fn entropy(&self) -> f64 {
        self.probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
    }

    /// `H(target | given)` in bits.
    pub fn conditional_entropy(&self, target: &[usize], given: &[usize]) -> Result<f64> {
        if target.is_empty() {
            return input("conditional entropy needs a nonempty target");
        }
        if target.iter().any(|t| given.contains(t)) {
            return input("target and conditioning factors overlap");
        }
        let mut all = target.to_vec();
        all.extend_from_slice(given);
        let joint = self.marginal(&all)?.entropy();
        let cond = if given.is_empty() { 0.0 } else { self.marginal(given)?.entropy() };
        Ok((joint - cond).max(0.0))
    }

    pub fn total_variation(&self, other: &FiniteDist) -> Result<f64> {
        if self.cards != other.cards {
            return input("distributions live on different alphabets");
        }
        Ok(0.5 * self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }
}

/// Odometer increment, last factor fastest.
fn advance(outcome: &mut [usize], cards: &[usize]) {
    for (x, &c) in outcome.iter_mut().zip(cards).rev() {
        *x += 1;
        if *x < c {
            return;
        }
        *x = 0;
    }
}

/// A row-stochastic table from a product input alphabet to a product output alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalKernel {
    in_cards: Vec<usize>,
    out_cards: Vec<usize>,
    in_size: usize,
    out_size: usize,
    table: Vec<f64>,
}

impl ConditionalKernel {
    /// Rows must each sum to one within [`ROW_TOLERANCE`]; they are renormalized.
    pub fn new(in_cards: Vec<usize>, out_cards: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let in_size = checked_product(&in_cards)?;
        let out_size = checked_product(&out_cards)?;
        if rows.len() != in_size {
            return input(format!("kernel has {} rows, expected {in_size}", rows.len()));
        }
        let mut table = Vec::with_capacity(in_size * out_size);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != out_size {
                return input(format!("kernel row {r} has {} entries, expected {out_size}", row.len()));
            }
            if let Some(p) = row.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
                return input(format!("kernel row {r} has entry {p}"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return input(format!("kernel row {r} sums to {sum}"));
            }
            table.extend(row.iter().map(|p| p / sum));
        }
        Ok(ConditionalKernel { in_cards, out_cards, in_size, out_size, table })
    }

    /// A kernel with no input.
    pub fn from_dist(d: &FiniteDist) -> Self {
        ConditionalKernel {
            in_cards: vec![],
            out_cards: d.cards.clone(),
            in_size: 1,
            out_size: d.len(),
            table: d.probs.clone(),
        }
    }

    /// Deterministic kernel `out = func(in)`.
    pub fn deterministic(
        in_cards: Vec<usize>,
        out_cards: Vec<usize>,
        func: impl Fn(&[usize]) -> Vec<usize>,
    ) -> Result<Self> {
        let in_size = checked_product(&in_cards)?;
        let out_size = checked_product(&out_cards)?;
        let mut table = vec![0.0; in_size * out_size];
        for i in 0..in_size {
            let o = func(&mixed_outcome(&in_cards, i));
            if o.len() != out_cards.len() || o.iter().zip(&out_cards).any(|(x, c)| x >= c) {
                return input("deterministic kernel produced an outcome outside its alphabet");
            }
            table[i * out_size + mixed_index(&out_cards, &o)] = 1.0;
        }
        Ok(ConditionalKernel { in_cards, out_cards, in_size, out_size, table })
    }

    pub fn uniform(in_cards: Vec<usize>, out_cards: Vec<usize>) -> Result<Self> {
        let in_size = checked_product(&in_cards)?;
        let out_size = checked_product(&out_cards)?;
        Ok(ConditionalKernel {
            in_cards,
            out_cards,
            in_size,
            out_size,
            table: vec![1.0 / out_size as f64; in_size * out_size],
        })
    }

    pub fn in_cards(&self) -> &[usize] {
        &self.in_cards
    }

    pub fn out_cards(&self) -> &[usize] {
        &self.out_cards
    }

    pub fn in_size(&self) -> usize {
        self.in_size
    }

    pub fn out_size(&self) -> usize {
        self.out_size
    }

    pub fn row(&self, in_idx: usize) -> &[f64] {
        &self.table[in_idx * self.out_size..(in_idx + 1) * self.out_size]
    }

    pub fn prob(&self, in_idx: usize, out_idx: usize) -> f64 {
        self.table[in_idx * self.out_size + out_idx]
    }

    /// Binary symmetric channel.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(vec![2], vec![2], vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Binary erasure channel; output 2 is the erasure.
    pub fn bec(p: f64) -> Result<Self> {
        Self::new(vec![2], vec![3], vec![vec![1.0 - p, 0.0, p], vec![0.0, 1.0 - p, p]])
    }

    pub fn noiseless(q: usize) -> Result<Self> {
        Self::deterministic(vec![q], vec![q], |x| vec![x[0]])
    }

    /// Letter-wise sum modulo `q` of `k` inputs.
    pub fn sum_mod(q: usize, k: usize) -> Result<Self> {
        Self::deterministic(vec![q; k], vec![q], |x| vec![x.iter().sum::<usize>() % q])
    }

    /// Independent copies of `self` applied to each coordinate.
    pub fn power(&self, copies: usize) -> Result<Self> {
        let in_cards: Vec<usize> = (0..copies).flat_map(|_| self.in_cards.clone()).collect();
        let out_cards: Vec<usize> = (0..copies).flat_map(|_| self.out_cards.clone()).collect();
        let in_size = checked_product(&in_cards)?;
        let out_size = checked_product(&out_cards)?;
        let mut table = vec![0.0; in_size * out_size];
        for i in 0..in_size {
            let ins = split_index(i, self.in_size, copies);
            for o in 0..out_size {
                let outs = split_index(o, self.out_size, copies);
                table[i * out_size + o] = ins.iter().zip(&outs).map(|(&a, &b)| self.prob(a, b)).product();
            }
        }
        Ok(ConditionalKernel { in_cards, out_cards, in_size, out_size, table })
    }
}

fn split_index(mut idx: usize, base: usize, parts: usize) -> Vec<usize> {
    let mut out = vec![0; parts];
    for slot in out.iter_mut().rev() {
        *slot = idx % base;
        idx /= base;
    }
    out
}

/// Block-level view of an i.i.d. letter distribution.
#[derive(Clone, Debug)]
pub struct IidBlock<'a> {
    pub letter: &'a FiniteDist,
    pub n: usize,
}

impl IidBlock<'_> {
    /// `log2` of the block probability; letters are outcome indices.
    pub fn log2_prob(&self, block: &[usize]) -> f64 {
        debug_assert_eq!(block.len(), self.n);
        block.iter().map(|&x| self.letter.probs[x].log2()).sum()
    }

    pub fn prob(&self, block: &[usize]) -> f64 {
        self.log2_prob(block).exp2()
    }
}

/// Block-level view of a memoryless kernel.
#[derive(Clone, Debug)]
pub struct IidKernelBlock<'a> {
    pub letter: &'a ConditionalKernel,
    pub n: usize,
}

impl IidKernelBlock<'_> {
    pub fn log2_prob(&self, output: &[usize], given: &[usize]) -> f64 {
        output.iter().zip(given).map(|(&y, &x)| self.letter.prob(x, y).log2()).sum()
    }

    pub fn prob(&self, output: &[usize], given: &[usize]) -> f64 {
        self.log2_prob(output, given).exp2()
    }
}

pub fn extend_iid(letter: &FiniteDist, n: usize) -> Result<IidBlock<'_>> {
    if n == 0 {
        return input("block length must be at least 1");
    }
    Ok(IidBlock { letter, n })
}

pub fn extend_iid_kernel(letter: &ConditionalKernel, n: usize) -> Result<IidKernelBlock<'_>> {
    if n == 0 {
        return input("block length must be at least 1");
    }
    Ok(IidKernelBlock { letter, n })
}

/// Conditional law of one message group given its upper closure.
/// Kernel factors follow increasing message ids.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupKernel {
    pub encoders: IdSet,
    pub messages: IdSet,
    pub conditioning: IdSet,
    pub kernel: ConditionalKernel,
}

/// Per-message letter alphabets and one kernel per message group.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSourceSpec {
    pub alphabets: Vec<usize>,
    pub groups: Vec<GroupKernel>,
}

impl JointSourceSpec {
    /// Independent uniform messages.
    pub fn uniform(alphabets: Vec<usize>, sorted: &SortedFamily) -> Result<Self> {
        let groups = (0..sorted.len())
            .map(|k| {
                let card = |s: IdSet| s.iter().map(|m| alphabets[m]).collect::<Vec<_>>();
                Ok(GroupKernel {
                    encoders: sorted.groups[k],
                    messages: sorted.group_messages[k],
                    conditioning: sorted.upper_closure[k],
                    kernel: ConditionalKernel::uniform(
                        card(sorted.upper_closure[k]),
                        card(sorted.group_messages[k]),
                    )?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(JointSourceSpec { alphabets, groups })
    }

    /// The kernel of the group keyed by `encoders`.
    pub fn group(&self, encoders: IdSet) -> Option<&GroupKernel> {
        self.groups.iter().find(|g| g.encoders == encoders)
    }

    /// Kernels for every group of `sorted`, in its order, after checking shapes.
    pub fn aligned<'a>(&'a self, sorted: &SortedFamily) -> Result<Vec<&'a GroupKernel>> {
        let mut out = Vec::with_capacity(sorted.len());
        for k in 0..sorted.len() {
            let g = self.group(sorted.groups[k]).ok_or_else(|| {
                Error::Input(format!("source has no kernel for encoder group {:?}", sorted.groups[k]))
            })?;
            if g.messages != sorted.group_messages[k] {
                return input(format!(
                    "kernel of group {:?} covers messages {:?}, expected {:?}",
                    g.encoders, g.messages, sorted.group_messages[k]
                ));
            }
            if g.conditioning != sorted.upper_closure[k] {
                return input(format!(
                    "kernel of group {:?} conditions on {:?}, expected {:?}",
                    g.encoders, g.conditioning, sorted.upper_closure[k]
                ));
            }
            let card = |s: IdSet| s.iter().map(|m| self.alphabets[m]).collect::<Vec<_>>();
            if g.kernel.in_cards() != card(g.conditioning).as_slice()
                || g.kernel.out_cards() != card(g.messages).as_slice()
            {
                return input(format!("kernel of group {:?} has the wrong alphabet sizes", g.encoders));
            }
            out.push(g);
        }
        if self.groups.len() != sorted.len() {
            return input(format!("source has {} kernels for {} groups", self.groups.len(), sorted.len()));
        }
        Ok(out)
    }
}

fn sub_index(outcome: &[usize], cards: &[usize], set: IdSet) -> usize {
    set.iter().fold(0, |acc, s| acc * cards[s] + outcome[s])
}

/// Joint law of all messages: the product over groups of each group's kernel,
/// taken in the order of `sorted`. Factors are message ids.
pub fn build_joint_z(spec: &JointSourceSpec, sorted: &SortedFamily) -> Result<FiniteDist> {
    let kernels = spec.aligned(sorted)?;
    let cards = spec.alphabets.clone();
    let total = checked_product(&cards)?;
    let mut probs = Vec::with_capacity(total);
    let mut outcome = vec![0usize; cards.len()];
    for _ in 0..total {
        let mut p = 1.0;
        for g in &kernels {
            let i = sub_index(&outcome, &cards, g.conditioning);
            let o = sub_index(&outcome, &cards, g.messages);
            p *= g.kernel.prob(i, o);
        }
        probs.push(p);
        advance(&mut outcome, &cards);
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::Invariant(format!("factorized source sums to {sum}")));
    }
    Ok(FiniteDist { cards, probs })
}

/// Per-group conditionals of `joint` given each upper closure. Rows with zero
/// conditioning mass are filled uniformly.
pub fn refactorize(joint: &FiniteDist, sorted: &SortedFamily) -> Result<JointSourceSpec> {
    let cards = joint.cards.clone();
    let mut groups = Vec::with_capacity(sorted.len());
    for k in 0..sorted.len() {
        let (msgs, cond) = (sorted.group_messages[k], sorted.upper_closure[k]);
        let mut factors = cond.to_vec();
        factors.extend(msgs.iter());
        let m = joint.marginal(&factors)?;
        let in_cards: Vec<usize> = cond.iter().map(|s| cards[s]).collect();
        let out_cards: Vec<usize> = msgs.iter().map(|s| cards[s]).collect();
        let out_size: usize = out_cards.iter().product();
        let rows = m
            .probs
            .chunks(out_size)
            .map(|chunk| {
                let mass: f64 = chunk.iter().sum();
                if mass > 0.0 {
                    chunk.iter().map(|p| p / mass).collect()
                } else {
                    vec![1.0 / out_size as f64; out_size]
                }
            })
            .collect();
        groups.push(GroupKernel {
            encoders: sorted.groups[k],
            messages: msgs,
            conditioning: cond,
            kernel: ConditionalKernel::new(in_cards, out_cards, rows)?,
        });
    }
    Ok(JointSourceSpec { alphabets: cards, groups })
}

/// Conditional independence result for one group.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovEntry {
    pub group: IdSet,
    pub private: IdSet,
    pub public: IdSet,
    pub irrelevant: IdSet,
    pub max_deviation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct MarkovReport {
    pub entries: Vec<MarkovEntry>,
}

impl MarkovReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &MarkovEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }
}

/// Largest `|p(a,b,c) p(b) - p(a,b) p(b,c)|` over all outcomes.
pub fn independence_gap(joint: &FiniteDist, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    if a.is_empty() || c.is_empty() {
        return Ok(0.0);
    }
    let mut abc = a.to_vec();
    abc.extend_from_slice(b);
    abc.extend_from_slice(c);
    let mut ab = a.to_vec();
    ab.extend_from_slice(b);
    let mut bc = b.to_vec();
    bc.extend_from_slice(c);
    let p_abc = joint.marginal(&abc)?;
    let p_ab = joint.marginal(&ab)?;
    let p_bc = joint.marginal(&bc)?;
    let p_b = joint.marginal(b)?;
    let (sa, sb, sc) = (
        a.iter().map(|&f| joint.cards[f]).product::<usize>(),
        p_b.len(),
        c.iter().map(|&f| joint.cards[f]).product::<usize>(),
    );
    let mut worst: f64 = 0.0;
    for ia in 0..sa {
        for ib in 0..sb {
            for ic in 0..sc {
                let lhs = p_abc.probs[(ia * sb + ib) * sc + ic] * p_b.probs[ib];
                let rhs = p_ab.probs[ia * sb + ib] * p_bc.probs[ib * sc + ic];
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok(worst)
}

/// For each group, tests that the messages outside both its common set and
/// its lower closure are independent of the group's messages given the
/// group's upper closure.
pub fn check_markov(joint: &FiniteDist, a: &AccessStructure, sorted: &SortedFamily, tol: f64) -> Result<MarkovReport> {
    if joint.cards.len() != a.num_messages() {
        return input("joint has a different number of factors than messages");
    }
    let all = a.all_messages();
    let mut entries = Vec::new();
    for k in 0..sorted.len() {
        let private = sorted.group_messages[k];
        let common = a.common_messages(sorted.groups[k]);
        let public = common.difference(private);
        let irrelevant = all.difference(common).difference(sorted.lower_closure[k]);
        let gap = independence_gap(joint, &irrelevant.to_vec(), &public.to_vec(), &private.to_vec())?;
        entries.push(MarkovEntry {
            group: sorted.groups[k],
            private,
            public,
            irrelevant,
            max_deviation: gap,
            passed: gap <= tol,
        });
    }
    Ok(MarkovReport { entries })
}

/// Channel from the tuple of encoder inputs to the tuple of decoder outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSpec {
    pub kernel: ConditionalKernel,
    pub input_alphabets: Vec<usize>,
    pub output_alphabets: Vec<usize>,
    pub memoryless: bool,
}

impl ChannelSpec {
    pub fn new(kernel: ConditionalKernel, memoryless: bool) -> Result<Self> {
        if !memoryless {
            return input("only memoryless channels are supported");
        }
        Ok(ChannelSpec {
            input_alphabets: kernel.in_cards().to_vec(),
            output_alphabets: kernel.out_cards().to_vec(),
            kernel,
            memoryless,
        })
    }

    /// Every decoder sees every input through its own independent copy of `letter`.
    pub fn per_input(letter: &ConditionalKernel, encoders: usize, decoders: usize) -> Result<Self> {
        let tuple = letter.power(encoders)?;
        // one output letter per decoder: the tuple of per-input outputs
        let rows = (0..tuple.in_size()).map(|i| tuple.row(i).to_vec()).collect();
        let per_decoder = ConditionalKernel::new(tuple.in_cards().to_vec(), vec![tuple.out_size()], rows)?;
        let combined = per_decoder_copies(&per_decoder, decoders)?;
        Self::new(combined, true)
    }

    pub fn bsc(p: f64, encoders: usize, decoders: usize) -> Result<Self> {
        Self::per_input(&ConditionalKernel::bsc(p)?, encoders, decoders)
    }

    pub fn bec(p: f64, encoders: usize, decoders: usize) -> Result<Self> {
        Self::per_input(&ConditionalKernel::bec(p)?, encoders, decoders)
    }

    pub fn noiseless(q: usize, encoders: usize, decoders: usize) -> Result<Self> {
        Self::per_input(&ConditionalKernel::noiseless(q)?, encoders, decoders)
    }

    /// Every decoder sees the integer sum of the binary inputs.
    pub fn binary_adder(encoders: usize, decoders: usize) -> Result<Self> {
        let adder = ConditionalKernel::deterministic(vec![2; encoders], vec![encoders + 1], |x| {
            vec![x.iter().sum::<usize>()]
        })?;
        Self::new(per_decoder_copies(&adder, decoders)?, true)
    }

    /// Parses `bsc(p)`, `bec(p)`, `noiseless(q)` and `binary-adder`.
    pub fn preset(text: &str, encoders: usize, decoders: usize) -> Result<Self> {
        let t = text.trim();
        let arg = |name: &str| -> Option<&str> { t.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')') };
        let num = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| Error::Input(format!("bad preset argument in '{t}'")))
        };
        let prob = |s: &str| -> Result<f64> {
            let p = num(s)?;
            if !(0.0..=1.0).contains(&p) {
                return input(format!("preset '{t}' needs a probability in [0,1]"));
            }
            Ok(p)
        };
        if let Some(a) = arg("bsc") {
            Self::bsc(prob(a)?, encoders, decoders)
        } else if let Some(a) = arg("bec") {
            Self::bec(prob(a)?, encoders, decoders)
        } else if let Some(a) = arg("noiseless") {
            let q = num(a)?;
            if q < 1.0 || q.fract() != 0.0 {
                return input(format!("preset '{t}' needs a positive integer alphabet"));
            }
            Self::noiseless(q as usize, encoders, decoders)
        } else if t == "binary-adder" {
            Self::binary_adder(encoders, decoders)
        } else {
            input(format!("unknown channel preset '{t}'"))
        }
    }
}

/// The same output distribution delivered independently to `copies` decoders.
fn per_decoder_copies(k: &ConditionalKernel, copies: usize) -> Result<ConditionalKernel> {
    let out_cards: Vec<usize> = (0..copies).flat_map(|_| k.out_cards().to_vec()).collect();
    let out_size = checked_product(&out_cards)?;
    let mut rows = Vec::with_capacity(k.in_size());
    for i in 0..k.in_size() {
        let row: Vec<f64> = (0..out_size)
            .map(|o| split_index(o, k.out_size(), copies).iter().map(|&y| k.prob(i, y)).product())
            .collect();
        rows.push(row);
    }
    ConditionalKernel::new(k.in_cards().to_vec(), out_cards, rows)
}

/// Everything needed to describe one channel letter: the source, the
/// per-encoder input maps and the channel.
#[derive(Clone, Debug)]
pub struct LetterModel {
    pub access: AccessStructure,
    pub sorted: SortedFamily,
    pub source: JointSourceSpec,
    /// encoder `i` maps the letters of its messages (increasing ids) to `X_i`
    pub inputs: Vec<ConditionalKernel>,
    pub channel: ChannelSpec,
}

/// Entropy of a message subset given the context a constraint needs.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyTerm {
    /// group position for encoder terms, decoder index for decoder terms
    pub owner: usize,
    pub subset: IdSet,
    pub bits: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct EntropyTable {
    /// `H(Z_S' | Z_upper(k))` for every group k and nonempty S' within it
    pub encoder: Vec<EntropyTerm>,
    /// `H(Z_D' | Y_j, Z_{D(j) minus D'})` for every decoder j and nonempty D' within D(j)
    pub decoder: Vec<EntropyTerm>,
}

impl EntropyTable {
    pub fn encoder_term(&self, k: usize, subset: IdSet) -> Option<f64> {
        self.encoder.iter().find(|t| t.owner == k && t.subset == subset).map(|t| t.bits)
    }

    pub fn decoder_term(&self, j: usize, subset: IdSet) -> Option<f64> {
        self.decoder.iter().find(|t| t.owner == j && t.subset == subset).map(|t| t.bits)
    }
}

impl LetterModel {
    pub fn new(
        access: AccessStructure,
        source: JointSourceSpec,
        inputs: Vec<ConditionalKernel>,
        channel: ChannelSpec,
    ) -> Result<Self> {
        let sorted = access.sorted_family();
        source.aligned(&sorted)?;
        if source.alphabets.len() != access.num_messages() {
            return input("source alphabets do not match the message count");
        }
        if inputs.len() != access.num_encoders() {
            return input(format!("{} input kernels for {} encoders", inputs.len(), access.num_encoders()));
        }
        for (i, k) in inputs.iter().enumerate() {
            let want: Vec<usize> =
                access.messages_of_encoder(i)?.iter().map(|s| source.alphabets[s]).collect();
            if k.in_cards() != want.as_slice() || k.out_cards().len() != 1 {
                return input(format!(
                    "input kernel of encoder '{}' must map its message letters to one channel letter",
                    access.encoder_labels()[i]
                ));
            }
            if k.out_cards()[0] != channel.input_alphabets.get(i).copied().unwrap_or(0) {
                return input(format!(
                    "input kernel of encoder '{}' disagrees with the channel input alphabet",
                    access.encoder_labels()[i]
                ));
            }
        }
        if channel.input_alphabets.len() != access.num_encoders() || channel.output_alphabets.len() != access.num_decoders() {
            return input("channel shape does not match the encoder and decoder counts");
        }
        Ok(LetterModel { access, sorted, source, inputs, channel })
    }

    pub fn num_messages(&self) -> usize {
        self.access.num_messages()
    }

    pub fn z_factor(&self, s: usize) -> usize {
        s
    }

    pub fn x_factor(&self, i: usize) -> usize {
        self.access.num_messages() + i
    }

    pub fn y_factor(&self, j: usize) -> usize {
        self.access.num_messages() + self.access.num_encoders() + j
    }

    /// Joint law of one letter over messages, inputs and outputs, in that factor order.
    pub fn letter_joint(&self) -> Result<FiniteDist> {
        let z = build_joint_z(&self.source, &self.sorted)?;
        let mut cards = z.cards.clone();
        cards.extend(self.channel.input_alphabets.iter());
        cards.extend(self.channel.output_alphabets.iter());
        let total = checked_product(&cards)?;
        let x_cards = &self.channel.input_alphabets;
        let y_size = self.channel.kernel.out_size();
        let x_size = self.channel.kernel.in_size();
        let holdings: Vec<IdSet> =
            (0..self.access.num_encoders()).map(|i| self.access.messages_of_encoder(i).unwrap()).collect();
        let mut probs = vec![0.0; total];
        for (zi, &pz) in z.probs.iter().enumerate() {
            if pz == 0.0 {
                continue;
            }
            let zo = z.outcome(zi);
            for xi in 0..x_size {
                let xo = mixed_outcome(x_cards, xi);
                let mut px = pz;
                for (i, k) in self.inputs.iter().enumerate() {
                    px *= k.prob(sub_index(&zo, &z.cards, holdings[i]), xo[i]);
                }
                if px == 0.0 {
                    continue;
                }
                for yi in 0..y_size {
                    let p = px * self.channel.kernel.prob(xi, yi);
                    probs[(zi * x_size + xi) * y_size + yi] += p;
                }
            }
        }
        FiniteDist::new(cards, probs)
    }

    /// Every entropy the rate constraints refer to.
    pub fn entropy_table(&self) -> Result<EntropyTable> {
        let joint = self.letter_joint()?;
        let mut table = EntropyTable::default();
        for k in 0..self.sorted.len() {
            let given: Vec<usize> = self.sorted.upper_closure[k].iter().map(|s| self.z_factor(s)).collect();
            for sub in self.sorted.group_messages[k].nonempty_subsets() {
                let target: Vec<usize> = sub.iter().map(|s| self.z_factor(s)).collect();
                table.encoder.push(EntropyTerm {
                    owner: k,
                    subset: sub,
                    bits: joint.conditional_entropy(&target, &given)?,
                });
            }
        }
        for j in 0..self.access.num_decoders() {
            let d = self.access.demand(j)?;
            for sub in d.nonempty_subsets() {
                let target: Vec<usize> = sub.iter().map(|s| self.z_factor(s)).collect();
                let mut given: Vec<usize> = vec![self.y_factor(j)];
                given.extend(d.difference(sub).iter().map(|s| self.z_factor(s)));
                table.decoder.push(EntropyTerm {
                    owner: j,
                    subset: sub,
                    bits: joint.conditional_entropy(&target, &given)?,
                });
            }
        }
        Ok(table)
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::access::catalog;

    #[test]
    fn dist_invariants() {
        assert!(FiniteDist::new(vec![2], vec![0.5, 0.6]).is_err());
        assert!(FiniteDist::new(vec![2], vec![-0.1, 1.1]).is_err());
        assert!(FiniteDist::new(vec![2, 2], vec![0.25; 3]).is_err());
        assert!(matches!(FiniteDist::uniform(vec![2; 23]), Err(Error::Resource(_))));
    }

    #[test]
    fn entropy_examples() {
        let u = FiniteDist::uniform(vec![2]).unwrap();
        assert!((u.conditional_entropy(&[0], &[]).unwrap() - 1.0).abs() < 1e-15);
        // Z uniform, Y = Z through BSC(0.1)
        let p = 0.1;
        let j = FiniteDist::new(vec![2, 2], vec![0.5 * (1.0 - p), 0.5 * p, 0.5 * p, 0.5 * (1.0 - p)]).unwrap();
        let h = -0.1 * 0.1f64.log2() - 0.9 * 0.9f64.log2();
        assert!((j.conditional_entropy(&[0], &[1]).unwrap() - h).abs() < 1e-12);
        assert!((h - 0.468_995_593_589_281_2).abs() < 1e-12);
        let copy = FiniteDist::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(copy.conditional_entropy(&[0], &[1]).unwrap(), 0.0);
        assert!(u.conditional_entropy(&[], &[0]).is_err());
        assert!(j.conditional_entropy(&[0], &[0]).is_err());
    }

    #[test]
    fn iid_examples() {
        let u = FiniteDist::uniform(vec![2]).unwrap();
        let b = extend_iid(&u, 3).unwrap();
        assert!((b.prob(&[0, 1, 1]) - 0.125).abs() < 1e-15);
        let one = extend_iid(&u, 1).unwrap();
        assert_eq!(one.prob(&[1]), 0.5);
        let bsc = ConditionalKernel::bsc(0.1).unwrap();
        let k = extend_iid_kernel(&bsc, 2).unwrap();
        assert!((k.prob(&[0, 1], &[0, 0]) - 0.09).abs() < 1e-15);
        assert!(extend_iid(&u, 0).is_err());
    }

    #[test]
    fn uniform_groups_give_uniform_joint() {
        let a = catalog::three_user_partial();
        let sorted = a.sorted_family();
        let spec = JointSourceSpec::uniform(vec![2; 5], &sorted).unwrap();
        let z = build_joint_z(&spec, &sorted).unwrap();
        assert!(z.probs().iter().all(|&p| (p - 1.0 / 32.0).abs() < 1e-15));
    }

    #[test]
    fn two_user_noisy_common_matches_chain_rule() {
        // Z12 uniform, Z1 = Z12 xor Bernoulli(0.1), Z2 uniform
        let a = catalog::two_user_common();
        let sorted = a.sorted_family();
        let (m1, m2, m12) = (0, 1, 2);
        let mut spec = JointSourceSpec::uniform(vec![2; 3], &sorted).unwrap();
        let k1 = sorted.position(IdSet::singleton(0)).unwrap();
        assert_eq!(sorted.upper_closure[k1], IdSet::singleton(m12));
        let g = spec.groups.iter_mut().find(|g| g.encoders == IdSet::singleton(0)).unwrap();
        g.kernel = ConditionalKernel::bsc(0.1).unwrap();
        let z = build_joint_z(&spec, &sorted).unwrap();
        for z1 in 0..2 {
            for z2 in 0..2 {
                for z12 in 0..2 {
                    let flip = if z1 == z12 { 0.9 } else { 0.1 };
                    let mut o = [0; 3];
                    o[m1] = z1;
                    o[m2] = z2;
                    o[m12] = z12;
                    assert!((z.prob(&o) - 0.5 * 0.5 * flip).abs() < 1e-15);
                }
            }
        }
        assert!(check_markov(&z, &a, &sorted, 1e-9).unwrap().all_passed());
    }

    #[test]
    fn single_message_joint_is_its_distribution() {
        let a = catalog::point_to_point();
        let sorted = a.sorted_family();
        let d = FiniteDist::new(vec![3], vec![0.2, 0.3, 0.5]).unwrap();
        let spec = JointSourceSpec {
            alphabets: vec![3],
            groups: vec![GroupKernel {
                encoders: IdSet::singleton(0),
                messages: IdSet::singleton(0),
                conditioning: IdSet::EMPTY,
                kernel: ConditionalKernel::from_dist(&d),
            }],
        };
        assert_eq!(build_joint_z(&spec, &sorted).unwrap(), d);
    }

    #[test]
    fn mismatched_conditioning_is_rejected() {
        let a = catalog::two_user_common();
        let sorted = a.sorted_family();
        let mut spec = JointSourceSpec::uniform(vec![2; 3], &sorted).unwrap();
        let g = spec.groups.iter_mut().find(|g| g.encoders == IdSet::singleton(0)).unwrap();
        g.conditioning = IdSet::EMPTY;
        assert!(matches!(build_joint_z(&spec, &sorted), Err(Error::Input(_))));
    }

    #[test]
    fn private_correlated_with_irrelevant_fails() {
        // two-user structure: message 1 (private to encoder 1) copies message 2
        // (private to encoder 2), which encoder 1 never sees
        let a = catalog::two_user_common();
        let sorted = a.sorted_family();
        let mut probs = vec![0.0; 8];
        for z1 in 0..2 {
            for z12 in 0..2 {
                probs[mixed_index(&[2, 2, 2], &[z1, z1, z12])] = 0.25;
            }
        }
        let z = FiniteDist::new(vec![2, 2, 2], probs).unwrap();
        let rep = check_markov(&z, &a, &sorted, 1e-9).unwrap();
        let failed: Vec<IdSet> = rep.failures().map(|e| e.group).collect();
        assert!(failed.contains(&IdSet::singleton(0)));
        assert!(failed.contains(&IdSet::singleton(1)));
        let indep = FiniteDist::uniform(vec![2, 2, 2]).unwrap();
        assert!(check_markov(&indep, &a, &sorted, 1e-9).unwrap().all_passed());
    }

    #[test]
    fn channel_presets() {
        let c = ChannelSpec::preset("bsc(0.1)", 1, 1).unwrap();
        assert_eq!(c.kernel.prob(0, 1), 0.1);
        let e = ChannelSpec::preset("bec(0.2)", 1, 1).unwrap();
        assert_eq!(e.output_alphabets, vec![3]);
        let n = ChannelSpec::preset("noiseless(3)", 2, 2).unwrap();
        // each decoder sees the pair of inputs as one letter
        assert_eq!(n.output_alphabets, vec![9, 9]);
        assert_eq!(n.kernel.prob(5, mixed_index(&[9, 9], &[5, 5])), 1.0);
        let ad = ChannelSpec::preset("binary-adder", 2, 2).unwrap();
        assert_eq!(ad.output_alphabets, vec![3, 3]);
        assert_eq!(ad.kernel.prob(3, mixed_index(&[3, 3], &[2, 2])), 1.0);
        assert!(ChannelSpec::preset("bsc(1.5)", 1, 1).is_err());
        assert!(ChannelSpec::preset("awgn(1)", 1, 1).is_err());
    }

    #[test]
    fn point_to_point_entropies() {
        let a = catalog::point_to_point();
        let sorted = a.sorted_family();
        let source = JointSourceSpec::uniform(vec![2], &sorted).unwrap();
        let m = LetterModel::new(
            a,
            source,
            vec![ConditionalKernel::noiseless(2).unwrap()],
            ChannelSpec::bsc(0.1, 1, 1).unwrap(),
        )
        .unwrap();
        let t = m.entropy_table().unwrap();
        assert!((t.encoder_term(0, IdSet::singleton(0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((t.decoder_term(0, IdSet::singleton(0)).unwrap() - binary_entropy(0.1)).abs() < 1e-12);
    }
}
