//! Message access structures: which encoder reads which message, which decoder
//! wants which message, and the derived message groups with their closures.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{input, Error, Result};
use crate::idset::{IdSet, MAX_IDS};

/// The bipartite relation between messages and encoders plus decoder demands.
///
/// Labels are opaque strings; internally every message, encoder and decoder
/// is a dense index in declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct AccessStructure {
    messages: Vec<String>,
    encoders: Vec<String>,
    decoders: Vec<String>,
    /// encoders of each message
    access: Vec<IdSet>,
    /// messages of each encoder
    holdings: Vec<IdSet>,
    /// demanded messages of each decoder
    demands: Vec<IdSet>,
}

fn index_labels(kind: &str, labels: &[String]) -> Result<HashMap<String, usize>> {
    if labels.len() > MAX_IDS {
        return input(format!("at most {MAX_IDS} {kind}s are supported, got {}", labels.len()));
    }
    let mut map = HashMap::new();
    for (i, l) in labels.iter().enumerate() {
        if map.insert(l.clone(), i).is_some() {
            return input(format!("duplicate {kind} label '{l}'"));
        }
    }
    Ok(map)
}

impl AccessStructure {
    /// Builds and checks a structure. Every message needs at least one encoder,
    /// every decoder a nonempty demand, and all labels must be declared.
    pub fn new<S: AsRef<str>>(
        messages: &[S],
        encoders: &[S],
        decoders: &[S],
        arcs: &[(S, S)],
        demands: &[(S, Vec<S>)],
    ) -> Result<Self> {
        let own = |v: &[S]| v.iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>();
        let messages = own(messages);
        let encoders = own(encoders);
        let decoders = own(decoders);
        if messages.is_empty() || encoders.is_empty() {
            return input("an access structure needs at least one message and one encoder");
        }
        let mi = index_labels("message", &messages)?;
        let ei = index_labels("encoder", &encoders)?;
        let di = index_labels("decoder", &decoders)?;

        let mut access = vec![IdSet::EMPTY; messages.len()];
        let mut holdings = vec![IdSet::EMPTY; encoders.len()];
        for (s, i) in arcs {
            let (s, i) = (s.as_ref(), i.as_ref());
            let sm = *mi
                .get(s)
                .ok_or_else(|| Error::Input(format!("arc ({s},{i}) references unknown message '{s}'")))?;
            let ie = *ei
                .get(i)
                .ok_or_else(|| Error::Input(format!("arc ({s},{i}) references unknown encoder '{i}'")))?;
            access[sm].insert(ie);
            holdings[ie].insert(sm);
        }
        for (s, a) in access.iter().enumerate() {
            if a.is_empty() {
                return input(format!("message '{}' has no encoder", messages[s]));
            }
        }

        let mut dem = vec![None; decoders.len()];
        for (j, set) in demands {
            let j = j.as_ref();
            let jd = *di
                .get(j)
                .ok_or_else(|| Error::Input(format!("demand of unknown decoder '{j}'")))?;
            if dem[jd].is_some() {
                return input(format!("decoder '{j}' has more than one demand entry"));
            }
            let mut d = IdSet::EMPTY;
            for s in set {
                let s = s.as_ref();
                let sm = *mi.get(s).ok_or_else(|| {
                    Error::Input(format!("decoder '{j}' demands unknown message '{s}'"))
                })?;
                d.insert(sm);
            }
            if d.is_empty() {
                return input(format!("decoder '{j}' has an empty demand"));
            }
            dem[jd] = Some(d);
        }
        let demands = dem
            .into_iter()
            .enumerate()
            .map(|(j, d)| d.ok_or_else(|| Error::Input(format!("decoder '{}' has no demand", decoders[j]))))
            .collect::<Result<Vec<_>>>()?;

        Ok(AccessStructure { messages, encoders, decoders, access, holdings, demands })
    }

    pub fn num_messages(&self) -> usize {
        self.messages.len()
    }

    pub fn num_encoders(&self) -> usize {
        self.encoders.len()
    }

    pub fn num_decoders(&self) -> usize {
        self.decoders.len()
    }

    pub fn message_labels(&self) -> &[String] {
        &self.messages
    }

    pub fn encoder_labels(&self) -> &[String] {
        &self.encoders
    }

    pub fn decoder_labels(&self) -> &[String] {
        &self.decoders
    }

    pub fn message_index(&self, label: &str) -> Result<usize> {
        self.messages
            .iter()
            .position(|m| m == label)
            .ok_or_else(|| Error::Input(format!("unknown message '{label}'")))
    }

    pub fn encoder_index(&self, label: &str) -> Result<usize> {
        self.encoders
            .iter()
            .position(|m| m == label)
            .ok_or_else(|| Error::Input(format!("unknown encoder '{label}'")))
    }

    pub fn decoder_index(&self, label: &str) -> Result<usize> {
        self.decoders
            .iter()
            .position(|m| m == label)
            .ok_or_else(|| Error::Input(format!("unknown decoder '{label}'")))
    }

    pub fn all_messages(&self) -> IdSet {
        IdSet::full(self.messages.len())
    }

    /// Encoders that read message `s`.
    pub fn encoders_of_message(&self, s: usize) -> Result<IdSet> {
        self.access
            .get(s)
            .copied()
            .ok_or_else(|| Error::Input(format!("message index {s} out of range")))
    }

    /// Messages read by encoder `i`.
    pub fn messages_of_encoder(&self, i: usize) -> Result<IdSet> {
        self.holdings
            .get(i)
            .copied()
            .ok_or_else(|| Error::Input(format!("encoder index {i} out of range")))
    }

    pub fn demand(&self, j: usize) -> Result<IdSet> {
        self.demands
            .get(j)
            .copied()
            .ok_or_else(|| Error::Input(format!("decoder index {j} out of range")))
    }

    /// Messages held by every encoder in `group`.
    pub fn common_messages(&self, group: IdSet) -> IdSet {
        group
            .iter()
            .fold(self.all_messages(), |acc, i| acc.intersection(self.holdings[i]))
    }

    /// Nonempty message groups keyed by encoder set, in order of first appearance
    /// over the message ids.
    pub fn message_groups(&self) -> Vec<(IdSet, IdSet)> {
        let mut out: Vec<(IdSet, IdSet)> = Vec::new();
        for (s, &key) in self.access.iter().enumerate() {
            match out.iter_mut().find(|(k, _)| *k == key) {
                Some((_, msgs)) => msgs.insert(s),
                None => out.push((key, IdSet::singleton(s))),
            }
        }
        out
    }

    /// Message groups ordered by the bucket linear extension, with closures.
    pub fn sorted_family(&self) -> SortedFamily {
        let groups = self.message_groups();
        let keys: Vec<IdSet> = groups.iter().map(|g| g.0).collect();
        let order = linear_extension_order(&keys, self.encoders.len());
        let (g, m): (Vec<_>, Vec<_>) = order.iter().map(|&k| groups[k]).unzip();
        SortedFamily::from_groups(g, m)
    }

    pub fn format_messages(&self, set: IdSet) -> String {
        fmt_labels(set, &self.messages)
    }

    pub fn format_encoders(&self, set: IdSet) -> String {
        fmt_labels(set, &self.encoders)
    }
}

fn fmt_labels(set: IdSet, labels: &[String]) -> String {
    let inner: Vec<&str> = set.iter().map(|i| labels[i].as_str()).collect();
    format!("{{{}}}", inner.join(","))
}

/// Bucket pass over cardinalities: every set is put at the front of its
/// bucket, then buckets of increasing size are put in front of the output.
/// The result lists larger sets first, so a strict superset always precedes
/// its subsets. Returns a permutation of `0..family.len()`.
pub fn linear_extension_order(family: &[IdSet], universe_size: usize) -> Vec<usize> {
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); universe_size + 1];
    for (k, set) in family.iter().enumerate() {
        let v = set.len().min(universe_size);
        buckets[v].insert(0, k);
    }
    let mut out: Vec<usize> = Vec::with_capacity(family.len());
    for bucket in buckets {
        let mut next = bucket;
        next.extend(out);
        out = next;
    }
    out
}

/// The family reordered by [`linear_extension_order`].
pub fn linear_extension(family: &[IdSet], universe_size: usize) -> Vec<IdSet> {
    linear_extension_order(family, universe_size)
        .into_iter()
        .map(|k| family[k])
        .collect()
}

/// Message groups in linear-extension order with their closures.
/// Indices `k` are zero-based.
#[derive(Clone, Debug, PartialEq)]
pub struct SortedFamily {
    pub groups: Vec<IdSet>,
    pub group_messages: Vec<IdSet>,
    /// messages of strict supersets earlier in the order
    pub upper_closure: Vec<IdSet>,
    /// messages of all subsets in the family, the group itself included
    pub lower_closure: Vec<IdSet>,
}

impl SortedFamily {
    /// Computes both closures for an already ordered list of groups.
    pub fn from_groups(groups: Vec<IdSet>, group_messages: Vec<IdSet>) -> Self {
        let upper_closure = upper_closures(&groups, &group_messages);
        let lower_closure = (0..groups.len())
            .map(|k| {
                groups
                    .iter()
                    .zip(&group_messages)
                    .filter(|(g, _)| g.is_subset(groups[k]))
                    .fold(IdSet::EMPTY, |acc, (_, m)| acc.union(*m))
            })
            .collect();
        SortedFamily { groups, group_messages, upper_closure, lower_closure }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    fn check(&self, k: usize) -> Result<()> {
        if k >= self.groups.len() {
            return input(format!("group index {k} out of range 0..{}", self.groups.len()));
        }
        Ok(())
    }

    pub fn upper_closure(&self, k: usize) -> Result<IdSet> {
        self.check(k)?;
        Ok(self.upper_closure[k])
    }

    pub fn lower_closure(&self, k: usize) -> Result<IdSet> {
        self.check(k)?;
        Ok(self.lower_closure[k])
    }

    /// Position of the group keyed by `encoders`.
    pub fn position(&self, encoders: IdSet) -> Option<usize> {
        self.groups.iter().position(|&g| g == encoders)
    }

    /// Position of the group containing message `s`.
    pub fn group_of_message(&self, s: usize) -> Option<usize> {
        self.group_messages.iter().position(|m| m.contains(s))
    }
}

/// Double loop over the sorted list: for each k, collect the messages of
/// earlier groups that strictly contain group k.
fn upper_closures(groups: &[IdSet], messages: &[IdSet]) -> Vec<IdSet> {
    let mut out = vec![IdSet::EMPTY; groups.len()];
    for k in 0..groups.len() {
        for kp in 0..k {
            if groups[k].is_strict_subset(groups[kp]) {
                out[k] = out[k].union(messages[kp]);
            }
        }
    }
    out
}

/// One line of a [`ValidationReport`].
#[derive(Clone, Debug, PartialEq)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<LemmaCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&LemmaCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &'static str, witness: Option<String>) {
        self.checks.push(LemmaCheck { name, passed: witness.is_none(), witness });
    }
}

/// Checks every structural property of `sorted` against `a`, recomputing each
/// set from its definition. Failures carry a witness.
pub fn validate(sorted: &SortedFamily, a: &AccessStructure) -> ValidationReport {
    let mut r = ValidationReport::default();
    let n = sorted.groups.len();
    let mlab = |s: IdSet| a.format_messages(s);
    let elab = |s: IdSet| a.format_encoders(s);

    if sorted.group_messages.len() != n
        || sorted.upper_closure.len() != n
        || sorted.lower_closure.len() != n
    {
        r.push("shape", Some("per-group vectors have different lengths".into()));
        return r;
    }
    r.push("shape", None);

    // the keys are exactly the encoder sets that occur
    let mut w = None;
    let expected: Vec<IdSet> = a.message_groups().into_iter().map(|g| g.0).collect();
    for g in &expected {
        if sorted.groups.iter().filter(|x| *x == g).count() != 1 {
            w = Some(format!("group {} appears {} times", elab(*g), sorted.groups.iter().filter(|x| *x == g).count()));
            break;
        }
    }
    if w.is_none() {
        if let Some(g) = sorted.groups.iter().find(|g| !expected.contains(g)) {
            w = Some(format!("group {} has no message", elab(*g)));
        }
    }
    r.push("family", w);

    // groups cover every message, and each message sits under its own key
    let mut w = None;
    let union = sorted.group_messages.iter().fold(IdSet::EMPTY, |acc, m| acc.union(*m));
    if let Some(s) = a.all_messages().difference(union).iter().next() {
        w = Some(format!("message {} is in no group", a.message_labels()[s]));
    }
    if w.is_none() {
        for s in 0..a.num_messages() {
            let key = a.access[s];
            let ok = sorted
                .groups
                .iter()
                .zip(&sorted.group_messages)
                .any(|(g, m)| *g == key && m.contains(s));
            if !ok {
                w = Some(format!(
                    "message {} with encoders {} is missing from group {}",
                    a.message_labels()[s],
                    elab(key),
                    elab(key)
                ));
                break;
            }
        }
    }
    r.push("lemma1-cover", w);

    // groups are pairwise disjoint and hold no foreign message
    let mut w = None;
    'outer: for k in 0..n {
        for kp in k + 1..n {
            let both = sorted.group_messages[k].intersection(sorted.group_messages[kp]);
            if !both.is_empty() {
                w = Some(format!(
                    "groups {} and {} share {}",
                    elab(sorted.groups[k]),
                    elab(sorted.groups[kp]),
                    mlab(both)
                ));
                break 'outer;
            }
        }
        for s in sorted.group_messages[k].iter() {
            if s >= a.num_messages() || a.access[s] != sorted.groups[k] {
                let label = a.message_labels().get(s).cloned().unwrap_or_else(|| format!("#{s}"));
                w = Some(format!("group {} holds foreign message {}", elab(sorted.groups[k]), label));
                break 'outer;
            }
        }
    }
    r.push("lemma2-disjoint", w);

    // stored closures equal their definitions
    let mut w = None;
    for k in 0..n {
        let def = (0..n)
            .filter(|&kp| sorted.groups[k].is_strict_subset(sorted.groups[kp]))
            .fold(IdSet::EMPTY, |acc, kp| acc.union(sorted.group_messages[kp]));
        if def != sorted.upper_closure[k] {
            w = Some(format!(
                "upper closure of {} is {} but supersets give {}",
                elab(sorted.groups[k]),
                mlab(sorted.upper_closure[k]),
                mlab(def)
            ));
            break;
        }
        let low = (0..n)
            .filter(|&kp| sorted.groups[kp].is_subset(sorted.groups[k]))
            .fold(IdSet::EMPTY, |acc, kp| acc.union(sorted.group_messages[kp]));
        if low != sorted.lower_closure[k] {
            w = Some(format!(
                "lower closure of {} is {} but subsets give {}",
                elab(sorted.groups[k]),
                mlab(sorted.lower_closure[k]),
                mlab(low)
            ));
            break;
        }
    }
    r.push("closures", w);

    let mut w = None;
    'ext: for k in 0..n {
        for kp in 0..n {
            if sorted.groups[k].is_strict_subset(sorted.groups[kp]) && kp > k {
                w = Some(format!(
                    "{} at position {k} precedes its superset {} at {kp}",
                    elab(sorted.groups[k]),
                    elab(sorted.groups[kp])
                ));
                break 'ext;
            }
        }
    }
    r.push("linear-extension", w);

    let mut w = None;
    for k in 0..n {
        let both = sorted.group_messages[k].intersection(sorted.upper_closure[k]);
        if !both.is_empty() {
            w = Some(format!("group {} meets its upper closure in {}", elab(sorted.groups[k]), mlab(both)));
            break;
        }
    }
    r.push("lemma3-upper-disjoint", w);

    let mut w = None;
    for k in 0..n {
        let common = a.common_messages(sorted.groups[k]);
        let rhs = sorted.upper_closure[k].union(sorted.group_messages[k]);
        if common != rhs {
            w = Some(format!(
                "encoders {} share {} but group plus upper closure is {}",
                elab(sorted.groups[k]),
                mlab(common),
                mlab(rhs)
            ));
            break;
        }
    }
    r.push("lemma4-common", w);

    let mut w = None;
    for i in 0..a.num_encoders() {
        let assembled = (0..n)
            .filter(|&k| sorted.groups[k].contains(i))
            .fold(IdSet::EMPTY, |acc, k| acc.union(sorted.group_messages[k]));
        if assembled != a.holdings[i] {
            w = Some(format!(
                "encoder {} holds {} but its groups give {}",
                a.encoder_labels()[i],
                mlab(a.holdings[i]),
                mlab(assembled)
            ));
            break;
        }
    }
    r.push("lemma5-assembly", w);

    let mut w = None;
    'l7: for k in 0..n {
        for kp in 0..k {
            let both = sorted.group_messages[kp].intersection(sorted.lower_closure[k]);
            if !both.is_empty() {
                w = Some(format!(
                    "earlier group {} meets lower closure of {} in {}",
                    elab(sorted.groups[kp]),
                    elab(sorted.groups[k]),
                    mlab(both)
                ));
                break 'l7;
            }
        }
    }
    r.push("lemma7-earlier-outside-lower", w);
    r
}

impl ValidationReport {
    /// One line per check.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = match &c.witness {
                None => writeln!(s, "pass {}", c.name),
                Some(w) => writeln!(s, "FAIL {}: {w}", c.name),
            };
        }
        s
    }
}

/// Access structures used throughout the docs and tests.
pub mod catalog {
    use super::AccessStructure;

    /// One encoder broadcasting private messages 1, 2 and a common message 12.
    pub fn broadcast_common() -> AccessStructure {
        AccessStructure::new(
            &["1", "2", "12"],
            &["1"],
            &["1", "2"],
            &[("1", "1"), ("2", "1"), ("12", "1")],
            &[("1", vec!["1", "12"]), ("2", vec!["2", "12"])],
        )
        .expect("valid structure")
    }

    /// Two encoders with private messages 1, 2 and a common message 12.
    pub fn two_user_common() -> AccessStructure {
        AccessStructure::new(
            &["1", "2", "12"],
            &["1", "2"],
            &["1", "2"],
            &[("1", "1"), ("2", "2"), ("12", "1"), ("12", "2")],
            &[("1", vec!["1", "12"]), ("2", vec!["2", "12"])],
        )
        .expect("valid structure")
    }

    /// Three encoders with partially common messages 12 and 23.
    /// A single decoder wants everything.
    pub fn three_user_partial() -> AccessStructure {
        AccessStructure::new(
            &["1", "3", "12", "23", "123"],
            &["1", "2", "3"],
            &["1"],
            &[
                ("1", "1"),
                ("3", "3"),
                ("12", "1"),
                ("12", "2"),
                ("23", "2"),
                ("23", "3"),
                ("123", "1"),
                ("123", "2"),
                ("123", "3"),
            ],
            &[("1", vec!["1", "3", "12", "23", "123"])],
        )
        .expect("valid structure")
    }

    /// One message, one encoder, one decoder.
    pub fn point_to_point() -> AccessStructure {
        AccessStructure::new(&["1"], &["1"], &["1"], &[("1", "1")], &[("1", vec!["1"])])
            .expect("valid structure")
    }
}
