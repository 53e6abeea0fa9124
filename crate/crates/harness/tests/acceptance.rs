//! Acceptance run: one PASS/FAIL line per criterion with its wall time.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use crng_core::access::{validate, SortedFamily};
use crng_core::bounds::{mbcp_lhs_exact, mcrp_lhs_exact, ProductPoint};
use crng_core::codec::stochastic_vs_map_ratio;
use crng_core::field::Field;
use crng_core::hash::{hash_alpha_beta, Ensemble, HashEnsembleSpec};
use crng_core::prob::{
    build_joint_z, check_markov, refactorize, ConditionalKernel, FiniteDist, GroupKernel, JointSourceSpec,
};
use crng_core::region::{aux_indices, build_constraints, fourier_motzkin_project, lp_feasible, RatePoint};
use crng_core::{AccessStructure, IdSet};
use crng_harness::commands::{run, Command};
use crng_harness::spec::{validate_spec, ExperimentSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Outcome = Result<String, String>;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> Result<ExperimentSpec, String> {
    let text = std::fs::read_to_string(configs().join(name)).map_err(|e| format!("{name}: {e}"))?;
    validate_spec(&text).map_err(|errs| format!("{name}: {errs:?}"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn label_set(v: &Value) -> BTreeSet<String> {
    v.as_array().map(|a| a.iter().filter_map(|x| x.as_str().map(String::from)).collect()).unwrap_or_default()
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

struct ExampleSets<'a> {
    file: &'a str,
    held: &'a [(&'a str, &'a [&'a str])],
    access: &'a [(&'a str, &'a [&'a str])],
    /// encoder group and its messages
    groups: &'a [(&'a [&'a str], &'a [&'a str])],
}

fn examples_fidelity() -> Outcome {
    let cases = [
        ExampleSets {
            file: "example1.json",
            held: &[("1", &["1", "2", "12"])],
            access: &[("1", &["1"]), ("2", &["1"]), ("12", &["1"])],
            groups: &[(&["1"], &["1", "2", "12"])],
        },
        ExampleSets {
            file: "example2.json",
            held: &[("1", &["1", "12"]), ("2", &["2", "12"])],
            access: &[("1", &["1"]), ("2", &["2"]), ("12", &["1", "2"])],
            groups: &[(&["1", "2"], &["12"]), (&["1"], &["1"]), (&["2"], &["2"])],
        },
        ExampleSets {
            file: "example3.json",
            held: &[("1", &["1", "12", "123"]), ("2", &["12", "23", "123"]), ("3", &["3", "23", "123"])],
            access: &[
                ("1", &["1"]),
                ("3", &["3"]),
                ("12", &["1", "2"]),
                ("23", &["2", "3"]),
                ("123", &["1", "2", "3"]),
            ],
            groups: &[
                (&["1", "2", "3"], &["123"]),
                (&["1", "2"], &["12"]),
                (&["2", "3"], &["23"]),
                (&["1"], &["1"]),
                (&["3"], &["3"]),
            ],
        },
    ];
    let mut compared = 0;
    for c in &cases {
        let spec = load(c.file)?;
        let rec = run(Command::Verify, &spec).map_err(|e| e.to_string())?;
        let p = &rec.payload;
        ensure(p["passed"] == json!(true), || format!("{}: verification failed", c.file))?;
        for (enc, msgs) in c.held {
            let got = label_set(&p["messages_of_encoder"][enc]);
            ensure(got == set(msgs), || format!("{}: S({enc}) = {got:?}", c.file))?;
            compared += 1;
        }
        for (msg, encs) in c.access {
            let got = label_set(&p["encoders_of_message"][msg]);
            ensure(got == set(encs), || format!("{}: I({msg}) = {got:?}", c.file))?;
            compared += 1;
        }
        let family: BTreeMap<BTreeSet<String>, BTreeSet<String>> = p["family"]
            .as_array()
            .ok_or("family missing")?
            .iter()
            .map(|g| (label_set(&g["encoders"]), label_set(&g["messages"])))
            .collect();
        let want: BTreeMap<BTreeSet<String>, BTreeSet<String>> =
            c.groups.iter().map(|(e, m)| (set(e), set(m))).collect();
        ensure(family == want, || format!("{}: family {family:?}", c.file))?;
        compared += want.len() + 1;
    }
    Ok(format!("{compared} sets match"))
}

fn random_structure(rng: &mut ChaCha8Rng, max_msgs: usize, max_encs: usize, max_decs: usize) -> (AccessStructure, Vec<u64>) {
    let ni = rng.gen_range(1..=max_encs);
    let ns = rng.gen_range(1..=max_msgs);
    let nd = rng.gen_range(1..=max_decs);
    let msgs: Vec<String> = (0..ns).map(|s| format!("m{s}")).collect();
    let encs: Vec<String> = (0..ni).map(|i| format!("e{i}")).collect();
    let decs: Vec<String> = (0..nd).map(|j| format!("d{j}")).collect();
    let holders: Vec<u64> = (0..ns).map(|_| rng.gen_range(1..(1u64 << ni))).collect();
    let mut arcs = Vec::new();
    for (s, &mask) in holders.iter().enumerate() {
        for i in IdSet(mask).iter() {
            arcs.push((msgs[s].clone(), encs[i].clone()));
        }
    }
    let demands: Vec<(String, Vec<String>)> = decs
        .iter()
        .map(|d| {
            let mask: u64 = rng.gen_range(1..(1u64 << ns));
            (d.clone(), IdSet(mask).iter().map(|s| msgs[s].clone()).collect())
        })
        .collect();
    (AccessStructure::new(&msgs, &encs, &decs, &arcs, &demands).expect("valid random structure"), holders)
}

fn lemma_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..1000 {
        let (a, holders) = random_structure(&mut rng, 6, 4, 3);
        let sorted = a.sorted_family();
        let report = validate(&sorted, &a);
        ensure(report.all_passed(), || format!("case {case}:\n{}", report.render()))?;
        // independent checks: groups are the distinct holder sets, supersets come first
        let distinct: BTreeSet<u64> = holders.iter().copied().collect();
        let got: BTreeSet<u64> = sorted.groups.iter().map(|g| g.0).collect();
        ensure(distinct == got, || format!("case {case}: family {got:?} vs {distinct:?}"))?;
        for k in 0..sorted.len() {
            let exact: IdSet = holders.iter().enumerate().filter(|(_, &m)| m == sorted.groups[k].0).map(|(s, _)| s).collect();
            ensure(exact == sorted.group_messages[k], || format!("case {case}: group {k} messages"))?;
            for l in k + 1..sorted.len() {
                ensure(!sorted.groups[k].is_strict_subset(sorted.groups[l]), || {
                    format!("case {case}: subset at {k} precedes superset at {l}")
                })?;
            }
        }
    }
    Ok("1000 structures".into())
}

fn random_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len).map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen::<f64>() }).collect();
    if row.iter().all(|&x| x == 0.0) {
        row[0] = 1.0;
    }
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= s);
    row
}

fn random_source(rng: &mut ChaCha8Rng, sorted: &SortedFamily, ns: usize) -> JointSourceSpec {
    let alphabets: Vec<usize> = (0..ns).map(|_| rng.gen_range(2..=3)).collect();
    let card = |s: IdSet| s.iter().map(|m| alphabets[m]).collect::<Vec<_>>();
    let groups = (0..sorted.len())
        .map(|k| {
            let ins = card(sorted.upper_closure[k]);
            let outs = card(sorted.group_messages[k]);
            let rows = (0..ins.iter().product::<usize>()).map(|_| random_row(rng, outs.iter().product())).collect();
            GroupKernel {
                encoders: sorted.groups[k],
                messages: sorted.group_messages[k],
                conditioning: sorted.upper_closure[k],
                kernel: ConditionalKernel::new(ins, outs, rows).expect("rows are normalized"),
            }
        })
        .collect();
    JointSourceSpec { alphabets, groups }
}

fn markov_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_gap: f64 = 0.0;
    let mut worst_tv: f64 = 0.0;
    for case in 0..200 {
        let (a, _) = random_structure(&mut rng, 5, 3, 1);
        let sorted = a.sorted_family();
        let source = random_source(&mut rng, &sorted, a.num_messages());
        let joint = build_joint_z(&source, &sorted).map_err(|e| e.to_string())?;
        let report = check_markov(&joint, &a, &sorted, 1e-9).map_err(|e| e.to_string())?;
        ensure(report.all_passed(), || format!("case {case}: factorized source fails Markov"))?;
        worst_gap = report.entries.iter().map(|e| e.max_deviation).fold(worst_gap, f64::max);
        let again = refactorize(&joint, &sorted).and_then(|s| build_joint_z(&s, &sorted)).map_err(|e| e.to_string())?;
        let tv = joint.total_variation(&again).map_err(|e| e.to_string())?;
        ensure(tv <= 1e-9, || format!("case {case}: round trip TV {tv}"))?;
        worst_tv = worst_tv.max(tv);
    }
    Ok(format!("max gap {worst_gap:.1e}, max TV {worst_tv:.1e}"))
}

fn uniform_hash_exact() -> Outcome {
    let f = Field::binary();
    let mut pairs = 0;
    for cols in 1..=4usize {
        for rows in 0..=3usize.min(cols) {
            let spec = HashEnsembleSpec::uniform(f, rows, cols);
            let m = hash_alpha_beta(&spec).map_err(|e| e.to_string())?;
            ensure(*m.alpha.numer() == 1 && *m.alpha.denom() == 1, || format!("{rows}x{cols}: alpha {}", m.alpha))?;
            ensure(*m.beta.numer() == 0, || format!("{rows}x{cols}: beta {}", m.beta))?;
            let ens = Ensemble::from_spec(&spec).map_err(|e| e.to_string())?;
            let vecs: Vec<Vec<u16>> = f.all_vectors(cols).map_err(|e| e.to_string())?.collect();
            for z in &vecs {
                for zp in &vecs {
                    if z == zp {
                        continue;
                    }
                    let p = ens.collision_probability(z, zp).map_err(|e| e.to_string())?;
                    ensure(*p.numer() == 1 && *p.denom() == 1u64 << rows, || {
                        format!("{rows}x{cols}: P(collision {z:?},{zp:?}) = {p}")
                    })?;
                }
            }
            pairs += 1;
        }
    }
    Ok(format!("{pairs} shapes with rows <= cols"))
}

fn random_ensembles(rng: &mut ChaCha8Rng) -> Result<Vec<Ensemble>, String> {
    let count = rng.gen_range(1..=2);
    // keep the product of ensemble sizes small enough to enumerate quickly
    let field = if count == 1 && rng.gen_bool(0.3) { Field::new(3).unwrap() } else { Field::binary() };
    let max_cells = 4;
    let mut out = Vec::new();
    for _ in 0..count {
        let cols = rng.gen_range(1..=3);
        let rows = rng.gen_range(1..=cols.min(max_cells / cols).max(1));
        let spec = if rng.gen_bool(0.5) {
            HashEnsembleSpec::uniform(field, rows, cols)
        } else {
            HashEnsembleSpec::sparse(field, rows, cols, Some(rng.gen_range(1..=rows)))
        };
        out.push(Ensemble::from_spec(&spec).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn random_points(rng: &mut ChaCha8Rng, ens: &[Ensemble], max: usize) -> Vec<ProductPoint> {
    let space: usize = ens.iter().map(|e| (e.field.order() as usize).pow(e.cols as u32)).product();
    let want = rng.gen_range(1..=max.min(space));
    let mut pts: Vec<ProductPoint> = Vec::new();
    while pts.len() < want {
        let p: ProductPoint =
            ens.iter().map(|e| (0..e.cols).map(|_| rng.gen_range(0..e.field.order())).collect()).collect();
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    pts
}

fn hash_lemmas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut tightest = f64::INFINITY;
    for case in 0..50 {
        let ens = random_ensembles(&mut rng)?;
        let weighted: Vec<(ProductPoint, f64)> =
            random_points(&mut rng, &ens, 8).into_iter().map(|p| (p, rng.gen_range(0.05..1.0))).collect();
        let b = mbcp_lhs_exact(&ens, &weighted).map_err(|e| format!("balanced-coloring case {case}: {e}"))?;
        ensure(b.lhs <= b.rhs, || format!("balanced-coloring case {case}: {} > {}", b.lhs, b.rhs))?;
        tightest = tightest.min(b.rhs - b.lhs);
    }
    for case in 0..50 {
        let ens = random_ensembles(&mut rng)?;
        let t = random_points(&mut rng, &ens, 8);
        let z = if rng.gen_bool(0.5) { t[rng.gen_range(0..t.len())].clone() } else { random_points(&mut rng, &ens, 1).remove(0) };
        let b = mcrp_lhs_exact(&ens, &t, &z).map_err(|e| format!("collision-resistance case {case}: {e}"))?;
        ensure(b.lhs <= b.rhs, || format!("collision-resistance case {case}: {} > {}", b.lhs, b.rhs))?;
        tightest = tightest.min(b.rhs - b.lhs);
    }
    Ok(format!("100 instances, smallest gap {tightest:.3}"))
}

fn decision_factor_two() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let conds = rng.gen_range(1..=4);
        let outs = rng.gen_range(1..=5);
        let rows = (0..conds).map(|_| random_row(&mut rng, outs)).collect();
        let post = ConditionalKernel::new(vec![conds], vec![outs], rows).map_err(|e| e.to_string())?;
        let prior = FiniteDist::new(vec![conds], random_row(&mut rng, conds)).map_err(|e| e.to_string())?;
        let c = stochastic_vs_map_ratio(&post, &prior).map_err(|e| format!("case {case}: {e}"))?;
        ensure(c.ratio <= 2.0 + 1e-12, || format!("case {case}: ratio {}", c.ratio))?;
        worst = worst.max(c.ratio);
    }
    let post = ConditionalKernel::new(vec![1], vec![2], vec![vec![0.9, 0.1]]).unwrap();
    let prior = FiniteDist::new(vec![1], vec![1.0]).unwrap();
    let c = stochastic_vs_map_ratio(&post, &prior).map_err(|e| e.to_string())?;
    for (got, want, name) in [(c.stochastic, 0.18, "stochastic"), (c.map, 0.10, "map"), (c.ratio, 1.8, "ratio")] {
        ensure((got - want).abs() <= 1e-12, || format!("worked example {name} = {got}"))?;
    }
    Ok(format!("max ratio {worst:.4}; worked example (0.18, 0.10, 1.8)"))
}

fn p2p_config(channel: &str, message: f64, codeword: f64, threads: usize) -> String {
    json!({
        "access": {
            "messages": ["1"], "encoders": ["1"], "decoders": ["1"],
            "arcs": [["1", "1"]], "demands": {"1": ["1"]}
        },
        "channel": {"preset": channel},
        "code": {"n": 12, "q": 2, "rates": {"1": {"message": message, "codeword": codeword}}},
        "run": {"trials": 500, "seed": 7, "threads": threads, "epsilon": 0.05}
    })
    .to_string()
}

#[derive(Clone, Debug)]
struct Estimate {
    p: f64,
    se: f64,
    bound: f64,
}

fn estimate(channel: &str, message: f64, codeword: f64) -> Result<Estimate, String> {
    let spec = validate_spec(&p2p_config(channel, message, codeword, 4)).map_err(|e| format!("{e:?}"))?;
    let sim = run(Command::Simulate, &spec).map_err(|e| e.to_string())?;
    let bnd = run(Command::Bounds, &spec).map_err(|e| e.to_string())?;
    Ok(Estimate {
        p: sim.payload["p_hat"].as_f64().ok_or("p_hat")?,
        se: sim.payload["std_error"].as_f64().ok_or("std_error")?,
        bound: bnd.payload["rhs"].as_f64().ok_or("rhs")?,
    })
}

/// Estimates shared by the pipeline, dominance and determinism criteria.
#[derive(Default)]
struct Pipeline {
    runs: Vec<(String, Estimate)>,
}

impl Pipeline {
    fn get(&mut self, channel: &str, message: f64, codeword: f64) -> Result<Estimate, String> {
        let key = format!("{channel} (R,r)=({message},{codeword})");
        if let Some((_, e)) = self.runs.iter().find(|(k, _)| *k == key) {
            return Ok(e.clone());
        }
        let e = estimate(channel, message, codeword)?;
        self.runs.push((key, e.clone()));
        Ok(e)
    }
}

fn sigma(a: &Estimate, b: &Estimate) -> f64 {
    (a.se * a.se + b.se * b.se).sqrt()
}

fn noiseless_pipeline(pl: &mut Pipeline) -> Outcome {
    let ch = "noiseless(2)";
    let good = pl.get(ch, 0.5, 0.25)?;
    let over = pl.get(ch, 1.0, 0.0)?;
    let ladder = [pl.get(ch, 0.25, 0.25)?, good.clone(), pl.get(ch, 0.9, 0.25)?];
    let summary = format!(
        "p(0.5,0.25)={:.3} p(1,0)={:.3} ladder {:.3}/{:.3}/{:.3}",
        good.p, over.p, ladder[0].p, ladder[1].p, ladder[2].p
    );
    let mut problems = Vec::new();
    if good.p > 0.10 {
        problems.push(format!("p(0.5,0.25) = {} > 0.10", good.p));
    }
    if over.p < 0.40 {
        problems.push(format!("p(1,0) = {} < 0.40", over.p));
    }
    for w in ladder.windows(2) {
        if w[0].p > w[1].p + 2.0 * sigma(&w[0], &w[1]) {
            problems.push(format!("ordering broken: {} > {} + 2 sigma", w[0].p, w[1].p));
        }
    }
    if problems.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; {}", problems.join("; ")))
    }
}

fn bsc_pipeline(pl: &mut Pipeline) -> Outcome {
    let ch = "bsc(0.1)";
    let wide = pl.get(ch, 0.25, 0.6)?;
    let narrow = pl.get(ch, 0.25, 0.3)?;
    let gap = narrow.p - wide.p;
    let s = sigma(&wide, &narrow);
    let summary = format!("p(r=0.6)={:.3} p(r=0.3)={:.3} gap {:.1} sigma", wide.p, narrow.p, gap / s.max(1e-300));
    if gap >= 2.0 * s {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn region_projection() -> Outcome {
    let spec = load("p2p_bsc.json")?;
    let m = &spec.model;
    let table = m.entropy_table().map_err(|e| e.to_string())?;
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    let capacity = 1.0 - h(0.1);
    let mut found = Vec::new();
    for strict in [true, false] {
        let sys = build_constraints(&m.access, &m.sorted, &table, strict).map_err(|e| e.to_string())?.with_nonnegative_aux();
        let proj = fourier_motzkin_project(&sys, &aux_indices(&sys)).map_err(|e| e.to_string())?;
        let upper: Vec<f64> = proj.rows.iter().filter(|r| r.coeffs[0] > 0.0).map(|r| r.bound / r.coeffs[0]).collect();
        ensure(upper.len() == 1, || format!("expected one upper bound on R, found {upper:?}\n{proj}"))?;
        ensure((upper[0] - 0.5310).abs() <= 1e-3 && (upper[0] - capacity).abs() <= 1e-12, || {
            format!("projected bound {} vs {capacity}", upper[0])
        })?;
        found.push(upper[0]);
        for k in 0..21 {
            let r = k as f64 * 0.05;
            let lp = lp_feasible(&sys, &RatePoint::new(vec![r]).unwrap()).map_err(|e| e.to_string())?.is_feasible();
            ensure(proj.is_satisfied(&[r]) == lp, || format!("strict={strict}: grid point R={r} disagrees"))?;
        }
    }
    Ok(format!("R <= {:.6} (interior and closure), 42 grid points agree", found[0]))
}

fn bound_dominance(pl: &mut Pipeline) -> Outcome {
    let mut worst = f64::INFINITY;
    for (key, e) in &pl.runs {
        ensure(e.bound >= e.p - 3.0 * e.se, || format!("{key}: bound {} below p {} - 3 sigma", e.bound, e.p))?;
        worst = worst.min(e.bound - e.p);
    }
    ensure(pl.runs.len() == 6, || format!("only {} configurations evaluated", pl.runs.len()))?;
    Ok(format!("6 configurations (bounds evaluated with criteria 7 and 8), smallest margin {worst:.3}"))
}

fn determinism() -> Outcome {
    let mut payloads = Vec::new();
    for threads in [1, 3, 8] {
        let spec = validate_spec(&p2p_config("noiseless(2)", 0.5, 0.25, threads)).map_err(|e| format!("{e:?}"))?;
        let rec = run(Command::Simulate, &spec).map_err(|e| e.to_string())?;
        payloads.push((threads, rec.config_hash, rec.payload));
    }
    for (t, hash, p) in &payloads[1..] {
        ensure(*p == payloads[0].2, || format!("threads={t} payload differs"))?;
        ensure(*hash == payloads[0].1, || format!("threads={t} config hash differs"))?;
    }
    Ok(format!("p = {} for threads 1, 3, 8", payloads[0].2["p_hat"]))
}

fn main() -> ExitCode {
    let mut pl = Pipeline::default();
    let mut failures = 0;
    let mut report = |id: &str, name: &str, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        let (tag, detail) = match (&out, took <= limit) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over the {:.0?} limit", limit)),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if tag == "FAIL" {
            failures += 1;
        }
        println!("[{tag}] {id:>2} {name} ({:.3} s): {detail}", took.as_secs_f64());
    };
    let sec = Duration::from_secs;
    report("1", "examples fidelity", sec(1), &mut examples_fidelity);
    report("2", "lemma suite", sec(10), &mut lemma_suite);
    report("3", "markov round trip", sec(30), &mut markov_round_trip);
    report("4", "uniform hash property", sec(10), &mut uniform_hash_exact);
    report("5", "balanced coloring and collision resistance", sec(60), &mut hash_lemmas);
    report("6", "factor-two decision", sec(1), &mut decision_factor_two);
    report("7", "noiseless point-to-point pipeline", sec(120), &mut || noiseless_pipeline(&mut pl));
    report("8", "BSC point-to-point pipeline", sec(120), &mut || bsc_pipeline(&mut pl));
    report("9", "rate region projection", sec(5), &mut region_projection);
    report("10", "bound dominance", sec(120), &mut || bound_dominance(&mut pl));
    report("11", "determinism across thread counts", sec(120), &mut determinism);
    println!("acceptance: {} of 11 criteria passed", 11 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
