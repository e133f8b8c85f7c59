//! Acceptance checks, one result line per criterion.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use convstruct::baseline::run_reply_only_baseline;
use convstruct::corpus::{load_corpus, normalize_name, ParseOptions};
use convstruct::metrics::{
    evaluate_corpus, exact_match, exact_match_count, link_f1, nvi_score, one_to_one_overlap,
    Aggregation, EvalConfig,
};
use convstruct::stats::bootstrap::{bootstrap_ci, mean_of, BootstrapConfig};
use convstruct::stats::logit::{gradient, log_likelihood, multinomial_logit, LogitDesign};
use convstruct::stats::logodds::{
    calibrate_prior, default_grid, null_sd, weighted_logodds, DocumentCorpus, Group, TermCounts,
};
use convstruct::stats::roles::{Role, RoleObservation};
use convstruct::synth::{random_clip, random_partition};
use convstruct::{derive_threads, link_set, ParticipantKind, StructureRecord, ThreadPartition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Waived(String),
}

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

fn c1_identity() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut gold = BTreeMap::new();
    for i in 0..100 {
        let n = rng.random_range(2..=30);
        let k = rng.random_range(2..=8);
        let clip = random_clip(&mut rng, &format!("c{i:03}"), n, k);
        gold.insert(clip.clip_id.clone(), clip.gold.unwrap());
    }
    for (id, recs) in &gold {
        let one: BTreeMap<_, _> = [(id.clone(), recs.clone())].into_iter().collect();
        let r = evaluate_corpus(&one, &one, &EvalConfig::default()).map_err(|e| e.to_string())?;
        ensure(r.scores.to_array().iter().all(|&v| v == 100.0), || {
            format!("{id}: {:?}", r.scores)
        })?;
    }
    for aggregation in [Aggregation::Macro, Aggregation::Micro] {
        let cfg = EvalConfig {
            aggregation,
            ..Default::default()
        };
        let r = evaluate_corpus(&gold, &gold, &cfg).map_err(|e| e.to_string())?;
        ensure(r.scores.to_array().iter().all(|&v| v == 100.0), || {
            format!("{aggregation:?}: {:?}", r.scores)
        })?;
    }
    within(start.elapsed(), 5.0)?;
    Ok("100 clips, all seven metrics exactly 100".into())
}

fn partition_pairs(seed: u64) -> Vec<(ThreadPartition, ThreadPartition)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..500)
        .map(|_| {
            let n = rng.random_range(1..=12);
            let (a, b) = (rng.random_range(1..=6), rng.random_range(1..=6));
            (
                random_partition(&mut rng, n, a),
                random_partition(&mut rng, n, b),
            )
        })
        .collect()
}

fn sets(p: &ThreadPartition) -> Vec<BTreeSet<usize>> {
    p.clusters()
        .iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}

/// Best total overlap over every injective map from gold clusters into
/// predicted clusters (clusters may stay unmatched).
fn enumerate_injective(
    g: &[BTreeSet<usize>],
    p: &[BTreeSet<usize>],
    i: usize,
    used: &mut [bool],
) -> u64 {
    if i == g.len() {
        return 0;
    }
    let mut best = enumerate_injective(g, p, i + 1, used);
    for j in 0..p.len() {
        if !used[j] {
            used[j] = true;
            let w = g[i].intersection(&p[j]).count() as u64;
            best = best.max(w + enumerate_injective(g, p, i + 1, used));
            used[j] = false;
        }
    }
    best
}

fn c2_assignment() -> Check {
    let start = Instant::now();
    for (k, (g, p)) in partition_pairs(2).iter().enumerate() {
        let (gs, ps) = (sets(g), sets(p));
        let expected = enumerate_injective(&gs, &ps, 0, &mut vec![false; ps.len()]);
        let got = one_to_one_overlap(g, p).map_err(|e| e.to_string())?;
        ensure(got == expected, || format!("pair {k}: {got} != {expected}"))?;
    }
    within(start.elapsed(), 10.0)?;
    Ok("500 pairs equal to exhaustive enumeration".into())
}

fn entropy(p: &[BTreeSet<usize>], n: f64) -> f64 {
    p.iter()
        .map(|c| c.len() as f64 / n)
        .map(|q| -q * q.log2())
        .sum()
}

fn c3_entropy() -> Check {
    let mut worst = 0.0f64;
    for (g, p) in partition_pairs(3) {
        let (gs, ps) = (sets(&g), sets(&p));
        let n = g.n() as f64;
        let mut mi = 0.0;
        for a in &gs {
            for b in &ps {
                let k = a.intersection(b).count() as f64;
                if k > 0.0 {
                    mi += k / n * (k * n / (a.len() as f64 * b.len() as f64)).log2();
                }
            }
        }
        let vi = entropy(&gs, n) + entropy(&ps, n) - 2.0 * mi;
        let expected = if g.n() <= 1 {
            100.0
        } else {
            (100.0 * (1.0 - vi / n.log2())).clamp(0.0, 100.0)
        };
        let got = nvi_score(&g, &p).map_err(|e| e.to_string())?;
        worst = worst.max((got - expected).abs());
    }
    ensure(worst < 1e-9, || format!("max deviation {worst:e}"))?;
    Ok(format!("500 pairs, max deviation {worst:.1e}"))
}

fn c4_exact_match() -> Check {
    for (k, (g, p)) in partition_pairs(4).iter().enumerate() {
        let (gs, ps) = (sets(g), sets(p));
        let matched = gs.iter().filter(|c| ps.contains(c)).count();
        let got = exact_match_count(g, p).map_err(|e| e.to_string())?;
        ensure(got == matched, || format!("pair {k}: {got} != {matched}"))?;
        let prf = exact_match(g, p).map_err(|e| e.to_string())?;
        let (pr, rc) = (
            matched as f64 / ps.len() as f64,
            matched as f64 / gs.len() as f64,
        );
        let f1 = if pr + rc == 0.0 {
            0.0
        } else {
            2.0 * pr * rc / (pr + rc)
        };
        ensure(prf.f1 == f1, || format!("pair {k}: F1 {} != {f1}", prf.f1))?;
    }
    Ok("500 pairs equal to set-identity counting".into())
}

fn c5_worked_example() -> Check {
    let rec = |line, s: &str, r| StructureRecord::new(line, normalize_name(s).unwrap(), r);
    let rows = [
        rec(11, "Leonard", 11),
        rec(12, "Penny", 11),
        rec(13, "Penny", 13),
        rec(14, "Amy", 13),
    ];
    let t = derive_threads(&rows);
    ensure(t.clusters() == [vec![11, 12], vec![13, 14]], || {
        format!("threads {:?}", t.clusters())
    })?;

    let corpus = load_corpus(&common::fixture("example"), ParseOptions::default())
        .map_err(|e| e.to_string())?;
    let clip = &corpus.clips[0];
    let gold = clip.gold_records().map_err(|e| e.to_string())?;
    let pred = run_reply_only_baseline(clip);
    // gold links {(2,1), (4,3)}; predicted {(2,1), (3,2), (4,3)}: P = 2/3, R = 1
    let f1 = link_f1(&link_set(gold), &link_set(&pred)).f1;
    ensure((f1 - 0.8).abs() < 1e-12, || format!("link F1 {f1}"))?;
    Ok(format!(
        "threads {{11,12}},{{13,14}}; reply-only link F1 {f1:.4}"
    ))
}

fn c6_dataset() -> Outcome {
    let Some(dir) = std::env::var_os("CONVSTRUCT_DATASET_DIR") else {
        return Outcome::Waived("dataset not available (set CONVSTRUCT_DATASET_DIR)".into());
    };
    match dataset_check(Path::new(&dir)) {
        Ok(m) => Outcome::Pass(m),
        Err(m) => Outcome::Fail(m),
    }
}

fn dataset_check(dir: &Path) -> Check {
    let start = Instant::now();
    let corpus = load_corpus(dir, ParseOptions::default()).map_err(|e| e.to_string())?;
    let gold = corpus.annotations();
    let records: usize = gold.values().map(Vec::len).sum();
    let count = |f: fn(&StructureRecord) -> usize| gold.values().flatten().map(f).sum::<usize>();
    let addressees = count(|r| {
        r.addressees
            .iter()
            .filter(|p| p.kind() != ParticipantKind::None)
            .count()
    });
    let sides = count(|r| {
        r.side_participants
            .iter()
            .filter(|p| p.kind() != ParticipantKind::None)
            .count()
    });
    let totals = (records, addressees, sides);
    let totals_ok = totals == (4378, 5599, 3412);

    let pred: BTreeMap<_, _> = corpus
        .clips
        .iter()
        .filter(|c| c.gold.is_some())
        .map(|c| (c.clip_id.clone(), run_reply_only_baseline(c)))
        .collect();
    let target = [92.67, 83.34, 76.20, 31.93];
    let mut modes = Vec::new();
    let mut any_ok = false;
    for aggregation in [Aggregation::Micro, Aggregation::Macro] {
        let cfg = EvalConfig {
            aggregation,
            ..Default::default()
        };
        let s = evaluate_corpus(&gold, &pred, &cfg)
            .map_err(|e| e.to_string())?
            .scores;
        let got = [s.link_f1, s.nvi_score, s.one_to_one, s.exact_match_f1];
        let ok = got.iter().zip(&target).all(|(a, b)| (a - b).abs() <= 1.5);
        any_ok |= ok;
        modes.push(format!("{aggregation:?} {got:.2?}"));
    }
    within(start.elapsed(), 60.0)?;
    let summary = format!("totals {totals:?}; {}", modes.join("; "));
    ensure(totals_ok && any_ok, || summary.clone())?;
    Ok(summary)
}

fn null_corpus(seed: u64) -> DocumentCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<String> = (0..60).map(|i| format!("w{i}")).collect();
    // Zipf-like term weights shared by both groups
    let weights: Vec<f64> = (1..=vocab.len()).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let draw = |rng: &mut ChaCha8Rng| {
        let mut u = rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                return i;
            }
            u -= w;
        }
        weights.len() - 1
    };
    let mut items = Vec::new();
    for s in 0..4 {
        for _ in 0..200 {
            let len = rng.random_range(5..25);
            let text: Vec<&str> = (0..len).map(|_| vocab[draw(&mut rng)].as_str()).collect();
            let g = if rng.random_bool(0.5) {
                Group::A
            } else {
                Group::B
            };
            items.push((format!("show{s}"), g, text.join(" ")));
        }
    }
    DocumentCorpus::from_texts(
        items.iter().map(|(s, g, t)| (s.as_str(), *g, t.as_str())),
        5,
    )
}

fn c7_logodds() -> Check {
    let start = Instant::now();
    let corpus = null_corpus(7);
    let cal = calibrate_prior(&corpus, &default_grid(), 40, 70).map_err(|e| e.to_string())?;
    // fresh permutations, independent of the ones used for selection
    let sd = null_sd(&corpus, &[cal.c_star], 40, 71).map_err(|e| e.to_string())?[0];
    ensure((0.9..=1.1).contains(&sd), || {
        format!("C* = {}, null sd {sd}", cal.c_star)
    })?;

    let counts = corpus.term_counts().map_err(|e| e.to_string())?;
    let swapped = TermCounts::new(
        counts.terms.clone(),
        counts
            .shows
            .iter()
            .map(|s| (s.show_id.clone(), s.b.clone(), s.a.clone()))
            .collect(),
    )
    .map_err(|e| e.to_string())?;
    let (x, y) = (
        weighted_logodds(&counts, cal.c_star).map_err(|e| e.to_string())?,
        weighted_logodds(&swapped, cal.c_star).map_err(|e| e.to_string())?,
    );
    let exact = x
        .iter()
        .flatten()
        .zip(y.iter().flatten())
        .all(|(a, b)| a.delta == -b.delta && a.zeta == -b.zeta);
    ensure(exact, || "group swap does not negate exactly".into())?;
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "C* = {:.2}, null sd {sd:.3}, antisymmetry exact",
        cal.c_star
    ))
}

fn obs(spec: &[(Role, bool, &str, usize)]) -> Vec<RoleObservation> {
    spec.iter()
        .flat_map(|&(r, f, s, k)| std::iter::repeat_n(RoleObservation::new(r, f, s), k))
        .collect()
}

fn c8_regression() -> Check {
    let table = [
        (Role::Speaker, true, "s", 37),
        (Role::Addressee, true, "s", 14),
        (Role::Speaker, false, "s", 22),
        (Role::Addressee, false, "s", 41),
    ];
    let fit = multinomial_logit(&obs(&table)).map_err(|e| e.to_string())?;
    let cross = (14.0 * 22.0) / (37.0 * 41.0);
    let or = fit.outcomes[0].odds_ratio;
    ensure((or - cross).abs() < 1e-6, || {
        format!("OR {or} vs cross-product {cross}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let random: Vec<RoleObservation> = (0..400)
        .map(|_| {
            let role = Role::ALL[rng.random_range(0..3)];
            RoleObservation::new(
                role,
                rng.random_bool(0.4),
                ["a", "b", "c", "d"][rng.random_range(0..4)],
            )
        })
        .collect();
    let design = LogitDesign::new(&random).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let theta: Vec<f64> = (0..design.n_params())
            .map(|_| rng.random_range(-1.5..1.5))
            .collect();
        let g = gradient(&design, &theta);
        for i in 0..theta.len() {
            let (mut up, mut dn) = (theta.clone(), theta.clone());
            up[i] += 1e-5;
            dn[i] -= 1e-5;
            let fd = (log_likelihood(&design, &up) - log_likelihood(&design, &dn)) / 2e-5;
            worst = worst.max((fd - g[i]).abs() / g[i].abs().max(1.0));
        }
    }
    ensure(worst < 1e-4, || {
        format!("finite-difference relative error {worst:e}")
    })?;

    let mut balanced = Vec::new();
    for (s, k) in [("a", 2), ("b", 3), ("c", 5)] {
        for f in [true, false] {
            balanced.push((Role::Speaker, f, s, 5 * k));
            balanced.push((Role::Addressee, f, s, 3 * k));
            balanced.push((Role::SideParticipant, f, s, k + 1));
        }
    }
    let fit = multinomial_logit(&obs(&balanced)).map_err(|e| e.to_string())?;
    for o in &fit.outcomes {
        ensure((o.odds_ratio - 1.0).abs() < 1e-6, || {
            format!("{:?} OR {}", o.role, o.odds_ratio)
        })?;
    }
    Ok(format!(
        "2x2 OR {or:.6}; gradient rel. error {worst:.1e}; balanced OR 1.000000"
    ))
}

fn c9_coverage() -> Check {
    let start = Instant::now();
    let mut covered = 0;
    let trials = 1000;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + t);
        let sample: Vec<f64> = (0..200)
            .map(|_| f64::from(u8::from(rng.random_bool(0.5))))
            .collect();
        let cfg = BootstrapConfig {
            resamples: 10_000,
            level: 0.95,
            seed: t,
        };
        let iv = bootstrap_ci(&sample, mean_of, &cfg).map_err(|e| e.to_string())?;
        covered += usize::from(iv.lo <= 0.5 && 0.5 <= iv.hi);
    }
    let rate = covered as f64 / trials as f64;
    ensure((0.93..=0.97).contains(&rate), || format!("coverage {rate}"))?;
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "coverage {:.1}% over {trials} trials",
        rate * 100.0
    ))
}

fn c10_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = tmp.path().join("corpus");
    common::write_corpus(&corpus, 12, &["alpha", "beta", "gamma"], 10);
    let c = corpus.to_str().unwrap();
    let pred = tmp.path().join("pred.json");
    let p = pred.to_str().unwrap();
    let out = common::run(&["baseline", c, "--mode", "reply-only", "--out", p]);
    ensure(out.status.success(), || {
        format!("baseline failed: {}", String::from_utf8_lossy(&out.stderr))
    })?;
    let manifest = tmp.path().join("agree.json");
    std::fs::write(&manifest, r#"{"x": "corpus", "y": "pred.json"}"#).map_err(|e| e.to_string())?;
    let m = manifest.to_str().unwrap();

    let commands: Vec<Vec<&str>> = vec![
        vec!["validate", c],
        vec!["evaluate", c, p, "--bootstrap", "300", "--seed", "7"],
        vec![
            "evaluate",
            c,
            p,
            "--aggregate",
            "micro",
            "--format",
            "table",
            "--bootstrap",
            "100",
        ],
        vec!["agree", m],
        vec!["baseline", c, "--mode", "reply-only"],
        vec![
            "analyze",
            "threads",
            c,
            "--bootstrap",
            "300",
            "--permutations",
            "300",
        ],
        vec!["analyze", "roles", c],
        vec![
            "analyze",
            "logodds",
            c,
            "--permutations",
            "4",
            "--min-count",
            "3",
        ],
    ];
    for args in &commands {
        let mut outputs = Vec::new();
        for threads in ["1", "1", "3"] {
            let mut full = args.clone();
            full.extend(["--threads", threads]);
            let o = common::run(&full);
            ensure(o.status.success(), || {
                format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr))
            })?;
            outputs.push(o.stdout);
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), || {
            format!("{args:?} output differs between runs")
        })?;
    }
    Ok(format!(
        "{} commands byte-identical across runs and thread counts",
        commands.len()
    ))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 identity suite", || from(c1_identity())),
        ("2 assignment oracle", || from(c2_assignment())),
        ("3 entropy oracle", || from(c3_entropy())),
        ("4 exact-match oracle", || from(c4_exact_match())),
        ("5 worked examples", || from(c5_worked_example())),
        ("6 dataset reproduction", c6_dataset),
        ("7 log-odds calibration", || from(c7_logodds())),
        ("8 regression oracle", || from(c8_regression())),
        ("9 bootstrap coverage", || from(c9_coverage())),
        ("10 determinism", || from(c10_determinism())),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let start = Instant::now();
        let (tag, msg) = match f() {
            Outcome::Pass(m) => ("PASS", m),
            Outcome::Waived(m) => ("WAIVED", m),
            Outcome::Fail(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!(
            "{tag:<6} criterion {name:<24} {msg} ({:.2}s)",
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

fn from(c: Check) -> Outcome {
    match c {
        Ok(m) => Outcome::Pass(m),
        Err(m) => Outcome::Fail(m),
    }
}
