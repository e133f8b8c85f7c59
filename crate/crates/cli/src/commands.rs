use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use convstruct::agreement::{pairwise_agreement, AgreementConfig, AnnotatorBatch};
use convstruct::baseline::{
    parse_faces_json, parse_words_tsv, run_baseline, run_reply_only_baseline, FaceTrack,
};
use convstruct::corpus::{
    bundle_to_json, load_annotations, load_corpus, load_gender_map, validate_clip,
    validate_records, Code, Corpus, Diagnostic, ParseOptions, Severity,
};
use convstruct::metrics::{evaluate_corpus, EvalConfig, METRIC_NAMES};
use convstruct::stats::dynamics::{gender_thread_shares, DynamicsConfig, ShareSummary};
use convstruct::stats::features::{correlate_features, parse_feature_csv, DEFAULT_TARGETS};
use convstruct::stats::logit::multinomial_logit;
use convstruct::stats::logodds::{calibrate_prior, default_grid, log_odds, DocumentCorpus, Group};
use convstruct::stats::roles::{role_distributions, role_observations, Role};
use convstruct::threads::EventOptions;
use convstruct::{BootstrapConfig, Error as CoreError, GenderMap, ParticipantKind};

use crate::manifest::RunManifest;
use crate::render::{interval, num, p_value, Table};
use crate::{Analysis, BaselineMode, Format, GlobalOpts};

/// 2 for I/O failures anywhere in the cause chain, 1 otherwise.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    let io = e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>().is_some()
            || c.downcast_ref::<CoreError>().is_some_and(CoreError::is_io)
    });
    if io {
        2
    } else {
        1
    }
}

fn parse_opts(g: &GlobalOpts) -> ParseOptions {
    ParseOptions { strict: g.strict }
}

fn config_json(g: &GlobalOpts, extra: Value) -> Value {
    let mut m = serde_json::Map::new();
    m.insert(
        "aggregation".into(),
        json!(convstruct::Aggregation::from(g.aggregate)),
    );
    m.insert("bootstrap".into(), json!(g.bootstrap));
    m.insert("level".into(), json!(g.level));
    m.insert("filter_nondialogic".into(), json!(g.filter_nondialogic));
    m.insert("strict".into(), json!(g.strict));
    if let Value::Object(e) = extra {
        m.extend(e);
    }
    Value::Object(m)
}

fn bootstrap_config(g: &GlobalOpts, resamples: usize) -> Result<BootstrapConfig> {
    let cfg = BootstrapConfig {
        resamples,
        level: g.level,
        seed: g.seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn manifest_header(m: &RunManifest) -> String {
    let mut s = format!(
        "# {} {} ({}), seed {}\n",
        m.tool, m.version, m.command, m.seed
    );
    for i in &m.inputs {
        s.push_str(&format!("# {} {} sha256:{}\n", i.role, i.path, i.sha256));
    }
    s
}

fn emit(
    g: &GlobalOpts,
    manifest: &RunManifest,
    report: Value,
    table: impl FnOnce() -> String,
) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match g.format {
        Format::Json => {
            let doc = json!({ "manifest": manifest, "report": report });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
        Format::Table => {
            write!(out, "{}{}", manifest_header(manifest), table())?;
        }
    }
    Ok(())
}

fn failing(d: &Diagnostic, strict: bool) -> bool {
    d.is_error() || (strict && d.severity == Severity::Warning)
}

fn load_error_diagnostic(path: &Path, e: &CoreError) -> Vec<Diagnostic> {
    let clip_id = path.display().to_string();
    match e {
        CoreError::Validation(vs) => vs
            .iter()
            .map(|v| Diagnostic {
                clip_id: clip_id.clone(),
                line_idx: v.line_idx,
                other_line: None,
                code: v.code,
                severity: Severity::Error,
                message: v.message.clone(),
            })
            .collect(),
        other => vec![Diagnostic {
            clip_id,
            line_idx: None,
            other_line: None,
            code: Code::Malformed,
            severity: Severity::Error,
            message: other.to_string(),
        }],
    }
}

/// Loads a corpus and fails with the diagnostics on standard error when it
/// does not validate.
fn load_valid(g: &GlobalOpts, role: &str, path: &Path) -> Result<Corpus> {
    let corpus = load_corpus(path, parse_opts(g))
        .with_context(|| format!("loading {role} {}", path.display()))?;
    let bad: Vec<Diagnostic> = corpus
        .clips
        .iter()
        .flat_map(validate_clip)
        .filter(|d| failing(d, g.strict))
        .collect();
    if !bad.is_empty() {
        let mut err = std::io::stderr().lock();
        for d in &bad {
            let _ = writeln!(err, "{}", serde_json::to_string(d)?);
        }
        bail!(
            "{role} {} failed validation with {} problem(s)",
            path.display(),
            bad.len()
        );
    }
    Ok(corpus)
}

pub fn validate(g: &GlobalOpts, paths: &[PathBuf]) -> Result<ExitCode> {
    let mut manifest = RunManifest::new("validate", g.seed, config_json(g, json!({})));
    let mut diagnostics = Vec::new();
    let mut clips = 0;
    for p in paths {
        manifest.add_input("corpus", p)?;
        match load_corpus(p, parse_opts(g)) {
            Ok(c) => {
                clips += c.clips.len();
                diagnostics.extend(c.clips.iter().flat_map(validate_clip));
            }
            Err(e) if e.is_io() => return Err(e.into()),
            Err(e) => diagnostics.extend(load_error_diagnostic(p, &e)),
        }
    }
    let errors = diagnostics.iter().filter(|d| d.is_error()).count();
    let warnings = diagnostics.len() - errors;
    let failed = diagnostics.iter().any(|d| failing(d, g.strict));
    let mut out = std::io::stdout().lock();
    match g.format {
        Format::Json => {
            for d in &diagnostics {
                writeln!(out, "{}", serde_json::to_string(d)?)?;
            }
            let summary = json!({
                "summary": { "clips": clips, "errors": errors, "warnings": warnings, "ok": !failed },
                "manifest": manifest,
            });
            writeln!(out, "{}", serde_json::to_string(&summary)?)?;
        }
        Format::Table => {
            write!(out, "{}", manifest_header(&manifest))?;
            let mut t = Table::new(["clip", "line", "severity", "code", "message"]);
            for d in &diagnostics {
                t.row([
                    d.clip_id.clone(),
                    d.line_idx.map_or("-".into(), |l| l.to_string()),
                    format!("{:?}", d.severity).to_lowercase(),
                    d.code.as_str().to_string(),
                    d.message.clone(),
                ]);
            }
            write!(out, "{}", t.render())?;
            writeln!(
                out,
                "{clips} clip(s), {errors} error(s), {warnings} warning(s)"
            )?;
        }
    }
    Ok(if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

pub fn evaluate(g: &GlobalOpts, gold: &Path, pred: &Path) -> Result<ExitCode> {
    let config = EvalConfig {
        aggregation: g.aggregate.into(),
        filter_nondialogic: g.filter_nondialogic,
        bootstrap: g.bootstrap.map(|n| bootstrap_config(g, n)).transpose()?,
    };
    let mut manifest = RunManifest::new("evaluate", g.seed, config_json(g, json!({})));
    manifest.add_input("gold", gold)?;
    manifest.add_input("pred", pred)?;
    let gold_corpus = load_valid(g, "gold", gold)?;
    let pred_corpus = load_valid(g, "predictions", pred)?;
    let report = evaluate_corpus(
        &gold_corpus.annotations(),
        &pred_corpus.annotations(),
        &config,
    )?;
    emit(g, &manifest, report.to_json(), || report.to_table())?;
    Ok(ExitCode::SUCCESS)
}

fn read_agree_manifest(path: &Path) -> Result<Vec<(String, PathBuf)>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value =
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    let map = match value.get("annotators").unwrap_or(&value) {
        Value::Object(m) => m.clone(),
        _ => bail!(
            "{}: expected an object mapping annotator ids to paths",
            path.display()
        ),
    };
    let base = path.parent().unwrap_or(Path::new("."));
    map.into_iter()
        .map(|(id, v)| {
            let p = v.as_str().ok_or_else(|| {
                anyhow!(
                    "{}: path for annotator {id} is not a string",
                    path.display()
                )
            })?;
            Ok((id, base.join(p)))
        })
        .collect()
}

pub fn agree(g: &GlobalOpts, manifest_path: &Path) -> Result<ExitCode> {
    let mut manifest = RunManifest::new("agree", g.seed, config_json(g, json!({})));
    manifest.add_input("manifest", manifest_path)?;
    let entries = read_agree_manifest(manifest_path)?;
    let mut batches = Vec::new();
    for (id, path) in entries {
        manifest.add_input(&format!("annotator:{id}"), &path)?;
        let set =
            load_annotations(&path, parse_opts(g)).with_context(|| format!("annotator {id}"))?;
        for (clip, records) in &set.clips {
            if let Some(v) = validate_records(records).first() {
                bail!("annotator {id}, clip {clip}: {v}");
            }
        }
        batches.push(AnnotatorBatch {
            annotator_id: id,
            records_by_clip: set.clips,
        });
    }
    let report = pairwise_agreement(
        &batches,
        AgreementConfig {
            aggregation: g.aggregate.into(),
            filter_nondialogic: g.filter_nondialogic,
        },
    )?;
    let mut value = serde_json::to_value(&report)?;
    value["symmetrization"] =
        json!("each pair scored in both directions and averaged; pairs weighted equally");
    emit(g, &manifest, value, || {
        let mut headers = vec!["pair".to_string(), "clips".to_string()];
        headers.extend(METRIC_NAMES.iter().map(|s| s.to_string()));
        let mut t = Table::new(headers);
        for p in &report.per_pair {
            let mut row = vec![format!("{}-{}", p.a, p.b), p.shared_clips.to_string()];
            row.extend(p.scores.to_array().iter().map(|v| num(*v)));
            t.row(row);
        }
        let mut row = vec!["overall".to_string(), "-".to_string()];
        row.extend(report.overall.to_array().iter().map(|v| num(*v)));
        t.row(row);
        t.render()
    })?;
    Ok(ExitCode::SUCCESS)
}

fn sidecar_files(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let p = e?.path();
        if p.file_name()
            .is_some_and(|n| n.to_string_lossy().ends_with(suffix))
        {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

type TracksByClip = BTreeMap<String, Vec<FaceTrack>>;

fn face_tracks(
    corpus_path: &Path,
    faces: Option<&Path>,
) -> Result<(TracksByClip, Option<PathBuf>)> {
    let source = match faces {
        Some(p) => p.to_path_buf(),
        None if corpus_path.is_dir() => corpus_path.to_path_buf(),
        None => bail!("full mode needs face tracks: pass --faces"),
    };
    let files = if source.is_dir() {
        sidecar_files(&source, ".faces.json")?
    } else {
        vec![source.clone()]
    };
    if files.is_empty() {
        bail!(
            "full mode needs face tracks: no .faces.json files in {}",
            source.display()
        );
    }
    let mut by_clip: BTreeMap<String, Vec<FaceTrack>> = BTreeMap::new();
    for f in files {
        let bytes = fs::read(&f).with_context(|| format!("reading {}", f.display()))?;
        for t in parse_faces_json(&bytes).with_context(|| f.display().to_string())? {
            by_clip.entry(t.clip_id.clone()).or_default().push(t);
        }
    }
    Ok((by_clip, Some(source)))
}

fn words_path(
    corpus_path: &Path,
    words: Option<&Path>,
    clip_id: &str,
    n_clips: usize,
) -> Result<PathBuf> {
    let name = format!("{clip_id}.words.tsv");
    let p = match words {
        Some(w) if w.is_dir() => w.join(name),
        Some(w) if n_clips == 1 => w.to_path_buf(),
        Some(w) => bail!(
            "{} is a single file but the corpus has {n_clips} clips",
            w.display()
        ),
        None if corpus_path.is_dir() => corpus_path.join(name),
        None => bail!("full mode needs word timings: pass --words"),
    };
    if !p.exists() {
        bail!(
            "no word timings for clip {clip_id}: {} not found",
            p.display()
        );
    }
    Ok(p)
}

pub fn baseline(
    g: &GlobalOpts,
    corpus_path: &Path,
    mode: BaselineMode,
    faces: Option<&Path>,
    words: Option<&Path>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let mode_name = match mode {
        BaselineMode::Full => "full",
        BaselineMode::ReplyOnly => "reply-only",
    };
    let mut manifest = RunManifest::new(
        "baseline",
        g.seed,
        config_json(g, json!({ "mode": mode_name })),
    );
    manifest.add_input("corpus", corpus_path)?;
    let corpus = load_corpus(corpus_path, parse_opts(g))
        .with_context(|| format!("loading {}", corpus_path.display()))?;
    let mut bundle = BTreeMap::new();
    match mode {
        BaselineMode::ReplyOnly => {
            for c in &corpus.clips {
                bundle.insert(c.clip_id.clone(), run_reply_only_baseline(c));
            }
        }
        BaselineMode::Full => {
            let (tracks, source) = face_tracks(corpus_path, faces)?;
            if let Some(s) = &source {
                manifest.add_input("faces", s)?;
            }
            for c in &corpus.clips {
                if c.utterances.is_empty() {
                    bail!(
                        "clip {} has no transcript; full mode needs utterance timings",
                        c.clip_id
                    );
                }
                let wp = words_path(corpus_path, words, &c.clip_id, corpus.clips.len())?;
                let bytes = fs::read(&wp).with_context(|| format!("reading {}", wp.display()))?;
                let toks = parse_words_tsv(&bytes).with_context(|| wp.display().to_string())?;
                let empty = Vec::new();
                let t = tracks.get(&c.clip_id).unwrap_or(&empty);
                bundle.insert(c.clip_id.clone(), run_baseline(c, t, &toks));
            }
            if let Some(w) = words {
                manifest.add_input("words", w)?;
            }
        }
    }
    let text = bundle_to_json(&bundle) + "\n";
    match out {
        Some(p) => {
            fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
            let doc = json!({
                "manifest": manifest,
                "report": {
                    "mode": mode_name,
                    "clips": bundle.len(),
                    "out": p.display().to_string(),
                    "line_1_window": "[1, 1]",
                },
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn genders_for(
    corpus: &Corpus,
    corpus_path: &Path,
    gender: Option<&Path>,
) -> Result<(GenderMap, PathBuf)> {
    let path = gender
        .map(Path::to_path_buf)
        .unwrap_or_else(|| corpus_path.join("participants.tsv"));
    let map = match gender {
        Some(p) => {
            if !p.exists() {
                bail!("gender metadata {} not found", p.display());
            }
            load_gender_map(p)?
        }
        None => corpus.gender.clone(),
    };
    if map.is_empty() {
        bail!("no gender metadata: {} is missing or empty", path.display());
    }
    Ok((map, path))
}

fn annotated(corpus: Corpus) -> Vec<convstruct::Clip> {
    corpus
        .clips
        .into_iter()
        .filter(|c| c.gold.is_some())
        .collect()
}

fn share_row(t: &mut Table, name: &str, s: &ShareSummary) {
    t.row([
        name.to_string(),
        s.gendered_events.to_string(),
        interval(s.raw_share.as_ref(), 100.0),
        interval(s.mean_delta.as_ref(), 100.0),
        p_value(s.p_value),
    ]);
}

pub fn analyze(g: &GlobalOpts, a: Analysis) -> Result<ExitCode> {
    match a {
        Analysis::Threads {
            corpus,
            gender,
            permutations,
            include_nondialogic,
        } => {
            let cfg = DynamicsConfig {
                events: EventOptions {
                    exclude_nondialogic: !include_nondialogic,
                },
                bootstrap: bootstrap_config(g, g.bootstrap.unwrap_or(10_000))?,
                permutations,
            };
            let extra = json!({
                "permutations": permutations,
                "exclude_nondialogic_events": !include_nondialogic,
                "resamples": cfg.bootstrap.resamples,
                "significance": "sign-flip permutation over clips",
            });
            let mut manifest = RunManifest::new("analyze threads", g.seed, config_json(g, extra));
            manifest.add_input("corpus", &corpus)?;
            let c = load_corpus(&corpus, parse_opts(g))?;
            let (genders, gpath) = genders_for(&c, &corpus, gender.as_deref())?;
            if gender.is_some() {
                manifest.add_input("gender", &gpath)?;
            }
            let shares = gender_thread_shares(&annotated(c), &genders, &cfg)?;
            emit(g, &manifest, serde_json::to_value(&shares)?, || {
                let mut t = Table::new(["event", "n", "female share %", "mean delta (pts)", "p"]);
                share_row(&mut t, "start", &shares.start);
                share_row(&mut t, "hold", &shares.hold);
                t.render()
            })?;
        }
        Analysis::Roles { corpus, gender } => {
            let mut manifest = RunManifest::new("analyze roles", g.seed, config_json(g, json!({})));
            manifest.add_input("corpus", &corpus)?;
            let c = load_corpus(&corpus, parse_opts(g))?;
            let (genders, gpath) = genders_for(&c, &corpus, gender.as_deref())?;
            if gender.is_some() {
                manifest.add_input("gender", &gpath)?;
            }
            let obs = role_observations(&annotated(c), &genders)?;
            let dist = role_distributions(&obs);
            for w in &dist.warnings {
                eprintln!("warning: {w}");
            }
            let fit = multinomial_logit(&obs)?;
            let report = json!({ "distributions": dist, "logit": fit });
            emit(g, &manifest, report, || {
                let mut t = Table::new(["role", "P(female|role)", "P(male|role)", "n"]);
                for r in Role::ALL {
                    if let Some(p) = dist.gender_given_role.get(&r) {
                        let n = dist.counts[&r];
                        t.row([
                            r.as_str().to_string(),
                            num(p[0]),
                            num(p[1]),
                            (n[0] + n[1]).to_string(),
                        ]);
                    }
                }
                let mut u = Table::new(["gender", "speaker", "addressee", "side_participant"]);
                for (gname, row) in &dist.role_given_gender {
                    u.row([gname.clone(), num(row[0]), num(row[1]), num(row[2])]);
                }
                let mut v = Table::new(["outcome vs speaker", "OR(female)", "95% CI", "p"]);
                for o in &fit.outcomes {
                    let (b, se) = (o.female.estimate, o.female.std_error);
                    v.row([
                        o.role.as_str().to_string(),
                        num(o.odds_ratio),
                        format!(
                            "[{:.2}, {:.2}]",
                            (b - 1.96 * se).exp(),
                            (b + 1.96 * se).exp()
                        ),
                        p_value(Some(o.female.p)),
                    ]);
                }
                format!("{}\n{}\n{}", t.render(), u.render(), v.render())
            })?;
        }
        Analysis::Logodds {
            corpus,
            c_star,
            permutations,
            min_count,
            top,
        } => {
            let extra = json!({
                "c_star": c_star,
                "permutations": permutations,
                "min_count": min_count,
                "groups": { "a": "no side-participants", "b": "side-participants present" },
                "calibration_unit": "utterance, permuted within show",
                "calibration_grid": "10^0..10^4, four points per decade",
            });
            let mut manifest = RunManifest::new("analyze logodds", g.seed, config_json(g, extra));
            manifest.add_input("corpus", &corpus)?;
            let c = load_corpus(&corpus, parse_opts(g))?;
            let mut items = Vec::new();
            for clip in annotated(c) {
                if clip.utterances.is_empty() {
                    bail!("clip {} has no transcript to tokenize", clip.clip_id);
                }
                for r in clip.gold.as_deref().unwrap_or_default() {
                    if g.filter_nondialogic && r.is_nondialogic() {
                        continue;
                    }
                    let Some(u) = clip.utterance(r.line_idx) else {
                        continue;
                    };
                    let side = r
                        .side_participants
                        .iter()
                        .any(|p| p.kind() != ParticipantKind::None);
                    items.push((
                        clip.show_id.clone(),
                        if side { Group::B } else { Group::A },
                        u.text.clone(),
                    ));
                }
            }
            let docs = DocumentCorpus::from_texts(
                items.iter().map(|(s, gr, t)| (s.as_str(), *gr, t.as_str())),
                min_count,
            );
            if docs.vocab.is_empty() {
                bail!("no term reaches the minimum count of {min_count}");
            }
            let calibration = match c_star {
                Some(_) => None,
                None => Some(calibrate_prior(
                    &docs,
                    &default_grid(),
                    permutations,
                    g.seed,
                )?),
            };
            let chosen = c_star
                .or(calibration.as_ref().map(|c| c.c_star))
                .expect("one source");
            let result = log_odds(&docs.term_counts()?, chosen)?;
            #[derive(Serialize)]
            struct Report<'a> {
                calibration: &'a Option<convstruct::stats::logodds::Calibration>,
                result: &'a convstruct::stats::logodds::LogOddsResult,
            }
            let report = serde_json::to_value(Report {
                calibration: &calibration,
                result: &result,
            })?;
            emit(g, &manifest, report, || {
                let mut t = Table::new(["direction", "term", "Z"]);
                for r in result.terms.iter().take(top) {
                    t.row(["private", r.term.as_str(), &num(r.z)]);
                }
                for r in result.terms.iter().rev().take(top) {
                    t.row(["side-participant", r.term.as_str(), &num(r.z)]);
                }
                format!(
                    "C* = {}, {} terms, {} shows\n{}",
                    result.c_star,
                    result.terms.len(),
                    result.show_ids.len(),
                    t.render()
                )
            })?;
        }
        Analysis::Correlate { features, targets } => {
            let mut manifest = RunManifest::new(
                "analyze correlate",
                g.seed,
                config_json(g, json!({ "targets": targets })),
            );
            manifest.add_input("features", &features)?;
            let bytes =
                fs::read(&features).with_context(|| format!("reading {}", features.display()))?;
            let table = parse_feature_csv(&bytes)?;
            let targets: Vec<&str> = if targets.is_empty() {
                DEFAULT_TARGETS
                    .iter()
                    .copied()
                    .filter(|t| table.columns.iter().any(|c| c == t))
                    .collect()
            } else {
                targets.iter().map(String::as_str).collect()
            };
            if targets.is_empty() {
                bail!(
                    "{} has no f1_* score columns; pass --target",
                    features.display()
                );
            }
            let report = correlate_features(&table, &targets)?;
            for (f, t, why) in &report.skipped {
                eprintln!("warning: {f} vs {t} skipped: {why}");
            }
            emit(g, &manifest, serde_json::to_value(&report)?, || {
                let mut t = Table::new(["feature", "target", "rho", "p", "signed R2"]);
                for r in &report.results {
                    t.row([
                        r.feature.clone(),
                        r.target.clone(),
                        num(r.rho),
                        p_value(Some(r.p)),
                        num(r.signed_r2),
                    ]);
                }
                t.render()
            })?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
