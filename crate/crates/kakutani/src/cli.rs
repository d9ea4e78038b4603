//! The `fbar` command line: every subcommand writes its artifacts plus a run
//! manifest (`<output>.manifest.json`, or `manifest.json` inside an output
//! directory) recording argv, parameters, seed, input digests and version.
//!
//! Exit codes: 0 success, 1 validation failure or runtime error, 2 usage error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::circular::CircularSystem;
use crate::codes::{audit_code, sample_audit_inputs, OracleCode, SegmentMap, StationaryCode};
use crate::construction::{build_construction_sequence, load_stages, save_stages, ConstructionParams, MANIFEST_NAME};
use crate::error::{Error, Result};
use crate::fbar::{fbar, format_rational, parse_rational, SymbolString};
use crate::feldman::{build_pattern, separation_report, FeldmanSpec};
use crate::involutions::GroupElement;
use crate::io::{file_digest, format_words, read_words, write_json, InputDigest, RunManifest};
use crate::shiftspace::{check_r9, geometric_tv_distance, induced_return_times, sample_point_with_budget, shading_mean};
use crate::trees::{canonical_enumeration, TreeApproximation};

#[derive(Debug, Parser, Serialize)]
#[command(name = "fbar", version, about = "f̄ metric, Feldman patterns and tree-indexed construction sequences")]
struct Cli {
    /// Worker threads for parallel sections (outputs do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Cap in bytes on generated stage tables and materialized strings.
    #[arg(long, global = true, default_value_t = 1 << 30)]
    budget: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
enum Command {
    /// Write a tree approximation file.
    Tree(TreeArgs),
    /// Build a construction sequence into a stage directory.
    Build(BuildArgs),
    /// Validate every stage of a stage directory.
    Validate(ValidateArgs),
    /// f̄ distances between the words of two word files.
    Dist(DistArgs),
    /// Emit one Feldman pattern.
    Feldman(FeldmanArgs),
    /// Sampled f̄ separation between Feldman pattern types.
    FeldmanSep(FeldmanSepArgs),
    /// Circularize a stage directory.
    Circ(CircArgs),
    /// Sample a (shaded) segment of a point of the shift space.
    Sample(SampleArgs),
    /// Return times to A = {υ_0 = 0} in a shaded segment.
    Returns(ReturnsArgs),
    /// Audit a code against reversed stage words.
    Audit(AuditArgs),
    /// Summarize a stage directory (sizes, validation, R9 proportions).
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
struct TreeArgs {
    /// chain | full | trivial | random | nodes
    #[arg(long, default_value = "chain")]
    kind: String,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 2)]
    arity: u32,
    /// Horizon for `trivial`, `random` and `nodes`.
    #[arg(long, default_value_t = 3)]
    horizon: u64,
    /// Inclusion probability for `random`.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Nodes for `nodes`, e.g. "0;1;0.0" (the root is implied).
    #[arg(long)]
    nodes: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct BuildArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long = "n-max")]
    n_max: usize,
    #[arg(long)]
    params: Option<PathBuf>,
    /// Overrides the seed of the parameter file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ValidateArgs {
    #[arg(long)]
    stages: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct DistArgs {
    a: PathBuf,
    b: PathBuf,
    /// `all` or `sampled:N`
    #[arg(long, default_value = "all")]
    pairs: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SpecArgs {
    #[arg(long = "T", default_value_t = 1)]
    t: u64,
    #[arg(long = "N")]
    n: u64,
    #[arg(long = "M")]
    m: u32,
    #[arg(long = "L", default_value_t = 1)]
    l: u64,
    /// Word file with N blocks of length L; distinct single symbols when absent.
    #[arg(long)]
    blocks: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct FeldmanArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long = "type")]
    r: u32,
    #[arg(long)]
    emit: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct FeldmanSepArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Minimum substring length; defaults to T·N^{2M+2}·L.
    #[arg(long = "min-len")]
    min_len: Option<u64>,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct CircArgs {
    #[arg(long)]
    stages: PathBuf,
    /// Comma-separated l_n ≥ 2, one per stage transition.
    #[arg(long = "l-seq")]
    l_seq: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SampleArgs {
    #[arg(long)]
    stages: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    shaded: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ReturnsArgs {
    segment: PathBuf,
    /// Tail cap of the geometric comparison.
    #[arg(long, default_value_t = 20)]
    cap: u64,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct AuditArgs {
    /// A code JSON file, `builtin:identity`, or `oracle:<node>` (e.g. `oracle:0` plants η_{g_(0)}).
    #[arg(long)]
    code: String,
    #[arg(long)]
    stages: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value = "1/20")]
    epsilon: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ReportArgs {
    #[arg(long)]
    stages: PathBuf,
    /// Sampled shadings per R9 check.
    #[arg(long, default_value_t = 200)]
    r9_samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Outcome of a subcommand before manifest emission.
struct Outcome {
    outputs: Vec<PathBuf>,
    inputs: Vec<PathBuf>,
    seed: Option<u64>,
    manifest_path: PathBuf,
    failed: bool,
}

fn manifest_for_file(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(threads) = cli.threads {
        // The global pool can be configured once per process; later calls keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    // The program name is normalized so manifests do not depend on the install path.
    let argv_strings: Vec<String> = std::iter::once("fbar".to_string())
        .chain(argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()))
        .collect();
    match dispatch(&cli).and_then(|outcome| write_manifest(&cli, &argv_strings, outcome)) {
        Ok(failed) => i32::from(failed),
        Err(Error::InvalidInput(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn write_manifest(cli: &Cli, argv: &[String], outcome: Outcome) -> Result<bool> {
    let inputs = outcome
        .inputs
        .iter()
        .map(|p| Ok(InputDigest { path: p.display().to_string(), sha256: file_digest(p)? }))
        .collect::<Result<Vec<_>>>()?;
    let command = argv.get(1).cloned().unwrap_or_default();
    let manifest = RunManifest {
        command,
        argv: argv.to_vec(),
        params: serde_json::to_value(cli)?,
        seed: outcome.seed,
        inputs,
        outputs: outcome.outputs.iter().map(|p| p.display().to_string()).collect(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    manifest.write(&outcome.manifest_path)?;
    Ok(outcome.failed)
}

fn symbol_budget(cli: &Cli) -> u64 {
    (cli.budget / 4).max(1)
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Tree(a) => tree(a),
        Command::Build(a) => build(cli, a),
        Command::Validate(a) => validate(a),
        Command::Dist(a) => dist(a),
        Command::Feldman(a) => feldman(cli, a),
        Command::FeldmanSep(a) => feldman_sep(a),
        Command::Circ(a) => circ(cli, a),
        Command::Sample(a) => sample(cli, a),
        Command::Returns(a) => returns(a),
        Command::Audit(a) => audit(cli, a),
        Command::Report(a) => report(a),
    }
}

fn file_outcome(out: &Path, inputs: Vec<PathBuf>, seed: Option<u64>) -> Outcome {
    Outcome { outputs: vec![out.to_path_buf()], inputs, seed, manifest_path: manifest_for_file(out), failed: false }
}

fn parse_node(text: &str) -> Result<Vec<u32>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(['.', ','])
        .map(|t| t.trim().parse::<u32>().map_err(|_| Error::InvalidInput(format!("bad node entry {t:?}"))))
        .collect()
}

fn tree(a: &TreeArgs) -> Result<Outcome> {
    let t = match a.kind.as_str() {
        "chain" => TreeApproximation::chain(a.depth),
        "full" => TreeApproximation::full(a.arity, a.depth),
        "trivial" => TreeApproximation::trivial(a.horizon),
        "random" => TreeApproximation::random(&mut ChaCha8Rng::seed_from_u64(a.seed), a.horizon, a.p),
        "nodes" => {
            let mut nodes = vec![Vec::new()];
            for part in a.nodes.as_deref().unwrap_or("").split(';').filter(|p| !p.trim().is_empty()) {
                nodes.push(parse_node(part)?);
            }
            TreeApproximation::from_nodes(&nodes, a.horizon)?
        }
        other => return Err(Error::InvalidInput(format!("unknown tree kind {other:?}"))),
    };
    fs::write(&a.out, t.to_json() + "\n")?;
    Ok(file_outcome(&a.out, Vec::new(), (a.kind == "random").then_some(a.seed)))
}

fn build(cli: &Cli, a: &BuildArgs) -> Result<Outcome> {
    let t = TreeApproximation::from_json(&fs::read_to_string(&a.tree)?)?;
    let mut inputs = vec![a.tree.clone()];
    let mut params = match &a.params {
        Some(p) => {
            inputs.push(p.clone());
            serde_json::from_str::<ConstructionParams>(&fs::read_to_string(p)?)?
        }
        None => ConstructionParams::default(),
    };
    if let Some(seed) = a.seed {
        params.seed = seed;
    }
    params.pattern_budget = params.pattern_budget.min(symbol_budget(cli));
    let seq = build_construction_sequence(&t, a.n_max, &params)?;
    let mut outputs = save_stages(&seq, &a.out)?;
    outputs.sort();
    Ok(Outcome { outputs, inputs, seed: Some(params.seed), manifest_path: a.out.join("manifest.json"), failed: false })
}

fn stage_inputs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut inputs = vec![dir.join(MANIFEST_NAME)];
    let mut words: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "words"))
        .collect();
    words.sort();
    inputs.extend(words);
    Ok(inputs)
}

fn validate(a: &ValidateArgs) -> Result<Outcome> {
    let seq = load_stages(&a.stages)?;
    let reports = seq.validate_all();
    let mut failed = false;
    for r in &reports {
        for c in r.checks.iter().filter(|c| !c.passed) {
            failed = true;
            println!("stage {}: {} failed: {}", r.n, c.id, c.detail);
        }
    }
    if !failed {
        println!("all {} stages pass", reports.len());
    }
    let out = a.out.clone().unwrap_or_else(|| a.stages.join("validation.json"));
    let failures: Vec<_> = reports
        .iter()
        .flat_map(|r| r.checks.iter().filter(|c| !c.passed).map(move |c| json!({"stage": r.n, "check": c.id})))
        .collect();
    write_json(&out, &json!({"passed": !failed, "failures": failures, "reports": reports}))?;
    let mut outcome = file_outcome(&out, stage_inputs(&a.stages)?, None);
    outcome.failed = failed;
    Ok(outcome)
}

fn dist(a: &DistArgs) -> Result<Outcome> {
    let (xs, ys) = (read_words(&a.a)?, read_words(&a.b)?);
    let pairs: Vec<(usize, usize)> = if a.pairs == "all" {
        (0..xs.len()).flat_map(|i| (0..ys.len()).map(move |j| (i, j))).collect()
    } else if let Some(n) = a.pairs.strip_prefix("sampled:") {
        let n: usize = n.parse().map_err(|_| Error::InvalidInput(format!("bad sample count {n:?}")))?;
        if xs.is_empty() || ys.is_empty() {
            return Err(Error::InvalidInput("cannot sample from an empty word file".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        (0..n).map(|_| (rng.gen_range(0..xs.len()), rng.gen_range(0..ys.len()))).collect()
    } else {
        return Err(Error::InvalidInput(format!("--pairs must be `all` or `sampled:N`, got {:?}", a.pairs)));
    };
    let mut rows = Vec::with_capacity(pairs.len());
    let mut values = Vec::with_capacity(pairs.len());
    for (i, j) in pairs {
        let v = fbar(&xs[i], &ys[j])?;
        values.push(v);
        rows.push(json!({"a": i, "b": j, "fbar": format_rational(&v)}));
    }
    let (min, max) = (values.iter().min(), values.iter().max());
    write_json(
        &a.out,
        &json!({
            "pairs": rows,
            "min": min.map(format_rational),
            "max": max.map(format_rational),
        }),
    )?;
    Ok(file_outcome(&a.out, vec![a.a.clone(), a.b.clone()], (a.pairs != "all").then_some(a.seed)))
}

fn feldman_spec(a: &SpecArgs) -> Result<(FeldmanSpec, Vec<PathBuf>)> {
    match &a.blocks {
        Some(path) => Ok((FeldmanSpec::new(a.t, a.n, a.m, a.l, read_words(path)?)?, vec![path.clone()])),
        None => Ok((FeldmanSpec::distinct_symbols(a.t, a.n, a.m, a.l)?, Vec::new())),
    }
}

fn feldman(cli: &Cli, a: &FeldmanArgs) -> Result<Outcome> {
    let (spec, inputs) = feldman_spec(&a.spec)?;
    let pattern = build_pattern(&spec, a.r, symbol_budget(cli))?;
    fs::write(&a.emit, format_words(&[pattern]))?;
    Ok(file_outcome(&a.emit, inputs, None))
}

fn feldman_sep(a: &FeldmanSepArgs) -> Result<Outcome> {
    let (spec, inputs) = feldman_spec(&a.spec)?;
    let min_len = a.min_len.unwrap_or(spec.block_multiplicity() * spec.l);
    let report = separation_report(&spec, min_len, a.samples, a.seed)?;
    write_json(&a.out, &report)?;
    Ok(file_outcome(&a.out, inputs, Some(a.seed)))
}

fn circ(cli: &Cli, a: &CircArgs) -> Result<Outcome> {
    let seq = load_stages(&a.stages)?;
    let l_seq: Vec<u64> = a
        .l_seq
        .split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| Error::InvalidInput(format!("bad l entry {t:?}"))))
        .collect::<Result<_>>()?;
    let system = CircularSystem::new(seq.params.alphabet_size, seq.components(), &l_seq)?;
    fs::create_dir_all(&a.out)?;
    let budget = symbol_budget(cli) as u128;
    let mut outputs = Vec::new();
    let mut stages = Vec::new();
    for n in 0..=system.top_stage() {
        let p = &system.params[n];
        let length = system.length(n);
        let total = length.saturating_mul(system.word_count(n) as u128);
        let file = if total <= budget {
            let words = (0..system.word_count(n))
                .map(|w| system.word(n, w, budget).map(SymbolString::new))
                .collect::<Result<Vec<_>>>()?;
            let path = a.out.join(format!("circular_{n}.words"));
            fs::write(&path, format_words(&words))?;
            outputs.push(path);
            Some(format!("circular_{n}.words"))
        } else {
            None
        };
        stages.push(json!({
            "n": n,
            "q": p.q_n().to_string(),
            "p": p.p_n().to_string(),
            "length": length.to_string(),
            "word_count": system.word_count(n),
            "words_file": file,
        }));
    }
    let summary = a.out.join("circular.json");
    write_json(
        &summary,
        &json!({
            "alphabet_size": system.alphabet_size,
            "spacers": {"b": system.spacers.b, "e": system.spacers.e},
            "k_seq": system.k_seq,
            "l_seq": system.l_seq,
            "stages": stages,
        }),
    )?;
    outputs.push(summary);
    Ok(Outcome { outputs, inputs: stage_inputs(&a.stages)?, seed: None, manifest_path: a.out.join("manifest.json"), failed: false })
}

fn sample(cli: &Cli, a: &SampleArgs) -> Result<Outcome> {
    let seq = load_stages(&a.stages)?;
    let seg = sample_point_with_budget(&seq, a.n, a.len, a.seed, a.shaded, symbol_budget(cli))?;
    fs::write(&a.out, format_words(&[seg.segment]))?;
    Ok(file_outcome(&a.out, stage_inputs(&a.stages)?, Some(a.seed)))
}

fn returns(a: &ReturnsArgs) -> Result<Outcome> {
    let words = read_words(&a.segment)?;
    let seg = words.first().ok_or_else(|| Error::InvalidInput("empty segment file".into()))?;
    let gaps = induced_return_times(seg)?;
    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    for &g in &gaps {
        *histogram.entry(g.min(a.cap)).or_insert(0) += 1;
    }
    let tv = if gaps.is_empty() { None } else { Some(geometric_tv_distance(&gaps, a.cap)?) };
    let mean = if gaps.is_empty() { None } else { Some(gaps.iter().sum::<u64>() as f64 / gaps.len() as f64) };
    write_json(
        &a.report,
        &json!({
            "gaps": gaps.len(),
            "mean_gap": mean,
            "shading_mean": shading_mean(seg)?,
            "tv_geometric_half": tv,
            "cap": a.cap,
            "histogram": histogram,
        }),
    )?;
    Ok(file_outcome(&a.report, vec![a.segment.clone()], None))
}

fn audit(cli: &Cli, a: &AuditArgs) -> Result<Outcome> {
    let seq = load_stages(&a.stages)?;
    let budget = symbol_budget(cli);
    let epsilon = parse_rational(&a.epsilon)?;
    let mut inputs = stage_inputs(&a.stages)?;
    let code: Box<dyn SegmentMap> = if a.code == "builtin:identity" {
        Box::new(StationaryCode::identity())
    } else if let Some(node) = a.code.strip_prefix("oracle:") {
        let g = GroupElement::generator(parse_node(node)?);
        Box::new(OracleCode::from_eta(&seq, a.n, a.s, &g, budget)?)
    } else {
        let path = PathBuf::from(&a.code);
        let code = StationaryCode::read(&path)?;
        inputs.push(path);
        Box::new(code)
    };
    let samples = sample_audit_inputs(&seq, a.n, a.samples, a.seed)?;
    let report = audit_code(code.as_ref(), &seq, a.n, a.s, &samples, epsilon, budget)?;
    write_json(&a.out, &report)?;
    Ok(file_outcome(&a.out, inputs, Some(a.seed)))
}

fn report(a: &ReportArgs) -> Result<Outcome> {
    let seq = load_stages(&a.stages)?;
    let reports = seq.validate_all();
    let mut stages = Vec::new();
    for (stage, v) in seq.stages.iter().zip(&reports) {
        let r9 = if stage.n + 1 < seq.stages.len() && stage.h <= 20 {
            Some(check_r9(&seq, stage.n, 0, a.r9_samples, 1 << 16, a.seed)?)
        } else {
            None
        };
        stages.push(json!({
            "n": stage.n,
            "node": canonical_enumeration(stage.n as u64),
            "node_in_tree": stage.node_in_tree,
            "top_level": stage.top_level,
            "new_level": stage.new_level,
            "h": stage.h,
            "word_count": stage.word_count(),
            "k_prev": stage.k_prev(),
            "f_prev": stage.f_prev,
            "segments": stage.segments,
            "attempts": stage.attempts,
            "level_params": stage.level_params.iter().map(|p| json!({
                "s": p.s, "t": p.t, "n_blocks": p.n_blocks, "p": p.p, "k_families": p.k_families,
                "run_multiplier": p.run_multiplier, "unit": p.unit, "repetitions": p.repetitions,
            })).collect::<Vec<_>>(),
            "validation_failures": v.failures(),
            "r9_next_stage_word0": r9,
        }));
    }
    write_json(&a.out, &json!({"params": seq.params, "stages": stages}))?;
    Ok(file_outcome(&a.out, stage_inputs(&a.stages)?, Some(a.seed)))
}
