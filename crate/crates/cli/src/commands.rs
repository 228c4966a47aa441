use std::fmt::Display;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use fhmm_core::eval::{detection_scores, evaluate_genotypes, evaluate_imputation, evaluate_sites, EvalReport};
use fhmm_core::genotype::{HaplotypeSequence, LocusMap, MultilocusGenotype};
use fhmm_core::simulate::{simulate, FounderSource, SimConfig};
use fhmm_core::sweep::{bench_scaling, sweep, sweep_plot_data, sweep_timings_tsv, sweep_tsv, BenchSpec, SweepGrid, SweepSpec};
use fhmm_core::tasks::{
    correct_errors, detect_errors, impute_untyped, phase_corpus, recover_missing, run_pipeline, PipelineMode,
    PipelineParams, WindowSpec, DEFAULT_THRESHOLD,
};
use fhmm_core::training::{train_founder_hmm, TrainConfig};

use crate::args::*;
use crate::config::{pick, FileConfig};
use crate::error::{CliError, Result};
use crate::formats;

pub const DEFAULT_FOUNDERS: usize = 7;
pub const DEFAULT_MODE: &str = "edc-mdr-imp";

/// Resolved settings echoed into output headers, in insertion order.
#[derive(Debug, Clone, Default)]
struct Echo(Vec<(String, String)>);

impl Echo {
    fn new(command: &str) -> Self {
        let mut e = Echo::default();
        e.add("command", command);
        e
    }

    fn add(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    fn path(&mut self, key: &str, p: &Path) -> &mut Self {
        self.add(key, p.display())
    }
}

pub struct Session {
    pub file: FileConfig,
    pub naive: bool,
    /// Timing lines, kept apart from primary outputs.
    pub timings: Vec<String>,
}

impl Session {
    fn time(&mut self, label: &str, start: Instant) {
        self.timings.push(format!("{label}\t{:.6}", start.elapsed().as_secs_f64()));
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: cannot read: {e}", path.display())))
}

fn read_genotypes(path: &Path) -> Result<Vec<MultilocusGenotype>> {
    formats::parse_genotypes(&read_text(path)?, &path.display().to_string())
}

fn read_haplotypes(path: &Path) -> Result<Vec<HaplotypeSequence>> {
    formats::parse_haplotypes(&read_text(path)?, &path.display().to_string())
}

fn read_map(path: &Path) -> Result<LocusMap> {
    formats::parse_map(&read_text(path)?, &path.display().to_string())
}

fn read_model(path: &Path) -> Result<fhmm_core::FounderHmm> {
    formats::parse_model(&read_text(path)?, &path.display().to_string())
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: &dyn Display| CliError::Internal(format!("{}: cannot write: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(content.as_bytes()).map_err(|e| fail(&e))?;
    tmp.as_file().sync_all().map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

fn emit(out: &OutArgs, content: &str) -> Result<()> {
    match &out.out {
        Some(p) => write_atomic(p, content),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Internal(format!("stdout: {e}")))
        }
    }
}

fn json_document<T: Serialize>(echo: &Echo, records: &T) -> Result<String> {
    let config: serde_json::Map<String, serde_json::Value> = echo
        .0
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
        .collect();
    let doc = serde_json::json!({ "config": config, "records": records });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Internal(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn train_config(args: &TrainArgs, file: &FileConfig, echo: &mut Echo) -> Result<TrainConfig> {
    let mut c = TrainConfig::new(pick(args.founders, file.founders, DEFAULT_FOUNDERS));
    c.max_iterations = pick(args.max_iterations, file.max_iterations, c.max_iterations);
    c.tolerance = pick(args.tolerance, file.tolerance, c.tolerance);
    c.pseudocount = pick(args.pseudocount, file.pseudocount, c.pseudocount);
    c.initial_stay = pick(args.initial_stay, file.initial_stay, c.initial_stay);
    c.seed = pick(args.seed, file.seed, c.seed);
    c.validate()?;
    echo.add("founders", c.founders)
        .add("max_iterations", c.max_iterations)
        .add("tolerance", c.tolerance)
        .add("pseudocount", c.pseudocount)
        .add("initial_stay", c.initial_stay)
        .add("seed", c.seed);
    Ok(c)
}

fn window_spec(args: &WindowArgs, file: &FileConfig, echo: &mut Echo) -> Result<WindowSpec> {
    let d = WindowSpec::default();
    let spec = WindowSpec {
        flank: pick(args.flank, file.flank, d.flank),
        restarts: pick(args.restarts, file.restarts, d.restarts),
    };
    if spec.flank == 0 || spec.restarts == 0 {
        return Err(CliError::Input("flank and restarts must be at least 1".into()));
    }
    echo.add("flank", spec.flank).add("restarts", spec.restarts);
    Ok(spec)
}

fn threshold(flag: Option<f64>, file: &FileConfig, echo: &mut Echo) -> Result<f64> {
    let t = pick(flag, file.threshold, DEFAULT_THRESHOLD);
    if !(t > 1.0) {
        return Err(CliError::Input(format!("threshold must exceed 1, got {t}")));
    }
    echo.add("threshold", t);
    Ok(t)
}

/// Ids for the columns of a typed-locus genotype file.
fn typed_ids(map: Option<&Path>, n: usize, echo: &mut Echo) -> Result<Vec<String>> {
    match map {
        Some(p) => {
            echo.path("map", p);
            let map = read_map(p)?;
            let ids: Vec<String> = map.typed_indices().iter().map(|&i| map.loci()[i].id.clone()).collect();
            if ids.len() != n {
                return Err(CliError::Input(format!(
                    "{}: {} typed loci but the genotypes have {n}",
                    p.display(),
                    ids.len()
                )));
            }
            Ok(ids)
        }
        None => Ok((1..=n).map(|i| i.to_string()).collect()),
    }
}

fn corpus_width(corpus: &[MultilocusGenotype]) -> usize {
    corpus.first().map_or(0, |g| g.len())
}

pub fn run(command: &Command, s: &mut Session) -> Result<()> {
    match command {
        Command::Train(c) => train(c, s),
        Command::Detect(c) => detect(c, s),
        Command::Correct(c) => correct(c, s),
        Command::Recover(c) => recover(c, s),
        Command::Impute(c) => impute(c, s),
        Command::Phase(c) => phase(c, s),
        Command::Pipeline(c) => pipeline(c, s),
        Command::Simulate(c) => simulate_cmd(c, s),
        Command::Evaluate(c) => evaluate(c, s),
        Command::Sweep(c) => sweep_cmd(c, s),
        Command::Bench(c) => bench(c, s),
    }
}

fn train(c: &TrainCmd, s: &mut Session) -> Result<()> {
    let mut echo = Echo::new("train");
    echo.path("panel", &c.panel);
    let config = train_config(&c.train, &s.file, &mut echo)?;
    let panel = read_haplotypes(&c.panel)?;
    let start = Instant::now();
    let (model, report) = train_founder_hmm(&panel, &config)?;
    s.time("train", start);
    echo.add("iterations_run", report.iterations_run)
        .add("converged", report.converged)
        .add("loglik", report.loglik_trace.last().copied().unwrap_or(f64::NAN));
    emit(&c.out, &formats::write_model(&model, &echo.0))
}

fn detect(c: &DetectCmd, s: &mut Session) -> Result<()> {
    let mut echo = Echo::new("detect");
    echo.path("model", &c.model).path("genotypes", &c.genotypes);
    let t = threshold(c.threshold, &s.file, &mut echo)?;
    let model = read_model(&c.model)?;
    let corpus = read_genotypes(&c.genotypes)?;
    let ids = typed_ids(c.map.as_deref(), corpus_width(&corpus), &mut echo)?;
    let start = Instant::now();
    let report = detect_errors(&model, &corpus, &ids, t, s.naive)?;
    s.time("detect", start);
    let json = c.json || s.file.json.unwrap_or(false);
    let text = if json {
        json_document(&echo, &report.entries)?
    } else {
        formats::write_error_report(&report, &echo.0)
    };
    emit(&c.out, &text)
}

fn correct(c: &CorrectCmd, s: &mut Session) -> Result<()> {
    let mut echo = Echo::new("correct");
    echo.path("genotypes", &c.genotypes).path("report", &c.report);
    let corpus = read_genotypes(&c.genotypes)?;
    let report = formats::parse_error_report(&read_text(&c.report)?, &c.report.display().to_string())?;
    let ids = typed_ids(c.map.as_deref(), corpus_width(&corpus), &mut echo)?;
    let start = Instant::now();
    let (fixed, changes) = correct_errors(&corpus, &ids, &report)?;
    s.time("correct", start);
    echo.add("changes", changes);
    emit(&c.out, &formats::write_genotypes(&fixed, &echo.0))
}

fn recover(c: &RecoverCmd, s: &mut Session) -> Result<()> {
    let mut echo = Echo::new("recover");
    echo.path("model", &c.model).path("genotypes", &c.genotypes);
    let model = read_model(&c.model)?;
    let corpus = read_genotypes(&c.genotypes)?;
    let ids = typed_ids(c.map.as_deref(), corpus_width(&corpus), &mut echo)?;
    let start = Instant::now();
    let recovery = recover_missing(&model, &corpus, &ids, s.naive)?;
    s.time("recover", start);
    echo.add("fills", recovery.fills.len());
    if let Some(p) = &c.fills {
        let text = if c.json || s.file.json.unwrap_or(false) {
            json_document(&echo, &recovery.fills)?
        } else {
            formats::write_fills(&recovery.fills, &echo.0)
        };
        write_atomic(p, &text)?;
    }
    emit(&c.out, &formats::write_genotypes(&recovery.corpus, &echo.0))
}

fn impute(c: &ImputeCmd, s: &mut Session) -> Result<()> {
    let mut echo = Echo::new("impute");
    echo.path("panel", &c.panel).path("genotypes", &c.genotypes).path("map", &c.map);
    let spec = window_spec(&c.window, &s.file, &mut echo)?;
    let config = train_config(&c.train, &s.file, &mut echo)?;
    let reference = read_haplotypes(&c.panel)?;
    let corpus = read_genotypes(&c.genotypes)?;
    let map = read_map(&c.map)?;
    let start = Instant::now();
    let result = impute_untyped(&reference, &corpus, &map, spec, &config, s.naive)?;
    s.time("impute", start);
    echo.add("windows", result.stats.windows).add("train_iterations", result.stats.train_iterations);
    let text = if c.json || s.file.json.unwrap_or(false) {
        json_document(&echo, &result.entries)?
    } else {
        formats::write_imputation(&result.entries, &echo.0)
    };
    emit(&c.out, &text)
}

fn join_path(path: &[usize]) -> String {
    path.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(",")
}

fn phase(c: &PhaseCmd, s: &mut Session) -> Result<()> {
    let mut echo = Echo::new("phase");
    echo.path("model", &c.model).path("genotypes", &c.genotypes);
    let model = read_model(&c.model)?;
    let corpus = read_genotypes(&c.genotypes)?;
    let start = Instant::now();
    let phased = phase_corpus(&model, &corpus)?;
    s.time("phase", start);
    if let Some(p) = &c.paths {
        let mut text = String::new();
        for (k, v) in &echo.0 {
            text.push_str(&format!("##{k}={v}\n"));
        }
        text.push_str("sample_id\tlog_probability\tfounders_a\tfounders_b\n");
        for ph in &phased {
            text.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                ph.sample_id,
                ph.log_probability,
                join_path(&ph.founders.0),
                join_path(&ph.founders.1)
            ));
        }
        write_atomic(p, &text)?;
    }
    let haplotypes: Vec<HaplotypeSequence> = phased
        .into_iter()
        .flat_map(|p| [p.haplotypes.0, p.haplotypes.1])
        .collect();
    emit(&c.out, &formats::write_haplotypes(&haplotypes, &echo.0))
}

fn pipeline(c: &PipelineCmd, s: &mut Session) -> Result<()> {
    let mut echo = Echo::new("pipeline");
    let mode_name = pick(c.mode.clone(), s.file.mode.clone(), DEFAULT_MODE.to_string());
    let mode: PipelineMode = mode_name.parse()?;
    echo.add("mode", mode.name())
        .path("panel", &c.panel)
        .path("genotypes", &c.genotypes)
        .path("map", &c.map);
    let threshold = threshold(c.threshold, &s.file, &mut echo)?;
    let window = window_spec(&c.window, &s.file, &mut echo)?;
    let train = train_config(&c.train, &s.file, &mut echo)?;
    let reference = read_haplotypes(&c.panel)?;
    let corpus = read_genotypes(&c.genotypes)?;
    let map = read_map(&c.map)?;
    let params = PipelineParams {
        train,
        window,
        threshold,
        naive: s.naive,
    };
    let result = run_pipeline(mode, &reference, &corpus, &map, &params)?;
    for st in &result.stages {
        s.timings.push(format!(
            "{}\t{:.6}\tchanges={}\tlocus_evaluations={}",
            st.stage,
            st.duration.as_secs_f64(),
            st.changes,
            st.locus_evaluations
        ));
    }
    if let Some(p) = &c.repaired {
        write_atomic(p, &formats::write_genotypes(&result.repaired, &echo.0))?;
    }
    let text = if c.json || s.file.json.unwrap_or(false) {
        json_document(&echo, &result.imputation.entries)?
    } else {
        formats::write_imputation(&result.imputation.entries, &echo.0)
    };
    emit(&c.out, &text)
}

fn sim_config(a: &SimArgs, file: &FileConfig, echo: &mut Echo) -> Result<SimConfig> {
    let mut c = SimConfig::new(
        pick(a.sim_founders, file.sim_founders, 5),
        pick(a.loci, file.loci, 500),
        pick(a.samples, file.samples, 200),
    );
    c.reference_haplotypes = pick(a.reference_haplotypes, file.reference_haplotypes, c.reference_haplotypes);
    c.switch_rate = pick(a.switch_rate, file.switch_rate, c.switch_rate);
    c.error_rate = pick(a.error_rate, file.error_rate, c.error_rate);
    c.missing_rate = pick(a.missing_rate, file.missing_rate, c.missing_rate);
    c.mask_fraction = pick(a.mask_fraction, file.mask_fraction, c.mask_fraction);
    c.seed = pick(a.seed, file.seed, c.seed);
    let (lo, hi) = match c.source {
        FounderSource::Random { maf_lo, maf_hi } => (maf_lo, maf_hi),
        FounderSource::Supplied(_) => unreachable!(),
    };
    let (maf_lo, maf_hi) = (pick(a.maf_lo, file.maf_lo, lo), pick(a.maf_hi, file.maf_hi, hi));
    c.source = FounderSource::Random { maf_lo, maf_hi };
    c.validate()?;
    echo.add("sim_founders", c.founders)
        .add("loci", c.loci)
        .add("samples", c.samples)
        .add("reference_haplotypes", c.reference_haplotypes)
        .add("switch_rate", c.switch_rate)
        .add("error_rate", c.error_rate)
        .add("missing_rate", c.missing_rate)
        .add("mask_fraction", c.mask_fraction)
        .add("maf_lo", maf_lo)
        .add("maf_hi", maf_hi)
        .add("seed", c.seed);
    Ok(c)
}

fn simulate_cmd(c: &SimulateCmd, s: &mut Session) -> Result<()> {
    let mut echo = Echo::new("simulate");
    let config = sim_config(&c.sim, &s.file, &mut echo)?;
    let start = Instant::now();
    let data = simulate(&config)?;
    s.time("simulate", start);
    std::fs::create_dir_all(&c.out_dir)
        .map_err(|e| CliError::Input(format!("{}: cannot create directory: {e}", c.out_dir.display())))?;
    let e = &echo.0;
    let files = [
        ("truth.gen", formats::write_genotypes(&data.truth, e)),
        ("observed.gen", formats::write_genotypes(&data.observed, e)),
        ("loci.map", formats::write_map(&data.map, e)),
        ("reference.hap", formats::write_haplotypes(&data.reference, e)),
        ("founders.hap", formats::write_haplotypes(&data.founders, e)),
        ("truth.hap", formats::write_haplotypes(&data.truth_haplotypes, e)),
        ("errors.tsv", formats::write_sites(&data.errors, e)),
        ("missing.tsv", formats::write_sites(&data.missing, e)),
    ];
    for (name, text) in files {
        write_atomic(&c.out_dir.join(name), &text)?;
    }
    Ok(())
}

fn eval_table(r: &EvalReport, echo: &Echo) -> String {
    let mut out = String::new();
    for (k, v) in &echo.0 {
        out.push_str(&format!("##{k}={v}\n"));
    }
    out.push_str("scored\tdiscordant\tuncalled\trate");
    for t in 0..3 {
        for c in 0..3 {
            out.push_str(&format!("\tt{t}_c{c}"));
        }
    }
    out.push('\n');
    out.push_str(&format!("{}\t{}\t{}\t{}", r.scored, r.discordant, r.uncalled, r.rate));
    for row in &r.confusion {
        for v in row {
            out.push_str(&format!("\t{v}"));
        }
    }
    out.push('\n');
    out
}

/// Truth rows cut down to the typed loci when the calls only cover those.
fn align_truth(truth: Vec<MultilocusGenotype>, calls: &[MultilocusGenotype], map: Option<&LocusMap>) -> Vec<MultilocusGenotype> {
    let (Some(map), Some(first), Some(t0)) = (map, calls.first(), truth.first()) else {
        return truth;
    };
    let typed = map.typed_indices();
    if t0.len() == map.len() && first.len() == typed.len() && typed.len() != map.len() {
        truth
            .into_iter()
            .map(|g| MultilocusGenotype {
                symbols: typed.iter().map(|&i| g.symbols[i]).collect(),
                sample_id: g.sample_id,
            })
            .collect()
    } else {
        truth
    }
}

fn evaluate(c: &EvaluateCmd, s: &mut Session) -> Result<()> {
    let mut echo = Echo::new("evaluate");
    let json = c.json || s.file.json.unwrap_or(false);
    if let Some(d) = &c.detections {
        let injected_path = c.injected.as_ref().expect("clap enforces --injected");
        echo.path("detections", d).path("injected", injected_path);
        let report = formats::parse_error_report(&read_text(d)?, &d.display().to_string())?;
        let injected = formats::parse_sites(&read_text(injected_path)?, &injected_path.display().to_string())?;
        let scores = detection_scores(&report, &injected);
        let text = if json {
            json_document(&echo, &[&scores])?
        } else {
            let mut out = String::new();
            for (k, v) in &echo.0 {
                out.push_str(&format!("##{k}={v}\n"));
            }
            out.push_str("flagged\tinjected\ttrue_positives\tprecision\trecall\n");
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                scores.flagged, scores.injected, scores.true_positives, scores.precision, scores.recall
            ));
            out
        };
        return emit(&c.out, &text);
    }

    let truth_path = c
        .truth
        .as_ref()
        .ok_or_else(|| CliError::Input("--truth is required unless --detections is given".into()))?;
    echo.path("truth", truth_path);
    let truth = read_genotypes(truth_path)?;
    let map = match &c.map {
        Some(p) => {
            echo.path("map", p);
            Some(read_map(p)?)
        }
        None => None,
    };
    let report = if let Some(p) = &c.calls {
        echo.path("calls", p);
        let map = map.as_ref().ok_or_else(|| CliError::Input("--calls needs --map".into()))?;
        let calls = formats::parse_imputation(&read_text(p)?, &p.display().to_string())?;
        evaluate_imputation(&calls, &truth, map)?
    } else if let Some(p) = &c.genotypes {
        echo.path("genotypes", p);
        let calls = read_genotypes(p)?;
        match &c.sites {
            Some(sp) => {
                echo.path("sites", sp);
                let map = map.as_ref().ok_or_else(|| CliError::Input("--sites needs --map".into()))?;
                let sites = formats::parse_sites(&read_text(sp)?, &sp.display().to_string())?;
                evaluate_sites(&calls, &truth, map, &sites)?
            }
            None => evaluate_genotypes(&calls, &align_truth(truth, &calls, map.as_ref()))?,
        }
    } else {
        return Err(CliError::Input("one of --calls, --genotypes or --detections is required".into()));
    };
    let text = if json {
        json_document(&echo, &[&report])?
    } else {
        eval_table(&report, &echo)
    };
    emit(&c.out, &text)
}

#[derive(Serialize)]
struct SweepRecord<'a> {
    founders: usize,
    panel: usize,
    flank: usize,
    mode: &'a str,
    report: Option<&'a EvalReport>,
    error: Option<&'a str>,
}

fn or_default<T: Clone>(given: &[T], default: &[T]) -> Vec<T> {
    if given.is_empty() {
        default.to_vec()
    } else {
        given.to_vec()
    }
}

fn list(v: &[impl Display]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn sweep_cmd(c: &SweepCmd, s: &mut Session) -> Result<()> {
    let mut echo = Echo::new("sweep");
    let founders = or_default(&c.founders, &[DEFAULT_FOUNDERS]);
    let panels = or_default(&c.panels, &[30, 60, 120, 240]);
    let flanks = or_default(&c.flanks, &[WindowSpec::default().flank]);
    let modes = or_default(&c.modes, &["imp".to_string(), "edc-mdr-imp".to_string()])
        .iter()
        .map(|m| m.parse::<PipelineMode>())
        .collect::<fhmm_core::Result<Vec<_>>>()?;
    echo.add("founders", list(&founders))
        .add("panels", list(&panels))
        .add("flanks", list(&flanks))
        .add("modes", list(&modes.iter().map(|m| m.name()).collect::<Vec<_>>()));
    let sim = sim_config(&c.sim, &s.file, &mut echo)?;
    let train_args = TrainArgs {
        founders: Some(founders[0]),
        max_iterations: c.max_iterations,
        tolerance: c.tolerance,
        pseudocount: c.pseudocount,
        initial_stay: c.initial_stay,
        seed: Some(sim.seed),
    };
    let mut scratch = Echo::default();
    let train = train_config(&train_args, &s.file, &mut scratch)?;
    echo.add("max_iterations", train.max_iterations)
        .add("tolerance", train.tolerance)
        .add("pseudocount", train.pseudocount)
        .add("initial_stay", train.initial_stay);
    let restarts = pick(c.restarts, s.file.restarts, WindowSpec::default().restarts);
    let threshold = threshold(c.threshold, &s.file, &mut echo)?;
    let repetitions = pick(c.repetitions, s.file.repetitions, 3);
    echo.add("restarts", restarts).add("repetitions", repetitions);
    let spec = SweepSpec {
        grid: SweepGrid {
            founders,
            panel_sizes: panels,
            flanks,
            modes,
        },
        sim,
        train,
        window: WindowSpec {
            restarts,
            ..WindowSpec::default()
        },
        threshold,
        repetitions,
    };
    let rows = sweep(&spec)?;
    s.timings.extend(sweep_timings_tsv(&rows).lines().map(str::to_string));
    if let Some(p) = &c.plot {
        write_atomic(p, &sweep_plot_data(&rows))?;
    }
    let text = if c.json || s.file.json.unwrap_or(false) {
        let records: Vec<SweepRecord> = rows
            .iter()
            .map(|r| SweepRecord {
                founders: r.founders,
                panel: r.panel,
                flank: r.flank,
                mode: r.mode.name(),
                report: r.outcome.as_ref().ok(),
                error: r.outcome.as_ref().err().map(String::as_str),
            })
            .collect();
        json_document(&echo, &records)?
    } else {
        let mut out = String::new();
        for (k, v) in &echo.0 {
            out.push_str(&format!("##{k}={v}\n"));
        }
        out.push_str(&sweep_tsv(&rows));
        out
    };
    emit(&c.out, &text)
}

#[derive(Serialize)]
struct BenchRecord {
    value: usize,
    seconds: f64,
    forward_evaluations: usize,
}

fn bench(c: &BenchCmd, s: &mut Session) -> Result<()> {
    let mut echo = Echo::new("bench");
    let spec = BenchSpec {
        axis: c.axis.parse()?,
        values: c.values.clone(),
        loci: pick(c.loci, s.file.loci, 200),
        samples: pick(c.samples, s.file.samples, 100),
        founders: pick(c.founders, s.file.founders, 5),
        repetitions: pick(c.repetitions, s.file.repetitions, 3),
        seed: pick(c.seed, s.file.seed, 0),
    };
    echo.add("axis", &c.axis)
        .add("values", list(&spec.values))
        .add("loci", spec.loci)
        .add("samples", spec.samples)
        .add("founders", spec.founders)
        .add("repetitions", spec.repetitions)
        .add("seed", spec.seed);
    let result = bench_scaling(&spec)?;
    echo.add("slope", result.slope);
    let text = if c.json || s.file.json.unwrap_or(false) {
        let records: Vec<BenchRecord> = result
            .points
            .iter()
            .map(|p| BenchRecord {
                value: p.value,
                seconds: p.seconds,
                forward_evaluations: p.forward_evaluations,
            })
            .collect();
        json_document(&echo, &records)?
    } else {
        let mut out = String::new();
        for (k, v) in &echo.0 {
            out.push_str(&format!("##{k}={v}\n"));
        }
        out.push_str("value\tseconds\tforward_evaluations\n");
        for p in &result.points {
            out.push_str(&format!("{}\t{:.6}\t{}\n", p.value, p.seconds, p.forward_evaluations));
        }
        out
    };
    emit(&c.out, &text)
}
