//! Composed imputation flows.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::genotype::{HaplotypeSequence, LocusMap, MultilocusGenotype};
use crate::tasks::detect::{correct_errors, detect_errors, DEFAULT_THRESHOLD};
use crate::tasks::impute::{impute_untyped, ImputationResult, WindowSpec};
use crate::tasks::phase::phase_decode;
use crate::tasks::recover::recover_missing;
use crate::training::{train_founder_hmm, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineMode {
    /// Imputation straight from the observed genotypes.
    Imp,
    /// Error correction and missing-data recovery before imputation.
    EdcMdrImp,
}

impl PipelineMode {
    pub fn name(self) -> &'static str {
        match self {
            PipelineMode::Imp => "imp",
            PipelineMode::EdcMdrImp => "edc-mdr-imp",
        }
    }
}

impl std::str::FromStr for PipelineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imp" => Ok(PipelineMode::Imp),
            "edc-mdr-imp" => Ok(PipelineMode::EdcMdrImp),
            _ => Err(Error::input(format!("unknown pipeline mode {s:?} (expected imp or edc-mdr-imp)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub train: TrainConfig,
    pub window: WindowSpec,
    pub threshold: f64,
    pub naive: bool,
}

impl PipelineParams {
    pub fn new(founders: usize) -> Self {
        PipelineParams {
            train: TrainConfig::new(founders),
            window: WindowSpec::default(),
            threshold: DEFAULT_THRESHOLD,
            naive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: &'static str,
    /// Symbols changed, haplotypes produced, or calls made, per stage.
    pub changes: usize,
    /// Locus-level units of work (sample-loci or window-loci).
    pub locus_evaluations: usize,
    pub duration: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub imputation: ImputationResult,
    /// Typed-locus genotypes that were fed to imputation.
    pub repaired: Vec<MultilocusGenotype>,
    pub stages: Vec<StageReport>,
}

fn timed<T>(stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let start = Instant::now();
    let out = f().map_err(Error::in_stage(stage))?;
    Ok((out, start.elapsed()))
}

pub fn run_pipeline(
    mode: PipelineMode,
    reference: &[HaplotypeSequence],
    corpus: &[MultilocusGenotype],
    map: &LocusMap,
    params: &PipelineParams,
) -> Result<PipelineResult> {
    let mut stages = Vec::new();
    let mut repaired = corpus.to_vec();
    let typed = map.typed_indices();
    let typed_ids: Vec<String> = typed.iter().map(|&i| map.loci()[i].id.clone()).collect();
    let sample_loci = corpus.len() * typed.len();

    if mode == PipelineMode::EdcMdrImp {
        let typed_reference: Vec<HaplotypeSequence> =
            reference.iter().map(|h| h.select(&typed)).collect();

        let ((base, iters), d) = timed("train", || {
            let (m, r) = train_founder_hmm(&typed_reference, &params.train)?;
            Ok((m, r.iterations_run))
        })?;
        stages.push(StageReport {
            stage: "train",
            changes: iters,
            locus_evaluations: typed_reference.len() * typed.len() * iters,
            duration: d,
        });

        let (pool, d) = timed("phase", || {
            let mut pool = typed_reference.clone();
            for g in corpus {
                // samples the base model rules out contribute no haplotypes
                match phase_decode(&base, g) {
                    Ok(p) => {
                        pool.push(p.haplotypes.0);
                        pool.push(p.haplotypes.1);
                    }
                    Err(Error::ZeroProbability { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            Ok(pool)
        })?;
        stages.push(StageReport {
            stage: "phase",
            changes: pool.len() - typed_reference.len(),
            locus_evaluations: sample_loci,
            duration: d,
        });

        let ((model, iters), d) = timed("retrain", || {
            let (m, r) = train_founder_hmm(&pool, &params.train)?;
            Ok((m, r.iterations_run))
        })?;
        stages.push(StageReport {
            stage: "retrain",
            changes: iters,
            locus_evaluations: pool.len() * typed.len() * iters,
            duration: d,
        });

        let ((corrected, changes), d) = timed("detect", || {
            let report = detect_errors(&model, &repaired, &typed_ids, params.threshold, params.naive)?;
            correct_errors(&repaired, &typed_ids, &report)
        })?;
        repaired = corrected;
        stages.push(StageReport {
            stage: "detect",
            changes,
            locus_evaluations: sample_loci,
            duration: d,
        });

        let (recovery, d) = timed("recover", || {
            recover_missing(&model, &repaired, &typed_ids, params.naive)
        })?;
        repaired = recovery.corpus;
        stages.push(StageReport {
            stage: "recover",
            changes: recovery.fills.len(),
            locus_evaluations: sample_loci,
            duration: d,
        });
    }

    let (imputation, d) = timed("impute", || {
        impute_untyped(reference, &repaired, map, params.window, &params.train, params.naive)
    })?;
    stages.push(StageReport {
        stage: "impute",
        changes: imputation.entries.len(),
        locus_evaluations: imputation.stats.window_loci * corpus.len(),
        duration: d,
    });
    Ok(PipelineResult {
        imputation,
        repaired,
        stages,
    })
}
