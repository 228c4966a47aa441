//! Untyped-locus imputation with local window models.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genotype::{corpus_length, Genotype, HaplotypeSequence, LocusMap, MultilocusGenotype};
use crate::inference::argmax_triple;
use crate::model::FounderHmm;
use crate::tasks::recover::prior_triple;
use crate::training::{train_founder_hmm, TrainConfig};
use crate::trie::corpus_posteriors;

/// Iteration cap applied to every window model.
pub const WINDOW_MAX_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    /// Typed loci taken on each side of an untyped gap.
    pub flank: usize,
    /// Independent training starts per window; the best fit is kept.
    pub restarts: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { flank: 10, restarts: 1 }
    }
}

/// One local model: typed flanks around a run of untyped loci.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    /// Map indices spanned by the window, ascending.
    pub loci: Vec<usize>,
    /// Map indices of the untyped loci imputed from this window.
    pub targets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputedCall {
    pub sample_id: String,
    pub locus_id: String,
    pub posterior: [f64; 3],
    pub call: Genotype,
    pub confidence: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputationStats {
    pub windows: usize,
    pub untyped_loci: usize,
    pub window_loci: usize,
    pub train_iterations: usize,
    pub forward_evaluations: usize,
    pub backward_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationResult {
    /// Ordered by untyped locus, then by sample.
    pub entries: Vec<ImputedCall>,
    pub stats: ImputationStats,
}

/// Groups untyped loci by the gap between typed loci they fall into and
/// attaches up to `flank` typed loci on each side.
pub fn plan_windows(map: &LocusMap, spec: WindowSpec) -> Result<Vec<Window>> {
    if spec.flank == 0 {
        return Err(Error::input("flank must be at least 1"));
    }
    if spec.restarts == 0 {
        return Err(Error::input("restarts must be at least 1"));
    }
    let typed = map.typed_indices();
    if typed.is_empty() && !map.untyped_indices().is_empty() {
        return Err(Error::input("no typed loci to flank the untyped loci"));
    }
    let mut windows: Vec<Window> = Vec::new();
    let mut current_gap = None;
    for u in map.untyped_indices() {
        let left = typed.partition_point(|&t| t < u);
        if current_gap == Some(left) {
            windows.last_mut().unwrap().targets.push(u);
            continue;
        }
        current_gap = Some(left);
        let lo = left.saturating_sub(spec.flank);
        let hi = (left + spec.flank).min(typed.len());
        windows.push(Window {
            loci: typed[lo..hi].to_vec(),
            targets: vec![u],
        });
    }
    for w in &mut windows {
        w.loci.extend_from_slice(&w.targets);
        w.loci.sort_unstable();
    }
    Ok(windows)
}

/// Training settings for one window, derived from the global ones.
pub fn window_config(config: &TrainConfig, window: &Window, restart: usize) -> TrainConfig {
    let mut c = config.clone();
    c.max_iterations = c.max_iterations.min(WINDOW_MAX_ITERATIONS);
    c.seed = config
        .seed
        .wrapping_add((window.loci[0] as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((restart as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    c
}

/// Trains the window model, keeping the start with the highest final
/// log-likelihood (earliest start on ties). Returns the total iterations run.
pub fn train_window(
    reference: &[HaplotypeSequence],
    window: &Window,
    config: &TrainConfig,
    restarts: usize,
) -> Result<(FounderHmm, usize)> {
    let panel: Vec<HaplotypeSequence> = reference.iter().map(|h| h.select(&window.loci)).collect();
    let mut best: Option<(FounderHmm, f64)> = None;
    let mut iterations = 0;
    for r in 0..restarts.max(1) {
        let (model, report) = train_founder_hmm(&panel, &window_config(config, window, r))?;
        iterations += report.iterations_run;
        let ll = *report.loglik_trace.last().unwrap();
        if best.as_ref().map_or(true, |(_, b)| ll > *b) {
            best = Some((model, ll));
        }
    }
    Ok((best.unwrap().0, iterations))
}

/// Genotypes restricted to the window, with untyped positions missing.
/// `typed_slot[i]` is the corpus column of map locus `i` if typed.
fn window_corpus(
    corpus: &[MultilocusGenotype],
    window: &Window,
    typed_slot: &[Option<usize>],
) -> Vec<MultilocusGenotype> {
    corpus
        .iter()
        .map(|g| MultilocusGenotype {
            sample_id: g.sample_id.clone(),
            symbols: window
                .loci
                .iter()
                .map(|&i| typed_slot[i].map_or(Genotype::Missing, |c| g.symbols[c]))
                .collect(),
        })
        .collect()
}

struct WindowOutput {
    calls: Vec<Vec<ImputedCall>>,
    iterations: usize,
    forward: usize,
    backward: usize,
}

/// Imputes every untyped locus of `map` for each sample in `corpus`.
/// `reference` spans all loci of the map; `corpus` spans the typed ones.
pub fn impute_untyped(
    reference: &[HaplotypeSequence],
    corpus: &[MultilocusGenotype],
    map: &LocusMap,
    spec: WindowSpec,
    config: &TrainConfig,
    naive: bool,
) -> Result<ImputationResult> {
    config.validate()?;
    let typed = map.typed_indices();
    let n = corpus_length(corpus)?;
    if n != typed.len() {
        return Err(Error::input(format!(
            "genotypes have {n} loci but the map lists {} typed loci",
            typed.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::input("reference panel is empty"));
    }
    if let Some(h) = reference.iter().find(|h| h.len() != map.len()) {
        return Err(Error::input(format!(
            "reference haplotype {:?} has {} loci but the map has {}",
            h.id,
            h.len(),
            map.len()
        )));
    }
    let windows = plan_windows(map, spec)?;
    let mut typed_slot = vec![None; map.len()];
    for (c, &i) in typed.iter().enumerate() {
        typed_slot[i] = Some(c);
    }
    let ids = map.loci();

    let outputs = windows
        .par_iter()
        .map(|w| -> Result<WindowOutput> {
            let (model, iterations) = train_window(reference, w, config, spec.restarts)?;
            let local = window_corpus(corpus, w, &typed_slot);
            let batch = corpus_posteriors(&model, &local, naive)?;
            let calls = w
                .targets
                .iter()
                .map(|&u| {
                    let j = w.loci.binary_search(&u).unwrap();
                    batch
                        .samples
                        .iter()
                        .map(|s| {
                            let locus = &s.substitutions.loci[j];
                            let posterior = if locus.is_zero() {
                                prior_triple(&model, j)
                            } else {
                                locus.triple()
                            };
                            let call = argmax_triple(&posterior, None);
                            ImputedCall {
                                sample_id: s.sample_id.clone(),
                                locus_id: ids[u].id.clone(),
                                posterior,
                                call,
                                confidence: posterior[call.index()],
                            }
                        })
                        .collect()
                })
                .collect();
            Ok(WindowOutput {
                calls,
                iterations,
                forward: batch.stats.forward_evaluations,
                backward: batch.stats.backward_evaluations,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut stats = ImputationStats {
        windows: windows.len(),
        untyped_loci: windows.iter().map(|w| w.targets.len()).sum(),
        window_loci: windows.iter().map(|w| w.loci.len()).sum(),
        ..Default::default()
    };
    let mut entries = Vec::with_capacity(stats.untyped_loci * corpus.len());
    for out in outputs {
        stats.train_iterations += out.iterations;
        stats.forward_evaluations += out.forward;
        stats.backward_evaluations += out.backward;
        for calls in out.calls {
            entries.extend(calls);
        }
    }
    Ok(ImputationResult { entries, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genotype::Locus;

    fn map(typed: &str) -> LocusMap {
        LocusMap::new(
            typed
                .chars()
                .enumerate()
                .map(|(i, c)| Locus {
                    id: format!("rs{i}"),
                    position: 100 * (i as u64 + 1),
                    typed: c == 't',
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn windows_share_gaps_and_truncate_at_ends() {
        let w = plan_windows(&map("uttuuttttu"), WindowSpec { flank: 2, restarts: 1 }).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w[0], Window { loci: vec![0, 1, 2], targets: vec![0] });
        assert_eq!(w[1], Window { loci: vec![1, 2, 3, 4, 5, 6], targets: vec![3, 4] });
        assert_eq!(w[2], Window { loci: vec![7, 8, 9], targets: vec![9] });
    }

    #[test]
    fn no_typed_loci_is_an_error() {
        assert!(plan_windows(&map("uu"), WindowSpec::default()).is_err());
        assert!(plan_windows(&map("tut"), WindowSpec { flank: 0, restarts: 1 }).is_err());
    }

    #[test]
    fn monomorphic_reference_imputes_major() {
        let m = map("ttuttt");
        let reference: Vec<HaplotypeSequence> = ["010101", "110001", "100110", "100010"]
            .iter()
            .enumerate()
            .map(|(i, s)| HaplotypeSequence::parse(format!("h{i}"), s).unwrap())
            .collect();
        let corpus = vec![
            MultilocusGenotype::parse("a", "12111").unwrap(),
            MultilocusGenotype::parse("b", "0?210").unwrap(),
        ];
        let mut config = TrainConfig::new(2);
        config.seed = 4;
        let r = impute_untyped(&reference, &corpus, &m, WindowSpec::default(), &config, false).unwrap();
        assert_eq!(r.entries.len(), 2);
        for e in &r.entries {
            assert_eq!(e.locus_id, "rs2");
            assert_eq!(e.call, Genotype::HomMajor);
            assert!(e.confidence > 1.0 - 1e-4);
            assert!((e.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let naive = impute_untyped(&reference, &corpus, &m, WindowSpec::default(), &config, true).unwrap();
        assert_eq!(naive.entries, r.entries);
    }

    #[test]
    fn shape_errors() {
        let m = map("tut");
        let reference = vec![HaplotypeSequence::parse("h", "01").unwrap()];
        let corpus = vec![MultilocusGenotype::parse("a", "12").unwrap()];
        let config = TrainConfig::new(1);
        assert!(impute_untyped(&reference, &corpus, &m, WindowSpec::default(), &config, false).is_err());
        let reference = vec![HaplotypeSequence::parse("h", "011").unwrap()];
        let corpus = vec![MultilocusGenotype::parse("a", "121").unwrap()];
        assert!(impute_untyped(&reference, &corpus, &m, WindowSpec::default(), &config, false).is_err());
    }
}
