//! Likelihood-ratio genotype error detection and correction.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genotype::{corpus_length, Genotype, MultilocusGenotype};
use crate::inference::{argmax_triple, SubstitutionLikelihoods};
use crate::model::FounderHmm;
use crate::trie::corpus_posteriors;

/// Ratio above which a genotype is flagged unless the caller overrides it.
pub const DEFAULT_THRESHOLD: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub sample_id: String,
    pub locus_id: String,
    pub observed: Genotype,
    /// `max_x P(g[g_i <- x]) / P(g)`; `+inf` when `P(g) = 0`.
    pub ratio: f64,
    pub flagged: bool,
    pub suggested: Genotype,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub threshold: f64,
    pub entries: Vec<ErrorEntry>,
}

impl ErrorReport {
    pub fn flagged(&self) -> impl Iterator<Item = &ErrorEntry> {
        self.entries.iter().filter(|e| e.flagged)
    }
}

/// Entries for one sample, one per non-missing symbol.
pub fn sample_error_entries(
    g: &MultilocusGenotype,
    subs: &SubstitutionLikelihoods,
    locus_ids: &[String],
    threshold: f64,
) -> Vec<ErrorEntry> {
    let impossible = subs.log_likelihood == f64::NEG_INFINITY;
    g.symbols
        .iter()
        .enumerate()
        .filter_map(|(i, &observed)| {
            let dosage = observed.dosage()?;
            let locus = &subs.loci[i];
            let (ratio, suggested) = if locus.is_zero() {
                (f64::INFINITY, observed)
            } else {
                let best = locus.mass.iter().cloned().fold(0.0, f64::max);
                let obs = locus.mass[dosage];
                let ratio = if impossible || obs <= 0.0 {
                    f64::INFINITY
                } else {
                    (best / obs).max(1.0)
                };
                (ratio, argmax_triple(&locus.mass, Some(observed)))
            };
            Some(ErrorEntry {
                sample_id: g.sample_id.clone(),
                locus_id: locus_ids[i].clone(),
                observed,
                ratio,
                flagged: ratio > threshold,
                suggested,
            })
        })
        .collect()
}

/// Scores every non-missing genotype in `corpus` under `model`.
pub fn detect_errors(
    model: &FounderHmm,
    corpus: &[MultilocusGenotype],
    locus_ids: &[String],
    threshold: f64,
    naive: bool,
) -> Result<ErrorReport> {
    if !(threshold > 1.0) {
        return Err(Error::input(format!("threshold must exceed 1, got {threshold}")));
    }
    let n = corpus_length(corpus)?;
    if locus_ids.len() != n {
        return Err(Error::input(format!(
            "{} locus ids supplied for {n} loci",
            locus_ids.len()
        )));
    }
    let batch = corpus_posteriors(model, corpus, naive)?;
    let entries = corpus
        .iter()
        .zip(&batch.samples)
        .flat_map(|(g, s)| sample_error_entries(g, &s.substitutions, locus_ids, threshold))
        .collect();
    Ok(ErrorReport { threshold, entries })
}

/// Replaces every flagged symbol with its suggestion. Returns the corrected
/// corpus and the number of symbols that changed.
pub fn correct_errors(
    corpus: &[MultilocusGenotype],
    locus_ids: &[String],
    report: &ErrorReport,
) -> Result<(Vec<MultilocusGenotype>, usize)> {
    let samples: HashMap<&str, usize> = corpus
        .iter()
        .enumerate()
        .map(|(i, g)| (g.sample_id.as_str(), i))
        .collect();
    let loci: HashMap<&str, usize> = locus_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut out = corpus.to_vec();
    let mut changes = 0;
    for entry in report.flagged() {
        let s = *samples
            .get(entry.sample_id.as_str())
            .ok_or_else(|| Error::input(format!("report names unknown sample {:?}", entry.sample_id)))?;
        let l = *loci
            .get(entry.locus_id.as_str())
            .ok_or_else(|| Error::input(format!("report names unknown locus {:?}", entry.locus_id)))?;
        let current = corpus[s].symbols[l];
        if current != entry.observed {
            return Err(Error::input(format!(
                "report expects {} at sample {:?} locus {:?} but the corpus has {}",
                entry.observed, entry.sample_id, entry.locus_id, current
            )));
        }
        if entry.suggested != current {
            out[s].symbols[l] = entry.suggested;
            changes += 1;
        }
    }
    Ok((out, changes))
}
