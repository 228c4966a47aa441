//! Missing-data recovery at typed loci.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genotype::{corpus_length, Genotype, MultilocusGenotype};
use crate::inference::{argmax_triple, SubstitutionLikelihoods};
use crate::model::{genotype_triple, FounderHmm};
use crate::trie::corpus_posteriors;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fill {
    pub sample_id: String,
    pub locus_id: String,
    pub value: Genotype,
    /// Posterior probability of `value`.
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub corpus: Vec<MultilocusGenotype>,
    pub fills: Vec<Fill>,
}

/// Marginal genotype triple at locus `i` under the model alone.
pub(crate) fn prior_triple(model: &FounderHmm, i: usize) -> [f64; 3] {
    let k = model.founders();
    let mut marginal = model.initial().to_vec();
    let mut next = vec![0.0; k];
    for j in 0..i {
        let t = model.transition(j);
        next.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..k {
            for b in 0..k {
                next[b] += marginal[a] * t[a * k + b];
            }
        }
        std::mem::swap(&mut marginal, &mut next);
    }
    let e = model.emission(i);
    let mut out = [0.0; 3];
    for a in 0..k {
        for b in 0..k {
            let t = genotype_triple(e[a], e[b]);
            let w = marginal[a] * marginal[b];
            for x in 0..3 {
                out[x] += w * t[x];
            }
        }
    }
    let s: f64 = out.iter().sum();
    out.map(|v| v / s)
}

/// Fills for one sample from its substitution likelihoods.
pub fn sample_fills(
    model: &FounderHmm,
    g: &MultilocusGenotype,
    subs: &SubstitutionLikelihoods,
    locus_ids: &[String],
) -> (MultilocusGenotype, Vec<Fill>) {
    let mut out = g.clone();
    let mut fills = Vec::new();
    for (i, s) in g.symbols.iter().enumerate() {
        if !s.is_missing() {
            continue;
        }
        let locus = &subs.loci[i];
        let triple = if locus.is_zero() {
            // the rest of the sample is impossible under the model
            prior_triple(model, i)
        } else {
            locus.triple()
        };
        let value = argmax_triple(&triple, None);
        out.symbols[i] = value;
        fills.push(Fill {
            sample_id: g.sample_id.clone(),
            locus_id: locus_ids[i].clone(),
            value,
            confidence: triple[value.index()],
        });
    }
    (out, fills)
}

/// Replaces every missing symbol with the argmax of its posterior triple,
/// all from a single posterior pass per sample.
pub fn recover_missing(
    model: &FounderHmm,
    corpus: &[MultilocusGenotype],
    locus_ids: &[String],
    naive: bool,
) -> Result<Recovery> {
    let n = corpus_length(corpus)?;
    if locus_ids.len() != n {
        return Err(Error::input(format!(
            "{} locus ids supplied for {n} loci",
            locus_ids.len()
        )));
    }
    let mut out = Recovery {
        corpus: Vec::with_capacity(corpus.len()),
        fills: Vec::new(),
    };
    if corpus.iter().all(|g| g.missing_count() == 0) {
        out.corpus = corpus.to_vec();
        return Ok(out);
    }
    let batch = corpus_posteriors(model, corpus, naive)?;
    for (g, s) in corpus.iter().zip(&batch.samples) {
        let (filled, fills) = sample_fills(model, g, &s.substitutions, locus_ids);
        out.corpus.push(filled);
        out.fills.extend(fills);
    }
    Ok(out)
}
