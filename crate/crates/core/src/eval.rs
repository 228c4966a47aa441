//! Discordance accounting against ground truth.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genotype::{Genotype, LocusMap, MultilocusGenotype};
use crate::simulate::Site;
use crate::tasks::{ErrorReport, ImputedCall};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scored: usize,
    pub discordant: usize,
    /// `discordant / scored`, zero when nothing was scored.
    pub rate: f64,
    /// `confusion[truth][call]` over called genotypes.
    pub confusion: [[usize; 3]; 3],
    /// Scored positions left missing; counted as discordant.
    pub uncalled: usize,
}

impl EvalReport {
    fn record(&mut self, truth: Genotype, call: Genotype) -> Result<()> {
        let t = truth
            .dosage()
            .ok_or_else(|| Error::input("ground truth contains a missing genotype"))?;
        self.scored += 1;
        match call.dosage() {
            Some(c) => {
                self.confusion[t][c] += 1;
                if c != t {
                    self.discordant += 1;
                }
            }
            None => {
                self.uncalled += 1;
                self.discordant += 1;
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Self {
        self.rate = if self.scored == 0 {
            0.0
        } else {
            self.discordant as f64 / self.scored as f64
        };
        self
    }
}

fn truth_rows(truth: &[MultilocusGenotype]) -> HashMap<&str, &MultilocusGenotype> {
    truth.iter().map(|g| (g.sample_id.as_str(), g)).collect()
}

/// Scores imputed calls against truth genotypes spanning every map locus.
pub fn evaluate_imputation(
    calls: &[ImputedCall],
    truth: &[MultilocusGenotype],
    map: &LocusMap,
) -> Result<EvalReport> {
    let rows = truth_rows(truth);
    let loci: HashMap<&str, usize> = map
        .loci()
        .iter()
        .enumerate()
        .map(|(i, l)| (l.id.as_str(), i))
        .collect();
    let mut report = EvalReport::default();
    for c in calls {
        let g = rows
            .get(c.sample_id.as_str())
            .ok_or_else(|| Error::input(format!("no truth for sample {:?}", c.sample_id)))?;
        let i = *loci
            .get(c.locus_id.as_str())
            .ok_or_else(|| Error::input(format!("locus {:?} is not in the map", c.locus_id)))?;
        if g.len() != map.len() {
            return Err(Error::input(format!(
                "truth for {:?} has {} loci but the map has {}",
                g.sample_id,
                g.len(),
                map.len()
            )));
        }
        report.record(g.symbols[i], c.call)?;
    }
    Ok(report.finish())
}

/// Scores a completed corpus symbol by symbol against aligned truth rows.
pub fn evaluate_genotypes(
    calls: &[MultilocusGenotype],
    truth: &[MultilocusGenotype],
) -> Result<EvalReport> {
    let rows = truth_rows(truth);
    let mut report = EvalReport::default();
    for c in calls {
        let g = rows
            .get(c.sample_id.as_str())
            .ok_or_else(|| Error::input(format!("no truth for sample {:?}", c.sample_id)))?;
        if g.len() != c.len() {
            return Err(Error::input(format!(
                "sample {:?} has {} calls but {} truth genotypes",
                c.sample_id,
                c.len(),
                g.len()
            )));
        }
        for (&t, &x) in g.symbols.iter().zip(&c.symbols) {
            report.record(t, x)?;
        }
    }
    Ok(report.finish())
}

/// Scores only the given positions of a corpus over typed loci.
pub fn evaluate_sites(
    calls: &[MultilocusGenotype],
    truth: &[MultilocusGenotype],
    map: &LocusMap,
    sites: &[Site],
) -> Result<EvalReport> {
    let typed = map.typed_indices();
    let col: HashMap<&str, usize> = typed
        .iter()
        .enumerate()
        .map(|(c, &i)| (map.loci()[i].id.as_str(), c))
        .collect();
    let rows = truth_rows(truth);
    let call_rows: HashMap<&str, &MultilocusGenotype> =
        calls.iter().map(|g| (g.sample_id.as_str(), g)).collect();
    let mut report = EvalReport::default();
    for s in sites {
        let c = *col
            .get(s.locus_id.as_str())
            .ok_or_else(|| Error::input(format!("locus {:?} is not typed", s.locus_id)))?;
        let t = rows
            .get(s.sample_id.as_str())
            .ok_or_else(|| Error::input(format!("no truth for sample {:?}", s.sample_id)))?;
        let x = call_rows
            .get(s.sample_id.as_str())
            .ok_or_else(|| Error::input(format!("no calls for sample {:?}", s.sample_id)))?;
        report.record(t.symbols[typed[c]], x.symbols[c])?;
    }
    Ok(report.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionScores {
    pub flagged: usize,
    pub injected: usize,
    pub true_positives: usize,
    /// One when nothing was flagged.
    pub precision: f64,
    /// One when nothing was injected.
    pub recall: f64,
}

pub fn detection_scores(report: &ErrorReport, injected: &[Site]) -> DetectionScores {
    let truth: BTreeSet<(&str, &str)> = injected
        .iter()
        .map(|s| (s.sample_id.as_str(), s.locus_id.as_str()))
        .collect();
    let flagged: BTreeSet<(&str, &str)> = report
        .flagged()
        .map(|e| (e.sample_id.as_str(), e.locus_id.as_str()))
        .collect();
    let tp = flagged.intersection(&truth).count();
    let ratio = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
    DetectionScores {
        flagged: flagged.len(),
        injected: truth.len(),
        true_positives: tp,
        precision: ratio(tp, flagged.len()),
        recall: ratio(tp, truth.len()),
    }
}
