//! Synthetic founder-mosaic data with known ground truth.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genotype::{
    combine_haplotypes, Allele, Genotype, HaplotypeSequence, Locus, LocusMap, MultilocusGenotype,
};

#[derive(Debug, Clone, PartialEq)]
pub enum FounderSource {
    /// Per-locus minor-allele frequency drawn uniformly from `[lo, hi]`,
    /// founder alleles drawn independently at that frequency.
    Random { maf_lo: f64, maf_hi: f64 },
    Supplied(Vec<HaplotypeSequence>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub founders: usize,
    pub source: FounderSource,
    /// Probability of switching to another founder between adjacent loci.
    pub switch_rate: f64,
    pub loci: usize,
    pub samples: usize,
    pub reference_haplotypes: usize,
    pub error_rate: f64,
    pub missing_rate: f64,
    pub mask_fraction: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(founders: usize, loci: usize, samples: usize) -> Self {
        SimConfig {
            founders,
            source: FounderSource::Random {
                maf_lo: 0.05,
                maf_hi: 0.5,
            },
            switch_rate: 0.01,
            loci,
            samples,
            reference_haplotypes: 120,
            error_rate: 0.0,
            missing_rate: 0.0,
            mask_fraction: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rate = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::input(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        rate("switch_rate", self.switch_rate)?;
        rate("error_rate", self.error_rate)?;
        rate("missing_rate", self.missing_rate)?;
        if !(0.0..1.0).contains(&self.mask_fraction) {
            return Err(Error::input(format!(
                "mask_fraction must lie in [0, 1), got {}",
                self.mask_fraction
            )));
        }
        if self.loci == 0 {
            return Err(Error::input("loci must be at least 1"));
        }
        if self.samples == 0 {
            return Err(Error::input("samples must be at least 1"));
        }
        match &self.source {
            FounderSource::Random { maf_lo, maf_hi } => {
                if !(0.0 <= *maf_lo && maf_lo <= maf_hi && *maf_hi <= 1.0) {
                    return Err(Error::input(format!(
                        "minor-allele frequency range [{maf_lo}, {maf_hi}] is invalid"
                    )));
                }
                if self.founders == 0 {
                    return Err(Error::input("founders must be at least 1"));
                }
            }
            FounderSource::Supplied(f) => {
                if f.len() != self.founders {
                    return Err(Error::input(format!(
                        "{} founder haplotypes supplied for {} founders",
                        f.len(),
                        self.founders
                    )));
                }
                if f.iter().any(|h| h.len() != self.loci) {
                    return Err(Error::input("supplied founders must span every locus"));
                }
            }
        }
        Ok(())
    }
}

/// A perturbed position in the observed corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site {
    pub sample_id: String,
    pub locus_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimData {
    pub founders: Vec<HaplotypeSequence>,
    /// Two haplotypes per sample, `{id}_a` then `{id}_b`, over all loci.
    pub truth_haplotypes: Vec<HaplotypeSequence>,
    /// Error-free genotypes over all loci.
    pub truth: Vec<MultilocusGenotype>,
    /// Genotypes after errors and missingness, restricted to typed loci.
    pub observed: Vec<MultilocusGenotype>,
    pub map: LocusMap,
    /// Independent haplotypes over all loci.
    pub reference: Vec<HaplotypeSequence>,
    /// Errors surviving in `observed` (not later overwritten or masked).
    pub errors: Vec<Site>,
    pub missing: Vec<Site>,
    /// Map indices relabeled untyped.
    pub masked: Vec<usize>,
}

/// Indices masked for `fraction`: every `round(1 / fraction)`-th locus.
pub fn masked_indices(loci: usize, fraction: f64) -> Vec<usize> {
    if fraction <= 0.0 {
        return Vec::new();
    }
    let stride = ((1.0 / fraction).round() as usize).max(1);
    (1..=loci / stride).map(|j| j * stride - 1).collect()
}

fn mosaic<R: Rng>(
    id: String,
    founders: &[HaplotypeSequence],
    switch_rate: f64,
    rng: &mut R,
) -> HaplotypeSequence {
    let k = founders.len();
    let n = founders[0].len();
    let mut f = rng.gen_range(0..k);
    let mut alleles = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 && k > 1 && rng.gen::<f64>() < switch_rate {
            let other = rng.gen_range(0..k - 1);
            f = if other >= f { other + 1 } else { other };
        }
        alleles.push(founders[f].alleles[i]);
    }
    HaplotypeSequence::new(id, alleles)
}

pub fn simulate(config: &SimConfig) -> Result<SimData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.loci;
    let founders = match &config.source {
        FounderSource::Supplied(f) => f.clone(),
        FounderSource::Random { maf_lo, maf_hi } => {
            let mafs: Vec<f64> = (0..n).map(|_| rng.gen_range(*maf_lo..=*maf_hi)).collect();
            (0..config.founders)
                .map(|f| {
                    let alleles = mafs
                        .iter()
                        .map(|&p| if rng.gen::<f64>() < p { Allele::Minor } else { Allele::Major })
                        .collect();
                    HaplotypeSequence::new(format!("F{}", f + 1), alleles)
                })
                .collect()
        }
    };

    let reference: Vec<HaplotypeSequence> = (0..config.reference_haplotypes)
        .map(|r| mosaic(format!("ref{}", r + 1), &founders, config.switch_rate, &mut rng))
        .collect();

    let mut truth_haplotypes = Vec::with_capacity(2 * config.samples);
    let mut truth = Vec::with_capacity(config.samples);
    for s in 0..config.samples {
        let id = format!("S{}", s + 1);
        let a = mosaic(format!("{id}_a"), &founders, config.switch_rate, &mut rng);
        let b = mosaic(format!("{id}_b"), &founders, config.switch_rate, &mut rng);
        truth.push(combine_haplotypes(id, &a, &b)?);
        truth_haplotypes.push(a);
        truth_haplotypes.push(b);
    }

    let masked = masked_indices(n, config.mask_fraction);
    let masked_set: BTreeSet<usize> = masked.iter().copied().collect();
    let map = LocusMap::new(
        (0..n)
            .map(|i| Locus {
                id: format!("snp{}", i + 1),
                position: 1000 * (i as u64 + 1),
                typed: !masked_set.contains(&i),
            })
            .collect(),
    )?;
    let typed = map.typed_indices();

    // channels in order: errors, missingness, masking
    let mut noisy: Vec<Vec<Genotype>> = truth.iter().map(|g| g.symbols.clone()).collect();
    let mut erred = BTreeSet::new();
    for (s, row) in noisy.iter_mut().enumerate() {
        for (i, x) in row.iter_mut().enumerate() {
            if rng.gen::<f64>() < config.error_rate {
                let others: Vec<Genotype> =
                    Genotype::CALLED.iter().copied().filter(|g| g != x).collect();
                *x = *others.choose(&mut rng).unwrap();
                erred.insert((s, i));
            }
        }
    }
    let mut missing_at = BTreeSet::new();
    for (s, row) in noisy.iter_mut().enumerate() {
        for (i, x) in row.iter_mut().enumerate() {
            if rng.gen::<f64>() < config.missing_rate {
                *x = Genotype::Missing;
                missing_at.insert((s, i));
                erred.remove(&(s, i));
            }
        }
    }
    let site = |s: usize, i: usize| Site {
        sample_id: truth[s].sample_id.clone(),
        locus_id: map.loci()[i].id.clone(),
    };
    let errors = erred
        .iter()
        .filter(|(_, i)| !masked_set.contains(i))
        .map(|&(s, i)| site(s, i))
        .collect();
    let missing = missing_at
        .iter()
        .filter(|(_, i)| !masked_set.contains(i))
        .map(|&(s, i)| site(s, i))
        .collect();
    let observed = noisy
        .iter()
        .zip(&truth)
        .map(|(row, g)| MultilocusGenotype {
            sample_id: g.sample_id.clone(),
            symbols: typed.iter().map(|&i| row[i]).collect(),
        })
        .collect();

    Ok(SimData {
        founders,
        truth_haplotypes,
        truth,
        observed,
        map,
        reference,
        errors,
        missing,
        masked,
    })
}
