#![allow(dead_code)]

use fhmm_core::genotype::{Genotype, HaplotypeSequence, MultilocusGenotype};
use fhmm_core::model::FounderHmm;
use fhmm_oracle::ChainParams;
use rand::Rng;

pub fn chain(model: &FounderHmm) -> ChainParams {
    let n = model.loci();
    ChainParams {
        k: model.founders(),
        initial: model.initial().to_vec(),
        transitions: (0..n - 1).map(|i| model.transition(i).to_vec()).collect(),
        emissions: (0..n).map(|i| model.emission(i).to_vec()).collect(),
    }
}

pub fn symbols(g: &MultilocusGenotype) -> Vec<Option<u8>> {
    g.symbols.iter().map(|s| s.dosage().map(|d| d as u8)).collect()
}

pub fn random_genotype<R: Rng>(id: &str, n: usize, missing: f64, rng: &mut R) -> MultilocusGenotype {
    let symbols = (0..n)
        .map(|_| {
            if rng.gen_bool(missing) {
                Genotype::Missing
            } else {
                Genotype::CALLED[rng.gen_range(0..3)]
            }
        })
        .collect();
    MultilocusGenotype::new(id, symbols).unwrap()
}

pub fn random_haplotype<R: Rng>(id: String, n: usize, rng: &mut R) -> HaplotypeSequence {
    let s: String = (0..n).map(|_| if rng.gen_bool(0.4) { '1' } else { '0' }).collect();
    HaplotypeSequence::parse(id, &s).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// The ten five-locus genotypes of the worked trie example.
pub const WORKED_EXAMPLE: [&str; 10] = [
    "11122", "12102", "12202", "11222", "12102", "12100", "21211", "11111", "11111", "11122",
];

pub fn worked_example() -> Vec<MultilocusGenotype> {
    WORKED_EXAMPLE
        .iter()
        .zip("ABCDEFGHIJ".chars())
        .map(|(s, id)| MultilocusGenotype::parse(id.to_string(), s).unwrap())
        .collect()
}
