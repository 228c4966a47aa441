//! Factorial founder-haplotype HMM for multilocus SNP genotypes.
//!
//! A genotype is modeled as the sum of two haplotypes, each a mosaic of K
//! founder haplotypes generated by a shared locus-indexed Markov chain. The
//! crate trains that chain from haplotype panels, runs the two-chain
//! forward-backward in O(nK³) per sample (shared across samples through
//! genotype tries), and builds error detection, missing-data recovery,
//! untyped-locus imputation and haplotype decoding on top.

pub mod error;
pub mod eval;
pub mod genotype;
pub mod inference;
pub mod model;
pub mod simulate;
pub mod sweep;
pub mod tasks;
pub mod training;
pub mod trie;

pub use error::{Error, Result};
pub use genotype::{Allele, Genotype, HaplotypeSequence, Locus, LocusMap, MultilocusGenotype};
pub use model::FounderHmm;
