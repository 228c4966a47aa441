//! Allele and genotype alphabets plus the per-sample containers built on them.
//!
//! Genotypes use the allele-sum coding: a genotype is the number of minor
//! alleles carried at the locus, so `0` and `2` are the two homozygotes and
//! `1` is the heterozygote. `Missing` is a separate symbol and never takes
//! part in arithmetic.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allele carried on one chromosome at a biallelic locus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Allele {
    Major = 0,
    Minor = 1,
}

impl Allele {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Allele::Major),
            1 => Some(Allele::Minor),
            _ => None,
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '0' => Some(Allele::Major),
            '1' => Some(Allele::Minor),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Allele::Major => '0',
            Allele::Minor => '1',
        }
    }
}

/// Unphased genotype at one locus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Genotype {
    HomMajor = 0,
    Het = 1,
    HomMinor = 2,
    Missing = 3,
}

impl Genotype {
    /// The three observable genotypes in code order.
    pub const CALLED: [Genotype; 3] = [Genotype::HomMajor, Genotype::Het, Genotype::HomMinor];

    /// Index in `0..4`, with `Missing` last. Used for trie branching.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(Genotype::HomMajor),
            1 => Some(Genotype::Het),
            2 => Some(Genotype::HomMinor),
            3 => Some(Genotype::Missing),
            _ => None,
        }
    }

    /// Minor-allele count, `None` for `Missing`.
    pub fn dosage(self) -> Option<usize> {
        match self {
            Genotype::Missing => None,
            g => Some(g as usize),
        }
    }

    pub fn from_alleles(a: Allele, b: Allele) -> Self {
        Genotype::CALLED[(a.code() + b.code()) as usize]
    }

    pub fn is_missing(self) -> bool {
        self == Genotype::Missing
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '0' => Some(Genotype::HomMajor),
            '1' => Some(Genotype::Het),
            '2' => Some(Genotype::HomMinor),
            '?' => Some(Genotype::Missing),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Genotype::HomMajor => '0',
            Genotype::Het => '1',
            Genotype::HomMinor => '2',
            Genotype::Missing => '?',
        }
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// Multilocus genotype of a single sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultilocusGenotype {
    pub sample_id: String,
    pub symbols: Vec<Genotype>,
}

impl MultilocusGenotype {
    pub fn new(sample_id: impl Into<String>, symbols: Vec<Genotype>) -> Result<Self> {
        let sample_id = sample_id.into();
        if sample_id.is_empty() {
            return Err(Error::input("sample id must be non-empty"));
        }
        Ok(MultilocusGenotype { sample_id, symbols })
    }

    /// Parses a compact string such as `"1?2"`.
    pub fn parse(sample_id: impl Into<String>, symbols: &str) -> Result<Self> {
        let symbols = symbols
            .chars()
            .map(|c| {
                Genotype::from_char(c)
                    .ok_or_else(|| Error::input(format!("invalid genotype symbol {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sample_id, symbols)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Copy of this genotype with locus `i` (0-based) set to `x`.
    pub fn substitute(&self, i: usize, x: Genotype) -> Result<Self> {
        if i >= self.symbols.len() {
            return Err(Error::IndexOutOfRange {
                what: "genotype",
                index: i,
                len: self.symbols.len(),
            });
        }
        let mut out = self.clone();
        out.symbols[i] = x;
        Ok(out)
    }

    pub fn symbol_string(&self) -> String {
        self.symbols.iter().map(|g| g.to_char()).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.symbols.iter().filter(|g| g.is_missing()).count()
    }
}

/// A complete (no missing alleles) haplotype.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HaplotypeSequence {
    pub id: String,
    pub alleles: Vec<Allele>,
}

impl HaplotypeSequence {
    pub fn new(id: impl Into<String>, alleles: Vec<Allele>) -> Self {
        HaplotypeSequence {
            id: id.into(),
            alleles,
        }
    }

    pub fn parse(id: impl Into<String>, alleles: &str) -> Result<Self> {
        let alleles = alleles
            .chars()
            .map(|c| {
                Allele::from_char(c)
                    .ok_or_else(|| Error::input(format!("invalid allele symbol {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(id, alleles))
    }

    pub fn len(&self) -> usize {
        self.alleles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alleles.is_empty()
    }

    /// Restriction to the given locus indices, in the given order.
    pub fn select(&self, loci: &[usize]) -> Self {
        HaplotypeSequence {
            id: self.id.clone(),
            alleles: loci.iter().map(|&i| self.alleles[i]).collect(),
        }
    }

    pub fn allele_string(&self) -> String {
        self.alleles.iter().map(|a| a.to_char()).collect()
    }
}

/// Sum of two haplotypes as an unphased genotype.
pub fn combine_haplotypes(
    sample_id: impl Into<String>,
    a: &HaplotypeSequence,
    b: &HaplotypeSequence,
) -> Result<MultilocusGenotype> {
    if a.len() != b.len() {
        return Err(Error::input(format!(
            "haplotype lengths differ ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let symbols = a
        .alleles
        .iter()
        .zip(&b.alleles)
        .map(|(&x, &y)| Genotype::from_alleles(x, y))
        .collect();
    MultilocusGenotype::new(sample_id, symbols)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Locus {
    pub id: String,
    pub position: u64,
    pub typed: bool,
}

/// Ordered marker map distinguishing typed from untyped loci.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocusMap {
    loci: Vec<Locus>,
}

impl LocusMap {
    pub fn new(loci: Vec<Locus>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(loci.len());
        for (i, locus) in loci.iter().enumerate() {
            if locus.id.is_empty() {
                return Err(Error::input(format!("locus {i} has an empty id")));
            }
            if !seen.insert(locus.id.as_str()) {
                return Err(Error::input(format!("duplicate locus id {:?}", locus.id)));
            }
            if i > 0 && loci[i - 1].position >= locus.position {
                return Err(Error::input(format!(
                    "positions must be strictly increasing (locus {:?} at {} follows {})",
                    locus.id,
                    locus.position,
                    loci[i - 1].position
                )));
            }
        }
        Ok(LocusMap { loci })
    }

    pub fn loci(&self) -> &[Locus] {
        &self.loci
    }

    pub fn len(&self) -> usize {
        self.loci.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loci.is_empty()
    }

    pub fn typed_indices(&self) -> Vec<usize> {
        (0..self.loci.len()).filter(|&i| self.loci[i].typed).collect()
    }

    pub fn untyped_indices(&self) -> Vec<usize> {
        (0..self.loci.len()).filter(|&i| !self.loci[i].typed).collect()
    }

    /// Same loci with the given indices relabeled as untyped.
    pub fn with_untyped(&self, untyped: &[usize]) -> Self {
        let mut loci = self.loci.clone();
        for &i in untyped {
            loci[i].typed = false;
        }
        LocusMap { loci }
    }
}

/// Validates a corpus shares one length and returns it.
pub fn corpus_length(corpus: &[MultilocusGenotype]) -> Result<usize> {
    let first = corpus
        .first()
        .ok_or_else(|| Error::input("genotype corpus is empty"))?;
    let n = first.len();
    for g in corpus {
        if g.len() != n {
            return Err(Error::input(format!(
                "sample {:?} has {} loci, expected {}",
                g.sample_id,
                g.len(),
                n
            )));
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> MultilocusGenotype {
        MultilocusGenotype::parse("s", s).unwrap()
    }

    #[test]
    fn substitute_examples() {
        assert_eq!(g("1?2").substitute(1, Genotype::HomMajor).unwrap(), g("102"));
        assert_eq!(g("11").substitute(0, Genotype::Het).unwrap(), g("11"));
        assert_eq!(
            g("00000").substitute(4, Genotype::HomMinor).unwrap(),
            g("00002")
        );
    }

    #[test]
    fn substitute_leaves_input_alone_and_inverts() {
        let orig = g("1?2");
        let changed = orig.substitute(0, Genotype::HomMinor).unwrap();
        assert_eq!(orig, g("1?2"));
        assert_eq!(changed.substitute(0, Genotype::Het).unwrap(), orig);
    }

    #[test]
    fn substitute_out_of_range() {
        assert!(matches!(
            g("12").substitute(2, Genotype::Het),
            Err(Error::IndexOutOfRange { index: 2, len: 2, .. })
        ));
    }

    #[test]
    fn genotype_is_allele_sum() {
        assert_eq!(Genotype::from_alleles(Allele::Major, Allele::Minor), Genotype::Het);
        assert_eq!(Genotype::from_alleles(Allele::Minor, Allele::Minor), Genotype::HomMinor);
        assert_eq!(Genotype::Missing.dosage(), None);
    }

    #[test]
    fn empty_sample_id_rejected() {
        assert!(MultilocusGenotype::new("", vec![]).is_err());
    }

    #[test]
    fn locus_map_rejects_unsorted_and_duplicates() {
        let l = |id: &str, p| Locus {
            id: id.into(),
            position: p,
            typed: true,
        };
        assert!(LocusMap::new(vec![l("a", 10), l("b", 10)]).is_err());
        assert!(LocusMap::new(vec![l("a", 10), l("a", 20)]).is_err());
        let map = LocusMap::new(vec![l("a", 10), l("b", 20), l("c", 30)]).unwrap();
        let map = map.with_untyped(&[1]);
        assert_eq!(map.typed_indices(), vec![0, 2]);
        assert_eq!(map.untyped_indices(), vec![1]);
    }
}
