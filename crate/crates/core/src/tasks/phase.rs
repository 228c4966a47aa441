//! Haplotype decoding through the most probable founder path pair.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::genotype::{Allele, HaplotypeSequence, MultilocusGenotype};
use crate::model::FounderHmm;

#[derive(Debug, Clone, PartialEq)]
pub struct PhasedGenotype {
    pub sample_id: String,
    /// Lexicographically ordered pair of haplotypes.
    pub haplotypes: (HaplotypeSequence, HaplotypeSequence),
    /// Founder paths behind `haplotypes`, in the same order.
    pub founders: (Vec<usize>, Vec<usize>),
    /// `log` of the joint probability of the founder path pair and `g`.
    pub log_probability: f64,
}

/// Max-product pass over founder pairs with the same one-chain-at-a-time
/// collapse as the forward recurrence.
fn viterbi(model: &FounderHmm, g: &MultilocusGenotype) -> Result<(Vec<usize>, Vec<usize>, f64)> {
    let (k, n) = (model.founders(), model.loci());
    let kk = k * k;
    let mut e = vec![0.0; kk];
    let mut v = vec![0.0; kk];
    let mut w = vec![0.0; kk];
    // back pointers: first chain (a for each (c, d)) and second chain (b for each (a, d))
    let mut back_a = vec![0u32; n.saturating_sub(1) * kk];
    let mut back_b = vec![0u32; n.saturating_sub(1) * kk];

    model.emission_matrix(0, g.symbols[0], &mut e);
    let pi = model.initial();
    for a in 0..k {
        for b in 0..k {
            v[a * k + b] = pi[a] * pi[b] * e[a * k + b];
        }
    }
    let mut log_scale = 0.0;
    let rescale = |v: &mut [f64], locus: usize| -> Result<f64> {
        let top = v.iter().cloned().fold(0.0, f64::max);
        if !(top > 0.0) {
            return Err(Error::ZeroProbability { locus });
        }
        v.iter_mut().for_each(|x| *x /= top);
        Ok(top.ln())
    };
    log_scale += rescale(&mut v, 0)?;

    for i in 0..n.saturating_sub(1) {
        let t = model.transition(i);
        let (ba, bb) = (&mut back_a[i * kk..(i + 1) * kk], &mut back_b[i * kk..(i + 1) * kk]);
        // W[a, d] = max_b V[a, b] T[b, d]
        for a in 0..k {
            for d in 0..k {
                let (mut best, mut arg) = (-1.0, 0);
                for b in 0..k {
                    let x = v[a * k + b] * t[b * k + d];
                    if x > best {
                        best = x;
                        arg = b;
                    }
                }
                w[a * k + d] = best;
                bb[a * k + d] = arg as u32;
            }
        }
        // V'[c, d] = E(c, d) max_a T[a, c] W[a, d]
        model.emission_matrix(i + 1, g.symbols[i + 1], &mut e);
        for c in 0..k {
            for d in 0..k {
                let (mut best, mut arg) = (-1.0, 0);
                for a in 0..k {
                    let x = t[a * k + c] * w[a * k + d];
                    if x > best {
                        best = x;
                        arg = a;
                    }
                }
                v[c * k + d] = best * e[c * k + d];
                ba[c * k + d] = arg as u32;
            }
        }
        log_scale += rescale(&mut v, i + 1)?;
    }

    let (mut best, mut end) = (-1.0, 0);
    for (idx, &x) in v.iter().enumerate() {
        if x > best {
            best = x;
            end = idx;
        }
    }
    let mut first = vec![0; n];
    let mut second = vec![0; n];
    let (mut c, mut d) = (end / k, end % k);
    first[n - 1] = c;
    second[n - 1] = d;
    for i in (0..n - 1).rev() {
        let a = back_a[i * kk + c * k + d] as usize;
        let b = back_b[i * kk + a * k + d] as usize;
        first[i] = a;
        second[i] = b;
        c = a;
        d = b;
    }
    Ok((first, second, log_scale + best.ln()))
}

/// Most probable allele pair at locus `i` for founders `(a, b)`, consistent
/// with the observed dosage when it is called.
fn allele_pair(model: &FounderHmm, i: usize, a: usize, b: usize, dosage: Option<usize>) -> (Allele, Allele) {
    let e = model.emission(i);
    let p = |f: usize, x: u8| if x == 1 { e[f] } else { 1.0 - e[f] };
    let mut best = (-1.0, (0, 0));
    for (x, y) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
        if dosage.is_some_and(|d| d != (x + y) as usize) {
            continue;
        }
        let w = p(a, x) * p(b, y);
        if w > best.0 {
            best = (w, (x, y));
        }
    }
    let (x, y) = best.1;
    (Allele::from_code(x).unwrap(), Allele::from_code(y).unwrap())
}

/// Decodes one genotype into an ordered haplotype pair.
pub fn phase_decode(model: &FounderHmm, g: &MultilocusGenotype) -> Result<PhasedGenotype> {
    if g.len() != model.loci() {
        return Err(Error::input(format!(
            "genotype {:?} has {} loci but the model has {}",
            g.sample_id,
            g.len(),
            model.loci()
        )));
    }
    let (mut fa, mut fb, log_probability) = viterbi(model, g)?;
    let mut ha = Vec::with_capacity(g.len());
    let mut hb = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        let (x, y) = allele_pair(model, i, fa[i], fb[i], g.symbols[i].dosage());
        ha.push(x);
        hb.push(y);
    }
    if ha > hb {
        std::mem::swap(&mut ha, &mut hb);
        std::mem::swap(&mut fa, &mut fb);
    }
    Ok(PhasedGenotype {
        sample_id: g.sample_id.clone(),
        haplotypes: (
            HaplotypeSequence::new(format!("{}_a", g.sample_id), ha),
            HaplotypeSequence::new(format!("{}_b", g.sample_id), hb),
        ),
        founders: (fa, fb),
        log_probability,
    })
}

/// Phases every sample; the result keeps corpus order.
pub fn phase_corpus(model: &FounderHmm, corpus: &[MultilocusGenotype]) -> Result<Vec<PhasedGenotype>> {
    corpus.par_iter().map(|g| phase_decode(model, g)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genotype::combine_haplotypes;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn homozygous_genotype_fixes_both_haplotypes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = FounderHmm::random(3, 5, 0.1, 0.9, &mut rng);
        let g = MultilocusGenotype::parse("s", "02200").unwrap();
        let p = phase_decode(&m, &g).unwrap();
        assert_eq!(p.haplotypes.0.allele_string(), "01100");
        assert_eq!(p.haplotypes.1.allele_string(), "01100");
        assert_eq!(p.haplotypes.0.id, "s_a");
    }

    #[test]
    fn deterministic_founders_split_heterozygotes() {
        let m = FounderHmm::new(
            2,
            3,
            vec![0.5, 0.5],
            vec![0.9, 0.1, 0.1, 0.9, 0.9, 0.1, 0.1, 0.9],
            vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
        )
        .unwrap();
        let g = MultilocusGenotype::parse("s", "111").unwrap();
        let p = phase_decode(&m, &g).unwrap();
        assert_eq!(p.haplotypes.0.allele_string(), "000");
        assert_eq!(p.haplotypes.1.allele_string(), "111");
        assert_eq!(p.founders, (vec![0, 0, 0], vec![1, 1, 1]));
        let expected = (0.25f64 * 0.81 * 0.81).ln();
        assert!((p.log_probability - expected).abs() < 1e-12);
    }

    #[test]
    fn decoded_pair_sums_to_called_genotype() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = FounderHmm::random(4, 12, 0.05, 0.95, &mut rng);
        let g = MultilocusGenotype::parse("s", "0121?2101?10").unwrap();
        let p = phase_decode(&m, &g).unwrap();
        let sum = combine_haplotypes("s", &p.haplotypes.0, &p.haplotypes.1).unwrap();
        for (i, s) in g.symbols.iter().enumerate() {
            if !s.is_missing() {
                assert_eq!(sum.symbols[i], *s);
            }
        }
        assert!(p.haplotypes.0.alleles <= p.haplotypes.1.alleles);
    }

    #[test]
    fn impossible_genotype_is_signalled() {
        let m = FounderHmm::new(1, 2, vec![1.0], vec![1.0], vec![0.0, 0.0]).unwrap();
        let g = MultilocusGenotype::parse("s", "01").unwrap();
        assert_eq!(phase_decode(&m, &g), Err(Error::ZeroProbability { locus: 1 }));
    }
}
