//! Founder-haplotype chain parameters.
//!
//! One chain is parameterized; the factorial model pairs two copies of it
//! (maternal and paternal founder paths share every parameter).

use rand::Rng;

use crate::error::{Error, Result};
use crate::genotype::Genotype;

/// Tolerance for stochasticity checks on the initial vector and transition rows.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// Locus-indexed K-founder chain.
///
/// * `initial[f]` is the probability of starting in founder `f`.
/// * `transition(i)` is the row-major K×K matrix for the interval between
///   loci `i` and `i + 1`; row `a` is the distribution of the next founder.
/// * `emission(i)[f]` is the probability that founder `f` carries the minor
///   allele at locus `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FounderHmm {
    k: usize,
    n: usize,
    initial: Vec<f64>,
    transitions: Vec<f64>,
    emissions: Vec<f64>,
}

impl FounderHmm {
    /// Builds and validates a model from flat buffers: `transitions` holds
    /// `n - 1` row-major K×K matrices, `emissions` holds `n` rows of length K.
    pub fn new(
        k: usize,
        n: usize,
        initial: Vec<f64>,
        transitions: Vec<f64>,
        emissions: Vec<f64>,
    ) -> Result<Self> {
        let model = FounderHmm {
            k,
            n,
            initial,
            transitions,
            emissions,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let (k, n) = (self.k, self.n);
        if k == 0 {
            return Err(Error::InvalidModel("founder count must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::InvalidModel("locus count must be at least 1".into()));
        }
        if self.initial.len() != k {
            return Err(Error::InvalidModel(format!(
                "initial vector has {} entries, expected {k}",
                self.initial.len()
            )));
        }
        if self.transitions.len() != (n - 1) * k * k {
            return Err(Error::InvalidModel(format!(
                "expected {} transition entries, found {}",
                (n - 1) * k * k,
                self.transitions.len()
            )));
        }
        if self.emissions.len() != n * k {
            return Err(Error::InvalidModel(format!(
                "expected {} emission entries, found {}",
                n * k,
                self.emissions.len()
            )));
        }
        check_distribution(&self.initial, "initial distribution")?;
        for i in 0..n - 1 {
            for (a, row) in self.transition(i).chunks_exact(k).enumerate() {
                check_distribution(row, &format!("transition row {a} of interval {i}"))?;
            }
        }
        for (idx, &p) in self.emissions.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidModel(format!(
                    "emission at locus {} founder {} is {p}, outside [0, 1]",
                    idx / k,
                    idx % k
                )));
            }
        }
        Ok(())
    }

    /// Uniform initial and transitions with emissions drawn from `[lo, hi]`.
    pub fn random<R: Rng>(k: usize, n: usize, lo: f64, hi: f64, rng: &mut R) -> Self {
        let mut initial: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
        normalize(&mut initial);
        let mut transitions = vec![0.0; n.saturating_sub(1) * k * k];
        for row in transitions.chunks_exact_mut(k) {
            for v in row.iter_mut() {
                *v = rng.gen_range(0.05..1.0);
            }
            normalize(row);
        }
        let emissions = (0..n * k).map(|_| rng.gen_range(lo..=hi)).collect();
        FounderHmm {
            k,
            n,
            initial,
            transitions,
            emissions,
        }
    }

    pub fn founders(&self) -> usize {
        self.k
    }

    pub fn loci(&self) -> usize {
        self.n
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Row-major K×K transition matrix between locus `i` and `i + 1`.
    pub fn transition(&self, i: usize) -> &[f64] {
        let kk = self.k * self.k;
        &self.transitions[i * kk..(i + 1) * kk]
    }

    pub fn emission(&self, i: usize) -> &[f64] {
        &self.emissions[i * self.k..(i + 1) * self.k]
    }

    pub fn transitions_flat(&self) -> &[f64] {
        &self.transitions
    }

    pub fn emissions_flat(&self) -> &[f64] {
        &self.emissions
    }

    /// Genotype probabilities `(E(0), E(1), E(2))` for founder pair `(f, g)`
    /// at locus `i`, marginalizing over the two allele draws.
    pub fn emission_table(&self, i: usize, f: usize, g: usize) -> Result<[f64; 3]> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                what: "locus",
                index: i,
                len: self.n,
            });
        }
        for founder in [f, g] {
            if founder >= self.k {
                return Err(Error::IndexOutOfRange {
                    what: "founder",
                    index: founder,
                    len: self.k,
                });
            }
        }
        let e = self.emission(i);
        Ok(genotype_triple(e[f], e[g]))
    }

    /// Fills `out` (K×K, row-major) with the emission factor of symbol `x` at
    /// locus `i` for every founder pair. `Missing` gives the all-ones matrix.
    pub fn emission_matrix(&self, i: usize, x: Genotype, out: &mut [f64]) {
        let k = self.k;
        let e = self.emission(i);
        debug_assert_eq!(out.len(), k * k);
        match x {
            Genotype::Missing => out.fill(1.0),
            Genotype::HomMajor => {
                for a in 0..k {
                    for b in 0..k {
                        out[a * k + b] = (1.0 - e[a]) * (1.0 - e[b]);
                    }
                }
            }
            Genotype::Het => {
                for a in 0..k {
                    for b in 0..k {
                        out[a * k + b] = e[a] * (1.0 - e[b]) + (1.0 - e[a]) * e[b];
                    }
                }
            }
            Genotype::HomMinor => {
                for a in 0..k {
                    for b in 0..k {
                        out[a * k + b] = e[a] * e[b];
                    }
                }
            }
        }
    }

    /// Restriction of the model to a contiguous locus range.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n {
            return Err(Error::input(format!(
                "invalid locus range {start}..{end} for a {}-locus model",
                self.n
            )));
        }
        let k = self.k;
        // founder marginal at `start` becomes the new initial distribution
        let mut initial = self.initial.clone();
        for i in 0..start {
            initial = propagate(&initial, self.transition(i), k);
        }
        normalize(&mut initial);
        let kk = k * k;
        FounderHmm::new(
            k,
            end - start,
            initial,
            self.transitions[start * kk..(end - 1) * kk].to_vec(),
            self.emissions[start * k..end * k].to_vec(),
        )
    }

    /// Time-reversed chain: loci in reverse order, transitions replaced by
    /// their Bayes reversal under the forward founder marginals. Assigns the
    /// same probability to a reversed haplotype as `self` does to the original.
    pub fn reversed(&self) -> Self {
        let (k, n) = (self.k, self.n);
        let mut marginals = Vec::with_capacity(n);
        marginals.push(self.initial.clone());
        for i in 0..n - 1 {
            let next = propagate(&marginals[i], self.transition(i), k);
            marginals.push(next);
        }
        let mut transitions = Vec::with_capacity((n - 1) * k * k);
        for j in 0..n - 1 {
            // reversed interval j joins original loci n-1-j (from) and n-2-j (to)
            let i = n - 2 - j;
            let t = self.transition(i);
            for b in 0..k {
                let pb = marginals[i + 1][b];
                let mut row: Vec<f64> = (0..k)
                    .map(|a| {
                        if pb > 0.0 {
                            marginals[i][a] * t[a * k + b] / pb
                        } else {
                            1.0
                        }
                    })
                    .collect();
                normalize(&mut row);
                transitions.extend_from_slice(&row);
            }
        }
        let mut initial = marginals[n - 1].clone();
        normalize(&mut initial);
        let emissions = (0..n).rev().flat_map(|i| self.emission(i).to_vec()).collect();
        FounderHmm {
            k,
            n,
            initial,
            transitions,
            emissions,
        }
    }
}

/// `(E(0), E(1), E(2))` for minor-allele probabilities `p` and `q`.
pub fn genotype_triple(p: f64, q: f64) -> [f64; 3] {
    [
        (1.0 - p) * (1.0 - q),
        p * (1.0 - q) + (1.0 - p) * q,
        p * q,
    ]
}

fn propagate(dist: &[f64], transition: &[f64], k: usize) -> Vec<f64> {
    let mut next = vec![0.0; k];
    for a in 0..k {
        let w = dist[a];
        for b in 0..k {
            next[b] += w * transition[a * k + b];
        }
    }
    next
}

pub(crate) fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
}

fn check_distribution(v: &[f64], what: &str) -> Result<()> {
    if let Some(bad) = v.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidModel(format!("{what} has invalid entry {bad}")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOLERANCE {
        return Err(Error::InvalidModel(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_locus(k: usize, e: Vec<f64>) -> FounderHmm {
        FounderHmm::new(k, 1, vec![1.0 / k as f64; k], vec![], e).unwrap()
    }

    #[test]
    fn emission_table_examples() {
        let m = one_locus(2, vec![0.0, 1.0]);
        assert_eq!(m.emission_table(0, 0, 1).unwrap(), [0.0, 1.0, 0.0]);
        let m = one_locus(2, vec![0.5, 0.5]);
        assert_eq!(m.emission_table(0, 0, 1).unwrap(), [0.25, 0.5, 0.25]);
        let m = one_locus(2, vec![0.2, 0.4]);
        let t = m.emission_table(0, 0, 1).unwrap();
        // 0.8*0.6, 0.2*0.6 + 0.8*0.4, 0.2*0.4
        for (got, want) in t.iter().zip([0.48, 0.44, 0.08]) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn emission_table_bounds() {
        let m = one_locus(2, vec![0.2, 0.4]);
        assert!(m.emission_table(1, 0, 0).is_err());
        assert!(m.emission_table(0, 2, 0).is_err());
        assert!(m.emission_table(0, 0, 2).is_err());
    }

    #[test]
    fn emission_triples_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = FounderHmm::random(4, 20, 0.0, 1.0, &mut rng);
        for i in 0..20 {
            for a in 0..4 {
                for b in 0..4 {
                    let t = m.emission_table(i, a, b).unwrap();
                    assert!(t.iter().all(|&x| x >= 0.0));
                    assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn validation_rejects_non_stochastic_rows() {
        let bad = FounderHmm::new(2, 2, vec![0.5, 0.5], vec![0.5, 0.5 + 2e-9, 0.1, 0.9], vec![0.1; 4]);
        assert!(matches!(bad, Err(Error::InvalidModel(_))));
        let ok = FounderHmm::new(2, 2, vec![0.5, 0.5], vec![0.5, 0.5 + 5e-10, 0.1, 0.9], vec![0.1; 4]);
        assert!(ok.is_ok());
        assert!(FounderHmm::new(1, 1, vec![1.0], vec![], vec![1.5]).is_err());
        assert!(FounderHmm::new(2, 1, vec![0.7, 0.7], vec![], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn reversal_is_an_involution_on_emissions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = FounderHmm::random(3, 6, 0.1, 0.9, &mut rng);
        let r = m.reversed();
        r.validate().unwrap();
        assert_eq!(r.emission(0), m.emission(5));
        let rr = r.reversed();
        for (a, b) in rr.transitions_flat().iter().zip(m.transitions_flat()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn slice_keeps_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = FounderHmm::random(2, 5, 0.1, 0.9, &mut rng);
        let s = m.slice(1, 4).unwrap();
        assert_eq!(s.loci(), 3);
        assert_eq!(s.emission(0), m.emission(1));
        assert_eq!(s.transition(1), m.transition(2));
        assert!(m.slice(3, 3).is_err());
    }
}
