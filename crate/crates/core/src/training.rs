//! Baum-Welch estimation of the founder chain from complete haplotypes.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::genotype::{Allele, HaplotypeSequence};
use crate::model::{normalize, FounderHmm};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub founders: usize,
    pub max_iterations: usize,
    /// Stop once the relative log-likelihood improvement drops below this.
    pub tolerance: f64,
    pub seed: u64,
    /// Mass added to every expected-count cell before normalizing.
    pub pseudocount: f64,
    /// Starting probability of staying on the same founder between loci.
    pub initial_stay: f64,
}

impl TrainConfig {
    pub fn new(founders: usize) -> Self {
        TrainConfig {
            founders,
            max_iterations: 100,
            tolerance: 1e-5,
            seed: 0,
            pseudocount: 1e-6,
            initial_stay: 0.9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.founders == 0 {
            return Err(Error::input("founder count must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::input("max_iterations must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::input("tolerance must be positive"));
        }
        if !(self.pseudocount >= 0.0) || !self.pseudocount.is_finite() {
            return Err(Error::input("pseudocount must be a finite non-negative number"));
        }
        if !(self.initial_stay > 0.0 && self.initial_stay < 1.0) {
            return Err(Error::input("initial_stay must lie strictly between 0 and 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Number of M-steps performed.
    pub iterations_run: usize,
    /// Total panel log-likelihood of the initial model and after each M-step.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
}

/// Seeded starting point: emissions uniform in [0.1, 0.9], initial
/// distribution uniform and transition rows centred on `initial_stay` on the
/// diagonal, each entry jittered by ±5% and renormalized.
pub fn initial_model(config: &TrainConfig, loci: usize) -> Result<FounderHmm> {
    let (k, n) = (config.founders, loci);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let jittered = |base: &dyn Fn(usize) -> f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut v: Vec<f64> = (0..k)
            .map(|j| base(j) * (1.0 + rng.gen_range(-0.05..=0.05)))
            .collect();
        normalize(&mut v);
        v
    };
    let initial = jittered(&|_| 1.0, &mut rng);
    let stay = if k == 1 { 1.0 } else { config.initial_stay };
    let leave = if k == 1 { 0.0 } else { (1.0 - stay) / (k - 1) as f64 };
    let mut transitions = Vec::with_capacity(n.saturating_sub(1) * k * k);
    for _ in 0..n.saturating_sub(1) {
        for a in 0..k {
            transitions.extend(jittered(&|b| if a == b { stay } else { leave }, &mut rng));
        }
    }
    let emissions = (0..n * k).map(|_| rng.gen_range(0.1..=0.9)).collect();
    FounderHmm::new(k, n, initial, transitions, emissions)
}

/// `log P(h)` under one copy of the chain; negative infinity if impossible.
pub fn loglik_haplotype(model: &FounderHmm, h: &HaplotypeSequence) -> Result<f64> {
    if h.len() != model.loci() {
        return Err(Error::input(format!(
            "haplotype {:?} has {} loci but the model has {}",
            h.id,
            h.len(),
            model.loci()
        )));
    }
    let mut scratch = ChainScratch::new(model.founders(), model.loci());
    Ok(scratch.forward(model, &h.alleles))
}

struct ChainScratch {
    k: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    scale: Vec<f64>,
    emit: Vec<f64>,
}

impl ChainScratch {
    fn new(k: usize, n: usize) -> Self {
        ChainScratch {
            k,
            alpha: vec![0.0; n * k],
            beta: vec![0.0; n * k],
            scale: vec![0.0; n],
            emit: vec![0.0; n * k],
        }
    }

    /// Scaled forward pass; fills `alpha`, `scale`, `emit`. Returns log P(h).
    fn forward(&mut self, model: &FounderHmm, alleles: &[Allele]) -> f64 {
        let (k, n) = (self.k, alleles.len());
        for i in 0..n {
            let e = model.emission(i);
            for f in 0..k {
                self.emit[i * k + f] = match alleles[i] {
                    Allele::Minor => e[f],
                    Allele::Major => 1.0 - e[f],
                };
            }
        }
        let mut ll = 0.0;
        for i in 0..n {
            if i == 0 {
                for f in 0..k {
                    self.alpha[f] = model.initial()[f] * self.emit[f];
                }
            } else {
                let t = model.transition(i - 1);
                let (prev, cur) = self.alpha.split_at_mut(i * k);
                let prev = &prev[(i - 1) * k..];
                let cur = &mut cur[..k];
                cur.fill(0.0);
                for a in 0..k {
                    let w = prev[a];
                    if w == 0.0 {
                        continue;
                    }
                    for f in 0..k {
                        cur[f] += w * t[a * k + f];
                    }
                }
                for f in 0..k {
                    cur[f] *= self.emit[i * k + f];
                }
            }
            let row = &mut self.alpha[i * k..(i + 1) * k];
            let c: f64 = row.iter().sum();
            if !(c > 0.0) {
                return f64::NEG_INFINITY;
            }
            row.iter_mut().for_each(|v| *v /= c);
            self.scale[i] = c;
            ll += c.ln();
        }
        ll
    }

    /// Scaled backward pass consistent with the last `forward` call.
    fn backward(&mut self, model: &FounderHmm, n: usize) {
        let k = self.k;
        self.beta[(n - 1) * k..n * k].fill(1.0);
        for i in (0..n - 1).rev() {
            let t = model.transition(i);
            let c = self.scale[i + 1];
            for a in 0..k {
                let mut acc = 0.0;
                for f in 0..k {
                    acc += t[a * k + f] * self.emit[(i + 1) * k + f] * self.beta[(i + 1) * k + f];
                }
                self.beta[i * k + a] = acc / c;
            }
        }
    }
}

/// Expected sufficient statistics accumulated over the panel.
#[derive(Clone)]
struct Counts {
    loglik: f64,
    initial: Vec<f64>,
    transitions: Vec<f64>,
    minor: Vec<f64>,
    occupancy: Vec<f64>,
}

impl Counts {
    fn zeros(k: usize, n: usize) -> Self {
        Counts {
            loglik: 0.0,
            initial: vec![0.0; k],
            transitions: vec![0.0; n.saturating_sub(1) * k * k],
            minor: vec![0.0; n * k],
            occupancy: vec![0.0; n * k],
        }
    }

    fn add(&mut self, other: &Counts) {
        self.loglik += other.loglik;
        for (a, b) in [
            (&mut self.initial, &other.initial),
            (&mut self.transitions, &other.transitions),
            (&mut self.minor, &other.minor),
            (&mut self.occupancy, &other.occupancy),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

fn accumulate(model: &FounderHmm, alleles: &[Allele], weight: f64, scratch: &mut ChainScratch, counts: &mut Counts) {
    let (k, n) = (model.founders(), model.loci());
    let ll = scratch.forward(model, alleles);
    counts.loglik += weight * ll;
    if ll == f64::NEG_INFINITY {
        return;
    }
    scratch.backward(model, n);
    let (alpha, beta, emit, scale) = (&scratch.alpha, &scratch.beta, &scratch.emit, &scratch.scale);
    for i in 0..n {
        let minor = alleles[i] == Allele::Minor;
        for f in 0..k {
            let gamma = alpha[i * k + f] * beta[i * k + f];
            if i == 0 {
                counts.initial[f] += weight * gamma;
            }
            counts.occupancy[i * k + f] += weight * gamma;
            if minor {
                counts.minor[i * k + f] += weight * gamma;
            }
        }
        if i + 1 < n {
            let t = model.transition(i);
            let c = scale[i + 1];
            let xi = &mut counts.transitions[i * k * k..(i + 1) * k * k];
            for a in 0..k {
                let lead = alpha[i * k + a] / c;
                if lead == 0.0 {
                    continue;
                }
                for f in 0..k {
                    xi[a * k + f] +=
                        weight * lead * t[a * k + f] * emit[(i + 1) * k + f] * beta[(i + 1) * k + f];
                }
            }
        }
    }
}

/// Distinct haplotypes in a fixed order, with multiplicities.
fn distinct_haplotypes(panel: &[HaplotypeSequence]) -> Vec<(Vec<Allele>, f64)> {
    let mut counts: BTreeMap<&[Allele], usize> = BTreeMap::new();
    for h in panel {
        *counts.entry(h.alleles.as_slice()).or_default() += 1;
    }
    counts.into_iter().map(|(a, c)| (a.to_vec(), c as f64)).collect()
}

const ESTEP_CHUNK: usize = 8;

fn expectation(model: &FounderHmm, distinct: &[(Vec<Allele>, f64)]) -> Counts {
    let (k, n) = (model.founders(), model.loci());
    // fixed chunking keeps the floating-point reduction order independent of
    // the thread count
    let partial: Vec<Counts> = distinct
        .par_chunks(ESTEP_CHUNK)
        .map(|chunk| {
            let mut scratch = ChainScratch::new(k, n);
            let mut counts = Counts::zeros(k, n);
            for (alleles, w) in chunk {
                accumulate(model, alleles, *w, &mut scratch, &mut counts);
            }
            counts
        })
        .collect();
    let mut total = Counts::zeros(k, n);
    for c in &partial {
        total.add(c);
    }
    total
}

fn smoothed(values: &[f64], pseudocount: f64, fallback: &[f64]) -> Vec<f64> {
    let denom: f64 = values.iter().sum::<f64>() + pseudocount * values.len() as f64;
    if denom > 0.0 {
        values.iter().map(|v| (v + pseudocount) / denom).collect()
    } else {
        fallback.to_vec()
    }
}

fn maximization(model: &FounderHmm, counts: &Counts, pseudocount: f64) -> Result<FounderHmm> {
    let (k, n) = (model.founders(), model.loci());
    let initial = smoothed(&counts.initial, pseudocount, model.initial());
    let mut transitions = Vec::with_capacity(counts.transitions.len());
    for (row, old) in counts
        .transitions
        .chunks_exact(k)
        .zip(model.transitions_flat().chunks_exact(k))
    {
        transitions.extend(smoothed(row, pseudocount, old));
    }
    let old_emissions = model.emissions_flat();
    let emissions = (0..n * k)
        .map(|j| {
            let denom = counts.occupancy[j] + 2.0 * pseudocount;
            if denom > 0.0 {
                ((counts.minor[j] + pseudocount) / denom).clamp(0.0, 1.0)
            } else {
                old_emissions[j]
            }
        })
        .collect();
    FounderHmm::new(k, n, initial, transitions, emissions)
}

fn check_panel(panel: &[HaplotypeSequence]) -> Result<usize> {
    let first = panel
        .first()
        .ok_or_else(|| Error::input("training panel is empty"))?;
    let n = first.len();
    if n == 0 {
        return Err(Error::input("training haplotypes must have at least one locus"));
    }
    if let Some(bad) = panel.iter().find(|h| h.len() != n) {
        return Err(Error::input(format!(
            "haplotype {:?} has {} loci, expected {n}",
            bad.id,
            bad.len()
        )));
    }
    Ok(n)
}

pub fn train_founder_hmm(
    panel: &[HaplotypeSequence],
    config: &TrainConfig,
) -> Result<(FounderHmm, TrainReport)> {
    train_founder_hmm_observed(panel, config, |_, _, _| {})
}

/// Like [`train_founder_hmm`], calling `observe(iteration, model, loglik)`
/// for the initial model (iteration 0) and after every M-step.
pub fn train_founder_hmm_observed<F>(
    panel: &[HaplotypeSequence],
    config: &TrainConfig,
    observe: F,
) -> Result<(FounderHmm, TrainReport)>
where
    F: FnMut(usize, &FounderHmm, f64),
{
    config.validate()?;
    let n = check_panel(panel)?;
    let model = initial_model(config, n)?;
    train_from(panel, model, config, observe)
}

/// Runs Baum-Welch from `model` instead of the seeded starting point;
/// `config.founders` and `config.seed` are ignored.
pub fn train_founder_hmm_from<F>(
    panel: &[HaplotypeSequence],
    model: FounderHmm,
    config: &TrainConfig,
    observe: F,
) -> Result<(FounderHmm, TrainReport)>
where
    F: FnMut(usize, &FounderHmm, f64),
{
    let mut c = config.clone();
    c.founders = model.founders();
    c.validate()?;
    let n = check_panel(panel)?;
    if n != model.loci() {
        return Err(Error::input(format!(
            "panel has {n} loci but the starting model has {}",
            model.loci()
        )));
    }
    train_from(panel, model, config, observe)
}

fn train_from<F>(
    panel: &[HaplotypeSequence],
    mut model: FounderHmm,
    config: &TrainConfig,
    mut observe: F,
) -> Result<(FounderHmm, TrainReport)>
where
    F: FnMut(usize, &FounderHmm, f64),
{
    let distinct = distinct_haplotypes(panel);
    let mut counts = expectation(&model, &distinct);
    let mut trace = vec![counts.loglik];
    observe(0, &model, counts.loglik);
    let mut converged = false;
    let mut iterations_run = 0;
    while iterations_run < config.max_iterations {
        model = maximization(&model, &counts, config.pseudocount)?;
        iterations_run += 1;
        counts = expectation(&model, &distinct);
        let prev = trace[trace.len() - 1];
        trace.push(counts.loglik);
        observe(iterations_run, &model, counts.loglik);
        let improvement = counts.loglik - prev;
        let relative = if prev != 0.0 {
            improvement / prev.abs()
        } else {
            improvement
        };
        if relative < config.tolerance {
            converged = true;
            break;
        }
    }
    Ok((
        model,
        TrainReport {
            iterations_run,
            loglik_trace: trace,
            converged,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hap(id: &str, s: &str) -> HaplotypeSequence {
        HaplotypeSequence::parse(id, s).unwrap()
    }

    #[test]
    fn single_founder_learns_allele_frequencies() {
        let panel = vec![hap("a", "0110"), hap("b", "0100"), hap("c", "1100"), hap("d", "0101")];
        let config = TrainConfig::new(1);
        let (model, report) = train_founder_hmm(&panel, &config).unwrap();
        let pc = config.pseudocount;
        let counts = [1.0, 4.0, 1.0, 1.0];
        for (i, c) in counts.iter().enumerate() {
            let want = (c + pc) / (4.0 + 2.0 * pc);
            assert!((model.emission(i)[0] - want).abs() < 1e-12);
        }
        for i in 0..3 {
            assert_eq!(model.transition(i), &[1.0]);
        }
        assert!(report.converged);
    }

    #[test]
    fn identical_panel_is_fit_exactly() {
        let panel: Vec<_> = (0..6).map(|i| hap(&format!("h{i}"), "0110100111")).collect();
        let mut config = TrainConfig::new(2);
        config.pseudocount = 0.0;
        let (model, _) = train_founder_hmm(&panel, &config).unwrap();
        let ll = loglik_haplotype(&model, &panel[0]).unwrap();
        assert!(ll >= -1e-6, "{ll}");
    }

    #[test]
    fn loglik_of_fair_coins() {
        let m = FounderHmm::new(1, 4, vec![1.0], vec![1.0; 3], vec![0.5; 4]).unwrap();
        let ll = loglik_haplotype(&m, &hap("x", "0110")).unwrap();
        assert!((ll - 0.0625f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn loglik_of_deterministic_founders() {
        let m = FounderHmm::new(
            2,
            3,
            vec![0.5, 0.5],
            vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
        )
        .unwrap();
        assert!((loglik_haplotype(&m, &hap("x", "000")).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(loglik_haplotype(&m, &hap("x", "010")).unwrap(), f64::NEG_INFINITY);
        assert!(loglik_haplotype(&m, &hap("x", "0101")).is_err());
    }

    #[test]
    fn rejects_bad_panels() {
        let config = TrainConfig::new(2);
        assert!(matches!(train_founder_hmm(&[], &config), Err(Error::Input(_))));
        let ragged = vec![hap("a", "01"), hap("b", "011")];
        assert!(matches!(train_founder_hmm(&ragged, &config), Err(Error::Input(_))));
        let mut bad = TrainConfig::new(2);
        bad.tolerance = 0.0;
        assert!(train_founder_hmm(&[hap("a", "01")], &bad).is_err());
    }

    #[test]
    fn initialization_is_seeded() {
        let mut config = TrainConfig::new(3);
        config.seed = 42;
        let a = initial_model(&config, 5).unwrap();
        let b = initial_model(&config, 5).unwrap();
        config.seed = 43;
        let c = initial_model(&config, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.emissions_flat().iter().all(|&e| (0.1..=0.9).contains(&e)));
        for (j, &t) in a.transitions_flat().iter().enumerate() {
            let (row, col) = ((j / 3) % 3, j % 3);
            let base = if row == col { 0.9 } else { 0.05 };
            assert!((t / base - 1.0).abs() < 0.11, "{t} vs {base}");
        }
    }

    #[test]
    fn uniform_start_is_available() {
        let mut config = TrainConfig::new(3);
        config.initial_stay = 1.0 / 3.0;
        let a = initial_model(&config, 5).unwrap();
        assert!(a
            .transitions_flat()
            .iter()
            .all(|&t| (0.95 / 3.0 / 1.05 - 1e-12..=1.05 / 3.0 / 0.95 + 1e-12).contains(&t)));
        config.initial_stay = 1.0;
        assert!(config.validate().is_err());
    }
}
