//! Scaled forward-backward inference for the two-chain founder model.
//!
//! The forward matrix at locus `i` covers the genotype symbols strictly before
//! `i`; the backward matrix covers the symbols strictly after `i`. The
//! emission at `i` is applied once, when the two are combined. Each step
//! collapses one chain at a time, so a locus costs O(K³) instead of O(K⁴).
//!
//! Matrices are stored rescaled to unit sum; the scale is carried as a
//! running log normalizer so that `F = F_scaled * exp(log_norm)`.

use crate::error::{Error, Result};
use crate::genotype::{Genotype, MultilocusGenotype};
use crate::model::FounderHmm;

/// Scratch buffers reused across steps.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    emission: Vec<f64>,
    collapse: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(k: usize) -> Self {
        Workspace {
            emission: vec![0.0; k * k],
            collapse: vec![0.0; k * k],
        }
    }
}

/// Outcome of one forward step from locus `i` to `i + 1`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ForwardStep {
    /// Emission-weighted mass at locus `i` of the scaled forward matrix.
    pub emission_mass: f64,
    /// Sum of the unscaled next matrix before normalization.
    pub next_mass: f64,
    pub next_log_norm: f64,
}

pub(crate) fn initial_forward(model: &FounderHmm, out: &mut [f64]) -> (f64, f64) {
    let k = model.founders();
    let pi = model.initial();
    for a in 0..k {
        for b in 0..k {
            out[a * k + b] = pi[a] * pi[b];
        }
    }
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    (s, s.ln())
}

fn weighted_mass(probs: &[f64], weights: &[f64]) -> f64 {
    probs.iter().zip(weights).map(|(p, w)| p * w).sum()
}

fn zero_out(next: &mut [f64]) -> f64 {
    next.fill(0.0);
    f64::NEG_INFINITY
}

/// Mass of the scaled forward matrix at the last locus, and the resulting
/// log-likelihood.
pub(crate) fn forward_terminal(
    model: &FounderHmm,
    i: usize,
    x: Genotype,
    cur: &[f64],
    cur_log: f64,
    ws: &mut Workspace,
) -> (f64, f64) {
    model.emission_matrix(i, x, &mut ws.emission);
    let c = weighted_mass(cur, &ws.emission);
    if c > 0.0 {
        (c, cur_log + c.ln())
    } else {
        (0.0, f64::NEG_INFINITY)
    }
}

/// Advances the scaled forward matrix past the symbol at locus `i`.
pub(crate) fn forward_advance(
    model: &FounderHmm,
    i: usize,
    x: Genotype,
    cur: &[f64],
    cur_log: f64,
    next: &mut [f64],
    ws: &mut Workspace,
) -> ForwardStep {
    let k = model.founders();
    model.emission_matrix(i, x, &mut ws.emission);
    let c = weighted_mass(cur, &ws.emission);
    if !(c > 0.0 && cur_log > f64::NEG_INFINITY) {
        return ForwardStep {
            emission_mass: 0.0,
            next_mass: 0.0,
            next_log_norm: zero_out(next),
        };
    }
    let t = model.transition(i);
    // collapse[a][f'] = sum_b G[a][b] T[b][f']
    let collapse = &mut ws.collapse;
    collapse.fill(0.0);
    for a in 0..k {
        let out = &mut collapse[a * k..(a + 1) * k];
        for b in 0..k {
            let g = cur[a * k + b] * ws.emission[a * k + b] / c;
            if g == 0.0 {
                continue;
            }
            let row = &t[b * k..(b + 1) * k];
            for (o, &tr) in out.iter_mut().zip(row) {
                *o += g * tr;
            }
        }
    }
    // next[f][f'] = sum_a T[a][f] collapse[a][f']
    next.fill(0.0);
    for a in 0..k {
        let src = &collapse[a * k..(a + 1) * k];
        for f in 0..k {
            let w = t[a * k + f];
            if w == 0.0 {
                continue;
            }
            let dst = &mut next[f * k..(f + 1) * k];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    let s: f64 = next.iter().sum();
    if !(s > 0.0) {
        return ForwardStep {
            emission_mass: c,
            next_mass: 0.0,
            next_log_norm: zero_out(next),
        };
    }
    next.iter_mut().for_each(|v| *v /= s);
    ForwardStep {
        emission_mass: c,
        next_mass: s,
        next_log_norm: cur_log + (c.ln() + s.ln()),
    }
}

/// Moves the scaled backward matrix from locus `i + 1` to locus `i`, absorbing
/// the symbol `x_next` observed at `i + 1`. Returns `(mass, log_norm)`.
pub(crate) fn backward_retreat(
    model: &FounderHmm,
    i: usize,
    x_next: Genotype,
    cur: &[f64],
    cur_log: f64,
    next: &mut [f64],
    ws: &mut Workspace,
) -> (f64, f64) {
    let k = model.founders();
    if cur_log == f64::NEG_INFINITY {
        return (0.0, zero_out(next));
    }
    model.emission_matrix(i + 1, x_next, &mut ws.emission);
    let h = &mut ws.emission;
    for (e, &b) in h.iter_mut().zip(cur) {
        *e *= b;
    }
    let t = model.transition(i);
    // collapse[c][f'] = sum_d H[c][d] T[f'][d]
    for c in 0..k {
        let hrow = &h[c * k..(c + 1) * k];
        for fp in 0..k {
            let trow = &t[fp * k..(fp + 1) * k];
            ws.collapse[c * k + fp] = hrow.iter().zip(trow).map(|(x, y)| x * y).sum();
        }
    }
    // next[f][f'] = sum_c T[f][c] collapse[c][f']
    next.fill(0.0);
    for f in 0..k {
        let dst = &mut next[f * k..(f + 1) * k];
        for c in 0..k {
            let w = t[f * k + c];
            if w == 0.0 {
                continue;
            }
            let src = &ws.collapse[c * k..(c + 1) * k];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    let s: f64 = next.iter().sum();
    if !(s > 0.0) {
        return (0.0, zero_out(next));
    }
    next.iter_mut().for_each(|v| *v /= s);
    (s, cur_log + s.ln())
}

/// Combines the scaled backward matrix at locus 0 with the initial pair
/// distribution. Returns the backward-derived log-likelihood.
pub(crate) fn backward_terminal(
    model: &FounderHmm,
    x0: Genotype,
    cur: &[f64],
    cur_log: f64,
    ws: &mut Workspace,
) -> f64 {
    let k = model.founders();
    model.emission_matrix(0, x0, &mut ws.emission);
    let pi = model.initial();
    let mut total = 0.0;
    for a in 0..k {
        for b in 0..k {
            total += pi[a] * pi[b] * cur[a * k + b] * ws.emission[a * k + b];
        }
    }
    if total > 0.0 && cur_log > f64::NEG_INFINITY {
        cur_log + total.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Probabilities of the three single-locus substitutions at one locus, kept
/// as a shared log scale times three linear masses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocusSubstitution {
    pub log_scale: f64,
    pub mass: [f64; 3],
}

impl LocusSubstitution {
    /// `log P(g[g_i <- x])`.
    pub fn log_probability(&self, x: Genotype) -> f64 {
        match x.dosage() {
            Some(d) => self.log_scale + self.mass[d].ln(),
            None => self.log_marginal(),
        }
    }

    /// `log P(g[g_i <- MISSING])`, the sum over the three substitutions.
    pub fn log_marginal(&self) -> f64 {
        self.log_scale + self.mass.iter().sum::<f64>().ln()
    }

    pub fn is_zero(&self) -> bool {
        !(self.log_scale > f64::NEG_INFINITY) || self.mass.iter().sum::<f64>() <= 0.0
    }

    /// Triple renormalized to sum to one.
    pub fn triple(&self) -> [f64; 3] {
        let s: f64 = self.mass.iter().sum();
        [self.mass[0] / s, self.mass[1] / s, self.mass[2] / s]
    }
}

pub(crate) fn locus_substitution(
    model: &FounderHmm,
    i: usize,
    fwd: &[f64],
    fwd_log: f64,
    bwd: &[f64],
    bwd_log: f64,
    ws: &mut Workspace,
) -> LocusSubstitution {
    for ((p, f), b) in ws.collapse.iter_mut().zip(fwd).zip(bwd) {
        *p = f * b;
    }
    let mut mass = [0.0; 3];
    for (slot, x) in mass.iter_mut().zip(Genotype::CALLED) {
        model.emission_matrix(i, x, &mut ws.emission);
        *slot = weighted_mass(&ws.collapse, &ws.emission);
    }
    LocusSubstitution {
        log_scale: fwd_log + bwd_log,
        mass,
    }
}

/// Scaled forward matrices for one genotype.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardMatrices {
    k: usize,
    matrices: Vec<f64>,
    /// `F^i = matrix(i) * exp(log_norms[i])`.
    pub log_norms: Vec<f64>,
    /// Per-locus factors whose logs sum to the log-likelihood.
    pub scale_factors: Vec<f64>,
    pub log_likelihood: f64,
    /// First locus at which the probability mass vanished.
    pub zero_at: Option<usize>,
}

impl ForwardMatrices {
    pub fn matrix(&self, i: usize) -> &[f64] {
        let kk = self.k * self.k;
        &self.matrices[i * kk..(i + 1) * kk]
    }

    pub fn loci(&self) -> usize {
        self.log_norms.len()
    }

    /// Unscaled matrix entry, for tests on small instances.
    pub fn unscaled(&self, i: usize, a: usize, b: usize) -> f64 {
        self.matrix(i)[a * self.k + b] * self.log_norms[i].exp()
    }
}

/// Scaled backward matrices for one genotype.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardMatrices {
    k: usize,
    matrices: Vec<f64>,
    /// `B^i = matrix(i) * exp(log_norms[i])`.
    pub log_norms: Vec<f64>,
    /// Normalizer applied when producing `B^i`; 1 at the last locus.
    pub scale_factors: Vec<f64>,
    pub log_likelihood: f64,
    pub zero_at: Option<usize>,
}

impl BackwardMatrices {
    pub fn matrix(&self, i: usize) -> &[f64] {
        let kk = self.k * self.k;
        &self.matrices[i * kk..(i + 1) * kk]
    }

    pub fn unscaled(&self, i: usize, a: usize, b: usize) -> f64 {
        self.matrix(i)[a * self.k + b] * self.log_norms[i].exp()
    }
}

fn check_length(model: &FounderHmm, g: &MultilocusGenotype) -> Result<()> {
    if g.len() != model.loci() {
        return Err(Error::input(format!(
            "sample {:?} has {} loci but the model has {}",
            g.sample_id,
            g.len(),
            model.loci()
        )));
    }
    Ok(())
}

pub(crate) fn run_forward(model: &FounderHmm, symbols: &[Genotype]) -> ForwardMatrices {
    let (k, n) = (model.founders(), model.loci());
    let kk = k * k;
    let mut ws = Workspace::new(k);
    let mut matrices = vec![0.0; n * kk];
    let mut log_norms = vec![0.0; n];
    let mut scale_factors = vec![0.0; n];
    let (mut mass, log0) = initial_forward(model, &mut matrices[..kk]);
    log_norms[0] = log0;
    let mut zero_at = None;
    let mut log_likelihood = f64::NEG_INFINITY;
    for i in 0..n {
        if i + 1 == n {
            let (c, ll) =
                forward_terminal(model, i, symbols[i], &matrices[i * kk..], log_norms[i], &mut ws);
            scale_factors[i] = mass * c;
            log_likelihood = ll;
            if c == 0.0 && zero_at.is_none() {
                zero_at = Some(i);
            }
            break;
        }
        let (head, tail) = matrices.split_at_mut((i + 1) * kk);
        let step = forward_advance(
            model,
            i,
            symbols[i],
            &head[i * kk..],
            log_norms[i],
            &mut tail[..kk],
            &mut ws,
        );
        scale_factors[i] = mass * step.emission_mass;
        mass = step.next_mass;
        log_norms[i + 1] = step.next_log_norm;
        if step.next_log_norm == f64::NEG_INFINITY && zero_at.is_none() {
            zero_at = Some(i);
        }
    }
    ForwardMatrices {
        k,
        matrices,
        log_norms,
        scale_factors,
        log_likelihood,
        zero_at,
    }
}

pub(crate) fn run_backward(model: &FounderHmm, symbols: &[Genotype]) -> BackwardMatrices {
    let (k, n) = (model.founders(), model.loci());
    let kk = k * k;
    let mut ws = Workspace::new(k);
    let mut matrices = vec![0.0; n * kk];
    let mut log_norms = vec![0.0; n];
    let mut scale_factors = vec![1.0; n];
    matrices[(n - 1) * kk..].fill(1.0);
    let mut zero_at = None;
    for i in (0..n - 1).rev() {
        let (head, tail) = matrices.split_at_mut((i + 1) * kk);
        let (s, log) = backward_retreat(
            model,
            i,
            symbols[i + 1],
            &tail[..kk],
            log_norms[i + 1],
            &mut head[i * kk..],
            &mut ws,
        );
        scale_factors[i] = s;
        log_norms[i] = log;
        if log == f64::NEG_INFINITY && zero_at.is_none() {
            zero_at = Some(i + 1);
        }
    }
    let log_likelihood = backward_terminal(model, symbols[0], &matrices[..kk], log_norms[0], &mut ws);
    if log_likelihood == f64::NEG_INFINITY && zero_at.is_none() {
        zero_at = Some(0);
    }
    BackwardMatrices {
        k,
        matrices,
        log_norms,
        scale_factors,
        log_likelihood,
        zero_at,
    }
}

/// Forward pass. Fails with [`Error::ZeroProbability`] if the genotype is
/// impossible under the model.
pub fn forward(model: &FounderHmm, g: &MultilocusGenotype) -> Result<ForwardMatrices> {
    check_length(model, g)?;
    let f = run_forward(model, &g.symbols);
    match f.zero_at {
        Some(locus) => Err(Error::ZeroProbability { locus }),
        None => Ok(f),
    }
}

/// Backward pass, mirror of [`forward`].
pub fn backward(model: &FounderHmm, g: &MultilocusGenotype) -> Result<BackwardMatrices> {
    check_length(model, g)?;
    let b = run_backward(model, &g.symbols);
    match b.zero_at {
        Some(locus) => Err(Error::ZeroProbability { locus }),
        None => Ok(b),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardBackwardResult {
    pub forward: ForwardMatrices,
    pub backward: BackwardMatrices,
    pub log_likelihood: f64,
}

pub fn forward_backward(model: &FounderHmm, g: &MultilocusGenotype) -> Result<ForwardBackwardResult> {
    let forward = forward(model, g)?;
    let backward = backward(model, g)?;
    let log_likelihood = forward.log_likelihood;
    Ok(ForwardBackwardResult {
        forward,
        backward,
        log_likelihood,
    })
}

/// `log P(g)`; negative infinity for impossible genotypes.
pub fn total_log_likelihood(model: &FounderHmm, g: &MultilocusGenotype) -> Result<f64> {
    check_length(model, g)?;
    Ok(run_forward(model, &g.symbols).log_likelihood)
}

/// All single-locus substitution probabilities of one genotype. Never fails on
/// zero-probability genotypes; affected loci simply carry zero mass.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstitutionLikelihoods {
    pub log_likelihood: f64,
    pub loci: Vec<LocusSubstitution>,
}

impl SubstitutionLikelihoods {
    pub fn posterior_table(&self) -> Result<PosteriorTable> {
        if let Some(locus) = self.loci.iter().position(|l| l.is_zero()) {
            return Err(Error::ZeroProbability { locus });
        }
        Ok(PosteriorTable {
            triples: self.loci.iter().map(|l| l.triple()).collect(),
            log_marginals: self.loci.iter().map(|l| l.log_marginal()).collect(),
            log_likelihood: self.log_likelihood,
        })
    }
}

pub(crate) fn combine(
    model: &FounderHmm,
    fwd: &ForwardMatrices,
    bwd: &BackwardMatrices,
) -> SubstitutionLikelihoods {
    let mut ws = Workspace::new(model.founders());
    let loci = (0..model.loci())
        .map(|i| {
            locus_substitution(
                model,
                i,
                fwd.matrix(i),
                fwd.log_norms[i],
                bwd.matrix(i),
                bwd.log_norms[i],
                &mut ws,
            )
        })
        .collect();
    SubstitutionLikelihoods {
        log_likelihood: fwd.log_likelihood,
        loci,
    }
}

pub fn substitution_likelihoods(
    model: &FounderHmm,
    g: &MultilocusGenotype,
) -> Result<SubstitutionLikelihoods> {
    check_length(model, g)?;
    let fwd = run_forward(model, &g.symbols);
    let bwd = run_backward(model, &g.symbols);
    Ok(combine(model, &fwd, &bwd))
}

/// Per-locus genotype posteriors `q_i(x) ∝ P(g[g_i <- x])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable {
    pub triples: Vec<[f64; 3]>,
    /// `log P(g[g_i <- MISSING])` for each locus.
    pub log_marginals: Vec<f64>,
    pub log_likelihood: f64,
}

impl PosteriorTable {
    /// Most probable genotype at locus `i`; ties go to the smallest code.
    pub fn argmax(&self, i: usize) -> Genotype {
        argmax_triple(&self.triples[i], None)
    }
}

/// Index of the largest entry; ties prefer `preferred`, then the smallest code.
pub fn argmax_triple(t: &[f64; 3], preferred: Option<Genotype>) -> Genotype {
    let best = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if let Some(p) = preferred.and_then(|p| p.dosage().map(|d| (p, d))) {
        if t[p.1] >= best {
            return p.0;
        }
    }
    let idx = t.iter().position(|&v| v >= best).unwrap_or(0);
    Genotype::CALLED[idx]
}

pub fn genotype_posteriors(model: &FounderHmm, g: &MultilocusGenotype) -> Result<PosteriorTable> {
    substitution_likelihoods(model, g)?.posterior_table()
}

/// Direct O(K⁴) evaluation of the forward and backward recurrences, without
/// the one-chain-at-a-time collapse. Shares the scaling scheme of the fast
/// path so the two can be compared matrix by matrix.
pub mod reference {
    use super::*;

    pub fn naive_forward(model: &FounderHmm, g: &MultilocusGenotype) -> Result<ForwardMatrices> {
        check_length(model, g)?;
        let (k, n) = (model.founders(), model.loci());
        let kk = k * k;
        let mut emission = vec![0.0; kk];
        let mut matrices = vec![0.0; n * kk];
        let mut log_norms = vec![0.0; n];
        let mut scale_factors = vec![0.0; n];
        let (mut mass, log0) = initial_forward(model, &mut matrices[..kk]);
        log_norms[0] = log0;
        let mut log_likelihood = f64::NEG_INFINITY;
        for i in 0..n {
            model.emission_matrix(i, g.symbols[i], &mut emission);
            let cur = matrices[i * kk..(i + 1) * kk].to_vec();
            let c = weighted_mass(&cur, &emission);
            if !(c > 0.0) {
                return Err(Error::ZeroProbability { locus: i });
            }
            scale_factors[i] = mass * c;
            if i + 1 == n {
                log_likelihood = log_norms[i] + c.ln();
                break;
            }
            let t = model.transition(i);
            let next = &mut matrices[(i + 1) * kk..(i + 2) * kk];
            for f in 0..k {
                for fp in 0..k {
                    let mut acc = 0.0;
                    for a in 0..k {
                        for b in 0..k {
                            acc += cur[a * k + b] * emission[a * k + b] / c
                                * t[a * k + f]
                                * t[b * k + fp];
                        }
                    }
                    next[f * k + fp] = acc;
                }
            }
            let s: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v /= s);
            mass = s;
            log_norms[i + 1] = log_norms[i] + (c.ln() + s.ln());
        }
        Ok(ForwardMatrices {
            k,
            matrices,
            log_norms,
            scale_factors,
            log_likelihood,
            zero_at: None,
        })
    }

    pub fn naive_backward(model: &FounderHmm, g: &MultilocusGenotype) -> Result<BackwardMatrices> {
        check_length(model, g)?;
        let (k, n) = (model.founders(), model.loci());
        let kk = k * k;
        let mut emission = vec![0.0; kk];
        let mut matrices = vec![0.0; n * kk];
        let mut log_norms = vec![0.0; n];
        let mut scale_factors = vec![1.0; n];
        matrices[(n - 1) * kk..].fill(1.0);
        for i in (0..n - 1).rev() {
            model.emission_matrix(i + 1, g.symbols[i + 1], &mut emission);
            let cur = matrices[(i + 1) * kk..(i + 2) * kk].to_vec();
            let t = model.transition(i);
            let next = &mut matrices[i * kk..(i + 1) * kk];
            for f in 0..k {
                for fp in 0..k {
                    let mut acc = 0.0;
                    for c in 0..k {
                        for d in 0..k {
                            acc += t[f * k + c] * t[fp * k + d] * cur[c * k + d] * emission[c * k + d];
                        }
                    }
                    next[f * k + fp] = acc;
                }
            }
            let s: f64 = next.iter().sum();
            if !(s > 0.0) {
                return Err(Error::ZeroProbability { locus: i + 1 });
            }
            next.iter_mut().for_each(|v| *v /= s);
            scale_factors[i] = s;
            log_norms[i] = log_norms[i + 1] + s.ln();
        }
        let mut ws = Workspace::new(k);
        let log_likelihood = backward_terminal(model, g.symbols[0], &matrices[..kk], log_norms[0], &mut ws);
        Ok(BackwardMatrices {
            k,
            matrices,
            log_norms,
            scale_factors,
            log_likelihood,
            zero_at: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(s: &str) -> MultilocusGenotype {
        MultilocusGenotype::parse("s", s).unwrap()
    }

    fn single_locus(k: usize, initial: Vec<f64>, e: Vec<f64>) -> FounderHmm {
        assert_eq!(initial.len(), k);
        FounderHmm::new(k, 1, initial, vec![], e).unwrap()
    }

    #[test]
    fn single_founder_fair_coin() {
        let m = single_locus(1, vec![1.0], vec![0.5]);
        let ll = total_log_likelihood(&m, &g("1")).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn deterministic_pair_of_founders() {
        // pairs (0,0),(0,1),(1,0),(1,1) each 1/4; genotypes 0,1,1,2
        let m = single_locus(2, vec![0.5, 0.5], vec![0.0, 1.0]);
        let p = |s| total_log_likelihood(&m, &g(s)).unwrap().exp();
        assert!((p("1") - 0.5).abs() < 1e-15);
        assert!((p("0") - 0.25).abs() < 1e-15);
        assert!((p("2") - 0.25).abs() < 1e-15);
    }

    #[test]
    fn all_missing_has_probability_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = FounderHmm::random(3, 7, 0.05, 0.95, &mut rng);
        let ll = total_log_likelihood(&m, &g("???????")).unwrap();
        assert!(ll.abs() < 1e-12);
    }

    #[test]
    fn single_locus_forward_is_outer_product() {
        let m = single_locus(2, vec![0.3, 0.7], vec![0.2, 0.6]);
        let f = forward(&m, &g("1")).unwrap();
        for (got, want) in f.matrix(0).iter().zip([0.09, 0.21, 0.21, 0.49]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!((f.log_norms[0]).abs() < 1e-15);
        let b = backward(&m, &g("1")).unwrap();
        assert_eq!(b.matrix(0), &[1.0; 4][..]);
        assert!((b.log_likelihood - f.log_likelihood).abs() < 1e-15);
    }

    #[test]
    fn last_backward_matrix_is_all_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = FounderHmm::random(3, 5, 0.05, 0.95, &mut rng);
        let b = backward(&m, &g("01?21")).unwrap();
        assert!(b.matrix(4).iter().all(|&v| v == 1.0));
        assert_eq!(b.log_norms[4], 0.0);
    }

    #[test]
    fn forward_and_backward_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = FounderHmm::random(2, 3, 0.05, 0.95, &mut rng);
        let fb = forward_backward(&m, &g("012")).unwrap();
        assert!((fb.forward.log_likelihood - fb.backward.log_likelihood).abs() < 1e-10);
        let sum_logs: f64 = fb.forward.scale_factors.iter().map(|s| s.ln()).sum();
        assert!((sum_logs - fb.log_likelihood).abs() < 1e-9);
    }

    #[test]
    fn missing_equals_sum_of_completions() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = FounderHmm::random(2, 4, 0.05, 0.95, &mut rng);
        let with_missing = forward(&m, &g("1?02")).unwrap();
        let parts: Vec<_> = ["1002", "1102", "1202"]
            .iter()
            .map(|s| forward(&m, &g(s)).unwrap())
            .collect();
        for i in 0..4 {
            for a in 0..2 {
                for b in 0..2 {
                    // F^i only sees symbols before locus i
                    let total: f64 = if i <= 1 {
                        parts[0].unscaled(i, a, b)
                    } else {
                        parts.iter().map(|p| p.unscaled(i, a, b)).sum()
                    };
                    let got = with_missing.unscaled(i, a, b);
                    assert!((got - total).abs() <= 1e-12 * total.max(1e-300), "{got} {total}");
                }
            }
        }
        let total: f64 = parts.iter().map(|p| p.log_likelihood.exp()).sum();
        assert!((with_missing.log_likelihood.exp() - total).abs() < 1e-14);
    }

    #[test]
    fn zero_probability_is_signalled_with_locus() {
        // both founders carry the major allele at locus 1
        let m = FounderHmm::new(
            2,
            3,
            vec![0.5, 0.5],
            vec![0.9, 0.1, 0.1, 0.9, 0.9, 0.1, 0.1, 0.9],
            vec![0.5, 0.5, 0.0, 0.0, 0.5, 0.5],
        )
        .unwrap();
        assert_eq!(
            forward(&m, &g("121")).unwrap_err(),
            Error::ZeroProbability { locus: 1 }
        );
        assert_eq!(
            backward(&m, &g("121")).unwrap_err(),
            Error::ZeroProbability { locus: 1 }
        );
        assert_eq!(total_log_likelihood(&m, &g("121")).unwrap(), f64::NEG_INFINITY);
        // the offending locus itself still has a well-defined posterior
        let subs = substitution_likelihoods(&m, &g("121")).unwrap();
        assert!(!subs.loci[1].is_zero());
        assert_eq!(subs.loci[1].triple(), [1.0, 0.0, 0.0]);
        assert!(subs.loci[0].is_zero());
        assert!(matches!(
            subs.posterior_table(),
            Err(Error::ZeroProbability { locus: 0 })
        ));
        let post = genotype_posteriors(&m, &g("1?1")).unwrap();
        assert_eq!(post.triples[1], [1.0, 0.0, 0.0]);
    }

    #[test]
    fn length_mismatch_is_input_error() {
        let m = single_locus(1, vec![1.0], vec![0.5]);
        assert!(matches!(forward(&m, &g("11")), Err(Error::Input(_))));
        assert!(matches!(total_log_likelihood(&m, &g("")), Err(Error::Input(_))));
    }

    #[test]
    fn long_genotypes_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = FounderHmm::random(4, 1000, 0.01, 0.99, &mut rng);
        let symbols: String = (0..1000).map(|i| ['0', '1', '2', '?'][i % 4]).collect();
        let fb = forward_backward(&m, &g(&symbols)).unwrap();
        for i in 0..1000 {
            for mat in [fb.forward.matrix(i), fb.backward.matrix(i)] {
                let max = mat.iter().cloned().fold(0.0, f64::max);
                assert!(max > 0.0 && max <= 1.0);
                assert!(mat.iter().all(|v| v.is_finite() && *v >= 0.0));
            }
        }
        assert!(fb.log_likelihood.is_finite());
        assert!((fb.forward.log_likelihood - fb.backward.log_likelihood).abs() < 1e-9);
    }

    #[test]
    fn argmax_tie_breaking() {
        let t = [0.4, 0.4, 0.2];
        assert_eq!(argmax_triple(&t, None), Genotype::HomMajor);
        assert_eq!(argmax_triple(&t, Some(Genotype::Het)), Genotype::Het);
        assert_eq!(argmax_triple(&t, Some(Genotype::HomMinor)), Genotype::HomMajor);
    }
}
