//! Shared forward-backward over a genotype corpus.
//!
//! Samples with a common genotype prefix share every forward matrix along
//! that prefix, so the forward pass is run once per node of a prefix trie.
//! The backward pass is run once per node of a trie of reversed genotypes,
//! and its matrices are cached per distinct genotype before the forward
//! traversal joins the two at each leaf.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::genotype::{corpus_length, Genotype, MultilocusGenotype};
use crate::inference::{
    backward_retreat, backward_terminal, forward_advance, forward_terminal, initial_forward,
    locus_substitution, substitution_likelihoods, LocusSubstitution, PosteriorTable,
    SubstitutionLikelihoods, Workspace,
};
use crate::model::FounderHmm;

const NO_CHILD: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct TrieNode {
    /// `None` only for the root.
    pub symbol: Option<Genotype>,
    /// Number of symbols on the path from the root (root is 0).
    pub depth: usize,
    pub parent: Option<usize>,
    children: [u32; 4],
    /// Samples whose genotype passes through this node.
    pub count: usize,
    /// Samples whose genotype ends here (leaves only).
    pub samples: Vec<usize>,
    /// Distinct-genotype index of the path ending here (leaves only).
    pub distinct: Option<usize>,
}

impl TrieNode {
    fn new(symbol: Option<Genotype>, depth: usize, parent: Option<usize>) -> Self {
        TrieNode {
            symbol,
            depth,
            parent,
            children: [NO_CHILD; 4],
            count: 0,
            samples: Vec::new(),
            distinct: None,
        }
    }

    /// Children in symbol order.
    pub fn children(&self) -> impl Iterator<Item = usize> + '_ {
        self.children
            .iter()
            .filter(|&&c| c != NO_CHILD)
            .map(|&c| c as usize)
    }

    pub fn child(&self, symbol: Genotype) -> Option<usize> {
        let c = self.children[symbol.index()];
        (c != NO_CHILD).then_some(c as usize)
    }

    pub fn is_leaf(&self) -> bool {
        self.children.iter().all(|&c| c == NO_CHILD)
    }
}

/// Prefix tree over a genotype corpus (or over reversed genotypes).
#[derive(Debug, Clone)]
pub struct GenotypeTrie {
    nodes: Vec<TrieNode>,
    loci: usize,
    reversed: bool,
    distinct: usize,
}

impl GenotypeTrie {
    fn from_sequences<'a, I>(seqs: I, loci: usize, reversed: bool) -> Self
    where
        I: IntoIterator<Item = (usize, &'a [Genotype])>,
    {
        let mut nodes = vec![TrieNode::new(None, 0, None)];
        let mut distinct = 0;
        for (sample, symbols) in seqs {
            let mut cur = 0;
            nodes[0].count += 1;
            for step in 0..loci {
                let x = if reversed {
                    symbols[loci - 1 - step]
                } else {
                    symbols[step]
                };
                let next = match nodes[cur].child(x) {
                    Some(c) => c,
                    None => {
                        let id = nodes.len();
                        nodes.push(TrieNode::new(Some(x), step + 1, Some(cur)));
                        nodes[cur].children[x.index()] = id as u32;
                        id
                    }
                };
                cur = next;
                nodes[cur].count += 1;
            }
            if nodes[cur].distinct.is_none() {
                nodes[cur].distinct = Some(distinct);
                distinct += 1;
            }
            nodes[cur].samples.push(sample);
        }
        GenotypeTrie {
            nodes,
            loci,
            reversed,
            distinct,
        }
    }

    pub fn nodes(&self) -> &[TrieNode] {
        &self.nodes
    }

    pub fn root(&self) -> &TrieNode {
        &self.nodes[0]
    }

    pub fn loci(&self) -> usize {
        self.loci
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    pub fn non_root_nodes(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn distinct_genotypes(&self) -> usize {
        self.distinct
    }

    /// Node count at each depth `1..=n`.
    pub fn depth_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.loci];
        for node in &self.nodes[1..] {
            counts[node.depth - 1] += 1;
        }
        counts
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TrieNode> {
        self.nodes
            .iter()
            .filter(|n| n.depth == self.loci && n.distinct.is_some())
    }

    /// Samples below `node`, i.e. the multiset of samples sharing its prefix.
    pub fn samples_below(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut todo = vec![node];
        while let Some(id) = todo.pop() {
            out.extend_from_slice(&self.nodes[id].samples);
            todo.extend(self.nodes[id].children());
        }
        out.sort_unstable();
        out
    }

    /// Symbols spelled from the root to `node`.
    pub fn path(&self, node: usize) -> Vec<Genotype> {
        let mut out = Vec::with_capacity(self.nodes[node].depth);
        let mut cur = node;
        while let Some(sym) = self.nodes[cur].symbol {
            out.push(sym);
            cur = self.nodes[cur].parent.unwrap_or(0);
        }
        out.reverse();
        out
    }
}

pub fn build_trie(corpus: &[MultilocusGenotype]) -> Result<GenotypeTrie> {
    let n = corpus_length(corpus)?;
    Ok(GenotypeTrie::from_sequences(
        corpus.iter().enumerate().map(|(i, g)| (i, g.symbols.as_slice())),
        n,
        false,
    ))
}

pub fn reversed_trie(corpus: &[MultilocusGenotype]) -> Result<GenotypeTrie> {
    let n = corpus_length(corpus)?;
    Ok(GenotypeTrie::from_sequences(
        corpus.iter().enumerate().map(|(i, g)| (i, g.symbols.as_slice())),
        n,
        true,
    ))
}

/// Evaluation strategy for [`batched_posteriors`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BatchOptions {
    /// When set, backward matrices are cached only at block boundaries and
    /// recomputed block by block at each leaf.
    pub block_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BatchStats {
    pub samples: usize,
    pub distinct_genotypes: usize,
    pub forward_evaluations: usize,
    pub backward_evaluations: usize,
    /// Locus evaluations per direction without sharing (`m * n`).
    pub naive_evaluations: usize,
    pub prefix_nodes: usize,
    pub reversed_nodes: usize,
}

impl BatchStats {
    /// Locus evaluations avoided over both directions.
    pub fn evaluations_saved(&self) -> usize {
        (2 * self.naive_evaluations).saturating_sub(self.forward_evaluations + self.backward_evaluations)
    }
}

#[derive(Debug, Clone)]
pub struct SamplePosterior {
    pub sample_id: String,
    pub substitutions: Arc<SubstitutionLikelihoods>,
}

impl SamplePosterior {
    pub fn log_likelihood(&self) -> f64 {
        self.substitutions.log_likelihood
    }

    pub fn posteriors(&self) -> Result<PosteriorTable> {
        self.substitutions.posterior_table()
    }
}

#[derive(Debug, Clone)]
pub struct BatchPosteriorResult {
    /// One entry per input sample, in input order.
    pub samples: Vec<SamplePosterior>,
    /// Samples whose posterior table could not be formed, with the signal.
    pub failures: Vec<(usize, Error)>,
    pub stats: BatchStats,
}

/// Scaled matrices along the current root path; slot `d` belongs to depth `d`.
#[derive(Clone)]
struct PathStack {
    kk: usize,
    mats: Vec<f64>,
    logs: Vec<f64>,
}

impl PathStack {
    fn new(kk: usize, slots: usize) -> Self {
        PathStack {
            kk,
            mats: vec![0.0; slots * kk],
            logs: vec![0.0; slots],
        }
    }

    fn slot(&self, d: usize) -> &[f64] {
        &self.mats[d * self.kk..(d + 1) * self.kk]
    }

    fn split(&mut self, d: usize) -> (&[f64], &mut [f64]) {
        let (head, tail) = self.mats.split_at_mut(d * self.kk);
        (&head[(d - 1) * self.kk..], &mut tail[..self.kk])
    }
}

/// Nodes expanded breadth-first before handing subtrees to workers.
const MAX_PARALLEL_TASKS: usize = 64;
const MAX_PARALLEL_DEPTH: usize = 32;

/// Runs `step` once per non-root node in preorder and `leaf` at each leaf.
/// `step(depth, symbol, prev, prev_log, out, ws)` fills `out` and returns its
/// log normalizer; at depth `n` it returns a terminal log-likelihood and
/// `out` is scratch.
fn traverse<S, L, T>(
    trie: &GenotypeTrie,
    root_state: &[f64],
    root_log: f64,
    k: usize,
    step: &S,
    leaf: &L,
) -> (Vec<T>, usize)
where
    S: Fn(usize, Genotype, &[f64], f64, &mut [f64], &mut Workspace) -> f64 + Sync,
    L: Fn(&TrieNode, &PathStack, &mut Workspace) -> T + Sync,
    T: Send,
{
    let kk = k * k;
    let n = trie.loci;
    let nodes = &trie.nodes;

    // breadth-first prefix so subtrees can run independently
    let mut states: HashMap<usize, (Vec<f64>, f64)> = HashMap::new();
    states.insert(0, (root_state.to_vec(), root_log));
    let mut frontier = vec![0usize];
    let mut evaluations = 0;
    let mut ws = Workspace::new(k);
    let mut scratch = vec![0.0; kk];
    while frontier.len() < MAX_PARALLEL_TASKS
        && frontier.iter().all(|&id| nodes[id].depth < n.min(MAX_PARALLEL_DEPTH))
    {
        let next: Vec<usize> = frontier.iter().flat_map(|&id| nodes[id].children()).collect();
        for &id in &next {
            let node = &nodes[id];
            let parent = node.parent.unwrap_or(0);
            let (prev, prev_log) = &states[&parent];
            let log = step(node.depth, node.symbol.unwrap(), prev, *prev_log, &mut scratch, &mut ws);
            states.insert(id, (scratch.clone(), log));
            evaluations += 1;
        }
        frontier = next;
    }

    let run_task = |task: usize| -> (Vec<T>, usize) {
        let mut ws = Workspace::new(k);
        let mut stack = PathStack::new(kk, n + 1);
        let mut cur = Some(task);
        while let Some(id) = cur {
            let d = nodes[id].depth;
            let (m, log) = &states[&id];
            stack.mats[d * kk..(d + 1) * kk].copy_from_slice(m);
            stack.logs[d] = *log;
            cur = nodes[id].parent;
        }
        let mut out = Vec::new();
        let mut evals = 0;
        let mut todo: Vec<usize> = Vec::new();
        if nodes[task].is_leaf() {
            out.push(leaf(&nodes[task], &stack, &mut ws));
        } else {
            todo.extend(nodes[task].children().collect::<Vec<_>>().into_iter().rev());
        }
        while let Some(id) = todo.pop() {
            let node = &nodes[id];
            let d = node.depth;
            let prev_log = stack.logs[d - 1];
            let (prev, dst) = stack.split(d);
            let log = step(d, node.symbol.unwrap(), prev, prev_log, dst, &mut ws);
            stack.logs[d] = log;
            evals += 1;
            if node.is_leaf() {
                out.push(leaf(node, &stack, &mut ws));
            } else {
                let before = todo.len();
                todo.extend(node.children());
                todo[before..].reverse();
            }
        }
        (out, evals)
    };

    let results: Vec<(Vec<T>, usize)> = frontier.par_iter().map(|&t| run_task(t)).collect();
    let mut out = Vec::new();
    for (r, e) in results {
        out.extend(r);
        evaluations += e;
    }
    (out, evaluations)
}

/// Backward matrices of one distinct genotype, either for every locus or only
/// at block ends.
struct BackwardCache {
    mats: Vec<f64>,
    logs: Vec<f64>,
}

/// Posteriors for every sample in `corpus`, sharing forward work through a
/// prefix trie and backward work through a reversed trie.
pub fn batched_posteriors(
    model: &FounderHmm,
    corpus: &[MultilocusGenotype],
    options: BatchOptions,
) -> Result<BatchPosteriorResult> {
    let n = corpus_length(corpus)?;
    if n != model.loci() {
        return Err(Error::input(format!(
            "corpus has {n} loci but the model has {}",
            model.loci()
        )));
    }
    let k = model.founders();
    let kk = k * k;
    let block = options.block_size.unwrap_or(n).clamp(1, n);
    let block_ends: Vec<usize> = (0..n.div_ceil(block))
        .map(|b| ((b + 1) * block).min(n) - 1)
        .collect();
    let full_cache = block >= n;

    let prefix = build_trie(corpus)?;
    let distinct = prefix.distinct_genotypes();
    let mut representatives: Vec<&[Genotype]> = vec![&[]; distinct];
    for leaf in prefix.leaves() {
        representatives[leaf.distinct.unwrap()] = &corpus[leaf.samples[0]].symbols;
    }
    let reversed = GenotypeTrie::from_sequences(
        representatives.iter().enumerate().map(|(i, s)| (i, *s)),
        n,
        true,
    );

    // backward: reversed trie, slot d holds the matrix of locus n-1-d
    let ones = vec![1.0; kk];
    let bwd_step = |d: usize, x: Genotype, prev: &[f64], prev_log: f64, out: &mut [f64], ws: &mut Workspace| {
        let locus = n - d;
        if d == n {
            backward_terminal(model, x, prev, prev_log, ws)
        } else {
            backward_retreat(model, locus - 1, x, prev, prev_log, out, ws).1
        }
    };
    let bwd_leaf = |node: &TrieNode, stack: &PathStack, _ws: &mut Workspace| {
        let id = representative_of(node);
        let loci: Vec<usize> = if full_cache {
            (0..n).collect()
        } else {
            block_ends.clone()
        };
        let mut mats = Vec::with_capacity(loci.len() * kk);
        let mut logs = Vec::with_capacity(loci.len());
        for &j in &loci {
            mats.extend_from_slice(stack.slot(n - 1 - j));
            logs.push(stack.logs[n - 1 - j]);
        }
        (id, BackwardCache { mats, logs })
    };
    let (bwd_results, mut backward_evaluations) = traverse(&reversed, &ones, 0.0, k, &bwd_step, &bwd_leaf);
    let mut cache: Vec<Option<BackwardCache>> = (0..distinct).map(|_| None).collect();
    for (id, c) in bwd_results {
        cache[id] = Some(c);
    }
    let cache: Vec<BackwardCache> = cache.into_iter().map(|c| c.expect("every genotype cached")).collect();

    // forward: prefix trie, slot d holds the matrix of locus d
    let mut root = vec![0.0; kk];
    let (_, root_log) = initial_forward(model, &mut root);
    let fwd_step = |d: usize, x: Genotype, prev: &[f64], prev_log: f64, out: &mut [f64], ws: &mut Workspace| {
        let locus = d - 1;
        if d == n {
            forward_terminal(model, locus, x, prev, prev_log, ws).1
        } else {
            forward_advance(model, locus, x, prev, prev_log, out, ws).next_log_norm
        }
    };
    let fwd_leaf = |node: &TrieNode, stack: &PathStack, ws: &mut Workspace| {
        let id = node.distinct.expect("leaf carries a genotype");
        let bwd = &cache[id];
        let symbols = representatives[id];
        let mut loci = vec![
            LocusSubstitution {
                log_scale: 0.0,
                mass: [0.0; 3],
            };
            n
        ];
        let mut recomputed = 0usize;
        if full_cache {
            for (i, slot) in loci.iter_mut().enumerate() {
                *slot = locus_substitution(
                    model,
                    i,
                    stack.slot(i),
                    stack.logs[i],
                    &bwd.mats[i * kk..(i + 1) * kk],
                    bwd.logs[i],
                    ws,
                );
            }
        } else {
            let mut block_mats = vec![0.0; block * kk];
            let mut block_logs = vec![0.0; block];
            for (b, &end) in block_ends.iter().enumerate() {
                let start = b * block;
                let len = end + 1 - start;
                let top = (len - 1) * kk;
                block_mats[top..top + kk].copy_from_slice(&bwd.mats[b * kk..(b + 1) * kk]);
                block_logs[len - 1] = bwd.logs[b];
                for j in (0..len - 1).rev() {
                    let (head, tail) = block_mats.split_at_mut((j + 1) * kk);
                    let (_, log) = backward_retreat(
                        model,
                        start + j,
                        symbols[start + j + 1],
                        &tail[..kk],
                        block_logs[j + 1],
                        &mut head[j * kk..],
                        ws,
                    );
                    block_logs[j] = log;
                    recomputed += 1;
                }
                for j in 0..len {
                    loci[start + j] = locus_substitution(
                        model,
                        start + j,
                        stack.slot(start + j),
                        stack.logs[start + j],
                        &block_mats[j * kk..(j + 1) * kk],
                        block_logs[j],
                        ws,
                    );
                }
            }
        }
        let subs = SubstitutionLikelihoods {
            log_likelihood: stack.logs[n],
            loci,
        };
        (id, Arc::new(subs), recomputed)
    };
    let (fwd_results, forward_evaluations) = traverse(&prefix, &root, root_log, k, &fwd_step, &fwd_leaf);

    let mut per_distinct: Vec<Option<Arc<SubstitutionLikelihoods>>> = vec![None; distinct];
    for (id, subs, recomputed) in fwd_results {
        per_distinct[id] = Some(subs);
        backward_evaluations += recomputed;
    }
    let mut sample_distinct = vec![0usize; corpus.len()];
    for leaf in prefix.leaves() {
        for &s in &leaf.samples {
            sample_distinct[s] = leaf.distinct.unwrap();
        }
    }
    let samples: Vec<SamplePosterior> = corpus
        .iter()
        .zip(&sample_distinct)
        .map(|(g, &d)| SamplePosterior {
            sample_id: g.sample_id.clone(),
            substitutions: per_distinct[d].clone().expect("every genotype evaluated"),
        })
        .collect();
    let failures = collect_failures(&samples);
    let stats = BatchStats {
        samples: corpus.len(),
        distinct_genotypes: distinct,
        forward_evaluations,
        backward_evaluations,
        naive_evaluations: corpus.len() * n,
        prefix_nodes: prefix.non_root_nodes(),
        reversed_nodes: reversed.non_root_nodes(),
    };
    Ok(BatchPosteriorResult {
        samples,
        failures,
        stats,
    })
}

fn representative_of(node: &TrieNode) -> usize {
    // reversed trie is built over distinct genotypes, one sample per leaf
    node.samples[0]
}

fn collect_failures(samples: &[SamplePosterior]) -> Vec<(usize, Error)> {
    samples
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.posteriors().err().map(|e| (i, e)))
        .collect()
}

/// Per-sample evaluation without sharing; the reference for the batched path.
pub fn per_sample_posteriors(
    model: &FounderHmm,
    corpus: &[MultilocusGenotype],
) -> Result<BatchPosteriorResult> {
    let n = corpus_length(corpus)?;
    let samples = corpus
        .par_iter()
        .map(|g| {
            Ok(SamplePosterior {
                sample_id: g.sample_id.clone(),
                substitutions: Arc::new(substitution_likelihoods(model, g)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let failures = collect_failures(&samples);
    let m = corpus.len();
    Ok(BatchPosteriorResult {
        samples,
        failures,
        stats: BatchStats {
            samples: m,
            distinct_genotypes: m,
            forward_evaluations: m * n,
            backward_evaluations: m * n,
            naive_evaluations: m * n,
            prefix_nodes: m * n,
            reversed_nodes: m * n,
        },
    })
}

/// Posteriors through the trie engine, or per sample when `naive` is set.
pub fn corpus_posteriors(
    model: &FounderHmm,
    corpus: &[MultilocusGenotype],
    naive: bool,
) -> Result<BatchPosteriorResult> {
    if naive {
        per_sample_posteriors(model, corpus)
    } else {
        batched_posteriors(model, corpus, BatchOptions::default())
    }
}
