//! Dynamic programs checked against exhaustive founder-path enumeration.

mod common;

use common::*;
use fhmm_core::genotype::{Genotype, HaplotypeSequence, LocusMap, Locus, MultilocusGenotype};
use fhmm_core::inference::{
    backward, forward, genotype_posteriors, reference, substitution_likelihoods, total_log_likelihood,
};
use fhmm_core::model::FounderHmm;
use fhmm_core::tasks::detect::sample_error_entries;
use fhmm_core::tasks::impute::train_window;
use fhmm_core::tasks::{impute_untyped, phase_decode, plan_windows, WindowSpec};
use fhmm_core::training::{loglik_haplotype, TrainConfig};
use fhmm_oracle as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn unscaled_forward_matches_path_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let model = FounderHmm::random(2, 3, 0.05, 0.95, &mut rng);
    let g = MultilocusGenotype::parse("g", "012").unwrap();
    let fwd = forward(&model, &g).unwrap();
    let params = chain(&model);
    let obs = symbols(&g);
    let paths = oracle::all_paths(&params);
    for i in 0..3 {
        for a in 0..2 {
            for b in 0..2 {
                // mass of path pairs ending in (a, b) at locus i, emissions up to i - 1
                let mut want = 0.0;
                for (p1, _) in &paths {
                    for (p2, _) in &paths {
                        if p1[i] != a || p2[i] != b {
                            continue;
                        }
                        let w = params.path_prob(&p1[..=i]) * params.path_prob(&p2[..=i]);
                        let e: f64 = (0..i).map(|j| params.genotype_given_pair(j, p1[j], p2[j], obs[j])).product();
                        want += w * e;
                    }
                }
                // every suffix is summed over once per path, so divide out K^(n-1-i) copies twice
                want /= 4f64.powi(2 - i as i32);
                let got = fwd.unscaled(i, a, b);
                assert!(rel_close(got, want, 1e-10), "F[{i}][{a},{b}] {got} vs {want}");
            }
        }
    }
    let want = oracle::genotype_probability(&params, &obs).ln();
    assert!((fwd.log_likelihood - want).abs() < 1e-10);
}

#[test]
fn likelihoods_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..40 {
        let k = 1 + trial % 3;
        let n = 1 + rng.gen_range(0..5);
        let model = FounderHmm::random(k, n, 0.02, 0.98, &mut rng);
        let g = random_genotype("g", n, 0.2, &mut rng);
        let want = oracle::genotype_probability(&chain(&model), &symbols(&g)).ln();
        let got = total_log_likelihood(&model, &g).unwrap();
        assert!((got - want).abs() < 1e-10, "trial {trial}: {got} vs {want}");
        let bwd = backward(&model, &g).unwrap();
        assert!((bwd.log_likelihood - want).abs() < 1e-10);
    }
}

#[test]
fn posteriors_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..40 {
        let k = 1 + trial % 3;
        let n = 1 + rng.gen_range(0..5);
        let model = FounderHmm::random(k, n, 0.02, 0.98, &mut rng);
        let g = random_genotype("g", n, 0.2, &mut rng);
        let brute = oracle::substitution_probabilities(&chain(&model), &symbols(&g));
        let subs = substitution_likelihoods(&model, &g).unwrap();
        let table = genotype_posteriors(&model, &g).unwrap();
        for i in 0..n {
            let total: f64 = brute[i].iter().sum();
            for x in 0..3 {
                assert!(rel_close(table.triples[i][x], brute[i][x] / total, 1e-9));
                let lp = subs.loci[i].log_probability(Genotype::CALLED[x]);
                assert!((lp - brute[i][x].ln()).abs() < 1e-9 || brute[i][x] == 0.0);
            }
            assert!((table.log_marginals[i] - total.ln()).abs() < 1e-10);
        }
    }
}

#[test]
fn collapsed_recurrence_matches_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 1..=4 {
        let model = FounderHmm::random(k, 12, 0.05, 0.95, &mut rng);
        let g = random_genotype("g", 12, 0.1, &mut rng);
        let (fast, slow) = (forward(&model, &g).unwrap(), reference::naive_forward(&model, &g).unwrap());
        let (fb, sb) = (backward(&model, &g).unwrap(), reference::naive_backward(&model, &g).unwrap());
        for i in 0..12 {
            for (a, b) in fast.matrix(i).iter().zip(slow.matrix(i)) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in fb.matrix(i).iter().zip(sb.matrix(i)) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!((fast.log_norms[i] - slow.log_norms[i]).abs() < 1e-10);
        }
        assert!((fast.log_likelihood - slow.log_likelihood).abs() < 1e-10);
    }
}

#[test]
fn haplotype_likelihood_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let model = FounderHmm::random(3, 5, 0.05, 0.95, &mut rng);
        let h = random_haplotype("h".into(), 5, &mut rng);
        let codes: Vec<u8> = h.alleles.iter().map(|a| a.code()).collect();
        let want = oracle::haplotype_probability(&chain(&model), &codes).ln();
        assert!((loglik_haplotype(&model, &h).unwrap() - want).abs() < 1e-10);
    }
}

#[test]
fn error_ratio_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let model = FounderHmm::random(2, 4, 0.05, 0.95, &mut rng);
    let params = chain(&model);
    let ids: Vec<String> = (0..4).map(|i| format!("l{i}")).collect();
    for _ in 0..10 {
        let mut g = random_genotype("g", 4, 0.0, &mut rng);
        let i = rng.gen_range(0..4);
        let d = g.symbols[i].dosage().unwrap();
        g.symbols[i] = Genotype::CALLED[(d + 1 + rng.gen_range(0..2)) % 3];
        let obs = symbols(&g);
        let p = oracle::genotype_probability(&params, &obs);
        let brute = oracle::substitution_probabilities(&params, &obs);
        let subs = substitution_likelihoods(&model, &g).unwrap();
        let entries = sample_error_entries(&g, &subs, &ids, 1e3);
        for (j, e) in entries.iter().enumerate() {
            let want = (brute[j].iter().cloned().fold(0.0, f64::max) / p).max(1.0);
            assert!(rel_close(e.ratio, want, 1e-9), "locus {j}: {} vs {want}", e.ratio);
            assert!(e.ratio >= 1.0);
        }
    }
}

#[test]
fn phased_path_probability_is_the_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for trial in 0..30 {
        let k = 1 + trial % 3;
        let n = 1 + rng.gen_range(0..6);
        let model = FounderHmm::random(k, n, 0.05, 0.95, &mut rng);
        let g = random_genotype("g", n, 0.15, &mut rng);
        let p = phase_decode(&model, &g).unwrap();
        let want = oracle::max_path_pair_probability(&chain(&model), &symbols(&g)).ln();
        assert!((p.log_probability - want).abs() < 1e-10, "trial {trial}");
        let pair_prob = {
            let params = chain(&model);
            let (a, b) = &p.founders;
            let mut e = params.path_prob(a) * params.path_prob(b);
            for i in 0..n {
                let h = (p.haplotypes.0.alleles[i].code(), p.haplotypes.1.alleles[i].code());
                let pa = params.emissions[i][a[i]];
                let pb = params.emissions[i][b[i]];
                e *= if h.0 == 1 { pa } else { 1.0 - pa } * if h.1 == 1 { pb } else { 1.0 - pb };
            }
            e
        };
        assert!(pair_prob <= want.exp() * (1.0 + 1e-9));
    }
}

#[test]
fn window_posteriors_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let map = LocusMap::new(
        (0..9)
            .map(|i| Locus {
                id: format!("rs{i}"),
                position: 10 * (i as u64 + 1),
                typed: i != 4,
            })
            .collect(),
    )
    .unwrap();
    let reference: Vec<HaplotypeSequence> = (0..16).map(|i| random_haplotype(format!("r{i}"), 9, &mut rng)).collect();
    let corpus: Vec<MultilocusGenotype> = (0..5).map(|i| random_genotype(&format!("s{i}"), 8, 0.1, &mut rng)).collect();
    let spec = WindowSpec { flank: 3, restarts: 2 };
    let mut config = TrainConfig::new(3);
    config.seed = 2;
    let windows = plan_windows(&map, spec).unwrap();
    assert_eq!(windows.len(), 1);
    assert_eq!(windows[0].loci.len(), 7);
    let (model, _) = train_window(&reference, &windows[0], &config, spec.restarts).unwrap();
    let result = impute_untyped(&reference, &corpus, &map, spec, &config, false).unwrap();
    let params = chain(&model);
    for (call, g) in result.entries.iter().zip(&corpus) {
        let local: Vec<Option<u8>> = windows[0]
            .loci
            .iter()
            .map(|&i| if i == 4 { None } else { symbols(g)[if i < 4 { i } else { i - 1 }] })
            .collect();
        let brute = oracle::substitution_probabilities(&params, &local);
        let j = windows[0].loci.binary_search(&4).unwrap();
        let total: f64 = brute[j].iter().sum();
        for x in 0..3 {
            assert!((call.posterior[x] - brute[j][x] / total).abs() < 1e-9);
        }
    }
}
