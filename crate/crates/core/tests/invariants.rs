mod common;

use common::*;
use fhmm_core::genotype::{Genotype, MultilocusGenotype};
use fhmm_core::inference::{forward, genotype_posteriors, substitution_likelihoods, total_log_likelihood};
use fhmm_core::model::FounderHmm;
use fhmm_core::tasks::detect::sample_error_entries;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn case() -> impl Strategy<Value = (FounderHmm, MultilocusGenotype)> {
    (1usize..=4, 1usize..=10, any::<u64>(), 0.0f64..0.4).prop_map(|(k, n, seed, missing)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = FounderHmm::random(k, n, 0.01, 0.99, &mut rng);
        let g = random_genotype("g", n, missing, &mut rng);
        (model, g)
    })
}

fn reversed(g: &MultilocusGenotype) -> MultilocusGenotype {
    let mut r = g.clone();
    r.symbols.reverse();
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn posterior_triples_sum_to_one((model, g) in case()) {
        let table = genotype_posteriors(&model, &g).unwrap();
        for t in &table.triples {
            prop_assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(t.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn forward_is_symmetric_in_the_founder_pair((model, g) in case()) {
        let fwd = forward(&model, &g).unwrap();
        let k = model.founders();
        for i in 0..model.loci() {
            let f = fwd.matrix(i);
            for a in 0..k {
                for b in 0..k {
                    prop_assert!((f[a * k + b] - f[b * k + a]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn missing_marginalizes_the_completions((model, g) in case(), pick in any::<prop::sample::Index>()) {
        let i = pick.index(g.len());
        let missing = g.substitute(i, Genotype::Missing).unwrap();
        let whole = total_log_likelihood(&model, &missing).unwrap().exp();
        let parts: f64 = Genotype::CALLED
            .iter()
            .map(|&x| total_log_likelihood(&model, &g.substitute(i, x).unwrap()).unwrap().exp())
            .sum();
        prop_assert!((whole - parts).abs() <= 1e-10 * whole.max(1e-300));
    }

    #[test]
    fn reversal_preserves_the_likelihood((model, g) in case()) {
        let a = total_log_likelihood(&model, &g).unwrap();
        let b = total_log_likelihood(&model.reversed(), &reversed(&g)).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn likelihood_ratios_are_at_least_one((model, g) in case()) {
        let subs = substitution_likelihoods(&model, &g).unwrap();
        let ids: Vec<String> = (0..g.len()).map(|i| i.to_string()).collect();
        for e in sample_error_entries(&g, &subs, &ids, 1e3) {
            prop_assert!(e.ratio >= 1.0);
            prop_assert_eq!(e.flagged, e.ratio > 1e3);
        }
    }
}
