//! Exhaustive enumeration over founder paths, for checking the dynamic
//! programs on small instances. Nothing here shares code with `fhmm-core`:
//! parameters come in as plain vectors and every probability is built from
//! its definition (sum over founder path pairs and allele draws).

/// Plain chain parameters. `transitions[i]` is row-major K×K between loci
/// `i` and `i + 1`; `emissions[i][f]` is the minor-allele probability.
#[derive(Debug, Clone)]
pub struct ChainParams {
    pub k: usize,
    pub initial: Vec<f64>,
    pub transitions: Vec<Vec<f64>>,
    pub emissions: Vec<Vec<f64>>,
}

impl ChainParams {
    pub fn loci(&self) -> usize {
        self.emissions.len()
    }

    fn allele_prob(&self, i: usize, f: usize, minor: bool) -> f64 {
        let p = self.emissions[i][f];
        if minor {
            p
        } else {
            1.0 - p
        }
    }

    /// `P(g_i = x | f, f')` by summing over the four allele pairs.
    /// `None` is a missing genotype and sums over all three values.
    pub fn genotype_given_pair(&self, i: usize, f: usize, g: usize, x: Option<u8>) -> f64 {
        let mut total = 0.0;
        for h in [false, true] {
            for h2 in [false, true] {
                let dosage = h as u8 + h2 as u8;
                if x.map_or(true, |x| x == dosage) {
                    total += self.allele_prob(i, f, h) * self.allele_prob(i, g, h2);
                }
            }
        }
        total
    }

    /// Prior probability of one founder path.
    pub fn path_prob(&self, path: &[usize]) -> f64 {
        let mut p = self.initial[path[0]];
        for i in 1..path.len() {
            p *= self.transitions[i - 1][path[i - 1] * self.k + path[i]];
        }
        p
    }
}

/// All K^n founder paths with their prior probabilities.
pub fn all_paths(params: &ChainParams) -> Vec<(Vec<usize>, f64)> {
    let (k, n) = (params.k, params.loci());
    let total = k.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut path = vec![0; n];
            for slot in path.iter_mut().rev() {
                *slot = code % k;
                code /= k;
            }
            let p = params.path_prob(&path);
            (path, p)
        })
        .collect()
}

/// `P(g)` summed over every pair of founder paths.
pub fn genotype_probability(params: &ChainParams, g: &[Option<u8>]) -> f64 {
    let paths = all_paths(params);
    let mut total = 0.0;
    for (p1, w1) in &paths {
        for (p2, w2) in &paths {
            let mut e = w1 * w2;
            for i in 0..g.len() {
                e *= params.genotype_given_pair(i, p1[i], p2[i], g[i]);
            }
            total += e;
        }
    }
    total
}

/// `P(g[g_i <- x])` for every locus `i` and `x` in `0..3`.
pub fn substitution_probabilities(params: &ChainParams, g: &[Option<u8>]) -> Vec<[f64; 3]> {
    let n = g.len();
    let paths = all_paths(params);
    let mut out = vec![[0.0; 3]; n];
    let mut factors = vec![0.0; n];
    for (p1, w1) in &paths {
        for (p2, w2) in &paths {
            let w = w1 * w2;
            for i in 0..n {
                factors[i] = params.genotype_given_pair(i, p1[i], p2[i], g[i]);
            }
            for i in 0..n {
                let others: f64 = (0..n).filter(|&j| j != i).map(|j| factors[j]).product();
                for x in 0..3u8 {
                    out[i][x as usize] +=
                        w * others * params.genotype_given_pair(i, p1[i], p2[i], Some(x));
                }
            }
        }
    }
    out
}

/// Largest joint probability `P(path, path', g)` over all path pairs.
pub fn max_path_pair_probability(params: &ChainParams, g: &[Option<u8>]) -> f64 {
    let paths = all_paths(params);
    let mut best: f64 = 0.0;
    for (p1, w1) in &paths {
        for (p2, w2) in &paths {
            let mut e = w1 * w2;
            for i in 0..g.len() {
                e *= params.genotype_given_pair(i, p1[i], p2[i], g[i]);
            }
            best = best.max(e);
        }
    }
    best
}

/// Probability of a single haplotype under one chain.
pub fn haplotype_probability(params: &ChainParams, h: &[u8]) -> f64 {
    all_paths(params)
        .iter()
        .map(|(path, w)| {
            w * (0..h.len())
                .map(|i| params.allele_prob(i, path[i], h[i] == 1))
                .product::<f64>()
        })
        .sum()
}

/// Number of distinct prefixes of each length `1..=n`.
pub fn distinct_prefix_counts(rows: &[Vec<u8>]) -> Vec<usize> {
    let n = rows.first().map_or(0, |r| r.len());
    (1..=n)
        .map(|d| {
            let mut prefixes: Vec<&[u8]> = rows.iter().map(|r| &r[..d]).collect();
            prefixes.sort();
            prefixes.dedup();
            prefixes.len()
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_deterministic_founders() {
        let params = ChainParams {
            k: 2,
            initial: vec![0.5, 0.5],
            transitions: vec![],
            emissions: vec![vec![0.0, 1.0]],
        };
        assert_eq!(genotype_probability(&params, &[Some(1)]), 0.5);
        assert_eq!(genotype_probability(&params, &[Some(0)]), 0.25);
        assert_eq!(genotype_probability(&params, &[None]), 1.0);
    }

    #[test]
    fn worked_example_prefixes() {
        let rows: Vec<Vec<u8>> = ["11122", "12102", "12202", "11222", "12102", "12100", "21211", "11111", "11111", "11122"]
            .iter()
            .map(|r| r.bytes().map(|b| b - b'0').collect())
            .collect();
        assert_eq!(distinct_prefix_counts(&rows), vec![2, 3, 5, 6, 7]);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(3)).collect();
        assert!((log_log_slope(&xs, &ys) - 3.0).abs() < 1e-12);
    }
}
