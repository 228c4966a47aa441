//! Parameter grids over simulated data, and runtime scaling benchmarks.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{evaluate_imputation, EvalReport};
use crate::genotype::{Genotype, MultilocusGenotype};
use crate::model::FounderHmm;
use crate::simulate::{simulate, SimConfig};
use crate::tasks::{run_pipeline, PipelineMode, PipelineParams, WindowSpec};
use crate::training::TrainConfig;
use crate::trie::{batched_posteriors, BatchOptions};

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
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

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub founders: Vec<usize>,
    pub panel_sizes: Vec<usize>,
    pub flanks: Vec<usize>,
    pub modes: Vec<PipelineMode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub grid: SweepGrid,
    /// Data settings; the reference panel is sized to the largest cell.
    pub sim: SimConfig,
    /// Training template; `founders` and `seed` are set per cell.
    pub train: TrainConfig,
    /// Window template; `flank` is set per cell.
    pub window: WindowSpec,
    pub threshold: f64,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub founders: usize,
    pub panel: usize,
    pub flank: usize,
    pub mode: PipelineMode,
    /// Median wall time over the repetitions.
    pub seconds: f64,
    pub outcome: std::result::Result<EvalReport, String>,
}

/// Runs every grid cell on one simulated dataset. Cells use the first
/// `panel` reference haplotypes and train with seed `sim.seed + cell index`.
/// A failing cell is recorded, not propagated.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let g = &spec.grid;
    if g.founders.is_empty() || g.panel_sizes.is_empty() || g.flanks.is_empty() || g.modes.is_empty() {
        return Err(Error::input("every sweep axis needs at least one value"));
    }
    if spec.repetitions == 0 {
        return Err(Error::input("repetitions must be at least 1"));
    }
    let mut sim = spec.sim.clone();
    sim.reference_haplotypes = *g.panel_sizes.iter().max().unwrap();
    let data = simulate(&sim)?;

    let mut rows = Vec::new();
    let mut cell = 0u64;
    for &k in &g.founders {
        for &panel in &g.panel_sizes {
            for &flank in &g.flanks {
                for &mode in &g.modes {
                    let mut train = spec.train.clone();
                    train.founders = k;
                    train.seed = sim.seed.wrapping_add(cell);
                    cell += 1;
                    let params = PipelineParams {
                        train,
                        window: WindowSpec { flank, ..spec.window },
                        threshold: spec.threshold,
                        naive: false,
                    };
                    let reference = &data.reference[..panel.min(data.reference.len())];
                    let mut times = Vec::with_capacity(spec.repetitions);
                    let mut outcome = Err(String::new());
                    for _ in 0..spec.repetitions {
                        let start = Instant::now();
                        let run = run_pipeline(mode, reference, &data.observed, &data.map, &params)
                            .and_then(|r| evaluate_imputation(&r.imputation.entries, &data.truth, &data.map));
                        times.push(start.elapsed().as_secs_f64());
                        outcome = run.map_err(|e| e.to_string());
                        if outcome.is_err() {
                            break;
                        }
                    }
                    rows.push(SweepRow {
                        founders: k,
                        panel,
                        flank,
                        mode,
                        seconds: median(times),
                        outcome,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Accuracy table, one row per cell; timings are kept out so reruns diff clean.
pub fn sweep_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("founders\tpanel\tflank\tmode\tscored\tdiscordant\trate\tstatus\n");
    for r in rows {
        let _ = write!(out, "{}\t{}\t{}\t{}\t", r.founders, r.panel, r.flank, r.mode.name());
        match &r.outcome {
            Ok(e) => {
                let _ = writeln!(out, "{}\t{}\t{:.6}\tok", e.scored, e.discordant, e.rate);
            }
            Err(msg) => {
                let _ = writeln!(out, "-\t-\t-\tfailed: {}", msg.replace(['\t', '\n'], " "));
            }
        }
    }
    out
}

pub fn sweep_timings_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("founders\tpanel\tflank\tmode\tseconds\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.6}",
            r.founders,
            r.panel,
            r.flank,
            r.mode.name(),
            r.seconds
        );
    }
    out
}

/// Error rate against panel size, one series per (mode, founders, flank).
pub fn sweep_plot_data(rows: &[SweepRow]) -> String {
    let mut keys: Vec<(PipelineMode, usize, usize)> = Vec::new();
    for r in rows {
        let key = (r.mode, r.founders, r.flank);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut out = String::new();
    for (mode, k, flank) in keys {
        let _ = writeln!(out, "# series mode={} founders={k} flank={flank}", mode.name());
        let _ = writeln!(out, "panel\trate");
        for r in rows.iter().filter(|r| (r.mode, r.founders, r.flank) == (mode, k, flank)) {
            if let Ok(e) = &r.outcome {
                let _ = writeln!(out, "{}\t{:.6}", r.panel, e.rate);
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingAxis {
    Loci,
    Samples,
    Founders,
}

impl std::str::FromStr for ScalingAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loci" => Ok(ScalingAxis::Loci),
            "samples" => Ok(ScalingAxis::Samples),
            "founders" => Ok(ScalingAxis::Founders),
            _ => Err(Error::input(format!(
                "unknown axis {s:?} (expected loci, samples or founders)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub axis: ScalingAxis,
    pub values: Vec<usize>,
    /// Values held fixed on the other two axes.
    pub loci: usize,
    pub samples: usize,
    pub founders: usize,
    pub repetitions: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPoint {
    pub value: usize,
    pub seconds: f64,
    pub forward_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub axis: ScalingAxis,
    pub points: Vec<BenchPoint>,
    pub slope: f64,
}

/// `m` distinct genotypes drawn uniformly over the called symbols.
pub fn random_corpus<R: Rng>(m: usize, n: usize, rng: &mut R) -> Vec<MultilocusGenotype> {
    let mut seen = HashSet::with_capacity(m);
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let symbols: Vec<Genotype> = (0..n)
            .map(|_| Genotype::CALLED[rng.gen_range(0..3)])
            .collect();
        if seen.insert(symbols.clone()) {
            out.push(MultilocusGenotype {
                sample_id: format!("s{}", out.len() + 1),
                symbols,
            });
        }
    }
    out
}

/// Times batched posterior computation along one axis and fits the log-log
/// slope of the median times.
pub fn bench_scaling(spec: &BenchSpec) -> Result<BenchResult> {
    if spec.values.len() < 2 {
        return Err(Error::input("need at least two axis values"));
    }
    if spec.repetitions == 0 {
        return Err(Error::input("repetitions must be at least 1"));
    }
    let mut points = Vec::with_capacity(spec.values.len());
    for (idx, &v) in spec.values.iter().enumerate() {
        let (n, m, k) = match spec.axis {
            ScalingAxis::Loci => (v, spec.samples, spec.founders),
            ScalingAxis::Samples => (spec.loci, v, spec.founders),
            ScalingAxis::Founders => (spec.loci, spec.samples, v),
        };
        if n == 0 || m == 0 || k == 0 {
            return Err(Error::input("benchmark dimensions must be positive"));
        }
        if n < 40 && 3f64.powi(n as i32) < m as f64 {
            return Err(Error::input(format!("cannot draw {m} distinct genotypes over {n} loci")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(idx as u64));
        let model = FounderHmm::random(k, n, 0.05, 0.95, &mut rng);
        let corpus = random_corpus(m, n, &mut rng);
        let mut times = Vec::with_capacity(spec.repetitions);
        let mut evals = 0;
        for _ in 0..spec.repetitions {
            let start = Instant::now();
            let r = batched_posteriors(&model, &corpus, BatchOptions::default())?;
            times.push(start.elapsed().as_secs_f64());
            evals = r.stats.forward_evaluations;
        }
        points.push(BenchPoint {
            value: v,
            seconds: median(times),
            forward_evaluations: evals,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.value as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.seconds).collect();
    Ok(BenchResult {
        axis: spec.axis,
        slope: log_log_slope(&xs, &ys),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(2.5)).collect();
        assert!((log_log_slope(&xs, &ys) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn median_of_three() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0]), 2.5);
    }

    #[test]
    fn random_corpus_is_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_corpus(9, 2, &mut rng);
        let set: HashSet<_> = c.iter().map(|g| g.symbols.clone()).collect();
        assert_eq!(set.len(), 9);
    }

    #[test]
    fn small_sweep_reports_every_cell() {
        let mut sim = SimConfig::new(3, 40, 6);
        sim.mask_fraction = 0.1;
        sim.seed = 5;
        let spec = SweepSpec {
            grid: SweepGrid {
                founders: vec![2, 3],
                panel_sizes: vec![10, 20],
                flanks: vec![3],
                modes: vec![PipelineMode::Imp],
            },
            sim,
            train: TrainConfig::new(2),
            window: WindowSpec::default(),
            threshold: 1e3,
            repetitions: 1,
        };
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.outcome.as_ref().is_ok_and(|e| e.scored == 4 * 6)));
        let tsv = sweep_tsv(&rows);
        assert_eq!(tsv.lines().count(), 5);
        assert_eq!(tsv, sweep_tsv(&sweep(&spec).unwrap()));
        assert_eq!(sweep_plot_data(&rows).matches("# series").count(), 2);
    }

    #[test]
    fn failed_cells_do_not_abort() {
        let mut sim = SimConfig::new(2, 20, 3);
        sim.mask_fraction = 0.1;
        let spec = SweepSpec {
            grid: SweepGrid {
                founders: vec![0, 2],
                panel_sizes: vec![5],
                flanks: vec![2],
                modes: vec![PipelineMode::Imp],
            },
            sim,
            train: TrainConfig::new(2),
            window: WindowSpec::default(),
            threshold: 1e3,
            repetitions: 2,
        };
        let rows = sweep(&spec).unwrap();
        assert!(rows[0].outcome.is_err());
        assert!(rows[1].outcome.is_ok());
        assert!(sweep_tsv(&rows).contains("failed"));
    }

    #[test]
    fn bench_counts_evaluations() {
        let r = bench_scaling(&BenchSpec {
            axis: ScalingAxis::Loci,
            values: vec![10, 20],
            loci: 0,
            samples: 5,
            founders: 2,
            repetitions: 1,
            seed: 0,
        })
        .unwrap();
        assert_eq!(r.points.len(), 2);
        assert!(r.points[1].forward_evaluations > r.points[0].forward_evaluations);
        assert!(r.slope.is_finite());
    }
}
