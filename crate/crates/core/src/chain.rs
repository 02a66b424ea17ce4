//! Two-step processes `Q -> R -> S`: the consistency adjustment of the second
//! stage, the chain property of the resulting tables, the data-processing
//! inequality, the Holevo bound, and a seeded Monte Carlo sampler over
//! trajectories of underlying eigenstates.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{compose, pinching, QuantumChannel};
use crate::conditional::{
    conditional_from_parts, conditional_probs, conditional_states, ConditionalProbs, ConditionalTable,
};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::measures::{holevo_chi, mutual_information, Ensemble};
use crate::random::{derive_seed, rng_from_seed};
use crate::states::{DensityMatrix, LogBase};

/// Tolerance on the chain property after adjustment.
pub const CHAIN_TOL: f64 = 1e-9;

/// `E_raw ∘ pinching(basis_r)`: the second stage measures in `basis_r` first.
pub fn make_consistent(raw: &QuantumChannel, basis_r: &[Vec<C64>]) -> Result<QuantumChannel> {
    if basis_r.len() != raw.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "basis of {} vectors for a channel on dimension {}",
            basis_r.len(),
            raw.dim_in()
        )));
    }
    compose(raw, &pinching(basis_r)?)
}

/// A consistency-adjusted two-step process with all derived tables.
#[derive(Clone, Debug)]
pub struct TwoStepProcess {
    pub stage1: QuantumChannel,
    pub stage2_raw: QuantumChannel,
    pub stage2: QuantumChannel,
    /// `p(r|q)` with `rho_Q` and `rho_R`.
    pub rq: ConditionalProbs,
    /// `p(s|r)` with `rho_R` and `rho_S`.
    pub sr: ConditionalProbs,
    /// `p(s|q)` of the composed map, against the same bases.
    pub sq: ConditionalProbs,
    /// `max |p(s|q) - sum_r p(s|r) p(r|q)|` for the adjusted process.
    pub chain_residual: f64,
    /// The same residual had the raw second stage been used.
    pub raw_chain_residual: f64,
    /// Largest disagreement between `p_s`, `sum_r p(s|r) p_r` and `sum_q p(s|q) p_q`.
    pub marginal_residual: f64,
}

impl TwoStepProcess {
    pub fn rho_q(&self) -> &DensityMatrix {
        &self.rq.initial
    }

    pub fn rho_r(&self) -> &DensityMatrix {
        &self.rq.final_state
    }

    pub fn rho_s(&self) -> &DensityMatrix {
        &self.sr.final_state
    }
}

fn max_table_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

fn table_against(evolved: &[ComplexMatrix], basis: &[Vec<C64>]) -> Vec<Vec<f64>> {
    basis
        .iter()
        .map(|v| evolved.iter().map(|m| m.sandwich(v, v).re).collect())
        .collect()
}

pub fn build_two_step(
    rho_q: &DensityMatrix,
    stage1: &QuantumChannel,
    stage2_raw: &QuantumChannel,
) -> Result<TwoStepProcess> {
    let rq = conditional_probs(stage1, rho_q)?;
    let stage2 = make_consistent(stage2_raw, &rq.final_spectrum().vectors)?;
    let sr = conditional_probs(&stage2, &rq.final_state)?;

    let evolved_sq = rq
        .evolved_projectors
        .iter()
        .map(|m| stage2.apply_to_operator(m))
        .collect::<Result<Vec<_>>>()?;
    let sq = conditional_from_parts(rho_q.clone(), sr.final_state.clone(), evolved_sq)?;

    let chained = sr.table.chain_after(&rq.table);
    let chain_residual = max_table_diff(&sq.table.rows(), &chained);

    let evolved_raw = rq
        .evolved_projectors
        .iter()
        .map(|m| stage2_raw.apply_to_operator(m))
        .collect::<Result<Vec<_>>>()?;
    let raw = table_against(&evolved_raw, &sr.final_spectrum().vectors);
    let raw_chain_residual = max_table_diff(&raw, &chained);

    let p_s = sr.table.p_to();
    let via_r = sr.table.propagate(sr.table.p_from());
    let via_q = sq.table.propagate(sq.table.p_from());
    let marginal_residual = p_s
        .iter()
        .zip(via_r.iter().zip(&via_q))
        .map(|(p, (a, b))| (p - a).abs().max((p - b).abs()).max((a - b).abs()))
        .fold(0.0, f64::max);

    if chain_residual > CHAIN_TOL {
        return Err(Error::ConsistencyResidual {
            residual: chain_residual,
        });
    }
    if marginal_residual > CHAIN_TOL {
        return Err(Error::InconsistentTable(format!(
            "output marginals disagree by {marginal_residual:e}"
        )));
    }
    Ok(TwoStepProcess {
        stage1: stage1.clone(),
        stage2_raw: stage2_raw.clone(),
        stage2,
        rq,
        sr,
        sq,
        chain_residual,
        raw_chain_residual,
        marginal_residual,
    })
}

/// Both mutual informations of the data-processing inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpiReport {
    #[serde(rename = "I_RQ")]
    pub i_rq: f64,
    #[serde(rename = "I_SQ")]
    pub i_sq: f64,
    /// `I(R:Q) - I(S:Q)`, nonnegative up to rounding.
    pub slack: f64,
}

pub fn dpi_check(process: &TwoStepProcess, base: LogBase) -> Result<DpiReport> {
    let i_rq = mutual_information(&process.rq.table, base)?;
    let i_sq = mutual_information(&process.sq.table, base)?;
    Ok(DpiReport {
        i_rq,
        i_sq,
        slack: i_rq - i_sq,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolevoReport {
    #[serde(rename = "I_RQ")]
    pub i_rq: f64,
    #[serde(rename = "I_SQ")]
    pub i_sq: f64,
    pub chi: f64,
    /// `|I(R:Q) - chi|`.
    pub equality_residual: f64,
    /// `chi - I(S:Q)`.
    pub bound_slack: f64,
}

/// `chi` of the ensemble `{p_q, rho_{R|q}}` against `I(R:Q)` and `I(S:Q)`.
pub fn holevo_bound_check(process: &TwoStepProcess, base: LogBase) -> Result<HolevoReport> {
    let rq = &process.rq;
    let states = conditional_states(&rq.table, &rq.final_spectrum().vectors)?;
    let ens = Ensemble::new(rq.table.p_from().to_vec(), states.states)?;
    let chi = holevo_chi(&ens, base)?;
    let dpi = dpi_check(process, base)?;
    Ok(HolevoReport {
        i_rq: dpi.i_rq,
        i_sq: dpi.i_sq,
        chi,
        equality_residual: (dpi.i_rq - chi).abs(),
        bound_slack: chi - dpi.i_sq,
    })
}

/// Counts of sampled trajectories `(x_0, x_1, ..., x_k)` over `k` stages.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryBatch {
    pub n_samples: usize,
    pub seed: u64,
    /// Number of states at each level.
    pub dims: Vec<usize>,
    /// Row-major counts over the full path index.
    pub counts: Vec<u64>,
}

impl TrajectoryBatch {
    fn flat_index(&self, path: &[usize]) -> usize {
        path.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }

    pub fn count(&self, path: &[usize]) -> u64 {
        self.counts[self.flat_index(path)]
    }

    /// Counts `[a][b]` of consecutive levels `level` and `level + 1`.
    pub fn pair_counts(&self, level: usize) -> Vec<Vec<u64>> {
        let (da, db) = (self.dims[level], self.dims[level + 1]);
        let mut out = vec![vec![0u64; db]; da];
        let mut path = vec![0usize; self.dims.len()];
        for &c in &self.counts {
            out[path[level]][path[level + 1]] += c;
            for k in (0..path.len()).rev() {
                path[k] += 1;
                if path[k] < self.dims[k] {
                    break;
                }
                path[k] = 0;
            }
        }
        out
    }
}

/// Fixed worker count so results do not depend on the thread pool.
const SAMPLER_WORKERS: usize = 16;

fn draw<R: Rng + ?Sized>(rng: &mut R, p: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > 0.0 {
            cum += x;
            last = i;
            if u < cum {
                return i;
            }
        }
    }
    last
}

/// Draws `q ~ p_q`, then each later level from the column of the next table.
pub fn sample_trajectories(p_q: &[f64], stages: &[&ConditionalTable], n: usize, seed: u64) -> Result<TrajectoryBatch> {
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let mut dims = vec![p_q.len()];
    for t in stages {
        if t.n_from() != *dims.last().unwrap() {
            return Err(Error::ShapeMismatch(format!(
                "stage with {} conditions after a level of size {}",
                t.n_from(),
                dims.last().unwrap()
            )));
        }
        dims.push(t.n_to());
    }
    let columns: Vec<Vec<Vec<f64>>> = stages
        .iter()
        .map(|t| (0..t.n_from()).map(|q| t.column(q)).collect())
        .collect();
    let size: usize = dims.iter().product();
    let batch = TrajectoryBatch {
        n_samples: n,
        seed,
        dims,
        counts: vec![0; size],
    };
    let per_worker: Vec<Vec<u64>> = (0..SAMPLER_WORKERS)
        .into_par_iter()
        .map(|w| {
            let share = n / SAMPLER_WORKERS + usize::from(w < n % SAMPLER_WORKERS);
            let mut rng = rng_from_seed(derive_seed(seed, &[w as u64]));
            let mut counts = vec![0u64; size];
            let mut path = vec![0usize; batch.dims.len()];
            for _ in 0..share {
                path[0] = draw(&mut rng, p_q);
                for (k, cols) in columns.iter().enumerate() {
                    path[k + 1] = draw(&mut rng, &cols[path[k]]);
                }
                counts[batch.flat_index(&path)] += 1;
            }
            counts
        })
        .collect();
    let mut batch = batch;
    for counts in per_worker {
        for (total, c) in batch.counts.iter_mut().zip(counts) {
            *total += c;
        }
    }
    Ok(batch)
}

/// Samples `(q, r, s)` trajectories of a two-step process.
pub fn sample_process(process: &TwoStepProcess, n: usize, seed: u64) -> Result<TrajectoryBatch> {
    sample_trajectories(
        process.rq.table.p_from(),
        &[&process.rq.table, &process.sr.table],
        n,
        seed,
    )
}

/// Frequencies estimated from a batch.
#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalTable {
    pub table: ConditionalTable,
    /// Samples per condition.
    pub n_per_condition: Vec<u64>,
    /// Conditions with fewer than [`MIN_SAMPLES_PER_CONDITION`] samples.
    pub insufficient: Vec<usize>,
}

pub const MIN_SAMPLES_PER_CONDITION: u64 = 100;

/// Normalized frequencies of level `level + 1` given level `level`. Conditions
/// never sampled get a uniform column and are flagged.
pub fn empirical_table_at(batch: &TrajectoryBatch, level: usize) -> Result<EmpiricalTable> {
    if batch.counts.iter().all(|&c| c == 0) {
        return Err(Error::EmptyBatch);
    }
    if level + 1 >= batch.dims.len() {
        return Err(Error::IndexOutOfRange {
            index: level,
            len: batch.dims.len().saturating_sub(1),
        });
    }
    let pairs = batch.pair_counts(level);
    let total: u64 = pairs.iter().flatten().sum();
    let n_to = batch.dims[level + 1];
    let n_per: Vec<u64> = pairs.iter().map(|row| row.iter().sum()).collect();
    let p_from: Vec<f64> = n_per.iter().map(|&c| c as f64 / total as f64).collect();
    let mut p_to = vec![0.0; n_to];
    for row in &pairs {
        for (r, &c) in row.iter().enumerate() {
            p_to[r] += c as f64 / total as f64;
        }
    }
    let p_rq: Vec<Vec<f64>> = (0..n_to)
        .map(|r| {
            pairs
                .iter()
                .zip(&n_per)
                .map(|(row, &nq)| {
                    if nq == 0 {
                        1.0 / n_to as f64
                    } else {
                        row[r] as f64 / nq as f64
                    }
                })
                .collect()
        })
        .collect();
    let insufficient = n_per
        .iter()
        .enumerate()
        .filter(|(_, &c)| c < MIN_SAMPLES_PER_CONDITION)
        .map(|(q, _)| q)
        .collect();
    Ok(EmpiricalTable {
        table: ConditionalTable::new(p_rq, p_from, p_to, 1e-9)?,
        n_per_condition: n_per,
        insufficient,
    })
}

pub fn empirical_table(batch: &TrajectoryBatch) -> Result<EmpiricalTable> {
    empirical_table_at(batch, 0)
}

/// Total-variation distance between the joint distributions `p(r|q) p_q`.
pub fn joint_tv_distance(a: &ConditionalTable, b: &ConditionalTable) -> f64 {
    let mut sum = 0.0;
    for q in 0..a.n_from() {
        for r in 0..a.n_to() {
            sum += (a.get(r, q) * a.p_from()[q] - b.get(r, q) * b.p_from()[q]).abs();
        }
    }
    0.5 * sum
}

/// Cells `(r, q)` with `n_q >= min_n` whose estimate lies outside
/// `4 sqrt(p (1 - p) / n_q)` of the exact entry.
pub fn binomial_outliers(exact: &ConditionalTable, est: &EmpiricalTable, min_n: u64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for q in 0..exact.n_from() {
        let nq = est.n_per_condition[q];
        if nq < min_n {
            continue;
        }
        for r in 0..exact.n_to() {
            let p = exact.get(r, q);
            let bound = 4.0 * (p * (1.0 - p) / nq as f64).sqrt();
            if (est.table.get(r, q) - p).abs() > bound + 1e-12 {
                out.push((r, q));
            }
        }
    }
    out
}

/// Total-variation error of the estimate at each sample size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub n: usize,
    pub tv: f64,
}

pub fn convergence_report(table: &ConditionalTable, sizes: &[usize], seed: u64) -> Result<Vec<ConvergencePoint>> {
    sizes
        .iter()
        .map(|&n| {
            let batch = sample_trajectories(table.p_from(), &[table], n, seed)?;
            let est = empirical_table(&batch)?;
            Ok(ConvergencePoint {
                n,
                tv: joint_tv_distance(table, &est.table),
            })
        })
        .collect()
}

/// Machine-readable summary of a two-step process.
#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub tables: ChainTables,
    #[serde(rename = "I_RQ")]
    pub i_rq: f64,
    #[serde(rename = "I_SQ")]
    pub i_sq: f64,
    pub chi: f64,
    pub residuals: ChainResiduals,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical: Option<EmpiricalReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainTables {
    pub rq: ConditionalTable,
    pub sr: ConditionalTable,
    pub sq: ConditionalTable,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainResiduals {
    pub chain: f64,
    pub chain_raw: f64,
    pub marginals: f64,
    pub holevo_equality: f64,
    pub dpi_slack: f64,
    pub holevo_bound_slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalReport {
    pub n_samples: usize,
    pub seed: u64,
    pub rq: EmpiricalTable,
    pub sr: EmpiricalTable,
    pub tv_rq: f64,
    pub tv_sr: f64,
}

pub fn chain_report(process: &TwoStepProcess, base: LogBase, sampling: Option<(usize, u64)>) -> Result<ChainReport> {
    let hol = holevo_bound_check(process, base)?;
    let empirical = match sampling {
        Some((n, seed)) => {
            let batch = sample_process(process, n, seed)?;
            let rq = empirical_table_at(&batch, 0)?;
            let sr = empirical_table_at(&batch, 1)?;
            Some(EmpiricalReport {
                n_samples: n,
                seed,
                tv_rq: joint_tv_distance(&process.rq.table, &rq.table),
                tv_sr: joint_tv_distance(&process.sr.table, &sr.table),
                rq,
                sr,
            })
        }
        None => None,
    };
    Ok(ChainReport {
        tables: ChainTables {
            rq: process.rq.table.clone(),
            sr: process.sr.table.clone(),
            sq: process.sq.table.clone(),
        },
        i_rq: hol.i_rq,
        i_sq: hol.i_sq,
        chi: hol.chi,
        residuals: ChainResiduals {
            chain: process.chain_residual,
            chain_raw: process.raw_chain_residual,
            marginals: process.marginal_residual,
            holevo_equality: hol.equality_residual,
            dpi_slack: hol.i_rq - hol.i_sq,
            holevo_bound_slack: hol.bound_slack,
        },
        empirical,
    })
}
