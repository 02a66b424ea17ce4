//! Quantum conditional probabilities `p(r|q) = Tr[P_r E(P_q)]` between the
//! eigenbases of an initial state and its image under a channel, together with
//! the state families and Born-overlap tables that decompose them.

use serde::{Deserialize, Serialize};

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{inner, ComplexMatrix, C64};
use crate::states::{DensityMatrix, SpectralDecomposition};

/// Default tolerance for the table's stochasticity and total-probability checks.
pub const TABLE_TOL: f64 = 1e-9;

/// Column-stochastic table `p(r|q)` with the marginals it links.
///
/// Entries are stored row-major with rows indexed by the outcome `r` and
/// columns by the condition `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct ConditionalTable {
    n_from: usize,
    n_to: usize,
    probs: Vec<f64>,
    p_from: Vec<f64>,
    p_to: Vec<f64>,
    degeneracy_from: Vec<Vec<usize>>,
    degeneracy_to: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct TableRepr {
    p_rq: Vec<Vec<f64>>,
    p_q: Vec<f64>,
    p_r: Vec<f64>,
    #[serde(default)]
    degeneracy_q: Vec<Vec<usize>>,
    #[serde(default)]
    degeneracy_r: Vec<Vec<usize>>,
}

impl From<ConditionalTable> for TableRepr {
    fn from(t: ConditionalTable) -> Self {
        Self {
            p_rq: t.rows(),
            p_q: t.p_from,
            p_r: t.p_to,
            degeneracy_q: t.degeneracy_from,
            degeneracy_r: t.degeneracy_to,
        }
    }
}

impl TryFrom<TableRepr> for ConditionalTable {
    type Error = Error;

    fn try_from(r: TableRepr) -> Result<Self> {
        let mut t = ConditionalTable::new(r.p_rq, r.p_q, r.p_r, TABLE_TOL)?;
        if !r.degeneracy_q.is_empty() {
            t.degeneracy_from = r.degeneracy_q;
        }
        if !r.degeneracy_r.is_empty() {
            t.degeneracy_to = r.degeneracy_r;
        }
        Ok(t)
    }
}

fn singleton_groups(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|i| vec![i]).collect()
}

impl ConditionalTable {
    /// Validates `p_rq[r][q]`, clipping entries into `[0, 1]` once they are
    /// within `tol` of it.
    pub fn new(p_rq: Vec<Vec<f64>>, p_from: Vec<f64>, p_to: Vec<f64>, tol: f64) -> Result<Self> {
        let n_to = p_rq.len();
        let n_from = p_from.len();
        if n_to != p_to.len() || p_rq.iter().any(|row| row.len() != n_from) {
            return Err(Error::ShapeMismatch(format!(
                "table with {} rows for {} outcomes and {} conditions",
                n_to,
                p_to.len(),
                n_from
            )));
        }
        let mut probs = Vec::with_capacity(n_to * n_from);
        for row in &p_rq {
            for &x in row {
                if !x.is_finite() || x < -tol || x > 1.0 + tol {
                    return Err(Error::InconsistentTable(format!("entry {x} outside [0, 1]")));
                }
                probs.push(x.clamp(0.0, 1.0));
            }
        }
        let table = Self {
            n_from,
            n_to,
            probs,
            p_from,
            p_to,
            degeneracy_from: singleton_groups(n_from),
            degeneracy_to: singleton_groups(n_to),
        };
        let cs = table.column_sum_deviation();
        if cs > tol {
            return Err(Error::InconsistentTable(format!(
                "column sums deviate from 1 by {cs:e}"
            )));
        }
        let tp = table.total_probability_residual();
        if tp > tol {
            return Err(Error::InconsistentTable(format!(
                "law of total probability violated by {tp:e}"
            )));
        }
        Ok(table)
    }

    pub fn n_from(&self) -> usize {
        self.n_from
    }

    pub fn n_to(&self) -> usize {
        self.n_to
    }

    /// `p(r|q)`.
    pub fn get(&self, r: usize, q: usize) -> f64 {
        self.probs[r * self.n_from + q]
    }

    /// The distribution `p(.|q)`.
    pub fn column(&self, q: usize) -> Vec<f64> {
        (0..self.n_to).map(|r| self.get(r, q)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_to)
            .map(|r| self.probs[r * self.n_from..(r + 1) * self.n_from].to_vec())
            .collect()
    }

    pub fn p_from(&self) -> &[f64] {
        &self.p_from
    }

    pub fn p_to(&self) -> &[f64] {
        &self.p_to
    }

    pub fn degeneracy_from(&self) -> &[Vec<usize>] {
        &self.degeneracy_from
    }

    pub fn degeneracy_to(&self) -> &[Vec<usize>] {
        &self.degeneracy_to
    }

    /// True when either eigenbasis was chosen inside a degenerate subspace,
    /// in which case the entries depend on that choice.
    pub fn is_basis_dependent(&self) -> bool {
        self.degeneracy_from
            .iter()
            .chain(&self.degeneracy_to)
            .any(|g| g.len() > 1)
    }

    pub(crate) fn with_degeneracy(mut self, from: Vec<Vec<usize>>, to: Vec<Vec<usize>>) -> Self {
        self.degeneracy_from = from;
        self.degeneracy_to = to;
        self
    }

    /// `max_q |sum_r p(r|q) - 1|`.
    pub fn column_sum_deviation(&self) -> f64 {
        (0..self.n_from)
            .map(|q| (self.column(q).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_r |sum_q p(r|q) - 1|`; zero for a doubly stochastic table.
    pub fn row_sum_deviation(&self) -> f64 {
        (0..self.n_to)
            .map(|r| ((0..self.n_from).map(|q| self.get(r, q)).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `sum_q p(r|q) p_q` for every `r`.
    pub fn propagate(&self, p_from: &[f64]) -> Vec<f64> {
        (0..self.n_to)
            .map(|r| (0..self.n_from).map(|q| self.get(r, q) * p_from[q]).sum())
            .collect()
    }

    /// `max_r |p_r - sum_q p(r|q) p_q|`.
    pub fn total_probability_residual(&self) -> f64 {
        self.propagate(&self.p_from)
            .iter()
            .zip(&self.p_to)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Composition `p(s|q) = sum_r p(s|r) p(r|q)` with `self` as `p(s|r)`.
    pub fn chain_after(&self, first: &ConditionalTable) -> Vec<Vec<f64>> {
        (0..self.n_to)
            .map(|s| {
                (0..first.n_from)
                    .map(|q| (0..self.n_from).map(|r| self.get(s, r) * first.get(r, q)).sum())
                    .collect()
            })
            .collect()
    }
}

/// The table together with the states and eigenbases it was computed from.
#[derive(Clone, Debug)]
pub struct ConditionalProbs {
    pub table: ConditionalTable,
    pub initial: DensityMatrix,
    pub final_state: DensityMatrix,
    /// `E(P_q)` for every initial eigenprojector, as raw operators.
    pub evolved_projectors: Vec<ComplexMatrix>,
}

impl ConditionalProbs {
    pub fn initial_spectrum(&self) -> &SpectralDecomposition {
        self.initial.spectral()
    }

    pub fn final_spectrum(&self) -> &SpectralDecomposition {
        self.final_state.spectral()
    }
}

/// `p(r|q) = <Psi_r| E(|Psi_q><Psi_q|) |Psi_r>` over the complete eigenbases of
/// `rho_q` and `rho_r = E(rho_q)`, zero-probability eigenvectors included.
pub fn conditional_probs(channel: &QuantumChannel, rho_q: &DensityMatrix) -> Result<ConditionalProbs> {
    if channel.dim_in() != rho_q.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "channel input dimension {} but state dimension {}",
            channel.dim_in(),
            rho_q.dimension()
        )));
    }
    let final_state = channel.apply(rho_q)?;
    let spec_q = rho_q.spectral();
    let evolved_projectors = spec_q
        .vectors
        .iter()
        .map(|v| channel.apply_to_operator(&ComplexMatrix::outer(v)))
        .collect::<Result<Vec<_>>>()?;
    conditional_from_parts(rho_q.clone(), final_state, evolved_projectors)
}

/// Builds the table from already-evolved eigenprojectors. Shared with the
/// subsystem code, where the "channel" is a partial trace.
pub(crate) fn conditional_from_parts(
    initial: DensityMatrix,
    final_state: DensityMatrix,
    evolved_projectors: Vec<ComplexMatrix>,
) -> Result<ConditionalProbs> {
    let spec_q = initial.spectral();
    let spec_r = final_state.spectral();
    let p_rq: Vec<Vec<f64>> = spec_r
        .vectors
        .iter()
        .map(|vr| {
            evolved_projectors
                .iter()
                .map(|rho_qr| rho_qr.sandwich(vr, vr).re)
                .collect()
        })
        .collect();
    let table = ConditionalTable::new(
        p_rq,
        spec_q.probabilities.clone(),
        spec_r.probabilities.clone(),
        TABLE_TOL,
    )?
    .with_degeneracy(spec_q.degeneracy_groups.clone(), spec_r.degeneracy_groups.clone());
    Ok(ConditionalProbs {
        table,
        initial,
        final_state,
        evolved_projectors,
    })
}

/// The states `rho_q^R = E(P_q)`, each with its own spectral decomposition
/// (probabilities `p(r_q|q)`, projectors `P_{r_q}`).
#[derive(Clone, Debug)]
pub struct EvolvedProjectorFamily {
    pub states: Vec<DensityMatrix>,
}

impl EvolvedProjectorFamily {
    /// `sum_q weights_q rho_q^R`.
    pub fn mixture(&self, weights: &[f64]) -> ComplexMatrix {
        mix(self.states.iter().map(|s| s.matrix()), weights)
    }
}

fn mix<'a>(mats: impl Iterator<Item = &'a ComplexMatrix>, weights: &[f64]) -> ComplexMatrix {
    let mut acc: Option<ComplexMatrix> = None;
    for (m, &w) in mats.zip(weights) {
        let term = m.scale_real(w);
        acc = Some(match acc {
            Some(a) => &a + &term,
            None => term,
        });
    }
    acc.unwrap_or_else(|| ComplexMatrix::zeros(0, 0))
}

pub fn evolved_projector_family(channel: &QuantumChannel, rho_q: &DensityMatrix) -> Result<EvolvedProjectorFamily> {
    let probs = conditional_probs(channel, rho_q)?;
    evolved_family_from(&probs)
}

/// Validates the evolved projectors carried by a computed table.
pub fn evolved_family_from(probs: &ConditionalProbs) -> Result<EvolvedProjectorFamily> {
    let states = probs
        .evolved_projectors
        .iter()
        .map(|m| crate::states::density_from_matrix(m, crate::linalg::Tolerances::default().hermiticity))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolvedProjectorFamily { states })
}

/// The states `rho_{R|q} = sum_r p(r|q) P_r`, diagonal in the final eigenbasis.
#[derive(Clone, Debug)]
pub struct ConditionalStateFamily {
    pub states: Vec<DensityMatrix>,
}

impl ConditionalStateFamily {
    pub fn mixture(&self, weights: &[f64]) -> ComplexMatrix {
        mix(self.states.iter().map(|s| s.matrix()), weights)
    }
}

pub fn conditional_states(table: &ConditionalTable, basis_r: &[Vec<C64>]) -> Result<ConditionalStateFamily> {
    if basis_r.len() != table.n_to() {
        return Err(Error::DimensionMismatch(format!(
            "{} basis vectors for a table with {} outcomes",
            basis_r.len(),
            table.n_to()
        )));
    }
    let states = (0..table.n_from())
        .map(|q| DensityMatrix::from_spectrum(&table.column(q), basis_r))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConditionalStateFamily { states })
}

/// `sum_r P_r M P_r` for an orthonormal basis `{|v_r>}`.
pub fn pinch(m: &ComplexMatrix, basis: &[Vec<C64>]) -> ComplexMatrix {
    let d = m.rows();
    basis.iter().fold(ComplexMatrix::zeros(d, d), |acc, v| {
        let w = m.sandwich(v, v);
        &acc + &ComplexMatrix::outer(v).scale(w)
    })
}

/// Per-`q` Born overlaps `beta(r|r_q) = |<Psi_r|Psi_{r_q}>|^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct BornOverlapTable {
    /// `overlaps[q][r][r_q]`.
    pub overlaps: Vec<Vec<Vec<f64>>>,
}

pub fn born_overlap(basis_r: &[Vec<C64>], family: &EvolvedProjectorFamily) -> BornOverlapTable {
    let overlaps = family
        .states
        .iter()
        .map(|state| {
            let inner_basis = &state.spectral().vectors;
            basis_r
                .iter()
                .map(|vr| inner_basis.iter().map(|vrq| inner(vr, vrq).norm_sqr()).collect())
                .collect()
        })
        .collect();
    BornOverlapTable { overlaps }
}

impl BornOverlapTable {
    /// Largest deviation of any row or column sum from one.
    pub fn doubly_stochastic_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for beta in &self.overlaps {
            for row in beta {
                dev = dev.max((row.iter().sum::<f64>() - 1.0).abs());
            }
            for c in 0..beta.first().map_or(0, |row| row.len()) {
                dev = dev.max((beta.iter().map(|row| row[c]).sum::<f64>() - 1.0).abs());
            }
        }
        dev
    }

    /// `max |p(r|q) - sum_{r_q} beta(r|r_q) p(r_q|q)|`.
    pub fn decomposition_residual(&self, table: &ConditionalTable, family: &EvolvedProjectorFamily) -> f64 {
        let mut worst: f64 = 0.0;
        for (q, (beta, state)) in self.overlaps.iter().zip(&family.states).enumerate() {
            let inner_p = &state.spectral().probabilities;
            for (r, row) in beta.iter().enumerate() {
                let predicted: f64 = row.iter().zip(inner_p).map(|(b, p)| b * p).sum();
                worst = worst.max((table.get(r, q) - predicted).abs());
            }
        }
        worst
    }
}

/// `max_{q,r} |p(r|q) p_q - p(q|r) p_r|`, reading `p(q|r)` as the transposed
/// entry of the same square table. Zero for symmetric joint distributions.
pub fn joint_asymmetry(table: &ConditionalTable) -> Result<f64> {
    if table.n_from() != table.n_to() {
        return Err(Error::ShapeMismatch(format!(
            "joint asymmetry needs a square table, got {}x{}",
            table.n_to(),
            table.n_from()
        )));
    }
    let n = table.n_from();
    let mut worst: f64 = 0.0;
    for q in 0..n {
        for r in 0..n {
            let forward = table.get(r, q) * table.p_from()[q];
            let backward = table.get(q, r) * table.p_to()[r];
            worst = worst.max((forward - backward).abs());
        }
    }
    Ok(worst)
}

/// For each `q`, the outcome `r` with the largest `p(r|q)` (lowest index on ties).
pub fn max_overlap_pairing(table: &ConditionalTable) -> Vec<usize> {
    (0..table.n_from())
        .map(|q| {
            let col = table.column(q);
            let mut best = 0;
            for (r, &p) in col.iter().enumerate() {
                if p > col[best] {
                    best = r;
                }
            }
            best
        })
        .collect()
}

/// `max |p(r|q) - delta(r, pairing[q])|`.
pub fn paired_delta_deviation(table: &ConditionalTable, pairing: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for (q, &paired) in pairing.iter().enumerate() {
        for r in 0..table.n_to() {
            let target = if r == paired { 1.0 } else { 0.0 };
            worst = worst.max((table.get(r, q) - target).abs());
        }
    }
    worst
}
