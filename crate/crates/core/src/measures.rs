//! Scalar information measures: Shannon conditional entropy, the conditional
//! entropy `J` and mutual information `I` of a conditional table, the
//! conditional von Neumann entropy, and Holevo's `chi`.

use serde::{Deserialize, Serialize};

use crate::conditional::{ConditionalTable, TABLE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{partial_trace, ComplexMatrix, Subsystem};
use crate::states::{density_from_matrix, shannon_entropy, von_neumann_entropy, DensityMatrix, LogBase, ProbVector};

/// `H(p(.|q)) = -sum_r p(r|q) log p(r|q)`.
pub fn j_given(table: &ConditionalTable, q: usize, base: LogBase) -> Result<f64> {
    if q >= table.n_from() {
        return Err(Error::IndexOutOfRange {
            index: q,
            len: table.n_from(),
        });
    }
    Ok(shannon_entropy(&table.column(q), base))
}

pub fn j_per_q(table: &ConditionalTable, base: LogBase) -> Vec<f64> {
    (0..table.n_from())
        .map(|q| shannon_entropy(&table.column(q), base))
        .collect()
}

/// `J = sum_q p_q H(p(.|q))`.
pub fn j_conditional(table: &ConditionalTable, base: LogBase) -> f64 {
    j_per_q(table, base)
        .iter()
        .zip(table.p_from())
        .map(|(h, p)| p * h)
        .sum()
}

/// `I = sum_{q,r} p(r|q) p_q log[p(r|q) / p_r]`, evaluated term by term.
///
/// Cells with zero weight are skipped. A cell with positive weight but
/// `p_r = 0` is an inconsistent table.
pub fn mutual_information(table: &ConditionalTable, base: LogBase) -> Result<f64> {
    let mut total = 0.0;
    for q in 0..table.n_from() {
        let pq = table.p_from()[q];
        for r in 0..table.n_to() {
            let prq = table.get(r, q);
            let weight = prq * pq;
            if weight <= 0.0 {
                continue;
            }
            let pr = table.p_to()[r];
            if pr <= 0.0 {
                if weight > TABLE_TOL {
                    return Err(Error::InconsistentTable(format!(
                        "p(r={r}|q={q}) p_q = {weight:e} but p_r = 0"
                    )));
                }
                continue;
            }
            total += weight * base.log(prq / pr);
        }
    }
    Ok(total)
}

/// The headline quantities of one conditional table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoSummary {
    #[serde(rename = "S_Q")]
    pub s_initial: f64,
    #[serde(rename = "S_R")]
    pub s_final: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "J_per_q")]
    pub per_q_j: Vec<f64>,
    pub base: LogBase,
}

impl InfoSummary {
    /// `|I - (S_R - J)|`.
    pub fn identity_residual(&self) -> f64 {
        (self.i - (self.s_final - self.j)).abs()
    }
}

/// Computes every measure of a table whose marginals are the spectra of the
/// initial and final states, so `S_Q = H(p_q)` and `S_R = H(p_r)`.
pub fn info_summary(table: &ConditionalTable, base: LogBase) -> Result<InfoSummary> {
    let per_q_j = j_per_q(table, base);
    let j = per_q_j.iter().zip(table.p_from()).map(|(h, p)| p * h).sum();
    Ok(InfoSummary {
        s_initial: shannon_entropy(table.p_from(), base),
        s_final: shannon_entropy(table.p_to(), base),
        j,
        i: mutual_information(table, base)?,
        per_q_j,
        base,
    })
}

/// `H(Y|X) = -sum_{x,y} p(y|x) p(x) log p(y|x)` for a table read as `p(y|x)`
/// with marginal `p(x)` in its `p_from`.
pub fn classical_conditional_entropy(table: &ConditionalTable, base: LogBase) -> f64 {
    j_conditional(table, base)
}

/// `H(Y|X)` from a joint distribution `joint[x][y]`, through the conditional
/// form rather than `H(X,Y) - H(X)`.
pub fn classical_conditional_entropy_joint(joint: &[Vec<f64>], base: LogBase) -> Result<f64> {
    validate_joint(joint)?;
    let mut total = 0.0;
    for row in joint {
        let px: f64 = row.iter().sum();
        if px <= 0.0 {
            continue;
        }
        for &pxy in row.iter().filter(|&&p| p > 0.0) {
            total -= pxy * base.log(pxy / px);
        }
    }
    Ok(total)
}

/// `H(X,Y)` of a joint distribution.
pub fn joint_entropy(joint: &[Vec<f64>], base: LogBase) -> Result<f64> {
    validate_joint(joint)?;
    Ok(shannon_entropy(&joint.concat(), base))
}

/// The row marginal `p(x) = sum_y p(x, y)`.
pub fn row_marginal(joint: &[Vec<f64>]) -> Vec<f64> {
    joint.iter().map(|row| row.iter().sum()).collect()
}

fn validate_joint(joint: &[Vec<f64>]) -> Result<()> {
    let width = joint.first().map_or(0, |r| r.len());
    if joint.iter().any(|r| r.len() != width) {
        return Err(Error::ShapeMismatch("ragged joint distribution".into()));
    }
    ProbVector::new(joint.concat(), 1e-9).map(|_| ())
}

/// `S(A|B) = S(rho_AB) - S(Tr_A rho_AB)`; negative for entangled states.
pub fn conditional_vn_entropy(rho_ab: &DensityMatrix, d_a: usize, d_b: usize, base: LogBase) -> Result<f64> {
    if rho_ab.dimension() != d_a * d_b {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} on {d_a}x{d_b}",
            rho_ab.dimension()
        )));
    }
    let rho_b = density_from_matrix(&partial_trace(rho_ab.matrix(), Subsystem::A, d_a, d_b)?, 1e-10)?;
    Ok(von_neumann_entropy(rho_ab, base) - von_neumann_entropy(&rho_b, base))
}

/// Weighted collection of states of a common dimension.
#[derive(Clone, Debug)]
pub struct Ensemble {
    weights: ProbVector,
    states: Vec<DensityMatrix>,
}

impl Ensemble {
    pub fn new(weights: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for {} states",
                weights.len(),
                states.len()
            )));
        }
        let d = states[0].dimension();
        if let Some(bad) = states.iter().find(|s| s.dimension() != d) {
            return Err(Error::DimensionMismatch(format!(
                "ensemble mixes dimensions {d} and {}",
                bad.dimension()
            )));
        }
        Ok(Self {
            weights: ProbVector::new(weights, 1e-9)?,
            states,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn dimension(&self) -> usize {
        self.states[0].dimension()
    }

    /// `sum_x p_x rho_x`.
    pub fn average(&self) -> Result<DensityMatrix> {
        let d = self.dimension();
        let avg = self
            .weights
            .iter()
            .zip(&self.states)
            .fold(ComplexMatrix::zeros(d, d), |acc, (p, s)| {
                &acc + &s.matrix().scale_real(*p)
            });
        density_from_matrix(&avg, 1e-10)
    }
}

/// `chi = S(sum_x p_x rho_x) - sum_x p_x S(rho_x)`.
pub fn holevo_chi(ens: &Ensemble, base: LogBase) -> Result<f64> {
    let avg = ens.average()?;
    let mean_entropy: f64 = ens
        .weights()
        .iter()
        .zip(ens.states())
        .map(|(p, s)| p * von_neumann_entropy(s, base))
        .sum();
    Ok(von_neumann_entropy(&avg, base) - mean_entropy)
}
