//! Conditional probabilities between the eigenstates of a bipartite parent
//! state and those of one of its reduced states, where the "channel" is the
//! partial trace.

use serde::{Deserialize, Serialize};

use crate::channels::partial_trace_channel;
use crate::conditional::{
    born_overlap, conditional_probs, conditional_states, evolved_family_from, BornOverlapTable, ConditionalProbs,
    ConditionalStateFamily, EvolvedProjectorFamily,
};
use crate::error::{Error, Result};
use crate::linalg::Subsystem;
use crate::measures::j_per_q;
use crate::states::{von_neumann_entropy, DensityMatrix, LogBase};

/// A parent state, the reduced state it is conditioned against, and every
/// derived family.
#[derive(Clone, Debug)]
pub struct ParentChild {
    pub d_a: usize,
    pub d_b: usize,
    /// The factor that is kept.
    pub which: Subsystem,
    /// `p(a|m)` with the parent as initial and the kept factor as final state.
    pub probs: ConditionalProbs,
    /// `rho_m^A = Tr_B[P_m]`.
    pub reduced_projectors: EvolvedProjectorFamily,
    /// `rho_{A|m} = sum_a p(a|m) P_a`.
    pub conditional: ConditionalStateFamily,
    pub overlaps: BornOverlapTable,
}

impl ParentChild {
    pub fn parent(&self) -> &DensityMatrix {
        &self.probs.initial
    }

    pub fn child(&self) -> &DensityMatrix {
        &self.probs.final_state
    }

    /// `max |sum_m p_m rho_m^A - rho_A|`.
    pub fn mixture_residual(&self) -> f64 {
        self.reduced_projectors
            .mixture(self.probs.table.p_from())
            .max_abs_diff(self.child().matrix())
    }
}

/// Conditions the eigenstates of the `which` factor on those of `rho_ab`.
pub fn subsystem_conditional(rho_ab: &DensityMatrix, d_a: usize, d_b: usize, which: Subsystem) -> Result<ParentChild> {
    if d_a * d_b != rho_ab.dimension() || d_a == 0 {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} does not factor as {d_a}x{d_b}",
            rho_ab.dimension()
        )));
    }
    let trace = partial_trace_channel(d_a, d_b, which.other());
    let probs = conditional_probs(&trace, rho_ab)?;
    let reduced_projectors = evolved_family_from(&probs)?;
    let conditional = conditional_states(&probs.table, &probs.final_spectrum().vectors)?;
    let overlaps = born_overlap(&probs.final_spectrum().vectors, &reduced_projectors);
    Ok(ParentChild {
        d_a,
        d_b,
        which,
        probs,
        reduced_projectors,
        conditional,
        overlaps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParentEntropy {
    /// `J(A|m)` for every parent eigenstate.
    pub per_m: Vec<f64>,
    /// `J(A|AB) = sum_m p_m J(A|m)`.
    pub total: f64,
}

pub fn j_given_parent(pc: &ParentChild, base: LogBase) -> ParentEntropy {
    let per_m = j_per_q(&pc.probs.table, base);
    let total = per_m.iter().zip(pc.probs.table.p_from()).map(|(j, p)| p * j).sum();
    ParentEntropy { per_m, total }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementBound {
    /// `-S(B|A) = S(rho_A) - S(rho_AB)`, with `A` the kept factor.
    pub lhs: f64,
    /// `J(A|AB)`.
    pub rhs: f64,
    pub slack: f64,
}

pub fn entanglement_bound_check(pc: &ParentChild, base: LogBase) -> EntanglementBound {
    let lhs = von_neumann_entropy(pc.child(), base) - von_neumann_entropy(pc.parent(), base);
    let rhs = j_given_parent(pc, base).total;
    EntanglementBound {
        lhs,
        rhs,
        slack: rhs - lhs,
    }
}

/// Largest violation of `S(rho_m^A) <= J(A|m)` (negative means it holds).
pub fn reduced_entropy_excess(pc: &ParentChild, base: LogBase) -> f64 {
    let j = j_given_parent(pc, base);
    pc.reduced_projectors
        .states
        .iter()
        .zip(&j.per_m)
        .map(|(s, jm)| von_neumann_entropy(s, base) - jm)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Output of the `subsys` command.
#[derive(Clone, Debug, Serialize)]
pub struct SubsystemReport {
    pub p_am: Vec<Vec<f64>>,
    pub p_m: Vec<f64>,
    pub p_a: Vec<f64>,
    #[serde(rename = "J_per_m")]
    pub j_per_m: Vec<f64>,
    #[serde(rename = "J_A_given_AB")]
    pub j_a_given_ab: f64,
    #[serde(rename = "S_B_given_A")]
    pub s_b_given_a: f64,
    pub bound_slack: f64,
    pub which: Subsystem,
    pub base: LogBase,
}

pub fn subsystem_report(pc: &ParentChild, base: LogBase) -> SubsystemReport {
    let j = j_given_parent(pc, base);
    let bound = entanglement_bound_check(pc, base);
    SubsystemReport {
        p_am: pc.probs.table.rows(),
        p_m: pc.probs.table.p_from().to_vec(),
        p_a: pc.probs.table.p_to().to_vec(),
        j_per_m: j.per_m,
        j_a_given_ab: j.total,
        s_b_given_a: -bound.lhs,
        bound_slack: bound.slack,
        which: pc.which,
        base,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, swap_factors, ComplexMatrix, ONE, ZERO};
    use crate::random::{random_unit_vector, rng_from_seed};
    use crate::states::{density_from_matrix, random_density, shannon_entropy};

    fn bell() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure(&[ONE * h, ZERO, ZERO, ONE * h]).unwrap()
    }

    #[test]
    fn product_pure_state() {
        let mut rng = rng_from_seed(1);
        let psi = random_unit_vector(&mut rng, 2);
        let phi = random_unit_vector(&mut rng, 3);
        let v = kron(
            &ComplexMatrix::from_columns(&[psi]),
            &ComplexMatrix::from_columns(&[phi]),
        )
        .column(0);
        let pc = subsystem_conditional(&DensityMatrix::pure(&v).unwrap(), 2, 3, Subsystem::A).unwrap();
        assert!((pc.probs.table.get(0, 0) - 1.0).abs() < 1e-10);
        assert!(pc.probs.table.get(1, 0).abs() < 1e-10);
        assert!(j_given_parent(&pc, LogBase::Two).total.abs() < 1e-9);
    }

    #[test]
    fn bell_state() {
        let pc = subsystem_conditional(&bell(), 2, 2, Subsystem::A).unwrap();
        for a in 0..2 {
            assert!((pc.probs.table.get(a, 0) - 0.5).abs() < 1e-12);
        }
        let j = j_given_parent(&pc, LogBase::Two);
        assert!((j.per_m[0] - 1.0).abs() < 1e-12);
        assert!((j.total - 1.0).abs() < 1e-12);
        let b = entanglement_bound_check(&pc, LogBase::Two);
        assert!((b.lhs - 1.0).abs() < 1e-9 && (b.rhs - 1.0).abs() < 1e-9 && b.slack.abs() < 1e-9);
    }

    #[test]
    fn maximally_mixed_parent() {
        let pc = subsystem_conditional(&DensityMatrix::maximally_mixed(4), 2, 2, Subsystem::A).unwrap();
        assert!(pc.mixture_residual() < 1e-10);
        assert!(pc.probs.table.is_basis_dependent());
    }

    #[test]
    fn diagonal_product_state() {
        let a = DensityMatrix::diagonal(&[0.7, 0.3]).unwrap();
        let b = DensityMatrix::diagonal(&[0.6, 0.4]).unwrap();
        let prod = density_from_matrix(&kron(a.matrix(), b.matrix()), 1e-12).unwrap();
        let pc = subsystem_conditional(&prod, 2, 2, Subsystem::A).unwrap();
        // Parent eigenvectors are product basis states, so every column is a delta.
        let j = j_given_parent(&pc, LogBase::Two);
        assert!(j.total.abs() < 1e-12);
        let s_a = shannon_entropy(&[0.7, 0.3], LogBase::Two);
        let bound = entanglement_bound_check(&pc, LogBase::Two);
        assert!((bound.lhs + shannon_entropy(&[0.6, 0.4], LogBase::Two)).abs() < 1e-12);
        assert!(bound.lhs <= 0.0 && bound.rhs >= 0.0);
        assert!(s_a > j.total);
    }

    #[test]
    fn pure_parent_invariants() {
        for seed in 0..20 {
            let rho = random_density(6, 1, seed).unwrap();
            let pc = subsystem_conditional(&rho, 2, 3, Subsystem::A).unwrap();
            let j = j_given_parent(&pc, LogBase::Two);
            let ent = von_neumann_entropy(pc.child(), LogBase::Two);
            assert!((j.per_m[0] - ent).abs() < 1e-9);
            let rho_m = pc.reduced_projectors.states[0].matrix();
            assert!(rho_m.max_abs_diff(pc.conditional.states[0].matrix()) < 1e-10);
        }
    }

    #[test]
    fn random_two_qubit_invariants() {
        for seed in 0..500 {
            let rho = random_density(4, 1 + seed as usize % 4, seed).unwrap();
            let pc = subsystem_conditional(&rho, 2, 2, Subsystem::A).unwrap();
            assert!(
                entanglement_bound_check(&pc, LogBase::Two).slack >= -1e-8,
                "seed {seed}"
            );
            assert!(reduced_entropy_excess(&pc, LogBase::Two) <= 1e-9);
            assert!(pc.mixture_residual() < 1e-10);
            assert!(pc.overlaps.doubly_stochastic_deviation() < 1e-9);
        }
    }

    #[test]
    fn which_b_matches_swapped_parent() {
        for seed in 0..20 {
            let rho = random_density(6, 6, seed + 40).unwrap();
            let via_b = subsystem_conditional(&rho, 2, 3, Subsystem::B).unwrap();
            let swapped = density_from_matrix(&swap_factors(rho.matrix(), 2, 3).unwrap(), 1e-12).unwrap();
            let via_swap = subsystem_conditional(&swapped, 3, 2, Subsystem::A).unwrap();
            let ja = j_given_parent(&via_b, LogBase::Two).total;
            let jb = j_given_parent(&via_swap, LogBase::Two).total;
            assert!((ja - jb).abs() < 1e-9);
            assert_eq!(via_b.child().dimension(), 3);
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            subsystem_conditional(&bell(), 3, 2, Subsystem::A),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn report_json_shape() {
        let pc = subsystem_conditional(&bell(), 2, 2, Subsystem::A).unwrap();
        let v = serde_json::to_value(subsystem_report(&pc, LogBase::Two)).unwrap();
        for key in ["p_am", "J_per_m", "J_A_given_AB", "S_B_given_A", "bound_slack"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
