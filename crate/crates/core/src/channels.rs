//! Linear CPTP maps in Kraus form.
//!
//! A [`QuantumChannel`] is a list of `dim_out x dim_in` Kraus operators with
//! `sum_k K_k^dagger K_k = I`. Complete positivity is structural in this
//! representation, so validation only has to check trace preservation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Subsystem, Tolerances, C64, ONE, ZERO};
use crate::random::{random_isometry, random_simplex, random_unitary, rng_from_seed};
use crate::states::{density_from_matrix, DensityMatrix};

/// Default bound on `max |sum K^dagger K - I|`.
pub const TRACE_PRESERVATION_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRepr", into = "ChannelRepr")]
pub struct QuantumChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct ChannelRepr {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl From<QuantumChannel> for ChannelRepr {
    fn from(c: QuantumChannel) -> Self {
        Self {
            dim_in: c.dim_in,
            dim_out: c.dim_out,
            kraus: c.kraus,
        }
    }
}

impl TryFrom<ChannelRepr> for QuantumChannel {
    type Error = Error;

    fn try_from(r: ChannelRepr) -> Result<Self> {
        if let Some(k) = r.kraus.first() {
            if k.rows() != r.dim_out || k.cols() != r.dim_in {
                return Err(Error::ShapeMismatch(format!(
                    "declared {}->{} but Kraus operators are {}x{}",
                    r.dim_in,
                    r.dim_out,
                    k.rows(),
                    k.cols()
                )));
            }
        }
        validate_channel(r.kraus, TRACE_PRESERVATION_TOL)
    }
}

/// Checks shapes and `sum K^dagger K = I` within `tol`.
pub fn validate_channel(kraus: Vec<ComplexMatrix>, tol: f64) -> Result<QuantumChannel> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::ShapeMismatch("channel needs at least one Kraus operator".into()))?;
    let (dim_out, dim_in) = (first.rows(), first.cols());
    if let Some(k) = kraus.iter().find(|k| k.rows() != dim_out || k.cols() != dim_in) {
        return Err(Error::ShapeMismatch(format!(
            "Kraus operators of shapes {dim_out}x{dim_in} and {}x{}",
            k.rows(),
            k.cols()
        )));
    }
    let channel = QuantumChannel { dim_in, dim_out, kraus };
    let max_deviation = channel.trace_preservation_deviation();
    if max_deviation > tol {
        return Err(Error::NotTracePreserving { max_deviation });
    }
    Ok(channel)
}

impl QuantumChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        validate_channel(kraus, TRACE_PRESERVATION_TOL)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim_in: d,
            dim_out: d,
            kraus: vec![ComplexMatrix::identity(d)],
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `max |sum K^dagger K - I|`.
    pub fn trace_preservation_deviation(&self) -> f64 {
        let sum = self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim_in, self.dim_in), |acc, k| {
                &acc + &k.adjoint().matmul(k)
            });
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim_in))
    }

    /// `sum_k K_k M K_k^dagger` for an arbitrary operator `M`.
    pub fn apply_to_operator(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        if m.rows() != self.dim_in || m.cols() != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "channel input dimension {} but operator is {}x{}",
                self.dim_in,
                m.rows(),
                m.cols()
            )));
        }
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim_out, self.dim_out), |acc, k| {
                &acc + &k.matmul(m).matmul(&k.adjoint())
            }))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_to_operator(rho.matrix())?;
        density_from_matrix(&out, Tolerances::default().hermiticity)
    }

    /// True iff `max |sum K K^dagger - I| <= tol`; false for maps that change
    /// dimension.
    pub fn is_unital(&self, tol: f64) -> bool {
        if self.dim_in != self.dim_out {
            return false;
        }
        let sum = self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim_out, self.dim_out), |acc, k| {
                &acc + &k.matmul(&k.adjoint())
            });
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim_out)) <= tol
    }
}

/// `second ∘ first`, with Kraus set `{K2_j K1_i}`.
pub fn compose(second: &QuantumChannel, first: &QuantumChannel) -> Result<QuantumChannel> {
    if first.dim_out != second.dim_in {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose {}->{} after {}->{}",
            second.dim_in, second.dim_out, first.dim_in, first.dim_out
        )));
    }
    let kraus = second
        .kraus
        .iter()
        .flat_map(|k2| first.kraus.iter().map(move |k1| k2.matmul(k1)))
        .collect();
    Ok(QuantumChannel {
        dim_in: first.dim_in,
        dim_out: second.dim_out,
        kraus,
    })
}

/// Max-entry deviation of `sum_m |v_m><v_m|` from the identity, or infinity
/// when the vectors are not pairwise orthonormal.
pub(crate) fn resolution_deviation(basis: &[Vec<C64>], d: usize) -> f64 {
    if basis.iter().any(|v| v.len() != d) {
        return f64::INFINITY;
    }
    let sum = basis
        .iter()
        .fold(ComplexMatrix::zeros(d, d), |acc, v| &acc + &ComplexMatrix::outer(v));
    let gram = ComplexMatrix::from_fn(basis.len(), basis.len(), |i, j| {
        crate::linalg::inner(&basis[i], &basis[j])
    });
    let ortho = gram.max_abs_diff(&ComplexMatrix::identity(basis.len()));
    sum.max_abs_diff(&ComplexMatrix::identity(d)).max(ortho)
}

/// Projective measurement with the outcome discarded: `rho -> sum_m P_m rho P_m`
/// for an orthonormal basis `{|v_m>}`.
pub fn pinching(basis: &[Vec<C64>]) -> Result<QuantumChannel> {
    let d = basis.first().map_or(0, |v| v.len());
    let max_deviation = resolution_deviation(basis, d);
    if d == 0 || max_deviation > Tolerances::default().orthonormality {
        return Err(Error::NotAResolutionOfIdentity { max_deviation });
    }
    Ok(QuantumChannel {
        dim_in: d,
        dim_out: d,
        kraus: basis.iter().map(|v| ComplexMatrix::outer(v)).collect(),
    })
}

/// Pinching in the computational basis.
pub fn computational_pinching(d: usize) -> QuantumChannel {
    let basis: Vec<_> = (0..d).map(|k| ComplexMatrix::basis_vector(d, k)).collect();
    pinching(&basis).expect("standard basis is orthonormal")
}

pub fn unitary_channel(u: &ComplexMatrix) -> Result<QuantumChannel> {
    if !u.is_square() {
        return Err(Error::NotUnitary {
            max_deviation: f64::INFINITY,
        });
    }
    let max_deviation = u.adjoint().matmul(u).max_abs_diff(&ComplexMatrix::identity(u.rows()));
    if max_deviation > TRACE_PRESERVATION_TOL {
        return Err(Error::NotUnitary { max_deviation });
    }
    Ok(QuantumChannel {
        dim_in: u.rows(),
        dim_out: u.rows(),
        kraus: vec![u.clone()],
    })
}

fn check_strength(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::ParameterOutOfRange {
            name: "lambda",
            value: lambda,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// Generalized Pauli operator `X^a Z^b` on `C^d`.
pub fn weyl_operator(d: usize, a: usize, b: usize) -> ComplexMatrix {
    let omega = |k: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64);
    // (X^a Z^b)|j> = w^{b j} |j + a>
    ComplexMatrix::from_fn(d, d, |i, j| if i == (j + a) % d { omega((b * j) % d) } else { ZERO })
}

/// `rho -> (1 - lambda) rho + lambda I/d`, with Kraus operators drawn from the
/// `d^2` shift/clock (Weyl) operators.
pub fn depolarizing(d: usize, lambda: f64) -> Result<QuantumChannel> {
    check_strength(lambda)?;
    let d2 = (d * d) as f64;
    let mut kraus = Vec::with_capacity(d * d);
    let w0 = 1.0 - lambda + lambda / d2;
    kraus.push(ComplexMatrix::identity(d).scale_real(w0.sqrt()));
    if lambda > 0.0 {
        let w = (lambda / d2).sqrt();
        for a in 0..d {
            for b in 0..d {
                if a == 0 && b == 0 {
                    continue;
                }
                kraus.push(weyl_operator(d, a, b).scale_real(w));
            }
        }
    }
    validate_channel(kraus, TRACE_PRESERVATION_TOL)
}

/// `rho -> (1 - lambda) rho + lambda sum_i P_i rho P_i` in the computational basis.
pub fn dephasing(d: usize, lambda: f64) -> Result<QuantumChannel> {
    check_strength(lambda)?;
    let mut kraus = Vec::with_capacity(d + 1);
    if lambda < 1.0 {
        kraus.push(ComplexMatrix::identity(d).scale_real((1.0 - lambda).sqrt()));
    }
    if lambda > 0.0 {
        for i in 0..d {
            let mut p = ComplexMatrix::zeros(d, d);
            p[(i, i)] = C64::new(lambda.sqrt(), 0.0);
            kraus.push(p);
        }
    }
    validate_channel(kraus, TRACE_PRESERVATION_TOL)
}

/// Partial trace over `traced` as a channel from `C^{d_a d_b}`.
pub fn partial_trace_channel(d_a: usize, d_b: usize, traced: Subsystem) -> QuantumChannel {
    let n = d_a * d_b;
    let kraus = match traced {
        // I_A ⊗ <k|_B
        Subsystem::B => (0..d_b)
            .map(|k| ComplexMatrix::from_fn(d_a, n, |i, c| if c == i * d_b + k { ONE } else { ZERO }))
            .collect(),
        // <k|_A ⊗ I_B
        Subsystem::A => (0..d_a)
            .map(|k| ComplexMatrix::from_fn(d_b, n, |j, c| if c == k * d_b + j { ONE } else { ZERO }))
            .collect(),
    };
    let dim_out = match traced {
        Subsystem::B => d_a,
        Subsystem::A => d_b,
    };
    QuantumChannel {
        dim_in: n,
        dim_out,
        kraus,
    }
}

/// Random channel from a Stinespring isometry `V: C^{dim_in} -> C^{dim_out} ⊗ C^{env_dim}`,
/// with Kraus operators `K_k = (I ⊗ <k|) V`.
pub fn random_channel(dim_in: usize, dim_out: usize, env_dim: usize, seed: u64) -> Result<QuantumChannel> {
    random_channel_with(&mut rng_from_seed(seed), dim_in, dim_out, env_dim)
}

pub fn random_channel_with<R: rand::Rng + ?Sized>(
    rng: &mut R,
    dim_in: usize,
    dim_out: usize,
    env_dim: usize,
) -> Result<QuantumChannel> {
    if env_dim == 0 || dim_out * env_dim < dim_in {
        return Err(Error::ParameterOutOfRange {
            name: "env_dim",
            value: env_dim as f64,
            range: "[ceil(dim_in / dim_out), inf)",
        });
    }
    let v = random_isometry(rng, dim_out * env_dim, dim_in);
    let kraus = (0..env_dim)
        .map(|k| ComplexMatrix::from_fn(dim_out, dim_in, |i, j| v[(i * env_dim + k, j)]))
        .collect();
    validate_channel(kraus, TRACE_PRESERVATION_TOL)
}

/// Random mixture of `n_unitaries` Haar unitaries with uniform-simplex weights.
pub fn random_unital_channel(d: usize, n_unitaries: usize, seed: u64) -> Result<QuantumChannel> {
    random_unital_channel_with(&mut rng_from_seed(seed), d, n_unitaries)
}

pub fn random_unital_channel_with<R: rand::Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    n_unitaries: usize,
) -> Result<QuantumChannel> {
    if n_unitaries == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "n_unitaries",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    let weights = if n_unitaries == 1 {
        vec![1.0]
    } else {
        random_simplex(rng, n_unitaries)
    };
    let kraus = weights
        .iter()
        .map(|w| random_unitary(rng, d).scale_real(w.sqrt()))
        .collect();
    validate_channel(kraus, TRACE_PRESERVATION_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::gaussian_matrix;
    use crate::states::random_density;

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn amplitude_damping_full() -> Vec<ComplexMatrix> {
        vec![
            ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]),
            ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]),
        ]
    }

    #[test]
    fn validation_examples() {
        assert!(validate_channel(vec![ComplexMatrix::identity(2)], 1e-10).is_ok());
        assert!(validate_channel(amplitude_damping_full(), 1e-10).is_ok());
        let err = validate_channel(vec![ComplexMatrix::identity(2).scale_real(0.5)], 1e-10);
        assert!(
            matches!(err, Err(Error::NotTracePreserving { max_deviation }) if (max_deviation - 0.75).abs() < 1e-15)
        );
        let mixed = vec![ComplexMatrix::identity(2), ComplexMatrix::identity(3)];
        assert!(matches!(validate_channel(mixed, 1e-10), Err(Error::ShapeMismatch(_))));
        assert!(matches!(validate_channel(vec![], 1e-10), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn apply_examples() {
        let rho = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let same = QuantumChannel::identity(2).apply(&rho).unwrap();
        assert!(same.matrix().max_abs_diff(rho.matrix()) < 1e-15);

        let dep = depolarizing(2, 0.5).unwrap().apply(&rho).unwrap();
        assert!(dep.matrix().max_abs_diff(&ComplexMatrix::diag(&[0.625, 0.375])) < 1e-15);

        let flip = unitary_channel(&pauli_x()).unwrap().apply(&rho).unwrap();
        assert!(flip.matrix().max_abs_diff(&ComplexMatrix::diag(&[0.25, 0.75])) < 1e-15);

        let wrong = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            QuantumChannel::identity(2).apply(&wrong),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn apply_to_operator_examples() {
        let mut rng = rng_from_seed(4);
        let m = gaussian_matrix(&mut rng, 3, 3);
        assert_eq!(QuantumChannel::identity(3).apply_to_operator(&m).unwrap(), m);

        let off = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let pinched = computational_pinching(2).apply_to_operator(&off).unwrap();
        assert_eq!(pinched, ComplexMatrix::zeros(2, 2));

        let e = random_channel(3, 3, 2, 8).unwrap();
        let n = gaussian_matrix(&mut rng, 3, 3);
        let (a, b) = (C64::new(0.7, 0.2), C64::new(-1.5, 0.9));
        let lhs = e.apply_to_operator(&(&m.scale(a) + &n.scale(b))).unwrap();
        let rhs = &e.apply_to_operator(&m).unwrap().scale(a) + &e.apply_to_operator(&n).unwrap().scale(b);
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn composition_examples() {
        let e = random_channel(2, 2, 3, 1).unwrap();
        let rho = random_density(2, 2, 2).unwrap();
        let id_e = compose(&QuantumChannel::identity(2), &e).unwrap();
        assert!(
            id_e.apply(&rho)
                .unwrap()
                .matrix()
                .max_abs_diff(e.apply(&rho).unwrap().matrix())
                < 1e-14
        );

        let x = unitary_channel(&pauli_x()).unwrap();
        let xx = compose(&x, &x).unwrap();
        assert!(xx.apply(&rho).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-15);

        // Both sides on a basis of 2x2 operators.
        let (l1, l2) = (0.3, 0.6);
        let lhs = compose(&depolarizing(2, l2).unwrap(), &depolarizing(2, l1).unwrap()).unwrap();
        let rhs = depolarizing(2, 1.0 - (1.0 - l1) * (1.0 - l2)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut basis = ComplexMatrix::zeros(2, 2);
                basis[(i, j)] = ONE;
                let a = lhs.apply_to_operator(&basis).unwrap();
                let b = rhs.apply_to_operator(&basis).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-14);
            }
        }
        assert_eq!(lhs.kraus().len(), 16);

        assert!(matches!(
            compose(&QuantumChannel::identity(3), &e),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn unitality_examples() {
        assert!(unitary_channel(&random_unitary(&mut rng_from_seed(5), 4))
            .unwrap()
            .is_unital(1e-10));
        assert!(computational_pinching(3).is_unital(1e-10));
        let damp = validate_channel(amplitude_damping_full(), 1e-10).unwrap();
        assert!(!damp.is_unital(1e-10));
        assert!(!partial_trace_channel(2, 2, Subsystem::B).is_unital(1e-10));
    }

    #[test]
    fn pinching_examples() {
        let diag = DensityMatrix::diagonal(&[0.2, 0.3, 0.5]).unwrap();
        let p = computational_pinching(3);
        assert!(p.apply(&diag).unwrap().matrix().max_abs_diff(diag.matrix()) < 1e-15);

        let plus = DensityMatrix::pure(&[ONE, ONE]).unwrap();
        let out = computational_pinching(2).apply(&plus).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::diag(&[0.5, 0.5])) < 1e-15);

        let basis: Vec<_> = (0..3)
            .map(|k| random_unitary(&mut rng_from_seed(6), 3).column(k))
            .collect();
        let pin = pinching(&basis).unwrap();
        let rho = random_density(3, 3, 7).unwrap();
        let out = pin.apply(&rho).unwrap();
        for v in &basis {
            let c = out.matrix().commutator(&ComplexMatrix::outer(v));
            assert!(c.max_abs() < 1e-12);
        }
        let twice = pin.apply(&out).unwrap();
        assert!(twice.matrix().max_abs_diff(out.matrix()) < 1e-14);

        let bad = vec![ComplexMatrix::basis_vector(2, 0), ComplexMatrix::basis_vector(2, 0)];
        assert!(matches!(pinching(&bad), Err(Error::NotAResolutionOfIdentity { .. })));
    }

    #[test]
    fn unitary_channel_examples() {
        assert_eq!(
            unitary_channel(&ComplexMatrix::identity(2)).unwrap(),
            QuantumChannel::identity(2)
        );
        assert!(unitary_channel(&pauli_x()).is_ok());
        let u = random_unitary(&mut rng_from_seed(10), 5);
        assert!(validate_channel(unitary_channel(&u).unwrap().kraus().to_vec(), 1e-12).is_ok());
        assert!(matches!(
            unitary_channel(&ComplexMatrix::diag(&[1.0, 0.5])),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn depolarizing_and_dephasing_limits() {
        for d in 2..5 {
            let rho = random_density(d, d, d as u64).unwrap();
            for chan in [depolarizing(d, 0.0).unwrap(), dephasing(d, 0.0).unwrap()] {
                assert!(chan.apply(&rho).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-14);
            }
            let full = depolarizing(d, 1.0).unwrap().apply(&rho).unwrap();
            assert!(full.matrix().max_abs_diff(DensityMatrix::maximally_mixed(d).matrix()) < 1e-14);
            let deph = dephasing(d, 1.0).unwrap().apply(&rho).unwrap();
            let pinched = computational_pinching(d).apply(&rho).unwrap();
            assert!(deph.matrix().max_abs_diff(pinched.matrix()) < 1e-14);
            // Mid-strength depolarizing against its closed form.
            let l = 0.37;
            let out = depolarizing(d, l).unwrap().apply_to_operator(rho.matrix()).unwrap();
            let expect = &rho.matrix().scale_real(1.0 - l) + &ComplexMatrix::identity(d).scale_real(l / d as f64);
            assert!(out.max_abs_diff(&expect) < 1e-14);
        }
        assert!(matches!(depolarizing(2, 1.5), Err(Error::ParameterOutOfRange { .. })));
        assert!(matches!(dephasing(2, -0.1), Err(Error::ParameterOutOfRange { .. })));
    }

    #[test]
    fn partial_trace_channel_matches_kernel() {
        for seed in 0..50 {
            let rho = random_density(6, 1 + seed as usize % 6, seed).unwrap();
            for which in [Subsystem::A, Subsystem::B] {
                let ch = partial_trace_channel(2, 3, which);
                let a = ch.apply_to_operator(rho.matrix()).unwrap();
                let b = crate::linalg::partial_trace(rho.matrix(), which, 2, 3).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-12);
            }
        }
        let h = 0.5f64.sqrt();
        let bell = DensityMatrix::pure(&[C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)]).unwrap();
        let marginal = partial_trace_channel(2, 2, Subsystem::A).apply(&bell).unwrap();
        assert!(
            marginal
                .matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(2).matrix())
                < 1e-15
        );
    }

    #[test]
    fn random_channel_properties() {
        let u = random_channel(3, 3, 1, 12).unwrap();
        assert_eq!(u.kraus().len(), 1);
        let k = &u.kraus()[0];
        assert!(k.adjoint().matmul(k).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-10);
        assert!(k.matmul(&k.adjoint()).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-10);
        for seed in 0..100 {
            let e = random_channel(
                2 + seed as usize % 3,
                2 + seed as usize % 4,
                1 + seed as usize % 4,
                seed,
            );
            match e {
                Ok(e) => assert!(validate_channel(e.kraus().to_vec(), 1e-12).is_ok()),
                Err(Error::ParameterOutOfRange { .. }) => {}
                Err(other) => panic!("{other}"),
            }
        }
        assert_eq!(
            random_channel(3, 2, 3, 99).unwrap(),
            random_channel(3, 2, 3, 99).unwrap()
        );
    }

    #[test]
    fn random_unital_properties() {
        let single = random_unital_channel(3, 1, 1).unwrap();
        assert_eq!(single.kraus().len(), 1);
        assert!(unitary_channel(&single.kraus()[0]).is_ok());
        for seed in 0..100 {
            let e = random_unital_channel(2 + seed as usize % 4, 1 + seed as usize % 5, seed).unwrap();
            assert!(e.is_unital(1e-10));
            let with_pinch = compose(&computational_pinching(e.dim_in()), &e).unwrap();
            assert!(with_pinch.is_unital(1e-10));
        }
    }

    #[test]
    fn generated_channels_output_valid_states() {
        let chans = [
            random_channel(3, 3, 2, 1).unwrap(),
            random_unital_channel(3, 3, 2).unwrap(),
            depolarizing(3, 0.4).unwrap(),
            dephasing(3, 0.8).unwrap(),
            computational_pinching(3),
        ];
        for (i, e) in chans.iter().enumerate() {
            for seed in 0..100 {
                let rho = random_density(3, 1 + seed as usize % 3, seed * 7 + i as u64).unwrap();
                let out = e.apply(&rho).unwrap();
                assert!((out.corrections().trace_before - 1.0).abs() < 1e-10);
                assert!(out.corrections().min_eigenvalue >= -1e-12);
            }
        }
    }

    #[test]
    fn composition_is_associative() {
        let e1 = random_channel(2, 3, 2, 1).unwrap();
        let e2 = random_channel(3, 3, 2, 2).unwrap();
        let e3 = random_channel(3, 2, 2, 3).unwrap();
        let left = compose(&compose(&e3, &e2).unwrap(), &e1).unwrap();
        let right = compose(&e3, &compose(&e2, &e1).unwrap()).unwrap();
        for seed in 0..20 {
            let rho = random_density(2, 2, seed).unwrap();
            let a = left.apply(&rho).unwrap();
            let b = right.apply(&rho).unwrap();
            assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-10);
        }
    }

    #[test]
    fn weyl_operators_twirl_to_identity() {
        let d = 3;
        let m = gaussian_matrix(&mut rng_from_seed(2), d, d);
        let mut acc = ComplexMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                let w = weyl_operator(d, a, b);
                acc = &acc + &w.matmul(&m).matmul(&w.adjoint());
            }
        }
        let expect = ComplexMatrix::identity(d).scale(m.trace() * d as f64);
        assert!(acc.max_abs_diff(&expect) < 1e-12);
    }
}
