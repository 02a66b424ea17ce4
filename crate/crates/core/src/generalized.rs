//! Conditional quantities over convex decompositions into non-orthogonal pure
//! states, and the trace functional `Tr[A^p K B^(1-p) K^dagger]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{resolution_deviation, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian_with, norm, ComplexMatrix, Tolerances, C64};
use crate::random::{gaussian_matrix, random_isometry, rng_from_seed};
use crate::states::{DensityMatrix, ProbVector};

/// `rho = sum_k lambda_k |phi_k><phi_k|` with unit vectors that need not be
/// orthogonal.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexDecomposition {
    weights: ProbVector,
    vectors: Vec<Vec<C64>>,
}

impl ConvexDecomposition {
    /// Normalizes each vector; rejects zero vectors and mismatched lengths.
    pub fn new(weights: Vec<f64>, vectors: Vec<Vec<C64>>) -> Result<Self> {
        if weights.len() != vectors.len() || vectors.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for {} vectors",
                weights.len(),
                vectors.len()
            )));
        }
        let d = vectors[0].len();
        let mut unit = Vec::with_capacity(vectors.len());
        for v in vectors {
            let n = norm(&v);
            if v.len() != d || n == 0.0 {
                return Err(Error::DimensionMismatch(
                    "decomposition vectors must be nonzero and equally sized".into(),
                ));
            }
            unit.push(v.iter().map(|x| x / n).collect());
        }
        Ok(Self {
            weights: ProbVector::new(weights, 1e-9)?,
            vectors: unit,
        })
    }

    /// The eigendecomposition itself, zero-weight members included.
    pub fn spectral(rho: &DensityMatrix) -> Self {
        let s = rho.spectral();
        Self {
            weights: ProbVector::new(s.probabilities.clone(), 1e-9).expect("spectrum is a distribution"),
            vectors: s.vectors.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    pub fn projector(&self, k: usize) -> ComplexMatrix {
        ComplexMatrix::outer(&self.vectors[k])
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.dimension();
        self.weights
            .iter()
            .zip(&self.vectors)
            .fold(ComplexMatrix::zeros(d, d), |acc, (w, v)| {
                &acc + &ComplexMatrix::outer(v).scale_real(*w)
            })
    }
}

/// `|phi_k> = sum_i M_ki sqrt(p_i) |Psi_i>` over the support of `rho`, for an
/// `m x rank` matrix `M` with orthonormal columns. Zero-weight members are
/// dropped.
pub fn decomposition_from_isometry(rho: &DensityMatrix, m: &ComplexMatrix) -> Result<ConvexDecomposition> {
    let spec = rho.spectral();
    let rank = spec.rank();
    if m.cols() != rank {
        return Err(Error::ShapeMismatch(format!(
            "isometry has {} columns for rank {rank}",
            m.cols()
        )));
    }
    if m.rows() < rank {
        return Err(Error::RankTooSmall {
            rank,
            members: m.rows(),
        });
    }
    let d = rho.dimension();
    let mut weights = Vec::new();
    let mut vectors = Vec::new();
    for k in 0..m.rows() {
        let mut phi = vec![C64::new(0.0, 0.0); d];
        for i in 0..rank {
            let c = m[(k, i)] * spec.probabilities[i].sqrt();
            for (x, psi) in phi.iter_mut().zip(&spec.vectors[i]) {
                *x += c * psi;
            }
        }
        let w = norm(&phi).powi(2);
        if w > 0.0 {
            weights.push(w);
            vectors.push(phi);
        }
    }
    let total: f64 = weights.iter().sum();
    ConvexDecomposition::new(weights.into_iter().map(|w| w / total).collect(), vectors)
}

/// A random decomposition into `members` pure states.
pub fn random_decomposition(rho: &DensityMatrix, members: usize, seed: u64) -> Result<ConvexDecomposition> {
    let rank = rho.spectral().rank();
    if members < rank {
        return Err(Error::RankTooSmall { rank, members });
    }
    let m = random_isometry(&mut rng_from_seed(seed), members, rank);
    decomposition_from_isometry(rho, &m)
}

/// `P(rho|kappa) = Tr[Pi_rho E(Pi_kappa)]` with the weights it links.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedTable {
    /// `entries[rho][kappa]`.
    pub entries: Vec<Vec<f64>>,
    /// Input weights `lambda_kappa`.
    pub lambda_q: Vec<f64>,
    /// `Lambda_rho = Tr[Pi_rho rho_R]`.
    #[serde(rename = "Lambda_r")]
    pub big_lambda_r: Vec<f64>,
    /// Output weights `lambda_rho` when the output family is itself a
    /// decomposition of `rho_R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_r: Option<Vec<f64>>,
    /// `max_rho |Lambda_rho - sum_kappa P(rho|kappa) lambda_kappa|`.
    pub lambda_relation_residual: f64,
    /// `max_rho |Lambda_rho - lambda_rho|`, when output weights exist.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_gap: Option<f64>,
    pub resolves_identity: bool,
    /// `max_kappa |sum_rho P(rho|kappa) - 1|`.
    pub normalization_deviation: f64,
}

fn generalized_entries(
    channel: &QuantumChannel,
    dec_q: &ConvexDecomposition,
    out: &[Vec<C64>],
) -> Result<Vec<Vec<f64>>> {
    if dec_q.dimension() != channel.dim_in() || out.iter().any(|v| v.len() != channel.dim_out()) {
        return Err(Error::DimensionMismatch(format!(
            "channel {}->{} with input decomposition on {}",
            channel.dim_in(),
            channel.dim_out(),
            dec_q.dimension()
        )));
    }
    let evolved = (0..dec_q.len())
        .map(|k| channel.apply_to_operator(&dec_q.projector(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(out
        .iter()
        .map(|v| evolved.iter().map(|m| m.sandwich(v, v).re).collect())
        .collect())
}

fn assemble(
    channel: &QuantumChannel,
    dec_q: &ConvexDecomposition,
    out: &[Vec<C64>],
    lambda_r: Option<Vec<f64>>,
    resolves_identity: bool,
) -> Result<GeneralizedTable> {
    let entries = generalized_entries(channel, dec_q, out)?;
    let rho_r = channel.apply_to_operator(&dec_q.reconstruct())?;
    let big_lambda_r: Vec<f64> = out.iter().map(|v| rho_r.sandwich(v, v).re).collect();
    let lambda_relation_residual = entries
        .iter()
        .zip(&big_lambda_r)
        .map(|(row, big)| {
            let mixed: f64 = row.iter().zip(dec_q.weights()).map(|(p, l)| p * l).sum();
            (big - mixed).abs()
        })
        .fold(0.0, f64::max);
    let normalization_deviation = (0..dec_q.len())
        .map(|k| (entries.iter().map(|row| row[k]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let lambda_gap = lambda_r.as_ref().map(|l| {
        l.iter()
            .zip(&big_lambda_r)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    });
    Ok(GeneralizedTable {
        entries,
        lambda_q: dec_q.weights().to_vec(),
        big_lambda_r,
        lambda_r,
        lambda_relation_residual,
        lambda_gap,
        resolves_identity,
        normalization_deviation,
    })
}

/// Generalized table against an output family that must resolve the identity,
/// which for rank-one projectors means an orthonormal basis.
pub fn generalized_qcp(
    channel: &QuantumChannel,
    dec_q: &ConvexDecomposition,
    out_basis: &[Vec<C64>],
) -> Result<GeneralizedTable> {
    let dev = resolution_deviation(out_basis, channel.dim_out());
    if dev > Tolerances::default().orthonormality {
        return Err(Error::OutputNotResolutionOfIdentity { max_deviation: dev });
    }
    assemble(channel, dec_q, out_basis, None, true)
}

/// Generalized table against a convex decomposition of the output state
/// itself. The family does not resolve the identity, so the entries are not
/// normalized; the report carries the gap between `Lambda_rho` and the
/// decomposition weights.
pub fn generalized_against_decomposition(
    channel: &QuantumChannel,
    dec_q: &ConvexDecomposition,
    dec_r: &ConvexDecomposition,
) -> Result<GeneralizedTable> {
    let rho_r = channel.apply_to_operator(&dec_q.reconstruct())?;
    let residual = dec_r.reconstruct().max_abs_diff(&rho_r);
    if residual > 1e-9 {
        return Err(Error::InconsistentTable(format!(
            "output decomposition misses the evolved state by {residual:e}"
        )));
    }
    let resolves = resolution_deviation(dec_r.vectors(), channel.dim_out()) <= Tolerances::default().orthonormality;
    assemble(
        channel,
        dec_q,
        dec_r.vectors(),
        Some(dec_r.weights().to_vec()),
        resolves,
    )
}

/// `A^p` by spectral calculus, with eigenvalues below the clip threshold set
/// to zero and `0^0 = 1`.
fn psd_power(a: &ComplexMatrix, p: f64) -> Result<ComplexMatrix> {
    let tols = Tolerances::default();
    let eig = eig_hermitian_with(a, &tols)?;
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if min < -tols.eigclip * scale {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let d = a.rows();
    let mut out = ComplexMatrix::zeros(d, d);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let x = if lambda < tols.eigclip * scale { 0.0 } else { lambda };
        let w = x.powf(p);
        if w != 0.0 {
            out = &out + &ComplexMatrix::outer(&eig.vector(i)).scale_real(w);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiebValue {
    pub value: f64,
    pub imaginary_residual: f64,
}

/// `Tr[A^p K B^(1-p) K^dagger]` for PSD `A` (`n x n`), `B` (`m x m`) and `K`
/// (`n x m`).
pub fn lieb_quantity(a: &ComplexMatrix, b: &ComplexMatrix, k: &ComplexMatrix, p: f64) -> Result<LiebValue> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::PowerOutOfRange(p));
    }
    if !a.is_square() || !b.is_square() || k.rows() != a.rows() || k.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "A {}x{}, K {}x{}, B {}x{}",
            a.rows(),
            a.cols(),
            k.rows(),
            k.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let ap = psd_power(a, p)?;
    let bq = psd_power(b, 1.0 - p)?;
    let t = ap.matmul(k).matmul(&bq).matmul(&k.adjoint()).trace();
    Ok(LiebValue {
        value: t.re,
        imaginary_residual: t.im.abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcavityPoint {
    pub t: f64,
    /// `F(t A0 + (1-t) A1, t B0 + (1-t) B1)`.
    pub lhs: f64,
    /// `t F(A0, B0) + (1-t) F(A1, B1)`.
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    pub points: Vec<ConcavityPoint>,
    pub worst_slack: f64,
}

/// Evaluates joint concavity of the Lieb functional on `n_points` evenly
/// spaced points of the segment between `(A1, B1)` at `t = 0` and `(A0, B0)`
/// at `t = 1`.
#[allow(clippy::too_many_arguments)]
pub fn concavity_probe(
    a0: &ComplexMatrix,
    a1: &ComplexMatrix,
    b0: &ComplexMatrix,
    b1: &ComplexMatrix,
    k: &ComplexMatrix,
    p: f64,
    n_points: usize,
) -> Result<ConcavityReport> {
    let f0 = lieb_quantity(a0, b0, k, p)?.value;
    let f1 = lieb_quantity(a1, b1, k, p)?.value;
    let mut points = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let t = if n_points == 1 {
            0.5
        } else {
            i as f64 / (n_points - 1) as f64
        };
        let a = &a0.scale_real(t) + &a1.scale_real(1.0 - t);
        let b = &b0.scale_real(t) + &b1.scale_real(1.0 - t);
        let lhs = lieb_quantity(&a, &b, k, p)?.value;
        let rhs = t * f0 + (1.0 - t) * f1;
        points.push(ConcavityPoint {
            t,
            lhs,
            rhs,
            slack: lhs - rhs,
        });
    }
    let worst_slack = points.iter().map(|pt| pt.slack).fold(f64::INFINITY, f64::min);
    Ok(ConcavityReport { points, worst_slack })
}

/// Random PSD matrix `G G^dagger` of the given rank, scaled to unit trace.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, d, rank);
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    m.scale_real(1.0 / tr)
}

/// Concavity probe on a segment between two random PSD pairs with a random
/// Gaussian `K`.
pub fn random_concavity_probe(d: usize, p: f64, n_points: usize, seed: u64) -> Result<ConcavityReport> {
    let mut rng = rng_from_seed(seed);
    let draw = |rng: &mut crate::random::SeededRng| {
        let rank = 1 + rng.random_range(0..d);
        random_psd(rng, d, rank)
    };
    let (a0, a1, b0, b1) = (draw(&mut rng), draw(&mut rng), draw(&mut rng), draw(&mut rng));
    let k = gaussian_matrix(&mut rng, d, d);
    concavity_probe(&a0, &a1, &b0, &b1, &k, p, n_points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{depolarizing, random_channel, QuantumChannel};
    use crate::conditional::conditional_probs;
    use crate::linalg::{ONE, ZERO};
    use crate::states::random_density;

    #[test]
    fn identity_isometry_recovers_spectrum() {
        let rho = random_density(3, 3, 1).unwrap();
        let dec = decomposition_from_isometry(&rho, &ComplexMatrix::identity(3)).unwrap();
        for (w, p) in dec.weights().iter().zip(&rho.spectral().probabilities) {
            assert!((w - p).abs() < 1e-14);
        }
        for (v, psi) in dec.vectors().iter().zip(&rho.spectral().vectors) {
            assert!(ComplexMatrix::outer(v).max_abs_diff(&ComplexMatrix::outer(psi)) < 1e-12);
        }
    }

    #[test]
    fn random_decompositions_reconstruct() {
        for seed in 0..100 {
            let rho = random_density(2, 2, seed).unwrap();
            let dec = random_decomposition(&rho, 3, seed + 1000).unwrap();
            assert!((dec.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(dec.reconstruct().max_abs_diff(rho.matrix()) < 1e-10);
        }
        let rho = random_density(3, 3, 5).unwrap();
        assert!(matches!(
            random_decomposition(&rho, 2, 1),
            Err(Error::RankTooSmall { rank: 3, members: 2 })
        ));
    }

    #[test]
    fn spectral_decompositions_reduce_to_the_table() {
        for seed in 0..20 {
            let rho = random_density(3, 1 + seed as usize % 3, seed).unwrap();
            let e = random_channel(3, 2, 3, seed + 1).unwrap();
            let probs = conditional_probs(&e, &rho).unwrap();
            let g = generalized_qcp(
                &e,
                &ConvexDecomposition::spectral(&rho),
                &probs.final_spectrum().vectors,
            )
            .unwrap();
            for (r, row) in g.entries.iter().enumerate() {
                for (q, &x) in row.iter().enumerate() {
                    assert!((x - probs.table.get(r, q)).abs() < 1e-10);
                }
            }
            assert!(g.resolves_identity && g.normalization_deviation < 1e-9);
        }
    }

    #[test]
    fn lambda_relation_with_nonorthogonal_output() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let dec = ConvexDecomposition::new(vec![0.5, 0.5], vec![vec![ONE, ZERO], vec![ONE * h, ONE * h]]).unwrap();
        let g = generalized_against_decomposition(&QuantumChannel::identity(2), &dec, &dec).unwrap();
        assert!(g.lambda_relation_residual < 1e-9);
        assert!(!g.resolves_identity);
        // Lambda = Tr[Pi rho] = 0.5 + 0.5 * 0.5 = 0.75 for both members.
        for big in &g.big_lambda_r {
            assert!((big - 0.75).abs() < 1e-12);
        }
        assert!((g.lambda_gap.unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn fully_depolarizing_rows_are_uniform() {
        let rho = random_density(3, 3, 2).unwrap();
        let dec = random_decomposition(&rho, 5, 3).unwrap();
        let basis: Vec<_> = (0..3).map(|k| ComplexMatrix::basis_vector(3, k)).collect();
        let g = generalized_qcp(&depolarizing(3, 1.0).unwrap(), &dec, &basis).unwrap();
        for row in &g.entries {
            for &x in row {
                assert!((x - 1.0 / 3.0).abs() < 1e-12);
            }
        }
        assert!(g.lambda_relation_residual < 1e-9);
    }

    #[test]
    fn non_resolving_output_is_rejected() {
        let rho = random_density(2, 2, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let out = vec![vec![ONE, ZERO], vec![ONE * h, ONE * h]];
        assert!(matches!(
            generalized_qcp(&QuantumChannel::identity(2), &ConvexDecomposition::spectral(&rho), &out),
            Err(Error::OutputNotResolutionOfIdentity { .. })
        ));
    }

    #[test]
    fn lieb_examples() {
        let id = ComplexMatrix::identity(3);
        for p in [0.0, 0.3, 1.0] {
            assert!((lieb_quantity(&id, &id, &id, p).unwrap().value - 3.0).abs() < 1e-12);
        }
        let a = ComplexMatrix::diag(&[0.5, 0.2, 0.3]);
        let b = ComplexMatrix::diag(&[0.1, 0.6, 0.3]);
        let k = ComplexMatrix::diag(&[2.0, -1.0, 0.5]);
        let p = 0.35f64;
        let expect: f64 = [(0.5, 0.1, 2.0), (0.2, 0.6, -1.0), (0.3, 0.3, 0.5)]
            .iter()
            .map(|&(ai, bi, ki): &(f64, f64, f64)| ai.powf(p) * ki * ki * bi.powf(1.0 - p))
            .sum();
        assert!((lieb_quantity(&a, &b, &k, p).unwrap().value - expect).abs() < 1e-12);

        assert!(matches!(lieb_quantity(&a, &b, &k, 1.5), Err(Error::PowerOutOfRange(_))));
        let neg = ComplexMatrix::diag(&[1.0, -0.5, 0.0]);
        assert!(matches!(lieb_quantity(&neg, &b, &k, 0.5), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn kraus_terms_sum_to_the_generalized_entry() {
        let rho = random_density(3, 3, 9).unwrap();
        let e = random_channel(3, 3, 3, 10).unwrap();
        let dec = random_decomposition(&rho, 4, 11).unwrap();
        let basis = rho.spectral().vectors.clone();
        let g = generalized_qcp(&e, &dec, &basis).unwrap();
        for (r, v) in basis.iter().enumerate() {
            for kappa in 0..dec.len() {
                let total: f64 = e
                    .kraus()
                    .iter()
                    .map(|k| {
                        lieb_quantity(&ComplexMatrix::outer(v), &dec.projector(kappa), k, 0.5)
                            .unwrap()
                            .value
                    })
                    .sum();
                assert!((total - g.entries[r][kappa]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lieb_is_nonnegative_and_concave() {
        for seed in 0..500 {
            let mut rng = rng_from_seed(seed);
            let d = 2 + seed as usize % 3;
            let a = random_psd(&mut rng, d, 1 + seed as usize % d);
            let b = random_psd(&mut rng, d, d);
            let k = gaussian_matrix(&mut rng, d, d);
            let v = lieb_quantity(&a, &b, &k, rng.random()).unwrap();
            assert!(v.value >= -1e-10 && v.imaginary_residual <= 1e-10);
        }
        for seed in 0..100 {
            let p = (seed % 11) as f64 / 10.0;
            let r = random_concavity_probe(3, p, 11, seed).unwrap();
            assert!(r.worst_slack >= -1e-8, "seed {seed}: {}", r.worst_slack);
        }
    }

    #[test]
    fn concavity_probe_edge_cases() {
        let mut rng = rng_from_seed(4);
        let a = random_psd(&mut rng, 3, 3);
        let b = random_psd(&mut rng, 3, 2);
        let k = gaussian_matrix(&mut rng, 3, 3);
        let r = concavity_probe(&a, &a, &b, &b, &k, 0.4, 11).unwrap();
        assert!(r.worst_slack.abs() < 1e-12);

        // p = 1 is linear in A and independent of B.
        let a1 = random_psd(&mut rng, 3, 3);
        let r = concavity_probe(&a, &a1, &b, &b, &k, 1.0, 11).unwrap();
        assert!(r.points.iter().all(|pt| pt.slack.abs() < 1e-12));
    }
}
