//! Density matrices, their complete spectral decompositions, and entropies.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian_with, group_close, ComplexMatrix, Tolerances, C64};
use crate::random::{gaussian_matrix, rng_from_seed};

/// Logarithm base for every entropy-like quantity.
///
/// Serialized as the number `2` or the string `"e"`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogBase {
    /// Bits.
    #[default]
    Two,
    /// Nats.
    E,
}

impl Serialize for LogBase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LogBase::Two => s.serialize_u8(2),
            LogBase::E => s.serialize_str("e"),
        }
    }
}

impl<'de> Deserialize<'de> for LogBase {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(2.0) => Ok(LogBase::Two),
            Raw::Num(x) => Err(serde::de::Error::custom(format!("unsupported log base {x}"))),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::E => x.ln(),
        }
    }

    /// `log(d)` in this base; the entropy of the uniform distribution on `d`.
    pub fn max_entropy(self, d: usize) -> f64 {
        self.log(d as f64)
    }

    pub fn label(self) -> &'static str {
        match self {
            LogBase::Two => "2",
            LogBase::E => "e",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "2" | "bits" => Ok(LogBase::Two),
            "e" | "nats" => Ok(LogBase::E),
            other => Err(format!("unknown log base {other:?} (expected 2 or e)")),
        }
    }
}

/// A validated probability distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Accepts entries `>= -tol` summing to one within `tol`; tiny negatives
    /// are clipped to zero.
    pub fn new(entries: Vec<f64>, tol: f64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(&bad) = entries.iter().find(|x| !x.is_finite() || **x < -tol) {
            return Err(Error::InvalidDistribution(format!("entry {bad}")));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(Self(entries.into_iter().map(|x| x.max(0.0)).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ProbVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `-sum p log p` with `0 log 0 = 0`.
pub fn shannon_entropy(p: &[f64], base: LogBase) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * base.log(x)).sum::<f64>()
}

/// Eigenvalues and rank-one eigenprojectors of a density matrix.
///
/// Ordered by decreasing probability; eigenvectors with probability zero are
/// kept, so the projectors always resolve the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    pub probabilities: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    pub degeneracy_groups: Vec<Vec<usize>>,
}

impl SpectralDecomposition {
    pub fn dimension(&self) -> usize {
        self.probabilities.len()
    }

    pub fn projector(&self, i: usize) -> ComplexMatrix {
        ComplexMatrix::outer(&self.vectors[i])
    }

    pub fn projectors(&self) -> Vec<ComplexMatrix> {
        (0..self.dimension()).map(|i| self.projector(i)).collect()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.dimension();
        let mut out = ComplexMatrix::zeros(d, d);
        for (p, v) in self.probabilities.iter().zip(&self.vectors) {
            if *p > 0.0 {
                out = &out + &ComplexMatrix::outer(v).scale_real(*p);
            }
        }
        out
    }

    /// True when some eigenvalue is shared, i.e. the eigenbasis is not unique.
    pub fn is_degenerate(&self) -> bool {
        self.degeneracy_groups.iter().any(|g| g.len() > 1)
    }

    pub fn rank(&self) -> usize {
        self.probabilities.iter().filter(|&&p| p > 0.0).count()
    }
}

/// Adjustments applied while validating a density matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Corrections {
    pub hermitian_deviation: f64,
    pub trace_before: f64,
    pub min_eigenvalue: f64,
    pub clipped_eigenvalues: usize,
}

/// Hermitian, positive semi-definite, unit-trace matrix together with its
/// spectral decomposition.
///
/// Serializes as its matrix; decoding re-runs validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityRepr", into = "DensityRepr")]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    spectrum: SpectralDecomposition,
    corrections: Corrections,
}

impl DensityMatrix {
    pub fn dimension(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn corrections(&self) -> &Corrections {
        &self.corrections
    }

    /// `|psi><psi|` for a (not necessarily normalized) nonzero vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        density_from_matrix(&ComplexMatrix::outer(psi), Tolerances::default().hermiticity)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        density_from_matrix(&ComplexMatrix::identity(d), 0.0).expect("identity is a valid state")
    }

    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        density_from_matrix(&ComplexMatrix::diag(probabilities), 0.0)
    }

    /// Builds `sum_i p_i |v_i><v_i|` from a known orthonormal eigenbasis,
    /// skipping the eigensolver.
    pub fn from_spectrum(probabilities: &[f64], vectors: &[Vec<C64>]) -> Result<Self> {
        let tols = Tolerances::default();
        let d = vectors.len();
        if probabilities.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for {d} eigenvectors",
                probabilities.len()
            )));
        }
        let deviation = crate::channels::resolution_deviation(vectors, d);
        if deviation > tols.orthonormality {
            return Err(Error::NotAResolutionOfIdentity {
                max_deviation: deviation,
            });
        }
        let p = ProbVector::new(probabilities.to_vec(), 1e-9)?;
        let total: f64 = p.iter().sum();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| p[j].total_cmp(&p[i]).then(i.cmp(&j)));
        let probabilities: Vec<f64> = order.iter().map(|&i| p[i] / total).collect();
        let vectors: Vec<Vec<C64>> = order.iter().map(|&i| vectors[i].clone()).collect();
        let degeneracy_groups = group_close(&probabilities.iter().map(|p| -p).collect::<Vec<_>>(), tols.degeneracy);
        let spectrum = SpectralDecomposition {
            probabilities,
            vectors,
            degeneracy_groups,
        };
        Ok(Self {
            matrix: spectrum.reconstruct(),
            spectrum,
            corrections: Corrections {
                trace_before: total,
                ..Corrections::default()
            },
        })
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.spectrum.probabilities[0] - 1.0).abs() <= tol
    }
}

/// Validates `m` as a density matrix, hermitizing, renormalizing the trace and
/// clipping eigenvalues in `[-eigclip, 0)` to zero.
/// Wire form: `{"dim":d,"matrix":<ComplexMatrix>}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DensityRepr {
    dim: usize,
    matrix: ComplexMatrix,
}

impl From<DensityMatrix> for DensityRepr {
    fn from(rho: DensityMatrix) -> Self {
        Self {
            dim: rho.dimension(),
            matrix: rho.matrix,
        }
    }
}

impl TryFrom<DensityRepr> for DensityMatrix {
    type Error = Error;

    fn try_from(r: DensityRepr) -> Result<Self> {
        if r.matrix.rows() != r.dim {
            return Err(Error::ShapeMismatch(format!(
                "declared dim {} but the matrix is {}x{}",
                r.dim,
                r.matrix.rows(),
                r.matrix.cols()
            )));
        }
        density_from_matrix(&r.matrix, Tolerances::default().hermiticity)
    }
}

pub fn density_from_matrix(m: &ComplexMatrix, tol: f64) -> Result<DensityMatrix> {
    density_from_matrix_with(
        m,
        &Tolerances {
            hermiticity: tol,
            ..Tolerances::default()
        },
    )
}

pub fn density_from_matrix_with(m: &ComplexMatrix, tols: &Tolerances) -> Result<DensityMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "density matrix must be square, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let hermitian_deviation = m.hermitian_deviation();
    if hermitian_deviation > tols.hermiticity {
        return Err(Error::NotHermitian {
            deviation: hermitian_deviation,
            tol: tols.hermiticity,
        });
    }
    let h = m.hermitian_part();
    let trace = h.trace().re;
    let eig = eig_hermitian_with(
        &h,
        &Tolerances {
            hermiticity: f64::INFINITY,
            ..*tols
        },
    )?;
    let max_abs_eig = eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if max_abs_eig == 0.0 {
        return Err(Error::ZeroTrace);
    }
    if trace <= 0.0 {
        return Err(Error::NotPositive {
            min_eigenvalue: eig.eigenvalues[0],
        });
    }
    let min_eigenvalue = eig.eigenvalues[0] / trace;
    if min_eigenvalue < -tols.eigclip {
        return Err(Error::NotPositive { min_eigenvalue });
    }

    let d = h.rows();
    let mut clipped_eigenvalues = 0;
    let mut raw: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&x| {
            let p = x / trace;
            if p < 0.0 {
                clipped_eigenvalues += 1;
                0.0
            } else {
                p
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter_mut().for_each(|p| *p /= total);

    // Descending order, keeping the solver's index order inside each group.
    let ascending_groups = group_close(&eig.eigenvalues, tols.degeneracy * trace);
    let mut order = Vec::with_capacity(d);
    for g in ascending_groups.iter().rev() {
        order.extend(g.iter().copied());
    }
    let probabilities: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
    let vectors: Vec<Vec<C64>> = order.iter().map(|&i| eig.vector(i)).collect();
    let degeneracy_groups = group_close(&probabilities.iter().map(|p| -p).collect::<Vec<_>>(), tols.degeneracy);

    Ok(DensityMatrix {
        matrix: h.scale_real(1.0 / trace),
        spectrum: SpectralDecomposition {
            probabilities,
            vectors,
            degeneracy_groups,
        },
        corrections: Corrections {
            hermitian_deviation,
            trace_before: trace,
            min_eigenvalue,
            clipped_eigenvalues,
        },
    })
}

/// Complete spectral decomposition of a valid state.
pub fn spectral(rho: &DensityMatrix) -> &SpectralDecomposition {
    rho.spectral()
}

pub fn von_neumann_entropy(rho: &DensityMatrix, base: LogBase) -> f64 {
    shannon_entropy(&rho.spectrum.probabilities, base)
}

/// Hilbert-Schmidt-type random state `G G^dagger / Tr(G G^dagger)` with `G` a
/// `d x rank` complex Gaussian matrix drawn from `seed`.
pub fn random_density(d: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    random_density_with(&mut rng_from_seed(seed), d, rank)
}

pub fn random_density_with<R: rand::Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> Result<DensityMatrix> {
    if d == 0 || rank == 0 || rank > d {
        return Err(Error::ParameterOutOfRange {
            name: "rank",
            value: rank as f64,
            range: "[1, d]",
        });
    }
    let g = gaussian_matrix(rng, d, rank);
    density_from_matrix(&g.matmul(&g.adjoint()), Tolerances::default().hermiticity)
}
