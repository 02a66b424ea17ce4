//! Randomized verification of every identity and inequality relating the
//! conditional tables and measures.
//!
//! Each trial draws instances from seeds derived from the master seed, the
//! trial index and a per-group salt, so every check is reproducible in
//! isolation with [`reproduce`].

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chain::{build_two_step, dpi_check, holevo_bound_check};
use crate::channels::{
    depolarizing, partial_trace_channel, pinching, random_channel_with, random_unital_channel_with, unitary_channel,
    QuantumChannel,
};
use crate::conditional::{
    born_overlap, conditional_probs, conditional_states, evolved_family_from, max_overlap_pairing,
    paired_delta_deviation,
};
use crate::error::{Error, Result};
use crate::generalized::{
    generalized_against_decomposition, generalized_qcp, lieb_quantity, random_concavity_probe, random_decomposition,
    random_psd, ConvexDecomposition,
};
use crate::linalg::Subsystem;
use crate::measures::{holevo_chi, info_summary, Ensemble};
use crate::random::{derive_seed, gaussian_matrix, random_simplex, random_unitary, rng_from_seed, SeededRng};
use crate::states::{random_density_with, shannon_entropy, von_neumann_entropy, DensityMatrix, LogBase, ProbVector};
use crate::subsystems::{entanglement_bound_check, j_given_parent, reduced_entropy_excess, subsystem_conditional};

/// Families of instances; each draws its own seed per trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Core,
    Unital,
    Concavity,
    Chain,
    Subsystem,
    Generalized,
    Lemma,
}

impl Group {
    pub const ALL: [Group; 7] = [
        Group::Core,
        Group::Unital,
        Group::Concavity,
        Group::Chain,
        Group::Subsystem,
        Group::Generalized,
        Group::Lemma,
    ];

    fn salt(self) -> u64 {
        match self {
            Group::Core => 0x11,
            Group::Unital => 0x22,
            Group::Concavity => 0x33,
            Group::Chain => 0x44,
            Group::Subsystem => 0x55,
            Group::Generalized => 0x66,
            Group::Lemma => 0x77,
        }
    }
}

/// Which tolerance a check is held to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TolKind {
    Identity,
    MutualIdentity,
    Inequality,
    Pinching,
    Born,
    JPositivity,
    IPositivity,
    Lemma,
    Concavity,
    Lieb,
    Reduction,
    Range,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckTolerances {
    pub identity: f64,
    pub mutual_identity: f64,
    pub inequality: f64,
    pub pinching: f64,
    pub born: f64,
    pub j_positivity: f64,
    pub i_positivity: f64,
    pub lemma: f64,
    pub concavity: f64,
    pub lieb: f64,
    pub reduction: f64,
    pub range: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        Self {
            identity: 1e-9,
            mutual_identity: 1e-10,
            inequality: 1e-8,
            pinching: 1e-9,
            born: 1e-9,
            j_positivity: 1e-12,
            i_positivity: 1e-9,
            lemma: 1e-10,
            concavity: 1e-9,
            lieb: 1e-10,
            reduction: 1e-10,
            range: 1e-12,
        }
    }
}

impl CheckTolerances {
    pub fn get(&self, kind: TolKind) -> f64 {
        match kind {
            TolKind::Identity => self.identity,
            TolKind::MutualIdentity => self.mutual_identity,
            TolKind::Inequality => self.inequality,
            TolKind::Pinching => self.pinching,
            TolKind::Born => self.born,
            TolKind::JPositivity => self.j_positivity,
            TolKind::IPositivity => self.i_positivity,
            TolKind::Lemma => self.lemma,
            TolKind::Concavity => self.concavity,
            TolKind::Lieb => self.lieb,
            TolKind::Reduction => self.reduction,
            TolKind::Range => self.range,
        }
    }
}

/// A named relation. Its slack is nonnegative when the relation holds exactly;
/// the check fails when the slack drops below minus its tolerance.
#[derive(Clone, Copy, Debug)]
pub struct CheckDef {
    pub name: &'static str,
    pub anchor: &'static str,
    pub group: Group,
    pub tol: TolKind,
}

const fn check(name: &'static str, anchor: &'static str, group: Group, tol: TolKind) -> CheckDef {
    CheckDef {
        name,
        anchor,
        group,
        tol,
    }
}

pub const CHECKS: &[CheckDef] = &[
    check(
        "total_probability",
        "p_r = sum_q p(r|q) p_q",
        Group::Core,
        TolKind::Identity,
    ),
    check("column_stochastic", "sum_r p(r|q) = 1", Group::Core, TolKind::Identity),
    check(
        "mutual_identity",
        "I(R:Q) = S(rho_R) - J(R|Q)",
        Group::Core,
        TolKind::MutualIdentity,
    ),
    check("j_nonnegative", "J(R|Q) >= 0", Group::Core, TolKind::JPositivity),
    check("i_nonnegative", "I(R:Q) >= 0", Group::Core, TolKind::IPositivity),
    check(
        "mutual_le_initial_entropy",
        "I(R:Q) <= S(rho_Q)",
        Group::Core,
        TolKind::Inequality,
    ),
    check(
        "conditional_le_final_entropy",
        "J(R|Q) <= S(rho_R)",
        Group::Core,
        TolKind::Inequality,
    ),
    check(
        "pinching_entropy",
        "S(rho_{R|q}) >= S(rho_q^R)",
        Group::Core,
        TolKind::Pinching,
    ),
    check(
        "born_doubly_stochastic",
        "beta(r|r_q) doubly stochastic",
        Group::Core,
        TolKind::Born,
    ),
    check(
        "born_decomposition",
        "p(r|q) = sum_{r_q} beta(r|r_q) p(r_q|q)",
        Group::Core,
        TolKind::Born,
    ),
    check(
        "unitary_delta_table",
        "unitary E: p(r|q) = delta under max-overlap pairing",
        Group::Core,
        TolKind::Identity,
    ),
    check(
        "unitary_zero_j",
        "unitary E: J(R|Q) = 0",
        Group::Core,
        TolKind::Identity,
    ),
    check(
        "unitary_full_information",
        "unitary E: I(R:Q) = S(rho_Q)",
        Group::Core,
        TolKind::Identity,
    ),
    check(
        "depolarizing_zero_information",
        "fully depolarizing E: I(R:Q) = 0",
        Group::Core,
        TolKind::Identity,
    ),
    check(
        "unital_doubly_stochastic",
        "unital E: p(r|q) doubly stochastic",
        Group::Unital,
        TolKind::Identity,
    ),
    check(
        "unital_entropy_growth",
        "unital E: S(rho_R) >= S(rho_Q)",
        Group::Unital,
        TolKind::Inequality,
    ),
    check(
        "concavity_ensemble",
        "S(sum_x p_x rho_x) >= sum_x p_x S(rho_x)",
        Group::Concavity,
        TolKind::Concavity,
    ),
    check(
        "concavity_route_pinching",
        "sum_q p_q S(rho_q^R) <= J(R|Q)",
        Group::Concavity,
        TolKind::Concavity,
    ),
    check(
        "concavity_route_conditioning",
        "J(R|Q) <= S(rho_R)",
        Group::Concavity,
        TolKind::Concavity,
    ),
    check(
        "chain_property",
        "p(s|q) = sum_r p(s|r) p(r|q)",
        Group::Chain,
        TolKind::Identity,
    ),
    check(
        "chain_marginals",
        "p_s = sum_r p(s|r) p_r = sum_q p(s|q) p_q",
        Group::Chain,
        TolKind::Identity,
    ),
    check("data_processing", "I(S:Q) <= I(R:Q)", Group::Chain, TolKind::Inequality),
    check(
        "holevo_equality",
        "I(R:Q) = chi({p_q, rho_{R|q}})",
        Group::Chain,
        TolKind::Identity,
    ),
    check(
        "holevo_bound",
        "I(S:Q) <= chi({p_q, rho_{R|q}})",
        Group::Chain,
        TolKind::Inequality,
    ),
    check(
        "subsystem_bound",
        "-S(B|A) <= J(A|AB)",
        Group::Subsystem,
        TolKind::Inequality,
    ),
    check(
        "subsystem_reduced_entropy",
        "S(rho_m^A) <= J(A|m)",
        Group::Subsystem,
        TolKind::Pinching,
    ),
    check(
        "subsystem_average_entropy",
        "sum_m p_m S(rho_m^A) <= J(A|AB)",
        Group::Subsystem,
        TolKind::Pinching,
    ),
    check(
        "subsystem_mixture",
        "sum_m p_m Tr_B[P_m] = rho_A",
        Group::Subsystem,
        TolKind::Identity,
    ),
    check(
        "generalized_reduction",
        "spectral decompositions reproduce p(r|q)",
        Group::Generalized,
        TolKind::Reduction,
    ),
    check(
        "generalized_lambda_relation",
        "Lambda_rho = sum_kappa P(rho|kappa) lambda_kappa",
        Group::Generalized,
        TolKind::Identity,
    ),
    check(
        "generalized_range",
        "0 <= P(rho|kappa) <= 1",
        Group::Generalized,
        TolKind::Range,
    ),
    check(
        "generalized_normalization",
        "sum_rho P(rho|kappa) = 1 for a resolving output basis",
        Group::Generalized,
        TolKind::Identity,
    ),
    check(
        "lieb_nonnegative",
        "Tr[A^p K B^(1-p) K^dagger] >= 0",
        Group::Generalized,
        TolKind::Lieb,
    ),
    check(
        "lieb_concavity",
        "Tr[A^p K B^(1-p) K^dagger] jointly concave",
        Group::Generalized,
        TolKind::Inequality,
    ),
    check(
        "doubly_stochastic_entropy",
        "H(T p) >= H(p) for doubly stochastic T",
        Group::Lemma,
        TolKind::Lemma,
    ),
];

pub fn find_check(name: &str) -> Result<&'static CheckDef> {
    CHECKS
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::UnknownCheck(name.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    RandomCptp,
    UnitalMixture,
    Pinching,
    Unitary,
    Depolarizing,
    PartialTrace,
}

/// Relative frequency of each channel family in the core group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelMix {
    pub random_cptp: f64,
    pub unital_mixture: f64,
    pub pinching: f64,
    pub unitary: f64,
    pub depolarizing: f64,
    pub partial_trace: f64,
}

impl Default for ChannelMix {
    fn default() -> Self {
        Self {
            random_cptp: 1.0,
            unital_mixture: 1.0,
            pinching: 1.0,
            unitary: 1.0,
            depolarizing: 1.0,
            partial_trace: 1.0,
        }
    }
}

impl ChannelMix {
    const KINDS: [ChannelKind; 6] = [
        ChannelKind::RandomCptp,
        ChannelKind::UnitalMixture,
        ChannelKind::Pinching,
        ChannelKind::Unitary,
        ChannelKind::Depolarizing,
        ChannelKind::PartialTrace,
    ];

    /// A mix drawing only `kind`.
    pub fn only(kind: ChannelKind) -> Self {
        let mut w = [0.0; 6];
        w[Self::KINDS.iter().position(|k| *k == kind).unwrap()] = 1.0;
        Self::from_weights(w)
    }

    fn from_weights(w: [f64; 6]) -> Self {
        Self {
            random_cptp: w[0],
            unital_mixture: w[1],
            pinching: w[2],
            unitary: w[3],
            depolarizing: w[4],
            partial_trace: w[5],
        }
    }

    fn weights(&self) -> [f64; 6] {
        [
            self.random_cptp,
            self.unital_mixture,
            self.pinching,
            self.unitary,
            self.depolarizing,
            self.partial_trace,
        ]
    }
}

/// Environment dimension of random Stinespring channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum EnvPolicy {
    /// Same as the input dimension.
    MatchInput,
    Fixed {
        dim: usize,
    },
    /// Uniform in `1..=max`, raised to the minimum the dimensions require.
    Random {
        max: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub master_seed: u64,
    pub n_trials: usize,
    pub dims: Vec<usize>,
    pub env_dims: EnvPolicy,
    pub channel_mix: ChannelMix,
    /// Depolarizing strengths are uniform on this interval.
    pub depolarizing_range: (f64, f64),
    pub tolerances: CheckTolerances,
    pub base: LogBase,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            master_seed: 42,
            n_trials: 1000,
            dims: vec![2, 3, 4, 5, 6],
            env_dims: EnvPolicy::Random { max: 4 },
            channel_mix: ChannelMix::default(),
            depolarizing_range: (0.0, 1.0),
            tolerances: CheckTolerances::default(),
            base: LogBase::Two,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::ParameterOutOfRange {
                name: "n_trials",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        if self.dims.is_empty() {
            return Err(Error::ParameterOutOfRange {
                name: "dims",
                value: 0.0,
                range: "nonempty list",
            });
        }
        if let Some(&d) = self.dims.iter().find(|&&d| !(2..=8).contains(&d)) {
            return Err(Error::ParameterOutOfRange {
                name: "dims",
                value: d as f64,
                range: "[2, 8]",
            });
        }
        let w = self.channel_mix.weights();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidDistribution(
                "channel_mix weights must be nonnegative and not all zero".into(),
            ));
        }
        let (lo, hi) = self.depolarizing_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::ParameterOutOfRange {
                name: "depolarizing_range",
                value: if (0.0..=1.0).contains(&lo) { hi } else { lo },
                range: "0 <= lo <= hi <= 1",
            });
        }
        let tols = &self.tolerances;
        let all = [
            tols.identity,
            tols.mutual_identity,
            tols.inequality,
            tols.pinching,
            tols.born,
            tols.j_positivity,
            tols.i_positivity,
            tols.lemma,
            tols.concavity,
            tols.lieb,
            tols.reduction,
            tols.range,
        ];
        if let Some(&t) = all.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::ParameterOutOfRange {
                name: "tolerances",
                value: t,
                range: "[0, inf)",
            });
        }
        match self.env_dims {
            EnvPolicy::Fixed { dim: 0 } | EnvPolicy::Random { max: 0 } => Err(Error::ParameterOutOfRange {
                name: "env_dims",
                value: 0.0,
                range: "[1, inf)",
            }),
            _ => Ok(()),
        }
    }

    fn env_dim(&self, rng: &mut SeededRng, dim_in: usize, dim_out: usize) -> usize {
        let min = dim_in.div_ceil(dim_out);
        let e = match self.env_dims {
            EnvPolicy::MatchInput => dim_in,
            EnvPolicy::Fixed { dim } => dim,
            EnvPolicy::Random { max } => rng.random_range(1..=max),
        };
        e.max(min)
    }

    fn pick_dim(&self, rng: &mut SeededRng) -> usize {
        self.dims[rng.random_range(0..self.dims.len())]
    }

    fn random_state(&self, rng: &mut SeededRng, d: usize) -> Result<DensityMatrix> {
        let rank = rng.random_range(1..=d);
        random_density_with(rng, d, rank)
    }

    fn random_cptp(&self, rng: &mut SeededRng, d_in: usize, d_out: usize) -> Result<QuantumChannel> {
        let env = self.env_dim(rng, d_in, d_out);
        random_channel_with(rng, d_in, d_out, env)
    }
}

/// Slacks of the checks that applied to one instance, in `CHECKS` order.
pub type Slacks = Vec<(&'static str, f64)>;

struct Outcome {
    slacks: Slacks,
    trace: Value,
}

/// The state and channel of one core-group trial.
#[derive(Clone, Debug)]
pub struct CoreInstance {
    pub kind: ChannelKind,
    pub rho_q: DensityMatrix,
    pub channel: QuantumChannel,
    pub lambda: Option<f64>,
}

pub fn core_instance(cfg: &TrialConfig, seed: u64) -> Result<CoreInstance> {
    let mut rng = rng_from_seed(seed);
    let dist = WeightedIndex::new(cfg.channel_mix.weights())
        .map_err(|e| Error::InvalidDistribution(format!("channel_mix: {e}")))?;
    let kind = ChannelMix::KINDS[dist.sample(&mut rng)];
    let d = cfg.pick_dim(&mut rng);
    let mut lambda = None;
    let (rho_q, channel) = match kind {
        ChannelKind::PartialTrace => {
            let rho = cfg.random_state(&mut rng, 2 * d)?;
            (rho, partial_trace_channel(d, 2, Subsystem::B))
        }
        _ => {
            let rho = cfg.random_state(&mut rng, d)?;
            let channel = match kind {
                ChannelKind::RandomCptp => cfg.random_cptp(&mut rng, d, d)?,
                ChannelKind::UnitalMixture => {
                    let n = rng.random_range(1..=3);
                    random_unital_channel_with(&mut rng, d, n)?
                }
                ChannelKind::Pinching => random_pinching(&mut rng, d)?,
                ChannelKind::Unitary => unitary_channel(&random_unitary(&mut rng, d))?,
                ChannelKind::Depolarizing => {
                    let (lo, hi) = cfg.depolarizing_range;
                    let l = if lo == hi { lo } else { rng.random_range(lo..=hi) };
                    lambda = Some(l);
                    depolarizing(d, l)?
                }
                ChannelKind::PartialTrace => unreachable!(),
            };
            (rho, channel)
        }
    };
    Ok(CoreInstance {
        kind,
        rho_q,
        channel,
        lambda,
    })
}

fn random_pinching(rng: &mut SeededRng, d: usize) -> Result<QuantumChannel> {
    let u = random_unitary(rng, d);
    pinching(&(0..d).map(|j| u.column(j)).collect::<Vec<_>>())
}

fn min_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::INFINITY, f64::min)
}

fn eval_core(cfg: &TrialConfig, seed: u64) -> Result<Outcome> {
    let base = cfg.base;
    let inst = core_instance(cfg, seed)?;
    let probs = conditional_probs(&inst.channel, &inst.rho_q)?;
    let table = &probs.table;
    let summary = info_summary(table, base)?;
    let family = evolved_family_from(&probs)?;
    let basis_r = &probs.final_spectrum().vectors;
    let cond = conditional_states(table, basis_r)?;
    let beta = born_overlap(basis_r, &family);
    let pinch = min_of(
        cond.states
            .iter()
            .zip(&family.states)
            .map(|(c, f)| von_neumann_entropy(c, base) - von_neumann_entropy(f, base)),
    );
    let mut slacks: Slacks = vec![
        ("total_probability", -table.total_probability_residual()),
        ("column_stochastic", -table.column_sum_deviation()),
        ("mutual_identity", -summary.identity_residual()),
        ("j_nonnegative", summary.j),
        ("i_nonnegative", summary.i),
        ("mutual_le_initial_entropy", summary.s_initial - summary.i),
        ("conditional_le_final_entropy", summary.s_final - summary.j),
        ("pinching_entropy", pinch),
        ("born_doubly_stochastic", -beta.doubly_stochastic_deviation()),
        ("born_decomposition", -beta.decomposition_residual(table, &family)),
    ];
    if inst.kind == ChannelKind::Unitary {
        if !table.is_basis_dependent() {
            let pairing = max_overlap_pairing(table);
            slacks.push(("unitary_delta_table", -paired_delta_deviation(table, &pairing)));
        }
        slacks.push(("unitary_zero_j", -summary.j.abs()));
        slacks.push(("unitary_full_information", -(summary.i - summary.s_initial).abs()));
    }
    if inst.lambda == Some(1.0) {
        slacks.push(("depolarizing_zero_information", -summary.i.abs()));
    }
    let trace = json!({
        "kind": inst.kind,
        "lambda": inst.lambda,
        "state": inst.rho_q,
        "channel": inst.channel,
        "table": table,
        "summary": summary,
    });
    Ok(Outcome { slacks, trace })
}

fn eval_unital(cfg: &TrialConfig, seed: u64) -> Result<Outcome> {
    let mut rng = rng_from_seed(seed);
    let d = cfg.pick_dim(&mut rng);
    let rho = cfg.random_state(&mut rng, d)?;
    let use_pinching = rng.random_bool(0.5);
    let channel = if use_pinching {
        random_pinching(&mut rng, d)?
    } else {
        let n = rng.random_range(1..=3);
        random_unital_channel_with(&mut rng, d, n)?
    };
    let probs = conditional_probs(&channel, &rho)?;
    let t = &probs.table;
    let growth = von_neumann_entropy(&probs.final_state, cfg.base) - von_neumann_entropy(&rho, cfg.base);
    let slacks = vec![
        (
            "unital_doubly_stochastic",
            -t.row_sum_deviation().max(t.column_sum_deviation()),
        ),
        ("unital_entropy_growth", growth),
    ];
    let trace = json!({
        "kind": if use_pinching { "pinching" } else { "unital_mixture" },
        "state": rho,
        "channel": channel,
        "table": t,
    });
    Ok(Outcome { slacks, trace })
}

fn eval_concavity(cfg: &TrialConfig, seed: u64) -> Result<Outcome> {
    let base = cfg.base;
    let mut rng = rng_from_seed(seed);
    let d = cfg.pick_dim(&mut rng);
    let count = rng.random_range(1..=2 * d * d);
    let weights = random_simplex(&mut rng, count);
    let states = (0..count)
        .map(|_| cfg.random_state(&mut rng, d))
        .collect::<Result<Vec<_>>>()?;
    let gap = check_concavity(&Ensemble::new(weights.clone(), states)?, base)?;

    let rho = cfg.random_state(&mut rng, d)?;
    let channel = cfg.random_cptp(&mut rng, d, d)?;
    let probs = conditional_probs(&channel, &rho)?;
    let family = evolved_family_from(&probs)?;
    let summary = info_summary(&probs.table, base)?;
    let mean_evolved: f64 = probs
        .table
        .p_from()
        .iter()
        .zip(&family.states)
        .map(|(p, s)| p * von_neumann_entropy(s, base))
        .sum();
    let slacks = vec![
        ("concavity_ensemble", gap),
        ("concavity_route_pinching", summary.j - mean_evolved),
        ("concavity_route_conditioning", summary.s_final - summary.j),
    ];
    let trace = json!({
        "ensemble_size": count,
        "ensemble_weights": weights,
        "state": rho,
        "channel": channel,
        "table": probs.table,
        "summary": summary,
    });
    Ok(Outcome { slacks, trace })
}

fn eval_chain(cfg: &TrialConfig, seed: u64) -> Result<Outcome> {
    let mut rng = rng_from_seed(seed);
    let d = cfg.pick_dim(&mut rng);
    let d_s = cfg.pick_dim(&mut rng);
    let rho = cfg.random_state(&mut rng, d)?;
    let stage1 = cfg.random_cptp(&mut rng, d, d)?;
    let stage2 = cfg.random_cptp(&mut rng, d, d_s)?;
    let process = build_two_step(&rho, &stage1, &stage2)?;
    let dpi = dpi_check(&process, cfg.base)?;
    let hol = holevo_bound_check(&process, cfg.base)?;
    let slacks = vec![
        ("chain_property", -process.chain_residual),
        ("chain_marginals", -process.marginal_residual),
        ("data_processing", dpi.slack),
        ("holevo_equality", -hol.equality_residual),
        ("holevo_bound", hol.bound_slack),
    ];
    let trace = json!({
        "state": rho,
        "stage1": stage1,
        "stage2_raw": stage2,
        "tables": { "rq": process.rq.table, "sr": process.sr.table, "sq": process.sq.table },
        "dpi": dpi,
        "holevo": hol,
        "raw_chain_residual": process.raw_chain_residual,
    });
    Ok(Outcome { slacks, trace })
}

fn eval_subsystem(cfg: &TrialConfig, seed: u64) -> Result<Outcome> {
    let base = cfg.base;
    let mut rng = rng_from_seed(seed);
    let d_a = cfg.pick_dim(&mut rng);
    let d_b = 2;
    let rho = cfg.random_state(&mut rng, d_a * d_b)?;
    let pc = subsystem_conditional(&rho, d_a, d_b, Subsystem::A)?;
    let bound = entanglement_bound_check(&pc, base);
    let j = j_given_parent(&pc, base);
    let mean_reduced: f64 = pc
        .probs
        .table
        .p_from()
        .iter()
        .zip(&pc.reduced_projectors.states)
        .map(|(p, s)| p * von_neumann_entropy(s, base))
        .sum();
    let slacks = vec![
        ("subsystem_bound", bound.slack),
        ("subsystem_reduced_entropy", -reduced_entropy_excess(&pc, base)),
        ("subsystem_average_entropy", j.total - mean_reduced),
        ("subsystem_mixture", -pc.mixture_residual()),
    ];
    let trace = json!({
        "dims": [d_a, d_b],
        "state": rho,
        "table": pc.probs.table,
        "J_per_m": j.per_m,
        "bound": bound,
    });
    Ok(Outcome { slacks, trace })
}

fn eval_generalized(cfg: &TrialConfig, seed: u64) -> Result<Outcome> {
    let mut rng = rng_from_seed(seed);
    let d = cfg.pick_dim(&mut rng);
    let rho = cfg.random_state(&mut rng, d)?;
    let channel = cfg.random_cptp(&mut rng, d, d)?;
    let probs = conditional_probs(&channel, &rho)?;
    let basis_r = &probs.final_spectrum().vectors;

    let reduced = generalized_qcp(&channel, &ConvexDecomposition::spectral(&rho), basis_r)?;
    let mut reduction_gap: f64 = 0.0;
    for (r, row) in reduced.entries.iter().enumerate() {
        for (q, x) in row.iter().enumerate() {
            reduction_gap = reduction_gap.max((x - probs.table.get(r, q)).abs());
        }
    }

    let rank = rho.spectral().rank();
    let members = rng.random_range(rank..=rank + d);
    let dec_q = random_decomposition(&rho, members, rng.random())?;
    let resolving = generalized_qcp(&channel, &dec_q, basis_r)?;
    let out_members = rng.random_range(probs.final_state.spectral().rank()..=d + 2);
    let dec_r = random_decomposition(&probs.final_state, out_members, rng.random())?;
    let nonorthogonal = generalized_against_decomposition(&channel, &dec_q, &dec_r)?;

    let entries = resolving.entries.iter().chain(&nonorthogonal.entries).flatten();
    let range = entries.fold(f64::INFINITY, |m, &x| m.min(x).min(1.0 - x));

    let rank_a = rng.random_range(1..=d);
    let a = random_psd(&mut rng, d, rank_a);
    let rank_b = rng.random_range(1..=d);
    let b = random_psd(&mut rng, d, rank_b);
    let k = gaussian_matrix(&mut rng, d, d);
    let p: f64 = rng.random();
    let lieb = lieb_quantity(&a, &b, &k, p)?;
    let probe = random_concavity_probe(d, rng.random(), 11, rng.random())?;

    let slacks = vec![
        ("generalized_reduction", -reduction_gap),
        (
            "generalized_lambda_relation",
            -resolving
                .lambda_relation_residual
                .max(nonorthogonal.lambda_relation_residual),
        ),
        ("generalized_range", range),
        ("generalized_normalization", -resolving.normalization_deviation),
        ("lieb_nonnegative", lieb.value),
        ("lieb_concavity", probe.worst_slack),
    ];
    let trace = json!({
        "state": rho,
        "channel": channel,
        "resolving": resolving,
        "nonorthogonal": nonorthogonal,
        "lieb": { "p": p, "value": lieb },
        "concavity_probe": probe,
    });
    Ok(Outcome { slacks, trace })
}

fn eval_lemma(cfg: &TrialConfig, seed: u64) -> Result<Outcome> {
    let mut rng = rng_from_seed(seed);
    let n = cfg.pick_dim(&mut rng);
    let p = random_simplex(&mut rng, n);
    let k = rng.random_range(1..=n);
    let t = random_birkhoff(&mut rng, n, k);
    let out = check_doubly_stochastic_entropy(&p, &t, cfg.base)?;
    let trace = json!({ "p": p, "T": t, "result": out });
    Ok(Outcome {
        slacks: vec![("doubly_stochastic_entropy", out.slack)],
        trace,
    })
}

/// Convex combination of `k` uniformly random permutation matrices.
pub fn random_birkhoff<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<Vec<f64>> {
    let weights = random_simplex(rng, k);
    let mut t = vec![vec![0.0; n]; n];
    for w in weights {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        for (i, &j) in perm.iter().enumerate() {
            t[i][j] += w;
        }
    }
    t
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaOutcome {
    pub h_in: f64,
    pub h_out: f64,
    pub slack: f64,
}

/// `H(T p) >= H(p)` for a doubly stochastic `T`.
pub fn check_doubly_stochastic_entropy(p: &[f64], t: &[Vec<f64>], base: LogBase) -> Result<LemmaOutcome> {
    let n = p.len();
    if t.len() != n || t.iter().any(|row| row.len() != n) {
        return Err(Error::ShapeMismatch(format!(
            "{}-entry distribution with a {}-row matrix",
            n,
            t.len()
        )));
    }
    let p = ProbVector::new(p.to_vec(), 1e-9)?;
    let mut dev: f64 = 0.0;
    for i in 0..n {
        dev = dev.max((t[i].iter().sum::<f64>() - 1.0).abs());
        dev = dev.max((t.iter().map(|row| row[i]).sum::<f64>() - 1.0).abs());
    }
    if dev > 1e-9 || t.iter().flatten().any(|&x| x < -1e-12) {
        return Err(Error::NotDoublyStochastic { max_deviation: dev });
    }
    let out: Vec<f64> = t
        .iter()
        .map(|row| row.iter().zip(p.iter()).map(|(a, b)| a * b).sum())
        .collect();
    let h_in = shannon_entropy(&p, base);
    let h_out = shannon_entropy(&out, base);
    Ok(LemmaOutcome {
        h_in,
        h_out,
        slack: h_out - h_in,
    })
}

/// The concavity gap `S(sum p_x rho_x) - sum p_x S(rho_x)`, i.e. Holevo's chi.
pub fn check_concavity(ens: &Ensemble, base: LogBase) -> Result<f64> {
    holevo_chi(ens, base)
}

fn evaluate(group: Group, cfg: &TrialConfig, seed: u64) -> Result<Outcome> {
    match group {
        Group::Core => eval_core(cfg, seed),
        Group::Unital => eval_unital(cfg, seed),
        Group::Concavity => eval_concavity(cfg, seed),
        Group::Chain => eval_chain(cfg, seed),
        Group::Subsystem => eval_subsystem(cfg, seed),
        Group::Generalized => eval_generalized(cfg, seed),
        Group::Lemma => eval_lemma(cfg, seed),
    }
}

pub fn trial_seed(cfg: &TrialConfig, group: Group, trial: usize) -> u64 {
    derive_seed(cfg.master_seed, &[trial as u64, group.salt()])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub anchor: String,
    pub group: Group,
    pub tolerance: f64,
    /// Trials in which the check applied.
    pub trials: usize,
    pub failures: usize,
    /// Trials whose instance could not be built or evaluated.
    pub errors: usize,
    pub worst_slack: Option<f64>,
    pub worst_seed: Option<u64>,
    pub worst_trial: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub checks: Vec<CheckSummary>,
    pub config: TrialConfig,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Runs every group for `cfg.n_trials` trials. Trials run in parallel; the
/// merge walks them in index order, so the report is schedule-independent.
pub fn run_suite(cfg: &TrialConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let mut checks: Vec<CheckSummary> = CHECKS
        .iter()
        .map(|c| CheckSummary {
            name: c.name.to_string(),
            anchor: c.anchor.to_string(),
            group: c.group,
            tolerance: cfg.tolerances.get(c.tol),
            trials: 0,
            failures: 0,
            errors: 0,
            worst_slack: None,
            worst_seed: None,
            worst_trial: None,
            first_error: None,
        })
        .collect();
    for group in Group::ALL {
        let outcomes: Vec<(u64, Result<Slacks>)> = (0..cfg.n_trials)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(cfg, group, t);
                (seed, evaluate(group, cfg, seed).map(|o| o.slacks))
            })
            .collect();
        for (trial, (seed, outcome)) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(slacks) => {
                    for (name, slack) in slacks {
                        let entry = checks.iter_mut().find(|c| c.name == name).expect("registered check");
                        entry.trials += 1;
                        if slack.is_nan() || slack < -entry.tolerance {
                            entry.failures += 1;
                        }
                        let worse = match entry.worst_slack {
                            None => true,
                            Some(w) => !w.is_nan() && (slack.is_nan() || slack < w),
                        };
                        if worse {
                            entry.worst_slack = Some(slack);
                            entry.worst_seed = Some(seed);
                            entry.worst_trial = Some(trial);
                        }
                    }
                }
                Err(e) => {
                    for entry in checks.iter_mut().filter(|c| c.group == group) {
                        entry.errors += 1;
                        entry.failures += 1;
                        if entry.first_error.is_none() {
                            entry.first_error = Some(format!("seed {seed}: {e}"));
                        }
                    }
                }
            }
        }
    }
    let pass = checks.iter().all(|c| c.failures == 0);
    Ok(VerificationReport {
        pass,
        checks,
        config: cfg.clone(),
    })
}

/// One regenerated instance with every intermediate object.
#[derive(Clone, Debug, Serialize)]
pub struct Trace {
    pub check: String,
    pub anchor: String,
    pub group: Group,
    pub seed: u64,
    /// `None` when the check does not apply to this instance.
    pub slack: Option<f64>,
    pub passed: Option<bool>,
    pub slacks: serde_json::Map<String, Value>,
    pub instance: Value,
}

impl Trace {
    /// Whether this trace reproduces the worst slack stored in a report entry.
    pub fn matches(&self, entry: &CheckSummary) -> bool {
        entry.worst_seed == Some(self.seed) && entry.worst_slack.map(f64::to_bits) == self.slack.map(f64::to_bits)
    }
}

/// Regenerates the instance drawn from `seed` for the group owning `check_name`.
pub fn reproduce(cfg: &TrialConfig, check_name: &str, seed: u64) -> Result<Trace> {
    let def = find_check(check_name)?;
    let outcome = evaluate(def.group, cfg, seed)?;
    let slack = outcome.slacks.iter().find(|(n, _)| *n == def.name).map(|(_, s)| *s);
    let tol = cfg.tolerances.get(def.tol);
    Ok(Trace {
        check: def.name.to_string(),
        anchor: def.anchor.to_string(),
        group: def.group,
        seed,
        slack,
        passed: slack.map(|s| s >= -tol),
        slacks: outcome.slacks.iter().map(|(n, s)| (n.to_string(), json!(s))).collect(),
        instance: outcome.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize) -> TrialConfig {
        TrialConfig {
            n_trials: n,
            dims: vec![2, 3, 4],
            ..TrialConfig::default()
        }
    }

    #[test]
    fn default_suite_passes_on_a_short_run() {
        let report = run_suite(&small(40)).unwrap();
        for c in &report.checks {
            assert_eq!(c.failures, 0, "{c:?}");
        }
        assert!(report.pass);
    }

    #[test]
    fn every_check_is_exercised() {
        let report = run_suite(&small(60)).unwrap();
        for c in &report.checks {
            if c.name != "depolarizing_zero_information" {
                assert!(c.trials > 0, "{} never ran", c.name);
            }
        }
    }

    #[test]
    fn suite_is_deterministic() {
        let a = run_suite(&small(15)).unwrap();
        let b = run_suite(&small(15)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn unitary_only_suite() {
        let cfg = TrialConfig {
            channel_mix: ChannelMix::only(ChannelKind::Unitary),
            ..small(30)
        };
        let r = run_suite(&cfg).unwrap();
        assert!(r.pass);
        let j = r.check("unitary_zero_j").unwrap();
        assert_eq!(j.trials, 30);
        assert!(j.worst_slack.unwrap() >= -1e-10);
        assert!(r.check("unitary_delta_table").unwrap().trials > 0);
    }

    #[test]
    fn fully_depolarizing_suite() {
        let cfg = TrialConfig {
            channel_mix: ChannelMix::only(ChannelKind::Depolarizing),
            depolarizing_range: (1.0, 1.0),
            ..small(20)
        };
        let r = run_suite(&cfg).unwrap();
        assert!(r.pass);
        let i = r.check("depolarizing_zero_information").unwrap();
        assert_eq!(i.trials, 20);
        assert!(i.worst_slack.unwrap() >= -1e-12);
    }

    #[test]
    fn reproduce_recovers_the_worst_slack() {
        let cfg = small(10);
        let r = run_suite(&cfg).unwrap();
        for name in [
            "mutual_identity",
            "data_processing",
            "subsystem_bound",
            "doubly_stochastic_entropy",
        ] {
            let entry = r.check(name).unwrap();
            let trace = reproduce(&cfg, name, entry.worst_seed.unwrap()).unwrap();
            assert!(trace.matches(entry), "{name}");
            let other = reproduce(&cfg, name, entry.worst_seed.unwrap() ^ 1).unwrap();
            assert!(!other.matches(entry));
        }
        assert!(matches!(reproduce(&cfg, "nope", 1), Err(Error::UnknownCheck(_))));
    }

    #[test]
    fn config_validation() {
        let bad = [
            TrialConfig {
                n_trials: 0,
                ..small(1)
            },
            TrialConfig {
                dims: vec![],
                ..small(1)
            },
            TrialConfig {
                dims: vec![9],
                ..small(1)
            },
            TrialConfig {
                depolarizing_range: (0.5, 0.2),
                ..small(1)
            },
            TrialConfig {
                channel_mix: ChannelMix::from_weights([0.0; 6]),
                ..small(1)
            },
            TrialConfig {
                tolerances: CheckTolerances {
                    lieb: -1.0,
                    ..CheckTolerances::default()
                },
                ..small(1)
            },
        ];
        for cfg in bad {
            assert!(run_suite(&cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn lemma_examples() {
        let p = [0.5, 0.3, 0.2];
        let id = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let r = check_doubly_stochastic_entropy(&p, &id, LogBase::Two).unwrap();
        assert!(r.slack.abs() < 1e-15);
        let uniform = vec![vec![1.0 / 3.0; 3]; 3];
        let r = check_doubly_stochastic_entropy(&p, &uniform, LogBase::Two).unwrap();
        assert!((r.h_out - 3f64.log2()).abs() < 1e-12);
        let bad = vec![vec![0.5, 0.5, 0.0], vec![0.5, 0.5, 0.0], vec![0.5, 0.0, 0.5]];
        assert!(matches!(
            check_doubly_stochastic_entropy(&p, &bad, LogBase::Two),
            Err(Error::NotDoublyStochastic { .. })
        ));
        for seed in 0..500 {
            let mut rng = rng_from_seed(seed);
            let n = 2 + seed as usize % 6;
            let p = random_simplex(&mut rng, n);
            let t = random_birkhoff(&mut rng, n, 1 + seed as usize % 4);
            assert!(check_doubly_stochastic_entropy(&p, &t, LogBase::Two).unwrap().slack >= -1e-10);
        }
    }

    #[test]
    fn concavity_examples() {
        let rho = DensityMatrix::maximally_mixed(3);
        let same = Ensemble::new(vec![0.5, 0.5], vec![rho.clone(), rho]).unwrap();
        assert!(check_concavity(&same, LogBase::Two).unwrap().abs() < 1e-12);
        for seed in 0..500 {
            let mut rng = rng_from_seed(seed);
            let d = 2 + seed as usize % 3;
            let count = 1 + rng.random_range(0..2 * d * d);
            let w = random_simplex(&mut rng, count);
            let states = (0..count)
                .map(|_| {
                    let rank = rng.random_range(1..=d);
                    random_density_with(&mut rng, d, rank).unwrap()
                })
                .collect();
            assert!(check_concavity(&Ensemble::new(w, states).unwrap(), LogBase::Two).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn config_json_roundtrip() {
        let cfg = TrialConfig::default();
        let s = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<TrialConfig>(&s).unwrap(), cfg);
        let partial: TrialConfig = serde_json::from_str(r#"{"n_trials": 5}"#).unwrap();
        assert_eq!(partial.n_trials, 5);
        assert_eq!(partial.dims, vec![2, 3, 4, 5, 6]);
        assert!(serde_json::from_str::<TrialConfig>(r#"{"trials": 5}"#).is_err());
    }
}
