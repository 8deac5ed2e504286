//! Sample-and-round solver for partition constraints
//! `B = {S : |S ∩ M_i| = b_i for all i}`.
//!
//! Quotas are first reduced to one element per block by repeating part
//! `M_i` exactly `b_i` times. A point `x` of `Δ_{p_1} x ... x Δ_{p_r}`
//! then defines the `d x r` matrix `W(x)` whose column `i` is the convex
//! combination `Σ_j x^i_j v^{(i,j)}` of the columns of `V` in block `i`, and
//! the relaxation is the Gram volume `f_V(x) = det(W(x)^T W(x))^{1/2}`.
//! Uniform samples of `f_V` are rounded block by block to a vertex without
//! decreasing the volume; vertices correspond to candidate sets.

use std::collections::HashSet;
use std::f64::consts::E;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::KernelInstance;
use crate::numkernel::{gram_volume_logmag, LogMagnitude, RealMatrix};
use crate::report::{ProblemKind, SolveReport, SolveWarning};
use crate::rng::SeedStream;
use crate::scalar::Scalar;
use crate::simplex::{basis_vector, sample_uniform, ProductSimplexPoint, ProductSimplexShape, ProductSimplexVertex};

/// Relative slack allowed on the monotonicity checks of the rounding chain.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionInstance<T> {
    kernel: KernelInstance<T>,
    parts: Vec<Vec<usize>>,
    quotas: Vec<usize>,
}

impl<T: Scalar> PartitionInstance<T> {
    /// Validates that the parts are nonempty, disjoint and cover `0..m`,
    /// that `b_i <= |M_i|`, and that `1 <= r = Σ b_i <= d`.
    pub fn new(kernel: KernelInstance<T>, parts: Vec<Vec<usize>>, quotas: Vec<usize>) -> Result<Self> {
        let m = kernel.ground_size();
        if parts.len() != quotas.len() {
            return Err(Error::InvalidInstance(format!(
                "{} parts but {} quotas",
                parts.len(),
                quotas.len()
            )));
        }
        let mut seen = vec![false; m];
        for (i, part) in parts.iter().enumerate() {
            if part.is_empty() {
                return Err(Error::InvalidInstance(format!("part {i} is empty")));
            }
            for &e in part {
                if e >= m {
                    return Err(Error::InvalidInstance(format!(
                        "part {i} contains index {e} outside ground set of size {m}"
                    )));
                }
                if seen[e] {
                    return Err(Error::InvalidInstance(format!(
                        "index {e} appears in more than one part"
                    )));
                }
                seen[e] = true;
            }
            if quotas[i] > part.len() {
                return Err(Error::InvalidInstance(format!(
                    "quota {} exceeds size {} of part {i}",
                    quotas[i],
                    part.len()
                )));
            }
        }
        if let Some(e) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidInstance(format!("index {e} is in no part")));
        }
        let r: usize = quotas.iter().sum();
        if r == 0 {
            return Err(Error::InvalidInstance("all quotas are zero".into()));
        }
        if r > kernel.dim() {
            return Err(Error::InvalidInstance(format!(
                "rank r = {r} exceeds factor dimension d = {}; every feasible set has determinant 0",
                kernel.dim()
            )));
        }
        Ok(Self { kernel, parts, quotas })
    }

    pub fn kernel(&self) -> &KernelInstance<T> {
        &self.kernel
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    pub fn quotas(&self) -> &[usize] {
        &self.quotas
    }

    /// `r = Σ b_i`.
    pub fn rank(&self) -> usize {
        self.quotas.iter().sum()
    }

    /// `ln[(2e)^{-2r} ∏ (1/p_i)^{b_i}]`.
    pub fn certified_factor_log(&self) -> f64 {
        let r = self.rank() as f64;
        let parts: f64 = self
            .parts
            .iter()
            .zip(&self.quotas)
            .map(|(p, &b)| b as f64 * (p.len() as f64).ln())
            .sum();
        -2.0 * r * (2.0 * E).ln() - parts
    }

    /// Whether `set` takes exactly `b_i` elements from every part.
    pub fn is_feasible(&self, set: &[usize]) -> bool {
        let unique: HashSet<usize> = set.iter().copied().collect();
        if unique.len() != set.len() {
            return false;
        }
        self.parts
            .iter()
            .zip(&self.quotas)
            .all(|(part, &b)| part.iter().filter(|e| unique.contains(e)).count() == b)
    }
}

/// Instance with one element to choose per block; block `i` came from part
/// `origin[i]` of the original instance.
#[derive(Clone, Debug)]
pub struct UnitQuotaInstance<T> {
    kernel: KernelInstance<T>,
    blocks: Vec<Vec<usize>>,
    origin: Vec<usize>,
    shape: ProductSimplexShape,
    columns: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> UnitQuotaInstance<T> {
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    pub fn shape(&self) -> &ProductSimplexShape {
        &self.shape
    }

    pub fn kernel(&self) -> &KernelInstance<T> {
        &self.kernel
    }

    /// Ground-set elements chosen by a vertex, one per block.
    pub fn lift(&self, vertex: &ProductSimplexVertex) -> Vec<usize> {
        vertex
            .choices
            .iter()
            .zip(&self.blocks)
            .map(|(&j, block)| block[j])
            .collect()
    }

    /// `ϑ_i(y) = Σ_j y_j v^{(i,j)}`.
    pub fn block_combination(&self, block: usize, weights: &[T]) -> Vec<T> {
        let d = self.kernel.dim();
        let mut out = vec![T::zero(); d];
        for (w, col) in weights.iter().zip(&self.columns[block]) {
            if *w == T::zero() {
                continue;
            }
            for (o, &c) in out.iter_mut().zip(col) {
                *o = *o + *w * c;
            }
        }
        out
    }

    fn assemble(&self, x: &ProductSimplexPoint<T>) -> RealMatrix<T> {
        let cols: Vec<Vec<T>> = x
            .blocks
            .iter()
            .enumerate()
            .map(|(i, w)| self.block_combination(i, w))
            .collect();
        RealMatrix::from_columns(&cols).expect("block combinations share dimension d")
    }
}

/// Repeats part `M_i` exactly `b_i` times; parts with `b_i = 0` vanish.
pub fn reduce_to_unit_quotas<T: Scalar>(inst: &PartitionInstance<T>) -> UnitQuotaInstance<T> {
    let mut blocks = Vec::with_capacity(inst.rank());
    let mut origin = Vec::with_capacity(inst.rank());
    for (i, (part, &b)) in inst.parts.iter().zip(&inst.quotas).enumerate() {
        for _ in 0..b {
            blocks.push(part.clone());
            origin.push(i);
        }
    }
    let shape = ProductSimplexShape::new(blocks.iter().map(Vec::len).collect())
        .expect("validated instance has r >= 1 nonempty blocks");
    let columns = blocks
        .iter()
        .map(|block| block.iter().map(|&e| inst.kernel.column(e)).collect())
        .collect();
    UnitQuotaInstance {
        kernel: inst.kernel.clone(),
        blocks,
        origin,
        shape,
        columns,
    }
}

fn check_block_sizes<T>(inst: &UnitQuotaInstance<T>, x: &ProductSimplexPoint<T>) -> Result<()> {
    if x.blocks.len() != inst.blocks.len() {
        return Err(Error::Dimension(format!(
            "point has {} blocks, instance has {}",
            x.blocks.len(),
            inst.blocks.len()
        )));
    }
    for (i, (xb, b)) in x.blocks.iter().zip(&inst.blocks).enumerate() {
        if xb.len() != b.len() {
            return Err(Error::Dimension(format!(
                "block {i} has {} weights for {} elements",
                xb.len(),
                b.len()
            )));
        }
    }
    Ok(())
}

/// `f_V(x)`: Gram volume of `W(x)`, as a log-magnitude.
pub fn eval_fv<T: Scalar>(inst: &UnitQuotaInstance<T>, x: &ProductSimplexPoint<T>) -> Result<LogMagnitude<T>> {
    check_block_sizes(inst, x)?;
    gram_volume_logmag(&inst.assemble(x))
}

#[derive(Clone, Debug)]
pub struct VertexRounding<T> {
    pub vertex: ProductSimplexVertex,
    /// `f_V` before any block is rounded, then after each block.
    pub chain: Vec<LogMagnitude<T>>,
    pub evaluations: usize,
}

pub(crate) fn not_below<T: Scalar>(after: &LogMagnitude<T>, before: &LogMagnitude<T>) -> bool {
    before.is_zero() || (!after.is_zero() && after.log_abs >= before.log_abs + T::of((1.0 - MONOTONE_SLACK).ln()))
}

/// Rounds blocks in ascending order: block `i` is replaced by the vertex
/// of `Δ_{p_i}` maximizing `f_V` with every other block at its current
/// value. Ties go to the lowest index. Uses `Σ p_i` evaluations.
pub fn round_to_vertex<T: Scalar>(
    inst: &UnitQuotaInstance<T>,
    x: &ProductSimplexPoint<T>,
) -> Result<VertexRounding<T>> {
    check_block_sizes(inst, x)?;
    let mut current = x.clone();
    let mut value = eval_fv(inst, &current)?;
    let mut chain = Vec::with_capacity(inst.blocks.len() + 1);
    chain.push(value);
    let mut choices = Vec::with_capacity(inst.blocks.len());
    let mut evaluations = 0;
    for i in 0..inst.blocks.len() {
        let p = inst.blocks[i].len();
        let mut best: Option<(usize, LogMagnitude<T>)> = None;
        for j in 0..p {
            current.blocks[i] = basis_vector(p, j);
            let v = gram_volume_logmag(&inst.assemble(&current))?;
            evaluations += 1;
            if best.is_none_or(|(_, b)| v.cmp_abs(&b).is_gt()) {
                best = Some((j, v));
            }
        }
        let (j, v) = best.expect("blocks are nonempty");
        current.blocks[i] = basis_vector(p, j);
        if !not_below(&v, &value) {
            return Err(Error::Invariant(format!(
                "rounding block {i} decreased log f_V from {} to {}",
                value.log_abs, v.log_abs
            )));
        }
        value = v;
        chain.push(v);
        choices.push(j);
    }
    Ok(VertexRounding {
        vertex: ProductSimplexVertex { choices },
        chain,
        evaluations,
    })
}

/// `⌈e² ln(max(r, 2)) ln(1/δ)⌉`, at least 1: enough independent trials
/// that `(1 - q)^trials <= δ` for a per-trial success rate
/// `q >= 1 / (e² ln r)`.
pub fn trials_for_confidence(r: usize, delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Precondition(format!(
            "confidence parameter {delta} not in (0, 1)"
        )));
    }
    let count = (E * E * (r.max(2) as f64).ln() * (1.0 / delta).ln()).ceil();
    Ok((count as usize).max(1))
}

#[derive(Clone, Debug)]
struct TrialOutcome<T> {
    set: Vec<usize>,
    value: LogMagnitude<T>,
}

fn partition_trial<T: Scalar>(unit: &UnitQuotaInstance<T>, stream: &SeedStream, k: usize) -> Result<TrialOutcome<T>> {
    let mut rng = stream.fork(k as u64);
    let x = sample_uniform(unit.shape(), &mut rng);
    let rounding = round_to_vertex(unit, &x)?;
    let mut set = unit.lift(&rounding.vertex);
    set.sort_unstable();
    let duplicate = set.windows(2).any(|w| w[0] == w[1]);
    let value = if duplicate {
        LogMagnitude::zero()
    } else {
        unit.kernel.log_det_principal(&set)?
    };
    Ok(TrialOutcome { set, value })
}

/// Best of `trials` independent sample-and-round attempts.
///
/// Trials run on the ambient rayon pool; trial `k` draws from
/// `stream.fork(k)`, and the best value wins with ties going to the
/// lowest trial index, so the report does not depend on thread count.
pub fn solve_partition<T: Scalar>(
    inst: &PartitionInstance<T>,
    trials: usize,
    stream: SeedStream,
) -> Result<SolveReport> {
    if trials == 0 {
        return Err(Error::Precondition("at least one trial is required".into()));
    }
    let unit = reduce_to_unit_quotas(inst);
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|k| partition_trial(&unit, &stream, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(
        ProblemKind::Partition,
        outcomes,
        inst.certified_factor_log(),
        stream,
        Vec::new(),
    ))
}

fn summarize<T: Scalar>(
    kind: ProblemKind,
    outcomes: Vec<TrialOutcome<T>>,
    certified_factor_log: f64,
    stream: SeedStream,
    mut warnings: Vec<SolveWarning>,
) -> SolveReport {
    let mut best = 0;
    for (k, o) in outcomes.iter().enumerate() {
        if o.value.cmp_abs(&outcomes[best].value).is_gt() {
            best = k;
        }
    }
    let winner = &outcomes[best];
    let nonzero_trials = outcomes.iter().filter(|o| !o.value.is_zero()).count();
    if nonzero_trials == 0 {
        warnings.insert(0, SolveWarning::AllTrialsDegenerate);
    }
    SolveReport {
        kind,
        chosen_set: winner.set.clone(),
        objective_det: winner.value.value().to_f64_lossy(),
        objective_log: (!winner.value.is_zero()).then(|| winner.value.log_abs.to_f64_lossy()),
        certified_factor_log,
        trials: outcomes.len(),
        seed: stream.seed(),
        best_trial: best,
        nonzero_trials,
        per_trial_values: outcomes.iter().map(|o| o.value.value().to_f64_lossy()).collect(),
        warnings,
    }
}

pub(crate) fn summarize_regular<T: Scalar>(
    sets: Vec<(Vec<usize>, LogMagnitude<T>)>,
    certified_factor_log: f64,
    stream: SeedStream,
    warnings: Vec<SolveWarning>,
) -> SolveReport {
    let outcomes = sets
        .into_iter()
        .map(|(set, value)| TrialOutcome { set, value })
        .collect();
    summarize(ProblemKind::Regular, outcomes, certified_factor_log, stream, warnings)
}
