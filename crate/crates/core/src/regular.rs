//! Sample-and-round solver for bases of a regular matroid represented by
//! a totally unimodular `d x m` matrix `B`.
//!
//! The relaxation is the multilinear polynomial `h(x) = det(V X B^T)` with
//! `X = Diag(x)`, `x ∈ [0,1]^m`. A uniform sample is rounded one coordinate
//! at a time (each restriction of `h` is affine, so one endpoint is never
//! worse), and the resulting support `S_0` is shrunk to `d` elements with
//! `g(S) = h(1_S)`. By the Cauchy-Binet formula
//! `Σ_{i∈S} g(S∖{i}) = (|S| - d) g(S)`, so some removal keeps at least the
//! fraction `(|S| - d)/|S|` of `|g(S)|`.
//!
//! The hypercube sampling step also admits a degree-`d` anti-concentration
//! analysis with an unspecified absolute constant; it changes the bound but
//! not the procedure, so only the explicit factor
//! `((2e)^{-2m} / C(m, d))^2` is reported.

use std::f64::consts::E;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::combinatorics::{binomial, combinations, ln_binomial};
use crate::error::{Error, Result};
use crate::kernel::KernelInstance;
use crate::numkernel::{det_logmag, gram_volume_logmag, LogMagnitude, RealMatrix};
use crate::partition::{not_below, summarize_regular, MONOTONE_SLACK};
use crate::report::{SolveReport, SolveWarning};
use crate::rng::SeedStream;
use crate::scalar::Scalar;

/// Number of random `d`-subsets whose minors are spot-checked for total
/// unimodularity during validation (all of them when fewer exist).
pub const TU_SPOT_CHECKS: usize = 10_000;

/// Tolerance on `|det(B_S)| ∈ {0, 1}`.
pub const BASIS_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct RegularInstance<T> {
    kernel: KernelInstance<T>,
    representation: RealMatrix<T>,
}

impl<T: Scalar> RegularInstance<T> {
    /// Checks shapes, entries in `{-1, 0, 1}`, full row rank, and
    /// spot-checks `|det(B_T)| ∈ {0, 1}` on up to [`TU_SPOT_CHECKS`]
    /// `d`-subsets. Total unimodularity itself is trusted.
    pub fn new(kernel: KernelInstance<T>, representation: RealMatrix<T>) -> Result<Self> {
        let (d, m) = (representation.rows(), representation.cols());
        if d == 0 {
            return Err(Error::InvalidInstance("representation has no rows".into()));
        }
        if kernel.dim() != d || kernel.ground_size() != m {
            return Err(Error::InvalidInstance(format!(
                "factor V is {}x{} but representation B is {d}x{m}",
                kernel.dim(),
                kernel.ground_size()
            )));
        }
        for i in 0..d {
            for j in 0..m {
                let b = representation[(i, j)];
                if b != T::zero() && b != T::one() && b != -T::one() {
                    return Err(Error::InvalidInstance(format!(
                        "representation entry ({i}, {j}) = {b} not in {{-1, 0, 1}}"
                    )));
                }
            }
        }
        if m < d || gram_volume_logmag(&representation.transpose())?.is_zero() {
            return Err(Error::InvalidInstance(
                "representation does not have full row rank".into(),
            ));
        }
        let inst = Self { kernel, representation };
        inst.spot_check_unimodular()?;
        Ok(inst)
    }

    fn spot_check_unimodular(&self) -> Result<()> {
        let (d, m) = (self.dim(), self.ground_size());
        let check = |set: &[usize]| -> Result<()> {
            let minor = det_logmag(&self.representation.select_columns(set))?;
            if !minor.is_zero() && !is_unit(&minor) {
                return Err(Error::InvalidInstance(format!(
                    "representation is not totally unimodular: |det(B_T)| = {} for T = {set:?}",
                    minor.abs().value()
                )));
            }
            Ok(())
        };
        if binomial(m, d) <= TU_SPOT_CHECKS as u128 {
            for set in combinations(m, d) {
                check(&set)?;
            }
        } else {
            let mut rng = SeedStream::new(0).fork(0);
            for _ in 0..TU_SPOT_CHECKS {
                let mut set = sample(&mut rng, m, d).into_vec();
                set.sort_unstable();
                check(&set)?;
            }
        }
        Ok(())
    }

    pub fn kernel(&self) -> &KernelInstance<T> {
        &self.kernel
    }

    pub fn representation(&self) -> &RealMatrix<T> {
        &self.representation
    }

    pub fn ground_size(&self) -> usize {
        self.representation.cols()
    }

    pub fn dim(&self) -> usize {
        self.representation.rows()
    }

    /// `ln[((2e)^{-2m} / C(m, d))^2]`.
    pub fn certified_factor_log(&self) -> f64 {
        let m = self.ground_size();
        2.0 * (-2.0 * m as f64 * (2.0 * E).ln() - ln_binomial(m, self.dim()))
    }

    /// `g(S) = det(Σ_{i∈S} V_i B_i^T)`.
    pub fn g(&self, set: &[usize]) -> Result<LogMagnitude<T>> {
        let d = self.dim();
        let v = self.kernel.factor();
        let b = &self.representation;
        let mut acc = RealMatrix::zeros(d, d);
        for &i in set {
            for r in 0..d {
                let vr = v[(r, i)];
                if vr == T::zero() {
                    continue;
                }
                for c in 0..d {
                    acc[(r, c)] = acc[(r, c)] + vr * b[(c, i)];
                }
            }
        }
        det_logmag(&acc)
    }

    /// `det(V_S)` and `det(B_S)` for a `d`-subset.
    pub fn minors(&self, set: &[usize]) -> Result<(LogMagnitude<T>, LogMagnitude<T>)> {
        Ok((
            det_logmag(&self.kernel.factor().select_columns(set))?,
            det_logmag(&self.representation.select_columns(set))?,
        ))
    }
}

fn is_unit<T: Scalar>(x: &LogMagnitude<T>) -> bool {
    !x.is_zero() && (x.log_abs.exp() - T::one()).abs() <= T::of(BASIS_TOL)
}

/// A point `x ∈ [0,1]^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct HypercubePoint<T> {
    pub coords: Vec<T>,
}

impl<T: Scalar> HypercubePoint<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|&c| !(c >= T::zero() && c <= T::one())) {
            return Err(Error::Precondition(format!("coordinate {i} outside [0, 1]")));
        }
        Ok(Self { coords })
    }

    pub fn indicator(m: usize, set: &[usize]) -> Self {
        let mut coords = vec![T::zero(); m];
        for &i in set {
            coords[i] = T::one();
        }
        Self { coords }
    }

    pub fn uniform<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        Self {
            coords: (0..m).map(|_| T::of(rng.random::<f64>())).collect(),
        }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.coords.len())
            .filter(|&i| self.coords[i] != T::zero())
            .collect()
    }
}

/// `h(x) = det(V Diag(x) B^T)`, assembled as `Σ_i x_i V_i B_i^T`.
pub fn eval_h<T: Scalar>(inst: &RegularInstance<T>, x: &HypercubePoint<T>) -> Result<LogMagnitude<T>> {
    let m = inst.ground_size();
    if x.coords.len() != m {
        return Err(Error::Dimension(format!(
            "point has {} coordinates, ground set has {m}",
            x.coords.len()
        )));
    }
    let d = inst.dim();
    let v = inst.kernel.factor();
    let b = &inst.representation;
    let mut acc = RealMatrix::zeros(d, d);
    for (i, &xi) in x.coords.iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        for r in 0..d {
            let w = xi * v[(r, i)];
            for c in 0..d {
                acc[(r, c)] = acc[(r, c)] + w * b[(c, i)];
            }
        }
    }
    det_logmag(&acc)
}

#[derive(Clone, Debug)]
pub struct HypercubeRounding<T> {
    pub point: HypercubePoint<T>,
    /// `h` before rounding, then after each coordinate.
    pub chain: Vec<LogMagnitude<T>>,
    pub evaluations: usize,
}

/// Rounds `x_1, ..., x_m` in order to whichever of `{0, 1}` gives the
/// larger `|h|`, ties to 0. Uses `2m` evaluations.
pub fn round_hypercube<T: Scalar>(inst: &RegularInstance<T>, x: &HypercubePoint<T>) -> Result<HypercubeRounding<T>> {
    let mut current = x.clone();
    let mut value = eval_h(inst, &current)?;
    let mut chain = Vec::with_capacity(x.coords.len() + 1);
    chain.push(value);
    for i in 0..current.coords.len() {
        current.coords[i] = T::zero();
        let at_zero = eval_h(inst, &current)?;
        current.coords[i] = T::one();
        let at_one = eval_h(inst, &current)?;
        let next = if at_one.cmp_abs(&at_zero).is_gt() {
            at_one
        } else {
            current.coords[i] = T::zero();
            at_zero
        };
        if !not_below(&next, &value) {
            return Err(Error::Invariant(format!(
                "rounding coordinate {i} decreased log|h| from {} to {}",
                value.log_abs, next.log_abs
            )));
        }
        value = next;
        chain.push(next);
    }
    Ok(HypercubeRounding {
        point: current,
        chain,
        evaluations: 2 * x.coords.len(),
    })
}

#[derive(Clone, Debug)]
pub struct ShrinkStep<T> {
    pub removed: usize,
    /// Size of the set before the removal.
    pub size: usize,
    pub before: LogMagnitude<T>,
    pub after: LogMagnitude<T>,
}

#[derive(Clone, Debug)]
pub struct ShrinkOutcome<T> {
    pub set: Vec<usize>,
    pub steps: Vec<ShrinkStep<T>>,
    pub evaluations: usize,
    /// `g(S_0) = 0`: nothing was shrunk and `set` is an arbitrary `d`-subset.
    pub degenerate: bool,
}

/// Greedily removes the element whose removal maximizes `|g|` (ties to the
/// lowest element) until `d` remain, checking at every step that
/// `|g(S∖{i*})| >= ((|S| - d)/|S|) |g(S)|`.
pub fn shrink_support<T: Scalar>(inst: &RegularInstance<T>, s0: &[usize]) -> Result<ShrinkOutcome<T>> {
    let d = inst.dim();
    let mut set = s0.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.len() < d {
        return Err(Error::Precondition(format!(
            "support of size {} is smaller than the rank {d}",
            set.len()
        )));
    }
    let mut value = inst.g(&set)?;
    if value.is_zero() {
        set.truncate(d);
        return Ok(ShrinkOutcome {
            set,
            steps: Vec::new(),
            evaluations: 1,
            degenerate: true,
        });
    }
    let mut steps = Vec::new();
    let mut evaluations = 1;
    while set.len() > d {
        let size = set.len();
        let mut best: Option<(usize, LogMagnitude<T>)> = None;
        for pos in 0..size {
            let mut rest = set.clone();
            rest.remove(pos);
            let v = inst.g(&rest)?;
            evaluations += 1;
            if best.is_none_or(|(_, b)| v.cmp_abs(&b).is_gt()) {
                best = Some((pos, v));
            }
        }
        let (pos, after) = best.expect("set is nonempty");
        let ratio = T::of_usize(size - d) / T::of_usize(size);
        let floor = value.log_abs + ratio.ln() + T::of((1.0 - MONOTONE_SLACK).ln());
        if after.is_zero() || after.log_abs < floor {
            return Err(Error::Invariant(format!(
                "removal from a set of size {size} kept log|g| = {} below the guaranteed {}",
                after.log_abs, floor
            )));
        }
        let removed = set.remove(pos);
        steps.push(ShrinkStep {
            removed,
            size,
            before: value,
            after,
        });
        value = after;
    }
    Ok(ShrinkOutcome {
        set,
        steps,
        evaluations,
        degenerate: false,
    })
}

struct RegularTrial<T> {
    set: Vec<usize>,
    v_minor: LogMagnitude<T>,
    b_minor: LogMagnitude<T>,
}

fn regular_trial<T: Scalar>(inst: &RegularInstance<T>, stream: &SeedStream, k: usize) -> Result<RegularTrial<T>> {
    let mut rng = stream.fork(k as u64);
    let x = HypercubePoint::uniform(inst.ground_size(), &mut rng);
    let rounded = round_hypercube(inst, &x)?;
    let support = rounded.point.support();
    let discarded = RegularTrial {
        set: support.iter().copied().take(inst.dim()).collect(),
        v_minor: LogMagnitude::zero(),
        b_minor: LogMagnitude::zero(),
    };
    if support.len() < inst.dim() || rounded.chain.last().is_none_or(LogMagnitude::is_zero) {
        return Ok(discarded);
    }
    let shrunk = shrink_support(inst, &support)?;
    if shrunk.degenerate {
        return Ok(discarded);
    }
    let (v_minor, b_minor) = inst.minors(&shrunk.set)?;
    Ok(RegularTrial {
        set: shrunk.set,
        v_minor,
        b_minor,
    })
}

/// Best of `trials` independent sample, round and shrink attempts, ranked
/// by `|det(V_S)|`. Trial `k` draws from `stream.fork(k)`.
pub fn solve_regular<T: Scalar>(inst: &RegularInstance<T>, trials: usize, stream: SeedStream) -> Result<SolveReport> {
    if trials == 0 {
        return Err(Error::Precondition("at least one trial is required".into()));
    }
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|k| regular_trial(inst, &stream, k))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<usize> = None;
    for (k, o) in outcomes.iter().enumerate() {
        if best.is_none_or(|b| o.v_minor.cmp_abs(&outcomes[b].v_minor).is_gt()) {
            best = Some(k);
        }
    }
    let mut warnings = Vec::new();
    if let Some(b) = best {
        let o = &outcomes[b];
        if !o.v_minor.is_zero() && !is_unit(&o.b_minor) {
            warnings.push(SolveWarning::RepresentationNotUnimodular {
                det_abs: format!("{}", o.b_minor.abs().value()),
            });
        }
    }
    let sets = outcomes.into_iter().map(|o| (o.set, o.v_minor.powi_abs(2))).collect();
    Ok(summarize_regular(sets, inst.certified_factor_log(), stream, warnings))
}
