//! Monte Carlo harness for lower-tail (anti-concentration) estimates of
//! nonnegative objectives over products of simplices.
//!
//! A function `f` on `Δ_p` is `γ`-anti-concentrated when
//! `Pr[f(x) < c·OPT] <= γ·p·c` for every `c ∈ (0, 1)`; on a product the
//! condition is asked of every single-block restriction. For such `f` on
//! `r >= γ` blocks, `Pr[f(x) >= (γe²)^{-r} ∏ 1/p_i · OPT] >= 1/(e^γ ln r)`.
//! OPT always comes from exact vertex enumeration, which is the true
//! maximum for the roundable objectives used here.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::binomial;
use crate::error::{Error, Result};
use crate::kernel::KernelInstance;
use crate::numkernel::{norm, LogMagnitude, RealMatrix};
use crate::partition::{eval_fv, UnitQuotaInstance};
use crate::regular::{eval_h, HypercubePoint, RegularInstance};
use crate::rng::SeedStream;
use crate::scalar::Scalar;
use crate::simplex::{
    enumerate_vertices, sample_uniform, vertex_to_point, ProductSimplexPoint, ProductSimplexShape,
    ProductSimplexVertex, ENUMERATION_CAP,
};

/// Width of the pass band, in binomial standard errors.
pub const SIGMA_MARGIN: f64 = 4.0;

/// Samples drawn from one forked stream; fixes the work split so results
/// do not depend on the number of threads.
const CHUNK: usize = 2048;

/// A nonnegative objective on a product of simplices, evaluated as
/// `ln f(x)` (negative infinity where `f` vanishes).
pub trait Objective<T: Scalar>: Sync {
    fn shape(&self) -> &ProductSimplexShape;

    fn log_value(&self, x: &ProductSimplexPoint<T>) -> T;

    fn value(&self, x: &ProductSimplexPoint<T>) -> T {
        self.log_value(x).exp()
    }
}

fn log_of<T: Scalar>(v: Result<LogMagnitude<T>>) -> T {
    match v {
        Ok(lm) if !lm.is_zero() => lm.log_abs,
        _ => T::neg_infinity(),
    }
}

/// The volume relaxation `f_V` of a unit-quota partition instance.
pub struct VolumeObjective<'a, T> {
    inst: &'a UnitQuotaInstance<T>,
}

impl<'a, T: Scalar> VolumeObjective<'a, T> {
    pub fn new(inst: &'a UnitQuotaInstance<T>) -> Self {
        Self { inst }
    }
}

impl<T: Scalar> Objective<T> for VolumeObjective<'_, T> {
    fn shape(&self) -> &ProductSimplexShape {
        self.inst.shape()
    }

    fn log_value(&self, x: &ProductSimplexPoint<T>) -> T {
        log_of(eval_fv(self.inst, x))
    }
}

/// `|h|` of a regular instance on `[0,1]^m`, read as `m` copies of `Δ_2`
/// with `x_i` the weight on the second vertex.
pub struct MultilinearObjective<'a, T> {
    inst: &'a RegularInstance<T>,
    shape: ProductSimplexShape,
}

impl<'a, T: Scalar> MultilinearObjective<'a, T> {
    pub fn new(inst: &'a RegularInstance<T>) -> Result<Self> {
        Ok(Self {
            inst,
            shape: ProductSimplexShape::hypercube(inst.ground_size())?,
        })
    }
}

impl<T: Scalar> Objective<T> for MultilinearObjective<'_, T> {
    fn shape(&self) -> &ProductSimplexShape {
        &self.shape
    }

    fn log_value(&self, x: &ProductSimplexPoint<T>) -> T {
        let coords = x.blocks.iter().map(|b| b[1]).collect();
        log_of(eval_h(self.inst, &HypercubePoint { coords }))
    }
}

/// `‖Σ_i x_i w_i‖` on `Δ_t`.
pub struct DistanceObjective<T> {
    vectors: Vec<Vec<T>>,
    shape: ProductSimplexShape,
}

impl<T: Scalar> DistanceObjective<T> {
    pub fn new(vectors: Vec<Vec<T>>) -> Result<Self> {
        let d = vectors.first().map_or(0, Vec::len);
        if vectors.iter().any(|w| w.len() != d) {
            return Err(Error::Dimension("vectors of unequal length".into()));
        }
        let shape = ProductSimplexShape::new(vec![vectors.len()])?;
        Ok(Self { vectors, shape })
    }
}

impl<T: Scalar> Objective<T> for DistanceObjective<T> {
    fn shape(&self) -> &ProductSimplexShape {
        &self.shape
    }

    fn log_value(&self, x: &ProductSimplexPoint<T>) -> T {
        let d = self.vectors[0].len();
        let mut acc = vec![T::zero(); d];
        for (&xi, w) in x.blocks[0].iter().zip(&self.vectors) {
            for (a, &wi) in acc.iter_mut().zip(w) {
                *a = *a + xi * wi;
            }
        }
        norm(&acc).ln()
    }
}

/// An objective given by a closure computing `f(x)`.
pub struct FnObjective<F> {
    shape: ProductSimplexShape,
    f: F,
}

impl<F> FnObjective<F> {
    pub fn new(shape: ProductSimplexShape, f: F) -> Self {
        Self { shape, f }
    }
}

impl<T: Scalar, F> Objective<T> for FnObjective<F>
where
    F: Fn(&ProductSimplexPoint<T>) -> T + Sync,
{
    fn shape(&self) -> &ProductSimplexShape {
        &self.shape
    }

    fn log_value(&self, x: &ProductSimplexPoint<T>) -> T {
        (self.f)(x).ln()
    }
}

/// `f` with every block except `block` frozen at `base`.
pub struct BlockRestriction<'a, T, O: ?Sized> {
    inner: &'a O,
    base: ProductSimplexPoint<T>,
    block: usize,
    shape: ProductSimplexShape,
}

impl<'a, T: Scalar, O: Objective<T> + ?Sized> BlockRestriction<'a, T, O> {
    pub fn new(inner: &'a O, base: ProductSimplexPoint<T>, block: usize) -> Result<Self> {
        base.validate(inner.shape())?;
        let p = *inner
            .shape()
            .block_sizes()
            .get(block)
            .ok_or_else(|| Error::Dimension(format!("no block {block}")))?;
        Ok(Self {
            inner,
            base,
            block,
            shape: ProductSimplexShape::new(vec![p])?,
        })
    }

    /// Freezes the other blocks at a uniform random point.
    pub fn random(inner: &'a O, block: usize, stream: SeedStream) -> Result<Self> {
        let base = sample_uniform(inner.shape(), &mut stream.fork(0));
        Self::new(inner, base, block)
    }
}

impl<T: Scalar, O: Objective<T> + ?Sized> Objective<T> for BlockRestriction<'_, T, O> {
    fn shape(&self) -> &ProductSimplexShape {
        &self.shape
    }

    fn log_value(&self, x: &ProductSimplexPoint<T>) -> T {
        let mut full = self.base.clone();
        full.blocks[self.block] = x.blocks[0].clone();
        self.inner.log_value(&full)
    }
}

/// Empirical tail probability with its binomial standard error and the
/// theoretical bound it is compared against.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailEstimate {
    pub threshold_fraction: f64,
    pub empirical_prob: f64,
    pub samples: usize,
    pub std_error: f64,
    pub bound: f64,
}

impl TailEstimate {
    fn new(threshold_fraction: f64, hits: usize, samples: usize, bound: f64) -> Self {
        let p = hits as f64 / samples as f64;
        Self {
            threshold_fraction,
            empirical_prob: p,
            samples,
            std_error: (p * (1.0 - p) / samples as f64).sqrt(),
            bound,
        }
    }

    /// `empirical <= bound + 4σ`.
    pub fn below_bound(&self) -> bool {
        self.empirical_prob <= self.bound + SIGMA_MARGIN * self.std_error
    }

    /// `empirical >= bound - 4σ`.
    pub fn above_bound(&self) -> bool {
        self.empirical_prob >= self.bound - SIGMA_MARGIN * self.std_error
    }

    /// `|empirical - bound| <= 4σ`, with σ taken from `bound` itself.
    pub fn matches_bound(&self) -> bool {
        let sigma = (self.bound * (1.0 - self.bound) / self.samples as f64).sqrt();
        (self.empirical_prob - self.bound).abs() <= SIGMA_MARGIN * sigma.max(self.std_error)
    }
}

/// `ln f` at `samples` uniform points; chunk `k` uses `stream.fork(k)`.
pub fn sample_log_values<T: Scalar, O: Objective<T> + ?Sized>(f: &O, samples: usize, stream: SeedStream) -> Vec<T> {
    let chunks = samples.div_ceil(CHUNK);
    let per_chunk: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.fork(k as u64);
            let len = CHUNK.min(samples - k * CHUNK);
            (0..len)
                .map(|_| f.log_value(&sample_uniform(f.shape(), &mut rng)))
                .collect()
        })
        .collect();
    per_chunk.concat()
}

/// `γ·p·c` for a single-block shape of size `p`; products carry no
/// per-threshold claim, so their bound is 1.
pub fn lower_tail_bound(shape: &ProductSimplexShape, gamma: f64, c: f64) -> f64 {
    match shape.block_sizes() {
        [p] => (gamma * *p as f64 * c).min(1.0),
        _ => 1.0,
    }
}

fn check_tail_args(opt_value: f64, c: f64) -> Result<()> {
    if !(opt_value > 0.0 && opt_value.is_finite()) {
        return Err(Error::Precondition(format!("OPT = {opt_value} must be positive")));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Precondition(format!("threshold fraction {c} not in (0, 1)")));
    }
    Ok(())
}

/// `Pr[f(x) < c·OPT]` for each `c`, all read off one shared sample.
pub fn estimate_lower_tail_grid<T: Scalar, O: Objective<T> + ?Sized>(
    f: &O,
    opt_value: T,
    cs: &[f64],
    gamma: f64,
    samples: usize,
    stream: SeedStream,
) -> Result<Vec<TailEstimate>> {
    let opt = opt_value.to_f64_lossy();
    for &c in cs {
        check_tail_args(opt, c)?;
    }
    if samples == 0 {
        return Err(Error::Precondition("zero samples".into()));
    }
    let values = sample_log_values(f, samples, stream);
    let log_opt = opt_value.ln();
    Ok(cs
        .iter()
        .map(|&c| {
            let cut = log_opt + T::of(c.ln());
            let hits = values.iter().filter(|&&v| v < cut).count();
            TailEstimate::new(c, hits, samples, lower_tail_bound(f.shape(), gamma, c))
        })
        .collect())
}

/// `Pr[f(x) < c·OPT]` over `samples` uniform points.
pub fn estimate_lower_tail<T: Scalar, O: Objective<T> + ?Sized>(
    f: &O,
    opt_value: T,
    c: f64,
    gamma: f64,
    samples: usize,
    stream: SeedStream,
) -> Result<TailEstimate> {
    Ok(estimate_lower_tail_grid(f, opt_value, &[c], gamma, samples, stream)?.remove(0))
}

/// Outcome of the global tail check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlobalTailCheck {
    /// `empirical_prob` is `Pr[f(x) >= threshold·OPT]`; `bound` is
    /// `1/(e^γ ln r)`.
    pub estimate: TailEstimate,
    /// `ln threshold = -r ln(γe²) - Σ ln p_i`.
    pub log_threshold_fraction: f64,
    /// The bound read with a base-2 logarithm, `1/(e^γ log2 r)`.
    pub bound_log2: f64,
    pub passes: bool,
}

/// Estimates `Pr[f(x) >= (γe²)^{-r} ∏(1/p_i) OPT]` and compares it with
/// `1/(e^γ ln r)`, passing when the estimate is at least the bound minus 4σ.
pub fn check_global_tail<T: Scalar, O: Objective<T> + ?Sized>(
    f: &O,
    opt_value: T,
    gamma: f64,
    samples: usize,
    stream: SeedStream,
) -> Result<GlobalTailCheck> {
    let shape = f.shape();
    let r = shape.num_blocks();
    if gamma < 1.0 {
        return Err(Error::Precondition(format!("gamma = {gamma} must be at least 1")));
    }
    if (r as f64) < gamma || r < 2 {
        return Err(Error::Precondition(format!(
            "{r} blocks is fewer than gamma = {gamma} (or fewer than 2)"
        )));
    }
    let opt = opt_value.to_f64_lossy();
    if !(opt > 0.0 && opt.is_finite()) {
        return Err(Error::Precondition(format!("OPT = {opt} must be positive")));
    }
    if samples == 0 {
        return Err(Error::Precondition("zero samples".into()));
    }
    let log_threshold_fraction = -(r as f64) * (gamma * std::f64::consts::E.powi(2)).ln() - shape.log_vertex_count();
    let cut = opt_value.ln() + T::of(log_threshold_fraction);
    let values = sample_log_values(f, samples, stream);
    let hits = values.iter().filter(|&&v| v >= cut).count();
    let bound = 1.0 / (gamma.exp() * (r as f64).ln());
    let estimate = TailEstimate::new(log_threshold_fraction.exp(), hits, samples, bound);
    let passes = estimate.above_bound();
    Ok(GlobalTailCheck {
        estimate,
        log_threshold_fraction,
        bound_log2: 1.0 / (gamma.exp() * (r as f64).log2()),
        passes,
    })
}

/// Exact maximum of `f` over the vertices, first maximizer in
/// lexicographic order.
pub fn vertex_opt<T: Scalar, O: Objective<T> + ?Sized>(f: &O) -> Result<(ProductSimplexVertex, T)> {
    let shape = f.shape();
    let mut best: Option<(ProductSimplexVertex, T)> = None;
    for v in enumerate_vertices(shape, ENUMERATION_CAP)? {
        let x = vertex_to_point(shape, &v)?;
        let val = f.log_value(&x);
        if best.as_ref().is_none_or(|(_, b)| val > *b) {
            best = Some((v, val));
        }
    }
    let (v, log_val) = best.expect("vertex set is nonempty");
    Ok((v, log_val.exp()))
}

/// `r^r / C(r², r)`: the chance that a uniform `r`-subset of the
/// `r²` repeated unit vectors picks one copy of each. Exact rational
/// arithmetic, then converted.
pub fn ns_success_probability(r: usize) -> Result<f64> {
    if r < 2 {
        return Err(Error::Precondition(format!("r = {r} must be at least 2")));
    }
    let num = BigUint::from(r).pow(r as u32);
    let m = r * r;
    let mut den = BigUint::from(1u32);
    for i in 0..r {
        den = den * BigUint::from(m - i) / BigUint::from(i + 1);
    }
    BigRational::new(num.into(), den.into())
        .to_f64()
        .ok_or_else(|| Error::Precondition("probability not representable".into()))
}

/// The repeated-unit-vector kernel: `V ∈ R^{r x r²}` with column `j`
/// equal to `e_{j / r}`.
pub fn repeated_unit_factor<T: Scalar>(r: usize) -> RealMatrix<T> {
    let mut v = RealMatrix::zeros(r, r * r);
    for j in 0..r * r {
        v[(j / r, j)] = T::one();
    }
    v
}

/// Fraction of uniform `r`-subsets of `[r²]` with nonzero determinant on
/// the repeated-unit-vector kernel. `bound` holds the exact probability
/// and `threshold_fraction` is 1 (the optimum value).
pub fn simulate_ns_sampler(r: usize, samples: usize, stream: SeedStream) -> Result<TailEstimate> {
    let exact = ns_success_probability(r)?;
    if samples == 0 {
        return Err(Error::Precondition("zero samples".into()));
    }
    let kernel = KernelInstance::<f64>::from_factor(repeated_unit_factor(r));
    let m = r * r;
    debug_assert!(binomial(m, r) > 0);
    let chunks = samples.div_ceil(CHUNK);
    let hits: Result<usize> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.fork(k as u64);
            let len = CHUNK.min(samples - k * CHUNK);
            let mut hits = 0;
            for _ in 0..len {
                let mut set = sample(&mut rng, m, r).into_vec();
                set.sort_unstable();
                if !kernel.log_det_principal(&set)?.is_zero() {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .sum::<Result<usize>>();
    Ok(TailEstimate::new(1.0, hits?, samples, exact))
}
