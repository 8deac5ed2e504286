//! Products of probability simplices `Δ_{p_1} x ... x Δ_{p_r}`.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest vertex set the exact enumerators will walk.
pub const ENUMERATION_CAP: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProductSimplexShape {
    block_sizes: Vec<usize>,
}

impl ProductSimplexShape {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(Error::Precondition("product of zero simplices".into()));
        }
        if let Some(i) = block_sizes.iter().position(|&p| p == 0) {
            return Err(Error::Precondition(format!("block {i} has size 0")));
        }
        Ok(Self { block_sizes })
    }

    /// Hypercube `[0,1]^m` viewed as `m` copies of `Δ_2`.
    pub fn hypercube(m: usize) -> Result<Self> {
        Self::new(vec![2; m])
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    /// `∏ p_i`, saturating.
    pub fn vertex_count(&self) -> u128 {
        self.block_sizes
            .iter()
            .fold(1u128, |acc, &p| acc.saturating_mul(p as u128))
    }

    /// `Σ ln p_i`.
    pub fn log_vertex_count(&self) -> f64 {
        self.block_sizes.iter().map(|&p| (p as f64).ln()).sum()
    }
}

/// A point `x = (x^1, ..., x^r)` with each `x^i` in `Δ_{p_i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSimplexPoint<T> {
    pub blocks: Vec<Vec<T>>,
}

impl<T: Scalar> ProductSimplexPoint<T> {
    /// Checks the point belongs to `shape`: nonnegative blocks of the right
    /// sizes, each summing to one within `1e-12` (scaled for `f32`).
    pub fn validate(&self, shape: &ProductSimplexShape) -> Result<()> {
        if self.blocks.len() != shape.num_blocks() {
            return Err(Error::Dimension(format!(
                "point has {} blocks, shape has {}",
                self.blocks.len(),
                shape.num_blocks()
            )));
        }
        let tol = T::of(1e-12).max(T::epsilon() * T::of(16.0));
        for (i, (block, &p)) in self.blocks.iter().zip(shape.block_sizes()).enumerate() {
            if block.len() != p {
                return Err(Error::Dimension(format!(
                    "block {i} has length {}, expected {p}",
                    block.len()
                )));
            }
            if block.iter().any(|&x| x < T::zero() || !x.is_finite()) {
                return Err(Error::Precondition(format!("block {i} has a negative coordinate")));
            }
            let sum: T = block.iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                return Err(Error::Precondition(format!("block {i} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> Result<ProductSimplexShape> {
        ProductSimplexShape::new(self.blocks.iter().map(Vec::len).collect())
    }

    /// The vertex this point sits on, if every block is a standard basis vector.
    pub fn as_vertex(&self) -> Option<ProductSimplexVertex> {
        let choices = self
            .blocks
            .iter()
            .map(|b| {
                let ones: Vec<usize> = (0..b.len()).filter(|&j| b[j] == T::one()).collect();
                let rest_zero = b.iter().filter(|&&x| x == T::zero()).count() == b.len() - 1;
                (ones.len() == 1 && rest_zero).then(|| ones[0])
            })
            .collect::<Option<Vec<_>>>()?;
        Some(ProductSimplexVertex { choices })
    }
}

/// A vertex of the product: one chosen index per block (0-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductSimplexVertex {
    pub choices: Vec<usize>,
}

impl ProductSimplexVertex {
    pub fn validate(&self, shape: &ProductSimplexShape) -> Result<()> {
        if self.choices.len() != shape.num_blocks() {
            return Err(Error::Dimension("vertex has the wrong number of blocks".into()));
        }
        for (i, (&c, &p)) in self.choices.iter().zip(shape.block_sizes()).enumerate() {
            if c >= p {
                return Err(Error::Dimension(format!(
                    "choice {c} out of range in block {i} of size {p}"
                )));
            }
        }
        Ok(())
    }
}

/// Uniform sample from the product: each block is an independent flat
/// Dirichlet draw, built from normalised standard-exponential spacings.
pub fn sample_uniform<T: Scalar, R: Rng + ?Sized>(shape: &ProductSimplexShape, rng: &mut R) -> ProductSimplexPoint<T> {
    let blocks = shape.block_sizes().iter().map(|&p| sample_block(p, rng)).collect();
    ProductSimplexPoint { blocks }
}

pub(crate) fn sample_block<T: Scalar, R: Rng + ?Sized>(p: usize, rng: &mut R) -> Vec<T> {
    loop {
        let draws: Vec<T> = (0..p).map(|_| T::of(rng.sample(Exp1))).collect();
        let total: T = draws.iter().copied().sum();
        // A zero total needs every draw to be exactly 0; redraw.
        if total > T::zero() {
            return draws.into_iter().map(|e| e / total).collect();
        }
    }
}

/// Block `i` of the vertex becomes the basis vector `e_{choice_i}`.
pub fn vertex_to_point<T: Scalar>(
    shape: &ProductSimplexShape,
    v: &ProductSimplexVertex,
) -> Result<ProductSimplexPoint<T>> {
    v.validate(shape)?;
    let blocks = v
        .choices
        .iter()
        .zip(shape.block_sizes())
        .map(|(&c, &p)| basis_vector(p, c))
        .collect();
    Ok(ProductSimplexPoint { blocks })
}

pub(crate) fn basis_vector<T: Scalar>(p: usize, j: usize) -> Vec<T> {
    let mut e = vec![T::zero(); p];
    e[j] = T::one();
    e
}

/// All vertices in lexicographic order, refusing shapes above `cap`.
pub fn enumerate_vertices(shape: &ProductSimplexShape, cap: u128) -> Result<VertexIter> {
    let count = shape.vertex_count();
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }
    Ok(VertexIter {
        sizes: shape.block_sizes().to_vec(),
        next: Some(vec![0; shape.num_blocks()]),
    })
}

/// Odometer over the vertex set.
#[derive(Clone, Debug)]
pub struct VertexIter {
    sizes: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for VertexIter {
    type Item = ProductSimplexVertex;

    fn next(&mut self) -> Option<ProductSimplexVertex> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut pos = succ.len();
        while pos > 0 {
            pos -= 1;
            succ[pos] += 1;
            if succ[pos] < self.sizes[pos] {
                self.next = Some(succ);
                break;
            }
            succ[pos] = 0;
        }
        Some(ProductSimplexVertex { choices: current })
    }
}
