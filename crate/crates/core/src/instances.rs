//! Instance generators for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::anticoncentration::repeated_unit_factor;
use crate::error::{Error, Result};
use crate::kernel::KernelInstance;
use crate::numkernel::RealMatrix;
use crate::partition::PartitionInstance;
use crate::regular::RegularInstance;
use crate::rng::SeedStream;
use crate::scalar::Scalar;

/// Attempts at drawing a connected multigraph before giving up.
pub const CONNECT_RETRIES: usize = 1000;

/// A problem of either constraint family.
#[derive(Clone, Debug, PartialEq)]
pub enum Instance<T> {
    Partition(PartitionInstance<T>),
    Regular(RegularInstance<T>),
}

impl<T: Scalar> Instance<T> {
    pub fn kernel(&self) -> &KernelInstance<T> {
        match self {
            Instance::Partition(p) => p.kernel(),
            Instance::Regular(r) => r.kernel(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorMode {
    /// `V = B`, so every basis has `det(L_{S,S}) = 1`.
    CopyRepresentation,
    /// Independent standard normal entries.
    Gaussian,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    RandomPsdPartition {
        m: usize,
        d: usize,
        quotas: Vec<usize>,
    },
    GraphicRegular {
        nodes: usize,
        edges: usize,
        mode: FactorMode,
    },
    NsHard {
        r: usize,
    },
}

impl GeneratorSpec {
    pub fn generate<T: Scalar>(&self, seed: u64) -> Result<Instance<T>> {
        let mut rng = SeedStream::new(seed).fork(0);
        Ok(match self {
            GeneratorSpec::RandomPsdPartition { m, d, quotas } => {
                Instance::Partition(gen_random_partition(*m, quotas.len(), quotas, *d, &mut rng)?)
            }
            GeneratorSpec::GraphicRegular { nodes, edges, mode } => {
                Instance::Regular(gen_graphic_regular(*nodes, *edges, &mut rng, *mode)?)
            }
            GeneratorSpec::NsHard { r } => Instance::Partition(gen_ns_hard(*r)?),
        })
    }
}

pub fn gaussian_matrix<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> RealMatrix<T> {
    let data = (0..rows * cols)
        .map(|_| T::of(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    RealMatrix::new(rows, cols, data).expect("gaussian entries are finite")
}

/// Gaussian `V` (`d x m`), `L = V^T V`, and a uniformly shuffled balanced
/// partition of `0..m` into `t` parts (sizes differ by at most one, larger
/// parts first).
pub fn gen_random_partition<T: Scalar, R: Rng + ?Sized>(
    m: usize,
    t: usize,
    quotas: &[usize],
    d: usize,
    rng: &mut R,
) -> Result<PartitionInstance<T>> {
    if t == 0 || quotas.len() != t {
        return Err(Error::InvalidInstance(format!("{} quotas for {t} parts", quotas.len())));
    }
    if m < t {
        return Err(Error::InvalidInstance(format!(
            "cannot split {m} elements into {t} nonempty parts"
        )));
    }
    let r: usize = quotas.iter().sum();
    if r > d || d > m {
        return Err(Error::InvalidInstance(format!(
            "need r <= d <= m, got r = {r}, d = {d}, m = {m}"
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let mut parts = vec![Vec::new(); t];
    for (pos, &e) in order.iter().enumerate() {
        parts[pos % t].push(e);
    }
    for part in &mut parts {
        part.sort_unstable();
    }
    let v = gaussian_matrix(d, m, rng);
    PartitionInstance::new(KernelInstance::from_factor(v), parts, quotas.to_vec())
}

/// Reduced signed incidence matrix: edge `(u, w)` gets `+1` in row `u` and
/// `-1` in row `w`, and the row of the last vertex is dropped.
pub fn reduced_incidence<T: Scalar>(nodes: usize, edges: &[(usize, usize)]) -> Result<RealMatrix<T>> {
    if nodes < 2 {
        return Err(Error::InvalidInstance("a graph needs at least two vertices".into()));
    }
    let mut b = RealMatrix::zeros(nodes - 1, edges.len());
    for (j, &(u, w)) in edges.iter().enumerate() {
        if u >= nodes || w >= nodes || u == w {
            return Err(Error::InvalidInstance(format!("bad edge ({u}, {w})")));
        }
        if u < nodes - 1 {
            b[(u, j)] = T::one();
        }
        if w < nodes - 1 {
            b[(w, j)] = -T::one();
        }
    }
    Ok(b)
}

pub fn is_connected(nodes: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = nodes;
    for &(u, w) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, w));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components <= 1
}

/// Graphic-matroid instance on a fixed edge list.
pub fn graphic_instance<T: Scalar, R: Rng + ?Sized>(
    nodes: usize,
    edges: &[(usize, usize)],
    mode: FactorMode,
    rng: &mut R,
) -> Result<RegularInstance<T>> {
    if !is_connected(nodes, edges) {
        return Err(Error::InvalidInstance("graph is not connected".into()));
    }
    let b = reduced_incidence(nodes, edges)?;
    let v = match mode {
        FactorMode::CopyRepresentation => b.clone(),
        FactorMode::Gaussian => gaussian_matrix(b.rows(), b.cols(), rng),
    };
    RegularInstance::new(KernelInstance::from_factor(v), b)
}

/// Random connected multigraph with `edges` loop-free edges drawn
/// uniformly over vertex pairs, as a graphic-matroid instance with
/// `d = nodes - 1`.
pub fn gen_graphic_regular<T: Scalar, R: Rng + ?Sized>(
    nodes: usize,
    edges: usize,
    rng: &mut R,
    mode: FactorMode,
) -> Result<RegularInstance<T>> {
    if nodes < 2 {
        return Err(Error::InvalidInstance("a graph needs at least two vertices".into()));
    }
    if edges + 1 < nodes {
        return Err(Error::InvalidInstance(format!(
            "{edges} edges cannot connect {nodes} vertices"
        )));
    }
    for _ in 0..CONNECT_RETRIES {
        let list: Vec<(usize, usize)> = (0..edges)
            .map(|_| {
                let u = rng.random_range(0..nodes);
                let mut w = rng.random_range(0..nodes - 1);
                if w >= u {
                    w += 1;
                }
                (u.min(w), u.max(w))
            })
            .collect();
        if is_connected(nodes, &list) {
            return graphic_instance(nodes, &list, mode, rng);
        }
    }
    Err(Error::InvalidInstance(format!(
        "no connected graph after {CONNECT_RETRIES} draws"
    )))
}

/// `V ∈ R^{r x r²}` with each unit vector repeated `r` times, one part of
/// size `r²` and quota `r`. The optimum is 1.
pub fn gen_ns_hard<T: Scalar>(r: usize) -> Result<PartitionInstance<T>> {
    if r < 2 {
        return Err(Error::InvalidInstance(format!("r = {r} must be at least 2")));
    }
    let v = repeated_unit_factor(r);
    PartitionInstance::new(KernelInstance::from_factor(v), vec![(0..r * r).collect()], vec![r])
}
