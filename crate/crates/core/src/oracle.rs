//! Exhaustive solvers and exact cross-checks for desk-scale instances.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::combinatorics::{binomial, combinations};
use crate::error::{Error, Result};
use crate::numkernel::{LogMagnitude, RealMatrix};
use crate::partition::PartitionInstance;
use crate::regular::{HypercubePoint, RegularInstance, BASIS_TOL};
use crate::scalar::Scalar;

pub const PARTITION_CAP: u128 = 10_000_000;
pub const REGULAR_CAP: u128 = 10_000_000;
pub const CAUCHY_BINET_CAP: u128 = 1_000_000;

/// Largest `d` for which [`cauchy_binet_sum`] expands minors by permutations.
pub const LEIBNIZ_MAX_DIM: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactResult<T> {
    /// Sorted optimal set; empty when no feasible set exists.
    pub best_set: Vec<usize>,
    /// `det(L_{S,S})` of `best_set`.
    pub best_value: T,
    pub best_log: LogMagnitude<T>,
    /// Number of feasible sets visited.
    pub enumerated: u128,
}

impl<T: Scalar> ExactResult<T> {
    pub fn is_feasible(&self) -> bool {
        !self.best_set.is_empty()
    }
}

fn better<T: Scalar>(cand: &LogMagnitude<T>, set: &[usize], best: &Option<(Vec<usize>, LogMagnitude<T>)>) -> bool {
    match best {
        None => true,
        Some((bset, bval)) => match cand.cmp_abs(bval) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => set < bset.as_slice(),
            std::cmp::Ordering::Less => false,
        },
    }
}

/// Maximum of `det(L_{S,S})` over every `S` with `|S ∩ M_i| = b_i`.
/// Ties go to the lexicographically smallest sorted set.
pub fn brute_force_partition<T: Scalar>(inst: &PartitionInstance<T>) -> Result<ExactResult<T>> {
    let count = inst
        .parts()
        .iter()
        .zip(inst.quotas())
        .fold(1u128, |acc, (p, &b)| acc.saturating_mul(binomial(p.len(), b)));
    if count > PARTITION_CAP {
        return Err(Error::CapExceeded {
            count,
            cap: PARTITION_CAP,
        });
    }
    let choices: Vec<Vec<Vec<usize>>> = inst
        .parts()
        .iter()
        .zip(inst.quotas())
        .map(|(part, &b)| {
            combinations(part.len(), b)
                .map(|c| c.into_iter().map(|k| part[k]).collect())
                .collect()
        })
        .collect();
    let mut odometer = vec![0usize; choices.len()];
    let mut best: Option<(Vec<usize>, LogMagnitude<T>)> = None;
    let mut enumerated = 0u128;
    loop {
        let mut set: Vec<usize> = odometer
            .iter()
            .zip(&choices)
            .flat_map(|(&k, c)| c[k].iter().copied())
            .collect();
        set.sort_unstable();
        let value = inst.kernel().log_det_principal(&set)?;
        enumerated += 1;
        if better(&value, &set, &best) {
            best = Some((set, value));
        }
        let mut pos = odometer.len();
        loop {
            if pos == 0 {
                let (best_set, best_log) = best.expect("at least one feasible set");
                return Ok(ExactResult {
                    best_value: best_log.value(),
                    best_set,
                    best_log,
                    enumerated,
                });
            }
            pos -= 1;
            odometer[pos] += 1;
            if odometer[pos] < choices[pos].len() {
                break;
            }
            odometer[pos] = 0;
        }
    }
}

/// Maximum of `det(V_S)^2` over the `d`-subsets with `|det(B_S)| = 1`.
pub fn brute_force_regular<T: Scalar>(inst: &RegularInstance<T>) -> Result<ExactResult<T>> {
    let (m, d) = (inst.ground_size(), inst.dim());
    let count = binomial(m, d);
    if count > REGULAR_CAP {
        return Err(Error::CapExceeded {
            count,
            cap: REGULAR_CAP,
        });
    }
    let mut best: Option<(Vec<usize>, LogMagnitude<T>)> = None;
    let mut enumerated = 0u128;
    for set in combinations(m, d) {
        let (v_minor, b_minor) = inst.minors(&set)?;
        if b_minor.is_zero() || (b_minor.log_abs.exp() - T::one()).abs() > T::of(BASIS_TOL) {
            continue;
        }
        enumerated += 1;
        let value = v_minor.powi_abs(2);
        if better(&value, &set, &best) {
            best = Some((set, value));
        }
    }
    Ok(match best {
        Some((best_set, best_log)) => ExactResult {
            best_value: best_log.value(),
            best_set,
            best_log,
            enumerated,
        },
        None => ExactResult {
            best_set: Vec::new(),
            best_value: T::zero(),
            best_log: LogMagnitude::zero(),
            enumerated,
        },
    })
}

/// Determinant by the permutation expansion, accumulated with Heap's
/// algorithm; independent of any elimination routine.
pub fn leibniz_det<T: Scalar>(a: &RealMatrix<T>) -> Result<T> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n > LEIBNIZ_MAX_DIM {
        return Err(Error::Precondition(format!(
            "permutation expansion limited to dimension {LEIBNIZ_MAX_DIM}, got {n}"
        )));
    }
    let term = |perm: &[usize]| -> T {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| a[(i, j)])
            .fold(T::one(), |acc, x| acc * x)
    };
    let mut perm: Vec<usize> = (0..n).collect();
    let mut counters = vec![0usize; n];
    let mut positive = true;
    let mut total = term(&perm);
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            let swap_with = if i % 2 == 0 { 0 } else { counters[i] };
            perm.swap(swap_with, i);
            positive = !positive;
            let t = term(&perm);
            total = if positive { total + t } else { total - t };
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok(total)
}

/// `Σ_{|S|=d} x^S det(V_S) det(B_S)` over every `d`-subset.
pub fn cauchy_binet_sum<T: Scalar>(inst: &RegularInstance<T>, x: &HypercubePoint<T>) -> Result<T> {
    let (m, d) = (inst.ground_size(), inst.dim());
    if x.coords.len() != m {
        return Err(Error::Dimension(format!(
            "point has {} coordinates, ground set has {m}",
            x.coords.len()
        )));
    }
    let count = binomial(m, d);
    if count > CAUCHY_BINET_CAP {
        return Err(Error::CapExceeded {
            count,
            cap: CAUCHY_BINET_CAP,
        });
    }
    let v = inst.kernel().factor();
    let b = inst.representation();
    let mut total = T::zero();
    for set in combinations(m, d) {
        let weight = set.iter().fold(T::one(), |acc, &i| acc * x.coords[i]);
        if weight == T::zero() {
            continue;
        }
        let bm = leibniz_det(&b.select_columns(&set))?;
        if bm == T::zero() {
            continue;
        }
        total = total + weight * leibniz_det(&v.select_columns(&set))? * bm;
    }
    Ok(total)
}

/// Largest dimension accepted by [`exact_int_det`].
pub const EXACT_DET_MAX_DIM: usize = 12;

/// Exact determinant of an integer-valued matrix by fraction-free
/// (Bareiss) elimination with row pivoting.
pub fn exact_int_det<T: Scalar>(a: &RealMatrix<T>) -> Result<BigInt> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n > EXACT_DET_MAX_DIM {
        return Err(Error::Precondition(format!(
            "exact determinant limited to dimension {EXACT_DET_MAX_DIM}, got {n}"
        )));
    }
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for row in 0..n {
        let mut r = Vec::with_capacity(n);
        for col in 0..n {
            let x = a[(row, col)].to_f64_lossy();
            if x.fract() != 0.0 || x.abs() > 9.0e15 {
                return Err(Error::NonInteger { row, col, value: x });
            }
            r.push(BigInt::from(x as i64));
        }
        m.push(r);
    }
    if n == 0 {
        return Ok(BigInt::one());
    }
    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    negate = !negate;
                }
                None => return Ok(BigInt::zero()),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = num / &prev;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    Ok(if negate { -det } else { det })
}

/// `|det|` of an exact integer as a log-magnitude, for comparisons.
pub fn bigint_log_abs(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (_, digits) = x.abs().to_u64_digits();
    let top = digits.len() - 1;
    // leading two limbs carry all the f64 precision
    let mut mantissa = digits[top] as f64;
    if top > 0 {
        mantissa += digits[top - 1] as f64 / 18_446_744_073_709_551_616.0;
    }
    mantissa.ln() + top as f64 * 64.0 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelInstance;
    use crate::numkernel::{det_logmag, Sign};
    use crate::rng::SeedStream;
    use rand::Rng;

    fn m(rows: &[&[f64]]) -> RealMatrix<f64> {
        RealMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    /// Cofactor expansion over i128, used only to check the Bareiss path.
    fn cofactor(a: &[Vec<i128>]) -> i128 {
        let n = a.len();
        if n == 0 {
            return 1;
        }
        (0..n)
            .map(|j| {
                let minor: Vec<Vec<i128>> = a[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &x)| x).collect())
                    .collect();
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * a[0][j] * cofactor(&minor)
            })
            .sum()
    }

    #[test]
    fn exact_det_examples() {
        assert_eq!(exact_int_det(&RealMatrix::<f64>::identity(4)).unwrap(), BigInt::from(1));
        assert_eq!(exact_int_det(&m(&[&[1.0, 1.0], &[0.0, 1.0]])).unwrap(), BigInt::from(1));
        assert_eq!(exact_int_det(&m(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap(), BigInt::from(3));
        assert_eq!(
            exact_int_det(&m(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap(),
            BigInt::from(-1)
        );
        assert!(matches!(
            exact_int_det(&m(&[&[0.5, 1.0], &[1.0, 0.0]])),
            Err(Error::NonInteger { row: 0, col: 0, .. })
        ));
    }

    #[test]
    fn bareiss_matches_cofactor_expansion() {
        let mut rng = SeedStream::new(12).fork(0);
        for _ in 0..300 {
            let n = rng.random_range(1..=6);
            let rows: Vec<Vec<i128>> = (0..n)
                .map(|_| (0..n).map(|_| rng.random_range(-4..=4)).collect())
                .collect();
            let a = RealMatrix::from_rows(
                &rows
                    .iter()
                    .map(|r| r.iter().map(|&x| x as f64).collect())
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            assert_eq!(exact_int_det(&a).unwrap(), BigInt::from(cofactor(&rows)));
        }
    }

    #[test]
    fn leibniz_matches_known_values() {
        assert_eq!(leibniz_det(&m(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap(), 3.0);
        let a = m(&[&[1.0, 2.0, 3.0], &[0.0, 1.0, 4.0], &[5.0, 6.0, 0.0]]);
        assert_eq!(leibniz_det(&a).unwrap(), 1.0);
        assert_eq!(leibniz_det(&RealMatrix::<f64>::identity(5)).unwrap(), 1.0);
    }

    #[test]
    fn big_log_abs() {
        assert!((bigint_log_abs(&BigInt::from(6)) - 6f64.ln()).abs() < 1e-15);
        let big = BigInt::from(3u64).pow(100);
        assert!((bigint_log_abs(&big) - 100.0 * 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn identical_columns_have_zero_optimum() {
        let v = RealMatrix::new(2, 4, vec![1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]).unwrap();
        let inst =
            PartitionInstance::new(KernelInstance::from_factor(v), vec![vec![0, 1], vec![2, 3]], vec![1, 1]).unwrap();
        let exact = brute_force_partition(&inst).unwrap();
        assert_eq!(exact.best_value, 0.0);
        assert_eq!(exact.enumerated, 4);
    }

    #[test]
    fn identity_singletons() {
        let inst = PartitionInstance::new(
            KernelInstance::from_factor(RealMatrix::<f64>::identity(3)),
            vec![vec![0], vec![1], vec![2]],
            vec![1, 1, 1],
        )
        .unwrap();
        let exact = brute_force_partition(&inst).unwrap();
        assert_eq!(exact.best_set, vec![0, 1, 2]);
        assert!((exact.best_value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_column_is_in_no_basis() {
        // triangle with one extra zero column
        let b = m(&[&[1.0, 0.0, 1.0, 0.0], &[-1.0, 1.0, 0.0, 0.0]]);
        let inst = RegularInstance::new(KernelInstance::from_factor(b.clone()), b).unwrap();
        let exact = brute_force_regular(&inst).unwrap();
        assert_eq!(exact.enumerated, 3);
        assert!(!exact.best_set.contains(&3));
    }

    #[test]
    fn cauchy_binet_edges() {
        let b = m(&[&[1.0, 0.0, 1.0], &[-1.0, 1.0, 0.0]]);
        let v = m(&[&[0.3, -1.2, 2.0], &[1.5, 0.7, -0.4]]);
        let inst = RegularInstance::new(KernelInstance::from_factor(v.clone()), b.clone()).unwrap();
        let ones = HypercubePoint::new(vec![1.0; 3]).unwrap();
        let full = det_logmag(&v.matmul(&b.transpose()).unwrap()).unwrap().value();
        assert!((cauchy_binet_sum(&inst, &ones).unwrap() - full).abs() < 1e-12);
        let zero = HypercubePoint::new(vec![0.0; 3]).unwrap();
        assert_eq!(cauchy_binet_sum(&inst, &zero).unwrap(), 0.0);
    }

    #[test]
    fn exact_and_floating_minor_products_agree() {
        let b = m(&[&[1.0, 0.0, 1.0, 1.0], &[-1.0, 1.0, 0.0, -1.0]]);
        let v = m(&[&[2.0, -1.0, 3.0, 0.0], &[1.0, 1.0, -2.0, 2.0]]);
        let inst = RegularInstance::new(KernelInstance::from_factor(v.clone()), b.clone()).unwrap();
        for set in combinations(4, 2) {
            let (vm, bm) = inst.minors(&set).unwrap();
            let exact =
                exact_int_det(&v.select_columns(&set)).unwrap() * exact_int_det(&b.select_columns(&set)).unwrap();
            let float = vm.mul(&bm);
            if exact.is_zero() {
                assert!(float.is_zero());
            } else {
                let expect_sign = if exact.is_positive() {
                    Sign::Positive
                } else {
                    Sign::Negative
                };
                assert_eq!(float.sign, expect_sign);
                assert!((float.log_abs - bigint_log_abs(&exact)).abs() <= 1e-9 * bigint_log_abs(&exact).abs().max(1.0));
            }
        }
    }
}
