use crate::error::{Error, Result};
use crate::numkernel::{check_symmetric, gram_volume_logmag, psd_factor, LogMagnitude, RealMatrix};
use crate::scalar::Scalar;

/// A PSD kernel `L` (m x m) together with a factor `V` (d x m), `L = V^T V`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelInstance<T> {
    l: RealMatrix<T>,
    v: RealMatrix<T>,
}

impl<T: Scalar> KernelInstance<T> {
    /// From a factor; `L` is formed as `V^T V`.
    pub fn from_factor(v: RealMatrix<T>) -> Self {
        let l = v.gram();
        Self { l, v }
    }

    /// From a kernel; `V` is recovered by [`psd_factor`].
    pub fn from_kernel(l: RealMatrix<T>) -> Result<Self> {
        let v = psd_factor(&l)?;
        Ok(Self { l, v })
    }

    /// From both; they must agree to the reconstruction tolerance.
    pub fn from_parts(l: RealMatrix<T>, v: RealMatrix<T>) -> Result<Self> {
        check_symmetric(&l)?;
        if v.cols() != l.rows() {
            return Err(Error::Dimension(format!(
                "V has {} columns but L is {}x{}",
                v.cols(),
                l.rows(),
                l.cols()
            )));
        }
        let error = v.gram().max_abs_diff(&l)?;
        let tolerance = T::recon_tol() * l.max_abs().max(T::one());
        if error > tolerance {
            return Err(Error::Reconstruction {
                error: error.to_f64_lossy(),
                tolerance: tolerance.to_f64_lossy(),
            });
        }
        Ok(Self { l, v })
    }

    pub fn kernel(&self) -> &RealMatrix<T> {
        &self.l
    }

    pub fn factor(&self) -> &RealMatrix<T> {
        &self.v
    }

    /// Ground set size `m`.
    pub fn ground_size(&self) -> usize {
        self.v.cols()
    }

    /// Factor dimension `d`.
    pub fn dim(&self) -> usize {
        self.v.rows()
    }

    pub fn column(&self, i: usize) -> Vec<T> {
        self.v.column(i)
    }

    /// `log det(L_{S,S})` as twice the log Gram volume of `V_S`.
    pub fn log_det_principal(&self, set: &[usize]) -> Result<LogMagnitude<T>> {
        if set.is_empty() {
            return Ok(LogMagnitude::one());
        }
        if set.len() > self.dim() {
            return Ok(LogMagnitude::zero());
        }
        Ok(gram_volume_logmag(&self.v.select_columns(set))?.powi_abs(2))
    }
}
