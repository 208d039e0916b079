use crate::error::{check_dim, Error, Result};
use crate::gaussian::GaussianBelief;
use crate::linalg::{CovFactor, Matrix, Vector};

/// `mean ← F mean`, `cov ← F cov Fᵀ + G Q Gᵀ`.
pub fn kalman_predict(
    belief: &GaussianBelief,
    f: &Matrix,
    g: &Matrix,
    q: &Matrix,
) -> Result<GaussianBelief> {
    let p = belief.dim();
    check_dim("F cols", p, f.ncols())?;
    check_dim("F rows", p, f.nrows())?;
    check_dim("G rows", p, g.nrows())?;
    check_dim("Q rows", g.ncols(), q.nrows())?;
    check_dim("Q cols", g.ncols(), q.ncols())?;
    let mean = f * belief.mean();
    let cov = f * belief.cov() * f.transpose() + g * q * g.transpose();
    GaussianBelief::from_algebra(mean, cov)
}

/// Prediction with a full process covariance: `cov ← F cov Fᵀ + Q`.
pub fn kalman_predict_full(belief: &GaussianBelief, f: &Matrix, q: &Matrix) -> Result<GaussianBelief> {
    let p = belief.dim();
    check_dim("F cols", p, f.ncols())?;
    check_dim("F rows", p, f.nrows())?;
    check_dim("Q rows", p, q.nrows())?;
    let mean = f * belief.mean();
    let cov = f * belief.cov() * f.transpose() + q;
    GaussianBelief::from_algebra(mean, cov)
}

/// Innovation statistics `ỹ = H m`, `S = H P Hᵀ + R` of a belief.
#[derive(Debug, Clone)]
pub struct Innovation {
    pub predicted: Vector,
    pub cov: Matrix,
    pub factor: CovFactor,
}

pub fn innovation(belief: &GaussianBelief, h: &Matrix, r: &Matrix) -> Result<Innovation> {
    check_dim("H cols", belief.dim(), h.ncols())?;
    check_dim("R rows", h.nrows(), r.nrows())?;
    check_dim("R cols", h.nrows(), r.ncols())?;
    let predicted = h * belief.mean();
    let cov = h * belief.cov() * h.transpose() + r;
    let cov = (&cov + cov.transpose()) * 0.5;
    let factor = CovFactor::new(&cov).ok_or(Error::DegenerateInnovation)?;
    Ok(Innovation {
        predicted,
        cov,
        factor,
    })
}

/// Kalman correction. Returns the posterior and `log N(y; H m, S)`.
///
/// The posterior covariance uses the Joseph form, which stays PSD under
/// rounding.
pub fn kalman_update(
    belief: &GaussianBelief,
    h: &Matrix,
    r: &Matrix,
    y: &Vector,
) -> Result<(GaussianBelief, f64)> {
    check_dim("observation", h.nrows(), y.len())?;
    let inn = innovation(belief, h, r)?;
    let resid = y - &inn.predicted;
    let loglik = inn.factor.log_density_residual(&resid);
    // K = P Hᵀ S⁻¹, computed as (S⁻¹ H P)ᵀ since P and S are symmetric.
    let hp = h * belief.cov();
    let gain = inn.factor.solve(&hp).transpose();
    let mean = belief.mean() + &gain * resid;
    let n = belief.dim();
    let a = Matrix::identity(n, n) - &gain * h;
    let cov = &a * belief.cov() * a.transpose() + &gain * r * gain.transpose();
    Ok((GaussianBelief::from_algebra(mean, cov)?, loglik))
}
