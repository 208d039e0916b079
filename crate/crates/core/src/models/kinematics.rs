//! Planar kinematics for the state `[pₓ, vₓ, p_y, v_y]`.

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::Matrix;

/// Coordinated-turn transition with turn rate `omega` over period `t`.
/// Falls back to constant velocity as `omega → 0`.
pub fn coordinated_turn(omega: f64, t: f64) -> Matrix {
    if omega.abs() < 1e-12 {
        return constant_velocity(t);
    }
    let (s, c) = (omega * t).sin_cos();
    let a = s / omega;
    let b = (1.0 - c) / omega;
    Matrix::from_row_slice(
        4,
        4,
        &[
            1.0, a, 0.0, -b, //
            0.0, c, 0.0, -s, //
            0.0, b, 1.0, a, //
            0.0, s, 0.0, c,
        ],
    )
}

pub fn constant_velocity(t: f64) -> Matrix {
    Matrix::from_row_slice(
        4,
        4,
        &[
            1.0, t, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, t, //
            0.0, 0.0, 0.0, 1.0,
        ],
    )
}

/// Continuous white-noise acceleration covariance, per axis
/// `σ_v² [[T³/3, T²/2], [T²/2, T]]`.
pub fn white_acceleration_cov(sigma_v: f64, t: f64) -> Matrix {
    let q = sigma_v * sigma_v;
    let a = q * t.powi(3) / 3.0;
    let b = q * t * t / 2.0;
    let c = q * t;
    Matrix::from_row_slice(
        4,
        4,
        &[
            a, b, 0.0, 0.0, //
            b, c, 0.0, 0.0, //
            0.0, 0.0, a, b, //
            0.0, 0.0, b, c,
        ],
    )
}

/// Position-only observation matrix.
pub fn position_observation() -> Matrix {
    Matrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0])
}

pub fn position_noise(sigma_x: f64, sigma_y: f64) -> Matrix {
    Matrix::from_row_slice(2, 2, &[sigma_x * sigma_x, 0.0, 0.0, sigma_y * sigma_y])
}
