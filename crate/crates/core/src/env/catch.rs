//! Ball-catching benchmark: a robot moving along the ground tracks a
//! freely-falling ball using a noisy full-state estimate.
//!
//! State is [x_rel, y_rel, v_x, v_y] with Δt = 1 and g = 0.1:
//!
//! ```text
//! x_rel' = x_rel + (v_x - a)      y_rel' = y_rel + v_y
//! v_x'   = v_x                    v_y'   = v_y - g
//! ```
//!
//! The action a is the robot's horizontal speed, one of nine values in
//! [-0.4, 0.4] spaced 0.1 apart. The sensor observes the full state plus
//! Gaussian noise whose covariance is η · diag([0.5², 1.0², 0.75², 1.0²]);
//! the scale η multiplies the covariance (the literal reading), with a
//! squared-η variant available for sensitivity checks. Reward per step is
//! the hat function max(1 - 2|x_rel|, 0), evaluated in closed form under
//! Gaussian beliefs.

use super::{GaussianReward, LinearGaussianSystem};
use nalgebra::{DMatrix, DVector};

pub const CATCH_HORIZON: usize = 5;
const GRAVITY: f64 = 0.1;

/// Build the ball-catching system with covariance-linear noise scaling.
pub fn ball_catching(eta: f64) -> LinearGaussianSystem {
    ball_catching_scaled(eta, false)
}

/// Build the ball-catching system; `eta_squared` scales the sensor
/// covariance by η² (std.-dev. reading) instead of η (covariance reading).
pub fn ball_catching_scaled(eta: f64, eta_squared: bool) -> LinearGaussianSystem {
    assert!(eta >= 0.0, "noise scale must be nonnegative");
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    );
    let b = DMatrix::from_column_slice(4, 1, &[-1.0, 0.0, 0.0, 0.0]);
    let drift = DVector::from_vec(vec![0.0, 0.0, 0.0, -GRAVITY]);
    let scale = if eta_squared { eta * eta } else { eta };
    let noise_diag = [0.5f64 * 0.5, 1.0, 0.75 * 0.75, 1.0];
    let noise_cov = DMatrix::from_diagonal(&DVector::from_iterator(
        4,
        noise_diag.iter().map(|v| scale * v),
    ));
    let init_mean = DVector::from_vec(vec![0.0, 1.05, 0.0, 0.05]);
    let init_cov = DMatrix::from_diagonal(&DVector::from_vec(vec![
        0.01 * 0.01,
        0.1 * 0.1,
        0.2 * 0.2,
        0.1 * 0.1,
    ]));
    let actions: Vec<DVector<f64>> = (-4..=4)
        .map(|i| DVector::from_vec(vec![i as f64 * 0.1]))
        .collect();

    let sys = LinearGaussianSystem {
        a,
        b,
        drift,
        c: DMatrix::identity(4, 4),
        noise_cov,
        init_mean,
        init_cov,
        actions,
        reward: GaussianReward::HatOnCoordinate(0),
        horizon: CATCH_HORIZON,
    };
    sys.validate().expect("catch construction is always valid");
    sys
}
