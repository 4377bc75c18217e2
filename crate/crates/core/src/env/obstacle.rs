//! Obstacle-avoidance benchmark: a one-step decision problem where the robot
//! picks one of ten motion primitives after reading a noisy depth scan.
//!
//! The state is the 12-dimensional vector of six obstacle-center positions,
//! drawn uniformly from a band in front of the robot. The sensor casts
//! `n_rays` rays over a 90° field of view; each ray independently misses
//! with probability `p_miss` (reporting the maximum range) and otherwise
//! reports the true distance plus N(0, η²) noise, clamped to [0, max_range]
//! with the clipped probability mass lumped into atoms at the two ends so
//! the per-ray density stays normalized. Reward is 1 when the chosen
//! primitive is collision-free and 0 otherwise.

use super::SampledEnvironment;
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const N_OBSTACLES: usize = 6;
const DEFAULT_OBSTACLE_RADIUS: f64 = 0.26;
const DEFAULT_PRIMITIVE_COUNT: usize = 10;
const DEFAULT_PRIMITIVE_LENGTH: f64 = 1.3;

const WORKSPACE_X: (f64, f64) = (-1.0, 1.0);
const WORKSPACE_Y: (f64, f64) = (-0.1, 1.2);
const SPAWN_X: (f64, f64) = (-1.0, 1.0);
const SPAWN_Y: (f64, f64) = (0.9, 1.1);

/// Field of view half-angle (rays and primitive headings both fan ±45°).
const FAN_HALF_ANGLE: f64 = std::f64::consts::FRAC_PI_4;

/// Obstacle-center positions for one sampled scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub centers: Vec<(f64, f64)>,
}

/// A constant-curvature path of fixed length starting at the origin heading
/// straight up (+y). `turn` is the total heading change over the arc.
#[derive(Debug, Clone, Copy)]
pub struct ArcPrimitive {
    pub length: f64,
    pub turn: f64,
}

impl ArcPrimitive {
    fn curvature(&self) -> f64 {
        self.turn / self.length
    }

    /// Point at arc length s (heading measured from the +y axis).
    pub fn point_at(&self, s: f64) -> (f64, f64) {
        let k = self.curvature();
        if k.abs() < 1e-9 {
            (0.0, s)
        } else {
            ((1.0 - (k * s).cos()) / k, (k * s).sin() / k)
        }
    }

    /// Exact distance from a point to the arc.
    pub fn distance_to_point(&self, p: (f64, f64)) -> f64 {
        let k = self.curvature();
        if k.abs() < 1e-9 {
            // Straight segment from (0,0) to (0,length).
            let t = p.1.clamp(0.0, self.length);
            return (p.0 * p.0 + (p.1 - t) * (p.1 - t)).sqrt();
        }
        // Arc of the circle centered at (1/k, 0) with radius 1/|k|. Measured
        // from the center, the point at arc length s sits at angle π - k·s
        // for k > 0 (start angle π) and at -k·s for k < 0 (start angle 0).
        let center = (1.0 / k, 0.0);
        let radius = 1.0 / k.abs();
        let (dx, dy) = (p.0 - center.0, p.1 - center.1);
        let dist_center = (dx * dx + dy * dy).sqrt();
        let beta = dy.atan2(dx);
        // Angle interval swept by s ∈ [0, length].
        let (lo, hi) = if k > 0.0 {
            (std::f64::consts::PI - self.turn, std::f64::consts::PI)
        } else {
            (0.0, -self.turn)
        };
        let inside = beta >= lo - 1e-12 && beta <= hi + 1e-12;
        if inside {
            (dist_center - radius).abs()
        } else {
            let start = self.point_at(0.0);
            let end = self.point_at(self.length);
            let d2 = |q: (f64, f64)| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
            d2(start).min(d2(end))
        }
    }
}

/// The obstacle world. Immutable after construction; all samplers take an
/// explicit RNG stream.
#[derive(Debug, Clone)]
pub struct ObstacleWorld {
    pub n_rays: usize,
    pub eta: f64,
    pub p_miss: f64,
    pub max_range: f64,
    pub obstacle_radius: f64,
    pub primitives: Vec<ArcPrimitive>,
    pub ray_angles: Vec<f64>,
    pub seed: u64,
}

/// Build the obstacle world with default geometry (six obstacles, ten
/// constant-curvature primitives of length 1.3 fanned over ±45°).
pub fn obstacle_world(
    n_rays: usize,
    eta: f64,
    p_miss: f64,
    max_range: f64,
    rng_seed: u64,
) -> Result<ObstacleWorld> {
    if n_rays < 1 {
        return Err(Error::Domain("n_rays must be at least 1".into()));
    }
    if eta <= 0.0 || eta.is_nan() {
        return Err(Error::Domain(format!("eta = {eta} must be positive")));
    }
    if !(0.0..1.0).contains(&p_miss) {
        return Err(Error::Domain(format!("p_miss = {p_miss} outside [0,1)")));
    }
    if max_range <= 0.0 || max_range.is_nan() {
        return Err(Error::Domain(format!(
            "max_range = {max_range} must be positive"
        )));
    }
    let fan = |count: usize, i: usize| {
        if count == 1 {
            0.0
        } else {
            -FAN_HALF_ANGLE + 2.0 * FAN_HALF_ANGLE * i as f64 / (count - 1) as f64
        }
    };
    let primitives = (0..DEFAULT_PRIMITIVE_COUNT)
        .map(|i| ArcPrimitive {
            length: DEFAULT_PRIMITIVE_LENGTH,
            turn: fan(DEFAULT_PRIMITIVE_COUNT, i),
        })
        .collect();
    let ray_angles = (0..n_rays).map(|i| fan(n_rays, i)).collect();
    Ok(ObstacleWorld {
        n_rays,
        eta,
        p_miss,
        max_range,
        obstacle_radius: DEFAULT_OBSTACLE_RADIUS,
        primitives,
        ray_angles,
        seed: rng_seed,
    })
}

impl ObstacleWorld {
    pub fn with_obstacle_radius(mut self, radius: f64) -> Self {
        self.obstacle_radius = radius;
        self
    }

    pub fn sample_scene(&self, rng: &mut Rng) -> Scene {
        let centers = (0..N_OBSTACLES)
            .map(|_| {
                (
                    rng.uniform_in(SPAWN_X.0, SPAWN_X.1),
                    rng.uniform_in(SPAWN_Y.0, SPAWN_Y.1),
                )
            })
            .collect();
        Scene { centers }
    }

    /// True distance along a ray (unit direction from angle off +y) to the
    /// nearest obstacle or wall, capped at max_range.
    pub fn true_distance(&self, scene: &Scene, angle: f64) -> f64 {
        let dir = (angle.sin(), angle.cos());
        let mut best = self.max_range;

        // Workspace walls.
        if dir.0 > 1e-12 {
            best = best.min((WORKSPACE_X.1 - 0.0) / dir.0);
        } else if dir.0 < -1e-12 {
            best = best.min((WORKSPACE_X.0 - 0.0) / dir.0);
        }
        if dir.1 > 1e-12 {
            best = best.min((WORKSPACE_Y.1 - 0.0) / dir.1);
        }

        // Obstacle circles: solve |t·d - c|² = r².
        for &(cx, cy) in &scene.centers {
            let proj = dir.0 * cx + dir.1 * cy;
            let disc =
                proj * proj - (cx * cx + cy * cy - self.obstacle_radius * self.obstacle_radius);
            if disc >= 0.0 {
                let t = proj - disc.sqrt();
                if t > 0.0 {
                    best = best.min(t);
                }
            }
        }
        best.max(0.0)
    }

    pub fn true_distances(&self, scene: &Scene) -> Vec<f64> {
        self.ray_angles
            .iter()
            .map(|&a| self.true_distance(scene, a))
            .collect()
    }

    /// Whether the primitive's path touches any obstacle disc.
    pub fn collides(&self, scene: &Scene, primitive: usize) -> bool {
        let arc = &self.primitives[primitive];
        scene
            .centers
            .iter()
            .any(|&c| arc.distance_to_point(c) <= self.obstacle_radius)
    }

    fn log_density_one_ray(&self, reading: f64, true_dist: f64) -> f64 {
        let z = |x: f64| (x - true_dist) / self.eta;
        let phi = |x: f64| 0.5 * (1.0 + libm::erf(z(x) / std::f64::consts::SQRT_2));
        if reading >= self.max_range {
            // Atom: miss probability plus the Gaussian mass above max_range.
            (self.p_miss + (1.0 - self.p_miss) * (1.0 - phi(self.max_range))).ln()
        } else if reading <= 0.0 {
            // Atom at zero: Gaussian mass below zero.
            ((1.0 - self.p_miss) * phi(0.0)).ln()
        } else {
            let zr = z(reading);
            (1.0 - self.p_miss).ln()
                - 0.5 * zr * zr
                - (self.eta * (2.0 * std::f64::consts::PI).sqrt()).ln()
        }
    }

    /// Per-ray atom and density masses integrate to one; exposed for tests.
    pub fn ray_density_total_mass(&self, true_dist: f64, quadrature_points: usize) -> f64 {
        let z = |x: f64| (x - true_dist) / self.eta;
        let phi = |x: f64| 0.5 * (1.0 + libm::erf(z(x) / std::f64::consts::SQRT_2));
        let atom_max = self.p_miss + (1.0 - self.p_miss) * (1.0 - phi(self.max_range));
        let atom_zero = (1.0 - self.p_miss) * phi(0.0);
        let pdf = |x: f64| {
            let zx = z(x);
            (1.0 - self.p_miss) * (-0.5 * zx * zx).exp()
                / (self.eta * (2.0 * std::f64::consts::PI).sqrt())
        };
        // Trapezoid rule over the continuous part (0, max_range).
        let n = quadrature_points;
        let h = self.max_range / n as f64;
        let mut integral = 0.5 * (pdf(0.0) + pdf(self.max_range));
        for i in 1..n {
            integral += pdf(i as f64 * h);
        }
        integral * h + atom_max + atom_zero
    }
}

impl SampledEnvironment for ObstacleWorld {
    type State = Scene;
    type Obs = Vec<f64>;

    fn horizon(&self) -> usize {
        1
    }

    fn action_count(&self) -> usize {
        self.primitives.len()
    }

    fn sample_state(&self, _prefix_actions: &[usize], rng: &mut Rng) -> Scene {
        self.sample_scene(rng)
    }

    fn sample_observation(&self, state: &Scene, rng: &mut Rng) -> Vec<f64> {
        self.ray_angles
            .iter()
            .map(|&angle| {
                let d = self.true_distance(state, angle);
                if rng.bernoulli(self.p_miss) {
                    self.max_range
                } else {
                    (d + self.eta * rng.normal()).clamp(0.0, self.max_range)
                }
            })
            .collect()
    }

    fn log_density(&self, obs: &Vec<f64>, state: &Scene) -> f64 {
        obs.iter()
            .zip(self.ray_angles.iter())
            .map(|(&reading, &angle)| {
                self.log_density_one_ray(reading, self.true_distance(state, angle))
            })
            .sum()
    }

    fn reward(&self, state: &Scene, action: usize) -> f64 {
        if self.collides(state, action) {
            0.0
        } else {
            1.0
        }
    }
}
