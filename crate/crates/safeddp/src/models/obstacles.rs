//! Random spherical obstacle courses for the quadrotor benchmark.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::barrier::SafeSetFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleCourse {
    pub obstacles: Vec<Sphere>,
    pub start: [f64; 3],
    pub target: [f64; 3],
}

/// Placement parameters for a random course.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CourseBounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub radius_min: f64,
    pub radius_max: f64,
    /// Required distance between an obstacle surface and start/target.
    pub clearance: f64,
}

impl Default for CourseBounds {
    fn default() -> Self {
        CourseBounds {
            min: [-4.0, -4.0, -1.5],
            max: [9.0, 2.0, 2.5],
            radius_min: 0.5,
            radius_max: 1.2,
            clearance: 1.5,
        }
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Deterministically build a course from a seed, rejecting obstacles that
/// crowd the start or target.
pub fn build_obstacle_course(
    seed: u64,
    count: usize,
    start: [f64; 3],
    target: [f64; 3],
    bounds: &CourseBounds,
) -> Result<ObstacleCourse> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obstacles = Vec::with_capacity(count);
    let max_attempts = 200 * count.max(1);
    let mut attempts = 0;
    while obstacles.len() < count {
        if attempts >= max_attempts {
            return Err(Error::ObstaclePlacement { attempts });
        }
        attempts += 1;
        let center = [
            rng.gen_range(bounds.min[0]..bounds.max[0]),
            rng.gen_range(bounds.min[1]..bounds.max[1]),
            rng.gen_range(bounds.min[2]..bounds.max[2]),
        ];
        let radius = rng.gen_range(bounds.radius_min..bounds.radius_max);
        if dist(center, start) < radius + bounds.clearance
            || dist(center, target) < radius + bounds.clearance
        {
            continue;
        }
        obstacles.push(Sphere { center, radius });
    }
    Ok(ObstacleCourse {
        obstacles,
        start,
        target,
    })
}

impl ObstacleCourse {
    /// Per-obstacle safe-set functions over a state whose first three
    /// components are the position.
    pub fn constraints(&self, state_dim: usize) -> Vec<SafeSetFunction> {
        self.obstacles
            .iter()
            .enumerate()
            .map(|(j, o)| {
                SafeSetFunction::sphere_obstacle(
                    state_dim,
                    o.center,
                    o.radius,
                    format!("obstacle {j}"),
                )
            })
            .collect()
    }

    pub fn min_h(&self, position: &[f64]) -> f64 {
        self.obstacles
            .iter()
            .map(|o| {
                dist([position[0], position[1], position[2]], o.center).powi(2)
                    - o.radius * o.radius
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    const START: [f64; 3] = [10.0, 0.0, -1.0];
    const TARGET: [f64; 3] = [-5.0, -3.0, 2.0];

    #[test]
    fn fixed_seed_is_deterministic() {
        let a = build_obstacle_course(7, 6, START, TARGET, &CourseBounds::default()).unwrap();
        let b = build_obstacle_course(7, 6, START, TARGET, &CourseBounds::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn start_and_target_are_strictly_safe() {
        let course = build_obstacle_course(3, 8, START, TARGET, &CourseBounds::default()).unwrap();
        assert!(course.min_h(&START) > 0.0);
        assert!(course.min_h(&TARGET) > 0.0);
        let constraints = course.constraints(12);
        let s = DVector::from_vec(vec![
            START[0], START[1], START[2], 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ]);
        for c in &constraints {
            assert!(c.value(&s) > 0.0, "{} unsafe at start", c.label);
        }
    }

    #[test]
    fn empty_course_is_always_safe() {
        let course = build_obstacle_course(1, 0, START, TARGET, &CourseBounds::default()).unwrap();
        assert!(course.obstacles.is_empty());
        assert_eq!(course.min_h(&[0.0, 0.0, 0.0]), f64::INFINITY);
    }
}
