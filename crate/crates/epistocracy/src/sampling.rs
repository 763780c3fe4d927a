//! Space-filling initialization (Latin hypercube) and box clamping.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::core::Bounds;
use crate::error::{Error, Result};

/// Latin hypercube plan: `samples` points over `bounds`, with exactly one
/// point in each of `samples` equal-width strata along every dimension.
#[derive(Clone, Debug)]
pub struct LhsPlan {
    samples: usize,
    bounds: Bounds,
}

impl LhsPlan {
    pub fn new(samples: usize, bounds: Bounds) -> Result<Self> {
        if samples == 0 {
            return Err(Error::config("a sampling plan needs at least one sample"));
        }
        Ok(Self { samples, bounds })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }
}

/// Draw the plan: per dimension, one uniform point inside each stratum, with
/// an independent random permutation assigning strata to samples. The result
/// depends only on the `rng` state, so a fixed `(seed, stream)` reproduces it
/// bit for bit.
pub fn lhs_sample(plan: &LhsPlan, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = plan.samples;
    let dim = plan.bounds.dimension();
    let mut points = vec![vec![0.0; dim]; n];
    for d in 0..dim {
        let lower = plan.bounds.lower()[d];
        let width = plan.bounds.range(d) / n as f64;
        let mut column: Vec<f64> = (0..n)
            .map(|k| lower + (k as f64 + rng.random::<f64>()) * width)
            .collect();
        column.shuffle(rng);
        for (point, value) in points.iter_mut().zip(column) {
            point[d] = value;
        }
    }
    points
}

/// Componentwise clamp into the box; interior points come back unchanged.
pub fn clamp_to_bounds(x: &[f64], bounds: &Bounds) -> Vec<f64> {
    let mut out = x.to_vec();
    clamp_in_place(&mut out, bounds);
    out
}

pub fn clamp_in_place(x: &mut [f64], bounds: &Bounds) {
    for (d, v) in x.iter_mut().enumerate() {
        *v = v.clamp(bounds.lower()[d], bounds.upper()[d]);
    }
}

/// Stratum index of `value` along dimension `d` of `bounds`, for `n` strata.
/// Used by occupancy checks; clamps the boundary case into the last stratum.
pub fn stratum_index(value: f64, bounds: &Bounds, d: usize, n: usize) -> usize {
    let t = (value - bounds.lower()[d]) / bounds.range(d);
    ((t * n as f64).floor() as usize).min(n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::RngStream;
    use proptest::prelude::*;

    fn occupancy(points: &[Vec<f64>], bounds: &Bounds, d: usize) -> Vec<usize> {
        let n = points.len();
        let mut histogram = vec![0usize; n];
        for p in points {
            histogram[stratum_index(p[d], bounds, d, n)] += 1;
        }
        histogram
    }

    #[test]
    fn one_point_per_quartile() {
        let bounds = Bounds::new(vec![0.0], vec![1.0]).unwrap();
        let plan = LhsPlan::new(4, bounds.clone()).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        let points = lhs_sample(&plan, &mut rng);
        assert_eq!(occupancy(&points, &bounds, 0), vec![1, 1, 1, 1]);
    }

    #[test]
    fn single_sample_lands_in_bounds() {
        let bounds = Bounds::symmetric(2.0, 3).unwrap();
        let plan = LhsPlan::new(1, bounds.clone()).unwrap();
        let mut rng = RngStream::new(2, 0).rng();
        let points = lhs_sample(&plan, &mut rng);
        assert_eq!(points.len(), 1);
        assert!(bounds.contains(&points[0]));
    }

    #[test]
    fn every_stratum_occupied_once_in_both_dimensions() {
        let bounds = Bounds::symmetric(512.0, 2).unwrap();
        let plan = LhsPlan::new(100, bounds.clone()).unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        let points = lhs_sample(&plan, &mut rng);
        for d in 0..2 {
            assert_eq!(occupancy(&points, &bounds, d), vec![1; 100]);
        }
    }

    #[test]
    fn identical_streams_reproduce_the_sample() {
        let bounds = Bounds::symmetric(5.0, 4).unwrap();
        let plan = LhsPlan::new(17, bounds).unwrap();
        let a = lhs_sample(&plan, &mut RngStream::new(9, 5).rng());
        let b = lhs_sample(&plan, &mut RngStream::new(9, 5).rng());
        assert_eq!(a, b);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(LhsPlan::new(0, Bounds::symmetric(1.0, 1).unwrap()).is_err());
    }

    #[test]
    fn clamp_examples() {
        let bounds = Bounds::symmetric(5.0, 2).unwrap();
        assert_eq!(clamp_to_bounds(&[7.0, 0.0], &bounds), vec![5.0, 0.0]);
        assert_eq!(clamp_to_bounds(&[-9.0, 3.0], &bounds), vec![-5.0, 3.0]);
        assert_eq!(clamp_to_bounds(&[1.0, -2.0], &bounds), vec![1.0, -2.0]);
    }

    proptest! {
        #[test]
        fn stratification_holds_for_random_plans(
            samples in 1usize..40,
            dim in 1usize..6,
            seed in 0u64..1000,
            half in 0.5f64..100.0,
        ) {
            let bounds = Bounds::symmetric(half, dim).unwrap();
            let plan = LhsPlan::new(samples, bounds.clone()).unwrap();
            let mut rng = RngStream::new(seed, 0).rng();
            let points = lhs_sample(&plan, &mut rng);
            for p in &points {
                prop_assert!(bounds.contains(p));
            }
            for d in 0..dim {
                prop_assert_eq!(occupancy(&points, &bounds, d), vec![1; samples]);
            }
        }

        #[test]
        fn clamping_is_idempotent_and_confining(
            x in proptest::collection::vec(-1e3f64..1e3, 3),
            half in 0.5f64..50.0,
        ) {
            let bounds = Bounds::symmetric(half, 3).unwrap();
            let once = clamp_to_bounds(&x, &bounds);
            prop_assert!(bounds.contains(&once));
            prop_assert_eq!(clamp_to_bounds(&once, &bounds), once.clone());
            if bounds.contains(&x) {
                prop_assert_eq!(once, x);
            }
        }
    }
}
