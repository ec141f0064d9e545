#![allow(dead_code)]

use clusterxy::spectrum::gap;
use clusterxy::{CouplingPoint, ParitySector};
use proptest::prelude::*;

pub fn pt(lx: f64, ly: f64, h: f64) -> CouplingPoint {
    CouplingPoint::new(lx, ly, h).unwrap()
}

pub fn sector(q: i64) -> ParitySector {
    ParitySector::from_q(q).unwrap()
}

/// Uniform point of `[-2, 2]^3` whose continuum gap is at least `min_gap`.
pub fn gapped_point(min_gap: f64) -> impl Strategy<Value = CouplingPoint> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
        .prop_map(|(x, y, h)| pt(x, y, h))
        .prop_filter("too close to a critical surface", move |p| gap(p, 1024) >= min_gap)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
