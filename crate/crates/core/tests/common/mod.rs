#![allow(dead_code)]

use rand::Rng;
use upsilon::{Configuration, Point};

/// Random configuration of exactly `mass` units in `[-2, 2]^dim`; with `dup`, some points repeat.
pub fn random_config<R: Rng>(rng: &mut R, dim: usize, mass: usize, dup: bool) -> Configuration {
    let mut pts: Vec<Point> = Vec::with_capacity(mass);
    for _ in 0..mass {
        if dup && !pts.is_empty() && rng.random_bool(0.2) {
            let i = rng.random_range(0..pts.len());
            pts.push(pts[i].clone());
        } else {
            pts.push(Point::new((0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap());
        }
    }
    Configuration::from_points(dim, pts).unwrap()
}

pub fn reals(xs: &[f64]) -> Configuration {
    Configuration::from_reals(xs).unwrap()
}
