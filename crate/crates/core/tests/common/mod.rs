#![allow(dead_code)]

use finslerlab::catalog::{default_catalog, MetricSpec};
use num_complex::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn catalog() -> Vec<MetricSpec> {
    default_catalog().iter().map(|r| r.build().unwrap()).collect()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
