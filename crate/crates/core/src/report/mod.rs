//! Run configuration, suite orchestration and report output.

pub mod config;
pub mod emit;
pub mod suites;

use num_complex::Complex64;

use crate::error::{FinslerError, Result};

pub use config::{RunConfig, Suite, SEED_ENV};
pub use emit::{emit, render, Format};
pub use suites::{exit_code, run, run_suite, Check, Status, SuiteReport};

/// Parses `re,im,re,im,...` into `n` complex numbers.
pub fn parse_complex_csv(s: &str, n: usize) -> Result<Vec<Complex64>> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| FinslerError::Config(format!("'{}' is not a number", t.trim())))
        })
        .collect::<Result<_>>()?;
    if xs.len() != 2 * n {
        return Err(FinslerError::Config(format!(
            "expected {} numbers (re,im pairs for dimension {n}), got {}",
            2 * n,
            xs.len()
        )));
    }
    Ok(xs.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_csv() {
        let z = parse_complex_csv("0.1, -0.2,3,4", 2).unwrap();
        assert_eq!(z, vec![Complex64::new(0.1, -0.2), Complex64::new(3.0, 4.0)]);
        assert!(parse_complex_csv("1,2,3", 2).is_err());
        assert!(parse_complex_csv("a,b", 1).is_err());
    }
}
