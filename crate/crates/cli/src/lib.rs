//! Command-line harness for flexagg: case and result files, seeded trajectory
//! simulation, and model comparison reports.

pub mod case_file;
pub mod cli;
pub mod comparison;
pub mod error;
pub mod result_file;
pub mod trajectory;

pub use error::{CliError, Result};

/// Rounds to 12 significant digits, the precision of every written float.
pub fn sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

pub(crate) fn sig_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| sig(*x)).collect()
}

pub(crate) fn sig_grid(v: &[Vec<f64>]) -> Vec<Vec<f64>> {
    v.iter().map(|r| sig_vec(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig(19.0 / 181.0), 0.104972375691);
        assert_eq!(sig(-2.0), -2.0);
        assert_eq!(sig(0.0), 0.0);
        assert_eq!(sig(1.0e-20 / 3.0), 3.33333333333e-21);
    }
}
