use std::io::Write;

use super::LambdaMeasure;
use crate::error::{Error, Result};

/// Dense table of `λ_{b,j}` for `2 ≤ j ≤ b ≤ b_max`.
#[derive(Debug, Clone)]
pub struct RateTable {
    b_max: usize,
    rows: Vec<Vec<f64>>,
}

impl RateTable {
    pub fn new(lambda: &LambdaMeasure, b_max: usize) -> Result<Self> {
        if b_max < 2 {
            return Err(Error::InvalidArgument(format!("b_max must be at least 2, got {b_max}")));
        }
        let rows = (2..=b_max)
            .map(|b| (2..=b).map(|j| lambda.lambda_rate(b, j)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { b_max, rows })
    }

    pub fn b_max(&self) -> usize {
        self.b_max
    }

    pub fn get(&self, b: usize, j: usize) -> Option<f64> {
        if j < 2 || j > b || b > self.b_max {
            return None;
        }
        Some(self.rows[b - 2][j - 2])
    }

    /// Largest violation of `λ_{b,j} = λ_{b+1,j} + λ_{b+1,j+1}` over the table.
    pub fn max_consistency_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for b in 2..self.b_max {
            for j in 2..=b {
                let lhs = self.rows[b - 2][j - 2];
                let rhs = self.rows[b - 1][j - 2] + self.rows[b - 1][j - 1];
                worst = worst.max((lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE));
            }
        }
        worst
    }

    /// CSV with header `b,j,lambda`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "b,j,lambda")?;
        for (i, row) in self.rows.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                writeln!(out, "{},{},{:.17e}", i + 2, k + 2, v)?;
            }
        }
        Ok(())
    }
}
