//! Small estimators shared by the Monte Carlo modules.

use std::io::Write;

use serde::Serialize;

/// A Monte Carlo estimate. `lower`/`upper` bracket the estimate by counting
/// censored samples as misses and hits; they coincide with `estimate` when
/// nothing was censored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithError {
    pub n: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub lower: f64,
    pub upper: f64,
    /// Regeneration cycles or replicates used.
    pub cycles: u64,
    pub censored: u64,
}

impl EstimateWithError {
    pub fn exact(n: usize, value: f64) -> Self {
        Self { n, estimate: value, stderr: 0.0, lower: value, upper: value, cycles: 0, censored: 0 }
    }

    /// `|estimate - target|` in units of the standard error; infinite when
    /// the error is zero and the values differ.
    pub fn z_score(&self, target: f64) -> f64 {
        z_score(self.estimate, target, self.stderr)
    }
}

pub fn z_score(a: f64, b: f64, se: f64) -> f64 {
    let gap = (a - b).abs();
    if gap == 0.0 {
        0.0
    } else if se > 0.0 {
        gap / se
    } else {
        f64::INFINITY
    }
}

/// CSV with header `n,estimate,stderr,lower,upper,cycles`.
pub fn write_estimates_csv<W: Write>(estimates: &[EstimateWithError], mut out: W) -> std::io::Result<()> {
    writeln!(out, "n,estimate,stderr,lower,upper,cycles")?;
    for e in estimates {
        writeln!(
            out,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            e.n, e.estimate, e.stderr, e.lower, e.upper, e.cycles
        )?;
    }
    Ok(())
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Renewal-reward ratio `Σ Y_i / Σ T_i` over iid cycles with its delta-method
/// standard error `sqrt(Σ (Y_i - r T_i)²) / Σ T_i · sqrt(n/(n-1))`.
pub fn ratio_estimate(rewards: &[f64], lengths: &[f64]) -> (f64, f64) {
    assert_eq!(rewards.len(), lengths.len());
    let n = rewards.len();
    let total_t: f64 = lengths.iter().sum();
    let ratio = rewards.iter().sum::<f64>() / total_t;
    if n < 2 {
        return (ratio, f64::INFINITY);
    }
    let ss: f64 = rewards.iter().zip(lengths).map(|(y, t)| (y - ratio * t).powi(2)).sum();
    let se = ss.sqrt() / total_t * (n as f64 / (n - 1) as f64).sqrt();
    (ratio, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr_small_sample() {
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sample variance 5/3, divided by 4
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ratio_of_proportional_cycles_has_zero_error() {
        let (r, se) = ratio_estimate(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]);
        assert_eq!(r, 0.5);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn z_scores() {
        assert_eq!(z_score(1.0, 1.0, 0.0), 0.0);
        assert!(z_score(1.0, 2.0, 0.0).is_infinite());
        assert_eq!(z_score(1.0, 2.0, 0.5), 2.0);
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_estimates_csv(&[EstimateWithError::exact(3, 0.25)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,estimate,stderr,lower,upper,cycles\n3,"));
    }
}
