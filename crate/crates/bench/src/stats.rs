//! Summaries of timing samples.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Order statistics of a sample, in the sample's unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub p5: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linear-interpolated percentile of sorted data, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let rank = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (rank.floor() as usize, rank.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

impl Summary {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Summary {
            count: sorted.len(),
            min: sorted[0],
            p5: percentile(&sorted, 0.05),
            median: percentile(&sorted, 0.5),
            p95: percentile(&sorted, 0.95),
            max: sorted[sorted.len() - 1],
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        })
    }
}

/// Least-squares line `y = intercept + slope * x` with a confidence
/// interval on the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub slope_ci: (f64, f64),
    pub confidence: f64,
    pub errors: ErrorModel,
}

/// How the slope's standard error is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorModel {
    /// Equal residual variance at every `x`.
    Classical,
    /// HC3 sandwich estimator; residual variance may grow with `x`, as
    /// timing noise does with run length.
    Hc3,
}

impl Regression {
    pub fn slope_ci_contains(&self, value: f64) -> bool {
        self.slope_ci.0 <= value && value <= self.slope_ci.1
    }
}

/// Ordinary least squares with a two-sided Student-t interval on the slope.
/// Needs at least three points and two distinct `x` values.
pub fn regress(xs: &[f64], ys: &[f64], confidence: f64, errors: ErrorModel) -> Option<Regression> {
    let n = xs.len();
    if n != ys.len() || n < 3 {
        return None;
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residuals = xs.iter().zip(ys).map(|(x, y)| (*x, y - intercept - slope * x));
    let dof = nf - 2.0;
    let slope_stderr = match errors {
        ErrorModel::Classical => {
            let residual_ss: f64 = residuals.map(|(_, e)| e * e).sum();
            (residual_ss / dof / sxx).sqrt()
        }
        ErrorModel::Hc3 => {
            let meat: f64 = residuals
                .map(|(x, e)| {
                    let leverage = 1.0 / nf + (x - mean_x).powi(2) / sxx;
                    (x - mean_x).powi(2) * (e / (1.0 - leverage)).powi(2)
                })
                .sum();
            meat.sqrt() / sxx
        }
    };
    let t = StudentsT::new(0.0, 1.0, dof)
        .ok()?
        .inverse_cdf(0.5 + confidence / 2.0);
    Some(Regression {
        slope,
        intercept,
        slope_stderr,
        slope_ci: (slope - t * slope_stderr, slope + t * slope_stderr),
        confidence,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentiles_interpolate() {
        let sorted = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&sorted, 0.0), 1.0);
        assert_eq!(percentile(&sorted, 0.5), 2.5);
        assert_eq!(percentile(&sorted, 1.0), 4.0);
        let s = Summary::of(&[5.0, 1.0, 3.0]).unwrap();
        assert_eq!((s.min, s.median, s.max, s.mean), (1.0, 3.0, 5.0, 3.0));
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn exact_line_has_zero_width_interval() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let r = regress(&xs, &ys, 0.95, ErrorModel::Classical).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-12);
        assert!((r.intercept - 1.0).abs() < 1e-12);
        assert!(r.slope_stderr.abs() < 1e-12);
        assert!(!r.slope_ci_contains(0.0));
    }

    #[test]
    fn textbook_interval() {
        // Fit y = 0.2 + x: sxx = 40, rss = 4.8, dof = 3,
        // stderr = sqrt(4.8 / 3 / 40) = 0.2, t(0.975, 3) = 3.182446.
        let xs = [0.0, 2.0, 4.0, 6.0, 8.0];
        let ys = [1.0, 1.0, 5.0, 5.0, 9.0];
        let r = regress(&xs, &ys, 0.95, ErrorModel::Classical).unwrap();
        let stderr = 0.2;
        assert!((r.slope - 1.0).abs() < 1e-12);
        assert!((r.intercept - 0.2).abs() < 1e-12);
        assert!((r.slope_stderr - stderr).abs() < 1e-12);
        assert!((r.slope_ci.1 - (1.0 + 3.182446 * stderr)).abs() < 1e-5);
    }

    #[test]
    fn hc3_matches_hand_computation() {
        // Same data as above. Leverages 0.6, 0.3, 0.2, 0.3, 0.6; residuals
        // 0.8, -1.2, 0.8, -1.2, 0.8.
        let xs = [0.0, 2.0, 4.0, 6.0, 8.0];
        let ys = [1.0, 1.0, 5.0, 5.0, 9.0];
        let r = regress(&xs, &ys, 0.95, ErrorModel::Hc3).unwrap();
        let meat = 16.0 * (0.8f64 / 0.4).powi(2) * 2.0 + 4.0 * (1.2f64 / 0.7).powi(2) * 2.0;
        assert!((r.slope_stderr - meat.sqrt() / 40.0).abs() < 1e-12);
        assert_eq!(r.errors, ErrorModel::Hc3);
    }

    #[test]
    fn hc3_tolerates_noise_growing_with_x() {
        // Flat line, residual spread proportional to x.
        let xs: Vec<f64> = [1.0, 10.0, 100.0, 1000.0].iter().flat_map(|x| [*x; 4]).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| if i % 2 == 0 { *x } else { -*x })
            .collect();
        let r = regress(&xs, &ys, 0.95, ErrorModel::Hc3).unwrap();
        assert!(r.slope.abs() < 1e-12);
        assert!(r.slope_ci_contains(0.0));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(regress(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], 0.95, ErrorModel::Hc3).is_none());
        assert!(regress(&[1.0, 2.0], &[1.0, 2.0], 0.95, ErrorModel::Hc3).is_none());
    }
}
