use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};

/// Ordinary least squares of `log z` against `log eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub log_amplitude: f64,
    /// `log z_i - (log_amplitude + exponent log eps_i)`
    pub residuals: Vec<f64>,
    pub points: Vec<(f64, f64)>,
}

impl PowerLawFit {
    pub fn amplitude(&self) -> f64 {
        self.log_amplitude.exp()
    }

    /// Best amplitude when the exponent is held at `exponent`, i.e. the
    /// geometric mean of `z_i / eps_i^exponent`.
    pub fn amplitude_at_exponent(&self, exponent: f64) -> f64 {
        let n = self.points.len() as f64;
        let mean: f64 = self.points.iter().map(|&(e, z)| z.ln() - exponent * e.ln()).sum::<f64>() / n;
        mean.exp()
    }

    /// Residuals recomputed from the fitted line.
    pub fn recompute_residuals(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|&(e, z)| z.ln() - (self.log_amplitude + self.exponent * e.ln()))
            .collect()
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

pub const MIN_FIT_POINTS: usize = 2;

/// Fit `z = A eps^b` through positive pairs.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: points.len(),
        });
    }
    for &(e, z) in points {
        if !(e > 0.0 && e.is_finite()) {
            return Err(out_of_range("epsilon", e, "(0, inf)"));
        }
        if !(z > 0.0 && z.is_finite()) {
            return Err(out_of_range("Z", z, "(0, inf)"));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all epsilons coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let log_amplitude = my - exponent * mx;
    let mut fit = PowerLawFit {
        exponent,
        log_amplitude,
        residuals: Vec::new(),
        points: points.to_vec(),
    };
    fit.residuals = fit.recompute_residuals();
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn synthetic_square_law() {
        let pts: Vec<(f64, f64)> = (0..9).map(|i| 10f64.powf(-4.0 + 0.25 * i as f64)).map(|e| (e, 3.0 * e * e)).collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-10);
        assert!((f.amplitude() - 3.0).abs() < 1e-10);
        assert!((f.amplitude_at_exponent(2.0) - 3.0).abs() < 1e-10);
        assert!(f.max_abs_residual() < 1e-10);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(fit_power_law(&[(0.1, 1.0)]).is_err());
        assert!(fit_power_law(&[(0.1, 1.0), (0.1, 2.0)]).is_err());
        assert!(fit_power_law(&[(0.1, 1.0), (0.2, 0.0)]).is_err());
    }

    proptest! {
        #[test]
        fn recovers_exact_power_laws(b in 0.2f64..3.0, a in 0.01f64..100.0, lo in -6.0f64..-2.0) {
            let pts: Vec<(f64, f64)> = (0..7).map(|i| 10f64.powf(lo + 0.4 * i as f64)).map(|e| (e, a * e.powf(b))).collect();
            let f = fit_power_law(&pts).unwrap();
            prop_assert!((f.exponent - b).abs() < 1e-10);
            prop_assert!((f.amplitude() / a - 1.0).abs() < 1e-10);
            let again = f.recompute_residuals();
            for (r, s) in f.residuals.iter().zip(again) {
                prop_assert!((r - s).abs() <= 1e-12);
            }
        }
    }
}
