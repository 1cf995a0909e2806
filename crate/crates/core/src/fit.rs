use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares line through (x, log y).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub label: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope from the regression residuals.
    pub slope_se: f64,
    /// Inclusive x range the fit used.
    pub window: (f64, f64),
    pub n_points: usize,
}

impl DecayFit {
    /// Exponential decay rate, `-slope`.
    pub fn rate(&self) -> f64 {
        -self.slope
    }
}

/// Fits `log y = intercept + slope * x` over points with x inside `window`
/// (all points when `None`).
pub fn fit_exponential(xs: &[f64], ys: &[f64], window: Option<(f64, f64)>) -> Result<DecayFit> {
    if xs.len() != ys.len() {
        return Err(Error::DegenerateFit(format!("{} x values vs {} y values", xs.len(), ys.len())));
    }
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut px = Vec::new();
    let mut py = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if x < lo || x > hi {
            continue;
        }
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::DegenerateFit(format!("non-positive value {y} at x = {x}")));
        }
        px.push(x);
        py.push(y.ln());
    }
    if px.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} points in window", px.len())));
    }
    let n = px.len() as f64;
    let mx = px.iter().sum::<f64>() / n;
    let my = py.iter().sum::<f64>() / n;
    let sxx: f64 = px.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all x values equal".into()));
    }
    let sxy: f64 = px.iter().zip(&py).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = py.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = px.iter().zip(&py).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res <= 1e-24 {
        1.0
    } else {
        0.0
    };
    let slope_se = if px.len() > 2 { (ss_res / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    let window = (
        px.iter().cloned().fold(f64::INFINITY, f64::min),
        px.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(DecayFit {
        label: String::new(),
        slope,
        intercept,
        r_squared,
        slope_se,
        window,
        n_points: px.len(),
    })
}

/// Plain least-squares slope of y against x (no log transform).
pub fn linear_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::DegenerateFit("need at least two paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all x values equal".into()));
    }
    let slope = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_exponential() {
        let xs: Vec<f64> = (0..=10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (-0.3 * x).exp()).collect();
        let f = fit_exponential(&xs, &ys, None).unwrap();
        assert!((f.rate() - 0.3).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(f.n_points, 11);
    }

    #[test]
    fn constant_has_zero_rate() {
        let xs: Vec<f64> = (0..6).map(f64::from).collect();
        let f = fit_exponential(&xs, &[2.0; 6], None).unwrap();
        assert!(f.rate().abs() < 1e-15);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn noisy_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..=10).map(f64::from).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| (-0.3 * x).exp() * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0)))
            .collect();
        let f = fit_exponential(&xs, &ys, None).unwrap();
        assert!((f.rate() - 0.3).abs() < 0.02);
    }

    #[test]
    fn window_and_degenerate_cases() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [1.0, 0.5, 0.25, 0.125, 0.0625];
        let f = fit_exponential(&xs, &ys, Some((1.0, 3.0))).unwrap();
        assert_eq!(f.window, (1.0, 3.0));
        assert_eq!(f.n_points, 3);
        assert!(fit_exponential(&xs, &ys, Some((0.0, 1.0))).is_err());
        assert!(fit_exponential(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0], None).is_err());
        assert!(fit_exponential(&xs, &[1.0, 0.0, 1.0, 1.0, 1.0], None).is_err());
    }
}
