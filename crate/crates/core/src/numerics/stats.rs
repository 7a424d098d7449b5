/// Arithmetic mean; NaN for an empty slice.
pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 points.
pub fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (x.len() - 1) as f64).sqrt()
}

/// Mean and its standard error `sd / sqrt(n)`.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    (mean(x), std_dev(x) / (x.len() as f64).sqrt())
}

/// Monte Carlo estimate with standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub estimate: f64,
    pub se: f64,
}

impl Summary {
    pub fn of(x: &[f64]) -> Self {
        let (estimate, se) = mean_se(x);
        Self { estimate, se }
    }

    /// `|estimate - target| <= k * se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.estimate - target).abs() <= k * self.se
    }
}
