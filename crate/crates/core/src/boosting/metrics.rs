//! Regression evaluation metrics.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("metrics need at least one sample")]
    Empty,
    #[error("rmsle requires all values > -1, got {0}")]
    RmsleDomain(f64),
}

fn check(y: &[f64], y_hat: &[f64]) -> Result<(), MetricsError> {
    if y.len() != y_hat.len() {
        return Err(MetricsError::LengthMismatch(y.len(), y_hat.len()));
    }
    if y.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(y: &[f64], y_hat: &[f64]) -> Result<f64, MetricsError> {
    check(y, y_hat)?;
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

/// Root mean squared error.
pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64, MetricsError> {
    check(y, y_hat)?;
    let mse = y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / y.len() as f64;
    Ok(mse.sqrt())
}

/// Root mean squared log error, `log(y + 1) - log(y_hat + 1)` per sample.
pub fn rmsle(y: &[f64], y_hat: &[f64]) -> Result<f64, MetricsError> {
    check(y, y_hat)?;
    let mut acc = 0.0;
    for (&a, &b) in y.iter().zip(y_hat) {
        if a <= -1.0 {
            return Err(MetricsError::RmsleDomain(a));
        }
        if b <= -1.0 {
            return Err(MetricsError::RmsleDomain(b));
        }
        let d = (a + 1.0).ln() - (b + 1.0).ln();
        acc += d * d;
    }
    Ok((acc / y.len() as f64).sqrt())
}
