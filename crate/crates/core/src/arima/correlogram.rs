use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Z95;

/// Sample ACF or PACF up to some lag, with the white-noise significance band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlogram {
    /// `coefficients[k]` is the value at lag `k`; lag 0 is always 1.
    pub coefficients: Vec<f64>,
    pub n: usize,
    /// `1.96 / sqrt(n)`.
    pub significance_band: f64,
}

impl Correlogram {
    pub fn max_lag(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn lags(&self) -> impl Iterator<Item = usize> {
        0..self.coefficients.len()
    }

    pub fn is_significant(&self, lag: usize) -> bool {
        self.coefficients[lag].abs() > self.significance_band
    }

    /// Largest `l` such that every lag in `1..=l` is significant.
    pub fn significant_run(&self) -> usize {
        (1..=self.max_lag())
            .take_while(|&k| self.is_significant(k))
            .count()
    }
}

fn check_lag(n: usize, max_lag: usize) -> Result<()> {
    if max_lag == 0 || n <= max_lag {
        return Err(Error::InvalidInput(format!(
            "need series length > max_lag >= 1 (length {n}, max_lag {max_lag})"
        )));
    }
    Ok(())
}

/// Sample autocorrelation with the biased (divide by n) autocovariance.
pub fn acf(values: &[f64], max_lag: usize) -> Result<Correlogram> {
    let n = values.len();
    check_lag(n, max_lag)?;
    let mean = values.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::ZeroVariance);
    }
    let coefficients = (0..=max_lag)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                dev.iter().zip(&dev[k..]).map(|(a, b)| a * b).sum::<f64>() / denom
            }
        })
        .collect();
    Ok(Correlogram {
        coefficients,
        n,
        significance_band: Z95 / (n as f64).sqrt(),
    })
}

/// Partial autocorrelation by the Durbin-Levinson recursion over [`acf`].
pub fn pacf(values: &[f64], max_lag: usize) -> Result<Correlogram> {
    let r = acf(values, max_lag)?;
    let coefficients = durbin_levinson(&r.coefficients)?;
    Ok(Correlogram { coefficients, ..r })
}

/// Partial autocorrelations from autocorrelations `r[0..=L]` (`r[0] == 1`).
pub(crate) fn durbin_levinson(r: &[f64]) -> Result<Vec<f64>> {
    let max_lag = r.len() - 1;
    let mut out = Vec::with_capacity(r.len());
    out.push(1.0);
    let mut phi: Vec<f64> = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let num = r[k] - (1..k).map(|j| phi[j - 1] * r[k - j]).sum::<f64>();
        let den = 1.0 - (1..k).map(|j| phi[j - 1] * r[j]).sum::<f64>();
        let pkk = num / den;
        if !pkk.is_finite() || pkk.abs() > 1.0 + 1e-6 {
            return Err(Error::Divergence { lag: k, value: pkk });
        }
        let next: Vec<f64> = (1..k)
            .map(|j| phi[j - 1] - pkk * phi[k - j - 1])
            .chain(std::iter::once(pkk))
            .collect();
        phi = next;
        out.push(pkk);
    }
    Ok(out)
}
