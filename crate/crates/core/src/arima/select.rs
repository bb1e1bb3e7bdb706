use crate::error::{Error, Result};

use super::correlogram::{acf, pacf};
use super::model::{slope_with_se, ArimaOrder};

/// Scale applied to the significance band for the random-walk check.
const RANDOM_WALK_BAND_SCALE: f64 = 0.95;

/// Chooses an order from the correlogram of `segment`.
///
/// `q` is the length of the run of significant ACF lags starting at lag 1 and
/// `p` the same for the PACF. When both are zero but the lag-1 ACF still sits
/// near the band, the level is treated as a random walk and `(0,1,0)` is
/// returned. Drift is enabled when the least-squares slope is more than two
/// standard errors from zero.
pub fn select_order(segment: &[f64], max_lag: usize) -> Result<ArimaOrder> {
    if max_lag == 0 || segment.len() < 2 * max_lag {
        return Err(Error::InvalidInput(format!(
            "segment of length {} too short for max_lag {max_lag}",
            segment.len()
        )));
    }
    let a = acf(segment, max_lag)?;
    let pa = pacf(segment, max_lag)?;
    let q = a.significant_run();
    let p = pa.significant_run();
    let d = if p == 0 && q == 0 && a.coefficients[1] > RANDOM_WALK_BAND_SCALE * a.significance_band
    {
        1
    } else {
        0
    };
    let (slope, se) = slope_with_se(segment);
    let drift = slope != 0.0 && slope.abs() > 2.0 * se;
    Ok(ArimaOrder { p, d, q, drift })
}
