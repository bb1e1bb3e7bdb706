use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Z80, Z95};

const MAX_ITERATIONS: usize = 500;
const PARAM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    /// Additive linear trend: a constant on the differenced series when
    /// `d >= 1`, a fitted slope when `d == 0`.
    pub drift: bool,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Self {
        ArimaOrder {
            p,
            d,
            q,
            drift: false,
        }
    }

    pub fn random_walk() -> Self {
        ArimaOrder::new(0, 1, 0)
    }

    pub fn with_drift(self, drift: bool) -> Self {
        ArimaOrder { drift, ..self }
    }

    /// Fewest observations `fit` accepts.
    pub fn min_observations(&self) -> usize {
        self.p + self.d + self.q + 2
    }
}

impl std::fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ARIMA({},{},{})", self.p, self.d, self.q)?;
        if self.drift {
            f.write_str(" with drift")?;
        }
        Ok(())
    }
}

/// A fitted model together with the state needed to forecast from the end of
/// the fitted window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub ar_coefficients: Vec<f64>,
    pub ma_coefficients: Vec<f64>,
    /// Mean of the differenced series (`d >= 1`) or trend slope (`d == 0`);
    /// zero without drift.
    pub drift_value: f64,
    /// Level at time index 0 of the fitted window; only used when `d == 0`.
    pub level: f64,
    /// Innovation standard deviation.
    pub sigma: f64,
    /// Set when `sigma == 0`: intervals collapse onto the point forecast.
    pub degenerate: bool,
    /// The last `d` observations (last one when `d == 0`).
    pub last_values: Vec<f64>,
    /// The last `p` centred values of the differenced series.
    pub z_tail: Vec<f64>,
    /// The last `q` residuals.
    pub residual_tail: Vec<f64>,
    pub n_obs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub horizon: usize,
    pub point: f64,
    pub pi80: (f64, f64),
    pub pi95: (f64, f64),
}

/// `d`-th difference of `values` and the initial values that undo it.
pub fn difference(values: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut cur = values.to_vec();
    let mut initial = Vec::with_capacity(d);
    for _ in 0..d {
        if cur.is_empty() {
            break;
        }
        initial.push(cur[0]);
        cur = cur.windows(2).map(|w| w[1] - w[0]).collect();
    }
    (cur, initial)
}

/// Inverse of [`difference`].
pub fn integrate(diffs: &[f64], initial: &[f64]) -> Vec<f64> {
    let mut cur = diffs.to_vec();
    for &start in initial.iter().rev() {
        let mut next = Vec::with_capacity(cur.len() + 1);
        next.push(start);
        for v in &cur {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        cur = next;
    }
    cur
}

impl ArimaModel {
    /// A driftless random walk ending at `last` with innovation sd `sigma`.
    pub fn random_walk(last: f64, sigma: f64) -> Self {
        ArimaModel {
            order: ArimaOrder::random_walk(),
            ar_coefficients: Vec::new(),
            ma_coefficients: Vec::new(),
            drift_value: 0.0,
            level: 0.0,
            sigma,
            degenerate: sigma == 0.0,
            last_values: vec![last],
            z_tail: Vec::new(),
            residual_tail: Vec::new(),
            n_obs: 1,
        }
    }
}

/// Fits `order` to `values`.
///
/// The series is differenced `d` times. With `d >= 1` and drift the constant is
/// the mean of the differenced series; with `d == 0` the level (and, with
/// drift, a least-squares slope) is removed first. AR and MA coefficients are
/// then estimated by conditional sum of squares with pre-sample innovations
/// set to zero.
pub fn fit(values: &[f64], order: ArimaOrder) -> Result<ArimaModel> {
    if order.d > 2 {
        return Err(Error::InvalidInput(format!(
            "differencing order {} > 2",
            order.d
        )));
    }
    if values.len() < order.min_observations() {
        return Err(Error::InvalidInput(format!(
            "{order} needs more than {} observations, got {}",
            order.p + order.d + order.q + 1,
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite observation".into()));
    }
    let (w, _) = difference(values, order.d);
    let m = w.len();

    let (level, drift_value, z, n_const) = if order.d == 0 {
        if order.drift {
            let (a, b) = linear_fit(&w);
            let z = w
                .iter()
                .enumerate()
                .map(|(t, v)| v - a - b * t as f64)
                .collect();
            (a, b, z, 2)
        } else {
            let mean = w.iter().sum::<f64>() / m as f64;
            (mean, 0.0, w.iter().map(|v| v - mean).collect::<Vec<_>>(), 1)
        }
    } else if order.drift {
        let mean = w.iter().sum::<f64>() / m as f64;
        (0.0, mean, w.iter().map(|v| v - mean).collect(), 1)
    } else {
        (0.0, 0.0, w.clone(), 0)
    };

    let (ar, ma, residuals) = if order.p + order.q == 0 {
        (Vec::new(), Vec::new(), z.clone())
    } else {
        css_fit(&z, order.p, order.q)?
    };

    let used = &residuals[order.p..];
    let rss: f64 = used.iter().map(|e| e * e).sum();
    let n_params = (order.p + order.q + n_const).max(1);
    let dof = used.len().saturating_sub(n_params).max(1);
    let sigma = (rss / dof as f64).sqrt();

    let keep = order.d.max(1);
    Ok(ArimaModel {
        order,
        ar_coefficients: ar,
        ma_coefficients: ma,
        drift_value,
        level,
        sigma,
        degenerate: sigma == 0.0,
        last_values: values[values.len() - keep..].to_vec(),
        z_tail: z[m - order.p..].to_vec(),
        residual_tail: residuals[m - order.q..].to_vec(),
        n_obs: values.len(),
    })
}

/// Least-squares intercept and slope against `0..n`.
fn linear_fit(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let y_mean = values.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, y) in values.iter().enumerate() {
        let dt = t as f64 - t_mean;
        sxy += dt * (y - y_mean);
        sxx += dt * dt;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (y_mean - slope * t_mean, slope)
}

/// Least-squares slope and its standard error.
pub(crate) fn slope_with_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let (a, b) = linear_fit(values);
    if n < 3 {
        return (b, f64::INFINITY);
    }
    let t_mean = (n as f64 - 1.0) / 2.0;
    let sxx: f64 = (0..n).map(|t| (t as f64 - t_mean).powi(2)).sum();
    let rss: f64 = values
        .iter()
        .enumerate()
        .map(|(t, y)| (y - a - b * t as f64).powi(2))
        .sum();
    (b, (rss / (n - 2) as f64 / sxx).sqrt())
}

/// Residuals of the ARMA(p, q) recursion on `z`, conditional on the first `p`
/// observations, with their derivatives when `jac` is given.
fn residuals(z: &[f64], ar: &[f64], ma: &[f64], mut jac: Option<&mut Vec<Vec<f64>>>) -> Vec<f64> {
    let (p, q) = (ar.len(), ma.len());
    let n = z.len();
    let k = p + q;
    let mut e = vec![0.0; n];
    if let Some(j) = jac.as_deref_mut() {
        j.clear();
        j.resize(n, vec![0.0; k]);
    }
    for t in p..n {
        let mut v = z[t];
        for i in 0..p {
            v -= ar[i] * z[t - 1 - i];
        }
        for j in 0..q {
            if t > j {
                v -= ma[j] * e[t - 1 - j];
            }
        }
        e[t] = v;
        if let Some(jm) = jac.as_deref_mut() {
            let mut row = vec![0.0; k];
            for i in 0..p {
                row[i] = -z[t - 1 - i];
            }
            for j in 0..q {
                if t > j {
                    row[p + j] = -e[t - 1 - j];
                }
            }
            for l in 0..q {
                if t > l {
                    let prev = &jm[t - 1 - l];
                    for c in 0..k {
                        row[c] -= ma[l] * prev[c];
                    }
                }
            }
            jm[t] = row;
        }
    }
    e
}

fn css(e: &[f64], p: usize) -> f64 {
    e[p..].iter().map(|v| v * v).sum()
}

/// Levenberg-Marquardt on the conditional sum of squares.
fn css_fit(z: &[f64], p: usize, q: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let k = p + q;
    let mut params = vec![0.0; k];
    let mut jac = Vec::new();
    let mut e = residuals(z, &params[..p], &params[p..], Some(&mut jac));
    let mut s = css(&e, p);
    let mut lambda = 1e-3;

    for _ in 0..MAX_ITERATIONS {
        let mut h = vec![vec![0.0; k]; k];
        let mut g = vec![0.0; k];
        for t in p..z.len() {
            let row = &jac[t];
            for a in 0..k {
                g[a] += row[a] * e[t];
                for b in a..k {
                    h[a][b] += row[a] * row[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                h[a][b] = h[b][a];
            }
        }

        loop {
            let mut damped = h.clone();
            for a in 0..k {
                damped[a][a] += lambda * (h[a][a] + 1e-12);
            }
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            let step = solve(damped, neg_g);
            let trial: Option<Vec<f64>> = step
                .as_ref()
                .map(|st| params.iter().zip(st).map(|(x, d)| x + d).collect());
            let accepted = trial.and_then(|tp| {
                if tp.iter().any(|v| !v.is_finite() || v.abs() > 10.0) {
                    return None;
                }
                let te = residuals(z, &tp[..p], &tp[p..], None);
                let ts = css(&te, p);
                (ts.is_finite() && ts <= s).then_some((tp, ts))
            });
            match accepted {
                Some((tp, ts)) => {
                    let max_step = tp
                        .iter()
                        .zip(&params)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    params = tp;
                    e = residuals(z, &params[..p], &params[p..], Some(&mut jac));
                    s = ts;
                    lambda = (lambda / 10.0).max(1e-12);
                    if max_step < PARAM_TOLERANCE {
                        return Ok(finish(params, p, e));
                    }
                    break;
                }
                None => {
                    lambda *= 10.0;
                    if lambda > 1e12 {
                        // no descent direction left: stationary point
                        return Ok(finish(params, p, e));
                    }
                }
            }
        }
    }
    Err(Error::NotConverged {
        iterations: MAX_ITERATIONS,
        css: s,
        params,
    })
}

fn finish(params: Vec<f64>, p: usize, e: Vec<f64>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let ma = params[p..].to_vec();
    let mut ar = params;
    ar.truncate(p);
    (ar, ma, e)
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Psi weights of the full (integrated) model, `psi[0] == 1`.
fn psi_weights(model: &ArimaModel, horizon: usize) -> Vec<f64> {
    // phi*(B) = phi(B) (1 - B)^d
    let mut poly = vec![1.0];
    poly.extend(model.ar_coefficients.iter().map(|c| -c));
    for _ in 0..model.order.d {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c;
        }
        poly = next;
    }
    let phi_star: Vec<f64> = poly[1..].iter().map(|c| -c).collect();
    let mut psi = vec![0.0; horizon];
    for j in 0..horizon {
        let mut v = if j == 0 {
            1.0
        } else {
            model.ma_coefficients.get(j - 1).copied().unwrap_or(0.0)
        };
        for (i, ph) in phi_star.iter().enumerate() {
            if j > i {
                v += ph * psi[j - 1 - i];
            }
        }
        psi[j] = v;
    }
    psi
}

/// Point forecasts with 80 % and 95 % prediction intervals for horizons
/// `1..=horizon`.
pub fn forecast(model: &ArimaModel, horizon: usize) -> Vec<Forecast> {
    let p = model.order.p;
    let q = model.order.q;
    let d = model.order.d;

    // centred differenced-scale forecasts
    let mut z_hist = model.z_tail.clone();
    let mut z_hat = Vec::with_capacity(horizon);
    for h in 1..=horizon {
        let mut v = 0.0;
        for i in 0..p {
            v += model.ar_coefficients[i] * z_hist[z_hist.len() - 1 - i];
        }
        for j in (h - 1)..q {
            // residual at time n + h - 1 - j, known only for j >= h - 1
            let idx = model.residual_tail.len() as isize - 1 - (j as isize - (h as isize - 1));
            if idx >= 0 {
                v += model.ma_coefficients[j] * model.residual_tail[idx as usize];
            }
        }
        z_hist.push(v);
        z_hat.push(v);
    }

    let points: Vec<f64> = if d == 0 {
        z_hat
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let t = (model.n_obs - 1 + i + 1) as f64;
                model.level + model.drift_value * t + z
            })
            .collect()
    } else {
        // last value of each differencing level 0..d
        let (_, tails) = {
            let mut tails = Vec::with_capacity(d);
            let mut cur = model.last_values.clone();
            for _ in 0..d {
                tails.push(*cur.last().unwrap());
                cur = cur.windows(2).map(|w| w[1] - w[0]).collect();
            }
            ((), tails)
        };
        let mut tails = tails;
        z_hat
            .iter()
            .map(|z| {
                let mut v = z + model.drift_value;
                for level in (0..d).rev() {
                    v += tails[level];
                    tails[level] = v;
                }
                v
            })
            .collect()
    };

    let psi = psi_weights(model, horizon);
    let mut cum = 0.0;
    points
        .into_iter()
        .enumerate()
        .map(|(i, point)| {
            cum += psi[i] * psi[i];
            let sd = model.sigma * cum.sqrt();
            let (h80, h95) = (Z80 * sd, Z95 * sd);
            Forecast {
                horizon: i + 1,
                point,
                pi80: (point - h80, point + h80),
                pi95: (point - h95, point + h95),
            }
        })
        .collect()
}
