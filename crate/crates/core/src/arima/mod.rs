//! Correlograms, order selection, ARIMA fitting and forecasting.

mod correlogram;
mod model;
mod select;

pub use correlogram::{acf, pacf, Correlogram};
pub use model::{difference, fit, forecast, integrate, ArimaModel, ArimaOrder, Forecast};
pub use select::select_order;

/// Two-sided 80 % normal quantile.
pub const Z80: f64 = 1.2816;
/// Two-sided 95 % normal quantile.
pub const Z95: f64 = 1.96;
