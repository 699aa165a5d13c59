//! Conversions between logarithmic and linear units.
//!
//! Internally all RF powers (transmit power, interference, noise) are
//! carried in mW and all circuit/energy quantities in W; these helpers
//! live at the configuration boundary.

/// dBm to mW.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// mW to dBm.
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// dB to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to dB.
pub fn linear_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// mW to W.
pub fn mw_to_w(mw: f64) -> f64 {
    mw * 1e-3
}
