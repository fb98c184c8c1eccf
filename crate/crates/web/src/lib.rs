//! WebAssembly bindings for the browser demo in `www/`: analytic DTF
//! curves, the rate at a target DTF, and a seeded Monte Carlo spot check.

use muxdt_core::solve::{rate_at_dtf, DtfModel, Engine, Family, Mode};
use muxdt_core::{Error, RandomStream};
use wasm_bindgen::prelude::*;

fn model(mode: &str, family: &str, n: usize, deadtime: f64, nu: f64) -> Result<DtfModel, String> {
    let mode = match mode {
        "cw" => Mode::Cw,
        "pulsed" => Mode::Pulsed { rep_rate: nu },
        other => return Err(format!("unknown mode '{other}'")),
    };
    let family: Family = family.parse().map_err(|e: Error| e.to_string())?;
    Ok(DtfModel::analytic(mode, family, deadtime, n))
}

/// Analytic DTF at each abscissa (photons/s for CW, p for pulsed).
pub fn dtf_curve(
    mode: &str,
    family: &str,
    n: usize,
    deadtime: f64,
    nu: f64,
    xs: &[f64],
) -> Result<Vec<f64>, String> {
    let m = model(mode, family, n, deadtime, nu)?;
    xs.iter()
        .map(|&x| m.dtf_at(x, 0).map(|p| p.dtf).map_err(|e| e.to_string()))
        .collect()
}

/// Incident rate (photons/s, or `p * nu` for pulsed) at which the DTF
/// reaches `target`; infinite when the configuration never gets there.
pub fn rate_at(
    mode: &str,
    family: &str,
    n: usize,
    deadtime: f64,
    nu: f64,
    target: f64,
) -> Result<f64, String> {
    let m = model(mode, family, n, deadtime, nu)?;
    if let Some(rate) = m
        .closed_form_rate(target)
        .filter(|_| target > 0.0 && target < 1.0)
    {
        return Ok(rate);
    }
    let scale = if mode == "pulsed" { nu } else { 1.0 };
    match rate_at_dtf(&m, target, None) {
        Ok(r) => Ok(r.rate * scale),
        Err(Error::NotBracketed { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e.to_string()),
    }
}

/// Simulated `[dtf, std_err]` for a multiplexed pool at one point.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo(
    mode: &str,
    n: usize,
    deadtime: f64,
    nu: f64,
    x: f64,
    n_events: u32,
    seed: u32,
) -> Result<Vec<f64>, String> {
    let m = DtfModel {
        engine: Engine::MonteCarlo {
            n_events: u64::from(n_events),
            batches: 10,
            stream: RandomStream::new(u64::from(seed), 0),
        },
        ..model(mode, "multiplexed", n, deadtime, nu)?
    };
    let point = m.dtf_at(x, 0).map_err(|e| e.to_string())?;
    Ok(vec![point.dtf, point.std_err])
}

#[wasm_bindgen(js_name = dtfCurve)]
pub fn js_dtf_curve(
    mode: &str,
    family: &str,
    n: usize,
    deadtime: f64,
    nu: f64,
    xs: &[f64],
) -> Result<Vec<f64>, JsValue> {
    dtf_curve(mode, family, n, deadtime, nu, xs).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = rateAt)]
pub fn js_rate_at(
    mode: &str,
    family: &str,
    n: usize,
    deadtime: f64,
    nu: f64,
    target: f64,
) -> Result<f64, JsValue> {
    rate_at(mode, family, n, deadtime, nu, target).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = monteCarlo)]
pub fn js_monte_carlo(
    mode: &str,
    n: usize,
    deadtime: f64,
    nu: f64,
    x: f64,
    n_events: u32,
    seed: u32,
) -> Result<Vec<f64>, JsValue> {
    monte_carlo(mode, n, deadtime, nu, x, n_events, seed).map_err(|e| JsValue::from_str(&e))
}
