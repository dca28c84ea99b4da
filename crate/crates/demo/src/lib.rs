//! WebAssembly bindings for the browser demo in `www/`. Every export returns
//! a JSON string; errors surface as JS exceptions.

pub mod api;

use wasm_bindgen::prelude::*;

fn to_json<T: serde::Serialize>(v: Result<T, String>) -> Result<String, JsError> {
    let v = v.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = toyNames)]
pub fn toy_names() -> String {
    serde_json::to_string(&api::toy_names()).unwrap_or_default()
}

#[wasm_bindgen(js_name = toySource)]
pub fn toy_source(name: &str) -> Option<String> {
    api::toy_source(name).map(str::to_string)
}

#[wasm_bindgen(js_name = occupancySlice)]
pub fn occupancy_slice(source: &str, eta: f64, psi: f64, z_frac: f64, res: usize) -> Result<String, JsError> {
    to_json(api::occupancy_slice(source, eta, psi, z_frac, res))
}

#[wasm_bindgen(js_name = normalizeStats)]
pub fn normalize_stats(source: &str) -> Result<String, JsError> {
    to_json(api::normalize_stats(source))
}

#[wasm_bindgen(js_name = fitColumns)]
pub fn fit_columns(source: &str, columns: usize, seed: u32, z_frac: f64, res: usize) -> Result<String, JsError> {
    to_json(api::fit_columns(source, columns, seed as u64, z_frac, res))
}
