//! WebAssembly bindings for the static demo page in `www/`.

use wasm_bindgen::prelude::*;

pub mod demo;

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Per-stage AND/XOR counts and bounds, as JSON.
#[wasm_bindgen(js_name = gateCounts)]
pub fn gate_counts(parties: usize, u: usize, sigma: usize, variant: &str, m: u32, fixed: u32) -> Result<String, JsError> {
    js(demo::gate_counts(parties, u, sigma, variant, m, fixed))
}

/// Evaluates a small session in the clear and returns the reports as JSON.
#[wasm_bindgen(js_name = demoSession)]
pub fn demo_session(
    stockpiles: &str,
    sigma: usize,
    variant: &str,
    m: u32,
    fixed: u32,
    seed: u64,
) -> Result<String, JsError> {
    js(demo::demo_session(stockpiles, sigma, variant, m, fixed, seed))
}

/// Control bits and switch trace for a permutation given as `dest` indices.
#[wasm_bindgen(js_name = waksmanRoute)]
pub fn waksman_route(dest: Vec<u32>) -> Result<String, JsError> {
    let dest: Vec<usize> = dest.into_iter().map(|d| d as usize).collect();
    js(demo::route(&dest))
}

#[wasm_bindgen(js_name = randomPermutation)]
pub fn random_permutation(n: usize, seed: u64) -> Vec<u32> {
    demo::random_permutation(n, seed).into_iter().map(|d| d as u32).collect()
}
