//! wasm-bindgen surface of the browser demo. All heavy lifting lives in
//! [`state`]; this layer shuttles JSON strings across the boundary.

mod state;

use wasm_bindgen::prelude::*;

use state::DemoState;

#[wasm_bindgen]
pub struct Demo {
    state: Option<DemoState>,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        Demo { state: None }
    }

    /// Build a preset graph ("planted", "hubs", "barbell") and return node
    /// positions, edges, and summary stats as JSON.
    pub fn generate(
        &mut self,
        preset: &str,
        n: u32,
        blocks: u32,
        p_in: f64,
        p_out: f64,
        seed: u64,
    ) -> Result<String, JsError> {
        let (state, json) = DemoState::generate(preset, n, blocks, p_in, p_out, seed)
            .map_err(|e| JsError::new(&e.to_string()))?;
        self.state = Some(state);
        Ok(json)
    }

    /// Detect communities on the current graph; lambda and k accept "auto".
    pub fn detect(
        &self,
        lambda: &str,
        k: &str,
        backend: &str,
        lsh_bits: u32,
        lsh_tables: u32,
        seed: u64,
    ) -> Result<String, JsError> {
        self.current()?
            .detect(lambda, k, backend, lsh_bits, lsh_tables, seed)
            .map_err(|e| JsError::new(&e.to_string()))
    }

    /// Compare exact, m-tree, and LSH lookups of one node's nearest other
    /// node.
    pub fn nn_compare(&self, node: u32, lambda: &str) -> Result<String, JsError> {
        self.current()?
            .nn_compare(node, lambda)
            .map_err(|e| JsError::new(&e.to_string()))
    }

    fn current(&self) -> Result<&DemoState, JsError> {
        self.state
            .as_ref()
            .ok_or_else(|| JsError::new("generate a graph first"))
    }
}

impl Default for Demo {
    fn default() -> Self {
        Self::new()
    }
}
