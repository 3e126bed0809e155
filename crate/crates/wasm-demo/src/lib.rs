//! Browser demo: interactive views of hierarchical community networks.
//!
//! Three operations, driven from a single static page:
//!
//! * `render_graphon` - the graphon heatmap `W(x, y)` or a sampled random
//!   adjacency pixel plot on the exact grid.
//! * `render_projector` - the sign structure of an empirical spectral
//!   projector `V_hat V_hat^T` with its detection summary.
//! * `render_threshold` - the deterministic Fiedler matrix of a one-level
//!   graphon while the inter-community density sweeps through `p*`.
//!
//! Each call returns a small JSON stats string; the RGBA pixels of the last
//! render are fetched with `last_rgba` / `last_side`.

use wasm_bindgen::prelude::*;

use ultragraphon::detect::detect_children_with;
use ultragraphon::fixtures;
use ultragraphon::graphon::{Graphon, Kernel};
use ultragraphon::sample::{build_grid, sample_random, Caps};
use ultragraphon::spectral::{
    closed_form_spectrum, empirical_projector, empirical_spectrum, spectral_block,
};
use ultragraphon::threshold::detectability_threshold;
use ultragraphon::tree::{RandomTreeParams, UltrametricTree};

fn err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Sequential colormap for probabilities in [0, 1] (dark blue -> green -> yellow).
fn heat(v: f64) -> [u8; 4] {
    let v = v.clamp(0.0, 1.0);
    let stops: [(f64, [f64; 3]); 5] = [
        (0.0, [13.0, 8.0, 135.0]),
        (0.25, [84.0, 2.0, 163.0]),
        (0.5, [33.0, 144.0, 140.0]),
        (0.75, [94.0, 201.0, 98.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let mut c = stops[4].1;
    for w in stops.windows(2) {
        let (t0, c0) = w[0];
        let (t1, c1) = w[1];
        if v <= t1 {
            let t = if t1 > t0 { (v - t0) / (t1 - t0) } else { 0.0 };
            c = [
                c0[0] + t * (c1[0] - c0[0]),
                c0[1] + t * (c1[1] - c0[1]),
                c0[2] + t * (c1[2] - c0[2]),
            ];
            break;
        }
    }
    [c[0] as u8, c[1] as u8, c[2] as u8, 255]
}

/// Diverging colormap for projector entries (blue negative, green positive).
fn diverge(v: f64, scale: f64) -> [u8; 4] {
    let t = (v / scale).clamp(-1.0, 1.0);
    if t < 0.0 {
        let a = -t;
        [
            (255.0 - 205.0 * a) as u8,
            (255.0 - 155.0 * a) as u8,
            255,
            255,
        ]
    } else {
        let a = t;
        [
            (255.0 - 215.0 * a) as u8,
            255,
            (255.0 - 185.0 * a) as u8,
            255,
        ]
    }
}

fn matrix_rgba(m: &ultragraphon::nalgebra::DMatrix<f64>, diverging: bool) -> Vec<u8> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(4 * n * n);
    let scale = if diverging { m.amax().max(1e-12) } else { 1.0 };
    for i in 0..n {
        for j in 0..n {
            let px = if diverging { diverge(m[(i, j)], scale) } else { heat(m[(i, j)]) };
            out.extend_from_slice(&px);
        }
    }
    out
}

#[wasm_bindgen]
pub struct Demo {
    graphon: Graphon,
    rgba: Vec<u8>,
    side: usize,
}

#[wasm_bindgen]
impl Demo {
    /// `source` is a fixture name, or `random` for a seeded binary tree with
    /// Beta(concentration, concentration) splits and the power-law kernel.
    #[wasm_bindgen(constructor)]
    pub fn new(source: &str, depth: u32, concentration: f64, tree_seed: u32) -> Result<Demo, JsValue> {
        let graphon = if source == "random" {
            let tree = UltrametricTree::random_binary(&RandomTreeParams {
                depth,
                concentration,
                seed: tree_seed as u64,
                grid_units: 260,
            })
            .map_err(err)?;
            let kernel = Kernel::PowerLawLevels { w_min: 0.03, w_max: 0.67, gamma_w: 1.8, depth };
            Graphon::new(tree, kernel).map_err(err)?
        } else {
            fixtures::fixture_by_name(source).map_err(err)?.graphon
        };
        Ok(Demo { graphon, rgba: Vec::new(), side: 0 })
    }

    /// Labels/paths of the internal nodes with at least two children, for
    /// the projector selector.
    pub fn node_names(&self) -> String {
        let names: Vec<String> = self
            .graphon
            .tree()
            .nodes()
            .filter(|n| n.children.len() >= 2)
            .map(|n| format!("\"{}\"", n.display_name()))
            .collect();
        format!("[{}]", names.join(","))
    }

    /// Renders `W(x, y)` on a `px * px` lattice (`mode = "w"`) or a sampled
    /// adjacency pixel plot at grid multiplier `k` (`mode = "random"`).
    /// Returns `{side, n_points, mean_degree_density}` as JSON.
    pub fn render_graphon(&mut self, mode: &str, px: usize, k: u32, seed: u32) -> Result<String, JsValue> {
        match mode {
            "w" => {
                let n = px.clamp(16, 600);
                let mut m = ultragraphon::nalgebra::DMatrix::<f64>::zeros(n, n);
                for i in 0..n {
                    let x = (i as f64 + 0.5) / n as f64;
                    for j in 0..=i {
                        let y = (j as f64 + 0.5) / n as f64;
                        let w = self.graphon.evaluate(x, y).map_err(err)?;
                        m[(i, j)] = w;
                        m[(j, i)] = w;
                    }
                }
                self.rgba = matrix_rgba(&m, false);
                self.side = n;
            }
            "random" => {
                let grid = build_grid(self.graphon.tree(), k.max(1), &Caps::default()).map_err(err)?;
                let graph =
                    sample_random(&self.graphon, &grid, seed as u64, false, &Caps::default())
                        .map_err(err)?;
                self.rgba = matrix_rgba(&graph.adjacency, false);
                self.side = grid.len();
            }
            other => return Err(err(format!("unknown mode `{other}`"))),
        }
        let density = if self.graphon.is_ultrametric() {
            self.graphon.mean_nu().map_err(err)?
        } else {
            f64::NAN
        };
        Ok(format!(
            "{{\"side\":{},\"mean_degree_density\":{:.6}}}",
            self.side, density
        ))
    }

    /// Eigensolves a sampled Laplacian, takes the node's spectral block, and
    /// renders the empirical projector sign structure. JSON:
    /// `{side, components, expected, misassigned, flag, eigenvalue_over_n, delta}`.
    pub fn render_projector(&mut self, node: &str, k: u32, seed: u32) -> Result<String, JsValue> {
        if !self.graphon.is_ultrametric() {
            return Err(err("projector view needs an ultrametric-mode model"));
        }
        let caps = Caps::default();
        let tree = self.graphon.tree().clone();
        let id = tree.find(node).map_err(err)?;
        let grid = build_grid(&tree, k.max(2), &caps).map_err(err)?;
        let graph = sample_random(&self.graphon, &grid, seed as u64, false, &caps).map_err(err)?;
        let eig = empirical_spectrum(&graph.laplacian).map_err(err)?;
        let spectrum = closed_form_spectrum(&self.graphon, &grid).map_err(err)?;
        let block = spectral_block(&spectrum, id).map_err(err)?;
        let e_hat = empirical_projector(&eig, &block.positions);
        let detection =
            detect_children_with(&self.graphon, &grid, &eig, id, None).map_err(err)?;
        self.rgba = matrix_rgba(&e_hat, true);
        self.side = grid.len();
        let flag = match (detection.ambiguous, detection.merged_block) {
            (false, false) => "ok",
            (true, false) => "ambiguous",
            (false, true) => "merged",
            (true, true) => "ambiguous+merged",
        };
        Ok(format!(
            "{{\"side\":{},\"components\":{},\"expected\":{},\"misassigned\":{},\"flag\":\"{}\",\"eigenvalue_over_n\":{:.6},\"delta\":{:.6}}}",
            self.side,
            detection.n_components,
            detection.expected_components,
            detection.misassigned,
            flag,
            block.eigenvalue / grid.len() as f64,
            block.delta
        ))
    }

    /// One-level detectability at inter-community density `w_inter`: renders
    /// the deterministic Fiedler matrix and reports the regime. JSON:
    /// `{side, p_star, detectable, support, lambda2_over_n, rho: [...]}`.
    pub fn render_threshold(&mut self, w_inter: f64, k: u32) -> Result<String, JsValue> {
        let caps = Caps::default();
        let one = fixtures::fig9_threshold(w_inter).map_err(err)?;
        let grid = build_grid(one.tree(), k.max(2), &caps).map_err(err)?;
        let rep = detectability_threshold(&one, &grid, &caps).map_err(err)?;

        // Fiedler matrix of the full deterministic Laplacian for the picture.
        let det = ultragraphon::sample::sample_deterministic(&one, &grid, &caps).map_err(err)?;
        let eig = empirical_spectrum(&det.laplacian).map_err(err)?;
        let tol = 1e-9 * grid.len() as f64;
        let mut end = 2;
        while end < grid.len() && (eig.values[end] - eig.values[1]).abs() <= tol {
            end += 1;
        }
        let e_f = empirical_projector(&eig, &(1..end));
        self.rgba = matrix_rgba(&e_f, true);
        self.side = grid.len();

        let rho: Vec<String> = rep.rho.iter().map(|(_, r)| format!("{r:.6}")).collect();
        Ok(format!(
            "{{\"side\":{},\"p_star\":{:.6},\"detectable\":{},\"support\":\"{}\",\"lambda2_over_n\":{:.6},\"rho\":[{}]}}",
            self.side,
            rep.p_star,
            rep.detectable,
            rep.fiedler_support,
            rep.lambda2 / grid.len() as f64,
            rho.join(",")
        ))
    }

    /// RGBA bytes of the last render (`side * side * 4`).
    pub fn last_rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }

    pub fn last_side(&self) -> usize {
        self.side
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graphon_render_produces_pixels() {
        let mut d = Demo::new("example-abc", 0, 0.0, 0).unwrap();
        let stats = d.render_graphon("w", 64, 0, 0).unwrap();
        assert!(stats.contains("\"side\":64"));
        assert_eq!(d.last_rgba().len(), 64 * 64 * 4);

        let stats = d.render_graphon("random", 0, 2, 7).unwrap();
        assert!(stats.contains("\"side\":28"));
        assert_eq!(d.last_side(), 28);
    }

    #[test]
    fn projector_render_reports_detection() {
        let mut d = Demo::new("example-abc", 0, 0.0, 0).unwrap();
        let stats = d.render_projector("root", 5, 1).unwrap();
        assert!(stats.contains("\"expected\":3"), "{stats}");
        assert_eq!(d.last_rgba().len(), 70 * 70 * 4);
    }

    #[test]
    fn threshold_render_crosses_p_star() {
        let mut d = Demo::new("fig9-threshold", 0, 0.0, 0).unwrap();
        let low = d.render_threshold(0.02, 5).unwrap();
        assert!(low.contains("\"detectable\":true"), "{low}");
        let high = d.render_threshold(0.25, 5).unwrap();
        assert!(high.contains("\"detectable\":false"), "{high}");
    }

    #[test]
    fn random_source_builds() {
        let mut d = Demo::new("random", 5, 1.6, 11).unwrap();
        let stats = d.render_graphon("w", 32, 0, 0).unwrap();
        assert!(stats.contains("\"side\":32"));
        assert!(!d.node_names().is_empty());
    }
}
