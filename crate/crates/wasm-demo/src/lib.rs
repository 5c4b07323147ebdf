//! Browser bindings: every function takes and returns JSON strings so the
//! page needs no generated glue beyond wasm-bindgen's string passing.

use robust_ellipsoid::geometry::DEFAULT_SLACK;
use robust_ellipsoid::instance::{gen_planted_ellipsoid, PlantedEllipsoidSpec};
use robust_ellipsoid::{approximate_coverage_ellipsoid, solve_mvee, AlgoConfig, Ellipsoid, PointSet, SolverConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct EllipsoidView {
    center: Vec<f64>,
    /// Row-major shape matrix.
    shape: Vec<f64>,
    log_volume: Option<f64>,
    coverage_count: usize,
    n: usize,
}

#[derive(Serialize)]
struct Planted {
    points: Vec<Vec<f64>>,
    truth: EllipsoidView,
    outliers: Vec<usize>,
}

fn view(e: &Ellipsoid, points: &PointSet) -> Result<EllipsoidView, String> {
    let lv = e.log_volume_or_neg_inf();
    Ok(EllipsoidView {
        center: e.center().iter().copied().collect(),
        shape: e.shape().transpose().iter().copied().collect(),
        log_volume: lv.is_finite().then_some(lv),
        coverage_count: e.coverage(points, DEFAULT_SLACK).map_err(|x| x.to_string())?.count,
        n: points.len(),
    })
}

fn parse(points_json: &str) -> Result<PointSet, String> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(points_json).map_err(|e| e.to_string())?;
    let d = rows.first().map(Vec::len).ok_or("no points")?;
    PointSet::new(d, &rows).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn planted(n: usize, beta: f64, alpha: f64, seed: u64) -> Result<String, String> {
    let inst = gen_planted_ellipsoid(&PlantedEllipsoidSpec::new(2, n, beta, alpha, seed))
        .map_err(|e| e.to_string())?;
    to_json(&Planted {
        points: inst.points.to_rows(),
        truth: view(&inst.truth, &inst.points)?,
        outliers: inst.outlier_ids,
    })
}

fn coverage(points_json: &str, alpha: f64, gamma: f64, seed: u64) -> Result<String, String> {
    let points = parse(points_json)?;
    let mut cfg = AlgoConfig::new(alpha, gamma, seed);
    // keep the page responsive
    cfg.restarts = Some(2);
    cfg.max_balls = Some(4);
    let run = approximate_coverage_ellipsoid(&points, &cfg).map_err(|e| e.to_string())?;
    to_json(&view(&run.best.ellipsoid, &points)?)
}

fn mvee(points_json: &str) -> Result<String, String> {
    let points = parse(points_json)?;
    let (e, _) = solve_mvee(&points, &SolverConfig::default()).map_err(|e| e.to_string())?;
    to_json(&view(&e, &points)?)
}

/// Planted instance in the plane: `{points, truth, outliers}`.
#[wasm_bindgen]
pub fn generate_planted(n: usize, beta: f64, alpha: f64, seed: u64) -> Result<String, JsError> {
    planted(n, beta, alpha, seed).map_err(|e| JsError::new(&e))
}

/// Coverage ellipsoid of a JSON array of points, leaving out about `alpha`.
#[wasm_bindgen]
pub fn fit_coverage(points_json: &str, alpha: f64, gamma: f64, seed: u64) -> Result<String, JsError> {
    coverage(points_json, alpha, gamma, seed).map_err(|e| JsError::new(&e))
}

/// Minimum-volume ellipsoid enclosing every point.
#[wasm_bindgen]
pub fn fit_mvee(points_json: &str) -> Result<String, JsError> {
    mvee(points_json).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_json() {
        let p: serde_json::Value = serde_json::from_str(&planted(60, 4.0, 0.1, 3).unwrap()).unwrap();
        let pts = p["points"].to_string();
        let fit: serde_json::Value = serde_json::from_str(&coverage(&pts, 0.1, 0.5, 1).unwrap()).unwrap();
        // floor (1 − 4·0.1/0.5)·60 = 12
        assert!(fit["coverage_count"].as_u64().unwrap() >= 12);
        let all: serde_json::Value = serde_json::from_str(&mvee(&pts).unwrap()).unwrap();
        assert_eq!(all["coverage_count"], 60);
        assert!(all["log_volume"].as_f64().unwrap() >= fit["log_volume"].as_f64().unwrap());
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(mvee("[]").is_err());
        assert!(mvee("[[1,2],[3]]").is_err());
        assert!(mvee("not json").is_err());
    }
}
