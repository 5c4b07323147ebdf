//! The ellipsoid document: a small JSON file with sorted keys and every real
//! written with 17 significant digits, so that reading and rewriting a
//! document reproduces it byte for byte.

use nalgebra::{DMatrix, DVector};
use robust_ellipsoid::Ellipsoid;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentMeta {
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub coverage_count: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidDocument {
    pub dim: usize,
    pub center: Vec<f64>,
    /// Row-major `M`; the upper triangle mirrors the lower one exactly.
    pub shape: Vec<Vec<f64>>,
    /// `−∞` for a degenerate ellipsoid.
    pub log_volume: f64,
    /// `+∞` for a degenerate ellipsoid.
    pub condition_number: f64,
    /// Orthonormal rows spanning the flat of a degenerate ellipsoid.
    pub degenerate_basis: Option<Vec<Vec<f64>>>,
    pub meta: DocumentMeta,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

impl EllipsoidDocument {
    pub fn from_ellipsoid(e: &Ellipsoid, meta: DocumentMeta) -> Self {
        let d = e.dim();
        let m = e.shape();
        let shape = (0..d)
            .map(|i| (0..d).map(|j| m[(i.max(j), i.min(j))]).collect())
            .collect();
        let degenerate = e.is_degenerate();
        Self {
            dim: d,
            center: e.center().iter().copied().collect(),
            shape,
            log_volume: e.log_volume_or_neg_inf(),
            condition_number: e.condition_number().unwrap_or(f64::INFINITY),
            degenerate_basis: degenerate.then(|| rows(&e.flat_basis())),
            meta,
        }
    }

    pub fn ellipsoid(&self) -> Result<Ellipsoid, CliError> {
        let d = self.dim;
        let shape = DMatrix::from_fn(d, d, |i, j| self.shape[i][j]);
        Ellipsoid::new(DVector::from_column_slice(&self.center), shape)
            .map_err(|e| CliError::Input(format!("document: {e}")))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("{\n");
        s += &format!("  \"center\": {},\n", vector(&self.center));
        s += &format!("  \"condition_number\": {},\n", real(self.condition_number));
        if let Some(b) = &self.degenerate_basis {
            s += &format!("  \"degenerate_basis\": {},\n", matrix(b));
        }
        s += &format!("  \"dim\": {},\n", self.dim);
        s += &format!("  \"log_volume\": {},\n", real(self.log_volume));
        let m = &self.meta;
        s += "  \"meta\": {\n";
        s += &format!("    \"alpha\": {},\n", m.alpha.map_or("null".into(), real));
        s += &format!("    \"coverage_count\": {},\n", m.coverage_count);
        s += &format!("    \"gamma\": {},\n", m.gamma.map_or("null".into(), real));
        s += &format!("    \"n\": {},\n", m.n);
        s += &format!("    \"seed\": {}\n", m.seed.map_or("null".into(), |v| v.to_string()));
        s += "  },\n";
        s += &format!("  \"shape\": {}\n", matrix(&self.shape));
        s += "}\n";
        s
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let v: Value =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("document: {e}")))?;
        let obj = v
            .as_object()
            .ok_or_else(|| bad("top level must be an object"))?;
        let dim = get_usize(&v, "dim")?;
        let center = get_vector(field(obj, "center")?)?;
        let shape = get_matrix(field(obj, "shape")?)?;
        if center.len() != dim || shape.len() != dim || shape.iter().any(|r| r.len() != dim) {
            return Err(bad("center/shape sizes disagree with dim"));
        }
        let degenerate_basis = match obj.get("degenerate_basis") {
            None | Some(Value::Null) => None,
            Some(b) => Some(get_matrix(b)?),
        };
        let meta_v = field(obj, "meta")?;
        let meta = DocumentMeta {
            alpha: optional(meta_v, "alpha", get_real)?,
            gamma: optional(meta_v, "gamma", get_real)?,
            seed: optional(meta_v, "seed", |v| v.as_u64().ok_or_else(|| bad("seed must be an integer")))?,
            coverage_count: get_usize(meta_v, "coverage_count")?,
            n: get_usize(meta_v, "n")?,
        };
        Ok(Self {
            dim,
            center,
            shape,
            log_volume: get_real(field(obj, "log_volume")?)?,
            condition_number: get_real(field(obj, "condition_number")?)?,
            degenerate_basis,
            meta,
        })
    }
}

/// 17 significant digits; non-finite values become strings.
pub fn real(v: f64) -> String {
    if v.is_nan() {
        "\"NaN\"".into()
    } else if v.is_infinite() {
        if v > 0.0 { "\"Infinity\"".into() } else { "\"-Infinity\"".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|&x| real(x)).collect();
    format!("[{}]", parts.join(", "))
}

fn matrix(m: &[Vec<f64>]) -> String {
    if m.is_empty() {
        return "[]".into();
    }
    let parts: Vec<String> = m.iter().map(|r| format!("    {}", vector(r))).collect();
    format!("[\n{}\n  ]", parts.join(",\n"))
}

fn bad(msg: &str) -> CliError {
    CliError::Input(format!("document: {msg}"))
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, key: &str) -> Result<&'a Value, CliError> {
    obj.get(key).ok_or_else(|| bad(&format!("missing \"{key}\"")))
}

fn optional<T>(v: &Value, key: &str, f: impl Fn(&Value) -> Result<T, CliError>) -> Result<Option<T>, CliError> {
    match v.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(x) => f(x).map(Some),
    }
}

fn get_usize(v: &Value, key: &str) -> Result<usize, CliError> {
    v.get(key)
        .and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| bad(&format!("\"{key}\" must be a nonnegative integer")))
}

fn get_real(v: &Value) -> Result<f64, CliError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| bad("bad number")),
        Value::String(s) => match s.as_str() {
            "Infinity" => Ok(f64::INFINITY),
            "-Infinity" => Ok(f64::NEG_INFINITY),
            "NaN" => Ok(f64::NAN),
            _ => Err(bad(&format!("bad real {s:?}"))),
        },
        _ => Err(bad("expected a real")),
    }
}

fn get_vector(v: &Value) -> Result<Vec<f64>, CliError> {
    v.as_array()
        .ok_or_else(|| bad("expected an array"))?
        .iter()
        .map(get_real)
        .collect()
}

fn get_matrix(v: &Value) -> Result<Vec<Vec<f64>>, CliError> {
    v.as_array()
        .ok_or_else(|| bad("expected an array of rows"))?
        .iter()
        .map(get_vector)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> DocumentMeta {
        DocumentMeta {
            alpha: Some(0.05),
            gamma: None,
            seed: Some(u64::MAX),
            coverage_count: 3,
            n: 4,
        }
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let shape = DMatrix::from_row_slice(2, 2, &[2.0, 0.1 + 0.2, 0.1 + 0.2, 1.0 / 3.0]);
        let e = Ellipsoid::new(DVector::from_vec(vec![-0.0, 1e-300]), shape).unwrap();
        let doc = EllipsoidDocument::from_ellipsoid(&e, meta());
        let text = doc.to_text();
        let back = EllipsoidDocument::parse(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_text(), text);
        assert_eq!(back.ellipsoid().unwrap().shape(), e.shape());
    }

    #[test]
    fn degenerate_documents_keep_their_flat() {
        let shape = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let e = Ellipsoid::new(DVector::zeros(2), shape).unwrap();
        let doc = EllipsoidDocument::from_ellipsoid(&e, meta());
        assert_eq!(doc.log_volume, f64::NEG_INFINITY);
        assert_eq!(doc.condition_number, f64::INFINITY);
        let text = doc.to_text();
        assert!(text.contains("\"-Infinity\""));
        let back = EllipsoidDocument::parse(&text).unwrap();
        assert_eq!(back.degenerate_basis.as_ref().unwrap().len(), 1);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn keys_are_sorted() {
        let e = Ellipsoid::ball(DVector::zeros(1), 1.0);
        let text = EllipsoidDocument::from_ellipsoid(&e, meta()).to_text();
        let keys: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("  \"") && !l.starts_with("    "))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(EllipsoidDocument::parse("{").is_err());
        assert!(EllipsoidDocument::parse("{\"dim\": 1}").is_err());
    }
}
