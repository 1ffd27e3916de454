//! A common wrapper over the three model representations, plus JSON I/O.

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::aaa::{self, BarycentricModel};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::loewner::{self, StateSpaceModel};
use crate::vectorfit::{self, PoleResidueModel};

/// Anything that can be evaluated at a point of the complex plane.
pub trait Evaluate {
    fn evaluate(&self, s: Complex64) -> Result<Complex64>;
}

impl Evaluate for StateSpaceModel {
    fn evaluate(&self, s: Complex64) -> Result<Complex64> {
        self.eval(s)
    }
}

impl Evaluate for BarycentricModel {
    fn evaluate(&self, s: Complex64) -> Result<Complex64> {
        let v = self.eval(s);
        if v.re.is_finite() && v.im.is_finite() { Ok(v) } else { Err(Error::SingularAt(s)) }
    }
}

impl Evaluate for PoleResidueModel {
    fn evaluate(&self, s: Complex64) -> Result<Complex64> {
        self.eval(s)
    }
}

/// Adapts a closure, e.g. the oracle itself.
pub struct FnModel<F>(pub F);

impl<F: Fn(Complex64) -> Result<Complex64>> Evaluate for FnModel<F> {
    fn evaluate(&self, s: Complex64) -> Result<Complex64> {
        (self.0)(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RationalModel {
    StateSpace(StateSpaceModel),
    Barycentric(BarycentricModel),
    PoleResidue(PoleResidueModel),
}

impl RationalModel {
    pub fn kind(&self) -> &'static str {
        match self {
            RationalModel::StateSpace(_) => "state_space",
            RationalModel::Barycentric(_) => "barycentric",
            RationalModel::PoleResidue(_) => "pole_residue",
        }
    }

    pub fn order(&self) -> usize {
        match self {
            RationalModel::StateSpace(m) => m.order(),
            RationalModel::Barycentric(m) => m.order(),
            RationalModel::PoleResidue(m) => m.order(),
        }
    }

    pub fn poles_zeros(&self) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        match self {
            RationalModel::StateSpace(m) => Ok((loewner::poles(m)?, loewner::zeros(m)?)),
            RationalModel::Barycentric(m) => aaa::barycentric_poles_zeros(m),
            RationalModel::PoleResidue(m) => vectorfit::pr_poles_zeros(m),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            RationalModel::StateSpace(m) => json!({
                "type": "state_space",
                "order": m.order(),
                "E": matrix_json(&m.e),
                "A": matrix_json(&m.a),
                "B": vector_json(&m.b),
                "C": vector_json(&m.c),
            }),
            RationalModel::Barycentric(m) => json!({
                "type": "barycentric",
                "support": vector_json(&m.support),
                "values": vector_json(&m.values),
                "weights": vector_json(&m.weights),
            }),
            RationalModel::PoleResidue(m) => json!({
                "type": "pole_residue",
                "poles": vector_json(&m.poles),
                "residues": vector_json(&m.residues),
                "d": m.d,
                "h": m.h,
            }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::Parse("model JSON must be an object".into()))?;
        let kind = obj.get("type").and_then(Value::as_str).ok_or_else(|| Error::Parse("model JSON lacks a \"type\"".into()))?;
        match kind {
            "state_space" => {
                let e = parse_matrix(field(obj, "E")?)?;
                let a = parse_matrix(field(obj, "A")?)?;
                let b = parse_vector(field(obj, "B")?)?;
                let c = parse_vector(field(obj, "C")?)?;
                if let Some(order) = obj.get("order").and_then(Value::as_u64) {
                    if order as usize != b.len() {
                        return Err(Error::Parse(format!("order {order} but B has {} entries", b.len())));
                    }
                }
                Ok(RationalModel::StateSpace(StateSpaceModel::new(e, a, b, c)?))
            }
            "barycentric" => Ok(RationalModel::Barycentric(BarycentricModel::new(
                parse_vector(field(obj, "support")?)?,
                parse_vector(field(obj, "values")?)?,
                parse_vector(field(obj, "weights")?)?,
            )?)),
            "pole_residue" => Ok(RationalModel::PoleResidue(PoleResidueModel::new(
                parse_vector(field(obj, "poles")?)?,
                parse_vector(field(obj, "residues")?)?,
                parse_real(field(obj, "d")?)?,
                parse_real(field(obj, "h")?)?,
            )?)),
            other => Err(Error::Parse(format!("unknown model type \"{other}\""))),
        }
    }
}

impl Evaluate for RationalModel {
    fn evaluate(&self, s: Complex64) -> Result<Complex64> {
        match self {
            RationalModel::StateSpace(m) => m.evaluate(s),
            RationalModel::Barycentric(m) => m.evaluate(s),
            RationalModel::PoleResidue(m) => m.evaluate(s),
        }
    }
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name).ok_or_else(|| Error::Parse(format!("model JSON lacks \"{name}\"")))
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn vector_json(v: &[Complex64]) -> Value {
    Value::Array(v.iter().map(|&z| complex_json(z)).collect())
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect())).collect())
}

fn parse_real(v: &Value) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::Parse(format!("expected a number, found {v}")))
}

fn parse_complex(v: &Value) -> Result<Complex64> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(Complex64::new(parse_real(re)?, parse_real(im)?)),
        _ => Err(Error::Parse(format!("expected [re, im], found {v}"))),
    }
}

fn parse_vector(v: &Value) -> Result<Vec<Complex64>> {
    v.as_array()
        .ok_or_else(|| Error::Parse("expected an array of [re, im] pairs".into()))?
        .iter()
        .map(parse_complex)
        .collect()
}

fn parse_matrix(v: &Value) -> Result<ComplexMatrix> {
    let rows: Vec<Vec<Complex64>> = v
        .as_array()
        .ok_or_else(|| Error::Parse("expected a matrix of [re, im] pairs".into()))?
        .iter()
        .map(parse_vector)
        .collect::<Result<_>>()?;
    if rows.iter().any(|r| r.len() != rows.len()) {
        return Err(Error::Parse("matrix must be square".into()));
    }
    Ok(crate::linalg::from_rows(&rows))
}
