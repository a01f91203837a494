//! Float serialization with exactly 17 significant digits, so that values
//! round-trip bit-exactly through JSON.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Number, Value};

/// JSON value for a float: a 17-significant-digit decimal, or a string for
/// non-finite values.
pub fn number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::String(format!("{x}"));
    }
    let text = format!("{x:.16e}");
    match text.parse::<Number>() {
        Ok(n) => Value::Number(n),
        Err(_) => Value::String(text),
    }
}

fn parse(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

pub fn complex_value(z: Complex64) -> Value {
    Value::Array(vec![number(z.re), number(z.im)])
}

pub mod float {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        number(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let v = Value::deserialize(d)?;
        parse(&v).ok_or_else(|| D::Error::custom("expected a number"))
    }
}

pub mod float_vec {
    use super::*;

    pub fn serialize<S: Serializer>(x: &[f64], s: S) -> Result<S::Ok, S::Error> {
        x.iter().map(|&v| number(v)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v = Vec::<Value>::deserialize(d)?;
        v.iter().map(|x| parse(x).ok_or_else(|| D::Error::custom("expected a number"))).collect()
    }
}

pub mod dvector {
    use super::*;

    pub fn serialize<S: Serializer>(x: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        float_vec::serialize(x.as_slice(), s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(float_vec::deserialize(d)?))
    }
}

/// Complex matrix as rows of `[re, im]` pairs.
pub mod cmatrix {
    use super::*;

    pub fn to_value(m: &DMatrix<Complex64>) -> Value {
        Value::Array(
            (0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex_value(m[(i, j)])).collect())).collect(),
        )
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        to_value(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<Complex64>, D::Error> {
        let rows = Vec::<Vec<Vec<Value>>>::deserialize(d)?;
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(D::Error::custom("ragged complex matrix"));
        }
        let mut m = DMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, pair) in row.iter().enumerate() {
                match pair.as_slice() {
                    [re, im] => {
                        let re = parse(re).ok_or_else(|| D::Error::custom("bad real part"))?;
                        let im = parse(im).ok_or_else(|| D::Error::custom("bad imaginary part"))?;
                        m[(i, j)] = Complex64::new(re, im);
                    }
                    _ => return Err(D::Error::custom("complex entries are [re, im] pairs")),
                }
            }
        }
        Ok(m)
    }
}

pub mod cvector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &DVector<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&z| complex_value(z)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<Complex64>, D::Error> {
        let entries = Vec::<Vec<Value>>::deserialize(d)?;
        let mut out = DVector::zeros(entries.len());
        for (i, pair) in entries.iter().enumerate() {
            match pair.as_slice() {
                [re, im] => {
                    let re = parse(re).ok_or_else(|| D::Error::custom("bad real part"))?;
                    let im = parse(im).ok_or_else(|| D::Error::custom("bad imaginary part"))?;
                    out[i] = Complex64::new(re, im);
                }
                _ => return Err(D::Error::custom("complex entries are [re, im] pairs")),
            }
        }
        Ok(out)
    }
}
