//! JSON pencil files.
//!
//! ```text
//! { "n": 2, "N": 3,
//!   "coeffs": [ [[{"re":0,"im":0}, ...], ...], ... ],
//!   "mean": [[{"re":0,"im":0}, ...], ...] }
//! ```
//! Matrices are row-major; `mean` is optional.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    hermitian_deviation, ComplexMatrix, GeneralPencil, HermitianMatrix, LinearPencil, Pencil,
    PencilError, HERMITIAN_TOL,
};

#[derive(Debug, Serialize, Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    re: f64,
    im: f64,
}

type RawMatrix = Vec<Vec<RawEntry>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPencil {
    n: usize,
    #[serde(rename = "N")]
    dim: usize,
    coeffs: Vec<RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mean: Option<RawMatrix>,
}

fn field(path: impl Into<String>, message: impl Into<String>) -> PencilError {
    PencilError::Field {
        path: path.into(),
        message: message.into(),
    }
}

fn convert_matrix(raw: &RawMatrix, dim: usize, path: &str) -> Result<ComplexMatrix, PencilError> {
    if raw.len() != dim {
        return Err(field(path, format!("has {} rows, expected N = {dim}", raw.len())));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for (i, row) in raw.iter().enumerate() {
        if row.len() != dim {
            return Err(field(
                format!("{path}[{i}]"),
                format!("has {} entries, expected N = {dim}", row.len()),
            ));
        }
        for (j, e) in row.iter().enumerate() {
            if !(e.re.is_finite() && e.im.is_finite()) {
                return Err(field(format!("{path}[{i}][{j}]"), "non-finite entry"));
            }
            data.push(Complex64::new(e.re, e.im));
        }
    }
    Ok(ComplexMatrix::new(dim, data)?)
}

fn is_hermitian(m: &ComplexMatrix) -> bool {
    hermitian_deviation(m) <= HERMITIAN_TOL * m.max_abs().max(1.0)
}

/// Parses a pencil file. The Hermitian route is taken iff every coefficient
/// is Hermitian within tolerance; a mean is only accepted on that route.
pub fn parse_pencil(text: &str) -> Result<Pencil, PencilError> {
    let raw: RawPencil = serde_json::from_str(text).map_err(|e| PencilError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if raw.dim == 0 {
        return Err(field("N", "must be positive"));
    }
    if raw.n == 0 {
        return Err(field("n", "must be positive"));
    }
    if raw.coeffs.len() != raw.n {
        return Err(field(
            "coeffs",
            format!("has {} matrices, expected n = {}", raw.coeffs.len(), raw.n),
        ));
    }
    let coeffs = raw
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, m)| convert_matrix(m, raw.dim, &format!("coeffs[{k}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let mean = raw
        .mean
        .as_ref()
        .map(|m| convert_matrix(m, raw.dim, "mean"))
        .transpose()?;

    if coeffs.iter().all(is_hermitian) {
        let mean = match mean {
            Some(m) if !is_hermitian(&m) => {
                return Err(field("mean", "must be Hermitian"));
            }
            Some(m) => Some(HermitianMatrix::try_from_matrix(m)?),
            None => None,
        };
        let hs = coeffs
            .into_iter()
            .map(HermitianMatrix::try_from_matrix)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Pencil::Hermitian(LinearPencil::assemble(hs, mean)?))
    } else {
        if mean.is_some_and(|m| !m.is_zero()) {
            return Err(field("mean", "only supported for Hermitian pencils"));
        }
        Ok(Pencil::General(GeneralPencil::new(coeffs)?))
    }
}

fn raw_matrix(m: &ComplexMatrix) -> RawMatrix {
    m.rows()
        .map(|row| row.iter().map(|z| RawEntry { re: z.re, im: z.im }).collect())
        .collect()
}

/// Serializes a pencil in the file format read by [`parse_pencil`].
pub fn pencil_to_json(p: &Pencil) -> String {
    let (dim, coeffs, mean) = match p {
        Pencil::Hermitian(lp) => (
            lp.dim(),
            lp.coeffs().iter().map(|c| raw_matrix(c.as_matrix())).collect::<Vec<_>>(),
            lp.mean().map(|m| raw_matrix(m.as_matrix())),
        ),
        Pencil::General(gp) => (gp.dim(), gp.coeffs().iter().map(raw_matrix).collect(), None),
    };
    let raw = RawPencil {
        n: coeffs.len(),
        dim,
        coeffs,
        mean,
    };
    serde_json::to_string(&raw).expect("finite entries always serialize")
}
