//! JSON file formats.
//!
//! A matrix is `{"dim": p, "entries": [[re, im], ...]}` with the `p * p`
//! entries in row-major order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{c, CMatrix, HermitianMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let p = m.nrows();
        let mut entries = Vec::with_capacity(p * p);
        for i in 0..p {
            for j in 0..p {
                let z = m[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        Self { dim: p, entries }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let p = self.dim;
        if p == 0 {
            return Err(Error::Format("matrix dim must be >= 1".into()));
        }
        if self.entries.len() != p * p {
            return Err(Error::Format(format!(
                "matrix of dim {p} needs {} entries, got {}",
                p * p,
                self.entries.len()
            )));
        }
        let m = CMatrix::from_fn(p, p, |i, j| {
            let [re, im] = self.entries[i * p + j];
            c(re, im)
        });
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }
}

impl TryFrom<MatrixJson> for HermitianMatrix {
    type Error = Error;

    fn try_from(value: MatrixJson) -> Result<Self> {
        HermitianMatrix::new(value.to_matrix()?)
    }
}

impl From<HermitianMatrix> for MatrixJson {
    fn from(h: HermitianMatrix) -> Self {
        MatrixJson::from(h.as_matrix())
    }
}

/// Serde adapter for fields of type [`CMatrix`].
pub mod cmatrix_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        MatrixJson::deserialize(d)?.to_matrix().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<CMatrix>`.
pub mod cmatrix_vec_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(MatrixJson::from).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMatrix>, D::Error> {
        Vec::<MatrixJson>::deserialize(d)?
            .iter()
            .map(|m| m.to_matrix().map_err(serde::de::Error::custom))
            .collect()
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
