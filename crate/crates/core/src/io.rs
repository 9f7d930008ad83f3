//! Operator files: `{"n", "basis": "lex-pairs-1based", "matrix", "meta"}`,
//! row-major and symmetric.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bivector::BivectorSpace;
use crate::curvature::CurvatureOperator;
use crate::{Error, NumericPolicy, Result};

pub const BASIS_TAG: &str = "lex-pairs-1based";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorFile {
    pub n: usize,
    pub basis: String,
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub meta: Map<String, Value>,
}

impl OperatorFile {
    pub fn from_operator(r: &CurvatureOperator, meta: Map<String, Value>) -> Self {
        let m = r.matrix();
        Self {
            n: r.n(),
            basis: BASIS_TAG.to_string(),
            matrix: m.row_iter().map(|row| row.iter().copied().collect()).collect(),
            meta,
        }
    }

    fn raw_matrix(&self) -> Result<(BivectorSpace, DMatrix<f64>)> {
        if self.basis != BASIS_TAG {
            return Err(Error::InvalidArgument(format!(
                "unknown basis tag {:?}, expected {BASIS_TAG:?}",
                self.basis
            )));
        }
        let space = BivectorSpace::new(self.n)?;
        let d = space.dim();
        if self.matrix.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.matrix.len(),
            });
        }
        if let Some(row) = self.matrix.iter().find(|row| row.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: row.len(),
            });
        }
        let m = DMatrix::from_fn(d, d, |i, j| self.matrix[i][j]);
        Ok((space, m))
    }

    /// Validated operator; with `project`, a symmetric matrix off the
    /// Bianchi subspace is projected instead of rejected.
    pub fn to_operator(&self, policy: &NumericPolicy, project: bool) -> Result<CurvatureOperator> {
        let (space, m) = self.raw_matrix()?;
        if project {
            CurvatureOperator::project(&space, &m)
        } else {
            CurvatureOperator::from_matrix_with(&space, m, policy)
        }
    }
}

pub fn read_operator<R: Read>(reader: R, policy: &NumericPolicy, project: bool) -> Result<(CurvatureOperator, Map<String, Value>)> {
    let file: OperatorFile = serde_json::from_reader(reader)?;
    let r = file.to_operator(policy, project)?;
    Ok((r, file.meta))
}

pub fn write_operator<W: Write>(mut writer: W, r: &CurvatureOperator, meta: Map<String, Value>) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, &OperatorFile::from_operator(r, meta))?;
    writeln!(writer)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn round_trip_is_exact() {
        let r = models::random_bianchi(5, 3, 1.0).unwrap();
        let mut meta = Map::new();
        meta.insert("model".into(), Value::from("random"));
        let mut buf = Vec::new();
        write_operator(&mut buf, &r, meta.clone()).unwrap();
        let (back, meta_back) = read_operator(buf.as_slice(), &NumericPolicy::default(), false).unwrap();
        assert_eq!(back.matrix(), r.matrix());
        assert_eq!(meta_back, meta);
    }

    #[test]
    fn rejects_bad_files() {
        let policy = NumericPolicy::default();
        let bad_tag = r#"{"n":2,"basis":"other","matrix":[[1.0]]}"#;
        assert!(read_operator(bad_tag.as_bytes(), &policy, false).is_err());
        let wrong_size = r#"{"n":3,"basis":"lex-pairs-1based","matrix":[[1.0]]}"#;
        assert!(matches!(
            read_operator(wrong_size.as_bytes(), &policy, false),
            Err(Error::DimensionMismatch { .. })
        ));
        let r = models::random_bianchi(4, 1, 1.0).unwrap();
        let mut file = OperatorFile::from_operator(&r, Map::new());
        file.matrix[0][5] += 0.3;
        file.matrix[5][0] += 0.3;
        assert!(matches!(file.to_operator(&policy, false), Err(Error::BianchiViolation(_))));
        let projected = file.to_operator(&policy, true).unwrap();
        assert!(projected.bianchi_residual() < 1e-12);
    }
}
