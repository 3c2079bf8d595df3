//! Named weight tensors in a flat little-endian container.
//!
//! Layout (all integers `u32` little-endian):
//!
//! ```text
//! "CPTW" | tensor count | tensor*
//! tensor = name length | UTF-8 name | ndim | dims[ndim] | f32 values (row-major)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CPTW";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    /// Row-major values.
    pub values: Vec<f32>,
}

impl Tensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, values: Vec<f32>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::invalid(format!(
                "tensor shape {shape:?} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            shape,
            values,
        })
    }

    pub fn from_matrix(name: impl Into<String>, m: &DMatrix<f64>) -> Self {
        let values = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] as f32)
            .collect();
        Self {
            name: name.into(),
            shape: vec![m.nrows(), m.ncols()],
            values,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TensorFile {
    pub tensors: Vec<Tensor>,
}

impl TensorFile {
    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::invalid(format!("missing tensor `{name}`")))
    }

    /// A 2-D tensor as a matrix.
    pub fn matrix(&self, name: &str) -> Result<DMatrix<f64>> {
        let t = self.get(name)?;
        let &[rows, cols] = t.shape.as_slice() else {
            return Err(Error::invalid(format!(
                "tensor `{name}` has shape {:?}, expected 2-D",
                t.shape
            )));
        };
        Ok(DMatrix::from_row_iterator(
            rows,
            cols,
            t.values.iter().map(|&v| v as f64),
        ))
    }

    /// A 1-D tensor as a column vector.
    pub fn vector(&self, name: &str) -> Result<DVector<f64>> {
        let t = self.get(name)?;
        if t.shape.len() != 1 {
            return Err(Error::invalid(format!(
                "tensor `{name}` has shape {:?}, expected 1-D",
                t.shape
            )));
        }
        Ok(DVector::from_iterator(
            t.shape[0],
            t.values.iter().map(|&v| v as f64),
        ))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        write_u32(&mut w, self.tensors.len())?;
        for t in &self.tensors {
            write_u32(&mut w, t.name.len())?;
            w.write_all(t.name.as_bytes())?;
            write_u32(&mut w, t.shape.len())?;
            for &d in &t.shape {
                write_u32(&mut w, d)?;
            }
            for v in &t.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::invalid("not a weight container (bad magic)"));
        }
        let count = read_u32(&mut r)?;
        let mut tensors = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let len = read_u32(&mut r)?;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)?;
            let name =
                String::from_utf8(name).map_err(|_| Error::invalid("tensor name is not UTF-8"))?;
            let ndim = read_u32(&mut r)?;
            let shape = (0..ndim)
                .map(|_| read_u32(&mut r))
                .collect::<Result<Vec<_>>>()?;
            let n: usize = shape.iter().product();
            let mut raw = vec![0u8; n * 4];
            r.read_exact(&mut raw)?;
            let values = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            tensors.push(Tensor::new(name, shape, values)?);
        }
        Ok(Self { tensors })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(bytes.as_slice())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}

fn write_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::invalid("value exceeds u32"))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}
