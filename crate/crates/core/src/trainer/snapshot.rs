//! Binary parameter snapshots.
//!
//! Layout: an unsigned 64-bit little-endian parameter count `n`, followed by
//! `n` IEEE-754 binary64 values in little-endian byte order, in the network's
//! flat parameter order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::TrainError;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSnapshot {
    pub params: Vec<f64>,
}

impl ModelSnapshot {
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(&(self.params.len() as u64).to_le_bytes())?;
        for p in &self.params {
            out.write_all(&p.to_le_bytes())?;
        }
        out.flush()
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, TrainError> {
        let mut word = [0u8; 8];
        input.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        let mut params = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            input.read_exact(&mut word)?;
            params.push(f64::from_le_bytes(word));
        }
        let mut rest = Vec::new();
        input.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(TrainError::ShapeMismatch(format!(
                "snapshot declares {n} parameters but has {} trailing bytes",
                rest.len()
            )));
        }
        Ok(Self { params })
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
