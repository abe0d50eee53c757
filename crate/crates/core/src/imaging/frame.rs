use std::io::{Read, Write};

use crate::{Error, Result};

/// Row-major pixel grid of photon counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFrame {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
    /// Pixel pitch in micrometres.
    pub pixel_size: f64,
    /// Mean detected photons per pixel without atoms or fringes.
    pub photons: f64,
}

impl ImageFrame {
    pub fn zeros(height: usize, width: usize) -> Self {
        ImageFrame {
            height,
            width,
            data: vec![0.0; height * width],
            pixel_size: 0.6,
            photons: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.len() as f64
    }

    /// Mean and rms of the pixels selected by `select`.
    pub fn masked_stats(&self, select: &[bool]) -> (f64, f64) {
        let vals: Vec<f64> = self
            .data
            .iter()
            .zip(select)
            .filter(|(_, &s)| s)
            .map(|(&v, _)| v)
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let rms = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        (mean, rms)
    }
}

const MAGIC: &[u8; 4] = b"XSQF";
const DTYPE_F64: u32 = 1;

/// Writes a frame as a little-endian raster: 4-byte magic `XSQF`, then
/// `u32` height, `u32` width, `u32` dtype (1 = f64), then `H*W` pixel values
/// in row-major order.
pub fn write_raster<W: Write>(frame: &ImageFrame, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(frame.height as u32).to_le_bytes())?;
    w.write_all(&(frame.width as u32).to_le_bytes())?;
    w.write_all(&DTYPE_F64.to_le_bytes())?;
    for v in &frame.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_raster<R: Read>(mut r: R) -> Result<ImageFrame> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::config("not a frame raster (bad magic)"));
    }
    let mut word = [0u8; 4];
    let mut next = |r: &mut R| -> Result<u32> {
        r.read_exact(&mut word)?;
        Ok(u32::from_le_bytes(word))
    };
    let height = next(&mut r)? as usize;
    let width = next(&mut r)? as usize;
    let dtype = next(&mut r)?;
    if dtype != DTYPE_F64 {
        return Err(Error::config(format!("unsupported raster dtype {dtype}")));
    }
    let mut data = Vec::with_capacity(height * width);
    let mut buf = [0u8; 8];
    for _ in 0..height * width {
        r.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    Ok(ImageFrame {
        height,
        width,
        data,
        ..ImageFrame::zeros(0, 0)
    })
}
