use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Maps a first-action probability to an intensity `σ(gain·(x - center))` in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelCode {
    pub gain: f64,
    pub center: f64,
}

impl Default for PixelCode {
    fn default() -> Self {
        Self {
            gain: 10.0,
            center: 0.5,
        }
    }
}

impl PixelCode {
    pub fn encode(&self, x: f64) -> f64 {
        1.0 / (1.0 + (-self.gain * (x - self.center)).exp())
    }

    pub fn decode(&self, v: f64) -> f64 {
        self.center + (v / (1.0 - v)).ln() / self.gain
    }

    pub fn quantize(v: f64) -> u8 {
        (v * 255.0).round().clamp(0.0, 255.0) as u8
    }
}

/// Grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    /// Binary PPM (P6); each gray value fills all three channels.
    pub fn write_ppm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        let rgb: Vec<u8> = self.pixels.iter().flat_map(|&p| [p, p, p]).collect();
        w.write_all(&rgb)?;
        Ok(())
    }

    pub fn save_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_ppm(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn inverted(&self) -> Self {
        Self {
            pixels: self.pixels.iter().map(|p| 255 - p).collect(),
            ..self.clone()
        }
    }
}

/// Unquantized intensities of the first-action probabilities `x_first`, one per player.
pub fn encode_intensities(x_first: &[f64], code: &PixelCode) -> Vec<f64> {
    x_first.iter().map(|&x| code.encode(x)).collect()
}

/// One pixel per player, laid out row-major on a `width × height` grid.
pub fn encode_grid(
    x_first: &[f64],
    width: usize,
    height: usize,
    code: &PixelCode,
) -> Result<Image> {
    if x_first.len() != width * height {
        return Err(Error::shape(format!(
            "{} players do not fill a {width}x{height} grid",
            x_first.len()
        )));
    }
    Ok(Image {
        width,
        height,
        pixels: encode_intensities(x_first, code)
            .into_iter()
            .map(PixelCode::quantize)
            .collect(),
    })
}

/// Mean absolute pixel difference scaled to `[0, 1]`.
pub fn image_distance(a: &Image, b: &Image) -> Result<f64> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::shape(format!(
            "images are {}x{} and {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let total: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&p, &q)| (p as f64 - q as f64).abs())
        .sum();
    Ok(total / (255.0 * a.pixels.len().max(1) as f64))
}
