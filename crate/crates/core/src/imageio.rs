//! 8-bit grayscale images and the binary PGM (P5) format.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Config(format!(
                "{}x{} image needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major pixel values, top row first.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Smooth diagonal gradient overlaid with a 16-pixel checkerboard.
    pub fn test_pattern(width: usize, height: usize) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        let span = (width + height).saturating_sub(2).max(1) as f64;
        for r in 0..height {
            for c in 0..width {
                let g = 200.0 * (r + c) as f64 / span;
                let check = if (r / 16 + c / 16) % 2 == 1 {
                    55.0
                } else {
                    0.0
                };
                pixels.push((g + check).round() as u8);
            }
        }
        GrayImage {
            width,
            height,
            pixels,
        }
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pgm_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::Format {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            // skip whitespace and comments
            while pos < bytes.len() {
                if bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                } else if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    break;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(
                std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?,
            );
        }
        if fields[0] != "P5" {
            return Err(bad("not a binary PGM (P5) file"));
        }
        let num = |s: &str, what: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| bad(&format!("invalid {what} '{s}'")))
        };
        let width = num(fields[1], "width")?;
        let height = num(fields[2], "height")?;
        let maxval = num(fields[3], "maxval")?;
        if maxval != 255 {
            return Err(bad("only maxval 255 is supported"));
        }
        // exactly one whitespace byte separates the header from the raster
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(bad("missing raster"));
        }
        pos += 1;
        let need = width
            .checked_mul(height)
            .ok_or_else(|| bad("image dimensions overflow"))?;
        if bytes.len() - pos < need {
            return Err(bad("raster shorter than width x height"));
        }
        Ok(GrayImage {
            width,
            height,
            pixels: bytes[pos..pos + need].to_vec(),
        })
    }

    pub fn read_pgm(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_pgm_bytes(&bytes, path)
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pgm_bytes()).map_err(|e| Error::io(path, e))
    }
}
