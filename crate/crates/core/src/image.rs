//! Small floating-point images and binary PPM/PGM I/O.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ImageShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl ImageShape {
    pub fn new(height: usize, width: usize, channels: usize) -> Self {
        Self { height, width, channels }
    }

    pub fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }
}

/// Row-major, channel-interleaved pixels in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct ImageTensor {
    shape: ImageShape,
    pixels: Vec<f64>,
}

impl ImageTensor {
    /// Wraps `pixels`, clamping every value into [0, 1].
    pub fn new(shape: ImageShape, mut pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != shape.len() || shape.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} pixels for a {}x{}x{} image",
                pixels.len(),
                shape.height,
                shape.width,
                shape.channels
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite pixel".into()));
        }
        clamp_unit(&mut pixels);
        Ok(Self { shape, pixels })
    }

    pub fn filled(shape: ImageShape, value: f64) -> Self {
        Self { shape, pixels: vec![value.clamp(0.0, 1.0); shape.len()] }
    }

    pub fn shape(&self) -> ImageShape {
        self.shape
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Replaces the pixels (clamped to [0, 1]).
    pub fn set_pixels(&mut self, pixels: &[f64]) {
        assert_eq!(pixels.len(), self.pixels.len());
        self.pixels.copy_from_slice(pixels);
        clamp_unit(&mut self.pixels);
    }

    /// Reads a binary PPM (P6) or PGM (P5) with maxval 255.
    pub fn read_pnm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        parse_pnm(&bytes).map_err(|message| Error::Parse { path: path.to_path_buf(), line: 1, message })
    }

    /// 8-bit quantized bytes in file order.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().map(|p| (p * 255.0).round() as u8).collect()
    }

    /// Writes P6 for 3-channel and P5 for 1-channel images.
    pub fn write_pnm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let magic = match self.channels() {
            1 => "P5",
            3 => "P6",
            c => return Err(Error::ShapeMismatch(format!("PNM needs 1 or 3 channels, image has {c}"))),
        };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width(), self.height()).into_bytes();
        out.extend(self.to_bytes());
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&out).map_err(|e| Error::io(path, e))
    }
}

fn clamp_unit(p: &mut [f64]) {
    p.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
}

fn parse_pnm(bytes: &[u8]) -> std::result::Result<ImageTensor, String> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let channels = match fields[0].as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(format!("unsupported magic {other:?} (want P5 or P6)")),
    };
    let num = |s: &str| s.parse::<usize>().map_err(|_| format!("bad header number {s:?}"));
    let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval != 255 {
        return Err(format!("maxval {maxval} unsupported (want 255)"));
    }
    let shape = ImageShape::new(height, width, channels);
    let raster = bytes.get(pos..pos + shape.len()).ok_or("truncated raster")?;
    let pixels = raster.iter().map(|&b| b as f64 / 255.0).collect();
    ImageTensor::new(shape, pixels).map_err(|e| e.to_string())
}
