//! PGM (P5/P2) and PFM (`Pf`) readers and writers.
//!
//! PGM holds 8- or 16-bit gray images and binary masks (255 inside, 0
//! outside). PFM holds real fields as 32-bit floats, written little-endian
//! (scale `-1.0`) with the bottom row first, as the format prescribes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, ShapeError};
use crate::field::{BinaryMask, ScalarField};

fn format_err(msg: impl Into<String>) -> ShapeError {
    ShapeError::Format(msg.into())
}

/// Reads whitespace-separated header tokens, skipping `#` comments, and
/// consumes the single whitespace byte that ends the header.
struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn token(&mut self) -> Result<&'a str> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b'#') => {
                    while let Some(&c) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if c == b'\n' {
                            break;
                        }
                    }
                }
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(_) => break,
                None => return Err(format_err("truncated header")),
            }
        }
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|c| !c.is_ascii_whitespace())
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| format_err("non-ASCII header"))
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| format_err(format!("bad {what} {tok:?}")))
    }

    fn end_of_header(&mut self) -> Result<&'a [u8]> {
        match self.bytes.get(self.pos) {
            Some(c) if c.is_ascii_whitespace() => Ok(&self.bytes[self.pos + 1..]),
            _ => Err(format_err("missing whitespace after header")),
        }
    }
}

/// Gray image as stored: raw sample values and the declared maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub samples: ScalarField,
    pub maxval: u16,
}

impl GrayImage {
    /// Samples divided by `maxval`, in `[0, 1]`.
    pub fn normalized(&self) -> ScalarField {
        let m = f64::from(self.maxval);
        self.samples.map(|v| v / m).expect("finite samples")
    }
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut hdr = HeaderReader { bytes, pos: 0 };
    let magic = hdr.token()?;
    let binary = match magic {
        "P5" => true,
        "P2" => false,
        other => return Err(format_err(format!("not a PGM file (magic {other:?})"))),
    };
    let width: usize = hdr.number("width")?;
    let height: usize = hdr.number("height")?;
    let maxval: u32 = hdr.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(format!("maxval {maxval} out of range")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| format_err("image too large"))?;
    let values: Vec<f64> = if binary {
        let data = hdr.end_of_header()?;
        let depth = if maxval < 256 { 1 } else { 2 };
        if data.len() < n * depth {
            return Err(format_err(format!(
                "raster has {} bytes, expected {}",
                data.len(),
                n * depth
            )));
        }
        if depth == 1 {
            data[..n].iter().map(|&b| f64::from(b)).collect()
        } else {
            data[..2 * n]
                .chunks_exact(2)
                .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])))
                .collect()
        }
    } else {
        (0..n)
            .map(|_| hdr.number::<u32>("sample").map(f64::from))
            .collect::<Result<_>>()?
    };
    if values.iter().any(|&v| v > f64::from(maxval)) {
        return Err(format_err("sample exceeds maxval"));
    }
    Ok(GrayImage {
        samples: ScalarField::new(height, width, values)?,
        maxval: maxval as u16,
    })
}

pub fn read_pgm_file(path: impl AsRef<Path>) -> Result<GrayImage> {
    parse_pgm(&std::fs::read(path)?)
}

/// Writes an 8-bit binary PGM. Samples are rounded and clamped to `0..=255`.
pub fn write_pgm(out: &mut dyn Write, image: &ScalarField) -> Result<()> {
    write!(out, "P5\n{} {}\n255\n", image.width(), image.height())?;
    let raster: Vec<u8> = image
        .values()
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    out.write_all(&raster)?;
    Ok(())
}

pub fn write_pgm_file(path: impl AsRef<Path>, image: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_pgm(&mut w, image)?;
    w.flush()?;
    Ok(())
}

pub fn write_mask(out: &mut dyn Write, mask: &BinaryMask) -> Result<()> {
    write!(out, "P5\n{} {}\n255\n", mask.width(), mask.height())?;
    let raster: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    out.write_all(&raster)?;
    Ok(())
}

pub fn write_mask_file(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_mask(&mut w, mask)?;
    w.flush()?;
    Ok(())
}

/// Any nonzero sample is inside.
pub fn read_mask_file(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = read_pgm_file(path)?;
    BinaryMask::new(
        img.samples.height(),
        img.samples.width(),
        img.samples.values().iter().map(|&v| v > 0.0).collect(),
    )
}

pub fn parse_pfm(bytes: &[u8]) -> Result<ScalarField> {
    let mut hdr = HeaderReader { bytes, pos: 0 };
    match hdr.token()? {
        "Pf" => {}
        "PF" => return Err(format_err("color PFM is not supported")),
        other => return Err(format_err(format!("not a PFM file (magic {other:?})"))),
    }
    let width: usize = hdr.number("width")?;
    let height: usize = hdr.number("height")?;
    let scale: f64 = hdr.number("scale")?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(format_err("PFM scale must be nonzero"));
    }
    let little = scale < 0.0;
    let data = hdr.end_of_header()?;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| format_err("image too large"))?;
    if data.len() < 4 * n {
        return Err(format_err(format!(
            "raster has {} bytes, expected {}",
            data.len(),
            4 * n
        )));
    }
    let mut values = vec![0.0; n];
    for (k, c) in data[..4 * n].chunks_exact(4).enumerate() {
        let b = [c[0], c[1], c[2], c[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        // stored bottom row first
        let (r, col) = (k / width, k % width);
        values[(height - 1 - r) * width + col] = f64::from(v);
    }
    ScalarField::new(height, width, values)
}

pub fn read_pfm_file(path: impl AsRef<Path>) -> Result<ScalarField> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    parse_pfm(&bytes)
}

/// Values are narrowed to `f32`.
pub fn write_pfm(out: &mut dyn Write, field: &ScalarField) -> Result<()> {
    let (h, w) = field.dims();
    write!(out, "Pf\n{w} {h}\n-1.0\n")?;
    let mut raster = Vec::with_capacity(4 * h * w);
    for i in (0..h).rev() {
        for j in 0..w {
            raster.extend_from_slice(&(field.get(i, j) as f32).to_le_bytes());
        }
    }
    out.write_all(&raster)?;
    Ok(())
}

pub fn write_pfm_file(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_pfm(&mut w, field)?;
    w.flush()?;
    Ok(())
}

/// Intensity scale applied to PGM input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntensityScale {
    /// Samples as stored (0..=255 for 8-bit files).
    #[default]
    Raw,
    /// Samples divided by the file's maxval.
    Normalized,
}

/// Loads a field from PGM or PFM, chosen by the magic number. PFM values
/// are used as stored; PGM samples follow `scale`.
pub fn read_field_file(path: impl AsRef<Path>, scale: IntensityScale) -> Result<ScalarField> {
    let bytes = std::fs::read(path)?;
    match bytes.get(..2) {
        Some(b"Pf") | Some(b"PF") => parse_pfm(&bytes),
        Some(b"P5") | Some(b"P2") => {
            let img = parse_pgm(&bytes)?;
            Ok(match scale {
                IntensityScale::Raw => img.samples,
                IntensityScale::Normalized => img.normalized(),
            })
        }
        _ => Err(format_err("unrecognized file format (expected PGM or PFM)")),
    }
}
