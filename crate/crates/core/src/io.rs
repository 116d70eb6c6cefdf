//! File formats: binary netpbm images, raw level set dumps, landmark lists,
//! scribble masks and `key = value` configs.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::forces::{Image, LabelSet};
use crate::grid::ScalarField;
use crate::sdf::BinaryMask;

pub const PHI_MAGIC: &[u8; 4] = b"PHI0";
pub const PHI_HEADER_LEN: usize = 16;

/// Scribble PGM values.
pub const SCRIBBLE_OBJECT: u8 = 255;
pub const SCRIBBLE_BACKGROUND: u8 = 128;

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

struct Pnm {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

fn parse_pnm(bytes: &[u8]) -> Result<Pnm> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(fmt_err("not a binary PGM (P5) or PPM (P6) file")),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| fmt_err("malformed netpbm header"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(fmt_err("malformed netpbm header"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(fmt_err(format!("only 8-bit netpbm is supported (maxval {maxval})")));
    }
    if width == 0 || height == 0 {
        return Err(fmt_err("empty image"));
    }
    let len = width * height * channels;
    let pixels = bytes
        .get(pos..pos + len)
        .ok_or_else(|| fmt_err("truncated pixel data"))?
        .to_vec();
    Ok(Pnm {
        width,
        height,
        channels,
        pixels,
    })
}

fn encode_pnm(width: usize, height: usize, channels: usize, pixels: &[u8]) -> Vec<u8> {
    let magic = if channels == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

fn to_byte(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let pnm = parse_pnm(bytes)?;
    let data = pnm.pixels.iter().map(|&b| b as f64 / 255.0).collect();
    Image::new(pnm.width, pnm.height, pnm.channels, data)
}

pub fn encode_image(img: &Image) -> Vec<u8> {
    let bytes: Vec<u8> = img.data().iter().map(|&x| to_byte(x)).collect();
    encode_pnm(img.width(), img.height(), img.channels(), &bytes)
}

/// Reads a P5 or P6 file, scaled to `[0, 1]`.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    decode_image(&fs::read(path)?)
}

pub fn write_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    Ok(fs::write(path, encode_image(img))?)
}

/// Masks are stored as PGM with the object at 255 and background at 0.
pub fn encode_mask(mask: &BinaryMask) -> Vec<u8> {
    let bytes: Vec<u8> = mask.values().iter().map(|&v| if v == 0 { 255 } else { 0 }).collect();
    encode_pnm(mask.width(), mask.height(), 1, &bytes)
}

/// Gray values `>= 128` are object.
pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask> {
    let pnm = parse_pnm(bytes)?;
    if pnm.channels != 1 {
        return Err(fmt_err("mask must be a PGM"));
    }
    Ok(BinaryMask::from_fn(pnm.width, pnm.height, |m, n| {
        pnm.pixels[n * pnm.width + m] >= 128
    }))
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    decode_mask(&fs::read(path)?)
}

pub fn write_mask(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<()> {
    Ok(fs::write(path, encode_mask(mask))?)
}

pub fn encode_phi(phi: &ScalarField) -> Vec<u8> {
    let mut out = Vec::with_capacity(PHI_HEADER_LEN + 8 * phi.len());
    out.extend_from_slice(PHI_MAGIC);
    out.extend_from_slice(&(phi.width() as u32).to_le_bytes());
    out.extend_from_slice(&(phi.height() as u32).to_le_bytes());
    out.extend_from_slice(&[0; 4]);
    for x in phi.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_phi(bytes: &[u8]) -> Result<ScalarField> {
    if bytes.len() < PHI_HEADER_LEN || &bytes[..4] != PHI_MAGIC {
        return Err(fmt_err("missing PHI0 header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (w, h) = (word(4), word(8));
    let body = &bytes[PHI_HEADER_LEN..];
    let expected = w.checked_mul(h).and_then(|n| n.checked_mul(8));
    match expected {
        Some(len) if w > 0 && h > 0 && body.len() == len => {}
        _ => return Err(fmt_err(format!("phi body has {} bytes, header says {w}x{h}", body.len()))),
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ScalarField::from_vec(w, h, data)
}

pub fn read_phi(path: impl AsRef<Path>) -> Result<ScalarField> {
    decode_phi(&fs::read(path)?)
}

pub fn write_phi(path: impl AsRef<Path>, phi: &ScalarField) -> Result<()> {
    Ok(fs::write(path, encode_phi(phi))?)
}

/// One `m n` pair per line; blank lines and `#` comments are skipped.
pub fn parse_landmarks(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<usize> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| fmt_err(format!("landmarks line {}: expected two integers", lineno + 1)))?;
        match nums[..] {
            [m, n] => out.push((m, n)),
            _ => return Err(fmt_err(format!("landmarks line {}: expected two integers", lineno + 1))),
        }
    }
    Ok(out)
}

pub fn format_landmarks(points: &[(usize, usize)]) -> String {
    points.iter().map(|(m, n)| format!("{m} {n}\n")).collect()
}

pub fn read_landmarks(path: impl AsRef<Path>) -> Result<Vec<(usize, usize)>> {
    parse_landmarks(&fs::read_to_string(path)?)
}

/// Scribble PGM: 255 object, 128 background, 0 unlabeled.
pub fn decode_scribbles(bytes: &[u8]) -> Result<LabelSet> {
    let pnm = parse_pnm(bytes)?;
    if pnm.channels != 1 {
        return Err(fmt_err("scribbles must be a PGM"));
    }
    let mut object = Vec::new();
    let mut background = Vec::new();
    for (i, &v) in pnm.pixels.iter().enumerate() {
        let p = (i % pnm.width, i / pnm.width);
        match v {
            SCRIBBLE_OBJECT => object.push(p),
            SCRIBBLE_BACKGROUND => background.push(p),
            0 => {}
            other => return Err(fmt_err(format!("unexpected scribble value {other} at {} {}", p.0, p.1))),
        }
    }
    Ok(LabelSet::with_scribbles(object, background))
}

pub fn encode_scribbles(width: usize, height: usize, labels: &LabelSet) -> Vec<u8> {
    let mut px = vec![0u8; width * height];
    for &(m, n) in &labels.object {
        px[n * width + m] = SCRIBBLE_OBJECT;
    }
    for &(m, n) in &labels.background {
        px[n * width + m] = SCRIBBLE_BACKGROUND;
    }
    encode_pnm(width, height, 1, &px)
}

pub fn read_scribbles(path: impl AsRef<Path>) -> Result<LabelSet> {
    decode_scribbles(&fs::read(path)?)
}

/// `key = value` lines with `#` comments, in file order.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| fmt_err(format!("config line {}: expected `key = value`", lineno + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(fmt_err(format!("config line {}: empty key", lineno + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Pixels with a 4-neighbor on the other side of the zero level
/// (`phi <= 0` versus `phi > 0`).
pub fn contour_pixels(phi: &ScalarField) -> Vec<bool> {
    let (w, h) = phi.dims();
    let inside = |m: usize, n: usize| phi[(m, n)] <= 0.0;
    let mut out = vec![false; w * h];
    for n in 0..h {
        for m in 0..w {
            let s = inside(m, n);
            out[n * w + m] = (m > 0 && inside(m - 1, n) != s)
                || (m + 1 < w && inside(m + 1, n) != s)
                || (n > 0 && inside(m, n - 1) != s)
                || (n + 1 < h && inside(m, n + 1) != s);
        }
    }
    out
}

/// RGB copy of `img` with the zero level of `phi` drawn in red.
pub fn overlay(img: &Image, phi: &ScalarField) -> Result<Image> {
    phi.check_dims(img.dims())?;
    let contour = contour_pixels(phi);
    let mut data = Vec::with_capacity(3 * contour.len());
    for (px, &on) in img.pixels().zip(&contour) {
        if on {
            data.extend_from_slice(&[1.0, 0.0, 0.0]);
        } else if px.len() == 3 {
            data.extend_from_slice(px);
        } else {
            data.extend_from_slice(&[px[0]; 3]);
        }
    }
    Image::new(img.width(), img.height(), 3, data)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
