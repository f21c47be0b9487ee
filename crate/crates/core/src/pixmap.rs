//! Grayscale image ingestion, bit-plane access and 8×8 block partitioning.
//!
//! Every downstream stage works on square images whose side is a power of two
//! of at least 8, so that 8×8 blocks tile the image exactly. Irregular inputs
//! are zero-padded on load; the padding is reported through [`LoadedImage`].

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::report::Warning;

/// Largest colour depth accepted for pixel data.
pub const MAX_DEPTH: u32 = 16;

/// Smallest side exponent: one 8×8 block.
pub const MIN_SIDE_EXP: u32 = 3;

/// Samples of one 8×8 block, indexed `[row][col]`.
pub type Samples = [[f64; 8]; 8];

/// A `2^n × 2^n` grid of `q`-bit unsigned pixels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelImage {
    n: u32,
    q: u32,
    pixels: Vec<u32>,
}

impl PixelImage {
    pub fn new(n: u32, q: u32, pixels: Vec<u32>) -> Result<Self> {
        if n < MIN_SIDE_EXP {
            return Err(Error::InvalidImage(format!(
                "side 2^{n} is smaller than one 8x8 block"
            )));
        }
        if n > 15 {
            return Err(Error::InvalidImage(format!("side 2^{n} is too large")));
        }
        if q == 0 || q > MAX_DEPTH {
            return Err(Error::InvalidImage(format!(
                "colour depth {q} outside 1..={MAX_DEPTH}"
            )));
        }
        let side = 1usize << n;
        if pixels.len() != side * side {
            return Err(Error::InvalidImage(format!(
                "expected {} pixels, got {}",
                side * side,
                pixels.len()
            )));
        }
        let limit = 1u32 << q;
        if let Some(pos) = pixels.iter().position(|&p| p >= limit) {
            return Err(Error::InvalidImage(format!(
                "pixel {} at index {pos} does not fit {q} bits",
                pixels[pos]
            )));
        }
        Ok(Self { n, q, pixels })
    }

    /// Image with every pixel equal to `value`.
    pub fn filled(n: u32, q: u32, value: u32) -> Result<Self> {
        let side = 1usize << n.min(15);
        Self::new(n, q, vec![value; side * side])
    }

    pub fn from_fn(n: u32, q: u32, mut f: impl FnMut(usize, usize) -> u32) -> Result<Self> {
        let side = 1usize << n.min(15);
        let mut pixels = Vec::with_capacity(side * side);
        for y in 0..side {
            for x in 0..side {
                pixels.push(f(y, x));
            }
        }
        Self::new(n, q, pixels)
    }

    /// Side exponent: the image is `2^n` pixels wide and high.
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Colour depth in bits.
    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn side(&self) -> usize {
        1 << self.n
    }

    pub fn max_value(&self) -> u32 {
        (1u32 << self.q) - 1
    }

    pub fn pixels(&self) -> &[u32] {
        &self.pixels
    }

    pub fn get(&self, y: usize, x: usize) -> u32 {
        self.pixels[y * self.side() + x]
    }

    /// Bit `bit` of every pixel, row-major.
    pub fn bit_plane(&self, bit: u32) -> Vec<bool> {
        self.pixels.iter().map(|&p| (p >> bit) & 1 == 1).collect()
    }

    pub fn blocks_per_side(&self) -> usize {
        self.side() / 8
    }
}

/// One 8×8 tile of an image together with its block coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Block8 {
    pub block_row: usize,
    pub block_col: usize,
    pub samples: Samples,
}

/// Splits an image into 8×8 blocks in row-major block order.
///
/// Pixel `(Y, X)` lands in block `(Y / 8, X / 8)` at offset `(Y % 8, X % 8)`.
pub fn split_blocks(img: &PixelImage) -> Vec<Block8> {
    let per_side = img.blocks_per_side();
    let mut blocks = Vec::with_capacity(per_side * per_side);
    for block_row in 0..per_side {
        for block_col in 0..per_side {
            let mut samples = [[0.0; 8]; 8];
            for (u, row) in samples.iter_mut().enumerate() {
                for (v, s) in row.iter_mut().enumerate() {
                    *s = img.get(8 * block_row + u, 8 * block_col + v) as f64;
                }
            }
            blocks.push(Block8 {
                block_row,
                block_col,
                samples,
            });
        }
    }
    blocks
}

/// Inverse of [`split_blocks`]. Samples are rounded to the nearest integer.
pub fn assemble_blocks(blocks: &[Block8], n: u32, q: u32) -> Result<PixelImage> {
    let side = 1usize << n.min(15);
    let per_side = side / 8;
    if blocks.len() != per_side * per_side {
        return Err(Error::InvalidImage(format!(
            "expected {} blocks, got {}",
            per_side * per_side,
            blocks.len()
        )));
    }
    let mut pixels = vec![0u32; side * side];
    for b in blocks {
        if b.block_row >= per_side || b.block_col >= per_side {
            return Err(Error::InvalidImage(format!(
                "block ({}, {}) outside a {per_side}x{per_side} grid",
                b.block_row, b.block_col
            )));
        }
        for u in 0..8 {
            for v in 0..8 {
                let s = b.samples[u][v].round();
                if !(0.0..=u32::MAX as f64).contains(&s) {
                    return Err(Error::InvalidImage(format!("sample {s} is not a pixel")));
                }
                pixels[(8 * b.block_row + u) * side + 8 * b.block_col + v] = s as u32;
            }
        }
    }
    PixelImage::new(n, q, pixels)
}

/// Total number of set bits over all pixels.
pub fn count_one_bits(img: &PixelImage) -> u64 {
    img.pixels.iter().map(|p| u64::from(p.count_ones())).sum()
}

/// Result of reading a PGM file.
#[derive(Debug, Clone)]
pub struct LoadedImage {
    pub image: PixelImage,
    pub source_width: usize,
    pub source_height: usize,
}

impl LoadedImage {
    pub fn padded(&self) -> bool {
        let side = self.image.side();
        self.source_width != side || self.source_height != side
    }

    pub fn warning(&self) -> Option<Warning> {
        self.padded().then(|| Warning::Padded {
            width: self.source_width,
            height: self.source_height,
            side: self.image.side(),
        })
    }
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<LoadedImage> {
    let bytes = fs::read(path)?;
    parse_pgm(&bytes)
}

struct Header<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Pgm(format!("expected {what}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Pgm(format!("{what} out of range")))
    }
}

/// Parses binary (`P5`) or ASCII (`P2`) PGM data.
pub fn parse_pgm(bytes: &[u8]) -> Result<LoadedImage> {
    if bytes.is_empty() {
        return Err(Error::Pgm("empty file".into()));
    }
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'2' | b'5') {
        return Err(Error::Pgm("missing P2/P5 magic".into()));
    }
    let binary = bytes[1] == b'5';
    let mut hdr = Header { data: bytes, pos: 2 };
    let width = hdr.number("width")? as usize;
    let height = hdr.number("height")? as usize;
    let maxval = hdr.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Pgm("zero image dimension".into()));
    }
    if maxval == 0 || maxval > 65535 || (maxval + 1) & maxval != 0 {
        return Err(Error::Pgm(format!("maxval {maxval} is not of the form 2^q-1")));
    }
    let q = (maxval + 1).trailing_zeros();

    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::Pgm("image dimensions overflow".into()))?;
    let mut raster = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates header and raster
        if hdr.pos >= bytes.len() || !bytes[hdr.pos].is_ascii_whitespace() {
            return Err(Error::Pgm("missing raster separator".into()));
        }
        let data = &bytes[hdr.pos + 1..];
        let wide = maxval > 255;
        let need = if wide { 2 * count } else { count };
        if data.len() < need {
            return Err(Error::Pgm(format!(
                "raster truncated: {} of {need} bytes",
                data.len()
            )));
        }
        if wide {
            raster.extend(
                data[..need]
                    .chunks_exact(2)
                    .map(|c| u32::from(u16::from_be_bytes([c[0], c[1]]))),
            );
        } else {
            raster.extend(data[..need].iter().map(|&b| u32::from(b)));
        }
    } else {
        for _ in 0..count {
            raster.push(hdr.number("sample")? as u32);
        }
    }
    if let Some(bad) = raster.iter().find(|&&v| u64::from(v) > maxval) {
        return Err(Error::Pgm(format!("sample {bad} exceeds maxval {maxval}")));
    }
    pad_to_square(width, height, q, &raster)
}

fn pad_to_square(width: usize, height: usize, q: u32, raster: &[u32]) -> Result<LoadedImage> {
    if width < 8 || height < 8 {
        return Err(Error::InvalidImage(format!(
            "{width}x{height} image cannot hold one 8x8 block"
        )));
    }
    let side = width.max(height).next_power_of_two();
    let n = side.trailing_zeros();
    let mut pixels = vec![0u32; side * side];
    for y in 0..height {
        pixels[y * side..y * side + width].copy_from_slice(&raster[y * width..(y + 1) * width]);
    }
    Ok(LoadedImage {
        image: PixelImage::new(n, q, pixels)?,
        source_width: width,
        source_height: height,
    })
}

/// Encodes an image as binary PGM (`P5`). Depths above 8 bits use two bytes
/// per sample, most significant first.
pub fn encode_pgm(img: &PixelImage) -> Vec<u8> {
    let side = img.side();
    let mut out = format!("P5\n{side} {side}\n{}\n", img.max_value()).into_bytes();
    if img.q() > 8 {
        for &p in img.pixels() {
            out.extend_from_slice(&(p as u16).to_be_bytes());
        }
    } else {
        out.extend(img.pixels().iter().map(|&p| p as u8));
    }
    out
}

pub fn write_pgm(img: &PixelImage, path: impl AsRef<Path>) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode_pgm(img))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ascii_pgm(w: usize, h: usize, maxval: u32, fill: u32) -> Vec<u8> {
        let mut s = format!("P2\n# test image\n{w} {h}\n{maxval}\n");
        for _ in 0..w * h {
            s.push_str(&format!("{fill} "));
        }
        s.into_bytes()
    }

    #[test]
    fn square_8bit_maps_header() {
        let img = PixelImage::filled(8, 8, 17).unwrap();
        let loaded = parse_pgm(&encode_pgm(&img)).unwrap();
        assert_eq!(loaded.image.n(), 8);
        assert_eq!(loaded.image.q(), 8);
        assert!(!loaded.padded());
        assert_eq!(loaded.image, img);
    }

    #[test]
    fn irregular_size_is_zero_padded() {
        let loaded = parse_pgm(&ascii_pgm(200, 200, 255, 9)).unwrap();
        assert_eq!(loaded.image.n(), 8);
        assert_eq!(loaded.image.q(), 8);
        assert!(loaded.padded());
        assert_eq!(
            loaded.warning(),
            Some(Warning::Padded {
                width: 200,
                height: 200,
                side: 256
            })
        );
        assert_eq!(loaded.image.get(199, 199), 9);
        assert_eq!(loaded.image.get(200, 0), 0);
        assert_eq!(loaded.image.get(0, 255), 0);
    }

    #[test]
    fn non_square_pads_to_larger_side() {
        let loaded = parse_pgm(&ascii_pgm(20, 9, 15, 3)).unwrap();
        assert_eq!(loaded.image.n(), 5);
        assert_eq!(loaded.image.q(), 4);
    }

    #[test]
    fn tiny_image_is_rejected() {
        assert!(matches!(
            parse_pgm(&ascii_pgm(1, 1, 255, 0)),
            Err(Error::InvalidImage(_))
        ));
    }

    #[test]
    fn header_errors() {
        assert!(matches!(parse_pgm(b""), Err(Error::Pgm(_))));
        assert!(matches!(parse_pgm(b"P6\n8 8\n255\n"), Err(Error::Pgm(_))));
        assert!(matches!(parse_pgm(b"P5\n8 8\n200\n"), Err(Error::Pgm(_))));
        assert!(matches!(parse_pgm(b"P5\n8 x\n255\n"), Err(Error::Pgm(_))));
        assert!(matches!(parse_pgm(b"P5\n8 8\n255\n\x00\x01"), Err(Error::Pgm(_))));
    }

    #[test]
    fn sixteen_bit_binary_round_trip() {
        let img = PixelImage::from_fn(3, 12, |y, x| (y * 500 + x * 7) as u32).unwrap();
        let loaded = parse_pgm(&encode_pgm(&img)).unwrap();
        assert_eq!(loaded.image, img);
    }

    #[test]
    fn block_counts() {
        assert_eq!(split_blocks(&PixelImage::filled(3, 8, 0).unwrap()).len(), 1);
        assert_eq!(split_blocks(&PixelImage::filled(8, 8, 0).unwrap()).len(), 1024);
    }

    #[test]
    fn pixel_lands_in_expected_block() {
        let img = PixelImage::from_fn(4, 8, |y, x| if (y, x) == (9, 2) { 200 } else { 0 }).unwrap();
        let blocks = split_blocks(&img);
        let b = &blocks[2]; // block (1, 0) in a 2x2 grid
        assert_eq!((b.block_row, b.block_col), (1, 0));
        assert_eq!(b.samples[1][2], 200.0);
        let total: f64 = blocks.iter().flat_map(|b| b.samples.iter().flatten()).sum();
        assert_eq!(total, 200.0);
    }

    #[test]
    fn one_bit_counts() {
        assert_eq!(count_one_bits(&PixelImage::filled(3, 8, 0).unwrap()), 0);
        let single = PixelImage::from_fn(3, 8, |y, x| if y + x == 0 { 255 } else { 0 }).unwrap();
        assert_eq!(count_one_bits(&single), 8);
        let quad = PixelImage::from_fn(3, 8, |y, x| match (y, x) {
            (0, 0) => 0,
            (0, 1) => 128,
            (1, 0) => 192,
            (1, 1) => 255,
            _ => 0,
        })
        .unwrap();
        assert_eq!(count_one_bits(&quad), 11);
    }

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(PixelImage::new(3, 4, vec![16; 64]).is_err());
        assert!(PixelImage::new(2, 8, vec![0; 16]).is_err());
        assert!(PixelImage::new(3, 8, vec![0; 63]).is_err());
    }
}
