//! Classical JPEG front end and reference decoder over 8×8 blocks.
//!
//! The transform pair uses `c(0) = 1/(2√2)`, `c(u≠0) = 1/2`, which makes it
//! orthonormal. There is no level shift: samples enter the DCT unshifted so
//! that the DC coefficient of a `q`-bit block stays below `8·2^q`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pixmap::{split_blocks, Block8, PixelImage, Samples};

/// Luminance quantization table used throughout.
pub const STANDARD_QUANT: [[u32; 8]; 8] = [
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
];

/// Zigzag scan: position `k` of the scan reads coefficient `ZIGZAG[k]` in
/// row-major numbering.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7,
    14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39,
    46, 53, 60, 61, 54, 47, 55, 62, 63,
];

/// Normalisation factor `c(u)`.
pub fn norm_factor(u: usize) -> f64 {
    if u == 0 {
        1.0 / (2.0 * 2f64.sqrt())
    } else {
        0.5
    }
}

/// `basis()[u][i] = c(u)·cos((i + 0.5)·π·u / 8)`.
fn basis() -> &'static [[f64; 8]; 8] {
    static TABLE: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[0.0; 8]; 8];
        for (u, row) in t.iter_mut().enumerate() {
            for (i, e) in row.iter_mut().enumerate() {
                *e = norm_factor(u) * ((i as f64 + 0.5) * PI * u as f64 / 8.0).cos();
            }
        }
        t
    })
}

/// IDCT weight of coefficient `(u, v)` at sample `(i, j)`:
/// `c(u)c(v)cos[(i+0.5)πu/8]cos[(j+0.5)πv/8]`.
pub fn idct_weight(i: usize, j: usize, u: usize, v: usize) -> f64 {
    let b = basis();
    b[u][i] * b[v][j]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DctBlock(pub [[f64; 8]; 8]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuantMatrix([[u32; 8]; 8]);

impl QuantMatrix {
    pub fn new(values: [[u32; 8]; 8]) -> Result<Self> {
        if values.iter().flatten().any(|&v| v == 0) {
            return Err(Error::domain("quantization entries must be at least 1"));
        }
        Ok(Self(values))
    }

    pub fn standard() -> Self {
        Self(STANDARD_QUANT)
    }

    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.0[u][v]
    }

    pub fn values(&self) -> &[[u32; 8]; 8] {
        &self.0
    }
}

impl Default for QuantMatrix {
    fn default() -> Self {
        Self::standard()
    }
}

/// Quantized coefficients `F_Q(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct QuantBlock(pub [[i32; 8]; 8]);

impl QuantBlock {
    pub fn get(&self, u: usize, v: usize) -> i32 {
        self.0[u][v]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(|&c| c == 0)
    }
}

/// Forward 8×8 DCT in double precision.
pub fn dct_8x8(samples: &Samples) -> DctBlock {
    let b = basis();
    // rows first: tmp[i][v] = Σ_j f(i,j)·b[v][j]
    let mut tmp = [[0.0; 8]; 8];
    for i in 0..8 {
        for v in 0..8 {
            tmp[i][v] = (0..8).map(|j| samples[i][j] * b[v][j]).sum();
        }
    }
    let mut out = [[0.0; 8]; 8];
    for u in 0..8 {
        for v in 0..8 {
            out[u][v] = (0..8).map(|i| b[u][i] * tmp[i][v]).sum();
        }
    }
    DctBlock(out)
}

/// Inverse 8×8 DCT in double precision.
pub fn idct_8x8(block: &DctBlock) -> Samples {
    let b = basis();
    let f = &block.0;
    let mut tmp = [[0.0; 8]; 8];
    for u in 0..8 {
        for j in 0..8 {
            tmp[u][j] = (0..8).map(|v| f[u][v] * b[v][j]).sum();
        }
    }
    let mut out = [[0.0; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            out[i][j] = (0..8).map(|u| b[u][i] * tmp[u][j]).sum();
        }
    }
    out
}

/// Largest magnitude storable in the `q - 1` magnitude bits of a sign-magnitude
/// coefficient register.
pub fn coefficient_limit(q: u32) -> i32 {
    (1i32 << (q - 1)) - 1
}

/// `F_Q = round(F / Q)` with ties away from zero.
///
/// The DC term is clamped to `±(2^(q-1) - 1)`: a block of all-maximum pixels
/// would otherwise round to `2^(q-1)`. AC terms are not clamped; one that does
/// not fit `q - 1` magnitude bits is an [`Error::Overflow`].
pub fn quantize(block: &DctBlock, qm: &QuantMatrix, q: u32) -> Result<QuantBlock> {
    if !(2..=31).contains(&q) {
        return Err(Error::domain(format!("colour depth {q} outside 2..=31")));
    }
    let limit = coefficient_limit(q);
    let mut out = [[0i32; 8]; 8];
    for u in 0..8 {
        for v in 0..8 {
            let r = (block.0[u][v] / f64::from(qm.get(u, v))).round();
            if (u, v) == (0, 0) {
                out[u][v] = r.clamp(-f64::from(limit), f64::from(limit)) as i32;
            } else if r.abs() > f64::from(limit) {
                return Err(Error::overflow(format!(
                    "quantized coefficient ({u},{v}) = {r} needs more than {} magnitude bits",
                    q - 1
                )));
            } else {
                out[u][v] = r as i32;
            }
        }
    }
    Ok(QuantBlock(out))
}

/// `F'(u, v) = F_Q(u, v) · Q(u, v)` as integers.
pub fn dequantize_int(block: &QuantBlock, qm: &QuantMatrix) -> [[i64; 8]; 8] {
    let mut out = [[0i64; 8]; 8];
    for u in 0..8 {
        for v in 0..8 {
            out[u][v] = i64::from(block.get(u, v)) * i64::from(qm.get(u, v));
        }
    }
    out
}

pub fn dequantize(block: &QuantBlock, qm: &QuantMatrix) -> DctBlock {
    let ints = dequantize_int(block, qm);
    DctBlock(ints.map(|row| row.map(|c| c as f64)))
}

/// One symbol of the zigzag run-length code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RleSymbol {
    /// A nonzero coefficient preceded by `run` zeros in scan order.
    Coeff { run: u8, value: i32 },
    /// All remaining coefficients are zero.
    Eob,
}

pub fn zigzag_rle(block: &QuantBlock) -> Vec<RleSymbol> {
    let scan: Vec<i32> = ZIGZAG.iter().map(|&k| block.0[k / 8][k % 8]).collect();
    let mut out = Vec::new();
    let mut run = 0u8;
    for &c in &scan {
        if c == 0 {
            run += 1;
        } else {
            out.push(RleSymbol::Coeff { run, value: c });
            run = 0;
        }
    }
    out.push(RleSymbol::Eob);
    out
}

pub fn zigzag_rle_decode(symbols: &[RleSymbol]) -> Result<QuantBlock> {
    let mut block = QuantBlock::default();
    let mut pos = 0usize;
    for (idx, sym) in symbols.iter().enumerate() {
        match *sym {
            RleSymbol::Coeff { run, value } => {
                pos += usize::from(run);
                if pos >= 64 || value == 0 {
                    return Err(Error::domain(format!("invalid run-length symbol {idx}")));
                }
                let k = ZIGZAG[pos];
                block.0[k / 8][k % 8] = value;
                pos += 1;
            }
            RleSymbol::Eob => {
                if idx + 1 != symbols.len() {
                    return Err(Error::domain("end-of-block before end of stream"));
                }
                return Ok(block);
            }
        }
    }
    Err(Error::domain("missing end-of-block"))
}

/// Peak signal-to-noise ratio in dB, `+∞` for identical images.
pub fn psnr(a: &PixelImage, b: &PixelImage) -> Result<f64> {
    if a.n() != b.n() || a.q() != b.q() {
        return Err(Error::domain("PSNR needs images of equal size and depth"));
    }
    let sse: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum();
    if sse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse / a.pixels().len() as f64;
    Ok(20.0 * (f64::from(a.max_value()) / mse.sqrt()).log10())
}

/// Quantized coefficients of every block, in [`split_blocks`] order.
pub fn encode_blocks(img: &PixelImage, qm: &QuantMatrix) -> Result<Vec<(Block8, QuantBlock)>> {
    split_blocks(img)
        .into_iter()
        .map(|b| {
            let coeffs = quantize(&dct_8x8(&b.samples), qm, img.q())?;
            Ok((b, coeffs))
        })
        .collect()
}

/// Float reference decode of the quantized image: dequantize and inverse
/// transform each block. Values are per location, row-major, unrounded.
pub fn reconstruct_float(img: &PixelImage, qm: &QuantMatrix) -> Result<Vec<f64>> {
    let side = img.side();
    let mut out = vec![0.0; side * side];
    for (b, coeffs) in encode_blocks(img, qm)? {
        let s = idct_8x8(&dequantize(&coeffs, qm));
        for u in 0..8 {
            for v in 0..8 {
                out[(8 * b.block_row + u) * side + 8 * b.block_col + v] = s[u][v];
            }
        }
    }
    Ok(out)
}

/// [`reconstruct_float`] rounded and clamped to `[0, 2^q − 1]`.
pub fn reconstruct(img: &PixelImage, qm: &QuantMatrix) -> Result<PixelImage> {
    let max = f64::from(img.max_value());
    let pixels = reconstruct_float(img, qm)?
        .into_iter()
        .map(|x| x.round().clamp(0.0, max) as u32)
        .collect();
    PixelImage::new(img.n(), img.q(), pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dct(f: &Samples) -> [[f64; 8]; 8] {
        let mut out = [[0.0; 8]; 8];
        for u in 0..8 {
            for v in 0..8 {
                let mut s = 0.0;
                for i in 0..8 {
                    for j in 0..8 {
                        s += f[i][j]
                            * ((i as f64 + 0.5) * PI * u as f64 / 8.0).cos()
                            * ((j as f64 + 0.5) * PI * v as f64 / 8.0).cos();
                    }
                }
                out[u][v] = norm_factor(u) * norm_factor(v) * s;
            }
        }
        out
    }

    fn lcg_block(seed: u64) -> Samples {
        let mut s = seed;
        let mut out = [[0.0; 8]; 8];
        for e in out.iter_mut().flatten() {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            *e = ((s >> 33) % 256) as f64;
        }
        out
    }

    #[test]
    fn dct_matches_four_loop_sum() {
        for seed in 0..20 {
            let f = lcg_block(seed);
            let fast = dct_8x8(&f);
            let slow = naive_dct(&f);
            for u in 0..8 {
                for v in 0..8 {
                    assert!((fast.0[u][v] - slow[u][v]).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn dct_of_constant_is_dc_only() {
        let f = [[37.0; 8]; 8];
        let d = dct_8x8(&f);
        assert!((d.0[0][0] - 8.0 * 37.0).abs() < 1e-12);
        for (u, v) in (0..64).map(|k| (k / 8, k % 8)).skip(1) {
            assert!(d.0[u][v].abs() < 1e-12, "({u},{v}) = {}", d.0[u][v]);
        }
        assert_eq!(dct_8x8(&[[0.0; 8]; 8]), DctBlock([[0.0; 8]; 8]));
    }

    #[test]
    fn idct_inverts_dct() {
        for seed in 100..120 {
            let f = lcg_block(seed);
            let back = idct_8x8(&dct_8x8(&f));
            for i in 0..8 {
                for j in 0..8 {
                    assert!((back[i][j] - f[i][j]).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn idct_single_terms() {
        let mut dc = [[0.0; 8]; 8];
        dc[0][0] = 8.0 * 5.0;
        for s in idct_8x8(&DctBlock(dc)).iter().flatten() {
            assert!((s - 5.0).abs() < 1e-12);
        }

        let mut f10 = [[0.0; 8]; 8];
        f10[1][0] = 1.0;
        let out = idct_8x8(&DctBlock(f10));
        for i in 0..8 {
            let expect = (1.0 / (2.0 * 2.0 * 2f64.sqrt())) * ((i as f64 + 0.5) * PI / 8.0).cos();
            for j in 0..8 {
                assert!((out[i][j] - expect).abs() < 1e-12);
            }
        }
        assert_eq!(idct_8x8(&DctBlock([[0.0; 8]; 8])), [[0.0; 8]; 8]);
    }

    #[test]
    fn saturated_block_dc_is_clamped() {
        let d = dct_8x8(&[[255.0; 8]; 8]);
        assert!((d.0[0][0] - 2040.0).abs() < 1e-9);
        let fq = quantize(&d, &QuantMatrix::standard(), 8).unwrap();
        assert_eq!(fq.get(0, 0), 127);
    }

    #[test]
    fn quantize_rounds_half_away_from_zero() {
        let mut d = [[0.0; 8]; 8];
        // Q(0,7) = 61, Q(2,5) = 57
        d[2][5] = -57.4;
        d[0][1] = 5.5; // Q = 11 -> 0.5 -> 1
        d[0][2] = -5.0; // Q = 10 -> -0.5 -> -1
        let fq = quantize(&DctBlock(d), &QuantMatrix::standard(), 8).unwrap();
        assert_eq!(fq.get(2, 5), -1);
        assert_eq!(fq.get(0, 1), 1);
        assert_eq!(fq.get(0, 2), -1);
        assert_eq!(
            quantize(&DctBlock([[0.0; 8]; 8]), &QuantMatrix::standard(), 8).unwrap(),
            QuantBlock::default()
        );
    }

    #[test]
    fn oversized_ac_is_an_error() {
        let mut d = [[0.0; 8]; 8];
        d[1][0] = 12.0 * 130.0;
        assert!(matches!(
            quantize(&DctBlock(d), &QuantMatrix::standard(), 8),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn dequantize_is_exact() {
        let mut fq = QuantBlock::default();
        fq.0[0][0] = 127;
        // Q(0,2) = 10
        fq.0[0][2] = -3;
        let d = dequantize(&fq, &QuantMatrix::standard());
        assert_eq!(d.0[0][0], 2032.0);
        assert_eq!(d.0[0][2], -30.0);
        assert_eq!(
            dequantize(&QuantBlock::default(), &QuantMatrix::standard()),
            DctBlock([[0.0; 8]; 8])
        );
    }

    #[test]
    fn quant_matrix_rejects_zero() {
        let mut v = STANDARD_QUANT;
        v[3][3] = 0;
        assert!(QuantMatrix::new(v).is_err());
    }

    /// Zigzag order by walking antidiagonals, alternating direction.
    fn antidiagonal_order() -> Vec<usize> {
        let mut order = Vec::new();
        for s in 0..15usize {
            let cells: Vec<(usize, usize)> = (0..8)
                .filter(|&r| s >= r && s - r < 8)
                .map(|r| (r, s - r))
                .collect();
            // even sums run bottom-left to top-right
            if s % 2 == 0 {
                order.extend(cells.iter().rev().map(|&(r, c)| r * 8 + c));
            } else {
                order.extend(cells.iter().map(|&(r, c)| r * 8 + c));
            }
        }
        order
    }

    #[test]
    fn zigzag_table_matches_antidiagonal_walk() {
        assert_eq!(ZIGZAG.to_vec(), antidiagonal_order());
    }

    #[test]
    fn rle_examples() {
        assert_eq!(zigzag_rle(&QuantBlock::default()), vec![RleSymbol::Eob]);

        let mut dc = QuantBlock::default();
        dc.0[0][0] = 5;
        assert_eq!(
            zigzag_rle(&dc),
            vec![RleSymbol::Coeff { run: 0, value: 5 }, RleSymbol::Eob]
        );

        dc.0[1][0] = -2;
        assert_eq!(
            zigzag_rle(&dc),
            vec![
                RleSymbol::Coeff { run: 0, value: 5 },
                RleSymbol::Coeff { run: 1, value: -2 },
                RleSymbol::Eob
            ]
        );
    }

    #[test]
    fn rle_decode_rejects_garbage() {
        assert!(zigzag_rle_decode(&[]).is_err());
        assert!(zigzag_rle_decode(&[RleSymbol::Coeff { run: 70, value: 1 }, RleSymbol::Eob]).is_err());
        assert!(zigzag_rle_decode(&[RleSymbol::Eob, RleSymbol::Eob]).is_err());
    }

    #[test]
    fn psnr_values() {
        let a = PixelImage::from_fn(3, 8, |y, x| (y * 8 + x) as u32).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = PixelImage::from_fn(3, 8, |y, x| (y * 8 + x + 1) as u32).unwrap();
        let p = psnr(&a, &b).unwrap();
        assert!((p - 20.0 * 255f64.log10()).abs() < 1e-12);
        assert!((p - 48.13).abs() < 0.01);
        let other_depth = PixelImage::filled(3, 4, 0).unwrap();
        assert!(psnr(&a, &other_depth).is_err());
    }
}
