//! Analytic gate counts of the JPEG scheme, the size threshold above which it
//! beats plain preparation, and measured per-image comparisons.

use std::io;
use std::time::Instant;

use serde::Serialize;

use crate::bec::bec_compress;
use crate::error::{Error, Result};
use crate::gqir::{prepare_uncompressed, GqirLayout};
use crate::jpeg::{encode_blocks, QuantMatrix};
use crate::pixmap::{count_one_bits, PixelImage};
use crate::qjpeg::{CoeffRegisterImage, CosTable, PipelineCircuits};

pub const DEFAULT_RJ: f64 = 0.1;
pub const STEP3_GATES: f64 = 208.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostReport {
    pub n: u32,
    pub q: u32,
    pub r_j: f64,
    /// Plain preparation, `q/2 · 2^(2n)`.
    pub c: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub total: f64,
    pub a: f64,
    pub b: f64,
    pub m: f64,
    pub r: f64,
}

fn check(n: u32, q: u32, r_j: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::domain("n must be at least 1"));
    }
    check_q(q)?;
    if !(r_j > 0.0 && r_j <= 1.0) {
        return Err(Error::domain(format!("r_J = {r_j} outside (0, 1]")));
    }
    Ok(())
}

fn check_q(q: u32) -> Result<()> {
    if q < 2 {
        Err(Error::domain(format!("q = {q}; the cost formulas need q >= 2")))
    } else {
        Ok(())
    }
}

/// `(4q − 12 + 2·log₂(q−1))·log₂(q−1)`
pub fn aux_a(q: u32) -> f64 {
    let q = f64::from(q);
    let l = (q - 1.0).log2();
    (4.0 * q - 12.0 + 2.0 * l) * l
}

/// `64·(4q + 4 + 2·log₂(q+3))·log₂(q+3)`
pub fn aux_b(q: u32) -> f64 {
    let q = f64::from(q);
    let l = (q + 3.0).log2();
    64.0 * (4.0 * q + 4.0 + 2.0 * l) * l
}

pub fn plain_cost(n: u32, q: u32) -> f64 {
    f64::from(q) / 2.0 * (2.0 * f64::from(n)).exp2()
}

pub fn step4_cost(q: u32) -> f64 {
    let qf = f64::from(q);
    qf * qf + 2.0 * qf + 9.0 + aux_a(q)
}

pub fn step5_cost(q: u32) -> f64 {
    let qf = f64::from(q);
    64.0 * qf * qf + 2720.0 * qf + 7232.0 + aux_b(q)
}

/// Size-independent part of the JPEG scheme's cost:
/// `65q² + 2722q + 7449 + A + B`.
pub fn fixed_cost(q: u32) -> f64 {
    let qf = f64::from(q);
    65.0 * qf * qf + 2722.0 * qf + 7449.0 + aux_a(q) + aux_b(q)
}

/// `½·log₂(fixed_cost(q) / ((1 − r_J)·q/2))`; the JPEG scheme is cheaper
/// than plain preparation exactly when `n > m`.
pub fn threshold_m_with(q: u32, r_j: f64) -> Result<f64> {
    check(1, q, r_j)?;
    if r_j >= 1.0 {
        return Err(Error::domain("no threshold exists for r_J = 1"));
    }
    Ok(0.5 * (fixed_cost(q) / ((1.0 - r_j) * f64::from(q) / 2.0)).log2())
}

pub fn threshold_m(q: u32) -> Result<f64> {
    threshold_m_with(q, DEFAULT_RJ)
}

/// Smallest integer `n` with `n > m`.
pub fn min_n(q: u32) -> Result<u32> {
    Ok(threshold_m(q)?.floor() as u32 + 1)
}

/// Smallest `n ≥ 1` with `total(n, q) < C(n, q)`, by direct search.
pub fn min_n_search(q: u32, r_j: f64) -> Result<u32> {
    for n in 1..=63 {
        let c = analytic_costs(n, q, r_j)?;
        if c.total < c.c {
            return Ok(n);
        }
    }
    Err(Error::domain("no n up to 63 makes the scheme cheaper"))
}

pub fn analytic_costs(n: u32, q: u32, r_j: f64) -> Result<CostReport> {
    check(n, q, r_j)?;
    let c = plain_cost(n, q);
    let c2 = r_j * c;
    let qf = f64::from(q);
    let total = r_j * c + 65.0 * qf * qf + 2722.0 * qf + 7449.0 + aux_a(q) + aux_b(q);
    let m = if r_j < 1.0 {
        threshold_m_with(q, r_j)?
    } else {
        f64::INFINITY
    };
    Ok(CostReport {
        n,
        q,
        r_j,
        c,
        c2,
        c3: STEP3_GATES,
        c4: step4_cost(q),
        c5: step5_cost(q),
        total,
        a: aux_a(q),
        b: aux_b(q),
        m,
        r: 1.0 - total / c,
    })
}

pub fn ratio_r(n: u32, q: u32, r_j: f64) -> Result<f64> {
    Ok(analytic_costs(n, q, r_j)?.r)
}

/// `(set coefficient bits + negatives) / set pixel bits`, or `None` for an
/// all-black image.
pub fn measured_r_j(img: &PixelImage, qm: &QuantMatrix) -> Result<Option<f64>> {
    let pixel_bits = count_one_bits(img);
    if pixel_bits == 0 {
        return Ok(None);
    }
    let coeff_bits: u64 = encode_blocks(img, qm)?
        .iter()
        .flat_map(|(_, qb)| qb.0.iter().flatten())
        .map(|c| u64::from(c.unsigned_abs().count_ones()) + u64::from(*c < 0))
        .sum();
    Ok(Some(coeff_bits as f64 / pixel_bits as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BecSide {
    pub gates: u64,
    pub ratio: Option<f64>,
    pub rounds: usize,
    pub comparisons: u64,
    pub seconds: f64,
}

/// Gate counts of the three schemes on one image. Hadamard layers are left
/// out of every count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeComparison {
    pub n: u32,
    pub q: u32,
    /// Location-controlled NOTs of the plain circuit (set pixel bits).
    pub plain_gates: u64,
    pub r_j: Option<f64>,
    /// Step 2 NOTs, the image-dependent part of the JPEG scheme.
    pub jpeg_gates: u64,
    /// `1 − jpeg_gates / plain_gates`; `None` when the image has no set bits,
    /// as for every ratio here.
    pub jpeg_ratio: Option<f64>,
    /// All four stages, multipliers and adders at their formula cost and the
    /// cosine table at its actual set-bit count.
    pub jpeg_full_cost: f64,
    pub jpeg_full_ratio: Option<f64>,
    pub jpeg_seconds: f64,
    pub bec: Option<BecSide>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompareOptions {
    pub run_bec: bool,
    /// BEC is refused above this size exponent unless `force` is set.
    pub bec_max_n: u32,
    pub force: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            run_bec: true,
            bec_max_n: 8,
            force: false,
        }
    }
}

pub fn compare_schemes(img: &PixelImage, qm: &QuantMatrix, opts: CompareOptions) -> Result<SchemeComparison> {
    let plain_gates = count_one_bits(img);
    let ratio = |after: f64| (plain_gates > 0).then(|| 1.0 - after / plain_gates as f64);

    let start = Instant::now();
    let coeffs = CoeffRegisterImage::from_image(img, qm)?;
    let jpeg_gates = coeffs.set_bits();
    let jpeg_seconds = start.elapsed().as_secs_f64();
    let circuits = PipelineCircuits::synthesize(&coeffs, qm, &CosTable::new(img.q())?)?;
    let t = circuits.tally();
    let jpeg_full_cost = t.elementary_cost() - t.hadamard as f64;

    let bec = if opts.run_bec {
        if img.n() > opts.bec_max_n && !opts.force {
            return Err(Error::domain(format!(
                "BEC on a 2^{n}x2^{n} image exceeds the n <= {} cap; force it explicitly",
                opts.bec_max_n,
                n = img.n()
            )));
        }
        let layout = GqirLayout::for_image(img);
        let plain = prepare_uncompressed(img);
        let start = Instant::now();
        let (_, stats) = bec_compress(&plain, layout)?;
        Some(BecSide {
            gates: stats.gates_after,
            ratio: ratio(stats.gates_after as f64),
            rounds: stats.rounds,
            comparisons: stats.comparisons,
            seconds: start.elapsed().as_secs_f64(),
        })
    } else {
        None
    };

    Ok(SchemeComparison {
        n: img.n(),
        q: img.q(),
        plain_gates,
        r_j: (plain_gates > 0).then(|| jpeg_gates as f64 / plain_gates as f64),
        jpeg_gates,
        jpeg_ratio: ratio(jpeg_gates as f64),
        jpeg_full_cost,
        jpeg_full_ratio: ratio(jpeg_full_cost),
        jpeg_seconds,
        bec,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub q: u32,
    pub m: f64,
    pub min_n: u32,
    pub min_n_search: u32,
}

pub fn threshold_curve(qs: impl IntoIterator<Item = u32>) -> Result<Vec<ThresholdRow>> {
    qs.into_iter()
        .map(|q| {
            Ok(ThresholdRow {
                q,
                m: threshold_m(q)?,
                min_n: min_n(q)?,
                min_n_search: min_n_search(q, DEFAULT_RJ)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: u32,
    pub q: u32,
    pub r: f64,
}

pub fn ratio_surface(
    ns: impl IntoIterator<Item = u32> + Clone,
    qs: impl IntoIterator<Item = u32>,
    r_j: f64,
) -> Result<Vec<RatioRow>> {
    let mut rows = Vec::new();
    for q in qs {
        for n in ns.clone() {
            rows.push(RatioRow {
                n,
                q,
                r: ratio_r(n, q, r_j)?,
            });
        }
    }
    Ok(rows)
}

/// Summary of a set of ratios; variance is the population variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub variance: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        Some(Stats {
            count: values.len(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean,
            variance: values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k,
        })
    }
}

pub fn write_csv<T: Serialize>(rows: &[T], w: impl io::Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(io::Error::other)?;
    }
    out.flush()?;
    Ok(())
}
