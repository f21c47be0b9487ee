//! Quantum JPEG pipeline: circuit synthesis for the coefficient image, the
//! quantization matrix, inverse quantization and the inverse DCT, together
//! with an exact simulation of their fixed-point semantics.
//!
//! Step 1 (DCT and quantization) is classical. Step 2 prepares the quantized
//! coefficients as a GQIR image, Step 3 prepares the quantization matrix over
//! a 6-qubit location register, Step 4 multiplies each coefficient by its
//! matrix entry, and Step 5 prepares a cosine table and accumulates the 64
//! products `F'(u,v)·C_ij(u,v)` into each recovered pixel.
//!
//! # Gather semantics
//!
//! The Step 5 multipliers and sign gates for term `(u, v)` are controlled on
//! the coefficient offset qubits reading `(u, v)`. The simulation evaluates
//! each recovered location `(block, i, j)` with the cosine-table register at
//! `(i, j)` and, for each such gate, reads the offset and `F'` registers of
//! sibling location `(block, u, v)`. Without this a branch only ever holds one
//! of the 64 terms of its own sum.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixedq::{encode_fixed, FixedFormat, SignMagFixed};
use crate::gqir::machine::{Program, RegisterMap};
use crate::gqir::{evaluate, prepare_values, Circuit, Control, Gate, GateTally, GqirLayout, QubitRange};
use crate::jpeg::{coefficient_limit, encode_blocks, idct_weight, QuantMatrix};
use crate::pixmap::PixelImage;
use crate::report::Warning;

/// Smallest colour depth the pipeline supports: `F'` must hold at least the
/// `q + 3` bits the Step 5 multipliers read.
pub const MIN_DEPTH: u32 = 5;
pub const MAX_DEPTH: u32 = 16;

fn check_depth(q: u32) -> Result<()> {
    if (MIN_DEPTH..=MAX_DEPTH).contains(&q) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "pipeline needs {MIN_DEPTH} <= q <= {MAX_DEPTH}, got {q}"
        )))
    }
}

/// Index of image location `(Y, X)` with `Y = 8i + u`, `X = 8j + v`.
pub fn location(n: u32, block_row: usize, block_col: usize, u: usize, v: usize) -> usize {
    ((8 * block_row + u) << n) | (8 * block_col + v)
}

/// Quantized coefficients laid out as an image: the coefficient `(u, v)` of
/// block `(i, j)` sits at location `(8i + u, 8j + v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffRegisterImage {
    n: u32,
    q: u32,
    coeffs: Vec<i32>,
}

impl CoeffRegisterImage {
    pub fn new(n: u32, q: u32, coeffs: Vec<i32>) -> Result<Self> {
        check_depth(q)?;
        if !(3..=15).contains(&n) {
            return Err(Error::domain(format!("side exponent {n} outside 3..=15")));
        }
        if coeffs.len() != 1 << (2 * n) {
            return Err(Error::domain(format!(
                "expected {} coefficients, got {}",
                1usize << (2 * n),
                coeffs.len()
            )));
        }
        let limit = coefficient_limit(q);
        if let Some(c) = coeffs.iter().find(|c| c.abs() > limit) {
            return Err(Error::overflow(format!(
                "coefficient {c} needs more than {} magnitude bits",
                q - 1
            )));
        }
        Ok(Self { n, q, coeffs })
    }

    /// Classical Step 1: blockwise DCT and quantization.
    pub fn from_image(img: &PixelImage, qm: &QuantMatrix) -> Result<Self> {
        check_depth(img.q())?;
        let n = img.n();
        let mut coeffs = vec![0i32; 1 << (2 * n)];
        for (b, qb) in encode_blocks(img, qm)? {
            for u in 0..8 {
                for v in 0..8 {
                    coeffs[location(n, b.block_row, b.block_col, u, v)] = qb.get(u, v);
                }
            }
        }
        Self::new(n, img.q(), coeffs)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn coeffs(&self) -> &[i32] {
        &self.coeffs
    }

    pub fn get(&self, y: usize, x: usize) -> i32 {
        self.coeffs[(y << self.n) | x]
    }

    /// Register contents: magnitude in bits `0..q-1`, sign in bit `q-1`.
    pub fn register_value(&self, loc: usize) -> u64 {
        let c = self.coeffs[loc];
        (u64::from(c < 0) << (self.q - 1)) | u64::from(c.unsigned_abs())
    }

    pub fn register_values(&self) -> Vec<u64> {
        (0..self.coeffs.len()).map(|l| self.register_value(l)).collect()
    }

    /// Set magnitude bits plus negative coefficients.
    pub fn set_bits(&self) -> u64 {
        self.coeffs
            .iter()
            .map(|c| u64::from(c.unsigned_abs().count_ones()) + u64::from(*c < 0))
            .sum()
    }
}

/// Qubit allocation of the whole pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineLayout {
    pub n: u32,
    pub q: u32,
    /// Coefficient register, sign in the top qubit.
    pub f: QubitRange,
    pub loc: QubitRange,
    pub qreg: QubitRange,
    pub qloc: QubitRange,
    pub g: usize,
    /// Dequantized coefficient: `2(q−1)` magnitude qubits, then the sign.
    pub fp: QubitRange,
    /// 64 cosine slots of `q + 3` magnitude qubits and a sign.
    pub ctab: QubitRange,
    pub cloc: QubitRange,
    /// 64 product slots of `2q + 6` magnitude qubits and a sign.
    pub prod: QubitRange,
    pub acc: QubitRange,
    pub qubits: usize,
}

impl PipelineLayout {
    pub fn new(n: u32, q: u32) -> Result<Self> {
        check_depth(q)?;
        let (nu, qu) = (n as usize, q as usize);
        let mut next = 0;
        let mut alloc = |len: usize| {
            let r = QubitRange::new(next, len);
            next += len;
            r
        };
        let f = alloc(qu);
        let loc = alloc(2 * nu);
        let qreg = alloc(qu - 1);
        let qloc = alloc(6);
        let g = alloc(1).start;
        let fp = alloc(2 * qu - 1);
        let ctab = alloc(64 * (qu + 4));
        let cloc = alloc(6);
        let prod = alloc(64 * (2 * qu + 7));
        let acc = alloc(2 * qu + 6);
        Ok(Self {
            n,
            q,
            f,
            loc,
            qreg,
            qloc,
            g,
            fp,
            ctab,
            cloc,
            prod,
            acc,
            qubits: next,
        })
    }

    pub fn frac_bits(&self) -> usize {
        self.q as usize + 3
    }

    pub fn image_layout(&self) -> GqirLayout {
        GqirLayout::new(self.q as usize, self.n as usize, self.n as usize)
    }

    pub fn quant_layout(&self) -> GqirLayout {
        GqirLayout::new(self.q as usize - 1, 3, 3)
    }

    pub fn table_layout(&self) -> GqirLayout {
        GqirLayout::new(self.ctab.len, 3, 3)
    }

    pub fn fp_mag(&self) -> QubitRange {
        self.fp.slice(0, self.fp.len - 1)
    }

    pub fn fp_sign(&self) -> usize {
        self.fp.end() - 1
    }

    pub fn c_slot(&self, k: usize) -> QubitRange {
        let w = self.q as usize + 4;
        self.ctab.slice(k * w, w)
    }

    pub fn c_mag(&self, k: usize) -> QubitRange {
        self.c_slot(k).slice(0, self.frac_bits())
    }

    pub fn c_sign(&self, k: usize) -> usize {
        self.c_slot(k).end() - 1
    }

    pub fn p_slot(&self, k: usize) -> QubitRange {
        let w = 2 * self.q as usize + 7;
        self.prod.slice(k * w, w)
    }

    pub fn p_mag(&self, k: usize) -> QubitRange {
        self.p_slot(k).slice(0, 2 * self.frac_bits())
    }

    pub fn p_sign(&self, k: usize) -> usize {
        self.p_slot(k).end() - 1
    }

    /// Location qubits holding bit `k` of the block offset `8u + v`: the low
    /// three bits of `X` and then the low three bits of `Y`.
    pub fn offset_qubit(&self, k: usize) -> usize {
        if k < 3 {
            self.loc.qubit(k)
        } else {
            self.loc.qubit(self.n as usize + k - 3)
        }
    }

    pub fn offset_controls(&self, k: usize) -> Vec<Control> {
        (0..6)
            .map(|b| Control {
                qubit: self.offset_qubit(b),
                polarity: (k >> b) & 1 == 1,
            })
            .collect()
    }
}

/// `C_ij(u,v)` encoded with `q + 3` fractional bits, for all 4096 index sets.
#[derive(Debug, Clone, PartialEq)]
pub struct CosTable {
    q: u32,
    entries: Vec<SignMagFixed>,
}

impl CosTable {
    pub fn new(q: u32) -> Result<Self> {
        check_depth(q)?;
        let fmt = FixedFormat::new(0, q + 3);
        let mut entries = Vec::with_capacity(4096);
        for i in 0..8 {
            for j in 0..8 {
                for u in 0..8 {
                    for v in 0..8 {
                        entries.push(encode_fixed(idct_weight(i, j, u, v), fmt)?);
                    }
                }
            }
        }
        Ok(Self { q, entries })
    }

    pub fn get(&self, i: usize, j: usize, u: usize, v: usize) -> SignMagFixed {
        self.entries[((i * 8 + j) << 6) | (u * 8 + v)]
    }

    pub fn entries(&self) -> &[SignMagFixed] {
        &self.entries
    }

    /// Set magnitude bits plus set sign bits over the whole table.
    pub fn set_bits(&self) -> u64 {
        self.entries
            .iter()
            .map(|e| u64::from(e.magnitude.count_ones()) + u64::from(e.negative))
            .sum()
    }

    fn slot_bits(&self, cl: usize, k: usize) -> u64 {
        let e = self.entries[(cl << 6) | k];
        e.magnitude | (u64::from(e.negative) << (self.q + 3))
    }
}

/// Step 2: `2n` Hadamards and one fully location-controlled NOT per set bit
/// of the coefficient registers.
pub fn synth_step2(coeffs: &CoeffRegisterImage) -> Circuit {
    let layout = GqirLayout::new(coeffs.q as usize, coeffs.n as usize, coeffs.n as usize);
    prepare_values(layout, &coeffs.register_values()).expect("coefficients fit their registers")
}

/// Step 3: the quantization matrix over a 6-qubit location register with
/// `Q(u,v)` at location `8u + v`, in `q − 1` bits.
pub fn synth_step3(qm: &QuantMatrix, q: u32) -> Result<Circuit> {
    check_depth(q)?;
    let values: Vec<u64> = qm.values().iter().flatten().map(|&e| u64::from(e)).collect();
    if let Some(e) = values.iter().find(|&&e| e >> (q - 1) != 0) {
        return Err(Error::overflow(format!(
            "quantization entry {e} does not fit {} qubits",
            q - 1
        )));
    }
    prepare_values(GqirLayout::new(q as usize - 1, 3, 3), &values)
}

/// Step 4: align the matrix location with the coefficient offset, flag the
/// matching branch and multiply there.
pub fn synth_step4(l: &PipelineLayout) -> Result<Circuit> {
    let mut c = Circuit::new(l.qubits);
    c.push(Gate::Note("step 4".into()))?;
    for k in 0..6 {
        c.push(Gate::Mcx {
            controls: vec![Control::on(l.offset_qubit(k))],
            target: l.qloc.qubit(k),
        })?;
    }
    c.push(Gate::Mcx {
        controls: (0..6).map(|k| Control::off(l.qloc.qubit(k))).collect(),
        target: l.g,
    })?;
    c.push(Gate::Muler {
        controls: vec![Control::on(l.g)],
        a: l.f.slice(0, l.q as usize - 1),
        b: l.qreg,
        out: l.fp_mag(),
    })?;
    c.push(Gate::Mcx {
        controls: vec![Control::on(l.g), Control::on(l.f.end() - 1)],
        target: l.fp_sign(),
    })?;
    Ok(c)
}

/// Step 5.1 on its own register file: the cosine table over a 6-qubit
/// location `8i + j`, slot `8u + v` holding `C_ij(u,v)`.
pub fn synth_cos_table(table: &CosTable) -> Result<Circuit> {
    let layout = GqirLayout::new(64 * (table.q as usize + 4), 3, 3);
    let slot = table.q as usize + 4;
    let mut c = Circuit::new(layout.qubits());
    for k in 0..6 {
        c.push(Gate::Hadamard(layout.location().qubit(k)))?;
    }
    for cl in 0..64 {
        let controls = layout.location_controls(cl);
        for k in 0..64 {
            let bits = table.slot_bits(cl, k);
            for b in 0..slot {
                if (bits >> b) & 1 == 1 {
                    c.push(Gate::Mcx {
                        controls: controls.clone(),
                        target: k * slot + b,
                    })?;
                }
            }
        }
    }
    Ok(c)
}

/// Steps 5.2 to 5.4: 64 offset-controlled multipliers, the product signs and
/// the sign-selected adder chain into the accumulator.
pub fn synth_step5_arith(l: &PipelineLayout) -> Result<Circuit> {
    let mut c = Circuit::new(l.qubits);
    let a = l.fp_mag().slice(0, l.frac_bits());
    for k in 0..64 {
        c.push(Gate::Muler {
            controls: l.offset_controls(k),
            a,
            b: l.c_mag(k),
            out: l.p_mag(k),
        })?;
    }
    for k in 0..64 {
        for (fs, cs) in [(true, false), (false, true)] {
            let mut controls = l.offset_controls(k);
            controls.push(Control {
                qubit: l.fp_sign(),
                polarity: fs,
            });
            controls.push(Control {
                qubit: l.c_sign(k),
                polarity: cs,
            });
            c.push(Gate::Mcx {
                controls,
                target: l.p_sign(k),
            })?;
        }
    }
    for k in 0..64 {
        for reversed in [false, true] {
            c.push(Gate::Adder {
                controls: vec![Control {
                    qubit: l.p_sign(k),
                    polarity: reversed,
                }],
                a: l.p_mag(k),
                b: l.acc,
                reversed,
            })?;
        }
    }
    Ok(c)
}

/// Stage circuits on the shared qubit allocation.
#[derive(Debug, Clone)]
pub struct PipelineCircuits {
    pub layout: PipelineLayout,
    pub step2: Circuit,
    pub step3: Circuit,
    pub step4: Circuit,
    pub step5: Circuit,
}

impl PipelineCircuits {
    pub fn synthesize(coeffs: &CoeffRegisterImage, qm: &QuantMatrix, table: &CosTable) -> Result<Self> {
        let l = PipelineLayout::new(coeffs.n, coeffs.q)?;
        let step2 = synth_step2(coeffs).shifted(l.f.start, l.qubits)?;
        let step3 = synth_step3(qm, coeffs.q)?.shifted(l.qreg.start, l.qubits)?;
        let step4 = synth_step4(&l)?;
        let mut step5 = synth_cos_table(table)?.shifted(l.ctab.start, l.qubits)?;
        step5.extend(&synth_step5_arith(&l)?)?;
        Ok(Self {
            layout: l,
            step2,
            step3,
            step4,
            step5,
        })
    }

    pub fn stages(&self) -> [&Circuit; 4] {
        [&self.step2, &self.step3, &self.step4, &self.step5]
    }

    pub fn full(&self) -> Circuit {
        let mut c = Circuit::new(self.layout.qubits);
        for s in self.stages() {
            c.extend(s).expect("stages share the allocation");
        }
        c
    }

    pub fn tally(&self) -> GateTally {
        let mut t = GateTally::default();
        for s in self.stages() {
            t.merge(&s.tally());
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceDetail {
    #[default]
    Summary,
    /// Also keep the 64 signed products of every location.
    Products,
}

/// Register values at one location after the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocationTrace {
    pub y: usize,
    pub x: usize,
    /// Quantized coefficient prepared at this location.
    pub f_q: i32,
    /// Matrix entry in the flagged branch.
    pub q_entry: u32,
    /// Number of matrix-location branches with the flag set.
    pub g_branches: u32,
    /// Dequantized coefficient in the flagged branch.
    pub f_prime: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub products: Option<Vec<i64>>,
    /// Final accumulator, `2q + 6` bits.
    pub accumulator: u64,
    /// Accumulator bits `2q+2 .. q+3`.
    pub pixel: u32,
    /// Pixel clamped into range from the signed accumulator.
    pub display: u32,
    pub wraparound: bool,
    pub operand_truncated: bool,
    pub accumulator_overflow: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PipelineTrace {
    pub n: u32,
    pub q: u32,
    pub locations: Vec<LocationTrace>,
}

impl PipelineTrace {
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        for rec in &self.locations {
            serde_json::to_writer(&mut w, rec).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn wraparound_count(&self) -> usize {
        self.locations.iter().filter(|l| l.wraparound).count()
    }

    pub fn warnings(&self) -> Vec<Warning> {
        let count = |f: fn(&LocationTrace) -> bool| self.locations.iter().filter(|l| f(l)).count();
        let mut out = Vec::new();
        let wrapped = count(|l| l.wraparound);
        if wrapped > 0 {
            out.push(Warning::Wraparound { locations: wrapped });
        }
        let clamped = count(|l| l.display != l.pixel);
        if clamped > 0 {
            out.push(Warning::Clamped { pixels: clamped });
        }
        let truncated = count(|l| l.operand_truncated);
        if truncated > 0 {
            out.push(Warning::OperandTruncated { locations: truncated });
        }
        let overflowed = count(|l| l.accumulator_overflow);
        if overflowed > 0 {
            out.push(Warning::AccumulatorOverflow {
                locations: overflowed,
            });
        }
        out
    }
}

struct Dequantized {
    q_entry: u32,
    g_branches: u32,
    /// Raw `F'` register: magnitude bits then sign.
    fp: u64,
}

/// Runs Steps 2 to 5 on prepared coefficients.
pub fn simulate(
    coeffs: &CoeffRegisterImage,
    qm: &QuantMatrix,
    detail: TraceDetail,
) -> Result<(PipelineCircuits, PipelineTrace)> {
    let table = CosTable::new(coeffs.q)?;
    let circuits = PipelineCircuits::synthesize(coeffs, qm, &table)?;
    let l = &circuits.layout;
    let n = coeffs.n;
    let locations = 1usize << (2 * n);

    let f_state = evaluate(&synth_step2(coeffs), l.image_layout())?;
    let q_state = evaluate(&synth_step3(qm, coeffs.q)?, l.quant_layout())?;

    // Step 4 on every (location, matrix location) branch
    let map4 = RegisterMap::new(&[l.f, l.loc, l.qreg, l.qloc, QubitRange::new(l.g, 1), l.fp])?;
    let prog4 = Program::compile(&circuits.step4, &map4)?;
    let g_range = QubitRange::new(l.g, 1);
    let deq: Vec<Dequantized> = (0..locations)
        .into_par_iter()
        .map(|loc| {
            let mut out = Dequantized {
                q_entry: 0,
                g_branches: 0,
                fp: 0,
            };
            for ql in 0..64 {
                let mut s = map4.zeros();
                map4.write(&mut s, &l.f, f_state.value(loc));
                map4.write(&mut s, &l.loc, loc as u64);
                map4.write(&mut s, &l.qreg, q_state.value(ql));
                map4.write(&mut s, &l.qloc, ql as u64);
                prog4.run(&mut s);
                if map4.read(&s, &g_range) == 1 {
                    out.g_branches += 1;
                    out.q_entry = q_state.value(ql) as u32;
                    out.fp = map4.read(&s, &l.fp);
                }
            }
            out
        })
        .collect();

    // Step 5
    let table_state = evaluate(&synth_cos_table(&table)?, l.table_layout())?;
    let step5_arith = synth_step5_arith(l)?;
    let map5 = RegisterMap::new(&[l.loc, l.fp, l.ctab, l.cloc, l.prod, l.acc])?;
    let prog5 = Program::compile(&step5_arith, &map5)?;
    let offset: Vec<Option<usize>> = prog5
        .sources()
        .iter()
        .map(|&k| gather_offset(l, &step5_arith.gates()[k]))
        .collect();

    let slot = l.q as usize + 4;
    let fb = l.frac_bits();
    let acc_bits = l.acc.len;
    let mag_bits = l.fp.len - 1;
    let signed = |raw: u64| -> i64 {
        let m = (raw & ((1 << mag_bits) - 1)) as i64;
        if (raw >> mag_bits) & 1 == 1 {
            -m
        } else {
            m
        }
    };
    let max_pixel = (1u32 << coeffs.q) - 1;

    let traces: Vec<LocationTrace> = (0..locations)
        .into_par_iter()
        .map(|loc| {
            let (y, x) = (loc >> n, loc & ((1 << n) - 1));
            let (bi, bj, cl) = (y / 8, x / 8, (y % 8) * 8 + x % 8);
            let mut s = map5.zeros();
            for k in 0..64 {
                map5.write(&mut s, &l.c_slot(k), table_state.field(cl, k * slot, slot));
            }
            map5.write(&mut s, &l.cloc, cl as u64);
            let mut ev = Default::default();
            let mut truncated = false;
            for op in 0..prog5.len() {
                if let Some(k) = offset[op] {
                    let src = location(n, bi, bj, k / 8, k % 8);
                    map5.write(&mut s, &l.loc, src as u64);
                    map5.write(&mut s, &l.fp, deq[src].fp);
                    truncated |= ((deq[src].fp & ((1 << mag_bits) - 1)) >> fb) != 0;
                }
                prog5.step(op, &mut s, &mut ev);
            }
            let products: Vec<i64> = (0..64)
                .map(|k| {
                    let m = map5.read(&s, &l.p_mag(k)) as i64;
                    if map5.read(&s, &QubitRange::new(l.p_sign(k), 1)) == 1 {
                        -m
                    } else {
                        m
                    }
                })
                .collect();
            let true_sum: i128 = products.iter().map(|&p| i128::from(p)).sum();
            let acc = map5.read(&s, &l.acc);
            let acc_signed = if (acc >> (acc_bits - 1)) & 1 == 1 {
                acc as i64 - (1i64 << acc_bits)
            } else {
                acc as i64
            };
            let whole = acc_signed >> fb;
            let half_range = 1i128 << (acc_bits - 1);
            LocationTrace {
                y,
                x,
                f_q: coeffs.coeffs[loc],
                q_entry: deq[loc].q_entry,
                g_branches: deq[loc].g_branches,
                f_prime: signed(deq[loc].fp),
                products: (detail == TraceDetail::Products).then_some(products),
                accumulator: acc,
                pixel: ((acc >> fb) & u64::from(max_pixel)) as u32,
                display: whole.clamp(0, i64::from(max_pixel)) as u32,
                wraparound: whole < 0 || whole > i64::from(max_pixel),
                operand_truncated: truncated,
                accumulator_overflow: !(-half_range..half_range).contains(&true_sum),
            }
        })
        .collect();

    Ok((
        circuits,
        PipelineTrace {
            n,
            q: coeffs.q,
            locations: traces,
        },
    ))
}

/// Block offset a Step 5 gate is controlled on, if any.
fn gather_offset(l: &PipelineLayout, g: &Gate) -> Option<usize> {
    let mut k = 0;
    let mut found = false;
    for c in g.controls() {
        if let Some(b) = (0..6).find(|&b| l.offset_qubit(b) == c.qubit) {
            found = true;
            k |= usize::from(c.polarity) << b;
        }
    }
    found.then_some(k)
}

/// Everything [`run_pipeline`] produces.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Recovered image with out-of-range sums clamped.
    pub recovered: PixelImage,
    /// Extracted accumulator bits without clamping.
    pub raw: PixelImage,
    pub coeffs: CoeffRegisterImage,
    pub circuits: PipelineCircuits,
    pub trace: PipelineTrace,
    pub warnings: Vec<Warning>,
}

impl PipelineOutput {
    pub fn tally(&self) -> GateTally {
        self.circuits.tally()
    }

    pub fn stage_tallies(&self) -> [GateTally; 4] {
        self.circuits.stages().map(|c| c.tally())
    }
}

/// Steps 1 to 5 on an image.
pub fn run_pipeline(img: &PixelImage, qm: &QuantMatrix, detail: TraceDetail) -> Result<PipelineOutput> {
    let coeffs = CoeffRegisterImage::from_image(img, qm)?;
    let (circuits, trace) = simulate(&coeffs, qm, detail)?;
    let recovered = PixelImage::new(
        img.n(),
        img.q(),
        trace.locations.iter().map(|t| t.display).collect(),
    )?;
    let raw = PixelImage::new(
        img.n(),
        img.q(),
        trace.locations.iter().map(|t| t.pixel).collect(),
    )?;
    let warnings = trace.warnings();
    Ok(PipelineOutput {
        recovered,
        raw,
        coeffs,
        circuits,
        trace,
        warnings,
    })
}
