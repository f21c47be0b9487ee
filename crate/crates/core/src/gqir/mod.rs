//! GQIR images: the state model, uncompressed preparation circuits and a
//! classical evaluator for them.
//!
//! A GQIR image over `h + w` location qubits and a colour register is the
//! uniform superposition `Σ_YX |C_YX⟩|YX⟩ / √2^(h+w)`. Preparation applies a
//! Hadamard to every location qubit and then only gates that are controlled
//! on (or blind to) the location register and never write to it.
//!
//! # Evaluation by location branches
//!
//! After the Hadamard layer the state is `Σ_L |0⟩|L⟩`. Every later gate `G`
//! leaves `L` untouched and acts on the colour register as a permutation `P_L`
//! that depends only on `L`, so `G Σ_L |c_L⟩|L⟩ = Σ_L |P_L c_L⟩|L⟩`. By
//! induction over the gate list, the prepared state is fully described by
//! evaluating each location branch independently as a classical reversible
//! computation, which is what [`evaluate`] does. Amplitudes never change.

pub mod circuit;
pub mod machine;
pub mod text;

pub use circuit::{Circuit, Control, Gate, GateTally, QubitRange};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pixmap::PixelImage;

/// Qubit assignment of a GQIR register file.
///
/// Colour (or payload) qubits come first: qubit `i` holds bit `i` of the
/// value. The `h + w` location qubits follow; location index `L = Y·2^w + X`
/// and qubit `color_bits + k` holds bit `k` of `L`, so `X` occupies the low
/// `w` location qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GqirLayout {
    pub color_bits: usize,
    pub h: usize,
    pub w: usize,
}

impl GqirLayout {
    pub fn new(color_bits: usize, h: usize, w: usize) -> Self {
        Self { color_bits, h, w }
    }

    pub fn for_image(img: &PixelImage) -> Self {
        let n = img.n() as usize;
        Self::new(img.q() as usize, n, n)
    }

    pub fn location_bits(&self) -> usize {
        self.h + self.w
    }

    pub fn locations(&self) -> usize {
        1 << self.location_bits()
    }

    pub fn location(&self) -> QubitRange {
        QubitRange::new(self.color_bits, self.location_bits())
    }

    pub fn color(&self) -> QubitRange {
        QubitRange::new(0, self.color_bits)
    }

    pub fn qubits(&self) -> usize {
        self.color_bits + self.location_bits()
    }

    /// Controls selecting exactly location `loc`.
    pub fn location_controls(&self, loc: usize) -> Vec<Control> {
        (0..self.location_bits())
            .map(|k| Control {
                qubit: self.color_bits + k,
                polarity: (loc >> k) & 1 == 1,
            })
            .collect()
    }
}

/// Per-location colour values of a prepared GQIR state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GqirState {
    layout: GqirLayout,
    words: usize,
    data: Vec<u64>,
}

impl GqirState {
    pub fn zeros(layout: GqirLayout) -> Self {
        let words = layout.color_bits.div_ceil(64).max(1);
        Self {
            layout,
            words,
            data: vec![0; words * layout.locations()],
        }
    }

    /// State holding `values[L]` at location `L`; colour width at most 64.
    pub fn from_values(layout: GqirLayout, values: &[u64]) -> Result<Self> {
        if layout.color_bits > 64 {
            return Err(Error::domain("use zeros() and set_field() for wide colours"));
        }
        if values.len() != layout.locations() {
            return Err(Error::domain(format!(
                "expected {} colour values, got {}",
                layout.locations(),
                values.len()
            )));
        }
        let mut s = Self::zeros(layout);
        for (loc, &v) in values.iter().enumerate() {
            if layout.color_bits < 64 && v >> layout.color_bits != 0 {
                return Err(Error::overflow(format!(
                    "colour {v} exceeds {} bits",
                    layout.color_bits
                )));
            }
            s.data[loc * s.words] = v;
        }
        Ok(s)
    }

    pub fn from_image(img: &PixelImage) -> Self {
        let values: Vec<u64> = img.pixels().iter().map(|&p| u64::from(p)).collect();
        Self::from_values(GqirLayout::for_image(img), &values).expect("image pixels fit q bits")
    }

    pub fn layout(&self) -> GqirLayout {
        self.layout
    }

    pub fn row(&self, loc: usize) -> &[u64] {
        &self.data[loc * self.words..(loc + 1) * self.words]
    }

    fn row_mut(&mut self, loc: usize) -> &mut [u64] {
        &mut self.data[loc * self.words..(loc + 1) * self.words]
    }

    /// `len` bits of location `loc` starting at colour bit `lo`.
    pub fn field(&self, loc: usize, lo: usize, len: usize) -> u64 {
        get_field(self.row(loc), lo, len)
    }

    pub fn set_field(&mut self, loc: usize, lo: usize, len: usize, value: u64) {
        set_field(self.row_mut(loc), lo, len, value);
    }

    /// Whole colour value; only meaningful for colour widths up to 64.
    pub fn value(&self, loc: usize) -> u64 {
        self.field(loc, 0, self.layout.color_bits.min(64))
    }

    pub fn values(&self) -> Vec<u64> {
        (0..self.layout.locations()).map(|l| self.value(l)).collect()
    }
}

pub(crate) fn get_field(words: &[u64], lo: usize, len: usize) -> u64 {
    debug_assert!(len <= 64);
    if len == 0 {
        return 0;
    }
    let (w, o) = (lo / 64, lo % 64);
    let mut v = words[w] >> o;
    if o + len > 64 {
        v |= words[w + 1] << (64 - o);
    }
    v & mask(len)
}

pub(crate) fn set_field(words: &mut [u64], lo: usize, len: usize, value: u64) {
    if len == 0 {
        return;
    }
    let m = mask(len);
    let value = value & m;
    let (w, o) = (lo / 64, lo % 64);
    words[w] = (words[w] & !(m << o)) | (value << o);
    if o + len > 64 {
        let low = 64 - o;
        words[w + 1] = (words[w + 1] & !(m >> low)) | (value >> low);
    }
}

fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// Hadamards on every location qubit followed by one fully location-controlled
/// NOT per set colour bit, visiting locations in ascending order and bits from
/// least significant up.
pub fn prepare_values(layout: GqirLayout, values: &[u64]) -> Result<Circuit> {
    if values.len() != layout.locations() {
        return Err(Error::domain(format!(
            "expected {} colour values, got {}",
            layout.locations(),
            values.len()
        )));
    }
    let mut c = Circuit::new(layout.qubits());
    for k in 0..layout.location_bits() {
        c.push(Gate::Hadamard(layout.location().qubit(k)))?;
    }
    for (loc, &v) in values.iter().enumerate() {
        if v == 0 {
            continue;
        }
        if layout.color_bits < 64 && v >> layout.color_bits != 0 {
            return Err(Error::overflow(format!(
                "value {v} at location {loc} exceeds {} bits",
                layout.color_bits
            )));
        }
        let controls = layout.location_controls(loc);
        for bit in 0..layout.color_bits.min(64) {
            if (v >> bit) & 1 == 1 {
                c.push(Gate::Mcx {
                    controls: controls.clone(),
                    target: bit,
                })?;
            }
        }
    }
    Ok(c)
}

pub fn prepare_uncompressed(img: &PixelImage) -> Circuit {
    let values: Vec<u64> = img.pixels().iter().map(|&p| u64::from(p)).collect();
    prepare_values(GqirLayout::for_image(img), &values).expect("image pixels fit q bits")
}

/// Location pattern of a gate: `fixed` marks controlled location bits and
/// `value` their required values. The remaining controls address colour
/// qubits.
struct Selector {
    fixed: usize,
    value: usize,
    color: Vec<Control>,
}

impl Selector {
    fn new(layout: &GqirLayout, controls: &[Control]) -> Self {
        let loc = layout.location();
        let mut s = Selector {
            fixed: 0,
            value: 0,
            color: Vec::new(),
        };
        for c in controls {
            if loc.contains(c.qubit) {
                let k = c.qubit - loc.start;
                s.fixed |= 1 << k;
                if c.polarity {
                    s.value |= 1 << k;
                }
            } else {
                s.color.push(*c);
            }
        }
        s
    }

    /// Every location whose fixed bits match, ascending.
    fn locations(&self, location_bits: usize) -> impl Iterator<Item = usize> + '_ {
        let free = !self.fixed & ((1usize << location_bits) - 1);
        let mut sub = Some(0usize);
        std::iter::from_fn(move || {
            let s = sub?;
            sub = match s.wrapping_sub(free) & free {
                0 => None,
                next => Some(next),
            };
            Some(self.value | s)
        })
    }

    fn color_ok(&self, row: &[u64]) -> bool {
        self.color
            .iter()
            .all(|c| ((row[c.qubit / 64] >> (c.qubit % 64)) & 1 == 1) == c.polarity)
    }
}

/// Evaluates a preparation circuit branch by branch (see the module docs).
///
/// The circuit must start with one Hadamard on each location qubit, and no
/// later gate may write to a location qubit. An empty circuit yields the
/// all-zero state.
pub fn evaluate(circuit: &Circuit, layout: GqirLayout) -> Result<GqirState> {
    if circuit.qubits() > layout.qubits() {
        return Err(Error::circuit(format!(
            "circuit has {} qubits but the layout declares {}",
            circuit.qubits(),
            layout.qubits()
        )));
    }
    let loc = layout.location();
    let color = layout.color();
    let mut state = GqirState::zeros(layout);
    let mut superposed = vec![false; layout.location_bits()];
    let mut layer_done = false;

    for gate in circuit.gates() {
        if let Gate::Hadamard(t) = gate {
            if layer_done || !loc.contains(*t) || std::mem::replace(&mut superposed[t - loc.start], true) {
                return Err(Error::circuit(format!(
                    "Hadamard on qubit {t} is outside the location layer"
                )));
            }
            continue;
        }
        if matches!(gate, Gate::Note(_)) {
            continue;
        }
        if !layer_done {
            if superposed.iter().any(|s| !s) {
                return Err(Error::circuit("location register is not fully superposed"));
            }
            layer_done = true;
        }
        let in_color = |r: &QubitRange| {
            if r.end() <= color.end() {
                Ok(())
            } else {
                Err(Error::circuit(format!(
                    "register {}..{} is not in the colour register",
                    r.start,
                    r.end()
                )))
            }
        };
        let sel = Selector::new(&layout, gate.controls());
        match gate {
            Gate::Mcx { target, .. } => {
                in_color(&QubitRange::new(*target, 1))?;
                for l in sel.locations(layout.location_bits()) {
                    let row = state.row_mut(l);
                    if sel.color_ok(row) {
                        row[target / 64] ^= 1 << (target % 64);
                    }
                }
            }
            Gate::Muler { a, b, out, .. } => {
                for r in [a, b, out] {
                    in_color(r)?;
                }
                if out.len > 64 {
                    return Err(Error::circuit("multiplier wider than the evaluator supports"));
                }
                for l in sel.locations(layout.location_bits()) {
                    let row = state.row_mut(l);
                    if sel.color_ok(row) {
                        let p = get_field(row, a.start, a.len).wrapping_mul(get_field(row, b.start, b.len));
                        let o = get_field(row, out.start, out.len);
                        set_field(row, out.start, out.len, o ^ p);
                    }
                }
            }
            Gate::Adder { a, b, reversed, .. } => {
                in_color(a)?;
                in_color(b)?;
                for l in sel.locations(layout.location_bits()) {
                    let row = state.row_mut(l);
                    if sel.color_ok(row) {
                        let x = get_field(row, a.start, a.len);
                        let y = get_field(row, b.start, b.len);
                        let r = if *reversed {
                            y.wrapping_sub(x)
                        } else {
                            y.wrapping_add(x)
                        };
                        set_field(row, b.start, b.len, r & mask(b.len));
                    }
                }
            }
            Gate::Hadamard(_) | Gate::Note(_) => unreachable!(),
        }
    }
    Ok(state)
}

/// Recovers the image encoded by a state with square location register.
pub fn readback(state: &GqirState) -> Result<PixelImage> {
    let l = state.layout();
    if l.h != l.w {
        return Err(Error::domain(format!(
            "{}x{} location register is not square",
            l.h, l.w
        )));
    }
    if l.color_bits == 0 || l.color_bits > crate::pixmap::MAX_DEPTH as usize {
        return Err(Error::domain(format!(
            "{} colour bits is not a pixel depth",
            l.color_bits
        )));
    }
    let pixels = (0..l.locations())
        .into_par_iter()
        .map(|loc| state.value(loc) as u32)
        .collect();
    PixelImage::new(l.h as u32, l.color_bits as u32, pixels)
}
