//! Gate-level circuit records and their aggregate tally.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixedq::{adder_cost, muler_cost};

/// A control line: the gate fires only when `qubit` reads `polarity`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Control {
    pub qubit: usize,
    pub polarity: bool,
}

impl Control {
    pub fn on(qubit: usize) -> Self {
        Self {
            qubit,
            polarity: true,
        }
    }

    pub fn off(qubit: usize) -> Self {
        Self {
            qubit,
            polarity: false,
        }
    }
}

/// Contiguous run of qubits `start .. start + len`, least significant first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct QubitRange {
    pub start: usize,
    pub len: usize,
}

impl QubitRange {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn contains(&self, qubit: usize) -> bool {
        (self.start..self.end()).contains(&qubit)
    }

    pub fn overlaps(&self, other: &QubitRange) -> bool {
        self.start < other.end() && other.start < self.end()
    }

    /// The `k`-th qubit of the range.
    pub fn qubit(&self, k: usize) -> usize {
        debug_assert!(k < self.len);
        self.start + k
    }

    /// Sub-range of `len` qubits starting `offset` qubits in.
    pub fn slice(&self, offset: usize, len: usize) -> QubitRange {
        debug_assert!(offset + len <= self.len);
        QubitRange::new(self.start + offset, len)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Gate {
    Hadamard(usize),
    /// NOT on `target` conditioned on every control.
    Mcx {
        controls: Vec<Control>,
        target: usize,
    },
    /// `out ^= a · b`; `out` is twice as wide as the operands.
    Muler {
        controls: Vec<Control>,
        a: QubitRange,
        b: QubitRange,
        out: QubitRange,
    },
    /// `b ← b + a` (or `b − a` when reversed), modulo `2^|b|`.
    Adder {
        controls: Vec<Control>,
        a: QubitRange,
        b: QubitRange,
        reversed: bool,
    },
    /// Identity; carries a label through serialization.
    Note(String),
}

impl Gate {
    pub fn controls(&self) -> &[Control] {
        match self {
            Gate::Mcx { controls, .. } | Gate::Muler { controls, .. } | Gate::Adder { controls, .. } => {
                controls
            }
            Gate::Hadamard(_) | Gate::Note(_) => &[],
        }
    }

    fn check(&self, qubits: usize) -> Result<()> {
        let in_range = |q: usize| {
            if q < qubits {
                Ok(())
            } else {
                Err(Error::circuit(format!(
                    "qubit {q} outside a {qubits}-qubit circuit"
                )))
            }
        };
        let range_ok = |r: &QubitRange| {
            if r.len == 0 || r.end() > qubits {
                Err(Error::circuit(format!(
                    "register {}..{} outside a {qubits}-qubit circuit",
                    r.start,
                    r.end()
                )))
            } else {
                Ok(())
            }
        };
        let controls = self.controls();
        for (k, c) in controls.iter().enumerate() {
            in_range(c.qubit)?;
            if controls[..k].iter().any(|d| d.qubit == c.qubit) {
                return Err(Error::circuit(format!("qubit {} controls twice", c.qubit)));
            }
        }
        match self {
            Gate::Hadamard(t) => in_range(*t),
            Gate::Note(text) => {
                if text.contains('\n') {
                    Err(Error::circuit("note text spans lines"))
                } else {
                    Ok(())
                }
            }
            Gate::Mcx { controls, target } => {
                in_range(*target)?;
                if controls.iter().any(|c| c.qubit == *target) {
                    return Err(Error::circuit(format!("qubit {target} controls its own NOT")));
                }
                Ok(())
            }
            Gate::Muler { controls, a, b, out } => {
                for r in [a, b, out] {
                    range_ok(r)?;
                }
                if a.len != b.len || out.len != 2 * a.len {
                    return Err(Error::circuit(format!(
                        "multiplier widths {}x{} -> {} are inconsistent",
                        a.len, b.len, out.len
                    )));
                }
                if out.overlaps(a) || out.overlaps(b) {
                    return Err(Error::circuit("multiplier output overlaps an operand"));
                }
                if controls.iter().any(|c| out.contains(c.qubit)) {
                    return Err(Error::circuit("multiplier controlled by its own output"));
                }
                Ok(())
            }
            Gate::Adder { controls, a, b, .. } => {
                range_ok(a)?;
                range_ok(b)?;
                if b.len != a.len && b.len != a.len + 1 {
                    return Err(Error::circuit(format!(
                        "adder widths {} and {} are inconsistent",
                        a.len, b.len
                    )));
                }
                if a.overlaps(b) {
                    return Err(Error::circuit("adder operands overlap"));
                }
                if controls.iter().any(|c| b.contains(c.qubit)) {
                    return Err(Error::circuit("adder controlled by its own target"));
                }
                Ok(())
            }
        }
    }
}

/// An ordered list of gates over `qubits` qubits. Immutable once built;
/// construction validates every gate.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Self {
            qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.check(self.qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends every gate of `other`, which must not use more qubits.
    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.qubits > self.qubits {
            return Err(Error::circuit("appended circuit is wider"));
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    /// The same gates with every qubit index moved up by `offset`, in a
    /// circuit of `qubits` qubits.
    pub fn shifted(&self, offset: usize, qubits: usize) -> Result<Circuit> {
        let c = |cs: &[Control]| {
            cs.iter()
                .map(|c| Control {
                    qubit: c.qubit + offset,
                    polarity: c.polarity,
                })
                .collect()
        };
        let r = |r: &QubitRange| QubitRange::new(r.start + offset, r.len);
        let mut out = Circuit::new(qubits);
        for g in &self.gates {
            out.push(match g {
                Gate::Hadamard(t) => Gate::Hadamard(t + offset),
                Gate::Mcx { controls, target } => Gate::Mcx {
                    controls: c(controls),
                    target: target + offset,
                },
                Gate::Muler { controls, a, b, out } => Gate::Muler {
                    controls: c(controls),
                    a: r(a),
                    b: r(b),
                    out: r(out),
                },
                Gate::Adder {
                    controls,
                    a,
                    b,
                    reversed,
                } => Gate::Adder {
                    controls: c(controls),
                    a: r(a),
                    b: r(b),
                    reversed: *reversed,
                },
                Gate::Note(t) => Gate::Note(t.clone()),
            })?;
        }
        Ok(out)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn tally(&self) -> GateTally {
        let mut t = GateTally::default();
        for g in &self.gates {
            t.record(g);
        }
        t
    }
}

/// Gate counts per kind. Every drawn gate counts as one elementary gate no
/// matter how many controls it has.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GateTally {
    pub hadamard: u64,
    /// Multi-controlled NOTs keyed by control count.
    pub mcx: BTreeMap<usize, u64>,
    /// Multipliers keyed by operand width.
    pub muler: BTreeMap<usize, u64>,
    /// Forward adders keyed by operand width.
    pub adder: BTreeMap<usize, u64>,
    /// Reversed adders keyed by operand width.
    pub adder_reversed: BTreeMap<usize, u64>,
}

impl GateTally {
    fn record(&mut self, g: &Gate) {
        match g {
            Gate::Hadamard(_) => self.hadamard += 1,
            Gate::Mcx { controls, .. } => *self.mcx.entry(controls.len()).or_default() += 1,
            Gate::Muler { a, .. } => *self.muler.entry(a.len).or_default() += 1,
            Gate::Adder { a, reversed, .. } => {
                let map = if *reversed {
                    &mut self.adder_reversed
                } else {
                    &mut self.adder
                };
                *map.entry(a.len).or_default() += 1;
            }
            Gate::Note(_) => {}
        }
    }

    pub fn mcx_total(&self) -> u64 {
        self.mcx.values().sum()
    }

    pub fn muler_total(&self) -> u64 {
        self.muler.values().sum()
    }

    pub fn adder_total(&self) -> u64 {
        self.adder.values().sum::<u64>() + self.adder_reversed.values().sum::<u64>()
    }

    /// Number of drawn gates.
    pub fn drawn_gates(&self) -> u64 {
        self.hadamard + self.mcx_total() + self.muler_total() + self.adder_total()
    }

    /// Cost with multipliers and adders expanded by their gate-cost formulas.
    pub fn elementary_cost(&self) -> f64 {
        let muler: f64 = self
            .muler
            .iter()
            .map(|(&w, &c)| c as f64 * muler_cost(w as u32))
            .sum();
        let adder: f64 = self
            .adder
            .iter()
            .chain(&self.adder_reversed)
            .map(|(&w, &c)| (c * adder_cost(w as u32)) as f64)
            .sum();
        (self.hadamard + self.mcx_total()) as f64 + muler + adder
    }

    pub fn merge(&mut self, other: &GateTally) {
        self.hadamard += other.hadamard;
        for (dst, src) in [
            (&mut self.mcx, &other.mcx),
            (&mut self.muler, &other.muler),
            (&mut self.adder, &other.adder),
            (&mut self.adder_reversed, &other.adder_reversed),
        ] {
            for (&k, &v) in src {
                *dst.entry(k).or_default() += v;
            }
        }
    }
}

impl fmt::Display for GateTally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "H={} MCX={} MULER={} ADDER={}",
            self.hadamard,
            self.mcx_total(),
            self.muler_total(),
            self.adder_total()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_control_on_target() {
        let mut c = Circuit::new(3);
        assert!(c
            .push(Gate::Mcx {
                controls: vec![Control::on(1)],
                target: 1
            })
            .is_err());
        assert!(c
            .push(Gate::Mcx {
                controls: vec![Control::on(0), Control::off(0)],
                target: 2
            })
            .is_err());
        assert!(c.push(Gate::Hadamard(3)).is_err());
        assert!(c.is_empty());
    }

    #[test]
    fn rejects_bad_register_widths() {
        let mut c = Circuit::new(20);
        let bad = Gate::Muler {
            controls: vec![],
            a: QubitRange::new(0, 3),
            b: QubitRange::new(3, 3),
            out: QubitRange::new(6, 5),
        };
        assert!(c.push(bad).is_err());
        let overlapping = Gate::Adder {
            controls: vec![],
            a: QubitRange::new(0, 4),
            b: QubitRange::new(2, 4),
            reversed: false,
        };
        assert!(c.push(overlapping).is_err());
    }

    #[test]
    fn tally_counts_each_kind() {
        let c = Circuit::from_gates(
            30,
            vec![
                Gate::Hadamard(0),
                Gate::Hadamard(1),
                Gate::Mcx {
                    controls: vec![Control::on(0), Control::off(1)],
                    target: 2,
                },
                Gate::Muler {
                    controls: vec![Control::on(0)],
                    a: QubitRange::new(2, 4),
                    b: QubitRange::new(6, 4),
                    out: QubitRange::new(10, 8),
                },
                Gate::Adder {
                    controls: vec![],
                    a: QubitRange::new(2, 4),
                    b: QubitRange::new(18, 4),
                    reversed: true,
                },
                Gate::Note("end".into()),
            ],
        )
        .unwrap();
        let t = c.tally();
        assert_eq!(t.hadamard, 2);
        assert_eq!(t.mcx.get(&2), Some(&1));
        assert_eq!(t.muler.get(&4), Some(&1));
        assert_eq!(t.adder_reversed.get(&4), Some(&1));
        assert_eq!(t.drawn_gates(), 5);
        assert_eq!(t.elementary_cost(), 3.0 + 52.0 + 30.0);
    }
}
