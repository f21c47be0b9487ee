//! Classical execution of one computational-basis branch.
//!
//! A [`Program`] is a gate list compiled against a [`RegisterMap`], which packs
//! the live qubit ranges of a wide circuit into a short bit vector. Running a
//! program applies each gate's permutation to that vector. Hadamards are not
//! executable here; callers enumerate the branches they create.

use super::circuit::{Circuit, Control, Gate, QubitRange};
use super::{get_field, set_field};
use crate::error::{Error, Result};

/// Packs selected qubit ranges of a circuit into consecutive bits.
#[derive(Debug, Clone)]
pub struct RegisterMap {
    ranges: Vec<(QubitRange, usize)>,
    bits: usize,
}

impl RegisterMap {
    pub fn new(ranges: &[QubitRange]) -> Result<Self> {
        let mut out = Vec::with_capacity(ranges.len());
        let mut bits = 0;
        for (k, r) in ranges.iter().enumerate() {
            if ranges[..k].iter().any(|o| o.overlaps(r)) {
                return Err(Error::circuit("register map ranges overlap"));
            }
            out.push((*r, bits));
            bits += r.len;
        }
        Ok(Self { ranges: out, bits })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn words(&self) -> usize {
        self.bits.div_ceil(64).max(1)
    }

    pub fn qubit(&self, q: usize) -> Option<usize> {
        self.ranges
            .iter()
            .find(|(r, _)| r.contains(q))
            .map(|(r, base)| base + q - r.start)
    }

    /// Packed position of a range, which must lie inside one mapped range.
    pub fn range(&self, r: &QubitRange) -> Option<(usize, usize)> {
        self.ranges
            .iter()
            .find(|(m, _)| m.contains(r.start) && r.end() <= m.end())
            .map(|(m, base)| (base + r.start - m.start, r.len))
    }

    pub fn zeros(&self) -> Vec<u64> {
        vec![0; self.words()]
    }

    pub fn read(&self, state: &[u64], r: &QubitRange) -> u64 {
        let (lo, len) = self.range(r).expect("range is mapped");
        get_field(state, lo, len)
    }

    pub fn write(&self, state: &mut [u64], r: &QubitRange, value: u64) {
        let (lo, len) = self.range(r).expect("range is mapped");
        set_field(state, lo, len, value);
    }
}

type Field = (usize, usize);

#[derive(Debug, Clone)]
enum Op {
    Flip {
        controls: Vec<(usize, bool)>,
        target: usize,
    },
    Mul {
        controls: Vec<(usize, bool)>,
        a: Field,
        b: Field,
        out: Field,
    },
    Add {
        controls: Vec<(usize, bool)>,
        a: Field,
        b: Field,
        reversed: bool,
    },
}

/// Events raised by adders while running.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ArithEvents {
    /// Forward additions that carried out of the target register.
    pub carries: u32,
    /// Reversed additions that borrowed (`b < a`).
    pub borrows: u32,
}

/// A compiled gate list. `sources()[k]` is the circuit gate op `k` came from.
#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<Op>,
    sources: Vec<usize>,
}

impl Program {
    /// Compiles every gate except Hadamards and notes, which are skipped.
    /// Fails if a gate touches an unmapped qubit or a register whose width
    /// the executor cannot hold.
    pub fn compile(circuit: &Circuit, map: &RegisterMap) -> Result<Self> {
        let bit = |q: usize| {
            map.qubit(q)
                .ok_or_else(|| Error::circuit(format!("qubit {q} is not mapped")))
        };
        let field = |r: &QubitRange| {
            if r.len > 64 {
                return Err(Error::circuit("register wider than 64 qubits"));
            }
            map.range(r)
                .ok_or_else(|| Error::circuit(format!("register {}..{} is not mapped", r.start, r.end())))
        };
        let ctrl = |cs: &[Control]| -> Result<Vec<(usize, bool)>> {
            cs.iter().map(|c| Ok((bit(c.qubit)?, c.polarity))).collect()
        };
        let mut ops = Vec::new();
        let mut sources = Vec::new();
        for (k, g) in circuit.gates().iter().enumerate() {
            let op = match g {
                Gate::Hadamard(_) | Gate::Note(_) => continue,
                Gate::Mcx { controls, target } => Op::Flip {
                    controls: ctrl(controls)?,
                    target: bit(*target)?,
                },
                Gate::Muler { controls, a, b, out } => Op::Mul {
                    controls: ctrl(controls)?,
                    a: field(a)?,
                    b: field(b)?,
                    out: field(out)?,
                },
                Gate::Adder {
                    controls,
                    a,
                    b,
                    reversed,
                } => Op::Add {
                    controls: ctrl(controls)?,
                    a: field(a)?,
                    b: field(b)?,
                    reversed: *reversed,
                },
            };
            ops.push(op);
            sources.push(k);
        }
        Ok(Self { ops, sources })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn run(&self, state: &mut [u64]) -> ArithEvents {
        let mut ev = ArithEvents::default();
        for k in 0..self.ops.len() {
            self.step(k, state, &mut ev);
        }
        ev
    }

    /// Executes op `k` alone.
    pub fn step(&self, k: usize, state: &mut [u64], ev: &mut ArithEvents) {
        let fires = |cs: &[(usize, bool)], s: &[u64]| {
            cs.iter().all(|&(b, p)| ((s[b / 64] >> (b % 64)) & 1 == 1) == p)
        };
        match &self.ops[k] {
            Op::Flip { controls, target } => {
                if fires(controls, state) {
                    state[target / 64] ^= 1 << (target % 64);
                }
            }
            Op::Mul { controls, a, b, out } => {
                if fires(controls, state) {
                    let p = get_field(state, a.0, a.1).wrapping_mul(get_field(state, b.0, b.1));
                    let o = get_field(state, out.0, out.1);
                    set_field(state, out.0, out.1, o ^ p);
                }
            }
            Op::Add {
                controls,
                a,
                b,
                reversed,
            } => {
                if fires(controls, state) {
                    let x = get_field(state, a.0, a.1);
                    let y = get_field(state, b.0, b.1);
                    let m = if b.1 >= 64 { u64::MAX } else { (1u64 << b.1) - 1 };
                    let r = if *reversed {
                        if y < x {
                            ev.borrows += 1;
                        }
                        y.wrapping_sub(x)
                    } else {
                        let s = y.wrapping_add(x);
                        if s & !m != 0 || s < y {
                            ev.carries += 1;
                        }
                        s
                    };
                    set_field(state, b.0, b.1, r & m);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_mapped_gates() {
        // live registers 10..14 and 20..28 of a 40-qubit circuit
        let a = QubitRange::new(10, 4);
        let b = QubitRange::new(20, 8);
        let map = RegisterMap::new(&[a, b]).unwrap();
        assert_eq!(map.bits(), 12);
        let c = Circuit::from_gates(
            40,
            vec![
                Gate::Hadamard(0),
                Gate::Mcx {
                    controls: vec![Control::on(10)],
                    target: 27,
                },
                Gate::Adder {
                    controls: vec![],
                    a,
                    b: QubitRange::new(20, 4),
                    reversed: true,
                },
            ],
        )
        .unwrap();
        let p = Program::compile(&c, &map).unwrap();
        assert_eq!(p.sources(), &[1, 2]);
        let mut s = map.zeros();
        map.write(&mut s, &a, 3);
        map.write(&mut s, &b, 1);
        let ev = p.run(&mut s);
        // 1 - 3 mod 16 = 14, plus the flipped top bit
        assert_eq!(map.read(&s, &b), 14 | 0x80);
        assert_eq!(ev.borrows, 1);

        let unmapped = Circuit::from_gates(
            40,
            vec![Gate::Mcx {
                controls: vec![],
                target: 0,
            }],
        )
        .unwrap();
        assert!(Program::compile(&unmapped, &map).is_err());
    }

    #[test]
    fn forward_add_reports_carry() {
        let a = QubitRange::new(0, 4);
        let b = QubitRange::new(4, 4);
        let map = RegisterMap::new(&[a, b]).unwrap();
        let c = Circuit::from_gates(
            8,
            vec![Gate::Adder {
                controls: vec![],
                a,
                b,
                reversed: false,
            }],
        )
        .unwrap();
        let p = Program::compile(&c, &map).unwrap();
        let mut s = map.zeros();
        map.write(&mut s, &a, 9);
        map.write(&mut s, &b, 9);
        assert_eq!(p.run(&mut s).carries, 1);
        assert_eq!(map.read(&s, &b), 2);
    }
}
