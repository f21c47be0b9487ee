//! Line-oriented circuit text format.
//!
//! ```text
//! QUBITS 10
//! H 8
//! MCX 8:1,9:0 3
//! MULER 8:1 0..4 4..8 12..20
//! ADDER - 0..4 20..24
//! ADDERR 9:1 0..4 20..24
//! NOTE free text
//! ```
//!
//! Controls are `qubit:polarity` pairs, or `-` when there are none. Registers
//! are half-open qubit ranges, least significant qubit first.

use std::fmt::Write as _;

use super::circuit::{Circuit, Control, Gate, QubitRange};
use crate::error::{Error, Result};

fn write_controls(out: &mut String, controls: &[Control]) {
    if controls.is_empty() {
        out.push('-');
        return;
    }
    for (k, c) in controls.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        let _ = write!(out, "{}:{}", c.qubit, u8::from(c.polarity));
    }
}

fn write_range(out: &mut String, r: &QubitRange) {
    let _ = write!(out, " {}..{}", r.start, r.end());
}

pub fn to_text(circuit: &Circuit) -> String {
    let mut out = format!("QUBITS {}\n", circuit.qubits());
    for g in circuit.gates() {
        match g {
            Gate::Hadamard(t) => {
                let _ = writeln!(out, "H {t}");
            }
            Gate::Mcx { controls, target } => {
                out.push_str("MCX ");
                write_controls(&mut out, controls);
                let _ = writeln!(out, " {target}");
            }
            Gate::Muler {
                controls,
                a,
                b,
                out: o,
            } => {
                out.push_str("MULER ");
                write_controls(&mut out, controls);
                for r in [a, b, o] {
                    write_range(&mut out, r);
                }
                out.push('\n');
            }
            Gate::Adder {
                controls,
                a,
                b,
                reversed,
            } => {
                out.push_str(if *reversed { "ADDERR " } else { "ADDER " });
                write_controls(&mut out, controls);
                write_range(&mut out, a);
                write_range(&mut out, b);
                out.push('\n');
            }
            Gate::Note(text) => {
                let _ = writeln!(out, "NOTE {text}");
            }
        }
    }
    out
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| Error::CircuitParse {
        line,
        msg: format!("expected an integer, found `{tok}`"),
    })
}

fn parse_controls(tok: &str, line: usize) -> Result<Vec<Control>> {
    if tok == "-" {
        return Ok(Vec::new());
    }
    tok.split(',')
        .map(|pair| {
            let (q, p) = pair.split_once(':').ok_or_else(|| Error::CircuitParse {
                line,
                msg: format!("control `{pair}` is not qubit:polarity"),
            })?;
            let polarity = match p {
                "0" => false,
                "1" => true,
                _ => {
                    return Err(Error::CircuitParse {
                        line,
                        msg: format!("polarity `{p}` is not 0 or 1"),
                    })
                }
            };
            Ok(Control {
                qubit: parse_usize(q, line)?,
                polarity,
            })
        })
        .collect()
}

fn parse_range(tok: &str, line: usize) -> Result<QubitRange> {
    let (s, e) = tok.split_once("..").ok_or_else(|| Error::CircuitParse {
        line,
        msg: format!("register `{tok}` is not start..end"),
    })?;
    let (s, e) = (parse_usize(s, line)?, parse_usize(e, line)?);
    if e <= s {
        return Err(Error::CircuitParse {
            line,
            msg: format!("empty register `{tok}`"),
        });
    }
    Ok(QubitRange::new(s, e - s))
}

pub fn from_text(text: &str) -> Result<Circuit> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (first_no, first) =
        lines
            .by_ref()
            .find(|(_, l)| !l.trim().is_empty())
            .ok_or(Error::CircuitParse {
                line: 1,
                msg: "empty input".into(),
            })?;
    let qubits = match first.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["QUBITS", n] => parse_usize(n, first_no)?,
        _ => {
            return Err(Error::CircuitParse {
                line: first_no,
                msg: "missing QUBITS header".into(),
            })
        }
    };
    let mut circuit = Circuit::new(qubits);
    for (no, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        let (op, rest) = raw.split_once(' ').unwrap_or((raw, ""));
        let toks: Vec<&str> = rest.split_whitespace().collect();
        let arity = |n: usize| {
            if toks.len() == n {
                Ok(())
            } else {
                Err(Error::CircuitParse {
                    line: no,
                    msg: format!("{op} takes {n} fields, found {}", toks.len()),
                })
            }
        };
        let gate = match op {
            "H" => {
                arity(1)?;
                Gate::Hadamard(parse_usize(toks[0], no)?)
            }
            "MCX" => {
                arity(2)?;
                Gate::Mcx {
                    controls: parse_controls(toks[0], no)?,
                    target: parse_usize(toks[1], no)?,
                }
            }
            "MULER" => {
                arity(4)?;
                Gate::Muler {
                    controls: parse_controls(toks[0], no)?,
                    a: parse_range(toks[1], no)?,
                    b: parse_range(toks[2], no)?,
                    out: parse_range(toks[3], no)?,
                }
            }
            "ADDER" | "ADDERR" => {
                arity(3)?;
                Gate::Adder {
                    controls: parse_controls(toks[0], no)?,
                    a: parse_range(toks[1], no)?,
                    b: parse_range(toks[2], no)?,
                    reversed: op == "ADDERR",
                }
            }
            "NOTE" => Gate::Note(rest.to_string()),
            _ => {
                return Err(Error::CircuitParse {
                    line: no,
                    msg: format!("unknown gate `{op}`"),
                })
            }
        };
        circuit.push(gate).map_err(|e| Error::CircuitParse {
            line: no,
            msg: e.to_string(),
        })?;
    }
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn renders_each_gate_kind() {
        let c = Circuit::from_gates(
            24,
            vec![
                Gate::Hadamard(8),
                Gate::Mcx {
                    controls: vec![Control::on(8), Control::off(9)],
                    target: 3,
                },
                Gate::Mcx {
                    controls: vec![],
                    target: 0,
                },
                Gate::Muler {
                    controls: vec![Control::on(8)],
                    a: QubitRange::new(0, 4),
                    b: QubitRange::new(4, 4),
                    out: QubitRange::new(12, 8),
                },
                Gate::Adder {
                    controls: vec![],
                    a: QubitRange::new(0, 4),
                    b: QubitRange::new(20, 4),
                    reversed: false,
                },
                Gate::Adder {
                    controls: vec![Control::on(9)],
                    a: QubitRange::new(0, 4),
                    b: QubitRange::new(20, 4),
                    reversed: true,
                },
                Gate::Note("step 4".into()),
            ],
        )
        .unwrap();
        let text = to_text(&c);
        assert_eq!(
            text,
            "QUBITS 24\nH 8\nMCX 8:1,9:0 3\nMCX - 0\nMULER 8:1 0..4 4..8 12..20\n\
             ADDER - 0..4 20..24\nADDERR 9:1 0..4 20..24\nNOTE step 4\n"
        );
        assert_eq!(from_text(&text).unwrap(), c);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = from_text("QUBITS 4\nH 0\nMCX 0:2 1\n").unwrap_err();
        assert!(matches!(err, Error::CircuitParse { line: 3, .. }));
        let err = from_text("QUBITS 4\nMCX 0:1 0\n").unwrap_err();
        assert!(matches!(err, Error::CircuitParse { line: 2, .. }));
        assert!(from_text("H 0\n").is_err());
        assert!(from_text("").is_err());
        assert!(from_text("QUBITS 4\nFOO 1\n").is_err());
    }

    fn arb_mcx(qubits: usize) -> impl Strategy<Value = Gate> {
        (
            proptest::sample::subsequence((0..qubits).collect::<Vec<_>>(), 0..qubits),
            any::<u64>(),
        )
            .prop_map(move |(mut picked, bits)| {
                let target = picked.pop().unwrap_or(0);
                let controls = picked
                    .into_iter()
                    .filter(|&q| q != target)
                    .enumerate()
                    .map(|(k, q)| Control {
                        qubit: q,
                        polarity: (bits >> k) & 1 == 1,
                    })
                    .collect();
                Gate::Mcx { controls, target }
            })
    }

    proptest! {
        #[test]
        fn text_round_trips(gates in proptest::collection::vec(
            prop_oneof![arb_mcx(12), (0usize..12).prop_map(Gate::Hadamard)], 0..40)) {
            let c = Circuit::from_gates(12, gates).unwrap();
            prop_assert_eq!(from_text(&to_text(&c)).unwrap(), c);
        }
    }
}
