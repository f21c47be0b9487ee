//! Sign-magnitude fixed-point values and the arithmetic black boxes.
//!
//! The multiplier (`MULER`) and adder (`ADDER`) are modelled by their
//! register-level input/output behaviour plus their published gate costs;
//! their internal gate networks are not synthesized.

use serde::Serialize;

use crate::error::{Error, Result};

/// Sign-magnitude fixed-point number: `(-1)^negative · magnitude / 2^frac_bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SignMagFixed {
    pub negative: bool,
    pub magnitude: u64,
    pub int_bits: u32,
    pub frac_bits: u32,
}

/// Bit layout of a [`SignMagFixed`] register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedFormat {
    pub int_bits: u32,
    pub frac_bits: u32,
}

impl FixedFormat {
    pub fn new(int_bits: u32, frac_bits: u32) -> Self {
        Self { int_bits, frac_bits }
    }

    pub fn magnitude_bits(&self) -> u32 {
        self.int_bits + self.frac_bits
    }
}

impl SignMagFixed {
    pub fn to_f64(&self) -> f64 {
        let m = self.magnitude as f64 / (self.frac_bits as f64).exp2();
        if self.negative {
            -m
        } else {
            m
        }
    }
}

/// Rounds `x` to the nearest representable value, ties away from zero.
/// Zero is always encoded with a clear sign bit.
pub fn encode_fixed(x: f64, fmt: FixedFormat) -> Result<SignMagFixed> {
    let width = fmt.magnitude_bits();
    if width == 0 || width > 63 {
        return Err(Error::domain(format!("unsupported magnitude width {width}")));
    }
    if !x.is_finite() {
        return Err(Error::domain("cannot encode a non-finite value"));
    }
    let scaled = (x.abs() * (fmt.frac_bits as f64).exp2()).round();
    if scaled >= (width as f64).exp2() {
        return Err(Error::overflow(format!(
            "{x} does not fit {} integer + {} fraction bits",
            fmt.int_bits, fmt.frac_bits
        )));
    }
    let magnitude = scaled as u64;
    Ok(SignMagFixed {
        negative: x < 0.0 && magnitude != 0,
        magnitude,
        int_bits: fmt.int_bits,
        frac_bits: fmt.frac_bits,
    })
}

fn check_operand(value: u64, width: u32, name: &str) -> Result<()> {
    if width == 0 || width > 63 {
        return Err(Error::domain(format!("unsupported register width {width}")));
    }
    if value >> width != 0 {
        return Err(Error::overflow(format!(
            "operand {name} = {value} exceeds {width} bits"
        )));
    }
    Ok(())
}

/// `M(a, b, 0) = (a, b, a·b)` for `width`-bit operands; the product occupies
/// `2·width` bits.
pub fn muler_semantics(a: u64, b: u64, width: u32) -> Result<u128> {
    check_operand(a, width, "a")?;
    check_operand(b, width, "b")?;
    Ok(u128::from(a) * u128::from(b))
}

/// Forward: `A(a, b) = (a, a + b)` with an `(width + 1)`-bit sum.
/// Reversed: `b - a` when `b ≥ a`, else `2^width - (a - b)`.
pub fn adder_semantics(a: u64, b: u64, width: u32, reversed: bool) -> Result<u64> {
    check_operand(a, width, "a")?;
    if reversed {
        check_operand(b, width, "b")?;
        Ok(if b >= a { b - a } else { (1u64 << width) - (a - b) })
    } else {
        // forward accepts the carry bit of a previous sum in b
        check_operand(b, width + 1, "b")?;
        Ok(a + b)
    }
}

/// Gate cost of a `width`-qubit multiplier:
/// `n² + 4n − 4 + (4n − 8 + 2·log₂n)·log₂n`.
pub fn muler_cost(width: u32) -> f64 {
    let n = f64::from(width);
    let l = n.log2();
    n * n + 4.0 * n - 4.0 + (4.0 * n - 8.0 + 2.0 * l) * l
}

/// Gate cost of a `width`-qubit adder: `8n − 2`.
pub fn adder_cost(width: u32) -> u64 {
    8 * u64::from(width) - 2
}

/// Time cost of a ripple-carry adder of `size` bits, `4s − 2`. Each stage of
/// the multiplier runs one such adder.
pub fn ripple_adder_cost(size: u32) -> u64 {
    4 * u64::from(size) - 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplier_examples() {
        assert_eq!(muler_semantics(0, 77, 7).unwrap(), 0);
        assert_eq!(muler_semantics(127, 16, 11).unwrap(), 2032);
        let top = (1u64 << 12) - 1;
        let p = muler_semantics(top, top, 12).unwrap();
        assert!(p < 1u128 << 24);
        assert!(muler_semantics(16, 1, 4).is_err());
    }

    #[test]
    fn adder_examples() {
        assert_eq!(adder_semantics(3, 5, 4, false).unwrap(), 8);
        assert_eq!(adder_semantics(5, 3, 4, true).unwrap(), 14);
        assert_eq!(adder_semantics(3, 5, 4, true).unwrap(), 2);
        assert!(adder_semantics(16, 0, 4, false).is_err());
    }

    #[test]
    fn cost_spot_values() {
        assert_eq!(muler_cost(1), 1.0);
        assert_eq!(muler_cost(2), 10.0);
        assert_eq!(muler_cost(4), 52.0);
        assert_eq!(adder_cost(1), 6);
        assert_eq!(adder_cost(10), 78);
        assert_eq!(ripple_adder_cost(3), 10);
    }

    #[test]
    fn encode_examples() {
        let f = FixedFormat::new(0, 11);
        let e = encode_fixed(0.125, f).unwrap();
        assert_eq!((e.negative, e.magnitude), (false, 256));
        let e = encode_fixed(-0.2405, f).unwrap();
        assert_eq!((e.negative, e.magnitude), (true, 493));
        let e = encode_fixed(0.0, f).unwrap();
        assert_eq!((e.negative, e.magnitude), (false, 0));
        let e = encode_fixed(-1e-9, f).unwrap();
        assert_eq!((e.negative, e.magnitude), (false, 0));
        assert!(encode_fixed(1.0, f).is_err());
        assert!(encode_fixed(f64::NAN, f).is_err());
    }
}
