use proptest::prelude::*;
use qimg::jpeg::{reconstruct_float, QuantMatrix};
use qimg::pixmap::PixelImage;
use qimg::qjpeg::{run_pipeline, synth_step3, PipelineLayout, TraceDetail};

fn smooth_block(seed: [u8; 4], q: u32) -> PixelImage {
    let max = (1u32 << q) - 1;
    PixelImage::from_fn(3, q, |y, x| {
        let v = u32::from(seed[0]) * max / 255
            + (y as u32 * u32::from(seed[1] % 8) + x as u32 * u32::from(seed[2] % 8)) * max / 255;
        v.min(max)
    })
    .unwrap()
}

#[test]
fn layout_is_contiguous() {
    let l = PipelineLayout::new(3, 8).unwrap();
    let ranges = [l.f, l.loc, l.qreg, l.qloc, l.fp, l.ctab, l.cloc, l.prod, l.acc];
    let total: usize = ranges.iter().map(|r| r.len).sum::<usize>() + 1;
    assert_eq!(total, l.qubits);
    assert_eq!(l.fp.len, 15);
    assert_eq!(l.ctab.len, 64 * 12);
    assert_eq!(l.prod.len, 64 * 23);
    assert_eq!(l.acc.len, 22);
}

#[test]
fn depth_limits() {
    assert!(PipelineLayout::new(3, 4).is_err());
    assert!(PipelineLayout::new(3, 17).is_err());
    // standard matrix entries need 7 magnitude bits
    assert!(synth_step3(&QuantMatrix::standard(), 7).is_err());
    assert!(synth_step3(&QuantMatrix::standard(), 8).is_ok());
}

#[test]
fn dequantization_register() {
    let img = PixelImage::from_fn(3, 8, |y, x| (y * 30 + x * 3) as u32).unwrap();
    let qm = QuantMatrix::standard();
    let out = run_pipeline(&img, &qm, TraceDetail::Summary).unwrap();
    for t in &out.trace.locations {
        let (u, v) = (t.y % 8, t.x % 8);
        assert_eq!(t.g_branches, 1);
        assert_eq!(t.q_entry, qm.get(u, v));
        assert_eq!(t.f_prime, i64::from(t.f_q) * i64::from(qm.get(u, v)));
    }
}

#[test]
fn products_sum_to_accumulator() {
    let img = PixelImage::from_fn(3, 8, |y, x| ((y * 7 + x * 13) % 256) as u32).unwrap();
    let out = run_pipeline(&img, &QuantMatrix::standard(), TraceDetail::Products).unwrap();
    for t in &out.trace.locations {
        let p = t.products.as_ref().unwrap();
        assert_eq!(p.len(), 64);
        let sum: i64 = p.iter().sum();
        let m = (1i64 << 22) - 1;
        assert_eq!(sum & m, t.accumulator as i64);
    }
}

#[test]
fn deterministic() {
    let img = PixelImage::from_fn(4, 8, |y, x| ((y * x + 3 * y) % 256) as u32).unwrap();
    let qm = QuantMatrix::standard();
    let a = run_pipeline(&img, &qm, TraceDetail::Summary).unwrap();
    let b = run_pipeline(&img, &qm, TraceDetail::Summary).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.circuits.full(), b.circuits.full());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn close_to_float_path(seed in any::<[u8; 4]>(), q in 8u32..=12) {
        let img = smooth_block(seed, q);
        let qm = QuantMatrix::standard();
        let out = run_pipeline(&img, &qm, TraceDetail::Summary).unwrap();
        let float = reconstruct_float(&img, &qm).unwrap();
        let max = f64::from(img.max_value());
        for (t, f) in out.trace.locations.iter().zip(&float) {
            if t.wraparound {
                continue;
            }
            prop_assert!((f64::from(t.display) - f.clamp(0.0, max)).abs() <= 2.0,
                "({}, {}): {} vs {f}", t.y, t.x, t.display);
        }
    }
}
