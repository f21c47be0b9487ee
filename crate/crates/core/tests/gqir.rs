use proptest::prelude::*;
use qimg::gqir::text::{from_text, to_text};
use qimg::gqir::{evaluate, prepare_uncompressed, prepare_values, readback, GqirLayout};
use qimg::pixmap::{count_one_bits, PixelImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image(seed: u64, n: u32, q: u32) -> PixelImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PixelImage::from_fn(n, q, |_, _| rng.gen_range(0..1u32 << q)).unwrap()
}

#[test]
fn readback_round_trip_100_seeds() {
    for seed in 0..100 {
        let img = random_image(seed, 3 + (seed % 2) as u32, 1 + (seed % 8) as u32);
        let state = evaluate(&prepare_uncompressed(&img), GqirLayout::for_image(&img)).unwrap();
        assert_eq!(readback(&state).unwrap(), img, "seed {seed}");
    }
}

#[test]
fn mean_mcx_on_random_16x16() {
    let total: u64 = (0..100)
        .map(|seed| {
            prepare_uncompressed(&random_image(1000 + seed, 4, 8))
                .tally()
                .mcx_total()
        })
        .sum();
    let mean = total as f64 / 100.0;
    // each of 256 pixels has 4 set bits on average
    assert!((mean - 1024.0).abs() / 1024.0 < 0.02, "{mean}");
}

proptest! {
    #[test]
    fn gate_count_is_popcount(seed in any::<u64>(), q in 1u32..=12) {
        let img = random_image(seed, 3, q);
        let t = prepare_uncompressed(&img).tally();
        prop_assert_eq!(t.mcx_total(), count_one_bits(&img));
        prop_assert_eq!(t.hadamard, 6);
        prop_assert!(t.mcx.keys().all(|&k| k == 6));
    }

    #[test]
    fn text_round_trip(seed in any::<u64>()) {
        let c = prepare_uncompressed(&random_image(seed, 3, 4));
        prop_assert_eq!(from_text(&to_text(&c)).unwrap(), c);
    }

    #[test]
    fn rectangular_layouts_evaluate(h in 0usize..4, w in 0usize..4, seed in any::<u64>()) {
        let layout = GqirLayout::new(5, h, w);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<u64> = (0..layout.locations()).map(|_| rng.gen_range(0..32)).collect();
        let state = evaluate(&prepare_values(layout, &values).unwrap(), layout).unwrap();
        prop_assert_eq!(state.values(), values);
    }
}

#[test]
fn value_wider_than_colour_register_is_rejected() {
    let layout = GqirLayout::new(2, 1, 1);
    assert!(prepare_values(layout, &[0, 4, 0, 0]).is_err());
    assert!(prepare_values(layout, &[0, 1, 0]).is_err());
}
