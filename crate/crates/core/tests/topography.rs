//! TICA on sources with a planted 1-D topography: neighbours in the fitted
//! order should share more variance structure than a shuffled order does.

use axistour::linalg::random_orthogonal;
use axistour::pipeline::whiten;
use axistour::tica::{generate_topographic_sources, higher_order_correlation, tica_fit, TicaParams};
use axistour::EmbeddingMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn fitted_order_beats_random_order_in_every_seed() {
    let (d, n, width) = (12, 4000, 3);
    for seed in 0..10u64 {
        let src = generate_topographic_sources(d, n, width, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mixing = random_orthogonal(d, &mut rng).unwrap();
        let x = EmbeddingMatrix::from_array(src.s.dot(&mixing)).unwrap();
        let (z, _) = whiten(&x).unwrap();

        let params = TicaParams { width, iterations: 150, seed, ..TicaParams::default() };
        let model = tica_fit(&z, &params).unwrap();
        let s = model.sources(&z).unwrap();

        let identity: Vec<usize> = (0..d).collect();
        let mut shuffled = identity.clone();
        shuffled.shuffle(&mut rng);
        let fitted = mean(&higher_order_correlation(s.data(), &identity).unwrap());
        let random = mean(&higher_order_correlation(s.data(), &shuffled).unwrap());
        assert!(fitted > random, "seed {seed}: fitted {fitted:.4} vs random {random:.4}");
    }
}

#[test]
fn planted_sources_are_correlated_only_with_a_wide_kernel() {
    let d = 10;
    let order: Vec<usize> = (0..d).collect();
    let wide = generate_topographic_sources(d, 20_000, 5, 1).unwrap();
    let narrow = generate_topographic_sources(d, 20_000, 1, 1).unwrap();
    let wide_mean = mean(&higher_order_correlation(&wide.s, &order).unwrap());
    let narrow_mean = mean(&higher_order_correlation(&narrow.s, &order).unwrap());
    assert!(wide_mean > 0.0);
    assert!(wide_mean > 5.0 * narrow_mean.abs(), "{wide_mean} vs {narrow_mean}");
}
