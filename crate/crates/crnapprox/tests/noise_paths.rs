//! Growth of the coupling distance between paired Poisson and
//! drifted-Wiener paths: over a horizon h the sup distance should grow
//! like log h, far slower than the sqrt(h) scale of either path's
//! fluctuations.

use crnapprox::kmt::generate_paired_noise;
use crnapprox::rng::stream_rng;
use crnapprox::stats::median;

fn median_sup_distance(n: usize, seeds: u64) -> f64 {
    let sups: Vec<f64> = (0..seeds)
        .map(|seed| {
            let mut rng = stream_rng(seed, 9);
            let paired = generate_paired_noise(n, 1.0, &mut rng, "growth").unwrap();
            paired
                .poisson_path
                .iter()
                .zip(&paired.wiener_path)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        })
        .collect();
    median(&sups)
}

#[test]
fn coupling_distance_grows_logarithmically() {
    let seeds = 50;
    let small = median_sup_distance(64, seeds);
    let large = median_sup_distance(4096, seeds);
    assert!(small > 0.0);
    // log(4096)/log(64) = 2; allow slack but rule out the sqrt(h) scale,
    // which would give a factor of 8
    let ratio = large / small;
    assert!(
        ratio < 5.0,
        "sup distance grew by {ratio:.2}x from h=64 to h=4096"
    );
    // and the distance stays tiny next to the paths themselves (~h)
    assert!(large < 64.0, "absolute coupling distance {large}");
}
