#![allow(dead_code)]

use obr_core::Dot;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Braille-like dot sets: random cells on a jittered grid plus stray dots.
pub fn grid_with_noise(seed: u64, max_dots: usize) -> Vec<Dot> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dots = Vec::new();
    let (cols, lines) = (rng.gen_range(1..6), rng.gen_range(1..4));
    'outer: for line in 0..lines {
        for col in 0..cols {
            let mask: u8 = rng.gen_range(1..64);
            for bit in 0..6 {
                if mask & (1 << bit) == 0 {
                    continue;
                }
                if dots.len() >= max_dots {
                    break 'outer;
                }
                let (x, y) = ((bit % 2) as f64, (bit / 2) as f64);
                dots.push(Dot::new(
                    col as f64 * 47.0 + x * 19.7 + rng.gen_range(-1.5..1.5),
                    line as f64 * 78.7 + y * 19.7 + rng.gen_range(-1.5..1.5),
                    5.9,
                    1,
                ));
            }
        }
    }
    let noise = rng.gen_range(0..6).min(max_dots.saturating_sub(dots.len()));
    for _ in 0..noise {
        dots.push(Dot::new(
            rng.gen_range(-20.0..260.0),
            rng.gen_range(-20.0..250.0),
            5.9,
            1,
        ));
    }
    dots
}

pub fn random_dots(seed: u64, n: usize, span: f64, integer: bool) -> Vec<Dot> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (mut x, mut y) = (rng.gen_range(0.0..span), rng.gen_range(0.0..span));
            if integer {
                x = x.round();
                y = y.round();
            }
            Dot::new(x, y, 5.0, 1)
        })
        .collect()
}
