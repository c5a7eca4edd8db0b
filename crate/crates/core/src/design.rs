//! Low-discrepancy point sets on the unit box.

use rand::Rng;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    out
}

/// First `n` Halton points in `[0,1]^d`, skipping the origin.
pub fn halton(n: usize, d: usize) -> Vec<Vec<f64>> {
    assert!(d <= PRIMES.len(), "halton supports up to {} dimensions", PRIMES.len());
    (1..=n as u64).map(|i| PRIMES[..d].iter().map(|&p| radical_inverse(i, p)).collect()).collect()
}

/// Halton points under a uniform random toroidal shift.
pub fn shifted_halton<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let shift: Vec<f64> = (0..d).map(|_| rng.random()).collect();
    let mut pts = halton(n, d);
    for p in &mut pts {
        for (v, s) in p.iter_mut().zip(&shift) {
            *v = (*v + s).fract();
        }
    }
    pts
}

/// Independent uniform points.
pub fn uniform<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random()).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn base_two_sequence() {
        let pts = halton(4, 1);
        assert_eq!(pts, vec![vec![0.5], vec![0.25], vec![0.75], vec![0.125]]);
    }

    #[test]
    fn stays_in_unit_box_and_fills_it() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let pts = shifted_halton(1000, 3, &mut rng);
        assert!(pts.iter().flatten().all(|v| (0.0..1.0).contains(v)));
        for dim in 0..3 {
            let mut counts = [0usize; 10];
            for p in &pts {
                counts[(p[dim] * 10.0) as usize] += 1;
            }
            assert!(counts.iter().all(|c| (95..=105).contains(c)), "{counts:?}");
        }
    }
}
