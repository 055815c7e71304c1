//! Counter-based seeded randomness.
//!
//! Every draw is a pure function of `(seed, stream coordinates)`, so trials
//! can run in parallel and still reproduce bit for bit. The mixer is the
//! splitmix64 finalizer applied to each coordinate in turn.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit hash of a seed and three stream coordinates.
pub fn mix(seed: u64, a: u64, b: u64, c: u64) -> u64 {
    let mut z = splitmix(seed);
    z = splitmix(z ^ a);
    z = splitmix(z ^ b);
    z = splitmix(z ^ c);
    z
}

/// Uniform draw in `[0, 1)` from the stream `(seed, a, b, c)`.
pub fn unit(seed: u64, a: u64, b: u64, c: u64) -> f64 {
    // 53 high-quality bits, the mantissa width of f64.
    (mix(seed, a, b, c) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential generator view over a counter stream, for callers that want
/// draw-after-draw semantics inside one logical stream.
#[derive(Debug, Clone)]
pub struct StreamRng {
    seed: u64,
    a: u64,
    b: u64,
    counter: u64,
}

impl StreamRng {
    pub fn new(seed: u64, a: u64, b: u64) -> Self {
        StreamRng {
            seed,
            a,
            b,
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = mix(self.seed, self.a, self.b, self.counter);
        self.counter += 1;
        v
    }

    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `0..bound` by rejection, unbiased for any bound.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }
}
