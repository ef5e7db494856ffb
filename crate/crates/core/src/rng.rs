//! Seeded random number generation with named substreams.
//!
//! Every stochastic stage of the benchmark (under-sampling, splitting,
//! fold assignment, bootstraps, weight init, batch shuffling) draws from
//! its own substream derived from a single root seed and a stage label.
//! Substreams make results independent of scheduling: parallel and serial
//! runs consume the same streams and therefore agree bit-for-bit.
//!
//! The generator is SplitMix64 (Steele, Lea, Flood 2014): 64-bit state,
//! one multiply-xor-shift mix per output, portable across platforms.

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the label bytes; used only to fold substream labels into seeds.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Derive the seed of the substream identified by `label` under `root`.
    ///
    /// The derivation is `mix64(root ^ fnv1a(label))`; it depends only on the
    /// root seed and the label, never on how much of any stream was consumed.
    pub fn substream_seed(root: u64, label: &str) -> u64 {
        mix64(root ^ fnv1a(label.as_bytes()))
    }

    /// Open the substream identified by `label` under `root`.
    pub fn substream(root: u64, label: &str) -> Self {
        Rng::new(Self::substream_seed(root, label))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform f64 in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). Rejection sampling, so no modulo bias.
    pub fn gen_range(&mut self, n: usize) -> usize {
        assert!(n > 0, "gen_range requires n > 0");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Uniform f64 in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.gen_range(i + 1);
            xs.swap(i, j);
        }
    }

    /// Draw `k` distinct values from [0, n) in ascending order.
    ///
    /// Uses a partial Fisher-Yates over the index range; O(n) memory.
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} distinct values from {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.gen_range(n - i);
            pool.swap(i, j);
        }
        let mut picked = pool[..k].to_vec();
        picked.sort_unstable();
        picked
    }
}
