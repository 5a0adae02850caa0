//! Counter-based random streams.
//!
//! Every draw is a pure function of `(master_seed, run_index, step, counter)`,
//! so a trajectory can be replayed from any step and runs are independent of
//! how they are scheduled across threads.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct CounterRng {
    key: u64,
    step: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(master_seed: u64, run_index: u64) -> Self {
        let key = mix(mix(master_seed.wrapping_add(GOLDEN)) ^ run_index.wrapping_mul(0xD1B5_4A32_D192_ED03));
        Self { key, step: 0, counter: 0 }
    }

    /// Moves to the stream of `step` and rewinds its draw counter.
    pub fn set_step(&mut self, step: u64) {
        self.step = step;
        self.counter = 0;
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let s = mix(self.step.wrapping_mul(GOLDEN) ^ 0x5851_F42D_4C95_7F2D);
        let out = mix(self.key ^ s.rotate_left(23) ^ self.counter.wrapping_mul(0xA076_1D64_78BD_642F));
        self.counter = self.counter.wrapping_add(1);
        out
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let v = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = CounterRng::new(7, 3);
        let mut b = CounterRng::new(7, 3);
        a.set_step(5);
        b.set_step(5);
        assert_eq!(a.next_u64(), b.next_u64());
        let mut c = CounterRng::new(7, 4);
        c.set_step(5);
        let mut d = CounterRng::new(8, 3);
        d.set_step(5);
        let x = CounterRng::new(7, 3).next_u64();
        assert_ne!(c.next_u64(), d.next_u64());
        let mut e = CounterRng::new(7, 3);
        e.set_step(1);
        assert_ne!(x, e.next_u64());
    }

    #[test]
    fn uniform_moments() {
        let mut r = CounterRng::new(1, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.005);
        assert!((var - 1.0 / 12.0).abs() < 0.002);
        let mut bytes = [0u8; 13];
        r.fill_bytes(&mut bytes);
        assert!(bytes.iter().any(|&b| b != 0));
    }
}
