//! Dealer-generated AND triples.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::MpcError;

/// One party's shares of a sequence of triples, bit-packed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePool {
    a: Vec<u64>,
    b: Vec<u64>,
    c: Vec<u64>,
    len: usize,
    cursor: usize,
}

/// A party's share of one triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeaverTriple {
    pub a: bool,
    pub b: bool,
    pub c: bool,
}

fn bit(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

impl TriplePool {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn remaining(&self) -> usize {
        self.len - self.cursor
    }

    pub fn consumed(&self) -> usize {
        self.cursor
    }

    pub fn get(&self, i: usize) -> BeaverTriple {
        BeaverTriple {
            a: bit(&self.a, i),
            b: bit(&self.b, i),
            c: bit(&self.c, i),
        }
    }

    /// Hands out the next `n` triples; each is handed out at most once.
    pub fn take(&mut self, n: usize) -> Result<std::ops::Range<usize>, MpcError> {
        if n > self.remaining() {
            return Err(MpcError::TriplePoolExhausted {
                needed: n,
                available: self.remaining(),
            });
        }
        let r = self.cursor..self.cursor + n;
        self.cursor += n;
        Ok(r)
    }
}

/// Deals `count` triples to `n_parties`, deterministically under `seed`.
///
/// Every share is uniform; the last party's `c` share corrects the XOR to `a & b`.
pub fn deal_triples(n_parties: usize, count: usize, seed: u64) -> Vec<TriplePool> {
    assert!(n_parties >= 1);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let words = count.div_ceil(64);
    let tail_mask = match count % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    };
    let random_words = |rng: &mut ChaCha20Rng| -> Vec<u64> {
        let mut v: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
        if let Some(last) = v.last_mut() {
            *last &= tail_mask;
        }
        v
    };
    let mut pools: Vec<TriplePool> = Vec::with_capacity(n_parties);
    let mut a_tot = vec![0u64; words];
    let mut b_tot = vec![0u64; words];
    let mut c_tot = vec![0u64; words];
    for _ in 0..n_parties {
        let a = random_words(&mut rng);
        let b = random_words(&mut rng);
        let c = random_words(&mut rng);
        for w in 0..words {
            a_tot[w] ^= a[w];
            b_tot[w] ^= b[w];
            c_tot[w] ^= c[w];
        }
        pools.push(TriplePool {
            a,
            b,
            c,
            len: count,
            cursor: 0,
        });
    }
    let last = pools.last_mut().unwrap();
    for w in 0..words {
        last.c[w] ^= c_tot[w] ^ (a_tot[w] & b_tot[w]);
    }
    pools
}
