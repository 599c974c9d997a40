//! Counter-based expansion of one master seed into independent streams.

/// Splits a master seed into named per-purpose streams. The same
/// `(domain, index)` always maps to the same stream seed, and distinct
/// domains or indices decorrelate through two rounds of splitmix64.
#[derive(Debug, Clone, Copy)]
pub struct SeedSplitter {
    master: u64,
}

impl SeedSplitter {
    pub fn new(master: u64) -> Self {
        SeedSplitter { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&self, domain: &str, index: u64) -> u64 {
        let mut h = 0xcbf29ce484222325u64; // FNV-1a over the domain name
        for b in domain.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        let mixed = splitmix64(self.master ^ h);
        splitmix64(mixed ^ index.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
