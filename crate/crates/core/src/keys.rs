//! Counter-based randomness.
//!
//! Every random bit in the crate is a keyed hash of a counter: bond states hash
//! the canonical edge under a key derived from `(master_seed, replica_index)`,
//! and walk streams are seeded from `(master_seed, replica_index, tag)`. Nothing
//! depends on the order in which replicas are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LANE0: u64 = 0x243f_6a88_85a3_08d3;
const LANE1: u64 = 0x1319_8a2e_0370_7344;
const AXIS_MUL: u64 = 0x9e37_79b9_7f4a_7c15;
const COORD_MUL: u64 = 0xd6e8_feb8_6659_fd93;

/// Offset added to replica indices for denominator streams.
pub const DENOMINATOR_OFFSET: u64 = 1 << 31;

pub(crate) const TAG_WALK: u64 = 0x7761_6c6b;

#[inline]
pub(crate) fn fmix64(mut k: u64) -> u64 {
    k ^= k >> 33;
    k = k.wrapping_mul(0xff51_afd7_ed55_8ccd);
    k ^= k >> 33;
    k = k.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    k ^= k >> 33;
    k
}

#[inline]
fn mum(a: u64, b: u64) -> u64 {
    let r = (a as u128).wrapping_mul(b as u128);
    (r as u64) ^ ((r >> 64) as u64)
}

/// 128-bit identifier of a lattice site.
///
/// Each half is a sum over axes of an injective per-coordinate hash, so moving
/// one coordinate updates the key in O(1). Distinct sites collide with
/// probability about `2^-128`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct VertexKey(pub(crate) u64, pub(crate) u64);

impl std::hash::Hash for VertexKey {
    #[inline]
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        state.write_u64(self.0);
    }
}

#[inline]
pub(crate) fn coord_term(axis: usize, value: i64, lane: u64) -> u64 {
    fmix64((value as u64).wrapping_mul(COORD_MUL) ^ ((axis as u64 + 1).wrapping_mul(AXIS_MUL)) ^ lane)
}

#[inline]
pub(crate) fn axis_terms(axis: usize, value: i64) -> (u64, u64) {
    (coord_term(axis, value, LANE0), coord_term(axis, value, LANE1))
}

pub fn vertex_key(coords: &[i64]) -> VertexKey {
    let mut k = VertexKey(0, 0);
    for (axis, &v) in coords.iter().enumerate() {
        let (a, b) = axis_terms(axis, v);
        k.0 = k.0.wrapping_add(a);
        k.1 = k.1.wrapping_add(b);
    }
    k
}

/// Key of `y` given the key of `y − delta` and `delta`'s nonzero entries.
#[inline]
pub(crate) fn moved_key(key: VertexKey, y: &[i64], changes: &[(usize, i64)]) -> VertexKey {
    let mut k = key;
    for &(axis, c) in changes {
        let (oa, ob) = axis_terms(axis, y[axis] - c);
        let (na, nb) = axis_terms(axis, y[axis]);
        k.0 = k.0.wrapping_sub(oa).wrapping_add(na);
        k.1 = k.1.wrapping_sub(ob).wrapping_add(nb);
    }
    k
}

/// Hasher for maps keyed by [`VertexKey`]; the key is already uniform.
#[derive(Default, Clone, Copy)]
pub struct KeyHasher(u64);

impl std::hash::Hasher for KeyHasher {
    #[inline]
    fn finish(&self) -> u64 {
        self.0
    }

    #[inline]
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = fmix64(self.0 ^ b as u64);
        }
    }

    #[inline]
    fn write_u64(&mut self, i: u64) {
        self.0 ^= i;
    }
}

pub type KeyMap<V> =
    std::collections::HashMap<VertexKey, V, std::hash::BuildHasherDefault<KeyHasher>>;
pub type KeySet = std::collections::HashSet<VertexKey, std::hash::BuildHasherDefault<KeyHasher>>;

/// Key material of one replica's bond configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamKey {
    k0: u64,
    k1: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, replica: u64) -> Self {
        let a = fmix64(master_seed ^ 0x5851_f42d_4c95_7f2d);
        let b = fmix64(replica.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ a);
        StreamKey {
            k0: fmix64(a ^ b.rotate_left(17) ^ LANE0),
            k1: fmix64(b ^ a.rotate_left(41) ^ LANE1),
        }
    }

    /// Uniform 64-bit word for the bond whose lower endpoint has key `lower`
    /// and whose undirected direction is `code`.
    #[inline]
    pub fn edge_word(&self, lower: VertexKey, code: u64) -> u64 {
        let a = lower.0 ^ self.k0;
        let b = lower.1 ^ self.k1 ^ (code.wrapping_add(1)).wrapping_mul(AXIS_MUL);
        fmix64(mum(a, b ^ LANE1) ^ mum(b, a ^ LANE0))
    }
}

/// Threshold such that `word >> 11 < threshold` has probability exactly `p`
/// at 53-bit resolution.
pub(crate) fn open_threshold(p: f64) -> u64 {
    (p * (1u64 << 53) as f64).ceil() as u64
}

#[inline]
pub(crate) fn is_open(word: u64, threshold: u64) -> bool {
    (word >> 11) < threshold
}

/// Seed for an auxiliary stream of a replica (e.g. the walk), independent of
/// its bond configuration.
pub fn derived_seed(master_seed: u64, replica: u64, tag: u64) -> u64 {
    let s = StreamKey::new(master_seed ^ fmix64(tag), replica);
    fmix64(s.k0 ^ s.k1.rotate_left(29))
}

pub fn tagged_rng(master_seed: u64, replica: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derived_seed(master_seed, replica, tag))
}

/// Seed of the `index`-th independent sub-experiment of a run.
pub fn child_seed(master_seed: u64, index: u64) -> u64 {
    fmix64(fmix64(master_seed ^ 0xa076_1d64_78bd_642f) ^ index.wrapping_mul(AXIS_MUL))
}
