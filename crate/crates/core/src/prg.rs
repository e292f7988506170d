//! k-wise uniform sources over binary fields and the block combiner.
//!
//! A hash family is the set of all polynomials of degree `< k` over `GF(2^t)`.
//! Member index digits (base `2^t`, least significant first) are the
//! coefficients `a_0, a_1, ...`; domain point `i` is embedded as the field
//! element with bit pattern `i`, and the output keeps the low `log2 p` bits.

use crate::error::{Error, Result};

/// Irreducible moduli, bit-encoded with the leading term, for `t = 1..=32`.
const MODULI: [u64; 32] = [
    0b11,
    0x7,
    0xB,
    0x13,
    0x25,
    0x43,
    0x83,
    0x11B,
    0x211,
    0x409,
    0x805,
    0x1009,
    0x201B,
    0x4021,
    0x8003,
    0x1002B,
    0x20009,
    0x40081,
    0x80027,
    0x100009,
    0x200005,
    0x400003,
    0x800021,
    0x100001B,
    0x2000009,
    0x400001B,
    0x8000027,
    0x10000009,
    0x20000005,
    0x40000003,
    0x80000009,
    0x10000008D,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryField {
    t: u32,
    modulus: u64,
}

/// Builds `GF(2^t)` from the built-in modulus table.
pub fn make_field(t: u32) -> Result<BinaryField> {
    if !(1..=32).contains(&t) {
        return Err(Error::UnsupportedDegree(t));
    }
    let modulus = MODULI[t as usize - 1];
    if t <= 16 && !has_no_small_divisor(modulus, t) {
        return Err(Error::InvalidState(format!(
            "tabulated modulus {modulus:#x} is reducible"
        )));
    }
    Ok(BinaryField { t, modulus })
}

/// Trial division by every polynomial of degree `1..=t/2`.
fn has_no_small_divisor(modulus: u64, t: u32) -> bool {
    for deg in 1..=t / 2 {
        for low in 0..(1u64 << deg) {
            let g = (1u64 << deg) | low;
            if poly_mod(modulus, g) == 0 {
                return false;
            }
        }
    }
    true
}

fn degree(a: u64) -> i32 {
    63 - a.leading_zeros() as i32
}

/// Remainder of carryless division over `GF(2)[x]`.
pub fn poly_mod(mut a: u64, b: u64) -> u64 {
    let db = degree(b);
    while a != 0 && degree(a) >= db {
        a ^= b << (degree(a) - db);
    }
    a
}

fn clmul(a: u64, b: u64) -> u64 {
    let mut acc = 0u64;
    let mut b = b;
    let mut shift = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a << shift;
        }
        b >>= 1;
        shift += 1;
    }
    acc
}

impl BinaryField {
    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Number of field elements, `2^t`.
    pub fn order(&self) -> u64 {
        1u64 << self.t
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        a ^ b
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        poly_mod(clmul(a, b), self.modulus)
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// `a^{2^t - 2}`; `None` for zero.
    pub fn inv(&self, a: u64) -> Option<u64> {
        if a == 0 {
            None
        } else {
            Some(self.pow(a, self.order() - 2))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashFamily {
    n: usize,
    p: usize,
    k: usize,
    field: BinaryField,
}

/// Smallest `t` with `2^t > max(n, p)`.
pub fn field_degree_for(n: usize, p: usize) -> u32 {
    let need = n.max(p) as u64;
    let mut t = 1;
    while (1u64 << t) <= need {
        t += 1;
    }
    t
}

pub fn make_hash_family(n: usize, p: usize, k: usize, field: BinaryField) -> Result<HashFamily> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "hash family needs n, k >= 1 (n={n}, k={k})"
        )));
    }
    if !p.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "range size {p} is not a power of 2"
        )));
    }
    if field.order() <= n.max(p) as u64 {
        return Err(Error::FieldSize {
            t: field.t,
            needed: n.max(p),
        });
    }
    Ok(HashFamily { n, p, k, field })
}

impl HashFamily {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn field(&self) -> &BinaryField {
        &self.field
    }

    /// `log2` of the family size, `t k`.
    pub fn size_log2(&self) -> u32 {
        self.field.t * self.k as u32
    }

    /// `2^{tk}`, or `None` if it does not fit in 128 bits.
    pub fn size(&self) -> Option<u128> {
        1u128
            .checked_shl(self.size_log2())
            .filter(|_| self.size_log2() < 128)
    }

    /// Polynomial coefficients `a_0, ..., a_{k-1}` of member `index`.
    pub fn coefficients(&self, index: u128) -> Vec<u64> {
        let mask = (self.field.order() - 1) as u128;
        (0..self.k)
            .map(|j| {
                let shift = self.field.t as usize * j;
                if shift >= 128 {
                    0
                } else {
                    ((index >> shift) & mask) as u64
                }
            })
            .collect()
    }

    /// Full value table `f(0), ..., f(n-1)` of member `index`.
    pub fn member(&self, index: u128) -> Vec<usize> {
        let coeffs = self.coefficients(index);
        let mask = (self.p - 1) as u64;
        (0..self.n)
            .map(|i| {
                // Horner from the top coefficient
                let x = i as u64;
                let mut acc = 0u64;
                for &a in coeffs.iter().rev() {
                    acc = self.field.add(self.field.mul(acc, x), a);
                }
                (acc & mask) as usize
            })
            .collect()
    }
}

/// Vectors in `{-1,+1}^n` from a 2-valued hash family; bit 0 maps to `+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KWiseVectorFamily {
    hash: HashFamily,
    requested_k: usize,
}

/// The uniformity parameter is capped at `n`: `n`-wise uniformity over
/// `n` coordinates is already full uniformity.
pub fn make_kwise_vectors(n: usize, k: usize) -> Result<KWiseVectorFamily> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "vector family needs n, k >= 1 (n={n}, k={k})"
        )));
    }
    let field = make_field(field_degree_for(n, 2))?;
    let hash = make_hash_family(n, 2, k.min(n), field)?;
    Ok(KWiseVectorFamily {
        hash,
        requested_k: k,
    })
}

impl KWiseVectorFamily {
    pub fn n(&self) -> usize {
        self.hash.n
    }

    /// Effective uniformity, `min(k, n)`.
    pub fn k(&self) -> usize {
        self.hash.k
    }

    pub fn requested_k(&self) -> usize {
        self.requested_k
    }

    pub fn hash(&self) -> &HashFamily {
        &self.hash
    }

    pub fn size_log2(&self) -> u32 {
        self.hash.size_log2()
    }

    pub fn size(&self) -> Option<u128> {
        self.hash.size()
    }

    pub fn member(&self, index: u128) -> Vec<i8> {
        self.hash
            .member(index)
            .into_iter()
            .map(|b| if b == 0 { 1 } else { -1 })
            .collect()
    }
}

/// `x_i = z^{f(i)}_i` with 0-based blocks.
pub fn mz_generate(f: &[usize], blocks: &[Vec<i8>]) -> Result<Vec<i8>> {
    let n = f.len();
    if let Some(bad) = blocks.iter().position(|b| b.len() != n) {
        return Err(Error::InvalidInput(format!(
            "block {bad} has length {}, expected {n}",
            blocks[bad].len()
        )));
    }
    f.iter()
        .enumerate()
        .map(|(i, &j)| {
            blocks.get(j).map(|b| b[i]).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "hash value {j} at coordinate {i} exceeds {} blocks",
                    blocks.len()
                ))
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeedIndex {
    pub hash_index: u128,
    pub block_indices: Vec<u128>,
}

/// The joint seed space `F x V^p`.
#[derive(Debug, Clone)]
pub struct SeedSpace {
    hash: HashFamily,
    vectors: KWiseVectorFamily,
    p: usize,
}

/// A deterministic list of seeds, with a flag when it is a proper subsample.
#[derive(Debug, Clone)]
pub struct SeedSchedule {
    pub seeds: Vec<SeedIndex>,
    pub subsampled: bool,
}

pub fn seed_space(hash: HashFamily, vectors: KWiseVectorFamily, p: usize) -> Result<SeedSpace> {
    if hash.p != p {
        return Err(Error::Mismatch(format!(
            "hash range {} differs from block count {p}",
            hash.p
        )));
    }
    if hash.n != vectors.n() {
        return Err(Error::Mismatch(format!(
            "hash domain {} differs from vector length {}",
            hash.n,
            vectors.n()
        )));
    }
    Ok(SeedSpace { hash, vectors, p })
}

impl SeedSpace {
    pub fn hash(&self) -> &HashFamily {
        &self.hash
    }

    pub fn vectors(&self) -> &KWiseVectorFamily {
        &self.vectors
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `log2 |F| + p log2 |V|`.
    pub fn cardinality_log2(&self) -> f64 {
        self.hash.size_log2() as f64 + self.p as f64 * self.vectors.size_log2() as f64
    }

    /// Exact `|F| |V|^p`, or `None` beyond 128 bits.
    pub fn cardinality(&self) -> Option<u128> {
        let mut acc = self.hash.size()?;
        let v = self.vectors.size()?;
        for _ in 0..self.p {
            acc = acc.checked_mul(v)?;
        }
        Some(acc)
    }

    /// Decodes a rank into a seed; the hash index is the most significant digit.
    pub fn seed_at(&self, mut rank: u128) -> SeedIndex {
        let v = self.vectors.size().expect("vector family fits 128 bits");
        let mut blocks = vec![0u128; self.p];
        for b in blocks.iter_mut().rev() {
            *b = rank % v;
            rank /= v;
        }
        SeedIndex {
            hash_index: rank,
            block_indices: blocks,
        }
    }

    /// Lexicographic iteration over the whole space.
    pub fn iter(&self) -> impl Iterator<Item = SeedIndex> + '_ {
        let card = self.cardinality().expect("seed space too large to iterate");
        (0..card).map(move |r| self.seed_at(r))
    }

    /// The full space when it fits the budget; otherwise `budget` seeds at ranks
    /// `floor(j |S| / budget)`, or a Kronecker sequence per coordinate when
    /// `|S|` overflows.
    pub fn schedule(&self, budget: u128) -> SeedSchedule {
        let budget = budget.max(1);
        match self.cardinality() {
            Some(card) if card <= budget => SeedSchedule {
                seeds: self.iter().collect(),
                subsampled: false,
            },
            Some(card) => SeedSchedule {
                seeds: (0..budget)
                    .map(|j| self.seed_at(mul_div(j, card, budget)))
                    .collect(),
                subsampled: true,
            },
            None => SeedSchedule {
                seeds: (0..budget).map(|j| self.kronecker_seed(j)).collect(),
                subsampled: true,
            },
        }
    }

    fn kronecker_seed(&self, j: u128) -> SeedIndex {
        const PRIMES: [f64; 8] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0];
        let coord = |slot: usize, size_log2: u32| -> u128 {
            let alpha = PRIMES[slot % PRIMES.len()].sqrt() + (slot / PRIMES.len()) as f64;
            let frac = ((j as f64 + 1.0) * alpha).fract();
            let size = 2f64.powi(size_log2 as i32);
            ((frac * size).floor() as u128).min(u128::MAX)
        };
        let hash_index = coord(0, self.hash.size_log2().min(127));
        let block_indices = (0..self.p)
            .map(|b| coord(b + 1, self.vectors.size_log2().min(127)))
            .collect();
        SeedIndex {
            hash_index,
            block_indices,
        }
    }

    /// The combined vector for a seed.
    pub fn generate(&self, seed: &SeedIndex) -> Result<Vec<i8>> {
        if seed.block_indices.len() != self.p {
            return Err(Error::InvalidInput(format!(
                "seed has {} blocks, expected {}",
                seed.block_indices.len(),
                self.p
            )));
        }
        let f = self.hash.member(seed.hash_index);
        let blocks: Vec<Vec<i8>> = seed
            .block_indices
            .iter()
            .map(|&b| self.vectors.member(b))
            .collect();
        mz_generate(&f, &blocks)
    }
}

/// `floor(a b / c)` without overflow for `a < c`.
fn mul_div(a: u128, b: u128, c: u128) -> u128 {
    match a.checked_mul(b) {
        Some(ab) => ab / c,
        None => {
            let q = b / c;
            let r = b % c;
            a * q + mul_div_small(a, r, c)
        }
    }
}

fn mul_div_small(a: u128, r: u128, c: u128) -> u128 {
    // a < c and r < c: shift-and-add, keeping the product as quotient and remainder mod c
    let (mut hi, mut lo) = (0u128, 0u128);
    for bit in (0..128).rev() {
        hi *= 2;
        if lo >= c - lo {
            lo -= c - lo;
            hi += 1;
        } else {
            lo *= 2;
        }
        if (a >> bit) & 1 == 1 {
            if lo >= c - r {
                lo -= c - r;
                hi += 1;
            } else {
                lo += r;
            }
        }
    }
    hi
}
