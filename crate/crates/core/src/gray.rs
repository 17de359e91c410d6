//! Binary reflected Gray code. Consecutive codes differ in exactly one bit,
//! which lets the spectrum enumeration move from one random walk to the next
//! by flipping a single step.

/// Gray code of `m`.
#[inline]
pub fn gray(m: u64) -> u64 {
    m ^ (m >> 1)
}

/// Inverse of [`gray`].
pub fn gray_rank(mut code: u64) -> u64 {
    let mut m = 0;
    while code != 0 {
        m ^= code;
        code >>= 1;
    }
    m
}

/// Bit flipped between `gray(m - 1)` and `gray(m)`; `m` must be nonzero.
#[inline]
pub fn flipped_bit(m: u64) -> u32 {
    debug_assert!(m != 0);
    m.trailing_zeros()
}
