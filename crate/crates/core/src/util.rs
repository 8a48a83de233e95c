//! Small deterministic numeric helpers used across the crate.

/// Fixed-order pairwise summation.
///
/// Reductions in this crate must be reproducible bit-for-bit across runs, so
/// every integral and inner product funnels through this one routine. Pairwise
/// blocking also keeps the rounding error at O(log n) ulps, which the exact
/// norm-monotonicity checks rely on.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Dot product with pairwise accumulation.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    const BLOCK: usize = 32;
    if a.len() <= BLOCK {
        let mut acc = 0.0;
        for i in 0..a.len() {
            acc += a[i] * b[i];
        }
        return acc;
    }
    let mid = a.len() / 2;
    dot(&a[..mid], &b[..mid]) + dot(&a[mid..], &b[mid..])
}

/// Max-norm of a slice.
pub fn max_abs(values: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for &v in values {
        let a = v.abs();
        if a > m {
            m = a;
        }
    }
    m
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    assert_eq!(x.len(), y.len());
    for i in 0..x.len() {
        y[i] += alpha * x[i];
    }
}

/// FNV-1a 64-bit hash. Used for config hashes and checkpoint checksums; the
/// value must be stable across platforms and releases, so we do not rely on
/// `std::hash`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Two-dimensional Halton points in [0,1)^d for quasi-random sampling covers.
pub fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index + 1;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_ones() {
        let v = vec![1.0; 1000];
        assert_eq!(pairwise_sum(&v), 1000.0);
    }

    #[test]
    fn fnv_is_stable() {
        // Reference value for "hello" from the FNV-1a specification.
        assert_eq!(fnv1a64(b"hello"), 0xa430d84680aabd0b);
    }

    #[test]
    fn halton_fills_unit_interval() {
        let pts: Vec<f64> = (0..64).map(|i| halton(i, 2)).collect();
        assert!(pts.iter().all(|&p| (0.0..1.0).contains(&p)));
        // low-discrepancy: first few points are the usual van der Corput sequence
        assert!((pts[0] - 0.5).abs() < 1e-15);
        assert!((pts[1] - 0.25).abs() < 1e-15);
    }
}
