//! Support enumeration with a combinatorial cap.
//!
//! Exhaustive lexicographic enumeration when the subset count fits the cap,
//! deterministic seeded sampling otherwise. Samplers report `exact = false`
//! so downstream certification knows the extremum is only an estimate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// C(m, k), saturating at `u128::MAX / 2` to keep comparisons safe.
pub fn binomial(m: usize, k: usize) -> u128 {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.saturating_mul((m - i) as u128) / (i as u128 + 1);
        if c > u128::MAX / 2 {
            return u128::MAX / 2;
        }
    }
    c
}

/// Advances `support` to the next k-combination of {0..m} in lexicographic
/// order. Returns false when exhausted.
fn next_combination(support: &mut [usize], m: usize) -> bool {
    let k = support.len();
    let mut i = k;
    loop {
        if i == 0 {
            return false;
        }
        i -= 1;
        if support[i] != i + m - k {
            support[i] += 1;
            for j in i + 1..k {
                support[j] = support[j - 1] + 1;
            }
            return true;
        }
    }
}

/// Draws a sorted random k-subset of {0..m}.
fn sample_support(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Vec<usize> {
    let mut support = rand::seq::index::sample(rng, m, k).into_vec();
    support.sort_unstable();
    support
}

/// Visits supports of size `k` in {0..m}: all of them when C(m, k) <= cap
/// (returns true), otherwise `cap` seeded random draws (returns false).
pub fn for_each_support<F: FnMut(&[usize])>(m: usize, k: usize, cap: usize, mut f: F) -> bool {
    if k == 0 {
        f(&[]);
        return true;
    }
    if k > m {
        return true;
    }
    if binomial(m, k) <= cap as u128 {
        let mut support: Vec<usize> = (0..k).collect();
        loop {
            f(&support);
            if !next_combination(&mut support, m) {
                return true;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(
        0x5157_u64 ^ (m as u64) << 32 ^ (k as u64) << 16 ^ cap as u64,
    );
    for _ in 0..cap {
        f(&sample_support(&mut rng, m, k));
    }
    false
}

/// Visits disjoint support pairs (|I1| = m1, |I2| = m2): exhaustively when
/// the pair count fits the cap, else by seeded sampling.
pub fn for_each_disjoint_pair<F: FnMut(&[usize], &[usize])>(
    m: usize,
    m1: usize,
    m2: usize,
    cap: usize,
    mut f: F,
) -> bool {
    if m1 + m2 > m {
        return true;
    }
    let total = binomial(m, m1).saturating_mul(binomial(m - m1, m2));
    if total <= cap as u128 {
        for_each_support(m, m1, usize::MAX, |i1| {
            let complement: Vec<usize> = (0..m).filter(|j| !i1.contains(j)).collect();
            for_each_support(complement.len(), m2, usize::MAX, |rel| {
                let i2: Vec<usize> = rel.iter().map(|&j| complement[j]).collect();
                f(i1, &i2);
            });
        });
        return true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(
        0xd15c_u64 ^ (m as u64) << 40 ^ (m1 as u64) << 24 ^ (m2 as u64) << 8,
    );
    for _ in 0..cap {
        let i1 = sample_support(&mut rng, m, m1);
        let complement: Vec<usize> = (0..m).filter(|j| !i1.contains(j)).collect();
        let rel = sample_support(&mut rng, complement.len(), m2);
        let i2: Vec<usize> = rel.iter().map(|&j| complement[j]).collect();
        f(&i1, &i2);
    }
    false
}
