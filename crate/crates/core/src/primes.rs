//! Prime enumeration and small-integer factoring.

const SEGMENT_BYTES: usize = 1 << 18;

/// Deterministic Miller-Rabin for the full `u64` range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Primes `<= limit` from a plain sieve of Eratosthenes; intended for small limits.
fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Integer square root.
pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Calls `visit` on every prime `<= limit` in increasing order.
///
/// Segmented odd-only sieve; memory is `O(sqrt(limit))`.
pub fn for_each_prime<F: FnMut(u64)>(limit: u64, mut visit: F) {
    if limit < 2 {
        return;
    }
    visit(2);
    let base: Vec<u64> = small_primes(isqrt(limit)).into_iter().skip(1).collect();
    // segment covers odd numbers lo, lo+2, ..., lo + 2*(len-1)
    let mut flags = vec![false; SEGMENT_BYTES];
    let mut lo = 3u64;
    while lo <= limit {
        let len = (((limit - lo) / 2 + 1) as usize).min(SEGMENT_BYTES);
        let hi = lo + 2 * (len as u64 - 1);
        flags[..len].iter_mut().for_each(|f| *f = false);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let mut start = p * p;
            if start < lo {
                start = lo.div_ceil(p) * p;
                if start % 2 == 0 {
                    start += p;
                }
            }
            let mut idx = ((start - lo) / 2) as usize;
            while idx < len {
                flags[idx] = true;
                idx += p as usize;
            }
        }
        for (i, &c) in flags[..len].iter().enumerate() {
            if !c {
                visit(lo + 2 * i as u64);
            }
        }
        lo = hi + 2;
    }
}

/// All primes `<= limit`.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for_each_prime(limit, |p| out.push(p));
    out
}

/// Number of primes `<= limit`.
pub fn prime_pi(limit: u64) -> u64 {
    let mut count = 0;
    for_each_prime(limit, |_| count += 1);
    count
}

/// Distinct prime divisors of `n` in increasing order, by trial division.
pub fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let mut push = |p: u64, n: &mut u64| {
        if (*n).is_multiple_of(p) {
            out.push(p);
            while (*n).is_multiple_of(p) {
                *n /= p;
            }
        }
    };
    push(2, &mut n);
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        push(d, &mut n);
        d += 2;
    }
    if n > 1 {
        out.push(n);
    }
    out
}
