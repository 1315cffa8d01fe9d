//! Sieved arithmetic tables and elementary arithmetic functions.
//!
//! The sieve records the smallest prime factor of every integer up to the
//! bound, so factoring any tabled n costs O(log n). Tables are immutable
//! after construction and safe to share across threads.

use crate::error::{Error, Result};

/// Hard ceiling on table size; larger requests are refused rather than
/// silently swapped.
pub const MAX_TABLE_BOUND: u64 = 200_000_000;

#[derive(Debug)]
pub struct PrimeTable {
    bound: u64,
    primes: Vec<u32>,
    /// smallest_prime_factor[n] = spf(n) for 2 <= n <= bound; entries 0, 1
    /// are unused and left as 0.
    smallest_prime_factor: Vec<u32>,
}

/// Build the table for 2 <= x <= 2e8 with a linear (one pass per integer)
/// smallest-prime-factor sieve.
pub fn build_prime_table(x: u64) -> Result<PrimeTable> {
    if x < 2 {
        return Err(Error::Domain(format!("table bound {x} < 2")));
    }
    if x > MAX_TABLE_BOUND {
        return Err(Error::Resource(format!(
            "table bound {x} exceeds the {MAX_TABLE_BOUND} ceiling"
        )));
    }
    let n = x as usize;
    let mut spf = vec![0u32; n + 1];
    let mut primes: Vec<u32> = Vec::new();
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        let si = spf[i] as usize;
        for &p in &primes {
            let p = p as usize;
            if p > si || p * i > n {
                break;
            }
            spf[p * i] = p as u32;
        }
    }
    Ok(PrimeTable {
        bound: x,
        primes,
        smallest_prime_factor: spf,
    })
}

impl PrimeTable {
    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub fn prime_count(&self) -> usize {
        self.primes.len()
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && n <= self.bound && self.smallest_prime_factor[n as usize] as u64 == n
    }

    pub fn spf(&self, n: u64) -> u64 {
        debug_assert!(2 <= n && n <= self.bound);
        self.smallest_prime_factor[n as usize] as u64
    }

    /// Prime-power factorization of n <= bound, ascending in p.
    pub fn factorize(&self, n: u64) -> Vec<(u64, u32)> {
        debug_assert!(1 <= n && n <= self.bound);
        let mut out = Vec::new();
        let mut m = n;
        while m > 1 {
            let p = self.spf(m);
            let mut k = 0u32;
            while m % p == 0 {
                m /= p;
                k += 1;
            }
            out.push((p, k));
        }
        out
    }

    /// All divisors of n, in no particular order.
    pub fn divisors(&self, n: u64) -> Vec<u64> {
        let mut out = vec![1u64];
        for (p, k) in self.factorize(n) {
            let prev = out.len();
            let mut pw = 1u64;
            for _ in 0..k {
                pw *= p;
                for i in 0..prev {
                    out.push(out[i] * pw);
                }
            }
        }
        out
    }

    /// Index range into `primes` covering the interval (lo, hi].
    pub fn prime_index_range(&self, lo: u64, hi: u64) -> std::ops::Range<usize> {
        let start = self.primes.partition_point(|&p| p as u64 <= lo);
        let end = self.primes.partition_point(|&p| p as u64 <= hi);
        start..end
    }

    /// Primes in (lo, hi] as a slice of the sieved list.
    pub fn primes_in(&self, lo: u64, hi: u64) -> &[u32] {
        &self.primes[self.prime_index_range(lo, hi)]
    }
}

/// Sum of reciprocals of primes in (d, x], accumulated in ascending-prime
/// order so repeated runs agree bit for bit.
pub fn prime_reciprocal_sum(table: &PrimeTable, d: u64, x: u64) -> Result<f64> {
    if !(2 <= d && d <= x && x <= table.bound) {
        return Err(Error::Domain(format!(
            "reciprocal sum range requires 2 <= D <= x <= bound, got D={d}, x={x}, bound={}",
            table.bound
        )));
    }
    let mut sum = 0.0;
    for &p in table.primes_in(d, x) {
        sum += 1.0 / p as f64;
    }
    Ok(sum)
}

/// Tabled values of the classical arithmetic functions.
#[derive(Debug)]
pub struct ArithValues {
    mobius: Vec<i8>,
    von_mangoldt: Vec<f64>,
    euler_phi: Vec<u32>,
    omega: Vec<u8>,
}

/// Sieve out mu, Lambda, phi and omega for every n up to the table bound.
pub fn arith_values(table: &PrimeTable) -> ArithValues {
    let n = table.bound as usize;
    let mut mobius = vec![0i8; n + 1];
    let mut von_mangoldt = vec![0f64; n + 1];
    let mut euler_phi = vec![0u32; n + 1];
    let mut omega = vec![0u8; n + 1];
    mobius[1] = 1;
    euler_phi[1] = 1;
    for i in 2..=n {
        let p = table.spf(i as u64);
        let m = i as u64 / p;
        if m % p == 0 {
            mobius[i] = 0;
            euler_phi[i] = euler_phi[m as usize] * p as u32;
            omega[i] = omega[m as usize];
        } else {
            mobius[i] = -mobius[m as usize];
            euler_phi[i] = euler_phi[m as usize] * (p as u32 - 1);
            omega[i] = omega[m as usize] + 1;
        }
    }
    // Lambda(p^k) = log p; prime powers enumerated directly.
    for &p in table.primes() {
        let lp = (p as f64).ln();
        let mut q = p as u64;
        loop {
            von_mangoldt[q as usize] = lp;
            match q.checked_mul(p as u64) {
                Some(next) if next <= table.bound => q = next,
                _ => break,
            }
        }
    }
    ArithValues {
        mobius,
        von_mangoldt,
        euler_phi,
        omega,
    }
}

impl ArithValues {
    pub fn mobius(&self, n: u64) -> i64 {
        self.mobius[n as usize] as i64
    }

    pub fn von_mangoldt(&self, n: u64) -> f64 {
        self.von_mangoldt[n as usize]
    }

    pub fn euler_phi(&self, n: u64) -> u64 {
        self.euler_phi[n as usize] as u64
    }

    pub fn omega(&self, n: u64) -> u32 {
        self.omega[n as usize] as u32
    }
}

/// Euler phi of a single n without a table (trial division).
pub fn euler_phi_u64(n: u64) -> u64 {
    let mut n = n;
    let mut phi = 1u64;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut pk = 1u64;
            n /= p;
            while n % p == 0 {
                pk *= p;
                n /= p;
            }
            phi *= pk * (p - 1);
        }
        p += 1;
    }
    if n > 1 {
        phi *= n - 1;
    }
    phi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_primes(x: u64) -> Vec<u64> {
        (2..=x)
            .filter(|&n| (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0))
            .collect()
    }

    #[test]
    fn small_tables_match_trial_division() {
        let table = build_prime_table(10).unwrap();
        let listed: Vec<u64> = table.primes().iter().map(|&p| p as u64).collect();
        assert_eq!(listed, vec![2, 3, 5, 7]);
        assert_eq!(listed, trial_division_primes(10));

        let table = build_prime_table(2).unwrap();
        assert_eq!(table.primes(), &[2]);
    }

    #[test]
    fn prime_count_to_100() {
        let table = build_prime_table(100).unwrap();
        assert_eq!(table.prime_count(), 25);
        assert_eq!(
            table.prime_count(),
            trial_division_primes(100).len()
        );
    }

    #[test]
    fn bounds_are_guarded() {
        assert!(matches!(build_prime_table(1), Err(Error::Domain(_))));
        assert!(matches!(
            build_prime_table(MAX_TABLE_BOUND + 1),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn spf_divides_and_is_prime() {
        let table = build_prime_table(5000).unwrap();
        for n in 2..=5000u64 {
            let p = table.spf(n);
            assert_eq!(n % p, 0, "spf({n}) = {p} does not divide");
            assert!(table.is_prime(p));
            // No smaller prime divides n.
            for &q in table.primes() {
                let q = q as u64;
                if q >= p {
                    break;
                }
                assert_ne!(n % q, 0);
            }
        }
    }

    #[test]
    fn reciprocal_sum_examples() {
        let table = build_prime_table(100).unwrap();
        let s = prime_reciprocal_sum(&table, 2, 10).unwrap();
        let expected = 1.0 / 3.0 + 1.0 / 5.0 + 1.0 / 7.0;
        assert!((s - expected).abs() < 1e-15);
        assert!((s - 0.676190).abs() < 1e-6);

        assert_eq!(prime_reciprocal_sum(&table, 7, 7).unwrap(), 0.0);
        assert!(prime_reciprocal_sum(&table, 1, 10).is_err());
        assert!(prime_reciprocal_sum(&table, 2, 101).is_err());
    }

    // Independent oracle: accumulate 1/p in integer arithmetic over a
    // common denominator (exact rational sum), then round once.
    #[test]
    fn reciprocal_sum_matches_rational_oracle() {
        let table = build_prime_table(100).unwrap();
        let ps: Vec<u128> = table.primes_in(2, 100).iter().map(|&p| p as u128).collect();
        let denom: u128 = ps.iter().product();
        let numer: u128 = ps.iter().map(|&p| denom / p).sum();
        let exact = numer as f64 / denom as f64;
        let s = prime_reciprocal_sum(&table, 2, 100).unwrap();
        assert!((s - exact).abs() < 1e-12, "{s} vs {exact}");
    }

    #[test]
    fn reciprocal_sum_is_additive_over_adjacent_ranges() {
        let table = build_prime_table(10_000).unwrap();
        for &(d, y, x) in &[(2u64, 50u64, 300u64), (3, 1000, 10_000), (7, 7, 9973)] {
            let whole = prime_reciprocal_sum(&table, d, x).unwrap();
            let left = prime_reciprocal_sum(&table, d, y).unwrap();
            let right = prime_reciprocal_sum(&table, y, x).unwrap();
            assert!((whole - (left + right)).abs() < 1e-12);
        }
    }

    #[test]
    fn arith_values_examples() {
        let table = build_prime_table(100).unwrap();
        let vals = arith_values(&table);
        assert_eq!(vals.mobius(12), 0);
        assert_eq!(vals.mobius(30), -1);
        assert!((vals.von_mangoldt(8) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(vals.von_mangoldt(6), 0.0);
        let sum: i64 = (1..=10).map(|n| vals.mobius(n)).sum();
        assert_eq!(sum, -1);
        assert_eq!(vals.euler_phi(1), 1);
        assert_eq!(vals.euler_phi(12), 4);
        assert_eq!(vals.omega(60), 3);
    }

    #[test]
    fn mobius_zero_iff_square_factor() {
        let table = build_prime_table(2000).unwrap();
        let vals = arith_values(&table);
        for n in 1..=2000u64 {
            let has_square = table
                .factorize(n)
                .iter()
                .any(|&(_, k)| k >= 2);
            assert_eq!(vals.mobius(n) == 0, has_square, "n = {n}");
        }
    }

    #[test]
    fn mangoldt_divisor_sum_is_log() {
        let table = build_prime_table(5000).unwrap();
        let vals = arith_values(&table);
        for n in 2..=5000u64 {
            let s: f64 = table.divisors(n).iter().map(|&d| vals.von_mangoldt(d)).sum();
            let rel = (s - (n as f64).ln()).abs() / (n as f64).ln();
            assert!(rel < 1e-12, "n = {n}: {s}");
        }
    }

    #[test]
    fn mobius_divisor_sum_detects_one() {
        let table = build_prime_table(5000).unwrap();
        let vals = arith_values(&table);
        for n in 1..=5000u64 {
            let s: i64 = table.divisors(n).iter().map(|&d| vals.mobius(d)).sum();
            assert_eq!(s, if n == 1 { 1 } else { 0 }, "n = {n}");
        }
    }

    #[test]
    fn phi_is_multiplicative_on_coprime_pairs() {
        let table = build_prime_table(10_000).unwrap();
        let vals = arith_values(&table);
        for a in 1..=80u64 {
            for b in 1..=80u64 {
                if num_integer::gcd(a, b) == 1 {
                    assert_eq!(vals.euler_phi(a * b), vals.euler_phi(a) * vals.euler_phi(b));
                }
            }
        }
    }

    #[test]
    fn mertens_stays_in_trivial_envelope() {
        let table = build_prime_table(20_000).unwrap();
        let vals = arith_values(&table);
        let mut m = 0i64;
        for n in 1..=20_000u64 {
            m += vals.mobius(n);
            assert!(m.unsigned_abs() <= n);
        }
    }

    #[test]
    fn phi_helper_agrees_with_table() {
        let table = build_prime_table(3000).unwrap();
        let vals = arith_values(&table);
        for n in 1..=3000u64 {
            assert_eq!(euler_phi_u64(n), vals.euler_phi(n));
        }
    }
}
