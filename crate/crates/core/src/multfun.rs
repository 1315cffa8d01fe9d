//! Multiplicative functions defined by a rule on prime powers, the three
//! multiplicativity modes, character twists, and the convolution
//! splittings used by the progression-sum estimates.
//!
//! A function carries a closure (p, k) -> g(p^k) rather than a dense
//! table, so functions supported on primes up to the full sieve range cost
//! nothing to represent. Completely multiplicative mode forces
//! g(p^k) = g(p)^k and exponential mode g(p^k) = g(p)^k / k!.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::arith::PrimeTable;
use crate::dirichlet::Character;
use crate::error::{Error, Result};
use crate::rng::keyed_unit_disc;

const UNIT_DISC_SLACK: f64 = 1e-12;
/// Divisor-sum verification bound applied inside every split constructor.
const SPLIT_VERIFY_BOUND: u64 = 10_000;
const MAX_FACTORIAL: u32 = 170;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    General,
    Completely,
    Exponentially,
}

type Rule = Arc<dyn Fn(u64, u32) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub struct MultiplicativeFunction {
    mode: Mode,
    rule: Rule,
    unit_disc: bool,
    label: String,
}

impl fmt::Debug for MultiplicativeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplicativeFunction")
            .field("mode", &self.mode)
            .field("unit_disc", &self.unit_disc)
            .field("label", &self.label)
            .finish()
    }
}

fn factorial_f64(k: u32) -> Result<f64> {
    if k > MAX_FACTORIAL {
        return Err(Error::Domain(format!(
            "factorial {k}! exceeds binary-64 range (cap {MAX_FACTORIAL})"
        )));
    }
    let mut acc = 1.0f64;
    for i in 2..=k {
        acc *= i as f64;
    }
    Ok(acc)
}

impl MultiplicativeFunction {
    pub fn general(
        label: impl Into<String>,
        unit_disc: bool,
        rule: impl Fn(u64, u32) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        MultiplicativeFunction {
            mode: Mode::General,
            rule: Arc::new(rule),
            unit_disc,
            label: label.into(),
        }
    }

    pub fn completely(
        label: impl Into<String>,
        unit_disc: bool,
        prime_rule: impl Fn(u64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        MultiplicativeFunction {
            mode: Mode::Completely,
            rule: Arc::new(move |p, _| prime_rule(p)),
            unit_disc,
            label: label.into(),
        }
    }

    pub fn exponentially(
        label: impl Into<String>,
        unit_disc: bool,
        prime_rule: impl Fn(u64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        MultiplicativeFunction {
            mode: Mode::Exponentially,
            rule: Arc::new(move |p, _| prime_rule(p)),
            unit_disc,
            label: label.into(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_unit_disc(&self) -> bool {
        self.unit_disc
    }

    /// g(p^k) under the mode discipline; checks the unit-disc contract.
    pub fn prime_power_value(&self, p: u64, k: u32) -> Result<Complex64> {
        debug_assert!(k >= 1);
        let v = match self.mode {
            Mode::General => (self.rule)(p, k),
            Mode::Completely => (self.rule)(p, 1).powu(k),
            Mode::Exponentially => (self.rule)(p, 1).powu(k) / factorial_f64(k)?,
        };
        if self.unit_disc && v.norm() > 1.0 + UNIT_DISC_SLACK {
            return Err(Error::Contract(format!(
                "unit-disc function `{}` produced |g({p}^{k})| = {}",
                self.label,
                v.norm()
            )));
        }
        Ok(v)
    }

    /// Value on the prime itself.
    pub fn prime_value(&self, p: u64) -> Result<Complex64> {
        self.prime_power_value(p, 1)
    }

    /// g(n) as the product of prime-power values of the factorization.
    pub fn evaluate(&self, n: u64, table: &PrimeTable) -> Result<Complex64> {
        if n < 1 || n > table.bound() {
            return Err(Error::Domain(format!(
                "evaluate({n}) outside table range [1, {}]",
                table.bound()
            )));
        }
        let mut acc = Complex64::new(1.0, 0.0);
        for (p, k) in table.factorize(n) {
            acc *= self.prime_power_value(p, k)?;
        }
        Ok(acc)
    }

    /// Values g(1..=x) via smallest-prime-factor recursion; entry 0 unused.
    pub fn batch_evaluate(&self, x: u64, table: &PrimeTable) -> Result<Vec<Complex64>> {
        if x > table.bound() {
            return Err(Error::Domain(format!(
                "batch bound {x} exceeds table bound {}",
                table.bound()
            )));
        }
        let mut vals = vec![Complex64::new(0.0, 0.0); x as usize + 1];
        if x == 0 {
            return Ok(vals);
        }
        vals[1] = Complex64::new(1.0, 0.0);
        for n in 2..=x {
            let p = table.spf(n);
            let mut m = n;
            let mut k = 0u32;
            while m % p == 0 {
                m /= p;
                k += 1;
            }
            let ppv = self.prime_power_value(p, k)?;
            vals[n as usize] = vals[m as usize] * ppv;
        }
        Ok(vals)
    }

    /// Twist by a character and a vertical shift: n -> g(n) chi(n) n^{it},
    /// staying in the same multiplicativity mode.
    pub fn twist(&self, chi: &Character, t: f64) -> MultiplicativeFunction {
        let base = self.clone();
        let chi = chi.clone();
        let label = format!("{}*chi[{:?}]*n^({}i)", self.label, chi.exponents(), t);
        let mode = self.mode;
        let unit_disc = self.unit_disc;
        let rule: Rule = Arc::new(move |p, k| {
            let g = match mode {
                Mode::General => (base.rule)(p, k),
                // in the power modes the stored rule is the prime value
                _ => (base.rule)(p, 1),
            };
            let chi_val = match mode {
                Mode::General => chi_power(&chi, p, k),
                _ => chi.value(p),
            };
            let phase = match mode {
                Mode::General => Complex64::from_polar(1.0, t * k as f64 * (p as f64).ln()),
                _ => Complex64::from_polar(1.0, t * (p as f64).ln()),
            };
            g * chi_val * phase
        });
        MultiplicativeFunction {
            mode,
            rule,
            unit_disc,
            label,
        }
    }
}

/// chi(p)^k through exact angle arithmetic, avoiding overflow in p^k.
fn chi_power(chi: &Character, p: u64, k: u32) -> Complex64 {
    match chi.value_angle(p) {
        None => Complex64::new(0.0, 0.0),
        Some(a) => {
            let num = (a.numerator as u128 * k as u128 % a.denominator as u128) as u64;
            crate::dirichlet::Angle {
                numerator: num,
                denominator: a.denominator,
            }
            .to_complex()
        }
    }
}

/// Dirichlet convolution at a point via the divisor sum.
pub fn convolve_at(
    left: &MultiplicativeFunction,
    right: &MultiplicativeFunction,
    n: u64,
    table: &PrimeTable,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for d in table.divisors(n) {
        acc += left.evaluate(d, table)? * right.evaluate(n / d, table)?;
    }
    Ok(acc)
}

/// g = left * right with the identity checked on construction.
#[derive(Debug, Clone)]
pub struct ConvolutionPair {
    pub left: MultiplicativeFunction,
    pub right: MultiplicativeFunction,
    pub target: MultiplicativeFunction,
}

impl ConvolutionPair {
    fn verified(self, table: &PrimeTable) -> Result<Self> {
        let bound = SPLIT_VERIFY_BOUND.min(table.bound());
        let l = self.left.batch_evaluate(bound, table)?;
        let r = self.right.batch_evaluate(bound, table)?;
        let g = self.target.batch_evaluate(bound, table)?;
        for n in 1..=bound {
            let mut acc = Complex64::new(0.0, 0.0);
            for d in table.divisors(n) {
                acc += l[d as usize] * r[(n / d) as usize];
            }
            if (acc - g[n as usize]).norm() > 1e-12 {
                return Err(Error::Contract(format!(
                    "convolution split failed verification at n = {n}: {} vs {}",
                    acc, g[n as usize]
                )));
            }
        }
        Ok(self)
    }
}

/// Split g = f * h with f carrying the prime powers above the cutoff and h
/// the powers of primes at or below it.
pub fn split_head_tail(
    g: &MultiplicativeFunction,
    cutoff: f64,
    table: &PrimeTable,
) -> Result<ConvolutionPair> {
    if cutoff < 2.0 {
        return Err(Error::Domain(format!("cutoff {cutoff} < 2")));
    }
    let gf = g.clone();
    let rough = MultiplicativeFunction::general(
        format!("{}|p>{}", g.label(), cutoff),
        g.is_unit_disc(),
        move |p, k| {
            if (p as f64) > cutoff {
                gf.prime_power_value(p, k).unwrap_or_default()
            } else {
                Complex64::new(0.0, 0.0)
            }
        },
    );
    let gh = g.clone();
    let smooth = MultiplicativeFunction::general(
        format!("{}|p<={}", g.label(), cutoff),
        g.is_unit_disc(),
        move |p, k| {
            if (p as f64) <= cutoff {
                gh.prime_power_value(p, k).unwrap_or_default()
            } else {
                Complex64::new(0.0, 0.0)
            }
        },
    );
    ConvolutionPair {
        left: rough,
        right: smooth,
        target: g.clone(),
    }
    .verified(table)
}

/// Split g = l * r with l completely multiplicative from the prime values
/// of g; then r(p) = 0 and r(p^k) = g(p^k) - g(p) g(p^{k-1}).
pub fn split_completely_multiplicative(
    g: &MultiplicativeFunction,
    table: &PrimeTable,
) -> Result<ConvolutionPair> {
    let gl = g.clone();
    let power_part = MultiplicativeFunction::completely(
        format!("{}-powers", g.label()),
        g.is_unit_disc(),
        move |p| gl.prime_value(p).unwrap_or_default(),
    );
    let gr = g.clone();
    let remainder = MultiplicativeFunction::general(
        format!("{}-power-defect", g.label()),
        false,
        move |p, k| {
            let tail = if k == 1 {
                Complex64::new(1.0, 0.0)
            } else {
                gr.prime_power_value(p, k - 1).unwrap_or_default()
            };
            let head = gr.prime_power_value(p, k).unwrap_or_default();
            head - gr.prime_value(p).unwrap_or_default() * tail
        },
    );
    ConvolutionPair {
        left: power_part,
        right: remainder,
        target: g.clone(),
    }
    .verified(table)
}

/// Split g = l * r with l exponentially multiplicative; requires g real in
/// [0, 1] on the primes. Then r(p) = 0, |r(p^2)| <= 1 and |r(p^k)| <= e.
pub fn split_exponential(
    g: &MultiplicativeFunction,
    table: &PrimeTable,
) -> Result<ConvolutionPair> {
    // The defect bounds need g real in [0,1] on every prime power, not
    // just the primes; check as far as the verification bound reaches.
    let check_to = SPLIT_VERIFY_BOUND.min(table.bound());
    for &p in table.primes_in(1, check_to) {
        let p = p as u64;
        let mut q = p;
        let mut k = 1u32;
        while q <= check_to {
            let v = g.prime_power_value(p, k)?;
            if v.im.abs() > 1e-12 || v.re < -1e-12 || v.re > 1.0 + 1e-12 {
                return Err(Error::Hypothesis(format!(
                    "exponential split requires g in [0,1]; g({p}^{k}) = {v}"
                )));
            }
            q = match q.checked_mul(p) {
                Some(next) => next,
                None => break,
            };
            k += 1;
        }
    }
    let gl = g.clone();
    let exp_part = MultiplicativeFunction::exponentially(
        format!("{}-exp", g.label()),
        g.is_unit_disc(),
        move |p| gl.prime_value(p).unwrap_or_default(),
    );
    let gr = g.clone();
    let remainder = MultiplicativeFunction::general(
        format!("{}-exp-defect", g.label()),
        false,
        move |p, k| exponential_defect(&gr, p, k),
    );
    ConvolutionPair {
        left: exp_part,
        right: remainder,
        target: g.clone(),
    }
    .verified(table)
}

/// r(p^k) = sum_{j=0}^{k} (1/j!) (-g(p))^j g(p^{k-j}).
fn exponential_defect(g: &MultiplicativeFunction, p: u64, k: u32) -> Complex64 {
    let gp = match g.prime_value(p) {
        Ok(v) => v,
        Err(_) => return Complex64::new(0.0, 0.0),
    };
    let mut acc = Complex64::new(0.0, 0.0);
    let mut neg_pow = Complex64::new(1.0, 0.0);
    let mut fact = 1.0f64;
    for j in 0..=k {
        if j > 0 {
            neg_pow *= -gp;
            fact *= j as f64;
        }
        let tail = if k == j {
            Complex64::new(1.0, 0.0)
        } else {
            g.prime_power_value(p, k - j).unwrap_or_default()
        };
        acc += neg_pow / fact * tail;
    }
    acc
}

/// Named built-ins addressable from the CLI.
///
/// Accepted names: `one`, `mobius`, `mobius-tail(D)`, `unit-tail(D)`,
/// `random-unitdisc(seed)`.
pub fn builtin(name: &str) -> Result<MultiplicativeFunction> {
    let trimmed = name.trim();
    if trimmed == "one" {
        return Ok(MultiplicativeFunction::completely("one", true, |_| {
            Complex64::new(1.0, 0.0)
        }));
    }
    if trimmed == "mobius" {
        return Ok(MultiplicativeFunction::general("mobius", true, |_, k| {
            if k == 1 {
                Complex64::new(-1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }));
    }
    if let Some(arg) = parse_call(trimmed, "mobius-tail") {
        let d: u64 = arg
            .parse()
            .map_err(|_| Error::Config(format!("bad argument in `{trimmed}`")))?;
        return Ok(mobius_tail(d));
    }
    if let Some(arg) = parse_call(trimmed, "unit-tail") {
        let d: u64 = arg
            .parse()
            .map_err(|_| Error::Config(format!("bad argument in `{trimmed}`")))?;
        return Ok(unit_tail(d));
    }
    if let Some(arg) = parse_call(trimmed, "random-unitdisc") {
        let seed: u64 = arg
            .parse()
            .map_err(|_| Error::Config(format!("bad argument in `{trimmed}`")))?;
        return Ok(random_unit_disc(seed));
    }
    Err(Error::Config(format!("unknown function name `{name}`")))
}

fn parse_call<'a>(s: &'a str, head: &str) -> Option<&'a str> {
    s.strip_prefix(head)?
        .strip_prefix('(')?
        .strip_suffix(')')
}

/// mu(n) restricted to integers free of prime factors <= D.
pub fn mobius_tail(d: u64) -> MultiplicativeFunction {
    MultiplicativeFunction::general(format!("mobius-tail({d})"), true, move |p, k| {
        if p <= d || k >= 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(-1.0, 0.0)
        }
    })
}

/// Indicator of integers all of whose prime factors exceed D.
pub fn unit_tail(d: u64) -> MultiplicativeFunction {
    MultiplicativeFunction::completely(format!("unit-tail({d})"), true, move |p| {
        if p <= d {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// Unit-disc values drawn from the keyed deterministic stream; the value at
/// (p, k) depends only on (seed, p, k).
pub fn random_unit_disc(seed: u64) -> MultiplicativeFunction {
    MultiplicativeFunction::general(format!("random-unitdisc({seed})"), true, move |p, k| {
        keyed_unit_disc(seed, p, k)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{arith_values, build_prime_table};
    use crate::dirichlet::build_character_group;
    use crate::rng::SplitMix64;

    fn table() -> PrimeTable {
        build_prime_table(20_000).unwrap()
    }

    #[test]
    fn mobius_matches_sieved_values() {
        let table = table();
        let vals = arith_values(&table);
        let mu = builtin("mobius").unwrap();
        assert_eq!(mu.evaluate(30, &table).unwrap().re, -1.0);
        let batch = mu.batch_evaluate(2000, &table).unwrap();
        for n in 1..=2000u64 {
            assert_eq!(batch[n as usize].re as i64, vals.mobius(n), "n = {n}");
            assert_eq!(batch[n as usize].im, 0.0);
        }
    }

    #[test]
    fn completely_multiplicative_unit_function() {
        let table = table();
        let one = builtin("one").unwrap();
        assert_eq!(one.evaluate(360, &table).unwrap(), Complex64::new(1.0, 0.0));
        let batch = one.batch_evaluate(5, &table).unwrap();
        for n in 1..=5 {
            assert_eq!(batch[n], Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn exponential_mode_divides_by_factorial() {
        let table = table();
        let g = MultiplicativeFunction::exponentially("exp-one", true, |_| {
            Complex64::new(1.0, 0.0)
        });
        let v = g.evaluate(8, &table).unwrap();
        assert!((v - Complex64::new(1.0 / 6.0, 0.0)).norm() < 1e-15);
        // g(p^k) k! = g(p)^k up to a few ulp, k <= 20
        for k in 1..=20u32 {
            let lhs = g.prime_power_value(3, k).unwrap() * factorial_f64(k).unwrap();
            assert!((lhs - Complex64::new(1.0, 0.0)).norm() < 1e-13, "k = {k}");
        }
        assert!(factorial_f64(171).is_err());
    }

    #[test]
    fn batch_agrees_with_pointwise_on_random_function() {
        let table = table();
        let g = random_unit_disc(99);
        let batch = g.batch_evaluate(500, &table).unwrap();
        for n in 1..=500u64 {
            let v = g.evaluate(n, &table).unwrap();
            assert!((batch[n as usize] - v).norm() < 1e-12);
        }
    }

    #[test]
    fn unit_disc_contract_is_enforced() {
        let table = table();
        let bad = MultiplicativeFunction::general("too-big", true, |_, _| {
            Complex64::new(1.5, 0.0)
        });
        assert!(matches!(
            bad.evaluate(2, &table),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn twist_examples() {
        let table = table();
        let g = random_unit_disc(5);
        let trivial_group = build_character_group(1).unwrap();
        let same = g.twist(&trivial_group.principal(), 0.0);
        for n in 1..=200u64 {
            assert!(
                (same.evaluate(n, &table).unwrap() - g.evaluate(n, &table).unwrap()).norm()
                    < 1e-12
            );
        }

        let group = build_character_group(4).unwrap();
        let chi = group.character_by_index(1);
        let mu = builtin("mobius").unwrap();
        let twisted = mu.twist(&chi, 0.0);
        for &p in table.primes_in(1, 100) {
            let p = p as u64;
            let expect = -chi.value(p);
            assert!((twisted.prime_value(p).unwrap() - expect).norm() < 1e-12);
        }

        let t = 0.37;
        let tw = g.twist(&chi, t);
        for n in 1..=100u64 {
            let lhs = tw.evaluate(n, &table).unwrap().norm();
            let rhs = g.evaluate(n, &table).unwrap().norm() * chi.value(n).norm();
            assert!((lhs - rhs).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn twist_round_trip_recovers_g_on_units() {
        let table = table();
        let g = random_unit_disc(11);
        let group = build_character_group(12).unwrap();
        let chi = group.character_by_index(2);
        let back = g.twist(&chi, 0.25).twist(&chi.conj(), -0.25);
        for n in 1..=1000u64 {
            let expect = if chi.value(n).norm() > 0.0 {
                g.evaluate(n, &table).unwrap()
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert!((back.evaluate(n, &table).unwrap() - expect).norm() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn head_tail_split_identities() {
        let table = table();
        let mu = builtin("mobius").unwrap();
        // cutoff beyond every tabled prime: rough part trivial
        let pair = split_head_tail(&mu, 25_000.0, &table).unwrap();
        assert_eq!(pair.left.evaluate(9973, &table).unwrap().norm(), 0.0);
        for n in 2..=50u64 {
            assert!(
                (pair.right.evaluate(n, &table).unwrap() - mu.evaluate(n, &table).unwrap())
                    .norm()
                    < 1e-12
            );
        }

        let pair = split_head_tail(&mu, 2.0, &table).unwrap();
        let conv = convolve_at(&pair.left, &pair.right, 6, &table).unwrap();
        assert!((conv - mu.evaluate(6, &table).unwrap()).norm() < 1e-12);

        let g = random_unit_disc(17);
        let pair = split_head_tail(&g, 13.0, &table).unwrap();
        let mut rng = SplitMix64::new(3);
        for _ in 0..50 {
            let n = rng.next_range(1, 10_000);
            let conv = convolve_at(&pair.left, &pair.right, n, &table).unwrap();
            assert!((conv - g.evaluate(n, &table).unwrap()).norm() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn complete_split_defect_vanishes_on_primes() {
        let table = table();
        let mu = builtin("mobius").unwrap();
        let pair = split_completely_multiplicative(&mu, &table).unwrap();
        // r(p) = 0, r(p^2) = mu(p^2) - mu(p)^2 = -1
        for &p in table.primes_in(1, 50) {
            let p = p as u64;
            assert_eq!(pair.right.prime_power_value(p, 1).unwrap().norm(), 0.0);
            assert!(
                (pair.right.prime_power_value(p, 2).unwrap() - Complex64::new(-1.0, 0.0))
                    .norm()
                    < 1e-12
            );
        }

        let one = builtin("one").unwrap();
        let pair = split_completely_multiplicative(&one, &table).unwrap();
        for &p in table.primes_in(1, 50) {
            for k in 1..=5u32 {
                assert_eq!(pair.right.prime_power_value(p as u64, k).unwrap().norm(), 0.0);
            }
        }

        let g = random_unit_disc(23);
        let pair = split_completely_multiplicative(&g, &table).unwrap();
        for &p in table.primes_in(1, 30) {
            let r2 = pair.right.prime_power_value(p as u64, 2).unwrap();
            assert!(r2.norm() <= 2.0 + 1e-12);
            assert_eq!(pair.right.prime_power_value(p as u64, 1).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn exponential_split_bounds() {
        let table = table();
        let one = builtin("one").unwrap();
        let pair = split_exponential(&one, &table).unwrap();
        for &p in table.primes_in(1, 50) {
            let p = p as u64;
            assert!(pair.right.prime_power_value(p, 1).unwrap().norm() < 1e-15);
            let r2 = pair.right.prime_power_value(p, 2).unwrap();
            assert!((r2 - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        }

        // random admissible g: real in [0,1] at every prime power
        let g = MultiplicativeFunction::general("admissible", true, move |p, k| {
            Complex64::new(keyed_unit_disc(31, p, k).norm(), 0.0)
        });
        let pair = split_exponential(&g, &table).unwrap();
        for &p in table.primes_in(1, 100) {
            let p = p as u64;
            assert!(pair.right.prime_power_value(p, 1).unwrap().norm() < 1e-12);
            assert!(pair.right.prime_power_value(p, 2).unwrap().norm() <= 1.0 + 1e-12);
            for k in 3..=6u32 {
                assert!(
                    pair.right.prime_power_value(p, k).unwrap().norm()
                        <= std::f64::consts::E + 1e-9
                );
            }
        }

        let mu = builtin("mobius").unwrap();
        assert!(matches!(
            split_exponential(&mu, &table),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn convolution_is_associative_and_commutative() {
        let table = table();
        let f = random_unit_disc(1);
        let g = random_unit_disc(2);
        let h = random_unit_disc(3);
        let mut rng = SplitMix64::new(9);
        for _ in 0..30 {
            let n = rng.next_range(1, 1000);
            let fg = convolve_at(&f, &g, n, &table).unwrap();
            let gf = convolve_at(&g, &f, n, &table).unwrap();
            assert!((fg - gf).norm() < 1e-12);
            // associativity through pointwise divisor expansion
            let mut lhs = Complex64::new(0.0, 0.0);
            for d in table.divisors(n) {
                lhs += convolve_at(&f, &g, d, &table).unwrap()
                    * h.evaluate(n / d, &table).unwrap();
            }
            let mut rhs = Complex64::new(0.0, 0.0);
            for d in table.divisors(n) {
                rhs += f.evaluate(d, &table).unwrap()
                    * convolve_at(&g, &h, n / d, &table).unwrap();
            }
            assert!((lhs - rhs).norm() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn builtin_parser() {
        assert!(builtin("one").is_ok());
        assert!(builtin("mobius-tail(7)").is_ok());
        assert!(builtin("unit-tail(100)").is_ok());
        assert!(builtin("random-unitdisc(42)").is_ok());
        assert!(builtin("nothing").is_err());
        assert!(builtin("mobius-tail(x)").is_err());
    }

    #[test]
    fn mobius_tail_values() {
        let table = table();
        let g = mobius_tail(5);
        assert_eq!(g.evaluate(7, &table).unwrap().re, -1.0);
        assert_eq!(g.evaluate(14, &table).unwrap().norm(), 0.0); // 2 | 14
        assert_eq!(g.evaluate(77, &table).unwrap().re, 1.0); // 7 * 11
        assert_eq!(g.evaluate(49, &table).unwrap().norm(), 0.0); // square
    }
}
