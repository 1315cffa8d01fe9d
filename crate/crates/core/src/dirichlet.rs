//! Exact Dirichlet character groups.
//!
//! The unit group mod D is decomposed into cyclic components: one primitive
//! root per odd prime-power factor, and the two-generator {-1, 5}
//! decomposition for 2^e with e >= 3 (the only construction uniform in e).
//! Characters are identified with exponent vectors against those
//! generators, values are exact rational angles k/m materialized to complex
//! on demand, and orders come from integer lcm arithmetic alone. Character
//! enumeration is lexicographic in exponent vectors and stable across runs.

use std::sync::Arc;

use num_complex::Complex64;
use num_integer::{gcd, lcm};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest modulus the constructor will accept.
pub const MAX_MODULUS: u64 = 1_000_000;

#[derive(Debug)]
struct Component {
    prime_power: u64,
    /// One inner vec per generator living in this component;
    /// entry r is the generator exponent of residue r, u32::MAX off units.
    dlog_tables: Vec<Vec<u32>>,
    /// Indices into the flat generator list.
    gen_slots: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Generator {
    /// CRT-lifted residue mod D generating this cyclic factor.
    pub residue: u64,
    /// Cyclic order; the product over all generators is phi(D).
    pub order: u64,
}

#[derive(Debug)]
struct GroupInner {
    modulus: u64,
    phi: u64,
    generators: Vec<Generator>,
    components: Vec<Component>,
    /// lcm of generator orders; every character angle has this denominator.
    exponent: u64,
}

/// The full character group mod D. Cheap to clone (shared immutable state).
#[derive(Debug, Clone)]
pub struct CharacterGroup {
    inner: Arc<GroupInner>,
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = (acc as u128 * base as u128 % m as u128) as u64;
        }
        base = (base as u128 * base as u128 % m as u128) as u64;
        exp >>= 1;
    }
    acc
}

fn factorize_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut k = 0;
            while n % p == 0 {
                n /= p;
                k += 1;
            }
            out.push((p, k));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Least primitive root mod the odd prime p, then adjusted so it stays
/// primitive mod every power of p.
fn primitive_root_odd(p: u64, pe: u64) -> u64 {
    let phi = p - 1;
    let phi_factors: Vec<u64> = factorize_u64(phi).into_iter().map(|(q, _)| q).collect();
    let mut g = 2u64;
    loop {
        if phi_factors.iter().all(|&q| pow_mod(g, phi / q, p) != 1) {
            break;
        }
        g += 1;
    }
    if pe > p && pow_mod(g, p - 1, p * p) == 1 {
        g += p;
    }
    g
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    // Extended Euclid; callers guarantee gcd(a, m) = 1.
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_s.rem_euclid(m as i128)) as u64
}

/// Build the character group mod D, 1 <= D <= 1e6.
pub fn build_character_group(modulus: u64) -> Result<CharacterGroup> {
    if modulus < 1 || modulus > MAX_MODULUS {
        return Err(Error::Resource(format!(
            "modulus {modulus} outside [1, {MAX_MODULUS}]"
        )));
    }
    let mut components = Vec::new();
    let mut generators = Vec::new();
    for (p, e) in factorize_u64(modulus) {
        let pe = p.pow(e);
        if p == 2 {
            match e {
                1 => {
                    // (Z/2)* is trivial; no generator, but the component
                    // still filters units (residue 1 only).
                    components.push(Component {
                        prime_power: 2,
                        dlog_tables: vec![],
                        gen_slots: vec![],
                    });
                }
                2 => {
                    let mut table = vec![u32::MAX; 4];
                    table[1] = 0;
                    table[3] = 1;
                    let slot = generators.len();
                    generators.push(Generator { residue: 3, order: 2 });
                    components.push(Component {
                        prime_power: 4,
                        dlog_tables: vec![table],
                        gen_slots: vec![slot],
                    });
                }
                _ => {
                    let half = pe / 4; // order of 5 mod 2^e
                    let mut sign_table = vec![u32::MAX; pe as usize];
                    let mut five_table = vec![u32::MAX; pe as usize];
                    let mut r = 1u64;
                    for j in 0..half {
                        sign_table[r as usize] = 0;
                        five_table[r as usize] = j as u32;
                        let neg = pe - r;
                        sign_table[neg as usize] = 1;
                        five_table[neg as usize] = j as u32;
                        r = r * 5 % pe;
                    }
                    let sign_slot = generators.len();
                    generators.push(Generator {
                        residue: pe - 1,
                        order: 2,
                    });
                    let five_slot = generators.len();
                    generators.push(Generator {
                        residue: 5,
                        order: half,
                    });
                    components.push(Component {
                        prime_power: pe,
                        dlog_tables: vec![sign_table, five_table],
                        gen_slots: vec![sign_slot, five_slot],
                    });
                }
            }
        } else {
            let order = pe / p * (p - 1);
            let g = primitive_root_odd(p, pe);
            let mut table = vec![u32::MAX; pe as usize];
            let mut r = 1u64;
            for j in 0..order {
                table[r as usize] = j as u32;
                r = (r as u128 * g as u128 % pe as u128) as u64;
            }
            let slot = generators.len();
            generators.push(Generator { residue: g, order });
            components.push(Component {
                prime_power: pe,
                dlog_tables: vec![table],
                gen_slots: vec![slot],
            });
        }
    }
    // CRT-lift each generator residue to be 1 mod the complementary factor.
    for (ci, comp) in components.iter().enumerate() {
        let pe = comp.prime_power;
        let rest = modulus / pe;
        if rest == 1 {
            continue;
        }
        let inv = mod_inverse(rest % pe, pe);
        for (gi, &slot) in comp.gen_slots.iter().enumerate() {
            let local = generators[slot].residue % pe;
            let t = (local + pe - 1) % pe;
            let t = (t as u128 * inv as u128 % pe as u128) as u64;
            generators[slot].residue = (1 + rest as u128 * t as u128) as u64 % modulus;
            debug_assert_eq!(generators[slot].residue % pe, local, "component {ci} gen {gi}");
        }
    }
    let phi = crate::arith::euler_phi_u64(modulus);
    debug_assert_eq!(generators.iter().map(|g| g.order).product::<u64>(), phi);
    let exponent = generators.iter().fold(1u64, |acc, g| lcm(acc, g.order));
    Ok(CharacterGroup {
        inner: Arc::new(GroupInner {
            modulus,
            phi,
            generators,
            components,
            exponent,
        }),
    })
}

impl CharacterGroup {
    pub fn modulus(&self) -> u64 {
        self.inner.modulus
    }

    pub fn phi(&self) -> u64 {
        self.inner.phi
    }

    pub fn generators(&self) -> &[Generator] {
        &self.inner.generators
    }

    /// Exponent vector of a reduced residue; None when gcd(a, D) > 1.
    pub fn dlog(&self, n: u64) -> Option<Vec<u64>> {
        let a = n % self.inner.modulus;
        let mut out = vec![0u64; self.inner.generators.len()];
        for comp in &self.inner.components {
            let r = (a % comp.prime_power) as usize;
            for (ti, &slot) in comp.gen_slots.iter().enumerate() {
                let v = comp.dlog_tables[ti][r];
                if v == u32::MAX {
                    return None;
                }
                out[slot] = v as u64;
            }
            if comp.gen_slots.is_empty() && r % 2 == 0 {
                // the trivial 2-component still rejects even residues
                return None;
            }
        }
        Some(out)
    }

    pub fn is_unit(&self, n: u64) -> bool {
        gcd(n % self.inner.modulus, self.inner.modulus) == 1 || self.inner.modulus == 1
    }

    pub fn principal(&self) -> Character {
        Character {
            group: self.clone(),
            exps: vec![0; self.inner.generators.len()],
        }
    }

    pub fn character(&self, exps: Vec<u64>) -> Result<Character> {
        if exps.len() != self.inner.generators.len() {
            return Err(Error::Domain(format!(
                "exponent vector length {} does not match {} generators",
                exps.len(),
                self.inner.generators.len()
            )));
        }
        let exps = exps
            .into_iter()
            .zip(&self.inner.generators)
            .map(|(e, g)| e % g.order)
            .collect();
        Ok(Character {
            group: self.clone(),
            exps,
        })
    }

    /// Character at the given position of the lexicographic enumeration.
    pub fn character_by_index(&self, index: usize) -> Character {
        debug_assert!(index < self.inner.phi as usize);
        let mut exps = vec![0u64; self.inner.generators.len()];
        let mut rem = index as u64;
        for i in (0..self.inner.generators.len()).rev() {
            let m = self.inner.generators[i].order;
            exps[i] = rem % m;
            rem /= m;
        }
        Character {
            group: self.clone(),
            exps,
        }
    }

    /// All phi(D) characters in lexicographic exponent order.
    pub fn characters(&self) -> Vec<Character> {
        (0..self.inner.phi as usize)
            .map(|i| self.character_by_index(i))
            .collect()
    }

    /// Reduced residues mod D in ascending order.
    pub fn reduced_residues(&self) -> Vec<u64> {
        if self.inner.modulus == 1 {
            return vec![0];
        }
        (1..=self.inner.modulus)
            .filter(|&a| gcd(a, self.inner.modulus) == 1)
            .map(|a| a % self.inner.modulus)
            .collect()
    }
}

/// A Dirichlet character mod D held as an exponent vector against the
/// group generators. Evaluation is pure and thread-safe.
#[derive(Debug, Clone)]
pub struct Character {
    group: CharacterGroup,
    exps: Vec<u64>,
}

/// Exact rational angle k/m of a root-of-unity value e(k/m).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Angle {
    pub numerator: u64,
    pub denominator: u64,
}

impl Angle {
    pub fn reduced(self) -> Angle {
        let g = gcd(self.numerator, self.denominator);
        Angle {
            numerator: self.numerator / g,
            denominator: self.denominator / g,
        }
    }

    /// Materialize e(k/m); values on the coordinate axes come out exact.
    pub fn to_complex(self) -> Complex64 {
        let a = self.reduced();
        match (a.numerator, a.denominator) {
            (_, 1) => Complex64::new(1.0, 0.0),
            (1, 2) => Complex64::new(-1.0, 0.0),
            (1, 4) => Complex64::new(0.0, 1.0),
            (3, 4) => Complex64::new(0.0, -1.0),
            (k, m) => {
                let theta = std::f64::consts::TAU * k as f64 / m as f64;
                Complex64::new(theta.cos(), theta.sin())
            }
        }
    }
}

impl Character {
    pub fn group(&self) -> &CharacterGroup {
        &self.group
    }

    pub fn modulus(&self) -> u64 {
        self.group.modulus()
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exps
    }

    /// Lexicographic position within the group enumeration.
    pub fn index(&self) -> usize {
        let mut idx = 0u64;
        for (e, g) in self.exps.iter().zip(self.group.generators()) {
            idx = idx * g.order + e;
        }
        idx as usize
    }

    pub fn is_principal(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    /// Least k >= 1 with chi^k principal, via exact lcm arithmetic.
    pub fn order(&self) -> u64 {
        self.exps
            .iter()
            .zip(self.group.generators())
            .fold(1u64, |acc, (&e, g)| lcm(acc, g.order / gcd(g.order, e)))
    }

    pub fn is_real(&self) -> bool {
        self.order() <= 2
    }

    pub fn conj(&self) -> Character {
        let exps = self
            .exps
            .iter()
            .zip(self.group.generators())
            .map(|(&e, g)| (g.order - e) % g.order)
            .collect();
        Character {
            group: self.group.clone(),
            exps,
        }
    }

    /// Pointwise product with a character of the same group.
    pub fn mul(&self, other: &Character) -> Character {
        debug_assert_eq!(self.modulus(), other.modulus());
        let exps = self
            .exps
            .iter()
            .zip(&other.exps)
            .zip(self.group.generators())
            .map(|((&a, &b), g)| (a + b) % g.order)
            .collect();
        Character {
            group: self.group.clone(),
            exps,
        }
    }

    /// Exact angle of chi(n); None where the character vanishes.
    pub fn value_angle(&self, n: u64) -> Option<Angle> {
        let dlog = self.group.dlog(n)?;
        let m = self.group.inner.exponent;
        let mut k: u128 = 0;
        for ((&e, &d), g) in self.exps.iter().zip(&dlog).zip(self.group.generators()) {
            let scale = (m / g.order) as u128;
            k += e as u128 * d as u128 % m as u128 * scale;
            k %= m as u128;
        }
        Some(Angle {
            numerator: k as u64,
            denominator: m,
        })
    }

    pub fn value(&self, n: u64) -> Complex64 {
        match self.value_angle(n) {
            Some(angle) => angle.to_complex(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Values over all residues 0..D; index by n mod D in hot loops.
    pub fn value_table(&self) -> Vec<Complex64> {
        let d = self.modulus();
        if d == 1 {
            return vec![Complex64::new(1.0, 0.0)];
        }
        (0..d).map(|a| self.value(a)).collect()
    }

    /// Serialized form: modulus plus exponent vector.
    pub fn id(&self) -> CharacterId {
        CharacterId {
            modulus: self.modulus(),
            exponents: self.exps.clone(),
        }
    }
}

/// Wire form of a character as (D, exponent_vector).
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct CharacterId {
    pub modulus: u64,
    pub exponents: Vec<u64>,
}

/// Partial sum of chi over the window (u, v].
pub fn partial_char_sum(chi: &Character, u: u64, v: u64) -> Complex64 {
    debug_assert!(u <= v);
    let d = chi.modulus();
    let table = chi.value_table();
    let mut acc = Complex64::new(0.0, 0.0);
    for n in (u + 1)..=v {
        acc += table[(n % d) as usize];
    }
    acc
}
