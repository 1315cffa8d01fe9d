//! Partial-sum functionals over arithmetic functions, progression sums by
//! residue class, the residue-mass / character-mass identity, the
//! main-term-plus-characters decomposition of progression sums with its
//! error envelope, and the nonnegative upper-bound and smooth-tail decay
//! checks.
//!
//! Arithmetic functions enter as value slices indexed by n (entry 0
//! unused), produced by `MultiplicativeFunction::batch_evaluate` or by
//! hand; every accumulation runs in ascending n so results are
//! bit-reproducible.

use num_complex::Complex64;
use num_integer::gcd;
use serde::Serialize;

use crate::arith::PrimeTable;
use crate::dirichlet::{Character, CharacterGroup, CharacterId};
use crate::error::{Error, Result};
use crate::multfun::MultiplicativeFunction;
use crate::ser::{complex_pair, finite_or_marker};

/// M(x) = sum_{n <= x} f(n).
pub fn sum_to(values: &[Complex64], x: u64) -> Complex64 {
    let hi = (x as usize).min(values.len() - 1);
    let mut acc = Complex64::new(0.0, 0.0);
    for v in &values[1..=hi] {
        acc += v;
    }
    acc
}

/// N(x) = sum_{n <= x} f(n) log n.
pub fn log_weighted_sum_to(values: &[Complex64], x: u64) -> Complex64 {
    let hi = (x as usize).min(values.len() - 1);
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, v) in values.iter().enumerate().take(hi + 1).skip(2) {
        acc += v * (n as f64).ln();
    }
    acc
}

/// Per-residue partial sums of f over n <= x, split by reduced class.
#[derive(Debug, Clone)]
pub struct ProgressionSums {
    pub modulus: u64,
    /// (reduced residue, class sum), ascending in the residue.
    pub sums: Vec<(u64, Complex64)>,
    /// Independent ascending pass over all n coprime to the modulus.
    pub coprime_total: Complex64,
}

pub fn progression_sums(values: &[Complex64], modulus: u64) -> ProgressionSums {
    let x = values.len() - 1;
    let residues: Vec<u64> = if modulus == 1 {
        vec![0]
    } else {
        (1..=modulus).filter(|&a| gcd(a, modulus) == 1).map(|a| a % modulus).collect()
    };
    let mut index = vec![usize::MAX; modulus.max(1) as usize];
    for (i, &a) in residues.iter().enumerate() {
        index[a as usize] = i;
    }
    let mut sums = vec![Complex64::new(0.0, 0.0); residues.len()];
    let mut coprime_total = Complex64::new(0.0, 0.0);
    for n in 1..=x as u64 {
        let slot = index[(n % modulus.max(1)) as usize];
        if slot != usize::MAX {
            sums[slot] += values[n as usize];
            coprime_total += values[n as usize];
        }
    }
    ProgressionSums {
        modulus,
        sums: residues.into_iter().zip(sums).collect(),
        coprime_total,
    }
}

impl ProgressionSums {
    pub fn class_sum(&self, a: u64) -> Option<Complex64> {
        let a = a % self.modulus.max(1);
        self.sums.iter().find(|&&(r, _)| r == a).map(|&(_, s)| s)
    }
}

/// Sum of f over n <= x with n = a mod D.
pub fn class_sum_direct(values: &[Complex64], a: u64, modulus: u64) -> Complex64 {
    let x = values.len() as u64 - 1;
    let mut acc = Complex64::new(0.0, 0.0);
    let m = modulus.max(1);
    let mut n = a % m;
    if n == 0 {
        n = m;
    }
    while n <= x {
        acc += values[n as usize];
        n += m;
    }
    acc
}

/// The progression sum minus its approximation by the characters in
/// `j_chars`: sum_{n<=x, n=a (D)} f(n)
///   - sum_{chi in J} conj(chi)(a)/phi(D) * sum_{n<=x} f(n) chi(n).
pub fn progression_remainder(
    values: &[Complex64],
    a: u64,
    group: &CharacterGroup,
    j_chars: &[Character],
) -> Result<Complex64> {
    let d = group.modulus();
    if d > 1 && gcd(a % d, d) != 1 {
        return Err(Error::Domain(format!("residue {a} not coprime to modulus {d}")));
    }
    let mut acc = class_sum_direct(values, a, d);
    let phi = group.phi() as f64;
    for chi in j_chars {
        let b = twisted_sum(values, chi);
        acc -= chi.value(a).conj() / phi * b;
    }
    Ok(acc)
}

/// sum_{n <= x} f(n) chi(n) in ascending order via the residue table.
pub fn twisted_sum(values: &[Complex64], chi: &Character) -> Complex64 {
    let d = chi.modulus().max(1);
    let table = chi.value_table();
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, v) in values.iter().enumerate().skip(1) {
        let w = table[n % d as usize];
        if w.re != 0.0 || w.im != 0.0 {
            acc += v * w;
        }
    }
    acc
}

/// Both sides of the residue-mass identity
/// phi(D) * sum_a |L(a)|^2 = sum_{j not in J} |B_j|^2
/// computed by independent routes (check id i5).
pub fn residue_mass_identity(
    b: &[Complex64],
    group: &CharacterGroup,
    j_set: &[usize],
) -> (f64, f64) {
    let phi = group.phi() as f64;
    let chars = group.characters();
    let b_sums: Vec<Complex64> = chars.iter().map(|chi| twisted_sum(b, chi)).collect();
    let in_j = |i: usize| j_set.contains(&i);

    let mut lhs = 0.0;
    for &a in &group.reduced_residues() {
        let mut l = class_sum_direct(b, a, group.modulus());
        for &j in j_set {
            l -= chars[j].value(a).conj() / phi * b_sums[j];
        }
        lhs += l.norm_sqr();
    }
    lhs *= phi;

    let rhs: f64 = b_sums
        .iter()
        .enumerate()
        .filter(|(i, _)| !in_j(*i))
        .map(|(_, bj)| bj.norm_sqr())
        .sum();
    (lhs, rhs)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExceptionalTerm {
    pub character: CharacterId,
    /// conj(chi)(a)/phi(D) * sum_{n<=y} g(n) chi(n)
    #[serde(with = "complex_pair")]
    pub term: Complex64,
}

/// The three-part decomposition of a progression sum: main term from the
/// principal character, one term per selected nonprincipal character, and
/// the residual, together with the error envelope shapes.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub y: u64,
    #[serde(rename = "D")]
    pub modulus: u64,
    #[serde(rename = "a")]
    pub residue: u64,
    pub alpha: f64,
    #[serde(with = "complex_pair")]
    pub progression_sum: Complex64,
    #[serde(with = "complex_pair")]
    pub principal_term: Complex64,
    pub exceptional: Vec<ExceptionalTerm>,
    #[serde(with = "complex_pair")]
    pub residual: Complex64,
    /// (y / (phi(D) log y)) PROD_{p<=D,(p,D)=1} (1+|g(p)|/p) (log y/log D)^alpha
    #[serde(with = "finite_or_marker")]
    pub envelope: f64,
    /// y (log D / log y)^(1-alpha) / D
    #[serde(with = "finite_or_marker")]
    pub simplified_envelope: f64,
}

/// Decompose sum_{n<=y, n=a (D)} g(n) into main term, selected character
/// terms, and residual; `j_chars` must be nonprincipal characters mod D.
pub fn decompose_progression(
    g: &MultiplicativeFunction,
    a: u64,
    y: u64,
    group: &CharacterGroup,
    j_chars: &[Character],
    alpha: f64,
    table: &PrimeTable,
) -> Result<DecompositionReport> {
    let d = group.modulus();
    if d > 1 && gcd(a % d, d) != 1 {
        return Err(Error::Domain(format!("residue {a} not coprime to modulus {d}")));
    }
    if d > y {
        return Err(Error::Domain(format!("need 1 <= D <= y, got D={d}, y={y}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if j_chars.iter().any(|c| c.is_principal()) {
        return Err(Error::Domain(
            "principal character belongs to the main term, not to J".into(),
        ));
    }
    let values = g.batch_evaluate(y, table)?;
    let progression_sum = class_sum_direct(&values, a, d);
    let sums = progression_sums(&values, d);
    let phi = group.phi() as f64;
    let principal_term = sums.coprime_total / phi;
    let mut residual = progression_sum - principal_term;
    let mut exceptional = Vec::new();
    for chi in j_chars {
        let term = chi.value(a).conj() / phi * twisted_sum(&values, chi);
        residual -= term;
        exceptional.push(ExceptionalTerm {
            character: chi.id(),
            term,
        });
    }

    let ln_y = (y as f64).ln();
    let ln_d = (d as f64).ln();
    let mut prime_product = 1.0f64;
    for &p in table.primes_in(1, d) {
        let p = p as u64;
        if d % p != 0 {
            prime_product *= 1.0 + g.prime_value(p)?.norm() / p as f64;
        }
    }
    let envelope = if ln_d > 0.0 && ln_y > 0.0 {
        y as f64 / (phi * ln_y) * prime_product * (ln_y / ln_d).powf(alpha)
    } else {
        f64::INFINITY
    };
    let simplified_envelope = if ln_y > 0.0 {
        y as f64 / d as f64 * (ln_d / ln_y).powf(1.0 - alpha)
    } else {
        f64::INFINITY
    };

    Ok(DecompositionReport {
        y,
        modulus: d,
        residue: a % d.max(1),
        alpha,
        progression_sum,
        principal_term,
        exceptional,
        residual,
        envelope,
        simplified_envelope,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs_shape: f64,
    #[serde(with = "finite_or_marker")]
    pub ratio: f64,
}

fn ratio_of(lhs: f64, rhs: f64) -> f64 {
    if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs
    }
}

/// Nonnegative multiplicative functions on a progression against the shape
/// (x / (phi(D) log x)) exp(sum_{p<=x,(p,D)=1} h(p)/p); the ratio is the
/// quantity calibrated by the harness (check id aa1).
pub fn progression_upper_bound_check(
    h: &MultiplicativeFunction,
    a: u64,
    d: u64,
    x: u64,
    beta: f64,
    table: &PrimeTable,
) -> Result<BoundCheck> {
    if d > 1 && gcd(a % d, d) != 1 {
        return Err(Error::Domain(format!("residue {a} not coprime to modulus {d}")));
    }
    if !(beta > 0.0 && beta < 1.0) || (d as f64) > (x as f64).powf(beta) {
        return Err(Error::Domain(format!(
            "need D <= x^beta with beta in (0,1): D={d}, x={x}, beta={beta}"
        )));
    }
    let values = h.batch_evaluate(x, table)?;
    for (n, v) in values.iter().enumerate().skip(1) {
        if v.im.abs() > 1e-12 || v.re < -1e-12 {
            return Err(Error::Domain(format!("negative or complex h({n}) = {v}")));
        }
    }
    let lhs = class_sum_direct(&values, a, d).re;
    let phi = crate::arith::euler_phi_u64(d.max(1)) as f64;
    let mut exp_sum = 0.0;
    for &p in table.primes_in(1, x) {
        let p = p as u64;
        if d == 0 || d % p != 0 {
            exp_sum += h.prime_value(p)?.re / p as f64;
        }
    }
    let rhs_shape = x as f64 / (phi * (x as f64).ln()) * exp_sum.exp();
    Ok(BoundCheck {
        lhs,
        rhs_shape,
        ratio: ratio_of(lhs, rhs_shape),
    })
}

/// Tail sums of a [0,1]-valued multiplicative function vanishing on primes
/// above the smoothness cut, against the decaying shape
/// (x/(phi(D) log w)) PROD_{p<=Y,(p,D)=1}(1+g(p)/p) exp(-log w/(10 log Y))
/// (check id aa3).
pub fn smooth_tail_decay_check(
    g: &MultiplicativeFunction,
    w: u64,
    x: u64,
    smooth_bound: u64,
    a: u64,
    d: u64,
    table: &PrimeTable,
) -> Result<BoundCheck> {
    if d > 1 && gcd(a % d, d) != 1 {
        return Err(Error::Domain(format!("residue {a} not coprime to modulus {d}")));
    }
    let d_f = d.max(1) as f64;
    if d_f.powi(11) > w as f64 || w > x {
        return Err(Error::Domain(format!("need D^11 <= w <= x: D={d}, w={w}, x={x}")));
    }
    // hypothesis: zero above the cut, [0,1] below
    for &p in table.primes_in(smooth_bound, x) {
        if g.prime_value(p as u64)?.norm() > 0.0 {
            return Err(Error::Hypothesis(format!(
                "g must vanish on primes above {smooth_bound}; g({p}) != 0"
            )));
        }
    }
    for &p in table.primes_in(1, smooth_bound.min(10_000)) {
        let v = g.prime_value(p as u64)?;
        if v.im.abs() > 1e-12 || v.re < -1e-12 || v.re > 1.0 + 1e-12 {
            return Err(Error::Hypothesis(format!("g({p}) = {v} outside [0,1]")));
        }
    }
    let values = g.batch_evaluate(x, table)?;
    let mut lhs = 0.0;
    let m = d.max(1);
    let mut n = a % m;
    if n == 0 {
        n = m;
    }
    while n <= x {
        if n > w {
            lhs += values[n as usize].re;
        }
        n += m;
    }
    let rhs_shape = if smooth_bound < 2 {
        0.0
    } else {
        let phi = crate::arith::euler_phi_u64(m) as f64;
        let mut product = 1.0;
        for &p in table.primes_in(1, smooth_bound) {
            let p = p as u64;
            if d == 0 || d % p != 0 {
                product *= 1.0 + g.prime_value(p)?.re / p as f64;
            }
        }
        x as f64 / (phi * (w as f64).ln())
            * product
            * (-(w as f64).ln() / (10.0 * (smooth_bound as f64).ln())).exp()
    };
    Ok(BoundCheck {
        lhs,
        rhs_shape,
        ratio: ratio_of(lhs, rhs_shape),
    })
}

/// Integral of |M(u)| du over [a, b] where M is the step function with
/// jumps at the integers; exact piecewise evaluation.
pub fn integrate_step_abs(prefix: &[Complex64], a: f64, b: f64) -> f64 {
    if b <= a || b <= 1.0 {
        return 0.0;
    }
    let a = a.max(1.0);
    let top = prefix.len() as f64 - 1.0;
    let mut total = 0.0;
    let mut u = a;
    while u < b {
        let step_end = (u.floor() + 1.0).min(b);
        let idx = (u.floor().min(top)) as usize;
        total += prefix[idx].norm() * (step_end - u);
        u = step_end;
    }
    total
}

/// The four quantities of the log-weighted tail estimate (check id i6):
/// lhs |N(w)| against the smooth integral piece, the prime-power window
/// piece and the short-window oscillation E0.
#[derive(Debug, Clone, Serialize)]
pub struct LogWeightedTailPieces {
    pub w: u64,
    pub r: f64,
    pub lhs: f64,
    pub integral_piece: f64,
    pub mangoldt_piece: f64,
    pub window_max_piece: f64,
    #[serde(with = "finite_or_marker")]
    pub ratio: f64,
}

pub fn log_weighted_tail_pieces(
    values: &[Complex64],
    r: f64,
    vals: &crate::arith::ArithValues,
) -> Result<LogWeightedTailPieces> {
    let w = values.len() as u64 - 1;
    if w < 3 || r <= 0.0 {
        return Err(Error::Domain(format!("need w >= 3 and r > 0, got w={w}, r={r}")));
    }
    let wf = w as f64;
    let y = wf - wf * wf.ln().powf(-r);

    // prefix sums M(n) and N(n)
    let mut m_prefix = vec![Complex64::new(0.0, 0.0); w as usize + 1];
    let mut n_prefix = vec![Complex64::new(0.0, 0.0); w as usize + 1];
    for n in 1..=w as usize {
        m_prefix[n] = m_prefix[n - 1] + values[n];
        n_prefix[n] = n_prefix[n - 1] + values[n] * (n as f64).ln();
    }
    let lhs = n_prefix[w as usize].norm();

    // w * int_2^w |N(u)| / (u^2 log u) du, midpoint rule per unit step
    let mut integral = 0.0;
    for n in 2..w as usize {
        let mid = n as f64 + 0.5;
        integral += n_prefix[n].norm() / (mid * mid * mid.ln());
    }
    let integral_piece = wf * integral;

    // sum over prime powers d <= (log w)^(2r)
    let d_cap = wf.ln().powf(2.0 * r).floor() as u64;
    let mut mangoldt_piece = 0.0;
    for dd in 2..=d_cap.min(w) {
        let lam = vals.von_mangoldt(dd);
        if lam == 0.0 {
            continue;
        }
        let gd = values[dd as usize].norm();
        if gd == 0.0 {
            continue;
        }
        let int = integrate_step_abs(&m_prefix, y / dd as f64, wf / dd as f64);
        mangoldt_piece += dd as f64 * lam * gd / (wf - y) * int;
    }

    // E0 = max over y <= t <= w of |sum_{y < n <= t} g(n) log n|
    let mut window_max_piece = 0.0f64;
    let y_floor = y.floor().max(0.0) as usize;
    let base = n_prefix[y_floor.min(w as usize)];
    for t in (y_floor + 1)..=w as usize {
        window_max_piece = window_max_piece.max((n_prefix[t] - base).norm());
    }

    let total = integral_piece + mangoldt_piece + window_max_piece;
    Ok(LogWeightedTailPieces {
        w,
        r,
        lhs,
        integral_piece,
        mangoldt_piece,
        window_max_piece,
        ratio: ratio_of(lhs, total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{arith_values, build_prime_table};
    use crate::dirichlet::build_character_group;
    use crate::multfun::{builtin, mobius_tail, random_unit_disc};
    use crate::rng::SplitMix64;

    fn table() -> PrimeTable {
        build_prime_table(20_000).unwrap()
    }

    #[test]
    fn partial_sum_examples() {
        let table = table();
        let mu = builtin("mobius").unwrap();
        let values = mu.batch_evaluate(100, &table).unwrap();
        assert_eq!(sum_to(&values, 10).re, -1.0);

        let one = builtin("one").unwrap();
        let ones = one.batch_evaluate(100, &table).unwrap();
        assert_eq!(sum_to(&ones, 77).re, 77.0);
        assert_eq!(log_weighted_sum_to(&ones, 1).norm(), 0.0);
    }

    #[test]
    fn progression_sums_agree_with_direct_filtering() {
        let table = table();
        let g = random_unit_disc(4);
        let values = g.batch_evaluate(3000, &table).unwrap();
        for d in [1u64, 2, 5, 12, 30] {
            let sums = progression_sums(&values, d);
            let mut total = Complex64::new(0.0, 0.0);
            for &(a, s) in &sums.sums {
                let direct = class_sum_direct(&values, a, d);
                assert!((s - direct).norm() < 1e-12, "D={d} a={a}");
                total += s;
            }
            let rel = (total - sums.coprime_total).norm() / sums.coprime_total.norm().max(1.0);
            assert!(rel < 1e-9, "D={d}");
        }
    }

    #[test]
    fn remainder_examples() {
        let table = table();
        let mu = builtin("mobius").unwrap();
        let values = mu.batch_evaluate(20, &table).unwrap();
        let group = build_character_group(3).unwrap();
        // raw progression sum over {1,4,7,10,13,16,19}
        let y = progression_remainder(&values, 1, &group, &[]).unwrap();
        assert!((y - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        // full character set including principal collapses to zero
        let g = random_unit_disc(8);
        let values = g.batch_evaluate(2000, &table).unwrap();
        for d in [3u64, 8, 15] {
            let group = build_character_group(d).unwrap();
            let all = group.characters();
            for &a in group.reduced_residues().iter().take(3) {
                let y = progression_remainder(&values, a, &group, &all).unwrap();
                assert!(y.norm() < 1e-9, "D={d} a={a}: {y}");
            }
        }

        assert!(progression_remainder(&values, 3, &build_character_group(9).unwrap(), &[])
            .is_err());
    }

    #[test]
    fn remainder_is_linear() {
        let table = table();
        let f = random_unit_disc(14);
        let g = random_unit_disc(15);
        let fv = f.batch_evaluate(1500, &table).unwrap();
        let gv = g.batch_evaluate(1500, &table).unwrap();
        let alpha = Complex64::new(0.3, -0.8);
        let beta = Complex64::new(-1.1, 0.2);
        let combo: Vec<Complex64> = fv
            .iter()
            .zip(&gv)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let group = build_character_group(7).unwrap();
        let j = vec![group.character_by_index(1), group.character_by_index(3)];
        let yf = progression_remainder(&fv, 2, &group, &j).unwrap();
        let yg = progression_remainder(&gv, 2, &group, &j).unwrap();
        let yc = progression_remainder(&combo, 2, &group, &j).unwrap();
        assert!((yc - (alpha * yf + beta * yg)).norm() < 1e-12);
    }

    #[test]
    fn residue_mass_identity_trivial_cases() {
        let group = build_character_group(12).unwrap();
        let zero = vec![Complex64::new(0.0, 0.0); 101];
        let (lhs, rhs) = residue_mass_identity(&zero, &group, &[]);
        assert_eq!((lhs, rhs), (0.0, 0.0));

        let mut rng = SplitMix64::new(77);
        let mut b = vec![Complex64::new(0.0, 0.0); 201];
        for v in b.iter_mut().skip(1) {
            *v = rng.next_unit_disc();
        }
        let all: Vec<usize> = (0..group.phi() as usize).collect();
        let (lhs, _) = residue_mass_identity(&b, &group, &all);
        assert!(lhs < 1e-18);
    }

    #[test]
    fn residue_mass_identity_random_instances() {
        let mut rng = SplitMix64::new(2024);
        for _ in 0..25 {
            let d = rng.next_range(2, 51);
            let group = build_character_group(d).unwrap();
            let phi = group.phi() as usize;
            let mut b = vec![Complex64::new(0.0, 0.0); 201];
            for v in b.iter_mut().skip(1) {
                *v = rng.next_unit_disc();
            }
            let j: Vec<usize> = (0..phi).filter(|_| rng.next_f64() < 0.5).collect();
            let (lhs, rhs) = residue_mass_identity(&b, &group, &j);
            let rel = (lhs - rhs).abs() / rhs.max(1.0);
            assert!(rel < 1e-9, "D={d} |J|={}: {lhs} vs {rhs}", j.len());
        }
    }

    #[test]
    fn decompose_constant_function() {
        let table = table();
        let one = builtin("one").unwrap();
        let group = build_character_group(2).unwrap();
        let report = decompose_progression(&one, 1, 100, &group, &[], 0.5, &table).unwrap();
        assert_eq!(report.progression_sum.re, 50.0);
        assert_eq!(report.principal_term.re, 50.0);
        assert!(report.residual.norm() < 1e-12);
    }

    #[test]
    fn decompose_trivial_modulus() {
        let table = table();
        let g = random_unit_disc(5);
        let group = build_character_group(1).unwrap();
        let report = decompose_progression(&g, 1, 500, &group, &[], 0.5, &table).unwrap();
        let values = g.batch_evaluate(500, &table).unwrap();
        let m = sum_to(&values, 500);
        assert!((report.progression_sum - m).norm() < 1e-12);
        assert!((report.principal_term - m).norm() < 1e-12);
        assert!(report.residual.norm() < 1e-12);
        assert!(report.envelope.is_infinite());
    }

    #[test]
    fn decompose_with_all_nonprincipal_characters_has_zero_residual() {
        let table = table();
        let mut rng = SplitMix64::new(55);
        for _ in 0..8 {
            let d = rng.next_range(2, 51);
            let group = build_character_group(d).unwrap();
            let g = random_unit_disc(rng.next_u64());
            let nonprincipal: Vec<Character> = group
                .characters()
                .into_iter()
                .filter(|c| !c.is_principal())
                .collect();
            let a = *group.reduced_residues().last().unwrap();
            let report =
                decompose_progression(&g, a, 5000, &group, &nonprincipal, 0.5, &table).unwrap();
            let scale = report.progression_sum.norm().max(1.0);
            assert!(report.residual.norm() / scale < 1e-9, "D={d}");
        }
    }

    #[test]
    fn decompose_residual_order_independent() {
        let table = table();
        let group = build_character_group(20).unwrap();
        let g = mobius_tail(3);
        let mut chars: Vec<Character> = group
            .characters()
            .into_iter()
            .filter(|c| !c.is_principal())
            .collect();
        let r1 = decompose_progression(&g, 3, 4000, &group, &chars, 0.5, &table).unwrap();
        chars.reverse();
        let r2 = decompose_progression(&g, 3, 4000, &group, &chars, 0.5, &table).unwrap();
        assert!((r1.residual - r2.residual).norm() < 1e-12);
    }

    #[test]
    fn decompose_rejects_principal_in_j() {
        let table = table();
        let group = build_character_group(5).unwrap();
        let g = builtin("one").unwrap();
        let err = decompose_progression(&g, 1, 100, &group, &[group.principal()], 0.5, &table);
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn upper_bound_check_examples() {
        let table = table();
        let one = builtin("one").unwrap();
        let check = progression_upper_bound_check(&one, 1, 3, 10_000, 0.5, &table).unwrap();
        assert_eq!(check.lhs, 3334.0);
        assert!(check.ratio.is_finite() && check.ratio > 0.0);

        // h supported at n = 1 only
        let delta = MultiplicativeFunction::general("delta", true, |_, _| {
            Complex64::new(0.0, 0.0)
        });
        let check = progression_upper_bound_check(&delta, 1, 3, 1000, 0.5, &table).unwrap();
        assert_eq!(check.lhs, 1.0); // n = 1 is in the class 1 mod 3

        let twow = MultiplicativeFunction::general("2^omega", false, |_, _| {
            Complex64::new(2.0, 0.0)
        });
        let check = progression_upper_bound_check(&twow, 1, 5, 10_000, 0.5, &table).unwrap();
        assert!(check.ratio > 0.1 && check.ratio < 10.0, "ratio = {}", check.ratio);

        let neg = MultiplicativeFunction::general("neg", false, |_, _| {
            Complex64::new(-1.0, 0.0)
        });
        assert!(progression_upper_bound_check(&neg, 1, 3, 1000, 0.5, &table).is_err());
    }

    // Direct enumeration oracle for 10-smooth odd integers in a window.
    #[test]
    fn smooth_tail_matches_enumeration() {
        let table = build_prime_table(100_000).unwrap();
        let g = MultiplicativeFunction::completely("10-smooth", true, |p| {
            if p <= 10 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let w = 2048u64;
        let x = 100_000u64;
        let check = smooth_tail_decay_check(&g, w, x, 10, 1, 2, &table).unwrap();
        // enumerate odd 10-smooth numbers 3^a 5^b 7^c in (w, x]
        let mut count = 0u64;
        let mut a3 = 1u64;
        while a3 <= x {
            let mut a5 = a3;
            while a5 <= x {
                let mut a7 = a5;
                while a7 <= x {
                    if a7 > w {
                        count += 1;
                    }
                    a7 = match a7.checked_mul(7) {
                        Some(v) => v,
                        None => break,
                    };
                }
                a5 = match a5.checked_mul(5) {
                    Some(v) => v,
                    None => break,
                };
            }
            a3 = match a3.checked_mul(3) {
                Some(v) => v,
                None => break,
            };
        }
        assert_eq!(check.lhs as u64, count);
        assert!(check.rhs_shape > 0.0);
    }

    #[test]
    fn smooth_tail_shape_is_monotone_in_w() {
        let table = table();
        let g = MultiplicativeFunction::completely("7-smooth", true, |p| {
            if p <= 7 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let mut prev = f64::INFINITY;
        for w in [2048u64, 4096, 8192] {
            let check = smooth_tail_decay_check(&g, w, 20_000, 7, 1, 2, &table).unwrap();
            assert!(check.rhs_shape <= prev);
            prev = check.rhs_shape;
        }
    }

    #[test]
    fn smooth_tail_trivial_support() {
        let table = table();
        let g = MultiplicativeFunction::general("point-mass", true, |_, _| {
            Complex64::new(0.0, 0.0)
        });
        let check = smooth_tail_decay_check(&g, 2048, 10_000, 1, 1, 2, &table).unwrap();
        assert_eq!(check.lhs, 0.0);
        assert_eq!(check.rhs_shape, 0.0);
    }

    #[test]
    fn step_integral_is_exact_on_hand_case() {
        // M = prefix of f with f(1)=1, f(2)=-2: M(u) = 1 on [1,2), -1 on [2,...)
        let prefix = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ];
        let got = integrate_step_abs(&prefix, 1.0, 3.0);
        assert!((got - 2.0).abs() < 1e-15);
        let got = integrate_step_abs(&prefix, 1.5, 2.25);
        assert!((got - (0.5 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn log_weighted_tail_pieces_sane() {
        let table = table();
        let vals = arith_values(&table);
        let one = builtin("one").unwrap();
        let values = one.batch_evaluate(10_000, &table).unwrap();
        let pieces = log_weighted_tail_pieces(&values, 2.0, &vals).unwrap();
        assert!(pieces.lhs > 0.0);
        assert!(pieces.integral_piece > 0.0);
        assert!(pieces.ratio.is_finite());
    }
}
