//! Truncated Dirichlet series in the half-plane of absolute convergence,
//! the semi-strip grid that discretizes suprema over s and over
//! subintervals of (D, x], the exceptional-character classifier, and the
//! Plancherel identity check.
//!
//! No analytic continuation is performed; logarithms of the series are
//! always taken in prime-sum form with the prime-square discrepancy
//! carried as an explicit interval. Grid maxima are lower bounds for the
//! continuum suprema they replace, so the classifier can only under-fill
//! its exceptional set; reports declare the grid and the slack applied.

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::PrimeTable;
use crate::dirichlet::{Character, CharacterGroup, CharacterId};
use crate::error::{Error, Result};
use crate::multfun::MultiplicativeFunction;

/// Default additive slack on the classifier threshold covering grid
/// under-coverage of the continuum suprema.
pub const DEFAULT_GRID_SLACK: f64 = 1.0;
/// Default number of geometric interval segments.
pub const DEFAULT_SEGMENTS: usize = 64;

/// A point s = sigma + it with sigma > 1, guarded away from the boundary.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HalfPlanePoint {
    pub sigma: f64,
    pub t: f64,
}

impl HalfPlanePoint {
    pub fn new(sigma: f64, t: f64) -> Result<Self> {
        if sigma < 1.0 + 1e-9 {
            return Err(Error::Domain(format!(
                "sigma = {sigma} is not strictly right of 1"
            )));
        }
        Ok(HalfPlanePoint { sigma, t })
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.sigma, self.t)
    }
}

/// Discretization of the semi-strip Re(s) > 1, |Im(s)| <= T together with
/// the geometric family of subintervals of (D, x].
#[derive(Debug, Clone, Serialize)]
pub struct SemiStripGrid {
    pub d: u64,
    pub x: u64,
    pub t_max: f64,
    pub t_spacing: f64,
    /// Descending toward the boundary; the last entry is 1 + 1/log x.
    pub sigma_values: Vec<f64>,
    /// 65 cut points D = e_0 < e_1 <= ... <= e_m = x on the geometric grid
    /// e_j = D (x/D)^(j/m).
    pub interval_endpoints: Vec<f64>,
}

impl SemiStripGrid {
    pub fn new(d: u64, x: u64, t_max: f64, segments: usize) -> Result<Self> {
        if d < 2 || x <= d {
            return Err(Error::Config(format!("grid needs 2 <= D < x, got D={d}, x={x}")));
        }
        if segments < 1 {
            return Err(Error::Config("grid needs at least one segment".into()));
        }
        let ln_x = (x as f64).ln();
        let sigma0 = 1.0 + 1.0 / ln_x;
        let ratio = x as f64 / d as f64;
        let interval_endpoints = (0..=segments)
            .map(|j| d as f64 * ratio.powf(j as f64 / segments as f64))
            .collect();
        Ok(SemiStripGrid {
            d,
            x,
            t_max,
            t_spacing: 1.0 / ln_x,
            sigma_values: vec![sigma0],
            interval_endpoints,
        })
    }

    /// Grid for inequality scans: sigma values on the closed boundary
    /// sigma >= 1 are allowed (finite truncated sums need no convergence),
    /// unlike classifier grids built with `new`.
    pub fn for_scan(
        d: u64,
        x: u64,
        t_max: f64,
        segments: usize,
        sigma_values: Vec<f64>,
        t_spacing: f64,
    ) -> Result<Self> {
        let mut grid = SemiStripGrid::new(d, x, t_max, segments)?;
        let cap = 1.0 / (x as f64).ln();
        if t_spacing > cap + 1e-15 {
            return Err(Error::Config(format!(
                "t spacing {t_spacing} coarser than 1/log x = {cap}"
            )));
        }
        if sigma_values.is_empty() || sigma_values.iter().any(|&s| s < 1.0 - 1e-12) {
            return Err(Error::Config("scan sigma values must be >= 1".into()));
        }
        let mut sigmas = sigma_values;
        sigmas.sort_by(|a, b| b.partial_cmp(a).unwrap());
        grid.sigma_values = sigmas;
        grid.t_spacing = t_spacing;
        Ok(grid)
    }

    pub fn with_t_spacing(mut self, spacing: f64) -> Result<Self> {
        let cap = 1.0 / (self.x as f64).ln();
        if spacing > cap + 1e-15 {
            return Err(Error::Config(format!(
                "t spacing {spacing} coarser than 1/log x = {cap}"
            )));
        }
        self.t_spacing = spacing;
        Ok(self)
    }

    /// Prepend larger sigma values; the boundary value stays last.
    pub fn with_extra_sigmas(mut self, mut sigmas: Vec<f64>) -> Self {
        sigmas.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let boundary = *self.sigma_values.last().unwrap();
        sigmas.retain(|&s| s > boundary);
        sigmas.push(boundary);
        self.sigma_values = sigmas;
        self
    }

    /// Symmetric uniform grid inside [-T, T] containing 0; the extreme
    /// grid points stay within the declared height (under-coverage, never
    /// overshoot).
    pub fn t_values(&self) -> Vec<f64> {
        let steps = (self.t_max / self.t_spacing).floor() as i64;
        (-steps..=steps)
            .map(|k| k as f64 * self.t_spacing)
            .collect()
    }

    pub fn segments(&self) -> usize {
        self.interval_endpoints.len() - 1
    }
}

/// Prime sum form of log G over the primes in (lo, hi]:
/// sum_{p in I} g(p) chi(p) p^{-s}, with the prime-square discrepancy
/// bound sum_{D < p <= hi} p^{-2} + 1/D returned alongside, never folded in.
pub fn log_g_prime_sum(
    g: &MultiplicativeFunction,
    chi: &Character,
    interval: (u64, u64),
    s: HalfPlanePoint,
    table: &PrimeTable,
) -> Result<(Complex64, f64)> {
    let (lo, hi) = interval;
    let d = chi.modulus();
    let chi_table = chi.value_table();
    let mut acc = Complex64::new(0.0, 0.0);
    for &p in table.primes_in(lo, hi) {
        let p = p as u64;
        let w = chi_table[(p % d.max(1)) as usize];
        if w.re == 0.0 && w.im == 0.0 {
            continue;
        }
        let gp = g.prime_value(p)?;
        let lp = (p as f64).ln();
        let p_pow = (-s.sigma * lp).exp();
        acc += gp * w * Complex64::from_polar(p_pow, -s.t * lp);
    }
    let mut correction = 1.0 / d.max(1) as f64;
    for &p in table.primes_in(d, hi) {
        correction += 1.0 / (p as f64 * p as f64);
    }
    Ok((acc, correction))
}

/// Truncated series sum_{n<=x} g(n) chi(n) n^{-s}, with the tail bound
/// x^{1-sigma}/(sigma-1) reported alongside.
pub fn g_truncated(
    g: &MultiplicativeFunction,
    chi: &Character,
    s: HalfPlanePoint,
    x: u64,
    table: &PrimeTable,
) -> Result<(Complex64, f64)> {
    let values = g.batch_evaluate(x, table)?;
    let d = chi.modulus().max(1);
    let chi_table = chi.value_table();
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 1..=x {
        let w = chi_table[(n % d) as usize];
        if w.re == 0.0 && w.im == 0.0 {
            continue;
        }
        let ln_n = (n as f64).ln();
        acc += values[n as usize] * w * Complex64::from_polar((-s.sigma * ln_n).exp(), -s.t * ln_n);
    }
    let tail = (x as f64).powf(1.0 - s.sigma) / (s.sigma - 1.0);
    Ok((acc, tail))
}

/// What the interval scanner maximizes per character.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanObjective {
    /// max over grid of |sum over interval|
    MaxModulus,
    /// max over grid of Re(sum over interval)
    MaxReal,
}

/// For every character mod D, the maximum over the grid (all sigma, all t,
/// all interval pairs) of the chosen functional of
/// sum_{p in (e_i, e_j]} coeff(p) chi(p) p^{-s}.
///
/// Primes are grouped by (residue class, segment) bucket once, so each t
/// step is a sequential rotate-and-reduce over contiguous ranges and the
/// character combination costs phi(D)^2 per segment instead of a prime
/// pass per character. When every coefficient is real, conjugation ties
/// the value at (chi, -t) to (conj chi, t), so only t >= 0 is scanned and
/// conjugate characters merge their maxima afterwards; complex
/// coefficients get the full symmetric scan.
pub fn character_interval_maxima(
    table: &PrimeTable,
    group: &CharacterGroup,
    coeff: &(dyn Fn(u64) -> Complex64 + Sync),
    grid: &SemiStripGrid,
    objective: ScanObjective,
) -> Vec<f64> {
    let d = group.modulus();
    let phi = group.phi() as usize;
    let primes = table.primes_in(grid.d, grid.x);
    let n_seg = grid.segments();
    let n = primes.len();

    // residue-class compaction
    let residues = group.reduced_residues();
    let mut class_of_residue = vec![usize::MAX; d.max(1) as usize];
    for (i, &a) in residues.iter().enumerate() {
        class_of_residue[a as usize] = i;
    }
    let n_class = residues.len();
    let n_bucket = n_class * n_seg;

    // bucket of each prime, then a stable grouping by bucket
    let bucket_of: Vec<u32> = primes
        .iter()
        .map(|&p| {
            let pf = p as f64;
            let j = grid
                .interval_endpoints
                .partition_point(|&e| e < pf)
                .max(1)
                .min(n_seg);
            let cls = class_of_residue[(p as u64 % d) as usize];
            (cls * n_seg + (j - 1)) as u32
        })
        .collect();
    let mut counts = vec![0u32; n_bucket + 1];
    for &b in &bucket_of {
        counts[b as usize + 1] += 1;
    }
    for i in 0..n_bucket {
        counts[i + 1] += counts[i];
    }
    let bucket_start = counts;
    let mut slot = bucket_start.clone();
    let mut order = vec![0u32; n];
    for (i, &b) in bucket_of.iter().enumerate() {
        order[slot[b as usize] as usize] = i as u32;
        slot[b as usize] += 1;
    }
    let ln_p: Vec<f64> = order
        .iter()
        .map(|&i| (primes[i as usize] as f64).ln())
        .collect();
    let coeffs: Vec<Complex64> = order
        .iter()
        .map(|&i| coeff(primes[i as usize] as u64))
        .collect();
    let all_real = coeffs.iter().all(|c| c.im == 0.0);

    // character values on the compact classes
    let chars = group.characters();
    let char_re: Vec<Vec<f64>> = chars
        .iter()
        .map(|c| residues.iter().map(|&a| c.value(a).re).collect())
        .collect();
    let char_im: Vec<Vec<f64>> = chars
        .iter()
        .map(|c| residues.iter().map(|&a| c.value(a).im).collect())
        .collect();
    let conj_index: Vec<usize> = chars.iter().map(|c| c.conj().index()).collect();

    // half-range scan is exact for real coefficients (see doc comment)
    let steps = (grid.t_max / grid.t_spacing).floor() as i64;
    let t_starts: Vec<f64> = if all_real {
        vec![0.0]
    } else {
        vec![-(steps as f64) * grid.t_spacing]
    };
    let n_steps = if all_real { steps + 1 } else { 2 * steps + 1 };

    let mut best = vec![f64::NEG_INFINITY; phi];
    let mut z_re = vec![0.0f64; n];
    let mut z_im = vec![0.0f64; n];
    let mut rot_re = vec![0.0f64; n];
    let mut rot_im = vec![0.0f64; n];
    let mut w_re = vec![0.0f64; n_bucket];
    let mut w_im = vec![0.0f64; n_bucket];
    let mut seg_re = vec![0.0f64; n_seg];
    let mut seg_im = vec![0.0f64; n_seg];
    let mut prefix = vec![Complex64::new(0.0, 0.0); n_seg + 1];

    for &sigma in &grid.sigma_values {
        for &t0 in &t_starts {
            for i in 0..n {
                let damp = (-sigma * ln_p[i]).exp();
                let c = coeffs[i] * damp;
                let (s, cth) = (-t0 * ln_p[i]).sin_cos();
                z_re[i] = c.re * cth - c.im * s;
                z_im[i] = c.re * s + c.im * cth;
                let (rs, rc) = (-grid.t_spacing * ln_p[i]).sin_cos();
                rot_re[i] = rc;
                rot_im[i] = rs;
            }
            for step in 0..n_steps {
                if step > 0 {
                    for i in 0..n {
                        let zr = z_re[i] * rot_re[i] - z_im[i] * rot_im[i];
                        let zi = z_re[i] * rot_im[i] + z_im[i] * rot_re[i];
                        z_re[i] = zr;
                        z_im[i] = zi;
                    }
                }
                for b in 0..n_bucket {
                    let (lo, hi) = (bucket_start[b] as usize, bucket_start[b + 1] as usize);
                    let mut sr = 0.0f64;
                    let mut si = 0.0f64;
                    for i in lo..hi {
                        sr += z_re[i];
                        si += z_im[i];
                    }
                    w_re[b] = sr;
                    w_im[b] = si;
                }
                for ci in 0..phi {
                    let tr = &char_re[ci];
                    let ti = &char_im[ci];
                    seg_re.iter_mut().for_each(|v| *v = 0.0);
                    seg_im.iter_mut().for_each(|v| *v = 0.0);
                    for cls in 0..n_class {
                        let (cr, cim) = (tr[cls], ti[cls]);
                        if cr == 0.0 && cim == 0.0 {
                            continue;
                        }
                        let base = cls * n_seg;
                        for j in 0..n_seg {
                            let br = w_re[base + j];
                            let bi = w_im[base + j];
                            seg_re[j] += cr * br - cim * bi;
                            seg_im[j] += cr * bi + cim * br;
                        }
                    }
                    prefix[0] = Complex64::new(0.0, 0.0);
                    for j in 0..n_seg {
                        prefix[j + 1] = prefix[j] + Complex64::new(seg_re[j], seg_im[j]);
                    }
                    let value = match objective {
                        ScanObjective::MaxModulus => {
                            let mut m = 0.0f64;
                            for i in 0..n_seg {
                                for j in (i + 1)..=n_seg {
                                    m = m.max((prefix[j] - prefix[i]).norm_sqr());
                                }
                            }
                            m.sqrt()
                        }
                        ScanObjective::MaxReal => {
                            let mut running_min = prefix[0].re;
                            let mut m = f64::NEG_INFINITY;
                            for j in 1..=n_seg {
                                m = m.max(prefix[j].re - running_min);
                                running_min = running_min.min(prefix[j].re);
                            }
                            m
                        }
                    };
                    if value > best[ci] {
                        best[ci] = value;
                    }
                }
            }
        }
    }
    if all_real {
        let merged: Vec<f64> = (0..phi)
            .map(|ci| best[ci].max(best[conj_index[ci]]))
            .collect();
        return merged;
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacterFinding {
    #[serde(flatten)]
    pub character: CharacterId,
    /// Position in the group enumeration.
    pub index: usize,
    pub order: u64,
    #[serde(rename = "max_logG")]
    pub max_log_g: f64,
    pub exceptional: bool,
}

/// Classifier output relative to the triple (alpha, D, x).
#[derive(Debug, Clone, Serialize)]
pub struct ExceptionalReport {
    #[serde(rename = "D")]
    pub modulus: u64,
    pub x: u64,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub t_spacing: f64,
    pub segments: usize,
    pub sigma_values: Vec<f64>,
    pub threshold_base: f64,
    pub grid_slack: f64,
    pub threshold_effective: f64,
    /// Literal sum_{D<p<=x} p^{-2} + 1/D carried next to every prime-sum
    /// logarithm.
    pub correction_bound: f64,
    /// All nonprincipal characters with their grid maxima.
    pub characters: Vec<CharacterFinding>,
    /// Group indices of the exceptional set J.
    pub exceptional_indices: Vec<usize>,
    /// Orders of the pairwise products chi_j conj(chi_r), j < r in J.
    pub pair_orders: Vec<(usize, usize, u64)>,
    /// Reference count alpha^{-2} against which |J| is reported.
    pub alpha_inv_sq: f64,
    pub disclaimer: String,
}

/// Classify the nonprincipal characters mod D as exceptional or not for
/// the function g (which must vanish on primes <= D), relative to
/// (alpha, D, x). The continuum maxima are replaced by grid maxima, so J
/// is a lower approximation; `grid_slack` is added to the threshold and
/// declared in the report.
pub fn classify_exceptional(
    g: &MultiplicativeFunction,
    group: &CharacterGroup,
    x: u64,
    alpha: f64,
    grid: &SemiStripGrid,
    grid_slack: f64,
    table: &PrimeTable,
) -> Result<ExceptionalReport> {
    let d = group.modulus();
    if d < 2 {
        return Err(Error::Domain("classifier needs D >= 2".into()));
    }
    if x < d * d {
        return Err(Error::Domain(format!("classifier needs x >= D^2, got D={d}, x={x}")));
    }
    if alpha <= 0.0 {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    if x > table.bound() {
        return Err(Error::Domain(format!(
            "x = {x} beyond table bound {}",
            table.bound()
        )));
    }
    for &p in table.primes_in(1, d) {
        if g.prime_value(p as u64)?.norm() != 0.0 {
            return Err(Error::Domain(format!(
                "classifier setting requires g to vanish on p <= D; g({p}) != 0"
            )));
        }
    }
    let ln_ratio = (x as f64).ln() / (d as f64).ln();
    let t_cap = ((d as f64).ln() * ln_ratio.powf(alpha * alpha / 9.0)).exp();
    if grid.t_max > t_cap {
        return Err(Error::Config(format!(
            "grid T = {} exceeds the constraint {t_cap:.6}",
            grid.t_max
        )));
    }
    if grid.d != d || grid.x != x {
        return Err(Error::Config("grid (D, x) does not match the classifier call".into()));
    }

    let maxima = character_interval_maxima(
        table,
        group,
        &|p| g.prime_value(p).unwrap_or_default(),
        grid,
        ScanObjective::MaxModulus,
    );

    let threshold_base = alpha * ln_ratio.ln();
    let threshold_effective = threshold_base + grid_slack;

    let mut correction = 1.0 / d as f64;
    for &p in table.primes_in(d, x) {
        correction += 1.0 / (p as f64 * p as f64);
    }

    let chars = group.characters();
    let mut characters = Vec::new();
    let mut exceptional_indices = Vec::new();
    for (i, chi) in chars.iter().enumerate() {
        if chi.is_principal() {
            continue;
        }
        let exceptional = maxima[i] >= threshold_effective;
        if exceptional {
            exceptional_indices.push(i);
        }
        characters.push(CharacterFinding {
            character: chi.id(),
            index: i,
            order: chi.order(),
            max_log_g: maxima[i],
            exceptional,
        });
    }
    let mut pair_orders = Vec::new();
    for (a, &i) in exceptional_indices.iter().enumerate() {
        for &j in exceptional_indices.iter().skip(a + 1) {
            pair_orders.push((i, j, chars[i].mul(&chars[j].conj()).order()));
        }
    }
    Ok(ExceptionalReport {
        modulus: d,
        x,
        alpha,
        t_max: grid.t_max,
        t_spacing: grid.t_spacing,
        segments: grid.segments(),
        sigma_values: grid.sigma_values.clone(),
        threshold_base,
        grid_slack,
        threshold_effective,
        correction_bound: correction,
        characters,
        exceptional_indices,
        pair_orders,
        alpha_inv_sq: 1.0 / (alpha * alpha),
        disclaimer: "grid maxima are lower bounds for the continuum suprema; \
                     J may under-fill the true exceptional set"
            .into(),
    })
}

/// Result of the Plancherel mass comparison: the line integral of
/// |F(s)/s|^2 against the exact piecewise integral of |M(y)|^2 y^{-2s-1}.
#[derive(Debug, Clone, Serialize)]
pub struct PlancherelCheck {
    pub sigma: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub relative_error: f64,
    pub t_cap: f64,
    pub quadrature_points: usize,
    /// |Simpson(delta) - Simpson(delta/2)| convergence indicator.
    pub quadrature_drift: f64,
    pub tail_estimate: f64,
    pub converged: bool,
}

/// Check id i7: both integrals computed by independent routes for a
/// finitely supported f (slice indexed by n, entry 0 unused).
pub fn plancherel_check(
    f: &[Complex64],
    sigma: f64,
    t_cap: Option<f64>,
) -> Result<PlancherelCheck> {
    if sigma <= 1.0 {
        return Err(Error::Domain(format!("sigma = {sigma} must exceed 1")));
    }
    let n_max = f.len() - 1;
    if n_max > 1000 {
        return Err(Error::Domain(format!("support {n_max} exceeds the 1000 cap")));
    }

    // rhs: M is a step function; integrate y^{-2 sigma - 1} exactly piecewise
    let two_sigma = 2.0 * sigma;
    let mut rhs = 0.0;
    let mut m = Complex64::new(0.0, 0.0);
    for n in 1..=n_max {
        m += f[n];
        let a = (n as f64).powf(-two_sigma);
        let b = if n < n_max {
            ((n + 1) as f64).powf(-two_sigma)
        } else {
            0.0
        };
        rhs += m.norm_sqr() * (a - b) / two_sigma;
    }
    rhs *= std::f64::consts::TAU;

    if f.iter().all(|v| v.re == 0.0 && v.im == 0.0) {
        return Ok(PlancherelCheck {
            sigma,
            lhs: 0.0,
            rhs: 0.0,
            relative_error: 0.0,
            t_cap: 0.0,
            quadrature_points: 0,
            quadrature_drift: 0.0,
            tail_estimate: 0.0,
            converged: true,
        });
    }

    // mean square of |F| over long t ranges, used for the tail estimate
    let mean_sq: f64 = (1..=n_max)
        .map(|n| f[n].norm_sqr() * (n as f64).powf(-two_sigma))
        .sum();
    let t_cap = t_cap.unwrap_or_else(|| {
        let needed = mean_sq * 2.0 / (1e-3 * rhs.max(1e-300));
        needed.clamp(5_000.0, 20_000.0)
    });

    // uniform samples of |F(sigma+i tau)/s|^2 with incremental phases
    let support: Vec<(f64, Complex64)> = (1..=n_max)
        .filter(|&n| f[n].re != 0.0 || f[n].im != 0.0)
        .map(|n| ((n as f64).ln(), f[n] * (n as f64).powf(-sigma)))
        .collect();
    let delta = 0.025f64;
    let mut steps = (2.0 * t_cap / delta).ceil() as usize;
    if steps % 4 != 0 {
        steps += 4 - steps % 4;
    }
    let mut z: Vec<Complex64> = support
        .iter()
        .map(|&(ln_n, c)| c * Complex64::from_polar(1.0, t_cap * ln_n))
        .collect();
    let rot: Vec<Complex64> = support
        .iter()
        .map(|&(ln_n, _)| Complex64::from_polar(1.0, -delta * ln_n))
        .collect();
    let mut samples = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        if step > 0 {
            for (zi, ri) in z.iter_mut().zip(&rot) {
                *zi *= *ri;
            }
        }
        let tau = -t_cap + step as f64 * delta;
        let f_val: Complex64 = z.iter().sum();
        samples.push(f_val.norm_sqr() / (sigma * sigma + tau * tau));
    }
    let simpson = |stride: usize| -> f64 {
        let h = delta * stride as f64;
        let mut acc = samples[0] + samples[steps];
        let mut i = stride;
        let mut toggle = true;
        while i < steps {
            acc += samples[i] * if toggle { 4.0 } else { 2.0 };
            toggle = !toggle;
            i += stride;
        }
        acc * h / 3.0
    };
    let fine = simpson(1);
    let coarse = simpson(2);
    let quadrature_drift = (fine - coarse).abs();

    let tail_estimate =
        mean_sq * 2.0 * (std::f64::consts::FRAC_PI_2 - (t_cap / sigma).atan()) / sigma;
    let lhs = fine + tail_estimate;
    let relative_error = (lhs - rhs).abs() / rhs.max(1e-300);
    Ok(PlancherelCheck {
        sigma,
        lhs,
        rhs,
        relative_error,
        t_cap,
        quadrature_points: steps + 1,
        quadrature_drift,
        tail_estimate,
        converged: quadrature_drift <= 1e-3 * rhs.max(1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::build_prime_table;
    use crate::dirichlet::build_character_group;
    use crate::multfun::{builtin, mobius_tail, random_unit_disc, unit_tail};
    use crate::rng::SplitMix64;

    #[test]
    fn half_plane_guard() {
        assert!(HalfPlanePoint::new(1.0, 0.0).is_err());
        assert!(HalfPlanePoint::new(1.5, -3.0).is_ok());
    }

    #[test]
    fn prime_sum_examples() {
        let table = build_prime_table(1000).unwrap();
        let group = build_character_group(1).unwrap();
        let chi = group.principal();
        let one = builtin("one").unwrap();
        let s = HalfPlanePoint::new(2.0, 0.0).unwrap();

        let (empty, _) = log_g_prime_sum(&one, &chi, (10, 10), s, &table).unwrap();
        assert_eq!(empty.norm(), 0.0);

        let (v, corr) = log_g_prime_sum(&one, &chi, (2, 10), s, &table).unwrap();
        let expect = 1.0 / 9.0 + 1.0 / 25.0 + 1.0 / 49.0;
        assert!((v - Complex64::new(expect, 0.0)).norm() < 1e-15);
        assert!(corr > 0.0);

        // triangle inequality against sum of p^{-sigma}
        let g = random_unit_disc(3);
        let s = HalfPlanePoint::new(1.3, 2.0).unwrap();
        let (v, _) = log_g_prime_sum(&g, &chi, (2, 500), s, &table).unwrap();
        let cap: f64 = table
            .primes_in(2, 500)
            .iter()
            .map(|&p| (p as f64).powf(-1.3))
            .sum();
        assert!(v.norm() <= cap + 1e-12);
    }

    #[test]
    fn truncated_series_approaches_zeta_values() {
        let table = build_prime_table(200_000).unwrap();
        let group = build_character_group(1).unwrap();
        let chi = group.principal();
        let s = HalfPlanePoint::new(2.0, 0.0).unwrap();

        let one = builtin("one").unwrap();
        let (v, tail) = g_truncated(&one, &chi, s, 200_000, &table).unwrap();
        let zeta2 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        assert!((v.re - zeta2).abs() <= tail + 1e-12, "{} vs {zeta2} (tail {tail})", v.re);

        let mu = builtin("mobius").unwrap();
        let (v, tail) = g_truncated(&mu, &chi, s, 200_000, &table).unwrap();
        assert!((v.re - 1.0 / zeta2).abs() <= tail + 1e-12);

        let (v, _) = g_truncated(&one, &chi, s, 1, &table).unwrap();
        assert_eq!(v, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn euler_product_matches_truncated_series() {
        let table = build_prime_table(3000).unwrap();
        let mut rng = SplitMix64::new(404);
        for trial in 0..20 {
            let d = rng.next_range(1, 13);
            let group = build_character_group(d).unwrap();
            let chi = group.character_by_index(rng.next_range(0, group.phi()) as usize);
            let seed = rng.next_u64();
            let g = crate::multfun::MultiplicativeFunction::completely(
                "random-cm",
                true,
                move |p| crate::rng::keyed_unit_disc(seed, p, 1),
            );
            let sigma = 1.5 + rng.next_f64();
            let t = 4.0 * (rng.next_f64() - 0.5);
            let s = HalfPlanePoint::new(sigma, t).unwrap();
            let x = 3000u64;
            let (series, tail) = g_truncated(&g, &chi, s, x, &table).unwrap();
            // Euler product over p <= x: 1/(1 - g(p)chi(p)p^{-s})
            let mut log_prod = Complex64::new(0.0, 0.0);
            for &p in table.primes_in(1, x) {
                let p = p as u64;
                let lp = (p as f64).ln();
                let z = g.prime_value(p).unwrap()
                    * chi.value(p)
                    * Complex64::from_polar((-sigma * lp).exp(), -t * lp);
                log_prod += -(Complex64::new(1.0, 0.0) - z).ln();
            }
            let product = log_prod.exp();
            // product over p <= x covers all x-smooth n; difference is below
            // the combined tails
            let diff = (product - series).norm();
            assert!(diff <= 2.0 * tail + 1e-9, "trial {trial}: diff {diff}, tail {tail}");
        }
    }

    #[test]
    fn grid_invariants() {
        let grid = SemiStripGrid::new(5, 1_000_000, 10.0, 64).unwrap();
        let ln_x = (1_000_000f64).ln();
        assert!((grid.sigma_values.last().unwrap() - (1.0 + 1.0 / ln_x)).abs() < 1e-15);
        assert!(grid.t_spacing <= 1.0 / ln_x + 1e-15);
        assert_eq!(grid.interval_endpoints.len(), 65);
        assert!((grid.interval_endpoints[0] - 5.0).abs() < 1e-9);
        assert!((grid.interval_endpoints[64] - 1_000_000.0).abs() < 1e-3);
        // geometric spacing
        let r0 = grid.interval_endpoints[1] / grid.interval_endpoints[0];
        let r1 = grid.interval_endpoints[33] / grid.interval_endpoints[32];
        assert!((r0 - r1).abs() < 1e-9);
        let ts = grid.t_values();
        assert!(ts.iter().any(|&t| t == 0.0));
        assert!((ts.first().unwrap() + ts.last().unwrap()).abs() < 1e-12);

        assert!(SemiStripGrid::new(5, 1_000_000, 10.0, 64)
            .unwrap()
            .with_t_spacing(1.0)
            .is_err());
    }

    #[test]
    fn classifier_trivial_when_g_vanishes() {
        let table = build_prime_table(10_000).unwrap();
        let group = build_character_group(7).unwrap();
        let zero = crate::multfun::MultiplicativeFunction::general("zero-on-primes", true, |_, _| {
            Complex64::new(0.0, 0.0)
        });
        let grid = SemiStripGrid::new(7, 10_000, 5.0, 32).unwrap();
        let report =
            classify_exceptional(&zero, &group, 10_000, 0.5, &grid, 0.0, &table).unwrap();
        assert!(report.exceptional_indices.is_empty());
        for c in &report.characters {
            assert_eq!(c.max_log_g, 0.0);
            assert!(!c.exceptional);
        }
    }

    // A function built to pretend to be a fixed real character: braiding it
    // with that character gives prime sums close to sum p^{-sigma}, which
    // crosses the threshold once x/D is large.
    #[test]
    fn classifier_flags_the_pretending_character() {
        let table = build_prime_table(1_000_000).unwrap();
        let group = build_character_group(5).unwrap();
        let chi0 = group
            .characters()
            .into_iter()
            .find(|c| !c.is_principal() && c.is_real())
            .unwrap();
        let chi0_for_rule = chi0.clone();
        let g = crate::multfun::MultiplicativeFunction::completely(
            "pretender",
            true,
            move |p| {
                if p <= 5 {
                    Complex64::new(0.0, 0.0)
                } else {
                    chi0_for_rule.value(p).conj()
                }
            },
        );
        let alpha = 0.3;
        let x = 1_000_000u64;
        let ln_ratio = (x as f64).ln() / 5f64.ln();
        let t_cap = (5f64.ln() * ln_ratio.powf(alpha * alpha / 9.0)).exp();
        let grid = SemiStripGrid::new(5, x, t_cap.min(5.0), 64).unwrap();
        let report = classify_exceptional(&g, &group, x, alpha, &grid, 0.0, &table).unwrap();
        let finding = report
            .characters
            .iter()
            .find(|c| c.index == chi0.index())
            .unwrap();
        // the braided series contains sum over 5<p<=x of p^{-sigma}
        let direct: f64 = table
            .primes_in(5, x)
            .iter()
            .map(|&p| (p as f64).powf(-(1.0 + 1.0 / (x as f64).ln())))
            .sum();
        assert!(finding.max_log_g >= direct - 1e-9);
        assert!(finding.exceptional, "max {} threshold {}", finding.max_log_g, report.threshold_effective);
        assert!(report.exceptional_indices.contains(&chi0.index()));
    }

    #[test]
    fn classifier_is_monotone_in_alpha_and_respects_t_cap() {
        let table = build_prime_table(40_000).unwrap();
        let group = build_character_group(7).unwrap();
        let g = mobius_tail(7);
        let x = 40_000u64;
        let grid = SemiStripGrid::new(7, x, 3.0, 32).unwrap();
        let r1 = classify_exceptional(&g, &group, x, 0.05, &grid, 0.0, &table).unwrap();
        let r2 = classify_exceptional(&g, &group, x, 0.10, &grid, 0.0, &table).unwrap();
        for idx in &r2.exceptional_indices {
            assert!(r1.exceptional_indices.contains(idx));
        }
        // threshold grows with alpha
        assert!(r2.threshold_effective > r1.threshold_effective);

        // an over-tall grid violates the T-constraint
        let tall = SemiStripGrid::new(7, x, 1e9, 32).unwrap();
        assert!(matches!(
            classify_exceptional(&g, &group, x, 0.5, &tall, 0.0, &table),
            Err(Error::Config(_))
        ));

        // g must vanish below D
        let bad = builtin("one").unwrap();
        assert!(matches!(
            classify_exceptional(&bad, &group, x, 0.5, &grid, 0.0, &table),
            Err(Error::Domain(_))
        ));
    }

    // Restriction remark: a character non-exceptional for (alpha, D, N)
    // stays non-exceptional for (alpha, D, x), x <= N, once the threshold
    // picks up the alpha log(1/gamma) correction, because every interval of
    // (D, x] is an interval of (D, N].
    #[test]
    fn classifier_restriction_containment() {
        let table = build_prime_table(100_000).unwrap();
        let group = build_character_group(11).unwrap();
        let g = mobius_tail(11);
        let n_big = 100_000u64;
        let gamma = (40_000f64).ln() / (n_big as f64).ln();
        let x_small = 40_000u64;
        let alpha = 0.12;

        let grid_big = SemiStripGrid::new(11, n_big, 2.0, 64).unwrap();
        let grid_small = SemiStripGrid::new(11, x_small, 2.0, 64).unwrap();
        let r_big = classify_exceptional(&g, &group, n_big, alpha, &grid_big, 0.0, &table).unwrap();
        let slack = alpha * (1.0 / gamma).ln();
        let r_small =
            classify_exceptional(&g, &group, x_small, alpha, &grid_small, slack, &table).unwrap();
        for idx in &r_small.exceptional_indices {
            assert!(
                r_big.exceptional_indices.contains(idx),
                "character {idx} exceptional for the restricted range only"
            );
        }
    }

    #[test]
    fn scanner_matches_direct_evaluation_on_small_case() {
        let table = build_prime_table(2000).unwrap();
        let group = build_character_group(5).unwrap();
        let g = unit_tail(5);
        let grid = SemiStripGrid::new(5, 2000, 1.0, 8).unwrap();
        let maxima = character_interval_maxima(
            &table,
            &group,
            &|p| g.prime_value(p).unwrap_or_default(),
            &grid,
            ScanObjective::MaxModulus,
        );
        // direct: for each character and grid cell, sum the primes again
        // with the same float endpoint comparisons the scanner uses
        let chars = group.characters();
        let t_values = grid.t_values();
        for (ci, chi) in chars.iter().enumerate() {
            let mut best = 0.0f64;
            for &sigma in &grid.sigma_values {
                for &t in &t_values {
                    for i in 0..grid.segments() {
                        for j in (i + 1)..=grid.segments() {
                            let lo = grid.interval_endpoints[i];
                            let hi = grid.interval_endpoints[j];
                            let mut acc = Complex64::new(0.0, 0.0);
                            for &p in table.primes_in(5, 2000) {
                                let pf = p as f64;
                                if pf <= lo || pf > hi {
                                    continue;
                                }
                                let p = p as u64;
                                let lp = pf.ln();
                                acc += g.prime_value(p).unwrap()
                                    * chi.value(p)
                                    * Complex64::from_polar((-sigma * lp).exp(), -t * lp);
                            }
                            best = best.max(acc.norm());
                        }
                    }
                }
            }
            assert!(
                (maxima[ci] - best).abs() < 1e-9,
                "char {ci}: scanner {} direct {best}",
                maxima[ci]
            );
        }
    }

    // Complex coefficients break the conjugation symmetry, so this drives
    // the full-range scan path.
    #[test]
    fn scanner_matches_direct_evaluation_with_complex_coefficients() {
        let table = build_prime_table(500).unwrap();
        let group = build_character_group(5).unwrap();
        let coeffs: std::collections::HashMap<u64, Complex64> = table
            .primes_in(5, 500)
            .iter()
            .map(|&p| (p as u64, crate::rng::keyed_unit_disc(71, p as u64, 1)))
            .collect();
        let grid = SemiStripGrid::for_scan(5, 500, 0.5, 4, vec![1.0], 0.05).unwrap();
        let maxima = character_interval_maxima(
            &table,
            &group,
            &|p| coeffs[&p],
            &grid,
            ScanObjective::MaxModulus,
        );
        let chars = group.characters();
        for (ci, chi) in chars.iter().enumerate() {
            let mut best = 0.0f64;
            for &t in &grid.t_values() {
                for i in 0..grid.segments() {
                    for j in (i + 1)..=grid.segments() {
                        let lo = grid.interval_endpoints[i];
                        let hi = grid.interval_endpoints[j];
                        let mut acc = Complex64::new(0.0, 0.0);
                        for &p in table.primes_in(5, 500) {
                            let pf = p as f64;
                            if pf <= lo || pf > hi {
                                continue;
                            }
                            let lp = pf.ln();
                            acc += coeffs[&(p as u64)]
                                * chi.value(p as u64)
                                * Complex64::from_polar((-1.0 * lp).exp(), -t * lp);
                        }
                        best = best.max(acc.norm());
                    }
                }
            }
            assert!(
                (maxima[ci] - best).abs() < 1e-9,
                "char {ci}: scanner {} direct {best}",
                maxima[ci]
            );
        }
    }

    #[test]
    fn plancherel_point_mass_and_trivial_cases() {
        let zero = vec![Complex64::new(0.0, 0.0); 11];
        let r = plancherel_check(&zero, 1.5, None).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));

        // f supported at n = 1: rhs = 2 pi / (2 sigma) exactly
        for &sigma in &[1.2f64, 1.5, 2.0] {
            let mut f = vec![Complex64::new(0.0, 0.0); 2];
            f[1] = Complex64::new(1.0, 0.0);
            let r = plancherel_check(&f, sigma, None).unwrap();
            let exact = std::f64::consts::PI / sigma;
            assert!((r.rhs - exact).abs() < 1e-12);
            assert!(r.relative_error < 1e-2, "sigma {sigma}: rel {}", r.relative_error);
            assert!(r.converged);
        }
    }

    #[test]
    fn plancherel_random_support() {
        let mut rng = SplitMix64::new(31337);
        for trial in 0..4 {
            let mut f = vec![Complex64::new(0.0, 0.0); 101];
            for v in f.iter_mut().skip(1) {
                *v = rng.next_unit_disc();
            }
            let r = plancherel_check(&f, 1.5, None).unwrap();
            assert!(
                r.relative_error <= 1e-2,
                "trial {trial}: rel {} (lhs {}, rhs {})",
                r.relative_error,
                r.lhs,
                r.rhs
            );
        }
    }
}
