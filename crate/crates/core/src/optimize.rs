//! Conjecture machinery: enumeration of algebra equivalence classes and
//! Riemannian steepest descent of the NRC long-time average over the
//! unitary group.
//!
//! The objective is `F(U) = G_NRC` for the eigenbasis given by the columns
//! of `U`, measured against the canonical algebra of a class (identity
//! framing). Steps follow geodesics `U <- expm(-mu G_U) U` with the
//! skew-Hermitian Riemannian gradient `G_U = Gamma U^dagger - U Gamma^dagger`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::gtps::{AlgebraRep, GtpsSpec, Sector};
use crate::linalg::{expm_i_hermitian, haar_unitary, reunitarize, ComplexMatrix, I, ZERO};
use crate::scramble::{conjectured_min, nrc_overlap, ReducedStates};

/// Largest dimension for which the classes themselves are materialised.
pub const MAX_STORED_DIM: usize = 64;

/// Gap below which a class counts as violating the conjectured minimum.
pub const VIOLATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEnumeration {
    pub dim: usize,
    pub classes: Vec<GtpsSpec>,
    pub count: u64,
}

/// Integer partitions of `d` with parts in non-increasing order, listed in
/// reverse lexicographic order (`[d]` first, `[1; d]` last).
pub fn partitions(d: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=left.min(max)).rev() {
            cur.push(p);
            rec(left - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, d, &mut Vec::new(), &mut out);
    out
}

/// Ordered factor pairs `(n, m / n)` of `m`, lexicographic in `n`.
/// Factor pairs of one part size, and the multisets of them to pick.
type PartChoices = (Vec<(usize, usize)>, Vec<Vec<usize>>);

fn factor_pairs(m: usize) -> Vec<(usize, usize)> {
    (1..=m).filter(|n| m.is_multiple_of(*n)).map(|n| (n, m / n)).collect()
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).ok()
}

/// Parts of a partition grouped as `(value, multiplicity)`.
fn grouped(parts: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &p in parts {
        match out.last_mut() {
            Some((v, r)) if *v == p => *r += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

/// Multisets of size `r` drawn from `0..k`, as non-decreasing index lists.
fn multisets(k: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, r: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in from..k {
            cur.push(i);
            rec(k, r, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, r, 0, &mut Vec::new(), &mut out);
    out
}

/// Every multiset of sectors `{(n_J, d_J)}` with `Sum n_J d_J = d`. Each
/// partition of `d` fixes the sector sizes; each part of size `m` then picks
/// one of the factor pairs of `m`, with repeated parts picking a multiset.
pub fn enumerate_classes(d: usize, counts_only: bool) -> Result<ClassEnumeration> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if !counts_only && d > MAX_STORED_DIM {
        return Err(Error::InvalidArgument(format!(
            "refusing to store the classes of d = {d} (limit {MAX_STORED_DIM}); use counts only"
        )));
    }
    let mut count: u64 = 0;
    let mut classes = Vec::new();
    for parts in partitions(d) {
        let groups = grouped(&parts);
        let mut here: u64 = 1;
        for &(m, r) in &groups {
            let k = factor_pairs(m).len() as u64;
            here = binomial(k + r as u64 - 1, r as u64)
                .and_then(|b| here.checked_mul(b))
                .ok_or_else(|| Error::InvalidArgument(format!("class count overflows at d = {d}")))?;
        }
        count = count
            .checked_add(here)
            .ok_or_else(|| Error::InvalidArgument(format!("class count overflows at d = {d}")))?;
        if counts_only {
            continue;
        }
        // cartesian product over distinct part sizes
        let choices: Vec<PartChoices> = groups
            .iter()
            .map(|&(m, r)| {
                let pairs = factor_pairs(m);
                let ms = multisets(pairs.len(), r);
                (pairs, ms)
            })
            .collect();
        let mut idx = vec![0usize; choices.len()];
        loop {
            let mut sectors = Vec::with_capacity(parts.len());
            for ((pairs, ms), &i) in choices.iter().zip(&idx) {
                sectors.extend(ms[i].iter().map(|&c| Sector::new(pairs[c].0, pairs[c].1)));
            }
            classes.push(GtpsSpec::new(sectors)?);
            let mut pos = choices.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < choices[pos].1.len() {
                    break;
                }
                idx[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX {
                break;
            }
        }
    }
    Ok(ClassEnumeration { dim: d, classes, count })
}

fn check_unitary_dim(spec: &GtpsSpec, u: &ComplexMatrix) -> Result<()> {
    let d = spec.dim();
    if u.rows() != d || u.cols() != d {
        return Err(dim_mismatch(format!("{d}x{d}"), format!("{}x{}", u.rows(), u.cols())));
    }
    Ok(())
}

/// NRC long-time average for the eigenbasis given by the columns of `u`,
/// against the canonical algebra of `spec`.
pub fn nrc_lta_of_unitary(spec: &GtpsSpec, u: &ComplexMatrix) -> Result<f64> {
    check_unitary_dim(spec, u)?;
    Ok(objective(spec, u).0)
}

/// Objective value together with the reduced states and Gram matrices the
/// gradient reuses.
fn objective(spec: &GtpsSpec, u: &ComplexMatrix) -> (f64, ReducedStates, [Vec<f64>; 4]) {
    let alg = AlgebraRep::canonical(spec.clone());
    let rs = ReducedStates::new(&alg, u);
    let grams = rs.grams();
    let d = spec.dim();
    (1.0 - nrc_overlap(&grams, d) / d as f64, rs, grams)
}

/// `Gamma_U = grad_{U*} F`, normalised so that
/// `dF = 2 Re Tr(Gamma^dagger dU)`.
pub fn euclidean_gradient(spec: &GtpsSpec, u: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_unitary_dim(spec, u)?;
    let (_, rs, grams) = objective(spec, u);
    Ok(gradient_from(spec, u, &rs, &grams))
}

fn gradient_from(spec: &GtpsSpec, u: &ComplexMatrix, rs: &ReducedStates, grams: &[Vec<f64>; 4]) -> ComplexMatrix {
    let d = spec.dim();
    let [aa, bap, aap, ba] = grams;
    let mut gamma = ComplexMatrix::zeros(d, d);
    let pref = -2.0 / d as f64;
    for (j, b) in rs.blocks.iter().enumerate() {
        let (n, dd) = (b.n, b.d);
        let (nf, df) = (n as f64, dd as f64);
        for k in 0..d {
            // Q^n = Sum_l c_kl (B^A'_kl / n + A^A_kl / d) rho^n_l, likewise Q^d
            let mut qn = vec![ZERO; n * n];
            let mut qd = vec![ZERO; dd * dd];
            for l in 0..d {
                let c = if k == l { 0.5 } else { 1.0 };
                let i = k * d + l;
                let wn = c * (bap[i] / nf + aa[i] / df);
                let wd = c * (ba[i] / df + aap[i] / nf);
                if wn != 0.0 {
                    for (q, r) in qn.iter_mut().zip(&rs.rho_n[j][l]) {
                        *q += r * wn;
                    }
                }
                if wd != 0.0 {
                    for (q, r) in qd.iter_mut().zip(&rs.rho_d[j][l]) {
                        *q += r * wd;
                    }
                }
            }
            for p in 0..n {
                for x in 0..dd {
                    let mut z = ZERO;
                    for q in 0..n {
                        z += qn[p * n + q] * u[(b.idx(q, x), k)];
                    }
                    for y in 0..dd {
                        z += qd[x * dd + y] * u[(b.idx(p, y), k)];
                    }
                    gamma[(b.idx(p, x), k)] = z * pref;
                }
            }
        }
    }
    gamma
}

/// Skew-Hermitian Riemannian gradient `Gamma U^dagger - U Gamma^dagger`.
pub fn riemannian_gradient(spec: &GtpsSpec, u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let gamma = euclidean_gradient(spec, u)?;
    Ok(skew_from(&gamma, u))
}

fn skew_from(gamma: &ComplexMatrix, u: &ComplexMatrix) -> ComplexMatrix {
    let a = gamma.matmul(&u.adjoint());
    &a - &a.adjoint()
}

/// Derivative of `F(expm(eps omega) u)` at `eps = 0` for skew-Hermitian
/// `omega`: `Re Tr(G_U omega^dagger)`, twice the inner product
/// `1/2 Re Tr(X Y^dagger)`.
pub fn directional_derivative(spec: &GtpsSpec, u: &ComplexMatrix, omega: &ComplexMatrix) -> Result<f64> {
    let g = riemannian_gradient(spec, u)?;
    if omega.rows() != g.rows() || omega.cols() != g.cols() {
        return Err(dim_mismatch(format!("{}x{}", g.rows(), g.cols()), format!("{}x{}", omega.rows(), omega.cols())));
    }
    Ok(g.data().iter().zip(omega.data()).map(|(a, b)| (a * b.conj()).re).sum())
}

/// `expm(-mu g) u` for skew-Hermitian `g`.
fn geodesic_step(g: &ComplexMatrix, u: &ComplexMatrix, mu: f64) -> Result<ComplexMatrix> {
    // -mu g = i mu (i g) and i g is Hermitian
    let h = g.scale(I);
    let h = (&h + &h.adjoint()).scale_re(0.5);
    Ok(expm_i_hermitian(&h, mu)?.matmul(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentOptions {
    pub eps: f64,
    pub max_iter: usize,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            eps: 1e-8,
            max_iter: 10_000,
            initial_step: 0.1,
            min_step: 1e-12,
        }
    }
}

impl DescentOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.initial_step > 0.0 && self.min_step > 0.0) {
            return Err(Error::InvalidArgument("descent tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentState {
    pub u: ComplexMatrix,
    pub value: f64,
    /// Frobenius norm of the Riemannian gradient at `u`.
    pub grad_norm: f64,
    pub step: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every accepted step, starting with the initial value.
    pub trace: Vec<f64>,
}

/// Gradient norm below which a point is treated as stationary.
const STATIONARY: f64 = 1e-12;

/// Steepest descent along geodesics with an Armijo step rule: the step
/// doubles while the doubled step still gives half the predicted decrease
/// and halves while the current one does not. Stops once an accepted step
/// changes the value by less than `eps`, the gradient vanishes, or the
/// step falls below `min_step`.
pub fn descend(spec: &GtpsSpec, u0: &ComplexMatrix, opts: &DescentOptions) -> Result<DescentState> {
    check_unitary_dim(spec, u0)?;
    opts.validate()?;
    u0.ensure_unitary(1e-8)?;
    let eval = |g: &ComplexMatrix, u: &ComplexMatrix, mu: f64| -> Result<(ComplexMatrix, f64, ReducedStates, [Vec<f64>; 4])> {
        let mut cand = geodesic_step(g, u, mu)?;
        if cand.unitarity_defect() > 1e-10 {
            cand = reunitarize(&cand);
        }
        let (v, rs, grams) = objective(spec, &cand);
        Ok((cand, v, rs, grams))
    };
    let mut u = u0.clone();
    let (mut value, rs, grams) = objective(spec, &u);
    let mut g = skew_from(&gradient_from(spec, &u, &rs, &grams), &u);
    let mut mu = opts.initial_step;
    let mut trace = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        // F(expm(-mu G) U) = F(U) - mu ||G||^2 + O(mu^2)
        let slope = g.norm_sq();
        if slope.sqrt() < STATIONARY {
            converged = true;
            break;
        }
        iterations += 1;
        let armijo = |v: f64, mu: f64| value - v >= 0.5 * mu * slope;
        let mut best = eval(&g, &u, mu)?;
        if armijo(best.1, mu) {
            for _ in 0..60 {
                let doubled = eval(&g, &u, 2.0 * mu)?;
                if !armijo(doubled.1, 2.0 * mu) {
                    break;
                }
                best = doubled;
                mu *= 2.0;
            }
        } else {
            while !armijo(best.1, mu) && mu >= opts.min_step {
                mu *= 0.5;
                best = eval(&g, &u, mu)?;
            }
            if mu < opts.min_step {
                converged = true;
                break;
            }
        }
        let (cand, v, rs, grams) = best;
        let drop = value - v;
        u = cand;
        value = v;
        g = skew_from(&gradient_from(spec, &u, &rs, &grams), &u);
        trace.push(value);
        if drop < opts.eps {
            converged = true;
            break;
        }
    }
    Ok(DescentState {
        grad_norm: g.norm(),
        u,
        value,
        step: mu,
        iterations,
        converged,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub spec: GtpsSpec,
    pub best_value: f64,
    pub conjectured_min: f64,
    pub gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub dim: usize,
    pub classes: Vec<ClassReport>,
    pub violations: usize,
}

/// Deterministic per-job seed.
pub fn job_seed(seed: u64, job: u64) -> u64 {
    // splitmix64 finaliser over the combined words
    let mut z = seed ^ job.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `restarts` Haar-random descents for every class of dimension `d`
/// and reports the best value per class. Classes run in parallel on the
/// current rayon pool; results do not depend on the pool size.
pub fn conjecture_suite(d: usize, restarts: usize, opts: &DescentOptions, seed: u64) -> Result<ConjectureReport> {
    opts.validate()?;
    if restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is needed".into()));
    }
    let classes = enumerate_classes(d, false)?.classes;
    let reports: Result<Vec<ClassReport>> = classes
        .into_par_iter()
        .enumerate()
        .map(|(ci, spec)| {
            let mut rng = ChaCha8Rng::seed_from_u64(job_seed(seed, ci as u64));
            let mut best: Option<DescentState> = None;
            for _ in 0..restarts {
                let u0 = haar_unitary(&mut rng, d);
                let st = descend(&spec, &u0, opts)?;
                if best.as_ref().is_none_or(|b| st.value < b.value) {
                    best = Some(st);
                }
            }
            let best = best.expect("restarts > 0");
            let cmin = conjectured_min(&spec);
            Ok(ClassReport {
                best_value: best.value,
                conjectured_min: cmin,
                gap: best.value - cmin,
                converged: best.converged,
                spec,
            })
        })
        .collect();
    let classes = reports?;
    let violations = classes.iter().filter(|c| c.gap < -VIOLATION_TOL).count();
    Ok(ConjectureReport { dim: d, classes, violations })
}
