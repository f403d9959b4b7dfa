//! Scrambling functionals: the A-OTOC at a fixed unitary, its long-time
//! average (exact resonance sum, NRC and NRC+ closed forms, numerical time
//! average), the conjectured minimum, and the Gaussian scrambling rate.
//!
//! Everything is evaluated in the algebra's distinguished frame, where the
//! projections are block partial traces. No d^2 x d^2 superoperator is ever
//! formed.

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::gtps::{AlgebraRep, Block, GtpsSpec};
use crate::linalg::{
    eig_hermitian, kron, partial_trace, scale_columns, ComplexMatrix, NrcClass, SpectralDecomp, C64, ZERO,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LtaMethod {
    Exact,
    Nrc,
    NrcPlus,
    TimeAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtaResult {
    pub value: f64,
    pub method: LtaMethod,
    /// Number of resonant eigenvector quadruples (exact method only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonance_count: Option<u64>,
    /// NRC evaluated on a spectrum with degenerate levels: the value depends
    /// on the eigenbasis chosen inside those levels.
    pub basis_dependent: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl LtaResult {
    fn new(value: f64, method: LtaMethod) -> Self {
        Self {
            value,
            method,
            resonance_count: None,
            basis_dependent: false,
            warnings: Vec::new(),
        }
    }
}

/// `1 - (Sum_J d_J + Sum_J n_J - d_Z) / d`.
pub fn conjectured_min(spec: &GtpsSpec) -> f64 {
    let sum_d: usize = spec.sectors().iter().map(|s| s.d).sum();
    let sum_n: usize = spec.sectors().iter().map(|s| s.n).sum();
    1.0 - (sum_d + sum_n - spec.d_z()) as f64 / spec.dim() as f64
}

/// `max{1 - 1/dim A, 1 - 1/dim A'}`, the largest value any A-OTOC can take.
pub fn upper_bound(spec: &GtpsSpec) -> f64 {
    let a = 1.0 - 1.0 / spec.dim_a() as f64;
    let ap = 1.0 - 1.0 / spec.dim_aprime() as f64;
    a.max(ap)
}

fn check_square(alg: &AlgebraRep, m: &ComplexMatrix) -> Result<()> {
    let d = alg.dim();
    if m.rows() != d || m.cols() != d {
        return Err(dim_mismatch(format!("{d}x{d}"), format!("{}x{}", m.rows(), m.cols())));
    }
    Ok(())
}

/// A-OTOC of `alg` under the unitary channel `x -> u x u^dagger`:
/// `1 - (1/d) Sum_gamma ||P_A'(u f_gamma u^dagger)||^2`.
pub fn aotoc_at(alg: &AlgebraRep, u: &ComplexMatrix) -> Result<f64> {
    check_square(alg, u)?;
    u.ensure_unitary(1e-8)?;
    Ok(aotoc_local(alg, &alg.to_local(u)))
}

/// A-OTOC with `u` already expressed in the distinguished frame.
pub(crate) fn aotoc_local(alg: &AlgebraRep, ul: &ComplexMatrix) -> f64 {
    let blocks = alg.blocks();
    let mut acc = 0.0;
    for bj in &blocks {
        let s2 = 1.0 / bj.n as f64;
        for p in 0..bj.n {
            for q in 0..bj.n {
                // P_A'(u f u^dagger) for f = |p><q| (x) 1/sqrt(n) in sector J
                for bt in &blocks {
                    let mut sq = 0.0;
                    for p2 in 0..bt.n {
                        for q2 in 0..bt.n {
                            let mut z = ZERO;
                            for k in 0..bj.d {
                                let (cp, cq) = (bj.idx(p, k), bj.idx(q, k));
                                for k2 in 0..bt.d {
                                    z += ul[(bt.idx(p2, k2), cp)] * ul[(bt.idx(q2, k2), cq)].conj();
                                }
                            }
                            sq += z.norm_sqr();
                        }
                    }
                    acc += sq * s2 / bt.d as f64;
                }
            }
        }
    }
    1.0 - acc / alg.dim() as f64
}

/// Instantaneous A-OTOC under `exp(i t h)` at each of `times`.
pub fn aotoc_curve(alg: &AlgebraRep, h: &ComplexMatrix, times: &[f64]) -> Result<Vec<f64>> {
    check_square(alg, h)?;
    let spec = eig_hermitian(h, 0.0, 0.0)?;
    let wl = alg.vectors_to_local(&spec.eigenvectors);
    let wl_adj = wl.adjoint();
    Ok(times
        .iter()
        .map(|&t| {
            let phases: Vec<C64> = spec.energies.iter().map(|&e| C64::from_polar(1.0, t * e)).collect();
            let ul = scale_columns(&wl, &phases).matmul(&wl_adj);
            aotoc_local(alg, &ul)
        })
        .collect())
}

/// Uniform-grid mean of the A-OTOC over `t_i = t_max i/(samples-1)`.
pub fn lta_time_average(alg: &AlgebraRep, h: &ComplexMatrix, t_max: f64, samples: usize) -> Result<LtaResult> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument("time average needs at least 2 samples".into()));
    }
    let times: Vec<f64> = (0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect();
    let curve = aotoc_curve(alg, h, &times)?;
    let mean = curve.iter().sum::<f64>() / samples as f64;
    Ok(LtaResult::new(mean, LtaMethod::TimeAverage))
}

/// Coefficients of every column of `phi` in every sector, `[J][a][p*d_J + k]`.
fn sector_coeffs(blocks: &[Block], phi: &ComplexMatrix) -> Vec<Vec<Vec<C64>>> {
    blocks
        .iter()
        .map(|b| {
            (0..phi.cols())
                .map(|a| {
                    let mut v = Vec::with_capacity(b.n * b.d);
                    for p in 0..b.n {
                        for k in 0..b.d {
                            v.push(phi[(b.idx(p, k), a)]);
                        }
                    }
                    v
                })
                .collect()
        })
        .collect()
}

/// Matrix elements `<phi_a| e_alpha |phi_b>` and `<phi_a| f_gamma |phi_b>`
/// of the basis operators in an eigenbasis.
struct ElementBuilder {
    blocks: Vec<Block>,
    coeffs: Vec<Vec<Vec<C64>>>,
    alpha_off: Vec<usize>,
    gamma_off: Vec<usize>,
    n_e: usize,
    n_f: usize,
    w_e: Vec<f64>,
    w_f: Vec<f64>,
}

impl ElementBuilder {
    fn new(alg: &AlgebraRep, phi_local: &ComplexMatrix) -> Self {
        let blocks = alg.blocks();
        let coeffs = sector_coeffs(&blocks, phi_local);
        let (mut alpha_off, mut gamma_off) = (Vec::new(), Vec::new());
        let (mut w_e, mut w_f) = (Vec::new(), Vec::new());
        for b in &blocks {
            alpha_off.push(w_e.len());
            gamma_off.push(w_f.len());
            // weights turning |<e, x>|^2 into |<e/|e|, x>|^2
            w_e.extend(std::iter::repeat_n(b.d as f64 / b.n as f64, b.d * b.d));
            w_f.extend(std::iter::repeat_n(b.n as f64 / b.d as f64, b.n * b.n));
        }
        Self {
            blocks,
            coeffs,
            alpha_off,
            gamma_off,
            n_e: w_e.len(),
            n_f: w_f.len(),
            w_e,
            w_f,
        }
    }

    fn fill(&self, a: usize, b: usize, e: &mut [C64], f: &mut [C64]) {
        for (j, blk) in self.blocks.iter().enumerate() {
            let (ca, cb) = (&self.coeffs[j][a], &self.coeffs[j][b]);
            let (n, d) = (blk.n, blk.d);
            let se = 1.0 / (d as f64).sqrt();
            for k in 0..d {
                for l in 0..d {
                    let mut z = ZERO;
                    for p in 0..n {
                        z += ca[p * d + k].conj() * cb[p * d + l];
                    }
                    e[self.alpha_off[j] + k * d + l] = z * se;
                }
            }
            let sf = 1.0 / (n as f64).sqrt();
            for p in 0..n {
                for q in 0..n {
                    let mut z = ZERO;
                    for k in 0..d {
                        z += ca[p * d + k].conj() * cb[q * d + k];
                    }
                    f[self.gamma_off[j] + p * n + q] = z * sf;
                }
            }
        }
    }
}

/// NRC closed form from the operator-basis Gram matrices
/// `R0^X_{kl} = ||P_X(|phi_k><phi_l|)||^2` and
/// `R1^X_{kl} = <P_X(Pi_k), P_X(Pi_l)>`.
pub fn lta_nrc(alg: &AlgebraRep, eigvecs: &ComplexMatrix) -> Result<LtaResult> {
    check_square(alg, eigvecs)?;
    eigvecs.ensure_unitary(1e-8)?;
    let d = alg.dim();
    let eb = ElementBuilder::new(alg, &alg.vectors_to_local(eigvecs));
    let (mut e, mut f) = (vec![ZERO; eb.n_e], vec![ZERO; eb.n_f]);

    let mut diag_e = vec![ZERO; d * eb.n_e];
    let mut diag_f = vec![ZERO; d * eb.n_f];
    for k in 0..d {
        eb.fill(k, k, &mut e, &mut f);
        diag_e[k * eb.n_e..(k + 1) * eb.n_e].copy_from_slice(&e);
        diag_f[k * eb.n_f..(k + 1) * eb.n_f].copy_from_slice(&f);
    }
    let r1 = |diag: &[C64], w: &[f64], k: usize, l: usize| -> f64 {
        let m = w.len();
        let (dk, dl) = (&diag[k * m..(k + 1) * m], &diag[l * m..(l + 1) * m]);
        dk.iter().zip(dl).zip(w).map(|((x, y), w)| w * (x * y.conj()).re).sum()
    };
    let r0 = |v: &[C64], w: &[f64]| -> f64 { v.iter().zip(w).map(|(z, w)| w * z.norm_sqr()).sum() };

    let mut total = 0.0;
    for k in 0..d {
        for l in k..d {
            eb.fill(l, k, &mut e, &mut f);
            let r0_a = r0(&e, &eb.w_e);
            let r0_ap = r0(&f, &eb.w_f);
            let r1_a = r1(&diag_e, &eb.w_e, k, l);
            let r1_ap = r1(&diag_f, &eb.w_f, k, l);
            let term = r0_a * r1_ap + r0_ap * r1_a;
            // off-diagonal pairs appear twice with weight 1, the diagonal once with 1/2
            total += if k == l { 0.5 * term } else { 2.0 * term };
        }
    }
    Ok(LtaResult::new(1.0 - total / d as f64, LtaMethod::Nrc))
}

/// NRC closed form on the eigenvectors of `spec`, flagged basis dependent
/// when the spectrum has degenerate levels.
pub fn lta_nrc_spectrum(alg: &AlgebraRep, spec: &SpectralDecomp) -> Result<LtaResult> {
    let mut r = lta_nrc(alg, &spec.eigenvectors)?;
    r.basis_dependent = !spec.is_nondegenerate();
    Ok(r)
}

/// Reduced states `rho^{n_J}_k = Tr_{d_J}(Pi^J |phi_k><phi_k| Pi^J)` and
/// `rho^{d_J}_k = Tr_{n_J}(...)` of every column of `phi_local`, stored
/// row-major as `[J][k]`.
pub(crate) struct ReducedStates {
    pub blocks: Vec<Block>,
    pub rho_n: Vec<Vec<Vec<C64>>>,
    pub rho_d: Vec<Vec<Vec<C64>>>,
}

impl ReducedStates {
    pub fn new(alg: &AlgebraRep, phi_local: &ComplexMatrix) -> Self {
        let blocks = alg.blocks();
        let coeffs = sector_coeffs(&blocks, phi_local);
        let mut rho_n = Vec::with_capacity(blocks.len());
        let mut rho_d = Vec::with_capacity(blocks.len());
        for (b, cj) in blocks.iter().zip(&coeffs) {
            let (n, d) = (b.n, b.d);
            let mut rn_j = Vec::with_capacity(cj.len());
            let mut rd_j = Vec::with_capacity(cj.len());
            for c in cj {
                let mut rn = vec![ZERO; n * n];
                for p in 0..n {
                    for q in 0..n {
                        rn[p * n + q] = (0..d).map(|k| c[p * d + k] * c[q * d + k].conj()).sum();
                    }
                }
                let mut rd = vec![ZERO; d * d];
                for k in 0..d {
                    for l in 0..d {
                        rd[k * d + l] = (0..n).map(|p| c[p * d + k] * c[p * d + l].conj()).sum();
                    }
                }
                rn_j.push(rn);
                rd_j.push(rd);
            }
            rho_n.push(rn_j);
            rho_d.push(rd_j);
        }
        Self { blocks, rho_n, rho_d }
    }

    pub fn count(&self) -> usize {
        self.rho_n.first().map_or(0, Vec::len)
    }

    /// Weighted Gram matrices `(A^A, B^A', A^A', B^A)`, each `m x m` row-major.
    pub fn grams(&self) -> [Vec<f64>; 4] {
        let m = self.count();
        let mut out = [vec![0.0; m * m], vec![0.0; m * m], vec![0.0; m * m], vec![0.0; m * m]];
        for (j, b) in self.blocks.iter().enumerate() {
            let (n, d) = (b.n as f64, b.d as f64);
            for k in 0..m {
                for l in k..m {
                    let gn = hermitian_inner(&self.rho_n[j][k], &self.rho_n[j][l]);
                    let gd = hermitian_inner(&self.rho_d[j][k], &self.rho_d[j][l]);
                    let vals = [gn / n, gn / d, gd / d, gd / n];
                    for (o, v) in out.iter_mut().zip(vals) {
                        o[k * m + l] += v;
                        if k != l {
                            o[l * m + k] += v;
                        }
                    }
                }
            }
        }
        out
    }
}

/// `Tr(x y)` for Hermitian `x`, `y` stored row-major.
fn hermitian_inner(x: &[C64], y: &[C64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a * b.conj()).re).sum()
}

/// `Sum_kl (1 - delta_kl/2) (A^A B^A' + A^A' B^A)_kl`, i.e. `d (1 - G_NRC)`.
pub(crate) fn nrc_overlap(grams: &[Vec<f64>; 4], m: usize) -> f64 {
    let [aa, bap, aap, ba] = grams;
    let mut total = 0.0;
    for k in 0..m {
        for l in 0..m {
            let c = if k == l { 0.5 } else { 1.0 };
            let i = k * m + l;
            total += c * (aa[i] * bap[i] + aap[i] * ba[i]);
        }
    }
    total
}

/// NRC closed form through sector-resolved reduced-state Gram matrices.
pub fn lta_nrc_block_gram(alg: &AlgebraRep, eigvecs: &ComplexMatrix) -> Result<LtaResult> {
    check_square(alg, eigvecs)?;
    eigvecs.ensure_unitary(1e-8)?;
    let rs = ReducedStates::new(alg, &alg.vectors_to_local(eigvecs));
    let total = nrc_overlap(&rs.grams(), alg.dim());
    Ok(LtaResult::new(1.0 - total / alg.dim() as f64, LtaMethod::Nrc))
}

/// Largest number of stored matrix elements the exact method will allocate.
const EXACT_ELEMENT_LIMIT: usize = 1 << 25;

/// Exact long-time average from the resonance sum over eigenvector
/// quadruples with `E_a + E_c = E_b + E_g` (within `eps_res` times the
/// spectral range).
pub fn lta_exact(alg: &AlgebraRep, spec: &SpectralDecomp, eps_res: f64) -> Result<LtaResult> {
    check_square(alg, &spec.eigenvectors)?;
    if eps_res.is_nan() || eps_res < 0.0 {
        return Err(Error::InvalidArgument("eps_res must be non-negative".into()));
    }
    let d = alg.dim();
    let eb = ElementBuilder::new(alg, &alg.vectors_to_local(&spec.eigenvectors));
    let (ne, nf) = (eb.n_e, eb.n_f);
    if d * d * (ne + nf) > EXACT_ELEMENT_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "exact average would store {} matrix elements",
            d * d * (ne + nf)
        )));
    }
    let mut e_all = vec![ZERO; d * d * ne];
    let mut f_all = vec![ZERO; d * d * nf];
    for a in 0..d {
        for b in 0..d {
            let i = a * d + b;
            let (e, f) = (&mut e_all[i * ne..(i + 1) * ne], &mut f_all[i * nf..(i + 1) * nf]);
            eb.fill(a, b, e, f);
        }
    }
    let e_of = |a: usize, b: usize| &e_all[(a * d + b) * ne..(a * d + b + 1) * ne];
    let f_of = |a: usize, b: usize| &f_all[(a * d + b) * nf..(a * d + b + 1) * nf];
    let dot = |x: &[C64], y: &[C64]| -> C64 { x.iter().zip(y).map(|(a, b)| a * b.conj()).sum() };

    // eigenvalues replaced by their level means so degenerate sums coincide
    let levels = spec.level_of();
    let energy: Vec<f64> = levels.iter().map(|&k| spec.level_energies[k]).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(d * d);
    for x in 0..d {
        for y in 0..d {
            pairs.push((energy[x] + energy[y], x, y));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tol = eps_res * spec.spectral_range;

    let mut total = ZERO;
    let mut count: u64 = 0;
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].0 - pairs[end - 1].0 <= tol {
            end += 1;
        }
        let cluster = &pairs[start..end];
        count += (cluster.len() * cluster.len()) as u64;
        for &(_, a, c) in cluster {
            for &(_, b, g) in cluster {
                let psi = dot(e_of(g, a), e_of(c, b));
                let phi = dot(f_of(a, b), f_of(g, c));
                total += psi * phi;
            }
        }
        start = end;
    }
    if total.im.abs() / d as f64 > 1e-9 {
        return Err(Error::NumericalConsistency(format!(
            "exact average has imaginary residue {:.3e}",
            total.im / d as f64
        )));
    }
    let mut r = LtaResult::new(1.0 - total.re / d as f64, LtaMethod::Exact);
    r.resonance_count = Some(count);
    Ok(r)
}

/// NRC+ closed form from the dephasing map over the level projectors of
/// `spec`. A spectrum with degenerate gaps still gets a value, with a
/// warning attached.
pub fn lta_nrc_plus(alg: &AlgebraRep, spec: &SpectralDecomp) -> Result<LtaResult> {
    check_square(alg, &spec.eigenvectors)?;
    let d = alg.dim();
    let blocks = alg.blocks();
    let wl = alg.vectors_to_local(&spec.eigenvectors);
    // level bases as row-major d x m arrays
    let levels: Vec<(usize, Vec<C64>)> = spec
        .level_groups
        .iter()
        .map(|g| {
            let m = g.len();
            let mut b = vec![ZERO; d * m];
            for r in 0..d {
                for (i, &c) in g.iter().enumerate() {
                    b[r * m + i] = wl[(r, c)];
                }
            }
            (m, b)
        })
        .collect();

    let mut sum = 0.0;
    for bj in &blocks {
        // f_gamma = |p><q| (x) 1/sqrt(n): P_A' reduces each sector to n' x n'
        for p in 0..bj.n {
            for q in 0..bj.n {
                let entries: Vec<(usize, usize)> = (0..bj.d).map(|k| (bj.idx(p, k), bj.idx(q, k))).collect();
                sum += dephased_norms(&blocks, &levels, &entries, 1.0 / (bj.n as f64).sqrt(), Side::Commutant);
            }
        }
        // e_alpha = 1/sqrt(d) (x) |k><l|: P_A reduces each sector to d' x d'
        for k in 0..bj.d {
            for l in 0..bj.d {
                let entries: Vec<(usize, usize)> = (0..bj.n).map(|p| (bj.idx(p, k), bj.idx(p, l))).collect();
                sum += dephased_norms(&blocks, &levels, &entries, 1.0 / (bj.d as f64).sqrt(), Side::Algebra);
            }
        }
    }
    let mut r = LtaResult::new(1.0 - sum / d as f64, LtaMethod::NrcPlus);
    if spec.nrc_class == NrcClass::Resonant {
        r.warnings
            .push("spectrum has degenerate gaps; the NRC+ value is not the long-time average".into());
    }
    Ok(r)
}

#[derive(Clone, Copy)]
enum Side {
    /// `P_A'`: `Tr_d` on every sector, norm weight `1/d_J`.
    Commutant,
    /// `P_A`: `Tr_n` on every sector, norm weight `1/n_J`.
    Algebra,
}

/// `||P(D(x))||^2 - 1/2 Sum_k ||P(Pi_k x Pi_k)||^2` for the sparse operator
/// `x = scale * Sum_{(r,c) in entries} |r><c|`.
fn dephased_norms(blocks: &[Block], levels: &[(usize, Vec<C64>)], entries: &[(usize, usize)], scale: f64, side: Side) -> f64 {
    let reduced_dim = |b: &Block| match side {
        Side::Commutant => b.n,
        Side::Algebra => b.d,
    };
    let mut dephased: Vec<Vec<C64>> = blocks.iter().map(|b| vec![ZERO; reduced_dim(b).pow(2)]).collect();
    let mut diag_sum = 0.0;
    for (m, b) in levels {
        let m = *m;
        // c = B^dagger x B, then t = B c so that Pi x Pi = t B^dagger
        let mut c = vec![ZERO; m * m];
        for &(r, col) in entries {
            for i in 0..m {
                let bri = b[r * m + i].conj() * scale;
                if bri == ZERO {
                    continue;
                }
                for jx in 0..m {
                    c[i * m + jx] += bri * b[col * m + jx];
                }
            }
        }
        if c.iter().all(|z| *z == ZERO) {
            continue;
        }
        let d = b.len() / m;
        let mut t = vec![ZERO; d * m];
        for r in 0..d {
            for jx in 0..m {
                let mut z = ZERO;
                for i in 0..m {
                    z += b[r * m + i] * c[i * m + jx];
                }
                t[r * m + jx] = z;
            }
        }
        let y = |r: usize, s: usize| -> C64 { (0..m).map(|jx| t[r * m + jx] * b[s * m + jx].conj()).sum() };
        for (bt, acc) in blocks.iter().zip(dephased.iter_mut()) {
            let rd = reduced_dim(bt);
            let mut norm = 0.0;
            for u in 0..rd {
                for v in 0..rd {
                    let z: C64 = match side {
                        Side::Commutant => (0..bt.d).map(|k| y(bt.idx(u, k), bt.idx(v, k))).sum(),
                        Side::Algebra => (0..bt.n).map(|p| y(bt.idx(p, u), bt.idx(p, v))).sum(),
                    };
                    acc[u * rd + v] += z;
                    norm += z.norm_sqr();
                }
            }
            diag_sum += norm / side_weight(bt, side);
        }
    }
    let full: f64 = blocks
        .iter()
        .zip(&dephased)
        .map(|(bt, acc)| acc.iter().map(|z| z.norm_sqr()).sum::<f64>() / side_weight(bt, side))
        .sum();
    full - 0.5 * diag_sum
}

fn side_weight(b: &Block, side: Side) -> f64 {
    match side {
        Side::Commutant => b.d as f64,
        Side::Algebra => b.n as f64,
    }
}

/// Gaussian scrambling rate `||(1 - P_A - P_A' + P_Z) h|| / sqrt(d)`.
pub fn gaussian_rate(alg: &AlgebraRep, h: &ComplexMatrix) -> Result<f64> {
    check_square(alg, h)?;
    h.ensure_hermitian()?;
    let hl = alg.to_local(h);
    let mut r = &hl - &alg.project_a_local(&hl);
    r -= &alg.project_aprime_local(&hl);
    r += &alg.project_center_local(&hl);
    Ok(r.norm() / (alg.dim() as f64).sqrt())
}

/// Bipartite rate from the subtraction form
/// `||H - 1_A/d_A (x) Tr_A H - Tr_B H (x) 1_B/d_B|| / sqrt(d)` on traceless H.
pub fn gaussian_rate_bipartite(alg: &AlgebraRep, h: &ComplexMatrix) -> Result<f64> {
    check_square(alg, h)?;
    h.ensure_hermitian()?;
    if !alg.is_bipartite() {
        return Err(Error::InvalidArgument("subtraction form needs a bipartite algebra".into()));
    }
    let s = alg.spec().sectors()[0];
    let d = alg.dim();
    let mut hl = alg.to_local(h);
    let shift = hl.trace() / d as f64;
    for i in 0..d {
        hl[(i, i)] -= shift;
    }
    let dims = [s.n, s.d];
    let tr_a = partial_trace(&hl, &dims, &[1])?;
    let tr_b = partial_trace(&hl, &dims, &[0])?;
    let mut r = hl.clone();
    r -= &kron(&ComplexMatrix::identity(s.n).scale_re(1.0 / s.n as f64), &tr_a);
    r -= &kron(&tr_b, &ComplexMatrix::identity(s.d).scale_re(1.0 / s.d as f64));
    Ok(r.norm() / (d as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gtps::{random_algebra, sector_local_unitary, stabilizer_algebra, conjugate};
    use crate::linalg::{expm, haar_unitary, random_hermitian, DEFAULT_EPS_DEG, DEFAULT_EPS_RES, I, ONE};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(p: &[(usize, usize)]) -> GtpsSpec {
        GtpsSpec::from_pairs(p).unwrap()
    }

    fn decomp(h: &ComplexMatrix) -> SpectralDecomp {
        eig_hermitian(h, DEFAULT_EPS_DEG, DEFAULT_EPS_RES).unwrap()
    }

    /// Direct evaluation of `1 - (1/d) Sum Re Tr(e u f u^+ e^+ u f^+ u^+)`.
    fn brute_aotoc(alg: &AlgebraRep, u: &ComplexMatrix) -> f64 {
        let (es, fs) = alg.basis_operators();
        let ud = u.adjoint();
        let mut acc = 0.0;
        for e in &es {
            for f in &fs {
                let y = u.matmul(f).matmul(&ud);
                let yd = u.matmul(&f.adjoint()).matmul(&ud);
                acc += e.matmul(&y).matmul(&e.adjoint()).matmul(&yd).trace().re;
            }
        }
        1.0 - acc / alg.dim() as f64
    }

    /// H = V (+)_J H_J V^dagger with random sector blocks.
    fn block_hamiltonian(alg: &AlgebraRep, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let d = alg.dim();
        let mut hl = ComplexMatrix::zeros(d, d);
        for b in alg.blocks() {
            let size = b.n * b.d;
            let hj = random_hermitian(rng, size);
            for r in 0..size {
                for c in 0..size {
                    hl[(b.offset + r, b.offset + c)] = hj[(r, c)];
                }
            }
        }
        alg.from_local(&hl)
    }

    #[test]
    fn conjectured_min_examples() {
        assert!((conjectured_min(&spec(&[(2, 2)])) - 0.25).abs() < 1e-15);
        assert_eq!(conjectured_min(&GtpsSpec::maximal_abelian(5).unwrap()), 0.0);
        assert_eq!(conjectured_min(&GtpsSpec::new(vec![crate::gtps::Sector::new(2, 1); 16]).unwrap()), 0.0);
        assert_eq!(conjectured_min(&spec(&[(1, 6)])), 0.0);
    }

    #[test]
    fn aotoc_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let alg = random_algebra(&spec(&[(2, 2), (1, 3)]), &mut rng);
        assert!(aotoc_at(&alg, &ComplexMatrix::identity(7)).unwrap().abs() < 1e-14);
        // unitary of the commutant: V ((+) u_n (x) 1) V^dagger
        let mut ul = ComplexMatrix::zeros(7, 7);
        for b in alg.blocks() {
            let un = haar_unitary(&mut rng, b.n);
            let blk = kron(&un, &ComplexMatrix::identity(b.d));
            for r in 0..b.n * b.d {
                for c in 0..b.n * b.d {
                    ul[(b.offset + r, b.offset + c)] = blk[(r, c)];
                }
            }
        }
        let u = alg.from_local(&ul);
        assert!(aotoc_at(&alg, &u).unwrap().abs() < 1e-12);
        assert!(aotoc_at(&alg, &ComplexMatrix::identity(7).scale_re(2.0)).is_err());
    }

    #[test]
    fn aotoc_matches_operator_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in [vec![(2, 2)], vec![(1, 2), (2, 1), (1, 1)], vec![(3, 1), (1, 2)]] {
            let alg = random_algebra(&spec(&p), &mut rng);
            let u = haar_unitary(&mut rng, alg.dim());
            let fast = aotoc_at(&alg, &u).unwrap();
            assert!((fast - brute_aotoc(&alg, &u)).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_matches_haar_estimate() {
        // Monte-Carlo of (1/2d) E ||[X_A, u Y_A' u^+]||^2 over Haar unitaries of A and A'
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let alg = AlgebraRep::canonical(spec(&[(2, 2)]));
        let mut swap = ComplexMatrix::zeros(4, 4);
        for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[(r, c)] = ONE;
        }
        let id = ComplexMatrix::identity(2);
        let samples = 8000;
        let mut acc = 0.0;
        for _ in 0..samples {
            let x = kron(&id, &haar_unitary(&mut rng, 2));
            let y = kron(&haar_unitary(&mut rng, 2), &id);
            acc += x.commutator(&y.conjugate_by(&swap)).norm_sq();
        }
        let mc = acc / (samples as f64 * 8.0);
        let exact = aotoc_at(&alg, &swap).unwrap();
        assert!((exact - 0.75).abs() < 1e-14);
        assert!((mc - exact).abs() < 1e-2, "{mc} vs {exact}");
    }

    #[test]
    fn nrc_routes_agree_with_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for p in [vec![(2, 2)], vec![(2, 3)], vec![(1, 2), (2, 1), (1, 1)], vec![(1, 1), (1, 1), (2, 2)]] {
            let alg = random_algebra(&spec(&p), &mut rng);
            let h = random_hermitian(&mut rng, alg.dim());
            let s = decomp(&h);
            assert_eq!(s.nrc_class, NrcClass::Nrc);
            let nrc = lta_nrc(&alg, &s.eigenvectors).unwrap().value;
            let gram = lta_nrc_block_gram(&alg, &s.eigenvectors).unwrap().value;
            let plus = lta_nrc_plus(&alg, &s).unwrap().value;
            let exact = lta_exact(&alg, &s, DEFAULT_EPS_RES).unwrap();
            assert!((nrc - gram).abs() < 1e-10, "{p:?}");
            assert!((nrc - plus).abs() < 1e-10, "{p:?}");
            assert!((nrc - exact.value).abs() < 1e-10, "{p:?}");
            // only k=m,l=n and k=n,l=m survive: 2d^2 - d quadruples
            let d = alg.dim() as u64;
            assert_eq!(exact.resonance_count, Some(2 * d * d - d));
        }
    }

    #[test]
    fn hamiltonian_in_commutant_does_not_scramble() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let alg = random_algebra(&spec(&[(2, 2), (2, 1)]), &mut rng);
        // a Hermitian element of A' is its own projection
        let h = alg.project_aprime(&random_hermitian(&mut rng, 6)).unwrap();
        let s = decomp(&h);
        assert!(lta_exact(&alg, &s, DEFAULT_EPS_RES).unwrap().value.abs() < 1e-10);
        let h = alg.project_a(&random_hermitian(&mut rng, 6)).unwrap();
        assert!(lta_time_average(&alg, &h, 50.0, 40).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn distinguished_eigenbasis_gives_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for p in [vec![(2, 2)], vec![(3, 2), (1, 1)], vec![(1, 3), (2, 1)], vec![(1, 1); 4]] {
            let alg = random_algebra(&spec(&p), &mut rng);
            let min = conjectured_min(alg.spec());
            assert!((lta_nrc(&alg, alg.framing()).unwrap().value - min).abs() < 1e-12);
            let product = alg.framing().matmul(&sector_local_unitary(alg.spec(), &mut rng));
            assert!((lta_nrc_block_gram(&alg, &product).unwrap().value - min).abs() < 1e-12);
        }
    }

    #[test]
    fn maximal_abelian_with_diagonal_hamiltonian() {
        let alg = AlgebraRep::canonical(GtpsSpec::maximal_abelian(4).unwrap());
        let h = ComplexMatrix::from_real_diag(&[0.1, -0.7, 0.4, 0.4]);
        let s = decomp(&h);
        assert_eq!(s.nrc_class, NrcClass::NrcPlus);
        assert!(lta_nrc_plus(&alg, &s).unwrap().value.abs() < 1e-14);
        assert!(lta_exact(&alg, &s, DEFAULT_EPS_RES).unwrap().value.abs() < 1e-14);
    }

    #[test]
    fn bell_and_product_bipartite_values() {
        let alg = AlgebraRep::canonical(spec(&[(2, 2)]));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bell = ComplexMatrix::from_fn(4, 4, |row, col| {
            let v = match (col, row) {
                (0, 0) | (0, 3) | (1, 0) | (2, 1) | (2, 2) | (3, 1) => r,
                (1, 3) | (3, 2) => -r,
                _ => 0.0,
            };
            C64::new(v, 0.0)
        });
        // every reduced state is 1/2: d^2 (1 - G) = 2 (16/4 - 4/8) = 7
        assert!((lta_nrc(&alg, &bell).unwrap().value - 9.0 / 16.0).abs() < 1e-12);
        assert!((lta_nrc_block_gram(&alg, &bell).unwrap().value - 9.0 / 16.0).abs() < 1e-12);
        let id = ComplexMatrix::identity(4);
        assert!((lta_nrc_block_gram(&alg, &id).unwrap().value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn bipartite_gram_formula() {
        // d^2 (1 - G) = Sum_X (Sum_kl R_kl^2 - 1/2 Sum_k R_kk^2) with R the
        // Gram matrix of normalised-trace reduced states
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let alg = AlgebraRep::canonical(spec(&[(2, 3)]));
        let w = haar_unitary(&mut rng, 6);
        let dims = [2, 3];
        let mut total = 0.0;
        for keep in [0usize, 1] {
            let rhos: Vec<ComplexMatrix> = (0..6)
                .map(|k| {
                    let v = w.column(k);
                    partial_trace(&ComplexMatrix::outer(&v, &v), &dims, &[keep]).unwrap()
                })
                .collect();
            for k in 0..6 {
                for l in 0..6 {
                    let g = crate::linalg::hs_inner(&rhos[k], &rhos[l]).unwrap().re;
                    total += if k == l { 0.5 * g * g } else { g * g };
                }
            }
        }
        let expected = 1.0 - total / 36.0;
        assert!((lta_nrc(&alg, &w).unwrap().value - expected).abs() < 1e-12);
    }

    #[test]
    fn degenerate_spectrum_flags() {
        let alg = AlgebraRep::canonical(spec(&[(2, 2)]));
        let s = decomp(&ComplexMatrix::identity(4));
        assert!(lta_nrc_spectrum(&alg, &s).unwrap().basis_dependent);
        assert!(!lta_nrc_plus(&alg, &s).unwrap().warnings.is_empty());
        let s = decomp(&ComplexMatrix::from_real_diag(&[0.0, 0.3, 1.1, 2.9]));
        assert!(!lta_nrc_spectrum(&alg, &s).unwrap().basis_dependent);
        assert!(lta_nrc_plus(&alg, &s).unwrap().warnings.is_empty());
    }

    #[test]
    fn exact_matches_time_average_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let alg = random_algebra(&spec(&[(2, 2)]), &mut rng);
        let mut h = random_hermitian(&mut rng, 4);
        let s = decomp(&h);
        h = h.scale_re(1.0 / s.spectral_range);
        let s = decomp(&h);
        let exact = lta_exact(&alg, &s, DEFAULT_EPS_RES).unwrap().value;
        let avg = lta_time_average(&alg, &h, 4000.0, 8000).unwrap().value;
        assert!((exact - avg).abs() < 5e-3, "{exact} vs {avg}");
    }

    #[test]
    fn resonant_spectrum_exact_vs_time_average() {
        // equally spaced levels: the resonance sum must keep the extra terms
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let alg = random_algebra(&spec(&[(2, 2)]), &mut rng);
        let w = haar_unitary(&mut rng, 4);
        let h = ComplexMatrix::from_real_diag(&[0.0, 1.0, 2.0, 3.0]).conjugate_by(&w);
        let s = decomp(&h);
        assert_eq!(s.nrc_class, NrcClass::Resonant);
        let exact = lta_exact(&alg, &s, DEFAULT_EPS_RES).unwrap();
        assert!(exact.resonance_count.unwrap() > 2 * 16 - 4);
        // commensurate frequencies: the average over one period 2 pi is exact
        let avg = lta_time_average(&alg, &h, 2.0 * std::f64::consts::PI * 50.0, 20001).unwrap().value;
        assert!((exact.value - avg).abs() < 1e-3, "{} vs {avg}", exact.value);
        let nrc = lta_nrc(&alg, &s.eigenvectors).unwrap().value;
        assert!((exact.value - nrc).abs() > 1e-4);
    }

    #[test]
    fn gaussian_rate_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let alg = random_algebra(&spec(&[(2, 3)]), &mut rng);
        let h = random_hermitian(&mut rng, 6);
        let a = gaussian_rate(&alg, &h).unwrap();
        let b = gaussian_rate_bipartite(&alg, &h).unwrap();
        assert!((a - b).abs() < 1e-12);
        let multi = random_algebra(&spec(&[(2, 1), (1, 2)]), &mut rng);
        assert!(gaussian_rate_bipartite(&multi, &random_hermitian(&mut rng, 4)).is_err());

        // elements of A + A' do not scramble at short times
        let x = random_hermitian(&mut rng, 6);
        let y = random_hermitian(&mut rng, 6);
        let inside = &alg.project_a(&x).unwrap() + &alg.project_aprime(&y).unwrap();
        assert!(gaussian_rate(&alg, &inside).unwrap() < 1e-12);
    }

    #[test]
    fn short_time_quadratic_growth() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let alg = AlgebraRep::canonical(spec(&[(2, 2)]));
        let h = random_hermitian(&mut rng, 4);
        let rate = gaussian_rate(&alg, &h).unwrap();
        let t = 1e-3;
        let u = expm(&h.scale(I * t)).unwrap();
        let g = aotoc_at(&alg, &u).unwrap();
        let ratio = g / (2.0 * t * t) / (rate * rate);
        assert!((ratio - 1.0).abs() < 1e-2, "{ratio}");
    }

    #[test]
    fn intra_sector_basis_choice_is_irrelevant() {
        let mut rng = ChaCha8Rng::seed_from_u64(90);
        let code = stabilizer_algebra(&["ZZI", "IZZ"], 3).unwrap();
        let local = sector_local_unitary(code.spec(), &mut rng);
        let rebased = AlgebraRep::new(code.spec().clone(), code.framing().matmul(&local)).unwrap();
        let h = random_hermitian(&mut rng, 8);
        let s = decomp(&h);
        let u = haar_unitary(&mut rng, 8);
        assert!((aotoc_at(&code, &u).unwrap() - aotoc_at(&rebased, &u).unwrap()).abs() < 1e-12);
        let methods: [fn(&AlgebraRep, &SpectralDecomp) -> Result<LtaResult>; 2] =
            [lta_nrc_plus, |a, s| lta_exact(a, s, DEFAULT_EPS_RES)];
        for f in methods {
            let x = f(&code, &s).unwrap().value;
            let y = f(&rebased, &s).unwrap().value;
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugation_duality_at_fixed_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let alg = random_algebra(&spec(&[(2, 1), (1, 2)]), &mut rng);
        let w = haar_unitary(&mut rng, 4);
        let h = random_hermitian(&mut rng, 4);
        let u = expm(&h.scale(I * 0.7)).unwrap();
        // G_A(w u w^+) = G_{w^+ A w}(u)
        let lhs = aotoc_at(&alg, &u.conjugate_by(&w)).unwrap();
        let rhs = aotoc_at(&conjugate(&alg, &w.adjoint()).unwrap(), &u).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    fn random_spec(rng: &mut ChaCha8Rng) -> GtpsSpec {
        let count = rng.random_range(1..=3);
        let pairs: Vec<(usize, usize)> = (0..count).map(|_| (rng.random_range(1..=3), rng.random_range(1..=3))).collect();
        spec(&pairs)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn values_stay_in_range(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sp = random_spec(&mut rng);
            let alg = random_algebra(&sp, &mut rng);
            let d = sp.dim();
            let s = decomp(&random_hermitian(&mut rng, d));
            let top = upper_bound(&sp) + 1e-9;
            let exact = lta_exact(&alg, &s, DEFAULT_EPS_RES).unwrap().value;
            prop_assert!((-1e-9..=top).contains(&exact));
            let g = aotoc_at(&alg, &haar_unitary(&mut rng, d)).unwrap();
            prop_assert!((-1e-9..=top).contains(&g));
        }

        #[test]
        fn exact_duality_and_symmetry(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sp = random_spec(&mut rng);
            let alg = random_algebra(&sp, &mut rng);
            let d = sp.dim();
            let h = random_hermitian(&mut rng, d);
            let w = haar_unitary(&mut rng, d);
            let lhs = lta_exact(&conjugate(&alg, &w).unwrap(), &decomp(&h), DEFAULT_EPS_RES).unwrap().value;
            let rhs = lta_exact(&alg, &decomp(&h.conjugate_by_adjoint(&w)), DEFAULT_EPS_RES).unwrap().value;
            prop_assert!((lhs - rhs).abs() < 1e-9);
            // a symmetry of H: any function of H commutes with it
            let s = decomp(&h);
            let sym = expm(&h.scale(I * 1.3)).unwrap();
            let moved = lta_exact(&conjugate(&alg, &sym).unwrap(), &s, DEFAULT_EPS_RES).unwrap().value;
            let fixed = lta_exact(&alg, &s, DEFAULT_EPS_RES).unwrap().value;
            prop_assert!((moved - fixed).abs() < 1e-9);
        }

        #[test]
        fn block_hamiltonians_respect_minimum(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sp = random_spec(&mut rng);
            let alg = random_algebra(&sp, &mut rng);
            let h = block_hamiltonian(&alg, &mut rng);
            let s = decomp(&h);
            prop_assume!(s.nrc_class == NrcClass::Nrc);
            let v = lta_nrc(&alg, &s.eigenvectors).unwrap().value;
            prop_assert!(v >= conjectured_min(&sp) - 1e-10);
            let g = lta_nrc_block_gram(&alg, &s.eigenvectors).unwrap().value;
            prop_assert!((v - g).abs() < 1e-10);
        }
    }
}
