//! Experiment drivers that compare tensor product structures: theta sweeps
//! of the rotated perfect-code algebra, exhaustive half-chain bipartitions,
//! and the eigenstate mutual information used to rank them.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gtps::{spin_subset_algebra, AlgebraRep};
use crate::linalg::{eig_hermitian, ComplexMatrix, NrcClass, SpectralDecomp, DEFAULT_EPS_DEG, DEFAULT_EPS_RES};
use crate::models::{
    build_hamiltonian, eta_algebra, qrf_hamiltonians, qrf_natural_algebras, rotated_code_algebra, SpinChainParams,
};
use crate::output::format_float;
use crate::scramble::{aotoc_curve, gaussian_rate, lta_exact, lta_nrc_plus, lta_nrc_spectrum};

pub const CSV_HEADER: &str = "param,lta_exact,lta_nrc,lta_nrc_plus,gaussian_rate,mutual_info";

/// Sweep coordinate: a real parameter, a qubit subset (1-based), a unit
/// direction, or a free-form label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepParam {
    Value(f64),
    // before Direction so integer arrays stay subsets
    Subset(Vec<usize>),
    Direction([f64; 3]),
    Label(String),
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepParam::Value(v) => f.write_str(&format_float(*v)),
            SweepParam::Subset(s) => {
                let items: Vec<String> = s.iter().map(|q| q.to_string()).collect();
                write!(f, "{{{}}}", items.join(" "))
            }
            SweepParam::Direction(v) => {
                let items: Vec<String> = v.iter().map(|x| format_float(*x)).collect();
                write!(f, "({})", items.join(" "))
            }
            SweepParam::Label(l) => f.write_str(l),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub param: SweepParam,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lta_exact: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lta_nrc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lta_nrc_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutual_info: Option<f64>,
}

impl SweepRecord {
    pub fn new(param: SweepParam) -> Self {
        Self {
            param,
            lta_exact: None,
            lta_nrc: None,
            lta_nrc_plus: None,
            gaussian_rate: None,
            mutual_info: None,
        }
    }

    pub fn metrics(&self) -> [Option<f64>; 5] {
        [self.lta_exact, self.lta_nrc, self.lta_nrc_plus, self.gaussian_rate, self.mutual_info]
    }

    /// The long-time value used for ranking: NRC+ if present, else NRC,
    /// else exact.
    pub fn lta(&self) -> Option<f64> {
        self.lta_nrc_plus.or(self.lta_nrc).or(self.lta_exact)
    }

    /// At least one metric, all finite.
    pub fn validate(&self) -> Result<()> {
        let m = self.metrics();
        if m.iter().all(Option::is_none) {
            return Err(Error::InvalidArgument(format!("record {} has no metric", self.param)));
        }
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NumericalConsistency(format!(
                "record {} has a non-finite metric",
                self.param
            )));
        }
        Ok(())
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![self.param.to_string()];
        cols.extend(self.metrics().iter().map(|m| m.map(format_float).unwrap_or_default()));
        cols.join(",")
    }
}

pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Degeneracy and resonance tolerances, relative to the spectral range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eps_deg: f64,
    pub eps_res: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eps_deg: DEFAULT_EPS_DEG, eps_res: DEFAULT_EPS_RES }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_deg > 0.0 && self.eps_res > 0.0 && self.eps_deg.is_finite() && self.eps_res.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tolerances must be positive, got eps_deg = {}, eps_res = {}",
                self.eps_deg, self.eps_res
            )));
        }
        Ok(())
    }

    pub fn decompose(&self, h: &ComplexMatrix) -> Result<SpectralDecomp> {
        self.validate()?;
        eig_hermitian(h, self.eps_deg, self.eps_res)
    }
}

/// `n` evenly spaced points covering `[0, pi/4]`, endpoints included.
pub fn theta_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| FRAC_PI_4 * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Exact, NRC+ and NRC averages of the rotated perfect-code algebra under
/// the five-qubit Heisenberg ring with field `h_field`.
pub fn theta_sweep(h_field: f64, thetas: &[f64], tol: &Tolerances) -> Result<Vec<SweepRecord>> {
    const SLACK: f64 = 1e-12;
    if let Some(t) = thetas.iter().find(|t| !(-SLACK..=FRAC_PI_4 + SLACK).contains(*t)) {
        return Err(Error::InvalidArgument(format!("theta {t} outside [0, pi/4]")));
    }
    let h = build_hamiltonian(&SpinChainParams::heisenberg_ring(5, h_field)?)?;
    let spec = tol.decompose(&h)?;
    let records: Result<Vec<SweepRecord>> = thetas
        .par_iter()
        .map(|&theta| {
            let alg = rotated_code_algebra(theta);
            let mut r = SweepRecord::new(SweepParam::Value(theta));
            r.lta_exact = Some(lta_exact(&alg, &spec, tol.eps_res)?.value);
            r.lta_nrc_plus = Some(lta_nrc_plus(&alg, &spec)?.value);
            r.lta_nrc = Some(lta_nrc_spectrum(&alg, &spec)?.value);
            Ok(r)
        })
        .collect();
    records
}

/// `n` unit vectors: the six coordinate axes, then a spherical Fibonacci
/// lattice for the rest.
pub fn eta_grid(n: usize) -> Result<Vec<[f64; 3]>> {
    if n < 6 {
        return Err(Error::InvalidArgument(format!("an eta grid needs at least 6 points, got {n}")));
    }
    let mut out = vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let m = n - 6;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    for i in 0..m {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * i as f64;
        out.push([r * phi.cos(), r * phi.sin(), z]);
    }
    Ok(out)
}

/// NRC and exact averages of the spin-direction algebras seen from
/// `frame`, evolving with that frame's toy Hamiltonian.
pub fn qrf_eta_sweep(frame: usize, etas: &[[f64; 3]], couplings: [f64; 3], tol: &Tolerances) -> Result<Vec<SweepRecord>> {
    let (h1, h2) = qrf_hamiltonians(couplings)?;
    let h = match frame {
        1 => h1,
        2 => h2,
        _ => return Err(Error::InvalidArgument(format!("frame must be 1 or 2, got {frame}"))),
    };
    let spec = tol.decompose(&h)?;
    etas.iter()
        .map(|&eta| {
            let alg = eta_algebra(frame, eta)?;
            let mut r = SweepRecord::new(SweepParam::Direction(eta));
            r.lta_exact = Some(lta_exact(&alg, &spec, tol.eps_res)?.value);
            r.lta_nrc = Some(lta_nrc_spectrum(&alg, &spec)?.value);
            Ok(r)
        })
        .collect()
}

/// The natural algebras `A1` and `A2` under frame 1's Hamiltonian, with
/// the Gaussian rate as the short-time comparator.
pub fn qrf_natural(couplings: [f64; 3], tol: &Tolerances) -> Result<Vec<SweepRecord>> {
    let (h1, _) = qrf_hamiltonians(couplings)?;
    let spec = tol.decompose(&h1)?;
    let (a1, a2) = qrf_natural_algebras()?;
    [("A1", a1), ("A2", a2)]
        .into_iter()
        .map(|(label, alg)| {
            let mut r = SweepRecord::new(SweepParam::Label(label.into()));
            r.lta_exact = Some(lta_exact(&alg, &spec, tol.eps_res)?.value);
            r.lta_nrc = Some(lta_nrc_spectrum(&alg, &spec)?.value);
            r.gaussian_rate = Some(gaussian_rate(&alg, &h1)?);
            Ok(r)
        })
        .collect()
}

/// All size-`half` subsets of `1..=n` that contain qubit 1, in
/// lexicographic order. Each bipartition appears once: its complement does
/// not contain qubit 1.
pub fn half_subsets(n: usize, half: usize) -> Vec<Vec<usize>> {
    fn rec(next: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for q in next..=n {
            if n - q + 1 < left {
                break;
            }
            cur.push(q);
            rec(q + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if half == 0 || half > n {
        return out;
    }
    let mut cur = vec![1];
    rec(2, n, half - 1, &mut cur, &mut out);
    out
}

/// Long-time average, eigenstate mutual information and Gaussian rate for
/// every half-chain bipartition. NRC spectra use the NRC closed form, all
/// others the NRC+ form.
pub fn bipartition_sweep(p: &SpinChainParams, half: usize, tol: &Tolerances) -> Result<Vec<SweepRecord>> {
    p.validate()?;
    if !p.n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("bipartitions need an even chain, got n = {}", p.n)));
    }
    if half != p.n / 2 {
        return Err(Error::InvalidArgument(format!("half must be {}, got {half}", p.n / 2)));
    }
    let h = build_hamiltonian(p)?;
    let spec = tol.decompose(&h)?;
    let records: Result<Vec<SweepRecord>> = half_subsets(p.n, half)
        .into_par_iter()
        .map(|subset| {
            let alg = spin_subset_algebra(p.n, &subset)?;
            let mut r = SweepRecord::new(SweepParam::Subset(subset));
            if spec.nrc_class == NrcClass::Nrc {
                r.lta_nrc = Some(lta_nrc_spectrum(&alg, &spec)?.value);
            } else {
                r.lta_nrc_plus = Some(lta_nrc_plus(&alg, &spec)?.value);
            }
            r.mutual_info = Some(avg_eigenstate_mutual_info(&spec, &alg)?);
            r.gaussian_rate = Some(gaussian_rate(&alg, &h)?);
            Ok(r)
        })
        .collect();
    records
}

/// Exact, NRC and NRC+ averages side by side for every half-chain
/// bipartition. The NRC column depends on the eigenbasis whenever the
/// spectrum is degenerate.
pub fn method_comparison(p: &SpinChainParams, tol: &Tolerances) -> Result<Vec<SweepRecord>> {
    p.validate()?;
    if !p.n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("bipartitions need an even chain, got n = {}", p.n)));
    }
    let h = build_hamiltonian(p)?;
    let spec = tol.decompose(&h)?;
    half_subsets(p.n, p.n / 2)
        .into_par_iter()
        .map(|subset| {
            let alg = spin_subset_algebra(p.n, &subset)?;
            let mut r = SweepRecord::new(SweepParam::Subset(subset));
            r.lta_exact = Some(lta_exact(&alg, &spec, tol.eps_res)?.value);
            r.lta_nrc = Some(lta_nrc_spectrum(&alg, &spec)?.value);
            r.lta_nrc_plus = Some(lta_nrc_plus(&alg, &spec)?.value);
            Ok(r)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub aotoc: f64,
}

/// Instantaneous A-OTOC of a subset algebra on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AotocTrace {
    pub subset: Vec<usize>,
    /// Rate `c` in the short-time law `G(t) ~ 2 (c t)^2`.
    pub gaussian_rate: f64,
    pub points: Vec<CurvePoint>,
}

impl AotocTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,aotoc\n");
        for pt in &self.points {
            out.push_str(&format!("{},{}\n", format_float(pt.t), format_float(pt.aotoc)));
        }
        out
    }
}

/// `G(t)` at `t_i = t_max i/(samples-1)` for the algebra of `subset`.
pub fn aotoc_trace(p: &SpinChainParams, subset: &[usize], t_max: f64, samples: usize) -> Result<AotocTrace> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument("a trace needs at least 2 samples".into()));
    }
    let h = build_hamiltonian(p)?;
    let alg = spin_subset_algebra(p.n, subset)?;
    let times: Vec<f64> = (0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect();
    let values = aotoc_curve(&alg, &h, &times)?;
    Ok(AotocTrace {
        subset: subset.to_vec(),
        gaussian_rate: gaussian_rate(&alg, &h)?,
        points: times.into_iter().zip(values).map(|(t, aotoc)| CurvePoint { t, aotoc }).collect(),
    })
}

/// Shannon entropy in bits of the spectrum of a Hermitian `k x k` matrix.
fn entropy_bits(rho: &[crate::linalg::C64], k: usize) -> f64 {
    let m = nalgebra::DMatrix::from_fn(k, k, |r, c| rho[r * k + c]);
    nalgebra::SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| -l * l.log2())
        .sum()
}

/// Mean over energy levels of `I(A:B)` for the normalised level projector
/// `Pi_k / Tr Pi_k`, in bits.
pub fn avg_eigenstate_mutual_info(spec: &SpectralDecomp, alg: &AlgebraRep) -> Result<f64> {
    if !alg.is_bipartite() {
        return Err(Error::InvalidArgument("mutual information needs a bipartite algebra".into()));
    }
    let d = alg.dim();
    if spec.dim() != d {
        return Err(crate::error::dim_mismatch(d, spec.dim()));
    }
    let s = alg.spec().sectors()[0];
    let (na, nb) = (s.n, s.d);
    let w = alg.vectors_to_local(&spec.eigenvectors);
    let zero = crate::linalg::ZERO;
    let mut total = 0.0;
    for group in &spec.level_groups {
        let m = group.len() as f64;
        let mut ra = vec![zero; na * na];
        let mut rb = vec![zero; nb * nb];
        for &c in group {
            for p in 0..na {
                for q in 0..na {
                    ra[p * na + q] += (0..nb).map(|k| w[(p * nb + k, c)] * w[(q * nb + k, c)].conj()).sum::<crate::linalg::C64>() / m;
                }
            }
            for k in 0..nb {
                for l in 0..nb {
                    rb[k * nb + l] += (0..na).map(|p| w[(p * nb + k, c)] * w[(p * nb + l, c)].conj()).sum::<crate::linalg::C64>() / m;
                }
            }
        }
        total += entropy_bits(&ra, na) + entropy_bits(&rb, nb) - m.log2();
    }
    Ok((total / spec.level_groups.len() as f64).max(0.0))
}

fn ranks(xs: &[f64], tie_tol: f64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] - xs[idx[j]] <= tie_tol {
            j += 1;
        }
        // ties share the mean rank
        let mean = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            r[k] = mean;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with mean ranks for ties. Sorted neighbours
/// closer than `tie_tol` are tied, so values equal up to round-off rank
/// together. `None` when either sample is constant or the lengths differ.
pub fn spearman(xs: &[f64], ys: &[f64], tie_tol: f64) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(xs, tie_tol), ranks(ys, tie_tol));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

/// Indices of all entries within `tol` of the minimum.
pub fn argmin_set(xs: &[f64], tol: f64) -> Vec<usize> {
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    (0..xs.len()).filter(|&i| xs[i] <= min + tol).collect()
}
