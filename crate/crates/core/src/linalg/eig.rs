use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

pub const DEFAULT_EPS_DEG: f64 = 1e-9;
pub const DEFAULT_EPS_RES: f64 = 1e-9;

/// Resonance classification of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NrcClass {
    /// Non-degenerate levels and non-degenerate gaps.
    Nrc,
    /// Non-degenerate gaps, some degenerate levels.
    NrcPlus,
    Resonant,
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues grouped into
/// degenerate levels.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    /// All eigenvalues, ascending.
    pub energies: Vec<f64>,
    /// Columns are eigenvectors, in the order of `energies`.
    pub eigenvectors: ComplexMatrix,
    /// Column indices of each level, levels ascending in energy.
    pub level_groups: Vec<Vec<usize>>,
    /// Mean eigenvalue of each level.
    pub level_energies: Vec<f64>,
    pub nrc_class: NrcClass,
    pub spectral_range: f64,
    pub eps_deg: f64,
    pub eps_res: f64,
}

impl SpectralDecomp {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn num_levels(&self) -> usize {
        self.level_groups.len()
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.level_groups.iter().all(|g| g.len() == 1)
    }

    /// Level index of every eigenvector column.
    pub fn level_of(&self) -> Vec<usize> {
        let mut lv = vec![0; self.dim()];
        for (k, g) in self.level_groups.iter().enumerate() {
            for &i in g {
                lv[i] = k;
            }
        }
        lv
    }

    /// Eigenprojector of level `k`.
    pub fn projector(&self, k: usize) -> ComplexMatrix {
        let d = self.dim();
        let w = &self.eigenvectors;
        let mut p = ComplexMatrix::zeros(d, d);
        for &c in &self.level_groups[k] {
            for r in 0..d {
                let a = w[(r, c)];
                if a == ZERO {
                    continue;
                }
                for s in 0..d {
                    p[(r, s)] += a * w[(s, c)].conj();
                }
            }
        }
        p
    }

    /// `sum_k E_k Pi_k` over level means.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut h = ComplexMatrix::zeros(d, d);
        for k in 0..self.num_levels() {
            h += &self.projector(k).scale_re(self.level_energies[k]);
        }
        h
    }
}

/// Diagonalises a Hermitian matrix. Eigenvalues within
/// `eps_deg * spectral_range` of their neighbour share a level; gaps closer
/// than `eps_res * spectral_range` count as resonant.
pub fn eig_hermitian(h: &ComplexMatrix, eps_deg: f64, eps_res: f64) -> Result<SpectralDecomp> {
    if h.rows() == 0 || h.cols() == 0 {
        return Err(Error::Empty);
    }
    h.ensure_hermitian()?;
    if !(eps_deg >= 0.0 && eps_res >= 0.0) {
        return Err(Error::InvalidArgument("tolerances must be non-negative".into()));
    }
    let d = h.rows();
    let eig = nalgebra::SymmetricEigen::new(h.to_nalgebra());

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    let mut eigenvectors = ComplexMatrix::zeros(d, d);
    for (c, &src) in order.iter().enumerate() {
        let mut v: Vec<C64> = (0..d).map(|r| eig.eigenvectors[(r, src)]).collect();
        fix_phase(&mut v);
        eigenvectors.set_column(c, &v);
    }

    let spectral_range = energies[d - 1] - energies[0];
    let deg_tol = eps_deg * spectral_range;
    let mut level_groups: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..d {
        if energies[i] - energies[i - 1] <= deg_tol {
            level_groups.last_mut().unwrap().push(i);
        } else {
            level_groups.push(vec![i]);
        }
    }
    let level_energies: Vec<f64> = level_groups
        .iter()
        .map(|g| g.iter().map(|&i| energies[i]).sum::<f64>() / g.len() as f64)
        .collect();

    let nrc_class = classify(&level_groups, &level_energies, d, eps_res * spectral_range);

    Ok(SpectralDecomp {
        energies,
        eigenvectors,
        level_groups,
        level_energies,
        nrc_class,
        spectral_range,
        eps_deg,
        eps_res,
    })
}

/// Largest-magnitude component made real positive; the first component
/// within 1e-10 of the maximum wins ties.
fn fix_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-10)).unwrap();
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[pivot] = C64::new(v[pivot].re, 0.0);
}

fn classify(groups: &[Vec<usize>], levels: &[f64], d: usize, res_tol: f64) -> NrcClass {
    let m = levels.len();
    if m == 1 {
        return if d == 1 { NrcClass::Nrc } else { NrcClass::Resonant };
    }
    let mut gaps = Vec::with_capacity(m * (m - 1) / 2);
    for k in 0..m {
        for l in (k + 1)..m {
            gaps.push(levels[l] - levels[k]);
        }
    }
    gaps.sort_by(f64::total_cmp);
    if gaps.windows(2).any(|w| w[1] - w[0] <= res_tol) {
        return NrcClass::Resonant;
    }
    if groups.iter().all(|g| g.len() == 1) {
        NrcClass::Nrc
    } else {
        NrcClass::NrcPlus
    }
}
