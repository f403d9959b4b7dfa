//! Algebras `A = (+)_J 1_{n_J} (x) L(C^{d_J})` represented by their sector
//! structure plus a unitary framing of the distinguished basis.
//!
//! The distinguished basis is block ordered: sector `J` occupies a
//! contiguous range of `n_J * d_J` indices starting at its offset, and inside
//! the block `|p> (x) |k>` sits at `offset + p * d_J + k`. Column `i` of the
//! framing is the computational-basis image of distinguished vector `i`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use rand::Rng;

use crate::linalg::{haar_unitary, kron, ComplexMatrix, C64, ONE};
use crate::models::{parse_pauli, PauliString};

/// One superselection sector `C^{n} (x) C^{d}`: `n` is the commutant
/// multiplicity, `d` the dimension the algebra acts on irreducibly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sector {
    pub n: usize,
    pub d: usize,
}

impl Sector {
    pub fn new(n: usize, d: usize) -> Self {
        Self { n, d }
    }

    pub fn size(&self) -> usize {
        self.n * self.d
    }
}

/// Structural fingerprint of an algebra. Sectors are kept sorted by
/// descending `n*d`, ties by descending `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct GtpsSpec {
    sectors: Vec<Sector>,
}

impl TryFrom<Vec<(usize, usize)>> for GtpsSpec {
    type Error = Error;
    fn try_from(pairs: Vec<(usize, usize)>) -> Result<Self> {
        GtpsSpec::new(pairs.into_iter().map(|(n, d)| Sector::new(n, d)).collect())
    }
}

impl From<GtpsSpec> for Vec<(usize, usize)> {
    fn from(spec: GtpsSpec) -> Self {
        spec.pairs()
    }
}

impl GtpsSpec {
    pub fn new(mut sectors: Vec<Sector>) -> Result<Self> {
        if sectors.is_empty() {
            return Err(Error::InvalidArgument("algebra needs at least one sector".into()));
        }
        if sectors.iter().any(|s| s.n == 0 || s.d == 0) {
            return Err(Error::InvalidArgument("sector dimensions must be positive".into()));
        }
        sectors.sort_by(|a, b| b.size().cmp(&a.size()).then(b.n.cmp(&a.n)));
        Ok(Self { sectors })
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(n, d)| Sector::new(n, d)).collect())
    }

    /// Bipartite algebra `1_{n} (x) L(C^{d})`.
    pub fn bipartite(n: usize, d: usize) -> Result<Self> {
        Self::from_pairs(&[(n, d)])
    }

    /// Maximal abelian algebra on `C^dim`.
    pub fn maximal_abelian(dim: usize) -> Result<Self> {
        Self::new(vec![Sector::new(1, 1); dim])
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.sectors.iter().map(|s| (s.n, s.d)).collect()
    }

    /// Number of sectors, the dimension of the center.
    pub fn d_z(&self) -> usize {
        self.sectors.len()
    }

    /// Hilbert space dimension.
    pub fn dim(&self) -> usize {
        self.sectors.iter().map(Sector::size).sum()
    }

    pub fn dim_a(&self) -> usize {
        self.sectors.iter().map(|s| s.d * s.d).sum()
    }

    pub fn dim_aprime(&self) -> usize {
        self.sectors.iter().map(|s| s.n * s.n).sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.sectors
            .iter()
            .map(|s| {
                let o = acc;
                acc += s.size();
                o
            })
            .collect()
    }

    /// Commutant structure: swaps `n` and `d` in every sector.
    pub fn commutant(&self) -> Self {
        Self::new(self.sectors.iter().map(|s| Sector::new(s.d, s.n)).collect())
            .expect("commutant of a valid spec is valid")
    }
}

/// A concrete algebra on `C^d`.
#[derive(Debug, Clone)]
pub struct AlgebraRep {
    spec: GtpsSpec,
    framing: ComplexMatrix,
    identity_framing: bool,
}

/// Sector block in the distinguished frame.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Block {
    pub offset: usize,
    pub n: usize,
    pub d: usize,
}

impl Block {
    #[inline]
    pub fn idx(&self, p: usize, k: usize) -> usize {
        self.offset + p * self.d + k
    }
}

impl AlgebraRep {
    pub fn new(spec: GtpsSpec, framing: ComplexMatrix) -> Result<Self> {
        let d = spec.dim();
        if framing.rows() != d || framing.cols() != d {
            return Err(dim_mismatch(
                format!("{d}x{d} framing"),
                format!("{}x{}", framing.rows(), framing.cols()),
            ));
        }
        framing.ensure_unitary(1e-10)?;
        let identity_framing = framing.max_abs_diff(&ComplexMatrix::identity(d)) == 0.0;
        Ok(Self {
            spec,
            framing,
            identity_framing,
        })
    }

    /// Algebra whose distinguished basis is the computational basis.
    pub fn canonical(spec: GtpsSpec) -> Self {
        let d = spec.dim();
        Self {
            spec,
            framing: ComplexMatrix::identity(d),
            identity_framing: true,
        }
    }

    pub fn spec(&self) -> &GtpsSpec {
        &self.spec
    }

    pub fn framing(&self) -> &ComplexMatrix {
        &self.framing
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn is_bipartite(&self) -> bool {
        self.spec.d_z() == 1
    }

    pub(crate) fn blocks(&self) -> Vec<Block> {
        self.spec
            .sectors()
            .iter()
            .zip(self.spec.offsets())
            .map(|(s, offset)| Block {
                offset,
                n: s.n,
                d: s.d,
            })
            .collect()
    }

    /// `V^dagger x V`: an operator expressed in the distinguished basis.
    pub fn to_local(&self, x: &ComplexMatrix) -> ComplexMatrix {
        if self.identity_framing {
            x.clone()
        } else {
            x.conjugate_by_adjoint(&self.framing)
        }
    }

    /// `V y V^dagger`.
    pub fn from_local(&self, y: &ComplexMatrix) -> ComplexMatrix {
        if self.identity_framing {
            y.clone()
        } else {
            y.conjugate_by(&self.framing)
        }
    }

    /// `V^dagger w`, e.g. eigenvectors expressed in the distinguished basis.
    pub fn vectors_to_local(&self, w: &ComplexMatrix) -> ComplexMatrix {
        if self.identity_framing {
            w.clone()
        } else {
            self.framing.adjoint_mul(w)
        }
    }

    fn check_dim(&self, x: &ComplexMatrix) -> Result<()> {
        let d = self.dim();
        if x.rows() != d || x.cols() != d {
            return Err(dim_mismatch(
                format!("{d}x{d}"),
                format!("{}x{}", x.rows(), x.cols()),
            ));
        }
        Ok(())
    }

    /// Orthogonal bases `e_alpha` of A and `f_gamma` of A'. The operators are
    /// mutually orthogonal with `||e||^2 = n_J/d_J` and `||f||^2 = d_J/n_J`,
    /// the normalisation under which `P_A(x) = sum f x f^dagger`.
    pub fn basis_operators(&self) -> (Vec<ComplexMatrix>, Vec<ComplexMatrix>) {
        let d = self.dim();
        let mut es = Vec::with_capacity(self.spec.dim_a());
        let mut fs = Vec::with_capacity(self.spec.dim_aprime());
        for b in self.blocks() {
            let ce = C64::new(1.0 / (b.d as f64).sqrt(), 0.0);
            for k in 0..b.d {
                for l in 0..b.d {
                    let mut e = ComplexMatrix::zeros(d, d);
                    for p in 0..b.n {
                        e[(b.idx(p, k), b.idx(p, l))] = ce;
                    }
                    es.push(self.from_local(&e));
                }
            }
            let cf = C64::new(1.0 / (b.n as f64).sqrt(), 0.0);
            for p in 0..b.n {
                for q in 0..b.n {
                    let mut f = ComplexMatrix::zeros(d, d);
                    for k in 0..b.d {
                        f[(b.idx(p, k), b.idx(q, k))] = cf;
                    }
                    fs.push(self.from_local(&f));
                }
            }
        }
        (es, fs)
    }

    /// Orthogonal projection onto A (block form).
    pub fn project_a(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(x)?;
        Ok(self.from_local(&self.project_a_local(&self.to_local(x))))
    }

    /// Orthogonal projection onto A' (block form).
    pub fn project_aprime(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(x)?;
        Ok(self.from_local(&self.project_aprime_local(&self.to_local(x))))
    }

    /// Projection onto the center Z(A) = A cap A'.
    pub fn project_center(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(x)?;
        Ok(self.from_local(&self.project_center_local(&self.to_local(x))))
    }

    /// Kraus form `sum_gamma f_gamma x f_gamma^dagger` of the projection onto A.
    pub fn project_a_kraus(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(x)?;
        let (_, fs) = self.basis_operators();
        Ok(kraus_sum(&fs, x))
    }

    /// Kraus form `sum_alpha e_alpha x e_alpha^dagger` of the projection onto A'.
    pub fn project_aprime_kraus(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(x)?;
        let (es, _) = self.basis_operators();
        Ok(kraus_sum(&es, x))
    }

    /// `(+)_J 1/n_J (x) Tr_{n_J}(y_JJ)` in the distinguished frame.
    pub(crate) fn project_a_local(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim();
        let mut out = ComplexMatrix::zeros(d, d);
        for b in self.blocks() {
            let inv_n = 1.0 / b.n as f64;
            for k in 0..b.d {
                for l in 0..b.d {
                    let t: C64 = (0..b.n).map(|p| y[(b.idx(p, k), b.idx(p, l))]).sum();
                    let t = t * inv_n;
                    for p in 0..b.n {
                        out[(b.idx(p, k), b.idx(p, l))] = t;
                    }
                }
            }
        }
        out
    }

    /// `(+)_J Tr_{d_J}(y_JJ) (x) 1/d_J` in the distinguished frame.
    pub(crate) fn project_aprime_local(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim();
        let mut out = ComplexMatrix::zeros(d, d);
        for b in self.blocks() {
            let inv_d = 1.0 / b.d as f64;
            for p in 0..b.n {
                for q in 0..b.n {
                    let s: C64 = (0..b.d).map(|k| y[(b.idx(p, k), b.idx(q, k))]).sum();
                    let s = s * inv_d;
                    for k in 0..b.d {
                        out[(b.idx(p, k), b.idx(q, k))] = s;
                    }
                }
            }
        }
        out
    }

    pub(crate) fn project_center_local(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim();
        let mut out = ComplexMatrix::zeros(d, d);
        for b in self.blocks() {
            let size = b.n * b.d;
            let tr: C64 = (b.offset..b.offset + size).map(|i| y[(i, i)]).sum();
            let c = tr / size as f64;
            for i in b.offset..b.offset + size {
                out[(i, i)] = c;
            }
        }
        out
    }
}

/// Haar-random sector-local unitary `(+)_J u_{n_J} (x) u_{d_J}` in the
/// distinguished frame. Right-multiplying a framing by it leaves the
/// algebra unchanged.
pub fn sector_local_unitary<R: Rng + ?Sized>(spec: &GtpsSpec, rng: &mut R) -> ComplexMatrix {
    let d = spec.dim();
    let mut out = ComplexMatrix::zeros(d, d);
    for (s, off) in spec.sectors().iter().zip(spec.offsets()) {
        let block = kron(&haar_unitary(rng, s.n), &haar_unitary(rng, s.d));
        for r in 0..s.size() {
            for c in 0..s.size() {
                out[(off + r, off + c)] = block[(r, c)];
            }
        }
    }
    out
}

/// Algebra with the given structure and a Haar-random framing.
pub fn random_algebra<R: Rng + ?Sized>(spec: &GtpsSpec, rng: &mut R) -> AlgebraRep {
    let w = haar_unitary(rng, spec.dim());
    AlgebraRep::new(spec.clone(), w).expect("Haar framing is unitary")
}

fn kraus_sum(ops: &[ComplexMatrix], x: &ComplexMatrix) -> ComplexMatrix {
    let d = x.rows();
    let mut acc = ComplexMatrix::zeros(d, d);
    for k in ops {
        acc += &k.matmul(x).matmul(&k.adjoint());
    }
    acc
}

/// The algebra `w A w^dagger`.
pub fn conjugate(alg: &AlgebraRep, w: &ComplexMatrix) -> Result<AlgebraRep> {
    let d = alg.dim();
    if w.rows() != d || w.cols() != d {
        return Err(dim_mismatch(
            format!("{d}x{d}"),
            format!("{}x{}", w.rows(), w.cols()),
        ));
    }
    w.ensure_unitary(1e-8)?;
    Ok(AlgebraRep {
        spec: alg.spec.clone(),
        framing: w.matmul(&alg.framing),
        identity_framing: false,
    })
}

/// Group algebra of the stabilizer group generated by `generators`: one
/// sector `(2^{n-m}, 1)` per syndrome of the `m` generators. Syndromes are
/// ordered by their sign bits, generator 0 most significant.
pub fn stabilizer_algebra(generators: &[&str], n: usize) -> Result<AlgebraRep> {
    let paulis: Vec<PauliString> = generators
        .iter()
        .map(|g| parse_pauli(g))
        .collect::<Result<_>>()?;
    if paulis.iter().any(|p| p.len() != n) {
        return Err(Error::InvalidArgument(format!(
            "every generator must act on {n} qubits"
        )));
    }
    for i in 0..paulis.len() {
        for j in (i + 1)..paulis.len() {
            if !paulis[i].commutes_with(&paulis[j]) {
                return Err(Error::NonCommuting(i, j));
            }
        }
    }
    if symplectic_rank(&paulis) != paulis.len() {
        return Err(Error::DependentGenerators);
    }
    let m = paulis.len();
    let dim = 1usize << n;
    let per_sector = 1usize << (n - m);
    let mats: Vec<ComplexMatrix> = paulis.iter().map(PauliString::matrix).collect();
    let id = ComplexMatrix::identity(dim);

    let mut framing = ComplexMatrix::zeros(dim, dim);
    let mut col = 0;
    for s in 0..(1usize << m) {
        let mut proj = id.clone();
        for (l, g) in mats.iter().enumerate() {
            let sign = if (s >> (m - 1 - l)) & 1 == 1 { -1.0 } else { 1.0 };
            let factor = (&id + &g.scale_re(sign)).scale_re(0.5);
            proj = proj.matmul(&factor);
        }
        let basis = syndrome_basis(&proj, per_sector)?;
        for v in basis {
            framing.set_column(col, &v);
            col += 1;
        }
    }
    let spec = GtpsSpec::new(vec![Sector::new(per_sector, 1); 1 << m])?;
    AlgebraRep::new(spec, framing)
}

/// Orthonormal basis of the range of `proj`, from its columns in index order.
fn syndrome_basis(proj: &ComplexMatrix, rank: usize) -> Result<Vec<Vec<C64>>> {
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(rank);
    for i in 0..proj.cols() {
        if basis.len() == rank {
            break;
        }
        let mut v = proj.column(i);
        for u in &basis {
            let c: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= c * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|z| *z /= norm);
            basis.push(v);
        }
    }
    if basis.len() != rank {
        return Err(Error::NumericalConsistency(format!(
            "syndrome subspace has rank {} instead of {rank}",
            basis.len()
        )));
    }
    Ok(basis)
}

fn symplectic_rank(paulis: &[PauliString]) -> usize {
    let mut rows: Vec<Vec<bool>> = paulis.iter().map(PauliString::symplectic).collect();
    let width = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..width {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][col]) else {
            continue;
        };
        rows.swap(rank, pivot);
        for r in 0..rows.len() {
            if r != rank && rows[r][col] {
                let src = rows[rank].clone();
                for (x, y) in rows[r].iter_mut().zip(src) {
                    *x ^= y;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// `1_{complement} (x) L(C^{2^|subset|})` on `n` qubits. Qubits are numbered
/// from 1, qubit 1 being the most significant tensor factor. The framing
/// permutes qubits so the complement comes first.
pub fn spin_subset_algebra(n: usize, subset: &[usize]) -> Result<AlgebraRep> {
    if n == 0 || n > 20 {
        return Err(Error::InvalidArgument(format!("unsupported qubit count {n}")));
    }
    let mut seen = HashSet::new();
    for &q in subset {
        if q == 0 || q > n {
            return Err(Error::InvalidArgument(format!("qubit {q} outside 1..={n}")));
        }
        if !seen.insert(q) {
            return Err(Error::InvalidArgument(format!("qubit {q} listed twice")));
        }
    }
    let mut inside: Vec<usize> = subset.to_vec();
    inside.sort_unstable();
    let outside: Vec<usize> = (1..=n).filter(|q| !seen.contains(q)).collect();
    let order: Vec<usize> = outside.iter().chain(&inside).copied().collect();

    let dim = 1usize << n;
    let mut framing = ComplexMatrix::zeros(dim, dim);
    for local in 0..dim {
        let mut comp = 0usize;
        for (pos, &q) in order.iter().enumerate() {
            let bit = (local >> (n - 1 - pos)) & 1;
            comp |= bit << (n - q);
        }
        framing[(comp, local)] = ONE;
    }
    let spec = GtpsSpec::bipartite(1 << outside.len(), 1 << inside.len())?;
    let identity_framing = framing.max_abs_diff(&ComplexMatrix::identity(dim)) == 0.0;
    Ok(AlgebraRep {
        spec,
        framing,
        identity_framing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hs_inner, partial_trace, random_matrix, sigma_x, sigma_z};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const PERFECT_CODE: [&str; 4] = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"];

    fn sample_algebras(rng: &mut ChaCha8Rng) -> Vec<AlgebraRep> {
        let specs = [
            vec![(2, 2)],
            vec![(1, 1), (1, 1), (1, 1)],
            vec![(2, 1), (1, 3), (1, 1)],
            vec![(3, 2), (1, 2)],
        ];
        specs
            .iter()
            .map(|p| {
                let spec = GtpsSpec::from_pairs(p).unwrap();
                let w = haar_unitary(rng, spec.dim());
                AlgebraRep::new(spec, w).unwrap()
            })
            .chain(std::iter::once(stabilizer_algebra(&["ZZ"], 2).unwrap()))
            .collect()
    }

    #[test]
    fn spec_ordering_and_counts() {
        let s = GtpsSpec::from_pairs(&[(1, 1), (2, 3), (3, 2), (1, 6)]).unwrap();
        assert_eq!(s.pairs(), vec![(3, 2), (2, 3), (1, 6), (1, 1)]);
        assert_eq!(s.dim(), 19);
        assert_eq!(s.dim_a(), 4 + 9 + 36 + 1);
        assert_eq!(s.dim_aprime(), 9 + 4 + 1 + 1);
        assert_eq!(s.d_z(), 4);
        assert!(GtpsSpec::from_pairs(&[(0, 2)]).is_err());
        assert!(GtpsSpec::from_pairs(&[]).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let s = GtpsSpec::from_pairs(&[(2, 1), (1, 2)]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[[2,1],[1,2]]");
        let back: GtpsSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn bipartite_qubit_basis_operators() {
        let alg = AlgebraRep::canonical(GtpsSpec::bipartite(2, 2).unwrap());
        let (es, fs) = alg.basis_operators();
        assert_eq!(es.len(), 4);
        assert_eq!(fs.len(), 4);
        let s = 1.0 / 2f64.sqrt();
        for (i, e) in es.iter().enumerate() {
            let mut kl = ComplexMatrix::zeros(2, 2);
            kl[(i / 2, i % 2)] = ONE;
            let expected = kron(&ComplexMatrix::identity(2).scale_re(s), &kl);
            assert!(e.max_abs_diff(&expected) < 1e-15);
        }
    }

    #[test]
    fn maximal_abelian_bases_coincide() {
        let alg = AlgebraRep::canonical(GtpsSpec::maximal_abelian(3).unwrap());
        let (es, fs) = alg.basis_operators();
        assert_eq!(es.len(), 3);
        for (j, (e, f)) in es.iter().zip(&fs).enumerate() {
            let mut p = ComplexMatrix::zeros(3, 3);
            p[(j, j)] = ONE;
            assert_eq!(e, &p);
            assert_eq!(f, &p);
        }
    }

    #[test]
    fn basis_operators_are_orthogonal_with_block_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for alg in sample_algebras(&mut rng) {
            let (es, fs) = alg.basis_operators();
            assert_eq!(es.len(), alg.spec().dim_a());
            assert_eq!(fs.len(), alg.spec().dim_aprime());
            let mut e_norms = vec![];
            let mut f_norms = vec![];
            for s in alg.spec().sectors() {
                e_norms.extend(std::iter::repeat_n(s.n as f64 / s.d as f64, s.d * s.d));
                f_norms.extend(std::iter::repeat_n(s.d as f64 / s.n as f64, s.n * s.n));
            }
            for (set, norms) in [(&es, e_norms), (&fs, f_norms)] {
                for i in 0..set.len() {
                    for j in 0..set.len() {
                        let g = hs_inner(&set[i], &set[j]).unwrap();
                        let expect = if i == j { norms[i] } else { 0.0 };
                        assert!((g - C64::new(expect, 0.0)).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn five_qubit_code_counts() {
        let alg = stabilizer_algebra(&PERFECT_CODE, 5).unwrap();
        assert_eq!(alg.spec().d_z(), 16);
        assert!(alg.spec().sectors().iter().all(|s| s.n == 2 && s.d == 1));
        let (es, fs) = alg.basis_operators();
        assert_eq!(es.len(), 16);
        assert_eq!(fs.len(), 64);
        assert!(alg.framing().unitarity_defect() < 1e-10);
    }

    #[test]
    fn single_z_generator_is_maximal_abelian() {
        let alg = stabilizer_algebra(&["Z"], 1).unwrap();
        assert_eq!(alg.spec().pairs(), vec![(1, 1), (1, 1)]);
        assert!(alg.framing().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn parity_stabilizer_projectors() {
        let alg = stabilizer_algebra(&["ZZ"], 2).unwrap();
        assert_eq!(alg.spec().pairs(), vec![(2, 1), (2, 1)]);
        let v = alg.framing();
        let even = ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0, 1.0]);
        let odd = ComplexMatrix::from_real_diag(&[0.0, 1.0, 1.0, 0.0]);
        for (sector, expected) in [(0usize, &even), (1, &odd)] {
            let mut p = ComplexMatrix::zeros(4, 4);
            for c in 2 * sector..2 * sector + 2 {
                p += &ComplexMatrix::outer(&v.column(c), &v.column(c));
            }
            assert!(p.max_abs_diff(expected) < 1e-14);
        }
    }

    #[test]
    fn stabilizer_errors() {
        assert_eq!(
            stabilizer_algebra(&["XI", "ZI"], 2).unwrap_err(),
            Error::NonCommuting(0, 1)
        );
        assert_eq!(
            stabilizer_algebra(&["ZZ", "ZZ"], 2).unwrap_err(),
            Error::DependentGenerators
        );
        assert_eq!(
            stabilizer_algebra(&["XX", "ZZ", "YY"], 2).unwrap_err(),
            Error::DependentGenerators
        );
        assert!(stabilizer_algebra(&["ZQ"], 2).is_err());
        assert!(stabilizer_algebra(&["ZZZ"], 2).is_err());
    }

    #[test]
    fn spin_subset_framings() {
        let alg = spin_subset_algebra(2, &[2]).unwrap();
        assert_eq!(alg.spec().pairs(), vec![(2, 2)]);
        assert_eq!(alg.framing(), &ComplexMatrix::identity(4));

        let alg = spin_subset_algebra(6, &[1, 2, 3]).unwrap();
        assert_eq!(alg.spec().pairs(), vec![(8, 8)]);
        let v = alg.framing();
        for local in 0..64 {
            let swapped = ((local & 7) << 3) | (local >> 3);
            assert_eq!(v[(swapped, local)], ONE);
        }
    }

    #[test]
    fn spin_subset_block_form_matches_partial_trace() {
        // A = 1_{3,4,5} (x) L(C^8) on qubits {1,2,6}: P_A(x) = 1/8 (x) Tr_{3,4,5}(x)
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let alg = spin_subset_algebra(6, &[1, 2, 6]).unwrap();
        assert_ne!(alg.framing(), &ComplexMatrix::identity(64));
        let x = random_matrix(&mut rng, 64, 64);
        let pa = alg.project_a(&x).unwrap();
        let dims = [2; 6];
        let kept = partial_trace(&x, &dims, &[0, 1, 5]).unwrap();
        let kept_again = partial_trace(&pa, &dims, &[0, 1, 5]).unwrap();
        assert!(kept.max_abs_diff(&kept_again) < 1e-12);
        // P_A(x) is invariant under conjugation by any unitary on qubits 3..5
        let z3 = kron(
            &kron(&ComplexMatrix::identity(4), &sigma_z()),
            &ComplexMatrix::identity(8),
        );
        assert!(pa.conjugate_by(&z3).max_abs_diff(&pa) < 1e-12);
        let x4 = kron(
            &kron(&ComplexMatrix::identity(8), &sigma_x()),
            &ComplexMatrix::identity(4),
        );
        assert!(pa.commutator(&x4).max_abs() < 1e-12);
    }

    #[test]
    fn spin_subset_edge_cases() {
        let trivial = spin_subset_algebra(3, &[]).unwrap();
        assert_eq!(trivial.spec().pairs(), vec![(8, 1)]);
        let full = spin_subset_algebra(3, &[1, 2, 3]).unwrap();
        assert_eq!(full.spec().pairs(), vec![(1, 8)]);
        assert!(spin_subset_algebra(3, &[4]).is_err());
        assert!(spin_subset_algebra(3, &[0]).is_err());
        assert!(spin_subset_algebra(3, &[1, 1]).is_err());
    }

    #[test]
    fn projector_basic_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for alg in sample_algebras(&mut rng) {
            let d = alg.dim();
            let id = ComplexMatrix::identity(d);
            assert!(alg.project_a(&id).unwrap().max_abs_diff(&id) < 1e-12);
            assert!(alg.project_aprime(&id).unwrap().max_abs_diff(&id) < 1e-12);
            let (es, fs) = alg.basis_operators();
            for e in &es {
                assert!(alg.project_a(e).unwrap().max_abs_diff(e) < 1e-12);
            }
            for f in &fs {
                assert!(alg.project_aprime(f).unwrap().max_abs_diff(f) < 1e-12);
            }
            // projector rank equals dim A (trace of the superoperator)
            let mut tr_a = 0.0;
            let mut tr_ap = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let mut eij = ComplexMatrix::zeros(d, d);
                    eij[(i, j)] = ONE;
                    tr_a += hs_inner(&eij, &alg.project_a(&eij).unwrap()).unwrap().re;
                    tr_ap += hs_inner(&eij, &alg.project_aprime(&eij).unwrap()).unwrap().re;
                }
            }
            assert!((tr_a - alg.spec().dim_a() as f64).abs() < 1e-9);
            assert!((tr_ap - alg.spec().dim_aprime() as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn center_projection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let alg = AlgebraRep::new(GtpsSpec::bipartite(2, 3).unwrap(), haar_unitary(&mut rng, 6)).unwrap();
        let x = random_matrix(&mut rng, 6, 6);
        let pz = alg.project_center(&x).unwrap();
        let expected = ComplexMatrix::identity(6).scale(x.trace() / 6.0);
        assert!(pz.max_abs_diff(&expected) < 1e-12);

        let code = stabilizer_algebra(&PERFECT_CODE, 5).unwrap();
        let x = random_matrix(&mut rng, 32, 32);
        let pz = code.project_center(&x).unwrap();
        // block oracle: sum_J Tr(Pi_J x)/(n_J d_J) Pi_J with Pi_J the syndrome projectors
        let v = code.framing();
        let mut expected = ComplexMatrix::zeros(32, 32);
        for j in 0..16 {
            let mut pj = ComplexMatrix::zeros(32, 32);
            for c in 2 * j..2 * j + 2 {
                pj += &ComplexMatrix::outer(&v.column(c), &v.column(c));
            }
            let w = pj.matmul(&x).trace() / 2.0;
            expected += &pj.scale(w);
        }
        assert!(pz.max_abs_diff(&expected) < 1e-12);
        assert!(code.project_center(&pz).unwrap().max_abs_diff(&pz) < 1e-12);
    }

    #[test]
    fn conjugation_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let alg = AlgebraRep::new(GtpsSpec::from_pairs(&[(2, 1), (1, 2)]).unwrap(), haar_unitary(&mut rng, 4)).unwrap();
        let same = conjugate(&alg, &ComplexMatrix::identity(4)).unwrap();
        assert!(same.framing().max_abs_diff(alg.framing()) < 1e-15);
        let w = haar_unitary(&mut rng, 4);
        let back = conjugate(&conjugate(&alg, &w).unwrap(), &w.adjoint()).unwrap();
        assert!(back.framing().max_abs_diff(alg.framing()) < 1e-12);
        let not_unitary = ComplexMatrix::identity(4).scale_re(1.1);
        assert!(matches!(conjugate(&alg, &not_unitary), Err(Error::NotUnitary(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn projector_laws(seed in any::<u64>(), which in 0usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let alg = sample_algebras(&mut rng).swap_remove(which);
            let d = alg.dim();
            let x = random_matrix(&mut rng, d, d);
            let y = random_matrix(&mut rng, d, d);
            let pa = alg.project_a(&x).unwrap();
            let pap = alg.project_aprime(&x).unwrap();
            prop_assert!(alg.project_a(&pa).unwrap().max_abs_diff(&pa) < 1e-12);
            prop_assert!(alg.project_aprime(&pap).unwrap().max_abs_diff(&pap) < 1e-12);
            let lhs = hs_inner(&pa, &y).unwrap();
            let rhs = hs_inner(&x, &alg.project_a(&y).unwrap()).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
            // Kraus and block forms agree
            prop_assert!(alg.project_a_kraus(&x).unwrap().max_abs_diff(&pa) < 1e-12);
            prop_assert!(alg.project_aprime_kraus(&x).unwrap().max_abs_diff(&pap) < 1e-12);
            // P_A P_A' = P_A' P_A = P_Z
            let pz = alg.project_center(&x).unwrap();
            prop_assert!(alg.project_a(&pap).unwrap().max_abs_diff(&pz) < 1e-12);
            prop_assert!(alg.project_aprime(&pa).unwrap().max_abs_diff(&pz) < 1e-12);
            let dim_sum: usize = alg.spec().sectors().iter().map(|s| s.n * s.d).sum();
            prop_assert_eq!(dim_sum, d);
        }
    }
}
