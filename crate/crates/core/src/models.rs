//! Hamiltonians and physical configurations: Pauli strings, spin chains,
//! the five-qubit perfect code, and cyclic-group quantum reference frames.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gtps::{conjugate, stabilizer_algebra, AlgebraRep, GtpsSpec};
use crate::linalg::{eig_hermitian, kron_all, ComplexMatrix, C64, I, ONE, ZERO};

/// Stabilizer generators of the five-qubit perfect code.
pub const PERFECT_CODE_GENERATORS: [&str; 4] = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"];

/// Default pairwise-distinct couplings `(J_x, J_y, J_z)` of the QRF toy model.
pub const DEFAULT_QRF_COUPLINGS: [f64; 3] = [0.3, 0.7, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// Tensor product of single-qubit Paulis; qubit 0 is the most significant
/// factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    ops: Vec<Pauli>,
}

pub fn parse_pauli(s: &str) -> Result<PauliString> {
    if s.is_empty() {
        return Err(Error::InvalidPauli("empty Pauli string".into()));
    }
    let ops = s
        .chars()
        .map(|c| match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::InvalidPauli(format!("unexpected character {other:?} in {s:?}"))),
        })
        .collect::<Result<_>>()?;
    Ok(PauliString { ops })
}

/// Dense matrix of a Pauli string such as `"XZZXI"`.
pub fn pauli_string(s: &str) -> Result<ComplexMatrix> {
    let p = parse_pauli(s)?;
    if p.len() > 14 {
        return Err(Error::InvalidArgument(format!("{} qubits is too many for a dense matrix", p.len())));
    }
    Ok(p.matrix())
}

impl PauliString {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    fn masks(&self) -> (usize, usize, u32) {
        let n = self.len();
        let (mut x, mut z, mut ys) = (0usize, 0usize, 0u32);
        for (q, op) in self.ops.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match op {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ys += 1;
                }
            }
        }
        (x, z, ys)
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let d = 1usize << self.len();
        let mut m = ComplexMatrix::zeros(d, d);
        add_pauli(&mut m, self, ONE);
        m
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let clashes = self
            .ops
            .iter()
            .zip(&other.ops)
            .filter(|(a, b)| **a != Pauli::I && **b != Pauli::I && a != b)
            .count();
        clashes % 2 == 0
    }

    /// Binary vector `(x_1..x_n | z_1..z_n)`.
    pub fn symplectic(&self) -> Vec<bool> {
        let xs = self.ops.iter().map(|p| matches!(p, Pauli::X | Pauli::Y));
        let zs = self.ops.iter().map(|p| matches!(p, Pauli::Z | Pauli::Y));
        xs.chain(zs).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.ops {
            let c = match op {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// `m += c * P` using the one-nonzero-per-column structure of Paulis:
/// `P|b> = i^{#Y} (-1)^{|b & z|} |b ^ x>`.
pub fn add_pauli(m: &mut ComplexMatrix, p: &PauliString, c: C64) {
    let (x, z, ys) = p.masks();
    let base = c * I.powu(ys);
    for b in 0..m.cols() {
        let sign = if (b & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        m[(b ^ x, b)] += base * sign;
    }
}

fn single_site(n: usize, sites: &[(usize, Pauli)]) -> PauliString {
    let mut ops = vec![Pauli::I; n];
    for &(q, p) in sites {
        ops[q] = p;
    }
    PauliString { ops }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SpinModel {
    HeisenbergRing,
    TfimOpen,
    XxzOpen,
}

impl SpinModel {
    pub fn required_keys(&self) -> &'static [&'static str] {
        match self {
            SpinModel::HeisenbergRing => &["h"],
            SpinModel::TfimOpen => &["h", "g"],
            SpinModel::XxzOpen => &["jx", "j"],
        }
    }

    pub fn default_couplings(&self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            SpinModel::HeisenbergRing => &[("h", 0.0)],
            SpinModel::TfimOpen => &[("h", -0.5), ("g", 1.05)],
            SpinModel::XxzOpen => &[("jx", -0.4), ("j", -1.0)],
        };
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    pub fn cli_name(&self) -> &'static str {
        match self {
            SpinModel::HeisenbergRing => "heisenberg-ring",
            SpinModel::TfimOpen => "tfim",
            SpinModel::XxzOpen => "xxz",
        }
    }
}

impl FromStr for SpinModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heisenberg-ring" => Ok(SpinModel::HeisenbergRing),
            "tfim" => Ok(SpinModel::TfimOpen),
            "xxz" => Ok(SpinModel::XxzOpen),
            other => Err(Error::InvalidArgument(format!(
                "unknown model {other:?} (expected heisenberg-ring, tfim or xxz)"
            ))),
        }
    }
}

impl fmt::Display for SpinModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinChainParams {
    pub n: usize,
    pub model: SpinModel,
    pub couplings: BTreeMap<String, f64>,
}

impl SpinChainParams {
    pub fn new(n: usize, model: SpinModel, couplings: BTreeMap<String, f64>) -> Result<Self> {
        let p = Self { n, model, couplings };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with the model's default couplings.
    pub fn with_defaults(n: usize, model: SpinModel) -> Result<Self> {
        Self::new(n, model, model.default_couplings())
    }

    pub fn heisenberg_ring(n: usize, h: f64) -> Result<Self> {
        Self::new(n, SpinModel::HeisenbergRing, [("h".to_string(), h)].into())
    }

    pub fn tfim(n: usize, h: f64, g: f64) -> Result<Self> {
        Self::new(n, SpinModel::TfimOpen, [("h".to_string(), h), ("g".to_string(), g)].into())
    }

    pub fn xxz(n: usize, jx: f64, j: f64) -> Result<Self> {
        Self::new(n, SpinModel::XxzOpen, [("jx".to_string(), jx), ("j".to_string(), j)].into())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n > 12 {
            return Err(Error::InvalidArgument(format!("spin chains need 2..=12 sites, got {}", self.n)));
        }
        let required = self.model.required_keys();
        for key in required {
            match self.couplings.get(*key) {
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "model {} is missing coupling {key:?}",
                        self.model
                    )))
                }
                Some(v) if !v.is_finite() => {
                    return Err(Error::InvalidArgument(format!("coupling {key:?} is not finite")))
                }
                _ => {}
            }
        }
        if let Some(extra) = self.couplings.keys().find(|k| !required.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!(
                "model {} has no coupling {extra:?}",
                self.model
            )));
        }
        Ok(())
    }

    fn get(&self, key: &str) -> f64 {
        self.couplings[key]
    }
}

pub fn build_hamiltonian(p: &SpinChainParams) -> Result<ComplexMatrix> {
    p.validate()?;
    let n = p.n;
    let d = 1usize << n;
    let mut h = ComplexMatrix::zeros(d, d);
    let mut add = |c: f64, sites: &[(usize, Pauli)]| {
        if c != 0.0 {
            add_pauli(&mut h, &single_site(n, sites), C64::new(c, 0.0));
        }
    };
    match p.model {
        SpinModel::HeisenbergRing => {
            let field = p.get("h");
            for i in 0..n {
                let j = (i + 1) % n;
                add(field, &[(i, Pauli::Z)]);
                for s in [Pauli::X, Pauli::Y, Pauli::Z] {
                    add(1.0, &[(i, s), (j, s)]);
                }
            }
        }
        SpinModel::TfimOpen => {
            let (field, g) = (p.get("h"), p.get("g"));
            for i in 0..n {
                add(field, &[(i, Pauli::Z)]);
                add(g, &[(i, Pauli::X)]);
            }
            for i in 0..n - 1 {
                add(-1.0, &[(i, Pauli::Z), (i + 1, Pauli::Z)]);
            }
        }
        SpinModel::XxzOpen => {
            let (jx, j) = (p.get("jx"), p.get("j"));
            for i in 0..n - 1 {
                add(jx, &[(i, Pauli::X), (i + 1, Pauli::X)]);
                add(jx, &[(i, Pauli::Y), (i + 1, Pauli::Y)]);
                add(j, &[(i, Pauli::Z), (i + 1, Pauli::Z)]);
            }
        }
    }
    Ok(h)
}

pub fn perfect_code_algebra() -> AlgebraRep {
    stabilizer_algebra(&PERFECT_CODE_GENERATORS, 5).expect("perfect code generators are valid")
}

/// `exp(i theta sigma_y)` applied to each of `n` qubits.
pub fn global_y_rotation(n: usize, theta: f64) -> ComplexMatrix {
    let (c, s) = (theta.cos(), theta.sin());
    let r = ComplexMatrix::from_rows(&[
        vec![C64::new(c, 0.0), C64::new(s, 0.0)],
        vec![C64::new(-s, 0.0), C64::new(c, 0.0)],
    ]);
    kron_all(&vec![r; n])
}

/// The perfect-code algebra conjugated by the uniform rotation
/// `exp(i theta sigma_y)` on all five qubits.
pub fn rotated_code_algebra(theta: f64) -> AlgebraRep {
    let w = global_y_rotation(5, theta);
    conjugate(&perfect_code_algebra(), &w).expect("product rotation is unitary")
}

/// Ideal cyclic-group reference frames: two frame registers `C^m` carrying
/// the regular representation and a system with its own representation.
#[derive(Debug, Clone)]
pub struct QrfConfig {
    pub group_order: usize,
    pub system_rep: Vec<ComplexMatrix>,
    pub frame_orientations: (usize, usize),
}

impl QrfConfig {
    pub fn new(system_rep: Vec<ComplexMatrix>, frame_orientations: (usize, usize)) -> Result<Self> {
        let m = system_rep.len();
        if m == 0 {
            return Err(Error::Empty);
        }
        let ds = system_rep[0].rows();
        for u in &system_rep {
            if u.rows() != ds || u.cols() != ds {
                return Err(Error::InvalidArgument("system representation has mixed dimensions".into()));
            }
            u.ensure_unitary(1e-10)?;
        }
        for a in 0..m {
            for b in 0..m {
                let prod = system_rep[a].matmul(&system_rep[b]);
                if prod.max_abs_diff(&system_rep[(a + b) % m]) > 1e-10 {
                    return Err(Error::InvalidArgument(format!(
                        "system_rep is not a representation of Z_{m} ({a} + {b})"
                    )));
                }
            }
        }
        if frame_orientations.0 >= m || frame_orientations.1 >= m {
            return Err(Error::InvalidArgument("frame orientation outside the group".into()));
        }
        Ok(Self {
            group_order: m,
            system_rep,
            frame_orientations,
        })
    }

    /// Two qubit frames and a qubit system, `U^g = sigma_x` everywhere, both
    /// frames in the identity orientation.
    pub fn z2_toy() -> Self {
        let x = pauli_string("X").unwrap();
        Self::new(vec![ComplexMatrix::identity(2), x], (0, 0)).unwrap()
    }

    pub fn system_dim(&self) -> usize {
        self.system_rep[0].rows()
    }

    /// Dimension of one perspective space `C^m (x) H_S`.
    pub fn perspective_dim(&self) -> usize {
        self.group_order * self.system_dim()
    }

    fn frame_rep(&self, g: usize) -> ComplexMatrix {
        let m = self.group_order;
        ComplexMatrix::from_fn(m, m, |r, c| if r == (c + g) % m { ONE } else { ZERO })
    }

    /// Group average `(1/|G|) sum_g U_1^g (x) U_2^g (x) U_S^g`.
    pub fn physical_projector(&self) -> ComplexMatrix {
        let m = self.group_order;
        let total = m * m * self.system_dim();
        let mut p = ComplexMatrix::zeros(total, total);
        for g in 0..m {
            let fr = self.frame_rep(g);
            p += &kron_all(&[fr.clone(), fr, self.system_rep[g].clone()]);
        }
        p.scale_re(1.0 / m as f64)
    }
}

/// Reduction map `R_i^g = sqrt|G| (<g|_i (x) 1) Pi_phys` into the perspective
/// of frame `i`, as a `(m d_S) x (m^2 d_S)` matrix. Frame 1's perspective
/// space is `frame2 (x) S`, frame 2's is `frame1 (x) S`.
pub fn qrf_reduction(config: &QrfConfig, frame: usize, g: usize) -> Result<ComplexMatrix> {
    let m = config.group_order;
    let ds = config.system_dim();
    if frame != 1 && frame != 2 {
        return Err(Error::InvalidArgument(format!("frame must be 1 or 2, got {frame}")));
    }
    if g >= m {
        return Err(Error::InvalidArgument(format!("group element {g} outside Z_{m}")));
    }
    let pi = config.physical_projector();
    let rank = pi.trace().re;
    if (rank - config.perspective_dim() as f64).abs() > 1e-8 {
        return Err(Error::NumericalConsistency(format!(
            "physical subspace has dimension {rank:.3}, expected {}",
            config.perspective_dim()
        )));
    }
    let scale = (m as f64).sqrt();
    let r = ComplexMatrix::from_fn(m * ds, m * m * ds, |row, col| {
        let (h, s) = (row / ds, row % ds);
        let total = if frame == 1 {
            (g * m + h) * ds + s
        } else {
            (h * m + g) * ds + s
        };
        pi[(total, col)] * scale
    });
    let defect = r.matmul(&r.adjoint()).max_abs_diff(&ComplexMatrix::identity(m * ds));
    if defect > 1e-10 {
        return Err(Error::NumericalConsistency(format!(
            "reduction map is not unitary on the physical subspace ({defect:.2e})"
        )));
    }
    Ok(r)
}

/// Frame change `V_{1->2} = R_2^{g2} (R_1^{g1})^dagger` between the two
/// perspective spaces.
pub fn qrf_frame_change(config: &QrfConfig) -> Result<ComplexMatrix> {
    let (g1, g2) = config.frame_orientations;
    let r1 = qrf_reduction(config, 1, g1)?;
    let r2 = qrf_reduction(config, 2, g2)?;
    Ok(r2.matmul(&r1.adjoint()))
}

/// Toy-model Hamiltonians in the perspectives of frame 1 and frame 2.
pub fn qrf_hamiltonians(j: [f64; 3]) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let [jx, jy, jz] = j;
    let term = |c: f64, s: &str| pauli_string(s).unwrap().scale_re(c);
    let h1 = &(&term(jz, "ZZ") + &term(jx, "XX")) + &term(jy, "YY");
    let h2 = &(&term(jz, "IZ") + &term(jx, "XI")) - &term(jy, "XZ");
    let v = qrf_frame_change(&QrfConfig::z2_toy())?;
    let defect = h1.conjugate_by(&v).max_abs_diff(&h2);
    if defect > 1e-12 * (1.0 + h1.inf_norm()) {
        return Err(Error::NumericalConsistency(format!(
            "frame change does not map H_1 to H_2 ({defect:.2e})"
        )));
    }
    Ok((h1, h2))
}

/// The natural system-observable algebras `A^1 = 1_2 (x) L(S)` and its
/// frame-2 counterpart `A^2 = V^dagger (1_1 (x) L(S)) V`, both on frame 1's
/// perspective space.
pub fn qrf_natural_algebras() -> Result<(AlgebraRep, AlgebraRep)> {
    let spec = GtpsSpec::bipartite(2, 2)?;
    let v = qrf_frame_change(&QrfConfig::z2_toy())?;
    let a1 = AlgebraRep::canonical(spec.clone());
    let a2 = AlgebraRep::new(spec, v.adjoint())?;
    Ok((a1, a2))
}

/// Abelian algebra generated by `1 (x) sigma^eta` on a frame (x) system
/// perspective space. Sector 0 is the `+1` eigenspace of `sigma^eta`.
pub fn eta_algebra(frame: usize, eta: [f64; 3]) -> Result<AlgebraRep> {
    if frame != 1 && frame != 2 {
        return Err(Error::InvalidArgument(format!("frame must be 1 or 2, got {frame}")));
    }
    let norm = eta.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("eta must be a unit vector, |eta| = {norm}")));
    }
    let sigma = spin_along(eta);
    let eig = eig_hermitian(&sigma, 0.0, 0.0)?;
    let plus = eig.eigenvectors.column(1);
    let minus = eig.eigenvectors.column(0);
    let mut framing = ComplexMatrix::zeros(4, 4);
    for (sector, v) in [plus, minus].iter().enumerate() {
        for p in 0..2 {
            let col = 2 * sector + p;
            for s in 0..2 {
                framing[(2 * p + s, col)] = v[s];
            }
        }
    }
    AlgebraRep::new(GtpsSpec::from_pairs(&[(2, 1), (2, 1)])?, framing)
}

/// `eta . sigma` on one qubit.
pub fn spin_along(eta: [f64; 3]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    for (c, s) in eta.iter().zip(["X", "Y", "Z"]) {
        add_pauli(&mut m, &parse_pauli(s).unwrap(), C64::new(*c, 0.0));
    }
    m
}
