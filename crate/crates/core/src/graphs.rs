//! Q-Cell topologies and their Hamiltonians.
//!
//! Real topologies use `H = −A` with `A_jk = J` on every edge. Chiral cells
//! carry complex hoppings `H_ab = −J e^{iγ_ab}`. Vertices are numbered
//! `0..N`; the wheel hub is vertex 0 and its rim is `1..N` in cyclic order.
//! Rings wrap periodically (`x_N ≡ x_0`).

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{c, hermiticity_defect, max_abs, CMatrix, CVector, C64};

/// Relative tolerance for Hermiticity checks of user-provided matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Tolerance (radians) for the antisymmetry/shift conditions on a chiral
/// phase table, compared modulo 2π.
pub const PHASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Ring {
        n: usize,
    },
    Complete {
        n: usize,
    },
    Wheel {
        n: usize,
    },
    ChiralRing {
        n: usize,
        gamma_phase: f64,
    },
    /// `phase_table[(m, l)] = γ_{m,l}`, antisymmetric and shift invariant.
    ChiralComplete {
        phase_table: Array2<f64>,
    },
    /// First row `q` of a Hermitian circulant generator, in units of `J`.
    Circulant {
        first_row: Vec<C64>,
    },
    /// Explicit Hermitian generator, in units of `J`.
    Custom {
        adjacency: CMatrix,
    },
}

/// Declarative description of a cell: the graph plus the coupling scale.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologySpec {
    pub kind: Topology,
    pub coupling_j: f64,
}

impl TopologySpec {
    pub fn new(kind: Topology) -> Self {
        Self {
            kind,
            coupling_j: 1.0,
        }
    }

    pub fn ring(n: usize) -> Self {
        Self::new(Topology::Ring { n })
    }

    pub fn complete(n: usize) -> Self {
        Self::new(Topology::Complete { n })
    }

    pub fn wheel(n: usize) -> Self {
        Self::new(Topology::Wheel { n })
    }

    pub fn chiral_ring(n: usize, gamma_phase: f64) -> Self {
        Self::new(Topology::ChiralRing { n, gamma_phase })
    }

    pub fn chiral_complete(phase_table: Array2<f64>) -> Self {
        Self::new(Topology::ChiralComplete { phase_table })
    }

    pub fn circulant(first_row: Vec<C64>) -> Self {
        Self::new(Topology::Circulant { first_row })
    }

    pub fn custom(adjacency: CMatrix) -> Self {
        Self::new(Topology::Custom { adjacency })
    }

    pub fn with_coupling(mut self, coupling_j: f64) -> Self {
        self.coupling_j = coupling_j;
        self
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        match &self.kind {
            Topology::Ring { n }
            | Topology::Complete { n }
            | Topology::Wheel { n }
            | Topology::ChiralRing { n, .. } => *n,
            Topology::ChiralComplete { phase_table } => phase_table.nrows(),
            Topology::Circulant { first_row } => first_row.len(),
            Topology::Custom { adjacency } => adjacency.nrows(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Topology::Ring { .. } => "ring",
            Topology::Complete { .. } => "complete",
            Topology::Wheel { .. } => "wheel",
            Topology::ChiralRing { .. } => "chiral-ring",
            Topology::ChiralComplete { .. } => "chiral-complete",
            Topology::Circulant { .. } => "circulant",
            Topology::Custom { .. } => "custom",
        }
    }

    /// The non-chiral topology with the same vertex count, where one exists.
    pub fn plain_counterpart(&self) -> Option<TopologySpec> {
        let kind = match &self.kind {
            Topology::ChiralRing { n, .. } => Topology::Ring { n: *n },
            Topology::ChiralComplete { phase_table } => Topology::Complete {
                n: phase_table.nrows(),
            },
            Topology::Ring { .. } | Topology::Complete { .. } | Topology::Wheel { .. } => {
                self.kind.clone()
            }
            _ => return None,
        };
        Some(TopologySpec {
            kind,
            coupling_j: self.coupling_j,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupling_j.is_finite() && self.coupling_j > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling J must be positive and finite, got {}",
                self.coupling_j
            )));
        }
        let n = self.n();
        let min = match self.kind {
            Topology::Ring { .. } | Topology::ChiralRing { .. } => 3,
            Topology::Wheel { .. } => 4,
            _ => 2,
        };
        if n < min {
            return Err(Error::TooSmall {
                kind: self.kind_name(),
                min,
                n,
            });
        }
        match &self.kind {
            Topology::ChiralRing { gamma_phase, .. } if !gamma_phase.is_finite() => Err(
                Error::InvalidParameter(format!("chiral phase must be finite, got {gamma_phase}")),
            ),
            Topology::ChiralComplete { phase_table } => validate_phase_table(phase_table),
            Topology::Circulant { first_row } => validate_first_row(first_row),
            Topology::Custom { adjacency } => {
                if adjacency.nrows() != adjacency.ncols() {
                    return Err(Error::DimensionMismatch {
                        expected: adjacency.nrows(),
                        got: adjacency.ncols(),
                    });
                }
                let scale = max_abs(adjacency).max(f64::MIN_POSITIVE);
                let defect = hermiticity_defect(adjacency);
                if defect > HERMITIAN_TOL * scale {
                    return Err(Error::NotHermitian(defect));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Hamiltonian> {
        build_hamiltonian(self)
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}(n={}, J={})",
            self.kind_name(),
            self.n(),
            self.coupling_j
        )
    }
}

/// Distance of an angle from 0 modulo 2π, in `[0, π]`.
fn angle_residue(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    r.min(2.0 * PI - r)
}

fn validate_phase_table(table: &Array2<f64>) -> Result<()> {
    let n = table.nrows();
    if table.ncols() != n {
        return Err(Error::InvalidPhaseTable(format!(
            "table must be square, got {}x{}",
            n,
            table.ncols()
        )));
    }
    for m in 0..n {
        for l in 0..n {
            if m == l {
                continue;
            }
            let g = table[[m, l]];
            if !g.is_finite() {
                return Err(Error::InvalidPhaseTable(format!(
                    "non-finite phase at ({m}, {l})"
                )));
            }
            if angle_residue(g + table[[l, m]]) > PHASE_TOL {
                return Err(Error::InvalidPhaseTable(format!(
                    "γ({m},{l}) = {g} is not minus γ({l},{m}) = {}",
                    table[[l, m]]
                )));
            }
            let shifted = table[[(m + 1) % n, (l + 1) % n]];
            if angle_residue(g - shifted) > PHASE_TOL {
                return Err(Error::InvalidPhaseTable(format!(
                    "γ({m},{l}) = {g} differs from γ({},{}) = {shifted}; circulant structure broken",
                    (m + 1) % n,
                    (l + 1) % n
                )));
            }
        }
    }
    Ok(())
}

fn validate_first_row(q: &[C64]) -> Result<()> {
    let n = q.len();
    let scale = q
        .iter()
        .fold(0.0f64, |a, z| a.max(z.norm()))
        .max(f64::MIN_POSITIVE);
    if q[0].norm() > HERMITIAN_TOL * scale {
        return Err(Error::InvalidFirstRow(format!(
            "diagonal entry q_0 = {} must vanish",
            q[0]
        )));
    }
    for j in 1..n {
        if (q[n - j] - q[j].conj()).norm() > HERMITIAN_TOL * scale {
            return Err(Error::InvalidFirstRow(format!(
                "q_{} = {} is not the conjugate of q_{} = {}",
                n - j,
                q[n - j],
                j,
                q[j]
            )));
        }
    }
    Ok(())
}

/// Dense Hermitian generator of a cell.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    matrix: CMatrix,
    coupling_j: f64,
    topology: TopologySpec,
}

impl Hamiltonian {
    /// Wraps an arbitrary Hermitian matrix as a custom cell.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let spec = TopologySpec::custom(matrix);
        build_hamiltonian(&spec)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn coupling_j(&self) -> f64 {
        self.coupling_j
    }

    pub fn topology(&self) -> &TopologySpec {
        &self.topology
    }

    /// Adds a potential to the generator (used for search-style protocols).
    pub fn with_potential(&self, potential: &CMatrix) -> Result<Hamiltonian> {
        if potential.dim() != self.matrix.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: potential.nrows(),
            });
        }
        let total = &self.matrix + potential;
        let mut h = Hamiltonian::from_matrix(total)?;
        h.coupling_j = self.coupling_j;
        Ok(h)
    }
}

/// Sets `H[a,b] = z` and `H[b,a] = z*`.
fn set_pair(h: &mut CMatrix, a: usize, b: usize, z: C64) {
    h[[a, b]] = z;
    h[[b, a]] = z.conj();
}

pub fn build_hamiltonian(spec: &TopologySpec) -> Result<Hamiltonian> {
    spec.validate()?;
    let n = spec.n();
    let j = spec.coupling_j;
    let hop = c(-j, 0.0);
    let mut h = CMatrix::zeros((n, n));
    match &spec.kind {
        Topology::Ring { .. } => {
            for m in 0..n {
                set_pair(&mut h, m, (m + 1) % n, hop);
            }
        }
        Topology::ChiralRing { gamma_phase, .. } => {
            let z = C64::from_polar(j, *gamma_phase) * -1.0;
            for m in 0..n {
                set_pair(&mut h, m, (m + 1) % n, z);
            }
        }
        Topology::Complete { .. } => {
            for m in 0..n {
                for l in (m + 1)..n {
                    set_pair(&mut h, m, l, hop);
                }
            }
        }
        Topology::ChiralComplete { phase_table } => {
            for m in 0..n {
                for l in 0..m {
                    set_pair(&mut h, m, l, C64::from_polar(j, phase_table[[m, l]]) * -1.0);
                }
            }
        }
        Topology::Wheel { .. } => {
            let rim = n - 1;
            for l in 1..n {
                set_pair(&mut h, 0, l, hop);
            }
            for k in 0..rim {
                set_pair(&mut h, 1 + k, 1 + (k + 1) % rim, hop);
            }
        }
        Topology::Circulant { first_row } => {
            for a in 0..n {
                for b in (a + 1)..n {
                    set_pair(&mut h, a, b, first_row[b - a] * j);
                }
            }
        }
        Topology::Custom { adjacency } => {
            for a in 0..n {
                h[[a, a]] = c(adjacency[[a, a]].re * j, 0.0);
                for b in (a + 1)..n {
                    set_pair(&mut h, a, b, adjacency[[a, b]] * j);
                }
            }
        }
    }
    Ok(Hamiltonian {
        matrix: h,
        coupling_j: j,
        topology: spec.clone(),
    })
}

/// Returns the defining first row when every row of `h` is the cyclic right
/// shift of the previous one (relative tolerance [`HERMITIAN_TOL`]).
pub fn is_circulant(h: &Hamiltonian) -> Option<CVector> {
    circulant_first_row(h.matrix())
}

pub fn circulant_first_row(m: &CMatrix) -> Option<CVector> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return None;
    }
    let tol = HERMITIAN_TOL * max_abs(m).max(f64::MIN_POSITIVE);
    for a in 1..n {
        for b in 0..n {
            if (m[[a, b]] - m[[0, (b + n - a) % n]]).norm() > tol {
                return None;
            }
        }
    }
    Some(m.row(0).to_owned())
}

/// Parses the custom-cell edge-list format.
///
/// The first non-comment line holds the vertex count; every further line is
/// `u v re [im]`, setting `H[u][v] = re + i·im` and `H[v][u]` to its
/// conjugate. Text after `#` is ignored. A diagonal entry must be real.
pub fn parse_edge_list(text: &str) -> Result<CMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (first_line, header) = lines.next().ok_or(Error::EdgeList {
        line: 0,
        msg: "missing vertex count".into(),
    })?;
    let n: usize = header.parse().map_err(|_| Error::EdgeList {
        line: first_line,
        msg: format!("expected a vertex count, found {header:?}"),
    })?;
    if n == 0 {
        return Err(Error::EdgeList {
            line: first_line,
            msg: "vertex count must be positive".into(),
        });
    }

    let mut h = CMatrix::zeros((n, n));
    let mut seen = Array2::from_elem((n, n), false);
    for (line, content) in lines {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(Error::EdgeList {
                line,
                msg: format!("expected `u v re [im]`, found {} fields", fields.len()),
            });
        }
        let vertex = |s: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| Error::EdgeList {
                line,
                msg: format!("bad vertex index {s:?}"),
            })?;
            if v >= n {
                return Err(Error::EdgeList {
                    line,
                    msg: format!("vertex {v} out of range for {n} vertices"),
                });
            }
            Ok(v)
        };
        let number = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::EdgeList {
                line,
                msg: format!("bad number {s:?}"),
            })
        };
        let u = vertex(fields[0])?;
        let v = vertex(fields[1])?;
        let re = number(fields[2])?;
        let im = fields.get(3).map(|s| number(s)).transpose()?.unwrap_or(0.0);
        if seen[[u, v]] {
            return Err(Error::EdgeList {
                line,
                msg: format!("edge ({u}, {v}) given twice"),
            });
        }
        if u == v && im != 0.0 {
            return Err(Error::EdgeList {
                line,
                msg: "diagonal entries must be real".into(),
            });
        }
        seen[[u, v]] = true;
        seen[[v, u]] = true;
        set_pair(&mut h, u, v, c(re, im));
    }
    Ok(h)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<CMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dagger;

    fn entry(h: &Hamiltonian, a: usize, b: usize) -> C64 {
        h.matrix()[[a, b]]
    }

    #[test]
    fn ring_of_three_is_all_minus_one_off_diagonal() {
        let h = TopologySpec::ring(3).build().unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let expected = if a == b { 0.0 } else { -1.0 };
                assert_eq!(entry(&h, a, b), c(expected, 0.0));
            }
        }
    }

    #[test]
    fn wheel_of_nine_row_structure() {
        let h = TopologySpec::wheel(9).build().unwrap();
        let count = |row: usize| {
            (0..9)
                .filter(|&b| entry(&h, row, b) == c(-1.0, 0.0))
                .count()
        };
        assert_eq!(count(0), 8);
        for rim in 1..9 {
            assert_eq!(count(rim), 3);
            assert_eq!(entry(&h, rim, 0), c(-1.0, 0.0));
        }
        let nonzero = h.matrix().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 2 * (8 + 8));
    }

    #[test]
    fn chiral_ring_zero_phase_equals_ring() {
        for n in 3..9 {
            let a = TopologySpec::ring(n).with_coupling(1.7).build().unwrap();
            let b = TopologySpec::chiral_ring(n, 0.0)
                .with_coupling(1.7)
                .build()
                .unwrap();
            assert_eq!(a.matrix(), b.matrix());
        }
    }

    #[test]
    fn chiral_ring_entries_carry_the_phase() {
        let g = 0.4;
        let h = TopologySpec::chiral_ring(5, g)
            .with_coupling(2.0)
            .build()
            .unwrap();
        let z = C64::from_polar(2.0, g) * -1.0;
        for m in 0..5 {
            assert!((entry(&h, m, (m + 1) % 5) - z).norm() < 1e-15);
            assert!((entry(&h, (m + 1) % 5, m) - z.conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn chiral_ring_is_two_pi_periodic() {
        let a = TopologySpec::chiral_ring(6, 0.9).build().unwrap();
        let b = TopologySpec::chiral_ring(6, 0.9 + 2.0 * PI)
            .build()
            .unwrap();
        assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-14);
    }

    #[test]
    fn zero_phase_table_is_complete_graph() {
        for n in 2..8 {
            let a = TopologySpec::complete(n).build().unwrap();
            let b = TopologySpec::chiral_complete(Array2::zeros((n, n)))
                .build()
                .unwrap();
            assert_eq!(a.matrix(), b.matrix());
        }
    }

    #[test]
    fn generated_hamiltonians_are_exactly_hermitian() {
        let specs = vec![
            TopologySpec::ring(7),
            TopologySpec::complete(6),
            TopologySpec::wheel(8),
            TopologySpec::chiral_ring(5, 1.234),
        ];
        for s in specs {
            let h = s.build().unwrap();
            assert_eq!(h.matrix(), &dagger(h.matrix()), "{s}");
            assert!(h.matrix().diag().iter().all(|z| *z == c(0.0, 0.0)));
        }
    }

    #[test]
    fn size_minimums_are_enforced() {
        assert!(matches!(
            TopologySpec::ring(2).build(),
            Err(Error::TooSmall { min: 3, .. })
        ));
        assert!(matches!(
            TopologySpec::chiral_ring(2, 0.1).build(),
            Err(Error::TooSmall { min: 3, .. })
        ));
        assert!(matches!(
            TopologySpec::wheel(3).build(),
            Err(Error::TooSmall { min: 4, .. })
        ));
        assert!(matches!(
            TopologySpec::complete(1).build(),
            Err(Error::TooSmall { min: 2, .. })
        ));
        assert!(TopologySpec::complete(2).build().is_ok());
    }

    #[test]
    fn non_hermitian_custom_input_is_rejected() {
        let mut m = CMatrix::zeros((2, 2));
        m[[0, 1]] = c(1.0, 0.0);
        m[[1, 0]] = c(2.0, 0.0);
        assert!(matches!(
            TopologySpec::custom(m).build(),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn phase_table_violations_are_rejected() {
        let mut t = Array2::zeros((3, 3));
        t[[1, 0]] = 0.3;
        t[[0, 1]] = 0.3;
        assert!(matches!(
            TopologySpec::chiral_complete(t).build(),
            Err(Error::InvalidPhaseTable(_))
        ));

        // antisymmetric but not shift invariant
        let mut t = Array2::zeros((4, 4));
        t[[1, 0]] = 0.3;
        t[[0, 1]] = -0.3;
        assert!(matches!(
            TopologySpec::chiral_complete(t).build(),
            Err(Error::InvalidPhaseTable(_))
        ));
    }

    #[test]
    fn circulant_detection() {
        let ring = TopologySpec::ring(5).with_coupling(1.3).build().unwrap();
        let row = is_circulant(&ring).unwrap();
        let expected = [0.0, -1.3, 0.0, 0.0, -1.3];
        for (z, e) in row.iter().zip(expected) {
            assert_eq!(*z, c(e, 0.0));
        }
        assert!(is_circulant(&TopologySpec::wheel(5).build().unwrap()).is_none());

        let mut sx = CMatrix::zeros((2, 2));
        sx[[0, 1]] = c(-1.0, 0.0);
        sx[[1, 0]] = c(-1.0, 0.0);
        let h = Hamiltonian::from_matrix(sx).unwrap();
        let row = is_circulant(&h).unwrap();
        assert_eq!(row[0], c(0.0, 0.0));
        assert_eq!(row[1], c(-1.0, 0.0));
    }

    #[test]
    fn circulant_family_detection_over_sizes() {
        for n in 3..20 {
            assert!(is_circulant(&TopologySpec::ring(n).build().unwrap()).is_some());
            assert!(is_circulant(&TopologySpec::complete(n).build().unwrap()).is_some());
            // the four-vertex wheel is K4
            if n >= 5 {
                assert!(is_circulant(&TopologySpec::wheel(n).build().unwrap()).is_none());
            }
        }
    }

    #[test]
    fn circulant_first_row_round_trips() {
        let row = vec![c(0.0, 0.0), c(-1.0, 0.5), c(0.2, 0.0), c(-1.0, -0.5)];
        let h = TopologySpec::circulant(row.clone()).build().unwrap();
        let back = is_circulant(&h).unwrap();
        for (a, b) in back.iter().zip(row.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn bad_first_row_is_rejected() {
        let row = vec![c(0.0, 0.0), c(-1.0, 0.5), c(-1.0, 0.5)];
        assert!(matches!(
            TopologySpec::circulant(row).build(),
            Err(Error::InvalidFirstRow(_))
        ));
    }

    #[test]
    fn edge_list_parsing() {
        let text =
            "# square with one chiral edge\n4\n0 1 -1\n1 2 -1 0\n2 3 -1\n3 0 0 -1 # phase i\n";
        let m = parse_edge_list(text).unwrap();
        assert_eq!(m[[0, 1]], c(-1.0, 0.0));
        assert_eq!(m[[1, 0]], c(-1.0, 0.0));
        assert_eq!(m[[3, 0]], c(0.0, -1.0));
        assert_eq!(m[[0, 3]], c(0.0, 1.0));
        assert_eq!(m[[0, 2]], c(0.0, 0.0));
        assert!(Hamiltonian::from_matrix(m).is_ok());
    }

    #[test]
    fn edge_list_errors_name_the_line() {
        let err = parse_edge_list("3\n0 1 -1\n0 5 -1\n").unwrap_err();
        assert!(matches!(err, Error::EdgeList { line: 3, .. }), "{err}");
        let err = parse_edge_list("3\n0 1 -1\n1 0 -1\n").unwrap_err();
        assert!(matches!(err, Error::EdgeList { line: 3, .. }), "{err}");
        assert!(parse_edge_list("# nothing\n").is_err());
        assert!(parse_edge_list("2\n0 0 1 1\n").is_err());
    }
}
