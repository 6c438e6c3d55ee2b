//! Turaev-Viro state spaces on latticed surfaces for the fusion categories
//! `Vect[G]` and `Rep(G)`.
//!
//! A state is a labeling of the oriented edges by simple objects together
//! with one hom-space vector per face. Both backends come with a fiber
//! functor, so hom spaces are realized as concrete subspaces of tensor
//! products and every operation reduces to finite linear algebra.
//!
//! Conventions:
//! * a face word lists, slot by slot, the label of the edge if it is crossed
//!   along its orientation and the dual label otherwise;
//! * in `Rep(G)` the dual of `ρ` on a reversed slot is realized by the
//!   complex conjugate matrices `conj(ρ)`;
//! * the vertex projector at `v` is `Σ_z (d_z/d) W_z`, where `W_z` fuses a
//!   `z`-labelled loop around `v` into the edges of its star and `d` is the
//!   categorical dimension. For `Vect[G]` this is the average of the gauge
//!   moves at `v`.

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::groups::FiniteGroup;
use crate::harmonic::{dual_weight, fourier_nonabelian, WeightFunction};
use crate::homology::{coboundaries, cohomology};
use crate::ising::{fourier_compare, KwReport};
use crate::surface::{dual_lattice, Lattice2};
use crate::{Error, Result, C64};

/// Default cap on the state-space dimension.
pub const DEFAULT_STATE_CAP: usize = 1 << 16;
/// Default cap on the group order accepted by [`build_backend`].
pub const DEFAULT_GROUP_CAP: usize = 1 << 10;
/// Default cap on the dimension of a single tensor product examined for
/// invariants.
pub const DEFAULT_TENSOR_CAP: usize = 1 << 12;
/// Largest dimension for which ranks are computed by a dense eigensolver.
pub const DENSE_RANK_LIMIT: usize = 1500;

const DROP: f64 = 1e-13;

/// Which fusion category a backend models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// `G`-graded vector spaces; simples are group elements.
    Vect,
    /// Finite-dimensional representations; simples are irreducibles.
    Rep,
}

impl FromStr for BackendKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vect" | "vectg" => Ok(BackendKind::Vect),
            "rep" | "repg" => Ok(BackendKind::Rep),
            other => Err(Error::InvalidInput(format!("unknown backend `{other}`"))),
        }
    }
}

/// Orthonormal basis of a hom space `Hom(1, w₁⊗…⊗wₙ)` inside the tensor
/// product of the fiber-functor spaces, slot 0 most significant.
#[derive(Clone, Debug)]
pub struct HomBasis {
    pub slot_dims: Vec<usize>,
    pub vectors: Vec<Vec<C64>>,
}

impl HomBasis {
    /// Number of basis vectors.
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }
}

/// A cyclic word of simples; the flag marks a dual (reversed) slot.
pub type Word = Vec<(usize, bool)>;

#[derive(Clone, Debug)]
struct FusionChannel {
    out: usize,
    /// Isometric intertwiner from `out` into `x ⊗ ζ`, rows in Kronecker order.
    iso: DMatrix<C64>,
}

/// One of the two fusion categories, with its fiber functor.
#[derive(Debug)]
pub struct FusionBackend {
    kind: BackendKind,
    group: FiniteGroup,
    names: Vec<String>,
    dims: Vec<usize>,
    dual: Vec<usize>,
    /// `Rep(G)` only: `matrices[x][g]`.
    matrices: Vec<Vec<DMatrix<C64>>>,
    characters: Vec<Vec<C64>>,
    /// Unitary `J_x` with `conj(ρ_x) J_x = J_x ρ_{x∨}`.
    dual_intertwiner: Vec<DMatrix<C64>>,
    tensor_cap: usize,
    hom_cache: Mutex<HashMap<Word, Arc<HomBasis>>>,
    fusion_cache: Mutex<HashMap<FusionKey, Arc<Vec<FusionChannel>>>>,
}

/// Cache key of fusion channels: the two simples and whether the second is dualized.
type FusionKey = (usize, usize, bool);

/// Build the `Vect[G]` or `Rep(G)` backend.
pub fn build_backend(kind: BackendKind, group: &FiniteGroup) -> Result<FusionBackend> {
    build_backend_with_cap(kind, group, DEFAULT_GROUP_CAP)
}

/// [`build_backend`] with an explicit bound on `#G`.
pub fn build_backend_with_cap(kind: BackendKind, group: &FiniteGroup, cap: usize) -> Result<FusionBackend> {
    let n = group.order();
    if n > cap {
        return Err(Error::cap("group order", n as f64, cap as f64));
    }
    let one = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    let backend = match kind {
        BackendKind::Vect => FusionBackend {
            kind,
            group: group.clone(),
            names: (0..n).map(|g| group.element_name(g).to_string()).collect(),
            dims: vec![1; n],
            dual: (0..n).map(|g| group.inv(g)).collect(),
            matrices: Vec::new(),
            characters: Vec::new(),
            dual_intertwiner: vec![one; n],
            tensor_cap: DEFAULT_TENSOR_CAP,
            hom_cache: Mutex::new(HashMap::new()),
            fusion_cache: Mutex::new(HashMap::new()),
        },
        BackendKind::Rep => {
            let irreps = group.irreps()?;
            let characters: Vec<Vec<C64>> = irreps.iter().map(|r| r.character.clone()).collect();
            let dual: Vec<usize> = characters
                .iter()
                .map(|chi| {
                    characters
                        .iter()
                        .position(|other| chi.iter().zip(other).all(|(a, b)| (a.conj() - b).norm() < 1e-8))
                        .ok_or_else(|| Error::InvalidInput("character table not closed under conjugation".into()))
                })
                .collect::<Result<_>>()?;
            let matrices: Vec<Vec<DMatrix<C64>>> = irreps.iter().map(|r| r.matrices.clone()).collect();
            let dual_intertwiner = (0..irreps.len())
                .map(|x| {
                    let lhs: Vec<DMatrix<C64>> = matrices[x].iter().map(|m| m.map(|z| z.conj())).collect();
                    intertwiner(&lhs, &matrices[dual[x]])
                })
                .collect::<Result<_>>()?;
            FusionBackend {
                kind,
                group: group.clone(),
                names: irreps
                    .iter()
                    .enumerate()
                    .map(|(i, r)| format!("rep{i}[{}]", r.dim))
                    .collect(),
                dims: irreps.iter().map(|r| r.dim).collect(),
                dual,
                matrices,
                characters,
                dual_intertwiner,
                tensor_cap: DEFAULT_TENSOR_CAP,
                hom_cache: Mutex::new(HashMap::new()),
                fusion_cache: Mutex::new(HashMap::new()),
            }
        }
    };
    Ok(backend)
}

/// Unitary `J` with `a(g) J = J b(g)` for equivalent irreducible unitary
/// representations `a` and `b`.
fn intertwiner(a: &[DMatrix<C64>], b: &[DMatrix<C64>]) -> Result<DMatrix<C64>> {
    let d = a[0].nrows();
    for i in 0..d {
        for j in 0..d {
            let mut m = DMatrix::<C64>::zeros(d, d);
            for (ag, bg) in a.iter().zip(b) {
                let mut unit = DMatrix::<C64>::zeros(d, d);
                unit[(i, j)] = C64::new(1.0, 0.0);
                m += ag * unit * bg.adjoint();
            }
            // Schur: m†m is a positive multiple of the identity.
            let c = (m.adjoint() * &m)[(0, 0)].re;
            if c > 1e-8 {
                return Ok(m / C64::new(c.sqrt(), 0.0));
            }
        }
    }
    Err(Error::InvalidInput("representations are not equivalent".into()))
}

/// Orthonormal basis of the column span of `m`, by Gram-Schmidt in column
/// order.
fn orthonormal_columns(m: &DMatrix<C64>, tol: f64) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v: Vec<C64> = m.column(j).iter().copied().collect();
        for _ in 0..2 {
            for u in &out {
                let p: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= p * ui;
                }
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > tol {
            out.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    out
}

impl FusionBackend {
    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    /// Number of simple objects.
    pub fn num_simples(&self) -> usize {
        self.dims.len()
    }

    pub fn simple_name(&self, x: usize) -> &str {
        &self.names[x]
    }

    /// Quantum dimension, equal to the dimension of the fiber.
    pub fn dim(&self, x: usize) -> usize {
        self.dims[x]
    }

    /// The dual simple `x∨`.
    pub fn dual(&self, x: usize) -> usize {
        self.dual[x]
    }

    /// Unitary `J_x` identifying the concrete dual `conj(ρ_x)` with `ρ_{x∨}`.
    pub fn dual_intertwiner(&self, x: usize) -> &DMatrix<C64> {
        &self.dual_intertwiner[x]
    }

    /// Replace the bound on tensor-product dimensions.
    pub fn set_tensor_cap(&mut self, cap: usize) {
        self.tensor_cap = cap;
    }

    fn slot_matrix(&self, x: usize, reversed: bool, g: usize) -> DMatrix<C64> {
        let m = &self.matrices[x][g];
        if reversed {
            m.map(|z| z.conj())
        } else {
            m.clone()
        }
    }

    /// `dim Hom(1, w₁⊗…⊗wₙ)`.
    pub fn hom_dim(&self, word: &[(usize, bool)]) -> usize {
        match self.kind {
            BackendKind::Vect => usize::from(self.vect_product(word) == self.group.identity()),
            BackendKind::Rep => {
                let n = self.group.order();
                let mut total = C64::new(0.0, 0.0);
                for g in 0..n {
                    let mut p = C64::new(1.0, 0.0);
                    for &(x, rev) in word {
                        let c = self.characters[x][g];
                        p *= if rev { c.conj() } else { c };
                    }
                    total += p;
                }
                (total.re / n as f64).round().max(0.0) as usize
            }
        }
    }

    fn vect_product(&self, word: &[(usize, bool)]) -> usize {
        self.group
            .product(word.iter().map(|&(g, rev)| if rev { self.group.inv(g) } else { g }))
    }

    /// Orthonormal basis of `Hom(1, w₁⊗…⊗wₙ)`.
    ///
    /// `Vect[G]` uses the canonical vector `1` when `w₁⋯wₙ = e`; `Rep(G)`
    /// orthonormalizes the columns of the group-averaging projector.
    pub fn hom_basis(&self, word: &[(usize, bool)]) -> Result<Arc<HomBasis>> {
        let slot_dims: Vec<usize> = word.iter().map(|&(x, _)| self.dims[x]).collect();
        if self.kind == BackendKind::Vect {
            let vectors = if self.hom_dim(word) == 1 {
                vec![vec![C64::new(1.0, 0.0)]]
            } else {
                Vec::new()
            };
            return Ok(Arc::new(HomBasis { slot_dims, vectors }));
        }
        if let Some(b) = self.hom_cache.lock().expect("cache lock").get(word) {
            return Ok(b.clone());
        }
        let total: usize = slot_dims.iter().product();
        if total > self.tensor_cap {
            return Err(Error::cap(
                "tensor product dimension",
                total as f64,
                self.tensor_cap as f64,
            ));
        }
        let expected = self.hom_dim(word);
        let vectors = if expected == 0 {
            Vec::new()
        } else {
            let n = self.group.order();
            let mut avg = DMatrix::<C64>::zeros(total, total);
            for g in 0..n {
                let mut m = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
                for &(x, rev) in word {
                    m = m.kronecker(&self.slot_matrix(x, rev, g));
                }
                avg += m;
            }
            avg /= C64::new(n as f64, 0.0);
            orthonormal_columns(&avg, 1e-8)
        };
        if vectors.len() != expected {
            return Err(Error::InvalidInput(format!(
                "invariant basis has {} vectors, character formula gives {expected}",
                vectors.len()
            )));
        }
        let basis = Arc::new(HomBasis { slot_dims, vectors });
        self.hom_cache
            .lock()
            .expect("cache lock")
            .insert(word.to_vec(), basis.clone());
        Ok(basis)
    }

    /// Decomposition of `ρ_x ⊗ ζ`, where `ζ = conj(ρ_z)` if `conj_z` and
    /// `ρ_z` otherwise, into isometric intertwiners `U` with
    /// `(ρ_x⊗ζ)(g) U = U ρ_y(g)`.
    fn fusion(&self, x: usize, z: usize, conj_z: bool) -> Arc<Vec<FusionChannel>> {
        let key = (x, z, conj_z);
        if let Some(c) = self.fusion_cache.lock().expect("cache lock").get(&key) {
            return c.clone();
        }
        let n = self.group.order();
        let r: Vec<DMatrix<C64>> = (0..n)
            .map(|g| self.matrices[x][g].kronecker(&self.slot_matrix(z, conj_z, g)))
            .collect();
        let total = r[0].nrows();
        let mut channels = Vec::new();
        for y in 0..self.dims.len() {
            let dy = self.dims[y];
            // P_{i1} = (d_y/#G) Σ_g conj(ρ_y(g)_{i1}) R(g)
            let p: Vec<DMatrix<C64>> = (0..dy)
                .map(|i| {
                    let mut m = DMatrix::<C64>::zeros(total, total);
                    for g in 0..n {
                        m += &r[g] * self.matrices[y][g][(i, 0)].conj();
                    }
                    m * C64::new(dy as f64 / n as f64, 0.0)
                })
                .collect();
            for u in orthonormal_columns(&p[0], 1e-8) {
                let u = nalgebra::DVector::from_vec(u);
                let mut iso = DMatrix::<C64>::zeros(total, dy);
                for (i, pi) in p.iter().enumerate() {
                    iso.set_column(i, &(pi * &u));
                }
                channels.push(FusionChannel { out: y, iso });
            }
        }
        let channels = Arc::new(channels);
        self.fusion_cache
            .lock()
            .expect("cache lock")
            .insert(key, channels.clone());
        channels
    }
}

/// `d = Σ dim(x)²`.
pub fn categorical_dim(backend: &FusionBackend) -> f64 {
    backend.dims.iter().map(|&d| (d * d) as f64).sum()
}

/// Value on the 3-sphere, `1/d`.
pub fn sphere_value(backend: &FusionBackend) -> f64 {
    1.0 / categorical_dim(backend)
}

/// `Σ_x dim(x)^{2−2g}`.
pub fn verlinde_reduced(backend: &FusionBackend, genus: u32) -> f64 {
    let e = 2.0 - 2.0 * genus as f64;
    backend.dims.iter().map(|&d| (d as f64).powf(e)).sum()
}

/// Indexed basis of the lattice state space.
#[derive(Clone, Debug)]
pub struct StateSpace {
    pub kind: BackendKind,
    pub lattice: Lattice2,
    /// Admissible labelings: a simple per oriented edge.
    pub labelings: Vec<Vec<usize>>,
    /// `offsets[ℓ]` is the index of the first basis vector of labeling `ℓ`.
    pub offsets: Vec<usize>,
    pub dim: usize,
    face_bases: Vec<Vec<Arc<HomBasis>>>,
    index: HashMap<Vec<usize>, usize>,
}

/// The labeled-lattice state space `⊕_ℓ ⊗_f ⟨ℓ(e₁),…,ℓ(eₙ)⟩`.
pub fn state_space(backend: &FusionBackend, lattice: &Lattice2) -> Result<StateSpace> {
    state_space_with_cap(backend, lattice, DEFAULT_STATE_CAP)
}

fn face_word(lattice: &Lattice2, face: usize, labeling: &[usize]) -> Word {
    lattice.faces[face]
        .iter()
        .map(|&(e, dir)| (labeling[e], dir < 0))
        .collect()
}

/// [`state_space`] with an explicit dimension cap.
pub fn state_space_with_cap(backend: &FusionBackend, lattice: &Lattice2, cap: usize) -> Result<StateSpace> {
    if !lattice.oriented {
        return Err(Error::RequiresClosedSurface);
    }
    let report = lattice.validate();
    if !report.valid {
        return Err(Error::InvalidLattice(
            report.issues.first().map(|i| i.message.clone()).unwrap_or_default(),
        ));
    }
    let edges = lattice.num_edges();
    let mut completes: Vec<Vec<usize>> = vec![Vec::new(); edges];
    for (f, face) in lattice.faces.iter().enumerate() {
        let last = face.iter().map(|&(e, _)| e).max().expect("nonempty face");
        completes[last].push(f);
    }
    let simples = backend.num_simples();
    let mut labelings = Vec::new();
    let mut dims_total = 0usize;
    let mut current = vec![0usize; edges];
    // Depth-first search over edges, pruning as soon as a face is complete.
    fn dfs(
        e: usize,
        current: &mut Vec<usize>,
        ctx: &(&FusionBackend, &Lattice2, &Vec<Vec<usize>>, usize, usize),
        labelings: &mut Vec<Vec<usize>>,
        dims_total: &mut usize,
    ) -> Result<()> {
        let (backend, lattice, completes, simples, cap) = *ctx;
        if e == current.len() {
            let d: usize = (0..lattice.num_faces())
                .map(|f| backend.hom_dim(&face_word(lattice, f, current)))
                .product();
            *dims_total += d;
            if *dims_total > cap {
                return Err(Error::cap("state-space dimension", *dims_total as f64, cap as f64));
            }
            labelings.push(current.clone());
            return Ok(());
        }
        for x in 0..simples {
            current[e] = x;
            if completes[e]
                .iter()
                .all(|&f| backend.hom_dim(&face_word(lattice, f, current)) > 0)
            {
                dfs(e + 1, current, ctx, labelings, dims_total)?;
            }
        }
        Ok(())
    }
    dfs(
        0,
        &mut current,
        &(backend, lattice, &completes, simples, cap),
        &mut labelings,
        &mut dims_total,
    )?;
    let face_bases: Vec<Vec<Arc<HomBasis>>> = labelings
        .par_iter()
        .map(|l| {
            (0..lattice.num_faces())
                .map(|f| backend.hom_basis(&face_word(lattice, f, l)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut offsets = Vec::with_capacity(labelings.len());
    let mut dim = 0;
    for bases in &face_bases {
        offsets.push(dim);
        dim += bases.iter().map(|b| b.dim()).product::<usize>();
    }
    let index = labelings.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
    Ok(StateSpace {
        kind: backend.kind,
        lattice: lattice.clone(),
        labelings,
        offsets,
        dim,
        face_bases,
        index,
    })
}

impl StateSpace {
    /// Position of a labeling in [`StateSpace::labelings`].
    pub fn labeling_index(&self, labeling: &[usize]) -> Option<usize> {
        self.index.get(labeling).copied()
    }

    /// Hom basis of face `f` under labeling number `l`.
    pub fn face_basis(&self, l: usize, f: usize) -> &HomBasis {
        &self.face_bases[l][f]
    }

    fn strides(&self, l: usize) -> Vec<usize> {
        let dims: Vec<usize> = self.face_bases[l].iter().map(|b| b.dim()).collect();
        let mut strides = vec![1; dims.len()];
        for f in (0..dims.len().saturating_sub(1)).rev() {
            strides[f] = strides[f + 1] * dims[f + 1];
        }
        strides
    }

    /// Split a basis index into its labeling and per-face basis indices.
    pub fn locate(&self, index: usize) -> (usize, Vec<usize>) {
        let l = match self.offsets.binary_search(&index) {
            Ok(mut i) => {
                // Skip labelings contributing no vectors.
                while i + 1 < self.offsets.len() && self.offsets[i + 1] == index {
                    i += 1;
                }
                i
            }
            Err(i) => i - 1,
        };
        let mut rest = index - self.offsets[l];
        let strides = self.strides(l);
        let beta = strides
            .iter()
            .map(|&s| {
                let b = rest / s;
                rest %= s;
                b
            })
            .collect();
        (l, beta)
    }

    /// Inverse of [`StateSpace::locate`].
    pub fn basis_index(&self, l: usize, beta: &[usize]) -> usize {
        self.offsets[l] + self.strides(l).iter().zip(beta).map(|(s, b)| s * b).sum::<usize>()
    }
}

/// Square sparse matrix stored by columns, rows sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub dim: usize,
    pub cols: Vec<Vec<(usize, C64)>>,
}

fn finish_column(acc: BTreeMap<usize, C64>) -> Vec<(usize, C64)> {
    acc.into_iter().filter(|(_, v)| v.norm() > DROP).collect()
}

impl SparseMatrix {
    pub fn identity(dim: usize) -> Self {
        SparseMatrix {
            dim,
            cols: (0..dim).map(|j| vec![(j, C64::new(1.0, 0.0))]).collect(),
        }
    }

    /// Stored entries.
    pub fn nnz(&self) -> usize {
        self.cols.iter().map(|c| c.len()).sum()
    }

    /// `A x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        for (j, col) in self.cols.iter().enumerate() {
            if x[j] == C64::new(0.0, 0.0) {
                continue;
            }
            for &(i, v) in col {
                y[i] += v * x[j];
            }
        }
        y
    }

    /// `self · other`.
    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        let cols = other
            .cols
            .par_iter()
            .map(|bcol| {
                let mut acc = BTreeMap::new();
                for &(k, b) in bcol {
                    for &(i, a) in &self.cols[k] {
                        *acc.entry(i).or_insert(C64::new(0.0, 0.0)) += a * b;
                    }
                }
                finish_column(acc)
            })
            .collect();
        SparseMatrix { dim: self.dim, cols }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> SparseMatrix {
        let mut cols: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.dim];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                cols[i].push((j, v.conj()));
            }
        }
        SparseMatrix { dim: self.dim, cols }
    }

    /// Frobenius norm of `self − other`.
    pub fn distance(&self, other: &SparseMatrix) -> f64 {
        self.cols
            .par_iter()
            .zip(&other.cols)
            .map(|(a, b)| {
                let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
                for &(i, v) in a {
                    *acc.entry(i).or_insert(C64::new(0.0, 0.0)) += v;
                }
                for &(i, v) in b {
                    *acc.entry(i).or_insert(C64::new(0.0, 0.0)) -= v;
                }
                acc.values().map(|v| v.norm_sqr()).sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn trace(&self) -> C64 {
        self.cols
            .iter()
            .enumerate()
            .flat_map(|(j, col)| col.iter().filter(move |(i, _)| *i == j).map(|&(_, v)| v))
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::<C64>::zeros(self.dim, self.dim);
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                m[(i, j)] += v;
            }
        }
        m
    }
}

/// The projector `P_v` on the state space.
pub fn vertex_projector(backend: &FusionBackend, space: &StateSpace, v: usize) -> Result<SparseMatrix> {
    if v >= space.lattice.num_vertices() {
        return Err(Error::InvalidInput(format!("vertex {v} out of range")));
    }
    if backend.kind != space.kind {
        return Err(Error::InvalidInput("backend and state space disagree".into()));
    }
    match backend.kind {
        BackendKind::Vect => Ok(vect_projector(backend, space, v)),
        BackendKind::Rep => rep_projector(backend, space, v),
    }
}

/// All vertex projectors, in vertex order.
pub fn vertex_projectors(backend: &FusionBackend, space: &StateSpace) -> Result<Vec<SparseMatrix>> {
    (0..space.lattice.num_vertices())
        .map(|v| vertex_projector(backend, space, v))
        .collect()
}

fn vect_projector(backend: &FusionBackend, space: &StateSpace, v: usize) -> SparseMatrix {
    let g = &backend.group;
    let lat = &space.lattice;
    let weight = C64::new(1.0 / g.order() as f64, 0.0);
    let star = lat.incident_edges(v);
    let cols = space
        .labelings
        .par_iter()
        .map(|l| {
            let mut acc = BTreeMap::new();
            for z in 0..g.order() {
                let mut moved = l.clone();
                for &e in &star {
                    moved[e] = if lat.tail(e) == v {
                        g.mul(g.inv(z), l[e])
                    } else {
                        g.mul(l[e], z)
                    };
                }
                let target = space.index[&moved];
                *acc.entry(space.offsets[target]).or_insert(C64::new(0.0, 0.0)) += weight;
            }
            finish_column(acc)
        })
        .collect();
    SparseMatrix { dim: space.dim, cols }
}

/// Apply the two intertwiners of a corner to a face tensor sharing the
/// loop index `k`.
#[allow(clippy::too_many_arguments)]
fn corner_transform(
    t: &[C64],
    old_dims: &[usize],
    new_dims: &[usize],
    in_pos: usize,
    out_pos: usize,
    m_in: &DMatrix<C64>,
    in_plus: bool,
    m_out: &DMatrix<C64>,
    out_plus: bool,
    dz: usize,
) -> Vec<C64> {
    let stride = |dims: &[usize]| {
        let mut s = vec![1; dims.len()];
        for p in (0..dims.len().saturating_sub(1)).rev() {
            s[p] = s[p + 1] * dims[p + 1];
        }
        s
    };
    let os = stride(old_dims);
    let ns = stride(new_dims);
    let pick = |m: &DMatrix<C64>, plus: bool, r: usize, c: usize| if plus { m[(r, c)].conj() } else { m[(r, c)] };
    let mut out = vec![C64::new(0.0, 0.0); new_dims.iter().product()];
    for (o, &val) in t.iter().enumerate() {
        if val.norm() < DROP {
            continue;
        }
        let idx: Vec<usize> = os.iter().zip(old_dims).map(|(s, d)| (o / s) % d).collect();
        let base: usize = (0..idx.len())
            .filter(|&p| p != in_pos && p != out_pos)
            .map(|p| idx[p] * ns[p])
            .sum();
        for k in 0..dz {
            for c_in in 0..new_dims[in_pos] {
                let u = pick(m_in, in_plus, idx[in_pos] * dz + k, c_in);
                if u.norm() < DROP {
                    continue;
                }
                for c_out in 0..new_dims[out_pos] {
                    let w = pick(m_out, out_plus, idx[out_pos] * dz + k, c_out);
                    out[base + c_in * ns[in_pos] + c_out * ns[out_pos]] += val * u * w;
                }
            }
        }
    }
    out
}

fn rep_projector(backend: &FusionBackend, space: &StateSpace, v: usize) -> Result<SparseMatrix> {
    let lat = &space.lattice;
    let rot = lat.vertex_rotation(v);
    let k = rot.len();
    let star: Vec<usize> = rot.iter().map(|c| lat.faces[c.face][c.out_pos].0).collect();
    let conj_z: Vec<bool> = star.iter().map(|&e| lat.head(e) == v).collect();
    let corner_faces: Vec<usize> = rot.iter().map(|c| c.face).collect();
    let order = backend.group.order() as f64;
    let simples = backend.num_simples();
    let cols = (0..space.dim)
        .into_par_iter()
        .map(|s| {
            let (li, beta) = space.locate(s);
            let lab = &space.labelings[li];
            let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
            for z in 0..simples {
                let dz = backend.dims[z];
                let chans: Vec<Arc<Vec<FusionChannel>>> =
                    (0..k).map(|i| backend.fusion(lab[star[i]], z, conj_z[i])).collect();
                if chans.iter().any(|c| c.is_empty()) {
                    continue;
                }
                let mut choice = vec![0usize; k];
                'choices: loop {
                    let mut new_lab = lab.clone();
                    let mut scalar = dz as f64 / order;
                    for i in 0..k {
                        let ch = &chans[i][choice[i]];
                        new_lab[star[i]] = ch.out;
                        scalar *= (backend.dims[lab[star[i]]] as f64 / backend.dims[ch.out] as f64).sqrt();
                    }
                    if let Some(lj) = space.labeling_index(&new_lab) {
                        let mut parts: Vec<Vec<C64>> = Vec::with_capacity(k);
                        let mut vanishes = false;
                        for (ci, c) in rot.iter().enumerate() {
                            let f = c.face;
                            let old = &space.face_bases[li][f];
                            let new = &space.face_bases[lj][f];
                            let prev = (ci + k - 1) % k;
                            let t = corner_transform(
                                &old.vectors[beta[f]],
                                &old.slot_dims,
                                &new.slot_dims,
                                c.in_pos,
                                c.out_pos,
                                &chans[prev][choice[prev]].iso,
                                lat.faces[f][c.in_pos].1 > 0,
                                &chans[ci][choice[ci]].iso,
                                lat.faces[f][c.out_pos].1 > 0,
                                dz,
                            );
                            let p: Vec<C64> = new
                                .vectors
                                .iter()
                                .map(|b| b.iter().zip(&t).map(|(x, y)| x.conj() * y).sum())
                                .collect();
                            if p.iter().all(|z| z.norm() < DROP) {
                                vanishes = true;
                                break;
                            }
                            parts.push(p);
                        }
                        if !vanishes {
                            let strides = space.strides(lj);
                            let base: usize = space.offsets[lj]
                                + (0..lat.num_faces())
                                    .filter(|f| !corner_faces.contains(f))
                                    .map(|f| beta[f] * strides[f])
                                    .sum::<usize>();
                            let mut pick = vec![0usize; k];
                            'expand: loop {
                                let mut val = C64::new(scalar, 0.0);
                                let mut idx = base;
                                for ci in 0..k {
                                    val *= parts[ci][pick[ci]];
                                    idx += pick[ci] * strides[corner_faces[ci]];
                                }
                                *acc.entry(idx).or_insert(C64::new(0.0, 0.0)) += val;
                                for ci in (0..k).rev() {
                                    pick[ci] += 1;
                                    if pick[ci] < parts[ci].len() {
                                        continue 'expand;
                                    }
                                    pick[ci] = 0;
                                }
                                break;
                            }
                        }
                    }
                    for i in (0..k).rev() {
                        choice[i] += 1;
                        if choice[i] < chans[i].len() {
                            continue 'choices;
                        }
                        choice[i] = 0;
                    }
                    break;
                }
            }
            finish_column(acc)
        })
        .collect();
    Ok(SparseMatrix { dim: space.dim, cols })
}

/// Numerical properties of the vertex projectors.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectorReport {
    pub backend: BackendKind,
    pub dim: usize,
    pub vertices: usize,
    /// Largest `‖P_v² − P_v‖` (Frobenius).
    pub idempotence_error: f64,
    /// Largest `‖P_v − P_v†‖`.
    pub self_adjoint_error: f64,
    /// Largest `‖P_v P_w − P_w P_v‖` over distinct vertices.
    pub commutation_error: f64,
    /// Trace of `∏_v P_v`.
    pub trace: f64,
    /// Number of eigenvalues of `∏_v P_v` above 1/2.
    pub rank: usize,
    /// `"eigenvalues"` or `"trace"`, depending on the dimension.
    pub rank_method: String,
}

/// Product `∏_v P_v` in vertex order.
pub fn projector_product(projectors: &[SparseMatrix], dim: usize) -> SparseMatrix {
    projectors
        .iter()
        .fold(SparseMatrix::identity(dim), |acc, p| p.mul(&acc))
}

/// Number of eigenvalues above the 1/2 threshold of a Hermitian projector.
pub fn projector_rank(q: &SparseMatrix) -> (usize, String) {
    if q.dim <= DENSE_RANK_LIMIT {
        let d = q.to_dense();
        let h = (&d + d.adjoint()) * C64::new(0.5, 0.0);
        let eig = h.symmetric_eigenvalues();
        (eig.iter().filter(|&&x| x > 0.5).count(), "eigenvalues".into())
    } else {
        (q.trace().re.round().max(0.0) as usize, "trace".into())
    }
}

/// Check idempotence, self-adjointness and commutation of every `P_v`, and
/// the rank of their product.
pub fn projector_check(backend: &FusionBackend, space: &StateSpace) -> Result<ProjectorReport> {
    let ps = vertex_projectors(backend, space)?;
    let mut idem = 0.0f64;
    let mut adj = 0.0f64;
    for p in &ps {
        idem = idem.max(p.mul(p).distance(p));
        adj = adj.max(p.adjoint().distance(p));
    }
    let mut comm = 0.0f64;
    for a in 0..ps.len() {
        for b in a + 1..ps.len() {
            comm = comm.max(ps[a].mul(&ps[b]).distance(&ps[b].mul(&ps[a])));
        }
    }
    let q = projector_product(&ps, space.dim);
    let (rank, rank_method) = projector_rank(&q);
    Ok(ProjectorReport {
        backend: backend.kind,
        dim: space.dim,
        vertices: ps.len(),
        idempotence_error: idem,
        self_adjoint_error: adj,
        commutation_error: comm,
        trace: q.trace().re,
        rank,
        rank_method,
    })
}

/// An element of `⊕_x φ(x)⊗φ(x)*`, one `d_x × d_x` block per simple.
#[derive(Clone, Debug)]
pub struct IsingActionVector {
    pub blocks: Vec<DMatrix<C64>>,
}

impl IsingActionVector {
    /// `Vect[G]` form of a weight: the `1×1` block `θ(g)` for each `g`.
    pub fn from_weight(theta: &WeightFunction) -> Self {
        IsingActionVector {
            blocks: theta
                .values
                .iter()
                .map(|&t| DMatrix::from_element(1, 1, C64::new(t, 0.0)))
                .collect(),
        }
    }

    /// `Rep(G)` form of a weight: the transposed blocks of its
    /// operator-valued Fourier transform, `#G^{-1/2} Σ_g θ(g) ρ(g)†`.
    pub fn from_weight_rep(theta: &WeightFunction, group: &FiniteGroup) -> Result<Self> {
        let t = fourier_nonabelian(theta, group)?;
        Ok(IsingActionVector {
            blocks: t.blocks.iter().map(|b| b.transpose()).collect(),
        })
    }

    /// Image under the antipode: every block transposed.
    pub fn antipode(&self) -> Self {
        IsingActionVector {
            blocks: self.blocks.iter().map(|b| b.transpose()).collect(),
        }
    }

    /// Largest `‖θ_{x∨} − J_x† θ_xᵀ J_x‖`; zero means `θ` is even.
    pub fn evenness_defect(&self, backend: &FusionBackend) -> Result<f64> {
        if self.blocks.len() != backend.num_simples() {
            return Err(Error::InvalidInput(format!(
                "expected {} blocks, got {}",
                backend.num_simples(),
                self.blocks.len()
            )));
        }
        let mut worst = 0.0f64;
        for x in 0..self.blocks.len() {
            let d = backend.dims[x];
            if self.blocks[x].nrows() != d || self.blocks[x].ncols() != d {
                return Err(Error::InvalidInput(format!("block {x} must be {d}x{d}")));
            }
            let j = &backend.dual_intertwiner[x];
            let image = j.adjoint() * self.blocks[x].transpose() * j;
            worst = worst.max((&self.blocks[backend.dual[x]] - image).norm());
        }
        Ok(worst)
    }
}

/// The Ising vector before projection: the canonical element contracted
/// with `θ` on every edge, weighted by `∏_e d_x^{1/2}`.
pub fn ising_vector_unprojected(
    backend: &FusionBackend,
    space: &StateSpace,
    theta: &IsingActionVector,
) -> Result<Vec<C64>> {
    let defect = theta.evenness_defect(backend)?;
    let scale = theta.blocks.iter().map(|b| b.norm()).fold(1.0f64, f64::max);
    if defect > 1e-9 * scale {
        return Err(Error::NotEven(format!("defect {defect:.3e}")));
    }
    let lat = &space.lattice;
    let slots = lat.edge_slots();
    let pieces: Vec<Vec<C64>> = space
        .labelings
        .par_iter()
        .enumerate()
        .map(|(li, lab)| labeling_coefficients(backend, space, &slots, li, lab, theta))
        .collect();
    Ok(pieces.into_iter().flatten().collect())
}

fn labeling_coefficients(
    backend: &FusionBackend,
    space: &StateSpace,
    slots: &[(crate::surface::Slot, crate::surface::Slot)],
    li: usize,
    lab: &[usize],
    theta: &IsingActionVector,
) -> Vec<C64> {
    let bases = &space.face_bases[li];
    let nf = bases.len();
    let count: usize = bases.iter().map(|b| b.dim()).product();
    if backend.kind == BackendKind::Vect {
        let w: C64 = lab.iter().map(|&x| theta.blocks[x][(0, 0)]).product();
        return vec![w; count];
    }
    let face_strides: Vec<Vec<usize>> = bases
        .iter()
        .map(|b| {
            let mut s = vec![1; b.slot_dims.len()];
            for p in (0..s.len().saturating_sub(1)).rev() {
                s[p] = s[p + 1] * b.slot_dims[p + 1];
            }
            s
        })
        .collect();
    let beta_strides: Vec<usize> = {
        let mut s = vec![1; nf];
        for f in (0..nf.saturating_sub(1)).rev() {
            s[f] = s[f + 1] * bases[f + 1].dim();
        }
        s
    };
    let edges = lab.len();
    let dims: Vec<usize> = lab.iter().map(|&x| backend.dims[x]).collect();
    let edge_weight: f64 = dims.iter().map(|&d| (d as f64).sqrt()).product();
    let mut out = vec![C64::new(0.0, 0.0); count];
    let mut ab = vec![(0usize, 0usize); edges];
    'assign: loop {
        let mut w = C64::new(edge_weight, 0.0);
        for e in 0..edges {
            w *= theta.blocks[lab[e]][(ab[e].0, ab[e].1)];
        }
        if w.norm() > DROP {
            let mut flat = vec![0usize; nf];
            for e in 0..edges {
                let (plus, minus) = slots[e];
                flat[plus.face] += ab[e].0 * face_strides[plus.face][plus.pos];
                flat[minus.face] += ab[e].1 * face_strides[minus.face][minus.pos];
            }
            let q: Vec<Vec<C64>> = (0..nf)
                .map(|f| bases[f].vectors.iter().map(|b| b[flat[f]].conj()).collect())
                .collect();
            let mut pick = vec![0usize; nf];
            'expand: loop {
                let mut val = w;
                let mut idx = 0;
                for f in 0..nf {
                    val *= q[f][pick[f]];
                    idx += pick[f] * beta_strides[f];
                }
                out[idx] += val;
                for f in (0..nf).rev() {
                    pick[f] += 1;
                    if pick[f] < q[f].len() {
                        continue 'expand;
                    }
                    pick[f] = 0;
                }
                break;
            }
        }
        for e in (0..edges).rev() {
            ab[e].1 += 1;
            if ab[e].1 < dims[e] {
                continue 'assign;
            }
            ab[e].1 = 0;
            ab[e].0 += 1;
            if ab[e].0 < dims[e] {
                continue 'assign;
            }
            ab[e].0 = 0;
        }
        break;
    }
    out
}

/// Apply every projector in turn.
pub fn project(projectors: &[SparseMatrix], v: Vec<C64>) -> Vec<C64> {
    projectors.iter().fold(v, |acc, p| p.apply(&acc))
}

/// The Ising vector `∏_v P_v · (θ contracted with the canonical element)`.
pub fn ising_vector(backend: &FusionBackend, space: &StateSpace, theta: &IsingActionVector) -> Result<Vec<C64>> {
    let ps = vertex_projectors(backend, space)?;
    ising_vector_with(backend, space, &ps, theta)
}

/// [`ising_vector`] with precomputed projectors.
pub fn ising_vector_with(
    backend: &FusionBackend,
    space: &StateSpace,
    projectors: &[SparseMatrix],
    theta: &IsingActionVector,
) -> Result<Vec<C64>> {
    Ok(project(projectors, ising_vector_unprojected(backend, space, theta)?))
}

/// Outcome of [`duality_harness`].
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "route", rename_all = "snake_case")]
pub enum HarnessReport {
    /// Fourier comparison of `Vect[A]` on `Λ` with `Vect[A∨]` on `Λ∨`, one
    /// report per weight.
    Abelian { reports: Vec<KwReport>, max_error: f64 },
    /// Ratio of the Gram matrices of the `Vect[G]` vectors on `Λ` and the
    /// `Rep(G)` vectors on `Λ∨`, over all pairs of weights.
    Nonabelian {
        ratios: Vec<C64>,
        ratio: C64,
        relative_spread: f64,
        antipode: bool,
    },
}

impl HarnessReport {
    /// Whether the report meets the tolerance (`1e-8` absolute for the
    /// abelian route, `1e-6` relative spread otherwise).
    pub fn passed(&self) -> bool {
        match self {
            HarnessReport::Abelian { max_error, .. } => *max_error <= 1e-8,
            HarnessReport::Nonabelian { relative_spread, .. } => *relative_spread <= 1e-6,
        }
    }
}

/// Compare the state-sum Ising vectors of a weight and of its dual.
///
/// For abelian `G` the `Vect[A]` vector on `Λ` and the `Vect[A∨]` vector on
/// `Λ∨` are read as functions on cohomology classes and compared under the
/// Poincaré-Fourier transform with factor `√(#A^V/#A^F)`. Otherwise the
/// pairings `⟨v_i, v_j⟩` of the `Vect[G]` vectors on `Λ` are divided by the
/// pairings of the `Rep(G)` vectors built from the operator-valued
/// transforms on `Λ∨`; `antipode` transposes the `Rep(G)` blocks.
pub fn duality_harness(
    group: &FiniteGroup,
    lattice: &Lattice2,
    thetas: &[WeightFunction],
    antipode: bool,
    state_cap: usize,
) -> Result<HarnessReport> {
    if thetas.is_empty() {
        return Err(Error::InvalidInput("at least one weight is required".into()));
    }
    for t in thetas {
        t.check_len(group.order())?;
        if let Some(g) = t.evenness_defect(group, 1e-12) {
            return Err(Error::NotEven(format!("θ(g) ≠ θ(g⁻¹) at element {g}")));
        }
    }
    let dual = dual_lattice(lattice)?;
    if group.is_abelian() {
        let a = group.as_abelian()?;
        let a_dual = a.dual();
        let g_dual = a_dual.to_finite();
        let vect = build_backend(BackendKind::Vect, group)?;
        let vect_dual = build_backend(BackendKind::Vect, &g_dual)?;
        let space = state_space_with_cap(&vect, lattice, state_cap)?;
        let space_dual = state_space_with_cap(&vect_dual, &dual.lattice, state_cap)?;
        let ps = vertex_projectors(&vect, &space)?;
        let ps_dual = vertex_projectors(&vect_dual, &space_dual)?;
        let h = cohomology(&coboundaries(lattice, a))?;
        let h_dual = cohomology(&coboundaries(&dual.lattice, &a_dual))?;
        let reps = h.representatives[1]
            .clone()
            .ok_or_else(|| Error::cap("cohomology classes", h.orders[1] as f64, 4096.0))?;
        let reps_dual = h_dual.representatives[1]
            .clone()
            .ok_or_else(|| Error::cap("cohomology classes", h_dual.orders[1] as f64, 4096.0))?;
        let n = a.order() as f64;
        let factor = n.powf((lattice.num_vertices() as f64 - lattice.num_faces() as f64) / 2.0);
        let mut reports = Vec::new();
        for t in thetas {
            let v = ising_vector_with(&vect, &space, &ps, &IsingActionVector::from_weight(t))?;
            let td = dual_weight(t, a)?;
            let w = ising_vector_with(&vect_dual, &space_dual, &ps_dual, &IsingActionVector::from_weight(&td))?;
            let read = |sp: &StateSpace, vec: &[C64], reps: &[Vec<usize>], verts: usize| -> Vec<C64> {
                let scale = n.powi(verts as i32);
                reps.iter()
                    .map(|z| vec[sp.offsets[sp.labeling_index(z).expect("cocycle is a state")]] * scale)
                    .collect()
            };
            let vv = read(&space, &v, &reps, lattice.num_vertices());
            let ww = read(&space_dual, &w, &reps_dual, dual.lattice.num_vertices());
            reports.push(fourier_compare(lattice, &dual, a, &reps, &vv, &reps_dual, &ww, factor)?);
        }
        let max_error = reports.iter().fold(0.0f64, |m, r| m.max(r.max_error));
        return Ok(HarnessReport::Abelian { reports, max_error });
    }
    let vect = build_backend(BackendKind::Vect, group)?;
    let rep = build_backend(BackendKind::Rep, group)?;
    let space = state_space_with_cap(&vect, lattice, state_cap)?;
    let space_dual = state_space_with_cap(&rep, &dual.lattice, state_cap)?;
    let ps = vertex_projectors(&vect, &space)?;
    let ps_dual = vertex_projectors(&rep, &space_dual)?;
    let mut vs = Vec::new();
    let mut ws = Vec::new();
    for t in thetas {
        vs.push(ising_vector_with(
            &vect,
            &space,
            &ps,
            &IsingActionVector::from_weight(t),
        )?);
        let mut blocks = IsingActionVector::from_weight_rep(t, group)?;
        if antipode {
            blocks = blocks.antipode();
        }
        ws.push(ising_vector_with(&rep, &space_dual, &ps_dual, &blocks)?);
    }
    let inner = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let mut ratios = Vec::new();
    for i in 0..thetas.len() {
        for j in i..thetas.len() {
            ratios.push(inner(&vs[i], &vs[j]) / inner(&ws[i], &ws[j]));
        }
    }
    let ratio = ratios.iter().sum::<C64>() / ratios.len() as f64;
    let relative_spread = ratios.iter().fold(0.0f64, |m, r| m.max((r - ratio).norm())) / ratio.norm();
    Ok(HarnessReport::Nonabelian {
        ratios,
        ratio,
        relative_spread,
        antipode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{flat_labelings, gauge_orbits, partition_vector, FaceConstraint, Insertions, SumOptions};
    use crate::surface::{generate_lattice, LatticeKind};

    fn torus(m: usize, n: usize) -> Lattice2 {
        generate_lattice(LatticeKind::Torus { m, n }).unwrap()
    }

    fn s3() -> FiniteGroup {
        FiniteGroup::parse("S3").unwrap()
    }

    /// Class function with the given value on each conjugacy class.
    fn class_weight(g: &FiniteGroup, per_class: &[f64]) -> WeightFunction {
        WeightFunction::new((0..g.order()).map(|x| per_class[g.class_of(x)]).collect()).unwrap()
    }

    #[test]
    fn rep_s3_homs() {
        let b = build_backend(BackendKind::Rep, &s3()).unwrap();
        let std = (0..3).find(|&x| b.dim(x) == 2).unwrap();
        assert_eq!(b.hom_basis(&[(std, false), (std, false)]).unwrap().dim(), 1);
        for x in 0..3 {
            assert_eq!(b.dual(x), x);
            assert_eq!(b.hom_dim(&[(x, false), (x, true)]), 1);
        }
        assert_eq!(categorical_dim(&b), 6.0);
        let v = build_backend(BackendKind::Vect, &s3()).unwrap();
        assert_eq!(sphere_value(&v), sphere_value(&b));
        assert_eq!(verlinde_reduced(&b, 1), 3.0);
        assert_eq!(verlinde_reduced(&v, 2), 6.0);
    }

    #[test]
    fn fusion_channels_intertwine() {
        let g = s3();
        let b = build_backend(BackendKind::Rep, &g).unwrap();
        for x in 0..3 {
            for z in 0..3 {
                for conj in [false, true] {
                    let ch = b.fusion(x, z, conj);
                    let total: usize = ch.iter().map(|c| b.dim(c.out)).sum();
                    assert_eq!(total, b.dim(x) * b.dim(z));
                    for c in ch.iter() {
                        let id = c.iso.adjoint() * &c.iso;
                        assert!((id - DMatrix::<C64>::identity(b.dim(c.out), b.dim(c.out))).norm() < 1e-10);
                        for h in 0..6 {
                            let r = b.matrices[x][h].kronecker(&b.slot_matrix(z, conj, h));
                            assert!((&r * &c.iso - &c.iso * &b.matrices[c.out][h]).norm() < 1e-10);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn vect_z2_torus_dimension() {
        let g = FiniteGroup::parse("Z2").unwrap();
        let b = build_backend(BackendKind::Vect, &g).unwrap();
        let sp = state_space(&b, &torus(2, 2)).unwrap();
        assert_eq!(sp.dim, 32);
        for i in 0..sp.dim {
            let (l, beta) = sp.locate(i);
            assert_eq!(sp.basis_index(l, &beta), i);
        }
    }

    #[test]
    fn rep_and_vect_agree_for_abelian_groups() {
        for desc in ["Z2", "Z3", "Z4"] {
            let g = FiniteGroup::parse(desc).unwrap();
            let lat = torus(2, 2);
            let v = build_backend(BackendKind::Vect, &g).unwrap();
            let r = build_backend(BackendKind::Rep, &g).unwrap();
            let sv = state_space(&v, &lat).unwrap();
            let sr = state_space(&r, &lat).unwrap();
            assert_eq!(sv.dim, sr.dim, "{desc}");
            let pv = projector_check(&v, &sv).unwrap();
            let pr = projector_check(&r, &sr).unwrap();
            assert_eq!(pv.rank, pr.rank, "{desc}");
            assert!(pr.idempotence_error < 1e-9 && pr.commutation_error < 1e-9);
        }
    }

    #[test]
    fn s3_projectors() {
        let g = s3();
        let lat = torus(2, 2);
        let flats = flat_labelings(&lat, &g, &[FaceConstraint::Identity; 4], 1 << 20).unwrap();
        let orbits = gauge_orbits(&lat, &g, &flats).len();
        assert_eq!(orbits, 8);
        for kind in [BackendKind::Vect, BackendKind::Rep] {
            let b = build_backend(kind, &g).unwrap();
            let sp = state_space(&b, &lat).unwrap();
            let r = projector_check(&b, &sp).unwrap();
            assert!(r.idempotence_error < 1e-9, "{kind:?} {r:?}");
            assert!(r.self_adjoint_error < 1e-9, "{kind:?} {r:?}");
            assert!(r.commutation_error < 1e-9, "{kind:?} {r:?}");
            assert_eq!(r.rank, orbits, "{kind:?}");
        }
    }

    #[test]
    fn vect_vector_matches_partition_vector() {
        for desc in ["Z2", "Z3"] {
            let g = FiniteGroup::parse(desc).unwrap();
            let a = g.as_abelian().unwrap().clone();
            let lat = torus(2, 2);
            let theta = WeightFunction::new((0..g.order()).map(|x| if x == 0 { 1.0 } else { 0.35 }).collect()).unwrap();
            let b = build_backend(BackendKind::Vect, &g).unwrap();
            let sp = state_space(&b, &lat).unwrap();
            let v = ising_vector(&b, &sp, &IsingActionVector::from_weight(&theta)).unwrap();
            let pv = partition_vector(&lat, &a, &theta, &Insertions::default(), &SumOptions::default()).unwrap();
            let scale = (g.order() as f64).powi(4);
            for (z, val) in pv.classes.iter().zip(&pv.values) {
                let i = sp.offsets[sp.labeling_index(z).unwrap()];
                assert!((v[i] * scale - val).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn oddness_is_rejected() {
        let g = FiniteGroup::parse("Z3").unwrap();
        let b = build_backend(BackendKind::Vect, &g).unwrap();
        let sp = state_space(&b, &torus(2, 2)).unwrap();
        let theta = WeightFunction::new(vec![1.0, 0.5, 0.2]).unwrap();
        let err = ising_vector(&b, &sp, &IsingActionVector::from_weight(&theta)).unwrap_err();
        assert!(matches!(err, Error::NotEven(_)));
    }

    #[test]
    fn abelian_harness() {
        let g = FiniteGroup::parse("Z2").unwrap();
        let theta = WeightFunction::new(vec![1.0, 0.4]).unwrap();
        let r = duality_harness(&g, &torus(3, 3), &[theta], false, DEFAULT_STATE_CAP).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn nonabelian_harness() {
        let g = s3();
        let thetas: Vec<WeightFunction> = [(0.3, 0.1), (0.5, 0.25), (0.2, 0.4)]
            .iter()
            .map(|&(a, b)| class_weight(&g, &[1.0, a, b]))
            .collect();
        let r = duality_harness(&g, &torus(2, 2), &thetas, false, DEFAULT_STATE_CAP).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
