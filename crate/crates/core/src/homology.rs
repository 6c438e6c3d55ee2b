//! Cochain complexes of lattices over finite abelian groups, cohomology with
//! explicit class representatives, disorder torsors, the Poincaré pairing, and
//! simplicial cohomology.
//!
//! Everything is computed from one integer Smith normal form per incidence
//! matrix and then reduced modulo each cyclic factor of the coefficients.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::AbelianGroup;
use crate::surface::{DualLattice, Lattice2};
use crate::C64;

/// Default cap on the number of enumerated classes per degree.
pub const DEFAULT_CLASS_CAP: u128 = 4096;

/// Default cap on the number of cells of a simplicial complex.
pub const DEFAULT_CELL_CAP: usize = 20_000;

/// Dense integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i128>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> i128 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i128) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b != 0 {
                        let idx = i * out.cols + j;
                        out.data[idx] = a
                            .checked_mul(b)
                            .and_then(|p| out.data[idx].checked_add(p))
                            .ok_or(Error::Overflow("matrix product"))?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `self · v` reduced modulo `n`.
    pub fn apply_mod(&self, v: &[i128], n: i128) -> Vec<i128> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(0i128, |acc, j| {
                    (acc + self.get(i, j).rem_euclid(n) * v[j].rem_euclid(n)).rem_euclid(n)
                })
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    fn row_axpy(&mut self, target: usize, source: usize, q: i128) -> Result<()> {
        for j in 0..self.cols {
            let s = self.get(source, j);
            if s != 0 {
                let v = q
                    .checked_mul(s)
                    .and_then(|p| self.get(target, j).checked_sub(p))
                    .ok_or(Error::Overflow("Smith normal form"))?;
                self.set(target, j, v);
            }
        }
        Ok(())
    }

    fn col_axpy(&mut self, target: usize, source: usize, q: i128) -> Result<()> {
        for i in 0..self.rows {
            let s = self.get(i, source);
            if s != 0 {
                let v = q
                    .checked_mul(s)
                    .and_then(|p| self.get(i, target).checked_sub(p))
                    .ok_or(Error::Overflow("Smith normal form"))?;
                self.set(i, target, v);
            }
        }
        Ok(())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    fn negate_row(&mut self, a: usize) {
        for j in 0..self.cols {
            let idx = a * self.cols + j;
            self.data[idx] = -self.data[idx];
        }
    }

    fn negate_col(&mut self, a: usize) {
        for i in 0..self.rows {
            let idx = i * self.cols + a;
            self.data[idx] = -self.data[idx];
        }
    }
}

/// Smith normal form `P · D · Q = diag(s_1, …, s_r, 0, …)` with `s_k | s_{k+1}`.
#[derive(Clone, Debug)]
pub struct SmithForm {
    /// Nonzero invariant factors, all positive.
    pub diagonal: Vec<i128>,
    pub p: IntMatrix,
    pub p_inv: IntMatrix,
    pub q: IntMatrix,
    pub q_inv: IntMatrix,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.diagonal.len()
    }
}

struct Transforms {
    p: IntMatrix,
    p_inv: IntMatrix,
    q: IntMatrix,
    q_inv: IntMatrix,
}

/// Smith normal form with unimodular transforms.
pub fn smith_normal_form(d: &IntMatrix) -> Result<SmithForm> {
    let mut t = Transforms {
        p: IntMatrix::identity(d.rows),
        p_inv: IntMatrix::identity(d.rows),
        q: IntMatrix::identity(d.cols),
        q_inv: IntMatrix::identity(d.cols),
    };
    let diagonal = smith_core(d.clone(), Some(&mut t))?;
    Ok(SmithForm {
        diagonal,
        p: t.p,
        p_inv: t.p_inv,
        q: t.q,
        q_inv: t.q_inv,
    })
}

/// Invariant factors only.
pub fn smith_diagonal(d: &IntMatrix) -> Result<Vec<i128>> {
    smith_core(d.clone(), None)
}

fn smith_core(mut a: IntMatrix, mut t: Option<&mut Transforms>) -> Result<Vec<i128>> {
    let limit = a.rows.min(a.cols);
    let mut diagonal = Vec::new();
    for k in 0..limit {
        let Some((pi, pj)) = min_entry(&a, k, |_, _| true) else {
            break;
        };
        swap_rows(&mut a, &mut t, k, pi);
        swap_cols(&mut a, &mut t, k, pj);
        loop {
            let mut clean = true;
            let pivot = a.get(k, k);
            for i in k + 1..a.rows {
                let v = a.get(i, k);
                if v != 0 {
                    row_axpy(&mut a, &mut t, i, k, v.div_euclid(pivot))?;
                    if a.get(i, k) != 0 {
                        clean = false;
                    }
                }
            }
            for j in k + 1..a.cols {
                let v = a.get(k, j);
                if v != 0 {
                    col_axpy(&mut a, &mut t, j, k, v.div_euclid(pivot))?;
                    if a.get(k, j) != 0 {
                        clean = false;
                    }
                }
            }
            if !clean {
                let (pi, pj) = min_entry(&a, k, |i, j| i == k || j == k).expect("nonzero remains");
                swap_rows(&mut a, &mut t, k, pi);
                swap_cols(&mut a, &mut t, k, pj);
                continue;
            }
            let pivot = a.get(k, k);
            let bad = (k + 1..a.rows).find(|&i| (k + 1..a.cols).any(|j| a.get(i, j) % pivot != 0));
            match bad {
                Some(i) => row_axpy(&mut a, &mut t, k, i, -1)?,
                None => break,
            }
        }
        if a.get(k, k) < 0 {
            a.negate_row(k);
            if let Some(t) = t.as_deref_mut() {
                t.p.negate_row(k);
                t.p_inv.negate_col(k);
            }
        }
        diagonal.push(a.get(k, k));
    }
    Ok(diagonal)
}

fn min_entry(a: &IntMatrix, k: usize, keep: impl Fn(usize, usize) -> bool) -> Option<(usize, usize)> {
    let mut best: Option<(i128, usize, usize)> = None;
    for i in k..a.rows {
        for j in k..a.cols {
            let v = a.get(i, j).abs();
            if v != 0 && keep(i, j) && best.is_none_or(|(b, _, _)| v < b) {
                best = Some((v, i, j));
                if v == 1 {
                    return Some((i, j));
                }
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

fn row_axpy(a: &mut IntMatrix, t: &mut Option<&mut Transforms>, target: usize, source: usize, q: i128) -> Result<()> {
    a.row_axpy(target, source, q)?;
    if let Some(t) = t.as_deref_mut() {
        t.p.row_axpy(target, source, q)?;
        t.p_inv.col_axpy(source, target, -q)?;
    }
    Ok(())
}

fn col_axpy(a: &mut IntMatrix, t: &mut Option<&mut Transforms>, target: usize, source: usize, q: i128) -> Result<()> {
    a.col_axpy(target, source, q)?;
    if let Some(t) = t.as_deref_mut() {
        t.q.col_axpy(target, source, q)?;
        t.q_inv.row_axpy(source, target, -q)?;
    }
    Ok(())
}

fn swap_rows(a: &mut IntMatrix, t: &mut Option<&mut Transforms>, x: usize, y: usize) {
    a.swap_rows(x, y);
    if let Some(t) = t.as_deref_mut() {
        t.p.swap_rows(x, y);
        t.p_inv.swap_cols(x, y);
    }
}

fn swap_cols(a: &mut IntMatrix, t: &mut Option<&mut Transforms>, x: usize, y: usize) {
    a.swap_cols(x, y);
    if let Some(t) = t.as_deref_mut() {
        t.q.swap_cols(x, y);
        t.q_inv.swap_rows(x, y);
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn checked_pow(base: u128, exp: usize) -> Result<u128> {
    (0..exp).try_fold(1u128, |acc, _| {
        acc.checked_mul(base).ok_or(Error::Overflow("cohomology order"))
    })
}

/// Order of the kernel of `D mod n` given the invariant factors of `D`.
fn kernel_order(cols: usize, diagonal: &[i128], n: i128) -> Result<u128> {
    let free = checked_pow(n as u128, cols - diagonal.len())?;
    diagonal.iter().try_fold(free, |acc, &s| {
        acc.checked_mul(gcd(s, n) as u128)
            .ok_or(Error::Overflow("cohomology order"))
    })
}

/// The cochain complex `C⁰ → C¹ → C²` of a latticed surface.
#[derive(Clone, Debug)]
pub struct CochainComplex {
    pub group: AbelianGroup,
    /// Edges × vertices.
    pub d0: IntMatrix,
    /// Faces × edges.
    pub d1: IntMatrix,
}

/// Incidence matrices: `D0[e,v] = [v = head] − [v = tail]` and `D1[f,e]` is
/// the sum of the direction flags of `e` in the boundary walk of `f`.
pub fn coboundaries(lattice: &Lattice2, group: &AbelianGroup) -> CochainComplex {
    let (v, e, f) = (lattice.num_vertices(), lattice.num_edges(), lattice.num_faces());
    let mut d0 = IntMatrix::zeros(e, v);
    for (idx, &[tail, head]) in lattice.edges.iter().enumerate() {
        d0.set(idx, head, d0.get(idx, head) + 1);
        d0.set(idx, tail, d0.get(idx, tail) - 1);
    }
    let mut d1 = IntMatrix::zeros(f, e);
    for (fi, face) in lattice.faces.iter().enumerate() {
        for &(edge, dir) in face {
            d1.set(fi, edge, d1.get(fi, edge) + dir as i128);
        }
    }
    CochainComplex {
        group: group.clone(),
        d0,
        d1,
    }
}

impl CochainComplex {
    pub fn num_vertices(&self) -> usize {
        self.d0.cols
    }

    pub fn num_edges(&self) -> usize {
        self.d0.rows
    }

    pub fn num_faces(&self) -> usize {
        self.d1.rows
    }

    /// Coboundary `d⁰s` of a vertex cochain, values as element indices of `A`.
    pub fn d0_apply(&self, s: &[usize]) -> Vec<usize> {
        apply_over_group(&self.d0, &self.group, s)
    }

    /// Coboundary `d¹z` of an edge cochain.
    pub fn d1_apply(&self, z: &[usize]) -> Vec<usize> {
        apply_over_group(&self.d1, &self.group, z)
    }

    /// Whether `D1 · D0 = 0` over the integers.
    pub fn is_complex(&self) -> bool {
        self.d1.mul(&self.d0).map(|m| m.is_zero()).unwrap_or(false)
    }

    pub fn cochain_orders(&self) -> Result<[u128; 3]> {
        let n = self.group.order() as u128;
        Ok([
            checked_pow(n, self.num_vertices())?,
            checked_pow(n, self.num_edges())?,
            checked_pow(n, self.num_faces())?,
        ])
    }
}

fn apply_over_group(m: &IntMatrix, group: &AbelianGroup, x: &[usize]) -> Vec<usize> {
    let factors = group.factors();
    let residues: Vec<Vec<usize>> = x.iter().map(|&a| group.element(a)).collect();
    (0..m.rows)
        .map(|i| {
            let mut acc = vec![0i64; factors.len()];
            for j in 0..m.cols {
                let c = m.get(i, j);
                if c != 0 {
                    for (slot, r) in acc.iter_mut().zip(&residues[j]) {
                        *slot += c as i64 * *r as i64;
                    }
                }
            }
            group.index_signed(&acc)
        })
        .collect()
}

/// A generator of a cohomology group: a cochain and its order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Generator {
    /// Element indices of `A`, one per cell.
    pub cochain: Vec<usize>,
    pub order: usize,
}

/// Coordinates reading one cyclic summand of a cohomology group.
#[derive(Clone, Debug)]
enum Coordinate {
    /// `(transform row . x) mod order`, after dividing by `scale`.
    Linear {
        factor: usize,
        row: Vec<i128>,
        scale: i128,
        order: i128,
    },
}

impl Coordinate {
    fn read(&self, residues: &[Vec<i128>]) -> usize {
        match self {
            Coordinate::Linear {
                factor,
                row,
                scale,
                order,
            } => {
                let n = order * scale;
                let dot = row
                    .iter()
                    .zip(&residues[*factor])
                    .fold(0i128, |acc, (a, b)| (acc + a.rem_euclid(n) * b).rem_euclid(n));
                ((dot / scale).rem_euclid(*order)) as usize
            }
        }
    }
}

/// Smith data of the two incidence matrices.
#[derive(Clone, Debug, Serialize)]
pub struct SmithSummary {
    pub d0_invariant_factors: Vec<i128>,
    pub d1_invariant_factors: Vec<i128>,
}

/// Cohomology of a [`CochainComplex`] with class representatives.
#[derive(Clone, Debug)]
pub struct CohomologyData {
    pub group: AbelianGroup,
    /// `#H⁰, #H¹, #H²`.
    pub orders: [u128; 3],
    /// `#Z¹` and `#B¹`.
    pub cocycles: u128,
    pub coboundaries: u128,
    /// Generators per degree; classes are indexed in mixed radix over them,
    /// the first generator being the most significant digit.
    pub generators: [Vec<Generator>; 3],
    /// All class representatives per degree, when within the class cap.
    pub representatives: [Option<Vec<Vec<usize>>>; 3],
    pub smith: SmithSummary,
    coordinates: [Vec<Coordinate>; 3],
    d1_smith: SmithForm,
}

/// Cohomology with the default class cap.
pub fn cohomology(complex: &CochainComplex) -> Result<CohomologyData> {
    cohomology_with_cap(complex, DEFAULT_CLASS_CAP)
}

/// Cohomology; representatives are omitted for degrees whose order exceeds `cap`.
pub fn cohomology_with_cap(complex: &CochainComplex, cap: u128) -> Result<CohomologyData> {
    let (nv, ne, nf) = (complex.num_vertices(), complex.num_edges(), complex.num_faces());
    let s0 = smith_normal_form(&complex.d0)?;
    let s1 = smith_normal_form(&complex.d1)?;
    let r0 = s0.rank();
    // D1 · P0⁻¹ = [0 | M'].
    let shifted = complex.d1.mul(&s0.p_inv)?;
    let mut m_prime = IntMatrix::zeros(nf, ne - r0);
    for i in 0..nf {
        for k in 0..r0 {
            debug_assert_eq!(shifted.get(i, k), 0);
        }
        for j in r0..ne {
            m_prime.set(i, j - r0, shifted.get(i, j));
        }
    }
    let sm = smith_normal_form(&m_prime)?;

    let mut orders = [1u128; 3];
    let mut cocycles = 1u128;
    let mut boundary = 1u128;
    let mut generators: [Vec<Generator>; 3] = Default::default();
    let mut coordinates: [Vec<Coordinate>; 3] = Default::default();
    let group = &complex.group;
    let nfactors = group.factors().len();
    let embed = |factor: usize, values: &[i128]| -> Vec<usize> {
        values
            .iter()
            .map(|&r| {
                let mut res = vec![0i64; nfactors];
                res[factor] = r as i64;
                group.index_signed(&res)
            })
            .collect()
    };
    let overflow = || Error::Overflow("cohomology order");
    for (fi, &n) in group.factors().iter().enumerate() {
        let n = n as i128;
        let h0 = kernel_order(nv, &s0.diagonal, n)?;
        let z1 = kernel_order(ne, &s1.diagonal, n)?;
        let c0 = checked_pow(n as u128, nv)?;
        let b1 = c0 / h0;
        let h2 = checked_pow(n as u128, nf)? / (checked_pow(n as u128, ne)? / z1);
        orders[0] = orders[0].checked_mul(h0).ok_or_else(overflow)?;
        orders[1] = orders[1].checked_mul(z1 / b1).ok_or_else(overflow)?;
        orders[2] = orders[2].checked_mul(h2).ok_or_else(overflow)?;
        cocycles = cocycles.checked_mul(z1).ok_or_else(overflow)?;
        boundary = boundary.checked_mul(b1).ok_or_else(overflow)?;

        // H⁰: x = Q0 z with z_k ∈ (n/g)Z for k < r0, free beyond.
        for k in 0..nv {
            let g = if k < r0 { gcd(s0.diagonal[k], n) } else { n };
            if g == 1 {
                continue;
            }
            let scale = n / g;
            let col: Vec<i128> = (0..nv).map(|i| (s0.q.get(i, k) * scale).rem_euclid(n)).collect();
            generators[0].push(Generator {
                cochain: embed(fi, &col),
                order: g as usize,
            });
            coordinates[0].push(Coordinate::Linear {
                factor: fi,
                row: (0..nv).map(|j| s0.q_inv.get(k, j)).collect(),
                scale,
                order: g,
            });
        }
        // H¹, part one: u = P0 c with u_k mod gcd(s0_k, n) for k < r0.
        for k in 0..r0 {
            let g = gcd(s0.diagonal[k], n);
            if g == 1 {
                continue;
            }
            let col: Vec<i128> = (0..ne).map(|i| s0.p_inv.get(i, k).rem_euclid(n)).collect();
            generators[1].push(Generator {
                cochain: embed(fi, &col),
                order: g as usize,
            });
            coordinates[1].push(Coordinate::Linear {
                factor: fi,
                row: (0..ne).map(|j| s0.p.get(k, j)).collect(),
                scale: 1,
                order: g,
            });
        }
        // H¹, part two: u_b = Q' y in the kernel of M' mod n.
        let mb = ne - r0;
        for k in 0..mb {
            let g = if k < sm.rank() { gcd(sm.diagonal[k], n) } else { n };
            if g == 1 {
                continue;
            }
            let scale = n / g;
            let mut u = vec![0i128; ne];
            for i in 0..mb {
                u[r0 + i] = (sm.q.get(i, k) * scale).rem_euclid(n);
            }
            let c = s0.p_inv.apply_mod(&u, n);
            generators[1].push(Generator {
                cochain: embed(fi, &c),
                order: g as usize,
            });
            // y_k = (Q'⁻¹ u_b)_k = Σ_i Q'⁻¹[k,i] (P0 c)_{r0+i}.
            let row: Vec<i128> = (0..ne)
                .map(|j| {
                    (0..mb).fold(0i128, |acc, i| {
                        (acc + sm.q_inv.get(k, i).rem_euclid(n) * s0.p.get(r0 + i, j).rem_euclid(n)).rem_euclid(n)
                    })
                })
                .collect();
            coordinates[1].push(Coordinate::Linear {
                factor: fi,
                row,
                scale,
                order: g,
            });
        }
        // H²: w = P1 η with w_k mod gcd(s1_k, n), free beyond the rank.
        for k in 0..nf {
            let g = if k < s1.rank() { gcd(s1.diagonal[k], n) } else { n };
            if g == 1 {
                continue;
            }
            let col: Vec<i128> = (0..nf).map(|i| s1.p_inv.get(i, k).rem_euclid(n)).collect();
            generators[2].push(Generator {
                cochain: embed(fi, &col),
                order: g as usize,
            });
            coordinates[2].push(Coordinate::Linear {
                factor: fi,
                row: (0..nf).map(|j| s1.p.get(k, j)).collect(),
                scale: 1,
                order: g,
            });
        }
    }
    let mut representatives: [Option<Vec<Vec<usize>>>; 3] = Default::default();
    let sizes = [nv, ne, nf];
    for degree in 0..3 {
        if orders[degree] <= cap {
            representatives[degree] = Some(enumerate_classes(group, &generators[degree], sizes[degree]));
        }
    }
    Ok(CohomologyData {
        group: group.clone(),
        orders,
        cocycles,
        coboundaries: boundary,
        generators,
        representatives,
        smith: SmithSummary {
            d0_invariant_factors: s0.diagonal.clone(),
            d1_invariant_factors: s1.diagonal.clone(),
        },
        coordinates,
        d1_smith: s1,
    })
}

fn enumerate_classes(group: &AbelianGroup, generators: &[Generator], cells: usize) -> Vec<Vec<usize>> {
    let total: usize = generators.iter().map(|g| g.order).product();
    (0..total)
        .map(|mut index| {
            let mut digits = vec![0usize; generators.len()];
            for (d, g) in digits.iter_mut().zip(generators).rev() {
                *d = index % g.order;
                index /= g.order;
            }
            let mut cochain = vec![0usize; cells];
            for (d, g) in digits.iter().zip(generators) {
                for _ in 0..*d {
                    for (slot, &v) in cochain.iter_mut().zip(&g.cochain) {
                        *slot = group.add(*slot, v);
                    }
                }
            }
            cochain
        })
        .collect()
}

impl CohomologyData {
    fn residues(&self, cochain: &[usize]) -> Vec<Vec<i128>> {
        let nf = self.group.factors().len();
        let mut out = vec![Vec::with_capacity(cochain.len()); nf];
        for &a in cochain {
            for (slot, r) in out.iter_mut().zip(self.group.element(a)) {
                slot.push(r as i128);
            }
        }
        out
    }

    /// Coordinates of the class of a cocycle, one per generator of `degree`.
    pub fn class_coordinates(&self, degree: usize, cochain: &[usize]) -> Vec<usize> {
        let residues = self.residues(cochain);
        self.coordinates[degree].iter().map(|c| c.read(&residues)).collect()
    }

    /// Index of the class of a cocycle within `representatives[degree]`.
    pub fn class_index(&self, degree: usize, cochain: &[usize]) -> usize {
        self.class_coordinates(degree, cochain)
            .iter()
            .zip(&self.generators[degree])
            .fold(0, |acc, (&c, g)| acc * g.order + c)
    }

    /// A cochain `z` with `d¹z = η`, or the obstruction class in `H²`.
    ///
    /// The solution is canonical: in Smith coordinates each pivot variable
    /// takes its least nonnegative value and every free variable is zero.
    pub fn solve_disorder(&self, complex: &CochainComplex, eta: &[usize]) -> Result<Vec<usize>> {
        if eta.len() != complex.num_faces() {
            return Err(Error::InvalidInput("disorder assignment has the wrong length".into()));
        }
        let obstruction = self.class_coordinates(2, eta);
        if obstruction.iter().any(|&c| c != 0) {
            return Err(Error::NotABoundary {
                obstruction: obstruction.into_iter().map(|c| c as i64).collect(),
            });
        }
        let s1 = &self.d1_smith;
        let ne = complex.num_edges();
        let residues = self.residues(eta);
        let mut per_factor = Vec::new();
        for (fi, &n) in self.group.factors().iter().enumerate() {
            let n = n as i128;
            let w = s1.p.apply_mod(&residues[fi], n);
            let mut y = vec![0i128; ne];
            for (k, &s) in s1.diagonal.iter().enumerate() {
                let g = gcd(s, n);
                let m = n / g;
                let inv = mod_inverse((s / g).rem_euclid(m), m);
                y[k] = ((w[k] / g) * inv).rem_euclid(m);
            }
            per_factor.push(s1.q.apply_mod(&y, n));
        }
        Ok((0..ne)
            .map(|e| {
                let res: Vec<i64> = per_factor.iter().map(|z| z[e] as i64).collect();
                self.group.index_signed(&res)
            })
            .collect())
    }
}

fn mod_inverse(a: i128, m: i128) -> i128 {
    if m == 1 {
        return 0;
    }
    let (mut old_r, mut r) = (a, m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    old_s.rem_euclid(m)
}

/// Global sign of the fundamental class used by [`poincare_pairing`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairingSign {
    #[default]
    Positive,
    Negative,
}

/// `∏_e χ(u(e), w(e∨))^σ` over crossing pairs of edges.
///
/// Every crossing carries `σ = +1` for [`PairingSign::Positive`]: with the
/// dual orientation of [`crate::surface::dual_lattice`] each dual edge crosses
/// its primal edge from right to left. `Negative` conjugates the result.
pub fn poincare_pairing(
    lattice: &Lattice2,
    dual: Option<&DualLattice>,
    group: &AbelianGroup,
    u: &[usize],
    w: &[usize],
    sign: PairingSign,
) -> Result<C64> {
    let dual = dual.ok_or(Error::RequiresDual)?;
    let ne = lattice.num_edges();
    if u.len() != ne || w.len() != dual.lattice.num_edges() {
        return Err(Error::InvalidInput("cochain lengths do not match the lattices".into()));
    }
    let den = group.factors().iter().fold(1u64, |l, &n| num_lcm(l, n as u64));
    let mut turns = 0u64;
    for e in 0..ne {
        let (num, d) = group.pairing_turns(u[e], w[dual.edge_to_edge[e]]);
        turns = (turns + num * (den / d)) % den;
    }
    if sign == PairingSign::Negative {
        turns = (den - turns) % den;
    }
    Ok(crate::groups::root_of_unity(turns, den))
}

fn num_lcm(a: u64, b: u64) -> u64 {
    a / gcd(a as i128, b as i128) as u64 * b
}

/// `M' → M → M''` with `π ∘ i = 0`, realised by a lattice cochain complex.
#[derive(Clone, Debug, Serialize)]
pub struct SubquotientDiagram {
    /// `#M', #M, #M''`.
    pub orders: [u128; 3],
    /// `#Ker π` and `#(Ker π / Im i)`.
    pub kernel: u128,
    pub quotient: u128,
    /// The same data for the dual diagram `M''∨ → M∨ → M'∨`.
    pub dual_kernel: u128,
    pub dual_quotient: u128,
}

impl SubquotientDiagram {
    pub fn from_complex(complex: &CochainComplex) -> Result<Self> {
        let h = cohomology_with_cap(complex, 0)?;
        let dual = CochainComplex {
            group: complex.group.dual(),
            d0: complex.d1.transpose(),
            d1: complex.d0.transpose(),
        };
        let hd = cohomology_with_cap(&dual, 0)?;
        Ok(Self {
            orders: complex.cochain_orders()?,
            kernel: h.cocycles,
            quotient: h.orders[1],
            dual_kernel: hd.cocycles,
            dual_quotient: hd.orders[1],
        })
    }
}

/// A finite simplicial complex given by its top simplices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplicialComplex {
    pub dim: usize,
    pub simplices: Vec<Vec<usize>>,
}

impl SimplicialComplex {
    pub fn new(dim: usize, simplices: Vec<Vec<usize>>) -> Result<Self> {
        for s in &simplices {
            let distinct: BTreeSet<_> = s.iter().collect();
            if s.len() != dim + 1 || distinct.len() != s.len() {
                return Err(Error::InvalidInput(format!(
                    "simplex {s:?} does not have {} distinct vertices",
                    dim + 1
                )));
            }
        }
        Ok(Self { dim, simplices })
    }

    /// Boundary of the 4-simplex, a triangulated 3-sphere.
    pub fn sphere3() -> Self {
        let simplices = (0..5).map(|skip| (0..5).filter(|&v| v != skip).collect()).collect();
        Self { dim: 3, simplices }
    }

    /// The 6-vertex projective plane.
    pub fn rp2() -> Self {
        let tri = [
            [1, 2, 4],
            [1, 2, 6],
            [1, 3, 5],
            [1, 3, 6],
            [1, 4, 5],
            [2, 3, 4],
            [2, 3, 5],
            [2, 5, 6],
            [3, 4, 6],
            [4, 5, 6],
        ];
        Self {
            dim: 2,
            simplices: tri.iter().map(|t| t.iter().map(|v| v - 1).collect()).collect(),
        }
    }

    /// The 3-torus as a cube of side `period` with opposite faces identified,
    /// each unit cube split into 6 tetrahedra along its main diagonal.
    /// `period ≥ 3` is needed for a simplicial complex.
    pub fn torus3(period: usize) -> Result<Self> {
        if period < 3 {
            return Err(Error::InvalidInput("torus3 needs period >= 3".into()));
        }
        let p = period;
        let id = |x: usize, y: usize, z: usize| (x % p) + p * ((y % p) + p * (z % p));
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut simplices = Vec::new();
        for z in 0..p {
            for y in 0..p {
                for x in 0..p {
                    for perm in perms {
                        let mut c = [x, y, z];
                        let mut tet = vec![id(c[0], c[1], c[2])];
                        for axis in perm {
                            c[axis] += 1;
                            tet.push(id(c[0], c[1], c[2]));
                        }
                        simplices.push(tet);
                    }
                }
            }
        }
        Ok(Self { dim: 3, simplices })
    }

    /// Barycentric subdivision of a latticed surface: vertices, then edge
    /// midpoints, then face centres.
    pub fn from_lattice(lattice: &Lattice2) -> Self {
        let (v, e) = (lattice.num_vertices(), lattice.num_edges());
        let mut simplices = Vec::new();
        for (f, face) in lattice.faces.iter().enumerate() {
            for &(edge, _) in face {
                let [a, b] = lattice.edges[edge];
                simplices.push(vec![v + e + f, v + edge, a]);
                simplices.push(vec![v + e + f, v + edge, b]);
            }
        }
        Self { dim: 2, simplices }
    }

    /// All faces of each dimension, as sorted vertex tuples in sorted order.
    pub fn cells(&self, cap: usize) -> Result<Vec<Vec<Vec<usize>>>> {
        let mut sets: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); self.dim + 1];
        for s in &self.simplices {
            let mut sorted = s.clone();
            sorted.sort_unstable();
            let k = sorted.len();
            for mask in 1u32..(1 << k) {
                let face: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| sorted[i]).collect();
                sets[face.len() - 1].insert(face);
            }
            let total: usize = sets.iter().map(|s| s.len()).sum();
            if total > cap {
                return Err(Error::cap("simplicial cells", total as f64, cap as f64));
            }
        }
        Ok(sets.into_iter().map(|s| s.into_iter().collect()).collect())
    }

    /// Coboundary matrices `δ^i : C^i → C^{i+1}`, rows indexed by `(i+1)`-cells.
    pub fn coboundary_matrices(&self, cap: usize) -> Result<Vec<IntMatrix>> {
        let cells = self.cells(cap)?;
        let index: Vec<HashMap<&Vec<usize>, usize>> = cells
            .iter()
            .map(|list| list.iter().enumerate().map(|(i, c)| (c, i)).collect())
            .collect();
        let mut out = Vec::new();
        for i in 0..self.dim {
            let mut m = IntMatrix::zeros(cells[i + 1].len(), cells[i].len());
            for (row, sigma) in cells[i + 1].iter().enumerate() {
                for k in 0..sigma.len() {
                    let mut face = sigma.clone();
                    face.remove(k);
                    let col = index[i][&face];
                    m.set(row, col, if k % 2 == 0 { 1 } else { -1 });
                }
            }
            out.push(m);
        }
        Ok(out)
    }
}

/// Orders `#H^i(X; A)` for `i = 0..=dim`.
pub fn simplicial_cohomology(complex: &SimplicialComplex, group: &AbelianGroup, cell_cap: usize) -> Result<Vec<u128>> {
    let cells = complex.cells(cell_cap)?;
    let deltas = complex.coboundary_matrices(cell_cap)?;
    let diagonals: Vec<Vec<i128>> = deltas.iter().map(smith_diagonal).collect::<Result<_>>()?;
    let mut orders = vec![1u128; complex.dim + 1];
    for &n in group.factors() {
        let n = n as i128;
        for (i, slot) in orders.iter_mut().enumerate() {
            let size = cells[i].len();
            let empty = Vec::new();
            let incoming = if i == 0 { &empty } else { &diagonals[i - 1] };
            let outgoing = if i == complex.dim { &empty } else { &diagonals[i] };
            let mut value = checked_pow(n as u128, size - incoming.len() - outgoing.len())?;
            for &s in incoming.iter().chain(outgoing) {
                value = value
                    .checked_mul(gcd(s, n) as u128)
                    .ok_or(Error::Overflow("cohomology order"))?;
            }
            *slot = slot.checked_mul(value).ok_or(Error::Overflow("cohomology order"))?;
        }
    }
    Ok(orders)
}
