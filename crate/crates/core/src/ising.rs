//! Gauged Ising partition functions on latticed surfaces with order and
//! disorder insertions, transfer matrices, and the Kramers-Wannier check.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{AbelianGroup, FiniteGroup};
use crate::harmonic::{dual_weight, WeightFunction};
use crate::homology::{coboundaries, cohomology, poincare_pairing, CohomologyData, PairingSign};
use crate::surface::{dual_lattice, DualLattice, Lattice2};
use crate::C64;

/// Default cap on the number of spin configurations `#G^V`.
pub const DEFAULT_SPIN_CAP: u128 = 1 << 24;

/// Default cap on the transfer-matrix state space `#G^n`.
pub const DEFAULT_TRANSFER_CAP: usize = 1 << 12;

/// Default cap on enumerated flat labelings.
pub const DEFAULT_LABELING_CAP: usize = 1 << 20;

/// Largest intermediate table allowed during variable elimination.
const ELIMINATION_TABLE_CAP: u128 = 1 << 24;

/// Fixed number of work chunks, so sums do not depend on the thread count.
const CHUNKS: u128 = 1024;

/// How configuration sums are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum SumMethod {
    /// Brute force up to `2^20` configurations, elimination beyond.
    #[default]
    Auto,
    BruteForce,
    Elimination,
}

/// Caps and evaluation strategy for configuration sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SumOptions {
    pub spin_cap: u128,
    pub method: SumMethod,
    /// Rescale every value by `#A^{-1/2}` per vertex.
    pub normalize_vertices: bool,
}

impl Default for SumOptions {
    fn default() -> Self {
        Self {
            spin_cap: DEFAULT_SPIN_CAP,
            method: SumMethod::Auto,
            normalize_vertices: false,
        }
    }
}

/// An edge labeling by group elements, read as transport from tail to head.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FlatBackground {
    pub hol: Vec<usize>,
}

impl FlatBackground {
    pub fn trivial(lattice: &Lattice2, group: &FiniteGroup) -> Self {
        Self {
            hol: vec![group.identity(); lattice.num_edges()],
        }
    }

    /// `hol(e) ↦ t(head) · hol(e) · t(tail)⁻¹`.
    pub fn gauge_transform(&self, lattice: &Lattice2, group: &FiniteGroup, t: &[usize]) -> Self {
        Self {
            hol: self
                .hol
                .iter()
                .enumerate()
                .map(|(e, &h)| group.product([t[lattice.head(e)], h, group.inv(t[lattice.tail(e)])]))
                .collect(),
        }
    }
}

/// Holonomy `hol_n ⋯ hol_1` around a face, edges traversed against their
/// orientation contributing inverses.
pub fn face_holonomy(lattice: &Lattice2, group: &FiniteGroup, hol: &[usize], face: usize) -> usize {
    lattice.faces[face].iter().fold(group.identity(), |acc, &(e, dir)| {
        let step = if dir > 0 { hol[e] } else { group.inv(hol[e]) };
        group.mul(step, acc)
    })
}

/// A character inserted at a vertex; the character is an element of `A∨`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OrderInsertion {
    pub vertex: usize,
    pub character: usize,
}

/// A prescribed holonomy at a face: an element for abelian groups, its
/// conjugacy class otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DisorderInsertion {
    pub face: usize,
    pub element: usize,
}

/// Order and disorder operators.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Insertions {
    pub order: Vec<OrderInsertion>,
    pub disorder: Vec<DisorderInsertion>,
}

impl Insertions {
    pub fn is_empty(&self) -> bool {
        self.order.is_empty() && self.disorder.is_empty()
    }

    /// Check ranges and that vertices and faces are distinct.
    pub fn validate(&self, lattice: &Lattice2, group_order: usize) -> Result<()> {
        let mut vertices: Vec<usize> = self.order.iter().map(|o| o.vertex).collect();
        let mut faces: Vec<usize> = self.disorder.iter().map(|d| d.face).collect();
        if vertices.iter().any(|&v| v >= lattice.num_vertices()) {
            return Err(Error::InvalidInput("order insertion at a missing vertex".into()));
        }
        if faces.iter().any(|&f| f >= lattice.num_faces()) {
            return Err(Error::InvalidInput("disorder insertion at a missing face".into()));
        }
        if self.order.iter().any(|o| o.character >= group_order)
            || self.disorder.iter().any(|d| d.element >= group_order)
        {
            return Err(Error::InvalidInput("insertion label outside the group".into()));
        }
        vertices.sort_unstable();
        faces.sort_unstable();
        if vertices.windows(2).any(|w| w[0] == w[1]) || faces.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("insertions must sit at distinct cells".into()));
        }
        Ok(())
    }

    /// Disorder data as a face cochain.
    pub fn disorder_cochain(&self, faces: usize) -> Vec<usize> {
        let mut eta = vec![0; faces];
        for d in &self.disorder {
            eta[d.face] = d.element;
        }
        eta
    }

    /// Insertions on the dual lattice: each order character `ω` at `v`
    /// becomes disorder `-ω` at dual face `v`, each disorder `η` at `f`
    /// becomes the order character `η` at dual vertex `f`.
    pub fn dual(&self, group: &AbelianGroup) -> Insertions {
        Insertions {
            order: self
                .disorder
                .iter()
                .map(|d| OrderInsertion {
                    vertex: d.face,
                    character: d.element,
                })
                .collect(),
            disorder: self
                .order
                .iter()
                .map(|o| DisorderInsertion {
                    face: o.vertex,
                    element: group.neg(o.character),
                })
                .collect(),
        }
    }
}

/// Spins on vertices with an edge factor table and optional vertex weights.
struct SpinModel {
    q: usize,
    vertex: Vec<Option<Vec<C64>>>,
    /// `(tail, head, table[a * q + b])` with `a = s(tail)`, `b = s(head)`.
    edges: Vec<(usize, usize, Vec<f64>)>,
}

impl SpinModel {
    fn configurations(&self) -> Option<u128> {
        (0..self.vertex.len()).try_fold(1u128, |acc, _| acc.checked_mul(self.q as u128))
    }

    fn sum(&self, opts: &SumOptions) -> Result<C64> {
        let total = self.configurations();
        let brute = match opts.method {
            SumMethod::BruteForce => true,
            SumMethod::Elimination => false,
            SumMethod::Auto => total.is_some_and(|t| t <= 1 << 20),
        };
        if brute {
            let total = total.unwrap_or(u128::MAX);
            if total > opts.spin_cap {
                return Err(Error::cap("spin configurations", total as f64, opts.spin_cap as f64));
            }
            Ok(self.brute_force(total))
        } else {
            self.eliminate()
        }
    }

    fn brute_force(&self, total: u128) -> C64 {
        let nv = self.vertex.len();
        let q = self.q;
        let chunk = total.div_ceil(CHUNKS).max(1);
        let chunks = total.div_ceil(chunk);
        let partial: Vec<C64> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * chunk;
                let end = (start + chunk).min(total);
                let mut digits = vec![0usize; nv];
                let mut x = start;
                for d in digits.iter_mut().rev() {
                    *d = (x % q as u128) as usize;
                    x /= q as u128;
                }
                let mut acc = C64::new(0.0, 0.0);
                for _ in start..end {
                    let mut w = 1.0f64;
                    for (t, h, table) in &self.edges {
                        w *= table[digits[*t] * q + digits[*h]];
                        if w == 0.0 {
                            break;
                        }
                    }
                    if w != 0.0 {
                        let mut term = C64::new(w, 0.0);
                        for (v, weights) in self.vertex.iter().enumerate() {
                            if let Some(weights) = weights {
                                term *= weights[digits[v]];
                            }
                        }
                        acc += term;
                    }
                    for d in digits.iter_mut().rev() {
                        *d += 1;
                        if *d < q {
                            break;
                        }
                        *d = 0;
                    }
                }
                acc
            })
            .collect();
        partial.into_iter().sum()
    }

    fn eliminate(&self) -> Result<C64> {
        let q = self.q;
        let mut factors: Vec<Factor> = Vec::new();
        for (v, weights) in self.vertex.iter().enumerate() {
            if let Some(w) = weights {
                factors.push(Factor {
                    vars: vec![v],
                    data: w.clone(),
                });
            }
        }
        for (t, h, table) in &self.edges {
            let (t, h) = (*t, *h);
            let data: Vec<C64> = if t < h {
                table.iter().map(|&x| C64::new(x, 0.0)).collect()
            } else {
                let mut d = vec![C64::new(0.0, 0.0); q * q];
                for a in 0..q {
                    for b in 0..q {
                        d[b * q + a] = C64::new(table[a * q + b], 0.0);
                    }
                }
                d
            };
            factors.push(Factor {
                vars: vec![t.min(h), t.max(h)],
                data,
            });
        }
        let mut remaining: Vec<usize> = (0..self.vertex.len()).collect();
        let mut scalar = C64::new(1.0, 0.0);
        while !remaining.is_empty() {
            // Greedy min-degree choice, ties broken by the lowest index.
            let (pos, var) = remaining
                .iter()
                .enumerate()
                .min_by_key(|(_, &v)| {
                    let mut scope: Vec<usize> = factors
                        .iter()
                        .filter(|f| f.vars.contains(&v))
                        .flat_map(|f| f.vars.iter().copied())
                        .collect();
                    scope.sort_unstable();
                    scope.dedup();
                    (scope.len(), v)
                })
                .map(|(i, &v)| (i, v))
                .expect("nonempty");
            remaining.remove(pos);
            let (touching, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.vars.contains(&var));
            factors = rest;
            if touching.is_empty() {
                scalar *= C64::new(q as f64, 0.0);
                continue;
            }
            let product = Factor::sum_out(&touching, var, q)?;
            if product.vars.is_empty() {
                scalar *= product.data[0];
            } else {
                factors.push(product);
            }
        }
        for f in factors {
            scalar *= f.data[0];
        }
        Ok(scalar)
    }
}

struct Factor {
    vars: Vec<usize>,
    data: Vec<C64>,
}

impl Factor {
    fn sum_out(factors: &[Factor], var: usize, q: usize) -> Result<Factor> {
        let mut scope: Vec<usize> = factors.iter().flat_map(|f| f.vars.iter().copied()).collect();
        scope.sort_unstable();
        scope.dedup();
        let size = (0..scope.len()).try_fold(1u128, |acc, _| acc.checked_mul(q as u128));
        if size.is_none_or(|s| s > ELIMINATION_TABLE_CAP) {
            return Err(Error::cap(
                "variable elimination table",
                size.map_or(f64::INFINITY, |s| s as f64),
                ELIMINATION_TABLE_CAP as f64,
            ));
        }
        let out_vars: Vec<usize> = scope.iter().copied().filter(|&v| v != var).collect();
        let out_size = q.pow(out_vars.len() as u32);
        let var_pos = scope.iter().position(|&v| v == var).expect("var in scope");
        // Strides of each factor's variables inside the scope assignment.
        let positions: Vec<Vec<usize>> = factors
            .iter()
            .map(|f| {
                f.vars
                    .iter()
                    .map(|v| scope.iter().position(|s| s == v).unwrap())
                    .collect()
            })
            .collect();
        let mut data = vec![C64::new(0.0, 0.0); out_size];
        let mut digits = vec![0usize; scope.len()];
        for (out_index, slot) in data.iter_mut().enumerate() {
            let mut x = out_index;
            for (k, d) in digits.iter_mut().enumerate().rev() {
                if k == var_pos {
                    continue;
                }
                *d = x % q;
                x /= q;
            }
            let mut acc = C64::new(0.0, 0.0);
            for value in 0..q {
                digits[var_pos] = value;
                let mut term = C64::new(1.0, 0.0);
                for (f, pos) in factors.iter().zip(&positions) {
                    let idx = pos.iter().fold(0, |a, &p| a * q + digits[p]);
                    term *= f.data[idx];
                }
                acc += term;
            }
            *slot = acc;
        }
        Ok(Factor { vars: out_vars, data })
    }
}

fn edge_table(group: &FiniteGroup, theta: &WeightFunction, hol: usize) -> Vec<f64> {
    let q = group.order();
    let mut table = vec![0.0; q * q];
    for a in 0..q {
        for b in 0..q {
            table[a * q + b] = theta.values[group.product([group.inv(b), hol, a])];
        }
    }
    table
}

/// `Σ_s ∏ᵢ ωᵢ(s(vᵢ)) ∏_e θ(s(head)⁻¹ · hol(e) · s(tail))`.
///
/// The background must be flat away from the disorder faces, and have face
/// holonomy in the class of `η` at each disorder face.
pub fn spin_partition(
    lattice: &Lattice2,
    group: &FiniteGroup,
    theta: &WeightFunction,
    background: &FlatBackground,
    ins: &Insertions,
    opts: &SumOptions,
) -> Result<C64> {
    theta.check_len(group.order())?;
    ins.validate(lattice, group.order())?;
    if background.hol.len() != lattice.num_edges() || background.hol.iter().any(|&h| h >= group.order()) {
        return Err(Error::InvalidInput("background does not label every edge".into()));
    }
    let abelian = if ins.order.is_empty() {
        None
    } else {
        Some(group.as_abelian().map_err(|_| Error::UseTuraevViroBackend)?)
    };
    let targets = ins.disorder_cochain(lattice.num_faces());
    for f in 0..lattice.num_faces() {
        let h = face_holonomy(lattice, group, &background.hol, f);
        if group.class_of(h) != group.class_of(targets[f]) {
            return Err(Error::InvalidInput(format!(
                "background holonomy at face {f} does not match the disorder data"
            )));
        }
    }
    let mut vertex = vec![None; lattice.num_vertices()];
    if let Some(a) = abelian {
        for o in &ins.order {
            vertex[o.vertex] = Some((0..a.order()).map(|s| a.pairing(s, o.character)).collect());
        }
    }
    let model = SpinModel {
        q: group.order(),
        vertex,
        edges: (0..lattice.num_edges())
            .map(|e| {
                (
                    lattice.tail(e),
                    lattice.head(e),
                    edge_table(group, theta, background.hol[e]),
                )
            })
            .collect(),
    };
    let value = model.sum(opts)?;
    Ok(value * vertex_normalization(group.order(), lattice.num_vertices(), opts))
}

fn vertex_normalization(order: usize, vertices: usize, opts: &SumOptions) -> f64 {
    if opts.normalize_vertices {
        (order as f64).powf(-(vertices as f64) / 2.0)
    } else {
        1.0
    }
}

/// Values of the gauged Ising vector on the classes of a disorder torsor.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionVector {
    pub group: String,
    /// Base point `z₀` with `d¹z₀ = η`.
    pub base: Vec<usize>,
    /// One representative `z₀ + hₖ` per class, `hₖ` running over `H¹` in
    /// the enumeration order of [`CohomologyData`].
    pub classes: Vec<Vec<usize>>,
    pub values: Vec<C64>,
    /// Whether the selection rule forced every value to zero.
    pub selection_rule_zero: bool,
}

/// `Σ_{s∈C⁰} ω(s) Θ(z + d⁰s)` for each class `z` of `(d¹)⁻¹(η)`, with
/// `Θ(c) = ∏_e θ(c(e))`.
///
/// If the order characters multiply to a nontrivial character the vector
/// vanishes identically and exact zeros are returned.
pub fn partition_vector(
    lattice: &Lattice2,
    group: &AbelianGroup,
    theta: &WeightFunction,
    ins: &Insertions,
    opts: &SumOptions,
) -> Result<PartitionVector> {
    let complex = coboundaries(lattice, group);
    let h = cohomology(&complex)?;
    partition_vector_with(lattice, group, theta, ins, opts, &complex, &h, None)
}

#[allow(clippy::too_many_arguments)]
fn partition_vector_with(
    lattice: &Lattice2,
    group: &AbelianGroup,
    theta: &WeightFunction,
    ins: &Insertions,
    opts: &SumOptions,
    complex: &crate::homology::CochainComplex,
    h: &CohomologyData,
    base_override: Option<Vec<usize>>,
) -> Result<PartitionVector> {
    let finite = group.to_finite();
    theta.check_len(group.order())?;
    ins.validate(lattice, group.order())?;
    let eta = ins.disorder_cochain(lattice.num_faces());
    let base = match base_override {
        Some(b) => b,
        None => h.solve_disorder(complex, &eta)?,
    };
    let reps = h.representatives[1].as_ref().ok_or_else(|| {
        Error::cap(
            "cohomology classes",
            h.orders[1] as f64,
            crate::homology::DEFAULT_CLASS_CAP as f64,
        )
    })?;
    let classes: Vec<Vec<usize>> = reps
        .iter()
        .map(|r| r.iter().zip(&base).map(|(&x, &b)| group.add(x, b)).collect())
        .collect();
    let total_character = ins.order.iter().fold(0, |acc, o| group.add(acc, o.character));
    let selection_rule_zero = total_character != 0;
    let q = group.order();
    let mut vertex = vec![None; lattice.num_vertices()];
    for o in &ins.order {
        vertex[o.vertex] = Some((0..q).map(|s| group.pairing(s, o.character)).collect::<Vec<C64>>());
    }
    let norm = vertex_normalization(q, lattice.num_vertices(), opts);
    let values = if selection_rule_zero {
        vec![C64::new(0.0, 0.0); classes.len()]
    } else {
        classes
            .iter()
            .map(|z| {
                let edges = (0..lattice.num_edges())
                    .map(|e| {
                        let mut table = vec![0.0; q * q];
                        for a in 0..q {
                            for b in 0..q {
                                // z(e) + s(head) - s(tail)
                                let c = finite.mul(finite.mul(z[e], b), finite.inv(a));
                                table[a * q + b] = theta.values[c];
                            }
                        }
                        (lattice.tail(e), lattice.head(e), table)
                    })
                    .collect();
                let model = SpinModel {
                    q,
                    vertex: vertex.clone(),
                    edges,
                };
                model.sum(opts).map(|v| v * norm)
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(PartitionVector {
        group: group.descriptor(),
        base,
        classes,
        values,
        selection_rule_zero,
    })
}

/// One row of a Kramers-Wannier comparison.
#[derive(Clone, Debug, Serialize)]
pub struct KwRow {
    pub class: usize,
    pub lhs: C64,
    pub rhs: C64,
    pub abs_err: f64,
}

/// Result of [`kw_dual_check`].
#[derive(Clone, Debug, Serialize)]
pub struct KwReport {
    pub factor: f64,
    pub max_error: f64,
    /// Largest error divided by the largest `|rhs|` (or 1 if smaller).
    pub max_relative_error: f64,
    pub h1_order: u128,
    pub rows: Vec<KwRow>,
}

/// Compare the Poincaré-Fourier transform of the partition vector with the
/// dual partition vector.
///
/// `(𝔉v)(k̃) = #H¹^{-1/2} Σ_k conj⟨k, k̃⟩ v(k)` must equal `factor · w(k̃)`
/// with `factor = √(#C⁰/#C²)`, which is 1 under `normalize_vertices`.
pub fn kw_dual_check(
    lattice: &Lattice2,
    group: &AbelianGroup,
    theta: &WeightFunction,
    ins: &Insertions,
    opts: &SumOptions,
) -> Result<KwReport> {
    let dual = dual_lattice(lattice)?;
    let dual_group = group.dual();
    let theta_dual = dual_weight(theta, group)?;
    let v = partition_vector(lattice, group, theta, ins, opts)?;
    let w = partition_vector(&dual.lattice, &dual_group, &theta_dual, &ins.dual(group), opts)?;
    let factor = if opts.normalize_vertices {
        1.0
    } else {
        let n = group.order() as f64;
        n.powf((lattice.num_vertices() as f64 - lattice.num_faces() as f64) / 2.0)
    };
    fourier_compare(
        lattice, &dual, group, &v.classes, &v.values, &w.classes, &w.values, factor,
    )
}

/// Compare `𝔉v` with `factor · w` for class functions `v` on `H¹(Λ)` and `w`
/// on `H¹(Λ∨)`, each given by one representative cocycle per class.
#[allow(clippy::too_many_arguments)]
pub fn fourier_compare(
    lattice: &Lattice2,
    dual: &DualLattice,
    group: &AbelianGroup,
    v_classes: &[Vec<usize>],
    v_values: &[C64],
    w_classes: &[Vec<usize>],
    w_values: &[C64],
    factor: f64,
) -> Result<KwReport> {
    let h1 = v_classes.len();
    if w_classes.len() != h1 || v_values.len() != h1 || w_values.len() != h1 {
        return Err(Error::InvalidInput("primal and dual class counts differ".into()));
    }
    let scale = 1.0 / (h1 as f64).sqrt();
    let rows: Vec<KwRow> = (0..h1)
        .map(|j| -> Result<KwRow> {
            let mut lhs = C64::new(0.0, 0.0);
            for k in 0..h1 {
                let p = poincare_pairing(
                    lattice,
                    Some(dual),
                    group,
                    &v_classes[k],
                    &w_classes[j],
                    PairingSign::Positive,
                )?;
                lhs += p.conj() * v_values[k];
            }
            lhs *= scale;
            let rhs = w_values[j] * factor;
            Ok(KwRow {
                class: j,
                lhs,
                rhs,
                abs_err: (lhs - rhs).norm(),
            })
        })
        .collect::<Result<_>>()?;
    let max_error = rows.iter().fold(0.0f64, |m, r| m.max(r.abs_err));
    let max_rhs = rows.iter().fold(1.0f64, |m, r| m.max(r.rhs.norm()));
    Ok(KwReport {
        factor,
        max_error,
        max_relative_error: max_error / max_rhs,
        h1_order: h1 as u128,
        rows,
    })
}

/// Transfer matrix data on a latticed circle of `n` sites.
#[derive(Clone, Debug, Serialize)]
pub struct TransferReport {
    pub sites: usize,
    pub states: usize,
    /// Row-major `T[s', s]`.
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
    /// Eigenvalues in decreasing order.
    pub eigenvalues: Vec<f64>,
    pub top_multiplicity: usize,
    pub rank: usize,
    /// `c` with `T² ≈ cT`, taken as the top eigenvalue, and `‖T² − cT‖_F`.
    pub idempotence_constant: f64,
    pub idempotence_residual: f64,
}

/// `T[s', s] = ∏ᵢ θ(s(i+1)⁻¹ tᵢ s(i)) · ∏ᵢ θ(s'(i)⁻¹ s(i))` where `tᵢ = e`
/// except `t_{n-1} = h` on the edge closing the circle. States are indexed
/// by `Σ s(i) #G^{n-1-i}`.
pub fn transfer_matrix(
    sites: usize,
    group: &FiniteGroup,
    theta: &WeightFunction,
    twist: usize,
    cap: usize,
) -> Result<TransferReport> {
    crate::surface::LatticedCircle::new(sites)?;
    theta.check_len(group.order())?;
    let q = group.order();
    let states = (0..sites).try_fold(1usize, |acc, _| acc.checked_mul(q));
    let states = match states {
        Some(s) if s <= cap => s,
        other => {
            return Err(Error::cap(
                "transfer states",
                other.map_or(f64::INFINITY, |s| s as f64),
                cap as f64,
            ))
        }
    };
    let decode = |mut index: usize| {
        let mut s = vec![0usize; sites];
        for d in s.iter_mut().rev() {
            *d = index % q;
            index /= q;
        }
        s
    };
    let configs: Vec<Vec<usize>> = (0..states).map(decode).collect();
    let horizontal: Vec<f64> = configs
        .iter()
        .map(|s| {
            (0..sites)
                .map(|i| {
                    let j = (i + 1) % sites;
                    let t = if i == sites - 1 { twist } else { group.identity() };
                    theta.values[group.product([group.inv(s[j]), t, s[i]])]
                })
                .product()
        })
        .collect();
    let mut matrix = DMatrix::zeros(states, states);
    for (row, sp) in configs.iter().enumerate() {
        for (col, s) in configs.iter().enumerate() {
            if horizontal[col] == 0.0 {
                continue;
            }
            let vertical: f64 = (0..sites)
                .map(|i| theta.values[group.mul(group.inv(sp[i]), s[i])])
                .product();
            matrix[(row, col)] = vertical * horizontal[col];
        }
    }
    // T = V D with V symmetric and D ≥ 0 diagonal, so D^{1/2} V D^{1/2} is a
    // symmetric matrix with the same spectrum.
    let roots: Vec<f64> = horizontal.iter().map(|h| h.max(0.0).sqrt()).collect();
    let mut sym = DMatrix::zeros(states, states);
    for r in 0..states {
        for c in 0..states {
            if roots[r] != 0.0 && roots[c] != 0.0 {
                sym[(r, c)] = roots[r] * matrix[(r, c)] / horizontal[c] * roots[c];
            }
        }
    }
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let top = eigenvalues.first().copied().unwrap_or(0.0);
    let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let tol = 1e-9 * scale.max(1.0);
    let top_multiplicity = if top.abs() <= tol {
        0
    } else {
        eigenvalues.iter().filter(|&&v| (v - top).abs() <= tol).count()
    };
    let rank = eigenvalues.iter().filter(|v| v.abs() > tol).count();
    let square = &matrix * &matrix;
    let residual = (&square - &matrix * top).norm();
    Ok(TransferReport {
        sites,
        states,
        matrix,
        eigenvalues,
        top_multiplicity,
        rank,
        idempotence_constant: top,
        idempotence_residual: residual,
    })
}

/// Per-face holonomy constraint used by [`flat_labelings`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceConstraint {
    Identity,
    /// Holonomy in the given conjugacy class.
    Class(usize),
    Free,
}

/// All edge labelings satisfying the face constraints, in lexicographic
/// order of the label vector.
pub fn flat_labelings(
    lattice: &Lattice2,
    group: &FiniteGroup,
    constraints: &[FaceConstraint],
    cap: usize,
) -> Result<Vec<Vec<usize>>> {
    let ne = lattice.num_edges();
    let mut completes: Vec<Vec<usize>> = vec![Vec::new(); ne];
    for (f, face) in lattice.faces.iter().enumerate() {
        if let Some(last) = face.iter().map(|s| s.0).max() {
            completes[last].push(f);
        }
    }
    let mut out = Vec::new();
    let mut labels = vec![0usize; ne];
    fn recurse(
        e: usize,
        labels: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        lattice: &Lattice2,
        group: &FiniteGroup,
        constraints: &[FaceConstraint],
        completes: &[Vec<usize>],
        cap: usize,
    ) -> Result<()> {
        if e == labels.len() {
            if out.len() >= cap {
                return Err(Error::cap("flat labelings", (cap + 1) as f64, cap as f64));
            }
            out.push(labels.clone());
            return Ok(());
        }
        for g in 0..group.order() {
            labels[e] = g;
            let ok = completes[e].iter().all(|&f| {
                let h = face_holonomy(lattice, group, labels, f);
                match constraints[f] {
                    FaceConstraint::Identity => h == group.identity(),
                    FaceConstraint::Class(c) => group.class_of(h) == c,
                    FaceConstraint::Free => true,
                }
            });
            if ok {
                recurse(e + 1, labels, out, lattice, group, constraints, completes, cap)?;
            }
        }
        Ok(())
    }
    recurse(0, &mut labels, &mut out, lattice, group, constraints, &completes, cap)?;
    Ok(out)
}

/// A gauge orbit of labelings: its least member and its size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GaugeOrbit {
    pub representative: Vec<usize>,
    pub size: usize,
}

/// Split a gauge-invariant set of labelings into orbits of `G^V`.
pub fn gauge_orbits(lattice: &Lattice2, group: &FiniteGroup, labelings: &[Vec<usize>]) -> Vec<GaugeOrbit> {
    let index: HashMap<&Vec<usize>, usize> = labelings.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let mut orbit_of = vec![usize::MAX; labelings.len()];
    let mut orbits = Vec::new();
    for start in 0..labelings.len() {
        if orbit_of[start] != usize::MAX {
            continue;
        }
        let id = orbits.len();
        orbit_of[start] = id;
        let mut queue = VecDeque::from([start]);
        let mut members = vec![start];
        while let Some(i) = queue.pop_front() {
            let hol = &labelings[i];
            for v in 0..lattice.num_vertices() {
                for g in 0..group.order() {
                    let mut next = hol.clone();
                    for e in 0..lattice.num_edges() {
                        if lattice.head(e) == v {
                            next[e] = group.mul(g, next[e]);
                        }
                        if lattice.tail(e) == v {
                            next[e] = group.mul(next[e], group.inv(g));
                        }
                    }
                    if let Some(&j) = index.get(&next) {
                        if orbit_of[j] == usize::MAX {
                            orbit_of[j] = id;
                            members.push(j);
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        let representative = members.iter().map(|&m| &labelings[m]).min().unwrap().clone();
        orbits.push(GaugeOrbit {
            representative,
            size: members.len(),
        });
    }
    orbits
}

/// Nonabelian Ising values per gauge orbit of backgrounds satisfying the
/// disorder constraints (classes of the inserted elements).
#[derive(Clone, Debug, Serialize)]
pub struct OrbitVector {
    pub orbits: Vec<GaugeOrbit>,
    pub values: Vec<f64>,
}

pub fn partition_vector_nonabelian(
    lattice: &Lattice2,
    group: &FiniteGroup,
    theta: &WeightFunction,
    ins: &Insertions,
    opts: &SumOptions,
) -> Result<OrbitVector> {
    if !ins.order.is_empty() {
        return Err(Error::UseTuraevViroBackend);
    }
    ins.validate(lattice, group.order())?;
    let mut constraints = vec![FaceConstraint::Identity; lattice.num_faces()];
    for d in &ins.disorder {
        constraints[d.face] = FaceConstraint::Class(group.class_of(d.element));
    }
    let labelings = flat_labelings(lattice, group, &constraints, DEFAULT_LABELING_CAP)?;
    let orbits = gauge_orbits(lattice, group, &labelings);
    let mut values = Vec::with_capacity(orbits.len());
    for orbit in &orbits {
        let background = FlatBackground {
            hol: orbit.representative.clone(),
        };
        let mut local = ins.clone();
        for d in local.disorder.iter_mut() {
            d.element = face_holonomy(lattice, group, &background.hol, d.face);
        }
        values.push(spin_partition(lattice, group, theta, &background, &local, opts)?.re);
    }
    Ok(OrbitVector { orbits, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{is_admissible, ADMISSIBILITY_TOL};
    use crate::surface::{generate_lattice, LatticeKind};
    use proptest::prelude::*;

    fn torus(m: usize, n: usize) -> Lattice2 {
        generate_lattice(LatticeKind::Torus { m, n }).unwrap()
    }

    fn brute() -> SumOptions {
        SumOptions {
            method: SumMethod::BruteForce,
            ..SumOptions::default()
        }
    }

    fn elim() -> SumOptions {
        SumOptions {
            method: SumMethod::Elimination,
            ..SumOptions::default()
        }
    }

    /// Independent enumerator: explicit nested loops over spins and edges.
    fn oracle_mu2(lattice: &Lattice2, a: f64) -> f64 {
        let nv = lattice.num_vertices();
        let mut total = 0.0;
        for mask in 0u32..(1 << nv) {
            let spin = |v: usize| if mask >> v & 1 == 1 { -1i32 } else { 1 };
            let mut w = 1.0;
            for &[t, h] in &lattice.edges {
                if spin(t) != spin(h) {
                    w *= a;
                }
            }
            total += w;
        }
        total
    }

    #[test]
    fn spin_partition_examples() {
        let t = torus(2, 2);
        let z2 = FiniteGroup::parse("Z2").unwrap();
        let ones = WeightFunction::new(vec![1.0, 1.0]).unwrap();
        let bg = FlatBackground::trivial(&t, &z2);
        let none = Insertions::default();
        let v = spin_partition(&t, &z2, &ones, &bg, &none, &brute()).unwrap();
        assert_eq!(v.re, 16.0);
        let s3 = FiniteGroup::parse("S3").unwrap();
        let delta = WeightFunction::indicator(6, &[0]);
        let bg3 = FlatBackground::trivial(&t, &s3);
        let v = spin_partition(&t, &s3, &delta, &bg3, &none, &brute()).unwrap();
        assert_eq!(v.re, 6.0);
        for a in [0.0, 0.3, 0.7, 1.0] {
            let theta = WeightFunction::new(vec![1.0, a]).unwrap();
            let v = spin_partition(&t, &z2, &theta, &bg, &none, &brute()).unwrap();
            assert!((v.re - oracle_mu2(&t, a)).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_vanishes_on_nontrivial_holonomy() {
        let t = torus(2, 2);
        let z2 = FiniteGroup::parse("Z2").unwrap();
        let delta = WeightFunction::indicator(2, &[0]);
        let mut bg = FlatBackground::trivial(&t, &z2);
        bg.hol[0] = 1;
        bg.hol[4] = 1;
        let v = spin_partition(&t, &z2, &delta, &bg, &Insertions::default(), &brute()).unwrap();
        assert_eq!(v.re, 0.0);
    }

    #[test]
    fn nonflat_background_rejected_and_order_needs_abelian() {
        let t = torus(2, 2);
        let s3 = FiniteGroup::parse("S3").unwrap();
        let theta = WeightFunction::new(vec![1.0; 6]).unwrap();
        let mut bg = FlatBackground::trivial(&t, &s3);
        bg.hol[0] = 1;
        assert!(spin_partition(&t, &s3, &theta, &bg, &Insertions::default(), &brute()).is_err());
        let ins = Insertions {
            order: vec![OrderInsertion {
                vertex: 0,
                character: 1,
            }],
            disorder: vec![],
        };
        let bg = FlatBackground::trivial(&t, &s3);
        assert_eq!(
            spin_partition(&t, &s3, &theta, &bg, &ins, &brute()),
            Err(Error::UseTuraevViroBackend)
        );
    }

    #[test]
    fn elimination_matches_brute_force() {
        let t = torus(3, 3);
        let z3 = AbelianGroup::cyclic(3);
        let theta = WeightFunction::new(vec![1.0, 0.35, 0.35]).unwrap();
        let ins = Insertions {
            order: vec![
                OrderInsertion {
                    vertex: 0,
                    character: 1,
                },
                OrderInsertion {
                    vertex: 4,
                    character: 2,
                },
            ],
            disorder: vec![
                DisorderInsertion { face: 1, element: 1 },
                DisorderInsertion { face: 7, element: 2 },
            ],
        };
        let a = partition_vector(&t, &z3, &theta, &ins, &brute()).unwrap();
        let b = partition_vector(&t, &z3, &theta, &ins, &elim()).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).norm() < 1e-9 * x.norm().max(1.0));
        }
    }

    #[test]
    fn partition_vector_examples() {
        let t = torus(2, 2);
        let z2 = AbelianGroup::cyclic(2);
        let f2 = z2.to_finite();
        let theta = WeightFunction::new(vec![1.0, 0.4]).unwrap();
        let none = Insertions::default();
        let v = partition_vector(&t, &z2, &theta, &none, &brute()).unwrap();
        let bg = FlatBackground::trivial(&t, &f2);
        let direct = spin_partition(&t, &f2, &theta, &bg, &none, &brute()).unwrap();
        assert!((v.values[0] - direct).norm() < 1e-12);
        let flat = WeightFunction::new(vec![1.0, 1.0]).unwrap();
        let c = partition_vector(&t, &z2, &flat, &none, &brute()).unwrap();
        assert!(c.values.iter().all(|x| (x - c.values[0]).norm() < 1e-12));
    }

    #[test]
    fn partition_vector_matches_per_class_enumeration() {
        let t = torus(3, 3);
        let z3 = AbelianGroup::cyclic(3);
        let f3 = z3.to_finite();
        let theta = WeightFunction::new(vec![1.0, 0.45, 0.45]).unwrap();
        assert!(is_admissible(&theta, &f3, ADMISSIBILITY_TOL).unwrap().admissible);
        let v = partition_vector(&t, &z3, &theta, &Insertions::default(), &brute()).unwrap();
        for (z, value) in v.classes.iter().zip(&v.values) {
            // Direct sum of Θ(z + d⁰s) over all 3⁹ spin assignments.
            let mut total = 0.0;
            for idx in 0..3usize.pow(9) {
                let s: Vec<usize> = (0..9).map(|k| idx / 3usize.pow(k) % 3).collect();
                let mut w = 1.0;
                for (e, &[tail, head]) in t.edges.iter().enumerate() {
                    w *= theta.values[(z[e] + s[head] + 3 - s[tail]) % 3];
                }
                total += w;
            }
            assert!((value.re - total).abs() < 1e-9 * total);
            assert!(value.im.abs() < 1e-12);
        }
    }

    #[test]
    fn selection_rule_gives_exact_zeros() {
        let t = torus(3, 3);
        let z3 = AbelianGroup::cyclic(3);
        let theta = WeightFunction::new(vec![1.0, 0.5, 0.5]).unwrap();
        let ins = Insertions {
            order: vec![OrderInsertion {
                vertex: 2,
                character: 1,
            }],
            disorder: vec![],
        };
        let v = partition_vector(&t, &z3, &theta, &ins, &brute()).unwrap();
        assert!(v.selection_rule_zero);
        assert!(v.values.iter().all(|x| x.norm() == 0.0));
        // The unforced sum also vanishes.
        let f3 = z3.to_finite();
        let raw = spin_partition(&t, &f3, &theta, &FlatBackground::trivial(&t, &f3), &ins, &brute()).unwrap();
        assert!(raw.norm() < 1e-12);
    }

    #[test]
    fn spin_partition_conjugates_partition_vector_with_orders() {
        let t = torus(3, 3);
        let z3 = AbelianGroup::cyclic(3);
        let f3 = z3.to_finite();
        let theta = WeightFunction::new(vec![1.0, 0.3, 0.3]).unwrap();
        let ins = Insertions {
            order: vec![
                OrderInsertion {
                    vertex: 0,
                    character: 1,
                },
                OrderInsertion {
                    vertex: 5,
                    character: 2,
                },
            ],
            disorder: vec![],
        };
        let v = partition_vector(&t, &z3, &theta, &ins, &brute()).unwrap();
        for (z, value) in v.classes.iter().zip(&v.values) {
            let bg = FlatBackground { hol: z.clone() };
            let s = spin_partition(&t, &f3, &theta, &bg, &ins, &brute()).unwrap();
            assert!((s - value.conj()).norm() < 1e-9);
        }
    }

    #[test]
    fn kw_examples() {
        let z2 = AbelianGroup::cyclic(2);
        let theta = WeightFunction::new(vec![1.0, 0.4]).unwrap();
        for (m, n) in [(3, 3), (3, 4)] {
            let r = kw_dual_check(
                &torus(m, n),
                &z2,
                &theta,
                &Insertions::default(),
                &SumOptions::default(),
            )
            .unwrap();
            assert_eq!(r.factor, 1.0);
            assert!(r.max_error <= 1e-8, "{}", r.max_error);
        }
        let g2 = generate_lattice(LatticeKind::Genus(2)).unwrap();
        let r = kw_dual_check(&g2, &z2, &theta, &Insertions::default(), &SumOptions::default()).unwrap();
        assert!((r.factor - 2f64.powf((6.0 - 16.0) / 2.0)).abs() < 1e-15);
        assert!(r.max_relative_error <= 1e-10);
        let normalized = SumOptions {
            normalize_vertices: true,
            ..SumOptions::default()
        };
        let r = kw_dual_check(&g2, &z2, &theta, &Insertions::default(), &normalized).unwrap();
        assert_eq!(r.factor, 1.0);
        assert!(r.max_relative_error <= 1e-10);
    }

    #[test]
    fn kw_with_order_and_disorder_pairs() {
        let z3 = AbelianGroup::cyclic(3);
        let theta = WeightFunction::new(vec![1.0, 0.3, 0.3]).unwrap();
        let ins = Insertions {
            order: vec![
                OrderInsertion {
                    vertex: 0,
                    character: 1,
                },
                OrderInsertion {
                    vertex: 4,
                    character: 2,
                },
            ],
            disorder: vec![
                DisorderInsertion { face: 2, element: 1 },
                DisorderInsertion { face: 6, element: 2 },
            ],
        };
        let r = kw_dual_check(&torus(3, 3), &z3, &theta, &ins, &brute()).unwrap();
        assert!(r.max_error <= 1e-8, "{}", r.max_error);
    }

    #[test]
    fn base_point_independence() {
        let t = torus(3, 3);
        let z2 = AbelianGroup::cyclic(2);
        let theta = WeightFunction::new(vec![1.0, 0.6]).unwrap();
        let ins = Insertions {
            order: vec![],
            disorder: vec![
                DisorderInsertion { face: 0, element: 1 },
                DisorderInsertion { face: 4, element: 1 },
            ],
        };
        let complex = coboundaries(&t, &z2);
        let h = cohomology(&complex).unwrap();
        let v = partition_vector_with(&t, &z2, &theta, &ins, &brute(), &complex, &h, None).unwrap();
        let shift: Vec<usize> = complex.d0_apply(&[1, 0, 0, 1, 1, 0, 0, 0, 1]);
        let moved: Vec<usize> = v.base.iter().zip(&shift).map(|(&a, &b)| z2.add(a, b)).collect();
        let w = partition_vector_with(&t, &z2, &theta, &ins, &brute(), &complex, &h, Some(moved)).unwrap();
        for (a, b) in v.values.iter().zip(&w.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn transfer_examples() {
        let z2 = FiniteGroup::parse("Z2").unwrap();
        for n in 2..=6 {
            let delta = WeightFunction::indicator(2, &[0]);
            let t = transfer_matrix(n, &z2, &delta, 0, DEFAULT_TRANSFER_CAP).unwrap();
            assert_eq!(t.top_multiplicity, 2);
            assert!(t.idempotence_residual < 1e-12);
            let tw = transfer_matrix(n, &z2, &delta, 1, DEFAULT_TRANSFER_CAP).unwrap();
            assert!(tw.matrix.iter().all(|&x| x == 0.0));
            let ones = WeightFunction::new(vec![1.0, 1.0]).unwrap();
            for h in [0, 1] {
                let t = transfer_matrix(n, &z2, &ones, h, DEFAULT_TRANSFER_CAP).unwrap();
                assert_eq!(t.rank, 1);
                assert!(t.idempotence_residual <= 1e-9 * t.idempotence_constant);
            }
        }
        let big = transfer_matrix(13, &z2, &WeightFunction::indicator(2, &[0]), 0, DEFAULT_TRANSFER_CAP);
        assert!(matches!(big, Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn subgroup_transfer_is_projective() {
        let z4 = FiniteGroup::parse("Z4").unwrap();
        let theta = WeightFunction::indicator(4, &[0, 2]);
        for h in 0..4 {
            let t = transfer_matrix(3, &z4, &theta, h, DEFAULT_TRANSFER_CAP).unwrap();
            assert!(t.idempotence_residual <= 1e-9 * t.idempotence_constant.max(1.0));
        }
    }

    #[test]
    fn flat_orbits_on_the_torus() {
        let t = torus(2, 2);
        let s3 = FiniteGroup::parse("S3").unwrap();
        let labelings = flat_labelings(&t, &s3, &[FaceConstraint::Identity; 4], DEFAULT_LABELING_CAP).unwrap();
        assert_eq!(labelings.len(), 18 * 6usize.pow(3));
        let orbits = gauge_orbits(&t, &s3, &labelings);
        assert_eq!(orbits.len(), 8);
        // Oracle: commuting pairs up to simultaneous conjugation.
        let mut seen = std::collections::BTreeSet::new();
        for a in 0..6 {
            for b in 0..6 {
                if s3.mul(a, b) == s3.mul(b, a) {
                    let orbit: std::collections::BTreeSet<(usize, usize)> =
                        (0..6).map(|g| (s3.conjugate(a, g), s3.conjugate(b, g))).collect();
                    seen.insert(orbit.into_iter().collect::<Vec<_>>());
                }
            }
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn nonabelian_orbit_vector() {
        let t = torus(2, 2);
        let s3 = FiniteGroup::parse("S3").unwrap();
        let ones = WeightFunction::new(vec![1.0; 6]).unwrap();
        let v = partition_vector_nonabelian(&t, &s3, &ones, &Insertions::default(), &brute()).unwrap();
        assert_eq!(v.values.len(), 8);
        assert!(v.values.iter().all(|&x| x == 1296.0));
    }

    proptest! {
        #[test]
        fn orientation_independence(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let t = torus(2, 3);
            let z3 = AbelianGroup::cyclic(3);
            let theta = WeightFunction::new(vec![1.0, a, a]).unwrap();
            let ins = Insertions {
                order: vec![OrderInsertion { vertex: 1, character: 1 }, OrderInsertion { vertex: 3, character: 2 }],
                disorder: vec![],
            };
            let v = partition_vector(&t, &z3, &theta, &ins, &brute()).unwrap();
            let r = t.with_reversed_edges();
            let w = partition_vector(&r, &z3, &theta, &ins, &brute()).unwrap();
            let mut x: Vec<f64> = v.values.iter().map(|c| c.re).collect();
            let mut y: Vec<f64> = w.values.iter().map(|c| c.re).collect();
            x.sort_by(|p, q| p.partial_cmp(q).unwrap());
            y.sort_by(|p, q| p.partial_cmp(q).unwrap());
            for (p, q) in x.iter().zip(&y) {
                prop_assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0));
            }
            let _ = b;
        }

        #[test]
        fn gauge_invariance(t_seed in proptest::collection::vec(0usize..6, 4), which in 0usize..8) {
            let t = torus(2, 2);
            let s3 = FiniteGroup::parse("S3").unwrap();
            let theta = WeightFunction::new(vec![1.0, 0.3, 0.3, 0.2, 0.2, 0.3]).unwrap();
            let theta = WeightFunction::new((0..6).map(|g| theta.values[s3.class_of(g)]).collect()).unwrap();
            let labelings = flat_labelings(&t, &s3, &[FaceConstraint::Identity; 4], DEFAULT_LABELING_CAP).unwrap();
            let bg = FlatBackground { hol: labelings[which * 97 % labelings.len()].clone() };
            let moved = bg.gauge_transform(&t, &s3, &t_seed);
            let none = Insertions::default();
            let a = spin_partition(&t, &s3, &theta, &bg, &none, &brute()).unwrap();
            let b = spin_partition(&t, &s3, &theta, &moved, &none, &brute()).unwrap();
            prop_assert!((a - b).norm() <= 1e-9);
        }

        #[test]
        fn chunked_sums_are_deterministic(a in 0.0f64..1.0) {
            let t = torus(3, 3);
            let z2 = AbelianGroup::cyclic(2);
            let theta = WeightFunction::new(vec![1.0, a]).unwrap();
            let v = partition_vector(&t, &z2, &theta, &Insertions::default(), &brute()).unwrap();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            let w = pool.install(|| partition_vector(&t, &z2, &theta, &Insertions::default(), &brute())).unwrap();
            prop_assert_eq!(
                v.values.iter().map(|c| c.re.to_bits()).collect::<Vec<_>>(),
                w.values.iter().map(|c| c.re.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
