//! Finite path integrals: bundle counts, loop operators on `S¹ × Y`,
//! handlebody pairings, Eilenberg-MacLane theories and their duals.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{AbelianGroup, FiniteGroup};
use crate::harmonic::WeightFunction;
use crate::homology::{simplicial_cohomology, SimplicialComplex};
use crate::ising::{
    face_holonomy, flat_labelings, gauge_orbits, spin_partition, FaceConstraint, FlatBackground, Insertions,
    SumOptions, DEFAULT_LABELING_CAP,
};
use crate::surface::Lattice2;

/// Default cap on the hom-set search space `#G^k`.
pub const DEFAULT_HOM_CAP: u128 = 1 << 24;

/// Exact rational results.
pub type Rational = Ratio<i128>;

/// A finitely presented group; letter `±(i+1)` is generator `i` or its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPresentation {
    pub generators: usize,
    pub relators: Vec<Vec<i32>>,
}

impl GroupPresentation {
    pub fn new(generators: usize, relators: Vec<Vec<i32>>) -> Result<Self> {
        for word in &relators {
            for &letter in word {
                if letter == 0 || letter.unsigned_abs() as usize > generators {
                    return Err(Error::InvalidInput(format!(
                        "relator letter {letter} is not a generator"
                    )));
                }
            }
        }
        Ok(Self { generators, relators })
    }

    /// The trivial group, e.g. `π₁(S³)`.
    pub fn trivial() -> Self {
        Self {
            generators: 0,
            relators: vec![],
        }
    }

    /// `Z^k`, the fundamental group of the `k`-torus.
    pub fn free_abelian(k: usize) -> Self {
        let mut relators = Vec::new();
        for i in 0..k as i32 {
            for j in i + 1..k as i32 {
                relators.push(vec![i + 1, j + 1, -(i + 1), -(j + 1)]);
            }
        }
        Self {
            generators: k,
            relators,
        }
    }

    /// The closed orientable surface of genus `g`.
    pub fn surface(g: usize) -> Self {
        let word = (0..g as i32)
            .flat_map(|i| {
                let (a, b) = (2 * i + 1, 2 * i + 2);
                [a, b, -a, -b]
            })
            .collect();
        Self {
            generators: 2 * g,
            relators: if g == 0 { vec![] } else { vec![word] },
        }
    }

    /// `Z/p`, the fundamental group of a lens space.
    pub fn cyclic(p: usize) -> Self {
        Self {
            generators: 1,
            relators: vec![vec![1; p]],
        }
    }

    fn evaluate(&self, group: &FiniteGroup, images: &[usize], word: &[i32]) -> usize {
        word.iter().fold(group.identity(), |acc, &letter| {
            let g = images[letter.unsigned_abs() as usize - 1];
            group.mul(acc, if letter > 0 { g } else { group.inv(g) })
        })
    }
}

/// `#Hom(π, G)` by enumerating generator images.
pub fn hom_count(p: &GroupPresentation, group: &FiniteGroup, cap: u128) -> Result<u128> {
    let n = group.order();
    let total = (0..p.generators).try_fold(1u128, |acc, _| acc.checked_mul(n as u128));
    let total = match total {
        Some(t) if t <= cap => t,
        other => {
            return Err(Error::cap(
                "hom search space",
                other.map_or(f64::INFINITY, |t| t as f64),
                cap as f64,
            ))
        }
    };
    Ok((0..total)
        .into_par_iter()
        .filter(|&index| {
            let mut images = vec![0usize; p.generators];
            let mut x = index;
            for slot in images.iter_mut().rev() {
                *slot = (x % n as u128) as usize;
                x /= n as u128;
            }
            p.relators
                .iter()
                .all(|r| p.evaluate(group, &images, r) == group.identity())
        })
        .count() as u128)
}

/// Groupoid cardinality `#Hom(π, G) / #G` of bundles over a connected space.
pub fn count_bundles(p: &GroupPresentation, group: &FiniteGroup, cap: u128) -> Result<Rational> {
    let homs = hom_count(p, group, cap)?;
    Ok(Rational::new(homs as i128, group.order() as i128))
}

/// Number of gauge orbits of flat labelings of a latticed surface.
pub fn flat_orbit_count(lattice: &Lattice2, group: &FiniteGroup) -> Result<usize> {
    let labelings = flat_labelings(
        lattice,
        group,
        &vec![FaceConstraint::Identity; lattice.num_faces()],
        DEFAULT_LABELING_CAP,
    )?;
    Ok(gauge_orbits(lattice, group, &labelings).len())
}

/// A loop operator running along the circle factor of `S¹ × Y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LoopKind {
    /// Character of an abelian group, given as an element of `A∨`.
    Wilson { character: usize },
    /// Holonomy around the loop, which pierces `face`, lies in the class of `element`.
    THooft { face: usize, element: usize },
}

/// Bundles on `S¹ × Y` are pairs `(φ, c)` of a flat labeling of `Y` and a
/// gauge automorphism `c` of it; the value is `Σ_{(φ,c)} w(φ, c) / #G^V`
/// with `w = χ(c(v₀))` for Wilson loops and `w = 1` otherwise.
pub fn loop_operator(lattice: &Lattice2, group: &FiniteGroup, kind: LoopKind) -> Result<f64> {
    let mut constraints = vec![FaceConstraint::Identity; lattice.num_faces()];
    let character = match kind {
        LoopKind::Wilson { character } => {
            let a = group.as_abelian().map_err(|_| Error::UseTuraevViroBackend)?;
            if character >= a.order() {
                return Err(Error::InvalidInput("character outside the dual group".into()));
            }
            Some((a, character))
        }
        LoopKind::THooft { face, element } => {
            if face >= lattice.num_faces() || element >= group.order() {
                return Err(Error::InvalidInput("'t Hooft loop data out of range".into()));
            }
            constraints[face] = FaceConstraint::Class(group.class_of(element));
            None
        }
    };
    let labelings = flat_labelings(lattice, group, &constraints, DEFAULT_LABELING_CAP)?;
    let mut total = 0.0;
    for hol in &labelings {
        for c0 in 0..group.order() {
            if let Some(c) = propagate_twist(lattice, group, hol, c0) {
                debug_assert_eq!(c[0], c0);
                total += match character {
                    Some((a, chi)) => a.pairing(c0, chi).re,
                    None => 1.0,
                };
            }
        }
    }
    Ok(total / (group.order() as f64).powi(lattice.num_vertices() as i32))
}

/// The gauge automorphism with `c(v₀) = c0`, if it exists:
/// `c(head) = hol(e) c(tail) hol(e)⁻¹` on every edge.
fn propagate_twist(lattice: &Lattice2, group: &FiniteGroup, hol: &[usize], c0: usize) -> Option<Vec<usize>> {
    let nv = lattice.num_vertices();
    let mut c = vec![usize::MAX; nv];
    c[0] = c0;
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        for e in lattice.incident_edges(v) {
            let (t, h) = (lattice.tail(e), lattice.head(e));
            let (w, value) = if t == v {
                (h, group.conjugate(c[v], hol[e]))
            } else {
                (t, group.conjugate(c[v], group.inv(hol[e])))
            };
            if c[w] == usize::MAX {
                c[w] = value;
                stack.push(w);
            } else if c[w] != value {
                return None;
            }
        }
    }
    Some(c)
}

/// A latticed surface bounding a handlebody, with meridian walks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandlebodyData {
    pub lattice: Lattice2,
    /// Closed edge walks `(edge, dir)` that bound discs in the filling.
    pub meridians: Vec<Vec<(usize, i8)>>,
}

impl HandlebodyData {
    pub fn validate(&self) -> Result<()> {
        let l = &self.lattice;
        for (m, walk) in self.meridians.iter().enumerate() {
            if walk.is_empty() {
                return Err(Error::InvalidInput(format!("meridian {m} is empty")));
            }
            let ends = |&(e, dir): &(usize, i8)| -> Result<(usize, usize)> {
                if e >= l.num_edges() || (dir != 1 && dir != -1) {
                    return Err(Error::InvalidInput(format!("meridian {m} has a bad step")));
                }
                Ok(if dir > 0 {
                    (l.tail(e), l.head(e))
                } else {
                    (l.head(e), l.tail(e))
                })
            };
            for k in 0..walk.len() {
                let (_, end) = ends(&walk[k])?;
                let (start, _) = ends(&walk[(k + 1) % walk.len()])?;
                if end != start {
                    return Err(Error::InvalidInput(format!("meridian {m} is not a closed walk")));
                }
            }
        }
        Ok(())
    }

    fn holonomy(&self, group: &FiniteGroup, hol: &[usize], walk: &[(usize, i8)]) -> usize {
        walk.iter().fold(group.identity(), |acc, &(e, dir)| {
            group.mul(if dir > 0 { hol[e] } else { group.inv(hol[e]) }, acc)
        })
    }
}

/// `Σ_φ I(φ) / #G^V` over flat labelings of the boundary (with the disorder
/// constraints) whose holonomy around every meridian is trivial, `I` being
/// the Ising sum with the given insertions.
pub fn pair_with_handlebody(
    data: &HandlebodyData,
    group: &FiniteGroup,
    theta: &WeightFunction,
    ins: &Insertions,
    opts: &SumOptions,
) -> Result<f64> {
    data.validate()?;
    let lattice = &data.lattice;
    ins.validate(lattice, group.order())?;
    let mut constraints = vec![FaceConstraint::Identity; lattice.num_faces()];
    for d in &ins.disorder {
        constraints[d.face] = FaceConstraint::Class(group.class_of(d.element));
    }
    let labelings = flat_labelings(lattice, group, &constraints, DEFAULT_LABELING_CAP)?;
    let mut total = 0.0;
    for hol in labelings {
        if data
            .meridians
            .iter()
            .any(|m| data.holonomy(group, &hol, m) != group.identity())
        {
            continue;
        }
        let mut local = ins.clone();
        for d in local.disorder.iter_mut() {
            d.element = face_holonomy(lattice, group, &hol, d.face);
        }
        let value = spin_partition(lattice, group, theta, &FlatBackground { hol }, &local, opts)?;
        total += value.re;
    }
    Ok(total / (group.order() as f64).powi(lattice.num_vertices() as i32))
}

/// Degree `r`, coefficients `A`, and spacetime dimension `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HigherTheorySpec {
    pub r: usize,
    pub group: AbelianGroup,
    pub n: usize,
}

impl HigherTheorySpec {
    pub fn new(r: usize, group: AbelianGroup, n: usize) -> Result<Self> {
        if r > n {
            return Err(Error::InvalidInput(format!("degree {r} exceeds dimension {n}")));
        }
        Ok(Self { r, group, n })
    }
}

/// `∏_{i=0}^{r} (#H^{r-i}(X; A))^{(-1)^i}`.
pub fn higher_partition(x: &SimplicialComplex, spec: &HigherTheorySpec, cell_cap: usize) -> Result<Rational> {
    if spec.n != x.dim {
        return Err(Error::InvalidInput(format!(
            "theory dimension {} does not match complex dimension {}",
            spec.n, x.dim
        )));
    }
    let orders = simplicial_cohomology(x, &spec.group, cell_cap)?;
    alternating_product(&orders, spec.r)
}

fn alternating_product(orders: &[u128], r: usize) -> Result<Rational> {
    let mut value = Rational::from_integer(1);
    for i in 0..=r {
        let h = i128::try_from(orders[r - i]).map_err(|_| Error::Overflow("higher partition"))?;
        let factor = Rational::from_integer(h);
        value = if i % 2 == 0 { value * factor } else { value / factor };
    }
    Ok(value)
}

/// Result of [`em_duality_check`].
#[derive(Clone, Debug, Serialize)]
pub struct EmDualityReport {
    pub dimension: usize,
    pub r: usize,
    pub dual_r: usize,
    pub z: Rational,
    pub z_dual: Rational,
    pub ratio: Rational,
    pub euler_characteristic: i64,
    /// `ε` in `ratio = #A^{ε χ(X)}`.
    pub epsilon: i64,
    pub expected: Rational,
    pub holds: bool,
}

/// Compare the degree-`r` theory with its dual of degree `n - 1 - r`.
///
/// The ratio is `#A^{ε χ(X)}` with `ε = (-1)^r`; for odd `n` the Euler
/// characteristic of a closed manifold vanishes.
pub fn em_duality_check(
    x: &SimplicialComplex,
    group: &AbelianGroup,
    r: usize,
    cell_cap: usize,
) -> Result<EmDualityReport> {
    let n = x.dim;
    if r + 1 > n {
        return Err(Error::InvalidInput(format!("dual degree {n} - 1 - {r} is negative")));
    }
    let dual_r = n - 1 - r;
    let orders = simplicial_cohomology(x, group, cell_cap)?;
    let dual_orders = simplicial_cohomology(x, &group.dual(), cell_cap)?;
    let z = alternating_product(&orders, r)?;
    let z_dual = alternating_product(&dual_orders, dual_r)?;
    let cells = x.cells(cell_cap)?;
    let euler: i64 = cells
        .iter()
        .enumerate()
        .map(|(i, c)| if i % 2 == 0 { c.len() as i64 } else { -(c.len() as i64) })
        .sum();
    let epsilon = if r.is_multiple_of(2) { 1 } else { -1 };
    let exponent = epsilon * euler;
    let a = Rational::from_integer(group.order() as i128);
    let expected = if exponent >= 0 {
        num_traits_pow(a, exponent as u32)
    } else {
        num_traits_pow(a, (-exponent) as u32).recip()
    };
    let ratio = z / z_dual;
    Ok(EmDualityReport {
        dimension: n,
        r,
        dual_r,
        z,
        z_dual,
        ratio,
        euler_characteristic: euler,
        epsilon,
        expected,
        holds: ratio == expected,
    })
}

fn num_traits_pow(base: Rational, exp: u32) -> Rational {
    (0..exp).fold(Rational::from_integer(1), |acc, _| acc * base)
}
