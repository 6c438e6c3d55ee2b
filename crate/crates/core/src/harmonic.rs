//! Fourier transforms of weight functions and admissibility tests.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{AbelianGroup, FiniteGroup};

/// Default relative tolerance for admissibility decisions.
pub const ADMISSIBILITY_TOL: f64 = 1e-9;

/// Real weight `θ(g)` per group element, in canonical element order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightFunction {
    pub values: Vec<f64>,
}

impl WeightFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("weight values must be finite".into()));
        }
        Ok(Self { values })
    }

    /// Characteristic function of a subset of the group.
    pub fn indicator(order: usize, members: &[usize]) -> Self {
        let mut values = vec![0.0; order];
        for &m in members {
            values[m] = 1.0;
        }
        Self { values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// First element `g` with `θ(g⁻¹) ≠ θ(g)` beyond the tolerance.
    pub fn evenness_defect(&self, group: &FiniteGroup, tol: f64) -> Option<usize> {
        let scale = self.max_abs().max(1.0);
        (0..group.order()).find(|&g| (self.values[g] - self.values[group.inv(g)]).abs() > tol * scale)
    }

    pub(crate) fn check_len(&self, order: usize) -> Result<()> {
        if self.values.len() != order {
            return Err(Error::InvalidInput(format!(
                "weight has {} values, group has {} elements",
                self.values.len(),
                order
            )));
        }
        Ok(())
    }
}

/// Abelian Fourier transform `f∨(b) = #A^{-1/2} Σ_a conj(χ(a,b)) f(a)`.
pub fn fourier_abelian(values: &[C64], group: &AbelianGroup) -> Result<Vec<C64>> {
    let n = group.order();
    if values.len() != n {
        return Err(Error::InvalidInput("weight length does not match group".into()));
    }
    let norm = 1.0 / (n as f64).sqrt();
    Ok((0..n)
        .map(|b| (0..n).map(|a| group.pairing(a, b).conj() * values[a]).sum::<C64>() * norm)
        .collect())
}

/// Inverse of [`fourier_abelian`].
pub fn inverse_fourier_abelian(values: &[C64], group: &AbelianGroup) -> Result<Vec<C64>> {
    let n = group.order();
    if values.len() != n {
        return Err(Error::InvalidInput("weight length does not match group".into()));
    }
    let norm = 1.0 / (n as f64).sqrt();
    Ok((0..n)
        .map(|a| (0..n).map(|b| group.pairing(a, b) * values[b]).sum::<C64>() * norm)
        .collect())
}

/// Transform of a real even weight; the result is real.
pub fn dual_weight(theta: &WeightFunction, group: &AbelianGroup) -> Result<WeightFunction> {
    let finite = group.to_finite();
    theta.check_len(group.order())?;
    if let Some(g) = theta.evenness_defect(&finite, ADMISSIBILITY_TOL) {
        return Err(Error::NotEven(format!("θ(-{g}) ≠ θ({g})")));
    }
    let complex: Vec<C64> = theta.values.iter().map(|&v| C64::new(v, 0.0)).collect();
    let values = fourier_abelian(&complex, group)?.into_iter().map(|c| c.re).collect();
    Ok(WeightFunction { values })
}

/// Operator-valued transform, one `d×d` block per irreducible representation.
#[derive(Clone, Debug)]
pub struct OperatorTransform {
    pub blocks: Vec<DMatrix<C64>>,
}

/// `θ∨(ρ) = #G^{-1/2} Σ_g θ(g) conj(ρ(g))` for every irreducible `ρ`.
pub fn fourier_nonabelian(theta: &WeightFunction, group: &FiniteGroup) -> Result<OperatorTransform> {
    theta.check_len(group.order())?;
    let norm = 1.0 / (group.order() as f64).sqrt();
    let blocks = group
        .irreps()?
        .iter()
        .map(|rho| {
            let mut m = DMatrix::<C64>::zeros(rho.dim, rho.dim);
            for (g, mat) in rho.matrices.iter().enumerate() {
                if theta.values[g] != 0.0 {
                    m += mat.map(|z| z.conj()) * C64::new(theta.values[g] * norm, 0.0);
                }
            }
            m
        })
        .collect();
    Ok(OperatorTransform { blocks })
}

/// Reason a weight failed the admissibility test.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum Violation {
    Negative { element: usize, value: f64 },
    NotEven { element: usize },
    DualNegative { dual_element: usize, value: f64 },
    OperatorNotPositive { irrep: usize, min_eigenvalue: f64 },
}

/// Outcome of [`is_admissible`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub violation: Option<Violation>,
}

impl Admissibility {
    fn fail(v: Violation) -> Self {
        Self {
            admissible: false,
            violation: Some(v),
        }
    }
}

/// Tests `θ ≥ 0`, `θ` even and positivity of the transform.
///
/// All thresholds are `-tol · max|θ|`, so points on the boundary of the
/// admissible cone are accepted.
pub fn is_admissible(theta: &WeightFunction, group: &FiniteGroup, tol: f64) -> Result<Admissibility> {
    theta.check_len(group.order())?;
    let threshold = -tol * theta.max_abs().max(f64::MIN_POSITIVE);
    if let Some((g, &v)) = theta.values.iter().enumerate().find(|(_, &v)| v < threshold) {
        return Ok(Admissibility::fail(Violation::Negative { element: g, value: v }));
    }
    if let Some(g) = theta.evenness_defect(group, tol) {
        return Ok(Admissibility::fail(Violation::NotEven { element: g }));
    }
    if let Ok(a) = group.as_abelian() {
        let dual = dual_weight(theta, a)?;
        if let Some((b, &v)) = dual.values.iter().enumerate().find(|(_, &v)| v < threshold) {
            return Ok(Admissibility::fail(Violation::DualNegative {
                dual_element: b,
                value: v,
            }));
        }
    } else {
        let transform = fourier_nonabelian(theta, group)?;
        for (i, block) in transform.blocks.iter().enumerate() {
            let hermitian = (block + block.adjoint()) * C64::new(0.5, 0.0);
            let min = hermitian
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .fold(f64::INFINITY, |m, &v| m.min(v));
            if min < threshold {
                return Ok(Admissibility::fail(Violation::OperatorNotPositive {
                    irrep: i,
                    min_eigenvalue: min,
                }));
            }
        }
    }
    Ok(Admissibility {
        admissible: true,
        violation: None,
    })
}

/// Random admissible class function `θ = Re Σ_ρ a_ρ χ_ρ`, normalized to
/// `θ(e) = 1`, drawn from a seeded generator.
///
/// The coefficients are positive and equal on dual pairs, and the trivial
/// coefficient dominates `Σ a_ρ dim ρ`, so `θ ≥ 0` and every block of the
/// transform is a nonnegative multiple of the identity.
pub fn random_admissible(group: &FiniteGroup, seed: u64) -> Result<WeightFunction> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let irreps = group.irreps()?;
    let k = irreps.len();
    let mut coeff: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    for i in 0..k {
        let conj: Vec<C64> = irreps[i].character.iter().map(|c| c.conj()).collect();
        if let Some(j) = (0..k).find(|&j| {
            irreps[j]
                .character
                .iter()
                .zip(&conj)
                .all(|(a, b)| (a - b).norm() < 1e-8)
        }) {
            if j > i {
                coeff[j] = coeff[i];
            }
        }
    }
    coeff[0] = 1.0 + (1..k).map(|i| coeff[i] * irreps[i].dim as f64).sum::<f64>();
    let raw: Vec<f64> = (0..group.order())
        .map(|g| (0..k).map(|i| coeff[i] * irreps[i].character[g].re).sum())
        .collect();
    let norm = raw[group.identity()];
    WeightFunction::new(raw.into_iter().map(|v| v / norm).collect())
}

/// Characteristic function of a subgroup (given by its elements).
pub fn subgroup_indicator(group: &FiniteGroup, subgroup: &[usize]) -> WeightFunction {
    WeightFunction::indicator(group.order(), subgroup)
}

/// All subgroups of an abelian group, each as a sorted element list.
pub fn abelian_subgroups(group: &AbelianGroup) -> Vec<Vec<usize>> {
    let n = group.order();
    let mut found: Vec<Vec<usize>> = Vec::new();
    let generate = |gens: &[usize]| {
        let mut members = vec![0usize];
        let mut frontier = vec![0usize];
        while let Some(x) = frontier.pop() {
            for &g in gens {
                let y = group.add(x, g);
                if !members.contains(&y) {
                    members.push(y);
                    frontier.push(y);
                }
            }
        }
        members.sort_unstable();
        members
    };
    for a in 0..n {
        for b in a..n {
            let s = generate(&[a, b]);
            if !found.contains(&s) {
                found.push(s);
            }
        }
    }
    found.sort();
    found
}

/// Annihilator of a subgroup inside the dual group.
pub fn annihilator(group: &AbelianGroup, subgroup: &[usize]) -> Vec<usize> {
    (0..group.order())
        .filter(|&b| subgroup.iter().all(|&a| group.pairing_turns(a, b).0 == 0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn real(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    #[test]
    fn random_weights_are_admissible() {
        for name in ["Z2", "Z3", "Z2xZ2", "Z5", "S3", "D4", "Q8"] {
            let g = FiniteGroup::parse(name).unwrap();
            for seed in 0..4 {
                let w = random_admissible(&g, seed).unwrap();
                assert!((w.values[g.identity()] - 1.0).abs() < 1e-12);
                let a = is_admissible(&w, &g, ADMISSIBILITY_TOL).unwrap();
                assert!(a.admissible, "{name} seed {seed}: {:?}", a.violation);
            }
            assert_eq!(
                random_admissible(&g, 9).unwrap().values,
                random_admissible(&g, 9).unwrap().values
            );
        }
    }

    #[test]
    fn mu2_transform_and_involution() {
        let a = AbelianGroup::cyclic(2);
        let x = 0.3;
        let t = fourier_abelian(&real(&[1.0, x]), &a).unwrap();
        let s = 2f64.sqrt();
        assert!((t[0].re - (1.0 + x) / s).abs() < 1e-15);
        assert!((t[1].re - (1.0 - x) / s).abs() < 1e-15);
        assert!((t[1].re / t[0].re - (1.0 - x) / (1.0 + x)).abs() < 1e-15);
    }

    #[test]
    fn mu5_transform_matches_closed_form() {
        let a = AbelianGroup::cyclic(5);
        let (x, b, c) = (0.7, 0.3, 0.2);
        let t = fourier_abelian(&real(&[x, b, c, c, b]), &a).unwrap();
        let p = 2.0 * (2.0 * std::f64::consts::PI / 5.0).cos();
        let q = 2.0 * (4.0 * std::f64::consts::PI / 5.0).cos();
        let s = 5f64.sqrt();
        let expected = [
            (x + 2.0 * b + 2.0 * c) / s,
            (x + p * b + q * c) / s,
            (x + q * b + p * c) / s,
            (x + q * b + p * c) / s,
            (x + p * b + q * c) / s,
        ];
        for (v, e) in t.iter().zip(expected) {
            assert!((v.re - e).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
    }

    #[test]
    fn delta_transforms_to_constant() {
        let a = AbelianGroup::new(vec![2, 3]).unwrap();
        let mut d = vec![0.0; 6];
        d[0] = 1.0;
        for v in fourier_abelian(&real(&d), &a).unwrap() {
            assert!((v.re - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn nonabelian_examples() {
        let s3 = FiniteGroup::parse("S3").unwrap();
        let n = 6f64.sqrt();
        let delta = WeightFunction::indicator(6, &[0]);
        for block in fourier_nonabelian(&delta, &s3).unwrap().blocks {
            let id = DMatrix::<C64>::identity(block.nrows(), block.nrows()) / C64::new(n, 0.0);
            assert!((block - id).norm() < 1e-12);
        }
        let ones = WeightFunction::new(vec![1.0; 6]).unwrap();
        let t = fourier_nonabelian(&ones, &s3).unwrap();
        assert!((t.blocks[0][(0, 0)].re - n).abs() < 1e-12);
        assert!(t.blocks[1].norm() < 1e-12 && t.blocks[2].norm() < 1e-12);
        let mut members = vec![0];
        members.extend(&s3.classes()[1]);
        let theta = WeightFunction::indicator(6, &members);
        let t = fourier_nonabelian(&theta, &s3).unwrap();
        let id = DMatrix::<C64>::identity(2, 2) / C64::new(n, 0.0);
        assert!((&t.blocks[2] - id).norm() < 1e-12);
    }

    #[test]
    fn admissibility_examples() {
        let z5 = FiniteGroup::parse("Z5").unwrap();
        let w = WeightFunction::new(vec![1.0, 1.2, 0.0, 0.0, 1.2]).unwrap();
        let r = is_admissible(&w, &z5, ADMISSIBILITY_TOL).unwrap();
        assert!(!r.admissible);
        match r.violation {
            Some(Violation::DualNegative { dual_element, .. }) => {
                assert!(dual_element == 2 || dual_element == 3)
            }
            other => panic!("unexpected {other:?}"),
        }
        let z4 = FiniteGroup::parse("Z4").unwrap();
        let w = WeightFunction::new(vec![2.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(is_admissible(&w, &z4, ADMISSIBILITY_TOL).unwrap().admissible);
        let odd = WeightFunction::new(vec![1.0, 0.5, 0.0, 0.2]).unwrap();
        assert!(matches!(
            is_admissible(&odd, &z4, ADMISSIBILITY_TOL).unwrap().violation,
            Some(Violation::NotEven { .. })
        ));
        let neg = WeightFunction::new(vec![1.0, -0.1, 0.0, -0.1]).unwrap();
        assert!(matches!(
            is_admissible(&neg, &z4, ADMISSIBILITY_TOL).unwrap().violation,
            Some(Violation::Negative { .. })
        ));
    }

    #[test]
    fn corrected_mu5_region_vertices_are_admissible() {
        let z5 = FiniteGroup::parse("Z5").unwrap();
        let p = 2.0 * (2.0 * std::f64::consts::PI / 5.0).cos();
        for (b, c) in [(0.0, 0.0), (1.0, 1.0), (p, 0.0), (0.0, p)] {
            let w = WeightFunction::new(vec![1.0, b, c, c, b]).unwrap();
            assert!(is_admissible(&w, &z5, ADMISSIBILITY_TOL).unwrap().admissible);
        }
        for (b, c) in [(p + 1e-3, 0.0), (0.0, p + 1e-3), (1.001, 1.001)] {
            let w = WeightFunction::new(vec![1.0, b, c, c, b]).unwrap();
            assert!(!is_admissible(&w, &z5, ADMISSIBILITY_TOL).unwrap().admissible);
        }
    }

    #[test]
    fn subgroup_indicators_map_to_annihilators() {
        for desc in ["Z2", "Z4", "Z2xZ2", "Z6"] {
            let g = FiniteGroup::parse(desc).unwrap();
            let a = g.as_abelian().unwrap();
            for h in abelian_subgroups(a) {
                let theta = subgroup_indicator(&g, &h);
                assert!(is_admissible(&theta, &g, ADMISSIBILITY_TOL).unwrap().admissible);
                let dual = dual_weight(&theta, a).unwrap();
                let ann = annihilator(a, &h);
                let scale = h.len() as f64 / (a.order() as f64).sqrt();
                for b in 0..a.order() {
                    let expected = if ann.contains(&b) { scale } else { 0.0 };
                    assert!((dual.values[b] - expected).abs() < 1e-12, "{desc} {h:?} {b}");
                }
                let max = theta.max_abs();
                let argmax: Vec<usize> = (0..a.order()).filter(|&x| theta.values[x] == max).collect();
                assert_eq!(argmax, h);
            }
        }
    }

    fn even_weight(a: &AbelianGroup, raw: &[f64]) -> Vec<f64> {
        (0..a.order()).map(|x| 0.5 * (raw[x] + raw[a.neg(x)])).collect()
    }

    proptest! {
        #[test]
        fn double_transform_is_inversion(raw in prop::collection::vec(-5.0f64..5.0, 12)) {
            let a = AbelianGroup::new(vec![2, 6]).unwrap();
            let v: Vec<C64> = raw.iter().map(|&x| C64::new(x, 0.3 * x)).collect();
            let twice = fourier_abelian(&fourier_abelian(&v, &a).unwrap(), &a).unwrap();
            for x in 0..a.order() {
                prop_assert!((twice[x] - v[a.neg(x)]).norm() < 1e-12);
            }
            let back = inverse_fourier_abelian(&fourier_abelian(&v, &a).unwrap(), &a).unwrap();
            for x in 0..a.order() {
                prop_assert!((back[x] - v[x]).norm() < 1e-12);
            }
        }

        #[test]
        fn parseval(f in prop::collection::vec(-3.0f64..3.0, 8), g in prop::collection::vec(-3.0f64..3.0, 8)) {
            let a = AbelianGroup::new(vec![2, 4]).unwrap();
            let (f, g) = (real(&f), real(&g));
            let lhs: C64 = f.iter().zip(&g).map(|(x, y)| x.conj() * y).sum();
            let (tf, tg) = (fourier_abelian(&f, &a).unwrap(), fourier_abelian(&g, &a).unwrap());
            let rhs: C64 = tf.iter().zip(&tg).map(|(x, y)| x.conj() * y).sum();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn admissible_weights_peak_at_identity(raw in prop::collection::vec(0.0f64..1.0, 6)) {
            let g = FiniteGroup::parse("Z6").unwrap();
            let a = g.as_abelian().unwrap();
            let theta = WeightFunction::new(even_weight(a, &raw)).unwrap();
            if is_admissible(&theta, &g, ADMISSIBILITY_TOL).unwrap().admissible {
                prop_assert!(theta.values[0] >= theta.max_abs() - 1e-12);
            }
        }

        #[test]
        fn even_transforms_are_self_adjoint(raw in prop::collection::vec(0.0f64..1.0, 6)) {
            let g = FiniteGroup::parse("S3").unwrap();
            let vals: Vec<f64> = (0..6).map(|x| 0.5 * (raw[x] + raw[g.inv(x)])).collect();
            let t = fourier_nonabelian(&WeightFunction::new(vals).unwrap(), &g).unwrap();
            for b in &t.blocks {
                prop_assert!((b - b.adjoint()).norm() < 1e-12);
            }
        }
    }
}
