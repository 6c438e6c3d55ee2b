//! Finite groups: products of cyclic groups, a few named nonabelian groups,
//! conjugacy classes, characters and unitary irreducible representations.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default upper bound on group orders accepted by the parser.
pub const DEFAULT_ORDER_CAP: usize = 120;

/// Number of random central elements tried before giving up on diagonalization.
const DIAGONALIZATION_ATTEMPTS: usize = 8;

/// Finite abelian group `Z/n_1 x ... x Z/n_k`.
///
/// Elements are indexed lexicographically on residue vectors, the first factor
/// being the most significant digit. The Pontrjagin dual is identified with a
/// group of the same shape through `χ(a, b) = exp(2πi Σ a_j b_j / n_j)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub struct AbelianGroup {
    factors: Vec<usize>,
}

impl AbelianGroup {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.contains(&0) {
            return Err(Error::InvalidInput("cyclic factor of order 0".into()));
        }
        Ok(Self { factors })
    }

    pub fn cyclic(n: usize) -> Self {
        Self::new(vec![n]).expect("n > 0")
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.iter().product()
    }

    /// Residue vector of the element with the given index.
    pub fn element(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, &n) in out.iter_mut().zip(&self.factors).rev() {
            *slot = index % n;
            index /= n;
        }
        out
    }

    /// Index of a residue vector; residues are reduced modulo the factors.
    pub fn index(&self, residues: &[usize]) -> usize {
        residues
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&r, &n)| acc * n + r % n)
    }

    /// Index of the element whose residues are the given signed integers.
    pub fn index_signed(&self, residues: &[i64]) -> usize {
        residues
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&r, &n)| acc * n + r.rem_euclid(n as i64) as usize)
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let (x, y) = (self.element(a), self.element(b));
        let sum: Vec<usize> = x.iter().zip(&y).map(|(p, q)| p + q).collect();
        self.index(&sum)
    }

    pub fn neg(&self, a: usize) -> usize {
        let x = self.element(a);
        let out: Vec<usize> = x.iter().zip(&self.factors).map(|(&r, &n)| (n - r) % n).collect();
        self.index(&out)
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    /// Phase of `χ(a, b)` as an exact fraction `num / den` of a full turn.
    pub fn pairing_turns(&self, a: usize, b: usize) -> (u64, u64) {
        let (x, y) = (self.element(a), self.element(b));
        let den = self.factors.iter().fold(1u64, |l, &n| lcm(l, n as u64));
        let mut num = 0u64;
        for ((&p, &q), &n) in x.iter().zip(&y).zip(&self.factors) {
            let n = n as u64;
            num = (num + (p as u64 * q as u64 % n) * (den / n)) % den;
        }
        (num, den)
    }

    /// The character pairing `χ(a, b)` between `A` and its dual.
    pub fn pairing(&self, a: usize, b: usize) -> C64 {
        let (num, den) = self.pairing_turns(a, b);
        root_of_unity(num, den)
    }

    /// The Pontrjagin dual, identified with a group of the same shape.
    pub fn dual(&self) -> AbelianGroup {
        self.clone()
    }

    pub fn descriptor(&self) -> String {
        self.factors
            .iter()
            .map(|n| format!("Z{n}"))
            .collect::<Vec<_>>()
            .join("x")
    }

    /// The same group viewed as a [`FiniteGroup`].
    pub fn to_finite(&self) -> FiniteGroup {
        let n = self.order();
        let mut table = vec![0u32; n * n];
        for a in 0..n {
            for b in 0..n {
                table[a * n + b] = self.add(a, b) as u32;
            }
        }
        let names = (0..n)
            .map(|i| {
                let r = self.element(i);
                if r.len() == 1 {
                    r[0].to_string()
                } else {
                    format!("({})", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
                }
            })
            .collect();
        FiniteGroup::from_table(self.descriptor(), table, names, Some(self.clone()))
            .expect("abelian tables are valid groups")
    }
}

/// `exp(2πi num/den)` with exact values at multiples of a quarter turn.
pub fn root_of_unity(num: u64, den: u64) -> C64 {
    let num = num % den;
    if (4 * num).is_multiple_of(den) {
        return match 4 * num / den {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
    }
    C64::from_polar(1.0, 2.0 * PI * num as f64 / den as f64)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// A unitary irreducible representation together with its character.
#[derive(Clone, Debug)]
pub struct Irrep {
    pub dim: usize,
    /// `matrices[g]` is the unitary matrix of the element with index `g`.
    pub matrices: Vec<DMatrix<C64>>,
    /// `character[g] = tr ρ(g)`.
    pub character: Vec<C64>,
}

/// A finite group given by its Cayley table.
///
/// Element `0` is always the identity. Conjugacy classes are listed in order
/// of their smallest element, each class sorted increasingly.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    name: String,
    order: usize,
    table: Vec<u32>,
    inverse: Vec<u32>,
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    abelian: Option<AbelianGroup>,
    element_names: Vec<String>,
    irreps: OnceLock<std::result::Result<Vec<Irrep>, Error>>,
}

impl FiniteGroup {
    /// Parse a descriptor `Z<n>`, `Z<n>xZ<m>...`, `S3`, `D4`, `Q8` or `A4`.
    pub fn parse(desc: &str) -> Result<Self> {
        Self::parse_with_cap(desc, DEFAULT_ORDER_CAP)
    }

    pub fn parse_with_cap(desc: &str, cap: usize) -> Result<Self> {
        let compact: String = desc.chars().filter(|c| !c.is_whitespace()).collect();
        let group = match compact.as_str() {
            "S3" => symmetric_group_s3(),
            "D4" => dihedral_d4(),
            "Q8" => quaternion_q8(),
            "A4" => alternating_a4(),
            _ => {
                let factors = parse_abelian(&compact).ok_or_else(|| Error::UnknownGroup(desc.to_string()))?;
                let order = factors
                    .iter()
                    .try_fold(1usize, |acc, &n| acc.checked_mul(n))
                    .unwrap_or(usize::MAX);
                if order > cap {
                    return Err(Error::cap("group order", order as f64, cap as f64));
                }
                return Ok(AbelianGroup::new(factors)?.to_finite());
            }
        };
        if group.order() > cap {
            return Err(Error::cap("group order", group.order() as f64, cap as f64));
        }
        Ok(group)
    }

    /// Build a group from a row-major Cayley table with identity at index 0.
    pub fn from_table(
        name: String,
        table: Vec<u32>,
        element_names: Vec<String>,
        abelian: Option<AbelianGroup>,
    ) -> Result<Self> {
        let n = element_names.len();
        if n == 0 || table.len() != n * n {
            return Err(Error::InvalidInput("Cayley table has the wrong size".into()));
        }
        if table.iter().any(|&x| x as usize >= n) {
            return Err(Error::InvalidInput("Cayley table entry out of range".into()));
        }
        for a in 0..n {
            if table[a] as usize != a || table[a * n] as usize != a {
                return Err(Error::InvalidInput("element 0 is not the identity".into()));
            }
        }
        let mut inverse = vec![u32::MAX; n];
        for a in 0..n {
            for b in 0..n {
                if table[a * n + b] == 0 {
                    inverse[a] = b as u32;
                }
            }
            if inverse[a] == u32::MAX || table[inverse[a] as usize * n + a] != 0 {
                return Err(Error::InvalidInput(format!("element {a} has no inverse")));
            }
        }
        let m = |a: usize, b: usize| table[a * n + b] as usize;
        let triples: Box<dyn Iterator<Item = (usize, usize, usize)>> = if n <= 64 {
            Box::new((0..n).flat_map(move |a| (0..n).flat_map(move |b| (0..n).map(move |c| (a, b, c)))))
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let samples: Vec<_> = (0..20_000)
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)))
                .collect();
            Box::new(samples.into_iter())
        };
        for (a, b, c) in triples {
            if m(m(a, b), c) != m(a, m(b, c)) {
                return Err(Error::InvalidInput("Cayley table is not associative".into()));
            }
        }
        let mut class_of = vec![usize::MAX; n];
        let mut classes = Vec::new();
        for g in 0..n {
            if class_of[g] != usize::MAX {
                continue;
            }
            let mut class: Vec<usize> = (0..n).map(|h| m(m(h, g), inverse[h] as usize)).collect();
            class.sort_unstable();
            class.dedup();
            for &x in &class {
                class_of[x] = classes.len();
            }
            classes.push(class);
        }
        Ok(Self {
            name,
            order: n,
            table,
            inverse,
            classes,
            class_of,
            abelian,
            element_names,
            irreps: OnceLock::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b] as usize
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a] as usize
    }

    /// Product of a sequence of elements, left to right.
    pub fn product<I: IntoIterator<Item = usize>>(&self, items: I) -> usize {
        items.into_iter().fold(0, |acc, x| self.mul(acc, x))
    }

    /// `h g h⁻¹`.
    pub fn conjugate(&self, g: usize, h: usize) -> usize {
        self.mul(self.mul(h, g), self.inv(h))
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_of(&self, g: usize) -> usize {
        self.class_of[g]
    }

    /// Index of the class consisting of the inverses of the given class.
    pub fn inverse_class(&self, class: usize) -> usize {
        self.class_of[self.inv(self.classes[class][0])]
    }

    pub fn is_abelian(&self) -> bool {
        self.abelian.is_some()
    }

    /// The cyclic decomposition when the group was built as an abelian group.
    pub fn as_abelian(&self) -> Result<&AbelianGroup> {
        self.abelian.as_ref().ok_or(Error::NotAbelian)
    }

    pub fn element_name(&self, g: usize) -> &str {
        &self.element_names[g]
    }

    /// Index of an element given by its display name.
    pub fn element_by_name(&self, name: &str) -> Option<usize> {
        let name = name.trim();
        self.element_names.iter().position(|n| n == name)
    }

    /// Complete list of unitary irreducible representations, trivial first.
    ///
    /// For abelian groups the list is indexed by dual elements. Otherwise
    /// characters come from simultaneous eigenvectors of the class-sum
    /// operators and matrices from a minimal left ideal of the group algebra.
    pub fn irreps(&self) -> Result<&[Irrep]> {
        self.irreps
            .get_or_init(|| compute_irreps(self))
            .as_ref()
            .map(|v| v.as_slice())
            .map_err(Clone::clone)
    }

    /// Left regular representation matrix of `g`: `e_y ↦ e_{g y}`.
    fn left_regular(&self, g: usize) -> DMatrix<C64> {
        let n = self.order;
        let mut m = DMatrix::zeros(n, n);
        for y in 0..n {
            m[(self.mul(g, y), y)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Right regular representation matrix of `h`: `e_y ↦ e_{y h}`.
    fn right_regular(&self, h: usize) -> DMatrix<C64> {
        let n = self.order;
        let mut m = DMatrix::zeros(n, n);
        for y in 0..n {
            m[(self.mul(y, h), y)] = C64::new(1.0, 0.0);
        }
        m
    }
}

fn parse_abelian(compact: &str) -> Option<Vec<usize>> {
    compact
        .split(['x', 'X'])
        .map(|part| {
            let digits = part.strip_prefix('Z')?;
            let n: usize = digits.parse().ok()?;
            (n >= 1).then_some(n)
        })
        .collect()
}

fn permutation_group(name: &str, perms: Vec<Vec<usize>>) -> FiniteGroup {
    let n = perms.len();
    let index = |p: &[usize]| perms.iter().position(|q| q == p).expect("closed");
    let mut table = vec![0u32; n * n];
    for a in 0..n {
        for b in 0..n {
            let comp: Vec<usize> = (0..perms[a].len()).map(|i| perms[a][perms[b][i]]).collect();
            table[a * n + b] = index(&comp) as u32;
        }
    }
    let names = perms
        .iter()
        .map(|p| p.iter().map(|x| x.to_string()).collect::<String>())
        .collect();
    FiniteGroup::from_table(name.into(), table, names, None).expect("valid permutation group")
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    fn rec(k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for x in 0..k {
            if !current.contains(&x) {
                current.push(x);
                rec(k, current, out);
                current.pop();
            }
        }
    }
    rec(k, &mut current, &mut out);
    out
}

fn is_even(p: &[usize]) -> bool {
    let mut inversions = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 0
}

/// `S3` as permutations of `{0,1,2}` in lexicographic order of image words;
/// the product is composition `(a b)(i) = a(b(i))`.
fn symmetric_group_s3() -> FiniteGroup {
    permutation_group("S3", permutations(3))
}

/// `A4` as the even permutations of `{0,1,2,3}` in lexicographic order.
fn alternating_a4() -> FiniteGroup {
    let perms = permutations(4).into_iter().filter(|p| is_even(p)).collect();
    permutation_group("A4", perms)
}

/// `D4` with element `k + 4j` standing for `r^k s^j`, where `s r s = r⁻¹`.
fn dihedral_d4() -> FiniteGroup {
    let mut table = vec![0u32; 64];
    for a in 0..8 {
        for b in 0..8 {
            let (ka, ja) = (a % 4, a / 4);
            let (kb, jb) = (b % 4, b / 4);
            let k = if ja == 0 { ka + kb } else { ka + 4 - kb } % 4;
            let j = (ja + jb) % 2;
            table[a * 8 + b] = (k + 4 * j) as u32;
        }
    }
    let names = (0..8)
        .map(|i| match (i % 4, i / 4) {
            (0, 0) => "e".to_string(),
            (k, 0) => format!("r{k}"),
            (0, _) => "s".to_string(),
            (k, _) => format!("r{k}s"),
        })
        .collect();
    FiniteGroup::from_table("D4".into(), table, names, None).expect("valid D4 table")
}

/// `Q8` with elements ordered `1, -1, i, -i, j, -j, k, -k`.
fn quaternion_q8() -> FiniteGroup {
    // Unit products u*v = sign * w for u, v in {1, i, j, k}.
    fn unit_mul(u: usize, v: usize) -> (i32, usize) {
        match (u, v) {
            (0, x) | (x, 0) => (1, x),
            (a, b) if a == b => (-1, 0),
            (1, 2) => (1, 3),
            (2, 3) => (1, 1),
            (3, 1) => (1, 2),
            (2, 1) => (-1, 3),
            (3, 2) => (-1, 1),
            (1, 3) => (-1, 2),
            _ => unreachable!(),
        }
    }
    let decode = |i: usize| (if i.is_multiple_of(2) { 1 } else { -1 }, i / 2);
    let encode = |s: i32, u: usize| 2 * u + usize::from(s < 0);
    let mut table = vec![0u32; 64];
    for a in 0..8 {
        for b in 0..8 {
            let (sa, ua) = decode(a);
            let (sb, ub) = decode(b);
            let (s, w) = unit_mul(ua, ub);
            table[a * 8 + b] = encode(sa * sb * s, w) as u32;
        }
    }
    let names = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    FiniteGroup::from_table("Q8".into(), table, names, None).expect("valid Q8 table")
}

fn compute_irreps(group: &FiniteGroup) -> std::result::Result<Vec<Irrep>, Error> {
    if let Some(a) = &group.abelian {
        return Ok((0..a.order())
            .map(|dual| {
                let character: Vec<C64> = (0..a.order()).map(|g| a.pairing(g, dual)).collect();
                let matrices = character.iter().map(|&c| DMatrix::from_element(1, 1, c)).collect();
                Irrep {
                    dim: 1,
                    matrices,
                    character,
                }
            })
            .collect());
    }
    let characters = dixon_characters(group)?;
    characters
        .into_iter()
        .map(|character| irrep_from_character(group, character))
        .collect()
}

/// Character table by simultaneous diagonalization of the class-sum operators.
///
/// The class sum `C_j` acts on class functions by convolution; in the basis of
/// normalized class indicators these operators are normal and commute, so a
/// random Hermitian combination of them and their adjoints has the normalized
/// irreducible characters as eigenvectors.
pub fn dixon_characters(group: &FiniteGroup) -> Result<Vec<Vec<C64>>> {
    let n = group.order();
    let classes = group.classes();
    let k = classes.len();
    let sizes: Vec<f64> = classes.iter().map(|c| c.len() as f64).collect();
    // n_ops[j][(i, l)] = #{ y in C_j : y⁻¹ r_i in C_l } with r_i the first element of C_i.
    let mut n_ops = Vec::with_capacity(k);
    for cj in classes {
        let mut m = DMatrix::<C64>::zeros(k, k);
        for (i, ci) in classes.iter().enumerate() {
            for &y in cj {
                let l = group.class_of(group.mul(group.inv(y), ci[0]));
                m[(i, l)] += C64::new(1.0, 0.0);
            }
        }
        for i in 0..k {
            for l in 0..k {
                m[(i, l)] *= (sizes[i] / sizes[l]).sqrt();
            }
        }
        n_ops.push(m);
    }
    for attempt in 0..DIAGONALIZATION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed + attempt as u64);
        let mut h = DMatrix::<C64>::zeros(k, k);
        for m in &n_ops {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            let adj = m.adjoint();
            h += (m + &adj) * C64::new(a, 0.0) + (m - &adj) * C64::new(0.0, b);
        }
        let eig = h.symmetric_eigen();
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if values.windows(2).any(|w| w[1] - w[0] < 1e-6 * scale) {
            continue;
        }
        let mut chars = Vec::with_capacity(k);
        let mut ok = true;
        for col in 0..k {
            let u = eig.eigenvectors.column(col);
            let f: Vec<C64> = (0..k).map(|i| u[i] / sizes[i].sqrt()).collect();
            let f0 = f[0];
            if f0.norm() < 1e-12 {
                ok = false;
                break;
            }
            let c = f0.conj() / f0.norm() * (n as f64).sqrt();
            let values: Vec<C64> = f.iter().map(|&x| x * c).collect();
            let degree = values[0].re;
            if (degree - degree.round()).abs() > 1e-6 || degree.round() < 1.0 {
                ok = false;
                break;
            }
            chars.push(values);
        }
        if !ok {
            continue;
        }
        let dims_sq: f64 = chars.iter().map(|c| c[0].re.round().powi(2)).sum();
        if (dims_sq - n as f64).abs() > 1e-6 {
            continue;
        }
        let mut per_element: Vec<Vec<C64>> = chars
            .into_iter()
            .map(|c| {
                let d = c[0].re.round();
                (0..n)
                    .map(|g| {
                        let v = c[group.class_of(g)];
                        if g == 0 {
                            C64::new(d, 0.0)
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        per_element.sort_by(|a, b| character_key(a).partial_cmp(&character_key(b)).unwrap());
        return Ok(per_element);
    }
    Err(Error::DiagonalizationFailed {
        attempts: DIAGONALIZATION_ATTEMPTS,
    })
}

fn character_key(c: &[C64]) -> Vec<f64> {
    let mut key = vec![c[0].re];
    for v in c {
        key.push(-(v.re * 1e9).round());
        key.push(-(v.im * 1e9).round());
    }
    key
}

/// Unitary matrices affording the given character.
///
/// The isotypic component of the character in the left regular representation
/// is `End(W)`; right multiplication by a random Hermitian group-algebra element
/// acts on it as `W ⊗ (eigenline)` per eigenvalue, so the top eigenspace of that
/// operator restricted to the component is a single copy of `W`.
fn irrep_from_character(group: &FiniteGroup, character: Vec<C64>) -> Result<Irrep> {
    let n = group.order();
    let d = character[0].re.round() as usize;
    if d == 1 {
        let matrices = character.iter().map(|&c| DMatrix::from_element(1, 1, c)).collect();
        return Ok(Irrep {
            dim: 1,
            matrices,
            character,
        });
    }
    let left: Vec<DMatrix<C64>> = (0..n).map(|g| group.left_regular(g)).collect();
    let mut projector = DMatrix::<C64>::zeros(n, n);
    for (g, l) in left.iter().enumerate() {
        projector += l * (character[g].conj() * (d as f64 / n as f64));
    }
    let identity = DMatrix::<C64>::identity(n, n);
    for attempt in 0..DIAGONALIZATION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee + attempt as u64);
        let raw: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut r = DMatrix::<C64>::zeros(n, n);
        let mut weight = 0.0;
        for h in 0..n {
            let c = raw[h] + raw[group.inv(h)].conj();
            weight += c.norm();
            r += group.right_regular(h) * c;
        }
        let shift = C64::new(weight + 1.0, 0.0);
        let m = &projector * r * &projector - (&identity - &projector) * shift;
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let top = eig.eigenvalues[order[0]];
        let last = eig.eigenvalues[order[d - 1]];
        let next = eig.eigenvalues[order[d]];
        let scale = weight.max(1.0);
        if (top - last).abs() > 1e-8 * scale || last - next < 1e-6 * scale {
            continue;
        }
        let mut basis = DMatrix::<C64>::zeros(n, d);
        for (j, &col) in order.iter().take(d).enumerate() {
            basis.set_column(j, &eig.eigenvectors.column(col));
        }
        let basis_adj = basis.adjoint();
        let matrices: Vec<DMatrix<C64>> = left.iter().map(|l| &basis_adj * l * &basis).collect();
        let consistent = (0..n).all(|g| {
            (matrices[g].trace() - character[g]).norm() < 1e-8
                && (0..n).all(|h| (&matrices[g] * &matrices[h] - &matrices[group.mul(g, h)]).norm() < 1e-8)
        });
        if consistent {
            return Ok(Irrep {
                dim: d,
                matrices,
                character,
            });
        }
    }
    Err(Error::DiagonalizationFailed {
        attempts: DIAGONALIZATION_ATTEMPTS,
    })
}
