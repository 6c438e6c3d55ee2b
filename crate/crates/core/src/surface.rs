//! Combinatorial latticed surfaces, their duals, and standard generators.
//!
//! A face is a cyclic list of `(edge, dir)` slots. `dir = +1` means the face
//! boundary walk traverses the edge from its tail to its head.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_true() -> bool {
    true
}

/// A closed latticed surface given by incidence data only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice2 {
    pub vertices: usize,
    /// `[tail, head]` per edge.
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<Vec<(usize, i8)>>,
    #[serde(default = "default_true")]
    pub oriented: bool,
}

/// A position inside a face boundary walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Slot {
    pub face: usize,
    pub pos: usize,
}

/// A corner of a face at a vertex: the walk arrives along `in_pos` and
/// leaves along `out_pos`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Corner {
    pub face: usize,
    pub in_pos: usize,
    pub out_pos: usize,
    pub vertex: usize,
}

/// One problem found by [`Lattice2::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub location: String,
    pub message: String,
}

/// Result of [`Lattice2::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub euler_characteristic: i64,
    pub issues: Vec<Issue>,
}

/// Generator descriptors for [`generate_lattice`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeKind {
    Torus { m: usize, n: usize },
    SphereCube,
    SphereTetra,
    Genus(usize),
}

impl Lattice2 {
    pub fn num_vertices(&self) -> usize {
        self.vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// Genus of a closed connected oriented surface with this Euler characteristic.
    pub fn genus(&self) -> Option<usize> {
        let chi = self.euler_characteristic();
        (chi <= 2 && chi % 2 == 0).then(|| ((2 - chi) / 2) as usize)
    }

    pub fn tail(&self, e: usize) -> usize {
        self.edges[e][0]
    }

    pub fn head(&self, e: usize) -> usize {
        self.edges[e][1]
    }

    /// Vertex where the walk enters the given slot.
    pub fn slot_start(&self, face: usize, pos: usize) -> usize {
        let (e, dir) = self.faces[face][pos];
        if dir > 0 {
            self.tail(e)
        } else {
            self.head(e)
        }
    }

    /// Vertex where the walk leaves the given slot.
    pub fn slot_end(&self, face: usize, pos: usize) -> usize {
        let (e, dir) = self.faces[face][pos];
        if dir > 0 {
            self.head(e)
        } else {
            self.tail(e)
        }
    }

    /// For each edge, its `(+1 slot, -1 slot)`. Requires a valid lattice.
    pub fn edge_slots(&self) -> Vec<(Slot, Slot)> {
        let mut plus = vec![None; self.edges.len()];
        let mut minus = vec![None; self.edges.len()];
        for (f, face) in self.faces.iter().enumerate() {
            for (pos, &(e, dir)) in face.iter().enumerate() {
                let slot = Some(Slot { face: f, pos });
                if dir > 0 {
                    plus[e] = slot;
                } else {
                    minus[e] = slot;
                }
            }
        }
        plus.into_iter()
            .zip(minus)
            .map(|(p, m)| (p.expect("validated"), m.expect("validated")))
            .collect()
    }

    /// All corners of all faces.
    pub fn corners(&self) -> Vec<Corner> {
        let mut out = Vec::new();
        for (f, face) in self.faces.iter().enumerate() {
            let k = face.len();
            for pos in 0..k {
                out.push(Corner {
                    face: f,
                    in_pos: pos,
                    out_pos: (pos + 1) % k,
                    vertex: self.slot_end(f, pos),
                });
            }
        }
        out
    }

    /// Corners around `v` in rotation order. Requires a valid lattice.
    ///
    /// From a corner, the walk crosses its outgoing edge into the neighbouring
    /// face, where that edge is the incoming edge of the next corner.
    pub fn vertex_rotation(&self, v: usize) -> Vec<Corner> {
        let slots = self.edge_slots();
        let corners: Vec<Corner> = self.corners().into_iter().filter(|c| c.vertex == v).collect();
        if corners.is_empty() {
            return corners;
        }
        let mut out = vec![corners[0]];
        loop {
            let c = *out.last().unwrap();
            let (e, dir) = self.faces[c.face][c.out_pos];
            let other = if dir > 0 { slots[e].1 } else { slots[e].0 };
            let len = self.faces[other.face].len();
            let next = Corner {
                face: other.face,
                in_pos: other.pos,
                out_pos: (other.pos + 1) % len,
                vertex: v,
            };
            if next == out[0] || out.len() > corners.len() {
                break;
            }
            out.push(next);
        }
        out
    }

    /// Edges incident to `v`.
    pub fn incident_edges(&self, v: usize) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.tail(e) == v || self.head(e) == v)
            .collect()
    }

    /// Check every structural invariant and list each failure.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        fn add(issues: &mut Vec<Issue>, location: String, message: &str) {
            issues.push(Issue {
                location,
                message: message.to_string(),
            })
        }
        macro_rules! push {
            ($loc:expr, $msg:expr $(,)?) => {
                add(&mut issues, $loc, $msg)
            };
        }
        if !self.oriented {
            push!("surface".into(), "non-orientable input is unsupported");
        }
        if self.vertices == 0 {
            push!("surface".into(), "no vertices");
        }
        let mut structural_ok = true;
        for (e, &[t, h]) in self.edges.iter().enumerate() {
            if t >= self.vertices || h >= self.vertices {
                push!(format!("edge {e}"), "endpoint out of range");
                structural_ok = false;
            } else if t == h {
                push!(format!("edge {e}"), "loop edge");
                structural_ok = false;
            }
        }
        let mut uses: Vec<Vec<i8>> = vec![Vec::new(); self.edges.len()];
        for (f, face) in self.faces.iter().enumerate() {
            if face.len() < 2 {
                push!(format!("face {f}"), "face length < 2");
                structural_ok = false;
            }
            let mut seen = Vec::new();
            for &(e, dir) in face {
                if e >= self.edges.len() {
                    push!(format!("face {f}"), "edge index out of range");
                    structural_ok = false;
                    continue;
                }
                if dir != 1 && dir != -1 {
                    push!(format!("face {f}"), "direction flag must be +1 or -1");
                    structural_ok = false;
                    continue;
                }
                if seen.contains(&e) {
                    push!(format!("face {f}"), "edge repeated within a face");
                }
                seen.push(e);
                uses[e].push(dir);
            }
        }
        if !structural_ok {
            return self.report(issues);
        }
        for (f, face) in self.faces.iter().enumerate() {
            let k = face.len();
            let mut visited = Vec::new();
            for pos in 0..k {
                if self.slot_end(f, pos) != self.slot_start(f, (pos + 1) % k) {
                    push!(format!("face {f} slot {pos}"), "boundary walk is not closed");
                }
                visited.push(self.slot_start(f, pos));
            }
            visited.sort_unstable();
            if visited.windows(2).any(|w| w[0] == w[1]) {
                push!(format!("face {f}"), "face boundary revisits a vertex");
            }
        }
        let mut pairing_ok = true;
        for (e, dirs) in uses.iter().enumerate() {
            match dirs.as_slice() {
                [a, b] if a + b == 0 => {}
                [a, b] if a == b => {
                    push!(
                        format!("edge {e}"),
                        "orientability failure: edge used twice with the same direction"
                    );
                    pairing_ok = false;
                }
                _ => {
                    push!(
                        format!("edge {e}"),
                        &format!("edge occurs in {} face slots instead of 2", dirs.len()),
                    );
                    pairing_ok = false;
                }
            }
        }
        if pairing_ok && issues.is_empty() {
            let corners = self.corners();
            let mut per_vertex = vec![0usize; self.vertices];
            for c in &corners {
                per_vertex[c.vertex] += 1;
            }
            for v in 0..self.vertices {
                if per_vertex[v] == 0 {
                    push!(format!("vertex {v}"), "isolated vertex");
                    continue;
                }
                let cycle = self.vertex_rotation(v);
                if cycle.len() != per_vertex[v] {
                    push!(format!("vertex {v}"), "link of vertex is not a single cycle");
                }
            }
        }
        if !self.is_connected() {
            push!("surface".into(), "surface is not connected");
        }
        self.report(issues)
    }

    fn report(&self, issues: Vec<Issue>) -> ValidationReport {
        ValidationReport {
            valid: issues.is_empty(),
            vertices: self.vertices,
            edges: self.edges.len(),
            faces: self.faces.len(),
            euler_characteristic: self.euler_characteristic(),
            issues,
        }
    }

    /// Validate and return `self`, or the first issue as an error.
    pub fn validated(self) -> Result<Self> {
        let report = self.validate();
        if report.valid {
            Ok(self)
        } else {
            let text = report
                .issues
                .iter()
                .map(|i| format!("{}: {}", i.location, i.message))
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::InvalidLattice(text))
        }
    }

    fn is_connected(&self) -> bool {
        if self.vertices == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.vertices];
        for &[t, h] in &self.edges {
            if t < self.vertices && h < self.vertices {
                adj[t].push(h);
                adj[h].push(t);
            }
        }
        let mut seen = vec![false; self.vertices];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Same surface with every edge orientation reversed.
    pub fn with_reversed_edges(&self) -> Lattice2 {
        Lattice2 {
            vertices: self.vertices,
            edges: self.edges.iter().map(|&[t, h]| [h, t]).collect(),
            faces: self
                .faces
                .iter()
                .map(|f| f.iter().map(|&(e, d)| (e, -d)).collect())
                .collect(),
            oriented: self.oriented,
        }
    }

    /// Build a lattice from vertex cycles, creating one edge per unordered
    /// vertex pair and orienting faces coherently.
    pub fn from_vertex_cycles(vertices: usize, cycles: &[Vec<usize>]) -> Result<Lattice2> {
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut faces = Vec::new();
        for cycle in cycles {
            let k = cycle.len();
            let mut face = Vec::with_capacity(k);
            for i in 0..k {
                let (a, b) = (cycle[i], cycle[(i + 1) % k]);
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
                face.push((e, if a < b { 1 } else { -1 }));
            }
            faces.push(face);
        }
        let mut lattice = Lattice2 {
            vertices,
            edges,
            faces,
            oriented: true,
        };
        lattice.orient_coherently()?;
        lattice.validated()
    }

    fn orient_coherently(&mut self) -> Result<()> {
        let nf = self.faces.len();
        let mut by_edge: Vec<Vec<usize>> = vec![Vec::new(); self.edges.len()];
        for (f, face) in self.faces.iter().enumerate() {
            for &(e, _) in face {
                by_edge[e].push(f);
            }
        }
        let mut fixed = vec![false; nf];
        for start in 0..nf {
            if fixed[start] {
                continue;
            }
            fixed[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(f) = queue.pop_front() {
                for &(e, dir) in &self.faces[f].clone() {
                    for &g in &by_edge[e] {
                        if g == f {
                            continue;
                        }
                        let other_dir = self.faces[g].iter().find(|s| s.0 == e).unwrap().1;
                        if fixed[g] {
                            if other_dir == dir {
                                return Err(Error::InvalidLattice("surface is not orientable".into()));
                            }
                            continue;
                        }
                        if other_dir == dir {
                            let face = &mut self.faces[g];
                            face.reverse();
                            for s in face.iter_mut() {
                                s.1 = -s.1;
                            }
                        }
                        fixed[g] = true;
                        queue.push_back(g);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Standard surfaces with deterministic indexing.
///
/// * `torus(m, n)`: vertex `(i, j)` has index `i + m j`; edge `2(i + m j)` runs
///   `(i,j) → (i+1,j)` and edge `2(i + m j) + 1` runs `(i,j) → (i,j+1)`; face
///   `i + m j` is the square with lower left corner `(i, j)`.
/// * `sphere_cube`: vertex `x + 2y + 4z` of the unit cube.
/// * `sphere_tetra`: boundary of a tetrahedron.
/// * `genus(g)`: the `4g`-gon with word `a1 b1 a1⁻¹ b1⁻¹ …`, each side split at
///   its midpoint and coned off from a centre vertex. Vertex 0 is the
///   polygon corner, vertex 1 the centre, vertices `2 + k` the side midpoints.
pub fn generate_lattice(kind: LatticeKind) -> Result<Lattice2> {
    match kind {
        LatticeKind::Torus { m, n } => torus(m, n),
        LatticeKind::SphereCube => {
            let cycles = vec![
                vec![0, 2, 6, 4],
                vec![1, 3, 7, 5],
                vec![0, 1, 5, 4],
                vec![2, 3, 7, 6],
                vec![0, 1, 3, 2],
                vec![4, 5, 7, 6],
            ];
            Lattice2::from_vertex_cycles(8, &cycles)
        }
        LatticeKind::SphereTetra => {
            let cycles = vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]];
            Lattice2::from_vertex_cycles(4, &cycles)
        }
        LatticeKind::Genus(g) => genus(g),
    }
}

fn torus(m: usize, n: usize) -> Result<Lattice2> {
    if m < 2 || n < 2 {
        return Err(Error::InvalidLattice(
            "torus(m, n) needs m, n >= 2 to avoid loops".into(),
        ));
    }
    let vid = |i: usize, j: usize| (i % m) + m * (j % n);
    let h = |i: usize, j: usize| 2 * vid(i, j);
    let v = |i: usize, j: usize| 2 * vid(i, j) + 1;
    let mut edges = vec![[0, 0]; 2 * m * n];
    for j in 0..n {
        for i in 0..m {
            edges[h(i, j)] = [vid(i, j), vid(i + 1, j)];
            edges[v(i, j)] = [vid(i, j), vid(i, j + 1)];
        }
    }
    let mut faces = Vec::with_capacity(m * n);
    for j in 0..n {
        for i in 0..m {
            faces.push(vec![(h(i, j), 1), (v(i + 1, j), 1), (h(i, j + 1), -1), (v(i, j), -1)]);
        }
    }
    Lattice2 {
        vertices: m * n,
        edges,
        faces,
        oriented: true,
    }
    .validated()
}

fn genus(g: usize) -> Result<Lattice2> {
    if g == 0 {
        return Err(Error::InvalidLattice(
            "genus(g) needs g >= 1; use sphere_cube or sphere_tetra for the sphere".into(),
        ));
    }
    const CORNER: usize = 0;
    const CENTRE: usize = 1;
    let sides = 4 * g;
    // Letters 0..2g are a_1, b_1, ..., a_g, b_g; letter k has midpoint vertex 2 + k
    // and two segment edges 2k (corner -> midpoint) and 2k + 1 (midpoint -> corner).
    let mut edges: Vec<[usize; 2]> = Vec::with_capacity(12 * g);
    for k in 0..2 * g {
        edges.push([CORNER, 2 + k]);
        edges.push([2 + k, CORNER]);
    }
    // Boundary positions 2s (corner) and 2s + 1 (midpoint of side s).
    let mut position_vertex = Vec::with_capacity(2 * sides);
    let mut segments: Vec<(usize, i8)> = Vec::with_capacity(2 * sides);
    for s in 0..sides {
        let block = s / 4;
        let (letter, forward) = match s % 4 {
            0 => (2 * block, true),
            1 => (2 * block + 1, true),
            2 => (2 * block, false),
            _ => (2 * block + 1, false),
        };
        position_vertex.push(CORNER);
        position_vertex.push(2 + letter);
        if forward {
            segments.push((2 * letter, 1));
            segments.push((2 * letter + 1, 1));
        } else {
            segments.push((2 * letter + 1, -1));
            segments.push((2 * letter, -1));
        }
    }
    let cone_base = edges.len();
    for &pv in &position_vertex {
        edges.push([CENTRE, pv]);
    }
    let positions = position_vertex.len();
    let faces = (0..positions)
        .map(|q| {
            let next = (q + 1) % positions;
            vec![(cone_base + q, 1), segments[q], (cone_base + next, -1)]
        })
        .collect();
    Lattice2 {
        vertices: 2 + 2 * g,
        edges,
        faces,
        oriented: true,
    }
    .validated()
}

/// A polygonal circle with `n ≥ 2` vertices `0..n` and edges `i → i+1 mod n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticedCircle {
    n: usize,
}

impl LatticedCircle {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidLattice("a latticed circle needs n >= 2".into()));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The canonical combinatorial dual of a closed oriented lattice.
///
/// Dual vertex `f` is face `f`; dual edge `e` runs from the face where `e` has
/// direction `-1` to the face where it has direction `+1`; dual face `v` walks
/// the corners around `v`, traversing dual edge `e` forwards iff `v` is the
/// head of `e`. With these conventions the incidence matrices of the dual are
/// exactly the transposes of those of the original.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualLattice {
    pub lattice: Lattice2,
    /// `face_to_vertex[f]` is the dual vertex of face `f`.
    pub face_to_vertex: Vec<usize>,
    /// `edge_to_edge[e]` is the dual edge crossing edge `e`.
    pub edge_to_edge: Vec<usize>,
}

pub fn dual_lattice(lattice: &Lattice2) -> Result<DualLattice> {
    if !lattice.oriented || !lattice.validate().valid {
        return Err(Error::RequiresClosedSurface);
    }
    let slots = lattice.edge_slots();
    let edges = slots.iter().map(|(plus, minus)| [minus.face, plus.face]).collect();
    let faces = (0..lattice.vertices)
        .map(|v| {
            lattice
                .vertex_rotation(v)
                .iter()
                .map(|c| {
                    let e = lattice.faces[c.face][c.out_pos].0;
                    (e, if lattice.head(e) == v { 1 } else { -1 })
                })
                .collect()
        })
        .collect();
    let dual = Lattice2 {
        vertices: lattice.faces.len(),
        edges,
        faces,
        oriented: true,
    }
    .validated()?;
    Ok(DualLattice {
        lattice: dual,
        face_to_vertex: (0..lattice.faces.len()).collect(),
        edge_to_edge: (0..lattice.edges.len()).collect(),
    })
}

/// Isomorphism of oriented maps, ignoring the auxiliary edge orientations.
///
/// Darts are face slots; the face rotation and the edge involution must be
/// intertwined by a bijection of darts.
pub fn is_isomorphic(a: &Lattice2, b: &Lattice2) -> bool {
    if (a.vertices, a.edges.len(), a.faces.len()) != (b.vertices, b.edges.len(), b.faces.len()) {
        return false;
    }
    let darts = |l: &Lattice2| {
        let mut list = Vec::new();
        let mut id = HashMap::new();
        for (f, face) in l.faces.iter().enumerate() {
            for pos in 0..face.len() {
                id.insert((f, pos), list.len());
                list.push((f, pos));
            }
        }
        let slots = l.edge_slots();
        let phi: Vec<usize> = list
            .iter()
            .map(|&(f, p)| id[&(f, (p + 1) % l.faces[f].len())])
            .collect();
        let alpha: Vec<usize> = list
            .iter()
            .map(|&(f, p)| {
                let (e, dir) = l.faces[f][p];
                let other = if dir > 0 { slots[e].1 } else { slots[e].0 };
                id[&(other.face, other.pos)]
            })
            .collect();
        (phi, alpha)
    };
    if !a.validate().valid || !b.validate().valid {
        return false;
    }
    let (phi_a, alpha_a) = darts(a);
    let (phi_b, alpha_b) = darts(b);
    let n = phi_a.len();
    if n == 0 {
        return true;
    }
    'candidates: for target in 0..n {
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; n];
        map[0] = target;
        used[target] = true;
        let mut stack = vec![0usize];
        while let Some(x) = stack.pop() {
            for (fa, fb) in [(&phi_a, &phi_b), (&alpha_a, &alpha_b)] {
                let (y, z) = (fa[x], fb[map[x]]);
                if map[y] == usize::MAX {
                    if used[z] {
                        continue 'candidates;
                    }
                    map[y] = z;
                    used[z] = true;
                    stack.push(y);
                } else if map[y] != z {
                    continue 'candidates;
                }
            }
        }
        if map.iter().all(|&m| m != usize::MAX) {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_counts() {
        let t = generate_lattice(LatticeKind::Torus { m: 3, n: 3 }).unwrap();
        assert_eq!((t.vertices, t.edges.len(), t.faces.len()), (9, 18, 9));
        assert_eq!(t.euler_characteristic(), 0);
        let c = generate_lattice(LatticeKind::SphereCube).unwrap();
        assert_eq!((c.vertices, c.edges.len(), c.faces.len()), (8, 12, 6));
        assert_eq!(c.euler_characteristic(), 2);
        let tet = generate_lattice(LatticeKind::SphereTetra).unwrap();
        assert_eq!((tet.vertices, tet.edges.len(), tet.faces.len()), (4, 6, 4));
        for g in 1..=4 {
            let l = generate_lattice(LatticeKind::Genus(g)).unwrap();
            assert_eq!(l.euler_characteristic(), 2 - 2 * g as i64);
            assert_eq!((l.vertices, l.edges.len(), l.faces.len()), (2 + 2 * g, 12 * g, 8 * g));
            assert_eq!(l.genus(), Some(g));
        }
        assert!(generate_lattice(LatticeKind::Genus(0)).is_err());
        assert!(generate_lattice(LatticeKind::Torus { m: 1, n: 3 }).is_err());
    }

    #[test]
    fn every_edge_has_two_incidences() {
        for kind in [
            LatticeKind::Torus { m: 2, n: 3 },
            LatticeKind::SphereCube,
            LatticeKind::SphereTetra,
            LatticeKind::Genus(2),
        ] {
            let l = generate_lattice(kind).unwrap();
            let mut count = vec![0; l.edges.len()];
            for face in &l.faces {
                for &(e, _) in face {
                    count[e] += 1;
                }
            }
            assert!(count.iter().all(|&c| c == 2));
        }
    }

    #[test]
    fn validation_examples() {
        let t = generate_lattice(LatticeKind::Torus { m: 2, n: 2 }).unwrap();
        assert!(t.validate().valid);
        let mut bad = t.clone();
        bad.faces.push(vec![(0, 1)]);
        let report = bad.validate();
        assert!(!report.valid);
        assert!(report.issues.iter().any(|i| i.message == "face length < 2"));
        let mut twisted = t.clone();
        let slot = twisted.faces[1].iter_mut().find(|s| s.0 == 2).unwrap();
        slot.1 = -slot.1;
        let flipped = twisted.faces[1].iter().find(|s| s.0 == 2).unwrap().1;
        let other = twisted
            .faces
            .iter()
            .enumerate()
            .find(|(f, face)| *f != 1 && face.iter().any(|s| s.0 == 2));
        assert!(other.is_some() && other.unwrap().1.iter().find(|s| s.0 == 2).unwrap().1 == flipped);
        let report = twisted.validate();
        assert!(report
            .issues
            .iter()
            .any(|i| i.message.starts_with("orientability failure")));
    }

    #[test]
    fn duals_and_double_duals() {
        for (m, n) in [(2, 2), (3, 3), (2, 3), (3, 4)] {
            let t = generate_lattice(LatticeKind::Torus { m, n }).unwrap();
            let d = dual_lattice(&t).unwrap();
            assert!(is_isomorphic(&t, &d.lattice), "torus({m},{n})");
            let dd = dual_lattice(&d.lattice).unwrap();
            assert!(is_isomorphic(&t, &dd.lattice));
            assert_eq!(dd.lattice.edges, t.edges);
        }
        let cube = generate_lattice(LatticeKind::SphereCube).unwrap();
        let oct = dual_lattice(&cube).unwrap().lattice;
        assert_eq!((oct.vertices, oct.edges.len(), oct.faces.len()), (6, 12, 8));
        assert!(oct.faces.iter().all(|f| f.len() == 3));
        let g2 = generate_lattice(LatticeKind::Genus(2)).unwrap();
        let dg = dual_lattice(&g2).unwrap();
        assert!(is_isomorphic(&g2, &dual_lattice(&dg.lattice).unwrap().lattice));
        assert!(!is_isomorphic(&cube, &oct));
    }

    #[test]
    fn crossing_pairing_is_a_perfect_matching() {
        let t = generate_lattice(LatticeKind::Torus { m: 2, n: 3 }).unwrap();
        let d = dual_lattice(&t).unwrap();
        let slots = t.edge_slots();
        let mut hit = vec![false; d.lattice.edges.len()];
        for (e, (plus, minus)) in slots.iter().enumerate() {
            let de = d.edge_to_edge[e];
            assert!(!hit[de]);
            hit[de] = true;
            let mut ends = d.lattice.edges[de];
            ends.sort_unstable();
            let mut faces = [plus.face, minus.face];
            faces.sort_unstable();
            assert_eq!(ends, faces);
        }
    }

    #[test]
    fn json_round_trip() {
        let t = generate_lattice(LatticeKind::Torus { m: 2, n: 2 }).unwrap();
        let text = serde_json::to_string(&t).unwrap();
        assert!(text.contains("\"faces\":[[[0,1],"));
        let back: Lattice2 = serde_json::from_str(&text).unwrap();
        assert_eq!(back, t);
    }
}
