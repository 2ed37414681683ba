//! Projective geometries PG_m(q), blocking sets, Baer subplanes, and
//! colouring censuses.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::budget::Budget;
use crate::embed;
use crate::error::{Error, Result};
use crate::galois::GaloisField;
use crate::hypergraph::{UniformHypergraph, Vertex};
use crate::parallel::Parallelism;

/// PG_m(q): points are canonical representatives of the 1-dimensional
/// subspaces of F_q^{m+1}; lines are the 2-dimensional subspaces, viewed as
/// (q+1)-sets of point indices.
#[derive(Clone, Debug)]
pub struct ProjectiveGeometry {
    q: u64,
    m: usize,
    field: GaloisField,
    points: Vec<Vec<u64>>,
    lines: Vec<Vec<Vertex>>,
    graph: UniformHypergraph,
}

impl ProjectiveGeometry {
    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn field(&self) -> &GaloisField {
        &self.field
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    /// Canonical coordinates of a point (last nonzero coordinate is 1).
    pub fn point(&self, i: usize) -> &[u64] {
        &self.points[i]
    }

    pub fn lines(&self) -> &[Vec<Vertex>] {
        &self.lines
    }

    pub fn as_hypergraph(&self) -> &UniformHypergraph {
        &self.graph
    }
}

/// Scale a vector so its last nonzero coordinate becomes 1.
fn canonicalize(field: &GaloisField, v: &mut [u64]) {
    if let Some(last) = (0..v.len()).rev().find(|&i| v[i] != 0) {
        let inv = field.inv(v[last]).expect("nonzero");
        for x in v.iter_mut() {
            *x = field.mul(*x, inv);
        }
    }
}

/// Generate PG_m(q).
pub fn pg(m: usize, q: u64, budget: Budget) -> Result<ProjectiveGeometry> {
    if m < 2 {
        return Err(Error::OutOfRange(format!("projective dimension m={m} < 2")));
    }
    let field = GaloisField::new(q)?;
    let dim = m + 1;
    let vector_count = (q as u128).pow(dim as u32);
    budget.admit(vector_count)?;

    // Points: canonical representatives of nonzero vectors.
    let mut seen = BTreeSet::new();
    let mut points = Vec::new();
    let mut v = vec![0u64; dim];
    for code in 1..vector_count {
        let mut c = code;
        for i in 0..dim {
            v[i] = (c % q as u128) as u64;
            c /= q as u128;
        }
        let mut w = v.clone();
        canonicalize(&field, &mut w);
        if seen.insert(w.clone()) {
            points.push(w);
        }
    }
    points.sort();
    let index: BTreeMap<Vec<u64>, Vertex> = points
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, p)| (p, i as Vertex))
        .collect();
    let n = points.len();
    budget.admit((n as u128) * (n as u128) * (q as u128) * (q as u128))?;

    // Lines: spans of pairs of distinct points.
    let mut lines = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut line = BTreeSet::new();
            for a in 0..q {
                for b in 0..q {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let mut w: Vec<u64> = (0..dim)
                        .map(|d| field.add(field.mul(a, points[i][d]), field.mul(b, points[j][d])))
                        .collect();
                    canonicalize(&field, &mut w);
                    line.insert(index[&w]);
                }
            }
            let line: Vec<Vertex> = line.into_iter().collect();
            debug_assert_eq!(line.len(), q as usize + 1);
            lines.insert(line);
        }
    }
    let lines: Vec<Vec<Vertex>> = lines.into_iter().collect();
    let graph = UniformHypergraph::new(n, q as usize + 1, lines.clone())?;
    Ok(ProjectiveGeometry {
        q,
        m,
        field,
        points,
        lines,
        graph,
    })
}

/// PG_2(q) with its pair-on-unique-line index; construction verifies the
/// plane axioms exhaustively.
#[derive(Clone, Debug)]
pub struct ProjectivePlane {
    geo: ProjectiveGeometry,
    /// pair (i < j) -> line id, flattened triangular index
    pair_line: Vec<u32>,
}

impl std::ops::Deref for ProjectivePlane {
    type Target = ProjectiveGeometry;

    fn deref(&self) -> &ProjectiveGeometry {
        &self.geo
    }
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl ProjectivePlane {
    pub fn new(q: u64, budget: Budget) -> Result<Self> {
        let geo = pg(2, q, budget)?;
        let n = geo.point_count();
        let expected = (q * q + q + 1) as usize;
        if n != expected || geo.line_count() != expected {
            return Err(Error::Internal(format!(
                "PG_2({q}) generated {n} points and {} lines, expected {expected}",
                geo.line_count()
            )));
        }
        let mut pair_line = vec![u32::MAX; n * (n - 1) / 2];
        for (li, line) in geo.lines.iter().enumerate() {
            for a in 0..line.len() {
                for b in a + 1..line.len() {
                    let idx = pair_index(n, line[a] as usize, line[b] as usize);
                    if pair_line[idx] != u32::MAX {
                        return Err(Error::Internal(format!(
                            "points {} and {} lie on two lines",
                            line[a], line[b]
                        )));
                    }
                    pair_line[idx] = li as u32;
                }
            }
        }
        if pair_line.iter().any(|&l| l == u32::MAX) {
            return Err(Error::Internal("a point pair lies on no line".into()));
        }
        // Two lines always meet in exactly one point.
        for a in 0..geo.lines.len() {
            for b in a + 1..geo.lines.len() {
                let meet = geo.lines[a]
                    .iter()
                    .filter(|v| geo.lines[b].contains(v))
                    .count();
                if meet != 1 {
                    return Err(Error::Internal(format!(
                        "lines {a} and {b} meet in {meet} points"
                    )));
                }
            }
        }
        Ok(ProjectivePlane { geo, pair_line })
    }

    /// The unique line through two distinct points.
    pub fn line_through(&self, a: Vertex, b: Vertex) -> u32 {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.pair_line[pair_index(self.geo.point_count(), i as usize, j as usize)]
    }

    pub fn collinear(&self, a: Vertex, b: Vertex, c: Vertex) -> bool {
        a == b || b == c || a == c || self.geo.lines[self.line_through(a, b) as usize].contains(&c)
    }
}

/// The cyclic-translate hypergraph { base + x : x ∈ Z_modulus }.
pub fn difference_set_plane(modulus: u64, base: &[u64]) -> Result<UniformHypergraph> {
    let edges = (0..modulus)
        .map(|x| {
            base.iter()
                .map(|&b| ((b + x) % modulus) as Vertex)
                .collect()
        })
        .collect();
    UniformHypergraph::new(modulus as usize, base.len(), edges)
}

/// Full point bijection preserving edges, or None. Backtracking with
/// line-incidence pruning via the embedding kernel.
pub fn iso_check(
    a: &UniformHypergraph,
    b: &UniformHypergraph,
    budget: Budget,
    par: &Parallelism,
) -> Result<Option<Vec<Vertex>>> {
    if a.n() != b.n() || a.k() != b.k() || a.edge_count() != b.edge_count() {
        return Ok(None);
    }
    // An injective homomorphism between equal-sized edge sets maps the edge
    // set onto the edge set, so it is an isomorphism.
    let cert = embed::contains_copy(b, a, budget, par)?;
    match cert.verdict {
        embed::SearchVerdict::Embedding(map) => Ok(Some(map)),
        embed::SearchVerdict::NoCopy => Ok(None),
        embed::SearchVerdict::BudgetExhausted => Err(Error::BudgetExceeded {
            needed: cert.nodes_expanded as u128,
            budget: budget.limit(),
        }),
    }
}

/// Exhaustive blocking-set census of a plane.
#[derive(Clone, Debug)]
pub struct BlockingSetReport {
    /// Each blocking set as a bit mask over point indices.
    pub sets: Vec<u32>,
    pub histogram: BTreeMap<usize, u64>,
    /// S blocking ⟺ complement blocking, over the whole census.
    pub complement_closed: bool,
}

impl BlockingSetReport {
    pub fn set_members(&self, mask: u32) -> Vec<Vertex> {
        (0..32)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| i as Vertex)
            .collect()
    }
}

/// Enumerate all blocking sets: 0 < |S ∩ L| < |L| for every line L.
pub fn blocking_sets(
    plane: &ProjectiveGeometry,
    budget: Budget,
    par: &Parallelism,
) -> Result<BlockingSetReport> {
    blocking_sets_of_lines(plane.point_count(), plane.lines(), budget, par)
}

/// The same census for an arbitrary line system given as edge sets.
pub fn blocking_sets_of_lines(
    n: usize,
    lines: &[Vec<Vertex>],
    budget: Budget,
    par: &Parallelism,
) -> Result<BlockingSetReport> {
    if n >= 32 {
        return Err(Error::BudgetExceeded {
            needed: u128::MAX,
            budget: budget.limit(),
        });
    }
    budget.admit((1u128 << n) * lines.len() as u128)?;
    let line_masks: Vec<u32> = lines
        .iter()
        .map(|l| l.iter().fold(0u32, |m, &v| m | 1 << v))
        .collect();

    let total: u64 = 1 << n;
    let chunk: u64 = 1 << 16;
    let chunks = (total + chunk - 1) / chunk;
    let found: Vec<Vec<u32>> = par.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * chunk;
                let hi = (lo + chunk).min(total);
                let mut out = Vec::new();
                's: for s in lo..hi {
                    let s = s as u32;
                    for &l in &line_masks {
                        let r = s & l;
                        if r == 0 || r == l {
                            continue 's;
                        }
                    }
                    out.push(s);
                }
                out
            })
            .collect()
    });
    let sets: Vec<u32> = found.into_iter().flatten().collect();
    let mut histogram = BTreeMap::new();
    for &s in &sets {
        *histogram.entry(s.count_ones() as usize).or_insert(0u64) += 1;
    }
    let full: u32 = ((1u64 << n) - 1) as u32;
    let set_index: BTreeSet<u32> = sets.iter().copied().collect();
    let complement_closed = sets.iter().all(|&s| set_index.contains(&(full ^ s)));
    Ok(BlockingSetReport {
        sets,
        histogram,
        complement_closed,
    })
}

/// The triangle-form sets of a plane: L(x,y) ∪ L(y,z) ∪ L(x,z) ∖ {x,y,z}
/// over all non-collinear triples, as masks. For PG_2(3) these are exactly
/// the size-6 blocking sets.
pub fn triangle_forms(plane: &ProjectivePlane) -> BTreeSet<u32> {
    let n = plane.point_count();
    let mut out = BTreeSet::new();
    for x in 0..n as Vertex {
        for y in x + 1..n as Vertex {
            for z in y + 1..n as Vertex {
                if plane.collinear(x, y, z) {
                    continue;
                }
                let mut mask = 0u32;
                for &(a, b) in &[(x, y), (y, z), (x, z)] {
                    for &p in &plane.lines()[plane.line_through(a, b) as usize] {
                        mask |= 1 << p;
                    }
                }
                mask &= !(1 << x);
                mask &= !(1 << y);
                mask &= !(1 << z);
                out.insert(mask);
            }
        }
    }
    out
}

/// A Baer subplane of a plane of square order: the points with all
/// coordinates in the base field.
#[derive(Clone, Debug)]
pub struct BaerSubplane {
    pub points: Vec<Vertex>,
    /// Lines meeting the subplane in sqrt(q)+1 points.
    pub full_lines: Vec<u32>,
    /// Lines meeting the subplane in exactly one point.
    pub tangent_lines: Vec<u32>,
    /// The subplane structure: full-line intersections on relabelled points.
    pub induced: UniformHypergraph,
}

pub fn baer_subplane(plane: &ProjectivePlane) -> Result<BaerSubplane> {
    let q = plane.q();
    let s = (q as f64).sqrt().round() as u64;
    if s * s != q {
        return Err(Error::NonSquareOrder(q));
    }
    let sub: BTreeSet<u64> = plane.field().subfield_elements(s).into_iter().collect();
    let points: Vec<Vertex> = (0..plane.point_count())
        .filter(|&i| plane.point(i).iter().all(|c| sub.contains(c)))
        .map(|i| i as Vertex)
        .collect();
    let expected = (s * s + s + 1) as usize;
    if points.len() != expected {
        return Err(Error::Internal(format!(
            "Baer subplane has {} points, expected {expected}",
            points.len()
        )));
    }
    let relabel: BTreeMap<Vertex, Vertex> = points
        .iter()
        .enumerate()
        .map(|(new, &old)| (old, new as Vertex))
        .collect();
    let mut full_lines = Vec::new();
    let mut tangent_lines = Vec::new();
    let mut induced_edges = Vec::new();
    for (li, line) in plane.lines().iter().enumerate() {
        let hit: Vec<Vertex> = line
            .iter()
            .copied()
            .filter(|v| relabel.contains_key(v))
            .collect();
        match hit.len() {
            1 => tangent_lines.push(li as u32),
            len if len == s as usize + 1 => {
                full_lines.push(li as u32);
                induced_edges.push(hit.iter().map(|v| relabel[v]).collect());
            }
            other => {
                return Err(Error::Internal(format!(
                    "line {li} meets the Baer subplane in {other} points"
                )))
            }
        }
    }
    let induced = UniformHypergraph::new(points.len(), s as usize + 1, induced_edges)?;
    Ok(BaerSubplane {
        points,
        full_lines,
        tangent_lines,
        induced,
    })
}

/// The wedge two-colouring of a plane: C_0 = L(x,y) ∪ L(x,z) ∪ {w} ∖ {y,z}
/// for a non-collinear x, y, z and w on L(y,z) away from y, z.
#[derive(Clone, Debug)]
pub struct Wedge {
    pub x: Vertex,
    pub y: Vertex,
    pub z: Vertex,
    pub w: Vertex,
    /// Sorted members of the wedge colour class C_0.
    pub c0: Vec<Vertex>,
    /// L(x,y) ∖ {x,y} and L(x,z) ∖ {x,z}, the wedge arms.
    pub arm_y: Vec<Vertex>,
    pub arm_z: Vec<Vertex>,
}

pub fn wedge_colouring(
    plane: &ProjectivePlane,
    x: Vertex,
    y: Vertex,
    z: Vertex,
    w: Vertex,
) -> Result<Wedge> {
    if plane.collinear(x, y, z) {
        return Err(Error::Geometry(format!("{x}, {y}, {z} are collinear")));
    }
    let lyz = &plane.lines()[plane.line_through(y, z) as usize];
    if w == y || w == z || !lyz.contains(&w) {
        return Err(Error::Geometry(format!(
            "w={w} must lie on the line through {y} and {z}, away from both"
        )));
    }
    let lxy = &plane.lines()[plane.line_through(x, y) as usize];
    let lxz = &plane.lines()[plane.line_through(x, z) as usize];
    let mut c0: BTreeSet<Vertex> = lxy.iter().chain(lxz.iter()).copied().collect();
    c0.remove(&y);
    c0.remove(&z);
    c0.insert(w);
    Ok(Wedge {
        x,
        y,
        z,
        w,
        c0: c0.into_iter().collect(),
        arm_y: lxy.iter().copied().filter(|&p| p != x && p != y).collect(),
        arm_z: lxz.iter().copied().filter(|&p| p != x && p != z).collect(),
    })
}

/// Count lines by type: key (|L ∩ C_0|, |L ∩ C_1|).
pub fn line_type_census(
    plane: &ProjectiveGeometry,
    c0: &[Vertex],
) -> BTreeMap<(usize, usize), u64> {
    let mask: u64 = c0.iter().fold(0, |m, &v| m | 1 << v);
    let mut census = BTreeMap::new();
    for line in plane.lines() {
        let inside = line.iter().filter(|&&v| mask >> v & 1 == 1).count();
        *census.entry((inside, line.len() - inside)).or_insert(0) += 1;
    }
    census
}

/// Check the structure of the C0³C1² lines of a wedge: each such line is
/// {w, d, d'} inside C_0 with d on one arm and d' on the other, and the three
/// lines pair the arms off perfectly.
pub fn wedge_c03_structure(plane: &ProjectivePlane, wedge: &Wedge) -> bool {
    let c0: BTreeSet<Vertex> = wedge.c0.iter().copied().collect();
    let mut seen_d = BTreeSet::new();
    let mut seen_dp = BTreeSet::new();
    let mut count = 0;
    for line in plane.lines() {
        let inside: Vec<Vertex> = line.iter().copied().filter(|v| c0.contains(v)).collect();
        if inside.len() != 3 {
            continue;
        }
        count += 1;
        if !inside.contains(&wedge.w) {
            return false;
        }
        let rest: Vec<Vertex> = inside.into_iter().filter(|&v| v != wedge.w).collect();
        let (d, dp) = (rest[0], rest[1]);
        let (d, dp) = if wedge.arm_y.contains(&d) {
            (d, dp)
        } else {
            (dp, d)
        };
        if !wedge.arm_y.contains(&d) || !wedge.arm_z.contains(&dp) {
            return false;
        }
        seen_d.insert(d);
        seen_dp.insert(dp);
    }
    count == 3 && seen_d.len() == 3 && seen_dp.len() == 3
}
