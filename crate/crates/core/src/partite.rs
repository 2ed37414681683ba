//! r-partite grounds, index sets, and downward-closed partite complexes.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::density::Density;
use crate::error::{Error, Result};
use crate::hypergraph::{UniformHypergraph, Vertex};

/// An r-partite ground set: parts are contiguous vertex ranges.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PartiteGround {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl PartiteGround {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.len() > 32 {
            return Err(Error::OutOfRange(format!(
                "part count {} outside 1..=32",
                sizes.len()
            )));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::OutOfRange("empty part".into()));
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut acc = 0usize;
        for &s in &sizes {
            offsets.push(acc);
            acc += s;
        }
        if acc > Vertex::MAX as usize + 1 {
            return Err(Error::OutOfRange(format!(
                "ground set of {acc} vertices too large"
            )));
        }
        Ok(PartiteGround { sizes, offsets })
    }

    pub fn r(&self) -> usize {
        self.sizes.len()
    }

    pub fn size(&self, part: usize) -> usize {
        self.sizes[part]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn offset(&self, part: usize) -> usize {
        self.offsets[part]
    }

    pub fn total(&self) -> usize {
        self.offsets.last().unwrap() + self.sizes.last().unwrap()
    }

    pub fn part_of(&self, v: Vertex) -> usize {
        match self.offsets.binary_search(&(v as usize)) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    pub fn part_vertices(&self, part: usize) -> impl Iterator<Item = Vertex> {
        let lo = self.offsets[part];
        (lo..lo + self.sizes[part]).map(|v| v as Vertex)
    }

    pub fn local(&self, v: Vertex) -> usize {
        v as usize - self.offsets[self.part_of(v)]
    }
}

/// A subset of the part indices [r], as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct IndexSet(u32);

impl IndexSet {
    pub const EMPTY: IndexSet = IndexSet(0);

    pub fn from_mask(mask: u32) -> Self {
        IndexSet(mask)
    }

    pub fn from_parts(parts: &[usize]) -> Self {
        let mut mask = 0;
        for &p in parts {
            assert!(p < 32);
            mask |= 1 << p;
        }
        IndexSet(mask)
    }

    pub fn mask(&self) -> u32 {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn contains(&self, part: usize) -> bool {
        self.0 >> part & 1 == 1
    }

    /// Members in increasing order.
    pub fn members(&self) -> Vec<usize> {
        (0..32).filter(|&p| self.contains(p)).collect()
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn with(&self, part: usize) -> IndexSet {
        IndexSet(self.0 | 1 << part)
    }

    pub fn without(&self, part: usize) -> IndexSet {
        IndexSet(self.0 & !(1 << part))
    }

    /// All subsets, including the empty set and self.
    pub fn subsets(&self) -> impl Iterator<Item = IndexSet> {
        let mask = self.0;
        std::iter::successors(Some(0u32), move |&sub| {
            if sub == mask {
                None
            } else {
                Some((sub.wrapping_sub(mask)) & mask)
            }
        })
        .map(IndexSet)
    }

    pub fn proper_subsets(&self) -> impl Iterator<Item = IndexSet> {
        let me = *self;
        self.subsets().filter(move |s| *s != me)
    }
}

impl std::fmt::Display for IndexSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.members().iter().map(|p| (p + 1).to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// A partite tuple: one global vertex per part of its index, in part order.
pub type Tuple = Vec<Vertex>;

/// Extract the sub-tuple of `tuple` (of index `a`) at sub-index `b` ⊆ `a`.
pub fn sub_tuple(a: &IndexSet, tuple: &[Vertex], b: &IndexSet) -> Tuple {
    debug_assert!(b.is_subset_of(a));
    let mut out = Vec::with_capacity(b.len());
    for (slot, part) in a.members().into_iter().enumerate() {
        if b.contains(part) {
            out.push(tuple[slot]);
        }
    }
    out
}

/// An r-partite downward-closed set system up to level k.
///
/// Layers hold the tuples of each index; vertex layers are explicit so a
/// complex may live on a strict subset of the declared ground. The empty
/// index always holds the empty tuple and is kept implicit.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PartiteComplex {
    ground: PartiteGround,
    k: usize,
    layers: BTreeMap<IndexSet, Vec<Tuple>>,
}

impl PartiteComplex {
    pub fn new(
        ground: PartiteGround,
        k: usize,
        layers: BTreeMap<IndexSet, Vec<Tuple>>,
    ) -> Result<Self> {
        let mut c = PartiteComplex { ground, k, layers };
        for tuples in c.layers.values_mut() {
            tuples.sort_unstable();
            tuples.dedup();
        }
        c.validate()?;
        Ok(c)
    }

    /// Check tuple shapes and downward closure.
    pub fn validate(&self) -> Result<()> {
        for (a, tuples) in &self.layers {
            if a.len() > self.k {
                return Err(Error::OutOfRange(format!(
                    "layer {a} above level k={}",
                    self.k
                )));
            }
            if a.members().iter().any(|&p| p >= self.ground.r()) {
                return Err(Error::OutOfRange(format!(
                    "layer {a} outside the ground parts"
                )));
            }
            for t in tuples {
                if t.len() != a.len() {
                    return Err(Error::NotPartite(format!(
                        "tuple {t:?} has wrong arity for index {a}"
                    )));
                }
                for (slot, part) in a.members().into_iter().enumerate() {
                    let v = t[slot] as usize;
                    let lo = self.ground.offset(part);
                    if v < lo || v >= lo + self.ground.size(part) {
                        return Err(Error::NotPartite(format!(
                            "tuple {t:?} has vertex {v} outside part {}",
                            part + 1
                        )));
                    }
                }
                for b in a.proper_subsets() {
                    if b.is_empty() {
                        continue;
                    }
                    if !self.has_tuple(&b, &sub_tuple(a, t, &b)) {
                        return Err(Error::NotPartite(format!(
                            "downward closure fails: {t:?} at {a} but its {b} face is missing"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn ground(&self) -> &PartiteGround {
        &self.ground
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn indices(&self) -> impl Iterator<Item = IndexSet> + '_ {
        self.layers.keys().copied()
    }

    /// H_A. The empty index yields a single empty tuple.
    pub fn layer(&self, a: &IndexSet) -> &[Tuple] {
        const EMPTY_LAYER: &[Tuple] = &[];
        if a.is_empty() {
            // Callers treat H_∅ = {∅} via layer_count; the slice stays empty.
        }
        self.layers
            .get(a)
            .map(|v| v.as_slice())
            .unwrap_or(EMPTY_LAYER)
    }

    pub fn layer_count(&self, a: &IndexSet) -> u64 {
        if a.is_empty() {
            1
        } else {
            self.layer(a).len() as u64
        }
    }

    pub fn has_tuple(&self, a: &IndexSet, tuple: &[Vertex]) -> bool {
        if a.is_empty() {
            return tuple.is_empty();
        }
        self.layers
            .get(a)
            .map(|ts| ts.binary_search_by(|t| t.as_slice().cmp(tuple)).is_ok())
            .unwrap_or(false)
    }

    /// |K_A(X)|: the full product of part sizes.
    pub fn ambient_count(&self, a: &IndexSet) -> u128 {
        a.members()
            .iter()
            .map(|&p| self.ground.size(p) as u128)
            .product()
    }

    /// H_A*: tuples of index A all of whose proper sub-tuples lie in the
    /// complex.
    pub fn star(&self, a: &IndexSet) -> Vec<Tuple> {
        if a.is_empty() {
            return vec![Vec::new()];
        }
        let parts = a.members();
        let mut out = Vec::new();
        let mut cur: Tuple = Vec::with_capacity(parts.len());
        self.star_rec(a, &parts, 0, &mut cur, &mut out);
        out
    }

    fn star_rec(
        &self,
        a: &IndexSet,
        parts: &[usize],
        depth: usize,
        cur: &mut Tuple,
        out: &mut Vec<Tuple>,
    ) {
        if depth == parts.len() {
            let ok = a
                .proper_subsets()
                .filter(|b| !b.is_empty())
                .all(|b| self.has_tuple(&b, &sub_tuple(a, cur, &b)));
            if ok {
                out.push(cur.clone());
            }
            return;
        }
        for v in self.ground.part_vertices(parts[depth]) {
            cur.push(v);
            self.star_rec(a, parts, depth + 1, cur, out);
            cur.pop();
        }
    }

    pub fn star_count(&self, a: &IndexSet) -> u64 {
        if a.len() <= 1 {
            return self.ambient_count(a) as u64;
        }
        self.star(a).len() as u64
    }

    /// d_A(H) = |H_A| / |H_A*|; an empty star is reported as undefined,
    /// never as 0/0.
    pub fn relative_density(&self, a: &IndexSet) -> Result<Density> {
        if a.is_empty() {
            return Ok(Density::one());
        }
        let star = self.star_count(a);
        if star == 0 {
            return Err(Error::UndefinedDensity(a.to_string()));
        }
        Density::from_counts(self.layer_count(a), star)
    }

    /// |H_A| / |K_A(X)|.
    pub fn absolute_density(&self, a: &IndexSet) -> Density {
        let amb = self.ambient_count(a);
        Density::from_counts(
            num_bigint::BigInt::from(self.layer_count(a)),
            num_bigint::BigInt::from(amb),
        )
        .expect("layer inside ambient")
    }

    /// The complete complex: every layer of every index of size ≤ k is full.
    pub fn complete(ground: PartiteGround, k: usize) -> Self {
        let r = ground.r();
        let mut layers = BTreeMap::new();
        for mask in 1u32..1 << r {
            let a = IndexSet::from_mask(mask);
            if a.len() > k {
                continue;
            }
            let mut tuples = vec![Vec::new()];
            for part in a.members() {
                let mut next = Vec::new();
                for t in &tuples {
                    for v in ground.part_vertices(part) {
                        let mut t2: Tuple = t.clone();
                        t2.push(v);
                        next.push(t2);
                    }
                }
                tuples = next;
            }
            layers.insert(a, tuples);
        }
        let mut c = PartiteComplex { ground, k, layers };
        for tuples in c.layers.values_mut() {
            tuples.sort_unstable();
        }
        c
    }

    /// Restrict to chosen vertices per part (relabelled to a fresh
    /// contiguous ground). Downward closure survives restriction.
    pub fn restrict(&self, keep: &[Vec<Vertex>]) -> Result<PartiteComplex> {
        if keep.len() != self.ground.r() {
            return Err(Error::GroundMismatch(format!(
                "{} parts kept, ground has {}",
                keep.len(),
                self.ground.r()
            )));
        }
        let sizes: Vec<usize> = keep.iter().map(|k| k.len()).collect();
        let new_ground = PartiteGround::new(sizes)?;
        let mut map: BTreeMap<Vertex, Vertex> = BTreeMap::new();
        for (part, vs) in keep.iter().enumerate() {
            for (i, &v) in vs.iter().enumerate() {
                if self.ground.part_of(v) != part {
                    return Err(Error::NotPartite(format!(
                        "vertex {v} is not in part {}",
                        part + 1
                    )));
                }
                map.insert(v, (new_ground.offset(part) + i) as Vertex);
            }
        }
        let mut layers = BTreeMap::new();
        for (a, tuples) in &self.layers {
            let mut new_tuples = Vec::new();
            for t in tuples {
                if let Some(nt) = t
                    .iter()
                    .map(|v| map.get(v).copied())
                    .collect::<Option<Tuple>>()
                {
                    new_tuples.push(nt);
                }
            }
            new_tuples.sort_unstable();
            layers.insert(*a, new_tuples);
        }
        Ok(PartiteComplex {
            ground: new_ground,
            k: self.k,
            layers,
        })
    }
}

/// Read the parts an edge touches; errors if two vertices share a part.
pub fn edge_index(ground: &PartiteGround, edge: &[Vertex]) -> Result<IndexSet> {
    let mut a = IndexSet::EMPTY;
    for &v in edge {
        let p = ground.part_of(v);
        if a.contains(p) {
            return Err(Error::NotPartite(format!(
                "edge {edge:?} has two vertices in part {}",
                p + 1
            )));
        }
        a = a.with(p);
    }
    Ok(a)
}

/// H^≤: the downward closure of a partite k-graph, with the vertex layers
/// taken to be the declared parts in full.
pub fn generated_complex(h: &UniformHypergraph, ground: &PartiteGround) -> Result<PartiteComplex> {
    closure_complex(h, ground, true)
}

/// H^<: the closure without the top layer.
pub fn strict_subsets_complex(
    h: &UniformHypergraph,
    ground: &PartiteGround,
) -> Result<PartiteComplex> {
    closure_complex(h, ground, false)
}

fn closure_complex(
    h: &UniformHypergraph,
    ground: &PartiteGround,
    keep_top: bool,
) -> Result<PartiteComplex> {
    if ground.total() != h.n() {
        return Err(Error::GroundMismatch(format!(
            "ground has {} vertices, hypergraph has {}",
            ground.total(),
            h.n()
        )));
    }
    let mut layers: BTreeMap<IndexSet, Vec<Tuple>> = BTreeMap::new();
    for part in 0..ground.r() {
        layers.insert(
            IndexSet::from_parts(&[part]),
            ground.part_vertices(part).map(|v| vec![v]).collect(),
        );
    }
    for e in h.edges() {
        let a = edge_index(ground, e)?;
        for b in a.subsets() {
            if b.len() < 2 {
                continue;
            }
            if !keep_top && b == a {
                continue;
            }
            let t = sub_tuple(&a, e, &b);
            layers.entry(b).or_default().push(t);
        }
    }
    let k = if keep_top {
        h.k()
    } else {
        h.k().saturating_sub(1)
    }
    .max(1);
    PartiteComplex::new(ground.clone(), k, layers)
}

/// Write the complex text format: a header, the part sizes, then each layer
/// with its tuples.
pub fn write_complex(w: &mut impl Write, c: &PartiteComplex) -> Result<()> {
    writeln!(w, "complex {} {}", c.ground().r(), c.k())?;
    let sizes: Vec<String> = c.ground().sizes().iter().map(|s| s.to_string()).collect();
    writeln!(w, "parts {}", sizes.join(" "))?;
    for a in c.indices() {
        let parts: Vec<String> = a.members().iter().map(|p| (p + 1).to_string()).collect();
        writeln!(w, "layer {} {}", parts.join(","), c.layer(&a).len())?;
        for t in c.layer(&a) {
            let vs: Vec<String> = t.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", vs.join(" "))?;
        }
    }
    Ok(())
}

pub fn read_complex(r: &mut impl BufRead) -> Result<PartiteComplex> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty complex input".into()))??;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 || head[0] != "complex" {
        return Err(Error::Parse(format!("bad complex header {header:?}")));
    }
    let r_parts: usize = head[1]
        .parse()
        .map_err(|_| Error::Parse("bad part count".into()))?;
    let k: usize = head[2]
        .parse()
        .map_err(|_| Error::Parse("bad level".into()))?;
    let parts_line = lines
        .next()
        .ok_or_else(|| Error::Parse("missing parts line".into()))??;
    let mut words = parts_line.split_whitespace();
    if words.next() != Some("parts") {
        return Err(Error::Parse("expected parts line".into()));
    }
    let sizes: Vec<usize> = words
        .map(|w| {
            w.parse()
                .map_err(|_| Error::Parse(format!("bad part size {w:?}")))
        })
        .collect::<Result<_>>()?;
    if sizes.len() != r_parts {
        return Err(Error::Parse("part count mismatch".into()));
    }
    let ground = PartiteGround::new(sizes)?;
    let mut layers: BTreeMap<IndexSet, Vec<Tuple>> = BTreeMap::new();
    let mut pending: Option<(IndexSet, usize)> = None;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if line.trim_start().starts_with("layer") {
            let ws: Vec<&str> = line.split_whitespace().collect();
            if ws.len() != 3 {
                return Err(Error::Parse(format!("bad layer line {line:?}")));
            }
            let parts: Vec<usize> = ws[1]
                .split(',')
                .map(|t| {
                    t.parse::<usize>()
                        .ok()
                        .and_then(|p| p.checked_sub(1))
                        .ok_or_else(|| Error::Parse(format!("bad layer index {t:?}")))
                })
                .collect::<Result<_>>()?;
            let count: usize = ws[2]
                .parse()
                .map_err(|_| Error::Parse("bad layer count".into()))?;
            let a = IndexSet::from_parts(&parts);
            layers.entry(a).or_default();
            pending = Some((a, count));
            continue;
        }
        let (a, remaining) = pending
            .as_mut()
            .ok_or_else(|| Error::Parse("tuple before any layer line".into()))?;
        if *remaining == 0 {
            return Err(Error::Parse("more tuples than the layer declared".into()));
        }
        let t: Tuple = line
            .split_whitespace()
            .map(|w| {
                w.parse::<Vertex>()
                    .map_err(|_| Error::Parse(format!("bad vertex {w:?}")))
            })
            .collect::<Result<_>>()?;
        layers.get_mut(a).unwrap().push(t);
        *remaining -= 1;
    }
    PartiteComplex::new(ground, k, layers)
}
