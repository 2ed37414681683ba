//! k-uniform hypergraphs over dense integer vertex labels.

use std::io::{BufRead, Write};

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::combinatorics::combinations;
use crate::density::Density;
use crate::error::{Error, Result};

pub type Vertex = u16;
pub type Edge = Vec<Vertex>;

/// A k-uniform hypergraph on vertices `0..n`.
///
/// Edges are kept sorted within each edge and lexicographically across
/// edges, so two hypergraphs are equal exactly when their serialised
/// forms are equal.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UniformHypergraph {
    n: usize,
    k: usize,
    edges: Vec<Edge>,
}

impl UniformHypergraph {
    pub fn new(n: usize, k: usize, mut edges: Vec<Edge>) -> Result<Self> {
        if n > Vertex::MAX as usize + 1 {
            return Err(Error::OutOfRange(format!("vertex count {n} too large")));
        }
        for e in edges.iter_mut() {
            e.sort_unstable();
            if e.len() != k {
                return Err(Error::InvalidArity(format!(
                    "edge {:?} has {} vertices, expected {k}",
                    e,
                    e.len()
                )));
            }
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Parse(format!("repeated vertex in edge {e:?}")));
            }
            if let Some(&v) = e.last() {
                if v as usize >= n {
                    return Err(Error::OutOfRange(format!("vertex {v} out of range 0..{n}")));
                }
            }
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parse("duplicate edge".into()));
        }
        Ok(UniformHypergraph { n, k, edges })
    }

    pub fn empty(n: usize, k: usize) -> Self {
        UniformHypergraph {
            n,
            k,
            edges: Vec::new(),
        }
    }

    /// All k-subsets of the vertex set.
    pub fn complete(n: usize, k: usize) -> Self {
        let edges = combinations(n, k)
            .map(|c| c.iter().map(|&v| v as Vertex).collect())
            .collect();
        UniformHypergraph { n, k, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Membership test; `edge` need not be sorted.
    pub fn has_edge(&self, edge: &[Vertex]) -> bool {
        if edge.len() != self.k {
            return false;
        }
        let mut e = edge.to_vec();
        e.sort_unstable();
        if e.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        self.edges.binary_search(&e).is_ok()
    }

    /// N_H(S): the (k-|S|)-sets T disjoint from S with S ∪ T an edge.
    pub fn neighborhood(&self, s: &[Vertex]) -> Result<Vec<Edge>> {
        if s.len() > self.k {
            return Err(Error::InvalidArity(format!(
                "neighbourhood of a {}-set in a {}-graph",
                s.len(),
                self.k
            )));
        }
        let mut s = s.to_vec();
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parse(format!("repeated vertex in set {s:?}")));
        }
        if s.iter().any(|&v| v as usize >= self.n) {
            return Err(Error::OutOfRange(format!(
                "set {s:?} not inside 0..{}",
                self.n
            )));
        }
        let mut out = Vec::new();
        for e in &self.edges {
            if is_subset(&s, e) {
                out.push(e.iter().copied().filter(|v| !s.contains(v)).collect());
            }
        }
        Ok(out)
    }

    pub fn degree(&self, s: &[Vertex]) -> Result<u64> {
        Ok(self.neighborhood(s)?.len() as u64)
    }

    /// δ_s(H): the minimum degree over all s-subsets of the vertex set.
    /// For s = 0 this is the edge count.
    pub fn min_s_degree(&self, s: usize) -> Result<u64> {
        if s > self.k {
            return Err(Error::InvalidArity(format!(
                "s-degree with s={s} exceeds uniformity {}",
                self.k
            )));
        }
        if s == 0 {
            return Ok(self.edges.len() as u64);
        }
        if self.n < s {
            return Err(Error::OutOfRange(format!(
                "no {s}-subsets in a {}-vertex graph",
                self.n
            )));
        }
        let subsets: Vec<Vec<usize>> = combinations(self.n, s).collect();
        let min = subsets
            .par_iter()
            .map(|c| {
                let set: Vec<Vertex> = c.iter().map(|&v| v as Vertex).collect();
                self.edges.iter().filter(|e| is_subset(&set, e)).count() as u64
            })
            .min()
            .unwrap_or(0);
        Ok(min)
    }

    /// H[X]: the sub-hypergraph induced on `x`, relabelled to 0..|x|-1 in the
    /// order given.
    pub fn restriction(&self, x: &[Vertex]) -> Result<UniformHypergraph> {
        let mut map = vec![None; self.n];
        for (new, &old) in x.iter().enumerate() {
            if old as usize >= self.n {
                return Err(Error::OutOfRange(format!(
                    "vertex {old} outside ground set"
                )));
            }
            if map[old as usize].is_some() {
                return Err(Error::Parse(format!(
                    "repeated vertex {old} in restriction"
                )));
            }
            map[old as usize] = Some(new as Vertex);
        }
        let mut edges = Vec::new();
        for e in &self.edges {
            let img: Option<Edge> = e.iter().map(|&v| map[v as usize]).collect();
            if let Some(mut img) = img {
                img.sort_unstable();
                edges.push(img);
            }
        }
        edges.sort_unstable();
        Ok(UniformHypergraph {
            n: x.len(),
            k: self.k,
            edges,
        })
    }

    /// d(H) = k! |E| n^{-k}, exact.
    pub fn edge_density(&self) -> Result<Density> {
        if self.n < self.k {
            return Err(Error::OutOfRange(format!(
                "density needs n >= k, got n={} k={}",
                self.n, self.k
            )));
        }
        let mut num = BigInt::from(self.edges.len());
        for i in 1..=self.k {
            num *= BigInt::from(i);
        }
        let den = BigInt::from(self.n).pow(self.k as u32);
        Density::from_counts(num, den)
    }

    /// Support rows: for every nonempty proper subset S of an edge, the bit
    /// row of vertices v with S ∪ {v} inside some edge. The search kernels
    /// use these to cut candidate sets as soon as an edge is partially
    /// mapped.
    pub fn completion_subset_rows(&self) -> std::collections::BTreeMap<Edge, crate::bits::BitRow> {
        let mut rows: std::collections::BTreeMap<Edge, crate::bits::BitRow> =
            std::collections::BTreeMap::new();
        for e in &self.edges {
            for mask in 1..(1u32 << self.k) - 1 {
                let sub: Edge = (0..self.k)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| e[i])
                    .collect();
                let row = rows
                    .entry(sub)
                    .or_insert_with(|| crate::bits::BitRow::zeros(self.n));
                for i in 0..self.k {
                    if mask >> i & 1 == 0 {
                        row.set(e[i] as usize);
                    }
                }
            }
        }
        rows
    }
}

/// Is sorted `a` a subset of sorted `b`?
pub fn is_subset(a: &[Vertex], b: &[Vertex]) -> bool {
    let mut it = b.iter();
    'outer: for x in a {
        for y in it.by_ref() {
            match y.cmp(x) {
                std::cmp::Ordering::Less => continue,
                std::cmp::Ordering::Equal => continue 'outer,
                std::cmp::Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

/// Write the hypergraph text format: header `k n m`, an optional
/// `parts s_1 .. s_r` line, then one sorted edge per line.
pub fn write_hypergraph(
    w: &mut impl Write,
    h: &UniformHypergraph,
    parts: Option<&[usize]>,
) -> Result<()> {
    writeln!(w, "{} {} {}", h.k(), h.n(), h.edge_count())?;
    if let Some(sizes) = parts {
        let words: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
        writeln!(w, "parts {}", words.join(" "))?;
    }
    for e in h.edges() {
        let words: Vec<String> = e.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", words.join(" "))?;
    }
    Ok(())
}

/// Parse the hypergraph text format. Returns the graph and the declared
/// contiguous part sizes, when present.
pub fn read_hypergraph(r: &mut impl BufRead) -> Result<(UniformHypergraph, Option<Vec<usize>>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty input".into()))??;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 {
        return Err(Error::Parse(format!(
            "bad header {header:?}, expected 'k n m'"
        )));
    }
    let k: usize = head[0]
        .parse()
        .map_err(|_| Error::Parse(format!("bad k in header {header:?}")))?;
    let n: usize = head[1]
        .parse()
        .map_err(|_| Error::Parse(format!("bad n in header {header:?}")))?;
    let m: usize = head[2]
        .parse()
        .map_err(|_| Error::Parse(format!("bad m in header {header:?}")))?;

    let mut parts = None;
    let mut edges = Vec::with_capacity(m);
    let mut pending: Option<String> = None;
    if m > 0 || true {
        if let Some(line) = lines.next() {
            let line = line?;
            if line.trim_start().starts_with("parts") {
                let sizes: Result<Vec<usize>> = line
                    .split_whitespace()
                    .skip(1)
                    .map(|w| {
                        w.parse::<usize>()
                            .map_err(|_| Error::Parse(format!("bad part size {w:?}")))
                    })
                    .collect();
                let sizes = sizes?;
                if sizes.iter().sum::<usize>() != n {
                    return Err(Error::Parse(format!(
                        "part sizes {:?} do not sum to n={n}",
                        sizes
                    )));
                }
                if sizes.iter().any(|&s| s == 0) {
                    return Err(Error::Parse("empty part".into()));
                }
                parts = Some(sizes);
            } else {
                pending = Some(line);
            }
        }
    }
    let mut take = |line: String| -> Result<()> {
        if line.trim().is_empty() {
            return Ok(());
        }
        let vs: Result<Edge> = line
            .split_whitespace()
            .map(|w| {
                w.parse::<Vertex>()
                    .map_err(|_| Error::Parse(format!("bad vertex {w:?}")))
            })
            .collect();
        edges.push(vs?);
        Ok(())
    };
    if let Some(line) = pending {
        take(line)?;
    }
    for line in lines {
        take(line?)?;
    }
    if edges.len() != m {
        return Err(Error::Parse(format!(
            "header promised {m} edges, found {}",
            edges.len()
        )));
    }
    Ok((UniformHypergraph::new(n, k, edges)?, parts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete_bipartite_3graph_8() -> UniformHypergraph {
        // Parts {0..4} and {4..8}; all triples meeting both.
        let mut edges = Vec::new();
        for c in combinations(8, 3) {
            let inside_a = c.iter().filter(|&&v| v < 4).count();
            if inside_a != 0 && inside_a != 3 {
                edges.push(c.iter().map(|&v| v as Vertex).collect());
            }
        }
        UniformHypergraph::new(8, 3, edges).unwrap()
    }

    #[test]
    fn neighborhood_complete() {
        let h = UniformHypergraph::complete(4, 3);
        let n = h.neighborhood(&[0, 1]).unwrap();
        assert_eq!(n, vec![vec![2], vec![3]]);
    }

    #[test]
    fn neighborhood_bipartite_within_part_pair() {
        let h = complete_bipartite_3graph_8();
        let mut n = h.neighborhood(&[0, 1]).unwrap();
        n.sort();
        assert_eq!(n, vec![vec![4], vec![5], vec![6], vec![7]]);
    }

    #[test]
    fn neighborhood_arity_error() {
        let h = UniformHypergraph::complete(4, 3);
        assert!(h.neighborhood(&[0, 1, 2, 3]).is_err());
    }

    #[test]
    fn min_degree_cases() {
        let h = complete_bipartite_3graph_8();
        assert_eq!(h.min_s_degree(2).unwrap(), 4);
        let e = UniformHypergraph::empty(6, 3);
        assert_eq!(e.min_s_degree(1).unwrap(), 0);
        assert_eq!(e.min_s_degree(0).unwrap(), 0);
        assert!(h.min_s_degree(4).is_err());
    }

    #[test]
    fn restriction_cases() {
        let h = complete_bipartite_3graph_8();
        let all: Vec<Vertex> = (0..8).collect();
        assert_eq!(h.restriction(&all).unwrap(), h);
        let part = h.restriction(&[0, 1, 2, 3]).unwrap();
        assert_eq!(part.edge_count(), 0);
    }

    #[test]
    fn restriction_edges_induced_two_ways() {
        let h = complete_bipartite_3graph_8();
        let x: Vec<Vertex> = vec![0, 1, 4, 5, 6];
        let r = h.restriction(&x).unwrap();
        let direct = h
            .edges()
            .iter()
            .filter(|e| e.iter().all(|v| x.contains(v)))
            .count();
        assert_eq!(r.edge_count(), direct);
    }

    #[test]
    fn density_exact() {
        let h = UniformHypergraph::complete(5, 3);
        let d = h.edge_density().unwrap();
        assert_eq!(d.to_string(), "12/25");
        let e = UniformHypergraph::empty(5, 3);
        assert!(e.edge_density().unwrap().is_zero());
        assert!(UniformHypergraph::empty(2, 3).edge_density().is_err());
    }

    #[test]
    fn format_round_trip() {
        let h = complete_bipartite_3graph_8();
        let mut buf = Vec::new();
        write_hypergraph(&mut buf, &h, Some(&[4, 4])).unwrap();
        let (back, parts) = read_hypergraph(&mut buf.as_slice()).unwrap();
        assert_eq!(back, h);
        assert_eq!(parts, Some(vec![4, 4]));
    }

    #[test]
    fn rejects_malformed() {
        assert!(UniformHypergraph::new(4, 3, vec![vec![0, 1]]).is_err());
        assert!(UniformHypergraph::new(4, 3, vec![vec![0, 1, 4]]).is_err());
        assert!(UniformHypergraph::new(4, 3, vec![vec![0, 1, 1]]).is_err());
        assert!(
            UniformHypergraph::new(4, 3, vec![vec![0, 1, 2], vec![2, 1, 0]]).is_err(),
            "duplicate edges must be rejected"
        );
    }
}
