//! Exact subhypergraph containment and embedding counts.
//!
//! The search is a pruned backtracking over injective partite-free maps:
//! pattern vertices are placed in a fail-fast order, candidate sets are bit
//! rows, and every subset of a host edge contributes a support row so that
//! partially mapped pattern edges cut candidates as early as possible.
//! "Budget exhausted" is a first-class verdict, distinct from "no copy":
//! a freeness claim is only ever made after a complete search.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::bits::BitRow;
use crate::budget::{Budget, BudgetCounter};
use crate::error::{Error, Result};
use crate::hypergraph::{Edge, UniformHypergraph, Vertex};
use crate::parallel::Parallelism;

/// Outcome of a containment search.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SearchVerdict {
    /// An injective homomorphism, indexed by pattern vertex.
    Embedding(Vec<Vertex>),
    NoCopy,
    BudgetExhausted,
}

/// A containment verdict together with search statistics. Any embedding
/// carried here has been revalidated against both hypergraphs, independently
/// of the search that produced it.
#[derive(Clone, Debug)]
pub struct EmbeddingCertificate {
    pub verdict: SearchVerdict,
    pub nodes_expanded: u64,
}

impl EmbeddingCertificate {
    pub fn found(&self) -> bool {
        matches!(self.verdict, SearchVerdict::Embedding(_))
    }

    pub fn is_free(&self) -> bool {
        matches!(self.verdict, SearchVerdict::NoCopy)
    }
}

/// Check that `map` (indexed by pattern vertex) is injective and sends every
/// pattern edge to a host edge.
pub fn validate_embedding(
    host: &UniformHypergraph,
    pattern: &UniformHypergraph,
    map: &[Vertex],
) -> bool {
    if map.len() != pattern.n() {
        return false;
    }
    let mut seen = vec![false; host.n()];
    for &v in map {
        if v as usize >= host.n() || seen[v as usize] {
            return false;
        }
        seen[v as usize] = true;
    }
    pattern.edges().iter().all(|e| {
        let img: Vec<Vertex> = e.iter().map(|&u| map[u as usize]).collect();
        host.has_edge(&img)
    })
}

struct SearchCtx<'a> {
    host: &'a UniformHypergraph,
    pattern: &'a UniformHypergraph,
    /// depth -> pattern vertex
    order: Vec<usize>,
    /// pattern vertex -> depth
    pos: Vec<usize>,
    /// pattern vertex -> ids of pattern edges through it
    edges_through: Vec<Vec<usize>>,
    /// first depth from which all remaining pattern vertices are isolated
    free_tail: usize,
    /// support rows: for a nonempty proper subset S of some host edge, the
    /// vertices v with S ∪ {v} inside a host edge
    supp: BTreeMap<Edge, BitRow>,
    /// verified interchangeability classes for orbit pruning (existence
    /// searches only): unused vertices within a class are equivalent, so
    /// only the first unused one per class is branched on
    classes: Option<Vec<Vec<Vertex>>>,
    counter: BudgetCounter,
}

enum Dfs {
    Found(Vec<Vertex>),
    NotFound,
    Exhausted,
}

impl<'a> SearchCtx<'a> {
    fn new(
        host: &'a UniformHypergraph,
        pattern: &'a UniformHypergraph,
        budget: Budget,
        pins: &[(usize, Vertex)],
    ) -> Result<Self> {
        if host.k() != pattern.k() {
            return Err(Error::InvalidArity(format!(
                "uniformity mismatch: host k={} pattern k={}",
                host.k(),
                pattern.k()
            )));
        }
        let t = pattern.n();
        let mut edges_through = vec![Vec::new(); t];
        for (i, e) in pattern.edges().iter().enumerate() {
            for &u in e {
                edges_through[u as usize].push(i);
            }
        }
        let order = search_order(pattern, &edges_through, pins);
        let mut pos = vec![0usize; t];
        for (d, &u) in order.iter().enumerate() {
            pos[u] = d;
        }
        let mut free_tail = t;
        while free_tail > 0 && edges_through[order[free_tail - 1]].is_empty() {
            free_tail -= 1;
        }
        Ok(SearchCtx {
            host,
            pattern,
            order,
            pos,
            edges_through,
            free_tail,
            supp: host.completion_subset_rows(),
            classes: None,
            counter: BudgetCounter::new(budget),
        })
    }

    /// Candidates actually branched on at a node: with orbit pruning, the
    /// first unused vertex of each class that survives the row; otherwise
    /// every unused vertex of the row.
    fn branch_candidates(&self, row: &BitRow, used: &BitRow) -> Vec<usize> {
        match &self.classes {
            Some(classes) => {
                let mut out = Vec::with_capacity(classes.len());
                for class in classes {
                    if let Some(&rep) = class.iter().find(|&&v| !used.get(v as usize)) {
                        if row.get(rep as usize) {
                            out.push(rep as usize);
                        }
                    }
                }
                out.sort_unstable();
                out
            }
            None => row.iter_ones().filter(|&v| !used.get(v)).collect(),
        }
    }

    fn initial_candidates(&self) -> Vec<BitRow> {
        let n = self.host.n();
        let mut host_deg = vec![0usize; n];
        for e in self.host.edges() {
            for &v in e {
                host_deg[v as usize] += 1;
            }
        }
        self.order
            .iter()
            .map(|&u| {
                let need = self.edges_through[u].len();
                let mut row = BitRow::zeros(n);
                for v in 0..n {
                    if host_deg[v] >= need {
                        row.set(v);
                    }
                }
                row
            })
            .collect()
    }

    /// Assign order[depth] -> v and propagate edge constraints into the
    /// candidate rows of deeper positions. Returns None on contradiction.
    fn apply(
        &self,
        depth: usize,
        v: Vertex,
        cand: &[BitRow],
        assign: &mut [Vertex],
    ) -> Option<Vec<BitRow>> {
        let p = self.order[depth];
        assign[p] = v;
        let mut next = cand.to_vec();
        for &ei in &self.edges_through[p] {
            let e = &self.pattern.edges()[ei];
            let mut mapped: Vec<Vertex> = Vec::with_capacity(e.len());
            let mut unmapped: Vec<usize> = Vec::new();
            for &u in e {
                let d = self.pos[u as usize];
                if d <= depth {
                    mapped.push(assign[u as usize]);
                } else {
                    unmapped.push(d);
                }
            }
            mapped.sort_unstable();
            if unmapped.is_empty() {
                if !self.host.has_edge(&mapped) {
                    return None;
                }
            } else {
                match self.supp.get(&mapped) {
                    None => return None,
                    Some(row) => {
                        for d in unmapped {
                            next[d].and_assign(row);
                            if next[d].is_empty() {
                                return None;
                            }
                        }
                    }
                }
            }
        }
        Some(next)
    }

    fn dfs_find(
        &self,
        depth: usize,
        cand: &[BitRow],
        used: &BitRow,
        assign: &mut Vec<Vertex>,
        abort: Option<(&AtomicUsize, usize)>,
    ) -> Dfs {
        if depth >= self.free_tail {
            // Only isolated pattern vertices remain: greedily take the
            // smallest unused hosts.
            let mut used = used.clone();
            for d in depth..self.order.len() {
                let mut pick = None;
                for v in cand[d].iter_ones() {
                    if !used.get(v) {
                        pick = Some(v);
                        break;
                    }
                }
                match pick {
                    Some(v) => {
                        used.set(v);
                        assign[self.order[d]] = v as Vertex;
                    }
                    None => return Dfs::NotFound,
                }
            }
            return Dfs::Found(assign.clone());
        }
        if let Some((best, my_idx)) = abort {
            if best.load(Ordering::Relaxed) < my_idx {
                return Dfs::NotFound;
            }
        }
        for v in self.branch_candidates(&cand[depth], used) {
            if !self.counter.consume(1) {
                return Dfs::Exhausted;
            }
            if let Some(next) = self.apply(depth, v as Vertex, cand, assign) {
                let mut used2 = used.clone();
                used2.set(v);
                match self.dfs_find(depth + 1, &next, &used2, assign, abort) {
                    Dfs::NotFound => {}
                    other => return other,
                }
            }
        }
        Dfs::NotFound
    }

    fn dfs_count(
        &self,
        depth: usize,
        cand: &[BitRow],
        used: &BitRow,
        assign: &mut Vec<Vertex>,
    ) -> Option<u128> {
        if depth >= self.free_tail {
            // Isolated tail: any injective choice of unused candidates works;
            // tail candidate rows are untouched full rows, so this is a
            // falling factorial over the unused count.
            let free = (self.host.n() - depth) as u128;
            let tail = (self.order.len() - depth) as u128;
            let mut acc: u128 = 1;
            for i in 0..tail {
                acc *= free - i;
            }
            return Some(acc);
        }
        let mut total: u128 = 0;
        for v in cand[depth].iter_ones() {
            if used.get(v) {
                continue;
            }
            if !self.counter.consume(1) {
                return None;
            }
            if let Some(next) = self.apply(depth, v as Vertex, cand, assign) {
                let mut used2 = used.clone();
                used2.set(v);
                total += self.dfs_count(depth + 1, &next, &used2, assign)?;
            }
        }
        Some(total)
    }
}

/// Fail-fast placement order: repeatedly pick the unplaced vertex whose
/// pattern edges are most anchored in the prefix, breaking ties towards high
/// degree, then low label. Pinned vertices come first in the given order.
fn search_order(
    pattern: &UniformHypergraph,
    edges_through: &[Vec<usize>],
    pins: &[(usize, Vertex)],
) -> Vec<usize> {
    let t = pattern.n();
    let mut placed = vec![false; t];
    let mut order = Vec::with_capacity(t);
    for &(p, _) in pins {
        placed[p] = true;
        order.push(p);
    }
    let mut placed_in_edge = vec![0usize; pattern.edge_count()];
    for &p in &order {
        for &ei in &edges_through[p] {
            placed_in_edge[ei] += 1;
        }
    }
    while order.len() < t {
        let mut best: Option<(usize, usize, std::cmp::Reverse<usize>, usize)> = None;
        for u in 0..t {
            if placed[u] {
                continue;
            }
            let anchor: usize = edges_through[u]
                .iter()
                .map(|&ei| placed_in_edge[ei] * placed_in_edge[ei])
                .sum();
            let key = (anchor, edges_through[u].len(), std::cmp::Reverse(u), u);
            if best.map_or(true, |b| key > (b.0, b.1, b.2, b.3)) {
                best = Some(key);
            }
        }
        let u = best.unwrap().3;
        placed[u] = true;
        for &ei in &edges_through[u] {
            placed_in_edge[ei] += 1;
        }
        order.push(u);
    }
    order
}

/// Search for an injective homomorphism from `pattern` into `host`.
///
/// The first-level branches run in parallel; the verdict and any returned
/// embedding are independent of the thread count (the lowest first-level
/// branch containing an embedding always wins).
pub fn contains_copy(
    host: &UniformHypergraph,
    pattern: &UniformHypergraph,
    budget: Budget,
    par: &Parallelism,
) -> Result<EmbeddingCertificate> {
    contains_copy_inner(host, pattern, budget, par, None)
}

/// Containment search with orbit pruning: `classes` partitions the host
/// vertices into groups whose internal permutations are automorphisms
/// (verified here before use). At every node only the first unused vertex
/// of each class is branched on, which is complete for existence: any
/// embedding can be rewritten onto class representatives by composing with
/// an automorphism that fixes the vertices already used.
pub fn contains_copy_with_symmetry(
    host: &UniformHypergraph,
    pattern: &UniformHypergraph,
    classes: &[Vec<Vertex>],
    budget: Budget,
    par: &Parallelism,
) -> Result<EmbeddingCertificate> {
    verify_interchangeable(host, classes)?;
    contains_copy_inner(host, pattern, budget, par, Some(classes.to_vec()))
}

/// Check that permuting vertices inside each class preserves the edge set:
/// adjacent transpositions generate the full symmetric group per class.
fn verify_interchangeable(host: &UniformHypergraph, classes: &[Vec<Vertex>]) -> Result<()> {
    let mut seen = vec![false; host.n()];
    for class in classes {
        for &v in class {
            if v as usize >= host.n() || seen[v as usize] {
                return Err(Error::OutOfRange(format!(
                    "symmetry classes must partition the host vertices; vertex {v} repeats or overflows"
                )));
            }
            seen[v as usize] = true;
        }
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::OutOfRange(
            "symmetry classes must cover every host vertex".into(),
        ));
    }
    for class in classes {
        for w in class.windows(2) {
            let (a, b) = (w[0], w[1]);
            for e in host.edges() {
                if e.contains(&a) != e.contains(&b) {
                    let swapped: Vec<Vertex> = e
                        .iter()
                        .map(|&v| {
                            if v == a {
                                b
                            } else if v == b {
                                a
                            } else {
                                v
                            }
                        })
                        .collect();
                    if !host.has_edge(&swapped) {
                        return Err(Error::OutOfRange(format!(
                            "vertices {a} and {b} are not interchangeable in the host"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

fn contains_copy_inner(
    host: &UniformHypergraph,
    pattern: &UniformHypergraph,
    budget: Budget,
    par: &Parallelism,
    classes: Option<Vec<Vec<Vertex>>>,
) -> Result<EmbeddingCertificate> {
    let mut ctx = SearchCtx::new(host, pattern, budget, &[])?;
    ctx.classes = classes;
    let ctx = ctx;
    if pattern.n() > host.n() {
        return Ok(EmbeddingCertificate {
            verdict: SearchVerdict::NoCopy,
            nodes_expanded: 0,
        });
    }
    if pattern.n() == 0 {
        return Ok(EmbeddingCertificate {
            verdict: SearchVerdict::Embedding(Vec::new()),
            nodes_expanded: 0,
        });
    }
    let cand = ctx.initial_candidates();
    let used = BitRow::zeros(host.n());

    let first: Vec<usize> = ctx.branch_candidates(&cand[0], &used);
    let best = AtomicUsize::new(usize::MAX);
    let branch_results: Vec<Dfs> = par.install(|| {
        first
            .par_iter()
            .enumerate()
            .map(|(idx, &v)| {
                if best.load(Ordering::Relaxed) < idx {
                    return Dfs::NotFound;
                }
                if !ctx.counter.consume(1) {
                    return Dfs::Exhausted;
                }
                let mut assign = vec![0 as Vertex; pattern.n()];
                match ctx.apply(0, v as Vertex, &cand, &mut assign) {
                    None => Dfs::NotFound,
                    Some(next) => {
                        let mut used2 = used.clone();
                        used2.set(v);
                        let r = ctx.dfs_find(1, &next, &used2, &mut assign, Some((&best, idx)));
                        if matches!(r, Dfs::Found(_)) {
                            best.fetch_min(idx, Ordering::Relaxed);
                        }
                        r
                    }
                }
            })
            .collect()
    });

    let mut exhausted = false;
    for r in branch_results {
        match r {
            Dfs::Found(map) => {
                if !validate_embedding(host, pattern, &map) {
                    return Err(Error::Internal(
                        "search produced an embedding that fails revalidation".into(),
                    ));
                }
                return Ok(EmbeddingCertificate {
                    verdict: SearchVerdict::Embedding(map),
                    nodes_expanded: ctx.counter.used(),
                });
            }
            Dfs::Exhausted => exhausted = true,
            Dfs::NotFound => {}
        }
    }
    Ok(EmbeddingCertificate {
        verdict: if exhausted {
            SearchVerdict::BudgetExhausted
        } else {
            SearchVerdict::NoCopy
        },
        nodes_expanded: ctx.counter.used(),
    })
}

/// Count injective homomorphisms from `pattern` into `host` exactly.
pub fn count_embeddings(
    host: &UniformHypergraph,
    pattern: &UniformHypergraph,
    budget: Budget,
    par: &Parallelism,
) -> Result<u128> {
    if pattern.n() > host.n() {
        return Ok(0);
    }
    let ctx = SearchCtx::new(host, pattern, budget, &[])?;
    if pattern.n() == 0 {
        return Ok(1);
    }
    let cand = ctx.initial_candidates();
    let used = BitRow::zeros(host.n());
    if ctx.free_tail == 0 {
        // Entirely isolated pattern.
        let mut assign = vec![0 as Vertex; pattern.n()];
        return ctx
            .dfs_count(0, &cand, &used, &mut assign)
            .ok_or(Error::BudgetExceeded {
                needed: ctx.counter.used() as u128,
                budget: budget.limit(),
            });
    }
    let first: Vec<usize> = cand[0].iter_ones().collect();
    let branch_counts: Vec<Option<u128>> = par.install(|| {
        first
            .par_iter()
            .map(|&v| {
                if !ctx.counter.consume(1) {
                    return None;
                }
                let mut assign = vec![0 as Vertex; pattern.n()];
                match ctx.apply(0, v as Vertex, &cand, &mut assign) {
                    None => Some(0),
                    Some(next) => {
                        let mut used2 = used.clone();
                        used2.set(v);
                        ctx.dfs_count(1, &next, &used2, &mut assign)
                    }
                }
            })
            .collect()
    });
    let mut total: u128 = 0;
    for c in branch_counts {
        match c {
            Some(c) => total += c,
            None => {
                return Err(Error::BudgetExceeded {
                    needed: ctx.counter.used() as u128,
                    budget: budget.limit(),
                })
            }
        }
    }
    Ok(total)
}

/// Does `host` contain a copy of `pattern` in which some pattern edge maps
/// onto the host edge `through`? Used for incremental freeness checks when
/// toggling single edges.
pub fn contains_copy_through(
    host: &UniformHypergraph,
    pattern: &UniformHypergraph,
    through: &[Vertex],
    budget: Budget,
) -> Result<bool> {
    let k = host.k();
    debug_assert_eq!(through.len(), k);
    let mut perm: Vec<usize> = (0..k).collect();
    // For each pattern edge and each bijection of it onto `through`.
    for ei in 0..pattern.edge_count() {
        let e = pattern.edges()[ei].clone();
        perm.sort_unstable();
        loop {
            let pins: Vec<(usize, Vertex)> =
                (0..k).map(|i| (e[i] as usize, through[perm[i]])).collect();
            let ctx = SearchCtx::new(host, pattern, budget, &pins)?;
            let cand = ctx.initial_candidates();
            let mut used = BitRow::zeros(host.n());
            let mut assign = vec![0 as Vertex; pattern.n()];
            let mut state = Some(cand);
            for (d, &(_, hv)) in pins.iter().enumerate() {
                let cur = state.take().unwrap();
                if used.get(hv as usize) || !cur[d].get(hv as usize) {
                    state = None;
                    break;
                }
                match ctx.apply(d, hv, &cur, &mut assign) {
                    Some(next) => {
                        used.set(hv as usize);
                        state = Some(next);
                    }
                    None => {
                        state = None;
                        break;
                    }
                }
            }
            if let Some(cur) = state {
                match ctx.dfs_find(pins.len(), &cur, &used, &mut assign, None) {
                    Dfs::Found(_) => return Ok(true),
                    Dfs::Exhausted => {
                        return Err(Error::BudgetExceeded {
                            needed: ctx.counter.used() as u128,
                            budget: budget.limit(),
                        })
                    }
                    Dfs::NotFound => {}
                }
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
    }
    Ok(false)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::combinations;

    pub fn fano() -> UniformHypergraph {
        // Cyclic model: lines {1,2,4}+x mod 7.
        let edges = (0..7u16)
            .map(|x| vec![(1 + x) % 7, (2 + x) % 7, (4 + x) % 7])
            .collect();
        UniformHypergraph::new(7, 3, edges).unwrap()
    }

    fn h2(n: usize) -> UniformHypergraph {
        let a = (n + 1) / 2;
        let edges = combinations(n, 3)
            .filter(|c| {
                let inside = c.iter().filter(|&&v| v < a).count();
                inside != 0 && inside != 3
            })
            .map(|c| c.iter().map(|&v| v as Vertex).collect())
            .collect();
        UniformHypergraph::new(n, 3, edges).unwrap()
    }

    #[test]
    fn identity_embedding() {
        let f = fano();
        let cert = contains_copy(&f, &f, Budget::default(), &Parallelism::new(2)).unwrap();
        assert!(cert.found());
    }

    #[test]
    fn fano_not_in_bipartite() {
        let cert =
            contains_copy(&h2(12), &fano(), Budget::default(), &Parallelism::new(2)).unwrap();
        assert_eq!(cert.verdict, SearchVerdict::NoCopy);
    }

    #[test]
    fn count_single_edge() {
        let h = h2(8);
        let e = UniformHypergraph::new(3, 3, vec![vec![0, 1, 2]]).unwrap();
        let c = count_embeddings(&h, &e, Budget::default(), &Parallelism::new(2)).unwrap();
        assert_eq!(c, h.edge_count() as u128 * 6);
    }

    #[test]
    fn fano_automorphisms() {
        let f = fano();
        let c = count_embeddings(&f, &f, Budget::default(), &Parallelism::new(2)).unwrap();
        assert_eq!(c, 168);
    }

    #[test]
    fn pattern_larger_than_host() {
        let f = fano();
        let h = UniformHypergraph::complete(5, 3);
        assert_eq!(
            count_embeddings(&h, &f, Budget::default(), &Parallelism::new(1)).unwrap(),
            0
        );
        let cert = contains_copy(&h, &f, Budget::default(), &Parallelism::new(1)).unwrap();
        assert_eq!(cert.verdict, SearchVerdict::NoCopy);
    }

    #[test]
    fn budget_exhaustion_is_a_verdict() {
        let h = UniformHypergraph::complete(9, 3);
        let f = UniformHypergraph::complete(7, 3);
        let cert = contains_copy(&h, &f, Budget::new(5), &Parallelism::new(1)).unwrap();
        assert_eq!(cert.verdict, SearchVerdict::BudgetExhausted);
    }

    /// Brute-force oracle: enumerate every injective map.
    fn brute_contains(host: &UniformHypergraph, pattern: &UniformHypergraph) -> bool {
        let t = pattern.n();
        let n = host.n();
        let mut map = vec![0 as Vertex; t];
        let mut used = vec![false; n];
        fn rec(
            d: usize,
            t: usize,
            n: usize,
            map: &mut Vec<Vertex>,
            used: &mut Vec<bool>,
            host: &UniformHypergraph,
            pattern: &UniformHypergraph,
        ) -> bool {
            if d == t {
                return pattern.edges().iter().all(|e| {
                    let img: Vec<Vertex> = e.iter().map(|&u| map[u as usize]).collect();
                    host.has_edge(&img)
                });
            }
            for v in 0..n {
                if !used[v] {
                    used[v] = true;
                    map[d] = v as Vertex;
                    if rec(d + 1, t, n, map, used, host, pattern) {
                        used[v] = false;
                        return true;
                    }
                    used[v] = false;
                }
            }
            false
        }
        rec(0, t, n, &mut map, &mut used, host, pattern)
    }

    #[test]
    fn agrees_with_brute_force_oracle() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(99, 0);
        let par = Parallelism::new(2);
        for _ in 0..25 {
            let n = rng.gen_range(5..=9);
            let t = rng.gen_range(4..=6);
            let host_edges: Vec<Edge> = combinations(n, 3)
                .filter(|_| rng.gen_bool(0.4))
                .map(|c| c.iter().map(|&v| v as Vertex).collect())
                .collect();
            let pat_edges: Vec<Edge> = combinations(t, 3)
                .filter(|_| rng.gen_bool(0.5))
                .map(|c| c.iter().map(|&v| v as Vertex).collect())
                .collect();
            let host = UniformHypergraph::new(n, 3, host_edges).unwrap();
            let pat = UniformHypergraph::new(t, 3, pat_edges).unwrap();
            let cert = contains_copy(&host, &pat, Budget::default(), &par).unwrap();
            assert_eq!(cert.found(), brute_contains(&host, &pat));
            if let SearchVerdict::Embedding(map) = &cert.verdict {
                assert!(validate_embedding(&host, &pat, map));
            }
        }
    }

    #[test]
    fn count_invariant_under_relabelling() {
        use rand::seq::SliceRandom;
        let mut rng = crate::rng::stream_rng(7, 0);
        let par = Parallelism::new(2);
        let host = h2(9);
        let pat = UniformHypergraph::new(4, 3, vec![vec![0, 1, 2], vec![0, 1, 3]]).unwrap();
        let base = count_embeddings(&host, &pat, Budget::default(), &par).unwrap();
        for _ in 0..5 {
            let mut perm: Vec<Vertex> = (0..host.n() as Vertex).collect();
            perm.shuffle(&mut rng);
            let edges: Vec<Edge> = host
                .edges()
                .iter()
                .map(|e| e.iter().map(|&v| perm[v as usize]).collect())
                .collect();
            let relabeled = UniformHypergraph::new(host.n(), 3, edges).unwrap();
            assert_eq!(
                count_embeddings(&relabeled, &pat, Budget::default(), &par).unwrap(),
                base
            );
        }
    }

    #[test]
    fn symmetric_search_agrees_with_plain_search() {
        // Freeness of bipartite-symmetric hosts must come out the same with
        // and without orbit pruning.
        let f = fano();
        let host = h2(10);
        let classes: Vec<Vec<Vertex>> = vec![(0..5).collect(), (5..10).collect()];
        let plain = contains_copy(&host, &f, Budget::default(), &Parallelism::new(2)).unwrap();
        let pruned = contains_copy_with_symmetry(
            &host,
            &f,
            &classes,
            Budget::default(),
            &Parallelism::new(2),
        )
        .unwrap();
        assert_eq!(plain.verdict, pruned.verdict);
        assert!(pruned.nodes_expanded <= plain.nodes_expanded);

        // A host where the pattern embeds: K_9^3 with all vertices mutually
        // interchangeable.
        let k9 = UniformHypergraph::complete(9, 3);
        let one_class: Vec<Vec<Vertex>> = vec![(0..9).collect()];
        let cert = contains_copy_with_symmetry(
            &k9,
            &f,
            &one_class,
            Budget::default(),
            &Parallelism::new(2),
        )
        .unwrap();
        assert!(cert.found());
    }

    #[test]
    fn bogus_symmetry_classes_rejected() {
        let f = fano();
        let host = h2(10);
        // All vertices are NOT interchangeable in H_2(10).
        let bad: Vec<Vec<Vertex>> = vec![(0..10).collect()];
        assert!(contains_copy_with_symmetry(
            &host,
            &f,
            &bad,
            Budget::default(),
            &Parallelism::new(1)
        )
        .is_err());
        // Non-covering classes rejected too.
        let partial: Vec<Vec<Vertex>> = vec![(0..5).collect()];
        assert!(contains_copy_with_symmetry(
            &host,
            &f,
            &partial,
            Budget::default(),
            &Parallelism::new(1)
        )
        .is_err());
    }

    #[test]
    fn through_edge_detects_new_copies() {
        let f = fano();
        // Remove one line from the Fano plane; adding it back through that
        // edge creates a copy, while other insertions may not.
        let mut edges: Vec<Edge> = f.edges().to_vec();
        let removed = edges.pop().unwrap();
        let h = UniformHypergraph::new(7, 3, edges).unwrap();
        let mut with: Vec<Edge> = h.edges().to_vec();
        with.push(removed.clone());
        let h_plus = UniformHypergraph::new(7, 3, with).unwrap();
        assert!(contains_copy_through(&h_plus, &f, &removed, Budget::default()).unwrap());
    }
}
