//! Homomorphism densities: plain maps between k-graphs, partite maps between
//! complexes, and weighted homomorphism averages.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::budget::Budget;
use crate::density::{Density, Estimate};
use crate::error::{Error, Result};
use crate::gowers::WeightedEdgeFunction;
use crate::hypergraph::{UniformHypergraph, Vertex};
use crate::parallel::Parallelism;
use crate::partite::{IndexSet, PartiteComplex, Tuple};
use crate::rng::mc_estimate;

/// Evaluation mode shared by the counting operations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EvalMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

// ---------------------------------------------------------------------------
// Plain homomorphism density between k-graphs
// ---------------------------------------------------------------------------

/// d_F(H): the probability that a uniformly random map V(F) → V(H) sends
/// every edge of F to an edge of H. All maps count, including non-injective
/// ones (those send no edge anywhere, since host edges have k distinct
/// vertices).
pub fn hom_density_exact(
    f: &UniformHypergraph,
    h: &UniformHypergraph,
    budget: Budget,
    par: &Parallelism,
) -> Result<Density> {
    if f.k() != h.k() {
        return Err(Error::InvalidArity(format!(
            "uniformity mismatch: {} vs {}",
            f.k(),
            h.k()
        )));
    }
    let space = (h.n() as u128)
        .checked_pow(f.n() as u32)
        .ok_or(Error::BudgetExceeded {
            needed: u128::MAX,
            budget: budget.limit(),
        })?;
    budget.admit(space)?;
    let count = count_homs(f, h, par);
    Density::from_counts(BigInt::from(count), BigInt::from(h.n()).pow(f.n() as u32))
}

fn count_homs(f: &UniformHypergraph, h: &UniformHypergraph, par: &Parallelism) -> u128 {
    let t = f.n();
    if t == 0 {
        return 1;
    }
    let mut edges_through = vec![Vec::new(); t];
    for (i, e) in f.edges().iter().enumerate() {
        for &u in e {
            edges_through[u as usize].push(i);
        }
    }
    // Greedy fail-fast order, isolated vertices last.
    let order = greedy_order(t, f.edge_count(), &edges_through);
    let mut pos = vec![0usize; t];
    for (d, &u) in order.iter().enumerate() {
        pos[u] = d;
    }
    let mut free_tail = t;
    while free_tail > 0 && edges_through[order[free_tail - 1]].is_empty() {
        free_tail -= 1;
    }
    let supp = h.completion_subset_rows();
    let ctx = HomCtx {
        f,
        h,
        order,
        pos,
        edges_through,
        free_tail,
        supp,
    };
    if ctx.free_tail == 0 {
        return (h.n() as u128).pow(t as u32);
    }
    let n = h.n();
    let counts: Vec<u128> = par.install(|| {
        (0..n)
            .into_par_iter()
            .map(|v| {
                let mut assign = vec![0 as Vertex; t];
                ctx.count_from(0, v as Vertex, &mut assign)
            })
            .collect()
    });
    counts.into_iter().sum()
}

struct HomCtx<'a> {
    f: &'a UniformHypergraph,
    h: &'a UniformHypergraph,
    order: Vec<usize>,
    pos: Vec<usize>,
    edges_through: Vec<Vec<usize>>,
    free_tail: usize,
    supp: BTreeMap<Vec<Vertex>, crate::bits::BitRow>,
}

impl<'a> HomCtx<'a> {
    /// Count maps extending assign with order[depth] -> v.
    fn count_from(&self, depth: usize, v: Vertex, assign: &mut Vec<Vertex>) -> u128 {
        let p = self.order[depth];
        assign[p] = v;
        // Check every pattern edge through p that is now fully or partially
        // assigned.
        let mut cands: Option<BTreeMap<usize, crate::bits::BitRow>> = Some(BTreeMap::new());
        for &ei in &self.edges_through[p] {
            let e = &self.f.edges()[ei];
            let mut mapped: Vec<Vertex> = Vec::with_capacity(e.len());
            let mut unmapped: Vec<usize> = Vec::new();
            for &u in e {
                if self.pos[u as usize] <= depth {
                    mapped.push(assign[u as usize]);
                } else {
                    unmapped.push(self.pos[u as usize]);
                }
            }
            mapped.sort_unstable();
            if mapped.windows(2).any(|w| w[0] == w[1]) {
                return 0; // collapsed edge can never land on a host edge
            }
            if unmapped.is_empty() {
                if !self.h.has_edge(&mapped) {
                    return 0;
                }
            } else if let Some(c) = cands.as_mut() {
                match self.supp.get(&mapped) {
                    None => return 0,
                    Some(row) => {
                        for d in unmapped {
                            c.entry(d)
                                .and_modify(|r| r.and_assign(row))
                                .or_insert_with(|| row.clone());
                        }
                    }
                }
            }
        }
        let cands = cands.take().unwrap();
        if cands.values().any(|r| r.is_empty()) {
            return 0;
        }
        let next = depth + 1;
        if next >= self.free_tail {
            return (self.h.n() as u128).pow((self.order.len() - next) as u32);
        }
        // Candidates for the next depth, when constrained.
        match cands.get(&next) {
            Some(row) => {
                let mut total = 0;
                for w in row.iter_ones() {
                    total += self.count_from_narrow(next, w as Vertex, assign, &cands);
                }
                total
            }
            None => {
                let mut total = 0;
                for w in 0..self.h.n() {
                    total += self.count_from_narrow(next, w as Vertex, assign, &cands);
                }
                total
            }
        }
    }

    fn count_from_narrow(
        &self,
        depth: usize,
        v: Vertex,
        assign: &mut Vec<Vertex>,
        _inherited: &BTreeMap<usize, crate::bits::BitRow>,
    ) -> u128 {
        // Inherited narrowing is re-derived from scratch at each level: the
        // pattern sets are re-checked against the assignment, which keeps the
        // recursion simple and still prunes on the spot.
        self.count_from(depth, v, assign)
    }
}

fn greedy_order(t: usize, edge_count: usize, edges_through: &[Vec<usize>]) -> Vec<usize> {
    let mut placed = vec![false; t];
    let mut placed_in_edge = vec![0usize; edge_count];
    let mut order = Vec::with_capacity(t);
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

pub fn hom_density_mc(
    f: &UniformHypergraph,
    h: &UniformHypergraph,
    samples: u64,
    seed: u64,
    par: &Parallelism,
) -> Result<Estimate> {
    if f.k() != h.k() {
        return Err(Error::InvalidArity("uniformity mismatch".into()));
    }
    if samples == 0 {
        return Err(Error::OutOfRange("zero samples".into()));
    }
    let t = f.n();
    let n = h.n();
    let edges = f.edges().to_vec();
    Ok(mc_estimate(par, seed, 0, samples, move |rng| {
        let map: Vec<Vertex> = (0..t).map(|_| rng.gen_range(0..n) as Vertex).collect();
        let ok = edges.iter().all(|e| {
            let img: Vec<Vertex> = e.iter().map(|&u| map[u as usize]).collect();
            h.has_edge(&img)
        });
        if ok {
            1.0
        } else {
            0.0
        }
    }))
}

// ---------------------------------------------------------------------------
// Partite homomorphism density between complexes
// ---------------------------------------------------------------------------

/// Constraints on one pattern set during partite enumeration.
enum SetConstraint<'a> {
    /// φ(e) must lie in the host layer of the same index.
    Member,
    /// Multiply by f_e(φ(e)).
    Weight(&'a WeightedEdgeFunction),
    /// No constraint (set outside the active family).
    Skip,
}

struct PartiteEnum<'a> {
    host: &'a PartiteComplex,
    /// pattern vertex (global in Y) -> part
    part_of: Vec<usize>,
    order: Vec<usize>,
    /// sets: (index, member pattern vertices in part order, constraint)
    sets: Vec<(IndexSet, Tuple, SetConstraint<'a>)>,
    /// set ids that complete at each depth
    completes_at: Vec<Vec<usize>>,
}

impl<'a> PartiteEnum<'a> {
    fn new(
        fc: &PartiteComplex,
        host: &'a PartiteComplex,
        sets: Vec<(IndexSet, Tuple, SetConstraint<'a>)>,
    ) -> Result<Self> {
        if fc.ground().r() != host.ground().r() {
            return Err(Error::GroundMismatch(format!(
                "pattern has {} parts, host has {}",
                fc.ground().r(),
                host.ground().r()
            )));
        }
        let t = fc.ground().total();
        let part_of: Vec<usize> = (0..t).map(|y| fc.ground().part_of(y as Vertex)).collect();
        // Order pattern vertices greedily, constrained sets acting as edges.
        let mut through = vec![Vec::new(); t];
        for (si, (_, tup, cons)) in sets.iter().enumerate() {
            if matches!(cons, SetConstraint::Skip) {
                continue;
            }
            for &y in tup {
                through[y as usize].push(si);
            }
        }
        let order = greedy_order(t, sets.len(), &through);
        let mut pos = vec![0usize; t];
        for (d, &y) in order.iter().enumerate() {
            pos[y] = d;
        }
        let mut completes_at = vec![Vec::new(); t];
        for (si, (_, tup, cons)) in sets.iter().enumerate() {
            if matches!(cons, SetConstraint::Skip) {
                continue;
            }
            if tup.is_empty() {
                continue;
            }
            let depth = tup.iter().map(|&y| pos[y as usize]).max().unwrap();
            completes_at[depth].push(si);
        }
        Ok(PartiteEnum {
            host,
            part_of,
            order,
            sets,
            completes_at,
        })
    }

    fn map_space(&self) -> u128 {
        self.part_of
            .iter()
            .map(|&p| self.host.ground().size(p) as u128)
            .product()
    }

    /// Weight of a completed set under the current assignment, or zero.
    fn set_value(&self, si: usize, assign: &[Vertex]) -> BigRational {
        let (a, tup, cons) = &self.sets[si];
        let img: Tuple = tup.iter().map(|&y| assign[y as usize]).collect();
        match cons {
            SetConstraint::Member => {
                if self.host.has_tuple(a, &img) {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }
            SetConstraint::Weight(f) => f.value(&img).cloned().unwrap_or_else(BigRational::zero),
            SetConstraint::Skip => BigRational::one(),
        }
    }

    fn all_member_constraints(&self) -> bool {
        self.sets
            .iter()
            .all(|(_, _, c)| matches!(c, SetConstraint::Member | SetConstraint::Skip))
    }

    /// Count maps satisfying every membership constraint (all weights 0/1).
    fn exact_count(&self, par: &Parallelism) -> u128 {
        let t = self.order.len();
        if t == 0 {
            return 1;
        }
        let first_part = self.part_of[self.order[0]];
        let firsts: Vec<Vertex> = self.host.ground().part_vertices(first_part).collect();
        let partials: Vec<u128> = par.install(|| {
            firsts
                .par_iter()
                .map(|&v| {
                    let mut assign = vec![0 as Vertex; t];
                    self.count_rec(0, v, &mut assign)
                })
                .collect()
        });
        partials.into_iter().sum()
    }

    fn count_rec(&self, depth: usize, v: Vertex, assign: &mut Vec<Vertex>) -> u128 {
        let y = self.order[depth];
        assign[y] = v;
        for &si in &self.completes_at[depth] {
            let (a, tup, _) = &self.sets[si];
            let img: Tuple = tup.iter().map(|&u| assign[u as usize]).collect();
            if !self.host.has_tuple(a, &img) {
                return 0;
            }
        }
        if depth + 1 == self.order.len() {
            return 1;
        }
        if self.completes_at[depth + 1..].iter().all(|c| c.is_empty()) {
            return (depth + 1..self.order.len())
                .map(|d| self.host.ground().size(self.part_of[self.order[d]]) as u128)
                .product();
        }
        let next_part = self.part_of[self.order[depth + 1]];
        self.host
            .ground()
            .part_vertices(next_part)
            .map(|nv| self.count_rec(depth + 1, nv, assign))
            .sum()
    }

    /// Σ over partite maps of the product of set values, exactly.
    fn exact_sum(&self, par: &Parallelism) -> BigRational {
        if self.all_member_constraints() {
            return BigRational::from(BigInt::from(self.exact_count(par)));
        }
        let t = self.order.len();
        if t == 0 {
            return BigRational::one();
        }
        let first_part = self.part_of[self.order[0]];
        let firsts: Vec<Vertex> = self.host.ground().part_vertices(first_part).collect();
        let partials: Vec<BigRational> = par.install(|| {
            firsts
                .par_iter()
                .map(|&v| {
                    let mut assign = vec![0 as Vertex; t];
                    let mut acc = BigRational::zero();
                    self.rec(0, v, &mut assign, BigRational::one(), &mut acc);
                    acc
                })
                .collect()
        });
        let mut total = BigRational::zero();
        for p in partials {
            total += p;
        }
        total
    }

    fn rec(
        &self,
        depth: usize,
        v: Vertex,
        assign: &mut Vec<Vertex>,
        weight: BigRational,
        acc: &mut BigRational,
    ) {
        let y = self.order[depth];
        assign[y] = v;
        let mut w = weight;
        for &si in &self.completes_at[depth] {
            w = w * self.set_value(si, assign);
            if w.is_zero() {
                return;
            }
        }
        if depth + 1 == self.order.len() {
            *acc += w;
            return;
        }
        // Unconstrained tail: everything remaining completes no set.
        if self.completes_at[depth + 1..].iter().all(|c| c.is_empty()) {
            let mut mult = BigInt::one();
            for d in depth + 1..self.order.len() {
                mult *= BigInt::from(self.host.ground().size(self.part_of[self.order[d]]));
            }
            *acc += w * BigRational::from(mult);
            return;
        }
        let next_part = self.part_of[self.order[depth + 1]];
        for nv in self.host.ground().part_vertices(next_part) {
            self.rec(depth + 1, nv, assign, w.clone(), acc);
        }
    }

    /// One random partite map; returns the product of set values as f64.
    fn sample(&self, rng: &mut rand_chacha::ChaCha8Rng, assign: &mut Vec<Vertex>) -> f64 {
        for y in 0..self.part_of.len() {
            let part = self.part_of[y];
            let off = self.host.ground().offset(part);
            let size = self.host.ground().size(part);
            assign[y] = (off + rng.gen_range(0..size)) as Vertex;
        }
        let mut prod = 1.0;
        for (si, (_, _, cons)) in self.sets.iter().enumerate() {
            if matches!(cons, SetConstraint::Skip) {
                continue;
            }
            let v = self.set_value(si, assign);
            if v.is_zero() {
                return 0.0;
            }
            prod *= crate::density::ratio_to_f64(&v);
        }
        prod
    }
}

fn all_sets_of(fc: &PartiteComplex) -> Vec<(IndexSet, Tuple)> {
    let mut sets = Vec::new();
    for a in fc.indices() {
        for t in fc.layer(&a) {
            sets.push((a, t.clone()));
        }
    }
    sets
}

/// Measured partite homomorphism density of F in H together with the
/// counting-lemma prediction ∏_{e∈F} d_e(H).
#[derive(Clone, Debug)]
pub struct HomDensityComparison {
    pub measured: crate::density::Value,
    pub predicted: Density,
}

/// d_F(H) over r-partite maps, with the product of relative densities the
/// counting lemma predicts for it.
pub fn partite_hom_density(
    fc: &PartiteComplex,
    hc: &PartiteComplex,
    mode: EvalMode,
    budget: Budget,
    par: &Parallelism,
) -> Result<HomDensityComparison> {
    let sets: Vec<(IndexSet, Tuple, SetConstraint)> = all_sets_of(fc)
        .into_iter()
        .map(|(a, t)| (a, t, SetConstraint::Member))
        .collect();
    let en = PartiteEnum::new(fc, hc, sets)?;
    let mut predicted = BigRational::one();
    for (a, _) in all_sets_of(fc) {
        predicted *= hc.relative_density(&a)?.ratio().clone();
    }
    let predicted = Density::from_ratio(predicted)?;
    let measured = match mode {
        EvalMode::Exact => {
            budget.admit(en.map_space())?;
            let sum = en.exact_sum(par);
            crate::density::Value::Exact(Density::from_ratio(
                sum / BigRational::from(BigInt::from(en.map_space())),
            )?)
        }
        EvalMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::OutOfRange("zero samples".into()));
            }
            let t = en.part_of.len();
            let est = mc_estimate(par, seed, 0, samples, |rng| {
                let mut assign = vec![0 as Vertex; t];
                en.sample(rng, &mut assign)
            });
            crate::density::Value::Estimate(est)
        }
    };
    Ok(HomDensityComparison {
        measured,
        predicted,
    })
}

/// The two sides of the factored counting identity for weighted averages.
#[derive(Clone, Debug)]
pub struct WeightedHomAverage {
    /// E_φ ∏_{e∈F} f_e(φ(e)), exact or estimated.
    pub average: WeightedValue,
    /// ∏_{e∉F0} d_e(H) · E_φ ∏_{e∈F0} f_e(φ(e)).
    pub factored_prediction: WeightedValue,
}

#[derive(Clone, Debug)]
pub enum WeightedValue {
    Exact(BigRational),
    Estimate(Estimate),
}

impl WeightedValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            WeightedValue::Exact(r) => crate::density::ratio_to_f64(r),
            WeightedValue::Estimate(e) => e.mean,
        }
    }
}

/// E over partite maps of ∏_{e∈F} f_e(φ(e)), where f_e is the provided
/// weight for e ∈ F0 and the characteristic function of the host layer
/// otherwise. Every provided weight must be supported inside its host layer.
pub fn weighted_hom_average(
    fc: &PartiteComplex,
    f0: &BTreeMap<(IndexSet, Tuple), WeightedEdgeFunction>,
    hc: &PartiteComplex,
    mode: EvalMode,
    budget: Budget,
    par: &Parallelism,
) -> Result<WeightedHomAverage> {
    for ((a, t), f) in f0 {
        if !fc.has_tuple(a, t) {
            return Err(Error::GroundMismatch(format!(
                "weighted set {t:?} at {a} is not a set of the pattern"
            )));
        }
        if f.index() != a {
            return Err(Error::GroundMismatch(format!(
                "weight for {t:?} carries index {}, expected {a}",
                f.index()
            )));
        }
        for (sup, val) in f.entries() {
            if !val.is_zero() && !hc.has_tuple(a, sup) {
                return Err(Error::SupportViolation(format!(
                    "weight at {a} is nonzero on {sup:?}, which is outside the host layer"
                )));
            }
        }
    }

    let constrained = |only_f0: bool| -> Vec<(IndexSet, Tuple, SetConstraint)> {
        all_sets_of(fc)
            .into_iter()
            .map(|(a, t)| {
                let cons = match f0.get(&(a, t.clone())) {
                    Some(f) => SetConstraint::Weight(f),
                    None if only_f0 => SetConstraint::Skip,
                    None => SetConstraint::Member,
                };
                (a, t, cons)
            })
            .collect()
    };

    // ∏_{e ∉ F0} d_e(H), exact.
    let mut outside = BigRational::one();
    for (a, t) in all_sets_of(fc) {
        if !f0.contains_key(&(a, t)) {
            outside *= hc.relative_density(&a)?.ratio().clone();
        }
    }

    match mode {
        EvalMode::Exact => {
            let full = PartiteEnum::new(fc, hc, constrained(false))?;
            budget.admit(full.map_space())?;
            let space = BigRational::from(BigInt::from(full.map_space()));
            let avg = full.exact_sum(par) / space.clone();
            let f0_only = PartiteEnum::new(fc, hc, constrained(true))?;
            let f0_avg = f0_only.exact_sum(par) / space;
            Ok(WeightedHomAverage {
                average: WeightedValue::Exact(avg),
                factored_prediction: WeightedValue::Exact(outside * f0_avg),
            })
        }
        EvalMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::OutOfRange("zero samples".into()));
            }
            let full = PartiteEnum::new(fc, hc, constrained(false))?;
            let t = full.part_of.len();
            let avg = mc_estimate(par, seed, 0, samples, |rng| {
                let mut assign = vec![0 as Vertex; t];
                full.sample(rng, &mut assign)
            });
            let f0_only = PartiteEnum::new(fc, hc, constrained(true))?;
            let f0_avg = mc_estimate(par, seed, 1 << 32, samples, |rng| {
                let mut assign = vec![0 as Vertex; t];
                f0_only.sample(rng, &mut assign)
            });
            let outside_f = crate::density::ratio_to_f64(&outside);
            Ok(WeightedHomAverage {
                average: WeightedValue::Estimate(avg),
                factored_prediction: WeightedValue::Estimate(Estimate {
                    mean: outside_f * f0_avg.mean,
                    stderr: outside_f * f0_avg.stderr,
                    samples: f0_avg.samples,
                }),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gowers::indicator_function;
    use crate::partite::{generated_complex, PartiteGround};
    use crate::rng::stream_rng;

    fn par() -> Parallelism {
        Parallelism::new(2)
    }

    fn fano() -> UniformHypergraph {
        let edges = (0..7u16)
            .map(|x| vec![(1 + x) % 7, (2 + x) % 7, (4 + x) % 7])
            .collect();
        UniformHypergraph::new(7, 3, edges).unwrap()
    }

    fn h2(n: usize) -> UniformHypergraph {
        let a = (n + 1) / 2;
        let edges = crate::combinatorics::combinations(n, 3)
            .filter(|c| {
                let inside = c.iter().filter(|&&v| v < a).count();
                inside != 0 && inside != 3
            })
            .map(|c| c.iter().map(|&v| v as Vertex).collect())
            .collect();
        UniformHypergraph::new(n, 3, edges).unwrap()
    }

    #[test]
    fn single_edge_pattern_matches_edge_density() {
        let h = h2(8);
        let e = UniformHypergraph::new(3, 3, vec![vec![0, 1, 2]]).unwrap();
        let d = hom_density_exact(&e, &h, Budget::default(), &par()).unwrap();
        assert_eq!(d, h.edge_density().unwrap());
    }

    #[test]
    fn fano_into_bipartite_is_zero() {
        let d = hom_density_exact(&fano(), &h2(12), Budget::default(), &par()).unwrap();
        assert!(d.is_zero());
    }

    #[test]
    fn exact_vs_monte_carlo() {
        let h = h2(9);
        let f = UniformHypergraph::new(4, 3, vec![vec![0, 1, 2], vec![0, 1, 3]]).unwrap();
        let exact = hom_density_exact(&f, &h, Budget::default(), &par()).unwrap();
        let est = hom_density_mc(&f, &h, 100_000, 9, &par()).unwrap();
        assert!(est.sigmas_from(exact.as_f64()) < 4.0);
    }

    #[test]
    fn budget_guards_exact_mode() {
        let h = UniformHypergraph::complete(50, 3);
        let f = UniformHypergraph::complete(7, 3);
        assert!(matches!(
            hom_density_exact(&f, &h, Budget::new(1000), &par()),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    fn small_host() -> PartiteComplex {
        // Deterministic 3-partite complex with complete lower layers and a
        // fixed half of the triples.
        let g = PartiteGround::new(vec![2, 2, 2]).unwrap();
        let mut edges = Vec::new();
        let mut count = 0;
        for a in 0..2u16 {
            for b in 0..2u16 {
                for c in 0..2u16 {
                    if count % 2 == 0 {
                        edges.push(vec![a, 2 + b, 4 + c]);
                    }
                    count += 1;
                }
            }
        }
        let base = UniformHypergraph::new(6, 3, edges).unwrap();
        let mut complex = generated_complex(&base, &g).unwrap();
        // Force complete pair layers so the prediction is exact.
        let full = PartiteComplex::complete(g.clone(), 3);
        let mut layers = std::collections::BTreeMap::new();
        for a in full.indices() {
            if a.len() == 3 {
                layers.insert(a, complex.layer(&a).to_vec());
            } else {
                layers.insert(a, full.layer(&a).to_vec());
            }
        }
        complex = PartiteComplex::new(g, 3, layers).unwrap();
        complex
    }

    #[test]
    fn single_edge_complex_identity() {
        // With complete lower layers, d_F for a single-edge pattern equals
        // the absolute top density and the product of relative densities.
        let host = small_host();
        let g1 = PartiteGround::new(vec![1, 1, 1]).unwrap();
        let pat = UniformHypergraph::new(3, 3, vec![vec![0, 1, 2]]).unwrap();
        let fc = generated_complex(&pat, &g1).unwrap();
        let out =
            partite_hom_density(&fc, &host, EvalMode::Exact, Budget::default(), &par()).unwrap();
        let top = IndexSet::from_parts(&[0, 1, 2]);
        match out.measured {
            crate::density::Value::Exact(d) => {
                assert_eq!(d, host.absolute_density(&top));
                assert_eq!(d, out.predicted);
            }
            _ => panic!("exact mode returned an estimate"),
        }
    }

    #[test]
    fn empty_pattern_density_is_one() {
        let host = small_host();
        let g1 = PartiteGround::new(vec![1, 1, 1]).unwrap();
        let pat = UniformHypergraph::empty(3, 3);
        let fc = generated_complex(&pat, &g1).unwrap();
        let out =
            partite_hom_density(&fc, &host, EvalMode::Exact, Budget::default(), &par()).unwrap();
        match out.measured {
            crate::density::Value::Exact(d) => assert!(d.is_one()),
            _ => panic!(),
        }
    }

    #[test]
    fn weighted_average_with_empty_f0_reduces_to_density() {
        let host = small_host();
        let g1 = PartiteGround::new(vec![1, 1, 2]).unwrap();
        // Two triples sharing a pair.
        let pat = UniformHypergraph::new(4, 3, vec![vec![0, 1, 2], vec![0, 1, 3]]).unwrap();
        let fc = generated_complex(&pat, &g1).unwrap();
        let density =
            partite_hom_density(&fc, &host, EvalMode::Exact, Budget::default(), &par()).unwrap();
        let avg = weighted_hom_average(
            &fc,
            &BTreeMap::new(),
            &host,
            EvalMode::Exact,
            Budget::default(),
            &par(),
        )
        .unwrap();
        match (avg.average, density.measured) {
            (WeightedValue::Exact(a), crate::density::Value::Exact(d)) => {
                assert_eq!(a, d.ratio().clone());
            }
            _ => panic!(),
        }
    }

    #[test]
    fn vertex_indicator_weights_give_restriction_density() {
        let host = small_host();
        let g1 = PartiteGround::new(vec![1, 1, 1]).unwrap();
        let pat = UniformHypergraph::new(3, 3, vec![vec![0, 1, 2]]).unwrap();
        let fc = generated_complex(&pat, &g1).unwrap();
        // Restrict each part to its first vertex.
        let keep: Vec<Vec<Vertex>> = vec![vec![0], vec![2], vec![4]];
        let mut f0 = BTreeMap::new();
        for part in 0..3 {
            let a = IndexSet::from_parts(&[part]);
            let f = indicator_function(
                host.ground().clone(),
                a,
                keep[part].iter().map(|&v| vec![v]).collect(),
            )
            .unwrap();
            f0.insert((a, vec![part as Vertex]), f);
        }
        let avg = weighted_hom_average(&fc, &f0, &host, EvalMode::Exact, Budget::default(), &par())
            .unwrap();
        // Route two: direct restriction count over the ambient product.
        let top = IndexSet::from_parts(&[0, 1, 2]);
        let restricted = host
            .layer(&top)
            .iter()
            .filter(|t| t[0] == 0 && t[1] == 2 && t[2] == 4)
            .count();
        let expect = BigRational::new(BigInt::from(restricted), BigInt::from(8));
        match avg.average {
            WeightedValue::Exact(a) => assert_eq!(a, expect),
            _ => panic!(),
        }
    }

    #[test]
    fn zero_weights_kill_the_average() {
        let host = small_host();
        let g1 = PartiteGround::new(vec![1, 1, 1]).unwrap();
        let pat = UniformHypergraph::new(3, 3, vec![vec![0, 1, 2]]).unwrap();
        let fc = generated_complex(&pat, &g1).unwrap();
        let a = IndexSet::from_parts(&[0]);
        let f = indicator_function(host.ground().clone(), a, vec![]).unwrap();
        let mut f0 = BTreeMap::new();
        f0.insert((a, vec![0 as Vertex]), f);
        let avg = weighted_hom_average(&fc, &f0, &host, EvalMode::Exact, Budget::default(), &par())
            .unwrap();
        match avg.average {
            WeightedValue::Exact(v) => assert!(v.is_zero()),
            _ => panic!(),
        }
    }

    #[test]
    fn support_violation_detected() {
        let host = small_host();
        let g1 = PartiteGround::new(vec![1, 1, 1]).unwrap();
        let pat = UniformHypergraph::new(3, 3, vec![vec![0, 1, 2]]).unwrap();
        let fc = generated_complex(&pat, &g1).unwrap();
        let top = IndexSet::from_parts(&[0, 1, 2]);
        // Weight on a tuple outside the host top layer.
        let missing = {
            let full = PartiteComplex::complete(host.ground().clone(), 3);
            full.layer(&top)
                .iter()
                .find(|t| !host.has_tuple(&top, t))
                .unwrap()
                .clone()
        };
        let f = indicator_function(host.ground().clone(), top, vec![missing]).unwrap();
        let mut f0 = BTreeMap::new();
        f0.insert((top, vec![0 as Vertex, 1, 2]), f);
        assert!(matches!(
            weighted_hom_average(&fc, &f0, &host, EvalMode::Exact, Budget::default(), &par()),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn partite_mc_close_to_exact() {
        let host = small_host();
        let g1 = PartiteGround::new(vec![1, 1, 2]).unwrap();
        let pat = UniformHypergraph::new(4, 3, vec![vec![0, 1, 2], vec![0, 1, 3]]).unwrap();
        let fc = generated_complex(&pat, &g1).unwrap();
        let exact =
            partite_hom_density(&fc, &host, EvalMode::Exact, Budget::default(), &par()).unwrap();
        let mc = partite_hom_density(
            &fc,
            &host,
            EvalMode::MonteCarlo {
                samples: 50_000,
                seed: 4,
            },
            Budget::default(),
            &par(),
        )
        .unwrap();
        let (e, m) = match (exact.measured, mc.measured) {
            (crate::density::Value::Exact(d), crate::density::Value::Estimate(est)) => {
                (d.as_f64(), est)
            }
            _ => panic!(),
        };
        assert!(m.sigmas_from(e) < 4.0);
    }

    #[test]
    fn roedl_style_zero_tetrahedron_homs() {
        // Any 3-graph whose edges are cyclic triangles of a tournament has
        // no K_4^3 homomorphisms.
        use rand::Rng;
        let mut rng = stream_rng(12, 0);
        let npp = 4usize;
        let n = 4 * npp;
        let mut arc = vec![vec![false; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let flip = rng.gen_bool(0.5);
                arc[i][j] = flip;
                arc[j][i] = !flip;
            }
        }
        let part = |v: usize| v / npp;
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    if part(a) == part(b) || part(b) == part(c) || part(a) == part(c) {
                        continue;
                    }
                    let cyclic = (arc[a][b] && arc[b][c] && arc[c][a])
                        || (arc[b][a] && arc[c][b] && arc[a][c]);
                    if cyclic {
                        edges.push(vec![a as Vertex, b as Vertex, c as Vertex]);
                    }
                }
            }
        }
        let h = UniformHypergraph::new(n, 3, edges).unwrap();
        let k43 = UniformHypergraph::complete(4, 3);
        let d = hom_density_exact(&k43, &h, Budget::default(), &par()).unwrap();
        assert!(d.is_zero());
        let c = crate::embed::count_embeddings(&h, &k43, Budget::default(), &par()).unwrap();
        assert_eq!(c, 0);
    }
}
