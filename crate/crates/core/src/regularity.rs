//! Partition k-systems, mean-square density, the equalising method, and a
//! desk-scale regularity decomposition loop.
//!
//! The loop instruments the decomposition mechanism; the asymptotic
//! guarantees are out of reach at desk scale (the constants are galactic),
//! so it reports what it sampled. It draws anchor tuples, tests their induced
//! complexes for quasirandomness, refines the partitions below a failing
//! index, re-equalises the vertex partitions, and records the mean-square
//! density ledger, stopping on success, caps, a plateau, or the iteration
//! limit. The sampled failure rate is always reported as observed.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::budget::Budget;
use crate::counting::EvalMode;
use crate::density::ratio_to_f64;
use crate::error::{Error, Result};
use crate::hypergraph::{UniformHypergraph, Vertex};
use crate::parallel::Parallelism;
use crate::partite::{edge_index, sub_tuple, IndexSet, PartiteComplex, PartiteGround, Tuple};
use crate::quasirandom::{quasirandom_check, Verdict};
use crate::rng::stream_rng;

/// One level of a partition system: a cell id per tuple of K_A(X), in
/// mixed-radix order over the member parts.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LevelPartition {
    pub cells: Vec<u32>,
    pub cell_count: u32,
    /// Cells flagged exceptional (vertex levels only); kept as tagged
    /// sub-cells, never merged.
    pub exceptional: BTreeSet<u32>,
}

impl LevelPartition {
    pub fn trivial(size: usize) -> Self {
        LevelPartition {
            cells: vec![0; size],
            cell_count: 1,
            exceptional: BTreeSet::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.cell_count as usize];
        for &c in &self.cells {
            if c >= self.cell_count {
                return Err(Error::Internal("cell id out of range".into()));
            }
            seen[c as usize] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::Internal("empty cell in partition".into()));
        }
        Ok(())
    }
}

/// Partitions P_A of K_A(X) for every nonempty A with |A| ≤ k.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PartitionSystem {
    ground: PartiteGround,
    k: usize,
    levels: BTreeMap<IndexSet, LevelPartition>,
}

/// Flat index of a tuple of index `a` (members ascending, last part
/// fastest).
pub fn tuple_flat(ground: &PartiteGround, a: &IndexSet, tuple: &[Vertex]) -> usize {
    let mut idx = 0;
    for (slot, part) in a.members().into_iter().enumerate() {
        let local = tuple[slot] as usize - ground.offset(part);
        idx = idx * ground.size(part) + local;
    }
    idx
}

/// Inverse of `tuple_flat`.
pub fn flat_tuple(ground: &PartiteGround, a: &IndexSet, mut flat: usize) -> Tuple {
    let members = a.members();
    let mut out = vec![0 as Vertex; members.len()];
    for (slot, &part) in members.iter().enumerate().rev() {
        let size = ground.size(part);
        out[slot] = (ground.offset(part) + flat % size) as Vertex;
        flat /= size;
    }
    out
}

fn ambient(ground: &PartiteGround, a: &IndexSet) -> usize {
    a.members().iter().map(|&p| ground.size(p)).product()
}

impl PartitionSystem {
    /// Every level a single cell.
    pub fn trivial(ground: PartiteGround, k: usize) -> Self {
        let r = ground.r();
        let mut levels = BTreeMap::new();
        for mask in 1u32..1 << r {
            let a = IndexSet::from_mask(mask);
            if a.len() > k {
                continue;
            }
            levels.insert(a, LevelPartition::trivial(ambient(&ground, &a)));
        }
        PartitionSystem { ground, k, levels }
    }

    /// The natural system of a partite k-graph: top levels split into the
    /// graph's tuples and the rest, everything below trivial.
    pub fn from_partite_graph(h: &UniformHypergraph, ground: &PartiteGround) -> Result<Self> {
        let k = h.k();
        let mut sys = Self::trivial(ground.clone(), k);
        let mut member_flats: BTreeMap<IndexSet, Vec<usize>> = BTreeMap::new();
        for e in h.edges() {
            let a = edge_index(ground, e)?;
            if a.len() != k {
                return Err(Error::NotPartite(format!("edge {e:?} repeats a part")));
            }
            member_flats
                .entry(a)
                .or_default()
                .push(tuple_flat(ground, &a, e));
        }
        for (a, flats) in member_flats {
            let level = sys.levels.get_mut(&a).unwrap();
            let total = level.cells.len();
            if flats.len() == total {
                continue; // complete layer stays a single cell
            }
            for f in flats {
                level.cells[f] = 1;
            }
            level.cell_count = 2;
            // Cell 1 holds the graph tuples; renumber so ids are dense.
        }
        Ok(sys)
    }

    pub fn ground(&self) -> &PartiteGround {
        &self.ground
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn level(&self, a: &IndexSet) -> &LevelPartition {
        &self.levels[a]
    }

    pub fn indices(&self) -> impl Iterator<Item = IndexSet> + '_ {
        self.levels.keys().copied()
    }

    pub fn cell_of(&self, a: &IndexSet, tuple: &[Vertex]) -> u32 {
        self.levels[a].cells[tuple_flat(&self.ground, a, tuple)]
    }

    /// Strong equivalence on K_A(X): co-celled at every nonempty B ⊆ A.
    /// Class ids are assigned by first occurrence in tuple order.
    pub fn strong_classes(&self, a: &IndexSet) -> LevelPartition {
        self.classes_over(a, true)
    }

    /// Weak equivalence P*_A: co-celled at every nonempty proper B ⊂ A.
    /// Refining P_A itself leaves this unchanged.
    pub fn weak_partition(&self, a: &IndexSet) -> LevelPartition {
        self.classes_over(a, false)
    }

    fn classes_over(&self, a: &IndexSet, include_self: bool) -> LevelPartition {
        let total = ambient(&self.ground, a);
        let subsets: Vec<IndexSet> = a
            .subsets()
            .filter(|b| !b.is_empty() && (include_self || b != a))
            .collect();
        let mut ids: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
        let mut cells = Vec::with_capacity(total);
        for flat in 0..total {
            let tuple = flat_tuple(&self.ground, a, flat);
            let sig: Vec<u32> = subsets
                .iter()
                .map(|b| self.cell_of(b, &sub_tuple(a, &tuple, b)))
                .collect();
            let next = ids.len() as u32;
            let id = *ids.entry(sig).or_insert(next);
            cells.push(id);
        }
        LevelPartition {
            cell_count: ids.len() as u32,
            cells,
            exceptional: BTreeSet::new(),
        }
    }

    /// The induced complex P(x): per index, the tuples strongly equivalent
    /// to the anchor's sub-tuple, re-grounded to the anchor's vertex cells.
    pub fn induced_complex(&self, anchor: &[Vertex]) -> Result<InducedComplex> {
        let r = self.ground.r();
        if anchor.len() != r {
            return Err(Error::GroundMismatch(format!(
                "anchor needs one vertex per part ({r}), got {}",
                anchor.len()
            )));
        }
        // Vertex cells of the anchor per part.
        let mut kept: Vec<Vec<Vertex>> = Vec::with_capacity(r);
        for part in 0..r {
            let b = IndexSet::from_parts(&[part]);
            let cell = self.cell_of(&b, &[anchor[part]]);
            let level = &self.levels[&b];
            kept.push(
                self.ground
                    .part_vertices(part)
                    .filter(|&v| level.cells[tuple_flat(&self.ground, &b, &[v])] == cell)
                    .collect(),
            );
        }
        let sizes: Vec<usize> = kept.iter().map(|k| k.len()).collect();
        let new_ground = PartiteGround::new(sizes)?;
        let mut relabel: BTreeMap<Vertex, Vertex> = BTreeMap::new();
        for (part, vs) in kept.iter().enumerate() {
            for (i, &v) in vs.iter().enumerate() {
                relabel.insert(v, (new_ground.offset(part) + i) as Vertex);
            }
        }
        let mut layers: BTreeMap<IndexSet, Vec<Tuple>> = BTreeMap::new();
        for part in 0..r {
            layers.insert(
                IndexSet::from_parts(&[part]),
                new_ground.part_vertices(part).map(|v| vec![v]).collect(),
            );
        }
        for a in self.indices().filter(|a| a.len() >= 2) {
            let members = a.members();
            let anchor_cells: BTreeMap<IndexSet, u32> = a
                .subsets()
                .filter(|b| b.len() >= 2)
                .map(|b| {
                    let sub: Tuple = b.members().iter().map(|&p| anchor[p]).collect();
                    (b, self.cell_of(&b, &sub))
                })
                .collect();
            // Enumerate the product of kept cells and keep the strongly
            // equivalent tuples.
            let mut tuples = Vec::new();
            let mut cur: Tuple = Vec::with_capacity(members.len());
            collect_equivalent(
                self,
                &a,
                &members,
                &kept,
                &anchor_cells,
                &mut cur,
                &mut tuples,
            );
            let relabeled: Vec<Tuple> = tuples
                .into_iter()
                .map(|t| t.iter().map(|v| relabel[v]).collect())
                .collect();
            layers.insert(a, relabeled);
        }
        let complex = PartiteComplex::new(new_ground, self.k, layers)?;
        Ok(InducedComplex {
            anchor: anchor.to_vec(),
            complex,
        })
    }
}

fn collect_equivalent(
    sys: &PartitionSystem,
    a: &IndexSet,
    members: &[usize],
    kept: &[Vec<Vertex>],
    anchor_cells: &BTreeMap<IndexSet, u32>,
    cur: &mut Tuple,
    out: &mut Vec<Tuple>,
) {
    let depth = cur.len();
    if depth == members.len() {
        let ok = anchor_cells
            .iter()
            .all(|(b, &cell)| sys.cell_of(b, &sub_tuple(a, cur, b)) == cell);
        if ok {
            out.push(cur.clone());
        }
        return;
    }
    for &v in &kept[members[depth]] {
        cur.push(v);
        collect_equivalent(sys, a, members, kept, anchor_cells, cur, out);
        cur.pop();
    }
}

/// An anchor tuple with its induced complex.
#[derive(Clone, Debug)]
pub struct InducedComplex {
    pub anchor: Vec<Vertex>,
    pub complex: PartiteComplex,
}

// ---------------------------------------------------------------------------
// Mean-square density
// ---------------------------------------------------------------------------

/// msd_T(S) = Σ_{i,j} (|T_j|/|U|)(|S_i ∩ T_j|/|T_j|)², exactly.
pub fn msd(s_cells: &[u32], t_cells: &[u32]) -> Result<BigRational> {
    if s_cells.len() != t_cells.len() {
        return Err(Error::GroundMismatch(
            "partitions must cover the same set".into(),
        ));
    }
    let u = s_cells.len();
    if u == 0 {
        return Err(Error::OutOfRange("empty underlying set".into()));
    }
    let mut t_sizes: BTreeMap<u32, u64> = BTreeMap::new();
    let mut joint: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for (&s, &t) in s_cells.iter().zip(t_cells) {
        *t_sizes.entry(t).or_insert(0) += 1;
        *joint.entry((s, t)).or_insert(0) += 1;
    }
    // Σ_j Σ_i |S_i ∩ T_j|² / (|U| · |T_j|)
    let mut acc = BigRational::zero();
    for ((_, t), &count) in &joint {
        let num = BigInt::from(count) * BigInt::from(count);
        let den = BigInt::from(u as u64) * BigInt::from(t_sizes[t]);
        acc += BigRational::new(num, den);
    }
    Ok(acc)
}

/// Does every cell of `fine` sit inside one cell of `coarse`?
pub fn refines(fine: &[u32], coarse: &[u32]) -> bool {
    let mut seen: BTreeMap<u32, u32> = BTreeMap::new();
    fine.iter().zip(coarse).all(|(&f, &c)| match seen.entry(f) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(c);
            true
        }
        std::collections::btree_map::Entry::Occupied(e) => *e.get() == c,
    })
}

/// Assert msd_{T'}(S) ≥ msd_T(S) for a refinement T' of T, exactly.
pub fn msd_monotone_check(s: &[u32], t: &[u32], t_refined: &[u32]) -> Result<bool> {
    if !refines(t_refined, t) {
        return Err(Error::OutOfRange("T' does not refine T".into()));
    }
    Ok(msd(s, t_refined)? >= msd(s, t)?)
}

// ---------------------------------------------------------------------------
// The equalising method
// ---------------------------------------------------------------------------

/// Output of the equalising method on a partition E_1 ∪ … ∪ E_t of E:
/// classes of exact size ⌊|E|/t²⌋, each inside one original cell, plus
/// per-origin exceptional leftovers of total size < |E|/t.
#[derive(Clone, Debug)]
pub struct Equalised {
    /// (origin cell, members) for each full class, in origin order.
    pub classes: Vec<(usize, Vec<usize>)>,
    /// (origin cell, leftover members), kept as tagged sub-cells.
    pub exceptional: Vec<(usize, Vec<usize>)>,
    pub class_size: usize,
    /// ⌊|E|/t²⌋ = 0: everything is exceptional.
    pub degenerate: bool,
}

pub fn equalise(cells: &[Vec<usize>]) -> Result<Equalised> {
    let t = cells.len();
    if t == 0 {
        return Err(Error::OutOfRange("equalise needs at least one cell".into()));
    }
    let total: usize = cells.iter().map(|c| c.len()).sum();
    let class_size = total / (t * t);
    let mut classes = Vec::new();
    let mut exceptional = Vec::new();
    if class_size == 0 {
        for (j, cell) in cells.iter().enumerate() {
            if !cell.is_empty() {
                exceptional.push((j, cell.clone()));
            }
        }
        return Ok(Equalised {
            classes,
            exceptional,
            class_size,
            degenerate: true,
        });
    }
    for (j, cell) in cells.iter().enumerate() {
        let mut rest = cell.as_slice();
        while rest.len() >= class_size {
            let (chunk, tail) = rest.split_at(class_size);
            classes.push((j, chunk.to_vec()));
            rest = tail;
        }
        if !rest.is_empty() {
            exceptional.push((j, rest.to_vec()));
        }
    }
    let exc_total: usize = exceptional.iter().map(|(_, m)| m.len()).sum();
    debug_assert!(exc_total * t < total || exc_total == 0);
    Ok(Equalised {
        classes,
        exceptional,
        class_size,
        degenerate: false,
    })
}

// ---------------------------------------------------------------------------
// The decomposition loop
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct DecomposeParams {
    /// Target sampled failure rate (the loop compares the Wilson lower
    /// bound of the failure rate against this).
    pub epsilon: f64,
    /// Quasirandomness thresholds per level, eta[s] for 2 ≤ s ≤ k.
    pub eta: Vec<f64>,
    /// Cap parameters per level: |Q_A| ≤ ceil(d_{|A|}^{-1/2}) for |A| < k.
    pub d: Vec<f64>,
    pub anchor_samples: u64,
    pub oct_samples: u64,
    /// Exact Oct is used when the kernel cost estimate stays below this.
    pub exact_cost_cap: u64,
    pub max_iterations: u64,
    pub pivots_per_refinement: usize,
    pub seed: u64,
}

impl DecomposeParams {
    pub fn new(k: usize, epsilon: f64, seed: u64) -> Self {
        DecomposeParams {
            epsilon,
            eta: vec![0.01; k + 1],
            d: vec![0.04; k],
            anchor_samples: 400,
            oct_samples: 20_000,
            exact_cost_cap: 20_000_000,
            max_iterations: 20,
            pivots_per_refinement: 2,
            seed,
        }
    }

    fn cap(&self, level: usize) -> u32 {
        let d = self.d.get(level).copied().unwrap_or(0.04);
        (1.0 / d.sqrt()).ceil() as u32
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecomposeStatus {
    Converged,
    Capped,
    Plateaued,
    IterationLimit,
}

#[derive(Clone, Debug, Serialize)]
pub struct FailureSample {
    pub iteration: u64,
    pub samples: u64,
    pub failures: u64,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MsdEntry {
    pub iteration: u64,
    /// 1-based part list of the index.
    pub index: Vec<usize>,
    pub msd: f64,
    pub num: String,
    pub den: String,
    /// Bumps when P_A itself is refined; monotonicity is asserted within a
    /// generation (the reference-refinement direction of the lemma).
    pub generation: u32,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MsdLedger {
    pub entries: Vec<MsdEntry>,
}

#[derive(Debug)]
pub struct DecomposeOutcome {
    pub system: PartitionSystem,
    pub ledger: MsdLedger,
    pub history: Vec<FailureSample>,
    pub status: DecomposeStatus,
    pub iterations: u64,
}

fn wilson(failures: u64, n: u64) -> (f64, f64) {
    let z = 1.96f64;
    let nf = n as f64;
    let p = failures as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = p + z2 / (2.0 * nf);
    let margin = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    (
        ((centre - margin) / denom).max(0.0),
        ((centre + margin) / denom).min(1.0),
    )
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Regularity decomposition of an r-partite k-graph.
pub fn decompose(
    h: &UniformHypergraph,
    ground: &PartiteGround,
    params: &DecomposeParams,
    par: &Parallelism,
) -> Result<DecomposeOutcome> {
    let r = ground.r();
    let mut sys = PartitionSystem::from_partite_graph(h, ground)?;
    let mut ledger = MsdLedger::default();
    let mut history = Vec::new();
    let mut generation: BTreeMap<IndexSet, u32> = sys.indices().map(|a| (a, 0)).collect();
    let mut last_msd: BTreeMap<IndexSet, BigRational> = BTreeMap::new();
    let mut status = DecomposeStatus::IterationLimit;
    let mut iterations = 0;

    let record_msd = |sys: &PartitionSystem,
                      ledger: &mut MsdLedger,
                      last: &mut BTreeMap<IndexSet, BigRational>,
                      generation: &BTreeMap<IndexSet, u32>,
                      iteration: u64|
     -> Result<()> {
        for a in sys.indices().filter(|a| a.len() >= 2) {
            let weak = sys.weak_partition(&a);
            let value = msd(&sys.level(&a).cells, &weak.cells)?;
            let gen = generation[&a];
            if let Some(prev) = last.get(&a) {
                // Within a generation the reference only refines, so the
                // lemma forces monotonicity.
                if value < *prev
                    && ledger
                        .entries
                        .iter()
                        .rev()
                        .any(|e| e.index == one_based(&a) && e.generation == gen)
                {
                    return Err(Error::Internal(format!(
                        "msd decreased at index {a}: {prev} -> {value}"
                    )));
                }
            }
            ledger.entries.push(MsdEntry {
                iteration,
                index: one_based(&a),
                msd: ratio_to_f64(&value),
                num: value.numer().to_string(),
                den: value.denom().to_string(),
                generation: gen,
            });
            last.insert(a, value);
        }
        Ok(())
    };

    record_msd(&sys, &mut ledger, &mut last_msd, &generation, 0)?;

    for iteration in 1..=params.max_iterations {
        iterations = iteration;
        // -- sample anchors -------------------------------------------------
        let n_anchors = params.anchor_samples;
        let chunk = 256u64;
        let chunks = (n_anchors + chunk - 1) / chunk;
        let anchors: Vec<Vec<Vertex>> = par.install(|| {
            (0..chunks)
                .into_par_iter()
                .map(|ci| {
                    let mut rng = stream_rng(params.seed, (iteration << 20) + ci);
                    let lo = ci * chunk;
                    let hi = (lo + chunk).min(n_anchors);
                    (lo..hi)
                        .map(|_| {
                            (0..r)
                                .map(|part| {
                                    (ground.offset(part) + rng.gen_range(0..ground.size(part)))
                                        as Vertex
                                })
                                .collect()
                        })
                        .collect::<Vec<Vec<Vertex>>>()
                })
                .flatten()
                .collect()
        });

        // Distinct strong signatures, in first-appearance order.
        let signature = |anchor: &[Vertex]| -> Vec<u32> {
            sys.indices()
                .map(|b| {
                    let sub: Tuple = b.members().iter().map(|&p| anchor[p]).collect();
                    sys.cell_of(&b, &sub)
                })
                .collect()
        };
        let mut sig_order: Vec<Vec<u32>> = Vec::new();
        let mut sig_ids: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        let mut anchor_sig: Vec<usize> = Vec::with_capacity(anchors.len());
        for anchor in &anchors {
            let sig = signature(anchor);
            let id = *sig_ids.entry(sig.clone()).or_insert_with(|| {
                sig_order.push(sig);
                sig_order.len() - 1
            });
            anchor_sig.push(id);
        }
        // One representative anchor per signature (first occurrence).
        let mut rep_anchor: Vec<Vec<Vertex>> = vec![Vec::new(); sig_order.len()];
        for (anchor, &sid) in anchors.iter().zip(&anchor_sig) {
            if rep_anchor[sid].is_empty() {
                rep_anchor[sid] = anchor.clone();
            }
        }

        // -- test one induced complex per signature -------------------------
        let verdicts: Vec<Result<Vec<IndexSet>>> = par.install(|| {
            rep_anchor
                .par_iter()
                .enumerate()
                .map(|(sid, anchor)| {
                    let induced = sys.induced_complex(anchor)?;
                    let mut failing = Vec::new();
                    for a in induced.complex.indices().filter(|a| a.len() >= 2) {
                        let sizes: Vec<usize> = a
                            .members()
                            .iter()
                            .map(|&p| induced.complex.ground().size(p))
                            .collect();
                        let cost: u128 = match a.len() {
                            2 => (sizes[0] as u128).pow(2) * (sizes[1] as u128 / 64 + 1),
                            3 => {
                                (sizes[0] as u128).pow(2)
                                    * (sizes[1] as u128).pow(2)
                                    * (sizes[2] as u128 / 64 + 1)
                                    * 16
                            }
                            _ => u128::MAX,
                        };
                        let eta = params.eta.get(a.len()).copied().unwrap_or(0.01);
                        let mode = if cost <= params.exact_cost_cap as u128 {
                            EvalMode::Exact
                        } else {
                            EvalMode::MonteCarlo {
                                samples: params.oct_samples,
                                seed: params
                                    .seed
                                    .wrapping_add(fnv1a(&encode_sig(&sig_order[sid]))),
                            }
                        };
                        let budget = Budget::new(u64::MAX >> 1);
                        match quasirandom_check(&induced.complex, &a, eta, mode, budget, par) {
                            Ok(report) => {
                                if report.passes != Verdict::Pass {
                                    failing.push(a);
                                }
                            }
                            Err(Error::UndefinedDensity(_)) => {
                                // An undefined relative density cannot be
                                // certified quasirandom; treat as failing.
                                failing.push(a);
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    Ok(failing)
                })
                .collect()
        });
        let mut sig_failing: Vec<Vec<IndexSet>> = Vec::with_capacity(verdicts.len());
        for v in verdicts {
            sig_failing.push(v?);
        }

        let failures = anchor_sig
            .iter()
            .filter(|&&sid| !sig_failing[sid].is_empty())
            .count() as u64;
        let (lo, hi) = wilson(failures, n_anchors);
        history.push(FailureSample {
            iteration,
            samples: n_anchors,
            failures,
            rate: failures as f64 / n_anchors as f64,
            wilson_low: lo,
            wilson_high: hi,
        });
        if lo <= params.epsilon {
            status = DecomposeStatus::Converged;
            break;
        }

        // -- pick the most-failing index ------------------------------------
        let mut fail_count: BTreeMap<IndexSet, u64> = BTreeMap::new();
        for &sid in &anchor_sig {
            for a in &sig_failing[sid] {
                *fail_count.entry(*a).or_insert(0) += 1;
            }
        }
        let (&target, _) = fail_count
            .iter()
            .max_by_key(|(a, &c)| (c, std::cmp::Reverse(a.mask())))
            .expect("failures recorded");

        // Pivot components come from the first failing anchors.
        let mut pivot_anchors: Vec<&Vec<Vertex>> = Vec::new();
        for (anchor, &sid) in anchors.iter().zip(&anchor_sig) {
            if sig_failing[sid].contains(&target) {
                pivot_anchors.push(anchor);
                if pivot_anchors.len() >= params.pivots_per_refinement {
                    break;
                }
            }
        }

        // -- refine every co-dimension-one level below the target -----------
        let snapshot = sys.clone();
        let mut capped = false;
        for b in target.proper_subsets() {
            if b.len() + 1 != target.len() || b.is_empty() {
                continue;
            }
            let other = IndexSet::from_mask(target.mask() & !b.mask());
            let other_part = other.members()[0];
            let nb_buckets = snapshot_cap_buckets(params, b.len());
            let new_level = refine_level(
                &snapshot,
                &b,
                &target,
                other_part,
                nb_buckets,
                &pivot_anchors,
            );
            let level = sys.levels.get_mut(&b).unwrap();
            if new_level.cell_count > level.cell_count {
                *generation.get_mut(&b).unwrap() += 1;
                *level = new_level;
            }
            if level.cell_count > params.cap(b.len()) {
                capped = true;
            }
        }

        // -- re-equalise vertex partitions ----------------------------------
        for part in 0..r {
            let b = IndexSet::from_parts(&[part]);
            let level = sys.levels.get_mut(&b).unwrap();
            let mut members: Vec<Vec<usize>> = vec![Vec::new(); level.cell_count as usize];
            for (flat, &c) in level.cells.iter().enumerate() {
                members[c as usize].push(flat);
            }
            let eq = equalise(&members)?;
            let mut cells = vec![0u32; level.cells.len()];
            let mut exceptional = BTreeSet::new();
            let mut next = 0u32;
            for (_, class) in &eq.classes {
                for &m in class {
                    cells[m] = next;
                }
                next += 1;
            }
            for (_, leftover) in &eq.exceptional {
                for &m in leftover {
                    cells[m] = next;
                }
                exceptional.insert(next);
                next += 1;
            }
            let refined = LevelPartition {
                cells,
                cell_count: next,
                exceptional,
            };
            refined.validate()?;
            if refined.cell_count != level.cell_count || refined.cells != level.cells {
                *generation.get_mut(&b).unwrap() += 1;
            }
            *level = refined;
        }

        record_msd(&sys, &mut ledger, &mut last_msd, &generation, iteration)?;

        if capped {
            status = DecomposeStatus::Capped;
            break;
        }
        // Plateau: no index moved since the previous iteration.
        let moved = ledger
            .entries
            .iter()
            .rev()
            .take_while(|e| e.iteration == iteration)
            .any(|e| {
                ledger
                    .entries
                    .iter()
                    .rev()
                    .find(|p| p.iteration < iteration && p.index == e.index)
                    .map(|p| p.num != e.num || p.den != e.den)
                    .unwrap_or(true)
            });
        if !moved {
            status = DecomposeStatus::Plateaued;
            break;
        }
    }

    Ok(DecomposeOutcome {
        system: sys,
        ledger,
        history,
        status,
        iterations,
    })
}

fn one_based(a: &IndexSet) -> Vec<usize> {
    a.members().into_iter().map(|p| p + 1).collect()
}

fn encode_sig(sig: &[u32]) -> Vec<u8> {
    sig.iter().flat_map(|c| c.to_le_bytes()).collect()
}

fn snapshot_cap_buckets(params: &DecomposeParams, level: usize) -> u32 {
    params.cap(level).max(2)
}

/// Refine P_B by quantised conditional densities of the target cells
/// against the opposite vertex cells, plus the target-cell of the join with
/// each pivot component.
fn refine_level(
    sys: &PartitionSystem,
    b: &IndexSet,
    target: &IndexSet,
    other_part: usize,
    buckets: u32,
    pivot_anchors: &[&Vec<Vertex>],
) -> LevelPartition {
    let ground = sys.ground();
    let total = ambient(ground, b);
    let other_index = IndexSet::from_parts(&[other_part]);
    let other_level = sys.level(&other_index);
    let mut other_cells: Vec<Vec<Vertex>> = vec![Vec::new(); other_level.cell_count as usize];
    for v in ground.part_vertices(other_part) {
        let c = other_level.cells[tuple_flat(ground, &other_index, &[v])];
        other_cells[c as usize].push(v);
    }
    let target_level = sys.level(target);
    let b_members = b.members();
    let slot_of_other = target
        .members()
        .iter()
        .position(|&p| p == other_part)
        .expect("other part inside target");

    let join = |s_tuple: &[Vertex], w: Vertex| -> u32 {
        let mut joined: Tuple = Vec::with_capacity(b_members.len() + 1);
        let mut inserted = false;
        for (slot, &_p) in target.members().iter().enumerate() {
            if slot == slot_of_other {
                joined.push(w);
                inserted = true;
            } else {
                let b_slot = slot - if inserted { 1 } else { 0 };
                joined.push(s_tuple[b_slot]);
            }
        }
        target_level.cells[tuple_flat(ground, target, &joined)]
    };

    let pivots: Vec<Vertex> = {
        let mut seen = BTreeSet::new();
        pivot_anchors
            .iter()
            .map(|anchor| anchor[other_part])
            .filter(|w| seen.insert(*w))
            .collect()
    };

    let old = sys.level(b);
    let mut ids: BTreeMap<(u32, Vec<u32>), u32> = BTreeMap::new();
    let mut cells = Vec::with_capacity(total);
    for flat in 0..total {
        let tuple = flat_tuple(ground, b, flat);
        let mut features: Vec<u32> = Vec::new();
        // Level-set features: for each opposite vertex cell, the quantised
        // density of target-cell 0.
        for cell in &other_cells {
            if cell.is_empty() {
                continue;
            }
            let hits = cell.iter().filter(|&&w| join(&tuple, w) == 0).count();
            let rho = hits as f64 / cell.len() as f64;
            let bucket = ((rho * buckets as f64) as u32).min(buckets - 1);
            features.push(bucket);
        }
        // Pivot features: the exact target cell of the join with each pivot.
        for &w in &pivots {
            features.push(join(&tuple, w));
        }
        let key = (old.cells[flat], features);
        let next = ids.len() as u32;
        let id = *ids.entry(key).or_insert(next);
        cells.push(id);
    }
    LevelPartition {
        cell_count: ids.len() as u32,
        cells,
        exceptional: BTreeSet::new(),
    }
}

// ---------------------------------------------------------------------------
// Cell-assignment text format
// ---------------------------------------------------------------------------

/// One line per tuple: comma-separated 1-based index, the tuple, the cell.
pub fn write_partition_system(w: &mut impl Write, sys: &PartitionSystem) -> Result<()> {
    writeln!(w, "partition {} {}", sys.ground().r(), sys.k())?;
    let sizes: Vec<String> = sys.ground().sizes().iter().map(|s| s.to_string()).collect();
    writeln!(w, "parts {}", sizes.join(" "))?;
    for a in sys.indices() {
        let level = sys.level(&a);
        let idx: Vec<String> = a.members().iter().map(|p| (p + 1).to_string()).collect();
        let exc: Vec<String> = level.exceptional.iter().map(|c| c.to_string()).collect();
        writeln!(
            w,
            "index {} cells {} exceptional {}",
            idx.join(","),
            level.cell_count,
            if exc.is_empty() {
                "-".into()
            } else {
                exc.join(",")
            }
        )?;
        for flat in 0..level.cells.len() {
            let tuple = flat_tuple(sys.ground(), &a, flat);
            let vs: Vec<String> = tuple.iter().map(|v| v.to_string()).collect();
            writeln!(
                w,
                "{} {} {}",
                idx.join(","),
                vs.join(" "),
                level.cells[flat]
            )?;
        }
    }
    Ok(())
}

pub fn read_partition_system(r: &mut impl BufRead) -> Result<PartitionSystem> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty partition input".into()))??;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 || head[0] != "partition" {
        return Err(Error::Parse(format!("bad partition header {header:?}")));
    }
    let _r: usize = head[1].parse().map_err(|_| Error::Parse("bad r".into()))?;
    let k: usize = head[2].parse().map_err(|_| Error::Parse("bad k".into()))?;
    let parts_line = lines
        .next()
        .ok_or_else(|| Error::Parse("missing parts".into()))??;
    let sizes: Vec<usize> = parts_line
        .split_whitespace()
        .skip(1)
        .map(|w| w.parse().map_err(|_| Error::Parse("bad size".into())))
        .collect::<Result<_>>()?;
    let ground = PartiteGround::new(sizes)?;
    let mut sys = PartitionSystem::trivial(ground.clone(), k);
    let mut current: Option<(IndexSet, u32, BTreeSet<u32>)> = None;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ws: Vec<&str> = line.split_whitespace().collect();
        if ws[0] == "index" {
            let parts: Vec<usize> = ws[1]
                .split(',')
                .map(|t| {
                    t.parse::<usize>()
                        .ok()
                        .and_then(|p| p.checked_sub(1))
                        .ok_or_else(|| Error::Parse("bad index".into()))
                })
                .collect::<Result<_>>()?;
            let count: u32 = ws[3]
                .parse()
                .map_err(|_| Error::Parse("bad count".into()))?;
            let exceptional = if ws.len() > 5 && ws[5] != "-" {
                ws[5]
                    .split(',')
                    .map(|t| {
                        t.parse::<u32>()
                            .map_err(|_| Error::Parse("bad cell".into()))
                    })
                    .collect::<Result<BTreeSet<u32>>>()?
            } else {
                BTreeSet::new()
            };
            current = Some((IndexSet::from_parts(&parts), count, exceptional));
            continue;
        }
        let (a, count, exc) = current
            .as_ref()
            .ok_or_else(|| Error::Parse("tuple before index header".into()))?;
        // line: idx-list v1 .. v|A| cell
        let tuple: Tuple = ws[1..ws.len() - 1]
            .iter()
            .map(|w| {
                w.parse::<Vertex>()
                    .map_err(|_| Error::Parse("bad vertex".into()))
            })
            .collect::<Result<_>>()?;
        let cell: u32 = ws[ws.len() - 1]
            .parse()
            .map_err(|_| Error::Parse("bad cell".into()))?;
        let level = sys.levels.get_mut(a).unwrap();
        level.cell_count = *count;
        level.exceptional = exc.clone();
        level.cells[tuple_flat(&ground, a, &tuple)] = cell;
    }
    for level in sys.levels.values() {
        level.validate()?;
    }
    Ok(sys)
}
