//! Blowups, clones, augmentations, and the homomorphism complex J → G.

use num_rational::BigRational;
use num_traits::One;

use crate::budget::Budget;
use crate::counting::EvalMode;
use crate::density::{Density, Estimate, Value};
use crate::error::{Error, Result};
use crate::hypergraph::{Edge, UniformHypergraph, Vertex};
use crate::parallel::Parallelism;
use crate::partite::{sub_tuple, IndexSet, PartiteComplex, PartiteGround, Tuple};

/// F(s): s copies of every vertex, all s^k product edges. Copies of base
/// vertex x get the contiguous labels x·s .. x·s+s-1.
pub fn blowup(f: &UniformHypergraph, s: usize) -> Result<UniformHypergraph> {
    if s < 1 {
        return Err(Error::OutOfRange(
            "blowup multiplicity must be at least 1".into(),
        ));
    }
    let k = f.k();
    let mut edges = Vec::with_capacity(f.edge_count() * s.pow(k as u32));
    let mut choice = vec![0usize; k];
    for e in f.edges() {
        loop {
            let img: Edge = e
                .iter()
                .zip(&choice)
                .map(|(&x, &i)| (x as usize * s + i) as Vertex)
                .collect();
            edges.push(img);
            // advance the odometer
            let mut slot = k;
            loop {
                if slot == 0 {
                    break;
                }
                slot -= 1;
                choice[slot] += 1;
                if choice[slot] < s {
                    break;
                }
                choice[slot] = 0;
            }
            if choice.iter().all(|&c| c == 0) {
                break;
            }
        }
    }
    UniformHypergraph::new(f.n() * s, k, edges)
}

/// F(2), the clone of F.
pub fn clone_blowup(f: &UniformHypergraph) -> Result<UniformHypergraph> {
    blowup(f, 2)
}

/// F^{+s}: the s-blowup plus k−s new apex vertices joined to every base
/// vertex's copy set.
pub fn augment(f: &UniformHypergraph, s: usize) -> Result<UniformHypergraph> {
    let k = f.k();
    if s < 1 || s >= k {
        return Err(Error::OutOfRange(format!(
            "augmentation needs 1 <= s <= k-1, got s={s} for k={k}"
        )));
    }
    let blown = blowup(f, s)?;
    let apex_base = blown.n();
    let apex: Vec<Vertex> = (0..k - s).map(|i| (apex_base + i) as Vertex).collect();
    let mut edges: Vec<Edge> = blown.edges().to_vec();
    for x in 0..f.n() {
        let mut e: Edge = (0..s).map(|i| (x * s + i) as Vertex).collect();
        e.extend_from_slice(&apex);
        edges.push(e);
    }
    UniformHypergraph::new(apex_base + (k - s), k, edges)
}

/// The homomorphism complex G' = (J → G).
///
/// Part i of the derived ground consists of all maps E_i → Y_i, encoded as
/// mixed-radix integers over the host part. A tuple of maps lies in G'_A
/// when the assembled partite map sends every J-set of index ⊆ A into G.
/// Layers above the host level k have trivial structure (present exactly
/// when all sub-tuples are present) and are not materialised.
#[derive(Clone, Debug)]
pub struct HomComplex {
    complex: PartiteComplex,
    /// |E_i| per part: the exponent of the derived part size.
    pattern_part_sizes: Vec<usize>,
    host_part_sizes: Vec<usize>,
    /// Levels above this are trivial.
    materialised_level: usize,
}

impl HomComplex {
    /// The materialised layers as an ordinary partite complex.
    pub fn complex(&self) -> &PartiteComplex {
        &self.complex
    }

    pub fn materialised_level(&self) -> usize {
        self.materialised_level
    }

    /// Decode a derived vertex of part i into the images of E_i's vertices,
    /// in label order (local host indices).
    pub fn decode(&self, part: usize, code: Vertex) -> Vec<usize> {
        let deg = self.pattern_part_sizes[part];
        let base = self.host_part_sizes[part];
        let mut local = code as usize - self.complex.ground().offset(part);
        let mut out = Vec::with_capacity(deg);
        for _ in 0..deg {
            out.push(local % base);
            local /= base;
        }
        out
    }
}

pub fn hom_complex(j: &PartiteComplex, g: &PartiteComplex, budget: Budget) -> Result<HomComplex> {
    let t = j.ground().r();
    if g.ground().r() != t {
        return Err(Error::GroundMismatch(format!(
            "pattern has {t} parts, host has {}",
            g.ground().r()
        )));
    }
    let mut derived_sizes = Vec::with_capacity(t);
    for i in 0..t {
        let size = (g.ground().size(i) as u128).checked_pow(j.ground().size(i) as u32);
        match size {
            Some(s) if s <= Vertex::MAX as u128 + 1 => derived_sizes.push(s as usize),
            _ => {
                return Err(Error::BudgetExceeded {
                    needed: u128::MAX,
                    budget: budget.limit(),
                })
            }
        }
    }
    let level = t.min(g.k());
    // Cost of materialising: sum over |A| ≤ level of the tuple space.
    let mut cost: u128 = 0;
    for mask in 1u32..1 << t {
        let a = IndexSet::from_mask(mask);
        if a.len() > level {
            continue;
        }
        let space: u128 = a
            .members()
            .iter()
            .map(|&i| derived_sizes[i] as u128)
            .product();
        cost = cost.saturating_add(space);
    }
    budget.admit(cost)?;

    let ground = PartiteGround::new(derived_sizes.clone())?;
    // Pre-collect J's sets grouped by index.
    let j_sets: Vec<(IndexSet, Tuple)> = j
        .indices()
        .flat_map(|a| j.layer(&a).iter().map(move |t| (a, t.clone())))
        .collect();

    let mut layers = std::collections::BTreeMap::new();
    for mask in 1u32..1 << t {
        let a = IndexSet::from_mask(mask);
        if a.len() > level {
            continue;
        }
        let members = a.members();
        let relevant: Vec<&(IndexSet, Tuple)> = j_sets
            .iter()
            .filter(|(b, _)| b.is_subset_of(&a) && !b.is_empty())
            .collect();
        let mut tuples = Vec::new();
        let mut code = vec![0usize; members.len()];
        'space: loop {
            // Assemble the maps and test every relevant J-set.
            let maps: Vec<(usize, Vec<usize>)> = members
                .iter()
                .zip(&code)
                .map(|(&i, &c)| {
                    let mut local = c;
                    let deg = j.ground().size(i);
                    let base = g.ground().size(i);
                    let mut img = Vec::with_capacity(deg);
                    for _ in 0..deg {
                        img.push(local % base);
                        local /= base;
                    }
                    (i, img)
                })
                .collect();
            let ok = relevant.iter().all(|(b, s)| {
                let img: Tuple = s
                    .iter()
                    .map(|&y| {
                        let part = j.ground().part_of(y);
                        let slot = members.iter().position(|&m| m == part).unwrap();
                        let local_y = j.ground().local(y);
                        (g.ground().offset(part) + maps[slot].1[local_y]) as Vertex
                    })
                    .collect();
                g.has_tuple(b, &img)
            });
            if ok {
                let tuple: Tuple = members
                    .iter()
                    .zip(&code)
                    .map(|(&i, &c)| (ground.offset(i) + c) as Vertex)
                    .collect();
                tuples.push(tuple);
            }
            // odometer
            let mut slot = members.len();
            loop {
                if slot == 0 {
                    break 'space;
                }
                slot -= 1;
                code[slot] += 1;
                if code[slot] < derived_sizes[members[slot]] {
                    break;
                }
                code[slot] = 0;
            }
        }
        layers.insert(a, tuples);
    }
    let complex = PartiteComplex::new(ground, level, layers)?;
    Ok(HomComplex {
        complex,
        pattern_part_sizes: (0..t).map(|i| j.ground().size(i)).collect(),
        host_part_sizes: (0..t).map(|i| g.ground().size(i)).collect(),
        materialised_level: level,
    })
}

/// One row of the density comparison: measured d_A(G') against the
/// predicted d_A(G)^|J_A|.
#[derive(Clone, Debug)]
pub struct DensityRow {
    pub index: IndexSet,
    pub measured: Value,
    pub predicted: Density,
}

/// Per-index comparison of the homomorphism complex densities with their
/// predictions. Levels above the host k report exactly 1 on both sides.
pub fn hom_complex_density_report(
    j: &PartiteComplex,
    g: &PartiteComplex,
    mode: EvalMode,
    budget: Budget,
    par: &Parallelism,
) -> Result<Vec<DensityRow>> {
    let hc = hom_complex(j, g, budget)?;
    let t = j.ground().r();
    let mut rows = Vec::new();
    for mask in 1u32..1 << t {
        let a = IndexSet::from_mask(mask);
        if a.len() < 2 {
            continue;
        }
        let j_count = j.layer_count(&a);
        let predicted = if a.len() > hc.materialised_level() {
            Density::one()
        } else {
            let d = g.relative_density(&a)?;
            let mut acc = BigRational::one();
            for _ in 0..j_count {
                acc *= d.ratio().clone();
            }
            Density::from_ratio(acc)?
        };
        let measured = if a.len() > hc.materialised_level() {
            Value::Exact(Density::one())
        } else {
            match mode {
                EvalMode::Exact => Value::Exact(hc.complex().relative_density(&a)?),
                EvalMode::MonteCarlo { samples, seed } => {
                    Value::Estimate(mc_relative_density(hc.complex(), &a, samples, seed, par)?)
                }
            }
        };
        rows.push(DensityRow {
            index: a,
            measured,
            predicted,
        });
    }
    Ok(rows)
}

/// Observed versus predicted frequency of octahedra spanned by sampled
/// side-graph edges. The prediction is the quasirandom product
/// Π d_ij⁴ · d_123⁸; no hard tolerance is attached — at desk scale the
/// report is data, not a verdict.
#[derive(Clone, Debug, serde::Serialize)]
pub struct OctahedronPairReport {
    pub observed: Estimate,
    pub predicted: f64,
}

/// Sample one edge x_i x'_i from each side graph G_i (a 2-graph on part i of
/// a tripartite 3-complex) and measure how often {x_1x'_1, x_2x'_2, x_3x'_3}
/// spans an octahedron: all eight transversal triples in the top layer.
pub fn octahedron_pair_frequency(
    c: &PartiteComplex,
    sides: &[UniformHypergraph; 3],
    samples: u64,
    seed: u64,
    par: &Parallelism,
) -> Result<OctahedronPairReport> {
    use rand::Rng;
    if c.ground().r() != 3 {
        return Err(Error::GroundMismatch(
            "octahedron sampling needs 3 parts".into(),
        ));
    }
    for (i, g) in sides.iter().enumerate() {
        if g.k() != 2 {
            return Err(Error::InvalidArity(format!(
                "side graph {} is not a 2-graph",
                i + 1
            )));
        }
        if g.n() != c.ground().size(i) {
            return Err(Error::GroundMismatch(format!(
                "side graph {} has {} vertices, part has {}",
                i + 1,
                g.n(),
                c.ground().size(i)
            )));
        }
        if g.edge_count() == 0 {
            return Err(Error::OutOfRange(format!(
                "side graph {} has no edges",
                i + 1
            )));
        }
    }
    let top = IndexSet::from_parts(&[0, 1, 2]);
    let offsets = [
        c.ground().offset(0) as Vertex,
        c.ground().offset(1) as Vertex,
        c.ground().offset(2) as Vertex,
    ];
    let observed = crate::rng::mc_estimate(par, seed, 0, samples, |rng| {
        let mut pairs = [[0 as Vertex; 2]; 3];
        for i in 0..3 {
            let e = &sides[i].edges()[rng.gen_range(0..sides[i].edge_count())];
            pairs[i] = [e[0] + offsets[i], e[1] + offsets[i]];
        }
        for mask in 0..8u32 {
            let t = [
                pairs[0][(mask & 1) as usize],
                pairs[1][(mask >> 1 & 1) as usize],
                pairs[2][(mask >> 2 & 1) as usize],
            ];
            if !c.has_tuple(&top, &t) {
                return 0.0;
            }
        }
        1.0
    });
    let mut predicted = 1.0;
    for pair in [[0, 1], [0, 2], [1, 2]] {
        predicted *= c
            .relative_density(&IndexSet::from_parts(&pair))?
            .as_f64()
            .powi(4);
    }
    predicted *= c.relative_density(&top)?.as_f64().powi(8);
    Ok(OctahedronPairReport {
        observed,
        predicted,
    })
}

/// Ratio estimator for a relative density: sample ambient tuples, condition
/// on star membership, and report the binomial standard error given the
/// star hits.
fn mc_relative_density(
    c: &PartiteComplex,
    a: &IndexSet,
    samples: u64,
    seed: u64,
    par: &Parallelism,
) -> Result<Estimate> {
    use rand::Rng;
    if samples == 0 {
        return Err(Error::OutOfRange("zero samples".into()));
    }
    let members = a.members();
    let counts: Vec<(u64, u64)> = {
        let chunk = crate::rng::MC_CHUNK;
        let chunks = (samples + chunk - 1) / chunk;
        use rayon::prelude::*;
        par.install(|| {
            (0..chunks)
                .into_par_iter()
                .map(|ci| {
                    let lo = ci * chunk;
                    let hi = (lo + chunk).min(samples);
                    let mut rng = crate::rng::stream_rng(seed, ci);
                    let mut star = 0u64;
                    let mut layer = 0u64;
                    for _ in lo..hi {
                        let tuple: Tuple = members
                            .iter()
                            .map(|&i| {
                                (c.ground().offset(i) + rng.gen_range(0..c.ground().size(i)))
                                    as Vertex
                            })
                            .collect();
                        let in_star = a
                            .proper_subsets()
                            .filter(|b| !b.is_empty())
                            .all(|b| c.has_tuple(&b, &sub_tuple(a, &tuple, &b)));
                        if in_star {
                            star += 1;
                            if c.has_tuple(a, &tuple) {
                                layer += 1;
                            }
                        }
                    }
                    (star, layer)
                })
                .collect()
        })
    };
    let (star, layer) = counts
        .into_iter()
        .fold((0u64, 0u64), |(s, l), (cs, cl)| (s + cs, l + cl));
    if star == 0 {
        return Err(Error::UndefinedDensity(format!(
            "{a} (no star tuples among {samples} samples)"
        )));
    }
    let p = layer as f64 / star as f64;
    Ok(Estimate {
        mean: p,
        stderr: (p * (1.0 - p) / star as f64).sqrt(),
        samples: star,
    })
}
