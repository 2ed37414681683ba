//! Explicit extremal and random constructions, paired with the properties
//! they are claimed to have, and a certifier that re-checks those claims by
//! exhaustive scan and search.

use rand::Rng;
use serde::Serialize;

use crate::budget::Budget;
use crate::combinatorics::combinations;
use crate::embed::{contains_copy, SearchVerdict};
use crate::error::{Error, Result};
use crate::galois::prime_power;
use crate::hypergraph::{Edge, UniformHypergraph, Vertex};
use crate::parallel::Parallelism;
use crate::partite::{IndexSet, PartiteComplex, PartiteGround, Tuple};
use crate::pg::ProjectivePlane;
use crate::rng::stream_rng;

/// H_2(n): balanced bipartition, all triples meeting both parts.
pub fn complete_bipartite_3graph(n: usize) -> Result<UniformHypergraph> {
    if n < 3 {
        return Err(Error::OutOfRange(format!("H_2(n) needs n >= 3, got {n}")));
    }
    let a = (n + 1) / 2;
    let edges: Vec<Edge> = combinations(n, 3)
        .filter(|c| {
            let inside = c.iter().filter(|&&v| v < a).count();
            inside != 0 && inside != 3
        })
        .map(|c| c.iter().map(|&v| v as Vertex).collect())
        .collect();
    let h = UniformHypergraph::new(n, 3, edges)?;
    debug_assert!(h.edges().iter().all(|e| {
        let inside = e.iter().filter(|&&v| (v as usize) < a).count();
        inside >= 1 && inside <= 2
    }));
    Ok(h)
}

/// The complete oddly bipartite (q+1)-graph: balanced bipartition, edges are
/// the (q+1)-sets meeting each side in an odd number of points.
pub fn oddly_bipartite(n: usize, q: u64) -> Result<UniformHypergraph> {
    match prime_power(q) {
        Some((p, _)) if p != 2 => {}
        _ => {
            return Err(Error::OutOfRange(format!(
                "oddly bipartite construction needs an odd prime power, got q={q}"
            )))
        }
    }
    let k = q as usize + 1;
    if n < k {
        return Err(Error::OutOfRange(format!("need n >= q+1 = {k}, got {n}")));
    }
    let a = (n + 1) / 2;
    let edges: Vec<Edge> = combinations(n, k)
        .filter(|c| {
            let inside = c.iter().filter(|&&v| v < a).count();
            inside % 2 == 1 && (k - inside) % 2 == 1
        })
        .map(|c| c.iter().map(|&v| v as Vertex).collect())
        .collect();
    let h = UniformHypergraph::new(n, k, edges)?;
    debug_assert!(h.edges().iter().all(|e| {
        let inside = e.iter().filter(|&&v| (v as usize) < a).count();
        inside % 2 == 1 && (k - inside) % 2 == 1
    }));
    Ok(h)
}

/// The improved 4-graph: |X_0| = n/2+1 with two special points a = 0, b = 1;
/// edges are the 3+1 splits plus the 2+2 splits whose X_0-pair contains
/// exactly one special point.
pub fn pg23_improved(n: usize) -> Result<UniformHypergraph> {
    if n % 2 != 0 || n < 8 {
        return Err(Error::OutOfRange(format!(
            "improved construction needs even n >= 8, got {n}"
        )));
    }
    let x0 = n / 2 + 1;
    let edges: Vec<Edge> = combinations(n, 4)
        .filter(|c| {
            let inside = c.iter().filter(|&&v| v < x0).count();
            match inside {
                1 | 3 => true,
                2 => {
                    let specials = c.iter().filter(|&&v| v < 2).count();
                    specials == 1
                }
                _ => false,
            }
        })
        .map(|c| c.iter().map(|&v| v as Vertex).collect())
        .collect();
    let h = UniformHypergraph::new(n, 4, edges)?;
    debug_assert!(h.edges().iter().all(|e| {
        let inside = e.iter().filter(|&&v| (v as usize) < x0).count();
        inside >= 1 && inside <= 3
    }));
    Ok(h)
}

/// Random orientation of the complete 4-partite graph; edges are the
/// cross-part triples that induce a cyclic triangle.
pub fn roedl_tournament(n_per_part: usize, seed: u64) -> Result<UniformHypergraph> {
    if n_per_part < 1 {
        return Err(Error::OutOfRange(
            "need at least one vertex per part".into(),
        ));
    }
    let n = 4 * n_per_part;
    let part = |v: usize| v / n_per_part;
    let mut rng = stream_rng(seed, 0);
    // arc[i][j] = true means i -> j; drawn in canonical pair order.
    let mut arc = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if part(i) == part(j) {
                continue;
            }
            let fwd = rng.gen_bool(0.5);
            arc[i][j] = fwd;
            arc[j][i] = !fwd;
        }
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if part(a) == part(b) {
                continue;
            }
            for c in b + 1..n {
                if part(c) == part(a) || part(c) == part(b) {
                    continue;
                }
                let cyclic =
                    (arc[a][b] && arc[b][c] && arc[c][a]) || (arc[b][a] && arc[c][b] && arc[a][c]);
                if cyclic {
                    edges.push(vec![a as Vertex, b as Vertex, c as Vertex]);
                }
            }
        }
    }
    UniformHypergraph::new(n, 3, edges)
}

/// Independent bipartite layers G_ij with the given densities, then the
/// spanned triangles subsampled at rate `d_top`.
pub fn layered_random_complex(
    n_per_part: usize,
    d_pairs: [f64; 3],
    d_top: f64,
    seed: u64,
) -> Result<PartiteComplex> {
    for d in d_pairs.iter().chain(std::iter::once(&d_top)) {
        if !(0.0..=1.0).contains(d) {
            return Err(Error::OutOfRange(format!("probability {d} outside [0,1]")));
        }
    }
    let ground = PartiteGround::new(vec![n_per_part; 3])?;
    let n = n_per_part;
    let pair_parts: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
    let mut layers: std::collections::BTreeMap<IndexSet, Vec<Tuple>> =
        std::collections::BTreeMap::new();
    for part in 0..3 {
        layers.insert(
            IndexSet::from_parts(&[part]),
            ground.part_vertices(part).map(|v| vec![v]).collect(),
        );
    }
    let mut pair_rows: Vec<Vec<Vec<bool>>> = Vec::new();
    for (li, &(i, j)) in pair_parts.iter().enumerate() {
        let mut rng = stream_rng(seed, li as u64);
        let mut rows = vec![vec![false; n]; n];
        let mut tuples = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if rng.gen_bool(d_pairs[li]) {
                    rows[x][y] = true;
                    tuples.push(vec![
                        (ground.offset(i) + x) as Vertex,
                        (ground.offset(j) + y) as Vertex,
                    ]);
                }
            }
        }
        layers.insert(IndexSet::from_parts(&[i, j]), tuples);
        pair_rows.push(rows);
    }
    let mut rng_top = stream_rng(seed, 3);
    let mut top = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if !pair_rows[0][x][y] {
                continue;
            }
            for z in 0..n {
                if pair_rows[1][x][z] && pair_rows[2][y][z] && rng_top.gen_bool(d_top) {
                    top.push(vec![
                        (ground.offset(0) + x) as Vertex,
                        (ground.offset(1) + y) as Vertex,
                        (ground.offset(2) + z) as Vertex,
                    ]);
                }
            }
        }
    }
    layers.insert(IndexSet::from_parts(&[0, 1, 2]), top);
    PartiteComplex::new(ground, 3, layers)
}

/// A named construction with its parameters and claimed properties.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ConstructionDescriptor {
    H2 { n: usize },
    OddlyBipartite { n: usize, q: u64 },
    Pg23Improved { n: usize },
    Roedl { n_per_part: usize, seed: u64 },
}

impl ConstructionDescriptor {
    pub fn parse(name: &str, n: usize, q: Option<u64>, seed: u64) -> Result<Self> {
        match name {
            "h2" | "complete-bipartite" => Ok(ConstructionDescriptor::H2 { n }),
            "oddly-bipartite" => Ok(ConstructionDescriptor::OddlyBipartite {
                n,
                q: q.ok_or_else(|| Error::OutOfRange("oddly-bipartite needs --q".into()))?,
            }),
            "pg23-improved" => Ok(ConstructionDescriptor::Pg23Improved { n }),
            "roedl" => Ok(ConstructionDescriptor::Roedl {
                n_per_part: n,
                seed,
            }),
            other => Err(Error::Parse(format!("unknown construction {other:?}"))),
        }
    }

    pub fn generate(&self) -> Result<UniformHypergraph> {
        match *self {
            ConstructionDescriptor::H2 { n } => complete_bipartite_3graph(n),
            ConstructionDescriptor::OddlyBipartite { n, q } => oddly_bipartite(n, q),
            ConstructionDescriptor::Pg23Improved { n } => pg23_improved(n),
            ConstructionDescriptor::Roedl { n_per_part, seed } => {
                roedl_tournament(n_per_part, seed)
            }
        }
    }

    /// Declared part sizes, for the partite file annotation.
    pub fn parts(&self) -> Option<Vec<usize>> {
        match *self {
            ConstructionDescriptor::H2 { n } => Some(vec![(n + 1) / 2, n / 2]),
            ConstructionDescriptor::OddlyBipartite { n, .. } => Some(vec![(n + 1) / 2, n / 2]),
            ConstructionDescriptor::Pg23Improved { n } => Some(vec![n / 2 + 1, n / 2 - 1]),
            ConstructionDescriptor::Roedl { n_per_part, .. } => Some(vec![n_per_part; 4]),
        }
    }

    /// (s, claimed δ_s), when the construction claims a degree formula.
    pub fn degree_claim(&self) -> Option<(usize, u64)> {
        match *self {
            ConstructionDescriptor::H2 { n } => Some((2, (n / 2) as u64)),
            ConstructionDescriptor::OddlyBipartite { n, q } => {
                // ⌊n/2⌋ - q + 1, which degenerates to 0 near n = q + 1.
                let claimed = (n as i64 / 2 - q as i64 + 1).max(0);
                Some((q as usize, claimed as u64))
            }
            ConstructionDescriptor::Pg23Improved { n } => Some((3, (n / 2) as u64 - 1)),
            ConstructionDescriptor::Roedl { .. } => None,
        }
    }

    /// Vertex classes whose internal permutations are automorphisms of the
    /// generated graph; the freeness search prunes to class representatives.
    pub fn symmetry_classes(&self) -> Option<Vec<Vec<Vertex>>> {
        let ranges = |cuts: &[usize]| -> Vec<Vec<Vertex>> {
            cuts.windows(2)
                .map(|w| (w[0] as Vertex..w[1] as Vertex).collect())
                .collect()
        };
        match *self {
            ConstructionDescriptor::H2 { n } => Some(ranges(&[0, (n + 1) / 2, n])),
            ConstructionDescriptor::OddlyBipartite { n, .. } => Some(ranges(&[0, (n + 1) / 2, n])),
            ConstructionDescriptor::Pg23Improved { n } => Some(ranges(&[0, 2, n / 2 + 1, n])),
            ConstructionDescriptor::Roedl { .. } => None,
        }
    }

    /// The configuration the construction avoids.
    pub fn forbidden(&self, budget: Budget) -> Result<(String, UniformHypergraph)> {
        match *self {
            ConstructionDescriptor::H2 { .. } => Ok((
                "pg_2(2)".into(),
                ProjectivePlane::new(2, budget)?.as_hypergraph().clone(),
            )),
            ConstructionDescriptor::OddlyBipartite { q, .. } => Ok((
                format!("pg_2({q})"),
                ProjectivePlane::new(q, budget)?.as_hypergraph().clone(),
            )),
            ConstructionDescriptor::Pg23Improved { .. } => Ok((
                "pg_2(3)".into(),
                ProjectivePlane::new(3, budget)?.as_hypergraph().clone(),
            )),
            ConstructionDescriptor::Roedl { .. } => {
                Ok(("k_4^3".into(), UniformHypergraph::complete(4, 3)))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DegreeClaim {
    pub s: usize,
    pub measured: u64,
    pub claimed: u64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FreenessClaim {
    pub pattern: String,
    /// "free", "copy-found", or "budget-exhausted".
    pub verdict: String,
    pub nodes_expanded: u64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossDensityClaim {
    pub measured: f64,
    pub expected: f64,
    pub sigmas: f64,
    pub ok: bool,
}

/// Certification output: the degree scan and freeness search results with
/// per-claim runtimes.
#[derive(Clone, Debug, Serialize)]
pub struct CertifyReport {
    pub construction: ConstructionDescriptor,
    pub vertices: usize,
    pub edges: usize,
    pub degree: Option<DegreeClaim>,
    pub freeness: FreenessClaim,
    pub cross_density: Option<CrossDensityClaim>,
    pub scan_ms: u128,
    pub search_ms: u128,
    pub all_ok: bool,
}

/// Run the declared δ_s scan and forbidden-configuration search.
pub fn certify_construction(
    desc: &ConstructionDescriptor,
    budget: Budget,
    par: &Parallelism,
) -> Result<CertifyReport> {
    let h = desc.generate()?;

    let scan_start = std::time::Instant::now();
    let degree = match desc.degree_claim() {
        Some((s, claimed)) => {
            let measured = par.install(|| h.min_s_degree(s))?;
            Some(DegreeClaim {
                s,
                measured,
                claimed,
                ok: measured == claimed,
            })
        }
        None => None,
    };
    let scan_ms = scan_start.elapsed().as_millis();

    let (pattern_name, pattern) = desc.forbidden(budget)?;
    let search_start = std::time::Instant::now();
    let cert = match desc.symmetry_classes() {
        Some(classes) => {
            crate::embed::contains_copy_with_symmetry(&h, &pattern, &classes, budget, par)?
        }
        None => contains_copy(&h, &pattern, budget, par)?,
    };
    let search_ms = search_start.elapsed().as_millis();
    let freeness = FreenessClaim {
        pattern: pattern_name,
        verdict: match cert.verdict {
            SearchVerdict::NoCopy => "free".into(),
            SearchVerdict::Embedding(_) => "copy-found".into(),
            SearchVerdict::BudgetExhausted => "budget-exhausted".into(),
        },
        nodes_expanded: cert.nodes_expanded,
        ok: matches!(cert.verdict, SearchVerdict::NoCopy),
    };

    let cross_density = match *desc {
        ConstructionDescriptor::Roedl { n_per_part, .. } => {
            let cross_triples = 4.0 * (n_per_part as f64).powi(3);
            let measured = h.edge_count() as f64 / cross_triples;
            let sigma = (0.25 * 0.75 / cross_triples).sqrt();
            let sigmas = (measured - 0.25).abs() / sigma;
            Some(CrossDensityClaim {
                measured,
                expected: 0.25,
                sigmas,
                ok: sigmas <= 4.0,
            })
        }
        _ => None,
    };

    let all_ok = degree.as_ref().map_or(true, |d| d.ok)
        && freeness.ok
        && cross_density.as_ref().map_or(true, |c| c.ok);
    Ok(CertifyReport {
        construction: desc.clone(),
        vertices: h.n(),
        edges: h.edge_count(),
        degree,
        freeness,
        cross_density,
        scan_ms,
        search_ms,
        all_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::EvalMode;

    fn par() -> Parallelism {
        Parallelism::new(2)
    }

    #[test]
    fn h2_edge_count_and_degree() {
        let h = complete_bipartite_3graph(6).unwrap();
        assert_eq!(h.edge_count(), 18); // C(6,3) - 2 C(3,3)
        assert_eq!(h.min_s_degree(2).unwrap(), 3);
        let h8 = complete_bipartite_3graph(8).unwrap();
        assert_eq!(h8.min_s_degree(2).unwrap(), 4);
    }

    #[test]
    fn oddly_bipartite_parity_and_degree() {
        let h = oddly_bipartite(16, 3).unwrap();
        for e in h.edges() {
            let inside = e.iter().filter(|&&v| v < 8).count();
            assert!(inside == 1 || inside == 3);
        }
        assert_eq!(h.min_s_degree(3).unwrap(), 6); // 16/2 - 3 + 1
        assert!(oddly_bipartite(16, 4).is_err());
        assert!(oddly_bipartite(16, 2).is_err());
    }

    #[test]
    fn pg23_improved_structure() {
        let h = pg23_improved(16).unwrap();
        let x0 = 9;
        for e in h.edges() {
            let inside = e.iter().filter(|&&v| (v as usize) < x0).count();
            assert!(inside >= 1 && inside <= 3, "no edge inside a part");
            if inside == 2 {
                assert_eq!(e.iter().filter(|&&v| v < 2).count(), 1);
            }
        }
        assert_eq!(h.min_s_degree(3).unwrap(), 7); // n/2 - 1
        assert!(pg23_improved(15).is_err());
    }

    #[test]
    fn roedl_has_no_tetrahedron_and_no_inner_triples() {
        for seed in [1u64, 2, 3] {
            let h = roedl_tournament(6, seed).unwrap();
            let npp = 6;
            for e in h.edges() {
                let parts: std::collections::BTreeSet<usize> =
                    e.iter().map(|&v| v as usize / npp).collect();
                assert_eq!(parts.len(), 3);
            }
            let k43 = UniformHypergraph::complete(4, 3);
            let cert = contains_copy(&h, &k43, Budget::default(), &par()).unwrap();
            assert!(cert.is_free(), "seed {seed}");
        }
    }

    #[test]
    fn roedl_density_concentrates() {
        let npp = 30;
        let h = roedl_tournament(npp, 7).unwrap();
        let cross = 4.0 * (npp as f64).powi(3);
        let d = h.edge_count() as f64 / cross;
        let sigma = (0.25 * 0.75 / cross).sqrt();
        assert!((d - 0.25).abs() <= 4.0 * sigma, "density {d}");
    }

    #[test]
    fn roedl_reproducible() {
        let a = roedl_tournament(5, 99).unwrap();
        let b = roedl_tournament(5, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn layered_random_extremes() {
        let c = layered_random_complex(4, [1.0, 1.0, 1.0], 1.0, 3).unwrap();
        let full = PartiteComplex::complete(c.ground().clone(), 3);
        assert_eq!(c, full);
        let empty_top = layered_random_complex(4, [1.0, 1.0, 1.0], 0.0, 3).unwrap();
        assert_eq!(empty_top.layer_count(&IndexSet::from_parts(&[0, 1, 2])), 0);
    }

    #[test]
    fn layered_random_shared_pair_density() {
        // F = two triples sharing a pair; for n = 40 and all parameters 1/2
        // the partite density concentrates near 2^-7.
        let c = layered_random_complex(40, [0.5, 0.5, 0.5], 0.5, 11).unwrap();
        let g1 = PartiteGround::new(vec![1, 1, 2]).unwrap();
        let pat = UniformHypergraph::new(4, 3, vec![vec![0, 1, 2], vec![0, 1, 3]]).unwrap();
        let fc = crate::partite::generated_complex(&pat, &g1).unwrap();
        let mc = crate::counting::partite_hom_density(
            &fc,
            &c,
            EvalMode::MonteCarlo {
                samples: 100_000,
                seed: 21,
            },
            Budget::default(),
            &par(),
        )
        .unwrap();
        match mc.measured {
            crate::density::Value::Estimate(e) => {
                assert!(e.sigmas_from(1.0 / 128.0) < 4.0, "estimate {e:?}");
            }
            _ => panic!(),
        }
    }

    #[test]
    fn layered_random_absolute_top_density() {
        // |E|/n³ concentrates near d_12 d_13 d_23 d_123.
        let n = 40;
        let c = layered_random_complex(n, [0.5, 0.5, 0.5], 0.5, 23).unwrap();
        let top = IndexSet::from_parts(&[0, 1, 2]);
        let measured = c.layer_count(&top) as f64 / (n as f64).powi(3);
        let expected = 0.5f64.powi(4);
        // Triples sharing a pair are positively correlated, which inflates
        // the variance by roughly 3n/16 relative to the binomial term.
        let binomial = (expected * (1.0 - expected) / (n as f64).powi(3)).sqrt();
        let sigma = 3.0 * binomial;
        assert!(
            (measured - expected).abs() <= 4.0 * sigma,
            "measured {measured}, expected {expected}, sigma {sigma}"
        );
    }

    #[test]
    fn certify_h2() {
        let desc = ConstructionDescriptor::H2 { n: 10 };
        let report = certify_construction(&desc, Budget::default(), &par()).unwrap();
        assert!(report.all_ok);
        let d = report.degree.unwrap();
        assert_eq!((d.s, d.measured), (2, 5));
        assert_eq!(report.freeness.verdict, "free");
    }

    #[test]
    fn certify_oddly_bipartite_14() {
        let desc = ConstructionDescriptor::OddlyBipartite { n: 14, q: 3 };
        let report = certify_construction(&desc, Budget::default(), &par()).unwrap();
        assert!(report.all_ok);
        let d = report.degree.unwrap();
        assert_eq!((d.s, d.measured, d.claimed), (3, 5, 5));
    }

    #[test]
    fn certify_pg23_improved_14() {
        let desc = ConstructionDescriptor::Pg23Improved { n: 14 };
        let report = certify_construction(&desc, Budget::default(), &par()).unwrap();
        assert!(report.all_ok, "{report:?}");
        let d = report.degree.unwrap();
        assert_eq!((d.s, d.measured, d.claimed), (3, 6, 6));
    }
}
