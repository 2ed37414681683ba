//! Quasirandomness predicates and their supporting estimators.
//!
//! A layer H_A of a complex is η-quasirandom when the Oct of its balanced
//! function stays below η times the product of the relative densities of
//! all strict octahedron faces: Π_{T ⊊ A} d_T(H)^(2^|T|). Exact mode decides
//! this as a rational comparison; Monte-Carlo mode reports an interval and
//! refuses to force a verdict near the bound.

use std::collections::BTreeMap;

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

use crate::bits::BitRow;
use crate::budget::Budget;
use crate::density::{ratio_to_f64, Density, Value};
use crate::error::{Error, Result};
use crate::gowers::{balanced_function, oct_balanced_exact, oct_mc};
use crate::hypergraph::Vertex;
use crate::parallel::Parallelism;
use crate::partite::{IndexSet, PartiteComplex};
use crate::rng::stream_rng;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Verdict::Pass => s.serialize_bool(true),
            Verdict::Fail => s.serialize_bool(false),
            Verdict::Inconclusive => s.serialize_str("inconclusive"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo { samples: u64, stderr: f64 },
}

/// Outcome of a quasirandomness check of one layer.
#[derive(Clone, Debug)]
pub struct QuasirandomnessReport {
    pub index: IndexSet,
    pub oct: Value,
    /// η · Π_{T ⊊ A} d_T(H)^(2^|T|), as a float view.
    pub bound: f64,
    pub passes: Verdict,
    pub method: Method,
}

impl Serialize for QuasirandomnessReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(5))?;
        m.serialize_entry("index", &OneBased(self.index))?;
        m.serialize_entry("oct", &self.oct)?;
        m.serialize_entry("bound", &self.bound)?;
        m.serialize_entry("passes", &self.passes)?;
        m.serialize_entry("method", &self.method)?;
        m.end()
    }
}

struct OneBased(IndexSet);

impl Serialize for OneBased {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let members = self.0.members();
        let mut seq = s.serialize_seq(Some(members.len()))?;
        for p in members {
            seq.serialize_element(&(p + 1))?;
        }
        seq.end()
    }
}

/// Π_{B ∈ O_A^<} d_B(H) = Π_{T ⊊ A} d_T(H)^(2^|T|), exact. The strict faces
/// of the A-octahedron of index T come in 2^|T| copies.
pub fn strict_face_density_product(c: &PartiteComplex, a: &IndexSet) -> Result<BigRational> {
    let mut prod = BigRational::new(1.into(), 1.into());
    for t in a.proper_subsets() {
        let d = c.relative_density(&t)?;
        let copies = 1u32 << t.len();
        for _ in 0..copies {
            prod *= d.ratio().clone();
        }
    }
    Ok(prod)
}

/// Check η-quasirandomness of layer A relative to the complex.
pub fn quasirandom_check(
    c: &PartiteComplex,
    a: &IndexSet,
    eta: f64,
    mode: crate::counting::EvalMode,
    budget: Budget,
    par: &Parallelism,
) -> Result<QuasirandomnessReport> {
    if !(eta > 0.0) {
        return Err(Error::OutOfRange(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let face_product = strict_face_density_product(c, a)?;
    let eta_rational = BigRational::from_float(eta)
        .ok_or_else(|| Error::OutOfRange(format!("eta {eta} is not finite")))?;
    let bound_rational = eta_rational * face_product;
    let bound = ratio_to_f64(&bound_rational);
    match mode {
        crate::counting::EvalMode::Exact => {
            let oct = oct_balanced_exact(c, a, budget, par)?;
            let passes = if oct <= bound_rational {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            Ok(QuasirandomnessReport {
                index: *a,
                oct: Value::Exact(signed_ratio_to_density(&oct)?),
                bound,
                passes,
                method: Method::Exact,
            })
        }
        crate::counting::EvalMode::MonteCarlo { samples, seed } => {
            let f = balanced_function(c, a)?;
            let est = oct_mc(&f, samples, seed, par)?;
            let margin = 3.0 * est.stderr;
            let passes = if est.mean + margin <= bound {
                Verdict::Pass
            } else if est.mean - margin > bound {
                Verdict::Fail
            } else {
                Verdict::Inconclusive
            };
            Ok(QuasirandomnessReport {
                index: *a,
                oct: Value::Estimate(est),
                bound,
                passes,
                method: Method::MonteCarlo {
                    samples: est.samples,
                    stderr: est.stderr,
                },
            })
        }
    }
}

/// Oct values of balanced functions are nonnegative; tiny negative exact
/// values are impossible, so conversion failures are internal errors.
fn signed_ratio_to_density(r: &BigRational) -> Result<Density> {
    use num_traits::Signed;
    if r.is_negative() {
        return Err(Error::Internal(format!("negative Oct value {r}")));
    }
    // Oct of a [-1,1]-valued function lies in [0,1].
    Density::from_ratio(r.clone())
}

// ---------------------------------------------------------------------------
// Hidden parameters
// ---------------------------------------------------------------------------

/// The hidden-parameter ladder: ε_k = ε and, for s = k..2,
/// η_s = ½(ε_s Π_{A∈F, |A|≥s} d_A)^(2^s), ε_{s-1} = η_s |F|⁻¹ Π_{t=s}^k 2^(-t).
#[derive(Clone, Debug, Serialize)]
pub struct HiddenParameterLadder {
    pub k: usize,
    pub f_size: u64,
    /// eta[s] valid for 2 ≤ s ≤ k.
    pub eta: Vec<f64>,
    /// epsilon[s] valid for 1 ≤ s ≤ k.
    pub epsilon: Vec<f64>,
}

/// Build the ladder from the pattern size and the multiset of set densities
/// of F (one entry per set of F: its size and the relevant host density).
pub fn hidden_parameters(
    epsilon: f64,
    k: usize,
    f_size: u64,
    set_densities: &[(usize, f64)],
) -> Result<HiddenParameterLadder> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange(format!(
            "epsilon must lie strictly inside (0,1), got {epsilon}"
        )));
    }
    if k < 2 {
        return Err(Error::OutOfRange(format!("ladder needs k >= 2, got {k}")));
    }
    if f_size == 0 {
        return Err(Error::OutOfRange("|F| must be positive".into()));
    }
    if set_densities.iter().any(|&(_, d)| !(d > 0.0)) {
        return Err(Error::OutOfRange("densities must be positive".into()));
    }
    let mut eta = vec![0.0; k + 1];
    let mut eps = vec![0.0; k + 1];
    eps[k] = epsilon;
    for s in (2..=k).rev() {
        let prod: f64 = set_densities
            .iter()
            .filter(|&&(size, _)| size >= s)
            .map(|&(_, d)| d)
            .product();
        eta[s] = 0.5 * (eps[s] * prod).powi(1 << s);
        let mut tail = 1.0;
        for t in s..=k {
            tail *= 0.5f64.powi(t as i32);
        }
        eps[s - 1] = eta[s] / f_size as f64 * tail;
        if eta[s] <= 0.0 || eps[s - 1] <= 0.0 {
            return Err(Error::OutOfRange(
                "ladder underflowed to zero; inputs too small".into(),
            ));
        }
    }
    Ok(HiddenParameterLadder {
        k,
        f_size,
        eta,
        epsilon: eps,
    })
}

/// Ladder for a concrete pattern complex against host densities; |F| counts
/// the nonempty sets of the pattern.
pub fn hidden_parameters_for(
    epsilon: f64,
    f: &PartiteComplex,
    host_densities: &BTreeMap<IndexSet, f64>,
) -> Result<HiddenParameterLadder> {
    let mut set_densities = Vec::new();
    let mut f_size = 0u64;
    for a in f.indices() {
        let d = *host_densities
            .get(&a)
            .ok_or_else(|| Error::UndefinedDensity(a.to_string()))?;
        for _ in 0..f.layer_count(&a) {
            set_densities.push((a.len(), d));
            f_size += 1;
        }
    }
    hidden_parameters(epsilon, f.k(), f_size, &set_densities)
}

impl HiddenParameterLadder {
    /// ε_{s-1} < η_s < ε_s for every s.
    pub fn is_strictly_decreasing(&self) -> bool {
        (2..=self.k).all(|s| self.epsilon[s - 1] < self.eta[s] && self.eta[s] < self.epsilon[s])
    }
}

// ---------------------------------------------------------------------------
// Second-moment filter
// ---------------------------------------------------------------------------

/// Indices with |a_i − d| > α^(1/4). Under the second-moment hypotheses
/// (Σ a_i ≥ (d−α)n and Σ a_i² ≤ (d²+α)n) at most 3α^(1/2) n indices deviate.
pub fn second_moment_filter(a: &[f64], d: f64, alpha: f64) -> Result<Vec<usize>> {
    if !(alpha > 0.0 && alpha < 1.0 && d > 0.0 && d < 1.0) {
        return Err(Error::OutOfRange(
            "second-moment filter needs 0 < alpha, d < 1".into(),
        ));
    }
    let threshold = alpha.powf(0.25);
    Ok(a.iter()
        .enumerate()
        .filter(|&(_, &x)| (x - d).abs() > threshold)
        .map(|(i, _)| i)
        .collect())
}

/// The filter's hypotheses, checked numerically.
pub fn second_moment_hypotheses(a: &[f64], d: f64, alpha: f64) -> bool {
    let n = a.len() as f64;
    let sum: f64 = a.iter().sum();
    let sum_sq: f64 = a.iter().map(|x| x * x).sum();
    sum >= (d - alpha) * n && sum_sq <= (d * d + alpha) * n
}

// ---------------------------------------------------------------------------
// ε-regularity refutation sampling
// ---------------------------------------------------------------------------

/// The worst density deviation found by random subset sampling, with the
/// witnessing pair. A one-sided tool: large deviations refute ε-regularity,
/// small maxima prove nothing.
#[derive(Clone, Debug, Serialize)]
pub struct RegularityEstimate {
    pub density: f64,
    pub max_deviation: f64,
    pub witness_x: Vec<Vertex>,
    pub witness_y: Vec<Vertex>,
    pub trials: u64,
}

pub fn epsilon_regular_estimate(
    c: &PartiteComplex,
    a: &IndexSet,
    epsilon: f64,
    trials: u64,
    seed: u64,
    par: &Parallelism,
) -> Result<RegularityEstimate> {
    if a.len() != 2 {
        return Err(Error::InvalidArity(format!(
            "regularity estimate needs a pair index, got {a}"
        )));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::OutOfRange(format!(
            "epsilon {epsilon} outside (0,1]"
        )));
    }
    let parts = a.members();
    let (i, j) = (parts[0], parts[1]);
    let (nx, ny) = (c.ground().size(i), c.ground().size(j));
    let min_x = (epsilon * nx as f64).ceil() as usize;
    let min_y = (epsilon * ny as f64).ceil() as usize;
    if min_x < 1 || min_y < 1 || (nx as f64) < 1.0 / epsilon || (ny as f64) < 1.0 / epsilon {
        return Err(Error::OutOfRange(format!(
            "parts of sizes {nx} and {ny} are too small for epsilon {epsilon}"
        )));
    }
    // Edge rows local to the pair.
    let (oi, oj) = (c.ground().offset(i), c.ground().offset(j));
    let mut rows = vec![BitRow::zeros(ny); nx];
    let mut edge_total = 0u64;
    for t in c.layer(a) {
        rows[t[0] as usize - oi].set(t[1] as usize - oj);
        edge_total += 1;
    }
    let density = edge_total as f64 / (nx as f64 * ny as f64);

    let chunk = 256u64;
    let chunks = (trials + chunk - 1) / chunk;
    let best: Vec<(f64, Vec<usize>, Vec<usize>)> = par.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|ci| {
                let lo = ci * chunk;
                let hi = (lo + chunk).min(trials);
                let mut rng = stream_rng(seed, ci);
                let mut best_dev = -1.0;
                let mut best_pair = (Vec::new(), Vec::new());
                let mut xs: Vec<usize> = (0..nx).collect();
                let mut ys: Vec<usize> = (0..ny).collect();
                for _ in lo..hi {
                    let sx = rng.gen_range(min_x..=nx);
                    let sy = rng.gen_range(min_y..=ny);
                    xs.shuffle(&mut rng);
                    ys.shuffle(&mut rng);
                    let x_pick = &xs[..sx];
                    let mut y_mask = BitRow::zeros(ny);
                    for &y in &ys[..sy] {
                        y_mask.set(y);
                    }
                    let mut count = 0u64;
                    for &x in x_pick {
                        count += rows[x].count_and(&y_mask);
                    }
                    let dev = (count as f64 / (sx as f64 * sy as f64) - density).abs();
                    if dev > best_dev {
                        best_dev = dev;
                        best_pair = (x_pick.to_vec(), ys[..sy].to_vec());
                    }
                }
                (best_dev, best_pair.0, best_pair.1)
            })
            .collect()
    });
    let mut max_deviation = -1.0;
    let mut witness_x = Vec::new();
    let mut witness_y = Vec::new();
    for (dev, wx, wy) in best {
        if dev > max_deviation {
            max_deviation = dev;
            witness_x = wx;
            witness_y = wy;
        }
    }
    witness_x.sort_unstable();
    witness_y.sort_unstable();
    Ok(RegularityEstimate {
        density,
        max_deviation: max_deviation.max(0.0),
        witness_x: witness_x.into_iter().map(|x| (x + oi) as Vertex).collect(),
        witness_y: witness_y.into_iter().map(|y| (y + oj) as Vertex).collect(),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::EvalMode;
    use crate::partite::{generated_complex, PartiteGround};
    use crate::UniformHypergraph;

    fn par() -> Parallelism {
        Parallelism::new(2)
    }

    #[test]
    fn complete_complex_passes_any_eta() {
        let g = PartiteGround::new(vec![4, 4, 4]).unwrap();
        let c = PartiteComplex::complete(g, 3);
        let a = IndexSet::from_parts(&[0, 1, 2]);
        let r =
            quasirandom_check(&c, &a, 1e-9, EvalMode::Exact, Budget::default(), &par()).unwrap();
        assert_eq!(r.passes, Verdict::Pass);
        match r.oct {
            Value::Exact(d) => assert!(d.is_zero()),
            _ => panic!(),
        }
    }

    #[test]
    fn bound_specialises_to_triple_product_power_four() {
        // With complete vertex layers the strict-face product over a triple
        // index is (d_12 d_13 d_23)^4 exactly.
        use rand::Rng;
        let g = PartiteGround::new(vec![3, 3, 3]).unwrap();
        let mut rng = crate::rng::stream_rng(8, 0);
        let mut edges = Vec::new();
        for x in 0..3u16 {
            for y in 0..3u16 {
                for z in 0..3u16 {
                    if rng.gen_bool(0.7) {
                        edges.push(vec![x, 3 + y, 6 + z]);
                    }
                }
            }
        }
        let h = UniformHypergraph::new(9, 3, edges).unwrap();
        let c = generated_complex(&h, &g).unwrap();
        let a = IndexSet::from_parts(&[0, 1, 2]);
        let prod = strict_face_density_product(&c, &a).unwrap();
        let mut expect = BigRational::new(1.into(), 1.into());
        for pair in [[0, 1], [0, 2], [1, 2]] {
            let d = c.relative_density(&IndexSet::from_parts(&pair)).unwrap();
            expect *= d.ratio().pow(4);
        }
        assert_eq!(prod, expect);
    }

    #[test]
    fn ladder_base_case() {
        let l = hidden_parameters(0.1, 2, 1, &[(2, 1.0)]).unwrap();
        assert!((l.eta[2] - 0.5 * 0.1f64.powi(4)).abs() < 1e-18);
        assert!((l.epsilon[1] - l.eta[2] * 0.25).abs() < 1e-18);
        assert!(l.is_strictly_decreasing());
    }

    #[test]
    fn ladder_rejects_endpoints() {
        assert!(hidden_parameters(1.0, 2, 1, &[(2, 1.0)]).is_err());
        assert!(hidden_parameters(0.0, 2, 1, &[(2, 1.0)]).is_err());
        assert!(hidden_parameters(0.5, 2, 1, &[(2, 0.0)]).is_err());
    }

    #[test]
    fn ladder_decreases_on_random_inputs() {
        // k = 4 ladders underflow f64 for small densities (the constants
        // shrink doubly exponentially), so the random domain stays at k ≤ 3.
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(77, 0);
        for _ in 0..100 {
            let k = rng.gen_range(2..=3);
            let eps = rng.gen_range(0.1..0.9);
            let sets: Vec<(usize, f64)> = (0..rng.gen_range(1..6))
                .map(|_| (rng.gen_range(1..=k), rng.gen_range(0.5..1.0)))
                .collect();
            let l = hidden_parameters(eps, k, sets.len() as u64, &sets).unwrap();
            assert!(l.is_strictly_decreasing(), "k={k} eps={eps} sets={sets:?}");
        }
    }

    #[test]
    fn filter_finds_outliers() {
        let d = 0.5;
        let alpha = 0.01;
        let mut a = vec![d; 50];
        assert!(second_moment_filter(&a, d, alpha).unwrap().is_empty());
        a[17] = d + 2.0 * alpha.powf(0.25);
        assert_eq!(second_moment_filter(&a, d, alpha).unwrap(), vec![17]);
    }

    #[test]
    fn filter_bound_on_random_profile() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(3, 0);
        let n = 400;
        let p = 0.5;
        // Normalised degree profile of a dense random bipartite graph.
        let m = 200;
        let a: Vec<f64> = (0..n)
            .map(|_| (0..m).filter(|_| rng.gen_bool(p)).count() as f64 / m as f64)
            .collect();
        let alpha = 0.02;
        assert!(second_moment_hypotheses(&a, p, alpha));
        let deviating = second_moment_filter(&a, p, alpha).unwrap();
        assert!(deviating.len() as f64 <= 3.0 * alpha.sqrt() * n as f64);
    }

    fn complete_bipartite(n: usize) -> PartiteComplex {
        let g = PartiteGround::new(vec![n, n]).unwrap();
        PartiteComplex::complete(g, 2)
    }

    #[test]
    fn complete_graph_has_zero_deviation() {
        let c = complete_bipartite(12);
        let a = IndexSet::from_parts(&[0, 1]);
        let est = epsilon_regular_estimate(&c, &a, 0.25, 200, 1, &par()).unwrap();
        assert_eq!(est.max_deviation, 0.0);
    }

    #[test]
    fn block_graph_deviation_found() {
        // Half-half block bipartite graph on 8+8 per side.
        let n = 16;
        let g = PartiteGround::new(vec![n, n]).unwrap();
        let mut edges = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if (x < n / 2) == (y < n / 2) {
                    edges.push(vec![x as Vertex, (n + y) as Vertex]);
                }
            }
        }
        let h = UniformHypergraph::new(2 * n, 2, edges).unwrap();
        let c = generated_complex(&h, &g).unwrap();
        let a = IndexSet::from_parts(&[0, 1]);
        let est = epsilon_regular_estimate(&c, &a, 0.25, 100_000, 5, &par()).unwrap();
        assert!(
            est.max_deviation >= 0.25,
            "block structure must be refutable, found {}",
            est.max_deviation
        );
    }

    #[test]
    fn layered_random_complex_is_quasirandom() {
        // The layered model at n = 40 per part with all parameters 1/2 is
        // quasirandom by construction; the Monte-Carlo check passes at
        // eta = 0.1.
        let c = crate::constructions::layered_random_complex(40, [0.5; 3], 0.5, 7).unwrap();
        let a = IndexSet::from_parts(&[0, 1, 2]);
        let r = quasirandom_check(
            &c,
            &a,
            0.1,
            EvalMode::MonteCarlo {
                samples: 400_000,
                seed: 13,
            },
            Budget::default(),
            &par(),
        )
        .unwrap();
        assert_eq!(r.passes, Verdict::Pass, "{r:?}");
    }

    #[test]
    fn random_graph_deviations_stay_small() {
        // G(200, 200, 1/2) with epsilon = 0.1 and 10^4 trials: the observed
        // maximum deviation stays well under 0.05 (pinned by the seed).
        use rand::Rng;
        let n = 200;
        let g = PartiteGround::new(vec![n, n]).unwrap();
        let mut rng = crate::rng::stream_rng(2024, 0);
        let mut edges = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if rng.gen_bool(0.5) {
                    edges.push(vec![x as Vertex, (n + y) as Vertex]);
                }
            }
        }
        let h = UniformHypergraph::new(2 * n, 2, edges).unwrap();
        let c = generated_complex(&h, &g).unwrap();
        let a = IndexSet::from_parts(&[0, 1]);
        let est = epsilon_regular_estimate(&c, &a, 0.1, 10_000, 3, &par()).unwrap();
        assert!(
            est.max_deviation < 0.05,
            "max deviation {}",
            est.max_deviation
        );
    }

    #[test]
    fn parts_too_small_rejected() {
        let c = complete_bipartite(3);
        let a = IndexSet::from_parts(&[0, 1]);
        assert!(epsilon_regular_estimate(&c, &a, 0.25, 10, 1, &par()).is_err());
    }

    /// Directional exercises of the regularity / C4-count / small-Oct
    /// equivalence, with the transfer constants the proofs produce
    /// (10ε, 64ε^{1/4}, ε^{1/12}). Sharpness is not attempted.
    #[test]
    fn equivalence_transfer_directions() {
        use crate::gowers::{c4_characteristic_exact, oct_balanced_exact};

        // Counting ⇒ small Oct with constant 64·ε₂^{1/4}: for any bipartite
        // graph, C4 of the balanced function is bounded by the fourth root
        // of the C4-count defect.
        for seed in 0..10 {
            let c = {
                use rand::Rng;
                let n = 14;
                let g = PartiteGround::new(vec![n, n]).unwrap();
                let mut rng = crate::rng::stream_rng(500 + seed, 0);
                let p = rng.gen_range(0.25..0.85);
                let mut edges = Vec::new();
                for x in 0..n {
                    for y in 0..n {
                        if rng.gen_bool(p) {
                            edges.push(vec![x as Vertex, (n + y) as Vertex]);
                        }
                    }
                }
                let h = UniformHypergraph::new(2 * n, 2, edges).unwrap();
                generated_complex(&h, &g).unwrap()
            };
            let a = IndexSet::from_parts(&[0, 1]);
            let d = c.absolute_density(&a).as_f64();
            let d_c4 = ratio_to_f64(&c4_characteristic_exact(&c, &a, &par()).unwrap());
            let eps2 = (d_c4 - d.powi(4)).abs();
            let oct = ratio_to_f64(&oct_balanced_exact(&c, &a, Budget::default(), &par()).unwrap());
            assert!(
                oct <= 64.0 * eps2.powf(0.25) + 1e-12,
                "seed {seed}: Oct {oct} vs 64·ε₂^(1/4) = {}",
                64.0 * eps2.powf(0.25)
            );

            // Small Oct ⇒ regularity at scale ε₁ = ε₃^{1/12}: no sampled
            // subset pair above the ε₁ size threshold may deviate by more
            // than ε₁ (the Cauchy-Schwarz chain is unconditional).
            let eps1 = oct.max(1e-30).powf(1.0 / 12.0).min(1.0);
            if (14.0 * eps1).ceil() <= 14.0 && 14.0 >= 1.0 / eps1 {
                let est = epsilon_regular_estimate(&c, &a, eps1, 2_000, seed, &par()).unwrap();
                assert!(
                    est.max_deviation <= eps1 + 1e-9,
                    "seed {seed}: deviation {} above ε₁ = {eps1}",
                    est.max_deviation
                );
            }
        }

        // Regularity ⇒ counting with constant 10ε: the complete bipartite
        // graph minus a perfect matching deviates by at most 1/(εn) + 1/n on
        // ε-scale subsets, and its C4 count defect sits far below 10ε.
        let n = 36usize;
        let g = PartiteGround::new(vec![n, n]).unwrap();
        let mut edges = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    edges.push(vec![x as Vertex, (n + y) as Vertex]);
                }
            }
        }
        let h = UniformHypergraph::new(2 * n, 2, edges).unwrap();
        let c = generated_complex(&h, &g).unwrap();
        let a = IndexSet::from_parts(&[0, 1]);
        let eps = 2.0 / (n as f64).sqrt();
        let d = c.absolute_density(&a).as_f64();
        let d_c4 = ratio_to_f64(&c4_characteristic_exact(&c, &a, &par()).unwrap());
        assert!(
            (d_c4 - d.powi(4)).abs() <= 10.0 * eps,
            "C4 defect {} above 10ε = {}",
            (d_c4 - d.powi(4)).abs(),
            10.0 * eps
        );
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let n = 16;
        let g = PartiteGround::new(vec![n, n]).unwrap();
        let mut edges = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if (x * 7 + y * 3) % 5 < 2 {
                    edges.push(vec![x as Vertex, (n + y) as Vertex]);
                }
            }
        }
        let h = UniformHypergraph::new(2 * n, 2, edges).unwrap();
        let c = generated_complex(&h, &g).unwrap();
        let a = IndexSet::from_parts(&[0, 1]);
        let e1 = epsilon_regular_estimate(&c, &a, 0.25, 5_000, 9, &Parallelism::new(1)).unwrap();
        let e8 = epsilon_regular_estimate(&c, &a, 0.25, 5_000, 9, &Parallelism::new(8)).unwrap();
        assert_eq!(e1.max_deviation, e8.max_deviation);
        assert_eq!(e1.witness_x, e8.witness_x);
        assert_eq!(e1.witness_y, e8.witness_y);
    }
}
