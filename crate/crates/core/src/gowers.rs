//! Gowers octahedral inner products, Oct, and box norms.
//!
//! Three evaluation paths share one factorized algorithm: exact rationals,
//! plain `f64`, and Monte-Carlo. The map space is walked as an odometer over
//! doubled coordinates of all parts but the last; the last part factorizes
//! into two independent inner sums, one per half of the octahedron faces.
//! Balanced functions of a complex layer additionally get a bitset kernel
//! that reduces the inner sums to popcount patterns, which is what makes
//! exact quasirandomness checks feasible beyond toy sizes.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::bits::BitRow;
use crate::budget::Budget;
use crate::density::{ratio_to_f64, Estimate};
use crate::error::{Error, Result};
use crate::hypergraph::Vertex;
use crate::parallel::Parallelism;
use crate::partite::{IndexSet, PartiteComplex, PartiteGround, Tuple};
use crate::rng::mc_estimate;

/// A real-valued function on K_A(X), stored sparsely on its support with
/// exact rational values.
#[derive(Clone, PartialEq, Debug)]
pub struct WeightedEdgeFunction {
    ground: PartiteGround,
    index: IndexSet,
    support: Vec<Tuple>,
    values: Vec<BigRational>,
}

impl WeightedEdgeFunction {
    pub fn new(
        ground: PartiteGround,
        index: IndexSet,
        entries: Vec<(Tuple, BigRational)>,
    ) -> Result<Self> {
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Parse(format!("duplicate tuple {:?}", w[0].0)));
            }
        }
        let members = index.members();
        for (t, _) in &entries {
            if t.len() != members.len() {
                return Err(Error::NotPartite(format!(
                    "tuple {t:?} has wrong arity for index {index}"
                )));
            }
            for (slot, &part) in members.iter().enumerate() {
                let v = t[slot] as usize;
                let lo = ground.offset(part);
                if v < lo || v >= lo + ground.size(part) {
                    return Err(Error::NotPartite(format!(
                        "tuple {t:?} leaves part {} at slot {slot}",
                        part + 1
                    )));
                }
            }
        }
        let (support, values) = entries.into_iter().unzip();
        Ok(WeightedEdgeFunction {
            ground,
            index,
            support,
            values,
        })
    }

    pub fn ground(&self) -> &PartiteGround {
        &self.ground
    }

    pub fn index(&self) -> &IndexSet {
        &self.index
    }

    pub fn support(&self) -> &[Tuple] {
        &self.support
    }

    pub fn value(&self, t: &[Vertex]) -> Option<&BigRational> {
        self.support
            .binary_search_by(|s| s.as_slice().cmp(t))
            .ok()
            .map(|i| &self.values[i])
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Tuple, &BigRational)> {
        self.support.iter().zip(self.values.iter())
    }

    /// Exact sum of all values over the support.
    pub fn sum_values(&self) -> BigRational {
        let mut acc = BigRational::zero();
        for v in &self.values {
            acc += v.clone();
        }
        acc
    }

    pub fn negated(&self) -> WeightedEdgeFunction {
        WeightedEdgeFunction {
            ground: self.ground.clone(),
            index: self.index,
            support: self.support.clone(),
            values: self.values.iter().map(|v| -v.clone()).collect(),
        }
    }

    fn dims(&self) -> Vec<usize> {
        self.index
            .members()
            .into_iter()
            .map(|p| self.ground.size(p))
            .collect()
    }

    fn flat_index(&self, t: &[Vertex]) -> usize {
        let members = self.index.members();
        let dims = self.dims();
        let mut idx = 0;
        for (slot, &part) in members.iter().enumerate() {
            let local = t[slot] as usize - self.ground.offset(part);
            idx = idx * dims[slot] + local;
        }
        idx
    }

    pub fn dense_rational(&self) -> Vec<BigRational> {
        let size: usize = self.dims().iter().product();
        let mut data = vec![BigRational::zero(); size];
        for (t, v) in self.support.iter().zip(&self.values) {
            data[self.flat_index(t)] = v.clone();
        }
        data
    }

    pub fn dense_f64(&self) -> Vec<f64> {
        let size: usize = self.dims().iter().product();
        let mut data = vec![0.0; size];
        for (t, v) in self.support.iter().zip(&self.values) {
            data[self.flat_index(t)] = ratio_to_f64(v);
        }
        data
    }
}

/// (H_A − d_A)·H_A*: 1−d_A on the layer, −d_A on the rest of the star,
/// zero elsewhere. Sums to zero exactly.
pub fn balanced_function(c: &PartiteComplex, a: &IndexSet) -> Result<WeightedEdgeFunction> {
    let d = c.relative_density(a)?;
    let one_minus = BigRational::one() - d.ratio().clone();
    let minus_d = -d.ratio().clone();
    let mut entries = Vec::new();
    for t in c.star(a) {
        let v = if c.has_tuple(a, &t) {
            one_minus.clone()
        } else {
            minus_d.clone()
        };
        entries.push((t, v));
    }
    WeightedEdgeFunction::new(c.ground().clone(), *a, entries)
}

/// The characteristic function of a layer.
pub fn characteristic_function(c: &PartiteComplex, a: &IndexSet) -> Result<WeightedEdgeFunction> {
    let entries = c
        .layer(a)
        .iter()
        .map(|t| (t.clone(), BigRational::one()))
        .collect();
    WeightedEdgeFunction::new(c.ground().clone(), *a, entries)
}

/// The 0/1 indicator of an explicit tuple set.
pub fn indicator_function(
    ground: PartiteGround,
    index: IndexSet,
    tuples: Vec<Tuple>,
) -> Result<WeightedEdgeFunction> {
    let entries = tuples
        .into_iter()
        .map(|t| (t, BigRational::one()))
        .collect();
    WeightedEdgeFunction::new(ground, index, entries)
}

/// The A-octahedron: each part of A contributes a doubled vertex class and
/// the faces are the 2^|A| transversals. A face is encoded as a bit vector:
/// bit j picks which copy the j-th member part uses, so face functions come
/// ordered with slot |A|-1 in the highest bit.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct OctahedronShape {
    index: IndexSet,
}

impl OctahedronShape {
    pub fn new(index: IndexSet) -> Self {
        OctahedronShape { index }
    }

    pub fn index(&self) -> &IndexSet {
        &self.index
    }

    pub fn face_count(&self) -> usize {
        1 << self.index.len()
    }

    /// Faces as copy-choice bit vectors, aligned with the members of A in
    /// increasing part order.
    pub fn faces(&self) -> impl Iterator<Item = u32> {
        0..(1u32 << self.index.len())
    }
}

trait Scalar:
    Clone + Send + Sync + Zero + One + std::ops::Mul<Output = Self> + std::ops::AddAssign
{
}
impl Scalar for f64 {}
impl Scalar for BigRational {}

/// Un-normalized inner-product sum over the doubled map space.
///
/// `tables[eps]` is the dense table of the face whose coordinate choices are
/// the bits of `eps` (bit j picks the copy for slot j; slot a-1 is the
/// highest bit).
fn inner_sum<T: Scalar>(tables: &[&[T]], dims: &[usize]) -> T {
    let a = dims.len();
    debug_assert_eq!(tables.len(), 1 << a);
    let half = 1usize << (a - 1);
    let mut bases = vec![0usize; tables.len()];
    let mut acc = T::zero();
    odometer(tables, dims, 0, &mut bases, &mut acc, half);
    acc
}

fn odometer<T: Scalar>(
    tables: &[&[T]],
    dims: &[usize],
    slot: usize,
    bases: &mut [usize],
    acc: &mut T,
    half: usize,
) {
    let a = dims.len();
    if slot == a - 1 {
        let nz = dims[a - 1];
        let mut s0 = T::zero();
        let mut s1 = T::zero();
        for z in 0..nz {
            let mut p0 = T::one();
            for eps in 0..half {
                p0 = p0 * tables[eps][bases[eps] + z].clone();
            }
            s0 += p0;
            let mut p1 = T::one();
            for eps in half..2 * half {
                p1 = p1 * tables[eps][bases[eps] + z].clone();
            }
            s1 += p1;
        }
        *acc += s0 * s1;
        return;
    }
    // stride of this slot in row-major order
    let stride: usize = dims[slot + 1..].iter().product();
    for x0 in 0..dims[slot] {
        for x1 in 0..dims[slot] {
            for eps in 0..tables.len() {
                let choice = if eps >> slot & 1 == 0 { x0 } else { x1 };
                bases[eps] += choice * stride;
            }
            odometer(tables, dims, slot + 1, bases, acc, half);
            for eps in 0..tables.len() {
                let choice = if eps >> slot & 1 == 0 { x0 } else { x1 };
                bases[eps] -= choice * stride;
            }
        }
    }
}

fn check_faces(fs: &[&WeightedEdgeFunction]) -> Result<(IndexSet, Vec<usize>)> {
    let first = fs
        .first()
        .ok_or_else(|| Error::InvalidArity("no face functions".into()))?;
    let a = *first.index();
    if a.is_empty() {
        return Err(Error::InvalidArity("empty index".into()));
    }
    let shape = OctahedronShape::new(a);
    if fs.len() != shape.face_count() {
        return Err(Error::InvalidArity(format!(
            "expected {} faces for index {a}, got {}",
            shape.face_count(),
            fs.len()
        )));
    }
    for f in fs {
        if f.index() != &a || f.ground() != first.ground() {
            return Err(Error::GroundMismatch(
                "face functions disagree on ground or index".into(),
            ));
        }
    }
    Ok((a, first.dims()))
}

fn doubled_space(dims: &[usize]) -> u128 {
    dims.iter().map(|&d| (d as u128) * (d as u128)).product()
}

/// Exact Gowers inner product ⟨{f_B}⟩ of 2^|A| face functions.
pub fn gowers_inner_product_exact(
    fs: &[&WeightedEdgeFunction],
    budget: Budget,
) -> Result<BigRational> {
    let (_, dims) = check_faces(fs)?;
    budget.admit(doubled_space(&dims))?;
    let tables: Vec<Vec<BigRational>> = fs.iter().map(|f| f.dense_rational()).collect();
    let refs: Vec<&[BigRational]> = tables.iter().map(|t| t.as_slice()).collect();
    let sum = inner_sum(&refs, &dims);
    let norm = BigInt::from(doubled_space(&dims));
    Ok(sum / BigRational::from(norm))
}

/// Same inner product in floating point.
pub fn gowers_inner_product_f64(fs: &[&WeightedEdgeFunction], budget: Budget) -> Result<f64> {
    let (_, dims) = check_faces(fs)?;
    budget.admit(doubled_space(&dims))?;
    let tables: Vec<Vec<f64>> = fs.iter().map(|f| f.dense_f64()).collect();
    let refs: Vec<&[f64]> = tables.iter().map(|t| t.as_slice()).collect();
    let sum = inner_sum(&refs, &dims);
    Ok(sum / doubled_space(&dims) as f64)
}

/// Monte-Carlo estimate of the inner product.
pub fn gowers_inner_product_mc(
    fs: &[&WeightedEdgeFunction],
    samples: u64,
    seed: u64,
    par: &Parallelism,
) -> Result<Estimate> {
    use rand::Rng;
    let (a, dims) = check_faces(fs)?;
    let tables: Vec<Vec<f64>> = fs.iter().map(|f| f.dense_f64()).collect();
    let n_slots = a.len();
    let strides: Vec<usize> = (0..n_slots)
        .map(|j| dims[j + 1..].iter().product())
        .collect();
    Ok(mc_estimate(par, seed, 0, samples, |rng| {
        let mut lo = [0usize; 32];
        let mut hi = [0usize; 32];
        for j in 0..n_slots {
            lo[j] = rng.gen_range(0..dims[j]);
            hi[j] = rng.gen_range(0..dims[j]);
        }
        let mut prod = 1.0;
        for (eps, table) in tables.iter().enumerate() {
            let mut idx = 0;
            for j in 0..n_slots {
                let choice = if eps >> j & 1 == 0 { lo[j] } else { hi[j] };
                idx += choice * strides[j];
            }
            prod *= table[idx];
            if prod == 0.0 {
                break;
            }
        }
        prod
    }))
}

/// Oct(f): the inner product with every face equal to f. Nonnegative for
/// |A| ≥ 2; a negative exact value signals an internal bug.
pub fn oct_exact(f: &WeightedEdgeFunction, budget: Budget) -> Result<BigRational> {
    let faces: Vec<&WeightedEdgeFunction> = vec![f; 1 << f.index().len()];
    let v = gowers_inner_product_exact(&faces, budget)?;
    if f.index().len() >= 2 && v.is_negative() {
        return Err(Error::Internal(format!(
            "Oct of a {}-index function came out negative: {v}",
            f.index()
        )));
    }
    Ok(v)
}

pub fn oct_f64(f: &WeightedEdgeFunction, budget: Budget) -> Result<f64> {
    let faces: Vec<&WeightedEdgeFunction> = vec![f; 1 << f.index().len()];
    let v = gowers_inner_product_f64(&faces, budget)?;
    if f.index().len() >= 2 && v < -1e-12 {
        return Err(Error::Internal(format!(
            "Oct of a {}-index function came out at {v}, below the negativity tolerance",
            f.index()
        )));
    }
    Ok(v)
}

pub fn oct_mc(
    f: &WeightedEdgeFunction,
    samples: u64,
    seed: u64,
    par: &Parallelism,
) -> Result<Estimate> {
    let faces: Vec<&WeightedEdgeFunction> = vec![f; 1 << f.index().len()];
    gowers_inner_product_mc(&faces, samples, seed, par)
}

/// ‖f‖ = Oct(f)^(2^-|A|).
pub fn box_norm_f64(f: &WeightedEdgeFunction, budget: Budget) -> Result<f64> {
    let oct = oct_f64(f, budget)?.max(0.0);
    Ok(oct.powf(0.5f64.powi(f.index().len() as i32)))
}

// ---------------------------------------------------------------------------
// Bitset kernels for layer functions
// ---------------------------------------------------------------------------

/// Rows of a pair layer {i,j}: bit y (local in X_j) of row x (local in X_i).
fn pair_rows(c: &PartiteComplex, i: usize, j: usize) -> Vec<BitRow> {
    let a = IndexSet::from_parts(&[i, j]);
    let (ni, nj) = (c.ground().size(i), c.ground().size(j));
    let (oi, oj) = (c.ground().offset(i), c.ground().offset(j));
    let mut rows = vec![BitRow::zeros(nj); ni];
    let flip = j < i;
    for t in c.layer(&a) {
        let (x, y) = if flip { (t[1], t[0]) } else { (t[0], t[1]) };
        rows[x as usize - oi].set(y as usize - oj);
    }
    rows
}

fn vertex_mask(c: &PartiteComplex, i: usize) -> BitRow {
    let a = IndexSet::from_parts(&[i]);
    let mut mask = BitRow::zeros(c.ground().size(i));
    for t in c.layer(&a) {
        mask.set(t[0] as usize - c.ground().offset(i));
    }
    mask
}

/// Exact Oct of the balanced function of layer A, via popcount patterns.
/// Specialised for |A| = 2 and |A| = 3; other sizes fall back to the generic
/// dense evaluation.
pub fn oct_balanced_exact(
    c: &PartiteComplex,
    a: &IndexSet,
    budget: Budget,
    par: &Parallelism,
) -> Result<BigRational> {
    match a.len() {
        2 => oct_balanced_pair(c, a, budget, par),
        3 => oct_balanced_triple(c, a, budget, par),
        _ => oct_exact(&balanced_function(c, a)?, budget),
    }
}

/// |A| = 2: Oct(f̄) = Σ_{x,x'} (Σ_y f̄(x,y) f̄(x',y))² normalized.
fn oct_balanced_pair(
    c: &PartiteComplex,
    a: &IndexSet,
    budget: Budget,
    par: &Parallelism,
) -> Result<BigRational> {
    let parts = a.members();
    let (i, j) = (parts[0], parts[1]);
    let (ni, nj) = (c.ground().size(i), c.ground().size(j));
    budget.admit((ni as u128) * (ni as u128) * (nj as u128 / 64 + 1))?;

    let d = c.relative_density(a)?;
    // f̄ values: (q-p)/q on edges, -p/q on star-only pairs.
    let p = d.numer().clone();
    let q = d.denom().clone();
    let (p_i, q_i) = (
        bigint_to_i128(&p).ok_or_else(|| Error::Internal("density overflow".into()))?,
        bigint_to_i128(&q).ok_or_else(|| Error::Internal("density overflow".into()))?,
    );
    let edge = pair_rows(c, i, j);
    let hi = vertex_mask(c, i);
    let hj = vertex_mask(c, j);
    let mut star_only: Vec<BitRow> = Vec::with_capacity(ni);
    for x in 0..ni {
        let mut row = if hi.get(x) {
            hj.clone()
        } else {
            BitRow::zeros(nj)
        };
        row.andnot_assign(&edge[x]);
        star_only.push(row);
    }

    let ee = (q_i - p_i) * (q_i - p_i);
    let es = -(q_i - p_i) * p_i;
    let ss = p_i * p_i;
    let partials: Vec<BigInt> = par.install(|| {
        (0..ni)
            .into_par_iter()
            .map(|x0| {
                let mut acc = BigInt::zero();
                for x1 in 0..ni {
                    let c_ee = edge[x0].count_and(&edge[x1]) as i128;
                    let c_es = edge[x0].count_and(&star_only[x1]) as i128;
                    let c_se = star_only[x0].count_and(&edge[x1]) as i128;
                    let c_ss = star_only[x0].count_and(&star_only[x1]) as i128;
                    let w = c_ee * ee + (c_es + c_se) * es + c_ss * ss;
                    acc += BigInt::from(w) * BigInt::from(w);
                }
                acc
            })
            .collect()
    });
    let mut total = BigInt::zero();
    for s in partials {
        total += s;
    }
    // Σ w² / (q⁴ · n_i² · n_j²)
    let norm = q.pow(4) * BigInt::from(ni).pow(2) * BigInt::from(nj).pow(2);
    Ok(BigRational::new(total, norm))
}

/// |A| = 3: for each doubled (x0,x1,y0,y1), classify z by the four positions
/// being edge / star-only and fold the popcounts with the balanced weights.
fn oct_balanced_triple(
    c: &PartiteComplex,
    a: &IndexSet,
    budget: Budget,
    par: &Parallelism,
) -> Result<BigRational> {
    let parts = a.members();
    let (i, j, l) = (parts[0], parts[1], parts[2]);
    let (ni, nj, nl) = (c.ground().size(i), c.ground().size(j), c.ground().size(l));
    budget.admit(
        (ni as u128) * (ni as u128) * (nj as u128) * (nj as u128) * (nl as u128 / 64 + 1) * 16,
    )?;

    let d = c.relative_density(a)?;
    let p = bigint_to_i128(d.numer()).ok_or_else(|| Error::Internal("density overflow".into()))?;
    let q = bigint_to_i128(d.denom()).ok_or_else(|| Error::Internal("density overflow".into()))?;

    let (oi, oj) = (c.ground().offset(i), c.ground().offset(j));
    let rows_ij = pair_rows(c, i, j);
    let rows_il = pair_rows(c, i, l);
    let rows_jl = pair_rows(c, j, l);
    let hl = vertex_mask(c, l);

    // Top-layer rows over X_l per (x, y).
    let mut top = vec![BitRow::zeros(nl); ni * nj];
    for t in c.layer(a) {
        let (x, y, z) = (
            t[0] as usize - oi,
            t[1] as usize - oj,
            t[2] as usize - c.ground().offset(l),
        );
        top[x * nj + y].set(z);
    }
    // Star rows: z completes (x,y) when (x,y) is a pair, (x,z) and (y,z)
    // are pairs, and all three vertices are present.
    let star = |x: usize, y: usize| -> Option<BitRow> {
        if !rows_ij[x].get(y) {
            return None;
        }
        let mut row = rows_il[x].clone();
        row.and_assign(&rows_jl[y]);
        row.and_assign(&hl);
        Some(row)
    };

    // Balanced weights for a pattern with m edge-positions out of 4:
    // (q-p)^m (-p)^(4-m), over q⁴.
    let mut weight = [0i128; 5];
    for m in 0..=4 {
        let mut w = 1i128;
        for _ in 0..m {
            w *= q - p;
        }
        for _ in m..4 {
            w *= -p;
        }
        weight[m as usize] = w;
    }

    let partials: Vec<BigInt> = par.install(|| {
        (0..ni)
            .into_par_iter()
            .map(|x0| {
                let mut acc = BigInt::zero();
                for x1 in 0..ni {
                    for y0 in 0..nj {
                        for y1 in 0..nj {
                            let stars = [star(x0, y0), star(x0, y1), star(x1, y0), star(x1, y1)];
                            if stars.iter().any(|s| s.is_none()) {
                                continue;
                            }
                            let positions =
                                [x0 * nj + y0, x0 * nj + y1, x1 * nj + y0, x1 * nj + y1];
                            let mut edge_rows: Vec<&BitRow> = Vec::with_capacity(4);
                            let mut so_rows: Vec<BitRow> = Vec::with_capacity(4);
                            for (s, &pos) in stars.iter().zip(&positions) {
                                let mut so = s.clone().unwrap();
                                so.andnot_assign(&top[pos]);
                                so_rows.push(so);
                                edge_rows.push(&top[pos]);
                            }
                            let mut inner = 0i128;
                            for pat in 0u32..16 {
                                let sel: Vec<&BitRow> = (0..4)
                                    .map(|b| {
                                        if pat >> b & 1 == 1 {
                                            edge_rows[b]
                                        } else {
                                            &so_rows[b]
                                        }
                                    })
                                    .collect();
                                let n_pat = BitRow::count_and_many(&sel) as i128;
                                if n_pat != 0 {
                                    inner += n_pat * weight[pat.count_ones() as usize];
                                }
                            }
                            if inner != 0 {
                                acc += BigInt::from(inner) * BigInt::from(inner);
                            }
                        }
                    }
                }
                acc
            })
            .collect()
    });
    let mut total = BigInt::zero();
    for s in partials {
        total += s;
    }
    // Σ inner² / (q⁸ · (n_i n_j n_l)²)
    let norm = BigInt::from(q).pow(8)
        * BigInt::from(ni).pow(2)
        * BigInt::from(nj).pow(2)
        * BigInt::from(nl).pow(2);
    Ok(BigRational::new(total, norm))
}

/// Exact Oct of the characteristic function of a pair layer:
/// d_C4 = Σ_{x,x'} codeg(x,x')² / (n_i² n_j²).
pub fn c4_characteristic_exact(
    c: &PartiteComplex,
    a: &IndexSet,
    par: &Parallelism,
) -> Result<BigRational> {
    if a.len() != 2 {
        return Err(Error::InvalidArity(format!(
            "C4 evaluator needs a pair index, got {a}"
        )));
    }
    let parts = a.members();
    let (i, j) = (parts[0], parts[1]);
    let (ni, nj) = (c.ground().size(i), c.ground().size(j));
    let rows = pair_rows(c, i, j);
    let partials: Vec<BigInt> = par.install(|| {
        (0..ni)
            .into_par_iter()
            .map(|x0| {
                let mut acc = BigInt::zero();
                for x1 in 0..ni {
                    let codeg = rows[x0].count_and(&rows[x1]);
                    acc += BigInt::from(codeg) * BigInt::from(codeg);
                }
                acc
            })
            .collect()
    });
    let mut total = BigInt::zero();
    for s in partials {
        total += s;
    }
    let norm = BigInt::from(ni).pow(2) * BigInt::from(nj).pow(2);
    Ok(BigRational::new(total, norm))
}

fn bigint_to_i128(b: &BigInt) -> Option<i128> {
    use num_traits::ToPrimitive;
    b.to_i128()
}
