//! Benchmarks of the enumeration kernels: the blocking-set scan, the exact
//! octahedron kernels, exhaustive containment search, and partite counting.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use hyperq::budget::Budget;
use hyperq::constructions::{layered_random_complex, oddly_bipartite};
use hyperq::counting::{partite_hom_density, EvalMode};
use hyperq::embed::contains_copy_with_symmetry;
use hyperq::gowers::{c4_characteristic_exact, oct_balanced_exact};
use hyperq::partite::{generated_complex, IndexSet, PartiteGround};
use hyperq::pg::{blocking_sets, ProjectivePlane};
use hyperq::{Parallelism, UniformHypergraph, Vertex};

fn bench_blocking_scan(c: &mut Criterion) {
    let plane = ProjectivePlane::new(4, Budget::default()).unwrap();
    let par = Parallelism::auto();
    c.bench_function("blocking_sets_pg24_2pow21", |b| {
        b.iter(|| blocking_sets(&plane, Budget::default(), &par).unwrap())
    });
}

fn bench_oct_kernels(c: &mut Criterion) {
    let par = Parallelism::auto();
    // Pair kernel on a 200+200 random bipartite graph.
    let bip = {
        use rand::Rng;
        let n = 200;
        let g = PartiteGround::new(vec![n, n]).unwrap();
        let mut rng = hyperq::rng::stream_rng(5, 0);
        let mut edges = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if rng.gen_bool(0.5) {
                    edges.push(vec![x as Vertex, (n + y) as Vertex]);
                }
            }
        }
        let h = UniformHypergraph::new(2 * n, 2, edges).unwrap();
        generated_complex(&h, &g).unwrap()
    };
    let pair = IndexSet::from_parts(&[0, 1]);
    c.bench_function("oct_balanced_pair_n200", |b| {
        b.iter(|| oct_balanced_exact(&bip, &pair, Budget::new(u64::MAX >> 1), &par).unwrap())
    });
    c.bench_function("c4_characteristic_n200", |b| {
        b.iter(|| c4_characteristic_exact(&bip, &pair, &par).unwrap())
    });

    // Triple kernel on the layered model at 24 per part.
    let layered = layered_random_complex(24, [0.5; 3], 0.5, 9).unwrap();
    let triple = IndexSet::from_parts(&[0, 1, 2]);
    let mut group = c.benchmark_group("oct_triple");
    group.sample_size(10);
    group.bench_function("oct_balanced_triple_n24", |b| {
        b.iter(|| oct_balanced_exact(&layered, &triple, Budget::new(u64::MAX >> 1), &par).unwrap())
    });
    group.finish();
}

fn bench_embed_search(c: &mut Criterion) {
    let par = Parallelism::auto();
    let host = oddly_bipartite(14, 3).unwrap();
    let pattern = ProjectivePlane::new(3, Budget::default())
        .unwrap()
        .as_hypergraph()
        .clone();
    let classes: Vec<Vec<Vertex>> = vec![(0..7).collect(), (7..14).collect()];
    c.bench_function("freeness_pg23_in_oddly14", |b| {
        b.iter_batched(
            || (),
            |_| {
                contains_copy_with_symmetry(&host, &pattern, &classes, Budget::default(), &par)
                    .unwrap()
            },
            BatchSize::SmallInput,
        )
    });
}

fn bench_partite_counting(c: &mut Criterion) {
    let par = Parallelism::auto();
    let host = layered_random_complex(40, [0.5; 3], 0.5, 3).unwrap();
    let pattern = {
        let g = PartiteGround::new(vec![1, 1, 2]).unwrap();
        let p = UniformHypergraph::new(4, 3, vec![vec![0, 1, 2], vec![0, 1, 3]]).unwrap();
        generated_complex(&p, &g).unwrap()
    };
    let mut group = c.benchmark_group("partite_count");
    group.sample_size(20);
    group.bench_function("shared_pair_into_layered40_exact", |b| {
        b.iter(|| {
            partite_hom_density(
                &pattern,
                &host,
                EvalMode::Exact,
                Budget::new(u64::MAX >> 1),
                &par,
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_blocking_scan,
    bench_oct_kernels,
    bench_embed_search,
    bench_partite_counting
);
criterion_main!(benches);
