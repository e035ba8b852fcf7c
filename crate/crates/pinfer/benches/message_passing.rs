//! Parallel-versus-sequential timing for the message-passing core.
//!
//! The row-parallel loops are bit-identical to their sequential
//! fallback, so these benchmarks measure pure speed: the forward pass
//! alone, and a full training step (forward, loss, backward), on
//! planted graphs of increasing size. With the `parallel` feature
//! compiled out only the sequential rows run.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use pinfer::graph::{build_graph, GraphBuildConfig, TripartiteGraph};
use pinfer::nn::{backward, bce_loss, exec, forward, init_params, Adjacency, ModelParams, NetConfig};
use pinfer::psm::standardize_features;
use pinfer::synth::{generate, SynthConfig};

struct Fixture {
    graph: TripartiteGraph,
    adj: Adjacency,
    params: ModelParams,
    labels: Vec<u8>,
    mask: Vec<bool>,
}

/// Planted graph with `n_pro` protein groups (half targets, half
/// decoys) and a three-layer model over it.
fn fixture(n_pro: usize) -> Fixture {
    let (mut table, _) = generate(&SynthConfig {
        n_true: n_pro / 4,
        n_entrapment: n_pro / 4,
        seed: 7,
        ..SynthConfig::default()
    })
    .expect("synthesis");
    standardize_features(&mut table).expect("standardization");
    let graph = build_graph(&table, &GraphBuildConfig::default()).expect("graph");
    let net = NetConfig {
        layers: 3,
        hidden: 32,
        ..NetConfig::default()
    };
    let params = init_params(&net, graph.feature_dim(), 7);
    let adj = Adjacency::build(&graph);
    let labels = graph.groups.iter().map(|g| (!g.is_decoy) as u8).collect();
    let mask = vec![true; graph.n_pro()];
    Fixture {
        graph,
        adj,
        params,
        labels,
        mask,
    }
}

fn train_step(fx: &Fixture) -> ModelParams {
    let trace = forward(&fx.graph, &fx.params).expect("forward");
    let (_, dlogits) = bce_loss(&trace.logits, &fx.labels, &fx.mask).expect("loss");
    backward(&fx.graph, &fx.adj, &fx.params, &trace, &dlogits).expect("backward")
}

fn bench_message_passing(c: &mut Criterion) {
    for n_pro in [1_000usize, 4_000, 16_000] {
        let fx = fixture(n_pro);

        let mut group = c.benchmark_group(format!("forward/{n_pro}_proteins"));
        group
            .throughput(Throughput::Elements(n_pro as u64))
            .sample_size(10)
            .warm_up_time(Duration::from_secs(1))
            .measurement_time(Duration::from_secs(3));
        group.bench_function(BenchmarkId::from_parameter("sequential"), |b| {
            let was = exec::set_parallel(false);
            b.iter(|| black_box(forward(&fx.graph, &fx.params).expect("forward")));
            exec::set_parallel(was);
        });
        if cfg!(feature = "parallel") {
            group.bench_function(BenchmarkId::from_parameter("parallel"), |b| {
                let was = exec::set_parallel(true);
                b.iter(|| black_box(forward(&fx.graph, &fx.params).expect("forward")));
                exec::set_parallel(was);
            });
        }
        group.finish();

        let mut group = c.benchmark_group(format!("train_step/{n_pro}_proteins"));
        group
            .throughput(Throughput::Elements(n_pro as u64))
            .sample_size(10)
            .warm_up_time(Duration::from_secs(1))
            .measurement_time(Duration::from_secs(3));
        group.bench_function(BenchmarkId::from_parameter("sequential"), |b| {
            let was = exec::set_parallel(false);
            b.iter(|| black_box(train_step(&fx)));
            exec::set_parallel(was);
        });
        if cfg!(feature = "parallel") {
            group.bench_function(BenchmarkId::from_parameter("parallel"), |b| {
                let was = exec::set_parallel(true);
                b.iter(|| black_box(train_step(&fx)));
                exec::set_parallel(was);
            });
        }
        group.finish();
    }
}

criterion_group!(benches, bench_message_passing);
criterion_main!(benches);
