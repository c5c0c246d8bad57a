use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dynattack_bench::{embedding, instance, lstm_inputs, transitions};
use dynattack_core::neural::LstmParams;
use dynattack_core::{degree_feature, embed_sequence, ActorCritic, AgentConfig, Predictor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lstm(c: &mut Criterion) {
    let mut group = c.benchmark_group("lstm");
    let params = LstmParams::random(8, &mut ChaCha8Rng::seed_from_u64(1));
    for rows in [50, 640, 3200] {
        let x = lstm_inputs(rows, 10, 2);
        group.bench_with_input(BenchmarkId::new("forward", rows), &x, |b, x| {
            b.iter(|| params.forward(x).unwrap())
        });
        let (h, tape) = params.forward(&x).unwrap();
        group.bench_with_input(BenchmarkId::new("backward", rows), &tape, |b, tape| {
            b.iter(|| params.backward_params(tape, &h).unwrap())
        });
    }
    group.finish();
}

fn embedding_and_oracle(c: &mut Criterion) {
    let data = instance(50, 10, 3);
    c.bench_function("degree_feature/50", |b| {
        b.iter(|| degree_feature(&data.clean, 4))
    });
    let feature = degree_feature(&data.clean, 4);
    c.bench_function("embed_sequence/50x10", |b| {
        b.iter(|| embed_sequence(&data.clean, &feature).unwrap())
    });
    let predictor = Predictor::default();
    c.bench_function("decay_frequency/50x10", |b| {
        b.iter(|| predictor.predict(&data.clean))
    });
}

fn training(c: &mut Criterion) {
    let mut group = c.benchmark_group("train_step");
    group.sample_size(10);
    for batch in [16, 64] {
        let samples = transitions(50, 10, batch, 5);
        let config = AgentConfig {
            batch_size: batch,
            ..AgentConfig::default()
        };
        let mut agent = ActorCritic::new(50, config, 6).unwrap();
        group.bench_with_input(BenchmarkId::new("q", batch), &samples, |b, s| {
            b.iter(|| agent.train_q_step(s).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("policy", batch), &samples, |b, s| {
            b.iter(|| agent.train_policy_step(s).unwrap())
        });
    }
    group.finish();

    let data = instance(50, 10, 7);
    let x = embedding(&data, 8);
    let agent = ActorCritic::new(50, AgentConfig::default(), 9).unwrap();
    c.bench_function("policy_action/50x10", |b| {
        b.iter(|| agent.policy_action(&x).unwrap())
    });
}

criterion_group!(benches, lstm, embedding_and_oracle, training);
criterion_main!(benches);
