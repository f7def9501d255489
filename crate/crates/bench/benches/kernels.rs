use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use navmorl::agents::{Agent, AgentConfig, AgentKind};
use navmorl::pareto::{hypervolume, pareto_front, ObjectivePoint};
use navmorl::replay::{ReplayBuffer, Reward, StoredAction, Transition};
use navmorl::sim::Action;
use navmorl::EpisodeStatus;
use navmorl_bench::{actor, batch, point_cloud, stage_a_world, unit};
use std::hint::black_box;

fn nn(c: &mut Criterion) {
    let net = actor(64, 1);
    let x = batch(64, 28, 2);
    c.bench_function("mlp_forward_64x28", |b| b.iter(|| net.predict(black_box(&x)).unwrap()));
    c.bench_function("mlp_forward_backward_64x28", |b| {
        b.iter(|| {
            let (y, cache) = net.forward(black_box(&x)).unwrap();
            net.backward(&cache, &y).unwrap()
        })
    });
}

fn sim(c: &mut Criterion) {
    let world = stage_a_world(3);
    c.bench_function("lidar_scan_stageA", |b| b.iter(|| black_box(&world).lidar_scan()));
    c.bench_function("world_step_stageA", |b| {
        b.iter_batched(
            || stage_a_world(3),
            |mut w| w.step(Action::new(0.1, 0.3)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn pareto(c: &mut Criterion) {
    let pts = point_cloud(200, 4, 7);
    c.bench_function("pareto_front_200x4", |b| b.iter(|| pareto_front(black_box(&pts)).unwrap()));
    let pts3 = point_cloud(200, 3, 9);
    let front = pareto_front(&pts3).unwrap();
    let r = ObjectivePoint::untagged(vec![0.0; 3]);
    c.bench_function("hypervolume_3d_front", |b| b.iter(|| hypervolume(black_box(&front), &r).unwrap()));
}

fn agents(c: &mut Criterion) {
    let cfg = AgentConfig::default();
    let mut buf = ReplayBuffer::new(4096).unwrap();
    for i in 0..4096u64 {
        let s: Vec<f64> = (0..28).map(|j| unit(i, j)).collect();
        buf.push(Transition {
            next_state: s.iter().map(|v| v * 0.9).collect(),
            state: s,
            action: StoredAction::Continuous(vec![unit(i, 100) * 2.0 - 1.0, unit(i, 101) * 2.0 - 1.0]),
            reward: Reward::Scalar(-unit(i, 102)),
            done: i % 50 == 0,
            status: if i % 50 == 0 { EpisodeStatus::CollisionWall } else { EpisodeStatus::Ongoing },
        })
        .unwrap();
    }
    let mut td3 = Agent::new(AgentKind::Td3, &cfg, 28, 0).unwrap();
    c.bench_function("td3_update_batch64", |b| b.iter(|| td3.update(&buf).unwrap()));
}

criterion_group!(benches, nn, sim, pareto, agents);
criterion_main!(benches);
