use criterion::{black_box, criterion_group, criterion_main, Criterion};

use retouch_bench::{sample_edit, sample_image, sample_prediction};
use retouch_core::a2l::{decode_frame, encode_frame, Frame, SessionId, Verb};
use retouch_core::metrics::lab_histogram;
use retouch_core::reward::{pq_reward, roa_terms};
use retouch_core::roc::{format_agent_response, serialize_roc};
use retouch_core::{apply_roc, ciede2000, total_reward, Lab, RewardConfig, ToolCatalog};

fn color(c: &mut Criterion) {
    let a = Lab::new(50.0, 2.6772, -79.7751);
    let b = Lab::new(50.0, 0.0, -82.7485);
    c.bench_function("ciede2000", |bench| bench.iter(|| ciede2000(black_box(a), black_box(b))));
    let img = sample_image(256, 256);
    c.bench_function("lab_histogram 256x256", |bench| bench.iter(|| lab_histogram(black_box(&img))));
}

fn reward(c: &mut Criterion) {
    let catalog = ToolCatalog::default_catalog();
    let (pred, tgt) = (sample_prediction(), sample_edit());
    c.bench_function("roa_terms", |bench| {
        bench.iter(|| roa_terms(black_box(&pred), black_box(&tgt), &catalog).unwrap())
    });
    let src = sample_image(256, 256);
    let tgt_img = apply_roc(&src, &tgt, &catalog, None).unwrap();
    let edit = apply_roc(&src, &pred, &catalog, None).unwrap();
    c.bench_function("pq_reward 256x256", |bench| {
        bench.iter(|| pq_reward(black_box(&edit), black_box(&tgt_img), 0.4).unwrap())
    });
    let raw = format_agent_response("bench", &serialize_roc(&pred));
    c.bench_function("total_reward 256x256", |bench| {
        bench.iter(|| total_reward(black_box(&raw), &tgt, &src, &tgt_img, &catalog, &RewardConfig::default()).unwrap())
    });
}

fn render(c: &mut Criterion) {
    let catalog = ToolCatalog::default_catalog();
    let src = sample_image(256, 256);
    let doc = sample_edit();
    c.bench_function("apply_roc 256x256", |bench| {
        bench.iter(|| apply_roc(black_box(&src), &doc, &catalog, None).unwrap())
    });
}

fn frames(c: &mut Criterion) {
    let sid = SessionId::new("s0000002a").unwrap();
    let frame = Frame::with(
        Verb::File,
        Some(&sid),
        ["source|v2.png", "853c8fbfb7c08062db03b8a0704e9bab68ca5c015f16c9930577e864b606c5cb", "268"],
    );
    let wire = encode_frame(&frame);
    c.bench_function("encode_frame", |bench| bench.iter(|| encode_frame(black_box(&frame))));
    c.bench_function("decode_frame", |bench| bench.iter(|| decode_frame(black_box(wire.as_bytes())).unwrap()));
}

criterion_group!(benches, color, reward, render, frames);
criterion_main!(benches);
