//! Analysis-pipeline benchmarks. The same benchmark ids are emitted with a
//! `parallel` or `sequential` suffix depending on how the crate was built,
//! so the two lanes can be compared directly:
//!
//! ```text
//! cargo bench                          # rayon data-parallel core
//! cargo bench --no-default-features    # sequential fallback
//! ```

use criterion::{criterion_group, criterion_main, Criterion};
use excitnet::dsp::{self, LpcFrame};
use excitnet::features::{analyze, AnalysisConfig};
use excitnet::signal::Signal;
use excitnet::vocoder::{prepare_dataset, VocoderKind};

fn lane() -> &'static str {
    if excitnet::par::parallel_enabled() {
        "parallel"
    } else {
        "sequential"
    }
}

/// Pulse train through a fixed formant filter, long enough that the
/// per-frame maps have real work to distribute.
fn vowel(n: usize, period: usize) -> Signal {
    let shift = 120;
    let n = (n / shift) * shift;
    let formant = LpcFrame {
        order: 4,
        a: vec![1.8, -1.62, 0.77, -0.21],
        residual_energy: 0.0,
    };
    let e: Vec<f64> = (0..n)
        .map(|i| if i % period == 0 { 0.6 } else { 0.0 })
        .collect();
    let track = vec![formant; n / shift];
    dsp::lp_synthesis(&Signal::new(e, 24000).unwrap(), &track, shift).unwrap()
}

fn bench_analyze(c: &mut Criterion) {
    let cfg = AnalysisConfig::default();
    let x = vowel(48000, 120); // 2 s
    c.bench_function(&format!("analyze_2s/{}", lane()), |b| {
        b.iter(|| analyze(&x, &cfg).unwrap())
    });
}

fn bench_prepare(c: &mut Criterion) {
    let cfg = AnalysisConfig::default();
    let corpus: Vec<(String, Signal)> = [120usize, 96, 160, 140]
        .iter()
        .enumerate()
        .map(|(i, &p)| (format!("u{i}"), vowel(24000, p)))
        .collect();
    for kind in [VocoderKind::Excitnet, VocoderKind::WavenetNs] {
        c.bench_function(&format!("prepare_{kind}/{}", lane()), |b| {
            b.iter(|| prepare_dataset(&corpus, kind, &cfg).unwrap())
        });
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_analyze, bench_prepare
}
criterion_main!(benches);
