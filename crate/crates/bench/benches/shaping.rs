use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shapelab::shaping::random_index;
use shapelab::{AmplitudeAlphabet, Composition, DistributionMatcher, DmKind, DmSpec, Matcher};

fn matchers(c: &mut Criterion) {
    let alphabet = AmplitudeAlphabet::odd(8).unwrap();
    let n = 128;
    let k = 2 * n as u32;
    let kinds = [
        ("ss", DmKind::Ss),
        ("sm1", DmKind::Sm { shells: 1 }),
        ("ccdm", DmKind::Ccdm { composition: Composition::for_rate(&alphabet, n, k).unwrap() }),
    ];
    for (label, kind) in kinds {
        let spec = DmSpec::new(kind, n, k, alphabet.clone()).unwrap();
        let m = Matcher::new(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let idx = random_index(&mut rng, k);
        let block = m.encode(&idx).unwrap();
        c.bench_function(&format!("{label} encode N={n}"), |b| b.iter(|| m.encode(black_box(&idx)).unwrap()));
        c.bench_function(&format!("{label} decode N={n}"), |b| b.iter(|| m.decode(black_box(&block)).unwrap()));
    }
    c.bench_function("ss trellis N=128", |b| {
        b.iter(|| Matcher::new(&DmSpec::new(DmKind::Ss, n, k, alphabet.clone()).unwrap()).unwrap())
    });
}

criterion_group!(benches, matchers);
criterion_main!(benches);
