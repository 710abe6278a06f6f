use criterion::{black_box, criterion_group, criterion_main, Criterion};
use qcgate_bench::version_corpus;
use qcgate_core::repo::{compare_versions_deb, compare_versions_rpm, Evr};

fn vercmp(c: &mut Criterion) {
    let corpus = version_corpus(200);
    let rpm: Vec<Evr> = corpus.iter().map(|v| Evr::parse_rpm(v)).collect();
    let deb: Vec<Evr> = corpus.iter().map(|v| Evr::parse_deb(v)).collect();
    c.bench_function("rpm all pairs 200", |b| {
        b.iter(|| {
            for x in &rpm {
                for y in &rpm {
                    black_box(compare_versions_rpm(x, y));
                }
            }
        })
    });
    c.bench_function("deb all pairs 200", |b| {
        b.iter(|| {
            for x in &deb {
                for y in &deb {
                    black_box(compare_versions_deb(x, y));
                }
            }
        })
    });
    c.bench_function("parse rpm 200", |b| b.iter(|| corpus.iter().map(|v| Evr::parse_rpm(black_box(v))).collect::<Vec<_>>()));
}

criterion_group!(benches, vercmp);
criterion_main!(benches);
