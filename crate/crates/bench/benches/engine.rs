use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use modelcard_bench::{synthetic_card, synthetic_notebook, synthetic_notebook_bytes};
use modelcard_core::rubric::CorpusDocument;
use modelcard_core::{
    assess, assess_corpus, build_dependency_graph, check_trace_integrity, detect_notebook_stages, export_card,
    extract_card, parse_notebook, serialize_notebook, upsert_section, CardTemplate, KnowledgeBase, ManualAnswers,
};

fn notebook_io(c: &mut Criterion) {
    let mut g = c.benchmark_group("notebook_io");
    for cells in [10, 100, 1000] {
        let bytes = synthetic_notebook_bytes(cells);
        let nb = parse_notebook(&bytes).unwrap();
        g.throughput(Throughput::Bytes(bytes.len() as u64));
        g.bench_with_input(BenchmarkId::new("parse", cells), &bytes, |b, bytes| {
            b.iter(|| parse_notebook(black_box(bytes)))
        });
        g.bench_with_input(BenchmarkId::new("serialize", cells), &nb, |b, nb| {
            b.iter(|| serialize_notebook(black_box(nb)))
        });
    }
    g.finish();
}

fn card(c: &mut Criterion) {
    let tpl = CardTemplate::default_template();
    let mut g = c.benchmark_group("card");
    for cells in [100, 1000] {
        let nb = synthetic_notebook(cells);
        g.bench_with_input(BenchmarkId::new("extract_export", cells), &nb, |b, nb| {
            b.iter(|| export_card(&extract_card(black_box(nb), &tpl), &tpl))
        });
        g.bench_with_input(BenchmarkId::new("upsert", cells), &nb, |b, nb| {
            b.iter(|| upsert_section(black_box(nb), &tpl, "metrics", "F1 0.91").unwrap())
        });
    }
    g.finish();
}

fn codeview(c: &mut Criterion) {
    let kb = KnowledgeBase::default_kb();
    let tpl = CardTemplate::default_template();
    let mut g = c.benchmark_group("codeview");
    for cells in [100, 1000] {
        let nb = synthetic_notebook(cells);
        g.bench_with_input(BenchmarkId::new("detect_stages", cells), &nb, |b, nb| {
            b.iter(|| detect_notebook_stages(black_box(nb), &kb))
        });
        g.bench_with_input(BenchmarkId::new("dependency_graph", cells), &nb, |b, nb| {
            b.iter(|| build_dependency_graph(black_box(nb)))
        });
        g.bench_with_input(BenchmarkId::new("trace_check", cells), &nb, |b, nb| {
            b.iter(|| check_trace_integrity(black_box(nb), &tpl))
        });
    }
    g.finish();
}

fn rubric(c: &mut Criterion) {
    let manual = ManualAnswers::new();
    let mut g = c.benchmark_group("rubric");
    for sections in [10, 200] {
        let text = synthetic_card(sections);
        g.throughput(Throughput::Bytes(text.len() as u64));
        g.bench_with_input(BenchmarkId::new("assess", sections), &text, |b, text| {
            b.iter(|| assess("bench", black_box(text), &manual))
        });
    }
    let texts: Vec<String> = (0..132).map(|i| synthetic_card(5 + i % 20)).collect();
    let docs: Vec<CorpusDocument<'_>> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| CorpusDocument { target: format!("doc{i:03}"), text: t, manual: ManualAnswers::new() })
        .collect();
    g.bench_function("assess_corpus_132", |b| b.iter(|| assess_corpus(black_box(&docs))));
    g.finish();
}

criterion_group!(benches, notebook_io, card, codeview, rubric);
criterion_main!(benches);
