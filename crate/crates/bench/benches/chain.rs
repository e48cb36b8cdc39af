use criterion::{black_box, criterion_group, criterion_main, Criterion};

use reduchain::cm1::{cm1_run, reduce_mm2_to_cm1};
use reduchain::cssm::{check_local_confluence_bounded, shorten_to_simple};
use reduchain::hooper::{encode_cm1_config, reduce_cm1_to_smndl};
use reduchain::pipeline::{reduce_all, Target};
use reduchain::semiu::{bounded_solve_ssu, reduce_cssm_to_ssu};
use reduchain::smn::{probe_uniform_bound, smn_reachable};
use reduchain::term::{bounded_solve_su, match_terms, parse_su_instance, parse_term};
use reduchain::{Cm1Machine, Mm2Instruction, Mm2Machine, Names};

fn loop_mm2() -> Mm2Machine {
    Mm2Machine::new(vec![Mm2Instruction::Inc0, Mm2Instruction::Dec0(0)])
}

fn terms(c: &mut Criterion) {
    let mut n = Names::new();
    let p = parse_term("a -> (b -> a) -> b", &mut n).unwrap();
    let t = parse_term("(x -> x) -> ((y -> y -> y) -> x -> x) -> y -> y -> y", &mut n).unwrap();
    c.bench_function("match_terms", |b| b.iter(|| match_terms(black_box(&p), black_box(&t))));
    let inst = parse_su_instance("a <= a -> a\na <= a -> a -> a\n", &mut n).unwrap();
    c.bench_function("solve supos depth 1", |b| b.iter(|| bounded_solve_su(black_box(&inst), 1)));
}

fn machines(c: &mut Criterion) {
    let cm1 = reduce_mm2_to_cm1(&loop_mm2(), 1, 1);
    c.bench_function("cm1_run loop 10k steps", |b| b.iter(|| cm1_run(black_box(&cm1), 10_000)));

    let halting = Cm1Machine::from_pairs(&[(5, 1)]).unwrap();
    let smn = reduce_cm1_to_smndl(&halting).unwrap();
    c.bench_function("hooper reduce loop", |b| b.iter(|| reduce_cm1_to_smndl(black_box(&cm1)).unwrap()));
    c.bench_function("probe [(5,1)] to length 8", |b| b.iter(|| probe_uniform_bound(&smn, 8, 1 << 16).unwrap()));

    let big = reduce_cm1_to_smndl(&cm1).unwrap();
    let start = encode_cm1_config(&cm1, 0, 1, 4);
    c.bench_function("reachable loop padding 4", |b| b.iter(|| smn_reachable(&big, black_box(&start), 1 << 20)));
}

fn simple(c: &mut Criterion) {
    let cm1 = Cm1Machine::from_pairs(&[(5, 1)]).unwrap();
    let smn = reduce_cm1_to_smndl(&cm1).unwrap();
    c.bench_function("shorten [(5,1)]", |b| b.iter(|| shorten_to_simple(black_box(&smn)).unwrap()));
    let cssm = shorten_to_simple(&smn).unwrap();
    c.bench_function("confluence [(5,1)] length 4", |b| {
        b.iter(|| check_local_confluence_bounded(&cssm, 4, 1 << 16).is_ok())
    });
    let mut names = Names::new();
    let ssu = reduce_cssm_to_ssu(&cssm, &mut names).unwrap();
    c.bench_function("solve ssu [(5,1)] depth 16", |b| b.iter(|| bounded_solve_ssu(black_box(&ssu), 16)));
}

fn pipeline(c: &mut Criterion) {
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    g.bench_function("reduce_all empty", |b| b.iter(|| reduce_all(&Mm2Machine::new(vec![]), 0, 0, Target::Su).unwrap()));
    g.bench_function("reduce_all loop", |b| b.iter(|| reduce_all(&loop_mm2(), 1, 1, Target::Lu2).unwrap()));
    g.finish();
}

criterion_group!(benches, terms, machines, simple, pipeline);
criterion_main!(benches);
