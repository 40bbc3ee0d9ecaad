//! Acceptance battery. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any asserted criterion fails. Criterion 8 is reported only.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::process::Command;
use std::time::Instant;

use ciupath_core::graph::sequence_features;
use ciupath_core::neural::{bce_loss, grad_check, random_instance, rank_loss, total_loss, train, TrainConfig};
use ciupath_core::stats::{
    ancova_f, detection_report, feature_design, grouped_kfold, levenshtein_align, pearson_r, run_full_eval, AlignmentReport, Arm,
    Covariate, EvalConfig, GoldTagger, NeuralFoldTagger,
};
use ciupath_core::synth::{generate_corpus, SynthCorpus, TemplateSpec};
use ciupath_core::{CiuId, CoordinateMap, Feature, FeatureVector, LabeledSentence, Point, Quadrant, NUM_CIUS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Training settings frozen after one reference run on the seed-7 corpus.
fn reference_train_config() -> TrainConfig {
    TrainConfig { seed: 7, epochs: 40, lr_encoder: 3e-3, lr_head: 3e-3, ..TrainConfig::default() }
}

fn seed7_corpus() -> SynthCorpus {
    generate_corpus(&TemplateSpec { seed: 7, ..TemplateSpec::default() }, 200, 10).expect("default spec is valid")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// 1. Loss identities.

fn logits_of(values: &[(CiuId, f64)]) -> [f64; NUM_CIUS] {
    let mut s = [0.0; NUM_CIUS];
    for &(c, v) in values {
        s[c.code()] = v;
    }
    s
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_bce: f64 = 0.0;
    for _ in 0..1000 {
        let y: [bool; NUM_CIUS] = std::array::from_fn(|_| rng.random_bool(0.5));
        worst_bce = worst_bce.max((bce_loss(&[0.0f64; NUM_CIUS], &y) - std::f64::consts::LN_2).abs());
    }

    let (a, b, c) = (CiuId::BOY, CiuId::COOKIE, CiuId::SINK);
    let rank_cases = [
        (rank_loss(&logits_of(&[(a, 2.0), (b, 0.0)]), &[a, b], 1.0), 0.0),
        (rank_loss(&logits_of(&[(a, 0.0), (b, 2.0)]), &[a, b], 1.0), 3.0),
        (rank_loss(&logits_of(&[(a, 3.0), (b, 2.0), (c, 1.0)]), &[a, b, c], 1.0), 0.0),
        (rank_loss(&logits_of(&[(a, 1.0), (b, 2.0), (c, 3.0)]), &[a, b, c], 1.0), 7.0 / 3.0),
        (rank_loss(&logits_of(&[(a, 5.0)]), &[a], 1.0), 0.0),
    ];
    let worst_rank = rank_cases.iter().map(|(got, want)| (got - want).abs()).fold(0.0, f64::max);

    let mut mix_exact = true;
    for _ in 0..200 {
        let s: [f64; NUM_CIUS] = std::array::from_fn(|_| rng.random_range(-4.0..4.0));
        let y: [bool; NUM_CIUS] = std::array::from_fn(|_| rng.random_bool(0.3));
        let order = [CiuId::from_code(rng.random_range(0..8)).unwrap(), CiuId::from_code(rng.random_range(8..16)).unwrap()];
        let (bce, rank) = (bce_loss(&s, &y), rank_loss(&s, &order, 1.0));
        mix_exact &= total_loss(&s, &y, &order, 1.0, 0.0) == bce;
        mix_exact &= total_loss(&s, &y, &order, 1.0, 1.0) == rank;
        mix_exact &= total_loss(&s, &y, &order, 1.0, 0.1) == 0.9 * bce + 0.1 * rank;
    }
    let worked = (0.9 * 0.693147 + 0.1 * 3.0f64 - 0.9238323).abs() < 1e-12;

    check(
        worst_bce <= 1e-12 && worst_rank <= 1e-12 && mix_exact && worked,
        format!("max |bce(0,y) - ln 2| = {worst_bce:.1e}, max rank error = {worst_rank:.1e}, mix exact = {mix_exact}"),
    )
}

// 2. Gradient fidelity.

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    let mut kinks = 0;
    for seed in 0..20u64 {
        let lambda = [0.0, 0.1, 1.0][seed as usize % 3];
        let (model, sample, cfg) = random_instance(seed, lambda);
        let r = grad_check(&model, &sample, &cfg);
        worst = worst.max(r.max_rel_error);
        compared += r.compared;
        kinks += r.skipped_kinks;
    }
    check(worst < 1e-4, format!("20 instances, {compared} coordinates, {kinks} kink probes skipped, max rel error {worst:.2e}"))
}

// 3. Detection and ordering on the seed-7 corpus.

fn criterion_3(corpus: &SynthCorpus) -> Outcome {
    let ids: Vec<&str> = corpus.sentences.iter().map(|s| s.speaker_id.as_str()).collect();
    let split = grouped_kfold(&ids, 5, 7).expect("200 speakers").remove(0);
    let (eval, train_set): (Vec<&LabeledSentence>, Vec<&LabeledSentence>) =
        corpus.sentences.iter().partition(|s| split.is_eval(&s.speaker_id));
    let owned: Vec<LabeledSentence> = train_set.into_iter().cloned().collect();
    let (tagger, _) = train(&owned, &reference_train_config()).expect("training succeeds");

    let pred: Vec<Vec<CiuId>> = eval.iter().map(|s| tagger.predict(&s.tokens)).collect();
    let gold: Vec<&[CiuId]> = eval.iter().map(|s| s.labels.as_slice()).collect();
    let micro = detection_report(&pred, &gold).expect("equal lengths").micro();
    let (p, r) = (micro.precision().unwrap_or(0.0), micro.recall().unwrap_or(0.0));

    let mut per_speaker: BTreeMap<&str, (Vec<CiuId>, Vec<CiuId>)> = BTreeMap::new();
    for (s, p) in eval.iter().zip(&pred) {
        let e = per_speaker.entry(&s.speaker_id).or_default();
        e.0.extend_from_slice(&s.labels);
        e.1.extend_from_slice(p);
    }
    let rates: Vec<f64> = per_speaker.values().filter_map(|(g, h)| levenshtein_align(g, h).error_rate().ok()).collect();
    let ser = rates.iter().sum::<f64>() / rates.len() as f64;

    check(
        p >= 0.90 && r >= 0.90 && ser <= 0.35,
        format!(
            "{} train / {} held-out sentences, micro P {p:.3}, R {r:.3}, speaker SER {ser:.3} (need P,R >= 0.90, SER <= 0.35)",
            owned.len(),
            eval.len()
        ),
    )
}

// 4. Levenshtein against breadth-first search over single edits.

fn all_strings(max_len: usize, alphabet: u8) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for c in 0..alphabet {
                let mut t: Vec<u8> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn single_edits(s: &[u8], alphabet: u8, max_len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for i in 0..s.len() {
        let mut d = s.to_vec();
        d.remove(i);
        out.push(d);
        for c in (0..alphabet).filter(|&c| c != s[i]) {
            let mut t = s.to_vec();
            t[i] = c;
            out.push(t);
        }
    }
    if s.len() < max_len {
        for i in 0..=s.len() {
            for c in 0..alphabet {
                let mut t = s.to_vec();
                t.insert(i, c);
                out.push(t);
            }
        }
    }
    out
}

fn criterion_4() -> Outcome {
    const ALPHABET: u8 = 3;
    let strings = all_strings(4, ALPHABET);
    let mut pairs = 0;
    let mut mismatches = 0;
    for src in &strings {
        // One spare symbol of length lets paths pass through longer strings.
        let mut dist: BTreeMap<Vec<u8>, usize> = BTreeMap::from([(src.clone(), 0)]);
        let mut queue = VecDeque::from([src.clone()]);
        while let Some(s) = queue.pop_front() {
            let d = dist[&s];
            for t in single_edits(&s, ALPHABET, 5) {
                dist.entry(t.clone()).or_insert_with(|| {
                    queue.push_back(t);
                    d + 1
                });
            }
        }
        for dst in &strings {
            let rep: AlignmentReport = levenshtein_align(src, dst);
            let consistent = rep.deletions as isize - rep.insertions as isize == src.len() as isize - dst.len() as isize;
            pairs += 1;
            if rep.distance() != dist[dst] || !consistent || rep.reference_len != src.len() {
                mismatches += 1;
            }
        }
    }
    check(mismatches == 0, format!("{pairs} pairs over lengths 0..=4 and 3 symbols, {mismatches} disagreements"))
}

// 5. Features against a direct evaluation of each definition.

/// Three CIUs with pairwise distances 0.5, 0.375 and 0.625, all exact in
/// binary. Split x = 0.75, y = 0.5 puts boy and sink upper left, girl lower
/// left.
fn oracle_map() -> (CoordinateMap, [CiuId; 3]) {
    let cius = [CiuId::BOY, CiuId::GIRL, CiuId::SINK];
    let coords = [(0.125, 0.125), (0.125, 0.625), (0.5, 0.125)];
    let mut points = [Point { x: 0.9, y: 0.9 }; NUM_CIUS];
    for (c, (x, y)) in cius.iter().zip(coords) {
        points[c.code()] = Point { x, y };
    }
    (CoordinateMap::new(points, 0.75, 0.5).expect("valid map"), cius)
}

fn oracle_features(seq: &[CiuId], map: &CoordinateMap) -> FeatureVector {
    if seq.is_empty() {
        return FeatureVector::default();
    }
    let n = seq.len() as f64;
    let xs: Vec<f64> = seq.iter().map(|c| map.point(*c).x).collect();
    let ys: Vec<f64> = seq.iter().map(|c| map.point(*c).y).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let pstd = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / n).sqrt()
    };
    let quadrant = |c: CiuId| {
        let p = map.point(c);
        let (sx, sy) = map.split();
        match (p.x >= sx, p.y >= sy) {
            (false, false) => Quadrant::UpperLeft,
            (true, false) => Quadrant::UpperRight,
            (false, true) => Quadrant::LowerLeft,
            (true, true) => Quadrant::LowerRight,
        }
    };
    let mut path = 0.0;
    let (mut same_ciu, mut same_quad, mut diff_quad) = (0, 0, 0);
    for w in seq.windows(2) {
        let (a, b) = (map.point(w[0]), map.point(w[1]));
        path += ((b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y)).sqrt();
        same_ciu += usize::from(w[0] == w[1]);
        if quadrant(w[0]) == quadrant(w[1]) {
            same_quad += 1;
        } else {
            diff_quad += 1;
        }
    }
    let unique = seq.iter().collect::<BTreeSet<_>>().len();
    FeatureVector {
        avg_x: Some(mean(&xs)),
        std_x: Some(pstd(&xs)),
        avg_y: Some(mean(&ys)),
        std_y: Some(pstd(&ys)),
        total_path: Some(path),
        unique_nodes: Some(unique),
        path_per_unique: Some(path / unique as f64),
        nodes: Some(seq.len()),
        self_cycles: Some(same_ciu),
        cycles: Some(seq.len() - unique),
        self_cycles_quadrants: Some(same_quad),
        cross_ratio_quadrants: if same_quad == 0 { None } else { Some(diff_quad as f64 / same_quad as f64) },
    }
}

fn criterion_5() -> Outcome {
    let (map, cius) = oracle_map();
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for codes in all_strings(5, 3) {
        let seq: Vec<CiuId> = codes.iter().map(|&i| cius[i as usize]).collect();
        let (got, want) = (sequence_features(&seq, &map), oracle_features(&seq, &map));
        checked += 1;
        if got != want {
            mismatches.push(codes);
        }
    }
    check(
        mismatches.is_empty(),
        format!("{checked} sequences of length 0..=5 over 3 CIUs, {} mismatches {:?}", mismatches.len(), mismatches.first()),
    )
}

// 6. Statistics oracles.

fn oracle_pearson(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let r = sxy / (sxx * syy).sqrt();
    let df = n - 2.0;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (r, 2.0 * dist.sf(t.abs()))
}

/// Least squares through the normal equations `XᵀX b = Xᵀy`, solved by
/// Gauss-Jordan elimination with partial pivoting. Returns the RSS.
fn normal_equations_rss(rows: &[Vec<f64>], y: &[f64]) -> f64 {
    let p = rows[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, &yi) in rows.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
            a[i][p] += row[i] * yi;
        }
    }
    for col in 0..p {
        let pivot = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        for r in 0..p {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=p {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let b: Vec<f64> = (0..p).map(|i| a[i][p] / a[i][i]).collect();
    rows.iter().zip(y).map(|(row, yi)| yi - row.iter().zip(&b).map(|(x, c)| x * c).sum::<f64>()).map(|e| e * e).sum()
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let normal = |rng: &mut ChaCha8Rng| -> f64 {
        // Box-Muller keeps the oracle free of the crate's own sampling code.
        let (u, v): (f64, f64) = (rng.random_range(1e-12..1.0), rng.random());
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    };

    let mut pearson_worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(5..60);
        let rho = rng.random_range(-0.9..0.9);
        let x: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|a| rho * a + normal(&mut rng)).collect();
        let (r, p) = pearson_r(&x, &y).expect("non-degenerate");
        let (or, op) = oracle_pearson(&x, &y);
        pearson_worst = pearson_worst.max((r - or).abs()).max((p - op).abs());
    }

    let mut ancova_worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(20..80);
        let k = rng.random_range(1..4);
        let group: Vec<bool> = (0..n).map(|i| i % 2 == 0 || rng.random_bool(0.3)).collect();
        let covs: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| 10.0 * normal(&mut rng) + 50.0).collect()).collect();
        let effect = rng.random_range(-2.0..2.0);
        let y: Vec<f64> = (0..n)
            .map(|i| effect * f64::from(u8::from(group[i])) + covs.iter().map(|c| 0.05 * c[i]).sum::<f64>() + normal(&mut rng))
            .collect();
        let covariates: Vec<Covariate> = covs.iter().enumerate().map(|(j, c)| Covariate::new(format!("c{j}"), c.clone())).collect();
        let got = ancova_f(&y.iter().map(|v| Some(*v)).collect::<Vec<_>>(), &group, &covariates).expect("full rank");

        let full: Vec<Vec<f64>> =
            (0..n).map(|i| [1.0, f64::from(u8::from(group[i]))].into_iter().chain(covs.iter().map(|c| c[i])).collect()).collect();
        let reduced: Vec<Vec<f64>> = full.iter().map(|r| [r[0]].into_iter().chain(r[2..].iter().copied()).collect()).collect();
        let (rss_f, rss_r) = (normal_equations_rss(&full, &y), normal_equations_rss(&reduced, &y));
        let want = (rss_r - rss_f) / (rss_f / (n - full[0].len()) as f64);
        ancova_worst = ancova_worst.max((got.f_value - want).abs() / want.abs().max(1e-300));
    }

    // The unique-nodes covariate never adjusts for itself.
    let n = 12;
    let values: Vec<Option<f64>> = (0..n).map(|i| Some(i as f64)).collect();
    let group: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let covs = vec![
        Covariate::new("age", (0..n).map(|i| 60.0 + (i * 7 % 11) as f64).collect()),
        Covariate::new(Feature::UniqueNodes.name(), (0..n).map(|i| (i * 5 % 7) as f64).collect()),
    ];
    let own = feature_design(Feature::UniqueNodes, &values, &group, &covs).expect("valid");
    let other = feature_design(Feature::Cycles, &values, &group, &covs).expect("valid");
    let dagger = own.columns == ["intercept", "group", "age"]
        && own.x.len() == n * 3
        && other.columns == ["intercept", "group", "age", "unique_nodes"]
        && other.x.chunks(4).zip(&covs[1].values).all(|(row, v)| row[3] == *v);

    check(
        pearson_worst <= 1e-10 && ancova_worst <= 1e-8 && dagger,
        format!("pearson max abs err {pearson_worst:.1e} (100 vectors), ancova max rel err {ancova_worst:.1e} (50 designs), unique-nodes exclusion {dagger}"),
    )
}

// 7. Protocol invariants.

fn criterion_7(corpus: &SynthCorpus) -> Outcome {
    let mut leak_free = true;
    for seed in 0..20 {
        let ids: Vec<&str> = corpus.sentences.iter().map(|s| s.speaker_id.as_str()).collect();
        let splits = grouped_kfold(&ids, 5, seed).expect("enough speakers");
        let all: BTreeSet<&str> = ids.iter().copied().collect();
        let mut seen_eval: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &splits {
            let train: BTreeSet<&str> = s.train.iter().map(String::as_str).collect();
            let eval: BTreeSet<&str> = s.eval.iter().map(String::as_str).collect();
            leak_free &= train.is_disjoint(&eval) && train.union(&eval).count() == all.len();
            for e in eval {
                *seen_eval.entry(e).or_default() += 1;
            }
        }
        leak_free &= seen_eval.len() == all.len() && seen_eval.values().all(|&c| c == 1);
    }

    let spec = TemplateSpec { seed: 7, ..TemplateSpec::default() };
    let small = generate_corpus(&spec, 60, 6).expect("valid spec");
    let dict = spec.impoverished_dictionary().expect("valid spec");
    let map = CoordinateMap::cookie_theft();
    let report = run_full_eval(&small.sentences, &small.speakers, &mut GoldTagger, &dict, &map, &EvalConfig { folds: 5, seed: 7 })
        .expect("eval runs");
    let gold_rs: Vec<(Feature, Option<f64>)> = report
        .pearson
        .iter()
        .filter(|row| row.arm == Arm::Neural)
        .map(|row| (row.feature, row.result.as_ref().ok().map(|c| c.r)))
        .collect();
    let all_r_one = gold_rs.iter().all(|(_, r)| r.is_some_and(|r| (r - 1.0).abs() < 1e-12));
    let ser_zero = report.speakers.iter().all(|s| s.neural_alignment.distance() == 0) && report.mean_ser(Arm::Neural) == Some(0.0);

    let deterministic = cli_eval_twice_matches();
    check(
        leak_free && all_r_one && ser_zero && deterministic,
        format!(
            "no leakage over 20 seeds {leak_free}, gold arm r = 1 on {} features {all_r_one}, SER = 0 {ser_zero}, eval bundle byte-identical {deterministic}",
            gold_rs.len()
        ),
    )
}

fn cli_eval_twice_matches() -> bool {
    let dir = tempfile::tempdir().expect("temp dir");
    let d = dir.path();
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_ciupath")).current_dir(d).args(args).status().map(|s| s.success()).unwrap_or(false)
    };
    let mut ok = run(&["synth", "--seed", "7", "--speakers", "30", "--sentences", "5", "--out", "corpus"]);
    for out in ["r1", "r2"] {
        ok &= run(&[
            "eval",
            "--data",
            "corpus/dataset.jsonl",
            "--manifest",
            "corpus/manifest.jsonl",
            "--dictionary",
            "corpus/dictionary_impoverished.txt",
            "--folds",
            "5",
            "--seed",
            "7",
            "--epochs",
            "3",
            "--set",
            "dim=16",
            "--out",
            out,
        ]);
    }
    let files = ["detection.csv", "ser.csv", "pearson.csv", "ancova_gold.csv", "ancova_neural.csv", "ancova_dictionary.csv", "summary.txt"];
    ok && files.iter().all(|f| {
        let a = std::fs::read(d.join("r1").join(f));
        let b = std::fs::read(d.join("r2").join(f));
        matches!((a, b), (Ok(a), Ok(b)) if a == b)
    })
}

// 8. Neural against an impoverished dictionary (reported, not asserted).

fn criterion_8(corpus: &SynthCorpus) -> String {
    let spec = TemplateSpec { seed: 7, ..TemplateSpec::default() };
    let dict = spec.impoverished_dictionary().expect("valid spec");
    let map = CoordinateMap::cookie_theft();
    let mut tagger = NeuralFoldTagger::new(reference_train_config());
    match run_full_eval(&corpus.sentences, &corpus.speakers, &mut tagger, &dict, &map, &EvalConfig { folds: 5, seed: 7 }) {
        Ok(report) => {
            let (n, d) = (report.mean_pearson(Arm::Neural), report.mean_pearson(Arm::Dictionary));
            let direction = match (n, d) {
                (Some(n), Some(d)) if n > d => "neural ahead",
                (Some(_), Some(_)) => "neural NOT ahead",
                _ => "undefined",
            };
            let show = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.3}"));
            format!("mean Pearson r vs gold: neural {}, impoverished dictionary {} ({direction})", show(n), show(d))
        }
        Err(e) => format!("eval failed: {e}"),
    }
}

fn main() {
    // Listing must not run the battery.
    if std::env::args().skip(1).any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let corpus = seed7_corpus();
    assert_eq!(corpus.sentences.len(), 2000);

    let mut failures = 0;
    let mut report = |id: u32, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        failures += usize::from(!o.pass);
        println!("criterion {id}: {} [{:.1}s] {}", if o.pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64(), o.detail);
    };
    report(1, &criterion_1);
    report(2, &criterion_2);
    report(3, &|| criterion_3(&corpus));
    report(4, &criterion_4);
    report(5, &criterion_5);
    report(6, &criterion_6);
    report(7, &|| criterion_7(&corpus));
    let start = Instant::now();
    let soft = criterion_8(&corpus);
    println!("criterion 8: REPORTED [{:.1}s] {soft}", start.elapsed().as_secs_f64());

    if failures > 0 {
        eprintln!("{failures} acceptance criterion(s) failed");
        std::process::exit(1);
    }
}
