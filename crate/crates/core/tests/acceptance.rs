//! One PASS/FAIL line per acceptance criterion. Every expected value is
//! recomputed here by an oracle that does not call into the code under test.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;
use std::time::{Duration, Instant};

use codeconcept::activation_io::{
    read_activations, read_attributions, write_activations, write_attributions, ActivationDataset,
    AttributionRecord, FormatError,
};
use codeconcept::alignment::{
    align_cluster, alignment_report, coverage, detect_lexical_patterns, lexical_report, LexicalPattern,
};
use codeconcept::annotate::{fleiss_kappa, parse_annotation, request_annotation, AnnotateError, LlmConfig, RatingMatrix};
use codeconcept::attribution::{fit, loss_and_gradient, select_salient, ConceptClassifier, TrainConfig};
use codeconcept::corpus::{
    load_corpus, parse, tokenize_corpus, write_token_records, Corpus, Language, SyntacticLabeling, TokenRecord,
    TokenTable,
};
use codeconcept::discovery::{discover, kmeans, write_clusters, Cluster, ClusterSet, DiscoveryConfig, KMeansConfig};
use codeconcept::perturb::{
    apply_perturbation, perturb_corpus, validate_semantics_preserved, write_maps, PerturbError, PerturbOptions,
    PerturbationKind,
};
use codeconcept::report::{csi_csv, CsiEntry, Dossier};
use codeconcept::robustness::{csi_of, match_clusterings, match_partitions, max_weight_assignment};
use codeconcept::stub::{stub_activations, transfer_activations, StubConfig};
use codeconcept::InstanceId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn demo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/demo")
}

fn demo_corpus() -> Corpus {
    load_corpus(&demo_root(), None).unwrap().0
}

fn token_table(corpus: &Corpus) -> TokenTable {
    let tagged = tokenize_corpus(corpus).unwrap();
    TokenTable::new(
        tagged
            .into_values()
            .flatten()
            .map(|(token, tag)| TokenRecord::new(token, tag)),
    )
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

// ---------------------------------------------------------------- k-means

/// Four well separated Gaussian blobs in 8 dimensions, Box-Muller noise.
fn gaussian_blobs(seed: u64) -> (Vec<f32>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut data = Vec::new();
    let mut truth = Vec::new();
    for i in 0..200 {
        let class = i % 4;
        for j in 0..8 {
            let centre = if j == class * 2 { 10.0 } else { 0.0 };
            data.push((centre + normal()) as f32);
        }
        truth.push(class);
    }
    (data, truth)
}

fn choose2(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| choose2(n)).sum();
    let sa: f64 = rows.values().map(|&n| choose2(n)).sum();
    let sb: f64 = cols.values().map(|&n| choose2(n)).sum();
    let expected = sa * sb / choose2(a.len() as u64);
    let max = (sa + sb) / 2.0;
    (index - expected) / (max - expected)
}

fn kmeans_criterion() -> Check {
    let (data, truth) = gaussian_blobs(7);
    let start = Instant::now();
    let fit = kmeans(&data, 8, &KMeansConfig { k: 4, seed: 42, ..KMeansConfig::default() }).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let ari = adjusted_rand_index(&fit.labels, &truth);
    ensure!(ari >= 0.99, "ARI {ari}");
    for w in fit.sse_history.windows(2) {
        ensure!(w[1] <= w[0] * (1.0 + 1e-12), "SSE rose from {} to {}", w[0], w[1]);
    }
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(())
}

fn determinism_criterion() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let data: Vec<f32> = (0..3000 * 16).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let cfg = KMeansConfig { k: 25, seed: 3, ..KMeansConfig::default() };
    let one = in_pool(1, || kmeans(&data, 16, &cfg).unwrap());
    let eight = in_pool(8, || kmeans(&data, 16, &cfg).unwrap());
    ensure!(one.labels == eight.labels, "labels differ between 1 and 8 threads");
    ensure!(one.centroids == eight.centroids, "centroids differ between 1 and 8 threads");
    ensure!(one.sse_history == eight.sse_history, "SSE history differs");
    Ok(())
}

// ---------------------------------------------------------------- alignment

struct AlignCase {
    clusters: Vec<Cluster>,
    labeling: SyntacticLabeling,
    vocab: Vec<String>,
}

fn random_alignment_case(rng: &mut ChaCha8Rng) -> AlignCase {
    let tag_count = rng.gen_range(1..=4);
    let vocab: Vec<String> = (0..tag_count).map(|i| format!("tag{}", (b'a' + i as u8) as char)).collect();
    let total = rng.gen_range(1..=30);
    let cluster_count = rng.gen_range(1..=5usize).min(total);
    let mut labeling = SyntacticLabeling { tag_vocabulary: vocab.iter().cloned().collect(), ..Default::default() };
    let mut clusters: Vec<Cluster> = (0..cluster_count).map(|id| Cluster { id, members: Vec::new() }).collect();
    for i in 0..total {
        let id = InstanceId::new("s.java", i);
        // some tags stay unused so coverage below 100% is exercised
        let used = vocab.len().min(1 + rng.gen_range(0..4));
        let tag = vocab[rng.gen_range(0..used)].clone();
        labeling.tags.insert(id.clone(), tag);
        let c = if i < cluster_count { i } else { rng.gen_range(0..cluster_count) };
        clusters[c].members.push(id);
    }
    AlignCase { clusters, labeling, vocab }
}

/// (count, tag) of the majority tag, ties to the smaller tag, by scanning the
/// vocabulary in sorted order and keeping strictly larger counts.
fn oracle_majority(members: &[InstanceId], case: &AlignCase) -> (usize, String) {
    let mut sorted = case.vocab.clone();
    sorted.sort();
    let mut best = (0, String::new());
    for tag in sorted {
        let n = members.iter().filter(|m| case.labeling.tags[*m] == tag).count();
        if n > best.0 {
            best = (n, tag);
        }
    }
    best
}

fn alignment_criterion() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let thresholds = [0.5, 0.85, 0.9, 0.95, 1.0];
    for trial in 0..200 {
        let case = random_alignment_case(&mut rng);
        let report = alignment_report(&case.clusters, &case.labeling, &thresholds).map_err(|e| e.to_string())?;
        let sizes: usize = case.clusters.iter().map(|c| c.members.len()).sum();
        let majority: usize = case.clusters.iter().map(|c| oracle_majority(&c.members, &case).0).sum();
        ensure!(report.total_clusters == case.clusters.len(), "trial {trial}: total clusters");
        ensure!(report.vocabulary_size == case.vocab.len(), "trial {trial}: vocabulary size");
        for (c, label) in case.clusters.iter().zip(&report.clusters) {
            let (n, tag) = oracle_majority(&c.members, &case);
            ensure!(label.tag.as_deref() == Some(tag.as_str()), "trial {trial}: cluster {} tag", c.id);
            ensure!((label.purity - n as f64 / c.members.len() as f64).abs() < 1e-12, "trial {trial}: purity");
        }
        for (row, &theta) in report.thresholds.iter().zip(&thresholds) {
            let mut labeled = 0;
            for c in &case.clusters {
                let (n, tag) = oracle_majority(&c.members, &case);
                let aligned = n as f64 / c.members.len() as f64 >= theta;
                labeled += aligned as usize;
                let got = align_cluster(&c.members, &case.labeling, theta).map_err(|e| e.to_string())?;
                let want = aligned.then(|| (tag, n as f64 / c.members.len() as f64));
                ensure!(got == want, "trial {trial}: align_cluster {got:?} vs {want:?} at {theta}");
            }
            let mut covered = Vec::new();
            for tag in &case.vocab {
                let hit = case.clusters.iter().any(|c| {
                    let n = c.members.iter().filter(|m| &case.labeling.tags[*m] == tag).count();
                    n as f64 / c.members.len() as f64 >= theta
                });
                let got = coverage(tag, &case.clusters, &case.labeling, theta).map_err(|e| e.to_string())?;
                ensure!(got == hit, "trial {trial}: coverage of {tag} at {theta}");
                if hit {
                    covered.push(tag.clone());
                }
            }
            covered.sort();
            ensure!(row.clusters_labeled == labeled, "trial {trial}: clusters labeled at {theta}");
            ensure!(row.unaligned_clusters == case.clusters.len() - labeled, "trial {trial}: unaligned");
            ensure!(row.covered_tags == covered, "trial {trial}: covered tags at {theta}");
            ensure!(row.unique_tags == covered.len(), "trial {trial}: unique tags");
            let pct = 100.0 * covered.len() as f64 / case.vocab.len() as f64;
            ensure!((row.tag_coverage_pct - pct).abs() < 1e-9, "trial {trial}: coverage pct");
            ensure!(
                (row.tag_coverage_pct - 100.0 * row.unique_tags as f64 / report.vocabulary_size as f64).abs() < 1e-9,
                "trial {trial}: coverage identity"
            );
            let score = majority as f64 / sizes as f64;
            ensure!((row.overall_alignment_score - score).abs() < 1e-12, "trial {trial}: alignment score");
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- lexical

fn char_camel(s: &str) -> bool {
    let c: Vec<char> = s.chars().collect();
    let lead = c.iter().take_while(|ch| ch.is_ascii_lowercase()).count();
    lead > 0
        && lead < c.len()
        && c[lead].is_ascii_uppercase()
        && c[lead..].iter().all(|ch| ch.is_ascii_alphanumeric())
}

fn char_pascal(s: &str) -> bool {
    let c: Vec<char> = s.chars().collect();
    if c.len() < 3 || !c[0].is_ascii_uppercase() {
        return false;
    }
    let body = c[1..]
        .iter()
        .take_while(|ch| ch.is_ascii_lowercase() || ch.is_ascii_digit())
        .count();
    let rest = 1 + body;
    body > 0 && rest < c.len() && c[rest].is_ascii_uppercase() && c[rest..].iter().all(|ch| ch.is_ascii_alphanumeric())
}

/// Longest qualifying candidate, then most texts, then smallest.
fn oracle_pick(candidates: BTreeSet<String>, count: impl Fn(&str) -> usize, n: usize, threshold: f64) -> Option<(String, f64)> {
    let mut best: Option<(String, usize)> = None;
    for cand in candidates {
        let c = count(&cand);
        if (c as f64 / n as f64) < threshold {
            continue;
        }
        let better = match &best {
            None => true,
            Some((b, bc)) => {
                let (lc, lb) = (cand.chars().count(), b.chars().count());
                lc > lb || (lc == lb && (c > *bc || (c == *bc && cand < *b)))
            }
        };
        if better {
            best = Some((cand, c));
        }
    }
    best.map(|(s, c)| (s, c as f64 / n as f64))
}

fn oracle_lexical(texts: &[String], threshold: f64) -> BTreeMap<LexicalPattern, (Option<String>, f64)> {
    let distinct: BTreeSet<&str> = texts.iter().map(String::as_str).collect();
    let n = distinct.len();
    let mut out = BTreeMap::new();
    let mut prefixes = BTreeSet::new();
    let mut suffixes = BTreeSet::new();
    let mut substrings = BTreeSet::new();
    for t in &distinct {
        let c: Vec<char> = t.chars().collect();
        for len in 1..=c.len() {
            prefixes.insert(c[..len].iter().collect::<String>());
            suffixes.insert(c[c.len() - len..].iter().collect::<String>());
        }
        for i in 0..c.len() {
            for j in i + 4..=c.len() {
                substrings.insert(c[i..j].iter().collect::<String>());
            }
        }
    }
    let families = [
        (LexicalPattern::Prefix, prefixes, (|t: &str, s: &str| t.starts_with(s)) as fn(&str, &str) -> bool),
        (LexicalPattern::Suffix, suffixes, |t: &str, s: &str| t.ends_with(s)),
        (LexicalPattern::Substring, substrings, |t: &str, s: &str| t.contains(s)),
    ];
    for (pattern, cands, test) in families {
        let count = |s: &str| distinct.iter().filter(|t| test(t, s)).count();
        if let Some((w, f)) = oracle_pick(cands, count, n, threshold) {
            out.insert(pattern, (Some(w), f));
        }
    }
    for (pattern, check) in [(LexicalPattern::Camel, char_camel as fn(&str) -> bool), (LexicalPattern::Pascal, char_pascal)] {
        let c = distinct.iter().filter(|t| check(t)).count();
        if c as f64 / n as f64 >= threshold {
            out.insert(pattern, (None, c as f64 / n as f64));
        }
    }
    out
}

fn random_identifier(rng: &mut ChaCha8Rng) -> String {
    const STEMS: [&str; 8] = ["get", "set", "Buffer", "count", "Value", "idx", "tmp", "Name"];
    const CHARS: &[u8] = b"aAbB1_xY";
    let mut s = String::new();
    for _ in 0..rng.gen_range(1..=3) {
        if rng.gen_bool(0.6) {
            s.push_str(STEMS[rng.gen_range(0..STEMS.len())]);
        } else {
            for _ in 0..rng.gen_range(1..=3) {
                s.push(CHARS[rng.gen_range(0..CHARS.len())] as char);
            }
        }
    }
    s
}

fn lexical_criterion() -> Check {
    let found = detect_lexical_patterns(&["tab1", "sum1", "ans1"], 0.8);
    let suffix = found.iter().find(|m| m.pattern == LexicalPattern::Suffix);
    ensure!(
        suffix.is_some_and(|m| m.witness.as_deref() == Some("1") && m.fraction == 1.0),
        "{{tab1, sum1, ans1}} gave {found:?}"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..100 {
        let n = rng.gen_range(1..=8);
        let texts: Vec<String> = (0..n).map(|_| random_identifier(&mut rng)).collect();
        let threshold = [0.5, 0.6, 0.8, 1.0][rng.gen_range(0..4)];
        let got: BTreeMap<LexicalPattern, (Option<String>, f64)> = detect_lexical_patterns(&texts, threshold)
            .into_iter()
            .map(|m| (m.pattern, (m.witness, m.fraction)))
            .collect();
        let want = oracle_lexical(&texts, threshold);
        ensure!(got == want, "trial {trial} {texts:?} at {threshold}: got {got:?}, want {want:?}");
    }
    Ok(())
}

// ---------------------------------------------------------------- CSI

fn ids(snippet: &str, idx: &[usize]) -> Vec<InstanceId> {
    idx.iter().map(|&i| InstanceId::new(snippet, i)).collect()
}

fn oracle_jaccard(a: &[usize], b: &[usize]) -> f64 {
    let a: BTreeSet<_> = a.iter().collect();
    let b: BTreeSet<_> = b.iter().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / a.union(&b).count() as f64
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn csi_criterion() -> Check {
    let before = vec![ids("a", &[0, 1]), ids("a", &[2, 3, 4])];
    ensure!(csi_of(&before, &before) == 0.0, "identity CSI {}", csi_of(&before, &before));
    let disjoint = vec![ids("b", &[0, 1]), ids("b", &[2, 3, 4])];
    ensure!(csi_of(&before, &disjoint) == 1.0, "disjoint CSI {}", csi_of(&before, &disjoint));
    let worked = csi_of(&[ids("x", &[0, 1]), ids("x", &[2])], &[ids("x", &[0]), ids("x", &[1, 2])]);
    ensure!((worked - 0.5).abs() <= 1e-12, "worked example CSI {worked}");

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let perms: Vec<Vec<Vec<usize>>> = (0..=7).map(permutations).collect();
    for trial in 0..500 {
        let k = rng.gen_range(1..=7);
        let w: Vec<f64> = (0..k * k).map(|_| rng.gen_range(0..20) as f64 / 19.0).collect();
        let assignment = max_weight_assignment(&w, k);
        let mut seen = assignment.clone();
        seen.sort();
        ensure!(seen == (0..k).collect::<Vec<_>>(), "trial {trial}: not a permutation {assignment:?}");
        let total: f64 = assignment.iter().enumerate().map(|(r, &c)| w[r * k + c]).sum();
        let best = perms[k]
            .iter()
            .map(|p| p.iter().enumerate().map(|(r, &c)| w[r * k + c]).sum::<f64>())
            .fold(f64::MIN, f64::max);
        ensure!((total - best).abs() < 1e-9, "trial {trial}: Hungarian {total} vs exhaustive {best}");

        // partitions of up to 7 clusters each over 20 items
        let kb = rng.gen_range(1..=7);
        let ka = rng.gen_range(1..=7);
        let mut left = vec![Vec::new(); kb];
        let mut right = vec![Vec::new(); ka];
        for item in 0..20usize {
            left[rng.gen_range(0..kb)].push(item);
            right[rng.gen_range(0..ka)].push(item);
        }
        let l: Vec<(usize, Vec<usize>)> = left.iter().cloned().enumerate().collect();
        let r: Vec<(usize, Vec<usize>)> = right.iter().cloned().enumerate().collect();
        let report = match_partitions(&l, &r);
        let kk = kb.max(ka);
        left.resize(kk, Vec::new());
        right.resize(kk, Vec::new());
        let best_avg = perms[kk]
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(i, &j)| {
                        // padding slots score 0; two real empty clusters are identical
                        if i >= kb || j >= ka {
                            0.0
                        } else {
                            oracle_jaccard(&left[i], &right[j])
                        }
                    })
                    .sum::<f64>()
                    / kk as f64
            })
            .fold(f64::MIN, f64::max);
        ensure!(
            (report.average_jaccard - best_avg).abs() < 1e-9 && (report.csi - (1.0 - best_avg)).abs() < 1e-9,
            "trial {trial}: average Jaccard {} vs exhaustive {best_avg}",
            report.average_jaccard
        );
    }
    Ok(())
}

// ---------------------------------------------------------------- perturbations

fn perturbation_criterion() -> Check {
    let corpus = demo_corpus();
    for kind in PerturbationKind::ALL {
        let mut applied = 0;
        for snippet in corpus.iter() {
            let out = match apply_perturbation(snippet, kind, 42) {
                Ok(out) => out,
                Err(PerturbError::Unsupported { .. }) => continue,
                Err(e) => return Err(format!("{kind} on {}: {e}", snippet.id)),
            };
            if out.inapplicable() {
                continue;
            }
            applied += 1;
            let tree = parse(snippet.language, &snippet.id, &out.snippet.source).map_err(|e| e.to_string())?;
            ensure!(!tree.root_node().has_error(), "{kind} broke the syntax of {}", snippet.id);
            validate_semantics_preserved(snippet, &out.snippet, kind).map_err(|e| e.to_string())?;
        }
        ensure!(applied > 0, "{kind} never applied to the demo corpus");
    }

    // renaming with every token keeping its activation row leaves clusters intact
    let tokens = token_table(&corpus);
    let stub = StubConfig::default();
    let original = stub_activations(&tokens, &stub).map_err(|e| e.to_string())?;
    let cfg = DiscoveryConfig { k: 20, ..DiscoveryConfig::default() };
    let before = discover(&original, &tokens, cfg).map_err(|e| e.to_string())?;
    let renamed = perturb_corpus(&corpus, PerturbationKind::DeterministicIdentifierRenaming, &PerturbOptions::default())
        .map_err(|e| e.to_string())?;
    let renamed_tokens = token_table(&renamed.corpus);
    let moved = transfer_activations(&original, &renamed_tokens, &renamed.maps, &stub).map_err(|e| e.to_string())?;
    let after = discover(&moved, &renamed_tokens, cfg).map_err(|e| e.to_string())?;
    let report = match_clusterings(&before, &after, Some(&renamed.maps)).map_err(|e| e.to_string())?;
    ensure!(report.csi == 0.0, "renaming with identical activations gave CSI {}", report.csi);
    Ok(())
}

// ---------------------------------------------------------------- classifier

fn reference_loss(w: &[f64], b: &[f64], x: &[f64], y: &[usize], l2: f64) -> f64 {
    let k = b.len();
    let d = w.len() / k;
    let mut total = 0.0;
    for (row, &label) in x.chunks(d).zip(y) {
        let z: Vec<f64> = (0..k)
            .map(|c| b[c] + (0..d).map(|j| w[c * d + j] * row[j]).sum::<f64>())
            .collect();
        total += z.iter().map(|v| v.exp()).sum::<f64>().ln() - z[label];
    }
    total / y.len() as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

fn classifier_criterion() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let centres = [[-4.0, 0.0, 2.0], [4.0, 1.0, -2.0], [0.0, -5.0, 0.0]];
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (label, c) in centres.iter().enumerate() {
        for _ in 0..80 {
            x.extend(c.iter().map(|v| v + rng.gen_range(-1.0..1.0)));
            y.push(label);
        }
    }
    let clf = fit(&x, 3, &y, vec![0, 1, 2], TrainConfig::default()).map_err(|e| e.to_string())?;
    let first = clf.accuracy_history.iter().position(|&a| a >= 0.99);
    ensure!(first.is_some_and(|e| e < 2000), "99% accuracy first reached at {first:?}");
    ensure!(clf.train_accuracy >= 0.99, "final accuracy {}", clf.train_accuracy);

    let (n, d, k) = (6, 4, 3);
    let xs: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let ys: Vec<usize> = (0..n).map(|i| i % k).collect();
    let w: Vec<f64> = (0..k * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let l2 = 1e-2;
    let lg = loss_and_gradient(&w, &b, &xs, &ys, l2);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..w.len() + b.len() {
        let (mut wp, mut wm, mut bp, mut bm) = (w.clone(), w.clone(), b.clone(), b.clone());
        let analytic = if i < w.len() {
            wp[i] += h;
            wm[i] -= h;
            lg.grad_weights[i]
        } else {
            bp[i - w.len()] += h;
            bm[i - w.len()] -= h;
            lg.grad_bias[i - w.len()]
        };
        let numeric = (reference_loss(&wp, &bp, &xs, &ys, l2) - reference_loss(&wm, &bm, &xs, &ys, l2)) / (2.0 * h);
        worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8));
    }
    ensure!(worst <= 1e-5, "finite-difference relative error {worst}");

    for _ in 0..200 {
        let params: Vec<f64> = (0..k * d + k).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let c = ConceptClassifier::from_parameters(vec![3, 5, 9], d, params[..k * d].to_vec(), params[k * d..].to_vec())
            .map_err(|e| e.to_string())?;
        let input: Vec<f32> = (0..d).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let p = c.probabilities(&input).map_err(|e| e.to_string())?;
        let sum: f64 = p.iter().sum();
        ensure!((sum - 1.0).abs() <= 1e-9, "softmax sums to {sum}");
    }
    Ok(())
}

// ---------------------------------------------------------------- top-P

fn oracle_top_p(scores: &[f64], p: f64) -> Vec<usize> {
    let total: f64 = scores.iter().map(|s| s.abs()).sum();
    let norm: Vec<f64> = scores.iter().map(|s| s.abs() / total).collect();
    let mut remaining: Vec<usize> = (0..scores.len()).collect();
    let mut picked = Vec::new();
    let mut mass = 0.0;
    while mass < p && !remaining.is_empty() {
        // largest remaining score, lowest index on ties
        let pos = (0..remaining.len())
            .reduce(|a, b| if norm[remaining[b]] > norm[remaining[a]] { b } else { a })
            .unwrap();
        let idx = remaining.remove(pos);
        if norm[idx] == 0.0 {
            break;
        }
        mass += norm[idx];
        picked.push(idx);
    }
    picked
}

fn top_p_criterion() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..1000 {
        let n = rng.gen_range(1..60);
        let scores: Vec<f64> = (0..n)
            .map(|_| match rng.gen_range(0..5) {
                0 => 0.0,
                1 => -rng.gen_range(0.0..3.0),
                2 => rng.gen_range(0..4) as f64 * 0.25,
                _ => rng.gen_range(0.0..3.0),
            })
            .collect();
        if scores.iter().all(|&s| s == 0.0) {
            continue;
        }
        let p = [0.5, 0.3, 0.9, 1.0][trial % 4];
        let record = AttributionRecord {
            snippet_id: format!("r{trial}"),
            predicted_label: "Java".into(),
            true_label: "Java".into(),
            scores: scores.clone(),
        };
        let got = select_salient(&record, p).map_err(|e| e.to_string())?.selected;
        let want = oracle_top_p(&scores, p);
        ensure!(got == want, "trial {trial} p={p} {scores:?}: got {got:?}, want {want:?}");
    }
    Ok(())
}

// ---------------------------------------------------------------- annotation

fn completion(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

/// Answers one scripted `(status, body)` per connection; returns the URL and a
/// counter of requests served.
fn mock_server(script: Vec<(u16, String)>) -> (String, thread::JoinHandle<usize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let mut served = 0;
        for (status, body) in script {
            let Ok((stream, _)) = listener.accept() else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            served += 1;
        }
        served
    });
    (url, handle)
}

fn annotation_criterion() -> Check {
    let example = r#"{"Label": "Buffer Manipulation", "Semantic_Tags": ["StringBuilder", "StringBuffer", "Data Aggregation", "String Concatenation"], "Description": "The tokens represent `StringBuilder` and `StringBuffer` objects used for building strings by appending data elements in sequence."}"#;
    let parsed = parse_annotation(example, 0, "m").map_err(|e| e.to_string())?;
    ensure!(parsed.label == "Buffer Manipulation", "label {}", parsed.label);
    ensure!(parsed.semantic_tags.len() == 4, "tags {:?}", parsed.semantic_tags);

    let two = r#"{"Label": "X", "Semantic_Tags": ["a", "b"], "Description": "d"}"#;
    let six = r#"{"Label": "X", "Semantic_Tags": ["a", "b", "c", "d", "e", "f"], "Description": "d"}"#;
    let missing = r#"{"Label": "X", "Semantic_Tags": ["a", "b", "c"]}"#;
    for (raw, field) in [(two, "Semantic_Tags"), (six, "Semantic_Tags"), (missing, "Description")] {
        match parse_annotation(raw, 0, "m") {
            Err(AnnotateError::Schema { field: f, .. }) if f == field => {}
            other => return Err(format!("expected schema error on {field}, got {other:?}")),
        }
    }

    let answer = r#"{"Label":"Loop Counter","Semantic_Tags":["Iteration","Counter","Loop Control"],"Description":"Index variables."}"#;
    let (url, server) = mock_server(vec![(429, "{}".into()), (503, "{}".into()), (200, completion(answer))]);
    let config = LlmConfig {
        endpoint: url,
        max_retries: 3,
        backoff_ms: 1,
        timeout_secs: 5,
        ..LlmConfig::default()
    };
    let raw = request_annotation("prompt", &config, 1).map_err(|e| e.to_string())?;
    ensure!(raw == answer, "unexpected content {raw}");
    let served = server.join().unwrap();
    ensure!(served == 3, "server answered {served} requests");

    // 4 items, 3 raters, 3 categories: P-bar = 5/12, Pe = 25/72, kappa = 5/47
    let m = RatingMatrix::new(vec![vec![3, 0, 0], vec![1, 2, 0], vec![0, 1, 2], vec![1, 1, 1]]).map_err(|e| e.to_string())?;
    let kappa = fleiss_kappa(&m).map_err(|e| e.to_string())?;
    ensure!((kappa - 5.0 / 47.0).abs() <= 1e-9, "kappa {kappa}");
    let perfect = RatingMatrix::new(vec![vec![3, 0], vec![0, 3], vec![3, 0]]).map_err(|e| e.to_string())?;
    let one = fleiss_kappa(&perfect).map_err(|e| e.to_string())?;
    ensure!(one == 1.0, "perfect agreement kappa {one}");
    Ok(())
}

// ---------------------------------------------------------------- formats

fn read_all(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

fn formats_criterion() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let rows: Vec<InstanceId> = (0..13).map(|i| InstanceId::new(format!("s{}.java", i / 5), i % 5)).collect();
    let matrix: Vec<f32> = (0..13 * 6).map(|_| rng.gen_range(-1e3..1e3)).collect();
    let dataset = ActivationDataset::new("model", 3, 6, rows, matrix).map_err(|e| e.to_string())?;

    let first = dir.path().join("a");
    let second = dir.path().join("b");
    fs::create_dir_all(&first).unwrap();
    fs::create_dir_all(&second).unwrap();
    write_activations(&dataset, &first.join("manifest.json")).map_err(|e| e.to_string())?;
    let back = read_activations(&first.join("manifest.json")).map_err(|e| e.to_string())?;
    ensure!(back == dataset, "activation dataset changed in a round trip");
    write_activations(&back, &second.join("manifest.json")).map_err(|e| e.to_string())?;
    ensure!(read_all(&first) == read_all(&second), "activation files are not byte-identical after a round trip");
    let raw = fs::read(first.join("matrix.f32")).unwrap();
    for (i, chunk) in raw.chunks(4).enumerate() {
        ensure!(f32::from_le_bytes(chunk.try_into().unwrap()) == dataset.matrix[i], "matrix is not little-endian f32");
    }

    // manifest declares a different width than the matrix holds
    let manifest_path = second.join("manifest.json");
    let mut manifest: serde_json::Value = serde_json::from_slice(&fs::read(&manifest_path).unwrap()).unwrap();
    manifest["dim"] = 5.into();
    fs::write(&manifest_path, serde_json::to_vec(&manifest).unwrap()).unwrap();
    match read_activations(&manifest_path) {
        Err(e @ FormatError::CorruptMatrix { expected: 260, actual: 312, .. }) => {
            ensure!(e.to_string().contains("260") && e.to_string().contains("312"), "message {e}");
        }
        other => return Err(format!("dim mismatch gave {other:?}")),
    }

    fs::write(first.join("matrix.f32"), &raw[..raw.len() - 4]).unwrap();
    match read_activations(&first.join("manifest.json")) {
        Err(FormatError::CorruptMatrix { .. }) => {}
        other => return Err(format!("truncated matrix gave {other:?}")),
    }

    let records = vec![
        AttributionRecord {
            snippet_id: "s0.java".into(),
            predicted_label: "Java".into(),
            true_label: "Java".into(),
            scores: vec![0.1, -0.25, 1e-9, 3.5, 0.0],
        },
        AttributionRecord {
            snippet_id: "s1.java".into(),
            predicted_label: "C".into(),
            true_label: "Java".into(),
            scores: vec![1.0 / 3.0, 2.0, -7.0, 0.5, 1e300],
        },
    ];
    let counts: BTreeMap<String, usize> = [("s0.java".to_string(), 5), ("s1.java".to_string(), 5)].into();
    let a = dir.path().join("attr_a.jsonl");
    let b = dir.path().join("attr_b.jsonl");
    write_attributions(&a, &records).map_err(|e| e.to_string())?;
    let back = read_attributions(&a, &counts).map_err(|e| e.to_string())?;
    ensure!(back == records, "attribution records changed in a round trip");
    write_attributions(&b, &back).map_err(|e| e.to_string())?;
    ensure!(fs::read(&a).unwrap() == fs::read(&b).unwrap(), "attribution files differ after a round trip");
    let short: BTreeMap<String, usize> = [("s0.java".to_string(), 4), ("s1.java".to_string(), 5)].into();
    match read_attributions(&a, &short) {
        Err(FormatError::ScoreCount { expected: 4, actual: 5, .. }) => {}
        other => return Err(format!("score-count mismatch gave {other:?}")),
    }
    Ok(())
}

// ---------------------------------------------------------------- end to end

fn end_to_end_criterion() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path();
    let corpus = demo_corpus();
    let tokens = token_table(&corpus);
    write_token_records(&out.join("tokens.jsonl"), tokens.iter()).map_err(|e| e.to_string())?;
    let stub = StubConfig::default();
    let activations = stub_activations(&tokens, &stub).map_err(|e| e.to_string())?;
    fs::create_dir_all(out.join("acts")).unwrap();
    write_activations(&activations, &out.join("acts/manifest.json")).map_err(|e| e.to_string())?;
    let cfg = DiscoveryConfig { k: 20, ..DiscoveryConfig::default() };
    let before: ClusterSet = discover(&activations, &tokens, cfg).map_err(|e| e.to_string())?;
    write_clusters(&before, &out.join("clusters.json")).map_err(|e| e.to_string())?;

    let languages: BTreeSet<Language> = corpus.languages();
    let labeling = tokens.labeling(languages.into_iter().flat_map(Language::declared_tags));
    let lexical = lexical_report(&before.clusters, &tokens, 0.8).map_err(|e| e.to_string())?;
    let alignment = alignment_report(&before.clusters, &labeling, &[0.85, 0.9, 0.95]).map_err(|e| e.to_string())?;
    fs::write(out.join("alignment.json"), serde_json::to_vec_pretty(&alignment).unwrap()).unwrap();
    fs::write(out.join("lexical.json"), serde_json::to_vec_pretty(&lexical).unwrap()).unwrap();

    let kind = PerturbationKind::NoOpStatementInjection;
    let perturbed = perturb_corpus(&corpus, kind, &PerturbOptions::default()).map_err(|e| e.to_string())?;
    write_maps(&out.join("maps.jsonl"), &perturbed.maps).map_err(|e| e.to_string())?;
    let p_tokens = token_table(&perturbed.corpus);
    let p_acts = stub_activations(&p_tokens, &stub).map_err(|e| e.to_string())?;
    let after = discover(&p_acts, &p_tokens, cfg).map_err(|e| e.to_string())?;
    let stability = match_clusterings(&before, &after, Some(&perturbed.maps)).map_err(|e| e.to_string())?;
    ensure!((0.0..=1.0).contains(&stability.csi), "CSI {}", stability.csi);
    let csi = [CsiEntry { perturbation: kind.title().to_owned(), report: stability }];
    fs::write(out.join("csi.csv"), csi_csv(&csi)).unwrap();

    let markdown = Dossier {
        clusters: Some(&before),
        tokens: Some(&tokens),
        lexical: Some(&lexical),
        alignment: Some(&alignment),
        csi: &csi,
        annotations: &[],
    }
    .to_markdown();
    fs::write(out.join("report.md"), &markdown).unwrap();

    for name in [
        "tokens.jsonl",
        "acts/manifest.json",
        "acts/matrix.f32",
        "acts/tokens.jsonl",
        "clusters.json",
        "alignment.json",
        "lexical.json",
        "maps.jsonl",
        "csi.csv",
        "report.md",
    ] {
        let meta = fs::metadata(out.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(meta.len() > 0, "{name} is empty");
    }
    for heading in ["## Clusters", "## Lexical patterns", "## Syntactic alignment", "## Robustness", "## Cluster samples"] {
        ensure!(markdown.contains(heading), "report lacks {heading}");
    }
    ensure!(markdown.contains("| Perturbation | Average Jaccard | CSI |"), "report lacks the CSI table");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "pipeline took {elapsed:?}");
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("k-means recovers four Gaussian blobs (ARI >= 0.99, SSE non-increasing, < 5 s)", kmeans_criterion),
        ("k-means labels identical on 1 and 8 threads", determinism_criterion),
        ("alignment and coverage match a brute-force oracle on 200 random instances", alignment_criterion),
        ("lexical patterns match a brute-force oracle on 100 random clusters", lexical_criterion),
        ("CSI identity/disjoint/worked example and Hungarian equals exhaustive search", csi_criterion),
        ("perturbations reparse and validate on the demo corpus; renaming with identical activations gives CSI 0", perturbation_criterion),
        ("classifier reaches 99% accuracy within 2000 epochs, gradient and softmax checks", classifier_criterion),
        ("top-P selection matches an oracle on 1000 random vectors", top_p_criterion),
        ("annotation parsing, schema errors, HTTP retries and Fleiss' kappa", annotation_criterion),
        ("activation and attribution formats round-trip and reject corrupt input", formats_criterion),
        ("end-to-end pipeline on the demo corpus produces every artifact in < 60 s", end_to_end_criterion),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match result {
            Ok(()) => println!("PASS: {name}"),
            Err(why) => {
                failed += 1;
                println!("FAIL: {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
