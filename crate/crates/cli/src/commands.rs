use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use codeconcept::activation_io::{read_activations, read_attributions, write_activations};
use codeconcept::alignment::{alignment_report, lexical_report, AlignmentReport, LexicalReport};
use codeconcept::annotate::{annotate_clusters, read_annotations, write_annotations, LlmConfig, PromptOptions};
use codeconcept::attribution::{
    explain, train_concept_classifier, write_explanations, ExplainInputs, ExplanationOptions, TrainConfig,
};
use codeconcept::corpus::{load_corpus, tokenize_corpus, write_token_records, Corpus, Language, TokenRecord, TokenTable};
use codeconcept::discovery::{discover, read_clusters, write_clusters, DiscoveryConfig};
use codeconcept::perturb::{
    perturb_corpus, read_maps, validate_semantics_preserved, write_maps, PerturbOptions, PerturbationKind,
};
use codeconcept::report::{csi_csv, CsiEntry, Dossier};
use codeconcept::robustness::{check_same_universe, match_clusterings};
use codeconcept::stub::{stub_activations, transfer_activations, StubConfig};
use serde::Serialize;

use crate::args::*;

/// Why a subcommand stopped. Configuration problems are caught before any
/// input is read; data problems name the artifact that caused them.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Data(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn config(message: impl Into<String>) -> Failure {
    Failure::Config(message.into())
}

fn require(path: &Path, what: &str) -> Result<(), Failure> {
    if path.exists() {
        Ok(())
    } else {
        Err(config(format!("{what} {} does not exist", path.display())))
    }
}

fn check_fraction(value: f64, name: &str) -> Result<(), Failure> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(config(format!("--{name} must lie in (0, 1], got {value}")))
    }
}

fn prepare_output(path: &Path) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    prepare_output(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    prepare_output(path)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_tokens(path: &Path) -> anyhow::Result<TokenTable> {
    TokenTable::load(path).with_context(|| format!("reading token table {}", path.display()))
}

fn load_source(path: &Path) -> anyhow::Result<Corpus> {
    let (corpus, report) = load_corpus(path, None).with_context(|| format!("loading corpus {}", path.display()))?;
    for skipped in &report.skipped {
        log::info!("skipped {}: {}", skipped.path.display(), skipped.reason);
    }
    Ok(corpus)
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Tokenize(a) => tokenize(a),
        Command::StubActivations(a) => stub(a),
        Command::Discover(a) => discover_cmd(a),
        Command::Align(a) => align(a),
        Command::Annotate(a) => annotate(a),
        Command::Perturb(a) => perturb(a),
        Command::Csi(a) => csi(a),
        Command::Attribute(a) => attribute(a),
        Command::Report(a) => report(a),
    }
}

fn tokenize(a: TokenizeArgs) -> Outcome {
    require(&a.corpus, "corpus")?;
    let filter = if a.languages.is_empty() {
        None
    } else {
        Some(
            a.languages
                .iter()
                .map(|l| l.parse::<Language>().map_err(|e| config(e.to_string())))
                .collect::<Result<BTreeSet<_>, _>>()?,
        )
    };
    let (corpus, load) =
        load_corpus(&a.corpus, filter.as_ref()).with_context(|| format!("loading corpus {}", a.corpus.display()))?;
    let tagged = tokenize_corpus(&corpus).with_context(|| format!("tokenizing {}", a.corpus.display()))?;
    let records: Vec<TokenRecord> = tagged
        .into_values()
        .flatten()
        .map(|(token, tag)| TokenRecord::new(token, tag))
        .collect();
    prepare_output(&a.out)?;
    write_token_records(&a.out, &records)?;
    eprintln!(
        "{} snippets, {} tokens, {} files skipped",
        corpus.len(),
        records.len(),
        load.skipped.len()
    );
    Ok(())
}

fn stub(a: StubArgs) -> Outcome {
    require(&a.tokens, "token table")?;
    if a.dim == 0 {
        return Err(config("--dim must be positive"));
    }
    if let (Some(from), Some(map)) = (&a.from, &a.map) {
        require(from, "activation manifest")?;
        require(map, "correspondence map")?;
    }
    let mut inputs = vec![&a.tokens];
    inputs.extend(a.from.iter().chain(&a.map));
    let outputs = [a.out.clone(), a.out.with_file_name("tokens.jsonl"), a.out.with_file_name("matrix.f32")];
    for target in outputs {
        let Ok(target) = target.canonicalize() else { continue };
        if inputs.iter().any(|i| i.canonicalize().is_ok_and(|i| i == target)) {
            return Err(config(format!(
                "--out {} would overwrite the input {}; write the activations to their own directory",
                a.out.display(),
                target.display()
            )));
        }
    }
    let tokens = load_tokens(&a.tokens)?;
    let cfg = StubConfig {
        dim: a.dim,
        seed: a.seed,
        ..StubConfig::default()
    };
    let dataset = match (&a.from, &a.map) {
        (Some(from), Some(map)) => {
            let original = read_activations(from).with_context(|| format!("reading {}", from.display()))?;
            let maps = read_maps(map).with_context(|| format!("reading {}", map.display()))?;
            transfer_activations(&original, &tokens, &maps, &cfg)
                .with_context(|| format!("transferring rows of {}", from.display()))?
        }
        _ => stub_activations(&tokens, &cfg).with_context(|| format!("embedding {}", a.tokens.display()))?,
    };
    prepare_output(&a.out)?;
    write_activations(&dataset, &a.out)?;
    eprintln!("{} rows of dimension {}", dataset.len(), dataset.dim());
    Ok(())
}

fn discover_cmd(a: DiscoverArgs) -> Outcome {
    require(&a.activations, "activation manifest")?;
    require(&a.tokens, "token table")?;
    if a.k == 0 || a.max_iter == 0 {
        return Err(config("--k and --max-iter must be positive"));
    }
    let dataset = read_activations(&a.activations).with_context(|| format!("reading {}", a.activations.display()))?;
    let tokens = load_tokens(&a.tokens)?;
    let cfg = DiscoveryConfig {
        k: a.k,
        seed: a.seed,
        max_iter: a.max_iter,
        max_token_freq: a.max_token_freq,
        max_cluster_size: a.max_cluster_size,
        ..DiscoveryConfig::default()
    };
    let clusters =
        discover(&dataset, &tokens, cfg).with_context(|| format!("clustering {}", a.activations.display()))?;
    prepare_output(&a.out)?;
    write_clusters(&clusters, &a.out)?;
    eprintln!(
        "{} clusters kept, {} pruned, {} iterations, SSE {:.4}",
        clusters.clusters.len(),
        clusters.pruned.len(),
        clusters.iterations,
        clusters.sse
    );
    Ok(())
}

fn align(a: AlignArgs) -> Outcome {
    require(&a.clusters, "cluster file")?;
    require(&a.tags, "token table")?;
    for &t in &a.thresholds {
        check_fraction(t, "thresholds")?;
    }
    check_fraction(a.lexical_threshold, "lexical-threshold")?;
    let clusters = read_clusters(&a.clusters).with_context(|| format!("reading {}", a.clusters.display()))?;
    let tokens = load_tokens(&a.tags)?;
    let languages: BTreeSet<Language> = tokens
        .snippet_lengths()
        .keys()
        .filter_map(Language::from_path)
        .collect();
    let labeling = tokens.labeling(languages.into_iter().flat_map(Language::declared_tags));
    let lexical = lexical_report(&clusters.clusters, &tokens, a.lexical_threshold)
        .with_context(|| format!("lexical patterns of {}", a.clusters.display()))?;
    let alignment = alignment_report(&clusters.clusters, &labeling, &a.thresholds)
        .with_context(|| format!("aligning {} with {}", a.clusters.display(), a.tags.display()))?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_json(&a.out.join("alignment.json"), &alignment)?;
    write_text(&a.out.join("alignment.csv"), &alignment.to_csv())?;
    write_text(&a.out.join("alignment.md"), &alignment.to_markdown())?;
    write_json(&a.out.join("lexical.json"), &lexical)?;
    write_text(&a.out.join("lexical.csv"), &lexical.to_csv())?;
    write_text(&a.out.join("lexical.md"), &lexical.to_markdown())?;
    Ok(())
}

fn annotate(a: AnnotateArgs) -> Outcome {
    let llm = LlmConfig {
        endpoint: a.endpoint,
        model: a.model,
        auth_env: a.auth_env,
        temperature: a.temperature,
        top_p: a.top_p,
        top_k: Some(a.top_k),
        supports_top_k: a.supports_top_k,
        max_retries: a.max_retries,
        timeout_secs: a.timeout_secs,
        response_pointer: a.response_pointer,
        max_in_flight: a.max_in_flight,
        ..LlmConfig::default()
    };
    llm.validate().map_err(|e| config(e.to_string()))?;
    require(&a.clusters, "cluster file")?;
    require(&a.tokens, "token table")?;
    require(&a.corpus, "corpus")?;
    let options = PromptOptions {
        language: a.language,
        max_contexts: a.max_contexts,
        ..PromptOptions::default()
    };
    let clusters = read_clusters(&a.clusters).with_context(|| format!("reading {}", a.clusters.display()))?;
    let tokens = load_tokens(&a.tokens)?;
    let corpus = load_source(&a.corpus)?;
    let outcomes = annotate_clusters(&clusters.clusters, &tokens, &corpus, &options, &llm)
        .with_context(|| format!("annotating {}", a.clusters.display()))?;
    let total = outcomes.len();
    let mut annotations = Vec::new();
    let mut failed = 0;
    for o in outcomes {
        match o.result {
            Ok(ann) => annotations.push(ann),
            Err(e) => {
                failed += 1;
                eprintln!("cluster {}: {e}", o.cluster_id);
            }
        }
    }
    prepare_output(&a.out)?;
    write_annotations(&a.out, &annotations)?;
    if failed > 0 {
        return Err(anyhow!("{failed} of {total} clusters could not be annotated; the rest are in {}", a.out.display()).into());
    }
    Ok(())
}

fn perturb(a: PerturbArgs) -> Outcome {
    let kind: PerturbationKind = a.kind.parse().map_err(|e: codeconcept::perturb::UnknownKind| config(e.to_string()))?;
    check_fraction(a.noop_density, "noop-density")?;
    require(&a.corpus, "corpus")?;
    if let (Ok(src), Ok(dst)) = (a.corpus.canonicalize(), a.out.canonicalize()) {
        if src == dst {
            return Err(config("--out must differ from --corpus"));
        }
    }
    let corpus = load_source(&a.corpus)?;
    let options = PerturbOptions {
        seed: a.seed,
        noop_density: a.noop_density,
    };
    let result = perturb_corpus(&corpus, kind, &options)?;
    for (original, map) in corpus.iter().zip(&result.maps) {
        if map.inapplicable {
            continue;
        }
        let perturbed = result
            .corpus
            .get(&map.perturbed_snippet_id)
            .ok_or_else(|| anyhow!("perturbed snippet {} missing", map.perturbed_snippet_id))?;
        validate_semantics_preserved(original, perturbed, kind)?;
    }
    for snippet in result.corpus.iter() {
        write_text(&a.out.join(&snippet.id), &snippet.source)?;
    }
    prepare_output(&a.map)?;
    write_maps(&a.map, &result.maps)?;
    let inapplicable = result.inapplicable().len() - result.unsupported.len();
    eprintln!(
        "{}: {} snippets rewritten, {} inapplicable, {} in unsupported languages",
        kind.name(),
        result.maps.len() - inapplicable - result.unsupported.len(),
        inapplicable,
        result.unsupported.len()
    );
    Ok(())
}

fn csi(a: CsiArgs) -> Outcome {
    require(&a.before, "cluster file")?;
    require(&a.after, "cluster file")?;
    if let Some(map) = &a.map {
        require(map, "correspondence map")?;
    }
    let before = read_clusters(&a.before).with_context(|| format!("reading {}", a.before.display()))?;
    let after = read_clusters(&a.after).with_context(|| format!("reading {}", a.after.display()))?;
    let maps = match &a.map {
        Some(p) => Some(read_maps(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    if maps.is_none() {
        check_same_universe(&before, &after).with_context(|| {
            format!(
                "{} and {} cluster different token instances; pass --map",
                a.before.display(),
                a.after.display()
            )
        })?;
    }
    let report = match_clusterings(&before, &after, maps.as_deref())
        .with_context(|| format!("matching {} against {}", a.after.display(), a.before.display()))?;
    let perturbation = a
        .label
        .or_else(|| maps.as_ref().and_then(|m| m.first()).map(|m| m.kind.title().to_owned()))
        .unwrap_or_else(|| "Unperturbed".into());
    eprintln!(
        "{perturbation}: average Jaccard {:.4}, CSI {:.4}",
        report.average_jaccard, report.csi
    );
    write_json(&a.out, &CsiEntry { perturbation, report })?;
    Ok(())
}

fn attribute(a: AttributeArgs) -> Outcome {
    check_fraction(a.top_p, "top-p")?;
    if !(a.learning_rate > 0.0) || a.l2 < 0.0 || a.max_epochs == 0 || a.max_words == 0 {
        return Err(config(
            "--learning-rate, --max-epochs and --max-words must be positive and --l2 non-negative",
        ));
    }
    for (p, what) in [
        (&a.activations, "activation manifest"),
        (&a.clusters, "cluster file"),
        (&a.attributions, "attribution file"),
        (&a.tokens, "token table"),
        (&a.corpus, "corpus"),
    ] {
        require(p, what)?;
    }
    let dataset = read_activations(&a.activations).with_context(|| format!("reading {}", a.activations.display()))?;
    let clusters = read_clusters(&a.clusters).with_context(|| format!("reading {}", a.clusters.display()))?;
    let source = &clusters.source;
    if source.model_id != dataset.manifest.model_id || source.layer != dataset.manifest.layer {
        return Err(anyhow!(
            "{} clusters model {} layer {}, but {} holds model {} layer {}",
            a.clusters.display(),
            source.model_id,
            source.layer,
            a.activations.display(),
            dataset.manifest.model_id,
            dataset.manifest.layer
        )
        .into());
    }
    let tokens = load_tokens(&a.tokens)?;
    let corpus = load_source(&a.corpus)?;
    let records = read_attributions(&a.attributions, &tokens.snippet_lengths())
        .with_context(|| format!("reading {}", a.attributions.display()))?;
    let train = TrainConfig {
        learning_rate: a.learning_rate,
        l2: a.l2,
        max_epochs: a.max_epochs,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let classifier = train_concept_classifier(&dataset, &clusters, train)
        .with_context(|| format!("training on {} with {}", a.activations.display(), a.clusters.display()))?;
    eprintln!(
        "classifier: {} concepts, {} epochs, training accuracy {:.3}",
        classifier.k(),
        classifier.epochs,
        classifier.train_accuracy
    );
    if let Some(path) = &a.classifier_out {
        prepare_output(path)?;
        classifier.save(path)?;
    }
    let inputs = ExplainInputs {
        dataset: &dataset,
        clusters: &clusters,
        tokens: &tokens,
        corpus: &corpus,
        classifier: &classifier,
    };
    let options = ExplanationOptions {
        task: a.task,
        max_words: a.max_words,
        ..ExplanationOptions::default()
    };
    let explanations =
        explain(&inputs, &records, a.top_p, &options).with_context(|| format!("explaining {}", a.attributions.display()))?;
    prepare_output(&a.out)?;
    write_explanations(&a.out, &explanations)?;
    eprintln!("{} salient tokens over {} records", explanations.len(), records.len());
    Ok(())
}

fn report(a: ReportArgs) -> Outcome {
    let optional = [
        (a.clusters.as_ref(), "cluster file"),
        (a.tokens.as_ref(), "token table"),
        (a.alignment.as_ref(), "alignment directory"),
        (a.annotations.as_ref(), "annotation file"),
    ];
    for (p, what) in optional {
        if let Some(p) = p {
            require(p, what)?;
        }
    }
    for p in &a.csi {
        require(p, "CSI report")?;
    }
    let clusters = match &a.clusters {
        Some(p) => Some(read_clusters(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let tokens = a.tokens.as_deref().map(load_tokens).transpose()?;
    let (alignment, lexical): (Option<AlignmentReport>, Option<LexicalReport>) = match &a.alignment {
        Some(dir) => (
            Some(read_json(&dir.join("alignment.json"))?),
            Some(read_json(&dir.join("lexical.json"))?),
        ),
        None => (None, None),
    };
    let csi: Vec<CsiEntry> = a.csi.iter().map(|p| read_json(p)).collect::<anyhow::Result<_>>()?;
    let annotations = match &a.annotations {
        Some(p) => read_annotations(p).with_context(|| format!("reading {}", p.display()))?,
        None => Vec::new(),
    };
    let dossier = Dossier {
        clusters: clusters.as_ref(),
        tokens: tokens.as_ref(),
        lexical: lexical.as_ref(),
        alignment: alignment.as_ref(),
        csi: &csi,
        annotations: &annotations,
    };
    write_text(&a.out, &dossier.to_markdown())?;
    if !csi.is_empty() {
        write_text(&csv_sibling(&a.out), &csi_csv(&csi))?;
    }
    Ok(())
}

fn csv_sibling(markdown: &Path) -> PathBuf {
    let stem = markdown
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    markdown.with_file_name(format!("{stem}_csi.csv"))
}
