use std::fs;
use std::path::{Path, PathBuf};

use c2po::inference::{HttpBackend, InferenceBackend, KnowledgeTable};
use c2po::metrics::corpus_stats;
use c2po::plot_graph::{build_story_graph, GraphError, StoryGraph};
use c2po::realization::realize_story;
use c2po::walk::walk_batch;
use c2po::{extract_outline, parse_annotated_story, AlignOptions, ExtractionError, NodeId, PlotOutline};
use serde::Serialize;

use crate::config::{backend_timeout, BackendSpec, RunConfig};
use crate::{write_atomic, CliError, EXIT_BACKEND, EXIT_GRAPH, EXIT_INPUT, EXIT_PLOT};

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))
}

fn extraction_error(path: &Path, e: ExtractionError) -> CliError {
    let code = match e {
        ExtractionError::InsufficientPlot { .. } => EXIT_PLOT,
        _ => EXIT_INPUT,
    };
    CliError::new(code, format!("{}: {e}", path.display()))
}

pub struct Extracted {
    pub outline: PlotOutline,
    /// Story text of an annotated input; empty for outline passthrough.
    pub source_text: String,
}

/// Annotated document in, outline out. A JSON input is taken to be an
/// outline already and is validated and passed through.
pub fn extract(input: &Path, cfg: &RunConfig) -> Result<Extracted, CliError> {
    let document = read(input)?;
    if document.trim_start().starts_with('{') {
        let outline = PlotOutline::from_json(&document).map_err(|e| extraction_error(input, e))?;
        return Ok(Extracted {
            outline,
            source_text: String::new(),
        });
    }
    let outline = extract_outline(&document, &cfg.cluster, cfg.seed, &AlignOptions::default())
        .map_err(|e| extraction_error(input, e))?;
    let source_text = parse_annotated_story(&document).map(|s| s.text).unwrap_or_default();
    Ok(Extracted { outline, source_text })
}

pub fn cmd_extract(input: &Path, out: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let extracted = extract(input, cfg)?;
    write_atomic(out, extracted.outline.to_json().as_bytes())
}

fn open_backend(cfg: &RunConfig) -> Result<Box<dyn InferenceBackend<f64>>, CliError> {
    Ok(match cfg.backend_spec()? {
        BackendSpec::Table(path) => Box::new(
            KnowledgeTable::<f64>::load(&path)
                .map_err(|e| CliError::new(EXIT_BACKEND, format!("table backend: {e}")))?,
        ),
        BackendSpec::Http(url) => Box::new(HttpBackend::<f64>::new(&url, backend_timeout()?)),
    })
}

pub fn build_graph(outline: &PlotOutline, cfg: &RunConfig) -> Result<StoryGraph<f64>, CliError> {
    let backend = open_backend(cfg)?;
    build_story_graph(outline, backend.as_ref(), cfg.params(), cfg.link_scope).map_err(|e| {
        let code = match e {
            GraphError::Backend { .. } | GraphError::Link(_) => EXIT_BACKEND,
            _ => EXIT_GRAPH,
        };
        CliError::new(code, e.to_string())
    })
}

pub fn load_outline(path: &Path) -> Result<PlotOutline, CliError> {
    PlotOutline::from_json(&read(path)?).map_err(|e| extraction_error(path, e))
}

pub fn cmd_graph(outline: &Path, out: &Path, dot: Option<&Path>, cfg: &RunConfig) -> Result<(), CliError> {
    let outline = load_outline(outline)?;
    let graph = build_graph(&outline, cfg)?;
    write_graph(&graph, out, dot)
}

pub fn write_graph(graph: &StoryGraph<f64>, out: &Path, dot: Option<&Path>) -> Result<(), CliError> {
    write_atomic(out, graph.to_json().as_bytes())?;
    if let Some(dot) = dot {
        write_atomic(dot, graph.to_dot().as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    base_seed: u64,
    walk: String,
    count: usize,
    stories: Vec<ManifestEntry<'a>>,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    file: String,
    seed: u64,
    node_ids: &'a [NodeId],
}

/// Walks `count` stories and writes `story_NNN.txt` (and `.json`) plus a
/// manifest. The manifest goes last, so a directory without one is
/// incomplete. Returns the story texts.
pub fn generate(
    graph: &StoryGraph<f64>,
    outline: Option<&PlotOutline>,
    out_dir: &Path,
    json: bool,
    cfg: &RunConfig,
) -> Result<Vec<String>, CliError> {
    let paths =
        walk_batch(graph, cfg.walk, cfg.seed, cfg.count).map_err(|e| CliError::new(EXIT_GRAPH, e.to_string()))?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::new(EXIT_INPUT, format!("cannot create {}: {e}", out_dir.display())))?;
    let mut texts = Vec::with_capacity(paths.len());
    let mut entries = Vec::with_capacity(paths.len());
    for (j, path) in paths.iter().enumerate() {
        let story = realize_story(path, graph, outline, &cfg.templates)
            .map_err(|e| CliError::new(EXIT_GRAPH, e.to_string()))?;
        let stem = format!("story_{j:03}");
        let text = story.text();
        write_atomic(&out_dir.join(format!("{stem}.txt")), format!("{text}\n").as_bytes())?;
        if json {
            let body = serde_json::to_string_pretty(&story).expect("story serialization is infallible");
            write_atomic(&out_dir.join(format!("{stem}.json")), body.as_bytes())?;
        }
        entries.push(ManifestEntry {
            file: format!("{stem}.txt"),
            seed: path.seed,
            node_ids: &path.node_ids,
        });
        texts.push(text);
    }
    let manifest = Manifest {
        base_seed: cfg.seed,
        walk: cfg.walk.to_string(),
        count: cfg.count,
        stories: entries,
    };
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serialization is infallible");
    write_atomic(&out_dir.join("manifest.json"), body.as_bytes())?;
    Ok(texts)
}

pub fn cmd_generate(
    graph: &Path,
    outline: Option<&Path>,
    out: &Path,
    json: bool,
    cfg: &RunConfig,
) -> Result<(), CliError> {
    let graph = StoryGraph::<f64>::from_json(&read(graph)?)
        .map_err(|e| CliError::new(EXIT_GRAPH, format!("{}: {e}", graph.display())))?;
    let outline = outline.map(load_outline).transpose()?;
    generate(&graph, outline.as_ref(), out, json, cfg)?;
    Ok(())
}

/// Every `*.txt` file directly under `dir`, in file-name order.
fn read_stories(dir: &Path) -> Result<Vec<String>, CliError> {
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::new(EXIT_INPUT, format!("cannot read {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    files.iter().map(|p| read(p)).collect()
}

pub fn stats_report(stories: &[String], reference: &str, json: bool) -> Result<String, CliError> {
    let stats = corpus_stats::<f64, _>(stories, reference).map_err(|e| CliError::new(EXIT_INPUT, e.to_string()))?;
    Ok(if json {
        serde_json::to_string_pretty(&stats).expect("stats serialization is infallible") + "\n"
    } else {
        stats.to_string()
    })
}

pub fn cmd_stats(dir: &Path, reference: &Path, json: bool) -> Result<String, CliError> {
    let stories = read_stories(dir)?;
    if stories.is_empty() {
        return Err(CliError::new(
            EXIT_INPUT,
            format!("no story files (*.txt) in {}", dir.display()),
        ));
    }
    stats_report(&stories, &read(reference)?, json)
}

pub struct PipelineArgs<'a> {
    pub input: &'a Path,
    pub out: &'a Path,
    pub reference: Option<&'a Path>,
    pub dot: Option<&'a Path>,
    pub json: bool,
}

/// extract, graph, generate, stats. Layout under `out`: `config.toml`,
/// `outline.json`, `graph.json`, `stories/`, `stats.txt`.
pub fn cmd_pipeline(args: PipelineArgs<'_>, cfg: &RunConfig) -> Result<String, CliError> {
    fs::create_dir_all(args.out)
        .map_err(|e| CliError::new(EXIT_INPUT, format!("cannot create {}: {e}", args.out.display())))?;
    write_atomic(&args.out.join("config.toml"), cfg.to_toml().as_bytes())?;
    let extracted = extract(args.input, cfg)?;
    write_atomic(&args.out.join("outline.json"), extracted.outline.to_json().as_bytes())?;
    let graph = build_graph(&extracted.outline, cfg)?;
    write_graph(&graph, &args.out.join("graph.json"), args.dot)?;
    let stories = generate(
        &graph,
        Some(&extracted.outline),
        &args.out.join("stories"),
        args.json,
        cfg,
    )?;
    let reference = match args.reference {
        Some(path) => read(path)?,
        None => extracted.source_text,
    };
    let report = stats_report(&stories, &reference, false)?;
    write_atomic(&args.out.join("stats.txt"), report.as_bytes())?;
    Ok(report)
}
