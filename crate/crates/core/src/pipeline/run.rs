use std::fmt::Write as _;
use std::io::BufReader;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{InputSource, PipelineConfig};
use crate::community::{
    self, avg_path_length_from, clustering_coefficient, girvan_newman_with, random_baseline,
    GnOptions, Partition, PathMode,
};
use crate::error::{Error, Result};
use crate::mobility::{
    assign_communities_sized, config_hash, generate_random_direction, generate_tvc, node_name,
    GeneratorMetadata,
};
use crate::profile::{build_association_matrix, build_profile, BehavioralProfile};
use crate::similarity::{
    build_similarity_graph, cdf_at, similarity_cdf, similarity_histogram, similarity_matrix,
    write_cdf_csv, SimilarityGraph, SimilarityMatrix,
};
use crate::trace_io::{
    build_location_universe, parse_sessions, systematic_sample, ParseOptions, ParseStats,
    TimeWindow, Trace,
};

pub const METRICS_HEADER: &str = "dataset,cc_ori,cc_rand,apl_ori,apl_rand,Q_ori,Q_rand";

/// Artifacts of one graph threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphReport {
    pub threshold: f64,
    pub edges_txt: String,
    pub partition_csv: String,
}

impl GraphReport {
    pub fn label(&self) -> String {
        format!("t{:.2}", self.threshold)
    }
}

/// Artifacts of one analysis window.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowReport {
    pub summary: WindowSummary,
    pub histogram_csv: String,
    pub histogram_lognorm_csv: String,
    pub cdf_csv: String,
    pub dendrogram_nwk: String,
    pub cuts_csv: String,
    pub graphs: Vec<GraphReport>,
    pub metrics_csv: String,
    pub metrics_detail_csv: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportBundle {
    pub metadata: RunMetadata,
    pub windows: Vec<WindowReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub dataset: String,
    pub input_kind: String,
    /// Effective config (generator seeds and presets applied).
    pub config: serde_json::Value,
    /// SHA-256 of the trace file bytes.
    pub input_sha256: Option<String>,
    pub parse_stats: Option<ParseStats>,
    pub generator: Option<GeneratorMetadata>,
    pub population: usize,
    pub cohort: usize,
    pub sampling: String,
    pub windows: Vec<WindowSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub label: String,
    pub days: i64,
    pub start: i64,
    pub slots: usize,
    /// Cohort sessions overlapping the window.
    pub sessions: usize,
    pub users: usize,
    /// Cohort members with no online time in the window.
    pub excluded_users: usize,
    pub pairs: u64,
    pub mean_score: f64,
    pub fraction_at_least_0_9: f64,
    pub histogram: Vec<u64>,
    pub cuts: Vec<CutSummary>,
    pub graphs: Vec<GraphSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutSummary {
    pub height: f64,
    pub clusters: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub threshold: f64,
    pub vertices: usize,
    pub edges: usize,
    pub components: usize,
    pub communities: usize,
    pub gn_removals: usize,
    pub gn_stopped_early: bool,
    pub cc_ori: f64,
    pub cc_rand: f64,
    pub apl_ori: Option<f64>,
    pub apl_rand: Option<f64>,
    pub apl_weighted: Option<f64>,
    /// Number of path-length sources when sampled; `None` means all vertices.
    pub apl_sources: Option<usize>,
    pub q_ori: Option<f64>,
    pub q_rand: Option<f64>,
    pub q_rand_method: String,
}

struct Ingested {
    trace: Trace,
    population: Vec<String>,
    input_sha256: Option<String>,
    parse_stats: Option<ParseStats>,
    generator: Option<GeneratorMetadata>,
}

fn ingest(cfg: &PipelineConfig) -> Result<Ingested> {
    let slot_length = cfg.analysis.slot_length;
    match cfg.effective_input() {
        InputSource::Trace { path, delimiter } => {
            let bytes = std::fs::read(&path)?;
            let (trace, stats) = parse_sessions(
                BufReader::new(bytes.as_slice()),
                &ParseOptions {
                    delimiter,
                    slot_length,
                },
            )?;
            Ok(Ingested {
                population: trace.node_ids(),
                trace,
                input_sha256: Some(hex::encode(Sha256::digest(&bytes))),
                parse_stats: Some(stats),
                generator: None,
            })
        }
        InputSource::Rd { model } => {
            let trace = generate_random_direction(&model)?;
            let generator = GeneratorMetadata {
                generator: "random_direction".into(),
                generator_version: env!("CARGO_PKG_VERSION").into(),
                seed: model.seed,
                config_hash: config_hash(&model),
                node_count: model.node_count,
                sessions: trace.len(),
            };
            Ok(Ingested {
                population: (0..model.node_count).map(node_name).collect(),
                trace,
                input_sha256: None,
                parse_stats: None,
                generator: Some(generator),
            })
        }
        InputSource::Tvc {
            model,
            assignment,
            community_span,
        } => {
            let a = assign_communities_sized(
                model.node_count,
                assignment,
                &model.world,
                community_span,
                model.seed,
            )?;
            let trace = generate_tvc(&model, &a)?;
            let generator = GeneratorMetadata {
                generator: "tvc".into(),
                generator_version: env!("CARGO_PKG_VERSION").into(),
                seed: model.seed,
                config_hash: config_hash(&(&model, assignment, community_span)),
                node_count: model.node_count,
                sessions: trace.len(),
            };
            Ok(Ingested {
                population: (0..model.node_count).map(node_name).collect(),
                trace,
                input_sha256: None,
                parse_stats: None,
                generator: Some(generator),
            })
        }
    }
}

/// Ingest or generate, sample once, then analyze every configured window.
///
/// Errors carry the failing stage. Nothing is written here; see
/// [`super::write_reports`].
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let input = ingest(cfg).map_err(Error::at("ingest"))?;

    let (cohort, sampling) = match cfg.sample_size() {
        Some(k) => (
            systematic_sample(&input.population, k, cfg.seed).map_err(Error::at("sample"))?,
            format!("systematic({k})"),
        ),
        None => (input.population.clone(), "all".to_string()),
    };
    let trace = input.trace.restrict_to(&cohort);
    let universe = build_location_universe(&trace);
    let start = cfg.analysis.window_start.unwrap_or(trace.window().start);
    let dataset = cfg.dataset_name();

    let mut windows = Vec::new();
    for (wi, &days) in cfg.analysis.windows_days.iter().enumerate() {
        let window = TimeWindow::new(start, days * crate::trace_io::DAY, cfg.analysis.slot_length)
            .map_err(Error::at("window"))?;
        let label = format!("w{days}d");
        let sessions = trace
            .sessions()
            .iter()
            .filter(|s| s.start_time < window.end() && s.end_time > window.start)
            .count();

        let per_user: Vec<(&str, &[crate::trace_io::SessionRecord])> = trace.by_node().collect();
        let opts = cfg.profile_options();
        let profiles: Vec<Option<BehavioralProfile>> = per_user
            .par_iter()
            .map(|(_, ss)| {
                let a = build_association_matrix(ss, &window, &universe)?;
                if a.is_zero() {
                    return Ok(None);
                }
                build_profile(&a, &opts).map(Some)
            })
            .collect::<Result<_>>()
            .map_err(Error::at("profile"))?;
        let profiles: Vec<BehavioralProfile> = profiles.into_iter().flatten().collect();
        let excluded = cohort.len() - profiles.len();

        let matrix = similarity_matrix(&profiles).map_err(Error::at("similarity"))?;
        drop(profiles);
        let report = analyze_window(cfg, &dataset, &label, &matrix, wi as u64)?;
        let summary = WindowSummary {
            label,
            days,
            start,
            slots: window.slot_count(),
            sessions,
            users: matrix.len(),
            excluded_users: excluded,
            ..report.summary
        };
        windows.push(WindowReport { summary, ..report });
    }

    let replay = serde_json::json!({
        "seed": cfg.seed,
        "dataset": dataset,
        "preset": cfg.preset,
        "input": cfg.effective_input(),
        "analysis": cfg.analysis,
    });
    Ok(ReportBundle {
        metadata: RunMetadata {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed: cfg.seed,
            config_hash: cfg.config_hash(),
            dataset,
            input_kind: cfg.input.kind().into(),
            config: replay,
            input_sha256: input.input_sha256,
            parse_stats: input.parse_stats,
            generator: input.generator,
            population: input.population.len(),
            cohort: cohort.len(),
            sampling,
            windows: windows.iter().map(|w| w.summary.clone()).collect(),
        },
        windows,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), |v| format!("{v:.6}"))
}

fn analyze_window(
    cfg: &PipelineConfig,
    dataset: &str,
    label: &str,
    matrix: &SimilarityMatrix,
    window_index: u64,
) -> Result<WindowReport> {
    let a = &cfg.analysis;
    let hist = similarity_histogram(matrix, a.bins).map_err(Error::at("similarity"))?;
    let cdf = similarity_cdf(matrix).map_err(Error::at("similarity"))?;
    let pairs = matrix.pair_count() as u64;
    let mean_score = matrix.upper_triangle().sum::<f64>() / pairs as f64;
    // Fraction strictly below 0.9 is the CDF just left of 0.9.
    let below = cdf_at(&cdf, f64::from_bits(0.9f64.to_bits() - 1));

    let mut histogram_csv = Vec::new();
    hist.write_csv(&mut histogram_csv)?;
    let mut histogram_lognorm_csv = Vec::new();
    hist.write_normalized_csv(&mut histogram_lognorm_csv)?;
    let mut cdf_csv = Vec::new();
    write_cdf_csv(&cdf, &mut cdf_csv)?;

    let dendrogram = community::hierarchical_dendrogram(matrix).map_err(Error::at("clustering"))?;
    let mut cuts = Vec::new();
    let mut cuts_csv = String::from("height,clusters\n");
    for &h in &a.cut_heights {
        let clusters = community::cut_dendrogram(&dendrogram, h)
            .map_err(Error::at("clustering"))?
            .community_count();
        let _ = writeln!(cuts_csv, "{h:.4},{clusters}");
        cuts.push(CutSummary {
            height: h,
            clusters,
        });
    }

    let mut graphs = Vec::new();
    let mut graph_summaries = Vec::new();
    let mut metrics_csv = format!("{METRICS_HEADER}\n");
    let mut metrics_detail_csv = String::from(
        "dataset,threshold,vertices,edges,components,communities,cc_ori,cc_rand,apl_ori,apl_rand,\
         apl_weighted,apl_sources,Q_ori,Q_rand,q_rand_method,gn_removals,gn_stopped_early\n",
    );
    for (ti, &threshold) in a.graph_thresholds.iter().enumerate() {
        let graph = build_similarity_graph(matrix, threshold).map_err(Error::at("graph"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(window_index * 1024 + ti as u64);
        let (gs, partition) =
            graph_metrics(cfg, &graph, &mut rng).map_err(Error::at("community"))?;

        let mut edges_txt = Vec::new();
        graph.write_edge_list(&mut edges_txt)?;
        let mut partition_csv = Vec::new();
        partition.write_csv(graph.vertices(), &mut partition_csv)?;
        graphs.push(GraphReport {
            threshold,
            edges_txt: String::from_utf8(edges_txt).expect("utf-8"),
            partition_csv: String::from_utf8(partition_csv).expect("utf-8"),
        });

        let row = format!("{dataset}_{label}_t{threshold:.2}");
        let _ = writeln!(
            metrics_csv,
            "{row},{:.6},{:.6},{},{},{},{}",
            gs.cc_ori,
            gs.cc_rand,
            fmt_opt(gs.apl_ori),
            fmt_opt(gs.apl_rand),
            fmt_opt(gs.q_ori),
            fmt_opt(gs.q_rand)
        );
        let _ = writeln!(
            metrics_detail_csv,
            "{row},{threshold:.4},{},{},{},{},{:.6},{:.6},{},{},{},{},{},{},{},{},{}",
            gs.vertices,
            gs.edges,
            gs.components,
            gs.communities,
            gs.cc_ori,
            gs.cc_rand,
            fmt_opt(gs.apl_ori),
            fmt_opt(gs.apl_rand),
            fmt_opt(gs.apl_weighted),
            gs.apl_sources
                .map_or_else(|| "all".to_string(), |k| k.to_string()),
            fmt_opt(gs.q_ori),
            fmt_opt(gs.q_rand),
            gs.q_rand_method,
            gs.gn_removals,
            gs.gn_stopped_early
        );
        graph_summaries.push(gs);
    }

    let utf8 = |b: Vec<u8>| String::from_utf8(b).expect("utf-8");
    Ok(WindowReport {
        summary: WindowSummary {
            label: label.to_string(),
            days: 0,
            start: 0,
            slots: 0,
            sessions: 0,
            users: matrix.len(),
            excluded_users: 0,
            pairs,
            mean_score,
            fraction_at_least_0_9: 1.0 - below,
            histogram: hist.counts.clone(),
            cuts,
            graphs: graph_summaries,
        },
        histogram_csv: utf8(histogram_csv),
        histogram_lognorm_csv: utf8(histogram_lognorm_csv),
        cdf_csv: utf8(cdf_csv),
        dendrogram_nwk: format!("{}\n", dendrogram.to_newick()),
        cuts_csv,
        graphs,
        metrics_csv,
        metrics_detail_csv,
    })
}

/// Path-length sources: every vertex, or a systematic sample above the limit.
fn path_sources(
    n: usize,
    limit: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Option<usize>)> {
    let all: Vec<usize> = (0..n).collect();
    if n <= limit {
        return Ok((all, None));
    }
    Ok((systematic_sample(&all, limit, rng.random())?, Some(limit)))
}

fn mean_path(graph: &SimilarityGraph, mode: PathMode, sources: &[usize]) -> Result<Option<f64>> {
    match avg_path_length_from(graph, mode, sources) {
        Ok(s) => Ok(Some(s.mean)),
        Err(Error::UndefinedPath) => Ok(None),
        Err(e) => Err(e),
    }
}

fn graph_metrics(
    cfg: &PipelineConfig,
    graph: &SimilarityGraph,
    rng: &mut ChaCha8Rng,
) -> Result<(GraphSummary, Partition)> {
    let a = &cfg.analysis;
    let n = graph.vertex_count();
    let m = graph.edge_count();
    let adj = graph.adjacency();
    let components = community::components(&adj, &vec![true; m])
        .into_iter()
        .max()
        .map_or(0, |l| l + 1);

    let (partition, q_ori, removals, stopped) = if m == 0 {
        (Partition::singletons(n), None, 0, false)
    } else {
        let gn = girvan_newman_with(
            graph,
            &GnOptions {
                patience: a.gn_patience,
                freeze_cliques: true,
            },
        )?;
        (
            gn.best,
            Some(gn.best_modularity),
            gn.removed.len(),
            gn.stopped_early,
        )
    };

    let (sources, apl_sources) = path_sources(n, a.apl_source_limit, rng)?;
    let apl_ori = mean_path(graph, PathMode::Unweighted, &sources)?;
    let apl_weighted = mean_path(graph, PathMode::Weighted, &sources)?;

    let random = random_baseline(n, m, rng.random())?;
    let cc_rand = clustering_coefficient(&random, a.low_degree);
    let apl_rand = mean_path(&random, PathMode::Unweighted, &sources)?;
    let (q_rand, q_rand_method) = if m == 0 {
        (None, "none".to_string())
    } else if m <= a.q_rand_edge_limit {
        let gn = girvan_newman_with(
            &random,
            &GnOptions {
                patience: Some(a.q_rand_patience),
                freeze_cliques: true,
            },
        )?;
        (Some(gn.best_modularity), "girvan_newman".to_string())
    } else {
        // Same community sizes as the original's best partition, shuffled.
        let mut labels: Vec<usize> = partition.assignment().to_vec();
        labels.shuffle(rng);
        let q = community::modularity(&random, &Partition::from_labels(&labels))?;
        (Some(q), "size_matched_partition".to_string())
    };

    Ok((
        GraphSummary {
            threshold: graph.threshold(),
            vertices: n,
            edges: m,
            components,
            communities: partition.community_count(),
            gn_removals: removals,
            gn_stopped_early: stopped,
            cc_ori: clustering_coefficient(graph, a.low_degree),
            cc_rand,
            apl_ori,
            apl_rand,
            apl_weighted,
            apl_sources,
            q_ori,
            q_rand,
            q_rand_method,
        },
        partition,
    ))
}
