use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{InputSource, PipelineConfig};
use super::run::ReportBundle;
use crate::error::{Error, Result};
use crate::mobility::{
    assign_communities_sized, config_hash, generate_random_direction, generate_tvc,
    GeneratorMetadata,
};
use crate::similarity::cdf_at;
use crate::trace_io::{write_sessions, Delimiter, Trace};

/// Build `<parent>/<timestamp>-s<seed>` by filling a hidden sibling
/// directory and renaming it into place. A failed fill leaves nothing behind.
fn atomic_run_dir(
    parent: &Path,
    seed: u64,
    fill: impl FnOnce(&Path) -> Result<()>,
) -> Result<PathBuf> {
    fs::create_dir_all(parent)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let base = format!("{stamp}-s{seed}");
    let tmp = parent.join(format!(".tmp-{base}-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir(&tmp)?;
    if let Err(e) = fill(&tmp) {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e);
    }
    let mut target = parent.join(&base);
    let mut n = 1;
    while target.exists() {
        n += 1;
        target = parent.join(format!("{base}-{n}"));
    }
    if let Err(e) = fs::rename(&tmp, &target) {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e.into());
    }
    Ok(target)
}

fn put(dir: &Path, name: &str, text: &str) -> Result<()> {
    if !text.is_empty() {
        fs::write(dir.join(name), text)?;
    }
    Ok(())
}

/// Write a bundle into a fresh timestamped subdirectory of `out_dir` and
/// return its path.
///
/// Layout: `metadata.json` plus one directory per window holding
/// `histogram.csv`, `histogram_lognorm.csv`, `cdf.csv`, `dendrogram.nwk`,
/// `dendrogram_cuts.csv`, `edges_tX.XX.txt` and `partition_tX.XX.csv` per
/// graph threshold, `metrics.csv` and `metrics_detail.csv`.
pub fn write_reports(bundle: &ReportBundle, out_dir: &Path) -> Result<PathBuf> {
    atomic_run_dir(out_dir, bundle.metadata.seed, |dir| {
        let meta = serde_json::to_string_pretty(&bundle.metadata).map_err(std::io::Error::other)?;
        put(dir, "metadata.json", &(meta + "\n"))?;
        for w in &bundle.windows {
            let wd = dir.join(&w.summary.label);
            fs::create_dir(&wd)?;
            put(&wd, "histogram.csv", &w.histogram_csv)?;
            put(&wd, "histogram_lognorm.csv", &w.histogram_lognorm_csv)?;
            put(&wd, "cdf.csv", &w.cdf_csv)?;
            put(&wd, "dendrogram.nwk", &w.dendrogram_nwk)?;
            put(&wd, "dendrogram_cuts.csv", &w.cuts_csv)?;
            for g in &w.graphs {
                put(&wd, &format!("edges_{}.txt", g.label()), &g.edges_txt)?;
                put(
                    &wd,
                    &format!("partition_{}.csv", g.label()),
                    &g.partition_csv,
                )?;
            }
            put(&wd, "metrics_detail.csv", &w.metrics_detail_csv)?;
            put(&wd, "metrics.csv", &w.metrics_csv)?;
        }
        Ok(())
    })
}

/// Run the configured generator without analysis.
pub fn generate(cfg: &PipelineConfig) -> Result<(Trace, GeneratorMetadata)> {
    cfg.validate()?;
    let version = env!("CARGO_PKG_VERSION").to_string();
    let (trace, generator, hash, nodes) = match cfg.effective_input() {
        InputSource::Trace { .. } => {
            return Err(Error::Config("generate needs an rd or tvc input".into()));
        }
        InputSource::Rd { model } => (
            generate_random_direction(&model)?,
            "random_direction",
            config_hash(&model),
            model.node_count,
        ),
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
            (
                generate_tvc(&model, &a)?,
                "tvc",
                config_hash(&(&model, assignment, community_span)),
                model.node_count,
            )
        }
    };
    let meta = GeneratorMetadata {
        generator: generator.into(),
        generator_version: version,
        seed: cfg.seed,
        config_hash: hash,
        node_count: nodes,
        sessions: trace.len(),
    };
    Ok((trace, meta))
}

/// Write `sessions.tsv` and `metadata.json` into a fresh timestamped
/// subdirectory of `out_dir`.
pub fn write_generated(trace: &Trace, meta: &GeneratorMetadata, out_dir: &Path) -> Result<PathBuf> {
    atomic_run_dir(out_dir, meta.seed, |dir| {
        let mut buf = Vec::new();
        write_sessions(trace, &mut buf, Delimiter::Tab)?;
        fs::write(dir.join("sessions.tsv"), buf)?;
        let json = serde_json::to_string_pretty(meta).map_err(std::io::Error::other)?;
        put(dir, "metadata.json", &(json + "\n"))
    })
}

/// Side-by-side tables of two written bundles.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    /// `window,bin_low,bin_high,count_a,count_b,fraction_a,fraction_b`
    pub histogram_csv: String,
    /// `window,score,cum_fraction_a,cum_fraction_b` on a 0.05 grid.
    pub cdf_csv: String,
}

fn window_dirs(bundle: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(bundle)? {
        let entry = entry?;
        if entry.path().join("histogram.csv").is_file() {
            out.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    if out.is_empty() {
        return Err(Error::Consistency(format!(
            "{} holds no report windows",
            bundle.display()
        )));
    }
    Ok(out)
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(',')
                .take(3)
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Consistency(format!("{}: {e}", path.display())))
        })
        .collect()
}

fn window_days(label: &str) -> i64 {
    label
        .trim_start_matches('w')
        .trim_end_matches('d')
        .parse()
        .unwrap_or(i64::MAX)
}

/// Compare the windows present in both bundles, in window-length order.
pub fn compare(a: &Path, b: &Path) -> Result<Comparison> {
    let wa = window_dirs(a)?;
    let wb = window_dirs(b)?;
    let mut shared: Vec<String> = wa.into_iter().filter(|w| wb.contains(w)).collect();
    if shared.is_empty() {
        return Err(Error::Consistency("the bundles share no window".into()));
    }
    shared.sort_by_key(|w| (window_days(w), w.clone()));

    let mut histogram_csv =
        String::from("window,bin_low,bin_high,count_a,count_b,fraction_a,fraction_b\n");
    let mut cdf_csv = String::from("window,score,cum_fraction_a,cum_fraction_b\n");
    for w in &shared {
        let ha = read_rows(&a.join(w).join("histogram.csv"))?;
        let hb = read_rows(&b.join(w).join("histogram.csv"))?;
        if ha.len() != hb.len()
            || ha
                .iter()
                .zip(&hb)
                .any(|(x, y)| x.len() < 3 || y.len() < 3 || x[0] != y[0])
        {
            return Err(Error::Consistency(format!(
                "window {w}: histograms use different bins"
            )));
        }
        let total = |h: &[Vec<f64>]| h.iter().map(|r| r[2]).sum::<f64>().max(1.0);
        let (ta, tb) = (total(&ha), total(&hb));
        for (x, y) in ha.iter().zip(&hb) {
            let _ = writeln!(
                histogram_csv,
                "{w},{:.4},{:.4},{},{},{:.8},{:.8}",
                x[0],
                x[1],
                x[2],
                y[2],
                x[2] / ta,
                y[2] / tb
            );
        }
        let step = |rows: Vec<Vec<f64>>| -> Result<Vec<(f64, f64)>> {
            rows.into_iter()
                .map(|r| match r[..] {
                    [s, f, ..] => Ok((s, f)),
                    _ => Err(Error::Consistency(format!("window {w}: malformed cdf row"))),
                })
                .collect()
        };
        let ca = step(read_rows(&a.join(w).join("cdf.csv"))?)?;
        let cb = step(read_rows(&b.join(w).join("cdf.csv"))?)?;
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            let _ = writeln!(
                cdf_csv,
                "{w},{x:.2},{:.8},{:.8}",
                cdf_at(&ca, x),
                cdf_at(&cb, x)
            );
        }
    }
    Ok(Comparison {
        histogram_csv,
        cdf_csv,
    })
}
