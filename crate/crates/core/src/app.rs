//! Command implementations behind the `widecal` binary and the C interface.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::board::BoardSpec;
use crate::config::RunConfig;
use crate::detector::{Detection, Provenance};
use crate::error::{Error, Result};
use crate::io::{self, ResultFile};
use crate::pipeline::{self, PipelineOutput};
use crate::raster::GrayImage;
use crate::refine::Strategy;
use crate::report::{self, BinStat};
use crate::synth;

pub const RESULT_FILE: &str = "result.json";
pub const COVERAGE_FILE: &str = "coverage.csv";
pub const TRACE_FILE: &str = "trace.json";
pub const DETECTIONS_FILE: &str = "detections.jsonl";
pub const GROUND_TRUTH_FILE: &str = "gt.jsonl";

/// Caps the global worker pool at `WIDECAL_THREADS` when that variable is set.
pub fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var("WIDECAL_THREADS") else {
        return Ok(());
    };
    let n: usize = value.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Error::config(format!("WIDECAL_THREADS must be a positive integer, got {value:?}")))?;
    // A pool that is already running keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub iterations: Option<usize>,
    pub strategy: Option<Strategy>,
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(n) = self.iterations {
            cfg.pipeline.iterations = n;
        }
        if let Some(s) = self.strategy {
            cfg.refine.strategy = s;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        cfg.validate()
    }
}

/// Frames of the configured dataset, rendered or read from disk.
pub fn load_frames(cfg: &RunConfig) -> Result<Vec<GrayImage>> {
    match (&cfg.synthetic, &cfg.dataset_dir) {
        (Some(s), _) => {
            let scene = synth::make_dataset(&cfg.target, &s.model, s.n_frames, s.coverage, s.render)?;
            Ok(synth::render_dataset(&cfg.target, &scene)?.into_iter().map(|(img, _)| img).collect())
        }
        (None, Some(dir)) => io::load_image_dir(dir),
        (None, None) => Err(Error::config("one of dataset_dir or synthetic is required")),
    }
}

/// Runs the pipeline on the configured dataset without writing anything.
pub fn calibrate(cfg: &RunConfig) -> Result<PipelineOutput> {
    let frames = load_frames(cfg)?;
    let (w, h) = (frames[0].width() as u32, frames[0].height() as u32);
    let starts = cfg.model.starts(w, h)?;
    pipeline::run_pipeline(&frames, &cfg.target, &starts, &cfg.settings())
}

/// Writes `result.json`, `coverage.csv`, `trace.json` and `detections.jsonl` into `dir`.
pub fn write_calibration(dir: &Path, board: &BoardSpec, out: &PipelineOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    io::save_json(&dir.join(RESULT_FILE), &ResultFile { target: board.clone(), result: out.result.clone() })?;
    std::fs::write(dir.join(COVERAGE_FILE), report::coverage_csv(&out.result.per_bin_stats))?;
    io::save_json(&dir.join(TRACE_FILE), &out.trace)?;
    io::save_detections(&dir.join(DETECTIONS_FILE), board, &out.detections)
}

/// `calibrate`: loads a config, runs the pipeline and writes its artifacts. Returns the
/// output directory.
pub fn cmd_calibrate(config: &Path, overrides: &Overrides) -> Result<PathBuf> {
    let mut cfg = RunConfig::load(config)?;
    overrides.apply(&mut cfg)?;
    let out = calibrate(&cfg)?;
    write_calibration(&cfg.output_dir, &cfg.target, &out)?;
    Ok(cfg.output_dir)
}

/// Writes every rendered frame as `frame_NNNN.pgm` plus `gt.jsonl` into `dir`.
pub fn render(cfg: &RunConfig, dir: &Path) -> Result<usize> {
    let s = cfg.synthetic.as_ref().ok_or_else(|| Error::config("render needs a synthetic block"))?;
    let scene = synth::make_dataset(&cfg.target, &s.model, s.n_frames, s.coverage, s.render)?;
    let frames = synth::render_dataset(&cfg.target, &scene)?;
    std::fs::create_dir_all(dir)?;
    let mut gt = Vec::new();
    for (f, (img, truth)) in frames.iter().enumerate() {
        img.save(&dir.join(format!("frame_{f:04}.pgm")))?;
        gt.extend(truth.iter().map(|&(point, pixel)| Detection { frame: f, point, pixel, provenance: Provenance::Oracle, refined: false }));
    }
    io::save_detections(&dir.join(GROUND_TRUTH_FILE), &cfg.target, &gt)?;
    Ok(frames.len())
}

/// `render`: writes the configured synthetic dataset into its output directory.
pub fn cmd_render(config: &Path) -> Result<PathBuf> {
    let cfg = RunConfig::load(config)?;
    render(&cfg, &cfg.output_dir)?;
    Ok(cfg.output_dir)
}

/// Statistics re-derived from a result and a detections file.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportSummary {
    pub rms_px: f64,
    pub n_features: usize,
    pub n_skipped: usize,
    pub stats: Vec<BinStat>,
}

impl fmt::Display for ReportSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "features: {} (skipped {})", self.n_features, self.n_skipped)?;
        writeln!(f, "rms reprojection error: {:.6} px", self.rms_px)?;
        writeln!(f, "{:>12} {:>8} {:>10} {:>10}", "polar [deg]", "count", "coverage", "rms [px]")?;
        for s in &self.stats {
            writeln!(f, "{:>5}-{:<6} {:>8} {:>10.4} {:>10.4}", s.bin_lo_deg, s.bin_hi_deg, s.count, s.normalized, s.rms_px)?;
        }
        Ok(())
    }
}

/// Reprojection statistics of `detections` under a stored result. Features in frames
/// without a pose and those listed as outliers are skipped, which reproduces the set the
/// solver reported on.
pub fn report(result: &ResultFile, detections: &[Detection]) -> ReportSummary {
    let r = &result.result;
    let board = &result.target;
    let is_outlier = |d: &Detection| {
        let tag = board.tag_id(d.point.tag_row, d.point.tag_col);
        r.outliers.iter().any(|o| o.frame == d.frame && o.tag == tag && o.corner == d.point.corner)
    };
    let used: Vec<Detection> = detections
        .iter()
        .filter(|d| matches!(r.poses.get(d.frame), Some(Some(_))) && !is_outlier(d))
        .copied()
        .collect();
    let mut sq = 0.0;
    for d in &used {
        let pose = r.poses[d.frame].as_ref().expect("filtered on pose");
        if let Ok(u) = r.model.project(&pose.transform(&board.position(d.point))) {
            sq += (u - d.pixel).norm_squared();
        }
    }
    let n = used.len();
    ReportSummary {
        rms_px: if n > 0 { (sq / n as f64).sqrt() } else { 0.0 },
        n_features: n,
        n_skipped: detections.len() - n,
        stats: report::reprojection_report(&r.model, &r.poses, board, &used),
    }
}

/// `report`: re-derives the coverage table and RMS from artifacts, writing
/// `coverage.csv` into `out_dir`.
pub fn cmd_report(result_path: &Path, detections_path: &Path, out_dir: &Path) -> Result<ReportSummary> {
    let result: ResultFile = io::load_json(result_path)?;
    let detections = io::load_detections(detections_path, &result.target)?;
    let summary = report(&result, &detections);
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join(COVERAGE_FILE), report::coverage_csv(&summary.stats))?;
    Ok(summary)
}
