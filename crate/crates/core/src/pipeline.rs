//! File-level pipeline commands. Each reads its inputs from disk, runs one
//! stage and writes its output in the text formats of [`crate::io`].

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use crate::camera::sample_poses;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::evaluation::{combine_reports, match_report, standard_rows, MetricsReport};
use crate::field::{render_edge_image, EdgeImage};
use crate::geometry::Homography;
use crate::io;
use crate::projection::{extract_frame_positions, FrameEstimate};
use crate::registration::{build_feature_db, register_frame, BuildStats, Descriptor, FeatureDb};
use crate::shots::{classify_segment, ShotClassification, ShotLabel, ShotSegment};
use crate::synth::{corrupt_detections, corrupt_homographies, generate_match};
use crate::teams::assign_teams;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Edge image file name for `frame`.
pub fn edge_file_name(frame: u64) -> String {
    format!("frame_{frame:06}.pgm")
}

fn frame_of_edge_file(name: &str) -> Option<u64> {
    name.strip_prefix("frame_")?.strip_suffix(".pgm")?.parse().ok()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthSummary {
    pub frames: usize,
    pub detections: usize,
    pub corrupted_homographies: usize,
}

/// Writes a synthetic dataset to `out`: `gt.csv`, `detections.jsonl`,
/// `colors.jsonl`, `homographies.csv` (with injected corruption),
/// `homographies_gt.csv`, `poses.csv`, `shots.csv`, and with `synth.edges`
/// the rendered edge images under `edges/`.
pub fn cmd_synth(cfg: &PipelineConfig, out: &Path) -> Result<SynthSummary> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let m = generate_match(&cfg.synth_config(), cfg.synth_seed)?;
    let dets = corrupt_detections(&m, &cfg.noise, cfg.noise_seed)?;
    let (hs, corrupted) = corrupt_homographies(&m, &cfg.noise, cfg.noise_seed)?;

    write_text(&out.join("gt.csv"), &io::format_gt_csv(&m.ground_truth()))?;
    write_text(&out.join("detections.jsonl"), &io::format_detections_jsonl(dets.iter().flat_map(|f| &f.detections)))?;
    let mut colors = String::new();
    for f in &dets {
        for (i, c) in f.colors.iter().enumerate() {
            colors.push_str(&io::format_color(f.frame, i, c));
            colors.push('\n');
        }
    }
    write_text(&out.join("colors.jsonl"), &colors)?;
    write_text(&out.join("homographies.csv"), &io::format_homography_csv(hs.iter().enumerate().map(|(i, h)| (i as u64, h))))?;
    write_text(
        &out.join("homographies_gt.csv"),
        &io::format_homography_csv(m.homographies.iter().enumerate().map(|(i, h)| (i as u64, h))),
    )?;
    write_text(&out.join("poses.csv"), &io::format_pose_csv(&m.poses))?;
    write_text(&out.join("shots.csv"), &io::format_shot_csv(&[(0, m.frame_count() as u64 - 1)]))?;

    if cfg.synth_edges {
        let dir = out.join("edges");
        fs::create_dir_all(&dir)?;
        let field = cfg.field()?;
        m.homographies.par_iter().enumerate().try_for_each(|(i, h)| -> Result<()> {
            let img = render_edge_image(&field, h, cfg.image_size, cfg.render_line_width as f64)?;
            let mut w = BufWriter::new(fs::File::create(dir.join(edge_file_name(i as u64)))?);
            img.write_pgm(&mut w)?;
            w.flush()?;
            Ok(())
        })?;
    }
    Ok(SynthSummary {
        frames: m.frame_count(),
        detections: dets.iter().map(|f| f.detections.len()).sum(),
        corrupted_homographies: corrupted.iter().filter(|&&c| c).count(),
    })
}

/// Samples the configured pose distribution and writes the feature database.
pub fn cmd_builddb(cfg: &PipelineConfig, out: &Path) -> Result<BuildStats> {
    cfg.validate()?;
    let poses = sample_poses(&cfg.pose_distribution())?;
    let (db, stats) = build_feature_db(&poses, &cfg.field()?, cfg.render(), cfg.descriptor)?;
    let mut w = BufWriter::new(fs::File::create(out)?);
    db.write(&mut w)?;
    w.flush()?;
    Ok(stats)
}

pub fn load_db(path: &Path) -> Result<FeatureDb> {
    FeatureDb::read(BufReader::new(fs::File::open(path)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegisterSummary {
    pub frames: usize,
    pub registered: usize,
}

/// Registers every `frame_NNNNNN.pgm` in `edges_dir` and writes the
/// homography CSV. Frames that cannot be registered get no row.
pub fn cmd_register(cfg: &PipelineConfig, db_path: &Path, edges_dir: &Path, out: &Path) -> Result<RegisterSummary> {
    cfg.validate()?;
    let db = load_db(db_path)?;
    let op = Descriptor::new(db.descriptor)?;
    let field = cfg.field()?;
    let mut files: Vec<(u64, PathBuf)> = Vec::new();
    for entry in fs::read_dir(edges_dir)? {
        let path = entry?.path();
        if let Some(frame) = path.file_name().and_then(|n| n.to_str()).and_then(frame_of_edge_file) {
            files.push((frame, path));
        }
    }
    files.sort();
    let results: Vec<(u64, Option<Homography<f64>>)> = files
        .par_iter()
        .map(|(frame, path)| -> Result<_> {
            let img = in_file(path, EdgeImage::read_pgm(BufReader::new(fs::File::open(path)?)))?;
            match register_frame(&db, &op, &img, &field, &cfg.registration) {
                Ok(r) => {
                    info!("frame {frame}: neighbour {} residual {:.3} {:?}", r.neighbor.index, r.residual, r.status);
                    Ok((*frame, Some(r.homography)))
                }
                Err(e) => {
                    warn!("frame {frame}: not registered: {e}");
                    Ok((*frame, None))
                }
            }
        })
        .collect::<Result<_>>()?;
    let registered = results.iter().filter(|r| r.1.is_some()).count();
    write_text(out, &io::format_homography_csv(results.iter().filter_map(|(f, h)| h.as_ref().map(|h| (*f, h)))))?;
    Ok(RegisterSummary { frames: results.len(), registered })
}

pub fn load_homographies(path: &Path) -> Result<BTreeMap<u64, Homography<f64>>> {
    in_file(path, io::parse_homography_csv(&read_text(path)?))
}

/// Classifies each shot of the shot list from the frame homographies.
pub fn cmd_shots(cfg: &PipelineConfig, homographies: &Path, shots: &Path, out: &Path) -> Result<Vec<ShotClassification>> {
    cfg.validate()?;
    let hs = load_homographies(homographies)?;
    let list = in_file(shots, io::parse_shot_csv(&read_text(shots)?))?;
    let rows = list
        .iter()
        .map(|&(start, end)| {
            let seg = ShotSegment::new(start, end, (start..=end).map(|f| hs.get(&f).copied()).collect())?;
            Ok(classify_segment(&seg, cfg.tau))
        })
        .collect::<Result<Vec<_>>>()?;
    write_text(out, &io::format_classification_csv(&rows))?;
    Ok(rows)
}

/// Projects detections to field positions with self-verification flags.
/// With a classification file only frames of main-camera shots are kept.
pub fn cmd_extract(
    cfg: &PipelineConfig,
    detections: &Path,
    homographies: &Path,
    classification: Option<&Path>,
    out: &Path,
) -> Result<Vec<FrameEstimate>> {
    cfg.validate()?;
    let dets = in_file(detections, io::parse_detections_jsonl(&read_text(detections)?))?;
    for (frame, ds) in &dets {
        for d in ds {
            d.validate(Some(cfg.image_size)).map_err(|e| Error::Parse(format!("{}: frame {frame}: {e}", detections.display())))?;
        }
    }
    let hs = load_homographies(homographies)?;
    let main: Option<Vec<(u64, u64)>> = match classification {
        Some(p) => Some(
            in_file(p, io::parse_classification_csv(&read_text(p)?))?
                .into_iter()
                .filter(|c| c.label == ShotLabel::MainCamera)
                .map(|c| (c.start, c.end))
                .collect(),
        ),
        None => None,
    };
    let in_main = |f: u64| main.as_ref().is_none_or(|m| m.iter().any(|&(a, b)| a <= f && f <= b));
    let frames: BTreeSet<u64> = dets.keys().chain(hs.keys()).copied().filter(|&f| in_main(f)).collect();
    let field = cfg.field()?;
    let estimates = frames
        .iter()
        .map(|&f| {
            let ds = dets.get(&f).map_or(&[][..], |v| v.as_slice());
            extract_frame_positions(f, ds, hs.get(&f), cfg.image_size, &field, &cfg.sv())
        })
        .collect::<Result<Vec<_>>>()?;
    write_text(out, &io::format_positions_jsonl(&estimates))?;
    Ok(estimates)
}

pub fn load_positions(path: &Path, homographies: Option<&BTreeMap<u64, Homography<f64>>>) -> Result<Vec<FrameEstimate>> {
    in_file(path, io::parse_positions_jsonl(&read_text(path)?, homographies))
}

/// Labels the players of a positions file with teams clustered from their
/// colour features. Players without a colour record stay unlabelled.
pub fn cmd_teams(cfg: &PipelineConfig, positions: &Path, colors: &Path, out: &Path) -> Result<Vec<FrameEstimate>> {
    cfg.validate()?;
    let mut estimates = load_positions(positions, None)?;
    let cols = in_file(colors, io::parse_colors_jsonl(&read_text(colors)?))?;
    let mut keys = Vec::new();
    let mut frames = Vec::new();
    let mut features = Vec::new();
    for (ei, e) in estimates.iter().enumerate() {
        for (pi, p) in e.players.iter().enumerate() {
            if let Some(c) = cols.get(&(e.frame, p.detection_id)) {
                keys.push((ei, pi));
                frames.push(e.frame);
                features.push(c.embed());
            }
        }
    }
    let assignment = assign_teams(&frames, &features, &cfg.teams)?;
    info!("team clustering: epsilon {} min_pts {}", assignment.epsilon, assignment.min_pts);
    for ((ei, pi), team) in keys.into_iter().zip(assignment.labels) {
        estimates[ei].players[pi].team = Some(team);
    }
    write_text(out, &io::format_positions_jsonl(&estimates))?;
    Ok(estimates)
}

/// Inputs of one evaluated match.
#[derive(Clone, Debug)]
pub struct MatchFiles {
    pub positions: PathBuf,
    pub gt: PathBuf,
    /// Estimated homographies; frames without one are matched against all
    /// ground-truth players and fail self-verification.
    pub homographies: Option<PathBuf>,
}

/// Evaluates every match under the six standard filter rows and writes the
/// report CSV. Rows average the per-match values.
pub fn cmd_eval(cfg: &PipelineConfig, matches: &[MatchFiles], out: &Path) -> Result<Vec<MetricsReport>> {
    cfg.validate()?;
    if matches.is_empty() {
        return Err(Error::InvalidArgument("no match to evaluate".into()));
    }
    let field = cfg.field()?;
    let mut loaded = Vec::new();
    for m in matches {
        let hs = m.homographies.as_deref().map(load_homographies).transpose()?;
        let est = load_positions(&m.positions, hs.as_ref())?;
        let gt = in_file(&m.gt, io::parse_gt_csv(&read_text(&m.gt)?))?;
        loaded.push((est, gt));
    }
    let rows = standard_rows(&cfg.eval(), cfg.sv(), cfg.pm())
        .iter()
        .map(|row| {
            let per_match = loaded.iter().map(|(est, gt)| match_report(est, gt, &field, row)).collect::<Result<Vec<_>>>()?;
            Ok(if per_match.len() == 1 { per_match.into_iter().next().expect("one report") } else { combine_reports(&per_match).expect("non-empty") })
        })
        .collect::<Result<Vec<_>>>()?;
    write_text(out, &io::format_report_csv(&rows, &cfg.eval().aggregation.name()))?;
    Ok(rows)
}
