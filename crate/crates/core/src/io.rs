//! Text file formats exchanged between pipeline stages.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::camera::CameraPose;
use crate::error::{Error, Result};
use crate::evaluation::{GroundTruthFrame, GtPlayer, MetricsReport};
use crate::geometry::{Homography, Point2};
use crate::projection::{Detection, FrameEstimate, PlayerEstimate};
use crate::shots::{ShotClassification, ShotLabel};
use crate::teams::{Hsv, Team};
use crate::textfmt::fmt_num;

/// Reader over `text` whose header row must equal `header`.
fn csv_reader<'a>(text: &'a str, header: &[&str]) -> Result<csv::Reader<&'a [u8]>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let found = r.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse(format!("expected header '{}', found '{}'", header.join(","), found.iter().collect::<Vec<_>>().join(","))));
    }
    Ok(r)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::Parse(format!("line {line}: missing column {}", i + 1)))?;
    raw.parse().map_err(|_| Error::Parse(format!("line {line}: cannot parse '{raw}' in column {}", i + 1)))
}

/// Pose CSV: header `x,y,z,focal,pan,tilt`, one pose per row.
pub fn parse_pose_csv(text: &str) -> Result<Vec<CameraPose<f64>>> {
    let mut out = Vec::new();
    for (i, rec) in csv_reader(text, &["x", "y", "z", "focal", "pan", "tilt"])?.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let line = i + 2;
        if rec.len() != 6 {
            return Err(Error::Parse(format!("line {line}: expected 6 columns, found {}", rec.len())));
        }
        let v: Vec<f64> = (0..6).map(|c| field(&rec, c, line)).collect::<Result<_>>()?;
        let pose = CameraPose::new(v[0], v[1], v[2], v[3], v[4], v[5]);
        pose.validate().map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        out.push(pose);
    }
    Ok(out)
}

pub fn format_pose_csv(poses: &[CameraPose<f64>]) -> String {
    let mut s = String::from("x,y,z,focal,pan,tilt\n");
    for p in poses {
        s.push_str(&p.to_array().map(fmt_num).join(","));
        s.push('\n');
    }
    s
}

/// Homography CSV: header `frame,h11,...,h33`, canonical row-major entries.
/// Frames without a row have no homography.
pub fn parse_homography_csv(text: &str) -> Result<BTreeMap<u64, Homography<f64>>> {
    let mut out = BTreeMap::new();
    for (i, rec) in csv_reader(text, &["frame", "h11", "h12", "h13", "h21", "h22", "h23", "h31", "h32", "h33"])?.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let line = i + 2;
        if rec.len() != 10 {
            return Err(Error::Parse(format!("line {line}: expected 10 columns, found {}", rec.len())));
        }
        let frame: u64 = field(&rec, 0, line)?;
        let mut v = [0.0; 9];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = field(&rec, k + 1, line)?;
        }
        let h = Homography::from_row_major(v).map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        if out.insert(frame, h).is_some() {
            return Err(Error::Parse(format!("line {line}: duplicate frame {frame}")));
        }
    }
    Ok(out)
}

pub fn format_homography_csv<'a>(rows: impl IntoIterator<Item = (u64, &'a Homography<f64>)>) -> String {
    let mut s = String::from("frame,h11,h12,h13,h21,h22,h23,h31,h32,h33\n");
    for (frame, h) in rows {
        let _ = writeln!(s, "{frame},{}", h.to_row_major().map(fmt_num).join(","));
    }
    s
}

fn json_lines<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1))))
        .collect()
}

fn opt_num(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map_or_else(|| "null".to_string(), fmt_num)
}

/// Detections JSON lines `{"frame", "x1", "y1", "x2", "y2", "confidence"}`,
/// grouped by frame in file order.
pub fn parse_detections_jsonl(text: &str) -> Result<BTreeMap<u64, Vec<Detection>>> {
    let mut out: BTreeMap<u64, Vec<Detection>> = BTreeMap::new();
    for (i, d) in json_lines::<Detection>(text)?.into_iter().enumerate() {
        d.validate(None).map_err(|e| Error::Parse(format!("detection {}: {e}", i + 1)))?;
        out.entry(d.frame).or_default().push(d);
    }
    Ok(out)
}

pub fn format_detection(d: &Detection) -> String {
    format!(
        "{{\"frame\":{},\"x1\":{},\"y1\":{},\"x2\":{},\"y2\":{},\"confidence\":{}}}",
        d.frame,
        fmt_num(d.x1),
        fmt_num(d.y1),
        fmt_num(d.x2),
        fmt_num(d.y2),
        opt_num(d.confidence)
    )
}

pub fn format_detections_jsonl<'a>(dets: impl IntoIterator<Item = &'a Detection>) -> String {
    dets.into_iter().map(|d| format_detection(d) + "\n").collect()
}

/// Colour JSON line `{"frame", "detection_id", "h", "s", "v"}`.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
pub struct ColorRecord {
    pub frame: u64,
    pub detection_id: usize,
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

impl ColorRecord {
    pub fn hsv(&self) -> Hsv {
        Hsv { h: self.h, s: self.s, v: self.v }
    }
}

pub fn parse_colors_jsonl(text: &str) -> Result<BTreeMap<(u64, usize), Hsv>> {
    let mut out = BTreeMap::new();
    for (i, c) in json_lines::<ColorRecord>(text)?.into_iter().enumerate() {
        c.hsv().validate().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        if out.insert((c.frame, c.detection_id), c.hsv()).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate colour for frame {} detection {}", i + 1, c.frame, c.detection_id)));
        }
    }
    Ok(out)
}

pub fn format_color(frame: u64, detection_id: usize, c: &Hsv) -> String {
    format!(
        "{{\"frame\":{frame},\"detection_id\":{detection_id},\"h\":{},\"s\":{},\"v\":{}}}",
        fmt_num(c.h),
        fmt_num(c.s),
        fmt_num(c.v)
    )
}

#[derive(Deserialize)]
struct PlayerLine {
    x: Option<f64>,
    y: Option<f64>,
    #[serde(default)]
    team: Option<Team>,
}

#[derive(Deserialize)]
struct PositionLine {
    frame: u64,
    sv: bool,
    players: Vec<PlayerLine>,
}

/// Positions JSON lines `{"frame", "sv", "players": [{"x", "y", "team"}]}`.
/// Players are listed in detection order; unprojectable players have null
/// coordinates and unassigned ones a null team. Homographies are attached
/// from `homographies` when given.
pub fn parse_positions_jsonl(text: &str, homographies: Option<&BTreeMap<u64, Homography<f64>>>) -> Result<Vec<FrameEstimate>> {
    json_lines::<PositionLine>(text)?
        .into_iter()
        .map(|l| {
            let players = l
                .players
                .into_iter()
                .enumerate()
                .map(|(i, p)| PlayerEstimate {
                    position: match (p.x, p.y) {
                        (Some(x), Some(y)) => Some(Point2::new(x, y)),
                        _ => None,
                    },
                    detection_id: i,
                    team: p.team,
                })
                .collect();
            Ok(FrameEstimate {
                frame: l.frame,
                homography: homographies.and_then(|m| m.get(&l.frame).copied()),
                players,
                kept: l.sv,
            })
        })
        .collect()
}

pub fn format_positions_line(e: &FrameEstimate) -> String {
    let players: Vec<String> = e
        .players
        .iter()
        .map(|p| {
            let team = p.team.map_or_else(|| "null".to_string(), |t| format!("\"{}\"", t.as_str()));
            format!(
                "{{\"x\":{},\"y\":{},\"team\":{team}}}",
                opt_num(p.position.map(|q| q.x)),
                opt_num(p.position.map(|q| q.y))
            )
        })
        .collect();
    format!("{{\"frame\":{},\"sv\":{},\"players\":[{}]}}", e.frame, e.kept, players.join(","))
}

pub fn format_positions_jsonl(frames: &[FrameEstimate]) -> String {
    frames.iter().map(|e| format_positions_line(e) + "\n").collect()
}

/// Ground truth CSV: header `frame,player_id,team,x,y`.
pub fn parse_gt_csv(text: &str) -> Result<BTreeMap<u64, GroundTruthFrame>> {
    let mut out: BTreeMap<u64, GroundTruthFrame> = BTreeMap::new();
    for (i, rec) in csv_reader(text, &["frame", "player_id", "team", "x", "y"])?.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let line = i + 2;
        if rec.len() != 5 {
            return Err(Error::Parse(format!("line {line}: expected 5 columns, found {}", rec.len())));
        }
        let frame: u64 = field(&rec, 0, line)?;
        let player_id: u32 = field(&rec, 1, line)?;
        let team = Team::parse(&rec[2]).map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        let position = Point2::new(field(&rec, 3, line)?, field(&rec, 4, line)?);
        if !position.is_finite() {
            return Err(Error::Parse(format!("line {line}: non-finite position")));
        }
        out.entry(frame)
            .or_insert_with(|| GroundTruthFrame { frame, players: Vec::new() })
            .players
            .push(GtPlayer { player_id, team, position });
    }
    Ok(out)
}

pub fn format_gt_csv(frames: &[GroundTruthFrame]) -> String {
    let mut s = String::from("frame,player_id,team,x,y\n");
    for f in frames {
        for p in &f.players {
            let _ = writeln!(s, "{},{},{},{},{}", f.frame, p.player_id, p.team.as_str(), fmt_num(p.position.x), fmt_num(p.position.y));
        }
    }
    s
}

/// Shot list CSV: header `start,end`, inclusive frame ranges.
pub fn parse_shot_csv(text: &str) -> Result<Vec<(u64, u64)>> {
    let mut out = Vec::new();
    for (i, rec) in csv_reader(text, &["start", "end"])?.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let line = i + 2;
        if rec.len() < 2 {
            return Err(Error::Parse(format!("line {line}: expected start,end")));
        }
        let (start, end): (u64, u64) = (field(&rec, 0, line)?, field(&rec, 1, line)?);
        if start > end {
            return Err(Error::Parse(format!("line {line}: start {start} after end {end}")));
        }
        out.push((start, end));
    }
    Ok(out)
}

pub fn format_shot_csv(shots: &[(u64, u64)]) -> String {
    let mut s = String::from("start,end\n");
    for (a, b) in shots {
        let _ = writeln!(s, "{a},{b}");
    }
    s
}

/// Classification CSV `start,end,score,label`; an unscorable shot has an
/// empty score.
pub fn format_classification_csv(rows: &[ShotClassification]) -> String {
    let mut s = String::from("start,end,score,label\n");
    for r in rows {
        let score = r.score.map(fmt_num).unwrap_or_default();
        let _ = writeln!(s, "{},{},{score},{}", r.start, r.end, r.label.as_str());
    }
    s
}

pub fn parse_classification_csv(text: &str) -> Result<Vec<ShotClassification>> {
    let mut out = Vec::new();
    for (i, rec) in csv_reader(text, &["start", "end", "score", "label"])?.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let line = i + 2;
        if rec.len() != 4 {
            return Err(Error::Parse(format!("line {line}: expected 4 columns, found {}", rec.len())));
        }
        let score = if rec[2].is_empty() { None } else { Some(field(&rec, 2, line)?) };
        out.push(ShotClassification {
            start: field(&rec, 0, line)?,
            end: field(&rec, 1, line)?,
            score,
            label: ShotLabel::parse(&rec[3]).map_err(|e| Error::Parse(format!("line {line}: {e}")))?,
        });
    }
    Ok(out)
}

fn filter_name(r: &MetricsReport) -> &'static str {
    match (r.sv, r.pm) {
        (false, false) => "none",
        (true, false) => "sv",
        (false, true) => "pm",
        (true, true) => "sv+pm",
    }
}

/// Report CSV, one row per filter configuration:
/// `filter,team,aggregation,frames,kept,ratio,d_mean,d_median,acc_<l>...`.
pub fn format_report_csv(reports: &[MetricsReport], aggregation: &str) -> String {
    let mut s = String::from("filter,team,aggregation,frames,kept,ratio,d_mean,d_median");
    if let Some(r) = reports.first() {
        for (l, _) in &r.acc {
            let _ = write!(s, ",acc_{}", fmt_num(*l));
        }
    }
    s.push('\n');
    for r in reports {
        let _ = write!(
            s,
            "{},{},{aggregation},{},{},{},{},{}",
            filter_name(r),
            u8::from(r.team_constraint),
            r.total_frames,
            r.kept_frames,
            fmt_num(r.ratio),
            fmt_num(r.d_mean),
            fmt_num(r.d_median)
        );
        for (_, a) in &r.acc {
            let _ = write!(s, ",{}", fmt_num(*a));
        }
        s.push('\n');
    }
    s
}

/// Aligned plain-text rendering of the report rows.
pub fn format_report_table(reports: &[MetricsReport]) -> String {
    let mut s = format!("{:<6} {:>4} {:>6} {:>6} {:>11} {:>11} {:>11}", "filter", "team", "frames", "kept", "ratio", "d_mean", "d_med");
    if let Some(r) = reports.first() {
        for (l, _) in &r.acc {
            let _ = write!(s, " {:>11}", format!("acc@{}", fmt_num(*l)));
        }
    }
    s.push('\n');
    for r in reports {
        let _ = write!(
            s,
            "{:<6} {:>4} {:>6} {:>6} {:>11} {:>11} {:>11}",
            filter_name(r),
            if r.team_constraint { "yes" } else { "no" },
            r.total_frames,
            r.kept_frames,
            fmt_num(r.ratio),
            fmt_num(r.d_mean),
            fmt_num(r.d_median)
        );
        for (_, a) in &r.acc {
            let _ = write!(s, " {:>11}", fmt_num(*a));
        }
        s.push('\n');
    }
    s
}
