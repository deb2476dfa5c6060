//! Pipeline configuration as flat `key = value` text. Blank lines and lines
//! starting with `#` are ignored; later assignments override earlier ones.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::camera::{PoseDistributionConfig, PosePreset};
use crate::error::{Error, Result};
use crate::evaluation::{Aggregation, EvalConfig, PmConfig, DEFAULT_BORDER_TOLERANCE, DEFAULT_Q, DEFAULT_THRESHOLDS, DEFAULT_ZETA};
use crate::field::FieldTemplate;
use crate::geometry::ImageSize;
use crate::projection::SvConfig;
use crate::registration::{DescriptorConfig, RegistrationParams, RenderConfig};
use crate::shots::DEFAULT_TAU;
use crate::synth::{NoiseConfig, SynthConfig};
use crate::teams::TeamClusterConfig;
use crate::textfmt::fmt_num;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggregationKind {
    Mean,
    Median,
    BestQ,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub field_length: f64,
    pub field_width: f64,
    pub image_size: ImageSize,
    pub preset: PosePreset,
    /// Overrides the preset's pose count.
    pub db_size: Option<usize>,
    pub db_seed: u64,
    pub descriptor: DescriptorConfig,
    pub render_line_width: f32,
    pub registration: RegistrationParams,
    pub tau: f64,
    pub rho: f64,
    pub zeta: f64,
    pub border_tol: f64,
    pub aggregation: AggregationKind,
    pub q: f64,
    pub thresholds: Vec<f64>,
    pub teams: TeamClusterConfig,
    pub synth: SynthConfig,
    pub synth_seed: u64,
    pub synth_edges: bool,
    pub noise: NoiseConfig,
    pub noise_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            field_length: 105.0,
            field_width: 68.0,
            image_size: ImageSize::REFERENCE,
            preset: PosePreset::Wc14Base,
            db_size: None,
            db_seed: 0,
            descriptor: DescriptorConfig::default(),
            render_line_width: RenderConfig::default().line_width,
            registration: RegistrationParams::default(),
            tau: DEFAULT_TAU,
            rho: crate::projection::DEFAULT_RHO,
            zeta: DEFAULT_ZETA,
            border_tol: DEFAULT_BORDER_TOLERANCE,
            aggregation: AggregationKind::BestQ,
            q: DEFAULT_Q,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            teams: TeamClusterConfig::default(),
            synth: SynthConfig::default(),
            synth_seed: 0,
            synth_edges: false,
            noise: NoiseConfig::default(),
            noise_seed: 1,
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse '{value}'")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("{key}: expected a boolean, got '{value}'"))),
    }
}

/// Every recognised key, in the order [`PipelineConfig::to_text`] writes them.
pub const KEYS: &[&str] = &[
    "field.length",
    "field.width",
    "image.width",
    "image.height",
    "db.preset",
    "db.size",
    "db.seed",
    "db.line_width",
    "descriptor.sigma",
    "descriptor.grid_width",
    "descriptor.grid_height",
    "descriptor.input_width",
    "descriptor.input_height",
    "register.candidates",
    "register.refine",
    "register.accept_residual",
    "refine.max_iterations",
    "refine.convergence_threshold",
    "refine.truncation",
    "refine.damping",
    "refine.damping_retries",
    "refine.coarse_levels",
    "refine.line_width",
    "refine.stride",
    "refine.passes",
    "shots.tau",
    "sv.rho",
    "pm.zeta",
    "eval.border_tol",
    "eval.aggregation",
    "eval.q",
    "eval.thresholds",
    "teams.n_cls",
    "teams.eps_lo",
    "teams.eps_hi",
    "teams.eps_step",
    "teams.sample_frames",
    "teams.seed",
    "synth.frames",
    "synth.frame_rate",
    "synth.outfield_players",
    "synth.referee",
    "synth.referee_in_gt",
    "synth.v_max",
    "synth.seed",
    "synth.edges",
    "noise.anchor_sigma",
    "noise.dropout",
    "noise.false_positive_rate",
    "noise.color_sigma",
    "noise.homography_corruption_prob",
    "noise.homography_corruption_magnitude",
    "noise.seed",
];

impl PipelineConfig {
    /// Parses a config file on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        cfg.apply(text)?;
        Ok(cfg)
    }

    /// Applies the assignments in `text` to `self`.
    pub fn apply(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v.trim()).map_err(|e| Error::Parse(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| Error::InvalidArgument(format!("expected key=value, got '{pair}'")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let r = &mut self.registration.refinement;
        match key {
            "field.length" => self.field_length = num(key, value)?,
            "field.width" => self.field_width = num(key, value)?,
            "image.width" => self.image_size.width = num(key, value)?,
            "image.height" => self.image_size.height = num(key, value)?,
            "db.preset" => self.preset = PosePreset::parse(value)?,
            "db.size" => self.db_size = if value == "preset" { None } else { Some(num(key, value)?) },
            "db.seed" => self.db_seed = num(key, value)?,
            "db.line_width" => self.render_line_width = num(key, value)?,
            "descriptor.sigma" => self.descriptor.sigma = num(key, value)?,
            "descriptor.grid_width" => self.descriptor.grid_width = num(key, value)?,
            "descriptor.grid_height" => self.descriptor.grid_height = num(key, value)?,
            "descriptor.input_width" => self.descriptor.input_size.width = num(key, value)?,
            "descriptor.input_height" => self.descriptor.input_size.height = num(key, value)?,
            "register.candidates" => self.registration.candidates = num(key, value)?,
            "register.refine" => self.registration.refine = flag(key, value)?,
            "register.accept_residual" => self.registration.accept_residual = num(key, value)?,
            "refine.max_iterations" => r.max_iterations = num(key, value)?,
            "refine.convergence_threshold" => r.convergence_threshold = num(key, value)?,
            "refine.truncation" => r.truncation = num(key, value)?,
            "refine.damping" => r.damping = num(key, value)?,
            "refine.damping_retries" => r.damping_retries = num(key, value)?,
            "refine.coarse_levels" => r.coarse_levels = num(key, value)?,
            "refine.line_width" => r.line_width = num(key, value)?,
            "refine.stride" => r.stride = num(key, value)?,
            "refine.passes" => r.passes = num(key, value)?,
            "shots.tau" => self.tau = num(key, value)?,
            "sv.rho" => self.rho = if value == "inf" { f64::INFINITY } else { num(key, value)? },
            "pm.zeta" => self.zeta = num(key, value)?,
            "eval.border_tol" => self.border_tol = num(key, value)?,
            "eval.aggregation" => {
                self.aggregation = match value {
                    "mean" => AggregationKind::Mean,
                    "median" => AggregationKind::Median,
                    "best_q" => AggregationKind::BestQ,
                    _ => return Err(Error::InvalidArgument(format!("{key}: expected mean, median or best_q, got '{value}'"))),
                }
            }
            "eval.q" => self.q = num(key, value)?,
            "eval.thresholds" => {
                self.thresholds = value.split(',').map(|t| num(key, t.trim())).collect::<Result<Vec<f64>>>()?;
            }
            "teams.n_cls" => self.teams.n_cls = num(key, value)?,
            "teams.eps_lo" => self.teams.eps_lo = num(key, value)?,
            "teams.eps_hi" => self.teams.eps_hi = num(key, value)?,
            "teams.eps_step" => self.teams.eps_step = num(key, value)?,
            "teams.sample_frames" => self.teams.sample_frames = num(key, value)?,
            "teams.seed" => self.teams.seed = num(key, value)?,
            "synth.frames" => self.synth.frames = num(key, value)?,
            "synth.frame_rate" => self.synth.frame_rate = num(key, value)?,
            "synth.outfield_players" => self.synth.outfield_players = num(key, value)?,
            "synth.referee" => self.synth.referee = flag(key, value)?,
            "synth.referee_in_gt" => self.synth.referee_in_gt = flag(key, value)?,
            "synth.v_max" => self.synth.v_max = num(key, value)?,
            "synth.seed" => self.synth_seed = num(key, value)?,
            "synth.edges" => self.synth_edges = flag(key, value)?,
            "noise.anchor_sigma" => self.noise.anchor_sigma = num(key, value)?,
            "noise.dropout" => self.noise.dropout = num(key, value)?,
            "noise.false_positive_rate" => self.noise.false_positive_rate = num(key, value)?,
            "noise.color_sigma" => self.noise.color_sigma = num(key, value)?,
            "noise.homography_corruption_prob" => self.noise.homography_corruption_prob = num(key, value)?,
            "noise.homography_corruption_magnitude" => self.noise.homography_corruption_magnitude = num(key, value)?,
            "noise.seed" => self.noise_seed = num(key, value)?,
            _ => return Err(Error::InvalidArgument(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Full configuration in the file format; parses back to `self`.
    pub fn to_text(&self) -> String {
        let r = &self.registration.refinement;
        let f = |x: f64| fmt_num(x);
        let values: Vec<String> = vec![
            f(self.field_length),
            f(self.field_width),
            self.image_size.width.to_string(),
            self.image_size.height.to_string(),
            self.preset.name().into(),
            self.db_size.map_or_else(|| "preset".into(), |n| n.to_string()),
            self.db_seed.to_string(),
            f(self.render_line_width.into()),
            f(self.descriptor.sigma.into()),
            self.descriptor.grid_width.to_string(),
            self.descriptor.grid_height.to_string(),
            self.descriptor.input_size.width.to_string(),
            self.descriptor.input_size.height.to_string(),
            self.registration.candidates.to_string(),
            self.registration.refine.to_string(),
            f(self.registration.accept_residual),
            r.max_iterations.to_string(),
            f(r.convergence_threshold),
            f(r.truncation.into()),
            f(r.damping),
            r.damping_retries.to_string(),
            r.coarse_levels.to_string(),
            f(r.line_width),
            r.stride.to_string(),
            r.passes.to_string(),
            f(self.tau),
            f(self.rho),
            f(self.zeta),
            f(self.border_tol),
            match self.aggregation {
                AggregationKind::Mean => "mean",
                AggregationKind::Median => "median",
                AggregationKind::BestQ => "best_q",
            }
            .into(),
            f(self.q),
            self.thresholds.iter().map(|&t| f(t)).collect::<Vec<_>>().join(","),
            f(self.teams.n_cls),
            f(self.teams.eps_lo),
            f(self.teams.eps_hi),
            f(self.teams.eps_step),
            self.teams.sample_frames.to_string(),
            self.teams.seed.to_string(),
            self.synth.frames.to_string(),
            f(self.synth.frame_rate),
            self.synth.outfield_players.to_string(),
            self.synth.referee.to_string(),
            self.synth.referee_in_gt.to_string(),
            f(self.synth.v_max),
            self.synth_seed.to_string(),
            self.synth_edges.to_string(),
            f(self.noise.anchor_sigma),
            f(self.noise.dropout),
            f(self.noise.false_positive_rate),
            f(self.noise.color_sigma),
            f(self.noise.homography_corruption_prob),
            f(self.noise.homography_corruption_magnitude),
            self.noise_seed.to_string(),
        ];
        let mut s = String::new();
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        FieldTemplate::<f64>::standard(self.field_length, self.field_width)?;
        if self.image_size.pixel_count() == 0 {
            return Err(Error::InvalidArgument("image size must be positive".into()));
        }
        if self.db_size == Some(0) {
            return Err(Error::InvalidArgument("db.size must be positive".into()));
        }
        if !(self.render_line_width > 0.0) {
            return Err(Error::InvalidArgument("db.line_width must be positive".into()));
        }
        self.descriptor.validate()?;
        self.registration.refinement.validate()?;
        if self.registration.candidates == 0 {
            return Err(Error::InvalidArgument("register.candidates must be at least 1".into()));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::InvalidArgument("shots.tau must be non-negative".into()));
        }
        self.sv().validate()?;
        self.pm().validate()?;
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidArgument("eval.q must lie in (0, 1]".into()));
        }
        if self.thresholds.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidArgument("eval.thresholds must be non-negative".into()));
        }
        self.teams.validate()?;
        self.synth_config().validate()?;
        self.noise.validate()?;
        self.pose_distribution().validate()
    }

    pub fn field(&self) -> Result<FieldTemplate<f64>> {
        FieldTemplate::standard(self.field_length, self.field_width)
    }

    pub fn pose_distribution(&self) -> PoseDistributionConfig {
        let mut d = PoseDistributionConfig::preset(self.preset, self.db_seed);
        if let Some(n) = self.db_size {
            d.count = n;
        }
        d
    }

    pub fn render(&self) -> RenderConfig {
        RenderConfig {
            size: self.image_size,
            line_width: self.render_line_width,
            field_length: self.field_length,
            field_width: self.field_width,
        }
    }

    pub fn sv(&self) -> SvConfig {
        SvConfig { rho: self.rho }
    }

    pub fn pm(&self) -> PmConfig {
        PmConfig { zeta: self.zeta, border_tol: self.border_tol }
    }

    pub fn aggregation(&self) -> Aggregation {
        match self.aggregation {
            AggregationKind::Mean => Aggregation::Mean,
            AggregationKind::Median => Aggregation::Median,
            AggregationKind::BestQ => Aggregation::BestQ(self.q),
        }
    }

    pub fn eval(&self) -> EvalConfig {
        EvalConfig {
            sv: None,
            pm: None,
            team_constraint: false,
            aggregation: self.aggregation(),
            thresholds: self.thresholds.clone(),
            image_size: self.image_size,
            border_tol: self.border_tol,
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            field_length: self.field_length,
            field_width: self.field_width,
            image_size: self.image_size,
            ..self.synth.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = PipelineConfig::default();
        cfg.set("db.size", "100000").unwrap();
        cfg.set("sv.rho", "inf").unwrap();
        cfg.set("eval.thresholds", "1, 2.5").unwrap();
        cfg.set("register.refine", "false").unwrap();
        let text = cfg.to_text();
        assert_eq!(text.lines().count(), KEYS.len());
        assert_eq!(PipelineConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn later_assignments_win() {
        let cfg = PipelineConfig::parse("# comment\nsv.rho = 1\n\nsv.rho=2\n").unwrap();
        assert_eq!(cfg.rho, 2.0);
        let mut cfg = cfg;
        cfg.set_pair("sv.rho=5").unwrap();
        assert_eq!(cfg.sv().rho, 5.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PipelineConfig::parse("nonsense").is_err());
        assert!(PipelineConfig::parse("no.such.key = 1").is_err());
        assert!(PipelineConfig::parse("sv.rho = abc").is_err());
        assert!(PipelineConfig::parse("db.preset = wc15").is_err());
        assert!(PipelineConfig::parse("eval.q = 0").unwrap().validate().is_err());
        assert!(PipelineConfig::parse("noise.dropout = 1.5").unwrap().validate().is_err());
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn preset_size_override() {
        let cfg = PipelineConfig::parse("db.preset = uniform-focal-xyz").unwrap();
        assert_eq!(cfg.pose_distribution().count, 100_000);
        let cfg = PipelineConfig::parse("db.preset = wc14-base\ndb.size = 1234").unwrap();
        assert_eq!(cfg.pose_distribution().count, 1234);
    }
}
