//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::odometry::{PipelineParams, StaticLabelRule};
use crate::sceneflow::{CameraIntrinsics, DepthFilter, LkParams};
use crate::segmentation::SegmentationParams;
use crate::tracking::TrackingParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where scene flow comes from during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlowSource {
    /// Tracked from the images.
    #[default]
    Computed,
    /// Read from `flow/NNNNNN.gridflow` in the dataset.
    File,
}

impl FromStr for FlowSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "computed" => Ok(Self::Computed),
            "file" => Ok(Self::File),
            other => Err(format!("unknown flow source '{other}' (computed|file)")),
        }
    }
}

impl std::fmt::Display for FlowSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Computed => "computed",
            Self::File => "file",
        })
    }
}

macro_rules! run_config {
    ($($(#[doc = $doc:literal])* $name:ident : $ty:ty = $default:expr;)*) => {
        /// Every tunable of a run. Field names double as config keys.
        #[derive(Debug, Clone, PartialEq)]
        pub struct RunConfig {
            $($(#[doc = $doc])* pub $name: $ty,)*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                Self { $($name: $default,)* }
            }
        }

        impl RunConfig {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($name)),*];

            /// Sets one parameter from its text form.
            pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
                match key {
                    $(stringify!($name) => {
                        self.$name = value
                            .parse::<$ty>()
                            .map_err(|e| ConfigError::Invalid(format!("{key} = {value}: {e}")))?;
                    })*
                    other => return Err(ConfigError::UnknownParameter(other.to_string())),
                }
                Ok(())
            }

            /// `(key, value)` pairs in declaration order.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$((stringify!($name), self.$name.to_string())),*]
            }
        }
    };
}

run_config! {
    /// Grid cell side in pixels.
    w_grid: usize = 16;
    h_max: usize = 20;
    /// Squared-error inlier threshold (m^2).
    th_inlier: f64 = 3e-5;
    alpha_max: f64 = 5.0;
    /// Points per minimal sample.
    m: usize = 7;
    /// Sampling neighbourhood radius in cells.
    r_search: usize = 2;
    lambda: f64 = 1e3;
    delta: f64 = 1e-2;
    dbscan_min_pts: usize = 1;
    dbscan_eps: f64 = 0.005;
    n_obj: usize = 15;
    s_stop: f64 = 0.1;
    s_saturation: f64 = 0.01;
    history_window: usize = 3;
    c_min: f64 = 0.1;
    static_rule: StaticLabelRule = StaticLabelRule::Persistent;
    fx: f64 = 525.0;
    fy: f64 = 525.0;
    cx: f64 = 319.5;
    cy: f64 = 239.5;
    width: usize = 640;
    height: usize = 480;
    /// Raw depth units per metre.
    depth_scale: f64 = 5000.0;
    min_depth: f64 = 0.3;
    max_depth: f64 = 10.0;
    max_hole_width: usize = 4;
    lk_levels: usize = 3;
    lk_window: usize = 21;
    lk_iterations: usize = 30;
    lk_epsilon: f64 = 0.01;
    flow_source: FlowSource = FlowSource::Computed;
    seed: u64 = 0;
    /// RPE interval in seconds.
    rpe_delta: f64 = 1.0;
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: n + 1,
                msg: format!("expected 'key = value', found '{line}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value).map_err(|e| match e {
                ConfigError::UnknownParameter(key) => ConfigError::UnknownKey { line: n + 1, key },
                other => ConfigError::Parse {
                    line: n + 1,
                    msg: other.to_string(),
                },
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ConfigError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            depth_scale: self.depth_scale,
            width: self.width,
            height: self.height,
        }
    }

    pub fn set_intrinsics(&mut self, k: &CameraIntrinsics) {
        self.fx = k.fx;
        self.fy = k.fy;
        self.cx = k.cx;
        self.cy = k.cy;
        self.depth_scale = k.depth_scale;
        self.width = k.width;
        self.height = k.height;
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        let positive_f = [
            ("th_inlier", self.th_inlier),
            ("alpha_max", self.alpha_max),
            ("lambda", self.lambda),
            ("delta", self.delta),
            ("dbscan_eps", self.dbscan_eps),
            ("s_stop", self.s_stop),
            ("s_saturation", self.s_saturation),
            ("c_min", self.c_min),
            ("depth_scale", self.depth_scale),
            ("min_depth", self.min_depth),
            ("lk_epsilon", self.lk_epsilon),
            ("rpe_delta", self.rpe_delta),
        ];
        for (k, v) in positive_f {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{k} must be positive"));
            }
        }
        let positive_u = [
            ("w_grid", self.w_grid),
            ("h_max", self.h_max),
            ("dbscan_min_pts", self.dbscan_min_pts),
            ("n_obj", self.n_obj),
            ("history_window", self.history_window),
            ("lk_levels", self.lk_levels),
            ("lk_window", self.lk_window),
            ("lk_iterations", self.lk_iterations),
        ];
        for (k, v) in positive_u {
            if v == 0 {
                return bad(&format!("{k} must be positive"));
            }
        }
        if self.m < 3 {
            return bad("m must be at least 3");
        }
        if self.max_depth <= self.min_depth {
            return bad("max_depth must exceed min_depth");
        }
        if self.lk_window % 2 == 0 {
            return bad("lk_window must be odd");
        }
        self.intrinsics().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.w_grid > self.width.min(self.height) {
            return bad("w_grid exceeds the image size");
        }
        Ok(())
    }

    pub fn pipeline_params(&self) -> PipelineParams {
        PipelineParams {
            intrinsics: self.intrinsics(),
            cell_size: self.w_grid,
            depth_filter: DepthFilter {
                max_hole_width: self.max_hole_width,
                min_depth: self.min_depth,
                max_depth: self.max_depth,
            },
            lk: LkParams {
                levels: self.lk_levels,
                window: self.lk_window,
                max_iterations: self.lk_iterations,
                epsilon: self.lk_epsilon,
                ..LkParams::default()
            },
            segmentation: SegmentationParams {
                h_max: self.h_max,
                th_inlier: self.th_inlier,
                m: self.m,
                r_search: self.r_search,
                lambda: self.lambda,
                delta: self.delta,
                s_stop: self.s_stop,
                s_saturation: self.s_saturation,
                dbscan_eps: self.dbscan_eps,
                dbscan_min_pts: self.dbscan_min_pts,
                ..SegmentationParams::default()
            },
            tracking: TrackingParams {
                alpha_max: self.alpha_max,
                n_obj: self.n_obj,
                history: self.history_window,
                c_min: self.c_min,
            },
            static_rule: self.static_rule,
            seed: self.seed,
        }
    }
}
