//! Library side of the `glint` binary: subcommand implementations, the flat
//! pipeline config format and the end-to-end replication pipeline.

pub mod commands;
pub mod config;
pub mod pipeline;

use std::fmt;

use glint_core::analysis::AnalysisError;
use glint_core::envmap::EnvMapError;
use glint_core::imstats::StatsError;
use glint_core::optics::OpticsError;
use glint_core::raster::RasterError;
use glint_core::specrender::RenderError;
use glint_core::sphharm::ShError;
use glint_exprig::ExpError;
use thiserror::Error;

/// Failure class, which fixes the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Io,
    Numeric,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Validation => 2,
            ErrorClass::Io => 3,
            ErrorClass::Numeric => 4,
        }
    }
}

/// An error tagged with the stage that produced it.
#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct StageError {
    pub stage: &'static str,
    pub class: ErrorClass,
    pub message: String,
}

impl StageError {
    pub fn new(stage: &'static str, class: ErrorClass, message: impl fmt::Display) -> Self {
        Self {
            stage,
            class,
            message: message.to_string(),
        }
    }

    pub fn validation(stage: &'static str, message: impl fmt::Display) -> Self {
        Self::new(stage, ErrorClass::Validation, message)
    }

    pub fn io(stage: &'static str, message: impl fmt::Display) -> Self {
        Self::new(stage, ErrorClass::Io, message)
    }

    pub fn exit_code(&self) -> i32 {
        self.class.exit_code()
    }
}

pub trait Classify: fmt::Display {
    fn class(&self) -> ErrorClass;
}

/// `map_err` adapter: `.map_err(at("render"))`.
pub fn at<E: Classify>(stage: &'static str) -> impl FnOnce(E) -> StageError {
    move |e| StageError::new(stage, e.class(), &e)
}

impl Classify for std::io::Error {
    fn class(&self) -> ErrorClass {
        ErrorClass::Io
    }
}

impl Classify for serde_json::Error {
    fn class(&self) -> ErrorClass {
        if self.is_io() {
            ErrorClass::Io
        } else {
            ErrorClass::Validation
        }
    }
}

impl Classify for OpticsError {
    fn class(&self) -> ErrorClass {
        ErrorClass::Validation
    }
}

impl Classify for EnvMapError {
    fn class(&self) -> ErrorClass {
        match self {
            EnvMapError::Io(_) => ErrorClass::Io,
            EnvMapError::NonFinite(_) => ErrorClass::Numeric,
            _ => ErrorClass::Validation,
        }
    }
}

impl Classify for ShError {
    fn class(&self) -> ErrorClass {
        match self {
            ShError::Resolution { .. } | ShError::CoefficientCount { .. } => ErrorClass::Validation,
            _ => ErrorClass::Numeric,
        }
    }
}

impl Classify for RenderError {
    fn class(&self) -> ErrorClass {
        match self {
            RenderError::EnvMap(e) => e.class(),
            RenderError::Sh(e) => e.class(),
            RenderError::Exposure => ErrorClass::Numeric,
            _ => ErrorClass::Validation,
        }
    }
}

impl Classify for StatsError {
    fn class(&self) -> ErrorClass {
        match self {
            StatsError::EmptyMask => ErrorClass::Numeric,
            StatsError::MaskSize { .. } => ErrorClass::Validation,
        }
    }
}

impl Classify for RasterError {
    fn class(&self) -> ErrorClass {
        match self {
            RasterError::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}

impl Classify for AnalysisError {
    fn class(&self) -> ErrorClass {
        match self {
            AnalysisError::Io(_) => ErrorClass::Io,
            AnalysisError::UndefinedBias(_) | AnalysisError::DegenerateFit(_) => ErrorClass::Numeric,
            _ => ErrorClass::Validation,
        }
    }
}

impl Classify for ExpError {
    fn class(&self) -> ErrorClass {
        match self {
            ExpError::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}
