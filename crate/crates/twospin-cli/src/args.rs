//! Shared command-line value enums bridging to library types.

use clap::ValueEnum;
use twospin::experiment::{Mode, Stage};

use crate::config::NoiseVariant;

/// Trial mode selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Coded,
    Control,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Coded => Mode::Coded,
            ModeArg::Control => Mode::Control,
        }
    }
}

/// Noise-pass selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Ideal,
    Modeled,
}

impl From<NoiseArg> for NoiseVariant {
    fn from(n: NoiseArg) -> NoiseVariant {
        match n {
            NoiseArg::Ideal => NoiseVariant::Ideal,
            NoiseArg::Modeled => NoiseVariant::Modeled,
        }
    }
}

/// Pipeline-stage selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StageArg {
    Rho0,
    Rho1,
    Rho3,
    Rho4,
    Rho5,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Stage {
        match s {
            StageArg::Rho0 => Stage::Rho0,
            StageArg::Rho1 => Stage::Rho1,
            StageArg::Rho3 => Stage::Rho3,
            StageArg::Rho4 => Stage::Rho4,
            StageArg::Rho5 => Stage::Rho5,
        }
    }
}
