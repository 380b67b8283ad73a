use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Link condition at one sample index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Los,
    Nlos,
    /// The power is strictly between the LoS and NLoS levels.
    Transition,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Los, Label::Nlos, Label::Transition];

    pub fn name(self) -> &'static str {
        match self {
            Label::Los => "LoS",
            Label::Nlos => "NLoS",
            Label::Transition => "Transition",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(alloc::format!("unknown label {s:?}")))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
