use std::fmt;
use std::str::FromStr;

use crate::error::KwsError;

/// Binary keyword class predicted by the model. `Yes` is the positive
/// (sigmoid output > 0.5) class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Class {
    No = 0,
    Yes = 1,
}

impl Class {
    pub const ALL: [Class; 2] = [Class::No, Class::Yes];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Class> {
        match i {
            0 => Some(Class::No),
            1 => Some(Class::Yes),
            _ => None,
        }
    }

    /// BCE target for this class.
    pub fn target(self) -> f32 {
        match self {
            Class::No => 0.0,
            Class::Yes => 1.0,
        }
    }

    pub fn from_probability(p: f64) -> Class {
        if p > 0.5 {
            Class::Yes
        } else {
            Class::No
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::No => "no",
            Class::Yes => "yes",
        })
    }
}

impl FromStr for Class {
    type Err = KwsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "yes" => Ok(Class::Yes),
            "no" => Ok(Class::No),
            other => Err(KwsError::Usage(format!("unknown class '{other}'"))),
        }
    }
}
