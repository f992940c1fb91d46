use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// Dichotomic result of a polarization measurement; `+1` is the "o" channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// Position in `[+1, −1]` arrays.
    pub fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }
}

/// Three-valued outcome: a detected sign or no detection.
///
/// The derived ordering (`+1 < −1 < 0`) is the canonical state order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
    #[serde(rename = "0")]
    Undetected,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Plus, Outcome::Minus, Outcome::Undetected];

    pub fn is_detected(self) -> bool {
        self != Outcome::Undetected
    }

    pub fn sign(self) -> Option<Sign> {
        match self {
            Outcome::Plus => Some(Sign::Plus),
            Outcome::Minus => Some(Sign::Minus),
            Outcome::Undetected => None,
        }
    }

    pub fn flip(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
            Outcome::Undetected => Outcome::Undetected,
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
            Outcome::Undetected => 0,
        }
    }
}

impl From<Sign> for Outcome {
    fn from(s: Sign) -> Self {
        match s {
            Sign::Plus => Outcome::Plus,
            Sign::Minus => Outcome::Minus,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
            Outcome::Undetected => "0",
        })
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+1" | "1" | "+" => Ok(Outcome::Plus),
            "-1" | "-" => Ok(Outcome::Minus),
            "0" | "+0" | "-0" => Ok(Outcome::Undetected),
            other => Err(format!("bad instruction {other:?}")),
        }
    }
}

/// Converts a 1-based setting label into an array index.
pub(crate) fn slot(i: usize) -> usize {
    assert!(i == 1 || i == 2, "setting index must be 1 or 2, got {i}");
    i - 1
}
