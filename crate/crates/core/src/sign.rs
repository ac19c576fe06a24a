use std::fmt;
use std::ops::{Mul, Neg};

use serde::{Deserialize, Serialize};

/// A classical truth value in the `{-1, +1}` encoding: `-1` is false, `+1` is true.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
#[repr(i8)]
pub enum Sign {
    Neg = -1,
    Pos = 1,
}

impl Sign {
    /// Sign of a real value. Zero maps to `Neg`; under continuous noise that event has
    /// probability zero.
    #[inline]
    pub fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    #[inline]
    pub fn from_bool(b: bool) -> Sign {
        if b {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    #[inline]
    pub fn is_pos(self) -> bool {
        self == Sign::Pos
    }

    #[inline]
    pub fn as_i8(self) -> i8 {
        self as i8
    }

    #[inline]
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Pos => 1.0,
            Sign::Neg => -1.0,
        }
    }

    /// `(-1)^n`.
    #[inline]
    pub fn parity(n: usize) -> Sign {
        if n % 2 == 0 {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    /// `x` if positive, `-x` otherwise.
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        // branch-free: this sits in the innermost loops
        x * f64::from(self as i8)
    }
}

impl Neg for Sign {
    type Output = Sign;
    #[inline]
    fn neg(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }
}

impl Mul for Sign {
    type Output = Sign;
    #[inline]
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        s as i8
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> Result<Sign, String> {
        match v {
            1 => Ok(Sign::Pos),
            -1 => Ok(Sign::Neg),
            other => Err(format!("truth value must be -1 or +1, got {other}")),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Pos => f.write_str("+1"),
            Sign::Neg => f.write_str("-1"),
        }
    }
}

/// Sign of a real value, zero mapping to `-1`.
#[inline]
pub fn sign(x: f64) -> Sign {
    Sign::of(x)
}
