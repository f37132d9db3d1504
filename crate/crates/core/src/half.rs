use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// A multiple of one half, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Half(pub i64);

impl Half {
    pub const ZERO: Half = Half(0);
    pub const HALF: Half = Half(1);

    pub fn from_twice(twice: i64) -> Self {
        Half(twice)
    }

    pub fn from_int(x: i64) -> Self {
        Half(2 * x)
    }

    /// `None` unless `x` is within 1e-9 of a multiple of one half.
    pub fn from_f64(x: f64) -> Option<Self> {
        let t = (2.0 * x).round();
        if (2.0 * x - t).abs() < 1e-9 {
            Some(Half(t as i64))
        } else {
            None
        }
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl Add for Half {
    type Output = Half;
    fn add(self, o: Half) -> Half {
        Half(self.0 + o.0)
    }
}

impl Sub for Half {
    type Output = Half;
    fn sub(self, o: Half) -> Half {
        Half(self.0 - o.0)
    }
}

impl Neg for Half {
    type Output = Half;
    fn neg(self) -> Half {
        Half(-self.0)
    }
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}
