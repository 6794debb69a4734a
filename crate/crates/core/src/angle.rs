//! Exact dynamics on rational circle angles.
//!
//! Every angle of a computation lives on the lattice `(1/M)Z / Z`, where `M`
//! is the context modulus `lcm(den(theta), m+n)`. The degree-n angle map
//! multiplies residues by `n` and never leaves the lattice, so all orbit
//! computations are exact integer arithmetic.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `residue / modulus` of the circle `R/Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Angle {
    residue: u64,
    modulus: u64,
}

impl Angle {
    pub fn new(residue: u64, modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::InvalidContext("angle modulus must be positive".into()));
        }
        if residue >= modulus {
            return Err(Error::InvalidContext(format!(
                "residue {residue} out of range for modulus {modulus}"
            )));
        }
        Ok(Angle { residue, modulus })
    }

    /// Places the rational `value` (taken mod 1) on the lattice with the given modulus.
    pub fn from_ratio(value: Ratio<u64>, modulus: u64) -> Result<Self> {
        let (p, q) = (*value.numer(), *value.denom());
        if !modulus.is_multiple_of(q) {
            return Err(Error::InvalidContext(format!(
                "{p}/{q} is not on the lattice 1/{modulus}"
            )));
        }
        Angle::new((p % q) * (modulus / q), modulus)
    }

    pub fn residue(&self) -> u64 {
        self.residue
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// The angle as a fraction in lowest terms.
    pub fn to_ratio(&self) -> Ratio<u64> {
        Ratio::new(self.residue, self.modulus)
    }

    /// Adds `steps / modulus`, wrapping around the circle.
    pub fn shift(&self, steps: i64) -> Angle {
        let m = self.modulus as i64;
        let r = (self.residue as i64 + steps).rem_euclid(m);
        Angle { residue: r as u64, modulus: self.modulus }
    }

    pub fn as_f64(&self) -> f64 {
        self.residue as f64 / self.modulus as f64
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.to_ratio();
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"p/q"` (or a bare integer) into a non-negative rational.
pub fn parse_ratio(s: &str) -> Result<Ratio<u64>> {
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p = u64::from_str(p).map_err(|e| Error::Parse(format!("bad numerator in {s:?}: {e}")))?;
    let q = u64::from_str(q).map_err(|e| Error::Parse(format!("bad denominator in {s:?}: {e}")))?;
    if q == 0 {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Ratio::new(p, q))
}

/// The degree-n angle map `[a] -> [n a]`.
pub fn phi_n(a: Angle, n: u64) -> Angle {
    let m = a.modulus as u128;
    let r = (a.residue as u128 * n as u128) % m;
    Angle { residue: r as u64, modulus: a.modulus }
}

/// Circle distance `min(|a-b|, 1-|a-b|)` as an exact fraction.
pub fn circle_distance(a: Angle, b: Angle) -> Result<Ratio<u64>> {
    if a.modulus != b.modulus {
        return Err(Error::ModulusMismatch(a.modulus, b.modulus));
    }
    let d = a.residue.abs_diff(b.residue);
    Ok(Ratio::new(d.min(a.modulus - d), a.modulus))
}

/// Parameters `(n, m, theta)` of the angle model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngleContext {
    n: u64,
    m: u64,
    theta: Angle,
    /// Set when the supplied theta had to be reduced into `[0, 1/(m+n))`.
    canonicalized_from: Option<Ratio<u64>>,
}

impl AngleContext {
    pub fn new(n: u64, m: u64, theta: Ratio<u64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidContext(format!("n must be at least 2, got {n}")));
        }
        if m < 1 {
            return Err(Error::InvalidContext(format!("m must be at least 1, got {m}")));
        }
        let cells = n + m;
        // theta mod 1/(m+n)
        let scaled = theta * Ratio::from_integer(cells);
        let frac = scaled - Ratio::from_integer(scaled.to_integer());
        let reduced = frac / Ratio::from_integer(cells);
        let canonicalized_from = if reduced != theta {
            log::warn!(
                "theta {}/{} reduced to {}/{} (must lie in [0, 1/{cells}))",
                theta.numer(),
                theta.denom(),
                reduced.numer(),
                reduced.denom()
            );
            Some(theta)
        } else {
            None
        };
        let modulus = reduced.denom().lcm(&cells);
        let theta = Angle::from_ratio(reduced, modulus)?;
        Ok(AngleContext { n, m, theta, canonicalized_from })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn cells(&self) -> usize {
        (self.n + self.m) as usize
    }

    pub fn theta(&self) -> Angle {
        self.theta
    }

    pub fn modulus(&self) -> u64 {
        self.theta.modulus
    }

    pub fn canonicalized_from(&self) -> Option<Ratio<u64>> {
        self.canonicalized_from
    }

    /// Lattice steps per cell arc, `M / (m+n)`.
    pub fn cell_step(&self) -> u64 {
        self.modulus() / (self.n + self.m)
    }

    pub fn angle(&self, value: Ratio<u64>) -> Result<Angle> {
        Angle::from_ratio(value, self.modulus())
    }

    pub fn parse_angle(&self, s: &str) -> Result<Angle> {
        self.angle(parse_ratio(s)?)
    }

    pub fn phi(&self, a: Angle) -> Angle {
        phi_n(a, self.n)
    }

    /// Rotation by `l / (m+n)`.
    pub fn rotate(&self, a: Angle, l: i64) -> Angle {
        a.shift(l * self.cell_step() as i64)
    }

    /// `c_i = theta + i/(m+n)` for `i` taken mod `m+n`.
    pub fn critical(&self, i: i64) -> Angle {
        let i = i.rem_euclid(self.cells() as i64);
        self.rotate(self.theta, i)
    }

    /// `c_1, ..., c_{m+n}`; the last entry is theta itself.
    pub fn critical_angles(&self) -> Vec<Angle> {
        (1..=self.cells() as i64).map(|i| self.critical(i)).collect()
    }

    pub fn is_critical(&self, a: Angle) -> bool {
        a.modulus == self.modulus()
            && a.residue % self.cell_step() == self.theta.residue % self.cell_step()
    }

    /// The forward orbit of the critical images `Phi_n(c_i)`.
    pub fn post_critical_set(&self) -> BTreeSet<Angle> {
        let mut set = BTreeSet::new();
        let mut frontier: Vec<Angle> =
            self.critical_angles().into_iter().map(|c| self.phi(c)).collect();
        while let Some(a) = frontier.pop() {
            if set.insert(a) {
                frontier.push(self.phi(a));
            }
        }
        set
    }

    /// Checks the angle-level conditions: no critical angle is ever mapped
    /// back onto a critical angle.
    pub fn validate(&self) -> MsValidity {
        let crit = self.critical_angles();
        let mut violations = Vec::new();
        for (l, &c) in crit.iter().enumerate() {
            let mut seen = BTreeSet::new();
            let mut a = self.phi(c);
            let mut step = 1usize;
            while seen.insert(a) {
                if let Some(hit) = crit.iter().position(|&x| x == a) {
                    violations.push(OrbitViolation {
                        critical: l + 1,
                        step,
                        hits: hit + 1,
                        angle: a.to_string(),
                    });
                    break;
                }
                a = self.phi(a);
                step += 1;
            }
        }
        MsValidity { valid: violations.is_empty(), violations }
    }

    /// Index `i` of the open arc `(c_{i-1}, c_i)` containing `a`.
    pub fn cell_index(&self, a: Angle) -> Result<usize> {
        if a.modulus != self.modulus() {
            return Err(Error::ModulusMismatch(a.modulus, self.modulus()));
        }
        let m = self.modulus();
        let offset = (a.residue + m - self.theta.residue) % m;
        let step = self.cell_step();
        if offset.is_multiple_of(step) {
            return Err(Error::CriticalAngle(a.to_string()));
        }
        Ok((offset / step) as usize + 1)
    }

    /// The permutation `kappa` (1-based, `kappa[i-1] = kappa(i)`) with
    /// `Phi_n(c_{kappa(i)})` inside cell `i`.
    pub fn kappa(&self) -> Result<Vec<usize>> {
        let cells = self.cells();
        let mut kappa = vec![0usize; cells];
        for j in 1..=cells {
            let image = self.phi(self.critical(j as i64));
            let i = self
                .cell_index(image)
                .map_err(|_| Error::NotAPermutation(format!("Phi_n(c_{j}) is critical")))?;
            if kappa[i - 1] != 0 {
                return Err(Error::NotAPermutation(format!(
                    "cell {i} receives both c_{} and c_{j}",
                    kappa[i - 1]
                )));
            }
            kappa[i - 1] = j;
        }
        Ok(kappa)
    }

    pub fn to_json(&self) -> ContextJson {
        let t = self.theta.to_ratio();
        ContextJson { n: self.n, m: self.m, theta: format!("{}/{}", t.numer(), t.denom()) }
    }
}

impl fmt::Display for AngleContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, m={}, theta={})", self.n, self.m, self.theta)
    }
}

/// Wire format of a context: `{"n":2,"m":1,"theta":"1/12"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextJson {
    pub n: u64,
    pub m: u64,
    pub theta: String,
}

impl TryFrom<&ContextJson> for AngleContext {
    type Error = Error;

    fn try_from(json: &ContextJson) -> Result<Self> {
        AngleContext::new(json.n, json.m, parse_ratio(&json.theta)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitViolation {
    /// 1-based index of the critical angle whose orbit fails.
    pub critical: usize,
    /// Number of `Phi_n` steps until the hit.
    pub step: usize,
    /// 1-based index of the critical angle that is hit.
    pub hits: usize,
    pub angle: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsValidity {
    pub valid: bool,
    pub violations: Vec<OrbitViolation>,
}
