//! Spiral enumerations of ℤ² that grow centred rectangles one full side pair
//! at a time, and their lift to `{0..Lq−1} × ℤ²`.
//!
//! An enumeration is driven by a decision string over `H` (add the left and
//! right columns) and `V` (add the bottom and top rows), with an optional
//! cyclic tail: `"HV(HV)*"`, `"HHV(V)*"`, `"(H)*"`.
//!
//! The leading run of identical decisions is the initial single-axis segment
//! `(0,0), (1,0), (−1,0), (2,0), …`. Afterwards each decision emits the
//! negative side before the positive one, and walks a side in the order
//! `0, 1, −1, 2, −2, …` along it.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expansion {
    /// Grow `A`: columns `±(A+1)`.
    H,
    /// Grow `B`: rows `±(B+1)`.
    V,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decisions {
    pub prefix: Vec<Expansion>,
    pub cycle: Vec<Expansion>,
}

impl Decisions {
    pub fn new(prefix: Vec<Expansion>, cycle: Vec<Expansion>) -> Result<Self> {
        if prefix.is_empty() && cycle.is_empty() {
            return Err(GaborError::Config("decision sequence is empty".into()));
        }
        Ok(Decisions { prefix, cycle })
    }

    pub fn parse(src: &str) -> Result<Self> {
        let letter = |c: char| match c.to_ascii_uppercase() {
            'H' => Ok(Expansion::H),
            'V' => Ok(Expansion::V),
            _ => Err(GaborError::Parse(format!("unexpected `{c}` in decisions `{src}`"))),
        };
        let s: String = src.chars().filter(|c| !c.is_whitespace()).collect();
        let (head, tail) = match s.find('(') {
            Some(open) => {
                let rest = &s[open + 1..];
                let close = rest
                    .find(")*")
                    .ok_or_else(|| GaborError::Parse(format!("cycle in `{src}` must end with `)*`")))?;
                if close + 2 != rest.len() {
                    return Err(GaborError::Parse(format!("nothing may follow the cycle in `{src}`")));
                }
                (&s[..open], &rest[..close])
            }
            None => (&s[..], ""),
        };
        let prefix = head.chars().map(letter).collect::<Result<Vec<_>>>()?;
        let cycle = tail.chars().map(letter).collect::<Result<Vec<_>>>()?;
        if s.contains('(') && cycle.is_empty() {
            return Err(GaborError::Parse(format!("empty cycle in `{src}`")));
        }
        Decisions::new(prefix, cycle)
    }

    pub fn get(&self, i: usize) -> Option<Expansion> {
        if i < self.prefix.len() {
            Some(self.prefix[i])
        } else if self.cycle.is_empty() {
            None
        } else {
            Some(self.cycle[(i - self.prefix.len()) % self.cycle.len()])
        }
    }

    pub fn is_infinite(&self) -> bool {
        !self.cycle.is_empty()
    }
}

impl fmt::Display for Decisions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |v: &[Expansion]| v.iter().map(|e| if *e == Expansion::H { 'H' } else { 'V' }).collect::<String>();
        write!(f, "{}", s(&self.prefix))?;
        if !self.cycle.is_empty() {
            write!(f, "({})*", s(&self.cycle))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Decisions {
    type Err = GaborError;
    fn from_str(s: &str) -> Result<Self> {
        Decisions::parse(s)
    }
}

/// `0, 1, −1, 2, −2, …, b, −b`.
fn centred(b: i64) -> impl Iterator<Item = i64> {
    std::iter::once(0).chain((1..=b).flat_map(|t| [t, -t]))
}

/// Points added by one decision and the shell reached afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shell {
    pub points: Vec<(i64, i64)>,
    pub a: i64,
    pub b: i64,
    /// Number of points emitted once this shell is complete.
    pub completed_at: usize,
}

/// The enumeration σ as a stateful iterator over `(m, n)`.
#[derive(Debug, Clone)]
pub struct Enumeration {
    decisions: Decisions,
    step: usize,
    a: i64,
    b: i64,
    started: bool,
    initial: Option<Expansion>,
    emitted: usize,
    pending: VecDeque<(i64, i64)>,
}

pub fn lambda_enumeration(decisions: Decisions) -> Enumeration {
    let initial = decisions.get(0);
    Enumeration { decisions, step: 0, a: 0, b: 0, started: false, initial, emitted: 0, pending: VecDeque::new() }
}

impl Enumeration {
    pub fn decisions(&self) -> &Decisions {
        &self.decisions
    }

    /// Current half-widths `(A, B)` of the last completed shell.
    pub fn half_widths(&self) -> (i64, i64) {
        (self.a, self.b)
    }

    /// Advance by one whole shell.
    pub fn next_shell(&mut self) -> Option<Shell> {
        if !self.started {
            self.started = true;
            self.emitted = 1;
            return Some(Shell { points: vec![(0, 0)], a: 0, b: 0, completed_at: 1 });
        }
        let d = self.decisions.get(self.step)?;
        if Some(d) != self.initial {
            self.initial = None;
        }
        self.step += 1;
        let (a, b) = (self.a, self.b);
        let points: Vec<(i64, i64)> = match (d, self.initial.is_some()) {
            (Expansion::H, true) => vec![(a + 1, 0), (-(a + 1), 0)],
            (Expansion::V, true) => vec![(0, b + 1), (0, -(b + 1))],
            (Expansion::H, false) => {
                let left = centred(b).map(|n| (-(a + 1), n));
                let right = centred(b).map(|n| (a + 1, n));
                left.chain(right).collect()
            }
            (Expansion::V, false) => {
                let bottom = centred(a).map(|m| (m, -(b + 1)));
                let top = centred(a).map(|m| (m, b + 1));
                bottom.chain(top).collect()
            }
        };
        match d {
            Expansion::H => self.a += 1,
            Expansion::V => self.b += 1,
        }
        self.emitted += points.len();
        Some(Shell { points, a: self.a, b: self.b, completed_at: self.emitted })
    }
}

impl Iterator for Enumeration {
    type Item = (i64, i64);

    fn next(&mut self) -> Option<(i64, i64)> {
        if self.pending.is_empty() {
            let shell = self.next_shell()?;
            self.pending.extend(shell.points);
        }
        self.pending.pop_front()
    }
}

/// σ̃: each base position is repeated for flat indices `0..Lq`.
#[derive(Debug, Clone)]
pub struct LiftedEnumeration {
    base: Enumeration,
    lq: usize,
    current: Option<(i64, i64)>,
    flat: usize,
}

pub fn lift_enumeration(base: Enumeration, lq: usize) -> Result<LiftedEnumeration> {
    if lq == 0 {
        return Err(GaborError::Config("Lq must be at least 1".into()));
    }
    Ok(LiftedEnumeration { base, lq, current: None, flat: 0 })
}

impl LiftedEnumeration {
    pub fn lq(&self) -> usize {
        self.lq
    }

    pub fn base(&self) -> &Enumeration {
        &self.base
    }
}

impl Iterator for LiftedEnumeration {
    type Item = (usize, (i64, i64));

    fn next(&mut self) -> Option<Self::Item> {
        if self.current.is_none() || self.flat == self.lq {
            self.current = Some(self.base.next()?);
            self.flat = 0;
        }
        let out = (self.flat, self.current.unwrap());
        self.flat += 1;
        Some(out)
    }
}

/// The `J` with `σ({1..J}) = {−n1..n1} × {−n2..n2}`.
pub fn rectangle_prefix_indices(decisions: &Decisions, n1: i64, n2: i64) -> Result<usize> {
    let mut e = lambda_enumeration(decisions.clone());
    while let Some(shell) = e.next_shell() {
        if shell.a == n1 && shell.b == n2 {
            return Ok(shell.completed_at);
        }
        if shell.a > n1 || shell.b > n2 {
            break;
        }
    }
    Err(GaborError::NotReachable(format!(
        "decisions `{decisions}` never produce {{-{n1}..{n1}}} x {{-{n2}..{n2}}}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn take(s: &str, n: usize) -> Vec<(i64, i64)> {
        lambda_enumeration(Decisions::parse(s).unwrap()).take(n).collect()
    }

    #[test]
    fn initial_terms() {
        assert_eq!(take("(H)*", 5), vec![(0, 0), (1, 0), (-1, 0), (2, 0), (-2, 0)]);
        assert_eq!(take("(V)*", 3), vec![(0, 0), (0, 1), (0, -1)]);
    }

    #[test]
    fn alternating_covers_unit_square() {
        let first: HashSet<_> = take("(HV)*", 9).into_iter().collect();
        let square: HashSet<_> = (-1..=1).flat_map(|m| (-1..=1).map(move |n| (m, n))).collect();
        assert_eq!(first, square);
    }

    #[test]
    fn side_order() {
        // after H, V the next H adds the left column then the right one
        let v = take("HVH", 9 + 6);
        assert_eq!(&v[3..9], &[(0, -1), (1, -1), (-1, -1), (0, 1), (1, 1), (-1, 1)]);
        assert_eq!(&v[9..], &[(-2, 0), (-2, 1), (-2, -1), (2, 0), (2, 1), (2, -1)]);
    }

    #[test]
    fn finite_decisions_terminate() {
        assert_eq!(take("HV", 100).len(), 9);
    }

    #[test]
    fn parse_round_trip_and_errors() {
        for s in ["HV(HV)*", "(H)*", "HHV", "V(VH)*"] {
            assert_eq!(Decisions::parse(s).unwrap().to_string(), s);
        }
        assert!(Decisions::parse("").is_err());
        assert!(Decisions::parse("HX").is_err());
        assert!(Decisions::parse("H(V").is_err());
        assert!(Decisions::parse("H()*").is_err());
        assert!(Decisions::parse("(H)*V").is_err());
    }

    #[test]
    fn lift() {
        let base = lambda_enumeration(Decisions::parse("(H)*").unwrap());
        let l: Vec<_> = lift_enumeration(base.clone(), 2).unwrap().take(4).collect();
        assert_eq!(l, vec![(0, (0, 0)), (1, (0, 0)), (0, (1, 0)), (1, (1, 0))]);
        let one: Vec<_> = lift_enumeration(base.clone(), 1).unwrap().take(7).map(|(_, p)| p).collect();
        assert_eq!(one, base.take(7).collect::<Vec<_>>());
    }

    #[test]
    fn lifted_prefix_is_product() {
        let d = Decisions::parse("HV(VHH)*").unwrap();
        for lq in 1..4 {
            for j in 1..30 {
                let lifted: HashSet<_> = lift_enumeration(lambda_enumeration(d.clone()), lq).unwrap().take(j * lq).collect();
                let base: Vec<_> = lambda_enumeration(d.clone()).take(j).collect();
                let expect: HashSet<_> = (0..lq).flat_map(|f| base.iter().map(move |p| (f, *p))).collect();
                assert_eq!(lifted, expect);
            }
        }
    }

    #[test]
    fn prefix_indices() {
        assert_eq!(rectangle_prefix_indices(&Decisions::parse("(HV)*").unwrap(), 0, 0).unwrap(), 1);
        assert_eq!(rectangle_prefix_indices(&Decisions::parse("(H)*").unwrap(), 1, 0).unwrap(), 3);
        assert_eq!(rectangle_prefix_indices(&Decisions::parse("HHV(HV)*").unwrap(), 2, 1).unwrap(), 15);
        assert!(matches!(
            rectangle_prefix_indices(&Decisions::parse("(H)*").unwrap(), 1, 1),
            Err(GaborError::NotReachable(_))
        ));
        assert!(matches!(
            rectangle_prefix_indices(&Decisions::parse("HV").unwrap(), 3, 3),
            Err(GaborError::NotReachable(_))
        ));
    }

    #[test]
    fn shells_are_centred_rectangles() {
        for s in ["(HV)*", "HHHV(V)*", "V(HHV)*", "(H)*", "HVVHHHVV(HVV)*"] {
            let mut e = lambda_enumeration(Decisions::parse(s).unwrap());
            let mut seen = HashSet::new();
            for _ in 0..10 {
                let shell = e.next_shell().unwrap();
                for p in &shell.points {
                    assert!(seen.insert(*p), "{s}: {p:?} repeated");
                }
                let rect: HashSet<_> =
                    (-shell.a..=shell.a).flat_map(|m| (-shell.b..=shell.b).map(move |n| (m, n))).collect();
                assert_eq!(seen, rect, "{s}");
                assert_eq!(seen.len(), shell.completed_at);
            }
        }
    }
}
