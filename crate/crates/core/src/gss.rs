//! Golden-section maximization of a unimodal scalar function.
//!
//! [`GssState`] is the bracket as a resumable state machine: the caller
//! evaluates each probe and feeds the score back, which lets a search survive
//! process restarts when every score is persisted. [`maximize`] and
//! [`try_maximize`] drive the state machine to completion in-process.
//!
//! Each step keeps one of the two interior scores and evaluates a single new
//! probe, shrinking the bracket by `PHI1 ≈ 0.618`. With `max_iter`
//! iterations the function is evaluated `max_iter + 2` times and the
//! returned point lies within `PHI1^(max_iter+1)·(b − a)` of the maximizer.
//! Ties between the two probe scores move the left end of the bracket.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `(√5 − 1) / 2`
pub const PHI1: f64 = 0.618_033_988_749_894_9;
/// `(3 − √5) / 2 = 1 − PHI1`
pub const PHI2: f64 = 0.381_966_011_250_105_1;

/// Iterations giving a six-evaluation search.
pub const DEFAULT_MAX_ITER: u32 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GssError {
    #[error("empty search interval [{a}, {b}]")]
    EmptyInterval { a: f64, b: f64 },
    #[error("score for probe {0:?} has not been supplied")]
    MissingScore(Probe),
    #[error("no probe is awaiting a score")]
    NothingPending,
}

/// Which interior point a score belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Probe {
    /// The left interior point `c`.
    Lower,
    /// The right interior point `d`.
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GssState {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub y_c: Option<f64>,
    pub y_d: Option<f64>,
    pub h: f64,
    pub iteration: u32,
}

impl GssState {
    /// Opens the bracket `[a, b]` and returns the two initial probes
    /// `[c, d]`, both awaiting scores.
    pub fn init(a: f64, b: f64) -> Result<(Self, [f64; 2]), GssError> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(GssError::EmptyInterval { a, b });
        }
        let h = b - a;
        let c = a + PHI2 * h;
        let d = a + PHI1 * h;
        let state = Self {
            a,
            b,
            c,
            d,
            y_c: None,
            y_d: None,
            h,
            iteration: 0,
        };
        Ok((state, [c, d]))
    }

    /// The probe still waiting for a score, lower first.
    pub fn pending(&self) -> Option<(Probe, f64)> {
        match (self.y_c, self.y_d) {
            (None, _) => Some((Probe::Lower, self.c)),
            (_, None) => Some((Probe::Upper, self.d)),
            _ => None,
        }
    }

    /// Records the score of the pending probe (the lower one first when both
    /// are open).
    pub fn supply(&mut self, score: f64) -> Result<(), GssError> {
        match self.pending() {
            Some((Probe::Lower, _)) => self.y_c = Some(score),
            Some((Probe::Upper, _)) => self.y_d = Some(score),
            None => return Err(GssError::NothingPending),
        }
        Ok(())
    }

    fn scores(&self) -> Result<(f64, f64), GssError> {
        match (self.y_c, self.y_d) {
            (Some(yc), Some(yd)) => Ok((yc, yd)),
            (None, _) => Err(GssError::MissingScore(Probe::Lower)),
            (_, None) => Err(GssError::MissingScore(Probe::Upper)),
        }
    }

    /// Shrinks the bracket around the better probe and returns the new probe
    /// whose score must be supplied before the next step.
    pub fn step(&mut self) -> Result<f64, GssError> {
        let (y_c, y_d) = self.scores()?;
        self.h *= PHI1;
        self.iteration += 1;
        if y_c > y_d {
            self.b = self.d;
            self.d = self.c;
            self.y_d = Some(y_c);
            self.c = self.a + PHI2 * self.h;
            self.y_c = None;
            Ok(self.c)
        } else {
            self.a = self.c;
            self.c = self.d;
            self.y_c = Some(y_d);
            self.d = self.a + PHI1 * self.h;
            self.y_d = None;
            Ok(self.d)
        }
    }

    /// The better interior point; `d` on ties.
    pub fn result(&self) -> Result<f64, GssError> {
        self.best().map(|(x, _)| x)
    }

    /// The better interior point and its score.
    pub fn best(&self) -> Result<(f64, f64), GssError> {
        let (y_c, y_d) = self.scores()?;
        Ok(if y_c > y_d { (self.c, y_c) } else { (self.d, y_d) })
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }
}

/// Outcome of a completed search.
#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub score: f64,
    /// Every `(x, f(x))` pair in evaluation order.
    pub evaluations: Vec<(f64, f64)>,
}

/// Runs `max_iter` iterations on `[a, b]` with a fallible objective.
pub fn try_maximize<F, E>(mut f: F, a: f64, b: f64, max_iter: u32) -> Result<Maximum, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<GssError>,
{
    let (mut state, probes) = GssState::init(a, b)?;
    let mut evaluations = Vec::with_capacity(max_iter as usize + 2);
    for x in probes {
        let y = f(x)?;
        evaluations.push((x, y));
        state.supply(y)?;
    }
    for _ in 0..max_iter {
        let x = state.step()?;
        let y = f(x)?;
        evaluations.push((x, y));
        state.supply(y)?;
    }
    let (x, score) = state.best()?;
    Ok(Maximum { x, score, evaluations })
}

pub fn maximize<F>(mut f: F, a: f64, b: f64, max_iter: u32) -> Result<Maximum, GssError>
where
    F: FnMut(f64) -> f64,
{
    try_maximize(|x| Ok::<_, GssError>(f(x)), a, b, max_iter)
}
