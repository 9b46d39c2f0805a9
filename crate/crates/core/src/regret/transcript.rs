use std::io::{Read, Write};

use super::RegretError;
use crate::numeric::fmt_g17;

/// Per-round record of a played game.
///
/// Round index `i` is 0-based here (round `i + 1` of the horizon). The CSV
/// form numbers rounds and actions from 1 so that `I_t = 2` refers to column
/// `u_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    horizon: usize,
    arms: usize,
    recommended: Vec<usize>,
    played: Vec<usize>,
    rewards: Vec<f64>,
    observed: Vec<f64>,
}

impl Transcript {
    pub fn new(horizon: usize, arms: usize) -> Self {
        Self {
            horizon,
            arms,
            recommended: Vec::with_capacity(horizon),
            played: Vec::with_capacity(horizon),
            rewards: Vec::with_capacity(horizon * arms),
            observed: Vec::with_capacity(horizon),
        }
    }

    /// Builds a compliant transcript from recommendations and reward rows.
    pub fn compliant(arms: usize, recommended: &[usize], rewards: &[Vec<f64>]) -> Result<Self, RegretError> {
        let mut tr = Self::new(recommended.len(), arms);
        for (&a, u) in recommended.iter().zip(rewards) {
            tr.push_round(a, a, u)?;
        }
        tr.ensure_complete()?;
        Ok(tr)
    }

    pub fn push_round(&mut self, recommended: usize, played: usize, rewards: &[f64]) -> Result<(), RegretError> {
        if self.recommended.len() >= self.horizon {
            return Err(RegretError::HorizonExceeded(self.horizon));
        }
        for a in [recommended, played] {
            if a >= self.arms {
                return Err(RegretError::ActionOutOfRange { action: a, arms: self.arms });
            }
        }
        if rewards.len() != self.arms {
            return Err(RegretError::ArmMismatch { expected: self.arms, got: rewards.len() });
        }
        if let Some(&u) = rewards.iter().find(|u| !(0.0..=1.0).contains(*u)) {
            return Err(RegretError::RewardOutOfRange(u));
        }
        self.recommended.push(recommended);
        self.played.push(played);
        self.rewards.extend_from_slice(rewards);
        self.observed.push(rewards[played]);
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    /// Rounds recorded so far.
    pub fn len(&self) -> usize {
        self.recommended.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recommended.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.len() == self.horizon
    }

    pub(crate) fn ensure_complete(&self) -> Result<(), RegretError> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(RegretError::Incomplete { rounds: self.len(), horizon: self.horizon })
        }
    }

    pub fn recommended(&self) -> &[usize] {
        &self.recommended
    }

    pub fn played(&self) -> &[usize] {
        &self.played
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    #[inline]
    pub fn rewards(&self, t: usize) -> &[f64] {
        &self.rewards[t * self.arms..(t + 1) * self.arms]
    }

    /// Writes the mandatory-header CSV: `t,I_t,a_t,u_1..u_K,observed`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), RegretError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string(), "I_t".into(), "a_t".into()];
        header.extend((1..=self.arms).map(|a| format!("u_{a}")));
        header.push("observed".into());
        w.write_record(&header)?;
        for t in 0..self.len() {
            let mut row =
                vec![(t + 1).to_string(), (self.recommended[t] + 1).to_string(), (self.played[t] + 1).to_string()];
            row.extend(self.rewards(t).iter().map(|&u| fmt_g17(u)));
            row.push(fmt_g17(self.observed[t]));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a complete transcript; the horizon is the number of rows.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, RegretError> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = r.headers()?.clone();
        let n = header.len();
        let arms = n.checked_sub(4).filter(|&k| k > 0).ok_or_else(|| RegretError::Parse("too few columns".into()))?;
        let expected: Vec<String> = ["t", "I_t", "a_t"]
            .into_iter()
            .map(String::from)
            .chain((1..=arms).map(|a| format!("u_{a}")))
            .chain(std::iter::once("observed".into()))
            .collect();
        if header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(RegretError::Parse(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
        }
        let parse_f = |s: &str| s.parse::<f64>().map_err(|e| RegretError::Parse(format!("{s:?}: {e}")));
        let parse_action = |s: &str| match s.parse::<usize>() {
            Ok(a) if a >= 1 => Ok(a - 1),
            _ => Err(RegretError::Parse(format!("bad action {s:?}"))),
        };
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec[0].parse::<usize>().ok() != Some(i + 1) {
                return Err(RegretError::Parse(format!("row {} has t = {:?}", i + 1, &rec[0])));
            }
            let u: Vec<f64> = (3..3 + arms).map(|j| parse_f(&rec[j])).collect::<Result<_, _>>()?;
            rows.push((parse_action(&rec[1])?, parse_action(&rec[2])?, u, parse_f(&rec[n - 1])?));
        }
        let mut tr = Self::new(rows.len(), arms);
        for (i, played, u, obs) in rows {
            tr.push_round(i, played, &u)?;
            if tr.observed[tr.len() - 1] != obs {
                return Err(RegretError::Parse(format!("observed {obs} differs from u_{}", played + 1)));
            }
        }
        Ok(tr)
    }
}
