use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::queue::EventQueue;
use crate::consensus::Message;
use crate::error::{Error, Result};
use crate::geodata::{one_way_delay, LatencyMatrix};
use crate::metrics::{ValidatorId, ValidatorProfile};

/// How messages landing at the same instant are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteRace {
    /// Lower sender id first.
    #[default]
    Ascending,
    /// Seeded random permutation.
    Random,
}

impl std::str::FromStr for VoteRace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascending" => Ok(VoteRace::Ascending),
            "random" => Ok(VoteRace::Random),
            other => Err(Error::Config(format!("unknown vote race mode `{other}`"))),
        }
    }
}

/// Uniform in `[-j, j]`; exactly 0 when `j` is 0.
pub fn jitter(rng: &mut ChaCha8Rng, j: f64) -> f64 {
    if j <= 0.0 {
        0.0
    } else {
        rng.random_range(-j..=j)
    }
}

/// Point-to-point links between validators. Validator ids index the delay
/// table directly.
#[derive(Debug)]
pub struct Network {
    n: usize,
    one_way: Vec<f64>,
    pub processing_ms: f64,
    pub jitter_ms: f64,
    pub race: VoteRace,
    rng: ChaCha8Rng,
}

impl Network {
    pub fn new(
        validators: &[ValidatorProfile],
        matrix: &LatencyMatrix,
        processing_ms: f64,
        jitter_ms: f64,
        race: VoteRace,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        for (i, v) in validators.iter().enumerate() {
            if v.id.0 as usize != i {
                return Err(Error::Config(format!(
                    "validator ids must be 0..n, found {} at {i}",
                    v.id
                )));
            }
        }
        let n = validators.len();
        let mut one_way = vec![0.0; n * n];
        for a in validators {
            for b in validators {
                one_way[a.id.0 as usize * n + b.id.0 as usize] = one_way_delay(matrix, &a.city, &b.city)?;
            }
        }
        Ok(Self {
            n,
            one_way,
            processing_ms,
            jitter_ms,
            race,
            rng,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn check(&self, v: ValidatorId) -> Result<usize> {
        let i = v.0 as usize;
        if i < self.n {
            Ok(i)
        } else {
            Err(Error::UnknownValidator(v.0))
        }
    }

    pub fn delay(&self, from: ValidatorId, to: ValidatorId) -> Result<f64> {
        Ok(self.one_way[self.check(from)? * self.n + self.check(to)?])
    }

    /// Schedules `payload` and returns its delivery instant.
    pub fn send(
        &mut self,
        queue: &mut EventQueue,
        now: f64,
        from: ValidatorId,
        to: ValidatorId,
        payload: Message,
    ) -> Result<f64> {
        let base = self.delay(from, to)? + self.processing_ms;
        let at = (now + base + jitter(&mut self.rng, self.jitter_ms)).max(now);
        let race = match self.race {
            VoteRace::Ascending => u64::from(from.0),
            VoteRace::Random => self.rng.random(),
        };
        queue.push(at, race, from, to, payload);
        Ok(at)
    }

    /// Sends to every recipient except `from`, returning the number of sends.
    pub fn broadcast<'a>(
        &mut self,
        queue: &mut EventQueue,
        now: f64,
        from: ValidatorId,
        recipients: impl IntoIterator<Item = &'a ValidatorId>,
        payload: &Message,
    ) -> Result<usize> {
        let mut sent = 0;
        for &to in recipients {
            if to != from {
                self.send(queue, now, from, to, payload.clone())?;
                sent += 1;
            }
        }
        Ok(sent)
    }
}
