//! Step-granular sliding-window token limiter.
//!
//! At step `t` the window covers steps `[t - W + 1, t]`. A request is
//! admitted whole or not at all, and only if the tokens already admitted in
//! the window plus its own demand stay within capacity.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RateLimitError {
    #[error("step {now} precedes the latest recorded step {latest}")]
    TimeWentBackwards { now: u32, latest: u32 },
    #[error("cannot admit a zero-token request")]
    ZeroTokens,
    #[error("window length and capacity must be positive")]
    InvalidWindow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowState {
    window_len_steps: u32,
    capacity_tokens: u64,
    ledger: VecDeque<(u32, u64)>,
    used: u64,
    now: u32,
}

impl WindowState {
    pub fn new(window_len_steps: u32, capacity_tokens: u64) -> Result<Self, RateLimitError> {
        if window_len_steps == 0 || capacity_tokens == 0 {
            return Err(RateLimitError::InvalidWindow);
        }
        Ok(WindowState {
            window_len_steps,
            capacity_tokens,
            ledger: VecDeque::new(),
            used: 0,
            now: 0,
        })
    }

    pub fn window_len_steps(&self) -> u32 {
        self.window_len_steps
    }

    pub fn capacity_tokens(&self) -> u64 {
        self.capacity_tokens
    }

    /// Admissions still inside the window, oldest first.
    pub fn ledger(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.ledger.iter().copied()
    }

    /// Moves the window to `now`, expiring entries older than `now - W + 1`.
    pub fn advance(&mut self, now: u32) -> Result<(), RateLimitError> {
        if now < self.now {
            return Err(RateLimitError::TimeWentBackwards {
                now,
                latest: self.now,
            });
        }
        self.now = now;
        let oldest_kept = (now + 1).saturating_sub(self.window_len_steps);
        while let Some(&(step, tokens)) = self.ledger.front() {
            if step >= oldest_kept {
                break;
            }
            self.used -= tokens;
            self.ledger.pop_front();
        }
        Ok(())
    }

    /// Tokens admitted within the current window.
    pub fn window_used(&self) -> u64 {
        self.used
    }

    pub fn available(&self) -> u64 {
        self.capacity_tokens - self.used
    }

    /// Admits `tokens` at step `now` iff they fit; a refusal leaves the
    /// state untouched apart from advancing the window.
    pub fn try_admit(&mut self, now: u32, tokens: u64) -> Result<bool, RateLimitError> {
        if tokens == 0 {
            return Err(RateLimitError::ZeroTokens);
        }
        self.advance(now)?;
        if self.used + tokens > self.capacity_tokens {
            return Ok(false);
        }
        self.used += tokens;
        match self.ledger.back_mut() {
            Some((step, t)) if *step == now => *t += tokens,
            _ => self.ledger.push_back((now, tokens)),
        }
        Ok(true)
    }
}
