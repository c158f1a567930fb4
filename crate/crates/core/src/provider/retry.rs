use std::future::Future;
use std::time::Duration;

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetryHint {
    Stop,
    Retry,
    /// Retry no sooner than this (e.g. from a Retry-After header).
    After(Duration),
}

pub trait Retryable {
    fn retry_hint(&self) -> RetryHint;
}

/// Exponential backoff with optional jitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total attempts including the first.
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
            jitter: true,
        }
    }
}

/// Errors of every failed attempt, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempts<E> {
    pub errors: Vec<E>,
}

impl<E> Attempts<E> {
    pub fn last(&self) -> &E {
        self.errors.last().expect("at least one attempt")
    }

    pub fn into_last(mut self) -> E {
        self.errors.pop().expect("at least one attempt")
    }
}

impl RetryPolicy {
    pub fn no_delay(max_attempts: u32) -> Self {
        RetryPolicy {
            max_attempts,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
            jitter: false,
        }
    }

    /// Delay after the `failed`-th failed attempt (1-based).
    pub fn backoff(&self, failed: u32) -> Duration {
        let exp = self.base_delay.saturating_mul(1u32 << failed.saturating_sub(1).min(16));
        let capped = exp.min(self.max_delay);
        if self.jitter && !capped.is_zero() {
            capped.mul_f64(rand::rng().random_range(0.5..=1.0))
        } else {
            capped
        }
    }

    /// Run `op` until it succeeds, returns a non-retryable error, or the
    /// attempt budget is spent. `op` receives the 1-based attempt number.
    pub async fn run<T, E, F, Fut>(&self, mut op: F) -> Result<T, Attempts<E>>
    where
        E: Retryable,
        F: FnMut(u32) -> Fut,
        Fut: Future<Output = Result<T, E>>,
    {
        let mut errors = Vec::new();
        let max = self.max_attempts.max(1);
        for attempt in 1..=max {
            match op(attempt).await {
                Ok(v) => return Ok(v),
                Err(e) => {
                    let hint = e.retry_hint();
                    errors.push(e);
                    let wait = match hint {
                        RetryHint::Stop => break,
                        RetryHint::Retry => self.backoff(attempt),
                        RetryHint::After(d) => d.max(self.backoff(attempt)),
                    };
                    if attempt < max && !wait.is_zero() {
                        tracing::debug!(attempt, ?wait, "retrying after failure");
                        tokio::time::sleep(wait).await;
                    }
                }
            }
        }
        Err(Attempts { errors })
    }
}
