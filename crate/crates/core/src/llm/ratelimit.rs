use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Token bucket shared by all workers.
#[derive(Debug)]
pub struct RateLimiter {
    capacity: f64,
    per_second: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    /// `per_minute` requests on average, bursts up to `burst`.
    pub fn per_minute(per_minute: f64, burst: u32) -> Self {
        let capacity = f64::from(burst.max(1));
        RateLimiter { capacity, per_second: per_minute / 60.0, state: Mutex::new((capacity, Instant::now())) }
    }

    /// Blocks until a token is available.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().expect("rate limiter lock");
                let now = Instant::now();
                let (tokens, last) = *state;
                let refilled = (tokens + now.duration_since(last).as_secs_f64() * self.per_second).min(self.capacity);
                if refilled >= 1.0 {
                    *state = (refilled - 1.0, now);
                    return;
                }
                *state = (refilled, now);
                Duration::from_secs_f64((1.0 - refilled) / self.per_second)
            };
            std::thread::sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burst_then_throttle() {
        let limiter = RateLimiter::per_minute(600.0, 2);
        let start = Instant::now();
        for _ in 0..3 {
            limiter.acquire();
        }
        // Two from the burst, the third waits about 0.1 s.
        assert!(start.elapsed() >= Duration::from_millis(80));
    }
}
