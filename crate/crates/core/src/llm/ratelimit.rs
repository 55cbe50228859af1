use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

/// Caps requests in flight and spaces request starts.
///
/// Tokens refill at `per_minute` per minute up to one token of burst; with
/// no rate configured only the in-flight cap applies.
pub struct RateLimiter {
    max_in_flight: usize,
    interval: Option<Duration>,
    state: Mutex<LimiterState>,
    freed: Condvar,
}

struct LimiterState {
    in_flight: usize,
    next_start: Option<Instant>,
}

/// Releases its slot when dropped.
pub struct Permit<'a> {
    limiter: &'a RateLimiter,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut st = self.limiter.state.lock().expect("limiter poisoned");
        st.in_flight -= 1;
        self.limiter.freed.notify_one();
    }
}

impl RateLimiter {
    pub fn new(max_in_flight: usize, per_minute: Option<u32>) -> Self {
        RateLimiter {
            max_in_flight: max_in_flight.max(1),
            interval: per_minute
                .filter(|&n| n > 0)
                .map(|n| Duration::from_secs_f64(60.0 / n as f64)),
            state: Mutex::new(LimiterState {
                in_flight: 0,
                next_start: None,
            }),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut st = self.state.lock().expect("limiter poisoned");
        while st.in_flight >= self.max_in_flight {
            st = self.freed.wait(st).expect("limiter poisoned");
        }
        st.in_flight += 1;
        let wait = match (self.interval, st.next_start) {
            (Some(iv), Some(next)) => {
                let now = Instant::now();
                let start = next.max(now);
                st.next_start = Some(start + iv);
                start.saturating_duration_since(now)
            }
            (Some(iv), None) => {
                st.next_start = Some(Instant::now() + iv);
                Duration::ZERO
            }
            (None, _) => Duration::ZERO,
        };
        drop(st);
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
        Permit { limiter: self }
    }
}

impl Default for RateLimiter {
    fn default() -> Self {
        RateLimiter::new(1, None)
    }
}
