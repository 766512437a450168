use crate::units::secs_to_ns;

/// The transient count Ñ(t) = #{events in [t, t + window]} as an exact
/// piecewise-constant function on integer nanoseconds.
///
/// `breakpoints[k] = (t_k, n_k)` means Ñ(t) = n_k for t_k ≤ t < t_{k+1}.
/// Ñ is zero before the first breakpoint, and the last breakpoint always
/// returns to zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlidingCount {
    pub window_ns: u64,
    pub breakpoints: Vec<(i64, u32)>,
}

impl SlidingCount {
    pub fn at(&self, t: i64) -> u32 {
        match self.breakpoints.partition_point(|&(s, _)| s <= t) {
            0 => 0,
            k => self.breakpoints[k - 1].1,
        }
    }

    pub fn max(&self) -> u32 {
        self.breakpoints.iter().map(|b| b.1).max().unwrap_or(0)
    }

    /// Constant pieces as (start, end exclusive, count), zero pieces included
    /// between breakpoints.
    pub fn segments(&self) -> impl Iterator<Item = (i64, i64, u32)> + '_ {
        self.breakpoints.windows(2).map(|w| (w[0].0, w[1].0, w[0].1))
    }
}

/// Sliding-window count of sorted timestamps (ns), evaluated event by event
/// with two pointers: an event at e enters the window at t = e − window and
/// leaves after t = e.
pub fn sliding_count_ns(ts: &[u64], window_ns: u64) -> SlidingCount {
    let w = window_ns as i64;
    let mut breakpoints: Vec<(i64, u32)> = Vec::with_capacity(2 * ts.len());
    let (mut enter, mut leave) = (0usize, 0usize);
    let mut count: u32 = 0;
    while leave < ts.len() {
        let next_enter = ts.get(enter).map(|&e| e as i64 - w);
        let next_leave = ts[leave] as i64 + 1;
        let t = match next_enter {
            Some(e) if e <= next_leave => e,
            _ => next_leave,
        };
        while enter < ts.len() && ts[enter] as i64 - w == t {
            count += 1;
            enter += 1;
        }
        while leave < ts.len() && ts[leave] as i64 + 1 == t {
            count -= 1;
            leave += 1;
        }
        match breakpoints.last_mut() {
            Some(last) if last.0 == t => last.1 = count,
            Some(last) if last.1 == count => {}
            _ => breakpoints.push((t, count)),
        }
    }
    SlidingCount { window_ns, breakpoints }
}

/// Ñ(t) for `stream` with a window of `window` seconds.
pub fn sliding_count(stream: &crate::sim::EventStream, window: f64) -> SlidingCount {
    sliding_count_ns(&stream.timestamps(), secs_to_ns(window))
}
