//! The reset-based window monitor.
//!
//! The monitor tracks the window anchored at the last reset point: `steps`
//! since the reset and the scaled payoff `sum` accumulated since then. When
//! the sum turns non-negative the anchor window closes, and by the inductive
//! property of windows every window opened in between has closed too, so the
//! monitor resets. When `steps` reaches the window length without closing,
//! the monitor emits an overflow and resets: the anchor window stayed open
//! for the full length. A play violates the direct fixed-window objective
//! exactly when an overflow is ever emitted, and the prefix-independent one
//! exactly when overflows are emitted infinitely often.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WindowMonitorState {
    /// Steps since the last reset, in `[0, l-1]`.
    pub steps: u32,
    /// Scaled payoff sum since the last reset; negative unless just reset.
    pub sum: i64,
    /// Whether the last step produced a window-overflow event.
    pub overflow: bool,
}

impl WindowMonitorState {
    pub fn initial() -> Self {
        WindowMonitorState {
            steps: 0,
            sum: 0,
            overflow: false,
        }
    }

    pub fn is_reset(&self) -> bool {
        self.steps == 0
    }
}

/// Advances the monitor by one step of already-scaled payoff (threshold 0).
pub fn monitor_step(st: WindowMonitorState, payoff: i64, l: u32) -> WindowMonitorState {
    debug_assert!(l >= 1);
    let sum = st.sum + payoff;
    let steps = st.steps + 1;
    if sum >= 0 {
        WindowMonitorState {
            steps: 0,
            sum: 0,
            overflow: false,
        }
    } else if steps == l {
        WindowMonitorState {
            steps: 0,
            sum: 0,
            overflow: true,
        }
    } else {
        WindowMonitorState {
            steps,
            sum,
            overflow: false,
        }
    }
}

/// Runs the monitor over a payoff sequence, returning the state after each
/// step.
pub fn monitor_run(payoffs: impl IntoIterator<Item = i64>, l: u32) -> Vec<WindowMonitorState> {
    let mut st = WindowMonitorState::initial();
    payoffs
        .into_iter()
        .map(|p| {
            st = monitor_step(st, p, l);
            st
        })
        .collect()
}

/// Brute-force check used as the monitor's independent oracle in tests: does
/// some window that opens in `payoffs` (with full lookahead available) stay
/// open for `l` steps?
pub fn brute_force_has_open_window(payoffs: &[i64], l: u32) -> bool {
    let l = l as usize;
    if payoffs.len() < l {
        return false;
    }
    'outer: for i in 0..=payoffs.len() - l {
        let mut sum = 0i64;
        for p in &payoffs[i..i + l] {
            sum += p;
            if sum >= 0 {
                continue 'outer;
            }
        }
        return true;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_open_step() {
        let st = monitor_step(WindowMonitorState::initial(), -2, 2);
        assert_eq!(st, WindowMonitorState { steps: 1, sum: -2, overflow: false });
    }

    #[test]
    fn closing_resets_without_overflow() {
        let st = WindowMonitorState { steps: 1, sum: -2, overflow: false };
        let st = monitor_step(st, 2, 2);
        assert_eq!(st, WindowMonitorState { steps: 0, sum: 0, overflow: false });
    }

    #[test]
    fn hitting_the_window_length_overflows() {
        let st = WindowMonitorState { steps: 1, sum: -2, overflow: false };
        let st = monitor_step(st, -2, 2);
        assert_eq!(st, WindowMonitorState { steps: 0, sum: 0, overflow: true });
    }

    #[test]
    fn reset_spacing_invariant() {
        // Between consecutive resets the step count stays below l.
        let payoffs = [-1, -1, 3, -5, 1, 1, 1, 1, -2, -2, -2];
        for l in 1..=4u32 {
            for st in monitor_run(payoffs, l) {
                assert!(st.steps < l.max(1));
                assert!(st.is_reset() || st.sum < 0);
            }
        }
    }

    #[test]
    fn monitor_agrees_with_brute_force_on_fixed_prefixes() {
        let cases: Vec<Vec<i64>> = vec![
            vec![-2, 2, -2, -2],
            vec![0, 0, 0],
            vec![-1, -1, 3, -1, -1, -1],
            vec![2, -3, 1, 1, -3, 2],
        ];
        for payoffs in cases {
            for l in 1..=3u32 {
                let overflowed = monitor_run(payoffs.iter().copied(), l)
                    .iter()
                    .any(|st| st.overflow);
                assert_eq!(
                    overflowed,
                    brute_force_has_open_window(&payoffs, l),
                    "payoffs {payoffs:?} l {l}"
                );
            }
        }
    }
}
