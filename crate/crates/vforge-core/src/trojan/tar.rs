
use super::trace::NetTraceMatrix;
use super::trigger::{fires_at_all, TriggerSpec};

/// Trigger Avoidance Rate of one variant pair: of the `t_n` trigger
/// conditions valid in variant n's window, `t_m` also fire in variant m's
/// window (compare code included), and
/// `TAR = (t_n - t_m) / t_n * 100`. `tar` is `None` when `t_n` is zero.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TarEntry {
    pub t_n: usize,
    pub t_m: usize,
    pub tar: Option<f64>,
}

impl TarEntry {
    pub fn from_counts(t_n: usize, t_m: usize) -> TarEntry {
        let tar = (t_n > 0).then(|| (t_n as f64 - t_m as f64) / t_n as f64 * 100.0);
        TarEntry { t_n, t_m, tar }
    }
}

/// Counts re-activations of `triggers_n` (all valid in variant n's trace)
/// inside variant m's trace window and applies the TAR formula.
pub fn tar(trace_m: &NetTraceMatrix, triggers_n: &[TriggerSpec]) -> TarEntry {
    let t_m = triggers_n
        .iter()
        .filter(|t| fires_at_all(t, trace_m))
        .count();
    TarEntry::from_counts(triggers_n.len(), t_m)
}

/// TAR for per-trigger firing data already in hand.
pub fn tar_from_refires(refires: &[bool]) -> TarEntry {
    TarEntry::from_counts(refires.len(), refires.iter().filter(|&&b| b).count())
}
