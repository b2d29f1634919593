//! Per-thread accounting of live tensor bytes.
//!
//! Every [`Tensor`](super::Tensor) buffer reports its size here on creation and
//! on drop. The high-water mark stands in for accelerator peak memory: it is
//! deterministic for a given run and independent of the system allocator.
//!
//! Accounting is thread-local. An experiment and everything it allocates must
//! stay on one thread for the numbers to mean anything; kernels that fan out to
//! worker threads only write into buffers allocated by the caller.

use std::cell::Cell;

thread_local! {
    static CURRENT: Cell<i64> = const { Cell::new(0) };
    static PEAK: Cell<i64> = const { Cell::new(0) };
    static BASELINE: Cell<i64> = const { Cell::new(0) };
    static CAP: Cell<Option<u64>> = const { Cell::new(None) };
    static EXCEEDED: Cell<bool> = const { Cell::new(false) };
}

pub(crate) fn track_alloc(bytes: usize) {
    let now = CURRENT.with(|c| {
        let v = c.get() + bytes as i64;
        c.set(v);
        v
    });
    let peak = PEAK.with(|p| {
        if now > p.get() {
            p.set(now);
        }
        p.get()
    });
    if let Some(cap) = CAP.with(Cell::get) {
        let used = (peak - BASELINE.with(Cell::get)).max(0) as u64;
        if used > cap {
            EXCEEDED.with(|e| e.set(true));
        }
    }
}

pub(crate) fn track_free(bytes: usize) {
    CURRENT.with(|c| c.set(c.get() - bytes as i64));
}

/// Peak tensor bytes held on this thread since the last [`reset_high_water`].
pub fn memory_high_water() -> u64 {
    let peak = PEAK.with(Cell::get);
    (peak - BASELINE.with(Cell::get)).max(0) as u64
}

/// Bytes currently held above the reset baseline.
pub fn memory_in_use() -> u64 {
    (CURRENT.with(Cell::get) - BASELINE.with(Cell::get)).max(0) as u64
}

/// Starts a new measurement window. Tensors alive at this point count as the
/// baseline, so the high-water mark reads zero immediately afterwards.
pub fn reset_high_water() {
    let now = CURRENT.with(Cell::get);
    BASELINE.with(|b| b.set(now));
    PEAK.with(|p| p.set(now));
    EXCEEDED.with(|e| e.set(false));
}

/// Sets (or clears) the byte budget for the current measurement window.
pub fn set_memory_cap(cap: Option<u64>) {
    CAP.with(|c| c.set(cap));
    EXCEEDED.with(|e| e.set(false));
}

/// Current cap, if any.
pub fn memory_cap() -> Option<u64> {
    CAP.with(Cell::get)
}

/// True once the high-water mark has crossed the cap in this window.
pub fn memory_cap_exceeded() -> bool {
    EXCEEDED.with(Cell::get)
}

/// Reads `HGBENCH_MEM_CAP_BYTES`, ignoring values that do not parse.
pub fn memory_cap_from_env() -> Option<u64> {
    std::env::var("HGBENCH_MEM_CAP_BYTES").ok().and_then(|v| v.trim().parse().ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn reset_reads_zero() {
        let _keep = Tensor::zeros(10, 10);
        reset_high_water();
        assert_eq!(memory_high_water(), 0);
    }

    #[test]
    fn single_allocation_is_counted() {
        reset_high_water();
        let t = Tensor::zeros(1000, 100);
        assert!(memory_high_water() >= 800_000);
        drop(t);
        assert!(memory_high_water() >= 800_000);
    }

    #[test]
    fn alloc_free_alloc_keeps_single_peak() {
        reset_high_water();
        let a = Tensor::zeros(100, 50);
        let single = memory_high_water();
        drop(a);
        let b = Tensor::zeros(100, 50);
        assert_eq!(memory_high_water(), single);
        drop(b);
    }

    #[test]
    fn high_water_is_monotone() {
        reset_high_water();
        let mut last = 0;
        let mut live = Vec::new();
        for i in 1..20 {
            live.push(Tensor::zeros(i, 7));
            if i % 3 == 0 {
                live.remove(0);
            }
            let now = memory_high_water();
            assert!(now >= last);
            last = now;
        }
    }

    #[test]
    fn cap_flags_overrun() {
        reset_high_water();
        set_memory_cap(Some(1024));
        let _small = Tensor::zeros(4, 4);
        assert!(!memory_cap_exceeded());
        let _big = Tensor::zeros(100, 100);
        assert!(memory_cap_exceeded());
        set_memory_cap(None);
    }
}
