use super::model::SparseModel;

const ROUND_TOL: f64 = 1e-6;
const MAX_PASSES: usize = 8;

/// Activity-based bound propagation restricted to integer columns.
///
/// Tightens `lo`/`hi` in place and returns `false` when a row can no longer be
/// satisfied. Continuous bounds are never modified.
pub(crate) fn propagate(sparse: &SparseModel, lo: &mut [f64], hi: &mut [f64]) -> bool {
    let tol = 1e-7;
    for _ in 0..MAX_PASSES {
        let mut changed = false;
        for r in 0..sparse.m {
            let (mut min_act, mut max_act) = (0.0, 0.0);
            for (j, a) in sparse.row(r) {
                if a > 0.0 {
                    min_act += a * lo[j];
                    max_act += a * hi[j];
                } else {
                    min_act += a * hi[j];
                    max_act += a * lo[j];
                }
            }
            let rlo = sparse.row_lo[r];
            let rhi = sparse.row_hi[r];
            let scale = 1.0 + rlo.abs().min(rhi.abs()).min(1e6);
            if min_act > rhi + tol * scale || max_act < rlo - tol * scale {
                return false;
            }
            for (j, a) in sparse.row(r) {
                if !sparse.integer[j] || lo[j] == hi[j] {
                    continue;
                }
                let (own_min, own_max) = if a > 0.0 {
                    (a * lo[j], a * hi[j])
                } else {
                    (a * hi[j], a * lo[j])
                };
                if rhi.is_finite() {
                    let room = rhi - (min_act - own_min);
                    if a > 0.0 {
                        let cap = (room / a + ROUND_TOL).floor();
                        if cap < hi[j] {
                            hi[j] = cap;
                            changed = true;
                        }
                    } else {
                        let floor = (room / a - ROUND_TOL).ceil();
                        if floor > lo[j] {
                            lo[j] = floor;
                            changed = true;
                        }
                    }
                }
                if rlo.is_finite() {
                    let need = rlo - (max_act - own_max);
                    if a > 0.0 {
                        let floor = (need / a - ROUND_TOL).ceil();
                        if floor > lo[j] {
                            lo[j] = floor;
                            changed = true;
                        }
                    } else {
                        let cap = (need / a + ROUND_TOL).floor();
                        if cap < hi[j] {
                            hi[j] = cap;
                            changed = true;
                        }
                    }
                }
                if lo[j] > hi[j] {
                    return false;
                }
            }
        }
        if !changed {
            break;
        }
    }
    true
}
