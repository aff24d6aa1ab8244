//! Blocked matrix product with 64-bit accumulation.
//!
//! Every output element is the sequential sum `Σ_k a[i][k]·b[k][j]` taken
//! in increasing `k` within each `KC` block, and the block partials are
//! added in block order. Edge tiles are zero padded and go through the same
//! micro kernel, and the vector builds use separate multiply and add, so
//! results are reproducible bit for bit and independent of the tile a cell
//! lands in or the instruction set picked at runtime.

use crate::scalar::Scalar;

const MR: usize = 4;
const NR: usize = 16;
const KC: usize = 256;
/// B panels kept hot while every A panel passes over them.
const NC_PANELS: usize = 16;

/// Storage of the left operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LeftLayout {
    /// `a` is `m×k`, row-major.
    RowMajor,
    /// `a` is stored as its transpose, `k×m` row-major.
    Transposed,
}

/// `C = A·B` with `A: m×k`, `B: k×n`, all row-major except as `layout` says.
pub(crate) fn gemm<T: Scalar>(a: &[T], layout: LeftLayout, b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    gemm_with(a, layout, b, m, k, n, |_, _, x| T::narrow(x))
}

/// Like [`gemm`], but each finished `f64` dot product `(i, j, acc)` goes
/// through `epilogue` before it is stored.
pub(crate) fn gemm_with<T: Scalar, U: Scalar>(
    a: &[T],
    layout: LeftLayout,
    b: &[T],
    m: usize,
    k: usize,
    n: usize,
    epilogue: impl Fn(usize, usize, f64) -> U,
) -> Vec<U> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    if k == 0 {
        return (0..m * n).map(|idx| epilogue(idx / n, idx % n, 0.0)).collect();
    }
    let mut out = vec![U::zero(); m * n];
    if m == 0 || n == 0 {
        return out;
    }

    let kblocks = k.div_ceil(KC);
    let mut partial = if kblocks > 1 { vec![0.0f64; m * n] } else { Vec::new() };
    let mpanels = m.div_ceil(MR);
    let npanels = n.div_ceil(NR);
    let mut apack = vec![0.0f64; KC.min(k) * mpanels * MR];
    let mut bpack = vec![0.0f64; KC.min(k) * npanels * NR];
    let micro = select_micro();

    for kb in 0..kblocks {
        let k0 = kb * KC;
        let kc = KC.min(k - k0);

        // panel p holds kc rows of NR (or MR) consecutive values, zero padded
        for jp in 0..npanels {
            let panel = &mut bpack[jp * kc * NR..(jp + 1) * kc * NR];
            for kk in 0..kc {
                let row = &b[(k0 + kk) * n..(k0 + kk + 1) * n];
                for c in 0..NR {
                    let j = jp * NR + c;
                    panel[kk * NR + c] = if j < n { row[j].widen() } else { 0.0 };
                }
            }
        }
        for ip in 0..mpanels {
            let panel = &mut apack[ip * kc * MR..(ip + 1) * kc * MR];
            for kk in 0..kc {
                for r in 0..MR {
                    let i = ip * MR + r;
                    panel[kk * MR + r] = if i < m {
                        match layout {
                            LeftLayout::RowMajor => a[i * k + k0 + kk].widen(),
                            LeftLayout::Transposed => a[(k0 + kk) * m + i].widen(),
                        }
                    } else {
                        0.0
                    };
                }
            }
        }

        for jb in (0..npanels).step_by(NC_PANELS) {
            for ip in 0..mpanels {
                let ap = &apack[ip * kc * MR..(ip + 1) * kc * MR];
                let i0 = ip * MR;
                let mr = MR.min(m - i0);
                for jp in jb..(jb + NC_PANELS).min(npanels) {
                    let bp = &bpack[jp * kc * NR..(jp + 1) * kc * NR];
                    let j0 = jp * NR;
                    let nr = NR.min(n - j0);
                    let mut tile = [[0.0f64; NR]; MR];
                    micro(ap, bp, kc, &mut tile);
                    for (r, row) in tile.iter().enumerate().take(mr) {
                        let base = (i0 + r) * n + j0;
                        if kblocks == 1 {
                            for c in 0..nr {
                                out[base + c] = epilogue(i0 + r, j0 + c, row[c]);
                            }
                        } else {
                            for c in 0..nr {
                                partial[base + c] += row[c];
                            }
                        }
                    }
                }
            }
        }
    }

    if kblocks > 1 {
        for (idx, (o, p)) in out.iter_mut().zip(&partial).enumerate() {
            *o = epilogue(idx / n, idx % n, *p);
        }
    }
    out
}

type MicroFn = fn(&[f64], &[f64], usize, &mut [[f64; NR]; MR]);

#[inline(always)]
fn micro_body(ap: &[f64], bp: &[f64], kc: usize, out: &mut [[f64; NR]; MR]) {
    let mut t = [[0.0f64; NR]; MR];
    for (a, b) in ap.chunks_exact(MR).zip(bp.chunks_exact(NR)).take(kc) {
        let a: &[f64; MR] = a.try_into().unwrap();
        let b: &[f64; NR] = b.try_into().unwrap();
        for r in 0..MR {
            for c in 0..NR {
                t[r][c] += a[r] * b[c];
            }
        }
    }
    *out = t;
}

fn micro_portable(ap: &[f64], bp: &[f64], kc: usize, out: &mut [[f64; NR]; MR]) {
    micro_body(ap, bp, kc, out)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn micro_avx2_inner(ap: &[f64], bp: &[f64], kc: usize, out: &mut [[f64; NR]; MR]) {
    micro_body(ap, bp, kc, out)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn micro_avx512_inner(ap: &[f64], bp: &[f64], kc: usize, out: &mut [[f64; NR]; MR]) {
    micro_body(ap, bp, kc, out)
}

#[cfg(target_arch = "x86_64")]
fn micro_avx512(ap: &[f64], bp: &[f64], kc: usize, out: &mut [[f64; NR]; MR]) {
    // SAFETY: only selected after runtime detection of avx512f.
    unsafe { micro_avx512_inner(ap, bp, kc, out) }
}

#[cfg(target_arch = "x86_64")]
fn micro_avx2(ap: &[f64], bp: &[f64], kc: usize, out: &mut [[f64; NR]; MR]) {
    // SAFETY: only selected after runtime detection of avx2.
    unsafe { micro_avx2_inner(ap, bp, kc, out) }
}

fn select_micro() -> MicroFn {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx512f") {
            return micro_avx512;
        }
        if std::is_x86_feature_detected!("avx2") {
            return micro_avx2;
        }
    }
    micro_portable
}
