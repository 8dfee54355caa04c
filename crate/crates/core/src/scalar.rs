use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Storage scalar for embedding rows: `f32` or `f64`.
///
/// Inner products are always accumulated in `f64` regardless of the storage
/// type, so a batch scan and a scalar loop agree on which row wins an argmax.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumCast + Default + Debug + Display + Send + Sync + 'static
{
    /// Dot product with `f64` accumulation. Slices must have equal length.
    fn dot_wide(x: &[Self], y: &[Self]) -> f64;

    /// Dot product of a storage row against an `f64` vector.
    fn dot_mixed(x: &[Self], y: &[f64]) -> f64;

    /// `c (m×n) = a (m×k) · bᵀ` where `b` is `n×k`, all row-major.
    fn gemm_nt(m: usize, n: usize, k: usize, a: &[Self], b: &[Self], c: &mut [Self]);

    fn from_f64_lossy(v: f64) -> Self;
}

/// Hints the cache to load `data`. A no-op off x86_64.
#[inline]
pub(crate) fn prefetch<T>(data: &[T]) {
    #[cfg(target_arch = "x86_64")]
    {
        use std::arch::x86_64::{_mm_prefetch, _MM_HINT_T0};
        let p = data.as_ptr() as *const i8;
        let bytes = std::mem::size_of_val(data);
        let mut off = 0;
        while off < bytes {
            // SAFETY: prefetch never faults and the address lies inside `data`.
            unsafe { _mm_prefetch(p.wrapping_add(off), _MM_HINT_T0) };
            off += 64;
        }
    }
    #[cfg(not(target_arch = "x86_64"))]
    let _ = data;
}

// Eight independent lanes let LLVM vectorize the widening multiply-add.
macro_rules! wide_dot {
    ($x:expr, $y:expr) => {{
        let x = $x;
        let y = $y;
        let mut acc = [0f64; 8];
        let xc = x.chunks_exact(8);
        let yc = y.chunks_exact(8);
        let (xr, yr) = (xc.remainder(), yc.remainder());
        for (a, b) in xc.zip(yc) {
            for l in 0..8 {
                acc[l] += a[l] as f64 * b[l] as f64;
            }
        }
        let mut tail = 0f64;
        for (a, b) in xr.iter().zip(yr) {
            tail += *a as f64 * *b as f64;
        }
        ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
    }};
}

#[cfg(target_arch = "x86_64")]
mod x86 {
    use std::arch::x86_64::*;
    use std::mem::transmute;

    // Plain 16-element array reads instead of the `loadu` intrinsics, which
    // carry per-call precondition checks in builds with debug assertions.
    #[inline(always)]
    unsafe fn load16_f32(p: *const f32) -> [__m256d; 4] {
        let q = transmute::<[f32; 16], [__m128; 4]>(*(p as *const [f32; 16]));
        [
            _mm256_cvtps_pd(q[0]),
            _mm256_cvtps_pd(q[1]),
            _mm256_cvtps_pd(q[2]),
            _mm256_cvtps_pd(q[3]),
        ]
    }

    #[inline(always)]
    unsafe fn load16_f64(p: *const f64) -> [__m256d; 4] {
        transmute::<[f64; 16], [__m256d; 4]>(*(p as *const [f64; 16]))
    }

    macro_rules! fma_dot {
        ($name:ident, $x:ty, $y:ty, $lx:ident, $ly:ident) => {
            #[target_feature(enable = "avx2,fma")]
            pub unsafe fn $name(x: &[$x], y: &[$y]) -> f64 {
                let n = x.len().min(y.len());
                let (px, py) = (x.as_ptr(), y.as_ptr());
                let mut acc = [_mm256_setzero_pd(); 4];
                let mut i = 0;
                while i + 16 <= n {
                    let xs = $lx(px.wrapping_add(i));
                    let ys = $ly(py.wrapping_add(i));
                    for l in 0..4 {
                        acc[l] = _mm256_fmadd_pd(xs[l], ys[l], acc[l]);
                    }
                    i += 16;
                }
                let mut tail = 0f64;
                for j in i..n {
                    tail += x[j] as f64 * y[j] as f64;
                }
                let s = _mm256_add_pd(_mm256_add_pd(acc[0], acc[1]), _mm256_add_pd(acc[2], acc[3]));
                let lanes = transmute::<__m256d, [f64; 4]>(s);
                (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
            }
        };
    }

    fma_dot!(dot_f32_avx2, f32, f32, load16_f32, load16_f32);
    fma_dot!(dot_f64_avx2, f64, f64, load16_f64, load16_f64);
    fma_dot!(dot_f32_f64_avx2, f32, f64, load16_f32, load16_f64);

    pub fn has_avx2() -> bool {
        std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma")
    }
}

impl Scalar for f32 {
    #[inline]
    fn dot_wide(x: &[f32], y: &[f32]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        #[cfg(target_arch = "x86_64")]
        if x86::has_avx2() {
            // SAFETY: feature presence checked at runtime.
            return unsafe { x86::dot_f32_avx2(x, y) };
        }
        wide_dot!(x, y)
    }

    #[inline]
    fn dot_mixed(x: &[f32], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        #[cfg(target_arch = "x86_64")]
        if x86::has_avx2() {
            // SAFETY: feature presence checked at runtime.
            return unsafe { x86::dot_f32_f64_avx2(x, y) };
        }
        wide_dot!(x, y)
    }

    fn gemm_nt(m: usize, n: usize, k: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
        assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
        // SAFETY: bounds asserted above; strides describe row-major a, bᵀ and c.
        unsafe {
            matrixmultiply::sgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                k as isize,
                1,
                b.as_ptr(),
                1,
                k as isize,
                0.0,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }

    fn from_f64_lossy(v: f64) -> f32 {
        v as f32
    }
}

impl Scalar for f64 {
    #[inline]
    fn dot_wide(x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        #[cfg(target_arch = "x86_64")]
        if x86::has_avx2() {
            // SAFETY: feature presence checked at runtime.
            return unsafe { x86::dot_f64_avx2(x, y) };
        }
        wide_dot!(x, y)
    }

    #[inline]
    fn dot_mixed(x: &[f64], y: &[f64]) -> f64 {
        Self::dot_wide(x, y)
    }

    fn gemm_nt(m: usize, n: usize, k: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
        assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
        // SAFETY: bounds asserted above; strides describe row-major a, bᵀ and c.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                k as isize,
                1,
                b.as_ptr(),
                1,
                k as isize,
                0.0,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }

    fn from_f64_lossy(v: f64) -> f64 {
        v
    }
}
