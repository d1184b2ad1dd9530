//! Plain forward kernels shared by the autodiff tape and the cached
//! inference path.

use super::tensor::Scalar;

/// `out[m×n] (+)= a[m×k] · b`, where `b` is `[k×n]`, or `[n×k]` when `trans_b`.
pub fn gemm_into<F: Scalar>(
    a: &[F],
    b: &[F],
    out: &mut [F],
    m: usize,
    k: usize,
    n: usize,
    trans_b: bool,
    accumulate: bool,
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsb, csb) = if trans_b {
        (1, k as isize)
    } else {
        (n as isize, 1)
    };
    let beta = if accumulate { F::one() } else { F::zero() };
    // SAFETY: extents and strides describe the three slices checked above.
    unsafe {
        F::gemm(
            m,
            k,
            n,
            F::one(),
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            out.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Row-wise softmax with max subtraction, in place.
pub fn softmax_in_place<F: Scalar>(row: &mut [F]) {
    let max = row.iter().copied().fold(F::neg_infinity(), F::max);
    let mut total = F::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}

/// Normalise one vector; returns `(mean, 1/sqrt(var + eps))`.
pub fn layer_norm_row<F: Scalar>(x: &[F], gamma: &[F], beta: &[F], eps: F, out: &mut [F]) -> (F, F) {
    let d = F::from_usize(x.len()).unwrap();
    let mean = x.iter().copied().sum::<F>() / d;
    let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / d;
    let rstd = F::one() / (var + eps).sqrt();
    for (((o, &v), &g), &b) in out.iter_mut().zip(x).zip(gamma).zip(beta) {
        *o = (v - mean) * rstd * g + b;
    }
    (mean, rstd)
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// Tanh-approximated GELU.
pub fn gelu<F: Scalar>(x: F) -> F {
    let c = F::lit(GELU_C);
    let a = F::lit(GELU_A);
    let half = F::lit(0.5);
    half * x * (F::one() + (c * (x + a * x * x * x)).tanh())
}

pub fn gelu_grad<F: Scalar>(x: F) -> F {
    let c = F::lit(GELU_C);
    let a = F::lit(GELU_A);
    let half = F::lit(0.5);
    let t = (c * (x + a * x * x * x)).tanh();
    half * (F::one() + t) + half * x * (F::one() - t * t) * c * (F::one() + F::lit(3.0) * a * x * x)
}

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax<F: Scalar>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_transposed_b() {
        // a = [[1,2],[3,4]], b stored as [n×k] = [[5,7],[6,8]] -> same as [[5,6],[7,8]]
        let a = [1.0f64, 2.0, 3.0, 4.0];
        let bt = [5.0, 7.0, 6.0, 8.0];
        let mut out = [0.0; 4];
        gemm_into(&a, &bt, &mut out, 2, 2, 2, true, false);
        assert_eq!(out, [19.0, 22.0, 43.0, 50.0]);
        gemm_into(&a, &bt, &mut out, 2, 2, 2, true, true);
        assert_eq!(out, [38.0, 44.0, 86.0, 100.0]);
    }

    #[test]
    fn gelu_derivative_matches_difference() {
        for &x in &[-3.0f64, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn argmax_prefers_lowest_on_tie() {
        assert_eq!(argmax(&[0.0f32, 2.0, 1.0, 2.0]), 1);
        assert_eq!(argmax(&[5.0f32]), 0);
    }
}
