//! FFT helpers for periodic grids.

use rustfft::{FftNum, FftPlanner};

use crate::numerics::{Complex, Real};

/// Angular wavenumbers of an `n`-point grid with spacing `dx`, in FFT order.
pub fn wavenumbers<T: Real>(n: usize, dx: T) -> Vec<T> {
    let scale = T::two_pi() / (T::from_usize_lossy(n) * dx);
    (0..n)
        .map(|j| if j < n.div_ceil(2) { T::from_usize_lossy(j) } else { -T::from_usize_lossy(n - j) })
        .map(|m| m * scale)
        .collect()
}

/// In-place FFT of a row-major `nx x ny` array along both axes. The inverse
/// transform is normalized.
pub fn fft2<T: Real + FftNum>(data: &mut [Complex<T>], nx: usize, ny: usize, inverse: bool) {
    let mut planner = FftPlanner::<T>::new();
    if ny > 1 {
        let f = if inverse { planner.plan_fft_inverse(ny) } else { planner.plan_fft_forward(ny) };
        f.process(data);
    }
    let f = if inverse { planner.plan_fft_inverse(nx) } else { planner.plan_fft_forward(nx) };
    if ny == 1 {
        f.process(data);
    } else {
        let mut col = vec![Complex::new(T::zero(), T::zero()); nx];
        for k in 0..ny {
            for j in 0..nx {
                col[j] = data[j * ny + k];
            }
            f.process(&mut col);
            for j in 0..nx {
                data[j * ny + k] = col[j];
            }
        }
    }
    if inverse {
        let inv = T::one() / T::from_usize_lossy(nx * ny);
        for d in data.iter_mut() {
            *d *= inv;
        }
    }
}

pub fn fft<T: Real + FftNum>(data: &mut [Complex<T>]) {
    let n = data.len();
    fft2(data, n, 1, false);
}

pub fn ifft<T: Real + FftNum>(data: &mut [Complex<T>]) {
    let n = data.len();
    fft2(data, n, 1, true);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let orig: Vec<Complex<f64>> = (0..12).map(|j| Complex::new(j as f64, (j * j) as f64 * 0.1)).collect();
        let mut d = orig.clone();
        fft(&mut d);
        ifft(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn wavenumber_layout() {
        let k = wavenumbers(4, 1.0_f64);
        let s = std::f64::consts::FRAC_PI_2;
        assert_eq!(k, vec![0.0, s, -2.0 * s, -s]);
    }
}
