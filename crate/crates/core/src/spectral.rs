//! Fourier differentiation on the periodic unit cell.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct TorusSpectral {
    n: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl TorusSpectral {
    pub(crate) fn new(n: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            dim,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Signed wavenumber of FFT bin `i`. The Nyquist bin maps to `-n/2`.
    pub(crate) fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[start + j * stride] = *v;
                    }
                }
            }
        }
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    pub(crate) fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, &self.inverse);
        let scale = 1.0 / spectrum.len() as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    fn bins(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            idx[a] = rem % self.n;
            rem /= self.n;
        }
        idx
    }

    fn apply(&self, spectrum: &[Complex64], symbol: impl Fn(&[usize]) -> f64) -> Vec<f64> {
        let scaled: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(i, c)| c * symbol(&self.bins(i)))
            .collect();
        self.inverse_real(scaled)
    }

    /// `∂²/∂x_a∂x_b` of a field given by its spectrum.
    ///
    /// For mixed derivatives the Nyquist bin is dropped, since its odd part is
    /// not representable on the grid.
    pub(crate) fn second_partial(&self, spectrum: &[Complex64], a: usize, b: usize) -> Vec<f64> {
        self.apply(spectrum, |idx| {
            if a != b && (self.is_nyquist(idx[a]) || self.is_nyquist(idx[b])) {
                return 0.0;
            }
            let ka = self.wavenumber(idx[a]) as f64;
            let kb = self.wavenumber(idx[b]) as f64;
            -4.0 * PI * PI * ka * kb
        })
    }

    /// All second partials, `out[a][b]`, from a single forward transform.
    pub(crate) fn hessian(&self, values: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let spectrum = self.forward(values);
        let mut out = vec![vec![Vec::new(); self.dim]; self.dim];
        for a in 0..self.dim {
            for b in a..self.dim {
                let d = self.second_partial(&spectrum, a, b);
                if a != b {
                    out[b][a] = d.clone();
                }
                out[a][b] = d;
            }
        }
        out
    }

    fn k_squared(&self, idx: &[usize]) -> f64 {
        idx.iter()
            .map(|&i| {
                let k = self.wavenumber(i) as f64;
                k * k
            })
            .sum()
    }

    /// Flat Laplacian `½ Σ ∂²`.
    pub(crate) fn flat_laplacian(&self, values: &[f64]) -> Vec<f64> {
        let spectrum = self.forward(values);
        self.apply(&spectrum, |idx| -2.0 * PI * PI * self.k_squared(idx))
    }

    /// Inverse of the flat Laplacian on mean-zero data; the constant mode is discarded.
    pub(crate) fn inverse_flat_laplacian(&self, values: &[f64]) -> Vec<f64> {
        let spectrum = self.forward(values);
        self.apply(&spectrum, |idx| {
            let k2 = self.k_squared(idx);
            if k2 == 0.0 {
                0.0
            } else {
                -1.0 / (2.0 * PI * PI * k2)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(n: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                v.push(f(i as f64 / n as f64, j as f64 / n as f64));
            }
        }
        v
    }

    #[test]
    fn wavenumbers_wrap() {
        let s = TorusSpectral::new(8, 1);
        let ks: Vec<i64> = (0..8).map(|i| s.wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
    }

    #[test]
    fn hessian_exact_on_trig_polynomials() {
        let n = 16;
        let s = TorusSpectral::new(n, 2);
        let tau = 2.0 * PI;
        let f = grid2(n, |x, y| (tau * x).sin() * (2.0 * tau * y).cos() + (3.0 * tau * y).sin());
        let h = s.hessian(&f);
        let exact_xy = grid2(n, |x, y| -2.0 * tau * tau * (tau * x).cos() * (2.0 * tau * y).sin());
        let exact_yy = grid2(n, |x, y| {
            -4.0 * tau * tau * (tau * x).sin() * (2.0 * tau * y).cos()
                - 9.0 * tau * tau * (3.0 * tau * y).sin()
        });
        for i in 0..n * n {
            assert!((h[0][1][i] - exact_xy[i]).abs() < 1e-10);
            assert!((h[1][0][i] - exact_xy[i]).abs() < 1e-10);
            assert!((h[1][1][i] - exact_yy[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn nyquist_mode_keeps_pure_second_derivative() {
        let n = 8;
        let s = TorusSpectral::new(n, 1);
        // cos(π n x) sampled is (-1)^i, whose second derivative is -(π n)² (-1)^i.
        let f: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let h = s.hessian(&f);
        let expected = -(PI * n as f64).powi(2);
        for i in 0..n {
            assert!((h[0][0][i] - expected * f[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn inverse_laplacian_round_trips_mean_zero_data() {
        let n = 8;
        let s = TorusSpectral::new(n, 4);
        let f: Vec<f64> = (0..n.pow(4))
            .map(|i| ((i * 7919) % 13) as f64 - 6.0)
            .collect();
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        let f: Vec<f64> = f.iter().map(|v| v - mean).collect();
        let u = s.inverse_flat_laplacian(&f);
        let back = s.flat_laplacian(&u);
        let err = back
            .iter()
            .zip(&f)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-10, "round-trip error {err}");
    }
}
