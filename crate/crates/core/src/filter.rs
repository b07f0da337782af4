//! Second-order Butterworth low-pass applied forward and backward.

/// Direct-form biquad coefficients with `a0` normalised to 1.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    /// Butterworth low-pass via the bilinear transform with pre-warping.
    /// `cutoff_hz` must lie strictly inside `(0, fs/2)`.
    pub(crate) fn butterworth_lowpass(cutoff_hz: f64, fs_hz: f64) -> Self {
        let k = (std::f64::consts::PI * cutoff_hz / fs_hz).tan();
        let k2 = k * k;
        let sqrt2 = std::f64::consts::SQRT_2;
        let norm = 1.0 / (1.0 + sqrt2 * k + k2);
        let b0 = k2 * norm;
        Self {
            b: [b0, 2.0 * b0, b0],
            a: [2.0 * (k2 - 1.0) * norm, (1.0 - sqrt2 * k + k2) * norm],
        }
    }

    /// Transposed direct form II state that makes a constant input `x0`
    /// produce the constant output `x0` from the first sample on.
    fn steady_state(&self, x0: f64) -> [f64; 2] {
        let [b0, _, b2] = self.b;
        let [_, a2] = self.a;
        // Unit DC gain means y = x0 at steady state.
        [(1.0 - b0) * x0, (b2 - a2) * x0]
    }

    fn run(&self, x: &mut [f64]) {
        let Some(&first) = x.first() else { return };
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let mut z = self.steady_state(first);
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + z[0];
            z[0] = b1 * input - a1 * y + z[1];
            z[1] = b2 * input - a2 * y;
            *v = y;
        }
    }

    /// Single forward pass, started in steady state on the first sample.
    pub(crate) fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.run(&mut y);
        y
    }

    /// Zero-phase filtering: forward pass, reverse, pass again, reverse.
    /// Both ends are padded with an odd reflection to damp edge transients.
    pub(crate) fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        if x.len() < 2 {
            return x.to_vec();
        }
        let pad = 9.min(x.len() - 1);
        let (head, tail) = (x[0], x[x.len() - 1]);
        let mut ext = Vec::with_capacity(x.len() + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * head - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * tail - x[x.len() - 1 - i]));
        self.run(&mut ext);
        ext.reverse();
        self.run(&mut ext);
        ext.reverse();
        ext[pad..pad + x.len()].to_vec()
    }
}
