//! Gray-mapped complex constellations with unit average energy.
//!
//! BPSK follows the diagonal mapping `x = (1/√2)[(1-2b) + j(1-2b)]`; QPSK and
//! 16-QAM follow the standard Gray-coded quadrature mappings. Bit labels are
//! read most-significant bit first.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::Bit;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: usize,
    /// `points[i]` is the symbol labeled by the MSB-first bit pattern of `i`.
    points: Vec<Complex64>,
}

impl Constellation {
    /// BPSK, `x = (1/√2)[(1-2b) + j(1-2b)]`.
    pub fn bpsk() -> Self {
        let a = 1.0 / 2.0f64.sqrt();
        Constellation {
            order: 2,
            bits_per_symbol: 1,
            points: vec![Complex64::new(a, a), Complex64::new(-a, -a)],
        }
    }

    /// Gray-mapped QPSK, `x = (1/√2)[(1-2b0) + j(1-2b1)]`.
    pub fn qpsk() -> Self {
        let a = 1.0 / 2.0f64.sqrt();
        let points = (0..4)
            .map(|i| {
                let b0 = (i >> 1) & 1;
                let b1 = i & 1;
                Complex64::new(a * (1 - 2 * b0) as f64, a * (1 - 2 * b1) as f64)
            })
            .collect();
        Constellation {
            order: 4,
            bits_per_symbol: 2,
            points,
        }
    }

    /// Gray-mapped 16-QAM,
    /// `x = (1/√10)[(1-2b0)(2-(1-2b2)) + j(1-2b1)(2-(1-2b3))]`.
    pub fn qam16() -> Self {
        let a = 1.0 / 10.0f64.sqrt();
        let points = (0..16)
            .map(|i| {
                let b = |k: usize| ((i >> (3 - k)) & 1) as f64;
                let re = (1.0 - 2.0 * b(0)) * (2.0 - (1.0 - 2.0 * b(2)));
                let im = (1.0 - 2.0 * b(1)) * (2.0 - (1.0 - 2.0 * b(3)));
                Complex64::new(a * re, a * im)
            })
            .collect();
        Constellation {
            order: 16,
            bits_per_symbol: 4,
            points,
        }
    }

    pub fn from_order(m: usize) -> Result<Self> {
        match m {
            2 => Ok(Self::bpsk()),
            4 => Ok(Self::qpsk()),
            16 => Ok(Self::qam16()),
            other => Err(Error::UnsupportedConstellation(other)),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Maps a bit string (length divisible by `log2 M`) to symbols.
    pub fn map_bits(&self, bits: &[Bit]) -> Result<Vec<Complex64>> {
        if !bits.len().is_multiple_of(self.bits_per_symbol) {
            return Err(Error::BitLength {
                expected: bits.len().next_multiple_of(self.bits_per_symbol),
                got: bits.len(),
            });
        }
        bits.chunks(self.bits_per_symbol)
            .map(|chunk| {
                let mut idx = 0usize;
                for &b in chunk {
                    if b > 1 {
                        return Err(Error::Config(format!("bit value {b} is not 0/1")));
                    }
                    idx = (idx << 1) | b as usize;
                }
                Ok(self.points[idx])
            })
            .collect()
    }

    /// Index of the nearest constellation point (Euclidean).
    pub fn nearest(&self, v: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (v - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Per-entry hard decision `𝒫_𝒳(v)`.
    pub fn project(&self, v: &[Complex64]) -> Vec<Complex64> {
        v.iter().map(|&x| self.points[self.nearest(x)]).collect()
    }

    /// Demaps symbols to bits by nearest-point decision.
    pub fn demap(&self, symbols: &[Complex64]) -> Vec<Bit> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol);
        for &s in symbols {
            let idx = self.nearest(s);
            for k in (0..self.bits_per_symbol).rev() {
                out.push(((idx >> k) & 1) as Bit);
            }
        }
        out
    }

    /// Multilinear expansion of one symbol as a function of its
    /// `log2 M` bits: returns `(local bit positions, coefficient)` pairs such
    /// that `x = Σ_S c_S · Π_{j ∈ S} b_j`. Computed by Möbius inversion over
    /// the bit cube, so it is exact for any labeling.
    pub fn symbol_poly(&self) -> Vec<(Vec<usize>, Complex64)> {
        let m = self.bits_per_symbol;
        let mut raw = Vec::new();
        for s_mask in 0..(1usize << m) {
            let mut coeff = Complex64::ZERO;
            let mut t_mask = s_mask;
            loop {
                // point index for bit assignment T: bit j set ⇒ b_j = 1.
                let mut idx = 0usize;
                for j in 0..m {
                    if (t_mask >> j) & 1 == 1 {
                        idx |= 1 << (m - 1 - j);
                    }
                }
                let sign = if ((s_mask ^ t_mask).count_ones()) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                coeff += sign * self.points[idx];
                if t_mask == 0 {
                    break;
                }
                t_mask = (t_mask - 1) & s_mask;
            }
            raw.push((s_mask, coeff));
        }
        // Coefficients that should cancel exactly leave ~1e-16 crumbs from
        // rounding of the scaled levels; prune relative to the largest.
        let peak = raw.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
        raw.into_iter()
            .filter(|(_, c)| c.norm() > 1e-12 * peak)
            .map(|(s_mask, coeff)| {
                let vars = (0..m).filter(|j| (s_mask >> j) & 1 == 1).collect();
                (vars, coeff)
            })
            .collect()
    }
}
