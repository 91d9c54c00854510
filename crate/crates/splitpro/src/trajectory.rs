//! Finite-horizon signal trajectories and input/output partitions.
//!
//! A trajectory stacks `T` samples of a `q`-dimensional signal into one flat
//! vector in time-major order: sample `t` occupies the contiguous block
//! `[(t-1)*q, t*q)`. Time indices are 1-based in the public API; storage is
//! 0-based internally.

use crate::{Error, Result};
use nalgebra::{DVector, DVectorView};

/// A length-`T` trajectory of a `q`-dimensional signal, stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    data: DVector<f64>,
    q: usize,
}

impl Trajectory {
    /// Wraps a flat time-major vector. The length must be a positive
    /// multiple of `q`.
    pub fn new(data: DVector<f64>, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::DimensionMismatch("signal dimension q = 0".into()));
        }
        if data.is_empty() || !data.len().is_multiple_of(q) {
            return Err(Error::DimensionMismatch(format!(
                "flat length {} is not a positive multiple of q = {}",
                data.len(),
                q
            )));
        }
        Ok(Self { data, q })
    }

    /// All-zero trajectory with `t_len` samples.
    pub fn zeros(q: usize, t_len: usize) -> Result<Self> {
        if q == 0 || t_len == 0 {
            return Err(Error::DimensionMismatch(
                "zero-dimensional trajectory".into(),
            ));
        }
        Ok(Self {
            data: DVector::zeros(q * t_len),
            q,
        })
    }

    /// Constant trajectory holding `value` in every coordinate.
    pub fn constant(q: usize, t_len: usize, value: f64) -> Result<Self> {
        let mut w = Self::zeros(q, t_len)?;
        w.data.fill(value);
        Ok(w)
    }

    /// Signal dimension per sample.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of samples `T`.
    pub fn t_len(&self) -> usize {
        self.data.len() / self.q
    }

    /// Flat time-major storage.
    pub fn data(&self) -> &DVector<f64> {
        &self.data
    }

    /// Consumes the trajectory, returning its flat storage.
    pub fn into_data(self) -> DVector<f64> {
        self.data
    }

    /// View of sample `t` (1-based). Panics when `t` is outside `[1, T]`.
    pub fn sample(&self, t: usize) -> DVectorView<'_, f64> {
        assert!(
            t >= 1 && t <= self.t_len(),
            "sample index {t} outside [1, {}]",
            self.t_len()
        );
        self.data.rows((t - 1) * self.q, self.q)
    }

    /// Mutable access to sample `t` (1-based) as a slice.
    pub fn sample_mut(&mut self, t: usize) -> &mut [f64] {
        assert!(
            t >= 1 && t <= self.t_len(),
            "sample index {t} outside [1, {}]",
            self.t_len()
        );
        let q = self.q;
        &mut self.data.as_mut_slice()[(t - 1) * q..t * q]
    }

    /// Concatenation in time: `self` followed by `other`.
    pub fn concat(&self, other: &Trajectory) -> Result<Trajectory> {
        if self.q != other.q {
            return Err(Error::DimensionMismatch(format!(
                "cannot concatenate signals of dimension {} and {}",
                self.q, other.q
            )));
        }
        let mut data = DVector::zeros(self.data.len() + other.data.len());
        data.rows_mut(0, self.data.len()).copy_from(&self.data);
        data.rows_mut(self.data.len(), other.data.len())
            .copy_from(&other.data);
        Ok(Trajectory { data, q: self.q })
    }

    /// Restriction to the closed 1-based window `[a, b]`.
    pub fn restrict(&self, a: usize, b: usize) -> Result<Trajectory> {
        if a < 1 || b > self.t_len() || a > b {
            return Err(Error::RangeOutOfBounds(format!(
                "[{a}, {b}] within [1, {}]",
                self.t_len()
            )));
        }
        let data = self.data.rows((a - 1) * self.q, (b - a + 1) * self.q);
        Ok(Trajectory {
            data: data.into_owned(),
            q: self.q,
        })
    }
}

/// Permutation splitting a `q`-dimensional signal sample into `m` inputs
/// followed by `p = q - m` outputs.
///
/// `perm[i]` gives the 0-based signal coordinate that lands in position `i`
/// of the stacked `(u, y)` vector, so `stacked[i] = w[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    perm: Vec<usize>,
    m: usize,
}

impl Partition {
    /// Builds a partition from a permutation of `0..q` and an input count
    /// `m` with `0 < m < q`.
    pub fn new(perm: Vec<usize>, m: usize) -> Result<Self> {
        let q = perm.len();
        if m == 0 || m >= q {
            return Err(Error::DimensionMismatch(format!(
                "input count m = {m} outside (0, {q})"
            )));
        }
        let mut seen = vec![false; q];
        for &i in &perm {
            if i >= q || seen[i] {
                return Err(Error::DimensionMismatch(format!(
                    "perm is not a permutation of 0..{q}"
                )));
            }
            seen[i] = true;
        }
        Ok(Self { perm, m })
    }

    /// Identity partition: the first `m` coordinates are inputs.
    pub fn identity(q: usize, m: usize) -> Result<Self> {
        Self::new((0..q).collect(), m)
    }

    pub fn q(&self) -> usize {
        self.perm.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.perm.len() - self.m
    }

    /// Splits one signal sample into `(u, y)`.
    pub fn split(&self, w: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        if w.len() != self.q() {
            return Err(Error::DimensionMismatch(format!(
                "sample length {} != q = {}",
                w.len(),
                self.q()
            )));
        }
        let u = DVector::from_fn(self.m, |i, _| w[self.perm[i]]);
        let y = DVector::from_fn(self.p(), |i, _| w[self.perm[self.m + i]]);
        Ok((u, y))
    }

    /// Reassembles a signal sample from `(u, y)`. Inverse of [`Self::split`].
    pub fn merge(&self, u: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.m || y.len() != self.p() {
            return Err(Error::DimensionMismatch(format!(
                "(u, y) lengths ({}, {}) != ({}, {})",
                u.len(),
                y.len(),
                self.m,
                self.p()
            )));
        }
        let mut w = DVector::zeros(self.q());
        for i in 0..self.m {
            w[self.perm[i]] = u[i];
        }
        for i in 0..self.p() {
            w[self.perm[self.m + i]] = y[i];
        }
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn traj(q: usize, vals: &[f64]) -> Trajectory {
        Trajectory::new(DVector::from_row_slice(vals), q).unwrap()
    }

    #[test]
    fn sample_blocks_are_time_major() {
        let w = traj(2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(w.t_len(), 3);
        assert_eq!(w.sample(2).as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn restrict_window_and_errors() {
        let w = traj(1, &[10.0, 20.0, 30.0, 40.0]);
        let mid = w.restrict(2, 3).unwrap();
        assert_eq!(mid.data().as_slice(), &[20.0, 30.0]);
        // Whole-range restriction is the identity.
        assert_eq!(w.restrict(1, 4).unwrap(), w);
        assert!(matches!(w.restrict(0, 2), Err(Error::RangeOutOfBounds(_))));
        assert!(matches!(w.restrict(3, 5), Err(Error::RangeOutOfBounds(_))));
        assert!(matches!(w.restrict(3, 2), Err(Error::RangeOutOfBounds(_))));
    }

    #[test]
    fn concat_requires_matching_dimension() {
        let a = traj(2, &[1.0, 2.0]);
        let b = traj(1, &[3.0]);
        assert!(matches!(a.concat(&b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn flat_length_must_divide() {
        assert!(matches!(
            Trajectory::new(DVector::from_row_slice(&[1.0, 2.0, 3.0]), 2),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn partition_rejects_bad_inputs() {
        assert!(Partition::new(vec![0, 0, 1], 1).is_err());
        assert!(Partition::new(vec![0, 3, 1], 1).is_err());
        assert!(Partition::new(vec![0, 1, 2], 0).is_err());
        assert!(Partition::new(vec![0, 1, 2], 3).is_err());
    }

    #[test]
    fn interleaved_partition_round_trip() {
        // Signal layout (y1, u1, y2, u2): inputs sit at coordinates 1 and 3.
        let part = Partition::new(vec![1, 3, 0, 2], 2).unwrap();
        let w = DVector::from_row_slice(&[9.0, 1.0, 8.0, 2.0]);
        let (u, y) = part.split(&w).unwrap();
        assert_eq!(u.as_slice(), &[1.0, 2.0]);
        assert_eq!(y.as_slice(), &[9.0, 8.0]);
        assert_eq!(part.merge(&u, &y).unwrap(), w);
    }

    proptest! {
        #[test]
        fn split_merge_round_trip(q in 2usize..7, seed in 0u64..1000) {
            let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
            // Seed-derived permutation via Fisher-Yates.
            let mut perm: Vec<usize> = (0..q).collect();
            for i in (1..q).rev() {
                let j = (state as usize) % (i + 1);
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                perm.swap(i, j);
            }
            let m = 1 + (state as usize) % (q - 1);
            let part = Partition::new(perm, m).unwrap();
            let w = DVector::from_fn(q, |_, _| {
                state = state.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
                ((state >> 33) as f64 / (1u64 << 31) as f64) - 0.5
            });
            let (u, y) = part.split(&w).unwrap();
            let back = part.merge(&u, &y).unwrap();
            prop_assert!((back - &w).amax() == 0.0);
        }

        #[test]
        fn restrict_then_concat_recovers(t_len in 2usize..9, cut in 1usize..8) {
            prop_assume!(cut < t_len);
            let q = 3;
            let w = Trajectory::new(
                DVector::from_fn(q * t_len, |i, _| i as f64),
                q,
            ).unwrap();
            let head = w.restrict(1, cut).unwrap();
            let tail = w.restrict(cut + 1, t_len).unwrap();
            prop_assert_eq!(head.concat(&tail).unwrap(), w);
        }
    }
}
