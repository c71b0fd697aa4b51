//! Contiguous stacks of equally sized horizontal planes.

use rayon::prelude::*;

/// `count` planes of `npts` values each, plane-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneStack<T> {
    npts: usize,
    data: Vec<T>,
}

impl<T: Copy + Default + Send + Sync> PlaneStack<T> {
    pub fn zeros(count: usize, npts: usize) -> Self {
        Self {
            npts,
            data: vec![T::default(); count * npts],
        }
    }

    pub fn from_vec(npts: usize, data: Vec<T>) -> Self {
        assert!(npts > 0 && data.len().is_multiple_of(npts));
        Self { npts, data }
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.npts
    }

    pub fn npts(&self) -> usize {
        self.npts
    }

    pub fn plane(&self, m: usize) -> &[T] {
        &self.data[m * self.npts..(m + 1) * self.npts]
    }

    pub fn plane_mut(&mut self, m: usize) -> &mut [T] {
        &mut self.data[m * self.npts..(m + 1) * self.npts]
    }

    pub fn planes(&self) -> std::slice::Chunks<'_, T> {
        self.data.chunks(self.npts)
    }

    pub fn planes_mut(&mut self) -> std::slice::ChunksMut<'_, T> {
        self.data.chunks_mut(self.npts)
    }

    pub fn par_planes_mut(&mut self) -> rayon::slice::ChunksMut<'_, T> {
        self.data.par_chunks_mut(self.npts)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Time series (one value per plane) at point `p`.
    pub fn column(&self, p: usize) -> Vec<T> {
        (0..self.count())
            .map(|m| self.data[m * self.npts + p])
            .collect()
    }

    /// Point-major copy: column `p` occupies `[p * count .. (p + 1) * count]`.
    pub fn to_columns(&self) -> Vec<T> {
        let count = self.count();
        let mut out = vec![T::default(); self.data.len()];
        for (m, plane) in self.planes().enumerate() {
            for (p, &v) in plane.iter().enumerate() {
                out[p * count + m] = v;
            }
        }
        out
    }

    /// Inverse of [`PlaneStack::to_columns`].
    pub fn set_from_columns(&mut self, columns: &[T]) {
        let count = self.count();
        let npts = self.npts;
        for (m, plane) in self.data.chunks_mut(npts).enumerate() {
            for (p, v) in plane.iter_mut().enumerate() {
                *v = columns[p * count + m];
            }
        }
    }

    /// Applies `f(point, series, state)` to every point's time series in
    /// parallel.
    pub fn map_columns<S, I, F>(&mut self, init: I, f: F)
    where
        I: Fn() -> S + Sync + Send,
        F: Fn(usize, &mut [T], &mut S) + Sync + Send,
    {
        let count = self.count();
        let mut cols = self.to_columns();
        cols.par_chunks_mut(count)
            .enumerate()
            .for_each_init(&init, |state, (p, col)| f(p, col, state));
        self.set_from_columns(&cols);
    }
}
