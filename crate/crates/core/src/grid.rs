//! Row-major single-channel grid plus the integer displacement type.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Integer 2-vector displacement in (row, col) order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Shift {
    pub dy: i32,
    pub dx: i32,
}

impl Shift {
    pub const ZERO: Shift = Shift { dy: 0, dx: 0 };

    pub fn new(dy: i32, dx: i32) -> Self {
        Shift { dy, dx }
    }

    /// Squared Euclidean magnitude, used for no-motion tie-breaking.
    pub fn mag_sq(self) -> i64 {
        let dy = self.dy as i64;
        let dx = self.dx as i64;
        dy * dy + dx * dx
    }

    /// Snap each component to the nearest even value, ties toward zero.
    ///
    /// Odd displacements scramble the CFA phase when applied to raw mosaics,
    /// so every offset is snapped before it touches Bayer data.
    pub fn snap_even(self) -> Shift {
        fn snap(v: i32) -> i32 {
            if v % 2 == 0 {
                v
            } else {
                v - v.signum()
            }
        }
        Shift::new(snap(self.dy), snap(self.dx))
    }

    pub fn scaled(self, factor: i32) -> Shift {
        Shift::new(self.dy * factor, self.dx * factor)
    }
}

/// Real-valued 2-vector in (row, col) order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2<T> {
    pub y: T,
    pub x: T,
}

impl<T: Scalar> Vec2<T> {
    pub fn new(y: T, x: T) -> Self {
        Vec2 { y, x }
    }
}

/// Mirror an index into `[0, n)` without repeating the border sample
/// (`-1 -> 1`, `n -> n-2`). Parity is preserved, which keeps reflected
/// CFA samples on their own color phase.
pub fn reflect_index(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * n - 2 - i;
        } else {
            return i as usize;
        }
    }
}

/// Row-major 2-D grid of copyable samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<E> {
    height: usize,
    width: usize,
    data: Vec<E>,
}

impl<E: Copy> Grid<E> {
    pub fn filled(height: usize, width: usize, value: E) -> Self {
        Grid {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<E>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::dimension(format!(
                "grid data length {} does not match {}x{}",
                data.len(),
                height,
                width
            )));
        }
        Ok(Grid {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Grid {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> E {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: E) {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col] = value;
    }

    /// Sample with mirror reflection for out-of-range coordinates.
    #[inline]
    pub fn get_reflect(&self, row: isize, col: isize) -> E {
        let r = reflect_index(row, self.height);
        let c = reflect_index(col, self.width);
        self.data[r * self.width + c]
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [E] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[E] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    pub fn map<F, U: Copy>(&self, f: F) -> Grid<U>
    where
        F: Fn(E) -> U,
    {
        Grid {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_dims<U: Copy>(&self, other: &Grid<U>) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Extract a `size`x`size` window whose top-left corner is `(top, left)`;
    /// out-of-range samples are mirror-reflected.
    pub fn window_reflect(&self, top: isize, left: isize, size: usize) -> Grid<E> {
        let mut data = Vec::with_capacity(size * size);
        for r in 0..size as isize {
            for c in 0..size as isize {
                data.push(self.get_reflect(top + r, left + c));
            }
        }
        Grid {
            height: size,
            width: size,
            data,
        }
    }
}

impl<T: Scalar> Grid<T> {
    pub fn zeros(height: usize, width: usize) -> Self {
        Grid::filled(height, width, T::zero())
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn mean(&self) -> T {
        self.sum() / T::from_usize(self.data.len())
    }

    /// Population variance of the samples.
    pub fn variance(&self) -> T {
        let mean = self.mean();
        let acc: T = self
            .data
            .iter()
            .map(|&v| {
                let d = v - mean;
                d * d
            })
            .sum();
        acc / T::from_usize(self.data.len())
    }

    /// Mean absolute difference against another grid of identical shape.
    pub fn mean_abs_diff(&self, other: &Grid<T>) -> T {
        debug_assert!(self.same_dims(other));
        let acc: T = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| (a - b).abs())
            .sum();
        acc / T::from_usize(self.data.len())
    }
}
