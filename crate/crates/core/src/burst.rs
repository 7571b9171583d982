//! Ordered burst of CFA frames with their variance maps.

use crate::bayer::BayerFrame;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Scalar;

/// A burst: N >= 2 CFA frames sharing dimensions and pattern, per-frame
/// variance maps, and the index of the reference frame.
#[derive(Clone, Debug)]
pub struct Burst<T> {
    frames: Vec<BayerFrame<T>>,
    variance_maps: Vec<Grid<T>>,
    ref_index: usize,
}

impl<T: Scalar> Burst<T> {
    pub fn new(
        frames: Vec<BayerFrame<T>>,
        variance_maps: Vec<Grid<T>>,
        ref_index: usize,
    ) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::parameter("a burst needs at least 2 frames"));
        }
        if variance_maps.len() != frames.len() {
            return Err(Error::dimension(
                "one variance map per frame is required",
            ));
        }
        if ref_index >= frames.len() {
            return Err(Error::parameter(format!(
                "ref_index {} out of range for {} frames",
                ref_index,
                frames.len()
            )));
        }
        let first = &frames[0];
        for f in &frames[1..] {
            if f.height() != first.height()
                || f.width() != first.width()
                || f.pattern() != first.pattern()
            {
                return Err(Error::dimension(
                    "all burst frames must share dimensions and pattern",
                ));
            }
        }
        for m in &variance_maps {
            if m.height() != first.height() || m.width() != first.width() {
                return Err(Error::dimension(
                    "variance maps must match frame dimensions",
                ));
            }
            if m.data().iter().any(|&v| v < T::zero()) {
                return Err(Error::parameter("variance maps must be nonnegative"));
            }
        }
        Ok(Burst {
            frames,
            variance_maps,
            ref_index,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn ref_index(&self) -> usize {
        self.ref_index
    }

    pub fn frames(&self) -> &[BayerFrame<T>] {
        &self.frames
    }

    pub fn variance_maps(&self) -> &[Grid<T>] {
        &self.variance_maps
    }

    pub fn frame(&self, t: usize) -> &BayerFrame<T> {
        &self.frames[t]
    }

    pub fn variance_map(&self, t: usize) -> &Grid<T> {
        &self.variance_maps[t]
    }

    pub fn reference(&self) -> &BayerFrame<T> {
        &self.frames[self.ref_index]
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayer::BayerPattern;

    #[test]
    fn rejects_single_frame_and_bad_ref() {
        let f = BayerFrame::new(Grid::filled(4, 4, 0.5_f64), BayerPattern::Rggb).unwrap();
        let m = Grid::filled(4, 4, 1e-4_f64);
        assert!(Burst::new(vec![f.clone()], vec![m.clone()], 0).is_err());
        assert!(Burst::new(vec![f.clone(), f.clone()], vec![m.clone(), m.clone()], 2).is_err());
        assert!(Burst::new(vec![f.clone(), f], vec![m.clone(), m], 1).is_ok());
    }

    #[test]
    fn rejects_mismatched_frames() {
        let a = BayerFrame::new(Grid::filled(4, 4, 0.5_f64), BayerPattern::Rggb).unwrap();
        let b = BayerFrame::new(Grid::filled(4, 6, 0.5_f64), BayerPattern::Rggb).unwrap();
        let c = BayerFrame::new(Grid::filled(4, 4, 0.5_f64), BayerPattern::Bggr).unwrap();
        let m4 = Grid::filled(4, 4, 0.0_f64);
        let m6 = Grid::filled(4, 6, 0.0_f64);
        assert!(Burst::new(vec![a.clone(), b], vec![m4.clone(), m6], 0).is_err());
        assert!(Burst::new(vec![a, c], vec![m4.clone(), m4], 0).is_err());
    }
}
