use rand::Rng;

use crate::error::{Error, Result};
use crate::readback::{MemoryGeometry, ShapeDistribution, ShapeSignature, UpsetBit};

/// Draws shapes from a [`ShapeDistribution`] by inverse CDF over its
/// entries.
#[derive(Debug, Clone)]
pub struct ShapeSampler {
    shapes: Vec<ShapeSignature>,
    cumulative: Vec<f64>,
    multi_bit_frame: Vec<bool>,
}

impl ShapeSampler {
    pub fn new(dist: &ShapeDistribution) -> Result<Self> {
        let total = dist.total_probability();
        if dist.entries.is_empty() || !(total > 0.0) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "shape distribution must be normalized (total {total})"
            )));
        }
        let shapes: Vec<ShapeSignature> = dist.entries.iter().map(|e| e.shape.clone()).collect();
        let mut acc = 0.0;
        let cumulative = dist
            .entries
            .iter()
            .map(|e| {
                acc += e.probability / total;
                acc
            })
            .collect();
        let multi_bit_frame = shapes.iter().map(|s| s.max_bits_per_frame() > 1).collect();
        Ok(Self {
            shapes,
            cumulative,
            multi_bit_frame,
        })
    }

    /// Same probabilities with every shape interleaved so that no two bits
    /// share a frame.
    pub fn interleaved(&self) -> Self {
        let shapes: Vec<ShapeSignature> = self
            .shapes
            .iter()
            .map(ShapeSignature::interleaved)
            .collect();
        Self {
            multi_bit_frame: vec![false; shapes.len()],
            shapes,
            cumulative: self.cumulative.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn shape(&self, index: usize) -> &ShapeSignature {
        &self.shapes[index]
    }

    /// True if shape `index` puts two or more bits in one frame.
    pub fn has_multi_bit_frame(&self, index: usize) -> bool {
        self.multi_bit_frame[index]
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.shapes.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &ShapeSignature {
        &self.shapes[self.sample_index(rng)]
    }
}

/// Place `shape` at a uniformly random anchor among the anchors that keep
/// every bit inside `geometry`.
pub fn place_upset<R: Rng + ?Sized>(
    shape: &ShapeSignature,
    geometry: &MemoryGeometry,
    cycle: u32,
    rng: &mut R,
) -> Result<Vec<UpsetBit>> {
    if shape.frame_extent > geometry.frame_count || shape.bit_extent > geometry.bits_per_frame {
        return Err(Error::ShapeTooLarge {
            frame_extent: shape.frame_extent,
            bit_extent: shape.bit_extent,
            frames: geometry.frame_count,
            bits_per_frame: geometry.bits_per_frame,
        });
    }
    let f0 = rng.gen_range(0..=geometry.frame_count - shape.frame_extent);
    let b0 = rng.gen_range(0..=geometry.bits_per_frame - shape.bit_extent);
    Ok(shape
        .offsets
        .iter()
        .map(|&(df, db)| UpsetBit::new(cycle, f0 + df, b0 + db))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::readback::MemoryKind;
    use crate::sim::trial_rng;

    #[test]
    fn sbu_places_one_bit() {
        let g = MemoryGeometry::new("CRAM", MemoryKind::Cram, 10, 10).unwrap();
        let bits = place_upset(&ShapeSignature::single_bit(), &g, 0, &mut trial_rng(1, 0)).unwrap();
        assert_eq!(bits.len(), 1);
    }

    #[test]
    fn anchors_stay_in_bounds() {
        // a two-frame shape on a two-frame device can only anchor at frame 0
        let g = MemoryGeometry::new("CRAM", MemoryKind::Cram, 2, 4).unwrap();
        let pair = ShapeSignature::from_positions([(0, 0), (1, 0)]);
        let mut rng = trial_rng(2, 0);
        for _ in 0..1000 {
            let bits = place_upset(&pair, &g, 0, &mut rng).unwrap();
            assert_eq!((bits[0].frame, bits[1].frame), (0, 1));
            assert!(bits.iter().all(|b| g.contains(b.frame, b.bit)));
        }
        let wide = ShapeSignature::from_positions([(0, 0), (1, 0), (2, 0)]);
        assert!(matches!(
            place_upset(&wide, &g, 0, &mut rng),
            Err(Error::ShapeTooLarge { .. })
        ));
    }

    #[test]
    fn anchors_are_uniform() {
        let g = MemoryGeometry::new("CRAM", MemoryKind::Cram, 5, 1).unwrap();
        let pair = ShapeSignature::from_positions([(0, 0), (1, 0)]);
        let mut rng = trial_rng(3, 0);
        let mut hist = [0u32; 4];
        for _ in 0..40_000 {
            hist[place_upset(&pair, &g, 0, &mut rng).unwrap()[0].frame as usize] += 1;
        }
        // each anchor has p = 1/4, sd of count ~ 87
        assert!(
            hist.iter().all(|&h| (h as i64 - 10_000).abs() < 400),
            "{hist:?}"
        );
    }

    #[test]
    fn sampler_rejects_unnormalized() {
        let mut d = ShapeDistribution::reference_cram();
        d.entries[0].probability = 0.5;
        assert!(ShapeSampler::new(&d).is_err());
    }

    #[test]
    fn interleaved_sampler_has_no_multi_bit_frames() {
        let d = ShapeDistribution::from_weights(vec![
            (ShapeSignature::single_bit(), 1.0),
            (ShapeSignature::from_positions([(0, 0), (0, 1)]), 1.0),
        ])
        .unwrap();
        let s = ShapeSampler::new(&d).unwrap();
        assert!(s.has_multi_bit_frame(1));
        let i = s.interleaved();
        assert!(
            (0..i.len()).all(|k| !i.has_multi_bit_frame(k) && i.shape(k).max_bits_per_frame() == 1)
        );
    }
}
