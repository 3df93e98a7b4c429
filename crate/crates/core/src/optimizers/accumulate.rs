use crate::error::{Error, Result};
use crate::linalg::ParamVector;

/// Forms a size-`B` batch gradient from micro-batches of size `m`.
///
/// Micro-gradients are passed as means over their own samples; the running
/// total keeps the per-sample sum so the emitted value is the exact mean
/// over all `B` samples.
#[derive(Clone, Debug)]
pub struct GradAccumulator {
    micro_batch: usize,
    target_batch: usize,
    sum: Option<ParamVector>,
    samples: usize,
    count: usize,
}

impl GradAccumulator {
    pub fn new(micro_batch: usize, target_batch: usize) -> Result<Self> {
        if micro_batch == 0 || target_batch == 0 {
            return Err(Error::InvalidArgument(
                "batch sizes must be positive".into(),
            ));
        }
        if !target_batch.is_multiple_of(micro_batch) {
            return Err(Error::InvalidArgument(format!(
                "micro batch {micro_batch} does not divide batch {target_batch}"
            )));
        }
        Ok(Self {
            micro_batch,
            target_batch,
            sum: None,
            samples: 0,
            count: 0,
        })
    }

    pub fn micro_batch(&self) -> usize {
        self.micro_batch
    }

    pub fn target_batch(&self) -> usize {
        self.target_batch
    }

    pub fn micro_batches_per_step(&self) -> usize {
        self.target_batch / self.micro_batch
    }

    /// Number of micro-batches absorbed since the last emission.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Adds a micro-batch mean gradient over `micro_batch` samples.
    pub fn accumulate(&mut self, micro_g: &ParamVector) -> Result<Option<ParamVector>> {
        self.accumulate_samples(micro_g, self.micro_batch)
    }

    /// Adds a mean gradient over `samples` samples; emits the batch mean once
    /// `target_batch` samples have been absorbed.
    pub fn accumulate_samples(
        &mut self,
        micro_g: &ParamVector,
        samples: usize,
    ) -> Result<Option<ParamVector>> {
        if self.samples + samples > self.target_batch {
            return Err(Error::AccumulatorOverfill {
                have: self.samples,
                adding: samples,
                target: self.target_batch,
            });
        }
        match &mut self.sum {
            None => self.sum = Some(micro_g.scaled(samples as f64)),
            Some(sum) => sum.axpy_in_place(samples as f64, micro_g)?,
        }
        self.samples += samples;
        self.count += 1;
        if self.samples < self.target_batch {
            return Ok(None);
        }
        let mut mean = self.sum.take().expect("sum set above");
        if self.target_batch > 1 {
            mean.scale_in_place(1.0 / self.target_batch as f64);
        }
        self.samples = 0;
        self.count = 0;
        Ok(Some(mean))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_when_single_micro_batch() {
        let mut acc = GradAccumulator::new(8, 8).unwrap();
        let g = ParamVector::new(vec![0.3, -1.7, 2.5]);
        assert_eq!(acc.accumulate(&g).unwrap(), Some(g));
    }

    #[test]
    fn mean_of_equal_micro_gradients() {
        let mut acc = GradAccumulator::new(2, 8).unwrap();
        let g = ParamVector::new(vec![1.5, -2.0]);
        for _ in 0..3 {
            assert_eq!(acc.accumulate(&g).unwrap(), None);
        }
        assert_eq!(acc.count(), 3);
        assert_eq!(acc.accumulate(&g).unwrap(), Some(g));
        assert_eq!(acc.count(), 0);
    }

    #[test]
    fn overfill_is_rejected() {
        let mut acc = GradAccumulator::new(2, 4).unwrap();
        let g = ParamVector::new(vec![1.0]);
        acc.accumulate_samples(&g, 3).unwrap();
        assert!(matches!(
            acc.accumulate_samples(&g, 2),
            Err(Error::AccumulatorOverfill { .. })
        ));
    }

    #[test]
    fn divisibility_is_required() {
        assert!(GradAccumulator::new(3, 8).is_err());
        assert!(GradAccumulator::new(0, 8).is_err());
    }
}
