use crate::{Error, Result, Sample};

/// Contiguous run of samples tagged with the global index of its first
/// sample. Every receive-side timing decision is expressed in these indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    pub start_index: i64,
    pub samples: Vec<Sample>,
}

impl SampleStream {
    pub fn new(start_index: i64, samples: Vec<Sample>) -> Self {
        Self {
            start_index,
            samples,
        }
    }

    pub fn zeros(start_index: i64, len: usize) -> Self {
        Self::new(start_index, vec![Sample::new(0.0, 0.0); len])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// One past the global index of the last sample.
    pub fn end_index(&self) -> i64 {
        self.start_index + self.samples.len() as i64
    }

    /// Sample at a global index; zero outside the stream.
    pub fn at(&self, index: i64) -> Sample {
        let local = index - self.start_index;
        if local < 0 || local >= self.samples.len() as i64 {
            Sample::new(0.0, 0.0)
        } else {
            self.samples[local as usize]
        }
    }

    /// Borrow `len` samples starting at global index `start`.
    pub fn window(&self, start: i64, len: usize) -> Result<&[Sample]> {
        let local = start - self.start_index;
        if local < 0 || local as usize + len > self.samples.len() {
            return Err(Error::Truncation {
                start,
                needed: len,
                available: (self.end_index() - start).max(0) as usize,
            });
        }
        let local = local as usize;
        Ok(&self.samples[local..local + len])
    }

    pub fn all_finite(&self) -> bool {
        self.samples.iter().all(|s| s.re.is_finite() && s.im.is_finite())
    }

    /// Element-wise sum over the union of both index ranges.
    pub fn add(&self, other: &SampleStream) -> SampleStream {
        if other.is_empty() {
            return self.clone();
        }
        if self.is_empty() {
            return other.clone();
        }
        let start = self.start_index.min(other.start_index);
        let end = self.end_index().max(other.end_index());
        let mut out = vec![Sample::new(0.0, 0.0); (end - start) as usize];
        for (i, s) in self.samples.iter().enumerate() {
            out[(self.start_index - start) as usize + i] += s;
        }
        for (i, s) in other.samples.iter().enumerate() {
            out[(other.start_index - start) as usize + i] += s;
        }
        SampleStream::new(start, out)
    }

    pub fn scaled(&self, gain: Sample) -> SampleStream {
        SampleStream::new(
            self.start_index,
            self.samples.iter().map(|s| s * gain).collect(),
        )
    }

    /// Copy restricted to `[start, start + len)`, zero-filled where the
    /// stream has no samples.
    pub fn extract(&self, start: i64, len: usize) -> SampleStream {
        SampleStream::new(start, (0..len as i64).map(|i| self.at(start + i)).collect())
    }
}
