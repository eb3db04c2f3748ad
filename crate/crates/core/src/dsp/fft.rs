use std::cell::RefCell;

use rustfft::FftPlannerScalar;

use crate::{Error, Result, Sample};

// Scalar planner: SIMD kernels are selected per CPU and can change the last
// bits of a result, which would break cross-platform golden vectors.
thread_local! {
    static PLANNER: RefCell<FftPlannerScalar<f64>> = RefCell::new(FftPlannerScalar::new());
}

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

fn check(len: usize, size: usize) -> Result<()> {
    if !is_power_of_two(size) {
        return Err(Error::Config(format!("DFT size {size} is not a power of two")));
    }
    if len != size {
        return Err(Error::Config(format!(
            "DFT input has {len} samples, size is {size}"
        )));
    }
    Ok(())
}

/// Unnormalized forward DFT, `X[k] = sum_n x[n] e^{-j 2 pi k n / N}`.
pub fn dft_in_place(buf: &mut [Sample]) -> Result<()> {
    check(buf.len(), buf.len())?;
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
    Ok(())
}

/// Inverse DFT including the `1/N` factor.
pub fn idft_in_place(buf: &mut [Sample]) -> Result<()> {
    check(buf.len(), buf.len())?;
    let n = buf.len();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    fft.process(buf);
    let scale = 1.0 / n as f64;
    for s in buf.iter_mut() {
        *s *= scale;
    }
    Ok(())
}

pub fn dft(x: &[Sample], size: usize) -> Result<Vec<Sample>> {
    check(x.len(), size)?;
    let mut buf = x.to_vec();
    dft_in_place(&mut buf)?;
    Ok(buf)
}

pub fn idft(x: &[Sample], size: usize) -> Result<Vec<Sample>> {
    check(x.len(), size)?;
    let mut buf = x.to_vec();
    idft_in_place(&mut buf)?;
    Ok(buf)
}
