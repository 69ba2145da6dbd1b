use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Magic bytes opening a binary time-series file.
pub const TIMESERIES_MAGIC: [u8; 8] = *b"XPMTS\x00\x01\x00";

/// Sampled photodetector output in detected photons per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Binary layout: 8 magic bytes, sample rate (f64 LE), then the samples
    /// (f64 LE) to end of stream.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&TIMESERIES_MAGIC)?;
        w.write_all(&self.sample_rate.to_le_bytes())?;
        for s in &self.samples {
            w.write_all(&s.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 16 || bytes[..8] != TIMESERIES_MAGIC {
            return Err(Error::Format("not a time-series file (bad magic)".into()));
        }
        if (bytes.len() - 16) % 8 != 0 {
            return Err(Error::Format("truncated time-series sample".into()));
        }
        let f = |chunk: &[u8]| f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        let sample_rate = f(&bytes[8..16]);
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::Format(format!("invalid sample rate {sample_rate}")));
        }
        let samples = bytes[16..].chunks_exact(8).map(f).collect();
        Ok(Self { sample_rate, samples })
    }

    /// Two-column CSV (`time_s,photons`), for short traces.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["time_s", "photons"])?;
        for (i, s) in self.samples.iter().enumerate() {
            let t = i as f64 / self.sample_rate;
            out.write_record([format!("{t:.16e}"), format!("{s:.16e}")])?;
        }
        out.flush()?;
        Ok(())
    }
}
