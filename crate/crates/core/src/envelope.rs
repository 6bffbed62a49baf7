//! Sampled lower convex envelope.
//!
//! The closed-form envelopes in [`crate::effective_density`] are what the
//! rest of the crate uses; this module is the numerical oracle they are
//! checked against.

use serde::Serialize;

use crate::error::{Error, Result};

/// Sampled function together with its lower convex envelope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeTable {
    pub grid: Vec<f64>,
    /// Raw sample values `f(z)`.
    pub raw: Vec<f64>,
    /// Envelope values `f**(z)`.
    pub values: Vec<f64>,
    /// Last grid point (from the left) at which the envelope still touches
    /// the function before the first affine stretch.
    pub kink: f64,
}

impl EnvelopeTable {
    /// Rows `(z, f(z), f**(z))`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.grid.iter().zip(&self.raw).zip(&self.values).map(|((&z, &f), &e)| (z, f, e))
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Lower convex envelope of `samples` (sorted by strictly increasing strain).
pub fn convex_envelope(samples: &[(f64, f64)]) -> Result<EnvelopeTable> {
    convex_envelope_with_anchors(samples, &[])
}

/// Lower convex envelope of `samples` where additional epigraph points
/// `anchors` (strictly to the right of the samples) take part in the hull
/// but are not reported. An anchor far out on the decaying tail stands in
/// for the behaviour of the function at `+inf`.
pub fn convex_envelope_with_anchors(samples: &[(f64, f64)], anchors: &[(f64, f64)]) -> Result<EnvelopeTable> {
    if samples.len() < 3 {
        return Err(Error::Input(format!("need at least 3 samples, got {}", samples.len())));
    }
    let last = samples[samples.len() - 1].0;
    for w in samples.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::Input(format!("strains not strictly increasing at {}", w[1].0)));
        }
    }
    if let Some(bad) = samples.iter().chain(anchors).find(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::Input(format!("non-finite sample ({}, {})", bad.0, bad.1)));
    }
    let mut prev = last;
    for a in anchors {
        if !(a.0 > prev) {
            return Err(Error::Input(format!("anchor at {} does not extend the samples", a.0)));
        }
        prev = a.0;
    }

    // Monotone-chain lower hull over samples followed by anchors.
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in samples.iter().chain(anchors) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }

    let mut values = Vec::with_capacity(samples.len());
    let mut seg = 0;
    for &(z, _) in samples {
        while seg + 2 < hull.len() && hull[seg + 1].0 < z {
            seg += 1;
        }
        let (a, b) = (hull[seg], hull[seg + 1]);
        let t = (z - a.0) / (b.0 - a.0);
        values.push(if z == a.0 {
            a.1
        } else if z == b.0 {
            b.1
        } else {
            a.1 + t * (b.1 - a.1)
        });
    }

    // The kink is the left end of the first hull edge that skips samples.
    let mut kink = samples[0].0;
    let mut k = 0;
    for w in hull.windows(2) {
        while k < samples.len() && samples[k].0 < w[0].0 {
            k += 1;
        }
        let next_sample = samples.get(k + 1).map(|s| s.0);
        if next_sample != Some(w[1].0) {
            kink = w[0].0;
            break;
        }
        kink = w[1].0;
    }

    Ok(EnvelopeTable {
        grid: samples.iter().map(|p| p.0).collect(),
        raw: samples.iter().map(|p| p.1).collect(),
        values,
        kink,
    })
}
