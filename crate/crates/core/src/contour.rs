//! Planar contours, uniform arc-length resampling and the average sample error.
//!
//! A contour of `K` samples is stored as one flattened vector
//! `[u1, v1, u2, v2, ..., uK, vK]` of length `2K`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DVector, Point2};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Contour<T: Real> {
    flat: DVector<T>,
}

impl<T: Real> Contour<T> {
    pub fn from_points(points: &[Point2<T>]) -> Result<Self> {
        let flat = DVector::from_iterator(points.len() * 2, points.iter().flat_map(|p| [p.x, p.y]));
        Self::from_flat(flat)
    }

    /// Builds a contour from an interleaved `[u1, v1, ...]` vector.
    pub fn from_flat(flat: DVector<T>) -> Result<Self> {
        if !flat.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch { expected: flat.len() + 1, got: flat.len() });
        }
        if flat.len() < 4 {
            return Err(Error::TooFewPoints(flat.len() / 2));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        Ok(Self { flat })
    }

    pub fn from_slice(flat: &[T]) -> Result<Self> {
        Self::from_flat(DVector::from_column_slice(flat))
    }

    /// Number of samples `K`.
    pub fn len(&self) -> usize {
        self.flat.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    /// The flattened `2K` vector.
    pub fn flat(&self) -> &DVector<T> {
        &self.flat
    }

    pub fn into_flat(self) -> DVector<T> {
        self.flat
    }

    pub fn point(&self, j: usize) -> Point2<T> {
        Point2::new(self.flat[2 * j], self.flat[2 * j + 1])
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = Point2<T>> + '_ {
        (0..self.len()).map(move |j| self.point(j))
    }

    /// Applies `f` to every sample, preserving order.
    pub fn map_points(&self, mut f: impl FnMut(Point2<T>) -> Point2<T>) -> Self {
        let flat = DVector::from_iterator(self.flat.len(), self.points().flat_map(|p| {
            let q = f(p);
            [q.x, q.y]
        }));
        Self { flat }
    }

    /// Total polyline length through the samples.
    pub fn polyline_length(&self) -> T {
        polyline_length(&self.points().collect::<Vec<_>>())
    }

    fn check_comparable(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::IncomparableContours { left: self.len(), right: other.len() });
        }
        Ok(())
    }

    /// Reads a contour from CSV with header `u,v`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "u" || &headers[1] != "v" {
            return Err(Error::InvalidParameter(format!(
                "contour CSV header must be `u,v`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut flat = Vec::new();
        for record in rdr.records() {
            let record = record?;
            for field in record.iter() {
                let value: f64 = field
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("not a number: `{field}`")))?;
                flat.push(T::lit(value));
            }
        }
        Self::from_slice(&flat)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["u", "v"])?;
        for p in self.points() {
            wtr.write_record([format_scalar(p.x), format_scalar(p.y)])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Shortest round-trip decimal representation.
pub(crate) fn format_scalar<T: Real>(value: T) -> String {
    format!("{}", value.to_f64_lossy())
}

fn polyline_length<T: Real>(points: &[Point2<T>]) -> T {
    points.windows(2).fold(T::zero(), |acc, w| acc + (w[1] - w[0]).norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleParams<T: Real> {
    pub target_count: usize,
    /// Endpoint tolerance; `None` uses `1e-6 * mu`.
    pub epsilon: Option<T>,
}

impl<T: Real> ResampleParams<T> {
    pub fn new(target_count: usize) -> Self {
        Self { target_count, epsilon: None }
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Self {
        self.epsilon = Some(epsilon);
        self
    }
}

/// Output of [`resample_uniform`].
#[derive(Debug, Clone, PartialEq)]
pub struct Resampled<T: Real> {
    /// The `K` samples at arc lengths `0, mu, ..., (K-1) mu`.
    pub contour: Contour<T>,
    /// The curve end point, present when the trailing residual check fired.
    pub trailing: Option<Point2<T>>,
    /// Sample spacing `mu = length / K`.
    pub spacing: T,
}

impl<T: Real> Resampled<T> {
    pub fn trailing_appended(&self) -> bool {
        self.trailing.is_some()
    }

    /// All emitted samples, including the trailing end point when appended.
    pub fn all_points(&self) -> Vec<Point2<T>> {
        let mut pts: Vec<_> = self.contour.points().collect();
        pts.extend(self.trailing);
        pts
    }
}

/// Resamples an ordered open polyline into `K` points with uniform arc-length spacing.
///
/// Walks the input accumulating segment lengths and emits a new sample each time
/// the accumulated distance reaches `mu = length / K`, interpolating inside the
/// current segment. The end of the curve lies at arc length `K mu`; it is reported
/// separately in [`Resampled::trailing`] when the residual distance after the walk
/// is within `epsilon` of `mu`.
pub fn resample_uniform<T: Real>(input: &[Point2<T>], params: ResampleParams<T>) -> Result<Resampled<T>> {
    let n = input.len();
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    if params.target_count < 2 {
        return Err(Error::InvalidParameter(format!(
            "target sample count must be >= 2, got {}",
            params.target_count
        )));
    }
    if input.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::NonFiniteCoordinate);
    }
    let length = polyline_length(input);
    if length <= T::zero() {
        return Err(Error::ZeroLengthCurve);
    }
    let k = params.target_count;
    let mu = length / T::from_usize(k).expect("sample count fits scalar");
    let epsilon = match params.epsilon {
        Some(e) if e > T::zero() => e,
        Some(_) => return Err(Error::InvalidParameter("epsilon must be positive".into())),
        None => mu * T::lit(1e-6),
    };

    let mut out: Vec<Point2<T>> = Vec::with_capacity(k + 1);
    let mut curr = input[0];
    out.push(curr);
    let mut dist = T::zero();
    let mut l = 1;
    while l < n {
        let next = input[l];
        let d = (next - curr).norm();
        if d + dist <= mu {
            dist += d;
            curr = next;
            l += 1;
        } else {
            curr += (next - curr) * ((mu - dist) / d);
            out.push(curr);
            dist = T::zero();
        }
    }
    let mut trailing = None;
    if (mu - dist).abs() < epsilon {
        trailing = Some(curr);
    }
    // Rounding can place the end point inside the walk instead of the trailing check.
    if out.len() > k {
        trailing = trailing.or(Some(out[k]));
        out.truncate(k);
    }
    if out.len() < k {
        return Err(Error::InvalidParameter(format!(
            "resampling produced {} of {k} samples",
            out.len()
        )));
    }
    Ok(Resampled { contour: Contour::from_points(&out)?, trailing, spacing: mu })
}

/// `||current - target||_2 / (2K)`.
pub fn average_sample_error<T: Real>(current: &Contour<T>, target: &Contour<T>) -> Result<T> {
    current.check_comparable(target)?;
    let two_k = T::from_usize(current.flat.len()).expect("contour size fits scalar");
    Ok((&current.flat - &target.flat).norm() / two_k)
}

/// `current + fraction * (target - current)`, componentwise.
pub fn interpolate_toward<T: Real>(current: &Contour<T>, target: &Contour<T>, fraction: T) -> Result<Contour<T>> {
    current.check_comparable(target)?;
    if !(fraction > T::zero() && fraction <= T::one()) {
        return Err(Error::InvalidParameter(format!("fraction must lie in (0, 1], got {fraction}")));
    }
    let flat = &current.flat + (&target.flat - &current.flat) * fraction;
    Ok(Contour { flat })
}
