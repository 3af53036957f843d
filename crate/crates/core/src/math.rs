//! Transcendental functions routed through `libm` so results are identical
//! with and without `std` (and across platforms, which keeps golden test
//! values portable). `sqrt` is IEEE-exact everywhere but goes through the same
//! door for uniformity.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}
