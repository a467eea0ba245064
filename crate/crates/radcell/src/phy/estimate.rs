//! Pilot-based channel and noise estimation.

use num_complex::Complex64;

use super::grid::{ResourceGrid, Role, PILOT_SYMBOLS};
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationMode {
    /// True channel response.
    Genie,
    /// Least squares on pilots, linear in frequency then in time.
    LsInterp,
}

/// Per-RE channel estimates for a block.
pub fn estimate_channel(
    grid: &ResourceGrid,
    received: &[Complex64],
    truth: &ChannelRealization,
    mode: EstimationMode,
) -> Result<Vec<Complex64>> {
    if received.len() != grid.symbols().len() || truth.h.len() != received.len() {
        return Err(Error::Input("received grid, channel and layout sizes differ".into()));
    }
    match mode {
        EstimationMode::Genie => Ok(truth.h.clone()),
        EstimationMode::LsInterp => ls_interp(grid, received),
    }
}

fn ls_interp(grid: &ResourceGrid, received: &[Complex64]) -> Result<Vec<Complex64>> {
    let (ns, nk) = (grid.n_symbols, grid.n_subcarriers);
    let pilot_rows: Vec<usize> = (0..ns).filter(|n| PILOT_SYMBOLS.contains(&(n % 14))).collect();
    if pilot_rows.is_empty() {
        return Err(Error::Input("block carries no pilots".into()));
    }
    // Frequency interpolation on each pilot-bearing symbol.
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(pilot_rows.len());
    for &n in &pilot_rows {
        let pts: Vec<(usize, Complex64)> = (0..nk)
            .filter(|&k| grid.role(n, k) == Role::Pilot)
            .map(|k| (k, received[grid.index(n, k)] / grid.symbol(n, k)))
            .collect();
        rows.push(interp_line(&pts, nk));
    }
    // Time interpolation between pilot symbols, holding beyond the ends.
    let mut out = vec![Complex64::new(0.0, 0.0); ns * nk];
    for n in 0..ns {
        let pos = pilot_rows.partition_point(|&p| p < n);
        let last = pilot_rows.len() - 1;
        let (a, b) = if pos <= last && pilot_rows[pos] == n {
            (pos, pos)
        } else if pos == 0 {
            (0, 0)
        } else if pos > last {
            (last, last)
        } else {
            (pos - 1, pos)
        };
        let w = if a == b {
            0.0
        } else {
            (n - pilot_rows[a]) as f64 / (pilot_rows[b] - pilot_rows[a]) as f64
        };
        for k in 0..nk {
            out[n * nk + k] = rows[a][k] * (1.0 - w) + rows[b][k] * w;
        }
    }
    Ok(out)
}

/// Linear interpolation through `(position, value)` pairs sorted by position,
/// with linear extrapolation from the outermost pairs.
fn interp_line(pts: &[(usize, Complex64)], len: usize) -> Vec<Complex64> {
    if pts.len() == 1 {
        return vec![pts[0].1; len];
    }
    let mut out = Vec::with_capacity(len);
    let mut seg = 0;
    for k in 0..len {
        while seg + 2 < pts.len() && k > pts[seg + 1].0 {
            seg += 1;
        }
        let (k0, v0) = pts[seg];
        let (k1, v1) = pts[seg + 1];
        let t = (k as f64 - k0 as f64) / (k1 as f64 - k0 as f64);
        out.push(v0 + (v1 - v0) * t);
    }
    out
}

/// Block noise-variance estimate from the pilots.
///
/// With genie estimates this is the mean pilot residual power; with LS
/// estimates it is half the mean squared difference of neighbouring pilot
/// LS values on each pilot symbol. Interference on pilots inflates both.
pub fn estimate_noise(
    grid: &ResourceGrid,
    received: &[Complex64],
    h_est: &[Complex64],
    mode: EstimationMode,
) -> Result<f64> {
    let (ns, nk) = (grid.n_symbols, grid.n_subcarriers);
    let mut acc = 0.0;
    let mut count = 0usize;
    match mode {
        EstimationMode::Genie => {
            for (i, role) in grid.roles().iter().enumerate() {
                if *role == Role::Pilot {
                    acc += (received[i] - h_est[i] * grid.symbols()[i]).norm_sqr();
                    count += 1;
                }
            }
        }
        EstimationMode::LsInterp => {
            for n in 0..ns {
                let mut prev: Option<Complex64> = None;
                for k in 0..nk {
                    if grid.role(n, k) != Role::Pilot {
                        continue;
                    }
                    let i = grid.index(n, k);
                    let ls = received[i] / grid.symbols()[i];
                    if let Some(p) = prev {
                        acc += 0.5 * (ls - p).norm_sqr();
                        count += 1;
                    }
                    prev = Some(ls);
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::Input("block carries no pilots".into()));
    }
    Ok(acc / count as f64)
}
