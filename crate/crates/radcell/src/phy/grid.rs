use std::io::Write;

use num_complex::Complex64;
use rand::Rng;

use super::numerology::OfdmGeometry;
use crate::constellation::{Constellation, Modulation};
use crate::error::{Error, Result};

/// OFDM symbols carrying cell-specific reference signals in a 14-symbol block.
pub const PILOT_SYMBOLS: [usize; 4] = [0, 4, 7, 11];
pub const PILOT_SPACING: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Pilot,
    Data,
}

/// Frequency shift of the pilot comb on a pilot-bearing symbol.
fn pilot_shift(symbol: usize) -> usize {
    if symbol % 7 == 0 {
        0
    } else {
        3
    }
}

pub fn is_pilot(symbol: usize, k: usize) -> bool {
    PILOT_SYMBOLS.contains(&(symbol % 14)) && k % PILOT_SPACING == pilot_shift(symbol % 14)
}

pub fn is_pilot_symbol(symbol: usize) -> bool {
    PILOT_SYMBOLS.contains(&(symbol % 14))
}

/// One block of the time-frequency lattice, stored symbol-major.
#[derive(Debug, Clone)]
pub struct ResourceGrid {
    pub n_symbols: usize,
    pub n_subcarriers: usize,
    pub modulation: Modulation,
    roles: Vec<Role>,
    symbols: Vec<Complex64>,
    /// Constellation index of each data RE; unused on pilots.
    indices: Vec<u8>,
}

impl ResourceGrid {
    /// Pilot layout with every RE zeroed.
    pub fn empty(geom: &OfdmGeometry, modulation: Modulation) -> Result<Self> {
        if geom.n_symbols % 14 != 0 {
            return Err(Error::Config(format!(
                "pilot layout needs 14-symbol blocks, got {}",
                geom.n_symbols
            )));
        }
        let (ns, nk) = (geom.n_symbols, geom.n_subcarriers());
        let roles = (0..ns)
            .flat_map(|n| (0..nk).map(move |k| if is_pilot(n, k) { Role::Pilot } else { Role::Data }))
            .collect();
        Ok(ResourceGrid {
            n_symbols: ns,
            n_subcarriers: nk,
            modulation,
            roles,
            symbols: vec![Complex64::new(0.0, 0.0); ns * nk],
            indices: vec![0; ns * nk],
        })
    }

    /// Redraws pilots (unit-power QPSK) and data (uniform over the constellation).
    pub fn fill<R: Rng + ?Sized>(&mut self, c: &Constellation, rng: &mut R) {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..self.symbols.len() {
            match self.roles[i] {
                Role::Pilot => {
                    let b: u8 = rng.random_range(0..4);
                    let re = if b & 1 == 0 { a } else { -a };
                    let im = if b & 2 == 0 { a } else { -a };
                    self.symbols[i] = Complex64::new(re, im);
                }
                Role::Data => {
                    let j = rng.random_range(0..c.order());
                    self.indices[i] = j as u8;
                    self.symbols[i] = c.point(j);
                }
            }
        }
    }

    /// Redraws the data REs from `c`, the constellation of `modulation`,
    /// leaving pilots untouched.
    pub fn fill_data<R: Rng + ?Sized>(&mut self, modulation: Modulation, c: &Constellation, rng: &mut R) {
        self.modulation = modulation;
        for i in 0..self.symbols.len() {
            if self.roles[i] == Role::Data {
                let j = rng.random_range(0..c.order());
                self.indices[i] = j as u8;
                self.symbols[i] = c.point(j);
            }
        }
    }

    pub fn index(&self, symbol: usize, k: usize) -> usize {
        symbol * self.n_subcarriers + k
    }

    pub fn role(&self, symbol: usize, k: usize) -> Role {
        self.roles[self.index(symbol, k)]
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn symbol(&self, symbol: usize, k: usize) -> Complex64 {
        self.symbols[self.index(symbol, k)]
    }

    pub fn set_data(&mut self, symbol: usize, k: usize, c: &Constellation, j: usize) {
        let i = self.index(symbol, k);
        self.roles[i] = Role::Data;
        self.indices[i] = j as u8;
        self.symbols[i] = c.point(j);
    }

    /// Constellation index of the data RE.
    pub fn data_index(&self, symbol: usize, k: usize) -> usize {
        self.indices[self.index(symbol, k)] as usize
    }

    pub fn n_pilots(&self) -> usize {
        self.roles.iter().filter(|r| **r == Role::Pilot).count()
    }

    pub fn pilot_fraction(&self) -> f64 {
        self.n_pilots() as f64 / self.roles.len() as f64
    }

    /// Symbols of the block without any pilot RE.
    pub fn non_pilot_symbols(&self) -> Vec<usize> {
        (0..self.n_symbols).filter(|&n| !is_pilot_symbol(n)).collect()
    }

    /// Writes a CSV dump: a comment header, then one record per RE with
    /// its role and the given per-RE complex values.
    pub fn write_dump<W: Write>(&self, out: &mut W, values: &[Complex64], seed: u64) -> Result<()> {
        if values.len() != self.symbols.len() {
            return Err(Error::Input("dump values do not match the grid size".into()));
        }
        writeln!(
            out,
            "# symbols={} subcarriers={} modulation={} seed={}",
            self.n_symbols,
            self.n_subcarriers,
            self.modulation.name(),
            seed
        )?;
        writeln!(out, "n,k,role,re,im,pilot")?;
        for n in 0..self.n_symbols {
            for k in 0..self.n_subcarriers {
                let i = self.index(n, k);
                let (role, flag) = match self.roles[i] {
                    Role::Pilot => ("pilot", 1),
                    Role::Data => ("data", 0),
                };
                writeln!(out, "{n},{k},{role},{:.9e},{:.9e},{flag}", values[i].re, values[i].im)?;
            }
        }
        Ok(())
    }
}

/// Builds a block with pilots and random data for the geometry.
pub fn build_grid<R: Rng + ?Sized>(geom: &OfdmGeometry, modulation: Modulation, rng: &mut R) -> Result<ResourceGrid> {
    let mut g = ResourceGrid::empty(geom, modulation)?;
    g.fill(&modulation.constellation(), rng);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ten_mhz_pilot_count() {
        let geom = OfdmGeometry::lte(50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = build_grid(&geom, Modulation::Qam16, &mut rng).unwrap();
        assert_eq!(g.n_pilots(), 400);
        assert!((g.pilot_fraction() - 400.0 / 8400.0).abs() < 1e-15);
        assert!(g.pilot_fraction() <= 0.05);
        for n in 0..14 {
            let count = (0..600).filter(|&k| g.role(n, k) == Role::Pilot).count();
            assert_eq!(count, if is_pilot_symbol(n) { 100 } else { 0 });
        }
    }

    #[test]
    fn pilots_have_unit_power_and_data_lies_on_the_constellation() {
        let geom = OfdmGeometry::lte(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = build_grid(&geom, Modulation::Qam64, &mut rng).unwrap();
        let c = Modulation::Qam64.constellation();
        for n in 0..14 {
            for k in 0..72 {
                let s = g.symbol(n, k);
                match g.role(n, k) {
                    Role::Pilot => assert!((s.norm() - 1.0).abs() < 1e-15),
                    Role::Data => assert_eq!(s, c.point(g.data_index(n, k))),
                }
            }
        }
    }

    #[test]
    fn pilot_comb_shifts_between_slot_halves() {
        assert!(is_pilot(0, 0) && is_pilot(7, 6) && is_pilot(4, 3) && is_pilot(11, 9));
        assert!(!is_pilot(4, 0) && !is_pilot(0, 3) && !is_pilot(5, 0));
        assert_eq!(
            ResourceGrid::empty(&OfdmGeometry::lte(6).unwrap(), Modulation::Qpsk)
                .unwrap()
                .non_pilot_symbols(),
            vec![1, 2, 3, 5, 6, 8, 9, 10, 12, 13]
        );
    }

    #[test]
    fn dump_has_one_record_per_re() {
        let geom = OfdmGeometry::lte(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = build_grid(&geom, Modulation::Qpsk, &mut rng).unwrap();
        let mut buf = Vec::new();
        g.write_dump(&mut buf, g.symbols(), 3).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2 + 14 * 72);
        assert!(text.starts_with("# symbols=14 subcarriers=72 modulation=qpsk seed=3"));
        assert!(g.write_dump(&mut Vec::new(), &[], 0).is_err());
    }
}
