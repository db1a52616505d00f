use num_complex::Complex64;

use super::{qam_map, PhyConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Pilot,
    User(u32),
    Null,
}

/// Resource blocks owned by one user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserAllocation {
    pub user_id: u32,
    pub blocks: Vec<usize>,
}

impl UserAllocation {
    pub fn new(user_id: u32, mut blocks: Vec<usize>) -> Self {
        blocks.sort_unstable();
        Self { user_id, blocks }
    }

    /// `users` equal contiguous slices of `rb_count` blocks, ids from 1.
    /// Leftover blocks stay unassigned.
    pub fn split_equal(rb_count: usize, users: usize) -> Vec<Self> {
        let per = rb_count / users.max(1);
        (0..users)
            .map(|u| Self::new(u as u32 + 1, (u * per..(u + 1) * per).collect()))
            .collect()
    }

    pub fn data_cells(&self, config: &PhyConfig) -> usize {
        self.blocks.len() * config.data_cells_per_rb()
    }

    pub fn coded_bits(&self, config: &PhyConfig) -> usize {
        self.data_cells(config) * config.modulation.bits_per_symbol()
    }

    /// Grid indices of this user's data cells in bit order: blocks
    /// ascending, then subcarrier, then symbol.
    pub fn cell_indices(&self, config: &PhyConfig) -> Vec<usize> {
        let occ = config.occupied_subcarriers();
        let mut out = Vec::with_capacity(self.data_cells(config));
        for &b in &self.blocks {
            for sc in b * config.subcarriers_per_rb..(b + 1) * config.subcarriers_per_rb {
                for sym in config.data_symbols() {
                    out.push(sym * occ + sc);
                }
            }
        }
        out
    }
}

pub fn validate_allocations(config: &PhyConfig, allocations: &[UserAllocation]) -> Result<()> {
    let mut owner = vec![None; config.rb_count];
    for (i, a) in allocations.iter().enumerate() {
        if allocations[..i].iter().any(|o| o.user_id == a.user_id) {
            return Err(Error::invalid("allocation", format!("user {} listed twice", a.user_id)));
        }
        if a.blocks.is_empty() {
            return Err(Error::invalid(
                "allocation",
                format!("user {} owns no resource blocks", a.user_id),
            ));
        }
        for &b in &a.blocks {
            let slot = owner
                .get_mut(b)
                .ok_or_else(|| Error::invalid("allocation", format!("block {b} outside 0..{}", config.rb_count)))?;
            if let Some(prev) = slot.replace(a.user_id) {
                return Err(Error::invalid(
                    "allocation",
                    format!("block {b} assigned to users {prev} and {}", a.user_id),
                ));
            }
        }
    }
    Ok(())
}

/// Frequency-domain frame, `symbols × occupied` cells stored symbol-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    pub occupied: usize,
    pub symbols: usize,
    pub cells: Vec<Complex64>,
    pub kinds: Vec<CellKind>,
}

impl ResourceGrid {
    pub fn empty(config: &PhyConfig) -> Self {
        let n = config.occupied_subcarriers() * config.symbols_per_rb;
        Self {
            occupied: config.occupied_subcarriers(),
            symbols: config.symbols_per_rb,
            cells: vec![Complex64::new(0.0, 0.0); n],
            kinds: vec![CellKind::Null; n],
        }
    }

    pub fn symbol(&self, s: usize) -> &[Complex64] {
        &self.cells[s * self.occupied..(s + 1) * self.occupied]
    }

    pub fn count(&self, kind: CellKind) -> usize {
        self.kinds.iter().filter(|&&k| k == kind).count()
    }
}

/// Place pilots and each user's modulated coded bits. `coded[i]` belongs to
/// `allocations[i]` and must fill its cells exactly.
pub fn build_grid(config: &PhyConfig, allocations: &[UserAllocation], coded: &[Vec<u8>]) -> Result<ResourceGrid> {
    config.validate()?;
    validate_allocations(config, allocations)?;
    if coded.len() != allocations.len() {
        return Err(Error::LengthMismatch {
            what: "per-user bit streams",
            expected: allocations.len(),
            actual: coded.len(),
        });
    }
    let mut grid = ResourceGrid::empty(config);
    let occ = grid.occupied;
    let pilots = config.pilot_values()?;
    for &s in &config.pilot.symbols {
        grid.cells[s * occ..(s + 1) * occ].copy_from_slice(&pilots);
        grid.kinds[s * occ..(s + 1) * occ].fill(CellKind::Pilot);
    }
    for (alloc, bits) in allocations.iter().zip(coded) {
        let want = alloc.coded_bits(config);
        if bits.len() != want {
            return Err(Error::LengthMismatch {
                what: "coded bits for user",
                expected: want,
                actual: bits.len(),
            });
        }
        let syms = qam_map(bits, config.modulation)?;
        for (idx, sym) in alloc.cell_indices(config).into_iter().zip(syms) {
            grid.cells[idx] = sym;
            grid.kinds[idx] = CellKind::User(alloc.user_id);
        }
    }
    Ok(grid)
}
