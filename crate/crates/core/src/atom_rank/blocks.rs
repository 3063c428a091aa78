//! Upper bounds from blocks of zeros shared by all coefficients.

use super::RankError;
use crate::pencil::Pencil;

/// Largest dimension for which [`find_zero_block`] enumerates row subsets.
pub const MAX_BLOCK_SEARCH_DIM: usize = 12;

/// A `rows × cols` block on which every coefficient vanishes (0-based indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroBlock {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

fn check_indices(indices: &[usize], dim: usize, what: &str) -> Result<(), RankError> {
    let mut seen = vec![false; dim];
    for &i in indices {
        if i >= dim {
            return Err(RankError::InvalidParameter(format!(
                "{what} index {i} out of range for dimension {dim}"
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(RankError::InvalidParameter(format!("{what} index {i} repeated")));
        }
    }
    Ok(())
}

/// `2N − |rows| − |cols|`, after checking that every coefficient (and the mean)
/// vanishes on `rows × cols`.
pub fn zero_block_upper_bound(p: &Pencil, rows: &[usize], cols: &[usize]) -> Result<usize, RankError> {
    let n = p.dim();
    check_indices(rows, n, "row")?;
    check_indices(cols, n, "column")?;
    for (variable, a) in p.coefficient_matrices().into_iter().enumerate() {
        for &i in rows {
            for &j in cols {
                if a[(i, j)].norm() != 0.0 {
                    return Err(RankError::BlockNotZero {
                        variable,
                        row: i,
                        col: j,
                    });
                }
            }
        }
    }
    Ok((2 * n).saturating_sub(rows.len() + cols.len()).min(n))
}

/// Zero block maximizing `|rows| + |cols|`, by enumeration of row subsets.
pub fn find_zero_block(p: &Pencil) -> Result<ZeroBlock, RankError> {
    let n = p.dim();
    if n > MAX_BLOCK_SEARCH_DIM {
        return Err(RankError::BlockSearchTooLarge { dim: n });
    }
    let coeffs = p.coefficient_matrices();
    // Bit j of zero_cols[i] is set iff every coefficient vanishes at (i, j).
    let zero_cols: Vec<u32> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| coeffs.iter().all(|a| a[(i, j)].norm() == 0.0))
                .fold(0u32, |mask, j| mask | (1 << j))
        })
        .collect();
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut best = (0u32, full, n as u32);
    for row_mask in 1u32..=full {
        let cols = (0..n)
            .filter(|&i| row_mask & (1 << i) != 0)
            .fold(full, |acc, i| acc & zero_cols[i]);
        if cols == 0 {
            continue;
        }
        let size = row_mask.count_ones() + cols.count_ones();
        if size > best.2 {
            best = (row_mask, cols, size);
        }
    }
    let bits = |mask: u32| (0..n).filter(|&i| mask & (1 << i) != 0).collect::<Vec<_>>();
    Ok(ZeroBlock {
        rows: bits(best.0),
        cols: bits(best.1),
    })
}
