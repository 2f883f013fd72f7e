//! Fair Sampling baseline: resample the four (sensitive, label) cells so the
//! label and the sensitive attribute become independent in training data.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::Result;

/// Resamples each (a, y) cell to round(n_a·n_·y / n) rows: seeded
/// subsampling without replacement when shrinking, original rows plus
/// with-replacement draws when growing. After resampling the per-group base
/// rates differ by at most 2/min(n_1·, n_0·) (rounding slack).
pub fn fair_sample(ds: &Dataset, seed: u64) -> Result<Dataset> {
    ds.require_all_cells()?;
    let counts = ds.cell_counts();
    let n = ds.n() as f64;
    // cell order: (1,1), (1,0), (0,1), (0,0)
    let group_mass = [
        counts[0] + counts[1],
        counts[0] + counts[1],
        counts[2] + counts[3],
        counts[2] + counts[3],
    ];
    let label_mass = [
        counts[0] + counts[2],
        counts[1] + counts[3],
        counts[0] + counts[2],
        counts[1] + counts[3],
    ];

    let mut cells: [Vec<usize>; 4] = Default::default();
    for (i, (&y, &a)) in ds.labels().iter().zip(ds.sensitive()).enumerate() {
        let idx = match (a, y) {
            (1, 1) => 0,
            (1, 0) => 1,
            (0, 1) => 2,
            _ => 3,
        };
        cells[idx].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (cell_idx, rows) in cells.iter().enumerate() {
        // round half up
        let target =
            (group_mass[cell_idx] as f64 * label_mass[cell_idx] as f64 / n + 0.5).floor() as usize;
        if target == rows.len() {
            out.extend_from_slice(rows);
        } else if target < rows.len() {
            let mut shuffled = rows.clone();
            shuffled.shuffle(&mut rng);
            shuffled.truncate(target);
            out.extend_from_slice(&shuffled);
        } else {
            out.extend_from_slice(rows);
            for _ in 0..target - rows.len() {
                out.push(rows[rng.random_range(0..rows.len())]);
            }
        }
    }
    ds.subset(&out)
}
