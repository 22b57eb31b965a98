use bbols_core::RecoveryResult;

/// Block energy below this fraction of `‖x̂‖₂` counts as unoccupied.
pub const OCCUPANCY_REL_THRESHOLD: f64 = 1e-8;

/// Per-band occupancy derived from one recovered spectrum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyReport {
    /// `occupied[b]` for every block b.
    pub occupied: Vec<bool>,
}

impl OccupancyReport {
    /// Bands available to secondary users.
    pub fn free_blocks(&self) -> Vec<usize> {
        (0..self.occupied.len()).filter(|&b| !self.occupied[b]).collect()
    }

    pub fn occupied_blocks(&self) -> Vec<usize> {
        (0..self.occupied.len()).filter(|&b| self.occupied[b]).collect()
    }
}

/// A block is occupied when it was selected and carries recovered energy
/// above the threshold. Scalar selections are grouped into `n_blocks` bands.
pub fn occupancy_from_recovery(result: &RecoveryResult, n_blocks: usize) -> OccupancyReport {
    let n = result.x_hat.len();
    let mut occupied = vec![false; n_blocks];
    if n_blocks == 0 || n % n_blocks != 0 {
        return OccupancyReport { occupied };
    }
    let d = n / n_blocks;
    let total = result.x_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
    let threshold = OCCUPANCY_REL_THRESHOLD * total;
    for col in result.selected_columns() {
        let band = col / d;
        let energy = result.x_hat[band * d..(band + 1) * d].iter().map(|v| v * v).sum::<f64>().sqrt();
        if total > 0.0 && energy > threshold {
            occupied[band] = true;
        }
    }
    OccupancyReport { occupied }
}
