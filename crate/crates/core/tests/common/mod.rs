//! Helpers shared by the integration suites.

use quow::exact::ExactSum;
use quow::transport::Measure;

/// Minimum cost over all integer tables with the given margins, scaled back
/// by `total`. Recursive row-by-row composition enumeration with column
/// capacity tracking; no LP machinery involved, so on dyadic instances the
/// result is an independent ground truth for the transport solver.
pub fn oracle_min_cost(cost: &[Vec<f64>], supply: &[u64], demand: &[u64], total: u64) -> f64 {
    fn fill_row(
        cost: &[Vec<f64>],
        supply: &[u64],
        row: usize,
        col: usize,
        left_in_row: u64,
        col_room: &mut [u64],
        table: &mut Vec<Vec<u64>>,
        best: &mut f64,
    ) {
        let n = col_room.len();
        if col == n {
            if left_in_row > 0 {
                return;
            }
            if row + 1 == supply.len() {
                let mut acc = ExactSum::new();
                for (i, r) in table.iter().enumerate() {
                    for (j, &x) in r.iter().enumerate() {
                        if x > 0 {
                            acc.add_prod(x as f64, cost[i][j]);
                        }
                    }
                }
                let c = acc.value();
                if c < *best {
                    *best = c;
                }
            } else {
                fill_row(cost, supply, row + 1, 0, supply[row + 1], col_room, table, best);
            }
            return;
        }
        let cap = left_in_row.min(col_room[col]);
        for put in 0..=cap {
            table[row][col] = put;
            col_room[col] -= put;
            fill_row(cost, supply, row, col + 1, left_in_row - put, col_room, table, best);
            col_room[col] += put;
            table[row][col] = 0;
        }
    }

    let m = supply.len();
    let n = demand.len();
    let mut table = vec![vec![0u64; n]; m];
    let mut col_room = demand.to_vec();
    let mut best = f64::INFINITY;
    fill_row(cost, supply, 0, 0, supply[0], &mut col_room, &mut table, &mut best);
    best / total as f64
}

/// Integer units of a dyadic measure at denominator `total`.
pub fn units_of(mu: &Measure, total: u64) -> Vec<u64> {
    mu.weights().iter().map(|&w| (w * total as f64).round() as u64).collect()
}
