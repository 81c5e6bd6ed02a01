//! Fusion-centre sensor selection: find the smallest subset of sensors whose
//! Good observations jointly cover every source bit; when no subset covers,
//! fall back to requesting all N sensors.

use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::gechannel::CsiMatrix;

/// Masks are stored in a u64, so selection supports up to 64 sensors.
pub const MAX_SENSORS: usize = 64;

/// A subset of sensors as an N-bit mask; bit n set means sensor n selected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SensorSubset {
    mask: u64,
    n_sensors: usize,
}

impl SensorSubset {
    pub fn from_mask(mask: u64, n_sensors: usize) -> Result<Self> {
        if n_sensors == 0 || n_sensors > MAX_SENSORS {
            return Err(Error::Argument(format!(
                "n_sensors must be in 1..={MAX_SENSORS}, got {n_sensors}"
            )));
        }
        if mask == 0 {
            return Err(Error::Argument("sensor subset must be non-empty".into()));
        }
        if n_sensors < 64 && mask >> n_sensors != 0 {
            return Err(Error::Argument(format!(
                "mask {mask:#x} references sensors beyond index {}",
                n_sensors - 1
            )));
        }
        Ok(Self { mask, n_sensors })
    }

    pub fn from_indices(indices: &[usize], n_sensors: usize) -> Result<Self> {
        let mut mask = 0u64;
        for &i in indices {
            if i >= n_sensors {
                return Err(Error::Argument(format!(
                    "sensor index {i} out of range for {n_sensors} sensors"
                )));
            }
            mask |= 1 << i;
        }
        Self::from_mask(mask, n_sensors)
    }

    pub fn full(n_sensors: usize) -> Result<Self> {
        if n_sensors == 0 || n_sensors > MAX_SENSORS {
            return Err(Error::Argument(format!(
                "n_sensors must be in 1..={MAX_SENSORS}, got {n_sensors}"
            )));
        }
        let mask = if n_sensors == 64 { u64::MAX } else { (1u64 << n_sensors) - 1 };
        Ok(Self { mask, n_sensors })
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn size(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn contains(&self, sensor: usize) -> bool {
        sensor < self.n_sensors && (self.mask >> sensor) & 1 == 1
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_sensors).filter(move |&i| (self.mask >> i) & 1 == 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SelectionResult {
    pub subset: SensorSubset,
    /// True iff the subset covers all M bits.
    pub covered: bool,
    /// True iff no covering subset existed and all N sensors were requested.
    pub forced_all: bool,
}

impl SelectionResult {
    pub fn selected_k(&self) -> usize {
        self.subset.size()
    }
}

/// True iff the bitwise OR of the selected rows is all ones.
pub fn covers(csi: &CsiMatrix, subset: &SensorSubset) -> bool {
    let mut union = BitVec::zeros(csi.n_bits());
    for i in subset.indices() {
        union.or_assign(csi.row(i));
        if union.is_all_ones() {
            return true;
        }
    }
    union.is_all_ones()
}

/// Exact minimum-cover selection.
///
/// Searches subset sizes k = 1..N in ascending order and, within each size,
/// enumerates index tuples lexicographically, returning the first covering
/// subset. When even the full set does not cover, returns a `forced_all`
/// result naming all N sensors. Branches whose remaining rows cannot reach
/// all-ones are pruned; pruning never changes the returned subset.
pub fn select_min_subset(csi: &CsiMatrix) -> Result<SelectionResult> {
    let n = csi.n_sensors();
    if n > MAX_SENSORS {
        return Err(Error::Argument(format!(
            "selection supports at most {MAX_SENSORS} sensors, got {n}"
        )));
    }

    // suffix[i] = union of rows i.., used both for the quick full-union test
    // and for pruning unreachable branches.
    let mut suffix = vec![BitVec::zeros(csi.n_bits()); n + 1];
    for i in (0..n).rev() {
        let mut u = suffix[i + 1].clone();
        u.or_assign(csi.row(i));
        suffix[i] = u;
    }

    if !suffix[0].is_all_ones() {
        return Ok(SelectionResult {
            subset: SensorSubset::full(n)?,
            covered: false,
            forced_all: true,
        });
    }

    for k in 1..=n {
        let empty = BitVec::zeros(csi.n_bits());
        if let Some(mask) = search_size_k(csi, &suffix, 0, k, &empty, 0) {
            return Ok(SelectionResult {
                subset: SensorSubset::from_mask(mask, n)?,
                covered: true,
                forced_all: false,
            });
        }
    }
    unreachable!("full union covers, so k = N must succeed");
}

fn search_size_k(
    csi: &CsiMatrix,
    suffix: &[BitVec],
    start: usize,
    slots: usize,
    acc: &BitVec,
    chosen: u64,
) -> Option<u64> {
    if slots == 0 {
        return acc.is_all_ones().then_some(chosen);
    }
    let n = csi.n_sensors();
    for i in start..=n - slots {
        // suffix[i] shrinks as i grows, so the first unreachable branch
        // makes every later one unreachable too.
        if !acc.or_covers_all(&suffix[i]) {
            break;
        }
        let mut next = acc.clone();
        next.or_assign(csi.row(i));
        if let Some(mask) = search_size_k(csi, suffix, i + 1, slots - 1, &next, chosen | (1 << i)) {
            return Some(mask);
        }
    }
    None
}

/// Greedy set-cover heuristic for large networks.
///
/// Departs from the analyzed exact algorithm: the returned subset covers but
/// is not guaranteed minimum-size, so its size distribution is NOT the K
/// distribution characterized by the exact analysis. Offered as an explicit
/// opt-in for networks too large to enumerate.
pub fn select_greedy(csi: &CsiMatrix) -> Result<SelectionResult> {
    let n = csi.n_sensors();
    if n > MAX_SENSORS {
        return Err(Error::Argument(format!(
            "selection supports at most {MAX_SENSORS} sensors, got {n}"
        )));
    }
    let mut union = BitVec::zeros(csi.n_bits());
    for row in csi.rows() {
        union.or_assign(row);
    }
    if !union.is_all_ones() {
        return Ok(SelectionResult {
            subset: SensorSubset::full(n)?,
            covered: false,
            forced_all: true,
        });
    }

    let mut covered = BitVec::zeros(csi.n_bits());
    let mut mask = 0u64;
    while !covered.is_all_ones() {
        let mut best: Option<(usize, usize)> = None; // (gain, sensor), ties to smallest index
        for i in 0..n {
            if (mask >> i) & 1 == 1 {
                continue;
            }
            let mut trial = covered.clone();
            trial.or_assign(csi.row(i));
            let gain = trial.count_ones() - covered.count_ones();
            if best.map_or(true, |(g, _)| gain > g) {
                best = Some((gain, i));
            }
        }
        let (_, pick) = best.expect("full union covers, so progress is always possible");
        mask |= 1 << pick;
        covered.or_assign(csi.row(pick));
    }
    Ok(SelectionResult {
        subset: SensorSubset::from_mask(mask, n)?,
        covered: true,
        forced_all: false,
    })
}

/// The phase-two downlink payload: an N-bit string marking selected sensors.
pub fn feedback_message(result: &SelectionResult) -> BitVec {
    let n = result.subset.n_sensors();
    let mut bits = BitVec::zeros(n);
    for i in result.subset.indices() {
        bits.set(i, true);
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csi(rows: &[&str]) -> CsiMatrix {
        CsiMatrix::from_rows(rows.iter().map(|r| BitVec::from_str01(r).unwrap()).collect())
            .unwrap()
    }

    #[test]
    fn covers_examples() {
        let m = csi(&["1100", "1010", "0011"]);
        let s13 = SensorSubset::from_indices(&[0, 2], 3).unwrap();
        let s12 = SensorSubset::from_indices(&[0, 1], 3).unwrap();
        assert!(covers(&m, &s13));
        assert!(!covers(&m, &s12));

        let with_full_row = csi(&["0101", "1111"]);
        assert!(covers(
            &with_full_row,
            &SensorSubset::from_indices(&[1], 2).unwrap()
        ));
    }

    #[test]
    fn select_prefers_lexicographically_first() {
        let m = csi(&["1111", "1111"]);
        let r = select_min_subset(&m).unwrap();
        assert_eq!(r.subset.mask(), 0b01);
        assert_eq!(r.selected_k(), 1);
        assert!(r.covered && !r.forced_all);
    }

    #[test]
    fn select_pair_example() {
        let m = csi(&["1100", "1010", "0011"]);
        let r = select_min_subset(&m).unwrap();
        assert_eq!(r.subset.mask(), 0b101, "expected sensors {{1, 3}}");
        assert_eq!(r.selected_k(), 2);
    }

    #[test]
    fn uncoverable_bit_forces_all() {
        let m = csi(&["1101", "1001", "0101"]);
        let r = select_min_subset(&m).unwrap();
        assert!(r.forced_all);
        assert!(!r.covered);
        assert_eq!(r.selected_k(), 3);
        assert_eq!(feedback_message(&r).to_string01(), "111");
    }

    #[test]
    fn feedback_strings() {
        let r = SelectionResult {
            subset: SensorSubset::from_indices(&[0, 2], 3).unwrap(),
            covered: true,
            forced_all: false,
        };
        assert_eq!(feedback_message(&r).to_string01(), "101");

        let r = SelectionResult {
            subset: SensorSubset::from_indices(&[1], 4).unwrap(),
            covered: true,
            forced_all: false,
        };
        assert_eq!(feedback_message(&r).to_string01(), "0100");

        let r = SelectionResult {
            subset: SensorSubset::full(5).unwrap(),
            covered: false,
            forced_all: true,
        };
        assert_eq!(feedback_message(&r).to_string01(), "11111");
    }

    /// Exhaustive oracle: smallest covering mask by brute force over all
    /// non-empty masks, in (size, mask-value) order.
    fn oracle_min_cover(m: &CsiMatrix) -> Option<(usize, u64)> {
        let n = m.n_sensors();
        let mut best: Option<(usize, u64)> = None;
        for mask in 1..(1u64 << n) {
            let mut union = BitVec::zeros(m.n_bits());
            for i in 0..n {
                if (mask >> i) & 1 == 1 {
                    union.or_assign(m.row(i));
                }
            }
            if union.is_all_ones() {
                let size = mask.count_ones() as usize;
                if best.map_or(true, |(bs, _)| size < bs) {
                    best = Some((size, mask));
                }
            }
        }
        best
    }

    #[test]
    fn minimality_against_oracle() {
        let mut rng = crate::rng::rng_from(99, &[]);
        for _ in 0..500 {
            let n = 1 + (rand::Rng::random::<u64>(&mut rng) % 8) as usize;
            let m_bits = 1 + (rand::Rng::random::<u64>(&mut rng) % 12) as usize;
            let rows = (0..n)
                .map(|_| crate::bits::random_bits(m_bits, &mut rng))
                .collect();
            let matrix = CsiMatrix::from_rows(rows).unwrap();
            let got = select_min_subset(&matrix).unwrap();
            match oracle_min_cover(&matrix) {
                Some((size, _)) => {
                    assert!(got.covered && !got.forced_all);
                    assert_eq!(got.selected_k(), size, "non-minimal cover");
                    assert!(covers(&matrix, &got.subset));
                }
                None => {
                    assert!(got.forced_all && !got.covered);
                    assert_eq!(got.selected_k(), n);
                }
            }
            // Greedy must cover whenever coverage exists, with size >= exact.
            let greedy = select_greedy(&matrix).unwrap();
            assert_eq!(greedy.forced_all, got.forced_all);
            if greedy.covered {
                assert!(covers(&matrix, &greedy.subset));
                assert!(greedy.selected_k() >= got.selected_k());
            }
        }
    }

    #[test]
    fn adding_a_sensor_preserves_coverage() {
        let mut rng = crate::rng::rng_from(7, &[]);
        for _ in 0..200 {
            let n = 2 + (rand::Rng::random::<u64>(&mut rng) % 6) as usize;
            let m_bits = 1 + (rand::Rng::random::<u64>(&mut rng) % 10) as usize;
            let rows = (0..n)
                .map(|_| crate::bits::random_bits(m_bits, &mut rng))
                .collect();
            let matrix = CsiMatrix::from_rows(rows).unwrap();
            let r = select_min_subset(&matrix).unwrap();
            if !r.covered {
                continue;
            }
            for extra in 0..n {
                let mask = r.subset.mask() | (1 << extra);
                let bigger = SensorSubset::from_mask(mask, n).unwrap();
                assert!(covers(&matrix, &bigger));
            }
        }
    }

    #[test]
    fn forced_iff_full_set_does_not_cover() {
        let mut rng = crate::rng::rng_from(8, &[]);
        for _ in 0..300 {
            let n = 1 + (rand::Rng::random::<u64>(&mut rng) % 6) as usize;
            let m_bits = 1 + (rand::Rng::random::<u64>(&mut rng) % 9) as usize;
            let rows = (0..n)
                .map(|_| crate::bits::random_bits(m_bits, &mut rng))
                .collect();
            let matrix = CsiMatrix::from_rows(rows).unwrap();
            let full = SensorSubset::full(n).unwrap();
            let r = select_min_subset(&matrix).unwrap();
            assert_eq!(r.forced_all, !covers(&matrix, &full));
        }
    }
}
