//! Occupation times `S_A(t)`, last visits `G_Y(t)` and first visits `D_Y(t)`
//! along an orbit.
//!
//! `S_A(t)` counts `T^k x in A` for `k = 1..floor(t)`; `G_Y(t)` is the last
//! visit time `<= t` (`max {} = 0`) and `D_Y(t)` the first visit time `> t`.

use alloc::vec::Vec;

use thiserror::Error;

use crate::cadlag::StepFunction;
use crate::map::{IntermittentMap, MapError, Orbit, OrbitConfig};
use crate::return_map::{CellTable, RaysPartition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OccupationError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("sample times must be sorted and at most n_steps = {n_steps}")]
    BadSampleTimes { n_steps: u64 },
}

/// First visit to `Y` after a sample time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaitingTime {
    /// Seen within the orbit horizon.
    Observed(u64),
    /// Completed past the horizon by an exact cell-table lookup.
    Completed(u64),
    /// Completed with the flow approximation (deep excursion).
    Approximate(u64),
    /// Not resolved, or beyond the completion cap.
    Censored,
}

impl WaitingTime {
    pub fn value(&self) -> Option<u64> {
        match *self {
            WaitingTime::Observed(v) | WaitingTime::Completed(v) | WaitingTime::Approximate(v) => Some(v),
            WaitingTime::Censored => None,
        }
    }
}

/// Completion of `D_Y` past the orbit horizon.
#[derive(Debug, Clone, Copy)]
pub struct Completion<'a> {
    pub cells: &'a CellTable,
    /// Values above this are reported as censored.
    pub cap: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupationRecord {
    pub d: usize,
    pub times: Vec<u64>,
    /// `s_a[i][j] = S_{A_j}(times[i])`.
    pub s_a: Vec<Vec<u64>>,
    pub s_y: Vec<u64>,
    pub g_y: Vec<u64>,
    /// `S_{A_j}(G_Y(times[i]))`.
    pub s_a_at_g: Vec<Vec<u64>>,
    pub d_y: Vec<WaitingTime>,
}

/// One sample time of an [`OccupationRecord`] under the scaling `(n, b_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSample {
    pub t: f64,
    /// `S_{A_j}(t) / n`.
    pub z: Vec<f64>,
    /// `S_{A_j}(G_Y) / G_Y`; empty when `G_Y = 0`.
    pub zg: Vec<f64>,
    /// `S_Y(t) / b_n`.
    pub local: f64,
    pub g: f64,
    pub d: Option<f64>,
}

impl OccupationRecord {
    pub fn scaled(&self, n: f64, b_n: f64) -> Vec<ScaledSample> {
        (0..self.times.len())
            .map(|i| {
                let g = self.g_y[i];
                ScaledSample {
                    t: self.times[i] as f64 / n,
                    z: self.s_a[i].iter().map(|&c| c as f64 / n).collect(),
                    zg: if g == 0 {
                        Vec::new()
                    } else {
                        self.s_a_at_g[i].iter().map(|&c| c as f64 / g as f64).collect()
                    },
                    local: self.s_y[i] as f64 / b_n,
                    g: g as f64 / n,
                    d: self.d_y[i].value().map(|v| v as f64 / n),
                }
            })
            .collect()
    }

    pub fn censored_count(&self) -> usize {
        self.d_y.iter().filter(|w| matches!(w, WaitingTime::Censored)).count()
    }
}

/// Occupation statistics of the orbit of `config.x0` at `sample_times`.
pub fn occupation_process(
    map: &IntermittentMap,
    partition: &RaysPartition,
    config: &OrbitConfig,
    sample_times: &[u64],
    completion: Option<Completion<'_>>,
) -> Result<OccupationRecord, OccupationError> {
    let orbit = Orbit::new(map, config.x0, config.stall_policy)?;
    occupation_from_orbit(orbit, partition, config.n_steps, sample_times, completion)
}

/// As [`occupation_process`], starting from an already positioned orbit.
pub fn occupation_from_orbit(
    mut orbit: Orbit<'_>,
    partition: &RaysPartition,
    n_steps: u64,
    sample_times: &[u64],
    completion: Option<Completion<'_>>,
) -> Result<OccupationRecord, OccupationError> {
    if sample_times.windows(2).any(|w| w[0] > w[1]) || sample_times.last().is_some_and(|&t| t > n_steps) {
        return Err(OccupationError::BadSampleTimes { n_steps });
    }
    let d = partition.ray_count();
    let m = sample_times.len();
    let mut rec = OccupationRecord {
        d,
        times: sample_times.to_vec(),
        s_a: Vec::with_capacity(m),
        s_y: Vec::with_capacity(m),
        g_y: Vec::with_capacity(m),
        s_a_at_g: Vec::with_capacity(m),
        d_y: Vec::with_capacity(m),
    };
    let mut counts = alloc::vec![0u64; d + 1];
    let mut at_last_y = alloc::vec![0u64; d];
    let mut last_y = 0u64;
    let mut pending: Vec<usize> = Vec::new();
    let mut next = 0usize;
    // nothing after the last sample time is needed
    let horizon = sample_times.last().copied().unwrap_or(0);

    let record_samples = |k: u64,
                              next: &mut usize,
                              rec: &mut OccupationRecord,
                              counts: &[u64],
                              at_last_y: &[u64],
                              last_y: u64,
                              pending: &mut Vec<usize>| {
        while *next < m && sample_times[*next] == k {
            rec.s_a.push(counts[..d].to_vec());
            rec.s_y.push(counts[d]);
            rec.g_y.push(last_y);
            rec.s_a_at_g.push(at_last_y.to_vec());
            rec.d_y.push(WaitingTime::Censored);
            pending.push(*next);
            *next += 1;
        }
    };

    let mut k = 0u64;
    record_samples(k, &mut next, &mut rec, &counts, &at_last_y, last_y, &mut pending);
    while k < horizon {
        orbit.step()?;
        k += 1;
        let r = partition.region_index(orbit.point());
        counts[r] += 1;
        if r == d {
            last_y = k;
            at_last_y.copy_from_slice(&counts[..d]);
            for &i in &pending {
                rec.d_y[i] = WaitingTime::Observed(k);
            }
            pending.clear();
        } else if orbit.in_analytic_tail() {
            let limit = if next < m { sample_times[next] } else { horizon } - k;
            let skipped = orbit.skip_analytic_tail(limit);
            counts[r] += skipped;
            k += skipped;
        }
        if next < m && sample_times[next] == k {
            record_samples(k, &mut next, &mut rec, &counts, &at_last_y, last_y, &mut pending);
        }
    }

    if !pending.is_empty() {
        let filled = match completion {
            Some(c) => complete_wait(&mut orbit, partition, k, c),
            None => WaitingTime::Censored,
        };
        for &i in &pending {
            rec.d_y[i] = filled;
        }
    }
    Ok(rec)
}

fn complete_wait(orbit: &mut Orbit<'_>, partition: &RaysPartition, k: u64, c: Completion<'_>) -> WaitingTime {
    let map = orbit.map();
    let mut exact = true;
    let mut extra = 0u64;
    if orbit.in_analytic_tail() {
        extra += orbit.finish_analytic_tail();
        exact = false;
    }
    let p = orbit.point();
    let steps = if partition.in_junction(p) {
        let (r, e) = c.cells.return_record(map, p);
        exact &= e;
        r.phi()
    } else {
        match c.cells.exit_steps(p) {
            Some(e) => {
                exact &= e.exact;
                e.steps
            }
            None => return WaitingTime::Censored,
        }
    };
    let total = k.saturating_add(extra).saturating_add(steps);
    if total > c.cap {
        WaitingTime::Censored
    } else if exact {
        WaitingTime::Completed(total)
    } else {
        WaitingTime::Approximate(total)
    }
}

/// Region indices of `T^1 x, ..., T^n x` (`d` marks `Y`).
pub fn record_itinerary(
    map: &IntermittentMap,
    partition: &RaysPartition,
    config: &OrbitConfig,
) -> Result<Vec<u8>, MapError> {
    let mut orbit = Orbit::new(map, config.x0, config.stall_policy)?;
    let mut out = Vec::with_capacity(config.n_steps as usize);
    while (out.len() as u64) < config.n_steps {
        orbit.step()?;
        let r = partition.region_index(orbit.point()) as u8;
        out.push(r);
        if orbit.in_analytic_tail() {
            let left = config.n_steps - out.len() as u64;
            let n = orbit.skip_analytic_tail(left);
            out.extend(core::iter::repeat_n(r, n as usize));
        }
    }
    Ok(out)
}

/// `u -> S_A(u)` for the region `region` of an itinerary of `T^1 .. T^n`,
/// known on `[0, n + 1)`.
pub fn occupation_counting(itinerary: &[u8], region: u8) -> StepFunction {
    let times: Vec<f64> = itinerary
        .iter()
        .enumerate()
        .filter(|&(_, &r)| r == region)
        .map(|(k, _)| (k + 1) as f64)
        .collect();
    StepFunction::counting(&times, Some(itinerary.len() as f64 + 1.0)).expect("visit times increase")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::StallPolicy;
    use crate::return_map::{build_partition, cell_table, ExcursionTrace};

    #[test]
    fn seven_step_counts() {
        let it = [0u8, 2, 1, 1, 2, 2];
        let a1 = occupation_counting(&it, 0);
        let a2 = occupation_counting(&it, 1);
        let y = occupation_counting(&it, 2);
        assert_eq!(a1.eval(6.0).unwrap(), 1.0);
        assert_eq!(a2.eval(6.0).unwrap(), 2.0);
        assert_eq!(y.eval(6.0).unwrap(), 3.0);
        let trace = ExcursionTrace::from_regions(2, &it).unwrap();
        let phi = trace.phi();
        // G_Y and D_Y from the return-time process
        assert_eq!(phi.g_op(4.0).unwrap(), 2.0);
        assert_eq!(phi.d_op(4.0).unwrap(), 5.0);
    }

    #[test]
    fn record_at_zero_and_identities() {
        let map = IntermittentMap::boole();
        let part = build_partition(&map).unwrap();
        let cells = cell_table(&map, &part, 1 << 12);
        let cfg = OrbitConfig { x0: 0.123, n_steps: 100_000, stall_policy: StallPolicy::AnalyticTail };
        let times: Vec<u64> = (0..=100).map(|i| i * 1000).collect();
        let rec = occupation_process(&map, &part, &cfg, &times, Some(Completion { cells: &cells, cap: u64::MAX })).unwrap();
        assert_eq!(rec.s_a[0], alloc::vec![0, 0]);
        assert_eq!(rec.s_y[0], 0);
        assert_eq!(rec.g_y[0], 0);
        for i in 0..times.len() {
            assert_eq!(rec.s_a[i].iter().sum::<u64>() + rec.s_y[i], times[i]);
            assert!(rec.g_y[i] <= times[i]);
            assert!(rec.d_y[i].value().unwrap() > times[i]);
            if i > 0 {
                assert!(rec.s_y[i] >= rec.s_y[i - 1]);
            }
        }
        // cross-check against the itinerary
        let it = record_itinerary(&map, &part, &cfg).unwrap();
        let trace = ExcursionTrace::from_regions(2, &it).unwrap();
        let phi = trace.phi();
        let mut checked = 0;
        for i in 1..times.len() {
            let t = times[i] as f64;
            if let (Ok(g), Ok(dv)) = (phi.g_op(t), phi.d_op(t)) {
                assert_eq!(g, rec.g_y[i] as f64);
                assert_eq!(dv, rec.d_y[i].value().unwrap() as f64);
                checked += 1;
            }
        }
        assert!(checked > 10);
    }
}
