use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::substrate::{Network, SpikeEvent, UnitId};

/// RNG for structural choices (random connectivity). Uses a stream far
/// away from the per-unit Poisson streams.
pub fn structure_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 << 48);
    rng
}

pub fn steps_for(seconds: f64, dt_ms: f64) -> u64 {
    (seconds * 1000.0 / dt_ms).round() as u64
}

pub fn step_to_s(step: u64, dt_ms: f64) -> f64 {
    step as f64 * dt_ms / 1000.0
}

/// Run `steps` network steps, appending events to `spikes`.
pub fn run_steps(net: &mut Network, steps: u64, spikes: &mut Vec<SpikeEvent>) -> crate::Result<()> {
    for _ in 0..steps {
        spikes.extend(net.step()?);
    }
    Ok(())
}

pub fn steps_of(spikes: &[SpikeEvent], unit: UnitId) -> Vec<u64> {
    spikes.iter().filter(|e| e.unit_id == unit).map(|e| e.step).collect()
}

/// SG spikes belonging to the burst triggered by the IP3 spike at `ip3_step`:
/// every SG spike from that step up to (excluding) the next IP3 spike.
pub fn burst_after(sg: &[u64], ip3: &[u64], ip3_step: u64) -> Vec<u64> {
    let next = ip3.iter().copied().find(|&s| s > ip3_step).unwrap_or(u64::MAX);
    sg.iter().copied().filter(|&s| s >= ip3_step && s < next).collect()
}

/// Peak instantaneous rate of a burst in Hz.
pub fn burst_amplitude_hz(burst: &[u64], dt_ms: f64) -> Option<f64> {
    match burst.len() {
        0 => None,
        1 => Some(1000.0 / dt_ms),
        _ => burst
            .windows(2)
            .map(|w| w[1] - w[0])
            .min()
            .map(|isi| 1000.0 / (isi as f64 * dt_ms)),
    }
}

pub fn burst_window_ms(burst: &[u64], dt_ms: f64) -> Option<f64> {
    Some((*burst.last()? - *burst.first()?) as f64 * dt_ms)
}

/// Fraction of `units` that spike at least once in `[start, end)`.
pub fn fraction_active(spikes: &[SpikeEvent], units: &[UnitId], start: u64, end: u64) -> f64 {
    if units.is_empty() {
        return 0.0;
    }
    let lo = units.iter().map(|u| u.0).min().unwrap_or(0);
    let hi = units.iter().map(|u| u.0).max().unwrap_or(0);
    let mut seen = vec![false; (hi - lo + 1) as usize];
    for e in spikes {
        if e.step >= start && e.step < end && (lo..=hi).contains(&e.unit_id.0) {
            seen[(e.unit_id.0 - lo) as usize] = true;
        }
    }
    units.iter().filter(|u| seen[(u.0 - lo) as usize]).count() as f64 / units.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(step: u64, id: u32) -> SpikeEvent {
        SpikeEvent {
            step,
            unit_id: UnitId(id),
        }
    }

    #[test]
    fn burst_selection_stops_at_next_ip3() {
        let sg = [3, 5, 9, 40, 41];
        assert_eq!(burst_after(&sg, &[2, 30], 2), vec![3, 5, 9]);
        assert_eq!(burst_after(&sg, &[2, 30], 30), vec![40, 41]);
        assert_eq!(burst_amplitude_hz(&[3, 5, 9], 1.0), Some(500.0));
        assert_eq!(burst_window_ms(&[3, 5, 9], 2.0), Some(12.0));
        assert_eq!(burst_window_ms(&[], 1.0), None);
    }

    #[test]
    fn active_fraction_counts_units_once() {
        let spikes = [ev(1, 5), ev(2, 5), ev(3, 6), ev(10, 7)];
        let units = [UnitId(5), UnitId(6), UnitId(7), UnitId(8)];
        assert_eq!(fraction_active(&spikes, &units, 0, 5), 0.5);
        assert_eq!(fraction_active(&spikes, &units, 0, 11), 0.75);
        assert_eq!(fraction_active(&spikes, &[], 0, 11), 0.0);
    }
}
