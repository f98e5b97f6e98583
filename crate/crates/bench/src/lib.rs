//! Fixtures shared by the benchmarks.

use risroad::channel::{realize_channels, ChannelRealization};
use risroad::rng::{substream, CHANNEL};
use risroad::{calibrated_scenario, Scenario};

/// Calibrated scenario with `n` elements on every RIS.
pub fn scenario_with_elements(n: usize) -> Scenario {
    let mut s = calibrated_scenario();
    s.ris.iter_mut().for_each(|r| r.n_elements = n);
    s
}

/// One channel draw at the scenario's initial positions.
pub fn realization(s: &Scenario, seed: u64) -> ChannelRealization {
    let blocker = s.blocker_at(0.0);
    realize_channels(s, &s.ue, blocker.as_ref(), &mut substream(seed, &[0, 0, CHANNEL]))
}
