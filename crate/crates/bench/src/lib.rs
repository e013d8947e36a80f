//! Seeded inputs shared by the benchmarks.

use afdm::channel::{complex_gaussian, draw_channel, observation_window, ChannelProfile, OffsetTruth};
use afdm::{AfdmModem, AfdmParams, ChannelRealization, Complex64, TimeSamples};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_symbols(n: usize, seed: u64) -> Vec<Complex64> {
    let mut r = rng(seed);
    (0..n).map(|_| complex_gaussian(&mut r, 1.0)).collect()
}

/// Reference waveform: `c1` matched to Doppler 2, `c2 = 1/(2N)`.
pub fn params(n: usize, l: usize) -> AfdmParams {
    AfdmParams::for_doppler(n, l, 2.0).expect("valid benchmark parameters")
}

/// A noiseless `2N + L` window holding the middle of three frames.
pub fn window(params: &AfdmParams, seed: u64) -> TimeSamples {
    let modem = AfdmModem::new(*params);
    let n = params.n();
    let mut stream = Vec::with_capacity(3 * params.frame_len());
    for k in 0..3 {
        let frame = modem.modulate_frame(&random_symbols(n, seed + k)).expect("frame");
        stream.extend_from_slice(&frame);
    }
    let truth = OffsetTruth::new(n / 3, 0.17, n).expect("truth");
    observation_window(&stream, params.frame_len(), &truth, params).expect("window")
}

/// Five-path channel with delays up to one sample.
pub fn channel(seed: u64) -> ChannelRealization {
    let profile = ChannelProfile::new(5, 1, 2.0).expect("profile");
    draw_channel(&profile, &mut rng(seed))
}
