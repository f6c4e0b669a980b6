//! Named random streams derived from the master seed.
//!
//! Every consumer asks for `stream(master, name, index)`: a ChaCha8
//! generator keyed by the master seed whose stream number is the FNV-1a hash
//! of `name` mixed with `index`. Streams are independent, so adding a
//! consumer never shifts the draws of another. Streams in use:
//!
//! - `"voronoi"`, index = the seed in `voronoi(seed, count)`: `count` seed
//!   points, each drawn as `d` uniform coordinates.
//! - `"oracle"`, index 0: per instance, in order, the phase count, the cell
//!   count, the `h/dx²` factor, the tension entries, then the labels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(master: u64, name: &str, index: u64) -> ChaCha8Rng {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in name.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(hash ^ index.rotate_left(32));
    rng
}
