//! Fixtures shared by the benchmarks in `benches/`.

use mvseq::samplers::{ar1, stream, Ar1Params};
use mvseq::Chain;

/// `n` draws from the Hadamard AR(1) fixture of order `p`.
pub fn hadamard_chain(p: usize, n: usize, seed: u64) -> Chain {
    let params = Ar1Params::hadamard_fixture(p).expect("supported order");
    ar1::simulate(&params, n, &mut stream(seed, 0)).expect("n > 0")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shape() {
        let c = hadamard_chain(4, 100, 1);
        assert_eq!((c.n(), c.p()), (100, 4));
        assert_eq!(c, hadamard_chain(4, 100, 1));
    }
}
