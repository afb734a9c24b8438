//! Fixtures shared by the benchmarks.

use plab_core::floquet::random_rotor_state;
use plab_core::qstate::{x_down, x_up};
use plab_core::{ModelParams, TotalState};

/// Reference parameters at ε = 2000 and the product initial state used by
/// the experiment runner.
pub fn reference_state(n_rotor: usize) -> (ModelParams, TotalState) {
    let params = ModelParams::reference(2000.0, n_rotor).expect("valid parameters");
    let (u, d) = (x_up(), x_down());
    let system = [u[0] * 0.8 + d[0] * 0.6, u[1] * 0.8 + d[1] * 0.6];
    let rotor = random_rotor_state(n_rotor, 1);
    let psi = TotalState::product(system, x_down(), &rotor).expect("normalized");
    (params, psi)
}
