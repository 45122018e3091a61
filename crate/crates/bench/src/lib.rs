//! Fixtures shared by the kernel benchmarks in `benches/kernels.rs`.

use reeblab::beltrami::{radial_stretch, BeltramiCoefficient};
use reeblab::profiles::{make_example_profile, BindingProfile, ProfileKind};
use reeblab::surface_cr::{manufactured_problem, perturbed_start, CrGuess, ManufacturedProblem};

/// The example-1 profile with `T = 1`, `k = 0.7`.
pub fn example1() -> BindingProfile {
    make_example_profile(ProfileKind::Example1, 1.0, 0.7).expect("valid example parameters")
}

/// Radial stretch with dilatation 2 on an `n × n` grid of half side 4.
pub fn stretch(n: usize) -> BeltramiCoefficient {
    radial_stretch(n, 4.0, 2.0, 0.0).expect("power-of-two grid")
}

/// Manufactured Newton problem with its perturbed starting guess.
pub fn newton_case(seed: u64, n_modes: usize) -> (ManufacturedProblem, CrGuess) {
    let p = manufactured_problem(seed, n_modes).expect("valid truncation");
    let init = perturbed_start(&p.exact, seed + 1000, 1e-2);
    (p, init)
}
