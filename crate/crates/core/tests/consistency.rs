//! With zero potential and the graph-Laplacian boundary the Hamiltonian is a
//! scaled Neumann Laplacian, whose eigenvectors are the DCT-II atoms. The
//! adaptive transform must then agree with the DCT baseline.

use quantum_basis::baselines::fourier_denoise;
use quantum_basis::synth::{make_image, make_signal};
use quantum_basis::*;

fn quantum_with_flat_potential(x: &Field, profile: &ThresholdProfile, ratio: f64) -> Field {
    let flat = x.with_values(vec![0.0; x.len()]).unwrap();
    let h = build_hamiltonian(
        &flat,
        PlanckMassRatio::new(ratio).unwrap(),
        BoundaryMode::GraphLaplacian,
    )
    .unwrap();
    let basis = eig_full(&h).unwrap();
    let coeffs = project(&basis, x).unwrap();
    reconstruct(&basis, &coeffs, profile).unwrap()
}

fn relative_gap(a: &Field, b: &Field) -> f64 {
    let diff: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(p, q)| (p - q).powi(2))
        .sum();
    let norm: f64 = b.values().iter().map(|v| v * v).sum();
    (diff / norm).sqrt()
}

fn check(x: &Field, profiles: &[(usize, f64)]) {
    for &(s, rho) in profiles {
        let profile = ThresholdProfile::new(s, rho).unwrap();
        let dct = fourier_denoise(x, &profile).unwrap();
        for ratio in [0.5, 7.0] {
            let q = quantum_with_flat_potential(x, &profile, ratio);
            let gap = relative_gap(&q, &dct);
            assert!(gap <= 1e-6, "s={s} rho={rho} ratio={ratio}: {gap:e}");
        }
    }
}

#[test]
fn signal_matches_dct() {
    let x = make_signal(96, 1).unwrap();
    check(&x, &[(1, 1.0), (5, 3.0), (10, 10.0), (40, 17.5), (96, 1.0)]);
}

#[test]
fn rectangular_image_matches_dct() {
    // unequal sides keep the Neumann spectrum free of symmetric degeneracies
    let full = make_image(32, 2).unwrap();
    let (w, h) = (12, 7);
    let values = (0..h)
        .flat_map(|r| full.values()[r * 32..r * 32 + w].to_vec())
        .collect();
    let x = Field::image(w, h, values).unwrap();
    check(&x, &[(1, 1.0), (6, 4.0), (20, 9.0), (50, 30.0)]);
}
