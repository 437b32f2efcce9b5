//! Ground-state constructions and reduced densities on small chains and cycles.

use entchain_core::entanglement::{
    c_split, entropy_of_spectrum, entropy_s, good_particle_count, psi_layout, split_phi_g,
};
use entchain_core::*;

fn chain_region(start: usize, len: usize, n: usize) -> Region {
    Region::new(start, len, n, Topology::Chain).unwrap()
}

fn half_cut(n: usize) -> f64 {
    let v = construct_phi_g(n).unwrap();
    entropy(&reduced_density(&v, &chain_region(0, n / 2, n)).unwrap())
}

#[test]
fn phi_x_is_uniform_on_its_path() {
    for (n, x, len) in [(5, vec![0u8], 6), (7, vec![0, 0], 15)] {
        let v = construct_phi_x(n, &x).unwrap();
        assert_eq!(v.support_len(), len);
        let a = 1.0 / (len as f64).sqrt();
        assert!(v.iter().all(|(_, amp)| (amp - a).abs() < 1e-15));
    }
}

#[test]
fn phi_g_is_orthogonal_mix_of_phi_x() {
    let g = construct_phi_g(7).unwrap();
    assert_eq!(g.support_len(), 60);
    let xs: Vec<StateVector> = [[0u8, 0], [0, 1], [1, 0], [1, 1]].iter().map(|x| construct_phi_x(7, x).unwrap()).collect();
    for (i, a) in xs.iter().enumerate() {
        assert!((g.inner(a) - 0.5).abs() < 1e-12);
        for b in &xs[i + 1..] {
            assert_eq!(a.inner(b), 0.0);
        }
    }
}

#[test]
fn cycle_states_are_orthonormal() {
    let psis: Vec<StateVector> = (0..5).map(|i| construct_cycle_state(5, 2, CycleState::Psi(i)).unwrap()).collect();
    for (i, a) in psis.iter().enumerate() {
        assert_eq!(a.support_len(), 144);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        for b in &psis[i + 1..] {
            assert_eq!(a.inner(b), 0.0);
        }
    }
    let phi = construct_cycle_state(5, 2, CycleState::Phi).unwrap();
    assert_eq!(phi.support_len(), 5 * 144);
    assert!((phi.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn whole_region_has_zero_entropy() {
    let v = construct_cycle_state(5, 2, CycleState::Phi).unwrap();
    let rho = reduced_density(&v, &Region::new(3, 10, 10, Topology::Cycle).unwrap()).unwrap();
    assert!(entropy(&rho).abs() < 1e-10);
}

#[test]
fn qubit_entropy() {
    assert!((entropy_of_spectrum(&[0.5, 0.5]) - 1.0).abs() < 1e-15);
    assert!((entropy_of_spectrum(&[0.25; 4]) - 2.0).abs() < 1e-15);
}

#[test]
fn psi_restricted_to_one_segment_matches_phi_g() {
    let psi = construct_cycle_state(5, 2, CycleState::Psi(0)).unwrap();
    let g = construct_phi_g(5).unwrap();
    for (start, len) in [(0, 2), (1, 3), (2, 3), (0, 5)] {
        let a = reduced_density(&psi, &Region::new(start, len, 10, Topology::Cycle).unwrap()).unwrap().spectrum();
        let b = reduced_density(&g, &chain_region(start, len, 5)).unwrap().spectrum();
        assert_eq!(a.len(), b.len(), "start={start} len={len}");
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn density_matrices_are_states() {
    let v = construct_phi_g(9).unwrap();
    for len in 1..9 {
        let rho = reduced_density(&v, &chain_region(0, len, 9)).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        let d = rho.to_dense();
        assert!((d.clone() - d.transpose()).amax() < 1e-15);
        let eig = d.symmetric_eigenvalues();
        assert!(eig.iter().all(|&x| x > -1e-10));
        assert!((eig.sum() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn half_cut_entropy_grows_with_n() {
    let e: Vec<f64> = [7, 11, 15].iter().map(|&n| half_cut(n)).collect();
    assert!(e[0] < e[1] && e[1] < e[2], "{e:?}");
    assert!(e[1] >= 0.5, "{e:?}");
}

#[test]
fn split_fraction_is_at_least_a_quarter() {
    for n in [7, 11, 15] {
        let c = c_split(n).unwrap();
        assert!(c >= 0.25, "n={n} c={c}");
        let sp = split_phi_g(n, entropy_s(n)).unwrap();
        assert_eq!(sp.t1 + sp.t2, (n - 1) * (n - 2) / 2);
        assert!(sp.phi1.inner(&sp.phi2).abs() < 1e-15);
    }
}

#[test]
fn good_particles_near_segment_edges() {
    let layout = psi_layout(9, 2, 0);
    let full = Region::new(0, 9, 18, Topology::Cycle).unwrap();
    assert_eq!(good_particle_count(9, &layout, &full), 0);
    // positions 8 and 9 of the first segment: only 8 is an edge position
    let tail = Region::new(7, 2, 18, Topology::Cycle).unwrap();
    assert_eq!(good_particle_count(9, &layout, &tail), 1);
}

#[test]
fn mixture_entropy_bounds_average_component_entropy() {
    let (n, t) = (5, 2);
    let psis: Vec<StateVector> = (0..n).map(|i| construct_cycle_state(n, t, CycleState::Psi(i)).unwrap()).collect();
    let phi = construct_cycle_state(n, t, CycleState::Phi).unwrap();
    for len in 1..=n {
        for start in 0..n * t {
            let region = Region::new(start, len, n * t, Topology::Cycle).unwrap();
            let whole = entropy(&reduced_density(&phi, &region).unwrap());
            let avg: f64 = psis.iter().map(|p| entropy(&reduced_density(p, &region).unwrap())).sum::<f64>() / n as f64;
            assert!(whole >= avg - 1e-10, "start={start} len={len}: {whole} < {avg}");
        }
    }
}
