use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sortlet_core::ansatz::SortletModel;
use sortlet_core::autodiff::fd::{central_gradient, central_laplacian};
use sortlet_core::backbone::{Antisymmetrizer, ModelConfig};
use sortlet_core::geometry::SystemSpec;
use sortlet_core::hamiltonian::local_energy;
use sortlet_core::WaveFunction;

fn small(kind: Antisymmetrizer) -> SortletModel {
    let cfg = ModelConfig { kind, hidden: 8, layers: 2, sortlets: 3 };
    SortletModel::new(SystemSpec::atom(4).unwrap(), cfg)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

#[test]
fn same_spin_swaps_negate_through_the_public_api() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for kind in [Antisymmetrizer::Sortlet, Antisymmetrizer::Vandermonde] {
        let model = small(kind);
        let p = model.init(5);
        for _ in 0..20 {
            let c = model.system.configuration(random_point(&mut rng, 12)).unwrap();
            let a = model.psi(&p, &c).unwrap();
            // Be: electrons 0,1 up and 2,3 down
            for (i, j) in [(0, 1), (2, 3)] {
                let b = model.psi(&p, &c.transpose_electrons(i, j).unwrap()).unwrap();
                assert_eq!(b.sign, -a.sign);
                assert_eq!(b.logmag, a.logmag);
            }
        }
    }
}

#[test]
fn kinetic_energy_matches_finite_differences() {
    let model = small(Antisymmetrizer::Sortlet);
    let p = model.init(2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lnpsi = |x: &[f64]| model.log_psi::<f64>(&p.values, x).unwrap().logmag;
    for _ in 0..5 {
        let x = random_point(&mut rng, 12);
        let e = local_energy(&model, &p.values, &x).unwrap();
        let g = central_gradient(lnpsi, &x, 1e-5);
        let lap = central_laplacian(lnpsi, &x, 1e-4);
        let fd = -0.5 * (lap + g.iter().map(|v| v * v).sum::<f64>());
        assert!((e.kinetic - fd).abs() < 1e-4 * (1.0 + fd.abs()), "{} vs {fd}", e.kinetic);
        assert_eq!(e.total, e.kinetic + e.potential_ee + e.potential_en + e.potential_nn);
    }
}
