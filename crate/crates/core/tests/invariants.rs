use proptest::prelude::*;
use rand::Rng;

use subdet::anticoncentration::{
    estimate_lower_tail, vertex_opt, BlockRestriction, MultilinearObjective, VolumeObjective,
};
use subdet::format::InstanceFile;
use subdet::instances::{gen_graphic_regular, gen_random_partition, FactorMode, Instance};
use subdet::kernel::KernelInstance;
use subdet::numkernel::RealMatrix;
use subdet::oracle::{brute_force_partition, brute_force_regular};
use subdet::partition::{reduce_to_unit_quotas, solve_partition, PartitionInstance};
use subdet::regular::{solve_regular, RegularInstance};
use subdet::SeedStream;

fn permute_columns(v: &RealMatrix<f64>, perm: &[usize]) -> RealMatrix<f64> {
    // new column perm[j] is old column j
    let mut cols = vec![Vec::new(); perm.len()];
    for (j, &pj) in perm.iter().enumerate() {
        cols[pj] = v.column(j);
    }
    RealMatrix::from_columns(&cols).unwrap()
}

fn random_perm(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

#[test]
fn partition_optimum_is_label_invariant() {
    let mut rng = SeedStream::new(71).fork(0);
    for _ in 0..20 {
        let inst: PartitionInstance<f64> = gen_random_partition(8, 3, &[1, 1, 1], 4, &mut rng).unwrap();
        let perm = random_perm(8, &mut rng);
        let v = permute_columns(inst.kernel().factor(), &perm);
        let parts = inst
            .parts()
            .iter()
            .map(|p| {
                let mut q: Vec<usize> = p.iter().map(|&e| perm[e]).collect();
                q.sort_unstable();
                q
            })
            .collect();
        let relabeled = PartitionInstance::new(KernelInstance::from_factor(v), parts, inst.quotas().to_vec()).unwrap();
        let a = brute_force_partition(&inst).unwrap();
        let b = brute_force_partition(&relabeled).unwrap();
        assert!((a.best_log.log_abs - b.best_log.log_abs).abs() < 1e-9);
        let mapped: Vec<usize> = {
            let mut s: Vec<usize> = a.best_set.iter().map(|&e| perm[e]).collect();
            s.sort_unstable();
            s
        };
        let mapped_value = relabeled.kernel().log_det_principal(&mapped).unwrap();
        assert!((mapped_value.log_abs - b.best_log.log_abs).abs() < 1e-9);
    }
}

#[test]
fn regular_optimum_is_label_invariant() {
    let mut rng = SeedStream::new(72).fork(0);
    for _ in 0..20 {
        let inst: RegularInstance<f64> = gen_graphic_regular(5, 8, &mut rng, FactorMode::Gaussian).unwrap();
        let perm = random_perm(8, &mut rng);
        let v = permute_columns(inst.kernel().factor(), &perm);
        let b = permute_columns(inst.representation(), &perm);
        let relabeled = RegularInstance::new(KernelInstance::from_factor(v), b).unwrap();
        let x = brute_force_regular(&inst).unwrap();
        let y = brute_force_regular(&relabeled).unwrap();
        assert_eq!(x.enumerated, y.enumerated);
        assert!((x.best_log.log_abs - y.best_log.log_abs).abs() < 1e-9);
    }
}

#[test]
fn kernel_scaling_scales_objective() {
    // det(c^2 L_S) = c^{2r} det(L_S): chosen sets agree, values scale
    let mut rng = SeedStream::new(73).fork(0);
    let inst: PartitionInstance<f64> = gen_random_partition(9, 3, &[1, 1, 1], 5, &mut rng).unwrap();
    let c = 3.0;
    let v = inst.kernel().factor();
    let scaled_v = RealMatrix::new(v.rows(), v.cols(), v.as_slice().iter().map(|x| x * c).collect()).unwrap();
    let scaled = PartitionInstance::new(
        KernelInstance::from_factor(scaled_v),
        inst.parts().to_vec(),
        inst.quotas().to_vec(),
    )
    .unwrap();
    let a = solve_partition(&inst, 30, SeedStream::new(5)).unwrap();
    let b = solve_partition(&scaled, 30, SeedStream::new(5)).unwrap();
    assert_eq!(a.chosen_set, b.chosen_set);
    let expected = a.objective_log.unwrap() + 6.0 * c.ln();
    assert!((b.objective_log.unwrap() - expected).abs() < 1e-9);
}

#[test]
fn solvers_do_not_depend_on_pool_size() {
    let mut rng = SeedStream::new(74).fork(0);
    let p: PartitionInstance<f64> = gen_random_partition(10, 4, &[1, 1, 0, 1], 4, &mut rng).unwrap();
    let g: RegularInstance<f64> = gen_graphic_regular(5, 9, &mut rng, FactorMode::Gaussian).unwrap();
    let run = |n: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| {
                (
                    solve_partition(&p, 40, SeedStream::new(1)).unwrap(),
                    solve_regular(&g, 40, SeedStream::new(1)).unwrap(),
                )
            })
    };
    assert_eq!(run(1), run(5));
}

#[test]
fn volume_restriction_is_two_anticoncentrated() {
    let mut rng = SeedStream::new(75).fork(0);
    for k in 0..4u64 {
        let inst: PartitionInstance<f64> = gen_random_partition(8, 2, &[1, 1], 3, &mut rng).unwrap();
        let unit = reduce_to_unit_quotas(&inst);
        let f = VolumeObjective::new(&unit);
        let restriction = BlockRestriction::random(&f, 0, SeedStream::new(k)).unwrap();
        let (_, opt) = vertex_opt(&restriction).unwrap();
        for c in [0.05, 0.1, 0.2] {
            let est = estimate_lower_tail(&restriction, opt, c, 2.0, 100_000, SeedStream::new(100 + k)).unwrap();
            assert!(est.below_bound(), "{est:?}");
        }
    }
}

#[test]
fn multilinear_restriction_is_anticoncentrated() {
    // |h| restricted to one coordinate is |affine|, so Pr[< c OPT] <= 2c
    let mut rng = SeedStream::new(76).fork(0);
    let inst: RegularInstance<f64> = gen_graphic_regular(4, 6, &mut rng, FactorMode::Gaussian).unwrap();
    let f = MultilinearObjective::new(&inst).unwrap();
    for block in 0..3 {
        let restriction = BlockRestriction::random(&f, block, SeedStream::new(block as u64)).unwrap();
        let (_, opt) = vertex_opt(&restriction).unwrap();
        for c in [0.05, 0.1, 0.2] {
            let mut est = estimate_lower_tail(&restriction, opt, c, 1.0, 100_000, SeedStream::new(9)).unwrap();
            est.bound = 2.0 * c;
            assert!(est.below_bound(), "{est:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn instance_files_round_trip(seed in any::<u64>(), nodes in 3usize..6, extra in 0usize..4, t in 1usize..4) {
        let mut rng = SeedStream::new(seed).fork(0);
        let regular: RegularInstance<f64> =
            gen_graphic_regular(nodes, nodes - 1 + extra, &mut rng, FactorMode::Gaussian).unwrap();
        let quotas = vec![1; t];
        let partition: PartitionInstance<f64> = gen_random_partition(6, t, &quotas, 3, &mut rng).unwrap();
        for inst in [Instance::Regular(regular), Instance::Partition(partition)] {
            let text = InstanceFile::from_instance(&inst).to_json();
            let back = InstanceFile::parse(&text).unwrap().to_instance().unwrap();
            prop_assert_eq!(&back, &inst);
            prop_assert_eq!(InstanceFile::from_instance(&back).to_json(), text);
        }
    }

    #[test]
    fn solutions_are_feasible(seed in any::<u64>(), q0 in 0usize..3, q1 in 0usize..3) {
        prop_assume!(q0 + q1 > 0);
        let mut rng = SeedStream::new(seed).fork(0);
        let inst: PartitionInstance<f64> = gen_random_partition(8, 2, &[q0, q1], 4, &mut rng).unwrap();
        let report = solve_partition(&inst, 5, SeedStream::new(seed)).unwrap();
        prop_assert!(inst.is_feasible(&report.chosen_set));
        let exact = brute_force_partition(&inst).unwrap();
        prop_assert!(report.objective_log.unwrap() <= exact.best_log.log_abs + 1e-9);
    }
}
