//! Property tests for the offload cost model: scaling laws, the
//! batch-size solver's maximality, the batch-wise/layer-wise movement
//! ordering, and agreement between the analytic estimates and the
//! measured expansion of real sampled runs.

use proptest::prelude::*;

use gcnbench_core::cost::{
    est_batchwise_expansion, est_batchwise_footprint, est_batchwise_movement,
    est_layerwise_footprint, est_layerwise_movement, max_batch_size, num_batches, DeviceModel,
    WorkloadSpec,
};
use gcnbench_core::engine::{Aggregation, GcnModel};
use gcnbench_core::error::Error;
use gcnbench_core::features::gen_features;
use gcnbench_core::generate::{gen_random_graph, GraphModel};
use gcnbench_core::graph::compute_stats;
use gcnbench_core::clock::KernelClock;
use gcnbench_core::sampler::{run_batchwise_clocked, SamplingConfig, SamplingMode};

fn workload_strategy() -> impl Strategy<Value = WorkloadSpec> {
    (
        1u64..3,                                  // depth selector -> D in 1..=4 below
        prop::collection::vec(1u64..300, 2..=5),  // dims
        1u64..5_000_000,                          // V
        0.0f64..64.0,                             // avg degree
        prop_oneof![Just(SamplingMode::BatchWise), Just(SamplingMode::LayerWise)],
    )
        .prop_flat_map(|(_, dims, v, d, mode)| {
            (Just(dims), Just(v), Just(d), Just(mode), 1u64..=v)
        })
        .prop_map(|(dims, v, d, mode, b)| WorkloadSpec::new(v, d, dims, b, mode).unwrap())
}

proptest! {
    // Feature movement scales with element size; adjacency structure
    // does not. Doubling the element size therefore doubles the total
    // minus the adjacency contribution, exactly.
    #[test]
    fn movement_is_linear_in_element_size(w in workload_strategy()) {
        let dev4 = DeviceModel::new(u64::MAX, 1_000_000_000).unwrap();
        let dev8 = dev4.clone().with_element_size(8).unwrap();
        let (r4, r8) = match w.mode {
            SamplingMode::BatchWise => (
                est_batchwise_movement(&w, &dev4),
                est_batchwise_movement(&w, &dev8),
            ),
            SamplingMode::LayerWise => (
                est_layerwise_movement(&w, &dev4),
                est_layerwise_movement(&w, &dev8),
            ),
        };
        let (Ok(r4), Ok(r8)) = (r4, r8) else {
            // Overflow at petabyte-plus scales is a legitimate outcome;
            // it must be symmetric (the larger element size overflows
            // whenever the smaller one does).
            return Ok(());
        };
        let batches = num_batches(w.num_vertices, w.batch_size).unwrap();
        let layers = match w.mode {
            SamplingMode::BatchWise => 1,
            SamplingMode::LayerWise => w.num_layers() as u64,
        };
        let adj_total = r4.adjacency_bytes_per_batch as u128 * batches as u128 * layers as u128;
        prop_assert_eq!(
            r8.total_movement_bytes as u128 + adj_total,
            2 * r4.total_movement_bytes as u128
        );
    }

    // Expansion estimates grow with batch size and never exceed the
    // vertex count.
    #[test]
    fn expansion_is_monotone_and_capped(
        v in 1u64..10_000_000,
        d in 0.0f64..80.0,
        depth in 1usize..=4,
        (b1, b2) in (1u64..1_000_000, 1u64..1_000_000),
    ) {
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let dims = vec![16u64; depth + 1];
        let make = |b: u64| -> Option<WorkloadSpec> {
            (b <= v).then(|| WorkloadSpec::new(v, d, dims.clone(), b, SamplingMode::BatchWise).unwrap())
        };
        if let (Some(wl), Some(wh)) = (make(lo), make(hi)) {
            let el = est_batchwise_expansion(&wl).unwrap();
            let eh = est_batchwise_expansion(&wh).unwrap();
            prop_assert!(el <= eh);
            prop_assert!(eh <= v);
            prop_assert!(el >= 1);
        }
    }

    // In the regime where batch-wise expansion has not saturated
    // (uniform dims, non-trivial degree), layer-wise sampling moves
    // strictly less data: its 1-hop expansion never pays the d^D blowup.
    #[test]
    fn layerwise_moves_less_than_batchwise_before_saturation(
        d in 4.0f64..48.0,
        depth in 2usize..=4,
        dim in 8u64..=128,
        b in 16u64..=4096,
    ) {
        let uncapped = (b as f64 * d.powi(depth as i32)).ceil() as u64;
        let v = uncapped * 2;
        let dims = vec![dim; depth + 1];
        let dev = DeviceModel::new(u64::MAX, 32_000_000_000).unwrap();
        let bw = WorkloadSpec::new(v, d, dims.clone(), b, SamplingMode::BatchWise).unwrap();
        let lw = WorkloadSpec::new(v, d, dims, b, SamplingMode::LayerWise).unwrap();
        match (est_batchwise_movement(&bw, &dev), est_layerwise_movement(&lw, &dev)) {
            (Ok(bw_r), Ok(lw_r)) => prop_assert!(
                lw_r.total_movement_bytes < bw_r.total_movement_bytes,
                "layer-wise {} >= batch-wise {} at d={}, D={}, dim={}, b={}",
                lw_r.total_movement_bytes, bw_r.total_movement_bytes, d, depth, dim, b
            ),
            // Batch-wise totals can exceed u64 at this regime's corners;
            // a representable layer-wise total is then smaller a fortiori.
            (Err(Error::Capacity(_)), Ok(_)) => {}
            (Err(Error::Capacity(_)), Err(Error::Capacity(_))) => {}
            (Ok(_), Err(Error::Capacity(_))) => {
                return Err(TestCaseError::fail(
                    "layer-wise overflowed where batch-wise did not",
                ));
            }
            (a, b) => {
                return Err(TestCaseError::fail(format!(
                    "unexpected estimator errors: {a:?} / {b:?}"
                )));
            }
        }
    }

    // The solved batch size is feasible and maximal.
    #[test]
    fn solved_batch_size_is_feasible_and_maximal(
        v in 1u64..2_000_000,
        d in 0.0f64..40.0,
        dims in prop::collection::vec(1u64..300, 2..=5),
        mode in prop_oneof![Just(SamplingMode::BatchWise), Just(SamplingMode::LayerWise)],
        capacity in 1u64..1u64 << 40,
    ) {
        let w = WorkloadSpec::new(v, d, dims, 1, mode).unwrap();
        let dev = DeviceModel::new(capacity, 32_000_000_000).unwrap();
        let footprint = |b: u64| -> u64 {
            let wb = w.clone().with_batch_size(b).unwrap();
            match mode {
                SamplingMode::BatchWise => est_batchwise_footprint(&wb, &dev).unwrap().total_bytes(),
                SamplingMode::LayerWise => est_layerwise_footprint(&wb, &dev, None).unwrap().total_bytes(),
            }
        };
        match max_batch_size(&w, &dev) {
            Ok(b) => {
                prop_assert!(b >= 1 && b <= v);
                prop_assert!(footprint(b) <= capacity);
                if b < v {
                    prop_assert!(footprint(b + 1) > capacity);
                }
            }
            Err(Error::Capacity(_)) => prop_assert!(footprint(1) > capacity),
            Err(e) => return Err(TestCaseError::fail(format!("unexpected error: {e}"))),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // The analytic expansion estimate brackets the measured expansion of
    // a real run within an order of magnitude on uniform random graphs,
    // and every trace record's byte counts re-derive exactly from its
    // own vertex counts.
    #[test]
    fn analytic_expansion_brackets_measured_expansion(
        v in 200usize..1500,
        dbar in 1u32..=12,
        depth in 1usize..=3,
        b in 8usize..=128,
        seed in any::<u64>(),
    ) {
        let e = v * dbar as usize;
        let g = gen_random_graph(GraphModel::ErdosRenyi, v, e, seed).unwrap();
        let dims = vec![4usize; depth + 1];
        let x = gen_features(v, 4, seed ^ 5).unwrap();
        let model = GcnModel::seeded(&dims, false, Aggregation::Mean, seed ^ 9).unwrap();
        let b = b.min(v);
        let cfg = SamplingConfig::new(SamplingMode::BatchWise, b).unwrap();
        let run =
            run_batchwise_clocked(&g, &x, &model, &cfg, &mut KernelClock::disabled(), true)
                .unwrap();

        let stats = compute_stats(&g).unwrap();
        let w = WorkloadSpec::from_stats(
            &stats,
            dims.iter().map(|&d| d as u64).collect(),
            b as u64,
            SamplingMode::BatchWise,
        ).unwrap();
        let analytic = est_batchwise_expansion(&w).unwrap() as f64;
        for rec in &run.trace {
            prop_assert_eq!(rec.bytes_in, rec.expanded as u64 * 4 * 4);
            prop_assert_eq!(rec.bytes_out, rec.targets as u64 * 4 * 4);
            prop_assert!(rec.subgraph_edges <= g.num_edges());
            let measured = rec.expanded as f64;
            // Only full-size batches follow the uniform-batch arithmetic;
            // the tail batch may be arbitrarily small.
            if rec.targets == b {
                prop_assert!(
                    measured <= analytic * 10.0 && analytic <= measured * 10.0,
                    "measured {} vs analytic {}", measured, analytic
                );
            }
        }
    }
}
