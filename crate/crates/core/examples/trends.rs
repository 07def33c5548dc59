//! Scratch measurement harness: prints category fractions across an
//! embedding-dimension sweep and for capacity-forced tiny batches, to
//! sanity-check trend behavior on the current machine.

use gcnbench_core::bench::{run_characterization, PipelineMode, RunSpec};
use gcnbench_core::cost::{est_batchwise_footprint, DeviceModel, WorkloadSpec};
use gcnbench_core::engine::{Aggregation, GcnModel};
use gcnbench_core::features::gen_features;
use gcnbench_core::generate::{gen_random_graph, GraphModel};
use gcnbench_core::graph::compute_stats;
use gcnbench_core::sampler::SamplingMode;

fn main() {
    // Part 1: dimension sweep trends on ER V=50k E=2M.
    let g = gen_random_graph(GraphModel::ErdosRenyi, 50_000, 2_000_000, 11).unwrap();
    let x = gen_features(50_000, 1, 12).unwrap();
    let dev = DeviceModel::default_accelerator();
    println!("h    spmm      dense     glue      offload   total     f_spmm  f_glue  f_off");
    for h in [8usize, 16, 32, 64, 128, 256] {
        let model = GcnModel::seeded(&[1, h, 1], true, Aggregation::SymNorm, 13).unwrap();
        let spec = RunSpec::new(PipelineMode::Full, 9);
        let out = run_characterization(&g, &x, &model, &spec, Some(&dev)).unwrap();
        let r = &out.report;
        println!(
            "{:<4} {:<9.5} {:<9.5} {:<9.5} {:<9.6} {:<9.5} {:.4}  {:.4}  {:.5}",
            h,
            r.seconds.spmm,
            r.seconds.dense_mm,
            r.seconds.glue,
            r.seconds.offload,
            r.total_seconds,
            r.fractions.spmm,
            r.fractions.glue,
            r.fractions.offload
        );
    }

    // Part 2: sampled vs full total at h=64.
    let model = GcnModel::seeded(&[1, 64, 1], true, Aggregation::SymNorm, 13).unwrap();
    let full = run_characterization(&g, &x, &model, &RunSpec::new(PipelineMode::Full, 3), Some(&dev))
        .unwrap();
    for (mode, b) in [
        (PipelineMode::BatchWise, 4096usize),
        (PipelineMode::LayerWise, 4096),
    ] {
        let spec = RunSpec::new(mode, 3).with_batch_size(b);
        let out = run_characterization(&g, &x, &model, &spec, Some(&dev)).unwrap();
        println!(
            "{:?} b={} total {:.4}s vs full {:.4}s (sampling frac {:.3})",
            mode,
            b,
            out.report.total_seconds,
            full.report.total_seconds,
            out.report.fractions.sampling
        );
    }

    // Part 3: capacity-forced tiny batches; sampling + offload share.
    let g2 = gen_random_graph(GraphModel::ErdosRenyi, 20_000, 160_000, 21).unwrap();
    let stats = compute_stats(&g2).unwrap();
    for d in [1usize, 2, 4] {
        let dims = vec![d; 4];
        let x2 = gen_features(20_000, d, 22).unwrap();
        let model = GcnModel::seeded(&dims, true, Aggregation::SymNorm, 23).unwrap();
        let w = WorkloadSpec::from_stats(
            &stats,
            dims.iter().map(|&v| v as u64).collect(),
            20,
            SamplingMode::BatchWise,
        )
        .unwrap();
        let cap = est_batchwise_footprint(&w, &dev).unwrap().total_bytes();
        let tight = DeviceModel::new(cap, 32_000_000_000).unwrap();
        let spec = RunSpec::new(PipelineMode::BatchWise, 3).with_batch_size(20);
        let out = run_characterization(&g2, &x2, &model, &spec, Some(&tight)).unwrap();
        let r = &out.report;
        println!(
            "dims {:?}: sampling {:.3} offload {:.4} spmm {:.3} dense {:.3} glue {:.3} total {:.3}s",
            dims,
            r.fractions.sampling,
            r.fractions.offload,
            r.fractions.spmm,
            r.fractions.dense_mm,
            r.fractions.glue,
            r.total_seconds
        );
    }
}
