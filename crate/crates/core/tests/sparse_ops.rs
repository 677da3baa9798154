mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use semdb_core::sparse::*;

#[test]
fn sparse_conv_matches_dense_oracle_on_8x8() {
    let mut r = rng(11);
    for stride in [1, 2] {
        let g = random_grid(&mut r, 8, 8, 3, 0.3);
        let k = ConvKernel::seeded(3, stride, 3, 4, &mut r);
        let sparse = sparse_conv(&g, &k).unwrap();
        let dense = dense_conv(&g.densify(), &k);
        assert_eq!(sparse.cells(), dense_active_set(&g, &k).as_slice());
        for (cell, f) in sparse.iter() {
            assert!(max_abs_diff(f, dense.at(cell.row as usize, cell.col as usize)) < 1e-9);
        }
        // Everything outside the active set is bias-only in the dense result.
        for row in 0..dense.height {
            for col in 0..dense.width {
                if sparse.get(Cell::new(row as u32, col as u32)).is_none() {
                    assert!(max_abs_diff(dense.at(row, col), k.bias()) == 0.0);
                }
            }
        }
    }
}

#[test]
fn subm_conv_matches_masked_dense_oracle() {
    let mut r = rng(12);
    let g = random_grid(&mut r, 8, 8, 2, 0.3);
    let k = ConvKernel::seeded(3, 1, 2, 5, &mut r);
    let out = subm_conv(&g, &k).unwrap();
    assert_eq!(out.cells(), g.cells());
    let dense = dense_conv(&g.densify(), &k);
    for (cell, f) in out.iter() {
        assert!(max_abs_diff(f, dense.at(cell.row as usize, cell.col as usize)) < 1e-9);
    }
}

#[test]
fn maxpool_matches_brute_force() {
    let mut r = rng(13);
    for _ in 0..50 {
        let g = random_grid(&mut r, 12, 12, 1, 0.4);
        // Coarse scores so ties actually occur.
        let scores: Vec<f64> = (0..g.len()).map(|_| r.gen_range(0..4) as f64).collect();
        for window in [3, 5] {
            let out = subm_maxpool(&g, window, Score::External(&scores)).unwrap();
            assert_eq!(out.cells(), brute_force_maxpool(g.cells(), &scores, window).as_slice());
        }
    }
}

#[test]
fn sparse_add_matches_dense_addition() {
    let mut r = rng(14);
    let a = random_grid(&mut r, 10, 7, 3, 0.4);
    let b = random_grid(&mut r, 10, 7, 3, 0.4);
    let sum = sparse_add(&a, &b).unwrap();
    let (da, db) = (a.densify(), b.densify());
    let mut want = DenseGrid::zeros(10, 7, 3);
    for i in 0..want.data.len() {
        want.data[i] = da.data[i] + db.data[i];
    }
    assert_eq!(sum.densify(), want);
    let mut union: Vec<Cell> = a.cells().iter().chain(b.cells()).copied().collect();
    union.sort();
    union.dedup();
    assert_eq!(sum.cells(), union.as_slice());
}

#[test]
fn voxelize_matches_per_point_binning() {
    let mut r = rng(15);
    let spec = VoxelSpec::new((0.0, 10.0), (0.0, 10.0), (1.0, 1.0)).unwrap();
    let points: Vec<Point> = (0..100)
        .map(|_| Point {
            x: r.gen_range(0.0..10.0),
            y: r.gen_range(0.0..10.0),
            z: r.gen_range(-1.0..2.0),
            intensity: r.gen_range(0.0..1.0),
        })
        .collect();
    let mut oracle: Vec<Cell> = points
        .iter()
        .map(|p| Cell::new(p.y.floor() as u32, p.x.floor() as u32))
        .collect();
    oracle.sort();
    oracle.dedup();
    let g = voxelize(&PointCloud::new(points.clone()).unwrap(), &spec, VoxelEncoder::Stats).unwrap();
    assert_eq!(g.cells(), oracle.as_slice());
    let total: f64 = g.iter().map(|(_, f)| f[0]).sum();
    assert_eq!(total, 100.0);
}

fn grid_strategy(channels: usize) -> impl Strategy<Value = SparseGrid> {
    (1usize..=16, 1usize..=16, 0.05f64..0.6, any::<u64>()).prop_map(move |(h, w, d, seed)| {
        random_grid(&mut rng(seed), h, w, channels, d)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subm_closure_and_dense_equivalence(g in grid_strategy(2), k in prop::sample::select(vec![1usize, 3, 5]), seed in any::<u64>()) {
        let mut r = rng(seed);
        let kern = ConvKernel::seeded(k, 1, 2, 3, &mut r);
        let out = subm_conv(&g, &kern).unwrap();
        prop_assert_eq!(out.cells(), g.cells());
        let sc = sparse_conv(&g, &kern).unwrap();
        let dense = dense_conv(&g.densify(), &kern);
        for (cell, f) in sc.iter() {
            prop_assert!(max_abs_diff(f, dense.at(cell.row as usize, cell.col as usize)) <= 1e-6);
        }
    }

    #[test]
    fn sparse_add_commutes_and_associates(seed in any::<u64>(), h in 1usize..=16, w in 1usize..=16) {
        let mut r = rng(seed);
        let a = random_grid(&mut r, h, w, 2, 0.3);
        let b = random_grid(&mut r, h, w, 2, 0.3);
        let c = random_grid(&mut r, h, w, 2, 0.3);
        let ab = sparse_add(&a, &b).unwrap();
        let ba = sparse_add(&b, &a).unwrap();
        prop_assert_eq!(ab.cells(), ba.cells());
        prop_assert!(max_abs_diff(ab.features(), ba.features()) <= 1e-6);
        let left = sparse_add(&ab, &c).unwrap();
        let right = sparse_add(&a, &sparse_add(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left.cells(), right.cells());
        prop_assert!(max_abs_diff(left.features(), right.features()) <= 1e-6);
        let e = SparseGrid::empty((h, w), 1, 2);
        prop_assert_eq!(&sparse_add(&a, &e).unwrap(), &a);
    }

    #[test]
    fn upsample_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fine = random_grid(&mut r, 16, 16, 1, 0.3);
        let k = ConvKernel::seeded(3, 2, 1, 1, &mut r);
        let coarse = sparse_conv(&sparse_conv(&fine, &k).unwrap(), &k).unwrap();
        prop_assert_eq!(coarse.stride(), 4);
        for factor in [2u32, 4] {
            let up = index_upsample(&coarse, factor).unwrap();
            prop_assert_eq!(up.len(), coarse.len());
            prop_assert_eq!(up.features(), coarse.features());
            let back: Vec<Cell> = up.cells().iter().map(|c| Cell::new(c.row / factor, c.col / factor)).collect();
            prop_assert_eq!(back.as_slice(), coarse.cells());
        }
    }

    #[test]
    fn voxelize_is_order_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let spec = VoxelSpec::new((0.0, 8.0), (0.0, 8.0), (0.5, 0.5)).unwrap();
        let mut pts: Vec<Point> = (0..60).map(|_| Point {
            x: r.gen_range(0.0..8.0), y: r.gen_range(0.0..8.0), z: r.gen_range(0.0..2.0), intensity: r.gen_range(0.0..1.0),
        }).collect();
        let a = voxelize(&PointCloud::new(pts.clone()).unwrap(), &spec, VoxelEncoder::Stats).unwrap();
        pts.reverse();
        pts.swap(3, 40);
        let b = voxelize(&PointCloud::new(pts).unwrap(), &spec, VoxelEncoder::Stats).unwrap();
        prop_assert_eq!(a, b);
    }
}
