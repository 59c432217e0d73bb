use proptest::prelude::*;
use superhedge::paths::{
    absolute_crossing_times, discretize_detailed, is_in_d_epsilon, log_crossing_times, sup_norm_distance,
    ExpFbmSampler, GbmSampler, GridFamily, JumpPath, PathSampler, PricePath, SampledPath,
};
use superhedge::tree::{build_tree, TreeConfig};

const REL: f64 = 1e-12;

fn log_walk() -> impl Strategy<Value = SampledPath> {
    prop::collection::vec(-0.08f64..0.08, 1..300).prop_map(|steps| {
        let mut v = vec![1.0];
        let mut x = 0.0;
        for s in steps {
            x += s;
            v.push(f64::exp(x));
        }
        SampledPath::uniform(1.0, v).unwrap()
    })
}

fn jump_path() -> impl Strategy<Value = JumpPath> {
    prop::collection::vec((0.01f64..0.3, 0.2f64..3.0), 0..6).prop_map(|steps| {
        let mut t = 0.0;
        let mut times = Vec::new();
        let mut levels = vec![1.0];
        for (gap, level) in steps {
            t += gap;
            if t >= 1.0 {
                break;
            }
            times.push(t);
            levels.push(level);
        }
        JumpPath::new(times, levels, 1.0).unwrap()
    })
}

proptest! {
    #[test]
    fn log_crossings_partition_the_path(path in log_walk(), eps in 0.02f64..0.2) {
        let d = log_crossing_times(&path, eps);
        let v = path.values();
        let anchors = d.anchor_indices();
        prop_assert!(anchors.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(anchors.last().copied().unwrap_or(0) < d.terminal_index());
        for w in anchors.windows(2) {
            prop_assert!((v[w[1]].ln() - v[w[0]].ln()).abs() >= eps * (1.0 - REL));
        }
        // Between registrations the path stays inside the band around the
        // current anchor.
        let mut k = 0;
        for i in 1..d.terminal_index() {
            if k + 1 < anchors.len() && anchors[k + 1] == i {
                k += 1;
                continue;
            }
            prop_assert!((v[i].ln() - v[anchors[k]].ln()).abs() < eps);
        }
        prop_assert_eq!(d.crossing_values().len(), d.count());
    }

    #[test]
    fn absolute_crossings_respect_threshold(path in log_walk(), delta in 0.05f64..0.5) {
        let d = absolute_crossing_times(&path, delta);
        let v = path.values();
        for (w, &val) in d.anchor_indices().windows(2).zip(d.crossing_values()) {
            prop_assert!((v[w[1]] - v[w[0]]).abs() >= delta * (1.0 - REL));
            prop_assert_eq!(val, v[w[1]]);
        }
    }

    #[test]
    fn discretization_lands_in_the_grid(path in log_walk(), max_jumps in 1usize..6) {
        let eps = 0.05;
        let grid = GridFamily::uniform(4);
        match discretize_detailed(&path, eps, max_jumps, &grid) {
            Ok(d) => {
                let times = d.crossings.crossing_times(&path);
                prop_assert_eq!(d.snapped_times.len(), d.crossings.count().min(max_jumps));
                prop_assert_eq!(d.frozen, d.crossings.count() > max_jumps);
                for (snapped, actual) in d.snapped_times.iter().zip(&times) {
                    prop_assert!(snapped < actual);
                }
                for (k, gap) in d.jump_path.gaps().iter().enumerate() {
                    prop_assert!(grid.spec(eps, k as u32 + 1).unwrap().contains(*gap, 1e-12));
                }
                prop_assert_eq!(d.jump_path.levels()[0], path.initial());
                prop_assert!(d.max_log_overshoot(eps) >= 0.0);
            }
            Err(e) => prop_assert!(e.to_string().contains("grid"), "{}", e),
        }
    }

    #[test]
    fn sup_distance_is_a_metric(a in jump_path(), b in jump_path(), c in jump_path()) {
        let ab = sup_norm_distance(&a, &b);
        prop_assert!((ab - sup_norm_distance(&b, &a)).abs() <= REL);
        prop_assert_eq!(sup_norm_distance(&a, &a), 0.0);
        prop_assert!(ab <= sup_norm_distance(&a, &c) + sup_norm_distance(&c, &b) + REL);
        let scaled = sup_norm_distance(&a.scaled(2.5), &b.scaled(2.5));
        prop_assert!((scaled - 2.5 * ab).abs() <= 1e-12 * (1.0 + scaled));
    }

    #[test]
    fn samplers_are_reproducible(seed in any::<u64>(), stream in 0u64..1000) {
        let gbm = GbmSampler::new(0.01, 0.3, 64, 1.0).unwrap();
        let p = gbm.sample(seed, stream);
        prop_assert_eq!(&p, &gbm.sample(seed, stream));
        prop_assert_ne!(&p, &gbm.sample(seed, stream + 1));
        prop_assert_eq!(p.initial(), 1.0);
        prop_assert!(p.values().iter().all(|v| *v > 0.0));
        prop_assert!(p.is_canonical());
    }
}

#[test]
fn tree_paths_belong_to_the_jump_space() {
    let grid = GridFamily::uniform(3);
    let tree = build_tree(&TreeConfig::dyadic(0.05, grid.clone(), 3, 1.0)).unwrap();
    for &leaf in tree.leaves() {
        assert!(is_in_d_epsilon(&tree.jump_path(leaf), 0.05, &grid, 1e-12));
    }
}

#[test]
fn fbm_paths_are_reproducible() {
    let s = ExpFbmSampler::new(0.7, 0.2, 200, 1.0).unwrap();
    assert_eq!(s.sample(3, 9), s.sample(3, 9));
    assert_eq!(s.sample(3, 9).initial(), 1.0);
}
