use nmx::infostate::{definitional_layers, follow_history, HashedPolicy};
use nmx::nested::HatModel;
use nmx::random::{random_instance, InstanceParams};

/// Every information state of the direct construction, at every time and
/// level, is reproduced by the recursion along the same new information.
/// Returns the number of states compared.
fn check(params: &InstanceParams, seeds: std::ops::Range<u64>) -> usize {
    let mut compared = 0;
    for seed in seeds {
        let inst = random_instance(seed, params);
        let hm = HatModel::build(&inst.model, &inst.info).unwrap();
        let root = hm.num_subsystems() - 1;
        let policy = HashedPolicy {
            hm: &hm,
            seed: seed.wrapping_mul(31),
        };
        let layers = definitional_layers(&hm, &policy, root).unwrap();
        for (t, layer) in layers.iter().enumerate() {
            for n in 0..=root {
                for (c, state) in &layer.states[n] {
                    let mut z0 = vec![Vec::new()];
                    z0.extend(split(&hm, n, t, c));
                    let common = hm.common_from_new(n, t, &z0);
                    let zs: Vec<Vec<Vec<u32>>> = (n..=root)
                        .map(|m| hm.project_new(n, m, t, &common).unwrap())
                        .collect();
                    let ctx = follow_history(&hm, &policy, n, root, &zs, t).unwrap();
                    assert_eq!(&ctx[0], state, "seed {seed} t={t} n={n}");
                    for (k, held) in ctx.iter().enumerate() {
                        assert_eq!(
                            layer.states[n + k][&zs[k].concat()],
                            *held,
                            "seed {seed} t={t} n={n}"
                        );
                    }
                    compared += 1;
                }
            }
        }
    }
    compared
}

fn split(hm: &HatModel, n: usize, t: usize, c: &[u32]) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut pos = 0;
    for s in 1..=t {
        let k = hm.new_info_ids(s, n).len();
        out.push(c[pos..pos + k].to_vec());
        pos += k;
    }
    assert_eq!(pos, c.len());
    out
}

#[test]
fn recursion_reproduces_direct_construction_two_levels() {
    assert!(check(&InstanceParams::default(), 0..150) > 150);
}

#[test]
fn recursion_reproduces_direct_construction_three_levels() {
    let inst_levels: Vec<usize> = (0..150)
        .map(|s| {
            random_instance(s, &InstanceParams::three_levels())
                .model
                .num_subsystems
        })
        .collect();
    assert!(inst_levels.contains(&3));
    assert!(check(&InstanceParams::three_levels(), 0..150) > 150);
}
