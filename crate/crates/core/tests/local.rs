use std::collections::BTreeSet;
use std::sync::Arc;

use gibbs_core::local::*;
use gibbs_core::model::builders::{ising_weight, ksat_weight, potts_weight};
use gibbs_core::model::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ising factor graph on a simple `d`-regular graph given by its edge list.
fn ising_on_edges(n: usize, d: usize, edges: &[(usize, usize)], beta: f64) -> FactorGraph {
    let model = Arc::new(ising(n, d, beta).unwrap());
    let mut ports: Vec<Vec<Port>> = vec![Vec::new(); n];
    for (e, &(u, v)) in edges.iter().enumerate() {
        ports[u].push((e, 0));
        ports[v].push((e, 1));
    }
    FactorGraph::from_var_ports(model, ports).unwrap()
}

fn lcf(n: usize, pattern: &[i64]) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    for i in 0..n {
        let j = (i as i64 + pattern[i % pattern.len()]).rem_euclid(n as i64) as usize;
        if i < j {
            edges.push((i, j));
        }
    }
    edges
}

/// Cubic graph of girth 8 on 30 vertices.
fn tutte_coxeter(beta: f64) -> FactorGraph {
    ising_on_edges(30, 3, &lcf(30, &[-13, -9, 7, -7, 9, 13]), beta)
}

/// Cubic graph of girth 6 on 14 vertices.
fn heawood(beta: f64) -> FactorGraph {
    ising_on_edges(14, 3, &lcf(14, &[5, -5]), beta)
}

fn ksat_graph(n: usize, k: usize, d0: usize, seed: u64) -> FactorGraph {
    let model = Arc::new(ksat(n, k, 1.0, &ksat_uniform_profile(n, d0)).unwrap());
    sample_graph(&model, seed).unwrap()
}

/// The same template with nodes listed in a random order (root kept first).
fn relabel(t: &Template, rng: &mut ChaCha8Rng) -> Template {
    let mut order: Vec<usize> = (1..t.len()).collect();
    order.shuffle(rng);
    order.insert(0, 0);
    let mut pos = vec![0; t.len()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let nodes = order
        .iter()
        .map(|&v| {
            let n = t.node(v);
            TNode { weight: n.weight, types: n.types.clone(), ports: n.ports.iter().map(|p| p.map(|(u, r)| (pos[u], r))).collect() }
        })
        .collect();
    Template::new(t.q(), t.weights().to_vec(), nodes).unwrap()
}

/// Swaps two clones of node `v` and fixes the partner back-references.
fn swap_slots(t: &Template, v: usize, i: usize, j: usize) -> Template {
    let mut nodes = t.nodes().to_vec();
    nodes[v].types.swap(i, j);
    nodes[v].ports.swap(i, j);
    for s in [i, j] {
        if let Some((u, r)) = nodes[v].ports[s] {
            nodes[u].ports[r] = Some((v, s));
        }
    }
    Template::new(t.q(), t.weights().to_vec(), nodes).unwrap()
}

fn permutable(t: &Template, v: usize) -> bool {
    t.weight_of(v).is_none_or(|w| {
        let ty = &t.node(v).types;
        let k = ty.len();
        let q = w.q();
        (0..w.table().len()).all(|idx| {
            let mut args = vec![0; k];
            let mut r = idx;
            for a in args.iter_mut().rev() {
                *a = r % q;
                r /= q;
            }
            (0..k).all(|i| {
                (0..k).filter(|&j| ty[j] == ty[i]).all(|j| {
                    let mut b = args.clone();
                    b.swap(i, j);
                    w.value(&b) == w.value(&args)
                })
            })
        })
    })
}

/// Backtracking tree isomorphism: a root-preserving bijection that keeps
/// kinds, degrees, weights and clone types, and permutes the clones of a
/// node only within a type class and only where the node is permutable.
fn iso(a: &Template, u: usize, pu: Option<usize>, b: &Template, v: usize, pv: Option<usize>) -> bool {
    let (na, nb) = (a.node(u), b.node(v));
    if na.is_variable() != nb.is_variable() || na.degree() != nb.degree() {
        return false;
    }
    if a.weight_of(u).map(|w| w.id()) != b.weight_of(v).map(|w| w.id()) {
        return false;
    }
    let free = permutable(a, u);
    if free != permutable(b, v) {
        return false;
    }
    match (pu, pv) {
        (Some(x), Some(y)) if na.types[x] != nb.types[y] || (!free && x != y) => return false,
        (None, None) | (Some(_), Some(_)) => {}
        _ => return false,
    }
    let branch = |s: usize, r: usize| match (na.ports[s], nb.ports[r]) {
        (None, None) => true,
        (Some((c, cs)), Some((e, es))) => iso(a, c, Some(cs), b, e, Some(es)),
        _ => false,
    };
    if !free {
        return na.types == nb.types && (0..na.degree()).filter(|&s| Some(s) != pu).all(|s| branch(s, s));
    }
    let mut ta = na.types.clone();
    let mut tb = nb.types.clone();
    ta.sort();
    tb.sort();
    if ta != tb {
        return false;
    }
    let left: Vec<usize> = (0..na.degree()).filter(|&s| Some(s) != pu).collect();
    let mut used = vec![false; nb.degree()];
    if let Some(y) = pv {
        used[y] = true;
    }
    fn assign(i: usize, left: &[usize], used: &mut [bool], ok: &dyn Fn(usize, usize) -> bool) -> bool {
        if i == left.len() {
            return true;
        }
        for r in 0..used.len() {
            if !used[r] && ok(left[i], r) {
                used[r] = true;
                if assign(i + 1, left, used, ok) {
                    return true;
                }
                used[r] = false;
            }
        }
        false
    }
    assign(0, &left, &mut used, &|s, r| na.types[s] == nb.types[r] && branch(s, r))
}

fn small_templates() -> Vec<Template> {
    let mut graphs = vec![heawood(0.3), ising_cycle(5, 0.3).unwrap()];
    graphs.push(sample_graph(&Arc::new(potts(6, 3, 3, 0.5).unwrap()), 1).unwrap());
    for seed in 0..3 {
        graphs.push(ksat_graph(6, 3, 3, seed));
        graphs.push(ksat_graph(4, 2, 2, seed));
    }
    let mut out = Vec::new();
    for g in &graphs {
        for depth in 0..3 {
            for x in 0..g.n() {
                out.push(neighborhood(g, Node::Variable(x), depth));
            }
            for a in 0..g.m() {
                out.push(neighborhood(g, Node::Factor(a), depth));
            }
        }
    }
    out.retain(Template::is_tree);
    out
}

#[test]
fn star_neighborhood() {
    let g = heawood(0.2);
    let t = neighborhood(&g, Node::Variable(0), 1);
    assert_eq!(t.len(), 4);
    assert!(t.root_is_variable() && t.is_tree());
    assert_eq!(t.root().degree(), 3);
    for v in 1..4 {
        let n = t.node(v);
        assert!(!n.is_variable());
        assert_eq!(n.ports.iter().flatten().count(), 1);
    }
}

#[test]
fn cycle_neighborhoods() {
    let g = ising_cycle(9, 0.4).unwrap();
    for x in 0..9 {
        let t = neighborhood(&g, Node::Variable(x), 3);
        assert!(t.is_tree());
        assert_eq!(t.len(), 7);
        assert_eq!(t.depth(), 3);
    }
    // A cycle through 3 variables and 3 factors closes at bipartite distance 3.
    let g = ising_cycle(3, 0.4).unwrap();
    assert!(!neighborhood(&g, Node::Variable(0), 3).is_tree());
    assert!(neighborhood(&g, Node::Variable(0), 2).is_tree());
    // Four variables and four factors close at distance 4.
    let g = ising_cycle(4, 0.4).unwrap();
    assert!(neighborhood(&g, Node::Variable(0), 3).is_tree());
    assert!(!neighborhood(&g, Node::Variable(0), 4).is_tree());
    assert!(!canonical_key(&neighborhood(&g, Node::Variable(0), 4)).is_tree());
}

#[test]
fn keys_are_relabeling_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for t in small_templates().iter().step_by(7) {
        let r = relabel(t, &mut rng);
        assert_eq!(canonical_key(t), canonical_key(&r));
        assert_eq!(strict_key(t), strict_key(&r));
    }
    let g = ising_cycle(4, 0.4).unwrap();
    let cyc = neighborhood(&g, Node::Factor(1), 5);
    assert_eq!(canonical_key(&cyc), canonical_key(&relabel(&cyc, &mut rng)));
}

#[test]
fn same_type_clone_swaps_at_variables_keep_the_key() {
    let g = ksat_graph(300, 3, 4, 5);
    for x in 0..30 {
        let t = neighborhood(&g, Node::Variable(x), 2);
        if !t.is_tree() {
            continue;
        }
        let s = swap_slots(&t, 0, 0, 1);
        assert_eq!(t.root().types[0], t.root().types[1]);
        assert_eq!(canonical_key(&t), canonical_key(&s));
        let mixed = swap_slots(&t, 0, 0, 3);
        assert_ne!(mixed.root().types, t.root().types);
    }
}

#[test]
fn key_matches_brute_force_isomorphism() {
    let ts = small_templates();
    let keys: Vec<CanonicalKey> = ts.iter().map(canonical_key).collect();
    let mut equal = 0;
    for i in 0..ts.len() {
        for j in i..ts.len() {
            let same = iso(&ts[i], 0, None, &ts[j], 0, None);
            assert_eq!(same, keys[i] == keys[j], "templates {i} and {j}");
            equal += usize::from(same);
        }
    }
    let distinct: BTreeSet<_> = keys.iter().collect();
    assert!(equal > ts.len() && distinct.len() > 20, "{equal} {}", distinct.len());
}

#[test]
fn path_lengths_and_families_differ() {
    let g = ising_cycle(9, 0.4).unwrap();
    let k2 = canonical_key(&neighborhood(&g, Node::Variable(0), 2));
    let k3 = canonical_key(&neighborhood(&g, Node::Variable(0), 3));
    assert_ne!(k2, k3);

    let th_i = limit_tree(&Family::Ising { d: 3, beta: 0.5 }, 2).unwrap();
    let th_p = limit_tree(&Family::Potts { d: 3, k: 2, beta: 0.5 }, 2).unwrap();
    assert_eq!(th_i.len(), 2);
    assert_eq!(th_p.len(), 2);
    for k in th_i.entries.keys() {
        assert_eq!(th_p.prob(k), 0.0);
    }
    let shapes = |d: &LocalDistribution| -> Vec<usize> { d.entries.values().map(|e| e.template.len()).collect() };
    assert_eq!(shapes(&th_i), shapes(&th_p));
    assert_eq!(th_i.tv_to(&th_p).unwrap(), 1.0);
}

/// A clause whose variables all have clone types `leaf`.
fn clause_template(signs: &[CloneType], leaf: &[CloneType]) -> Template {
    let w = ksat_weight(signs, 1.0).unwrap();
    let mut nodes = vec![TNode { weight: Some(0), types: signs.to_vec(), ports: vec![None; signs.len()] }];
    for (j, &s) in signs.iter().enumerate() {
        let at = leaf.iter().position(|&t| t == s).unwrap();
        let mut ports = vec![None; leaf.len()];
        ports[at] = Some((0, j));
        nodes[0].ports[j] = Some((j + 1, at));
        nodes.push(TNode { weight: None, types: leaf.to_vec(), ports });
    }
    Template::new(2, vec![w], nodes).unwrap()
}

#[test]
fn ksat_sign_patterns_are_positional() {
    let a = clause_template(&[1, 1, -1], &[1, -1]);
    let b = clause_template(&[1, -1, 1], &[1, -1]);
    assert_ne!(canonical_key(&a), canonical_key(&b));
    assert_eq!(canonical_key(&a), canonical_key(&relabel(&a, &mut ChaCha8Rng::seed_from_u64(1))));
}

#[test]
fn regular_acyclic_graph_has_two_keys() {
    let g = tutte_coxeter(0.5);
    assert_eq!(g.girth(), Some(8));
    for depth in 0..3 {
        assert!(g.is_l_acyclic(2 * depth + 3));
        let lam = local_distribution(&g, depth);
        assert_eq!(lam.len(), 2, "depth {depth}");
        assert!(lam.all_trees());
        let theta = limit_tree(&Family::Ising { d: 3, beta: 0.5 }, depth).unwrap();
        assert_eq!(lam.tv_to(&theta).unwrap(), 0.0);
    }
    let g = heawood(0.5);
    assert!(g.is_l_acyclic(5));
    assert_eq!(local_distribution(&g, 1).len(), 2);
}

#[test]
fn limit_tree_regular_shares() {
    let theta = limit_tree(&Family::Ising { d: 3, beta: 0.2 }, 2).unwrap();
    assert_eq!(theta.mode, DistributionMode::Exact);
    assert!((theta.variable_mass() - 0.4).abs() < 1e-15);
    assert!((theta.factor_mass() - 0.6).abs() < 1e-15);
    let v = theta.variable_entries().next().unwrap().1;
    assert_eq!(v.template.len(), 1 + 3 + 3);
    let f = theta.factor_entries().next().unwrap().1;
    assert_eq!(f.template.len(), 1 + 2 + 4 + 4);
    assert_eq!(f.template.depth(), 3);
    assert_eq!(theta.tv_to(&theta).unwrap(), 0.0);
    assert!(limit_tree(&Family::Ising { d: 0, beta: 0.2 }, 2).is_err());
}

#[test]
fn depth_zero_keys() {
    let theta = limit_tree(&Family::Ising { d: 4, beta: 0.2 }, 0).unwrap();
    let (k, e) = theta.variable_entries().next().unwrap();
    assert_eq!(e.template.len(), 1);
    assert!(e.template.root().ports.iter().all(Option::is_none));
    assert_eq!(format!("{k:?}"), "CanonicalKey(T|(V4,*[0,0,0,0,]RDDDD))");
    assert_eq!(theta.factor_entries().next().unwrap().1.template.len(), 3);

    let g = ksat_graph(6, 3, 3, 0);
    let t = neighborhood(&g, Node::Variable(0), 0);
    assert_eq!(format!("{:?}", canonical_key(&t)), "CanonicalKey(T|(V3,*[-1,1,1,]RDDD))");
}

#[test]
fn ksat_limit_small_depths() {
    let family = Family::Ksat { k: 3, beta: 1.0, profile: vec![((2, 1), 1.0)] };
    let th0 = limit_tree(&family, 0).unwrap();
    assert!((th0.variable_mass() - 0.5).abs() < 1e-15);
    assert_eq!(th0.factor_entries().count(), 8);
    let p = [2.0 / 3.0, 1.0 / 3.0];
    for pattern in 0..8usize {
        let signs: Vec<CloneType> = (0..3).map(|i| if pattern >> (2 - i) & 1 == 0 { 1 } else { -1 }).collect();
        let expect = 0.5 * signs.iter().map(|&s| if s > 0 { p[0] } else { p[1] }).product::<f64>();
        assert!((th0.prob(&canonical_key(&clause_template(&signs, &[1, 1, -1]))) - expect).abs() < 1e-15);
    }

    let th1 = limit_tree(&family, 1).unwrap();
    assert_eq!(th1.mode, DistributionMode::Exact);
    // Patterns containing a + (resp. -): 7 each; two + clones pick a multiset.
    assert_eq!(th1.variable_entries().count(), 28 * 7);
    let total: f64 = th1.entries.values().map(|e| e.prob).sum();
    assert!((total - 1.0).abs() < 1e-12);

    // Root (+,+,-) with clauses (+++), (+++), (---): 1/2 · (4/9)² · (1/9).
    let w = [ksat_weight(&[1, 1, 1], 1.0).unwrap(), ksat_weight(&[-1, -1, -1], 1.0).unwrap()];
    let clause = |w: usize, s: CloneType| TNode { weight: Some(w), types: vec![s; 3], ports: vec![Some((0, 0)), None, None] };
    let mut nodes = vec![TNode { weight: None, types: vec![1, 1, -1], ports: vec![Some((1, 0)), Some((2, 0)), Some((3, 0))] }];
    nodes.push(clause(0, 1));
    nodes.push(TNode { ports: vec![Some((0, 1)), None, None], ..clause(0, 1) });
    nodes.push(TNode { ports: vec![Some((0, 2)), None, None], ..clause(1, -1) });
    let t = Template::new(2, w.to_vec(), nodes).unwrap();
    assert!((th1.prob(&canonical_key(&t)) - 8.0 / 729.0).abs() < 1e-13);
}

#[test]
fn sampled_limit_agrees_with_enumeration() {
    let family = Family::Ksat { k: 3, beta: 1.0, profile: vec![((2, 1), 0.5), ((1, 1), 0.5)] };
    let exact = limit_tree(&family, 0).unwrap();
    assert_eq!(exact.mode, DistributionMode::Exact);
    // Clauses with p positive slots: (p+1)(4-p) multisets of leaf profiles.
    assert_eq!(exact.len(), 2 + 4 + 3 * 6 + 3 * 6 + 4);
    let config = LimitConfig { cap: 4, samples: 100_000, seed: 7 };
    let sampled = limit_tree_with(&family, 0, &config).unwrap();
    assert_eq!(sampled.mode, DistributionMode::Sampled { samples: 100_000, seed: 7 });
    let tv = sampled.tv_to(&exact).unwrap();
    assert!(tv < 0.04, "tv {tv}");
    assert!(limit_tree_with(&family, 0, &LimitConfig { samples: 0, ..config }).is_err());
    // mean degree 2.5 over clause length 3
    assert!((exact.variable_mass() - 1.0 / (1.0 + 2.5 / 3.0)).abs() < 1e-12);
}

#[test]
fn ksat_graph_approaches_limit() {
    let theta = limit_tree(&Family::Ksat { k: 3, beta: 1.0, profile: vec![((2, 1), 1.0)] }, 0).unwrap();
    let mut tvs = Vec::new();
    for n in [30, 3000] {
        let lam = local_distribution(&ksat_graph(n, 3, 3, 2), 0);
        tvs.push(lam.tv_to(&theta).unwrap());
    }
    assert!(tvs[1] < tvs[0] && tvs[1] < 0.05, "{tvs:?}");
}

#[test]
fn tv_to_limit_decreases_with_n() {
    let theta = limit_tree(&Family::Ising { d: 3, beta: 0.5 }, 2).unwrap();
    let mut means = Vec::new();
    for n in [40, 160, 640] {
        let model = Arc::new(ising(n, 3, 0.5).unwrap());
        let seeds = 8;
        let total: f64 = (0..seeds)
            .map(|s| local_distribution(&sample_graph(&model, s).unwrap(), 2).tv_to(&theta).unwrap())
            .sum();
        means.push(total / seeds as f64);
    }
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
}

fn edge_template() -> Template {
    let nodes = vec![
        TNode { weight: Some(0), types: vec![0, 0], ports: vec![Some((1, 0)), Some((2, 0))] },
        TNode { weight: None, types: vec![0], ports: vec![Some((0, 0))] },
        TNode { weight: None, types: vec![0], ports: vec![Some((0, 1))] },
    ];
    Template::new(2, vec![ising_weight(0.3).unwrap()], nodes).unwrap()
}

#[test]
fn reroot_edge() {
    let t = edge_template();
    let (r, back) = t.reroot(1).unwrap();
    assert!(r.root_is_variable());
    assert_eq!(back, 0);
    assert_eq!(r.root().ports[0].map(|p| p.1), Some(1));
    assert_eq!(strict_key(&r.reroot(back).unwrap().0), strict_key(&t));
    assert!(t.reroot(2).is_err());
    let leaf = neighborhood(&heawood(0.1), Node::Variable(0), 0);
    assert!(leaf.reroot(0).is_err());
}

#[test]
fn reroot_path() {
    let g = ising_cycle(9, 0.4).unwrap();
    let t = neighborhood(&g, Node::Variable(4), 2);
    assert_eq!(t.len(), 5);
    let (r, _) = t.reroot(0).unwrap();
    assert!(!r.root_is_variable());
    assert_eq!(r.depth(), t.depth() + 1);
    let mut ends: Vec<usize> = r.distances().into_iter().zip(r.nodes()).filter(|(_, n)| n.ports.iter().flatten().count() == 1).map(|(d, _)| d).collect();
    ends.sort();
    assert_eq!(ends, vec![1, 3]);
}

#[test]
fn reroot_is_an_involution() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let graphs = [ksat_graph(12, 3, 3, 1), ksat_graph(42, 3, 4, 2), heawood(0.2)];
    let mut checked = 0;
    while checked < 100 {
        let g = &graphs[rng.gen_range(0..graphs.len())];
        let root = if rng.gen() { Node::Variable(rng.gen_range(0..g.n())) } else { Node::Factor(rng.gen_range(0..g.m())) };
        let t = neighborhood(g, root, rng.gen_range(1..5));
        let j = rng.gen_range(0..t.root().degree());
        let (r, back) = t.reroot(j).unwrap();
        let (rr, _) = r.reroot(back).unwrap();
        assert_eq!(strict_key(&rr), strict_key(&t));
        assert_eq!(canonical_key(&rr), canonical_key(&t));
        checked += 1;
    }
}

#[test]
fn truncate_matches_smaller_neighborhood() {
    let g = ksat_graph(42, 3, 4, 9);
    for x in 0..10 {
        let big = neighborhood(&g, Node::Variable(x), 4);
        for d in 0..4 {
            assert_eq!(canonical_key(&big.truncate(d)), canonical_key(&neighborhood(&g, Node::Variable(x), d)));
        }
    }
}

#[test]
fn canonical_root_order_sorts_branches() {
    let g = ksat_graph(30, 3, 4, 4);
    for x in 0..30 {
        let t = neighborhood(&g, Node::Variable(x), 2);
        let (c, perm) = canonical_root_order(&t);
        assert_eq!(canonical_key(&c), canonical_key(&t));
        for (i, &s) in perm.iter().enumerate() {
            assert_eq!(c.root().types[i], t.root().types[s]);
        }
        let again = canonical_root_order(&c).1;
        assert_eq!(again, (0..perm.len()).collect::<Vec<_>>());
    }
}

#[test]
fn serialization_round_trips() {
    let lam = local_distribution(&ksat_graph(20, 3, 3, 3), 1);
    let back = LocalDistribution::from_json(&lam.to_json().unwrap()).unwrap();
    assert_eq!(lam, back);
    let key = lam.entries.keys().next().unwrap();
    assert_eq!(&CanonicalKey::from_hex(&key.to_hex()).unwrap(), key);
    assert!(CanonicalKey::from_hex("4702").is_err());

    let mut bad: serde_json::Value = serde_json::to_value(edge_template()).unwrap();
    bad["nodes"][1]["ports"][0] = serde_json::json!([0, 1]);
    assert!(serde_json::from_value::<Template>(bad).is_err());
}

#[test]
fn potts_weight_is_slot_symmetric() {
    assert!(slot_symmetric(&potts_weight(3, 0.4).unwrap(), &[0, 0]));
    assert!(slot_symmetric(&ksat_weight(&[1, 1, -1], 0.4).unwrap(), &[1, 1, -1]));
    let skew = WeightFunction::new("skew", 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!(!slot_symmetric(&skew, &[0, 0]));
    assert!(slot_symmetric(&skew, &[0, 1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn variable_mass_is_node_share(seed in 0u64..1000, n in 4usize..40, depth in 0usize..3) {
        let n = n * 2;
        let model = Arc::new(ising(n, 3, 0.3).unwrap());
        let g = sample_graph(&model, seed).unwrap();
        let lam = local_distribution(&g, depth);
        let total: f64 = lam.entries.values().map(|e| e.prob).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!((lam.variable_mass() - n as f64 / (n + g.m()) as f64).abs() < 1e-12);
        prop_assert!(lam.tv_to(&lam).unwrap() == 0.0);
    }

    #[test]
    fn shallow_neighborhoods_of_acyclic_graphs_are_trees(seed in 0u64..1000, n in 5usize..30) {
        let g = ksat_graph(n * 3, 3, 3, seed);
        if let Some(girth) = g.girth() {
            let l = girth - 1;
            for depth in (0..).take_while(|d| l >= 1 && 2 * d + 1 <= l) {
                prop_assert!(local_distribution(&g, depth).all_trees());
            }
        }
    }

    #[test]
    fn random_relabelings_keep_keys(seed in 0u64..1000, depth in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = ksat_graph(24, 3, 4, seed);
        let t = neighborhood(&g, Node::Factor(rng.gen_range(0..g.m())), depth);
        let r = relabel(&t, &mut rng);
        prop_assert_eq!(canonical_key(&t), canonical_key(&r));
    }
}
