use proptest::prelude::*;
use tempus_core::branch::*;
use tempus_core::Error;

fn node(id: &str, kind: NodeKind) -> BranchSystem {
    BranchSystem::new(id, kind, 0.0, 0.0, 0.0)
}

fn drive(s: &str, t: &str) -> EnergyFlux {
    EnergyFlux::new(s, t, 1.0, FluxTag::Driving)
}

// source -> A -> B -> A' -> source', with the far end a second instability
fn palindrome() -> BranchGraph {
    BranchGraph {
        nodes: vec![
            node("source", NodeKind::InitialInstability),
            node("A", NodeKind::Branch),
            node("B", NodeKind::Branch),
            node("A'", NodeKind::Branch),
            node("source'", NodeKind::InitialInstability),
        ],
        edges: vec![
            drive("source", "A"),
            drive("A", "B"),
            EnergyFlux::new("B", "A'", 1.0, FluxTag::Driving),
            drive("A'", "source'"),
        ],
        orientation: Orientation::Forward,
    }
}

#[test]
fn reference_graph_queries() {
    let g = reference_graph();
    assert!(validate_graph(&g).is_valid());
    assert_eq!(causally_related(&g, "C", "D").unwrap(), Causal::CauseOf);
    assert_eq!(causally_related(&g, "D", "C").unwrap(), Causal::EffectOf);
    assert_eq!(causally_related(&g, "A", "B").unwrap(), Causal::Unrelated);
    assert_eq!(causally_related(&g, "D", "D").unwrap(), Causal::Unrelated);
    assert_eq!(
        causally_related(&g, "A", "nowhere"),
        Err(Error::UnknownNode("nowhere".into()))
    );

    let arrow = global_arrow(&g).unwrap();
    assert_eq!(
        (
            arrow.source.as_str(),
            arrow.orientation,
            arrow.tag_consistent
        ),
        ("instability", Orientation::Forward, true)
    );
    let r = time_reverse_graph(&g);
    let back = global_arrow(&r).unwrap();
    assert_eq!(
        (back.source.as_str(), back.orientation, back.tag_consistent),
        ("instability", Orientation::Reversed, true)
    );
    // relabelling leaves the physical relations alone
    assert_eq!(causally_related(&r, "C", "D").unwrap(), Causal::CauseOf);
    assert!(validate_graph(&r).is_valid());

    assert_eq!(is_mirror_symmetric(&g), Ok(false));
    assert_eq!(is_mirror_symmetric(&r), Ok(false));
}

#[test]
fn constructed_violations() {
    let mut g = reference_graph();
    g.edges
        .push(EnergyFlux::new("heat_A", "D", 0.1, FluxTag::Degraded));
    let v = validate_graph(&g).violations;
    assert!(
        v.iter()
            .any(|x| matches!(x, Violation::DegradedPlacement { .. })),
        "{v:?}"
    );

    let mut g = reference_graph();
    g.edges.push(drive("F", "A"));
    assert!(validate_graph(&g).violations.contains(&Violation::Cycle));
    assert_eq!(global_arrow(&g), Err(Error::Cyclic));

    let mut g = reference_graph();
    g.nodes.push(node("second", NodeKind::InitialInstability));
    assert_eq!(global_arrow(&g), Err(Error::NoUniqueSource { count: 2 }));
    assert!(validate_graph(&g)
        .violations
        .contains(&Violation::SourceCount(2)));

    let mut g = reference_graph();
    g.nodes
        .iter_mut()
        .find(|n| n.id == "C")
        .unwrap()
        .entropy_out = 0.0;
    assert!(validate_graph(&g)
        .violations
        .iter()
        .any(|x| matches!(x, Violation::EntropyDecrease { .. })));
    // paths through C: A-C-D-F and A-C-E-F
    assert_eq!(entropy_path_audit(&g, 100).unwrap().violations, 2);
    assert_eq!(
        entropy_path_audit(&reference_graph(), 100).unwrap(),
        EntropyAudit {
            paths: 3,
            violations: 0,
            truncated: false
        }
    );
}

#[test]
fn mirror_symmetry_examples() {
    assert_eq!(is_mirror_symmetric(&palindrome()), Ok(true));
    assert_eq!(
        is_mirror_symmetric(&time_reverse_graph(&palindrome())),
        Ok(true)
    );
    let single = BranchGraph {
        nodes: vec![node("S", NodeKind::InitialInstability)],
        edges: vec![],
        orientation: Orientation::Forward,
    };
    assert_eq!(is_mirror_symmetric(&single), Ok(true));
    assert_eq!(
        global_arrow(&single).unwrap().orientation,
        Orientation::Forward
    );
    // the palindrome has two low-entropy ends and so no global arrow
    assert_eq!(
        global_arrow(&palindrome()),
        Err(Error::NoUniqueSource { count: 2 })
    );

    let big = random_branch_graph(5, 20, 0.2);
    assert!(big.nodes.len() > EXACT_MIRROR_LIMIT);
    let v = mirror_verdict(&big);
    assert!(!v.exact && !v.symmetric);
    assert!(matches!(
        is_mirror_symmetric(&big),
        Err(Error::TooLargeForExact {
            heuristic: false,
            ..
        })
    ));
}

#[test]
fn observer_information_counts_messages() {
    let g = reference_graph();
    assert_eq!(observer_information(&g, &[]).unwrap(), Vec::<usize>::new());
    // D receives from C and B, F from D and E
    assert_eq!(
        observer_information(&g, &["instability", "A", "C", "D", "F"]).unwrap(),
        vec![0, 1, 2, 4, 6]
    );
    assert_eq!(
        observer_information(&g, &["D", "C"]),
        Err(Error::PathViolatesOrder {
            from: "D".into(),
            to: "C".into()
        })
    );
}

#[test]
fn observer_information_along_a_chain_of_message_sources() {
    // P0 -> P1 -> ... with one extra sender per step
    let k = 6;
    let mut nodes = vec![node("S", NodeKind::InitialInstability)];
    let mut edges = vec![drive("S", "P0")];
    for i in 0..k {
        nodes.push(node(&format!("P{i}"), NodeKind::Branch));
    }
    for i in 1..k {
        nodes.push(node(&format!("M{i}"), NodeKind::Branch));
        edges.push(drive("S", &format!("M{i}")));
        edges.push(drive(&format!("M{i}"), &format!("P{i}")));
        edges.push(drive(&format!("P{}", i - 1), &format!("P{i}")));
    }
    let g = BranchGraph {
        nodes,
        edges,
        orientation: Orientation::Forward,
    };
    let path: Vec<String> = (0..k).map(|i| format!("P{i}")).collect();
    let refs: Vec<&str> = path.iter().map(|s| s.as_str()).collect();
    let series = observer_information(&g, &refs).unwrap();
    // P0 hears the source; each later step hears its predecessor and one sender
    assert_eq!(*series.last().unwrap(), 1 + 2 * (k - 1));
    assert!(series.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn json_round_trip() {
    let g = reference_graph();
    let text = serde_json::to_string(&g).unwrap();
    assert!(text.contains("\"initial_instability\"") && text.contains("\"degraded\""));
    let back: BranchGraph = serde_json::from_str(&text).unwrap();
    assert_eq!(back, g);
    let bare = r#"{"nodes":[{"id":"S","kind":"initial_instability","stored_energy":1,"entropy_in":0,"entropy_out":0}],"edges":[]}"#;
    let parsed: BranchGraph = serde_json::from_str(bare).unwrap();
    assert_eq!(parsed.orientation, Orientation::Forward);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn causal_order_is_strict_partial_order(seed in any::<u64>(), n in 1usize..12, p in 0.0f64..0.6) {
        let g = random_branch_graph(seed, n, p);
        prop_assert!(validate_graph(&g).is_valid());
        let o = CausalOrder::new(&g);
        let m = o.len();
        for i in 0..m {
            prop_assert_eq!(o.relation(i, i), Causal::Unrelated);
            for j in 0..m {
                if o.relation(i, j) == Causal::CauseOf {
                    prop_assert_eq!(o.relation(j, i), Causal::EffectOf);
                    for k in 0..m {
                        if o.relation(j, k) == Causal::CauseOf {
                            prop_assert_eq!(o.relation(i, k), Causal::CauseOf);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn entropy_and_mirror_laws(seed in any::<u64>(), n in 1usize..12, p in 0.0f64..0.6) {
        let g = random_branch_graph(seed, n, p);
        let audit = entropy_path_audit(&g, 100_000).unwrap();
        prop_assert!(audit.paths >= 1);
        prop_assert_eq!(audit.violations, 0);
        let r = time_reverse_graph(&g);
        prop_assert_eq!(global_arrow(&g).unwrap().orientation, Orientation::Forward);
        prop_assert_eq!(global_arrow(&r).unwrap().orientation, Orientation::Reversed);
        prop_assert_eq!(mirror_verdict(&g), mirror_verdict(&r));
        prop_assert_eq!(CausalOrder::new(&g), CausalOrder::new(&r));
    }

    #[test]
    fn observer_series_is_nondecreasing(seed in any::<u64>(), n in 2usize..12) {
        let g = random_branch_graph(seed, n, 0.3);
        let o = CausalOrder::new(&g);
        // greedy causal walk from the source
        let mut path = vec![0usize];
        while let Some(next) = (0..o.len()).find(|j| o.relation(*path.last().unwrap(), *j) == Causal::CauseOf) {
            path.push(next);
        }
        let ids: Vec<&str> = path.iter().map(|i| o.ids[*i].as_str()).collect();
        let s = observer_information(&g, &ids).unwrap();
        prop_assert!(s.windows(2).all(|w| w[0] <= w[1]));
    }
}
