use grounded_planner::domain::RoomKind;
use grounded_planner::error::Graph2NlError;
use grounded_planner::graph2nl::{
    describe_target, emit_context, ContextOptions, ContextVariant, GeoRelation,
};
use grounded_planner::plandsl::parse_plan;
use grounded_planner::scenegraph::{
    build_graph, connect_agent, full_graph, infuse_domain_knowledge, DomainKnowledge, AGENT_NODE,
};
use grounded_planner::world::generate_scene;
use proptest::prelude::*;

fn room(i: u8) -> RoomKind {
    RoomKind::ALL[i as usize % RoomKind::ALL.len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_invariants(seed in 0u64..10_000, kind in 0u8..4) {
        let s = generate_scene(seed, room(kind)).unwrap();
        let dk = DomainKnowledge::builtin();
        let base = build_graph(&s);
        prop_assert_eq!(base.nodes.len(), s.objects.len() + 1);
        prop_assert_eq!(base.out_degree(AGENT_NODE), 0);
        // containment edges only, parent to child
        let parented = s.objects.iter().filter(|o| o.parent.is_some()).count();
        prop_assert_eq!(base.edges.len(), parented);

        let infused = infuse_domain_knowledge(base.clone(), dk);
        prop_assert_eq!(&infuse_domain_knowledge(infused.clone(), dk), &infused);
        prop_assert!(base.edges.keys().all(|k| infused.edges.contains_key(k)));

        let g = connect_agent(infused, Some(dk));
        prop_assert_eq!(&g, &full_graph(&s, dk));
        for (to, attrs) in g.successors(AGENT_NODE) {
            prop_assert!(g.nodes[to].navigable);
            prop_assert!(attrs.distance >= 0.0);
        }
        for attrs in g.edges.values() {
            prop_assert!((0.0..360.0).contains(&attrs.yaw));
            prop_assert!((-90.0..=90.0).contains(&attrs.pitch));
        }
        let everyone = connect_agent(build_graph(&s), None);
        prop_assert_eq!(everyone.out_degree(AGENT_NODE), s.objects.len());
    }

    #[test]
    fn condensed_and_verbose_lines_correspond(seed in 0u64..10_000, kind in 0u8..4) {
        let s = generate_scene(seed, room(kind)).unwrap();
        let g = full_graph(&s, DomainKnowledge::builtin());
        let target = &s.objects[seed as usize % s.objects.len()].category;
        let verbose = describe_target(&g, target, 2, false).unwrap();
        let condensed = describe_target(&g, target, 2, true).unwrap();
        // equal-cost lines are ordered by text, so compare as sets
        let mut expanded: Vec<String> = Vec::new();
        for c in condensed.lines().skip(1) {
            let words: Vec<&str> = c.trim_end_matches(']').split_whitespace().skip(1).collect();
            let mut line = vec!["-".to_string()];
            for pair in words.chunks(2) {
                line.push(GeoRelation::parse(pair[0]).unwrap().to_text(false));
                line.push(pair[1].to_string());
            }
            expanded.push(line.join(" "));
        }
        let mut verbose: Vec<String> =
            verbose.lines().skip(1).map(|l| l.trim_end_matches(']').to_string()).collect();
        expanded.sort();
        verbose.sort();
        prop_assert_eq!(expanded, verbose);
    }
}

#[test]
fn descriptions_are_bracketed_and_start_at_the_agent() {
    let s = generate_scene(3, RoomKind::Kitchen).unwrap();
    let g = full_graph(&s, DomainKnowledge::builtin());
    let target = &s.objects.iter().find(|o| o.caps.pickupable).unwrap().category;
    let text = describe_target(&g, target, 2, true).unwrap();
    assert!(text.starts_with("[Kitchen="), "{text}");
    assert!(text.ends_with(']'));
    for line in text.lines().skip(1) {
        assert!(line.starts_with("- "), "{line}");
        assert!(line.trim_end_matches(']').ends_with(target.as_str()), "{line}");
    }
}

#[test]
fn absent_targets_and_zero_depth_are_errors() {
    let s = generate_scene(0, RoomKind::Bathroom).unwrap();
    let g = full_graph(&s, DomainKnowledge::builtin());
    assert_eq!(describe_target(&g, "unicorn", 2, true), Err(Graph2NlError::TargetAbsent("unicorn".into())));
    assert_eq!(describe_target(&g, "sink", 0, true), Err(Graph2NlError::Depth));
    let opts = ContextOptions::default();
    assert!(emit_context(ContextVariant::SceneGraph, &s, "unicorn", None, opts).is_err());
    assert_eq!(
        emit_context(ContextVariant::FirstStepHint, &s, "sink", None, opts),
        Err(Graph2NlError::MissingGoldPlan)
    );
}

#[test]
fn context_variants() {
    let s = generate_scene(5, RoomKind::Kitchen).unwrap();
    let target = s.objects.iter().find(|o| o.caps.pickupable).unwrap().category.clone();
    let opts = ContextOptions::default();
    let plan = parse_plan("0.GotoLocation(countertop) 1.PickupObject(apple)").unwrap();
    let emit = |v| emit_context(v, &s, &target, Some(&plan), opts).unwrap();

    assert_eq!(emit(ContextVariant::None), "");
    let known = emit(ContextVariant::SceneKnowledge);
    let words: Vec<&str> = known.split(' ').collect();
    assert!(words.windows(2).all(|w| w[0] < w[1]), "sorted and unique: {known}");
    assert!(s.objects.iter().all(|o| words.contains(&o.category.as_str())));

    let graph = emit(ContextVariant::SceneGraph);
    let full = emit(ContextVariant::FullContext);
    assert!(full.contains(&graph), "the full context includes the target block");
    let pickupable = s.objects.iter().filter(|o| o.caps.pickupable).map(|o| &o.category).collect::<std::collections::BTreeSet<_>>();
    assert_eq!(full.matches("[Kitchen=").count(), pickupable.len());

    assert_eq!(emit(ContextVariant::FirstStepHint), "walk to the countertop");
}
