use super::*;
use crate::cohort::{DimensionForest, DimensionKind, DimensionRecord, EntityRecord, ROOT_COHORT};
use crate::session::{load_session, save_session};

fn rec(code: &str, parent: Option<&str>) -> DimensionRecord {
    DimensionRecord { code: code.into(), label: String::new(), parent: parent.map(Into::into), kind: DimensionKind::Event }
}

/// Subgroups over (A, B): baseline 100/200/300/400, the `F`-cohort 0/200/300/400.
pub(crate) fn high_danger_fixture() -> Engine {
    let forest =
        DimensionForest::from_records(vec![rec("A", None), rec("B", None), rec("F", None), rec("G", None), rec("G1", Some("G"))]).unwrap();
    let mut es = Vec::new();
    for (pattern, n) in [(0u32, 100usize), (1, 200), (2, 300), (3, 400)] {
        for i in 0..n {
            let mut events: Vec<&str> = Vec::new();
            if pattern & 1 == 1 {
                events.push("A");
            }
            if pattern & 2 == 2 {
                events.push("B");
            }
            if pattern != 0 {
                events.push("F");
            }
            if i % 3 == 0 {
                events.push("G1");
            }
            es.push(EntityRecord {
                entity_id: format!("p{pattern}-{i}"),
                attributes: Default::default(),
                events: events.into_iter().map(String::from).collect(),
                outcome: (i + pattern as usize) % 2 == 0,
            });
        }
    }
    let mut e = Engine::new(Dataset::new("t3", "x", forest, es).unwrap(), None);
    let d = e.derive_cohort(ROOT_COHORT, Constraint::has_event("F")).unwrap();
    e.set_focus(Some(&d.included)).unwrap();
    e
}

#[test]
fn assessment_reproduces_first_row_and_is_side_effect_free() {
    let mut e = high_danger_fixture();
    let before = e.stats(None, true).unwrap();
    let rev = e.revision();
    let a = e.assess(ReweightConfig::new(vec!["A".into(), "B".into()], 1.0)).unwrap();
    assert!((a.danger.normalized - 1.71).abs() < 0.02, "{}", a.danger.normalized);
    assert!(a.danger.over_threshold);
    assert_eq!(a.revision, rev + 1);
    let after = e.stats(None, true).unwrap();
    assert_eq!(before.dimensions, after.dimensions);
    let cohorts = e.cohorts().unwrap();
    let focus = cohorts.cohorts.iter().find(|c| c.roles.contains(&"focus".to_string())).unwrap();
    assert!(focus.danger.as_ref().unwrap().over_threshold);
}

#[test]
fn apply_matches_baseline_on_reweight_dims() {
    let mut e = high_danger_fixture();
    let cfg = ReweightConfig::new(vec!["A".into()], 1.0);
    e.assess(cfg.clone()).unwrap();
    let applied = e.apply(None).unwrap();
    assert_eq!(applied.config, cfg);
    let s = e.stats(None, true).unwrap();
    let row = s.dimensions.iter().find(|r| r.code == "A").unwrap();
    assert!(row.distance_weighted.unwrap() <= 1e-6, "{:?}", row.distance_weighted);
    assert!(row.distance_unweighted.unwrap() > 0.01);
}

#[test]
fn zero_coefficient_keeps_unit_weights() {
    let mut e = high_danger_fixture();
    let a = e.assess(ReweightConfig::new(vec!["A".into()], 0.0)).unwrap();
    assert!(a.table.rows.iter().filter_map(|r| r.weight_interp).all(|w| w == 1.0));
}

#[test]
fn invalid_configs() {
    let mut e = high_danger_fixture();
    assert!(matches!(e.assess(ReweightConfig::new(vec![], 1.0)), Err(Error::InvalidConfig(_))));
    assert!(matches!(e.assess(ReweightConfig::new(vec!["G".into(), "G1".into()], 1.0)), Err(Error::InvalidConfig(_))));
    assert!(matches!(e.assess(ReweightConfig::new(vec!["A".into()], 1.5)), Err(Error::InvalidConfig(_))));
    assert!(matches!(e.apply(None), Err(Error::InvalidConfig(_))));
    e.set_focus(None).unwrap();
    assert!(matches!(e.assess(ReweightConfig::new(vec!["A".into()], 1.0)), Err(Error::NoFocus)));
}

#[test]
fn session_round_trip_restores_everything() {
    let mut e = high_danger_fixture();
    e.assess(ReweightConfig::new(vec!["A".into()], 0.5)).unwrap();
    e.apply(None).unwrap();
    e.derive_cohort("c1", Constraint::has_event("G1")).unwrap();
    let saved = save_session(&e.session()).unwrap();

    let mut fresh = Engine::from_shared(e.shared_dataset(), None);
    let state = fresh.put_session(load_session(&saved).unwrap()).unwrap();
    assert_eq!(state.revision, e.revision());
    assert_eq!(fresh.session(), e.session());
    assert_eq!(fresh.stats(None, true).unwrap(), e.stats(None, true).unwrap());
    for (a, b) in fresh.tree().cohorts().iter().zip(e.tree().cohorts()) {
        assert_eq!(a.members, b.members);
    }
    // A stale stored revision still moves forward.
    let mut older = e.session();
    older.revision = 0;
    assert_eq!(fresh.put_session(older).unwrap().revision, e.revision() + 1);
}

#[test]
fn views_and_plots() {
    let mut e = high_danger_fixture();
    let layout = e.layout(None, &LayoutOverrides::default()).unwrap();
    assert!(!layout.model.rows.is_empty());
    // F is the focus constraint and is excluded from the color maximum.
    let f = layout.model.rows.iter().flat_map(|r| &r.cells).find(|c| c.code == "F").unwrap();
    assert!(f.hatched);
    assert!(e.replace_view(None, "A", &LayoutOverrides::default()).is_err());
    e.assess(ReweightConfig::new(vec!["G".into()], 1.0)).unwrap();
    let r = e.replace_view(None, "G", &LayoutOverrides::default()).unwrap();
    assert_eq!(r.model.salient, ["G", "G1"]);

    assert!(e.scatter(None, None).unwrap().model.dimensions.len() >= 4);
    assert_eq!(e.contour(None).unwrap().model.cohorts.len(), 3);
    assert!(e.vector(None, None).unwrap().model.vectors.is_empty());
    assert_eq!(e.setvis().unwrap().model.rows.len(), 2);
    assert!(e.distribution(None, "A").is_ok());
    assert!(matches!(e.distribution(None, "nope"), Err(Error::UnknownDimension(_))));
    assert!(matches!(e.stats(Some("c99"), false), Err(Error::UnknownCohort(_))));
}

#[test]
fn snapshots_share_the_cache() {
    let e = high_danger_fixture();
    e.stats(None, false).unwrap();
    let n = e.cache().len();
    let snapshot = e.clone();
    snapshot.stats(None, false).unwrap();
    assert_eq!(e.cache().len(), n);
}

#[test]
fn override_strings() {
    let o = LayoutOverrides::parse(Some("inf"), Some("A, B,"), Some(""), Some("weighted-distance"), None).unwrap();
    assert_eq!(o.t_s, Some(f64::INFINITY));
    assert_eq!(o.pins.unwrap().len(), 2);
    assert!(o.collapses.unwrap().is_empty());
    assert_eq!(o.sort, Some(Metric::WeightedDistance));
    assert!(LayoutOverrides::parse(Some("x"), None, None, None, None).is_err());
    assert!(LayoutOverrides::parse(None, None, None, Some("size"), None).is_err());
}
