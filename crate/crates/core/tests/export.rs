use topotrack::export::{export_tracking_graph, TrackingGraphDoc};
use topotrack::fixtures::{rotating_cycle, split_pair};
use topotrack::tracking::{run_pipeline, TrackingConfig};

#[test]
fn empty_run_gives_empty_document() {
    let out = run_pipeline(&[], &TrackingConfig::default()).unwrap();
    let doc = export_tracking_graph(&out).unwrap();
    assert!(doc.edges.is_empty() && doc.timesteps.is_empty());
    doc.validate().unwrap();
}

#[test]
fn every_positive_entry_is_an_edge() {
    let fields = rotating_cycle(4, 2).unwrap();
    let out = run_pipeline(&fields, &TrackingConfig::default()).unwrap();
    let doc = export_tracking_graph(&out).unwrap();
    let positive: usize = out.matches.iter().map(|m| m.coupling.iter().filter(|&&x| x > 0.0).count()).sum();
    assert_eq!(doc.edges.len(), positive);
    for (k, set) in out.matches.iter().enumerate() {
        let t = out.frames[k].t;
        for p in &set.pairs {
            let e = doc
                .edges
                .iter()
                .find(|e| e.t == t && e.i == p.source && e.j == p.target)
                .expect("bijective match missing from the edge set");
            assert_eq!(e.probability.to_bits(), p.probability.to_bits());
        }
    }
    for ts in &doc.timesteps {
        let s = ts.summary.as_ref().unwrap();
        assert!(s.sample_dims.iter().all(|&d| d <= 128));
    }
}

#[test]
fn json_round_trip_is_exact() {
    let (a, b) = split_pair().unwrap();
    let out = run_pipeline(&[a, b], &TrackingConfig::default()).unwrap();
    let doc = export_tracking_graph(&out).unwrap();
    let back = TrackingGraphDoc::from_json(&doc.to_json().unwrap()).unwrap();
    assert_eq!(back, doc);
    let c = &out.matches[0].coupling;
    for e in &back.edges {
        assert_eq!(e.probability.to_bits(), c[[e.i, e.j]].to_bits());
    }
}

fn keys(v: &serde_json::Value) -> Vec<String> {
    let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    k.sort();
    k
}

fn required(v: &serde_json::Value) -> Vec<String> {
    let mut k: Vec<String> = v["required"].as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect();
    k.sort();
    k
}

#[test]
fn schema_lists_serialized_fields() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schemas/tracking_graph.schema.json");
    let schema: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let fields = rotating_cycle(3, 1).unwrap();
    let doc = export_tracking_graph(&run_pipeline(&fields, &TrackingConfig::default()).unwrap()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
    let props = &schema["properties"];
    assert_eq!(keys(&v), required(&schema));
    assert_eq!(keys(&v["timesteps"][0]), required(&props["timesteps"]["items"]));
    assert_eq!(keys(&v["timesteps"][0]["nodes"][0]), required(&props["timesteps"]["items"]["properties"]["nodes"]["items"]));
    assert_eq!(keys(&v["edges"][0]), required(&props["edges"]["items"]));
    assert_eq!(keys(&v["trajectories"][0]), required(&props["trajectories"]["items"]));
    assert_eq!(keys(&v["metadata"]), required(&props["metadata"]));
}
