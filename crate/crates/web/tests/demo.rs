use serde_json::Value;
use vulnmatch_web::demo::{demo_session, gate_counts, random_permutation, route};

fn json(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn gate_counts_stay_under_bounds() {
    let v = json(gate_counts(3, 4, 16, "at-least-two", 0, 0).unwrap());
    let stages = v["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 4);
    for s in stages {
        assert!(s["and_count"].as_f64().unwrap() <= s["and_bound"].as_f64().unwrap());
    }
    assert!(v["depth_and"].as_u64().unwrap() > 0);
    assert_eq!(v["rounds"].as_u64().unwrap(), v["depth_and"].as_u64().unwrap() + 2);

    let big = json(gate_counts(5, 100, 256, "at-least-two", 0, 0).unwrap());
    assert!(big["depth_and"].is_null());
    assert!(gate_counts(2, 2, 16, "at-least-m", 9, 0).is_err());
    assert!(gate_counts(2, 2, 16, "nonsense", 0, 0).is_err());
}

#[test]
fn demo_session_reports_shared_values() {
    let text = "0a01, 0b02, 0c03\n0b02 0d04\n\n0c03,0b02\n";
    let v = json(demo_session(text, 16, "at-least-two", 0, 0, 1).unwrap());
    assert_eq!(v["matches_oracle"], Value::Bool(true));
    assert_eq!(v["u"], 3);
    assert_eq!(v["reports"][0]["shared"], serde_json::json!(["0b02", "0c03"]));
    assert_eq!(v["reports"][1]["exclusive"], serde_json::json!(["0d04"]));

    let v = json(demo_session(text, 16, "at-least-m", 3, 0, 1).unwrap());
    assert_eq!(v["reports"][2]["shared"], serde_json::json!(["0b02"]));

    assert!(demo_session("0a01", 16, "at-least-two", 0, 0, 1).is_err());
    assert!(demo_session("0a01\nzz", 16, "at-least-two", 0, 0, 1).is_err());
}

#[test]
fn routing_realizes_the_permutation() {
    for n in 1..=12 {
        for seed in 0..5 {
            let dest = random_permutation(n, seed);
            let v = json(route(&dest).unwrap());
            let out: Vec<usize> = serde_json::from_value(v["output"].clone()).unwrap();
            for (i, &d) in dest.iter().enumerate() {
                assert_eq!(out[d], i, "n={n} seed={seed}");
            }
            assert_eq!(v["trace"].as_array().unwrap().len(), v["switches"].as_u64().unwrap() as usize);
        }
    }
    assert!(route(&[0, 0]).is_err());
}
