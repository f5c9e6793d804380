use serde_json::json;

use crate::bounds::{
    comm_chisq_bound, expected_chisq_closed_form, expected_chisq_over_packing, ldp_chisq_bound, max_neighborhood,
    neighborhood_upper_bound, packing_gap, verify_ldp, BoundReport, Channel,
};
use crate::dist::PackingIndex;
use crate::hadamard::HadamardDim;
use crate::hr::hr_channel_matrix;
use crate::rappor::rappor_channel_matrix;
use crate::rng::RandomStream;

const CHISQ_K: usize = 6;
const CHISQ_S: usize = 2;
const CHISQ_ALPHA: f64 = 0.05;
const RANDOM_CHANNELS: usize = 20;
const AGREEMENT_TOL: f64 = 1e-9;

fn random_channel(inputs: usize, outputs: usize, stream: &mut RandomStream) -> Channel {
    let rows = (0..inputs)
        .map(|_| {
            let raw: Vec<f64> = (0..outputs).map(|_| -stream.uniform().max(1e-300).ln()).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect()
        })
        .collect();
    Channel::new(rows).expect("normalized rows")
}

/// Channels on `{0} ∪ [k]` that are ε-LDP by construction.
fn ldp_channels(epsilon: f64, stream: &mut RandomStream) -> Vec<(String, Channel)> {
    let inputs = CHISQ_K + 1;
    let rr = Channel::randomized_response(inputs, epsilon);
    let dim = HadamardDim::for_domain(inputs);
    let mut out = vec![("randomized_response".to_string(), rr.clone())];
    for j in [1, dim.size() / 2, dim.size() - 1] {
        out.push((format!("hadamard_group_{j}"), hr_channel_matrix(epsilon, dim, j, inputs).expect("hr channel")));
    }
    out.push(("rappor".into(), rappor_channel_matrix(epsilon, inputs).expect("rappor channel")));
    for t in 0..3 {
        let post = random_channel(inputs, 3 + t, stream);
        out.push((format!("post_processed_rr_{t}"), rr.then(&post).expect("compatible")));
    }
    out
}

fn chisq_reports(
    family: &str,
    name: &str,
    channel: &Channel,
    bound: f64,
    params: serde_json::Value,
    out: &mut Vec<BoundReport>,
) {
    let ctx = |extra: serde_json::Value| {
        let mut c = json!({ "channel": name, "k": CHISQ_K, "s": CHISQ_S, "alpha": CHISQ_ALPHA });
        for (key, v) in params.as_object().into_iter().flatten().chain(extra.as_object().into_iter().flatten()) {
            c[key] = v.clone();
        }
        c
    };
    match (
        expected_chisq_over_packing(channel, CHISQ_K, CHISQ_S, CHISQ_ALPHA),
        expected_chisq_closed_form(channel, CHISQ_K, CHISQ_S, CHISQ_ALPHA),
    ) {
        (Ok(exact), Ok(closed)) => {
            out.push(BoundReport::upper(format!("{family}_chisq"), exact, bound, ctx(json!({}))));
            out.push(BoundReport::upper(
                format!("{family}_chisq_oracle_agreement"),
                (exact - closed).abs(),
                AGREEMENT_TOL,
                ctx(json!({ "enumerated": exact, "closed_form": closed })),
            ));
        }
        (a, b) => out.push(BoundReport::upper(
            format!("{family}_chisq"),
            f64::NAN,
            bound,
            ctx(json!({ "error": format!("{:?} / {:?}", a.err(), b.err()) })),
        )),
    }
}

/// Brute-force `N_t` around the first index, for every even radius.
fn brute_neighborhoods(k: usize, s: usize) -> Vec<u64> {
    let mut counts = vec![0u64; 2 * s + 1];
    let center: Vec<usize> = (0..s).collect();
    PackingIndex::for_each(k, s, |pos| {
        let shared = pos.iter().filter(|p| center.contains(p)).count();
        counts[2 * (s - shared)] += 1;
    });
    let mut acc = 0;
    counts
        .into_iter()
        .map(|c| {
            acc += c;
            acc
        })
        .collect()
}

/// Every check the bounds module can run exactly at small scale.
pub fn verification_suite() -> Vec<BoundReport> {
    let mut out = Vec::new();

    for (k, s) in [(128, 1), (200, 2), (400, 4), (1000, 8)] {
        out.push(packing_gap(k, s).expect("s <= k/100"));
        let tight = max_neighborhood(k, s, s as f64 / 2.0);
        out.push(BoundReport::upper(
            "neighborhood_counting_bound",
            tight,
            neighborhood_upper_bound(k, s),
            json!({ "k": k, "s": s }),
        ));
    }

    let (k, s) = (24, 4);
    for (t, brute) in brute_neighborhoods(k, s).into_iter().enumerate() {
        let closed = max_neighborhood(k, s, t as f64);
        out.push(BoundReport::upper(
            "neighborhood_brute_force",
            (closed - brute as f64).abs(),
            0.0,
            json!({ "k": k, "s": s, "t": t, "closed_form": closed, "enumerated": brute }),
        ));
    }

    let mut stream = RandomStream::new(0x5eed, 0);
    for epsilon in [0.5, 1.0, 2.0] {
        let bound = ldp_chisq_bound(CHISQ_ALPHA, epsilon, CHISQ_S);
        for (name, channel) in ldp_channels(epsilon, &mut stream) {
            out.push(BoundReport::upper(
                "ldp_channel_is_private",
                if verify_ldp(&channel, epsilon) { 0.0 } else { 1.0 },
                0.0,
                json!({ "channel": name, "epsilon": epsilon }),
            ));
            chisq_reports("ldp", &name, &channel, bound, json!({ "epsilon": epsilon }), &mut out);
        }
    }

    for ell in 1..=3u32 {
        let bound = comm_chisq_bound(CHISQ_ALPHA, ell, CHISQ_S);
        for i in 0..RANDOM_CHANNELS {
            let channel = random_channel(CHISQ_K + 1, 1 << ell, &mut stream);
            let name = format!("random_{ell}bit_{i}");
            chisq_reports("comm", &name, &channel, bound, json!({ "ell": ell }), &mut out);
        }
    }
    out
}
