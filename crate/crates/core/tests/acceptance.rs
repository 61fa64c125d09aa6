//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Runs without the libtest harness so the report is always printed.

mod common;

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use chrono::{Datelike, NaiveDate, NaiveDateTime};
use http_body_util::BodyExt;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;
use tower::ServiceExt;

use common::corpus::{self, ela_mutations, expected_tokens, INJECTION};
use common::oracle::{Request as OracleRequest, Verdict, World};
use common::{dry_run, simplified_ela, simplified_with, snapshot};
use secss_core::gateway::router;
use secss_core::playground::{
    self, pinned_clock, playground_gateway, run_scenario, scenario_steps, simplified_gateway,
};
use secss_core::sql::normalized_tokens;
use secss_core::{
    Clock, ElaDocument, Gateway, LoadedEla, SignedRequest, Signer, SqliteBackend, TrustStore,
};

type Check = Result<String, String>;

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion {
            name: "golden transformation, INSERT",
            budget: Some(Duration::from_secs(1)),
            run: golden_insert,
        },
        Criterion {
            name: "golden transformation, UPDATE",
            budget: Some(Duration::from_secs(1)),
            run: golden_update,
        },
        Criterion {
            name: "golden transformation, derived variable",
            budget: Some(Duration::from_secs(1)),
            run: golden_derived,
        },
        Criterion {
            name: "oracle equivalence over generated states",
            budget: Some(Duration::from_secs(60)),
            run: oracle_equivalence,
        },
        Criterion {
            name: "six-rule playground scenario",
            budget: Some(Duration::from_secs(30)),
            run: six_rule_scenario,
        },
        Criterion {
            name: "wire exactness",
            budget: None,
            run: wire_exactness,
        },
        Criterion {
            name: "signature integrity under mutation",
            budget: None,
            run: integrity,
        },
        Criterion {
            name: "injection rejection",
            budget: None,
            run: injection_rejection,
        },
        Criterion {
            name: "ELA validation",
            budget: None,
            run: ela_validation,
        },
    ];

    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let mut result = (c.run)();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(budget)) = (&result, c.budget) {
            if elapsed > budget {
                result = Err(format!("took {elapsed:.2?}, budget {budget:?}"));
            }
        }
        match result {
            Ok(detail) => println!("PASS  {:<52} {:>9.2?}  {detail}", c.name, elapsed),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:<52} {:>9.2?}  {why}", c.name, elapsed);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden(request: &str, expected_sql: &str) -> Check {
    let gw = simplified_gateway(pinned_clock());
    let env = gw.handle_request(&SignedRequest::anonymous(request));
    ensure(env.ok, || format!("request refused: {}", env.feedback))?;
    let executed = &env.results[0].executed_sql;
    let got = normalized_tokens(executed).map_err(|e| e.to_string())?;
    let want = expected_tokens(expected_sql);
    ensure(got == want, || {
        let at = got
            .iter()
            .zip(&want)
            .position(|(a, b)| a != b)
            .unwrap_or(got.len().min(want.len()));
        format!("token {at} differs: got `{executed}`")
    })?;
    let requested = &env.results[0].requested_sql;
    ensure(requested == request.trim_end_matches(';'), || {
        format!("RequestedSQL altered: `{requested}`")
    })?;
    Ok(format!("{} tokens identical, {}", want.len(), env.feedback))
}

fn golden_insert() -> Check {
    golden(corpus::INSERT_REQUEST, corpus::INSERT_EXPECTED)
}

fn golden_update() -> Check {
    golden(corpus::UPDATE_REQUEST, corpus::UPDATE_EXPECTED)
}

fn golden_derived() -> Check {
    golden(corpus::DERIVED_REQUEST, corpus::DERIVED_EXPECTED)
}

const STATES: usize = 250;
const REQUESTS_PER_STATE: usize = 16;

fn oracle_equivalence() -> Check {
    let ela = simplified_ela();
    let mut rng = StdRng::seed_from_u64(0x5ecc_0de5);
    let mut checked = 0;
    let mut permitted = 0;
    let mut denied = 0;
    let mut rejected = 0;
    for state_no in 0..STATES {
        let world = World::generate(&mut rng);
        let backend = simplified_with(&world.sql());
        let before = snapshot(&backend);
        ensure(before == world.snapshot(), || {
            format!("state {state_no}: fixture load does not match the model")
        })?;
        for _ in 0..REQUESTS_PER_STATE {
            let req = OracleRequest::random_in(&mut rng, &world);
            let sql = req.sql();
            let run = dry_run(&backend, &ela, &sql);
            ensure(run.restored, || {
                format!("state {state_no}: rollback left changes after `{sql}`")
            })?;
            match (world.verdict(&req), run.outcome) {
                (
                    Verdict::Applied {
                        permitted: p,
                        affected,
                        state,
                    },
                    Ok((got_affected, after)),
                ) => {
                    ensure(
                        affected == got_affected && after == state.snapshot(),
                        || {
                            format!(
                            "state {state_no}: `{sql}` oracle affected {affected}, gateway {got_affected}\nworld: {world:?}"
                        )
                        },
                    )?;
                    if !p {
                        ensure(after == before, || {
                            format!("state {state_no}: denied `{sql}` changed data")
                        })?;
                        denied += 1;
                    } else {
                        permitted += 1;
                    }
                }
                (Verdict::Rejected, Err(_)) => rejected += 1,
                (v, o) => {
                    return Err(format!(
                        "state {state_no}: `{sql}` oracle {v:?}, gateway {o:?}\nworld: {world:?}"
                    ))
                }
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} requests over {STATES} states agree ({permitted} permitted, {denied} filtered, {rejected} refused)"
    ))
}

/// Clock the scan moves day by day.
struct ScanClock(Mutex<NaiveDateTime>);

impl Clock for ScanClock {
    fn now(&self) -> NaiveDateTime {
        *self.0.lock().unwrap()
    }
}

fn floor_age(born: NaiveDate, today: NaiveDate) -> i32 {
    let had_birthday = (today.month(), today.day()) >= (born.month(), born.day());
    today.year() - born.year() - i32::from(!had_birthday)
}

fn six_rule_scenario() -> Check {
    let report = run_scenario(&playground_gateway(pinned_clock()), &scenario_steps());
    ensure(report.passed(), || report.failures().join("; "))?;
    ensure(report.uncovered_rules().is_empty(), || {
        format!(
            "rules without allow and deny cases: {:?}",
            report.uncovered_rules()
        )
    })?;

    // Ana turns six on the pinned day; the bicycle needs six.
    let give_bicycle = "UPDATE sandbox SET item = 3 WHERE ninu = '150606500001';";
    let place_ana = "INSERT INTO sandbox (ninu, posx, posy) VALUES ('150606500001', 5, 5);";
    let mut boundary = Vec::new();
    for day in [14, 15] {
        let now = NaiveDate::from_ymd_opt(2012, 6, day)
            .unwrap()
            .and_hms_opt(12, 0, 0)
            .unwrap();
        let gw = playground_gateway(Arc::new(secss_core::FixedClock(now)));
        gw.handle_request(&SignedRequest::anonymous(place_ana));
        let env = gw.handle_request(&SignedRequest::anonymous(give_bicycle));
        boundary.push(env.affected_rows());
    }
    ensure(boundary == [Some(0), Some(1)], || {
        format!("boundary day before/on birthday affected {boundary:?}, want [0, 1]")
    })?;

    // every day of two years, each child against every toy
    let clock = Arc::new(ScanClock(Mutex::new(playground::pinned_now())));
    let backend = SqliteBackend::in_memory(playground::SCHEMA, clock.clone()).unwrap();
    playground::seed(&backend, false).unwrap();
    backend
        .execute_batch(
            "DELETE FROM playground.sandbox;
             INSERT INTO playground.sandbox (ninu, item, posx, posy) VALUES
               ('100898450000', NULL, 0, 0), ('150606500001', NULL, 0, 0), ('090303500002', NULL, 0, 0);",
        )
        .unwrap();
    let ela = ElaDocument::parse(playground::ELA_XML.as_bytes()).unwrap();
    let children = [
        ("100898450000", NaiveDate::from_ymd_opt(2010, 3, 2).unwrap()),
        (
            "150606500001",
            NaiveDate::from_ymd_opt(2006, 6, 15).unwrap(),
        ),
        (
            "090303500002",
            NaiveDate::from_ymd_opt(2003, 3, 10).unwrap(),
        ),
    ];
    let toys = [(1, 0), (2, 3), (3, 6), (4, 10)];
    let mut day = NaiveDate::from_ymd_opt(2012, 1, 1).unwrap();
    let last = NaiveDate::from_ymd_opt(2013, 12, 31).unwrap();
    let mut decisions = 0;
    while day <= last {
        *clock.0.lock().unwrap() = day.and_hms_opt(12, 0, 0).unwrap();
        for (ninu, born) in children {
            for (item, min_age) in toys {
                let sql = format!("UPDATE sandbox SET item = {item} WHERE ninu = '{ninu}';");
                let run = dry_run(&backend, &ela, &sql);
                let affected = run
                    .outcome
                    .map(|(a, _)| a)
                    .map_err(|e| format!("{day} `{sql}`: {e}"))?;
                let want = usize::from(floor_age(born, day) >= min_age);
                ensure(affected == want, || {
                    format!(
                        "{day}: child {ninu} toy {item} affected {affected}, calendar says {want}"
                    )
                })?;
                decisions += 1;
            }
        }
        day = day.succ_opt().unwrap();
    }
    let leaked = report
        .outcomes
        .iter()
        .filter(|o| {
            playground::BIRTHDAYS
                .iter()
                .any(|b| serde_json::to_string(&o.envelope).unwrap().contains(b))
        })
        .count();
    ensure(leaked == 0, || {
        format!("{leaked} responses reveal a birthday")
    })?;
    Ok(format!(
        "{} steps, boundary 0/1, {decisions} scanned age decisions, no birthday revealed",
        report.outcomes.len()
    ))
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object()
        .map(|o| o.keys().cloned().collect())
        .unwrap_or_default()
}

fn set(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn check_envelope(v: &Value) -> Result<(), String> {
    ensure(
        keys(v) == set(&["Results", "Feedback", "GenerationDate", "OK"]),
        || format!("envelope keys {:?}", keys(v)),
    )?;
    ensure(v["OK"].is_boolean() && v["Feedback"].is_string(), || {
        "OK/Feedback types".into()
    })?;
    let date = v["GenerationDate"].as_str().unwrap_or("");
    ensure(
        date.len() == 20 && NaiveDateTime::parse_from_str(date, "%Y-%m-%dT%H:%M:%SZ").is_ok(),
        || format!("GenerationDate `{date}`"),
    )?;
    for r in v["Results"].as_array().ok_or("Results is not a list")? {
        ensure(
            keys(r) == set(&["ExecutedSQL", "RequestedSQL", "Rows"]),
            || format!("result keys {:?}", keys(r)),
        )?;
        for row in r["Rows"].as_array().ok_or("Rows is not a list")? {
            for cell in row.as_array().ok_or("row is not a list")? {
                ensure(keys(cell) == set(&["Name", "Value"]), || {
                    format!("cell keys {:?}", keys(cell))
                })?;
                ensure(cell["Name"].is_string(), || "Name is not a string".into())?;
                ensure(cell["Value"].is_string() || cell["Value"].is_null(), || {
                    "Value is neither string nor null".into()
                })?;
            }
        }
    }
    Ok(())
}

async fn call(
    app: axum::Router,
    req: Request<Body>,
) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let resp = app.oneshot(req).await.expect("router answers");
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp
        .into_body()
        .collect()
        .await
        .expect("body")
        .to_bytes()
        .to_vec();
    (status, headers, body)
}

fn post_query(body: impl Into<Body>) -> Request<Body> {
    Request::post("/query")
        .header(header::CONTENT_TYPE, "application/json")
        .body(body.into())
        .unwrap()
}

fn wire_exactness() -> Check {
    let signer = Signer::generate_dev("wire").map_err(|e| e.to_string())?;
    let req = signer
        .sign_request("SELECT ninu, name FROM children;", Some("note".into()))
        .map_err(|e| e.to_string())?;
    let req_json = serde_json::to_value(&req).map_err(|e| e.to_string())?;
    ensure(keys(&req_json) == set(&["SQL", "Pkcs7", "Comment"]), || {
        format!("request keys {:?}", keys(&req_json))
    })?;
    let anon: SignedRequest = serde_json::from_str(r#"{"SQL":"SELECT name FROM children;"}"#)
        .map_err(|e| e.to_string())?;
    ensure(anon.pkcs7.is_none() && anon.comment.is_none(), || {
        "optional fields".into()
    })?;

    let gw = Arc::new(playground_gateway(pinned_clock()).with_dev_signer(signer));
    let rt = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?;
    rt.block_on(async {
        let app = router(gw.clone());
        let (status, _, body) =
            call(app.clone(), post_query(serde_json::to_vec(&req).unwrap())).await;
        ensure(status == StatusCode::OK, || {
            format!("signed query status {status}")
        })?;
        let v: Value = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
        check_envelope(&v)?;
        ensure(v["OK"] == true, || {
            format!("signed SELECT refused: {}", v["Feedback"])
        })?;
        let rows = v["Results"][0]["Rows"].as_array().map_or(0, |r| r.len());
        ensure(rows == 3, || format!("{rows} rows"))?;
        ensure(v["Results"][0]["Rows"][0][0]["Name"] == "ninu", || {
            "cell order".into()
        })?;

        let (status, _, body) = call(
            app.clone(),
            post_query(r#"{"SQL":"SELECT birthday FROM children;"}"#),
        )
        .await;
        let v: Value = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
        ensure(status == StatusCode::OK, || {
            format!("denied query status {status}")
        })?;
        check_envelope(&v)?;
        ensure(
            v["OK"] == false
                && v["Feedback"]
                    .as_str()
                    .unwrap_or("")
                    .starts_with("NoPermission: "),
            || format!("denial feedback {}", v["Feedback"]),
        )?;

        let (status, _, body) = call(app.clone(), post_query("{not json")).await;
        ensure(status == StatusCode::BAD_REQUEST, || {
            format!("malformed body status {status}")
        })?;
        check_envelope(&serde_json::from_slice(&body).map_err(|e| e.to_string())?)?;

        let (status, headers, body) = call(
            app.clone(),
            Request::get("/ela").body(Body::empty()).unwrap(),
        )
        .await;
        ensure(
            status == StatusCode::OK && body == playground::ELA_XML.as_bytes(),
            || "GET /ela is not the loaded document".into(),
        )?;
        ensure(headers[header::CONTENT_TYPE] == "application/xml", || {
            "ELA content type".into()
        })?;
        let etag = headers[header::ETAG].to_str().unwrap().to_string();
        let (status, _, _) = call(
            app.clone(),
            Request::get("/ela")
                .header(header::IF_NONE_MATCH, &etag)
                .body(Body::empty())
                .unwrap(),
        )
        .await;
        ensure(status == StatusCode::NOT_MODIFIED, || {
            format!("conditional GET status {status}")
        })?;
        let again = playground_gateway(pinned_clock());
        ensure(again.etag() == etag, || {
            "ETag differs across identical loads".into()
        })?;

        let (status, _, body) = call(
            app.clone(),
            Request::post("/dev/sign")
                .body(Body::from(r#"{"SQL":"SHOW TABLES;"}"#))
                .unwrap(),
        )
        .await;
        ensure(status == StatusCode::OK, || {
            format!("dev signer status {status}")
        })?;
        let signed: Value = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
        ensure(keys(&signed) == set(&["SQL", "Pkcs7"]), || {
            format!("signer output keys {:?}", keys(&signed))
        })?;
        let (_, _, body) = call(app, post_query(body)).await;
        let v: Value = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
        ensure(v["OK"] == true, || {
            format!("dev-signed request refused: {}", v["Feedback"])
        })?;
        Ok("request, envelope, cell, ELA and signer shapes verified".to_string())
    })
}

fn integrity() -> Check {
    let signer = Signer::generate_dev("integrity").map_err(|e| e.to_string())?;
    let trust = TrustStore::new(vec![signer.certificate().clone()]);
    let backend = playground::seeded_backend(pinned_clock()).map_err(|e| e.to_string())?;
    let gw = Gateway::new(
        playground::playground_ela().map_err(|e| e.to_string())?,
        trust,
        Arc::new(backend),
    );
    let sql = "INSERT INTO sandbox (ninu, posx, posy) VALUES ('100898450000', 120, 80);";
    let signed = signer.sign_request(sql, None).map_err(|e| e.to_string())?;
    let before = snapshot(gw.backend().as_ref());
    let mut rng = StdRng::seed_from_u64(0x1f7e_9a17);
    let printable: Vec<u8> = (0x20..0x7f).collect();
    for n in 0..100 {
        let mut bytes = sql.as_bytes().to_vec();
        let at = rng.gen_range(0..bytes.len());
        let original = bytes[at];
        let replacement = loop {
            let b = printable[rng.gen_range(0..printable.len())];
            if b != original {
                break b;
            }
        };
        bytes[at] = replacement;
        let tampered = SignedRequest {
            sql: String::from_utf8(bytes).expect("ASCII stays UTF-8"),
            ..signed.clone()
        };
        let env = gw.handle_request(&tampered);
        ensure(!env.ok && env.feedback_code() == "BadSignature", || {
            format!("mutation {n} at byte {at}: {}", env.feedback)
        })?;
    }
    ensure(snapshot(gw.backend().as_ref()) == before, || {
        "database changed".into()
    })?;
    let env = gw.handle_request(&signed);
    ensure(env.ok && env.affected_rows() == Some(1), || {
        format!("untampered request: {}", env.feedback)
    })?;
    Ok("100/100 mutations refused with BadSignature, state unchanged".into())
}

fn injection_rejection() -> Check {
    let gw = playground_gateway(pinned_clock());
    let before = snapshot(gw.backend().as_ref());
    let pre_execution = [
        "SyntaxError",
        "UnsupportedStatement",
        "ReservedVariable",
        "NoPermission",
        "UnresolvableVariable",
    ];
    let mut codes = BTreeSet::new();
    for sql in INJECTION {
        let env = gw.handle_request(&SignedRequest::anonymous(*sql));
        ensure(!env.ok, || format!("accepted: {sql}"))?;
        ensure(pre_execution.contains(&env.feedback_code()), || {
            format!("`{sql}` failed late: {}", env.feedback)
        })?;
        ensure(env.results.is_empty(), || {
            format!("`{sql}` returned results")
        })?;
        codes.insert(env.feedback_code().to_string());
    }
    ensure(snapshot(gw.backend().as_ref()) == before, || {
        "partial commit detected".into()
    })?;
    Ok(format!(
        "{} scripts refused ({}), state unchanged",
        INJECTION.len(),
        codes.into_iter().collect::<Vec<_>>().join(", ")
    ))
}

fn ela_validation() -> Check {
    let loaded = LoadedEla::from_bytes(playground::ELA_XML.as_bytes().to_vec())
        .map_err(|e| e.to_string())?;
    let doc = &loaded.document;
    let ids: Vec<&str> = doc.restrictions.iter().map(|r| r.id.as_str()).collect();
    ensure(ids == ["toyInUse", "suitableAge"], || {
        format!("restrictions {ids:?}")
    })?;
    let not_enforced: Vec<&str> = doc
        .warnings
        .iter()
        .filter(|w| w.code == "NotEnforced")
        .map(|w| w.detail.as_str())
        .collect();
    ensure(
        !not_enforced.is_empty() && not_enforced.iter().all(|d| d.contains("@owner")),
        || format!("NotEnforced warnings {not_enforced:?}"),
    )?;
    let mutations = ela_mutations();
    for (name, xml, code) in &mutations {
        match ElaDocument::parse(xml.as_bytes()) {
            Ok(_) => return Err(format!("`{name}` was accepted")),
            Err(e) => ensure(e.code() == *code, || {
                format!("`{name}`: got {} ({e}), want {code}", e.code())
            })?,
        }
    }
    Ok(format!(
        "2 restrictions, {} not-enforced warnings, {} invalid variants refused with the expected code",
        not_enforced.len(),
        mutations.len()
    ))
}
