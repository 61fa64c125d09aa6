//! Human and JSON renderings of ELA summaries and response envelopes.

use std::fmt::Write;

use secss_core::{LoadedEla, ResponseEnvelope};
use serde_json::{json, Value};

pub fn ela_json(ela: &LoadedEla) -> Value {
    let doc = &ela.document;
    let restrictions: Vec<Value> = doc
        .restrictions
        .iter()
        .map(|r| {
            json!({
                "id": r.id,
                "type": r.rtype.as_str(),
                "table": r.table,
                "field": r.field,
                "use": r.use_clause.as_str(),
                "vars": r.vars.iter().map(|v| json!({ "field": v.field, "name": v.name })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let permissions: Vec<Value> = doc
        .permission_entries()
        .into_iter()
        .map(|(field, p)| {
            json!({
                "field": field,
                "user": p.user.to_string(),
                "type": p.kind.as_str(),
                "restrictions": p.applied_restrictions,
                "enforced": p.enforced(),
            })
        })
        .collect();
    let warnings: Vec<Value> = doc
        .warnings
        .iter()
        .map(|w| json!({ "code": w.code, "detail": w.detail }))
        .collect();
    json!({
        "valid": true,
        "signer": ela.signer.as_ref().map(|s| s.to_string()),
        "restrictions": restrictions,
        "permissions": permissions,
        "warnings": warnings,
    })
}

pub fn ela_text(ela: &LoadedEla) -> String {
    let doc = &ela.document;
    let entries = doc.permission_entries();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "valid: {} restrictions, {} permissions",
        doc.restrictions.len(),
        entries.len()
    );
    if let Some(s) = &ela.signer {
        let _ = writeln!(out, "signed by {s}");
    }
    for r in &doc.restrictions {
        let vars: Vec<String> = r
            .vars
            .iter()
            .map(|v| format!("{}={}", v.name, v.field))
            .collect();
        let _ = writeln!(
            out,
            "restriction {} [{}] {} {} on {} ({})",
            r.id,
            r.rtype.as_str(),
            r.field,
            r.use_clause.as_str(),
            r.table,
            vars.join(", ")
        );
    }
    for (field, p) in &entries {
        let mut line = format!("permission {field} {} {}", p.kind, p.user);
        if !p.applied_restrictions.is_empty() {
            let _ = write!(line, " -> {}", p.applied_restrictions.join(", "));
        }
        if !p.enforced() {
            line.push_str(" [not enforced]");
        }
        let _ = writeln!(out, "{line}");
    }
    for w in &doc.warnings {
        let _ = writeln!(out, "warning {w}");
    }
    out
}

pub fn envelope_text(env: &ResponseEnvelope) -> String {
    let mut out = String::new();
    for (i, r) in env.results.iter().enumerate() {
        let _ = writeln!(out, "[{}] {}", i + 1, r.requested_sql);
        let _ = writeln!(out, "    executed: {}", r.executed_sql);
        for row in &r.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| format!("{}={}", c.name, c.value.as_deref().unwrap_or("NULL")))
                .collect();
            let _ = writeln!(out, "    {}", cells.join("  "));
        }
    }
    let _ = writeln!(out, "{}", env.feedback);
    out
}
