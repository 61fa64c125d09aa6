//! Fixed inputs: the worked rewriting examples, hostile scripts and broken rule documents.

use secss_core::playground::ELA_XML;
use secss_core::sql::normalized_tokens;

pub const INSERT_REQUEST: &str = "INSERT INTO sandbox (name, toy) VALUES ('Loys', 'ball');";

pub const INSERT_EXPECTED: &str = "SET @name = 'Loys';
SET @toy = 'ball';

INSERT INTO sandbox (name, toy)
SELECT @name, @toy FROM DUAL
    WHERE @toy IN
        (SELECT t.toy FROM toys t
            WHERE t.ageLimit < (SELECT c.age FROM children c
                WHERE c.name = @name));";

pub const UPDATE_REQUEST: &str = "UPDATE sandbox SET toy = 'squirrel'
WHERE name = 'Loys';";

pub const UPDATE_EXPECTED: &str = "SET @name = 'Loys';
SET @toy = 'squirrel';

UPDATE sandbox SET toy = @toy WHERE (name = @name)
AND @toy IN
(SELECT t.toy FROM toys t
WHERE t.ageLimit < (SELECT c.age FROM children c
WHERE c.name = @name));
AND @toy NOT IN
(SELECT s.toy FROM sandbox s)";

pub const DERIVED_REQUEST: &str = "UPDATE sandbox s LEFT JOIN children c ON s.name = c.name
SET s.toy =
    (SELECT t.toy FROM toychest t WHERE t.id = '15')
WHERE c.emšo = '100898450000';";

pub const DERIVED_EXPECTED: &str = "SET @name = (SELECT c.name FROM children c
             WHERE c.emšo = '100898450000');
SET @toy = (SELECT t.toy FROM toychest t WHERE t.id = '15');

UPDATE sandbox s LEFT JOIN children c ON s.name = c.name
SET s.toy = @toy
WHERE (c.emšo = '100898450000')
AND @toy IN
    (SELECT t.toy FROM toys t
     WHERE t.ageLimit < (SELECT c.age FROM children c
                        WHERE c.name = @name));
AND @toy NOT IN
    (SELECT s.toy FROM sandbox s)";

/// Token sequence of a reference transformation. A `;` directly before `AND`
/// is a typesetting slip (it would end the statement mid-WHERE) and is
/// dropped; the final statement gets its terminating `;`.
pub fn expected_tokens(expected_sql: &str) -> Vec<String> {
    let raw = normalized_tokens(expected_sql).expect("expected SQL tokenizes");
    let mut out: Vec<String> = Vec::with_capacity(raw.len() + 1);
    for (i, t) in raw.iter().enumerate() {
        if t == ";" && raw.get(i + 1).is_some_and(|n| n == "AND") {
            continue;
        }
        out.push(t.clone());
    }
    if out.last().is_none_or(|t| t != ";") {
        out.push(";".into());
    }
    out
}

/// Scripts that try to do more than the gateway allows. Every one must be
/// refused before anything executes.
pub const INJECTION: &[&str] = &[
    "INSERT INTO sandbox (ninu, posx, posy) VALUES ('100898450000', 1, 1); DROP TABLE children;",
    "DELETE FROM sandbox;",
    "DELETE FROM sandbox WHERE ninu = '090303500002';",
    "DROP TABLE children;",
    "GRANT ALL ON playground.* TO 'anon';",
    "SELECT name FROM children; DELETE FROM children;",
    "SELECT name FROM children; -- harmless\nDROP TABLE sandbox;",
    "SELECT name FROM children /* hidden */; DROP TABLE sandbox;",
    "UPDATE sandbox SET posx = 1 WHERE ninu = '090303500002'; GRANT SELECT ON children TO anon;",
    "INSERT INTO sandbox (ninu, posx, posy) VALUES ('100898450000', 1, 1); INSERT INTO children (ninu, name, surname, birthday) VALUES ('1', 'a', 'b', '2000-01-01');",
    "SELECT name FROM children UNION SELECT birthday FROM children;",
    "SELECT name FROM children WHERE ninu = '' UNION SELECT birthday FROM children;",
    "SET @ninu = '100898450000';",
    "INSERT INTO sandbox (ninu, item) VALUES (@sx_identity, 1);",
    "CREATE TABLE evil (a INTEGER);",
    "ALTER TABLE children ADD COLUMN x INTEGER;",
    "TRUNCATE TABLE sandbox;",
    "REPLACE INTO sandbox (ninu, posx, posy) VALUES ('090303500002', 0, 0);",
    "SELECT name FROM children INTO OUTFILE '/tmp/x';",
    "SELECT name FROM children WHERE name = 'a'; SELECT birthday FROM children;",
    "UPDATE sandbox SET posx = 5 WHERE ninu = '090303500002'; UPDATE children SET birthday = '2000-01-01';",
    "INSERT INTO sandbox (ninu, posx, posy) VALUES ('100898450000', 1, 1);; DROP TABLE toychest",
    "INSERT INTO sandbox (ninu, posx, posy) VALUES ('x'';DROP TABLE children;--', 1, 1); DELETE FROM toychest;",
    "SELECT name FROM children WHERE name = 'x' OR birthday > '2000-01-01';",
    "LOAD DATA INFILE '/etc/passwd' INTO TABLE children;",
];

/// Broken variants of the playground rule document with the error each must raise.
pub fn ela_mutations() -> Vec<(&'static str, String, &'static str)> {
    let fig = ELA_XML;
    let once = |from: &str, to: &str| {
        assert!(fig.contains(from), "mutation anchor missing: {from}");
        fig.replacen(from, to, 1)
    };
    vec![
        (
            "duplicate restriction id",
            once(r#"Id="suitableAge""#, r#"Id="toyInUse""#),
            "DuplicateRestrictionId",
        ),
        (
            "dangling reference",
            once(r##"ref="#toyInUse""##, r##"ref="#toyInUsed""##),
            "DanglingRestrictionRef",
        ),
        (
            "unknown restriction type",
            once(r#"type="INSERT/UPDATE""#, r#"type="DELETE""#),
            "BadRestrictionType",
        ),
        (
            "unknown membership test",
            once(r#"use="NOT IN""#, r#"use="NOT LIKE""#),
            "BadUseClause",
        ),
        (
            "variable used but not declared",
            once("c.ninu = @ninu", "c.ninu = @child"),
            "UnboundVariable",
        ),
        (
            "restriction body is not a SELECT",
            once(
                "SELECT s.item FROM playground.sandbox s",
                "DELETE FROM playground.sandbox",
            ),
            "BadRestrictionSql",
        ),
        (
            "write restriction on a read permission",
            once(
                "<Permission user=\"anon\" type=\"INSERT\">\n            <Apply-Restriction ref=\"#toyInUse\" />",
                "<Permission user=\"anon\" type=\"SELECT\">\n            <Apply-Restriction ref=\"#toyInUse\" />",
            ),
            "RestrictionKindMismatch",
        ),
        (
            "one variable bound to two fields",
            once(r#"<var field="item" name="@item" />"#, r#"<var field="posx" name="@item" />"#),
            "ConflictingVariable",
        ),
        (
            "variable name without @",
            once(r#"<var field="ninu" name="@ninu" />"#, r#"<var field="ninu" name="ninu" />"#),
            "BadVariableName",
        ),
        (
            "unknown permission type",
            once(r#"type="DELETE">"#, r#"type="DROP">"#),
            "BadPermissionType",
        ),
        (
            "restriction without table",
            once(r#"table="sandbox" field="@item" use="NOT IN""#, r#"field="@item" use="NOT IN""#),
            "MissingAttribute",
        ),
        (
            "truncated document",
            fig[..fig.len() / 2].to_string(),
            "XmlError",
        ),
        (
            "misspelled connection element",
            once("<Connection></Connection>", "<Connections></Connection>"),
            "XmlError",
        ),
    ]
}
