//! Inputs shared by the benchmarks.

/// The worked rewriting examples against the reduced schema.
pub const REQUESTS: &[(&str, &str)] = &[
    (
        "insert",
        "INSERT INTO sandbox (name, toy) VALUES ('Loys', 'ball');",
    ),
    (
        "update",
        "UPDATE sandbox SET toy = 'squirrel' WHERE name = 'Loys';",
    ),
    (
        "update_join",
        "UPDATE sandbox s LEFT JOIN children c ON s.name = c.name \
         SET s.toy = (SELECT t.toy FROM toychest t WHERE t.id = '15') \
         WHERE c.emšo = '100898450000';",
    ),
    ("select", "SELECT name, age FROM children WHERE age > 3;"),
];
