//! Electronic Legal Act: the public XML rule document.
//!
//! A document holds restrictions (rules expressed as sub-queries plus a
//! membership test) and a Schema/Table/Field/Permission tree. Parsing validates
//! the whole document up front, so a loaded [`ElaDocument`] is always consistent.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::identity::{self, RequesterIdentity, TrustStore};
use crate::sql::ast::{eq_ci, select_variables, Select};
use crate::sql::{parse_select, FieldRef, ParseMode, StatementKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RestrictionType {
    Select,
    InsertUpdate,
}

impl RestrictionType {
    pub fn as_str(self) -> &'static str {
        match self {
            RestrictionType::Select => "SELECT",
            RestrictionType::InsertUpdate => "INSERT/UPDATE",
        }
    }

    fn applies_to(self, kind: PermissionKind) -> bool {
        match self {
            RestrictionType::Select => kind == PermissionKind::Select,
            RestrictionType::InsertUpdate => {
                matches!(kind, PermissionKind::Insert | PermissionKind::Update)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UseClause {
    In,
    NotIn,
}

impl UseClause {
    pub fn as_str(self) -> &'static str {
        match self {
            UseClause::In => "IN",
            UseClause::NotIn => "NOT IN",
        }
    }

    pub fn negated(self) -> bool {
        self == UseClause::NotIn
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarBinding {
    /// Column of the restriction's table.
    pub field: String,
    /// `@`-prefixed variable name.
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Restriction {
    pub id: String,
    pub rtype: RestrictionType,
    pub table: String,
    /// A `@variable` for INSERT/UPDATE restrictions, a column for SELECT ones.
    pub field: String,
    pub use_clause: UseClause,
    pub vars: Vec<VarBinding>,
    /// Sub-query text as authored (CDATA unwrapped, outer whitespace trimmed).
    pub sql: String,
    pub select: Select,
    pub justification: String,
}

impl Restriction {
    pub fn var(&self, name: &str) -> Option<&VarBinding> {
        self.vars.iter().find(|v| eq_ci(&v.name, name))
    }

    /// Whether the restriction guards `table` (schema-insensitive name match).
    pub fn targets(&self, table: &str) -> bool {
        let own = self.table.rsplit('.').next().unwrap_or(&self.table);
        eq_ci(own, table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PermissionKind {
    Select,
    Insert,
    Update,
    Delete,
}

impl PermissionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PermissionKind::Select => "SELECT",
            PermissionKind::Insert => "INSERT",
            PermissionKind::Update => "UPDATE",
            PermissionKind::Delete => "DELETE",
        }
    }

    pub fn for_statement(kind: StatementKind) -> Option<PermissionKind> {
        match kind {
            StatementKind::Select => Some(PermissionKind::Select),
            StatementKind::Insert => Some(PermissionKind::Insert),
            StatementKind::Update => Some(PermissionKind::Update),
            StatementKind::Show => None,
        }
    }
}

impl fmt::Display for PermissionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PermissionUser {
    Anon,
    Identity(String),
    /// `@column`: identity stored in a field of the row. Parsed, never matched.
    FieldIdentity(String),
}

impl PermissionUser {
    fn parse(s: &str) -> PermissionUser {
        if s == "anon" {
            PermissionUser::Anon
        } else if let Some(col) = s.strip_prefix('@') {
            PermissionUser::FieldIdentity(col.to_string())
        } else {
            PermissionUser::Identity(s.to_string())
        }
    }
}

impl fmt::Display for PermissionUser {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PermissionUser::Anon => f.write_str("anon"),
            PermissionUser::Identity(s) => f.write_str(s),
            PermissionUser::FieldIdentity(c) => write!(f, "@{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permission {
    pub user: PermissionUser,
    pub kind: PermissionKind,
    /// Restriction ids (without `#`), in document order.
    pub applied_restrictions: Vec<String>,
    pub justification: Option<String>,
    /// Document position among all permissions.
    pub position: usize,
}

impl Permission {
    pub fn enforced(&self) -> bool {
        self.kind != PermissionKind::Delete
            && !matches!(self.user, PermissionUser::FieldIdentity(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldPermissions {
    pub name: String,
    pub permissions: Vec<Permission>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TablePermissions {
    pub name: String,
    pub fields: Vec<FieldPermissions>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaPermissions {
    pub name: String,
    pub tables: Vec<TablePermissions>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElaWarning {
    pub code: &'static str,
    pub detail: String,
}

impl fmt::Display for ElaWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElaDocument {
    pub connection: String,
    pub restrictions: Vec<Restriction>,
    pub permissions: Vec<SchemaPermissions>,
    pub warnings: Vec<ElaWarning>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ElaError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("restriction id {0:?} is declared twice")]
    DuplicateRestrictionId(String),
    #[error("Apply-Restriction ref {reference:?} on {field} does not name a restriction")]
    DanglingRestrictionRef { reference: String, field: String },
    #[error("restriction {id:?} has type {value:?}; expected SELECT or INSERT/UPDATE")]
    BadRestrictionType { id: String, value: String },
    #[error("restriction {id:?} has use {value:?}; expected IN or NOT IN")]
    BadUseClause { id: String, value: String },
    #[error("restriction {id:?} references {var} which is not declared by a var element")]
    UnboundVariable { id: String, var: String },
    #[error("restriction {id:?} sql is not a single SELECT: {detail}")]
    BadRestrictionSql { id: String, detail: String },
    #[error(
        "{restriction_type} restriction {id:?} is applied to a {permission} permission on {field}"
    )]
    RestrictionKindMismatch {
        id: String,
        restriction_type: &'static str,
        permission: PermissionKind,
        field: String,
    },
    #[error("variable {var} is bound to both {first} and {second}")]
    ConflictingVariable {
        var: String,
        first: String,
        second: String,
    },
    #[error("restriction {id:?}: {detail}")]
    BadVariableName { id: String, detail: String },
    #[error("permission type {value:?} on {field} is not one of SELECT, INSERT, UPDATE, DELETE")]
    BadPermissionType { value: String, field: String },
    #[error("element <{element}> lacks required attribute {attribute:?}")]
    MissingAttribute { element: String, attribute: String },
    #[error("unexpected element <{element}> inside <{parent}>")]
    UnexpectedElement { element: String, parent: String },
    #[error("ELA signature: {0}")]
    Signature(String),
    #[error("reading {path}: {detail}")]
    Io { path: String, detail: String },
}

impl ElaError {
    pub fn code(&self) -> &'static str {
        match self {
            ElaError::Xml(_) => "XmlError",
            ElaError::DuplicateRestrictionId(_) => "DuplicateRestrictionId",
            ElaError::DanglingRestrictionRef { .. } => "DanglingRestrictionRef",
            ElaError::BadRestrictionType { .. } => "BadRestrictionType",
            ElaError::BadUseClause { .. } => "BadUseClause",
            ElaError::UnboundVariable { .. } => "UnboundVariable",
            ElaError::BadRestrictionSql { .. } => "BadRestrictionSql",
            ElaError::RestrictionKindMismatch { .. } => "RestrictionKindMismatch",
            ElaError::ConflictingVariable { .. } => "ConflictingVariable",
            ElaError::BadVariableName { .. } => "BadVariableName",
            ElaError::BadPermissionType { .. } => "BadPermissionType",
            ElaError::MissingAttribute { .. } => "MissingAttribute",
            ElaError::UnexpectedElement { .. } => "XmlError",
            ElaError::Signature(_) => "BadElaSignature",
            ElaError::Io { .. } => "IoError",
        }
    }
}

fn attr<'a>(node: Node<'a, '_>, name: &str) -> Result<&'a str, ElaError> {
    node.attribute(name)
        .ok_or_else(|| ElaError::MissingAttribute {
            element: node.tag_name().name().to_string(),
            attribute: name.to_string(),
        })
}

fn elements<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(|n| n.is_element())
}

fn unexpected(node: Node, parent: Node) -> ElaError {
    ElaError::UnexpectedElement {
        element: node.tag_name().name().to_string(),
        parent: parent.tag_name().name().to_string(),
    }
}

fn text_of(node: Node) -> String {
    node.children()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect::<String>()
        .trim()
        .to_string()
}

fn valid_variable(name: &str) -> bool {
    let Some(rest) = name.strip_prefix('@') else {
        return false;
    };
    let mut chars = rest.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

fn parse_restriction(node: Node) -> Result<Restriction, ElaError> {
    let id = attr(node, "Id")?.trim().to_string();
    let type_text = attr(node, "type")?;
    let rtype = match type_text.trim().to_ascii_uppercase().as_str() {
        "SELECT" => RestrictionType::Select,
        "INSERT/UPDATE" => RestrictionType::InsertUpdate,
        _ => {
            return Err(ElaError::BadRestrictionType {
                id,
                value: type_text.to_string(),
            })
        }
    };
    let table = attr(node, "table")?.trim().to_string();
    let field = attr(node, "field")?.trim().to_string();
    let use_text = attr(node, "use")?;
    let use_clause = match use_text
        .split_whitespace()
        .map(str::to_ascii_uppercase)
        .collect::<Vec<_>>()
        .join(" ")
        .as_str()
    {
        "IN" => UseClause::In,
        "NOT IN" => UseClause::NotIn,
        _ => {
            return Err(ElaError::BadUseClause {
                id,
                value: use_text.to_string(),
            })
        }
    };

    let mut vars: Vec<VarBinding> = Vec::new();
    let mut sql = None;
    let mut justification = String::new();
    for child in elements(node) {
        match child.tag_name().name() {
            "var" => {
                let binding = VarBinding {
                    field: attr(child, "field")?.trim().to_string(),
                    name: attr(child, "name")?.trim().to_string(),
                };
                if !valid_variable(&binding.name) {
                    return Err(ElaError::BadVariableName {
                        id,
                        detail: format!("{:?} is not an @-prefixed variable name", binding.name),
                    });
                }
                if let Some(prev) = vars.iter().find(|v| eq_ci(&v.name, &binding.name)) {
                    return Err(ElaError::ConflictingVariable {
                        var: binding.name.clone(),
                        first: format!("{table}.{}", prev.field),
                        second: format!("{table}.{}", binding.field),
                    });
                }
                vars.push(binding);
            }
            "sql" => sql = Some(text_of(child)),
            "justification" => justification = text_of(child),
            _ => return Err(unexpected(child, node)),
        }
    }
    let sql = sql.ok_or_else(|| ElaError::BadRestrictionSql {
        id: id.clone(),
        detail: "missing <sql> element".into(),
    })?;
    let select =
        parse_select(&sql, ParseMode::Internal).map_err(|e| ElaError::BadRestrictionSql {
            id: id.clone(),
            detail: e.to_string(),
        })?;

    match rtype {
        RestrictionType::InsertUpdate => {
            if !valid_variable(&field) {
                return Err(ElaError::BadVariableName {
                    id,
                    detail: format!(
                        "field {field:?} of an INSERT/UPDATE restriction must be a variable"
                    ),
                });
            }
        }
        RestrictionType::Select => {
            if field.starts_with('@') {
                return Err(ElaError::BadVariableName {
                    id,
                    detail: format!("field {field:?} of a SELECT restriction must be a column"),
                });
            }
            if !vars.is_empty() {
                return Err(ElaError::BadVariableName {
                    id,
                    detail: "SELECT restrictions cannot declare variables".into(),
                });
            }
        }
    }

    let mut referenced = Vec::new();
    select_variables(&select, &mut referenced);
    if field.starts_with('@') {
        referenced.insert(0, field.clone());
    }
    for var in referenced {
        if !vars.iter().any(|v| eq_ci(&v.name, &var)) {
            return Err(ElaError::UnboundVariable { id, var });
        }
    }

    Ok(Restriction {
        id,
        rtype,
        table,
        field,
        use_clause,
        vars,
        sql,
        select,
        justification,
    })
}

fn parse_permission(node: Node, field: &str, position: usize) -> Result<Permission, ElaError> {
    let user = attr(node, "user")?.trim();
    if user.is_empty() {
        return Err(ElaError::MissingAttribute {
            element: "Permission".into(),
            attribute: "user".into(),
        });
    }
    let type_text = attr(node, "type")?;
    let kind = match type_text.trim().to_ascii_uppercase().as_str() {
        "SELECT" => PermissionKind::Select,
        "INSERT" => PermissionKind::Insert,
        "UPDATE" => PermissionKind::Update,
        "DELETE" => PermissionKind::Delete,
        _ => {
            return Err(ElaError::BadPermissionType {
                value: type_text.to_string(),
                field: field.to_string(),
            })
        }
    };
    let mut applied = Vec::new();
    let mut justification = None;
    for child in elements(node) {
        match child.tag_name().name() {
            "Apply-Restriction" => {
                let r = attr(child, "ref")?.trim();
                let id = r
                    .strip_prefix('#')
                    .ok_or_else(|| ElaError::DanglingRestrictionRef {
                        reference: r.to_string(),
                        field: field.to_string(),
                    })?;
                applied.push(id.to_string());
            }
            "justification" => justification = Some(text_of(child)),
            _ => return Err(unexpected(child, node)),
        }
    }
    Ok(Permission {
        user: PermissionUser::parse(user),
        kind,
        applied_restrictions: applied,
        justification,
        position,
    })
}

impl ElaDocument {
    /// Parses and validates an ELA. Byte-equal inputs give equal documents.
    pub fn parse(xml: &[u8]) -> Result<ElaDocument, ElaError> {
        let text =
            std::str::from_utf8(xml).map_err(|e| ElaError::Xml(format!("not UTF-8: {e}")))?;
        let doc = Document::parse(text).map_err(|e| ElaError::Xml(e.to_string()))?;
        let root = doc.root_element();
        if root.tag_name().name() != "Configuration" {
            return Err(ElaError::Xml(format!(
                "root element is <{}>, expected <Configuration>",
                root.tag_name().name()
            )));
        }

        let mut connection = String::new();
        let mut restrictions: Vec<Restriction> = Vec::new();
        let mut permissions = Vec::new();
        let mut position = 0;
        for section in elements(root) {
            match section.tag_name().name() {
                "Connection" => connection = text_of(section),
                "Restrictions" => {
                    for r in elements(section) {
                        if r.tag_name().name() != "Restriction" {
                            return Err(unexpected(r, section));
                        }
                        let parsed = parse_restriction(r)?;
                        if restrictions.iter().any(|x| x.id == parsed.id) {
                            return Err(ElaError::DuplicateRestrictionId(parsed.id));
                        }
                        restrictions.push(parsed);
                    }
                }
                "Permissions" => {
                    for s in elements(section) {
                        if s.tag_name().name() != "Schema" {
                            return Err(unexpected(s, section));
                        }
                        let mut schema = SchemaPermissions {
                            name: attr(s, "name")?.trim().to_string(),
                            tables: Vec::new(),
                        };
                        for t in elements(s) {
                            if t.tag_name().name() != "Table" {
                                return Err(unexpected(t, s));
                            }
                            let mut table = TablePermissions {
                                name: attr(t, "name")?.trim().to_string(),
                                fields: Vec::new(),
                            };
                            for f in elements(t) {
                                if f.tag_name().name() != "Field" {
                                    return Err(unexpected(f, t));
                                }
                                let name = attr(f, "name")?.trim().to_string();
                                let label = format!("{}.{}.{}", schema.name, table.name, name);
                                let mut field = FieldPermissions {
                                    name,
                                    permissions: Vec::new(),
                                };
                                for p in elements(f) {
                                    if p.tag_name().name() != "Permission" {
                                        return Err(unexpected(p, f));
                                    }
                                    field
                                        .permissions
                                        .push(parse_permission(p, &label, position)?);
                                    position += 1;
                                }
                                table.fields.push(field);
                            }
                            schema.tables.push(table);
                        }
                        permissions.push(schema);
                    }
                }
                _ => return Err(unexpected(section, root)),
            }
        }

        let mut doc = ElaDocument {
            connection,
            restrictions,
            permissions,
            warnings: Vec::new(),
        };
        doc.validate()?;
        Ok(doc)
    }

    fn validate(&mut self) -> Result<(), ElaError> {
        let ids: HashMap<&str, &Restriction> = self
            .restrictions
            .iter()
            .map(|r| (r.id.as_str(), r))
            .collect();
        let mut warnings = Vec::new();
        for (label, perm) in self.permission_entries() {
            for id in &perm.applied_restrictions {
                let r = ids
                    .get(id.as_str())
                    .ok_or_else(|| ElaError::DanglingRestrictionRef {
                        reference: format!("#{id}"),
                        field: label.clone(),
                    })?;
                if perm.kind != PermissionKind::Delete && !r.rtype.applies_to(perm.kind) {
                    return Err(ElaError::RestrictionKindMismatch {
                        id: id.clone(),
                        restriction_type: r.rtype.as_str(),
                        permission: perm.kind,
                        field: label.clone(),
                    });
                }
            }
            if perm.kind == PermissionKind::Delete {
                warnings.push(ElaWarning {
                    code: "NotEnforced",
                    detail: format!(
                        "DELETE permission for {} on {label} is declared but not enforced",
                        perm.user
                    ),
                });
            }
            if let PermissionUser::FieldIdentity(_) = perm.user {
                warnings.push(ElaWarning {
                    code: "NotEnforced",
                    detail: format!(
                        "field-stored identity {} on {label} is declared but not enforced",
                        perm.user
                    ),
                });
            }
        }

        // one variable name means one column across the whole document
        let mut bound: HashMap<String, (String, String)> = HashMap::new();
        for r in &self.restrictions {
            for v in &r.vars {
                let target = format!("{}.{}", r.table, v.field).to_lowercase();
                let key = v.name.to_lowercase();
                match bound.get(&key) {
                    Some((t, shown)) if *t != target => {
                        return Err(ElaError::ConflictingVariable {
                            var: v.name.clone(),
                            first: shown.clone(),
                            second: format!("{}.{}", r.table, v.field),
                        })
                    }
                    Some(_) => {}
                    None => {
                        bound.insert(key, (target, format!("{}.{}", r.table, v.field)));
                    }
                }
            }
        }
        let mut by_column: HashMap<String, String> = HashMap::new();
        for r in &self.restrictions {
            for v in &r.vars {
                let column = format!("{}.{}", r.table, v.field).to_lowercase();
                match by_column.get(&column) {
                    Some(name) if !eq_ci(name, &v.name) => {
                        return Err(ElaError::ConflictingVariable {
                            var: v.name.clone(),
                            first: format!("{name} on {}.{}", r.table, v.field),
                            second: format!("{} on {}.{}", v.name, r.table, v.field),
                        })
                    }
                    Some(_) => {}
                    None => {
                        by_column.insert(column, v.name.clone());
                    }
                }
            }
        }
        self.warnings = warnings;
        Ok(())
    }

    /// Every permission with its `schema.table.field` label, in document order.
    pub fn permission_entries(&self) -> Vec<(String, &Permission)> {
        let mut out = Vec::new();
        for s in &self.permissions {
            for t in &s.tables {
                for f in &t.fields {
                    for p in &f.permissions {
                        out.push((format!("{}.{}.{}", s.name, t.name, f.name), p));
                    }
                }
            }
        }
        out
    }

    pub fn restriction(&self, id: &str) -> Option<&Restriction> {
        self.restrictions.iter().find(|r| r.id == id)
    }

    fn field_permissions(&self, fref: &FieldRef, default_schema: &str) -> Vec<&Permission> {
        let schema = fref.schema.as_deref().unwrap_or(default_schema);
        let mut out = Vec::new();
        for s in self.permissions.iter().filter(|s| eq_ci(&s.name, schema)) {
            for t in s.tables.iter().filter(|t| eq_ci(&t.name, &fref.table)) {
                for f in t.fields.iter().filter(|f| eq_ci(&f.name, &fref.field)) {
                    out.extend(f.permissions.iter());
                }
            }
        }
        out
    }

    /// The exact-identity permission for this field and kind, else the anon one.
    ///
    /// A field reference without schema is looked up under `default_schema`.
    /// Field-stored identities (`@owner`) never match.
    pub fn lookup_permission(
        &self,
        identity: &RequesterIdentity,
        kind: PermissionKind,
        fref: &FieldRef,
        default_schema: &str,
    ) -> Option<&Permission> {
        let candidates: Vec<&Permission> = self
            .field_permissions(fref, default_schema)
            .into_iter()
            .filter(|p| p.kind == kind)
            .collect();
        if let Some(id) = identity.id() {
            if let Some(p) = candidates
                .iter()
                .find(|p| matches!(&p.user, PermissionUser::Identity(u) if u == id))
            {
                return Some(p);
            }
        }
        candidates
            .into_iter()
            .find(|p| p.user == PermissionUser::Anon)
    }

    /// Restrictions attached to the permissions matched by `accessed`, deduplicated,
    /// ordered by permission position and then by Apply-Restriction order.
    pub fn collect_restrictions(
        &self,
        identity: &RequesterIdentity,
        kind: PermissionKind,
        accessed: &[FieldRef],
        default_schema: &str,
    ) -> Vec<&Restriction> {
        let mut matched: Vec<&Permission> = accessed
            .iter()
            .filter_map(|f| self.lookup_permission(identity, kind, f, default_schema))
            .collect();
        matched.sort_by_key(|p| p.position);
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for p in matched {
            for id in &p.applied_restrictions {
                if seen.insert(id.as_str()) {
                    if let Some(r) = self.restriction(id) {
                        out.push(r);
                    }
                }
            }
        }
        out
    }
}

/// An ELA as loaded from disk: the verbatim bytes plus the parsed document.
#[derive(Debug, Clone)]
pub struct LoadedEla {
    pub bytes: Vec<u8>,
    pub document: ElaDocument,
    /// Signer of the detached `<file>.p7s` signature, when one was present.
    pub signer: Option<RequesterIdentity>,
}

impl LoadedEla {
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, ElaError> {
        let mut document = ElaDocument::parse(&bytes)?;
        document.warnings.push(ElaWarning {
            code: "Unsigned",
            detail: "no detached signature accompanies this ELA".into(),
        });
        Ok(LoadedEla {
            bytes,
            document,
            signer: None,
        })
    }

    /// Reads `path` and, if `path.p7s` exists, verifies it against `trust`.
    pub fn from_path(path: &Path, trust: &TrustStore) -> Result<Self, ElaError> {
        let io = |e: std::io::Error, p: &Path| ElaError::Io {
            path: p.display().to_string(),
            detail: e.to_string(),
        };
        let bytes = std::fs::read(path).map_err(|e| io(e, path))?;
        let mut sig_path = path.as_os_str().to_owned();
        sig_path.push(".p7s");
        let sig_path = std::path::PathBuf::from(sig_path);
        if !sig_path.exists() {
            return Self::from_bytes(bytes);
        }
        let sig = std::fs::read_to_string(&sig_path).map_err(|e| io(e, &sig_path))?;
        let signer = identity::verify_detached(&sig, &bytes, trust)
            .map_err(|e| ElaError::Signature(format!("{}: {e}", e.code())))?;
        let document = ElaDocument::parse(&bytes)?;
        Ok(LoadedEla {
            bytes,
            document,
            signer: Some(signer),
        })
    }
}
