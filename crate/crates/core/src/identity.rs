//! Request signatures: PKCS#7 detached SignedData over the SQL bytes, and the
//! requester id derived from the signer certificate.

use std::fmt;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use openssl::asn1::Asn1Time;
use openssl::bn::{BigNum, MsbOption};
use openssl::ec::{EcGroup, EcKey};
use openssl::hash::MessageDigest;
use openssl::nid::Nid;
use openssl::pkcs7::{Pkcs7, Pkcs7Flags};
use openssl::pkey::{PKey, Private};
use openssl::stack::Stack;
use openssl::x509::extension::{BasicConstraints, KeyUsage};
use openssl::x509::store::{X509Store, X509StoreBuilder};
use openssl::x509::{X509NameBuilder, X509StoreContext, X509};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Inbound request envelope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedRequest {
    #[serde(rename = "SQL")]
    pub sql: String,
    #[serde(rename = "Pkcs7", default, skip_serializing_if = "Option::is_none")]
    pub pkcs7: Option<String>,
    #[serde(rename = "Comment", default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

impl SignedRequest {
    pub fn anonymous(sql: impl Into<String>) -> Self {
        SignedRequest {
            sql: sql.into(),
            pkcs7: None,
            comment: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RequesterIdentity {
    Anonymous,
    Certified {
        /// Base64 of the SHA-256 digest of the certificate DER.
        id: String,
        subject_name: String,
        fingerprint: [u8; 32],
    },
}

impl RequesterIdentity {
    pub fn id(&self) -> Option<&str> {
        match self {
            RequesterIdentity::Anonymous => None,
            RequesterIdentity::Certified { id, .. } => Some(id),
        }
    }

    pub fn is_anonymous(&self) -> bool {
        matches!(self, RequesterIdentity::Anonymous)
    }

    pub fn from_certificate(cert: &X509) -> Result<Self, IdentityError> {
        let der = cert
            .to_der()
            .map_err(|e| IdentityError::MalformedEnvelope(e.to_string()))?;
        let fingerprint: [u8; 32] = Sha256::digest(&der).into();
        Ok(RequesterIdentity::Certified {
            id: STANDARD.encode(fingerprint),
            subject_name: subject_string(cert),
            fingerprint,
        })
    }
}

impl fmt::Display for RequesterIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RequesterIdentity::Anonymous => f.write_str("anon"),
            RequesterIdentity::Certified {
                id, subject_name, ..
            } => {
                write!(f, "{id} ({subject_name})")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdentityError {
    #[error("signature does not match the SQL text: {0}")]
    BadSignature(String),
    #[error("signer certificate is not trusted: {0}")]
    UntrustedSigner(String),
    #[error("cannot decode signature envelope: {0}")]
    MalformedEnvelope(String),
    #[error("key material: {0}")]
    KeyMaterial(String),
}

impl IdentityError {
    pub fn code(&self) -> &'static str {
        match self {
            IdentityError::BadSignature(_) => "BadSignature",
            IdentityError::UntrustedSigner(_) => "UntrustedSigner",
            IdentityError::MalformedEnvelope(_) => "MalformedEnvelope",
            IdentityError::KeyMaterial(_) => "KeyMaterial",
        }
    }
}

fn key_err(e: impl fmt::Display) -> IdentityError {
    IdentityError::KeyMaterial(e.to_string())
}

/// Base64 (standard alphabet, padded) of SHA-256 over the certificate DER.
pub fn identity_of(cert_der: &[u8]) -> String {
    STANDARD.encode(Sha256::digest(cert_der))
}

fn subject_string(cert: &X509) -> String {
    cert.subject_name()
        .entries()
        .map(|e| {
            let key = e.object().nid().short_name().unwrap_or("?");
            let value = e.data().to_string().unwrap_or_default();
            format!("{key}={value}")
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Trusted root certificates, fixed at startup.
#[derive(Clone, Default)]
pub struct TrustStore {
    roots: Vec<X509>,
}

impl fmt::Debug for TrustStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrustStore")
            .field("roots", &self.roots.len())
            .finish()
    }
}

impl TrustStore {
    pub fn new(roots: Vec<X509>) -> Self {
        TrustStore { roots }
    }

    /// Loads every `.pem`, `.crt` and `.cer` file in `dir` (PEM, possibly several certificates each).
    pub fn from_dir(dir: &Path) -> Result<Self, IdentityError> {
        let mut roots = Vec::new();
        let entries =
            std::fs::read_dir(dir).map_err(|e| key_err(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for path in paths {
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
            if !["pem", "crt", "cer"].contains(&ext) {
                continue;
            }
            let bytes =
                std::fs::read(&path).map_err(|e| key_err(format!("{}: {e}", path.display())))?;
            let certs = X509::stack_from_pem(&bytes)
                .map_err(|e| key_err(format!("{}: {e}", path.display())))?;
            roots.extend(certs);
        }
        Ok(TrustStore { roots })
    }

    pub fn add(&mut self, cert: X509) {
        self.roots.push(cert);
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    fn store(&self) -> Result<X509Store, IdentityError> {
        let mut builder = X509StoreBuilder::new().map_err(key_err)?;
        for root in &self.roots {
            builder.add_cert(root.clone()).map_err(key_err)?;
        }
        Ok(builder.build())
    }
}

/// Checks a detached PKCS#7 signature (Base64 of DER) over `data` and returns the signer.
pub fn verify_detached(
    signature_b64: &str,
    data: &[u8],
    trust: &TrustStore,
) -> Result<RequesterIdentity, IdentityError> {
    let compact: String = signature_b64
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect();
    let der = STANDARD
        .decode(compact.as_bytes())
        .map_err(|e| IdentityError::MalformedEnvelope(format!("base64: {e}")))?;
    let pkcs7 = Pkcs7::from_der(&der)
        .map_err(|e| IdentityError::MalformedEnvelope(format!("PKCS#7: {e}")))?;
    let embedded = pkcs7
        .signed()
        .and_then(|s| s.certificates())
        .map(|stack| stack.iter().map(|c| c.to_owned()).collect::<Vec<_>>())
        .unwrap_or_default();
    let empty = Stack::<X509>::new().map_err(key_err)?;
    let signers = pkcs7
        .signers(&empty, Pkcs7Flags::empty())
        .map_err(|e| IdentityError::MalformedEnvelope(format!("no signer certificate: {e}")))?;
    let signer = signers
        .iter()
        .next()
        .map(|c| c.to_owned())
        .ok_or_else(|| IdentityError::MalformedEnvelope("no signer certificate".into()))?;

    let no_store = X509StoreBuilder::new().map_err(key_err)?.build();
    pkcs7
        .verify(
            &empty,
            &no_store,
            Some(data),
            None,
            Pkcs7Flags::NOVERIFY | Pkcs7Flags::BINARY,
        )
        .map_err(|e| IdentityError::BadSignature(e.to_string()))?;

    let store = trust.store()?;
    let mut chain = Stack::<X509>::new().map_err(key_err)?;
    for cert in embedded {
        chain.push(cert).map_err(key_err)?;
    }
    let mut ctx = X509StoreContext::new().map_err(key_err)?;
    let verdict = ctx
        .init(&store, &signer, &chain, |c| {
            let ok = c.verify_cert()?;
            Ok((ok, c.error()))
        })
        .map_err(key_err)?;
    if !verdict.0 {
        return Err(IdentityError::UntrustedSigner(format!(
            "{}: {}",
            subject_string(&signer),
            verdict.1.error_string()
        )));
    }
    RequesterIdentity::from_certificate(&signer)
}

/// Maps a request to its requester: no signature means anonymous.
pub fn verify(req: &SignedRequest, trust: &TrustStore) -> Result<RequesterIdentity, IdentityError> {
    match req.pkcs7.as_deref() {
        None => Ok(RequesterIdentity::Anonymous),
        Some(sig) if sig.trim().is_empty() => Ok(RequesterIdentity::Anonymous),
        Some(sig) => verify_detached(sig, req.sql.as_bytes(), trust),
    }
}

/// A key pair and certificate able to produce request signatures.
#[derive(Clone)]
pub struct Signer {
    key: PKey<Private>,
    cert: X509,
}

impl fmt::Debug for Signer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Signer")
            .field("subject", &subject_string(&self.cert))
            .finish()
    }
}

impl Signer {
    pub fn from_pem(key_pem: &[u8], cert_pem: &[u8]) -> Result<Self, IdentityError> {
        let key = PKey::private_key_from_pem(key_pem).map_err(key_err)?;
        let cert = X509::from_pem(cert_pem).map_err(key_err)?;
        let public = cert.public_key().map_err(key_err)?;
        if !public.public_eq(&key) {
            return Err(IdentityError::KeyMaterial(
                "private key does not match the certificate".into(),
            ));
        }
        Ok(Signer { key, cert })
    }

    /// Self-signed EC P-256 certificate for development and tests only.
    pub fn generate_dev(common_name: &str) -> Result<Self, IdentityError> {
        let group = EcGroup::from_curve_name(Nid::X9_62_PRIME256V1).map_err(key_err)?;
        let key = PKey::from_ec_key(EcKey::generate(&group).map_err(key_err)?).map_err(key_err)?;
        let mut name = X509NameBuilder::new().map_err(key_err)?;
        name.append_entry_by_nid(Nid::COMMONNAME, common_name)
            .map_err(key_err)?;
        name.append_entry_by_nid(Nid::ORGANIZATIONALUNITNAME, "test only")
            .map_err(key_err)?;
        let name = name.build();

        let mut builder = X509::builder().map_err(key_err)?;
        builder.set_version(2).map_err(key_err)?;
        let mut serial = BigNum::new().map_err(key_err)?;
        serial
            .rand(127, MsbOption::MAYBE_ZERO, false)
            .map_err(key_err)?;
        builder
            .set_serial_number(serial.to_asn1_integer().map_err(key_err)?.as_ref())
            .map_err(key_err)?;
        builder.set_subject_name(&name).map_err(key_err)?;
        builder.set_issuer_name(&name).map_err(key_err)?;
        builder.set_pubkey(&key).map_err(key_err)?;
        let not_before = Asn1Time::from_unix(
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs() as i64 - 86_400)
                .unwrap_or(0),
        )
        .map_err(key_err)?;
        builder.set_not_before(&not_before).map_err(key_err)?;
        builder
            .set_not_after(Asn1Time::days_from_now(3650).map_err(key_err)?.as_ref())
            .map_err(key_err)?;
        builder
            .append_extension(
                BasicConstraints::new()
                    .critical()
                    .ca()
                    .build()
                    .map_err(key_err)?,
            )
            .map_err(key_err)?;
        builder
            .append_extension(
                KeyUsage::new()
                    .critical()
                    .digital_signature()
                    .non_repudiation()
                    .key_cert_sign()
                    .build()
                    .map_err(key_err)?,
            )
            .map_err(key_err)?;
        builder
            .sign(&key, MessageDigest::sha256())
            .map_err(key_err)?;
        Ok(Signer {
            key,
            cert: builder.build(),
        })
    }

    pub fn certificate(&self) -> &X509 {
        &self.cert
    }

    pub fn cert_pem(&self) -> Result<Vec<u8>, IdentityError> {
        self.cert.to_pem().map_err(key_err)
    }

    pub fn key_pem(&self) -> Result<Vec<u8>, IdentityError> {
        self.key.private_key_to_pem_pkcs8().map_err(key_err)
    }

    pub fn identity(&self) -> RequesterIdentity {
        RequesterIdentity::from_certificate(&self.cert).expect("certificate encodes to DER")
    }

    /// Base64 of a detached PKCS#7 signature over `data`, with the certificate embedded.
    pub fn sign_detached(&self, data: &[u8]) -> Result<String, IdentityError> {
        let extra = Stack::<X509>::new().map_err(key_err)?;
        let pkcs7 = Pkcs7::sign(
            &self.cert,
            &self.key,
            &extra,
            data,
            Pkcs7Flags::DETACHED | Pkcs7Flags::BINARY,
        )
        .map_err(key_err)?;
        Ok(STANDARD.encode(pkcs7.to_der().map_err(key_err)?))
    }

    pub fn sign_request(
        &self,
        sql: &str,
        comment: Option<String>,
    ) -> Result<SignedRequest, IdentityError> {
        Ok(SignedRequest {
            sql: sql.to_string(),
            pkcs7: Some(self.sign_detached(sql.as_bytes())?),
            comment,
        })
    }
}
