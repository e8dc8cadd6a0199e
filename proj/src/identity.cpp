// Copyright 2026 The dbcabac Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dbcabac/identity.hpp"

#include <array>
#include <fstream>
#include <stdexcept>

#include "dbcabac/error.hpp"

namespace dbcabac::identity {
namespace {

constexpr std::array<std::string_view, 5> kRoleNames{"GlobalAdmin", "LocalAdmin", "User", "Peer",
                                                     "Orderer"};

std::string hash_secret(std::string_view salt, std::string_view secret) {
  return crypto::sha256_hex(std::string(salt) + ":" + std::string(secret));
}

// Constant-time comparison of equal-length hex digests.
bool digest_equal(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  unsigned char diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff |= static_cast<unsigned char>(a[i] ^ b[i]);
  return diff == 0;
}

Document unsigned_doc(const IdentityCertificate& c) {
  return {{"subject_id", c.subject_id},
          {"role_class", to_string(c.role_class)},
          {"attributes", abac::to_document(c.attributes)},
          {"org_id", c.org_id},
          {"ca_id", c.ca_id},
          {"public_key", crypto::to_hex(c.public_key)}};
}

void write_private(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
    out << bytes;
  }
  std::filesystem::permissions(path, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write,
                               std::filesystem::perm_options::replace);
}

Document read_document(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_document(bytes);
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(RoleClass role) noexcept { return kRoleNames[static_cast<std::size_t>(role)]; }

std::optional<RoleClass> parse_role_class(std::string_view text) {
  for (std::size_t i = 0; i < kRoleNames.size(); ++i) {
    if (kRoleNames[i] == text) return static_cast<RoleClass>(i);
  }
  // CLI-friendly spellings.
  if (text == "global-admin") return RoleClass::GlobalAdmin;
  if (text == "local-admin") return RoleClass::LocalAdmin;
  if (text == "user") return RoleClass::User;
  if (text == "peer") return RoleClass::Peer;
  if (text == "orderer") return RoleClass::Orderer;
  return std::nullopt;
}

std::string IdentityCertificate::signed_payload() const { return canonical(unsigned_doc(*this)); }

Document to_document(const IdentityCertificate& cert) {
  auto doc = unsigned_doc(cert);
  doc["signature"] = cert.signature;
  return doc;
}

IdentityCertificate certificate_from_document(const Document& doc) {
  try {
    IdentityCertificate c;
    c.subject_id = doc.at("subject_id");
    auto role = parse_role_class(doc.at("role_class").get<std::string>());
    if (!role) throw std::invalid_argument("unknown role_class");
    c.role_class = *role;
    const auto& a = doc.at("attributes");
    c.attributes = {a.at("user_id"), a.at("role"), a.at("domain_id")};
    c.org_id = doc.at("org_id");
    c.ca_id = doc.at("ca_id");
    auto pk = crypto::array_from_hex<crypto::kPublicKeySize>(doc.at("public_key").get<std::string>());
    if (!pk) throw std::invalid_argument("bad public_key");
    c.public_key = *pk;
    c.signature = doc.at("signature");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("certificate schema error: ") + e.what());
  }
}

void Credential::save(const std::filesystem::path& path) const {
  Document doc{{"certificate", to_document(cert)}, {"secret_key", crypto::to_hex(secret_key)}};
  write_private(path, canonical(doc));
}

Credential Credential::load(const std::filesystem::path& path) {
  auto doc = read_document(path);
  try {
    Credential c;
    c.cert = certificate_from_document(doc.at("certificate"));
    auto sk = crypto::array_from_hex<crypto::kSecretKeySize>(doc.at("secret_key").get<std::string>());
    if (!sk) throw std::invalid_argument("bad secret_key");
    c.secret_key = *sk;
    return c;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

const TrustedCa* TrustStore::find(std::string_view org_id) const {
  auto it = cas_.find(org_id);
  return it == cas_.end() ? nullptr : &it->second;
}

std::string_view to_string(VerifyFailure f) noexcept {
  switch (f) {
    case VerifyFailure::Malformed: return "malformed";
    case VerifyFailure::UntrustedIssuer: return "untrusted-issuer";
    case VerifyFailure::BadSignature: return "bad-signature";
  }
  return "unknown";
}

VerifyResult verify(const IdentityCertificate& cert, const TrustStore& trusted) {
  const auto* ca = trusted.find(cert.org_id);
  if (!ca || ca->ca_id != cert.ca_id) return {VerifyFailure::UntrustedIssuer};
  auto sig = crypto::array_from_hex<crypto::kSignatureSize>(cert.signature);
  if (!sig) return {VerifyFailure::Malformed};
  if (!crypto::verify(ca->public_key, cert.signed_payload(), *sig)) return {VerifyFailure::BadSignature};
  return {};
}

CertificateAuthority::CertificateAuthority(std::string ca_id, std::string org_id,
                                           std::string registrar_id, std::string_view registrar_secret)
    : ca_id_(std::move(ca_id)),
      org_id_(std::move(org_id)),
      key_(crypto::KeyPair::generate()),
      registrar_id_(std::move(registrar_id)) {
  registrar_.salt = crypto::random_token(16);
  registrar_.secret_hash = hash_secret(registrar_.salt, registrar_secret);
  registrar_.role_class = RoleClass::GlobalAdmin;
  registrar_.attributes = {registrar_id_, "global-admin", org_id_};
}

CertificateAuthority::CertificateAuthority(CertificateAuthority&& other) noexcept
    : ca_id_(std::move(other.ca_id_)),
      org_id_(std::move(other.org_id_)),
      key_(other.key_),
      registrar_id_(std::move(other.registrar_id_)),
      registrar_(std::move(other.registrar_)),
      registry_(std::move(other.registry_)) {}

Credential CertificateAuthority::issue(const std::string& subject_id, RoleClass role,
                                       const abac::SubjectAttributes& attrs) const {
  auto kp = crypto::KeyPair::generate();
  Credential cred;
  cred.cert.subject_id = subject_id;
  cred.cert.role_class = role;
  cred.cert.attributes = attrs;
  cred.cert.org_id = org_id_;
  cred.cert.ca_id = ca_id_;
  cred.cert.public_key = kp.public_key;
  cred.cert.signature = crypto::to_hex(crypto::sign(key_.secret_key, cred.cert.signed_payload()));
  cred.secret_key = kp.secret_key;
  return cred;
}

Credential CertificateAuthority::enroll_admin(const std::string& admin_id, std::string_view secret) {
  std::lock_guard lock(mutex_);
  if (admin_id != registrar_id_ || !digest_equal(hash_secret(registrar_.salt, secret), registrar_.secret_hash)) {
    throw Error(ErrorCode::BadSecret, "registrar credentials rejected");
  }
  registrar_.enrolled = true;
  return issue(registrar_id_, RoleClass::GlobalAdmin, registrar_.attributes);
}

std::string CertificateAuthority::register_identity(const Credential& registrar, const std::string& new_id,
                                                    RoleClass role_class,
                                                    const abac::SubjectAttributes& attributes) {
  TrustStore self;
  self.add(org_id_, trusted());
  if (!verify(registrar.cert, self).ok() || registrar.cert.role_class != RoleClass::GlobalAdmin) {
    throw Error(ErrorCode::Unauthorized, "registrar must hold a GlobalAdmin certificate from " + ca_id_);
  }
  // Proof of possession of the registrar key.
  const auto request = canonical({{"new_id", new_id}, {"role_class", to_string(role_class)},
                                  {"attributes", abac::to_document(attributes)}});
  if (!crypto::verify(registrar.cert.public_key, request, crypto::sign(registrar.secret_key, request))) {
    throw Error(ErrorCode::Unauthorized, "registrar key does not match certificate");
  }
  if (role_class == RoleClass::GlobalAdmin) {
    throw Error(ErrorCode::Unauthorized, "GlobalAdmin identities are bootstrapped, not registered");
  }
  if (new_id.empty() || attributes.user_id.empty() || attributes.role.empty() || attributes.domain_id.empty()) {
    throw Error(ErrorCode::MalformedRequest, "identity id and all subject attributes must be non-empty");
  }
  std::lock_guard lock(mutex_);
  if (new_id == registrar_id_ || registry_.count(new_id)) {
    throw Error(ErrorCode::AlreadyRegistered, new_id);
  }
  auto secret = crypto::random_token(16);
  Registration reg;
  reg.salt = crypto::random_token(16);
  reg.secret_hash = hash_secret(reg.salt, secret);
  reg.role_class = role_class;
  reg.attributes = attributes;
  registry_.emplace(new_id, std::move(reg));
  return secret;
}

Credential CertificateAuthority::enroll(const std::string& id, std::string_view secret) {
  std::lock_guard lock(mutex_);
  auto it = registry_.find(id);
  if (it == registry_.end()) throw Error(ErrorCode::UnknownId, id);
  if (!digest_equal(hash_secret(it->second.salt, secret), it->second.secret_hash)) {
    throw Error(ErrorCode::BadSecret, "secret rejected for " + id);
  }
  it->second.enrolled = true;
  return issue(id, it->second.role_class, it->second.attributes);
}

bool CertificateAuthority::is_registered(std::string_view id) const {
  std::lock_guard lock(mutex_);
  return registry_.count(id) > 0;
}

bool CertificateAuthority::is_enrolled(std::string_view id) const {
  std::lock_guard lock(mutex_);
  auto it = registry_.find(id);
  if (it != registry_.end()) return it->second.enrolled;
  return id == registrar_id_ && registrar_.enrolled;
}

Document CertificateAuthority::to_document() const {
  std::lock_guard lock(mutex_);
  auto reg_doc = [](const Registration& r) {
    return Document{{"salt", r.salt},
                    {"secret_hash", r.secret_hash},
                    {"role_class", to_string(r.role_class)},
                    {"attributes", abac::to_document(r.attributes)},
                    {"enrolled", r.enrolled}};
  };
  Document registry = Document::object();
  for (const auto& [id, r] : registry_) registry[id] = reg_doc(r);
  return {{"ca_id", ca_id_},
          {"org_id", org_id_},
          {"public_key", crypto::to_hex(key_.public_key)},
          {"secret_key", crypto::to_hex(key_.secret_key)},
          {"registrar_id", registrar_id_},
          {"registrar", reg_doc(registrar_)},
          {"registry", registry}};
}

CertificateAuthority CertificateAuthority::from_document(const Document& doc) {
  auto reg_from = [](const Document& d) {
    Registration r;
    r.salt = d.at("salt");
    r.secret_hash = d.at("secret_hash");
    r.role_class = parse_role_class(d.at("role_class").get<std::string>()).value();
    const auto& a = d.at("attributes");
    r.attributes = {a.at("user_id"), a.at("role"), a.at("domain_id")};
    r.enrolled = d.at("enrolled");
    return r;
  };
  try {
    CertificateAuthority ca;
    ca.ca_id_ = doc.at("ca_id");
    ca.org_id_ = doc.at("org_id");
    ca.key_.public_key = crypto::array_from_hex<crypto::kPublicKeySize>(doc.at("public_key").get<std::string>()).value();
    ca.key_.secret_key = crypto::array_from_hex<crypto::kSecretKeySize>(doc.at("secret_key").get<std::string>()).value();
    ca.registrar_id_ = doc.at("registrar_id");
    ca.registrar_ = reg_from(doc.at("registrar"));
    for (const auto& [id, r] : doc.at("registry").items()) ca.registry_.emplace(id, reg_from(r));
    return ca;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("CA state: ") + e.what());
  }
}

void CertificateAuthority::save(const std::filesystem::path& path) const {
  auto tmp = path;
  tmp += ".tmp";
  write_private(tmp, canonical(to_document()));
  std::filesystem::rename(tmp, path);
}

CertificateAuthority CertificateAuthority::load(const std::filesystem::path& path) {
  return from_document(read_document(path));
}

}  // namespace dbcabac::identity
