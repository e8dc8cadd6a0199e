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

#pragma once

// Certificate authorities issuing attribute-bearing identities. Certificates
// are signed canonical documents; the CA signs every field before the
// signature.

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "dbcabac/abac.hpp"
#include "dbcabac/canonical.hpp"
#include "dbcabac/crypto.hpp"

namespace dbcabac::identity {

enum class RoleClass { GlobalAdmin, LocalAdmin, User, Peer, Orderer };

std::string_view to_string(RoleClass role) noexcept;
std::optional<RoleClass> parse_role_class(std::string_view text);

struct MspId {
  std::string value;

  static MspId for_org(std::string_view org_id) { return {std::string(org_id) + "MSP"}; }
  bool operator==(const MspId&) const = default;
};

struct IdentityCertificate {
  std::string subject_id;
  RoleClass role_class = RoleClass::User;
  abac::SubjectAttributes attributes;
  std::string org_id;
  std::string ca_id;
  crypto::PublicKey public_key{};
  std::string signature;  // hex

  MspId msp_id() const { return MspId::for_org(org_id); }
  // Canonical bytes the CA signs: every field except the signature.
  std::string signed_payload() const;

  bool operator==(const IdentityCertificate&) const = default;
};

Document to_document(const IdentityCertificate& cert);
// Throws std::invalid_argument on schema errors.
IdentityCertificate certificate_from_document(const Document& doc);

// A certificate plus its private signing key.
struct Credential {
  IdentityCertificate cert;
  crypto::SecretKey secret_key{};

  // Written with owner-only permissions.
  void save(const std::filesystem::path& path) const;
  // Throws Error(ConfigError) when unreadable or malformed.
  static Credential load(const std::filesystem::path& path);
};

struct TrustedCa {
  std::string ca_id;
  crypto::PublicKey public_key{};
};

// org_id -> issuing CA.
class TrustStore {
 public:
  void add(const std::string& org_id, TrustedCa ca) { cas_[org_id] = ca; }
  const TrustedCa* find(std::string_view org_id) const;
  bool empty() const noexcept { return cas_.empty(); }

 private:
  std::map<std::string, TrustedCa, std::less<>> cas_;
};

enum class VerifyFailure { Malformed, UntrustedIssuer, BadSignature };
std::string_view to_string(VerifyFailure f) noexcept;

struct VerifyResult {
  std::optional<VerifyFailure> failure;

  bool ok() const noexcept { return !failure; }
};

VerifyResult verify(const IdentityCertificate& cert, const TrustStore& trusted);

class CertificateAuthority {
 public:
  // Fresh signing key; the registrar secret is stored only as a salted hash.
  CertificateAuthority(std::string ca_id, std::string org_id, std::string registrar_id,
                       std::string_view registrar_secret);

  const std::string& ca_id() const noexcept { return ca_id_; }
  const std::string& org_id() const noexcept { return org_id_; }
  const crypto::PublicKey& public_key() const noexcept { return key_.public_key; }
  TrustedCa trusted() const { return {ca_id_, key_.public_key}; }

  // Throws Error(BadSecret). Re-enrollment keeps the subject and issues a
  // fresh keypair.
  Credential enroll_admin(const std::string& admin_id, std::string_view secret);

  // The registrar must hold a GlobalAdmin certificate issued by this CA.
  // Returns the one-time-displayed secret. Throws Error(Unauthorized) or
  // Error(AlreadyRegistered).
  std::string register_identity(const Credential& registrar, const std::string& new_id,
                                RoleClass role_class, const abac::SubjectAttributes& attributes);

  // Throws Error(UnknownId) or Error(BadSecret).
  Credential enroll(const std::string& id, std::string_view secret);

  bool is_registered(std::string_view id) const;
  bool is_enrolled(std::string_view id) const;

  // Persisted state holds the CA key and salted secret hashes only.
  Document to_document() const;
  static CertificateAuthority from_document(const Document& doc);
  void save(const std::filesystem::path& path) const;
  static CertificateAuthority load(const std::filesystem::path& path);

  CertificateAuthority(const CertificateAuthority&) = delete;
  CertificateAuthority& operator=(const CertificateAuthority&) = delete;
  CertificateAuthority(CertificateAuthority&& other) noexcept;

 private:
  struct Registration {
    std::string salt;
    std::string secret_hash;
    RoleClass role_class = RoleClass::User;
    abac::SubjectAttributes attributes;
    bool enrolled = false;
  };

  CertificateAuthority() = default;
  Credential issue(const std::string& subject_id, RoleClass role, const abac::SubjectAttributes& attrs) const;

  std::string ca_id_;
  std::string org_id_;
  crypto::KeyPair key_;
  std::string registrar_id_;
  Registration registrar_;
  std::map<std::string, Registration, std::less<>> registry_;
  mutable std::mutex mutex_;
};

}  // namespace dbcabac::identity
