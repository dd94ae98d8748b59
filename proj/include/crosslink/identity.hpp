// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.
//
// Per-organization identity anchors. Chains are single-level: an org root
// signs member certificates directly, and the root certificate is
// self-signed. No expiry or revocation is modeled; validation is signature
// plus root membership.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include "crosslink/bytes.hpp"
#include "crosslink/codec.hpp"
#include "crosslink/crypto.hpp"

namespace crosslink {

class IdentityError : public std::runtime_error {
 public:
  explicit IdentityError(const std::string& what) : std::runtime_error("identity: " + what) {}
};

enum class SubjectKind : std::uint8_t { peer = 1, client = 2 };

struct Certificate {
  std::string subject_id;
  SubjectKind subject_kind = SubjectKind::peer;
  std::string org_id;
  std::string network_id;
  Bytes public_key;      // sig-v1 verify key
  Bytes enc_public_key;  // enc-v1 key-agreement key
  std::string issuer_org_id;
  std::uint64_t serial = 0;
  Bytes signature;  // issuer signature over canonical_body()

  // Tags 1..8; the issuer signs exactly these bytes.
  Bytes canonical_body() const {
    Writer w;
    w.field_string(1, subject_id);
    w.field_u8(2, static_cast<std::uint8_t>(subject_kind));
    w.field_string(3, org_id);
    w.field_string(4, network_id);
    w.field_bytes(5, public_key);
    w.field_bytes(6, enc_public_key);
    w.field_string(7, issuer_org_id);
    w.field_u64(8, serial);
    return w.take();
  }

  Bytes canonical_bytes() const { return encode(); }

  Bytes encode() const {
    Bytes out = canonical_body();
    Writer sig;
    sig.field_bytes(9, signature);
    append(out, sig.take());
    return out;
  }

  static Certificate decode(ByteView data) {
    Reader r(data);
    Certificate c;
    c.subject_id = r.string(1);
    std::uint8_t kind = r.u8(2);
    if (kind != 1 && kind != 2) throw CodecError("bad subject_kind");
    c.subject_kind = static_cast<SubjectKind>(kind);
    c.org_id = r.string(3);
    c.network_id = r.string(4);
    c.public_key = copy_bytes(r.fixed(5, sign_public_key_bytes));
    c.enc_public_key = copy_bytes(r.fixed(6, enc_key_bytes));
    c.issuer_org_id = r.string(7);
    c.serial = r.u64(8);
    c.signature = copy_bytes(r.fixed(9, signature_bytes));
    r.finish();
    return c;
  }

  bool operator==(const Certificate& other) const { return encode() == other.encode(); }
};

struct ChainVerdict {
  bool ok = false;
  std::string reason;  // "unknown-org", "bad-signature", "issuer-mismatch"
  explicit operator bool() const { return ok; }
};

// trusted_roots maps org_id to that org's root verify key.
inline ChainVerdict validate_chain(const Certificate& cert,
                                   const std::map<std::string, Bytes>& trusted_roots) {
  auto it = trusted_roots.find(cert.org_id);
  if (it == trusted_roots.end()) return {false, "unknown-org"};
  if (cert.issuer_org_id != cert.org_id) return {false, "issuer-mismatch"};
  bool ok = false;
  try {
    ok = verify(it->second, cert.canonical_body(), cert.signature);
  } catch (const CryptoError&) {
    return {false, "bad-signature"};
  }
  if (!ok) return {false, "bad-signature"};
  return {true, {}};
}

// One organization's membership authority. Issues member certificates under
// the org root; issuance serializes on the serial set.
class RootAuthority {
 public:
  RootAuthority(std::string org_id, std::string network_id, KeyPair root_keys)
      : org_id_(std::move(org_id)),
        network_id_(std::move(network_id)),
        root_(std::move(root_keys)),
        mutex_(std::make_unique<std::mutex>()) {}

  static RootAuthority create(const std::string& org_id, const std::string& network_id,
                              std::optional<std::uint64_t> seed = std::nullopt) {
    KeyPair kp = seed ? KeyPair::from_seed(*seed) : KeyPair::generate();
    return RootAuthority(org_id, network_id, std::move(kp));
  }

  const std::string& org_id() const { return org_id_; }
  const std::string& network_id() const { return network_id_; }
  const KeyPair& root_keypair() const { return root_; }
  const Bytes& root_public_key() const { return root_.public_key; }
  const Bytes& root_enc_public_key() const { return root_.enc_public_key; }

  Certificate issue(const std::string& subject_id, SubjectKind kind, const KeyPair& subject_keys) {
    std::lock_guard lock(*mutex_);
    if (!issued_subjects_.insert(subject_id).second)
      throw IdentityError("duplicate subject '" + subject_id + "' in org '" + org_id_ + "'");
    Certificate cert;
    cert.subject_id = subject_id;
    cert.subject_kind = kind;
    cert.org_id = org_id_;
    cert.network_id = network_id_;
    cert.public_key = subject_keys.public_key;
    cert.enc_public_key = subject_keys.enc_public_key;
    cert.issuer_org_id = org_id_;
    cert.serial = next_serial_++;
    cert.signature = sign(root_.private_key, cert.canonical_body());
    issued_serials_.insert(cert.serial);
    return cert;
  }

  // Self-signed anchor; validates under its own public key.
  Certificate root_certificate() const {
    Certificate cert;
    cert.subject_id = org_id_ + "-root";
    cert.subject_kind = SubjectKind::peer;
    cert.org_id = org_id_;
    cert.network_id = network_id_;
    cert.public_key = root_.public_key;
    cert.enc_public_key = root_.enc_public_key;
    cert.issuer_org_id = org_id_;
    cert.serial = 0;
    cert.signature = sign(root_.private_key, cert.canonical_body());
    return cert;
  }

  const std::set<std::uint64_t>& issued_serials() const { return issued_serials_; }

 private:
  std::string org_id_;
  std::string network_id_;
  KeyPair root_;
  std::set<std::string> issued_subjects_;
  std::set<std::uint64_t> issued_serials_;
  std::uint64_t next_serial_ = 1;
  std::unique_ptr<std::mutex> mutex_;
};

}  // namespace crosslink
