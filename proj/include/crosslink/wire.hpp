// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.
//
// Network-neutral message schema shared by relays and clients. Byte layout
// frozen in docs/wire.md; frames are length-prefixed with a one-byte type
// tag. Attestation metadata and results stay encrypted inside frames, so a
// relay can parse everything it forwards without holding any key.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "crosslink/bytes.hpp"
#include "crosslink/codec.hpp"
#include "crosslink/crypto.hpp"
#include "crosslink/identity.hpp"

namespace crosslink {

inline constexpr std::size_t max_frame_bytes = 16 * 1024 * 1024;

using RequestId = std::array<std::uint8_t, 16>;
using Nonce = std::array<std::uint8_t, 16>;

struct VerificationPolicy {
  std::string policy_id;
  std::string network_id;  // the foreign source network
  std::vector<std::string> required_orgs;
  std::uint8_t version = 1;

  Bytes canonical_bytes() const { return encode(); }

  Bytes encode() const {
    Writer w;
    w.field_string(1, policy_id);
    w.field_string(2, network_id);
    for (const auto& org : required_orgs) w.field_string(3, org);
    w.field_u8(4, version);
    return w.take();
  }

  static VerificationPolicy decode(ByteView data) {
    Reader r(data);
    VerificationPolicy p;
    p.policy_id = r.string(1);
    p.network_id = r.string(2);
    for (auto v : r.repeated(3)) p.required_orgs.push_back(to_string(v));
    p.version = r.u8(4);
    r.finish();
    return p;
  }
};

// Plaintext form of what a source peer signs; encrypted for the requestor
// before it leaves the peer.
struct AttestationMetadata {
  std::string network_id;
  std::string peer_id;
  std::string org_id;
  Digest request_digest{};
  Nonce nonce{};
  Bytes result;

  Bytes canonical_bytes() const {
    Writer w;
    w.field_string(1, network_id);
    w.field_string(2, peer_id);
    w.field_string(3, org_id);
    w.field_bytes(4, digest_view(request_digest));
    w.field_bytes(5, ByteView(nonce.data(), nonce.size()));
    w.field_bytes(6, result);
    return w.take();
  }

  static AttestationMetadata decode(ByteView data) {
    Reader r(data);
    AttestationMetadata m;
    m.network_id = r.string(1);
    m.peer_id = r.string(2);
    m.org_id = r.string(3);
    m.request_digest = to_array<32>(r.fixed(4, 32));
    m.nonce = to_array<16>(r.fixed(5, 16));
    m.result = copy_bytes(r.bytes(6));
    r.finish();
    return m;
  }
};

struct Attestation {
  Certificate signer_cert;
  HybridCiphertext encrypted_metadata;
  Bytes signature;  // over the plaintext metadata's canonical bytes

  Bytes encode() const {
    Writer w;
    w.field_bytes(1, signer_cert.encode());
    w.field_bytes(2, encrypted_metadata.encode());
    w.field_bytes(3, signature);
    return w.take();
  }

  static Attestation decode(ByteView data) {
    Reader r(data);
    Attestation a;
    a.signer_cert = Certificate::decode(r.bytes(1));
    a.encrypted_metadata = HybridCiphertext::decode(r.bytes(2));
    a.signature = copy_bytes(r.fixed(3, signature_bytes));
    r.finish();
    return a;
  }
};

// Decrypted attestation as submitted to the destination ledger.
struct ProofEntry {
  Certificate signer_cert;
  AttestationMetadata metadata;
  Bytes signature;

  Bytes encode() const {
    Writer w;
    w.field_bytes(1, signer_cert.encode());
    w.field_bytes(2, metadata.canonical_bytes());
    w.field_bytes(3, signature);
    return w.take();
  }

  static ProofEntry decode(ByteView data) {
    Reader r(data);
    ProofEntry e;
    e.signer_cert = Certificate::decode(r.bytes(1));
    e.metadata = AttestationMetadata::decode(r.bytes(2));
    e.signature = copy_bytes(r.fixed(3, signature_bytes));
    r.finish();
    return e;
  }
};

using Proof = std::vector<ProofEntry>;

inline Bytes encode_proof(const Proof& proof) {
  Writer w;
  for (const auto& entry : proof) w.field_bytes(1, entry.encode());
  return w.take();
}

inline Proof decode_proof(ByteView data) {
  Reader r(data);
  Proof proof;
  for (auto v : r.repeated(1)) proof.push_back(ProofEntry::decode(v));
  r.finish();
  return proof;
}

struct QueryRequest {
  RequestId request_id{};
  std::string dest_network_id;
  std::string ledger_id;
  std::string contract_name;
  std::string function_name;
  std::vector<Bytes> args;
  VerificationPolicy verification_policy;
  Certificate requestor_cert;
  Nonce nonce{};

  Bytes encode() const {
    Writer w;
    w.field_bytes(1, ByteView(request_id.data(), request_id.size()));
    w.field_string(2, dest_network_id);
    w.field_string(3, ledger_id);
    w.field_string(4, contract_name);
    w.field_string(5, function_name);
    for (const auto& a : args) w.field_bytes(6, a);
    w.field_bytes(7, verification_policy.encode());
    w.field_bytes(8, requestor_cert.encode());
    w.field_bytes(9, ByteView(nonce.data(), nonce.size()));
    return w.take();
  }

  static QueryRequest decode(ByteView data) {
    Reader r(data);
    QueryRequest q;
    q.request_id = to_array<16>(r.fixed(1, 16));
    q.dest_network_id = r.string(2);
    q.ledger_id = r.string(3);
    q.contract_name = r.string(4);
    q.function_name = r.string(5);
    for (auto v : r.repeated(6)) q.args.push_back(copy_bytes(v));
    q.verification_policy = VerificationPolicy::decode(r.bytes(7));
    q.requestor_cert = Certificate::decode(r.bytes(8));
    q.nonce = to_array<16>(r.fixed(9, 16));
    r.finish();
    return q;
  }
};

// Binds attestations to what was executed: addressing, function, arguments
// and nonce. Requestor identity and policy are attested through the
// acceptance clauses instead, so two requests differing only in request_id
// or requestor digest identically.
inline Digest request_digest(const std::string& dest_network_id, const std::string& ledger_id,
                             const std::string& contract_name, const std::string& function_name,
                             const std::vector<Bytes>& args, const Nonce& nonce) {
  Writer w;
  w.field_string(1, dest_network_id);
  w.field_string(2, ledger_id);
  w.field_string(3, contract_name);
  w.field_string(4, function_name);
  for (const auto& a : args) w.field_bytes(5, a);
  w.field_bytes(6, ByteView(nonce.data(), nonce.size()));
  return sha256(w.take());
}

inline Digest request_digest(const QueryRequest& q) {
  return request_digest(q.dest_network_id, q.ledger_id, q.contract_name, q.function_name, q.args,
                        q.nonce);
}

enum class ResponseStatus : std::uint8_t { ok = 1, denied = 2, error = 3 };

inline const char* to_label(ResponseStatus s) {
  switch (s) {
    case ResponseStatus::ok: return "ok";
    case ResponseStatus::denied: return "denied";
    case ResponseStatus::error: return "error";
  }
  return "?";
}

struct QueryResponse {
  RequestId request_id{};
  ResponseStatus status = ResponseStatus::error;
  std::string reason;  // empty iff ok
  std::optional<HybridCiphertext> encrypted_result;
  std::vector<Attestation> attestations;

  static QueryResponse failure(const RequestId& id, ResponseStatus status, std::string reason) {
    QueryResponse r;
    r.request_id = id;
    r.status = status;
    r.reason = std::move(reason);
    return r;
  }

  Bytes encode() const {
    Writer w;
    w.field_bytes(1, ByteView(request_id.data(), request_id.size()));
    w.field_u8(2, static_cast<std::uint8_t>(status));
    w.field_string_opt(3, reason);
    if (encrypted_result) w.field_bytes(4, encrypted_result->encode());
    for (const auto& a : attestations) w.field_bytes(5, a.encode());
    return w.take();
  }

  static QueryResponse decode(ByteView data) {
    Reader r(data);
    QueryResponse q;
    q.request_id = to_array<16>(r.fixed(1, 16));
    std::uint8_t status = r.u8(2);
    if (status < 1 || status > 3) throw CodecError("bad response status");
    q.status = static_cast<ResponseStatus>(status);
    q.reason = r.string_opt(3);
    if (r.has(4)) q.encrypted_result = HybridCiphertext::decode(r.bytes(4));
    for (auto v : r.repeated(5)) q.attestations.push_back(Attestation::decode(v));
    r.finish();
    if (q.status == ResponseStatus::ok) {
      if (!q.reason.empty()) throw CodecError("ok response with reason");
      if (!q.encrypted_result) throw CodecError("ok response without result");
      if (q.attestations.empty()) throw CodecError("ok response without attestations");
    } else {
      if (q.reason.empty()) throw CodecError("failure response without reason");
      if (q.encrypted_result || !q.attestations.empty())
        throw CodecError("failure response with payload");
    }
    return q;
  }
};

enum class FrameType : std::uint8_t { query_request = 1, query_response = 2 };

inline Bytes encode_frame(FrameType type, ByteView body) {
  std::size_t total = body.size() + 1;
  if (total > max_frame_bytes) throw CodecError("frame exceeds 16 MiB");
  Bytes out;
  out.reserve(4 + total);
  detail::put_u32be(out, static_cast<std::uint32_t>(total));
  out.push_back(static_cast<std::uint8_t>(type));
  append(out, body);
  return out;
}

inline Bytes encode_frame(const QueryRequest& q) {
  return encode_frame(FrameType::query_request, q.encode());
}

inline Bytes encode_frame(const QueryResponse& q) {
  return encode_frame(FrameType::query_response, q.encode());
}

using WireMessage = std::variant<QueryRequest, QueryResponse>;

// Decodes one complete frame; the buffer must contain exactly the frame.
inline WireMessage decode_frame(ByteView frame) {
  if (frame.size() < 5) throw CodecError("truncated frame");
  std::uint32_t len = detail::get_u32be(frame.subspan(0, 4));
  if (len > max_frame_bytes) throw CodecError("frame exceeds 16 MiB");
  if (len < 1) throw CodecError("empty frame");
  if (frame.size() != 4 + static_cast<std::size_t>(len)) throw CodecError("frame length mismatch");
  std::uint8_t type = frame[4];
  ByteView body = frame.subspan(5);
  switch (type) {
    case static_cast<std::uint8_t>(FrameType::query_request):
      return QueryRequest::decode(body);
    case static_cast<std::uint8_t>(FrameType::query_response):
      return QueryResponse::decode(body);
    default:
      throw CodecError("unknown frame type " + std::to_string(type));
  }
}

}  // namespace crosslink
