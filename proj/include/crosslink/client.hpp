// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.
//
// Destination-side application support: identity bootstrap, remote query
// through the local relay, client-side decryption and pre-flight proof
// verification, and assembly of the dependent local transaction. Pre-flight
// runs the same acceptance clauses as the CMDAC but is advisory; the
// committing contract stays authoritative.

#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "crosslink/bytes.hpp"
#include "crosslink/contracts.hpp"
#include "crosslink/crypto.hpp"
#include "crosslink/identity.hpp"
#include "crosslink/net.hpp"
#include "crosslink/wire.hpp"

namespace crosslink {

class ClientError : public std::runtime_error {
 public:
  ClientError(std::string reason, const std::string& what)
      : std::runtime_error("client: " + what), reason_(std::move(reason)) {}
  const std::string& reason() const { return reason_; }

 private:
  std::string reason_;
};

struct ClientIdentity {
  KeyPair keys;
  Certificate certificate;

  static ClientIdentity bootstrap(RootAuthority& authority, const std::string& subject_id,
                                  std::optional<std::uint64_t> seed = std::nullopt) {
    ClientIdentity id;
    id.keys = seed ? KeyPair::from_seed(*seed) : KeyPair::generate();
    id.certificate = authority.issue(subject_id, SubjectKind::client, id.keys);
    return id;
  }
};

struct RemoteTarget {
  std::string dest_network_id;
  std::string ledger_id;
  std::string contract_name;
  std::string function_name;
  std::vector<Bytes> args;
};

struct RemoteQueryOptions {
  std::chrono::milliseconds deadline{10'000};
  int attempts = 1;  // client-level retry across redundant relays
  Rng rng = Rng::system();
};

struct VerifiedRemoteData {
  Bytes result;
  Proof proof;
  Digest request_digest{};
  Nonce nonce{};
};

inline QueryRequest make_query_request(const ClientIdentity& identity, const RemoteTarget& target,
                                       const VerificationPolicy& policy, Rng& rng) {
  QueryRequest request;
  request.request_id = rng.array<16>();
  request.dest_network_id = target.dest_network_id;
  request.ledger_id = target.ledger_id;
  request.contract_name = target.contract_name;
  request.function_name = target.function_name;
  request.args = target.args;
  request.verification_policy = policy;
  request.requestor_cert = identity.certificate;
  request.nonce = rng.array<16>();
  return request;
}

// Decrypts and pre-flight-verifies a response against the request it answers.
// `trusted_config` is the source network's configuration as recorded on the
// client's own ledger. Throws ClientError with the failing clause as reason.
inline VerifiedRemoteData process_response(const QueryRequest& request,
                                           const QueryResponse& response,
                                           const ClientIdentity& identity,
                                           const VerificationPolicy& policy,
                                           const ForeignNetworkConfig& trusted_config) {
  if (response.request_id != request.request_id)
    throw ClientError("response-mismatch", "response does not answer this request");
  if (response.status != ResponseStatus::ok)
    throw ClientError(std::string(to_label(response.status)) + ":" + response.reason,
                      "relay returned " + std::string(to_label(response.status)) + " (" +
                          response.reason + ")");
  VerifiedRemoteData verified;
  try {
    verified.result = hybrid_decrypt(identity.keys.enc_private_key, *response.encrypted_result);
    for (const auto& att : response.attestations) {
      ProofEntry entry;
      entry.signer_cert = att.signer_cert;
      entry.signature = att.signature;
      Bytes plaintext = hybrid_decrypt(identity.keys.enc_private_key, att.encrypted_metadata);
      entry.metadata = AttestationMetadata::decode(plaintext);
      verified.proof.push_back(std::move(entry));
    }
  } catch (const CryptoError&) {
    throw ClientError("proof-tamper", "decryption failed; response was altered in transit");
  } catch (const CodecError&) {
    throw ClientError("proof-tamper", "decrypted metadata is malformed");
  }
  verified.request_digest = request_digest(request);
  verified.nonce = request.nonce;
  ProofVerdict verdict = check_proof_clauses(policy, trusted_config, verified.request_digest,
                                             verified.nonce, verified.result, verified.proof);
  if (!verdict) throw ClientError(verdict.reason, "pre-flight rejected proof: " + verdict.reason);
  return verified;
}

// One query round trip against a relay address. Retries (fresh request id
// and nonce each attempt) only on transport failures and relay-reported
// timeout/unreachable, so redundant source relays can be tried in turn.
inline VerifiedRemoteData remote_query(const ClientIdentity& identity,
                                       const std::string& local_relay_address,
                                       const RemoteTarget& target,
                                       const VerificationPolicy& policy,
                                       const ForeignNetworkConfig& trusted_config,
                                       RemoteQueryOptions options = {}) {
  if (options.attempts < 1) options.attempts = 1;
  std::string last_reason = "unreachable";
  std::string last_what = "no attempt made";
  for (int attempt = 0; attempt < options.attempts; ++attempt) {
    QueryRequest request = make_query_request(identity, target, policy, options.rng);
    try {
      Socket sock = connect_to(parse_endpoint(local_relay_address), options.deadline);
      write_all(sock, encode_frame(request), options.deadline);
      Bytes reply = read_frame(sock, options.deadline);
      if (reply.empty()) throw NetError(NetError::Kind::closed, "relay closed the connection");
      WireMessage message = decode_frame(reply);
      auto* response = std::get_if<QueryResponse>(&message);
      if (!response) throw ClientError("bad-response", "relay sent a non-response frame");
      return process_response(request, *response, identity, policy, trusted_config);
    } catch (const NetError& e) {
      last_reason = e.kind() == NetError::Kind::timeout ? "timeout" : "unreachable";
      last_what = e.what();
    } catch (const CodecError& e) {
      last_reason = "bad-response";
      last_what = e.what();
    } catch (const ClientError& e) {
      if (e.reason() != "error:timeout" && e.reason() != "error:unreachable") throw;
      last_reason = e.reason();
      last_what = e.what();
    }
  }
  throw ClientError(last_reason, "all " + std::to_string(options.attempts) +
                                     " attempts failed; last: " + last_what);
}

struct TransactionInputs {
  std::string contract_name;
  std::string function_name;
  std::vector<Bytes> args;
};

// Argument vector for the destination transaction:
// extra_args ++ [result, proof, request_digest, nonce].
inline TransactionInputs build_dependent_transaction(const VerifiedRemoteData& verified,
                                                     const std::string& contract_name,
                                                     const std::string& function_name,
                                                     const std::vector<Bytes>& extra_args) {
  TransactionInputs tx;
  tx.contract_name = contract_name;
  tx.function_name = function_name;
  tx.args = extra_args;
  tx.args.push_back(verified.result);
  tx.args.push_back(encode_proof(verified.proof));
  tx.args.push_back(copy_bytes(digest_view(verified.request_digest)));
  tx.args.push_back(copy_bytes(ByteView(verified.nonce.data(), verified.nonce.size())));
  std::size_t total = 0;
  for (const auto& a : tx.args) total += a.size() + 5;
  if (total > max_frame_bytes)
    throw ClientError("oversize", "transaction arguments exceed the frame limit");
  return tx;
}

}  // namespace crosslink
