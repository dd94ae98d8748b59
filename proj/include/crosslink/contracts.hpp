// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.
//
// The two interoperation system contracts, written against the contract
// runtime in ledger.hpp:
//
//  * ECC   - exposure control: access rules for foreign requestors, plus
//            result encryption toward a requestor's key.
//  * CMDAC - configuration management and data acceptance combined: foreign
//            network configs, verification policies, and proof validation
//            with nonce replay tracking.
//
// World-state key prefixes are frozen: "rule/", "config/", "policy/",
// "nonce/".

#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "crosslink/bytes.hpp"
#include "crosslink/codec.hpp"
#include "crosslink/crypto.hpp"
#include "crosslink/identity.hpp"
#include "crosslink/ledger.hpp"
#include "crosslink/wire.hpp"

namespace crosslink {

inline constexpr const char* ecc_contract_name = "ECC";
inline constexpr const char* cmdac_contract_name = "CMDAC";

// Source-side exposure rule: requestors from <network_id, org_id> may call
// <contract_name, function_name>. Exact match only.
struct AccessRule {
  std::string network_id;
  std::string org_id;
  std::string contract_name;
  std::string function_name;

  Bytes encode() const {
    Writer w;
    w.field_string(1, network_id);
    w.field_string(2, org_id);
    w.field_string(3, contract_name);
    w.field_string(4, function_name);
    return w.take();
  }

  static AccessRule decode(ByteView data) {
    Reader r(data);
    AccessRule rule;
    rule.network_id = r.string(1);
    rule.org_id = r.string(2);
    rule.contract_name = r.string(3);
    rule.function_name = r.string(4);
    r.finish();
    return rule;
  }

  static std::string storage_key(const std::string& network_id, const std::string& org_id,
                                 const std::string& contract_name,
                                 const std::string& function_name) {
    return "rule/" + network_id + "/" + org_id + "/" + contract_name + "/" + function_name;
  }

  std::string storage_key() const {
    return storage_key(network_id, org_id, contract_name, function_name);
  }
};

struct OrgKeys {
  std::string org_id;
  Bytes root_public_key;
  Bytes root_enc_public_key;

  Bytes encode() const {
    Writer w;
    w.field_string(1, org_id);
    w.field_bytes(2, root_public_key);
    w.field_bytes(3, root_enc_public_key);
    return w.take();
  }

  static OrgKeys decode(ByteView data) {
    Reader r(data);
    OrgKeys o;
    o.org_id = r.string(1);
    o.root_public_key = copy_bytes(r.fixed(2, sign_public_key_bytes));
    o.root_enc_public_key = copy_bytes(r.fixed(3, enc_key_bytes));
    r.finish();
    return o;
  }
};

struct ForeignNetworkConfig {
  std::string network_id;
  std::vector<OrgKeys> orgs;

  Bytes encode() const {
    Writer w;
    w.field_string(1, network_id);
    for (const auto& org : orgs) w.field_bytes(2, org.encode());
    return w.take();
  }

  static ForeignNetworkConfig decode(ByteView data) {
    Reader r(data);
    ForeignNetworkConfig c;
    c.network_id = r.string(1);
    for (auto v : r.repeated(2)) c.orgs.push_back(OrgKeys::decode(v));
    r.finish();
    return c;
  }

  std::map<std::string, Bytes> trusted_roots() const {
    std::map<std::string, Bytes> roots;
    for (const auto& org : orgs) roots[org.org_id] = org.root_public_key;
    return roots;
  }

  // Convenience for building a config from a live simulated network.
  static ForeignNetworkConfig of(Network& net) {
    ForeignNetworkConfig c;
    c.network_id = net.network_id();
    for (const auto& org_id : net.org_ids()) {
      auto& authority = net.authority(org_id);
      c.orgs.push_back(OrgKeys{org_id, authority.root_public_key(),
                               authority.root_enc_public_key()});
    }
    return c;
  }
};

struct ProofVerdict {
  bool valid = false;
  std::string reason;  // one of the clause reason codes when invalid
  explicit operator bool() const { return valid; }
};

// Clauses (a)-(g) of proof acceptance, shared between the CMDAC and the
// client-side pre-flight. The caller supplies the recorded config and
// policy; nonce replay (clause h) is ledger state and stays in the CMDAC.
//
//   a. each signature verifies over the plaintext metadata     -> "signature"
//   b. each signer cert chain-validates to the recorded root   -> "chain"
//   c. cert subject matches the metadata identity fields       -> "identity-mismatch"
//   d. every metadata.result equals the supplied result        -> "result-mismatch"
//   e. every metadata.request_digest equals the supplied one   -> "digest-mismatch"
//   f. every metadata.nonce equals the supplied nonce          -> "nonce-mismatch"
//   g. >=1 distinct peer per required org                      -> "policy-unsatisfied"
inline ProofVerdict check_proof_clauses(const VerificationPolicy& policy,
                                        const ForeignNetworkConfig& config,
                                        const Digest& expected_request_digest,
                                        const Nonce& expected_nonce, ByteView expected_result,
                                        const Proof& proof) {
  auto roots = config.trusted_roots();
  for (const auto& entry : proof) {
    const auto& meta = entry.metadata;
    if (!verify(entry.signer_cert.public_key, meta.canonical_bytes(), entry.signature))
      return {false, "signature"};
    if (!validate_chain(entry.signer_cert, roots)) return {false, "chain"};
    if (entry.signer_cert.subject_kind != SubjectKind::peer ||
        entry.signer_cert.subject_id != meta.peer_id ||
        entry.signer_cert.org_id != meta.org_id ||
        entry.signer_cert.network_id != meta.network_id ||
        meta.network_id != policy.network_id)
      return {false, "identity-mismatch"};
    if (meta.result.size() != expected_result.size() ||
        !std::equal(meta.result.begin(), meta.result.end(), expected_result.begin()))
      return {false, "result-mismatch"};
    if (meta.request_digest != expected_request_digest) return {false, "digest-mismatch"};
    if (meta.nonce != expected_nonce) return {false, "nonce-mismatch"};
  }
  for (const auto& org : policy.required_orgs) {
    std::set<std::string> peers;
    for (const auto& entry : proof)
      if (entry.metadata.org_id == org) peers.insert(entry.metadata.peer_id);
    if (peers.empty()) return {false, "policy-unsatisfied"};
  }
  return {true, {}};
}

struct AccessVerdict {
  bool allowed = false;
  std::string reason;  // "unknown-network", "bad-certificate", "no-rule"
  explicit operator bool() const { return allowed; }

  Bytes encode() const { return to_bytes(allowed ? "allow" : "deny:" + reason); }

  static AccessVerdict decode(ByteView data) {
    std::string s = to_string(data);
    if (s == "allow") return {true, {}};
    if (s.rfind("deny:", 0) == 0) return {false, s.substr(5)};
    throw CodecError("bad access verdict");
  }
};

inline Bytes encode_proof_verdict(const ProofVerdict& v) {
  return to_bytes(v.valid ? "valid" : "invalid:" + v.reason);
}

inline ProofVerdict decode_proof_verdict(ByteView data) {
  std::string s = to_string(data);
  if (s == "valid") return {true, {}};
  if (s.rfind("invalid:", 0) == 0) return {false, s.substr(8)};
  throw CodecError("bad proof verdict");
}

namespace detail {

inline void require_args(const std::vector<Bytes>& args, std::size_t n, const char* fn) {
  if (args.size() != n)
    throw ContractError(std::string(fn) + ": expected " + std::to_string(n) + " args, got " +
                        std::to_string(args.size()));
}

inline void require_rule_field(const std::string& value, const char* field) {
  if (value.empty()) throw ContractError(std::string("rule field '") + field + "' is empty");
  if (value.find('/') != std::string::npos)
    throw ContractError(std::string("rule field '") + field + "' contains '/'");
}

inline ForeignNetworkConfig load_config(ContractContext& ctx, const std::string& network_id) {
  Bytes raw = ctx.invoke(cmdac_contract_name, "get_config", {to_bytes(network_id)});
  return ForeignNetworkConfig::decode(raw);
}

inline AccessVerdict evaluate_access(ContractContext& ctx, const Certificate& requestor,
                                     const std::string& contract_name,
                                     const std::string& function_name) {
  ForeignNetworkConfig config;
  try {
    config = load_config(ctx, requestor.network_id);
  } catch (const ContractError&) {
    return {false, "unknown-network"};
  }
  if (!validate_chain(requestor, config.trusted_roots())) return {false, "bad-certificate"};
  auto key = AccessRule::storage_key(requestor.network_id, requestor.org_id, contract_name,
                                     function_name);
  if (!ctx.get(key)) return {false, "no-rule"};
  return {true, {}};
}

}  // namespace detail

// Exposure Control contract. Functions:
//   set_rule(rule)                        transaction
//   check_access(cert, contract, fn)      query or invoke
//   encrypt_for(cert, payload)            query only (fresh ephemeral keys)
inline ContractFn ecc_contract() {
  return [](ContractContext& ctx, const std::string& fn, const std::vector<Bytes>& args) -> Bytes {
    if (fn == "set_rule") {
      detail::require_args(args, 1, "set_rule");
      AccessRule rule;
      try {
        rule = AccessRule::decode(args[0]);
      } catch (const CodecError& e) {
        throw ContractError(std::string("set_rule: ") + e.what());
      }
      detail::require_rule_field(rule.network_id, "network_id");
      detail::require_rule_field(rule.org_id, "org_id");
      detail::require_rule_field(rule.contract_name, "contract_name");
      detail::require_rule_field(rule.function_name, "function_name");
      ctx.put(rule.storage_key(), rule.encode());
      return {};
    }
    if (fn == "check_access") {
      detail::require_args(args, 3, "check_access");
      Certificate requestor;
      try {
        requestor = Certificate::decode(args[0]);
      } catch (const CodecError&) {
        return AccessVerdict{false, "bad-certificate"}.encode();
      }
      return detail::evaluate_access(ctx, requestor, to_string(args[1]), to_string(args[2]))
          .encode();
    }
    if (fn == "encrypt_for") {
      detail::require_args(args, 2, "encrypt_for");
      if (!ctx.is_query())
        throw ContractError("encrypt_for is nondeterministic and must run as a query");
      Certificate requestor;
      try {
        requestor = Certificate::decode(args[0]);
      } catch (const CodecError&) {
        throw ContractError("encrypt_for: bad certificate");
      }
      ForeignNetworkConfig config;
      try {
        config = detail::load_config(ctx, requestor.network_id);
      } catch (const ContractError&) {
        throw ContractError("encrypt_for: unknown network");
      }
      if (!validate_chain(requestor, config.trusted_roots()))
        throw ContractError("encrypt_for: bad certificate");
      return hybrid_encrypt(requestor.enc_public_key, args[1]).encode();
    }
    throw ContractError("ECC: unknown function '" + fn + "'");
  };
}

// Configuration Management & Data Acceptance contract. Functions:
//   record_config(config)       transaction
//   get_config(network_id)      query or invoke
//   record_policy(policy)       transaction
//   get_policy(policy_id)       query or invoke
//   validate_proof(policy_id, request_digest, nonce, result, proof)
//       query for a dry run; inside a transaction a valid proof consumes
//       the nonce.
inline ContractFn cmdac_contract() {
  return [](ContractContext& ctx, const std::string& fn, const std::vector<Bytes>& args) -> Bytes {
    if (fn == "record_config") {
      detail::require_args(args, 1, "record_config");
      ForeignNetworkConfig config;
      try {
        config = ForeignNetworkConfig::decode(args[0]);
      } catch (const CodecError& e) {
        throw ContractError(std::string("record_config: ") + e.what());
      }
      if (config.network_id.empty()) throw ContractError("record_config: empty network id");
      if (config.orgs.empty()) throw ContractError("record_config: no orgs");
      for (const auto& org : config.orgs)
        if (org.org_id.empty()) throw ContractError("record_config: empty org id");
      ctx.put("config/" + config.network_id, config.encode());
      return {};
    }
    if (fn == "get_config") {
      detail::require_args(args, 1, "get_config");
      auto value = ctx.get("config/" + to_string(args[0]));
      if (!value) throw ContractError("unknown network '" + to_string(args[0]) + "'");
      return *value;
    }
    if (fn == "record_policy") {
      detail::require_args(args, 1, "record_policy");
      VerificationPolicy policy;
      try {
        policy = VerificationPolicy::decode(args[0]);
      } catch (const CodecError& e) {
        throw ContractError(std::string("record_policy: ") + e.what());
      }
      if (policy.policy_id.empty()) throw ContractError("record_policy: empty policy id");
      if (policy.required_orgs.empty())
        throw ContractError("record_policy: policy must require at least one org");
      auto recorded = ctx.get("config/" + policy.network_id);
      if (!recorded)
        throw ContractError("record_policy: no config recorded for '" + policy.network_id + "'");
      auto config = ForeignNetworkConfig::decode(*recorded);
      auto roots = config.trusted_roots();
      for (const auto& org : policy.required_orgs)
        if (!roots.count(org))
          throw ContractError("record_policy: org '" + org + "' not in recorded config");
      ctx.put("policy/" + policy.policy_id, policy.encode());
      return {};
    }
    if (fn == "get_policy") {
      detail::require_args(args, 1, "get_policy");
      auto value = ctx.get("policy/" + to_string(args[0]));
      if (!value) throw ContractError("unknown policy '" + to_string(args[0]) + "'");
      return *value;
    }
    if (fn == "validate_proof") {
      detail::require_args(args, 5, "validate_proof");
      auto policy_raw = ctx.get("policy/" + to_string(args[0]));
      if (!policy_raw) throw ContractError("unknown policy '" + to_string(args[0]) + "'");
      auto policy = VerificationPolicy::decode(*policy_raw);
      auto config_raw = ctx.get("config/" + policy.network_id);
      if (!config_raw)
        throw ContractError("no config recorded for '" + policy.network_id + "'");
      auto config = ForeignNetworkConfig::decode(*config_raw);
      if (args[1].size() != 32) throw ContractError("validate_proof: bad request digest");
      if (args[2].size() != 16) throw ContractError("validate_proof: bad nonce");
      Digest request_digest = to_array<32>(args[1]);
      Nonce nonce = to_array<16>(args[2]);
      Proof proof;
      try {
        proof = decode_proof(args[4]);
      } catch (const CodecError& e) {
        throw ContractError(std::string("validate_proof: malformed proof: ") + e.what());
      }
      ProofVerdict verdict =
          check_proof_clauses(policy, config, request_digest, nonce, args[3], proof);
      if (!verdict) return encode_proof_verdict(verdict);
      std::string nonce_key = "nonce/" + crosslink::to_hex(ByteView(nonce.data(), nonce.size()));
      if (ctx.get(nonce_key)) return encode_proof_verdict({false, "nonce-replayed"});
      if (!ctx.is_query()) ctx.put(nonce_key, to_bytes("1"));
      return encode_proof_verdict({true, {}});
    }
    throw ContractError("CMDAC: unknown function '" + fn + "'");
  };
}

}  // namespace crosslink
