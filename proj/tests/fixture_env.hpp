// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.
//
// Miniature interoperation environment for module tests: a two-org source
// network exposing one data contract behind the system contracts, a one-org
// destination network whose client performs cross-network queries, and
// optional relays wired through a temp-file registry.

#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "crosslink/client.hpp"
#include "crosslink/contracts.hpp"
#include "crosslink/ledger.hpp"
#include "crosslink/relay.hpp"

namespace crosslink::test {

inline constexpr const char* src_net_id = "src-net";
inline constexpr const char* dst_net_id = "dst-net";
inline constexpr const char* alpha_org = "alpha-org";
inline constexpr const char* beta_org = "beta-org";
inline constexpr const char* client_org = "client-org";
inline constexpr const char* data_contract = "DataCC";

// Simple exposed data contract: Put commits, Get serves foreign callers
// through exposure control.
inline ContractFn data_cc() {
  return [](ContractContext& ctx, const std::string& fn, const std::vector<Bytes>& args) -> Bytes {
    if (fn == "Put") {
      if (args.size() != 2) throw ContractError("Put: expected 2 args");
      ctx.put("data/" + to_string(args[0]), args[1]);
      return {};
    }
    if (fn == "Get") {
      if (args.size() != 1) throw ContractError("Get: expected 1 arg");
      if (ctx.caller().network_id != ctx.network_id()) {
        auto verdict = AccessVerdict::decode(
            ctx.invoke(ecc_contract_name, "check_access",
                       {ctx.caller().encode(), to_bytes(data_contract), to_bytes("Get")}));
        if (!verdict) throw ContractError("access-denied:" + verdict.reason);
      }
      auto value = ctx.get("data/" + to_string(args[0]));
      if (!value) throw ContractError("no data under '" + to_string(args[0]) + "'");
      return *value;
    }
    throw ContractError("DataCC: unknown function '" + fn + "'");
  };
}

struct MiniEnv {
  std::unique_ptr<Network> source;
  std::unique_ptr<Network> dest;
  std::unique_ptr<ClientIdentity> client;
  Certificate source_admin;  // local client on the source, for setup commits
  ForeignNetworkConfig source_config;
  ForeignNetworkConfig dest_config;
  VerificationPolicy policy;
  Rng rng = Rng::seeded(991);

  std::string outdir;
  std::string registry_path;
  std::unique_ptr<Relay> src_relay;
  std::unique_ptr<Relay> dst_relay;
  std::unique_ptr<Relay> censor_relay;

  ~MiniEnv() {
    if (src_relay) src_relay->stop();
    if (dst_relay) dst_relay->stop();
    if (censor_relay) censor_relay->stop();
    if (!outdir.empty()) {
      std::error_code ec;
      std::filesystem::remove_all(outdir, ec);
    }
  }

  Nonce nonce() { return rng.array<16>(); }

  RemoteTarget get_target(const std::string& key) const {
    RemoteTarget target;
    target.dest_network_id = src_net_id;
    target.ledger_id = src_net_id;
    target.contract_name = data_contract;
    target.function_name = "Get";
    target.args = {to_bytes(key)};
    return target;
  }
};

inline std::unique_ptr<MiniEnv> make_mini_env(std::uint64_t seed = 11) {
  auto env = std::make_unique<MiniEnv>();
  env->rng = Rng::seeded(seed * 7919 + 1);
  env->source = Network::create(src_net_id, {alpha_org, beta_org}, 2, seed);
  env->dest = Network::create(dst_net_id, {client_org}, 1, seed + 1);

  EndorsementPolicy src_policy{{alpha_org, beta_org}};
  env->source->deploy_contract(data_contract, data_cc(), src_policy);
  env->source->deploy_contract(ecc_contract_name, ecc_contract(), src_policy);
  env->source->deploy_contract(cmdac_contract_name, cmdac_contract(), src_policy);

  EndorsementPolicy dst_policy{{client_org}};
  env->dest->deploy_contract(ecc_contract_name, ecc_contract(), dst_policy);
  env->dest->deploy_contract(cmdac_contract_name, cmdac_contract(), dst_policy);

  env->client = std::make_unique<ClientIdentity>(
      ClientIdentity::bootstrap(env->dest->authority(client_org), "dst-client", seed + 2));
  env->source_admin = env->source->authority(alpha_org)
                          .issue("src-admin", SubjectKind::client, KeyPair::from_seed(seed + 3));

  env->source_config = ForeignNetworkConfig::of(*env->source);
  env->dest_config = ForeignNetworkConfig::of(*env->dest);
  env->policy.policy_id = "pol-src";
  env->policy.network_id = src_net_id;
  env->policy.required_orgs = {alpha_org, beta_org};

  auto must_commit = [](const CommitReport& r) {
    if (!r.committed) throw std::runtime_error("fixture setup commit failed: " + r.error);
  };
  must_commit(env->source->submit_transaction(cmdac_contract_name, "record_config",
                                              {env->dest_config.encode()}, env->source_admin,
                                              env->nonce()));
  AccessRule rule{dst_net_id, client_org, data_contract, "Get"};
  must_commit(env->source->submit_transaction(ecc_contract_name, "set_rule", {rule.encode()},
                                              env->source_admin, env->nonce()));
  must_commit(env->dest->submit_transaction(cmdac_contract_name, "record_config",
                                            {env->source_config.encode()},
                                            env->client->certificate, env->nonce()));
  must_commit(env->dest->submit_transaction(cmdac_contract_name, "record_policy",
                                            {env->policy.encode()}, env->client->certificate,
                                            env->nonce()));
  must_commit(env->source->submit_transaction(data_contract, "Put",
                                              {to_bytes("doc-1"), to_bytes("the payload: 42")},
                                              env->source_admin, env->nonce()));
  return env;
}

// Crafts a genuine attestation signed by the named source peer.
inline ProofEntry make_attestation(MiniEnv& env, const std::string& peer_id,
                                   const Digest& request_digest, const Nonce& nonce,
                                   ByteView result) {
  const Peer& peer = env.source->peer(peer_id);
  ProofEntry entry;
  entry.signer_cert = peer.certificate;
  entry.metadata.network_id = env.source->network_id();
  entry.metadata.peer_id = peer_id;
  entry.metadata.org_id = peer.org_id;
  entry.metadata.request_digest = request_digest;
  entry.metadata.nonce = nonce;
  entry.metadata.result = copy_bytes(result);
  entry.signature = sign(peer.keys.private_key, entry.metadata.canonical_bytes());
  return entry;
}

// Starts the source and destination relays (and optionally a censoring
// source relay listed first in the registry).
inline void start_relays(MiniEnv& env, bool with_censor = false,
                         std::chrono::milliseconds outbound_deadline =
                             std::chrono::milliseconds(5'000)) {
  std::string tmpl = (std::filesystem::temp_directory_path() / "crosslink-test-XXXXXX").string();
  std::vector<char> buf(tmpl.begin(), tmpl.end());
  buf.push_back('\0');
  if (!::mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
  env.outdir = buf.data();
  env.registry_path = env.outdir + "/registry.txt";

  RelayConfig src_cfg;
  src_cfg.relay_id = "src-relay";
  src_cfg.local_network_id = src_net_id;
  src_cfg.registry_path = env.registry_path;
  src_cfg.log_dir = env.outdir;
  src_cfg.outbound_deadline = outbound_deadline;
  env.src_relay = std::make_unique<Relay>(src_cfg);
  env.src_relay->bind_driver(src_net_id, std::make_shared<SimNetworkDriver>(*env.source));
  env.src_relay->start();

  RelayConfig dst_cfg;
  dst_cfg.relay_id = "dst-relay";
  dst_cfg.local_network_id = dst_net_id;
  dst_cfg.registry_path = env.registry_path;
  dst_cfg.log_dir = env.outdir;
  dst_cfg.outbound_deadline = outbound_deadline;
  env.dst_relay = std::make_unique<Relay>(dst_cfg);
  env.dst_relay->bind_driver(dst_net_id, std::make_shared<SimNetworkDriver>(*env.dest));
  env.dst_relay->start();

  std::vector<std::pair<std::string, std::string>> entries;
  if (with_censor) {
    RelayConfig censor_cfg;
    censor_cfg.relay_id = "src-relay-censor";
    censor_cfg.local_network_id = src_net_id;
    censor_cfg.registry_path = env.registry_path;
    censor_cfg.log_dir = env.outdir;
    censor_cfg.fault_mode = FaultMode::drop_requests;
    env.censor_relay = std::make_unique<Relay>(censor_cfg);
    env.censor_relay->start();
    entries.emplace_back(src_net_id, env.censor_relay->address());
  }
  entries.emplace_back(src_net_id, env.src_relay->address());
  entries.emplace_back(dst_net_id, env.dst_relay->address());
  DiscoveryRegistry::write_file(env.registry_path, entries);
}

}  // namespace crosslink::test
