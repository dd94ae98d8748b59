// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.
//
// Deterministic simulated permissioned network: organizations with root
// authorities, peers holding replicated hash-chained ledgers over a flat
// key/value world state, a contract runtime with contract-to-contract
// invocation, and endorsement-policy-gated commits. Consensus is simplified
// to endorse-compare-order within one process; replicas stay byte-identical
// by construction.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include "crosslink/bytes.hpp"
#include "crosslink/codec.hpp"
#include "crosslink/crypto.hpp"
#include "crosslink/identity.hpp"
#include "crosslink/wire.hpp"

namespace crosslink {

class LedgerError : public std::runtime_error {
 public:
  explicit LedgerError(const std::string& what) : std::runtime_error("ledger: " + what) {}
};

// Raised by contract code; aborts the enclosing transaction or query.
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

using StateMap = std::map<std::string, Bytes>;

inline Bytes encode_state_entries(const StateMap& state) {
  Writer w;
  for (const auto& [key, value] : state) {
    Writer entry;
    entry.field_string(1, key);
    entry.field_bytes(2, value);
    w.field_bytes(1, entry.take());
  }
  return w.take();
}

struct Block {
  std::uint64_t height = 0;
  Digest prev_hash{};
  std::vector<Digest> tx_digests;
  StateMap state_delta;
  Digest block_hash{};

  Bytes canonical_body() const {
    Writer w;
    w.field_u64(1, height);
    w.field_bytes(2, digest_view(prev_hash));
    for (const auto& d : tx_digests) w.field_bytes(3, digest_view(d));
    for (const auto& [key, value] : state_delta) {
      Writer entry;
      entry.field_string(1, key);
      entry.field_bytes(2, value);
      w.field_bytes(4, entry.take());
    }
    return w.take();
  }

  void seal() { block_hash = sha256(canonical_body()); }
};

struct Endorsement {
  Certificate peer_cert;
  Bytes signature;  // over the ExecResult digest

  Bytes encode() const {
    Writer w;
    w.field_bytes(1, peer_cert.encode());
    w.field_bytes(2, signature);
    return w.take();
  }
};

struct Transaction {
  std::string contract_name;
  std::string function_name;
  std::vector<Bytes> args;
  Certificate submitter_cert;
  Nonce nonce{};
  std::vector<Endorsement> endorsements;

  Bytes canonical_bytes() const {
    Writer w;
    w.field_string(1, contract_name);
    w.field_string(2, function_name);
    for (const auto& a : args) w.field_bytes(3, a);
    w.field_bytes(4, submitter_cert.encode());
    w.field_bytes(5, ByteView(nonce.data(), nonce.size()));
    for (const auto& e : endorsements) w.field_bytes(6, e.encode());
    return w.take();
  }
};

struct EndorsementPolicy {
  std::vector<std::string> required_orgs;  // >=1 endorsing peer per listed org
};

// What endorsing peers sign: a commitment to the invocation and its effects.
inline Digest exec_result_digest(const std::string& contract_name,
                                 const std::string& function_name,
                                 const std::vector<Bytes>& args, ByteView result,
                                 const StateMap& delta) {
  Writer w;
  w.field_string(1, contract_name);
  w.field_string(2, function_name);
  for (const auto& a : args) w.field_bytes(3, a);
  w.field_bytes(4, result);
  for (const auto& [key, value] : delta) {
    Writer entry;
    entry.field_string(1, key);
    entry.field_bytes(2, value);
    w.field_bytes(5, entry.take());
  }
  return sha256(w.take());
}

class ContractContext;
using ContractFn =
    std::function<Bytes(ContractContext&, const std::string&, const std::vector<Bytes>&)>;

struct Contract {
  std::string name;
  ContractFn fn;
  EndorsementPolicy policy;
};

struct Peer {
  std::string peer_id;
  std::string org_id;
  Certificate certificate;
  KeyPair keys;
  StateMap world_state;
  std::vector<Block> chain;
  std::vector<Transaction> tx_log;  // committed transactions, in order
  std::map<std::string, std::shared_ptr<const Contract>> contracts;
};

// Execution view handed to contract code. Writes are buffered into a delta;
// queries must not write at all.
class ContractContext {
 public:
  ContractContext(Peer& peer, const std::string& network_id, bool query_mode,
                  const Certificate& caller, const Nonce& nonce)
      : peer_(peer),
        network_id_(network_id),
        query_mode_(query_mode),
        caller_(caller),
        nonce_(nonce) {}

  std::optional<Bytes> get(const std::string& key) const {
    auto it = delta_.find(key);
    if (it != delta_.end()) return it->second;
    auto base = peer_.world_state.find(key);
    if (base != peer_.world_state.end()) return base->second;
    return std::nullopt;
  }

  void put(const std::string& key, ByteView value) {
    if (query_mode_) throw ContractError("state write attempted during query");
    delta_[key] = copy_bytes(value);
  }

  Bytes invoke(const std::string& contract_name, const std::string& function,
               const std::vector<Bytes>& args) {
    auto it = peer_.contracts.find(contract_name);
    if (it == peer_.contracts.end())
      throw ContractError("unknown contract '" + contract_name + "'");
    return it->second->fn(*this, function, args);
  }

  const Certificate& caller() const { return caller_; }
  const Nonce& nonce() const { return nonce_; }
  bool is_query() const { return query_mode_; }
  const std::string& network_id() const { return network_id_; }
  const std::string& peer_id() const { return peer_.peer_id; }
  const std::string& org_id() const { return peer_.org_id; }

  const StateMap& delta() const { return delta_; }

 private:
  Peer& peer_;
  const std::string& network_id_;
  bool query_mode_;
  const Certificate& caller_;
  const Nonce& nonce_;
  StateMap delta_;
};

struct CommitReport {
  bool committed = false;
  std::uint64_t height = 0;
  Bytes result;
  std::string error;
};

struct Org {
  std::string org_id;
  std::unique_ptr<RootAuthority> authority;
};

class Network {
 public:
  static std::unique_ptr<Network> create(const std::string& network_id,
                                         const std::vector<std::string>& org_ids,
                                         std::size_t peers_per_org,
                                         std::optional<std::uint64_t> seed = std::nullopt) {
    if (org_ids.empty()) throw LedgerError("network needs at least one org");
    if (peers_per_org == 0) throw LedgerError("network needs at least one peer per org");
    auto net = std::unique_ptr<Network>(new Network(network_id));
    for (const auto& org_id : org_ids) {
      for (const auto& existing : net->orgs_)
        if (existing.org_id == org_id) throw LedgerError("duplicate org '" + org_id + "'");
      auto authority = std::make_unique<RootAuthority>(RootAuthority::create(
          org_id, network_id,
          seed ? std::optional(derive_seed(*seed, network_id + "/org/" + org_id))
               : std::nullopt));
      net->orgs_.push_back(Org{org_id, std::move(authority)});
    }
    for (auto& org : net->orgs_) {
      for (std::size_t i = 0; i < peers_per_org; ++i) {
        std::string peer_id = peer_name(org.org_id, i);
        for (const auto& p : net->peers_)
          if (p->peer_id == peer_id) throw LedgerError("duplicate peer '" + peer_id + "'");
        KeyPair keys = seed ? KeyPair::from_seed(
                                  derive_seed(*seed, network_id + "/peer/" + peer_id))
                            : KeyPair::generate();
        auto peer = std::make_unique<Peer>();
        peer->peer_id = peer_id;
        peer->org_id = org.org_id;
        peer->certificate = org.authority->issue(peer_id, SubjectKind::peer, keys);
        peer->keys = std::move(keys);
        net->peers_.push_back(std::move(peer));
      }
    }
    Block genesis;
    genesis.height = 0;
    genesis.prev_hash = Digest{};
    genesis.state_delta["net/id"] = to_bytes(network_id);
    genesis.seal();
    for (auto& peer : net->peers_) {
      peer->chain.push_back(genesis);
      for (const auto& [k, v] : genesis.state_delta) peer->world_state[k] = v;
    }
    return net;
  }

  const std::string& network_id() const { return network_id_; }

  RootAuthority& authority(const std::string& org_id) {
    for (auto& org : orgs_)
      if (org.org_id == org_id) return *org.authority;
    throw LedgerError("unknown org '" + org_id + "'");
  }

  std::vector<std::string> org_ids() const {
    std::vector<std::string> out;
    for (const auto& org : orgs_) out.push_back(org.org_id);
    return out;
  }

  std::vector<std::string> peer_ids() const {
    std::vector<std::string> out;
    for (const auto& p : peers_) out.push_back(p->peer_id);
    return out;
  }

  // Peers of one org, ordered by ascending peer_id.
  std::vector<std::string> org_peer_ids(const std::string& org_id) const {
    std::vector<std::string> out;
    for (const auto& p : peers_)
      if (p->org_id == org_id) out.push_back(p->peer_id);
    std::sort(out.begin(), out.end());
    return out;
  }

  const Peer& peer(const std::string& peer_id) const {
    for (const auto& p : peers_)
      if (p->peer_id == peer_id) return *p;
    throw LedgerError("unknown peer '" + peer_id + "'");
  }

  void deploy_contract(const std::string& name, ContractFn fn, EndorsementPolicy policy) {
    std::unique_lock lock(mutex_);
    if (policy.required_orgs.empty()) throw LedgerError("endorsement policy must name an org");
    for (const auto& org : policy.required_orgs) authority(org);  // must exist
    if (!peers_.empty() && peers_.front()->contracts.count(name))
      throw LedgerError("contract '" + name + "' already deployed");
    auto contract = std::make_shared<const Contract>(Contract{name, std::move(fn), policy});
    for (auto& peer : peers_) peer->contracts[name] = contract;
  }

  bool has_contract(const std::string& name) const {
    std::shared_lock lock(mutex_);
    return !peers_.empty() && peers_.front()->contracts.count(name) > 0;
  }

  // Read-only execution on one peer's replica. Contract errors propagate.
  Bytes query(const std::string& peer_id, const std::string& contract_name,
              const std::string& function, const std::vector<Bytes>& args,
              const Certificate& caller, const Nonce& nonce = Nonce{}) const {
    std::shared_lock lock(mutex_);
    Peer& peer = const_cast<Peer&>(this->peer(peer_id));
    auto it = peer.contracts.find(contract_name);
    if (it == peer.contracts.end())
      throw LedgerError("unknown contract '" + contract_name + "'");
    ContractContext ctx(peer, network_id_, /*query_mode=*/true, caller, nonce);
    return it->second->fn(ctx, function, args);
  }

  CommitReport submit_transaction(const std::string& contract_name, const std::string& function,
                                  const std::vector<Bytes>& args, const Certificate& submitter,
                                  const Nonce& nonce) {
    std::unique_lock lock(mutex_);
    if (peers_.empty() || !peers_.front()->contracts.count(contract_name))
      throw LedgerError("unknown contract '" + contract_name + "'");
    auto contract = peers_.front()->contracts.at(contract_name);

    // One endorsing peer per required org, lowest peer_id first.
    std::vector<Peer*> endorsers;
    for (const auto& org : contract->policy.required_orgs) {
      Peer* chosen = nullptr;
      for (auto& p : peers_) {
        if (p->org_id != org) continue;
        if (!chosen || p->peer_id < chosen->peer_id) chosen = p.get();
      }
      if (!chosen) return {false, height(), {}, "policy-unsatisfiable: no peer for '" + org + "'"};
      endorsers.push_back(chosen);
    }

    struct Execution {
      Bytes result;
      StateMap delta;
      Digest digest;
    };
    std::vector<Execution> runs;
    for (Peer* peer : endorsers) {
      ContractContext ctx(*peer, network_id_, /*query_mode=*/false, submitter, nonce);
      Execution exec;
      try {
        exec.result = contract->fn(ctx, function, args);
      } catch (const ContractError& e) {
        return {false, height(), {}, e.what()};
      }
      exec.delta = ctx.delta();
      exec.digest = exec_result_digest(contract_name, function, args, exec.result, exec.delta);
      runs.push_back(std::move(exec));
    }
    for (const auto& run : runs) {
      if (run.digest != runs.front().digest)
        return {false, height(), {}, "endorsement-mismatch"};
    }

    Transaction tx;
    tx.contract_name = contract_name;
    tx.function_name = function;
    tx.args = args;
    tx.submitter_cert = submitter;
    tx.nonce = nonce;
    for (Peer* peer : endorsers) {
      Endorsement e;
      e.peer_cert = peer->certificate;
      e.signature = sign(peer->keys.private_key, digest_view(runs.front().digest));
      tx.endorsements.push_back(std::move(e));
    }

    Block block;
    block.height = peers_.front()->chain.size();
    block.prev_hash = peers_.front()->chain.back().block_hash;
    block.tx_digests.push_back(canonical_digest(tx));
    block.state_delta = runs.front().delta;
    block.seal();
    for (auto& peer : peers_) {
      peer->chain.push_back(block);
      peer->tx_log.push_back(tx);
      for (const auto& [k, v] : block.state_delta) peer->world_state[k] = v;
    }
    return {true, block.height, runs.front().result, {}};
  }

  std::uint64_t height() const {
    return peers_.empty() ? 0 : peers_.front()->chain.size() - 1;
  }

  bool verify_chain(const std::string& peer_id) const {
    std::shared_lock lock(mutex_);
    return verify_chain_locked(peer(peer_id));
  }

  bool verify_all_chains() const {
    std::shared_lock lock(mutex_);
    for (const auto& p : peers_)
      if (!verify_chain_locked(*p)) return false;
    return true;
  }

  Digest state_digest(const std::string& peer_id) const {
    std::shared_lock lock(mutex_);
    return sha256(encode_state_entries(peer(peer_id).world_state));
  }

  std::vector<Transaction> committed_transactions(const std::string& peer_id) const {
    std::shared_lock lock(mutex_);
    return peer(peer_id).tx_log;
  }

  Bytes chain_bytes(const std::string& peer_id) const {
    std::shared_lock lock(mutex_);
    Writer w;
    for (const auto& b : peer(peer_id).chain) {
      w.field_bytes(1, b.canonical_body());
    }
    return w.take();
  }

  // Text snapshot, frozen format (see README): header, one line per peer,
  // one line per block of the first replica.
  std::string dump() const {
    std::shared_lock lock(mutex_);
    std::ostringstream out;
    out << "ledger " << network_id_ << "\n";
    for (const auto& p : peers_) {
      out << "peer " << p->peer_id << " height " << (p->chain.size() - 1) << " verify "
          << (verify_chain_locked(*p) ? "ok" : "fail") << " state "
          << crosslink::to_hex(sha256(encode_state_entries(p->world_state))) << "\n";
    }
    for (const auto& b : peers_.front()->chain) {
      out << "block " << b.height << " " << crosslink::to_hex(b.prev_hash) << " "
          << crosslink::to_hex(b.block_hash) << " ";
      if (b.tx_digests.empty()) {
        out << "-";
      } else {
        for (std::size_t i = 0; i < b.tx_digests.size(); ++i) {
          if (i) out << ",";
          out << crosslink::to_hex(b.tx_digests[i]);
        }
      }
      out << "\n";
    }
    out << "end\n";
    return out.str();
  }

  // JSONL block export for external re-hash checks: one object per block.
  std::string blocks_jsonl(const std::string& peer_id) const {
    std::shared_lock lock(mutex_);
    std::ostringstream out;
    for (const auto& b : peer(peer_id).chain) {
      out << "{\"height\":" << b.height << ",\"prev\":\"" << crosslink::to_hex(b.prev_hash)
          << "\",\"hash\":\"" << crosslink::to_hex(b.block_hash) << "\",\"txs\":[";
      for (std::size_t i = 0; i < b.tx_digests.size(); ++i) {
        if (i) out << ",";
        out << "\"" << crosslink::to_hex(b.tx_digests[i]) << "\"";
      }
      out << "],\"delta\":[";
      bool first = true;
      for (const auto& [k, v] : b.state_delta) {
        if (!first) out << ",";
        first = false;
        out << "[\"" << crosslink::to_hex(to_bytes(k)) << "\",\"" << crosslink::to_hex(v)
            << "\"]";
      }
      out << "]}\n";
    }
    return out.str();
  }

  // Test hook: corrupts a historical block on one replica.
  void corrupt_block_for_test(const std::string& peer_id, std::uint64_t height) {
    std::unique_lock lock(mutex_);
    Peer& p = const_cast<Peer&>(peer(peer_id));
    if (height >= p.chain.size()) throw LedgerError("no such block");
    p.chain[height].state_delta["corrupted"] = to_bytes("x");
  }

 private:
  explicit Network(std::string network_id) : network_id_(std::move(network_id)) {}

  static std::uint64_t derive_seed(std::uint64_t base, const std::string& label) {
    Writer w;
    w.field_u64(1, base);
    w.field_string(2, label);
    Digest d = sha256(w.take());
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out = out << 8 | d[i];
    return out;
  }

  static std::string peer_name(const std::string& org_id, std::size_t index) {
    std::string prefix = org_id;
    static const std::string suffix = "-org";
    if (prefix.size() > suffix.size() &&
        prefix.compare(prefix.size() - suffix.size(), suffix.size(), suffix) == 0)
      prefix.resize(prefix.size() - suffix.size());
    return prefix + "-peer-" + std::to_string(index);
  }

  bool verify_chain_locked(const Peer& p) const {
    if (p.chain.empty()) return false;
    for (std::size_t h = 0; h < p.chain.size(); ++h) {
      const Block& b = p.chain[h];
      if (b.height != h) return false;
      if (sha256(b.canonical_body()) != b.block_hash) return false;
      if (h == 0) {
        if (b.prev_hash != Digest{}) return false;
      } else if (b.prev_hash != p.chain[h - 1].block_hash) {
        return false;
      }
    }
    return true;
  }

  std::string network_id_;
  std::vector<Org> orgs_;
  std::vector<std::unique_ptr<Peer>> peers_;
  mutable std::shared_mutex mutex_;
};

}  // namespace crosslink
