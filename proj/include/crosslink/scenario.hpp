// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.
//
// Executable trade-logistics / trade-finance scenario: a two-org logistics
// network (seller + carrier) serves bill-of-lading data to a seller client
// of a two-org finance network (buyer bank + seller bank) through a pair of
// relays, with adversarial variants. Everything derives from one seed so a
// run's transcript and ledger dumps are byte-reproducible.

#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crosslink/client.hpp"
#include "crosslink/contracts.hpp"
#include "crosslink/crypto.hpp"
#include "crosslink/ledger.hpp"
#include "crosslink/relay.hpp"
#include "crosslink/wire.hpp"

namespace crosslink::scenario {

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& what) : std::runtime_error("scenario: " + what) {}
};

inline constexpr const char* stl_network_id = "trade-lens";
inline constexpr const char* swt_network_id = "we-trade";
inline constexpr const char* seller_org = "seller-org";
inline constexpr const char* carrier_org = "carrier-org";
inline constexpr const char* buyer_org = "buyer-org";
inline constexpr const char* trade_lens_cc = "TradeLensCC";
inline constexpr const char* we_trade_cc = "WeTradeCC";
inline constexpr const char* stl_policy_id = "stl-proof-v1";
inline constexpr const char* purchase_order_ref = "PO-2019-0042";

// 24-byte marker embedded in the B/L fixture; the confidentiality checks
// scan relay transcripts for exactly these bytes.
inline constexpr const char* bl_marker = "BL-MARKER-7f3d9a2c41e6b8";

inline std::string bill_of_lading_document(const std::string& po_ref) {
  std::ostringstream doc;
  doc << "{\"doc\":\"bill-of-lading\",\"po\":\"" << po_ref << "\",\"marker\":\"" << bl_marker
      << "\",\"vessel\":\"MV NORDIC STAR\",\"voyage\":\"NS-214\""
      << ",\"port_of_loading\":\"Rotterdam\",\"port_of_discharge\":\"Singapore\""
      << ",\"cargo\":\"electronics, 12 pallets\",\"shipper\":\"seller-org\""
      << ",\"carrier\":\"carrier-org\",\"issued\":\"2019-08-14\"}";
  return doc.str();
}

enum class AttackMode { none, tamper, replay, unauthorized, censor };

inline const char* to_label(AttackMode m) {
  switch (m) {
    case AttackMode::none: return "none";
    case AttackMode::tamper: return "tamper";
    case AttackMode::replay: return "replay";
    case AttackMode::unauthorized: return "unauthorized";
    case AttackMode::censor: return "censor";
  }
  return "?";
}

inline std::optional<AttackMode> parse_attack_mode(const std::string& s) {
  if (s == "none") return AttackMode::none;
  if (s == "tamper") return AttackMode::tamper;
  if (s == "replay") return AttackMode::replay;
  if (s == "unauthorized") return AttackMode::unauthorized;
  if (s == "censor") return AttackMode::censor;
  return std::nullopt;
}

struct ScenarioSpec {
  std::uint64_t seed = 1;
  AttackMode attack = AttackMode::none;
  std::string outdir;        // empty: a temp dir, removed on teardown
  bool multiprocess = false; // forwarder/censor relays as child processes
  std::string relayd_path;   // needed when multiprocess
};

struct TranscriptEvent {
  std::string step;
  std::string actor;
  std::string detail;
  std::string verdict;
};

struct Transcript {
  std::vector<TranscriptEvent> events;
  bool ok = true;

  void add(std::string step, std::string actor, std::string detail, std::string verdict) {
    events.push_back({std::move(step), std::move(actor), std::move(detail), std::move(verdict)});
  }

  void fail(std::string step, std::string actor, std::string detail, std::string verdict) {
    add(std::move(step), std::move(actor), std::move(detail), std::move(verdict));
    ok = false;
  }

  std::string to_text() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < events.size(); ++i) {
      out << std::setw(3) << std::setfill('0') << i << "|" << events[i].step << "|"
          << events[i].actor << "|" << events[i].detail << "|" << events[i].verdict << "\n";
    }
    out << "result|" << (ok ? "ok" : "failed") << "\n";
    return out.str();
  }
};

inline std::uint64_t derive_seed(std::uint64_t base, const std::string& label) {
  Writer w;
  w.field_u64(1, base);
  w.field_string(2, label);
  Digest d = sha256(w.take());
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = out << 8 | d[i];
  return out;
}

// The logistics-side application contract.
//   CreateExportOrder(po_ref, description)    transaction
//   RecordBillOfLading(po_ref, document)      transaction
//   GetBillOfLading(po_ref)                   query; foreign callers pass
//       through ECC access control, and denials surface as
//       "access-denied:<reason>".
inline ContractFn trade_lens_contract() {
  return [](ContractContext& ctx, const std::string& fn, const std::vector<Bytes>& args) -> Bytes {
    if (fn == "CreateExportOrder") {
      if (args.size() != 2) throw ContractError("CreateExportOrder: expected 2 args");
      std::string key = "order/" + to_string(args[0]);
      if (ctx.get(key)) throw ContractError("order already exists");
      ctx.put(key, args[1]);
      return {};
    }
    if (fn == "RecordBillOfLading") {
      if (args.size() != 2) throw ContractError("RecordBillOfLading: expected 2 args");
      std::string po = to_string(args[0]);
      if (!ctx.get("order/" + po)) throw ContractError("unknown order '" + po + "'");
      ctx.put("bl/" + po, args[1]);
      return {};
    }
    if (fn == "GetBillOfLading") {
      if (args.size() != 1) throw ContractError("GetBillOfLading: expected 1 arg");
      if (ctx.caller().network_id != ctx.network_id()) {
        auto verdict = AccessVerdict::decode(ctx.invoke(
            ecc_contract_name, "check_access",
            {ctx.caller().encode(), to_bytes(trade_lens_cc), to_bytes("GetBillOfLading")}));
        if (!verdict) throw ContractError("access-denied:" + verdict.reason);
      }
      auto bl = ctx.get("bl/" + to_string(args[0]));
      if (!bl) throw ContractError("no bill of lading for '" + to_string(args[0]) + "'");
      return *bl;
    }
    throw ContractError("TradeLensCC: unknown function '" + fn + "'");
  };
}

// The finance-side application contract.
//   IssueLC(po_ref, terms)                                   transaction
//   UploadDispatchDocs(po_ref, result, proof, digest, nonce) transaction;
//       validates the proof through the CMDAC, which consumes the nonce
//   RequestPayment(po_ref)                                   transaction
//   GetDispatchDocs(po_ref)                                  query
inline ContractFn we_trade_contract() {
  return [](ContractContext& ctx, const std::string& fn, const std::vector<Bytes>& args) -> Bytes {
    if (fn == "IssueLC") {
      if (args.size() != 2) throw ContractError("IssueLC: expected 2 args");
      ctx.put("lc/" + to_string(args[0]), args[1]);
      return {};
    }
    if (fn == "UploadDispatchDocs") {
      if (args.size() != 5) throw ContractError("UploadDispatchDocs: expected 5 args");
      std::string po = to_string(args[0]);
      if (!ctx.get("lc/" + po)) throw ContractError("no letter of credit for '" + po + "'");
      Bytes raw = ctx.invoke(cmdac_contract_name, "validate_proof",
                             {to_bytes(stl_policy_id), args[3], args[4], args[1], args[2]});
      ProofVerdict verdict = decode_proof_verdict(raw);
      if (!verdict) throw ContractError("proof rejected: " + verdict.reason);
      ctx.put("dispatch/" + po, args[1]);
      return {};
    }
    if (fn == "RequestPayment") {
      if (args.size() != 1) throw ContractError("RequestPayment: expected 1 arg");
      std::string po = to_string(args[0]);
      if (!ctx.get("dispatch/" + po))
        throw ContractError("dispatch docs missing for '" + po + "'");
      ctx.put("payment/" + po, to_bytes("requested"));
      return {};
    }
    if (fn == "GetDispatchDocs") {
      if (args.size() != 1) throw ContractError("GetDispatchDocs: expected 1 arg");
      auto docs = ctx.get("dispatch/" + to_string(args[0]));
      if (!docs) throw ContractError("no dispatch docs for '" + to_string(args[0]) + "'");
      return *docs;
    }
    throw ContractError("WeTradeCC: unknown function '" + fn + "'");
  };
}

// Relay child process for --multiprocess runs; reports its bound port on
// stdout as "LISTENING <port>".
class ChildRelay {
 public:
  static std::unique_ptr<ChildRelay> spawn(const std::string& relayd_path,
                                           const std::vector<std::string>& args) {
    int pipefd[2];
    if (::pipe(pipefd) != 0) throw ScenarioError("pipe failed");
    pid_t pid = ::fork();
    if (pid < 0) throw ScenarioError("fork failed");
    if (pid == 0) {
      ::dup2(pipefd[1], STDOUT_FILENO);
      ::close(pipefd[0]);
      ::close(pipefd[1]);
      std::vector<char*> argv;
      argv.push_back(const_cast<char*>(relayd_path.c_str()));
      for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      ::execv(relayd_path.c_str(), argv.data());
      ::_exit(127);
    }
    ::close(pipefd[1]);
    auto child = std::unique_ptr<ChildRelay>(new ChildRelay(pid, pipefd[0]));
    child->port_ = child->read_port();
    return child;
  }

  ~ChildRelay() { terminate(); }

  std::uint16_t port() const { return port_; }
  std::string address() const { return "127.0.0.1:" + std::to_string(port_); }

  void terminate() {
    if (pid_ <= 0) return;
    ::kill(pid_, SIGTERM);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
    if (stdout_fd_ >= 0) {
      ::close(stdout_fd_);
      stdout_fd_ = -1;
    }
  }

 private:
  ChildRelay(pid_t pid, int stdout_fd) : pid_(pid), stdout_fd_(stdout_fd) {}

  std::uint16_t read_port() {
    std::string line;
    char c = 0;
    for (int i = 0; i < 4096; ++i) {
      pollfd pfd{stdout_fd_, POLLIN, 0};
      if (::poll(&pfd, 1, 5000) <= 0) break;
      ssize_t n = ::read(stdout_fd_, &c, 1);
      if (n <= 0) break;
      if (c == '\n') break;
      line.push_back(c);
    }
    if (line.rfind("LISTENING ", 0) != 0)
      throw ScenarioError("relay child did not report a port (got '" + line + "')");
    return static_cast<std::uint16_t>(std::stoul(line.substr(10)));
  }

  pid_t pid_;
  int stdout_fd_;
  std::uint16_t port_ = 0;
};

struct SetupAction {
  std::string network;
  std::string contract;
  std::string function;
};

class Environment {
 public:
  ScenarioSpec spec;
  std::unique_ptr<Network> stl;
  std::unique_ptr<Network> swt;
  ForeignNetworkConfig stl_config;
  ForeignNetworkConfig swt_config;
  VerificationPolicy policy;
  std::unique_ptr<ClientIdentity> swt_seller;   // the cross-network requestor
  std::unique_ptr<ClientIdentity> swt_buyer;
  std::unique_ptr<ClientIdentity> stl_seller;
  std::unique_ptr<ClientIdentity> stl_carrier;
  std::unique_ptr<Relay> stl_relay;
  std::unique_ptr<Relay> swt_relay;
  std::unique_ptr<Relay> censor_relay;        // in-process variant
  std::unique_ptr<ChildRelay> swt_relay_child;
  std::unique_ptr<ChildRelay> censor_child;
  std::string outdir;
  std::string registry_path;
  Rng rng = Rng::system();
  Transcript transcript;
  std::vector<SetupAction> setup_plan;
  std::vector<std::string> relay_ids;

  ~Environment() { shutdown(); }

  void shutdown() {
    if (swt_relay) swt_relay->stop();
    if (stl_relay) stl_relay->stop();
    if (censor_relay) censor_relay->stop();
    if (swt_relay_child) swt_relay_child->terminate();
    if (censor_child) censor_child->terminate();
    if (cleanup_outdir_ && !outdir.empty()) {
      std::error_code ec;
      std::filesystem::remove_all(outdir, ec);
      cleanup_outdir_ = false;
    }
  }

  std::string swt_relay_address() const {
    return swt_relay_child ? swt_relay_child->address() : swt_relay->address();
  }

  Network& network(const std::string& network_id) {
    if (stl && network_id == stl->network_id()) return *stl;
    if (swt && network_id == swt->network_id()) return *swt;
    throw ScenarioError("unknown network '" + network_id + "'");
  }

  Nonce next_nonce() { return rng.array<16>(); }

  // Raw bytes every relay in this environment observed, from its .wire file.
  std::vector<Bytes> relay_wire_transcripts() const {
    std::vector<Bytes> out;
    for (const auto& id : relay_ids) {
      std::ifstream in(outdir + "/" + id + ".wire", std::ios::binary);
      Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      out.push_back(std::move(data));
    }
    return out;
  }

  void mark_outdir_for_cleanup() { cleanup_outdir_ = true; }

 private:
  bool cleanup_outdir_ = false;
};

// The cross-network query at the center of the use case.
inline RemoteTarget bl_query_target() {
  RemoteTarget target;
  target.dest_network_id = stl_network_id;
  target.ledger_id = stl_network_id;
  target.contract_name = trade_lens_cc;
  target.function_name = "GetBillOfLading";
  target.args = {to_bytes(purchase_order_ref)};
  return target;
}

namespace detail {

inline void committed_or_throw(const CommitReport& report, const std::string& what) {
  if (!report.committed) throw ScenarioError(what + " failed: " + report.error);
}

inline std::string short_hex(const Digest& d) { return crosslink::to_hex(d); }

}  // namespace detail

// Builds both networks, deploys application and system contracts, commits
// the interoperation records, starts relays and writes the discovery
// registry. Any commit failure aborts.
inline std::unique_ptr<Environment> setup(const ScenarioSpec& spec) {
  auto env = std::make_unique<Environment>();
  env->spec = spec;
  env->rng = Rng::seeded(derive_seed(spec.seed, "scenario-rng"));

  if (spec.outdir.empty()) {
    std::string tmpl = (std::filesystem::temp_directory_path() / "crosslink-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!::mkdtemp(buf.data())) throw ScenarioError("mkdtemp failed");
    env->outdir = buf.data();
    env->mark_outdir_for_cleanup();
  } else {
    env->outdir = spec.outdir;
    std::filesystem::create_directories(env->outdir);
  }

  env->transcript.add("scenario", "harness",
                      "seed=" + std::to_string(spec.seed) +
                          ",attack=" + std::string(to_label(spec.attack)) +
                          (spec.multiprocess ? ",multiprocess=1" : ""),
                      "start");

  env->stl = Network::create(stl_network_id, {seller_org, carrier_org}, 1, spec.seed);
  env->swt = Network::create(swt_network_id, {buyer_org, seller_org}, 2, spec.seed);

  EndorsementPolicy stl_endorsement{{seller_org, carrier_org}};
  EndorsementPolicy swt_endorsement{{buyer_org, seller_org}};
  env->stl->deploy_contract(trade_lens_cc, trade_lens_contract(), stl_endorsement);
  env->stl->deploy_contract(ecc_contract_name, ecc_contract(), stl_endorsement);
  env->stl->deploy_contract(cmdac_contract_name, cmdac_contract(), stl_endorsement);
  env->swt->deploy_contract(we_trade_cc, we_trade_contract(), swt_endorsement);
  env->swt->deploy_contract(ecc_contract_name, ecc_contract(), swt_endorsement);
  env->swt->deploy_contract(cmdac_contract_name, cmdac_contract(), swt_endorsement);

  env->swt_seller = std::make_unique<ClientIdentity>(ClientIdentity::bootstrap(
      env->swt->authority(seller_org), "swt-seller-client",
      derive_seed(spec.seed, "client/swt-seller-client")));
  env->swt_buyer = std::make_unique<ClientIdentity>(ClientIdentity::bootstrap(
      env->swt->authority(buyer_org), "swt-buyer-client",
      derive_seed(spec.seed, "client/swt-buyer-client")));
  env->stl_seller = std::make_unique<ClientIdentity>(ClientIdentity::bootstrap(
      env->stl->authority(seller_org), "stl-seller-client",
      derive_seed(spec.seed, "client/stl-seller-client")));
  env->stl_carrier = std::make_unique<ClientIdentity>(ClientIdentity::bootstrap(
      env->stl->authority(carrier_org), "stl-carrier-client",
      derive_seed(spec.seed, "client/stl-carrier-client")));

  env->stl_config = ForeignNetworkConfig::of(*env->stl);
  env->swt_config = ForeignNetworkConfig::of(*env->swt);
  env->policy.policy_id = stl_policy_id;
  env->policy.network_id = stl_network_id;
  env->policy.required_orgs = {seller_org, carrier_org};

  AccessRule rule{swt_network_id, seller_org, trade_lens_cc, "GetBillOfLading"};

  // The scripted setup plan; its committed-transaction count is asserted in
  // tests by enumerating this vector.
  env->setup_plan = {
      {stl_network_id, cmdac_contract_name, "record_config"},
      {stl_network_id, ecc_contract_name, "set_rule"},
      {swt_network_id, cmdac_contract_name, "record_config"},
      {swt_network_id, cmdac_contract_name, "record_policy"},
  };

  detail::committed_or_throw(
      env->stl->submit_transaction(cmdac_contract_name, "record_config",
                                   {env->swt_config.encode()}, env->stl_seller->certificate,
                                   env->next_nonce()),
      "record_config(swt) on stl");
  env->transcript.add("setup.record-config", "stl-admin", "network=" + std::string(swt_network_id),
                      "committed");
  detail::committed_or_throw(
      env->stl->submit_transaction(ecc_contract_name, "set_rule", {rule.encode()},
                                   env->stl_seller->certificate, env->next_nonce()),
      "set_rule on stl");
  env->transcript.add("setup.set-rule", "stl-admin",
                      "rule=" + rule.network_id + "/" + rule.org_id + "/" + rule.contract_name +
                          "/" + rule.function_name,
                      "committed");
  detail::committed_or_throw(
      env->swt->submit_transaction(cmdac_contract_name, "record_config",
                                   {env->stl_config.encode()}, env->swt_seller->certificate,
                                   env->next_nonce()),
      "record_config(stl) on swt");
  env->transcript.add("setup.record-config", "swt-admin", "network=" + std::string(stl_network_id),
                      "committed");
  detail::committed_or_throw(
      env->swt->submit_transaction(cmdac_contract_name, "record_policy", {env->policy.encode()},
                                   env->swt_seller->certificate, env->next_nonce()),
      "record_policy on swt");
  env->transcript.add("setup.record-policy", "swt-admin",
                      "policy=" + env->policy.policy_id + ",orgs=" + std::string(seller_org) +
                          "+" + std::string(carrier_org),
                      "committed");

  env->registry_path = env->outdir + "/registry.txt";
  bool censor = spec.attack == AttackMode::censor;
  auto outbound_deadline = std::chrono::milliseconds(censor ? 800 : 10'000);

  RelayConfig stl_cfg;
  stl_cfg.relay_id = "stl-relay";
  stl_cfg.local_network_id = stl_network_id;
  stl_cfg.registry_path = env->registry_path;
  stl_cfg.log_dir = env->outdir;
  stl_cfg.outbound_deadline = outbound_deadline;
  if (spec.attack == AttackMode::tamper) stl_cfg.fault_mode = FaultMode::tamper_result;
  env->stl_relay = std::make_unique<Relay>(stl_cfg);
  env->stl_relay->bind_driver(stl_network_id, std::make_shared<SimNetworkDriver>(*env->stl));
  env->stl_relay->start();
  env->relay_ids.push_back(stl_cfg.relay_id);

  std::string censor_address;
  if (censor) {
    if (spec.multiprocess) {
      env->censor_child = ChildRelay::spawn(
          spec.relayd_path,
          {"--id", "stl-relay-censor", "--network", stl_network_id, "--registry",
           env->registry_path, "--fault", "drop_requests", "--log-dir", env->outdir});
      censor_address = env->censor_child->address();
    } else {
      RelayConfig censor_cfg;
      censor_cfg.relay_id = "stl-relay-censor";
      censor_cfg.local_network_id = stl_network_id;
      censor_cfg.registry_path = env->registry_path;
      censor_cfg.log_dir = env->outdir;
      censor_cfg.fault_mode = FaultMode::drop_requests;
      env->censor_relay = std::make_unique<Relay>(censor_cfg);
      env->censor_relay->start();
      censor_address = env->censor_relay->address();
    }
    env->relay_ids.push_back("stl-relay-censor");
  }

  if (spec.multiprocess) {
    env->swt_relay_child = ChildRelay::spawn(
        spec.relayd_path,
        {"--id", "swt-relay", "--network", swt_network_id, "--registry", env->registry_path,
         "--deadline-ms", std::to_string(outbound_deadline.count()), "--log-dir", env->outdir});
  } else {
    RelayConfig swt_cfg;
    swt_cfg.relay_id = "swt-relay";
    swt_cfg.local_network_id = swt_network_id;
    swt_cfg.registry_path = env->registry_path;
    swt_cfg.log_dir = env->outdir;
    swt_cfg.outbound_deadline = outbound_deadline;
    env->swt_relay = std::make_unique<Relay>(swt_cfg);
    env->swt_relay->bind_driver(swt_network_id, std::make_shared<SimNetworkDriver>(*env->swt));
    env->swt_relay->start();
  }
  env->relay_ids.push_back("swt-relay");

  std::vector<std::pair<std::string, std::string>> registry;
  if (censor) registry.emplace_back(stl_network_id, censor_address);
  registry.emplace_back(stl_network_id, env->stl_relay->address());
  registry.emplace_back(swt_network_id, env->swt_relay_address());
  DiscoveryRegistry::write_file(env->registry_path, registry);

  env->transcript.add("setup.relays", "harness",
                      "stl_relays=" + std::to_string(censor ? 2 : 1) + ",swt_relays=1",
                      "listening");
  return env;
}

namespace detail {

// Shared flow steps (Fig. 3 compressed onto the two application contracts).

inline void step_purchase_order(Environment& env) {
  env.transcript.add("1.purchase-order", "buyer+seller", "po=" + std::string(purchase_order_ref),
                     "agreed-offline");
}

inline void step_issue_lc(Environment& env) {
  auto report = env.swt->submit_transaction(
      we_trade_cc, "IssueLC",
      {to_bytes(purchase_order_ref), to_bytes("payment-on-dispatch;amount=USD1250000")},
      env.swt_buyer->certificate, env.next_nonce());
  committed_or_throw(report, "IssueLC");
  env.transcript.add("2-4.issue-lc", "swt-buyer-client",
                     "po=" + std::string(purchase_order_ref) +
                         ",height=" + std::to_string(report.height),
                     "committed");
}

inline void step_export_order(Environment& env) {
  auto report = env.stl->submit_transaction(
      trade_lens_cc, "CreateExportOrder",
      {to_bytes(purchase_order_ref), to_bytes("electronics, 12 pallets")},
      env.stl_seller->certificate, env.next_nonce());
  committed_or_throw(report, "CreateExportOrder");
  env.transcript.add("5-6.create-export-order", "stl-seller-client",
                     "po=" + std::string(purchase_order_ref) +
                         ",height=" + std::to_string(report.height),
                     "committed");
}

inline void step_record_bl(Environment& env) {
  std::string bl = bill_of_lading_document(purchase_order_ref);
  auto report = env.stl->submit_transaction(trade_lens_cc, "RecordBillOfLading",
                                            {to_bytes(purchase_order_ref), to_bytes(bl)},
                                            env.stl_carrier->certificate, env.next_nonce());
  committed_or_throw(report, "RecordBillOfLading");
  env.transcript.add("7-8.record-bill-of-lading", "stl-carrier-client",
                     "po=" + std::string(purchase_order_ref) +
                         ",bl_digest=" + short_hex(sha256(to_bytes(bl))) +
                         ",height=" + std::to_string(report.height),
                     "committed");
}

// Policy and foreign config as actually recorded on the client's own ledger.
inline std::pair<VerificationPolicy, ForeignNetworkConfig> recorded_acceptance_inputs(
    Environment& env) {
  auto peer = env.swt->org_peer_ids(seller_org).front();
  auto policy = VerificationPolicy::decode(env.swt->query(
      peer, cmdac_contract_name, "get_policy", {to_bytes(stl_policy_id)},
      env.swt_seller->certificate));
  auto config = ForeignNetworkConfig::decode(env.swt->query(
      peer, cmdac_contract_name, "get_config", {to_bytes(stl_network_id)},
      env.swt_seller->certificate));
  return {policy, config};
}

inline VerifiedRemoteData step_remote_query(Environment& env) {
  auto [policy, config] = recorded_acceptance_inputs(env);
  RemoteQueryOptions options;
  options.rng = env.rng;
  options.deadline = std::chrono::milliseconds(10'000);
  auto verified = remote_query(*env.swt_seller, env.swt_relay_address(), bl_query_target(),
                               policy, config, options);
  env.transcript.add("9.remote-query", "swt-seller-client",
                     "result_digest=" + short_hex(sha256(verified.result)) + ",attestations=" +
                         std::to_string(verified.proof.size()),
                     "ok");
  return verified;
}

inline CommitReport step_upload_dispatch_docs(Environment& env,
                                              const VerifiedRemoteData& verified,
                                              TransactionInputs* inputs_out = nullptr) {
  TransactionInputs inputs = build_dependent_transaction(
      verified, we_trade_cc, "UploadDispatchDocs", {to_bytes(purchase_order_ref)});
  if (inputs_out) *inputs_out = inputs;
  return env.swt->submit_transaction(inputs.contract_name, inputs.function_name, inputs.args,
                                     env.swt_seller->certificate, env.next_nonce());
}

inline void step_request_payment(Environment& env) {
  auto report =
      env.swt->submit_transaction(we_trade_cc, "RequestPayment", {to_bytes(purchase_order_ref)},
                                  env.swt_seller->certificate, env.next_nonce());
  committed_or_throw(report, "RequestPayment");
  env.transcript.add("10.request-payment", "swt-seller-client",
                     "height=" + std::to_string(report.height), "committed");
}

inline void final_events(Environment& env) {
  for (Network* net : {env.stl.get(), env.swt.get()}) {
    env.transcript.add("final", net->network_id(),
                       "height=" + std::to_string(net->height()) +
                           ",verify=" + (net->verify_all_chains() ? "ok" : "fail"),
                       net->verify_all_chains() ? "ok" : "fail");
    if (!net->verify_all_chains()) env.transcript.ok = false;
  }
}

}  // namespace detail

// Fig. 3 steps 1-10: purchase order, L/C issuance, export order and B/L on
// the logistics ledger, cross-network query, dependent commit, payment.
inline Transcript& run_happy_path(Environment& env) {
  detail::step_purchase_order(env);
  detail::step_issue_lc(env);
  detail::step_export_order(env);
  detail::step_record_bl(env);
  VerifiedRemoteData verified = detail::step_remote_query(env);
  auto report = detail::step_upload_dispatch_docs(env, verified);
  detail::committed_or_throw(report, "UploadDispatchDocs");
  env.transcript.add("10.upload-dispatch-docs", "swt-seller-client",
                     "height=" + std::to_string(report.height), "committed");
  detail::step_request_payment(env);

  // End-to-end fidelity: the bytes accepted on the finance ledger equal the
  // bytes the carrier recorded on the logistics ledger.
  Bytes stl_bl = env.stl->query(env.stl->org_peer_ids(carrier_org).front(), trade_lens_cc,
                                "GetBillOfLading", {to_bytes(purchase_order_ref)},
                                env.stl_carrier->certificate);
  Bytes swt_bl = env.swt->query(env.swt->org_peer_ids(seller_org).front(), we_trade_cc,
                                "GetDispatchDocs", {to_bytes(purchase_order_ref)},
                                env.swt_seller->certificate);
  if (stl_bl == swt_bl) {
    env.transcript.add("fidelity.bl-bytes", "harness",
                       "digest=" + detail::short_hex(sha256(stl_bl)), "match");
  } else {
    env.transcript.fail("fidelity.bl-bytes", "harness", "", "mismatch");
  }
  detail::final_events(env);
  return env.transcript;
}

namespace detail {

inline Transcript& run_tamper(Environment& env) {
  step_purchase_order(env);
  step_issue_lc(env);
  step_export_order(env);
  step_record_bl(env);
  auto heights_before = env.swt->height();
  auto [policy, config] = recorded_acceptance_inputs(env);
  RemoteQueryOptions options;
  options.rng = env.rng;
  try {
    remote_query(*env.swt_seller, env.swt_relay_address(), bl_query_target(), policy, config,
                 options);
    env.transcript.fail("attack.tamper", "swt-seller-client", "", "accepted-tampered-response");
  } catch (const ClientError& e) {
    env.transcript.add("attack.tamper", "swt-seller-client", "reason=" + e.reason(),
                       "rejected: " + e.reason());
    if (e.reason() != "proof-tamper") env.transcript.ok = false;
  }
  if (env.swt->height() != heights_before)
    env.transcript.fail("attack.tamper.height", "harness", "", "unexpected-commit");
  final_events(env);
  return env.transcript;
}

inline Transcript& run_replay(Environment& env) {
  step_purchase_order(env);
  step_issue_lc(env);
  step_export_order(env);
  step_record_bl(env);
  VerifiedRemoteData verified = step_remote_query(env);
  TransactionInputs inputs;
  auto report = step_upload_dispatch_docs(env, verified, &inputs);
  committed_or_throw(report, "UploadDispatchDocs");
  env.transcript.add("10.upload-dispatch-docs", "swt-seller-client",
                     "height=" + std::to_string(report.height), "committed");

  auto height_before = env.swt->height();
  auto replayed = env.swt->submit_transaction(inputs.contract_name, inputs.function_name,
                                              inputs.args, env.swt_seller->certificate,
                                              env.next_nonce());
  if (replayed.committed || replayed.error.find("nonce-replayed") == std::string::npos) {
    env.transcript.fail("attack.replay", "attacker",
                        replayed.committed ? "committed" : "error=" + replayed.error,
                        "replay-not-rejected");
  } else {
    env.transcript.add("attack.replay", "attacker", "error=" + replayed.error,
                       "rejected: nonce-replayed");
  }
  if (env.swt->height() != height_before)
    env.transcript.fail("attack.replay.height", "harness", "", "unexpected-commit");

  // The verdict must be identical on every finance-network peer.
  Bytes nonce_bytes(verified.nonce.begin(), verified.nonce.end());
  Bytes digest_bytes(verified.request_digest.begin(), verified.request_digest.end());
  for (const auto& peer : env.swt->peer_ids()) {
    Bytes raw = env.swt->query(peer, cmdac_contract_name, "validate_proof",
                               {to_bytes(stl_policy_id), digest_bytes, nonce_bytes,
                                verified.result, encode_proof(verified.proof)},
                               env.swt_seller->certificate);
    ProofVerdict verdict = decode_proof_verdict(raw);
    if (!verdict.valid && verdict.reason == "nonce-replayed") {
      env.transcript.add("attack.replay.peer", peer, "", "invalid:nonce-replayed");
    } else {
      env.transcript.fail("attack.replay.peer", peer,
                          verdict.valid ? "valid" : "reason=" + verdict.reason,
                          "unexpected-verdict");
    }
  }
  final_events(env);
  return env.transcript;
}

inline Transcript& run_unauthorized(Environment& env) {
  step_purchase_order(env);
  step_issue_lc(env);
  step_export_order(env);
  step_record_bl(env);
  auto [policy, config] = recorded_acceptance_inputs(env);
  RemoteQueryOptions options;
  options.rng = env.rng;
  try {
    remote_query(*env.swt_buyer, env.swt_relay_address(), bl_query_target(), policy, config,
                 options);
    env.transcript.fail("attack.unauthorized", "swt-buyer-client", "", "access-not-denied");
  } catch (const ClientError& e) {
    if (e.reason() == "denied:access") {
      env.transcript.add("attack.unauthorized", "swt-buyer-client", "reason=" + e.reason(),
                         "denied: access");
    } else {
      env.transcript.fail("attack.unauthorized", "swt-buyer-client", "reason=" + e.reason(),
                          "unexpected-failure");
    }
  }
  // Source-side gating: every logistics peer denies the requestor.
  for (const auto& peer : env.stl->peer_ids()) {
    auto verdict = AccessVerdict::decode(env.stl->query(
        peer, ecc_contract_name, "check_access",
        {env.swt_buyer->certificate.encode(), to_bytes(trade_lens_cc),
         to_bytes("GetBillOfLading")},
        env.swt_buyer->certificate));
    if (!verdict.allowed) {
      env.transcript.add("attack.unauthorized.peer", peer, "reason=" + verdict.reason,
                         "check_access=deny");
    } else {
      env.transcript.fail("attack.unauthorized.peer", peer, "", "check_access=allow");
    }
  }
  final_events(env);
  return env.transcript;
}

inline Transcript& run_censor(Environment& env) {
  step_purchase_order(env);
  step_issue_lc(env);
  step_export_order(env);
  step_record_bl(env);
  auto [policy, config] = recorded_acceptance_inputs(env);

  // Attempt 1 lands on the censoring relay and must time out; the retry
  // rotates to the honest relay.
  RemoteQueryOptions one_shot;
  one_shot.rng = env.rng;
  one_shot.attempts = 1;
  one_shot.deadline = std::chrono::milliseconds(5'000);
  try {
    remote_query(*env.swt_seller, env.swt_relay_address(), bl_query_target(), policy, config,
                 one_shot);
    env.transcript.fail("9.remote-query.attempt-1", "swt-seller-client", "", "censor-missed");
  } catch (const ClientError& e) {
    if (e.reason() == "error:timeout" || e.reason() == "timeout") {
      env.transcript.add("9.remote-query.attempt-1", "swt-seller-client", "reason=" + e.reason(),
                         "timeout");
    } else {
      env.transcript.fail("9.remote-query.attempt-1", "swt-seller-client",
                          "reason=" + e.reason(), "unexpected-failure");
    }
  }
  VerifiedRemoteData verified;
  try {
    verified = remote_query(*env.swt_seller, env.swt_relay_address(), bl_query_target(), policy,
                            config, one_shot);
    env.transcript.add("9.remote-query.attempt-2", "swt-seller-client",
                       "attestations=" + std::to_string(verified.proof.size()),
                       "ok-after-failover");
  } catch (const ClientError& e) {
    env.transcript.fail("9.remote-query.attempt-2", "swt-seller-client", "reason=" + e.reason(),
                        "failover-failed");
    final_events(env);
    return env.transcript;
  }
  auto report = step_upload_dispatch_docs(env, verified);
  committed_or_throw(report, "UploadDispatchDocs");
  env.transcript.add("10.upload-dispatch-docs", "swt-seller-client",
                     "height=" + std::to_string(report.height), "committed");
  step_request_payment(env);
  final_events(env);
  return env.transcript;
}

}  // namespace detail

inline Transcript& run_attack(Environment& env, AttackMode attack) {
  switch (attack) {
    case AttackMode::none: return run_happy_path(env);
    case AttackMode::tamper: return detail::run_tamper(env);
    case AttackMode::replay: return detail::run_replay(env);
    case AttackMode::unauthorized: return detail::run_unauthorized(env);
    case AttackMode::censor: return detail::run_censor(env);
  }
  throw ScenarioError("unknown attack mode");
}

inline Transcript& run(Environment& env) { return run_attack(env, env.spec.attack); }

// Ledger snapshot in the frozen text format, chain verification included.
inline std::string inspect(Environment& env, const std::string& network_id) {
  return env.network(network_id).dump();
}

}  // namespace crosslink::scenario
