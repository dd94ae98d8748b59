// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.
//
// Per-network relay service: serves framed connections, routes requests for
// remote networks via the discovery registry, and drives a network driver
// for requests addressed to its own network. Config-gated fault modes stand
// in for a malicious relay in adversarial runs. The relay never holds a
// decryption key; its observed byte stream is captured for opacity checks.

#pragma once

#include <sys/stat.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "crosslink/bytes.hpp"
#include "crosslink/contracts.hpp"
#include "crosslink/ledger.hpp"
#include "crosslink/net.hpp"
#include "crosslink/wire.hpp"

namespace crosslink {

enum class FaultMode { none, tamper_result, replay_response, drop_requests };

inline const char* to_label(FaultMode m) {
  switch (m) {
    case FaultMode::none: return "none";
    case FaultMode::tamper_result: return "tamper_result";
    case FaultMode::replay_response: return "replay_response";
    case FaultMode::drop_requests: return "drop_requests";
  }
  return "?";
}

inline std::optional<FaultMode> parse_fault_mode(const std::string& s) {
  if (s == "none") return FaultMode::none;
  if (s == "tamper_result") return FaultMode::tamper_result;
  if (s == "replay_response") return FaultMode::replay_response;
  if (s == "drop_requests") return FaultMode::drop_requests;
  return std::nullopt;
}

struct RelayConfig {
  std::string relay_id = "relay";
  std::string local_network_id;
  std::string listen_address = "127.0.0.1:0";  // port 0: kernel-assigned
  std::string registry_path;
  FaultMode fault_mode = FaultMode::none;
  std::chrono::milliseconds outbound_deadline{10'000};
  std::string log_dir;  // when set, writes <relay_id>.log and <relay_id>.wire
};

// File-backed relay discovery: lines of `network_id<TAB>host:port`, one per
// relay; repeated network ids form an ordered redundancy list. Reloaded
// whenever the file changes.
class DiscoveryRegistry {
 public:
  explicit DiscoveryRegistry(std::string path) : path_(std::move(path)) {}

  std::vector<std::string> lookup(const std::string& network_id) {
    std::lock_guard lock(mutex_);
    reload_if_changed();
    auto it = entries_.find(network_id);
    if (it == entries_.end()) return {};
    return it->second;
  }

  static void write_file(const std::string& path,
                         const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out(path, std::ios::trunc);
    for (const auto& [network, address] : entries) out << network << "\t" << address << "\n";
  }

 private:
  void reload_if_changed() {
    struct stat st{};
    if (::stat(path_.c_str(), &st) != 0) {
      entries_.clear();
      have_stat_ = false;
      return;
    }
    if (have_stat_ && st.st_mtim.tv_sec == mtime_sec_ && st.st_mtim.tv_nsec == mtime_nsec_ &&
        st.st_size == size_)
      return;
    entries_.clear();
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos) continue;
      entries_[line.substr(0, tab)].push_back(line.substr(tab + 1));
    }
    mtime_sec_ = st.st_mtim.tv_sec;
    mtime_nsec_ = st.st_mtim.tv_nsec;
    size_ = st.st_size;
    have_stat_ = true;
  }

  std::string path_;
  std::mutex mutex_;
  std::map<std::string, std::vector<std::string>> entries_;
  bool have_stat_ = false;
  time_t mtime_sec_ = 0;
  long mtime_nsec_ = 0;
  off_t size_ = 0;
};

// Translates network-neutral queries into calls on a concrete ledger.
class NetworkDriver {
 public:
  struct Result {
    ResponseStatus status = ResponseStatus::error;
    std::string reason;
    std::optional<HybridCiphertext> encrypted_result;
    std::vector<Attestation> attestations;
  };

  virtual ~NetworkDriver() = default;
  virtual Result execute_query(const QueryRequest& request) = 0;
};

// Driver for the simulated permissioned network. Selects one live peer per
// org named in the request's verification policy (lowest peer_id first),
// runs the contract query on each, and assembles per-peer attestations:
// metadata signed in plaintext with the peer key, then encrypted for the
// requestor, with the result encrypted via an ECC invocation.
class SimNetworkDriver : public NetworkDriver {
 public:
  explicit SimNetworkDriver(Network& network) : network_(network) {}

  Result execute_query(const QueryRequest& request) override {
    Result out;
    std::vector<std::string> selected;
    for (const auto& org : request.verification_policy.required_orgs) {
      auto peers = network_.org_peer_ids(org);
      if (peers.empty()) {
        out.status = ResponseStatus::denied;
        out.reason = "policy-unsatisfiable-at-source";
        return out;
      }
      selected.push_back(peers.front());
    }
    if (selected.empty()) {
      out.status = ResponseStatus::denied;
      out.reason = "policy-unsatisfiable-at-source";
      return out;
    }

    Digest req_digest = request_digest(request);
    for (const auto& peer_id : selected) {
      Bytes result;
      try {
        result = network_.query(peer_id, request.contract_name, request.function_name,
                                request.args, request.requestor_cert, request.nonce);
      } catch (const ContractError& e) {
        std::string what = e.what();
        if (what.rfind("access-denied", 0) == 0) {
          out.status = ResponseStatus::denied;
          out.reason = "access";
        } else {
          out.status = ResponseStatus::error;
          out.reason = what;
        }
        out.encrypted_result.reset();
        out.attestations.clear();
        return out;
      } catch (const LedgerError& e) {
        out.status = ResponseStatus::error;
        out.reason = e.what();
        out.encrypted_result.reset();
        out.attestations.clear();
        return out;
      }

      if (!out.encrypted_result) {
        Bytes ct_raw = network_.query(
            peer_id, ecc_contract_name, "encrypt_for",
            {request.requestor_cert.encode(), result}, request.requestor_cert, request.nonce);
        out.encrypted_result = HybridCiphertext::decode(ct_raw);
      }

      const Peer& peer = network_.peer(peer_id);
      AttestationMetadata meta;
      meta.network_id = network_.network_id();
      meta.peer_id = peer_id;
      meta.org_id = peer.org_id;
      meta.request_digest = req_digest;
      meta.nonce = request.nonce;
      meta.result = result;
      Bytes plaintext = meta.canonical_bytes();

      Attestation att;
      att.signer_cert = peer.certificate;
      att.signature = sign(peer.keys.private_key, plaintext);
      att.encrypted_metadata = hybrid_encrypt(request.requestor_cert.enc_public_key, plaintext);
      out.attestations.push_back(std::move(att));
    }
    out.status = ResponseStatus::ok;
    return out;
  }

 private:
  Network& network_;
};

class Relay {
 public:
  explicit Relay(RelayConfig config)
      : config_(std::move(config)), registry_(config_.registry_path) {
    if (!config_.log_dir.empty()) {
      log_file_.open(config_.log_dir + "/" + config_.relay_id + ".log", std::ios::app);
      wire_file_.open(config_.log_dir + "/" + config_.relay_id + ".wire",
                      std::ios::app | std::ios::binary);
    }
  }

  ~Relay() { stop(); }

  void bind_driver(const std::string& network_id, std::shared_ptr<NetworkDriver> driver) {
    drivers_[network_id] = std::move(driver);
  }

  void start() {
    listener_ = std::make_unique<Listener>(parse_endpoint(config_.listen_address));
    stopping_ = false;
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  // Graceful: stops accepting, then waits for in-flight handlers to finish.
  void stop() {
    if (!listener_) return;
    stopping_ = true;
    listener_->shutdown();
    listener_->close();
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> workers;
    {
      std::lock_guard lock(workers_mutex_);
      workers.swap(workers_);
    }
    for (auto& t : workers)
      if (t.joinable()) t.join();
    listener_.reset();
  }

  std::uint16_t port() const { return listener_ ? listener_->port() : 0; }
  std::string address() const { return "127.0.0.1:" + std::to_string(port()); }
  const RelayConfig& config() const { return config_; }

  // Dispatch used by the serving loop; exposed for direct-call tests.
  QueryResponse process(const QueryRequest& request) {
    if (request.dest_network_id == config_.local_network_id ||
        drivers_.count(request.dest_network_id))
      return handle_inbound(request);
    return route_outbound(request);
  }

  QueryResponse handle_inbound(const QueryRequest& request) {
    auto it = drivers_.find(request.dest_network_id);
    if (it == drivers_.end())
      return QueryResponse::failure(request.request_id, ResponseStatus::denied,
                                    "unknown-local-network");
    NetworkDriver::Result result = it->second->execute_query(request);
    QueryResponse response;
    response.request_id = request.request_id;
    response.status = result.status;
    response.reason = result.reason;
    response.encrypted_result = std::move(result.encrypted_result);
    response.attestations = std::move(result.attestations);
    return response;
  }

  QueryResponse route_outbound(const QueryRequest& request) {
    auto addresses = registry_.lookup(request.dest_network_id);
    if (addresses.empty())
      return QueryResponse::failure(request.request_id, ResponseStatus::denied, "no-route");
    std::size_t attempt;
    {
      std::lock_guard lock(attempts_mutex_);
      attempt = attempt_counters_[request.dest_network_id]++;
    }
    const std::string& address = addresses[attempt % addresses.size()];
    auto deadline = std::chrono::steady_clock::now() + config_.outbound_deadline;
    auto remaining = [&] {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      return left.count() > 0 ? left : std::chrono::milliseconds(0);
    };
    try {
      Socket sock = connect_to(parse_endpoint(address), remaining());
      Bytes frame = encode_frame(request);
      capture_wire(frame);
      log_line("fwd-send", request.request_id, "to=" + address);
      write_all(sock, frame, remaining());
      Bytes reply = read_frame(sock, remaining());
      if (reply.empty())
        return QueryResponse::failure(request.request_id, ResponseStatus::error, "unreachable");
      capture_wire(reply);
      WireMessage message = decode_frame(reply);
      auto* response = std::get_if<QueryResponse>(&message);
      if (!response || response->request_id != request.request_id)
        return QueryResponse::failure(request.request_id, ResponseStatus::error, "bad-response");
      log_line("fwd-recv", request.request_id, to_label(response->status));
      return std::move(*response);
    } catch (const NetError& e) {
      if (e.kind() == NetError::Kind::timeout)
        return QueryResponse::failure(request.request_id, ResponseStatus::error, "timeout");
      return QueryResponse::failure(request.request_id, ResponseStatus::error, "unreachable");
    } catch (const CodecError&) {
      return QueryResponse::failure(request.request_id, ResponseStatus::error, "bad-response");
    }
  }

  // Raw bytes observed on this relay's server side plus what it forwarded:
  // the material scanned by the opacity checks.
  Bytes wire_transcript() const {
    std::lock_guard lock(wire_mutex_);
    return wire_;
  }

  std::string log_text() const {
    std::lock_guard lock(log_mutex_);
    return log_.str();
  }

 private:
  void accept_loop() {
    while (!stopping_) {
      Socket conn;
      try {
        conn = listener_->accept();
      } catch (const NetError&) {
        break;
      }
      std::lock_guard lock(workers_mutex_);
      if (stopping_) break;
      workers_.emplace_back(
          [this](Socket sock) { handle_connection(std::move(sock)); }, std::move(conn));
    }
  }

  void handle_connection(Socket sock) {
    while (!stopping_) {
      pollfd pfd{sock.fd(), POLLIN, 0};
      int rc = ::poll(&pfd, 1, 200);
      if (rc < 0) break;
      if (rc == 0) continue;
      Bytes frame;
      try {
        frame = read_frame(sock, std::chrono::milliseconds(5000));
      } catch (const NetError&) {
        break;  // garbage length prefix or mid-frame close: drop connection
      }
      if (frame.empty()) break;  // clean EOF
      capture_wire(frame);
      QueryRequest request;
      try {
        WireMessage message = decode_frame(frame);
        auto* req = std::get_if<QueryRequest>(&message);
        if (!req) throw CodecError("expected a request frame");
        request = std::move(*req);
      } catch (const CodecError&) {
        log_line("recv", RequestId{}, "decode-error");
        break;  // close; relay keeps serving other connections
      }
      log_line("recv", request.request_id, "dest=" + request.dest_network_id);

      if (config_.fault_mode == FaultMode::drop_requests) {
        log_line("drop", request.request_id, "censored");
        hold_until_closed(sock);
        break;
      }

      QueryResponse response;
      bool replayed = false;
      if (config_.fault_mode == FaultMode::replay_response) {
        std::lock_guard lock(fault_mutex_);
        if (replayed_response_) {
          response = *replayed_response_;
          response.request_id = request.request_id;  // stale payload, fresh envelope
          replayed = true;
        }
      }
      if (replayed) {
        log_line("replay", request.request_id, "cached-response");
      } else {
        response = process(request);
        if (config_.fault_mode == FaultMode::tamper_result) tamper(response);
        if (config_.fault_mode == FaultMode::replay_response &&
            response.status == ResponseStatus::ok) {
          std::lock_guard lock(fault_mutex_);
          if (!replayed_response_) replayed_response_ = response;
        }
      }

      Bytes reply = encode_frame(response);
      capture_wire(reply);
      log_line("send", response.request_id, to_label(response.status));
      try {
        write_all(sock, reply, std::chrono::milliseconds(5000));
      } catch (const NetError&) {
        break;
      }
    }
  }

  void hold_until_closed(Socket& sock) {
    while (!stopping_) {
      pollfd pfd{sock.fd(), POLLIN, 0};
      int rc = ::poll(&pfd, 1, 100);
      if (rc < 0) break;
      if (rc > 0) {
        std::uint8_t probe;
        ssize_t n = ::recv(sock.fd(), &probe, 1, MSG_PEEK);
        if (n == 0) break;  // peer gave up
        if (n < 0) break;
        // More bytes from the peer while censoring: swallow them.
        ::recv(sock.fd(), &probe, 1, 0);
      }
    }
  }

  static void tamper(QueryResponse& response) {
    if (response.status != ResponseStatus::ok || !response.encrypted_result) return;
    if (!response.encrypted_result->body.empty()) response.encrypted_result->body[0] ^= 0x01;
  }

  void capture_wire(ByteView frame) {
    std::lock_guard lock(wire_mutex_);
    append(wire_, frame);
    if (wire_file_.is_open()) {
      wire_file_.write(reinterpret_cast<const char*>(frame.data()),
                       static_cast<std::streamsize>(frame.size()));
      wire_file_.flush();
    }
  }

  void log_line(const std::string& direction, const RequestId& id, const std::string& status) {
    auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count();
    std::ostringstream line;
    line << now << " | " << config_.relay_id << " | " << direction << " | "
         << crosslink::to_hex(ByteView(id.data(), id.size())) << " | " << status << "\n";
    std::lock_guard lock(log_mutex_);
    log_ << line.str();
    if (log_file_.is_open()) {
      log_file_ << line.str();
      log_file_.flush();
    }
  }

  RelayConfig config_;
  DiscoveryRegistry registry_;
  std::map<std::string, std::shared_ptr<NetworkDriver>> drivers_;
  std::unique_ptr<Listener> listener_;
  std::thread accept_thread_;
  std::vector<std::thread> workers_;
  std::mutex workers_mutex_;
  std::atomic<bool> stopping_{false};
  std::mutex attempts_mutex_;
  std::map<std::string, std::size_t> attempt_counters_;
  std::mutex fault_mutex_;
  std::optional<QueryResponse> replayed_response_;
  mutable std::mutex wire_mutex_;
  Bytes wire_;
  std::ofstream wire_file_;
  mutable std::mutex log_mutex_;
  std::ostringstream log_;
  std::ofstream log_file_;
};

}  // namespace crosslink
