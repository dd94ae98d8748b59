// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.
//
// Standalone relay process: binds a port, announces it on stdout as
// "LISTENING <port>", and serves until SIGTERM/SIGINT. Without driver
// bindings it acts as a pure forwarder (or censor, via --fault).

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "crosslink/relay.hpp"

namespace {

// key=value config file; flags override file values.
void apply_config_file(const std::string& path, crosslink::RelayConfig& config) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (key == "relay_id") {
      config.relay_id = value;
    } else if (key == "local_network_id") {
      config.local_network_id = value;
    } else if (key == "listen") {
      config.listen_address = value;
    } else if (key == "registry") {
      config.registry_path = value;
    } else if (key == "log_dir") {
      config.log_dir = value;
    } else if (key == "deadline_ms") {
      config.outbound_deadline = std::chrono::milliseconds(std::stoul(value));
    } else if (key == "fault") {
      auto mode = crosslink::parse_fault_mode(value);
      if (!mode) throw std::runtime_error("bad fault mode '" + value + "'");
      config.fault_mode = *mode;
    } else {
      throw std::runtime_error("unknown config key '" + key + "'");
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crosslink relay service"};
  std::string config_path;
  std::string fault = "none";
  long deadline_ms = -1;
  crosslink::RelayConfig config;

  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--id", config.relay_id, "relay identifier for log files");
  app.add_option("--network", config.local_network_id, "network this relay acts for");
  app.add_option("--listen", config.listen_address, "listen address (host:port, port 0 = any)");
  app.add_option("--registry", config.registry_path, "discovery registry file");
  app.add_option("--fault", fault, "fault mode: none|tamper_result|replay_response|drop_requests");
  app.add_option("--deadline-ms", deadline_ms, "outbound response deadline in milliseconds");
  app.add_option("--log-dir", config.log_dir, "directory for .log/.wire transcripts");
  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) apply_config_file(config_path, config);
    if (app.count("--fault") > 0 || config_path.empty()) {
      auto mode = crosslink::parse_fault_mode(fault);
      if (!mode) throw std::runtime_error("bad fault mode '" + fault + "'");
      if (app.count("--fault") > 0) config.fault_mode = *mode;
    }
    if (deadline_ms >= 0) config.outbound_deadline = std::chrono::milliseconds(deadline_ms);

    // Block termination signals before any thread exists so sigwait gets
    // them instead of a worker thread.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    crosslink::Relay relay(config);
    relay.start();
    std::cout << "LISTENING " << relay.port() << std::endl;

    int sig = 0;
    sigwait(&set, &sig);
    relay.stop();
  } catch (const std::exception& e) {
    std::cerr << "relayd: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
