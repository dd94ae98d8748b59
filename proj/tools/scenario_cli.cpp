// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.
//
// Scenario driver: builds the two simulated networks with their relays,
// runs the trade flow (or an adversarial variant) and emits a transcript
// plus ledger dumps. Exit code 0 iff the expected verdicts were reached.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "crosslink/scenario.hpp"

namespace sc = crosslink::scenario;

namespace {

std::string default_relayd_path(const char* argv0) {
  std::error_code ec;
  auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
  std::filesystem::path base = ec ? std::filesystem::path(argv0) : self;
  return (base.parent_path() / "relayd").string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << content;
}

void write_dumps(sc::Environment& env, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const std::string id : {sc::stl_network_id, sc::swt_network_id}) {
    auto& net = env.network(id);
    write_file(dir + "/" + id + ".dump", net.dump());
    write_file(dir + "/" + id + ".blocks.jsonl", net.blocks_jsonl(net.peer_ids().front()));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crosslink trade interoperation scenario"};
  app.require_subcommand(1);

  sc::ScenarioSpec spec;
  std::string attack = "none";
  std::string transcript_path;
  std::string dump_dir;
  app.add_option("--seed", spec.seed, "deterministic seed (keys, nonces, transcript)");
  app.add_option("--outdir", spec.outdir, "directory for relay logs and the registry");
  app.add_flag("--multiprocess", spec.multiprocess, "spawn forwarder relays as processes");
  app.add_option("--relayd", spec.relayd_path, "path to the relayd binary");

  auto* setup_cmd = app.add_subcommand("setup", "build networks, relays and interop records");
  auto* run_cmd = app.add_subcommand("run", "run the trade flow end to end");
  run_cmd->add_option("--attack", attack, "none|tamper|replay|unauthorized|censor");
  run_cmd->add_option("--transcript", transcript_path, "write the transcript to this file");
  run_cmd->add_option("--dump-dir", dump_dir, "write ledger dumps to this directory");
  auto* inspect_cmd = app.add_subcommand("inspect", "print a ledger dump after the happy path");
  std::string inspect_network;
  inspect_cmd->add_option("network", inspect_network, "network id")->required();

  CLI11_PARSE(app, argc, argv);

  auto mode = sc::parse_attack_mode(attack);
  if (!mode) {
    std::cerr << "unknown attack mode '" << attack << "'\n";
    return 2;
  }
  spec.attack = *mode;
  if (spec.multiprocess && spec.relayd_path.empty())
    spec.relayd_path = default_relayd_path(argv[0]);

  try {
    if (setup_cmd->parsed()) {
      auto env = sc::setup(spec);
      std::cout << env->transcript.to_text();
      return env->transcript.ok ? 0 : 1;
    }
    if (run_cmd->parsed()) {
      auto env = sc::setup(spec);
      sc::run(*env);
      std::string text = env->transcript.to_text();
      std::cout << text;
      if (!transcript_path.empty()) write_file(transcript_path, text);
      if (!dump_dir.empty()) write_dumps(*env, dump_dir);
      return env->transcript.ok ? 0 : 1;
    }
    if (inspect_cmd->parsed()) {
      spec.attack = sc::AttackMode::none;
      auto env = sc::setup(spec);
      sc::run_happy_path(*env);
      std::cout << sc::inspect(*env, inspect_network);
      return env->transcript.ok ? 0 : 1;
    }
  } catch (const sc::ScenarioError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "scenario: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
