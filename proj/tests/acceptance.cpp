// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.
//
// Acceptance suite: one test case per acceptance criterion, each printing a
// [PASS] line when it holds. Run via `ctest -R acceptance` or directly:
// build/tests/acceptance_tests.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <tuple>

#include "crosslink/client.hpp"
#include "crosslink/scenario.hpp"
#include "test_support.hpp"
#include "wire_gen.hpp"

using namespace crosslink;
namespace sc = crosslink::scenario;

namespace {

void pass(int n, const std::string& label) {
  std::printf("[PASS] criterion %d: %s\n", n, label.c_str());
  std::fflush(stdout);
}

sc::ScenarioSpec spec_with(std::uint64_t seed, sc::AttackMode attack = sc::AttackMode::none) {
  sc::ScenarioSpec spec;
  spec.seed = seed;
  spec.attack = attack;
  return spec;
}

std::string temp_dir(const std::string& tag) {
  auto path = std::filesystem::temp_directory_path() / ("crosslink-acc-" + tag + "-XXXXXX");
  std::string tmpl = path.string();
  std::vector<char> buf(tmpl.begin(), tmpl.end());
  buf.push_back('\0');
  REQUIRE(::mkdtemp(buf.data()) != nullptr);
  return std::string(buf.data());
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(CROSSLINK_SCENARIO_BIN) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

// Raw framed exchange with a relay, so tests can hold the response bytes.
Bytes raw_exchange(const std::string& relay_address, const QueryRequest& request) {
  Socket sock = connect_to(parse_endpoint(relay_address), std::chrono::milliseconds(10'000));
  write_all(sock, encode_frame(request), std::chrono::milliseconds(10'000));
  Bytes reply = read_frame(sock, std::chrono::milliseconds(10'000));
  REQUIRE_FALSE(reply.empty());
  return reply;
}

// The Fig. 3 preamble shared by several criteria: everything up to the
// cross-network query.
void run_preamble(sc::Environment& env) {
  REQUIRE(env.swt
              ->submit_transaction(sc::we_trade_cc, "IssueLC",
                                   {to_bytes(sc::purchase_order_ref), to_bytes("terms")},
                                   env.swt_buyer->certificate, env.next_nonce())
              .committed);
  REQUIRE(env.stl
              ->submit_transaction(sc::trade_lens_cc, "CreateExportOrder",
                                   {to_bytes(sc::purchase_order_ref), to_bytes("electronics")},
                                   env.stl_seller->certificate, env.next_nonce())
              .committed);
  REQUIRE(env.stl
              ->submit_transaction(
                  sc::trade_lens_cc, "RecordBillOfLading",
                  {to_bytes(sc::purchase_order_ref),
                   to_bytes(sc::bill_of_lading_document(sc::purchase_order_ref))},
                  env.stl_carrier->certificate, env.next_nonce())
              .committed);
}

std::pair<VerificationPolicy, ForeignNetworkConfig> recorded_inputs(sc::Environment& env) {
  auto policy = VerificationPolicy::decode(
      env.swt->query("seller-peer-0", cmdac_contract_name, "get_policy",
                     {to_bytes(sc::stl_policy_id)}, env.swt_seller->certificate));
  auto config = ForeignNetworkConfig::decode(
      env.swt->query("seller-peer-0", cmdac_contract_name, "get_config",
                     {to_bytes(sc::stl_network_id)}, env.swt_seller->certificate));
  return {policy, config};
}

}  // namespace

TEST_CASE("criterion 1: end-to-end happy path under 10 seconds") {
  auto start = std::chrono::steady_clock::now();
  auto env = sc::setup(spec_with(1));
  auto& transcript = sc::run_happy_path(*env);
  auto elapsed = std::chrono::steady_clock::now() - start;

  REQUIRE(transcript.ok);
  bool uploaded = false;
  for (const auto& e : transcript.events)
    if (e.step == "10.upload-dispatch-docs" && e.verdict == "committed") uploaded = true;
  REQUIRE(uploaded);

  Bytes stl_bl = env->stl->query("carrier-peer-0", sc::trade_lens_cc, "GetBillOfLading",
                                 {to_bytes(sc::purchase_order_ref)},
                                 env->stl_carrier->certificate);
  Bytes swt_bl = env->swt->query("buyer-peer-0", sc::we_trade_cc, "GetDispatchDocs",
                                 {to_bytes(sc::purchase_order_ref)},
                                 env->swt_seller->certificate);
  REQUIRE(stl_bl == swt_bl);
  REQUIRE(env->stl->verify_all_chains());
  REQUIRE(env->swt->verify_all_chains());
  REQUIRE(elapsed < std::chrono::seconds(10));

  // The CLI entry point reports the same outcome.
  std::string outdir = temp_dir("cli1");
  REQUIRE(run_cli("--seed 1 --outdir " + outdir + " run") == 0);
  std::filesystem::remove_all(outdir);
  pass(1, "happy path commits UploadDispatchDocs, B/L bytes match, chains verify");
}

TEST_CASE("criterion 2: relay transcripts never contain the plaintext document marker") {
  auto env = sc::setup(spec_with(1));
  sc::run_happy_path(*env);
  Bytes marker = to_bytes(sc::bl_marker);
  REQUIRE(marker.size() == 24);
  auto transcripts = env->relay_wire_transcripts();
  REQUIRE(transcripts.size() == 2);
  std::size_t total = 0;
  for (const auto& wire : transcripts) {
    REQUIRE_FALSE(wire.empty());
    REQUIRE_FALSE(contains_bytes(wire, marker));
    total += wire.size();
  }
  REQUIRE(total > 0);
  pass(2, "zero marker occurrences in relay byte transcripts (exact substring)");
}

TEST_CASE("criterion 3: every single-byte tamper of the response is rejected") {
  auto env = sc::setup(spec_with(1));
  run_preamble(*env);
  auto [policy, config] = recorded_inputs(*env);

  Rng rng = env->rng;
  QueryRequest request;
  request.request_id = rng.array<16>();
  request.dest_network_id = sc::stl_network_id;
  request.ledger_id = sc::stl_network_id;
  request.contract_name = sc::trade_lens_cc;
  request.function_name = "GetBillOfLading";
  request.args = {to_bytes(sc::purchase_order_ref)};
  request.verification_policy = policy;
  request.requestor_cert = env->swt_seller->certificate;
  request.nonce = rng.array<16>();

  Bytes frame = raw_exchange(env->swt_relay_address(), request);
  REQUIRE(frame.size() <= 64 * 1024);

  auto attempt_destination = [&](const VerifiedRemoteData& verified) {
    auto inputs = build_dependent_transaction(verified, sc::we_trade_cc, "UploadDispatchDocs",
                                              {to_bytes(sc::purchase_order_ref)});
    return env->swt->submit_transaction(inputs.contract_name, inputs.function_name, inputs.args,
                                        env->swt_seller->certificate, env->next_nonce());
  };

  std::size_t rejected = 0;
  std::vector<std::size_t> accepted_positions;
  for (std::size_t pos = 0; pos < frame.size(); ++pos) {
    Bytes mutated = frame;
    mutated[pos] ^= 0x01;
    try {
      WireMessage msg = decode_frame(mutated);
      auto* response = std::get_if<QueryResponse>(&msg);
      if (!response) {
        ++rejected;
        continue;
      }
      auto verified =
          process_response(request, *response, *env->swt_seller, policy, config);
      auto report = attempt_destination(verified);
      if (!report.committed) {
        ++rejected;
      } else {
        accepted_positions.push_back(pos);
      }
    } catch (const CodecError&) {
      ++rejected;
    } catch (const ClientError&) {
      ++rejected;
    }
  }
  CAPTURE(accepted_positions);
  REQUIRE(accepted_positions.empty());
  REQUIRE(rejected == frame.size());

  // The pristine frame flows through, proving the rejections had teeth.
  WireMessage msg = decode_frame(frame);
  auto verified = process_response(request, std::get<QueryResponse>(msg), *env->swt_seller,
                                   policy, config);
  REQUIRE(attempt_destination(verified).committed);
  pass(3, "tamper sweep over " + std::to_string(frame.size()) +
              " byte positions: 100% rejected at the destination");
}

TEST_CASE("criterion 4: proof replay is rejected identically on all four peers") {
  auto env = sc::setup(spec_with(1));
  run_preamble(*env);
  auto [policy, config] = recorded_inputs(*env);
  RemoteQueryOptions options;
  options.rng = env->rng;
  auto verified = remote_query(*env->swt_seller, env->swt_relay_address(),
                               sc::bl_query_target(), policy, config, options);
  auto inputs = build_dependent_transaction(verified, sc::we_trade_cc, "UploadDispatchDocs",
                                            {to_bytes(sc::purchase_order_ref)});
  REQUIRE(env->swt
              ->submit_transaction(inputs.contract_name, inputs.function_name, inputs.args,
                                   env->swt_seller->certificate, env->next_nonce())
              .committed);

  auto replayed = env->swt->submit_transaction(inputs.contract_name, inputs.function_name,
                                               inputs.args, env->swt_seller->certificate,
                                               env->next_nonce());
  REQUIRE_FALSE(replayed.committed);
  REQUIRE(replayed.error.find("nonce-replayed") != std::string::npos);

  std::vector<Bytes> args = {to_bytes(sc::stl_policy_id),
                             copy_bytes(digest_view(verified.request_digest)),
                             Bytes(verified.nonce.begin(), verified.nonce.end()),
                             verified.result, encode_proof(verified.proof)};
  auto peers = env->swt->peer_ids();
  REQUIRE(peers.size() == 4);
  std::set<std::string> verdicts;
  for (const auto& peer : peers) {
    Bytes raw = env->swt->query(peer, cmdac_contract_name, "validate_proof", args,
                                env->swt_seller->certificate);
    verdicts.insert(to_string(raw));
  }
  REQUIRE(verdicts == std::set<std::string>{"invalid:nonce-replayed"});
  pass(4, "replayed proof rejected with nonce-replayed, identical on all 4 peers");
}

TEST_CASE("criterion 5: exposure-control matrix matches brute force on 24/24 cells") {
  auto env = sc::setup(spec_with(1));

  const std::vector<std::string> networks = {sc::swt_network_id, sc::stl_network_id};
  const std::vector<std::string> orgs = {sc::seller_org, sc::carrier_org, sc::buyer_org};
  const std::vector<std::string> contracts = {sc::trade_lens_cc, sc::we_trade_cc};
  const std::vector<std::string> functions = {"GetBillOfLading", "RecordBillOfLading"};

  const std::set<std::tuple<std::string, std::string, std::string, std::string>> rules = {
      {sc::swt_network_id, sc::seller_org, sc::trade_lens_cc, "GetBillOfLading"}};

  // Requestor certificates per (network, org): issued by the real authority
  // where one exists, by a self-made root otherwise (must deny either way).
  std::map<std::pair<std::string, std::string>, Certificate> certs;
  certs[{sc::swt_network_id, sc::seller_org}] = env->swt_seller->certificate;
  certs[{sc::swt_network_id, sc::buyer_org}] = env->swt_buyer->certificate;
  int seed = 60'000;
  for (const auto& net : networks) {
    for (const auto& org : orgs) {
      if (certs.count({net, org})) continue;
      RootAuthority forged = RootAuthority::create(org, net, seed++);
      certs[{net, org}] =
          forged.issue("matrix-client", SubjectKind::client, KeyPair::from_seed(seed++));
    }
  }

  int cells = 0;
  int matches = 0;
  for (const auto& net : networks) {
    for (const auto& org : orgs) {
      for (const auto& contract : contracts) {
        for (const auto& fn : functions) {
          const Certificate& cert = certs.at({net, org});
          auto verdict = AccessVerdict::decode(env->stl->query(
              "seller-peer-0", ecc_contract_name, "check_access",
              {cert.encode(), to_bytes(contract), to_bytes(fn)}, cert));
          bool expected = rules.count({net, org, contract, fn}) > 0;
          ++cells;
          if (verdict.allowed == expected) ++matches;
          CHECK(verdict.allowed == expected);
        }
      }
    }
  }
  REQUIRE(cells == 24);
  REQUIRE(matches == 24);
  pass(5, "allow/deny matrix equals exact-match brute force (24/24)");
}

TEST_CASE("criterion 6: policy clause agrees with subset enumeration (16 subsets x 2 policies)") {
  auto env = sc::setup(spec_with(1));

  // Four-peer pool from the finance network, attesting a synthetic result.
  ForeignNetworkConfig pool_config = ForeignNetworkConfig::of(*env->swt);
  Digest digest = sha256(to_bytes("subset-request"));
  Nonce nonce{};
  nonce.fill(0x6e);
  Bytes result = to_bytes("subset-result");

  std::vector<ProofEntry> pool;
  for (const auto& peer_id : env->swt->peer_ids()) {
    const Peer& peer = env->swt->peer(peer_id);
    ProofEntry entry;
    entry.signer_cert = peer.certificate;
    entry.metadata.network_id = env->swt->network_id();
    entry.metadata.peer_id = peer_id;
    entry.metadata.org_id = peer.org_id;
    entry.metadata.request_digest = digest;
    entry.metadata.nonce = nonce;
    entry.metadata.result = result;
    entry.signature = sign(peer.keys.private_key, entry.metadata.canonical_bytes());
    pool.push_back(entry);
  }
  REQUIRE(pool.size() == 4);

  std::vector<VerificationPolicy> policies(2);
  policies[0].policy_id = "one-org";
  policies[0].network_id = env->swt->network_id();
  policies[0].required_orgs = {sc::buyer_org};
  policies[1].policy_id = "two-orgs";
  policies[1].network_id = env->swt->network_id();
  policies[1].required_orgs = {sc::buyer_org, sc::seller_org};

  int agreements = 0;
  for (const auto& policy : policies) {
    for (unsigned mask = 0; mask < 16; ++mask) {
      Proof subset;
      for (int bit = 0; bit < 4; ++bit)
        if (mask & (1u << bit)) subset.push_back(pool[bit]);

      bool expected = true;  // brute force: org coverage by distinct peers
      for (const auto& org : policy.required_orgs) {
        std::set<std::string> peers;
        for (const auto& entry : subset)
          if (entry.metadata.org_id == org) peers.insert(entry.metadata.peer_id);
        if (peers.empty()) expected = false;
      }

      auto verdict = check_proof_clauses(policy, pool_config, digest, nonce, result, subset);
      REQUIRE(verdict.valid == expected);
      ++agreements;
    }
  }
  REQUIRE(agreements == 32);
  pass(6, "clause (g) equals brute-force coverage on all 16 subsets for both policies");
}

TEST_CASE("criterion 7: redundant relay failover completes; censor-only fails in time") {
  // With a censoring relay listed first and an honest one second, the
  // client's retry completes.
  auto env = sc::setup(spec_with(1, sc::AttackMode::censor));
  run_preamble(*env);
  auto [policy, config] = recorded_inputs(*env);
  RemoteQueryOptions options;
  options.rng = env->rng;
  options.attempts = 2;
  options.deadline = std::chrono::milliseconds(10'000);
  auto verified = remote_query(*env->swt_seller, env->swt_relay_address(),
                               sc::bl_query_target(), policy, config, options);
  REQUIRE(verified.proof.size() == 2);

  // With only the censoring relay registered, the query fails within the
  // 10-second deadline.
  DiscoveryRegistry::write_file(
      env->registry_path,
      {{sc::stl_network_id, env->censor_relay ? env->censor_relay->address()
                                              : env->censor_child->address()},
       {sc::swt_network_id, env->swt_relay_address()}});
  auto start = std::chrono::steady_clock::now();
  bool failed = false;
  std::string reason;
  try {
    remote_query(*env->swt_seller, env->swt_relay_address(), sc::bl_query_target(),
                 policy, config, options);
  } catch (const ClientError& e) {
    failed = true;
    reason = e.reason();
  }
  auto elapsed = std::chrono::steady_clock::now() - start;
  REQUIRE(failed);
  REQUIRE(reason == "error:timeout");
  REQUIRE(elapsed < std::chrono::seconds(10));
  pass(7, "failover succeeds with a redundant relay; censor-only fails within deadline");
}

TEST_CASE("criterion 8: two seed-1 runs are byte-identical (transcripts and dumps)") {
  // Library-level determinism.
  auto run = [](std::uint64_t seed) {
    auto env = sc::setup(spec_with(seed));
    sc::run_happy_path(*env);
    return std::tuple(env->transcript.to_text(), sc::inspect(*env, sc::stl_network_id),
                      sc::inspect(*env, sc::swt_network_id));
  };
  auto first = run(1);
  auto second = run(1);
  REQUIRE(first == second);

  // CLI-level determinism, transcripts and dumps from two processes.
  std::string d1 = temp_dir("det1");
  std::string d2 = temp_dir("det2");
  REQUIRE(run_cli("--seed 1 --outdir " + d1 + " run --transcript " + d1 +
                  "/t.txt --dump-dir " + d1 + "/dumps") == 0);
  REQUIRE(run_cli("--seed 1 --outdir " + d2 + " run --transcript " + d2 +
                  "/t.txt --dump-dir " + d2 + "/dumps") == 0);
  CHECK(test::read_text_file(d1 + "/t.txt") == test::read_text_file(d2 + "/t.txt"));
  for (const std::string net : {sc::stl_network_id, sc::swt_network_id}) {
    CHECK(test::read_text_file(d1 + "/dumps/" + net + ".dump") ==
          test::read_text_file(d2 + "/dumps/" + net + ".dump"));
  }
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
  pass(8, "transcripts and ledger dumps byte-identical across runs");
}

TEST_CASE("criterion 9: wire conformance: goldens plus 10000-message bijection") {
  CHECK(encode_frame(test::golden_request()) ==
        test::read_hex_fixture("golden_request.frame.hex"));
  CHECK(encode_frame(test::golden_response()) ==
        test::read_hex_fixture("golden_response.frame.hex"));

  Bytes request_fixture = test::read_hex_fixture("golden_request.frame.hex");
  WireMessage msg = decode_frame(request_fixture);
  CHECK(encode_frame(std::get<QueryRequest>(msg)) == request_fixture);
  Bytes response_fixture = test::read_hex_fixture("golden_response.frame.hex");
  WireMessage rmsg = decode_frame(response_fixture);
  CHECK(encode_frame(std::get<QueryResponse>(rmsg)) == response_fixture);

  Rng rng = Rng::seeded(424242);
  int round_trips = 0;
  for (int i = 0; i < 5000; ++i) {
    QueryRequest q = test::random_request(rng);
    Bytes frame = encode_frame(q);
    WireMessage m = decode_frame(frame);
    REQUIRE(encode_frame(std::get<QueryRequest>(m)) == frame);
    ++round_trips;

    QueryResponse r = test::random_response(rng);
    Bytes rframe = encode_frame(r);
    WireMessage rm = decode_frame(rframe);
    REQUIRE(encode_frame(std::get<QueryResponse>(rm)) == rframe);
    ++round_trips;
  }
  REQUIRE(round_trips == 10'000);
  pass(9, "golden frames re-encode byte-identically; 10000-message bijection holds");
}

TEST_CASE("criterion 10: replicas stay byte-identical across all scenario modes") {
  for (sc::AttackMode mode :
       {sc::AttackMode::none, sc::AttackMode::tamper, sc::AttackMode::replay,
        sc::AttackMode::unauthorized, sc::AttackMode::censor}) {
    CAPTURE(sc::to_label(mode));
    auto env = sc::setup(spec_with(1, mode));
    sc::run(*env);
    REQUIRE(env->transcript.ok);
    for (Network* net : {env->stl.get(), env->swt.get()}) {
      auto peers = net->peer_ids();
      Bytes chain0 = net->chain_bytes(peers.front());
      Digest state0 = net->state_digest(peers.front());
      for (const auto& peer : peers) {
        REQUIRE(net->chain_bytes(peer) == chain0);
        REQUIRE(net->state_digest(peer) == state0);
      }
    }
  }
  pass(10, "identical chains and world states on every peer after every mode");
}
