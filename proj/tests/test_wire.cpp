// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "crosslink/wire.hpp"
#include "test_support.hpp"
#include "wire_gen.hpp"

using namespace crosslink;
using test::golden_certificate;
using test::golden_request;
using test::golden_response;
using test::pattern;
using test::random_certificate;
using test::random_request;
using test::random_response;

TEST_CASE("golden request frame matches the independently generated fixture") {
  Bytes fixture = test::read_hex_fixture("golden_request.frame.hex");
  CHECK(encode_frame(golden_request()) == fixture);

  // Decode the fixture and re-encode: byte identical.
  WireMessage msg = decode_frame(fixture);
  auto* req = std::get_if<QueryRequest>(&msg);
  REQUIRE(req != nullptr);
  CHECK(encode_frame(*req) == fixture);
  CHECK(req->args.size() == 2);
  CHECK(req->verification_policy.required_orgs.size() == 2);
}

TEST_CASE("golden response frame matches the independently generated fixture") {
  Bytes fixture = test::read_hex_fixture("golden_response.frame.hex");
  CHECK(encode_frame(golden_response()) == fixture);
  WireMessage msg = decode_frame(fixture);
  auto* resp = std::get_if<QueryResponse>(&msg);
  REQUIRE(resp != nullptr);
  CHECK(encode_frame(*resp) == fixture);
  CHECK(resp->attestations.size() == 2);
}

TEST_CASE("golden certificate bytes match the fixture") {
  CHECK(golden_certificate().encode() == test::read_hex_fixture("golden_certificate.hex"));
}

TEST_CASE("request digest matches the oracle and ignores envelope fields") {
  Bytes fixture = test::read_hex_fixture("golden_request_digest.hex");
  QueryRequest q = golden_request();
  CHECK(copy_bytes(digest_view(request_digest(q))) == fixture);

  // request_id, requestor cert and policy are excluded by design.
  QueryRequest other = q;
  other.request_id = to_array<16>(pattern(0x99, 16));
  other.requestor_cert.subject_id = "someone-else";
  other.verification_policy.required_orgs = {"x-org"};
  CHECK(request_digest(other) == request_digest(q));

  // Execution-relevant fields are not.
  QueryRequest arg_changed = q;
  arg_changed.args[0][0] ^= 0x01;
  CHECK(request_digest(arg_changed) != request_digest(q));
  QueryRequest nonce_changed = q;
  nonce_changed.nonce[15] ^= 0x01;
  CHECK(request_digest(nonce_changed) != request_digest(q));
}

TEST_CASE("encode/decode is a bijection over generated messages") {
  Rng rng = Rng::seeded(2024);
  for (int i = 0; i < 1000; ++i) {
    QueryRequest q = random_request(rng);
    Bytes frame = encode_frame(q);
    WireMessage msg = decode_frame(frame);
    auto* back = std::get_if<QueryRequest>(&msg);
    REQUIRE(back != nullptr);
    CHECK(encode_frame(*back) == frame);

    QueryResponse r = random_response(rng);
    Bytes rframe = encode_frame(r);
    WireMessage rmsg = decode_frame(rframe);
    auto* rback = std::get_if<QueryResponse>(&rmsg);
    REQUIRE(rback != nullptr);
    CHECK(encode_frame(*rback) == rframe);
  }
}

TEST_CASE("frame decode errors") {
  QueryRequest q = golden_request();
  Bytes frame = encode_frame(q);

  SUBCASE("truncated") {
    Bytes cut(frame.begin(), frame.end() - 1);
    CHECK_THROWS_AS(decode_frame(cut), CodecError);
    Bytes tiny(frame.begin(), frame.begin() + 3);
    CHECK_THROWS_AS(decode_frame(tiny), CodecError);
  }
  SUBCASE("length prefix larger than 16 MiB") {
    Bytes oversize = frame;
    oversize[0] = 0x80;  // 2^31-ish
    CHECK_THROWS_AS(decode_frame(oversize), CodecError);
  }
  SUBCASE("unknown frame type") {
    Bytes bad = frame;
    bad[4] = 9;
    CHECK_THROWS_AS(decode_frame(bad), CodecError);
  }
  SUBCASE("length/content mismatch") {
    Bytes extended = frame;
    extended.push_back(0);
    CHECK_THROWS_AS(decode_frame(extended), CodecError);
  }
  SUBCASE("oversize encode is refused") {
    QueryRequest big = q;
    big.args = {Bytes(max_frame_bytes, 0x5a)};
    CHECK_THROWS_AS(encode_frame(big), CodecError);
  }
}

TEST_CASE("response status invariants are enforced at decode") {
  QueryResponse ok = golden_response();

  SUBCASE("ok with a reason is rejected") {
    // Splice a reason field in by re-encoding manually.
    Writer w;
    w.field_bytes(1, ByteView(ok.request_id.data(), 16));
    w.field_u8(2, 1);
    w.field_string(3, "unexpected");
    w.field_bytes(4, ok.encrypted_result->encode());
    w.field_bytes(5, ok.attestations[0].encode());
    CHECK_THROWS_AS(QueryResponse::decode(w.take()), CodecError);
  }
  SUBCASE("ok without attestations is rejected") {
    Writer w;
    w.field_bytes(1, ByteView(ok.request_id.data(), 16));
    w.field_u8(2, 1);
    w.field_bytes(4, ok.encrypted_result->encode());
    CHECK_THROWS_AS(QueryResponse::decode(w.take()), CodecError);
  }
  SUBCASE("failure with payload is rejected") {
    Writer w;
    w.field_bytes(1, ByteView(ok.request_id.data(), 16));
    w.field_u8(2, 2);
    w.field_string(3, "denied-reason");
    w.field_bytes(4, ok.encrypted_result->encode());
    CHECK_THROWS_AS(QueryResponse::decode(w.take()), CodecError);
  }
  SUBCASE("failure without reason is rejected") {
    Writer w;
    w.field_bytes(1, ByteView(ok.request_id.data(), 16));
    w.field_u8(2, 3);
    CHECK_THROWS_AS(QueryResponse::decode(w.take()), CodecError);
  }
  SUBCASE("status out of range is rejected") {
    Writer w;
    w.field_bytes(1, ByteView(ok.request_id.data(), 16));
    w.field_u8(2, 4);
    w.field_string(3, "reason");
    CHECK_THROWS_AS(QueryResponse::decode(w.take()), CodecError);
  }
}

TEST_CASE("proof encoding round trips") {
  Rng rng = Rng::seeded(5);
  Proof proof;
  for (int i = 0; i < 3; ++i) {
    ProofEntry entry;
    entry.signer_cert = random_certificate(rng);
    entry.metadata.network_id = "trade-lens";
    entry.metadata.peer_id = "seller-peer-" + std::to_string(i);
    entry.metadata.org_id = "seller-org";
    entry.metadata.request_digest = sha256(rng.bytes(10));
    entry.metadata.nonce = rng.array<16>();
    entry.metadata.result = rng.bytes(50);
    entry.signature = rng.bytes(64);
    proof.push_back(entry);
  }
  Bytes encoded = encode_proof(proof);
  Proof back = decode_proof(encoded);
  CHECK(encode_proof(back) == encoded);
  CHECK(back.size() == 3);
  CHECK(decode_proof(Bytes{}).empty());
}

TEST_CASE("canonical encoding is injective under field mutation") {
  QueryRequest base = golden_request();
  Digest base_digest = sha256(base.encode());
  std::set<std::string> seen;
  seen.insert(to_hex(base_digest));

  auto check_distinct = [&](QueryRequest mutated) {
    std::string d = to_hex(sha256(mutated.encode()));
    CHECK(seen.insert(d).second);
  };

  QueryRequest m = base;
  m.request_id[0] ^= 1;
  check_distinct(m);
  m = base;
  m.dest_network_id += "x";
  check_distinct(m);
  m = base;
  m.ledger_id = "";
  check_distinct(m);
  m = base;
  m.contract_name = "TradeLensC";
  check_distinct(m);
  m = base;
  m.function_name += "Z";
  check_distinct(m);
  m = base;
  m.args.push_back({});
  check_distinct(m);
  m = base;
  m.args.erase(m.args.begin());
  check_distinct(m);
  m = base;
  std::swap(m.args[0], m.args[1]);
  check_distinct(m);
  m = base;
  m.verification_policy.version = 2;
  check_distinct(m);
  m = base;
  m.verification_policy.required_orgs.pop_back();
  check_distinct(m);
  m = base;
  m.requestor_cert.serial = 8;
  check_distinct(m);
  m = base;
  m.nonce[7] ^= 0x80;
  check_distinct(m);
}
