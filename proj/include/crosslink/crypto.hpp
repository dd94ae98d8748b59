// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.
//
// Signature suite "sig-v1" (Ed25519), hybrid encryption "enc-v1"
// (ephemeral-static X25519 + ChaCha20-Poly1305-IETF, key derived with
// BLAKE2b-256) and digest suite "digest-v1" (SHA-256), all backed by
// libsodium. See docs/wire.md for the exact derivations.

#pragma once

#include <sodium.h>

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

#include "crosslink/bytes.hpp"
#include "crosslink/codec.hpp"

namespace crosslink {

class CryptoError : public std::runtime_error {
 public:
  explicit CryptoError(const std::string& what) : std::runtime_error("crypto: " + what) {}
};

inline void crypto_init() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw CryptoError("sodium_init failed");
  });
}

using Digest = std::array<std::uint8_t, 32>;

inline constexpr std::size_t sign_public_key_bytes = crypto_sign_PUBLICKEYBYTES;   // 32
inline constexpr std::size_t sign_private_key_bytes = crypto_sign_SECRETKEYBYTES;  // 64
inline constexpr std::size_t signature_bytes = crypto_sign_BYTES;                  // 64
inline constexpr std::size_t enc_key_bytes = crypto_scalarmult_BYTES;              // 32
inline constexpr std::size_t enc_nonce_bytes = crypto_aead_chacha20poly1305_ietf_NPUBBYTES;

inline Digest sha256(ByteView data) {
  crypto_init();
  Digest out;
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

inline ByteView digest_view(const Digest& d) { return ByteView(d.data(), d.size()); }

inline std::string to_hex(const Digest& d) { return to_hex(digest_view(d)); }

// Digest of a value's canonical encoding. Byte strings digest as-is.
inline Digest canonical_digest(ByteView raw) { return sha256(raw); }

template <class T>
Digest canonical_digest(const T& value) {
  return sha256(value.canonical_bytes());
}

// Random source. The system source draws from OS entropy; the seeded source
// is a deterministic stream for reproducible scenarios and tests. Copies
// share one stream so a scenario's consumers advance a single sequence.
class Rng {
 public:
  static Rng system() { return Rng(nullptr); }

  static Rng seeded(std::uint64_t seed) {
    Bytes tag = to_bytes("crosslink.rng.v1");
    Writer w;
    w.field_bytes(1, tag);
    w.field_u64(2, seed);
    auto d = sha256(w.take());
    return Rng(std::make_shared<State>(d));
  }

  void fill(std::uint8_t* out, std::size_t n) {
    crypto_init();
    if (!state_) {
      randombytes_buf(out, n);
      return;
    }
    std::lock_guard lock(state_->mutex);
    Bytes block_seed(state_->chain.begin(), state_->chain.end());
    std::uint64_t c = state_->counter++;
    for (int i = 7; i >= 0; --i) block_seed.push_back(static_cast<std::uint8_t>(c >> (8 * i)));
    Digest d = sha256(block_seed);
    randombytes_buf_deterministic(out, n, d.data());
  }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    if (n > 0) fill(out.data(), n);
    return out;
  }

  template <std::size_t N>
  std::array<std::uint8_t, N> array() {
    std::array<std::uint8_t, N> out{};
    fill(out.data(), N);
    return out;
  }

  bool deterministic() const { return state_ != nullptr; }

 private:
  struct State {
    explicit State(const Digest& d) : chain(d) {}
    Digest chain;
    std::uint64_t counter = 0;
    std::mutex mutex;
  };

  explicit Rng(std::shared_ptr<State> s) : state_(std::move(s)) {}

  std::shared_ptr<State> state_;
};

// Signing and key-agreement keys for one identity. The signing pair is
// Ed25519, the key-agreement pair X25519; both are certified together.
struct KeyPair {
  Bytes public_key;       // Ed25519 verify key, 32 bytes
  Bytes private_key;      // Ed25519 signing key, 64 bytes
  Bytes enc_public_key;   // X25519 public key, 32 bytes
  Bytes enc_private_key;  // X25519 private key, 32 bytes

  static KeyPair generate() {
    auto rng = Rng::system();
    return from_seed_material(rng.bytes(32), rng.bytes(32));
  }

  // Deterministic generation for tests and seeded scenarios.
  static KeyPair from_seed(std::uint64_t seed) {
    Writer ws;
    ws.field_bytes(1, to_bytes("crosslink.keygen.sign.v1"));
    ws.field_u64(2, seed);
    Digest sign_seed = sha256(ws.take());
    Writer we;
    we.field_bytes(1, to_bytes("crosslink.keygen.enc.v1"));
    we.field_u64(2, seed);
    Digest enc_seed = sha256(we.take());
    return from_seed_material(copy_bytes(digest_view(sign_seed)),
                              copy_bytes(digest_view(enc_seed)));
  }

  static KeyPair from_seed_material(const Bytes& sign_seed, const Bytes& enc_secret) {
    crypto_init();
    if (sign_seed.size() != crypto_sign_SEEDBYTES || enc_secret.size() != enc_key_bytes)
      throw CryptoError("seed material must be 32 bytes each");
    KeyPair kp;
    kp.public_key.resize(sign_public_key_bytes);
    kp.private_key.resize(sign_private_key_bytes);
    crypto_sign_seed_keypair(kp.public_key.data(), kp.private_key.data(), sign_seed.data());
    kp.enc_private_key = enc_secret;
    kp.enc_public_key.resize(enc_key_bytes);
    crypto_scalarmult_base(kp.enc_public_key.data(), kp.enc_private_key.data());
    return kp;
  }

  Bytes encode() const {
    Writer w;
    w.field_bytes(1, public_key);
    w.field_bytes(2, private_key);
    w.field_bytes(3, enc_public_key);
    w.field_bytes(4, enc_private_key);
    return w.take();
  }

  static KeyPair decode(ByteView data) {
    Reader r(data);
    KeyPair kp;
    kp.public_key = copy_bytes(r.fixed(1, sign_public_key_bytes));
    kp.private_key = copy_bytes(r.fixed(2, sign_private_key_bytes));
    kp.enc_public_key = copy_bytes(r.fixed(3, enc_key_bytes));
    kp.enc_private_key = copy_bytes(r.fixed(4, enc_key_bytes));
    r.finish();
    return kp;
  }
};

inline Bytes sign(ByteView private_key, ByteView message) {
  crypto_init();
  if (private_key.size() != sign_private_key_bytes) throw CryptoError("malformed signing key");
  Bytes sig(signature_bytes);
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), private_key.data());
  return sig;
}

inline bool verify(ByteView public_key, ByteView message, ByteView signature) {
  crypto_init();
  if (public_key.size() != sign_public_key_bytes) throw CryptoError("malformed verify key");
  if (signature.size() != signature_bytes) return false;
  return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                     public_key.data()) == 0;
}

// enc-v1 envelope. Decryption requires the recipient's key-agreement private
// key; any bit flip in the body fails the AEAD tag.
struct HybridCiphertext {
  Bytes ephemeral_public_key;  // 32 bytes
  Bytes nonce_iv;              // 12 bytes
  Bytes body;                  // ciphertext || tag

  Bytes encode() const {
    Writer w;
    w.field_bytes(1, ephemeral_public_key);
    w.field_bytes(2, nonce_iv);
    w.field_bytes(3, body);
    return w.take();
  }

  static HybridCiphertext decode(ByteView data) {
    Reader r(data);
    HybridCiphertext ct;
    ct.ephemeral_public_key = copy_bytes(r.fixed(1, enc_key_bytes));
    ct.nonce_iv = copy_bytes(r.fixed(2, enc_nonce_bytes));
    ct.body = copy_bytes(r.bytes(3));
    r.finish();
    return ct;
  }
};

namespace detail {
inline Bytes derive_envelope_key(ByteView shared, ByteView ephemeral_pk, ByteView recipient_pk) {
  Bytes input;
  append(input, shared);
  append(input, ephemeral_pk);
  append(input, recipient_pk);
  Bytes key(32);
  crypto_generichash(key.data(), key.size(), input.data(), input.size(), nullptr, 0);
  return key;
}
}  // namespace detail

inline HybridCiphertext hybrid_encrypt(ByteView recipient_enc_public_key, ByteView plaintext,
                                       Rng rng = Rng::system()) {
  crypto_init();
  if (recipient_enc_public_key.size() != enc_key_bytes)
    throw CryptoError("malformed recipient key");
  HybridCiphertext ct;
  Bytes eph_sk = rng.bytes(enc_key_bytes);
  ct.ephemeral_public_key.resize(enc_key_bytes);
  crypto_scalarmult_base(ct.ephemeral_public_key.data(), eph_sk.data());
  Bytes shared(enc_key_bytes);
  if (crypto_scalarmult(shared.data(), eph_sk.data(), recipient_enc_public_key.data()) != 0)
    throw CryptoError("key agreement failed");
  Bytes key = detail::derive_envelope_key(shared, ct.ephemeral_public_key,
                                          recipient_enc_public_key);
  ct.nonce_iv = rng.bytes(enc_nonce_bytes);
  ct.body.resize(plaintext.size() + crypto_aead_chacha20poly1305_ietf_ABYTES);
  unsigned long long clen = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(ct.body.data(), &clen, plaintext.data(),
                                            plaintext.size(), nullptr, 0, nullptr,
                                            ct.nonce_iv.data(), key.data());
  ct.body.resize(clen);
  return ct;
}

inline Bytes hybrid_decrypt(ByteView enc_private_key, const HybridCiphertext& ct) {
  crypto_init();
  if (enc_private_key.size() != enc_key_bytes) throw CryptoError("malformed private key");
  if (ct.ephemeral_public_key.size() != enc_key_bytes || ct.nonce_iv.size() != enc_nonce_bytes ||
      ct.body.size() < crypto_aead_chacha20poly1305_ietf_ABYTES)
    throw CryptoError("malformed ciphertext");
  Bytes shared(enc_key_bytes);
  if (crypto_scalarmult(shared.data(), enc_private_key.data(), ct.ephemeral_public_key.data()) !=
      0)
    throw CryptoError("key agreement failed");
  Bytes recipient_pk(enc_key_bytes);
  crypto_scalarmult_base(recipient_pk.data(), enc_private_key.data());
  Bytes key = detail::derive_envelope_key(shared, ct.ephemeral_public_key, recipient_pk);
  Bytes plain(ct.body.size() - crypto_aead_chacha20poly1305_ietf_ABYTES);
  unsigned long long mlen = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(plain.data(), &mlen, nullptr, ct.body.data(),
                                                ct.body.size(), nullptr, 0, ct.nonce_iv.data(),
                                                key.data()) != 0)
    throw CryptoError("decryption failed: authentication error");
  plain.resize(mlen);
  return plain;
}

}  // namespace crosslink
