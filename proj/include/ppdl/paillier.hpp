#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "ppdl/number_theory.hpp"
#include "ppdl/rng.hpp"

namespace ppdl::paillier {

struct KeyFactory;

/// Paillier public key (n, g). Only constructible through keygen/from_primes
/// or deserialization, which establish the invariants.
class PublicKey {
 public:
  const BigUint& n() const { return n_; }
  const BigUint& g() const { return g_; }
  const BigUint& n_squared() const { return n_squared_; }
  /// First 64 bits of SHA-256 over the canonical "n,g" serialization.
  std::uint64_t fingerprint() const { return fingerprint_; }

  friend bool operator==(const PublicKey&, const PublicKey&) = default;

 private:
  friend struct KeyFactory;
  PublicKey() = default;

  BigUint n_;
  BigUint g_;
  BigUint n_squared_;
  std::uint64_t fingerprint_ = 0;
};

class PrivateKey {
 public:
  const BigUint& lambda() const { return lambda_; }
  const BigUint& mu() const { return mu_; }
  const BigUint& p() const { return p_; }
  const BigUint& q() const { return q_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  friend bool operator==(const PrivateKey&, const PrivateKey&) = default;

 private:
  friend struct KeyFactory;
  PrivateKey() = default;

  BigUint lambda_;
  BigUint mu_;
  BigUint p_;
  BigUint q_;
  std::uint64_t fingerprint_ = 0;
};

struct KeyPair {
  PublicKey pub;
  PrivateKey priv;
};

struct Ciphertext {
  BigUint value;
  std::uint64_t key_fingerprint = 0;

  friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

inline constexpr std::size_t kDefaultTestPrimeBits = 512;
inline constexpr std::size_t kDefaultCliPrimeBits = 1024;

/// Generates two distinct `bits`-bit primes satisfying gcd(pq, (p-1)(q-1)) = 1
/// and uses the generator g = n + 1. bits >= 16.
KeyPair keygen(std::size_t bits, Rng& rng);

/// Builds keys from explicit primes and generator.
/// Throws InvalidPrimes for equal/composite primes or a failed gcd condition,
/// InvalidGenerator when g is out of range or L(g^lambda mod n^2) has no
/// inverse mod n.
KeyPair from_primes(const BigUint& p, const BigUint& q, const BigUint& g);

/// Picks a random generator in (0, n^2) that passes the validity check.
BigUint random_generator(const BigUint& p, const BigUint& q, Rng& rng);

/// L(x) = (x - 1) / n. Throws CorruptCiphertext unless x = 1 mod n.
BigUint l_function(const BigUint& x, const BigUint& n);

/// c = g^m * r^n mod n^2. Requires m < n, 0 < r < n, gcd(r, n) = 1.
Ciphertext encrypt(const PublicKey& pk, const BigUint& m, const BigUint& r);

/// Draws a valid randomizer uniformly from [1, n) with gcd(r, n) = 1.
BigUint random_randomizer(const PublicKey& pk, Rng& rng);

Ciphertext encrypt_random(const PublicKey& pk, const BigUint& m, Rng& rng);

/// m = L(c^lambda mod n^2) * mu mod n.
BigUint decrypt(const PrivateKey& sk, const PublicKey& pk, const Ciphertext& c);

/// Product of ciphertexts; decrypts to (m1 + m2) mod n.
Ciphertext hadd(const PublicKey& pk, const Ciphertext& c1, const Ciphertext& c2);

/// c * g^m2 mod n^2; decrypts to (m1 + m2) mod n.
Ciphertext scalar_add(const PublicKey& pk, const Ciphertext& c, const BigUint& m2);

/// c^k mod n^2; decrypts to (k * m) mod n.
Ciphertext scalar_mul(const PublicKey& pk, const Ciphertext& c, const BigUint& k);

// Key files: a magic line, then "<field> <lowercase hex>" lines in fixed order,
// every line newline-terminated.
//
//   ppdl-paillier-public          ppdl-paillier-private
//   version 1                     version 1
//   n <hex>                       n <hex>
//   g <hex>                       g <hex>
//                                 lambda <hex>
//                                 mu <hex>
//                                 p <hex>
//                                 q <hex>
std::string serialize_public(const PublicKey& pk);
std::string serialize_private(const KeyPair& keys);
PublicKey deserialize_public(std::string_view text);
KeyPair deserialize_private(std::string_view text);

PublicKey load_public(const std::string& path);
KeyPair load_private(const std::string& path);

std::string fingerprint_hex(std::uint64_t fingerprint);

}  // namespace ppdl::paillier
