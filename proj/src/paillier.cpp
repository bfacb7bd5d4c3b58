#include "ppdl/paillier.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <openssl/evp.h>

#include "ppdl/error.hpp"

namespace ppdl::paillier {

namespace {

constexpr std::uint64_t kValidationSeed = 0x7061696c6c696572ULL;
constexpr std::string_view kPublicMagic = "ppdl-paillier-public";
constexpr std::string_view kPrivateMagic = "ppdl-paillier-private";
constexpr std::string_view kKeyVersion = "1";

std::uint64_t compute_fingerprint(const BigUint& n, const BigUint& g) {
  const std::string canonical = "n=" + n.to_hex() + "\ng=" + g.to_hex() + "\n";
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(canonical.data(), canonical.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::BadArgument, "SHA-256 failed");
  }
  std::uint64_t fp = 0;
  for (int i = 0; i < 8; ++i) fp = (fp << 8) | digest[static_cast<std::size_t>(i)];
  return fp;
}

void require_same_key(const PublicKey& pk, const Ciphertext& c) {
  if (c.key_fingerprint != pk.fingerprint()) {
    throw Error(Errc::KeyMismatch, "ciphertext fingerprint " + fingerprint_hex(c.key_fingerprint) +
                                       " does not match key " + fingerprint_hex(pk.fingerprint()));
  }
  if (c.value.is_zero() || c.value >= pk.n_squared()) {
    throw Error(Errc::CorruptCiphertext, "ciphertext outside (0, n^2)");
  }
}

void require_plaintext(const PublicKey& pk, const BigUint& m) {
  if (m >= pk.n()) throw Error(Errc::PlaintextTooLarge, "plaintext must be < n");
}

// g^m mod n^2, with the closed form 1 + m*n for the default generator.
BigUint generator_power(const PublicKey& pk, const BigUint& m) {
  if (pk.g() == pk.n() + BigUint(1)) return (BigUint(1) + m * pk.n()) % pk.n_squared();
  return mod_exp(pk.g(), m, pk.n_squared());
}

}  // namespace

struct KeyFactory {
  static PublicKey make_public(const BigUint& n, const BigUint& g) {
    PublicKey pk;
    pk.n_ = n;
    pk.g_ = g;
    pk.n_squared_ = n * n;
    pk.fingerprint_ = compute_fingerprint(n, g);
    return pk;
  }

  static PrivateKey make_private(const BigUint& lambda, const BigUint& mu, const BigUint& p,
                                 const BigUint& q, std::uint64_t fp) {
    PrivateKey sk;
    sk.lambda_ = lambda;
    sk.mu_ = mu;
    sk.p_ = p;
    sk.q_ = q;
    sk.fingerprint_ = fp;
    return sk;
  }
};

std::string fingerprint_hex(std::uint64_t fingerprint) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fingerprint));
  return buf;
}

BigUint l_function(const BigUint& x, const BigUint& n) {
  if (x.is_zero() || !((x - BigUint(1)) % n).is_zero()) {
    throw Error(Errc::CorruptCiphertext, "L-function argument is not 1 mod n");
  }
  return (x - BigUint(1)) / n;
}

KeyPair from_primes(const BigUint& p, const BigUint& q, const BigUint& g) {
  Rng check_rng(kValidationSeed);
  if (p == q) throw Error(Errc::InvalidPrimes, "p and q must be distinct");
  if (!is_probable_prime(p, kDefaultPrimalityRounds, check_rng) ||
      !is_probable_prime(q, kDefaultPrimalityRounds, check_rng)) {
    throw Error(Errc::InvalidPrimes, "p and q must both be prime");
  }
  const BigUint one(1);
  const BigUint n = p * q;
  const BigUint phi = (p - one) * (q - one);
  if (gcd(n, phi) != one) throw Error(Errc::InvalidPrimes, "gcd(pq, (p-1)(q-1)) != 1");

  const BigUint n_squared = n * n;
  if (g.is_zero() || g >= n_squared) throw Error(Errc::InvalidGenerator, "g must lie in (0, n^2)");

  const BigUint lambda = lcm(p - one, q - one);
  BigUint mu;
  try {
    mu = mod_inv(l_function(mod_exp(g, lambda, n_squared), n), n);
  } catch (const Error& e) {
    throw Error(Errc::InvalidGenerator, std::string("L(g^lambda mod n^2) not invertible mod n (") + e.what() + ")");
  }

  PublicKey pk = KeyFactory::make_public(n, g);
  PrivateKey sk = KeyFactory::make_private(lambda, mu, p, q, pk.fingerprint());
  return KeyPair{std::move(pk), std::move(sk)};
}

BigUint random_generator(const BigUint& p, const BigUint& q, Rng& rng) {
  const BigUint n = p * q;
  const BigUint n_squared = n * n;
  for (;;) {
    BigUint g = random_below(n_squared, rng);
    if (g.is_zero()) continue;
    try {
      from_primes(p, q, g);
      return g;
    } catch (const Error& e) {
      if (e.code() != Errc::InvalidGenerator) throw;
    }
  }
}

KeyPair keygen(std::size_t bits, Rng& rng) {
  if (bits < 16) throw Error(Errc::BadArgument, "key generation needs at least 16-bit primes");
  const BigUint one(1);
  for (;;) {
    BigUint p = random_prime(bits, rng);
    BigUint q = random_prime(bits, rng);
    if (p == q) continue;
    if (gcd(p * q, (p - one) * (q - one)) != one) continue;
    return from_primes(p, q, p * q + one);
  }
}

Ciphertext encrypt(const PublicKey& pk, const BigUint& m, const BigUint& r) {
  require_plaintext(pk, m);
  if (r.is_zero() || r >= pk.n() || gcd(r, pk.n()) != BigUint(1)) {
    throw Error(Errc::InvalidRandomizer, "randomizer must satisfy 0 < r < n and gcd(r, n) = 1");
  }
  BigUint c = generator_power(pk, m) * mod_exp(r, pk.n(), pk.n_squared()) % pk.n_squared();
  return Ciphertext{std::move(c), pk.fingerprint()};
}

BigUint random_randomizer(const PublicKey& pk, Rng& rng) {
  const BigUint one(1);
  const BigUint span = pk.n() - one;
  for (;;) {
    BigUint r = random_below(span, rng) + one;
    if (gcd(r, pk.n()) == one) return r;
  }
}

Ciphertext encrypt_random(const PublicKey& pk, const BigUint& m, Rng& rng) {
  require_plaintext(pk, m);
  return encrypt(pk, m, random_randomizer(pk, rng));
}

BigUint decrypt(const PrivateKey& sk, const PublicKey& pk, const Ciphertext& c) {
  if (sk.fingerprint() != pk.fingerprint()) throw Error(Errc::KeyMismatch, "private key does not match public key");
  require_same_key(pk, c);
  const BigUint x = mod_exp(c.value, sk.lambda(), pk.n_squared());
  return l_function(x, pk.n()) * sk.mu() % pk.n();
}

Ciphertext hadd(const PublicKey& pk, const Ciphertext& c1, const Ciphertext& c2) {
  require_same_key(pk, c1);
  require_same_key(pk, c2);
  return Ciphertext{c1.value * c2.value % pk.n_squared(), pk.fingerprint()};
}

Ciphertext scalar_add(const PublicKey& pk, const Ciphertext& c, const BigUint& m2) {
  require_same_key(pk, c);
  require_plaintext(pk, m2);
  return Ciphertext{c.value * generator_power(pk, m2) % pk.n_squared(), pk.fingerprint()};
}

Ciphertext scalar_mul(const PublicKey& pk, const Ciphertext& c, const BigUint& k) {
  require_same_key(pk, c);
  return Ciphertext{mod_exp(c.value, k, pk.n_squared()), pk.fingerprint()};
}

// ---------------------------------------------------------------------------
// Key files

namespace {

struct Field {
  std::string name;
  BigUint value;
};

std::vector<Field> parse_key_file(std::string_view text, std::string_view magic,
                                  const std::vector<std::string_view>& names) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    auto nl = text.find('\n');
    if (nl == std::string_view::npos) throw Error(Errc::KeyParseError, "unterminated final line");
    lines.push_back(text.substr(0, nl));
    text.remove_prefix(nl + 1);
  }
  if (lines.size() != names.size() + 2) {
    throw Error(Errc::KeyParseError, "expected " + std::to_string(names.size() + 2) + " lines, found " +
                                         std::to_string(lines.size()));
  }
  if (lines[0] != magic) throw Error(Errc::KeyParseError, "bad header '" + std::string(lines[0]) + "'");
  if (lines[1].substr(0, 8) != "version ") throw Error(Errc::KeyParseError, "missing version line");
  if (lines[1].substr(8) != kKeyVersion) {
    throw Error(Errc::KeyParseError, "unsupported key file version '" + std::string(lines[1].substr(8)) + "'");
  }
  std::vector<Field> fields;
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::string_view line = lines[i + 2];
    auto sp = line.find(' ');
    if (sp == std::string_view::npos || line.substr(0, sp) != names[i]) {
      throw Error(Errc::KeyParseError, "expected field '" + std::string(names[i]) + "' on line " + std::to_string(i + 3));
    }
    std::string_view hex = line.substr(sp + 1);
    for (char c : hex) {
      if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
        throw Error(Errc::KeyParseError, "field '" + std::string(names[i]) + "' is not lowercase hex");
      }
    }
    if (hex.empty()) throw Error(Errc::KeyParseError, "field '" + std::string(names[i]) + "' is empty");
    fields.push_back(Field{std::string(names[i]), BigUint::from_hex(hex)});
  }
  return fields;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string serialize_public(const PublicKey& pk) {
  std::string out;
  out += kPublicMagic;
  out += "\nversion ";
  out += kKeyVersion;
  out += "\nn " + pk.n().to_hex() + "\ng " + pk.g().to_hex() + "\n";
  return out;
}

std::string serialize_private(const KeyPair& keys) {
  std::string out;
  out += kPrivateMagic;
  out += "\nversion ";
  out += kKeyVersion;
  out += "\nn " + keys.pub.n().to_hex() + "\ng " + keys.pub.g().to_hex();
  out += "\nlambda " + keys.priv.lambda().to_hex() + "\nmu " + keys.priv.mu().to_hex();
  out += "\np " + keys.priv.p().to_hex() + "\nq " + keys.priv.q().to_hex() + "\n";
  return out;
}

PublicKey deserialize_public(std::string_view text) {
  auto fields = parse_key_file(text, kPublicMagic, {"n", "g"});
  const BigUint& n = fields[0].value;
  const BigUint& g = fields[1].value;
  if (n < BigUint(6)) throw Error(Errc::KeyParseError, "modulus too small");
  if (g.is_zero() || g >= n * n) throw Error(Errc::KeyParseError, "generator outside (0, n^2)");
  return KeyFactory::make_public(n, g);
}

KeyPair deserialize_private(std::string_view text) {
  auto fields = parse_key_file(text, kPrivateMagic, {"n", "g", "lambda", "mu", "p", "q"});
  KeyPair keys = [&] {
    try {
      return from_primes(fields[4].value, fields[5].value, fields[1].value);
    } catch (const Error& e) {
      throw Error(Errc::KeyParseError, std::string("inconsistent key material: ") + e.what());
    }
  }();
  if (keys.pub.n() != fields[0].value || keys.priv.lambda() != fields[2].value || keys.priv.mu() != fields[3].value) {
    throw Error(Errc::KeyParseError, "stored n/lambda/mu disagree with p, q, g");
  }
  return keys;
}

PublicKey load_public(const std::string& path) { return deserialize_public(read_file(path)); }
KeyPair load_private(const std::string& path) { return deserialize_private(read_file(path)); }

}  // namespace ppdl::paillier
