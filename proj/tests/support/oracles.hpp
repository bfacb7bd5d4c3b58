#pragma once

// Independent reference arithmetic on machine words. Nothing here calls into
// the library, so the tests compare two unrelated routes.

#include <cstdint>
#include <optional>
#include <vector>

namespace oracle {

inline std::uint64_t gcd(std::uint64_t a, std::uint64_t b) {
  while (b != 0) {
    std::uint64_t t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// base^exp mod m by exp repeated multiplications.
inline std::uint64_t pow_mod_naive(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  for (std::uint64_t i = 0; i < exp; ++i) r = static_cast<std::uint64_t>((unsigned __int128)r * (base % m) % m);
  return r;
}

// Right-to-left binary exponentiation.
inline std::uint64_t pow_mod_squaring(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  std::uint64_t b = base % m;
  while (exp > 0) {
    if (exp & 1) r = static_cast<std::uint64_t>((unsigned __int128)r * b % m);
    b = static_cast<std::uint64_t>((unsigned __int128)b * b % m);
    exp >>= 1;
  }
  return r;
}

// Extended Euclid; nullopt when not invertible.
inline std::optional<std::uint64_t> inverse(std::uint64_t a, std::uint64_t m) {
  __int128 old_r = static_cast<__int128>(a % m), r = m, old_s = 1, s = 0;
  while (r != 0) {
    __int128 q = old_r / r;
    __int128 t = old_r - q * r;
    old_r = r;
    r = t;
    t = old_s - q * s;
    old_s = s;
    s = t;
  }
  if (old_r != 1) return std::nullopt;
  __int128 v = old_s % static_cast<__int128>(m);
  if (v < 0) v += m;
  return static_cast<std::uint64_t>(v);
}

inline bool is_prime_trial(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

// Textbook Paillier on word-sized keys.
struct ToyPaillier {
  std::uint64_t p, q, g;
  std::uint64_t n() const { return p * q; }
  std::uint64_t n2() const { return n() * n(); }
  std::uint64_t lambda() const { return (p - 1) / gcd(p - 1, q - 1) * (q - 1); }
  std::uint64_t L(std::uint64_t x) const { return (x - 1) / n(); }
  std::uint64_t mu() const { return *inverse(L(pow_mod_naive(g, lambda(), n2())), n()); }
  std::uint64_t encrypt(std::uint64_t m, std::uint64_t r) const {
    return static_cast<std::uint64_t>((unsigned __int128)pow_mod_naive(g, m, n2()) * pow_mod_naive(r, n(), n2()) %
                                      n2());
  }
  std::uint64_t decrypt(std::uint64_t c) const {
    return static_cast<std::uint64_t>((unsigned __int128)L(pow_mod_naive(c, lambda(), n2())) * mu() % n());
  }
};

}  // namespace oracle
