#pragma once

#include <cstdint>
#include <compare>
#include <string>
#include <string_view>

#include <gmpxx.h>

#include "ppdl/rng.hpp"

namespace ppdl {

/// Arbitrary-precision non-negative integer.
///
/// Storage and the limb-level arithmetic are delegated to GMP; the value is
/// always canonical and every operation is exact. Subtraction that would go
/// negative throws BadArgument.
class BigUint {
 public:
  BigUint() = default;
  BigUint(std::uint64_t v);  // NOLINT(google-explicit-constructor)

  static BigUint from_hex(std::string_view hex);
  static BigUint from_dec(std::string_view dec);

  /// Lowercase hex with no prefix; zero is "0".
  std::string to_hex() const;
  std::string to_dec() const;

  bool is_zero() const { return sgn(value_) == 0; }
  bool is_odd() const { return mpz_odd_p(value_.get_mpz_t()) != 0; }
  std::size_t bit_length() const;
  bool bit(std::size_t i) const;
  /// Low 64 bits.
  std::uint64_t low_u64() const;

  BigUint& operator+=(const BigUint& rhs);
  BigUint& operator-=(const BigUint& rhs);
  BigUint& operator*=(const BigUint& rhs);
  BigUint& operator/=(const BigUint& rhs);
  BigUint& operator%=(const BigUint& rhs);

  friend BigUint operator+(BigUint a, const BigUint& b) { return a += b; }
  friend BigUint operator-(BigUint a, const BigUint& b) { return a -= b; }
  friend BigUint operator*(BigUint a, const BigUint& b) { return a *= b; }
  friend BigUint operator/(BigUint a, const BigUint& b) { return a /= b; }
  friend BigUint operator%(BigUint a, const BigUint& b) { return a %= b; }

  BigUint operator<<(std::size_t shift) const;
  BigUint operator>>(std::size_t shift) const;

  friend bool operator==(const BigUint& a, const BigUint& b) { return cmp(a.value_, b.value_) == 0; }
  friend std::strong_ordering operator<=>(const BigUint& a, const BigUint& b) {
    int c = cmp(a.value_, b.value_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  const mpz_class& mpz() const { return value_; }

 private:
  explicit BigUint(mpz_class v) : value_(std::move(v)) {}
  friend BigUint gcd(const BigUint&, const BigUint&);
  friend BigUint mod_exp(const BigUint&, const BigUint&, const BigUint&);
  friend BigUint mod_inv(const BigUint&, const BigUint&);

  mpz_class value_;
};

/// gcd(0, 0) = 0.
BigUint gcd(const BigUint& a, const BigUint& b);

/// Throws ZeroOperand when either argument is zero.
BigUint lcm(const BigUint& a, const BigUint& b);

/// base^exp mod modulus. Throws BadModulus when modulus < 2.
BigUint mod_exp(const BigUint& base, const BigUint& exp, const BigUint& modulus);

/// The inverse in (0, modulus). Throws NotInvertible when gcd(a, modulus) != 1.
BigUint mod_inv(const BigUint& a, const BigUint& modulus);

/// Uniform value with at most `bits` bits.
BigUint random_bits(std::size_t bits, Rng& rng);

/// Uniform in [0, bound). bound must be non-zero.
BigUint random_below(const BigUint& bound, Rng& rng);

inline constexpr int kDefaultPrimalityRounds = 40;

/// Miller-Rabin with `rounds` random bases drawn from `rng`. A false result is
/// a proof of compositeness; a true result errs with probability <= 4^-rounds.
bool is_probable_prime(const BigUint& n, int rounds, Rng& rng);

/// Probable prime with exactly `bits` bits; the two top bits are set. bits >= 8.
BigUint random_prime(std::size_t bits, Rng& rng);

}  // namespace ppdl
