#include "ppdl/number_theory.hpp"

#include <array>

#include "ppdl/error.hpp"

namespace ppdl {
namespace {

bool is_hex_digit(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

constexpr std::array<unsigned, 24> kSmallPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                                   41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};

}  // namespace

BigUint::BigUint(std::uint64_t v) {
  static_assert(sizeof(unsigned long) == sizeof(std::uint64_t));
  value_ = static_cast<unsigned long>(v);
}

BigUint BigUint::from_hex(std::string_view hex) {
  if (hex.empty()) throw Error(Errc::BadArgument, "empty hex string");
  for (char c : hex) {
    if (!is_hex_digit(c)) throw Error(Errc::BadArgument, "invalid hex digit in '" + std::string(hex) + "'");
  }
  return BigUint(mpz_class(std::string(hex), 16));
}

BigUint BigUint::from_dec(std::string_view dec) {
  if (dec.empty()) throw Error(Errc::BadArgument, "empty decimal string");
  for (char c : dec) {
    if (c < '0' || c > '9') throw Error(Errc::BadArgument, "invalid decimal digit in '" + std::string(dec) + "'");
  }
  return BigUint(mpz_class(std::string(dec), 10));
}

std::string BigUint::to_hex() const { return value_.get_str(16); }
std::string BigUint::to_dec() const { return value_.get_str(10); }

std::size_t BigUint::bit_length() const {
  return is_zero() ? 0 : mpz_sizeinbase(value_.get_mpz_t(), 2);
}

bool BigUint::bit(std::size_t i) const { return mpz_tstbit(value_.get_mpz_t(), i) != 0; }

std::uint64_t BigUint::low_u64() const {
  mpz_class low = value_ & mpz_class("ffffffffffffffff", 16);
  return low.get_ui();
}

BigUint& BigUint::operator+=(const BigUint& rhs) {
  value_ += rhs.value_;
  return *this;
}

BigUint& BigUint::operator-=(const BigUint& rhs) {
  if (value_ < rhs.value_) throw Error(Errc::BadArgument, "unsigned subtraction underflow");
  value_ -= rhs.value_;
  return *this;
}

BigUint& BigUint::operator*=(const BigUint& rhs) {
  value_ *= rhs.value_;
  return *this;
}

BigUint& BigUint::operator/=(const BigUint& rhs) {
  if (rhs.is_zero()) throw Error(Errc::ZeroOperand, "division by zero");
  mpz_fdiv_q(value_.get_mpz_t(), value_.get_mpz_t(), rhs.value_.get_mpz_t());
  return *this;
}

BigUint& BigUint::operator%=(const BigUint& rhs) {
  if (rhs.is_zero()) throw Error(Errc::ZeroOperand, "modulo by zero");
  mpz_fdiv_r(value_.get_mpz_t(), value_.get_mpz_t(), rhs.value_.get_mpz_t());
  return *this;
}

BigUint gcd(const BigUint& a, const BigUint& b) {
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), a.value_.get_mpz_t(), b.value_.get_mpz_t());
  return BigUint(std::move(g));
}

BigUint lcm(const BigUint& a, const BigUint& b) {
  if (a.is_zero() || b.is_zero()) throw Error(Errc::ZeroOperand, "lcm of zero");
  return a / gcd(a, b) * b;
}

BigUint mod_exp(const BigUint& base, const BigUint& exp, const BigUint& modulus) {
  if (modulus < BigUint(2)) throw Error(Errc::BadModulus, "modulus must be >= 2");
  mpz_class r;
  mpz_powm(r.get_mpz_t(), base.value_.get_mpz_t(), exp.value_.get_mpz_t(), modulus.value_.get_mpz_t());
  return BigUint(std::move(r));
}

BigUint mod_inv(const BigUint& a, const BigUint& modulus) {
  if (modulus < BigUint(2)) throw Error(Errc::BadModulus, "modulus must be >= 2");
  mpz_class r;
  if (mpz_invert(r.get_mpz_t(), a.value_.get_mpz_t(), modulus.value_.get_mpz_t()) == 0) {
    throw Error(Errc::NotInvertible, a.to_hex() + " has no inverse mod " + modulus.to_hex());
  }
  return BigUint(std::move(r));
}

BigUint BigUint::operator<<(std::size_t shift) const {
  mpz_class r;
  mpz_mul_2exp(r.get_mpz_t(), value_.get_mpz_t(), shift);
  return BigUint(std::move(r));
}

BigUint BigUint::operator>>(std::size_t shift) const {
  mpz_class r;
  mpz_fdiv_q_2exp(r.get_mpz_t(), value_.get_mpz_t(), shift);
  return BigUint(std::move(r));
}

BigUint random_bits(std::size_t bits, Rng& rng) {
  BigUint out;
  const std::size_t words = (bits + 63) / 64;
  for (std::size_t i = 0; i < words; ++i) out = (out << 64) + BigUint(rng.next());
  return out >> (words * 64 - bits);
}

BigUint random_below(const BigUint& bound, Rng& rng) {
  if (bound.is_zero()) throw Error(Errc::ZeroOperand, "random_below(0)");
  const std::size_t bits = bound.bit_length();
  for (;;) {
    BigUint candidate = random_bits(bits, rng);
    if (candidate < bound) return candidate;
  }
}

bool is_probable_prime(const BigUint& n, int rounds, Rng& rng) {
  if (rounds < 1) throw Error(Errc::BadArgument, "primality test needs at least one round");
  if (n < BigUint(2)) return false;
  for (unsigned p : kSmallPrimes) {
    if (n == BigUint(p)) return true;
    if ((n % BigUint(p)).is_zero()) return false;
  }

  // n - 1 = d * 2^s with d odd
  const BigUint one(1);
  const BigUint n_minus_1 = n - one;
  std::size_t s = 0;
  while (!n_minus_1.bit(s)) ++s;
  const BigUint d = n_minus_1 >> s;

  // n > 89 here, so bases are drawn from [2, n-2]
  const BigUint base_span = n - BigUint(3);
  for (int round = 0; round < rounds; ++round) {
    BigUint a = random_below(base_span, rng) + BigUint(2);
    BigUint x = mod_exp(a, d, n);
    if (x == one || x == n_minus_1) continue;
    bool witness = true;
    for (std::size_t i = 1; i < s; ++i) {
      x = x * x % n;
      if (x == n_minus_1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

BigUint random_prime(std::size_t bits, Rng& rng) {
  if (bits < 8) throw Error(Errc::BadArgument, "random_prime needs at least 8 bits");
  // two top bits set, so the product of two such primes has exactly 2 * bits bits
  const BigUint top = (BigUint(3) << (bits - 2));
  for (;;) {
    BigUint candidate = random_bits(bits - 2, rng) + top;
    if (!candidate.is_odd()) candidate += BigUint(1);
    if (candidate.bit_length() != bits) continue;
    if (is_probable_prime(candidate, kDefaultPrimalityRounds, rng)) return candidate;
  }
}

}  // namespace ppdl
