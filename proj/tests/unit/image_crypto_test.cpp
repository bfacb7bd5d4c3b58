#include "ppdl/image_crypto.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "ppdl/error.hpp"

namespace {

using ppdl::BigUint;
using ppdl::Errc;
using ppdl::ImageTensor;
using ppdl::Rng;
namespace pl = ppdl::paillier;

const pl::KeyPair& key512() {
  static const pl::KeyPair keys = [] {
    Rng rng(2048);
    return pl::keygen(512, rng);
  }();
  return keys;
}

const pl::KeyPair& key64() {
  static const pl::KeyPair keys = [] {
    Rng rng(64);
    return pl::keygen(64, rng);
  }();
  return keys;
}

ImageTensor random_image(int w, int h, int c, std::uint64_t seed) {
  ImageTensor img(w, h, c);
  Rng rng(seed);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

bool is_permutation_of_bytes(const ppdl::SubstitutionTable& t) {
  std::array<std::uint8_t, 256> sorted = t.table;
  std::sort(sorted.begin(), sorted.end());
  for (int v = 0; v < 256; ++v) {
    if (sorted[v] != v) return false;
  }
  return true;
}

TEST(SubstitutionTableTest, PermutationAndDeterminism) {
  const auto& pk = key512().pub;
  for (std::uint64_t seed : {0ULL, 1ULL, 7ULL, 123456789ULL}) {
    const auto t = ppdl::build_substitution_table(pk, seed);
    EXPECT_TRUE(is_permutation_of_bytes(t));
    EXPECT_EQ(t, ppdl::build_substitution_table(pk, seed));
    EXPECT_EQ(t.key_fingerprint, pk.fingerprint());
    EXPECT_EQ(t.seed, seed);
  }
  EXPECT_NE(ppdl::build_substitution_table(pk, 1).table, ppdl::build_substitution_table(pk, 2).table);
  EXPECT_NE(ppdl::build_substitution_table(pk, 1).table, ppdl::build_substitution_table(key64().pub, 1).table);
}

TEST(SubstitutionTableTest, MatchesRankOfFixedRandomizerCiphertexts) {
  const auto& pk = key64().pub;
  const auto t = ppdl::build_substitution_table(pk, 99);
  const BigUint r = ppdl::derive_table_randomizer(pk, 99);
  EXPECT_EQ(ppdl::gcd(r, pk.n()), BigUint(1));
  std::vector<std::pair<BigUint, int>> cs;
  for (int v = 0; v < 256; ++v) cs.emplace_back(pl::encrypt(pk, BigUint(v), r).value, v);
  std::sort(cs.begin(), cs.end());
  for (int rank = 0; rank < 256; ++rank) EXPECT_EQ(t[static_cast<std::uint8_t>(cs[rank].second)], rank);
}

TEST(SubstitutionTableTest, ToyDomainRanksMatchIndependentOracle) {
  const auto keys = pl::from_primes(BigUint(5), BigUint(7), BigUint(36));
  const oracle::ToyPaillier o{5, 7, 36};
  for (std::uint64_t r : {1u, 2u, 3u, 4u, 6u, 8u, 11u}) {
    const auto ranks = ppdl::rank_fixed_r_ciphertexts(keys.pub, BigUint(r), 4);
    std::vector<std::pair<std::uint64_t, std::uint32_t>> oracle_cs;
    for (std::uint32_t v = 0; v < 4; ++v) oracle_cs.emplace_back(o.encrypt(v, r), v);
    std::stable_sort(oracle_cs.begin(), oracle_cs.end());
    std::vector<std::uint32_t> expected(4);
    for (std::uint32_t i = 0; i < 4; ++i) expected[oracle_cs[i].second] = i;
    EXPECT_EQ(ranks, expected) << "r=" << r;
    auto sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<std::uint32_t>{0, 1, 2, 3}));
  }
  // r = 4: ciphertexts 324, 639, 954, 44 for v = 0..3
  EXPECT_EQ(o.encrypt(3, 4), 44u);
  EXPECT_EQ(ppdl::rank_fixed_r_ciphertexts(keys.pub, BigUint(4), 4), (std::vector<std::uint32_t>{1, 2, 3, 0}));
}

TEST(SubstitutionTableTest, ModulusTooSmall) {
  const auto keys = pl::from_primes(BigUint(5), BigUint(7), BigUint(36));
  try {
    ppdl::build_substitution_table(keys.pub, 1);
    FAIL();
  } catch (const ppdl::Error& e) {
    EXPECT_EQ(e.code(), Errc::ModulusTooSmall);
  }
  // n = 17 * 19 = 323 is large enough
  const auto ok = pl::from_primes(BigUint(17), BigUint(19), BigUint(324));
  EXPECT_TRUE(is_permutation_of_bytes(ppdl::build_substitution_table(ok.pub, 1)));
}

TEST(DeterministicImageTest, ConstantImage) {
  const auto t = ppdl::build_substitution_table(key64().pub, 3);
  const ImageTensor zero(6, 5, 1, 0);
  const ImageTensor enc = ppdl::encrypt_image_deterministic(zero, t);
  EXPECT_EQ(enc, ImageTensor(6, 5, 1, t[0]));
}

TEST(DeterministicImageTest, InverseRoundTrip) {
  const auto t = ppdl::build_substitution_table(key64().pub, 5);
  const auto inv = t.inverse();
  for (int v = 0; v < 256; ++v) EXPECT_EQ(inv[t[static_cast<std::uint8_t>(v)]], v);
  for (int c : {1, 3}) {
    const ImageTensor img = random_image(17, 11, c, 40 + c);
    EXPECT_EQ(ppdl::encrypt_image_deterministic(ppdl::encrypt_image_deterministic(img, t), inv), img);
  }
}

TEST(DeterministicImageTest, HistogramIsPermuted) {
  const auto t = ppdl::build_substitution_table(key64().pub, 11);
  const ImageTensor img = random_image(32, 32, 1, 8);
  const ImageTensor enc = ppdl::encrypt_image_deterministic(img, t);
  std::array<int, 256> in{}, out{};
  for (auto p : img.pixels) ++in[p];
  for (auto p : enc.pixels) ++out[p];
  for (int v = 0; v < 256; ++v) EXPECT_EQ(in[v], out[t[static_cast<std::uint8_t>(v)]]);
}

TEST(DeterministicImageTest, CommutesWithCrop) {
  const auto t = ppdl::build_substitution_table(key64().pub, 12);
  const ImageTensor img = random_image(20, 15, 1, 9);
  EXPECT_EQ(ppdl::encrypt_image_deterministic(ppdl::crop(img, 3, 4, 9, 7), t),
            ppdl::crop(ppdl::encrypt_image_deterministic(img, t), 3, 4, 9, 7));
}

TEST(DeterministicImageTest, OnePixelDifferenceStaysLocal) {
  const auto t = ppdl::build_substitution_table(key64().pub, 13);
  const ImageTensor a = random_image(12, 12, 1, 10);
  ImageTensor b = a;
  b.at(5, 7) = static_cast<std::uint8_t>(a.at(5, 7) ^ 0x5a);
  const ImageTensor ea = ppdl::encrypt_image_deterministic(a, t);
  const ImageTensor eb = ppdl::encrypt_image_deterministic(b, t);
  EXPECT_EQ(ea, ppdl::encrypt_image_deterministic(a, t));
  std::size_t diffs = 0;
  for (std::size_t i = 0; i < ea.size(); ++i) diffs += ea.pixels[i] != eb.pixels[i];
  EXPECT_EQ(diffs, 1u);
  EXPECT_NE(ea.at(5, 7), eb.at(5, 7));
}

TEST(RandomizedImageTest, RoundTrip16x16With512BitKey) {
  const auto& k = key512();
  const ImageTensor img = random_image(16, 16, 1, 77);
  Rng rng(1);
  const auto ci = ppdl::encrypt_image_randomized(img, k.pub, rng);
  ASSERT_EQ(ci.ciphertexts.size(), 256u);
  for (const auto& c : ci.ciphertexts) EXPECT_EQ(c.key_fingerprint, k.pub.fingerprint());
  EXPECT_EQ(ppdl::decrypt_cipher_image(ci, k.priv, k.pub), img);
}

TEST(RandomizedImageTest, SeedDeterminismAndFreshness) {
  const auto& k = key64();
  const ImageTensor img(4, 4, 1, 100);
  Rng a(5), b(5), c(6);
  const auto c1 = ppdl::encrypt_image_randomized(img, k.pub, a);
  const auto c2 = ppdl::encrypt_image_randomized(img, k.pub, b);
  const auto c3 = ppdl::encrypt_image_randomized(img, k.pub, c);
  EXPECT_EQ(c1, c2);
  for (std::size_t i = 0; i < c1.ciphertexts.size(); ++i) EXPECT_NE(c1.ciphertexts[i].value, c3.ciphertexts[i].value);
  // equal pixels still get distinct ciphertexts within one image
  EXPECT_NE(c1.ciphertexts[0].value, c1.ciphertexts[1].value);
}

TEST(RandomizedImageTest, UnitRandomizerGivesIdentityCiphertext) {
  const auto& k = key64();
  const ImageTensor img(1, 1, 1, 0);
  const std::vector<BigUint> rs{BigUint(1)};
  const auto ci = ppdl::encrypt_image_randomized(img, k.pub, rs);
  EXPECT_EQ(ci.ciphertexts[0].value, BigUint(1));
}

TEST(RandomizedImageTest, ModulusTooSmall) {
  const auto keys = pl::from_primes(BigUint(5), BigUint(7), BigUint(36));
  Rng rng(1);
  try {
    ppdl::encrypt_image_randomized(ImageTensor(1, 1, 1), keys.pub, rng);
    FAIL();
  } catch (const ppdl::Error& e) {
    EXPECT_EQ(e.code(), Errc::ModulusTooSmall);
  }
}

TEST(CipherViewTest, LowByte) {
  ppdl::RandomizedCipherImage ci;
  ci.width = 3;
  ci.height = 1;
  ci.ciphertexts = {{BigUint(44), 0}, {BigUint(300), 0}, {BigUint::from_hex("1ff"), 0}};
  const ImageTensor view = ppdl::cipher_image_to_view(ci);
  EXPECT_EQ(view.pixels, (std::vector<std::uint8_t>{44, 44, 255}));

  Rng rng(3);
  const ImageTensor img = random_image(7, 5, 3, 4);
  const ImageTensor v = ppdl::cipher_image_to_view(ppdl::encrypt_image_randomized(img, key64().pub, rng));
  EXPECT_EQ(v.width, 7);
  EXPECT_EQ(v.height, 5);
  EXPECT_EQ(v.channels, 3);
}

TEST(CipherFileTest, RoundTripAndCorruption) {
  const auto& k = key64();
  Rng rng(8);
  const auto ci = ppdl::encrypt_image_randomized(random_image(5, 3, 1, 2), k.pub, rng);
  const std::string text = ppdl::serialize_cipher_image(ci);
  EXPECT_EQ(text.rfind("PPDLCI 1 5 3 1 " + pl::fingerprint_hex(k.pub.fingerprint()) + "\n", 0), 0u);
  EXPECT_EQ(ppdl::deserialize_cipher_image(text), ci);

  const auto path = std::filesystem::temp_directory_path() / ("ppdl_cipher_test_" + std::to_string(::getpid()) + ".pci");
  ppdl::write_cipher_image(path, ci);
  EXPECT_EQ(ppdl::read_cipher_image(path), ci);

  for (std::size_t cut : {std::size_t{3}, text.size() / 2, text.size() - 1}) {
    try {
      ppdl::deserialize_cipher_image(text.substr(0, cut));
      ADD_FAILURE() << cut;
    } catch (const ppdl::Error& e) {
      EXPECT_EQ(e.code(), Errc::BadImage);
    }
  }
  std::string bad_len = text;
  const auto colon = bad_len.find(':');
  bad_len[colon - 1] = bad_len[colon - 1] == '9' ? '8' : '9';
  EXPECT_THROW(ppdl::deserialize_cipher_image(bad_len), ppdl::Error);
}

}  // namespace
