#include "ppdl/image_crypto.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ppdl/error.hpp"
#include "parallel.hpp"

namespace ppdl {

namespace {

constexpr std::uint64_t kTableDomain = 0x7461626c65ULL;
constexpr int kCipherImageVersion = 1;

void require_pixel_capacity(const paillier::PublicKey& pk) {
  if (pk.n() <= BigUint(255)) throw Error(Errc::ModulusTooSmall, "n must exceed 255 to encrypt pixel values");
}

}  // namespace

SubstitutionTable SubstitutionTable::inverse() const {
  SubstitutionTable inv = *this;
  for (int v = 0; v < 256; ++v) inv.table[table[v]] = static_cast<std::uint8_t>(v);
  return inv;
}

BigUint derive_table_randomizer(const paillier::PublicKey& pk, std::uint64_t seed) {
  Rng rng(mix_seed(mix_seed(pk.fingerprint(), seed), kTableDomain));
  return paillier::random_randomizer(pk, rng);
}

std::vector<std::uint32_t> rank_fixed_r_ciphertexts(const paillier::PublicKey& pk, const BigUint& r,
                                                    std::uint32_t domain) {
  std::vector<BigUint> values;
  values.reserve(domain);
  for (std::uint32_t v = 0; v < domain; ++v) values.push_back(paillier::encrypt(pk, BigUint(v), r).value);

  std::vector<std::uint32_t> order(domain);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
  std::vector<std::uint32_t> rank(domain);
  for (std::uint32_t i = 0; i < domain; ++i) rank[order[i]] = i;
  return rank;
}

SubstitutionTable build_substitution_table(const paillier::PublicKey& pk, std::uint64_t seed) {
  require_pixel_capacity(pk);
  const auto rank = rank_fixed_r_ciphertexts(pk, derive_table_randomizer(pk, seed), 256);
  SubstitutionTable t;
  t.key_fingerprint = pk.fingerprint();
  t.seed = seed;
  for (int v = 0; v < 256; ++v) t.table[v] = static_cast<std::uint8_t>(rank[v]);
  return t;
}

ImageTensor encrypt_image_deterministic(const ImageTensor& img, const SubstitutionTable& table) {
  img.validate();
  ImageTensor out = img;
  for (auto& p : out.pixels) p = table[p];
  return out;
}

RandomizedCipherImage encrypt_image_randomized(const ImageTensor& img, const paillier::PublicKey& pk,
                                               std::span<const BigUint> randomizers) {
  img.validate();
  require_pixel_capacity(pk);
  if (randomizers.size() != img.size()) throw Error(Errc::BadArgument, "need one randomizer per pixel");
  RandomizedCipherImage ci;
  ci.width = img.width;
  ci.height = img.height;
  ci.channels = img.channels;
  ci.key_fingerprint = pk.fingerprint();
  ci.ciphertexts.resize(img.size());
  detail::parallel_for(img.size(), [&](std::size_t i) {
    ci.ciphertexts[i] = paillier::encrypt(pk, BigUint(img.pixels[i]), randomizers[i]);
  });
  return ci;
}

RandomizedCipherImage encrypt_image_randomized(const ImageTensor& img, const paillier::PublicKey& pk, Rng& rng) {
  img.validate();
  require_pixel_capacity(pk);
  std::vector<BigUint> rs;
  rs.reserve(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) rs.push_back(paillier::random_randomizer(pk, rng));
  return encrypt_image_randomized(img, pk, rs);
}

ImageTensor decrypt_cipher_image(const RandomizedCipherImage& ci, const paillier::PrivateKey& sk,
                                 const paillier::PublicKey& pk) {
  ImageTensor out(ci.width, ci.height, ci.channels);
  if (ci.ciphertexts.size() != out.size()) throw Error(Errc::BadImage, "cipher grid size mismatch");
  for (std::size_t i = 0; i < out.size(); ++i) {
    BigUint m = paillier::decrypt(sk, pk, ci.ciphertexts[i]);
    if (m > BigUint(255)) throw Error(Errc::CorruptCiphertext, "decrypted pixel exceeds 255");
    out.pixels[i] = static_cast<std::uint8_t>(m.low_u64());
  }
  return out;
}

ImageTensor cipher_image_to_view(const RandomizedCipherImage& ci) {
  ImageTensor out(ci.width, ci.height, ci.channels);
  if (ci.ciphertexts.size() != out.size()) throw Error(Errc::BadImage, "cipher grid size mismatch");
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.pixels[i] = static_cast<std::uint8_t>(ci.ciphertexts[i].value.low_u64() & 0xff);
  }
  return out;
}

std::string serialize_cipher_image(const RandomizedCipherImage& ci) {
  std::string out = "PPDLCI " + std::to_string(kCipherImageVersion) + " " + std::to_string(ci.width) + " " +
                    std::to_string(ci.height) + " " + std::to_string(ci.channels) + " " +
                    paillier::fingerprint_hex(ci.key_fingerprint) + "\n";
  for (const auto& c : ci.ciphertexts) {
    const std::string hex = c.value.to_hex();
    out += std::to_string(hex.size());
    out += ':';
    out += hex;
    out += '\n';
  }
  return out;
}

RandomizedCipherImage deserialize_cipher_image(std::string_view text) {
  auto fail = [](const std::string& why) -> Error { return Error(Errc::BadImage, "cipher image: " + why); };
  auto nl = text.find('\n');
  if (nl == std::string_view::npos) throw fail("missing header");
  std::istringstream header{std::string(text.substr(0, nl))};
  std::string magic, fp_hex;
  int version = 0;
  RandomizedCipherImage ci;
  if (!(header >> magic >> version >> ci.width >> ci.height >> ci.channels >> fp_hex) || magic != "PPDLCI") {
    throw fail("malformed header");
  }
  if (version != kCipherImageVersion) throw fail("unsupported version " + std::to_string(version));
  if (ci.width <= 0 || ci.height <= 0 || (ci.channels != 1 && ci.channels != 3)) throw fail("bad dimensions");
  if (fp_hex.size() != 16) throw fail("bad fingerprint");
  ci.key_fingerprint = BigUint::from_hex(fp_hex).low_u64();

  const std::size_t count = static_cast<std::size_t>(ci.width) * ci.height * ci.channels;
  ci.ciphertexts.reserve(count);
  std::size_t pos = nl + 1;
  for (std::size_t i = 0; i < count; ++i) {
    auto colon = text.find(':', pos);
    if (colon == std::string_view::npos) throw fail("truncated at ciphertext " + std::to_string(i));
    std::size_t len = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + colon, len);
    if (ec != std::errc() || ptr != text.data() + colon || len == 0) throw fail("bad length prefix");
    if (colon + 1 + len + 1 > text.size() || text[colon + 1 + len] != '\n') throw fail("length prefix mismatch");
    ci.ciphertexts.push_back(
        paillier::Ciphertext{BigUint::from_hex(text.substr(colon + 1, len)), ci.key_fingerprint});
    pos = colon + 1 + len + 1;
  }
  if (pos != text.size()) throw fail("trailing data");
  return ci;
}

void write_cipher_image(const std::filesystem::path& path, const RandomizedCipherImage& ci) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  const std::string s = serialize_cipher_image(ci);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

RandomizedCipherImage read_cipher_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_cipher_image(ss.str());
}

}  // namespace ppdl
