#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ppdl/image.hpp"
#include "ppdl/paillier.hpp"

namespace ppdl {

/// Key-dependent bijection on pixel values [0, 255].
///
/// A single randomizer r is derived from (key fingerprint, seed); every pixel
/// value v is encrypted as c_v = g^v * r^n mod n^2 and table[v] is the rank of
/// c_v among the 256 ciphertexts. Fixed-r encryption is injective in v, so the
/// ranks form a permutation.
///
/// This is deterministic encryption: equal pixels map to equal outputs and
/// value frequencies are preserved. It keeps the encrypted data learnable at
/// the cost of semantic security.
struct SubstitutionTable {
  std::array<std::uint8_t, 256> table{};
  std::uint64_t key_fingerprint = 0;
  std::uint64_t seed = 0;

  std::uint8_t operator[](std::uint8_t v) const { return table[v]; }
  SubstitutionTable inverse() const;

  friend bool operator==(const SubstitutionTable&, const SubstitutionTable&) = default;
};

/// Per-pixel Paillier ciphertexts, row-major with interleaved channels.
struct RandomizedCipherImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::uint64_t key_fingerprint = 0;
  std::vector<paillier::Ciphertext> ciphertexts;

  friend bool operator==(const RandomizedCipherImage&, const RandomizedCipherImage&) = default;
};

/// The randomizer used by the substitution table for (pk, seed).
BigUint derive_table_randomizer(const paillier::PublicKey& pk, std::uint64_t seed);

/// Ranks of encrypt(pk, v, r) for v in [0, domain). Exposed for small-domain checks.
std::vector<std::uint32_t> rank_fixed_r_ciphertexts(const paillier::PublicKey& pk, const BigUint& r,
                                                    std::uint32_t domain);

/// Throws ModulusTooSmall when n <= 255.
SubstitutionTable build_substitution_table(const paillier::PublicKey& pk, std::uint64_t seed);

ImageTensor encrypt_image_deterministic(const ImageTensor& img, const SubstitutionTable& table);

/// Fresh randomizer per pixel, drawn sequentially from `rng`.
RandomizedCipherImage encrypt_image_randomized(const ImageTensor& img, const paillier::PublicKey& pk, Rng& rng);

/// Caller-supplied randomizers, one per pixel.
RandomizedCipherImage encrypt_image_randomized(const ImageTensor& img, const paillier::PublicKey& pk,
                                               std::span<const BigUint> randomizers);

ImageTensor decrypt_cipher_image(const RandomizedCipherImage& ci, const paillier::PrivateKey& sk,
                                 const paillier::PublicKey& pk);

/// Low byte of every ciphertext, for viewing.
ImageTensor cipher_image_to_view(const RandomizedCipherImage& ci);

// Cipher image file:
//   "PPDLCI <version> <width> <height> <channels> <fingerprint hex16>\n"
//   then one line per ciphertext, row-major: "<hex length>:<lowercase hex>\n"
std::string serialize_cipher_image(const RandomizedCipherImage& ci);
RandomizedCipherImage deserialize_cipher_image(std::string_view text);
void write_cipher_image(const std::filesystem::path& path, const RandomizedCipherImage& ci);
RandomizedCipherImage read_cipher_image(const std::filesystem::path& path);

}  // namespace ppdl
