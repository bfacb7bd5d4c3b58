#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ppdl/image_crypto.hpp"
#include "ppdl/paillier.hpp"

namespace ppdl::dataset {

namespace fs = std::filesystem;

enum class Split { Train, Val, Test };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;

  friend bool operator==(const SplitRatios&, const SplitRatios&) = default;
};

/// Result of scanning a folder-of-class-folders dataset.
struct ClassIndex {
  std::vector<std::string> classes;              // sorted
  std::vector<std::vector<std::string>> files;   // per class, "<class>/<file>", sorted
};

struct ManifestEntry {
  std::string path;  // relative to the dataset root the manifest describes
  std::uint32_t label = 0;
  Split split = Split::Train;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

enum class EncryptionMode { Plain, Deterministic, Randomized, RandomizedView };

std::string_view mode_name(EncryptionMode m);
EncryptionMode parse_mode(std::string_view name);

struct EncryptionInfo {
  EncryptionMode mode = EncryptionMode::Deterministic;
  std::uint64_t key_fingerprint = 0;
  std::uint64_t table_seed = 0;

  friend bool operator==(const EncryptionInfo&, const EncryptionInfo&) = default;
};

struct Manifest {
  std::vector<std::string> classes;
  std::uint64_t seed = 0;
  SplitRatios ratios;
  std::optional<EncryptionInfo> encryption;
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> in_split(Split s) const;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Per-class (train, val, test) counts.
std::vector<std::array<std::size_t, 3>> split_counts(const Manifest& m);

/// Table-style summary: one row per class, Training / Validation / Testing.
std::string format_split_table(const Manifest& m);

/// Scans `root`: every non-hidden subdirectory is a class, every .png/.pgm/.ppm
/// inside it a sample. Each image is decoded once to prove it is readable.
/// Throws EmptyClass (no classes, or a class without images) or BadImage.
ClassIndex ingest(const fs::path& root);

/// Sizes of (train, val, test) for a class of n items: val and test are
/// floor(ratio * n), train takes the remainder.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios);

/// Stratified seeded split. Each class is shuffled with its own Rng derived
/// from (seed, class index); the first val-count items go to val, the next
/// test-count to test, the rest to train. Entries are ordered by class then path.
/// Throws BadRatios for negative ratios or a sum away from 1 by more than 1e-9.
Manifest split(const ClassIndex& index, const SplitRatios& ratios, std::uint64_t seed);

// Manifest file: JSON lines. First line is the header object
//   {"format":"ppdl-manifest","version":1,"seed":..,"ratios":[..],"classes":[..],"encryption":..}
// then one {"path":..,"label":..,"split":..} object per entry, fields in that order.
std::string serialize_manifest(const Manifest& m);
Manifest parse_manifest(std::string_view text);
void save_manifest(const fs::path& path, const Manifest& m);
Manifest load_manifest(const fs::path& path);

inline constexpr std::string_view kManifestFile = "manifest.jsonl";
inline constexpr std::string_view kViewDir = "view";

struct MaterializeOptions {
  EncryptionMode mode = EncryptionMode::Plain;
  const paillier::PublicKey* key = nullptr;  // required for encrypted modes
  std::uint64_t table_seed = 0;               // table seed, or randomizer seed in randomized mode
  bool emit_view = false;                     // randomized mode: also write low-byte PNG views
  bool write_ciphertexts = true;              // randomized mode: write .pci cipher files
};

struct MaterializeResult {
  Manifest manifest;
  std::optional<Manifest> view;  // dataset under <out>/view when emit_view is set
};

/// Writes `<out>/<split>/<class>/<stem>.{png,pci}` plus `<out>/manifest.jsonl`.
/// Split assignment and labels are copied verbatim from `source`.
MaterializeResult materialize(const Manifest& source, const fs::path& source_root, const fs::path& out,
                              const MaterializeOptions& options);

}  // namespace ppdl::dataset
