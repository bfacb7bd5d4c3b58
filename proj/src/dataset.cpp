#include "ppdl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"
#include "parallel.hpp"
#include "ppdl/error.hpp"
#include "ppdl/rng.hpp"

namespace ppdl::dataset {

using ojson = nlohmann::ordered_json;

namespace {

constexpr int kManifestVersion = 1;
constexpr std::string_view kManifestFormat = "ppdl-manifest";

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string file_stem(const std::string& rel) { return fs::path(rel).stem().string(); }

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw Error(Errc::BadArgument, "unknown split '" + std::string(name) + "'");
}

std::string_view mode_name(EncryptionMode m) {
  switch (m) {
    case EncryptionMode::Plain: return "plain";
    case EncryptionMode::Deterministic: return "deterministic";
    case EncryptionMode::Randomized: return "randomized";
    case EncryptionMode::RandomizedView: return "randomized-view";
  }
  return "plain";
}

EncryptionMode parse_mode(std::string_view name) {
  if (name == "plain") return EncryptionMode::Plain;
  if (name == "deterministic") return EncryptionMode::Deterministic;
  if (name == "randomized") return EncryptionMode::Randomized;
  if (name == "randomized-view") return EncryptionMode::RandomizedView;
  throw Error(Errc::BadArgument, "unknown encryption mode '" + std::string(name) + "'");
}

std::vector<ManifestEntry> Manifest::in_split(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(e);
  }
  return out;
}

std::vector<std::array<std::size_t, 3>> split_counts(const Manifest& m) {
  std::vector<std::array<std::size_t, 3>> counts(m.classes.size(), {0, 0, 0});
  for (const auto& e : m.entries) ++counts.at(e.label)[static_cast<std::size_t>(e.split)];
  return counts;
}

std::string format_split_table(const Manifest& m) {
  std::size_t width = 5;
  for (const auto& c : m.classes) width = std::max(width, c.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width) + 2) << "Class" << std::right << std::setw(10) << "Training"
     << std::setw(12) << "Validation" << std::setw(10) << "Testing" << '\n';
  const auto counts = split_counts(m);
  for (std::size_t k = 0; k < m.classes.size(); ++k) {
    os << std::left << std::setw(static_cast<int>(width) + 2) << m.classes[k] << std::right << std::setw(10)
       << counts[k][0] << std::setw(12) << counts[k][1] << std::setw(10) << counts[k][2] << '\n';
  }
  return os.str();
}

ClassIndex ingest(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(Errc::IoError, "dataset root is not a directory: " + root.string());

  ClassIndex index;
  for (const auto& dir : fs::directory_iterator(root)) {
    const std::string name = dir.path().filename().string();
    if (dir.is_directory() && !name.empty() && name[0] != '.') index.classes.push_back(name);
  }
  if (index.classes.empty()) throw Error(Errc::EmptyClass, "no class directories under " + root.string());
  std::sort(index.classes.begin(), index.classes.end());

  for (const auto& cls : index.classes) {
    std::vector<std::string> files;
    for (const auto& f : fs::directory_iterator(root / cls)) {
      const std::string name = f.path().filename().string();
      if (f.is_regular_file() && name[0] != '.' && is_image_path(f.path())) files.push_back(cls + "/" + name);
    }
    if (files.empty()) throw Error(Errc::EmptyClass, "class directory has no images: " + (root / cls).string());
    std::sort(files.begin(), files.end());
    index.files.push_back(std::move(files));
  }

  std::vector<std::string> all;
  for (const auto& files : index.files) all.insert(all.end(), files.begin(), files.end());
  detail::parallel_for(all.size(), [&](std::size_t i) {
    try {
      read_image(root / all[i]);
    } catch (const Error& e) {
      throw Error(Errc::BadImage, (root / all[i]).string() + ": " + e.what());
    }
  });
  return index;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios) {
  // The epsilon absorbs representation error such as 0.1 * 10 = 0.99999...
  auto portion = [n](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
  };
  std::size_t val = std::min(portion(ratios.val), n);
  std::size_t test = std::min(portion(ratios.test), n - val);
  return {n - val - test, val, test};
}

Manifest split(const ClassIndex& index, const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0) throw Error(Errc::BadRatios, "ratios must be >= 0");
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw Error(Errc::BadRatios, "ratios must sum to 1");
  }
  if (index.classes.size() != index.files.size()) throw Error(Errc::BadArgument, "class index is inconsistent");

  Manifest m;
  m.classes = index.classes;
  m.seed = seed;
  m.ratios = ratios;
  for (std::size_t k = 0; k < index.classes.size(); ++k) {
    const auto& files = index.files[k];
    if (files.empty()) throw Error(Errc::EmptyClass, "class '" + index.classes[k] + "' is empty");
    std::vector<std::size_t> order(files.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(seed, k));
    rng.shuffle(std::span<std::size_t>(order));

    const auto sizes = split_sizes(files.size(), ratios);
    std::vector<Split> assignment(files.size(), Split::Train);
    for (std::size_t i = 0; i < sizes[1]; ++i) assignment[order[i]] = Split::Val;
    for (std::size_t i = sizes[1]; i < sizes[1] + sizes[2]; ++i) assignment[order[i]] = Split::Test;
    for (std::size_t i = 0; i < files.size(); ++i) {
      m.entries.push_back(ManifestEntry{files[i], static_cast<std::uint32_t>(k), assignment[i]});
    }
  }
  return m;
}

std::string serialize_manifest(const Manifest& m) {
  ojson header;
  header["format"] = kManifestFormat;
  header["version"] = kManifestVersion;
  header["seed"] = m.seed;
  header["ratios"] = {m.ratios.train, m.ratios.val, m.ratios.test};
  header["classes"] = m.classes;
  if (m.encryption) {
    ojson enc;
    enc["mode"] = mode_name(m.encryption->mode);
    enc["key_fingerprint"] = paillier::fingerprint_hex(m.encryption->key_fingerprint);
    enc["table_seed"] = m.encryption->table_seed;
    header["encryption"] = enc;
  } else {
    header["encryption"] = nullptr;
  }
  std::string out = header.dump() + "\n";
  for (const auto& e : m.entries) {
    ojson rec;
    rec["path"] = e.path;
    rec["label"] = m.classes.at(e.label);
    rec["split"] = split_name(e.split);
    out += rec.dump() + "\n";
  }
  return out;
}

Manifest parse_manifest(std::string_view text) {
  auto fail = [](const std::string& why) { return Error(Errc::ManifestParseError, why); };
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    auto nl = text.find('\n');
    if (nl == std::string_view::npos) throw fail("unterminated final line");
    lines.push_back(text.substr(0, nl));
    text.remove_prefix(nl + 1);
  }
  if (lines.empty()) throw fail("empty manifest");

  Manifest m;
  try {
    const auto header = ojson::parse(lines[0]);
    if (header.at("format").get<std::string>() != kManifestFormat) throw fail("not a ppdl manifest");
    if (header.at("version").get<int>() != kManifestVersion) throw fail("unsupported manifest version");
    m.seed = header.at("seed").get<std::uint64_t>();
    const auto& r = header.at("ratios");
    if (r.size() != 3) throw fail("ratios must have three entries");
    m.ratios = SplitRatios{r[0].get<double>(), r[1].get<double>(), r[2].get<double>()};
    m.classes = header.at("classes").get<std::vector<std::string>>();
    const auto& enc = header.at("encryption");
    if (!enc.is_null()) {
      m.encryption = EncryptionInfo{parse_mode(enc.at("mode").get<std::string>()),
                                    BigUint::from_hex(enc.at("key_fingerprint").get<std::string>()).low_u64(),
                                    enc.at("table_seed").get<std::uint64_t>()};
    }
    std::set<std::string> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto rec = ojson::parse(lines[i]);
      ManifestEntry e;
      e.path = rec.at("path").get<std::string>();
      const auto label = rec.at("label").get<std::string>();
      auto it = std::find(m.classes.begin(), m.classes.end(), label);
      if (it == m.classes.end()) throw fail("line " + std::to_string(i + 1) + ": unknown label '" + label + "'");
      e.label = static_cast<std::uint32_t>(it - m.classes.begin());
      e.split = parse_split(rec.at("split").get<std::string>());
      if (!seen.insert(e.path).second) throw fail("duplicate path '" + e.path + "'");
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw fail(e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::ManifestParseError) throw;
    throw fail(e.what());
  }
  return m;
}

void save_manifest(const fs::path& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << serialize_manifest(m);
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

MaterializeResult materialize(const Manifest& source, const fs::path& source_root, const fs::path& out,
                              const MaterializeOptions& options) {
  const bool encrypted = options.mode != EncryptionMode::Plain;
  if (options.mode == EncryptionMode::RandomizedView) {
    throw Error(Errc::BadArgument, "randomized-view datasets are produced via emit_view");
  }
  if (encrypted && options.key == nullptr) throw Error(Errc::BadArgument, "encrypted modes need a public key");

  std::optional<SubstitutionTable> table;
  if (options.mode == EncryptionMode::Deterministic) table = build_substitution_table(*options.key, options.table_seed);
  if (options.mode == EncryptionMode::Randomized && options.key->n() <= BigUint(255)) {
    throw Error(Errc::ModulusTooSmall, "n must exceed 255 to encrypt pixel values");
  }

  const bool randomized = options.mode == EncryptionMode::Randomized;
  const bool write_main = !randomized || options.write_ciphertexts;
  const bool write_view = randomized && options.emit_view;
  const fs::path view_root = out / kViewDir;

  MaterializeResult result;
  result.manifest.classes = source.classes;
  result.manifest.seed = source.seed;
  result.manifest.ratios = source.ratios;
  if (encrypted) result.manifest.encryption = EncryptionInfo{options.mode, options.key->fingerprint(), options.table_seed};
  Manifest view = result.manifest;
  if (write_view) view.encryption->mode = EncryptionMode::RandomizedView;

  std::set<std::string> targets;
  for (const auto& e : source.entries) {
    const std::string dir = std::string(split_name(e.split)) + "/" + source.classes.at(e.label) + "/";
    const std::string stem = file_stem(e.path);
    ManifestEntry main_entry{dir + stem + (randomized ? ".pci" : ".png"), e.label, e.split};
    if (!targets.insert(main_entry.path).second) {
      throw Error(Errc::IoError, "two inputs map to the same output " + main_entry.path);
    }
    result.manifest.entries.push_back(main_entry);
    view.entries.push_back(ManifestEntry{dir + stem + ".png", e.label, e.split});
  }

  std::error_code ec;
  for (const auto& cls : source.classes) {
    for (Split s : {Split::Train, Split::Val, Split::Test}) {
      if (write_main) fs::create_directories(out / split_name(s) / cls, ec);
      if (write_view) fs::create_directories(view_root / split_name(s) / cls, ec);
      if (ec) throw Error(Errc::IoError, "cannot create directories under " + out.string() + ": " + ec.message());
    }
  }

  detail::parallel_for(source.entries.size(), [&](std::size_t i) {
    const auto& src = source.entries[i];
    const fs::path in_path = source_root / src.path;
    ImageTensor img;
    try {
      img = read_image(in_path);
    } catch (const Error& e) {
      throw Error(Errc::BadImage, in_path.string() + ": " + e.what());
    }
    switch (options.mode) {
      case EncryptionMode::Plain:
        write_png(out / result.manifest.entries[i].path, img);
        break;
      case EncryptionMode::Deterministic:
        write_png(out / result.manifest.entries[i].path, encrypt_image_deterministic(img, *table));
        break;
      case EncryptionMode::Randomized: {
        // The per-image stream depends only on the seed and the source path.
        Rng rng(mix_seed(options.table_seed, fnv1a(src.path)));
        const auto ci = encrypt_image_randomized(img, *options.key, rng);
        if (write_main) write_cipher_image(out / result.manifest.entries[i].path, ci);
        if (write_view) write_png(view_root / view.entries[i].path, cipher_image_to_view(ci));
        break;
      }
      case EncryptionMode::RandomizedView:
        break;
    }
  });

  if (write_main) save_manifest(out / kManifestFile, result.manifest);
  if (write_view) {
    save_manifest(view_root / kManifestFile, view);
    result.view = std::move(view);
  }
  return result;
}

}  // namespace ppdl::dataset
