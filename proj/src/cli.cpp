#include "ppdl/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ppdl/dataset.hpp"
#include "ppdl/error.hpp"
#include "ppdl/metrics.hpp"
#include "ppdl/network.hpp"
#include "ppdl/paillier.hpp"

namespace ppdl::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutDirEnv = "PPDL_OUT_DIR";
constexpr std::string_view kConfigVersion = "1";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::NumericalDivergence: return kNumerical;
    case Errc::BadArgument: return kUsage;
    default: return kDataError;
  }
}

// Config file: "key = value" lines, '#' comments, and a mandatory "version = 1".
// Keys are the long option names of the command.
std::vector<std::pair<std::string, std::string>> parse_config(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::pair<std::string, std::string>> entries;
  std::optional<std::string> version;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "version") {
      version = value;
    } else {
      entries.emplace_back(std::move(key), std::move(value));
    }
  }
  if (!version) throw UsageError(path.string() + ": missing 'version = 1'");
  if (*version != kConfigVersion) throw UsageError(path.string() + ": unsupported config version " + *version);
  return entries;
}

std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

dataset::SplitRatios parse_ratios(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--ratios must be three comma-separated numbers, got '" + text + "'");
    }
  }
  if (parts.size() != 3) throw UsageError("--ratios must be three comma-separated numbers, got '" + text + "'");
  return {parts[0], parts[1], parts[2]};
}

fs::path manifest_path(const std::string& data_dir, const std::string& manifest) {
  return manifest.empty() ? fs::path(data_dir) / dataset::kManifestFile : fs::path(manifest);
}

// ---------------------------------------------------------------------------

struct KeygenArgs {
  std::size_t bits = paillier::kDefaultCliPrimeBits;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string name = "paillier";
};

int cmd_keygen(const KeygenArgs& a, std::ostream& out) {
  if (a.bits < 16) throw UsageError("--bits must be at least 16");
  const std::uint64_t seed = a.seed ? *a.seed : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^
                                                     std::random_device{}();
  Rng rng(seed);
  const auto keys = paillier::keygen(a.bits, rng);

  // round-trip self-test before anything touches disk
  Rng test_rng(mix_seed(seed, 0x73656c66ULL));
  for (int i = 0; i < 100; ++i) {
    const BigUint m = random_below(keys.pub.n(), test_rng);
    const auto c = paillier::encrypt_random(keys.pub, m, test_rng);
    if (paillier::decrypt(keys.priv, keys.pub, c) != m) {
      throw Error(Errc::CorruptCiphertext, "generated key failed the round-trip self-test");
    }
  }

  ensure_dir(a.out_dir);
  const fs::path pub = fs::path(a.out_dir) / (a.name + ".pub");
  const fs::path priv = fs::path(a.out_dir) / (a.name + ".key");
  write_text(pub, paillier::serialize_public(keys.pub));
  write_text(priv, paillier::serialize_private(keys));
  out << "public key:  " << pub.string() << '\n'
      << "private key: " << priv.string() << '\n'
      << "modulus bits: " << keys.pub.n().bit_length() << '\n'
      << "fingerprint: " << paillier::fingerprint_hex(keys.pub.fingerprint()) << '\n';
  return kOk;
}

struct EncryptArgs {
  std::string root;
  std::string mode = "deterministic";
  std::string public_key;
  std::string manifest;
  std::uint64_t split_seed = 42;
  std::uint64_t table_seed = 7;
  std::string ratios = "0.8,0.1,0.1";
  std::string out_dir;
  bool emit_view = false;
};

int cmd_encrypt_dataset(const EncryptArgs& a, std::ostream& out) {
  const auto mode = [&] {
    try {
      return dataset::parse_mode(a.mode);
    } catch (const Error&) {
      throw UsageError("--mode must be plain, deterministic or randomized");
    }
  }();
  if (mode == dataset::EncryptionMode::RandomizedView) throw UsageError("--mode must be plain, deterministic or randomized");
  if (mode != dataset::EncryptionMode::Plain && a.public_key.empty()) {
    throw UsageError("--public-key is required for encrypted modes");
  }
  if (a.emit_view && mode != dataset::EncryptionMode::Randomized) throw UsageError("--emit-view needs --mode randomized");
  if (a.out_dir.empty()) throw UsageError("--out-dir (or " + std::string(kOutDirEnv) + ") is required");

  dataset::Manifest source;
  if (!a.manifest.empty()) {
    source = dataset::load_manifest(a.manifest);
  } else {
    source = dataset::split(dataset::ingest(a.root), parse_ratios(a.ratios), a.split_seed);
  }
  std::optional<paillier::PublicKey> pk;
  if (!a.public_key.empty()) pk = paillier::load_public(a.public_key);

  dataset::MaterializeOptions opts;
  opts.mode = mode;
  opts.key = pk ? &*pk : nullptr;
  opts.table_seed = a.table_seed;
  opts.emit_view = a.emit_view;
  ensure_dir(a.out_dir);
  const auto result = dataset::materialize(source, a.root, a.out_dir, opts);

  out << "mode: " << dataset::mode_name(mode) << '\n';
  if (pk) out << "key fingerprint: " << paillier::fingerprint_hex(pk->fingerprint()) << '\n';
  out << "manifest: " << (fs::path(a.out_dir) / dataset::kManifestFile).string() << '\n';
  if (result.view) out << "view manifest: " << (fs::path(a.out_dir) / dataset::kViewDir / dataset::kManifestFile).string() << '\n';
  out << '\n' << dataset::format_split_table(result.manifest);
  return kOk;
}

struct TrainArgs {
  std::string data;
  std::string manifest;
  std::string out_dir;
  nn::TrainConfig config;
  std::string optimizer = "adam";
  bool no_shuffle = false;
};

int cmd_train(TrainArgs a, std::ostream& out) {
  if (a.out_dir.empty()) throw UsageError("--out-dir (or " + std::string(kOutDirEnv) + ") is required");
  try {
    a.config.optimizer.kind = nn::parse_optimizer(a.optimizer);
    a.config.shuffle_each_epoch = !a.no_shuffle;
    a.config.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto manifest = dataset::load_manifest(manifest_path(a.data, a.manifest));
  auto net = nn::build_default_net(a.config.input_size, a.config.channels,
                                   static_cast<int>(manifest.classes.size()), a.config.seed);
  nn::TrainReport report;
  try {
    report = nn::train(net, manifest, a.data, a.config);
  } catch (const Error& e) {
    if (e.code() == Errc::NumericalDivergence) {
      throw Error(Errc::NumericalDivergence, std::string(e.what()) + " (try a smaller --lr)");
    }
    throw;
  }

  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  nn::save_weights(dir / "weights.bin", report.best_weights);
  write_text(dir / "train_report.json", nn::report_to_json(report, a.config));
  write_text(dir / "train_curve.csv", nn::report_to_csv(report));
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const auto& s = report.epochs[e];
    char line[128];
    std::snprintf(line, sizeof(line), "epoch %3zu  loss %.4f  train_acc %.4f  val_acc %.4f\n", e + 1, s.train_loss,
                  s.train_accuracy, s.val_accuracy);
    out << line;
  }
  out << "best epoch: " << report.best_epoch << " (val_acc "
      << report.epochs[static_cast<std::size_t>(report.best_epoch - 1)].val_accuracy << ")\n"
      << "weights: " << (dir / "weights.bin").string() << '\n';
  return kOk;
}

struct EvaluateArgs {
  std::string weights;
  std::string data;
  std::string manifest;
  std::string split = "test";
  std::string out_dir;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  if (a.out_dir.empty()) throw UsageError("--out-dir (or " + std::string(kOutDirEnv) + ") is required");
  const auto split = [&] {
    try {
      return dataset::parse_split(a.split);
    } catch (const Error&) {
      throw UsageError("--split must be train, val or test");
    }
  }();
  const auto manifest = dataset::load_manifest(manifest_path(a.data, a.manifest));
  const auto net = nn::load_weights(a.weights);
  if (net.num_classes() != static_cast<int>(manifest.classes.size())) {
    throw Error(Errc::ShapeError, "weights have " + std::to_string(net.num_classes()) + " outputs, manifest has " +
                                      std::to_string(manifest.classes.size()) + " classes");
  }
  const auto samples = nn::load_split(manifest, a.data, split, net.input_shape().height, net.input_shape().channels);
  if (samples.size() == 0) throw Error(Errc::EmptyEvaluation, "split '" + a.split + "' is empty");
  const auto pred = nn::predict(net, samples);
  const auto cm = metrics::confusion(samples.labels, pred.labels, manifest.classes);
  const auto rep = metrics::report(cm);

  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  const fs::path report_path = dir / ("evaluation_" + a.split + ".json");
  write_text(report_path, metrics::evaluation_to_json(rep, cm));
  write_text(dir / ("confusion_" + a.split + ".csv"), metrics::confusion_to_csv(cm));
  out << metrics::format_report_table(rep) << '\n' << metrics::format_confusion(cm) << '\n'
      << "report: " << report_path.string() << '\n';
  return kOk;
}

struct CompareArgs {
  std::string plain;
  std::string encrypted;
  double threshold = 0.05;
  std::string out;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  if (!(a.threshold >= 0)) throw UsageError("--threshold must be >= 0");
  const auto plain = metrics::report_from_json(read_text(a.plain));
  const auto enc = metrics::report_from_json(read_text(a.encrypted));
  const auto cmp = metrics::compare(plain, enc, a.threshold);
  if (!a.out.empty()) write_text(a.out, metrics::comparison_to_json(cmp));
  out << metrics::format_comparison(cmp);
  return cmp.passed ? kOk : kThresholdBreach;
}

int cmd_report(const std::string& path, std::ostream& out) {
  const std::string text = read_text(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::IoError, path + " is not a JSON report: " + e.what());
  }
  const std::string format = j.value("format", "");
  if (format == "ppdl-evaluation") {
    out << metrics::format_report_table(metrics::report_from_json(text)) << '\n'
        << metrics::format_confusion(metrics::confusion_from_json(text));
  } else if (format == "ppdl-train-report") {
    out << "epoch  train_loss  train_acc  val_acc\n";
    for (const auto& row : j.at("epochs")) {
      char line[96];
      std::snprintf(line, sizeof(line), "%5d  %10.4f  %9.4f  %7.4f\n", row.at("epoch").get<int>(),
                    row.at("train_loss").get<double>(), row.at("train_accuracy").get<double>(),
                    row.at("val_accuracy").get<double>());
      out << line;
    }
    out << "best epoch: " << j.at("best_epoch").get<int>() << '\n';
  } else if (format == "ppdl-comparison") {
    metrics::ComparisonReport c;
    c.classes = j.at("classes").get<std::vector<std::string>>();
    c.plain_accuracy = j.at("plain_accuracy").get<double>();
    c.encrypted_accuracy = j.at("encrypted_accuracy").get<double>();
    c.accuracy_gap = j.at("accuracy_gap").get<double>();
    c.f1_deltas = j.at("f1_deltas").get<std::vector<double>>();
    c.threshold = j.at("threshold").get<double>();
    c.passed = j.at("passed").get<bool>();
    out << metrics::format_comparison(c);
  } else {
    throw Error(Errc::IoError, path + ": unrecognised report format '" + format + "'");
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Paillier-encrypted image classification pipeline", "ppdl"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto add_config = [](CLI::App* sub) {
    sub->add_option("--config", "Config file of 'key = value' lines (flags override it)");
  };

  KeygenArgs keygen;
  auto* kg = app.add_subcommand("keygen", "Generate a Paillier key pair");
  kg->add_option("--bits", keygen.bits, "Bits per prime (n has twice as many)");
  kg->add_option("--seed", keygen.seed, "Seed for reproducible keys (random if omitted)");
  kg->add_option("--out-dir", keygen.out_dir, "Output directory")->envname(kOutDirEnv);
  kg->add_option("--name", keygen.name, "File name stem for <name>.pub / <name>.key");
  add_config(kg);

  EncryptArgs enc;
  auto* ed = app.add_subcommand("encrypt-dataset", "Split a class-folder dataset and write plain or encrypted copies");
  ed->add_option("--root", enc.root, "Dataset root: one sub-directory per class")->required();
  ed->add_option("--mode", enc.mode, "plain | deterministic | randomized");
  ed->add_option("--public-key", enc.public_key, "Public key file");
  ed->add_option("--manifest", enc.manifest, "Reuse an existing split manifest instead of splitting");
  ed->add_option("--split-seed", enc.split_seed, "Seed for the train/val/test shuffle");
  ed->add_option("--table-seed", enc.table_seed, "Substitution-table seed (randomizer seed in randomized mode)");
  ed->add_option("--ratios", enc.ratios, "train,val,test fractions");
  ed->add_option("--out-dir", enc.out_dir, "Output directory")->envname(kOutDirEnv);
  ed->add_flag("--emit-view", enc.emit_view, "Randomized mode: also write low-byte PNG views under view/");
  add_config(ed);

  TrainArgs tr;
  auto* tc = app.add_subcommand("train", "Train the classifier on a materialized dataset");
  tc->add_option("--data", tr.data, "Dataset directory containing manifest.jsonl")->required();
  tc->add_option("--manifest", tr.manifest, "Manifest path (default <data>/manifest.jsonl)");
  tc->add_option("--out-dir", tr.out_dir, "Where weights and reports go")->envname(kOutDirEnv);
  tc->add_option("--epochs", tr.config.epochs, "Training epochs");
  tc->add_option("--batch-size", tr.config.batch_size, "Minibatch size");
  tc->add_option("--lr", tr.config.optimizer.learning_rate, "Learning rate");
  tc->add_option("--optimizer", tr.optimizer, "sgd | momentum | adam");
  tc->add_option("--momentum", tr.config.optimizer.momentum, "Momentum coefficient");
  tc->add_option("--beta1", tr.config.optimizer.beta1, "Adam beta1");
  tc->add_option("--beta2", tr.config.optimizer.beta2, "Adam beta2");
  tc->add_option("--epsilon", tr.config.optimizer.epsilon, "Adam epsilon");
  tc->add_option("--input-size", tr.config.input_size, "Square input resolution");
  tc->add_option("--channels", tr.config.channels, "1 (grayscale) or 3 (RGB)");
  tc->add_option("--seed", tr.config.seed, "Initialization and shuffle seed");
  tc->add_flag("--no-shuffle", tr.no_shuffle, "Keep the manifest order every epoch");
  add_config(tc);

  EvaluateArgs ev;
  auto* evc = app.add_subcommand("evaluate", "Score trained weights on one split");
  evc->add_option("--weights", ev.weights, "Weights file")->required();
  evc->add_option("--data", ev.data, "Dataset directory containing manifest.jsonl")->required();
  evc->add_option("--manifest", ev.manifest, "Manifest path (default <data>/manifest.jsonl)");
  evc->add_option("--split", ev.split, "train | val | test");
  evc->add_option("--out-dir", ev.out_dir, "Where the report goes")->envname(kOutDirEnv);
  add_config(evc);

  CompareArgs cmp;
  auto* cc = app.add_subcommand("compare", "Compare plain and encrypted evaluation reports");
  cc->add_option("--plain", cmp.plain, "Evaluation report on plain data")->required();
  cc->add_option("--encrypted", cmp.encrypted, "Evaluation report on encrypted data")->required();
  cc->add_option("--threshold", cmp.threshold, "Maximum tolerated |accuracy gap|");
  cc->add_option("--out", cmp.out, "Write the comparison as JSON");
  add_config(cc);

  std::string report_path;
  auto* rc = app.add_subcommand("report", "Pretty-print a stored report");
  rc->add_option("file", report_path, "Evaluation, training or comparison report")->required();

  try {
    std::vector<std::string> args = raw_args;
    if (!args.empty()) {
      if (auto cfg = find_config_path(args)) {
        auto* sub = app.get_subcommand_no_throw(args[0]);
        if (sub == nullptr) throw UsageError("--config must follow a command");
        std::vector<std::string> injected;
        for (const auto& [key, value] : parse_config(*cfg)) {
          if (key == "config" || sub->get_option_no_throw("--" + key) == nullptr) {
            throw UsageError(*cfg + ": unknown key '" + key + "' for " + args[0]);
          }
          injected.push_back("--" + key + "=" + value);
        }
        // flags given on the command line come later and win
        args.insert(args.begin() + 1, injected.begin(), injected.end());
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  }

  try {
    if (kg->parsed()) return cmd_keygen(keygen, out);
    if (ed->parsed()) return cmd_encrypt_dataset(enc, out);
    if (tc->parsed()) return cmd_train(tr, out);
    if (evc->parsed()) return cmd_evaluate(ev, out);
    if (cc->parsed()) return cmd_compare(cmp, out);
    if (rc->parsed()) return cmd_report(report_path, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace ppdl::cli
