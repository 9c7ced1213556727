#include "lmsx/commands.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "lmsx/angular.hpp"
#include "lmsx/errors.hpp"
#include "lmsx/gradcheck.hpp"
#include "lmsx/loss.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace lmsx {
namespace {

constexpr const char* kMnistBase = "https://ossci-datasets.s3.amazonaws.com/mnist/";

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

}  // namespace

std::string md5_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_md5(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("MD5 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    char b[3];
    std::snprintf(b, sizeof b, "%02x", digest[i]);
    hex += b;
  }
  return hex;
}

DatasetRegistry mnist_registry() {
  DatasetRegistry r;
  r.name = "mnist";
  const char* files[4] = {"train-images-idx3-ubyte.gz", "train-labels-idx1-ubyte.gz",
                          "t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz"};
  const char* md5s[4] = {"f68b3c2dcbeaaa9fbdd348bbdeb94873", "d53e105ee54ea40749a09fcbcd1e9432",
                         "9fb629c4189551a2d022fa330f9573f3", "ec29112dd5afa0611ce80d1b7f02629c"};
  for (int i = 0; i < 4; ++i) {
    r.files.push_back(RemoteFile{files[i], std::string(kMnistBase) + files[i], md5s[i]});
  }
  return r;
}

Downloader http_downloader() {
  return [](const std::string& url) -> std::vector<std::uint8_t> {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw NetworkFailureError("malformed url " + url);
    const auto host_begin = scheme_end + 3;
    const auto path_begin = url.find('/', host_begin);
    const std::string origin = url.substr(0, path_begin);
    const std::string path = path_begin == std::string::npos ? "/" : url.substr(path_begin);

    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    auto res = client.Get(path);
    if (!res) {
      throw NetworkFailureError("request to " + url + " failed: " + to_string(res.error()));
    }
    if (res->status != 200) {
      throw NetworkFailureError("request to " + url + " returned status " +
                                std::to_string(res->status));
    }
    return std::vector<std::uint8_t>(res->body.begin(), res->body.end());
  };
}

FetchResult fetch_dataset(const DatasetRegistry& registry, const std::filesystem::path& dest,
                          const Downloader& download, std::ostream& log) {
  std::filesystem::create_directories(dest);
  FetchResult result;
  for (const RemoteFile& file : registry.files) {
    const auto target = dest / file.filename;
    if (std::filesystem::exists(target)) {
      const auto digest = md5_hex(read_file_bytes(target));
      if (digest == file.md5_hex) {
        log << "kept " << target.string() << " (checksum ok)\n";
        ++result.kept;
        continue;
      }
      log << "checksum mismatch for " << target.string() << ": have " << digest << ", want "
          << file.md5_hex << "; re-downloading\n";
    }
    const auto bytes = download(file.url);
    const auto digest = md5_hex(bytes);
    if (digest != file.md5_hex) {
      throw ChecksumMismatchError("downloaded " + file.url + " has md5 " + digest +
                                  ", expected " + file.md5_hex);
    }
    write_file_bytes(target, bytes);
    log << "fetched " << target.string() << " (" << bytes.size() << " bytes)\n";
    ++result.downloaded;
  }
  return result;
}

std::vector<NamedTensor> state_to_tensors(const NetworkSpec& spec, const TrainState& state) {
  std::vector<NamedTensor> tensors;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const auto& p = state.net_params[li];
    const std::string prefix = "layer" + std::to_string(li) + ".";
    if (p.weights.size()) tensors.push_back({prefix + "weights", p.weights});
    if (p.bias.size()) tensors.push_back({prefix + "bias", p.bias});
    if (p.slopes.size()) tensors.push_back({prefix + "slopes", p.slopes});
  }
  tensors.push_back({"classifier", state.classifier});
  return tensors;
}

TrainState tensors_to_state(const NetworkSpec& spec, int num_classes,
                            const std::vector<NamedTensor>& tensors) {
  TrainState state;
  state.net_params = init_params(spec, 0);
  auto find = [&tensors](const std::string& name) -> const Tensor& {
    for (const auto& t : tensors) {
      if (t.name == name) return t.value;
    }
    throw ShapeMismatchError("parameter file is missing tensor '" + name + "'");
  };
  auto assign = [&find](Tensor& dst, const std::string& name) {
    const Tensor& src = find(name);
    if (!dst.same_shape(src)) {
      throw ShapeMismatchError("tensor '" + name + "' has shape " +
                               shape_to_string(src.shape()) + ", network expects " +
                               shape_to_string(dst.shape()));
    }
    dst = src;
  };
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    auto& p = state.net_params[li];
    const std::string prefix = "layer" + std::to_string(li) + ".";
    if (p.weights.size()) assign(p.weights, prefix + "weights");
    if (p.bias.size()) assign(p.bias, prefix + "bias");
    if (p.slopes.size()) assign(p.slopes, prefix + "slopes");
  }
  state.classifier = Tensor({static_cast<std::size_t>(num_classes), spec.feature_dim});
  assign(state.classifier, "classifier");
  state.classifier_velocity = Tensor::zeros_like(state.classifier);
  return state;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRow>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "iteration,lambda,learning_rate,train_loss,val_error\n";
  for (const auto& row : history) {
    out << row.iteration << "," << format_double(row.lambda) << ","
        << format_double(row.learning_rate) << "," << format_double(row.train_loss) << ",";
    if (row.val_error) out << format_double(*row.val_error);
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

TrainArtifacts cmd_train(const ExperimentConfig& config, std::ostream& log) {
  const DatasetSplit data = load_dataset(config);
  const NetworkSpec spec = resolve_network(config, input_shape_of(config));
  std::filesystem::create_directories(config.output_dir);

  TrainState state = train(spec, data, config.optim);

  TrainArtifacts artifacts;
  artifacts.metrics_csv = config.output_dir / "metrics.csv";
  write_metrics_csv(artifacts.metrics_csv, state.history);
  artifacts.params = config.output_dir / "final_params";
  save_params(artifacts.params, state_to_tensors(spec, state));
  artifacts.resolved_config = config.output_dir / "resolved_config.ini";
  write_text_file(artifacts.resolved_config, resolved_config_text(config));
  artifacts.final_train_loss =
      state.history.empty() ? 0.0 : state.history.back().train_loss;

  if (config.feature_dim <= 16) {
    const Tensor train_features = network_forward(spec, state.net_params, data.train.features);
    artifacts.features_train = config.output_dir / "features_train.csv";
    export_features(train_features, data.train.labels, *artifacts.features_train);
    if (data.test.size() > 0) {
      const Tensor test_features = network_forward(spec, state.net_params, data.test.features);
      artifacts.features_test = config.output_dir / "features_test.csv";
      export_features(test_features, data.test.labels, *artifacts.features_test);
    }
  }

  log << "trained " << config.optim.max_iterations << " iterations; final train loss "
      << format_double(artifacts.final_train_loss) << "\n";
  log << "artifacts in " << config.output_dir.string() << "\n";
  return artifacts;
}

EvalReport cmd_eval(const std::filesystem::path& params_path, const ExperimentConfig& config,
                    std::ostream& log) {
  const DatasetSplit data = load_dataset(config);
  const NetworkSpec spec = resolve_network(config, input_shape_of(config));
  const int num_classes = config.data.source == "mnist" ? 10 : config.data.classes;
  TrainState state = tensors_to_state(spec, num_classes, load_params(params_path));

  const LabeledData& eval_set = data.test.size() > 0 ? data.test : data.train;
  const Tensor features = network_forward(spec, state.net_params, eval_set.features);

  EvalReport report;
  report.accuracy = accuracy(features, eval_set.labels, state.classifier);
  std::filesystem::create_directories(config.output_dir);
  report.confusion_csv = config.output_dir / "confusion.csv";
  export_confusion(cosine_confusion(features, eval_set.labels), report.confusion_csv);
  report.angular_stats_csv = config.output_dir / "angular_stats.csv";
  export_angular_stats(angular_stats(features, eval_set.labels), report.angular_stats_csv);

  if (config.data.pairs > 0) {
    // Balanced same/different pairs drawn from the evaluation set.
    std::mt19937_64 rng(config.optim.seed + 7);
    const std::size_t n = eval_set.size();
    const std::size_t d = features.extent(1);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    Tensor a({config.data.pairs, d}), b({config.data.pairs, d});
    std::vector<bool> same(config.data.pairs);
    for (std::size_t p = 0; p < config.data.pairs; ++p) {
      const bool want_same = p % 2 == 0;
      std::size_t i = pick(rng), j = pick(rng);
      for (int guard = 0; guard < 10000; ++guard) {
        if ((eval_set.labels[i] == eval_set.labels[j]) == want_same && i != j) break;
        j = pick(rng);
        if (guard == 9999) i = pick(rng);
      }
      for (std::size_t t = 0; t < d; ++t) {
        a.at(p, t) = features.at(i, t);
        b.at(p, t) = features.at(j, t);
      }
      same[p] = eval_set.labels[i] == eval_set.labels[j];
    }
    const auto grid = threshold_grid();
    const auto verification = verify_pairs(a, b, same, grid);
    report.verification_csv = config.output_dir / "verification.csv";
    export_verification(verification, *report.verification_csv);
    log << "verification best accuracy " << format_double(verification.best_accuracy)
        << " at threshold " << format_double(verification.best_threshold) << "\n";
  }

  log << "accuracy " << format_double(report.accuracy) << "\n";
  return report;
}

GradcheckOutcome cmd_gradcheck(const std::vector<int>& margins,
                               const std::vector<std::uint64_t>& seeds, double tolerance,
                               std::ostream& log) {
  constexpr std::size_t kN = 8, kD = 5, kK = 6;
  const double lambdas[3] = {0.0, 1.0, 100.0};

  GradcheckOutcome outcome;
  log << "m      seed    max_rel_err   result\n";
  for (int m : margins) {
    for (std::uint64_t seed : seeds) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> dist(0.0, 1.0);
      std::uniform_int_distribution<int> label_dist(0, kK - 1);

      Tensor X({kN, kD}), W({kK, kD});
      std::vector<int> y(kN);
      // Redraw until no target cosine sits within 1e-4 of a segment
      // boundary, where the analytic derivative is one-sided.
      bool clear = false;
      while (!clear) {
        for (std::size_t i = 0; i < X.size(); ++i) X[i] = dist(rng);
        for (std::size_t i = 0; i < W.size(); ++i) W[i] = dist(rng);
        for (auto& label : y) label = label_dist(rng);
        clear = true;
        for (std::size_t i = 0; i < kN && clear; ++i) {
          double wx = 0.0, ww = 0.0, xx = 0.0;
          for (std::size_t t = 0; t < kD; ++t) {
            const double wv = W.at(static_cast<std::size_t>(y[i]), t);
            wx += wv * X.at(i, t);
            ww += wv * wv;
            xx += X.at(i, t) * X.at(i, t);
          }
          const double c = wx / std::sqrt(ww * xx);
          for (int b = 1; b < m && clear; ++b) {
            const double boundary = std::cos(angular::kPi * b / m);
            if (std::fabs(c - boundary) < 1e-4) clear = false;
          }
        }
      }

      double worst = 0.0;
      for (double lambda : lambdas) {
        const LossResult analytic = lsoftmax_backward(X, y, W, m, lambda);

        std::vector<double> point(X.values());
        point.insert(point.end(), W.values().begin(), W.values().end());
        std::vector<double> grad(analytic.grad_x.values());
        grad.insert(grad.end(), analytic.grad_w.values().begin(),
                    analytic.grad_w.values().end());

        auto f = [&](std::span<const double> params) {
          Tensor Xp({kN, kD},
                    std::vector<double>(params.begin(), params.begin() + kN * kD));
          Tensor Wp({kK, kD}, std::vector<double>(params.begin() + kN * kD, params.end()));
          return lsoftmax_forward(Xp, y, Wp, m, lambda).loss;
        };
        const GradCheckReport report = gradcheck(f, grad, point, 1e-6);
        worst = std::max(worst, report.max_scaled_error);
      }

      GradcheckRow row{m, seed, worst, worst <= tolerance};
      outcome.rows.push_back(row);
      outcome.all_passed = outcome.all_passed && row.passed;
      char line[96];
      std::snprintf(line, sizeof line, "%-6d %-7llu %-13.3e %s\n", m,
                    static_cast<unsigned long long>(seed), worst,
                    row.passed ? "pass" : "FAIL");
      log << line;
    }
  }
  log << (outcome.all_passed ? "all configurations passed\n" : "FAILURES present\n");
  return outcome;
}

Figure1Outcome cmd_figure1(const ExperimentConfig& config,
                           std::optional<std::uint64_t> seed_override, std::ostream& log) {
  if (config.feature_dim != 2) {
    throw ConfigError("figure1 requires feature_dim = 2, config has " +
                      std::to_string(config.feature_dim));
  }
  ExperimentConfig run = config;
  if (seed_override) run.optim.seed = *seed_override;

  const DatasetSplit data = load_dataset(run);
  const NetworkSpec spec = resolve_network(run, input_shape_of(run));
  std::filesystem::create_directories(run.output_dir);

  Figure1Outcome outcome;
  for (int m = 1; m <= 4; ++m) {
    run.m = m;
    run.optim.margin = Margin(m);
    TrainState state = train(spec, data, run.optim);
    const Tensor features = network_forward(spec, state.net_params, data.train.features);
    const auto path = run.output_dir / ("features_m" + std::to_string(m) + ".csv");
    export_features(features, data.train.labels, path);
    outcome.feature_files.push_back(path);

    const AngularStats stats = angular_stats(features, data.train.labels);
    Figure1Row row;
    row.m = m;
    row.min_interclass_angle = stats.min_interclass_angle;
    row.max_spread =
        *std::max_element(stats.per_class_spread.begin(), stats.per_class_spread.end());
    double total = 0.0;
    for (double s : stats.per_class_spread) total += s;
    row.mean_spread = total / static_cast<double>(stats.per_class_spread.size());
    row.margin_proxy = stats.margin_proxy;
    outcome.per_m.push_back(row);
    log << "m=" << m << " margin_proxy " << format_double(row.margin_proxy) << " mean_spread "
        << format_double(row.mean_spread) << "\n";
  }

  outcome.summary_csv = run.output_dir / "summary.csv";
  std::ofstream out(outcome.summary_csv, std::ios::binary);
  if (!out) throw IoError("cannot write " + outcome.summary_csv.string());
  out << "m,min_interclass_angle,max_spread,mean_spread,margin_proxy\n";
  for (const auto& row : outcome.per_m) {
    out << row.m << "," << format_double(row.min_interclass_angle) << ","
        << format_double(row.max_spread) << "," << format_double(row.mean_spread) << ","
        << format_double(row.margin_proxy) << "\n";
  }
  return outcome;
}

}  // namespace lmsx
